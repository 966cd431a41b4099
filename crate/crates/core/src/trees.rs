//! Witkin trees of nested arches and their canonical encodings.
//!
//! `TW` keeps children in axis order; `TT` is the unordered canonical form of
//! `TW`, obtained by sorting child encodings at every node.

use serde_json::{json, Value};

use crate::contours::{ContourSet, CurveKind, LevelCurve};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Root,
    Arch,
    Line,
}

impl NodeKind {
    fn as_str(&self) -> &'static str {
        match self {
            NodeKind::Root => "root",
            NodeKind::Arch => "arch",
            NodeKind::Line => "line",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode<T> {
    pub kind: NodeKind,
    /// Infinite for lines and the root.
    pub top_sigma: T,
    pub interval: (T, T),
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleTree<T> {
    /// Node 0 is the virtual root.
    pub nodes: Vec<TreeNode<T>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TreeSignature {
    pub canonical_form: String,
    pub ordered: bool,
}

/// Height of an arch from a parabola through its highest vertex and the two
/// polyline neighbours.
fn arch_top<T: Real>(curve: &LevelCurve<T>) -> T {
    let v = &curve.vertices;
    let (i, &(_, top)) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .expect("curve has vertices");
    if i == 0 || i + 1 == v.len() {
        return top;
    }
    let (x0, y0) = v[i - 1];
    let (x1, y1) = v[i];
    let (x2, y2) = v[i + 1];
    let d = (x0 - x1) * (x0 - x2) * (x1 - x2);
    if d.abs() <= T::epsilon() * (x2 - x0).abs().powi(3).max(T::min_positive_value()) {
        return top;
    }
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / d;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / d;
    if a >= T::zero() {
        return top;
    }
    let c = y1 - a * x1 * x1 - b * x1;
    let xv = -b / (T::lit(2.0) * a);
    if xv < x0.min(x2) || xv > x0.max(x2) {
        return top;
    }
    (c - b * b / (T::lit(4.0) * a)).max(top)
}

/// Builds `TW` from the resolved components of `contours`. Truncated components
/// are an error unless `tolerate_truncated` is set, in which case they are skipped.
pub fn build_tree<T: Real>(contours: &ContourSet<T>, tolerate_truncated: bool) -> Result<ScaleTree<T>> {
    let inf = T::infinity();
    let mut nodes = vec![TreeNode { kind: NodeKind::Root, top_sigma: inf, interval: (-inf, inf), children: Vec::new() }];
    let mut items: Vec<TreeNode<T>> = Vec::new();
    for curve in contours.significant() {
        match curve.kind {
            CurveKind::TruncatedAtWindow => {
                if !tolerate_truncated {
                    return Err(Error::InvalidInput("contour set contains truncated components".into()));
                }
            }
            CurveKind::Closed => {
                let Some(interval) = curve.axis_interval().filter(|_| curve.axis_crossings.len() == 2) else {
                    return Err(Error::TopologyViolation(format!(
                        "arch with {} axis crossings",
                        curve.axis_crossings.len()
                    )));
                };
                items.push(TreeNode { kind: NodeKind::Arch, top_sigma: arch_top(curve), interval, children: Vec::new() });
            }
            CurveKind::Line => {
                let x = curve.axis_crossings[0];
                items.push(TreeNode { kind: NodeKind::Line, top_sigma: inf, interval: (x, x), children: Vec::new() });
            }
        }
    }
    // widest first so parents exist before their children; ties by position
    items.sort_by(|a, b| {
        let wa = a.interval.1 - a.interval.0;
        let wb = b.interval.1 - b.interval.0;
        wb.partial_cmp(&wa).unwrap().then(a.interval.0.partial_cmp(&b.interval.0).unwrap())
    });
    let tol = contours_tolerance(contours);
    for item in items {
        let (l, r) = item.interval;
        let mut parent = 0;
        loop {
            let mut descend = None;
            for &c in &nodes[parent].children {
                let node: &TreeNode<T> = &nodes[c];
                let (cl, cr) = node.interval;
                if r < cl - tol || l > cr + tol {
                    continue;
                }
                let contained = l >= cl - tol && r <= cr + tol;
                if contained && node.kind == NodeKind::Arch && item.kind == NodeKind::Arch {
                    descend = Some(c);
                    break;
                }
                return Err(Error::NestingConflict { a0: l.as_f64(), a1: r.as_f64(), b0: cl.as_f64(), b1: cr.as_f64() });
            }
            match descend {
                Some(c) => parent = c,
                None => break,
            }
        }
        let id = nodes.len();
        nodes.push(item);
        nodes[parent].children.push(id);
    }
    for i in 0..nodes.len() {
        let mut kids = std::mem::take(&mut nodes[i].children);
        kids.sort_by(|&a, &b| nodes[a].interval.0.partial_cmp(&nodes[b].interval.0).unwrap());
        nodes[i].children = kids;
    }
    Ok(ScaleTree { nodes })
}

fn contours_tolerance<T: Real>(contours: &ContourSet<T>) -> T {
    // crossings are interpolated within one cell
    contours.dx
}

impl<T: Real> ScaleTree<T> {
    pub fn root(&self) -> &TreeNode<T> {
        &self.nodes[0]
    }

    fn encode(&self, id: usize, ordered: bool) -> String {
        let node = &self.nodes[id];
        let mut kids: Vec<String> = node.children.iter().map(|&c| self.encode(c, ordered)).collect();
        if !ordered {
            kids.sort();
        }
        let inner = kids.concat();
        match node.kind {
            NodeKind::Root => format!("({inner})"),
            NodeKind::Line => "L".to_string(),
            NodeKind::Arch if inner.is_empty() => "A".to_string(),
            NodeKind::Arch => format!("A({inner})"),
        }
    }

    /// Child tops strictly below their parent's.
    pub fn is_monotone(&self) -> bool {
        self.nodes.iter().all(|n| n.children.iter().all(|&c| n.kind == NodeKind::Root || self.nodes[c].top_sigma < n.top_sigma))
    }

    fn node_json(&self, id: usize) -> Value {
        let n = &self.nodes[id];
        let num = |v: T| if v.is_infinite() { json!(if v > T::zero() { "inf" } else { "-inf" }) } else { json!(v.as_f64()) };
        json!({
            "kind": n.kind.as_str(),
            "top_sigma": num(n.top_sigma),
            "interval": [num(n.interval.0), num(n.interval.1)],
            "children": n.children.iter().map(|&c| self.node_json(c)).collect::<Vec<_>>(),
        })
    }

    pub fn to_json(&self) -> Value {
        self.node_json(0)
    }
}

pub fn canonicalize<T: Real>(tree: &ScaleTree<T>, ordered: bool) -> TreeSignature {
    TreeSignature { canonical_form: tree.encode(0, ordered), ordered }
}

pub fn tree_equal(a: &TreeSignature, b: &TreeSignature) -> bool {
    a == b
}
