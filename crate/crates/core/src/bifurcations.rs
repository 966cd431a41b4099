//! Bifurcation scans along `p` or `c`, Reeb-style slice tracking, handle
//! counts and Morse relations.
//!
//! Each slice is summarised by its axis crossings: their order, orientation
//! and grouping into components. Slices with different summaries bracket a
//! topology change, and the bracket is bisected down to `tol_param`. Crossings
//! of neighbouring slices are aligned by dynamic programming: a crossing either
//! moves, or vanishes or appears together with an adjacent opposite crossing.
//! Components sharing matched crossings are linked, and each connected group
//! of links with `m` components below and `n` above carries `m + n - 2`
//! index-one events, or a single birth or death.

use serde::Serialize;
use serde_json::{json, Value};

use crate::contours::{extract_level_set, ContourSet, CurveKind};
use crate::critical::{newton_critical, NewtonSettings};
use crate::error::{Error, Result};
use crate::kernels::KernelParams;
use crate::scalar::Real;
use crate::spectral::{estimate_decay_order, validate_sigma_grid, Deriv, FieldGrid, ScaleSpace, SignalGrid};

use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScanAxis {
    P,
    C,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamScan<T> {
    pub axis: ScanAxis,
    /// x-derivative order of the scanned field.
    pub k: u32,
    /// Level `c` for `p` scans; ignored for `c` scans.
    pub level: T,
    pub lo: T,
    pub hi: T,
    pub n_slices: usize,
    pub tol_param: T,
}

/// Lower bound on `|c|` for `c` scans, relative to `max|Ψ|`.
pub const C_MIN: f64 = 1e-3;
/// Residual bound on the defining derivatives at an accepted event, relative to the field scale.
pub const TOL_CRIT: f64 = 1e-6;

impl<T: Real> ParamScan<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.level.is_finite()) {
            return Err(Error::InvalidConfig("scan range must be finite".into()));
        }
        if self.lo > self.hi {
            return Err(Error::InvalidConfig(format!("empty scan range [{}, {}]", self.lo, self.hi)));
        }
        if self.n_slices < 8 {
            return Err(Error::InvalidConfig("n_slices must be at least 8".into()));
        }
        if !(self.tol_param > T::zero()) {
            return Err(Error::InvalidConfig("tol_param must be positive".into()));
        }
        if self.axis == ScanAxis::P && self.lo < T::zero() {
            return Err(Error::InvalidConfig("p range must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventKind {
    Birth,
    Death,
    Merge,
    Split,
}

impl EventKind {
    pub fn index(&self) -> u8 {
        match self {
            EventKind::Birth => 0,
            EventKind::Merge | EventKind::Split => 1,
            EventKind::Death => 2,
        }
    }

    /// Change of the component count.
    pub fn delta(&self) -> i64 {
        match self {
            EventKind::Birth | EventKind::Split => 1,
            EventKind::Death | EventKind::Merge => -1,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Birth => "birth",
            EventKind::Death => "death",
            EventKind::Merge => "merge",
            EventKind::Split => "split",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationEvent<T> {
    pub param_value: T,
    /// Final bisection bracket.
    pub bracket: (T, T),
    pub kind: EventKind,
    pub index: u8,
    pub location: (T, T),
    /// `Ψ_{(k+1)x}` and `Ψ_{kxσ}` at the located point.
    pub residuals: (T, T),
    /// Slice transition `t → t + 1` carrying the event.
    pub transition: usize,
    /// Critical point located within tolerance.
    pub validated: bool,
    /// Kind and Hessian disagree on the index.
    pub degenerate: bool,
}

impl<T: Real> BifurcationEvent<T> {
    /// Event with kind-derived index, located at `location` and not yet validated.
    pub fn new(kind: EventKind, param_value: T, transition: usize, location: (T, T)) -> Self {
        Self {
            param_value,
            bracket: (param_value, param_value),
            kind,
            index: kind.index(),
            location,
            residuals: (T::nan(), T::nan()),
            transition,
            validated: false,
            degenerate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceComponent<T> {
    pub kind: CurveKind,
    pub crossings: Vec<T>,
    pub rising: Vec<bool>,
    pub top_sigma: T,
    pub vertices: Vec<(T, T)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slice<T> {
    pub param: T,
    pub components: Vec<SliceComponent<T>>,
    /// Significant components reaching the guard band; not tracked.
    pub truncated: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Crossing<T> {
    x: T,
    rising: bool,
    comp: usize,
    line: bool,
}

impl<T: Real> Slice<T> {
    /// Resolved components of a traced level set.
    pub fn from_contours(param: T, set: &ContourSet<T>) -> Self {
        let truncated = set.significant().filter(|c| c.kind == CurveKind::TruncatedAtWindow).count();
        let components = set
            .resolved()
            .map(|c| SliceComponent {
                kind: c.kind,
                crossings: c.axis_crossings.clone(),
                rising: c.crossing_rising.clone(),
                top_sigma: c.top_sigma(),
                vertices: c.vertices.clone(),
            })
            .collect();
        Self { param, components, truncated }
    }

    /// Component count only, for hand-built graphs.
    pub fn bare(param: T, count: usize) -> Self {
        let comp = SliceComponent {
            kind: CurveKind::Closed,
            crossings: Vec::new(),
            rising: Vec::new(),
            top_sigma: T::zero(),
            vertices: Vec::new(),
        };
        Self { param, components: vec![comp; count], truncated: 0 }
    }

    fn crossings(&self) -> Vec<Crossing<T>> {
        let mut out: Vec<Crossing<T>> = self
            .components
            .iter()
            .enumerate()
            .flat_map(|(ci, c)| {
                let line = c.kind == CurveKind::Line;
                c.crossings.iter().zip(&c.rising).map(move |(&x, &rising)| Crossing { x, rising, comp: ci, line })
            })
            .collect();
        out.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
        out
    }

    /// Order-level summary: two slices with equal signatures are topologically alike.
    fn signature(&self) -> (Vec<(usize, bool, CurveKind)>, usize) {
        let mut labels = vec![usize::MAX; self.components.len()];
        let mut next = 0;
        let mut sig = Vec::new();
        for c in self.crossings() {
            if labels[c.comp] == usize::MAX {
                labels[c.comp] = next;
                next += 1;
            }
            sig.push((labels[c.comp], c.rising, self.components[c.comp].kind));
        }
        let loose = self.components.iter().filter(|c| c.crossings.is_empty()).count();
        (sig, loose)
    }
}

/// Link between component `from` of slice `slice` and component `to` of slice `slice + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SliceEdge {
    pub slice: usize,
    pub from: usize,
    pub to: usize,
}

/// A connected group of links across one transition whose shape is not one-to-one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventVertex {
    pub slice: usize,
    pub lower: Vec<usize>,
    pub upper: Vec<usize>,
}

impl EventVertex {
    /// Events implied by the group shape.
    pub fn kinds(&self) -> Vec<EventKind> {
        let (m, n) = (self.lower.len(), self.upper.len());
        match (m, n) {
            (1, 0) => vec![EventKind::Death],
            (0, 1) => vec![EventKind::Birth],
            _ => {
                let mut out = vec![EventKind::Merge; m.saturating_sub(1)];
                out.extend(vec![EventKind::Split; n.saturating_sub(1)]);
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceGraph<T> {
    pub slices: Vec<Slice<T>>,
    pub edges: Vec<SliceEdge>,
    pub event_vertices: Vec<EventVertex>,
    /// Lines entering (`0 → 1`) or leaving (`1 → 0`) through the far field;
    /// boundary caps rather than critical points.
    pub boundary_vertices: Vec<EventVertex>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// Connected groups of one transition as `(lower, upper)` component lists.
fn transition_groups(lower: usize, upper: usize, edges: &[(usize, usize)]) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut uf = UnionFind::new(lower + upper);
    for &(a, b) in edges {
        uf.union(a, lower + b);
    }
    let mut groups: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
    for v in 0..lower + upper {
        let r = uf.find(v);
        let g = match groups.iter().position(|g| g.0 == r) {
            Some(i) => i,
            None => {
                groups.push((r, Vec::new(), Vec::new()));
                groups.len() - 1
            }
        };
        if v < lower {
            groups[g].1.push(v);
        } else {
            groups[g].2.push(v - lower);
        }
    }
    groups.into_iter().map(|g| (g.1, g.2)).collect()
}

impl<T: Real> SliceGraph<T> {
    /// Graph from slices and links; event vertices are derived from the link groups.
    pub fn new(slices: Vec<Slice<T>>, edges: Vec<SliceEdge>) -> Self {
        let mut event_vertices = Vec::new();
        let mut boundary_vertices = Vec::new();
        for t in 0..slices.len().saturating_sub(1) {
            let local: Vec<(usize, usize)> = edges.iter().filter(|e| e.slice == t).map(|e| (e.from, e.to)).collect();
            for (lower, upper) in transition_groups(slices[t].components.len(), slices[t + 1].components.len(), &local) {
                let lone_line = match (lower.as_slice(), upper.as_slice()) {
                    ([a], []) => slices[t].components[*a].kind == CurveKind::Line,
                    ([], [b]) => slices[t + 1].components[*b].kind == CurveKind::Line,
                    _ => false,
                };
                if lone_line {
                    boundary_vertices.push(EventVertex { slice: t, lower, upper });
                } else if !(lower.len() == 1 && upper.len() == 1) {
                    event_vertices.push(EventVertex { slice: t, lower, upper });
                }
            }
        }
        Self { slices, edges, event_vertices, boundary_vertices }
    }

    pub fn component_counts(&self) -> Vec<usize> {
        self.slices.iter().map(|s| s.components.len()).collect()
    }
}

/// Outermost crossing of a line, which may enter or leave through the far field.
fn far_line<T>(c: &[Crossing<T>], i: usize) -> bool {
    c[i].line && (i == 0 || i + 1 == c.len())
}

/// Matched crossing pairs `(i, j)` of two sorted crossing lists, or `None`
/// when no alignment by moves, adjacent pair creation/annihilation and far-field
/// line entry exists.
fn align<T: Real>(a: &[Crossing<T>], b: &[Crossing<T>], penalty: T) -> Option<Vec<(usize, usize)>> {
    let (na, nb) = (a.len(), b.len());
    let inf = T::infinity();
    let mut cost = vec![vec![inf; nb + 1]; na + 1];
    cost[na][nb] = T::zero();
    for i in (0..=na).rev() {
        for j in (0..=nb).rev() {
            if i == na && j == nb {
                continue;
            }
            let mut best = inf;
            if i < na && j < nb && a[i].rising == b[j].rising {
                best = best.min(cost[i + 1][j + 1] + (a[i].x - b[j].x).abs());
            }
            if i + 1 < na && a[i].rising != a[i + 1].rising {
                best = best.min(cost[i + 2][j] + penalty);
            }
            if j + 1 < nb && b[j].rising != b[j + 1].rising {
                best = best.min(cost[i][j + 2] + penalty);
            }
            if i < na && far_line(a, i) {
                best = best.min(cost[i + 1][j] + penalty);
            }
            if j < nb && far_line(b, j) {
                best = best.min(cost[i][j + 1] + penalty);
            }
            cost[i][j] = best;
        }
    }
    if !cost[0][0].is_finite() {
        return None;
    }
    let (mut i, mut j) = (0, 0);
    let mut pairs = Vec::new();
    while i < na || j < nb {
        let here = cost[i][j];
        if i < na && j < nb && a[i].rising == b[j].rising && cost[i + 1][j + 1] + (a[i].x - b[j].x).abs() == here {
            pairs.push((i, j));
            i += 1;
            j += 1;
        } else if i + 1 < na && a[i].rising != a[i + 1].rising && cost[i + 2][j] + penalty == here {
            i += 2;
        } else if j + 1 < nb && b[j].rising != b[j + 1].rising && cost[i][j + 2] + penalty == here {
            j += 2;
        } else if i < na && far_line(a, i) && cost[i + 1][j] + penalty == here {
            i += 1;
        } else {
            j += 1;
        }
    }
    Some(pairs)
}

/// Component links between two slices, or `None` if their crossings cannot be aligned.
fn link_slices<T: Real>(a: &Slice<T>, b: &Slice<T>, penalty: T) -> Option<Vec<(usize, usize)>> {
    let (ca, cb) = (a.crossings(), b.crossings());
    let pairs = align(&ca, &cb, penalty)?;
    let mut links: Vec<(usize, usize)> = pairs.iter().map(|&(i, j)| (ca[i].comp, cb[j].comp)).collect();
    links.sort_unstable();
    links.dedup();
    Some(links)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocatedPoint<T> {
    pub x: T,
    pub sigma: T,
    pub residuals: (T, T),
    /// `Ψ_{kx}` at the point.
    pub value: T,
    pub hessian: [[T; 2]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocateConfig<T> {
    /// Field scale used to make tolerances relative.
    pub scale: T,
    /// Largest allowed distance from the seed.
    pub radius: T,
    /// Allowed `|Ψ_{kx} - c|` at the point.
    pub level_tol: T,
}

/// Refines a critical point of `Ψ_{kx}` (`Ψ_{(k+1)x} = Ψ_{kxσ} = 0`) near `seed`
/// and checks that it lies on the level `c`.
pub fn locate_critical_point<T: Real>(
    space: &ScaleSpace<T>,
    k: u32,
    c: T,
    seed: (T, T),
    cfg: &LocateConfig<T>,
) -> Result<LocatedPoint<T>> {
    let settings = NewtonSettings {
        max_iter: 50,
        tol: T::lit(1e-9) * cfg.scale,
        radius: cfg.radius,
        det_floor: T::lit(1e-14) * cfg.scale * cfg.scale,
    };
    let cp = newton_critical(space, k, seed, &settings)?;
    let worst = cp.residuals.0.abs().max(cp.residuals.1.abs());
    if worst >= T::lit(TOL_CRIT) * cfg.scale || (cp.value - c).abs() > cfg.level_tol {
        return Err(Error::NoConvergence { iterations: settings.max_iter, residual: worst.as_f64() });
    }
    Ok(LocatedPoint { x: cp.x, sigma: cp.sigma, residuals: cp.residuals, value: cp.value, hessian: cp.hessian })
}

/// Morse index from the event kind, cross-checked against the Hessian of the
/// local height function `param = h(x, σ)` on the contour surface, which is
/// `-Hess(Ψ_{kx}) / ∂_param Ψ_{kx}`. `g_param` is that parameter derivative
/// (`-1` for `c` scans).
pub fn classify_index<T: Real>(kind: EventKind, hessian: [[T; 2]; 2], g_param: T) -> Result<u8> {
    let expected = kind.index();
    let h = hessian;
    let norm = h[0][0].abs().max(h[0][1].abs()).max(h[1][1].abs());
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let resolvable = norm > T::zero() && det.abs() > T::lit(1e-8) * norm * norm && g_param.abs() > T::zero() && g_param.is_finite();
    if !resolvable {
        return Ok(expected);
    }
    // eigenvalue signs of -H / g: det keeps its sign, trace flips with g
    let trace = -(h[0][0] + h[1][1]) / g_param;
    let hessian_index = if det < T::zero() {
        1
    } else if trace > T::zero() {
        0
    } else {
        2
    };
    if hessian_index != expected {
        return Err(Error::IndexMismatch { expected, hessian: hessian_index });
    }
    Ok(expected)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult<T> {
    pub graph: SliceGraph<T>,
    pub events: Vec<BifurcationEvent<T>>,
}

struct Scanner<'a, T: Real> {
    space: ScaleSpace<T>,
    scan: &'a ParamScan<T>,
    sigma_grid: &'a [T],
    fixed_field: Option<FieldGrid<T>>,
}

impl<'a, T: Real> Scanner<'a, T> {
    fn space_at(&self, v: T) -> Result<ScaleSpace<T>> {
        match self.scan.axis {
            ScanAxis::P => self.space.with_params(self.space.params.with_p(v)?),
            ScanAxis::C => Ok(self.space.clone()),
        }
    }

    fn level_at(&self, v: T) -> T {
        match self.scan.axis {
            ScanAxis::P => self.scan.level,
            ScanAxis::C => v,
        }
    }

    fn slice(&self, v: T) -> Result<Slice<T>> {
        let set = match &self.fixed_field {
            Some(f) => extract_level_set(f, self.level_at(v))?,
            None => {
                let field = self.space_at(v)?.synth(self.scan.k, 0, self.sigma_grid)?;
                extract_level_set(&field, self.level_at(v))?
            }
        };
        Ok(Slice::from_contours(v, &set))
    }

    fn refine(&self, lo: &Slice<T>, hi: &Slice<T>, out: &mut Vec<Slice<T>>) -> Result<()> {
        if hi.param - lo.param <= self.scan.tol_param {
            return Ok(());
        }
        let mid = self.slice((lo.param + hi.param) * T::lit(0.5))?;
        let (sl, sm, sh) = (lo.signature(), mid.signature(), hi.signature());
        if sm != sl {
            self.refine(lo, &mid, out)?;
        }
        if sm != sh {
            self.refine(&mid, hi, out)?;
        }
        out.push(mid);
        Ok(())
    }
}

fn window_penalty<T: Real>(space: &ScaleSpace<T>) -> T {
    space.dx() * T::of_usize(space.n()) * T::lit(0.1)
}

fn closest_approach<T: Real>(a: &[(T, T)], b: &[(T, T)]) -> Option<(T, T)> {
    let mut best: Option<(T, (T, T))> = None;
    for &(x0, s0) in a {
        for &(x1, s1) in b {
            let d = (x0 - x1) * (x0 - x1) + (s0 - s1) * (s0 - s1);
            if best.is_none_or(|b| d < b.0) {
                best = Some((d, ((x0 + x1) * T::lit(0.5), (s0 + s1) * T::lit(0.5))));
            }
        }
    }
    best.map(|b| b.1)
}

fn axis_seed<T: Real>(c: &SliceComponent<T>) -> (T, T) {
    if c.crossings.is_empty() {
        let n = T::of_usize(c.vertices.len().max(1));
        let x = c.vertices.iter().fold(T::zero(), |s, v| s + v.0) / n;
        return (x, T::zero());
    }
    let n = T::of_usize(c.crossings.len());
    (c.crossings.iter().fold(T::zero(), |s, &x| s + x) / n, T::zero())
}

fn pair_seed<T: Real>(slice: &Slice<T>, comps: &[usize]) -> (T, T) {
    let mut best: Option<(T, (T, T))> = None;
    for (i, &a) in comps.iter().enumerate() {
        for &b in &comps[i + 1..] {
            let (va, vb) = (&slice.components[a].vertices, &slice.components[b].vertices);
            if let Some(p) = closest_approach(va, vb) {
                let d = va.iter().chain(vb).fold(T::infinity(), |m, v| m.min((v.0 - p.0).abs() + (v.1 - p.1).abs()));
                if best.is_none_or(|b| d < b.0) {
                    best = Some((d, p));
                }
            }
        }
    }
    best.map(|b| b.1).unwrap_or_else(|| axis_seed(&slice.components[comps[0]]))
}

/// Runs a parameter scan: slices, bisection refinement, tracking and event validation.
pub fn scan<T: Real>(
    sig: &SignalGrid<T>,
    base: &KernelParams<T>,
    scan: &ParamScan<T>,
    sigma_grid: &[T],
) -> Result<ScanResult<T>> {
    scan.validate()?;
    validate_sigma_grid(sigma_grid)?;
    if scan.axis == ScanAxis::P && base.alpha != T::zero() && scan.lo == T::zero() {
        return Err(Error::InvalidConfig("odd-weighted kernels need p > 0 over the whole range".into()));
    }
    let start_params = match scan.axis {
        ScanAxis::P => base.with_p(scan.lo)?,
        ScanAxis::C => {
            base.validate()?;
            *base
        }
    };
    let space = ScaleSpace::new(sig, start_params)?;
    let m = estimate_decay_order(&space.spectrum);
    let p_top = match scan.axis {
        ScanAxis::P => scan.hi,
        ScanAxis::C => base.p,
    };
    let required = p_top + T::one() + T::from_u32(scan.k).unwrap();
    if !(m > required) {
        return Err(Error::BudgetExceeded { m: m.as_f64(), required: required.as_f64() });
    }
    let fixed_field = match scan.axis {
        ScanAxis::C => {
            let field = space.synth(scan.k, 0, sigma_grid)?;
            let c_min = T::lit(C_MIN) * field.scale();
            if scan.lo.signum() != scan.hi.signum() || scan.lo.abs().min(scan.hi.abs()) < c_min {
                return Err(Error::InvalidConfig(format!(
                    "c range [{}, {}] must stay on one side of 0 with |c| >= {c_min:e}",
                    scan.lo, scan.hi
                )));
            }
            Some(field)
        }
        ScanAxis::P => None,
    };
    let scanner = Scanner { space, scan, sigma_grid, fixed_field };

    let params: Vec<T> = if scan.lo == scan.hi {
        vec![scan.lo]
    } else {
        let steps = T::of_usize(scan.n_slices - 1);
        (0..scan.n_slices).map(|i| scan.lo + (scan.hi - scan.lo) * T::of_usize(i) / steps).collect()
    };
    let coarse: Vec<Slice<T>> = params.par_iter().map(|&v| scanner.slice(v)).collect::<Result<_>>()?;
    let mut slices = coarse.clone();
    for w in coarse.windows(2) {
        if w[0].signature() != w[1].signature() {
            scanner.refine(&w[0], &w[1], &mut slices)?;
        }
    }
    slices.sort_by(|a, b| a.param.partial_cmp(&b.param).unwrap());

    let penalty = window_penalty(&scanner.space);
    let mut edges = Vec::new();
    for t in 0..slices.len().saturating_sub(1) {
        let Some(links) = link_slices(&slices[t], &slices[t + 1], penalty) else {
            return Err(Error::UnresolvedEvent {
                lo: slices[t].param.as_f64(),
                hi: slices[t + 1].param.as_f64(),
                suggested: scan.n_slices * 2,
            });
        };
        edges.extend(links.into_iter().map(|(from, to)| SliceEdge { slice: t, from, to }));
    }
    let graph = SliceGraph::new(slices, edges);

    let mut events = Vec::new();
    for v in &graph.event_vertices {
        let (lo, hi) = (&graph.slices[v.slice], &graph.slices[v.slice + 1]);
        if v.lower.len() + v.upper.len() > 4 {
            return Err(Error::UnresolvedEvent { lo: lo.param.as_f64(), hi: hi.param.as_f64(), suggested: scan.n_slices * 2 });
        }
        let mid = (lo.param + hi.param) * T::lit(0.5);
        for kind in v.kinds() {
            let seed = match kind {
                EventKind::Death => axis_seed(&lo.components[v.lower[0]]),
                EventKind::Birth => axis_seed(&hi.components[v.upper[0]]),
                EventKind::Merge => pair_seed(lo, &v.lower),
                EventKind::Split => pair_seed(hi, &v.upper),
            };
            let mut ev = BifurcationEvent::new(kind, mid, v.slice, seed);
            ev.bracket = (lo.param, hi.param);
            validate_event(&scanner, &mut ev)?;
            events.push(ev);
        }
    }
    Ok(ScanResult { graph, events })
}

fn validate_event<T: Real>(scanner: &Scanner<T>, ev: &mut BifurcationEvent<T>) -> Result<()> {
    let space = scanner.space_at(ev.param_value)?;
    let k = scanner.scan.k;
    let level = scanner.level_at(ev.param_value);
    let row0 = space.row(T::zero(), Deriv::new(k, 0, 0));
    let scale = crate::spectral::max_abs(&row0);
    let g_param = match scanner.scan.axis {
        ScanAxis::P => space.eval(ev.location.0, ev.location.1, Deriv::new(k, 0, 1)),
        ScanAxis::C => -T::one(),
    };
    let width = ev.bracket.1 - ev.bracket.0;
    let cfg = LocateConfig {
        scale,
        radius: space.dx() * T::lit(12.0) + ev.location.1 * T::lit(0.5),
        level_tol: T::lit(1e-3) * scale + T::lit(2.0) * g_param.abs() * width,
    };
    match locate_critical_point(&space, k, level, ev.location, &cfg) {
        Ok(pt) => {
            ev.location = (pt.x, pt.sigma);
            ev.residuals = pt.residuals;
            ev.validated = true;
            let g_param = match scanner.scan.axis {
                ScanAxis::P => space.eval(pt.x, pt.sigma, Deriv::new(k, 0, 1)),
                ScanAxis::C => -T::one(),
            };
            match classify_index(ev.kind, pt.hessian, g_param) {
                Ok(i) => ev.index = i,
                Err(Error::IndexMismatch { .. }) => ev.degenerate = true,
                Err(e) => return Err(e),
            }
        }
        Err(Error::NoConvergence { .. }) => ev.validated = false,
        Err(e) => return Err(e),
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionComponent {
    pub id: usize,
    pub mu: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionEntry<T> {
    pub lo: T,
    pub hi: T,
    pub components: Vec<RegionComponent>,
    /// Components alive inside the region.
    pub alive: usize,
    /// Entries withheld because an adjacent event is degenerate.
    pub aborted: bool,
}

/// Counts over the whole scan used by the Morse relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GraphSummary {
    /// Components at the upper end of the range, plus far-field exits.
    pub k: usize,
    /// Components at the lower end of the range, plus far-field entries.
    pub l: usize,
    /// Components of the swept surface.
    pub r1: usize,
    /// Components touching neither end.
    pub r2: usize,
    /// Components not touching the lower end.
    pub d0: usize,
    /// Components not touching the upper end.
    pub d2: usize,
    pub mu_total: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantTable<T> {
    pub boundaries: Vec<T>,
    pub regions: Vec<RegionEntry<T>>,
    pub summary: GraphSummary,
}

/// Lifetime graph restricted to slices `0..=last`: one node per component per
/// slice, one junction per event vertex with three or more members.
struct Lifetime {
    nodes: usize,
    edges: Vec<(usize, usize)>,
    /// Node range of each slice.
    offsets: Vec<usize>,
}

fn lifetime<T: Real>(graph: &SliceGraph<T>, last: usize) -> Lifetime {
    let mut offsets = Vec::with_capacity(last + 2);
    let mut total = 0;
    for s in &graph.slices[..=last] {
        offsets.push(total);
        total += s.components.len();
    }
    offsets.push(total);
    let mut nodes = total;
    let mut edges = Vec::new();
    for t in 0..last {
        let local: Vec<(usize, usize)> =
            graph.edges.iter().filter(|e| e.slice == t).map(|e| (e.from, e.to)).collect();
        for (lower, upper) in transition_groups(graph.slices[t].components.len(), graph.slices[t + 1].components.len(), &local) {
            if lower.len() == 1 && upper.len() == 1 {
                edges.push((offsets[t] + lower[0], offsets[t + 1] + upper[0]));
            } else if lower.len() + upper.len() >= 3 {
                let j = nodes;
                nodes += 1;
                edges.extend(lower.iter().map(|&a| (j, offsets[t] + a)));
                edges.extend(upper.iter().map(|&b| (j, offsets[t + 1] + b)));
            }
        }
    }
    Lifetime { nodes, edges, offsets }
}

struct ComponentStats {
    id: usize,
    mu: u32,
    touches_first: bool,
    touches_last: bool,
}

/// Per-component cycle rank `E - V + 1` of the restricted lifetime graph.
fn component_stats<T: Real>(graph: &SliceGraph<T>, last: usize) -> Vec<ComponentStats> {
    let lt = lifetime(graph, last);
    let mut uf = UnionFind::new(lt.nodes);
    for &(a, b) in &lt.edges {
        uf.union(a, b);
    }
    let roots: Vec<usize> = (0..lt.nodes).map(|v| uf.find(v)).collect();
    let mut counts = std::collections::BTreeMap::<usize, (usize, usize)>::new();
    for &r in &roots {
        counts.entry(r).or_insert((0, 0)).0 += 1;
    }
    for &(a, _) in &lt.edges {
        counts.get_mut(&roots[a]).unwrap().1 += 1;
    }
    // far-field entries and exits are capped like the ends of the range
    let mut starts: Vec<usize> = (0..lt.offsets[1]).collect();
    let mut ends: Vec<usize> = (lt.offsets[last]..lt.offsets[last + 1]).collect();
    for b in graph.boundary_vertices.iter().filter(|b| b.slice < last) {
        match (b.lower.first(), b.upper.first()) {
            (None, Some(&u)) => starts.push(lt.offsets[b.slice + 1] + u),
            (Some(&l), None) => ends.push(lt.offsets[b.slice] + l),
            _ => {}
        }
    }
    counts
        .into_iter()
        .map(|(r, (v, e))| ComponentStats {
            id: r,
            mu: (e + 1).saturating_sub(v) as u32,
            touches_first: starts.iter().any(|&x| roots[x] == r),
            touches_last: ends.iter().any(|&x| roots[x] == r),
        })
        .collect()
}

fn euler_counts<T: Real>(graph: &SliceGraph<T>, events: &[BifurcationEvent<T>], last: usize) -> (i64, i64, i64) {
    let (mut c0, mut c1, mut c2) = (graph.slices[0].components.len() as i64, 0i64, graph.slices[last].components.len() as i64);
    for b in graph.boundary_vertices.iter().filter(|b| b.slice < last) {
        if b.upper.is_empty() {
            c2 += 1;
        } else {
            c0 += 1;
        }
    }
    for e in events.iter().filter(|e| e.transition < last) {
        match e.index {
            0 => c0 += 1,
            1 => c1 += 1,
            _ => c2 += 1,
        }
    }
    (c0, c1, c2)
}

/// Handle counts per inter-bifurcation region with the capped Euler balance
/// `c0 - c1 + c2 = Σ (2 - 2μ)` checked at two samples per region.
pub fn invariant_table<T: Real>(graph: &SliceGraph<T>, events: &[BifurcationEvent<T>]) -> Result<InvariantTable<T>> {
    if graph.slices.is_empty() {
        return Err(Error::InvalidInput("slice graph is empty".into()));
    }
    let mut boundaries: Vec<T> = events.iter().map(|e| e.param_value).collect();
    boundaries.sort_by(|a, b| a.partial_cmp(b).unwrap());
    boundaries.dedup();
    let first = graph.slices[0].param;
    let last_param = graph.slices.last().unwrap().param;
    let mut edges_of_regions = vec![first];
    edges_of_regions.extend(boundaries.iter().copied());
    edges_of_regions.push(last_param);
    let mut regions = Vec::new();
    for w in edges_of_regions.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let inside: Vec<usize> = (0..graph.slices.len())
            .filter(|&s| {
                let p = graph.slices[s].param;
                let above = if lo == first { p >= lo } else { p > lo };
                let below = if hi == last_param { p <= hi } else { p < hi };
                above && below
            })
            .collect();
        let aborted = events.iter().any(|e| e.degenerate && (e.param_value == lo || e.param_value == hi));
        let Some(&s_last) = inside.last() else {
            regions.push(RegionEntry { lo, hi, components: Vec::new(), alive: 0, aborted });
            continue;
        };
        let samples = [inside[0], s_last];
        let mut tables = Vec::new();
        for &s in &samples {
            let stats = component_stats(graph, s);
            if !aborted {
                let (c0, c1, c2) = euler_counts(graph, events, s);
                let rhs: i64 = stats.iter().map(|c| 2 - 2 * c.mu as i64).sum();
                if c0 - c1 + c2 != rhs {
                    return Err(Error::InconsistentEuler { param: graph.slices[s].param.as_f64(), lhs: c0 - c1 + c2, rhs });
                }
            }
            tables.push(stats.iter().map(|c| RegionComponent { id: c.id, mu: c.mu }).collect::<Vec<_>>());
        }
        if !aborted {
            for c in &tables[0] {
                if let Some(later) = tables[1].iter().find(|d| d.id == c.id).filter(|d| d.mu != c.mu) {
                    return Err(Error::InconsistentEuler {
                        param: graph.slices[s_last].param.as_f64(),
                        lhs: c.mu as i64,
                        rhs: later.mu as i64,
                    });
                }
            }
        }
        let components = if aborted { Vec::new() } else { tables.pop().unwrap() };
        regions.push(RegionEntry { lo, hi, components, alive: graph.slices[s_last].components.len(), aborted });
    }
    let last = graph.slices.len() - 1;
    let stats = component_stats(graph, last);
    let entries = graph.boundary_vertices.iter().filter(|b| b.lower.is_empty()).count();
    let exits = graph.boundary_vertices.len() - entries;
    let summary = GraphSummary {
        k: graph.slices[last].components.len() + exits,
        l: graph.slices[0].components.len() + entries,
        r1: stats.len(),
        r2: stats.iter().filter(|c| !c.touches_first && !c.touches_last).count(),
        d0: stats.iter().filter(|c| !c.touches_first).count(),
        d2: stats.iter().filter(|c| !c.touches_last).count(),
        mu_total: stats.iter().map(|c| c.mu).sum(),
    };
    Ok(InvariantTable { boundaries, regions, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorseCheck {
    pub relation: String,
    pub lhs: i64,
    pub rhs: i64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorseReport {
    pub c0: i64,
    pub c1: i64,
    pub c2: i64,
    pub k: i64,
    pub l: i64,
    pub r1: i64,
    pub r2: i64,
    pub d0: i64,
    pub d2: i64,
    /// Betti numbers of the capped closed surface.
    pub beta: [i64; 3],
    /// `β1` relative to the boundary.
    pub beta1_relative: i64,
    pub checks: Vec<MorseCheck>,
    pub pass: bool,
}

/// Morse inequalities and the Euler equality for the swept contour surface.
pub fn morse_report<T: Real>(table: &InvariantTable<T>, events: &[BifurcationEvent<T>]) -> MorseReport {
    let count = |i: u8| events.iter().filter(|e| e.index == i).count() as i64;
    let (c0, c1, c2) = (count(0), count(1), count(2));
    let s = table.summary;
    let (k, l, r1, r2, d0, d2) = (s.k as i64, s.l as i64, s.r1 as i64, s.r2 as i64, s.d0 as i64, s.d2 as i64);
    let beta = [r1, 2 * s.mu_total as i64, r1];
    let beta1_relative = beta[1] + k + l - r1 + r2;
    let ge = |relation: &str, lhs: i64, rhs: i64| MorseCheck { relation: relation.into(), lhs, rhs, holds: lhs >= rhs };
    let checks = vec![
        ge("c2 >= beta2 - k", c2, beta[2] - k),
        ge("c1 >= beta1", c1, beta[1]),
        ge("c0 >= beta0 - l", c0, beta[0] - l),
        MorseCheck {
            relation: "c2 - c1 + c0 == beta2 - beta1 + beta0 - l - k".into(),
            lhs: c2 - c1 + c0,
            rhs: beta[2] - beta[1] + beta[0] - l - k,
            holds: c2 - c1 + c0 == beta[2] - beta[1] + beta[0] - l - k,
        },
        ge("c2 >= d2", c2, d2),
        ge("c1 >= beta1_rel - k - l + r1 - r2", c1, beta1_relative - k - l + r1 - r2),
        ge("c0 >= d0", c0, d0),
    ];
    let pass = checks.iter().all(|c| c.holds);
    MorseReport { c0, c1, c2, k, l, r1, r2, d0, d2, beta, beta1_relative, checks, pass }
}

/// Scan report: events, region table and Morse summary.
pub fn scan_report_json<T: Real>(
    scan: &ParamScan<T>,
    result: &ScanResult<T>,
    table: &InvariantTable<T>,
    morse: &MorseReport,
) -> Value {
    let events: Vec<Value> = result
        .events
        .iter()
        .map(|e| {
            json!({
                "param": e.param_value.as_f64(),
                "kind": e.kind.as_str(),
                "index": e.index,
                "x": e.location.0.as_f64(),
                "sigma": e.location.1.as_f64(),
                "residuals": [e.residuals.0.as_f64(), e.residuals.1.as_f64()],
                "validated": e.validated,
                "degenerate": e.degenerate,
            })
        })
        .collect();
    let regions: Vec<Value> = table
        .regions
        .iter()
        .map(|r| {
            json!({
                "lo": r.lo.as_f64(),
                "hi": r.hi.as_f64(),
                "alive": r.alive,
                "aborted": r.aborted,
                "components": r.components.iter().map(|c| json!({"id": c.id, "mu": c.mu})).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "axis": match scan.axis { ScanAxis::P => "p", ScanAxis::C => "c" },
        "range": [scan.lo.as_f64(), scan.hi.as_f64()],
        "slices": result.graph.slices.len(),
        "events": events,
        "regions": regions,
        "morse": {
            "c0": morse.c0,
            "c1": morse.c1,
            "c2": morse.c2,
            "k": morse.k,
            "l": morse.l,
            "r1": morse.r1,
            "r2": morse.r2,
            "d0": morse.d0,
            "d2": morse.d2,
            "beta": morse.beta,
            "beta1_relative": morse.beta1_relative,
            "checks": morse.checks.iter().map(|c| json!({"relation": c.relation, "lhs": c.lhs, "rhs": c.rhs, "holds": c.holds})).collect::<Vec<_>>(),
            "pass": morse.pass,
        },
    })
}
