//! Level sets `∂x^k Ψ = c` on the `σ ≥ 0` half-plane.
//!
//! Extraction is marching squares with linear interpolation. A saddle cell is
//! resolved by the sign of its centre value (mean of the corners). Crossing
//! edges become graph nodes; each cell links the edges it pairs, so every node
//! has degree two except on the grid boundary and components are simple paths
//! or cycles. The field is even in `σ`, so the mirror half is implicit.

use std::fmt::Write as _;

use serde::Serialize;

use crate::critical::{newton_critical, NewtonSettings};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{Deriv, FieldGrid, FieldStack};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CurveKind {
    Closed,
    Line,
    TruncatedAtWindow,
}

impl CurveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveKind::Closed => "closed",
            CurveKind::Line => "line",
            CurveKind::TruncatedAtWindow => "truncated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelCurve<T> {
    /// Polyline in `(x, σ)`, `σ ≥ 0`.
    pub vertices: Vec<(T, T)>,
    pub kind: CurveKind,
    /// Interpolated `x` where the curve meets `σ = 0`, ascending.
    pub axis_crossings: Vec<T>,
    /// Whether `Ψ - c` increases with `x` at each crossing.
    pub crossing_rising: Vec<bool>,
    /// `+1` if the vertex order follows the tracing field, `-1` if reversed, `0` unset.
    pub orientation: i8,
    /// Significance measure: the smallest field jump across an axis crossing,
    /// or the largest jump along the curve when it never reaches the axis.
    pub peak: T,
}

impl<T: Real> LevelCurve<T> {
    /// `[min, max]` of the axis crossings.
    pub fn axis_interval(&self) -> Option<(T, T)> {
        let first = *self.axis_crossings.first()?;
        let last = *self.axis_crossings.last()?;
        Some((first, last))
    }

    pub fn top_sigma(&self) -> T {
        self.vertices.iter().fold(T::zero(), |m, v| m.max(v.1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourSet<T> {
    /// Level actually traced (perturbed when the requested one was degenerate).
    pub level: T,
    pub requested_level: T,
    pub k: u32,
    pub curves: Vec<LevelCurve<T>>,
    /// `(row, col)` of cells flagged by the genericity check.
    pub degeneracy_flags: Vec<(usize, usize)>,
    /// `max |Ψ|` over the grid.
    pub scale: T,
    /// Grid spacing in `x`.
    pub dx: T,
    /// Central half of the lattice, see [`analysis_window`].
    pub window: (T, T),
}

/// Relative size below which a component is treated as round-off rather than
/// structure: its bracketing values never leave `|Ψ - c| < SIGNIFICANCE·scale`.
pub const SIGNIFICANCE: f64 = 1e-7;
/// Relative flatness that makes a level degenerate on a cell.
pub const DEGENERATE_TOL: f64 = 1e-12;
/// Relative perturbation applied to a degenerate level before the single retry.
pub const LEVEL_PERTURBATION: f64 = 1e-9;

impl<T: Real> ContourSet<T> {
    /// Above the round-off floor and either meeting the axis or reaching into
    /// the analysis window; axis-free components confined to the padding are
    /// wrap-around artifacts of the periodic lattice.
    pub fn is_significant(&self, curve: &LevelCurve<T>) -> bool {
        let (lo, hi) = self.window;
        curve.peak >= T::lit(SIGNIFICANCE) * self.scale
            && (!curve.axis_crossings.is_empty() || curve.vertices.iter().any(|v| v.0 >= lo && v.0 <= hi))
    }

    /// Components that rise above the round-off floor.
    pub fn significant(&self) -> impl Iterator<Item = &LevelCurve<T>> {
        self.curves.iter().filter(move |c| self.is_significant(c))
    }

    /// Significant components that do not touch the window edges.
    pub fn resolved(&self) -> impl Iterator<Item = &LevelCurve<T>> {
        self.significant().filter(|c| c.kind != CurveKind::TruncatedAtWindow)
    }

    /// CSV dump: `component_id,kind,t_index,x,sigma`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("component_id,kind,t_index,x,sigma\n");
        for (id, c) in self.curves.iter().enumerate() {
            for (t, (x, s)) in c.vertices.iter().enumerate() {
                let _ = writeln!(out, "{id},{},{t},{:.16e},{:.16e}", c.kind.as_str(), x.as_f64(), s.as_f64());
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Bottom,
    Top,
    Left,
    Right,
}

struct Lattice<'a, T> {
    field: &'a FieldGrid<T>,
    level: T,
    r: usize,
    n: usize,
}

impl<'a, T: Real> Lattice<'a, T> {
    fn above(&self, i: usize, j: usize) -> bool {
        self.field.at(i, j) - self.level > T::zero()
    }

    fn n_horizontal(&self) -> usize {
        self.r * (self.n - 1)
    }

    fn h(&self, i: usize, j: usize) -> usize {
        i * (self.n - 1) + j
    }

    fn v(&self, i: usize, j: usize) -> usize {
        self.n_horizontal() + i * self.n + j
    }

    fn n_edges(&self) -> usize {
        self.n_horizontal() + (self.r - 1) * self.n
    }

    /// Grid nodes at the two ends of an edge.
    fn ends(&self, e: usize) -> ((usize, usize), (usize, usize)) {
        if e < self.n_horizontal() {
            let (i, j) = (e / (self.n - 1), e % (self.n - 1));
            ((i, j), (i, j + 1))
        } else {
            let f = e - self.n_horizontal();
            let (i, j) = (f / self.n, f % self.n);
            ((i, j), (i + 1, j))
        }
    }

    fn crosses(&self, e: usize) -> bool {
        let (a, b) = self.ends(e);
        self.above(a.0, a.1) != self.above(b.0, b.1)
    }

    fn side(&self, e: usize) -> Option<Side> {
        let ((i0, j0), (i1, j1)) = self.ends(e);
        if i0 == i1 {
            if i0 == 0 {
                return Some(Side::Bottom);
            }
            if i0 == self.r - 1 {
                return Some(Side::Top);
            }
        } else {
            if j0 == 0 && j1 == 0 {
                return Some(Side::Left);
            }
            if j0 == self.n - 1 {
                return Some(Side::Right);
            }
        }
        None
    }

    fn point(&self, e: usize) -> (T, T) {
        let ((i0, j0), (i1, j1)) = self.ends(e);
        let (a, b) = (self.field.at(i0, j0), self.field.at(i1, j1));
        let t = (self.level - a) / (b - a);
        if i0 == i1 {
            (self.field.x(j0) + t * self.field.dx, self.field.sigma_grid[i0])
        } else {
            let (s0, s1) = (self.field.sigma_grid[i0], self.field.sigma_grid[i1]);
            (self.field.x(j0), s0 + t * (s1 - s0))
        }
    }

    /// Field jump across a crossing edge, rescaled to one x step.
    fn jump(&self, e: usize) -> T {
        let ((i0, j0), (i1, j1)) = self.ends(e);
        let d = (self.field.at(i0, j0) - self.field.at(i1, j1)).abs();
        if i0 == i1 {
            d
        } else {
            d * self.field.dx / (self.field.sigma_grid[i1] - self.field.sigma_grid[i0])
        }
    }

    /// Edge pairs joined inside cell `(i, j)`.
    fn cell_links(&self, i: usize, j: usize) -> ([(usize, usize); 2], usize) {
        let bl = self.above(i, j);
        let br = self.above(i, j + 1);
        let tl = self.above(i + 1, j);
        let tr = self.above(i + 1, j + 1);
        let bottom = self.h(i, j);
        let top = self.h(i + 1, j);
        let left = self.v(i, j);
        let right = self.v(i, j + 1);
        let mut crossing = [(bottom, bl != br), (right, br != tr), (top, tl != tr), (left, bl != tl)]
            .into_iter()
            .filter(|e| e.1)
            .map(|e| e.0);
        let none = [(0, 0); 2];
        match (bl == tr, br == tl, bl != br) {
            (true, true, true) => {
                let f = self.field;
                let mean = (f.at(i, j) + f.at(i, j + 1) + f.at(i + 1, j) + f.at(i + 1, j + 1)) * T::lit(0.25);
                let centre_above = mean - self.level > T::zero();
                if centre_above == bl {
                    // bl and tr joined through the centre; br and tl are cut off
                    ([(bottom, right), (top, left)], 2)
                } else {
                    ([(bottom, left), (right, top)], 2)
                }
            }
            _ => match (crossing.next(), crossing.next()) {
                (Some(a), Some(b)) => ([(a, b), (0, 0)], 1),
                _ => (none, 0),
            },
        }
    }
}

fn count_degenerate<T: Real>(field: &FieldGrid<T>, level: T, tol: T) -> usize {
    let (r, n) = (field.rows(), field.cols());
    let flat = |i: usize, j: usize| (field.at(i, j) - level).abs() <= tol;
    let mut count = 0;
    for i in 0..r.saturating_sub(1) {
        for j in 0..n.saturating_sub(1) {
            if flat(i, j) && flat(i, j + 1) && flat(i + 1, j) && flat(i + 1, j + 1) {
                count += 1;
            }
        }
    }
    count
}

/// Traces the level exactly as given; a flat cell is a `DegenerateLevel` error.
pub fn trace_level<T: Real>(field: &FieldGrid<T>, c: T) -> Result<ContourSet<T>> {
    trace_with(field, c, c)
}

/// Traces `c`, retrying once at `c + 1e-9·scale` if `c` is degenerate.
pub fn extract_level_set<T: Real>(field: &FieldGrid<T>, c: T) -> Result<ContourSet<T>> {
    match trace_with(field, c, c) {
        Err(Error::DegenerateLevel { .. }) => {
            let bumped = c + T::lit(LEVEL_PERTURBATION) * field.scale();
            trace_with(field, bumped, c)
        }
        other => other,
    }
}

fn trace_with<T: Real>(field: &FieldGrid<T>, level: T, requested: T) -> Result<ContourSet<T>> {
    if !level.is_finite() {
        return Err(Error::InvalidInput("level must be finite".into()));
    }
    if field.rows() < 2 || field.cols() < 2 {
        return Err(Error::GridTooCoarse("need at least a 2x2 grid".into()));
    }
    let scale = field.scale();
    let flat = count_degenerate(field, level, T::lit(DEGENERATE_TOL) * scale);
    if flat > 0 {
        return Err(Error::DegenerateLevel { level: level.as_f64(), cells: flat });
    }
    let lat = Lattice { field, level, r: field.rows(), n: field.cols() };
    const NONE: usize = usize::MAX;
    let mut links = vec![[NONE, NONE]; lat.n_edges()];
    let mut attach = |a: usize, b: usize| {
        for (x, y) in [(a, b), (b, a)] {
            let slot = &mut links[x];
            if slot[0] == NONE {
                slot[0] = y;
            } else {
                slot[1] = y;
            }
        }
    };
    for i in 0..lat.r - 1 {
        for j in 0..lat.n - 1 {
            let (pairs, count) = lat.cell_links(i, j);
            for &(a, b) in &pairs[..count] {
                attach(a, b);
            }
        }
    }

    let mut visited = vec![false; lat.n_edges()];
    let zero_level = requested == T::zero();
    let mut curves = Vec::new();
    let boundary: Vec<usize> = {
        let mut b: Vec<usize> = (0..lat.n - 1).map(|j| lat.h(0, j)).collect();
        b.extend((0..lat.n - 1).map(|j| lat.h(lat.r - 1, j)));
        b.extend((0..lat.r - 1).map(|i| lat.v(i, 0)));
        b.extend((0..lat.r - 1).map(|i| lat.v(i, lat.n - 1)));
        b
    };
    let walk = |start: usize, visited: &mut Vec<bool>| -> Vec<usize> {
        let mut path = vec![start];
        visited[start] = true;
        let mut prev = NONE;
        let mut cur = start;
        loop {
            let [a, b] = links[cur];
            let next = if a != NONE && a != prev && !visited[a] {
                a
            } else if b != NONE && b != prev && !visited[b] {
                b
            } else {
                break;
            };
            visited[next] = true;
            path.push(next);
            prev = cur;
            cur = next;
        }
        path
    };
    for &e in &boundary {
        if !visited[e] && lat.crosses(e) {
            let path = walk(e, &mut visited);
            curves.push(build_curve(&lat, &path, false, zero_level));
        }
    }
    for e in 0..lat.n_edges() {
        if !visited[e] && lat.crosses(e) {
            let path = walk(e, &mut visited);
            curves.push(build_curve(&lat, &path, true, zero_level));
        }
    }
    Ok(ContourSet {
        level,
        requested_level: requested,
        k: field.k,
        curves,
        degeneracy_flags: Vec::new(),
        scale,
        dx: field.dx,
        window: analysis_window(field),
    })
}

/// Central half of the lattice. Signals are padded to twice their window, so
/// axis crossings in the outer quarters belong to padding or periodic wrap-around.
pub fn analysis_window<T: Real>(field: &FieldGrid<T>) -> (T, T) {
    let quarter = field.cols() / 4;
    (field.x(quarter), field.x(field.cols() - 1 - quarter))
}

/// `zero_level` marks a zero-crossing trace; only then can a component leave
/// through the top of the ladder as a line. At other levels a top exit means
/// the ladder stops short of the curve.
fn build_curve<T: Real>(lat: &Lattice<T>, path: &[usize], cycle: bool, zero_level: bool) -> LevelCurve<T> {
    let vertices: Vec<(T, T)> = path.iter().map(|&e| lat.point(e)).collect();
    let bottom: Vec<usize> = path.iter().copied().filter(|&e| lat.side(e) == Some(Side::Bottom)).collect();
    let peak = if bottom.is_empty() {
        path.iter().fold(T::zero(), |m, &e| m.max(lat.jump(e)))
    } else {
        bottom.iter().fold(T::infinity(), |m, &e| m.min(lat.jump(e)))
    };
    let mut crossings: Vec<(T, bool)> = path
        .iter()
        .filter(|&&e| lat.side(e) == Some(Side::Bottom))
        .map(|&e| {
            let ((_, j), _) = lat.ends(e);
            (lat.point(e).0, !lat.above(0, j))
        })
        .collect();
    crossings.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let field = lat.field;
    let (xl, xr) = (field.x(0) + field.dx, field.x(field.cols() - 1) - field.dx);
    let (wl, wr) = analysis_window(field);
    let touches = vertices.iter().any(|v| v.0 <= xl || v.0 >= xr)
        || path.iter().any(|&e| matches!(lat.side(e), Some(Side::Left) | Some(Side::Right)))
        || crossings.iter().any(|c| c.0 < wl || c.0 > wr);
    let ends: Vec<Option<Side>> = if cycle {
        Vec::new()
    } else {
        vec![lat.side(path[0]), lat.side(*path.last().unwrap())]
    };
    let kind = if touches {
        CurveKind::TruncatedAtWindow
    } else if cycle {
        CurveKind::Closed
    } else {
        match (ends[0], ends[1], path.len() > 1) {
            (Some(Side::Bottom), Some(Side::Bottom), true) => CurveKind::Closed,
            (Some(Side::Bottom), Some(Side::Top), _) | (Some(Side::Top), Some(Side::Bottom), _) if zero_level => {
                CurveKind::Line
            }
            _ => CurveKind::TruncatedAtWindow,
        }
    };
    LevelCurve {
        vertices,
        kind,
        axis_crossings: crossings.iter().map(|c| c.0).collect(),
        crossing_rising: crossings.iter().map(|c| c.1).collect(),
        orientation: 0,
        peak,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport<T> {
    pub kind: CurveKind,
    pub axis_crossings: usize,
    pub mirror_residual: T,
}

/// Checks a component against the closed-arch and line theorems; `c` is the
/// requested level (`0` for zero crossings even when tracing was perturbed).
pub fn classify_component<T: Real>(curve: &LevelCurve<T>, c: T) -> Result<ClassificationReport<T>> {
    let n = curve.axis_crossings.len();
    match curve.kind {
        CurveKind::TruncatedAtWindow => {
            return Err(Error::InvalidInput("component touches the window boundary".into()));
        }
        CurveKind::Closed if n != 2 => {
            return Err(Error::TopologyViolation(format!("closed component meets the axis {n} times, expected 2")));
        }
        CurveKind::Line if c != T::zero() => {
            return Err(Error::TopologyViolation(format!("unbounded component at nonzero level {c}")));
        }
        CurveKind::Line if n != 1 => {
            return Err(Error::TopologyViolation(format!("line component meets the axis {n} times, expected 1")));
        }
        _ => {}
    }
    Ok(ClassificationReport { kind: curve.kind, axis_crossings: n, mirror_residual: mirror_residual(curve) })
}

/// `max_t dist(curve, mirror(curve))` over the full curve (upper half plus its reflection).
fn mirror_residual<T: Real>(curve: &LevelCurve<T>) -> T {
    let full: Vec<(T, T)> = curve.vertices.iter().copied().chain(curve.vertices.iter().map(|&(x, s)| (x, -s))).collect();
    let mut worst = T::zero();
    for &(x, s) in &full {
        let best = full.iter().fold(T::infinity(), |m, &(u, v)| {
            let d = (x - u) * (x - u) + (-s - v) * (-s - v);
            m.min(d)
        });
        worst = worst.max(best.sqrt());
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySample<T> {
    /// Arc length along the oriented full curve.
    pub t: T,
    pub x: T,
    pub sigma: T,
    pub l: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace<T> {
    pub orientation: i8,
    /// Samples over the oriented curve and its mirror image, in traversal order.
    pub samples: Vec<EnergySample<T>>,
    /// Fraction of segments whose tangent disagrees with the majority.
    pub disagreement: T,
}

impl<T: Real> EnergyTrace<T> {
    /// Largest decrease of `L` between consecutive samples with `σ > 0`, and
    /// largest increase between consecutive samples with `σ < 0`.
    pub fn worst_violation(&self) -> T {
        let mut worst = T::zero();
        for w in self.samples.windows(2) {
            let dl = w[1].l - w[0].l;
            if w[0].sigma > T::zero() && w[1].sigma > T::zero() {
                worst = worst.max(-dl);
            } else if w[0].sigma < T::zero() && w[1].sigma < T::zero() {
                worst = worst.max(dl);
            }
        }
        worst
    }
}

/// Moves a vertex onto the exact level curve along the gradient; axis vertices move in `x` only.
fn project<T: Real>(stack: &FieldStack<T>, level: T, p: (T, T), scale: T) -> (T, T) {
    let k = stack.k;
    let (mut x, mut s) = p;
    let on_axis = s == T::zero();
    for _ in 0..8 {
        let v = stack.space.eval_many(x, s, &[Deriv::new(k, 0, 0), Deriv::new(k + 1, 0, 0), Deriv::new(k, 1, 0)]);
        let g = v[0] - level;
        if g.abs() <= T::lit(1e-14) * scale {
            break;
        }
        let (gx, gs) = if on_axis { (v[1], T::zero()) } else { (v[1], v[2]) };
        let n2 = gx * gx + gs * gs;
        if n2 == T::zero() {
            break;
        }
        let (nx, ns) = (x - g * gx / n2, (s - g * gs / n2).max(T::zero()));
        // the correction is sub-cell; anything larger means the gradient is unreliable here
        if (nx - p.0).abs() > stack.level.dx || (ns - p.1).abs() > stack.level.dx.max(p.1 * T::lit(0.1)) {
            break;
        }
        x = nx;
        s = ns;
    }
    (x, s)
}

/// Orients the curve by `V = (-Ψ_{kxσ}, Ψ_{(k+1)x})` and samples
/// `L = Ψ_{(k-1)x} - x Ψ_{kx}` along it and its mirror image.
///
/// `V` is the tangent of the level curve (it is orthogonal to `∇Ψ_{kx}`), and
/// along it `dL/dt = σ Ψ_{(k+1)x}²`, so `L` rises for `σ > 0` and falls for `σ < 0`.
pub fn orient_and_energy<T: Real>(curve: &LevelCurve<T>, stack: &FieldStack<T>, level: T) -> Result<EnergyTrace<T>> {
    let k = stack.k;
    if k == 0 {
        return Err(Error::InvalidInput("energy needs k >= 1".into()));
    }
    if curve.vertices.len() < 2 {
        return Err(Error::InvalidInput("curve has fewer than two vertices".into()));
    }
    let scale = stack.level.scale();
    let pts: Vec<(T, T)> = curve.vertices.iter().map(|&p| project(stack, level, p, scale)).collect();
    let ds = [Deriv::new(k - 1, 0, 0), Deriv::new(k, 0, 0), Deriv::new(k, 1, 0), Deriv::new(k + 1, 0, 0)];
    let vals: Vec<Vec<T>> = pts.iter().map(|&(x, s)| stack.space.eval_many(x, s, &ds)).collect();
    let (mut agree, mut disagree) = (0usize, 0usize);
    for w in 0..pts.len() - 1 {
        let (t0, t1) = (pts[w + 1].0 - pts[w].0, pts[w + 1].1 - pts[w].1);
        let vx = -(vals[w][2] + vals[w + 1][2]);
        let vs = vals[w][3] + vals[w + 1][3];
        let dot = t0 * vx + t1 * vs;
        if dot > T::zero() {
            agree += 1;
        } else if dot < T::zero() {
            disagree += 1;
        }
    }
    let segments = agree + disagree;
    let minority = agree.min(disagree);
    if segments > 0 && minority * 20 > segments {
        return Err(Error::OrientationAmbiguous { disagree: minority, segments });
    }
    let orientation: i8 = if agree >= disagree { 1 } else { -1 };
    let mut upper: Vec<(T, T, T)> = pts
        .iter()
        .zip(&vals)
        .map(|(&(x, s), v)| (x, s, v[0] - x * v[1]))
        .collect();
    if orientation < 0 {
        upper.reverse();
    }
    // After the upper half the traversal continues through the mirror image in
    // reverse order; a line oriented upwards instead arrives from the mirror half.
    let mirrored: Vec<(T, T, T)> = upper.iter().rev().map(|&(x, s, l)| (x, -s, l)).collect();
    let rising_line = curve.kind == CurveKind::Line && upper.first().map(|p| p.1) < upper.last().map(|p| p.1);
    let full: Vec<(T, T, T)> = if rising_line {
        mirrored.into_iter().chain(upper).collect()
    } else {
        upper.into_iter().chain(mirrored).collect()
    };
    let mut t = T::zero();
    let mut samples = Vec::with_capacity(full.len());
    for (i, &(x, s, l)) in full.iter().enumerate() {
        if i > 0 {
            let (px, ps, _) = full[i - 1];
            t = t + ((x - px) * (x - px) + (s - ps) * (s - ps)).sqrt();
        }
        samples.push(EnergySample { t, x, sigma: s, l });
    }
    let disagreement = if segments > 0 { T::of_usize(minority) / T::of_usize(segments) } else { T::zero() };
    Ok(EnergyTrace { orientation, samples, disagreement })
}

/// Orients every resolved component of `set` in place.
pub fn orient_all<T: Real>(set: &mut ContourSet<T>, stack: &FieldStack<T>) -> Result<Vec<Option<EnergyTrace<T>>>> {
    let level = set.level;
    let mut out = Vec::with_capacity(set.curves.len());
    let significant: Vec<bool> = set.curves.iter().map(|c| set.is_significant(c)).collect();
    for (curve, sig) in set.curves.iter_mut().zip(significant) {
        if !sig || curve.kind == CurveKind::TruncatedAtWindow {
            out.push(None);
            continue;
        }
        let trace = orient_and_energy(curve, stack, level)?;
        curve.orientation = trace.orientation;
        out.push(Some(trace));
    }
    Ok(out)
}

/// Relative threshold of the genericity check.
pub const GENERICITY_TOL: f64 = 1e-6;

fn row_scales<T: Real>(field: &FieldGrid<T>) -> Vec<T> {
    (0..field.rows()).map(|i| crate::spectral::max_abs(field.row(i))).collect()
}

fn brackets<T: Real>(v: [T; 4]) -> bool {
    let pos = v.iter().any(|&a| a >= T::zero());
    let neg = v.iter().any(|&a| a <= T::zero());
    pos && neg
}

/// Cells where `Ψ_{kx} - c`, `Ψ_{(k+1)x}` and `Ψ_{kxσ}` vanish together to
/// within `1e-6` of their row scales.
///
/// A cell is flagged if all three quantities are that small at all four
/// corners, or if both derivatives change sign across it and the critical
/// point found there by Newton refinement lies inside the cell on the level.
pub fn genericity_check<T: Real>(stack: &FieldStack<T>, c: T) -> Vec<(usize, usize)> {
    let (g, a, b) = (&stack.level, &stack.next, &stack.level_sigma);
    let tol = T::lit(GENERICITY_TOL);
    let (sg, sa, sb) = (row_scales(g), row_scales(a), row_scales(b));
    let (r, n) = (g.rows(), g.cols());
    let corners = |f: &FieldGrid<T>, i: usize, j: usize, shift: T| {
        [f.at(i, j) - shift, f.at(i, j + 1) - shift, f.at(i + 1, j) - shift, f.at(i + 1, j + 1) - shift]
    };
    let settings = NewtonSettings {
        max_iter: 50,
        tol: T::zero(),
        radius: g.dx * T::lit(4.0),
        det_floor: T::zero(),
    };
    let mut flagged = Vec::new();
    for i in 0..r - 1 {
        let (tg, ta, tb) = (tol * sg[i].max(sg[i + 1]), tol * sa[i].max(sa[i + 1]), tol * sb[i].max(sb[i + 1]));
        for j in 0..n - 1 {
            let (cg, ca, cb) = (corners(g, i, j, c), corners(a, i, j, T::zero()), corners(b, i, j, T::zero()));
            let small = |v: [T; 4], t: T| v.iter().all(|x| x.abs() <= t);
            if small(cg, tg) && small(ca, ta) && small(cb, tb) {
                flagged.push((i, j));
                continue;
            }
            if !(brackets(ca) && brackets(cb)) {
                continue;
            }
            let (s0, s1) = (g.sigma_grid[i], g.sigma_grid[i + 1]);
            let seed = (g.x(j) + g.dx * T::lit(0.5), (s0 + s1) * T::lit(0.5));
            let st = NewtonSettings { tol: T::lit(1e-9) * sa[i].max(sb[i + 1]).max(sa[i + 1]), ..settings };
            let Ok(cp) = newton_critical(&stack.space, stack.k, seed, &st) else { continue };
            let inside = cp.x >= g.x(j) && cp.x < g.x(j + 1) && cp.sigma >= s0 && cp.sigma < s1;
            if inside && (cp.value - c).abs() <= tg {
                flagged.push((i, j));
            }
        }
    }
    flagged
}
