#![allow(dead_code)]

use scalespace::{geometric_sigma_ladder, SignalGrid};

pub const WINDOW: f64 = 20.0;
pub const SAMPLES: usize = 1024;
pub const N: usize = 2 * SAMPLES;
pub const LADDER_ROWS: usize = 64;

pub fn dx() -> f64 {
    2.0 * WINDOW / SAMPLES as f64
}

pub fn grid_of(f: impl Fn(f64) -> f64) -> SignalGrid<f64> {
    let dx = dx();
    let x0 = -2.0 * WINDOW;
    let samples = (0..N).map(|j| f(x0 + j as f64 * dx)).collect();
    SignalGrid::new(x0, dx, samples).unwrap()
}

pub fn bump(x: f64, centre: f64, width: f64) -> f64 {
    let u = (x - centre) / width;
    (-0.5 * u * u).exp()
}

pub fn s1(x: f64) -> f64 {
    bump(x, 0.0, 1.0)
}

/// Two unequal bumps; one axis annihilation along `p` at level 0.4.
pub fn s2(x: f64) -> f64 {
    bump(x, -2.5, 0.7) + 0.6 * bump(x, 2.5, 1.5)
}

pub fn s3(x: f64) -> f64 {
    bump(x, -3.0, 0.7) + 0.7 * bump(x, 0.5, 1.0) + 0.45 * bump(x, 3.5, 0.6)
}

/// Symmetric pair of equal bumps.
pub fn pair(x: f64) -> f64 {
    bump(x, -2.0, 0.8) + bump(x, 2.0, 0.8)
}

pub fn ladder() -> Vec<f64> {
    geometric_sigma_ladder(dx(), 2f64.powf(0.125), LADDER_ROWS).unwrap()
}

/// `0, h, 2h, ..., top`.
pub fn uniform_sigma(top: f64, h: f64) -> Vec<f64> {
    let n = (top / h).round() as usize;
    (0..=n).map(|i| i as f64 * h).collect()
}

pub fn params(alpha: f64, beta: f64, p: f64) -> scalespace::KernelParams<f64> {
    scalespace::KernelParams::new(alpha, beta, p).unwrap()
}

/// Field stack at order `k` on the standard ladder.
pub fn stack_of(f: impl Fn(f64) -> f64, params: scalespace::KernelParams<f64>, k: u32) -> scalespace::FieldStack<f64> {
    let sig = grid_of(f);
    let spec = scalespace::forward_transform(&sig);
    let budget = scalespace::SmoothnessBudget::estimate_for(&spec, k + 1, 1);
    scalespace::FieldStack::build(&sig, &params, k, &ladder(), &budget).unwrap()
}

/// Connected components of the level set by union-find over crossing lattice
/// edges, pairing the four crossings of a saddle cell by the sign of the cell mean.
pub fn oracle_components(field: &scalespace::FieldGrid<f64>, level: f64) -> usize {
    let (r, n) = (field.rows(), field.cols());
    let above = |i: usize, j: usize| field.at(i, j) > level;
    let h = |i: usize, j: usize| i * (n - 1) + j;
    let v = |i: usize, j: usize| r * (n - 1) + i * n + j;
    let total = r * (n - 1) + (r - 1) * n;
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(p: &mut [usize], mut a: usize) -> usize {
        while p[a] != a {
            p[a] = p[p[a]];
            a = p[a];
        }
        a
    }
    let mut crossing = vec![false; total];
    for i in 0..r {
        for j in 0..n - 1 {
            crossing[h(i, j)] = above(i, j) != above(i, j + 1);
        }
    }
    for i in 0..r - 1 {
        for j in 0..n {
            crossing[v(i, j)] = above(i, j) != above(i + 1, j);
        }
    }
    for i in 0..r - 1 {
        for j in 0..n - 1 {
            let (bottom, top, left, right) = (h(i, j), h(i + 1, j), v(i, j), v(i, j + 1));
            let edges: Vec<usize> = [bottom, right, top, left].into_iter().filter(|&e| crossing[e]).collect();
            let pairs: Vec<(usize, usize)> = if edges.len() == 4 {
                let mean = (field.at(i, j) + field.at(i, j + 1) + field.at(i + 1, j) + field.at(i + 1, j + 1)) / 4.0;
                if (mean > level) == above(i, j) {
                    vec![(bottom, right), (top, left)]
                } else {
                    vec![(bottom, left), (top, right)]
                }
            } else if edges.len() == 2 {
                vec![(edges[0], edges[1])]
            } else {
                Vec::new()
            };
            for (a, b) in pairs {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut roots = std::collections::BTreeSet::new();
    for (e, _) in crossing.iter().enumerate().filter(|(_, &c)| c) {
        roots.insert(find(&mut parent, e));
    }
    roots.len()
}

/// Sign changes of `row - level` strictly inside `(lo, hi)`.
pub fn row_sign_changes(field: &scalespace::FieldGrid<f64>, i: usize, level: f64, lo: f64, hi: f64) -> usize {
    let row = field.row(i);
    (0..row.len() - 1)
        .filter(|&j| field.x(j) > lo && field.x(j + 1) < hi)
        .filter(|&j| (row[j] > level) != (row[j + 1] > level))
        .count()
}
