//! Independent reference implementations shared by the integration tests.
//!
//! Nothing here calls into the crate's linear algebra: singular values come
//! from closed-form eigenvalues of 2×2 and 3×3 Gram matrices, or from
//! Householder tridiagonalization plus Sturm-sequence bisection.

#![allow(dead_code)]

use oversmooth::linalg::DenseMatrix;
use oversmooth::rng::Xoshiro256pp;

pub fn random_matrix(rows: usize, cols: usize, rng: &mut Xoshiro256pp) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.uniform(-1.0, 1.0))
}

/// Gram matrix of the smaller side, as nested vectors.
fn small_gram(x: &DenseMatrix) -> Vec<Vec<f64>> {
    let (r, c) = x.shape();
    let k = r.min(c);
    let at = |i: usize, j: usize| if r <= c { x[(i, j)] } else { x[(j, i)] };
    let long = r.max(c);
    (0..k)
        .map(|i| (0..k).map(|j| (0..long).map(|t| at(i, t) * at(j, t)).sum()).collect())
        .collect()
}

/// Eigenvalues of a symmetric 2×2 matrix from the quadratic formula.
pub fn eig2(g: &[Vec<f64>]) -> Vec<f64> {
    let (a, b, d) = (g[0][0], g[0][1], g[1][1]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    vec![mean + rad, mean - rad]
}

/// Eigenvalues of a symmetric 3×3 matrix from the trigonometric solution of
/// the characteristic cubic.
pub fn eig3(a: &[Vec<f64>]) -> Vec<f64> {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return vec![q; 3];
    }
    let b: Vec<Vec<f64>> = (0..3)
        .map(|i| (0..3).map(|j| (a[i][j] - if i == j { q } else { 0.0 }) / p).collect())
        .collect();
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    vec![e1, 3.0 * q - e1 - e3, e3]
}

/// Eigenvalues of a symmetric matrix via Householder reduction to
/// tridiagonal form and bisection on Sturm counts.
pub fn eig_sturm(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for k in 0..n.saturating_sub(2) {
        let alpha_sq: f64 = (k + 1..n).map(|i| m[i][k] * m[i][k]).sum();
        if alpha_sq == 0.0 {
            continue;
        }
        let alpha = if m[k + 1][k] > 0.0 { -alpha_sq.sqrt() } else { alpha_sq.sqrt() };
        let mut v = vec![0.0; n];
        v[k + 1] = m[k + 1][k] - alpha;
        for i in k + 2..n {
            v[i] = m[i][k];
        }
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        // M ← H M H with H = I − 2 v vᵀ / vᵀv
        let p: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m[i][j] * v[j]).sum::<f64>() * 2.0 / vnorm_sq).collect();
        let kcoef: f64 = (0..n).map(|i| v[i] * p[i]).sum::<f64>() / vnorm_sq;
        let q: Vec<f64> = (0..n).map(|i| p[i] - kcoef * v[i]).collect();
        for i in 0..n {
            for j in 0..n {
                m[i][j] -= v[i] * q[j] + q[i] * v[j];
            }
        }
    }
    let d: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    let e: Vec<f64> = (1..n).map(|i| m[i][i - 1]).collect();
    let bound = (0..n)
        .map(|i| {
            d[i].abs() + if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 }
        })
        .fold(0.0f64, f64::max)
        + 1e-300;
    // number of eigenvalues strictly below x
    let count_below = |x: f64| {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..n {
            let off = if i > 0 { e[i - 1] * e[i - 1] } else { 0.0 };
            q = d[i] - x - if i > 0 { off / q } else { 0.0 };
            if q == 0.0 {
                q = -1e-300;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    (0..n)
        .map(|k| {
            // k-th largest eigenvalue: the point where count_below crosses n − k
            let (mut lo, mut hi) = (-bound, bound);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if count_below(mid) >= n - k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Singular values, descending, from the reference eigen paths.
pub fn oracle_singular_values(x: &DenseMatrix) -> Vec<f64> {
    let g = small_gram(x);
    let mut ev = match g.len() {
        1 => vec![g[0][0]],
        2 => eig2(&g),
        3 => eig3(&g),
        _ => eig_sturm(&g),
    };
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev.into_iter().map(|l| l.max(0.0).sqrt()).collect()
}

/// Numerical, stable and effective rank computed from scratch.
pub fn oracle_ranks(x: &DenseMatrix) -> (f64, f64, f64) {
    let s = oracle_singular_values(x);
    let sum: f64 = s.iter().sum();
    let sq: f64 = s.iter().map(|v| v * v).sum();
    let numerical = sq / (s[0] * s[0]);
    let stable = sum * sum / sq;
    let entropy: f64 = s
        .iter()
        .map(|v| v / sum)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    (numerical, stable, entropy.exp())
}

/// Textbook single-pass Pearson formula.
pub fn textbook_pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt()
}

/// `(depth, accuracy, s1, s2)` for the eight fixture runs. Run `k` stores
/// `X = [[s1, 0], [0, s2], [0, 0], [0, 0]]` on the path 0–1–2–3.
pub const FIXTURE_RUNS: [(usize, f64, f64, f64); 8] = [
    (2, 0.81, 1.0, 0.9),
    (4, 0.79, 2.0, 1.5),
    (6, 0.74, 0.5, 0.3),
    (8, 0.70, 3.0, 1.2),
    (10, 0.61, 1.5, 0.45),
    (12, 0.55, 4.0, 0.8),
    (14, 0.42, 2.5, 0.25),
    (16, 0.30, 1.0, 0.05),
];

/// Writes the graph, feature files and manifests; returns the graph path
/// and the manifest glob.
pub fn write_manifest_fixture(dir: &std::path::Path) -> (std::path::PathBuf, String) {
    use std::fs;
    fs::create_dir_all(dir.join("features")).unwrap();
    let graph = dir.join("path4.grf");
    fs::write(&graph, "grf 1 4 3\n0 1\n1 2\n2 3\n").unwrap();
    fs::write(dir.join("features/u.csv"), "1\n1\n1\n1\n").unwrap();
    for (k, &(depth, acc, s1, s2)) in FIXTURE_RUNS.iter().enumerate() {
        // alternate formats and u sources to exercise every loader path
        let (name, body) = if k % 2 == 0 {
            (format!("run{k}.dmat"), format!("dmat 1 4 2\n{s1:?} 0\n0 {s2:?}\n0 0\n0 0\n"))
        } else {
            (format!("run{k}.csv"), format!("{s1:?},0\n0,{s2:?}\n0,0\n0,0\n"))
        };
        fs::write(dir.join("features").join(&name), body).unwrap();
        let u = if k % 3 == 0 { r#"{"from_file": "features/u.csv"}"#.to_string() } else { r#""constant""#.to_string() };
        let manifest = format!(
            r#"{{"depth": {depth}, "accuracy": {acc}, "layer_paths": ["features/{name}"], "arch_label": "fixture", "u_source": {u}}}"#
        );
        fs::write(dir.join(format!("run{k}.json")), manifest).unwrap();
    }
    (graph, format!("{}/run*.json", dir.display()))
}

/// Hand-derived metric values for fixture run `(s1, s2)` with constant `u`:
/// `[e_dir, e_dir_norm, e_proj, e_proj_norm, mad, erank − 1, num_rank − 1]`.
pub fn fixture_metrics(s1: f64, s2: f64) -> [f64; 7] {
    let frob2 = s1 * s1 + s2 * s2;
    let e_dir = 4.0 * s1 * s1 + 8.0 * s2 * s2;
    let e_proj = 0.75 * frob2;
    let (p, q) = (s1 / (s1 + s2), s2 / (s1 + s2));
    let erank = (-(p * p.ln()) - q * q.ln()).exp();
    [e_dir, e_dir / frob2, e_proj, 0.75, 1.0, erank - 1.0, (s2 / s1).powi(2)]
}

/// Hand-computed r per metric; `None` for metrics constant across runs.
pub fn fixture_expected_r() -> [Option<f64>; 7] {
    let acc: Vec<f64> = FIXTURE_RUNS.iter().map(|r| r.1).collect();
    let values: Vec<[f64; 7]> = FIXTURE_RUNS.iter().map(|r| fixture_metrics(r.2, r.3)).collect();
    std::array::from_fn(|m| {
        let logs: Vec<f64> = values.iter().map(|v| v[m].max(1e-15).ln()).collect();
        if logs.iter().all(|&l| l == logs[0]) {
            None
        } else {
            Some(textbook_pearson(&logs, &acc))
        }
    })
}
