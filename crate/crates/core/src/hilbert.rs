//! Hilbert projective metric on the open positive cone and Monte-Carlo
//! contraction diagnostics for nonnegative maps.
//!
//! [`contraction_ratio`] reports the largest sampled ratio, which is a lower
//! bound on the true supremum, not a certificate of contractivity.

use crate::error::{Error, Result};
use crate::linalg::{norm2, DenseMatrix};
use crate::propagate::ActivationKind;
use crate::rng::Xoshiro256pp;

/// Samples closer than this to `u` are skipped by [`contraction_ratio`].
pub const DEGENERATE_DISTANCE: f64 = 1e-12;
/// Tolerance for `A u = λ u`, relative to `max |A u|`.
pub const EIGEN_TOL: f64 = 1e-10;
/// Relative tolerance for parallelism in [`activation_eigenvector_check`].
pub const PARALLEL_TOL: f64 = 1e-12;

/// A vector with strictly positive entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeVector(Vec<f64>);

impl ConeVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::shape("cone vector must be nonempty"));
        }
        match entries.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            Some(index) => Err(Error::NonpositiveEntry { index }),
            None => Ok(Self(entries)),
        }
    }

    pub fn constant(n: usize) -> Self {
        Self(vec![1.0; n.max(1)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for ConeVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// `ln(max xᵢ/yᵢ) − ln(min xᵢ/yᵢ)`.
pub fn hilbert_distance(x: &ConeVector, y: &ConeVector) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape(format!("cone vectors of length {} and {}", x.len(), y.len())));
    }
    Ok(distance_unchecked(&x.0, &y.0))
}

fn distance_unchecked(x: &[f64], y: &[f64]) -> f64 {
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for (a, b) in x.iter().zip(y) {
        let r = a / b;
        hi = hi.max(r);
        lo = lo.min(r);
    }
    if hi == lo {
        0.0
    } else {
        hi.ln() - lo.ln()
    }
}

/// Largest Hilbert distance between a column of `x` and `u`.
pub fn column_hilbert_radius(x: &DenseMatrix, u: &ConeVector) -> Result<f64> {
    if x.rows() != u.len() {
        return Err(Error::shape(format!("{} rows against a cone vector of length {}", x.rows(), u.len())));
    }
    let mut radius = 0.0f64;
    for j in 0..x.cols() {
        let col = x.column(j);
        if col.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::NonpositiveColumn { column: j });
        }
        radius = radius.max(distance_unchecked(&col, &u.0));
    }
    Ok(radius)
}

/// Point `x` with `d_H(x, u)` uniform on `(0, cap]`: log-offsets drawn
/// uniformly on `[−cap/2, cap/2]`, then stretched so their spread hits the
/// target radius.
pub fn sample_cone_point(u: &ConeVector, cap: f64, rng: &mut Xoshiro256pp) -> Vec<f64> {
    let offsets: Vec<f64> = (0..u.len()).map(|_| rng.uniform(-cap / 2.0, cap / 2.0)).collect();
    let target = cap * rng.next_f64_open0();
    let spread = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - offsets.iter().copied().fold(f64::INFINITY, f64::min);
    let stretch = if spread > 0.0 { target / spread } else { 0.0 };
    u.0.iter()
        .zip(&offsets)
        .map(|(ui, o)| ui * (o * stretch).exp())
        .collect()
}

/// Checks `A u = λ u` with `λ > 0` and returns `λ`.
pub fn check_eigenvector(a: &DenseMatrix, u: &ConeVector) -> Result<f64> {
    if !a.is_square() || a.rows() != u.len() {
        return Err(Error::shape(format!("matrix {:?} against a cone vector of length {}", a.shape(), u.len())));
    }
    let au = a.mat_vec(&u.0)?;
    let lambda = au.iter().zip(&u.0).map(|(p, q)| p * q).sum::<f64>() / norm2(&u.0).powi(2);
    let scale = au.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let residual = au
        .iter()
        .zip(&u.0)
        .fold(0.0f64, |m, (p, q)| m.max((p - lambda * q).abs()));
    if !(lambda > 0.0) || residual > EIGEN_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::EigenvectorMismatch { residual });
    }
    Ok(lambda)
}

/// Monte-Carlo estimate of `sup d_H(A x, u) / d_H(x, u)` over sampled `x`
/// with `d_H(x, u) ≤ radius_cap`. Deterministic for a fixed seed.
pub fn contraction_ratio(
    a: &DenseMatrix,
    u: &ConeVector,
    radius_cap: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 || !(radius_cap > 0.0 && radius_cap.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need samples ≥ 1 and a positive radius cap, got {samples} and {radius_cap}"
        )));
    }
    if a.min_entry() < 0.0 {
        return Err(Error::InvalidParameter("contraction_ratio needs a nonnegative matrix".into()));
    }
    check_eigenvector(a, u)?;
    let mut rng = Xoshiro256pp::seed_from_u64(seed);
    let mut best: Option<f64> = None;
    for _ in 0..samples {
        let x = sample_cone_point(u, radius_cap, &mut rng);
        let before = distance_unchecked(&x, &u.0);
        if before < DEGENERATE_DISTANCE {
            continue;
        }
        let ax = a.mat_vec(&x)?;
        let after = distance_unchecked(&ax, &u.0);
        let ratio = after / before;
        best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
    }
    best.ok_or(Error::AllSamplesDegenerate { samples })
}

/// Number of sampled cone points `x` (with `d_H(x, u) ≤ cap`) for which
/// `d_H(f(x), u) > d_H(x, u) + tol`.
pub fn count_expansions<F>(f: F, u: &ConeVector, cap: f64, samples: usize, seed: u64, tol: f64) -> usize
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut rng = Xoshiro256pp::seed_from_u64(seed);
    (0..samples)
        .filter(|_| {
            let x = sample_cone_point(u, cap, &mut rng);
            let fx = f(&x);
            distance_unchecked(&fx, &u.0) > distance_unchecked(&x, &u.0) + tol
        })
        .count()
}

/// True iff `σ(t u)` is parallel to `u` for every sampled `t`.
pub fn activation_eigenvector_check(act: ActivationKind, u: &ConeVector, t_samples: &[f64]) -> bool {
    t_samples.iter().all(|&t| {
        let y: Vec<f64> = u.0.iter().map(|&ui| act.apply(t * ui)).collect();
        let c = y.iter().zip(&u.0).map(|(p, q)| p * q).sum::<f64>() / norm2(&u.0).powi(2);
        let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dev = y
            .iter()
            .zip(&u.0)
            .fold(0.0f64, |m, (p, q)| m.max((p - c * q).abs()));
        scale > 0.0 && dev <= PARALLEL_TOL * scale
    })
}
