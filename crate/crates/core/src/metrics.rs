//! Oversmoothing metrics on a node feature matrix `X` (one row per node).
//!
//! Energy-like metrics measure distance to the span of a dominant eigenvector
//! `u`; MAD measures cosine disagreement across edges; the rank relaxations
//! (numerical, stable and effective rank) are functions of the singular values
//! alone and therefore scale invariant.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{dot, frobenius_norm, singular_values, DenseMatrix};

/// Tolerance on `‖u‖₂ = 1` for projection-based metrics.
pub const UNIT_TOL: f64 = 1e-12;

/// Singular values above this fraction of the largest count toward the rank.
pub const RANK_TOL: f64 = 1e-10;

/// The seven metrics tracked per layer and correlated with accuracy. The rank
/// relaxations appear shifted by one so that every metric tends to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    EDir,
    EDirNorm,
    EProj,
    EProjNorm,
    Mad,
    ErankMinusOne,
    NumRankMinusOne,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::EDir,
        Metric::EDirNorm,
        Metric::EProj,
        Metric::EProjNorm,
        Metric::Mad,
        Metric::ErankMinusOne,
        Metric::NumRankMinusOne,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::EDir => "e_dir",
            Metric::EDirNorm => "e_dir_norm",
            Metric::EProj => "e_proj",
            Metric::EProjNorm => "e_proj_norm",
            Metric::Mad => "mad",
            Metric::ErankMinusOne => "erank_minus_one",
            Metric::NumRankMinusOne => "num_rank_minus_one",
        }
    }

    /// True for the metrics that have 1 subtracted before analysis.
    pub fn is_rank(self) -> bool {
        matches!(self, Metric::ErankMinusOne | Metric::NumRankMinusOne)
    }

    pub fn is_scale_invariant(self) -> bool {
        !matches!(self, Metric::EDir | Metric::EProj)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the projection energy is normalized by the feature norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjNormalization {
    /// `E_Proj / ‖X‖_F²`, scale invariant.
    #[default]
    Squared,
    /// `E_Proj / ‖X‖_F`, the unsquared variant.
    Unsquared,
}

/// All metrics for one feature matrix. `None` marks a metric that is
/// undefined for this input (zero matrix, every MAD edge skipped, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub e_dir: f64,
    pub e_dir_norm: Option<f64>,
    pub e_proj: f64,
    pub e_proj_norm: Option<f64>,
    pub mad: Option<f64>,
    pub num_rank: Option<f64>,
    pub stable_rank: Option<f64>,
    pub erank: Option<f64>,
    pub frob_norm: f64,
    pub skipped_mad_edges: usize,
}

impl MetricReport {
    /// Value of one of the seven tracked metrics (rank metrics minus one).
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::EDir => Some(self.e_dir),
            Metric::EDirNorm => self.e_dir_norm,
            Metric::EProj => Some(self.e_proj),
            Metric::EProjNorm => self.e_proj_norm,
            Metric::Mad => self.mad,
            Metric::ErankMinusOne => self.erank.map(|x| x - 1.0),
            Metric::NumRankMinusOne => self.num_rank.map(|x| x - 1.0),
        }
    }
}

fn check_rows(x: &DenseMatrix, len: usize, what: &str) -> Result<()> {
    if x.rows() != len {
        return Err(Error::shape(format!(
            "{} feature rows but {what} has length {len}",
            x.rows()
        )));
    }
    Ok(())
}

fn check_unit(u: &[f64]) -> Result<()> {
    let norm = dot(u, u).sqrt();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::NonUnitVector { norm });
    }
    Ok(())
}

/// Dirichlet energy `Σ_{(i,j)∈E} ‖Xᵢ/uᵢ − Xⱼ/uⱼ‖²`, each undirected edge
/// counted once. `u` must be entrywise positive; it is used as given.
pub fn dirichlet_energy(x: &DenseMatrix, g: &Graph, u: &[f64]) -> Result<f64> {
    check_rows(x, g.node_count(), "graph")?;
    check_rows(x, u.len(), "u")?;
    if let Some(index) = u.iter().position(|&v| v <= 0.0) {
        return Err(Error::NonpositiveEigenvector { index });
    }
    let mut total = 0.0;
    for &(i, j) in g.edges() {
        let (ui, uj) = (u[i], u[j]);
        total += x
            .row(i)
            .iter()
            .zip(x.row(j))
            .map(|(a, b)| (a / ui - b / uj).powi(2))
            .sum::<f64>();
    }
    Ok(total)
}

/// `uᵀX`, the coordinates of the projection onto `span(u)`.
fn project(x: &DenseMatrix, u: &[f64]) -> Vec<f64> {
    x.vec_mat(u).expect("rows checked by caller")
}

/// Projection energy `‖X − uuᵀX‖_F²` for a unit vector `u`.
pub fn projection_energy(x: &DenseMatrix, u: &[f64]) -> Result<f64> {
    check_rows(x, u.len(), "u")?;
    check_unit(u)?;
    let coords = project(x, u);
    let mut total = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        total += x
            .row(i)
            .iter()
            .zip(&coords)
            .map(|(a, c)| (a - ui * c).powi(2))
            .sum::<f64>();
    }
    Ok(total)
}

/// `(E_Dir/‖X‖_F², E_Proj/‖X‖_F²)`, or with the unsquared projection
/// normalization when requested.
pub fn normalized_energies(
    x: &DenseMatrix,
    g: &Graph,
    u: &[f64],
    proj: ProjNormalization,
) -> Result<(f64, f64)> {
    let e_dir = dirichlet_energy(x, g, u)?;
    let e_proj = projection_energy(x, u)?;
    normalize_pair(e_dir, e_proj, frobenius_norm(x), proj)
}

/// `E_Proj / ‖X‖_F²` (or `/ ‖X‖_F` for the unsquared variant).
pub fn normalized_projection_energy(x: &DenseMatrix, u: &[f64], proj: ProjNormalization) -> Result<f64> {
    let e_proj = projection_energy(x, u)?;
    Ok(normalize_pair(0.0, e_proj, frobenius_norm(x), proj)?.1)
}

fn normalize_pair(e_dir: f64, e_proj: f64, frob: f64, proj: ProjNormalization) -> Result<(f64, f64)> {
    if frob == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    // divide twice rather than by frob² so huge features do not overflow
    let dir = e_dir / frob / frob;
    let p = match proj {
        ProjNormalization::Squared => e_proj / frob / frob,
        ProjNormalization::Unsquared => e_proj / frob,
    };
    Ok((dir, p))
}

/// MAD (mean average distance) with the number of edges skipped because an
/// endpoint has a zero feature vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mad {
    pub value: f64,
    pub skipped: usize,
}

/// Mean over edges of `1 − cos(Xᵢ, Xⱼ)`.
pub fn mad(x: &DenseMatrix, g: &Graph) -> Result<Mad> {
    check_rows(x, g.node_count(), "graph")?;
    if g.edges().is_empty() {
        return Err(Error::NoEdges);
    }
    // row norms computed with a per-row scale so tiny features stay resolvable
    let norms: Vec<f64> = (0..x.rows())
        .map(|i| {
            let r = x.row(i);
            let s = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if s == 0.0 {
                0.0
            } else {
                s * r.iter().map(|v| (v / s) * (v / s)).sum::<f64>().sqrt()
            }
        })
        .collect();
    let mut total = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for &(i, j) in g.edges() {
        let (ni, nj) = (norms[i], norms[j]);
        if ni == 0.0 || nj == 0.0 {
            skipped += 1;
            continue;
        }
        used += 1;
        if x.row(i) == x.row(j) {
            continue;
        }
        let cos: f64 = x
            .row(i)
            .iter()
            .zip(x.row(j))
            .map(|(a, b)| (a / ni) * (b / nj))
            .sum();
        total += 1.0 - cos.clamp(-1.0, 1.0);
    }
    if used == 0 {
        return Err(Error::AllEdgesSkipped);
    }
    Ok(Mad {
        value: total / used as f64,
        skipped,
    })
}

fn nonzero_singular_values(x: &DenseMatrix) -> Result<Vec<f64>> {
    let s = singular_values(x)?;
    if s[0] == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(s)
}

/// Rank relaxations computed from one set of singular values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankRelaxations {
    pub numerical: f64,
    pub stable: f64,
    pub effective: f64,
}

impl RankRelaxations {
    /// `s` must be nonincreasing with `s[0] > 0`.
    pub fn from_singular_values(s: &[f64]) -> Self {
        let top = s[0];
        // ratios relative to σ₁ keep the sums well scaled
        let sq: f64 = s.iter().map(|x| (x / top) * (x / top)).sum();
        let sum: f64 = s.iter().map(|x| x / top).sum();
        let entropy: f64 = s
            .iter()
            .map(|x| x / top / sum)
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.ln())
            .sum();
        Self {
            numerical: sq,
            stable: sum * sum / sq,
            effective: entropy.exp(),
        }
    }
}

/// `‖X‖_F² / ‖X‖₂²`, evaluated as `Σσᵢ² / σ₁²`.
pub fn numerical_rank(x: &DenseMatrix) -> Result<f64> {
    Ok(RankRelaxations::from_singular_values(&nonzero_singular_values(x)?).numerical)
}

/// `(Σσᵢ)² / Σσᵢ²`.
pub fn stable_rank(x: &DenseMatrix) -> Result<f64> {
    Ok(RankRelaxations::from_singular_values(&nonzero_singular_values(x)?).stable)
}

/// `exp(−Σ pₖ ln pₖ)` with `pₖ = σₖ / Σσᵢ`.
pub fn effective_rank(x: &DenseMatrix) -> Result<f64> {
    Ok(RankRelaxations::from_singular_values(&nonzero_singular_values(x)?).effective)
}

/// Number of singular values above [`RANK_TOL`] times the largest.
pub fn rank(x: &DenseMatrix) -> Result<usize> {
    let s = singular_values(x)?;
    Ok(s.iter().filter(|&&v| v > RANK_TOL * s[0]).count())
}

/// Evaluates every metric. `u` must be a positive unit vector with one entry
/// per node; metrics that are undefined for `x` are reported as `None`.
pub fn metric_suite(x: &DenseMatrix, g: &Graph, u: &[f64]) -> Result<MetricReport> {
    // energies are evaluated on a power-of-two rescaling of x (exact), so the
    // normalized values stay finite for exploding or vanishing features
    let max = x.max_abs();
    let scale = if max > 0.0 { 2f64.powi(max.log2().floor() as i32) } else { 1.0 };
    let scaled = x.scale(1.0 / scale);
    let e_dir_scaled = dirichlet_energy(&scaled, g, u)?;
    let e_proj_scaled = projection_energy(&scaled, u)?;
    let frob_scaled = frobenius_norm(&scaled);
    let e_dir = e_dir_scaled * scale * scale;
    let e_proj = e_proj_scaled * scale * scale;
    let frob = frob_scaled * scale;
    let (e_dir_norm, e_proj_norm) =
        match normalize_pair(e_dir_scaled, e_proj_scaled, frob_scaled, ProjNormalization::Squared) {
            Ok((d, p)) => (Some(d), Some(p)),
            Err(_) => (None, None),
        };
    let (mad_value, skipped) = match mad(x, g) {
        Ok(m) => (Some(m.value), m.skipped),
        Err(Error::AllEdgesSkipped) => (None, g.edges().len()),
        Err(_) => (None, 0),
    };
    let ranks = match nonzero_singular_values(x) {
        Ok(s) => Some(RankRelaxations::from_singular_values(&s)),
        Err(Error::ZeroMatrix) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricReport {
        e_dir,
        e_dir_norm,
        e_proj,
        e_proj_norm,
        mad: mad_value,
        num_rank: ranks.map(|r| r.numerical),
        stable_rank: ranks.map(|r| r.stable),
        erank: ranks.map(|r| r.effective),
        frob_norm: frob,
        skipped_mad_edges: skipped,
    })
}

/// Both sides of `NumRank(X) ≤ 1 + ‖(I − uuᵀ)X‖_F² / ‖X‖₂²`.
pub fn numrank_upper_bound_check(x: &DenseMatrix, u: &[f64]) -> Result<(f64, f64)> {
    let s = nonzero_singular_values(x)?;
    let lhs = RankRelaxations::from_singular_values(&s).numerical;
    let residual = projection_energy(x, u)?;
    let rhs = 1.0 + residual / s[0] / s[0];
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{barabasi_albert, constant_unit_vector, gcn_dominant_eigenvector};

    fn edge() -> Graph {
        Graph::new(2, &[(0, 1)]).unwrap()
    }

    fn col(v: &[f64]) -> DenseMatrix {
        DenseMatrix::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn dirichlet_examples() {
        let g = barabasi_albert(8, 2, 1).unwrap();
        let x = DenseMatrix::from_fn(8, 3, |_, j| j as f64 + 0.5);
        assert_eq!(dirichlet_energy(&x, &g, &constant_unit_vector(8)).unwrap(), 0.0);

        let s = 2f64.sqrt();
        let e = dirichlet_energy(&col(&[2.0, 0.0]), &edge(), &[s, s]).unwrap();
        assert!((e - 2.0).abs() < 1e-14);

        let u = gcn_dominant_eigenvector(&g).unwrap();
        let v = [0.3, -1.2, 4.0];
        let aligned = DenseMatrix::from_fn(8, 3, |i, j| u[i] * v[j]);
        assert!(dirichlet_energy(&aligned, &g, &u).unwrap() < 1e-28);
    }

    #[test]
    fn dirichlet_rejects_bad_u() {
        assert_eq!(
            dirichlet_energy(&col(&[1.0, 2.0]), &edge(), &[1.0, 0.0]),
            Err(Error::NonpositiveEigenvector { index: 1 })
        );
        assert!(matches!(
            dirichlet_energy(&col(&[1.0, 2.0, 3.0]), &edge(), &[1.0, 1.0]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn projection_examples() {
        let u = [0.6, 0.8];
        let x = DenseMatrix::outer(&u, &[2.0, -1.0, 0.5]);
        assert!(projection_energy(&x, &u).unwrap() < 1e-30);
        assert_eq!(projection_energy(&col(&[0.0, 1.0]), &[1.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(
            projection_energy(&col(&[0.0, 1.0]), &[1.0, 1.0]),
            Err(Error::NonUnitVector { .. })
        ));
    }

    #[test]
    fn normalized_energy_examples() {
        let g = barabasi_albert(10, 2, 5).unwrap();
        let u = gcn_dominant_eigenvector(&g).unwrap();
        let x = DenseMatrix::from_fn(10, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 + 0.25);
        let a = normalized_energies(&x, &g, &u, ProjNormalization::Squared).unwrap();
        let b = normalized_energies(&x.scale(1e3), &g, &u, ProjNormalization::Squared).unwrap();
        assert!((a.0 - b.0).abs() <= 1e-12 * a.0);
        assert!((a.1 - b.1).abs() <= 1e-12 * a.1);

        let flat = DenseMatrix::from_fn(10, 4, |_, j| j as f64 + 1.0);
        let c = constant_unit_vector(10);
        let (d, p) = normalized_energies(&flat, &g, &c, ProjNormalization::Squared).unwrap();
        assert_eq!(d, 0.0);
        assert!(p < 1e-30);

        // u = e₁ has a zero entry, so only the projection half is defined
        let p = normalized_projection_energy(&col(&[0.0, 1.0]), &[1.0, 0.0], ProjNormalization::Squared);
        assert_eq!(p.unwrap(), 1.0);

        let x2 = col(&[0.0, 2.0]);
        let (_, sq) = normalized_energies(&x2, &edge(), &[0.6, 0.8], ProjNormalization::Squared).unwrap();
        let (_, lit) = normalized_energies(&x2, &edge(), &[0.6, 0.8], ProjNormalization::Unsquared).unwrap();
        assert!((lit - 2.0 * sq).abs() < 1e-14);

        assert_eq!(
            normalized_energies(&DenseMatrix::zeros(2, 1), &edge(), &[0.6, 0.8], ProjNormalization::Squared),
            Err(Error::ZeroMatrix)
        );
    }

    #[test]
    fn mad_examples() {
        let g = barabasi_albert(6, 2, 2).unwrap();
        let same = DenseMatrix::from_fn(6, 3, |_, j| j as f64 + 1.0);
        assert!(mad(&same, &g).unwrap().value.abs() < 1e-15);

        let orth = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap();
        assert!((mad(&orth, &edge()).unwrap().value - 1.0).abs() < 1e-15);
        let anti = DenseMatrix::from_rows(&[[1.0, 1.0], [-3.0, -3.0]]).unwrap();
        assert!((mad(&anti, &edge()).unwrap().value - 2.0).abs() < 1e-15);
    }

    #[test]
    fn mad_skips_zero_rows() {
        let path = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let x = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).unwrap();
        let m = mad(&x, &path).unwrap();
        assert_eq!(m.skipped, 1);
        assert!((m.value - 1.0).abs() < 1e-15);
        assert_eq!(mad(&DenseMatrix::zeros(3, 2), &path), Err(Error::AllEdgesSkipped));
        assert_eq!(mad(&DenseMatrix::zeros(1, 2), &Graph::new(1, &[]).unwrap()), Err(Error::NoEdges));
    }

    #[test]
    fn rank_examples() {
        for n in 1..6 {
            let id = DenseMatrix::identity(n);
            assert!((numerical_rank(&id).unwrap() - n as f64).abs() < 1e-12);
            assert!((stable_rank(&id).unwrap() - n as f64).abs() < 1e-12);
            assert!((effective_rank(&id).unwrap() - n as f64).abs() < 1e-12);
        }
        let r1 = DenseMatrix::outer(&[1.0, 2.0, 3.0], &[0.5, -1.0]);
        assert_eq!(numerical_rank(&r1).unwrap(), 1.0);
        assert_eq!(stable_rank(&r1).unwrap(), 1.0);
        assert_eq!(effective_rank(&r1).unwrap(), 1.0);

        let d = DenseMatrix::from_diag(&[2.0, 1.0]);
        assert!((numerical_rank(&d).unwrap() - 1.25).abs() < 1e-14);
        assert!((stable_rank(&d).unwrap() - 1.8).abs() < 1e-14);
        let expected = (3f64.ln() - (2.0 / 3.0) * 2f64.ln()).exp();
        assert!((effective_rank(&d).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 1.8899).abs() < 1e-4);

        assert_eq!(numerical_rank(&DenseMatrix::zeros(2, 2)), Err(Error::ZeroMatrix));
        assert_eq!(stable_rank(&DenseMatrix::zeros(2, 2)), Err(Error::ZeroMatrix));
        assert_eq!(effective_rank(&DenseMatrix::zeros(2, 2)), Err(Error::ZeroMatrix));
    }

    #[test]
    fn suite_marks_zero_matrix() {
        let g = barabasi_albert(5, 2, 0).unwrap();
        let r = metric_suite(&DenseMatrix::zeros(5, 3), &g, &constant_unit_vector(5)).unwrap();
        assert_eq!(r.e_dir, 0.0);
        assert_eq!(r.num_rank, None);
        assert_eq!(r.erank, None);
        assert_eq!(r.mad, None);
        assert_eq!(r.e_dir_norm, None);
        assert_eq!(r.skipped_mad_edges, g.edges().len());
    }

    #[test]
    fn bound_examples() {
        let u = [0.6, 0.8];
        let x = DenseMatrix::outer(&u, &[1.0, 2.0]);
        let (lhs, rhs) = numrank_upper_bound_check(&x, &u).unwrap();
        assert_eq!(lhs, 1.0);
        assert!((rhs - 1.0).abs() < 1e-14);

        // columns orthogonal to u
        let x = DenseMatrix::outer(&[0.8, -0.6], &[1.0, 3.0]);
        let (lhs, rhs) = numrank_upper_bound_check(&x, &u).unwrap();
        assert!(lhs <= rhs + 1e-10);
    }
}
