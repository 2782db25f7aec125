//! Deterministic synthetic studies: the decay grid over twelve deep
//! untrained architectures, the four toy feature scenarios, and the linear
//! convergence-rate check.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{barabasi_albert, gcn_dominant_eigenvector, sym_norm_adjacency, Graph};
use crate::linalg::{determinant, dot, frobenius_norm, power_iteration, spectral_gap, DenseMatrix, POWER_MAX_ITER, POWER_TOL};
use crate::metrics::{metric_suite, Metric, MetricReport};
use crate::propagate::{rollout_with_metrics, ActivationKind, Arch, PropagationConfig, WeightScheme};
use crate::rng::{derive_seed, Xoshiro256pp};

/// Minimum series length accepted by [`decay_classify`].
pub const MIN_SERIES_LEN: usize = 20;
/// Ratios below this end the rate-fit window.
pub const RATIO_UNDERFLOW: f64 = 1e-290;
/// Sampled weights with `|det W|` below this are redrawn in [`rate_check`].
pub const SINGULAR_DET: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayKind {
    EnergyLike,
    RankMinusOne,
}

impl DecayKind {
    pub fn of(metric: Metric) -> Self {
        if metric.is_rank() {
            DecayKind::RankMinusOne
        } else {
            DecayKind::EnergyLike
        }
    }
}

/// Thresholds deciding whether a series has decayed to zero.
///
/// With `s₁` the entry at layer 1 and `m` the minimum over the last `window`
/// entries, an energy-like series decays iff
/// `m ≤ max(energy_floor, energy_relative · s₁)` and a rank−1 series decays
/// iff `m ≤ min(rank_absolute, rank_relative · s₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayCriterion {
    pub window: usize,
    pub energy_relative: f64,
    pub energy_floor: f64,
    pub rank_absolute: f64,
    pub rank_relative: f64,
}

impl Default for DecayCriterion {
    /// Three orders of magnitude below layer 1, capped at `1e-2` for ranks.
    fn default() -> Self {
        Self {
            window: 10,
            energy_relative: 1e-3,
            energy_floor: 1e-12,
            rank_absolute: 1e-2,
            rank_relative: 1e-3,
        }
    }
}

impl DecayCriterion {
    /// Six orders of magnitude for energies, a bare `1e-2` for ranks.
    pub fn strict() -> Self {
        Self {
            energy_relative: 1e-6,
            rank_relative: f64::INFINITY,
            ..Self::default()
        }
    }

    pub fn threshold(&self, kind: DecayKind, first: f64) -> f64 {
        match kind {
            DecayKind::EnergyLike => {
                let rel = self.energy_relative * first;
                if rel.is_nan() {
                    self.energy_floor
                } else {
                    self.energy_floor.max(rel)
                }
            }
            DecayKind::RankMinusOne => {
                let rel = self.rank_relative * first;
                if rel.is_nan() {
                    self.rank_absolute
                } else {
                    self.rank_absolute.min(rel)
                }
            }
        }
    }
}

/// Outcome of [`decay_classify`]; reproducible from `series` and `criterion`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayVerdict {
    pub label: String,
    pub kind: DecayKind,
    pub series: Vec<f64>,
    pub decayed: bool,
    pub criterion: DecayCriterion,
    pub threshold: f64,
    pub tail_min: f64,
    /// First layer `≥ 1` at or below the threshold.
    pub crossing_layer: Option<usize>,
}

/// Classifies a per-layer series (index = layer). `NaN` entries mark layers
/// where the metric is undefined and are ignored.
pub fn decay_classify(series: &[f64], kind: DecayKind, criterion: &DecayCriterion) -> Result<DecayVerdict> {
    if series.len() < MIN_SERIES_LEN {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            min: MIN_SERIES_LEN,
        });
    }
    let threshold = criterion.threshold(kind, series[1]);
    let tail = &series[series.len() - criterion.window.min(series.len())..];
    let tail_min = tail
        .iter()
        .copied()
        .filter(|v| !v.is_nan())
        .fold(f64::INFINITY, f64::min);
    let crossing_layer = series.iter().skip(1).position(|&v| v <= threshold).map(|p| p + 1);
    Ok(DecayVerdict {
        label: String::new(),
        kind,
        series: series.to_vec(),
        decayed: tail_min <= threshold,
        criterion: *criterion,
        threshold,
        tail_min,
        crossing_layer,
    })
}

/// Series of one metric across a trace, `NaN` where undefined.
pub fn metric_series(reports: &[MetricReport], metric: Metric) -> Vec<f64> {
    reports.iter().map(|r| r.get(metric).unwrap_or(f64::NAN)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightRegime {
    Identity,
    /// `U(0, 0.05)` entries.
    Small,
    /// `U(0, 0.1)` entries.
    Large,
}

impl WeightRegime {
    pub fn scheme(self) -> WeightScheme {
        match self {
            WeightRegime::Identity => WeightScheme::Identity,
            WeightRegime::Small => WeightScheme::UniformNonneg { scale: 0.05 },
            WeightRegime::Large => WeightScheme::UniformNonneg { scale: 0.1 },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WeightRegime::Identity => "identity",
            WeightRegime::Small => "small",
            WeightRegime::Large => "large",
        }
    }
}

/// One architecture row of the decay grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthRow {
    pub arch: Arch,
    pub activation: ActivationKind,
    pub regime: WeightRegime,
}

impl SynthRow {
    /// The twelve rows: identity, small and large weights, each with
    /// GCN/GAT × LeakyReLU/Tanh.
    pub fn all() -> Vec<SynthRow> {
        let mut rows = Vec::with_capacity(12);
        // within a regime: gcn-lrelu, gcn-tanh, gat-lrelu, gat-tanh
        for regime in [WeightRegime::Identity, WeightRegime::Small, WeightRegime::Large] {
            for arch in [Arch::Gcn, Arch::gat()] {
                for activation in [ActivationKind::leaky_relu(), ActivationKind::Tanh] {
                    rows.push(SynthRow { arch, activation, regime });
                }
            }
        }
        rows
    }

    /// e.g. `gcn-lrelu-identity`.
    pub fn name(&self) -> String {
        let act = match self.activation {
            ActivationKind::LeakyRelu { .. } => "lrelu",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Identity => "linear",
        };
        format!("{}-{}-{}", self.arch.label(), act, self.regime.name())
    }

    pub fn from_name(name: &str) -> Option<SynthRow> {
        Self::all().into_iter().find(|r| r.name() == name)
    }

    pub fn config(&self, graph: Graph, settings: &SynthSettings, seed: u64) -> PropagationConfig {
        let mut c = PropagationConfig::new(graph, self.arch);
        c.activation = self.activation;
        c.weights = self.regime.scheme();
        c.depth = settings.depth;
        c.width = settings.width;
        c.seed = seed;
        c
    }
}

impl fmt::Display for SynthRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Grid settings; the defaults are a 10-node Barabási–Albert graph with
/// `m = 2`, 32 features, 300 layers and 5 seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSettings {
    pub nodes: usize,
    pub attach: usize,
    pub width: usize,
    pub depth: usize,
    pub seeds: usize,
    pub criterion: DecayCriterion,
}

impl Default for SynthSettings {
    fn default() -> Self {
        Self {
            nodes: 10,
            attach: 2,
            width: 32,
            depth: 300,
            seeds: 5,
            criterion: DecayCriterion::default(),
        }
    }
}

/// Metric reports of one rollout in the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthRun {
    pub row: String,
    pub seed_index: usize,
    pub reports: Vec<MetricReport>,
    pub truncated_at: Option<usize>,
    /// One verdict per entry of [`Metric::ALL`].
    pub verdicts: Vec<DecayVerdict>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthRowResult {
    pub row: SynthRow,
    pub runs: Vec<SynthRun>,
    /// Majority verdict per entry of [`Metric::ALL`].
    pub majority: [bool; 7],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthTable {
    pub settings: SynthSettings,
    pub rows: Vec<SynthRowResult>,
}

impl SynthTable {
    /// `(row, metric, decayed)` triples in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (String, Metric, bool)> + '_ {
        self.rows.iter().flat_map(|r| {
            let name = r.row.name();
            Metric::ALL
                .iter()
                .zip(r.majority)
                .map(move |(&m, v)| (name.clone(), m, v))
        })
    }
}

/// Graph and rollout seed used for seed index `k` of a grid row.
pub fn synth_instance(settings: &SynthSettings, row_index: usize, k: usize) -> Result<(Graph, u64)> {
    let graph = barabasi_albert(settings.nodes, settings.attach, k as u64)?;
    Ok((graph, derive_seed(k as u64, row_index as u64)))
}

/// Rolls out every row for every seed and takes the majority verdict per
/// metric.
pub fn synth_table(rows: &[SynthRow], settings: &SynthSettings) -> Result<SynthTable> {
    if settings.seeds == 0 {
        return Err(Error::InvalidParameter("at least one seed is required".into()));
    }
    let canonical = SynthRow::all();
    let mut results = Vec::with_capacity(rows.len());
    for row in rows {
        let row_index = canonical.iter().position(|r| r == row).unwrap_or(0);
        let mut runs = Vec::with_capacity(settings.seeds);
        for k in 0..settings.seeds {
            let (graph, seed) = synth_instance(settings, row_index, k)?;
            let trace = rollout_with_metrics(&row.config(graph, settings, seed))?;
            let verdicts = Metric::ALL
                .iter()
                .map(|&m| {
                    let mut v = decay_classify(&metric_series(&trace.reports, m), DecayKind::of(m), &settings.criterion)?;
                    v.label = m.name().to_string();
                    Ok(v)
                })
                .collect::<Result<Vec<_>>>()?;
            runs.push(SynthRun {
                row: row.name(),
                seed_index: k,
                reports: trace.reports,
                truncated_at: trace.truncated_at,
                verdicts,
            });
        }
        let mut majority = [false; 7];
        for (idx, slot) in majority.iter_mut().enumerate() {
            let votes = runs.iter().filter(|r| r.verdicts[idx].decayed).count();
            *slot = 2 * votes > runs.len();
        }
        results.push(SynthRowResult {
            row: *row,
            runs,
            majority,
        });
    }
    Ok(SynthTable {
        settings: settings.clone(),
        rows: results,
    })
}

/// One of the four toy feature configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyScenario {
    pub name: &'static str,
    pub features: DenseMatrix,
    pub u: Vec<f64>,
    pub report: MetricReport,
}

pub const TOY_NODES: usize = 50;

/// Builds the four 50-node, 2-feature scenarios on a Barabási–Albert graph:
/// one shared vector everywhere; positive multiples of it; the same with one
/// outlier row; and i.i.d. uniform rows. In every case `u` is the normalized
/// first feature column.
pub fn toy_scenarios(seed: u64) -> Result<Vec<ToyScenario>> {
    let graph = barabasi_albert(TOY_NODES, 2, seed)?;
    let mut rng = Xoshiro256pp::seed_from_u64(derive_seed(seed, 1));
    let angle = std::f64::consts::FRAC_PI_2 * rng.next_f64_open0().min(1.0 - 1e-9);
    let shared = [angle.cos(), angle.sin()];
    let multipliers: Vec<f64> = (0..TOY_NODES).map(|_| 0.1 + 0.9 * rng.next_f64()).collect();
    let outlier_row = (rng.next_u64() % TOY_NODES as u64) as usize;
    let outlier = [rng.next_f64_open0(), rng.next_f64_open0()];

    let constant = DenseMatrix::from_fn(TOY_NODES, 2, |_, j| shared[j]);
    let multiples = DenseMatrix::from_fn(TOY_NODES, 2, |i, j| multipliers[i] * shared[j]);
    let mut with_outlier = multiples.clone();
    with_outlier.row_mut(outlier_row).copy_from_slice(&outlier);
    let uniform = DenseMatrix::from_fn(TOY_NODES, 2, |_, _| rng.next_f64_open0());

    [
        ("constant", constant),
        ("multiples", multiples),
        ("outlier", with_outlier),
        ("uniform", uniform),
    ]
    .into_iter()
    .map(|(name, features)| {
        let col = features.column(0);
        let norm = dot(&col, &col).sqrt();
        let u: Vec<f64> = col.iter().map(|v| v / norm).collect();
        let report = metric_suite(&features, &graph, &u)?;
        Ok(ToyScenario { name, features, u, report })
    })
    .collect()
}

/// Measured and predicted linear convergence rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCheck {
    pub measured: f64,
    pub predicted: f64,
    /// Number of layers that entered the least-squares fit.
    pub fitted_layers: usize,
}

impl RateCheck {
    pub fn relative_error(&self) -> f64 {
        (self.measured - self.predicted).abs() / self.predicted
    }
}

/// Signed uniform weights with unit expected row energy, `U(−√(3/d), √(3/d))`.
pub fn default_rate_scheme(width: usize) -> WeightScheme {
    WeightScheme::UniformSigned {
        scale: (3.0 / width as f64).sqrt(),
    }
}

/// Linear GCN on the symmetric-normalized adjacency of `graph`.
pub fn rate_check(graph: &Graph, width: usize, depth: usize, scheme: WeightScheme, seed: u64) -> Result<RateCheck> {
    gcn_dominant_eigenvector(graph)?;
    rate_check_matrix(&sym_norm_adjacency(graph), width, depth, scheme, seed)
}

/// Runs `X ← A X W` with fresh invertible `W` each layer and fits
/// `rₗ = ‖(I−P)X‖_F / ‖PX‖_F ≈ c·ρˡ` over layers `[depth/2, depth]`, where
/// `P = uuᵀ` projects on the dominant eigenvector of the symmetric `A`.
///
/// The two components are propagated separately and renormalized every
/// layer so the ratio is not swamped by roundoff in `X`.
pub fn rate_check_matrix(a: &DenseMatrix, width: usize, depth: usize, scheme: WeightScheme, seed: u64) -> Result<RateCheck> {
    if !a.is_square() || !a.is_symmetric(1e-12) {
        return Err(Error::InvalidParameter("rate check needs a symmetric matrix".into()));
    }
    if depth < 2 || width == 0 {
        return Err(Error::InvalidParameter("rate check needs depth ≥ 2 and width ≥ 1".into()));
    }
    scheme.validate()?;
    let predicted = spectral_gap(a)?;
    let u = power_iteration(a, POWER_TOL, POWER_MAX_ITER)?.vector;
    let n = a.rows();
    let project = |m: &DenseMatrix| DenseMatrix::outer(&u, &m.vec_mat(&u).unwrap());

    let mut rng = Xoshiro256pp::seed_from_u64(seed);
    let x = DenseMatrix::from_fn(n, width, |_, _| rng.next_f64_open0());
    let mut y = project(&x);
    let mut z = x.sub(&y)?;

    let start = depth / 2;
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut underflowed = false;
    for layer in 1..=depth {
        let w = sample_invertible(scheme, width, &mut rng)?;
        y = a.matmul(&y)?.matmul(&w)?;
        z = a.matmul(&z)?.matmul(&w)?;
        z = z.sub(&project(&z))?;
        y = project(&y);
        let c = frobenius_norm(&y);
        if !(c > 0.0) {
            return Err(Error::DegenerateSpectrum("dominant component vanished".into()));
        }
        y = y.scale(1.0 / c);
        z = z.scale(1.0 / c);
        let ratio = frobenius_norm(&z);
        if !(ratio >= RATIO_UNDERFLOW) {
            underflowed = true;
            break;
        }
        if layer >= start {
            points.push((layer as f64, ratio.ln()));
        }
    }

    if points.len() < 2 {
        if underflowed && points.is_empty() {
            return Ok(RateCheck { measured: 0.0, predicted, fitted_layers: 0 });
        }
        return Err(Error::RatioUnderflow);
    }
    Ok(RateCheck {
        measured: ols_slope(&points).exp(),
        predicted,
        fitted_layers: points.len(),
    })
}

fn sample_invertible(scheme: WeightScheme, width: usize, rng: &mut Xoshiro256pp) -> Result<DenseMatrix> {
    if scheme == WeightScheme::Identity {
        return Ok(DenseMatrix::identity(width));
    }
    for _ in 0..1000 {
        let w = scheme.sample_matrix(width, width, rng);
        if determinant(&w)?.abs() >= SINGULAR_DET {
            return Ok(w);
        }
    }
    Err(Error::InvalidParameter("could not sample an invertible weight matrix".into()))
}

fn ols_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_examples() {
        let geo: Vec<f64> = (0..=300).map(|l| 0.9f64.powi(l)).collect();
        let v = decay_classify(&geo, DecayKind::EnergyLike, &DecayCriterion::strict()).unwrap();
        assert!(v.decayed);
        assert!(v.crossing_layer.is_some());
        let flat = vec![1.0; 301];
        for c in [DecayCriterion::default(), DecayCriterion::strict()] {
            assert!(!decay_classify(&flat, DecayKind::EnergyLike, &c).unwrap().decayed);
            assert!(!decay_classify(&flat, DecayKind::RankMinusOne, &c).unwrap().decayed);
        }
        assert_eq!(
            decay_classify(&[1.0; 19], DecayKind::EnergyLike, &DecayCriterion::default()),
            Err(Error::SeriesTooShort { len: 19, min: 20 })
        );
    }

    #[test]
    fn classify_thresholds() {
        let c = DecayCriterion::default();
        // rank plateau at 1e-4 after starting at 1e-2 is not three orders down
        let mut s = vec![1e-2; 40];
        s[20..].iter_mut().for_each(|v| *v = 1e-4);
        assert!(!decay_classify(&s, DecayKind::RankMinusOne, &c).unwrap().decayed);
        assert!(decay_classify(&s, DecayKind::RankMinusOne, &DecayCriterion::strict()).unwrap().decayed);
        // energies: floor applies when layer 1 is already tiny
        let s = vec![1e-14; 30];
        assert!(decay_classify(&s, DecayKind::EnergyLike, &c).unwrap().decayed);
        // NaN entries are ignored
        let mut s = vec![1.0; 30];
        s[29] = f64::NAN;
        s[25] = 1e-9;
        let v = decay_classify(&s, DecayKind::EnergyLike, &c).unwrap();
        assert!(v.decayed);
        assert_eq!(v.crossing_layer, Some(25));
    }

    #[test]
    fn twelve_named_rows() {
        let rows = SynthRow::all();
        assert_eq!(rows.len(), 12);
        assert_eq!(rows[0].name(), "gcn-lrelu-identity");
        assert_eq!(rows[11].name(), "gat-tanh-large");
        for r in &rows {
            assert_eq!(SynthRow::from_name(&r.name()), Some(*r));
        }
        assert_eq!(SynthRow::from_name("gcn-relu-small"), None);
    }

    #[test]
    fn toy_examples() {
        let s = toy_scenarios(0).unwrap();
        let names: Vec<_> = s.iter().map(|t| t.name).collect();
        assert_eq!(names, ["constant", "multiples", "outlier", "uniform"]);
        let one = &s[0].report;
        assert!(one.e_dir <= 1e-12 && one.e_proj <= 1e-12);
        assert!(one.mad.unwrap() <= 1e-12);
        assert_eq!(one.num_rank, Some(1.0));
        assert_eq!(one.erank, Some(1.0));
        let two = &s[1].report;
        assert!(two.e_dir <= 1e-12 && two.e_proj <= 1e-12);
        assert_eq!(two.num_rank, Some(1.0));
        assert!(s[2].report.mad.unwrap() > 0.0);
        assert!(s[3].report.erank.unwrap() > s[2].report.erank.unwrap());
        assert!(s[2].report.erank.unwrap() > 1.0);
    }

    #[test]
    fn rate_on_diagonal_matrix() {
        let a = DenseMatrix::from_diag(&[1.0, 0.5]);
        let r = rate_check_matrix(&a, 1, 100, WeightScheme::Identity, 0).unwrap();
        assert!((r.predicted - 0.5).abs() < 1e-10);
        assert!((r.measured - 0.5).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn rate_on_rank_one_matrix() {
        let u = [0.6, 0.8];
        let a = DenseMatrix::outer(&u, &u);
        let r = rate_check_matrix(&a, 3, 50, WeightScheme::Identity, 1).unwrap();
        assert!(r.measured < 1e-12, "{r:?}");
    }

    #[test]
    fn rate_rejects_asymmetric() {
        let a = DenseMatrix::from_rows(&[[0.0, 1.0], [0.5, 0.5]]).unwrap();
        assert!(rate_check_matrix(&a, 2, 10, WeightScheme::Identity, 0).is_err());
    }

    #[test]
    fn rate_on_small_graph() {
        let g = barabasi_albert(10, 2, 3).unwrap();
        let r = rate_check(&g, 32, 200, default_rate_scheme(32), 3).unwrap();
        assert!(r.relative_error() <= 0.1, "{r:?}");
    }
}
