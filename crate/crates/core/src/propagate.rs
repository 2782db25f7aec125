//! GCN and GAT forward propagation with untrained, randomly sampled weights.

use crate::error::{Error, Result};
use crate::graph::{constant_unit_vector, gcn_dominant_eigenvector, sym_norm_adjacency, Graph};
use crate::linalg::DenseMatrix;
use crate::metrics::{metric_suite, MetricReport};
use crate::rng::Xoshiro256pp;

/// Feature entries beyond this magnitude end a rollout.
pub const OVERFLOW_LIMIT: f64 = 1e300;

/// Pointwise activation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationKind {
    /// `x` for `x ≥ 0`, `alpha·x` otherwise; `alpha ∈ (0, 1)`.
    LeakyRelu { alpha: f64 },
    Tanh,
    Identity,
}

impl ActivationKind {
    pub const DEFAULT_LEAKY_ALPHA: f64 = 0.01;

    pub fn leaky_relu() -> Self {
        ActivationKind::LeakyRelu {
            alpha: Self::DEFAULT_LEAKY_ALPHA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ActivationKind::LeakyRelu { alpha } if !(alpha > 0.0 && alpha < 1.0) => Err(
                Error::InvalidParameter(format!("LeakyReLU slope {alpha} outside (0, 1)")),
            ),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            ActivationKind::LeakyRelu { alpha } => leaky_relu(x, alpha),
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Identity => x,
        }
    }

    pub fn apply_slice(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.apply(x)).collect()
    }
}

#[inline]
fn leaky_relu(x: f64, alpha: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        alpha * x
    }
}

/// Distribution of the per-layer weight matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightScheme {
    Identity,
    /// Entries i.i.d. `U(0, scale)`.
    UniformNonneg { scale: f64 },
    /// Entries i.i.d. `U(−scale, scale)`.
    UniformSigned { scale: f64 },
}

impl WeightScheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightScheme::UniformNonneg { scale } | WeightScheme::UniformSigned { scale }
                if !(scale > 0.0 && scale.is_finite()) =>
            {
                Err(Error::InvalidParameter(format!("weight scale {scale} must be positive")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        !matches!(self, WeightScheme::UniformSigned { .. })
    }

    pub fn sample_matrix(&self, rows: usize, cols: usize, rng: &mut Xoshiro256pp) -> DenseMatrix {
        match *self {
            WeightScheme::Identity => DenseMatrix::from_fn(rows, cols, |i, j| if i == j { 1.0 } else { 0.0 }),
            WeightScheme::UniformNonneg { scale } => {
                DenseMatrix::from_fn(rows, cols, |_, _| rng.uniform(0.0, scale))
            }
            WeightScheme::UniformSigned { scale } => {
                DenseMatrix::from_fn(rows, cols, |_, _| rng.uniform(-scale, scale))
            }
        }
    }

    /// Attention parameters and biases. The identity scheme has no scale of
    /// its own and uses `U(0, 1/len)`.
    pub fn sample_vector(&self, len: usize, rng: &mut Xoshiro256pp) -> Vec<f64> {
        let (lo, hi) = match *self {
            WeightScheme::Identity => (0.0, 1.0 / len as f64),
            WeightScheme::UniformNonneg { scale } => (0.0, scale),
            WeightScheme::UniformSigned { scale } => (-scale, scale),
        };
        (0..len).map(|_| rng.uniform(lo, hi)).collect()
    }
}

/// Message-passing architecture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arch {
    /// Fixed symmetric-normalized adjacency.
    Gcn,
    /// Attention recomputed every layer; `leaky_alpha` is the slope inside
    /// the attention scores.
    Gat { leaky_alpha: f64 },
}

impl Arch {
    pub const DEFAULT_ATTENTION_ALPHA: f64 = 0.2;

    pub fn gat() -> Self {
        Arch::Gat {
            leaky_alpha: Self::DEFAULT_ATTENTION_ALPHA,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Arch::Gcn => "gcn",
            Arch::Gat { .. } => "gat",
        }
    }
}

/// Initial features.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureInit {
    /// Entries i.i.d. uniform on `(0, 1]`.
    UniformPositive,
    FromMatrix(DenseMatrix),
}

/// Everything needed to reproduce one rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationConfig {
    pub graph: Graph,
    pub arch: Arch,
    pub activation: ActivationKind,
    pub weights: WeightScheme,
    /// Draw a fresh weight matrix at every layer instead of reusing one.
    pub resample_weights: bool,
    /// GAT only: draw fresh attention vectors at every layer.
    pub resample_attention: bool,
    pub depth: usize,
    pub width: usize,
    pub seed: u64,
    pub use_bias: bool,
    pub use_residual: bool,
    pub init: FeatureInit,
}

impl PropagationConfig {
    /// LeakyReLU, identity weights, 300 layers of width 32, seed 0.
    pub fn new(graph: Graph, arch: Arch) -> Self {
        Self {
            graph,
            arch,
            activation: ActivationKind::leaky_relu(),
            weights: WeightScheme::Identity,
            resample_weights: true,
            resample_attention: true,
            depth: 300,
            width: 32,
            seed: 0,
            use_bias: false,
            use_residual: false,
            init: FeatureInit::UniformPositive,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.width == 0 {
            return Err(Error::InvalidParameter("depth and width must be at least 1".into()));
        }
        self.activation.validate()?;
        self.weights.validate()?;
        if let Arch::Gat { leaky_alpha } = self.arch {
            if !(leaky_alpha > 0.0 && leaky_alpha < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "attention slope {leaky_alpha} outside (0, 1)"
                )));
            }
        }
        if let FeatureInit::FromMatrix(m) = &self.init {
            if m.shape() != (self.graph.node_count(), self.width) {
                return Err(Error::shape(format!(
                    "initial features {:?}, expected {}x{}",
                    m.shape(),
                    self.graph.node_count(),
                    self.width
                )));
            }
        }
        Ok(())
    }

    /// True when the nonnegative-cone hypotheses hold: strictly positive
    /// initial features, nonnegative weights, no signed bias or residual.
    pub fn satisfies_cone_preconditions(&self) -> bool {
        let init_positive = match &self.init {
            FeatureInit::UniformPositive => true,
            FeatureInit::FromMatrix(m) => m.min_entry() > 0.0,
        };
        init_positive && self.weights.is_nonnegative()
    }

    /// Dominant eigenvector used for this architecture's metrics:
    /// `√(1+dᵢ)` for GCN, constant for GAT.
    pub fn dominant_vector(&self) -> Result<Vec<f64>> {
        match self.arch {
            Arch::Gcn => gcn_dominant_eigenvector(&self.graph),
            Arch::Gat { .. } => Ok(constant_unit_vector(self.graph.node_count())),
        }
    }
}

/// Features and metric reports for layers `0..=depth`. When features blow
/// past [`OVERFLOW_LIMIT`] the rollout stops and `truncated_at` records the
/// layer that overflowed; `features` then ends at the layer before.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    pub config: PropagationConfig,
    pub features: Vec<DenseMatrix>,
    pub reports: Vec<MetricReport>,
    pub truncated_at: Option<usize>,
}

impl LayerTrace {
    pub fn require_complete(&self) -> Result<()> {
        match self.truncated_at {
            Some(layer) => Err(Error::NumericalOverflow { layer }),
            None => Ok(()),
        }
    }
}

/// `σ(A X W + 1 biasᵀ) + X₀ W₂`, the bias and residual terms optional.
pub fn gcn_layer(
    a: &DenseMatrix,
    x: &DenseMatrix,
    w: &DenseMatrix,
    act: ActivationKind,
    bias: Option<&[f64]>,
    residual: Option<(&DenseMatrix, &DenseMatrix)>,
) -> Result<DenseMatrix> {
    if !a.is_square() || a.rows() != x.rows() {
        return Err(Error::shape(format!(
            "message-passing matrix {:?} for {} nodes",
            a.shape(),
            x.rows()
        )));
    }
    let mut out = a.matmul(x)?.matmul(w)?;
    if let Some(b) = bias {
        if b.len() != out.cols() {
            return Err(Error::shape(format!("bias of length {} for {} features", b.len(), out.cols())));
        }
        for i in 0..out.rows() {
            out.row_mut(i).iter_mut().zip(b).for_each(|(o, bj)| *o += bj);
        }
    }
    let mut out = out.map(|v| act.apply(v));
    if let Some((x0, w2)) = residual {
        if x0.rows() != x.rows() {
            return Err(Error::shape("residual features have a different node count"));
        }
        out = out.add(&x0.matmul(w2)?)?;
    }
    Ok(out)
}

/// Row-stochastic attention over closed neighborhoods:
/// `softmax_j LeakyReLU(p₁ᵀWᵀXᵢ + p₂ᵀWᵀXⱼ)` for `j = i` or `(i, j) ∈ E`.
pub fn gat_attention(
    x: &DenseMatrix,
    w: &DenseMatrix,
    p1: &[f64],
    p2: &[f64],
    g: &Graph,
    leaky_alpha: f64,
) -> Result<DenseMatrix> {
    let n = g.node_count();
    if x.rows() != n {
        return Err(Error::shape(format!("{} feature rows for {n} nodes", x.rows())));
    }
    if p1.len() != w.cols() || p2.len() != w.cols() {
        return Err(Error::shape(format!(
            "attention vectors of length {}/{} for {} hidden features",
            p1.len(),
            p2.len(),
            w.cols()
        )));
    }
    let h = x.matmul(w)?;
    let src = h.mat_vec(p1)?;
    let dst = h.mat_vec(p2)?;
    let mut att = DenseMatrix::zeros(n, n);
    let mut support = Vec::new();
    for i in 0..n {
        support.clear();
        support.push(i);
        support.extend_from_slice(g.neighbors(i));
        let scores: Vec<f64> = support
            .iter()
            .map(|&j| leaky_relu(src[i] + dst[j], leaky_alpha))
            .collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        for (&j, e) in support.iter().zip(exps) {
            att[(i, j)] = e / total;
        }
    }
    Ok(att)
}

/// Runs `config.depth` layers and evaluates `hook` on every layer's features.
///
/// Random draws happen in a fixed order: initial features (row-major), then
/// per layer the weight matrix, the two attention vectors (GAT), the bias and
/// the residual weight matrix, each only when enabled.
pub fn rollout<F>(config: &PropagationConfig, mut hook: F) -> Result<LayerTrace>
where
    F: FnMut(&DenseMatrix) -> Result<MetricReport>,
{
    config.validate()?;
    let n = config.graph.node_count();
    let d = config.width;
    let mut rng = Xoshiro256pp::seed_from_u64(config.seed);

    let x0 = match &config.init {
        FeatureInit::UniformPositive => DenseMatrix::from_fn(n, d, |_, _| rng.next_f64_open0()),
        FeatureInit::FromMatrix(m) => m.clone(),
    };
    let gcn_adjacency = match config.arch {
        Arch::Gcn => Some(sym_norm_adjacency(&config.graph)),
        Arch::Gat { .. } => None,
    };

    let mut features = Vec::with_capacity(config.depth + 1);
    let mut reports = Vec::with_capacity(config.depth + 1);
    reports.push(hook(&x0)?);
    features.push(x0);

    let mut weight: Option<DenseMatrix> = None;
    let mut attention_vectors: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut truncated_at = None;

    for layer in 0..config.depth {
        if weight.is_none() || config.resample_weights {
            weight = Some(config.weights.sample_matrix(d, d, &mut rng));
        }
        let w = weight.as_ref().unwrap();
        let x = features.last().unwrap();

        let attention;
        let a = match config.arch {
            Arch::Gcn => gcn_adjacency.as_ref().unwrap(),
            Arch::Gat { leaky_alpha } => {
                if attention_vectors.is_none() || config.resample_attention {
                    let p1 = config.weights.sample_vector(d, &mut rng);
                    let p2 = config.weights.sample_vector(d, &mut rng);
                    attention_vectors = Some((p1, p2));
                }
                let (p1, p2) = attention_vectors.as_ref().unwrap();
                attention = gat_attention(x, w, p1, p2, &config.graph, leaky_alpha)?;
                &attention
            }
        };
        let bias = config
            .use_bias
            .then(|| config.weights.sample_vector(d, &mut rng));
        let residual_weight = config
            .use_residual
            .then(|| config.weights.sample_matrix(d, d, &mut rng));
        let residual = residual_weight.as_ref().map(|w2| (&features[0], w2));

        let next = gcn_layer(a, x, w, config.activation, bias.as_deref(), residual)?;
        if !next.is_finite() || next.max_abs() > OVERFLOW_LIMIT {
            truncated_at = Some(layer + 1);
            break;
        }
        reports.push(hook(&next)?);
        features.push(next);
    }

    Ok(LayerTrace {
        config: config.clone(),
        features,
        reports,
        truncated_at,
    })
}

/// [`rollout`] with the full metric suite evaluated against the
/// architecture's dominant eigenvector.
pub fn rollout_with_metrics(config: &PropagationConfig) -> Result<LayerTrace> {
    let u = config.dominant_vector()?;
    let graph = config.graph.clone();
    rollout(config, |x| metric_suite(x, &graph, &u))
}
