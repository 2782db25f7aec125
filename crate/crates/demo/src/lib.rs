//! WebAssembly bindings for the browser demo.
//!
//! Each exported function is a thin wrapper over a plain Rust function that
//! returns a JSON string, so the logic is testable without a JS host.

use oversmooth::experiments::{toy_scenarios, SynthRow, SynthSettings};
use oversmooth::graph::barabasi_albert;
use oversmooth::hilbert::{contraction_ratio, hilbert_distance, sample_cone_point, ConeVector};
use oversmooth::linalg::DenseMatrix;
use oversmooth::metrics::{Metric, MetricReport};
use oversmooth::propagate::rollout_with_metrics;
use oversmooth::rng::Xoshiro256pp;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

pub const MAX_NODES: usize = 500;
pub const MAX_DEPTH: usize = 1000;
pub const MAX_SAMPLES: usize = 20_000;

fn metric_values(report: &MetricReport) -> Value {
    Metric::ALL
        .iter()
        .map(|&m| (m.name().to_string(), json!(report.get(m).filter(|v| v.is_finite()))))
        .collect::<serde_json::Map<_, _>>()
        .into()
}

/// Per-layer metric series for one synthetic row on a BA(nodes, 2) graph.
pub fn rollout_series(row: &str, nodes: usize, depth: usize, seed: u64) -> oversmooth::Result<String> {
    let row = SynthRow::from_name(row)
        .ok_or_else(|| oversmooth::Error::InvalidParameter(format!("unknown row {row:?}")))?;
    if nodes > MAX_NODES || depth > MAX_DEPTH {
        return Err(oversmooth::Error::InvalidParameter(format!(
            "demo limits: nodes <= {MAX_NODES}, depth <= {MAX_DEPTH}"
        )));
    }
    let settings = SynthSettings { nodes, depth, ..SynthSettings::default() };
    let graph = barabasi_albert(nodes, settings.attach, seed)?;
    let trace = rollout_with_metrics(&row.config(graph, &settings, seed))?;
    let series: serde_json::Map<_, _> = Metric::ALL
        .iter()
        .map(|&m| {
            let values: Vec<Value> = trace
                .reports
                .iter()
                .map(|r| json!(r.get(m).filter(|v| v.is_finite())))
                .collect();
            (m.name().to_string(), Value::Array(values))
        })
        .collect();
    Ok(json!({
        "row": row.name(),
        "layers": trace.reports.len(),
        "truncated_at": trace.truncated_at,
        "series": series,
        "frob_norm": trace.reports.iter().map(|r| r.frob_norm).collect::<Vec<_>>(),
    })
    .to_string())
}

/// Feature points and metrics of the four toy scenarios.
pub fn toy_points(seed: u64) -> oversmooth::Result<String> {
    let scenarios = toy_scenarios(seed)?
        .iter()
        .map(|s| {
            let points: Vec<[f64; 2]> = (0..s.features.rows())
                .map(|i| [s.features[(i, 0)], s.features[(i, 1)]])
                .collect();
            json!({ "name": s.name, "points": points, "metrics": metric_values(&s.report) })
        })
        .collect::<Vec<_>>();
    Ok(json!({ "seed": seed, "scenarios": scenarios }).to_string())
}

/// Sampled `(d_H(x, u), d_H(Ax, u))` pairs for `A = [[0, 1], [1/2, 1/2]]`,
/// `u = (1, 1)`, plus the worst-case ratio over the samples.
pub fn contraction_samples(cap: f64, samples: usize, seed: u64) -> oversmooth::Result<String> {
    if samples == 0 || samples > MAX_SAMPLES {
        return Err(oversmooth::Error::InvalidParameter(format!("samples must be in 1..={MAX_SAMPLES}")));
    }
    let a = DenseMatrix::from_rows(&[[0.0, 1.0], [0.5, 0.5]])?;
    let u = ConeVector::new(vec![1.0, 1.0])?;
    let ratio = contraction_ratio(&a, &u, cap, samples, seed)?;
    let mut rng = Xoshiro256pp::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x = ConeVector::new(sample_cone_point(&u, cap, &mut rng))?;
        let ax = ConeVector::new(a.mat_vec(x.as_slice())?)?;
        pairs.push([hilbert_distance(&x, &u)?, hilbert_distance(&ax, &u)?]);
    }
    Ok(json!({ "cap": cap, "ratio": ratio, "pairs": pairs }).to_string())
}

fn to_js(r: oversmooth::Result<String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = rolloutSeries)]
pub fn rollout_series_js(row: &str, nodes: usize, depth: usize, seed: u32) -> Result<String, JsError> {
    to_js(rollout_series(row, nodes, depth, seed.into()))
}

#[wasm_bindgen(js_name = toyPoints)]
pub fn toy_points_js(seed: u32) -> Result<String, JsError> {
    to_js(toy_points(seed.into()))
}

#[wasm_bindgen(js_name = contractionSamples)]
pub fn contraction_samples_js(cap: f64, samples: usize, seed: u32) -> Result<String, JsError> {
    to_js(contraction_samples(cap, samples, seed.into()))
}

#[wasm_bindgen(js_name = rowNames)]
pub fn row_names() -> Vec<String> {
    SynthRow::all().iter().map(SynthRow::name).collect()
}
