use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use oversmooth::experiments::{
    default_rate_scheme, rate_check, synth_table, toy_scenarios, DecayCriterion, SynthRow, SynthSettings,
};
use oversmooth::graph::{barabasi_albert, constant_unit_vector, gcn_dominant_eigenvector, Graph};
use oversmooth::hilbert::{contraction_ratio, ConeVector};
use oversmooth::metrics::metric_suite;
use oversmooth::pipeline::{
    self, correlate, load_manifest, load_matrix, load_vector, report_csv_line, synth_traces, write_report,
    MatrixFormat, NamedTrace, REPORT_HEADER,
};
use oversmooth::propagate::{rollout_with_metrics, ActivationKind, Arch, PropagationConfig, WeightScheme};
use oversmooth::{Error, Result};

#[derive(Parser)]
#[command(name = "oversmooth", version, about = "Oversmoothing metrics and synthetic GNN studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decay grid over the twelve synthetic architectures.
    Synth(SynthArgs),
    /// Metric reports for the four toy feature scenarios.
    Toy {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Single rollout with per-layer metrics.
    Rollout(RolloutArgs),
    /// Metric report for one feature matrix.
    Metrics {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        /// `gcn`, `const`, or a vector file.
        #[arg(long, default_value = "gcn")]
        u: String,
    },
    /// Pearson correlation of log-metrics against accuracy.
    Correlate {
        /// Glob matching JSON run manifests.
        #[arg(long)]
        manifests: String,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measured against predicted linear convergence rate.
    Rate {
        #[arg(long, value_parser = parse_ba, default_value = "10,2")]
        ba: (usize, usize),
        #[arg(long, default_value_t = 200)]
        depth: usize,
        #[arg(long, default_value_t = 32)]
        width: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sampled Hilbert-metric contraction ratio of a nonnegative matrix.
    Contraction {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        u: PathBuf,
        #[arg(long, default_value_t = std::f64::consts::LN_10)]
        cap: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct SynthArgs {
    /// `all` or a row name such as `gcn-lrelu-identity`.
    #[arg(long, default_value = "all")]
    rows: String,
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    #[arg(long, default_value_t = 300)]
    depth: usize,
    /// Six orders of magnitude for energies and a bare 1e-2 for ranks.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchArg {
    Gcn,
    Gat,
}

#[derive(Clone, Copy, ValueEnum)]
enum ActArg {
    Lrelu,
    Tanh,
    Identity,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightsArg {
    Identity,
    UniformNonneg,
    UniformSigned,
}

#[derive(Args)]
struct RolloutArgs {
    #[arg(long, conflicts_with = "ba")]
    graph: Option<PathBuf>,
    #[arg(long, value_parser = parse_ba)]
    ba: Option<(usize, usize)>,
    #[arg(long, value_enum, default_value = "gcn")]
    arch: ArchArg,
    #[arg(long, value_enum, default_value = "lrelu")]
    act: ActArg,
    #[arg(long, value_enum, default_value = "identity")]
    weights: WeightsArg,
    #[arg(long, default_value_t = 0.1)]
    scale: f64,
    #[arg(long, default_value_t = 300)]
    depth: usize,
    #[arg(long, default_value_t = 32)]
    width: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    bias: bool,
    #[arg(long)]
    residual: bool,
    #[arg(long)]
    out: PathBuf,
}

fn parse_ba(s: &str) -> std::result::Result<(usize, usize), String> {
    let (n, m) = s.split_once(',').ok_or("expected n,m")?;
    let n = n.trim().parse().map_err(|_| format!("bad node count {n:?}"))?;
    let m = m.trim().parse().map_err(|_| format!("bad attachment count {m:?}"))?;
    Ok((n, m))
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(args) => synth(args),
        Command::Toy { seed, out } => toy(seed, &out),
        Command::Rollout(args) => rollout(args),
        Command::Metrics { features, graph, u } => metrics(&features, &graph, &u),
        Command::Correlate { manifests, graph, out } => correlate_cmd(&manifests, &graph, &out),
        Command::Rate { ba, depth, width, seed } => {
            let graph = barabasi_albert(ba.0, ba.1, seed)?;
            let r = rate_check(&graph, width, depth, default_rate_scheme(width), seed)?;
            println!("measured,predicted,relative_error");
            println!(
                "{},{},{}",
                pipeline::format_f64(r.measured),
                pipeline::format_f64(r.predicted),
                pipeline::format_f64(r.relative_error())
            );
            Ok(())
        }
        Command::Contraction { matrix, u, cap, samples, seed } => {
            let a = load_matrix(&matrix, MatrixFormat::from_path(&matrix))?;
            let u = ConeVector::new(load_vector(&u)?)?;
            println!("{}", pipeline::format_f64(contraction_ratio(&a, &u, cap, samples, seed)?));
            Ok(())
        }
    }
}

fn synth(args: SynthArgs) -> Result<()> {
    let rows = if args.rows == "all" {
        SynthRow::all()
    } else {
        vec![SynthRow::from_name(&args.rows)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown row {:?}", args.rows)))?]
    };
    let settings = SynthSettings {
        seeds: args.seeds,
        depth: args.depth,
        criterion: if args.strict { DecayCriterion::strict() } else { DecayCriterion::default() },
        ..SynthSettings::default()
    };
    let table = synth_table(&rows, &settings)?;
    write_report(None, Some(&table), &synth_traces(&table), &args.out)?;
    for r in &table.rows {
        let marks: String = r.majority.iter().map(|&d| if d { '1' } else { '0' }).collect();
        println!("{:<20} {marks}", r.row.name());
    }
    Ok(())
}

fn toy(seed: u64, out: &Path) -> Result<()> {
    let scenarios = toy_scenarios(seed)?;
    let mut csv = format!("scenario,{REPORT_HEADER}\n");
    for s in &scenarios {
        csv.push_str(&format!("{},{}\n", s.name, report_csv_line(&s.report)));
    }
    fs::create_dir_all(out).map_err(|e| Error::Io { path: out.into(), message: e.to_string() })?;
    let path = out.join("toy.csv");
    fs::write(&path, &csv).map_err(|e| Error::Io { path: path.clone(), message: e.to_string() })?;
    print!("{csv}");
    Ok(())
}

fn rollout(args: RolloutArgs) -> Result<()> {
    let graph = match (&args.graph, args.ba) {
        (Some(path), _) => Graph::read_grf(path)?,
        (None, Some((n, m))) => barabasi_albert(n, m, args.seed)?,
        (None, None) => barabasi_albert(10, 2, args.seed)?,
    };
    let arch = match args.arch {
        ArchArg::Gcn => Arch::Gcn,
        ArchArg::Gat => Arch::gat(),
    };
    let mut config = PropagationConfig::new(graph, arch);
    config.activation = match args.act {
        ActArg::Lrelu => ActivationKind::leaky_relu(),
        ActArg::Tanh => ActivationKind::Tanh,
        ActArg::Identity => ActivationKind::Identity,
    };
    config.weights = match args.weights {
        WeightsArg::Identity => WeightScheme::Identity,
        WeightsArg::UniformNonneg => WeightScheme::UniformNonneg { scale: args.scale },
        WeightsArg::UniformSigned => WeightScheme::UniformSigned { scale: args.scale },
    };
    config.depth = args.depth;
    config.width = args.width;
    config.seed = args.seed;
    config.use_bias = args.bias;
    config.use_residual = args.residual;
    let trace = rollout_with_metrics(&config)?;
    let named = NamedTrace {
        name: "rollout".into(),
        reports: trace.reports.clone(),
    };
    write_report(None, None, &[named], &args.out)?;
    pipeline::write_matrix(
        args.out.join("features_last.dmat"),
        trace.features.last().expect("rollout keeps layer 0"),
        MatrixFormat::Dmat,
    )?;
    if let Some(layer) = trace.truncated_at {
        eprintln!("warning: features overflowed at layer {layer}; trace truncated");
    }
    println!("{} layers written to {}", trace.reports.len(), args.out.display());
    Ok(())
}

fn metrics(features: &Path, graph: &Path, u: &str) -> Result<()> {
    let x = load_matrix(features, MatrixFormat::from_path(features))?;
    let g = Graph::read_grf(graph)?;
    let u = match u {
        "gcn" => gcn_dominant_eigenvector(&g)?,
        "const" => constant_unit_vector(g.node_count()),
        path => {
            let v = load_vector(path)?;
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        }
    };
    let report = metric_suite(&x, &g, &u)?;
    println!("{REPORT_HEADER}");
    println!("{}", report_csv_line(&report));
    Ok(())
}

fn correlate_cmd(pattern: &str, graph: &Path, out: &Path) -> Result<()> {
    let paths = glob::glob(pattern)
        .map_err(|e| Error::InvalidParameter(format!("bad glob {pattern:?}: {e}")))?
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Io { path: e.path().into(), message: e.error().to_string() })?;
    let manifests = paths.iter().map(load_manifest).collect::<Result<Vec<_>>>()?;
    let g = Graph::read_grf(graph)?;
    let report = correlate(&manifests, &g)?;
    write_report(Some(&report), None, &[], out)?;
    print!("{}", pipeline::correlations_csv(&report));
    println!("accuracy_ratio,{}", pipeline::format_f64(report.accuracy_ratio));
    Ok(())
}
