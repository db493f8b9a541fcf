use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pldsbm::evaluation::{
    clustering_error, degree_histogram, nmi_with, powerlaw_fit_histogram, Binning, EvalError, NmiNormalization,
    DEFAULT_LOG_BINS,
};
use pldsbm::generators::{sample, GenSpec, SpecError};
use pldsbm::graph::{load_edge_list, read_labels, write_edge_list, GraphError, LoadedGraph};
use pldsbm::harness::{
    assignment_csv_with_ids, degree_csv, read_text, run_experiment, slope_csv, write_text, ExperimentName,
    ExperimentSpec, HarnessError,
};
use pldsbm::inference::{fit, FitConfig, FitError, FitResult};
use pldsbm::model::LabeledAssignment;
use pldsbm::model_selection::select_k;
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(
    name = "pldsbm",
    version,
    about = "Power-law-degree block model: generate, fit, evaluate, reproduce"
)]
struct Cli {
    /// Root seed for generation and fitting.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for outputs whose path is not given explicitly.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// JSON file with the subcommand's configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a network from a generator spec.
    Generate(GenerateArgs),
    /// Fit the model (or the fixed-decay baseline) to an edge list.
    Fit(FitArgs),
    /// Score a predicted clustering against true labels.
    Eval(EvalArgs),
    /// Fit a range of cluster counts and score each by ICL.
    SelectK(SelectKArgs),
    /// Degree histogram and optional power-law fit.
    Degrees(DegreesArgs),
    /// Run a named experiment end to end.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Generator spec JSON (same as --config).
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Per-node decays, written for pld_sbm specs.
    #[arg(long)]
    delta: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, short = 'k')]
    k: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    step_delta: Option<f64>,
    #[arg(long)]
    step_b: Option<f64>,
    #[arg(long)]
    inner_iters: Option<usize>,
    /// Keep every decay at zero (classic block model).
    #[arg(long)]
    sbm_baseline: bool,
    /// Exact log(1 - b) for unlinked pairs; requires --sbm-baseline.
    #[arg(long)]
    exact_nonedge_log: bool,
    #[arg(long)]
    nonedge_sample: Option<usize>,
    /// Result JSON (default: <out-dir>/result.json).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Assignment CSV (default: <out-dir>/assignment.csv).
    #[arg(long)]
    assignment: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    Error,
    Nmi,
    Confusion,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Fit result JSON, or a labels file with one cluster per line.
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "error,nmi,confusion")]
    metrics: Vec<Metric>,
    #[arg(long, default_value = "arithmetic")]
    nmi_norm: NmiNormalization,
    /// Report JSON (default: <out-dir>/report.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelectKArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    k_min: usize,
    #[arg(long)]
    k_max: usize,
    /// True labels, to fill the error column.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    sbm_baseline: bool,
    #[arg(long)]
    nonedge_sample: Option<usize>,
    /// Sweep CSV (default: <out-dir>/sweep.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BinningArg {
    Raw,
    Log,
}

#[derive(Debug, Args)]
struct DegreesArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Histogram CSV (default: <out-dir>/degrees.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a power-law fit to this CSV.
    #[arg(long)]
    slope: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "log")]
    binning: BinningArg,
    #[arg(long, default_value_t = DEFAULT_LOG_BINS)]
    bins: usize,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    #[arg(long)]
    experiment: Option<ExperimentName>,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Use the synthetic stand-in for the adolescent network.
    #[arg(long)]
    synthetic: bool,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, short = 'k')]
    k: Option<usize>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    k_range: Option<Vec<usize>>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    nonedge_sample: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<HarnessError>() {
            return e.exit_code() as u8;
        }
        if let Some(e) = cause.downcast_ref::<FitError>() {
            return if matches!(e, FitError::NonFinite { .. }) { 4 } else { 2 };
        }
        if let Some(e) = cause.downcast_ref::<EvalError>() {
            return if matches!(e, EvalError::LengthMismatch { .. } | EvalError::Empty) {
                2
            } else {
                4
            };
        }
        if cause.is::<GraphError>() || cause.is::<SpecError>() || cause.is::<serde_json::Error>() {
            return 2;
        }
    }
    1
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            bail!(HarnessError::InvalidSpec {
                field: "threads",
                reason: "must be at least 1".into()
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let config = match &cli.config {
        Some(path) => Some(read_json(path)?),
        None => None,
    };
    let ctx = Ctx {
        seed: cli.seed,
        out_dir: cli.out_dir,
        config,
    };
    match cli.command {
        Command::Generate(args) => generate(&ctx, args),
        Command::Fit(args) => fit_cmd(&ctx, args),
        Command::Eval(args) => eval(&ctx, args),
        Command::SelectK(args) => select_k_cmd(&ctx, args),
        Command::Degrees(args) => degrees(&ctx, args),
        Command::Reproduce(args) => reproduce(&ctx, args),
    }
}

struct Ctx {
    seed: Option<u64>,
    out_dir: PathBuf,
    config: Option<Value>,
}

impl Ctx {
    fn output(&self, explicit: Option<PathBuf>, default_name: &str) -> Result<PathBuf> {
        let path = explicit.unwrap_or_else(|| self.out_dir.join(default_name));
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|source| HarnessError::Write {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        Ok(path)
    }

    /// The `--config` object with `overrides` merged on top.
    fn merged<T: serde::de::DeserializeOwned>(&self, base: Option<Value>, overrides: Value) -> Result<T> {
        let mut value = base.or_else(|| self.config.clone()).unwrap_or_else(|| json!({}));
        let Value::Object(map) = &mut value else {
            bail!(HarnessError::InvalidSpec {
                field: "config",
                reason: "must be a JSON object".into()
            });
        };
        if let Value::Object(extra) = overrides {
            for (k, v) in extra {
                if !v.is_null() {
                    map.insert(k, v);
                }
            }
        }
        serde_json::from_value(value).context("invalid configuration")
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = read_text(path)?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_graph(path: &Path) -> Result<LoadedGraph> {
    let text = read_text(path)?;
    let loaded = load_edge_list(&text).map_err(|source| HarnessError::Graph {
        path: path.to_path_buf(),
        source,
    })?;
    let r = &loaded.report;
    if r.self_loops_dropped + r.duplicates_collapsed > 0 {
        log::warn!(
            "{}: dropped {} self-loops, collapsed {} duplicate edges",
            path.display(),
            r.self_loops_dropped,
            r.duplicates_collapsed
        );
    }
    Ok(loaded)
}

fn load_assignment(path: &Path, n_nodes: Option<usize>) -> Result<LabeledAssignment> {
    let raw = read_labels(&read_text(path)?).map_err(|source| HarnessError::Graph {
        path: path.to_path_buf(),
        source,
    })?;
    if let Some(n) = n_nodes {
        if raw.len() != n {
            bail!(HarnessError::InvalidSpec {
                field: "labels",
                reason: format!("{} has {} labels for {n} nodes", path.display(), raw.len()),
            });
        }
    }
    Ok(LabeledAssignment::from_labels(&raw).0)
}

fn generate(ctx: &Ctx, args: GenerateArgs) -> Result<()> {
    let base = match &args.spec {
        Some(path) => Some(read_json(path)?),
        None => None,
    };
    if base.is_none() && ctx.config.is_none() {
        bail!(HarnessError::MissingData {
            what: "generator spec".into(),
            hint: "pass --spec or --config with a JSON GenSpec, e.g. {\"kind\":\"sbm\",\"cluster_sizes\":[20,20],\"B\":[[0.5,0.1],[0.1,0.5]]}".into(),
        });
    }
    let spec: GenSpec = ctx.merged(base, json!({ "seed": ctx.seed }))?;
    let s = sample(&spec)?;
    let out = ctx.output(args.out, "graph.edges")?;
    write_text(&out, &write_edge_list(&s.graph))?;
    let labels = ctx.output(args.labels, "graph.labels")?;
    let text: String = s.truth.z.iter().map(|c| format!("{c}\n")).collect();
    write_text(&labels, &text)?;
    if let Some(delta) = &s.delta {
        let path = ctx.output(args.delta, "graph.delta.csv")?;
        let mut csv = String::from("node_id,delta\n");
        for (i, d) in delta.iter().enumerate() {
            let _ = writeln!(csv, "{i},{d}");
        }
        write_text(&path, &csv)?;
    }
    println!(
        "{} nodes, {} edges -> {}",
        s.graph.n_nodes(),
        s.graph.n_edges(),
        out.display()
    );
    Ok(())
}

fn fit_config(ctx: &Ctx, args: &FitArgs) -> Result<FitConfig> {
    let overrides = json!({
        "K": args.k,
        "epsilon": args.epsilon,
        "max_iters": args.max_iters,
        "restarts": args.restarts,
        "step_delta": args.step_delta,
        "step_b": args.step_b,
        "inner_iters": args.inner_iters,
        "sbm_baseline": args.sbm_baseline.then_some(true),
        "exact_nonedge_log": args.exact_nonedge_log.then_some(true),
        "nonedge_sample": args.nonedge_sample,
        "seed": ctx.seed,
    });
    let has_k = args.k.is_some() || ctx.config.as_ref().is_some_and(|c| c.get("K").or(c.get("k")).is_some());
    if !has_k {
        bail!(HarnessError::InvalidSpec {
            field: "K",
            reason: "pass --k or set K in --config".into()
        });
    }
    ctx.merged(None, overrides)
}

fn fit_cmd(ctx: &Ctx, args: FitArgs) -> Result<()> {
    let cfg = fit_config(ctx, &args)?;
    let loaded = load_graph(&args.graph)?;
    let result = fit(&loaded.graph, &cfg)?;
    let out = ctx.output(args.out, "result.json")?;
    write_text(&out, &(serde_json::to_string_pretty(&result)? + "\n"))?;
    let assignment = ctx.output(args.assignment, "assignment.csv")?;
    write_text(&assignment, &assignment_csv_with_ids(&result, Some(&loaded.id_map)))?;
    println!(
        "K={} elbo={} iterations={} converged={} restart={} -> {}",
        cfg.k,
        result.final_elbo(),
        result.iterations,
        result.converged,
        result.restart,
        out.display()
    );
    Ok(())
}

fn eval(ctx: &Ctx, args: EvalArgs) -> Result<()> {
    let truth = load_assignment(&args.truth, None)?;
    let pred = if args.pred.extension().is_some_and(|e| e == "json") {
        let result: FitResult = serde_json::from_value(read_json(&args.pred)?)
            .with_context(|| format!("{} is not a fit result", args.pred.display()))?;
        result.z_star
    } else {
        load_assignment(&args.pred, None)?
    };
    let report = clustering_error(&truth, &pred)?;
    let mut out = serde_json::Map::new();
    out.insert("n".into(), json!(report.n));
    for metric in &args.metrics {
        match metric {
            Metric::Error => {
                out.insert("error_count".into(), json!(report.error_count));
                out.insert("error_rate".into(), json!(report.error_rate));
            }
            Metric::Nmi => {
                out.insert("nmi".into(), json!(nmi_with(&truth, &pred, args.nmi_norm)?));
                out.insert("nmi_normalization".into(), json!(args.nmi_norm));
            }
            Metric::Confusion => {
                out.insert("confusion".into(), json!(report.confusion));
                out.insert("matching".into(), json!(report.matching));
            }
        }
    }
    let text = serde_json::to_string_pretty(&Value::Object(out))? + "\n";
    let path = ctx.output(args.out, "report.json")?;
    write_text(&path, &text)?;
    print!("{text}");
    Ok(())
}

fn select_k_cmd(ctx: &Ctx, args: SelectKArgs) -> Result<()> {
    if args.k_min == 0 || args.k_min > args.k_max {
        bail!(HarnessError::InvalidSpec {
            field: "k_range",
            reason: format!("need 1 <= k-min <= k-max, got {}..{}", args.k_min, args.k_max),
        });
    }
    let mut base = ctx.config.clone().unwrap_or_else(|| json!({}));
    if let Value::Object(map) = &mut base {
        map.entry("K").or_insert(json!(args.k_min));
    }
    let cfg: FitConfig = ctx.merged(
        Some(base),
        json!({
            "restarts": args.restarts,
            "sbm_baseline": args.sbm_baseline.then_some(true),
            "nonedge_sample": args.nonedge_sample,
            "seed": ctx.seed,
        }),
    )?;
    let loaded = load_graph(&args.graph)?;
    let truth = match &args.truth {
        Some(path) => Some(load_assignment(path, Some(loaded.graph.n_nodes()))?),
        None => None,
    };
    let ks: Vec<usize> = (args.k_min..=args.k_max).collect();
    let sweep = select_k(&loaded.graph, &ks, &cfg)?;
    let mut csv = String::from("K,icl,error_if_truth_given\n");
    for r in &sweep.records {
        let error = match &truth {
            Some(t) => clustering_error(t, &r.fit.z_star)?.error_rate.to_string(),
            None => String::new(),
        };
        let _ = writeln!(csv, "{},{},{error}", r.k, r.icl);
    }
    let out = ctx.output(args.out, "sweep.csv")?;
    write_text(&out, &csv)?;
    println!("best K = {} -> {}", sweep.best_k(), out.display());
    Ok(())
}

fn degrees(ctx: &Ctx, args: DegreesArgs) -> Result<()> {
    let loaded = load_graph(&args.graph)?;
    let hist = degree_histogram(&loaded.graph);
    let out = ctx.output(args.out, "degrees.csv")?;
    write_text(&out, &degree_csv(&hist))?;
    if let Some(slope) = args.slope {
        let binning = match args.binning {
            BinningArg::Raw => Binning::Raw,
            BinningArg::Log => Binning::Log { bins: args.bins },
        };
        let fit = powerlaw_fit_histogram(&hist, binning)?;
        let path = ctx.output(Some(slope), "slope.csv")?;
        write_text(&path, &slope_csv(&fit))?;
        println!("slope={} intercept={} r2={}", fit.slope, fit.intercept, fit.r_squared);
    }
    Ok(())
}

fn reproduce(ctx: &Ctx, args: ReproduceArgs) -> Result<()> {
    let k_range = match args.k_range.as_deref() {
        Some([lo, hi]) => Some(json!([lo, hi])),
        _ => None,
    };
    let spec: ExperimentSpec = ctx.merged(
        None,
        json!({
            "name": args.experiment,
            "graph": args.graph,
            "labels": args.labels,
            "synthetic": args.synthetic.then_some(true),
            "seed": ctx.seed,
            "replicates": args.replicates,
            "K": args.k,
            "k_range": k_range,
            "restarts": args.restarts,
            "nonedge_sample": args.nonedge_sample,
        }),
    )?;
    let report = run_experiment(&spec, &ctx.out_dir)?;
    println!("{}", serde_json::to_string_pretty(&report.summary)?);
    Ok(())
}
