//! Scripted experiment pipelines and their plot-ready CSV/JSON artifacts.
//!
//! Every experiment is a pure function of its [`ExperimentSpec`]; re-running
//! with the same spec rewrites byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{
    clustering_error, degree_histogram, powerlaw_fit_histogram, sign_test, Binning, EvalError, MetricReport,
    PowerLawFit, SignTest,
};
use crate::generators::{sample, GenSpec, Sample, SpecError};
use crate::graph::{largest_connected_component, load_edge_list, load_gml_subset, read_labels, Graph, GraphError};
use crate::inference::{fit, FitConfig, FitError, FitResult};
use crate::model::{LabeledAssignment, Matrix};
use crate::model_selection::{select_k, IclSweep};
use crate::rng::derive_seed;

pub const EDGE_LIST_FORMAT: &str = "whitespace-separated `i j` node-id pairs, one edge per line; `#` starts a comment";
pub const LABELS_FORMAT: &str =
    "one integer label per line; line k labels node id k under a `# nodes N` header, otherwise the k-th smallest node id";
pub const GML_FORMAT: &str =
    "GML `graph [ node [ id N value L ] edge [ source A target B ] ]` with integer party labels in `value`";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment spec `{field}`: {reason}")]
    InvalidSpec { field: &'static str, reason: String },
    #[error("missing {what}: {hint}")]
    MissingData { what: String, hint: String },
    #[error("cannot read {}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("invalid graph input {}", path.display())]
    Graph { path: PathBuf, source: GraphError },
    #[error(transparent)]
    Generator(#[from] SpecError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl HarnessError {
    /// Process exit status: 2 validation, 3 missing data, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::InvalidSpec { .. } | Self::Graph { .. } | Self::Generator(_) => 2,
            Self::MissingData { .. } | Self::Read { .. } => 3,
            Self::Fit(FitError::NonFinite { .. }) => 4,
            Self::Fit(_) => 2,
            Self::Eval(EvalError::LengthMismatch { .. } | EvalError::Empty) => 2,
            Self::Eval(_) => 4,
            Self::Write { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    Fig2Powerlaw,
    SimHomogeneous,
    SimHeterogeneous,
    Adolescent,
    Polblogs,
}

impl ExperimentName {
    pub const ALL: [Self; 5] = [
        Self::Fig2Powerlaw,
        Self::SimHomogeneous,
        Self::SimHeterogeneous,
        Self::Adolescent,
        Self::Polblogs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fig2Powerlaw => "fig2_powerlaw",
            Self::SimHomogeneous => "sim_homogeneous",
            Self::SimHeterogeneous => "sim_heterogeneous",
            Self::Adolescent => "adolescent",
            Self::Polblogs => "polblogs",
        }
    }

    fn default_replicates(self) -> usize {
        match self {
            Self::Fig2Powerlaw => 100,
            Self::SimHomogeneous | Self::SimHeterogeneous => 20,
            Self::Adolescent | Self::Polblogs => 1,
        }
    }
}

impl std::fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ExperimentName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|n| n.as_str() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|n| n.as_str()).collect();
            format!("unknown experiment {s:?}; expected one of {}", names.join(", "))
        })
    }
}

/// One named experiment. Optional knobs fall back to the standard setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    /// Edge list (adolescent) or GML file (polblogs).
    #[serde(default)]
    pub graph: Option<PathBuf>,
    /// Grade labels for the adolescent edge list.
    #[serde(default)]
    pub labels: Option<PathBuf>,
    /// Use the bundled synthetic stand-in when no adolescent files are given.
    #[serde(default)]
    pub synthetic: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub replicates: Option<usize>,
    /// Cluster count for the real-network fits.
    #[serde(default, rename = "K", alias = "k")]
    pub k: Option<usize>,
    /// Inclusive ICL sweep range; `[0, 0]` skips the sweep.
    #[serde(default)]
    pub k_range: Option<(usize, usize)>,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub nonedge_sample: Option<usize>,
}

impl ExperimentSpec {
    pub fn new(name: ExperimentName, seed: u64) -> Self {
        Self {
            name,
            graph: None,
            labels: None,
            synthetic: false,
            seed,
            replicates: None,
            k: None,
            k_range: None,
            restarts: None,
            nonedge_sample: None,
        }
    }

    pub fn replicates(&self) -> usize {
        self.replicates.unwrap_or(self.name.default_replicates())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |field, reason: &str| {
            Err(HarnessError::InvalidSpec {
                field,
                reason: reason.into(),
            })
        };
        if self.replicates == Some(0) {
            return invalid("replicates", "must be at least 1");
        }
        if self.restarts == Some(0) {
            return invalid("restarts", "must be at least 1");
        }
        if self.k == Some(0) {
            return invalid("K", "must be at least 1");
        }
        if let Some((lo, hi)) = self.k_range {
            if lo > hi || (lo == 0 && hi != 0) {
                return invalid("k_range", "must be [lo, hi] with 1 <= lo <= hi, or [0, 0]");
            }
        }
        if self.nonedge_sample == Some(0) {
            return invalid("nonedge_sample", "must be at least 1");
        }
        Ok(())
    }

    fn fit_config(&self, k: usize, seed: u64) -> FitConfig {
        let mut cfg = FitConfig::new(k).with_seed(seed);
        if let Some(r) = self.restarts {
            cfg.restarts = r;
        }
        cfg.nonedge_sample = self.nonedge_sample;
        cfg
    }
}

/// Parameters of the single-cluster power-law simulation.
pub const FIG2_NODES: usize = 1000;
pub const FIG2_P0: f64 = 0.9;
pub const FIG2_LAMBDA: f64 = 0.01;

/// Pooled degree statistics of the single-cluster simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawSummary {
    pub replicates: usize,
    pub nodes: usize,
    pub p0: f64,
    pub lambda: f64,
    /// `-(1 + lambda / ln p0)`.
    pub theoretical_slope: f64,
    /// Largest degree the limiting normalized degree can reach,
    /// `(n0 - 1) p0 lambda / (lambda - ln p0)`; the fit uses degrees up to it.
    pub fit_max_degree: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Slope of the raw fit over every positive degree, for reference.
    pub slope_all_degrees: f64,
    pub zero_degree_nodes: usize,
}

/// Per-replicate error rates of both models on one simulation family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub replicates: usize,
    pub baseline_errors: Vec<f64>,
    pub pld_errors: Vec<f64>,
    pub mean_baseline_error: f64,
    pub mean_pld_error: f64,
    /// "PLD error < baseline error" over paired replicates.
    pub sign_test: SignTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IclRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub icl_pld: f64,
    pub icl_baseline: f64,
    pub error_pld: f64,
    pub error_baseline: f64,
}

/// Fits of both models on a labeled real (or stand-in) network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub source: String,
    pub nodes: usize,
    pub edges: usize,
    #[serde(rename = "K")]
    pub k: usize,
    /// Original label of each true cluster index.
    pub label_values: Vec<i64>,
    pub pld: MetricReport,
    pub baseline: MetricReport,
    pub icl: Vec<IclRow>,
    pub best_k_pld: Option<usize>,
    pub best_k_baseline: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Summary {
    PowerLaw(PowerLawSummary),
    Simulation(SimulationSummary),
    Network(NetworkSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentName,
    pub seed: u64,
    pub summary: Summary,
    /// Files written, relative to the output directory, in write order.
    pub files: Vec<String>,
}

/// Runs the experiment and writes its artifacts into `out_dir` (created if
/// needed), finishing with `summary.json`.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path) -> Result<ExperimentReport, HarnessError> {
    spec.validate()?;
    let mut out = Output::new(out_dir)?;
    log::info!("running {} with seed {}", spec.name, spec.seed);
    let summary = match spec.name {
        ExperimentName::Fig2Powerlaw => Summary::PowerLaw(power_law(spec, &mut out)?),
        ExperimentName::SimHomogeneous | ExperimentName::SimHeterogeneous => {
            Summary::Simulation(simulation(spec, &mut out)?)
        }
        ExperimentName::Adolescent | ExperimentName::Polblogs => Summary::Network(network(spec, &mut out)?),
    };
    let mut report = ExperimentReport {
        experiment: spec.name,
        seed: spec.seed,
        summary,
        files: out.files.clone(),
    };
    report.files.push("summary.json".into());
    out.write("summary.json", &to_json(&report))?;
    Ok(report)
}

struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self, HarnessError> {
        fs::create_dir_all(dir).map_err(|source| HarnessError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), HarnessError> {
        write_text(&self.dir.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn read_text(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|source| HarnessError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|source| HarnessError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Assignment table `node_id,cluster,phi_max,delta_bar`, ordered by node.
pub fn assignment_csv(result: &FitResult) -> String {
    assignment_csv_with_ids(result, None)
}

/// As [`assignment_csv`], reporting `ids[i]` as the id of node `i`.
pub fn assignment_csv_with_ids(result: &FitResult, ids: Option<&[u64]>) -> String {
    let mut out = String::from("node_id,cluster,phi_max,delta_bar\n");
    for (i, &c) in result.z_star.z.iter().enumerate() {
        let id = ids.map_or(i as u64, |ids| ids[i]);
        let _ = writeln!(
            out,
            "{id},{c},{},{}",
            result.state.phi.get(i, c),
            result.state.delta_bar[i]
        );
    }
    out
}

pub fn write_assignment_csv(result: &FitResult, path: &Path) -> Result<(), HarnessError> {
    write_text(path, &assignment_csv(result))
}

/// `degree,count` rows in ascending degree.
pub fn degree_csv(hist: &BTreeMap<usize, usize>) -> String {
    let mut out = String::from("degree,count\n");
    for (d, c) in hist {
        let _ = writeln!(out, "{d},{c}");
    }
    out
}

/// `bin_center,count,fit_value` rows of a power-law fit.
pub fn slope_csv(fit: &PowerLawFit) -> String {
    let mut out = String::from("bin_center,count,fit_value\n");
    for p in &fit.points {
        let _ = writeln!(out, "{},{},{}", p.bin_center, p.count, p.fit_value);
    }
    out
}

fn power_law(spec: &ExperimentSpec, out: &mut Output) -> Result<PowerLawSummary, HarnessError> {
    let replicates = spec.replicates();
    let gen = GenSpec::pld_sbm(vec![FIG2_NODES], Matrix::filled(1, 1, FIG2_P0), FIG2_LAMBDA, spec.seed);
    gen.validate()?;
    let hists: Vec<BTreeMap<usize, usize>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| sample(&gen.replicate(r)).map(|s| degree_histogram(&s.graph)))
        .collect::<Result<_, _>>()?;
    let mut pooled: BTreeMap<usize, usize> = BTreeMap::new();
    for hist in hists {
        for (d, c) in hist {
            *pooled.entry(d).or_insert(0) += c;
        }
    }

    let support = FIG2_P0 * FIG2_LAMBDA / (FIG2_LAMBDA - FIG2_P0.ln());
    let fit_max_degree = ((FIG2_NODES - 1) as f64 * support).floor() as usize;
    let within: BTreeMap<usize, usize> = pooled.range(..=fit_max_degree).map(|(&d, &c)| (d, c)).collect();
    let fit = powerlaw_fit_histogram(&within, Binning::Raw)?;
    let all = powerlaw_fit_histogram(&pooled, Binning::Raw)?;

    out.write("degrees.csv", &degree_csv(&pooled))?;
    out.write("slope.csv", &slope_csv(&fit))?;
    Ok(PowerLawSummary {
        replicates,
        nodes: FIG2_NODES,
        p0: FIG2_P0,
        lambda: FIG2_LAMBDA,
        theoretical_slope: -(1.0 + FIG2_LAMBDA / FIG2_P0.ln()),
        fit_max_degree,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        slope_all_degrees: all.slope,
        zero_degree_nodes: pooled.get(&0).copied().unwrap_or(0),
    })
}

/// Generator of replicate 0 for a simulation family; replicate `r` is
/// `family(..).replicate(r)`.
pub fn simulation_family(name: ExperimentName, seed: u64) -> Option<GenSpec> {
    match name {
        ExperimentName::SimHomogeneous => {
            let b = Matrix::from_rows(&[vec![0.3, 0.1, 0.1], vec![0.1, 0.7, 0.1], vec![0.1, 0.1, 0.9]]);
            Some(GenSpec::sbm(vec![20, 20, 20], b, seed))
        }
        ExperimentName::SimHeterogeneous => Some(GenSpec::ba_planted(vec![20, 20, 20], 2, 5, seed)),
        _ => None,
    }
}

fn simulation(spec: &ExperimentSpec, out: &mut Output) -> Result<SimulationSummary, HarnessError> {
    let family = simulation_family(spec.name, spec.seed).expect("simulation experiment");
    family.validate()?;
    let k = family.cluster_sizes.len();
    let replicates = spec.replicates();
    let runs: Vec<(f64, f64)> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| -> Result<(f64, f64), HarnessError> {
            let s = sample(&family.replicate(r))?;
            let cfg = spec.fit_config(k, derive_seed(spec.seed, &[r]));
            let pld = fit(&s.graph, &cfg)?;
            let base = fit(&s.graph, &cfg.clone().baseline())?;
            let pld_error = clustering_error(&s.truth, &pld.z_star)?.error_rate;
            let base_error = clustering_error(&s.truth, &base.z_star)?.error_rate;
            log::debug!("replicate {r}: baseline {base_error:.4} pld {pld_error:.4}");
            Ok((base_error, pld_error))
        })
        .collect::<Result<_, _>>()?;

    let baseline_errors: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let pld_errors: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let mut csv = String::from("replicate,baseline_error,pld_error\n");
    for (r, (b, p)) in runs.iter().enumerate() {
        let _ = writeln!(csv, "{r},{b},{p}");
    }
    out.write("errors.csv", &csv)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(SimulationSummary {
        replicates,
        mean_baseline_error: mean(&baseline_errors),
        mean_pld_error: mean(&pld_errors),
        sign_test: sign_test(&pld_errors, &baseline_errors),
        baseline_errors,
        pld_errors,
    })
}

/// A labeled network ready for fitting.
#[derive(Debug, Clone)]
pub struct LabeledNetwork {
    pub source: String,
    pub graph: Graph,
    pub truth: LabeledAssignment,
    pub label_values: Vec<i64>,
}

fn require(path: &Option<PathBuf>, what: &str, hint: String) -> Result<PathBuf, HarnessError> {
    let missing = || HarnessError::MissingData {
        what: what.to_string(),
        hint: hint.clone(),
    };
    let path = path.clone().ok_or_else(missing)?;
    if !path.is_file() {
        return Err(HarnessError::MissingData {
            what: format!("{what} {}", path.display()),
            hint,
        });
    }
    Ok(path)
}

/// Edge list plus one label per node.
pub fn load_labeled_edge_list(graph: &Path, labels: &Path) -> Result<LabeledNetwork, HarnessError> {
    let graph_error = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Graph { path, source }
    };
    let loaded = load_edge_list(&read_text(graph)?).map_err(graph_error(graph))?;
    let raw = read_labels(&read_text(labels)?).map_err(graph_error(labels))?;
    if raw.len() != loaded.graph.n_nodes() {
        return Err(HarnessError::InvalidSpec {
            field: "labels",
            reason: format!(
                "{} has {} labels but the edge list has {} nodes ({LABELS_FORMAT})",
                labels.display(),
                raw.len(),
                loaded.graph.n_nodes()
            ),
        });
    }
    let (truth, label_values) = LabeledAssignment::from_labels(&raw);
    Ok(LabeledNetwork {
        source: graph.display().to_string(),
        graph: loaded.graph,
        truth,
        label_values,
    })
}

/// GML network reduced to its largest connected component, labeled by the
/// nodes' `value` fields.
pub fn load_gml_network(path: &Path) -> Result<LabeledNetwork, HarnessError> {
    let gml = load_gml_subset(&read_text(path)?).map_err(|source| HarnessError::Graph {
        path: path.to_path_buf(),
        source,
    })?;
    let (graph, keep) = largest_connected_component(&gml.graph);
    let raw = keep
        .iter()
        .map(|&i| {
            gml.labels[i].ok_or_else(|| HarnessError::InvalidSpec {
                field: "graph",
                reason: format!("node with GML id {} has no integer `value` label", gml.id_map[i]),
            })
        })
        .collect::<Result<Vec<i64>, _>>()?;
    log::info!(
        "{}: {} nodes, {} arcs; largest component {} nodes, {} edges",
        path.display(),
        gml.graph.n_nodes(),
        gml.arc_count,
        graph.n_nodes(),
        graph.n_edges()
    );
    let (truth, label_values) = LabeledAssignment::from_labels(&raw);
    Ok(LabeledNetwork {
        source: path.display().to_string(),
        graph,
        truth,
        label_values,
    })
}

/// Synthetic stand-in for the school friendship network: 69 students in six
/// grades (labels 7 to 12), dense within grades, sparse across, with skewed
/// within-grade degrees.
pub fn adolescent_standin(seed: u64) -> Sample {
    let k = 6;
    let mut b = Matrix::filled(k, k, 0.02);
    (0..k).for_each(|c| b.set(c, c, 0.7));
    sample(&GenSpec::pld_sbm(vec![12, 12, 12, 11, 11, 11], b, 2.0, seed)).expect("valid stand-in spec")
}

fn load_network(spec: &ExperimentSpec, out: &mut Output) -> Result<LabeledNetwork, HarnessError> {
    match spec.name {
        ExperimentName::Polblogs => {
            let hint = format!("set `graph` to the political blogs GML file ({GML_FORMAT})");
            load_gml_network(&require(&spec.graph, "polblogs graph", hint)?)
        }
        _ if spec.graph.is_none() && spec.labels.is_none() && spec.synthetic => {
            let s = adolescent_standin(spec.seed);
            out.write("standin.edges", &crate::graph::write_edge_list(&s.graph))?;
            let raw: Vec<i64> = s.truth.z.iter().map(|&c| c as i64 + 7).collect();
            let labels: String = raw.iter().map(|l| format!("{l}\n")).collect();
            out.write("standin.labels", &labels)?;
            let (truth, label_values) = LabeledAssignment::from_labels(&raw);
            Ok(LabeledNetwork {
                source: "synthetic stand-in".into(),
                graph: s.graph,
                truth,
                label_values,
            })
        }
        _ => {
            let graph = require(
                &spec.graph,
                "adolescent edge list",
                format!("set `graph` to an edge list ({EDGE_LIST_FORMAT}), or `synthetic` for the stand-in"),
            )?;
            let labels = require(
                &spec.labels,
                "adolescent grade labels",
                format!("set `labels` to a labels file ({LABELS_FORMAT})"),
            )?;
            load_labeled_edge_list(&graph, &labels)
        }
    }
}

fn network(spec: &ExperimentSpec, out: &mut Output) -> Result<NetworkSummary, HarnessError> {
    let net = load_network(spec, out)?;
    let (default_k, default_range) = match spec.name {
        ExperimentName::Polblogs => (2, (1, 5)),
        _ => (6, (2, 9)),
    };
    let k = spec.k.unwrap_or(default_k);
    let (lo, hi) = spec.k_range.unwrap_or(default_range);
    let cfg = spec.fit_config(k, spec.seed);

    let sweep = |cfg: &FitConfig| -> Result<Option<IclSweep>, HarnessError> {
        if hi == 0 {
            return Ok(None);
        }
        Ok(Some(select_k(&net.graph, &(lo..=hi).collect::<Vec<_>>(), cfg)?))
    };
    let pld_sweep = sweep(&cfg)?;
    let base_cfg = cfg.clone().baseline();
    let base_sweep = sweep(&base_cfg)?;

    let at_k = |sweep: &Option<IclSweep>, cfg: &FitConfig| -> Result<FitResult, HarnessError> {
        let reused = sweep
            .as_ref()
            .and_then(|s| s.records.iter().find(|r| r.k == k))
            .map(|r| r.fit.clone());
        match reused {
            Some(f) => Ok(f),
            None => Ok(fit(&net.graph, cfg)?),
        }
    };
    let pld = at_k(&pld_sweep, &cfg)?;
    let base = at_k(&base_sweep, &base_cfg)?;
    let pld_report = clustering_error(&net.truth, &pld.z_star)?;
    let base_report = clustering_error(&net.truth, &base.z_star)?;

    out.write("assignment_pld.csv", &assignment_csv(&pld))?;
    out.write("assignment_baseline.csv", &assignment_csv(&base))?;
    let mut icl = Vec::new();
    if let (Some(p), Some(b)) = (&pld_sweep, &base_sweep) {
        for (rp, rb) in p.records.iter().zip(&b.records) {
            icl.push(IclRow {
                k: rp.k,
                icl_pld: rp.icl,
                icl_baseline: rb.icl,
                error_pld: clustering_error(&net.truth, &rp.fit.z_star)?.error_rate,
                error_baseline: clustering_error(&net.truth, &rb.fit.z_star)?.error_rate,
            });
        }
        let mut csv = String::from("K,icl_pld,icl_baseline,error_pld,error_baseline\n");
        for row in &icl {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                row.k, row.icl_pld, row.icl_baseline, row.error_pld, row.error_baseline
            );
        }
        out.write("icl_sweep.csv", &csv)?;
    }
    Ok(NetworkSummary {
        source: net.source,
        nodes: net.graph.n_nodes(),
        edges: net.graph.n_edges(),
        k,
        label_values: net.label_values,
        pld: pld_report,
        baseline: base_report,
        icl,
        best_k_pld: pld_sweep.as_ref().map(IclSweep::best_k),
        best_k_baseline: base_sweep.as_ref().map(IclSweep::best_k),
    })
}
