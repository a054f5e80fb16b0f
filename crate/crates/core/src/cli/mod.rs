//! Command-line driver: `discover`, `identify`, `estimate`, `sensitivity`,
//! `simulate` and `benchmark`, each reading a flat config file.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ci_tests::{CiError, derive_seed};
use crate::dataset::{DataError, Dataset, Schema, censoring_name, format_value};
use crate::discovery::{
    DiscoveryConstraints, DiscoveryError, PcSettings, benchmark_csv, benchmark_discovery, bootstrap_confidences,
};
use crate::estimation::{EstimationError, tmle::LOGIT_CLAMP, tmle::PROPENSITY_BOUNDS, tmle_estimate};
use crate::graph::{CausalGraph, GraphError};
use crate::identification::{
    EstimandSpec, IdError, Provenance, Role, backdoor_paths, classify_variables, most_plausible_backdoor_subgraph,
    render_estimand,
};
use crate::scm::{ScmError, ScmSpec, random};
use crate::sensitivity::{curves_csv, curves_long_csv, sensitivity_curve};

pub use config::PipelineConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("not identifiable: {0}")]
    NotIdentifiable(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::NotIdentifiable(_) => 4,
            CliError::Numerical(_) => 5,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ScmError> for CliError {
    fn from(e: ScmError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<CiError> for CliError {
    fn from(e: CiError) -> Self {
        match e {
            CiError::Parameter(_) | CiError::Graph(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<DiscoveryError> for CliError {
    fn from(e: DiscoveryError) -> Self {
        match e {
            DiscoveryError::Test(e) => e.into(),
            DiscoveryError::Data(e) => e.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<IdError> for CliError {
    fn from(e: IdError) -> Self {
        match e {
            IdError::NotIdentifiable(_) => CliError::NotIdentifiable(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<EstimationError> for CliError {
    fn from(e: EstimationError) -> Self {
        match e {
            EstimationError::Data(e) => e.into(),
            EstimationError::Id(e) => e.into(),
            EstimationError::InvalidSpec(_) | EstimationError::Folds { .. } => CliError::Config(e.to_string()),
            EstimationError::Numerical(_) => CliError::Numerical(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "causal-pipeline", version, about = "Causal discovery, identification and targeted estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bootstrapped PC: edge confidences and a thresholded graph.
    Discover(CommonArgs),
    /// Backdoor paths, variable roles and adjustment set for the estimand.
    Identify(CommonArgs),
    /// Super Learner + TMLE estimates for every contrast.
    Estimate(CommonArgs),
    /// Delta-family bounds against unobserved confounding.
    Sensitivity(CommonArgs),
    /// Sample a dataset from a structural model file.
    Simulate(CommonArgs),
    /// SHD and runtime of PC across sample sizes and tests.
    Benchmark(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `seed` from the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `output.dir` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub quiet: bool,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Discover(_) => "discover",
            Command::Identify(_) => "identify",
            Command::Estimate(_) => "estimate",
            Command::Sensitivity(_) => "sensitivity",
            Command::Simulate(_) => "simulate",
            Command::Benchmark(_) => "benchmark",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Discover(a)
            | Command::Identify(a)
            | Command::Estimate(a)
            | Command::Sensitivity(a)
            | Command::Simulate(a)
            | Command::Benchmark(a) => a,
        }
    }
}

/// Collected output of one command.
struct Run {
    cfg: PipelineConfig,
    out_dir: PathBuf,
    quiet: bool,
    stdout: String,
    files: Vec<String>,
    notes: Vec<String>,
}

impl Run {
    fn say(&mut self, text: &str) {
        self.stdout.push_str(text);
        if !text.ends_with('\n') {
            self.stdout.push('\n');
        }
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn decision_flags(cfg: &PipelineConfig) -> Vec<(String, String)> {
    let lib = |l: &[crate::estimation::LearnerSpec]| l.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("; ");
    vec![
        ("pc.order".into(), "lexicographic".into()),
        ("pc.v_structure_conflicts".into(), "flag-and-leave-undirected".into()),
        ("pc.orientation_rules".into(), "meek-r1-r4".into()),
        ("discovery.test".into(), cfg.discovery.test.to_string()),
        ("discovery.alpha".into(), format_value(cfg.discovery.alpha)),
        ("discovery.runs".into(), cfg.discovery.runs.to_string()),
        ("discovery.threshold".into(), format_value(cfg.discovery.threshold)),
        ("discovery.max_cond_size".into(), cfg.discovery.max_cond_size.to_string()),
        ("bootstrap.undirected_edge_weight".into(), "0.5".into()),
        ("sl.folds".into(), cfg.folds.to_string()),
        ("sl.outcome_learners".into(), lib(&cfg.outcome_learners)),
        ("sl.propensity_learners".into(), lib(&cfg.propensity_learners)),
        ("sl.meta_loss".into(), "squared (outcome), log-loss (propensity)".into()),
        ("tmle.targeting".into(), "full-data refit".into()),
        ("tmle.fluctuation".into(), "one per contrast".into()),
        ("tmle.logit_clamp".into(), format_value(LOGIT_CLAMP)),
        ("tmle.propensity_bounds".into(), format!("{},{}", PROPENSITY_BOUNDS.0, PROPENSITY_BOUNDS.1)),
        ("tmle.multiclass_clipping".into(), "clip-then-renormalize".into()),
        ("tmle.p_value".into(), "two-sided on |psi|".into()),
        ("tmle.outcome_scaling".into(), "min-max for continuous outcomes".into()),
        ("estimand.allow_pruning".into(), cfg.estimand.allow_pruning.to_string()),
        ("censoring.columns".into(), cfg.censoring.join(";")),
        (
            "censoring.parents".into(),
            if cfg.censoring_parents.is_empty() { "inherit".into() } else { cfg.censoring_parents.join(";") },
        ),
        ("sensitivity.delta".into(), "|psi_adjusted - psi_unadjusted|".into()),
        ("sensitivity.se".into(), "reuse adjusted".into()),
        ("sensitivity.drop_precision".into(), cfg.drop_precision.to_string()),
    ]
}

fn run_log(command: &str, cfg: &PipelineConfig, config_text: &str, run: &Run, status: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "command = {command}");
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s, "config_sha256 = {}", sha256_hex(config_text));
    for (k, v) in decision_flags(cfg) {
        let _ = writeln!(s, "flag {k} = {v}");
    }
    for n in &run.notes {
        let _ = writeln!(s, "note = {n}");
    }
    let _ = writeln!(s, "outputs = {}", run.files.join(", "));
    let _ = writeln!(s, "status = {status}");
    s
}

fn load_data(cfg: &PipelineConfig) -> Result<Dataset, CliError> {
    let path = PipelineConfig::require(&cfg.data, "data.path")?;
    let schema = match &cfg.schema {
        Some(p) => Schema::load(p)?,
        None => Schema::Auto,
    };
    Ok(Dataset::load_csv(path, &schema)?)
}

fn load_graph(path: &Path) -> Result<CausalGraph, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read graph {}: {e}", path.display())))?;
    let g = CausalGraph::parse(&text)?;
    g.assert_acyclic()?;
    Ok(g)
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: &Command) -> Result<(), CliError> {
    let args = command.args();
    let (mut cfg, config_text) = PipelineConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Config(format!("cannot create output dir {}: {e}", cfg.output_dir.display())))?;
    let mut run = Run {
        out_dir: cfg.output_dir.clone(),
        cfg,
        quiet: args.quiet,
        stdout: String::new(),
        files: Vec::new(),
        notes: Vec::new(),
    };
    let result = match command {
        Command::Discover(_) => discover(&mut run),
        Command::Identify(_) => identify(&mut run),
        Command::Estimate(_) => estimate(&mut run),
        Command::Sensitivity(_) => sensitivity(&mut run),
        Command::Simulate(_) => simulate(&mut run),
        Command::Benchmark(_) => benchmark(&mut run),
    };
    let status = match &result {
        Ok(()) => "ok".to_string(),
        Err(e) => format!("exit {} ({e})", e.exit_code()),
    };
    let log = run_log(command.name(), &run.cfg, &config_text, &run, &status);
    let log_path = run.out_dir.join("run.log");
    std::fs::write(&log_path, log).map_err(|e| CliError::Data(format!("cannot write {}: {e}", log_path.display())))?;
    if !run.quiet {
        print!("{}", run.stdout);
    }
    result
}

fn discover(run: &mut Run) -> Result<(), CliError> {
    let ds = load_data(&run.cfg)?;
    let d = &run.cfg.discovery;
    let constraints = match &d.constraints {
        Some(p) => DiscoveryConstraints::load(p)?,
        None => DiscoveryConstraints::new(),
    };
    let settings = PcSettings { method: d.test, alpha: d.alpha, max_cond_size: d.max_cond_size };
    let conf = bootstrap_confidences(&ds, settings, &constraints, d.runs, run.cfg.seed)?;
    let graph = conf.threshold(d.threshold);
    let nodes = conf.nodes().to_vec();
    let mut edges: Vec<(f64, &str, &str)> = Vec::new();
    for (i, a) in nodes.iter().enumerate() {
        for (j, b) in nodes.iter().enumerate() {
            let v = conf.entry(i, j);
            if i != j && v > 0.0 {
                edges.push((v, a, b));
            }
        }
    }
    edges.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(y.1)).then(x.2.cmp(y.2)));
    let mut text = String::from("edge confidences:\n");
    for (v, a, b) in &edges {
        let _ = writeln!(text, "  {a} -> {b} {v:.3}");
    }
    run.say(&text);
    let csv = conf.to_csv();
    run.write("confidences.csv", &csv)?;
    run.write("discovered.graph", &graph.serialize())?;
    Ok(())
}

struct Resolved {
    spec: EstimandSpec,
    graph: Option<CausalGraph>,
    /// Bidirected edges removed to reach identifiability, with the ratio.
    pruning: Option<(Vec<(String, String)>, f64)>,
}

fn resolve_estimand(cfg: &PipelineConfig, columns: Option<&Dataset>) -> Result<Resolved, CliError> {
    let e = &cfg.estimand;
    let t = PipelineConfig::require(&e.treatment, "estimand.treatment")?.clone();
    let y = PipelineConfig::require(&e.outcome, "estimand.outcome")?.clone();
    let graph = cfg.graph.as_deref().map(load_graph).transpose()?;
    let observed = |names: Vec<String>| -> Vec<String> {
        match columns {
            Some(ds) => names.into_iter().filter(|n| ds.has_column(n)).collect(),
            None => names,
        }
    };
    let mut pruning = None;
    let (confounders, precision, provenance, graph) = match (&e.confounders, graph) {
        (Some(c), g) => (c.clone(), e.precision.clone().unwrap_or_default(), Provenance::UserFixed, g),
        (None, None) => {
            return Err(CliError::Config(
                "either `estimand.confounders` or `graph.path` is required to choose an adjustment set".into(),
            ));
        }
        (None, Some(g)) => {
            let report = classify_variables(&g, &t, &y)?;
            let (set, g_used) = match report.adjustment_set.clone() {
                Some(set) => (set, g),
                None => {
                    let sub = most_plausible_backdoor_subgraph(&g, &t, &y)?;
                    let removed = sub.removed.iter().map(|(a, b)| format!("{a} <-> {b}")).collect::<Vec<_>>();
                    if !cfg.estimand.allow_pruning {
                        return Err(CliError::NotIdentifiable(format!(
                            "`{t}` -> `{y}` needs removal of {{{}}} (plausibility ratio {:.4}); set estimand.allow_pruning = true to proceed",
                            removed.join(", "),
                            sub.ratio
                        )));
                    }
                    pruning = Some((sub.removed.clone(), sub.ratio));
                    (sub.adjustment_set.clone(), sub.subgraph)
                }
            };
            let report = classify_variables(&g_used, &t, &y)?;
            let precision = match &e.precision {
                Some(p) => p.clone(),
                None => observed(report.with_role(Role::Precision)),
            };
            (set, precision, Provenance::FromGraph, Some(g_used))
        }
    };
    if let Some(ds) = columns {
        for v in confounders.iter().chain(&precision) {
            if !ds.has_column(v) {
                return Err(CliError::Data(format!("adjustment variable `{v}` is not a data column")));
            }
        }
    }
    if e.contrasts.is_empty() {
        return Err(CliError::Config("`estimand.contrasts` must list at least one `t:t'` pair".into()));
    }
    let spec = EstimandSpec { treatment: t, outcome: y, contrasts: e.contrasts.clone(), confounders, precision, provenance };
    spec.validate()?;
    Ok(Resolved { spec, graph, pruning })
}

fn identify(run: &mut Run) -> Result<(), CliError> {
    let cfg = &run.cfg;
    let g = load_graph(PipelineConfig::require(&cfg.graph, "graph.path")?)?;
    let t = PipelineConfig::require(&cfg.estimand.treatment, "estimand.treatment")?.clone();
    let y = PipelineConfig::require(&cfg.estimand.outcome, "estimand.outcome")?.clone();
    let mut text = String::new();
    let paths = backdoor_paths(&g, &t, &y)?;
    let _ = writeln!(text, "backdoor paths {t} -> {y}:");
    for p in &paths {
        let _ = writeln!(text, "  {p}");
    }
    let report = classify_variables(&g, &t, &y)?;
    let _ = write!(text, "{report}");
    let mut result = Ok(());
    let sub = most_plausible_backdoor_subgraph(&g, &t, &y);
    let (estimand_graph, set) = match (&report.adjustment_set, sub) {
        (Some(set), _) => {
            let _ = writeln!(text, "removed bidirected edges: none");
            let _ = writeln!(text, "plausibility ratio: 1");
            (Some(g.clone()), set.clone())
        }
        (None, Ok(sub)) => {
            let removed: Vec<String> = sub.removed.iter().map(|(a, b)| format!("{a} <-> {b}")).collect();
            let _ = writeln!(text, "removed bidirected edges: {{{}}}", removed.join(", "));
            let _ = writeln!(text, "plausibility ratio: {:.4}", sub.ratio);
            let _ = writeln!(text, "adjustment set in pruned graph: {{{}}}", sub.adjustment_set.join(", "));
            result = Err(CliError::NotIdentifiable(format!(
                "identifiable only after removing {{{}}} (plausibility ratio {:.4})",
                removed.join(", "),
                sub.ratio
            )));
            (Some(sub.subgraph), sub.adjustment_set)
        }
        (None, Err(e)) => {
            let _ = writeln!(text, "no bidirected-edge removal makes the effect identifiable");
            result = Err(e.into());
            (None, Vec::new())
        }
    };
    if let (Some(eg), false) = (estimand_graph, cfg.estimand.contrasts.is_empty()) {
        let spec = EstimandSpec {
            treatment: t.clone(),
            outcome: y.clone(),
            contrasts: cfg.estimand.contrasts.clone(),
            confounders: set,
            precision: Vec::new(),
            provenance: Provenance::FromGraph,
        };
        let _ = writeln!(text, "estimand:\n{}", render_estimand(&eg, &spec)?);
    }
    run.say(&text);
    run.write("identify.txt", &text)?;
    result
}

/// Loads data, applies censoring, resolves the estimand, renders it.
fn prepare(run: &mut Run) -> Result<(Dataset, Resolved, Option<String>, crate::estimation::TmleConfig), CliError> {
    let mut ds = load_data(&run.cfg)?;
    let mut tmle = run.cfg.tmle();
    for c in &run.cfg.censoring {
        ds = ds.make_censoring(c)?;
        tmle.censoring.push(censoring_name(c));
    }
    let resolved = resolve_estimand(&run.cfg, Some(&ds))?;
    let rendered = match &resolved.graph {
        Some(g) => Some(render_estimand(g, &resolved.spec)?),
        None => None,
    };
    if let Some((removed, ratio)) = &resolved.pruning {
        let r: Vec<String> = removed.iter().map(|(a, b)| format!("{a} <-> {b}")).collect();
        run.notes.push(format!("pruned {{{}}} with plausibility ratio {}", r.join(", "), format_value(*ratio)));
    }
    Ok((ds, resolved, rendered, tmle))
}

#[derive(Serialize)]
struct EstimateReport<'a> {
    estimand: &'a EstimandSpec,
    rendered: Option<&'a str>,
    pruned_edges: Option<&'a [(String, String)]>,
    plausibility_ratio: Option<f64>,
    result: &'a crate::estimation::TargetedResult,
}

fn estimate(run: &mut Run) -> Result<(), CliError> {
    let (ds, resolved, rendered, tmle) = prepare(run)?;
    let result = tmle_estimate(&ds, &resolved.spec, &tmle, run.cfg.seed)?;
    let report = EstimateReport {
        estimand: &resolved.spec,
        rendered: rendered.as_deref(),
        pruned_edges: resolved.pruning.as_ref().map(|(r, _)| r.as_slice()),
        plausibility_ratio: resolved.pruning.as_ref().map(|(_, r)| *r),
        result: &result,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut text = String::new();
    if let Some(r) = &rendered {
        let _ = writeln!(text, "{r}\n");
    }
    if let Some((removed, ratio)) = &resolved.pruning {
        let r: Vec<String> = removed.iter().map(|(a, b)| format!("{a} <-> {b}")).collect();
        let _ = writeln!(text, "assumes absence of {{{}}} (plausibility ratio {:.4})\n", r.join(", "), ratio);
    }
    let _ = write!(text, "{result}");
    run.say(&text);
    run.write("estimate.json", &(json + "\n"))?;
    run.write("estimate.txt", &text)?;
    Ok(())
}

fn sensitivity(run: &mut Run) -> Result<(), CliError> {
    let (ds, resolved, _, tmle) = prepare(run)?;
    let (_, _, curves) =
        sensitivity_curve(&ds, &resolved.spec, &tmle, &run.cfg.multipliers, run.cfg.drop_precision, run.cfg.seed)?;
    let mut text = String::new();
    for c in &curves {
        let _ = writeln!(
            text,
            "contrast {}: psi {:.6}, unadjusted {:.6}, delta {:.6}, crossing multiplier {}",
            c.contrast, c.psi, c.psi_unadjusted, c.delta, c.crossing
        );
    }
    run.say(&text);
    run.write("sensitivity.csv", &curves_csv(&curves))?;
    run.write("sensitivity_long.csv", &curves_long_csv(&curves))?;
    run.write("sensitivity.txt", &text)?;
    Ok(())
}

fn simulate(run: &mut Run) -> Result<(), CliError> {
    let path = PipelineConfig::require(&run.cfg.scm, "simulate.scm")?;
    let scm = ScmSpec::load(path)?;
    let ds = scm.sample(run.cfg.simulate_n, run.cfg.seed)?;
    run.say(&format!("sampled {} rows of {} variables", ds.n_rows(), ds.n_cols()));
    run.write("simulated.csv", &ds.to_csv_string())?;
    Ok(())
}

fn benchmark(run: &mut Run) -> Result<(), CliError> {
    let b = run.cfg.benchmark.clone();
    let scm = match &b.scm {
        Some(p) => ScmSpec::load(p)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(run.cfg.seed, &["benchmark-graph"]));
            let g = random::random_dag(b.nodes, b.edges, &mut rng);
            random::random_linear_gaussian(&g, b.coef_range.0, b.coef_range.1, &mut rng)
        }
    };
    let d = &run.cfg.discovery;
    let rows = benchmark_discovery(&scm, &b.sizes, b.reps, &b.tests, d.alpha, d.max_cond_size, run.cfg.seed)?;
    let mut text = String::from("test,N,median_shd,median_runtime_s\n");
    for test in &b.tests {
        for &n in &b.sizes {
            let cell: Vec<_> = rows.iter().filter(|r| r.test == test.to_string() && r.n == n).collect();
            let mut shd: Vec<f64> = cell.iter().map(|r| r.shd as f64).collect();
            let mut rt: Vec<f64> = cell.iter().map(|r| r.runtime_s).collect();
            let _ = writeln!(text, "{test},{n},{},{:.4}", median(&mut shd), median(&mut rt));
        }
    }
    // Timings vary between runs, so they go to stdout only.
    if !run.quiet {
        print!("{text}");
    }
    run.write("benchmark.csv", &benchmark_csv(&rows))?;
    run.write("benchmark_truth.graph", &scm.graph()?.serialize())?;
    Ok(())
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) }
}
