//! Flat `section.key = value` pipeline configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::ci_tests::CiMethod;
use crate::estimation::{LearnerSpec, TmleConfig, parse_library};
use crate::sensitivity::DEFAULT_MULTIPLIERS;

use super::CliError;

const KEYS: &[&str] = &[
    "seed",
    "output.dir",
    "data.path",
    "data.schema",
    "graph.path",
    "discovery.constraints",
    "discovery.test",
    "discovery.alpha",
    "discovery.runs",
    "discovery.threshold",
    "discovery.max_cond_size",
    "estimand.treatment",
    "estimand.outcome",
    "estimand.contrasts",
    "estimand.confounders",
    "estimand.precision",
    "estimand.allow_pruning",
    "sl.outcome_learners",
    "sl.propensity_learners",
    "sl.folds",
    "censoring.columns",
    "censoring.parents",
    "sensitivity.multipliers",
    "sensitivity.drop_precision",
    "simulate.scm",
    "simulate.n",
    "benchmark.scm",
    "benchmark.nodes",
    "benchmark.edges",
    "benchmark.coef_min",
    "benchmark.coef_max",
    "benchmark.sizes",
    "benchmark.reps",
    "benchmark.tests",
];

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryConfig {
    pub constraints: Option<PathBuf>,
    pub test: CiMethod,
    pub alpha: f64,
    pub runs: usize,
    pub threshold: f64,
    pub max_cond_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimandConfig {
    pub treatment: Option<String>,
    pub outcome: Option<String>,
    pub contrasts: Vec<(f64, f64)>,
    /// `None` means derive from the graph.
    pub confounders: Option<Vec<String>>,
    pub precision: Option<Vec<String>>,
    pub allow_pruning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub scm: Option<PathBuf>,
    pub nodes: usize,
    pub edges: usize,
    pub coef_range: (f64, f64),
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub tests: Vec<CiMethod>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub discovery: DiscoveryConfig,
    pub estimand: EstimandConfig,
    pub outcome_learners: Vec<LearnerSpec>,
    pub propensity_learners: Vec<LearnerSpec>,
    pub folds: usize,
    pub censoring: Vec<String>,
    pub censoring_parents: Vec<String>,
    pub multipliers: Vec<f64>,
    pub drop_precision: bool,
    pub scm: Option<PathBuf>,
    pub simulate_n: usize,
    pub benchmark: BenchmarkConfig,
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

struct Raw<'a> {
    map: BTreeMap<String, String>,
    base: &'a Path,
}

impl Raw<'_> {
    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{v}`"))),
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|v| {
            let p = PathBuf::from(v);
            if p.is_absolute() { p } else { self.base.join(p) }
        })
    }

    fn list_of<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        self.get(key)
            .map(|v| {
                list(v)
                    .iter()
                    .map(|s| s.parse().map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{s}`"))))
                    .collect()
            })
            .transpose()
    }
}

fn parse_contrasts(v: &str) -> Result<Vec<(f64, f64)>, CliError> {
    list(v)
        .iter()
        .map(|c| {
            let (a, b) = c
                .split_once(':')
                .ok_or_else(|| CliError::Config(format!("`estimand.contrasts`: expected `t:t'`, got `{c}`")))?;
            let num = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| CliError::Config(format!("`estimand.contrasts`: bad level `{s}`")))
            };
            Ok((num(a)?, num(b)?))
        })
        .collect()
}

fn parse_bool(key: &str, v: Option<&str>) -> Result<bool, CliError> {
    match v {
        None => Ok(false),
        Some("true") | Some("yes") | Some("1") => Ok(true),
        Some("false") | Some("no") | Some("0") => Ok(false),
        Some(other) => Err(CliError::Config(format!("`{key}`: expected true or false, got `{other}`"))),
    }
}

impl PipelineConfig {
    /// Parses config text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<PipelineConfig, CliError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(CliError::Config(format!("line {}: unknown key `{k}`", i + 1)));
            }
            if map.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: `{k}` set twice", i + 1)));
            }
        }
        let r = Raw { map, base };
        let defaults = TmleConfig::default();
        let library = |key: &str, default: Vec<LearnerSpec>| -> Result<Vec<LearnerSpec>, CliError> {
            match r.get(key) {
                None => Ok(default),
                Some(v) => parse_library(v).map_err(|e| CliError::Config(format!("`{key}`: {e}"))),
            }
        };
        let alpha: f64 = r.parse("discovery.alpha", 0.01)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CliError::Config(format!("`discovery.alpha` must lie in (0, 1), got {alpha}")));
        }
        let threshold: f64 = r.parse("discovery.threshold", 0.5)?;
        if !(0.0..=1.0).contains(&threshold) {
            return Err(CliError::Config(format!("`discovery.threshold` must lie in [0, 1], got {threshold}")));
        }
        let cfg = PipelineConfig {
            seed: r.parse("seed", 0)?,
            output_dir: r.path("output.dir").unwrap_or_else(|| base.join("out")),
            data: r.path("data.path"),
            schema: r.path("data.schema"),
            graph: r.path("graph.path"),
            discovery: DiscoveryConfig {
                constraints: r.path("discovery.constraints"),
                test: r.parse("discovery.test", CiMethod::FisherZ)?,
                alpha,
                runs: r.parse("discovery.runs", 100)?,
                threshold,
                max_cond_size: r.parse("discovery.max_cond_size", 3)?,
            },
            estimand: EstimandConfig {
                treatment: r.get("estimand.treatment").map(String::from),
                outcome: r.get("estimand.outcome").map(String::from),
                contrasts: r.get("estimand.contrasts").map(parse_contrasts).transpose()?.unwrap_or_default(),
                confounders: r.get("estimand.confounders").map(list),
                precision: r.get("estimand.precision").map(list),
                allow_pruning: parse_bool("estimand.allow_pruning", r.get("estimand.allow_pruning"))?,
            },
            outcome_learners: library("sl.outcome_learners", defaults.outcome_learners)?,
            propensity_learners: library("sl.propensity_learners", defaults.propensity_learners)?,
            folds: r.parse("sl.folds", defaults.k_folds)?,
            censoring: r.get("censoring.columns").map(list).unwrap_or_default(),
            censoring_parents: match r.get("censoring.parents") {
                Some("inherit") | None => Vec::new(),
                Some(v) => list(v),
            },
            multipliers: r.list_of("sensitivity.multipliers")?.unwrap_or_else(|| DEFAULT_MULTIPLIERS.to_vec()),
            drop_precision: parse_bool("sensitivity.drop_precision", r.get("sensitivity.drop_precision"))?,
            scm: r.path("simulate.scm"),
            simulate_n: r.parse("simulate.n", 1000)?,
            benchmark: BenchmarkConfig {
                scm: r.path("benchmark.scm"),
                nodes: r.parse("benchmark.nodes", 9)?,
                edges: r.parse("benchmark.edges", 9)?,
                coef_range: (r.parse("benchmark.coef_min", 0.5)?, r.parse("benchmark.coef_max", 1.5)?),
                sizes: r.list_of("benchmark.sizes")?.unwrap_or_else(|| vec![100, 500, 2000]),
                reps: r.parse("benchmark.reps", 20)?,
                tests: r.list_of("benchmark.tests")?.unwrap_or_else(|| vec![CiMethod::FisherZ]),
            },
        };
        if !cfg.censoring.is_empty() && r.get("censoring.parents").is_none() {
            return Err(CliError::Config(
                "`censoring.parents` is required with `censoring.columns`; use `inherit` or a column list".into(),
            ));
        }
        if cfg.multipliers.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(CliError::Config("`sensitivity.multipliers` must be non-negative".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(PipelineConfig, String), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Ok((PipelineConfig::parse(&text, base)?, text))
    }

    pub fn tmle(&self) -> TmleConfig {
        TmleConfig {
            outcome_learners: self.outcome_learners.clone(),
            propensity_learners: self.propensity_learners.clone(),
            k_folds: self.folds,
            censoring: Vec::new(),
            censoring_parents: self.censoring_parents.clone(),
        }
    }

    pub fn require<'a, T>(value: &'a Option<T>, key: &str) -> Result<&'a T, CliError> {
        value.as_ref().ok_or_else(|| CliError::Config(format!("`{key}` is required for this command")))
    }
}
