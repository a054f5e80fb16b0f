//! Propensity fitting, clever covariates, logistic fluctuation and
//! influence-function inference.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;
use statrs::function::erf::erfc;

use super::EstimationError;
use super::learners::LearnerSpec;
use super::super_learner::{FittedSuperLearner, SuperLearnerSpec, Task, sl_fit};
use crate::ci_tests::derive_seed;
use crate::dataset::{ColumnType, Dataset, format_value};
use crate::identification::{EstimandSpec, contrast_label};

type Result<T> = std::result::Result<T, EstimationError>;

pub const PROPENSITY_BOUNDS: (f64, f64) = (0.025, 0.975);
/// Outcome predictions are clamped to this band before taking logits.
pub const LOGIT_CLAMP: f64 = 1e-4;
const Z95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq)]
pub struct TmleConfig {
    pub outcome_learners: Vec<LearnerSpec>,
    pub propensity_learners: Vec<LearnerSpec>,
    pub k_folds: usize,
    /// Observation indicators (1 = observed) produced by censoring handling.
    pub censoring: Vec<String>,
    /// Covariates of the censoring model besides the treatment; defaults to
    /// the confounders when empty.
    pub censoring_parents: Vec<String>,
}

impl Default for TmleConfig {
    fn default() -> Self {
        TmleConfig {
            outcome_learners: vec![
                LearnerSpec::InterceptOnly,
                LearnerSpec::LinearRidge(1.0),
                LearnerSpec::LogisticRidge(0.01),
                LearnerSpec::Knn(25),
                LearnerSpec::BoostedStumps { rounds: 100, depth: 2, learning_rate: 0.1 },
            ],
            propensity_learners: vec![
                LearnerSpec::InterceptOnly,
                LearnerSpec::LogisticRidge(0.01),
                LearnerSpec::Knn(25),
                LearnerSpec::BoostedStumps { rounds: 50, depth: 2, learning_rate: 0.1 },
            ],
            k_folds: 10,
            censoring: Vec::new(),
            censoring_parents: Vec::new(),
        }
    }
}

/// Fitted generalised propensity scores, one column per observed level.
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityFit {
    pub levels: Vec<f64>,
    pub raw: DMatrix<f64>,
    /// Clipped and renormalised.
    pub g: DMatrix<f64>,
    pub raw_min: f64,
    pub raw_max: f64,
    pub clipped: usize,
    pub weights: Vec<(String, f64)>,
}

impl PropensityFit {
    pub fn column(&self, level: f64) -> Option<Vec<f64>> {
        let j = self.levels.iter().position(|&l| l == level)?;
        Some(self.g.column(j).iter().copied().collect())
    }
}

/// Clips every entry into `[lo, hi]`, returning the clipped matrix and the
/// number of entries that moved.
pub fn clip_entries(raw: &DMatrix<f64>, lo: f64, hi: f64) -> (DMatrix<f64>, usize) {
    let mut out = raw.clone();
    let mut moved = 0;
    for v in out.iter_mut() {
        let c = v.clamp(lo, hi);
        if c != *v {
            moved += 1;
        }
        *v = c;
    }
    (out, moved)
}

pub fn renormalize_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    out
}

/// [`clip_entries`] followed by [`renormalize_rows`].
pub fn clip_propensities(raw: &DMatrix<f64>, lo: f64, hi: f64) -> (DMatrix<f64>, usize) {
    let (clipped, moved) = clip_entries(raw, lo, hi);
    (renormalize_rows(&clipped), moved)
}

fn observed_levels(ds: &Dataset, t: &str) -> Result<Vec<f64>> {
    if !ds.kind(t)?.is_discrete() {
        return Err(EstimationError::NotDiscrete(t.into()));
    }
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &v in ds.values(t)? {
        *counts.entry(v as i64).or_default() += 1;
    }
    if counts.len() < 2 {
        return Err(EstimationError::InvalidSpec(format!("treatment `{t}` has fewer than two observed levels")));
    }
    if let Some((&level, &count)) = counts.iter().find(|(_, c)| **c < 2) {
        return Err(EstimationError::SparseLevel { column: t.into(), level: level as f64, count });
    }
    Ok(counts.keys().map(|&l| l as f64).collect())
}

/// Propensity of each treatment level given the confounders. With no
/// confounders the empirical level frequencies are used.
pub fn fit_propensity(
    ds: &Dataset,
    t: &str,
    confounders: &[&str],
    learners: &[LearnerSpec],
    k_folds: usize,
    seed: u64,
) -> Result<PropensityFit> {
    let levels = observed_levels(ds, t)?;
    let n = ds.n_rows();
    let (raw, weights) = if confounders.is_empty() {
        let tv = ds.values(t)?;
        let freq: Vec<f64> =
            levels.iter().map(|l| tv.iter().filter(|v| *v == l).count() as f64 / n as f64).collect();
        (DMatrix::from_fn(n, levels.len(), |_, j| freq[j]), Vec::new())
    } else {
        let spec = SuperLearnerSpec::new(learners.to_vec(), Task::Classification).with_folds(k_folds).with_seed(seed);
        let fit = sl_fit(ds, t, confounders, &[], &spec)?;
        (fit.predict(ds)?, named_weights(&fit))
    };
    let raw_min = raw.min();
    let raw_max = raw.max();
    let (g, clipped) = clip_propensities(&raw, PROPENSITY_BOUNDS.0, PROPENSITY_BOUNDS.1);
    Ok(PropensityFit { levels, raw, g, raw_min, raw_max, clipped, weights })
}

fn named_weights(fit: &FittedSuperLearner) -> Vec<(String, f64)> {
    fit.learners().iter().zip(fit.weights()).map(|(l, &w)| (l.to_string(), w)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleverCovariates {
    /// At the observed treatment.
    pub h: Vec<f64>,
    pub h_t: Vec<f64>,
    pub h_t_prime: Vec<f64>,
}

/// `H_i = 1[T_i = t] / g_i(t) - 1[T_i = t'] / g_i(t')`, plus the two
/// counterfactual columns.
pub fn clever_covariates(treatment: &[f64], g_t: &[f64], g_tp: &[f64], t: f64, t_prime: f64) -> CleverCovariates {
    assert!(g_t.iter().chain(g_tp).all(|&g| g > 0.0), "propensities must be positive");
    let h_t: Vec<f64> = g_t.iter().map(|g| 1.0 / g).collect();
    let h_t_prime: Vec<f64> = g_tp.iter().map(|g| -1.0 / g).collect();
    let h = treatment
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut x = 0.0;
            if v == t {
                x += h_t[i];
            }
            if v == t_prime {
                x += h_t_prime[i];
            }
            x
        })
        .collect();
    CleverCovariates { h, h_t, h_t_prime }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fluctuation {
    pub epsilon: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub(crate) fn logit(p: f64) -> f64 {
    let p = p.clamp(LOGIT_CLAMP, 1.0 - LOGIT_CLAMP);
    (p / (1.0 - p)).ln()
}

use crate::scm::sigmoid;

/// Fits `y ~ sigmoid(logit(q0) + eps * h)` by Newton's method on the
/// quasi-binomial likelihood. Falls back to `eps = 0` without convergence.
pub fn tmle_fluctuate(y: &[f64], q0: &[f64], h: &[f64]) -> Fluctuation {
    let n = y.len() as f64;
    if h.iter().all(|&v| v == 0.0) {
        return Fluctuation { epsilon: 0.0, converged: true, iterations: 0 };
    }
    let offset: Vec<f64> = q0.iter().map(|&q| logit(q)).collect();
    let loglik = |eps: f64| -> f64 {
        let mut s = 0.0;
        for i in 0..y.len() {
            let z = offset[i] + eps * h[i];
            s -= y[i] * softplus(-z) + (1.0 - y[i]) * softplus(z);
        }
        s / n
    };
    let score_info = |eps: f64| -> (f64, f64) {
        let (mut s, mut info) = (0.0, 0.0);
        for i in 0..y.len() {
            let p = sigmoid(offset[i] + eps * h[i]);
            s += h[i] * (y[i] - p);
            info += h[i] * h[i] * p * (1.0 - p);
        }
        (s / n, info / n)
    };
    let mut eps = 0.0;
    let mut current = loglik(eps);
    let mut iterations = 0;
    let (mut score, mut info) = score_info(eps);
    while iterations < 100 && score.abs() >= 1e-12 {
        iterations += 1;
        if !(info > 0.0) {
            break;
        }
        let step = score / info;
        let mut scale = 1.0;
        let mut moved = false;
        for _ in 0..50 {
            let cand = eps + scale * step;
            let ll = loglik(cand);
            // Near the optimum the likelihood change drowns in rounding, so
            // a smaller score also counts as progress.
            if ll >= current || score_info(cand).0.abs() < score.abs() {
                eps = cand;
                current = ll;
                moved = true;
                break;
            }
            scale *= 0.5;
        }
        if !moved {
            break;
        }
        (score, info) = score_info(eps);
    }
    if score.abs() < 1e-10 && eps.is_finite() {
        Fluctuation { epsilon: eps, converged: true, iterations }
    } else {
        Fluctuation { epsilon: 0.0, converged: false, iterations }
    }
}

/// Outcome-scale values when the outcome was min-max rescaled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OriginalScale {
    pub psi_naive: f64,
    pub psi_initial: f64,
    pub psi_targeted: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContrastEstimate {
    pub t: f64,
    pub t_prime: f64,
    pub label: String,
    pub psi_naive: f64,
    pub psi_initial: f64,
    pub psi_targeted: f64,
    pub epsilon: f64,
    pub converged: bool,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub p_value: f64,
    pub original: Option<OriginalScale>,
    #[serde(skip)]
    pub influence: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub n: usize,
    pub propensity_min: f64,
    pub propensity_max: f64,
    pub clipped: usize,
    pub confounders: Vec<String>,
    pub precision: Vec<String>,
    pub censoring: Vec<String>,
    pub outcome_bounds: Option<(f64, f64)>,
    pub outcome_weights: Vec<(String, f64)>,
    pub propensity_weights: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetedResult {
    pub treatment: String,
    pub outcome: String,
    pub contrasts: Vec<ContrastEstimate>,
    pub diagnostics: Diagnostics,
}

impl TargetedResult {
    pub fn contrast(&self, t: f64, t_prime: f64) -> Option<&ContrastEstimate> {
        self.contrasts.iter().find(|c| c.t == t && c.t_prime == t_prime)
    }
}

/// Mean difference of counterfactual predictions for each contrast. Rows are
/// evaluated at both treatment levels; `fixed` pins other columns (such as
/// censoring indicators) for every row.
pub fn plug_in_ate(
    q: &FittedSuperLearner,
    ds: &Dataset,
    treatment: &str,
    contrasts: &[(f64, f64)],
    fixed: &[(&str, f64)],
) -> Result<Vec<f64>> {
    let mut cache: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    let mut out = Vec::with_capacity(contrasts.len());
    for &(t, tp) in contrasts {
        for level in [t, tp] {
            if let std::collections::btree_map::Entry::Vacant(e) = cache.entry(level as i64) {
                e.insert(counterfactual(q, ds, treatment, level, fixed)?);
            }
        }
        let (a, b) = (&cache[&(t as i64)], &cache[&(tp as i64)]);
        out.push(a.iter().zip(b).map(|(x, y)| x - y).sum::<f64>() / ds.n_rows() as f64);
    }
    Ok(out)
}

fn counterfactual(q: &FittedSuperLearner, ds: &Dataset, t: &str, level: f64, fixed: &[(&str, f64)]) -> Result<Vec<f64>> {
    let mut overrides = vec![(t, level)];
    overrides.extend_from_slice(fixed);
    Ok(q.predict_with(ds, &overrides)?.column(0).iter().copied().collect())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Full targeted estimation of every contrast in `spec`.
pub fn tmle_estimate(ds: &Dataset, spec: &EstimandSpec, cfg: &TmleConfig, seed: u64) -> Result<TargetedResult> {
    spec.validate()?;
    let (t, yname) = (spec.treatment.as_str(), spec.outcome.as_str());
    let conf: Vec<&str> = spec.confounders.iter().map(String::as_str).collect();
    let prec: Vec<&str> = spec.precision.iter().map(String::as_str).collect();
    let cens: Vec<&str> = cfg.censoring.iter().map(String::as_str).collect();
    let mut used = vec![t, yname];
    used.extend(&conf);
    used.extend(&prec);
    used.extend(&cens);
    ds.subset(&used)?.ensure_complete()?;

    let data = match ds.kind(yname)? {
        ColumnType::Binary => ds.clone(),
        ColumnType::Continuous => ds.rescale_outcome(yname)?,
        kind => return Err(EstimationError::OutcomeType { column: yname.into(), kind: kind.to_string() }),
    };
    let outcome_bounds = data.column(yname)?.bounds();
    let n = data.n_rows();
    let y = data.values(yname)?;
    let tv = data.values(t)?;
    let mut warnings = Vec::new();

    let levels = observed_levels(&data, t)?;
    for &(a, b) in &spec.contrasts {
        for l in [a, b] {
            if !levels.contains(&l) {
                return Err(EstimationError::EmptyArm { column: t.into(), level: l });
            }
        }
    }

    // Joint observation indicator and its model given treatment and parents.
    let observed: Vec<f64> = (0..n)
        .map(|i| {
            let all = cens.iter().all(|c| data.values(c).map(|v| v[i] == 1.0).unwrap_or(false));
            if all { 1.0 } else { 0.0 }
        })
        .collect();
    let fixed: Vec<(&str, f64)> = cens.iter().map(|&c| (c, 1.0)).collect();

    let mut features = vec![t];
    features.extend(&cens);
    features.extend(&conf);
    features.extend(&prec);
    let out_spec = SuperLearnerSpec::new(cfg.outcome_learners.clone(), Task::Regression)
        .with_folds(cfg.k_folds)
        .with_seed(derive_seed(seed, &["outcome"]));
    let q = sl_fit(&data, yname, &features, &[t], &out_spec)?;
    let q_obs: Vec<f64> = q.predict(&data)?.column(0).iter().copied().collect();

    let g = fit_propensity(&data, t, &conf, &cfg.propensity_learners, cfg.k_folds, derive_seed(seed, &["propensity"]))?;
    if g.clipped > 0 {
        warnings.push(format!(
            "{} propensity entries clipped to [{}, {}] (raw range {:.4}..{:.4})",
            g.clipped, PROPENSITY_BOUNDS.0, PROPENSITY_BOUNDS.1, g.raw_min, g.raw_max
        ));
    }

    let censor_model = if cens.is_empty() {
        None
    } else {
        let parents: Vec<&str> = if cfg.censoring_parents.is_empty() {
            conf.clone()
        } else {
            cfg.censoring_parents.iter().map(String::as_str).collect()
        };
        let name = "__observed";
        let with_ind = data.with_column(crate::dataset::Column::new(name, ColumnType::Binary, observed.clone())?)?;
        let mut cf = vec![t];
        cf.extend(parents.iter().filter(|p| **p != t));
        let spec = SuperLearnerSpec::new(cfg.propensity_learners.clone(), Task::Classification)
            .with_folds(cfg.k_folds)
            .with_seed(derive_seed(seed, &["censoring"]));
        Some((sl_fit(&with_ind, name, &cf, &[t], &spec)?, with_ind))
    };
    let observation_prob = |level: f64| -> Result<Vec<f64>> {
        match &censor_model {
            None => Ok(vec![1.0; n]),
            Some((m, d)) => {
                let p = m.predict_with(d, &[(t, level)])?;
                let j = m.classes().iter().position(|&c| c == 1.0).unwrap_or(0);
                Ok(p.column(j).iter().map(|v| v.max(PROPENSITY_BOUNDS.0)).collect())
            }
        }
    };

    let mut cache: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    let mut contrasts = Vec::with_capacity(spec.contrasts.len());
    for &(a, b) in &spec.contrasts {
        for level in [a, b] {
            if let std::collections::btree_map::Entry::Vacant(e) = cache.entry(level as i64) {
                e.insert(counterfactual(&q, &data, t, level, &fixed)?);
            }
        }
        let (qa, qb) = (&cache[&(a as i64)], &cache[&(b as i64)]);
        let psi_initial = qa.iter().zip(qb).map(|(x, z)| x - z).sum::<f64>() / n as f64;

        let ga: Vec<f64> = g.column(a).unwrap().iter().zip(observation_prob(a)?).map(|(x, p)| x * p).collect();
        let gb: Vec<f64> = g.column(b).unwrap().iter().zip(observation_prob(b)?).map(|(x, p)| x * p).collect();
        let mut cc = clever_covariates(tv, &ga, &gb, a, b);
        for (h, o) in cc.h.iter_mut().zip(&observed) {
            *h *= o;
        }
        let fl = tmle_fluctuate(y, &q_obs, &cc.h);
        if !fl.converged {
            warnings.push(format!("fluctuation for contrast {} did not converge; epsilon set to 0", contrast_label(a, b)));
        }
        let update = |q0: f64, h: f64| sigmoid(logit(q0) + fl.epsilon * h);
        let qs_obs: Vec<f64> = (0..n).map(|i| update(q_obs[i], cc.h[i])).collect();
        let qs_a: Vec<f64> = (0..n).map(|i| update(qa[i], cc.h_t[i])).collect();
        let qs_b: Vec<f64> = (0..n).map(|i| update(qb[i], cc.h_t_prime[i])).collect();
        let diff: Vec<f64> = qs_a.iter().zip(&qs_b).map(|(x, z)| x - z).collect();
        let psi = mean(&diff);
        let influence: Vec<f64> = (0..n).map(|i| cc.h[i] * (y[i] - qs_obs[i]) + diff[i] - psi).collect();
        let if_mean = mean(&influence);
        let var = influence.iter().map(|v| (v - if_mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        let p_value = if se > 0.0 {
            erfc(psi.abs() / (se * std::f64::consts::SQRT_2)).clamp(0.0, 1.0)
        } else if psi == 0.0 {
            1.0
        } else {
            0.0
        };

        let arm_mean = |level: f64| -> f64 {
            let (s, c) = (0..n)
                .filter(|&i| tv[i] == level && observed[i] == 1.0)
                .fold((0.0, 0usize), |(s, c), i| (s + y[i], c + 1));
            if c == 0 { f64::NAN } else { s / c as f64 }
        };
        let psi_naive = arm_mean(a) - arm_mean(b);
        let (ci_lo, ci_hi) = (psi - Z95 * se, psi + Z95 * se);
        let original = match outcome_bounds {
            Some((lo, hi)) => {
                let s = hi - lo;
                Some(OriginalScale {
                    psi_naive: psi_naive * s,
                    psi_initial: psi_initial * s,
                    psi_targeted: psi * s,
                    se: se * s,
                    ci_lo: ci_lo * s,
                    ci_hi: ci_hi * s,
                })
            }
            None => None,
        };
        contrasts.push(ContrastEstimate {
            t: a,
            t_prime: b,
            label: contrast_label(a, b),
            psi_naive,
            psi_initial,
            psi_targeted: psi,
            epsilon: fl.epsilon,
            converged: fl.converged,
            se,
            ci_lo,
            ci_hi,
            p_value,
            original,
            influence,
        });
    }

    Ok(TargetedResult {
        treatment: t.into(),
        outcome: yname.into(),
        contrasts,
        diagnostics: Diagnostics {
            n,
            propensity_min: g.raw_min,
            propensity_max: g.raw_max,
            clipped: g.clipped,
            confounders: spec.confounders.clone(),
            precision: spec.precision.clone(),
            censoring: cfg.censoring.clone(),
            outcome_bounds,
            outcome_weights: named_weights(&q),
            propensity_weights: g.weights,
            warnings,
        },
    })
}

impl std::fmt::Display for TargetedResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let d = &self.diagnostics;
        writeln!(f, "treatment: {}", self.treatment)?;
        writeln!(f, "outcome: {}", self.outcome)?;
        writeln!(f, "N = {}", d.n)?;
        writeln!(f, "confounders: {{{}}}", d.confounders.join(", "))?;
        writeln!(f, "precision: {{{}}}", d.precision.join(", "))?;
        if !d.censoring.is_empty() {
            writeln!(f, "censoring: {{{}}}", d.censoring.join(", "))?;
        }
        writeln!(f, "propensity range before clipping: [{:.4}, {:.4}], {} clipped", d.propensity_min, d.propensity_max, d.clipped)?;
        let weights = |w: &[(String, f64)]| w.iter().map(|(n, v)| format!("{n}={v:.3}")).collect::<Vec<_>>().join(" ");
        writeln!(f, "outcome learner weights: {}", weights(&d.outcome_weights))?;
        if !d.propensity_weights.is_empty() {
            writeln!(f, "propensity learner weights: {}", weights(&d.propensity_weights))?;
        }
        for c in &self.contrasts {
            writeln!(f)?;
            writeln!(f, "contrast {}", c.label)?;
            writeln!(f, "  naive     {:.6}", c.psi_naive)?;
            writeln!(f, "  plug-in   {:.6}", c.psi_initial)?;
            writeln!(f, "  targeted  {:.6}  (epsilon {:.3e}{})", c.psi_targeted, c.epsilon, if c.converged { "" } else { ", not converged" })?;
            writeln!(f, "  SE {:.6}  95% CI [{:.6}, {:.6}]  p = {:.4e}", c.se, c.ci_lo, c.ci_hi, c.p_value)?;
            if let Some(o) = &c.original {
                writeln!(
                    f,
                    "  original scale: targeted {}  CI [{}, {}]",
                    format_value((o.psi_targeted * 1e6).round() / 1e6),
                    format_value((o.ci_lo * 1e6).round() / 1e6),
                    format_value((o.ci_hi * 1e6).round() / 1e6)
                )?;
            }
        }
        for w in &d.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}
