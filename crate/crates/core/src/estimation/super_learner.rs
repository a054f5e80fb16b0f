//! Cross-validated convex ensembles of base learners.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::EstimationError;
use super::learners::{Fitted, LearnerSpec, Target};
use crate::dataset::{ColumnType, Dataset};

type Result<T> = std::result::Result<T, EstimationError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Outcome regression on `[0, 1]`.
    Regression,
    /// Class probabilities for a discrete target.
    Classification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperLearnerSpec {
    pub learners: Vec<LearnerSpec>,
    pub k_folds: usize,
    pub task: Task,
    pub seed: u64,
}

impl SuperLearnerSpec {
    pub fn new(learners: Vec<LearnerSpec>, task: Task) -> Self {
        SuperLearnerSpec { learners, k_folds: 10, task, seed: 0 }
    }

    pub fn with_folds(mut self, k: usize) -> Self {
        self.k_folds = k;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Encoding {
    Numeric { mean: f64, sd: f64 },
    /// Indicators for levels `1..k`.
    Dummies(usize),
}

/// Turns dataset columns into a standardized design matrix. Categorical
/// columns, and any column named in `one_hot`, get level indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    columns: Vec<(String, Encoding)>,
}

impl Encoder {
    pub fn fit(ds: &Dataset, features: &[&str], one_hot: &[&str]) -> Result<Encoder> {
        let mut columns = Vec::with_capacity(features.len());
        for &f in features {
            let col = ds.column(f)?;
            let kind = col.kind();
            let enc = match (kind, kind.levels()) {
                (ColumnType::Categorical(k), _) => Encoding::Dummies(k),
                (_, Some(k)) if one_hot.contains(&f) => Encoding::Dummies(k),
                _ => {
                    let v = col.values();
                    let n = v.len() as f64;
                    let mean = v.iter().sum::<f64>() / n;
                    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                    let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
                    Encoding::Numeric { mean, sd }
                }
            };
            columns.push((f.to_string(), enc));
        }
        Ok(Encoder { columns })
    }

    pub fn width(&self) -> usize {
        self.columns
            .iter()
            .map(|(_, e)| match e {
                Encoding::Numeric { .. } => 1,
                Encoding::Dummies(k) => k - 1,
            })
            .sum()
    }

    pub fn features(&self) -> Vec<&str> {
        self.columns.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Encodes every row; columns listed in `overrides` take the given value.
    pub fn encode(&self, ds: &Dataset, overrides: &[(&str, f64)]) -> Result<DMatrix<f64>> {
        let n = ds.n_rows();
        let mut x = DMatrix::zeros(n, self.width());
        let mut j = 0;
        for (name, enc) in &self.columns {
            let fixed = overrides.iter().find(|(o, _)| o == name).map(|&(_, v)| v);
            let values = ds.values(name)?;
            let value = |i: usize| fixed.unwrap_or(values[i]);
            match enc {
                Encoding::Numeric { mean, sd } => {
                    for i in 0..n {
                        x[(i, j)] = (value(i) - mean) / sd;
                    }
                    j += 1;
                }
                Encoding::Dummies(k) => {
                    for i in 0..n {
                        let level = value(i);
                        for l in 1..*k {
                            x[(i, j + l - 1)] = if level == l as f64 { 1.0 } else { 0.0 };
                        }
                    }
                    j += k - 1;
                }
            }
        }
        Ok(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedSuperLearner {
    encoder: Encoder,
    task: Task,
    /// Distinct target values, in column order, for classification.
    classes: Vec<f64>,
    learners: Vec<LearnerSpec>,
    fits: Vec<Option<Fitted>>,
    weights: Vec<f64>,
    cv_risk: Vec<f64>,
}

impl FittedSuperLearner {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn learners(&self) -> &[LearnerSpec] {
        &self.learners
    }

    /// Held-out loss of each learner.
    pub fn cv_risk(&self) -> &[f64] {
        &self.cv_risk
    }

    pub fn classes(&self) -> &[f64] {
        &self.classes
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn predict(&self, ds: &Dataset) -> Result<DMatrix<f64>> {
        self.predict_with(ds, &[])
    }

    /// Predictions with some feature columns fixed to a value for every row.
    pub fn predict_with(&self, ds: &Dataset, overrides: &[(&str, f64)]) -> Result<DMatrix<f64>> {
        let x = self.encoder.encode(ds, overrides)?;
        let width = match self.task {
            Task::Regression => 1,
            Task::Classification => self.classes.len(),
        };
        let mut out = DMatrix::zeros(x.nrows(), width);
        for (fit, w) in self.fits.iter().zip(&self.weights) {
            if let Some(fit) = fit {
                out += fit.predict(&x) * *w;
            }
        }
        match self.task {
            Task::Regression => out.apply(|v| *v = v.clamp(0.0, 1.0)),
            Task::Classification => {
                for mut row in out.row_iter_mut() {
                    let s = row.sum();
                    row /= s;
                }
            }
        }
        Ok(out)
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Minimises a smooth function over the simplex by projected gradient with
/// backtracking, stopping when an iterate moves less than `tol`.
pub fn simplex_minimize(dim: usize, f: impl Fn(&[f64]) -> (f64, Vec<f64>), tol: f64) -> Vec<f64> {
    let mut w = vec![1.0 / dim as f64; dim];
    if dim == 1 {
        return vec![1.0];
    }
    let (mut fw, mut g) = f(&w);
    let mut step = 1.0;
    for _ in 0..20_000 {
        let mut moved = 0.0f64;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = project_simplex(&w.iter().zip(&g).map(|(a, b)| a - step * b).collect::<Vec<_>>());
            let (fc, gc) = f(&cand);
            let diff: Vec<f64> = cand.iter().zip(&w).map(|(a, b)| a - b).collect();
            let lin: f64 = diff.iter().zip(&g).map(|(d, gi)| d * gi).sum();
            let quad: f64 = diff.iter().map(|d| d * d).sum::<f64>() / (2.0 * step);
            if fc <= fw + lin + quad + 1e-15 {
                moved = diff.iter().fold(0.0, |m, d| m.max(d.abs()));
                w = cand;
                fw = fc;
                g = gc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || moved < tol {
            break;
        }
        step *= 2.0;
    }
    let s: f64 = w.iter().map(|v| v.max(0.0)).sum();
    w.iter().map(|v| v.max(0.0) / s).collect()
}

fn fold_assignment(n: usize, k: usize, labels: Option<&[usize]>, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; n];
    match labels {
        None => {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            for (j, &i) in perm.iter().enumerate() {
                folds[i] = j % k;
            }
        }
        Some(labels) => {
            let n_classes = labels.iter().max().map_or(0, |m| m + 1);
            let mut next = 0;
            for c in 0..n_classes {
                let mut rows: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
                rows.shuffle(&mut rng);
                for i in rows {
                    folds[i] = next % k;
                    next += 1;
                }
            }
        }
    }
    folds
}

/// Fits a Super Learner of `target` on `features`. Columns in `one_hot` are
/// encoded as level indicators.
pub fn sl_fit(
    ds: &Dataset,
    target: &str,
    features: &[&str],
    one_hot: &[&str],
    spec: &SuperLearnerSpec,
) -> Result<FittedSuperLearner> {
    let n = ds.n_rows();
    if spec.learners.is_empty() {
        return Err(EstimationError::InvalidSpec("empty learner library".into()));
    }
    if spec.k_folds < 2 || spec.k_folds > n {
        return Err(EstimationError::Folds { k: spec.k_folds, n });
    }
    ds.subset(&[target])?.ensure_complete()?;
    ds.subset(features)?.ensure_complete()?;
    let y = ds.values(target)?;
    let encoder = Encoder::fit(ds, features, one_hot)?;
    let x = encoder.encode(ds, &[])?;

    let (classes, labels): (Vec<f64>, Vec<usize>) = match spec.task {
        Task::Regression => {
            if let Some(v) = y.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(EstimationError::InvalidSpec(format!(
                    "regression target `{target}` has value {v} outside [0, 1]"
                )));
            }
            (Vec::new(), Vec::new())
        }
        Task::Classification => {
            if !ds.kind(target)?.is_discrete() {
                return Err(EstimationError::NotDiscrete(target.into()));
            }
            let mut classes: Vec<f64> = y.to_vec();
            classes.sort_by(f64::total_cmp);
            classes.dedup();
            if classes.len() < 2 {
                return Err(EstimationError::InvalidSpec(format!("`{target}` has a single level")));
            }
            let labels = y.iter().map(|v| classes.iter().position(|c| c == v).unwrap()).collect();
            (classes, labels)
        }
    };
    let k = classes.len();
    let make_target = |rows: &[usize], buf_y: &mut Vec<f64>, buf_l: &mut Vec<usize>| {
        buf_y.clear();
        buf_l.clear();
        match spec.task {
            Task::Regression => buf_y.extend(rows.iter().map(|&i| y[i])),
            Task::Classification => buf_l.extend(rows.iter().map(|&i| labels[i])),
        }
    };

    let folds = fold_assignment(
        n,
        spec.k_folds,
        (spec.task == Task::Classification).then_some(labels.as_slice()),
        spec.seed,
    );
    let width = if spec.task == Task::Regression { 1 } else { k };
    let n_learners = spec.learners.len();
    let mut cv: Vec<DMatrix<f64>> = vec![DMatrix::zeros(n, width); n_learners];
    let (mut ty, mut tl) = (Vec::new(), Vec::new());
    for fold in 0..spec.k_folds {
        let train: Vec<usize> = (0..n).filter(|&i| folds[i] != fold).collect();
        let test: Vec<usize> = (0..n).filter(|&i| folds[i] == fold).collect();
        if test.is_empty() {
            continue;
        }
        make_target(&train, &mut ty, &mut tl);
        if spec.task == Task::Classification {
            for c in 0..k {
                if !tl.contains(&c) {
                    return Err(EstimationError::DegenerateFold { column: target.into(), level: classes[c] });
                }
            }
        }
        let xt = x.select_rows(&train);
        let xv = x.select_rows(&test);
        let tgt = match spec.task {
            Task::Regression => Target::Regression(&ty),
            Task::Classification => Target::Classes { labels: &tl, k },
        };
        for (l, learner) in spec.learners.iter().enumerate() {
            let pred = learner.fit(&xt, tgt).predict(&xv);
            for (r, &i) in test.iter().enumerate() {
                for c in 0..width {
                    cv[l][(i, c)] = pred[(r, c)];
                }
            }
        }
    }

    const FLOOR: f64 = 1e-6;
    let (weights, cv_risk) = match spec.task {
        Task::Regression => {
            let risk = cv
                .iter()
                .map(|p| (0..n).map(|i| (y[i] - p[(i, 0)]).powi(2)).sum::<f64>() / n as f64)
                .collect();
            let f = |w: &[f64]| {
                let mut g = vec![0.0; n_learners];
                let mut loss = 0.0;
                for i in 0..n {
                    let r = y[i] - (0..n_learners).map(|l| w[l] * cv[l][(i, 0)]).sum::<f64>();
                    loss += r * r;
                    for l in 0..n_learners {
                        g[l] -= 2.0 * r * cv[l][(i, 0)];
                    }
                }
                g.iter_mut().for_each(|v| *v /= n as f64);
                (loss / n as f64, g)
            };
            (simplex_minimize(n_learners, f, 1e-8), risk)
        }
        Task::Classification => {
            let risk = cv
                .iter()
                .map(|p| -(0..n).map(|i| p[(i, labels[i])].max(FLOOR).ln()).sum::<f64>() / n as f64)
                .collect();
            let f = |w: &[f64]| {
                let mut g = vec![0.0; n_learners];
                let mut loss = 0.0;
                for i in 0..n {
                    let m = (0..n_learners).map(|l| w[l] * cv[l][(i, labels[i])]).sum::<f64>().max(FLOOR);
                    loss -= m.ln();
                    for l in 0..n_learners {
                        g[l] -= cv[l][(i, labels[i])] / m;
                    }
                }
                g.iter_mut().for_each(|v| *v /= n as f64);
                (loss / n as f64, g)
            };
            (simplex_minimize(n_learners, f, 1e-8), risk)
        }
    };

    let all: Vec<usize> = (0..n).collect();
    make_target(&all, &mut ty, &mut tl);
    let tgt = match spec.task {
        Task::Regression => Target::Regression(&ty),
        Task::Classification => Target::Classes { labels: &tl, k },
    };
    let fits = spec
        .learners
        .iter()
        .zip(&weights)
        .map(|(l, &w)| (w > 0.0).then(|| l.fit(&x, tgt)))
        .collect();
    Ok(FittedSuperLearner {
        encoder,
        task: spec.task,
        classes,
        learners: spec.learners.clone(),
        fits,
        weights,
        cv_risk,
    })
}
