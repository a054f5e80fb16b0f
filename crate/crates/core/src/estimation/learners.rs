//! Base learners for the Super Learner library.
//!
//! All learners share one interface: fit on a design matrix and either a
//! `[0, 1]` regression target or class labels, then predict an `n x 1`
//! column (regression) or an `n x K` matrix of class probabilities.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use super::EstimationError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearnerSpec {
    InterceptOnly,
    LinearRidge(f64),
    LogisticRidge(f64),
    Knn(usize),
    BoostedStumps { rounds: usize, depth: usize, learning_rate: f64 },
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnerSpec::InterceptOnly => write!(f, "intercept_only"),
            LearnerSpec::LinearRidge(l) => write!(f, "linear_ridge({l})"),
            LearnerSpec::LogisticRidge(l) => write!(f, "logistic_ridge({l})"),
            LearnerSpec::Knn(k) => write!(f, "knn({k})"),
            LearnerSpec::BoostedStumps { rounds, depth, learning_rate } => {
                write!(f, "boosted_stumps({rounds}, {depth}, {learning_rate})")
            }
        }
    }
}

impl FromStr for LearnerSpec {
    type Err = EstimationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || EstimationError::InvalidSpec(format!("unknown learner `{s}`"));
        let (name, args) = match s.find('(') {
            Some(i) if s.ends_with(')') => (s[..i].trim(), &s[i + 1..s.len() - 1]),
            Some(_) => return Err(bad()),
            None => (s, ""),
        };
        let nums: Vec<&str> = args.split(',').map(str::trim).filter(|a| !a.is_empty()).collect();
        let float = |i: usize, default: f64| -> Result<f64, EstimationError> {
            match nums.get(i) {
                None => Ok(default),
                Some(v) => v.parse::<f64>().ok().filter(|x| x.is_finite() && *x >= 0.0).ok_or_else(bad),
            }
        };
        let int = |i: usize, default: usize| -> Result<usize, EstimationError> {
            match nums.get(i) {
                None => Ok(default),
                Some(v) => v.parse::<usize>().ok().filter(|x| *x >= 1).ok_or_else(bad),
            }
        };
        Ok(match name {
            "intercept_only" => LearnerSpec::InterceptOnly,
            "linear_ridge" => LearnerSpec::LinearRidge(float(0, 1.0)?),
            "logistic_ridge" => LearnerSpec::LogisticRidge(float(0, 0.01)?),
            "knn" => LearnerSpec::Knn(int(0, 25)?),
            "boosted_stumps" => LearnerSpec::BoostedStumps {
                rounds: int(0, 100)?,
                depth: int(1, 2)?,
                learning_rate: float(2, 0.1)?,
            },
            _ => return Err(bad()),
        })
    }
}

/// Parses a comma-separated learner list, e.g. `knn(10), linear_ridge(1)`.
pub fn parse_library(text: &str) -> Result<Vec<LearnerSpec>, EstimationError> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    for (i, ch) in text.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(text[start..i].parse()?);
                start = i + 1;
            }
            _ => {}
        }
    }
    if !text[start..].trim().is_empty() {
        out.push(text[start..].parse()?);
    }
    if out.is_empty() {
        return Err(EstimationError::InvalidSpec("empty learner library".into()));
    }
    Ok(out)
}

/// Training target.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    /// Values in `[0, 1]`.
    Regression(&'a [f64]),
    /// Labels in `0..k`.
    Classes { labels: &'a [usize], k: usize },
}

impl Target<'_> {
    fn len(&self) -> usize {
        match self {
            Target::Regression(y) => y.len(),
            Target::Classes { labels, .. } => labels.len(),
        }
    }

    fn width(&self) -> usize {
        match self {
            Target::Regression(_) => 1,
            Target::Classes { k, .. } => *k,
        }
    }

    /// Soft one-hot responses, `n x width`; regression uses its value.
    fn responses(&self) -> DMatrix<f64> {
        match self {
            Target::Regression(y) => DMatrix::from_column_slice(y.len(), 1, y),
            Target::Classes { labels, k } => {
                DMatrix::from_fn(labels.len(), *k, |i, j| if labels[i] == j { 1.0 } else { 0.0 })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tree {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: Box<Tree>, right: Box<Tree> },
}

impl Tree {
    fn predict(&self, row: &[f64]) -> f64 {
        match self {
            Tree::Leaf(v) => *v,
            Tree::Split { feature, threshold, left, right } => {
                if row[*feature] <= *threshold {
                    left.predict(row)
                } else {
                    right.predict(row)
                }
            }
        }
    }
}

const MIN_LEAF: usize = 5;

fn grow(x: &DMatrix<f64>, r: &[f64], rows: &mut [usize], depth: usize) -> Tree {
    let n = rows.len();
    let total: f64 = rows.iter().map(|&i| r[i]).sum();
    let leaf = Tree::Leaf(if n == 0 { 0.0 } else { total / n as f64 });
    if depth == 0 || n < 2 * MIN_LEAF {
        return leaf;
    }
    let base = total * total / n as f64;
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..x.ncols() {
        rows.sort_by(|&a, &b| x[(a, f)].total_cmp(&x[(b, f)]).then(a.cmp(&b)));
        let mut left = 0.0;
        for pos in 0..n - 1 {
            left += r[rows[pos]];
            let (nl, nr) = (pos + 1, n - pos - 1);
            let (xa, xb) = (x[(rows[pos], f)], x[(rows[pos + 1], f)]);
            if nl < MIN_LEAF || nr < MIN_LEAF || xa == xb {
                continue;
            }
            let right = total - left;
            let gain = left * left / nl as f64 + right * right / nr as f64 - base;
            if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, f, 0.5 * (xa + xb)));
            }
        }
    }
    let Some((_, feature, threshold)) = best else { return leaf };
    let (mut l, mut rr): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[(i, feature)] <= threshold);
    Tree::Split {
        feature,
        threshold,
        left: Box::new(grow(x, r, &mut l, depth - 1)),
        right: Box::new(grow(x, r, &mut rr, depth - 1)),
    }
}

/// A fitted learner.
#[derive(Debug, Clone, PartialEq)]
pub enum Fitted {
    Constant(Vec<f64>),
    /// One intercept and slope vector per output column.
    Linear { intercepts: Vec<f64>, slopes: DMatrix<f64>, classes: bool },
    /// Baseline-category logits: class 0 has zero logit.
    Logistic { coef: DMatrix<f64>, k: usize, regression: bool },
    Knn { x: DMatrix<f64>, y: DMatrix<f64>, k: usize },
    Boosted { init: Vec<f64>, trees: Vec<Vec<Tree>>, learning_rate: f64, classes: bool },
}

fn column_means(y: &DMatrix<f64>) -> Vec<f64> {
    (0..y.ncols()).map(|j| y.column(j).mean()).collect()
}

/// Clips each row into `[0, 1]` and rescales it to sum to one.
fn normalize_rows(m: &mut DMatrix<f64>) {
    for mut row in m.row_iter_mut() {
        for v in row.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        let s: f64 = row.sum();
        if s > 0.0 {
            row /= s;
        } else {
            let w = 1.0 / row.len() as f64;
            row.fill(w);
        }
    }
}

fn with_intercept(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::from_element(x.nrows(), x.ncols() + 1, 1.0);
    d.view_mut((0, 1), (x.nrows(), x.ncols())).copy_from(x);
    d
}

fn fit_linear(x: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64, classes: bool) -> Fitted {
    let (n, p) = (x.nrows(), x.ncols());
    let xm: Vec<f64> = (0..p).map(|j| x.column(j).mean()).collect();
    let ym = column_means(y);
    let xc = DMatrix::from_fn(n, p, |i, j| x[(i, j)] - xm[j]);
    let mut gram = xc.transpose() * &xc;
    for j in 0..p {
        gram[(j, j)] += lambda.max(1e-10);
    }
    let yc = DMatrix::from_fn(n, y.ncols(), |i, j| y[(i, j)] - ym[j]);
    let rhs = xc.transpose() * yc;
    let slopes = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram.svd(true, true).solve(&rhs, 1e-12).unwrap_or_else(|_| DMatrix::zeros(p, y.ncols())),
    };
    let intercepts = (0..y.ncols())
        .map(|j| ym[j] - (0..p).map(|l| xm[l] * slopes[(l, j)]).sum::<f64>())
        .collect();
    Fitted::Linear { intercepts, slopes, classes }
}

fn softmax_baseline(eta: &[f64], out: &mut [f64]) {
    let m = eta.iter().fold(0.0f64, |a, &b| a.max(b));
    let denom = (-m).exp() + eta.iter().map(|e| (e - m).exp()).sum::<f64>();
    out[0] = (-m).exp() / denom;
    for (o, e) in out[1..].iter_mut().zip(eta) {
        *o = (e - m).exp() / denom;
    }
}

/// Penalised multinomial (or quasi-binomial) logistic regression by Newton's
/// method with step halving. The intercept is not penalised.
fn fit_logistic(x: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64, regression: bool) -> Fitted {
    let d = with_intercept(x);
    let (n, q) = (d.nrows(), d.ncols());
    let k = y.ncols();
    let m = k - 1;
    let dim = q * m;
    let freq: Vec<f64> = column_means(y).into_iter().map(|v| v.clamp(1e-6, 1.0)).collect();
    let mut beta = DVector::<f64>::zeros(dim);
    for c in 0..m {
        beta[c * q] = (freq[c + 1] / freq[0]).ln();
    }
    let objective = |beta: &DVector<f64>| -> f64 {
        let mut ll = 0.0;
        let mut eta = vec![0.0; m];
        let mut p = vec![0.0; k];
        for i in 0..n {
            for c in 0..m {
                eta[c] = (0..q).map(|j| d[(i, j)] * beta[c * q + j]).sum();
            }
            softmax_baseline(&eta, &mut p);
            for c in 0..k {
                if y[(i, c)] > 0.0 {
                    ll += y[(i, c)] * p[c].max(1e-300).ln();
                }
            }
        }
        let pen: f64 = (0..m).flat_map(|c| (1..q).map(move |j| c * q + j)).map(|t| beta[t] * beta[t]).sum();
        -ll + lambda * pen
    };
    let mut current = objective(&beta);
    for _ in 0..100 {
        let mut grad = DVector::<f64>::zeros(dim);
        let mut hess = DMatrix::<f64>::zeros(dim, dim);
        let mut eta = vec![0.0; m];
        let mut p = vec![0.0; k];
        for i in 0..n {
            for c in 0..m {
                eta[c] = (0..q).map(|j| d[(i, j)] * beta[c * q + j]).sum();
            }
            softmax_baseline(&eta, &mut p);
            for c in 0..m {
                let resid = y[(i, c + 1)] - p[c + 1];
                for j in 0..q {
                    grad[c * q + j] += d[(i, j)] * resid;
                }
                for c2 in 0..m {
                    let w = p[c + 1] * (if c == c2 { 1.0 } else { 0.0 } - p[c2 + 1]);
                    for j in 0..q {
                        let dj = d[(i, j)] * w;
                        for l in 0..q {
                            hess[(c * q + j, c2 * q + l)] += dj * d[(i, l)];
                        }
                    }
                }
            }
        }
        for c in 0..m {
            for j in 1..q {
                grad[c * q + j] -= 2.0 * lambda * beta[c * q + j];
                hess[(c * q + j, c * q + j)] += 2.0 * lambda;
            }
        }
        for t in 0..dim {
            hess[(t, t)] += 1e-9;
        }
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => break,
        };
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let cand = &beta + &step * scale;
            let obj = objective(&cand);
            if obj <= current {
                let gain = current - obj;
                beta = cand;
                current = obj;
                improved = gain > 1e-10 * (1.0 + current.abs());
                break;
            }
            scale *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Fitted::Logistic { coef: DMatrix::from_column_slice(q, m, beta.as_slice()), k, regression }
}

fn fit_boosted(x: &DMatrix<f64>, y: &DMatrix<f64>, rounds: usize, depth: usize, lr: f64, classes: bool) -> Fitted {
    let n = x.nrows();
    let k = y.ncols();
    let init: Vec<f64> = if classes {
        column_means(y).into_iter().map(|f| f.max(1e-6).ln()).collect()
    } else {
        column_means(y)
    };
    let mut f = DMatrix::from_fn(n, k, |_, j| init[j]);
    let mut trees = Vec::with_capacity(rounds);
    let mut rows: Vec<usize> = (0..n).collect();
    for _ in 0..rounds {
        let fitted = if classes {
            let mut p = f.clone();
            for mut row in p.row_iter_mut() {
                let mx = row.max();
                row.apply(|v| *v = (*v - mx).exp());
                let s = row.sum();
                row /= s;
            }
            p
        } else {
            f.clone()
        };
        let mut round = Vec::with_capacity(k);
        for c in 0..k {
            let r: Vec<f64> = (0..n).map(|i| y[(i, c)] - fitted[(i, c)]).collect();
            let tree = grow(x, &r, &mut rows, depth);
            for i in 0..n {
                let row: Vec<f64> = x.row(i).iter().copied().collect();
                f[(i, c)] += lr * tree.predict(&row);
            }
            round.push(tree);
        }
        trees.push(round);
    }
    Fitted::Boosted { init, trees, learning_rate: lr, classes }
}

impl LearnerSpec {
    pub fn fit(&self, x: &DMatrix<f64>, target: Target<'_>) -> Fitted {
        debug_assert_eq!(x.nrows(), target.len());
        let y = target.responses();
        let classes = matches!(target, Target::Classes { .. });
        match *self {
            LearnerSpec::InterceptOnly => Fitted::Constant(column_means(&y)),
            LearnerSpec::LinearRidge(lambda) => fit_linear(x, &y, lambda, classes),
            LearnerSpec::LogisticRidge(lambda) => {
                let y2 = match target {
                    Target::Regression(v) => DMatrix::from_fn(v.len(), 2, |i, j| if j == 1 { v[i] } else { 1.0 - v[i] }),
                    Target::Classes { .. } => y,
                };
                fit_logistic(x, &y2, lambda, !classes)
            }
            LearnerSpec::Knn(k) => Fitted::Knn { x: x.clone(), y, k: k.min(target.len()).max(1) },
            LearnerSpec::BoostedStumps { rounds, depth, learning_rate } => {
                fit_boosted(x, &y, rounds, depth, learning_rate, classes)
            }
        }
    }

    /// Output width for a target.
    pub fn width(target: &Target<'_>) -> usize {
        target.width()
    }
}

impl Fitted {
    /// Predictions: `n x 1` in `[0, 1]` for regression, `n x K` rows summing
    /// to one for classification.
    pub fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = x.nrows();
        match self {
            Fitted::Constant(means) => DMatrix::from_fn(n, means.len(), |_, j| means[j]),
            Fitted::Linear { intercepts, slopes, classes } => {
                let mut out = x * slopes;
                for j in 0..out.ncols() {
                    out.column_mut(j).add_scalar_mut(intercepts[j]);
                }
                if *classes {
                    normalize_rows(&mut out);
                } else {
                    out.apply(|v| *v = v.clamp(0.0, 1.0));
                }
                out
            }
            Fitted::Logistic { coef, k, regression } => {
                let eta = with_intercept(x) * coef;
                let mut p = vec![0.0; *k];
                let mut out = DMatrix::zeros(n, if *regression { 1 } else { *k });
                for i in 0..n {
                    let e: Vec<f64> = eta.row(i).iter().copied().collect();
                    softmax_baseline(&e, &mut p);
                    if *regression {
                        out[(i, 0)] = p[1];
                    } else {
                        for c in 0..*k {
                            out[(i, c)] = p[c];
                        }
                    }
                }
                out
            }
            Fitted::Knn { x: train, y, k } => {
                let m = train.nrows();
                let mut out = DMatrix::zeros(n, y.ncols());
                if train.ncols() == 0 {
                    let means = column_means(y);
                    return DMatrix::from_fn(n, y.ncols(), |_, j| means[j]);
                }
                let mut d: Vec<(f64, usize)> = Vec::with_capacity(m);
                for i in 0..n {
                    d.clear();
                    for t in 0..m {
                        let mut s = 0.0;
                        for j in 0..train.ncols() {
                            let diff = x[(i, j)] - train[(t, j)];
                            s += diff * diff;
                        }
                        d.push((s, t));
                    }
                    let kk = (*k).min(m);
                    d.select_nth_unstable_by(kk - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    for &(_, t) in &d[..kk] {
                        for j in 0..y.ncols() {
                            out[(i, j)] += y[(t, j)] / kk as f64;
                        }
                    }
                }
                out
            }
            Fitted::Boosted { init, trees, learning_rate, classes } => {
                let k = init.len();
                let mut out = DMatrix::from_fn(n, k, |_, j| init[j]);
                for i in 0..n {
                    let row: Vec<f64> = x.row(i).iter().copied().collect();
                    for round in trees {
                        for (c, tree) in round.iter().enumerate() {
                            out[(i, c)] += learning_rate * tree.predict(&row);
                        }
                    }
                }
                if *classes {
                    for mut row in out.row_iter_mut() {
                        let mx = row.max();
                        row.apply(|v| *v = (*v - mx).exp());
                        let s = row.sum();
                        row /= s;
                    }
                } else {
                    out.apply(|v| *v = v.clamp(0.0, 1.0));
                }
                out
            }
        }
    }
}
