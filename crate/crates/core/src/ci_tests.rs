//! Conditional-independence tests and pairwise cause-direction scoring.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::function::erf::erfc;
use statrs::function::gamma::{digamma, gamma_ur};
use thiserror::Error;

use crate::dataset::{ColumnType, DataError, Dataset};
use crate::graph::{CausalGraph, GraphError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CiError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{test}: need more than {needed} rows, got {got}")]
    TooFewRows { test: &'static str, needed: usize, got: usize },
    #[error("column `{0}` is constant")]
    Degenerate(String),
    #[error("column `{0}` is not discrete")]
    NotDiscrete(String),
    #[error("column `{0}` is not continuous")]
    NotContinuous(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, CiError>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CITestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_effective: usize,
    pub test_name: &'static str,
    pub cond_size: usize,
    /// Strata dropped by the chi-squared test for having an empty margin.
    pub skipped_strata: usize,
}

impl CITestResult {
    fn new(test_name: &'static str, statistic: f64, p_value: f64, n_effective: usize, cond_size: usize) -> Self {
        CITestResult {
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
            n_effective,
            test_name,
            cond_size,
            skipped_strata: 0,
        }
    }

    pub fn independent(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

/// Anything that can answer "is `a` independent of `b` given `z`?".
pub trait IndependenceTest {
    fn test(&self, a: &str, b: &str, z: &[&str]) -> Result<CITestResult>;
}

/// Perfect answers read off a known graph: p = 1 when d-separated, else 0.
pub struct DSeparationOracle<'g> {
    graph: &'g CausalGraph,
}

impl<'g> DSeparationOracle<'g> {
    pub fn new(graph: &'g CausalGraph) -> Self {
        DSeparationOracle { graph }
    }
}

impl IndependenceTest for DSeparationOracle<'_> {
    fn test(&self, a: &str, b: &str, z: &[&str]) -> Result<CITestResult> {
        let sep = self.graph.d_separated(&[a], &[b], z)?;
        let p = if sep { 1.0 } else { 0.0 };
        Ok(CITestResult::new("d_separation", 1.0 - p, p, 0, z.len()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CiMethod {
    FisherZ,
    Chi2,
    KnnCmi { k: usize, n_perm: usize },
}

impl FromStr for CiMethod {
    type Err = CiError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fisher_z" => Ok(CiMethod::FisherZ),
            "chi2" => Ok(CiMethod::Chi2),
            "knn_cmi" => Ok(CiMethod::KnnCmi { k: 5, n_perm: 200 }),
            other => Err(CiError::Parameter(format!("unknown test `{other}`"))),
        }
    }
}

impl fmt::Display for CiMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CiMethod::FisherZ => write!(f, "fisher_z"),
            CiMethod::Chi2 => write!(f, "chi2"),
            CiMethod::KnnCmi { .. } => write!(f, "knn_cmi"),
        }
    }
}

/// A data-backed test. Permutation seeds are derived from `seed` and the
/// variable names, so results do not depend on the order of calls.
pub struct DataTest<'d> {
    data: &'d Dataset,
    method: CiMethod,
    seed: u64,
}

impl<'d> DataTest<'d> {
    pub fn new(data: &'d Dataset, method: CiMethod, seed: u64) -> Self {
        DataTest { data, method, seed }
    }
}

impl IndependenceTest for DataTest<'_> {
    fn test(&self, a: &str, b: &str, z: &[&str]) -> Result<CITestResult> {
        match self.method {
            CiMethod::FisherZ => fisher_z(self.data, a, b, z),
            CiMethod::Chi2 => chi2_ci(self.data, a, b, z),
            CiMethod::KnnCmi { k, n_perm } => {
                let (x, y) = if a <= b { (a, b) } else { (b, a) };
                let mut zs: Vec<&str> = z.to_vec();
                zs.sort_unstable();
                let mut parts = vec![x, y];
                parts.extend(zs);
                knn_cmi(self.data, a, b, z, k, n_perm, derive_seed(self.seed, &parts))
            }
        }
    }
}

/// Mixes a base seed with a list of labels (FNV-1a then splitmix64).
pub fn derive_seed(seed: u64, labels: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for label in labels {
        for byte in label.bytes().chain(std::iter::once(0xff)) {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    splitmix(h)
}

pub(crate) fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn complete_values<'d>(ds: &'d Dataset, name: &str) -> Result<&'d [f64]> {
    let col = ds.column(name)?;
    if col.missing_count() > 0 {
        return Err(DataError::HasMissing(name.to_string()).into());
    }
    Ok(col.values())
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

fn check_distinct(a: &str, b: &str, z: &[&str]) -> Result<()> {
    if a == b || z.contains(&a) || z.contains(&b) {
        return Err(CiError::Parameter(format!("`{a}`, `{b}` and the conditioning set must be disjoint")));
    }
    Ok(())
}

/// Residuals of each column of `y` after least squares on `[1, Z]`.
fn residualize(y: DMatrix<f64>, z: &[&[f64]]) -> DMatrix<f64> {
    let n = y.nrows();
    let x = DMatrix::from_fn(n, z.len() + 1, |i, j| if j == 0 { 1.0 } else { z[j - 1][i] });
    let svd = x.clone().svd(true, true);
    let tol = svd.singular_values.max() * 1e-10 * n as f64;
    let beta = svd.solve(&y, tol).expect("u and v were computed");
    y - x * beta
}

/// Fisher z-test on the partial correlation of `a` and `b` given `z`.
pub fn fisher_z(ds: &Dataset, a: &str, b: &str, z: &[&str]) -> Result<CITestResult> {
    check_distinct(a, b, z)?;
    let n = ds.n_rows();
    if n <= z.len() + 3 {
        return Err(CiError::TooFewRows { test: "fisher_z", needed: z.len() + 3, got: n });
    }
    let (va, vb) = (complete_values(ds, a)?, complete_values(ds, b)?);
    for (name, v) in [(a, va), (b, vb)] {
        if is_constant(v) {
            return Err(CiError::Degenerate(name.to_string()));
        }
    }
    let vz = z.iter().map(|c| complete_values(ds, c)).collect::<Result<Vec<_>>>()?;
    let y = DMatrix::from_fn(n, 2, |i, j| if j == 0 { va[i] } else { vb[i] });
    let r = residualize(y, &vz);
    let (ra, rb) = (r.column(0), r.column(1));
    let (saa, sbb, sab) = (ra.dot(&ra), rb.dot(&rb), ra.dot(&rb));
    let scale = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / n as f64;
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
    };
    // A residual with no variance left means the column is a function of Z.
    if saa <= 1e-20 * scale(va) || sbb <= 1e-20 * scale(vb) {
        return Ok(CITestResult::new("fisher_z", 0.0, 1.0, n, z.len()));
    }
    let rho = (sab / (saa * sbb).sqrt()).clamp(-1.0 + 1e-12, 1.0 - 1e-12);
    let stat = ((n - z.len() - 3) as f64).sqrt() * rho.atanh();
    let p = erfc(stat.abs() / std::f64::consts::SQRT_2);
    Ok(CITestResult::new("fisher_z", stat, p, n, z.len()))
}

fn level_index(v: &[f64]) -> (Vec<usize>, usize) {
    let mut levels: Vec<f64> = v.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let idx = v
        .iter()
        .map(|x| levels.binary_search_by(|l| l.total_cmp(x)).expect("level present"))
        .collect();
    (idx, levels.len())
}

/// Pearson chi-squared test summed over the strata of `z`.
pub fn chi2_ci(ds: &Dataset, a: &str, b: &str, z: &[&str]) -> Result<CITestResult> {
    check_distinct(a, b, z)?;
    for name in std::iter::once(&a).chain(std::iter::once(&b)).chain(z.iter()) {
        if !ds.kind(name)?.is_discrete() {
            return Err(CiError::NotDiscrete(name.to_string()));
        }
    }
    let (ia, ka) = level_index(complete_values(ds, a)?);
    let (ib, kb) = level_index(complete_values(ds, b)?);
    let vz = z.iter().map(|c| complete_values(ds, c)).collect::<Result<Vec<_>>>()?;
    let mut strata: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for row in 0..ds.n_rows() {
        let key = vz.iter().map(|c| c[row] as i64).collect();
        strata.entry(key).or_default().push(row);
    }
    let (mut stat, mut df, mut used, mut skipped) = (0.0, 0usize, 0usize, 0usize);
    for rows in strata.values() {
        let mut table = vec![0.0; ka * kb];
        for &r in rows {
            table[ia[r] * kb + ib[r]] += 1.0;
        }
        let row_m: Vec<f64> = (0..ka).map(|i| (0..kb).map(|j| table[i * kb + j]).sum()).collect();
        let col_m: Vec<f64> = (0..kb).map(|j| (0..ka).map(|i| table[i * kb + j]).sum()).collect();
        if row_m.iter().chain(&col_m).any(|&m| m == 0.0) {
            skipped += 1;
            continue;
        }
        let total = rows.len() as f64;
        for i in 0..ka {
            for j in 0..kb {
                let e = row_m[i] * col_m[j] / total;
                stat += (table[i * kb + j] - e).powi(2) / e;
            }
        }
        df += (ka - 1) * (kb - 1);
        used += rows.len();
    }
    let p = if df == 0 || stat <= 0.0 { 1.0 } else { gamma_ur(df as f64 / 2.0, stat / 2.0) };
    let mut res = CITestResult::new("chi2", stat, p, used, z.len());
    res.skipped_strata = skipped;
    Ok(res)
}

fn standardized(ds: &Dataset, name: &str) -> Result<Vec<f64>> {
    let v = complete_values(ds, name)?;
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        return Err(CiError::Degenerate(name.to_string()));
    }
    Ok(v.iter().map(|x| (x - mean) / sd).collect())
}

/// Max-norm distance between rows `i` and `j` over the conditioning columns.
fn z_dist(z: &[Vec<f64>], i: usize, j: usize) -> f64 {
    z.iter().fold(0.0, |m, c| m.max((c[i] - c[j]).abs()))
}

/// Frenzel-Pompe / KSG estimate of I(A;B|Z) with the max-norm.
fn cmi_estimate(a: &[f64], b: &[f64], z: &[Vec<f64>], k: usize, psi: &[f64], buf: &mut Vec<f64>) -> f64 {
    let n = a.len();
    let mut acc = 0.0;
    for i in 0..n {
        buf.clear();
        for j in 0..n {
            if j != i {
                let d = (a[i] - a[j]).abs().max((b[i] - b[j]).abs()).max(z_dist(z, i, j));
                buf.push(d);
            }
        }
        let (_, eps, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
        let eps = *eps;
        let (mut naz, mut nbz, mut nz) = (0usize, 0usize, 0usize);
        for j in 0..n {
            if j == i {
                continue;
            }
            let dz = z_dist(z, i, j);
            if dz < eps {
                nz += 1;
                if (a[i] - a[j]).abs() < eps {
                    naz += 1;
                }
                if (b[i] - b[j]).abs() < eps {
                    nbz += 1;
                }
            }
        }
        if z.is_empty() {
            nz = n - 1;
        }
        acc += psi[naz + 1] + psi[nbz + 1] - psi[nz + 1];
    }
    psi[k] - acc / n as f64
}

/// The `k_perm` nearest rows to each row in Z-space, itself included.
fn z_neighbours(z: &[Vec<f64>], n: usize, k_perm: usize) -> Vec<Vec<usize>> {
    (0..n)
        .map(|i| {
            let mut order: Vec<(f64, usize)> = (0..n).map(|j| (z_dist(z, i, j), j)).collect();
            let k = k_perm.min(n);
            order.select_nth_unstable_by(k - 1, |x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            let mut near: Vec<(f64, usize)> = order[..k].to_vec();
            near.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            near.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

fn local_permutation(neighbours: &[Vec<usize>], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = neighbours.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut used = vec![false; n];
    let mut perm = vec![0; n];
    let mut near = Vec::new();
    for i in order {
        near.clear();
        near.extend_from_slice(&neighbours[i]);
        near.shuffle(rng);
        let pick = near.iter().copied().find(|&j| !used[j]).unwrap_or(near[near.len() - 1]);
        used[pick] = true;
        perm[i] = pick;
    }
    perm
}

pub const K_PERM: usize = 5;

/// kNN conditional mutual information with a local-permutation null.
pub fn knn_cmi(ds: &Dataset, a: &str, b: &str, z: &[&str], k: usize, n_perm: usize, seed: u64) -> Result<CITestResult> {
    check_distinct(a, b, z)?;
    let n = ds.n_rows();
    if n < 50 {
        return Err(CiError::TooFewRows { test: "knn_cmi", needed: 49, got: n });
    }
    if k < 3 || k >= n {
        return Err(CiError::Parameter(format!("k = {k} must satisfy 3 <= k < N = {n}")));
    }
    let va = standardized(ds, a)?;
    let vb = standardized(ds, b)?;
    let vz = z.iter().map(|c| standardized(ds, c)).collect::<Result<Vec<_>>>()?;
    let psi: Vec<f64> = (0..=n + 1).map(|i| if i == 0 { f64::NAN } else { digamma(i as f64) }).collect();
    let mut buf = Vec::with_capacity(n);
    let observed = cmi_estimate(&va, &vb, &vz, k, &psi, &mut buf);
    let neighbours = if vz.is_empty() { Vec::new() } else { z_neighbours(&vz, n, K_PERM) };
    let mut exceed = 0usize;
    let mut permuted = vec![0.0; n];
    for p in 0..n_perm {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(p as u64 + 1);
        let perm = if vz.is_empty() {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            all
        } else {
            local_permutation(&neighbours, &mut rng)
        };
        for (dst, &src) in permuted.iter_mut().zip(&perm) {
            *dst = va[src];
        }
        if cmi_estimate(&permuted, &vb, &vz, k, &psi, &mut buf) >= observed {
            exceed += 1;
        }
    }
    let p = (1 + exceed) as f64 / (1 + n_perm) as f64;
    Ok(CITestResult::new("knn_cmi", observed, p, n, z.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    XtoY,
    YtoX,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionResult {
    pub direction: Direction,
    pub score_xy: f64,
    pub score_yx: f64,
}

pub const DIRECTION_TAU: f64 = 0.02;

/// k-NN regression of `y` on `x` (the point itself counts as a neighbour).
fn knn_smooth(x: &[f64], y: &[f64], k: usize) -> Vec<f64> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]).then(i.cmp(&j)));
    let mut fitted = vec![0.0; n];
    for (pos, &i) in order.iter().enumerate() {
        let (mut lo, mut hi) = (pos, pos + 1);
        while hi - lo < k {
            let left = if lo > 0 { Some(x[i] - x[order[lo - 1]]) } else { None };
            let right = if hi < n { Some(x[order[hi]] - x[i]) } else { None };
            match (left, right) {
                (Some(l), Some(r)) if l <= r => lo -= 1,
                (Some(_), Some(_)) | (None, Some(_)) => hi += 1,
                (Some(_), None) => lo -= 1,
                (None, None) => break,
            }
        }
        fitted[i] = order[lo..hi].iter().map(|&j| y[j]).sum::<f64>() / (hi - lo) as f64;
    }
    fitted
}

/// Sample distance correlation (V-statistic form).
pub fn distance_correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let nf = n as f64;
    let (mut ra, mut rb) = (vec![0.0; n], vec![0.0; n]);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let a = (x[i] - x[j]).abs();
            let b = (y[i] - y[j]).abs();
            ra[i] += a;
            rb[i] += b;
            sab += a * b;
            saa += a * a;
            sbb += b * b;
        }
    }
    ra.iter_mut().for_each(|v| *v /= nf);
    rb.iter_mut().for_each(|v| *v /= nf);
    let (ga, gb) = (ra.iter().sum::<f64>() / nf, rb.iter().sum::<f64>() / nf);
    let cross = |s: f64, r1: &[f64], r2: &[f64], g1: f64, g2: f64| {
        let dot: f64 = r1.iter().zip(r2).map(|(p, q)| p * q).sum();
        (s - 2.0 * nf * dot + nf * nf * g1 * g2) / (nf * nf)
    };
    let dcov = cross(sab, &ra, &rb, ga, gb).max(0.0);
    let va = cross(saa, &ra, &ra, ga, ga);
    let vb = cross(sbb, &rb, &rb, gb, gb);
    if va <= 0.0 || vb <= 0.0 {
        return 0.0;
    }
    (dcov / (va * vb).sqrt()).sqrt()
}

/// Picks the direction whose regression residuals look least dependent on
/// the regressor.
pub fn direction_score(ds: &Dataset, x: &str, y: &str) -> Result<DirectionResult> {
    direction_score_with(ds, x, y, DIRECTION_TAU)
}

pub fn direction_score_with(ds: &Dataset, x: &str, y: &str, tau: f64) -> Result<DirectionResult> {
    let n = ds.n_rows();
    if n < 100 {
        return Err(CiError::TooFewRows { test: "direction_score", needed: 99, got: n });
    }
    for name in [x, y] {
        if ds.kind(name)? != ColumnType::Continuous {
            return Err(CiError::NotContinuous(name.to_string()));
        }
    }
    let (vx, vy) = (standardized(ds, x)?, standardized(ds, y)?);
    let k = (n as f64).sqrt().ceil() as usize;
    let residual = |from: &[f64], to: &[f64]| -> Vec<f64> {
        let fit = knn_smooth(from, to, k);
        to.iter().zip(fit).map(|(t, f)| t - f).collect()
    };
    let score_xy = distance_correlation(&vx, &residual(&vx, &vy));
    let score_yx = distance_correlation(&vy, &residual(&vy, &vx));
    let direction = if (score_xy - score_yx).abs() < tau {
        Direction::Inconclusive
    } else if score_xy < score_yx {
        Direction::XtoY
    } else {
        Direction::YtoX
    };
    Ok(DirectionResult { direction, score_xy, score_yx })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Column;
    use crate::scm::ScmSpec;

    fn cont(cols: &[(&str, Vec<f64>)]) -> Dataset {
        Dataset::new(
            cols.iter()
                .map(|(n, v)| Column::new(*n, ColumnType::Continuous, v.clone()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn fisher_identical_columns() {
        let v: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let ds = cont(&[("A", v.clone()), ("B", v)]);
        let r = fisher_z(&ds, "A", "B", &[]).unwrap();
        assert!(r.p_value < 1e-12);
    }

    #[test]
    fn fisher_errors() {
        let ds = cont(&[("A", vec![1.0, 2.0, 3.0, 4.0]), ("B", vec![1.0, 0.0, 1.0, 2.0]), ("C", vec![1.0; 4])]);
        assert!(matches!(fisher_z(&ds, "A", "B", &["C"]), Err(CiError::TooFewRows { .. })));
        let ds = cont(&[("A", vec![1.0, 2.0, 3.0, 4.0, 5.0]), ("C", vec![1.0; 5])]);
        assert!(matches!(fisher_z(&ds, "A", "C", &[]), Err(CiError::Degenerate(_))));
    }

    #[test]
    fn fisher_chain_screens_off() {
        let scm = ScmSpec::parse("A = gaussian(1)\nB = linear(A:1) + gaussian(1)\nC = linear(B:1) + gaussian(1)").unwrap();
        let ds = scm.sample(2000, 4).unwrap();
        assert!(fisher_z(&ds, "A", "C", &[]).unwrap().p_value < 1e-6);
        let r = fisher_z(&ds, "A", "C", &["B"]).unwrap();
        let s = fisher_z(&ds, "C", "A", &["B"]).unwrap();
        assert!((r.statistic - s.statistic).abs() < 1e-12);
        assert_eq!(r.n_effective, 2000);
    }

    #[test]
    fn chi2_skips_empty_margins() {
        let a = vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0];
        let b = vec![0.0, 1.0, 1.0, 0.0, 1.0, 0.0];
        let z = vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0];
        let ds = Dataset::new(vec![
            Column::new("A", ColumnType::Binary, a).unwrap(),
            Column::new("B", ColumnType::Binary, b).unwrap(),
            Column::new("Z", ColumnType::Binary, z).unwrap(),
        ])
        .unwrap();
        let r = chi2_ci(&ds, "A", "B", &["Z"]).unwrap();
        assert_eq!(r.skipped_strata, 1);
        assert_eq!(r.n_effective, 4);
        assert!(matches!(
            chi2_ci(&cont(&[("A", vec![0.5, 1.0]), ("B", vec![1.0, 0.0])]), "A", "B", &[]),
            Err(CiError::NotDiscrete(_))
        ));
    }

    #[test]
    fn chi2_equal_columns() {
        let v: Vec<f64> = (0..400).map(|i| ((i * 7) % 3 == 0) as u8 as f64).collect();
        let ds = Dataset::new(vec![
            Column::new("A", ColumnType::Binary, v.clone()).unwrap(),
            Column::new("B", ColumnType::Binary, v).unwrap(),
        ])
        .unwrap();
        let r = chi2_ci(&ds, "A", "B", &[]).unwrap();
        assert!(r.p_value < 1e-20);
        assert!((r.statistic - 400.0).abs() < 1e-9);
    }

    #[test]
    fn knn_cmi_detects_dependence_and_is_reproducible() {
        let scm = ScmSpec::parse("A = uniform(0, 1)\nB = linear(A:1) + gaussian(0.05)").unwrap();
        let ds = scm.sample(200, 1).unwrap();
        let r = knn_cmi(&ds, "A", "B", &[], 5, 50, 7).unwrap();
        assert!(r.p_value <= 1.0 / 51.0 + 1e-12);
        assert_eq!(r, knn_cmi(&ds, "A", "B", &[], 5, 50, 7).unwrap());
        assert!(knn_cmi(&ds, "A", "B", &[], 2, 50, 7).is_err());
    }

    #[test]
    fn knn_cmi_conditioning_reduces_information() {
        let scm = ScmSpec::parse("A = uniform(-1, 1)\nB = poly(A^2:1)\nC = linear(B:1) + gaussian(0.1)").unwrap();
        let ds = scm.sample(300, 2).unwrap();
        let marg = knn_cmi(&ds, "A", "C", &[], 5, 0, 0).unwrap();
        let cond = knn_cmi(&ds, "A", "C", &["B"], 5, 0, 0).unwrap();
        assert!(cond.statistic < marg.statistic);
    }

    #[test]
    fn local_permutation_is_a_permutation() {
        let z = vec![(0..40).map(|i| (i as f64).sin()).collect::<Vec<_>>()];
        let nb = z_neighbours(&z, 40, K_PERM);
        assert!(nb.iter().enumerate().all(|(i, v)| v.len() == 5 && v[0] == i));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let perm = local_permutation(&nb, &mut rng);
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert!(sorted.len() >= 30);
    }

    #[test]
    fn distance_correlation_bounds() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        assert!((distance_correlation(&x, &y) - 1.0).abs() < 1e-9);
        assert_eq!(distance_correlation(&x, &vec![2.0; 50]), 0.0);
    }

    #[test]
    fn knn_smoother_averages_neighbours() {
        let x = vec![0.0, 1.0, 2.0, 10.0];
        let y = vec![1.0, 2.0, 3.0, 100.0];
        let f = knn_smooth(&x, &y, 2);
        assert_eq!(f[0], 1.5);
        assert_eq!(f[3], 51.5);
    }

    #[test]
    fn direction_on_uniform_additive_model() {
        let scm = ScmSpec::parse("X = uniform(-0.5, 0.5)\nY = linear(X:1) + uniform(-0.5, 0.5)").unwrap();
        let ds = scm.sample(500, 10).unwrap();
        let r = direction_score(&ds, "X", "Y").unwrap();
        assert_eq!(r.direction, Direction::XtoY, "{r:?}");
    }

    #[test]
    fn oracle_reads_graph() {
        let g = CausalGraph::parse("A -> B\nB -> C").unwrap();
        let o = DSeparationOracle::new(&g);
        assert_eq!(o.test("A", "C", &["B"]).unwrap().p_value, 1.0);
        assert_eq!(o.test("A", "C", &[]).unwrap().p_value, 0.0);
    }

    #[test]
    fn method_names() {
        assert_eq!("knn_cmi".parse::<CiMethod>().unwrap(), CiMethod::KnnCmi { k: 5, n_perm: 200 });
        assert!("kernel".parse::<CiMethod>().is_err());
        assert_ne!(derive_seed(1, &["A", "B"]), derive_seed(1, &["AB"]));
    }
}
