//! PC structure discovery, user constraints, bootstrap edge confidences and
//! structural Hamming distance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::ci_tests::{derive_seed, CiError, CiMethod, DataTest, IndependenceTest};
use crate::dataset::{DataError, Dataset};
use crate::graph::{CausalGraph, GraphError};
use crate::scm::{ScmError, ScmSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscoveryError {
    #[error(transparent)]
    Test(#[from] CiError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error("constraint references unknown node `{0}`")]
    UnknownNode(String),
    #[error("constraints line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
    #[error("bootstrap needs at least one run")]
    NoRuns,
    #[error("graphs have different node sets")]
    NodeMismatch,
}

pub type Result<T> = std::result::Result<T, DiscoveryError>;

/// Background knowledge restricting which edges discovery may propose.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiscoveryConstraints {
    forbidden: BTreeSet<(String, String)>,
    absent: BTreeSet<(String, String)>,
    tiers: BTreeMap<String, u32>,
}

impl DiscoveryConstraints {
    pub fn new() -> Self {
        Self::default()
    }

    /// Never propose `from -> to`.
    pub fn forbid(mut self, from: &str, to: &str) -> Self {
        self.forbidden.insert((from.to_string(), to.to_string()));
        self
    }

    /// `a` and `b` are never adjacent.
    pub fn absent(mut self, a: &str, b: &str) -> Self {
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        self.absent.insert((x.to_string(), y.to_string()));
        self
    }

    /// Edges may not point from a higher tier to a lower one.
    pub fn tier(mut self, node: &str, tier: u32) -> Self {
        self.tiers.insert(node.to_string(), tier);
        self
    }

    pub fn forbidden(&self) -> &BTreeSet<(String, String)> {
        &self.forbidden
    }

    pub fn tiers(&self) -> &BTreeMap<String, u32> {
        &self.tiers
    }

    pub fn is_empty(&self) -> bool {
        self.forbidden.is_empty() && self.absent.is_empty() && self.tiers.is_empty()
    }

    /// Whether `from -> to` is permitted by the forbidden list and tiers.
    pub fn allows(&self, from: &str, to: &str) -> bool {
        if self.forbidden.contains(&(from.to_string(), to.to_string())) {
            return false;
        }
        match (self.tiers.get(from), self.tiers.get(to)) {
            (Some(a), Some(b)) => a <= b,
            _ => true,
        }
    }

    /// Parses `forbid A B`, `absent A B` and `tier A 0` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = DiscoveryConstraints::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            let err = |message: String| DiscoveryError::Syntax { line: i + 1, message };
            c = match words.as_slice() {
                ["forbid", a, b] => c.forbid(a, b),
                ["absent", a, b] => c.absent(a, b),
                ["tier", a, t] => {
                    let t = t.parse::<u32>().map_err(|_| err(format!("tier must be a non-negative integer, got `{t}`")))?;
                    c.tier(a, t)
                }
                _ => return Err(err(format!("unrecognised constraint `{line}`"))),
            };
        }
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| DiscoveryError::Syntax {
            line: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// Checks that every referenced node is in `nodes`.
    pub fn validate(&self, nodes: &[String]) -> Result<()> {
        let names = self
            .forbidden
            .iter()
            .chain(&self.absent)
            .flat_map(|(a, b)| [a, b])
            .chain(self.tiers.keys());
        for n in names {
            if !nodes.contains(n) {
                return Err(DiscoveryError::UnknownNode(n.clone()));
            }
        }
        Ok(())
    }

    fn adjacency_allowed(&self, a: &str, b: &str) -> bool {
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        !self.absent.contains(&(x.to_string(), y.to_string())) && (self.allows(a, b) || self.allows(b, a))
    }
}

/// Undirected skeleton plus the separating set found for each removed pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    nodes: Vec<String>,
    adj: BTreeSet<(usize, usize)>,
    sepsets: BTreeMap<(usize, usize), Vec<usize>>,
    n_tests: usize,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Skeleton {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> Vec<(String, String)> {
        self.adj
            .iter()
            .map(|&(a, b)| (self.nodes[a].clone(), self.nodes[b].clone()))
            .collect()
    }

    pub fn adjacent(&self, a: &str, b: &str) -> bool {
        match (self.idx(a), self.idx(b)) {
            (Some(x), Some(y)) => self.adj.contains(&key(x, y)),
            _ => false,
        }
    }

    /// The conditioning set that separated `a` and `b`, if they were separated.
    pub fn sepset(&self, a: &str, b: &str) -> Option<Vec<String>> {
        let (x, y) = (self.idx(a)?, self.idx(b)?);
        self.sepsets
            .get(&key(x, y))
            .map(|s| s.iter().map(|&i| self.nodes[i].clone()).collect())
    }

    /// Number of independence tests run.
    pub fn n_tests(&self) -> usize {
        self.n_tests
    }

    fn idx(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    fn neighbours(&self, v: usize) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&u| u != v && self.adj.contains(&key(u, v)))
            .collect()
    }
}

/// Visits all `k`-subsets of `items` in lexicographic order.
fn for_each_subset(items: &[usize], k: usize, f: &mut dyn FnMut(&[usize]) -> Result<bool>) -> Result<bool> {
    fn go(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> Result<bool>) -> Result<bool> {
        if cur.len() == k {
            return f(cur);
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            if go(items, k, i + 1, cur, f)? {
                return Ok(true);
            }
            cur.pop();
        }
        Ok(false)
    }
    go(items, k, 0, &mut Vec::with_capacity(k), f)
}

/// PC adjacency search with an arbitrary independence test.
pub fn pc_skeleton_with(
    test: &dyn IndependenceTest,
    nodes: &[String],
    alpha: f64,
    constraints: &DiscoveryConstraints,
    max_cond_size: usize,
) -> Result<Skeleton> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DiscoveryError::Alpha(alpha));
    }
    constraints.validate(nodes)?;
    let n = nodes.len();
    let mut sk = Skeleton { nodes: nodes.to_vec(), adj: BTreeSet::new(), sepsets: BTreeMap::new(), n_tests: 0 };
    for a in 0..n {
        for b in a + 1..n {
            if constraints.adjacency_allowed(&nodes[a], &nodes[b]) {
                sk.adj.insert((a, b));
            }
        }
    }
    for level in 0..=max_cond_size {
        if !(0..n).any(|v| sk.neighbours(v).len() > level) {
            break;
        }
        let pairs: Vec<(usize, usize)> = sk.adj.iter().copied().collect();
        for (a, b) in pairs {
            if !sk.adj.contains(&(a, b)) {
                continue;
            }
            let from_a: Vec<usize> = sk.neighbours(a).into_iter().filter(|&v| v != b).collect();
            let from_b: Vec<usize> = sk.neighbours(b).into_iter().filter(|&v| v != a).collect();
            let mut tried: BTreeSet<Vec<usize>> = BTreeSet::new();
            let mut found = None;
            for candidates in [from_a, from_b] {
                if candidates.len() < level {
                    continue;
                }
                let mut n_tests = 0;
                let hit = for_each_subset(&candidates, level, &mut |s| {
                    if !tried.insert(s.to_vec()) {
                        return Ok(false);
                    }
                    n_tests += 1;
                    let z: Vec<&str> = s.iter().map(|&i| nodes[i].as_str()).collect();
                    let r = test.test(&nodes[a], &nodes[b], &z)?;
                    if r.p_value > alpha {
                        found = Some(s.to_vec());
                        return Ok(true);
                    }
                    Ok(false)
                })?;
                sk.n_tests += n_tests;
                if hit {
                    break;
                }
            }
            if let Some(s) = found {
                sk.adj.remove(&(a, b));
                sk.sepsets.insert((a, b), s);
            }
        }
    }
    Ok(sk)
}

/// PC adjacency search on data. Missing cells are rejected.
pub fn pc_skeleton(
    ds: &Dataset,
    method: CiMethod,
    alpha: f64,
    constraints: &DiscoveryConstraints,
    max_cond_size: usize,
    seed: u64,
) -> Result<Skeleton> {
    ds.ensure_complete()?;
    let nodes: Vec<String> = ds.column_names().iter().map(|s| s.to_string()).collect();
    pc_skeleton_with(&DataTest::new(ds, method, seed), &nodes, alpha, constraints, max_cond_size)
}

/// Partially directed graph representing a Markov equivalence class.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpdag {
    nodes: Vec<String>,
    directed: BTreeSet<(usize, usize)>,
    undirected: BTreeSet<(usize, usize)>,
    sepsets: BTreeMap<(usize, usize), Vec<usize>>,
    conflicts: BTreeSet<(usize, usize)>,
}

impl Cpdag {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn directed_edges(&self) -> Vec<(String, String)> {
        self.named(&self.directed, true)
    }

    pub fn undirected_edges(&self) -> Vec<(String, String)> {
        self.named(&self.undirected, false)
    }

    /// Pairs whose orientation proposals disagreed; they are left undirected.
    pub fn conflicts(&self) -> Vec<(String, String)> {
        self.named(&self.conflicts, false)
    }

    pub fn has_conflicts(&self) -> bool {
        !self.conflicts.is_empty()
    }

    pub fn sepset(&self, a: &str, b: &str) -> Option<Vec<String>> {
        let x = self.nodes.iter().position(|n| n == a)?;
        let y = self.nodes.iter().position(|n| n == b)?;
        self.sepsets
            .get(&key(x, y))
            .map(|s| s.iter().map(|&i| self.nodes[i].clone()).collect())
    }

    /// Name pairs sorted by name; unordered pairs put the smaller name first.
    fn named(&self, set: &BTreeSet<(usize, usize)>, ordered: bool) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = set
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (self.nodes[a].clone(), self.nodes[b].clone());
                if ordered || x <= y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect();
        out.sort();
        out
    }

    /// Directed part as a graph (undirected edges dropped).
    pub fn directed_graph(&self) -> CausalGraph {
        let mut g = CausalGraph::new(self.nodes.iter().cloned()).expect("valid names");
        for &(a, b) in &self.directed {
            g.insert_directed(a, b).expect("edge once");
        }
        g
    }

    /// Text form: `A -> B` and `A -- B` lines after `node` declarations.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            let _ = writeln!(out, "node {n}");
        }
        for (a, b) in self.directed_edges() {
            let _ = writeln!(out, "{a} -> {b}");
        }
        for (a, b) in self.undirected_edges() {
            let _ = writeln!(out, "{a} -- {b}");
        }
        out
    }
}

struct Orienter<'c> {
    nodes: Vec<String>,
    directed: BTreeSet<(usize, usize)>,
    undirected: BTreeSet<(usize, usize)>,
    conflicts: BTreeSet<(usize, usize)>,
    constraints: &'c DiscoveryConstraints,
}

impl Orienter<'_> {
    fn adjacent(&self, a: usize, b: usize) -> bool {
        self.undirected.contains(&key(a, b)) || self.directed.contains(&(a, b)) || self.directed.contains(&(b, a))
    }

    fn is_undirected(&self, a: usize, b: usize) -> bool {
        self.undirected.contains(&key(a, b))
    }

    fn reaches(&self, from: usize, to: usize) -> bool {
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if seen.insert(v) {
                stack.extend(self.directed.iter().filter(|e| e.0 == v).map(|e| e.1));
            }
        }
        false
    }

    /// Orients an undirected `a - b` as `a -> b` unless constraints or
    /// acyclicity forbid it, in which case the pair is flagged.
    fn try_orient(&mut self, a: usize, b: usize) -> bool {
        if !self.is_undirected(a, b) {
            return false;
        }
        if !self.constraints.allows(&self.nodes[a], &self.nodes[b]) || self.reaches(b, a) {
            self.conflicts.insert(key(a, b));
            return false;
        }
        self.undirected.remove(&key(a, b));
        self.directed.insert((a, b));
        true
    }

    fn meek_step(&mut self) -> bool {
        let n = self.nodes.len();
        let und: Vec<(usize, usize)> = self.undirected.iter().copied().collect();
        for (x, y) in und {
            for (b, c) in [(x, y), (y, x)] {
                if !self.is_undirected(b, c) || self.conflicts.contains(&key(b, c)) {
                    continue;
                }
                // Rule 1: a -> b - c, a and c nonadjacent.
                let r1 = (0..n).any(|a| self.directed.contains(&(a, b)) && a != c && !self.adjacent(a, c));
                // Rule 2: b -> m -> c.
                let r2 = (0..n).any(|m| self.directed.contains(&(b, m)) && self.directed.contains(&(m, c)));
                // Rule 3: b - k -> c and b - l -> c with k, l nonadjacent.
                let r3 = {
                    let ks: Vec<usize> = (0..n)
                        .filter(|&k| self.is_undirected(b, k) && self.directed.contains(&(k, c)))
                        .collect();
                    ks.iter()
                        .enumerate()
                        .any(|(i, &k)| ks[i + 1..].iter().any(|&l| !self.adjacent(k, l)))
                };
                // Rule 4: b - k -> l -> c with k, c nonadjacent and b adjacent to l.
                let r4 = (0..n).any(|k| {
                    self.is_undirected(b, k)
                        && k != c
                        && !self.adjacent(k, c)
                        && (0..n).any(|l| {
                            self.directed.contains(&(k, l)) && self.directed.contains(&(l, c)) && self.adjacent(b, l)
                        })
                });
                if (r1 || r2 || r3 || r4) && self.try_orient(b, c) {
                    return true;
                }
            }
        }
        false
    }

    fn meek(&mut self) {
        while self.meek_step() {}
    }
}

/// Orients a skeleton: v-structures, Meek rules, then constraint-forced
/// directions followed by another Meek pass.
pub fn pc_orient(skeleton: &Skeleton, constraints: &DiscoveryConstraints) -> Cpdag {
    let n = skeleton.nodes.len();
    let mut o = Orienter {
        nodes: skeleton.nodes.clone(),
        directed: BTreeSet::new(),
        undirected: skeleton.adj.clone(),
        conflicts: BTreeSet::new(),
        constraints,
    };
    let mut proposals: BTreeSet<(usize, usize)> = BTreeSet::new();
    for b in 0..n {
        let nb = skeleton.neighbours(b);
        for (i, &a) in nb.iter().enumerate() {
            for &c in &nb[i + 1..] {
                if skeleton.adj.contains(&key(a, c)) {
                    continue;
                }
                let in_sepset = skeleton.sepsets.get(&key(a, c)).is_some_and(|s| s.contains(&b));
                if !in_sepset {
                    proposals.insert((a, b));
                    proposals.insert((c, b));
                }
            }
        }
    }
    for &(a, b) in &proposals {
        if proposals.contains(&(b, a)) {
            o.conflicts.insert(key(a, b));
        }
    }
    for &(a, b) in &proposals {
        if !o.conflicts.contains(&key(a, b)) {
            o.try_orient(a, b);
        }
    }
    o.meek();
    let und: Vec<(usize, usize)> = o.undirected.iter().copied().collect();
    for (a, b) in und {
        let fwd = constraints.allows(&o.nodes[a], &o.nodes[b]);
        let back = constraints.allows(&o.nodes[b], &o.nodes[a]);
        if fwd && !back {
            o.conflicts.remove(&key(a, b));
            o.try_orient(a, b);
        } else if back && !fwd {
            o.conflicts.remove(&key(a, b));
            o.try_orient(b, a);
        }
    }
    o.meek();
    Cpdag {
        nodes: o.nodes,
        directed: o.directed,
        undirected: o.undirected,
        sepsets: skeleton.sepsets.clone(),
        conflicts: o.conflicts,
    }
}

/// Skeleton search followed by orientation.
pub fn pc(
    ds: &Dataset,
    method: CiMethod,
    alpha: f64,
    constraints: &DiscoveryConstraints,
    max_cond_size: usize,
    seed: u64,
) -> Result<Cpdag> {
    let sk = pc_skeleton(ds, method, alpha, constraints, max_cond_size, seed)?;
    Ok(pc_orient(&sk, constraints))
}

/// Square matrix of edge confidences; entry (i, j) is the confidence in
/// `i -> j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceMatrix {
    nodes: Vec<String>,
    values: Vec<f64>,
}

impl ConfidenceMatrix {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn get(&self, from: &str, to: &str) -> Option<f64> {
        let i = self.nodes.iter().position(|n| n == from)?;
        let j = self.nodes.iter().position(|n| n == to)?;
        Some(self.values[i * self.nodes.len() + j])
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nodes.len() + j]
    }

    /// Keeps edges with confidence strictly greater than `c`.
    pub fn threshold(&self, c: f64) -> CausalGraph {
        let n = self.nodes.len();
        let mut g = CausalGraph::new(self.nodes.iter().cloned()).expect("valid names");
        for i in 0..n {
            for j in 0..n {
                if i != j && self.entry(i, j) > c {
                    g.insert_directed(i, j).expect("edge once");
                }
            }
        }
        g
    }

    /// CSV with a header row of node names and one row per source node.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("from");
        for n in &self.nodes {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (i, n) in self.nodes.iter().enumerate() {
            out.push_str(n);
            for j in 0..self.nodes.len() {
                let _ = write!(out, ",{}", self.entry(i, j));
            }
            out.push('\n');
        }
        out
    }
}

/// Votes from one or more CPDAGs: each directed edge is one vote, each
/// undirected edge half a vote per direction.
fn accumulate(acc: &mut [f64], cpdag: &Cpdag) {
    let n = cpdag.nodes.len();
    for &(a, b) in &cpdag.directed {
        acc[a * n + b] += 1.0;
    }
    for &(a, b) in &cpdag.undirected {
        acc[a * n + b] += 0.5;
        acc[b * n + a] += 0.5;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcSettings {
    pub method: CiMethod,
    pub alpha: f64,
    pub max_cond_size: usize,
}

impl Default for PcSettings {
    fn default() -> Self {
        PcSettings { method: CiMethod::FisherZ, alpha: 0.01, max_cond_size: 3 }
    }
}

/// Edge confidences averaged over bootstrap resamples.
pub fn bootstrap_confidences(
    ds: &Dataset,
    settings: PcSettings,
    constraints: &DiscoveryConstraints,
    runs: usize,
    seed: u64,
) -> Result<ConfidenceMatrix> {
    if runs < 1 {
        return Err(DiscoveryError::NoRuns);
    }
    ds.ensure_complete()?;
    let nodes: Vec<String> = ds.column_names().iter().map(|s| s.to_string()).collect();
    constraints.validate(&nodes)?;
    let n = ds.n_rows();
    let j = nodes.len();
    let mut acc = vec![0.0; j * j];
    for run in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run as u64);
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let sample = ds.select_rows(&rows);
        let run_seed = derive_seed(seed, &["bootstrap", &run.to_string()]);
        let cpdag = pc(&sample, settings.method, settings.alpha, constraints, settings.max_cond_size, run_seed)?;
        accumulate(&mut acc, &cpdag);
    }
    for a in 0..j {
        for b in 0..j {
            if !constraints.allows(&nodes[a], &nodes[b]) {
                acc[a * j + b] = 0.0;
            }
        }
    }
    let values = acc.into_iter().map(|v| v / runs as f64).collect();
    Ok(ConfidenceMatrix { nodes, values })
}

/// Per-pair edge state: bit 0 is `a -> b`, bit 1 is `b -> a`.
fn pair_state(g: &CausalGraph, a: usize, b: usize) -> u8 {
    g.directed_idx().contains(&(a, b)) as u8 | (g.directed_idx().contains(&(b, a)) as u8) << 1
}

fn state_cost(s: u8, t: u8) -> usize {
    match (s, t) {
        _ if s == t => 0,
        (0, 3) | (3, 0) => 2,
        _ => 1,
    }
}

/// Maps `g2`'s node indices onto `g1`'s by name.
fn align(g1: &[String], g2: &CausalGraph) -> Result<Vec<usize>> {
    if g1.len() != g2.len() {
        return Err(DiscoveryError::NodeMismatch);
    }
    g1.iter()
        .map(|n| g2.index_of(n).map_err(|_| DiscoveryError::NodeMismatch))
        .collect()
}

/// Structural Hamming distance: insertions + deletions + reversals, a
/// reversal counting as one edit.
pub fn shd(g1: &CausalGraph, g2: &CausalGraph) -> Result<usize> {
    let map = align(g1.nodes(), g2)?;
    let n = g1.len();
    let mut total = 0;
    for a in 0..n {
        for b in a + 1..n {
            total += state_cost(pair_state(g1, a, b), pair_state(g2, map[a], map[b]));
        }
    }
    Ok(total)
}

/// SHD of a CPDAG against a DAG, scoring each undirected edge by its
/// better orientation.
pub fn shd_cpdag(cpdag: &Cpdag, truth: &CausalGraph) -> Result<usize> {
    let map = align(&cpdag.nodes, truth)?;
    let n = cpdag.nodes.len();
    let mut total = 0;
    for a in 0..n {
        for b in a + 1..n {
            let t = pair_state(truth, map[a], map[b]);
            let s = cpdag.directed.contains(&(a, b)) as u8 | (cpdag.directed.contains(&(b, a)) as u8) << 1;
            total += if cpdag.undirected.contains(&(a, b)) {
                state_cost(1, t).min(state_cost(2, t))
            } else {
                state_cost(s, t)
            };
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub test: String,
    pub n: usize,
    pub rep: usize,
    pub shd: usize,
    pub runtime_s: f64,
}

/// SHD and wall time of PC on fresh samples from `scm` for every
/// (test, N, rep) cell. All tests see the same sample for a given (N, rep).
pub fn benchmark_discovery(
    scm: &ScmSpec,
    sample_sizes: &[usize],
    reps: usize,
    tests: &[CiMethod],
    alpha: f64,
    max_cond_size: usize,
    seed: u64,
) -> Result<Vec<BenchmarkRow>> {
    let truth = scm.graph()?;
    let mut rows = Vec::new();
    for &method in tests {
        for &n in sample_sizes {
            for rep in 0..reps {
                let (ns, rs) = (n.to_string(), rep.to_string());
                let ds = scm.sample(n, derive_seed(seed, &["sample", &ns, &rs]))?;
                let start = Instant::now();
                let cpdag = pc(&ds, method, alpha, &DiscoveryConstraints::new(), max_cond_size, derive_seed(seed, &["test", &ns, &rs]))?;
                let runtime_s = start.elapsed().as_secs_f64();
                rows.push(BenchmarkRow { test: method.to_string(), n, rep, shd: shd_cpdag(&cpdag, &truth)?, runtime_s });
            }
        }
    }
    Ok(rows)
}

/// Per-run SHD table. Runtimes are left out so the file is reproducible.
pub fn benchmark_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from("test,N,rep,shd\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.test, r.n, r.rep, r.shd);
    }
    out
}
