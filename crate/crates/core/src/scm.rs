//! Structural causal models: specification, sampling, interventions and
//! Monte-Carlo ground-truth effects.
//!
//! Every node draws its exogenous noise from its own ChaCha stream keyed by
//! the node's declaration index, so two models that differ only by an
//! intervention share the same noise for every untouched node (common
//! random numbers).

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::dataset::{Column, ColumnType, Dataset};
use crate::graph::{valid_name, CausalGraph, GraphError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScmError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("node `{0}` references undeclared parent `{1}`")]
    UndeclaredParent(String, String),
    #[error("cyclic model: {}", .0.join(" -> "))]
    Cyclic(Vec<String>),
    #[error("value {value} outside the range of `{node}` ({kind})")]
    OutOfRange { node: String, value: f64, kind: ColumnType },
    #[error("node `{node}`: {message}")]
    Invalid { node: String, message: String },
    #[error("node `{node}`: no table entry for parent values {key:?}")]
    TableMiss { node: String, key: Vec<i64> },
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T> = std::result::Result<T, ScmError>;

#[derive(Debug, Clone, PartialEq)]
pub struct PolyTerm {
    pub coef: f64,
    /// `(parent, power)` factors; an empty list is a constant term.
    pub factors: Vec<(String, u32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mechanism {
    Constant(f64),
    Linear { coefs: Vec<(String, f64)>, intercept: f64 },
    Polynomial { terms: Vec<PolyTerm>, intercept: f64 },
    /// Bernoulli draw with success probability `sigmoid(eta + noise)`.
    Logistic { coefs: Vec<(String, f64)>, intercept: f64 },
    /// Ordinal level: number of cutpoints strictly below `eta + noise`.
    Threshold { coefs: Vec<(String, f64)>, intercept: f64, cutpoints: Vec<f64> },
    /// Lookup on integer parent values, plus noise.
    Table { parents: Vec<String>, entries: BTreeMap<Vec<i64>, f64> },
}

impl Mechanism {
    pub fn parents(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |n: &String| {
            if !out.contains(n) {
                out.push(n.clone());
            }
        };
        match self {
            Mechanism::Constant(_) => {}
            Mechanism::Linear { coefs, .. }
            | Mechanism::Logistic { coefs, .. }
            | Mechanism::Threshold { coefs, .. } => coefs.iter().for_each(|(n, _)| push(n)),
            Mechanism::Polynomial { terms, .. } => terms
                .iter()
                .flat_map(|t| t.factors.iter())
                .for_each(|(n, _)| push(n)),
            Mechanism::Table { parents, .. } => parents.iter().for_each(&mut push),
        }
        out
    }

    fn kind(&self) -> ColumnType {
        match self {
            Mechanism::Logistic { .. } => ColumnType::Binary,
            Mechanism::Threshold { cutpoints, .. } => ColumnType::Ordinal(cutpoints.len() + 1),
            _ => ColumnType::Continuous,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    None,
    Gaussian(f64),
    Uniform(f64, f64),
}

impl Noise {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Noise::None => 0.0,
            Noise::Gaussian(sd) => {
                let z: f64 = StandardNormal.sample(rng);
                sd * z
            }
            Noise::Uniform(a, b) => a + (b - a) * rng.random::<f64>(),
        }
    }

    fn mean(&self) -> f64 {
        match *self {
            Noise::Uniform(a, b) => 0.5 * (a + b),
            _ => 0.0,
        }
    }

    fn variance(&self) -> f64 {
        match *self {
            Noise::None => 0.0,
            Noise::Gaussian(sd) => sd * sd,
            Noise::Uniform(a, b) => (b - a) * (b - a) / 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScmNode {
    pub name: String,
    pub mechanism: Mechanism,
    pub noise: Noise,
    pub kind: ColumnType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScmSpec {
    nodes: Vec<ScmNode>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    order: Vec<usize>,
}

/// Monte-Carlo estimate of an average causal effect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEffect {
    pub effect: f64,
    pub mc_se: f64,
}

impl ScmSpec {
    /// Builds and validates a model; nodes may be listed in any order.
    pub fn new(nodes: Vec<ScmNode>) -> Result<ScmSpec> {
        let mut index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if !valid_name(&n.name) {
                return Err(ScmError::Invalid { node: n.name.clone(), message: "invalid name".into() });
            }
            if index.insert(n.name.clone(), i).is_some() {
                return Err(ScmError::DuplicateNode(n.name.clone()));
            }
        }
        let mut parents = Vec::with_capacity(nodes.len());
        for n in &nodes {
            validate_node(n)?;
            let pa = n
                .mechanism
                .parents()
                .into_iter()
                .map(|p| {
                    index
                        .get(&p)
                        .copied()
                        .ok_or_else(|| ScmError::UndeclaredParent(n.name.clone(), p.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            if pa.iter().any(|&p| nodes[p].name == n.name) {
                return Err(ScmError::Cyclic(vec![n.name.clone()]));
            }
            parents.push(pa);
        }
        let mut spec = ScmSpec { nodes, index, parents, order: Vec::new() };
        spec.order = spec.graph()?.assert_acyclic().map_err(|e| match e {
            GraphError::Cycle(c) => ScmError::Cyclic(c),
            other => ScmError::Graph(other),
        })?;
        Ok(spec)
    }

    pub fn nodes(&self) -> &[ScmNode] {
        &self.nodes
    }

    pub fn node(&self, name: &str) -> Result<&ScmNode> {
        self.index
            .get(name)
            .map(|&i| &self.nodes[i])
            .ok_or_else(|| ScmError::UnknownNode(name.to_string()))
    }

    pub fn node_names(&self) -> Vec<&str> {
        self.nodes.iter().map(|n| n.name.as_str()).collect()
    }

    /// The causal DAG implied by the mechanisms.
    pub fn graph(&self) -> Result<CausalGraph> {
        let mut g = CausalGraph::new(self.nodes.iter().map(|n| n.name.clone()))?;
        for (child, pa) in self.parents.iter().enumerate() {
            for &p in pa {
                g.insert_directed(p, child)?;
            }
        }
        Ok(g)
    }

    /// Draws `n` rows. Bit-reproducible for a given seed.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n < 1 {
            return Err(ScmError::TooFewSamples { min: 1, got: n });
        }
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); self.nodes.len()];
        for &v in &self.order {
            let node = &self.nodes[v];
            let mut rng = node_stream(seed, v);
            let mut out = Vec::with_capacity(n);
            for row in 0..n {
                let value = self.evaluate(node, &cols, row, &mut rng)?;
                out.push(value);
            }
            cols[v] = out;
        }
        let columns = self
            .nodes
            .iter()
            .zip(cols)
            .map(|(node, values)| Column::new(node.name.clone(), node.kind, values))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| ScmError::Invalid { node: String::new(), message: e.to_string() })?;
        Dataset::new(columns).map_err(|e| ScmError::Invalid { node: String::new(), message: e.to_string() })
    }

    fn evaluate(&self, node: &ScmNode, cols: &[Vec<f64>], row: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
        let value_of = |name: &str| cols[self.index[name]][row];
        let linear = |coefs: &[(String, f64)], intercept: f64| {
            coefs.iter().fold(intercept, |acc, (p, c)| acc + c * value_of(p))
        };
        let noise = node.noise.draw(rng);
        Ok(match &node.mechanism {
            Mechanism::Constant(c) => *c + noise,
            Mechanism::Linear { coefs, intercept } => linear(coefs, *intercept) + noise,
            Mechanism::Polynomial { terms, intercept } => {
                let mut acc = *intercept;
                for t in terms {
                    acc += t
                        .factors
                        .iter()
                        .fold(t.coef, |prod, (p, k)| prod * value_of(p).powi(*k as i32));
                }
                acc + noise
            }
            Mechanism::Logistic { coefs, intercept } => {
                let prob = sigmoid(linear(coefs, *intercept) + noise);
                let u: f64 = rng.random();
                if u < prob {
                    1.0
                } else {
                    0.0
                }
            }
            Mechanism::Threshold { coefs, intercept, cutpoints } => {
                let latent = linear(coefs, *intercept) + noise;
                cutpoints.iter().filter(|&&c| latent > c).count() as f64
            }
            Mechanism::Table { parents, entries } => {
                let key: Vec<i64> = parents.iter().map(|p| value_of(p).round() as i64).collect();
                match entries.get(&key) {
                    Some(v) => v + noise,
                    None => return Err(ScmError::TableMiss { node: node.name.clone(), key }),
                }
            }
        })
    }

    /// Replaces each assigned node's mechanism with a constant and drops
    /// its noise and parent links; every other equation is untouched.
    pub fn intervene(&self, assignments: &[(&str, f64)]) -> Result<ScmSpec> {
        let mut nodes = self.nodes.clone();
        for &(name, value) in assignments {
            let i = *self
                .index
                .get(name)
                .ok_or_else(|| ScmError::UnknownNode(name.to_string()))?;
            let kind = nodes[i].kind;
            if !kind.admits(value) {
                return Err(ScmError::OutOfRange { node: name.to_string(), value, kind });
            }
            nodes[i].mechanism = Mechanism::Constant(value);
            nodes[i].noise = Noise::None;
        }
        ScmSpec::new(nodes)
    }

    /// `E[Y | do(T=t)] - E[Y | do(T=t')]` by Monte Carlo with common
    /// random numbers across the two arms.
    pub fn true_effect(
        &self,
        treatment: &str,
        t: f64,
        t_prime: f64,
        outcome: &str,
        n_mc: usize,
        seed: u64,
    ) -> Result<MonteCarloEffect> {
        const MIN_MC: usize = 10_000;
        if n_mc < MIN_MC {
            return Err(ScmError::TooFewSamples { min: MIN_MC, got: n_mc });
        }
        self.node(outcome)?;
        let arm = |value: f64| -> Result<Vec<f64>> {
            let ds = self.intervene(&[(treatment, value)])?.sample(n_mc, seed)?;
            Ok(ds.values(outcome).expect("outcome column exists").to_vec())
        };
        let (a, b) = (arm(t)?, arm(t_prime)?);
        let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
        Ok(MonteCarloEffect { effect: mean, mc_se: (var / n).sqrt() })
    }

    /// Population covariance `(I-B)^-1 D (I-B)^-T` for models built only
    /// from linear mechanisms, constants and additive noise; `None`
    /// otherwise. Rows/columns follow declaration order.
    pub fn implied_covariance(&self) -> Option<DMatrix<f64>> {
        let n = self.nodes.len();
        let mut b = DMatrix::<f64>::zeros(n, n);
        let mut d = DMatrix::<f64>::zeros(n, n);
        for (i, node) in self.nodes.iter().enumerate() {
            match &node.mechanism {
                Mechanism::Linear { coefs, .. } => {
                    for (p, c) in coefs {
                        b[(i, self.index[p])] += c;
                    }
                }
                Mechanism::Constant(_) => {}
                _ => return None,
            }
            d[(i, i)] = node.noise.variance();
        }
        let inv = (DMatrix::<f64>::identity(n, n) - b).try_inverse()?;
        Some(&inv * d * inv.transpose())
    }

    /// Population means for the same linear models as
    /// [`implied_covariance`](Self::implied_covariance).
    pub fn implied_mean(&self) -> Option<Vec<f64>> {
        let mut mean = vec![0.0; self.nodes.len()];
        for &v in &self.order {
            let node = &self.nodes[v];
            mean[v] = match &node.mechanism {
                Mechanism::Linear { coefs, intercept } => {
                    coefs.iter().fold(*intercept, |acc, (p, c)| acc + c * mean[self.index[p]])
                        + node.noise.mean()
                }
                Mechanism::Constant(c) => *c + node.noise.mean(),
                _ => return None,
            };
        }
        Some(mean)
    }

    /// Parses the one-node-per-line text format, e.g.
    /// `Y = linear(X1:0.5, X2:-0.2, intercept:0) + gaussian(1.0)`.
    pub fn parse(text: &str) -> Result<ScmSpec> {
        let mut nodes = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            nodes.push(parse_node(line).map_err(|message| ScmError::Syntax { line: i + 1, message })?);
        }
        ScmSpec::new(nodes)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<ScmSpec> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ScmError::Syntax {
            line: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        ScmSpec::parse(&text)
    }
}

impl fmt::Display for ScmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for node in &self.nodes {
            writeln!(f, "{}", render_node(node))?;
        }
        Ok(())
    }
}

fn node_stream(seed: u64, node: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(node as u64);
    rng
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn validate_node(n: &ScmNode) -> Result<()> {
    let invalid = |message: &str| ScmError::Invalid { node: n.name.clone(), message: message.into() };
    match &n.mechanism {
        Mechanism::Threshold { cutpoints, .. } => {
            if cutpoints.is_empty() || cutpoints.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid("cutpoints must be non-empty and strictly increasing"));
            }
        }
        Mechanism::Table { parents, entries } => {
            if entries.keys().any(|k| k.len() != parents.len()) {
                return Err(invalid("table key length differs from parent count"));
            }
        }
        _ => {}
    }
    match n.noise {
        Noise::Gaussian(sd) if !(sd >= 0.0 && sd.is_finite()) => Err(invalid("gaussian sd must be >= 0")),
        Noise::Uniform(a, b) if !(a <= b) => Err(invalid("uniform bounds must satisfy a <= b")),
        _ => Ok(()),
    }
}

/// Splits on `sep` at parenthesis depth zero.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + ch.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn parse_num(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    s.parse::<f64>().map_err(|_| format!("invalid number `{s}`"))
}

fn call_parts(item: &str) -> std::result::Result<(&str, &str), String> {
    let item = item.trim();
    match item.find('(') {
        Some(i) if item.ends_with(')') => Ok((item[..i].trim(), &item[i + 1..item.len() - 1])),
        Some(_) => Err(format!("unbalanced parentheses in `{item}`")),
        None => Ok((item, "")),
    }
}

type Coefs = (Vec<(String, f64)>, f64);

fn parse_coefs(args: &str) -> std::result::Result<Coefs, String> {
    let mut coefs = Vec::new();
    let mut intercept = 0.0;
    for part in args.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) = part
            .split_once(':')
            .ok_or_else(|| format!("expected `name:coef`, got `{part}`"))?;
        let (name, value) = (name.trim(), parse_num(value)?);
        if name == "intercept" {
            intercept = value;
        } else if !valid_name(name) {
            return Err(format!("invalid parent name `{name}`"));
        } else {
            coefs.push((name.to_string(), value));
        }
    }
    Ok((coefs, intercept))
}

fn parse_poly(args: &str) -> std::result::Result<(Vec<PolyTerm>, f64), String> {
    let mut terms = Vec::new();
    let mut intercept = 0.0;
    for part in args.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (lhs, value) = part
            .rsplit_once(':')
            .ok_or_else(|| format!("expected `term:coef`, got `{part}`"))?;
        let coef = parse_num(value)?;
        if lhs.trim() == "intercept" {
            intercept = coef;
            continue;
        }
        let mut factors = Vec::new();
        for f in lhs.split('*') {
            let f = f.trim();
            let (name, power) = match f.split_once('^') {
                Some((n, p)) => (n.trim(), p.trim().parse::<u32>().map_err(|_| format!("bad power in `{f}`"))?),
                None => (f, 1),
            };
            if !valid_name(name) {
                return Err(format!("invalid parent name `{name}`"));
            }
            factors.push((name.to_string(), power));
        }
        terms.push(PolyTerm { coef, factors });
    }
    Ok((terms, intercept))
}

fn parse_table(args: &str) -> std::result::Result<Mechanism, String> {
    let (head, body) = args
        .split_once('|')
        .ok_or_else(|| "table needs `parents | key:value; ...`".to_string())?;
    let parents: Vec<String> = head
        .split(',')
        .map(|p| p.trim().to_string())
        .filter(|p| !p.is_empty())
        .collect();
    let mut entries = BTreeMap::new();
    for entry in body.split(';').map(str::trim).filter(|e| !e.is_empty()) {
        let (key, value) = entry
            .split_once(':')
            .ok_or_else(|| format!("expected `key:value`, got `{entry}`"))?;
        let key = key
            .split(',')
            .map(|k| k.trim().parse::<i64>().map_err(|_| format!("bad table key `{k}`")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        entries.insert(key, parse_num(value)?);
    }
    Ok(Mechanism::Table { parents, entries })
}

fn parse_node(line: &str) -> std::result::Result<ScmNode, String> {
    let (name, rhs) = line
        .split_once('=')
        .ok_or_else(|| format!("expected `name = mechanism + noise`, got `{line}`"))?;
    let name = name.trim();
    if !valid_name(name) {
        return Err(format!("invalid node name `{name}`"));
    }
    let mut mechanism = None;
    let mut noise = None;
    for item in split_top(rhs, '+') {
        let (head, args) = call_parts(item)?;
        let mech = match head {
            "linear" => {
                let (coefs, intercept) = parse_coefs(args)?;
                Some(Mechanism::Linear { coefs, intercept })
            }
            "logistic" => {
                let (coefs, intercept) = parse_coefs(args)?;
                Some(Mechanism::Logistic { coefs, intercept })
            }
            "threshold" => {
                let (lin, cuts) = args
                    .split_once('|')
                    .ok_or_else(|| "threshold needs `coefs | cutpoints`".to_string())?;
                let (coefs, intercept) = parse_coefs(lin)?;
                let cutpoints = cuts
                    .split(',')
                    .map(parse_num)
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                Some(Mechanism::Threshold { coefs, intercept, cutpoints })
            }
            "poly" => {
                let (terms, intercept) = parse_poly(args)?;
                Some(Mechanism::Polynomial { terms, intercept })
            }
            "table" => Some(parse_table(args)?),
            "constant" => Some(Mechanism::Constant(parse_num(args)?)),
            _ => None,
        };
        let nz = match head {
            "gaussian" => Some(Noise::Gaussian(parse_num(args)?)),
            "uniform" => {
                let (a, b) = args.split_once(',').ok_or_else(|| "uniform needs `a, b`".to_string())?;
                Some(Noise::Uniform(parse_num(a)?, parse_num(b)?))
            }
            "none" => Some(Noise::None),
            _ => None,
        };
        match (mech, nz) {
            (Some(m), _) if mechanism.is_none() => mechanism = Some(m),
            (None, Some(z)) if noise.is_none() => noise = Some(z),
            (None, None) => return Err(format!("unknown term `{}`", item.trim())),
            _ => return Err(format!("repeated term `{}`", item.trim())),
        }
    }
    let mechanism = mechanism.unwrap_or(Mechanism::Linear { coefs: Vec::new(), intercept: 0.0 });
    let kind = mechanism.kind();
    Ok(ScmNode { name: name.to_string(), mechanism, noise: noise.unwrap_or(Noise::None), kind })
}

fn render_coefs(coefs: &[(String, f64)], intercept: f64) -> String {
    let mut parts: Vec<String> = coefs.iter().map(|(n, c)| format!("{n}:{c}")).collect();
    parts.push(format!("intercept:{intercept}"));
    parts.join(", ")
}

fn render_node(node: &ScmNode) -> String {
    let mech = match &node.mechanism {
        Mechanism::Constant(c) => format!("constant({c})"),
        Mechanism::Linear { coefs, intercept } => format!("linear({})", render_coefs(coefs, *intercept)),
        Mechanism::Logistic { coefs, intercept } => format!("logistic({})", render_coefs(coefs, *intercept)),
        Mechanism::Threshold { coefs, intercept, cutpoints } => format!(
            "threshold({} | {})",
            render_coefs(coefs, *intercept),
            cutpoints.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
        ),
        Mechanism::Polynomial { terms, intercept } => {
            let mut parts: Vec<String> = terms
                .iter()
                .map(|t| {
                    let f: Vec<String> = t
                        .factors
                        .iter()
                        .map(|(n, k)| if *k == 1 { n.clone() } else { format!("{n}^{k}") })
                        .collect();
                    format!("{}:{}", f.join("*"), t.coef)
                })
                .collect();
            parts.push(format!("intercept:{intercept}"));
            format!("poly({})", parts.join(", "))
        }
        Mechanism::Table { parents, entries } => {
            let body: Vec<String> = entries
                .iter()
                .map(|(k, v)| {
                    let key: Vec<String> = k.iter().map(|x| x.to_string()).collect();
                    format!("{}:{v}", key.join(","))
                })
                .collect();
            format!("table({} | {})", parents.join(","), body.join("; "))
        }
    };
    let noise = match node.noise {
        Noise::None => "none".to_string(),
        Noise::Gaussian(sd) => format!("gaussian({sd})"),
        Noise::Uniform(a, b) => format!("uniform({a}, {b})"),
    };
    format!("{} = {mech} + {noise}", node.name)
}

/// Random DAGs and linear-Gaussian models for benchmarks and tests.
pub mod random {
    use super::*;
    use rand::seq::index::sample;

    /// A DAG on `X1..Xn` with `n_edges` distinct edges, each pointing from a
    /// lower to a higher index.
    pub fn random_dag<R: Rng>(n_nodes: usize, n_edges: usize, rng: &mut R) -> CausalGraph {
        let pairs: Vec<(usize, usize)> = (0..n_nodes)
            .flat_map(|i| (i + 1..n_nodes).map(move |j| (i, j)))
            .collect();
        let n_edges = n_edges.min(pairs.len());
        let mut g = CausalGraph::new((1..=n_nodes).map(|i| format!("X{i}"))).expect("valid names");
        let mut chosen: Vec<usize> = sample(rng, pairs.len(), n_edges).into_vec();
        chosen.sort_unstable();
        for k in chosen {
            let (a, b) = pairs[k];
            g.insert_directed(a, b).expect("distinct pairs");
        }
        g
    }

    /// Linear mechanisms over `graph` with coefficients of magnitude in
    /// `[lo, hi]`, random sign, and unit Gaussian noise.
    pub fn random_linear_gaussian<R: Rng>(graph: &CausalGraph, lo: f64, hi: f64, rng: &mut R) -> ScmSpec {
        let nodes = graph
            .nodes()
            .iter()
            .map(|name| {
                let coefs = graph
                    .parents(name)
                    .expect("node exists")
                    .into_iter()
                    .map(|p| {
                        let mag = lo + (hi - lo) * rng.random::<f64>();
                        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        (p, sign * mag)
                    })
                    .collect();
                ScmNode {
                    name: name.clone(),
                    mechanism: Mechanism::Linear { coefs, intercept: 0.0 },
                    noise: Noise::Gaussian(1.0),
                    kind: ColumnType::Continuous,
                }
            })
            .collect();
        ScmSpec::new(nodes).expect("acyclic graph gives a valid model")
    }
}
