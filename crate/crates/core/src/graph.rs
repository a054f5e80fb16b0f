//! Acyclic directed mixed graphs (ADMGs) with plausibility-weighted
//! bidirected edges.
//!
//! Directed edges always carry plausibility 1.0. A bidirected edge `A <-> B`
//! stands for an unobserved common cause of `A` and `B` and carries a score
//! in `(0, 1]`. Cyclic directed structure is representable so discovery
//! output can be loaded, but every query that needs a DAG checks first.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("invalid node name `{0}`")]
    InvalidName(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge `{0}`")]
    DuplicateEdge(String),
    #[error("plausibility {0} outside (0, 1]")]
    PlausibilityRange(f64),
    #[error("directed edges carry plausibility 1.0, got {0}")]
    DirectedPlausibility(f64),
    #[error("directed cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("node sets overlap at `{0}`")]
    Overlap(String),
    #[error("graph has bidirected edges; no DAG factorization exists")]
    SemiMarkovian,
    #[error("number of lags must be at least 1")]
    InvalidLags,
    #[error("edge `{0}` is not in the graph")]
    MissingEdge(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, GraphError>;

/// Kind of a single edge on a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    Directed,
    Bidirected,
}

/// One step of a [`Path`], from `nodes[i]` to `nodes[i + 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PathStep {
    pub kind: EdgeKind,
    /// For directed steps: true when the edge points from `nodes[i]` to
    /// `nodes[i + 1]`. Ignored for bidirected steps.
    pub forward: bool,
}

impl PathStep {
    fn head_at_start(&self) -> bool {
        match self.kind {
            EdgeKind::Bidirected => true,
            EdgeKind::Directed => !self.forward,
        }
    }

    fn head_at_end(&self) -> bool {
        match self.kind {
            EdgeKind::Bidirected => true,
            EdgeKind::Directed => self.forward,
        }
    }
}

/// A simple path through a mixed graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    pub nodes: Vec<String>,
    pub steps: Vec<PathStep>,
    /// Positions (indices into `nodes`) of the colliders on the path.
    pub colliders: Vec<usize>,
}

impl Path {
    fn from_parts(nodes: Vec<String>, steps: Vec<PathStep>) -> Self {
        let colliders = (1..nodes.len().saturating_sub(1))
            .filter(|&i| steps[i - 1].head_at_end() && steps[i].head_at_start())
            .collect();
        Self { nodes, steps, colliders }
    }

    /// True when the first edge has an arrowhead into the first node.
    pub fn enters_start(&self) -> bool {
        self.steps.first().is_some_and(|s| s.head_at_start())
    }

    /// True when every step is a directed edge pointing away from the start.
    pub fn is_causal(&self) -> bool {
        self.steps
            .iter()
            .all(|s| s.kind == EdgeKind::Directed && s.forward)
    }

    /// Whether the path is open given `conditioning` under the usual
    /// collider rules (a collider is open when it or one of its descendants
    /// is conditioned on; a non-collider is open when it is not).
    pub fn is_open(&self, graph: &CausalGraph, conditioning: &[&str]) -> Result<bool> {
        let z = graph.resolve(conditioning)?;
        let z_set: BTreeSet<usize> = z.iter().copied().collect();
        for i in 1..self.nodes.len().saturating_sub(1) {
            let v = graph.index_of(&self.nodes[i])?;
            if self.colliders.contains(&i) {
                let mut desc = graph.descendants_idx(v);
                desc.push(v);
                if !desc.iter().any(|d| z_set.contains(d)) {
                    return Ok(false);
                }
            } else if z_set.contains(&v) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, node) in self.nodes.iter().enumerate() {
            if i > 0 {
                let step = self.steps[i - 1];
                let arrow = match (step.kind, step.forward) {
                    (EdgeKind::Bidirected, _) => "<->",
                    (EdgeKind::Directed, true) => "->",
                    (EdgeKind::Directed, false) => "<-",
                };
                write!(f, " {arrow} ")?;
            }
            write!(f, "{node}")?;
        }
        Ok(())
    }
}

/// One factor `P(child | parents)` of a Markov factorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    pub child: String,
    /// Parents, latest in topological order first.
    pub parents: Vec<String>,
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parents.is_empty() {
            write!(f, "P({})", self.child)
        } else {
            write!(f, "P({}|{})", self.child, self.parents.join(","))
        }
    }
}

/// Renders factors as a product string, e.g. `P(A)·P(B|A)`.
pub fn render_factorization(factors: &[Factor]) -> String {
    factors
        .iter()
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join("·")
}

/// Plausibility of a graph before and after dropping bidirected edges,
/// under independent Bernoulli edge existence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plausibility {
    /// `P(G)`: product of all bidirected plausibilities.
    pub original: f64,
    /// `P(G*)`: kept edges contribute `p`, removed edges `1 - p`.
    pub reduced: f64,
    /// `P(G*) / P(G)`.
    pub ratio: f64,
}

/// Outcome of an acyclicity check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Acyclicity {
    /// Topological order of node indices (declaration order breaks ties).
    Acyclic(Vec<usize>),
    /// One directed cycle, as node names in edge order.
    Cyclic(Vec<String>),
}

impl Acyclicity {
    pub fn is_acyclic(&self) -> bool {
        matches!(self, Acyclicity::Acyclic(_))
    }
}

pub(crate) fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '@' | '-'))
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// An ADMG over named variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CausalGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    directed: BTreeSet<(usize, usize)>,
    bidirected: BTreeMap<(usize, usize), f64>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl CausalGraph {
    pub fn new<I, S>(nodes: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut g = Self::default();
        for n in nodes {
            g.insert_node(n.into())?;
        }
        Ok(g)
    }

    fn insert_node(&mut self, name: String) -> Result<usize> {
        if !valid_name(&name) {
            return Err(GraphError::InvalidName(name));
        }
        if self.index.contains_key(&name) {
            return Err(GraphError::DuplicateNode(name));
        }
        let i = self.nodes.len();
        self.index.insert(name.clone(), i);
        self.nodes.push(name);
        self.parents.push(Vec::new());
        self.children.push(Vec::new());
        Ok(i)
    }

    fn ensure_node(&mut self, name: &str) -> Result<usize> {
        match self.index.get(name) {
            Some(&i) => Ok(i),
            None => self.insert_node(name.to_string()),
        }
    }

    /// Returns a copy with an extra node.
    pub fn with_node(mut self, name: &str) -> Result<Self> {
        self.insert_node(name.to_string())?;
        Ok(self)
    }

    /// Returns a copy with the directed edge `from -> to`.
    pub fn with_directed(mut self, from: &str, to: &str) -> Result<Self> {
        let a = self.index_of(from)?;
        let b = self.index_of(to)?;
        self.insert_directed(a, b)?;
        Ok(self)
    }

    /// Returns a copy with the bidirected edge `a <-> b` of plausibility `p`.
    pub fn with_bidirected(mut self, a: &str, b: &str, p: f64) -> Result<Self> {
        let i = self.index_of(a)?;
        let j = self.index_of(b)?;
        self.insert_bidirected(i, j, p)?;
        Ok(self)
    }

    pub(crate) fn insert_directed(&mut self, a: usize, b: usize) -> Result<()> {
        if a == b {
            return Err(GraphError::SelfLoop(self.nodes[a].clone()));
        }
        if !self.directed.insert((a, b)) {
            return Err(GraphError::DuplicateEdge(format!(
                "{} -> {}",
                self.nodes[a], self.nodes[b]
            )));
        }
        let pos = self.parents[b].binary_search(&a).unwrap_err();
        self.parents[b].insert(pos, a);
        let pos = self.children[a].binary_search(&b).unwrap_err();
        self.children[a].insert(pos, b);
        Ok(())
    }

    pub(crate) fn insert_bidirected(&mut self, a: usize, b: usize, p: f64) -> Result<()> {
        if a == b {
            return Err(GraphError::SelfLoop(self.nodes[a].clone()));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(GraphError::PlausibilityRange(p));
        }
        let key = ordered(a, b);
        if self.bidirected.contains_key(&key) {
            return Err(GraphError::DuplicateEdge(format!(
                "{} <-> {}",
                self.nodes[key.0], self.nodes[key.1]
            )));
        }
        self.bidirected.insert(key, p);
        Ok(())
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub fn name(&self, i: usize) -> &str {
        &self.nodes[i]
    }

    pub(crate) fn resolve(&self, names: &[&str]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.index_of(n)).collect()
    }

    fn names(&self, idx: impl IntoIterator<Item = usize>) -> Vec<String> {
        idx.into_iter().map(|i| self.nodes[i].clone()).collect()
    }

    /// Directed edges as `(from, to)` names, in index order.
    pub fn directed_edges(&self) -> Vec<(String, String)> {
        self.directed
            .iter()
            .map(|&(a, b)| (self.nodes[a].clone(), self.nodes[b].clone()))
            .collect()
    }

    /// Bidirected edges as `(a, b, p)`, in index order.
    pub fn bidirected_edges(&self) -> Vec<(String, String, f64)> {
        self.bidirected
            .iter()
            .map(|(&(a, b), &p)| (self.nodes[a].clone(), self.nodes[b].clone(), p))
            .collect()
    }

    pub(crate) fn directed_idx(&self) -> &BTreeSet<(usize, usize)> {
        &self.directed
    }

    pub(crate) fn bidirected_idx(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.bidirected
    }

    pub fn has_directed(&self, from: &str, to: &str) -> bool {
        match (self.index.get(from), self.index.get(to)) {
            (Some(&a), Some(&b)) => self.directed.contains(&(a, b)),
            _ => false,
        }
    }

    /// Plausibility of `a <-> b`, if present.
    pub fn bidirected_plausibility(&self, a: &str, b: &str) -> Option<f64> {
        let (i, j) = (*self.index.get(a)?, *self.index.get(b)?);
        self.bidirected.get(&ordered(i, j)).copied()
    }

    pub fn has_bidirected(&self, a: &str, b: &str) -> bool {
        self.bidirected_plausibility(a, b).is_some()
    }

    fn closure(&self, start: usize, up: bool) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let next = if up { &self.parents[v] } else { &self.children[v] };
            for &w in next {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen[start] = false;
        (0..self.len()).filter(|&i| seen[i]).collect()
    }

    pub(crate) fn ancestors_idx(&self, v: usize) -> Vec<usize> {
        self.closure(v, true)
    }

    pub(crate) fn descendants_idx(&self, v: usize) -> Vec<usize> {
        self.closure(v, false)
    }

    pub fn parents(&self, node: &str) -> Result<Vec<String>> {
        let v = self.index_of(node)?;
        Ok(self.names(self.parents[v].iter().copied()))
    }

    pub fn children(&self, node: &str) -> Result<Vec<String>> {
        let v = self.index_of(node)?;
        Ok(self.names(self.children[v].iter().copied()))
    }

    /// Ancestors over directed edges, excluding the node itself.
    pub fn ancestors(&self, node: &str) -> Result<Vec<String>> {
        let v = self.index_of(node)?;
        Ok(self.names(self.ancestors_idx(v)))
    }

    /// Descendants over directed edges, excluding the node itself.
    pub fn descendants(&self, node: &str) -> Result<Vec<String>> {
        let v = self.index_of(node)?;
        Ok(self.names(self.descendants_idx(v)))
    }

    /// Kahn's algorithm, lowest declaration index first. On failure a cycle
    /// is recovered by walking parent links inside the unsorted remainder.
    pub fn acyclicity(&self) -> Acyclicity {
        let n = self.len();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.parents[v].len()).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() == n {
            return Acyclicity::Acyclic(order);
        }
        let mut placed = vec![false; n];
        for &v in &order {
            placed[v] = true;
        }
        let start = (0..n).find(|&v| !placed[v]).expect("unsorted node exists");
        let mut walk = vec![start];
        let mut pos = HashMap::from([(start, 0usize)]);
        let mut v = start;
        loop {
            let p = *self.parents[v]
                .iter()
                .find(|&&p| !placed[p])
                .expect("remaining nodes keep a remaining parent");
            if let Some(&k) = pos.get(&p) {
                // walk[k..] follows parent links, so reverse for edge order.
                let mut cycle: Vec<usize> = walk[k..].iter().rev().copied().collect();
                let min_at = cycle
                    .iter()
                    .enumerate()
                    .min_by_key(|&(_, &c)| c)
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                cycle.rotate_left(min_at);
                return Acyclicity::Cyclic(self.names(cycle));
            }
            pos.insert(p, walk.len());
            walk.push(p);
            v = p;
        }
    }

    /// `(true, None)` for an acyclic directed part, otherwise `(false, Some(cycle))`.
    pub fn is_acyclic(&self) -> (bool, Option<Vec<String>>) {
        match self.acyclicity() {
            Acyclicity::Acyclic(_) => (true, None),
            Acyclicity::Cyclic(c) => (false, Some(c)),
        }
    }

    /// Topological order or a cycle error.
    pub fn assert_acyclic(&self) -> Result<Vec<usize>> {
        match self.acyclicity() {
            Acyclicity::Acyclic(order) => Ok(order),
            Acyclicity::Cyclic(c) => Err(GraphError::Cycle(c)),
        }
    }

    /// Time-unrolls the graph into slices `X@0 .. X@n_lags`.
    ///
    /// Every edge gets lagged copies `X@k -> Y@(k+1)`; edges that are not on a
    /// directed cycle also keep contemporaneous copies. Each node persists
    /// into the next slice. Bidirected edges are copied within each slice.
    pub fn unroll(&self, n_lags: usize) -> Result<CausalGraph> {
        if n_lags < 1 {
            return Err(GraphError::InvalidLags);
        }
        let n = self.len();
        let slices = n_lags + 1;
        let mut out = CausalGraph::default();
        for k in 0..slices {
            for name in &self.nodes {
                out.insert_node(format!("{name}@{k}"))?;
            }
        }
        let at = |v: usize, k: usize| k * n + v;
        let on_cycle = |a: usize, b: usize| self.descendants_idx(b).contains(&a);
        for &(a, b) in &self.directed {
            let cyclic = on_cycle(a, b);
            for k in 0..slices {
                if !cyclic {
                    out.insert_directed(at(a, k), at(b, k))?;
                }
                if k < n_lags {
                    out.insert_directed(at(a, k), at(b, k + 1))?;
                }
            }
        }
        for v in 0..n {
            for k in 0..n_lags {
                out.insert_directed(at(v, k), at(v, k + 1))?;
            }
        }
        for (&(a, b), &p) in &self.bidirected {
            for k in 0..slices {
                out.insert_bidirected(at(a, k), at(b, k), p)?;
            }
        }
        Ok(out)
    }

    /// Node-disjointness check shared by the separation queries.
    fn disjoint(&self, sets: &[&[usize]]) -> Result<()> {
        let mut seen = BTreeSet::new();
        for set in sets {
            for &v in *set {
                if !seen.insert(v) {
                    return Err(GraphError::Overlap(self.nodes[v].clone()));
                }
            }
        }
        Ok(())
    }

    /// m-separation of `x` and `y` given `z`.
    ///
    /// Bidirected edges are replaced by hidden fork nodes and standard
    /// d-separation runs on the resulting DAG.
    pub fn d_separated(&self, x: &[&str], y: &[&str], z: &[&str]) -> Result<bool> {
        let (xi, yi, zi) = (self.resolve(x)?, self.resolve(y)?, self.resolve(z)?);
        self.disjoint(&[&xi, &yi, &zi])?;
        self.assert_acyclic()?;
        Ok(self.d_separated_idx(&xi, &yi, &zi))
    }

    /// Unchecked variant: caller guarantees acyclicity and disjointness.
    pub(crate) fn d_separated_idx(&self, x: &[usize], y: &[usize], z: &[usize]) -> bool {
        CanonicalDag::from_graph(self).d_separated(x, y, z)
    }

    /// One factor per node in topological order.
    pub fn markov_factorization(&self) -> Result<Vec<Factor>> {
        if !self.bidirected.is_empty() {
            return Err(GraphError::SemiMarkovian);
        }
        let order = self.assert_acyclic()?;
        let mut rank = vec![0; self.len()];
        for (r, &v) in order.iter().enumerate() {
            rank[v] = r;
        }
        Ok(order
            .iter()
            .map(|&v| {
                let mut pa = self.parents[v].clone();
                pa.sort_by_key(|&p| std::cmp::Reverse(rank[p]));
                Factor {
                    child: self.nodes[v].clone(),
                    parents: self.names(pa),
                }
            })
            .collect())
    }

    /// Kept nodes reachable from `v` along directed paths whose
    /// intermediate nodes are all dropped.
    fn reach_through_dropped(&self, v: usize, keep: &[bool]) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut found = Vec::new();
        let mut stack: Vec<usize> = self.children[v].clone();
        while let Some(w) = stack.pop() {
            if seen[w] {
                continue;
            }
            seen[w] = true;
            if keep[w] {
                found.push(w);
            } else {
                stack.extend(self.children[w].iter().copied());
            }
        }
        found.sort_unstable();
        found
    }

    /// Latent projection onto `keep`.
    ///
    /// `A -> B` survives when a directed path from `A` to `B` runs only
    /// through dropped nodes. `A <-> B` appears when a path with arrowheads
    /// at both ends has only dropped non-collider intermediates. Such a path
    /// contains at most one bidirected edge, so its plausibility is that
    /// edge's score (or 1.0 for a pure hidden fork); the projected score is
    /// the maximum over generating paths.
    pub fn latent_project(&self, keep: &[&str]) -> Result<CausalGraph> {
        let keep_idx = self.resolve(keep)?;
        self.assert_acyclic()?;
        let n = self.len();
        let mut is_kept = vec![false; n];
        for &k in &keep_idx {
            is_kept[k] = true;
        }
        let reach: Vec<Vec<usize>> = (0..n).map(|v| self.reach_through_dropped(v, &is_kept)).collect();

        // Sources of A: A itself plus every dropped node that reaches A.
        let mut sources: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (a, src) in sources.iter_mut().enumerate() {
            if is_kept[a] {
                src.push(a);
            }
        }
        for w in (0..n).filter(|&w| !is_kept[w]) {
            for &a in &reach[w] {
                sources[a].push(w);
            }
        }

        let kept_order: Vec<usize> = (0..n).filter(|&v| is_kept[v]).collect();
        let mut new_index = vec![usize::MAX; n];
        let mut out = CausalGraph::default();
        for &v in &kept_order {
            new_index[v] = out.insert_node(self.nodes[v].clone())?;
        }
        for &a in &kept_order {
            for &b in &reach[a] {
                out.insert_directed(new_index[a], new_index[b])?;
            }
        }
        for (ai, &a) in kept_order.iter().enumerate() {
            for &b in &kept_order[ai + 1..] {
                let fork = (0..n)
                    .filter(|&w| !is_kept[w])
                    .any(|w| reach[w].contains(&a) && reach[w].contains(&b));
                let score = if fork {
                    Some(1.0)
                } else {
                    self.bidirected
                        .iter()
                        .filter(|(&(u, v), _)| {
                            (sources[a].contains(&u) && sources[b].contains(&v))
                                || (sources[a].contains(&v) && sources[b].contains(&u))
                        })
                        .map(|(_, &p)| p)
                        .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |m| m.max(p))))
                };
                if let Some(p) = score {
                    out.insert_bidirected(new_index[a], new_index[b], p)?;
                }
            }
        }
        Ok(out)
    }

    /// Plausibility of the graph with `removed` bidirected edges dropped.
    pub fn graph_plausibility(&self, removed: &[(&str, &str)]) -> Result<Plausibility> {
        let mut keys = BTreeSet::new();
        for (a, b) in removed {
            let key = ordered(self.index_of(a)?, self.index_of(b)?);
            if !self.bidirected.contains_key(&key) {
                return Err(GraphError::MissingEdge(format!("{a} <-> {b}")));
            }
            keys.insert(key);
        }
        Ok(self.plausibility_idx(&keys))
    }

    pub(crate) fn plausibility_idx(&self, removed: &BTreeSet<(usize, usize)>) -> Plausibility {
        let mut original = 1.0;
        let mut reduced = 1.0;
        let mut ratio = 1.0;
        for (key, &p) in &self.bidirected {
            original *= p;
            if removed.contains(key) {
                reduced *= 1.0 - p;
                ratio *= (1.0 - p) / p;
            } else {
                reduced *= p;
            }
        }
        Plausibility { original, reduced, ratio }
    }

    /// Copy without the given bidirected edges (index pairs, ordered).
    pub(crate) fn without_bidirected_idx(&self, removed: &BTreeSet<(usize, usize)>) -> CausalGraph {
        let mut g = self.clone();
        for key in removed {
            g.bidirected.remove(key);
        }
        g
    }

    /// Copy with every directed edge leaving `v` removed.
    pub(crate) fn without_outgoing_idx(&self, v: usize) -> CausalGraph {
        let mut g = self.clone();
        for c in g.children[v].drain(..) {
            g.directed.remove(&(v, c));
            g.parents[c].retain(|&p| p != v);
        }
        g
    }

    /// All simple paths between `a` and `b` over both edge kinds.
    pub fn paths_between(&self, a: &str, b: &str) -> Result<Vec<Path>> {
        let (s, t) = (self.index_of(a)?, self.index_of(b)?);
        let mut adj: Vec<Vec<(usize, PathStep)>> = vec![Vec::new(); self.len()];
        for &(u, v) in &self.directed {
            adj[u].push((v, PathStep { kind: EdgeKind::Directed, forward: true }));
            adj[v].push((u, PathStep { kind: EdgeKind::Directed, forward: false }));
        }
        for &(u, v) in self.bidirected.keys() {
            let step = PathStep { kind: EdgeKind::Bidirected, forward: true };
            adj[u].push((v, step));
            adj[v].push((u, step));
        }
        for list in &mut adj {
            list.sort_by_key(|&(w, st)| (w, st.kind, !st.forward));
        }
        let mut out = Vec::new();
        let mut on_path = vec![false; self.len()];
        let mut nodes = vec![s];
        let mut steps = Vec::new();
        on_path[s] = true;
        self.paths_dfs(t, &adj, &mut on_path, &mut nodes, &mut steps, &mut out);
        Ok(out)
    }

    fn paths_dfs(
        &self,
        target: usize,
        adj: &[Vec<(usize, PathStep)>],
        on_path: &mut [bool],
        nodes: &mut Vec<usize>,
        steps: &mut Vec<PathStep>,
        out: &mut Vec<Path>,
    ) {
        let v = *nodes.last().expect("non-empty path");
        if v == target {
            out.push(Path::from_parts(self.names(nodes.iter().copied()), steps.clone()));
            return;
        }
        for &(w, step) in &adj[v] {
            if on_path[w] {
                continue;
            }
            on_path[w] = true;
            nodes.push(w);
            steps.push(step);
            self.paths_dfs(target, adj, on_path, nodes, steps, out);
            steps.pop();
            nodes.pop();
            on_path[w] = false;
        }
    }

    /// Parses the line-oriented graph text format.
    pub fn parse(text: &str) -> Result<CausalGraph> {
        let mut g = CausalGraph::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if tokens.is_empty() {
                continue;
            }
            let syntax = |message: String| GraphError::Syntax { line, message };
            let node = |g: &mut CausalGraph, name: &str| -> Result<usize> {
                if !valid_name(name) {
                    return Err(syntax(format!("invalid node name `{name}`")));
                }
                g.ensure_node(name)
            };
            let at_line = |e: GraphError| match e {
                GraphError::Syntax { .. } => e,
                other => GraphError::Syntax { line, message: other.to_string() },
            };
            match tokens.as_slice() {
                ["node", name] => {
                    node(&mut g, name).map_err(at_line)?;
                }
                [a, "->", b, rest @ ..] => {
                    if rest.len() > 1 {
                        return Err(syntax("trailing tokens after edge".into()));
                    }
                    if let Some(p) = rest.first() {
                        let p: f64 = p
                            .parse()
                            .map_err(|_| syntax(format!("invalid plausibility `{p}`")))?;
                        if p != 1.0 {
                            return Err(at_line(GraphError::DirectedPlausibility(p)));
                        }
                    }
                    let i = node(&mut g, a).map_err(at_line)?;
                    let j = node(&mut g, b).map_err(at_line)?;
                    g.insert_directed(i, j).map_err(at_line)?;
                }
                [a, "<->", b, p] => {
                    let p: f64 = p
                        .parse()
                        .map_err(|_| syntax(format!("invalid plausibility `{p}`")))?;
                    let i = node(&mut g, a).map_err(at_line)?;
                    let j = node(&mut g, b).map_err(at_line)?;
                    g.insert_bidirected(i, j, p).map_err(at_line)?;
                }
                [_, "<->", _] => {
                    return Err(syntax("bidirected edge requires a plausibility".into()));
                }
                _ => return Err(syntax(format!("cannot parse `{}`", content.trim()))),
            }
        }
        Ok(g)
    }

    /// Nodes in declaration order, then directed and bidirected edges,
    /// each sorted by name.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            out.push_str(&format!("node {n}\n"));
        }
        let mut directed = self.directed_edges();
        directed.sort();
        for (a, b) in directed {
            out.push_str(&format!("{a} -> {b}\n"));
        }
        let mut bidirected: Vec<(String, String, f64)> = self
            .bidirected_edges()
            .into_iter()
            .map(|(a, b, p)| if a <= b { (a, b, p) } else { (b, a, p) })
            .collect();
        bidirected.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
        for (a, b, p) in bidirected {
            out.push_str(&format!("{a} <-> {b} {p}\n"));
        }
        out
    }
}

impl fmt::Display for CausalGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

/// DAG with one hidden parent per bidirected edge.
struct CanonicalDag {
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl CanonicalDag {
    fn from_graph(g: &CausalGraph) -> Self {
        let n = g.len();
        let total = n + g.bidirected.len();
        let mut parents = vec![Vec::new(); total];
        let mut children = vec![Vec::new(); total];
        for &(a, b) in &g.directed {
            parents[b].push(a);
            children[a].push(b);
        }
        for (h, &(a, b)) in g.bidirected.keys().enumerate() {
            let hidden = n + h;
            children[hidden].extend([a, b]);
            parents[a].push(hidden);
            parents[b].push(hidden);
        }
        Self { parents, children }
    }

    /// Reachability ("Bayes ball") over (node, direction) states.
    fn d_separated(&self, x: &[usize], y: &[usize], z: &[usize]) -> bool {
        let total = self.parents.len();
        let mut in_z = vec![false; total];
        for &v in z {
            in_z[v] = true;
        }
        // Z together with its ancestors.
        let mut anc_z = in_z.clone();
        let mut stack: Vec<usize> = z.to_vec();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !anc_z[p] {
                    anc_z[p] = true;
                    stack.push(p);
                }
            }
        }
        let mut is_y = vec![false; total];
        for &v in y {
            is_y[v] = true;
        }
        // up = arrived from a child, down = arrived from a parent.
        let mut visited = vec![[false; 2]; total];
        let mut queue: VecDeque<(usize, usize)> = x.iter().map(|&v| (v, 0)).collect();
        const UP: usize = 0;
        const DOWN: usize = 1;
        while let Some((v, dir)) = queue.pop_front() {
            if visited[v][dir] {
                continue;
            }
            visited[v][dir] = true;
            if !in_z[v] && is_y[v] {
                return false;
            }
            if dir == UP {
                if !in_z[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, UP)));
                    queue.extend(self.children[v].iter().map(|&c| (c, DOWN)));
                }
            } else {
                if !in_z[v] {
                    queue.extend(self.children[v].iter().map(|&c| (c, DOWN)));
                }
                if anc_z[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, UP)));
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_parent_graph() -> CausalGraph {
        CausalGraph::parse("X1 -> X2\nX1 -> Y\nX2 -> Y\n").unwrap()
    }

    fn mediated_graph() -> CausalGraph {
        CausalGraph::parse("C -> T\nC -> Y\nC <-> Y 1.0\nT -> M\nM -> Y\nT -> Y\n").unwrap()
    }

    #[test]
    fn parents_of_collider() {
        assert_eq!(two_parent_graph().parents("Y").unwrap(), vec!["X1", "X2"]);
    }

    #[test]
    fn isolated_node_has_no_relatives() {
        let g = CausalGraph::new(["A", "B"]).unwrap().with_directed("A", "B").unwrap();
        let g = g.with_node("Z").unwrap();
        assert!(g.parents("Z").unwrap().is_empty());
        assert!(g.children("Z").unwrap().is_empty());
        assert!(g.ancestors("Z").unwrap().is_empty());
        assert!(g.descendants("Z").unwrap().is_empty());
    }

    #[test]
    fn chain_ancestors() {
        let g = CausalGraph::parse("A -> B\nB -> C").unwrap();
        assert_eq!(g.ancestors("C").unwrap(), vec!["A", "B"]);
        assert_eq!(g.descendants("A").unwrap(), vec!["B", "C"]);
        assert!(matches!(g.parents("Q"), Err(GraphError::UnknownNode(_))));
    }

    #[test]
    fn two_cycle_witness() {
        let g = CausalGraph::parse("A -> B\nB -> A").unwrap();
        assert_eq!(g.is_acyclic(), (false, Some(vec!["A".to_string(), "B".to_string()])));
        assert!(matches!(g.assert_acyclic(), Err(GraphError::Cycle(_))));
    }

    #[test]
    fn longer_cycle_witness_follows_edges() {
        let g = CausalGraph::parse("R -> A\nA -> B\nB -> C\nC -> A").unwrap();
        let (ok, cycle) = g.is_acyclic();
        assert!(!ok);
        let cycle = cycle.unwrap();
        assert_eq!(cycle, vec!["A", "B", "C"]);
        for i in 0..cycle.len() {
            assert!(g.has_directed(&cycle[i], &cycle[(i + 1) % cycle.len()]));
        }
    }

    #[test]
    fn tree_is_acyclic() {
        let g = CausalGraph::parse("A -> B\nA -> C\nB -> D\nB -> E").unwrap();
        assert!(g.is_acyclic().0);
    }

    #[test]
    fn unroll_two_cycle() {
        let g = CausalGraph::parse("A -> B\nB -> A").unwrap();
        let u = g.unroll(1).unwrap();
        let mut edges = u.directed_edges();
        edges.sort();
        let expect: Vec<(String, String)> = [
            ("A@0", "A@1"),
            ("A@0", "B@1"),
            ("B@0", "A@1"),
            ("B@0", "B@1"),
        ]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        assert_eq!(edges, expect);
        assert!(u.is_acyclic().0);
    }

    #[test]
    fn unroll_acyclic_keeps_contemporaneous_edges() {
        let g = CausalGraph::parse("A -> B").unwrap();
        let u = g.unroll(1).unwrap();
        assert!(u.has_directed("A@0", "B@0"));
        assert!(u.has_directed("A@1", "B@1"));
        assert!(u.has_directed("A@0", "B@1"));
        assert!(u.has_directed("A@0", "A@1"));
        assert_eq!(u.directed_edges().len(), 5);
        assert!(CausalGraph::default().unroll(2).unwrap().is_empty());
        assert_eq!(g.unroll(0), Err(GraphError::InvalidLags));
    }

    #[test]
    fn d_separation_basic_structures() {
        let chain = CausalGraph::parse("A -> B\nB -> C").unwrap();
        assert!(chain.d_separated(&["A"], &["C"], &["B"]).unwrap());
        assert!(!chain.d_separated(&["A"], &["C"], &[]).unwrap());
        let collider = CausalGraph::parse("A -> B\nC -> B").unwrap();
        assert!(collider.d_separated(&["A"], &["C"], &[]).unwrap());
        assert!(!collider.d_separated(&["A"], &["C"], &["B"]).unwrap());
        let collider_desc = CausalGraph::parse("A -> B\nC -> B\nB -> D").unwrap();
        assert!(!collider_desc.d_separated(&["A"], &["C"], &["D"]).unwrap());
    }

    #[test]
    fn mediated_backdoor_blocked_by_c() {
        let g = CausalGraph::parse("C -> T\nC -> Y\nC <-> Y 0.7\nM -> Y\nT -> M").unwrap();
        let g = g.without_outgoing_idx(g.index_of("T").unwrap());
        assert!(g.d_separated(&["T"], &["Y"], &["C"]).unwrap());
        assert!(!g.d_separated(&["T"], &["Y"], &[]).unwrap());
    }

    #[test]
    fn bidirected_edge_connects() {
        let g = CausalGraph::parse("A <-> B 0.5").unwrap();
        assert!(!g.d_separated(&["A"], &["B"], &[]).unwrap());
        let g = CausalGraph::parse("A <-> B 0.5\nB <-> C 0.5").unwrap();
        assert!(g.d_separated(&["A"], &["C"], &[]).unwrap());
        assert!(!g.d_separated(&["A"], &["C"], &["B"]).unwrap());
    }

    #[test]
    fn d_separation_errors() {
        let g = two_parent_graph();
        assert!(matches!(
            g.d_separated(&["X1"], &["X1"], &[]),
            Err(GraphError::Overlap(_))
        ));
        let cyc = CausalGraph::parse("A -> B\nB -> A\nC -> A").unwrap();
        assert!(matches!(
            cyc.d_separated(&["A"], &["C"], &[]),
            Err(GraphError::Cycle(_))
        ));
    }

    #[test]
    fn factorization_of_two_parent_graph() {
        let f = two_parent_graph().markov_factorization().unwrap();
        assert_eq!(render_factorization(&f), "P(X1)·P(X2|X1)·P(Y|X2,X1)");
        let g = CausalGraph::new(["A", "B"]).unwrap();
        assert_eq!(render_factorization(&g.markov_factorization().unwrap()), "P(A)·P(B)");
        let g = CausalGraph::new(["A"]).unwrap();
        assert_eq!(render_factorization(&g.markov_factorization().unwrap()), "P(A)");
        assert_eq!(mediated_graph().markov_factorization(), Err(GraphError::SemiMarkovian));
    }

    #[test]
    fn projection_examples() {
        let g = CausalGraph::parse("U -> A\nU -> B").unwrap();
        let p = g.latent_project(&["A", "B"]).unwrap();
        assert_eq!(p.bidirected_plausibility("A", "B"), Some(1.0));
        assert!(p.directed_edges().is_empty());

        let g = CausalGraph::parse("A -> M\nM -> B").unwrap();
        let p = g.latent_project(&["A", "B"]).unwrap();
        assert!(p.has_directed("A", "B"));
        assert!(p.bidirected_edges().is_empty());

        let g = mediated_graph();
        let all: Vec<&str> = g.nodes().iter().map(String::as_str).collect();
        assert_eq!(g.latent_project(&all).unwrap(), g);
    }

    #[test]
    fn projection_carries_bidirected_score() {
        let g = CausalGraph::parse("W1 <-> W2 0.6\nW1 -> A\nW2 -> B\nA -> B").unwrap();
        let p = g.latent_project(&["A", "B"]).unwrap();
        assert_eq!(p.bidirected_plausibility("A", "B"), Some(0.6));
        assert!(p.has_directed("A", "B"));
        // a collider among dropped nodes does not connect
        let g = CausalGraph::parse("A -> W\nB -> W").unwrap();
        let p = g.latent_project(&["A", "B"]).unwrap();
        assert!(p.bidirected_edges().is_empty() && p.directed_edges().is_empty());
    }

    #[test]
    fn plausibility_ratios() {
        let g = CausalGraph::parse("A <-> B 0.5\nB <-> C 0.8\nA -> C").unwrap();
        assert_eq!(g.graph_plausibility(&[]).unwrap().ratio, 1.0);
        assert_eq!(g.graph_plausibility(&[("A", "B")]).unwrap().ratio, 1.0);
        let r = g.graph_plausibility(&[("C", "B")]).unwrap();
        assert!((r.ratio - 0.25).abs() < 1e-12);
        assert!((r.reduced / r.original - r.ratio).abs() < 1e-12);
        assert!(matches!(
            g.graph_plausibility(&[("A", "C")]),
            Err(GraphError::MissingEdge(_))
        ));
    }

    #[test]
    fn parse_examples() {
        let g = CausalGraph::parse("A -> B").unwrap();
        assert!(g.has_directed("A", "B"));
        let g = CausalGraph::parse("A <-> B 0.9").unwrap();
        assert_eq!(g.bidirected_plausibility("B", "A"), Some(0.9));
        assert_eq!(
            CausalGraph::parse("A <-> B 1.3"),
            Err(GraphError::Syntax {
                line: 1,
                message: "plausibility 1.3 outside (0, 1]".into()
            })
        );
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = CausalGraph::parse("# header\nA -> B\nA -> A\n").unwrap_err();
        assert!(matches!(err, GraphError::Syntax { line: 3, .. }));
        let err = CausalGraph::parse("A -> B\nA -> B").unwrap_err();
        assert!(matches!(err, GraphError::Syntax { line: 2, .. }));
        let err = CausalGraph::parse("A <-> B").unwrap_err();
        assert!(matches!(err, GraphError::Syntax { line: 1, .. }));
        let err = CausalGraph::parse("A => B").unwrap_err();
        assert!(matches!(err, GraphError::Syntax { line: 1, .. }));
        let err = CausalGraph::parse("1A -> B").unwrap_err();
        assert!(matches!(err, GraphError::Syntax { line: 1, .. }));
        assert!(CausalGraph::parse("A -> B 1.0\nB -> C 0.5").is_err());
    }

    #[test]
    fn serialize_orders_edges_by_name() {
        let g = CausalGraph::parse("node Z\nZ -> B\nA -> B\nZ <-> A 0.75").unwrap();
        assert_eq!(
            g.serialize(),
            "node Z\nnode B\nnode A\nA -> B\nZ -> B\nA <-> Z 0.75\n"
        );
        assert_eq!(CausalGraph::parse(&g.serialize()).unwrap(), g);
    }

    #[test]
    fn backdoor_paths_via_enumeration() {
        let g = mediated_graph();
        let paths = g.paths_between("T", "Y").unwrap();
        let rendered: Vec<String> = paths.iter().map(|p| p.to_string()).collect();
        assert!(rendered.contains(&"T <- C -> Y".to_string()));
        assert!(rendered.contains(&"T <- C <-> Y".to_string()));
        assert!(rendered.contains(&"T -> M -> Y".to_string()));
        assert!(rendered.contains(&"T -> Y".to_string()));
        assert_eq!(paths.len(), 4);
    }

    #[test]
    fn path_collider_rules() {
        let g = CausalGraph::parse("A -> T\nA -> B\nC -> B\nC -> Y\nB -> D").unwrap();
        let paths = g.paths_between("T", "Y").unwrap();
        assert_eq!(paths.len(), 1);
        let p = &paths[0];
        assert_eq!(p.colliders, vec![2]);
        assert!(!p.is_open(&g, &[]).unwrap());
        assert!(p.is_open(&g, &["D"]).unwrap());
        assert!(!p.is_open(&g, &["D", "A"]).unwrap());
    }
}
