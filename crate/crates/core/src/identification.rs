//! Backdoor identification: paths, adjustment sets, variable roles, the
//! most plausible identifiable subgraph, and estimand rendering.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::format_value;
use crate::graph::{CausalGraph, GraphError, Path};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IdError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("treatment and outcome must differ (`{0}`)")]
    SameNode(String),
    #[error("adjustment set may not contain `{0}`")]
    Overlap(String),
    #[error("not backdoor-identifiable: {0}")]
    NotIdentifiable(String),
    #[error("invalid estimand: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, IdError>;

fn endpoints(graph: &CausalGraph, t: &str, y: &str) -> Result<(usize, usize)> {
    if t == y {
        return Err(IdError::SameNode(t.to_string()));
    }
    let (ti, yi) = (graph.index_of(t)?, graph.index_of(y)?);
    graph.assert_acyclic()?;
    Ok((ti, yi))
}

/// All `T`-`Y` paths starting with an arrowhead into `T`.
pub fn backdoor_paths(graph: &CausalGraph, t: &str, y: &str) -> Result<Vec<Path>> {
    endpoints(graph, t, y)?;
    Ok(graph
        .paths_between(t, y)?
        .into_iter()
        .filter(|p| p.enters_start())
        .collect())
}

fn backdoor_valid_idx(graph: &CausalGraph, t: usize, y: usize, z: &[usize], cut: &CausalGraph) -> bool {
    let desc = graph.descendants_idx(t);
    if z.iter().any(|v| desc.contains(v)) {
        return false;
    }
    cut.d_separated_idx(&[t], &[y], z)
}

/// Backdoor criterion: no descendant of `T` in `z`, and `z` blocks every
/// backdoor path.
pub fn is_backdoor_set(graph: &CausalGraph, t: &str, y: &str, z: &[&str]) -> Result<bool> {
    let (ti, yi) = endpoints(graph, t, y)?;
    for &v in z {
        if v == t || v == y {
            return Err(IdError::Overlap(v.to_string()));
        }
    }
    let zi = graph.resolve(z)?;
    let cut = graph.without_outgoing_idx(ti);
    Ok(backdoor_valid_idx(graph, ti, yi, &zi, &cut))
}

/// Candidate adjustment variables: non-descendants of `T` that are
/// ancestors of `T` or `Y` once `T`'s outgoing edges are cut. Every
/// inclusion-minimal valid set lies inside this set. Sorted by name.
fn candidates(graph: &CausalGraph, t: usize, y: usize, cut: &CausalGraph) -> Vec<usize> {
    let desc = graph.descendants_idx(t);
    let mut anc: BTreeSet<usize> = cut.ancestors_idx(t).into_iter().collect();
    anc.extend(cut.ancestors_idx(y));
    let mut out: Vec<usize> = anc
        .into_iter()
        .filter(|v| *v != t && *v != y && !desc.contains(v))
        .collect();
    out.sort_by(|&a, &b| graph.name(a).cmp(graph.name(b)));
    out
}

/// Calls `f` on every `k`-subset of `items` in lexicographic order until it
/// returns true.
fn subsets_of_size(items: &[usize], k: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn go(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == k {
            return f(cur);
        }
        for i in start..=items.len().saturating_sub(k - cur.len()) {
            if i >= items.len() {
                break;
            }
            cur.push(items[i]);
            if go(items, k, i + 1, cur, f) {
                return true;
            }
            cur.pop();
        }
        false
    }
    go(items, k, 0, &mut Vec::with_capacity(k), f)
}

fn find_backdoor_idx(graph: &CausalGraph, t: usize, y: usize) -> Option<Vec<usize>> {
    let cut = graph.without_outgoing_idx(t);
    let cand = candidates(graph, t, y, &cut);
    for k in 0..=cand.len() {
        let mut found = None;
        subsets_of_size(&cand, k, &mut |s| {
            if backdoor_valid_idx(graph, t, y, s, &cut) {
                found = Some(s.to_vec());
                true
            } else {
                false
            }
        });
        if found.is_some() {
            return found;
        }
    }
    None
}

/// Smallest valid backdoor set, ties broken lexicographically by name.
pub fn find_backdoor_set(graph: &CausalGraph, t: &str, y: &str) -> Result<Option<Vec<String>>> {
    let (ti, yi) = endpoints(graph, t, y)?;
    Ok(find_backdoor_idx(graph, ti, yi).map(|s| s.iter().map(|&v| graph.name(v).to_string()).collect()))
}

/// Every inclusion-minimal valid backdoor set, smallest first. Returns
/// `None` when the candidate pool is too large to enumerate.
pub fn minimal_backdoor_sets(graph: &CausalGraph, t: &str, y: &str, max_candidates: usize) -> Result<Option<Vec<Vec<String>>>> {
    let (ti, yi) = endpoints(graph, t, y)?;
    let cut = graph.without_outgoing_idx(ti);
    let cand = candidates(graph, ti, yi, &cut);
    if cand.len() > max_candidates {
        return Ok(None);
    }
    let mut minimal: Vec<Vec<usize>> = Vec::new();
    for k in 0..=cand.len() {
        let mut hits = Vec::new();
        subsets_of_size(&cand, k, &mut |s| {
            let covered = minimal.iter().any(|m| m.iter().all(|v| s.contains(v)));
            if !covered && backdoor_valid_idx(graph, ti, yi, s, &cut) {
                hits.push(s.to_vec());
            }
            false
        });
        minimal.extend(hits);
    }
    Ok(Some(
        minimal
            .into_iter()
            .map(|s| s.iter().map(|&v| graph.name(v).to_string()).collect())
            .collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Confounder,
    Mediator,
    Instrument,
    Precision,
    ColliderRisk,
    Other,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Confounder => "confounder",
            Role::Mediator => "mediator",
            Role::Instrument => "instrument",
            Role::Precision => "precision",
            Role::ColliderRisk => "collider-risk",
            Role::Other => "other",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoleReport {
    pub treatment: String,
    pub outcome: String,
    /// One role per node other than treatment and outcome, in graph order.
    pub roles: Vec<(String, Role)>,
    /// Backdoor paths open given the empty set.
    pub open_backdoor_paths: Vec<Path>,
    pub adjustment_set: Option<Vec<String>>,
}

impl RoleReport {
    pub fn role(&self, node: &str) -> Option<Role> {
        self.roles.iter().find(|(n, _)| n == node).map(|(_, r)| *r)
    }

    pub fn with_role(&self, role: Role) -> Vec<String> {
        self.roles.iter().filter(|(_, r)| *r == role).map(|(n, _)| n.clone()).collect()
    }
}

impl fmt::Display for RoleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "treatment: {}", self.treatment)?;
        writeln!(f, "outcome: {}", self.outcome)?;
        for (n, r) in &self.roles {
            writeln!(f, "role {n}: {r}")?;
        }
        for p in &self.open_backdoor_paths {
            writeln!(f, "open backdoor path: {p}")?;
        }
        match &self.adjustment_set {
            Some(s) => writeln!(f, "adjustment set: {{{}}}", s.join(", ")),
            None => writeln!(f, "adjustment set: none (not backdoor-identifiable)"),
        }
    }
}

const ROLE_ENUMERATION_LIMIT: usize = 16;

/// Labels every node relative to the pair (`t`, `y`). When several roles
/// apply the first of mediator, confounder, collider-risk, instrument,
/// precision wins.
pub fn classify_variables(graph: &CausalGraph, t: &str, y: &str) -> Result<RoleReport> {
    let (ti, yi) = endpoints(graph, t, y)?;
    let paths = backdoor_paths(graph, t, y)?;
    let open: Vec<Path> = paths
        .iter()
        .filter(|p| p.is_open(graph, &[]).unwrap_or(false))
        .cloned()
        .collect();
    let adjustment = find_backdoor_set(graph, t, y)?;
    let minimal = minimal_backdoor_sets(graph, t, y, ROLE_ENUMERATION_LIMIT)?;
    let in_minimal = |n: &str| match (&minimal, &adjustment) {
        (Some(sets), _) if !sets.is_empty() => sets.iter().any(|s| s.iter().any(|v| v == n)),
        (None, Some(adj)) => adj.iter().any(|v| v == n),
        _ => true,
    };
    let desc_t = graph.descendants_idx(ti);
    let desc_y = graph.descendants_idx(yi);
    let anc_y = graph.ancestors_idx(yi);
    let anc_t = graph.ancestors_idx(ti);
    let cut = graph.without_outgoing_idx(ti);
    let anc_y_cut = cut.ancestors_idx(yi);
    let adj_idx: Vec<usize> = adjustment
        .as_ref()
        .map(|s| s.iter().map(|n| graph.index_of(n).expect("known node")).collect())
        .unwrap_or_default();

    let mut roles = Vec::new();
    for v in 0..graph.len() {
        if v == ti || v == yi {
            continue;
        }
        let name = graph.name(v);
        let mediator = desc_t.contains(&v) && anc_y.contains(&v);
        let on_open_noncollider = open.iter().any(|p| {
            p.nodes
                .iter()
                .position(|n| n == name)
                .is_some_and(|i| !p.colliders.contains(&i))
        });
        let confounder = !desc_t.contains(&v) && on_open_noncollider && in_minimal(name);
        let collider_on_backdoor = paths
            .iter()
            .any(|p| p.colliders.iter().any(|&i| p.nodes[i] == name));
        let collider_risk = (desc_t.contains(&v) && desc_y.contains(&v)) || collider_on_backdoor;
        let instrument = anc_t.contains(&v) && !anc_y_cut.contains(&v) && {
            let mut z: Vec<usize> = adj_idx.iter().copied().filter(|&c| c != v).collect();
            z.push(ti);
            graph.d_separated_idx(&[v], &[yi], &z)
        };
        let precision = anc_y.contains(&v) && graph.d_separated_idx(&[v], &[ti], &[]);
        let role = if mediator {
            Role::Mediator
        } else if confounder {
            Role::Confounder
        } else if collider_risk {
            Role::ColliderRisk
        } else if instrument {
            Role::Instrument
        } else if precision {
            Role::Precision
        } else {
            Role::Other
        };
        roles.push((name.to_string(), role));
    }
    Ok(RoleReport {
        treatment: t.to_string(),
        outcome: y.to_string(),
        roles,
        open_backdoor_paths: open,
        adjustment_set: adjustment,
    })
}

/// Result of the most-plausible identifiable subgraph search.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgraphResult {
    pub subgraph: CausalGraph,
    /// Removed bidirected edges as (smaller name, larger name), sorted.
    pub removed: Vec<(String, String)>,
    pub ratio: f64,
    pub adjustment_set: Vec<String>,
}

/// Removal cost of one bidirected edge: `-ln((1 - p) / p)`.
fn edge_cost(p: f64) -> f64 {
    let p = p.min(1.0 - 1e-15);
    (p / (1.0 - p)).ln()
}

#[derive(PartialEq)]
struct Node {
    toggle_cost: f64,
    last: usize,
    toggles: Vec<usize>,
}

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .toggle_cost
            .total_cmp(&self.toggle_cost)
            .then_with(|| other.toggles.cmp(&self.toggles))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn removal_key(graph: &CausalGraph, set: &BTreeSet<(usize, usize)>) -> Vec<(String, String)> {
    let mut names: Vec<(String, String)> = set
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (graph.name(a).to_string(), graph.name(b).to_string());
            if x <= y {
                (x, y)
            } else {
                (y, x)
            }
        })
        .collect();
    names.sort();
    names
}

/// Finds the bidirected-edge removal that makes `(t, y)` backdoor
/// identifiable with the highest plausibility ratio. Only inclusion-minimal
/// removals are considered, so an already identifiable graph keeps all its
/// edges. Ties prefer fewer removed edges, then the lexicographically
/// smaller edge list.
pub fn most_plausible_backdoor_subgraph(graph: &CausalGraph, t: &str, y: &str) -> Result<SubgraphResult> {
    let (ti, yi) = endpoints(graph, t, y)?;
    let edges: Vec<((usize, usize), f64)> = graph.bidirected_idx().iter().map(|(&k, &p)| (k, p)).collect();
    let costs: Vec<f64> = edges.iter().map(|&(_, p)| edge_cost(p)).collect();
    let base: BTreeSet<usize> = (0..edges.len()).filter(|&i| costs[i] < 0.0).collect();
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&a, &b| costs[a].abs().total_cmp(&costs[b].abs()).then(a.cmp(&b)));

    let to_set = |chosen: &BTreeSet<usize>| -> BTreeSet<(usize, usize)> { chosen.iter().map(|&i| edges[i].0).collect() };
    let valid = |chosen: &BTreeSet<usize>| find_backdoor_idx(&graph.without_bidirected_idx(&to_set(chosen)), ti, yi);

    if valid(&(0..edges.len()).collect()).is_none() {
        return Err(IdError::NotIdentifiable(format!(
            "`{t}` and `{y}` cannot be separated even with every bidirected edge removed"
        )));
    }

    let mut heap = BinaryHeap::new();
    heap.push(Node { toggle_cost: 0.0, last: usize::MAX, toggles: Vec::new() });
    let mut best: Option<(f64, BTreeSet<usize>, Vec<usize>)> = None;
    while let Some(node) = heap.pop() {
        if let Some((cost, _, _)) = &best {
            if node.toggle_cost > cost + 1e-12 {
                break;
            }
        }
        let next = if node.last == usize::MAX { 0 } else { node.last + 1 };
        if next < order.len() {
            let extra = costs[order[next]].abs();
            let mut grow = node.toggles.clone();
            grow.push(order[next]);
            heap.push(Node { toggle_cost: node.toggle_cost + extra, last: next, toggles: grow });
            if node.last != usize::MAX {
                let mut swap = node.toggles.clone();
                *swap.last_mut().expect("non-empty") = order[next];
                let prev = costs[order[node.last]].abs();
                heap.push(Node { toggle_cost: node.toggle_cost - prev + extra, last: next, toggles: swap });
            }
        }
        let mut chosen = base.clone();
        for &i in &node.toggles {
            if !chosen.remove(&i) {
                chosen.insert(i);
            }
        }
        let Some(adj) = valid(&chosen) else { continue };
        let minimal = chosen.iter().all(|&i| {
            let mut fewer = chosen.clone();
            fewer.remove(&i);
            valid(&fewer).is_none()
        });
        if !minimal {
            continue;
        }
        let better = match &best {
            None => true,
            Some((_, prev, _)) => {
                (chosen.len(), removal_key(graph, &to_set(&chosen))) < (prev.len(), removal_key(graph, &to_set(prev)))
            }
        };
        if better {
            best = Some((node.toggle_cost, chosen, adj));
        }
    }
    let (_, chosen, adj) = best.expect("full removal is valid so a minimal removal exists");
    let removed_idx = to_set(&chosen);
    let subgraph = graph.without_bidirected_idx(&removed_idx);
    let ratio = graph.plausibility_idx(&removed_idx).ratio;
    Ok(SubgraphResult {
        removed: removal_key(graph, &removed_idx),
        ratio,
        adjustment_set: adj.iter().map(|&v| subgraph.name(v).to_string()).collect(),
        subgraph,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    UserFixed,
    FromGraph,
}

/// Treatment, outcome, contrasts and adjustment variables for one analysis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimandSpec {
    pub treatment: String,
    pub outcome: String,
    /// `(t, t')` pairs; each contrast targets `E[Y|do(t)] - E[Y|do(t')]`.
    pub contrasts: Vec<(f64, f64)>,
    pub confounders: Vec<String>,
    pub precision: Vec<String>,
    pub provenance: Provenance,
}

impl EstimandSpec {
    pub fn validate(&self) -> Result<()> {
        if self.treatment == self.outcome {
            return Err(IdError::SameNode(self.treatment.clone()));
        }
        if self.contrasts.is_empty() {
            return Err(IdError::InvalidSpec("no contrasts".into()));
        }
        for v in self.confounders.iter().chain(&self.precision) {
            if *v == self.treatment || *v == self.outcome {
                return Err(IdError::Overlap(v.clone()));
            }
        }
        if let Some(v) = self.confounders.iter().find(|c| self.precision.contains(c)) {
            return Err(IdError::InvalidSpec(format!("`{v}` is both a confounder and a precision variable")));
        }
        Ok(())
    }

    /// Confounders followed by precision variables.
    pub fn adjustment(&self) -> Vec<String> {
        self.confounders.iter().chain(&self.precision).cloned().collect()
    }
}

pub fn contrast_label(t: f64, t_prime: f64) -> String {
    format!("{}-{}", format_value(t), format_value(t_prime))
}

/// Backdoor adjustment formula and null hypothesis for every contrast.
/// Fails when the confounder set is not a valid backdoor set, naming a path
/// it leaves open.
pub fn render_estimand(graph: &CausalGraph, spec: &EstimandSpec) -> Result<String> {
    spec.validate()?;
    let (t, y) = (spec.treatment.as_str(), spec.outcome.as_str());
    let conf: Vec<&str> = spec.confounders.iter().map(String::as_str).collect();
    if !is_backdoor_set(graph, t, y, &conf)? {
        let desc = graph.descendants(t)?;
        if let Some(d) = conf.iter().find(|c| desc.iter().any(|x| x == *c)) {
            return Err(IdError::NotIdentifiable(format!("`{d}` is a descendant of `{t}`")));
        }
        let open = backdoor_paths(graph, t, y)?
            .into_iter()
            .find(|p| p.is_open(graph, &conf).unwrap_or(false));
        let reason = match open {
            Some(p) => format!("backdoor path {p} is open given {{{}}}", conf.join(", ")),
            None => format!("{{{}}} does not block every backdoor path", conf.join(", ")),
        };
        return Err(IdError::NotIdentifiable(reason));
    }
    let adj = spec.adjustment();
    let mut out = String::new();
    for &(a, b) in &spec.contrasts {
        let label = contrast_label(a, b);
        let body = if adj.is_empty() {
            format!("E[{y}|{t}={}] − E[{y}|{t}={}]", format_value(a), format_value(b))
        } else {
            let set = adj.join(",");
            let sub = if adj.len() == 1 { set.clone() } else { format!("{{{set}}}") };
            format!(
                "E_{sub}[E[{y}|{t}={},{set}] − E[{y}|{t}={},{set}]]",
                format_value(a),
                format_value(b)
            )
        };
        out.push_str(&format!("Ψ_{{{label}}} = {body}\n"));
        out.push_str(&format!("h_{{0, {label}}}: Ψ_{{{label}}} = 0\n"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mediated_graph() -> CausalGraph {
        CausalGraph::parse("C -> T\nC -> Y\nT -> M\nM -> Y\nT -> Y\nC <-> Y 0.8").unwrap()
    }

    #[test]
    fn mediated_backdoor_paths() {
        let g = mediated_graph();
        let mut paths: Vec<String> = backdoor_paths(&g, "T", "Y").unwrap().iter().map(|p| p.to_string()).collect();
        paths.sort();
        assert_eq!(paths, vec!["T <- C -> Y", "T <- C <-> Y"]);
        assert_eq!(find_backdoor_set(&g, "T", "Y").unwrap(), Some(vec!["C".to_string()]));
        assert!(is_backdoor_set(&g, "T", "Y", &["C"]).unwrap());
        assert!(!is_backdoor_set(&g, "T", "Y", &["M"]).unwrap());
        assert!(matches!(is_backdoor_set(&g, "T", "Y", &["T"]), Err(IdError::Overlap(_))));
    }

    #[test]
    fn simple_cases() {
        let g = CausalGraph::parse("T -> Y\nR -> Y").unwrap();
        assert!(backdoor_paths(&g, "T", "Y").unwrap().is_empty());
        assert_eq!(find_backdoor_set(&g, "T", "Y").unwrap(), Some(vec![]));
        let g = CausalGraph::parse("T -> Y\nT <-> Y 0.5").unwrap();
        assert_eq!(find_backdoor_set(&g, "T", "Y").unwrap(), None);
        assert!(!is_backdoor_set(&g, "T", "Y", &[]).unwrap());
        let g = CausalGraph::parse("A -> T\nA -> B\nC -> B\nC -> Y").unwrap();
        let p = backdoor_paths(&g, "T", "Y").unwrap();
        assert_eq!(p.len(), 1);
        assert!(!p[0].is_open(&g, &[]).unwrap());
        assert!(matches!(backdoor_paths(&g, "T", "T"), Err(IdError::SameNode(_))));
    }

    #[test]
    fn role_assignment() {
        let g = CausalGraph::parse("C -> T\nC -> Y\nT -> M\nM -> Y\nT -> Y\nI -> T\nR -> Y\nnode Z").unwrap();
        let r = classify_variables(&g, "T", "Y").unwrap();
        assert_eq!(r.role("C"), Some(Role::Confounder));
        assert_eq!(r.role("M"), Some(Role::Mediator));
        assert_eq!(r.role("I"), Some(Role::Instrument));
        assert_eq!(r.role("R"), Some(Role::Precision));
        assert_eq!(r.role("Z"), Some(Role::Other));
        let r = classify_variables(&mediated_graph(), "T", "Y").unwrap();
        assert_eq!(r.role("C"), Some(Role::Confounder));
        assert_eq!(r.role("M"), Some(Role::Mediator));
    }

    #[test]
    fn collider_risk_nodes() {
        let g = CausalGraph::parse("T -> Y\nT -> K\nY -> K\nA -> T\nA -> B\nD -> B\nD -> Y").unwrap();
        let r = classify_variables(&g, "T", "Y").unwrap();
        assert_eq!(r.role("K"), Some(Role::ColliderRisk));
        assert_eq!(r.role("B"), Some(Role::ColliderRisk));
    }

    #[test]
    fn subgraph_identifiable_keeps_everything() {
        let g = mediated_graph().with_bidirected("M", "C", 0.3).unwrap();
        let r = most_plausible_backdoor_subgraph(&g, "T", "Y").unwrap();
        assert!(r.removed.is_empty());
        assert_eq!(r.ratio, 1.0);
    }

    #[test]
    fn subgraph_single_blocking_edge() {
        let g = CausalGraph::parse("T -> Y\nT <-> Y 0.6").unwrap();
        let r = most_plausible_backdoor_subgraph(&g, "T", "Y").unwrap();
        assert_eq!(r.removed, vec![("T".to_string(), "Y".to_string())]);
        assert!((r.ratio - 0.4 / 0.6).abs() < 1e-12);
        assert!(r.subgraph.bidirected_edges().is_empty());
    }

    #[test]
    fn subgraph_prefers_cheaper_edge() {
        // T <-> A -> Y needs A adjusted, T <-> A <-> Y needs it not.
        let g = CausalGraph::parse("T -> Y\nA -> Y\nT <-> A 0.9\nA <-> Y 0.6").unwrap();
        assert_eq!(find_backdoor_set(&g, "T", "Y").unwrap(), None);
        let r = most_plausible_backdoor_subgraph(&g, "T", "Y").unwrap();
        assert_eq!(r.removed, vec![("A".to_string(), "Y".to_string())]);
        assert_eq!(r.adjustment_set, vec!["A".to_string()]);
        assert!((r.ratio - 0.4 / 0.6).abs() < 1e-12);
    }

    #[test]
    fn minimal_sets_enumeration() {
        let g = CausalGraph::parse("A -> T\nA -> B\nB -> Y\nT -> Y").unwrap();
        let sets = minimal_backdoor_sets(&g, "T", "Y", 16).unwrap().unwrap();
        assert_eq!(sets, vec![vec!["A".to_string()], vec!["B".to_string()]]);
    }

    #[test]
    fn estimand_text() {
        let g = mediated_graph();
        let spec = EstimandSpec {
            treatment: "T".into(),
            outcome: "Y".into(),
            contrasts: vec![(1.0, 0.0)],
            confounders: vec!["C".into()],
            precision: vec![],
            provenance: Provenance::FromGraph,
        };
        let text = render_estimand(&g, &spec).unwrap();
        assert!(text.contains("E_C[E[Y|T=1,C] − E[Y|T=0,C]]"), "{text}");
        assert!(text.contains("h_{0, 1-0}: Ψ_{1-0} = 0"));
        let g2 = CausalGraph::parse("T -> Y").unwrap();
        let empty = EstimandSpec { confounders: vec![], ..spec.clone() };
        assert!(render_estimand(&g2, &empty).unwrap().contains("E[Y|T=1] − E[Y|T=0]"));
        let err = render_estimand(&g, &empty).unwrap_err().to_string();
        assert!(err.contains("T <- C"), "{err}");
    }
}
