//! DAG representation, d-separation, Markov boundaries and relevance classes.
//!
//! Everything here is a pure function of an immutable [`Dag`]. Faithfulness of
//! the underlying distribution is assumed by callers and never checked here;
//! see [`crate::discrete::verify_faithfulness`] and
//! [`crate::gaussian::verify_faithfulness`] for the distribution-level checks.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{SubsetMask, MASK_WIDTH};

/// A named node of a [`Dag`]; indices are dense `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub index: usize,
    pub name: String,
}

/// Kohavi-John relevance of a predictor with respect to the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceClass {
    StronglyRelevant,
    WeaklyRelevant,
    Irrelevant,
}

/// Directed acyclic graph over named variables with a designated target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dag {
    variables: Vec<Variable>,
    parents: Vec<SubsetMask>,
    children: Vec<SubsetMask>,
    target: usize,
    topo: Vec<usize>,
}

impl Dag {
    pub fn new<S: Into<String>>(
        names: impl IntoIterator<Item = S>,
        edges: &[(usize, usize)],
        target: usize,
    ) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let n = names.len();
        if n == 0 {
            return Err(Error::input("a graph needs at least one variable"));
        }
        if n > MASK_WIDTH {
            return Err(Error::capacity(format!(
                "{n} variables exceed the mask width of {MASK_WIDTH}"
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::input(format!("variable {i} has an empty name")));
            }
            if names[..i].contains(name) {
                return Err(Error::input(format!("duplicate variable name `{name}`")));
            }
        }
        if target >= n {
            return Err(Error::input(format!("target index {target} out of range")));
        }
        let mut parents = vec![SubsetMask::EMPTY; n];
        let mut children = vec![SubsetMask::EMPTY; n];
        for &(p, c) in edges {
            if p >= n || c >= n {
                return Err(Error::input(format!(
                    "edge ({p}, {c}) references an unknown variable"
                )));
            }
            if p == c {
                return Err(Error::input(format!("self-loop on `{}`", names[p])));
            }
            if parents[c].contains(p) {
                return Err(Error::input(format!(
                    "duplicate edge `{}` -> `{}`",
                    names[p], names[c]
                )));
            }
            parents[c].insert(p);
            children[p].insert(c);
        }
        let topo = topological_order(&parents, &children)
            .ok_or_else(|| Error::input("edges contain a directed cycle"))?;
        let variables = names
            .into_iter()
            .enumerate()
            .map(|(index, name)| Variable { index, name })
            .collect();
        Ok(Dag {
            variables,
            parents,
            children,
            target,
            topo,
        })
    }

    /// Builds a graph from variable names and named edges.
    pub fn from_names(names: &[&str], edges: &[(&str, &str)], target: &str) -> Result<Self> {
        let lookup = |name: &str| {
            names
                .iter()
                .position(|n| *n == name)
                .ok_or_else(|| Error::input(format!("unknown variable `{name}`")))
        };
        let edges = edges
            .iter()
            .map(|&(p, c)| Ok((lookup(p)?, lookup(c)?)))
            .collect::<Result<Vec<_>>>()?;
        Dag::new(names.iter().copied(), &edges, lookup(target)?)
    }

    pub fn n(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn name(&self, i: usize) -> &str {
        &self.variables[i].name
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::input(format!("unknown variable `{name}`")))
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// All variables except the target.
    pub fn predictors(&self) -> SubsetMask {
        SubsetMask::full(self.n()).without(self.target)
    }

    pub fn parents(&self, i: usize) -> SubsetMask {
        self.parents[i]
    }

    pub fn children(&self, i: usize) -> SubsetMask {
        self.children[i]
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.parents[a].contains(b) || self.children[a].contains(b)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for c in 0..self.n() {
            for p in self.parents[c].iter() {
                out.push((p, c));
            }
        }
        out.sort_unstable();
        out
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// Same structure with a different target.
    pub fn with_target(&self, target: usize) -> Result<Self> {
        if target >= self.n() {
            return Err(Error::input(format!("target index {target} out of range")));
        }
        Ok(Dag {
            target,
            ..self.clone()
        })
    }

    /// `seeds` together with all their ancestors.
    pub fn ancestral_closure(&self, seeds: SubsetMask) -> SubsetMask {
        let mut closed = seeds;
        let mut stack: Vec<usize> = seeds.iter().collect();
        while let Some(v) = stack.pop() {
            for p in self.parents[v].iter() {
                if !closed.contains(p) {
                    closed.insert(p);
                    stack.push(p);
                }
            }
        }
        closed
    }

    /// `seeds` together with all their descendants.
    pub fn descendant_closure(&self, seeds: SubsetMask) -> SubsetMask {
        let mut closed = seeds;
        let mut stack: Vec<usize> = seeds.iter().collect();
        while let Some(v) = stack.pop() {
            for c in self.children[v].iter() {
                if !closed.contains(c) {
                    closed.insert(c);
                    stack.push(c);
                }
            }
        }
        closed
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n() {
            Ok(())
        } else {
            Err(Error::input(format!("unknown variable index {i}")))
        }
    }

    fn check_mask(&self, z: SubsetMask) -> Result<()> {
        if z.is_subset_of(SubsetMask::full(self.n())) {
            Ok(())
        } else {
            Err(Error::input(format!(
                "conditioning set {z:?} references unknown variables"
            )))
        }
    }
}

fn topological_order(parents: &[SubsetMask], children: &[SubsetMask]) -> Option<Vec<usize>> {
    let n = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(|p| p.len()).collect();
    let mut ready: VecDeque<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_front() {
        order.push(v);
        for c in children[v].iter() {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push_back(c);
            }
        }
    }
    (order.len() == n).then_some(order)
}

fn check_separation_query(g: &Dag, x: usize, y: usize, z: SubsetMask) -> Result<()> {
    g.check_index(x)?;
    g.check_index(y)?;
    g.check_mask(z)?;
    if x == y {
        return Err(Error::input("d-separation needs two distinct variables"));
    }
    if z.contains(x) || z.contains(y) {
        return Err(Error::input(
            "queried variables must not be in the conditioning set",
        ));
    }
    Ok(())
}

/// Whether `z` d-separates `x` from `y`.
///
/// Reachability ("Bayes ball"): a trail is followed through `(node, direction)`
/// states. Non-colliders pass only when unobserved; a collider passes only when
/// it or one of its descendants is in `z`, i.e. when it is an ancestor of `z`.
pub fn d_separated(g: &Dag, x: usize, y: usize, z: SubsetMask) -> Result<bool> {
    check_separation_query(g, x, y, z)?;
    Ok(!d_reachable(g, x, z).contains(y))
}

/// Nodes d-connected to `x` given `z` (excluding members of `z`).
pub fn d_reachable(g: &Dag, x: usize, z: SubsetMask) -> SubsetMask {
    let ancestors_of_z = g.ancestral_closure(z);
    // visited[v][0]: arrived from a child (moving up); visited[v][1]: from a parent.
    let mut visited = vec![[false; 2]; g.n()];
    let mut reachable = SubsetMask::EMPTY;
    let mut queue = VecDeque::from([(x, 0usize)]);
    while let Some((v, dir)) = queue.pop_front() {
        if visited[v][dir] {
            continue;
        }
        visited[v][dir] = true;
        let observed = z.contains(v);
        if !observed {
            reachable.insert(v);
        }
        if dir == 0 {
            if !observed {
                queue.extend(g.parents(v).iter().map(|p| (p, 0)));
                queue.extend(g.children(v).iter().map(|c| (c, 1)));
            }
        } else {
            if !observed {
                queue.extend(g.children(v).iter().map(|c| (c, 1)));
            }
            if ancestors_of_z.contains(v) {
                queue.extend(g.parents(v).iter().map(|p| (p, 0)));
            }
        }
    }
    reachable.without(x)
}

/// d-separation via the moralized ancestral graph: `x` and `y` are separated by
/// `z` iff removing `z` disconnects them in the moral graph of `An({x, y} ∪ z)`.
pub fn d_separated_moral(g: &Dag, x: usize, y: usize, z: SubsetMask) -> Result<bool> {
    check_separation_query(g, x, y, z)?;
    let keep = g.ancestral_closure(z.with(x).with(y));
    let n = g.n();
    let mut adj = vec![SubsetMask::EMPTY; n];
    for v in keep.iter() {
        let pa = g.parents(v).intersection(keep);
        for p in pa.iter() {
            adj[v].insert(p);
            adj[p].insert(v);
            for q in pa.iter().filter(|&q| q != p) {
                adj[p].insert(q);
            }
        }
    }
    let open = keep.difference(z);
    let mut seen = SubsetMask::singleton(x);
    let mut stack = vec![x];
    while let Some(v) = stack.pop() {
        if v == y {
            return Ok(false);
        }
        for w in adj[v].intersection(open).iter() {
            if !seen.contains(w) {
                seen.insert(w);
                stack.push(w);
            }
        }
    }
    Ok(true)
}

/// Parents and children of `x`.
pub fn parents_children(g: &Dag, x: usize) -> SubsetMask {
    g.parents(x).union(g.children(x))
}

/// Parents, children and spouses (other parents of children) of the target.
pub fn markov_boundary(g: &Dag) -> SubsetMask {
    markov_boundary_of(g, g.target())
}

pub fn markov_boundary_of(g: &Dag, x: usize) -> SubsetMask {
    let spouses = g
        .children(x)
        .iter()
        .fold(SubsetMask::EMPTY, |acc, c| acc.union(g.parents(c)));
    parents_children(g, x).union(spouses).without(x)
}

/// Whether `x` and `y` share a connected component of the skeleton.
pub fn undirected_path_exists(g: &Dag, x: usize, y: usize) -> Result<bool> {
    g.check_index(x)?;
    g.check_index(y)?;
    if x == y {
        return Err(Error::input("path query needs two distinct variables"));
    }
    Ok(connected_component(g, x).contains(y))
}

pub fn connected_component(g: &Dag, x: usize) -> SubsetMask {
    let mut seen = SubsetMask::singleton(x);
    let mut stack = vec![x];
    while let Some(v) = stack.pop() {
        for w in parents_children(g, v).iter() {
            if !seen.contains(w) {
                seen.insert(w);
                stack.push(w);
            }
        }
    }
    seen
}

/// Relevance class of every non-target variable, assuming faithfulness.
pub fn classify_relevance(g: &Dag) -> BTreeMap<usize, RelevanceClass> {
    let mb = markov_boundary(g);
    let component = connected_component(g, g.target());
    g.predictors()
        .iter()
        .map(|v| {
            let class = if mb.contains(v) {
                RelevanceClass::StronglyRelevant
            } else if component.contains(v) {
                RelevanceClass::WeaklyRelevant
            } else {
                RelevanceClass::Irrelevant
            };
            (v, class)
        })
        .collect()
}

/// Plain-language reading of an edge between a predictor and the target under a causal interpretation.
pub fn causal_role(g: &Dag, v: usize) -> &'static str {
    let t = g.target();
    if g.parents(t).contains(v) {
        "direct cause"
    } else if g.children(t).contains(v) {
        "direct effect"
    } else if markov_boundary(g).contains(v) {
        "direct cause of a direct effect"
    } else if g.ancestral_closure(SubsetMask::singleton(t)).contains(v) {
        "indirect cause"
    } else if g.descendant_closure(SubsetMask::singleton(t)).contains(v) {
        "indirect effect"
    } else if connected_component(g, t).contains(v) {
        "associated, not a cause or effect"
    } else {
        "unconnected"
    }
}
