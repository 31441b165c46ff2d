//! Shapley-driven feature selection and its comparison against the Markov boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{CharacteristicFn, PlayerMap};
use crate::graph::{markov_boundary, Dag};
use crate::mask::SubsetMask;
use crate::scalar::Scalar;
use crate::shapley::exact_shapley;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    TopK,
    RecursiveElimination,
    MarkovBoundaryOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceAction {
    Kept,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep<T> {
    pub step: usize,
    pub player: String,
    pub action: TraceAction,
    /// Shapley values of the players in play at this step.
    pub values: Vec<(String, T)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult<T> {
    pub strategy: Strategy,
    /// Mask over the game's players.
    pub selected: SubsetMask,
    pub selected_names: Vec<String>,
    /// `v(selected)`.
    pub performance: T,
    pub trace: Vec<TraceStep<T>>,
}

fn names_of<T: Scalar>(f: &CharacteristicFn<T>, s: SubsetMask) -> Vec<String> {
    s.iter().map(|p| f.players()[p].clone()).collect()
}

fn check_size(n: usize, k: usize, what: &str) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::input(format!(
            "{what} must be between 1 and {n}, got {k}"
        )));
    }
    Ok(())
}

/// The `k` players with the largest exact Shapley values; ties go to the lower index.
pub fn select_top_k<T: Scalar>(f: &CharacteristicFn<T>, k: usize) -> Result<SelectionResult<T>> {
    check_size(f.n(), k, "k")?;
    let report = exact_shapley(f)?;
    let ranking = report.ranking();
    let selected: SubsetMask = ranking[..k].iter().copied().collect();
    let snapshot: Vec<(String, T)> = report
        .players
        .iter()
        .cloned()
        .zip(report.values.iter().cloned())
        .collect();
    let trace = ranking[..k]
        .iter()
        .enumerate()
        .map(|(step, &p)| TraceStep {
            step,
            player: f.players()[p].clone(),
            action: TraceAction::Kept,
            values: snapshot.clone(),
        })
        .collect();
    Ok(SelectionResult {
        strategy: Strategy::TopK,
        selected,
        selected_names: names_of(f, selected),
        performance: f.value(selected)?,
        trace,
    })
}

/// Recursive elimination: recompute exact Shapley values on the game
/// restricted to the survivors and drop the lowest-valued player (lowest
/// index on ties) until `stop_k` remain.
pub fn select_rfe<T: Scalar>(f: &CharacteristicFn<T>, stop_k: usize) -> Result<SelectionResult<T>> {
    check_size(f.n(), stop_k, "stop_k")?;
    let mut survivors = f.player_set();
    let mut trace = Vec::new();
    while survivors.len() > stop_k {
        let sub = f.restrict(survivors)?;
        let report = exact_shapley(&sub)?;
        let members: Vec<usize> = survivors.iter().collect();
        let mut lowest = 0;
        for k in 1..members.len() {
            if report.values[k] < report.values[lowest] {
                lowest = k;
            }
        }
        let removed = members[lowest];
        trace.push(TraceStep {
            step: trace.len(),
            player: f.players()[removed].clone(),
            action: TraceAction::Removed,
            values: report
                .players
                .iter()
                .cloned()
                .zip(report.values.iter().cloned())
                .collect(),
        });
        survivors.remove(removed);
    }
    Ok(SelectionResult {
        strategy: Strategy::RecursiveElimination,
        selected: survivors,
        selected_names: names_of(f, survivors),
        performance: f.value(survivors)?,
        trace,
    })
}

fn boundary_players<T: Scalar>(g: &Dag, f: &CharacteristicFn<T>) -> Result<SubsetMask> {
    let map = PlayerMap::predictors(g);
    if map.len() != f.n() || (0..f.n()).any(|p| g.name(map.variable(p)) != f.players()[p]) {
        return Err(Error::input(
            "game players must be the graph's predictors in index order",
        ));
    }
    Ok(map.to_players(markov_boundary(g)))
}

/// Selects exactly the target's Markov boundary in `g`.
pub fn select_markov_boundary<T: Scalar>(
    g: &Dag,
    f: &CharacteristicFn<T>,
) -> Result<SelectionResult<T>> {
    let selected = boundary_players(g, f)?;
    Ok(SelectionResult {
        strategy: Strategy::MarkovBoundaryOracle,
        selected,
        selected_names: names_of(f, selected),
        performance: f.value(selected)?,
        trace: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyComparison<T> {
    pub strategy: Strategy,
    pub selected: Vec<String>,
    pub performance: T,
    /// Oracle performance minus this strategy's performance.
    pub gap: T,
    /// Selected set contains the Markov boundary.
    pub optimal: bool,
    /// Selected set equals the Markov boundary.
    pub minimal_optimal: bool,
    pub missed: Vec<String>,
    pub redundant: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison<T> {
    pub markov_boundary: Vec<String>,
    pub oracle_performance: T,
    pub strategies: Vec<StrategyComparison<T>>,
}

impl<T: Scalar> Comparison<T> {
    pub fn get(&self, strategy: Strategy) -> Option<&StrategyComparison<T>> {
        self.strategies.iter().find(|s| s.strategy == strategy)
    }
}

/// Gap, optimality and minimality of each result relative to the Markov-boundary oracle.
pub fn compare_strategies<T: Scalar>(
    results: &[SelectionResult<T>],
    f: &CharacteristicFn<T>,
    g: &Dag,
) -> Result<Comparison<T>> {
    let mb = boundary_players(g, f)?;
    let oracle = f.value(mb)?;
    let strategies = results
        .iter()
        .map(|r| {
            if !r.selected.is_subset_of(f.player_set()) {
                return Err(Error::input("selection references unknown players"));
            }
            Ok(StrategyComparison {
                strategy: r.strategy,
                selected: r.selected_names.clone(),
                performance: r.performance.clone(),
                gap: oracle.clone() - r.performance.clone(),
                optimal: mb.is_subset_of(r.selected),
                minimal_optimal: mb == r.selected,
                missed: names_of(f, mb.difference(r.selected)),
                redundant: names_of(f, r.selected.difference(mb)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        markov_boundary: names_of(f, mb),
        oracle_performance: oracle,
        strategies,
    })
}
