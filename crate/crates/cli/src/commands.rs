//! Command implementations; each returns a payload ready for an envelope.

use std::path::Path;

use shapnet::axioms::{check_dominance, check_summand_structure, verify_axioms};
use shapnet::discrete::{self, DiscreteMetric};
use shapnet::faithfulness::{FaithfulnessScope, Violation, FAITHFULNESS_MAX_VARS};
use shapnet::game::{discrete_game, r_squared_game, PlayerMap};
use shapnet::gaussian;
use shapnet::graph::{
    causal_role, classify_relevance, d_separated, markov_boundary, parents_children,
};
use shapnet::prevalence::{run_prevalence, PrevalenceReport, SimConfig};
use shapnet::selection::{compare_strategies, select_markov_boundary, select_rfe, select_top_k};
use shapnet::shapley::{exact_shapley, monte_carlo_shapley};
use shapnet::{Dag, Game, SubsetMask};

use crate::error::CliError;
use crate::model::Model;
use crate::report::{
    GameKind, Method, PlayerValue, RelevanceEntry, SelectionPayload, ShapleyPayload,
    StructurePayload, TheoremsPayload,
};

/// The game a model plays: R² for Gaussian models, `metric` for discrete ones.
pub fn model_game(
    model: &Model<f64>,
    metric: Option<DiscreteMetric>,
) -> Result<(Game, GameKind), CliError> {
    match model {
        Model::Gaussian(sem) => {
            if metric.is_some() {
                return Err(CliError::Usage(
                    "--metric applies to discrete models only".into(),
                ));
            }
            Ok((r_squared_game(sem)?, GameKind::RSquared))
        }
        Model::Discrete(net) => {
            let metric = metric.unwrap_or_default();
            let kind = match metric {
                DiscreteMetric::Accuracy => GameKind::Accuracy,
                DiscreteMetric::Information => GameKind::Information,
            };
            Ok((discrete_game(net, metric)?, kind))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapleyMethod {
    Exact,
    MonteCarlo {
        samples: usize,
        seed: u64,
        stratify_mb: bool,
    },
}

fn names(g: &Dag, s: SubsetMask) -> Vec<String> {
    s.iter().map(|v| g.name(v).to_owned()).collect()
}

fn ranks(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut rank = vec![0; values.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r + 1;
    }
    rank
}

pub fn shapley(
    model: &Model<f64>,
    metric: Option<DiscreteMetric>,
    method: ShapleyMethod,
) -> Result<ShapleyPayload, CliError> {
    let g = model.graph();
    let (f, game) = model_game(model, metric)?;
    let map = PlayerMap::predictors(g);
    let classes = classify_relevance(g);
    let n = f.n();
    let (values, errors, baseline, grand_value, summand_count, samples, stratified_on, strata) =
        match method {
            ShapleyMethod::Exact => {
                let r = exact_shapley(&f)?;
                let count = (n as u64) << n.saturating_sub(1);
                (
                    r.values,
                    vec![None; n],
                    r.baseline,
                    r.grand_value,
                    count,
                    None,
                    Vec::new(),
                    None,
                )
            }
            ShapleyMethod::MonteCarlo {
                samples,
                seed,
                stratify_mb,
            } => {
                let strata = stratify_mb.then(|| map.to_players(markov_boundary(g)));
                let r = monte_carlo_shapley(&f, samples, seed, strata)?;
                let count = samples as u64 * n as u64;
                (
                    r.values,
                    r.standard_errors,
                    r.baseline,
                    r.grand_value,
                    count,
                    Some(samples),
                    r.stratified_on,
                    Some(r.strata),
                )
            }
        };
    let rank = ranks(&values);
    let players = (0..n)
        .map(|p| {
            let v = map.variable(p);
            PlayerValue {
                name: g.name(v).to_owned(),
                value: values[p],
                standard_error: errors[p],
                rank: rank[p],
                relevance: classes[&v],
                role: causal_role(g, v).to_owned(),
            }
        })
        .collect();
    let efficiency_residual = values.iter().sum::<f64>() - (grand_value - baseline);
    Ok(ShapleyPayload {
        model_kind: model.kind(),
        target: g.name(g.target()).to_owned(),
        game,
        method: match method {
            ShapleyMethod::Exact => Method::Exact,
            ShapleyMethod::MonteCarlo { .. } => Method::MonteCarlo,
        },
        players,
        baseline,
        grand_value,
        efficiency_residual,
        summand_count,
        samples,
        stratified_on,
        strata,
    })
}

pub fn markov_boundary_query(model: &Model<f64>) -> StructurePayload {
    let g = model.graph();
    let t = g.target();
    let mb = markov_boundary(g);
    let parents = g.parents(t);
    let children = g.children(t);
    StructurePayload::MarkovBoundary {
        target: g.name(t).to_owned(),
        markov_boundary: names(g, mb),
        parents: names(g, parents),
        children: names(g, children),
        spouses: names(g, mb.difference(parents_children(g, t))),
    }
}

pub fn dsep_query(
    model: &Model<f64>,
    x: &str,
    y: &str,
    given: &[String],
) -> Result<StructurePayload, CliError> {
    let g = model.graph();
    let lookup = |name: &str| {
        g.index_of(name)
            .map_err(|_| CliError::Input(format!("unknown variable `{name}`")))
    };
    let xi = lookup(x)?;
    let yi = lookup(y)?;
    let mut z = SubsetMask::EMPTY;
    for name in given {
        z.insert(lookup(name)?);
    }
    Ok(StructurePayload::Dsep {
        x: x.to_owned(),
        y: y.to_owned(),
        given: names(g, z),
        d_separated: d_separated(g, xi, yi, z)?,
    })
}

pub fn relevance_query(model: &Model<f64>) -> StructurePayload {
    let g = model.graph();
    StructurePayload::Relevance {
        target: g.name(g.target()).to_owned(),
        variables: classify_relevance(g)
            .into_iter()
            .map(|(v, class)| RelevanceEntry {
                name: g.name(v).to_owned(),
                class,
                role: causal_role(g, v).to_owned(),
            })
            .collect(),
    }
}

fn violations(
    model: &Model<f64>,
    tol: f64,
    scope: FaithfulnessScope,
) -> Result<Vec<Violation>, CliError> {
    Ok(match model {
        Model::Discrete(net) => discrete::verify_faithfulness(net, tol, scope)?,
        Model::Gaussian(sem) => gaussian::verify_faithfulness(sem, tol, scope)?,
    })
}

pub fn faithfulness_query(
    model: &Model<f64>,
    tol: f64,
    scope: FaithfulnessScope,
) -> Result<StructurePayload, CliError> {
    let violations = violations(model, tol, scope)?;
    Ok(StructurePayload::Faithfulness {
        scope,
        tol,
        faithful: violations.is_empty(),
        violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyChoice {
    TopK(usize),
    Rfe(usize),
    MarkovBoundary,
}

pub fn select(
    model: &Model<f64>,
    metric: Option<DiscreteMetric>,
    strategy: StrategyChoice,
) -> Result<SelectionPayload, CliError> {
    let g = model.graph();
    let (f, game) = model_game(model, metric)?;
    let (result, k) = match strategy {
        StrategyChoice::TopK(k) => (select_top_k(&f, k)?, Some(k)),
        StrategyChoice::Rfe(k) => (select_rfe(&f, k)?, Some(k)),
        StrategyChoice::MarkovBoundary => (select_markov_boundary(g, &f)?, None),
    };
    let comparison = compare_strategies(std::slice::from_ref(&result), &f, g)?;
    Ok(SelectionPayload {
        game,
        k,
        result,
        comparison,
    })
}

pub fn verify_theorems(
    model: &Model<f64>,
    metric: Option<DiscreteMetric>,
    tol: f64,
) -> Result<TheoremsPayload, CliError> {
    let g = model.graph();
    let (f, game) = model_game(model, metric)?;
    let report = exact_shapley(&f)?;
    let summand_structure = check_summand_structure(&report, g, tol)?;
    let dominance = check_dominance(&report, g, tol)?;
    let axioms = verify_axioms(&f, &report, tol, None)?;
    let faithful = if g.n() <= FAITHFULNESS_MAX_VARS {
        Some(violations(model, tol, FaithfulnessScope::Target)?.is_empty())
    } else {
        None
    };
    let all_passed = summand_structure.iter().all(|s| s.matches)
        && dominance.iter().all(|d| d.passed)
        && axioms.all_passed();
    Ok(TheoremsPayload {
        game,
        tol,
        faithful,
        summand_structure,
        dominance,
        axioms,
        all_passed,
    })
}

pub fn read_sim_config(path: &Path) -> Result<SimConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let config: SimConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Schema {
            field: if path == "." { "<root>".into() } else { path },
            message: e.into_inner().to_string(),
        }
    })?;
    config.validate()?;
    Ok(config)
}

pub fn simulate(config: &SimConfig) -> Result<PrevalenceReport, CliError> {
    Ok(run_prevalence(config)?)
}
