//! Randomized harness measuring how often Shapley rankings disagree with the
//! Markov boundary of the target.
//!
//! The three events are operational readings of "disagreement":
//!
//! * **E1**: some variable outside the boundary outranks some boundary member.
//! * **E2**: the boundary's summed Shapley value is below that of a single outside variable.
//! * **E3**: the top-|MB| variables by Shapley value (ties to the lower index) are not the boundary.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::axioms::verify_axioms;
use crate::discrete::{Cpt, DiscreteBayesNet, DiscreteMetric};
use crate::error::{Error, Result};
use crate::game::{discrete_game, r_squared_game, CharacteristicFn, PlayerMap, ENUMERATION_CAP};
use crate::gaussian::LinearGaussianSem;
use crate::graph::{markov_boundary, Dag};
use crate::mask::SubsetMask;
use crate::reference;
use crate::shapley::exact_shapley;

/// Coefficients are redrawn while `|w|` is below this radius.
pub const COEFFICIENT_EXCLUSION: f64 = 0.05;

const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameterization {
    /// Binary variables; each CPT row drawn uniformly with every entry at least `min_cpt_prob`.
    DiscreteDirichlet,
    /// Unit noise variances; coefficients uniform on `coefficient_range` away from zero.
    LinearGaussian,
}

/// Fixed networks that may be prepended to a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceNetwork {
    SiblingProxy,
    CommonCause,
}

fn default_n_vars() -> usize {
    6
}
fn default_edge_probability() -> f64 {
    0.5
}
fn default_min_cpt_prob() -> f64 {
    0.05
}
fn default_coefficient_range() -> (f64, f64) {
    (-1.0, 1.0)
}
fn default_n_networks() -> usize {
    200
}
fn default_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_n_vars")]
    pub n_vars: usize,
    #[serde(default = "default_edge_probability")]
    pub edge_probability: f64,
    pub parameterization: Parameterization,
    #[serde(default = "default_min_cpt_prob")]
    pub min_cpt_prob: f64,
    #[serde(default = "default_coefficient_range")]
    pub coefficient_range: (f64, f64),
    #[serde(default = "default_n_networks")]
    pub n_networks: usize,
    #[serde(default)]
    pub seed: u64,
    /// Game played on discrete networks.
    #[serde(default)]
    pub discrete_metric: DiscreteMetric,
    #[serde(default)]
    pub replay: Vec<ReferenceNetwork>,
    /// Tolerance for event comparisons and axiom re-verification.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl SimConfig {
    pub fn new(parameterization: Parameterization, seed: u64) -> Self {
        SimConfig {
            n_vars: default_n_vars(),
            edge_probability: default_edge_probability(),
            parameterization,
            min_cpt_prob: default_min_cpt_prob(),
            coefficient_range: default_coefficient_range(),
            n_networks: default_n_networks(),
            seed,
            discrete_metric: DiscreteMetric::default(),
            replay: Vec::new(),
            tol: default_tol(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_vars < 2 {
            return Err(Error::input("n_vars must be at least 2"));
        }
        if self.n_vars > ENUMERATION_CAP {
            return Err(Error::capacity(format!(
                "n_vars = {} exceeds the enumeration cap of {ENUMERATION_CAP}",
                self.n_vars
            )));
        }
        if !(0.0..=1.0).contains(&self.edge_probability) {
            return Err(Error::input("edge_probability must lie in [0, 1]"));
        }
        if !(self.min_cpt_prob > 0.0 && self.min_cpt_prob < 0.5) {
            return Err(Error::input("min_cpt_prob must lie in (0, 0.5)"));
        }
        let (lo, hi) = self.coefficient_range;
        if lo.is_nan()
            || hi.is_nan()
            || lo >= hi
            || (lo > -COEFFICIENT_EXCLUSION && hi < COEFFICIENT_EXCLUSION)
        {
            return Err(Error::input(format!(
                "coefficient_range must be increasing and reach beyond ±{COEFFICIENT_EXCLUSION}"
            )));
        }
        if self.n_networks == 0 && self.replay.is_empty() {
            return Err(Error::input("n_networks must be at least 1"));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::input("tol must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RandomNetwork {
    Discrete(DiscreteBayesNet<f64>),
    Gaussian(LinearGaussianSem<f64>),
}

impl RandomNetwork {
    pub fn graph(&self) -> &Dag {
        match self {
            RandomNetwork::Discrete(net) => net.graph(),
            RandomNetwork::Gaussian(sem) => sem.graph(),
        }
    }

    /// The characteristic function matching the parameterization.
    pub fn game(&self, metric: DiscreteMetric) -> Result<CharacteristicFn<f64>> {
        match self {
            RandomNetwork::Discrete(net) => discrete_game(net, metric),
            RandomNetwork::Gaussian(sem) => r_squared_game(sem),
        }
    }
}

fn network_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Random DAG over a uniformly shuffled order, each forward edge kept with
/// `edge_probability`; the target is drawn among variables with a parent when
/// any exist. Deterministic in `(config.seed, index)`.
pub fn generate_random_network(config: &SimConfig, index: usize) -> Result<RandomNetwork> {
    config.validate()?;
    let n = config.n_vars;
    let mut rng = network_rng(config.seed, index);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(config.edge_probability) {
                edges.push((order[a], order[b]));
            }
        }
    }
    let with_parents: Vec<usize> = (0..n)
        .filter(|&v| edges.iter().any(|&(_, c)| c == v))
        .collect();
    let target = if with_parents.is_empty() {
        rng.random_range(0..n)
    } else {
        with_parents[rng.random_range(0..with_parents.len())]
    };
    let graph = Dag::new((0..n).map(|i| format!("V{i}")), &edges, target)?;
    match config.parameterization {
        Parameterization::DiscreteDirichlet => {
            let span = 1.0 - 2.0 * config.min_cpt_prob;
            let cpts = (0..n)
                .map(|v| {
                    let parents: Vec<usize> = graph.parents(v).iter().collect();
                    let rows = (0..1usize << parents.len())
                        .map(|_| {
                            let p1 = config.min_cpt_prob + span * rng.random::<f64>();
                            vec![1.0 - p1, p1]
                        })
                        .collect();
                    Cpt::new(v, parents, rows)
                })
                .collect();
            let states = vec![vec!["0".to_string(), "1".to_string()]; n];
            Ok(RandomNetwork::Discrete(DiscreteBayesNet::new(
                graph, states, cpts,
            )?))
        }
        Parameterization::LinearGaussian => {
            let (lo, hi) = config.coefficient_range;
            let coefficients: Vec<((usize, usize), f64)> = graph
                .edges()
                .into_iter()
                .map(|e| {
                    let w = loop {
                        let w = rng.random_range(lo..hi);
                        if w.abs() >= COEFFICIENT_EXCLUSION {
                            break w;
                        }
                    };
                    (e, w)
                })
                .collect();
            Ok(RandomNetwork::Gaussian(LinearGaussianSem::new(
                graph,
                coefficients,
                vec![1.0; n],
            )?))
        }
    }
}

/// Per-network outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkRecord {
    pub index: usize,
    pub source: String,
    pub target: String,
    pub edges: Vec<(String, String)>,
    pub markov_boundary: Vec<String>,
    pub values: Vec<(String, f64)>,
    pub mb_size: usize,
    pub max_non_mb: Option<f64>,
    pub min_mb: Option<f64>,
    pub sum_mb: f64,
    pub e1: bool,
    pub e2: bool,
    pub e3: bool,
    pub efficiency_residual: f64,
    pub axioms_passed: bool,
}

/// Count and 95% Wilson score interval of one event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub count: usize,
    pub total: usize,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Frequency {
    pub fn wilson(count: usize, total: usize) -> Self {
        if total == 0 {
            return Frequency {
                count,
                total,
                rate: 0.0,
                ci_low: 0.0,
                ci_high: 1.0,
            };
        }
        let n = total as f64;
        let p = count as f64 / n;
        let z2 = Z_95 * Z_95;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Frequency {
            count,
            total,
            rate: p,
            ci_low: if count == 0 {
                0.0
            } else {
                (centre - half).max(0.0)
            },
            ci_high: if count == total {
                1.0
            } else {
                (centre + half).min(1.0)
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceReport {
    pub config: SimConfig,
    pub records: Vec<NetworkRecord>,
    pub e1: Frequency,
    pub e2: Frequency,
    pub e3: Frequency,
}

/// Exact Shapley values, boundary and event flags for one network.
pub fn evaluate_network(
    network: &RandomNetwork,
    metric: DiscreteMetric,
    tol: f64,
    index: usize,
    source: &str,
) -> Result<NetworkRecord> {
    let g = network.graph();
    let f = network.game(metric)?;
    let report = exact_shapley(&f)?;
    let axioms = verify_axioms(&f, &report, tol, None)?;
    let map = PlayerMap::predictors(g);
    let mb_vars = markov_boundary(g);
    let mb = map.to_players(mb_vars);
    let non_mb = f.player_set().difference(mb);
    let fold = |s: SubsetMask, init: f64, pick: fn(f64, f64) -> f64| {
        s.iter().map(|p| report.values[p]).fold(init, pick)
    };
    let max_non_mb = (!non_mb.is_empty()).then(|| fold(non_mb, f64::NEG_INFINITY, f64::max));
    let min_mb = (!mb.is_empty()).then(|| fold(mb, f64::INFINITY, f64::min));
    let sum_mb: f64 = mb.iter().map(|p| report.values[p]).sum();
    let (e1, e2) = match (max_non_mb, min_mb) {
        (Some(out), Some(inside)) => (out > inside + tol, out > sum_mb + tol),
        _ => (false, false),
    };
    let top: SubsetMask = report.ranking()[..mb.len()].iter().copied().collect();
    let e3 = top != mb;
    Ok(NetworkRecord {
        index,
        source: source.to_owned(),
        target: g.name(g.target()).to_owned(),
        edges: g
            .edges()
            .into_iter()
            .map(|(p, c)| (g.name(p).to_owned(), g.name(c).to_owned()))
            .collect(),
        markov_boundary: mb_vars.iter().map(|v| g.name(v).to_owned()).collect(),
        values: report
            .players
            .iter()
            .cloned()
            .zip(report.values.iter().copied())
            .collect(),
        mb_size: mb.len(),
        max_non_mb,
        min_mb,
        sum_mb,
        e1,
        e2,
        e3,
        efficiency_residual: report.efficiency_residual(),
        axioms_passed: axioms.all_passed(),
    })
}

fn replay_network(r: ReferenceNetwork) -> RandomNetwork {
    match r {
        ReferenceNetwork::SiblingProxy => RandomNetwork::Gaussian(reference::sibling_proxy_sem()),
        ReferenceNetwork::CommonCause => RandomNetwork::Discrete(reference::common_cause_net()),
    }
}

/// Runs every replayed and generated network; networks are processed in
/// parallel and records come back ordered (replays first, then by index).
pub fn run_prevalence(config: &SimConfig) -> Result<PrevalenceReport> {
    config.validate()?;
    let mut records = config
        .replay
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let label = match r {
                ReferenceNetwork::SiblingProxy => "replay:sibling_proxy",
                ReferenceNetwork::CommonCause => "replay:common_cause",
            };
            // The common-cause network is the accuracy-game example.
            let metric = match r {
                ReferenceNetwork::CommonCause => DiscreteMetric::Accuracy,
                ReferenceNetwork::SiblingProxy => config.discrete_metric,
            };
            evaluate_network(&replay_network(r), metric, config.tol, i, label)
        })
        .collect::<Result<Vec<_>>>()?;
    let generated = (0..config.n_networks)
        .into_par_iter()
        .map(|i| {
            let net = generate_random_network(config, i)?;
            evaluate_network(&net, config.discrete_metric, config.tol, i, "random")
        })
        .collect::<Result<Vec<_>>>()?;
    records.extend(generated);
    let total = records.len();
    let count = |pick: fn(&NetworkRecord) -> bool| records.iter().filter(|r| pick(r)).count();
    Ok(PrevalenceReport {
        e1: Frequency::wilson(count(|r| r.e1), total),
        e2: Frequency::wilson(count(|r| r.e2), total),
        e3: Frequency::wilson(count(|r| r.e3), total),
        config: config.clone(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(p: Parameterization, edge_probability: f64, n: usize) -> SimConfig {
        SimConfig {
            edge_probability,
            n_networks: n,
            ..SimConfig::new(p, 11)
        }
    }

    #[test]
    fn edgeless_networks_have_no_events() {
        for p in [
            Parameterization::DiscreteDirichlet,
            Parameterization::LinearGaussian,
        ] {
            let c = config(p, 0.0, 10);
            let net = generate_random_network(&c, 0).unwrap();
            assert!(net.graph().edges().is_empty());
            assert!(markov_boundary(net.graph()).is_empty());
            let report = run_prevalence(&c).unwrap();
            assert_eq!(report.e1.count + report.e2.count + report.e3.count, 0);
            for r in &report.records {
                assert!(r.values.iter().all(|(_, v)| v.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn complete_graphs_follow_the_sampled_order() {
        let c = SimConfig {
            n_vars: 3,
            ..config(Parameterization::LinearGaussian, 1.0, 1)
        };
        let net = generate_random_network(&c, 4).unwrap();
        assert_eq!(net.graph().edges().len(), 3);
    }

    #[test]
    fn generation_is_deterministic() {
        let c = config(Parameterization::DiscreteDirichlet, 0.5, 1);
        assert_eq!(
            generate_random_network(&c, 3).unwrap(),
            generate_random_network(&c, 3).unwrap()
        );
        assert_ne!(
            generate_random_network(&c, 3).unwrap(),
            generate_random_network(&c, 4).unwrap()
        );
    }

    #[test]
    fn parameters_respect_bounds() {
        let c = config(Parameterization::DiscreteDirichlet, 0.6, 1);
        for i in 0..20 {
            if let RandomNetwork::Discrete(net) = generate_random_network(&c, i).unwrap() {
                for v in 0..net.graph().n() {
                    assert!(net
                        .cpt(v)
                        .rows()
                        .iter()
                        .flatten()
                        .all(|&p| p >= c.min_cpt_prob - 1e-15));
                }
            }
        }
        let c = config(Parameterization::LinearGaussian, 0.6, 1);
        for i in 0..20 {
            if let RandomNetwork::Gaussian(sem) = generate_random_network(&c, i).unwrap() {
                assert!(sem
                    .coefficients()
                    .values()
                    .all(|w| w.abs() >= COEFFICIENT_EXCLUSION && w.abs() <= 1.0));
            }
        }
    }

    #[test]
    fn replays_flag_the_reference_events() {
        let c = SimConfig {
            replay: vec![
                ReferenceNetwork::SiblingProxy,
                ReferenceNetwork::CommonCause,
            ],
            ..config(Parameterization::LinearGaussian, 0.5, 1)
        };
        let report = run_prevalence(&c).unwrap();
        let proxy = &report.records[0];
        assert!(proxy.e1 && proxy.e3 && !proxy.e2);
        let cc = &report.records[1];
        assert!(cc.e2 && cc.e1);
        assert!(report.records.iter().all(|r| r.axioms_passed));
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = config(Parameterization::DiscreteDirichlet, 0.5, 1);
        for bad in [
            SimConfig {
                n_vars: 1,
                ..base.clone()
            },
            SimConfig {
                n_vars: 26,
                ..base.clone()
            },
            SimConfig {
                min_cpt_prob: 0.5,
                ..base.clone()
            },
            SimConfig {
                min_cpt_prob: 0.0,
                ..base.clone()
            },
            SimConfig {
                edge_probability: 1.5,
                ..base.clone()
            },
            SimConfig {
                n_networks: 0,
                ..base.clone()
            },
            SimConfig {
                coefficient_range: (-0.01, 0.01),
                ..base.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn wilson_interval_brackets_the_rate() {
        let f = Frequency::wilson(30, 200);
        assert!(f.ci_low < 0.15 && 0.15 < f.ci_high);
        let zero = Frequency::wilson(0, 200);
        assert_eq!(zero.ci_low, 0.0);
        assert!(zero.ci_high > 0.0 && zero.ci_high < 0.03);
    }
}
