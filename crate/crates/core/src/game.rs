//! Coalitional games over predictor subsets, with a write-once memo cache.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use rayon::prelude::*;

use crate::discrete::{bayes_accuracy_m, mutual_information_m, DiscreteBayesNet, DiscreteMetric};
use crate::error::{Error, Result};
use crate::gaussian::{implied_covariance, r_squared_m, LinearGaussianSem};
use crate::graph::Dag;
use crate::mask::{SubsetMask, MASK_WIDTH};
use crate::scalar::Scalar;

/// Hard cap on players for operations that enumerate all coalitions.
pub const ENUMERATION_CAP: usize = 25;

/// Games up to this size get a dense cache indexed by mask.
const DENSE_CACHE_MAX: usize = 20;

type Evaluator<T> = dyn Fn(SubsetMask) -> Result<T> + Send + Sync;

enum Cache<T> {
    Dense(Vec<OnceLock<T>>),
    Sparse(RwLock<HashMap<u64, T>>),
}

struct Inner<T> {
    players: Vec<String>,
    evaluate: Box<Evaluator<T>>,
    cache: Cache<T>,
}

/// A characteristic function `v: 2^N -> R` over named players.
///
/// Evaluation must be deterministic. Results are memoized; concurrent callers
/// may race to fill an entry but always store the same value, and a stored
/// entry is never replaced. Cloning is cheap and shares the cache.
pub struct CharacteristicFn<T> {
    inner: Arc<Inner<T>>,
}

impl<T> Clone for CharacteristicFn<T> {
    fn clone(&self) -> Self {
        CharacteristicFn {
            inner: Arc::clone(&self.inner),
        }
    }
}

impl<T> fmt::Debug for CharacteristicFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CharacteristicFn")
            .field("players", &self.inner.players)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> CharacteristicFn<T> {
    pub fn new<F>(players: Vec<String>, evaluate: F) -> Result<Self>
    where
        F: Fn(SubsetMask) -> Result<T> + Send + Sync + 'static,
    {
        let n = players.len();
        if n > MASK_WIDTH {
            return Err(Error::capacity(format!(
                "{n} players exceed the mask width of {MASK_WIDTH}"
            )));
        }
        for (i, p) in players.iter().enumerate() {
            if players[..i].contains(p) {
                return Err(Error::input(format!("duplicate player `{p}`")));
            }
        }
        let cache = if n <= DENSE_CACHE_MAX {
            Cache::Dense((0..1usize << n).map(|_| OnceLock::new()).collect())
        } else {
            Cache::Sparse(RwLock::new(HashMap::new()))
        };
        Ok(CharacteristicFn {
            inner: Arc::new(Inner {
                players,
                evaluate: Box::new(evaluate),
                cache,
            }),
        })
    }

    /// Game given by an explicit value table indexed by coalition mask.
    pub fn from_table(players: Vec<String>, values: Vec<T>) -> Result<Self> {
        let n = players.len();
        if n > ENUMERATION_CAP {
            return Err(Error::capacity(format!(
                "{n} players exceed the cap of {ENUMERATION_CAP}"
            )));
        }
        if values.len() != 1usize << n {
            return Err(Error::input(format!(
                "a {n}-player table needs {} values, got {}",
                1usize << n,
                values.len()
            )));
        }
        let values = Arc::new(values);
        Self::new(players, move |s| Ok(values[s.0 as usize].clone()))
    }

    /// Players named `P0, P1, …`.
    pub fn anonymous<F>(n: usize, evaluate: F) -> Result<Self>
    where
        F: Fn(SubsetMask) -> Result<T> + Send + Sync + 'static,
    {
        Self::new((0..n).map(|i| format!("P{i}")).collect(), evaluate)
    }

    pub fn n(&self) -> usize {
        self.inner.players.len()
    }

    pub fn players(&self) -> &[String] {
        &self.inner.players
    }

    pub fn player_index(&self, name: &str) -> Result<usize> {
        self.inner
            .players
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| Error::input(format!("unknown player `{name}`")))
    }

    pub fn player_set(&self) -> SubsetMask {
        SubsetMask::full(self.n())
    }

    /// `v(s)`, memoized.
    pub fn value(&self, s: SubsetMask) -> Result<T> {
        if !s.is_subset_of(self.player_set()) {
            return Err(Error::input(format!(
                "coalition {s:?} references unknown players"
            )));
        }
        match &self.inner.cache {
            Cache::Dense(cells) => {
                let cell = &cells[s.0 as usize];
                if let Some(v) = cell.get() {
                    return Ok(v.clone());
                }
                let v = (self.inner.evaluate)(s)?;
                Ok(cell.get_or_init(|| v).clone())
            }
            Cache::Sparse(map) => {
                if let Some(v) = map.read().expect("cache lock").get(&s.0) {
                    return Ok(v.clone());
                }
                let v = (self.inner.evaluate)(s)?;
                let mut guard = map.write().expect("cache lock");
                Ok(guard.entry(s.0).or_insert(v).clone())
            }
        }
    }

    /// `v(∅)`.
    pub fn baseline(&self) -> Result<T> {
        self.value(SubsetMask::EMPTY)
    }

    /// `v(N)`.
    pub fn grand_value(&self) -> Result<T> {
        self.value(self.player_set())
    }

    /// All `2^n` values in increasing mask order, evaluated in parallel.
    pub fn table(&self) -> Result<Vec<T>> {
        self.table_with_cap(ENUMERATION_CAP)
    }

    pub fn table_with_cap(&self, cap: usize) -> Result<Vec<T>> {
        let n = self.n();
        if n > cap.min(ENUMERATION_CAP) {
            return Err(Error::capacity(format!(
                "{n} players exceed the enumeration cap of {}",
                cap.min(ENUMERATION_CAP)
            )));
        }
        (0..1u64 << n)
            .into_par_iter()
            .map(|m| self.value(SubsetMask(m)))
            .collect()
    }

    /// The game played only by `survivors`; eliminated players are absent from every coalition.
    pub fn restrict(&self, survivors: SubsetMask) -> Result<Self> {
        if !survivors.is_subset_of(self.player_set()) {
            return Err(Error::input("survivors reference unknown players"));
        }
        let map: Vec<usize> = survivors.iter().collect();
        let names = map.iter().map(|&i| self.inner.players[i].clone()).collect();
        let parent = self.clone();
        Self::new(names, move |s| {
            parent.value(s.iter().map(|k| map[k]).collect())
        })
    }

    /// Pointwise transform `s -> g(v(s))`.
    pub fn map<F>(&self, g: F) -> Result<Self>
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        let parent = self.clone();
        Self::new(self.players().to_vec(), move |s| parent.value(s).map(&g))
    }

    /// Baseline-shifted game `v(s) - v(∅)`, satisfying the textbook `v(∅) = 0`.
    pub fn shifted(&self) -> Result<Self> {
        let base = self.baseline()?;
        self.map(move |v| v - base.clone())
    }

    /// Pointwise sum of two games on the same players.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        if self.players() != other.players() {
            return Err(Error::input("games must share the same player list"));
        }
        let (a, b) = (self.clone(), other.clone());
        Self::new(self.players().to_vec(), move |s| {
            Ok(a.value(s)? + b.value(s)?)
        })
    }
}

/// Maps player masks (players = predictors in index order) to variable masks of `g`.
#[derive(Debug, Clone)]
pub struct PlayerMap {
    vars: Vec<usize>,
}

impl PlayerMap {
    pub fn predictors(g: &Dag) -> Self {
        PlayerMap {
            vars: g.predictors().iter().collect(),
        }
    }

    pub fn variable(&self, player: usize) -> usize {
        self.vars[player]
    }

    pub fn player(&self, variable: usize) -> Option<usize> {
        self.vars.iter().position(|&v| v == variable)
    }

    pub fn to_variables(&self, players: SubsetMask) -> SubsetMask {
        players.iter().map(|p| self.vars[p]).collect()
    }

    pub fn to_players(&self, variables: SubsetMask) -> SubsetMask {
        variables.iter().filter_map(|v| self.player(v)).collect()
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }
}

fn predictor_names(g: &Dag) -> Vec<String> {
    g.predictors()
        .iter()
        .map(|v| g.name(v).to_owned())
        .collect()
}

/// Population R² game of a linear-Gaussian model; players are the non-target variables.
pub fn r_squared_game<T: Scalar>(sem: &LinearGaussianSem<T>) -> Result<CharacteristicFn<T>> {
    let g = sem.graph();
    let cov = implied_covariance(sem);
    let target = g.target();
    let map = PlayerMap::predictors(g);
    CharacteristicFn::new(predictor_names(g), move |s| {
        r_squared_m(&cov, target, map.to_variables(s))
    })
}

/// Bayes-optimal accuracy game of a discrete network.
pub fn accuracy_game<T: Scalar>(net: &DiscreteBayesNet<T>) -> Result<CharacteristicFn<T>> {
    let g = net.graph();
    let joint = net.joint()?;
    let target = g.target();
    let map = PlayerMap::predictors(g);
    CharacteristicFn::new(predictor_names(g), move |s| {
        bayes_accuracy_m(&joint, target, map.to_variables(s))
    })
}

/// Mutual-information game of a discrete network.
pub fn information_game<T: Scalar>(net: &DiscreteBayesNet<T>) -> Result<CharacteristicFn<f64>> {
    let g = net.graph();
    let joint = net.joint()?;
    let target = g.target();
    let map = PlayerMap::predictors(g);
    CharacteristicFn::new(predictor_names(g), move |s| {
        mutual_information_m(&joint, target, map.to_variables(s))
    })
}

/// Discrete game in `f64` for the chosen metric.
pub fn discrete_game(
    net: &DiscreteBayesNet<f64>,
    metric: DiscreteMetric,
) -> Result<CharacteristicFn<f64>> {
    match metric {
        DiscreteMetric::Accuracy => accuracy_game(net),
        DiscreteMetric::Information => information_game(net),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn values_are_memoized() {
        let calls = Arc::new(AtomicUsize::new(0));
        let counter = Arc::clone(&calls);
        let f = CharacteristicFn::anonymous(3, move |s| {
            counter.fetch_add(1, Ordering::SeqCst);
            Ok(s.len() as f64)
        })
        .unwrap();
        assert_eq!(f.value(SubsetMask(5)).unwrap(), 2.0);
        assert_eq!(f.value(SubsetMask(5)).unwrap(), 2.0);
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        f.table().unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 8);
    }

    #[test]
    fn sparse_cache_for_large_games() {
        let f = CharacteristicFn::anonymous(30, |s| Ok(s.len() as f64)).unwrap();
        assert_eq!(f.value(SubsetMask::full(30)).unwrap(), 30.0);
        assert_eq!(f.value(SubsetMask::full(30)).unwrap(), 30.0);
        assert!(matches!(f.table(), Err(Error::Capacity(_))));
    }

    #[test]
    fn restriction_relabels_players() {
        let f = CharacteristicFn::anonymous(4, |s| Ok(s.0 as f64)).unwrap();
        let r = f.restrict(SubsetMask::from_indices([1, 3])).unwrap();
        assert_eq!(r.players(), ["P1", "P3"]);
        assert_eq!(r.value(SubsetMask(0b11)).unwrap(), 10.0);
        assert_eq!(r.value(SubsetMask(0b10)).unwrap(), 8.0);
    }

    #[test]
    fn shifted_game_has_zero_baseline() {
        let f = CharacteristicFn::anonymous(2, |s| Ok(0.5 + s.len() as f64)).unwrap();
        let g = f.shifted().unwrap();
        assert_eq!(g.baseline().unwrap(), 0.0);
        assert_eq!(g.grand_value().unwrap(), 2.0);
    }

    #[test]
    fn table_size_and_bounds_are_checked() {
        assert!(CharacteristicFn::from_table(vec!["a".into()], vec![0.0]).is_err());
        let f = CharacteristicFn::from_table(vec!["a".into()], vec![0.0, 1.0]).unwrap();
        assert!(f.value(SubsetMask(2)).is_err());
        assert!(CharacteristicFn::<f64>::new(vec!["a".into(), "a".into()], |_| Ok(0.0)).is_err());
    }
}
