//! Shapley values: exact enumeration, the permutation oracle, the pairwise
//! difference identity, and permutation-sampling estimates.

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{CharacteristicFn, ENUMERATION_CAP};
use crate::mask::SubsetMask;
use crate::scalar::Scalar;

/// Largest game the factorial oracle accepts.
pub const ORACLE_MAX_PLAYERS: usize = 8;

/// Exact Shapley weight `(n - s - 1)! s! / n!`, i.e. `1 / (n · C(n-1, s))`.
pub fn shapley_weight(n: usize, s: usize) -> Result<Ratio<u128>> {
    if n == 0 || s >= n {
        return Err(Error::input(format!(
            "weight needs 0 <= s < n, got n = {n}, s = {s}"
        )));
    }
    let k = s.min(n - 1 - s) as u128;
    let mut binom: u128 = 1;
    for i in 0..k {
        binom = binom
            .checked_mul((n - 1) as u128 - i)
            .ok_or_else(|| Error::capacity("binomial coefficient overflow"))?
            / (i + 1);
    }
    let den = binom
        .checked_mul(n as u128)
        .ok_or_else(|| Error::capacity("weight denominator overflow"))?;
    Ok(Ratio::new(1, den))
}

fn weight_as<T: Scalar>(w: &Ratio<u128>) -> T {
    let num = T::from_u128(*w.numer()).expect("weight numerator fits");
    let den = T::from_u128(*w.denom()).expect("weight denominator fits");
    num / den
}

/// Inserts a zero bit at position `i` of `k`: maps the `k`-th subset of
/// `N - {i}` (in increasing order) to its mask in `N`.
#[inline]
pub fn expand_without(k: u64, i: usize) -> SubsetMask {
    let low = (1u64 << i) - 1;
    SubsetMask((k & low) | ((k & !low) << 1))
}

/// Inverse of [`expand_without`].
#[inline]
pub fn compress_without(s: SubsetMask, i: usize) -> u64 {
    let low = (1u64 << i) - 1;
    (s.0 & low) | ((s.0 >> 1) & !low)
}

/// Exact Shapley values together with every summand that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyReport<T> {
    pub players: Vec<String>,
    pub values: Vec<T>,
    /// `summands[i][k] = v(S ∪ {i}) - v(S)` for the `k`-th subset `S` of `N - {i}`.
    pub summands: Vec<Vec<T>>,
    /// Weight applied to a summand, by coalition size `|S|`.
    pub weights: Vec<Ratio<u128>>,
    pub baseline: T,
    pub grand_value: T,
}

impl<T: Scalar> ShapleyReport<T> {
    pub fn n(&self) -> usize {
        self.players.len()
    }

    pub fn value_of(&self, name: &str) -> Option<&T> {
        self.players
            .iter()
            .position(|p| p == name)
            .map(|i| &self.values[i])
    }

    /// Summand of player `i` at coalition `s` (which must exclude `i`).
    pub fn summand(&self, i: usize, s: SubsetMask) -> Option<&T> {
        if s.contains(i) {
            return None;
        }
        self.summands.get(i)?.get(compress_without(s, i) as usize)
    }

    /// `(S, v(S ∪ {i}) - v(S))` in increasing order of `S`.
    pub fn summand_entries(&self, i: usize) -> impl Iterator<Item = (SubsetMask, &T)> + '_ {
        self.summands[i]
            .iter()
            .enumerate()
            .map(move |(k, v)| (expand_without(k as u64, i), v))
    }

    /// `Σ φ_i - (v(N) - v(∅))`.
    pub fn efficiency_residual(&self) -> T {
        let total: T = self.values.iter().cloned().sum();
        total - (self.grand_value.clone() - self.baseline.clone())
    }

    /// Player indices ordered by decreasing value, ties by index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.sort_by(|&a, &b| {
            self.values[b]
                .partial_cmp(&self.values[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        order
    }
}

fn weights_for(n: usize) -> Result<Vec<Ratio<u128>>> {
    (0..n).map(|s| shapley_weight(n, s)).collect()
}

/// `φ_i = Σ_{S ⊆ N - {i}} w(|S|) [v(S ∪ {i}) - v(S)]` over every coalition.
pub fn exact_shapley<T: Scalar>(f: &CharacteristicFn<T>) -> Result<ShapleyReport<T>> {
    let n = f.n();
    if n > ENUMERATION_CAP {
        return Err(Error::capacity(format!(
            "{n} players exceed the enumeration cap of {ENUMERATION_CAP}"
        )));
    }
    let table = f.table()?;
    let weights = weights_for(n)?;
    let w: Vec<T> = weights.iter().map(weight_as).collect();
    let per_player: Vec<(T, Vec<T>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let bit = 1u64 << i;
            let mut phi = T::zero();
            let summands: Vec<T> = (0..1u64 << (n - 1))
                .map(|k| {
                    let s = expand_without(k, i);
                    let d = table[(s.0 | bit) as usize].clone() - table[s.0 as usize].clone();
                    phi = phi.clone() + w[s.len()].clone() * d.clone();
                    d
                })
                .collect();
            (phi, summands)
        })
        .collect();
    let (values, summands) = per_player.into_iter().unzip();
    Ok(ShapleyReport {
        players: f.players().to_vec(),
        values,
        summands,
        weights,
        baseline: table[0].clone(),
        grand_value: table[table.len() - 1].clone(),
    })
}

/// Every `(S, v(S ∪ {i}) - v(S))` for `S ⊆ N - {i}`, in increasing order of `S`.
pub fn summand_table<T: Scalar>(f: &CharacteristicFn<T>, i: usize) -> Result<Vec<(SubsetMask, T)>> {
    let n = f.n();
    if i >= n {
        return Err(Error::input(format!("unknown player index {i}")));
    }
    if n > ENUMERATION_CAP {
        return Err(Error::capacity(format!(
            "{n} players exceed the enumeration cap of {ENUMERATION_CAP}"
        )));
    }
    (0..1u64 << (n - 1))
        .map(|k| {
            let s = expand_without(k, i);
            Ok((s, f.value(s.with(i))? - f.value(s)?))
        })
        .collect()
}

/// `φ_i - φ_j` through the cancellation identity
/// `Σ_{S ⊆ N - {i, j}} (w(|S|) + w(|S| + 1)) [v(S ∪ {i}) - v(S ∪ {j})]`.
pub fn pairwise_shapley_diff<T: Scalar>(f: &CharacteristicFn<T>, i: usize, j: usize) -> Result<T> {
    let n = f.n();
    if i >= n || j >= n || i == j {
        return Err(Error::input(format!(
            "need two distinct players, got {i} and {j}"
        )));
    }
    if n > ENUMERATION_CAP {
        return Err(Error::capacity(format!(
            "{n} players exceed the enumeration cap of {ENUMERATION_CAP}"
        )));
    }
    let weights = weights_for(n)?;
    let paired: Vec<T> = (0..n - 1)
        .map(|s| {
            weight_as::<T>(&weights[s]) + weights.get(s + 1).map(weight_as).unwrap_or_else(T::zero)
        })
        .collect();
    let rest = f.player_set().without(i).without(j);
    let mut diff = T::zero();
    for s in rest.subsets() {
        let d = f.value(s.with(i))? - f.value(s.with(j))?;
        diff = diff + paired[s.len()].clone() * d;
    }
    Ok(diff)
}

/// φ as the average marginal contribution over all `n!` player orderings.
///
/// Values are computed without Shapley weights; summands and weights in the
/// returned report are filled by direct evaluation for inspection only.
pub fn permutation_oracle_shapley<T: Scalar>(f: &CharacteristicFn<T>) -> Result<ShapleyReport<T>> {
    let n = f.n();
    if n > ORACLE_MAX_PLAYERS {
        return Err(Error::capacity(format!(
            "permutation oracle supports at most {ORACLE_MAX_PLAYERS} players, got {n}"
        )));
    }
    let mut totals = vec![T::zero(); n];
    let mut count: u64 = 0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut visit = |order: &[usize]| -> Result<()> {
        let mut coalition = SubsetMask::EMPTY;
        let mut before = f.value(coalition)?;
        for &p in order {
            coalition.insert(p);
            let after = f.value(coalition)?;
            totals[p] = totals[p].clone() + (after.clone() - before);
            before = after;
        }
        count += 1;
        Ok(())
    };
    // Heap's algorithm, iterative form.
    let mut c = vec![0usize; n];
    visit(&order)?;
    let mut k = 0;
    while k < n {
        if c[k] < k {
            if k % 2 == 0 {
                order.swap(0, k);
            } else {
                order.swap(c[k], k);
            }
            visit(&order)?;
            c[k] += 1;
            k = 0;
        } else {
            c[k] = 0;
            k += 1;
        }
    }
    let count = T::from_u64(count).expect("n! fits");
    let values = totals.into_iter().map(|t| t / count.clone()).collect();
    let summands = (0..n)
        .map(|i| summand_table(f, i).map(|t| t.into_iter().map(|(_, d)| d).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ShapleyReport {
        players: f.players().to_vec(),
        values,
        summands,
        weights: if n == 0 { Vec::new() } else { weights_for(n)? },
        baseline: f.baseline()?,
        grand_value: f.grand_value()?,
    })
}

/// Permutation-sampling estimate with per-player standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub players: Vec<String>,
    pub values: Vec<f64>,
    /// `None` when a player's variance cannot be estimated (a single unstratified sample).
    pub standard_errors: Vec<Option<f64>>,
    pub samples: usize,
    pub seed: u64,
    /// Players whose positions defined the strata, in the order used.
    pub stratified_on: Vec<String>,
    pub strata: usize,
    pub baseline: f64,
    pub grand_value: f64,
}

#[derive(Default, Clone)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn variance(&self) -> Option<f64> {
        (self.count > 1).then(|| self.m2 / (self.count - 1) as f64)
    }
}

fn falling_factorial(n: usize, k: usize) -> Option<u128> {
    (0..k).try_fold(1u128, |acc, i| acc.checked_mul((n - i) as u128))
}

/// Unbiased permutation-sampling estimate of every φ_i.
///
/// Without `strata`, each sample is a uniformly random ordering. With
/// `strata`, orderings are stratified on the exact positions occupied by the
/// first `k` strata members (in index order): each of the `n!/(n-k)!`
/// position assignments is a stratum of probability `(n-k)!/n!`, samples are
/// spread evenly across strata, and stratum means are recombined with those
/// probabilities. `k` is the largest count for which every stratum receives at
/// least two samples (one suffices once the strata pin the whole ordering).
/// Deterministic for a given `seed`.
pub fn monte_carlo_shapley<T: Scalar>(
    f: &CharacteristicFn<T>,
    samples: usize,
    seed: u64,
    strata: Option<SubsetMask>,
) -> Result<MonteCarloReport> {
    let n = f.n();
    if samples == 0 {
        return Err(Error::input("need at least one sample"));
    }
    let members: Vec<usize> = strata
        .map(|m| {
            if m.is_subset_of(f.player_set()) {
                Ok(m.iter().collect())
            } else {
                Err(Error::input("strata reference unknown players"))
            }
        })
        .transpose()?
        .unwrap_or_default();
    let mut k = 0;
    for cand in 1..=members.len() {
        let h = falling_factorial(n, cand).unwrap_or(u128::MAX);
        let needed = if cand + 1 >= n {
            h
        } else {
            h.saturating_mul(2)
        };
        if needed <= samples as u128 {
            k = cand;
        } else {
            break;
        }
    }
    let stratum_count = falling_factorial(n, k).expect("bounded by samples") as usize;
    let base = samples / stratum_count;
    let extra = samples % stratum_count;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut estimate = vec![0.0; n];
    let mut variance = vec![Some(0.0); n];
    let mut order = vec![0usize; n];
    for h in 0..stratum_count {
        // Decode the stratum into positions for the first k members.
        let mut free: Vec<usize> = (0..n).collect();
        let mut fixed = vec![None; n];
        let mut code = h;
        for &member in &members[..k] {
            let slot = code % free.len();
            code /= free.len();
            fixed[free.remove(slot)] = Some(member);
        }
        let mut rest: Vec<usize> = (0..n).filter(|p| !members[..k].contains(p)).collect();
        let draws = base + usize::from(h < extra);
        let mut moments = vec![Moments::default(); n];
        for _ in 0..draws {
            rest.shuffle(&mut rng);
            let mut it = rest.iter();
            for (pos, slot) in order.iter_mut().enumerate() {
                *slot = fixed[pos].unwrap_or_else(|| *it.next().expect("enough free players"));
            }
            let mut coalition = SubsetMask::EMPTY;
            let mut before = f.value(coalition)?.to_f64_lossy();
            for &p in &order {
                coalition.insert(p);
                let after = f.value(coalition)?.to_f64_lossy();
                moments[p].push(after - before);
                before = after;
            }
        }
        let prob = 1.0 / stratum_count as f64;
        let deterministic = k + 1 >= n;
        for p in 0..n {
            estimate[p] += prob * moments[p].mean;
            let var = if deterministic {
                Some(0.0)
            } else {
                moments[p].variance()
            };
            variance[p] = match (variance[p], var) {
                (Some(acc), Some(v)) => Some(acc + prob * prob * v / draws as f64),
                _ => None,
            };
        }
    }
    Ok(MonteCarloReport {
        players: f.players().to_vec(),
        values: estimate,
        standard_errors: variance.into_iter().map(|v| v.map(f64::sqrt)).collect(),
        samples,
        seed,
        stratified_on: members[..k]
            .iter()
            .map(|&p| f.players()[p].clone())
            .collect(),
        strata: stratum_count,
        baseline: f.baseline()?.to_f64_lossy(),
        grand_value: f.grand_value()?.to_f64_lossy(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rational, Rational};

    #[test]
    fn small_weights() {
        assert_eq!(shapley_weight(3, 0).unwrap(), Ratio::new(1, 3));
        assert_eq!(shapley_weight(3, 1).unwrap(), Ratio::new(1, 6));
        assert_eq!(shapley_weight(4, 2).unwrap(), Ratio::new(1, 12));
        assert_eq!(shapley_weight(1, 0).unwrap(), Ratio::new(1, 1));
        assert!(shapley_weight(3, 3).is_err());
        assert!(shapley_weight(0, 0).is_err());
    }

    #[test]
    fn weights_times_counts_sum_to_one() {
        for n in 1..=40usize {
            let mut total = Ratio::new(0u128, 1);
            let mut binom: u128 = 1;
            for s in 0..n {
                total += shapley_weight(n, s).unwrap() * Ratio::from_integer(binom);
                binom = binom * (n - 1 - s) as u128 / (s + 1) as u128;
            }
            assert_eq!(total, Ratio::from_integer(1), "n = {n}");
        }
    }

    #[test]
    fn mask_compression_round_trips() {
        for i in 0..6 {
            for k in 0..32u64 {
                let s = expand_without(k, i);
                assert!(!s.contains(i));
                assert_eq!(compress_without(s, i), k);
            }
        }
    }

    #[test]
    fn additive_game_gives_unit_values() {
        let f = CharacteristicFn::anonymous(5, |s| Ok(s.len() as f64)).unwrap();
        let r = exact_shapley(&f).unwrap();
        assert!(r.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert_eq!(r.summands[0].len(), 16);
    }

    #[test]
    fn one_player_oracle() {
        let f =
            CharacteristicFn::anonymous(1, |s| Ok(if s.is_empty() { 0.25 } else { 1.0 })).unwrap();
        let r = permutation_oracle_shapley(&f).unwrap();
        assert_eq!(r.values, vec![0.75]);
        assert!(matches!(
            permutation_oracle_shapley(&CharacteristicFn::anonymous(9, |_| Ok(0.0)).unwrap()),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn exact_rational_glove_game() {
        // Glove game: player 0 holds a left glove, players 1 and 2 right gloves.
        let f = CharacteristicFn::anonymous(3, |s| {
            Ok(if s.contains(0) && (s.contains(1) || s.contains(2)) {
                rational(1, 1)
            } else {
                rational(0, 1)
            })
        })
        .unwrap();
        let r = exact_shapley(&f).unwrap();
        assert_eq!(
            r.values,
            vec![rational(2, 3), rational(1, 6), rational(1, 6)]
        );
        assert_eq!(pairwise_shapley_diff(&f, 0, 1).unwrap(), rational(1, 2));
        assert_eq!(permutation_oracle_shapley(&f).unwrap().values, r.values);
        assert_eq!(
            r.summand(0, SubsetMask::singleton(2)),
            Some(&rational(1, 1))
        );
        assert_eq!(r.summand(0, SubsetMask::singleton(0)), None);
        assert_eq!(r.ranking(), vec![0, 1, 2]);
    }

    #[test]
    fn summand_table_lists_every_coalition() {
        let f = CharacteristicFn::anonymous(3, |s| Ok(Rational::from_integer((s.0 * s.0).into())))
            .unwrap();
        let t = summand_table(&f, 1).unwrap();
        let masks: Vec<u64> = t.iter().map(|(s, _)| s.0).collect();
        assert_eq!(masks, vec![0, 1, 4, 5]);
        assert_eq!(t[3].1, rational(49 - 25, 1));
    }

    #[test]
    fn monte_carlo_is_deterministic_per_seed() {
        let f = CharacteristicFn::anonymous(5, |s| Ok((s.0 % 7) as f64 * s.len() as f64)).unwrap();
        let a = monte_carlo_shapley(&f, 500, 7, None).unwrap();
        let b = monte_carlo_shapley(&f, 500, 7, None).unwrap();
        let c = monte_carlo_shapley(&f, 500, 8, None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
        let s1 = monte_carlo_shapley(&f, 500, 7, Some(SubsetMask::from_indices([1, 2]))).unwrap();
        let s2 = monte_carlo_shapley(&f, 500, 7, Some(SubsetMask::from_indices([1, 2]))).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.strata, 20);
    }

    #[test]
    fn monte_carlo_single_sample_has_no_standard_error() {
        let f = CharacteristicFn::anonymous(3, |s| Ok(s.len() as f64)).unwrap();
        let r = monte_carlo_shapley(&f, 1, 0, None).unwrap();
        assert!(r.standard_errors.iter().all(Option::is_none));
        assert!(monte_carlo_shapley(&f, 0, 0, None).is_err());
    }

    #[test]
    fn exhaustive_stratification_is_exact() {
        let f = CharacteristicFn::anonymous(4, |s| Ok(((s.0 * 37) % 11) as f64)).unwrap();
        let exact = exact_shapley(&f).unwrap();
        let mc = monte_carlo_shapley(&f, 24, 3, Some(f.player_set())).unwrap();
        assert_eq!(mc.strata, 24);
        for (a, b) in mc.values.iter().zip(&exact.values) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(mc.standard_errors.iter().all(|s| *s == Some(0.0)));
    }
}
