//! Discrete Bayesian networks with exact inference by full joint enumeration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faithfulness::{self, FaithfulnessScope, Violation};
use crate::graph::Dag;
use crate::mask::SubsetMask;
use crate::scalar::{tol_of, Scalar};

/// Default cap on the number of joint assignments.
pub const DEFAULT_JOINT_CAP: usize = 1 << 20;

/// Conditional probability table of one variable.
///
/// Rows are indexed by the parent configuration in mixed radix, the first
/// parent in `parents` being the most significant digit.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt<T> {
    variable: usize,
    parents: Vec<usize>,
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> Cpt<T> {
    pub fn new(variable: usize, parents: Vec<usize>, rows: Vec<Vec<T>>) -> Self {
        Cpt {
            variable,
            parents,
            rows,
        }
    }

    pub fn variable(&self) -> usize {
        self.variable
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    /// Distribution of the variable given parent values (in `parents` order).
    pub fn row(&self, parent_values: &[usize], cards: &[usize]) -> &[T] {
        let idx = parent_values
            .iter()
            .zip(&self.parents)
            .fold(0, |acc, (&v, &p)| acc * cards[p] + v);
        &self.rows[idx]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBayesNet<T> {
    graph: Dag,
    states: Vec<Vec<String>>,
    cpts: Vec<Cpt<T>>,
}

impl<T: Scalar> DiscreteBayesNet<T> {
    /// `states[i]` labels the states of variable `i`; `cpts` holds one table per variable in any order.
    pub fn new(graph: Dag, states: Vec<Vec<String>>, cpts: Vec<Cpt<T>>) -> Result<Self> {
        let n = graph.n();
        if states.len() != n {
            return Err(Error::input(format!(
                "expected state labels for {n} variables, got {}",
                states.len()
            )));
        }
        if let Some(i) = states.iter().position(|s| s.is_empty()) {
            return Err(Error::input(format!(
                "variable `{}` has no states",
                graph.name(i)
            )));
        }
        let cards: Vec<usize> = states.iter().map(Vec::len).collect();
        let mut slots: Vec<Option<Cpt<T>>> = vec![None; n];
        for cpt in cpts {
            let v = cpt.variable;
            if v >= n {
                return Err(Error::input(format!(
                    "table for unknown variable index {v}"
                )));
            }
            let name = graph.name(v).to_owned();
            if slots[v].is_some() {
                return Err(Error::input(format!(
                    "variable `{name}` has more than one table"
                )));
            }
            let declared: SubsetMask = cpt.parents.iter().copied().collect();
            if declared != graph.parents(v) || declared.len() != cpt.parents.len() {
                return Err(Error::input(format!(
                    "table parents of `{name}` do not match its graph parents"
                )));
            }
            let expected_rows: usize = cpt.parents.iter().map(|&p| cards[p]).product();
            if cpt.rows.len() != expected_rows {
                return Err(Error::input(format!(
                    "table of `{name}` has {} rows, expected {expected_rows}",
                    cpt.rows.len()
                )));
            }
            let tol = tol_of::<T>(1e-12);
            for (r, row) in cpt.rows.iter().enumerate() {
                if row.len() != cards[v] {
                    return Err(Error::input(format!(
                        "row {r} of `{name}` has {} entries, expected {}",
                        row.len(),
                        cards[v]
                    )));
                }
                if row.iter().any(|p| p.is_negative()) {
                    return Err(Error::input(format!(
                        "row {r} of `{name}` has a negative entry"
                    )));
                }
                let total: T = row.iter().cloned().sum();
                if (total - T::one()).abs() > tol {
                    return Err(Error::input(format!(
                        "row {r} of `{name}` does not sum to 1"
                    )));
                }
            }
            slots[v] = Some(cpt);
        }
        let cpts = slots
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                c.ok_or_else(|| Error::input(format!("variable `{}` has no table", graph.name(i))))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DiscreteBayesNet {
            graph,
            states,
            cpts,
        })
    }

    pub fn graph(&self) -> &Dag {
        &self.graph
    }

    pub fn states(&self, i: usize) -> &[String] {
        &self.states[i]
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.states.iter().map(Vec::len).collect()
    }

    pub fn cpt(&self, i: usize) -> &Cpt<T> {
        &self.cpts[i]
    }

    /// Joint table with the default size cap.
    pub fn joint(&self) -> Result<JointTable<T>> {
        joint_enumerate(self, DEFAULT_JOINT_CAP)
    }
}

/// Dense joint distribution over all variables.
///
/// Assignment `a` lives at `Σ a[i] * stride[i]`, variable 0 varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable<T> {
    cards: Vec<usize>,
    strides: Vec<usize>,
    probs: Vec<T>,
}

/// Multiplies out every CPT into the full joint.
pub fn joint_enumerate<T: Scalar>(net: &DiscreteBayesNet<T>, cap: usize) -> Result<JointTable<T>> {
    let cards = net.cardinalities();
    let size = cards
        .iter()
        .try_fold(1usize, |acc, &c| acc.checked_mul(c).filter(|&s| s <= cap))
        .ok_or_else(|| {
            Error::capacity(format!(
                "joint state space exceeds the cap of {cap} entries"
            ))
        })?;
    let mut strides = Vec::with_capacity(cards.len());
    let mut stride = 1;
    for &c in &cards {
        strides.push(stride);
        stride *= c;
    }
    let mut assignment = vec![0usize; cards.len()];
    let mut parent_values = Vec::new();
    let mut probs = Vec::with_capacity(size);
    for flat in 0..size {
        decode(flat, &cards, &mut assignment);
        let mut p = T::one();
        for cpt in &net.cpts {
            parent_values.clear();
            parent_values.extend(cpt.parents.iter().map(|&q| assignment[q]));
            let entry = &cpt.row(&parent_values, &cards)[assignment[cpt.variable]];
            if entry.is_zero() {
                p = T::zero();
                break;
            }
            p = p * entry.clone();
        }
        probs.push(p);
    }
    Ok(JointTable {
        cards,
        strides,
        probs,
    })
}

fn decode(mut flat: usize, cards: &[usize], out: &mut [usize]) {
    for (slot, &c) in out.iter_mut().zip(cards) {
        *slot = flat % c;
        flat /= c;
    }
}

impl<T: Scalar> JointTable<T> {
    pub fn n(&self) -> usize {
        self.cards.len()
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Probability of a full assignment.
    pub fn prob(&self, assignment: &[usize]) -> &T {
        let flat: usize = assignment
            .iter()
            .zip(&self.strides)
            .map(|(a, s)| a * s)
            .sum();
        &self.probs[flat]
    }

    /// Non-zero entries as `(assignment, probability)`.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, &T)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(flat, p)| {
                let mut a = vec![0; self.cards.len()];
                decode(flat, &self.cards, &mut a);
                (a, p)
            })
    }

    pub fn total(&self) -> T {
        self.probs.iter().cloned().sum()
    }

    /// Marginal over `vars` (in the given order, first most significant).
    pub fn marginal(&self, vars: &[usize]) -> Vec<T> {
        let size: usize = vars.iter().map(|&v| self.cards[v]).product();
        let mut out = vec![T::zero(); size];
        for (flat, p) in self.probs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let key = vars.iter().fold(0, |acc, &v| {
                acc * self.cards[v] + flat / self.strides[v] % self.cards[v]
            });
            out[key] = out[key].clone() + p.clone();
        }
        out
    }

    fn check_var(&self, v: usize) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::input(format!("unknown variable index {v}")))
        }
    }

    fn check_predictors(&self, target: usize, s: SubsetMask) -> Result<()> {
        self.check_var(target)?;
        if !s.is_subset_of(SubsetMask::full(self.n())) {
            return Err(Error::input("subset references unknown variables"));
        }
        if s.contains(target) {
            return Err(Error::input("predictor set must exclude the target"));
        }
        Ok(())
    }
}

/// `p(target | given = given_values)`; `given_values` lists one state per
/// member of `given`, in increasing variable-index order.
pub fn conditional<T: Scalar>(
    joint: &JointTable<T>,
    target: usize,
    given: SubsetMask,
    given_values: &[usize],
) -> Result<Vec<T>> {
    joint.check_predictors(target, given)?;
    let vars: Vec<usize> = given.iter().collect();
    if vars.len() != given_values.len() {
        return Err(Error::input(format!(
            "expected {} conditioning values, got {}",
            vars.len(),
            given_values.len()
        )));
    }
    for (&v, &x) in vars.iter().zip(given_values) {
        if x >= joint.cards[v] {
            return Err(Error::input(format!(
                "state {x} out of range for variable index {v}"
            )));
        }
    }
    let card_t = joint.cards[target];
    let key = vars
        .iter()
        .zip(given_values)
        .fold(0, |acc, (&v, &x)| acc * joint.cards[v] + x);
    let mut all = vars.clone();
    all.push(target);
    let table = joint.marginal(&all);
    let row = &table[key * card_t..(key + 1) * card_t];
    let total: T = row.iter().cloned().sum();
    if total.is_zero() {
        return Err(Error::Domain(
            "conditioning event has probability zero".into(),
        ));
    }
    Ok(row.iter().map(|p| p.clone() / total.clone()).collect())
}

/// Expected accuracy of the Bayes-optimal classifier of `target` from `s`:
/// `Σ_s max_t P(S = s, T = t)`. Unshifted, so `m(∅) = max_t P(T = t)`.
///
/// Ties in the arg-max do not change the max, so no decision rule is needed.
pub fn bayes_accuracy_m<T: Scalar>(
    joint: &JointTable<T>,
    target: usize,
    s: SubsetMask,
) -> Result<T> {
    joint.check_predictors(target, s)?;
    let mut vars: Vec<usize> = s.iter().collect();
    vars.push(target);
    let table = joint.marginal(&vars);
    let card_t = joint.cards[target];
    Ok(table
        .chunks(card_t)
        .map(|row| row.iter().cloned().fold(T::zero(), T::max_of))
        .sum())
}

/// Mutual information `I(T; S)` in nats: the expected log-score gain of the
/// Bayes-optimal probabilistic predictor over the prior. Strictly increases
/// whenever a variable added to `s` is conditionally dependent on the target.
pub fn mutual_information_m<T: Scalar>(
    joint: &JointTable<T>,
    target: usize,
    s: SubsetMask,
) -> Result<f64> {
    joint.check_predictors(target, s)?;
    let mut vars: Vec<usize> = s.iter().collect();
    vars.push(target);
    let table: Vec<f64> = joint
        .marginal(&vars)
        .iter()
        .map(Scalar::to_f64_lossy)
        .collect();
    let prior: Vec<f64> = joint
        .marginal(&[target])
        .iter()
        .map(Scalar::to_f64_lossy)
        .collect();
    let card_t = joint.cards[target];
    let mut info = 0.0;
    for row in table.chunks(card_t) {
        let ps: f64 = row.iter().sum();
        for (t, &pst) in row.iter().enumerate() {
            if pst > 0.0 {
                info += pst * (pst / (ps * prior[t])).ln();
            }
        }
    }
    Ok(info.max(0.0))
}

/// Whether `p(t | x, z) = p(t | z)` for every realizable `(x, z)`, in max-norm within `tol`.
pub fn conditional_independent<T: Scalar>(
    joint: &JointTable<T>,
    x: usize,
    t: usize,
    z: SubsetMask,
    tol: f64,
) -> Result<bool> {
    joint.check_var(x)?;
    joint.check_var(t)?;
    if x == t || z.contains(x) || z.contains(t) || !z.is_subset_of(SubsetMask::full(joint.n())) {
        return Err(Error::input(
            "independence query needs distinct variables outside the conditioning set",
        ));
    }
    let tol = tol_of::<T>(tol);
    let mut vars: Vec<usize> = z.iter().collect();
    vars.push(x);
    vars.push(t);
    let table = joint.marginal(&vars);
    let (card_x, card_t) = (joint.cards[x], joint.cards[t]);
    for block in table.chunks(card_x * card_t) {
        let pz: T = block.iter().cloned().sum();
        if pz.is_zero() {
            continue;
        }
        let pt_given_z: Vec<T> = (0..card_t)
            .map(|k| {
                (0..card_x)
                    .map(|j| block[j * card_t + k].clone())
                    .sum::<T>()
                    / pz.clone()
            })
            .collect();
        for row in block.chunks(card_t) {
            let pxz: T = row.iter().cloned().sum();
            if pxz.is_zero() {
                continue;
            }
            for (p, q) in row.iter().zip(&pt_given_z) {
                if (p.clone() / pxz.clone() - q.clone()).abs() > tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Exhaustive comparison of conditional independencies with d-separation.
pub fn verify_faithfulness<T: Scalar>(
    net: &DiscreteBayesNet<T>,
    tol: f64,
    scope: FaithfulnessScope,
) -> Result<Vec<Violation>> {
    if net.graph().n() > faithfulness::FAITHFULNESS_MAX_VARS {
        return Err(Error::capacity(format!(
            "exhaustive faithfulness check supports at most {} variables",
            faithfulness::FAITHFULNESS_MAX_VARS
        )));
    }
    let joint = net.joint()?;
    faithfulness::check(net.graph(), scope, |x, y, z| {
        conditional_independent(&joint, x, y, z, tol)
    })
}

/// Which discrete characteristic function to play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscreteMetric {
    /// Bayes-optimal expected accuracy (unshifted).
    #[default]
    Accuracy,
    /// Mutual information with the target.
    Information,
}
