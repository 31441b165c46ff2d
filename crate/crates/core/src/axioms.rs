//! Checks of the Shapley axioms and of the structural links between summands,
//! values and the network graph.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::CharacteristicFn;
use crate::graph::{connected_component, d_separated, parents_children, Dag};
use crate::mask::SubsetMask;
use crate::scalar::{tol_of, Scalar};
use crate::shapley::{exact_shapley, ShapleyReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    /// `Σ φ_i = v(N) - v(∅)`.
    Efficiency,
    Symmetry,
    Dummy,
    Additivity,
}

/// One checked instance of an axiom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomFinding {
    pub axiom: Axiom,
    /// Player(s) the instance concerns; empty for efficiency.
    pub players: Vec<String>,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AxiomFindings {
    pub findings: Vec<AxiomFinding>,
}

impl AxiomFindings {
    pub fn all_passed(&self) -> bool {
        self.findings.iter().all(|f| f.passed)
    }

    pub fn violations(&self) -> impl Iterator<Item = &AxiomFinding> {
        self.findings.iter().filter(|f| !f.passed)
    }

    pub fn count(&self, axiom: Axiom) -> usize {
        self.findings.iter().filter(|f| f.axiom == axiom).count()
    }
}

/// Checks generalized efficiency, symmetry (for every pair whose marginal
/// contributions coincide), dummy (for every player whose summands all
/// vanish), and, when a pair of games is supplied, additivity.
pub fn verify_axioms<T: Scalar>(
    f: &CharacteristicFn<T>,
    report: &ShapleyReport<T>,
    tol: f64,
    additivity: Option<(&CharacteristicFn<T>, &CharacteristicFn<T>)>,
) -> Result<AxiomFindings> {
    let n = f.n();
    if report.n() != n {
        return Err(Error::input("report and game have different player counts"));
    }
    let tol_t: T = tol_of(tol);
    let mut findings = Vec::new();

    let expected = f.grand_value()? - f.baseline()?;
    let total: T = report.values.iter().cloned().sum();
    let residual = (total - expected).abs();
    findings.push(AxiomFinding {
        axiom: Axiom::Efficiency,
        players: Vec::new(),
        residual: residual.to_f64_lossy(),
        passed: residual <= tol_t,
    });

    for i in 0..n {
        for j in i + 1..n {
            let rest = f.player_set().without(i).without(j);
            let mut symmetric = true;
            for s in rest.subsets() {
                if (f.value(s.with(i))? - f.value(s.with(j))?).abs() > tol_t {
                    symmetric = false;
                    break;
                }
            }
            if symmetric {
                let gap = (report.values[i].clone() - report.values[j].clone()).abs();
                findings.push(AxiomFinding {
                    axiom: Axiom::Symmetry,
                    players: vec![report.players[i].clone(), report.players[j].clone()],
                    residual: gap.to_f64_lossy(),
                    passed: gap <= tol_t,
                });
            }
        }
    }

    for i in 0..n {
        if report.summands[i].iter().all(|d| d.abs() <= tol_t) {
            let phi = report.values[i].abs();
            findings.push(AxiomFinding {
                axiom: Axiom::Dummy,
                players: vec![report.players[i].clone()],
                residual: phi.to_f64_lossy(),
                passed: phi <= tol_t,
            });
        }
    }

    if let Some((v, w)) = additivity {
        let phi_v = exact_shapley(v)?;
        let phi_w = exact_shapley(w)?;
        let phi_sum = exact_shapley(&v.sum(w)?)?;
        for i in 0..phi_sum.n() {
            let gap =
                (phi_sum.values[i].clone() - phi_v.values[i].clone() - phi_w.values[i].clone())
                    .abs();
            findings.push(AxiomFinding {
                axiom: Axiom::Additivity,
                players: vec![phi_sum.players[i].clone()],
                residual: gap.to_f64_lossy(),
                passed: gap <= tol_t,
            });
        }
    }
    Ok(AxiomFindings { findings })
}

/// Sign pattern of one player's summands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummandPattern {
    /// Every summand exceeds `tol`.
    AllPositive,
    /// At least one summand within `tol` of zero, not all.
    SomeZero,
    /// Every summand within `tol` of zero.
    AllZero,
    /// No zero summand but at least one below `-tol`.
    HasNegative,
}

/// Graph position of a predictor relative to the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuralRole {
    Adjacent,
    Connected,
    Disconnected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummandFinding {
    pub variable: String,
    pub role: StructuralRole,
    pub expected: SummandPattern,
    pub observed: SummandPattern,
    /// Coalitions at which the summand vanishes.
    pub zero_at: Vec<Vec<String>>,
    pub matches: bool,
}

fn pattern<T: Scalar>(summands: &[T], tol: &T) -> SummandPattern {
    let zeros = summands.iter().filter(|d| d.abs() <= *tol).count();
    if zeros == summands.len() {
        SummandPattern::AllZero
    } else if zeros > 0 {
        SummandPattern::SomeZero
    } else if summands.iter().all(|d| d > tol) {
        SummandPattern::AllPositive
    } else {
        SummandPattern::HasNegative
    }
}

/// Compares every player's summand pattern with what the graph predicts under
/// faithfulness: neighbours of the target have only positive summands, other
/// connected variables (spouses included) have a vanishing summand somewhere,
/// and variables with no path to the target have nothing but zeros.
pub fn check_summand_structure<T: Scalar>(
    report: &ShapleyReport<T>,
    g: &Dag,
    tol: f64,
) -> Result<Vec<SummandFinding>> {
    let predictors = g.predictors();
    if report.n() != predictors.len() {
        return Err(Error::input(
            "report players do not match the graph's predictors",
        ));
    }
    let player_vars = report
        .players
        .iter()
        .map(|name| {
            let v = g.index_of(name)?;
            if v == g.target() {
                Err(Error::input(format!(
                    "`{name}` is the target, not a predictor"
                )))
            } else {
                Ok(v)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let tol_t: T = tol_of(tol);
    let pc = parents_children(g, g.target());
    let component = connected_component(g, g.target());
    let mut out = Vec::with_capacity(report.n());
    for (i, &v) in player_vars.iter().enumerate() {
        let role = if pc.contains(v) {
            StructuralRole::Adjacent
        } else if component.contains(v) {
            StructuralRole::Connected
        } else {
            StructuralRole::Disconnected
        };
        let expected = match role {
            StructuralRole::Adjacent => SummandPattern::AllPositive,
            StructuralRole::Connected => SummandPattern::SomeZero,
            StructuralRole::Disconnected => SummandPattern::AllZero,
        };
        let observed = pattern(&report.summands[i], &tol_t);
        let zero_at = report
            .summand_entries(i)
            .filter(|(_, d)| d.abs() <= tol_t)
            .map(|(s, _)| s.iter().map(|p| report.players[p].clone()).collect())
            .collect();
        out.push(SummandFinding {
            variable: report.players[i].clone(),
            role,
            expected,
            observed,
            zero_at,
            matches: expected == observed,
        });
    }
    Ok(out)
}

/// A pair where `weaker ⊥ T | stronger` but not the reverse, so the stronger
/// variable should receive the larger Shapley value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceFinding {
    pub weaker: String,
    pub stronger: String,
    /// `φ_stronger - φ_weaker`.
    pub margin: f64,
    /// Whether the separation pattern also holds with every extra conditioning set.
    pub holds_in_every_context: bool,
    pub passed: bool,
}

/// Checks `φ_j > φ_i + tol` for every ordered pair with `V_i ⊥ T | V_j` and `V_j ̸⊥ T | V_i` in `g`.
pub fn check_dominance<T: Scalar>(
    report: &ShapleyReport<T>,
    g: &Dag,
    tol: f64,
) -> Result<Vec<DominanceFinding>> {
    let t = g.target();
    let vars = report
        .players
        .iter()
        .map(|name| g.index_of(name))
        .collect::<Result<Vec<_>>>()?;
    let tol_t: T = tol_of(tol);
    let mut out = Vec::new();
    for (i, &vi) in vars.iter().enumerate() {
        for (j, &vj) in vars.iter().enumerate() {
            if i == j {
                continue;
            }
            let hypothesis = d_separated(g, vi, t, SubsetMask::singleton(vj))?
                && !d_separated(g, vj, t, SubsetMask::singleton(vi))?;
            if !hypothesis {
                continue;
            }
            let rest = g.predictors().without(vi).without(vj);
            let mut every = true;
            for s in rest.subsets() {
                if !d_separated(g, vi, t, s.with(vj))? || d_separated(g, vj, t, s.with(vi))? {
                    every = false;
                    break;
                }
            }
            let margin = report.values[j].clone() - report.values[i].clone();
            out.push(DominanceFinding {
                weaker: report.players[i].clone(),
                stronger: report.players[j].clone(),
                margin: margin.to_f64_lossy(),
                holds_in_every_context: every,
                passed: margin > tol_t,
            });
        }
    }
    Ok(out)
}
