//! Shared driver for checking that a distribution's conditional independencies
//! coincide with the d-separations of its graph.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{d_separated, Dag};
use crate::mask::SubsetMask;

/// Largest graph for which exhaustive faithfulness checking is attempted.
pub const FAITHFULNESS_MAX_VARS: usize = 7;

/// Which variable pairs enter the check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaithfulnessScope {
    /// Pairs `(X, T)` for every predictor `X`: the relations Shapley summands depend on.
    #[default]
    Target,
    /// Every unordered pair of variables.
    AllPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Graph says separated, distribution shows dependence (a Markov-condition failure).
    SeparatedButDependent,
    /// Graph says connected, distribution shows independence (a faithfulness failure).
    ConnectedButIndependent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub x: String,
    pub y: String,
    pub given: Vec<String>,
    pub kind: ViolationKind,
}

/// Compares `independent(x, y, z)` against d-separation for every pair in
/// `scope` and every conditioning subset of the remaining variables.
pub(crate) fn check<F>(
    g: &Dag,
    scope: FaithfulnessScope,
    mut independent: F,
) -> Result<Vec<Violation>>
where
    F: FnMut(usize, usize, SubsetMask) -> Result<bool>,
{
    let n = g.n();
    if n > FAITHFULNESS_MAX_VARS {
        return Err(Error::capacity(format!(
            "exhaustive faithfulness check supports at most {FAITHFULNESS_MAX_VARS} variables, got {n}"
        )));
    }
    let pairs: Vec<(usize, usize)> = match scope {
        FaithfulnessScope::Target => g.predictors().iter().map(|x| (x, g.target())).collect(),
        FaithfulnessScope::AllPairs => (0..n)
            .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
            .collect(),
    };
    let mut violations = Vec::new();
    for (x, y) in pairs {
        let rest = SubsetMask::full(n).without(x).without(y);
        for z in rest.subsets() {
            let separated = d_separated(g, x, y, z)?;
            let indep = independent(x, y, z)?;
            if separated != indep {
                violations.push(Violation {
                    x: g.name(x).to_owned(),
                    y: g.name(y).to_owned(),
                    given: z.iter().map(|v| g.name(v).to_owned()).collect(),
                    kind: if separated {
                        ViolationKind::SeparatedButDependent
                    } else {
                        ViolationKind::ConnectedButIndependent
                    },
                });
            }
        }
    }
    Ok(violations)
}
