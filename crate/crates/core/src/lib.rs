//! Exact Shapley-value analysis of predictive games played over Bayesian networks.
//!
//! A predictive game assigns each subset of predictors a population-level
//! performance for predicting the target: R² for linear-Gaussian models,
//! Bayes-optimal accuracy or mutual information for discrete networks. The
//! crate computes Shapley values of those games exactly, relates their
//! summands to d-separation in the network, and shows how Shapley-based
//! feature selection can diverge from the target's Markov boundary.
//!
//! The numeric core is generic over [`Scalar`]; the aliases below fix the
//! common instantiations.

pub mod axioms;
pub mod discrete;
pub mod error;
pub mod faithfulness;
pub mod game;
pub mod gaussian;
pub mod graph;
pub mod linalg;
pub mod mask;
pub mod prevalence;
pub mod reference;
pub mod scalar;
pub mod selection;
pub mod shapley;

pub use error::{Error, Result};
pub use game::CharacteristicFn;
pub use graph::{Dag, RelevanceClass};
pub use mask::SubsetMask;
pub use scalar::{Rational, Scalar};
pub use shapley::{MonteCarloReport, ShapleyReport};

/// Double-precision game.
pub type Game = game::CharacteristicFn<f64>;
/// Game in exact rational arithmetic.
pub type ExactGame = game::CharacteristicFn<Rational>;
pub type Report = shapley::ShapleyReport<f64>;
pub type ExactReport = shapley::ShapleyReport<Rational>;
pub type BayesNet = discrete::DiscreteBayesNet<f64>;
pub type ExactBayesNet = discrete::DiscreteBayesNet<Rational>;
pub type Sem = gaussian::LinearGaussianSem<f64>;
pub type ExactSem = gaussian::LinearGaussianSem<Rational>;
pub type Selection = selection::SelectionResult<f64>;
