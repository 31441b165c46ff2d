//! Canonical example networks.
//!
//! * [`sibling_proxy_sem`]: `A, B, C -> T` and `A, B, C -> S`, every variable
//!   with noise variance 4 and unit coefficients. `S` is outside the target's
//!   Markov boundary yet earns the largest Shapley value under the R² game.
//! * [`common_cause_net`]: `C -> A, C -> B, A -> T, B -> T` with a four-state
//!   `C`. The indirect cause `C` out-earns the two direct causes combined under
//!   the accuracy game.
//! * [`xor_collider_net`]: `A -> T <- B` with `T = A xor B`, the textbook
//!   unfaithful parameterization.

use crate::discrete::{Cpt, DiscreteBayesNet};
use crate::gaussian::LinearGaussianSem;
use crate::graph::Dag;
use crate::scalar::Scalar;

fn binary() -> Vec<String> {
    vec!["0".into(), "1".into()]
}

pub fn sibling_proxy_sem<T: Scalar>() -> LinearGaussianSem<T> {
    let g = Dag::from_names(
        &["A", "B", "C", "S", "T"],
        &[
            ("A", "T"),
            ("B", "T"),
            ("C", "T"),
            ("A", "S"),
            ("B", "S"),
            ("C", "S"),
        ],
        "T",
    )
    .expect("static graph");
    let edges = g.edges();
    LinearGaussianSem::new(
        g,
        edges.into_iter().map(|e| (e, T::one())),
        vec![T::from_decimal(4.0); 5],
    )
    .expect("static model")
}

pub fn common_cause_net<T: Scalar>() -> DiscreteBayesNet<T> {
    let g = Dag::from_names(
        &["C", "A", "B", "T"],
        &[("C", "A"), ("C", "B"), ("A", "T"), ("B", "T")],
        "T",
    )
    .expect("static graph");
    let p = T::from_decimal;
    let bern = |p1: f64| vec![T::one() - p(p1), p(p1)];
    let quarter = T::from_ratio(1, 4);
    let cpts = vec![
        Cpt::new(0, vec![], vec![vec![quarter; 4]]),
        Cpt::new(1, vec![0], [0.05, 0.05, 0.95, 0.95].map(bern).to_vec()),
        Cpt::new(2, vec![0], [0.05, 0.95, 0.05, 0.95].map(bern).to_vec()),
        // rows (A, B) = (0,0), (0,1), (1,0), (1,1)
        Cpt::new(3, vec![1, 2], [0.9, 0.05, 0.15, 0.9].map(bern).to_vec()),
    ];
    let states = vec![
        vec!["1".into(), "2".into(), "3".into(), "4".into()],
        binary(),
        binary(),
        binary(),
    ];
    DiscreteBayesNet::new(g, states, cpts).expect("static model")
}

pub fn xor_collider_net<T: Scalar>() -> DiscreteBayesNet<T> {
    let g =
        Dag::from_names(&["A", "B", "T"], &[("A", "T"), ("B", "T")], "T").expect("static graph");
    let half = || vec![T::from_ratio(1, 2), T::from_ratio(1, 2)];
    let det = |bit: u64| vec![T::from_ratio(1 - bit, 1), T::from_ratio(bit, 1)];
    let cpts = vec![
        Cpt::new(0, vec![], vec![half()]),
        Cpt::new(1, vec![], vec![half()]),
        Cpt::new(2, vec![0, 1], vec![det(0), det(1), det(1), det(0)]),
    ];
    DiscreteBayesNet::new(g, vec![binary(), binary(), binary()], cpts).expect("static model")
}
