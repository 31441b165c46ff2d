//! Network-level checks against hand-rolled oracles that share no code with
//! the library's enumeration or linear algebra.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shapnet::discrete::{bayes_accuracy_m, joint_enumerate, DEFAULT_JOINT_CAP};
use shapnet::game::{accuracy_game, r_squared_game};
use shapnet::gaussian::{implied_covariance, r_squared_m, sample};
use shapnet::graph::d_separated;
use shapnet::reference::{common_cause_net, sibling_proxy_sem};
use shapnet::scalar::rational;
use shapnet::shapley::exact_shapley;
use shapnet::{ExactBayesNet, Rational, SubsetMask};

/// Joint of the common-cause network written out as nested loops over
/// (c, a, b, t), with the conditional tables typed in directly.
#[allow(clippy::needless_range_loop)]
fn common_cause_joint() -> Vec<([usize; 4], Rational)> {
    let p_a = [
        rational(1, 20),
        rational(1, 20),
        rational(19, 20),
        rational(19, 20),
    ];
    let p_b = [
        rational(1, 20),
        rational(19, 20),
        rational(1, 20),
        rational(19, 20),
    ];
    let p_t = [
        [rational(9, 10), rational(1, 20)],
        [rational(3, 20), rational(9, 10)],
    ];
    let bern = |p: &Rational, x: usize| {
        if x == 1 {
            p.clone()
        } else {
            rational(1, 1) - p
        }
    };
    let mut out = Vec::new();
    for c in 0..4 {
        for a in 0..2 {
            for b in 0..2 {
                for t in 0..2 {
                    let pr =
                        rational(1, 4) * bern(&p_a[c], a) * bern(&p_b[c], b) * bern(&p_t[a][b], t);
                    out.push(([c, a, b, t], pr));
                }
            }
        }
    }
    out
}

/// Bayes accuracy: sum over observed configurations of the larger joint mass.
fn oracle_accuracy(observed: &[usize]) -> Rational {
    let mut best: std::collections::BTreeMap<Vec<usize>, [Rational; 2]> = Default::default();
    for (x, p) in common_cause_joint() {
        let key: Vec<usize> = observed.iter().map(|&v| x[v]).collect();
        let slot = best
            .entry(key)
            .or_insert_with(|| [rational(0, 1), rational(0, 1)]);
        slot[x[3]] += p;
    }
    best.values()
        .map(|[a, b]| if a > b { a.clone() } else { b.clone() })
        .sum()
}

#[test]
fn common_cause_accuracy_matches_nested_loop_oracle() {
    let net: ExactBayesNet = common_cause_net();
    let joint = joint_enumerate(&net, DEFAULT_JOINT_CAP).unwrap();
    let total: Rational = common_cause_joint().into_iter().map(|(_, p)| p).sum();
    assert_eq!(total, rational(1, 1));
    // library variables: C=0, A=1, B=2, T=3 (same order as the oracle tuple)
    for s in SubsetMask::full(3).subsets() {
        let vars: Vec<usize> = s.iter().collect();
        assert_eq!(
            bayes_accuracy_m(&joint, 3, s).unwrap(),
            oracle_accuracy(&vars),
            "subset {vars:?}"
        );
    }
    let expected = [
        (vec![], rational(1, 2)),
        (vec![1], rational(21, 40)),
        (vec![2], rational(21, 40)),
        (vec![0], rational(103, 125)),
        (vec![1, 2], rational(9, 10)),
        (vec![0, 1], rational(43, 50)),
        (vec![0, 2], rational(43, 50)),
        (vec![0, 1, 2], rational(9, 10)),
    ];
    for (vars, m) in expected {
        assert_eq!(oracle_accuracy(&vars), m, "{vars:?}");
    }
}

#[test]
fn common_cause_shapley_values_are_exact() {
    let f = accuracy_game(&common_cause_net::<Rational>()).unwrap();
    let r = exact_shapley(&f).unwrap();
    // players C, A, B
    let a = r.value_of("A").unwrap().clone();
    let c = r.value_of("C").unwrap().clone();
    assert_eq!(&a, r.value_of("B").unwrap());
    assert!(c > a.clone() + a.clone());
    assert!((num_traits::ToPrimitive::to_f64(&a).unwrap() - 0.0901667).abs() < 1e-6);
    assert!((num_traits::ToPrimitive::to_f64(&c).unwrap() - 0.2196667).abs() < 1e-6);
}

#[test]
fn sibling_proxy_r_squared_closed_forms() {
    let sem = sibling_proxy_sem::<Rational>();
    let cov = implied_covariance(&sem);
    // A, B, C, S, T
    assert_eq!(cov.get(4, 4), &rational(16, 1));
    assert_eq!(cov.get(3, 3), &rational(16, 1));
    assert_eq!(cov.get(4, 3), &rational(12, 1));
    assert_eq!(cov.get(4, 0), &rational(4, 1));
    let m = |vars: &[usize]| {
        r_squared_m(&cov, 4, SubsetMask::from_indices(vars.iter().copied())).unwrap()
    };
    assert_eq!(m(&[]), rational(0, 1));
    assert_eq!(m(&[0]), rational(1, 4));
    assert_eq!(m(&[3]), rational(9, 16));
    assert_eq!(m(&[0, 1]), rational(1, 2));
    assert_eq!(m(&[0, 3]), rational(7, 12));
    assert_eq!(m(&[0, 1, 3]), rational(5, 8));
    assert_eq!(m(&[0, 1, 2]), rational(3, 4));
    assert_eq!(m(&[0, 1, 2, 3]), rational(3, 4));

    let r = exact_shapley(&r_squared_game(&sem).unwrap()).unwrap();
    for name in ["A", "B", "C"] {
        assert_eq!(r.value_of(name).unwrap(), &rational(95, 576));
    }
    assert_eq!(r.value_of("S").unwrap(), &rational(49, 192));
}

#[test]
fn r_squared_is_monotone_bounded_and_blind_to_separated_variables() {
    let sem = sibling_proxy_sem::<f64>();
    let cov = implied_covariance(&sem);
    let g = sem.graph();
    let preds = g.predictors();
    for s in preds.subsets() {
        let base = r_squared_m(&cov, 4, s).unwrap();
        assert!((-1e-12..=1.0 + 1e-12).contains(&base));
        for x in preds.difference(s).iter() {
            let grown = r_squared_m(&cov, 4, s.with(x)).unwrap();
            assert!(grown >= base - 1e-12);
            if d_separated(g, 4, x, s).unwrap() {
                assert!((grown - base).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn accuracy_is_monotone_on_common_cause() {
    let net = common_cause_net::<Rational>();
    let joint = joint_enumerate(&net, DEFAULT_JOINT_CAP).unwrap();
    for s in SubsetMask::full(3).subsets() {
        let base = bayes_accuracy_m(&joint, 3, s).unwrap();
        for x in SubsetMask::full(3).difference(s).iter() {
            assert!(bayes_accuracy_m(&joint, 3, s.with(x)).unwrap() >= base);
        }
    }
}

#[test]
fn sampled_covariance_matches_implied_covariance() {
    let sem = sibling_proxy_sem::<f64>();
    let cov = implied_covariance(&sem);
    let rows = 1_000_000;
    let data = sample(&sem, &mut ChaCha8Rng::seed_from_u64(11), rows);
    let n = 5;
    let mut mean = vec![0.0; n];
    for row in &data {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x / rows as f64;
        }
    }
    for i in 0..n {
        for j in i..n {
            let prods: Vec<f64> = data
                .iter()
                .map(|r| (r[i] - mean[i]) * (r[j] - mean[j]))
                .collect();
            let est = prods.iter().sum::<f64>() / (rows - 1) as f64;
            let var = prods.iter().map(|p| (p - est).powi(2)).sum::<f64>() / (rows - 1) as f64;
            let se = (var / rows as f64).sqrt();
            assert!(
                (est - cov.get(i, j)).abs() <= 3.0 * se,
                "cov({i},{j}) = {est}, implied {}",
                cov.get(i, j)
            );
        }
    }
}
