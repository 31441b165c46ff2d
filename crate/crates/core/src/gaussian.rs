//! Linear-Gaussian structural equation models and the population R² game.
//!
//! All variables are zero-mean; each is a linear combination of its parents
//! plus independent Gaussian noise. Only the implied covariance matters.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::faithfulness::{self, FaithfulnessScope, Violation};
use crate::graph::Dag;
use crate::linalg::{solve_checked, Matrix};
use crate::mask::SubsetMask;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianSem<T> {
    graph: Dag,
    coefficients: BTreeMap<(usize, usize), T>,
    noise_variance: Vec<T>,
}

impl<T: Scalar> LinearGaussianSem<T> {
    /// `coefficients` must name every edge of `graph` exactly once.
    pub fn new(
        graph: Dag,
        coefficients: impl IntoIterator<Item = ((usize, usize), T)>,
        noise_variance: Vec<T>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for ((p, c), w) in coefficients {
            if p >= graph.n() || c >= graph.n() || !graph.parents(c).contains(p) {
                return Err(Error::input(format!(
                    "coefficient given for non-edge ({p}, {c})"
                )));
            }
            if map.insert((p, c), w).is_some() {
                return Err(Error::input(format!(
                    "edge `{}` -> `{}` has more than one coefficient",
                    graph.name(p),
                    graph.name(c)
                )));
            }
        }
        for (p, c) in graph.edges() {
            if !map.contains_key(&(p, c)) {
                return Err(Error::input(format!(
                    "edge `{}` -> `{}` has no coefficient",
                    graph.name(p),
                    graph.name(c)
                )));
            }
        }
        if noise_variance.len() != graph.n() {
            return Err(Error::input(format!(
                "expected {} noise variances, got {}",
                graph.n(),
                noise_variance.len()
            )));
        }
        if let Some(i) = noise_variance.iter().position(|v| *v <= T::zero()) {
            return Err(Error::input(format!(
                "noise variance of `{}` must be strictly positive",
                graph.name(i)
            )));
        }
        Ok(LinearGaussianSem {
            graph,
            coefficients: map,
            noise_variance,
        })
    }

    pub fn graph(&self) -> &Dag {
        &self.graph
    }

    pub fn coefficient(&self, parent: usize, child: usize) -> Option<&T> {
        self.coefficients.get(&(parent, child))
    }

    pub fn coefficients(&self) -> &BTreeMap<(usize, usize), T> {
        &self.coefficients
    }

    pub fn noise_variance(&self, i: usize) -> &T {
        &self.noise_variance[i]
    }
}

/// Symmetric covariance over all variables of a model, target included.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel<T> {
    sigma: Matrix<T>,
}

impl<T: Scalar> CovarianceModel<T> {
    pub fn new(sigma: Matrix<T>) -> Result<Self> {
        let n = sigma.dim();
        let tol = crate::scalar::tol_of::<T>(1e-12);
        for r in 0..n {
            for c in r + 1..n {
                if !crate::scalar::approx_eq(sigma.get(r, c), sigma.get(c, r), &tol) {
                    return Err(Error::input(format!(
                        "covariance not symmetric at ({r}, {c})"
                    )));
                }
            }
        }
        Ok(CovarianceModel { sigma })
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn get(&self, r: usize, c: usize) -> &T {
        self.sigma.get(r, c)
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.sigma
    }

    fn sub_matrix(&self, idx: &[usize]) -> Matrix<T> {
        Matrix::from_fn(idx.len(), |r, c| self.get(idx[r], idx[c]).clone())
    }

    /// Residual covariance of `x` and `y` after linear regression on `z`.
    pub fn partial_covariance(&self, x: usize, y: usize, z: SubsetMask) -> Result<T> {
        let idx: Vec<usize> = z.iter().collect();
        if idx.is_empty() {
            return Ok(self.get(x, y).clone());
        }
        let szz = self.sub_matrix(&idx);
        let szy: Vec<T> = idx.iter().map(|&k| self.get(k, y).clone()).collect();
        let beta = solve_checked(&szz, &szy)?;
        let explained: T = idx
            .iter()
            .zip(beta)
            .map(|(&k, b)| self.get(x, k).clone() * b)
            .sum();
        Ok(self.get(x, y).clone() - explained)
    }
}

/// Model-implied covariance, propagated in topological order:
/// `Cov(Xj, Xk) = Σ_p b_pj Cov(Xp, Xk)` for `k` earlier than `j`, and
/// `Var(Xj) = Σ_p b_pj Cov(Xp, Xj) + noise_j`.
pub fn implied_covariance<T: Scalar>(sem: &LinearGaussianSem<T>) -> CovarianceModel<T> {
    let g = sem.graph();
    let n = g.n();
    let mut sigma: Matrix<T> = Matrix::zeros(n);
    let order = g.topological_order();
    for (pos, &j) in order.iter().enumerate() {
        for &k in &order[..pos] {
            let cov: T = g
                .parents(j)
                .iter()
                .map(|p| sem.coefficients[&(p, j)].clone() * sigma.get(p, k).clone())
                .sum();
            sigma.set(j, k, cov.clone());
            sigma.set(k, j, cov);
        }
        let explained: T = g
            .parents(j)
            .iter()
            .map(|p| sem.coefficients[&(p, j)].clone() * sigma.get(p, j).clone())
            .sum();
        sigma.set(j, j, explained + sem.noise_variance[j].clone());
    }
    CovarianceModel { sigma }
}

/// Population R² of the best linear predictor of `target` from `s`:
/// `σ_TS Σ_SS⁻¹ σ_ST / σ_TT`.
pub fn r_squared_m<T: Scalar>(cov: &CovarianceModel<T>, target: usize, s: SubsetMask) -> Result<T> {
    if target >= cov.dim() || !s.is_subset_of(SubsetMask::full(cov.dim())) {
        return Err(Error::input(
            "subset or target outside the covariance model",
        ));
    }
    if s.contains(target) {
        return Err(Error::input("predictor set must exclude the target"));
    }
    if s.is_empty() {
        return Ok(T::zero());
    }
    let idx: Vec<usize> = s.iter().collect();
    let sst: Vec<T> = idx.iter().map(|&k| cov.get(k, target).clone()).collect();
    let beta = solve_checked(&cov.sub_matrix(&idx), &sst)?;
    let explained: T = sst.into_iter().zip(beta).map(|(a, b)| a * b).sum();
    Ok(explained / cov.get(target, target).clone())
}

/// Zero partial correlation test: `|ρ(x, y | z)| ≤ tol`.
pub fn conditional_independent<T: Scalar>(
    cov: &CovarianceModel<T>,
    x: usize,
    y: usize,
    z: SubsetMask,
    tol: f64,
) -> Result<bool> {
    if x == y || z.contains(x) || z.contains(y) {
        return Err(Error::input(
            "independence query needs distinct variables outside the conditioning set",
        ));
    }
    let pxy = cov.partial_covariance(x, y, z)?;
    let pxx = cov.partial_covariance(x, x, z)?;
    let pyy = cov.partial_covariance(y, y, z)?;
    let tol = crate::scalar::tol_of::<T>(tol);
    Ok(pxy.clone() * pxy <= tol.clone() * tol * pxx * pyy)
}

/// Exhaustive comparison of zero partial correlations with d-separation.
pub fn verify_faithfulness<T: Scalar>(
    sem: &LinearGaussianSem<T>,
    tol: f64,
    scope: FaithfulnessScope,
) -> Result<Vec<Violation>> {
    let cov = implied_covariance(sem);
    faithfulness::check(sem.graph(), scope, |x, y, z| {
        conditional_independent(&cov, x, y, z, tol)
    })
}

/// Draws `rows` joint samples; each row is indexed by variable.
pub fn sample<R: Rng + ?Sized>(
    sem: &LinearGaussianSem<f64>,
    rng: &mut R,
    rows: usize,
) -> Vec<Vec<f64>> {
    let g = sem.graph();
    let sd: Vec<f64> = sem.noise_variance.iter().map(|v| v.sqrt()).collect();
    (0..rows)
        .map(|_| {
            let mut row = vec![0.0; g.n()];
            for &j in g.topological_order() {
                let noise: f64 = StandardNormal.sample(rng);
                row[j] = g
                    .parents(j)
                    .iter()
                    .map(|p| sem.coefficients[&(p, j)] * row[p])
                    .sum::<f64>()
                    + sd[j] * noise;
            }
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;
    use crate::scalar::{rational, Rational};

    fn idx(sem: &LinearGaussianSem<Rational>, names: &[&str]) -> SubsetMask {
        names
            .iter()
            .map(|n| sem.graph().index_of(n).unwrap())
            .collect()
    }

    #[test]
    fn implied_covariance_of_sibling_proxy_model() {
        let sem = reference::sibling_proxy_sem::<Rational>();
        let g = sem.graph();
        let cov = implied_covariance(&sem);
        let (a, s, t) = (
            g.index_of("A").unwrap(),
            g.index_of("S").unwrap(),
            g.target(),
        );
        assert_eq!(cov.get(t, t), &rational(16, 1));
        assert_eq!(cov.get(t, a), &rational(4, 1));
        assert_eq!(cov.get(t, s), &rational(12, 1));
        assert_eq!(cov.get(s, s), &rational(16, 1));
    }

    #[test]
    fn single_variable_covariance() {
        let g = Dag::from_names(&["X"], &[], "X").unwrap();
        let sem = LinearGaussianSem::new(g, [], vec![4.0]).unwrap();
        assert_eq!(implied_covariance(&sem).matrix().rows(), vec![vec![4.0]]);
    }

    #[test]
    fn r_squared_matches_closed_forms() {
        let sem = reference::sibling_proxy_sem::<Rational>();
        let cov = implied_covariance(&sem);
        let t = sem.graph().target();
        let r2 = |names: &[&str]| r_squared_m(&cov, t, idx(&sem, names)).unwrap();
        assert_eq!(r2(&[]), rational(0, 1));
        assert_eq!(r2(&["A"]), rational(1, 4));
        assert_eq!(r2(&["S"]), rational(9, 16));
        assert_eq!(r2(&["A", "S"]), rational(7, 12));
        assert_eq!(r2(&["A", "B", "C"]), rational(3, 4));
    }

    #[test]
    fn invalid_models_rejected() {
        let g = Dag::from_names(&["A", "T"], &[("A", "T")], "T").unwrap();
        assert!(LinearGaussianSem::<f64>::new(g.clone(), [], vec![1.0, 1.0]).is_err());
        assert!(
            LinearGaussianSem::new(g.clone(), [((0, 1), 1.0), ((0, 1), 2.0)], vec![1.0, 1.0])
                .is_err()
        );
        assert!(LinearGaussianSem::new(g.clone(), [((1, 0), 1.0)], vec![1.0, 1.0]).is_err());
        assert!(LinearGaussianSem::new(g.clone(), [((0, 1), 1.0)], vec![1.0, 0.0]).is_err());
        assert!(LinearGaussianSem::new(g, [((0, 1), 1.0)], vec![1.0]).is_err());
    }

    #[test]
    fn target_in_predictors_is_an_input_error() {
        let sem = reference::sibling_proxy_sem::<f64>();
        let cov = implied_covariance(&sem);
        let t = sem.graph().target();
        assert!(matches!(
            r_squared_m(&cov, t, SubsetMask::singleton(t)),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn duplicated_predictor_is_a_numerical_error() {
        // X2 = X1 exactly (up to a vanishing noise term) makes Σ_SS near-singular.
        let g = Dag::from_names(&["X1", "X2", "T"], &[("X1", "X2"), ("X1", "T")], "T").unwrap();
        let sem = LinearGaussianSem::new(g, [((0, 1), 1.0), ((0, 2), 1.0)], vec![1.0, 1e-14, 1.0])
            .unwrap();
        let cov = implied_covariance(&sem);
        assert!(matches!(
            r_squared_m(&cov, 2, SubsetMask::from_indices([0, 1])),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn sibling_proxy_model_is_faithful() {
        let sem = reference::sibling_proxy_sem::<Rational>();
        assert!(verify_faithfulness(&sem, 0.0, FaithfulnessScope::AllPairs)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn cancelling_paths_are_an_unfaithful_independence() {
        // X -> T directly with weight 1 and X -> M -> T with weights 1, -1.
        let g =
            Dag::from_names(&["X", "M", "T"], &[("X", "M"), ("M", "T"), ("X", "T")], "T").unwrap();
        let sem = LinearGaussianSem::new(
            g,
            [((0, 1), 1.0), ((1, 2), -1.0), ((0, 2), 1.0)],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        let v = verify_faithfulness(&sem, 1e-12, FaithfulnessScope::Target).unwrap();
        assert!(v.iter().any(|v| v.x == "X" && v.given.is_empty()));
    }
}
