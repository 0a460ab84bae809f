//! Moving least squares: `a*(x) = W P (P^T W P)^{-1} p(x)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scheme::{CoefficientVector, PointWeights, Scheme};

/// Cholesky pivots below this fraction of the largest switch the solve to QR.
pub const PIVOT_RATIO: f64 = 1e-12;

/// A Cholesky solution is kept when `|P^T a - p(x)|_inf <= RESIDUAL_TOLERANCE * (1 + |a|_1)`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-13;

/// Gram matrix `G = sum_j w_j p(x_j) p(x_j)^T` and right-hand side `p(x)` at raw weights.
pub fn gram_system(scheme: &Scheme, x: &[f64]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let w = scheme.raw_weights(x)?;
    Ok((gram(scheme, &w), DVector::from_vec(scheme.basis().eval(x))))
}

fn gram(scheme: &Scheme, w: &[f64]) -> DMatrix<f64> {
    let v = scheme.vandermonde();
    let q = v.ncols();
    let mut g = DMatrix::zeros(q, q);
    for (j, wj) in w.iter().enumerate() {
        for a in 0..q {
            let pa = wj * v.get(j, a);
            for b in 0..=a {
                g[(a, b)] += pa * v.get(j, b);
            }
        }
    }
    for a in 0..q {
        for b in 0..a {
            g[(b, a)] = g[(a, b)];
        }
    }
    g
}

/// MLS coefficient vector at `x`. Points within the snap tolerance of a node under a
/// divergent weight return that node's cardinal vector.
pub fn coefficients(scheme: &Scheme, x: &[f64]) -> Result<CoefficientVector> {
    let w = match scheme.point_weights(x)? {
        PointWeights::Snapped(j) => return Ok(CoefficientVector::cardinal(x, scheme.len(), j)),
        PointWeights::Normalized { values, .. } => values,
    };
    let s = DVector::from_vec(scheme.basis().eval(x));
    let g = gram(scheme, &w);
    let v = scheme.vandermonde();
    if let Some(chol) = g.clone().cholesky() {
        let l = chol.l_dirty();
        let pivots: Vec<f64> = (0..l.nrows()).map(|i| l[(i, i)] * l[(i, i)]).collect();
        let lo = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = pivots.iter().cloned().fold(0.0, f64::max);
        if lo > PIVOT_RATIO * hi {
            let lambda = chol.solve(&s);
            let a: Vec<f64> = w
                .iter()
                .enumerate()
                .map(|(j, wj)| wj * v.row_dot(j, lambda.as_slice()))
                .collect();
            let norm: f64 = a.iter().map(|v| v.abs()).sum();
            let residual = v
                .transpose_mul(&a)
                .iter()
                .zip(s.iter())
                .fold(0.0f64, |m, (u, t)| m.max((u - t).abs()));
            if residual <= RESIDUAL_TOLERANCE * (1.0 + norm) {
                return Ok(CoefficientVector::dense(x, a));
            }
        }
    }
    qr_coefficients(scheme, &w, &s).map(|a| CoefficientVector::dense(x, a))
}

/// Solves through `sqrt(W) P = Q R`, which avoids squaring the condition number:
/// `a = sqrt(w) * (Q R^{-T} p(x))`. Rows are ordered by decreasing weight so the
/// dominant rows are eliminated first.
fn qr_coefficients(scheme: &Scheme, w: &[f64], s: &DVector<f64>) -> Result<Vec<f64>> {
    let v = scheme.vandermonde();
    let (n, q) = (v.nrows(), v.ncols());
    let mut order: Vec<usize> = (0..n).filter(|&j| w[j] > 0.0).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    if order.len() < q {
        return Err(Error::IllConditioned { smallest_pivot: 0.0 });
    }
    let mut m = DMatrix::zeros(order.len(), q);
    for (r, &j) in order.iter().enumerate() {
        let sw = w[j].sqrt();
        for k in 0..q {
            m[(r, k)] = sw * v.get(j, k);
        }
    }
    let qr = m.qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..q).map(|i| r[(i, i)].abs()).collect();
    let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = diag.iter().cloned().fold(0.0, f64::max);
    // Tiny trailing pivots are expected for strongly graded weights and do not hurt the
    // triangular solve; only an exactly singular factor is fatal.
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(Error::IllConditioned { smallest_pivot: lo });
    }
    let y = r
        .transpose()
        .solve_lower_triangular(s)
        .ok_or(Error::IllConditioned { smallest_pivot: lo })?;
    let z = qr.q() * y;
    let mut a = vec![0.0; n];
    for (r, &j) in order.iter().enumerate() {
        a[j] = w[j].sqrt() * z[r];
    }
    Ok(a)
}

/// Shepard's method, the degree-zero case: `a_j = w_j / sum_i w_i`.
pub fn shepard_coefficients(scheme: &Scheme, x: &[f64]) -> Result<CoefficientVector> {
    match scheme.point_weights(x)? {
        PointWeights::Snapped(j) => Ok(CoefficientVector::cardinal(x, scheme.len(), j)),
        PointWeights::Normalized { values, .. } => {
            let total: f64 = values.iter().sum();
            Ok(CoefficientVector::dense(x, values.iter().map(|w| w / total).collect()))
        }
    }
}

/// `s(x) = sum_j f(x_j) a_j(x)`.
pub fn evaluate(scheme: &Scheme, samples: &[f64], x: &[f64]) -> Result<f64> {
    if samples.len() != scheme.len() {
        return Err(Error::InvalidArgument(format!(
            "{} samples for {} nodes",
            samples.len(),
            scheme.len()
        )));
    }
    Ok(coefficients(scheme, x)?.dot(samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSpec;
    use crate::geometry::{generate_grid, perturb, Domain};
    use crate::weights::WeightSpec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scheme_1d(n: usize, m: usize, w: WeightSpec, delta: f64) -> Scheme {
        let dom = Domain::cube(1, 0.0, 1.0).unwrap();
        let x = generate_grid(&dom, &[n]).unwrap();
        Scheme::new(x, BasisSpec::chebyshev(m, &dom), w, delta).unwrap()
    }

    /// Direct normal-equation oracle without normalization or fallbacks.
    fn oracle(scheme: &Scheme, x: &[f64]) -> Vec<f64> {
        let (g, s) = gram_system(scheme, x).unwrap();
        let lambda = g.lu().solve(&s).unwrap();
        let w = scheme.raw_weights(x).unwrap();
        (0..scheme.len())
            .map(|j| w[j] * scheme.vandermonde().row_dot(j, lambda.as_slice()))
            .collect()
    }

    #[test]
    fn gram_matches_definition() {
        let s = scheme_1d(3, 1, WeightSpec::gaussian(1.0).unwrap(), 1.0);
        let (g, rhs) = gram_system(&s, &[0.5]).unwrap();
        let e = (-0.25f64).exp();
        // Chebyshev on [0,1]: p = (1, 2x-1), nodes map to -1, 0, 1.
        assert_relative_eq!(g[(0, 0)], 1.0 + 2.0 * e, epsilon = 1e-14);
        assert_relative_eq!(g[(0, 1)], 0.0, epsilon = 1e-14);
        assert_relative_eq!(g[(1, 1)], 2.0 * e, epsilon = 1e-14);
        assert_eq!(rhs.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn symmetric_setup_gives_symmetric_coefficients() {
        let s = scheme_1d(3, 1, WeightSpec::gaussian(1.0).unwrap(), 1.0);
        let a = coefficients(&s, &[0.5]).unwrap().to_dense();
        let e = (-0.25f64).exp();
        assert_relative_eq!(a[0], e / (1.0 + 2.0 * e), epsilon = 1e-14);
        assert_relative_eq!(a[1], 1.0 / (1.0 + 2.0 * e), epsilon = 1e-14);
        assert_relative_eq!(a[0], a[2], epsilon = 1e-15);
    }

    #[test]
    fn matches_oracle() {
        let s = scheme_1d(9, 2, WeightSpec::exponential(2.0).unwrap(), 0.4);
        for x in [0.0, 0.13, 0.5, 0.77, 1.0] {
            let a = coefficients(&s, &[x]).unwrap().to_dense();
            let b = oracle(&s, &[x]);
            for (u, v) in a.iter().zip(&b) {
                assert_relative_eq!(u, v, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn shepard_is_degree_zero_mls() {
        let s0 = scheme_1d(7, 0, WeightSpec::gaussian(1.0).unwrap(), 0.3);
        for x in [0.05, 0.4, 0.91] {
            let a = coefficients(&s0, &[x]).unwrap().to_dense();
            let b = shepard_coefficients(&s0, &[x]).unwrap().to_dense();
            for (u, v) in a.iter().zip(&b) {
                assert_relative_eq!(u, v, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn algebraic_snaps_and_stays_accurate_near_nodes() {
        let s = scheme_1d(17, 2, WeightSpec::algebraic(8.0).unwrap(), 1.0);
        let at = coefficients(&s, &[0.25]).unwrap();
        assert_eq!(at.to_dense()[4], 1.0);
        assert_eq!(at.nonzeros(), 1);
        for off in [1e-6, 1e-9, 1e-11] {
            let c = coefficients(&s, &[0.25 + off]).unwrap();
            let r = c.reproduction_residual(&s);
            assert!(r.iter().all(|v| v.abs() < 1e-9), "{off}: {r:?}");
            assert!((c.to_dense()[4] - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn evaluate_checks_sample_count() {
        let s = scheme_1d(5, 1, WeightSpec::gaussian(1.0).unwrap(), 0.5);
        assert!(evaluate(&s, &[1.0; 4], &[0.5]).is_err());
        assert_relative_eq!(evaluate(&s, &[2.0; 5], &[0.3]).unwrap(), 2.0, epsilon = 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn reproduces_polynomials(m in 0usize..=3, seed in 0u64..1000, x in 0.0f64..=1.0, y in 0.0f64..=1.0,
                                  fam in 0usize..3) {
            let dom = Domain::cube(2, 0.0, 1.0).unwrap();
            let nodes = perturb(&generate_grid(&dom, &[6, 6]).unwrap(), 0.3, seed).unwrap();
            let w = match fam {
                0 => WeightSpec::gaussian(1.0).unwrap(),
                1 => WeightSpec::exponential(1.0).unwrap(),
                _ => WeightSpec::algebraic(12.0).unwrap(),
            };
            let delta = 3.0 * nodes.fill_distance();
            let s = Scheme::new(nodes, BasisSpec::chebyshev(m, &dom), w, delta).unwrap();
            let c = coefficients(&s, &[x, y]).unwrap();
            let r = c.reproduction_residual(&s);
            let scale = 1.0 + c.abs_sum();
            prop_assert!(r.iter().all(|v| v.abs() <= 1e-10 * scale), "{:?}", r);
        }

        #[test]
        fn weight_scaling_invariance(k in 0.1f64..10.0, x in 0.0f64..=1.0) {
            // Multiplying every weight by a constant leaves `a` unchanged; exercised through
            // the equivalent change of nu in a pure power law.
            let s1 = scheme_1d(9, 1, WeightSpec::algebraic(6.0).unwrap(), 1.0);
            let s2 = scheme_1d(9, 1, WeightSpec::algebraic(6.0).unwrap().with_scale(crate::weights::ScaleSource::Delta), k);
            let a = coefficients(&s1, &[x]).unwrap().to_dense();
            let b = coefficients(&s2, &[x]).unwrap().to_dense();
            for (u, v) in a.iter().zip(&b) {
                prop_assert!((u - v).abs() < 1e-10);
            }
        }
    }
}
