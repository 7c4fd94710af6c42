//! Assembly and solution of the pointwise linear system for the Lagrange
//! multipliers.
//!
//! All multiplier arithmetic here works with the rescaled multipliers
//! `lambda_tilde = e^{-theta t} lambda`: dividing the stationarity equations
//! through by the dissipation weight `e^{theta t}` leaves the dynamics
//! unchanged while keeping every quantity in double range on long horizons.

use nalgebra::{DMatrix, DVector};

use crate::constraint::ConstraintEval;
use crate::dynamics::DynParams;
use crate::error::{Error, Result};

/// Assembled multiplier system at one state: the Gram matrix of constraint
/// gradients, the rescaled right-hand side, and the rescaled multipliers.
#[derive(Debug, Clone)]
pub struct GramSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub multipliers: DVector<f64>,
}

impl GramSystem {
    /// Assembles and solves the multiplier system in one go.
    ///
    /// `grad_x`/`grad_w` are the potential gradients that the multiplier
    /// equation should account for; any force kept out of them is invisible
    /// to the solve and acts on the trajectory unopposed.
    pub fn solve(
        ce: &ConstraintEval,
        x_dot: &DVector<f64>,
        w_dot: &DVector<f64>,
        grad_x: &DVector<f64>,
        grad_w: &DVector<f64>,
        params: &DynParams,
    ) -> Result<GramSystem> {
        let matrix = assemble_gram(ce, params)?;
        let rhs = assemble_rhs(ce, x_dot, w_dot, grad_x, grad_w, params);
        let multipliers = solve_spd(&matrix, &rhs)?;
        Ok(GramSystem { matrix, rhs, multipliers })
    }
}

/// Gram matrix of the constraint gradients weighted by the inverse masses:
/// `A_ij = (gx_i . gx_j) / m_x + (gm_i . gm_j) / m_w`.
///
/// Symmetric by construction; positive definite whenever the rows of `gx`
/// are independent, which the unit-triangular structure guarantees.
pub fn assemble_gram(ce: &ConstraintEval, params: &DynParams) -> Result<DMatrix<f64>> {
    if params.m_x <= 0.0 {
        return Err(Error::NonPositiveParameter { name: "m_x", value: params.m_x });
    }
    if params.m_w <= 0.0 {
        return Err(Error::NonPositiveParameter { name: "m_w", value: params.m_w });
    }
    let mut a = &ce.gx * ce.gx.transpose() / params.m_x;
    if ce.gm.ncols() > 0 {
        a += &ce.gm * ce.gm.transpose() / params.m_w;
    }
    Ok(a)
}

/// Right-hand side of the multiplier system, rescaled by `e^{-theta t}`:
///
/// `rhs_i = contraction_i - theta (gx_i . xdot + gm_i . wdot)
///          - (gx_i . grad_x) / m_x - (gm_i . grad_w) / m_w`.
pub fn assemble_rhs(
    ce: &ConstraintEval,
    x_dot: &DVector<f64>,
    w_dot: &DVector<f64>,
    grad_x: &DVector<f64>,
    grad_w: &DVector<f64>,
    params: &DynParams,
) -> DVector<f64> {
    let mut rhs = ce.contraction.clone();
    rhs -= (&ce.gx * x_dot) * params.theta;
    rhs -= (&ce.gx * grad_x) / params.m_x;
    if ce.gm.ncols() > 0 {
        rhs -= (&ce.gm * w_dot) * params.theta;
        rhs -= (&ce.gm * grad_w) / params.m_w;
    }
    rhs
}

/// Solves `A x = b` for symmetric positive definite `A` via Cholesky.
///
/// A failed factorization signals rank-deficient constraint gradients and is
/// reported as [`Error::IndefiniteGram`] rather than silently regularized.
pub fn solve_spd(a: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = a.clone().cholesky().ok_or(Error::IndefiniteGram)?;
    Ok(chol.solve(rhs))
}

/// Solves `(L L^T) delta = v` where `L` is the lower-triangular constraint
/// Jacobian `gx` in topological coordinates, in two O(n^2) substitution
/// sweeps: forward `L mu = v`, then backward `L^T delta = mu`.
///
/// This is the special-case path for the pure-`gx` Gram; it must agree with
/// [`solve_spd`] on `gx gx^T` and serves as its independent cross-check.
pub fn solve_triangular_gram(gx: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    let n = gx.nrows();
    assert_eq!(gx.ncols(), n, "triangular Gram solve needs a square Jacobian");
    assert_eq!(v.len(), n);

    for i in 0..n {
        if gx[(i, i)] == 0.0 {
            return Err(Error::SingularTriangular { index: i });
        }
    }

    // forward substitution: L mu = v
    let mut mu = DVector::zeros(n);
    for i in 0..n {
        let mut s = v[i];
        for j in 0..i {
            s -= gx[(i, j)] * mu[j];
        }
        mu[i] = s / gx[(i, i)];
    }

    // back substitution: L^T delta = mu
    let mut delta = DVector::zeros(n);
    for i in (0..n).rev() {
        let mut s = mu[i];
        for j in i + 1..n {
            s -= gx[(j, i)] * delta[j];
        }
        delta[i] = s / gx[(i, i)];
    }
    Ok(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::constraint::eval_constraints;
    use crate::network::NetworkDescription;
    use crate::signal::{AnalyticSignal, Signal as _};
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn unit_params() -> DynParams {
        DynParams::default()
    }

    fn linear_eval(e: f64, w: f64, x2: f64) -> ConstraintEval {
        let mut d = NetworkDescription::new(1);
        let u = d.unit(Activation::Identity);
        d.edge(u, 0).output(u);
        let net = d.build().unwrap();
        let sig = AnalyticSignal::Constant(vec![e]);
        eval_constraints(
            &net,
            0.0,
            &DVector::from_vec(vec![e, x2]),
            &DVector::from_element(1, w),
            &DVector::zeros(2),
            &DVector::zeros(1),
            &sig,
        )
    }

    #[test]
    fn gram_of_single_linear_neuron() {
        // input row gx = (1, 0); unit row gx = (0, 1), gm = (-1) at w = 0, e = 1
        let ce = linear_eval(1.0, 0.0, 0.0);
        let a = assemble_gram(&ce, &unit_params()).unwrap();
        assert_relative_eq!(a[(0, 0)], 1.0);
        assert_relative_eq!(a[(0, 1)], 0.0);
        assert_relative_eq!(a[(1, 0)], 0.0);
        assert_relative_eq!(a[(1, 1)], 2.0);
    }

    #[test]
    fn zero_weight_jacobian_reduces_to_x_gram() {
        // with e = 0 the weight Jacobian vanishes and A = gx gx^T / m_x
        let ce = linear_eval(0.0, 0.4, 0.0);
        assert_eq!(ce.gm.amax(), 0.0);
        let mut p = unit_params();
        p.m_x = 2.0;
        let a = assemble_gram(&ce, &p).unwrap();
        let expect = &ce.gx * ce.gx.transpose() / 2.0;
        assert_relative_eq!((a - expect).amax(), 0.0);
    }

    #[test]
    fn nonpositive_mass_is_rejected() {
        let ce = linear_eval(1.0, 0.0, 0.0);
        let mut p = unit_params();
        p.m_w = 0.0;
        assert!(matches!(
            assemble_gram(&ce, &p),
            Err(Error::NonPositiveParameter { name: "m_w", .. })
        ));
    }

    #[test]
    fn rhs_vanishes_at_rest_with_flat_signal_and_no_potential() {
        let ce = linear_eval(1.0, 0.3, 0.3);
        let rhs = assemble_rhs(
            &ce,
            &DVector::zeros(2),
            &DVector::zeros(1),
            &DVector::zeros(2),
            &DVector::zeros(1),
            &unit_params(),
        );
        assert_eq!(rhs.amax(), 0.0);
    }

    #[test]
    fn rhs_of_initial_linear_neuron_setup() {
        // w = 0, x = (1, 0), loss gradient (0, -3): rhs = (0, 3)
        let ce = linear_eval(1.0, 0.0, 0.0);
        let rhs = assemble_rhs(
            &ce,
            &DVector::zeros(2),
            &DVector::zeros(1),
            &DVector::from_vec(vec![0.0, -3.0]),
            &DVector::zeros(1),
            &unit_params(),
        );
        assert_relative_eq!(rhs[0], 0.0);
        assert_relative_eq!(rhs[1], 3.0);
    }

    #[test]
    fn rhs_of_accelerating_input_clamp() {
        // input row with e''(t) != 0 at rest: rhs = -e''
        let mut d = NetworkDescription::new(1);
        let u = d.unit(Activation::Identity);
        d.edge(u, 0).output(u);
        let net = d.build().unwrap();
        let sig = AnalyticSignal::SaturatingRise { scale: 3.0 };
        let t = 0.0;
        let e0 = sig.sample(t, 0);
        assert_eq!(e0.d2, 3.0);
        let ce = eval_constraints(
            &net,
            t,
            &DVector::from_vec(vec![e0.value, 0.0]),
            &DVector::zeros(1),
            &DVector::zeros(2),
            &DVector::zeros(1),
            &sig,
        );
        let rhs = assemble_rhs(
            &ce,
            &DVector::zeros(2),
            &DVector::zeros(1),
            &DVector::zeros(2),
            &DVector::zeros(1),
            &unit_params(),
        );
        assert_relative_eq!(rhs[0], -3.0);
    }

    #[test]
    fn spd_solve_identity_and_diagonal() {
        let rhs = DVector::from_vec(vec![4.0, 3.0]);
        let sol = solve_spd(&DMatrix::identity(2, 2), &rhs).unwrap();
        assert_relative_eq!((sol - &rhs).amax(), 0.0);

        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let sol = solve_spd(&a, &rhs).unwrap();
        assert_relative_eq!(sol[0], 2.0);
        assert_relative_eq!(sol[1], 3.0);
    }

    #[test]
    fn spd_solve_matches_dense_inverse_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = 10;
            let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let a = &b * b.transpose() + DMatrix::identity(n, n) * 0.5;
            let rhs = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let sol = solve_spd(&a, &rhs).unwrap();
            let oracle = a.clone().try_inverse().unwrap() * &rhs;
            assert!((&sol - &oracle).amax() <= 1e-10 * oracle.amax().max(1.0));
            // contract: residual small relative to the data
            assert!((a * sol - &rhs).amax() <= 1e-10 * rhs.amax().max(1.0));
        }
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(matches!(
            solve_spd(&a, &DVector::zeros(2)),
            Err(Error::IndefiniteGram)
        ));
    }

    #[test]
    fn triangular_gram_identity() {
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let d = solve_triangular_gram(&DMatrix::identity(3, 3), &v).unwrap();
        assert_relative_eq!((d - v).amax(), 0.0);
    }

    #[test]
    fn triangular_gram_matches_spd_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = 5;
            let mut l = DMatrix::identity(n, n);
            for i in 0..n {
                for j in 0..i {
                    l[(i, j)] = rng.random_range(-1.0..1.0);
                }
            }
            let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let d = solve_triangular_gram(&l, &v).unwrap();
            let a = &l * l.transpose();
            let oracle = solve_spd(&a, &v).unwrap();
            let scale = oracle.amax().max(1.0);
            assert!((d - oracle).amax() <= 1e-10 * scale);
        }
    }

    #[test]
    fn triangular_gram_two_neuron_hand_solve() {
        // tanh unit at w = 1, x1 = 3: L = [[1, 0], [-sigma'(3), 1]], v = (0, 1)
        // forward gives mu = (0, 1); back substitution gives
        // delta = (sigma'(3), 1)
        let s1 = Activation::Tanh.eval(3.0).d1;
        let mut l = DMatrix::identity(2, 2);
        l[(1, 0)] = -s1;
        let v = DVector::from_vec(vec![0.0, 1.0]);
        let d = solve_triangular_gram(&l, &v).unwrap();
        assert_relative_eq!(d[0], 0.009_866_037_165_440_211, max_relative = 1e-15);
        assert_relative_eq!(d[0], s1, max_relative = 1e-15);
        assert_relative_eq!(d[1], 1.0);
    }

    #[test]
    fn zero_diagonal_is_reported() {
        let mut l = DMatrix::identity(2, 2);
        l[(1, 1)] = 0.0;
        assert!(matches!(
            solve_triangular_gram(&l, &DVector::zeros(2)),
            Err(Error::SingularTriangular { index: 1 })
        ));
    }
}
