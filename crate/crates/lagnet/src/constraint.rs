//! Constraint residuals, Jacobians, and the second-derivative contractions
//! needed by the multiplier equation.
//!
//! Each neuron `i` carries one constraint:
//!
//! * clamped:  `g_i = x_i - e_i(t)`   (bias clamps use the constant 1)
//! * unit:     `g_i = x_i - sigma(z_i)` with `z_i = sum_k w_ik x_k`
//!
//! The constraint form for unit neurons is the forward equation of the
//! neuron moved to one side, so every row has a unit coefficient on its own
//! neuron and only touches strictly earlier neurons otherwise.

use nalgebra::{DMatrix, DVector};

use crate::network::{NetworkSpec, Neuron};
use crate::signal::Signal;

/// All constraint derivatives at one `(t, x, W)` point, contracted against
/// the current velocities where second derivatives are involved.
#[derive(Debug, Clone)]
pub struct ConstraintEval {
    /// Residuals `g_i`.
    pub g: DVector<f64>,
    /// Jacobian w.r.t. neuron values; unit lower triangular in topological
    /// coordinates.
    pub gx: DMatrix<f64>,
    /// Jacobian w.r.t. weights (`nu x weight_count`).
    pub gm: DMatrix<f64>,
    /// Explicit time partials; nonzero only on input-clamp rows, where
    /// `gt_i = -e_i'(t)`.
    pub gt: DVector<f64>,
    /// Second time partials; nonzero only on input-clamp rows (`-e_i''(t)`).
    pub gtt: DVector<f64>,
    /// Acceleration-independent part of `d^2 g / dt^2`: all Hessian terms of
    /// the constraint contracted with the current velocities, plus the time
    /// partials. Satisfies `d^2g/dt^2 = gx * xddot + gm * wddot + contraction`.
    pub contraction: DVector<f64>,
}

/// Jacobian of the constraints w.r.t. the neuron values alone.
///
/// Row `i` is `d g_i / d x`: 1 on the diagonal, `-sigma'(z_i) w_ik` on the
/// in-neighbours of a unit neuron.
pub fn constraint_jacobian_x(net: &NetworkSpec, x: &DVector<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let nu = net.neuron_count();
    let mut gx = DMatrix::zeros(nu, nu);
    for i in 0..nu {
        gx[(i, i)] = 1.0;
        if let Neuron::Unit { activation } = net.neuron(i) {
            let d1 = activation.eval(net.input_sum(i, x, w)).d1;
            for &(wi, from) in net.incoming(i) {
                gx[(i, from)] = -d1 * w[wi];
            }
        }
    }
    gx
}

/// Evaluates residuals, Jacobians, time partials, and the velocity
/// contraction of every constraint at one state.
///
/// For a unit row `g_i = x_i - sigma(z_i)`, `z_i = sum_k w_ik x_k`, the
/// nonzero second derivatives follow from the product rule on `z_i`:
///
/// * `d2 g_i / dx_a dx_b   = -sigma''(z_i) w_ia w_ib`
/// * `d2 g_i / dx_a dw_id  = -sigma''(z_i) x_d w_ia - sigma'(z_i) [a == d]`
/// * `d2 g_i / dw_ib dw_id = -sigma''(z_i) x_b x_d`
///
/// Contracting against the velocities and writing `zdot = w_i . xdot + wdot_i . x`
/// collapses the whole bracket to
///
/// `contraction_i = -sigma''(z_i) zdot^2 - 2 sigma'(z_i) (wdot_i . xdot)`,
///
/// which is exactly `d^2 g_i / dt^2` with the accelerations dropped. Clamped
/// rows contribute only their explicit time partial `-e_i''(t)`.
pub fn eval_constraints(
    net: &NetworkSpec,
    t: f64,
    x: &DVector<f64>,
    w: &DVector<f64>,
    x_dot: &DVector<f64>,
    w_dot: &DVector<f64>,
    input: &dyn Signal,
) -> ConstraintEval {
    let nu = net.neuron_count();
    let nw = net.weight_count();
    let mut g = DVector::zeros(nu);
    let mut gx = DMatrix::zeros(nu, nu);
    let mut gm = DMatrix::zeros(nu, nw);
    let mut gt = DVector::zeros(nu);
    let mut gtt = DVector::zeros(nu);
    let mut contraction = DVector::zeros(nu);

    for i in 0..nu {
        gx[(i, i)] = 1.0;
        match net.neuron(i) {
            Neuron::Input { channel } => {
                let s = input.sample(t, channel);
                g[i] = x[i] - s.value;
                gt[i] = -s.d1;
                gtt[i] = -s.d2;
                contraction[i] = -s.d2;
            }
            Neuron::Bias => {
                g[i] = x[i] - 1.0;
            }
            Neuron::Unit { activation } => {
                let z = net.input_sum(i, x, w);
                let act = activation.eval(z);
                g[i] = x[i] - act.value;
                let mut z_dot = 0.0;
                let mut wdot_dot_xdot = 0.0;
                for &(wi, from) in net.incoming(i) {
                    gx[(i, from)] = -act.d1 * w[wi];
                    gm[(i, wi)] = -act.d1 * x[from];
                    z_dot += w[wi] * x_dot[from] + w_dot[wi] * x[from];
                    wdot_dot_xdot += w_dot[wi] * x_dot[from];
                }
                contraction[i] = -act.d2 * z_dot * z_dot - 2.0 * act.d1 * wdot_dot_xdot;
            }
        }
    }

    ConstraintEval {
        g,
        gx,
        gm,
        gt,
        gtt,
        contraction,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::network::NetworkDescription;
    use crate::signal::AnalyticSignal;
    use approx::assert_relative_eq;

    fn two_neuron(act: Activation) -> NetworkSpec {
        let mut d = NetworkDescription::new(1);
        let u = d.unit(act);
        d.edge(u, 0).output(u);
        d.build().unwrap()
    }

    #[test]
    fn linear_neuron_jacobian_rows() {
        // g2 = x2 - w * x1:  gx row = (-w, 1), gm = -x1, gt = 0 on the unit row
        let net = two_neuron(Activation::Identity);
        let sig = AnalyticSignal::Constant(vec![2.0]);
        let x = DVector::from_vec(vec![2.0, 1.5]);
        let w = DVector::from_element(1, 0.75);
        let ce = eval_constraints(&net, 0.3, &x, &w, &DVector::zeros(2), &DVector::zeros(1), &sig);
        assert_relative_eq!(ce.gx[(1, 0)], -0.75);
        assert_relative_eq!(ce.gx[(1, 1)], 1.0);
        assert_relative_eq!(ce.gm[(1, 0)], -2.0);
        assert_eq!(ce.gt[1], 0.0);
        assert_relative_eq!(ce.g[1], 1.5 - 0.75 * 2.0);
    }

    #[test]
    fn input_row_flat_signal_has_zero_time_partials() {
        let net = two_neuron(Activation::Tanh);
        let sig = AnalyticSignal::Constant(vec![1.0]);
        let ce = eval_constraints(
            &net,
            5.0,
            &DVector::from_vec(vec![1.0, 1.0_f64.tanh()]),
            &DVector::from_element(1, 1.0),
            &DVector::zeros(2),
            &DVector::zeros(1),
            &sig,
        );
        assert_eq!(ce.gt[0], 0.0);
        assert_eq!(ce.gtt[0], 0.0);
        assert_relative_eq!(ce.g.amax(), 0.0);
    }

    #[test]
    fn zero_velocities_leave_only_time_partials_in_contraction() {
        let net = two_neuron(Activation::Tanh);
        let sig = AnalyticSignal::SaturatingRise { scale: 3.0 };
        let x = DVector::from_vec(vec![0.4, 0.9]);
        let w = DVector::from_element(1, 1.3);
        let ce = eval_constraints(&net, 0.7, &x, &w, &DVector::zeros(2), &DVector::zeros(1), &sig);
        assert_eq!(ce.contraction[1], 0.0);
        assert_relative_eq!(ce.contraction[0], ce.gtt[0]);
    }

    #[test]
    fn contraction_matches_frozen_velocity_second_difference() {
        // phi(s) = g(t + s, x + s*xdot, W + s*wdot) has phi''(0) = contraction
        let net = two_neuron(Activation::Tanh);
        let sig = AnalyticSignal::SaturatingRise { scale: 3.0 };
        let t = 0.9;
        let x = DVector::from_vec(vec![0.8, 0.3]);
        let w = DVector::from_element(1, 0.6);
        let xd = DVector::from_vec(vec![0.25, -0.4]);
        let wd = DVector::from_element(1, 0.7);
        let ce = eval_constraints(&net, t, &x, &w, &xd, &wd, &sig);

        let h = 1e-4;
        let probe = |s: f64| {
            eval_constraints(&net, t + s, &(&x + &xd * s), &(&w + &wd * s), &xd, &wd, &sig).g
        };
        let second = (probe(h) + probe(-h) - 2.0 * probe(0.0)) / (h * h);
        for i in 0..2 {
            assert_relative_eq!(ce.contraction[i], second[i], epsilon = 1e-7, max_relative = 1e-5);
        }
    }
}
