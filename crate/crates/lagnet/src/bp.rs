//! Classic backpropagation and gradient-flow references, plus the harness
//! that drives the full dynamics into the stiff limit and measures how fast
//! the rescaled multipliers collapse onto the backpropagation deltas.
//!
//! # Sign convention
//!
//! One convention is fixed here and used everywhere: `delta_i` is *minus*
//! the total derivative of the loss with respect to neuron value `i` along
//! the solved network, so output deltas read `y - x_out` and
//! `weight_gradient` is the true gradient of the composed loss
//! (`d loss / d w_ij = -delta_i sigma'(z_i) x_j`, verified against finite
//! differences). Under this convention the rescaled multipliers of the
//! dynamics converge to `delta` directly, with no extra sign flip.

use nalgebra::DVector;

use crate::batch;
use crate::constraint::constraint_jacobian_x;
use crate::dynamics::{integrate, make_initial_state, DynParams};
use crate::error::Result;
use crate::gram::solve_triangular_gram;
use crate::network::{NetworkSpec, Neuron};
use crate::signal::{Signal, SignalSchedule};

/// Deltas, loss gradient and loss value of one backpropagation pass.
#[derive(Debug, Clone)]
pub struct BpResult {
    /// Per-neuron delta errors; entries on clamped rows carry the error
    /// back-propagated into the clamps and do not affect weight gradients.
    pub deltas: DVector<f64>,
    /// Gradient of the composed loss w.r.t. each weight slot.
    pub weight_gradient: DVector<f64>,
    pub loss: f64,
}

/// Reverse-order chain rule over the solved network.
///
/// Expects `x` to satisfy the constraints (`x = forward_pass(e, w)`).
pub fn chain_rule_deltas(
    net: &NetworkSpec,
    x: &DVector<f64>,
    w: &DVector<f64>,
    y: &DVector<f64>,
) -> BpResult {
    let nu = net.neuron_count();
    let first_out = net.first_output();

    let mut act = Vec::with_capacity(nu);
    for i in 0..nu {
        act.push(match net.neuron(i) {
            Neuron::Unit { activation } => activation.eval(net.input_sum(i, x, w)),
            _ => crate::activation::Activation::Identity.eval(x[i]),
        });
    }

    let mut loss = 0.0;
    let mut deltas = DVector::zeros(nu);
    for k in 0..net.output_count() {
        let diff = y[k] - x[first_out + k];
        loss += 0.5 * diff * diff;
        deltas[first_out + k] = diff;
    }
    for i in (0..nu).rev() {
        let mut acc = deltas[i];
        for &(wi, to) in net.outgoing(i) {
            acc += deltas[to] * act[to].d1 * w[wi];
        }
        deltas[i] = acc;
    }

    let mut weight_gradient = DVector::zeros(net.weight_count());
    for i in 0..nu {
        if matches!(net.neuron(i), Neuron::Unit { .. }) {
            for &(wi, from) in net.incoming(i) {
                weight_gradient[wi] = -deltas[i] * act[i].d1 * x[from];
            }
        }
    }

    BpResult { deltas, weight_gradient, loss }
}

/// Deltas from the triangular Gram system `(gx gx^T) delta = -gx grad_x`.
///
/// Solving through the two triangular substitutions, this must coincide with
/// [`chain_rule_deltas`]: the Gram route and the chain rule are two
/// factorizations of the same linear map.
pub fn gram_deltas(
    net: &NetworkSpec,
    x: &DVector<f64>,
    w: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<DVector<f64>> {
    let gx = constraint_jacobian_x(net, x, w);
    let first_out = net.first_output();
    let mut grad_x = DVector::zeros(net.neuron_count());
    for k in 0..net.output_count() {
        grad_x[first_out + k] = x[first_out + k] - y[k];
    }
    let rhs = -(&gx * &grad_x);
    solve_triangular_gram(&gx, &rhs)
}

/// One step of continuous gradient flow on the composed loss:
/// `wdot = -(1/gamma) d loss / d W` at the given weights.
pub fn gradient_flow_step(
    w: &DVector<f64>,
    gamma: f64,
    net: &NetworkSpec,
    e: &[f64],
    y: &DVector<f64>,
) -> Result<DVector<f64>> {
    let x = net.forward_pass(e, w)?;
    let bp = chain_rule_deltas(net, &x, w, y);
    Ok(-bp.weight_gradient / gamma)
}

/// Mass pairs `(m_x, m_w)` approaching the stiff limit: `m_x = m_w^2` drives
/// the mass ratio to zero alongside the masses themselves.
pub fn stiff_limit_masses(m_w: &[f64]) -> Vec<(f64, f64)> {
    m_w.iter().map(|&mw| (mw * mw, mw)).collect()
}

/// Controls for the stiff-limit sweep.
#[derive(Debug, Clone)]
pub struct LimitOptions {
    /// Horizon of each trajectory.
    pub horizon: f64,
    /// Base step; each run uses `dt = dt_base * sqrt(m_w)`, shrinking the
    /// step alongside the fast constraint-restoring modes.
    pub dt_base: f64,
    /// Initial weights.
    pub w0: DVector<f64>,
    /// First plateau whose midpoint is measured; the default skips the
    /// start-up plateau so decayed transients do not pollute the comparison.
    pub first_plateau: usize,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions {
            horizon: 3.0,
            dt_base: 5e-3,
            w0: DVector::zeros(1),
            first_plateau: 1,
        }
    }
}

/// One row of the stiff-limit error table.
#[derive(Debug, Clone)]
pub struct LimitRow {
    pub m_x: f64,
    pub m_w: f64,
    pub theta: f64,
    pub dt: f64,
    /// Largest `|multipliers - bp deltas|` over the measured midpoints.
    pub lambda_dev: f64,
    /// Largest `|wdot - gradient-flow wdot|` over the measured midpoints.
    pub wdot_dev: f64,
    /// Agreement of the velocity-based delta characterization
    /// `(gx gx^T) delta = -gamma gx xdot` with the bp deltas; measured and
    /// reported, not asserted.
    pub velocity_form_dev: f64,
    /// Populated when the trajectory failed (e.g. blow-up at too large a
    /// step); the deviations are NaN in that case.
    pub failure: Option<String>,
}

/// Integrates the full dynamics for each mass pair with `theta = gamma / m_w`
/// and measures, at the plateau midpoints of the input schedule, how far the
/// rescaled multipliers and weight velocities sit from the backpropagation
/// deltas and the gradient-flow step.
///
/// Mass pairs are processed concurrently when the `parallel` feature is on.
pub fn limit_comparison(
    net: &NetworkSpec,
    schedule: &SignalSchedule,
    target: &dyn Signal,
    gamma: f64,
    mass_pairs: &[(f64, f64)],
    options: &LimitOptions,
) -> Vec<LimitRow> {
    batch::map(mass_pairs.to_vec(), |(m_x, m_w)| {
        limit_row(net, schedule, target, gamma, m_x, m_w, options)
    })
}

/// Runs a single mass pair of the stiff-limit sweep.
pub fn limit_row(
    net: &NetworkSpec,
    schedule: &SignalSchedule,
    target: &dyn Signal,
    gamma: f64,
    m_x: f64,
    m_w: f64,
    options: &LimitOptions,
) -> LimitRow {
    let theta = gamma / m_w;
    let dt = options.dt_base * m_w.sqrt();
    let mut row = LimitRow {
        m_x,
        m_w,
        theta,
        dt,
        lambda_dev: f64::NAN,
        wdot_dev: f64::NAN,
        velocity_form_dev: f64::NAN,
        failure: None,
    };

    let params = DynParams {
        m_x,
        m_w,
        theta,
        gamma,
        penalty: 0.0,
        dt,
        horizon: options.horizon,
        // drift is part of what the sweep measures; only real blow-ups fail
        constraint_tol: f64::INFINITY,
    };
    let run = make_initial_state(net, &options.w0, schedule)
        .and_then(|state0| integrate(&state0, net, schedule, target, &params, 1));
    let traj = match run {
        Ok(t) => t,
        Err(e) => {
            row.failure = Some(e.to_string());
            return row;
        }
    };

    let midpoints = schedule.plateau_midpoints(options.first_plateau, options.horizon);
    let mut lambda_dev: f64 = 0.0;
    let mut wdot_dev: f64 = 0.0;
    let mut velocity_form_dev: f64 = 0.0;
    for &tm in &midpoints {
        // samples sit on the step grid; the nearest one is still on the
        // plateau since dt << tau
        let idx = ((tm / dt).round() as usize).min(traj.samples.len() - 1);
        let s = &traj.samples[idx];
        let e = schedule.values(s.t);
        let y = DVector::from_vec(target.values(s.t));

        let x_solved = match net.forward_pass(&e, &s.w) {
            Ok(x) => x,
            Err(err) => {
                row.failure = Some(err.to_string());
                return row;
            }
        };
        let bp = chain_rule_deltas(net, &x_solved, &s.w, &y);
        lambda_dev = lambda_dev.max((&s.multipliers - &bp.deltas).amax());
        wdot_dev = wdot_dev.max((&s.w_dot + &bp.weight_gradient / gamma).amax());

        // velocity-based characterization, using the trajectory's own xdot
        let gx = constraint_jacobian_x(net, &s.x, &s.w);
        let v = -(&gx * &s.x_dot) * gamma;
        match solve_triangular_gram(&gx, &v) {
            Ok(d_alt) => {
                velocity_form_dev = velocity_form_dev.max((d_alt - &bp.deltas).amax());
            }
            Err(err) => {
                row.failure = Some(err.to_string());
                return row;
            }
        }
    }

    row.lambda_dev = lambda_dev;
    row.wdot_dev = wdot_dev;
    row.velocity_form_dev = velocity_form_dev;
    row
}
