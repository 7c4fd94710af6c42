//! Second-order constrained dynamics of the neuron values and weights.
//!
//! The equations of motion integrated here are the dissipative stationarity
//! conditions of the weighted kinetic-plus-loss functional, divided through
//! by the dissipation weight `e^{theta t}` and expressed with the rescaled
//! multipliers `lambda_tilde = e^{-theta t} lambda`:
//!
//! ```text
//! xddot = -theta xdot - (gx^T lambda_tilde + V_x) / m_x
//! wddot = -theta wdot - (gm^T lambda_tilde + V_w) / m_w
//! ```
//!
//! with `lambda_tilde` solved pointwise from the Gram system so that the
//! second time derivative of every constraint vanishes.
//!
//! # Penalty stabilization
//!
//! A quadratic constraint penalty added to the potential *and* forwarded to
//! the multiplier solve is exactly cancelled: the solve absorbs any force in
//! the span of the constraint gradients (the shifted multipliers are
//! `lambda_tilde - c_p g`), and the accelerations come out identical. The
//! penalty therefore only stabilizes if the multiplier solve is blind to it.
//! That is what `el_acceleration` does: the multiplier right-hand side uses
//! the supervised loss gradients only, while the penalty force acts on the
//! trajectory directly, turning secular constraint drift into a bounded
//! oscillation (`d^2g/dt^2 = -c_p A g` instead of zero).

use nalgebra::DVector;

use crate::constraint::{eval_constraints, ConstraintEval};
use crate::error::{Error, Result};
use crate::gram::GramSystem;
use crate::network::NetworkSpec;
use crate::signal::Signal;

/// Masses, dissipation, and integration controls for one experiment.
#[derive(Debug, Clone)]
pub struct DynParams {
    /// Inertia of the neuron values.
    pub m_x: f64,
    /// Inertia of the weights.
    pub m_w: f64,
    /// Dissipation rate; the dissipation weight is `e^{theta t}`.
    pub theta: f64,
    /// Gradient-flow scale used by the stiff-limit harness.
    pub gamma: f64,
    /// Coefficient of the quadratic constraint penalty (0 disables it).
    pub penalty: f64,
    /// Integrator step.
    pub dt: f64,
    /// Integration horizon.
    pub horizon: f64,
    /// Largest tolerated constraint residual along a trajectory.
    pub constraint_tol: f64,
}

impl Default for DynParams {
    fn default() -> Self {
        DynParams {
            m_x: 1.0,
            m_w: 1.0,
            theta: 1.0,
            gamma: 1.0,
            penalty: 0.0,
            dt: 1e-3,
            horizon: 10.0,
            constraint_tol: 1e-3,
        }
    }
}

impl DynParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m_x", self.m_x),
            ("m_w", self.m_w),
            ("gamma", self.gamma),
            ("dt", self.dt),
        ];
        for (name, value) in positive {
            if !(value > 0.0) {
                return Err(Error::NonPositiveParameter { name, value });
            }
        }
        for (name, value) in [
            ("theta", self.theta),
            ("penalty", self.penalty),
            ("horizon", self.horizon),
        ] {
            if value < 0.0 || !value.is_finite() {
                return Err(Error::NonPositiveParameter { name, value });
            }
        }
        Ok(())
    }
}

/// Generalized coordinates and velocities at one instant.
#[derive(Debug, Clone)]
pub struct DynState {
    pub t: f64,
    pub x: DVector<f64>,
    pub w: DVector<f64>,
    pub x_dot: DVector<f64>,
    pub w_dot: DVector<f64>,
}

impl DynState {
    fn all_finite(&self) -> bool {
        self.x.iter().all(|v| v.is_finite())
            && self.w.iter().all(|v| v.is_finite())
            && self.x_dot.iter().all(|v| v.is_finite())
            && self.w_dot.iter().all(|v| v.is_finite())
    }
}

/// Loss value and its gradients with respect to neuron values and weights.
#[derive(Debug, Clone)]
pub struct LossEval {
    pub value: f64,
    pub grad_x: DVector<f64>,
    pub grad_w: DVector<f64>,
}

/// Supervised quadratic loss on the output neurons plus the optional
/// quadratic constraint penalty:
///
/// `V = 1/2 sum_k (y_k - x_out_k)^2 + (c_p / 2) sum_i g_i^2`
///
/// `grad_x = (x_out - y)` on output coordinates `+ c_p gx^T g`;
/// `grad_w = c_p gm^T g`.
pub fn loss_and_gradients(
    net: &NetworkSpec,
    x: &DVector<f64>,
    y: &DVector<f64>,
    penalty: f64,
    ce: &ConstraintEval,
) -> LossEval {
    let nu = net.neuron_count();
    let first_out = net.first_output();
    let mut value = 0.0;
    let mut grad_x = DVector::zeros(nu);
    for k in 0..net.output_count() {
        let diff = y[k] - x[first_out + k];
        value += 0.5 * diff * diff;
        grad_x[first_out + k] = -diff;
    }
    let mut grad_w = DVector::zeros(net.weight_count());
    if penalty != 0.0 {
        value += 0.5 * penalty * ce.g.norm_squared();
        grad_x += ce.gx.tr_mul(&ce.g) * penalty;
        grad_w += ce.gm.tr_mul(&ce.g) * penalty;
    }
    LossEval { value, grad_x, grad_w }
}

/// Accelerations, multipliers, and the constraint data they were derived
/// from, at one state.
#[derive(Debug, Clone)]
pub struct AccelEval {
    pub x_ddot: DVector<f64>,
    pub w_ddot: DVector<f64>,
    /// Rescaled multipliers `e^{-theta t} lambda`.
    pub multipliers: DVector<f64>,
    /// Total potential (loss plus penalty term).
    pub loss: f64,
    pub constraint: ConstraintEval,
}

impl AccelEval {
    /// Residual of the twice-differentiated constraints under these
    /// accelerations: `gx xddot + gm wddot + contraction`. Zero up to solver
    /// rounding when the penalty is off; `-c_p A g` with the penalty on.
    pub fn hidden_residual(&self) -> DVector<f64> {
        let mut r = &self.constraint.gx * &self.x_ddot + &self.constraint.contraction;
        if self.constraint.gm.ncols() > 0 {
            r += &self.constraint.gm * &self.w_ddot;
        }
        r
    }
}

/// Evaluates the right-hand side of the second-order equations of motion.
pub fn el_acceleration(
    state: &DynState,
    net: &NetworkSpec,
    input: &dyn Signal,
    target: &dyn Signal,
    params: &DynParams,
) -> Result<AccelEval> {
    let ce = eval_constraints(net, state.t, &state.x, &state.w, &state.x_dot, &state.w_dot, input);
    let y = DVector::from_vec(target.values(state.t));

    // supervised part only: what the multiplier solve accounts for
    let base = loss_and_gradients(net, &state.x, &y, 0.0, &ce);
    let gram = GramSystem::solve(&ce, &state.x_dot, &state.w_dot, &base.grad_x, &base.grad_w, params)?;

    // total potential, including the stabilizing penalty force
    let total = if params.penalty != 0.0 {
        loss_and_gradients(net, &state.x, &y, params.penalty, &ce)
    } else {
        base
    };

    let x_ddot = -&state.x_dot * params.theta
        - (ce.gx.tr_mul(&gram.multipliers) + &total.grad_x) / params.m_x;
    let w_ddot = -&state.w_dot * params.theta
        - (ce.gm.tr_mul(&gram.multipliers) + &total.grad_w) / params.m_w;

    Ok(AccelEval {
        x_ddot,
        w_ddot,
        multipliers: gram.multipliers,
        loss: total.value,
        constraint: ce,
    })
}

/// Builds consistent initial data at `t = 0`: neuron values from a forward
/// pass of the initial input, all velocities zero.
///
/// Consistency requires every constraint to have zero value *and* zero total
/// time derivative at the start; with zero velocities the latter reduces to
/// a vanishing explicit time partial, so the input signal must start flat.
pub fn make_initial_state(
    net: &NetworkSpec,
    w0: &DVector<f64>,
    input: &dyn Signal,
) -> Result<DynState> {
    let e0 = input.values(0.0);
    let x0 = net.forward_pass(&e0, w0)?;
    let state = DynState {
        t: 0.0,
        x: x0,
        w: w0.clone(),
        x_dot: DVector::zeros(net.neuron_count()),
        w_dot: DVector::zeros(net.weight_count()),
    };
    let ce = eval_constraints(net, 0.0, &state.x, &state.w, &state.x_dot, &state.w_dot, input);
    for i in 0..net.neuron_count() {
        if ce.g[i].abs() > 1e-10 {
            return Err(Error::InconsistentInitialData { index: i, value: ce.g[i] });
        }
        if ce.gt[i].abs() > 1e-10 {
            return Err(Error::InconsistentInitialData { index: i, value: ce.gt[i] });
        }
    }
    Ok(state)
}

/// One recorded point of a trajectory.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: DVector<f64>,
    pub w: DVector<f64>,
    pub x_dot: DVector<f64>,
    pub w_dot: DVector<f64>,
    /// Rescaled multipliers at this point.
    pub multipliers: DVector<f64>,
    pub g: DVector<f64>,
    pub loss: f64,
    /// Trapezoidal increment of the action integral since the previous
    /// recorded sample.
    pub action_increment: f64,
}

/// A completed integration: samples at the record stride plus the maxima
/// tracked at every accepted step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub steps: usize,
    /// Largest `|g_i|` seen at any step start.
    pub max_constraint_residual: f64,
    /// Largest twice-differentiated-constraint residual at any step start.
    pub max_hidden_residual: f64,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("integration records at least the initial sample")
    }
}

fn action_integrand(sample: &TrajectorySample, params: &DynParams) -> (f64, f64) {
    let weight = (params.theta * sample.t).exp();
    let kinetic = 0.5
        * (params.m_x * sample.x_dot.norm_squared() + params.m_w * sample.w_dot.norm_squared());
    // lambda = weight * multipliers; the -lambda.g term measures how much
    // the multipliers work against the residual (zero on-constraint)
    let multiplier_term = -weight * sample.multipliers.dot(&sample.g);
    (weight * (kinetic - sample.loss) + multiplier_term, multiplier_term)
}

/// Classical fixed-step fourth-order Runge-Kutta on the first-order system
/// `(x, w, xdot, wdot)`, with the multiplier system re-solved at every stage.
///
/// Samples are recorded every `stride` steps (and at both endpoints). Fails
/// if the state leaves the finite range or the constraint residual exceeds
/// `params.constraint_tol`.
pub fn integrate(
    state0: &DynState,
    net: &NetworkSpec,
    input: &dyn Signal,
    target: &dyn Signal,
    params: &DynParams,
    stride: usize,
) -> Result<Trajectory> {
    params.validate()?;
    let stride = stride.max(1);
    let dt = params.dt;
    let steps = (params.horizon / dt).round() as usize;

    let mut state = state0.clone();
    let mut samples: Vec<TrajectorySample> = Vec::with_capacity(steps / stride + 2);
    let mut max_g: f64 = 0.0;
    let mut max_hidden: f64 = 0.0;
    let mut prev_integrand: Option<f64> = None;

    for k in 0..=steps {
        let k1 = el_acceleration(&state, net, input, target, params)?;
        let g_res = k1.constraint.g.amax();
        max_g = max_g.max(g_res);
        max_hidden = max_hidden.max(k1.hidden_residual().amax());
        if g_res > params.constraint_tol {
            return Err(Error::ConstraintDrift {
                t: state.t,
                residual: g_res,
                tolerance: params.constraint_tol,
            });
        }

        if k % stride == 0 || k == steps {
            let mut sample = TrajectorySample {
                t: state.t,
                x: state.x.clone(),
                w: state.w.clone(),
                x_dot: state.x_dot.clone(),
                w_dot: state.w_dot.clone(),
                multipliers: k1.multipliers.clone(),
                g: k1.constraint.g.clone(),
                loss: k1.loss,
                action_increment: 0.0,
            };
            let (integrand, _) = action_integrand(&sample, params);
            if let (Some(prev), Some(last)) = (prev_integrand, samples.last()) {
                sample.action_increment = 0.5 * (prev + integrand) * (sample.t - last.t);
            }
            prev_integrand = Some(integrand);
            samples.push(sample);
        }
        if k == steps {
            break;
        }

        // remaining RK4 stages
        let half = 0.5 * dt;
        let stage = |t: f64, x: DVector<f64>, w, x_dot, w_dot| DynState { t, x, w, x_dot, w_dot };
        let s2 = stage(
            state.t + half,
            &state.x + &state.x_dot * half,
            &state.w + &state.w_dot * half,
            &state.x_dot + &k1.x_ddot * half,
            &state.w_dot + &k1.w_ddot * half,
        );
        let k2 = el_acceleration(&s2, net, input, target, params)?;
        let s3 = stage(
            state.t + half,
            &state.x + &s2.x_dot * half,
            &state.w + &s2.w_dot * half,
            &state.x_dot + &k2.x_ddot * half,
            &state.w_dot + &k2.w_ddot * half,
        );
        let k3 = el_acceleration(&s3, net, input, target, params)?;
        let s4 = stage(
            state.t + dt,
            &state.x + &s3.x_dot * dt,
            &state.w + &s3.w_dot * dt,
            &state.x_dot + &k3.x_ddot * dt,
            &state.w_dot + &k3.w_ddot * dt,
        );
        let k4 = el_acceleration(&s4, net, input, target, params)?;

        let sixth = dt / 6.0;
        state.x += (&state.x_dot + (&s2.x_dot + &s3.x_dot) * 2.0 + &s4.x_dot) * sixth;
        state.w += (&state.w_dot + (&s2.w_dot + &s3.w_dot) * 2.0 + &s4.w_dot) * sixth;
        state.x_dot += (&k1.x_ddot + (&k2.x_ddot + &k3.x_ddot) * 2.0 + &k4.x_ddot) * sixth;
        state.w_dot += (&k1.w_ddot + (&k2.w_ddot + &k3.w_ddot) * 2.0 + &k4.w_ddot) * sixth;
        state.t = (k + 1) as f64 * dt;

        if !state.all_finite() {
            return Err(Error::NonFiniteState { t: state.t });
        }
    }

    Ok(Trajectory {
        samples,
        steps,
        max_constraint_residual: max_g,
        max_hidden_residual: max_hidden,
    })
}

/// Action integral of a recorded trajectory plus the multiplier-residual
/// term reported on its own as a constraint-violation diagnostic.
///
/// The integrand carries the dissipation weight `e^{theta t}`, so on long
/// horizons with `theta > 0` the total is dominated by the late trajectory
/// and can be astronomically large; it stays meaningful for short or
/// undissipated runs.
#[derive(Debug, Clone, Copy)]
pub struct ActionEval {
    pub total: f64,
    /// Contribution of `-lambda . g`; vanishes on-constraint.
    pub multiplier_term: f64,
}

pub fn action_eval(trajectory: &Trajectory, params: &DynParams) -> ActionEval {
    let mut total = 0.0;
    let mut multiplier_term = 0.0;
    let mut prev: Option<(f64, f64, f64)> = None;
    for sample in &trajectory.samples {
        let (f, m) = action_integrand(sample, params);
        if let Some((t0, f0, m0)) = prev {
            let h = sample.t - t0;
            total += 0.5 * (f0 + f) * h;
            multiplier_term += 0.5 * (m0 + m) * h;
        }
        prev = Some((sample.t, f, m));
    }
    ActionEval { total, multiplier_term }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::network::NetworkDescription;
    use crate::signal::AnalyticSignal;
    use approx::assert_relative_eq;

    fn linear_net() -> NetworkSpec {
        let mut d = NetworkDescription::new(1);
        let u = d.unit(Activation::Identity);
        d.edge(u, 0).output(u);
        d.build().unwrap()
    }

    fn tanh_net() -> NetworkSpec {
        let mut d = NetworkDescription::new(1);
        let u = d.unit(Activation::Tanh);
        d.edge(u, 0).output(u);
        d.build().unwrap()
    }

    fn eval_at(net: &NetworkSpec, x: &DVector<f64>, w: &DVector<f64>, sig: &dyn Signal) -> ConstraintEval {
        eval_constraints(
            net,
            0.0,
            x,
            w,
            &DVector::zeros(net.neuron_count()),
            &DVector::zeros(net.weight_count()),
            sig,
        )
    }

    #[test]
    fn loss_is_zero_at_the_target() {
        let net = linear_net();
        let sig = AnalyticSignal::Constant(vec![1.0]);
        let x = DVector::from_vec(vec![1.0, 3.0]);
        let w = DVector::from_element(1, 3.0);
        let ce = eval_at(&net, &x, &w, &sig);
        let le = loss_and_gradients(&net, &x, &DVector::from_element(1, 3.0), 0.0, &ce);
        assert_eq!(le.value, 0.0);
        assert_eq!(le.grad_x.amax(), 0.0);
        assert_eq!(le.grad_w.amax(), 0.0);
    }

    #[test]
    fn quadratic_loss_hand_values() {
        // eta = 1, y = 3, x_out = 0: V = 4.5, dV/dx_out = -3
        let net = linear_net();
        let sig = AnalyticSignal::Constant(vec![1.0]);
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let w = DVector::zeros(1);
        let ce = eval_at(&net, &x, &w, &sig);
        let le = loss_and_gradients(&net, &x, &DVector::from_element(1, 3.0), 0.0, &ce);
        assert_relative_eq!(le.value, 4.5);
        assert_relative_eq!(le.grad_x[1], -3.0);
    }

    #[test]
    fn penalty_is_inert_on_the_constraint_manifold() {
        let net = tanh_net();
        let sig = AnalyticSignal::Constant(vec![2.0]);
        let w = DVector::from_element(1, 0.7);
        let x = net.forward_pass(&[2.0], &w).unwrap();
        let ce = eval_at(&net, &x, &w, &sig);
        let y = DVector::from_element(1, 0.3);
        let with = loss_and_gradients(&net, &x, &y, 25.0, &ce);
        let without = loss_and_gradients(&net, &x, &y, 0.0, &ce);
        assert_relative_eq!(with.value, without.value, epsilon = 1e-25);
        assert_relative_eq!((with.grad_x - without.grad_x).amax(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((with.grad_w - without.grad_w).amax(), 0.0, epsilon = 1e-12);
    }

    fn rest_state(net: &NetworkSpec, e: f64, w: f64) -> DynState {
        let w = DVector::from_element(1, w);
        DynState {
            t: 0.0,
            x: net.forward_pass(&[e], &w).unwrap(),
            w,
            x_dot: DVector::zeros(net.neuron_count()),
            w_dot: DVector::zeros(net.weight_count()),
        }
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let net = linear_net();
        let input = AnalyticSignal::Constant(vec![1.0]);
        let target = AnalyticSignal::Constant(vec![0.5]);
        let state = rest_state(&net, 1.0, 0.5); // x_out = 0.5 = y
        let acc = el_acceleration(&state, &net, &input, &target, &DynParams::default()).unwrap();
        assert!(acc.x_ddot.amax() < 1e-14);
        assert!(acc.w_ddot.amax() < 1e-14);
        assert!(acc.multipliers.amax() < 1e-14);
    }

    #[test]
    fn linear_neuron_acceleration_hand_values() {
        // e(0) = 1, w = 0, rest, y = 3, unit parameters:
        // multipliers (0, 1.5), xddot = (0, 1.5), wddot = 1.5,
        // and the accelerations satisfy the differentiated constraint.
        let net = linear_net();
        let input = AnalyticSignal::Constant(vec![1.0]);
        let target = AnalyticSignal::Constant(vec![3.0]);
        let state = rest_state(&net, 1.0, 0.0);
        let acc = el_acceleration(&state, &net, &input, &target, &DynParams::default()).unwrap();
        assert_relative_eq!(acc.multipliers[0], 0.0);
        assert_relative_eq!(acc.multipliers[1], 1.5);
        assert_relative_eq!(acc.x_ddot[1], 1.5);
        assert_relative_eq!(acc.w_ddot[0], 1.5);
        assert!(acc.hidden_residual().amax() < 1e-14);
    }

    #[test]
    fn zero_input_decouples_the_weight() {
        // same setup with e(0) = 0: gm vanishes, multiplier carries the whole
        // loss gradient, and the weight stays put
        let net = linear_net();
        let input = AnalyticSignal::Constant(vec![0.0]);
        let target = AnalyticSignal::Constant(vec![3.0]);
        let state = rest_state(&net, 0.0, 0.0);
        let acc = el_acceleration(&state, &net, &input, &target, &DynParams::default()).unwrap();
        assert_relative_eq!(acc.multipliers[1], 3.0);
        assert_relative_eq!(acc.x_ddot[1], 0.0);
        assert_relative_eq!(acc.w_ddot[0], 0.0);
    }

    #[test]
    fn initial_state_accepts_flat_start() {
        let net = linear_net();
        // rises from 0 with zero slope
        let input = AnalyticSignal::SaturatingRise { scale: 3.0 };
        let s = make_initial_state(&net, &DVector::zeros(1), &input).unwrap();
        assert_eq!(s.x.amax(), 0.0);

        // ramp with a smoothed onset also starts flat, any w0
        let ramp = AnalyticSignal::SmoothedRamp { scale: 3.0, onset: 0.1 };
        let s = make_initial_state(&net, &DVector::from_element(1, 0.01), &ramp).unwrap();
        assert_relative_eq!(s.x[0], 3.0);
        assert_relative_eq!(s.x[1], 0.03);
    }

    #[test]
    fn initial_state_rejects_moving_input() {
        // raw ramp: e'(0) = -scale != 0
        struct RawRamp;
        impl Signal for RawRamp {
            fn channels(&self) -> usize {
                1
            }
            fn sample(&self, t: f64, _c: usize) -> crate::signal::SignalSample {
                crate::signal::SignalSample { value: 3.0 * (1.0 - t), d1: -3.0, d2: 0.0 }
            }
        }
        let net = linear_net();
        let err = make_initial_state(&net, &DVector::from_element(1, 0.01), &RawRamp).unwrap_err();
        assert!(matches!(err, Error::InconsistentInitialData { index: 0, .. }));
    }

    #[test]
    fn equilibrium_trajectory_is_constant() {
        let net = linear_net();
        let input = AnalyticSignal::Constant(vec![1.0]);
        let target = AnalyticSignal::Constant(vec![0.25]);
        let state = rest_state(&net, 1.0, 0.25);
        let params = DynParams { horizon: 2.0, ..DynParams::default() };
        let traj = integrate(&state, &net, &input, &target, &params, 100).unwrap();
        let last = traj.last();
        assert_relative_eq!(last.w[0], 0.25, epsilon = 1e-13);
        assert!(traj.max_constraint_residual < 1e-13);
        assert!((last.x_dot.amax()).max(last.w_dot.amax()) < 1e-13);
    }

    #[test]
    fn action_of_resting_trajectory_is_zero() {
        let net = linear_net();
        let input = AnalyticSignal::Constant(vec![1.0]);
        let target = AnalyticSignal::Constant(vec![0.25]);
        let state = rest_state(&net, 1.0, 0.25);
        let params = DynParams { horizon: 1.0, ..DynParams::default() };
        let traj = integrate(&state, &net, &input, &target, &params, 10).unwrap();
        let action = action_eval(&traj, &params);
        assert!(action.total.abs() < 1e-20);
        assert!(action.multiplier_term.abs() < 1e-20);
    }

    #[test]
    fn action_of_uniform_motion_matches_closed_form() {
        // kinetic-only trajectory check without the integrator: xdot = 1 on
        // one coordinate, m_x = 2, theta = 0, T = 1 gives action 1.0
        let params = DynParams { m_x: 2.0, theta: 0.0, ..DynParams::default() };
        let samples: Vec<TrajectorySample> = (0..=100)
            .map(|k| {
                let t = k as f64 / 100.0;
                TrajectorySample {
                    t,
                    x: DVector::from_element(1, t),
                    w: DVector::zeros(0),
                    x_dot: DVector::from_element(1, 1.0),
                    w_dot: DVector::zeros(0),
                    multipliers: DVector::zeros(1),
                    g: DVector::zeros(1),
                    loss: 0.0,
                    action_increment: 0.0,
                }
            })
            .collect();
        let traj = Trajectory {
            samples,
            steps: 100,
            max_constraint_residual: 0.0,
            max_hidden_residual: 0.0,
        };
        let action = action_eval(&traj, &params);
        assert_relative_eq!(action.total, 1.0, epsilon = 1e-12);
        assert_eq!(action.multiplier_term, 0.0);
    }

    #[test]
    fn action_increments_sum_to_the_total() {
        let net = tanh_net();
        let input = AnalyticSignal::SaturatingRise { scale: 2.0 };
        let target = AnalyticSignal::Constant(vec![2.0_f64.tanh()]);
        let state = make_initial_state(&net, &DVector::zeros(1), &input).unwrap();
        let params = DynParams { horizon: 2.0, ..DynParams::default() };
        let traj = integrate(&state, &net, &input, &target, &params, 50).unwrap();
        let action = action_eval(&traj, &params);
        let sum: f64 = traj.samples.iter().map(|s| s.action_increment).sum();
        assert_relative_eq!(sum, action.total, max_relative = 1e-12);
    }

    #[test]
    fn constraint_tolerance_is_enforced() {
        // start off the constraint manifold so the residual is immediately
        // above any small tolerance
        let net = linear_net();
        let input = AnalyticSignal::Constant(vec![1.0]);
        let target = AnalyticSignal::Constant(vec![3.0]);
        let mut state = rest_state(&net, 1.0, 0.0);
        state.x[1] = 0.5; // g_2 = 0.5
        let params = DynParams { horizon: 1.0, ..DynParams::default() };
        let err = integrate(&state, &net, &input, &target, &params, 1).unwrap_err();
        assert!(matches!(err, Error::ConstraintDrift { .. }));
    }
}
