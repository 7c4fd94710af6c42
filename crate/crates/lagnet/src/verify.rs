//! Self-contained invariant suite behind the `verify` command: analytic
//! derivatives against finite differences, Gram positive definiteness,
//! agreement of the two multiplier solve routes, backpropagation
//! equivalence, and the twice-differentiated-constraint residual along a
//! real trajectory.
//!
//! All randomness is seeded, so a report is reproducible from its seed.

use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::activation::Activation;
use crate::batch;
use crate::bp::{chain_rule_deltas, gram_deltas};
use crate::constraint::{eval_constraints, ConstraintEval};
use crate::dynamics::{integrate, make_initial_state, DynParams};
use crate::gram::{assemble_gram, solve_spd, solve_triangular_gram};
use crate::network::{NetworkDescription, NetworkSpec};
use crate::presets::{experiment, Preset};
use crate::signal::{Signal, SignalSchedule};

/// Outcome of one verification check.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckReport {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        CheckReport { name, passed, detail }
    }
}

/// Random layered feedforward net with mixed activations: 1-3 inputs, up to
/// `max_units` computed neurons spread over at most 5 layers, dense-ish
/// connections to the previous layer plus occasional skips. Outputs are a
/// subset of the final layer. Bounding the depth keeps the triangular
/// constraint Jacobian well conditioned at any width, so solver-agreement
/// tolerances stay meaningful.
pub fn random_network(rng: &mut ChaCha8Rng, max_units: usize) -> NetworkSpec {
    let inputs = rng.random_range(1..=3);
    let mut d = NetworkDescription::new(inputs);

    let mut remaining = rng.random_range(2..=max_units.max(2));
    let width_cap = (max_units / 4).max(3);
    let mut earlier: Vec<usize> = (0..inputs).collect();
    let mut prev: Vec<usize> = earlier.clone();
    let mut last_layer: Vec<usize> = Vec::new();

    while remaining > 0 {
        let width = rng.random_range(1..=remaining.min(width_cap));
        remaining -= width;
        let mut layer = Vec::with_capacity(width);
        for _ in 0..width {
            let act = if rng.random_bool(0.5) { Activation::Tanh } else { Activation::Identity };
            let id = d.unit(act);
            let mut any = false;
            for &s in &prev {
                if rng.random_bool(0.6) {
                    d.edge(id, s);
                    any = true;
                }
            }
            if !any {
                d.edge(id, prev[rng.random_range(0..prev.len())]);
            }
            // sparse skip connections reach past the previous layer
            for &s in &earlier {
                if !prev.contains(&s) && rng.random_bool(0.1) {
                    d.edge(id, s);
                }
            }
            layer.push(id);
        }
        earlier.extend(layer.iter().copied());
        prev = layer.clone();
        last_layer = layer;
    }

    let out_count = rng.random_range(1..=last_layer.len());
    for &id in &last_layer[last_layer.len() - out_count..] {
        d.output(id);
    }
    d.build().expect("randomly generated nets are valid by construction")
}

/// Weights drawn uniformly from `[-1, 1]`.
pub fn random_weights(rng: &mut ChaCha8Rng, net: &NetworkSpec) -> DVector<f64> {
    DVector::from_fn(net.weight_count(), |_, _| rng.random_range(-1.0..1.0))
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

fn random_schedule(rng: &mut ChaCha8Rng, channels: usize) -> SignalSchedule {
    let rows = (0..3)
        .map(|_| (0..channels).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    SignalSchedule::new(rows, 1.0, 0.2).expect("random schedule parameters are valid")
}

/// Worst relative disagreement between analytic constraint derivatives and
/// central finite differences of the residuals, per field, with magnitudes
/// clamped at 1 so near-zero entries compare absolutely.
#[derive(Debug, Clone, Copy, Default)]
pub struct JacobianErrors {
    pub gx: f64,
    pub gm: f64,
    pub gt: f64,
    pub gtt: f64,
    pub contraction: f64,
}

impl JacobianErrors {
    fn merge(self, other: JacobianErrors) -> JacobianErrors {
        JacobianErrors {
            gx: self.gx.max(other.gx),
            gm: self.gm.max(other.gm),
            gt: self.gt.max(other.gt),
            gtt: self.gtt.max(other.gtt),
            contraction: self.contraction.max(other.contraction),
        }
    }

    /// First-order fields to 1e-6; second-difference fields to 1e-5.
    pub fn within_tolerance(&self) -> bool {
        self.gx <= 1e-6
            && self.gm <= 1e-6
            && self.gt <= 1e-6
            && self.gtt <= 1e-5
            && self.contraction <= 1e-5
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Compares a constraint evaluation against finite differences of `g`.
///
/// Taking the evaluation as an argument (instead of recomputing it) lets a
/// mutation test feed in a corrupted Jacobian and watch the check fail.
pub fn jacobian_errors_against_fd(
    net: &NetworkSpec,
    t: f64,
    x: &DVector<f64>,
    w: &DVector<f64>,
    x_dot: &DVector<f64>,
    w_dot: &DVector<f64>,
    input: &dyn Signal,
    ce: &ConstraintEval,
) -> JacobianErrors {
    let nu = net.neuron_count();
    let zero_x = DVector::zeros(nu);
    let zero_w = DVector::zeros(net.weight_count());
    let g_at = |t: f64, x: &DVector<f64>, w: &DVector<f64>| {
        eval_constraints(net, t, x, w, &zero_x, &zero_w, input).g
    };

    let mut errs = JacobianErrors::default();
    let h = 1e-5;

    for a in 0..nu {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[a] += h;
        xm[a] -= h;
        let fd = (g_at(t, &xp, w) - g_at(t, &xm, w)) / (2.0 * h);
        for i in 0..nu {
            errs.gx = errs.gx.max(rel(ce.gx[(i, a)], fd[i]));
        }
    }
    for k in 0..net.weight_count() {
        let mut wp = w.clone();
        let mut wm = w.clone();
        wp[k] += h;
        wm[k] -= h;
        let fd = (g_at(t, x, &wp) - g_at(t, x, &wm)) / (2.0 * h);
        for i in 0..nu {
            errs.gm = errs.gm.max(rel(ce.gm[(i, k)], fd[i]));
        }
    }
    {
        let fd = (g_at(t + h, x, w) - g_at(t - h, x, w)) / (2.0 * h);
        for i in 0..nu {
            errs.gt = errs.gt.max(rel(ce.gt[i], fd[i]));
        }
    }
    {
        // second differences lose half the mantissa; widen the probe
        let h = 1e-4;
        let fd = (g_at(t + h, x, w) + g_at(t - h, x, w) - 2.0 * g_at(t, x, w)) / (h * h);
        for i in 0..nu {
            errs.gtt = errs.gtt.max(rel(ce.gtt[i], fd[i]));
        }
    }
    {
        // frozen-velocity path: phi(s) = g(t+s, x + s xdot, w + s wdot) has
        // phi''(0) equal to the contraction vector
        let h = 1e-4;
        let probe = |s: f64| g_at(t + s, &(x + x_dot * s), &(w + w_dot * s));
        let fd = (probe(h) + probe(-h) - 2.0 * probe(0.0)) / (h * h);
        for i in 0..nu {
            errs.contraction = errs.contraction.max(rel(ce.contraction[i], fd[i]));
        }
    }
    errs
}

fn seeds(rng: &mut ChaCha8Rng, n: usize) -> Vec<u64> {
    (0..n).map(|_| rng.random()).collect()
}

/// Worst finite-difference disagreement across a batch of random nets,
/// random states, and a random schedule probed both on and between plateaus.
pub fn jacobian_sweep(seed: u64, nets: usize) -> JacobianErrors {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_net = seeds(&mut rng, nets);
    batch::map(per_net, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let net = random_network(&mut rng, 12);
        let schedule = random_schedule(&mut rng, net.input_count());
        let w = random_weights(&mut rng, &net);
        let x = random_vector(&mut rng, net.neuron_count(), 1.5);
        let x_dot = random_vector(&mut rng, net.neuron_count(), 1.0);
        let w_dot = random_vector(&mut rng, net.weight_count(), 1.0);
        // plateau interior and transition interior
        [0.5, 0.97]
            .into_iter()
            .map(|t| {
                let ce = eval_constraints(&net, t, &x, &w, &x_dot, &w_dot, &schedule);
                jacobian_errors_against_fd(&net, t, &x, &w, &x_dot, &w_dot, &schedule, &ce)
            })
            .fold(JacobianErrors::default(), JacobianErrors::merge)
    })
    .into_iter()
    .fold(JacobianErrors::default(), JacobianErrors::merge)
}

/// Analytic Jacobians and velocity contractions against finite differences.
pub fn check_jacobians(seed: u64) -> CheckReport {
    let worst = jacobian_sweep(seed, 40);
    CheckReport::new(
        "constraint jacobians vs finite differences",
        worst.within_tolerance(),
        format!(
            "worst rel err: gx {:.1e}, gm {:.1e}, gt {:.1e}, gtt {:.1e}, contraction {:.1e}",
            worst.gx, worst.gm, worst.gt, worst.gtt, worst.contraction
        ),
    )
}

/// Smallest Gram eigenvalue stays positive across random nets and states.
pub fn check_gram_positive_definite(seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_net = seeds(&mut rng, 100);
    let min_eig = batch::map(per_net, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let net = random_network(&mut rng, 47);
        let schedule = random_schedule(&mut rng, net.input_count());
        let w = random_weights(&mut rng, &net);
        let x = random_vector(&mut rng, net.neuron_count(), 1.5);
        let ce = eval_constraints(
            &net,
            0.4,
            &x,
            &w,
            &DVector::zeros(net.neuron_count()),
            &DVector::zeros(net.weight_count()),
            &schedule,
        );
        let a = assemble_gram(&ce, &DynParams::default()).expect("unit masses");
        a.symmetric_eigen().eigenvalues.min()
    })
    .into_iter()
    .fold(f64::INFINITY, f64::min);

    CheckReport::new(
        "gram matrix positive definite",
        min_eig > 0.0,
        format!("smallest eigenvalue over 100 random nets: {min_eig:.3e}"),
    )
}

/// The triangular two-sweep solve agrees with the SPD factorization on the
/// pure-`gx` Gram.
pub fn check_triangular_vs_spd(seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_net = seeds(&mut rng, 100);
    let worst = batch::map(per_net, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let net = random_network(&mut rng, 20);
        let w = random_weights(&mut rng, &net);
        let x = random_vector(&mut rng, net.neuron_count(), 1.5);
        let gx = crate::constraint::constraint_jacobian_x(&net, &x, &w);
        let v = random_vector(&mut rng, net.neuron_count(), 2.0);
        let tri = solve_triangular_gram(&gx, &v).expect("unit diagonal");
        let spd = solve_spd(&(&gx * gx.transpose()), &v).expect("positive definite");
        (tri - &spd).amax() / spd.amax().max(1.0)
    })
    .into_iter()
    .fold(0.0, f64::max);

    CheckReport::new(
        "triangular gram solve vs spd solve",
        worst <= 1e-10,
        format!("worst relative disagreement {worst:.2e} (tol 1e-10)"),
    )
}

/// Gram-system deltas equal chain-rule deltas on random nets.
pub fn check_bp_equivalence(seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_net = seeds(&mut rng, 100);
    let worst = batch::map(per_net, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let net = random_network(&mut rng, 27);
        let w = random_weights(&mut rng, &net);
        let e: Vec<f64> = (0..net.input_count()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x = net.forward_pass(&e, &w).expect("dimensions match");
        let y = random_vector(&mut rng, net.output_count(), 2.0);
        let chain = chain_rule_deltas(&net, &x, &w, &y);
        let gram = gram_deltas(&net, &x, &w, &y).expect("unit diagonal");
        (gram - &chain.deltas).amax() / chain.deltas.amax().max(1.0)
    })
    .into_iter()
    .fold(0.0, f64::max);

    CheckReport::new(
        "gram deltas vs chain-rule deltas",
        worst <= 1e-10,
        format!("worst relative disagreement over 100 nets {worst:.2e} (tol 1e-10)"),
    )
}

/// Accelerations produced by the multiplier solve zero the
/// twice-differentiated constraints along an honest trajectory.
pub fn check_hidden_residual(_seed: u64) -> CheckReport {
    let exp = experiment(Preset::Fig2a);
    let mut params = exp.params.clone();
    params.horizon = 2.0;
    let state0 = make_initial_state(&exp.net, &exp.initial_weights, exp.input.as_ref())
        .expect("preset initial data is consistent");
    match integrate(&state0, &exp.net, exp.input.as_ref(), exp.target.as_ref(), &params, 100) {
        Ok(traj) => CheckReport::new(
            "hidden-constraint residual along trajectory",
            traj.max_hidden_residual <= 1e-8,
            format!("max residual {:.2e} (tol 1e-8)", traj.max_hidden_residual),
        ),
        Err(e) => CheckReport::new(
            "hidden-constraint residual along trajectory",
            false,
            format!("integration failed: {e}"),
        ),
    }
}

/// Runs the whole suite with sub-seeds derived from `seed`.
pub fn run_all(seed: u64) -> Vec<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s: Vec<u64> = seeds(&mut rng, 5);
    vec![
        check_jacobians(s[0]),
        check_gram_positive_definite(s[1]),
        check_triangular_vs_spd(s[2]),
        check_bp_equivalence(s[3]),
        check_hidden_residual(s[4]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_suite_passes() {
        for report in run_all(0xC0FFEE) {
            assert!(report.passed, "{}: {}", report.name, report.detail);
        }
    }

    #[test]
    fn corrupted_jacobian_fails_the_fd_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = random_network(&mut rng, 8);
        let schedule = random_schedule(&mut rng, net.input_count());
        let w = random_weights(&mut rng, &net);
        let x = random_vector(&mut rng, net.neuron_count(), 1.0);
        let zeros_x = DVector::zeros(net.neuron_count());
        let zeros_w = DVector::zeros(net.weight_count());
        let mut ce = eval_constraints(&net, 0.5, &x, &w, &zeros_x, &zeros_w, &schedule);

        let clean = jacobian_errors_against_fd(&net, 0.5, &x, &w, &zeros_x, &zeros_w, &schedule, &ce);
        assert!(clean.within_tolerance(), "clean evaluation flagged: {clean:?}");

        // flip the sign of one weight-Jacobian entry
        let (r, c) = (net.first_output(), 0);
        ce.gm[(r, c)] = -ce.gm[(r, c)] + 0.5;
        let dirty = jacobian_errors_against_fd(&net, 0.5, &x, &w, &zeros_x, &zeros_w, &schedule, &ce);
        assert!(dirty.gm > 1e-3, "corruption not detected: {}", dirty.gm);
    }

    #[test]
    fn random_networks_have_expected_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let net = random_network(&mut rng, 30);
            assert!(net.neuron_count() <= 33);
            assert!(net.output_count() >= 1);
            assert_eq!(net.first_output() + net.output_count(), net.neuron_count());
            // every unit fed: at least one incoming edge by construction
            for i in net.clamped_count()..net.neuron_count() {
                assert!(!net.incoming(i).is_empty());
            }
        }
    }
}
