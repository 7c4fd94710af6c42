//! Trajectory CSV, limit-sweep CSV, and the summary file.
//!
//! Numbers are written with 17 significant digits so files round-trip to the
//! exact doubles the run produced.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use lagnet::bp::LimitRow;
use lagnet::dynamics::{ActionEval, DynParams, Trajectory};
use lagnet::presets::Experiment;
use lagnet::NetworkSpec;

fn num(x: f64) -> String {
    format!("{x:.17e}")
}

pub fn write_trajectory_csv(path: &Path, net: &NetworkSpec, trajectory: &Trajectory) -> Result<()> {
    let nu = net.neuron_count();
    let nw = net.weight_count();
    let mut text = String::new();

    let mut columns = vec!["t".to_string()];
    columns.extend((0..nu).map(|i| format!("x_{}", net.user_id(i))));
    columns.extend((0..nw).map(|w| net.weight_label(w)));
    columns.extend((0..nu).map(|i| format!("xdot_{}", net.user_id(i))));
    columns.extend((0..nw).map(|w| format!("{}dot", net.weight_label(w))));
    columns.extend((0..nu).map(|i| format!("lambda_{}", net.user_id(i))));
    columns.extend((0..nu).map(|i| format!("g_{}", net.user_id(i))));
    columns.push("V".to_string());
    writeln!(text, "{}", columns.join(",")).unwrap();

    for s in &trajectory.samples {
        let mut fields = vec![num(s.t)];
        fields.extend(s.x.iter().map(|&v| num(v)));
        fields.extend(s.w.iter().map(|&v| num(v)));
        fields.extend(s.x_dot.iter().map(|&v| num(v)));
        fields.extend(s.w_dot.iter().map(|&v| num(v)));
        fields.extend(s.multipliers.iter().map(|&v| num(v)));
        fields.extend(s.g.iter().map(|&v| num(v)));
        fields.push(num(s.loss));
        writeln!(text, "{}", fields.join(",")).unwrap();
    }

    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_limit_csv(path: &Path, rows: &[LimitRow]) -> Result<()> {
    let mut text = String::new();
    writeln!(text, "m_w,m_x,theta,dt,lambda_dev,wdot_dev,velocity_form_dev,failure").unwrap();
    for r in rows {
        writeln!(
            text,
            "{},{},{},{},{},{},{},{}",
            num(r.m_w),
            num(r.m_x),
            num(r.theta),
            num(r.dt),
            num(r.lambda_dev),
            num(r.wdot_dev),
            num(r.velocity_form_dev),
            r.failure.as_deref().unwrap_or("")
        )
        .unwrap();
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn params_block(params: &DynParams, stride: usize) -> String {
    let mut s = String::new();
    writeln!(s, "m_x = {}", params.m_x).unwrap();
    writeln!(s, "m_w = {}", params.m_w).unwrap();
    writeln!(s, "theta = {}", params.theta).unwrap();
    writeln!(s, "gamma = {}", params.gamma).unwrap();
    writeln!(s, "penalty = {}", params.penalty).unwrap();
    writeln!(s, "dt = {}", params.dt).unwrap();
    writeln!(s, "horizon = {}", params.horizon).unwrap();
    writeln!(s, "constraint_tol = {}", params.constraint_tol).unwrap();
    writeln!(s, "stride = {stride}").unwrap();
    s
}

fn network_block(net: &NetworkSpec) -> String {
    let mut s = String::new();
    writeln!(s, "neurons = {}", net.neuron_count()).unwrap();
    writeln!(s, "inputs = {}", net.input_count()).unwrap();
    writeln!(s, "outputs = {}", net.output_count()).unwrap();
    writeln!(
        s,
        "weights = {}",
        (0..net.weight_count()).map(|w| net.weight_label(w)).collect::<Vec<_>>().join(" ")
    )
    .unwrap();
    s
}

pub fn write_run_summary(
    path: &Path,
    exp: &Experiment,
    trajectory: &Trajectory,
    action: &ActionEval,
) -> Result<()> {
    let net = &exp.net;
    let last = trajectory.last();
    let mut s = String::new();
    writeln!(s, "experiment = {}", exp.name).unwrap();
    s.push_str(&network_block(net));
    s.push_str(&params_block(&exp.params, exp.stride));
    writeln!(s, "steps = {}", trajectory.steps).unwrap();
    writeln!(s, "final_t = {}", num(last.t)).unwrap();
    for w in 0..net.weight_count() {
        writeln!(s, "final_{} = {}", net.weight_label(w), num(last.w[w])).unwrap();
    }
    for k in 0..net.output_count() {
        let pos = net.first_output() + k;
        writeln!(s, "final_x_{} = {}", net.user_id(pos), num(last.x[pos])).unwrap();
    }
    writeln!(s, "final_loss = {}", num(last.loss)).unwrap();
    writeln!(s, "max_constraint_residual = {}", num(trajectory.max_constraint_residual)).unwrap();
    writeln!(s, "max_hidden_residual = {}", num(trajectory.max_hidden_residual)).unwrap();
    writeln!(s, "action_total = {}", num(action.total)).unwrap();
    writeln!(s, "action_multiplier_term = {}", num(action.multiplier_term)).unwrap();
    fs::write(path, s).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_limit_summary(
    path: &Path,
    exp: &Experiment,
    gamma: f64,
    rows: &[LimitRow],
) -> Result<()> {
    let monotone = |f: fn(&LimitRow) -> f64| {
        rows.windows(2).all(|p| p[1].failure.is_none() && f(&p[1]) < f(&p[0]))
    };
    let mut s = String::new();
    writeln!(s, "experiment = {}", exp.name).unwrap();
    s.push_str(&network_block(&exp.net));
    writeln!(s, "gamma = {gamma}").unwrap();
    writeln!(s, "mass_pairs = {}", rows.len()).unwrap();
    writeln!(s, "monotone_lambda_dev = {}", monotone(|r| r.lambda_dev)).unwrap();
    writeln!(s, "monotone_wdot_dev = {}", monotone(|r| r.wdot_dev)).unwrap();
    for r in rows {
        writeln!(
            s,
            "m_w = {} -> lambda_dev {} wdot_dev {} velocity_form_dev {}{}",
            num(r.m_w),
            num(r.lambda_dev),
            num(r.wdot_dev),
            num(r.velocity_form_dev),
            r.failure.as_deref().map(|f| format!(" FAILED: {f}")).unwrap_or_default()
        )
        .unwrap();
    }
    fs::write(path, s).with_context(|| format!("cannot write {}", path.display()))
}
