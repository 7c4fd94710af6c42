//! Experiment configuration: a TOML file selecting a preset or describing a
//! custom experiment, plus command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nalgebra::DVector;
use serde::Deserialize;

use lagnet::presets::{Experiment, ExperimentKind};
use lagnet::signal::{AnalyticSignal, Dataset};
use lagnet::{Activation, NetworkDescription};

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// `fig1a | fig1b | fig2a | fig2b | limit | custom` (default `custom`).
    pub preset: Option<String>,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub output: OutputSection,
    pub network: Option<NetworkSection>,
    pub signal: Option<SignalSection>,
    #[serde(default)]
    pub supervision: SupervisionSection,
    #[serde(default)]
    pub initial: InitialSection,
}

/// Every field optional: presets are overridden field by field, custom
/// experiments fall back to defaults.
#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub m_x: Option<f64>,
    pub m_w: Option<f64>,
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
    pub penalty: Option<f64>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub constraint_tol: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub stride: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    /// Number of input neurons; they take ids 1..=inputs.
    pub inputs: usize,
    /// Computed neurons in declaration order; ids continue after the inputs.
    pub neurons: Vec<NeuronEntry>,
    /// Weighted edges as 1-based `[to, from]` pairs.
    pub edges: Vec<[usize; 2]>,
    /// 1-based ids of the output neurons.
    pub outputs: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronEntry {
    pub activation: String,
    /// Adds an edge from a shared constant-one clamp to this neuron. Bias
    /// edges are appended after the explicit edge list, in neuron order.
    #[serde(default)]
    pub bias: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    /// Delimited text file: header line, then one example per row with the
    /// input columns followed by the target columns.
    pub dataset: PathBuf,
    pub tau: f64,
    pub epsilon: f64,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SupervisionSection {
    /// Constant supervision values; defaults to the dataset target columns.
    pub constant: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// Initial weights: explicit edges first, then bias edges. Defaults to
    /// zeros.
    pub weights: Option<Vec<f64>>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub penalty: Option<f64>,
}

pub fn load(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let config: Config = toml::from_str(&text)
        .with_context(|| format!("cannot parse config {}", path.display()))?;
    Ok(config)
}

fn parse_activation(name: &str) -> Result<Activation> {
    match name {
        "identity" | "linear" => Ok(Activation::Identity),
        "tanh" => Ok(Activation::Tanh),
        other => bail!("unknown activation {other:?}; expected identity or tanh"),
    }
}

fn build_custom(config: &Config, base_dir: &Path) -> Result<Experiment> {
    let net_section = config
        .network
        .as_ref()
        .context("custom experiments need a [network] section")?;
    let sig_section = config
        .signal
        .as_ref()
        .context("custom experiments need a [signal] section")?;

    let mut desc = NetworkDescription::new(net_section.inputs);
    let mut needs_bias = Vec::new();
    for entry in &net_section.neurons {
        let id = desc.unit(parse_activation(&entry.activation)?);
        if entry.bias {
            needs_bias.push(id);
        }
    }
    let declared = net_section.inputs + net_section.neurons.len();
    let to_internal = |id: usize| -> Result<usize> {
        if id == 0 || id > declared {
            bail!("neuron id {id} out of range 1..={declared}");
        }
        Ok(id - 1)
    };
    for &[to, from] in &net_section.edges {
        desc.edge(to_internal(to)?, to_internal(from)?);
    }
    if !needs_bias.is_empty() {
        let bias = desc.bias();
        for id in needs_bias {
            desc.edge(id, bias);
        }
    }
    for &o in &net_section.outputs {
        desc.output(to_internal(o)?);
    }
    let net = desc.build()?;

    let dataset_path = if sig_section.dataset.is_absolute() {
        sig_section.dataset.clone()
    } else {
        base_dir.join(&sig_section.dataset)
    };
    let dataset = Dataset::load(&dataset_path, net.input_count(), net.output_count())?;
    let (input_schedule, target_schedule) = dataset.schedules(sig_section.tau, sig_section.epsilon)?;

    let target: Box<dyn lagnet::Signal> = match &config.supervision.constant {
        Some(values) => {
            if values.len() != net.output_count() {
                bail!(
                    "supervision.constant has {} entries, network has {} outputs",
                    values.len(),
                    net.output_count()
                );
            }
            Box::new(AnalyticSignal::Constant(values.clone()))
        }
        None => Box::new(target_schedule),
    };

    let weights = match &config.initial.weights {
        Some(w) => {
            if w.len() != net.weight_count() {
                bail!(
                    "initial.weights has {} entries, network has {} weights",
                    w.len(),
                    net.weight_count()
                );
            }
            DVector::from_vec(w.clone())
        }
        None => DVector::zeros(net.weight_count()),
    };

    Ok(Experiment {
        name: "custom".into(),
        net,
        input: Box::new(input_schedule),
        target,
        params: lagnet::DynParams::default(),
        initial_weights: weights,
        stride: 100,
        kind: ExperimentKind::Trajectory,
    })
}

/// Resolves the configuration into a runnable experiment: preset or custom
/// base, then file-level parameter settings, then flag overrides.
pub fn resolve(config: &Config, base_dir: &Path, overrides: Overrides) -> Result<Experiment> {
    let preset_name = config.preset.as_deref().unwrap_or("custom");
    let mut exp = if preset_name == "custom" {
        build_custom(config, base_dir)?
    } else {
        Experiment::from_name(preset_name)?
    };

    let p = &config.params;
    let params = &mut exp.params;
    params.m_x = p.m_x.unwrap_or(params.m_x);
    params.m_w = p.m_w.unwrap_or(params.m_w);
    params.theta = p.theta.unwrap_or(params.theta);
    params.gamma = p.gamma.unwrap_or(params.gamma);
    params.penalty = p.penalty.unwrap_or(params.penalty);
    params.dt = p.dt.unwrap_or(params.dt);
    params.horizon = p.horizon.unwrap_or(params.horizon);
    params.constraint_tol = p.constraint_tol.unwrap_or(params.constraint_tol);

    params.dt = overrides.dt.unwrap_or(params.dt);
    params.horizon = overrides.horizon.unwrap_or(params.horizon);
    params.penalty = overrides.penalty.unwrap_or(params.penalty);
    params.validate()?;

    if let Some(stride) = config.output.stride {
        exp.stride = stride.max(1);
    }
    Ok(exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_with_overrides() {
        let config: Config = toml::from_str(
            "preset = \"fig1a\"\n[params]\ndt = 0.01\n[output]\nstride = 7\n",
        )
        .unwrap();
        let exp = resolve(
            &config,
            Path::new("."),
            Overrides { horizon: Some(1.5), ..Overrides::default() },
        )
        .unwrap();
        assert_eq!(exp.params.dt, 0.01);
        assert_eq!(exp.params.horizon, 1.5); // flag beats preset
        assert_eq!(exp.stride, 7);
        assert_eq!(exp.params.theta, 1.0); // untouched preset value
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Config>("presett = \"fig1a\"\n").is_err());
    }

    #[test]
    fn custom_requires_sections() {
        let config: Config = toml::from_str("preset = \"custom\"\n").unwrap();
        let err = resolve(&config, Path::new("."), Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("[network]"));
    }
}
