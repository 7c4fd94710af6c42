//! Input and supervision signals with analytic first and second time
//! derivatives.
//!
//! The dynamics differentiate the input clamps twice in time, so every
//! signal must expose exact `d1` and `d2` alongside its value. Piecewise
//! constant training schedules are smoothed with a quintic blend whose
//! endpoint derivatives vanish through second order, keeping the whole
//! signal C^2.

use std::path::Path;

use crate::error::{Error, Result};

/// Value and first two time derivatives of one signal channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSample {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl SignalSample {
    pub fn flat(value: f64) -> Self {
        SignalSample { value, d1: 0.0, d2: 0.0 }
    }
}

/// A time-dependent multichannel signal, C^2 in time.
pub trait Signal: Send + Sync {
    fn channels(&self) -> usize;
    fn sample(&self, t: f64, channel: usize) -> SignalSample;

    fn values(&self, t: f64) -> Vec<f64> {
        (0..self.channels()).map(|c| self.sample(t, c).value).collect()
    }
}

/// Quintic smoothstep on `[0, 1]` with vanishing first and second
/// derivatives at both ends: `s(u) = 6u^5 - 15u^4 + 10u^3`.
pub fn smoothstep(u: f64) -> (f64, f64, f64) {
    let u2 = u * u;
    let u3 = u2 * u;
    (
        ((6.0 * u - 15.0) * u + 10.0) * u3,
        ((30.0 * u - 60.0) * u + 30.0) * u2,
        ((120.0 * u - 180.0) * u + 60.0) * u,
    )
}

/// Cyclic piecewise-constant schedule over a list of examples, smoothed at
/// each plateau change.
///
/// Plateau `n` (from 0) occupies `[n tau, (n+1) tau]` and holds example
/// `n mod len`. Each transition at `t = n tau`, `n >= 1`, blends the
/// neighbouring examples over `[n tau - eps, n tau + eps]` with the quintic
/// smoothstep, so values and both derivatives are continuous and the first
/// plateau starts flat (`d1(0) = d2(0) = 0`).
#[derive(Debug, Clone)]
pub struct SignalSchedule {
    rows: Vec<Vec<f64>>,
    channels: usize,
    tau: f64,
    half_width: f64,
}

impl SignalSchedule {
    pub fn new(rows: Vec<Vec<f64>>, tau: f64, half_width: f64) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if tau <= 0.0 {
            return Err(Error::NonPositiveParameter { name: "tau", value: tau });
        }
        if half_width <= 0.0 || half_width >= tau / 2.0 {
            return Err(Error::InvalidTransitionWidth { half_width, tau });
        }
        let channels = rows[0].len();
        if channels == 0 || rows.iter().any(|r| r.len() != channels) {
            return Err(Error::DimensionMismatch {
                expected: channels,
                got: rows.iter().map(|r| r.len()).find(|&l| l != channels).unwrap_or(0),
            });
        }
        Ok(SignalSchedule { rows, channels, tau, half_width })
    }

    pub fn example_count(&self) -> usize {
        self.rows.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Full period of the cyclic schedule.
    pub fn period(&self) -> f64 {
        self.tau * self.rows.len() as f64
    }

    /// Example held on plateau `n` (0-based).
    pub fn example(&self, plateau: usize) -> &[f64] {
        &self.rows[plateau % self.rows.len()]
    }

    /// Midpoints of the plateaus numbered `first..` that fit below `horizon`.
    /// Midpoints sit maximally far from both transitions.
    pub fn plateau_midpoints(&self, first: usize, horizon: f64) -> Vec<f64> {
        (first..)
            .map(|n| (n as f64 + 0.5) * self.tau)
            .take_while(|&t| t <= horizon)
            .collect()
    }
}

impl Signal for SignalSchedule {
    fn channels(&self) -> usize {
        self.channels
    }

    fn sample(&self, t: f64, channel: usize) -> SignalSample {
        let t = t.max(0.0);
        let n = (t / self.tau).floor() as usize;
        let cur = self.example(n)[channel];
        let next_edge = (n as f64 + 1.0) * self.tau;
        let prev_edge = n as f64 * self.tau;

        let blend = |a: f64, b: f64, edge: f64| {
            let u = (t - (edge - self.half_width)) / (2.0 * self.half_width);
            let (s, s1, s2) = smoothstep(u);
            let d = b - a;
            let hw2 = 2.0 * self.half_width;
            SignalSample {
                value: a + d * s,
                d1: d * s1 / hw2,
                d2: d * s2 / (hw2 * hw2),
            }
        };

        if t > next_edge - self.half_width {
            blend(cur, self.example(n + 1)[channel], next_edge)
        } else if n > 0 && t < prev_edge + self.half_width {
            blend(self.example(n - 1)[channel], cur, prev_edge)
        } else {
            SignalSample::flat(cur)
        }
    }
}

/// Closed-form single-channel signals used by the experiment presets.
#[derive(Debug, Clone)]
pub enum AnalyticSignal {
    /// Constant vector signal; one channel per entry.
    Constant(Vec<f64>),
    /// `scale * (1 - (1 + t) e^{-t})`: rises from 0 to `scale` with zero
    /// initial slope, as consistent initial data requires.
    SaturatingRise { scale: f64 },
    /// `scale * (1 - r(t))` where `r` is the identity ramp started smoothly:
    /// `r(t) = t` for `t >= onset`, with a quartic lead-in giving
    /// `r(0) = r'(0) = 0` and a C^2 join at `onset`.
    SmoothedRamp { scale: f64, onset: f64 },
}

impl Signal for AnalyticSignal {
    fn channels(&self) -> usize {
        match self {
            AnalyticSignal::Constant(v) => v.len(),
            _ => 1,
        }
    }

    fn sample(&self, t: f64, channel: usize) -> SignalSample {
        match self {
            AnalyticSignal::Constant(v) => SignalSample::flat(v[channel]),
            AnalyticSignal::SaturatingRise { scale } => {
                let e = (-t).exp();
                SignalSample {
                    value: scale * (1.0 - (1.0 + t) * e),
                    d1: scale * t * e,
                    d2: scale * (1.0 - t) * e,
                }
            }
            AnalyticSignal::SmoothedRamp { scale, onset } => {
                if t >= *onset {
                    SignalSample {
                        value: scale * (1.0 - t),
                        d1: -scale,
                        d2: 0.0,
                    }
                } else {
                    // r(t) = onset * p(t/onset), p(u) = 3u^2 - 3u^3 + u^4:
                    // p(0) = p'(0) = 0, p(1) = p'(1) = 1, p''(1) = 0
                    let u = t / onset;
                    let p = ((u - 3.0) * u + 3.0) * u * u;
                    let p1 = ((4.0 * u - 9.0) * u + 6.0) * u;
                    let p2 = (12.0 * u - 18.0) * u + 6.0;
                    SignalSample {
                        value: scale * (1.0 - onset * p),
                        d1: -scale * p1,
                        d2: -scale * p2 / onset,
                    }
                }
            }
        }
    }
}

/// A training set: input rows and matching target rows.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl Dataset {
    /// Reads a comma-separated text file with one example per row:
    /// `input_cols` input columns followed by `target_cols` target columns.
    /// The first non-empty line is a header and is skipped; `#` lines are
    /// comments.
    pub fn load(path: &Path, input_cols: usize, target_cols: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, input_cols, target_cols)
    }

    pub fn parse(text: &str, input_cols: usize, target_cols: usize) -> Result<Self> {
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        let mut header_seen = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != input_cols + target_cols {
                return Err(Error::DatasetFormat {
                    line: lineno + 1,
                    message: format!(
                        "expected {} columns, found {}",
                        input_cols + target_cols,
                        fields.len()
                    ),
                });
            }
            let mut row = Vec::with_capacity(fields.len());
            for f in &fields {
                row.push(f.parse::<f64>().map_err(|e| Error::DatasetFormat {
                    line: lineno + 1,
                    message: format!("bad number {f:?}: {e}"),
                })?);
            }
            targets.push(row.split_off(input_cols));
            inputs.push(row);
        }
        if inputs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Dataset { inputs, targets })
    }

    /// Builds the input and supervision schedules on a shared time grid.
    pub fn schedules(&self, tau: f64, half_width: f64) -> Result<(SignalSchedule, SignalSchedule)> {
        Ok((
            SignalSchedule::new(self.inputs.clone(), tau, half_width)?,
            SignalSchedule::new(self.targets.clone(), tau, half_width)?,
        ))
    }
}
