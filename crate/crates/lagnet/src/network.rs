//! Feedforward network structure: neurons, weighted edges, topological order.
//!
//! Every neuron carries exactly one constraint. Clamped neurons (inputs and
//! bias nodes) are tied to an external value; unit neurons are tied to the
//! activation of their weighted input sum. Storing one constraint per neuron
//! makes the constraint Jacobian with respect to the neuron values unit
//! lower triangular in the topological order, which keeps the Gram system
//! positive definite by construction.

use std::collections::BinaryHeap;
use std::cmp::Reverse;

use nalgebra::DVector;

use crate::activation::Activation;
use crate::error::{Error, Result};

/// One node of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neuron {
    /// Clamped to channel `channel` of the input signal.
    Input { channel: usize },
    /// Clamped to the constant 1; lets ordinary edges act as bias terms.
    Bias,
    /// Computed neuron: value tied to `activation` of the weighted input sum.
    Unit { activation: Activation },
}

impl Neuron {
    pub fn is_clamped(self) -> bool {
        !matches!(self, Neuron::Unit { .. })
    }
}

/// A weighted edge in topological coordinates, `from` strictly before `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub to: usize,
    pub from: usize,
}

/// User-facing description of a network, consumed by [`build_network`].
///
/// Neuron ids are indices into `neurons` in the order they were declared;
/// edges and outputs refer to those ids.
#[derive(Debug, Clone, Default)]
pub struct NetworkDescription {
    pub neurons: Vec<Neuron>,
    pub edges: Vec<(usize, usize)>,
    pub outputs: Vec<usize>,
}

impl NetworkDescription {
    /// Starts a description with `inputs` input neurons on channels `0..inputs`.
    pub fn new(inputs: usize) -> Self {
        NetworkDescription {
            neurons: (0..inputs).map(|channel| Neuron::Input { channel }).collect(),
            edges: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Appends a computed neuron and returns its id.
    pub fn unit(&mut self, activation: Activation) -> usize {
        self.neurons.push(Neuron::Unit { activation });
        self.neurons.len() - 1
    }

    /// Appends a constant-one clamp and returns its id.
    pub fn bias(&mut self) -> usize {
        self.neurons.push(Neuron::Bias);
        self.neurons.len() - 1
    }

    /// Adds a weighted edge `from -> to`.
    pub fn edge(&mut self, to: usize, from: usize) -> &mut Self {
        self.edges.push((to, from));
        self
    }

    /// Marks a neuron as one of the network outputs.
    pub fn output(&mut self, id: usize) -> &mut Self {
        self.outputs.push(id);
        self
    }

    pub fn build(&self) -> Result<NetworkSpec> {
        build_network(self)
    }
}

/// Immutable, validated network. Coordinates follow the stored topological
/// order: clamped neurons first, outputs last. Weight slots follow the edge
/// list sorted by `(to, from)` in topological coordinates.
#[derive(Debug, Clone)]
pub struct NetworkSpec {
    neurons: Vec<Neuron>,
    edges: Vec<Edge>,
    incoming: Vec<Vec<(usize, usize)>>,
    outgoing: Vec<Vec<(usize, usize)>>,
    /// user id of the neuron at each topological position
    user_ids: Vec<usize>,
    input_count: usize,
    clamped_count: usize,
    output_count: usize,
}

impl NetworkSpec {
    /// Number of neurons (and of constraints).
    pub fn neuron_count(&self) -> usize {
        self.neurons.len()
    }

    /// Number of signal-driven input neurons (bias clamps not included).
    pub fn input_count(&self) -> usize {
        self.input_count
    }

    /// Number of clamped neurons: inputs plus bias nodes.
    pub fn clamped_count(&self) -> usize {
        self.clamped_count
    }

    pub fn output_count(&self) -> usize {
        self.output_count
    }

    pub fn weight_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neuron(&self, pos: usize) -> Neuron {
        self.neurons[pos]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Weight slots feeding neuron `pos`, as `(weight index, source position)`.
    pub fn incoming(&self, pos: usize) -> &[(usize, usize)] {
        &self.incoming[pos]
    }

    /// Weight slots leaving neuron `pos`, as `(weight index, target position)`.
    pub fn outgoing(&self, pos: usize) -> &[(usize, usize)] {
        &self.outgoing[pos]
    }

    /// Topological position of the first output; outputs occupy the tail.
    pub fn first_output(&self) -> usize {
        self.neurons.len() - self.output_count
    }

    /// 1-based user id of the neuron at a topological position.
    pub fn user_id(&self, pos: usize) -> usize {
        self.user_ids[pos] + 1
    }

    /// Column label for a weight, `w_<to>_<from>` with 1-based user ids.
    pub fn weight_label(&self, w: usize) -> String {
        let e = self.edges[w];
        format!("w_{}_{}", self.user_id(e.to), self.user_id(e.from))
    }

    /// Output components of a full activation vector.
    pub fn outputs_of<'a>(&self, x: &'a DVector<f64>) -> nalgebra::DVectorView<'a, f64> {
        x.rows(self.first_output(), self.output_count)
    }

    /// Weighted input sum of the unit at `pos`.
    pub fn input_sum(&self, pos: usize, x: &DVector<f64>, w: &DVector<f64>) -> f64 {
        self.incoming[pos]
            .iter()
            .map(|&(wi, from)| w[wi] * x[from])
            .sum()
    }

    /// Solves the constraints for the neuron values given clamped inputs.
    ///
    /// Proceeds in topological order, so the returned vector zeroes every
    /// constraint residual up to floating-point rounding.
    pub fn forward_pass(&self, input: &[f64], w: &DVector<f64>) -> Result<DVector<f64>> {
        if input.len() != self.input_count {
            return Err(Error::DimensionMismatch {
                expected: self.input_count,
                got: input.len(),
            });
        }
        if w.len() != self.edges.len() {
            return Err(Error::DimensionMismatch {
                expected: self.edges.len(),
                got: w.len(),
            });
        }
        let mut x = DVector::zeros(self.neurons.len());
        for pos in 0..self.neurons.len() {
            x[pos] = match self.neurons[pos] {
                Neuron::Input { channel } => input[channel],
                Neuron::Bias => 1.0,
                Neuron::Unit { activation } => activation.eval(self.input_sum(pos, &x, w)).value,
            };
        }
        Ok(x)
    }
}

/// Validates a description and computes a topological order with clamped
/// neurons first and outputs last.
pub fn build_network(desc: &NetworkDescription) -> Result<NetworkSpec> {
    let n = desc.neurons.len();

    // input channels must be 0..omega, each exactly once
    let mut channels: Vec<usize> = desc
        .neurons
        .iter()
        .filter_map(|n| match n {
            Neuron::Input { channel } => Some(*channel),
            _ => None,
        })
        .collect();
    let input_count = channels.len();
    channels.sort_unstable();
    if channels.iter().enumerate().any(|(i, &c)| i != c) {
        return Err(Error::BadInputChannels {
            expected: input_count,
        });
    }

    let mut seen = std::collections::HashSet::new();
    let mut in_deg = vec![0usize; n];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(to, from) in &desc.edges {
        if to >= n || from >= n {
            return Err(Error::DanglingEdge { to, from });
        }
        if !seen.insert((to, from)) {
            return Err(Error::DuplicateEdge { to, from });
        }
        if desc.neurons[to].is_clamped() {
            return Err(Error::EdgeIntoClamped { to, from });
        }
        if to == from {
            return Err(Error::CycleDetected);
        }
        in_deg[to] += 1;
        adj[from].push(to);
    }

    let mut is_output = vec![false; n];
    for &o in &desc.outputs {
        if o >= n {
            return Err(Error::OutputIndexOutOfRange { index: o });
        }
        if desc.neurons[o].is_clamped() {
            return Err(Error::ClampedOutput { index: o });
        }
        is_output[o] = true;
    }

    // Kahn's algorithm; the ready set is keyed (class, user id) so clamped
    // neurons surface first, outputs only when nothing else is ready, and
    // the order is deterministic.
    let class = |id: usize| -> usize {
        if desc.neurons[id].is_clamped() {
            0
        } else if is_output[id] {
            2
        } else {
            1
        }
    };
    let mut ready: BinaryHeap<Reverse<(usize, usize)>> = (0..n)
        .filter(|&i| in_deg[i] == 0)
        .map(|i| Reverse((class(i), i)))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse((_, id))) = ready.pop() {
        order.push(id);
        for &next in &adj[id] {
            in_deg[next] -= 1;
            if in_deg[next] == 0 {
                ready.push(Reverse((class(next), next)));
            }
        }
    }
    if order.len() != n {
        return Err(Error::CycleDetected);
    }

    let output_count = desc.outputs.len();
    for (pos, &id) in order.iter().enumerate() {
        if is_output[id] && pos < n - output_count {
            return Err(Error::OutputNotTerminal { index: id });
        }
    }

    let mut topo_of = vec![0usize; n];
    for (pos, &id) in order.iter().enumerate() {
        topo_of[id] = pos;
    }
    let mut edges: Vec<Edge> = desc
        .edges
        .iter()
        .map(|&(to, from)| Edge {
            to: topo_of[to],
            from: topo_of[from],
        })
        .collect();
    edges.sort_unstable_by_key(|e| (e.to, e.from));

    let mut incoming: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut outgoing: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (w, e) in edges.iter().enumerate() {
        incoming[e.to].push((w, e.from));
        outgoing[e.from].push((w, e.to));
    }

    let clamped_count = desc.neurons.iter().filter(|n| n.is_clamped()).count();
    Ok(NetworkSpec {
        neurons: order.iter().map(|&id| desc.neurons[id]).collect(),
        edges,
        incoming,
        outgoing,
        user_ids: order,
        input_count,
        clamped_count,
        output_count,
    })
}
