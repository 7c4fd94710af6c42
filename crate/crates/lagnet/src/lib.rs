//! Learning as constrained second-order dynamics.
//!
//! A feedforward network is represented by one holonomic constraint per
//! neuron: inputs are clamped to an external signal and every computed
//! neuron is tied to the activation of its weighted input sum. Neuron
//! values and weights evolve under damped second-order equations of motion
//! whose Lagrange multipliers are solved pointwise from a positive definite
//! Gram system, so the constraints hold along the whole trajectory instead
//! of only at convergence. In the stiff limit (vanishing masses, mass ratio
//! to zero, damping scaled as `gamma / m_w`) the rescaled multipliers become
//! the classic backpropagation delta errors and the weight flow becomes
//! plain gradient descent; [`bp`] holds the references and the sweep that
//! measures the collapse.
//!
//! Modules:
//!
//! * [`network`] / [`constraint`] — network structure, constraint residuals
//!   and derivatives
//! * [`signal`] — C^2 input and supervision signals, smoothed schedules
//! * [`gram`] — multiplier system assembly, SPD and triangular solves
//! * [`dynamics`] — equations of motion, RK4 integration, action diagnostic
//! * [`bp`] — backpropagation oracle and the stiff-limit harness
//! * [`presets`] — ready-made experiments
//! * [`verify`] — seeded invariant suite

pub mod activation;
pub mod batch;
pub mod bp;
pub mod constraint;
pub mod dynamics;
pub mod error;
pub mod gram;
pub mod network;
pub mod presets;
pub mod signal;
pub mod verify;

pub use activation::{Activation, ActivationEval};
pub use constraint::{constraint_jacobian_x, eval_constraints, ConstraintEval};
pub use dynamics::{
    action_eval, el_acceleration, integrate, loss_and_gradients, make_initial_state, ActionEval,
    DynParams, DynState, LossEval, Trajectory, TrajectorySample,
};
pub use error::{Error, Result};
pub use gram::{assemble_gram, assemble_rhs, solve_spd, solve_triangular_gram, GramSystem};
pub use network::{build_network, Edge, NetworkDescription, NetworkSpec, Neuron};
pub use signal::{AnalyticSignal, Dataset, Signal, SignalSample, SignalSchedule};
