//! Discrete-phase RIS beamforming as Ising optimization.
//!
//! The crate builds quadratic spin problems from a line-of-sight BS → RIS →
//! UT channel, rewrites the row/column ("line") controlled variant as a
//! fourth-order problem, and reduces it back to quadratic form either with
//! penalty-weighted auxiliary spins or with the penalty-free two-step fit.
//! Annealing, exhaustive, greedy and continuous-phase solvers are included,
//! along with the experiment harness behind the `risline` CLI.

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod higher_order;
pub mod ising;
pub mod quadratize;
pub mod solvers;
pub mod two_step;

pub use error::{Error, Result};
pub use geometry::{
    build_scene, effective_objective, element_positions, los_channel, mrt_beamformer, received_power, Channel,
    PhaseLevel, PhaseVector, Scene, SceneConfig,
};
pub use higher_order::{assemble_line_phases, higher_order_energy, line_fourth_order, HigherOrderProblem, LineControl};
pub use ising::{coupling_from_channel, ising_energy, quantize_couplings, spins_to_phases, IsingProblem, Levels, Sense, Spin};
pub use quadratize::{count_variables, standard_quadratize, tune_penalty, Gadget, QuadratizationResult, ReductionMethod};
pub use solvers::{solve_dispatch, SolveResult, SolverSpec};
pub use two_step::{two_step_pipeline, two_step_second_problem, SecondStepSolver, TwoStepOutcome};
