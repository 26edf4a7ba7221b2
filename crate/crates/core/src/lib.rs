//! Time-optimal transport of a classical harmonic oscillator in a wagon.
//!
//! A mass on a spring sits in a wagon whose acceleration is bounded by
//! `a_max`. The wagon must travel a distance `d`, starting and ending at rest
//! with the oscillator at rest in its equilibrium position. This crate
//! computes the time-optimal bang-bang protocols for that problem, both for a
//! fixed oscillator frequency and for a frequency that may be switched inside
//! a band `[Ω−, Ω+]`, and provides the tooling to check them:
//!
//! * [`dynamics`]: exact closed-form propagation under piecewise-constant
//!   control, boundary diagnostics and unit scaling.
//! * [`fixed`]: the analytic solver for a fixed frequency, plus sweeps.
//! * [`variable`]: region classification and solver for a frequency band.
//! * [`pmp`]: numerical certification against the Pontryagin maximum
//!   principle (switching law, Hamiltonian constancy, frequency switching).
//! * [`oracle`]: brute-force searches that try to beat the analytic times.
//!
//! Everything is a pure function of its inputs and deterministic.

pub mod dynamics;
pub mod error;
pub mod fixed;
pub mod oracle;
pub mod pmp;
pub mod roots;
pub mod variable;

pub use dynamics::{
    boundary_residual, propagate_segment, simulate, wagon_velocity_extrema, BoundaryReport,
    PhaseState, Protocol, Scaling, Segment, Trajectory, VelocityExtrema,
};
pub use error::{Error, Result};
pub use fixed::{solve_fixed, FixedSolution, TransportParams};
pub use variable::{solve_variable, Band, RegionClass, SequenceKind, VariableSolution};

