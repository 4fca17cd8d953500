//! Analysis, design and simulation of phase-agent networks on the circle
//! coupled through node-wise monotone barrier functions.
//!
//! Each agent obeys `θ̇_i = ω_i + f_i(ν_i + φ_i)` with
//! `ν_i = Σ_j α_ij (θ_j − θ_i)` over its in-neighbours. The crate enumerates
//! the phase-locked patterns such a network can settle into, designs
//! couplings that realize prescribed patterns, and integrates the flow.

pub mod angle;
pub mod coupling;
pub mod design;
pub mod exact;
pub mod graph;
mod lp;
pub mod model;
pub mod pattern;
pub mod presets;
pub mod simulation;

pub use coupling::{BarrierFunction, BarrierSpec, CouplingError};
pub use design::{DesignError, DesignSolution, TargetPattern};
pub use graph::{Digraph, GraphError, GroundedSolver, LaplacianMatrix, LeftNullVector};
pub use model::{ModelError, NetworkModel};
pub use pattern::{
    CentralPattern, PartitionAtlas, PatternAnalyzer, PatternClass, PatternError, SequenceIndex,
};
pub use simulation::{
    detect_pattern, integrate, linearization_check, verify_bounded_input, verify_invariance, DetectedPattern,
    KickSchedule, SimulationError, Trajectory,
};
