//! Simulation and optimization toolkit for joint cell load balancing and
//! throughput maximization in a small cellular network.
//!
//! The network side models FD-MIMO tilt selection, A3 handover with cell
//! individual offsets, CQI-based rates and per-cell PRB scheduling over
//! mobile users. The control side provides a multi-objective deterministic
//! policy-gradient agent with one critic per reward dimension, scalarized
//! single-critic baselines, and brute-force / heuristic static solvers for
//! frozen snapshots.

pub mod env;
pub mod error;
pub mod experiment;
pub mod geom;
pub mod mobility;
pub mod neural;
pub mod pdpg;
pub mod radio;
pub mod rsrp;
pub mod seed;
pub mod staticopt;

pub use env::{Action, EnvConfig, NetworkEnv, RewardVector, State};
pub use error::CoreError;
pub use experiment::{
    compare_runs, evaluate_checkpoint, run_experiment, AgentSpec, ExperimentConfig, MapSpec,
    RunArtifacts, RunSummary,
};
pub use geom::Point;
pub use mobility::{MobilityConfig, MobilityModel, MobilityState};
pub use neural::{Activation, Adam, Mlp, MlpSpec};
pub use pdpg::{AgentMode, PdpgAgent, PdpgConfig, ReplayBuffer, Transition};
pub use radio::{AssociationMatrix, CioMatrix, CqiTable, RadioConfig};
pub use rsrp::{MapGenConfig, RsrpTensor, TiltDictionary};
pub use staticopt::{StaticInstance, StaticSolution, StaticSolver, TiltComboSet};
