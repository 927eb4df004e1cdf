//! Scenario definitions, the end-to-end episode runner, metrics, controller
//! comparison, and the wall-distance disturbance sweep.

mod compare;
mod runner;
mod sweep;
mod trajectory;

pub use compare::{compare_controllers, CompareEntry, CompareFamily, CompareReport, RankRow};
pub use runner::{
    run_scenario, DivergedInfo, EpisodeArtifacts, MetricsReport, Scenario, TableAero,
};
pub use sweep::{wall_distance_sweep, SweepReport, SweepRow};
pub use trajectory::{contact_circle_x, Trajectory, TrajectorySpec};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("missing artifact: {0}")]
    MissingArtifact(std::path::PathBuf),
    #[error(transparent)]
    Control(#[from] crate::control::ControlError),
    #[error(transparent)]
    Learn(#[from] crate::learning::LearnError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad scenario: {0}")]
    BadScenario(String),
}
