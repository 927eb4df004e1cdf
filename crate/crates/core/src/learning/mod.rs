//! Offline pipelines: flight-record datasets, airfoil-parameter
//! identification from sensed forces, residual-network training, and
//! residual inference.

mod identify;
mod net;
mod record;
mod train;

pub use identify::{identify_params, IdentificationResult, IdentifyConfig, NelderMead};
pub use net::{Linear, NetMeta, Normalization, ResidualNet, INPUT_DIM};
pub use record::{
    sensed_force, DatasetManifest, EpisodeData, EpisodeMeta, FlightRecord, RECORD_COLUMNS,
};
pub use train::{
    assemble_arrays, gradient_check, input_vector, input_vector_parts, train_residual,
    NominalModel, TrainConfig, TrainReport,
};

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("identification hit the iteration cap; best cost {best_cost:.6}")]
    NotConverged { best_cost: f64 },
    #[error("training loss became non-finite at epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("dataset is empty or malformed: {0}")]
    BadDataset(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
