//! Unpaired training of a single generator/discriminator pair. The
//! clean-to-degraded direction is the known physical operator, never a
//! learned network.

mod config;
mod physics;
mod run;
mod step;

pub use config::{Acceleration, Seeds, TrainConfig};
pub use physics::{apply_operator, draw_operator, forward_degrade_mask, OperatorDraw};
pub use run::{train, EpochRecord, StepRecord, TrainLog, TrainOutput, DISCRIMINATOR_FILE, GENERATOR_FILE, LOG_FILE};
pub(crate) use run::csv_error;
pub use step::{
    cycle_loss, cycle_loss_on_tape, discriminator_update, generator_update, grids_to_tensor, lsgan_from_scores,
    lsgan_losses, tensor_to_grids, train_step, GeneratorUpdate, StepLosses, TrainState, UnpairedBatch,
};
