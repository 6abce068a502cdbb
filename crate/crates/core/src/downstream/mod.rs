//! The linear downstream probe and everything needed to train and apply it.

mod checkpoint;
mod gop;
mod loss;
mod optim;
mod probe;
mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint};
pub use gop::{gop_score, read_senone_map, GopVariant, SenoneMap, LOG_FLOOR};
pub use loss::{md_loss, md_loss_sum, pr_loss, pr_loss_sum, LossOutput};
pub use optim::{AdamState, LrDecay, OptimizerConfig, OptimizerKind};
pub use probe::{phone_score, LinearProbe, PhoneScore, ProbeGrads};
pub use train::{train, Approach, BatchUnit, EpochRecord, TrainConfig, TrainExample, TrainOutcome};
