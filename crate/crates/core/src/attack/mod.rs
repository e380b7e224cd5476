//! The adversarial logo optimization: losses, optimizer and training loop.

mod checkpoint;
mod loss;
mod train;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, region_hash, save_checkpoint, snapshot_image,
    snapshot_strip, CheckpointHeader,
};
pub use loss::{
    loss_dis, loss_total, loss_tv, loss_tv_2d, sgd_step, step_decay, tv_2d, DisLoss, LossWeights,
    REFERENCE_IMAGE_SIZE,
};
pub use train::{
    dis_gradient, total_gradient, train_attack, AttackRun, AttackScene, DistanceMode, EpochStats, ItemGradient,
    TrainPlan,
};
