//! Joint objective, SGD with an exponential learning-rate schedule,
//! periodic semi-orthogonal projection and the epoch loop.

pub mod losses;
pub mod model;
pub mod trainer;

pub use losses::{ce_loss, joint_loss, joint_value, lr_at};
pub use model::{phone_inventory, prepare_corpus, train_phone_lm, JointModel, PreparedUtterance, UtteranceLoss};
pub use trainer::{metrics_csv, run_training, steps_per_epoch, LossSums, MetricsRow, Trainer, TrainingReport, METRICS_HEADER};
