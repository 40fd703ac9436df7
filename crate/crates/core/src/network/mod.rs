//! Cascaded denoiser → deblurrer encoder-decoders with hand-written
//! backpropagation, Adam, and the pretrain/joint training protocol.

pub mod adam;
pub mod arch;
pub mod cascade;
pub mod checkpoint;
pub mod config;
pub mod layers;
pub mod loss;
pub mod scalar;
pub mod tensor;
pub mod train;
pub mod unet;

pub use adam::{adam_step, AdamState};
pub use arch::{NetArch, NetParams};
pub use cascade::{joint_gradients, Cascade};
pub use checkpoint::Checkpoint;
pub use config::{Precision, Stage, TrainConfig};
pub use loss::{loss_deblurring, loss_denoiser, loss_joint};
pub use scalar::Scalar;
pub use tensor::Tensor;
pub use train::{augment, infer, initial_cascade, load_training_samples, train, train_from_manifest, TrainInit, TrainSample};
pub use unet::{backward, forward, predict, ActivationTape};
