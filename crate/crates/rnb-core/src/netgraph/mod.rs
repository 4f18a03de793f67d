//! Network ingestion, float-reference and photonic inference, and toy-scale
//! training with shared-weight gradient accumulation.

mod conv;
mod data;
mod desc;
mod forward;
mod train;

pub use conv::{conv_output_dims, direct_conv2d, lower_conv_im2col};
pub use data::{blobs, read_idx_images, read_idx_labels, Dataset};
pub use desc::{
    parse_netdesc, parse_reuse_shorthand, Block, Granularity, Layer, LayerPos, MemberRef,
    NetworkDesc, ReuseSpec,
};
pub use forward::{
    compile, evaluate, forward, forward_batch, forward_float, forward_photonic, CompiledNet,
    EngineKind, LayerDeviation, PhotonicOutcome, PhotonicSession,
};
pub use train::{
    init_weights, loss_and_gradients, toy_train, trainable_parameter_count, Loss, TrainConfig,
    TrainMetrics,
};
