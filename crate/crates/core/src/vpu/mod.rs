//! Vision processing unit: supervisor, twelve workers, kernels and the
//! memory-recovery and N-modular schemes.

mod image;
mod kernels;
mod node;

pub use image::{decode_pixels, encode_pixels, error_rate, Image, Plane};
pub use kernels::{binning2d, conv2d, partition_workload, stripe_spans, Kernel, Tile, BIN_FACTOR, CONV_KERNEL};
pub use node::{
    vote, FtMode, NmrConfig, Redispatch, SharedWord, TimingReport, VpuConfig, VpuReport, VpuState, VpuTiming, WorkerCore,
    WorkerStatus, CMX_BYTES, WORKERS,
};
