//! Deep joint image filtering.
//!
//! A joint filter restores a degraded *target* image (a low-resolution or
//! noisy depth map, say) using structure from a co-registered *guidance*
//! image (typically RGB). The learned filter here is a small convolutional
//! network made of three sub-networks: a target branch and a guidance branch
//! extract features, a fusion branch maps their concatenation to a residual,
//! and a skip connection adds the target back so the network only has to
//! predict the correction.
//!
//! The crate contains everything needed to train and use that network from
//! scratch on the CPU:
//!
//! * [`tensor`] and [`conv`]: a dense `channels × height × width` tensor with
//!   convolution and ReLU, forward and backward, plus [`gradcheck`].
//! * [`net`]: the three-branch network, its configuration space and the
//!   binary checkpoint format.
//! * [`train`]: training-pair synthesis, patch sampling, the squared loss and
//!   SGD with momentum.
//! * [`baseline`]: nearest-neighbour decimation, bicubic resizing, joint
//!   bilateral upsampling and the guided filter.
//! * [`eval`]: RMSE with per-dataset unit and mask conventions, dataset
//!   aggregation and run-time benchmarking.
//! * [`apply`]: upsampling, denoising, rolling self-guided texture removal and
//!   feature-map dumps.
//! * [`io`]: Netpbm images and JSON-Lines manifests; [`cli`] ties it together.
//!
//! Runnable walkthroughs for each capability live in the crate's `examples/`.

pub mod apply;
pub mod baseline;
pub mod cli;
pub mod conv;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod io;
pub mod net;
pub mod parallel;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use net::{Model, NetworkConfig, SubNetwork};
pub use tensor::{ConvLayer, PaddingMode, Real, Tensor};
