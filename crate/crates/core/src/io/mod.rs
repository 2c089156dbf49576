//! Image and manifest files.

mod manifest;
mod netpbm;

pub use manifest::{load_pairs, read_manifest, Manifest, SamplePair};
pub use netpbm::{decode, encode, read_image, write_image, write_image_with_maxval};
