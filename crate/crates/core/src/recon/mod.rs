//! Bootstrap subsample-and-aggregate reconstruction with pluggable
//! single-image reconstructors.

mod bootstrap;
mod reconstructor;

pub use bootstrap::{
    aggregate, bootstrap_detailed, bootstrap_reconstruct, enhance_image, enhance_with, Bootstrap, Enhanced,
    InferenceConfig, ReconMetadata,
};
pub use reconstructor::{
    build_reconstructor, GeneratorRecon, Identity, OracleWiener, Reconstructor, ReconstructorSpec, RECONSTRUCTORS,
};
