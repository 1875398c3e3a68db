//! File formats: PNG images, decomposition bundles, solver configs and
//! pigment dictionaries.

pub mod bundle;
pub mod config;
pub mod error;
pub mod fs;
pub mod png;

pub use bundle::{load_bundle, save_bundle, BUNDLE_VERSION};
pub use config::{load_config, load_dictionary, save_config};
pub use error::{IoError, Result};
pub use fs::{atomic_write, sha256_file, sha256_hex};
pub use png::{decode_png, encode_gray_png, encode_png, load_image, save_gray, save_image};
