//! Text-driven layered cartoon character generation: component catalog,
//! description parsing, template composition, procedural painting with
//! occlusion repair, mesh rigging, software rasterization and the on-disk
//! model format.

pub mod assemble;
pub mod canonical;
pub mod catalog;
pub mod composer;
pub mod image;
pub mod modelio;
pub mod paint;
pub mod raster;
pub mod rig;
pub mod textparse;

#[cfg(test)]
mod test_support;

use std::path::PathBuf;

/// The `data/` directory shipped at the repository root.
pub fn default_data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}
