//! System manifests, Matrix Market files and the fixed number format used
//! for all text output.

mod format;
mod manifest;
mod mtx;

pub use format::fmt_g17;
pub use manifest::{load_manifest, parse_manifest, write_manifest};
pub use mtx::{read_matrix_market, parse_matrix_market, write_matrix_market};
