//! Behavioral simulator for a capacitive-coupling analog in-memory MAC
//! array with time-domain inputs.
//!
//! The library models the full signal chain: voltage-to-time conversion,
//! charge-domain multiplication in capacitive-coupling cells, bitline
//! accumulation across a crossbar, device-mismatch Monte Carlo, and the
//! compilation of a small trained network onto simulated arrays. Fixed-point
//! digital baselines and error reporting live alongside for comparison.

pub mod cell;
pub mod cli;
pub mod crossbar;
pub mod error;
pub mod netmap;
pub mod oracle;
pub mod variability;
pub mod vtc;

pub use error::{Error, Result};

/// The guide, chapter by chapter.
///
/// These modules embed the mdBook sources from `book/src/`, so `cargo test`
/// compiles and runs every code block in the book — the guide cannot drift
/// from the library it documents. Rendered pages: `mdbook build book`.
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod ch01_introduction {}

    #[doc = include_str!("../../../book/src/converter.md")]
    pub mod ch02_converter {}

    #[doc = include_str!("../../../book/src/cell.md")]
    pub mod ch03_cell {}

    #[doc = include_str!("../../../book/src/crossbar.md")]
    pub mod ch04_crossbar {}

    #[doc = include_str!("../../../book/src/variability.md")]
    pub mod ch05_variability {}

    #[doc = include_str!("../../../book/src/network.md")]
    pub mod ch06_network {}

    #[doc = include_str!("../../../book/src/classifier.md")]
    pub mod ch07_classifier {}

    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod ch08_cli {}

    #[doc = include_str!("../../../book/src/baselines.md")]
    pub mod ch09_baselines {}
}
