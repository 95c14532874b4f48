//! Polarization stability of double unbalanced Mach-Zehnder fiber QKD links.
//!
//! [`jones`] holds the 2x2 algebra, [`fiber`] the disturbed fiber sections,
//! [`interferometer`] the two-path optics and visibility, and
//! [`experiment`] the time-series harnesses driven by [`config`] and [`cli`].

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod fiber;
pub mod interferometer;
pub mod jones;

pub use error::{Error, Result};
pub use fiber::{DisturbanceKind, DisturbanceProcess, FiberElement, SegmentedFiber};
pub use interferometer::SystemConfig;
pub use jones::{JonesMatrix, JonesVector};
