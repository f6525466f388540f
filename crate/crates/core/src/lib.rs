//! Planar three-body toolkit: collision-free simulation, syzygy and
//! velocity-syzygy detection, and Riccati-comparison bounds on the time of
//! the first syzygy.

pub mod bounds;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod events;
pub mod figure_eight;
pub mod integrate;
pub mod linalg;

pub use error::{Error, Result};
