//! Constructive smoothing of semialgebraic sets.
//!
//! The crate builds grid partitions of boxes into cells, explicit covers
//! of those cells by double covers and products of circles, blowup charts
//! with exact hypersurface strict transforms, and a seeded harness that
//! checks the resulting maps numerically.

pub mod blowup;
pub mod casebook;
pub mod exactpoly;

pub use exactpoly::{parse_polynomial, PolyError, Polynomial, Rational};
pub mod numeric;
pub mod partition;
pub mod rbox;
pub mod semialg;
pub mod smoothing;
pub mod verify;

pub use rbox::RBox;
