//! Full counting statistics of boson transport through a Dicke medium
//! coupled to a source and a drain reservoir.

pub mod eom;
pub mod error;
pub mod fcs;
pub mod harness;
pub mod liouvillian;
pub mod model;
pub mod numerics;

pub use error::{FcsError, Result};
pub use model::{CountingField, EffectiveBath, ModelParams};
