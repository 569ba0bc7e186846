//! Noncoherent capacity bounds for Rayleigh-fading WSSUS underspread channels
//! signaled through Weyl-Heisenberg (pulse-shaped OFDM) sets.
//!
//! Everything internal is computed in normalized time-frequency units where the
//! prototype pulse lives on the square lattice `T = F = sqrt(TF)`. Physical
//! grids and scattering functions are mapped onto that lattice by the
//! volume-preserving dilation `tau -> tau / s`, `nu -> nu * s` with
//! `s = sqrt(T / F)`.

pub mod ambiguity;
pub mod analysis;
pub mod bounds;
pub mod cli;
mod error;
pub mod optim;
pub mod pulse;
pub mod quad;
pub mod scattering;
pub mod special;
pub mod stats;

pub use ambiguity::{ambiguity, AmbiguityQuery};
pub use error::{Error, Result};
pub use pulse::{PulseSpec, WhGrid};
pub use scattering::{ScatteringModel, UnderspreadParams};


/// Crate version embedded in every output document.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
