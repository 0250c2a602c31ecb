//! Exact double-barrier scattering, its multiple-reflection series, a
//! stationary-phase timing engine and a brute-force wave-packet laboratory
//! that checks the timing predictions against direct quadrature.
//!
//! Units are natural (ħ = 1). The canonical dimensionless system uses
//! `2m = 1` and `V0 = 1`, so energies read directly as `E / V0`.
//!
//! ```
//! use tunnellab::model::BarrierSystem;
//! use tunnellab::scattering::stationary_coefficients;
//!
//! let sys = BarrierSystem::canonical(8.0).unwrap();
//! let c = stationary_coefficients(0.5, &sys).unwrap();
//! assert!((c.transmission.norm_sqr() + c.reflection.norm_sqr() - 1.0).abs() < 1e-10);
//! ```

pub mod audit;
pub mod channel;
pub mod error;
pub mod model;
pub mod packets;
pub mod quadrature;
pub mod scattering;
pub mod spm;

#[cfg(any(test, feature = "oracle"))]
pub mod oracle;

pub use error::{Error, Result};
