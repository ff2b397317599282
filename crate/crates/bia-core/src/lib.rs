//! Workbench for blind interference alignment on partially connected
//! cellular networks.
//!
//! Transmitters in these networks know the connectivity graph and the channel
//! statistics but never the channel coefficients themselves. The workbench
//! builds the classic topology families (linear, square, and hexagonal cell
//! arrays, the four-cell cluster, a macro/femto overlay, and symmetric
//! partially connected rings), constructs blind linear transmission schemes
//! for them, and decides achievability with a rank-based verifier backed by
//! two independent oracles: floating-point SVD and exact rational
//! elimination. Converse values come from an exact rational linear program,
//! and finite-SNR behavior from a zero-forcing Monte Carlo simulator.
//!
//! # Example
//!
//! ```
//! use bia_core::{net, scheme, verify, channel};
//!
//! let problem = net::make_four_cell(net::Direction::Downlink, false).unwrap();
//! let plan = scheme::four_cell_downlink_coherent(&problem).unwrap();
//! let spec = channel::FadingSpec { tau: 3, ..channel::FadingSpec::default_with_seed(7) };
//! let report = verify::verify(&problem, &plan, &spec, 20).unwrap();
//! assert!(report.pass);
//! assert_eq!(report.sum_dof.to_string(), "8/3");
//! ```

pub mod bounds;
pub mod channel;
pub mod gic;
pub mod net;
pub mod scheme;
pub mod sim;
pub mod simplex;
pub mod verify;

use num_bigint::BigInt;

/// Complex floating-point scalar used by the SVD verifier and the simulator.
pub type C64 = num_complex::Complex<f64>;
/// Exact rational scalar used by the converse LP and the exact rank oracle.
pub type Rat = num_rational::BigRational;
/// Complex rational scalar used by the exact rank oracle.
pub type CRat = num_complex::Complex<Rat>;

/// Errors shared by every module in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A precondition on operation parameters does not hold.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A scheme was paired with a problem it was not built for.
    #[error("mismatch: {0}")]
    Mismatch(String),
    /// The input is structurally valid but outside what the operation supports.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    /// A document failed schema or semantic validation.
    #[error("parse error: {0}")]
    Parse(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Builds an exact rational from an integer pair.
#[inline]
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Converts a float to the exact rational it represents.
///
/// Every finite `f64` is exactly a dyadic rational, so this conversion is
/// lossless; it is what lets the exact oracle consume schemes whose vectors
/// are stored in floating point.
#[inline]
pub fn f64_to_rat(x: f64) -> Rat {
    Rat::from_float(x).expect("finite float converts exactly to a rational")
}

/// Serde adapter storing rationals as `"num/den"` strings (plain `"n"` when
/// the denominator is one), the format used by every JSON artifact.
pub mod rat_serde {
    use super::Rat;
    use serde::{Deserialize, Deserializer, Serializer};
    use std::str::FromStr;

    pub fn serialize<S: Serializer>(value: &Rat, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&value.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Rat, D::Error> {
        let text = String::deserialize(de)?;
        Rat::from_str(&text).map_err(serde::de::Error::custom)
    }
}
