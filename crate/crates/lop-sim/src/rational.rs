//! Exact rational arithmetic used for potentials, improvements and the
//! phase schedule. Values are rendered as decimals only at the I/O boundary.

use num_rational::Rational64;
use num_traits::ToPrimitive;

pub type Rat = Rational64;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(n)
}

pub fn rat_to_f64(r: Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Natural log of n as an exact rational, fixed at microlevel precision.
/// The schedule must be reproducible and comparable with exact arithmetic,
/// so a single rational stand-in for ln(n) is used everywhere.
pub fn ln_fixed(n: usize) -> Rat {
    let v = (n as f64).ln();
    Rat::new((v * 1_000_000.0).round() as i64, 1_000_000)
}

/// Render a rational as "p/q" (or "p" when integral).
pub fn rat_display(r: Rat) -> String {
    if r.is_integer() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
