use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Friedland–Hayman lower bound:
/// `phi(s) = log(1 / (4 s)) / 2 + 3/2` for `s < 1/4`, `2 (1 - s)` for `1/4 <= s < 1`.
pub fn friedland_hayman_phi(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("phi is defined on (0, 1), got {s}")));
    }
    Ok(if s < 0.25 { 0.5 * (1.0 / (4.0 * s)).ln() + 1.5 } else { 2.0 * (1.0 - s) })
}

/// The logarithmic branch evaluated at any `s > 0`.
pub fn phi_log_branch(s: f64) -> f64 {
    0.5 * (1.0 / (4.0 * s)).ln() + 1.5
}

/// `phi(s1) + phi(s2) - 2 phi((s1 + s2) / 2)`.
pub fn convexity_gap(s1: f64, s2: f64) -> Result<f64> {
    Ok(friedland_hayman_phi(s1)? + friedland_hayman_phi(s2)? - 2.0 * friedland_hayman_phi(0.5 * (s1 + s2))?)
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact value on the linear branch `1/4 <= s < 1`.
pub fn phi_linear_exact(s: &BigRational) -> Result<BigRational> {
    if *s < ratio(1, 4) || *s >= BigRational::one() {
        return Err(Error::Domain(format!("the linear branch covers [1/4, 1), got {s}")));
    }
    Ok(ratio(2, 1) * (BigRational::one() - s))
}

/// `2 phi((1 - theta) / 2) - (2 + 2 theta)` in exact arithmetic, for `theta` in `[0, 1/2]`.
pub fn surface_identity_defect(theta: &BigRational) -> Result<BigRational> {
    if *theta < BigRational::zero() || *theta > ratio(1, 2) {
        return Err(Error::Domain(format!("theta must lie in [0, 1/2], got {theta}")));
    }
    let s = (BigRational::one() - theta) / ratio(2, 1);
    Ok(ratio(2, 1) * phi_linear_exact(&s)? - (ratio(2, 1) + ratio(2, 1) * theta))
}
