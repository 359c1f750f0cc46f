//! Orientation and in-circle predicates with a floating-point filter and an
//! exact big-integer fallback for the rare near-degenerate cases.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::Point;

const EPS: f64 = f64::EPSILON * 0.5;
const ORIENT_BOUND: f64 = (3.0 + 16.0 * EPS) * EPS;
const INCIRCLE_BOUND: f64 = (10.0 + 96.0 * EPS) * EPS;

/// Positive when `a, b, c` are in counterclockwise order.
pub fn orient2d(a: Point, b: Point, c: Point) -> f64 {
    let detleft = (a.x - c.x) * (b.y - c.y);
    let detright = (a.y - c.y) * (b.x - c.x);
    let det = detleft - detright;
    let bound = ORIENT_BOUND * (detleft.abs() + detright.abs());
    if det > bound || -det > bound {
        return det;
    }
    exact_sign(&orient_exact(&[a, b, c])) as f64 * f64::MIN_POSITIVE.max(det.abs())
}

/// Positive when `d` lies strictly inside the circle through the
/// counterclockwise triangle `a, b, c`.
pub fn incircle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let adx = a.x - d.x;
    let ady = a.y - d.y;
    let bdx = b.x - d.x;
    let bdy = b.y - d.y;
    let cdx = c.x - d.x;
    let cdy = c.y - d.y;
    let alift = adx * adx + ady * ady;
    let blift = bdx * bdx + bdy * bdy;
    let clift = cdx * cdx + cdy * cdy;
    let bc = bdx * cdy - cdx * bdy;
    let ca = cdx * ady - adx * cdy;
    let ab = adx * bdy - bdx * ady;
    let det = alift * bc + blift * ca + clift * ab;
    let permanent = ((bdx * cdy).abs() + (cdx * bdy).abs()) * alift
        + ((cdx * ady).abs() + (adx * cdy).abs()) * blift
        + ((adx * bdy).abs() + (bdx * ady).abs()) * clift;
    let bound = INCIRCLE_BOUND * permanent;
    if det > bound || -det > bound {
        return det;
    }
    exact_sign(&incircle_exact(&[a, b, c, d])) as f64 * f64::MIN_POSITIVE.max(det.abs())
}

fn exact_sign(v: &BigInt) -> i32 {
    if v.is_zero() {
        0
    } else if v.is_positive() {
        1
    } else {
        -1
    }
}

/// Scale all coordinates to integers sharing one binary exponent.
fn to_integers<const N: usize>(pts: &[Point; N]) -> [[BigInt; 2]; N] {
    let mut parts = Vec::with_capacity(2 * N);
    for p in pts {
        for v in [p.x, p.y] {
            parts.push(decode(v));
        }
    }
    let min_exp = parts
        .iter()
        .filter(|(m, _)| *m != 0)
        .map(|&(_, e)| e)
        .min()
        .unwrap_or(0);
    let mut out: [[BigInt; 2]; N] = std::array::from_fn(|_| [BigInt::zero(), BigInt::zero()]);
    for (i, (m, e)) in parts.into_iter().enumerate() {
        let shifted = if m == 0 {
            BigInt::zero()
        } else {
            BigInt::from(m) << ((e - min_exp) as usize)
        };
        out[i / 2][i % 2] = shifted;
    }
    out
}

fn decode(v: f64) -> (i64, i32) {
    if v == 0.0 {
        return (0, 0);
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 0 { 1i64 } else { -1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & 0x000f_ffff_ffff_ffff) as i64;
    if exp == 0 {
        (sign * frac, -1074)
    } else {
        (sign * (frac | 0x0010_0000_0000_0000), exp - 1075)
    }
}

fn orient_exact(pts: &[Point; 3]) -> BigInt {
    let [a, b, c] = to_integers(pts);
    (&a[0] - &c[0]) * (&b[1] - &c[1]) - (&a[1] - &c[1]) * (&b[0] - &c[0])
}

fn incircle_exact(pts: &[Point; 4]) -> BigInt {
    let [a, b, c, d] = to_integers(pts);
    let adx = &a[0] - &d[0];
    let ady = &a[1] - &d[1];
    let bdx = &b[0] - &d[0];
    let bdy = &b[1] - &d[1];
    let cdx = &c[0] - &d[0];
    let cdy = &c[1] - &d[1];
    let alift = &adx * &adx + &ady * &ady;
    let blift = &bdx * &bdx + &bdy * &bdy;
    let clift = &cdx * &cdx + &cdy * &cdy;
    let bc = &bdx * &cdy - &cdx * &bdy;
    let ca = &cdx * &ady - &adx * &cdy;
    let ab = &adx * &bdy - &bdx * &ady;
    alift * bc + blift * ca + clift * ab
}
