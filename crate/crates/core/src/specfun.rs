//! Bessel functions of integer order for real nonnegative arguments: `J_m`,
//! `Y_m`, the Hankel function `H_m^(1)`, derivatives, and zeros of `J_m`.
//!
//! Small arguments (`x <= 4`) use the ascending power series, whose terms
//! are bounded by the leading term there so no cancellation occurs. Larger
//! arguments use Miller's backward recurrence normalised by
//! `J_0 + 2 sum J_2k = 1`; the same normalised sequence feeds the Neumann
//! series for `Y_0` and `Y_1`, and `Y_m` follows by forward recurrence.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest order accepted by the public evaluators.
pub const MAX_ORDER: u32 = 50;
/// Largest zero index accepted by [`bessel_j_zero`].
pub const MAX_ZERO_INDEX: usize = 20;

const SERIES_LIMIT: f64 = 4.0;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn check_order(m: u32) -> Result<()> {
    if m > MAX_ORDER {
        return Err(Error::Range(format!(
            "Bessel order {m} exceeds supported maximum {MAX_ORDER}"
        )));
    }
    Ok(())
}

fn check_arg<T: Real>(x: T) -> Result<()> {
    if !(x >= T::zero()) || !x.is_finite() {
        return Err(Error::Domain(format!("Bessel argument must be finite and >= 0, got {x}")));
    }
    Ok(())
}

/// Ascending series for `J_m(x)`.
fn j_series<T: Real>(m: u32, x: T) -> T {
    let half = x * T::lit(0.5);
    let mut lead = T::one();
    for k in 1..=m {
        lead = lead * half / T::from_u32(k).unwrap();
    }
    let q = -half * half;
    let mut term = lead;
    let mut sum = lead;
    let mut k = 0u32;
    loop {
        k += 1;
        term = term * q / (T::from_u32(k).unwrap() * T::from_u32(k + m).unwrap());
        sum = sum + term;
        if term.abs() <= T::epsilon() * sum.abs() * T::lit(0.01) || k > 200 {
            break;
        }
        if term == T::zero() {
            break;
        }
    }
    sum
}

fn miller_start<T: Real>(nmax: usize, x: T) -> usize {
    let xf = x.as_f64();
    let base = (nmax as f64).max(xf);
    let n = base + 30.0 + 16.0 * (xf / 2.0).cbrt();
    let n = n.ceil() as usize;
    n + (n % 2)
}

/// Normalised Miller sequence `J_0..=J_N` for `x > 0` with `N >= nmax`.
fn miller_sequence<T: Real>(nmax: usize, x: T) -> Vec<T> {
    let n_start = miller_start(nmax, x);
    let big = T::max_value().sqrt();
    let mut j = vec![T::zero(); n_start + 1];
    let mut next = T::zero(); // J_{n+1}
    let mut cur = T::min_positive_value().sqrt(); // J_n
    j[n_start] = cur;
    let two = T::lit(2.0);
    for n in (1..=n_start).rev() {
        let prev = two * T::from_usize_lossy(n) / x * cur - next;
        next = cur;
        cur = prev;
        j[n - 1] = cur;
        if cur.abs() > big {
            let s = T::one() / big;
            for v in j[n - 1..].iter_mut() {
                *v = *v * s;
            }
            cur = cur * s;
            next = next * s;
        }
    }
    let mut norm = j[0];
    let mut k = 2;
    while k <= n_start {
        norm = norm + two * j[k];
        k += 2;
    }
    for v in j.iter_mut() {
        *v = *v / norm;
    }
    j
}

/// `J_0..=J_nmax` at `x`, without the public order cap.
pub(crate) fn bessel_j_seq<T: Real>(nmax: usize, x: T) -> Vec<T> {
    if x == T::zero() {
        let mut out = vec![T::zero(); nmax + 1];
        out[0] = T::one();
        return out;
    }
    if x.as_f64() <= SERIES_LIMIT {
        return (0..=nmax).map(|m| j_series(m as u32, x)).collect();
    }
    let mut seq = miller_sequence(nmax, x);
    seq.truncate(nmax + 1);
    seq
}

/// `Y_0..=Y_nmax` at `x > 0`, together with `J_0..=J_nmax`.
pub(crate) fn bessel_jy_seq<T: Real>(nmax: usize, x: T) -> (Vec<T>, Vec<T>) {
    let full = miller_sequence(nmax.max(1), x);
    let two_over_pi = T::FRAC_2_PI();
    let lg = (x * T::lit(0.5)).ln() + T::lit(EULER_GAMMA);
    // Neumann series.
    let mut s0 = T::zero();
    let mut s1 = T::zero();
    let mut k = 1usize;
    while 2 * k + 1 < full.len() {
        let sign = if k % 2 == 0 { T::one() } else { -T::one() };
        let kk = T::from_usize_lossy(k);
        s0 = s0 + sign * full[2 * k] / kk;
        s1 = s1 + sign * (full[2 * k - 1] - full[2 * k + 1]) / kk;
        k += 1;
    }
    let y0 = two_over_pi * lg * full[0] - T::lit(2.0) * two_over_pi * s0;
    let y1 = two_over_pi * lg * full[1] - two_over_pi * full[0] / x + two_over_pi * s1;
    let mut y = Vec::with_capacity(nmax + 1);
    y.push(y0);
    if nmax >= 1 {
        y.push(y1);
    }
    for n in 1..nmax {
        let next = T::lit(2.0) * T::from_usize_lossy(n) / x * y[n] - y[n - 1];
        y.push(next);
    }
    let j = if x.as_f64() <= SERIES_LIMIT {
        (0..=nmax).map(|m| j_series(m as u32, x)).collect()
    } else {
        full[..=nmax].to_vec()
    };
    (j, y)
}

/// Bessel function of the first kind `J_m(x)`.
pub fn bessel_j<T: Real>(m: u32, x: T) -> Result<T> {
    check_order(m)?;
    check_arg(x)?;
    if x.as_f64() <= SERIES_LIMIT {
        return Ok(j_series(m, x));
    }
    Ok(miller_sequence(m as usize, x)[m as usize])
}

/// Derivative `J_m'(x)`, evaluated as `(J_{m-1} - J_{m+1}) / 2` (`-J_1` for `m = 0`).
pub fn bessel_j_prime<T: Real>(m: u32, x: T) -> Result<T> {
    check_order(m)?;
    check_arg(x)?;
    let seq = bessel_j_seq(m as usize + 1, x);
    Ok(derivative_from_seq(&seq, m as usize))
}

fn derivative_from_seq<T: Real>(seq: &[T], m: usize) -> T {
    if m == 0 {
        -seq[1]
    } else {
        (seq[m - 1] - seq[m + 1]) * T::lit(0.5)
    }
}

/// Bessel function of the second kind `Y_m(x)`, `x > 0`.
pub fn bessel_y<T: Real>(m: u32, x: T) -> Result<T> {
    check_order(m)?;
    check_positive(x)?;
    let (_, y) = bessel_jy_seq(m as usize, x);
    Ok(y[m as usize])
}

fn check_positive<T: Real>(x: T) -> Result<()> {
    check_arg(x)?;
    if x == T::zero() {
        return Err(Error::Domain(
            "Hankel/Neumann functions are singular at x = 0".into(),
        ));
    }
    Ok(())
}

/// Hankel function of the first kind `H_m^(1)(x) = J_m(x) + i Y_m(x)`.
pub fn hankel1<T: Real>(m: u32, x: T) -> Result<Complex<T>> {
    check_order(m)?;
    check_positive(x)?;
    let (j, y) = bessel_jy_seq(m as usize, x);
    Ok(Complex::new(j[m as usize], y[m as usize]))
}

/// Derivative of the Hankel function of the first kind.
pub fn hankel1_prime<T: Real>(m: u32, x: T) -> Result<Complex<T>> {
    check_order(m)?;
    check_positive(x)?;
    let (j, y) = bessel_jy_seq(m as usize + 1, x);
    Ok(Complex::new(
        derivative_from_seq(&j, m as usize),
        derivative_from_seq(&y, m as usize),
    ))
}

/// Values and derivatives of `J_m` and `H_m^(1)` for `m = 0..=nmax`, no order cap.
pub(crate) struct CylinderFunctions<T> {
    pub j: Vec<T>,
    pub jp: Vec<T>,
    pub h: Vec<Complex<T>>,
    pub hp: Vec<Complex<T>>,
}

pub(crate) fn cylinder_functions<T: Real>(nmax: usize, x: T) -> CylinderFunctions<T> {
    let (j, y) = bessel_jy_seq(nmax + 1, x);
    let jp = (0..=nmax).map(|m| derivative_from_seq(&j, m)).collect();
    let yp: Vec<T> = (0..=nmax).map(|m| derivative_from_seq(&y, m)).collect();
    let h = (0..=nmax).map(|m| Complex::new(j[m], y[m])).collect();
    let hp = (0..=nmax).map(|m| Complex::new(derivative_from_seq(&j, m), yp[m])).collect();
    CylinderFunctions {
        j: j[..=nmax].to_vec(),
        jp,
        h,
        hp,
    }
}

/// Values and derivatives of `J_m` only, `m = 0..=nmax`, no order cap.
pub(crate) fn bessel_j_with_derivs<T: Real>(nmax: usize, x: T) -> (Vec<T>, Vec<T>) {
    let j = bessel_j_seq(nmax + 1, x);
    let jp = (0..=nmax).map(|m| derivative_from_seq(&j, m)).collect();
    (j[..=nmax].to_vec(), jp)
}

/// `k`-th positive zero (1-based) of `J_m`.
///
/// Brackets are found by sampling at `pi/4` steps from the asymptotic
/// first-zero estimate `m + 1.86 m^(1/3)` and refined by bisection.
pub fn bessel_j_zero<T: Real>(m: u32, k: usize) -> Result<T> {
    check_order(m)?;
    if k == 0 || k > MAX_ZERO_INDEX {
        return Err(Error::Range(format!(
            "zero index {k} outside 1..={MAX_ZERO_INDEX}"
        )));
    }
    Ok(zeros_of_j(m, k)?.pop().expect("k >= 1 zeros"))
}

fn zeros_of_j<T: Real>(m: u32, count: usize) -> Result<Vec<T>> {
    let mf = m as f64;
    let mut start = mf + 1.86 * mf.cbrt();
    let f = |x: f64| -> f64 { bessel_j::<T>(m, T::lit(x)).map(|v| v.as_f64()).unwrap_or(f64::NAN) };
    // J_m is positive on (0, j_{m,1}); fall back to x = m if the estimate overshot.
    if m > 0 && f(start) <= 0.0 {
        start = mf;
    }
    let step = std::f64::consts::FRAC_PI_4;
    let mut zeros = Vec::with_capacity(count);
    let mut a = start;
    let mut fa = f(a);
    let mut guard = 0usize;
    while zeros.len() < count {
        let b = a + step;
        let fb = f(b);
        if fa == 0.0 && a > 0.0 {
            zeros.push(T::lit(a));
        } else if fa * fb < 0.0 {
            zeros.push(T::lit(bisect(&f, a, b, fa)?));
        }
        a = b;
        fa = fb;
        guard += 1;
        if guard > 100_000 {
            return Err(Error::Numerical(format!("zero scan for J_{m} did not terminate")));
        }
    }
    Ok(zeros)
}

fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    const MAX_ITER: usize = 200;
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (a + b);
        if b - a <= 1e-12 || mid <= a || mid >= b {
            return Ok(mid);
        }
        let fm = f(mid);
        if !fm.is_finite() {
            return Err(Error::Numerical(format!("non-finite Bessel value at {mid}")));
        }
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Err(Error::Numerical(format!(
        "bisection did not reach 1e-12 within {MAX_ITER} iterations on [{a}, {b}]"
    )))
}

/// The first `K` positive zeros of `J_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct BesselZeroTable<T> {
    pub order: u32,
    pub zeros: Vec<T>,
    /// Bound on `|J_m|` at every stored zero.
    pub tolerance: T,
}

impl<T: Real> BesselZeroTable<T> {
    pub fn new(order: u32, count: usize) -> Result<Self> {
        check_order(order)?;
        if count == 0 || count > MAX_ZERO_INDEX {
            return Err(Error::Range(format!(
                "zero count {count} outside 1..={MAX_ZERO_INDEX}"
            )));
        }
        let zeros = zeros_of_j::<T>(order, count)?;
        let mut worst = T::zero();
        for &z in &zeros {
            worst = worst.max(bessel_j(order, z)?.abs());
        }
        let tolerance = T::lit(1e-10).max(worst);
        Ok(Self {
            order,
            zeros,
            tolerance,
        })
    }

    /// 1-based access.
    pub fn get(&self, k: usize) -> Option<T> {
        k.checked_sub(1).and_then(|i| self.zeros.get(i).copied())
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.zeros.windows(2).all(|w| w[0] < w[1])
    }

    /// `alpha_k(m) < alpha_k(m+1) < alpha_{k+1}(m)` for every `k` both tables cover.
    pub fn interlaces_with(&self, next: &BesselZeroTable<T>) -> bool {
        if next.order != self.order + 1 {
            return false;
        }
        (0..self.zeros.len().saturating_sub(1).min(next.zeros.len())).all(|i| {
            self.zeros[i] < next.zeros[i] && next.zeros[i] < self.zeros[i + 1]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with mpmath at 30 digits.
    const J_REF: &[(u32, f64, f64, f64)] = &[
        (0, 1.0, 0.765_197_686_557_966_55, 0.088_256_964_215_676_958),
        (1, 2.5, 0.497_094_102_464_274_04, 0.145_918_137_966_785_8),
        (2, 1.0, 0.114_903_484_931_900_48, -1.650_682_606_816_254_4),
        (3, 1.0, 0.019_563_353_982_668_406, -5.821_517_605_964_728_8),
        (0, 12.0, 0.047_689_310_796_833_537, -0.225_237_312_634_361_43),
        (5, 7.3, 0.313_706_170_897_309_08, 0.133_645_491_319_512_5),
        (20, 30.0, 0.004_831_019_993_404_064_5, -0.168_481_539_487_426_77),
        (50, 60.0, -0.137_982_731_485_352_12, 0.008_641_769_962_674_49),
        (0, 200.0, -0.015_437_439_930_565_092, -0.054_265_775_249_817_911),
        (1, 150.5, -0.057_342_040_310_382_326, -0.030_691_890_673_149_484),
        (30, 100.0, 0.081_460_129_581_172_223, 0.006_138_839_212_010_033_5),
    ];

    #[test]
    fn j_matches_reference_values() {
        for &(m, x, j, _) in J_REF {
            let v = bessel_j(m, x).unwrap();
            assert!((v - j).abs() < 1e-13, "J_{m}({x}) = {v}, expected {j}");
        }
        assert!((bessel_j(10, 3.0f64).unwrap() - 1.292_835_164_571_588_4e-5).abs() < 1e-17);
        assert!((bessel_j(50, 10.0f64).unwrap() / 1.784_513_607_871_595_3e-30 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn y_matches_reference_values() {
        for &(m, x, _, y) in J_REF {
            let v = bessel_y(m, x).unwrap();
            assert!((v - y).abs() < 1e-12 * y.abs().max(1.0), "Y_{m}({x}) = {v}, expected {y}");
        }
        let y10 = bessel_y(10, 3.0f64).unwrap();
        assert!((y10 / -2582.607_129_484_299_7 - 1.0).abs() < 1e-11);
    }

    #[test]
    fn trivial_values() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(2, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j_prime(0, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j_prime(1, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn errors() {
        assert!(matches!(bessel_j(51, 1.0), Err(Error::Range(_))));
        assert!(matches!(bessel_j(0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(hankel1(0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_j_zero::<f64>(0, 21), Err(Error::Range(_))));
        assert!(matches!(bessel_j_zero::<f64>(0, 0), Err(Error::Range(_))));
    }

    #[test]
    fn zeros_match_reference() {
        let cases = [
            (0, 1, 2.404_825_557_695_772_8),
            (2, 1, 5.135_622_301_840_682_6),
            (2, 2, 8.417_244_140_399_864_9),
            (3, 1, 6.380_161_895_923_983_5),
            (0, 20, 62.048_469_190_227_17),
            (50, 1, 57.116_899_160_119_174),
            (50, 20, 130.918_153_721_958_16),
            (1, 5, 16.470_630_050_877_633),
        ];
        for (m, k, z) in cases {
            let v: f64 = bessel_j_zero(m, k).unwrap();
            assert!((v - z).abs() < 1e-10, "zero({m},{k}) = {v}, expected {z}");
        }
    }

    #[test]
    fn zero_table_invariants() {
        for m in [0u32, 1, 2, 7, 49] {
            let t = BesselZeroTable::<f64>::new(m, 20).unwrap();
            let t1 = BesselZeroTable::<f64>::new(m + 1, 20).unwrap();
            assert!(t.is_strictly_increasing());
            assert!(t.interlaces_with(&t1));
            for &z in &t.zeros {
                assert!(bessel_j(m, z).unwrap().abs() <= t.tolerance);
            }
        }
    }

    #[test]
    fn f32_instantiation_is_usable() {
        let v: f32 = bessel_j(0, 1.0f32).unwrap();
        assert!((v - 0.765_197_7).abs() < 1e-5);
        let z: f32 = bessel_j_zero(0, 1).unwrap();
        assert!((z - 2.404_825_6).abs() < 1e-4);
    }

    #[test]
    fn hankel_asymptotic_modulus() {
        let x = 200.0f64;
        let h = hankel1(0, x).unwrap();
        let lim = (2.0 / std::f64::consts::PI).sqrt();
        assert!((h.norm() * x.sqrt() / lim - 1.0).abs() < 0.01);
        assert!(hankel1(0, 1e-3).unwrap().im < 0.0);
    }
}
