//! Gauss–Legendre and triangle quadrature rules.

use crate::scalar::Real;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut x = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = T::lit(-z);
        x[n - 1 - i] = T::lit(z);
        w[i] = T::lit(wi);
        w[n - 1 - i] = T::lit(wi);
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_interval<T: Real>(n: usize, a: T, b: T) -> Vec<(T, T)> {
    let (x, w) = gauss_legendre::<T>(n);
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    x.into_iter().zip(w).map(|(xi, wi)| (mid + half * xi, half * wi)).collect()
}

/// Seven-point rule on the reference triangle, exact for degree 5.
/// Entries are barycentric coordinates and weights summing to one.
pub fn triangle_rule() -> [([f64; 3], f64); 7] {
    let s = 15f64.sqrt();
    let r1 = (6.0 - s) / 21.0;
    let r2 = (6.0 + s) / 21.0;
    let w1 = (155.0 - s) / 1200.0;
    let w2 = (155.0 + s) / 1200.0;
    let t = 1.0 / 3.0;
    [
        ([t, t, t], 9.0 / 40.0),
        ([r1, r1, 1.0 - 2.0 * r1], w1),
        ([r1, 1.0 - 2.0 * r1, r1], w1),
        ([1.0 - 2.0 * r1, r1, r1], w1),
        ([r2, r2, 1.0 - 2.0 * r2], w2),
        ([r2, 1.0 - 2.0 * r2, r2], w2),
        ([1.0 - 2.0 * r2, r2, r2], w2),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials() {
        for n in [1usize, 2, 5, 12, 40] {
            let (x, w) = gauss_legendre::<f64>(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
        let q: f32 = gauss_interval::<f32>(4, 0.0, 2.0).iter().map(|(x, w)| w * x * x).sum();
        assert!((q - 8.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn triangle_rule_degree_five() {
        // Integral of l1^a l2^b l3^c over the reference triangle divided by its area.
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                for c in 0..=(5 - a - b) {
                    let exact = 2.0 * fact(a) * fact(b) * fact(c) / fact(a + b + c + 2);
                    let q: f64 = triangle_rule()
                        .iter()
                        .map(|(l, w)| w * l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32))
                        .sum();
                    assert!((q - exact).abs() < 1e-14, "{a} {b} {c}");
                }
            }
        }
    }
}
