use num_complex::Complex64;
use rayon::prelude::*;

use super::assemble::hat_gradients;
use crate::error::{Error, Result};
use crate::geometry::{Locator, Mesh2D, Region};
use crate::incident::Grad;
use crate::quadrature::triangle_rule;
use crate::Point;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Piecewise-linear complex field on a mesh.
#[derive(Clone, Debug)]
pub struct ComplexField<'m> {
    pub mesh: &'m Mesh2D,
    pub values: Vec<C>,
    pub kappa: f64,
}

impl<'m> ComplexField<'m> {
    pub fn new(mesh: &'m Mesh2D, values: Vec<C>, kappa: f64) -> Result<Self> {
        if values.len() != mesh.vertices.len() {
            return Err(Error::Config(format!(
                "field has {} values for {} vertices",
                values.len(),
                mesh.vertices.len()
            )));
        }
        if let Some(v) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite field value at vertex {v}")));
        }
        Ok(Self { mesh, values, kappa })
    }

    pub fn zeros(mesh: &'m Mesh2D, kappa: f64) -> Self {
        Self { mesh, values: vec![ZERO; mesh.vertices.len()], kappa }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: &'m Mesh2D, kappa: f64, f: impl Fn(Point) -> C + Sync) -> Result<Self> {
        let values = mesh.vertices.par_iter().map(|&p| f(p)).collect();
        Self::new(mesh, values, kappa)
    }

    pub fn add(&self, other: &ComplexField<'_>) -> Result<ComplexField<'m>> {
        if other.values.len() != self.values.len() {
            return Err(Error::Config("fields live on different meshes".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self { mesh: self.mesh, values, kappa: self.kappa })
    }

    pub fn scale(&self, s: C) -> ComplexField<'m> {
        Self { mesh: self.mesh, values: self.values.iter().map(|v| v * s).collect(), kappa: self.kappa }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn at(&self, t: usize, bary: [f64; 3]) -> C {
        let tri = self.mesh.triangles[t];
        self.values[tri[0]] * bary[0] + self.values[tri[1]] * bary[1] + self.values[tri[2]] * bary[2]
    }

    pub fn sample(&self, loc: &Locator<'_>, p: Point) -> Option<C> {
        loc.locate(p).map(|(t, l)| self.at(t, l))
    }

    /// Gradient of the piecewise-linear field on triangle `t`.
    pub fn triangle_gradient(&self, t: usize) -> Grad<f64> {
        let tri = self.mesh.triangles[t];
        let g = hat_gradients(self.mesh.corners(t));
        let mut out = [ZERO; 2];
        for i in 0..3 {
            out[0] += self.values[tri[i]] * g[i].x;
            out[1] += self.values[tri[i]] * g[i].y;
        }
        out
    }

    /// `L^2` norm over the triangles accepted by `keep`.
    pub fn l2_norm_where(&self, keep: impl Fn(usize) -> bool) -> f64 {
        self.l2_error_where(|_| ZERO, keep)
    }

    /// `L^2` distance to `exact` over the triangles accepted by `keep`.
    pub fn l2_error_where(&self, exact: impl Fn(Point) -> C, keep: impl Fn(usize) -> bool) -> f64 {
        let rule = triangle_rule();
        let mut s = 0.0;
        for t in 0..self.mesh.triangles.len() {
            if !keep(t) {
                continue;
            }
            let p = self.mesh.corners(t);
            let area = self.mesh.area(t);
            for (l, w) in rule {
                let x = p[0] * l[0] + p[1] * l[1] + p[2] * l[2];
                s += w * area * (self.at(t, l) - exact(x)).norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Least-squares recovery of local polynomials and nodal gradients, using only
    /// triangles in `regions`.
    pub fn recover_gradients(&self, regions: &[Region]) -> RecoveredGradient<'_, 'm> {
        self.recover_with(regions, None)
    }

    /// Recovery by local Fourier-Bessel expansions `J_m(kappa r) e^{i m theta}`,
    /// for fields solving `(Delta + kappa^2) u = 0` on the triangles of `regions`.
    pub fn recover_helmholtz(&self, regions: &[Region]) -> RecoveredGradient<'_, 'm> {
        let k = (self.kappa > 0.0).then_some(self.kappa);
        self.recover_with(regions, k)
    }

    fn recover_with(&self, regions: &[Region], wave: Option<f64>) -> RecoveredGradient<'_, 'm> {
        let mesh = self.mesh;
        let allowed: Vec<bool> = mesh.regions.iter().map(|r| regions.contains(r)).collect();
        let vt = mesh.vertex_triangles();
        let fits = (0..mesh.vertices.len())
            .into_par_iter()
            .map(|v| self.recover_at(v, &vt, &allowed, wave))
            .collect();
        RecoveredGradient { field: self, allowed, fits }
    }

    fn recover_at(&self, v: usize, vt: &[Vec<usize>], allowed: &[bool], wave: Option<f64>) -> Option<LocalFit> {
        let mesh = self.mesh;
        let ring1: Vec<usize> = vt[v].iter().copied().filter(|&t| allowed[t]).collect();
        if ring1.is_empty() {
            return None;
        }
        let mut pts: Vec<usize> = ring1.iter().flat_map(|&t| mesh.triangles[t]).collect();
        pts.sort_unstable();
        pts.dedup();
        let mut ring2: Vec<usize> = pts
            .iter()
            .flat_map(|&w| vt[w].iter().copied().filter(|&t| allowed[t]))
            .flat_map(|t| mesh.triangles[t])
            .collect();
        ring2.sort_unstable();
        ring2.dedup();
        let x0 = mesh.vertices[v];
        let scale = ring2.iter().map(|&w| mesh.vertices[w].dist(x0)).fold(0.0, f64::max);
        let fit = |nb: usize, kappa: Option<f64>| -> Option<LocalFit> {
            let proto = LocalFit { x0, scale, kappa, c: [ZERO; NB] };
            let mut m = [[0.0; NB]; NB];
            let mut rhs = [ZERO; NB];
            for &w in &ring2 {
                let basis = proto.basis(mesh.vertices[w]);
                for i in 0..nb {
                    for j in 0..nb {
                        m[i][j] += basis[i] * basis[j];
                    }
                    rhs[i] += self.values[w] * basis[i];
                }
            }
            let c = solve_small(&mut m, &mut rhs, nb)?;
            Some(LocalFit { c, ..proto })
        };
        if let Some(k) = wave {
            for (nb, need) in [(9, 12), (7, 9), (5, 7)] {
                if ring2.len() >= need {
                    if let Some(f) = fit(nb, Some(k)) {
                        return Some(f);
                    }
                }
            }
        }
        if ring2.len() >= 15 {
            if let Some(f) = fit(10, None) {
                return Some(f);
            }
        }
        if ring2.len() >= 9 {
            if let Some(f) = fit(6, None) {
                return Some(f);
            }
        }
        if ring2.len() >= 3 {
            if let Some(f) = fit(3, None) {
                return Some(f);
            }
        }
        let mut g = [ZERO; 2];
        for &t in &ring1 {
            let gt = self.triangle_gradient(t);
            g[0] += gt[0];
            g[1] += gt[1];
        }
        let n = ring1.len() as f64;
        let mut c = [ZERO; NB];
        c[0] = self.values[v];
        c[1] = g[0] / n * scale;
        c[2] = g[1] / n * scale;
        Some(LocalFit { x0, scale, kappa: None, c })
    }
}

/// Number of monomials up to degree three.
const NB: usize = 10;

/// Local expansion `sum c_k b_k` fitted around one vertex: monomials in
/// `(x - x0) / scale` of degree at most three, or with `kappa` set, the
/// real Fourier-Bessel functions `J_m(kappa r) (cos, sin)(m theta)` about `x0`
/// normalised to unit size at `r = scale`, in the order `m = 0, 1, 1, 2, 2, ...`.
#[derive(Clone, Copy, Debug)]
struct LocalFit {
    x0: Point,
    scale: f64,
    kappa: Option<f64>,
    c: [C; NB],
}

impl LocalFit {
    /// `J_m(kappa r) e^{i m theta}` for `m = 0..=5` and the normalisation of each order.
    fn waves(&self, kappa: f64, x: Point) -> ([C; 6], [f64; 6]) {
        let d = x - self.x0;
        let (r, th) = (d.norm(), d.angle());
        let mut f = [ZERO; 6];
        let mut norm = [1.0; 6];
        let half = 0.5 * kappa * self.scale;
        for m in 0..6u32 {
            let j = crate::specfun::bessel_j(m, kappa * r).unwrap_or(0.0);
            f[m as usize] = C::from_polar(1.0, m as f64 * th) * j;
            if m > 0 {
                norm[m as usize] = norm[m as usize - 1] * half / m as f64;
            }
        }
        (f, norm)
    }

    fn basis(&self, x: Point) -> [f64; NB] {
        match self.kappa {
            None => {
                let d = (x - self.x0) * (1.0 / self.scale);
                let (x, y) = (d.x, d.y);
                [1.0, x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y]
            }
            Some(k) => {
                let (f, norm) = self.waves(k, x);
                let mut b = [0.0; NB];
                b[0] = f[0].re;
                for m in 1..5 {
                    b[2 * m - 1] = f[m].re / norm[m];
                    b[2 * m] = f[m].im / norm[m];
                }
                b
            }
        }
    }

    fn value(&self, x: Point) -> C {
        let b = self.basis(x);
        (0..NB).map(|k| self.c[k] * b[k]).sum()
    }

    fn gradient(&self, x: Point) -> Grad<f64> {
        let c = &self.c;
        let Some(k) = self.kappa else {
            let d = (x - self.x0) * (1.0 / self.scale);
            let s = 1.0 / self.scale;
            let (x, y) = (d.x, d.y);
            return [
                (c[1] + c[3] * (2.0 * x) + c[4] * y + c[6] * (3.0 * x * x) + c[7] * (2.0 * x * y) + c[8] * (y * y)) * s,
                (c[2] + c[4] * x + c[5] * (2.0 * y) + c[7] * (x * x) + c[8] * (2.0 * x * y) + c[9] * (3.0 * y * y)) * s,
            ];
        };
        let (f, norm) = self.waves(k, x);
        // F_{-1} = -conj(F_1).
        let fm = |m: i32| if m >= 0 { f[m as usize] } else { -f[1].conj() };
        let i = C::new(0.0, 1.0);
        let dx = |m: i32| (fm(m - 1) - fm(m + 1)) * (0.5 * k);
        let dy = |m: i32| (fm(m + 1) + fm(m - 1)) * i * (0.5 * k);
        let mut g = [c[0] * dx(0).re, c[0] * dy(0).re];
        for m in 1..5 {
            let (gx, gy) = (dx(m as i32), dy(m as i32));
            g[0] += (c[2 * m - 1] * gx.re + c[2 * m] * gx.im) / norm[m];
            g[1] += (c[2 * m - 1] * gy.re + c[2 * m] * gy.im) / norm[m];
        }
        g
    }
}

/// Gaussian elimination with partial pivoting on the leading `n x n` block.
fn solve_small(m: &mut [[f64; NB]; NB], rhs: &mut [C; NB], n: usize) -> Option<[C; NB]> {
    let norm = (0..n).map(|i| m[i][i].abs()).fold(0.0, f64::max);
    for k in 0..n {
        let p = (k..n).max_by(|&a, &b| m[a][k].abs().total_cmp(&m[b][k].abs()))?;
        if m[p][k].abs() <= 1e-10 * norm {
            return None;
        }
        m.swap(k, p);
        rhs.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            let rk = rhs[k];
            rhs[i] -= rk * f;
        }
    }
    let mut x = [ZERO; NB];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for j in k + 1..n {
            s -= x[j] * m[k][j];
        }
        x[k] = s / m[k][k];
    }
    Some(x)
}

/// Recovered field: barycentric blend of the local fits at the
/// three vertices of the containing triangle.
pub struct RecoveredGradient<'f, 'm> {
    field: &'f ComplexField<'m>,
    allowed: Vec<bool>,
    fits: Vec<Option<LocalFit>>,
}

impl RecoveredGradient<'_, '_> {
    pub fn nodal(&self, v: usize) -> Option<Grad<f64>> {
        self.fits[v].map(|f| f.gradient(f.x0))
    }

    fn blend<T>(&self, t: usize, bary: [f64; 3], f: impl Fn(&LocalFit, Point) -> T, zero: T, add: impl Fn(T, T, f64) -> T) -> Option<T> {
        if !self.allowed[t] {
            return None;
        }
        let tri = self.field.mesh.triangles[t];
        let p = self.field.mesh.corners(t);
        let x = p[0] * bary[0] + p[1] * bary[1] + p[2] * bary[2];
        let mut acc = zero;
        for i in 0..3 {
            let fit = self.fits[tri[i]].as_ref()?;
            acc = add(acc, f(fit, x), bary[i]);
        }
        Some(acc)
    }

    /// Recovered gradient at barycentric point `bary` of triangle `t`.
    pub fn at(&self, t: usize, bary: [f64; 3]) -> Grad<f64> {
        self.blend(t, bary, |f, x| f.gradient(x), [ZERO; 2], |a, g, w| [a[0] + g[0] * w, a[1] + g[1] * w])
            .unwrap_or_else(|| self.field.triangle_gradient(t))
    }

    /// Recovered value at barycentric point `bary` of triangle `t`.
    pub fn value_at(&self, t: usize, bary: [f64; 3]) -> C {
        self.blend(t, bary, |f, x| f.value(x), ZERO, |a, v, w| a + v * w)
            .unwrap_or_else(|| self.field.at(t, bary))
    }

    /// Recovered value and gradient at `p`, searching only `region` when given.
    pub fn sample(&self, loc: &Locator<'_>, p: Point, region: Option<Region>) -> Option<(C, Grad<f64>)> {
        let (t, l) = loc.locate_in(p, region)?;
        Some((self.value_at(t, l), self.at(t, l)))
    }
}
