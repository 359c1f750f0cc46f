//! Sparse complex symmetric matrices and a direct `L D L^T` factorization
//! with geometric nested-dissection ordering.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::Point;

const NONE: usize = usize::MAX;

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<Complex64>,
}

impl CsrMatrix {
    /// Sum duplicate triplets. The result does not depend on the input order
    /// beyond the order of equal `(row, col)` entries, which is kept.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, Complex64)>) -> Self {
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut col = Vec::with_capacity(t.len() / 4);
        let mut val: Vec<Complex64> = Vec::with_capacity(t.len() / 4);
        let mut last = (NONE, NONE);
        for (r, c, v) in t {
            if (r, c) == last {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(c);
                val.push(v);
                row_ptr[r + 1] += 1;
                last = (r, c);
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col, val }
    }

    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let s = &self.col[self.row_ptr[r]..self.row_ptr[r + 1]];
        match s.binary_search(&c) {
            Ok(k) => self.val[self.row_ptr[r] + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.val[k] * x[self.col[k]])
                    .sum()
            })
            .collect()
    }

    /// Largest `|A_ij - A_ji|` relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col[k];
                scale = scale.max(self.val[k].norm());
                worst = worst.max((self.val[k] - self.get(c, r)).norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }
}

pub fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Fill-reducing ordering by recursive coordinate bisection with vertex separators.
pub fn nested_dissection(adj: &[Vec<usize>], coords: &[Point]) -> Vec<usize> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut stamp = vec![0u32; n];
    let mut epoch = 0u32;
    let nodes: Vec<usize> = (0..n).collect();
    // Explicit stack: (nodes, separator to emit after the subtree).
    enum Task {
        Split(Vec<usize>),
        Emit(Vec<usize>),
    }
    let mut stack = vec![Task::Split(nodes)];
    while let Some(task) = stack.pop() {
        let mut nodes = match task {
            Task::Emit(sep) => {
                order.extend(sep);
                continue;
            }
            Task::Split(nodes) => nodes,
        };
        if nodes.len() <= 32 {
            order.extend(nodes);
            continue;
        }
        let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for &v in &nodes {
            let p = coords[v];
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let along_x = hi.x - lo.x >= hi.y - lo.y;
        let keyf = |v: usize| if along_x { coords[v].x } else { coords[v].y };
        nodes.sort_by(|&a, &b| keyf(a).total_cmp(&keyf(b)).then(a.cmp(&b)));
        let mid = nodes.len() / 2;
        let right: Vec<usize> = nodes[mid..].to_vec();
        epoch += 1;
        for &v in &right {
            stamp[v] = epoch;
        }
        let mut left = Vec::with_capacity(mid);
        let mut sep = Vec::new();
        for &v in &nodes[..mid] {
            if adj[v].iter().any(|&w| stamp[w] == epoch) {
                sep.push(v);
            } else {
                left.push(v);
            }
        }
        stack.push(Task::Emit(sep));
        stack.push(Task::Split(right));
        stack.push(Task::Split(left));
    }
    order
}

/// `P A P^T = L D L^T` with unit lower-triangular `L` (no pivoting).
#[derive(Clone, Debug)]
pub struct LdlFactor {
    n: usize,
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<Complex64>,
    d: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct SolveStats {
    pub unknowns: usize,
    pub matrix_nnz: usize,
    pub factor_nnz: usize,
    pub refinement_steps: usize,
    pub relative_residual: f64,
    /// `max |D| / min |D|`, a cheap lower bound on the condition number.
    pub pivot_ratio: f64,
}

impl LdlFactor {
    pub fn new(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.n;
        let mut iperm = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            iperm[p] = k;
        }
        // Upper triangle of the permuted matrix, by columns.
        let mut cnt = vec![0usize; n + 1];
        for r in 0..n {
            for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                let (pi, pj) = (iperm[r], iperm[a.col[k]]);
                if pi <= pj {
                    cnt[pj + 1] += 1;
                }
            }
        }
        for j in 0..n {
            cnt[j + 1] += cnt[j];
        }
        let ap = cnt.clone();
        let mut ai = vec![0; ap[n]];
        let mut ax = vec![Complex64::new(0.0, 0.0); ap[n]];
        let mut next = cnt;
        for r in 0..n {
            for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                let (pi, pj) = (iperm[r], iperm[a.col[k]]);
                if pi <= pj {
                    ai[next[pj]] = pi;
                    ax[next[pj]] = a.val[k];
                    next[pj] += 1;
                }
            }
        }

        // Elimination tree and column counts.
        let mut parent = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for &i0 in &ai[ap[j]..ap[j + 1]] {
                let mut i = i0;
                if i == j {
                    continue;
                }
                while work[i] != j {
                    if parent[i] == NONE {
                        parent[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = parent[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let total = lp[n];
        let mut li = vec![0usize; total];
        let mut lx = vec![Complex64::new(0.0, 0.0); total];
        let mut d = vec![Complex64::new(0.0, 0.0); n];
        let mut dinv = vec![Complex64::new(0.0, 0.0); n];
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        let mut marked = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let mut next_space: Vec<usize> = lp[..n].to_vec();

        for k in 0..n {
            let mut nnz_y = 0;
            for p in ap[k]..ap[k + 1] {
                let b = ai[p];
                if b == k {
                    d[k] = ax[p];
                    continue;
                }
                y[b] = ax[p];
                if !marked[b] {
                    marked[b] = true;
                    elim[0] = b;
                    let mut ne = 1;
                    let mut nx = parent[b];
                    while nx != NONE && nx < k {
                        if marked[nx] {
                            break;
                        }
                        marked[nx] = true;
                        elim[ne] = nx;
                        ne += 1;
                        nx = parent[nx];
                    }
                    while ne > 0 {
                        ne -= 1;
                        y_idx[nnz_y] = elim[ne];
                        nnz_y += 1;
                    }
                }
            }
            for i in (0..nnz_y).rev() {
                let c = y_idx[i];
                let tmp = next_space[c];
                let yc = y[c];
                for j in lp[c]..tmp {
                    y[li[j]] -= lx[j] * yc;
                }
                li[tmp] = k;
                lx[tmp] = yc * dinv[c];
                d[k] -= yc * lx[tmp];
                next_space[c] += 1;
                y[c] = Complex64::new(0.0, 0.0);
                marked[c] = false;
            }
            if d[k].norm() == 0.0 || !d[k].is_finite() {
                return Err(Error::Numerical(format!(
                    "zero or non-finite pivot at step {k} of {n}; the system is singular \
                     (a resonance of the truncated problem?)"
                )));
            }
            dinv[k] = 1.0 / d[k];
        }
        Ok(Self { n, perm, lp, li, lx, d })
    }

    pub fn factor_nnz(&self) -> usize {
        self.li.len()
    }

    pub fn pivot_ratio(&self) -> f64 {
        let mx = self.d.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mn = self.d.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        mx / mn
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..self.n {
            let xi = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                x[self.li[j]] -= self.lx[j] * xi;
            }
        }
        for i in 0..self.n {
            x[i] /= self.d[i];
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                s -= self.lx[j] * x[self.li[j]];
            }
            x[i] = s;
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.n];
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = x[k];
        }
        out
    }
}

/// Solve `A x = b` directly, refining until the relative residual is at most `tol`.
pub fn solve_direct(
    a: &CsrMatrix,
    b: &[Complex64],
    coords: &[Point],
    tol: f64,
) -> Result<(Vec<Complex64>, SolveStats)> {
    let n = a.n;
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|r| a.col[a.row_ptr[r]..a.row_ptr[r + 1]].iter().copied().filter(|&c| c != r).collect())
        .collect();
    let perm = nested_dissection(&adj, coords);
    let f = LdlFactor::new(a, perm)?;
    let bn = norm2(b);
    let mut stats = SolveStats {
        unknowns: n,
        matrix_nnz: a.nnz(),
        factor_nnz: f.factor_nnz(),
        refinement_steps: 0,
        relative_residual: 0.0,
        pivot_ratio: f.pivot_ratio(),
    };
    if bn == 0.0 {
        return Ok((vec![Complex64::new(0.0, 0.0); n], stats));
    }
    let mut x = f.solve(b);
    let mut rel = f64::INFINITY;
    for step in 0..=5 {
        let ax = a.matvec(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        rel = norm2(&r) / bn;
        stats.refinement_steps = step;
        if rel <= tol || !rel.is_finite() {
            break;
        }
        let dx = f.solve(&r);
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
    }
    stats.relative_residual = rel;
    if !(rel <= tol) {
        return Err(Error::Numerical(format!(
            "linear solve stalled at relative residual {rel:.3e} (target {tol:.1e}); \
             pivot ratio {:.3e} suggests a near-singular system",
            stats.pivot_ratio
        )));
    }
    Ok((x, stats))
}
