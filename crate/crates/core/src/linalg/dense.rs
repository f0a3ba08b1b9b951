use super::{c, C64};
use crate::error::{Error, Result};

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![c(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let cc = if r == 0 { 0 } else { rows[0].len() };
        let mut m = Self::zeros(r, cc);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cc);
            m.data[i * cc..(i + 1) * cc].copy_from_slice(row);
        }
        m
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Solves `self * X = B` for square `self` by partial-pivoting LU.
    pub fn solve(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(rhs.rows, self.rows);
        let n = self.rows;
        let mut a = self.clone();
        let mut b = rhs.clone();
        let scale = a.max_abs();
        for k in 0..n {
            let mut p = k;
            for i in (k + 1)..n {
                if a[(i, k)].norm() > a[(p, k)].norm() {
                    p = i;
                }
            }
            if a[(p, k)].norm() <= scale * 1e-300_f64.max(f64::EPSILON * 1e-8) {
                return Err(Error::Singular {
                    re: a[(p, k)].re,
                    im: a[(p, k)].im,
                });
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                for j in 0..b.cols {
                    b.data.swap(k * b.cols + j, p * b.cols + j);
                }
            }
            let inv = c(1.0, 0.0) / a[(k, k)];
            for i in (k + 1)..n {
                let f = a[(i, k)] * inv;
                if f.re == 0.0 && f.im == 0.0 {
                    continue;
                }
                for j in k..n {
                    let akj = a[(k, j)];
                    a[(i, j)] -= f * akj;
                }
                for j in 0..b.cols {
                    let bkj = b[(k, j)];
                    b[(i, j)] -= f * bkj;
                }
            }
        }
        for k in (0..n).rev() {
            for j in 0..b.cols {
                let mut s = b[(k, j)];
                for i in (k + 1)..n {
                    s -= a[(k, i)] * b[(i, j)];
                }
                b[(k, j)] = s / a[(k, k)];
            }
        }
        Ok(b)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Givens rotation `[c s; -conj(s) c]` with real `c` mapping `(f, g)` to `(r, 0)`.
fn givens(f: C64, g: C64) -> (f64, C64) {
    let gn = g.norm();
    if gn == 0.0 {
        return (1.0, c(0.0, 0.0));
    }
    let fn_ = f.norm();
    if fn_ == 0.0 {
        return (0.0, g.conj() / gn);
    }
    let r = fn_.hypot(gn);
    let cs = fn_ / r;
    let sn = (f / fn_) * g.conj() / r;
    (cs, sn)
}

/// Complex Schur decomposition `A = Q T Q^H` of a square matrix.
#[derive(Debug, Clone)]
pub struct Schur {
    pub q: DenseMatrix,
    pub t: DenseMatrix,
}

impl Schur {
    pub fn new(a: &DenseMatrix) -> Result<Schur> {
        assert_eq!(a.rows, a.cols);
        let n = a.rows;
        let mut h = a.clone();
        let mut q = DenseMatrix::identity(n);
        hessenberg(&mut h, &mut q);
        hessenberg_qr(&mut h, &mut q)?;
        for i in 0..n {
            for j in 0..i {
                h[(i, j)] = c(0.0, 0.0);
            }
        }
        Ok(Schur { q, t: h })
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.t.rows).map(|i| self.t[(i, i)]).collect()
    }

    /// Applies the rotation `[cs sn; -conj(sn) cs]` to rows `k, k+1` of `T`
    /// and its adjoint to columns, updating `Q` accordingly.
    fn rotate(&mut self, k: usize, cs: f64, sn: C64) {
        let n = self.t.rows;
        for j in 0..n {
            let a = self.t[(k, j)];
            let b = self.t[(k + 1, j)];
            self.t[(k, j)] = a * cs + sn * b;
            self.t[(k + 1, j)] = -sn.conj() * a + b * cs;
        }
        for i in 0..n {
            let a = self.t[(i, k)];
            let b = self.t[(i, k + 1)];
            self.t[(i, k)] = a * cs + b * sn.conj();
            self.t[(i, k + 1)] = -a * sn + b * cs;
        }
        for i in 0..n {
            let a = self.q[(i, k)];
            let b = self.q[(i, k + 1)];
            self.q[(i, k)] = a * cs + b * sn.conj();
            self.q[(i, k + 1)] = -a * sn + b * cs;
        }
    }

    /// Swaps the adjacent diagonal entries `k` and `k + 1`.
    fn swap_adjacent(&mut self, k: usize) {
        let t11 = self.t[(k, k)];
        let t22 = self.t[(k + 1, k + 1)];
        let t12 = self.t[(k, k + 1)];
        if t11 == t22 {
            return;
        }
        let (cs, sn) = givens(t12, t22 - t11);
        self.rotate(k, cs, sn);
        self.t[(k + 1, k)] = c(0.0, 0.0);
        self.t[(k, k)] = t22;
        self.t[(k + 1, k + 1)] = t11;
    }

    /// Reorders so that the diagonal entries flagged in `select` come first,
    /// keeping their relative order.
    pub fn reorder(&mut self, select: &[bool]) {
        let n = self.t.rows;
        assert_eq!(select.len(), n);
        let mut sel = select.to_vec();
        let mut ks = 0;
        for k in 0..n {
            if sel[k] {
                let mut j = k;
                while j > ks {
                    self.swap_adjacent(j - 1);
                    sel.swap(j - 1, j);
                    j -= 1;
                }
                ks += 1;
            }
        }
    }

    /// Right eigenvector of `T` for diagonal position `k`, transformed by `Q`
    /// and normalized to unit 2-norm.
    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        let n = self.t.rows;
        let mut x = vec![c(0.0, 0.0); n];
        x[k] = c(1.0, 0.0);
        let lambda = self.t[(k, k)];
        let smin = (self.t.max_abs() * f64::EPSILON).max(f64::MIN_POSITIVE);
        for i in (0..k).rev() {
            let mut s = c(0.0, 0.0);
            for j in (i + 1)..=k {
                s += self.t[(i, j)] * x[j];
            }
            let mut d = self.t[(i, i)] - lambda;
            if d.norm() < smin {
                d = c(smin, 0.0);
            }
            x[i] = -s / d;
        }
        let mut v = vec![c(0.0, 0.0); n];
        for i in 0..n {
            let mut s = c(0.0, 0.0);
            for j in 0..=k {
                s += self.q[(i, j)] * x[j];
            }
            v[i] = s;
        }
        let nrm = super::norm2(&v);
        v.iter_mut().for_each(|z| *z /= nrm);
        v
    }
}

/// Householder reduction to upper Hessenberg form, accumulating into `q`.
fn hessenberg(h: &mut DenseMatrix, q: &mut DenseMatrix) {
    let n = h.rows;
    if n < 3 {
        return;
    }
    for k in 0..(n - 2) {
        let mut v: Vec<C64> = ((k + 1)..n).map(|i| h[(i, k)]).collect();
        let alpha = super::norm2(&v);
        if alpha == 0.0 {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            c(1.0, 0.0)
        };
        v[0] += phase * alpha;
        let vn = super::norm2(&v);
        if vn == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= vn);
        // H <- (I - 2vv^H) H (I - 2vv^H)
        for j in 0..n {
            let mut s = c(0.0, 0.0);
            for (i, vi) in v.iter().enumerate() {
                s += vi.conj() * h[(k + 1 + i, j)];
            }
            for (i, vi) in v.iter().enumerate() {
                h[(k + 1 + i, j)] -= vi * s * 2.0;
            }
        }
        for i in 0..n {
            let mut s = c(0.0, 0.0);
            for (j, vj) in v.iter().enumerate() {
                s += h[(i, k + 1 + j)] * vj;
            }
            for (j, vj) in v.iter().enumerate() {
                h[(i, k + 1 + j)] -= s * vj.conj() * 2.0;
            }
        }
        for i in 0..n {
            let mut s = c(0.0, 0.0);
            for (j, vj) in v.iter().enumerate() {
                s += q[(i, k + 1 + j)] * vj;
            }
            for (j, vj) in v.iter().enumerate() {
                q[(i, k + 1 + j)] -= s * vj.conj() * 2.0;
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = c(0.0, 0.0);
        }
    }
}

/// Implicit single-shift QR iteration on an upper Hessenberg matrix.
fn hessenberg_qr(h: &mut DenseMatrix, q: &mut DenseMatrix) -> Result<()> {
    let n = h.rows;
    if n == 0 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iter = 0usize;
    let max_iter = 100 * n.max(10);
    let mut total = 0usize;
    while hi > 0 {
        // Locate the start of the active unreduced block.
        let mut lo = hi;
        while lo > 0 {
            let s = h[(lo - 1, lo - 1)].l1_norm() + h[(lo, lo)].l1_norm();
            let s = if s == 0.0 { h.max_abs() } else { s };
            if h[(lo, lo - 1)].l1_norm() <= eps * s {
                h[(lo, lo - 1)] = c(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_iter {
            return Err(Error::NoConvergence {
                iterations: total,
                residual: h[(hi, hi - 1)].norm(),
            });
        }
        // Wilkinson shift from the trailing 2x2 block, with exceptional
        // shifts to break cycles.
        let shift = if iter % 11 == 10 {
            h[(hi, hi)] + c(h[(hi, hi - 1)].norm() * 0.75, 0.0)
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let cc = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            let tr = (a + d) * 0.5;
            let det = a * d - b * cc;
            let disc = (tr * tr - det).sqrt();
            let l1 = tr + disc;
            let l2 = tr - disc;
            if (l1 - d).norm() < (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };
        let mut f = h[(lo, lo)] - shift;
        let mut g = h[(lo + 1, lo)];
        for k in lo..hi {
            let (cs, sn) = givens(f, g);
            if k > lo {
                // Annihilate the bulge at (k+1, k-1).
                let a = h[(k, k - 1)];
                let b = h[(k + 1, k - 1)];
                h[(k, k - 1)] = a * cs + sn * b;
                h[(k + 1, k - 1)] = c(0.0, 0.0);
            }
            for j in k..n {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = a * cs + sn * b;
                h[(k + 1, j)] = -sn.conj() * a + b * cs;
            }
            let imax = (k + 2).min(hi);
            for i in 0..=imax {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = a * cs + b * sn.conj();
                h[(i, k + 1)] = -a * sn + b * cs;
            }
            for i in 0..n {
                let a = q[(i, k)];
                let b = q[(i, k + 1)];
                q[(i, k)] = a * cs + b * sn.conj();
                q[(i, k + 1)] = -a * sn + b * cs;
            }
            if k + 1 < hi {
                f = h[(k + 1, k)];
                g = h[(k + 2, k)];
            }
        }
    }
    Ok(())
}
