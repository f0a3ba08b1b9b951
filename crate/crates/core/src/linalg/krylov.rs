use super::{c, dot_c, norm2, DenseMatrix, Schur, C64};
use crate::error::{Error, Result};

/// Something that maps a vector to a vector of the same length.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    /// Krylov subspace dimension.
    pub subspace: usize,
    pub max_restarts: usize,
    /// Relative Ritz residual `|b^H y| / |θ|` at which a pair is accepted.
    pub tol: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            subspace: 40,
            max_restarts: 200,
            tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RitzPair {
    pub value: C64,
    pub vector: Vec<C64>,
    /// Relative Ritz residual estimate.
    pub residual: f64,
}

/// Largest-magnitude eigenpairs of `op` by the Krylov-Schur method.
///
/// Returns `k` pairs sorted by decreasing `|θ|`.
pub fn krylov_schur(
    op: &dyn LinearOperator,
    k: usize,
    start: &[C64],
    opts: &KrylovOptions,
) -> Result<Vec<RitzPair>> {
    let n = op.dim();
    assert_eq!(start.len(), n);
    if k == 0 {
        return Ok(Vec::new());
    }
    let m = opts.subspace.max(k + 2).min(n);
    let k = k.min(m.saturating_sub(1)).max(1);
    if m < 2 {
        // 1x1 problem
        let mut y = vec![c(0.0, 0.0); n];
        op.apply(start, &mut y);
        let theta = y[0] / start[0];
        return Ok(vec![RitzPair {
            value: theta,
            vector: start.to_vec(),
            residual: 0.0,
        }]);
    }
    let keep = (k + (m - k) / 2).min(m - 1).max(k);

    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
    let nrm = norm2(start);
    if nrm == 0.0 {
        return Err(Error::InvalidArgument("zero start vector".into()));
    }
    basis.push(start.iter().map(|z| z / nrm).collect());
    // Rayleigh matrix, (m+1) x m.
    let mut rq = DenseMatrix::zeros(m + 1, m);
    let mut filled = 0usize;
    let mut best_res = f64::INFINITY;

    for restart in 0..=opts.max_restarts {
        for j in filled..m {
            let mut w = vec![c(0.0, 0.0); n];
            op.apply(&basis[j], &mut w);
            let wn0 = norm2(&w);
            // Classical Gram-Schmidt, repeated once (DGKS).
            for _pass in 0..2 {
                for (i, v) in basis.iter().enumerate().take(j + 1) {
                    let h = dot_c(v, &w);
                    rq[(i, j)] += h;
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= h * vi;
                    }
                }
            }
            let wn = norm2(&w);
            if wn <= 1e-14 * wn0.max(f64::MIN_POSITIVE) {
                // Invariant subspace: continue with a fresh orthogonal direction.
                w = deterministic_vector(n, j as u64 + 17);
                for _pass in 0..2 {
                    for v in basis.iter().take(j + 1) {
                        let h = dot_c(v, &w);
                        for (wi, vi) in w.iter_mut().zip(v) {
                            *wi -= h * vi;
                        }
                    }
                }
                let nn = norm2(&w);
                w.iter_mut().for_each(|z| *z /= nn);
                rq[(j + 1, j)] = c(0.0, 0.0);
            } else {
                rq[(j + 1, j)] = c(wn, 0.0);
                w.iter_mut().for_each(|z| *z /= wn);
            }
            if basis.len() > j + 1 {
                basis[j + 1] = w;
            } else {
                basis.push(w);
            }
        }

        let mut square = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                square[(i, j)] = rq[(i, j)];
            }
        }
        let b: Vec<C64> = (0..m).map(|j| rq[(m, j)]).collect();
        let mut schur = Schur::new(&square)?;
        let ev = schur.eigenvalues();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| ev[b].norm().partial_cmp(&ev[a].norm()).unwrap());

        // Residual estimates of the wanted pairs.
        let mut residuals = Vec::with_capacity(k);
        for &idx in order.iter().take(k) {
            let y = schur.eigenvector(idx);
            let r: C64 = b.iter().zip(&y).map(|(bj, yj)| bj * yj).sum();
            residuals.push(r.norm() / ev[idx].norm().max(f64::MIN_POSITIVE));
        }
        let worst = residuals.iter().cloned().fold(0.0, f64::max);
        best_res = best_res.min(worst);
        let done = worst < opts.tol;

        let mut select = vec![false; m];
        let nkeep = if done { k } else { keep };
        for &idx in order.iter().take(nkeep) {
            select[idx] = true;
        }
        // Reordering keeps the selected pairs in their original relative order;
        // sort them by magnitude afterwards when extracting.
        schur.reorder(&select);

        if done || restart == opts.max_restarts {
            if !done {
                return Err(Error::NoConvergence {
                    iterations: restart,
                    residual: best_res,
                });
            }
            let mut pairs = Vec::with_capacity(k);
            for i in 0..k {
                let y = schur.eigenvector(i);
                let value = schur.t[(i, i)];
                let res_c: C64 = b.iter().zip(&y).map(|(bj, yj)| bj * yj).sum();
                let mut x = vec![c(0.0, 0.0); n];
                for (j, yj) in y.iter().enumerate() {
                    for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                        *xi += vi * yj;
                    }
                }
                let xn = norm2(&x);
                x.iter_mut().for_each(|z| *z /= xn);
                pairs.push(RitzPair {
                    value,
                    vector: x,
                    residual: res_c.norm() / value.norm().max(f64::MIN_POSITIVE),
                });
            }
            pairs.sort_by(|a, b| b.value.norm().partial_cmp(&a.value.norm()).unwrap());
            return Ok(pairs);
        }

        // Thick restart: V <- V Q[:, :keep], Rayleigh <- [T11; b^H Q1].
        let mut new_basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        for i in 0..nkeep {
            let mut x = vec![c(0.0, 0.0); n];
            for j in 0..m {
                let qji = schur.q[(j, i)];
                if qji.re == 0.0 && qji.im == 0.0 {
                    continue;
                }
                for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                    *xi += vi * qji;
                }
            }
            new_basis.push(x);
        }
        new_basis.push(std::mem::take(&mut basis[m]));
        basis = new_basis;
        rq = DenseMatrix::zeros(m + 1, m);
        for i in 0..nkeep {
            for j in 0..nkeep {
                rq[(i, j)] = schur.t[(i, j)];
            }
        }
        for j in 0..nkeep {
            let mut s = c(0.0, 0.0);
            for l in 0..m {
                s += b[l] * schur.q[(l, j)];
            }
            rq[(nkeep, j)] = s;
        }
        filled = nkeep;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_restarts,
        residual: best_res,
    })
}

/// Fixed pseudo-random unit vector (splitmix64), for reproducible starts.
pub(crate) fn deterministic_vector(n: usize, seed: u64) -> Vec<C64> {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
    let mut next = || {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut v: Vec<C64> = (0..n).map(|_| c(next(), next())).collect();
    let nn = norm2(&v);
    v.iter_mut().for_each(|z| *z /= nn);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Diag(Vec<C64>);
    impl LinearOperator for Diag {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[C64], y: &mut [C64]) {
            for i in 0..x.len() {
                y[i] = self.0[i] * x[i];
            }
        }
    }

    struct Dense(DenseMatrix);
    impl LinearOperator for Dense {
        fn dim(&self) -> usize {
            self.0.rows
        }
        fn apply(&self, x: &[C64], y: &mut [C64]) {
            for i in 0..self.0.rows {
                y[i] = (0..self.0.cols).map(|j| self.0[(i, j)] * x[j]).sum();
            }
        }
    }

    #[test]
    fn finds_dominant_diagonal_entries() {
        let d: Vec<C64> = (0..300)
            .map(|i| c(1.0 / (1.0 + i as f64), 0.01 * (i as f64).sin()))
            .collect();
        let op = Diag(d.clone());
        let start = deterministic_vector(300, 3);
        let pairs = krylov_schur(&op, 4, &start, &KrylovOptions::default()).unwrap();
        for (p, want) in pairs.iter().zip(&d) {
            assert!((p.value - want).norm() < 1e-12, "{} vs {}", p.value, want);
        }
    }

    #[test]
    fn nonnormal_operator() {
        let n = 120;
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = c(1.0 + i as f64 * 0.05, -0.02 * i as f64);
            if i + 1 < n {
                a[(i, i + 1)] = c(0.3, 0.1);
            }
            if i + 3 < n {
                a[(i, i + 3)] = c(-0.2, 0.0);
            }
        }
        let op = Dense(a.clone());
        let start = deterministic_vector(n, 9);
        let pairs = krylov_schur(&op, 3, &start, &KrylovOptions::default()).unwrap();
        for p in &pairs {
            let mut y = vec![c(0.0, 0.0); n];
            op.apply(&p.vector, &mut y);
            let res: f64 = y
                .iter()
                .zip(&p.vector)
                .map(|(yi, xi)| (yi - p.value * xi).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-9, "res={res}");
        }
        // triangular: eigenvalues are the diagonal
        let top = c(1.0 + 119.0 * 0.05, -0.02 * 119.0);
        assert!((pairs[0].value - top).norm() < 1e-10);
    }
}
