use super::C64;
use crate::error::{Error, Result};

/// Square complex matrix with equal lower and upper half-bandwidth `hb`.
///
/// Row-major storage of the `2 hb + 1` diagonals around the main one.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    hb: usize,
    data: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, hb: usize) -> Self {
        Self {
            n,
            hb,
            data: vec![C64::new(0.0, 0.0); n * (2 * hb + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.hb
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i.abs_diff(j) <= self.hb
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        i * (2 * self.hb + 1) + (j + self.hb - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        if self.in_band(i, j) {
            self.data[self.offset(i, j)]
        } else {
            C64::new(0.0, 0.0)
        }
    }

    /// Panics when `(i, j)` lies outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band {}", self.hb);
        let k = self.offset(i, j);
        self.data[k] += v;
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            n: self.n,
            hb: self.hb,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: C64, other: &BandMatrix) {
        assert_eq!(self.n, other.n);
        assert_eq!(self.hb, other.hb);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// `y += self * x`
    pub fn mul_add(&self, x: &[C64], y: &mut [C64]) {
        let w = 2 * self.hb + 1;
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.hb);
            let j1 = (i + self.hb).min(self.n - 1);
            let row = &self.data[i * w..(i + 1) * w];
            let mut acc = C64::new(0.0, 0.0);
            for j in j0..=j1 {
                acc += row[j + self.hb - i] * x[j];
            }
            y[i] += acc;
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Largest `|M_ij - M_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i..(i + self.hb + 1).min(self.n) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// General square band matrix in LAPACK `gbtrf` layout: column-major, with
/// room for `kl` extra superdiagonals of pivoting fill.
#[derive(Debug, Clone)]
pub struct GeneralBand {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<C64>,
}

impl GeneralBand {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ldab,
            ab: vec![C64::new(0.0, 0.0); ldab * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ldab + self.kl + self.ku + i - j
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        debug_assert!(i + self.ku >= j && j + self.kl >= i);
        let k = self.idx(i, j);
        self.ab[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if i + self.ku >= j && j + self.kl >= i {
            self.ab[self.idx(i, j)]
        } else {
            C64::new(0.0, 0.0)
        }
    }
}

/// LU factorization with partial pivoting of a [`GeneralBand`].
#[derive(Debug, Clone)]
pub struct BandLu {
    band: GeneralBand,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn factor(mut band: GeneralBand) -> Result<Self> {
        let n = band.n;
        let kl = band.kl;
        let kv = band.ku + band.kl;
        let ldab = band.ldab;
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        let mut scale = 0.0f64;
        for z in &band.ab {
            scale = scale.max(z.norm());
        }
        let tiny = scale * f64::EPSILON * 1e-6;

        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab + kv;
            let mut p = 0usize;
            let mut best = -1.0f64;
            for r in 0..=km {
                let a = band.ab[col + r].l1_norm();
                if a > best {
                    best = a;
                    p = r;
                }
            }
            ipiv[j] = j + p;
            let piv = band.ab[col + p];
            if piv.norm() <= tiny {
                return Err(Error::Singular {
                    re: piv.re,
                    im: piv.im,
                });
            }
            ju = ju.max((j + band.ku + p).min(n - 1));
            if p != 0 {
                for c in j..=ju {
                    let a = c * ldab + kv + j - c;
                    let b = c * ldab + kv + j + p - c;
                    band.ab.swap(a, b);
                }
            }
            if km > 0 {
                let inv = C64::new(1.0, 0.0) / band.ab[col];
                for r in 1..=km {
                    band.ab[col + r] *= inv;
                }
                for c in (j + 1)..=ju {
                    let base = c * ldab + kv + j - c;
                    let t = band.ab[base];
                    if t.re == 0.0 && t.im == 0.0 {
                        continue;
                    }
                    let (left, right) = band.ab.split_at_mut(base);
                    let lcol = &left[col + 1..col + 1 + km];
                    let target = &mut right[1..1 + km];
                    for (x, l) in target.iter_mut().zip(lcol) {
                        *x -= l * t;
                    }
                }
            }
        }
        Ok(Self { band, ipiv })
    }

    pub fn dim(&self) -> usize {
        self.band.n
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [C64]) {
        let n = self.band.n;
        let kl = self.band.kl;
        let kv = self.band.ku + kl;
        let ldab = self.band.ldab;
        let ab = &self.band.ab;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            if km > 0 && (bj.re != 0.0 || bj.im != 0.0) {
                let col = j * ldab + kv;
                for r in 1..=km {
                    b[j + r] -= ab[col + r] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let col = j * ldab + kv;
            b[j] /= ab[col];
            let bj = b[j];
            let i0 = j.saturating_sub(kv);
            for i in i0..j {
                b[i] -= ab[col + i - j] * bj;
            }
        }
    }

    /// Smallest pivot modulus.
    pub fn min_pivot(&self) -> f64 {
        let kv = self.band.ku + self.band.kl;
        (0..self.band.n)
            .map(|j| self.band.ab[j * self.band.ldab + kv].norm())
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_general(
        n: usize,
        kl: usize,
        ku: usize,
        rng: &mut ChaCha8Rng,
    ) -> (GeneralBand, Vec<Vec<C64>>) {
        let mut g = GeneralBand::zeros(n, kl, ku);
        let mut d = vec![vec![c(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                // weak diagonal to force pivoting
                let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let v = if i == j { v * 0.01 } else { v };
                g.add(i, j, v);
                d[i][j] = v;
            }
        }
        (g, d)
    }

    #[test]
    fn band_lu_solves_against_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(1, 0, 0), (5, 1, 1), (40, 3, 5), (60, 7, 2), (33, 10, 10)] {
            let (g, d) = random_general(n, kl, ku, &mut rng);
            let x: Vec<C64> = (0..n)
                .map(|i| c(i as f64 * 0.1, 1.0 - i as f64 * 0.03))
                .collect();
            let mut b: Vec<C64> = (0..n)
                .map(|i| (0..n).map(|j| d[i][j] * x[j]).sum())
                .collect();
            let lu = BandLu::factor(g).unwrap();
            lu.solve(&mut b);
            let err = b
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-9, "n={n} kl={kl} ku={ku} err={err}");
        }
    }

    #[test]
    fn singular_band_is_reported() {
        let g = GeneralBand::zeros(4, 1, 1);
        assert!(matches!(BandLu::factor(g), Err(Error::Singular { .. })));
    }

    #[test]
    fn symmetric_band_matvec() {
        let mut m = BandMatrix::zeros(4, 1);
        for i in 0..4 {
            m.add(i, i, c(2.0, 0.0));
            if i + 1 < 4 {
                m.add(i, i + 1, c(-1.0, 0.5));
                m.add(i + 1, i, c(-1.0, 0.5));
            }
        }
        assert_eq!(m.symmetry_defect(), 0.0);
        let x = vec![c(1.0, 0.0); 4];
        let mut y = vec![c(0.0, 0.0); 4];
        m.mul_add(&x, &mut y);
        assert_eq!(y[0], c(1.0, 0.5));
        assert_eq!(y[1], c(0.0, 1.0));
    }
}
