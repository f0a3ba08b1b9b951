//! Angular algebra: Wigner 3j symbols, Gaunt integrals over complex
//! spherical harmonics, Legendre polynomials and Gauss quadrature rules.
//!
//! Spherical harmonics carry the Condon-Shortley phase, so that
//! `Y_l^{-m} = (-1)^m conj(Y_l^m)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{invalid, Result};

const MAX_FACTORIAL: usize = 400;

fn ln_factorials() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(MAX_FACTORIAL + 1);
        let mut acc = 0.0f64;
        t.push(0.0);
        for k in 1..=MAX_FACTORIAL {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

#[inline]
fn ln_fact(n: i64) -> f64 {
    ln_factorials()[n as usize]
}

/// An `(l, m)` partial wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AngularChannel {
    pub l: i32,
    pub m: i32,
}

impl AngularChannel {
    pub fn new(l: i32, m: i32) -> Result<Self> {
        if l < 0 || m.abs() > l {
            return invalid(format!("channel (l={l}, m={m}) violates |m| <= l"));
        }
        Ok(Self { l, m })
    }

    /// Position in the lexicographic `(l, m)` ordering with `m` running from `-l` to `l`.
    #[inline]
    pub fn index(&self) -> usize {
        (self.l * self.l + self.l + self.m) as usize
    }

    /// All channels with `l <= l_max`, `(l_max + 1)^2` of them.
    pub fn enumerate(l_max: i32) -> Vec<AngularChannel> {
        (0..=l_max)
            .flat_map(|l| (-l..=l).map(move |m| AngularChannel { l, m }))
            .collect()
    }

    pub fn count(l_max: i32) -> usize {
        ((l_max + 1) * (l_max + 1)) as usize
    }
}

/// Wigner 3j symbol for integer angular momenta, from the Racah sum.
pub fn wigner3j(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> Result<f64> {
    if j1 < 0 || j2 < 0 || j3 < 0 {
        return invalid(format!("negative angular momentum in 3j({j1},{j2},{j3})"));
    }
    if m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return invalid(format!(
            "projection exceeds angular momentum in 3j({j1},{j2},{j3};{m1},{m2},{m3})"
        ));
    }
    if (j1 + j2 + j3) as usize + 1 > MAX_FACTORIAL {
        return invalid("angular momenta too large for the factorial table");
    }
    Ok(wigner3j_unchecked(j1, j2, j3, m1, m2, m3))
}

fn wigner3j_unchecked(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> f64 {
    if m1 + m2 + m3 != 0 {
        return 0.0;
    }
    if j3 < (j1 - j2).abs() || j3 > j1 + j2 {
        return 0.0;
    }
    if m1 == 0 && m2 == 0 && m3 == 0 && (j1 + j2 + j3) % 2 == 1 {
        return 0.0;
    }
    let (j1, j2, j3) = (j1 as i64, j2 as i64, j3 as i64);
    let (m1, m2, m3) = (m1 as i64, m2 as i64, m3 as i64);

    let ln_delta = ln_fact(j1 + j2 - j3) + ln_fact(j1 - j2 + j3) + ln_fact(-j1 + j2 + j3)
        - ln_fact(j1 + j2 + j3 + 1);
    let ln_pref = 0.5
        * (ln_delta
            + ln_fact(j1 + m1)
            + ln_fact(j1 - m1)
            + ln_fact(j2 + m2)
            + ln_fact(j2 - m2)
            + ln_fact(j3 + m3)
            + ln_fact(j3 - m3));

    let k_min = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let k_max = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let ln_den = ln_fact(k)
            + ln_fact(j3 - j2 + k + m1)
            + ln_fact(j3 - j1 + k - m2)
            + ln_fact(j1 + j2 - j3 - k)
            + ln_fact(j1 - k - m1)
            + ln_fact(j2 - k + m2);
        let term = (ln_pref - ln_den).exp();
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if (j1 - j2 - m3).rem_euclid(2) == 1 {
        -sum
    } else {
        sum
    }
}

/// `true` when `(l, m; lambda, mu; lp, mp)` passes the Gaunt selection rules.
#[inline]
pub fn gaunt_allowed(l: i32, m: i32, lambda: i32, mu: i32, lp: i32, mp: i32) -> bool {
    mu == m - mp && lp >= (l - lambda).abs() && lp <= l + lambda && (l + lambda + lp) % 2 == 0
}

/// Gaunt integral `∫ conj(Y_l^m) Y_λ^μ Y_l'^m' dΩ`.
pub fn gaunt(l: i32, m: i32, lambda: i32, mu: i32, lp: i32, mp: i32) -> Result<f64> {
    AngularChannel::new(l, m)?;
    AngularChannel::new(lambda, mu)?;
    AngularChannel::new(lp, mp)?;
    if !gaunt_allowed(l, m, lambda, mu, lp, mp) {
        return Ok(0.0);
    }
    Ok(gaunt_unchecked(l, m, lambda, mu, lp, mp))
}

fn gaunt_unchecked(l: i32, m: i32, lambda: i32, mu: i32, lp: i32, mp: i32) -> f64 {
    let pref = (((2 * l + 1) * (2 * lambda + 1) * (2 * lp + 1)) as f64 / (4.0 * PI)).sqrt();
    let phase = if m.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
    phase
        * pref
        * wigner3j_unchecked(l, lambda, lp, 0, 0, 0)
        * wigner3j_unchecked(l, lambda, lp, -m, mu, mp)
}

/// Legendre polynomial `P_n(x)` by upward recurrence.
pub fn legendre_p(n: i32, x: f64) -> Result<f64> {
    if n < 0 {
        return invalid(format!("negative Legendre degree {n}"));
    }
    if !(x.abs() <= 1.0) {
        return invalid(format!("Legendre argument {x} outside [-1, 1]"));
    }
    Ok(legendre_unchecked(n as usize, x))
}

#[inline]
pub(crate) fn legendre_unchecked(n: usize, x: f64) -> f64 {
    legendre_with_derivative(n, x).0
}

/// `(P_n(x), P_n'(x))`, valid for |x| < 1 in the derivative.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() > 0.0 {
        nf * (x * p1 - p0) / (x * x - 1.0)
    } else {
        0.5 * nf * (nf + 1.0) * x.powi(n as i32 + 1)
    };
    (p1, dp)
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return invalid("Gauss-Legendre rule needs at least one point");
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess for the i-th largest root.
        let nf = n as f64;
        let theta = PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// Gauss-Lobatto points on `[-1, 1]` (`n >= 2` points, both endpoints included).
pub fn gauss_lobatto(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return invalid("Gauss-Lobatto rule needs at least two points");
    }
    let p = n - 1;
    let pf = p as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[p] = 1.0;
    let w_end = 2.0 / (pf * (pf + 1.0));
    weights[0] = w_end;
    weights[p] = w_end;
    // Interior nodes are the roots of P_p'(x); Newton on P_p' with
    // P_p'' from the Legendre ODE.
    for i in 1..p {
        let mut x = -(PI * i as f64 / pf).cos();
        for _ in 0..100 {
            let (pv, dp) = legendre_with_derivative(p, x);
            let d2p = (2.0 * x * dp - pf * (pf + 1.0) * pv) / (1.0 - x * x);
            let dx = dp / d2p;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let pv = legendre_unchecked(p, x);
        nodes[i] = x;
        weights[i] = w_end / (pv * pv);
    }
    if n % 2 == 1 {
        nodes[p / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// All `Y_l^m` with `l <= l_max` at the direction `(x, y, z)` (need not be
/// normalized; must be nonzero), in channel order.
///
/// The azimuthal factor is built as powers of `(x + iy)/ρ`, so points on the
/// coordinate planes get exact phases.
pub fn spherical_harmonics(l_max: i32, x: f64, y: f64, z: f64) -> Vec<Complex64> {
    let r = (x * x + y * y + z * z).sqrt();
    let rho = (x * x + y * y).sqrt();
    let cos_t = if r > 0.0 { z / r } else { 1.0 };
    let sin_t = if r > 0.0 { rho / r } else { 0.0 };
    let eiphi = if rho > 0.0 {
        Complex64::new(x / rho, y / rho)
    } else {
        Complex64::new(1.0, 0.0)
    };
    let lm = l_max as usize;
    let nch = AngularChannel::count(l_max);
    let mut out = vec![Complex64::new(0.0, 0.0); nch];

    // Normalized associated Legendre functions \bar P_l^m including the
    // Condon-Shortley phase, so that Y_l^m = \bar P_l^m e^{imφ}.
    let mut pbar = vec![vec![0.0f64; lm + 1]; lm + 1];
    pbar[0][0] = (1.0 / (4.0 * PI)).sqrt();
    for m in 1..=lm {
        let mf = m as f64;
        pbar[m][m] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_t * pbar[m - 1][m - 1];
    }
    for m in 0..lm {
        let mf = m as f64;
        pbar[m + 1][m] = (2.0 * mf + 3.0).sqrt() * cos_t * pbar[m][m];
    }
    for m in 0..=lm {
        let mf = m as f64;
        for l in (m + 2)..=lm {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                .sqrt();
            pbar[l][m] = a * (cos_t * pbar[l - 1][m] - b * pbar[l - 2][m]);
        }
    }

    let mut phase = vec![Complex64::new(1.0, 0.0); lm + 1];
    for m in 1..=lm {
        phase[m] = phase[m - 1] * eiphi;
    }
    for l in 0..=l_max {
        for m in 0..=l {
            let y = phase[m as usize] * pbar[l as usize][m as usize];
            out[AngularChannel { l, m }.index()] = y;
            if m > 0 {
                let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
                out[AngularChannel { l, m: -m }.index()] = y.conj() * sign;
            }
        }
    }
    out
}

/// Single `Y_l^m(θ, φ)`.
pub fn spherical_harmonic(l: i32, m: i32, theta: f64, phi: f64) -> Result<Complex64> {
    let ch = AngularChannel::new(l, m)?;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Ok(spherical_harmonics(l, st * cp, st * sp, ct)[ch.index()])
}

/// One stored Gaunt coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GauntEntry {
    pub row: AngularChannel,
    pub multipole: AngularChannel,
    pub col: AngularChannel,
    pub value: f64,
}

/// Every Gaunt coefficient `(l, m; λ, μ; l', m')` with `l, l' <= l_max` and
/// `λ <= λ_max = 2 l_max` that passes the selection rules.
#[derive(Debug, Clone)]
pub struct GauntTable {
    l_max: i32,
    lambda_max: i32,
    dense: Vec<f64>,
    entries: Vec<GauntEntry>,
}

impl GauntTable {
    pub fn l_max(&self) -> i32 {
        self.l_max
    }

    pub fn lambda_max(&self) -> i32 {
        self.lambda_max
    }

    pub fn entries(&self) -> &[GauntEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Looks up a coefficient; anything outside the table or forbidden by
    /// the selection rules is zero.
    pub fn get(&self, row: AngularChannel, multipole: AngularChannel, col: AngularChannel) -> f64 {
        if row.l > self.l_max || col.l > self.l_max || multipole.l > self.lambda_max {
            return 0.0;
        }
        let nch = AngularChannel::count(self.l_max);
        let nmp = AngularChannel::count(self.lambda_max);
        self.dense[(row.index() * nmp + multipole.index()) * nch + col.index()]
    }
}

pub fn build_gaunt_table(l_max: i32) -> Result<GauntTable> {
    if l_max < 0 {
        return invalid(format!("negative l_max {l_max}"));
    }
    let lambda_max = 2 * l_max;
    let channels = AngularChannel::enumerate(l_max);
    let multipoles = AngularChannel::enumerate(lambda_max);
    let nch = channels.len();
    let nmp = multipoles.len();
    let mut dense = vec![0.0; nch * nmp * nch];
    let mut entries = Vec::new();
    for row in &channels {
        for mp in &multipoles {
            for col in &channels {
                if !gaunt_allowed(row.l, row.m, mp.l, mp.m, col.l, col.m) {
                    continue;
                }
                let value = gaunt_unchecked(row.l, row.m, mp.l, mp.m, col.l, col.m);
                dense[(row.index() * nmp + mp.index()) * nch + col.index()] = value;
                entries.push(GauntEntry {
                    row: *row,
                    multipole: *mp,
                    col: *col,
                    value,
                });
            }
        }
    }
    Ok(GauntTable {
        l_max,
        lambda_max,
        dense,
        entries,
    })
}
