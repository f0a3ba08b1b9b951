//! Three-center screened model potential of the water molecule and its
//! single-center multipole re-expansion about the oxygen nucleus.
//!
//! Each center contributes
//!
//! ```text
//! V(d) = -(Z - N)/d - (N/d) (1 + α d) exp(-2 α d)
//! ```
//!
//! so that the potential approaches `-Z/d` close to the nucleus and
//! `-(Z - N)/d` far away. With the default constants the total charge seen
//! at large distance is `(8 - N_O) + 2 (1 - N_H) = 1`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::angular::{gauss_legendre, spherical_harmonics, AngularChannel};
use crate::error::{invalid, Result};

pub const DEFAULT_BOND_LENGTH: f64 = 1.8;
pub const DEFAULT_OPENING_ANGLE_DEG: f64 = 105.0;
pub const DEFAULT_N_O: f64 = 7.185;
pub const DEFAULT_ALPHA_O: f64 = 1.602;
pub const DEFAULT_N_H: f64 = 0.9075;
pub const DEFAULT_ALPHA_H: f64 = 0.6170;

/// Points per Gauss-Legendre panel of the Legendre projection.
const PROJECTION_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenedCenter {
    /// Bare nuclear charge.
    pub z_full: f64,
    /// Number of screening electrons.
    pub n_screen: f64,
    /// Screening decay constant (1/bohr).
    pub alpha: f64,
    /// Cartesian position (bohr).
    pub position: [f64; 3],
}

impl ScreenedCenter {
    /// `d · V(d)`-style effective charge `Z(d)`, with `V(d) = -Z(d)/d`.
    #[inline]
    pub fn effective_charge(&self, d: f64) -> f64 {
        (self.z_full - self.n_screen)
            + self.n_screen * (1.0 + self.alpha * d) * (-2.0 * self.alpha * d).exp()
    }

    #[inline]
    fn potential_unchecked(&self, d: f64) -> f64 {
        -self.effective_charge(d) / d
    }

    pub fn distance_from_origin(&self) -> f64 {
        let [x, y, z] = self.position;
        (x * x + y * y + z * z).sqrt()
    }

    /// Multipole coefficients `v_λ(r)`, `λ = 0..=lambda_max`, of this
    /// center's potential expanded about the origin:
    /// `V(|r - R|) = Σ_λ v_λ(r) P_λ(cos γ)`.
    ///
    /// The Legendre projection is carried out in the distance variable
    /// `d = |r - R|`, where `d · V(d)` is smooth, so the kink at `r = R`
    /// sits at an end of the integration interval.
    pub fn multipole_radials(&self, lambda_max: usize, r: f64) -> Vec<f64> {
        let big_r = self.distance_from_origin();
        multipole_radials(self, lambda_max, r, big_r, PROJECTION_POINTS)
    }
}

fn multipole_radials(
    c: &ScreenedCenter,
    lambda_max: usize,
    r: f64,
    big_r: f64,
    npts: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; lambda_max + 1];
    if big_r == 0.0 {
        if r > 0.0 {
            out[0] = c.potential_unchecked(r);
        } else {
            out[0] = f64::NEG_INFINITY;
        }
        return out;
    }
    if r == 0.0 {
        out[0] = c.potential_unchecked(big_r);
        return out;
    }
    let (nodes, weights) = gauss_rule(npts);
    let lo = (r - big_r).abs();
    let hi = r + big_r;
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let two_rr = 2.0 * r * big_r;
    let mut p = vec![0.0; lambda_max + 1];
    for (x, w) in nodes.iter().zip(weights) {
        let d = mid + half * x;
        let u = ((r * r + big_r * big_r - d * d) / two_rr).clamp(-1.0, 1.0);
        let zeff = c.effective_charge(d);
        legendre_all(u, &mut p);
        let f = w * half * zeff;
        for (o, pl) in out.iter_mut().zip(&p) {
            *o += f * pl;
        }
    }
    for (l, o) in out.iter_mut().enumerate() {
        *o *= -(2.0 * l as f64 + 1.0) / two_rr;
    }
    out
}

fn gauss_rule(n: usize) -> (&'static [f64], &'static [f64]) {
    use std::sync::OnceLock;
    static RULES: OnceLock<std::sync::Mutex<Vec<(usize, &'static [f64], &'static [f64])>>> =
        OnceLock::new();
    let rules = RULES.get_or_init(|| std::sync::Mutex::new(Vec::new()));
    let mut guard = rules.lock().unwrap();
    if let Some((_, x, w)) = guard.iter().find(|(k, _, _)| *k == n) {
        return (x, w);
    }
    let (x, w) = gauss_legendre(n).expect("n > 0");
    let x: &'static [f64] = Box::leak(x.into_boxed_slice());
    let w: &'static [f64] = Box::leak(w.into_boxed_slice());
    guard.push((n, x, w));
    (x, w)
}

fn legendre_all(x: f64, p: &mut [f64]) {
    if p.is_empty() {
        return;
    }
    p[0] = 1.0;
    if p.len() > 1 {
        p[1] = x;
    }
    for k in 2..p.len() {
        let kf = k as f64;
        p[k] = ((2.0 * kf - 1.0) * x * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf;
    }
}

/// Potential of a single screened center at distance `d`.
pub fn v_center(c: &ScreenedCenter, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return invalid(format!("distance must be positive, got {d}"));
    }
    Ok(c.potential_unchecked(d))
}

/// Projection of a hydrogen potential onto `P_λ`, with the hydrogen at
/// distance `bond` from the origin. `error_estimate` compares two rule sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultipoleRadial {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

pub fn hydrogen_multipole_radial(
    hydrogen: &ScreenedCenter,
    lambda: usize,
    r: f64,
    bond: f64,
) -> Result<MultipoleRadial> {
    if !(r >= 0.0) || !(bond >= 0.0) {
        return invalid(format!(
            "radius and bond length must be non-negative (r={r}, R={bond})"
        ));
    }
    let fine = multipole_radials(hydrogen, lambda, r, bond, PROJECTION_POINTS)[lambda];
    let coarse = multipole_radials(hydrogen, lambda, r, bond, PROJECTION_POINTS / 2)[lambda];
    let err = (fine - coarse).abs();
    Ok(MultipoleRadial {
        value: fine,
        error_estimate: err,
        converged: err <= 1e-10,
    })
}

/// Geometry and screening constants; every field is overridable from the
/// configuration file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryParams {
    pub bond_length: f64,
    pub opening_angle_deg: f64,
    pub z_o: f64,
    pub n_o: f64,
    pub alpha_o: f64,
    pub z_h: f64,
    pub n_h: f64,
    pub alpha_h: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self {
            bond_length: DEFAULT_BOND_LENGTH,
            opening_angle_deg: DEFAULT_OPENING_ANGLE_DEG,
            z_o: 8.0,
            n_o: DEFAULT_N_O,
            alpha_o: DEFAULT_ALPHA_O,
            z_h: 1.0,
            n_h: DEFAULT_N_H,
            alpha_h: DEFAULT_ALPHA_H,
        }
    }
}

impl GeometryParams {
    /// A bare `-1/r` potential: unit charge at the origin, no hydrogens.
    pub fn pure_coulomb() -> Self {
        Self {
            z_o: 1.0,
            n_o: 0.0,
            z_h: 0.0,
            n_h: 0.0,
            ..Self::default()
        }
    }
}

/// Oxygen at the origin, two hydrogens in the y-z plane placed
/// symmetrically about +z.
#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeGeometry {
    pub oxygen: ScreenedCenter,
    pub hydrogens: [ScreenedCenter; 2],
    pub params: GeometryParams,
}

impl Default for MoleculeGeometry {
    fn default() -> Self {
        Self::new(GeometryParams::default()).expect("default geometry is valid")
    }
}

impl MoleculeGeometry {
    pub fn water() -> Self {
        Self::default()
    }

    pub fn new(p: GeometryParams) -> Result<Self> {
        if !(p.bond_length >= 0.0) {
            return invalid(format!(
                "bond_length must be non-negative, got {}",
                p.bond_length
            ));
        }
        if !(p.alpha_o > 0.0) || !(p.alpha_h > 0.0) {
            return invalid("screening constants alpha_O, alpha_H must be positive");
        }
        if !(0.0..=180.0).contains(&p.opening_angle_deg) {
            return invalid(format!(
                "opening_angle_deg must lie in [0, 180], got {}",
                p.opening_angle_deg
            ));
        }
        let half = 0.5 * p.opening_angle_deg.to_radians();
        let y = p.bond_length * half.sin();
        let z = p.bond_length * half.cos();
        let h = |sy: f64| ScreenedCenter {
            z_full: p.z_h,
            n_screen: p.n_h,
            alpha: p.alpha_h,
            position: [0.0, sy * y, z],
        };
        Ok(Self {
            oxygen: ScreenedCenter {
                z_full: p.z_o,
                n_screen: p.n_o,
                alpha: p.alpha_o,
                position: [0.0; 3],
            },
            hydrogens: [h(1.0), h(-1.0)],
            params: p,
        })
    }

    /// Net charge seen far from the molecule.
    pub fn asymptotic_charge(&self) -> f64 {
        (self.oxygen.z_full - self.oxygen.n_screen)
            + self
                .hydrogens
                .iter()
                .map(|h| h.z_full - h.n_screen)
                .sum::<f64>()
    }

    /// Sum of bare charges; `-(Σ Z)^2 / 2` bounds the spectrum from below.
    pub fn total_bare_charge(&self) -> f64 {
        self.oxygen.z_full + self.hydrogens.iter().map(|h| h.z_full).sum::<f64>()
    }

    fn has_hydrogens(&self) -> bool {
        self.hydrogens
            .iter()
            .any(|h| h.z_full != 0.0 || h.n_screen != 0.0)
    }

    /// Direct three-center evaluation.
    pub fn potential_at(&self, x: f64, y: f64, z: f64) -> f64 {
        let mut v = 0.0;
        for c in std::iter::once(&self.oxygen).chain(self.hydrogens.iter()) {
            if c.z_full == 0.0 && c.n_screen == 0.0 {
                continue;
            }
            let [cx, cy, cz] = c.position;
            let d = ((x - cx).powi(2) + (y - cy).powi(2) + (z - cz).powi(2)).sqrt();
            v += c.potential_unchecked(d);
        }
        v
    }
}

/// Single-center expansion `V(r) = Σ_{λμ} V_{λμ}(r) Y_λ^μ(r̂)` of the full
/// molecular potential, truncated at `λ_max`.
#[derive(Debug, Clone)]
pub struct MultipoleExpansion {
    lambda_max: i32,
    geometry: MoleculeGeometry,
    /// Per hydrogen, `(4π/(2λ+1)) conj(Y_λ^μ(R̂_j))` in multipole-channel order.
    weights: Vec<Vec<Complex64>>,
}

pub fn assemble_molecular_multipoles(
    geometry: &MoleculeGeometry,
    lambda_max: i32,
) -> Result<MultipoleExpansion> {
    if lambda_max < 0 {
        return invalid(format!("negative lambda_max {lambda_max}"));
    }
    let mut weights = Vec::new();
    for h in &geometry.hydrogens {
        let nmp = AngularChannel::count(lambda_max);
        let [x, y, z] = h.position;
        let w = if h.distance_from_origin() > 0.0 {
            let ys = spherical_harmonics(lambda_max, x, y, z);
            AngularChannel::enumerate(lambda_max)
                .iter()
                .map(|ch| ys[ch.index()].conj() * (4.0 * PI / (2 * ch.l + 1) as f64))
                .collect()
        } else {
            // Center at the origin: only the monopole survives.
            let mut w = vec![Complex64::new(0.0, 0.0); nmp];
            w[0] = Complex64::new((4.0 * PI).sqrt(), 0.0);
            w
        };
        weights.push(w);
    }
    Ok(MultipoleExpansion {
        lambda_max,
        geometry: geometry.clone(),
        weights,
    })
}

impl MultipoleExpansion {
    pub fn lambda_max(&self) -> i32 {
        self.lambda_max
    }

    pub fn geometry(&self) -> &MoleculeGeometry {
        &self.geometry
    }

    /// All `V_{λμ}(r)` at a real radius `r > 0`, in multipole-channel order.
    pub fn coefficients_at(&self, r: f64) -> Vec<Complex64> {
        let nmp = AngularChannel::count(self.lambda_max);
        let mut out = vec![Complex64::new(0.0, 0.0); nmp];
        let lmax = self.lambda_max as usize;
        if self.geometry.has_hydrogens() {
            for (h, w) in self.geometry.hydrogens.iter().zip(&self.weights) {
                if h.z_full == 0.0 && h.n_screen == 0.0 {
                    continue;
                }
                let radial = h.multipole_radials(lmax, r);
                for ch in AngularChannel::enumerate(self.lambda_max) {
                    out[ch.index()] += w[ch.index()] * radial[ch.l as usize];
                }
            }
        }
        out[0] += (4.0 * PI).sqrt() * self.geometry.oxygen.potential_unchecked(r);
        out
    }

    /// `V_{λμ}(r)` for one channel.
    pub fn coefficient(&self, lambda: i32, mu: i32, r: f64) -> Result<Complex64> {
        let ch = AngularChannel::new(lambda, mu)?;
        if lambda > self.lambda_max {
            return invalid(format!("λ={lambda} exceeds λ_max={}", self.lambda_max));
        }
        if !(r > 0.0) {
            return invalid(format!("radius must be positive, got {r}"));
        }
        Ok(self.coefficients_at(r)[ch.index()])
    }

    /// Truncated reconstruction `Σ_{λ<=lambda_cut, μ} V_{λμ}(r) Y_λ^μ(r̂)`.
    pub fn reconstruct(&self, x: f64, y: f64, z: f64, lambda_cut: i32) -> f64 {
        let r = (x * x + y * y + z * z).sqrt();
        let coeffs = self.coefficients_at(r);
        let ys = spherical_harmonics(self.lambda_max, x, y, z);
        let mut v = Complex64::new(0.0, 0.0);
        for ch in AngularChannel::enumerate(self.lambda_max.min(lambda_cut)) {
            v += coeffs[ch.index()] * ys[ch.index()];
        }
        v.re
    }
}

/// Complex-continued Coulomb tail `-1/z` used beyond the scaling radius.
pub fn v_tail(z: Complex64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return invalid("v_tail evaluated at zero radius");
    }
    Ok(-z.inv())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oxygen_far_field() {
        let g = MoleculeGeometry::water();
        let v = v_center(&g.oxygen, 20.0).unwrap();
        let expect = -(8.0 - 7.185) / 20.0;
        assert!((v - expect).abs() < 1e-25, "{v} vs {expect}");
        assert!((expect + 0.04075).abs() < 1e-12);
    }

    #[test]
    fn center_limits() {
        let g = MoleculeGeometry::water();
        let d = 1e-9;
        assert!((d * v_center(&g.oxygen, d).unwrap() + 8.0).abs() < 1e-7);
        let d = 30.0;
        let far = d * v_center(&g.hydrogens[0], d).unwrap();
        assert!((far + (1.0 - 0.9075)).abs() < 1e-12);
        assert!(v_center(&g.oxygen, 0.0).is_err());
        assert!(v_center(&g.oxygen, -1.0).is_err());
    }

    #[test]
    fn hydrogen_positions() {
        let g = MoleculeGeometry::water();
        let a = 52.5f64.to_radians();
        let h = g.hydrogens[0].position;
        assert_eq!(h[0], 0.0);
        assert!((h[1] - 1.8 * a.sin()).abs() < 1e-15);
        assert!((h[2] - 1.8 * a.cos()).abs() < 1e-15);
        assert_eq!(g.hydrogens[1].position[1], -h[1]);
        assert!((g.asymptotic_charge() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn projection_at_origin_and_far_away() {
        let g = MoleculeGeometry::water();
        let h = &g.hydrogens[0];
        for l in 1..5 {
            assert_eq!(
                hydrogen_multipole_radial(h, l, 0.0, 1.8).unwrap().value,
                0.0
            );
        }
        let v0 = hydrogen_multipole_radial(h, 0, 0.0, 1.8).unwrap().value;
        assert!((v0 - v_center(h, 1.8).unwrap()).abs() < 1e-15);
        let far = hydrogen_multipole_radial(h, 0, 50.0, 1.8).unwrap();
        assert!(far.converged);
        assert!((far.value + (1.0 - 0.9075) / 50.0).abs() < 1e-8);
    }

    #[test]
    fn odd_mu_vanishes() {
        let g = MoleculeGeometry::water();
        let mp = assemble_molecular_multipoles(&g, 8).unwrap();
        for r in [0.3, 1.8, 2.5, 10.0] {
            let c = mp.coefficients_at(r);
            for ch in AngularChannel::enumerate(8) {
                if ch.m % 2 != 0 {
                    assert_eq!(c[ch.index()].norm(), 0.0, "{ch:?} r={r}");
                } else {
                    assert!(c[ch.index()].im.abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn tail_values() {
        assert_eq!(
            v_tail(Complex64::new(20.0, 0.0)).unwrap(),
            Complex64::new(-0.05, 0.0)
        );
        let z = Complex64::new(16.4, 0.0) + Complex64::from_polar(4.0, 1.4);
        let v = v_tail(z).unwrap();
        assert!((v * z + 1.0).norm() < 1e-15);
        assert!(v_tail(Complex64::new(0.0, 0.0)).is_err());
    }
}
