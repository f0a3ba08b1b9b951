//! Hamiltonian and overlap over the product basis (radial dof) × (angular
//! channel). Coefficient vectors are channel-major: `ch * n_radial + a`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::angular::{build_gaunt_table, AngularChannel, GauntTable};
use crate::error::{invalid, Error, Result};
use crate::linalg::{BandMatrix, GeneralBand};
use crate::potential::{
    assemble_molecular_multipoles, v_tail, GeometryParams, MoleculeGeometry, MultipoleExpansion,
};
use crate::radial_fem::{
    build_mesh_anchored, contour_points, kinetic_matrix, moment_r_matrix, overlap_matrix,
    potential_matrix_sampled, EcsContour, FemMesh, DEFAULT_ELEMENTS, DEFAULT_ORDER,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldDirection {
    X,
    Y,
    Z,
    XzPlane,
}

impl FieldDirection {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldDirection::X => "x",
            FieldDirection::Y => "y",
            FieldDirection::Z => "z",
            FieldDirection::XzPlane => "xz",
        }
    }
}

impl std::str::FromStr for FieldDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(FieldDirection::X),
            "y" => Ok(FieldDirection::Y),
            "z" => Ok(FieldDirection::Z),
            "xz" | "xz_plane" | "xz-plane" => Ok(FieldDirection::XzPlane),
            other => Err(Error::InvalidArgument(format!(
                "unknown field direction '{other}' (expected x, y, z or xz)"
            ))),
        }
    }
}

/// Static force on the electron, `V_field = -F · r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpec {
    pub direction: FieldDirection,
    pub f_x: f64,
    pub f_y: f64,
    pub f_z: f64,
    /// Orientation scale and fractions; only meaningful for `XzPlane`.
    pub f_o: f64,
    pub frac_x: f64,
    pub frac_z: f64,
}

impl FieldSpec {
    pub fn none() -> Self {
        Self::along(FieldDirection::X, 0.0)
    }

    /// Signed force along a coordinate axis.
    pub fn along(direction: FieldDirection, value: f64) -> Self {
        let mut s = Self {
            direction,
            f_x: 0.0,
            f_y: 0.0,
            f_z: 0.0,
            f_o: 0.0,
            frac_x: 0.0,
            frac_z: 0.0,
        };
        match direction {
            FieldDirection::X => s.f_x = value,
            FieldDirection::Y => s.f_y = value,
            FieldDirection::Z => s.f_z = value,
            FieldDirection::XzPlane => {
                s.f_o = value;
                s.frac_x = 1.0;
                s.f_x = value;
            }
        }
        s
    }

    pub fn x(f: f64) -> Self {
        Self::along(FieldDirection::X, f)
    }

    pub fn y(f: f64) -> Self {
        Self::along(FieldDirection::Y, f)
    }

    pub fn z(f: f64) -> Self {
        Self::along(FieldDirection::Z, f)
    }

    /// `F_x = f_o · frac_x`, `F_z = f_o · frac_z`, with `F_x >= 0`.
    pub fn xz_plane(f_o: f64, frac_x: f64, frac_z: f64) -> Result<Self> {
        if f_o * frac_x < 0.0 {
            return invalid(format!(
                "in-plane orientation needs F_x >= 0 (f_o={f_o}, f_x={frac_x})"
            ));
        }
        Ok(Self {
            direction: FieldDirection::XzPlane,
            f_x: f_o * frac_x,
            f_y: 0.0,
            f_z: f_o * frac_z,
            f_o,
            frac_x,
            frac_z,
        })
    }

    pub fn components(&self) -> [f64; 3] {
        [self.f_x, self.f_y, self.f_z]
    }

    pub fn magnitude(&self) -> f64 {
        (self.f_x * self.f_x + self.f_y * self.f_y + self.f_z * self.f_z).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.magnitude() == 0.0
    }

    /// Angle of the force from +x towards +z.
    pub fn angle(&self) -> f64 {
        match self.direction {
            FieldDirection::XzPlane => self.frac_z.atan2(self.frac_x),
            _ => self.f_z.atan2(self.f_x),
        }
    }

    /// Same orientation with the magnitude multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            f_x: self.f_x * s,
            f_y: self.f_y * s,
            f_z: self.f_z * s,
            f_o: self.f_o * s,
            ..*self
        }
    }
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self::none()
    }
}

/// Expansion of `-F · r / r` in `Y_1^μ`: pairs `(μ, coefficient)`.
pub fn field_coefficients(field: &FieldSpec) -> Vec<(i32, Complex64)> {
    if field.is_zero() {
        return Vec::new();
    }
    let a = (2.0 * PI / 3.0).sqrt();
    let b = (4.0 * PI / 3.0).sqrt();
    let [fx, fy, fz] = field.components();
    let mut out = Vec::with_capacity(3);
    if fx != 0.0 || fy != 0.0 {
        out.push((-1, Complex64::new(-fx * a, -fy * a)));
    }
    if fz != 0.0 {
        out.push((0, Complex64::new(-fz * b, 0.0)));
    }
    if fx != 0.0 || fy != 0.0 {
        out.push((1, Complex64::new(fx * a, -fy * a)));
    }
    out
}

/// Block-sparse `H` and block-diagonal `S` of the generalized problem
/// `H c = E S c`.
#[derive(Debug, Clone)]
pub struct HamiltonianPair {
    l_max: i32,
    n_radial: usize,
    half_bandwidth: usize,
    channels: Vec<AngularChannel>,
    /// `blocks[row * nch + col]`
    blocks: Vec<Option<BandMatrix>>,
    overlap: BandMatrix,
    pub field: FieldSpec,
    pub contour: EcsContour,
}

impl HamiltonianPair {
    pub fn l_max(&self) -> i32 {
        self.l_max
    }

    pub fn dim(&self) -> usize {
        self.n_radial * self.channels.len()
    }

    pub fn n_radial(&self) -> usize {
        self.n_radial
    }

    pub fn channels(&self) -> &[AngularChannel] {
        &self.channels
    }

    pub fn block(&self, row: usize, col: usize) -> Option<&BandMatrix> {
        self.blocks[row * self.channels.len() + col].as_ref()
    }

    /// Radial overlap block, identical on every channel.
    pub fn radial_overlap(&self) -> &BandMatrix {
        &self.overlap
    }

    pub fn apply_h(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.n_radial;
        let nch = self.channels.len();
        y.par_chunks_mut(n).enumerate().for_each(|(row, yr)| {
            yr.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for col in 0..nch {
                if let Some(b) = &self.blocks[row * nch + col] {
                    b.mul_add(&x[col * n..(col + 1) * n], yr);
                }
            }
        });
    }

    pub fn apply_s(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.n_radial;
        y.par_chunks_mut(n).enumerate().for_each(|(ch, yr)| {
            yr.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            self.overlap.mul_add(&x[ch * n..(ch + 1) * n], yr);
        });
    }

    /// Index of `(channel, radial)` in the interleaved band ordering used by
    /// [`Self::shifted_band`].
    #[inline]
    pub fn interleaved_index(&self, ch: usize, a: usize) -> usize {
        a * self.channels.len() + ch
    }

    /// Lower/upper bandwidth of `H - σS` in interleaved ordering.
    pub fn interleaved_bandwidth(&self) -> usize {
        let nch = self.channels.len();
        self.half_bandwidth * nch + nch - 1
    }

    /// `H - σ S` as a general band matrix, interleaved ordering.
    pub fn shifted_band(&self, sigma: Complex64) -> GeneralBand {
        let nch = self.channels.len();
        let kb = self.interleaved_bandwidth();
        let hb = self.half_bandwidth;
        let n = self.n_radial;
        let mut g = GeneralBand::zeros(self.dim(), kb, kb);
        for row in 0..nch {
            for col in 0..nch {
                let Some(b) = &self.blocks[row * nch + col] else {
                    continue;
                };
                for a in 0..n {
                    for bb in a.saturating_sub(hb)..(a + hb + 1).min(n) {
                        let mut v = b.get(a, bb);
                        if row == col {
                            v -= sigma * self.overlap.get(a, bb);
                        }
                        if v.re != 0.0 || v.im != 0.0 {
                            g.add(a * nch + row, bb * nch + col, v);
                        }
                    }
                }
            }
        }
        g
    }

    /// Dense `H` (channel-major), for small problems and tests.
    pub fn dense_h(&self) -> Vec<Vec<Complex64>> {
        self.dense_of(|row, col| self.block(row, col).cloned())
    }

    pub fn dense_s(&self) -> Vec<Vec<Complex64>> {
        self.dense_of(|row, col| (row == col).then(|| self.overlap.clone()))
    }

    fn dense_of<F: Fn(usize, usize) -> Option<BandMatrix>>(&self, f: F) -> Vec<Vec<Complex64>> {
        let n = self.n_radial;
        let dim = self.dim();
        let nch = self.channels.len();
        let mut out = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
        for row in 0..nch {
            for col in 0..nch {
                if let Some(b) = f(row, col) {
                    for a in 0..n {
                        for bb in a.saturating_sub(self.half_bandwidth)
                            ..(a + self.half_bandwidth + 1).min(n)
                        {
                            out[row * n + a][col * n + bb] = b.get(a, bb);
                        }
                    }
                }
            }
        }
        out
    }

    /// Largest `|H_ij - conj(H_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.pair_defect(|a, b| (a - b.conj()).norm())
    }

    /// Largest `|H_ij - H_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        self.pair_defect(|a, b| (a - b).norm())
    }

    fn pair_defect<F: Fn(Complex64, Complex64) -> f64>(&self, f: F) -> f64 {
        let nch = self.channels.len();
        let n = self.n_radial;
        let hb = self.half_bandwidth;
        let zero = BandMatrix::zeros(n, hb);
        let mut worst = 0.0f64;
        for row in 0..nch {
            for col in 0..nch {
                let b1 = self.block(row, col).unwrap_or(&zero);
                let b2 = self.block(col, row).unwrap_or(&zero);
                for a in 0..n {
                    for bb in a.saturating_sub(hb)..(a + hb + 1).min(n) {
                        worst = worst.max(f(b1.get(a, bb), b2.get(bb, a)));
                    }
                }
            }
        }
        worst
    }
}

/// Builds the Hamiltonian: kinetic energy per channel, the multipole
/// potential coupled through Gaunt coefficients, and the field term
/// through the contour-continued moment `z(r)`. Beyond `r_s` only the
/// monopole survives, as the Coulomb tail of the net charge.
pub fn assemble(
    mesh: &FemMesh,
    contour: &EcsContour,
    multipoles: &MultipoleExpansion,
    gaunt: &GauntTable,
    field: &FieldSpec,
    l_max: i32,
) -> Result<HamiltonianPair> {
    if l_max < 0 {
        return invalid(format!("negative l_max {l_max}"));
    }
    if gaunt.l_max() != l_max {
        return Err(Error::Dimension {
            row: gaunt.l_max() as usize,
            col: l_max as usize,
            detail: "Gaunt table l_max differs from the basis l_max".into(),
        });
    }
    if multipoles.lambda_max() != gaunt.lambda_max() {
        return Err(Error::Dimension {
            row: multipoles.lambda_max() as usize,
            col: gaunt.lambda_max() as usize,
            detail: "multipole λ_max must equal 2 l_max".into(),
        });
    }
    mesh.check_contour(contour)?;

    let channels = AngularChannel::enumerate(l_max);
    let nch = channels.len();
    let n = mesh.n_dof();
    let hb = mesh.order();
    let lambda_max = multipoles.lambda_max();
    let nmp = AngularChannel::count(lambda_max);

    // Multipole coefficients at every quadrature point.
    let rs = mesh.quadrature_points();
    let zs = contour_points(mesh, contour);
    let charge = multipoles.geometry().asymptotic_charge();
    let y00_inv = (4.0 * PI).sqrt();
    let samples: Vec<Vec<Complex64>> = rs
        .par_iter()
        .zip(zs.par_iter())
        .map(|(&r, &z)| -> Result<Vec<Complex64>> {
            if r <= contour.r_s {
                Ok(multipoles.coefficients_at(r))
            } else {
                let mut v = vec![Complex64::new(0.0, 0.0); nmp];
                v[0] = y00_inv * charge * v_tail(z)?;
                Ok(v)
            }
        })
        .collect::<Result<_>>()?;

    // Radial matrices of the multipole channels that are not identically zero.
    let mut radial: Vec<Option<BandMatrix>> = (0..nmp)
        .into_par_iter()
        .map(|k| -> Result<Option<BandMatrix>> {
            let values: Vec<Complex64> = samples.iter().map(|s| s[k]).collect();
            if values.iter().all(|v| v.norm() == 0.0) {
                return Ok(None);
            }
            potential_matrix_sampled(mesh, contour, &values).map(Some)
        })
        .collect::<Result<_>>()?;

    let kinetic: Vec<BandMatrix> = (0..=l_max)
        .into_par_iter()
        .map(|l| kinetic_matrix(mesh, contour, l))
        .collect::<Result<_>>()?;

    let mut blocks: Vec<Option<BandMatrix>> = vec![None; nch * nch];
    for (i, ch) in channels.iter().enumerate() {
        blocks[i * nch + i] = Some(kinetic[ch.l as usize].clone());
    }
    for e in gaunt.entries() {
        let Some(vm) = radial[e.multipole.index()].as_ref() else {
            continue;
        };
        let idx = e.row.index() * nch + e.col.index();
        let blk = blocks[idx].get_or_insert_with(|| BandMatrix::zeros(n, hb));
        blk.axpy(Complex64::new(e.value, 0.0), vm);
    }
    radial.clear();

    let mut hp = HamiltonianPair {
        l_max,
        n_radial: n,
        half_bandwidth: hb,
        channels,
        blocks,
        overlap: overlap_matrix(mesh, contour),
        field: FieldSpec::none(),
        contour: *contour,
    };
    if !field.is_zero() {
        hp.add_field(field, gaunt, &moment_r_matrix(mesh, contour));
    }
    hp.field = *field;
    Ok(hp)
}

impl HamiltonianPair {
    /// Adds `Σ_μ f_μ G(l,m;1,μ;l',m') R` to the field-free blocks.
    fn add_field(&mut self, field: &FieldSpec, gaunt: &GauntTable, moment: &BandMatrix) {
        let nch = self.channels.len();
        let (n, hb) = (self.n_radial, self.half_bandwidth);
        for (mu, f) in field_coefficients(field) {
            let mp = AngularChannel { l: 1, m: mu };
            for row in &self.channels {
                for col in &self.channels {
                    let g = gaunt.get(*row, mp, *col);
                    if g == 0.0 {
                        continue;
                    }
                    let idx = row.index() * nch + col.index();
                    let blk = self.blocks[idx].get_or_insert_with(|| BandMatrix::zeros(n, hb));
                    blk.axpy(f * g, moment);
                }
            }
        }
        self.field = *field;
    }
}

/// Everything that defines a calculation apart from the field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    pub geometry: GeometryParams,
    pub contour: EcsContour,
    pub elements: usize,
    pub order: usize,
    pub l_max: i32,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            geometry: GeometryParams::default(),
            contour: EcsContour::default(),
            elements: DEFAULT_ELEMENTS,
            order: DEFAULT_ORDER,
            l_max: 3,
        }
    }
}

/// Field-independent pieces of a calculation, built once and reused for
/// every field value.
#[derive(Debug, Clone)]
pub struct Problem {
    spec: ProblemSpec,
    geometry: MoleculeGeometry,
    mesh: FemMesh,
    gaunt: GauntTable,
    moment: BandMatrix,
    base: HamiltonianPair,
}

impl Problem {
    pub fn new(spec: ProblemSpec) -> Result<Self> {
        let geometry = MoleculeGeometry::new(spec.geometry)?;
        let anchor = (spec.geometry.bond_length > 0.0).then_some(spec.geometry.bond_length);
        let mesh = build_mesh_anchored(&spec.contour, spec.elements, spec.order, anchor)?;
        let gaunt = build_gaunt_table(spec.l_max)?;
        let multipoles = assemble_molecular_multipoles(&geometry, 2 * spec.l_max)?;
        let base = assemble(
            &mesh,
            &spec.contour,
            &multipoles,
            &gaunt,
            &FieldSpec::none(),
            spec.l_max,
        )?;
        let moment = moment_r_matrix(&mesh, &spec.contour);
        Ok(Self {
            spec,
            geometry,
            mesh,
            gaunt,
            moment,
            base,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn geometry(&self) -> &MoleculeGeometry {
        &self.geometry
    }

    pub fn mesh(&self) -> &FemMesh {
        &self.mesh
    }

    pub fn hamiltonian(&self, field: &FieldSpec) -> HamiltonianPair {
        let mut hp = self.base.clone();
        if !field.is_zero() {
            hp.add_field(field, &self.gaunt, &self.moment);
        }
        hp.field = *field;
        hp
    }

    /// Same problem on another contour angle.
    pub fn with_xi(&self, xi: f64) -> Result<Self> {
        let contour = EcsContour::new(self.spec.contour.r_s, xi, self.spec.contour.r_max)?;
        Self::new(ProblemSpec {
            contour,
            ..self.spec
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::spherical_harmonics;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair(
        l_max: i32,
        xi: f64,
        field: FieldSpec,
        elements: usize,
        order: usize,
    ) -> HamiltonianPair {
        let ct = EcsContour::new(16.4, xi, 24.3).unwrap();
        let mesh = build_mesh_anchored(&ct, elements, order, Some(1.8)).unwrap();
        let geo = MoleculeGeometry::water();
        let mp = assemble_molecular_multipoles(&geo, 2 * l_max).unwrap();
        let gt = build_gaunt_table(l_max).unwrap();
        assemble(&mesh, &ct, &mp, &gt, &field, l_max).unwrap()
    }

    #[test]
    fn field_coefficients_match_dot_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let fields = [
            FieldSpec::x(0.3),
            FieldSpec::y(-0.2),
            FieldSpec::z(0.7),
            FieldSpec::xz_plane(0.1, 0.5, -0.5).unwrap(),
            FieldSpec {
                f_y: 0.4,
                ..FieldSpec::xz_plane(1.0, 0.3, 0.9).unwrap()
            },
        ];
        for f in &fields {
            let coef = field_coefficients(f);
            for _ in 0..100 {
                let ct: f64 = rng.gen_range(-1.0..1.0);
                let phi: f64 = rng.gen_range(0.0..2.0 * PI);
                let st = (1.0 - ct * ct).sqrt();
                let (x, y, z) = (st * phi.cos(), st * phi.sin(), ct);
                let ys = spherical_harmonics(1, x, y, z);
                let got: Complex64 = coef
                    .iter()
                    .map(|(mu, c)| c * ys[AngularChannel { l: 1, m: *mu }.index()])
                    .sum();
                let want = -(f.f_x * x + f.f_y * y + f.f_z * z);
                assert!((got - want).norm() < 1e-12, "{f:?}: {got} vs {want}");
            }
        }
        assert!(field_coefficients(&FieldSpec::none()).is_empty());
    }

    #[test]
    fn single_axis_coefficients() {
        let z = field_coefficients(&FieldSpec::z(1.0));
        assert_eq!(z.len(), 1);
        assert_eq!(z[0].0, 0);
        assert!((z[0].1 + (4.0 * PI / 3.0).sqrt()).norm() < 1e-15);
        let x = field_coefficients(&FieldSpec::x(1.0));
        let a = (2.0 * PI / 3.0).sqrt();
        assert_eq!(
            x,
            vec![(-1, Complex64::new(-a, 0.0)), (1, Complex64::new(a, 0.0))]
        );
    }

    #[test]
    fn orientation_metadata() {
        let f = FieldSpec::xz_plane(0.1, 0.5, 0.5).unwrap();
        assert!((f.magnitude() - 0.1 * 0.5f64.hypot(0.5)).abs() < 1e-16);
        assert!((f.angle() - PI / 4.0).abs() < 1e-15);
        assert!(FieldSpec::xz_plane(0.1, -0.5, 0.5).is_err());
        assert_eq!(
            "xz".parse::<FieldDirection>().unwrap(),
            FieldDirection::XzPlane
        );
        assert!("w".parse::<FieldDirection>().is_err());
    }

    #[test]
    fn hermitian_without_scaling() {
        for f in [
            FieldSpec::none(),
            FieldSpec::x(0.1),
            FieldSpec::y(0.1),
            FieldSpec::z(-0.1),
        ] {
            let hp = pair(3, 0.0, f, 12, 4);
            assert!(
                hp.hermiticity_defect() < 1e-13,
                "{f:?}: {}",
                hp.hermiticity_defect()
            );
        }
    }

    #[test]
    fn complex_symmetric_with_scaling() {
        for f in [FieldSpec::none(), FieldSpec::x(0.1), FieldSpec::z(0.1)] {
            let hp = pair(2, 1.4, f, 12, 4);
            assert!(hp.symmetry_defect() < 1e-13);
        }
        // a y-field puts imaginary couplings between m and m±1
        let hp = pair(2, 1.4, FieldSpec::y(0.1), 12, 4);
        assert!(hp.symmetry_defect() > 1e-3);
    }

    #[test]
    fn block_sparsity() {
        let hp = pair(3, 1.4, FieldSpec::none(), 12, 4);
        let ch = hp.channels().to_vec();
        for (i, a) in ch.iter().enumerate() {
            for (j, b) in ch.iter().enumerate() {
                if (a.m - b.m) % 2 != 0 {
                    assert!(hp.block(i, j).is_none(), "{a:?} {b:?}");
                }
            }
        }
        let hp = pair(3, 1.4, FieldSpec::x(0.1), 12, 4);
        let free = pair(3, 1.4, FieldSpec::none(), 12, 4);
        for (i, a) in ch.iter().enumerate() {
            for (j, b) in ch.iter().enumerate() {
                let diff = match (hp.block(i, j), free.block(i, j)) {
                    (Some(x), Some(y)) => {
                        let mut d = x.clone();
                        d.axpy(Complex64::new(-1.0, 0.0), y);
                        d.max_abs()
                    }
                    (Some(x), None) => x.max_abs(),
                    (None, _) => 0.0,
                };
                if diff > 0.0 {
                    assert_eq!((a.l - b.l).abs(), 1, "{a:?} {b:?}");
                    assert!((a.m - b.m).abs() <= 1);
                }
            }
        }
    }

    #[test]
    fn dimensions_and_validation() {
        let hp = pair(3, 1.4, FieldSpec::none(), 12, 4);
        assert_eq!(hp.dim(), 12 * 4 * 16);
        let ct = EcsContour::default();
        let mesh = build_mesh_anchored(&ct, 12, 4, Some(1.8)).unwrap();
        let geo = MoleculeGeometry::water();
        let mp = assemble_molecular_multipoles(&geo, 4).unwrap();
        let gt = build_gaunt_table(3).unwrap();
        assert!(matches!(
            assemble(&mesh, &ct, &mp, &gt, &FieldSpec::none(), 3),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn shifted_band_matches_blocks() {
        let hp = pair(1, 1.4, FieldSpec::x(0.05), 6, 3);
        let sigma = Complex64::new(-0.5, 0.01);
        let g = hp.shifted_band(sigma);
        let h = hp.dense_h();
        let s = hp.dense_s();
        let n = hp.n_radial();
        for (ci, _) in hp.channels().iter().enumerate() {
            for (cj, _) in hp.channels().iter().enumerate() {
                for a in 0..n {
                    for b in 0..n {
                        let want = h[ci * n + a][cj * n + b] - sigma * s[ci * n + a][cj * n + b];
                        let got = g.get(hp.interleaved_index(ci, a), hp.interleaved_index(cj, b));
                        assert!((got - want).norm() < 1e-15);
                    }
                }
            }
        }
    }
}
