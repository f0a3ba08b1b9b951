//! Orbital probability densities on planar grids.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::angular::{spherical_harmonics, AngularChannel};
use crate::eigensolver::EigenSolution;
use crate::error::{invalid, Error, Result};
use crate::potential::MoleculeGeometry;
use crate::radial_fem::{potential_matrix_sampled, EcsContour, FemMesh};

pub const DEFAULT_EXTENT: f64 = 8.0;
pub const DEFAULT_SAMPLES: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Plane {
    Xz,
    Yz,
    Xy,
}

impl Plane {
    pub fn as_str(&self) -> &'static str {
        match self {
            Plane::Xz => "xz",
            Plane::Yz => "yz",
            Plane::Xy => "xy",
        }
    }

    /// Cartesian point of the in-plane coordinates `(u, v)`.
    pub fn point(&self, u: f64, v: f64) -> [f64; 3] {
        match self {
            Plane::Xz => [u, 0.0, v],
            Plane::Yz => [0.0, u, v],
            Plane::Xy => [u, v, 0.0],
        }
    }

    /// In-plane coordinates of a Cartesian point's projection.
    pub fn project(&self, p: [f64; 3]) -> [f64; 2] {
        match self {
            Plane::Xz => [p[0], p[2]],
            Plane::Yz => [p[1], p[2]],
            Plane::Xy => [p[0], p[1]],
        }
    }
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Plane {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s
            .trim()
            .to_ascii_lowercase()
            .replace(['-', '_'], "")
            .as_str()
        {
            "xz" => Ok(Plane::Xz),
            "yz" => Ok(Plane::Yz),
            "xy" => Ok(Plane::Xy),
            other => Err(Error::InvalidArgument(format!(
                "unknown plane '{other}' (expected xz, yz or xy)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub plane: Plane,
    /// Half-width of the square grid (bohr).
    pub extent: f64,
    pub samples: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            plane: Plane::Yz,
            extent: DEFAULT_EXTENT,
            samples: DEFAULT_SAMPLES,
        }
    }
}

impl GridSpec {
    pub fn coordinate(&self, i: usize) -> f64 {
        if self.samples == 1 {
            return 0.0;
        }
        -self.extent + 2.0 * self.extent * i as f64 / (self.samples - 1) as f64
    }
}

#[derive(Debug, Clone)]
pub struct PlaneGrid {
    pub spec: GridSpec,
    /// `values[i * samples + j]` at `(u_i, v_j)`; `NaN` where masked.
    pub values: Vec<f64>,
    pub masked: usize,
    /// Name and in-plane position of each nucleus.
    pub nuclei: Vec<(String, [f64; 2])>,
    pub contour_levels: Vec<f64>,
}

impl PlaneGrid {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spec.samples + j]
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0, |a, &b| a.max(b))
    }
}

/// 0.005, 0.01, 0.02, then steps of 0.02 up to `max`.
pub fn contour_levels(max: f64) -> Vec<f64> {
    let mut out = vec![0.005, 0.01, 0.02];
    let mut k = 2;
    loop {
        let level = 0.02 * k as f64;
        if level > max {
            break;
        }
        out.push(level);
        k += 1;
    }
    out
}

/// `Σ_lm ∫_0^{r_s} |u_lm|^2 dr`: the norm over the unscaled region.
pub fn inner_norm(sol: &EigenSolution, mesh: &FemMesh, contour: &EcsContour) -> Result<f64> {
    let real = EcsContour::new(contour.r_s, 0.0, contour.r_max)?;
    let inside: Vec<Complex64> = mesh
        .quadrature_points()
        .iter()
        .map(|&r| Complex64::new(if r < contour.r_s { 1.0 } else { 0.0 }, 0.0))
        .collect();
    let s_in = potential_matrix_sampled(mesh, &real, &inside)?;
    let n = mesh.n_dof();
    if sol.eigenvector.len() % n != 0 {
        return Err(Error::Dimension {
            row: sol.eigenvector.len(),
            col: n,
            detail: "eigenvector length is not a multiple of the radial dof count".into(),
        });
    }
    let mut total = 0.0;
    for block in sol.eigenvector.chunks(n) {
        let mut sv = vec![Complex64::new(0.0, 0.0); n];
        s_in.mul_add(block, &mut sv);
        total += block
            .iter()
            .zip(&sv)
            .map(|(c, s)| (c.conj() * s).re)
            .sum::<f64>();
    }
    Ok(total)
}

/// Orbital value `Σ_lm u_lm(r)/r Y_lm(r̂)` at a Cartesian point.
pub fn orbital_value(sol: &EigenSolution, mesh: &FemMesh, l_max: i32, p: [f64; 3]) -> Complex64 {
    let n = mesh.n_dof();
    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    // u/r has a finite limit at the origin; sample just off it.
    let (rr, dir) = if r < 1e-10 {
        (1e-10, [0.0, 0.0, 1.0])
    } else {
        (r, p)
    };
    let basis = mesh.basis_at(rr);
    let ys = spherical_harmonics(l_max, dir[0], dir[1], dir[2]);
    let mut psi = Complex64::new(0.0, 0.0);
    for ch in AngularChannel::enumerate(l_max) {
        let k = ch.index();
        let u: Complex64 = basis
            .iter()
            .map(|&(d, f)| sol.eigenvector[k * n + d] * f)
            .sum();
        psi += u * ys[k];
    }
    psi / rr
}

/// `|ψ|^2` on a plane, normalized over `r < r_s`. Points at or beyond
/// `r_s` are masked.
pub fn evaluate_density(
    sol: &EigenSolution,
    mesh: &FemMesh,
    l_max: i32,
    contour: &EcsContour,
    geometry: &MoleculeGeometry,
    grid: &GridSpec,
) -> Result<PlaneGrid> {
    if grid.samples == 0 || !(grid.extent > 0.0) {
        return invalid(format!(
            "grid needs samples > 0 and extent > 0 (got {} and {})",
            grid.samples, grid.extent
        ));
    }
    let expected = mesh.n_dof() * AngularChannel::count(l_max);
    if sol.eigenvector.len() != expected {
        return Err(Error::Dimension {
            row: sol.eigenvector.len(),
            col: expected,
            detail: "eigenvector does not match mesh and l_max".into(),
        });
    }
    let norm = inner_norm(sol, mesh, contour)?;
    if !(norm > 0.0) {
        return invalid("orbital has zero weight inside the scaling radius");
    }
    let ns = grid.samples;
    let values: Vec<f64> = (0..ns * ns)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / ns, idx % ns);
            let p = grid.plane.point(grid.coordinate(i), grid.coordinate(j));
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            if r >= contour.r_s {
                f64::NAN
            } else {
                orbital_value(sol, mesh, l_max, p).norm_sqr() / norm
            }
        })
        .collect();
    let masked = values.iter().filter(|v| v.is_nan()).count();
    if masked > 0 {
        eprintln!(
            "density: {masked} grid points lie at or beyond r_s = {} and are masked",
            contour.r_s
        );
    }
    let mut nuclei = vec![(
        "O".to_string(),
        grid.plane.project(geometry.oxygen.position),
    )];
    for (k, h) in geometry.hydrogens.iter().enumerate() {
        nuclei.push((format!("H{}", k + 1), grid.plane.project(h.position)));
    }
    let max = values
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0f64, |a, &b| a.max(b));
    Ok(PlaneGrid {
        spec: *grid,
        values,
        masked,
        nuclei,
        contour_levels: contour_levels(max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels() {
        assert_eq!(contour_levels(0.001), vec![0.005, 0.01, 0.02]);
        let l = contour_levels(0.09);
        assert_eq!(l.len(), 6);
        assert!((l[5] - 0.08).abs() < 1e-15);
    }

    #[test]
    fn plane_geometry() {
        let g = GridSpec::default();
        assert_eq!(g.coordinate(0), -8.0);
        assert_eq!(g.coordinate(200), 8.0);
        assert_eq!(g.coordinate(100), 0.0);
        assert_eq!(Plane::Yz.point(1.0, 2.0), [0.0, 1.0, 2.0]);
        assert_eq!(Plane::Xz.project([1.0, 2.0, 3.0]), [1.0, 3.0]);
        assert_eq!("y-z".parse::<Plane>().unwrap(), Plane::Yz);
    }
}
