//! Built-in validation suite.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use stark_core::angular::{build_gaunt_table, gauss_legendre, spherical_harmonics, AngularChannel};
use stark_core::assembly::{FieldSpec, Problem, ProblemSpec};
use stark_core::density::{evaluate_density, GridSpec, Plane};
use stark_core::eigensolver::{field_free_orbitals, solve_near, Orbital};
use stark_core::potential::{assemble_molecular_multipoles, GeometryParams, MoleculeGeometry};
use stark_core::radial_fem::EcsContour;
use stark_core::Result;

use crate::config::RunConfig;
use crate::run::{single_row, solve_at};

/// Field-free reference energies at `l_max = 4`.
pub const FIELD_FREE_L4: [(Orbital, f64); 3] = [
    (Orbital::B1_1, -0.52192511),
    (Orbital::A1_3, -0.57616864),
    (Orbital::B2_1, -0.71942859),
];

/// Radii where the order-8 multipole sum is compared with the direct
/// potential. The hydrogen shell `0.8 < r < 4` is left out: the nuclear
/// cusp there is not representable by any finite expansion.
pub const RECONSTRUCTION_RADII: [f64; 7] = [0.2, 0.5, 0.8, 4.0, 6.0, 10.0, 16.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, measured: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name,
            measured,
            tolerance,
            passed: measured.is_finite() && measured <= tolerance,
            detail,
        }
    }

    fn failed(name: &'static str, tolerance: f64, e: impl fmt::Display) -> Self {
        Self {
            name,
            measured: f64::NAN,
            tolerance,
            passed: false,
            detail: format!("error: {e}"),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<26} error {:.3e} (tol {:.1e}) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance,
            self.detail
        )
    }
}

fn wrap(name: &'static str, tol: f64, r: Result<(f64, String)>) -> Check {
    match r {
        Ok((m, d)) => Check::new(name, m, tol, d),
        Err(e) => Check::failed(name, tol, e),
    }
}

/// `{1s, 2s}` of a bare unit charge on the real axis with a wide box.
pub fn hydrogen_levels() -> Result<(f64, f64)> {
    let spec = ProblemSpec {
        geometry: GeometryParams::pure_coulomb(),
        contour: EcsContour::new(16.4, 0.0, 40.0)?,
        elements: 50,
        order: 8,
        l_max: 0,
    };
    let problem = Problem::new(spec)?;
    let hp = problem.hamiltonian(&FieldSpec::none());
    let mut e: Vec<f64> = solve_near(&hp, Complex64::new(-0.55, 0.0), 2)?
        .iter()
        .map(|s| s.eigenvalue.re)
        .collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((e[0], e[1]))
}

pub fn check_hydrogen() -> Check {
    wrap(
        "hydrogen 1s/2s",
        1e-7,
        hydrogen_levels().map(|(a, b)| {
            let err = (a + 0.5).abs().max((b + 0.125).abs());
            (err, format!("E = {a:.10}, {b:.10}"))
        }),
    )
}

/// Largest deviation of the Gaunt table from a product-rule sphere
/// quadrature, forbidden couplings included.
pub fn gaunt_quadrature_error(l_max: i32) -> Result<f64> {
    let table = build_gaunt_table(l_max)?;
    let lm = table.lambda_max();
    let (xs, ws) = gauss_legendre(2 * lm as usize + 8)?;
    let nphi = 4 * lm as usize + 8;
    let chans = AngularChannel::enumerate(l_max);
    let mults = AngularChannel::enumerate(lm);
    let nch = chans.len();
    let nmp = mults.len();
    let mut acc = vec![Complex64::new(0.0, 0.0); nch * nmp * nch];
    for (&ct, &w) in xs.iter().zip(&ws) {
        let st = (1.0 - ct * ct).sqrt();
        for k in 0..nphi {
            let phi = 2.0 * PI * k as f64 / nphi as f64;
            let y = spherical_harmonics(lm, st * phi.cos(), st * phi.sin(), ct);
            let wt = w * 2.0 * PI / nphi as f64;
            for a in &chans {
                let ya = y[a.index()].conj() * wt;
                for m in &mults {
                    let yam = ya * y[m.index()];
                    for b in &chans {
                        acc[(a.index() * nmp + m.index()) * nch + b.index()] += yam * y[b.index()];
                    }
                }
            }
        }
    }
    let mut worst: f64 = 0.0;
    for a in &chans {
        for m in &mults {
            for b in &chans {
                let q = acc[(a.index() * nmp + m.index()) * nch + b.index()];
                worst = worst.max((q - table.get(*a, *m, *b)).norm());
            }
        }
    }
    Ok(worst)
}

pub fn check_gaunt() -> Check {
    wrap(
        "gaunt vs quadrature",
        1e-12,
        gaunt_quadrature_error(4).map(|e| (e, "l_max = 4".into())),
    )
}

/// Largest `|V_direct - V_expansion|` on spheres of the given radii.
pub fn reconstruction_error(
    geometry: &MoleculeGeometry,
    lambda_max: i32,
    radii: &[f64],
) -> Result<f64> {
    let mp = assemble_molecular_multipoles(geometry, lambda_max)?;
    let mut worst: f64 = 0.0;
    for &r in radii {
        for it in 0..24 {
            let th = (it as f64 + 0.5) * PI / 24.0;
            for ip in 0..48 {
                let ph = ip as f64 * PI / 24.0;
                let (x, y, z) = (
                    r * th.sin() * ph.cos(),
                    r * th.sin() * ph.sin(),
                    r * th.cos(),
                );
                worst = worst.max(
                    (geometry.potential_at(x, y, z) - mp.reconstruct(x, y, z, lambda_max)).abs(),
                );
            }
        }
    }
    Ok(worst)
}

pub fn check_reconstruction() -> Check {
    wrap(
        "multipole reconstruction",
        1e-3,
        reconstruction_error(&MoleculeGeometry::water(), 8, &RECONSTRUCTION_RADII)
            .map(|e| (e, "lambda_max = 8".into())),
    )
}

/// 1b1 at `F_x = 0.1` on each scaling angle.
pub fn xi_scan(cfg: &RunConfig, xis: &[f64]) -> Result<Vec<Complex64>> {
    let base = Problem::new(cfg.problem_spec())?;
    let opts = cfg.solver_options();
    let mut out = Vec::new();
    for &xi in xis {
        let problem = base.with_xi(xi)?;
        let ff = field_free_orbitals(&problem, &opts)?;
        let sweep = solve_at(
            &problem,
            &FieldSpec::x(0.1),
            cfg.sweep_step,
            &[Orbital::B1_1],
            &ff,
            &opts,
        )?;
        out.push(single_row(&sweep, Orbital::B1_1)?.resonance.eigenvalue);
    }
    Ok(out)
}

pub fn check_xi_stability(cfg: &RunConfig) -> Check {
    let xis = [1.3, 1.4, 1.5];
    wrap(
        "xi stability",
        1e-6,
        xi_scan(cfg, &xis).map(|e| {
            let spread = e
                .iter()
                .flat_map(|a| e.iter().map(move |b| (a - b).norm()))
                .fold(0.0, f64::max);
            (spread, format!("1b1 at F_x=0.1 over xi = {xis:?}"))
        }),
    )
}

/// 1b1 at `+F_x` and `-F_x`.
pub fn reflection_pair(cfg: &RunConfig, f: f64) -> Result<(Complex64, Complex64)> {
    let problem = Problem::new(cfg.problem_spec())?;
    let opts = cfg.solver_options();
    let ff = field_free_orbitals(&problem, &opts)?;
    let plus = solve_at(
        &problem,
        &FieldSpec::x(f),
        cfg.sweep_step,
        &[Orbital::B1_1],
        &ff,
        &opts,
    )?;
    let minus = solve_at(
        &problem,
        &FieldSpec::x(-f),
        cfg.sweep_step,
        &[Orbital::B1_1],
        &ff,
        &opts,
    )?;
    Ok((
        single_row(&plus, Orbital::B1_1)?.resonance.eigenvalue,
        single_row(&minus, Orbital::B1_1)?.resonance.eigenvalue,
    ))
}

pub fn check_reflection(cfg: &RunConfig) -> Check {
    wrap(
        "F_x <-> -F_x",
        1e-10,
        reflection_pair(cfg, 0.1).map(|(p, m)| ((p - m).norm(), format!("E(+0.1) = {p:.10}"))),
    )
}

pub fn check_hermiticity(cfg: &RunConfig) -> Check {
    let run = || -> Result<(f64, String)> {
        let problem = Problem::new(cfg.problem_spec())?.with_xi(0.0)?;
        let hp = problem.hamiltonian(&FieldSpec::none());
        Ok((hp.hermiticity_defect(), "F = 0, xi = 0".into()))
    };
    wrap("hermiticity", 1e-13, run())
}

/// Largest field-free 1b1 density on the molecular plane.
pub fn b1_plane_density(cfg: &RunConfig, samples: usize) -> Result<f64> {
    let problem = Problem::new(cfg.problem_spec())?;
    let ff = field_free_orbitals(&problem, &cfg.solver_options())?;
    let sol = &ff[&Orbital::B1_1];
    let grid = GridSpec {
        plane: Plane::Yz,
        extent: cfg.density_extent,
        samples,
    };
    let g = evaluate_density(
        sol,
        problem.mesh(),
        cfg.l_max,
        &problem.spec().contour,
        problem.geometry(),
        &grid,
    )?;
    Ok(g.max())
}

pub fn check_b1_density(cfg: &RunConfig) -> Check {
    wrap(
        "1b1 density on y-z plane",
        1e-20,
        b1_plane_density(cfg, 41).map(|m| (m, "41 x 41 grid".into())),
    )
}

/// Field-free energies at `l_max = 4` for the three valence orbitals.
pub fn field_free_l4(cfg: &RunConfig) -> Result<BTreeMap<Orbital, f64>> {
    let problem = Problem::new(ProblemSpec {
        l_max: 4,
        ..cfg.problem_spec()
    })?;
    let ff = field_free_orbitals(&problem, &cfg.solver_options())?;
    Ok(ff.into_iter().map(|(o, s)| (o, s.eigenvalue.re)).collect())
}

pub fn check_field_free_l4(cfg: &RunConfig) -> Check {
    wrap(
        "field-free l_max=4",
        2e-4,
        field_free_l4(cfg).map(|e| {
            let err = FIELD_FREE_L4
                .iter()
                .map(|(o, r)| (e[o] - r).abs())
                .fold(0.0, f64::max);
            let detail = FIELD_FREE_L4
                .iter()
                .map(|(o, _)| format!("{o} {:.7}", e[o]))
                .collect::<Vec<_>>()
                .join(", ");
            (err, detail)
        }),
    )
}

/// Runs every check. `quick` skips the `l_max = 4` solve.
pub fn validate(cfg: &RunConfig, quick: bool) -> Vec<Check> {
    let mut out = vec![
        check_hydrogen(),
        check_gaunt(),
        check_reconstruction(),
        check_hermiticity(cfg),
        check_b1_density(cfg),
        check_reflection(cfg),
        check_xi_stability(cfg),
    ];
    if !quick {
        out.push(check_field_free_l4(cfg));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaunt_oracle_small() {
        assert!(gaunt_quadrature_error(2).unwrap() < 1e-13);
    }

    #[test]
    fn check_formatting() {
        let c = Check::new("x", 1e-9, 1e-8, "d".into());
        assert!(c.passed);
        assert!(c.to_string().starts_with("PASS x"));
        assert!(!Check::new("x", f64::NAN, 1.0, String::new()).passed);
    }
}
