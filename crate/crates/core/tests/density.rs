use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use stark_core::angular::gauss_legendre;
use stark_core::assembly::{FieldDirection, Problem, ProblemSpec};
use stark_core::density::{
    evaluate_density, inner_norm, orbital_value, GridSpec, Plane, PlaneGrid,
};
use stark_core::eigensolver::{field_free_orbitals, EigenSolution, Orbital, SolverOptions};
use stark_core::sweep::field_sweep;

struct Setup {
    problem: Problem,
    field_free: BTreeMap<Orbital, EigenSolution>,
    b1_fx: EigenSolution,
}

fn setup() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let problem = Problem::new(ProblemSpec::default()).unwrap();
        let opts = SolverOptions::default();
        let field_free = field_free_orbitals(&problem, &opts).unwrap();
        let sweep = field_sweep(
            &problem,
            FieldDirection::X,
            &[0.04, 0.08, 0.12],
            &[Orbital::B1_1],
            &field_free,
            &opts,
        )
        .unwrap();
        let b1_fx = sweep.at(Orbital::B1_1, 0.12).unwrap().solution.clone();
        Setup {
            problem,
            field_free,
            b1_fx,
        }
    })
}

fn grid(sol: &EigenSolution, plane: Plane, extent: f64, samples: usize) -> PlaneGrid {
    let s = setup();
    let p = &s.problem;
    evaluate_density(
        sol,
        p.mesh(),
        p.spec().l_max,
        &p.spec().contour,
        p.geometry(),
        &GridSpec {
            plane,
            extent,
            samples,
        },
    )
    .unwrap()
}

#[test]
fn b1_vanishes_on_the_molecular_plane() {
    let s = setup();
    let g = grid(&s.field_free[&Orbital::B1_1], Plane::Yz, 8.0, 201);
    assert_eq!(g.values.len(), 201 * 201);
    assert!(g.max() <= 1e-20, "{:e}", g.max());
}

/// `∫_{r < r_s} |ψ|^2 dV` by product quadrature on the mesh elements.
#[test]
fn density_integrates_to_one_inside_r_s() {
    let s = setup();
    let p = &s.problem;
    let sol = &s.field_free[&Orbital::B1_1];
    let norm = inner_norm(sol, p.mesh(), &p.spec().contour).unwrap();
    let (xr, wr) = gauss_legendre(14).unwrap();
    let (xt, wt) = gauss_legendre(12).unwrap();
    let nphi = 16;
    let r_s = p.spec().contour.r_s;
    let mut total = 0.0;
    for w in p.mesh().breakpoints().windows(2) {
        if w[0] >= r_s {
            break;
        }
        let (a, b) = (w[0], w[1]);
        for (&x, &wx) in xr.iter().zip(&wr) {
            let r = 0.5 * (a + b) + 0.5 * (b - a) * x;
            let dr = 0.5 * (b - a) * wx * r * r;
            for (&ct, &wc) in xt.iter().zip(&wt) {
                let st = (1.0 - ct * ct).sqrt();
                for k in 0..nphi {
                    let ph = 2.0 * PI * k as f64 / nphi as f64;
                    let pt = [r * st * ph.cos(), r * st * ph.sin(), r * ct];
                    let d = orbital_value(sol, p.mesh(), p.spec().l_max, pt).norm_sqr() / norm;
                    total += d * dr * wc * 2.0 * PI / nphi as f64;
                }
            }
        }
    }
    assert!((total - 1.0).abs() < 1e-6, "{total}");
}

#[test]
fn field_free_densities_are_even_in_y() {
    let s = setup();
    for o in [Orbital::A1_3, Orbital::B2_1, Orbital::B1_1] {
        for plane in [Plane::Yz, Plane::Xy] {
            let g = grid(&s.field_free[&o], plane, 6.0, 61);
            let n = 61;
            // y is the first in-plane coordinate on y-z and the second on x-y.
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let mirror = match plane {
                        Plane::Yz => g.value(n - 1 - i, j),
                        _ => g.value(i, n - 1 - j),
                    };
                    worst = worst.max((g.value(i, j) - mirror).abs());
                }
            }
            assert!(worst < 1e-10, "{o} {plane}: {worst:e}");
        }
    }
}

#[test]
fn x_field_breaks_the_x_reflection() {
    let s = setup();
    let n = 61;
    let asym = |g: &PlaneGrid| {
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((g.value(i, j) - g.value(n - 1 - i, j)).abs());
            }
        }
        worst
    };
    let free = grid(&s.field_free[&Orbital::B1_1], Plane::Xz, 6.0, n);
    let field = grid(&s.b1_fx, Plane::Xz, 6.0, n);
    assert!(asym(&free) < 1e-10, "{:e}", asym(&free));
    assert!(asym(&field) > 1e-3, "{:e}", asym(&field));
    assert!(field.values.iter().all(|v| *v >= 0.0));
}

/// Doubling keeps every coarse point, so values are compared where both grids sample.
#[test]
fn grid_values_converge_under_doubling() {
    let s = setup();
    for o in [Orbital::A1_3, Orbital::B1_1] {
        let coarse = grid(&s.field_free[&o], Plane::Xz, 8.0, 101);
        let fine = grid(&s.field_free[&o], Plane::Xz, 8.0, 201);
        let mut worst: f64 = 0.0;
        for i in 0..101 {
            for j in 0..101 {
                worst = worst.max((fine.value(2 * i, 2 * j) - coarse.value(i, j)).abs());
            }
        }
        assert!(worst < 1e-3, "{o}: {worst:e}");
    }
}

#[test]
fn points_beyond_r_s_are_masked() {
    let s = setup();
    let g = grid(&s.field_free[&Orbital::A1_3], Plane::Yz, 20.0, 41);
    assert!(g.masked > 0);
    for i in 0..41 {
        for j in 0..41 {
            let (u, v) = (g.spec.coordinate(i), g.spec.coordinate(j));
            assert_eq!(g.value(i, j).is_nan(), u.hypot(v) >= 16.4);
        }
    }
    assert_eq!(&g.contour_levels[..3], &[0.005, 0.01, 0.02]);
    let h1 = &g.nuclei[1].1;
    assert!((h1[0].abs() - 1.8 * 52.5f64.to_radians().sin()).abs() < 1e-12);
    assert!((h1[1] - 1.8 * 52.5f64.to_radians().cos()).abs() < 1e-12);
}
