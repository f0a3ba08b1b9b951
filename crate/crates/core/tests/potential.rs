use std::f64::consts::PI;

use proptest::prelude::*;
use stark_core::angular::gauss_legendre;
use stark_core::potential::{
    assemble_molecular_multipoles, hydrogen_multipole_radial, v_center, GeometryParams,
    MoleculeGeometry, ScreenedCenter,
};

fn bare_proton() -> ScreenedCenter {
    ScreenedCenter {
        z_full: 1.0,
        n_screen: 0.0,
        alpha: 1.0,
        position: [0.0, 0.0, 1.8],
    }
}

/// `(1/4π) ∮ V dΩ` by Gauss-Legendre in cos θ and the trapezoid rule in φ.
fn sphere_average(g: &MoleculeGeometry, r: f64) -> f64 {
    let (xs, ws) = gauss_legendre(96).unwrap();
    let nphi = 192;
    let mut s = 0.0;
    for (&ct, &w) in xs.iter().zip(&ws) {
        let st = (1.0 - ct * ct).sqrt();
        for k in 0..nphi {
            let p = 2.0 * PI * k as f64 / nphi as f64;
            s += w * g.potential_at(r * st * p.cos(), r * st * p.sin(), r * ct);
        }
    }
    s * 2.0 * PI / nphi as f64 / (4.0 * PI)
}

#[test]
fn unscreened_multipoles_are_analytic() {
    let h = bare_proton();
    let big_r: f64 = 1.8;
    let mut worst: f64 = 0.0;
    for &r in &[0.05f64, 0.5, 1.2, 1.75, 1.79, 1.81, 1.85, 2.5, 6.0, 20.0] {
        let (lo, hi) = if r < big_r { (r, big_r) } else { (big_r, r) };
        for lambda in 0..=8usize {
            let exact = -lo.powi(lambda as i32) / hi.powi(lambda as i32 + 1);
            let got = hydrogen_multipole_radial(&h, lambda, r, big_r).unwrap();
            worst = worst.max((got.value - exact).abs());
            assert!(
                got.converged,
                "r={r} λ={lambda}: estimate {}",
                got.error_estimate
            );
        }
    }
    assert!(worst < 1e-10, "{worst:e}");
}

#[test]
fn monopole_is_the_spherical_average() {
    let g = MoleculeGeometry::water();
    let mp = assemble_molecular_multipoles(&g, 8).unwrap();
    for &r in &[0.4, 1.0, 3.0, 7.5, 15.0] {
        let v00 = mp.coefficient(0, 0, r).unwrap();
        let avg = sphere_average(&g, r);
        // Y_0^0 = 1/sqrt(4π)
        let mono = v00.re / (4.0 * PI).sqrt();
        assert!(v00.im.abs() < 1e-15);
        assert!((mono - avg).abs() < 1e-8, "r={r}: {mono} vs {avg}");
    }
}

#[test]
fn reconstruction_reaches_1e_3_off_the_hydrogen_shell() {
    let g = MoleculeGeometry::water();
    let mp = assemble_molecular_multipoles(&g, 8).unwrap();
    let mut worst: f64 = 0.0;
    for &r in &[0.2, 0.5, 0.8, 4.0, 6.0, 10.0, 16.0] {
        for it in 0..18 {
            let t = (it as f64 + 0.5) * PI / 18.0;
            for ip in 0..36 {
                let p = ip as f64 * PI / 18.0;
                let (x, y, z) = (r * t.sin() * p.cos(), r * t.sin() * p.sin(), r * t.cos());
                worst = worst.max((g.potential_at(x, y, z) - mp.reconstruct(x, y, z, 8)).abs());
            }
        }
    }
    assert!(worst < 1e-3, "{worst:e}");
}

#[test]
fn reconstruction_improves_with_order() {
    let g = MoleculeGeometry::water();
    let mp = assemble_molecular_multipoles(&g, 8).unwrap();
    let pt = |r: f64| (0.0, r * 0.6, r * 0.8);
    for &r in &[0.6, 3.0, 5.0] {
        let (x, y, z) = pt(r);
        let direct = g.potential_at(x, y, z);
        let e4 = (direct - mp.reconstruct(x, y, z, 4)).abs();
        let e8 = (direct - mp.reconstruct(x, y, z, 8)).abs();
        assert!(e8 < e4, "r={r}: {e8} !< {e4}");
    }
}

#[test]
fn far_field_is_unit_coulomb() {
    let g = MoleculeGeometry::water();
    assert!((g.asymptotic_charge() - 1.0).abs() < 1e-12);
    let r = 40.0;
    let avg = sphere_average(&g, r);
    assert!((avg + 1.0 / r).abs() < 1e-12, "{avg}");
}

#[test]
fn pure_coulomb_mode() {
    let g = MoleculeGeometry::new(GeometryParams::pure_coulomb()).unwrap();
    assert_eq!(g.asymptotic_charge(), 1.0);
    let mp = assemble_molecular_multipoles(&g, 4).unwrap();
    for &r in &[0.3, 2.0, 11.0] {
        let c = mp.coefficients_at(r);
        assert!((c[0].re / (4.0 * PI).sqrt() + 1.0 / r).abs() < 1e-14);
        assert!(c[1..].iter().all(|v| v.norm() < 1e-15));
    }
    assert!((v_center(&g.oxygen, 0.5).unwrap() + 2.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn expansion_respects_both_reflections(r in 0.1f64..14.0, t in 0.0f64..PI, p in 0.0f64..(2.0 * PI)) {
        let g = MoleculeGeometry::water();
        let mp = assemble_molecular_multipoles(&g, 6).unwrap();
        let (x, y, z) = (r * t.sin() * p.cos(), r * t.sin() * p.sin(), r * t.cos());
        let v = mp.reconstruct(x, y, z, 6);
        prop_assert!((v - mp.reconstruct(-x, y, z, 6)).abs() < 1e-12);
        prop_assert!((v - mp.reconstruct(x, -y, z, 6)).abs() < 1e-12);
    }

    #[test]
    fn screening_interpolates_charges(d in 1e-6f64..50.0) {
        let g = MoleculeGeometry::water();
        let zo = g.oxygen.effective_charge(d);
        prop_assert!(zo <= 8.0 + 1e-12 && zo >= 8.0 - 7.185 - 1e-12);
        let zh = g.hydrogens[0].effective_charge(d);
        prop_assert!(zh <= 1.0 + 1e-12 && zh >= 1.0 - 0.9075 - 1e-12);
    }
}
