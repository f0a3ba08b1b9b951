//! Single-point solves built on the sweep drivers.

use std::collections::BTreeMap;

use stark_core::assembly::{FieldDirection, FieldSpec, Problem};
use stark_core::eigensolver::{EigenSolution, Orbital, SolverOptions};
use stark_core::sweep::{field_sweep, orientation_sweep, SweepResult, SweepRow};
use stark_core::{Error, Result};

/// `step, 2 step, ..., |f|` with the sign of `f`; the last point is `f`.
pub fn ramp(f: f64, step: f64) -> Vec<f64> {
    let n = (f.abs() / step - 1e-9).ceil().max(1.0) as usize;
    let mut out: Vec<f64> = (1..n)
        .map(|k| f.signum() * ((k as f64 * step) * 1e10).round() / 1e10)
        .collect();
    out.push(f);
    out
}

/// Continues `orbitals` from the field-free solutions to `field`.
pub fn solve_at(
    problem: &Problem,
    field: &FieldSpec,
    step: f64,
    orbitals: &[Orbital],
    field_free: &BTreeMap<Orbital, EigenSolution>,
    opts: &SolverOptions,
) -> Result<SweepResult> {
    match field.direction {
        FieldDirection::XzPlane => orientation_sweep(
            problem,
            field.magnitude(),
            &[(field.frac_z, field.frac_x)],
            orbitals,
            field_free,
            opts,
        ),
        d => {
            let f = stark_core::sweep::signed_strength(field);
            let points = if f == 0.0 { vec![0.0] } else { ramp(f, step) };
            let mut sweep = field_sweep(problem, d, &points, orbitals, field_free, opts)?;
            sweep
                .rows
                .retain(|r| (stark_core::sweep::signed_strength(r.field()) - f).abs() < 1e-12);
            Ok(sweep)
        }
    }
}

/// The row of `orbital` in a single-point result, or the reason it is missing.
pub fn single_row(sweep: &SweepResult, orbital: Orbital) -> Result<&SweepRow> {
    if let Some(row) = sweep.rows_for(orbital).next() {
        return Ok(row);
    }
    match sweep.breaks.iter().find(|b| b.orbital == orbital) {
        Some(b) => Err(Error::MissingOrbital(format!("{orbital}: {}", b.reason))),
        None => Err(Error::MissingOrbital(orbital.to_string())),
    }
}
