//! Field-strength and orientation sweeps by continuation from the
//! field-free orbitals, plus direct-sum molecular totals.

use std::collections::BTreeMap;
use std::time::SystemTime;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::assembly::{FieldDirection, FieldSpec, Problem};
use crate::eigensolver::{
    continue_resonance, half_width_or_na, solve_near_with, EigenSolution, Orbital, Resonance,
    SolveRequest, SolverOptions,
};
use crate::error::{invalid, Error, Result};
use crate::radial_fem::EcsContour;

/// Candidates requested per continuation step.
const CANDIDATES: usize = 3;
/// How often a failed step may be halved.
const MAX_HALVINGS: u32 = 6;
/// Magnitude substeps of an orientation point.
const ORIENTATION_SUBSTEPS: usize = 5;
/// Half-widths at or below this are left out of the direct-sum width.
pub const DS_WIDTH_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub orbital: Orbital,
    pub resonance: Resonance,
    pub solution: EigenSolution,
}

impl SweepRow {
    pub fn field(&self) -> &FieldSpec {
        &self.resonance.field
    }
}

/// Where a continuation family stopped early.
#[derive(Debug, Clone)]
pub struct SweepBreak {
    pub orbital: Orbital,
    pub field: FieldSpec,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub breaks: Vec<SweepBreak>,
    pub l_max: i32,
    pub direction: FieldDirection,
    pub contour: EcsContour,
    /// Field-free energies the shifts refer to.
    pub field_free: BTreeMap<Orbital, Complex64>,
    pub started: SystemTime,
    pub finished: SystemTime,
}

impl SweepResult {
    pub fn rows_for(&self, orbital: Orbital) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.orbital == orbital)
    }

    /// Resonance of `orbital` at the field point `f` along the sweep axis.
    pub fn at(&self, orbital: Orbital, f: f64) -> Option<&SweepRow> {
        self.rows_for(orbital)
            .find(|r| (signed_strength(&r.resonance.field) - f).abs() < 1e-12)
    }
}

/// Signed strength along the sweep axis; the magnitude for in-plane fields.
pub fn signed_strength(field: &FieldSpec) -> f64 {
    match field.direction {
        FieldDirection::X => field.f_x,
        FieldDirection::Y => field.f_y,
        FieldDirection::Z => field.f_z,
        FieldDirection::XzPlane => field.magnitude(),
    }
}

struct Track {
    s: f64,
    sol: EigenSolution,
    prev: Option<(f64, Complex64)>,
}

fn retryable(e: &Error) -> bool {
    matches!(
        e,
        Error::ContinuationBreak { .. } | Error::NoConvergence { .. } | Error::Singular { .. }
    )
}

/// One continuation step along `unit.scaled(s)`.
fn step(
    problem: &Problem,
    orbital: Orbital,
    unit: &FieldSpec,
    track: &Track,
    s_new: f64,
    opts: &SolverOptions,
) -> Result<Track> {
    let field = unit.scaled(s_new);
    let hp = problem.hamiltonian(&field);
    let shift = match track.prev {
        Some((s0, e0)) if s0 != track.s => {
            let slope = (track.sol.eigenvalue - e0) / (track.s - s0);
            track.sol.eigenvalue + slope * (s_new - track.s)
        }
        _ => track.sol.eigenvalue,
    };
    let req = SolveRequest {
        start: Some(&track.sol.eigenvector),
        sector: orbital.sector(&field),
    };
    let candidates = solve_near_with(&hp, shift, CANDIDATES, opts, &req)?;
    let best = continue_resonance(&track.sol, &candidates)?;
    Ok(Track {
        s: s_new,
        sol: best,
        prev: Some((track.s, track.sol.eigenvalue)),
    })
}

/// Steps to `s_target`, halving the step when continuation breaks.
fn walk(
    problem: &Problem,
    orbital: Orbital,
    unit: &FieldSpec,
    track: Track,
    s_target: f64,
    opts: &SolverOptions,
    depth: u32,
) -> Result<Track> {
    match step(problem, orbital, unit, &track, s_target, opts) {
        Ok(t) => Ok(t),
        Err(e) if retryable(&e) && depth < MAX_HALVINGS => {
            let mid = 0.5 * (track.s + s_target);
            eprintln!(
                "continuation: {orbital} step to {s_target:.6} failed ({e}); halving at {mid:.6}"
            );
            let half = walk(problem, orbital, unit, track, mid, opts, depth + 1)?;
            walk(problem, orbital, unit, half, s_target, opts, depth + 1)
        }
        Err(e) => Err(e),
    }
}

/// Follows one family through `points` (increasing distance from 0),
/// returning the solved points and the first failure if any.
fn follow(
    problem: &Problem,
    orbital: Orbital,
    unit: &FieldSpec,
    start: &EigenSolution,
    points: &[f64],
    opts: &SolverOptions,
) -> (Vec<(f64, EigenSolution)>, Option<(f64, Error)>) {
    let mut out = Vec::with_capacity(points.len());
    let mut track = Track {
        s: 0.0,
        sol: start.clone(),
        prev: None,
    };
    for &s in points {
        if s == 0.0 {
            out.push((s, start.clone()));
            continue;
        }
        match walk(problem, orbital, unit, track, s, opts, 0) {
            Ok(t) => {
                out.push((s, t.sol.clone()));
                track = t;
            }
            Err(e) => return (out, Some((s, e))),
        }
    }
    (out, None)
}

fn resonance(problem: &Problem, orbital: Orbital, field: FieldSpec, e: Complex64) -> Resonance {
    Resonance {
        orbital,
        field,
        l_max: problem.spec().l_max,
        eigenvalue: e,
    }
}

/// Continues each orbital from `field_free` through the field values
/// `strengths` along `direction`. Negative and positive strengths are
/// followed separately outward from zero.
pub fn field_sweep(
    problem: &Problem,
    direction: FieldDirection,
    strengths: &[f64],
    orbitals: &[Orbital],
    field_free: &BTreeMap<Orbital, EigenSolution>,
    opts: &SolverOptions,
) -> Result<SweepResult> {
    if direction == FieldDirection::XzPlane {
        return invalid(
            "field_sweep runs along x, y or z; use orientation_sweep for in-plane fields",
        );
    }
    if strengths.iter().any(|f| !f.is_finite()) {
        return invalid("field strengths must be finite");
    }
    let started = SystemTime::now();
    let unit = FieldSpec::along(direction, 1.0);
    let mut pos: Vec<f64> = strengths.iter().copied().filter(|&f| f >= 0.0).collect();
    let mut neg: Vec<f64> = strengths.iter().copied().filter(|&f| f < 0.0).collect();
    pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pos.dedup();
    neg.sort_by(|a, b| b.partial_cmp(a).unwrap());
    neg.dedup();

    let per_orbital: Vec<(Orbital, Vec<SweepRow>, Vec<SweepBreak>)> = orbitals
        .par_iter()
        .map(|&orbital| -> Result<_> {
            let start = field_free
                .get(&orbital)
                .ok_or_else(|| Error::MissingOrbital(orbital.to_string()))?;
            let mut rows = Vec::new();
            let mut breaks = Vec::new();
            for branch in [&neg, &pos] {
                if branch.is_empty() {
                    continue;
                }
                let (done, failure) = follow(problem, orbital, &unit, start, branch, opts);
                for (s, sol) in done {
                    let field = unit.scaled(s);
                    rows.push(SweepRow {
                        orbital,
                        resonance: resonance(problem, orbital, field, sol.eigenvalue),
                        solution: sol,
                    });
                }
                if let Some((s, e)) = failure {
                    breaks.push(SweepBreak {
                        orbital,
                        field: unit.scaled(s),
                        reason: e.to_string(),
                    });
                }
            }
            rows.sort_by(|a, b| {
                signed_strength(a.field())
                    .partial_cmp(&signed_strength(b.field()))
                    .unwrap()
            });
            Ok((orbital, rows, breaks))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut breaks = Vec::new();
    for (_, r, b) in per_orbital {
        rows.extend(r);
        breaks.extend(b);
    }
    Ok(SweepResult {
        rows,
        breaks,
        l_max: problem.spec().l_max,
        direction,
        contour: problem.spec().contour,
        field_free: field_free.iter().map(|(o, s)| (*o, s.eigenvalue)).collect(),
        started,
        finished: SystemTime::now(),
    })
}

/// In-plane fields of fixed magnitude, one per `(f_z, f_x)` pair. Each
/// point restarts from the field-free orbital and ramps the magnitude up
/// in equal substeps at fixed angle.
pub fn orientation_sweep(
    problem: &Problem,
    magnitude: f64,
    fractions: &[(f64, f64)],
    orbitals: &[Orbital],
    field_free: &BTreeMap<Orbital, EigenSolution>,
    opts: &SolverOptions,
) -> Result<SweepResult> {
    if !(magnitude > 0.0) {
        return invalid(format!(
            "orientation sweep needs a positive magnitude, got {magnitude}"
        ));
    }
    let mut targets = Vec::with_capacity(fractions.len());
    for &(fz, fx) in fractions {
        if fx < 0.0 {
            return invalid(format!("orientation fraction f_x must be >= 0, got {fx}"));
        }
        let norm = fz.hypot(fx);
        if norm == 0.0 {
            return invalid("orientation fractions (0, 0) give no direction");
        }
        targets.push(FieldSpec::xz_plane(magnitude / norm, fx, fz)?);
    }
    let started = SystemTime::now();
    let ramp: Vec<f64> = (1..=ORIENTATION_SUBSTEPS)
        .map(|k| k as f64 / ORIENTATION_SUBSTEPS as f64)
        .collect();

    let jobs: Vec<(Orbital, FieldSpec)> = orbitals
        .iter()
        .flat_map(|&o| targets.iter().map(move |t| (o, *t)))
        .collect();
    let results: Vec<std::result::Result<SweepRow, SweepBreak>> = jobs
        .par_iter()
        .map(|&(orbital, target)| {
            let Some(start) = field_free.get(&orbital) else {
                return Err(SweepBreak {
                    orbital,
                    field: target,
                    reason: Error::MissingOrbital(orbital.to_string()).to_string(),
                });
            };
            let (done, failure) = follow(problem, orbital, &target, start, &ramp, opts);
            if let Some((s, e)) = failure {
                return Err(SweepBreak {
                    orbital,
                    field: target.scaled(s),
                    reason: e.to_string(),
                });
            }
            let (_, sol) = done.into_iter().last().expect("ramp is nonempty");
            Ok(SweepRow {
                orbital,
                resonance: resonance(problem, orbital, target, sol.eigenvalue),
                solution: sol,
            })
        })
        .collect();

    let mut rows = Vec::new();
    let mut breaks = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(b) => breaks.push(b),
        }
    }
    rows.sort_by(|a, b| {
        a.orbital
            .cmp(&b.orbital)
            .then(a.field().angle().partial_cmp(&b.field().angle()).unwrap())
    });
    Ok(SweepResult {
        rows,
        breaks,
        l_max: problem.spec().l_max,
        direction: FieldDirection::XzPlane,
        contour: problem.spec().contour,
        field_free: field_free.iter().map(|(o, s)| (*o, s.eigenvalue)).collect(),
        started,
        finished: SystemTime::now(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonMonotonicReport {
    /// Grid point of the most negative shift.
    pub minimum_field: f64,
    pub minimum_shift: f64,
    /// Consecutive grid points between which the shift turns from negative
    /// to non-negative, beyond the minimum.
    pub zero_crossing: Option<(f64, f64)>,
}

/// Locates the minimum and sign change of the Stark shift of `orbital`
/// over the non-negative field points; `None` when the shift is monotone.
pub fn non_monotonic_shift_report(
    sweep: &SweepResult,
    orbital: Orbital,
) -> Option<NonMonotonicReport> {
    let e0 = sweep.field_free.get(&orbital)?.re;
    let pts: Vec<(f64, f64)> = sweep
        .rows_for(orbital)
        .map(|r| (signed_strength(r.field()), r.resonance.position() - e0))
        .filter(|(f, _)| *f >= 0.0)
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let increasing = pts.windows(2).all(|w| w[1].1 >= w[0].1);
    let decreasing = pts.windows(2).all(|w| w[1].1 <= w[0].1);
    if increasing || decreasing {
        return None;
    }
    let (imin, &(fmin, smin)) = pts
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())?;
    let zero_crossing = pts[imin..]
        .windows(2)
        .find(|w| w[0].1 < 0.0 && w[1].1 >= 0.0)
        .map(|w| (w[0].0, w[1].0));
    Some(NonMonotonicReport {
        minimum_field: fmin,
        minimum_shift: smin,
        zero_crossing,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectSum {
    /// `Σ 2 (Re E(F) - Re E(0))` over all five orbitals.
    pub re_shift: f64,
    /// `Σ 2 (2 × half-width)` over the included orbitals.
    pub gamma: f64,
    pub included: Vec<Orbital>,
}

/// Doubly occupied sum over the five orbitals.
pub fn direct_sum(
    at_field: &BTreeMap<Orbital, Resonance>,
    field_free: &BTreeMap<Orbital, f64>,
) -> Result<DirectSum> {
    let mut re_shift = 0.0;
    let mut gamma = 0.0;
    let mut included = Vec::new();
    for o in Orbital::ALL {
        let r = at_field
            .get(&o)
            .ok_or_else(|| Error::MissingOrbital(o.to_string()))?;
        let e0 = field_free
            .get(&o)
            .ok_or_else(|| Error::MissingOrbital(o.to_string()))?;
        re_shift += 2.0 * (r.position() - e0);
        if let Some(hw) = half_width_or_na(r.eigenvalue.im) {
            if hw > DS_WIDTH_THRESHOLD {
                gamma += 2.0 * (2.0 * hw);
                included.push(o);
            }
        }
    }
    Ok(DirectSum {
        re_shift,
        gamma,
        included,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(o: Orbital, re: f64, im: f64) -> Resonance {
        Resonance {
            orbital: o,
            field: FieldSpec::x(0.1),
            l_max: 3,
            eigenvalue: Complex64::new(re, im),
        }
    }

    #[test]
    fn direct_sum_identity() {
        // Widths Γ_i = 2 × half-width: 0.000005, 0.001135, 0.010426.
        let e0: BTreeMap<Orbital, f64> = [
            (Orbital::A1_1, -21.0),
            (Orbital::A1_2, -1.18),
            (Orbital::B2_1, -0.71),
            (Orbital::A1_3, -0.57),
            (Orbital::B1_1, -0.52),
        ]
        .into_iter()
        .collect();
        let at: BTreeMap<Orbital, Resonance> = [
            res(Orbital::A1_1, -21.000006, -1e-15),
            res(Orbital::A1_2, -1.186135, -2e-10),
            res(Orbital::B2_1, -0.713968, -0.0000025),
            res(Orbital::A1_3, -0.581596, -0.0005675),
            res(Orbital::B1_1, -0.525356, -0.005213),
        ]
        .into_iter()
        .map(|r| (r.orbital, r))
        .collect();
        let ds = direct_sum(&at, &e0).unwrap();
        assert!((ds.re_shift + 0.054122).abs() < 1e-9, "{}", ds.re_shift);
        assert!((ds.gamma - 0.023132).abs() < 1e-12, "{}", ds.gamma);
        assert_eq!(
            ds.included,
            vec![Orbital::B2_1, Orbital::A1_3, Orbital::B1_1]
        );
        let hw_sum: f64 = ds.included.iter().map(|o| -at[o].eigenvalue.im).sum();
        assert_eq!(
            ds.gamma,
            ds.included
                .iter()
                .map(|o| 2.0 * (2.0 * -at[o].eigenvalue.im))
                .sum::<f64>()
        );
        assert!((ds.gamma - 4.0 * hw_sum).abs() < 1e-15);

        let zero: BTreeMap<Orbital, Resonance> =
            e0.iter().map(|(o, e)| (*o, res(*o, *e, 0.0))).collect();
        let ds0 = direct_sum(&zero, &e0).unwrap();
        assert_eq!(ds0.re_shift, 0.0);
        assert_eq!(ds0.gamma, 0.0);

        let mut missing = at.clone();
        missing.remove(&Orbital::B1_1);
        assert!(matches!(
            direct_sum(&missing, &e0),
            Err(Error::MissingOrbital(_))
        ));
    }

    fn fake_sweep(orbital: Orbital, e0: f64, pts: &[(f64, f64)]) -> SweepResult {
        let rows = pts
            .iter()
            .map(|&(f, e)| SweepRow {
                orbital,
                resonance: Resonance {
                    orbital,
                    field: FieldSpec::x(f),
                    l_max: 3,
                    eigenvalue: Complex64::new(e, 0.0),
                },
                solution: EigenSolution {
                    eigenvalue: Complex64::new(e, 0.0),
                    eigenvector: vec![],
                    residual: 0.0,
                },
            })
            .collect();
        SweepResult {
            rows,
            breaks: vec![],
            l_max: 3,
            direction: FieldDirection::X,
            contour: EcsContour::default(),
            field_free: [(orbital, Complex64::new(e0, 0.0))].into_iter().collect(),
            started: SystemTime::now(),
            finished: SystemTime::now(),
        }
    }

    #[test]
    fn shift_report() {
        // dips to a minimum at 0.12 and turns positive between 0.16 and 0.18
        let e0 = -0.52134;
        let pts: Vec<(f64, f64)> = [
            (0.02, -0.52135),
            (0.04, -0.52165),
            (0.06, -0.52257),
            (0.08, -0.52463),
            (0.10, -0.52670),
            (0.12, -0.52743),
            (0.14, -0.52632),
            (0.16, -0.52319),
            (0.18, -0.51806),
            (0.20, -0.51123),
        ]
        .to_vec();
        let r = non_monotonic_shift_report(&fake_sweep(Orbital::B1_1, e0, &pts), Orbital::B1_1)
            .unwrap();
        assert_eq!(r.minimum_field, 0.12);
        assert_eq!(r.zero_crossing, Some((0.16, 0.18)));
        let mono: Vec<(f64, f64)> = (1..10)
            .map(|k| (0.02 * k as f64, e0 - 0.001 * k as f64))
            .collect();
        assert!(
            non_monotonic_shift_report(&fake_sweep(Orbital::B2_1, e0, &mono), Orbital::B2_1)
                .is_none()
        );
    }
}
