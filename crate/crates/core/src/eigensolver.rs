//! Shift-invert eigensolver for `H c = E S c`, orbital labelling and
//! continuation of resonance families.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::assembly::{FieldSpec, HamiltonianPair, Problem};
use crate::error::{Error, Result};
use crate::linalg::{
    dot_c, krylov_schur, norm2, BandLu, DenseMatrix, KrylovOptions, LinearOperator, Schur,
};

/// Imaginary parts below this magnitude are indistinguishable from zero.
pub const NA_THRESHOLD: f64 = 1e-12;
/// Largest accepted `‖H v - E S v‖ / ‖v‖`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Largest eigenvalue jump accepted between consecutive continuation steps.
pub const CONTINUATION_MAX_JUMP: f64 = 0.05;
/// Problems up to this size may fall back to a dense solve.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Orbital {
    A1_1,
    A1_2,
    B2_1,
    A1_3,
    B1_1,
}

impl Orbital {
    /// In ascending field-free energy.
    pub const ALL: [Orbital; 5] = [
        Orbital::A1_1,
        Orbital::A1_2,
        Orbital::B2_1,
        Orbital::A1_3,
        Orbital::B1_1,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Orbital::A1_1 => "1a1",
            Orbital::A1_2 => "2a1",
            Orbital::B2_1 => "1b2",
            Orbital::A1_3 => "3a1",
            Orbital::B1_1 => "1b1",
        }
    }

    /// Reflection parities `(x -> -x, y -> -y)` with the molecule in the y-z plane.
    pub fn parities(&self) -> (Parity, Parity) {
        match self {
            Orbital::B2_1 => (Parity::Even, Parity::Odd),
            Orbital::B1_1 => (Parity::Odd, Parity::Even),
            _ => (Parity::Even, Parity::Even),
        }
    }

    /// The reflection sector this orbital's family stays in under `field`.
    pub fn sector(&self, field: &FieldSpec) -> ParitySector {
        let (px, py) = self.parities();
        ParitySector {
            x: (field.f_x == 0.0).then_some(px),
            y: (field.f_y == 0.0).then_some(py),
        }
    }
}

impl fmt::Display for Orbital {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Orbital {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        Orbital::ALL
            .into_iter()
            .find(|o| o.as_str() == t)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown orbital '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// Restriction to eigenvectors of the reflections `x -> -x` and/or `y -> -y`.
///
/// In the `(l, m)` basis `x -> -x` maps `c_{l,m}` to `c_{l,-m}` and
/// `y -> -y` maps it to `(-1)^m c_{l,-m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct ParitySector {
    pub x: Option<Parity>,
    pub y: Option<Parity>,
}

impl ParitySector {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn is_any(&self) -> bool {
        self.x.is_none() && self.y.is_none()
    }

    /// Projects a channel-major vector onto the sector in place.
    pub fn project(&self, hp: &HamiltonianPair, v: &mut [Complex64]) {
        if self.is_any() {
            return;
        }
        let n = hp.n_radial();
        let chans = hp.channels();
        let partner: Vec<usize> = chans
            .iter()
            .map(|c| (c.l * c.l + c.l - c.m) as usize)
            .collect();
        for (reflect, parity) in [(0usize, self.x), (1usize, self.y)] {
            let Some(parity) = parity else { continue };
            let s = parity.sign();
            let src = v.to_vec();
            for (i, c) in chans.iter().enumerate() {
                let j = partner[i];
                let phase = if reflect == 1 && c.m % 2 != 0 {
                    -1.0
                } else {
                    1.0
                };
                for a in 0..n {
                    let mirrored = src[j * n + a] * (phase * s);
                    v[i * n + a] = 0.5 * (src[i * n + a] + mirrored);
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub eigenvalue: Complex64,
    /// Channel-major coefficients, unit Euclidean norm.
    pub eigenvector: Vec<Complex64>,
    /// `‖H v - E S v‖ / ‖v‖`
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub krylov: KrylovOptions,
    /// Perturbed-shift retries after a singular factorization.
    pub retries: usize,
    pub residual_tolerance: f64,
    /// Inverse-iteration sweeps spent on a pair above `residual_tolerance`.
    pub refinement_steps: usize,
    pub dense_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            krylov: KrylovOptions {
                subspace: 40,
                max_restarts: 300,
                tol: 1e-13,
            },
            retries: 3,
            residual_tolerance: RESIDUAL_TOLERANCE,
            refinement_steps: 4,
            dense_limit: DENSE_LIMIT,
        }
    }
}

/// Optional start vector and symmetry restriction of one solve.
#[derive(Debug, Clone, Default)]
pub struct SolveRequest<'a> {
    pub start: Option<&'a [Complex64]>,
    pub sector: ParitySector,
}

struct ShiftInvert<'a> {
    hp: &'a HamiltonianPair,
    lu: BandLu,
    sector: ParitySector,
}

impl ShiftInvert<'_> {
    fn solve_shifted(&self, rhs: &[Complex64], y: &mut [Complex64]) {
        let n = self.hp.n_radial();
        let nch = self.hp.channels().len();
        let mut b = vec![Complex64::new(0.0, 0.0); rhs.len()];
        for ch in 0..nch {
            for a in 0..n {
                b[a * nch + ch] = rhs[ch * n + a];
            }
        }
        self.lu.solve(&mut b);
        for ch in 0..nch {
            for a in 0..n {
                y[ch * n + a] = b[a * nch + ch];
            }
        }
    }
}

impl LinearOperator for ShiftInvert<'_> {
    fn dim(&self) -> usize {
        self.hp.dim()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let mut sx = vec![Complex64::new(0.0, 0.0); x.len()];
        self.hp.apply_s(x, &mut sx);
        self.solve_shifted(&sx, y);
        self.sector.project(self.hp, y);
    }
}

/// `‖H v - E S v‖ / ‖v‖`
pub fn residual(hp: &HamiltonianPair, e: Complex64, v: &[Complex64]) -> f64 {
    let mut hv = vec![Complex64::new(0.0, 0.0); v.len()];
    let mut sv = vec![Complex64::new(0.0, 0.0); v.len()];
    hp.apply_h(v, &mut hv);
    hp.apply_s(v, &mut sv);
    let r: f64 = hv
        .iter()
        .zip(&sv)
        .map(|(h, s)| (h - e * s).norm_sqr())
        .sum::<f64>()
        .sqrt();
    r / norm2(v)
}

fn factor_with_retries(
    hp: &HamiltonianPair,
    shift: Complex64,
    retries: usize,
) -> Result<(Complex64, BandLu)> {
    let mut sigma = shift;
    let mut last = None;
    for _ in 0..=retries {
        match BandLu::factor(hp.shifted_band(sigma)) {
            Ok(lu) => return Ok((sigma, lu)),
            Err(e @ Error::Singular { .. }) => {
                eprintln!("solver: singular factorization at shift {sigma}; perturbing");
                last = Some(e);
                sigma += Complex64::new(0.0, 1e-6);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or(Error::Singular {
        re: shift.re,
        im: shift.im,
    }))
}

/// The `k` eigenpairs nearest `shift`, ordered by distance to it.
pub fn solve_near(hp: &HamiltonianPair, shift: Complex64, k: usize) -> Result<Vec<EigenSolution>> {
    solve_near_with(
        hp,
        shift,
        k,
        &SolverOptions::default(),
        &SolveRequest::default(),
    )
}

pub fn solve_near_with(
    hp: &HamiltonianPair,
    shift: Complex64,
    k: usize,
    opts: &SolverOptions,
    req: &SolveRequest<'_>,
) -> Result<Vec<EigenSolution>> {
    if k == 0 {
        return Err(Error::InvalidArgument("need k >= 1 eigenpairs".into()));
    }
    let n = hp.dim();
    let (sigma, lu) = factor_with_retries(hp, shift, opts.retries)?;
    let op = ShiftInvert {
        hp,
        lu,
        sector: req.sector,
    };
    let mut start = match req.start {
        Some(s) if s.len() == n => {
            // Blend in a fixed random direction so a start that is itself an
            // eigenvector does not stall the Krylov space.
            let noise = crate::linalg::deterministic_vector(n, 5);
            let sn = norm2(s).max(f64::MIN_POSITIVE);
            s.iter()
                .zip(&noise)
                .map(|(a, b)| a / sn + b * 1e-3)
                .collect()
        }
        _ => crate::linalg::deterministic_vector(n, 1),
    };
    req.sector.project(hp, &mut start);
    if norm2(&start) == 0.0 {
        return Err(Error::InvalidArgument(
            "start vector vanishes in the requested symmetry sector".into(),
        ));
    }

    let pairs = match krylov_schur(&op, k, &start, &opts.krylov) {
        Ok(p) => p
            .into_iter()
            .map(|p| (sigma + p.value.inv(), p.vector))
            .collect::<Vec<_>>(),
        Err(e @ Error::NoConvergence { .. }) if n <= opts.dense_limit => {
            eprintln!("solver: {e}; falling back to a dense solve");
            dense_near(hp, shift, k, req.sector)?
        }
        Err(e) => return Err(e),
    };

    let mut out = Vec::with_capacity(pairs.len());
    for (mut e, mut v) in pairs {
        req.sector.project(hp, &mut v);
        normalize(&mut v);
        let mut res = residual(hp, e, &v);
        let mut steps = 0;
        while res > opts.residual_tolerance * 1e-2 && steps < opts.refinement_steps {
            let mut w = vec![Complex64::new(0.0, 0.0); n];
            op.apply(&v, &mut w);
            let theta = dot_c(&v, &w) / dot_c(&v, &v);
            normalize(&mut w);
            let e_new = sigma + theta.inv();
            let res_new = residual(hp, e_new, &w);
            if res_new >= res {
                break;
            }
            e = e_new;
            v = w;
            res = res_new;
            steps += 1;
        }
        if res > opts.residual_tolerance {
            return Err(Error::NoConvergence {
                iterations: steps,
                residual: res,
            });
        }
        out.push(EigenSolution {
            eigenvalue: e,
            eigenvector: v,
            residual: res,
        });
    }
    out.sort_by(|a, b| {
        (a.eigenvalue - shift)
            .norm()
            .partial_cmp(&(b.eigenvalue - shift).norm())
            .unwrap()
    });
    Ok(out)
}

fn normalize(v: &mut [Complex64]) {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
}

/// Full-spectrum solve of `S^{-1} H`; pairs nearest `shift` in the sector.
fn dense_near(
    hp: &HamiltonianPair,
    shift: Complex64,
    k: usize,
    sector: ParitySector,
) -> Result<Vec<(Complex64, Vec<Complex64>)>> {
    let h = DenseMatrix::from_rows(&hp.dense_h());
    let s = DenseMatrix::from_rows(&hp.dense_s());
    let a = s.solve(&h)?;
    let schur = Schur::new(&a)?;
    let ev = schur.eigenvalues();
    let mut order: Vec<usize> = (0..ev.len()).collect();
    order.sort_by(|&i, &j| {
        (ev[i] - shift)
            .norm()
            .partial_cmp(&(ev[j] - shift).norm())
            .unwrap()
    });
    let mut out = Vec::with_capacity(k);
    for idx in order {
        let mut v = schur.eigenvector(idx);
        let before = norm2(&v);
        sector.project(hp, &mut v);
        if norm2(&v) < 0.5 * before {
            continue;
        }
        out.push((ev[idx], v));
        if out.len() == k {
            break;
        }
    }
    Ok(out)
}

/// Labels the five lowest states by ascending energy.
pub fn classify_field_free(eigs: &[EigenSolution]) -> Result<BTreeMap<Orbital, EigenSolution>> {
    let mut bound: Vec<&EigenSolution> = eigs
        .iter()
        .filter(|e| e.eigenvalue.re < 0.0 && e.eigenvalue.im.abs() < 1e-8)
        .collect();
    if bound.len() < Orbital::ALL.len() {
        return Err(Error::TooFewBoundStates {
            found: bound.len(),
            needed: Orbital::ALL.len(),
        });
    }
    bound.sort_by(|a, b| a.eigenvalue.re.partial_cmp(&b.eigenvalue.re).unwrap());
    bound.dedup_by(|a, b| (a.eigenvalue - b.eigenvalue).norm() < 1e-9);
    if bound.len() < Orbital::ALL.len() {
        return Err(Error::TooFewBoundStates {
            found: bound.len(),
            needed: Orbital::ALL.len(),
        });
    }
    Ok(Orbital::ALL
        .into_iter()
        .zip(bound)
        .map(|(o, e)| (o, e.clone()))
        .collect())
}

/// Picks the candidate closest to `prev`; equal distances go to the larger
/// eigenvector overlap.
pub fn continue_resonance(
    prev: &EigenSolution,
    candidates: &[EigenSolution],
) -> Result<EigenSolution> {
    let overlap = |c: &EigenSolution| {
        if c.eigenvector.len() == prev.eigenvector.len() {
            dot_c(&prev.eigenvector, &c.eigenvector).norm()
        } else {
            0.0
        }
    };
    let best = candidates
        .iter()
        .min_by(|a, b| {
            let da = (a.eigenvalue - prev.eigenvalue).norm();
            let db = (b.eigenvalue - prev.eigenvalue).norm();
            if (da - db).abs() <= 1e-14 * da.max(db).max(1.0) {
                overlap(b).partial_cmp(&overlap(a)).unwrap()
            } else {
                da.partial_cmp(&db).unwrap()
            }
        })
        .ok_or_else(|| Error::InvalidArgument("no continuation candidates".into()))?;
    let distance = (best.eigenvalue - prev.eigenvalue).norm();
    if distance > CONTINUATION_MAX_JUMP {
        return Err(Error::ContinuationBreak { distance });
    }
    Ok(best.clone())
}

/// `-Im E`, or `None` when it is below resolution or of the wrong sign.
pub fn half_width_or_na(im: f64) -> Option<f64> {
    if im.abs() < NA_THRESHOLD || im > 0.0 {
        None
    } else {
        Some(-im)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resonance {
    pub orbital: Orbital,
    pub field: FieldSpec,
    pub l_max: i32,
    pub eigenvalue: Complex64,
}

impl Resonance {
    pub fn position(&self) -> f64 {
        self.eigenvalue.re
    }

    pub fn half_width(&self) -> Option<f64> {
        half_width_or_na(self.eigenvalue.im)
    }

    /// `Γ = 2 × half-width`
    pub fn width(&self) -> Option<f64> {
        self.half_width().map(|h| 2.0 * h)
    }

    pub fn na_flag(&self) -> bool {
        self.half_width().is_none()
    }
}

/// Field-free orbitals on the problem's contour.
///
/// The five lowest states are found on the unscaled contour, where the
/// problem is Hermitian and its spectrum is bounded below by
/// `-(Σ Z)^2 / 2`, so a shift beneath that bound reaches them first.
/// With scaling the rotated continuum sweeps close to the negative real
/// axis and nearest-to-shift is no longer a safe way to find the lowest
/// states. Each state is then re-solved on the scaled contour.
pub fn field_free_orbitals(
    problem: &Problem,
    opts: &SolverOptions,
) -> Result<BTreeMap<Orbital, EigenSolution>> {
    let unscaled = if problem.spec().contour.xi == 0.0 {
        problem.clone()
    } else {
        problem.with_xi(0.0)?
    };
    let hp0 = unscaled.hamiltonian(&FieldSpec::none());
    let z = problem.geometry().total_bare_charge();
    let floor = Complex64::new(-0.5 * z * z - 1.0, 0.0);
    let mut lowest_opts = opts.clone();
    lowest_opts.krylov.subspace = lowest_opts.krylov.subspace.max(120);
    lowest_opts.krylov.max_restarts = lowest_opts.krylov.max_restarts.max(1000);
    let lowest = solve_near_with(
        &hp0,
        floor,
        Orbital::ALL.len() + 3,
        &lowest_opts,
        &SolveRequest::default(),
    )?;
    let labelled = classify_field_free(&lowest)?;

    let hp = problem.hamiltonian(&FieldSpec::none());
    let mut out = BTreeMap::new();
    for (orbital, sol) in labelled {
        let sector = orbital.sector(&FieldSpec::none());
        let mut v = sol.eigenvector.clone();
        let before = norm2(&v);
        sector.project(&hp, &mut v);
        if norm2(&v) < 0.9 * before {
            eprintln!(
                "labelling: {orbital} at {:.8} has the wrong reflection symmetry",
                sol.eigenvalue.re
            );
        }
        let req = SolveRequest {
            start: Some(&sol.eigenvector),
            sector,
        };
        let refined = solve_near_with(&hp, sol.eigenvalue, 1, opts, &req)?;
        out.insert(orbital, refined.into_iter().next().expect("k = 1"));
    }
    Ok(out)
}
