//! `key = value` run configuration.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use stark_core::assembly::{FieldDirection, FieldSpec, ProblemSpec};
use stark_core::density::{GridSpec, Plane};
use stark_core::eigensolver::{Orbital, SolverOptions};
use stark_core::potential::GeometryParams;
use stark_core::radial_fem::EcsContour;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Syntax { line: usize, text: String },

    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: bad value '{value}' for {key}: {reason}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },

    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

/// Which computation a run performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Validate,
    Solve,
    Sweep,
    Orient,
    Density,
    DirectSum,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Validate => "validate",
            Mode::Solve => "solve",
            Mode::Sweep => "sweep",
            Mode::Orient => "orient",
            Mode::Density => "density",
            Mode::DirectSum => "direct-sum",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "validate" => Mode::Validate,
            "solve" => Mode::Solve,
            "sweep" => Mode::Sweep,
            "orient" => Mode::Orient,
            "density" => Mode::Density,
            "direct-sum" | "direct_sum" => Mode::DirectSum,
            other => return Err(format!("unknown mode '{other}'")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub l_max: i32,
    pub elements: usize,
    pub order: usize,
    pub r_s: f64,
    pub xi: f64,
    pub r_max: f64,
    pub geometry: GeometryParams,
    pub field_direction: FieldDirection,
    pub field_magnitude: f64,
    pub field_fx: f64,
    pub field_fz: f64,
    pub sweep_start: f64,
    pub sweep_stop: f64,
    pub sweep_step: f64,
    pub orbitals: Vec<Orbital>,
    pub orient_magnitude: f64,
    /// `(f_z, f_x)` pairs.
    pub orient_fractions: Vec<(f64, f64)>,
    pub density_plane: Plane,
    pub density_extent: f64,
    pub density_samples: usize,
    pub density_orbital: Orbital,
    /// `-` writes to stdout.
    pub output_table: String,
    pub output_density: String,
    /// 0 lets the thread pool pick.
    pub threads: usize,
    pub solver_subspace: usize,
    pub solver_max_restarts: usize,
    pub solver_tol: f64,
    pub solver_residual_tolerance: f64,
    pub solver_retries: usize,
    pub solver_refinement_steps: usize,
}

/// The orientation grid: f_z from -1 to 1 in steps of 0.1 with
/// f_x = 1 - |f_z|.
pub fn default_fractions() -> Vec<(f64, f64)> {
    (-10i32..=10)
        .map(|k| {
            let fz = k as f64 / 10.0;
            (fz, (10 - k.abs()) as f64 / 10.0)
        })
        .collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverOptions::default();
        let contour = EcsContour::default();
        let problem = ProblemSpec::default();
        Self {
            mode: Mode::Solve,
            l_max: problem.l_max,
            elements: problem.elements,
            order: problem.order,
            r_s: contour.r_s,
            xi: contour.xi,
            r_max: contour.r_max,
            geometry: GeometryParams::default(),
            field_direction: FieldDirection::X,
            field_magnitude: 0.1,
            field_fx: 1.0,
            field_fz: 0.0,
            sweep_start: 0.02,
            sweep_stop: 0.30,
            sweep_step: 0.02,
            orbitals: vec![Orbital::B1_1, Orbital::A1_3, Orbital::B2_1],
            orient_magnitude: 0.1,
            orient_fractions: default_fractions(),
            density_plane: Plane::Yz,
            density_extent: stark_core::density::DEFAULT_EXTENT,
            density_samples: stark_core::density::DEFAULT_SAMPLES,
            density_orbital: Orbital::B1_1,
            output_table: "-".into(),
            output_density: "-".into(),
            threads: 0,
            solver_subspace: solver.krylov.subspace,
            solver_max_restarts: solver.krylov.max_restarts,
            solver_tol: solver.krylov.tol,
            solver_residual_tolerance: solver.residual_tolerance,
            solver_retries: solver.retries,
            solver_refinement_steps: solver.refinement_steps,
        }
    }
}

/// Every recognised key, in echo order.
pub const KEYS: &[&str] = &[
    "mode",
    "l_max",
    "elements",
    "order",
    "r_s",
    "xi",
    "r_max",
    "bond_length",
    "opening_angle_deg",
    "Z_O",
    "N_O",
    "alpha_O",
    "Z_H",
    "N_H",
    "alpha_H",
    "field.direction",
    "field.magnitude",
    "field.fx",
    "field.fz",
    "sweep.start",
    "sweep.stop",
    "sweep.step",
    "orbitals",
    "orient.magnitude",
    "orient.fractions",
    "density.plane",
    "density.extent",
    "density.samples",
    "density.orbital",
    "output.table",
    "output.density",
    "threads",
    "solver.subspace",
    "solver.max_restarts",
    "solver.tol",
    "solver.residual_tolerance",
    "solver.retries",
    "solver.refinement_steps",
];

fn num<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| e.to_string())
}

fn finite(value: &str) -> Result<f64, String> {
    let v: f64 = num(value)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("must be finite".into())
    }
}

fn positive(value: &str) -> Result<f64, String> {
    let v = finite(value)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err("must be > 0".into())
    }
}

fn non_negative(value: &str) -> Result<f64, String> {
    let v = finite(value)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err("must be >= 0".into())
    }
}

fn at_least(value: &str, min: usize) -> Result<usize, String> {
    let v: usize = num(value)?;
    if v >= min {
        Ok(v)
    } else {
        Err(format!("must be >= {min}"))
    }
}

fn parse_orbitals(value: &str) -> Result<Vec<Orbital>, String> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let o: Orbital = part.parse().map_err(|e: stark_core::Error| e.to_string())?;
        if !out.contains(&o) {
            out.push(o);
        }
    }
    if out.is_empty() {
        return Err("no orbitals given".into());
    }
    Ok(out)
}

fn parse_fractions(value: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (fz, fx) = part
            .split_once(':')
            .ok_or_else(|| format!("'{part}' is not an fz:fx pair"))?;
        let fz = finite(fz.trim())?;
        let fx = finite(fx.trim())?;
        if fx < 0.0 {
            return Err(format!("f_x must be >= 0 in '{part}'"));
        }
        if fz == 0.0 && fx == 0.0 {
            return Err("(0, 0) gives no direction".into());
        }
        out.push((fz, fx));
    }
    if out.is_empty() {
        return Err("no fractions given".into());
    }
    Ok(out)
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let bad = |reason: String| ConfigError::BadValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
            reason,
        };
        let g = &mut self.geometry;
        match key {
            "mode" => self.mode = value.parse().map_err(bad)?,
            "l_max" => {
                let l: i32 = num(value).map_err(bad)?;
                if !(0..=12).contains(&l) {
                    return Err(bad("must lie in 0..=12".into()));
                }
                self.l_max = l;
            }
            "elements" => self.elements = at_least(value, 5).map_err(bad)?,
            "order" => self.order = at_least(value, 3).map_err(bad)?,
            "r_s" => self.r_s = positive(value).map_err(bad)?,
            "xi" => {
                let xi = positive(value).map_err(bad)?;
                if xi >= std::f64::consts::FRAC_PI_2 {
                    return Err(bad("must be below π/2".into()));
                }
                self.xi = xi;
            }
            "r_max" => self.r_max = positive(value).map_err(bad)?,
            "bond_length" => g.bond_length = non_negative(value).map_err(bad)?,
            "opening_angle_deg" => g.opening_angle_deg = finite(value).map_err(bad)?,
            "Z_O" => g.z_o = non_negative(value).map_err(bad)?,
            "N_O" => g.n_o = non_negative(value).map_err(bad)?,
            "alpha_O" => g.alpha_o = positive(value).map_err(bad)?,
            "Z_H" => g.z_h = non_negative(value).map_err(bad)?,
            "N_H" => g.n_h = non_negative(value).map_err(bad)?,
            "alpha_H" => g.alpha_h = positive(value).map_err(bad)?,
            "field.direction" => {
                self.field_direction = value
                    .parse()
                    .map_err(|e: stark_core::Error| bad(e.to_string()))?
            }
            "field.magnitude" => self.field_magnitude = finite(value).map_err(bad)?,
            "field.fx" => self.field_fx = non_negative(value).map_err(bad)?,
            "field.fz" => self.field_fz = finite(value).map_err(bad)?,
            "sweep.start" => self.sweep_start = finite(value).map_err(bad)?,
            "sweep.stop" => self.sweep_stop = finite(value).map_err(bad)?,
            "sweep.step" => self.sweep_step = positive(value).map_err(bad)?,
            "orbitals" => self.orbitals = parse_orbitals(value).map_err(bad)?,
            "orient.magnitude" => self.orient_magnitude = positive(value).map_err(bad)?,
            "orient.fractions" => self.orient_fractions = parse_fractions(value).map_err(bad)?,
            "density.plane" => {
                self.density_plane = value
                    .parse()
                    .map_err(|e: stark_core::Error| bad(e.to_string()))?
            }
            "density.extent" => self.density_extent = positive(value).map_err(bad)?,
            "density.samples" => self.density_samples = at_least(value, 1).map_err(bad)?,
            "density.orbital" => {
                self.density_orbital = value
                    .parse()
                    .map_err(|e: stark_core::Error| bad(e.to_string()))?
            }
            "output.table" => self.output_table = value.to_string(),
            "output.density" => self.output_density = value.to_string(),
            "threads" => self.threads = num(value).map_err(bad)?,
            "solver.subspace" => self.solver_subspace = at_least(value, 4).map_err(bad)?,
            "solver.max_restarts" => self.solver_max_restarts = at_least(value, 1).map_err(bad)?,
            "solver.tol" => self.solver_tol = positive(value).map_err(bad)?,
            "solver.residual_tolerance" => {
                self.solver_residual_tolerance = positive(value).map_err(bad)?
            }
            "solver.retries" => self.solver_retries = num(value).map_err(bad)?,
            "solver.refinement_steps" => self.solver_refinement_steps = num(value).map_err(bad)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Current value of `key` as it would be written in a config file.
    pub fn get(&self, key: &str) -> Option<String> {
        let g = &self.geometry;
        let list = |v: &[Orbital]| v.iter().map(|o| o.as_str()).collect::<Vec<_>>().join(",");
        Some(match key {
            "mode" => self.mode.as_str().into(),
            "l_max" => self.l_max.to_string(),
            "elements" => self.elements.to_string(),
            "order" => self.order.to_string(),
            "r_s" => self.r_s.to_string(),
            "xi" => self.xi.to_string(),
            "r_max" => self.r_max.to_string(),
            "bond_length" => g.bond_length.to_string(),
            "opening_angle_deg" => g.opening_angle_deg.to_string(),
            "Z_O" => g.z_o.to_string(),
            "N_O" => g.n_o.to_string(),
            "alpha_O" => g.alpha_o.to_string(),
            "Z_H" => g.z_h.to_string(),
            "N_H" => g.n_h.to_string(),
            "alpha_H" => g.alpha_h.to_string(),
            "field.direction" => self.field_direction.as_str().into(),
            "field.magnitude" => self.field_magnitude.to_string(),
            "field.fx" => self.field_fx.to_string(),
            "field.fz" => self.field_fz.to_string(),
            "sweep.start" => self.sweep_start.to_string(),
            "sweep.stop" => self.sweep_stop.to_string(),
            "sweep.step" => self.sweep_step.to_string(),
            "orbitals" => list(&self.orbitals),
            "orient.magnitude" => self.orient_magnitude.to_string(),
            "orient.fractions" => self
                .orient_fractions
                .iter()
                .map(|(fz, fx)| format!("{fz}:{fx}"))
                .collect::<Vec<_>>()
                .join(","),
            "density.plane" => self.density_plane.as_str().into(),
            "density.extent" => self.density_extent.to_string(),
            "density.samples" => self.density_samples.to_string(),
            "density.orbital" => self.density_orbital.as_str().into(),
            "output.table" => self.output_table.clone(),
            "output.density" => self.output_density.clone(),
            "threads" => self.threads.to_string(),
            "solver.subspace" => self.solver_subspace.to_string(),
            "solver.max_restarts" => self.solver_max_restarts.to_string(),
            "solver.tol" => self.solver_tol.to_string(),
            "solver.residual_tolerance" => self.solver_residual_tolerance.to_string(),
            "solver.retries" => self.solver_retries.to_string(),
            "solver.refinement_steps" => self.solver_refinement_steps.to_string(),
            _ => return None,
        })
    }

    /// The full effective configuration, parseable by [`parse_config`].
    pub fn echo(&self) -> String {
        let mut s = String::from("# effective configuration\n");
        for key in KEYS {
            let _ = writeln!(s, "{key} = {}", self.get(key).expect("listed key"));
        }
        s
    }

    /// Checks that involve more than one key. `line` is reported on failure.
    pub fn check(&self, line: usize) -> Result<(), ConfigError> {
        let fail = |message: String| Err(ConfigError::Invalid { line, message });
        if self.r_s >= self.r_max {
            return fail(format!(
                "r_s = {} must be smaller than r_max = {}",
                self.r_s, self.r_max
            ));
        }
        if self.sweep_stop < self.sweep_start {
            return fail(format!(
                "sweep.stop = {} lies below sweep.start = {}",
                self.sweep_stop, self.sweep_start
            ));
        }
        if self.field_direction == FieldDirection::XzPlane
            && self.field_fx == 0.0
            && self.field_fz == 0.0
        {
            return fail("field.fx and field.fz are both zero".into());
        }
        Ok(())
    }

    pub fn contour(&self) -> EcsContour {
        EcsContour {
            r_s: self.r_s,
            xi: self.xi,
            r_max: self.r_max,
        }
    }

    pub fn problem_spec(&self) -> ProblemSpec {
        ProblemSpec {
            geometry: self.geometry,
            contour: self.contour(),
            elements: self.elements,
            order: self.order,
            l_max: self.l_max,
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        let mut o = SolverOptions::default();
        o.krylov.subspace = self.solver_subspace;
        o.krylov.max_restarts = self.solver_max_restarts;
        o.krylov.tol = self.solver_tol;
        o.residual_tolerance = self.solver_residual_tolerance;
        o.retries = self.solver_retries;
        o.refinement_steps = self.solver_refinement_steps;
        o
    }

    /// The configured single field point.
    pub fn field(&self) -> stark_core::Result<FieldSpec> {
        match self.field_direction {
            FieldDirection::XzPlane => {
                let norm = self.field_fz.hypot(self.field_fx);
                FieldSpec::xz_plane(self.field_magnitude / norm, self.field_fx, self.field_fz)
            }
            d => Ok(FieldSpec::along(d, self.field_magnitude)),
        }
    }

    /// `start, start + step, ..., stop`, rounded to suppress drift.
    pub fn sweep_points(&self) -> Vec<f64> {
        let n = ((self.sweep_stop - self.sweep_start) / self.sweep_step + 1e-9).floor() as i64;
        (0..=n)
            .map(|k| {
                let f = self.sweep_start + k as f64 * self.sweep_step;
                (f * 1e10).round() / 1e10
            })
            .collect()
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            plane: self.density_plane,
            extent: self.density_extent,
            samples: self.density_samples,
        }
    }
}

/// Splits a `key = value` line; `None` for blank and comment lines.
fn split_line(raw: &str, line: usize) -> Result<Option<(String, String)>, ConfigError> {
    let text = raw.split('#').next().unwrap_or("").trim();
    if text.is_empty() {
        return Ok(None);
    }
    let (k, v) = text.split_once('=').ok_or_else(|| ConfigError::Syntax {
        line,
        text: text.to_string(),
    })?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return Err(ConfigError::Syntax {
            line,
            text: text.to_string(),
        });
    }
    Ok(Some((k.to_string(), v.to_string())))
}

/// Parses a config file on top of the defaults, then applies the
/// `key=value` overrides in order.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut last_line = HashMap::new();
    let mut last = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if let Some((k, v)) = split_line(raw, line)? {
            cfg.set(&k, &v, line)?;
            last_line.insert(k, line);
            last = line;
        }
    }
    // Overrides are numbered after the file's last line.
    let base = text.lines().count();
    for (j, o) in overrides.iter().enumerate() {
        let line = base + j + 1;
        if let Some((k, v)) = split_line(o, line)? {
            cfg.set(&k, &v, line)?;
            last_line.insert(k, line);
            last = line;
        }
    }
    let blame = [
        "r_s",
        "r_max",
        "sweep.start",
        "sweep.stop",
        "field.fx",
        "field.fz",
    ]
    .iter()
    .filter_map(|k| last_line.get(*k).copied())
    .max()
    .unwrap_or(last);
    cfg.check(blame)?;
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(text, &[])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.l_max, 3);
        assert_eq!(cfg.contour(), EcsContour::default());
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.set("orient.fractions", "0.5:0.5, -1:0", 1).unwrap();
        cfg.set("field.direction", "xz", 2).unwrap();
        let again = parse_config(&cfg.echo()).unwrap();
        assert_eq!(again, cfg);
        for key in KEYS {
            assert!(cfg.echo().contains(&format!("\n{key} = ")), "{key}");
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("l_max = 4\n\n# c\nxi = -1\n").unwrap_err();
        assert!(matches!(e, ConfigError::BadValue { line: 4, .. }), "{e}");
        let e = parse_config("bogus = 1").unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey { line: 1, .. }));
        let e = parse_config("r_s = 30\nl_max=3").unwrap_err();
        assert!(matches!(e, ConfigError::Invalid { line: 1, .. }), "{e}");
        let e = parse_config("just words").unwrap_err();
        assert!(matches!(e, ConfigError::Syntax { line: 1, .. }));
        assert!(parse_config("xi = 0").is_err());
    }

    #[test]
    fn sweep_points_are_clean() {
        let cfg = RunConfig::default();
        let p = cfg.sweep_points();
        assert_eq!(p.len(), 15);
        assert_eq!(p[4], 0.1);
        assert_eq!(p[14], 0.3);
        let cfg = parse_config("sweep.start = -0.30\nsweep.stop = 0.30").unwrap();
        let p = cfg.sweep_points();
        assert_eq!(p.len(), 31);
        assert_eq!(p[15], 0.0);
    }

    #[test]
    fn overrides_win() {
        let cfg =
            parse_config_with("l_max = 4", &["l_max=3".into(), "orbitals = 1b1".into()]).unwrap();
        assert_eq!(cfg.l_max, 3);
        assert_eq!(cfg.orbitals, vec![Orbital::B1_1]);
    }
}
