//! Table, grid and report formats.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use stark_core::assembly::{FieldDirection, FieldSpec};
use stark_core::density::PlaneGrid;
use stark_core::eigensolver::{Orbital, Resonance};
use stark_core::sweep::{direct_sum, signed_strength, DirectSum, SweepResult};
use thiserror::Error;

pub const TABLE_HEADER: &str = "orbital,direction,F,fz,fx,angle_rad,re_E,half_width,na_flag,l_max";

#[derive(Debug, Error)]
pub enum TableError {
    #[error("missing or wrong header (expected '{TABLE_HEADER}')")]
    Header,
    #[error("row {row}: {detail}")]
    Row { row: usize, detail: String },
}

/// One CSV record.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub orbital: Orbital,
    pub direction: FieldDirection,
    /// Signed strength along the axis, or the magnitude for in-plane fields.
    pub f: f64,
    pub fz: f64,
    pub fx: f64,
    pub angle_rad: f64,
    pub re_e: f64,
    /// `None` is printed as `NA`.
    pub half_width: Option<f64>,
    pub l_max: i32,
}

impl TableRow {
    pub fn from_resonance(r: &Resonance) -> Self {
        let (fz, fx) = fractions(&r.field);
        Self {
            orbital: r.orbital,
            direction: r.field.direction,
            f: signed_strength(&r.field),
            fz,
            fx,
            angle_rad: r.field.angle(),
            re_e: r.position(),
            half_width: r.half_width(),
            l_max: r.l_max,
        }
    }

    pub fn na_flag(&self) -> bool {
        self.half_width.is_none()
    }
}

fn fractions(field: &FieldSpec) -> (f64, f64) {
    match field.direction {
        FieldDirection::XzPlane => (field.frac_z, field.frac_x),
        FieldDirection::X => (0.0, 1.0),
        FieldDirection::Y => (0.0, 0.0),
        FieldDirection::Z => (1.0, 0.0),
    }
}

pub fn sweep_rows(sweep: &SweepResult) -> Vec<TableRow> {
    sweep
        .rows
        .iter()
        .map(|r| TableRow::from_resonance(&r.resonance))
        .collect()
}

/// Seven significant digits.
fn sig7(v: f64) -> String {
    format!("{v:.6e}")
}

pub fn format_table(rows: &[TableRow]) -> String {
    let mut s = String::with_capacity(96 * (rows.len() + 1));
    s.push_str(TABLE_HEADER);
    s.push('\n');
    for r in rows {
        let hw = r.half_width.map_or_else(|| "NA".to_string(), sig7);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.orbital,
            r.direction.as_str(),
            r.f,
            r.fz,
            r.fx,
            sig7(r.angle_rad),
            sig7(r.re_e),
            hw,
            if r.na_flag() { 1 } else { 0 },
            r.l_max
        );
    }
    s
}

pub fn emit_table<W: Write>(rows: &[TableRow], mut out: W) -> io::Result<()> {
    out.write_all(format_table(rows).as_bytes())
}

pub fn parse_table(text: &str) -> Result<Vec<TableRow>, TableError> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(TABLE_HEADER) {
        return Err(TableError::Header);
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |detail: String| TableError::Row { row, detail };
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 10 {
            return Err(err(format!("expected 10 columns, found {}", cols.len())));
        }
        let float = |k: usize| {
            cols[k]
                .parse::<f64>()
                .map_err(|e| err(format!("column {}: {e}", k + 1)))
        };
        let half_width = match cols[7] {
            "NA" => None,
            _ => Some(float(7)?),
        };
        let na = match cols[8] {
            "0" => false,
            "1" => true,
            other => return Err(err(format!("na_flag '{other}' is not 0 or 1"))),
        };
        if na != half_width.is_none() {
            return Err(err("na_flag disagrees with the half_width column".into()));
        }
        out.push(TableRow {
            orbital: cols[0]
                .parse()
                .map_err(|e: stark_core::Error| err(e.to_string()))?,
            direction: cols[1]
                .parse()
                .map_err(|e: stark_core::Error| err(e.to_string()))?,
            f: float(2)?,
            fz: float(3)?,
            fx: float(4)?,
            angle_rad: float(5)?,
            re_e: float(6)?,
            half_width,
            l_max: cols[9].parse().map_err(|e| err(format!("l_max: {e}")))?,
        });
    }
    Ok(out)
}

/// Grid file: `#` header lines, then one `u v density` row per point.
pub fn emit_density<W: Write>(
    grid: &PlaneGrid,
    meta: &[(&str, String)],
    mut out: W,
) -> io::Result<()> {
    let spec = &grid.spec;
    let mut head = String::new();
    let _ = writeln!(head, "# plane = {}", spec.plane);
    let _ = writeln!(head, "# extent = {}", spec.extent);
    let _ = writeln!(head, "# samples = {}", spec.samples);
    for (k, v) in meta {
        let _ = writeln!(head, "# {k} = {v}");
    }
    let levels: Vec<String> = grid.contour_levels.iter().map(|l| format!("{l}")).collect();
    let _ = writeln!(head, "# contour_levels = {}", levels.join(" "));
    for (name, p) in &grid.nuclei {
        let _ = writeln!(head, "# nucleus {name} {:.6} {:.6}", p[0], p[1]);
    }
    let _ = writeln!(head, "# masked = {}", grid.masked);
    let _ = writeln!(head, "# u v density");
    out.write_all(head.as_bytes())?;
    let mut buf = String::with_capacity(40 * spec.samples);
    for i in 0..spec.samples {
        buf.clear();
        let u = spec.coordinate(i);
        for j in 0..spec.samples {
            let v = spec.coordinate(j);
            let _ = writeln!(buf, "{u:.6} {v:.6} {:.6e}", grid.value(i, j));
        }
        out.write_all(buf.as_bytes())?;
    }
    Ok(())
}

/// Layout of one supplementary table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmLayout {
    Axis {
        orbital: Orbital,
        direction: FieldDirection,
        l_max: i32,
    },
    /// `negative` selects f_z <= 0.
    Orientation {
        orbital: Orbital,
        negative: bool,
    },
    DirectSum,
}

pub fn sm_layout(n: u32) -> Option<SmLayout> {
    use FieldDirection::*;
    use Orbital::*;
    let axis = |orbital, direction, l_max| SmLayout::Axis {
        orbital,
        direction,
        l_max,
    };
    Some(match n {
        1 => axis(B1_1, X, 3),
        2 => axis(A1_3, X, 3),
        3 => axis(B2_1, X, 3),
        4 => SmLayout::Orientation {
            orbital: B1_1,
            negative: false,
        },
        5 => SmLayout::Orientation {
            orbital: A1_3,
            negative: false,
        },
        6 => SmLayout::Orientation {
            orbital: B1_1,
            negative: true,
        },
        7 => SmLayout::Orientation {
            orbital: A1_3,
            negative: true,
        },
        8 => axis(B1_1, Y, 3),
        9 => axis(A1_3, Y, 3),
        10 => axis(B2_1, Y, 3),
        11 => SmLayout::DirectSum,
        12 => axis(B1_1, Z, 4),
        13 => axis(A1_3, Z, 4),
        14 => axis(B2_1, Z, 4),
        _ => return None,
    })
}

impl SmLayout {
    /// Subcommand and config assignments that produce this table.
    pub fn preset(&self) -> (&'static str, Vec<(&'static str, String)>) {
        match *self {
            SmLayout::Axis {
                orbital,
                direction,
                l_max,
            } => {
                let start = if direction == FieldDirection::Z {
                    "-0.3"
                } else {
                    "0.02"
                };
                (
                    "sweep",
                    vec![
                        ("orbitals", orbital.as_str().into()),
                        ("field.direction", direction.as_str().into()),
                        ("l_max", l_max.to_string()),
                        ("sweep.start", start.into()),
                        ("sweep.stop", "0.3".into()),
                        ("sweep.step", "0.02".into()),
                    ],
                )
            }
            SmLayout::Orientation { orbital, negative } => {
                let fr: Vec<String> = (0..=10)
                    .map(|k| {
                        let fz = if negative { -(k as f64) } else { k as f64 } / 10.0 + 0.0;
                        format!("{fz}:{}", (10 - k) as f64 / 10.0)
                    })
                    .collect();
                (
                    "orient",
                    vec![
                        ("orbitals", orbital.as_str().into()),
                        ("l_max", "3".into()),
                        ("orient.magnitude", "0.1".into()),
                        ("orient.fractions", fr.join(",")),
                    ],
                )
            }
            SmLayout::DirectSum => (
                "direct-sum",
                vec![
                    ("l_max", "3".into()),
                    ("sweep.start", "0.04".into()),
                    ("sweep.stop", "0.14".into()),
                    ("sweep.step", "0.02".into()),
                ],
            ),
        }
    }
}

fn im_text(r: &TableRow) -> String {
    match r.half_width {
        Some(h) => format!("{:.6e}", -h),
        None => "NA".into(),
    }
}

/// Plain-text rendering in the supplementary tables' row order.
pub fn format_sm_table(layout: &SmLayout, rows: &[TableRow]) -> String {
    let mut s = String::new();
    match *layout {
        SmLayout::Axis {
            orbital, direction, ..
        } => {
            let mut sel: Vec<&TableRow> = rows
                .iter()
                .filter(|r| r.orbital == orbital && r.direction == direction)
                .collect();
            sel.sort_by(|a, b| a.f.partial_cmp(&b.f).unwrap());
            let _ = writeln!(s, "MO: {orbital}");
            let _ = writeln!(
                s,
                "{:>8} {:>16} {:>16}",
                format!("F_{}", direction.as_str()),
                "Re",
                "Im"
            );
            for r in sel {
                let _ = writeln!(s, "{:>8.2} {:>16.8} {:>16}", r.f, r.re_e, im_text(r));
            }
        }
        SmLayout::Orientation { orbital, negative } => {
            let mut sel: Vec<&TableRow> = rows
                .iter()
                .filter(|r| {
                    r.orbital == orbital
                        && r.direction == FieldDirection::XzPlane
                        && if negative { r.fz <= 0.0 } else { r.fz >= 0.0 }
                })
                .collect();
            sel.sort_by(|a, b| a.fz.abs().partial_cmp(&b.fz.abs()).unwrap());
            let _ = writeln!(s, "MO: {orbital}");
            let _ = writeln!(
                s,
                "{:>12} {:>14} {:>16} {:>16}",
                "(f_z, f_x)", "arctan(fz/fx)", "Re", "Im"
            );
            for r in sel {
                let _ = writeln!(
                    s,
                    "{:>12} {:>14.6} {:>16.8} {:>16}",
                    format!("({:.1}, {:.1})", r.fz, r.fx),
                    r.angle_rad,
                    r.re_e,
                    im_text(r)
                );
            }
        }
        SmLayout::DirectSum => {
            let _ = writeln!(
                s,
                "direct-sum tables are rendered by format_direct_sum_table"
            );
        }
    }
    s
}

/// Direct sums at every field point of a five-orbital sweep, in field order.
pub fn direct_sums(sweep: &SweepResult) -> stark_core::Result<Vec<(f64, DirectSum)>> {
    let e0: BTreeMap<Orbital, f64> = sweep.field_free.iter().map(|(o, e)| (*o, e.re)).collect();
    let mut by_field: BTreeMap<i64, BTreeMap<Orbital, Resonance>> = BTreeMap::new();
    for row in &sweep.rows {
        let key = (signed_strength(row.field()) * 1e10).round() as i64;
        by_field
            .entry(key)
            .or_default()
            .insert(row.orbital, row.resonance.clone());
    }
    let mut out = Vec::new();
    for (key, at) in by_field {
        if at.len() == Orbital::ALL.len() {
            out.push((key as f64 / 1e10, direct_sum(&at, &e0)?));
        }
    }
    Ok(out)
}

pub const DS_HEADER: &str = "direction,F,re_shift,gamma,included";

pub fn format_direct_sums(direction: FieldDirection, sums: &[(f64, DirectSum)]) -> String {
    let mut s = String::from(DS_HEADER);
    s.push('\n');
    for (f, ds) in sums {
        let inc: Vec<&str> = ds.included.iter().map(|o| o.as_str()).collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            direction.as_str(),
            f,
            sig7(ds.re_shift),
            sig7(ds.gamma),
            inc.join(";")
        );
    }
    s
}

/// Shifts and full widths per orbital with the DS(2) rows, one column per
/// field point.
pub fn format_direct_sum_table(sweep: &SweepResult) -> stark_core::Result<String> {
    let sums = direct_sums(sweep)?;
    let fields: Vec<f64> = sums.iter().map(|(f, _)| *f).collect();
    let axis = sweep.direction.as_str();
    let mut s = String::new();
    let header = |s: &mut String, title: &str| {
        let _ = writeln!(s, "{title}");
        let _ = write!(s, "{:<8}", format!("F_{axis}"));
        for f in &fields {
            let _ = write!(s, " {f:>10.2}");
        }
        s.push('\n');
    };
    let cell = |o: Orbital, f: f64| {
        sweep.at(o, f).map(|r| {
            (
                r.resonance.position() - sweep.field_free[&o].re,
                r.resonance.width(),
            )
        })
    };
    header(&mut s, "Re dE");
    for o in Orbital::ALL {
        let _ = write!(s, "{:<8}", o.as_str());
        for &f in &fields {
            match cell(o, f) {
                Some((d, _)) => {
                    let _ = write!(s, " {d:>10.6}");
                }
                None => s.push_str("         --"),
            }
        }
        s.push('\n');
    }
    let _ = write!(s, "{:<8}", "DS (2)");
    for (_, ds) in &sums {
        let _ = write!(s, " {:>10.6}", ds.re_shift);
    }
    s.push('\n');
    header(&mut s, "Gamma");
    for o in [Orbital::B2_1, Orbital::A1_3, Orbital::B1_1] {
        let _ = write!(s, "{:<8}", o.as_str());
        for &f in &fields {
            let w = cell(o, f).and_then(|(_, w)| w).unwrap_or(0.0);
            let _ = write!(s, " {w:>10.6}");
        }
        s.push('\n');
    }
    let _ = write!(s, "{:<8}", "DS (2)");
    for (_, ds) in &sums {
        let _ = write!(s, " {:>10.6}", ds.gamma);
    }
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn row(f: f64, re: f64, im: f64) -> TableRow {
        TableRow::from_resonance(&Resonance {
            orbital: Orbital::B1_1,
            field: FieldSpec::x(f),
            l_max: 3,
            eigenvalue: Complex64::new(re, im),
        })
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            row(0.02, -0.52139127, -1.266e-12),
            row(0.10, -0.5266961127689488, -5.213159259176231e-3),
            row(0.04, -0.52164644, 3e-14),
        ];
        let text = format_table(&rows);
        assert!(text.starts_with(TABLE_HEADER));
        assert!(text.contains(",-5.266961e-1,5.213159e-3,0,3"));
        assert!(text.lines().nth(3).unwrap().contains(",NA,1,"));
        let back = parse_table(&text).unwrap();
        assert_eq!(format_table(&back), text);
        assert_eq!(back[1].re_e, -0.5266961);
        assert_eq!(back[2].half_width, None);
    }

    #[test]
    fn parse_rejects_bad_rows() {
        assert!(matches!(parse_table("a,b\n"), Err(TableError::Header)));
        let text = format!("{TABLE_HEADER}\n1b1,x,0.1,0,1,0,-0.5,NA,0,3\n");
        assert!(matches!(
            parse_table(&text),
            Err(TableError::Row { row: 1, .. })
        ));
    }

    #[test]
    fn layouts() {
        assert_eq!(
            sm_layout(13),
            Some(SmLayout::Axis {
                orbital: Orbital::A1_3,
                direction: FieldDirection::Z,
                l_max: 4
            })
        );
        assert_eq!(sm_layout(15), None);
        let (mode, keys) = sm_layout(6).unwrap().preset();
        assert_eq!(mode, "orient");
        let fr = &keys
            .iter()
            .find(|(k, _)| *k == "orient.fractions")
            .unwrap()
            .1;
        assert!(fr.starts_with("0:1,-0.1:0.9"));
        assert!(fr.ends_with("-1:0"));
        let text = format_sm_table(
            &sm_layout(1).unwrap(),
            &[row(0.12, -0.5274, -1.1e-2), row(0.02, -0.5214, 1e-15)],
        );
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[2].trim_start().starts_with("0.02") && lines[2].ends_with("NA"));
        assert!(lines[3].contains("-1.100000e-2"));
    }
}
