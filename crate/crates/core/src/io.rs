//! `FIELDMAP 1` text files.
//!
//! ```text
//! FIELDMAP 1
//! kind: B
//! nx: 128
//! ny: 128
//! dx_m: 2.0000000000000000e-6
//! z_m: 5.0000000000000000e-6
//! d_m: 1.0000000000000000e-6
//! components: 3
//!
//! <ny rows of nx values for x, then y, then z>
//! ```
//!
//! Samples are written with 17 significant digits so a read after a write
//! reproduces every value bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::{CurrentField, FieldMap3, GridSpec, ScalarMap};

const MAGIC: &str = "FIELDMAP 1";

/// Contents of a field-map file.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldFile {
    B(FieldMap3),
    /// Current density, with the sheet thickness when known.
    J { field: CurrentField, d: Option<f64> },
    Scalar(ScalarMap),
}

impl FieldFile {
    pub fn kind(&self) -> &'static str {
        match self {
            FieldFile::B(_) => "B",
            FieldFile::J { .. } => "J",
            FieldFile::Scalar(_) => "scalar",
        }
    }

    pub fn grid(&self) -> GridSpec {
        match self {
            FieldFile::B(b) => b.grid,
            FieldFile::J { field, .. } => field.grid,
            FieldFile::Scalar(s) => s.grid,
        }
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_error(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// Serialize to the canonical text form.
pub fn to_string(f: &FieldFile) -> String {
    let grid = f.grid();
    let n = grid.n();
    let (z, d, comps): (Option<f64>, Option<f64>, Vec<&Array2<f64>>) = match f {
        FieldFile::B(b) => (Some(b.z), Some(b.d), vec![&b.bx, &b.by, &b.bz]),
        FieldFile::J { field, d } => (None, *d, vec![&field.jx, &field.jy]),
        FieldFile::Scalar(s) => (None, None, vec![&s.values]),
    };
    let mut out = String::with_capacity(comps.len() * n * n * 25 + 200);
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "kind: {}", f.kind());
    let _ = writeln!(out, "nx: {n}");
    let _ = writeln!(out, "ny: {n}");
    let _ = writeln!(out, "dx_m: {}", fmt_f64(grid.dx()));
    if let Some(z) = z {
        let _ = writeln!(out, "z_m: {}", fmt_f64(z));
    }
    if let Some(d) = d {
        let _ = writeln!(out, "d_m: {}", fmt_f64(d));
    }
    let _ = writeln!(out, "components: {}", comps.len());
    out.push('\n');
    for c in comps {
        for row in c.rows() {
            let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    out
}

#[derive(Default)]
struct Header {
    kind: Option<String>,
    nx: Option<usize>,
    ny: Option<usize>,
    dx: Option<f64>,
    z: Option<f64>,
    d: Option<f64>,
    components: Option<usize>,
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| format_error(format!("bad value for {key}: {v:?}")))
}

fn set<T>(slot: &mut Option<T>, key: &str, v: T) -> Result<()> {
    if slot.replace(v).is_some() {
        return Err(format_error(format!("duplicate header key {key}")));
    }
    Ok(())
}

/// Parse the text form.
pub fn from_str(text: &str) -> Result<FieldFile> {
    let mut lines = text.lines();
    if lines.next().map(str::trim_end) != Some(MAGIC) {
        return Err(format_error(format!("first line must be {MAGIC:?}")));
    }
    let mut h = Header::default();
    loop {
        let line = lines.next().ok_or_else(|| format_error("header is not terminated by a blank line"))?;
        let line = line.trim();
        if line.is_empty() {
            break;
        }
        let (key, val) = line
            .split_once(':')
            .ok_or_else(|| format_error(format!("malformed header line {line:?}")))?;
        let (key, val) = (key.trim(), val.trim());
        match key {
            "kind" => set(&mut h.kind, key, val.to_string())?,
            "nx" => set(&mut h.nx, key, parse_num(key, val)?)?,
            "ny" => set(&mut h.ny, key, parse_num(key, val)?)?,
            "dx_m" => set(&mut h.dx, key, parse_num(key, val)?)?,
            "z_m" => set(&mut h.z, key, parse_num(key, val)?)?,
            "d_m" => set(&mut h.d, key, parse_num(key, val)?)?,
            "components" => set(&mut h.components, key, parse_num(key, val)?)?,
            _ => return Err(format_error(format!("unknown header key {key:?}"))),
        }
    }
    let missing = |k: &str| format_error(format!("missing header key {k}"));
    let kind = h.kind.ok_or_else(|| missing("kind"))?;
    let nx = h.nx.ok_or_else(|| missing("nx"))?;
    let ny = h.ny.ok_or_else(|| missing("ny"))?;
    let dx = h.dx.ok_or_else(|| missing("dx_m"))?;
    let comps = h.components.ok_or_else(|| missing("components"))?;
    if nx != ny {
        return Err(format_error(format!("grid must be square, got nx = {nx}, ny = {ny}")));
    }
    let expected = match kind.as_str() {
        "B" => 3,
        "J" => 2,
        "scalar" => 1,
        other => return Err(format_error(format!("unknown kind {other:?}"))),
    };
    if comps != expected {
        return Err(format_error(format!("kind {kind} needs {expected} components, header says {comps}")));
    }
    if kind != "B" && h.z.is_some() {
        return Err(format_error("z_m is only valid for kind B"));
    }
    for (name, v) in [("dx_m", Some(dx)), ("z_m", h.z), ("d_m", h.d)] {
        if let Some(v) = v {
            if !v.is_finite() {
                return Err(format_error(format!("{name} is not finite")));
            }
        }
    }
    let grid = GridSpec::new(nx, dx)?;

    let mut values = Vec::with_capacity(comps * nx * nx);
    for (i, line) in lines.enumerate() {
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| format_error(format!("bad sample {tok:?} on data line {}", i + 1)))?;
            if !v.is_finite() {
                return Err(format_error(format!("non-finite sample on data line {}", i + 1)));
            }
            values.push(v);
        }
    }
    if values.len() != comps * nx * nx {
        return Err(Error::GridMismatch(format!(
            "expected {} samples, found {}",
            comps * nx * nx,
            values.len()
        )));
    }
    let mut arrays = values
        .chunks_exact(nx * nx)
        .map(|c| Array2::from_shape_vec((nx, nx), c.to_vec()).expect("chunk has n² samples"));
    let mut next = || arrays.next().expect("component count checked");
    Ok(match kind.as_str() {
        "B" => {
            let z = h.z.ok_or_else(|| missing("z_m"))?;
            let d = h.d.ok_or_else(|| missing("d_m"))?;
            let (bx, by, bz) = (next(), next(), next());
            FieldFile::B(FieldMap3::new(grid, bx, by, bz, z, d)?)
        }
        "J" => {
            let (jx, jy) = (next(), next());
            FieldFile::J { field: CurrentField::new(grid, jx, jy)?, d: h.d }
        }
        _ => FieldFile::Scalar(ScalarMap::new(grid, next())?),
    })
}

pub fn read_fieldmap(path: impl AsRef<Path>) -> Result<FieldFile> {
    from_str(&std::fs::read_to_string(path)?)
}

pub fn write_fieldmap(f: &FieldFile, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_string(f))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_b() -> FieldFile {
        let g = GridSpec::new(4, 2e-6).unwrap();
        let a = Array2::from_shape_fn((4, 4), |(r, c)| (r as f64 * 0.1 + c as f64).sin() * 1e-6);
        FieldFile::B(FieldMap3::new(g, a.clone(), -&a, a.mapv(|v| v / 3.0), 5e-6, 1e-6).unwrap())
    }

    #[test]
    fn round_trip_is_exact() {
        let f = sample_b();
        let text = to_string(&f);
        let back = from_str(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(to_string(&back), text);
    }

    #[test]
    fn schema_violations_are_rejected() {
        let text = to_string(&sample_b());
        assert!(from_str(&text.replace("kind: B", "kind: J")).is_err());
        assert!(from_str(&text.replace("FIELDMAP 1", "FIELDMAP 2")).is_err());
        assert!(from_str(&text.replace("nx: 4", "nx: 8")).is_err());
        let first = text.lines().nth(9).unwrap().split_whitespace().next().unwrap().to_string();
        assert!(from_str(&text.replacen(&first, "NaN", 1)).is_err());
        let truncated: String = text.lines().take(12).map(|l| format!("{l}\n")).collect();
        assert!(from_str(&truncated).is_err());
    }

    #[test]
    fn j_without_thickness() {
        let g = GridSpec::new(4, 1.0).unwrap();
        let f = FieldFile::J { field: CurrentField::zeros(g), d: None };
        let text = to_string(&f);
        assert!(!text.contains("d_m"));
        assert_eq!(from_str(&text).unwrap(), f);
    }
}
