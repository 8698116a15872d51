//! Line-oriented `key = value` scenario files.
//!
//! ```text
//! # comments start with '#'
//! [scenario]
//! name = two-trace
//!
//! [grid]
//! n = 128
//! dx = 2e-6
//!
//! [geometry]
//! sigma_trace = 5.98e7
//! sigma_background = 1e-6
//! thickness = 1e-6
//! trace = 10e-6 ; 0,155e-6 256e-6,155e-6    # width ; polyline vertices
//! rect = 0 1e-5 0 1e-5                       # x0 x1 y0 y1
//!
//! [boundary]
//! dirichlet = left 0 256e-6 0.0              # edge from to volts
//! neumann = right 150e-6 160e-6 -160e-6      # edge from to amperes (+ = injected)
//!
//! [model]
//! j0 = 1.6e7
//! trace_width = 10e-6
//!
//! [sweep]
//! standoffs = 1e-6, 5e-6, 10e-6
//! noise_sigmas = 1e-7, 3e-6
//! seeds = 1, 2, 3
//!
//! [solver]
//! max_outer_iters = 1500
//! rho = 1
//! step_mu = auto
//! stop_rel_change = 1e-4
//! levels = auto
//! linearized = false
//! adaptive_rho = true
//! ```
//!
//! All values are SI. `trace`, `rect`, `dirichlet` and `neumann` may repeat.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::scenario::{self, Scenario, SIGMA_BACKGROUND, SIGMA_COPPER};
use crate::sim::{BoundarySpec, Edge, EdgeSegment, Rect, TraceGeometry};
use crate::solver::{SolverOptions, StepSize};

/// A scenario plus the sweep axes and solver settings.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub standoffs: Vec<f64>,
    pub noise_sigmas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub solver: SolverOptions,
}

/// `count` values spaced geometrically from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
            .collect(),
    }
}

impl ScenarioConfig {
    /// Built-in scenario with standoffs 1, 5, 10 µm, six noise levels from
    /// 0.1 to 3 µT, and seeds 1–3.
    pub fn builtin(name: &str, n: usize) -> Result<Self> {
        let scenario = match name {
            "two-trace" | "two_trace" => scenario::two_trace(n)?,
            "l-bend" | "l_bend" => scenario::l_bend(n)?,
            other => return Err(Error::Config(format!("unknown built-in scenario {other:?}"))),
        };
        let cfg = ScenarioConfig {
            scenario,
            standoffs: vec![1e-6, 5e-6, 10e-6],
            noise_sigmas: geometric_grid(0.1e-6, 3e-6, 6),
            seeds: vec![1, 2, 3],
            solver: SolverOptions::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: &[f64]| -> Result<()> {
            if v.is_empty() {
                return Err(Error::Config(format!("{name} must not be empty")));
            }
            if let Some(bad) = v.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
                return Err(Error::Config(format!("{name} contains non-positive value {bad}")));
            }
            Ok(())
        };
        positive("standoffs", &self.standoffs)?;
        positive("noise_sigmas", &self.noise_sigmas)?;
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        positive("model", &[self.scenario.j0, self.scenario.trace_width])?;
        if self.scenario.geometry.segments.is_empty() {
            return Err(Error::Config("geometry has no traces".into()));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        parse(&std::fs::read_to_string(path)?)
    }
}

type Sections = BTreeMap<String, Vec<(usize, String, String)>>;

fn split_sections(text: &str) -> Result<Sections> {
    let mut out = Sections::new();
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Config(format!("line {line_no}: malformed section header")))?;
            current = name.trim().to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {line_no}: expected key = value")))?;
        if current.is_empty() {
            return Err(Error::Config(format!("line {line_no}: key outside any section")));
        }
        out.entry(current.clone())
            .or_default()
            .push((line_no, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

const KNOWN: &[(&str, &[&str])] = &[
    ("scenario", &["name"]),
    ("grid", &["n", "dx"]),
    ("geometry", &["sigma_trace", "sigma_background", "thickness", "trace", "rect"]),
    ("boundary", &["dirichlet", "neumann"]),
    ("model", &["j0", "trace_width"]),
    ("sweep", &["standoffs", "noise_sigmas", "seeds"]),
    (
        "solver",
        &["max_outer_iters", "rho", "step_mu", "stop_rel_change", "levels", "linearized", "adaptive_rho"],
    ),
];
const REPEATABLE: &[&str] = &["trace", "rect", "dirichlet", "neumann"];

struct Reader {
    sections: Sections,
}

impl Reader {
    fn all(&self, section: &str, key: &str) -> Vec<(usize, &str)> {
        self.sections
            .get(section)
            .map(|entries| {
                entries
                    .iter()
                    .filter(|(_, k, _)| k == key)
                    .map(|(l, _, v)| (*l, v.as_str()))
                    .collect()
            })
            .unwrap_or_default()
    }

    fn one(&self, section: &str, key: &str) -> Option<(usize, &str)> {
        self.all(section, key).into_iter().next()
    }

    fn num<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        self.one(section, key)
            .map(|(l, v)| parse_value(l, key, v))
            .transpose()
    }

    fn required<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<T> {
        self.num(section, key)?
            .ok_or_else(|| Error::Config(format!("missing [{section}] {key}")))
    }

    fn list<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>> {
        self.one(section, key)
            .map(|(l, v)| {
                v.split(',')
                    .map(|t| parse_value(l, key, t.trim()))
                    .collect::<Result<Vec<T>>>()
            })
            .transpose()
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("line {line}: bad value {v:?} for {key}")))
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("line {line}: {key} expects true or false, got {v:?}"))),
    }
}

fn parse_edge(line: usize, v: &str) -> Result<(EdgeSegment, f64)> {
    let f: Vec<&str> = v.split_whitespace().collect();
    if f.len() != 4 {
        return Err(Error::Config(format!("line {line}: expected `edge from to value`")));
    }
    let edge = match f[0] {
        "left" => Edge::Left,
        "right" => Edge::Right,
        "bottom" => Edge::Bottom,
        "top" => Edge::Top,
        other => return Err(Error::Config(format!("line {line}: unknown edge {other:?}"))),
    };
    let from = parse_value(line, "from", f[1])?;
    let to = parse_value(line, "to", f[2])?;
    let value = parse_value(line, "value", f[3])?;
    Ok((EdgeSegment { edge, from, to }, value))
}

fn parse_trace(line: usize, v: &str) -> Result<(f64, Vec<(f64, f64)>)> {
    let (w, pts) = v
        .split_once(';')
        .ok_or_else(|| Error::Config(format!("line {line}: expected `width ; x,y x,y ...`")))?;
    let width = parse_value(line, "width", w.trim())?;
    let points = pts
        .split_whitespace()
        .map(|p| {
            let (x, y) = p
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("line {line}: vertex {p:?} is not x,y")))?;
            Ok((parse_value(line, "x", x)?, parse_value(line, "y", y)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((width, points))
}

/// Parse a configuration file's text.
pub fn parse(text: &str) -> Result<ScenarioConfig> {
    let sections = split_sections(text)?;
    for (name, entries) in &sections {
        let keys = KNOWN
            .iter()
            .find(|(s, _)| s == name)
            .map(|(_, k)| *k)
            .ok_or_else(|| Error::Config(format!("unknown section [{name}]")))?;
        let mut seen = std::collections::BTreeSet::new();
        for (line, key, _) in entries {
            if !keys.contains(&key.as_str()) {
                return Err(Error::Config(format!("line {line}: unknown key {key:?} in [{name}]")));
            }
            if !REPEATABLE.contains(&key.as_str()) && !seen.insert(key.clone()) {
                return Err(Error::Config(format!("line {line}: duplicate key {key:?}")));
            }
        }
    }
    let r = Reader { sections };

    let grid = GridSpec::new(r.required("grid", "n")?, r.required("grid", "dx")?)?;
    let mut geometry = TraceGeometry::new(
        r.num("geometry", "sigma_trace")?.unwrap_or(SIGMA_COPPER),
        r.num("geometry", "sigma_background")?.unwrap_or(SIGMA_BACKGROUND),
        r.required("geometry", "thickness")?,
    )?;
    for (line, v) in r.all("geometry", "trace") {
        let (width, points) = parse_trace(line, v)?;
        geometry.add_polyline(&points, width)?;
    }
    for (line, v) in r.all("geometry", "rect") {
        let f = v
            .split_whitespace()
            .map(|t| parse_value(line, "rect", t))
            .collect::<Result<Vec<f64>>>()?;
        let [x0, x1, y0, y1] = f[..] else {
            return Err(Error::Config(format!("line {line}: rect expects x0 x1 y0 y1")));
        };
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::Config(format!("line {line}: empty rect")));
        }
        geometry.segments.push(Rect { x0, x1, y0, y1 });
    }
    let mut boundary = BoundarySpec::default();
    for (line, v) in r.all("boundary", "dirichlet") {
        boundary.dirichlet.push(parse_edge(line, v)?);
    }
    for (line, v) in r.all("boundary", "neumann") {
        boundary.neumann.push(parse_edge(line, v)?);
    }

    let mut solver = SolverOptions::default();
    if let Some(v) = r.num("solver", "max_outer_iters")? {
        solver.max_outer_iters = v;
    }
    if let Some(v) = r.num("solver", "rho")? {
        solver.rho = v;
    }
    if let Some(v) = r.num("solver", "stop_rel_change")? {
        solver.stop_rel_change = v;
    }
    if let Some((line, v)) = r.one("solver", "step_mu") {
        solver.step_mu = match v {
            "auto" => StepSize::Auto,
            _ => StepSize::Fixed(parse_value(line, "step_mu", v)?),
        };
    }
    if let Some((line, v)) = r.one("solver", "levels") {
        solver.levels = match v {
            "auto" => None,
            _ => Some(parse_value(line, "levels", v)?),
        };
    }
    if let Some((line, v)) = r.one("solver", "linearized") {
        solver.linearized = parse_bool(line, "linearized", v)?;
    }
    if let Some((line, v)) = r.one("solver", "adaptive_rho") {
        solver.adaptive_rho = parse_bool(line, "adaptive_rho", v)?;
    }

    let cfg = ScenarioConfig {
        scenario: Scenario {
            name: r.one("scenario", "name").map_or("custom", |(_, v)| v).to_string(),
            grid,
            geometry,
            boundary,
            trace_width: r.required("model", "trace_width")?,
            j0: r.required("model", "j0")?,
        },
        standoffs: r.list("sweep", "standoffs")?.unwrap_or_else(|| vec![1e-6, 5e-6, 10e-6]),
        noise_sigmas: r
            .list("sweep", "noise_sigmas")?
            .unwrap_or_else(|| geometric_grid(0.1e-6, 3e-6, 6)),
        seeds: r.list("sweep", "seeds")?.unwrap_or_else(|| vec![1, 2, 3]),
        solver,
    };
    cfg.validate()?;
    Ok(cfg)
}
