//! Strict scenario-file parsing.
//!
//! Scenario files are flat INI-style text: `[section]` headers and
//! `key = value` lines, `#` comments. Unknown sections or keys are
//! rejected before any computation starts, with the offending line number.
//!
//! Sections:
//! - `[material]`: lambda, mu, mu_c, mu2, rho, sigma_y
//! - `[grid]`: nx, ny, lx, ly
//! - `[bc]`: repeated `segment = <side> <t0> <t1> <value>` lines
//! - `[drive]`: repeated `sample = <t> <beta>` lines
//! - `[evolve]`: dt (number or `auto`), t_end, stat_tol, max_steps,
//!   scheme (`explicit` | `semi_implicit`), mode (`case2_J` | `case3_Jbeta`),
//!   snapshot_every, record_every, init (`harmonic` | `constant`), init_value
//! - `[output]`: dir, formats (comma list of `csv`, `pgm`)

use crate::field::{BoundarySpec, Grid2D, Segment, Side};
use crate::params::{MaterialParams, ShearDrive};
use crate::solver::{Mode, Scheme};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("{path}:{line}: {msg}")]
pub struct ConfigError {
    pub path: String,
    pub line: usize,
    pub msg: String,
}

/// Initial condition of the evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitKind {
    /// Harmonic extension of the boundary data (default).
    Harmonic,
    /// Constant interior value with the boundary data imposed.
    Constant(f64),
}

/// The `[evolve]` section with defaults applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveSection {
    pub dt: Option<f64>,
    /// Driven-phase duration; defaults to the drive's last sample time.
    pub t_end: Option<f64>,
    pub stat_tol: f64,
    pub max_steps: usize,
    pub scheme: Scheme,
    pub mode: Mode,
    pub snapshot_every: usize,
    pub record_every: usize,
    pub init: InitKind,
}

impl Default for EvolveSection {
    fn default() -> Self {
        EvolveSection {
            dt: None,
            t_end: None,
            stat_tol: 1e-8,
            max_steps: 1_000_000,
            scheme: Scheme::Explicit,
            mode: Mode::Case2J,
            snapshot_every: 0,
            record_every: 100,
            init: InitKind::Harmonic,
        }
    }
}

/// Output format selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Pgm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            formats: vec![Format::Csv],
        }
    }
}

/// A parsed scenario file. Sections are optional here; each subcommand
/// checks that the sections it needs are present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioConfig {
    pub material: Option<MaterialParams>,
    pub grid: Option<Grid2D>,
    pub bc: Option<BoundarySpec>,
    pub drive: Option<ShearDrive>,
    pub evolve: Option<EvolveSection>,
    pub output: Option<OutputSection>,
}

struct RawSection {
    /// key -> (line, value); scalar keys must be unique
    scalars: BTreeMap<String, (usize, String)>,
    /// repeated keys (segment / sample)
    repeated: Vec<(usize, String, String)>,
    header_line: usize,
}

pub fn parse_file(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: path.display().to_string(),
        line: 0,
        msg: e.to_string(),
    })?;
    parse_str(&text, &path.display().to_string())
}

pub fn parse_str(text: &str, path: &str) -> Result<ScenarioConfig, ConfigError> {
    let err = |line: usize, msg: String| ConfigError {
        path: path.to_string(),
        line,
        msg,
    };
    const SECTIONS: [&str; 6] = ["material", "grid", "bc", "drive", "evolve", "output"];
    let mut raw: BTreeMap<String, RawSection> = BTreeMap::new();
    let mut current: Option<String> = None;

    for (k, raw_line) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = match raw_line.split_once('#') {
            Some((head, _)) => head.trim(),
            None => raw_line.trim(),
        };
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(lineno, format!("malformed section header '{line}'")))?
                .trim()
                .to_string();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(err(lineno, format!("unknown section [{name}]")));
            }
            if raw.contains_key(&name) {
                return Err(err(lineno, format!("duplicate section [{name}]")));
            }
            raw.insert(
                name.clone(),
                RawSection {
                    scalars: BTreeMap::new(),
                    repeated: Vec::new(),
                    header_line: lineno,
                },
            );
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(lineno, format!("expected 'key = value', got '{line}'")));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let section = current
            .as_ref()
            .ok_or_else(|| err(lineno, format!("key '{key}' outside any section")))?;
        let entry = raw.get_mut(section).expect("section exists");
        if key == "segment" || key == "sample" {
            entry.repeated.push((lineno, key, value));
        } else {
            if entry.scalars.contains_key(&key) {
                return Err(err(lineno, format!("duplicate key '{key}' in [{section}]")));
            }
            entry.scalars.insert(key, (lineno, value));
        }
    }

    let mut cfg = ScenarioConfig::default();

    let parse_f64 = |line: usize, key: &str, v: &str| {
        v.parse::<f64>()
            .map_err(|_| err(line, format!("key '{key}': bad number '{v}'")))
    };
    let parse_usize = |line: usize, key: &str, v: &str| {
        v.parse::<usize>()
            .map_err(|_| err(line, format!("key '{key}': bad count '{v}'")))
    };

    if let Some(sec) = raw.get("material") {
        let fetch = |name: &str| -> Result<f64, ConfigError> {
            match sec.scalars.get(name) {
                Some((line, v)) => parse_f64(*line, name, v),
                None => Err(err(
                    sec.header_line,
                    format!("[material] is missing key '{name}'"),
                )),
            }
        };
        let m = MaterialParams {
            lambda: fetch("lambda")?,
            mu: fetch("mu")?,
            mu_c: fetch("mu_c")?,
            mu2: fetch("mu2")?,
            rho: fetch("rho")?,
            sigma_y: fetch("sigma_y")?,
        };
        for (key, (line, _)) in &sec.scalars {
            if !["lambda", "mu", "mu_c", "mu2", "rho", "sigma_y"].contains(&key.as_str()) {
                return Err(err(*line, format!("unknown key '{key}' in [material]")));
            }
        }
        if !sec.repeated.is_empty() {
            let (line, key, _) = &sec.repeated[0];
            return Err(err(*line, format!("unknown key '{key}' in [material]")));
        }
        let m = m
            .validate()
            .map_err(|e| err(sec.header_line, e.to_string()))?;
        cfg.material = Some(m);
    }

    if let Some(sec) = raw.get("grid") {
        for (key, (line, _)) in &sec.scalars {
            if !["nx", "ny", "lx", "ly"].contains(&key.as_str()) {
                return Err(err(*line, format!("unknown key '{key}' in [grid]")));
            }
        }
        let get = |name: &str| -> Result<&(usize, String), ConfigError> {
            sec.scalars
                .get(name)
                .ok_or_else(|| err(sec.header_line, format!("[grid] is missing key '{name}'")))
        };
        let (l, v) = get("nx")?;
        let nx = parse_usize(*l, "nx", v)?;
        let (l, v) = get("ny")?;
        let ny = parse_usize(*l, "ny", v)?;
        let (l, v) = get("lx")?;
        let lx = parse_f64(*l, "lx", v)?;
        let (l, v) = get("ly")?;
        let ly = parse_f64(*l, "ly", v)?;
        let grid = Grid2D::new(nx, ny, lx, ly).map_err(|e| err(sec.header_line, e.to_string()))?;
        cfg.grid = Some(grid);
    }

    if let Some(sec) = raw.get("bc") {
        if let Some((key, (line, _))) = sec.scalars.iter().next() {
            return Err(err(*line, format!("unknown key '{key}' in [bc]")));
        }
        let mut segments = Vec::new();
        for (line, key, value) in &sec.repeated {
            if key != "segment" {
                return Err(err(*line, format!("unknown key '{key}' in [bc]")));
            }
            let parts: Vec<&str> = value.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(err(
                    *line,
                    format!("segment needs '<side> <t0> <t1> <value>', got '{value}'"),
                ));
            }
            let side = match parts[0] {
                "left" => Side::Left,
                "right" => Side::Right,
                "bottom" => Side::Bottom,
                "top" => Side::Top,
                other => return Err(err(*line, format!("unknown side '{other}'"))),
            };
            segments.push(Segment {
                side,
                t0: parse_f64(*line, "segment t0", parts[1])?,
                t1: parse_f64(*line, "segment t1", parts[2])?,
                value: parse_f64(*line, "segment value", parts[3])?,
            });
        }
        let bc = BoundarySpec::new(segments).map_err(|e| err(sec.header_line, e.to_string()))?;
        cfg.bc = Some(bc);
    }

    if let Some(sec) = raw.get("drive") {
        if let Some((key, (line, _))) = sec.scalars.iter().next() {
            return Err(err(*line, format!("unknown key '{key}' in [drive]")));
        }
        let mut samples = Vec::new();
        for (line, key, value) in &sec.repeated {
            if key != "sample" {
                return Err(err(*line, format!("unknown key '{key}' in [drive]")));
            }
            let parts: Vec<&str> = value.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(err(*line, format!("sample needs '<t> <beta>', got '{value}'")));
            }
            samples.push((
                parse_f64(*line, "sample t", parts[0])?,
                parse_f64(*line, "sample beta", parts[1])?,
            ));
        }
        let drive = ShearDrive::new(samples).map_err(|e| err(sec.header_line, e.to_string()))?;
        cfg.drive = Some(drive);
    }

    if let Some(sec) = raw.get("evolve") {
        if !sec.repeated.is_empty() {
            let (line, key, _) = &sec.repeated[0];
            return Err(err(*line, format!("unknown key '{key}' in [evolve]")));
        }
        let mut ev = EvolveSection::default();
        for (key, (line, v)) in &sec.scalars {
            match key.as_str() {
                "dt" => {
                    ev.dt = if v == "auto" {
                        None
                    } else {
                        Some(parse_f64(*line, "dt", v)?)
                    }
                }
                "t_end" => ev.t_end = Some(parse_f64(*line, "t_end", v)?),
                "stat_tol" => ev.stat_tol = parse_f64(*line, "stat_tol", v)?,
                "max_steps" => ev.max_steps = parse_usize(*line, "max_steps", v)?,
                "scheme" => {
                    ev.scheme = match v.as_str() {
                        "explicit" => Scheme::Explicit,
                        "semi_implicit" => Scheme::SemiImplicit,
                        other => {
                            return Err(err(*line, format!("unknown scheme '{other}'")));
                        }
                    }
                }
                "mode" => {
                    ev.mode = match v.as_str() {
                        "case2_J" => Mode::Case2J,
                        "case3_Jbeta" => Mode::Case3Jbeta,
                        other => return Err(err(*line, format!("unknown mode '{other}'"))),
                    }
                }
                "snapshot_every" => ev.snapshot_every = parse_usize(*line, "snapshot_every", v)?,
                "record_every" => ev.record_every = parse_usize(*line, "record_every", v)?,
                "init" => {
                    ev.init = match v.as_str() {
                        "harmonic" => InitKind::Harmonic,
                        "constant" => InitKind::Constant(0.0),
                        other => return Err(err(*line, format!("unknown init '{other}'"))),
                    }
                }
                "init_value" => {
                    let val = parse_f64(*line, "init_value", v)?;
                    ev.init = InitKind::Constant(val);
                }
                other => return Err(err(*line, format!("unknown key '{other}' in [evolve]"))),
            }
        }
        cfg.evolve = Some(ev);
    }

    if let Some(sec) = raw.get("output") {
        if !sec.repeated.is_empty() {
            let (line, key, _) = &sec.repeated[0];
            return Err(err(*line, format!("unknown key '{key}' in [output]")));
        }
        let mut out = OutputSection::default();
        for (key, (line, v)) in &sec.scalars {
            match key.as_str() {
                "dir" => out.dir = PathBuf::from(v),
                "formats" => {
                    let mut formats = Vec::new();
                    for part in v.split(',') {
                        match part.trim() {
                            "csv" => formats.push(Format::Csv),
                            "pgm" => formats.push(Format::Pgm),
                            other => {
                                return Err(err(*line, format!("unknown format '{other}'")));
                            }
                        }
                    }
                    out.formats = formats;
                }
                other => return Err(err(*line, format!("unknown key '{other}' in [output]"))),
            }
        }
        cfg.output = Some(out);
    }

    Ok(cfg)
}
