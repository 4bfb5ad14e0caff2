//! Experiment configuration: a flat `key = value` text format.
//!
//! One assignment per line, `#` starts a comment, keys are fixed and
//! unknown ones are rejected with their line number. The format is
//! versioned through a mandatory `config_version` key and serializes
//! canonically: `serialize(parse(text))` is idempotent.
//!
//! Relative paths inside a config (obstacle files, the output directory)
//! resolve against the directory containing the config file.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qlee::diffops::{BoundaryCondition, GridSpec};
use qlee::lee::{LeeParams, LeeScheme};
use qlee::obstacles::{decompose_mask, BinaryCell, Mask, ObstacleSpec};
use qlee::{Error, Result};

/// Where the obstacle geometry comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObstacleSource {
    None,
    /// Path to an occupancy-mask text file (`0`/`1` rows).
    MaskPath(String),
    /// Path to a cell-list text file (`x_prefix,y_prefix` per line).
    CellsPath(String),
}

/// One pressure source: a binary cell and its amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub cell: BinaryCell,
    pub amplitude: f64,
}

/// Parsed experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_x: usize,
    pub n_y: usize,
    pub l: f64,
    pub c: f64,
    pub rho_bar: f64,
    pub u_bar: f64,
    pub tau: f64,
    pub steps: usize,
    pub snapshot_every: usize,
    pub bc: BoundaryCondition,
    pub scheme: LeeScheme,
    pub obstacle: ObstacleSource,
    pub sources: Vec<SourceSpec>,
    pub output_dir: String,
    pub seed: u64,
    /// Forward-Euler step for `compare`; defaults to `tau / 10`.
    pub fdm_tau: Option<f64>,
    pub oracle: bool,
    /// Directory the config file lives in; relative paths resolve here.
    /// Not part of the serialized form.
    pub base_dir: PathBuf,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn finite_f64(key: &str, value: &str, line: usize) -> Result<f64> {
    let x: f64 = value
        .parse()
        .map_err(|e| parse_err(line, format!("invalid value for `{key}`: {e}")))?;
    if !x.is_finite() {
        return Err(parse_err(line, format!("`{key}` must be finite")));
    }
    Ok(x)
}

fn parse_usize(key: &str, value: &str, line: usize) -> Result<usize> {
    value
        .parse()
        .map_err(|e| parse_err(line, format!("invalid value for `{key}`: {e}")))
}

impl ExperimentConfig {
    /// Parse the flat text form. `base_dir` of the result is empty; use
    /// [`ExperimentConfig::load`] to track the config file's directory.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen: HashMap<&str, usize> = HashMap::new();
        let mut version_seen = false;
        let mut n_x = None;
        let mut n_y = None;
        let mut l = None;
        let mut c = None;
        let mut rho_bar = None;
        let mut u_bar = None;
        let mut tau = None;
        let mut steps = None;
        let mut snapshot_every = None;
        let mut bc = None;
        let mut scheme = None;
        let mut obstacle = ObstacleSource::None;
        let mut obstacle_line = 0usize;
        let mut sources = Vec::new();
        let mut output_dir = None;
        let mut seed = None;
        let mut fdm_tau = None;
        let mut oracle = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(parse_err(line, "expected `key = value`"));
            };
            let key = key.trim();
            let value = value.trim();
            if value.is_empty() {
                return Err(parse_err(line, format!("empty value for `{key}`")));
            }
            if key != "source" {
                if let Some(first) = seen.insert(key, line) {
                    return Err(parse_err(
                        line,
                        format!("duplicate key `{key}` (first set at line {first})"),
                    ));
                }
            }
            match key {
                "config_version" => {
                    if value != "1" {
                        return Err(parse_err(
                            line,
                            format!("unsupported config_version `{value}` (expected 1)"),
                        ));
                    }
                    version_seen = true;
                }
                "n_x" => n_x = Some(parse_usize(key, value, line)?),
                "n_y" => n_y = Some(parse_usize(key, value, line)?),
                "l" => l = Some(finite_f64(key, value, line)?),
                "c" => c = Some(finite_f64(key, value, line)?),
                "rho_bar" => rho_bar = Some(finite_f64(key, value, line)?),
                "u_bar" => u_bar = Some(finite_f64(key, value, line)?),
                "tau" => tau = Some(finite_f64(key, value, line)?),
                "steps" => steps = Some(parse_usize(key, value, line)?),
                "snapshot_every" => snapshot_every = Some(parse_usize(key, value, line)?),
                "bc" => {
                    bc = Some(match value {
                        "dirichlet" => BoundaryCondition::Dirichlet,
                        "periodic" => BoundaryCondition::Periodic,
                        other => {
                            return Err(parse_err(
                                line,
                                format!("unknown bc `{other}` (expected dirichlet or periodic)"),
                            ))
                        }
                    })
                }
                "scheme" => {
                    scheme = Some(match value {
                        "central" => LeeScheme::Central,
                        "updown" => LeeScheme::Updown,
                        other => {
                            return Err(parse_err(
                                line,
                                format!("unknown scheme `{other}` (expected central or updown)"),
                            ))
                        }
                    })
                }
                "obstacle_mask" | "obstacle_cells" => {
                    if !matches!(obstacle, ObstacleSource::None) {
                        return Err(parse_err(
                            line,
                            format!(
                                "`{key}` conflicts with the obstacle set at line {obstacle_line}"
                            ),
                        ));
                    }
                    obstacle = if key == "obstacle_mask" {
                        ObstacleSource::MaskPath(value.to_string())
                    } else {
                        ObstacleSource::CellsPath(value.to_string())
                    };
                    obstacle_line = line;
                }
                "source" => {
                    let mut parts = value.split_whitespace();
                    let (Some(cell), Some(amp), None) =
                        (parts.next(), parts.next(), parts.next())
                    else {
                        return Err(parse_err(
                            line,
                            "source must be `x_prefix,y_prefix amplitude`",
                        ));
                    };
                    let cell = BinaryCell::parse(cell)
                        .map_err(|e| parse_err(line, format!("bad source cell: {e}")))?;
                    let amplitude = finite_f64("source amplitude", amp, line)?;
                    sources.push(SourceSpec { cell, amplitude });
                }
                "output_dir" => output_dir = Some(value.to_string()),
                "seed" => {
                    seed = Some(
                        value
                            .parse::<u64>()
                            .map_err(|e| parse_err(line, format!("invalid seed: {e}")))?,
                    )
                }
                "fdm_tau" => fdm_tau = Some(finite_f64(key, value, line)?),
                "oracle" => {
                    oracle = Some(match value {
                        "on" => true,
                        "off" => false,
                        other => {
                            return Err(parse_err(
                                line,
                                format!("unknown oracle mode `{other}` (expected on or off)"),
                            ))
                        }
                    })
                }
                other => return Err(parse_err(line, format!("unknown key `{other}`"))),
            }
        }

        if !version_seen {
            return Err(Error::InvalidInput(
                "config is missing the required key `config_version`".into(),
            ));
        }
        let require = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| {
                Error::InvalidInput(format!("config is missing the required key `{name}`"))
            })
        };
        let require_usize = |name: &str, v: Option<usize>| {
            v.ok_or_else(|| {
                Error::InvalidInput(format!("config is missing the required key `{name}`"))
            })
        };
        Ok(Self {
            n_x: require_usize("n_x", n_x)?,
            n_y: require_usize("n_y", n_y)?,
            l: require("l", l)?,
            c: require("c", c)?,
            rho_bar: require("rho_bar", rho_bar)?,
            u_bar: require("u_bar", u_bar)?,
            tau: require("tau", tau)?,
            steps: require_usize("steps", steps)?,
            snapshot_every: snapshot_every.unwrap_or(0),
            bc: bc.unwrap_or(BoundaryCondition::Dirichlet),
            scheme: scheme.unwrap_or(LeeScheme::Central),
            obstacle,
            sources,
            output_dir: output_dir.unwrap_or_else(|| "out".to_string()),
            seed: seed.unwrap_or(0),
            fdm_tau,
            oracle: oracle.unwrap_or(false),
            base_dir: PathBuf::new(),
        })
    }

    /// Read and parse a config file, remembering its directory for
    /// relative-path resolution.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidInput(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok(cfg)
    }

    /// Canonical text form. Key order is fixed; parsing it back yields an
    /// equal config (up to `base_dir`).
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "config_version = 1");
        let _ = writeln!(s, "n_x = {}", self.n_x);
        let _ = writeln!(s, "n_y = {}", self.n_y);
        let _ = writeln!(s, "l = {}", self.l);
        let _ = writeln!(s, "c = {}", self.c);
        let _ = writeln!(s, "rho_bar = {}", self.rho_bar);
        let _ = writeln!(s, "u_bar = {}", self.u_bar);
        let _ = writeln!(s, "tau = {}", self.tau);
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "snapshot_every = {}", self.snapshot_every);
        let bc = match self.bc {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Periodic => "periodic",
        };
        let _ = writeln!(s, "bc = {bc}");
        let scheme = match self.scheme {
            LeeScheme::Central => "central",
            LeeScheme::Updown => "updown",
        };
        let _ = writeln!(s, "scheme = {scheme}");
        match &self.obstacle {
            ObstacleSource::None => {}
            ObstacleSource::MaskPath(p) => {
                let _ = writeln!(s, "obstacle_mask = {p}");
            }
            ObstacleSource::CellsPath(p) => {
                let _ = writeln!(s, "obstacle_cells = {p}");
            }
        }
        for src in &self.sources {
            let _ = writeln!(s, "source = {} {}", src.cell, src.amplitude);
        }
        let _ = writeln!(s, "output_dir = {}", self.output_dir);
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(ft) = self.fdm_tau {
            let _ = writeln!(s, "fdm_tau = {ft}");
        }
        let _ = writeln!(s, "oracle = {}", if self.oracle { "on" } else { "off" });
        s
    }

    /// Resolve a path from the config against its directory.
    pub fn resolve(&self, p: &str) -> PathBuf {
        let pb = Path::new(p);
        if pb.is_absolute() {
            pb.to_path_buf()
        } else {
            self.base_dir.join(pb)
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.n_x, self.n_y, self.l)
    }

    pub fn params(&self) -> Result<LeeParams> {
        LeeParams::new(self.grid()?, self.c, self.rho_bar, self.u_bar)
    }

    /// The forward-Euler step used by `compare`.
    pub fn effective_fdm_tau(&self) -> f64 {
        self.fdm_tau.unwrap_or(self.tau / 10.0)
    }

    /// Load the obstacle geometry, if any. Mask files are decomposed into
    /// binary cells; the result may be empty (an all-zero mask).
    pub fn load_obstacle(&self) -> Result<Option<ObstacleSpec>> {
        let read = |p: &str| -> Result<String> {
            let path = self.resolve(p);
            std::fs::read_to_string(&path).map_err(|e| {
                Error::InvalidInput(format!("cannot read obstacle file {}: {e}", path.display()))
            })
        };
        match &self.obstacle {
            ObstacleSource::None => Ok(None),
            ObstacleSource::MaskPath(p) => {
                let mask = Mask::parse(&read(p)?, self.n_x, self.n_y)?;
                Ok(Some(decompose_mask(&mask)?))
            }
            ObstacleSource::CellsPath(p) => {
                Ok(Some(ObstacleSpec::parse_cell_list(&read(p)?)?))
            }
        }
    }
}
