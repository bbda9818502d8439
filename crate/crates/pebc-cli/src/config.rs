//! Flat `key = value` scenario configs.
//!
//! A config is a plain-text file: one `key = value` pair per line, `#`
//! comments, blank lines ignored. Every key has a documented default, so
//! even the empty file parses to a runnable open-loop scenario. Parsing
//! reports the first problem it finds, naming the offending line and
//! distinguishing unknown keys from malformed values from violated
//! invariants.
//!
//! Recognized keys: `rho`, `alpha`, `beta`, `gamma`, `c1`, `grid_n`, `dt`,
//! `T`, `mode`, `f1`, `f2`, `f3`, `u0`, `observer_u0`, `out`, `seed`,
//! `noise_std`, `workers`.

use std::fmt;
use std::path::PathBuf;

use pebc::grid::{Field, Grid};
use pebc::nonlin::Nonlinearity;
use pebc::pde::SystemParams;

/// What went wrong while parsing, with the 1-based line it happened on.
#[derive(Debug)]
pub enum ConfigError {
    /// A key outside the documented set.
    UnknownKey { line: usize, key: String },
    /// A recognized key whose value does not parse.
    MalformedValue {
        line: usize,
        key: String,
        detail: String,
    },
    /// A well-formed value that breaks a config invariant.
    ViolatedInvariant { line: usize, detail: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::UnknownKey { line, key } => {
                write!(f, "line {line}: unknown key `{key}`")
            }
            ConfigError::MalformedValue { line, key, detail } => {
                write!(f, "line {line}: malformed value for `{key}`: {detail}")
            }
            ConfigError::ViolatedInvariant { line, detail } => {
                write!(f, "line {line}: violated invariant: {detail}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// Which loop the scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    OpenLoop,
    StateFeedback,
    ObserverOnly,
    OutputFeedback,
    TargetSystem,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::OpenLoop => "open_loop",
            Mode::StateFeedback => "state_feedback",
            Mode::ObserverOnly => "observer_only",
            Mode::OutputFeedback => "output_feedback",
            Mode::TargetSystem => "target_system",
        }
    }
}

/// A pointwise nonlinearity recipe: `zero`, `tanh(g)`, `sin(g)`, `sat(g)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonlinSpec {
    Zero,
    Tanh(f64),
    Sin(f64),
    Sat(f64),
}

impl NonlinSpec {
    pub fn build(&self) -> Nonlinearity {
        match *self {
            NonlinSpec::Zero => Nonlinearity::zero(),
            NonlinSpec::Tanh(g) => Nonlinearity::scaled_tanh(g),
            NonlinSpec::Sin(g) => Nonlinearity::scaled_sin(g),
            NonlinSpec::Sat(g) => Nonlinearity::saturation(g),
        }
    }
}

/// An initial-condition recipe, evaluated on the run's grid:
/// `constant(a)`, `cosine_mode(m, a)` for a·cos(mπx),
/// `gaussian_bump(center, width, a)` for a·exp(−(x−center)²/(2·width²)),
/// or `from_csv(path)` reading one value per line (grid_n of them).
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Constant(f64),
    CosineMode { mode: u32, amplitude: f64 },
    GaussianBump { center: f64, width: f64, amplitude: f64 },
    FromCsv(PathBuf),
}

impl FieldSpec {
    /// Materializes the recipe on a grid. CSV files are read here, at run
    /// time; the error string describes what failed.
    pub fn build(&self, grid: &Grid) -> Result<Field, String> {
        match self {
            FieldSpec::Constant(a) => Ok(Field::from_fn(grid.clone(), |_| *a)),
            FieldSpec::CosineMode { mode, amplitude } => {
                let m = *mode as f64;
                let a = *amplitude;
                Ok(Field::from_fn(grid.clone(), move |x| {
                    a * (m * std::f64::consts::PI * x).cos()
                }))
            }
            FieldSpec::GaussianBump {
                center,
                width,
                amplitude,
            } => {
                let (c, w, a) = (*center, *width, *amplitude);
                Ok(Field::from_fn(grid.clone(), move |x| {
                    a * (-(x - c) * (x - c) / (2.0 * w * w)).exp()
                }))
            }
            FieldSpec::FromCsv(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("could not read `{}`: {e}", path.display()))?;
                let mut values = Vec::new();
                for (idx, line) in text.lines().enumerate() {
                    let trimmed = line.trim();
                    if trimmed.is_empty() || trimmed.starts_with('#') {
                        continue;
                    }
                    let v: f64 = trimmed.parse().map_err(|_| {
                        format!(
                            "`{}` line {}: `{trimmed}` is not a number",
                            path.display(),
                            idx + 1
                        )
                    })?;
                    values.push(v);
                }
                if values.len() != grid.n() {
                    return Err(format!(
                        "`{}` holds {} values but the grid has {} nodes",
                        path.display(),
                        values.len(),
                        grid.n()
                    ));
                }
                Field::new(grid.clone(), values).map_err(|e| e.to_string())
            }
        }
    }
}

/// A fully validated scenario: physical parameters, discretization, loop
/// mode, initial data recipes, and output plumbing.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c1: f64,
    pub grid_n: usize,
    pub dt: f64,
    pub t_final: f64,
    pub mode: Mode,
    pub f1: NonlinSpec,
    pub f2: NonlinSpec,
    pub f3: NonlinSpec,
    pub u0: FieldSpec,
    pub observer_u0: FieldSpec,
    pub out: PathBuf,
    pub seed: u64,
    pub noise_std: f64,
    pub workers: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            rho: 1.0,
            alpha: 0.0,
            beta: 0.0,
            gamma: 1.0,
            c1: 1.0,
            grid_n: 201,
            dt: 1e-3,
            t_final: 5.0,
            mode: Mode::OpenLoop,
            f1: NonlinSpec::Zero,
            f2: NonlinSpec::Zero,
            f3: NonlinSpec::Zero,
            u0: FieldSpec::Constant(1.0),
            observer_u0: FieldSpec::Constant(0.0),
            out: PathBuf::from("trajectory.csv"),
            seed: 0,
            noise_std: 0.0,
            workers: 4,
        }
    }
}

impl ScenarioConfig {
    /// Builds the validated physical parameter set. Infeasible combinations
    /// (non-finite, elliptic resonance) were already rejected at parse time,
    /// so this cannot fail for a parsed config.
    pub fn params(&self) -> pebc::Result<SystemParams> {
        SystemParams::new(
            self.rho,
            self.alpha,
            self.beta,
            self.gamma,
            self.f1.build(),
            self.f2.build(),
            self.f3.build(),
        )
    }
}

fn parse_f64(line: usize, key: &str, raw: &str) -> Result<f64, ConfigError> {
    raw.trim().parse::<f64>().map_err(|_| ConfigError::MalformedValue {
        line,
        key: key.to_string(),
        detail: format!("`{raw}` is not a number"),
    })
}

fn parse_usize(line: usize, key: &str, raw: &str) -> Result<usize, ConfigError> {
    raw.trim()
        .parse::<usize>()
        .map_err(|_| ConfigError::MalformedValue {
            line,
            key: key.to_string(),
            detail: format!("`{raw}` is not a nonnegative integer"),
        })
}

fn parse_u64(line: usize, key: &str, raw: &str) -> Result<u64, ConfigError> {
    raw.trim()
        .parse::<u64>()
        .map_err(|_| ConfigError::MalformedValue {
            line,
            key: key.to_string(),
            detail: format!("`{raw}` is not a nonnegative integer"),
        })
}

/// Splits `name(arg1, arg2, ...)` into the name and raw argument list.
fn split_call(raw: &str) -> Option<(&str, Vec<&str>)> {
    let raw = raw.trim();
    if let Some(open) = raw.find('(') {
        if !raw.ends_with(')') {
            return None;
        }
        let name = raw[..open].trim();
        let inner = &raw[open + 1..raw.len() - 1];
        let args = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner.split(',').map(str::trim).collect()
        };
        Some((name, args))
    } else {
        Some((raw, Vec::new()))
    }
}

fn parse_nonlin(line: usize, key: &str, raw: &str) -> Result<NonlinSpec, ConfigError> {
    let malformed = |detail: String| ConfigError::MalformedValue {
        line,
        key: key.to_string(),
        detail,
    };
    let (name, args) = split_call(raw)
        .ok_or_else(|| malformed(format!("`{raw}` is not `zero` or `name(gain)`")))?;
    match (name, args.as_slice()) {
        ("zero", []) => Ok(NonlinSpec::Zero),
        ("tanh", [g]) => Ok(NonlinSpec::Tanh(parse_f64(line, key, g)?)),
        ("sin", [g]) => Ok(NonlinSpec::Sin(parse_f64(line, key, g)?)),
        ("sat", [g]) => Ok(NonlinSpec::Sat(parse_f64(line, key, g)?)),
        _ => Err(malformed(format!(
            "`{raw}` is not one of zero, tanh(g), sin(g), sat(g)"
        ))),
    }
}

fn parse_field_spec(line: usize, key: &str, raw: &str) -> Result<FieldSpec, ConfigError> {
    let malformed = |detail: String| ConfigError::MalformedValue {
        line,
        key: key.to_string(),
        detail,
    };
    let (name, args) = split_call(raw)
        .ok_or_else(|| malformed(format!("`{raw}` is not a recognized recipe")))?;
    match (name, args.as_slice()) {
        ("constant", [a]) => Ok(FieldSpec::Constant(parse_f64(line, key, a)?)),
        ("cosine_mode", [m, a]) => {
            let mode = m.parse::<u32>().map_err(|_| {
                malformed(format!("`{m}` is not a nonnegative integer mode index"))
            })?;
            Ok(FieldSpec::CosineMode {
                mode,
                amplitude: parse_f64(line, key, a)?,
            })
        }
        ("gaussian_bump", [c, w, a]) => {
            let width = parse_f64(line, key, w)?;
            if !(width > 0.0) {
                return Err(ConfigError::ViolatedInvariant {
                    line,
                    detail: format!("gaussian_bump width must be positive (got {width})"),
                });
            }
            Ok(FieldSpec::GaussianBump {
                center: parse_f64(line, key, c)?,
                width,
                amplitude: parse_f64(line, key, a)?,
            })
        }
        ("from_csv", [p]) => Ok(FieldSpec::FromCsv(PathBuf::from(p))),
        _ => Err(malformed(format!(
            "`{raw}` is not one of constant(a), cosine_mode(m, a), \
             gaussian_bump(center, width, a), from_csv(path)"
        ))),
    }
}

fn parse_mode(line: usize, raw: &str) -> Result<Mode, ConfigError> {
    match raw.trim() {
        "open_loop" => Ok(Mode::OpenLoop),
        "state_feedback" => Ok(Mode::StateFeedback),
        "observer_only" => Ok(Mode::ObserverOnly),
        "output_feedback" => Ok(Mode::OutputFeedback),
        "target_system" => Ok(Mode::TargetSystem),
        other => Err(ConfigError::MalformedValue {
            line,
            key: "mode".to_string(),
            detail: format!(
                "`{other}` is not one of open_loop, state_feedback, observer_only, \
                 output_feedback, target_system"
            ),
        }),
    }
}

/// Parses the flat `key = value` text into a validated [`ScenarioConfig`].
///
/// Later assignments to the same key override earlier ones. After all lines
/// are consumed the config invariants are checked: `grid_n ≥ 51`,
/// `dt ≤ 0.01`, `T > 0`, `noise_std ≥ 0`, finite gains, positive `c1`, and
/// a non-resonant parameter set; violations cite the line that set the
/// offending value.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    // Line on which each invariant-relevant key was last set (0 = default).
    let mut set_lines = std::collections::HashMap::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let trimmed = stripped.trim();
        if trimmed.is_empty() {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ConfigError::MalformedValue {
                line,
                key: trimmed.to_string(),
                detail: "expected `key = value`".to_string(),
            });
        };
        let key = key.trim();
        let value = value.trim();
        set_lines.insert(key.to_string(), line);
        match key {
            "rho" => cfg.rho = parse_f64(line, key, value)?,
            "alpha" => cfg.alpha = parse_f64(line, key, value)?,
            "beta" => cfg.beta = parse_f64(line, key, value)?,
            "gamma" => cfg.gamma = parse_f64(line, key, value)?,
            "c1" => cfg.c1 = parse_f64(line, key, value)?,
            "grid_n" => cfg.grid_n = parse_usize(line, key, value)?,
            "dt" => cfg.dt = parse_f64(line, key, value)?,
            "T" => cfg.t_final = parse_f64(line, key, value)?,
            "mode" => cfg.mode = parse_mode(line, value)?,
            "f1" => cfg.f1 = parse_nonlin(line, key, value)?,
            "f2" => cfg.f2 = parse_nonlin(line, key, value)?,
            "f3" => cfg.f3 = parse_nonlin(line, key, value)?,
            "u0" => cfg.u0 = parse_field_spec(line, key, value)?,
            "observer_u0" => cfg.observer_u0 = parse_field_spec(line, key, value)?,
            "out" => cfg.out = PathBuf::from(value),
            "seed" => cfg.seed = parse_u64(line, key, value)?,
            "noise_std" => cfg.noise_std = parse_f64(line, key, value)?,
            "workers" => {
                let w = parse_usize(line, key, value)?;
                if w == 0 {
                    return Err(ConfigError::ViolatedInvariant {
                        line,
                        detail: "workers must be at least 1".to_string(),
                    });
                }
                cfg.workers = w;
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
    }

    let line_of = |key: &str| set_lines.get(key).copied().unwrap_or(0);

    if cfg.grid_n < 51 {
        return Err(ConfigError::ViolatedInvariant {
            line: line_of("grid_n"),
            detail: format!("grid_n must be at least 51 (got {})", cfg.grid_n),
        });
    }
    if !(cfg.dt > 0.0) || cfg.dt > 0.01 {
        return Err(ConfigError::ViolatedInvariant {
            line: line_of("dt"),
            detail: format!("dt must lie in (0, 0.01] (got {})", cfg.dt),
        });
    }
    if !(cfg.t_final > 0.0) || !cfg.t_final.is_finite() {
        return Err(ConfigError::ViolatedInvariant {
            line: line_of("T"),
            detail: format!("T must be positive and finite (got {})", cfg.t_final),
        });
    }
    if !(cfg.c1 > 0.0) || !cfg.c1.is_finite() {
        return Err(ConfigError::ViolatedInvariant {
            line: line_of("c1"),
            detail: format!("c1 must be positive and finite (got {})", cfg.c1),
        });
    }
    if !(cfg.noise_std >= 0.0) || !cfg.noise_std.is_finite() {
        return Err(ConfigError::ViolatedInvariant {
            line: line_of("noise_std"),
            detail: format!("noise_std must be nonnegative and finite (got {})", cfg.noise_std),
        });
    }
    // Physical parameter validation (finiteness, elliptic resonance) happens
    // in the library constructor; surface its message on the gamma line,
    // which is where every such rejection originates.
    if let Err(e) = cfg.params() {
        return Err(ConfigError::ViolatedInvariant {
            line: line_of("gamma"),
            detail: e.to_string(),
        });
    }
    Ok(cfg)
}
