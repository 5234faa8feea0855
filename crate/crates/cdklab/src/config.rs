//! Experiment configuration: TOML files, flag overrides and validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cdklab_core::error::Error as CoreError;
use cdklab_core::jacobi::{Catalog, JacobiParameters};
use cdklab_core::perturbation::Distribution;
use num_complex::Complex64;
use serde::Deserialize;

use crate::parse;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Universality,
    SecondKind,
    Perturb,
    RandomPerturb,
    Stieltjes,
    Eigenvalue,
    IdentityCheck,
    Varpar,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Universality,
        Command::SecondKind,
        Command::Perturb,
        Command::RandomPerturb,
        Command::Stieltjes,
        Command::Eigenvalue,
        Command::IdentityCheck,
        Command::Varpar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Universality => "universality",
            Command::SecondKind => "second-kind",
            Command::Perturb => "perturb",
            Command::RandomPerturb => "random-perturb",
            Command::Stieltjes => "stieltjes",
            Command::Eigenvalue => "eigenvalue",
            Command::IdentityCheck => "identity-check",
            Command::Varpar => "varpar",
        }
    }

    fn uses_kernel_grid(self) -> bool {
        matches!(self, Command::Universality | Command::SecondKind | Command::Perturb | Command::RandomPerturb)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown command {s:?}"))
    }
}

/// What a kernel row measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    ByN,
    ByDiag,
    SecondKind,
    Mixed,
    Expansion,
    Boundary,
    Wronskian,
    Eigenvalue,
    Identity,
    Varpar,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::ByN => "by_n",
            Mode::ByDiag => "by_diag",
            Mode::SecondKind => "second_kind",
            Mode::Mixed => "mixed",
            Mode::Expansion => "expansion",
            Mode::Boundary => "boundary",
            Mode::Wronskian => "wronskian",
            Mode::Eigenvalue => "eigenvalue",
            Mode::Identity => "identity",
            Mode::Varpar => "varpar",
        }
    }

    fn allowed(command: Command) -> &'static [Mode] {
        match command {
            Command::Universality => &[Mode::ByN, Mode::ByDiag],
            Command::SecondKind => &[Mode::SecondKind],
            Command::Perturb => &[Mode::ByN, Mode::ByDiag, Mode::Mixed, Mode::Expansion],
            Command::RandomPerturb => &[Mode::ByDiag, Mode::ByN],
            Command::Stieltjes => &[Mode::Boundary],
            Command::Eigenvalue => &[Mode::Eigenvalue],
            Command::IdentityCheck => &[Mode::Identity],
            Command::Varpar => &[Mode::Varpar],
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format {s:?} (expected csv or json)")),
        }
    }
}

/// A scalar, a list, or a text form such as `"512..4096"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Seq<T> {
    One(T),
    List(Vec<T>),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    Text(String),
    Pairs(Vec<String>),
}

/// Configuration as written: every key optional, flags layered on top.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment_id: Option<String>,
    pub command: Option<String>,
    pub measure: Option<String>,
    pub head_a: Option<Vec<f64>>,
    pub head_b: Option<Vec<f64>>,
    pub tail_a: Option<f64>,
    pub tail_b: Option<f64>,
    pub perturbation: Option<String>,
    pub beta1: Option<f64>,
    pub betas: Option<Vec<f64>>,
    pub amplitude: Option<f64>,
    pub exponent: Option<f64>,
    pub dist: Option<String>,
    pub seeds: Option<Seq<u64>>,
    pub horizon: Option<usize>,
    pub x0: Option<Seq<f64>>,
    pub n: Option<Seq<usize>>,
    pub grid: Option<GridValue>,
    pub mode: Option<String>,
    pub rho: Option<f64>,
    pub a: Option<String>,
    pub b: Option<String>,
    pub quad_tol: Option<f64>,
    pub bracket: Option<Vec<f64>>,
    pub l2_n: Option<usize>,
    pub l2_rel_tol: Option<f64>,
    pub tolerance: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub threads: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),* $(,)?) => {
        RawConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RawConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| locate(text, s.start)).unwrap_or_else(|| "config".into());
            ConfigError::new(field, e.message().to_string())
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Keys set in `top` win.
    pub fn overlay(self, top: RawConfig) -> RawConfig {
        let base = self;
        overlay!(base, top;
            experiment_id, command, measure, head_a, head_b, tail_a, tail_b, perturbation, beta1, betas,
            amplitude, exponent, dist, seeds, horizon, x0, n, grid, mode, rho, a, b, quad_tol, bracket,
            l2_n, l2_rel_tol, tolerance, out, format, threads,
        )
    }
}

/// The key on the line containing byte `offset`, for error messages.
fn locate(text: &str, offset: usize) -> String {
    let start = text[..offset.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = &text[start..];
    match line.split_once('=') {
        Some((key, _)) if !key.trim().is_empty() && !key.contains('\n') => key.trim().to_string(),
        _ => "config".into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    pub name: String,
    pub params: JacobiParameters,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    None,
    RankOne {
        beta1: f64,
    },
    Diagonal {
        betas: Vec<f64>,
    },
    /// Deterministic `beta_k = c k^-gamma` for `k <= horizon`.
    PowerLaw {
        amplitude: f64,
        exponent: f64,
        horizon: usize,
    },
    Random {
        amplitude: f64,
        exponent: f64,
        distribution: Distribution,
        horizon: usize,
    },
}

impl Perturbation {
    pub fn label(&self) -> String {
        match self {
            Perturbation::None => "none".into(),
            Perturbation::RankOne { beta1 } => format!("rank_one(beta1={beta1})"),
            Perturbation::Diagonal { betas } => format!("diagonal(len={})", betas.len()),
            Perturbation::PowerLaw { amplitude, exponent, horizon } => {
                format!("power_law(c={amplitude};gamma={exponent};len={horizon})")
            }
            Perturbation::Random { amplitude, exponent, distribution, horizon } => {
                format!("random_diagonal({distribution};c={amplitude};gamma={exponent};len={horizon})")
            }
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Perturbation::Random { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub id: String,
    pub command: Command,
    pub measure: Measure,
    pub perturbation: Perturbation,
    /// Empty unless the perturbation is random.
    pub seeds: Vec<u64>,
    pub x0: Vec<f64>,
    pub n: Vec<usize>,
    pub grid: Vec<(Complex64, Complex64)>,
    pub mode: Mode,
    pub rho: Option<f64>,
    pub a: Option<Complex64>,
    pub b: Option<Complex64>,
    pub quad_tol: f64,
    pub bracket: Option<(f64, f64)>,
    pub l2_n: usize,
    pub l2_rel_tol: f64,
    pub tolerance: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
}

fn seq<T: Copy>(
    value: Option<Seq<T>>,
    field: &str,
    text: fn(&str) -> Result<Vec<T>, String>,
) -> Result<Vec<T>, ConfigError> {
    match value {
        None => Ok(Vec::new()),
        Some(Seq::One(v)) => Ok(vec![v]),
        Some(Seq::List(v)) => Ok(v),
        Some(Seq::Text(s)) => text(&s).map_err(|m| ConfigError::new(field, m)),
    }
}

fn finite(v: f64, field: &str) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(field, "must be finite"))
    }
}

fn positive(v: f64, field: &str) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(field, "must be positive and finite"))
    }
}

fn measure(raw: &RawConfig) -> Result<Measure, ConfigError> {
    let name = raw.measure.clone().unwrap_or_else(|| "free".into());
    if name == "custom" {
        let tail_a = raw.tail_a.ok_or_else(|| ConfigError::new("tail_a", "required for a custom measure"))?;
        let head_a = raw.head_a.clone().unwrap_or_default();
        let head_b = raw.head_b.clone().unwrap_or_default();
        let params = JacobiParameters::new(head_a, head_b, tail_a, raw.tail_b.unwrap_or(0.0)).map_err(|e| match e {
            CoreError::NonPositiveA { index, value } => {
                let field = if index <= raw.head_a.as_ref().map_or(0, Vec::len) {
                    format!("head_a[{}]", index - 1)
                } else {
                    "tail_a".into()
                };
                ConfigError::new(field, format!("must be positive, got {value}"))
            }
            CoreError::NonFinite { name } => ConfigError::new(name, "must be finite"),
            other => ConfigError::new("measure", other.to_string()),
        })?;
        return Ok(Measure { name, params });
    }
    for key in [("head_a", raw.head_a.is_some()), ("head_b", raw.head_b.is_some())] {
        if key.1 {
            return Err(ConfigError::new(key.0, "only used with measure = \"custom\""));
        }
    }
    if raw.tail_a.is_some() || raw.tail_b.is_some() {
        let field = if raw.tail_a.is_some() { "tail_a" } else { "tail_b" };
        return Err(ConfigError::new(field, "only used with measure = \"custom\""));
    }
    let catalog: Catalog = name
        .parse()
        .map_err(|_| ConfigError::new("measure", format!("unknown measure {name:?} (free, chebyshev1, custom)")))?;
    Ok(Measure { name, params: JacobiParameters::catalog(catalog) })
}

fn perturbation(raw: &RawConfig, command: Command, max_n: usize) -> Result<Perturbation, ConfigError> {
    let kind = match raw.perturbation.as_deref() {
        Some(k) => k.to_string(),
        None if raw.beta1.is_some() => "rank_one".into(),
        None if raw.betas.is_some() => "diagonal".into(),
        None if command == Command::RandomPerturb || raw.dist.is_some() => "random_diagonal".into(),
        None if raw.amplitude.is_some() => "power_law".into(),
        None => "none".into(),
    };
    let default_horizon = (2 * max_n).max(1);
    let horizon = |field: &str| -> Result<usize, ConfigError> {
        match raw.horizon {
            Some(h) if h < max_n => Err(ConfigError::new("horizon", format!("{h} is below the largest n ({max_n})"))),
            Some(0) => Err(ConfigError::new(field, "must be at least 1")),
            Some(h) => Ok(h),
            None => Ok(default_horizon),
        }
    };
    let p = match kind.as_str() {
        "none" => Perturbation::None,
        "rank_one" => Perturbation::RankOne {
            beta1: finite(raw.beta1.ok_or_else(|| ConfigError::new("beta1", "required for rank_one"))?, "beta1")?,
        },
        "diagonal" => {
            let betas = raw.betas.clone().ok_or_else(|| ConfigError::new("betas", "required for diagonal"))?;
            if betas.is_empty() {
                return Err(ConfigError::new("betas", "must not be empty"));
            }
            for (i, b) in betas.iter().enumerate() {
                finite(*b, &format!("betas[{i}]"))?;
            }
            Perturbation::Diagonal { betas }
        }
        "power_law" => Perturbation::PowerLaw {
            amplitude: finite(raw.amplitude.ok_or_else(|| ConfigError::new("amplitude", "required"))?, "amplitude")?,
            exponent: positive(raw.exponent.ok_or_else(|| ConfigError::new("exponent", "required"))?, "exponent")?,
            horizon: horizon("horizon")?,
        },
        "random_diagonal" => Perturbation::Random {
            amplitude: positive(raw.amplitude.ok_or_else(|| ConfigError::new("amplitude", "required"))?, "amplitude")?,
            exponent: positive(raw.exponent.ok_or_else(|| ConfigError::new("exponent", "required"))?, "exponent")?,
            distribution: raw
                .dist
                .as_deref()
                .unwrap_or("rademacher")
                .parse()
                .map_err(|_| ConfigError::new("dist", "expected rademacher, uniform_symmetric or gaussian"))?,
            horizon: horizon("horizon")?,
        },
        other => {
            return Err(ConfigError::new(
                "perturbation",
                format!("unknown kind {other:?} (none, rank_one, diagonal, power_law, random_diagonal)"),
            ))
        }
    };
    Ok(p)
}

impl RawConfig {
    pub fn validate(self) -> Result<Experiment, ConfigError> {
        let command: Command = self
            .command
            .as_deref()
            .ok_or_else(|| ConfigError::new("command", "missing"))?
            .parse()
            .map_err(|m: String| ConfigError::new("command", m))?;
        let measure = measure(&self)?;

        let x0 = seq(self.x0.clone(), "x0", parse::floats)?;
        for (i, x) in x0.iter().enumerate() {
            finite(*x, &format!("x0[{i}]"))?;
        }
        let n = seq(self.n.clone(), "n", parse::ladder)?;
        if n.contains(&0) {
            return Err(ConfigError::new("n", "entries must be at least 1"));
        }
        if n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::new("n", "ladder must be strictly increasing"));
        }
        let needs_points = !matches!(command, Command::IdentityCheck | Command::Eigenvalue);
        if needs_points && x0.is_empty() {
            return Err(ConfigError::new("x0", "must list at least one point"));
        }
        let needs_n = command.uses_kernel_grid() || command == Command::Varpar;
        if needs_n && n.is_empty() {
            return Err(ConfigError::new("n", "ladder must not be empty"));
        }
        if command == Command::Varpar && n.iter().any(|&k| k < 2) {
            return Err(ConfigError::new("n", "variation of parameters needs n >= 2"));
        }
        let max_n = n.iter().copied().max().unwrap_or(0);

        let grid = match &self.grid {
            None => cdklab_core::kernel::standard_grid(),
            Some(GridValue::Text(s)) => parse::grid(s).map_err(|m| ConfigError::new("grid", m))?,
            Some(GridValue::Pairs(ps)) => ps
                .iter()
                .enumerate()
                .map(|(i, p)| parse::pair(p).map_err(|m| ConfigError::new(format!("grid[{i}]"), m)))
                .collect::<Result<_, _>>()?,
        };
        if command.uses_kernel_grid() && grid.is_empty() {
            return Err(ConfigError::new("grid", "must contain at least one (a, b) pair"));
        }

        let mode = match self.mode.as_deref() {
            None => Mode::allowed(command)[0],
            Some(m) => *Mode::allowed(command).iter().find(|x| x.name() == m).ok_or_else(|| {
                let names: Vec<&str> = Mode::allowed(command).iter().map(|x| x.name()).collect();
                ConfigError::new("mode", format!("{m:?} is not valid for {command} (expected {})", names.join(", ")))
            })?,
        };

        let perturbation = perturbation(&self, command, max_n)?;
        match (command, &perturbation) {
            (Command::RandomPerturb, p) if !p.is_random() => {
                return Err(ConfigError::new("perturbation", "random-perturb needs a random_diagonal perturbation"))
            }
            (Command::Perturb, Perturbation::None) if mode != Mode::Mixed => {
                return Err(ConfigError::new("perturbation", "perturb needs a perturbation (or mode = \"mixed\")"))
            }
            (Command::Perturb, p) if mode == Mode::Expansion && !matches!(p, Perturbation::RankOne { .. }) => {
                return Err(ConfigError::new("perturbation", "mode \"expansion\" needs a rank_one perturbation"))
            }
            (Command::Eigenvalue, p) if !matches!(p, Perturbation::RankOne { .. }) => {
                return Err(ConfigError::new("beta1", "eigenvalue needs a rank_one perturbation"))
            }
            (Command::Varpar, Perturbation::None) => {
                return Err(ConfigError::new("perturbation", "varpar needs a perturbation"))
            }
            _ => {}
        }
        let seeds = seq(self.seeds.clone(), "seeds", parse::seeds)?;
        let seeds = if perturbation.is_random() {
            if seeds.is_empty() {
                vec![1]
            } else {
                seeds
            }
        } else if !seeds.is_empty() {
            return Err(ConfigError::new("seeds", "only used with random_diagonal perturbations"));
        } else {
            seeds
        };

        let rho = self.rho.map(|r| positive(r, "rho")).transpose()?;
        let a = self.a.as_deref().map(|s| parse::complex(s).map_err(|m| ConfigError::new("a", m))).transpose()?;
        let b = self.b.as_deref().map(|s| parse::complex(s).map_err(|m| ConfigError::new("b", m))).transpose()?;
        if command == Command::IdentityCheck {
            if rho.is_none() {
                return Err(ConfigError::new("rho", "required for identity-check"));
            }
            match a {
                None => return Err(ConfigError::new("a", "required for identity-check")),
                Some(a) if !(a.im > 0.0) => return Err(ConfigError::new("a", "needs Im a > 0")),
                _ => {}
            }
            match b {
                None => return Err(ConfigError::new("b", "required for identity-check")),
                Some(b) if !(b.im < 0.0) => return Err(ConfigError::new("b", "needs Im b < 0")),
                _ => {}
            }
        }
        let quad_tol = positive(self.quad_tol.unwrap_or(cdklab_core::identity::DEFAULT_QUAD_TOL), "quad_tol")?;
        let bracket = match self.bracket.as_deref() {
            None => None,
            Some([lo, hi]) if lo < hi && lo.is_finite() && hi.is_finite() => Some((*lo, *hi)),
            Some(_) => return Err(ConfigError::new("bracket", "expected [lo, hi] with lo < hi")),
        };
        let l2_n = self.l2_n.unwrap_or(10_000);
        if l2_n == 0 {
            return Err(ConfigError::new("l2_n", "must be at least 1"));
        }
        let l2_rel_tol = positive(self.l2_rel_tol.unwrap_or(0.01), "l2_rel_tol")?;
        let tolerance = self.tolerance.map(|t| positive(t, "tolerance")).transpose()?;
        let format = match self.format.as_deref() {
            None => match self.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
                Some("json") => Format::Json,
                _ => Format::Csv,
            },
            Some(f) => f.parse().map_err(|m: String| ConfigError::new("format", m))?,
        };
        if self.threads == Some(0) {
            return Err(ConfigError::new("threads", "must be at least 1"));
        }

        Ok(Experiment {
            id: self.experiment_id.unwrap_or_else(|| command.name().to_string()),
            command,
            measure,
            perturbation,
            seeds,
            x0,
            n,
            grid,
            mode,
            rho,
            a,
            b,
            quad_tol,
            bracket,
            l2_n,
            l2_rel_tol,
            tolerance,
            out: self.out,
            format,
            threads: self.threads,
        })
    }
}
