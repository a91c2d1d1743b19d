//! Experiment configuration: a flat `key = value` text format, with command
//! line flags applied on top through the same key parser.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{QlbmError, Result};
use crate::lattice::{CollisionMode, GaussianParams, VelocitySetD1Q3};
use crate::qcore::MAX_POSITION_QUBITS;
use crate::Backend;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    LinearQ,
    NonlinearQ,
    ClassicalLinear,
    ClassicalNonlinear,
    Analytic,
    Compare,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::LinearQ,
        Mode::NonlinearQ,
        Mode::ClassicalLinear,
        Mode::ClassicalNonlinear,
        Mode::Analytic,
        Mode::Compare,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Mode::LinearQ => "linear-q",
            Mode::NonlinearQ => "nonlinear-q",
            Mode::ClassicalLinear => "classical-linear",
            Mode::ClassicalNonlinear => "classical-nonlinear",
            Mode::Analytic => "analytic",
            Mode::Compare => "compare",
        }
    }
}

impl FromStr for Mode {
    type Err = QlbmError;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| QlbmError::Config(format!("unknown mode '{s}'")))
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Collision model used by `compare`.
    pub model: CollisionMode,
    pub pos_qubits: usize,
    pub steps: usize,
    pub u: f64,
    pub shots: u64,
    pub seed: u64,
    pub backend: Backend,
    pub rho0: f64,
    pub ambient: f64,
    /// Peak centre; `None` means the middle of the domain.
    pub x0: Option<f64>,
    pub sigma0: f64,
    pub diffusivity: f64,
    pub update_velocity: bool,
    pub out: PathBuf,
    pub plot: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Compare,
            model: CollisionMode::Linear,
            pos_qubits: 5,
            steps: 20,
            u: 0.3,
            shots: 900_000,
            seed: 0,
            backend: Backend::Exact,
            rho0: 0.1,
            ambient: 0.1,
            x0: None,
            sigma0: 4.0,
            diffusivity: VelocitySetD1Q3::DIFFUSIVITY,
            update_velocity: false,
            out: PathBuf::from("qlbm-out"),
            plot: false,
        }
    }
}

/// Recognized keys, in emission order.
pub const KEYS: [&str; 16] = [
    "mode", "model", "M", "steps", "u", "shots", "seed", "backend", "rho0", "ambient", "x0", "sigma0", "D",
    "update_velocity", "out", "plot",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| QlbmError::Config(format!("key '{key}': cannot parse '{value}'")))
}

impl ExperimentConfig {
    pub fn cells(&self) -> usize {
        1 << self.pos_qubits
    }

    pub fn gaussian(&self) -> GaussianParams {
        GaussianParams {
            rho0: self.rho0,
            ambient: self.ambient,
            x0: self.x0.unwrap_or((self.cells() / 2) as f64),
            sigma0: self.sigma0,
            diffusivity: self.diffusivity,
        }
    }

    /// Collision model the quantum and classical solvers of this run use.
    pub fn collision_mode(&self) -> Option<CollisionMode> {
        match self.mode {
            Mode::LinearQ | Mode::ClassicalLinear => Some(CollisionMode::Linear),
            Mode::NonlinearQ | Mode::ClassicalNonlinear => Some(CollisionMode::Nonlinear),
            Mode::Compare => Some(self.model),
            Mode::Analytic => None,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "mode" => self.mode = value.parse()?,
            "model" => self.model = value.parse()?,
            "M" => self.pos_qubits = parse_value(key, value)?,
            "steps" => self.steps = parse_value(key, value)?,
            "u" => self.u = parse_value(key, value)?,
            "shots" => self.shots = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "backend" => self.backend = value.parse()?,
            "rho0" => self.rho0 = parse_value(key, value)?,
            "ambient" => self.ambient = parse_value(key, value)?,
            "x0" => {
                self.x0 = match value {
                    "" | "mid" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "sigma0" => self.sigma0 = parse_value(key, value)?,
            "D" => self.diffusivity = parse_value(key, value)?,
            "update_velocity" => self.update_velocity = parse_value(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "plot" => self.plot = parse_value(key, value)?,
            other => return Err(QlbmError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. Blank lines and `#`
    /// comments are ignored. The result is validated.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_overrides(text, &[])
    }

    /// Like [`parse`](Self::parse), with `overrides` applied last.
    pub fn parse_with_overrides(text: &str, overrides: &[(&str, String)]) -> Result<Self> {
        let mut config = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| QlbmError::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            config.set(key.trim(), value)?;
        }
        for (key, value) in overrides {
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_POSITION_QUBITS).contains(&self.pos_qubits) {
            return Err(QlbmError::Layout(format!(
                "M must be in 1..={MAX_POSITION_QUBITS}, got {}",
                self.pos_qubits
            )));
        }
        if let Some(mode) = self.collision_mode() {
            mode.check_velocity(self.u)?;
        } else if !self.u.is_finite() {
            return Err(QlbmError::Config("u must be finite".into()));
        }
        if self.backend == Backend::Shots && self.shots == 0 {
            return Err(QlbmError::Config("shots must be >= 1 for the shot backend".into()));
        }
        if self.update_velocity && self.collision_mode() == Some(CollisionMode::Linear) {
            return Err(QlbmError::Config(
                "update_velocity needs the non-linear model; the linear scheme advects with a prescribed u".into(),
            ));
        }
        self.gaussian().validate()
    }

    /// Inverse of [`parse`](Self::parse).
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("mode", self.mode.to_string());
        put("model", self.model.to_string());
        put("M", self.pos_qubits.to_string());
        put("steps", self.steps.to_string());
        put("u", self.u.to_string());
        put("shots", self.shots.to_string());
        put("seed", self.seed.to_string());
        put("backend", self.backend.to_string());
        put("rho0", self.rho0.to_string());
        put("ambient", self.ambient.to_string());
        put("x0", self.x0.map_or_else(|| "mid".to_string(), |x| x.to_string()));
        put("sigma0", self.sigma0.to_string());
        put("D", self.diffusivity.to_string());
        put("update_velocity", self.update_velocity.to_string());
        put("out", self.out.display().to_string());
        put("plot", self.plot.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_benchmark() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!((c.rho0, c.ambient, c.u, c.sigma0), (0.1, 0.1, 0.3, 4.0));
        assert_eq!((c.steps, c.shots, c.pos_qubits), (20, 900_000, 5));
        assert_eq!(c.diffusivity, 1.0 / 6.0);
        assert_eq!(c.gaussian().x0, 16.0);
    }

    #[test]
    fn linear_velocity_bound() {
        let err = ExperimentConfig::parse("mode = linear-q\nu = 0.4").unwrap_err();
        assert!(matches!(&err, QlbmError::Admissibility(m) if m.contains("1/3")), "{err}");
        assert!(ExperimentConfig::parse("mode = nonlinear-q\nu = 0.4").is_ok());
        assert!(ExperimentConfig::parse("mode = analytic\nu = 0.9").is_ok());
        assert!(ExperimentConfig::parse("mode = compare\nmodel = nonlinear\nu = 0.55").is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ExperimentConfig::parse("M = 0"), Err(QlbmError::Layout(_))));
        assert!(matches!(ExperimentConfig::parse("colour = red"), Err(QlbmError::Config(_))));
        assert!(matches!(ExperimentConfig::parse("steps = many"), Err(QlbmError::Config(_))));
        assert!(matches!(ExperimentConfig::parse("steps"), Err(QlbmError::Config(_))));
        assert!(ExperimentConfig::parse("backend = shots\nshots = 0").is_err());
        assert!(ExperimentConfig::parse("mode = linear-q\nupdate_velocity = true").is_err());
    }

    #[test]
    fn overrides_win() {
        let c = ExperimentConfig::parse_with_overrides("steps = 5\n# note\nu = 0.1", &[("steps", "7".into())]).unwrap();
        assert_eq!(c.steps, 7);
        assert_eq!(c.u, 0.1);
    }

    #[test]
    fn kv_round_trip() {
        let mut c = ExperimentConfig::default();
        c.mode = Mode::NonlinearQ;
        c.u = -0.123456789012345;
        c.x0 = Some(3.5);
        c.backend = Backend::Shots;
        c.update_velocity = true;
        c.plot = true;
        c.out = PathBuf::from("some/dir");
        assert_eq!(ExperimentConfig::parse(&c.to_kv()).unwrap(), c);
        let d = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&d.to_kv()).unwrap(), d);
        for key in KEYS {
            assert!(d.to_kv().lines().any(|l| l.starts_with(&format!("{key} ="))));
        }
    }
}
