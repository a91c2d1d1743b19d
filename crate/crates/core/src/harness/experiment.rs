use sha2::{Digest, Sha256};

use crate::error::{QlbmError, Result};
use crate::harness::config::{ExperimentConfig, Mode};
use crate::lattice::{analytic_field, initial_gaussian, run_classical, CollisionMode, DensityField, VelocityField};
use crate::linear::{run_linear, LinearRunConfig};
use crate::nonlinear::{run_nonlinear, NonlinearRunConfig};
use crate::rng::SeedStream;
use crate::Backend;

/// Substream names derived from the top-level seed.
pub const LINEAR_SHOTS_STREAM: &str = "linear-shots";
pub const NONLINEAR_READOUT_STREAM: &str = "nonlinear-readout";

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub l2: f64,
    pub linf: f64,
    pub l2_relative: f64,
    pub residuals: Vec<f64>,
}

impl ErrorReport {
    pub fn between(actual: &[f64], reference: &[f64]) -> Self {
        assert_eq!(actual.len(), reference.len(), "fields differ in length");
        let residuals: Vec<f64> = actual.iter().zip(reference).map(|(a, r)| a - r).collect();
        let l2 = residuals.iter().map(|r| r * r).sum::<f64>().sqrt();
        let linf = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let ref_norm = reference.iter().map(|r| r * r).sum::<f64>().sqrt();
        let l2_relative = if ref_norm > 0.0 { l2 / ref_norm } else { l2 };
        Self { l2, linf, l2_relative, residuals }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub step: usize,
    pub quantum: Option<Vec<f64>>,
    /// Binomial standard error of the quantum field (shot backend).
    pub quantum_std_error: Option<Vec<f64>>,
    pub classical: Option<Vec<f64>>,
    pub analytic: Option<Vec<f64>>,
    /// `(label, report)`, e.g. `("quantum_vs_classical", ..)`.
    pub reports: Vec<(String, ErrorReport)>,
    /// SHA-256 of the initial field handed to every solver.
    pub initial_checksum: String,
    pub substreams: Vec<(String, u64)>,
}

impl ExperimentResult {
    pub fn report(&self, label: &str) -> Option<&ErrorReport> {
        self.reports.iter().find(|(l, _)| l == label).map(|(_, r)| r)
    }
}

pub fn field_checksum(values: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for v in values {
        hasher.update(v.to_le_bytes());
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

struct QuantumOutput {
    density: Vec<f64>,
    std_error: Option<Vec<f64>>,
}

fn run_quantum(config: &ExperimentConfig, model: CollisionMode, initial: &DensityField, seeds: &SeedStream) -> Result<QuantumOutput> {
    match model {
        CollisionMode::Linear => {
            let run = LinearRunConfig {
                pos_qubits: config.pos_qubits,
                steps: config.steps,
                u: VelocityField::Uniform(config.u),
                shots: config.shots,
                seed: seeds.substream_seed(LINEAR_SHOTS_STREAM),
                backend: config.backend,
                record: Vec::new(),
            };
            let t = run_linear(&run, initial)?;
            let rec = t.final_record();
            Ok(QuantumOutput { density: rec.density.values().to_vec(), std_error: rec.std_error.clone() })
        }
        CollisionMode::Nonlinear => {
            let run = NonlinearRunConfig {
                pos_qubits: config.pos_qubits,
                steps: config.steps,
                backend: config.backend,
                shots: config.shots,
                seed: seeds.substream_seed(NONLINEAR_READOUT_STREAM),
                update_velocity: config.update_velocity,
            };
            let records = run_nonlinear(&run, initial, &VelocityField::Uniform(config.u))?;
            let last = records.last().expect("trajectory starts at step 0");
            Ok(QuantumOutput { density: last.rho.values().to_vec(), std_error: None })
        }
    }
}

fn run_reference(config: &ExperimentConfig, model: CollisionMode, initial: &DensityField) -> Result<Vec<f64>> {
    let (rho, _) = run_classical(initial, &VelocityField::Uniform(config.u), model, config.steps, config.update_velocity)?;
    Ok(rho.into_vec())
}

/// Runs the solvers selected by `config.mode` on the Gaussian-hill initial
/// field and reports the final step.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let n = config.cells();
    let gaussian = config.gaussian();
    let initial = initial_gaussian(&gaussian, n)?;
    let checksum = field_checksum(initial.values());
    let seeds = SeedStream::new(config.seed);

    let mut result = ExperimentResult {
        config: config.clone(),
        step: config.steps,
        quantum: None,
        quantum_std_error: None,
        classical: None,
        analytic: None,
        reports: Vec::new(),
        initial_checksum: checksum.clone(),
        substreams: [LINEAR_SHOTS_STREAM, NONLINEAR_READOUT_STREAM]
            .iter()
            .map(|name| (name.to_string(), seeds.substream_seed(name)))
            .collect(),
    };
    let analytic = || analytic_field(config.steps as f64, &gaussian, config.u, n);

    match config.mode {
        Mode::LinearQ | Mode::NonlinearQ => {
            let model = config.collision_mode().expect("quantum modes carry a model");
            let q = run_quantum(config, model, &initial, &seeds)?;
            result.quantum = Some(q.density);
            result.quantum_std_error = q.std_error;
        }
        Mode::ClassicalLinear | Mode::ClassicalNonlinear => {
            let model = config.collision_mode().expect("classical modes carry a model");
            result.classical = Some(run_reference(config, model, &initial)?);
        }
        Mode::Analytic => result.analytic = Some(analytic()),
        Mode::Compare => {
            let (q, c) = rayon::join(
                || run_quantum(config, config.model, &initial, &seeds),
                || run_reference(config, config.model, &initial),
            );
            let (q, c, a) = (q?, c?, analytic());
            result.reports = vec![
                ("quantum_vs_classical".into(), ErrorReport::between(&q.density, &c)),
                ("quantum_vs_analytic".into(), ErrorReport::between(&q.density, &a)),
                ("classical_vs_analytic".into(), ErrorReport::between(&c, &a)),
            ];
            result.quantum = Some(q.density);
            result.quantum_std_error = q.std_error;
            result.classical = Some(c);
            result.analytic = Some(a);
        }
    }
    if field_checksum(initial.values()) != checksum {
        return Err(QlbmError::State("initial field changed while solvers ran".into()));
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Shots,
    Steps,
}

impl std::str::FromStr for SweepParam {
    type Err = QlbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shots" => Ok(SweepParam::Shots),
            "steps" => Ok(SweepParam::Steps),
            other => Err(QlbmError::Config(format!("cannot sweep '{other}' (expected shots or steps)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: u64,
    pub report: ErrorReport,
}

/// Runs `compare` once per value and collects the quantum-vs-classical error.
/// Sweeping shots forces the shot backend.
pub fn sweep(base: &ExperimentConfig, param: SweepParam, values: &[u64]) -> Result<Vec<SweepRow>> {
    values
        .iter()
        .map(|&value| {
            let mut config = base.clone();
            config.mode = Mode::Compare;
            match param {
                SweepParam::Shots => {
                    config.shots = value;
                    config.backend = Backend::Shots;
                }
                SweepParam::Steps => config.steps = value as usize,
            }
            let result = run_experiment(&config)?;
            let report = result.report("quantum_vs_classical").expect("compare attaches reports").clone();
            Ok(SweepRow { value, report })
        })
        .collect()
}
