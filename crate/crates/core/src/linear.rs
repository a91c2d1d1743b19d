//! Linear quantum lattice-Boltzmann scheme on a two-qubit `f`-register.
//!
//! One time step is
//!
//! 1. collision: `RY(θ0)` on `f`-qubit 0, `RY(θ1)` on `f`-qubit 1 controlled
//!    on `f`-qubit 0, then a CNOT relabelling `|11⟩_f → |10⟩_f`. Per cell this
//!    leaves `√(w_i (1 + c_i u / cs²) ρ_k)` on `|00⟩_f`, `|01⟩_f`, `|10⟩_f`;
//! 2. streaming: `|01⟩_f` shifted by +1 cell, `|10⟩_f` by -1 cell;
//! 3. mid-circuit measurement of the `f`-register, then reset to `|00⟩_f`.
//!
//! The state is encoded once; steps repeat on the same register and only the
//! final position register is read out. Every shot therefore follows one path
//! through the `3^steps` branches, and the position histogram accumulates the
//! sum over all of them, which is exactly the linear LBM density.
//!
//! # Exact backend
//!
//! A collision layer only mixes `f`-patterns inside each position cell, and the
//! conditioned shifts map `(f, k)` injectively to `(f, k')`. So after one
//! collide-and-stream layer each basis state `(f, k')` receives amplitude from
//! exactly one source cell, no two cells interfere, and the position marginal
//! is a linear function of the previous marginal. The post-measurement mixture
//! is then fully described by its position marginal, and it can be replaced by
//! the reset pure state `Σ_k √p_k |00⟩_f|k⟩` without changing any later
//! observable. [`StateVector::merge_register_branches`] performs that step.

use rayon::prelude::*;

use crate::encoding::{decode_density, decode_histogram, encode_sqrt_density, EncodedState};
use crate::error::{QlbmError, Result};
use crate::lattice::{CollisionMode, DensityField, VelocityField, VelocitySetD1Q3};
use crate::qcore::{CellAngles, CumulativeSampler, QubitLayout, ShiftDirection, ShotHistogram, StateVector};
use crate::rng::SeedStream;
use crate::Backend;

/// Shots simulated per rayon task.
const SHOT_TASK: u64 = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearCollisionAngles {
    pub theta0: f64,
    pub theta1: CellAngles,
}

/// `θ1` for a single velocity.
pub fn theta1(u: f64) -> Result<f64> {
    CollisionMode::Linear.check_velocity(u)?;
    let arg = (0.5 * (1.0 + u / VelocitySetD1Q3::CS_SQ)).clamp(0.0, 1.0);
    Ok(2.0 * arg.sqrt().acos())
}

/// `θ0 = 2 arccos √w0`; fixed by the velocity set.
pub fn theta0() -> f64 {
    2.0 * VelocitySetD1Q3::WEIGHTS[0].sqrt().acos()
}

pub fn linear_angles(u: &VelocityField, cells: usize) -> Result<LinearCollisionAngles> {
    u.check(cells, CollisionMode::Linear)?;
    let theta1 = match u {
        VelocityField::Uniform(v) => CellAngles::Uniform(theta1(*v)?),
        VelocityField::PerCell(v) => CellAngles::PerCell(v.iter().map(|&x| theta1(x)).collect::<Result<_>>()?),
    };
    Ok(LinearCollisionAngles { theta0: theta0(), theta1 })
}

fn check_layout(state: &StateVector) -> Result<QubitLayout> {
    let layout = *state.layout();
    if layout.f_qubits() != 2 {
        return Err(QlbmError::Layout(format!(
            "linear scheme needs a 2-qubit f-register, got {}",
            layout.f_qubits()
        )));
    }
    Ok(layout)
}

pub fn apply_linear_collision(state: &mut StateVector, angles: &LinearCollisionAngles) -> Result<()> {
    let layout = check_layout(state)?;
    if !state.f_register_is_reset(1e-12) {
        return Err(QlbmError::State("linear collision needs the f-register in |00⟩".into()));
    }
    let (q0, q1) = (layout.f_qubit(0), layout.f_qubit(1));
    state.apply_cell_ry(q0, &[], &CellAngles::Uniform(angles.theta0))?;
    state.apply_cell_ry(q1, &[(q0, true)], &angles.theta1)?;
    state.apply_gate(&crate::qcore::GateSpec::x(q0).control(q1, true))
}

pub fn apply_linear_streaming(state: &mut StateVector) -> Result<()> {
    let layout = check_layout(state)?;
    let (q0, q1) = (layout.f_qubit(0), layout.f_qubit(1));
    state.apply_cyclic_shift(ShiftDirection::Positive, &[(q0, true), (q1, false)])?;
    state.apply_cyclic_shift(ShiftDirection::Negative, &[(q0, false), (q1, true)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRunConfig {
    pub pos_qubits: usize,
    pub steps: usize,
    pub u: VelocityField,
    pub shots: u64,
    pub seed: u64,
    pub backend: Backend,
    /// Steps at which the density is read out; empty means the final step only.
    /// Each extra step costs a fresh shot batch on the shot backend.
    pub record: Vec<usize>,
}

impl LinearRunConfig {
    pub fn exact(pos_qubits: usize, steps: usize, u: f64) -> Self {
        Self {
            pos_qubits,
            steps,
            u: VelocityField::Uniform(u),
            shots: 1,
            seed: 0,
            backend: Backend::Exact,
            record: Vec::new(),
        }
    }

    pub fn shots(pos_qubits: usize, steps: usize, u: f64, shots: u64, seed: u64) -> Self {
        Self {
            shots,
            seed,
            backend: Backend::Shots,
            ..Self::exact(pos_qubits, steps, u)
        }
    }

    fn record_steps(&self) -> Result<Vec<usize>> {
        if self.record.is_empty() {
            return Ok(vec![self.steps]);
        }
        let mut r = self.record.clone();
        r.sort_unstable();
        r.dedup();
        if let Some(&s) = r.iter().find(|&&s| s > self.steps) {
            return Err(QlbmError::Argument(format!("record step {s} exceeds run length {}", self.steps)));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityRecord {
    pub step: usize,
    pub density: DensityField,
    /// Per-cell binomial standard error (shot backend only).
    pub std_error: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearTrajectory {
    pub norm_sq: f64,
    pub records: Vec<DensityRecord>,
}

impl LinearTrajectory {
    pub fn final_record(&self) -> &DensityRecord {
        self.records.last().expect("trajectory holds at least one record")
    }
}

/// One collide-and-stream layer.
pub fn linear_layer(state: &mut StateVector, angles: &LinearCollisionAngles) -> Result<()> {
    apply_linear_collision(state, angles)?;
    apply_linear_streaming(state)
}

pub fn run_linear(config: &LinearRunConfig, initial: &DensityField) -> Result<LinearTrajectory> {
    let layout = QubitLayout::linear(config.pos_qubits)?;
    let angles = linear_angles(&config.u, layout.num_positions())?;
    let record = config.record_steps()?;
    let encoded = encode_sqrt_density(initial, layout)?;
    match config.backend {
        Backend::Exact => run_exact(&encoded, &angles, &record),
        Backend::Shots => {
            if config.shots == 0 {
                return Err(QlbmError::Argument("shot backend needs shots >= 1".into()));
            }
            let stream = SeedStream::new(config.seed);
            let records = record
                .iter()
                .map(|&step| {
                    let hist = shot_batch(&encoded, &angles, step, config.shots, stream.substream(&format!("step-{step}")))?;
                    let dec = decode_histogram(&hist, encoded.norm_sq)?;
                    Ok(DensityRecord { step, density: dec.density, std_error: Some(dec.std_error) })
                })
                .collect::<Result<_>>()?;
            Ok(LinearTrajectory { norm_sq: encoded.norm_sq, records })
        }
    }
}

fn run_exact(encoded: &EncodedState, angles: &LinearCollisionAngles, record: &[usize]) -> Result<LinearTrajectory> {
    let mut state = encoded.state.clone();
    let mut records = Vec::with_capacity(record.len());
    let last = *record.last().unwrap_or(&0);
    let mut next = record.iter().peekable();
    for step in 0..=last {
        if step > 0 {
            linear_layer(&mut state, angles)?;
            state.merge_register_branches();
        }
        if next.peek() == Some(&&step) {
            next.next();
            records.push(DensityRecord {
                step,
                density: decode_density(&state.position_probabilities(), encoded.norm_sq)?,
                std_error: None,
            });
        }
    }
    Ok(LinearTrajectory { norm_sq: encoded.norm_sq, records })
}

/// `shots` independent executions of `steps` layers with mid-circuit
/// measure-and-reset, each ending in one position-register sample. Shot `i`
/// draws from substream `i` of `stream`.
pub fn shot_batch(
    encoded: &EncodedState,
    angles: &LinearCollisionAngles,
    steps: usize,
    shots: u64,
    stream: SeedStream,
) -> Result<ShotHistogram> {
    if shots == 0 {
        return Err(QlbmError::Argument("shots must be at least 1".into()));
    }
    let cells = encoded.state.layout().num_positions();
    let tasks = shots.div_ceil(SHOT_TASK);
    (0..tasks)
        .into_par_iter()
        .map(|t| {
            let mut hist = ShotHistogram::empty(cells);
            let mut state = encoded.state.clone();
            for shot in t * SHOT_TASK..((t + 1) * SHOT_TASK).min(shots) {
                let mut rng = stream.rng(shot);
                state.clone_from(&encoded.state);
                for _ in 0..steps {
                    linear_layer(&mut state, angles)?;
                    state.measure_register_and_reset(&mut rng)?;
                }
                let k = CumulativeSampler::new(&state.position_probabilities())?.draw(&mut rng);
                hist.counts[k] += 1;
                hist.shots += 1;
            }
            Ok(hist)
        })
        .try_reduce(
            || ShotHistogram::empty(cells),
            |mut a, b| {
                a.merge(&b);
                Ok(a)
            },
        )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{equilibrium, run_classical};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn angle_examples() {
        assert!(close(theta0(), 1.2309594173407747, 1e-15));
        assert!(close(theta1(0.0).unwrap(), std::f64::consts::FRAC_PI_2, 1e-15));
        assert!(close(theta1(0.3).unwrap(), 0.4510268117962629, 1e-15));
        assert!(matches!(theta1(0.4), Err(QlbmError::Admissibility(_))));
        assert!(close(theta1(1.0 / 3.0).unwrap(), 0.0, 1e-7));
        assert!(close(theta1(-1.0 / 3.0).unwrap(), std::f64::consts::PI, 1e-7));
    }

    #[test]
    fn collision_reproduces_linear_equilibrium() {
        let layout = QubitLayout::linear(2).unwrap();
        let field = DensityField::new(vec![0.1, 0.4, 0.2, 0.3]).unwrap();
        let enc = encode_sqrt_density(&field, layout).unwrap();
        for u in [0.0, 0.3, -0.2] {
            let mut s = enc.state.clone();
            let marginal = s.position_probabilities();
            apply_linear_collision(&mut s, &linear_angles(&VelocityField::Uniform(u), 4).unwrap()).unwrap();
            assert!(close(s.norm_sqr(), 1.0, 1e-12));
            for k in 0..4 {
                let eq = equilibrium(field.values()[k], u, CollisionMode::Linear).unwrap();
                for (f, want) in [(0b00, eq[0]), (0b01, eq[1]), (0b10, eq[2])] {
                    assert!(close(s.amplitude(f, k).norm_sqr(), want / enc.norm_sq, 1e-12));
                }
                assert!(close(s.amplitude(0b11, k).norm_sqr(), 0.0, 1e-30));
                assert!(close(s.position_probabilities()[k], marginal[k], 1e-15));
            }
        }
    }

    #[test]
    fn rest_collision_outcome_distribution() {
        let layout = QubitLayout::linear(2).unwrap();
        let enc = encode_sqrt_density(&DensityField::uniform(4, 1.0).unwrap(), layout).unwrap();
        let mut s = enc.state.clone();
        apply_linear_collision(&mut s, &linear_angles(&VelocityField::Uniform(0.0), 4).unwrap()).unwrap();
        let p = s.register_probabilities();
        assert!(close(p[0], 2.0 / 3.0, 1e-12) && close(p[1], 1.0 / 6.0, 1e-12) && close(p[2], 1.0 / 6.0, 1e-12));
    }

    #[test]
    fn collision_requires_reset_register() {
        let layout = QubitLayout::linear(2).unwrap();
        let mut s = StateVector::basis(layout, 0b01, 0).unwrap();
        let angles = linear_angles(&VelocityField::Uniform(0.1), 4).unwrap();
        assert!(matches!(apply_linear_collision(&mut s, &angles), Err(QlbmError::State(_))));
    }

    #[test]
    fn streaming_directions() {
        let layout = QubitLayout::linear(2).unwrap();
        let mut s = StateVector::basis(layout, 0b01, 1).unwrap();
        apply_linear_streaming(&mut s).unwrap();
        assert_eq!(s, StateVector::basis(layout, 0b01, 2).unwrap());
        let mut s = StateVector::basis(layout, 0b10, 0).unwrap();
        apply_linear_streaming(&mut s).unwrap();
        assert_eq!(s, StateVector::basis(layout, 0b10, 3).unwrap());
        let mut s = StateVector::basis(layout, 0b00, 2).unwrap();
        apply_linear_streaming(&mut s).unwrap();
        assert_eq!(s, StateVector::basis(layout, 0b00, 2).unwrap());
    }

    #[test]
    fn zero_steps_returns_initial() {
        let field = DensityField::new(vec![0.3, 0.1, 0.2, 0.4]).unwrap();
        let t = run_linear(&LinearRunConfig::exact(2, 0, 0.2), &field).unwrap();
        for (a, b) in t.final_record().density.values().iter().zip(field.values()) {
            assert!(close(*a, *b, 1e-15));
        }
    }

    #[test]
    fn exact_backend_matches_classical_with_per_cell_velocity() {
        let field = DensityField::new((0..8).map(|k| 0.1 + 0.05 * k as f64).collect()).unwrap();
        let u = VelocityField::PerCell(vec![0.3, -0.1, 0.0, 0.33, -0.33, 0.2, 0.1, -0.25]);
        let config = LinearRunConfig { u: u.clone(), record: vec![1, 5, 12], ..LinearRunConfig::exact(3, 12, 0.0) };
        let t = run_linear(&config, &field).unwrap();
        assert_eq!(t.records.iter().map(|r| r.step).collect::<Vec<_>>(), vec![1, 5, 12]);
        for r in &t.records {
            let (want, _) = run_classical(&field, &u, CollisionMode::Linear, r.step, false).unwrap();
            for (a, b) in r.density.values().iter().zip(want.values()) {
                assert!(close(*a, *b, 1e-12), "step {}", r.step);
            }
        }
    }

    #[test]
    fn record_beyond_run_is_rejected() {
        let field = DensityField::uniform(4, 1.0).unwrap();
        let config = LinearRunConfig { record: vec![3], ..LinearRunConfig::exact(2, 2, 0.0) };
        assert!(matches!(run_linear(&config, &field), Err(QlbmError::Argument(_))));
    }

    #[test]
    fn shot_backend_is_seeded() {
        let field = DensityField::new(vec![0.1, 0.4, 0.2, 0.3, 0.0, 0.5, 0.1, 0.2]).unwrap();
        let config = LinearRunConfig::shots(3, 4, 0.2, 20_000, 5);
        let a = run_linear(&config, &field).unwrap();
        let b = run_linear(&config, &field).unwrap();
        assert_eq!(a, b);
        let c = run_linear(&LinearRunConfig { seed: 6, ..config }, &field).unwrap();
        assert_ne!(a, c);
    }
}
