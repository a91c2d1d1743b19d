//! Non-linear hybrid quantum lattice-Boltzmann scheme on a three-qubit
//! `f`-register.
//!
//! The D1Q3 quadratic equilibrium is split into square-root terms,
//!
//! ```text
//! √f0      = √ρ √(w0 (1 - 3/2 u²))
//! √f1,u + √f1,c = √ρ √(3/4 w1) (u + 1/2) + √ρ √(1/4 w1)
//! √f2,u + √f2,c = √ρ √(3/4 w2) (u - 1/2) + √ρ √(1/4 w2)
//! ```
//!
//! with the velocity parts scaled by an extra `1/√4`. After the collision
//! block the per-cell amplitudes (times `√ρ_k`) are
//!
//! | label   | amplitude                         | role       |
//! |---------|-----------------------------------|------------|
//! | `|000⟩` | `√(w0 (1 - 3/2 u²))`              | `f0`       |
//! | `|001⟩` | `√(3/2 w0) u`                     | discarded  |
//! | `|010⟩` | `√(w1/4)`                         | `f1,c`     |
//! | `|011⟩` | `√(w2/4)`                         | `f2,c`     |
//! | `|100⟩` | `√(3/4 w1) (u + 1/2)`             | `f1,u / 4` |
//! | `|101⟩` | `√(3/4 w1) √(1 - (u + 1/2)²)`     | discarded  |
//! | `|110⟩` | `√(3/4 w2) (u - 1/2)`             | `f2,u / 4` |
//! | `|111⟩` | `√(3/4 w2) √(1 - (u - 1/2)²)`     | discarded  |
//!
//! `|010⟩` and `|100⟩` stream to the right, `|011⟩` and `|110⟩` to the left.
//! The state is then read out completely, the factor 4 is restored on `|100⟩`
//! and `|110⟩`, and the moments are formed classically before re-encoding for
//! the next step.

use crate::encoding::encode_sqrt_density;
use crate::error::{QlbmError, Result};
use crate::lattice::{CollisionMode, DensityField, VelocityField, VelocitySetD1Q3};
use crate::qcore::{CellAngles, GateSpec, QubitLayout, ShiftDirection, StateVector};
use crate::rng::SeedStream;
use crate::Backend;

const F0: usize = 0b000;
const F1_CONST: usize = 0b010;
const F2_CONST: usize = 0b011;
const F1_VEL: usize = 0b100;
const F2_VEL: usize = 0b110;
/// Labels carrying normalization filler only.
pub const DISCARDED: [usize; 3] = [0b001, 0b101, 0b111];
/// Weight restored on the velocity-dependent labels at readout.
pub const VELOCITY_PART_FACTOR: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearAngles {
    pub theta0: f64,
    pub theta1: CellAngles,
    pub theta2: f64,
    pub theta3: CellAngles,
    pub theta4: CellAngles,
}

/// `(θ1, θ3, θ4)` for one velocity.
pub fn velocity_angles(u: f64) -> Result<[f64; 3]> {
    if !u.is_finite() {
        return Err(QlbmError::Admissibility(format!("u = {u} is not finite")));
    }
    let s = 1.5f64.sqrt() * u;
    if s.abs() > 1.0 {
        return Err(QlbmError::Admissibility(format!("θ1 = 2 asin(√(3/2) u) undefined: |√(3/2) · {u}| > 1")));
    }
    if (u + 0.5).abs() > 1.0 {
        return Err(QlbmError::Admissibility(format!("θ3 = 2 acos(u + 1/2) undefined: |{u} + 0.5| > 1")));
    }
    if (u - 0.5).abs() > 1.0 {
        return Err(QlbmError::Admissibility(format!("θ4 = 2 acos(u - 1/2) undefined: |{u} - 0.5| > 1")));
    }
    Ok([2.0 * s.asin(), 2.0 * (u + 0.5).acos(), 2.0 * (u - 0.5).acos()])
}

pub fn nonlinear_angles(u: &VelocityField, cells: usize) -> Result<NonlinearAngles> {
    let (theta1, theta3, theta4) = match u {
        VelocityField::Uniform(v) => {
            let [a, b, c] = velocity_angles(*v)?;
            (CellAngles::Uniform(a), CellAngles::Uniform(b), CellAngles::Uniform(c))
        }
        VelocityField::PerCell(v) => {
            if v.len() != cells {
                return Err(QlbmError::Layout(format!("velocity field has {} cells, expected {cells}", v.len())));
            }
            let mut t = [Vec::with_capacity(cells), Vec::with_capacity(cells), Vec::with_capacity(cells)];
            for (k, &x) in v.iter().enumerate() {
                let a = velocity_angles(x).map_err(|e| QlbmError::Admissibility(format!("cell {k}: {e}")))?;
                for i in 0..3 {
                    t[i].push(a[i]);
                }
            }
            let [a, b, c] = t;
            (CellAngles::PerCell(a), CellAngles::PerCell(b), CellAngles::PerCell(c))
        }
    };
    Ok(NonlinearAngles {
        theta0: 2.0 * VelocitySetD1Q3::WEIGHTS[0].sqrt().acos(),
        theta1,
        theta2: 2.0 * 0.25f64.sqrt().acos(),
        theta3,
        theta4,
    })
}

fn check_layout(state: &StateVector) -> Result<QubitLayout> {
    let layout = *state.layout();
    if layout.f_qubits() != 3 {
        return Err(QlbmError::Layout(format!(
            "non-linear scheme needs a 3-qubit f-register, got {}",
            layout.f_qubits()
        )));
    }
    Ok(layout)
}

pub const COLLISION_STAGES: usize = 8;

/// Applies stage `stage` (1..=8) of the collision block. Qubits `a`, `b`, `c`
/// are `f`-qubits 0, 1, 2, i.e. the label is `|c b a⟩`.
pub fn apply_collision_stage(state: &mut StateVector, angles: &NonlinearAngles, stage: usize) -> Result<()> {
    let layout = check_layout(state)?;
    let (a, b, c) = (layout.f_qubit(0), layout.f_qubit(1), layout.f_qubit(2));
    match stage {
        // |000⟩ → √w0 |000⟩ + √w12 |001⟩
        1 => state.apply_gate(&GateSpec::ry(angles.theta0, a)),
        // |001⟩ → |010⟩
        2 => state.apply_gates(&[GateSpec::x(b).control(a, true), GateSpec::x(a).control(b, true)]),
        // split the rest population: |000⟩ → |000⟩, |001⟩
        3 => state.apply_cell_ry(a, &[(b, false), (c, false)], &angles.theta1),
        // |010⟩ → 1/2 |010⟩ + √3/2 |011⟩
        4 => state.apply_gate(&GateSpec::ry(angles.theta2, a).controls(&[(b, true), (c, false)])),
        // |011⟩ → |100⟩
        5 => state.apply_gates(&[
            GateSpec::x(c).controls(&[(a, true), (b, true)]),
            GateSpec::x(a).control(c, true),
            GateSpec::x(b).control(c, true),
        ]),
        // H within |010⟩ and |100⟩
        6 => state.apply_gates(&[
            GateSpec::h(a).controls(&[(b, true), (c, false)]),
            GateSpec::h(a).controls(&[(b, false), (c, true)]),
        ]),
        // |101⟩ → |110⟩
        7 => state.apply_gates(&[
            GateSpec::x(b).controls(&[(c, true), (a, true)]),
            GateSpec::x(a).controls(&[(c, true), (b, true)]),
        ]),
        // velocity factors on |100⟩ and |110⟩
        8 => {
            state.apply_cell_ry(a, &[(b, false), (c, true)], &angles.theta3)?;
            state.apply_cell_ry(a, &[(b, true), (c, true)], &angles.theta4)
        }
        other => Err(QlbmError::Argument(format!("collision stage {other} does not exist (1..=8)"))),
    }
}

pub fn apply_nonlinear_collision(state: &mut StateVector, angles: &NonlinearAngles) -> Result<()> {
    check_layout(state)?;
    if !state.f_register_is_reset(1e-12) {
        return Err(QlbmError::State("non-linear collision needs the f-register in |000⟩".into()));
    }
    for stage in 1..=COLLISION_STAGES {
        apply_collision_stage(state, angles, stage)?;
    }
    Ok(())
}

fn label_controls(layout: &QubitLayout, label: usize) -> Vec<(usize, bool)> {
    (0..layout.f_qubits()).map(|j| (layout.f_qubit(j), label >> j & 1 == 1)).collect()
}

pub fn apply_nonlinear_streaming(state: &mut StateVector) -> Result<()> {
    let layout = check_layout(state)?;
    for label in [F1_CONST, F1_VEL] {
        state.apply_cyclic_shift(ShiftDirection::Positive, &label_controls(&layout, label))?;
    }
    for label in [F2_CONST, F2_VEL] {
        state.apply_cyclic_shift(ShiftDirection::Negative, &label_controls(&layout, label))?;
    }
    Ok(())
}

/// Classical postprocessing map from full-register probabilities to the
/// distribution functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutLedger {
    pub norm_sq: f64,
}

impl ReadoutLedger {
    /// `(label, weight)` pairs summed into `f0`, `f1`, `f2`.
    pub const MAP: [&'static [(usize, f64)]; 3] = [
        &[(F0, 1.0)],
        &[(F1_VEL, VELOCITY_PART_FACTOR), (F1_CONST, 1.0)],
        &[(F2_VEL, VELOCITY_PART_FACTOR), (F2_CONST, 1.0)],
    ];
}

/// `probabilities` is indexed like the amplitudes of a non-linear layout.
pub fn readout_distributions(probabilities: &[f64], layout: &QubitLayout, ledger: ReadoutLedger) -> Result<[Vec<f64>; 3]> {
    if layout.f_qubits() != 3 || probabilities.len() != layout.dim() {
        return Err(QlbmError::Layout("probabilities do not match a 3-qubit f-register layout".into()));
    }
    let n = layout.num_positions();
    let field = |terms: &[(usize, f64)]| -> Vec<f64> {
        (0..n)
            .map(|k| ledger.norm_sq * terms.iter().map(|&(f, w)| w * probabilities[layout.index(f, k)]).sum::<f64>())
            .collect()
    };
    Ok([
        field(ReadoutLedger::MAP[0]),
        field(ReadoutLedger::MAP[1]),
        field(ReadoutLedger::MAP[2]),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearRunConfig {
    pub pos_qubits: usize,
    pub steps: usize,
    pub backend: Backend,
    /// Shots per step on the shot backend.
    pub shots: u64,
    pub seed: u64,
    /// Recompute `u` from the first moment after every step. Off: `u` stays
    /// prescribed (advection-diffusion).
    pub update_velocity: bool,
}

impl NonlinearRunConfig {
    pub fn exact(pos_qubits: usize, steps: usize) -> Self {
        Self { pos_qubits, steps, backend: Backend::Exact, shots: 1, seed: 0, update_velocity: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroRecord {
    pub step: usize,
    pub rho: DensityField,
    pub u: VelocityField,
}

/// One hybrid step: encode, collide, stream, read out, take moments.
pub fn nonlinear_step(
    rho: &DensityField,
    u: &VelocityField,
    layout: QubitLayout,
    readout: Readout,
    update_velocity: bool,
) -> Result<(DensityField, VelocityField)> {
    let angles = nonlinear_angles(u, layout.num_positions())?;
    let encoded = encode_sqrt_density(rho, layout)?;
    let mut state = encoded.state;
    apply_nonlinear_collision(&mut state, &angles)?;
    apply_nonlinear_streaming(&mut state)?;
    let probabilities = match readout {
        Readout::Exact => state.basis_probabilities(),
        Readout::Shots { shots, seed } => state.sample_basis(shots, seed)?.frequencies(),
    };
    let f = readout_distributions(&probabilities, &layout, ReadoutLedger { norm_sq: encoded.norm_sq })?;
    let n = layout.num_positions();
    let rho_new: Vec<f64> = (0..n).map(|k| f[0][k] + f[1][k] + f[2][k]).collect();
    let u_new = if update_velocity {
        let mut v = Vec::with_capacity(n);
        for k in 0..n {
            if rho_new[k] <= 0.0 {
                return Err(QlbmError::Degeneracy(format!("cell {k} has zero density; velocity undefined")));
            }
            v.push((f[1][k] - f[2][k]) / rho_new[k]);
        }
        VelocityField::PerCell(v)
    } else {
        u.clone()
    };
    Ok((DensityField::new(rho_new)?, u_new))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Readout {
    Exact,
    Shots { shots: u64, seed: u64 },
}

/// Hybrid loop; returns the macroscopic state after every step, starting with
/// step 0.
pub fn run_nonlinear(config: &NonlinearRunConfig, rho: &DensityField, u: &VelocityField) -> Result<Vec<MacroRecord>> {
    let layout = QubitLayout::nonlinear(config.pos_qubits)?;
    if rho.len() != layout.num_positions() {
        return Err(QlbmError::Layout(format!(
            "field has {} cells, layout holds {}",
            rho.len(),
            layout.num_positions()
        )));
    }
    u.check(rho.len(), CollisionMode::Nonlinear)?;
    if config.backend == Backend::Shots && config.shots == 0 {
        return Err(QlbmError::Argument("shot backend needs shots >= 1".into()));
    }
    let stream = SeedStream::new(config.seed).substream("nonlinear-readout");
    let mut records = vec![MacroRecord { step: 0, rho: rho.clone(), u: u.clone() }];
    for step in 1..=config.steps {
        let prev = records.last().expect("non-empty");
        let readout = match config.backend {
            Backend::Exact => Readout::Exact,
            Backend::Shots => Readout::Shots { shots: config.shots, seed: stream.substream_seed(&format!("step-{step}")) },
        };
        let (rho, u) = nonlinear_step(&prev.rho, &prev.u, layout, readout, config.update_velocity)
            .map_err(|e| match e {
                QlbmError::Admissibility(m) => QlbmError::Admissibility(format!("step {step}: {m}")),
                QlbmError::Degeneracy(m) => QlbmError::Degeneracy(format!("step {step}: {m}")),
                other => other,
            })?;
        records.push(MacroRecord { step, rho, u });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{equilibrium, run_classical};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn single_cell(u: f64) -> (StateVector, NonlinearAngles) {
        let layout = QubitLayout::nonlinear(1).unwrap();
        let rho = DensityField::new(vec![1.0, 0.0]).unwrap();
        let enc = encode_sqrt_density(&rho, layout).unwrap();
        (enc.state, nonlinear_angles(&VelocityField::Uniform(u), 2).unwrap())
    }

    /// Squared amplitude per label at cell 0.
    fn probs(s: &StateVector) -> Vec<f64> {
        (0..8).map(|f| s.amplitude(f, 0).norm_sqr()).collect()
    }

    #[test]
    fn angle_examples() {
        let [t1, t3, t4] = velocity_angles(0.0).unwrap();
        assert_eq!(t1, 0.0);
        assert!(close(t3, 2.0 * std::f64::consts::PI / 3.0, 1e-15));
        assert!(close(t4, 4.0 * std::f64::consts::PI / 3.0, 1e-15));
        let [t1, t3, t4] = velocity_angles(0.3).unwrap();
        assert!(close(t1, 0.7524743761633367, 1e-15));
        assert!(close(t3, 1.2870022175865685, 1e-15));
        assert!(close(t4, 3.544308495170455, 1e-15));
        let a = nonlinear_angles(&VelocityField::Uniform(0.3), 4).unwrap();
        assert!(close(a.theta0, 1.2309594173407747, 1e-15));
        assert!(close(a.theta2, 2.0943951023931957, 1e-15));
        assert!(matches!(velocity_angles(0.9), Err(QlbmError::Admissibility(m)) if m.contains("θ1")));
        assert!(matches!(velocity_angles(0.6), Err(QlbmError::Admissibility(m)) if m.contains("θ3")));
        assert!(matches!(velocity_angles(-0.6), Err(QlbmError::Admissibility(m)) if m.contains("θ4")));
        assert!(velocity_angles(0.5).is_ok() && velocity_angles(-0.5).is_ok());
    }

    #[test]
    fn stages_reproduce_intermediate_states() {
        let u = 0.3;
        let [w0, w1, w2] = VelocitySetD1Q3::WEIGHTS;
        let w12 = w1 + w2;
        let (mut s, a) = single_cell(u);
        let expect = |s: &StateVector, want: &[(usize, f64)]| {
            let p = probs(s);
            let mut full = [0.0; 8];
            for &(f, v) in want {
                full[f] = v;
            }
            for f in 0..8 {
                assert!(close(p[f], full[f], 1e-14), "label {f:03b}: {} vs {}", p[f], full[f]);
            }
        };
        apply_collision_stage(&mut s, &a, 1).unwrap();
        expect(&s, &[(0b000, w0), (0b001, w12)]);
        apply_collision_stage(&mut s, &a, 2).unwrap();
        expect(&s, &[(0b000, w0), (0b010, w12)]);
        apply_collision_stage(&mut s, &a, 3).unwrap();
        expect(&s, &[(0b000, w0 * (1.0 - 1.5 * u * u)), (0b001, 1.5 * w0 * u * u), (0b010, w12)]);
        apply_collision_stage(&mut s, &a, 4).unwrap();
        let after4 = [(0b000, w0 * (1.0 - 1.5 * u * u)), (0b001, 1.5 * w0 * u * u), (0b010, w12 / 4.0), (0b011, 0.75 * w12)];
        expect(&s, &after4);
        apply_collision_stage(&mut s, &a, 5).unwrap();
        expect(&s, &[after4[0], after4[1], after4[2], (0b100, 0.75 * w12)]);
        apply_collision_stage(&mut s, &a, 6).unwrap();
        let after6 = [
            after4[0],
            after4[1],
            (0b010, w1 / 4.0),
            (0b011, w2 / 4.0),
            (0b100, 0.75 * w1),
            (0b101, 0.75 * w2),
        ];
        expect(&s, &after6);
        apply_collision_stage(&mut s, &a, 7).unwrap();
        expect(&s, &[after6[0], after6[1], after6[2], after6[3], after6[4], (0b110, 0.75 * w2)]);
        apply_collision_stage(&mut s, &a, 8).unwrap();
        expect(
            &s,
            &[
                after6[0],
                after6[1],
                after6[2],
                after6[3],
                (0b100, 0.75 * w1 * (u + 0.5).powi(2)),
                (0b101, 0.75 * w1 * (1.0 - (u + 0.5).powi(2))),
                (0b110, 0.75 * w2 * (u - 0.5).powi(2)),
                (0b111, 0.75 * w2 * (1.0 - (u - 0.5).powi(2))),
            ],
        );
        assert!(apply_collision_stage(&mut s, &a, 9).is_err());
    }

    #[test]
    fn collision_probabilities_at_u03() {
        let (mut s, a) = single_cell(0.3);
        apply_nonlinear_collision(&mut s, &a).unwrap();
        let want = [0.5766666666666667, 0.09, 1.0 / 24.0, 1.0 / 24.0, 0.08, 0.045, 0.005, 0.12];
        let p = probs(&s);
        for f in 0..8 {
            assert!(close(p[f], want[f], 1e-12), "label {f:03b}");
        }
        assert!(close(p.iter().sum::<f64>(), 1.0, 1e-12));
        // signs: the (u - 1/2) branch is negative
        assert!(s.amplitude(0b110, 0).re < 0.0);
    }

    #[test]
    fn readout_recovers_equilibrium() {
        for u in [0.3, 0.0, -0.45] {
            let (mut s, a) = single_cell(u);
            apply_nonlinear_collision(&mut s, &a).unwrap();
            let f = readout_distributions(&s.basis_probabilities(), s.layout(), ReadoutLedger { norm_sq: 1.0 }).unwrap();
            let eq = equilibrium(1.0, u, CollisionMode::Nonlinear).unwrap();
            for i in 0..3 {
                assert!(close(f[i][0], eq[i], 1e-12), "u {u} f{i}");
            }
        }
    }

    #[test]
    fn collision_requires_reset_register() {
        let layout = QubitLayout::nonlinear(1).unwrap();
        let mut s = StateVector::basis(layout, 0b010, 0).unwrap();
        let a = nonlinear_angles(&VelocityField::Uniform(0.0), 2).unwrap();
        assert!(matches!(apply_nonlinear_collision(&mut s, &a), Err(QlbmError::State(_))));
    }

    #[test]
    fn streaming_moves_the_four_subspaces() {
        let layout = QubitLayout::nonlinear(2).unwrap();
        for (f, k, want) in [(F1_VEL, 1, 2), (F1_CONST, 3, 0), (F2_VEL, 0, 3), (F2_CONST, 2, 1)] {
            let mut s = StateVector::basis(layout, f, k).unwrap();
            apply_nonlinear_streaming(&mut s).unwrap();
            assert_eq!(s, StateVector::basis(layout, f, want).unwrap(), "label {f:03b}");
        }
        for f in [F0, 0b001, 0b101, 0b111] {
            let mut s = StateVector::basis(layout, f, 1).unwrap();
            apply_nonlinear_streaming(&mut s).unwrap();
            assert_eq!(s, StateVector::basis(layout, f, 1).unwrap());
        }
    }

    #[test]
    fn hybrid_loop_matches_classical() {
        let rho = DensityField::new((0..8).map(|k| 0.2 + 0.1 * ((k * 3) % 5) as f64).collect()).unwrap();
        let u = VelocityField::PerCell(vec![0.1, -0.2, 0.3, 0.0, -0.4, 0.45, 0.2, -0.05]);
        for update in [false, true] {
            let config = NonlinearRunConfig { update_velocity: update, ..NonlinearRunConfig::exact(3, 6) };
            let records = run_nonlinear(&config, &rho, &u).unwrap();
            assert_eq!(records.len(), 7);
            let (want_rho, want_u) = run_classical(&rho, &u, CollisionMode::Nonlinear, 6, update).unwrap();
            let last = records.last().unwrap();
            for k in 0..8 {
                assert!(close(last.rho.values()[k], want_rho.values()[k], 1e-12));
                assert!(close(last.u.at(k), want_u.at(k), 1e-12));
            }
        }
    }

    #[test]
    fn zero_steps_and_uniform_invariance() {
        let rho = DensityField::uniform(4, 0.5).unwrap();
        let u = VelocityField::Uniform(0.25);
        let r = run_nonlinear(&NonlinearRunConfig::exact(2, 0), &rho, &u).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].rho, rho);
        let r = run_nonlinear(&NonlinearRunConfig::exact(2, 5), &rho, &u).unwrap();
        for v in r.last().unwrap().rho.values() {
            assert!(close(*v, 0.5, 1e-12));
        }
    }

    #[test]
    fn velocity_update_degeneracy() {
        let rho = DensityField::new(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let config = NonlinearRunConfig { update_velocity: true, ..NonlinearRunConfig::exact(3, 1) };
        let err = run_nonlinear(&config, &rho, &VelocityField::Uniform(0.0)).unwrap_err();
        assert!(matches!(err, QlbmError::Degeneracy(m) if m.starts_with("step 1")));
    }

    #[test]
    fn shot_readout_is_seeded_and_close() {
        let rho = DensityField::new((0..8).map(|k| 0.1 + 0.02 * k as f64).collect()).unwrap();
        let u = VelocityField::Uniform(0.3);
        let config = NonlinearRunConfig { backend: Backend::Shots, shots: 200_000, seed: 9, ..NonlinearRunConfig::exact(3, 2) };
        let a = run_nonlinear(&config, &rho, &u).unwrap();
        assert_eq!(a, run_nonlinear(&config, &rho, &u).unwrap());
        let exact = run_nonlinear(&NonlinearRunConfig::exact(3, 2), &rho, &u).unwrap();
        for (x, y) in a[2].rho.values().iter().zip(exact[2].rho.values()) {
            assert!((x - y).abs() < 0.02 * y.max(0.1), "{x} vs {y}");
        }
    }
}
