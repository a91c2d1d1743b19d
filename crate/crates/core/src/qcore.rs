//! Dense statevector engine.
//!
//! # Layout and ket convention
//!
//! A state lives on `f_qubits + M` qubits: a small distribution-function
//! register (`f`) and an `M`-qubit position register. Basis states are indexed
//! as `(f << M) | k`, so the `f` bits are the high bits and every `f`-pattern
//! owns a contiguous block of `2^M` position amplitudes.
//!
//! Global qubit `q < M` is position bit `q`. The `j`-th `f`-qubit (zero based)
//! is global qubit `M + j`. Ket labels are written `|f⟩_f|k⟩` with the first
//! `f`-qubit as the *rightmost* bit of the label, so a bit flip on
//! `f`-qubit 0 takes `|00⟩_f` to `|01⟩_f`.
//!
//! Multi-controlled gates are applied directly as conditioned 2×2 updates;
//! nothing is decomposed into elementary gates.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{QlbmError, Result};
use crate::rng::SeedStream;

/// Largest position register accepted.
pub const MAX_POSITION_QUBITS: usize = 24;

/// Smallest branch probability that may be renormalized after a measurement.
pub const DEGENERACY_THRESHOLD: f64 = 1e-300;

/// Shots drawn from one RNG substream during histogram sampling.
const SAMPLE_CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QubitLayout {
    f_qubits: usize,
    pos_qubits: usize,
}

impl QubitLayout {
    pub fn new(f_qubits: usize, pos_qubits: usize) -> Result<Self> {
        if !(1..=MAX_POSITION_QUBITS).contains(&pos_qubits) {
            return Err(QlbmError::Layout(format!(
                "position register must have 1..={MAX_POSITION_QUBITS} qubits, got {pos_qubits}"
            )));
        }
        if f_qubits > 8 {
            return Err(QlbmError::Layout(format!(
                "f-register of {f_qubits} qubits is not supported"
            )));
        }
        Ok(Self { f_qubits, pos_qubits })
    }

    /// Two `f`-qubits, as used by the linear scheme.
    pub fn linear(pos_qubits: usize) -> Result<Self> {
        Self::new(2, pos_qubits)
    }

    /// Three `f`-qubits, as used by the non-linear scheme.
    pub fn nonlinear(pos_qubits: usize) -> Result<Self> {
        Self::new(3, pos_qubits)
    }

    pub fn f_qubits(&self) -> usize {
        self.f_qubits
    }

    pub fn pos_qubits(&self) -> usize {
        self.pos_qubits
    }

    pub fn num_qubits(&self) -> usize {
        self.f_qubits + self.pos_qubits
    }

    pub fn num_positions(&self) -> usize {
        1 << self.pos_qubits
    }

    pub fn num_f_patterns(&self) -> usize {
        1 << self.f_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits()
    }

    /// Global index of `f`-qubit `j` (0 is the first, rightmost label bit).
    pub fn f_qubit(&self, j: usize) -> usize {
        debug_assert!(j < self.f_qubits);
        self.pos_qubits + j
    }

    pub fn index(&self, f: usize, k: usize) -> usize {
        (f << self.pos_qubits) | k
    }

    pub fn split(&self, index: usize) -> (usize, usize) {
        (index >> self.pos_qubits, index & (self.num_positions() - 1))
    }

    pub fn is_f_qubit(&self, qubit: usize) -> bool {
        (self.pos_qubits..self.num_qubits()).contains(&qubit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    /// `[[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]]`
    Ry(f64),
    X,
    H,
}

impl GateKind {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        match *self {
            GateKind::Ry(theta) => {
                let (s, c) = (theta / 2.0).sin_cos();
                [[c, -s], [s, c]]
            }
            GateKind::X => [[0.0, 1.0], [1.0, 0.0]],
            GateKind::H => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                [[h, h], [h, -h]]
            }
        }
    }

    pub fn inverse(&self) -> GateKind {
        match *self {
            GateKind::Ry(theta) => GateKind::Ry(-theta),
            other => other,
        }
    }
}

/// A single-target gate with an arbitrary set of `(qubit, required bit)` controls.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSpec {
    pub kind: GateKind,
    pub target: usize,
    pub controls: Vec<(usize, bool)>,
}

impl GateSpec {
    pub fn new(kind: GateKind, target: usize) -> Self {
        Self { kind, target, controls: Vec::new() }
    }

    pub fn ry(theta: f64, target: usize) -> Self {
        Self::new(GateKind::Ry(theta), target)
    }

    pub fn x(target: usize) -> Self {
        Self::new(GateKind::X, target)
    }

    pub fn h(target: usize) -> Self {
        Self::new(GateKind::H, target)
    }

    pub fn control(mut self, qubit: usize, value: bool) -> Self {
        self.controls.push((qubit, value));
        self
    }

    pub fn controls(mut self, controls: &[(usize, bool)]) -> Self {
        self.controls.extend_from_slice(controls);
        self
    }

    pub fn inverse(&self) -> Self {
        Self {
            kind: self.kind.inverse(),
            target: self.target,
            controls: self.controls.clone(),
        }
    }
}

/// Rotation angle(s) for one RY stage: a single angle, or one per position
/// cell applied as a multiplexed rotation.
#[derive(Debug, Clone, PartialEq)]
pub enum CellAngles {
    Uniform(f64),
    PerCell(Vec<f64>),
}

impl CellAngles {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            CellAngles::Uniform(t) => *t,
            CellAngles::PerCell(v) => v[k],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftDirection {
    /// `|k⟩ → |(k+1) mod 2^M⟩`
    Positive,
    /// `|(k+1) mod 2^M⟩ → |k⟩`
    Negative,
}

/// Shot counts over a set of basis labels (positions, or full basis states).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotHistogram {
    pub counts: Vec<u64>,
    pub shots: u64,
}

impl ShotHistogram {
    pub fn empty(bins: usize) -> Self {
        Self { counts: vec![0; bins], shots: 0 }
    }

    pub fn merge(&mut self, other: &ShotHistogram) {
        assert_eq!(self.counts.len(), other.counts.len(), "histogram size mismatch");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.shots += other.shots;
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.shots.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Bit mask and required value for a control set, validated against `layout`.
fn control_mask(layout: &QubitLayout, target: Option<usize>, controls: &[(usize, bool)]) -> Result<(usize, usize)> {
    let n = layout.num_qubits();
    let (mut mask, mut value) = (0usize, 0usize);
    for &(q, bit) in controls {
        if q >= n {
            return Err(QlbmError::Layout(format!("control qubit {q} out of range for {n} qubits")));
        }
        if Some(q) == target {
            return Err(QlbmError::Layout(format!("qubit {q} is both target and control")));
        }
        let b = 1 << q;
        if mask & b != 0 && ((value & b != 0) != bit) {
            return Err(QlbmError::Layout(format!("qubit {q} carries conflicting control values")));
        }
        mask |= b;
        if bit {
            value |= b;
        }
    }
    Ok((mask, value))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: QubitLayout,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩_f|0⟩`
    pub fn zero(layout: QubitLayout) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); layout.dim()];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { layout, amplitudes }
    }

    pub fn basis(layout: QubitLayout, f: usize, k: usize) -> Result<Self> {
        if f >= layout.num_f_patterns() || k >= layout.num_positions() {
            return Err(QlbmError::Layout(format!("basis state |{f}⟩_f|{k}⟩ out of range")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); layout.dim()];
        amplitudes[layout.index(f, k)] = Complex64::new(1.0, 0.0);
        Ok(Self { layout, amplitudes })
    }

    /// Wraps raw amplitudes. The caller is responsible for normalization.
    pub fn from_amplitudes(layout: QubitLayout, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(QlbmError::Layout(format!(
                "expected {} amplitudes, got {}",
                layout.dim(),
                amplitudes.len()
            )));
        }
        Ok(Self { layout, amplitudes })
    }

    pub fn layout(&self) -> &QubitLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, f: usize, k: usize) -> Complex64 {
        self.amplitudes[self.layout.index(f, k)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply_gate(&mut self, gate: &GateSpec) -> Result<()> {
        let n = self.layout.num_qubits();
        if gate.target >= n {
            return Err(QlbmError::Layout(format!("target qubit {} out of range for {n} qubits", gate.target)));
        }
        let (mask, value) = control_mask(&self.layout, Some(gate.target), &gate.controls)?;
        let m = gate.kind.matrix();
        let tbit = 1 << gate.target;
        for i in 0..self.amplitudes.len() {
            if i & tbit != 0 || i & mask != value {
                continue;
            }
            let j = i | tbit;
            let (a, b) = (self.amplitudes[i], self.amplitudes[j]);
            self.amplitudes[i] = a * m[0][0] + b * m[0][1];
            self.amplitudes[j] = a * m[1][0] + b * m[1][1];
        }
        Ok(())
    }

    pub fn apply_gates<'a>(&mut self, gates: impl IntoIterator<Item = &'a GateSpec>) -> Result<()> {
        for g in gates {
            self.apply_gate(g)?;
        }
        Ok(())
    }

    /// RY on an `f`-qubit with one angle per position cell: a rotation
    /// multiplexed on the whole position register.
    pub fn apply_multiplexed_ry(&mut self, target: usize, controls: &[(usize, bool)], angles: &[f64]) -> Result<()> {
        if !self.layout.is_f_qubit(target) {
            return Err(QlbmError::Layout(format!("multiplexed target {target} is not an f-register qubit")));
        }
        if let Some(&(q, _)) = controls.iter().find(|(q, _)| !self.layout.is_f_qubit(*q)) {
            return Err(QlbmError::Layout(format!("multiplexed control {q} is not an f-register qubit")));
        }
        if angles.len() != self.layout.num_positions() {
            return Err(QlbmError::Layout(format!(
                "expected {} multiplexer angles, got {}",
                self.layout.num_positions(),
                angles.len()
            )));
        }
        let (mask, value) = control_mask(&self.layout, Some(target), controls)?;
        let tbit = 1 << target;
        let kmask = self.layout.num_positions() - 1;
        for i in 0..self.amplitudes.len() {
            if i & tbit != 0 || i & mask != value {
                continue;
            }
            let (s, c) = (angles[i & kmask] / 2.0).sin_cos();
            let j = i | tbit;
            let (a, b) = (self.amplitudes[i], self.amplitudes[j]);
            self.amplitudes[i] = a * c - b * s;
            self.amplitudes[j] = a * s + b * c;
        }
        Ok(())
    }

    /// RY stage on an `f`-qubit: a plain (controlled) gate for a uniform
    /// angle, a position-multiplexed rotation otherwise.
    pub fn apply_cell_ry(&mut self, target: usize, controls: &[(usize, bool)], angles: &CellAngles) -> Result<()> {
        match angles {
            CellAngles::Uniform(theta) => self.apply_gate(&GateSpec::ry(*theta, target).controls(controls)),
            CellAngles::PerCell(thetas) => self.apply_multiplexed_ry(target, controls, thetas),
        }
    }

    /// Cyclic shift of the position register inside the subspace selected by
    /// `controls`, which must all be `f`-register qubits.
    pub fn apply_cyclic_shift(&mut self, direction: ShiftDirection, controls: &[(usize, bool)]) -> Result<()> {
        if let Some(&(q, _)) = controls.iter().find(|(q, _)| !self.layout.is_f_qubit(*q)) {
            return Err(QlbmError::Layout(format!("shift control {q} is not an f-register qubit")));
        }
        let (mask, value) = control_mask(&self.layout, None, controls)?;
        let m = self.layout.pos_qubits();
        let (fmask, fvalue) = (mask >> m, value >> m);
        let block = self.layout.num_positions();
        for (f, chunk) in self.amplitudes.chunks_exact_mut(block).enumerate() {
            if f & fmask != fvalue {
                continue;
            }
            match direction {
                ShiftDirection::Positive => chunk.rotate_right(1),
                ShiftDirection::Negative => chunk.rotate_left(1),
            }
        }
        Ok(())
    }

    /// Entry `k` is `Σ_f |a(f, k)|²`.
    pub fn position_probabilities(&self) -> Vec<f64> {
        let block = self.layout.num_positions();
        let mut probs = vec![0.0; block];
        for chunk in self.amplitudes.chunks_exact(block) {
            for (p, a) in probs.iter_mut().zip(chunk) {
                *p += a.norm_sqr();
            }
        }
        probs
    }

    /// Probability of each full basis state, indexed like the amplitudes.
    pub fn basis_probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Probability of each `f`-register pattern.
    pub fn register_probabilities(&self) -> Vec<f64> {
        self.amplitudes
            .chunks_exact(self.layout.num_positions())
            .map(|chunk| chunk.iter().map(|a| a.norm_sqr()).sum())
            .collect()
    }

    /// True when all weight outside `|0…0⟩_f` is below `tol`.
    pub fn f_register_is_reset(&self, tol: f64) -> bool {
        let block = self.layout.num_positions();
        self.amplitudes[block..].iter().map(|a| a.norm_sqr()).sum::<f64>() <= tol
    }

    /// Projective measurement of the `f`-register followed by a reset to
    /// `|0…0⟩_f`. Returns the observed pattern.
    pub fn measure_register_and_reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize> {
        let probs = self.register_probabilities();
        let total: f64 = probs.iter().sum();
        if total < DEGENERACY_THRESHOLD {
            return Err(QlbmError::Degeneracy("measured state has zero norm".into()));
        }
        let r = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut outcome = None;
        for (f, &p) in probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            outcome = Some(f);
            if r < acc {
                break;
            }
        }
        let outcome = outcome.expect("positive total implies a positive branch");
        let p = probs[outcome];
        if p < DEGENERACY_THRESHOLD {
            return Err(QlbmError::Degeneracy(format!("branch {outcome} has probability {p:e}")));
        }
        self.collapse_and_reset(outcome, 1.0 / p.sqrt());
        Ok(outcome)
    }

    fn collapse_and_reset(&mut self, outcome: usize, scale: f64) {
        let block = self.layout.num_positions();
        if outcome != 0 {
            let (head, tail) = self.amplitudes.split_at_mut(block);
            head.copy_from_slice(&tail[(outcome - 1) * block..outcome * block]);
        }
        for a in &mut self.amplitudes[..block] {
            *a *= scale;
        }
        self.amplitudes[block..].fill(Complex64::new(0.0, 0.0));
    }

    /// Replaces the post-measurement mixture over `f`-outcomes by the single
    /// reset state `Σ_k √p_k |0…0⟩_f|k⟩`, where `p_k` is the position
    /// marginal. Exact for circuits that create no interference between
    /// position cells; see [`crate::linear`].
    pub fn merge_register_branches(&mut self) {
        let probs = self.position_probabilities();
        self.amplitudes.fill(Complex64::new(0.0, 0.0));
        for (a, p) in self.amplitudes.iter_mut().zip(probs) {
            *a = Complex64::new(p.sqrt(), 0.0);
        }
    }

    pub fn sample_positions(&self, shots: u64, seed: u64) -> Result<ShotHistogram> {
        sample_distribution(&self.position_probabilities(), shots, SeedStream::new(seed))
    }

    /// Full-register measurement histogram, indexed like the amplitudes.
    pub fn sample_basis(&self, shots: u64, seed: u64) -> Result<ShotHistogram> {
        sample_distribution(&self.basis_probabilities(), shots, SeedStream::new(seed))
    }
}

/// Draws `shots` independent samples from `probs` (need not be normalized).
/// Chunks of shots use separate substreams and are merged by addition.
pub fn sample_distribution(probs: &[f64], shots: u64, stream: SeedStream) -> Result<ShotHistogram> {
    if shots == 0 {
        return Err(QlbmError::Argument("shots must be at least 1".into()));
    }
    let sampler = CumulativeSampler::new(probs)?;
    let chunks = shots.div_ceil(SAMPLE_CHUNK);
    let hist = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = SAMPLE_CHUNK.min(shots - c * SAMPLE_CHUNK);
            let mut rng = stream.rng(c);
            let mut h = ShotHistogram::empty(probs.len());
            for _ in 0..n {
                h.counts[sampler.draw(&mut rng)] += 1;
            }
            h.shots = n;
            h
        })
        .reduce(
            || ShotHistogram::empty(probs.len()),
            |mut a, b| {
                a.merge(&b);
                a
            },
        );
    Ok(hist)
}

/// Inverse-CDF sampler over a finite distribution.
#[derive(Debug, Clone)]
pub struct CumulativeSampler {
    cumulative: Vec<f64>,
    last_nonzero: usize,
}

impl CumulativeSampler {
    pub fn new(probs: &[f64]) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(QlbmError::Domain("sampling weights must be finite and non-negative".into()));
        }
        let mut acc = 0.0;
        let cumulative: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let last_nonzero = probs
            .iter()
            .rposition(|&p| p > 0.0)
            .ok_or_else(|| QlbmError::Degeneracy("sampling distribution has zero mass".into()))?;
        Ok(Self { cumulative, last_nonzero })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = self.cumulative[self.cumulative.len() - 1];
        let r = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= r).min(self.last_nonzero)
    }
}
