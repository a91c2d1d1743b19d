//! Square-root amplitude encoding of a density field and the inverse readout.
//!
//! A field `ρ` on `2^M` cells is stored as `Σ_k √(ρ_k / C²) |0…0⟩_f|k⟩` with
//! `C² = Σ_k ρ_k`. Measuring position `k` then happens with probability
//! `ρ_k / C²`: squaring the amplitudes undoes the square root, so a readout
//! only has to rescale by the constant `C²`.

use num_complex::Complex64;

use crate::error::{QlbmError, Result};
use crate::lattice::DensityField;
use crate::qcore::{QubitLayout, ShotHistogram, StateVector};

/// Slack allowed on the total of a probability vector handed to the decoder.
const PROBABILITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedState {
    pub state: StateVector,
    /// `C² = Σ_k ρ_k`, in lattice mass units.
    pub norm_sq: f64,
}

pub fn encode_sqrt_density(field: &DensityField, layout: QubitLayout) -> Result<EncodedState> {
    if field.len() != layout.num_positions() {
        return Err(QlbmError::Layout(format!(
            "field has {} cells but the position register holds {}; pad explicitly to a power of two",
            field.len(),
            layout.num_positions()
        )));
    }
    let norm_sq = field.total();
    if !(norm_sq > 0.0) {
        return Err(QlbmError::Domain("cannot encode a field with zero total mass".into()));
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); layout.dim()];
    for (a, &rho) in amplitudes.iter_mut().zip(field.values()) {
        *a = Complex64::new((rho / norm_sq).sqrt(), 0.0);
    }
    Ok(EncodedState {
        state: StateVector::from_amplitudes(layout, amplitudes)?,
        norm_sq,
    })
}

/// `ρ̂_k = C² · p_k`.
pub fn decode_density(probabilities: &[f64], norm_sq: f64) -> Result<DensityField> {
    if !(norm_sq > 0.0) {
        return Err(QlbmError::Domain(format!("norm C² must be > 0, got {norm_sq}")));
    }
    let total: f64 = probabilities.iter().sum();
    if total > 1.0 + PROBABILITY_SLACK {
        return Err(QlbmError::Argument(format!("probabilities sum to {total} > 1")));
    }
    // tiny negative round-off from callers is clipped
    DensityField::new(probabilities.iter().map(|p| norm_sq * p.max(0.0)).collect())
}

/// Density estimate from shot counts, with the binomial standard error of
/// each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedHistogram {
    pub density: DensityField,
    pub std_error: Vec<f64>,
}

pub fn decode_histogram(hist: &ShotHistogram, norm_sq: f64) -> Result<DecodedHistogram> {
    if hist.shots == 0 {
        return Err(QlbmError::Argument("histogram holds no shots".into()));
    }
    let freq = hist.frequencies();
    let n = hist.shots as f64;
    let std_error = freq.iter().map(|&p| norm_sq * (p * (1.0 - p) / n).sqrt()).collect();
    Ok(DecodedHistogram {
        density: decode_density(&freq, norm_sq)?,
        std_error,
    })
}
