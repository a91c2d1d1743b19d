//! Quantum lattice-Boltzmann simulation for the one-dimensional D1Q3
//! advection-diffusion problem.
//!
//! The square root of the density field is amplitude-encoded into a position
//! register. A small distribution-function register (`f`-register) carries the
//! collision branches. Two schemes are provided:
//!
//! * [`linear`]: linearized equilibrium. Several time steps run on one encoded
//!   state, separated by mid-circuit measurement and reset of the `f`-register.
//! * [`nonlinear`]: full quadratic equilibrium. One step per encoding, with a
//!   classical readout of the distribution functions and their moments.
//!
//! Both run on the dense statevector engine in [`qcore`] and are checked
//! against the classical reference solver in [`lattice`].

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod encoding;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod linear;
pub mod nonlinear;
pub mod qcore;
pub mod rng;

pub use error::{QlbmError, Result};

/// How observables are extracted from the quantum state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    /// Exact probabilities straight from the statevector.
    Exact,
    /// Finite shot histograms.
    Shots,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Exact => "exact",
            Backend::Shots => "shots",
        })
    }
}

impl std::str::FromStr for Backend {
    type Err = QlbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "statevector" | "deterministic" => Ok(Backend::Exact),
            "shots" => Ok(Backend::Shots),
            other => Err(QlbmError::Config(format!("unknown backend '{other}' (expected exact or shots)"))),
        }
    }
}
