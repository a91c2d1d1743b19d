//! Classical D1Q3 lattice-Boltzmann reference with `Δt/τ = 1`, periodic
//! boundaries and lattice units (`Δx = Δt = 1`).
//!
//! With full relaxation the BGK update reduces to "stream the equilibrium":
//! `f_i(x + c_i, t + 1) = f_i^eq(x, t)`.

use crate::error::{QlbmError, Result};

/// Tolerance on the velocity admissibility bounds.
const ADMISSIBILITY_SLACK: f64 = 1e-12;

/// The D1Q3 velocity set: rest, right-moving, left-moving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocitySetD1Q3;

impl VelocitySetD1Q3 {
    pub const WEIGHTS: [f64; 3] = [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];
    pub const VELOCITIES: [i32; 3] = [0, 1, -1];
    /// Squared lattice speed of sound.
    pub const CS_SQ: f64 = 1.0 / 3.0;
    /// Lattice diffusivity `cs² (τ - Δt/2)` at `τ = Δt = 1`.
    pub const DIFFUSIVITY: f64 = 1.0 / 6.0;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CollisionMode {
    /// `f_i = w_i ρ (1 + c_i u / cs²)`
    Linear,
    /// Full second-order equilibrium.
    Nonlinear,
}

impl CollisionMode {
    /// Largest `|u|` for which the quantum collision angles of this mode exist.
    pub fn max_velocity(&self) -> f64 {
        match self {
            CollisionMode::Linear => VelocitySetD1Q3::CS_SQ,
            CollisionMode::Nonlinear => 0.5,
        }
    }

    pub fn check_velocity(&self, u: f64) -> Result<()> {
        let bound = self.max_velocity();
        if !u.is_finite() || u.abs() > bound + ADMISSIBILITY_SLACK {
            let why = match self {
                CollisionMode::Linear => "linear collision needs |u / cs^2| <= 1, i.e. |u| <= 1/3",
                CollisionMode::Nonlinear => "non-linear collision needs |u ± 0.5| <= 1, i.e. |u| <= 0.5",
            };
            return Err(QlbmError::Admissibility(format!("u = {u} is inadmissible: {why}")));
        }
        Ok(())
    }
}

impl std::fmt::Display for CollisionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CollisionMode::Linear => "linear",
            CollisionMode::Nonlinear => "nonlinear",
        })
    }
}

impl std::str::FromStr for CollisionMode {
    type Err = QlbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(CollisionMode::Linear),
            "nonlinear" => Ok(CollisionMode::Nonlinear),
            other => Err(QlbmError::Config(format!("unknown collision model '{other}'"))),
        }
    }
}

/// Non-negative mass density per lattice cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField(Vec<f64>);

impl DensityField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(QlbmError::Domain(format!("density at cell {k} is {v}; must be finite and >= 0")));
        }
        Ok(Self(values))
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Index of the largest value (first on ties).
    pub fn argmax(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best })
            .0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VelocityField {
    Uniform(f64),
    PerCell(Vec<f64>),
}

impl VelocityField {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            VelocityField::Uniform(u) => *u,
            VelocityField::PerCell(v) => v[k],
        }
    }

    pub fn to_vec(&self, n: usize) -> Vec<f64> {
        (0..n).map(|k| self.at(k)).collect()
    }

    pub fn check(&self, n: usize, mode: CollisionMode) -> Result<()> {
        match self {
            VelocityField::Uniform(u) => mode.check_velocity(*u),
            VelocityField::PerCell(v) => {
                if v.len() != n {
                    return Err(QlbmError::Layout(format!("velocity field has {} cells, density has {n}", v.len())));
                }
                for (k, &u) in v.iter().enumerate() {
                    mode.check_velocity(u)
                        .map_err(|e| QlbmError::Admissibility(format!("cell {k}: {e}")))?;
                }
                Ok(())
            }
        }
    }
}

/// Gaussian hill on an ambient background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    pub rho0: f64,
    pub ambient: f64,
    pub x0: f64,
    pub sigma0: f64,
    pub diffusivity: f64,
}

impl GaussianParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 > 0.0) {
            return Err(QlbmError::Domain(format!("sigma0 must be > 0, got {}", self.sigma0)));
        }
        if !(self.rho0 >= 0.0) || !(self.ambient >= 0.0) {
            return Err(QlbmError::Domain("rho0 and ambient must be >= 0".into()));
        }
        if !(self.diffusivity >= 0.0) || !self.x0.is_finite() {
            return Err(QlbmError::Domain("diffusivity must be >= 0 and x0 finite".into()));
        }
        Ok(())
    }
}

/// Equilibrium populations `(f0, f1, f2)` for density `rho` and velocity `u`.
pub fn equilibrium(rho: f64, u: f64, mode: CollisionMode) -> Result<[f64; 3]> {
    if !(rho >= 0.0) {
        return Err(QlbmError::Domain(format!("density {rho} must be >= 0")));
    }
    mode.check_velocity(u)?;
    let [w0, w1, w2] = VelocitySetD1Q3::WEIGHTS;
    let f = match mode {
        CollisionMode::Linear => {
            let a = u / VelocitySetD1Q3::CS_SQ;
            [w0 * rho, w1 * rho * (1.0 + a), w2 * rho * (1.0 - a)]
        }
        CollisionMode::Nonlinear => [
            w0 * rho * (1.0 - 1.5 * u * u),
            3.0 * w1 * rho * (u + 0.5).powi(2) + 0.25 * w1 * rho,
            3.0 * w2 * rho * (u - 0.5).powi(2) + 0.25 * w2 * rho,
        ],
    };
    Ok(f)
}

/// Zeroth and first moment: `(ρ, u)`.
pub fn moments(f: [f64; 3]) -> Result<(f64, f64)> {
    let rho = f[0] + f[1] + f[2];
    let momentum = f[1] - f[2];
    if rho == 0.0 {
        if momentum != 0.0 {
            return Err(QlbmError::Degeneracy("zero density with non-zero momentum".into()));
        }
        return Ok((0.0, 0.0));
    }
    Ok((rho, momentum / rho))
}

/// Per-cell equilibria streamed one step: returns the post-streaming
/// `[f0, f1, f2]` fields.
pub fn collide_and_stream(rho: &DensityField, u: &VelocityField, mode: CollisionMode) -> Result<[Vec<f64>; 3]> {
    let n = rho.len();
    u.check(n, mode)?;
    let mut f = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for (k, &r) in rho.values().iter().enumerate() {
        let eq = equilibrium(r, u.at(k), mode)?;
        f[0][k] = eq[0];
        f[1][(k + 1) % n] = eq[1];
        f[2][(k + n - 1) % n] = eq[2];
    }
    Ok(f)
}

/// Macroscopic fields from post-streaming populations.
pub fn macroscopic(f: &[Vec<f64>; 3]) -> Result<(DensityField, Vec<f64>)> {
    let n = f[0].len();
    let mut rho = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    for k in 0..n {
        let (r, v) = moments([f[0][k], f[1][k], f[2][k]])
            .map_err(|e| QlbmError::Degeneracy(format!("cell {k}: {e}")))?;
        rho.push(r);
        u.push(v);
    }
    Ok((DensityField::new(rho)?, u))
}

/// One collide-and-stream step. With `update_velocity` the returned velocity
/// is the first moment of the new populations; otherwise `u` is passed through
/// (advection-diffusion with a prescribed velocity).
pub fn classical_step(
    rho: &DensityField,
    u: &VelocityField,
    mode: CollisionMode,
    update_velocity: bool,
) -> Result<(DensityField, VelocityField)> {
    let f = collide_and_stream(rho, u, mode)?;
    if update_velocity {
        let (rho, u) = macroscopic(&f)?;
        Ok((rho, VelocityField::PerCell(u)))
    } else {
        let n = rho.len();
        let values = (0..n).map(|k| f[0][k] + f[1][k] + f[2][k]).collect();
        Ok((DensityField::new(values)?, u.clone()))
    }
}

pub fn run_classical(
    initial: &DensityField,
    u: &VelocityField,
    mode: CollisionMode,
    steps: usize,
    update_velocity: bool,
) -> Result<(DensityField, VelocityField)> {
    let mut state = (initial.clone(), u.clone());
    for _ in 0..steps {
        state = classical_step(&state.0, &state.1, mode, update_velocity)?;
    }
    Ok(state)
}

/// Shortest signed displacement on a ring of `n` cells.
pub fn minimal_image(d: f64, n: usize) -> f64 {
    let n = n as f64;
    d - n * (d / n).round()
}

/// Advected and diffused Gaussian hill on a periodic domain of `n` cells,
/// plus the ambient offset (a constant field is invariant under the
/// advection-diffusion equation).
pub fn analytic_gaussian(x: f64, t: f64, p: &GaussianParams, u: f64, n: usize) -> f64 {
    let s0 = p.sigma0 * p.sigma0;
    let sd = 2.0 * p.diffusivity * t;
    let d = minimal_image(x - p.x0 - u * t, n);
    p.ambient + s0 / (s0 + sd) * p.rho0 * (-d * d / (2.0 * (s0 + sd))).exp()
}

pub fn analytic_field(t: f64, p: &GaussianParams, u: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| analytic_gaussian(k as f64, t, p, u, n)).collect()
}

pub fn initial_gaussian(p: &GaussianParams, n: usize) -> Result<DensityField> {
    p.validate()?;
    let values = (0..n)
        .map(|k| {
            let d = minimal_image(k as f64 - p.x0, n);
            p.ambient + p.rho0 * (-d * d / (2.0 * p.sigma0 * p.sigma0)).exp()
        })
        .collect();
    DensityField::new(values)
}
