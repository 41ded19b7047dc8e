//! Separation profiles R(t) for the approach-and-separate trajectory, and the
//! transport timescale set by the tweezer depth.
//!
//! Lengths are in μm and times in μs throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::molecule::{consts, MoleculeSpec, TrapSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Cosine,
    Triangular,
    Tanh,
    /// R fixed at α + β; the reference run for the identity fidelity.
    Constant,
}

impl ProfileKind {
    pub const SHAPED: [ProfileKind; 3] = [ProfileKind::Cosine, ProfileKind::Triangular, ProfileKind::Tanh];
}

impl std::str::FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" | "cos" => Ok(ProfileKind::Cosine),
            "triangular" | "triangle" => Ok(ProfileKind::Triangular),
            "tanh" => Ok(ProfileKind::Tanh),
            "constant" => Ok(ProfileKind::Constant),
            _ => Err(Error::Config(format!("unknown profile kind `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryProfile {
    pub kind: ProfileKind,
    #[serde(rename = "alpha_um")]
    pub alpha: f64,
    #[serde(rename = "beta_um")]
    pub beta: f64,
    #[serde(rename = "tau_us")]
    pub tau: f64,
}

impl TrajectoryProfile {
    pub fn new(kind: ProfileKind, alpha: f64, beta: f64, tau: f64) -> Result<Self> {
        let p = TrajectoryProfile { kind, alpha, beta, tau };
        p.validate()?;
        Ok(p)
    }

    /// Profile spanning the trap's initial and closest separations.
    pub fn from_trap(kind: ProfileKind, trap: &TrapSpec, tau: f64) -> Result<Self> {
        Self::new(kind, trap.alpha(), trap.beta(), tau)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > self.alpha && self.beta.is_finite()) {
            return Err(Error::Config(format!(
                "profile needs beta > alpha > 0, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("profile needs tau > 0, got {}", self.tau)));
        }
        Ok(())
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        TrajectoryProfile { tau, ..*self }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let p: TrajectoryProfile = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    /// R(t) in μm.
    pub fn separation(&self, t: f64) -> f64 {
        let (a, b, tau) = (self.alpha, self.beta, self.tau);
        match self.kind {
            ProfileKind::Cosine => {
                if t <= tau {
                    a * (2.0 * std::f64::consts::PI * t / tau).cos() + b
                } else {
                    a + b
                }
            }
            ProfileKind::Triangular => {
                if t <= tau / 2.0 {
                    -4.0 * a * t / tau + a + b
                } else if t <= tau {
                    4.0 * a * t / tau - 3.0 * a + b
                } else {
                    a + b
                }
            }
            ProfileKind::Tanh => {
                if t <= 3.0 * tau / 7.0 {
                    a * (1.0 - (14.0 * t / tau - 3.0).tanh()) + b - a
                } else if t <= 6.0 * tau / 7.0 {
                    a * (1.0 - (-14.0 * t / tau + 9.0).tanh()) + b - a
                } else {
                    a * (1.0 - (-3.0f64).tanh()) + b - a
                }
            }
            ProfileKind::Constant => a + b,
        }
    }

    /// Points in [0, τ] where R(t) is not smooth, including both ends.
    pub fn breakpoints(&self) -> Vec<f64> {
        let tau = self.tau;
        match self.kind {
            ProfileKind::Cosine | ProfileKind::Triangular => vec![0.0, tau / 2.0, tau],
            ProfileKind::Tanh => vec![0.0, 3.0 * tau / 7.0, 6.0 * tau / 7.0, tau],
            ProfileKind::Constant => vec![0.0, tau],
        }
    }

    /// ∫₀^τ dt / R(t)³ in μs/μm³.
    pub fn inverse_cube_integral(&self) -> f64 {
        let (a, b, tau) = (self.alpha, self.beta, self.tau);
        let d = b * b - a * a;
        match self.kind {
            ProfileKind::Cosine => tau * (2.0 * b * b + a * a) / (2.0 * d * d * d.sqrt()),
            ProfileKind::Triangular => tau * b / (d * d),
            ProfileKind::Constant => tau / (a + b).powi(3),
            ProfileKind::Tanh => self
                .breakpoints()
                .windows(2)
                .map(|w| {
                    quadrature::double_exponential::integrate(|t| self.separation(t).powi(-3), w[0], w[1], 1e-14)
                        .integral
                })
                .sum(),
        }
    }
}

/// t₀ = √(m(α+β)²/(2U₀)) in μs: the shortest transport time the tweezer can
/// hold the molecule through.
pub fn confinement_timescale(spec: &MoleculeSpec, trap: &TrapSpec) -> f64 {
    let distance = trap.initial_separation * consts::MICROMETER;
    (spec.mass_si() * distance * distance / (2.0 * trap.depth_joules())).sqrt() / consts::MICROSECOND
}
