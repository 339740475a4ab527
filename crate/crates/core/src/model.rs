//! The three-level Λ system in the frame rotating with both lasers.
//!
//! Units: ħ = 1, so energies, Rabi frequencies and detunings are all angular
//! frequencies. Levels are ordered `|1⟩, |2⟩` (ground) and `|3⟩` (excited).
//!
//! The Hamiltonian is
//!
//! ```text
//! H = −(Ω sinθ e^{iφ}|1⟩⟨3| + Ω cosθ|2⟩⟨3| + h.c.) − 2Δ|3⟩⟨3|
//! ```
//!
//! with the diagonal term counted once. Its eigenvalues are
//! `0, −(Δ − √(Δ²+Ω²)), −(Δ + √(Δ²+Ω²))`.
//!
//! All 2×2 subspace objects use the ordering `(ψ₁, ψ₂)`. In that ordering
//! the dynamical matrix is `diag(0, Ω tanγ)`; the Pauli form
//! `(Ω/2) tanγ (1̂ + σ_z)` corresponds to the reversed ordering `(ψ₂, ψ₁)`.

use crate::error::{Error, Result};
use crate::matrix::{inner, Ket3, Mat2, Mat3, C64, ONE, ZERO};

/// A point in slow-parameter space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    /// Rabi magnitude Ω ≥ 0.
    pub omega: f64,
    pub theta: f64,
    pub phi: f64,
    /// Common detuning Δ of both lasers.
    pub delta: f64,
}

impl SystemParams {
    pub fn new(omega: f64, delta: f64, theta: f64, phi: f64) -> Result<Self> {
        let p = Self {
            omega,
            theta,
            phi,
            delta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega", self.omega),
            ("theta", self.theta),
            ("phi", self.phi),
            ("delta", self.delta),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite ({v})")));
            }
        }
        if self.omega < 0.0 {
            return Err(Error::InvalidParams(format!(
                "omega must be non-negative, got {}",
                self.omega
            )));
        }
        Ok(())
    }

    pub fn with_angles(&self, theta: f64, phi: f64) -> Self {
        Self {
            theta,
            phi,
            ..*self
        }
    }
}

/// The angle γ ∈ [0, π/2) mixing the bright state with `|3⟩`,
/// `tan γ = (√(Δ²+Ω²) − Δ)/Ω`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixingAngle {
    pub gamma: f64,
    pub sin: f64,
    pub cos: f64,
    pub tan: f64,
}

impl MixingAngle {
    /// Builds from γ directly (used when sweeping γ or for γ = 0 limits).
    pub fn from_gamma(gamma: f64) -> Self {
        Self {
            gamma,
            sin: gamma.sin(),
            cos: gamma.cos(),
            tan: gamma.tan(),
        }
    }

    pub fn zero() -> Self {
        Self::from_gamma(0.0)
    }
}

/// Mixing angle for the given Ω, Δ.
///
/// For Δ > 0 the algebraically equal form `Ω/(√(Δ²+Ω²) + Δ)` is evaluated to
/// avoid cancellation at large detuning. Ω = 0 with Δ > 0 gives γ = 0 by
/// continuity; Ω = 0 with Δ ≤ 0 is rejected.
pub fn mixing_angle(p: &SystemParams) -> Result<MixingAngle> {
    p.validate()?;
    let (omega, delta) = (p.omega, p.delta);
    if omega == 0.0 {
        return if delta > 0.0 {
            Ok(MixingAngle::zero())
        } else {
            Err(Error::UndefinedMixingAngle { omega, delta })
        };
    }
    let root = delta.hypot(omega);
    let tan = if delta > 0.0 {
        omega / (root + delta)
    } else {
        (root - delta) / omega
    };
    let gamma = tan.atan();
    let sec = tan.hypot(1.0);
    Ok(MixingAngle {
        gamma,
        sin: tan / sec,
        cos: 1.0 / sec,
        tan,
    })
}

/// Rotating-frame Hamiltonian (ħ = 1).
pub fn hamiltonian(p: &SystemParams) -> Result<Mat3> {
    p.validate()?;
    Ok(hamiltonian_unchecked(p))
}

pub(crate) fn hamiltonian_unchecked(p: &SystemParams) -> Mat3 {
    let (st, ct) = p.theta.sin_cos();
    let g13 = -C64::from_polar(p.omega * st, p.phi);
    let g23 = C64::new(-p.omega * ct, 0.0);
    Mat3::from_rows([
        [ZERO, ZERO, g13],
        [ZERO, ZERO, g23],
        [g13.conj(), g23.conj(), C64::new(-2.0 * p.delta, 0.0)],
    ])
}

/// Analytic eigensystem.
#[derive(Clone, Copy, Debug)]
pub struct LambdaSpectrum {
    /// `(λ₁, λ₂, λ₃)`.
    pub energies: [f64; 3],
    /// `[ψ₁, ψ₂, ψ₃]` in the fixed analytic gauge.
    pub vectors: [Ket3; 3],
    pub gamma: MixingAngle,
}

impl LambdaSpectrum {
    pub fn energy(&self, k: usize) -> f64 {
        self.energies[k]
    }
}

/// Exact eigenvalues `(0, −(Δ − √(Δ²+Ω²)), −(Δ + √(Δ²+Ω²)))`.
pub fn energies(omega: f64, delta: f64) -> [f64; 3] {
    let root = delta.hypot(omega);
    // λ₂ = √(Δ²+Ω²) − Δ, written without cancellation for Δ > 0
    let l2 = if delta > 0.0 {
        omega * omega / (root + delta)
    } else {
        root - delta
    };
    let l3 = if delta < 0.0 {
        -omega * omega / (root - delta)
    } else {
        -(delta + root)
    };
    [0.0, l2, l3]
}

/// `[ψ₁, ψ₂, ψ₃]` at `(θ, φ)` for a given mixing angle:
///
/// ```text
/// ψ₁ = cosθ|1⟩ − sinθ e^{−iφ}|2⟩
/// ψ₂ = cosγ (sinθ e^{iφ}|1⟩ + cosθ|2⟩) − sinγ|3⟩
/// ψ₃ = sinγ (sinθ e^{iφ}|1⟩ + cosθ|2⟩) + cosγ|3⟩
/// ```
pub fn eigenvectors(theta: f64, phi: f64, gamma: &MixingAngle) -> [Ket3; 3] {
    let (st, ct) = theta.sin_cos();
    let e = C64::from_polar(1.0, phi);
    let bright = [e * st, C64::new(ct, 0.0)];
    let psi1 = [C64::new(ct, 0.0), -e.conj() * st, ZERO];
    let psi2 = [
        bright[0] * gamma.cos,
        bright[1] * gamma.cos,
        C64::new(-gamma.sin, 0.0),
    ];
    let psi3 = [
        bright[0] * gamma.sin,
        bright[1] * gamma.sin,
        C64::new(gamma.cos, 0.0),
    ];
    [psi1, psi2, psi3]
}

pub fn spectrum(p: &SystemParams) -> Result<LambdaSpectrum> {
    p.validate()?;
    if p.omega == 0.0 && p.delta <= 0.0 {
        return Err(Error::UndefinedMixingAngle {
            omega: p.omega,
            delta: p.delta,
        });
    }
    let gamma = mixing_angle(p)?;
    Ok(LambdaSpectrum {
        energies: energies(p.omega, p.delta),
        vectors: eigenvectors(p.theta, p.phi, &gamma),
        gamma,
    })
}

/// `D_kl = ⟨ψ_k|H|ψ_l⟩` for k, l ∈ {1, 2}, evaluated from the analytic
/// eigenvectors. Equals `diag(0, Ω tanγ)`.
pub fn dynamical_matrix(p: &SystemParams) -> Result<Mat2> {
    let spec = spectrum(p)?;
    let h = hamiltonian_unchecked(p);
    let mut d = Mat2::zero();
    for k in 0..2 {
        let hpsi = h.apply(&spec.vectors[k]);
        for l in 0..2 {
            // D_lk = ⟨ψ_l|H ψ_k⟩
            d.m[l][k] = inner(&spec.vectors[l], &hpsi);
        }
    }
    Ok(d)
}

/// Closed form `diag(0, Ω tanγ)` used where the inner-product route would
/// be wasteful (the integrators call it at every step).
pub fn dynamical_matrix_closed(omega: f64, gamma: &MixingAngle) -> Mat2 {
    Mat2::diag([ZERO, ONE * (omega * gamma.tan)])
}
