//! Wilczek–Zee connections on the `(ψ₁, ψ₂)` subspace, their field strength,
//! numerical oracles for both, and gauge transformations.
//!
//! Conventions:
//! - `A_{ab,μ} = ⟨ψ_a|∂_μ ψ_b⟩` with μ ∈ {θ, φ}; a, b index `(ψ₁, ψ₂)`.
//! - Field strength `F_θφ = ∂_φ A_θ − ∂_θ A_φ − [A_θ, A_φ]`. This is minus
//!   the more common `∂_θ A_φ − ∂_φ A_θ + [A_θ, A_φ]`; vanishing and
//!   non-vanishing do not depend on the choice.
//! - Coefficients are transported by `ċ = −A_μ ẋ^μ c`, so the holonomy of a
//!   loop is `P exp(−∮ A)`.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{expm2_unchecked, inner, sigma_x, sigma_y, sigma_z, Ket3, Mat2, C64, I};
use crate::model::{eigenvectors, mixing_angle, MixingAngle, SystemParams};

/// Which closed-form connection to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConnectionVariant {
    /// Large-detuning connection with the corrected sign of the `σ_y` term
    /// of `A_θ`. Pure gauge.
    ApproxCorrected,
    /// Connection of the exact eigenvectors, with `cosγ` and `sin²γ` factors.
    Exact,
    /// Large-detuning connection with the `σ_y` term of `A_θ` negated and
    /// `A_φ` unchanged. Reconstructed from the sign dispute; not pure gauge.
    DuSign,
    /// The fixed basis `|1⟩, |2⟩`; identically zero.
    ComputationalBasis,
}

impl ConnectionVariant {
    pub const ALL: [ConnectionVariant; 4] = [
        Self::ApproxCorrected,
        Self::Exact,
        Self::DuSign,
        Self::ComputationalBasis,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::ApproxCorrected => "approx-corrected",
            Self::Exact => "exact",
            Self::DuSign => "du-sign",
            Self::ComputationalBasis => "computational-basis",
        }
    }
}

impl fmt::Display for ConnectionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConnectionVariant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                format!(
                    "unknown variant `{s}` (expected one of approx-corrected, exact, du-sign, computational-basis)"
                )
            })
    }
}

/// Where in parameter space an object was evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalPoint {
    pub theta: f64,
    pub phi: f64,
    pub gamma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Formula(ConnectionVariant),
    FiniteDifference,
    GaugeTransformed,
}

#[derive(Clone, Copy, Debug)]
pub struct Connection {
    pub a_theta: Mat2,
    pub a_phi: Mat2,
    pub at: EvalPoint,
    pub origin: Origin,
}

impl Connection {
    pub fn max_entry_dist(&self, other: &Connection) -> f64 {
        (self.a_theta - other.a_theta)
            .max_abs()
            .max((self.a_phi - other.a_phi).max_abs())
    }

    /// `A_θ θ̇ + A_φ φ̇`.
    pub fn along(&self, theta_dot: f64, phi_dot: f64) -> Mat2 {
        self.a_theta * theta_dot + self.a_phi * phi_dot
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Curvature {
    pub f_theta_phi: Mat2,
    pub at: EvalPoint,
}

impl Curvature {
    pub fn norm(&self) -> f64 {
        self.f_theta_phi.frobenius()
    }
}

struct Trig {
    st: f64,
    ct: f64,
    sp: f64,
    cp: f64,
}

impl Trig {
    fn new(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self { st, ct, sp, cp }
    }
}

fn i_sigma(x: f64, y: f64, z: f64) -> Mat2 {
    (sigma_x() * x + sigma_y() * y + sigma_z() * z).scale(I)
}

/// `(1̂ − σ_z)/2 = |ψ₂⟩⟨ψ₂|` in the subspace ordering.
fn lower_projector() -> Mat2 {
    (Mat2::identity() - sigma_z()) * 0.5
}

/// Closed-form connection. Approximate variants ignore `gamma`.
pub fn connection(
    variant: ConnectionVariant,
    theta: f64,
    phi: f64,
    gamma: &MixingAngle,
) -> Connection {
    let [a_theta, a_phi] = connection_components(variant, theta, phi, gamma);
    Connection {
        a_theta,
        a_phi,
        at: EvalPoint {
            theta,
            phi,
            gamma: gamma.gamma,
        },
        origin: Origin::Formula(variant),
    }
}

pub(crate) fn connection_components(
    variant: ConnectionVariant,
    theta: f64,
    phi: f64,
    gamma: &MixingAngle,
) -> [Mat2; 2] {
    let t = Trig::new(theta, phi);
    let sc = t.st * t.ct;
    let s2 = t.st * t.st;
    match variant {
        ConnectionVariant::ComputationalBasis => [Mat2::zero(), Mat2::zero()],
        ConnectionVariant::ApproxCorrected => [
            i_sigma(t.sp, t.cp, 0.0),
            i_sigma(sc * t.cp, -sc * t.sp, -s2),
        ],
        ConnectionVariant::DuSign => [
            i_sigma(t.sp, -t.cp, 0.0),
            i_sigma(sc * t.cp, -sc * t.sp, -s2),
        ],
        ConnectionVariant::Exact => {
            let (sg2, cg) = (gamma.sin * gamma.sin, gamma.cos);
            let a_theta = i_sigma(t.sp, t.cp, 0.0) * cg;
            let a_phi = i_sigma(sc * t.cp * cg, -sc * t.sp * cg, -s2)
                - lower_projector().scale(I * (s2 * sg2));
            [a_theta, a_phi]
        }
    }
}

/// Hand-derived `∂_φ A_θ` and `∂_θ A_φ` of the closed forms.
fn connection_partials(
    variant: ConnectionVariant,
    theta: f64,
    phi: f64,
    gamma: &MixingAngle,
) -> [Mat2; 2] {
    let t = Trig::new(theta, phi);
    let (s2t, c2t) = (2.0 * theta).sin_cos();
    match variant {
        ConnectionVariant::ComputationalBasis => [Mat2::zero(), Mat2::zero()],
        ConnectionVariant::ApproxCorrected => [
            i_sigma(t.cp, -t.sp, 0.0),
            i_sigma(c2t * t.cp, -c2t * t.sp, -s2t),
        ],
        ConnectionVariant::DuSign => [
            i_sigma(t.cp, t.sp, 0.0),
            i_sigma(c2t * t.cp, -c2t * t.sp, -s2t),
        ],
        ConnectionVariant::Exact => {
            let (sg2, cg) = (gamma.sin * gamma.sin, gamma.cos);
            [
                i_sigma(t.cp, -t.sp, 0.0) * cg,
                i_sigma(c2t * t.cp * cg, -c2t * t.sp * cg, -s2t)
                    - lower_projector().scale(I * (s2t * sg2)),
            ]
        }
    }
}

/// `F_θφ = ∂_φ A_θ − ∂_θ A_φ − [A_θ, A_φ]` from the analytic partials.
pub fn curvature_formula(
    variant: ConnectionVariant,
    theta: f64,
    phi: f64,
    gamma: &MixingAngle,
) -> Curvature {
    let [at, ap] = connection_components(variant, theta, phi, gamma);
    let [dphi_at, dtheta_ap] = connection_partials(variant, theta, phi, gamma);
    Curvature {
        f_theta_phi: dphi_at - dtheta_ap - at.commutator(&ap),
        at: EvalPoint {
            theta,
            phi,
            gamma: gamma.gamma,
        },
    }
}

/// The exact-connection field strength in the factored Pauli form
/// `i sin²γ [(1̂+σ_z) sinθ cosθ + σ_x sin²θ cosφ cosγ − σ_y sin²θ sinφ cosγ]`.
///
/// Equal to `curvature_formula(Exact, ..)`; kept separately as the
/// reference used by the tests and by the curvature-map bound.
pub fn exact_curvature_closed(theta: f64, phi: f64, gamma: &MixingAngle) -> Mat2 {
    exact_curvature_bracket(theta, phi, gamma).scale(I * (gamma.sin * gamma.sin))
}

/// The bracket multiplying `i sin²γ` in [`exact_curvature_closed`].
pub fn exact_curvature_bracket(theta: f64, phi: f64, gamma: &MixingAngle) -> Mat2 {
    let t = Trig::new(theta, phi);
    let s2 = t.st * t.st;
    (Mat2::identity() + sigma_z()) * (t.st * t.ct) + sigma_x() * (s2 * t.cp * gamma.cos)
        - sigma_y() * (s2 * t.sp * gamma.cos)
}

/// The widely quoted closed form with `½(1̂+σ_z) sinθ cosθ` in the bracket.
/// Differs from the field strength of the exact connection by
/// `i sin²γ sinθ cosθ |ψ₁⟩⟨ψ₁|`.
pub fn exact_curvature_half_coefficient(theta: f64, phi: f64, gamma: &MixingAngle) -> Mat2 {
    let t = Trig::new(theta, phi);
    let s2 = t.st * t.st;
    let bracket = (Mat2::identity() + sigma_z()) * (0.5 * t.st * t.ct)
        + sigma_x() * (s2 * t.cp * gamma.cos)
        - sigma_y() * (s2 * t.sp * gamma.cos);
    bracket.scale(I * gamma.sin * gamma.sin)
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidStep(h))
    }
}

fn fd_components(theta: f64, phi: f64, gamma: &MixingAngle, h: f64) -> [Mat2; 2] {
    let at = eigenvectors(theta, phi, gamma);
    let derivative = |plus: [Ket3; 3], minus: [Ket3; 3]| -> Mat2 {
        let mut a = Mat2::zero();
        for b in 0..2 {
            let d: Ket3 = std::array::from_fn(|k| (plus[b][k] - minus[b][k]) / (2.0 * h));
            for a_idx in 0..2 {
                a.m[a_idx][b] = inner(&at[a_idx], &d);
            }
        }
        a
    };
    [
        derivative(
            eigenvectors(theta + h, phi, gamma),
            eigenvectors(theta - h, phi, gamma),
        ),
        derivative(
            eigenvectors(theta, phi + h, gamma),
            eigenvectors(theta, phi - h, gamma),
        ),
    ]
}

/// Central-difference connection `⟨ψ_a| (ψ_b(x+h) − ψ_b(x−h)) / 2h⟩` built from
/// the analytic eigenvectors. The truncation error is estimated by
/// comparing against step `h/2`; an estimate above `tol` is an error.
pub fn connection_fd(p: &SystemParams, h: f64, tol: f64) -> Result<Connection> {
    check_step(h)?;
    let gamma = mixing_angle(p)?;
    let coarse = fd_components(p.theta, p.phi, &gamma, h);
    let fine = fd_components(p.theta, p.phi, &gamma, h / 2.0);
    let estimate = (0..2)
        .map(|k| (coarse[k] - fine[k]).max_abs() * 4.0 / 3.0)
        .fold(0.0, f64::max);
    if estimate > tol {
        return Err(Error::StepTooLarge {
            step: h,
            estimate,
            tolerance: tol,
        });
    }
    Ok(Connection {
        a_theta: coarse[0],
        a_phi: coarse[1],
        at: EvalPoint {
            theta: p.theta,
            phi: p.phi,
            gamma: gamma.gamma,
        },
        origin: Origin::FiniteDifference,
    })
}

/// Anything that yields `(A_θ, A_φ)` at a point of the `(θ, φ)` plane.
pub trait ConnectionField: Sync {
    fn components(&self, theta: f64, phi: f64) -> [Mat2; 2];
}

/// A closed-form variant at fixed mixing angle.
#[derive(Clone, Copy, Debug)]
pub struct FormulaField {
    pub variant: ConnectionVariant,
    pub gamma: MixingAngle,
}

impl FormulaField {
    pub fn new(variant: ConnectionVariant, gamma: MixingAngle) -> Self {
        Self { variant, gamma }
    }
}

impl ConnectionField for FormulaField {
    fn components(&self, theta: f64, phi: f64) -> [Mat2; 2] {
        connection_components(self.variant, theta, phi, &self.gamma)
    }
}

/// Field strength from the plaquette `(θ,φ) → (θ+h,φ) → (θ+h,φ+h) → (θ,φ+h) → (θ,φ)`.
///
/// Each edge contributes `exp(∓A_μ h)` evaluated at its midpoint; later
/// edges multiply on the left. With the transport law `ċ = −A c` the loop
/// product is `U ≈ 1̂ + h² F_θφ` in this module's sign convention, so the
/// estimate is `(U − 1̂)/h²`. It approximates `F_θφ(θ, φ)` to O(h).
pub fn curvature_plaquette_field<F: ConnectionField + ?Sized>(
    field: &F,
    theta: f64,
    phi: f64,
    h: f64,
) -> Result<Mat2> {
    check_step(h)?;
    let half = 0.5 * h;
    let e1 = expm2_unchecked(&(field.components(theta + half, phi)[0] * -h));
    let e2 = expm2_unchecked(&(field.components(theta + h, phi + half)[1] * -h));
    let e3 = expm2_unchecked(&(field.components(theta + half, phi + h)[0] * h));
    let e4 = expm2_unchecked(&(field.components(theta, phi + half)[1] * h));
    let u = e4 * e3 * e2 * e1;
    Ok((u - Mat2::identity()) * (1.0 / (h * h)))
}

pub fn curvature_plaquette(
    variant: ConnectionVariant,
    theta: f64,
    phi: f64,
    gamma: &MixingAngle,
    h: f64,
) -> Result<Curvature> {
    let f = curvature_plaquette_field(&FormulaField::new(variant, *gamma), theta, phi, h)?;
    Ok(Curvature {
        f_theta_phi: f,
        at: EvalPoint {
            theta,
            phi,
            gamma: gamma.gamma,
        },
    })
}

/// Largest curvature norm on an `n × n` grid over θ ∈ [0, π], φ ∈ [0, 2π).
pub fn curvature_grid_max(variant: ConnectionVariant, gamma: &MixingAngle, n: usize) -> f64 {
    grid(n)
        .map(|(theta, phi)| curvature_formula(variant, theta, phi, gamma).norm())
        .fold(0.0, f64::max)
}

/// The `n × n` evaluation grid used by sweeps and maps.
pub fn grid(n: usize) -> impl Iterator<Item = (f64, f64)> {
    let denom = (n.max(2) - 1) as f64;
    (0..n).flat_map(move |i| {
        let theta = std::f64::consts::PI * i as f64 / denom;
        (0..n).map(move |j| (theta, TAU * j as f64 / n as f64))
    })
}

/// A unitary 2×2 gauge matrix and its partial derivatives at one point.
#[derive(Clone, Copy, Debug)]
pub struct GaugeValue {
    pub v: Mat2,
    pub d_theta: Mat2,
    pub d_phi: Mat2,
}

type GaugeFn = dyn Fn(f64, f64) -> GaugeValue + Send + Sync;

/// A smooth field of frame changes `|η′_a⟩ = Σ_b |η_b⟩ V_ba` over the
/// `(θ, φ)` plane.
#[derive(Clone)]
pub struct GaugeField {
    name: String,
    eval: Arc<GaugeFn>,
}

impl fmt::Debug for GaugeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaugeField")
            .field("name", &self.name)
            .finish()
    }
}

impl GaugeField {
    pub fn from_fn(
        name: impl Into<String>,
        eval: impl Fn(f64, f64) -> GaugeValue + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, theta: f64, phi: f64) -> GaugeValue {
        (self.eval)(theta, phi)
    }

    /// `V = 1̂ cosθ + iσ_y sinθ cosφ + iσ_x sinθ sinφ`, whose columns are
    /// `ψ₁` and the bright state in the `|1⟩, |2⟩` basis.
    pub fn printed() -> Self {
        Self::from_fn("printed", |theta, phi| {
            let t = Trig::new(theta, phi);
            GaugeValue {
                v: Mat2::identity() * t.ct + i_sigma(t.st * t.sp, t.st * t.cp, 0.0),
                d_theta: Mat2::identity() * -t.st + i_sigma(t.ct * t.sp, t.ct * t.cp, 0.0),
                d_phi: i_sigma(t.st * t.cp, -t.st * t.sp, 0.0),
            }
        })
    }

    pub fn constant(u: Mat2) -> Self {
        Self::from_fn("constant", move |_, _| GaugeValue {
            v: u,
            d_theta: Mat2::zero(),
            d_phi: Mat2::zero(),
        })
    }

    /// `V = e^{iα} R_z(a) R_y(b) R_z(c)` with α, a, b, c random trigonometric
    /// polynomials in θ and φ; integer φ frequencies make V single-valued
    /// in φ.
    pub fn random_smooth(seed: u64, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let angles: [TrigPoly; 4] = std::array::from_fn(|_| TrigPoly::random(&mut rng, amplitude));
        Self::from_fn(format!("random-{seed}"), move |theta, phi| {
            let [alpha, a, b, c] = angles.each_ref().map(|p| p.eval(theta, phi));
            let rot = |axis: Mat2, x: f64| expm2_unchecked(&axis.scale(I * (0.5 * x)));
            let phase = Mat2::identity().scale(C64::from_polar(1.0, alpha.0));
            let (ra, rb, rc) = (
                rot(sigma_z(), a.0),
                rot(sigma_y(), b.0),
                rot(sigma_z(), c.0),
            );
            let gen_a = sigma_z().scale(I * 0.5);
            let gen_b = sigma_y().scale(I * 0.5);
            let v = phase * ra * rb * rc;
            let deriv = |k: usize| {
                let pick = |d: (f64, f64, f64)| if k == 0 { d.1 } else { d.2 };
                v.scale(I * pick(alpha))
                    + phase
                        * ((gen_a * ra * rb * rc) * pick(a)
                            + (ra * gen_b * rb * rc) * pick(b)
                            + (ra * rb * gen_a * rc) * pick(c))
            };
            GaugeValue {
                v,
                d_theta: deriv(0),
                d_phi: deriv(1),
            }
        })
    }

    /// Largest deviation between the supplied partials and central
    /// differences of `V` with step `h`.
    pub fn derivative_defect(&self, theta: f64, phi: f64, h: f64) -> f64 {
        let g = self.eval(theta, phi);
        let fd_t = (self.eval(theta + h, phi).v - self.eval(theta - h, phi).v) * (0.5 / h);
        let fd_p = (self.eval(theta, phi + h).v - self.eval(theta, phi - h).v) * (0.5 / h);
        (fd_t - g.d_theta).max_abs().max((fd_p - g.d_phi).max_abs())
    }

    pub fn check_derivatives(&self, theta: f64, phi: f64) -> Result<()> {
        let defect = self.derivative_defect(theta, phi, 1e-5);
        let scale =
            1.0 + self.eval(theta, phi).d_theta.max_abs() + self.eval(theta, phi).d_phi.max_abs();
        if defect > 1e-6 * scale {
            Err(Error::InconsistentDerivative(defect))
        } else {
            Ok(())
        }
    }
}

/// `Σ A sin(mφ + nθ + p)` over m, n ∈ {0, 1, 2}.
#[derive(Clone, Copy, Debug)]
struct TrigPoly {
    terms: [(f64, f64, f64, f64); 9],
}

impl TrigPoly {
    fn random(rng: &mut ChaCha8Rng, amplitude: f64) -> Self {
        let mut terms = [(0.0, 0.0, 0.0, 0.0); 9];
        for (k, t) in terms.iter_mut().enumerate() {
            let (m, n) = ((k / 3) as f64, (k % 3) as f64);
            *t = (
                rng.gen_range(-amplitude..amplitude),
                m,
                n,
                rng.gen_range(0.0..TAU),
            );
        }
        Self { terms }
    }

    /// (value, ∂_θ, ∂_φ)
    fn eval(&self, theta: f64, phi: f64) -> (f64, f64, f64) {
        self.terms
            .iter()
            .fold((0.0, 0.0, 0.0), |acc, &(a, m, n, p)| {
                let (s, c) = (m * phi + n * theta + p).sin_cos();
                (acc.0 + a * s, acc.1 + a * n * c, acc.2 + a * m * c)
            })
    }
}

/// `A′_μ = V†A_μV + V†∂_μV`.
pub fn gauge_transform(base: &Connection, g: &GaugeValue) -> Result<Connection> {
    let defect = g.v.unitarity_defect();
    if defect > 1e-10 {
        return Err(Error::NotUnitary(defect));
    }
    let [a_theta, a_phi] = transform_components([base.a_theta, base.a_phi], g);
    Ok(Connection {
        a_theta,
        a_phi,
        at: base.at,
        origin: Origin::GaugeTransformed,
    })
}

fn transform_components(a: [Mat2; 2], g: &GaugeValue) -> [Mat2; 2] {
    let vd = g.v.adjoint();
    [
        vd * a[0] * g.v + vd * g.d_theta,
        vd * a[1] * g.v + vd * g.d_phi,
    ]
}

/// A base connection field seen through a gauge field.
pub struct TransformedField<'a, F: ConnectionField + ?Sized> {
    pub base: &'a F,
    pub gauge: &'a GaugeField,
}

impl<F: ConnectionField + ?Sized> ConnectionField for TransformedField<'_, F> {
    fn components(&self, theta: f64, phi: f64) -> [Mat2; 2] {
        transform_components(
            self.base.components(theta, phi),
            &self.gauge.eval(theta, phi),
        )
    }
}
