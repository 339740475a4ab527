//! Path- and time-ordered products on the `(ψ₁, ψ₂)` subspace.
//!
//! Every product uses the midpoint rule on `N` equal time slices with later
//! slices multiplied on the left:
//!
//! ```text
//! U ≈ exp(G(t_{N−½}) Δt) ⋯ exp(G(t_{½}) Δt)
//! ```
//!
//! where `G = −(A_θ θ̇ + A_φ φ̇)` for geometric holonomies and
//! `G = −(A_θ θ̇ + A_φ φ̇ + iD)` for the full subspace evolution. The rule is
//! second order; errors are estimated by step doubling.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::gauge::{
    connection_components, ConnectionField, ConnectionVariant, GaugeField, TransformedField,
};
use crate::matrix::{expm2_unchecked, Mat2, C64, I};
use crate::model::{dynamical_matrix_closed, mixing_angle, MixingAngle};
use crate::path::{ParameterPath, PathSample};

#[derive(Clone, Copy, Debug)]
pub struct HolonomyResult {
    pub unitary: Mat2,
    pub steps: usize,
    /// Estimated error of `unitary`: `(4/3)‖U_N − U_{2N}‖_F` plus a
    /// round-off floor of `N·ε`.
    pub richardson_error: f64,
    /// `None` for products over arbitrary connection fields.
    pub variant: Option<ConnectionVariant>,
}

impl HolonomyResult {
    pub fn deviation_from_identity(&self) -> f64 {
        self.unitary.dist(&Mat2::identity())
    }
}

/// Minimum number of slices accepted by the integrators.
pub const MIN_STEPS: usize = 2;

fn check_steps(steps: usize) -> Result<()> {
    if steps < MIN_STEPS {
        Err(Error::TooFewSteps {
            min: MIN_STEPS,
            got: steps,
        })
    } else {
        Ok(())
    }
}

/// Midpoint ordered product of `exp(G(t) Δt)`; `generator` must return
/// an anti-Hermitian `G`.
pub fn ordered_product(duration: f64, steps: usize, generator: impl Fn(f64) -> Mat2) -> Mat2 {
    let dt = duration / steps as f64;
    let mut u = Mat2::identity();
    for k in 0..steps {
        let t = (k as f64 + 0.5) * dt;
        u = expm2_unchecked(&(generator(t) * dt)) * u;
    }
    u
}

fn with_richardson(
    duration: f64,
    steps: usize,
    variant: Option<ConnectionVariant>,
    generator: impl Fn(f64) -> Mat2,
) -> HolonomyResult {
    let coarse = ordered_product(duration, steps, &generator);
    let fine = ordered_product(duration, 2 * steps, &generator);
    HolonomyResult {
        unitary: coarse,
        steps,
        richardson_error: coarse.dist(&fine) * 4.0 / 3.0 + steps as f64 * f64::EPSILON,
        variant,
    }
}

fn sample_gamma(s: &PathSample) -> MixingAngle {
    // paths are validated at construction; an undefined angle only arises
    // for Ω = 0, Δ ≤ 0, which the callers reject up front
    mixing_angle(&s.params()).unwrap_or_else(|_| MixingAngle::zero())
}

fn check_gamma_defined(path: &ParameterPath, steps: usize) -> Result<()> {
    for t in [0.0, 0.5 * path.duration() / steps as f64, path.duration()] {
        mixing_angle(&path.sample(t).params())?;
    }
    Ok(())
}

fn geometric_generator(variant: ConnectionVariant, s: &PathSample) -> Mat2 {
    let gamma = sample_gamma(s);
    let [at, ap] = connection_components(variant, s.theta, s.phi, &gamma);
    -(at * s.theta_dot + ap * s.phi_dot)
}

/// Non-Abelian geometric phase `P exp(−∮ A)` of a closed loop.
pub fn holonomy(
    path: &ParameterPath,
    variant: ConnectionVariant,
    steps: usize,
) -> Result<HolonomyResult> {
    path.require_closed()?;
    check_steps(steps)?;
    check_gamma_defined(path, steps)?;
    Ok(with_richardson(
        path.duration(),
        steps,
        Some(variant),
        |t| geometric_generator(variant, &path.sample(t)),
    ))
}

/// Holonomy of an arbitrary connection field around a closed loop.
pub fn holonomy_field<F: ConnectionField + ?Sized>(
    path: &ParameterPath,
    field: &F,
    steps: usize,
) -> Result<HolonomyResult> {
    path.require_closed()?;
    check_steps(steps)?;
    Ok(with_richardson(path.duration(), steps, None, |t| {
        let s = path.sample(t);
        let [at, ap] = field.components(s.theta, s.phi);
        -(at * s.theta_dot + ap * s.phi_dot)
    }))
}

/// Geometric factor `T exp(−∫ A·ẋ dt)` along a possibly open path.
pub fn geometric_factor(
    path: &ParameterPath,
    variant: ConnectionVariant,
    steps: usize,
) -> Result<HolonomyResult> {
    check_steps(steps)?;
    check_gamma_defined(path, steps)?;
    Ok(with_richardson(
        path.duration(),
        steps,
        Some(variant),
        |t| geometric_generator(variant, &path.sample(t)),
    ))
}

fn dynamical_generator(s: &PathSample) -> Mat2 {
    dynamical_matrix_closed(s.omega, &sample_gamma(s)).scale(-I)
}

/// `U(τ,0) = T exp(−∫ (A_θ θ̇ + A_φ φ̇ + iD) dt)` with the exact connection.
pub fn evolve_subspace(path: &ParameterPath, steps: usize) -> Result<HolonomyResult> {
    check_steps(steps)?;
    check_gamma_defined(path, steps)?;
    Ok(with_richardson(
        path.duration(),
        steps,
        Some(ConnectionVariant::Exact),
        |t| {
            let s = path.sample(t);
            geometric_generator(ConnectionVariant::Exact, &s) + dynamical_generator(&s)
        },
    ))
}

/// Dynamical factor `T exp(−i ∫ D dt)`. `D` is diagonal in the subspace
/// ordering, so this is `diag(1, exp(−i ∫ λ₂ dt))` with the integral taken
/// by the midpoint rule (exact for constant Ω, Δ).
pub fn dynamical_factor(path: &ParameterPath, steps: usize) -> Result<Mat2> {
    check_steps(steps)?;
    check_gamma_defined(path, steps)?;
    let dt = path.duration() / steps as f64;
    let phase: f64 = (0..steps)
        .map(|k| {
            let s = path.sample((k as f64 + 0.5) * dt);
            s.omega * sample_gamma(&s).tan * dt
        })
        .sum();
    Ok(Mat2::diag([
        C64::new(1.0, 0.0),
        C64::from_polar(1.0, -phase),
    ]))
}

/// Distance between the full subspace evolution and products of its
/// geometric and dynamical factors, in both orders.
#[derive(Clone, Copy, Debug)]
pub struct FactorizationGap {
    pub full: Mat2,
    pub geometric: Mat2,
    pub dynamical: Mat2,
    /// `‖U − U_geo U_dyn‖_F`.
    pub geo_after_dyn: f64,
    /// `‖U − U_dyn U_geo‖_F`.
    pub dyn_after_geo: f64,
    pub integration_error: f64,
}

impl FactorizationGap {
    pub fn max_gap(&self) -> f64 {
        self.geo_after_dyn.max(self.dyn_after_geo)
    }
}

pub fn factorization_gap(path: &ParameterPath, steps: usize) -> Result<FactorizationGap> {
    let full = evolve_subspace(path, steps)?;
    let geo = geometric_factor(path, ConnectionVariant::Exact, steps)?;
    let dynamical = dynamical_factor(path, steps)?;
    Ok(FactorizationGap {
        full: full.unitary,
        geometric: geo.unitary,
        dynamical,
        geo_after_dyn: full.unitary.dist(&(geo.unitary * dynamical)),
        dyn_after_geo: full.unitary.dist(&(dynamical * geo.unitary)),
        integration_error: full.richardson_error + geo.richardson_error,
    })
}

/// `max_t ‖[D(t), A_θ θ̇ + A_φ φ̇]‖_F` over `samples` equally spaced times
/// including both endpoints.
pub fn commutator_max(path: &ParameterPath, samples: usize) -> Result<f64> {
    if samples < 10 {
        return Err(Error::TooFewSteps {
            min: 10,
            got: samples,
        });
    }
    check_gamma_defined(path, samples)?;
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let s = path.sample(path.duration() * k as f64 / (samples - 1) as f64);
        let gamma = sample_gamma(&s);
        let d = dynamical_matrix_closed(s.omega, &gamma);
        let [at, ap] = connection_components(ConnectionVariant::Exact, s.theta, s.phi, &gamma);
        let a = at * s.theta_dot + ap * s.phi_dot;
        worst = worst.max(d.commutator(&a).frobenius());
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct SeparabilityRow {
    pub delta_over_omega: f64,
    pub sin_gamma: f64,
    pub commutator_max: f64,
    pub gap: FactorizationGap,
}

#[derive(Clone, Debug)]
pub struct SeparabilityReport {
    pub rows: Vec<SeparabilityRow>,
    /// Log-log slope of the commutator maximum against `sin γ`.
    pub commutator_slope: f64,
    /// Log-log slope of the larger factorization gap against `sin γ`.
    pub gap_slope: f64,
}

/// Commutator and factorization-gap sweep at fixed Ω over `Δ/Ω` values.
/// `make_path(omega, delta)` must build the same geometric loop for every
/// point. Rows with `sin γ = 0` are reported but excluded from the fits.
pub fn separability_sweep(
    omega: f64,
    ratios: &[f64],
    samples: usize,
    steps: usize,
    make_path: impl Fn(f64, f64) -> Result<ParameterPath> + Sync,
) -> Result<SeparabilityReport> {
    let rows = ratios
        .par_iter()
        .map(|&ratio| {
            let path = make_path(omega, ratio * omega)?;
            let s0 = path.sample(0.0);
            Ok(SeparabilityRow {
                delta_over_omega: ratio,
                sin_gamma: mixing_angle(&s0.params())?.sin,
                commutator_max: commutator_max(&path, samples)?,
                gap: factorization_gap(&path, steps)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit: Vec<&SeparabilityRow> = rows.iter().filter(|r| r.sin_gamma > 0.0).collect();
    let sg: Vec<f64> = fit.iter().map(|r| r.sin_gamma).collect();
    let comm: Vec<f64> = fit.iter().map(|r| r.commutator_max).collect();
    let gap: Vec<f64> = fit.iter().map(|r| r.gap.max_gap()).collect();
    Ok(SeparabilityReport {
        commutator_slope: loglog_slope(&sg, &comm),
        gap_slope: loglog_slope(&sg, &gap),
        rows,
    })
}

#[derive(Clone, Debug)]
pub struct CovarianceReport {
    pub base: HolonomyResult,
    pub transformed: HolonomyResult,
    /// `V(x₀)`, the frame change at the base point.
    pub v0: Mat2,
    /// `‖U′ − V(x₀)† U V(x₀)‖_F`.
    pub deviation: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Compares the holonomy of `base` with that of its gauge transform.
///
/// With `|η′_a⟩ = Σ_b |η_b⟩ V_ba` the coefficients transform as `c′ = V†c`,
/// so `U′ = V₀ U V₀†` holds with `V₀ = V(x₀)†`, the matrix taking initial
/// coefficients in the old frame to the new one.
pub fn gauge_covariance_check<F: ConnectionField + ?Sized>(
    path: &ParameterPath,
    base: &F,
    gauge: &GaugeField,
    steps: usize,
    tolerance: f64,
) -> Result<CovarianceReport> {
    path.require_closed()?;
    let start = path.sample(0.0);
    let end = path.sample(path.duration());
    let v0 = gauge.eval(start.theta, start.phi).v;
    let mismatch = gauge.eval(end.theta, end.phi).v.dist(&v0);
    if mismatch > 1e-12 {
        return Err(Error::NotSingleValued(mismatch));
    }
    let defect = v0.unitarity_defect();
    if defect > 1e-10 {
        return Err(Error::NotUnitary(defect));
    }
    let u = holonomy_field(path, base, steps)?;
    let moved = TransformedField { base, gauge };
    let u_prime = holonomy_field(path, &moved, steps)?;
    let deviation = u_prime.unitary.dist(&(v0.adjoint() * u.unitary * v0));
    Ok(CovarianceReport {
        base: u,
        transformed: u_prime,
        v0,
        deviation,
        tolerance,
        holds: deviation <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::FormulaField;
    use crate::matrix::{expm, sigma_z};
    use crate::model::SystemParams;
    use crate::path::{LoopShape, Ramp};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, TAU};

    fn lissajous(omega: f64, delta: f64) -> ParameterPath {
        ParameterPath::from_loop(
            &LoopShape::Lissajous {
                theta0: 1.0,
                amplitude: 0.4,
            },
            Ramp::Linear,
            1.0,
            omega,
            delta,
        )
        .unwrap()
    }

    #[test]
    fn computational_basis_holonomy_is_identity() {
        let h = holonomy(
            &lissajous(1.0, 5.0),
            ConnectionVariant::ComputationalBasis,
            100,
        )
        .unwrap();
        assert!(h.deviation_from_identity() <= 1e-12);
    }

    #[test]
    fn corrected_phi_circle_is_trivial() {
        let path = ParameterPath::from_loop(
            &LoopShape::PhiCircle { theta: FRAC_PI_3 },
            Ramp::Linear,
            1.0,
            1.0,
            100.0,
        )
        .unwrap();
        let h = holonomy(&path, ConnectionVariant::ApproxCorrected, 10_000).unwrap();
        // the remaining deviation is the midpoint truncation error itself
        assert!(h.deviation_from_identity() <= 1.01 * h.richardson_error);
        assert!(
            h.deviation_from_identity() <= 1e-7,
            "{}",
            h.deviation_from_identity()
        );
        let fine = holonomy(&path, ConnectionVariant::ApproxCorrected, 40_000).unwrap();
        assert!(fine.deviation_from_identity() <= 1e-8);
    }

    #[test]
    fn exact_equatorial_circle_matches_closed_form() {
        // Δ = 2, Ω = 1: generic constant γ
        let path = ParameterPath::from_loop(
            &LoopShape::PhiCircle { theta: FRAC_PI_2 },
            Ramp::Linear,
            3.0,
            1.0,
            2.0,
        )
        .unwrap();
        let g = mixing_angle(&path.sample(0.0).params()).unwrap();
        let gen =
            (sigma_z() + (Mat2::identity() - sigma_z()) * (0.5 * g.sin * g.sin)).scale(I * TAU);
        let want = expm(&gen).unwrap();
        for n in [2, 7, 1000] {
            let h = holonomy(&path, ConnectionVariant::Exact, n).unwrap();
            assert!(h.unitary.dist(&want) < 1e-12, "N = {n}");
        }
    }

    #[test]
    fn open_path_and_tiny_n_rejected() {
        let open = ParameterPath::stationary(SystemParams::new(1.0, 1.0, 0.1, 0.1).unwrap(), 1.0)
            .unwrap()
            .then(
                &ParameterPath::from_loop(
                    &LoopShape::PhiCircle { theta: 0.1 },
                    Ramp::Linear,
                    1.0,
                    1.0,
                    1.0,
                )
                .unwrap(),
            );
        assert!(open.is_err());
        let ramp = ParameterPath::new("open", 1.0, |t| PathSample {
            theta: t,
            phi: 0.0,
            omega: 1.0,
            delta: 1.0,
            theta_dot: 1.0,
            phi_dot: 0.0,
        })
        .unwrap();
        assert!(matches!(
            holonomy(&ramp, ConnectionVariant::Exact, 10),
            Err(Error::OpenPath(_))
        ));
        assert!(evolve_subspace(&ramp, 10).is_ok());
        assert!(matches!(
            holonomy(&lissajous(1.0, 1.0), ConnectionVariant::Exact, 1),
            Err(Error::TooFewSteps { .. })
        ));
    }

    #[test]
    fn midpoint_product_is_second_order() {
        let path = lissajous(1.0, 0.0);
        let reference = holonomy(&path, ConnectionVariant::DuSign, 1 << 14)
            .unwrap()
            .unitary;
        let errs: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&n| {
                holonomy(&path, ConnectionVariant::DuSign, n)
                    .unwrap()
                    .unitary
                    .dist(&reference)
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() <= 0.3, "ratio {ratio}");
        }
    }

    #[test]
    fn reversal_inverts_and_concatenation_composes() {
        let a = lissajous(1.0, 0.5);
        let b = ParameterPath::from_loop(
            &LoopShape::Waypoints(vec![(1.0, 0.0), (1.5, 0.5), (0.8, 1.0)]),
            Ramp::Linear,
            1.0,
            1.0,
            0.5,
        )
        .unwrap();
        let n = 4000;
        let ua = holonomy(&a, ConnectionVariant::Exact, n).unwrap();
        let ur = holonomy(&a.reversed(), ConnectionVariant::Exact, n).unwrap();
        assert!(ur.unitary.dist(&ua.unitary.adjoint()) < 1e-6);
        let ub = holonomy(&b, ConnectionVariant::Exact, n).unwrap();
        let uab = holonomy(&a.then(&b).unwrap(), ConnectionVariant::Exact, 2 * n).unwrap();
        assert!(uab.unitary.dist(&(ub.unitary * ua.unitary)) < 1e-5);
    }

    #[test]
    fn evolve_without_dynamics_is_trivial() {
        // Ω = 0 gives γ = 0 and D = 0
        let path = lissajous(0.0, 1.0);
        let u = evolve_subspace(&path, 2000).unwrap();
        let h = holonomy(&path, ConnectionVariant::ApproxCorrected, 2000).unwrap();
        assert!(u.unitary.dist(&h.unitary) < 1e-15);
        assert!(u.deviation_from_identity() <= 1.01 * u.richardson_error);
    }

    #[test]
    fn stationary_evolution_is_pure_dynamical_phase() {
        let p = SystemParams::new(1.3, 0.4, 0.7, 0.2).unwrap();
        let path = ParameterPath::stationary(p, 2.5).unwrap();
        let d = crate::model::dynamical_matrix(&p).unwrap();
        let want = expm(&(d.scale(-I) * 2.5)).unwrap();
        assert!(evolve_subspace(&path, 3).unwrap().unitary.dist(&want) < 1e-14);
    }

    #[test]
    fn commutator_reference_value() {
        let path = ParameterPath::new("theta-sweep", 1.0, |t| PathSample {
            theta: FRAC_PI_4 + (t - 0.5),
            phi: 0.0,
            omega: 1.0,
            delta: 0.0,
            theta_dot: 1.0,
            phi_dot: 0.0,
        })
        .unwrap();
        // A_θ does not depend on θ, so every sample gives √2 cosγ · tanγ · Ω = 1
        assert!((commutator_max(&path, 11).unwrap() - 1.0).abs() < 1e-14);
        assert!(commutator_max(&path, 9).is_err());
    }

    #[test]
    fn commutator_vanishes_without_mixing() {
        assert_eq!(commutator_max(&lissajous(0.0, 2.0), 20).unwrap(), 0.0);
    }

    #[test]
    fn constant_gauge_conjugates_exactly() {
        let path = lissajous(1.0, 0.0);
        let u = expm(&(crate::matrix::sigma_x() * 0.3 + sigma_z() * 0.7).scale(I)).unwrap();
        let base = FormulaField::new(ConnectionVariant::DuSign, MixingAngle::zero());
        let r = gauge_covariance_check(&path, &base, &GaugeField::constant(u), 500, 1e-12).unwrap();
        assert!(r.holds, "{}", r.deviation);
    }

    #[test]
    fn half_winding_gauge_rejected() {
        let spinor = GaugeField::from_fn("half", |_, phi| crate::gauge::GaugeValue {
            v: expm2_unchecked(&sigma_z().scale(I * (0.5 * phi))),
            d_theta: Mat2::zero(),
            d_phi: sigma_z().scale(I * 0.5) * expm2_unchecked(&sigma_z().scale(I * (0.5 * phi))),
        });
        let base = FormulaField::new(ConnectionVariant::DuSign, MixingAngle::zero());
        assert!(matches!(
            gauge_covariance_check(&lissajous(1.0, 0.0), &base, &spinor, 100, 1e-7),
            Err(Error::NotSingleValued(_))
        ));
    }
}
