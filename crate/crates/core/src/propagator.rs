//! Exact time evolution of the three-level system along a parameter path,
//! with leakage and adiabaticity diagnostics.
//!
//! `i ∂_t U = H(t) U`, `U(0) = 1̂`, is integrated with a fixed-step
//! fourth-order method. Two are available:
//!
//! - [`Method::Magnus4`] (default): two-point Gauss–Legendre Magnus
//!   expansion, `U ← exp(Ω) U` with
//!   `Ω = (h/2)(A₁ + A₂) + (√3/12) h² [A₂, A₁]`, `A = −iH`. Unitary up to
//!   round-off and exact for constant H, so steps are limited by how fast
//!   H changes rather than by its norm.
//! - [`Method::Rk4`]: classical Runge–Kutta on the propagator.
//!
//! Every 1000 steps the propagator is projected back onto the unitary group
//! (polar decomposition); the drift removed there is reported.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::gauge::ConnectionVariant;
use crate::holonomy::{evolve_subspace, holonomy, HolonomyResult};
use crate::matrix::{expm, inner, polar_unitary, Mat2, Mat3, C64, I};
use crate::model::{eigenvectors, hamiltonian_unchecked, mixing_angle, spectrum, MixingAngle};
use crate::path::{ParameterPath, PathSample};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Method {
    #[default]
    Magnus4,
    Rk4,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Magnus4 => "magnus4",
            Method::Rk4 => "rk4",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "magnus4" => Ok(Method::Magnus4),
            "rk4" => Ok(Method::Rk4),
            other => Err(format!(
                "unknown method `{other}` (expected magnus4 or rk4)"
            )),
        }
    }
}

/// Steps between polar re-projections.
pub const RENORM_INTERVAL: usize = 1000;

#[derive(Clone, Copy, Debug)]
pub struct PropagationResult {
    pub final_unitary: Mat3,
    /// Largest population outside span{ψ₁(t), ψ₂(t)} over all t, maximized
    /// over initial states in span{ψ₁(0), ψ₂(0)}.
    pub leakage: f64,
    /// `⟨ψ_a(τ)|U|ψ_b(0)⟩` for a, b ∈ {1, 2}.
    pub projected_2x2: Mat2,
    pub step_count: usize,
    /// `‖U_N − U_{N/2}‖_F / 15`.
    pub estimated_error: f64,
    /// Largest `‖U†U − 1̂‖_F` found at a re-projection (per 1000 steps).
    pub max_unitarity_drift: f64,
}

struct RawRun {
    u: Mat3,
    leakage: f64,
    drift: f64,
}

fn gamma_at(s: &PathSample) -> MixingAngle {
    mixing_angle(&s.params()).unwrap_or_else(|_| MixingAngle::zero())
}

fn minus_i_h(path: &ParameterPath, t: f64) -> Mat3 {
    hamiltonian_unchecked(&path.sample(t).params()).scale(-I)
}

fn magnus4_step(path: &ParameterPath, t: f64, h: f64) -> Mat3 {
    const C: f64 = 0.288_675_134_594_812_9; // √3/6
    let a1 = minus_i_h(path, t + (0.5 - C) * h);
    let a2 = minus_i_h(path, t + (0.5 + C) * h);
    let generator = (a1 + a2) * (0.5 * h) + a2.commutator(&a1) * (0.5 * C * h * h);
    // the argument is finite by construction
    expm(&generator).expect("finite Magnus generator")
}

fn rk4_step(path: &ParameterPath, t: f64, h: f64, u: &Mat3) -> Mat3 {
    let a0 = minus_i_h(path, t);
    let am = minus_i_h(path, t + 0.5 * h);
    let a1 = minus_i_h(path, t + h);
    let k1 = a0 * *u;
    let k2 = am * (*u + k1 * (0.5 * h));
    let k3 = am * (*u + k2 * (0.5 * h));
    let k4 = a1 * (*u + k3 * h);
    *u + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

fn run(path: &ParameterPath, steps: usize, method: Method, track_leakage: bool) -> Result<RawRun> {
    let h = path.duration() / steps as f64;
    let start = path.sample(0.0);
    let initial = eigenvectors(start.theta, start.phi, &gamma_at(&start));
    let mut u = Mat3::identity();
    let mut leakage: f64 = 0.0;
    let mut drift: f64 = 0.0;
    for k in 0..steps {
        let t = k as f64 * h;
        u = match method {
            Method::Magnus4 => magnus4_step(path, t, h) * u,
            Method::Rk4 => rk4_step(path, t, h, &u),
        };
        if (k + 1) % RENORM_INTERVAL == 0 || k + 1 == steps {
            drift = drift.max(u.unitarity_defect());
            u = polar_unitary(&u)?;
        }
        if track_leakage {
            let s = path.sample(t + h);
            let psi3 = eigenvectors(s.theta, s.phi, &gamma_at(&s))[2];
            let p: f64 = initial[..2]
                .iter()
                .map(|psi| inner(&psi3, &u.apply(psi)).norm_sqr())
                .sum();
            leakage = leakage.max(p);
        }
    }
    Ok(RawRun { u, leakage, drift })
}

/// Integrates the full propagator with `steps` fixed steps (rounded up to
/// an even count). The error is estimated against a run with half the
/// steps; if the estimate exceeds `tolerance` the call fails and reports
/// the step count that should meet it.
pub fn propagate(
    path: &ParameterPath,
    steps: usize,
    method: Method,
    tolerance: f64,
) -> Result<PropagationResult> {
    if steps < 4 {
        return Err(Error::TooFewSteps { min: 4, got: steps });
    }
    let start = path.sample(0.0);
    let end = path.sample(path.duration());
    spectrum(&start.params())?;
    spectrum(&end.params())?;
    let steps = steps + steps % 2;

    // a diverged run (singular propagator) counts as an infinite error
    let fine = run(path, steps, method, true);
    let coarse = run(path, steps / 2, method, false);
    let estimated_error = match (&fine, &coarse) {
        (Ok(f), Ok(c)) => f.u.dist(&c.u) / 15.0,
        _ => f64::INFINITY,
    };
    if estimated_error.is_nan() || estimated_error > tolerance {
        let required = if estimated_error.is_finite() {
            (steps as f64 * (estimated_error / tolerance).powf(0.25) * 1.1).ceil() as usize
        } else {
            16 * steps
        };
        return Err(Error::ToleranceNotMet {
            steps,
            estimate: estimated_error,
            tolerance,
            required,
        });
    }
    let fine = fine?;

    let psi_start = eigenvectors(start.theta, start.phi, &gamma_at(&start));
    let psi_end = eigenvectors(end.theta, end.phi, &gamma_at(&end));
    let mut projected = Mat2::zero();
    for b in 0..2 {
        let evolved = fine.u.apply(&psi_start[b]);
        for a in 0..2 {
            projected.m[a][b] = inner(&psi_end[a], &evolved);
        }
    }
    Ok(PropagationResult {
        final_unitary: fine.u,
        leakage: fine.leakage.min(1.0),
        projected_2x2: projected,
        step_count: steps,
        estimated_error,
        max_unitarity_drift: fine.drift,
    })
}

/// Unchecked propagator without error estimate or leakage tracking; for
/// convergence studies.
pub fn propagator_only(path: &ParameterPath, steps: usize, method: Method) -> Result<Mat3> {
    Ok(run(path, steps, method, false)?.u)
}

/// Largest `‖U†U − 1̂‖_F` accumulated over `RENORM_INTERVAL` steps.
pub fn unitarity_drift(path: &ParameterPath, steps: usize, method: Method) -> Result<f64> {
    Ok(run(path, steps, method, false)?.drift)
}

#[derive(Clone, Copy, Debug)]
pub struct AdiabaticRow {
    pub tau: f64,
    /// `‖projected_2x2(τ) − U_subspace(τ)‖_F`.
    pub distance: f64,
    pub leakage: f64,
    pub propagator_error: f64,
    pub subspace_error: f64,
    pub steps: usize,
}

#[derive(Clone, Debug)]
pub struct AdiabaticReport {
    pub rows: Vec<AdiabaticRow>,
    /// Log-log slope of `distance` against τ.
    pub power: f64,
    pub monotone: bool,
}

/// Step budgets for [`adiabatic_comparison`].
#[derive(Clone, Copy, Debug)]
pub struct AdiabaticOptions {
    /// Full-propagator steps per unit of the largest level splitting times τ.
    pub steps_per_radian: f64,
    pub min_steps: usize,
    pub subspace_min_steps: usize,
    /// Subspace product steps per unit of τ.
    pub subspace_steps_per_time: f64,
    pub method: Method,
    pub tolerance: f64,
}

impl Default for AdiabaticOptions {
    fn default() -> Self {
        Self {
            steps_per_radian: 1.0,
            min_steps: 2000,
            subspace_min_steps: 50_000,
            subspace_steps_per_time: 200.0,
            method: Method::Magnus4,
            tolerance: 1e-6,
        }
    }
}

/// Runs the exact propagator and the 2×2 subspace formula over the same
/// loop for each duration in `taus`; `make_path(τ)` builds the loop.
pub fn adiabatic_comparison(
    taus: &[f64],
    opts: &AdiabaticOptions,
    make_path: impl Fn(f64) -> Result<ParameterPath> + Sync,
) -> Result<AdiabaticReport> {
    let rows = taus
        .par_iter()
        .map(|&tau| {
            let path = make_path(tau)?;
            let s = path.sample(0.0);
            let spread = {
                let e = spectrum(&s.params())?.energies;
                e.iter().fold(0.0f64, |m, x| m.max(x.abs())) + s.omega
            };
            let steps =
                ((spread * tau * opts.steps_per_radian).ceil() as usize).max(opts.min_steps);
            let exact = propagate(&path, steps, opts.method, opts.tolerance)?;
            let sub_steps =
                ((tau * opts.subspace_steps_per_time).ceil() as usize).max(opts.subspace_min_steps);
            let sub = evolve_subspace(&path, sub_steps)?;
            Ok(AdiabaticRow {
                tau,
                distance: exact.projected_2x2.dist(&sub.unitary),
                leakage: exact.leakage,
                propagator_error: exact.estimated_error,
                subspace_error: sub.richardson_error,
                steps: exact.step_count,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let t: Vec<f64> = rows.iter().map(|r| r.tau).collect();
    let d: Vec<f64> = rows.iter().map(|r| r.distance).collect();
    Ok(AdiabaticReport {
        power: loglog_slope(&t, &d),
        monotone: d.windows(2).all(|w| w[1] < w[0]),
        rows,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct GpMagnitude {
    /// `‖U_geo − 1̂‖_F` for the exact connection.
    pub deviation: f64,
    pub sin2_gamma: f64,
    /// `deviation / sin²γ`; NaN at γ = 0.
    pub ratio: f64,
    pub holonomy: HolonomyResult,
}

/// Size of the geometric phase of the exact connection around a closed loop.
pub fn gp_magnitude_report(path: &ParameterPath, steps: usize) -> Result<GpMagnitude> {
    let h = holonomy(path, ConnectionVariant::Exact, steps)?;
    let g = mixing_angle(&path.sample(0.0).params())?;
    let sin2 = g.sin * g.sin;
    let deviation = h.deviation_from_identity();
    Ok(GpMagnitude {
        deviation,
        sin2_gamma: sin2,
        ratio: if sin2 > 0.0 {
            deviation / sin2
        } else {
            f64::NAN
        },
        holonomy: h,
    })
}

/// `⟨H⟩` in a state, used by conservation checks.
pub fn energy_expectation(h: &Mat3, psi: &[C64; 3]) -> f64 {
    inner(psi, &h.apply(psi)).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{hamiltonian, SystemParams};
    use crate::path::{LoopShape, Ramp};

    fn loop_path(tau: f64, omega: f64, delta: f64) -> ParameterPath {
        ParameterPath::from_loop(
            &LoopShape::Lissajous {
                theta0: 1.0,
                amplitude: 0.4,
            },
            Ramp::Smooth,
            tau,
            omega,
            delta,
        )
        .unwrap()
    }

    #[test]
    fn constant_hamiltonian_matches_expm() {
        let p = SystemParams::new(1.3, 0.7, 0.5, 0.9).unwrap();
        let h = hamiltonian(&p).unwrap();
        let want = expm(&h.scale(-I)).unwrap();
        let path = ParameterPath::stationary(p, 1.0).unwrap();
        for method in [Method::Magnus4, Method::Rk4] {
            let r = propagate(&path, 400, method, 1e-8).unwrap();
            assert!(r.final_unitary.dist(&want) < 1e-10, "{method:?}");
        }
    }

    #[test]
    fn decoupled_levels_only_pick_up_phases() {
        let path = ParameterPath::new("omega-off", 2.0, |t| PathSample {
            theta: 0.3 + 0.1 * t,
            phi: 0.2 * t,
            omega: 0.0,
            delta: 1.5,
            theta_dot: 0.1,
            phi_dot: 0.2,
        })
        .unwrap();
        let u = propagate(&path, 100, Method::Magnus4, 1e-10)
            .unwrap()
            .final_unitary;
        let want = Mat3::diag([
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::from_polar(1.0, 3.0 * 2.0),
        ]);
        assert!(u.dist(&want) < 1e-12);
    }

    #[test]
    fn reports_unmet_tolerance() {
        let path = loop_path(5.0, 1.0, 3.0);
        match propagate(&path, 10, Method::Rk4, 1e-12) {
            Err(Error::ToleranceNotMet {
                required, steps, ..
            }) => assert!(required > steps),
            other => panic!("expected ToleranceNotMet, got {other:?}"),
        }
    }

    #[test]
    fn both_methods_agree_and_converge_at_fourth_order() {
        let path = loop_path(5.0, 1.0, 2.0);
        let reference = propagator_only(&path, 20_000, Method::Magnus4).unwrap();
        let rk_ref = propagator_only(&path, 20_000, Method::Rk4).unwrap();
        assert!(reference.dist(&rk_ref) < 1e-11);
        for method in [Method::Magnus4, Method::Rk4] {
            let e1 = propagator_only(&path, 200, method)
                .unwrap()
                .dist(&reference);
            let e2 = propagator_only(&path, 400, method)
                .unwrap()
                .dist(&reference);
            assert!(e1 / e2 >= 14.0, "{method:?}: {}", e1 / e2);
        }
    }

    #[test]
    fn energy_is_conserved_for_constant_parameters() {
        let p = SystemParams::new(2.0, 1.0, 0.8, 0.3).unwrap();
        let h = hamiltonian(&p).unwrap();
        let psi0 = [C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)];
        let u = propagate(
            &ParameterPath::stationary(p, 7.0).unwrap(),
            2000,
            Method::Magnus4,
            1e-9,
        )
        .unwrap()
        .final_unitary;
        let e0 = energy_expectation(&h, &psi0);
        let e1 = energy_expectation(&h, &u.apply(&psi0));
        assert!((e0 - e1).abs() < 1e-10);
    }

    #[test]
    fn slow_loop_barely_leaks() {
        let r = propagate(&loop_path(200.0, 1.0, 5.0), 20_000, Method::Magnus4, 1e-6).unwrap();
        assert!(r.leakage < 1e-3, "{}", r.leakage);
        assert!(r.projected_2x2.is_unitary(1e-2));
    }

    #[test]
    fn sudden_loop_is_far_from_subspace_formula() {
        // at Δ = 0 the geometric factor alone is far from 1̂, while the
        // state cannot follow a loop this fast
        let path = loop_path(0.05, 1.0, 0.0);
        let exact = propagate(&path, 2000, Method::Magnus4, 1e-8).unwrap();
        let sub = evolve_subspace(&path, 2000).unwrap();
        assert!(exact.projected_2x2.dist(&sub.unitary) > 0.1);
    }

    #[test]
    fn gp_vanishes_without_mixing() {
        let r = gp_magnitude_report(&loop_path(1.0, 0.0, 1.0), 1000).unwrap();
        assert!(r.deviation <= 1.01 * r.holonomy.richardson_error);
        assert_eq!(r.sin2_gamma, 0.0);
        let strong = gp_magnitude_report(&loop_path(1.0, 1.0, 0.0), 1000).unwrap();
        assert!(strong.deviation > 0.05);
    }
}
