//! Parameter paths `t ↦ (θ, φ, Ω, Δ)` with their θ, φ velocities.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::SystemParams;

/// Slow parameters and angular velocities at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSample {
    pub theta: f64,
    pub phi: f64,
    pub omega: f64,
    pub delta: f64,
    pub theta_dot: f64,
    pub phi_dot: f64,
}

impl PathSample {
    pub fn params(&self) -> SystemParams {
        SystemParams {
            omega: self.omega,
            theta: self.theta,
            phi: self.phi,
            delta: self.delta,
        }
    }
}

type Sampler = dyn Fn(f64) -> PathSample + Send + Sync;

/// A curve in slow-parameter space traversed over `[0, duration]`.
#[derive(Clone)]
pub struct ParameterPath {
    label: String,
    duration: f64,
    sampler: Arc<Sampler>,
    closure_gap: f64,
}

impl fmt::Debug for ParameterPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParameterPath")
            .field("label", &self.label)
            .field("duration", &self.duration)
            .field("closed", &self.is_closed())
            .finish()
    }
}

/// Endpoint tolerance for calling a path closed.
pub const CLOSURE_TOL: f64 = 1e-12;

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

impl ParameterPath {
    /// Wraps an arbitrary schedule. The sampler must return the analytic
    /// derivatives `θ̇, φ̇`; [`ParameterPath::derivative_defect`] checks them.
    pub fn new(
        label: impl Into<String>,
        duration: f64,
        sampler: impl Fn(f64) -> PathSample + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "path duration must be positive and finite, got {duration}"
            )));
        }
        let start = sampler(0.0);
        let end = sampler(duration);
        for s in [start, end] {
            s.params().validate()?;
        }
        let closure_gap = angle_gap(start.theta, end.theta)
            .max(angle_gap(start.phi, end.phi))
            .max((start.omega - end.omega).abs())
            .max((start.delta - end.delta).abs());
        Ok(Self {
            label: label.into(),
            duration,
            sampler: Arc::new(sampler),
            closure_gap,
        })
    }

    /// Standard loop traversed with the given ramp at constant Ω, Δ.
    pub fn from_loop(
        shape: &LoopShape,
        ramp: Ramp,
        duration: f64,
        omega: f64,
        delta: f64,
    ) -> Result<Self> {
        SystemParams::new(omega, delta, 0.0, 0.0)?;
        shape.validate()?;
        let curve = shape.curve();
        let label = format!("{}/{}", shape.name(), ramp.name());
        Self::new(label, duration, move |t| {
            let (s, s_dot) = ramp.eval(t / duration);
            let (theta, phi, dtheta, dphi) = curve.eval(s);
            PathSample {
                theta,
                phi,
                omega,
                delta,
                theta_dot: dtheta * s_dot / duration,
                phi_dot: dphi * s_dot / duration,
            }
        })
    }

    /// Constant parameters held for `duration`.
    pub fn stationary(p: SystemParams, duration: f64) -> Result<Self> {
        p.validate()?;
        Self::new("stationary", duration, move |_| PathSample {
            theta: p.theta,
            phi: p.phi,
            omega: p.omega,
            delta: p.delta,
            theta_dot: 0.0,
            phi_dot: 0.0,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn sample(&self, t: f64) -> PathSample {
        (self.sampler)(t)
    }

    /// Largest endpoint mismatch, angles taken mod 2π.
    pub fn closure_gap(&self) -> f64 {
        self.closure_gap
    }

    pub fn is_closed(&self) -> bool {
        self.closure_gap <= CLOSURE_TOL
    }

    pub fn require_closed(&self) -> Result<()> {
        if self.is_closed() {
            Ok(())
        } else {
            Err(Error::OpenPath(self.closure_gap))
        }
    }

    /// The same curve traversed backwards.
    pub fn reversed(&self) -> Self {
        let inner = self.sampler.clone();
        let duration = self.duration;
        Self {
            label: format!("reverse({})", self.label),
            duration,
            sampler: Arc::new(move |t| {
                let s = inner(duration - t);
                PathSample {
                    theta_dot: -s.theta_dot,
                    phi_dot: -s.phi_dot,
                    ..s
                }
            }),
            closure_gap: self.closure_gap,
        }
    }

    /// `self` followed by `next`. The end of `self` must coincide with the
    /// start of `next` (angles mod 2π).
    pub fn then(&self, next: &ParameterPath) -> Result<Self> {
        let a = self.sample(self.duration);
        let b = next.sample(0.0);
        let gap = angle_gap(a.theta, b.theta)
            .max(angle_gap(a.phi, b.phi))
            .max((a.omega - b.omega).abs())
            .max((a.delta - b.delta).abs());
        if gap > CLOSURE_TOL {
            return Err(Error::OpenPath(gap));
        }
        let (first, second) = (self.sampler.clone(), next.sampler.clone());
        let split = self.duration;
        Self::new(
            format!("{}+{}", self.label, next.label),
            self.duration + next.duration,
            move |t| {
                if t <= split {
                    first(t)
                } else {
                    second(t - split)
                }
            },
        )
    }

    /// Largest relative mismatch between the supplied `θ̇, φ̇` and central
    /// differences, over `samples` interior points.
    pub fn derivative_defect(&self, samples: usize) -> f64 {
        let h = 1e-6 * self.duration;
        let mut worst: f64 = 0.0;
        for k in 0..samples {
            let t = self.duration * (k as f64 + 0.5) / samples as f64;
            let (lo, mid, hi) = (self.sample(t - h), self.sample(t), self.sample(t + h));
            let fd_theta = (hi.theta - lo.theta) / (2.0 * h);
            let fd_phi = (hi.phi - lo.phi) / (2.0 * h);
            let scale = 1.0 + mid.theta_dot.abs().max(mid.phi_dot.abs()) * self.duration;
            let defect = ((fd_theta - mid.theta_dot).abs() + (fd_phi - mid.phi_dot).abs())
                * self.duration
                / scale;
            worst = worst.max(defect);
        }
        worst
    }
}

/// Time reparametrization `t/τ ↦ s ∈ [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ramp {
    Linear,
    /// `s = u − sin(2πu)/2π`: zero velocity at both ends.
    Smooth,
}

impl Ramp {
    pub fn name(&self) -> &'static str {
        match self {
            Ramp::Linear => "linear",
            Ramp::Smooth => "smooth",
        }
    }

    /// `(s, ds/du)`.
    pub fn eval(&self, u: f64) -> (f64, f64) {
        match self {
            Ramp::Linear => (u, 1.0),
            Ramp::Smooth => (u - (TAU * u).sin() / TAU, 1.0 - (TAU * u).cos()),
        }
    }
}

/// Loop geometry in the `(θ, φ)` plane, parametrized by `s ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub enum LoopShape {
    /// θ fixed, φ: 0 → 2π.
    PhiCircle { theta: f64 },
    /// φ fixed, θ: 0 → π → 0 along the same segment (zero area).
    ThetaCircle { phi: f64 },
    /// θ = θ₀ + a sin 2πs, φ = 2πs.
    Lissajous { theta0: f64, amplitude: f64 },
    /// Closed periodic cubic spline through `(θ, φ)` waypoints.
    Waypoints(Vec<(f64, f64)>),
}

impl LoopShape {
    pub fn name(&self) -> &'static str {
        match self {
            LoopShape::PhiCircle { .. } => "phi-circle",
            LoopShape::ThetaCircle { .. } => "theta-circle",
            LoopShape::Lissajous { .. } => "lissajous",
            LoopShape::Waypoints(_) => "custom",
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let ok = match self {
            LoopShape::PhiCircle { theta } => finite(&[*theta]),
            LoopShape::ThetaCircle { phi } => finite(&[*phi]),
            LoopShape::Lissajous { theta0, amplitude } => finite(&[*theta0, *amplitude]),
            LoopShape::Waypoints(pts) => {
                if pts.len() < 3 {
                    return Err(Error::InvalidParams(format!(
                        "a waypoint loop needs at least 3 points, got {}",
                        pts.len()
                    )));
                }
                pts.iter().all(|(a, b)| a.is_finite() && b.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "non-finite {} loop parameter",
                self.name()
            )))
        }
    }

    fn curve(&self) -> Curve {
        match self.clone() {
            LoopShape::PhiCircle { theta } => {
                Curve::Analytic(Arc::new(move |s| (theta, TAU * s, 0.0, TAU)))
            }
            LoopShape::ThetaCircle { phi } => Curve::Analytic(Arc::new(move |s| {
                let (sn, cs) = (TAU * s).sin_cos();
                (0.5 * PI * (1.0 - cs), phi, PI * PI * sn, 0.0)
            })),
            LoopShape::Lissajous { theta0, amplitude } => Curve::Analytic(Arc::new(move |s| {
                let (sn, cs) = (TAU * s).sin_cos();
                (theta0 + amplitude * sn, TAU * s, amplitude * TAU * cs, TAU)
            })),
            LoopShape::Waypoints(pts) => Curve::Spline(PeriodicSpline::new(pts)),
        }
    }
}

type CurveFn = dyn Fn(f64) -> (f64, f64, f64, f64) + Send + Sync;

enum Curve {
    Analytic(Arc<CurveFn>),
    Spline(PeriodicSpline),
}

impl Curve {
    /// `(θ, φ, dθ/ds, dφ/ds)`.
    fn eval(&self, s: f64) -> (f64, f64, f64, f64) {
        match self {
            Curve::Analytic(f) => f(s),
            Curve::Spline(spline) => spline.eval(s),
        }
    }
}

/// Uniform closed cubic spline through `pts` (C², periodic); each segment
/// takes `1/n` of `s`.
struct PeriodicSpline {
    pts: Vec<(f64, f64)>,
    /// Second derivatives at the knots, per unit segment parameter.
    moments: Vec<(f64, f64)>,
}

impl PeriodicSpline {
    fn new(pts: Vec<(f64, f64)>) -> Self {
        let n = pts.len();
        let at = |k: usize, off: isize| pts[(k as isize + off).rem_euclid(n as isize) as usize];
        let rhs: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let (a, b, c) = (at(k, -1), at(k, 0), at(k, 1));
                (6.0 * (a.0 - 2.0 * b.0 + c.0), 6.0 * (a.1 - 2.0 * b.1 + c.1))
            })
            .collect();
        // M[k-1] + 4 M[k] + M[k+1] = rhs[k]; strictly diagonally dominant,
        // Gauss–Seidel contracts by at least 1/2 per sweep
        let mut m = vec![(0.0, 0.0); n];
        for _ in 0..200 {
            let mut change: f64 = 0.0;
            for k in 0..n {
                let (l, r) = (m[(k + n - 1) % n], m[(k + 1) % n]);
                let next = ((rhs[k].0 - l.0 - r.0) / 4.0, (rhs[k].1 - l.1 - r.1) / 4.0);
                change = change
                    .max((next.0 - m[k].0).abs())
                    .max((next.1 - m[k].1).abs());
                m[k] = next;
            }
            if change == 0.0 {
                break;
            }
        }
        Self { pts, moments: m }
    }

    fn eval(&self, s: f64) -> (f64, f64, f64, f64) {
        let n = self.pts.len();
        let x = s.clamp(0.0, 1.0) * n as f64;
        let seg = (x.floor() as usize).min(n - 1);
        let u = x - seg as f64;
        let v = 1.0 - u;
        let next = (seg + 1) % n;
        let comp = |a: f64, b: f64, ma: f64, mb: f64| {
            let val = v * a + u * b + ((v * v * v - v) * ma + (u * u * u - u) * mb) / 6.0;
            let der = b - a + ((1.0 - 3.0 * v * v) * ma + (3.0 * u * u - 1.0) * mb) / 6.0;
            (val, der * n as f64)
        };
        let (p, q) = (self.pts[seg], self.pts[next]);
        let (mp, mq) = (self.moments[seg], self.moments[next]);
        let (theta, dtheta) = comp(p.0, q.0, mp.0, mq.0);
        let (phi, dphi) = comp(p.1, q.1, mp.1, mq.1);
        (theta, phi, dtheta, dphi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shapes() -> Vec<LoopShape> {
        vec![
            LoopShape::PhiCircle { theta: 1.0 },
            LoopShape::ThetaCircle { phi: 0.3 },
            LoopShape::Lissajous {
                theta0: 1.0,
                amplitude: 0.4,
            },
            LoopShape::Waypoints(vec![(0.5, 0.0), (1.2, 0.4), (0.9, 1.5), (0.4, 1.0)]),
        ]
    }

    #[test]
    fn standard_loops_are_closed_with_consistent_derivatives() {
        for shape in shapes() {
            for ramp in [Ramp::Linear, Ramp::Smooth] {
                let p = ParameterPath::from_loop(&shape, ramp, 7.0, 1.0, 3.0).unwrap();
                assert!(p.is_closed(), "{shape:?}");
                assert!(
                    p.derivative_defect(97) < 1e-6,
                    "{shape:?} {ramp:?}: {}",
                    p.derivative_defect(97)
                );
            }
        }
    }

    #[test]
    fn smooth_ramp_starts_and_ends_at_rest() {
        let p = ParameterPath::from_loop(&shapes()[2], Ramp::Smooth, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(p.sample(0.0).phi_dot, 0.0);
        assert!(p.sample(2.0).phi_dot.abs() < 1e-15);
    }

    #[test]
    fn open_path_detected() {
        let p = ParameterPath::new("ramp", 1.0, |t| PathSample {
            theta: t,
            phi: 0.0,
            omega: 1.0,
            delta: 1.0,
            theta_dot: 1.0,
            phi_dot: 0.0,
        })
        .unwrap();
        assert!(!p.is_closed());
        assert!(matches!(p.require_closed(), Err(Error::OpenPath(_))));
    }

    #[test]
    fn reversal_and_concatenation() {
        let p = ParameterPath::from_loop(&shapes()[2], Ramp::Linear, 1.0, 1.0, 1.0).unwrap();
        let r = p.reversed();
        assert_eq!(r.sample(0.25).theta, p.sample(0.75).theta);
        assert_eq!(r.sample(0.25).theta_dot, -p.sample(0.75).theta_dot);
        let both = p.then(&r).unwrap();
        assert_eq!(both.duration(), 2.0);
        assert!(both.is_closed());
        let elsewhere = ParameterPath::from_loop(
            &LoopShape::PhiCircle { theta: 0.2 },
            Ramp::Linear,
            1.0,
            1.0,
            1.0,
        )
        .unwrap();
        assert!(p.then(&elsewhere).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ParameterPath::from_loop(&shapes()[0], Ramp::Linear, 0.0, 1.0, 1.0).is_err());
        assert!(ParameterPath::from_loop(&shapes()[0], Ramp::Linear, 1.0, -1.0, 1.0).is_err());
        assert!(ParameterPath::from_loop(
            &LoopShape::Waypoints(vec![(0.0, 0.0)]),
            Ramp::Linear,
            1.0,
            1.0,
            1.0
        )
        .is_err());
    }
}
