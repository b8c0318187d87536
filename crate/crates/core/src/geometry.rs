//! Strongly convex domains described by their radius of curvature as a
//! truncated Fourier series in the tangent angle `θ`:
//!
//! ```text
//! ρ(θ) = c0 + Σ a_n cos nθ + b_n sin nθ,   n ≥ 2
//! ```
//!
//! With `ds = ρ dθ` the boundary is `γ(θ) = ∫₀^θ ρ(t) (cos t, sin t) dt`, which
//! closes exactly because there is no `n = 1` harmonic. Every map used
//! downstream (position, arc length, Lazutkin `x`) is evaluated termwise in
//! closed form.

use std::f64::consts::TAU;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::solve_increasing;

/// One cosine/sine pair of the curvature-radius series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub n: u32,
    #[serde(rename = "cos")]
    pub a: f64,
    #[serde(rename = "sin")]
    pub b: f64,
}

impl Harmonic {
    pub fn new(n: u32, a: f64, b: f64) -> Self {
        Harmonic { n, a, b }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierCurvatureSpec {
    #[serde(default)]
    pub name: String,
    pub c0: f64,
    #[serde(default)]
    pub harmonics: Vec<Harmonic>,
}

impl FourierCurvatureSpec {
    pub fn new(name: impl Into<String>, c0: f64, harmonics: Vec<Harmonic>) -> Self {
        FourierCurvatureSpec {
            name: name.into(),
            c0,
            harmonics,
        }
    }

    pub fn circle(radius: f64) -> Self {
        Self::new("circle", radius, Vec::new())
    }

    /// Unit-mean table `ρ = 1 + eps cos(nθ)`.
    pub fn perturbed_circle(n: u32, eps: f64) -> Self {
        Self::new(format!("perturbed-{n}-{eps}"), 1.0, vec![Harmonic::new(n, eps, 0.0)])
    }

    /// The same table dilated by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        FourierCurvatureSpec {
            name: format!("{}x{lambda}", self.name),
            c0: self.c0 * lambda,
            harmonics: self
                .harmonics
                .iter()
                .map(|h| Harmonic::new(h.n, h.a * lambda, h.b * lambda))
                .collect(),
        }
    }

    /// The table rotated by `angle`, i.e. `ρ_new(θ) = ρ(θ - angle)`.
    pub fn rotated(&self, angle: f64) -> Self {
        FourierCurvatureSpec {
            name: format!("{}-rot", self.name),
            c0: self.c0,
            harmonics: self
                .harmonics
                .iter()
                .map(|h| {
                    let (s, c) = (h.n as f64 * angle).sin_cos();
                    Harmonic::new(h.n, h.a * c - h.b * s, h.a * s + h.b * c)
                })
                .collect(),
        }
    }

    /// The mirror image `ρ_new(θ) = ρ(-θ)`.
    pub fn reflected(&self) -> Self {
        FourierCurvatureSpec {
            name: format!("{}-mirror", self.name),
            c0: self.c0,
            harmonics: self.harmonics.iter().map(|h| Harmonic::new(h.n, h.a, -h.b)).collect(),
        }
    }

    pub fn radius(&self, theta: f64) -> f64 {
        self.harmonics.iter().fold(self.c0, |acc, h| {
            let (s, c) = (h.n as f64 * theta).sin_cos();
            acc + h.a * c + h.b * s
        })
    }

    /// `[ρ, ρ_θ, ρ_θθ, ρ_θθθ]`.
    pub fn radius_jet(&self, theta: f64) -> [f64; 4] {
        let mut jet = [self.c0, 0.0, 0.0, 0.0];
        for h in &self.harmonics {
            let n = h.n as f64;
            let (s, c) = (n * theta).sin_cos();
            let even = h.a * c + h.b * s;
            let odd = -h.a * s + h.b * c;
            jet[0] += even;
            jet[1] += n * odd;
            jet[2] -= n * n * even;
            jet[3] -= n * n * n * odd;
        }
        jet
    }

    /// Check the invariants; on success returns the minimum of `ρ`.
    pub fn validate(&self) -> Result<f64> {
        if !self.c0.is_finite() || self.c0 <= 0.0 {
            return Err(Error::InvalidSpec(format!("c0 must be finite and > 0, got {}", self.c0)));
        }
        for h in &self.harmonics {
            if h.n == 1 {
                return Err(Error::InvalidSpec(
                    "harmonic n = 1 present: the curve would not close".into(),
                ));
            }
            if h.n == 0 {
                return Err(Error::InvalidSpec("harmonic n = 0 duplicates c0".into()));
            }
            if !h.a.is_finite() || !h.b.is_finite() {
                return Err(Error::InvalidSpec(format!("harmonic n = {} has non-finite coefficients", h.n)));
            }
        }
        let (theta, rho) = self.minimum_radius();
        if !(rho > 0.0) {
            return Err(Error::NotConvex { theta, rho });
        }
        Ok(rho)
    }

    fn minimum_radius(&self) -> (f64, f64) {
        let nmax = self.harmonics.iter().map(|h| h.n).max().unwrap_or(0) as usize;
        let samples = (64 * nmax).max(4096);
        let (mut theta, mut rho) = (0..samples)
            .map(|j| {
                let t = TAU * j as f64 / samples as f64;
                (t, self.radius(t))
            })
            .fold((0.0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        // Polish with Newton on ρ_θ = 0.
        for _ in 0..20 {
            let [_, d1, d2, _] = self.radius_jet(theta);
            if d2 <= 0.0 {
                break;
            }
            let next = theta - d1 / d2;
            let value = self.radius(next);
            if value > rho || (next - theta).abs() > TAU / samples as f64 {
                break;
            }
            theta = next;
            rho = value;
        }
        (theta.rem_euclid(TAU), rho)
    }
}

/// Real trigonometric series `mean + Σ_k cos_k cos kθ + sin_k sin kθ`, `k ≥ 1`.
#[derive(Clone, Debug)]
struct TrigSeries {
    mean: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    /// Bound on `|∫₀^θ (f - mean)|`.
    drift_bound: f64,
}

impl TrigSeries {
    /// Fourier coefficients of a smooth 2π-periodic function, refined until
    /// the upper half of the spectrum reaches round-off relative to the mean.
    fn fit<F: Fn(f64) -> f64>(f: F) -> Self {
        let mut planner = FftPlanner::new();
        let mut m = 64usize;
        loop {
            let fft = planner.plan_fft_forward(m);
            let mut buf: Vec<Complex<f64>> = (0..m)
                .map(|j| Complex::new(f(TAU * j as f64 / m as f64), 0.0))
                .collect();
            fft.process(&mut buf);
            let scale = 1.0 / m as f64;
            let mean = buf[0].re * scale;
            let half = m / 2;
            let tail = buf[half / 2..half]
                .iter()
                .map(|z| 2.0 * z.norm() * scale)
                .fold(0.0, f64::max);
            if tail <= 2e-16 * mean.abs() || m >= 1 << 16 {
                let mut cos: Vec<f64> = (1..half).map(|k| 2.0 * buf[k].re * scale).collect();
                let mut sin: Vec<f64> = (1..half).map(|k| -2.0 * buf[k].im * scale).collect();
                let keep = (0..cos.len())
                    .rev()
                    .find(|&k| cos[k].abs().max(sin[k].abs()) > 5e-17 * mean.abs())
                    .map_or(0, |k| k + 1);
                cos.truncate(keep);
                sin.truncate(keep);
                let drift_bound = cos
                    .iter()
                    .zip(&sin)
                    .enumerate()
                    .map(|(k, (c, s))| (c.abs() + 2.0 * s.abs()) / (k + 1) as f64)
                    .sum();
                return TrigSeries {
                    mean,
                    cos,
                    sin,
                    drift_bound,
                };
            }
            m *= 2;
        }
    }

    /// `∫₀^θ f`.
    fn integral(&self, theta: f64) -> f64 {
        let mut acc = self.mean * theta;
        for (k, (c, s)) in self.cos.iter().zip(&self.sin).enumerate() {
            let kf = (k + 1) as f64;
            let (sk, ck) = (kf * theta).sin_cos();
            acc += (c * sk + s * (1.0 - ck)) / kf;
        }
        acc
    }
}

/// A point on the boundary together with its tangent angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub position: [f64; 2],
    pub tangent_angle: f64,
}

/// `ρ(s)` and its first three arc-length derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureJet {
    pub rho: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl CurvatureJet {
    pub fn as_array(&self) -> [f64; 4] {
        [self.rho, self.d1, self.d2, self.d3]
    }
}

/// A realized strongly convex boundary. Immutable after construction.
#[derive(Clone, Debug)]
pub struct BoundaryCurve {
    spec: FourierCurvatureSpec,
    perimeter: f64,
    lazutkin_constant: f64,
    cube_root: TrigSeries,
    arclength_drift: f64,
    min_radius: f64,
}

pub fn build_domain(spec: FourierCurvatureSpec) -> Result<BoundaryCurve> {
    BoundaryCurve::new(spec)
}

impl BoundaryCurve {
    pub fn new(spec: FourierCurvatureSpec) -> Result<Self> {
        let min_radius = spec.validate()?;
        let cube_root = TrigSeries::fit(|t| spec.radius(t).cbrt());
        let arclength_drift = spec
            .harmonics
            .iter()
            .map(|h| (h.a.abs() + 2.0 * h.b.abs()) / h.n as f64)
            .sum();
        Ok(BoundaryCurve {
            perimeter: TAU * spec.c0,
            lazutkin_constant: 1.0 / (TAU * cube_root.mean),
            spec,
            cube_root,
            arclength_drift,
            min_radius,
        })
    }

    pub fn spec(&self) -> &FourierCurvatureSpec {
        &self.spec
    }

    /// Boundary length `|∂Ω|`.
    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    /// The constant `C` normalising `x = C ∫ ρ^{-2/3} ds` to unit period.
    pub fn lazutkin_constant(&self) -> f64 {
        self.lazutkin_constant
    }

    pub fn min_radius(&self) -> f64 {
        self.min_radius
    }

    /// `|γ(2π) - γ(0)|`.
    pub fn closure_error(&self) -> f64 {
        let [x, y] = self.position_at_theta(TAU);
        x.hypot(y)
    }

    pub fn radius_at_theta(&self, theta: f64) -> f64 {
        self.spec.radius(theta)
    }

    /// Arc length from θ = 0, unwrapped (θ may be any real).
    pub fn arclength_at_theta(&self, theta: f64) -> f64 {
        self.spec.harmonics.iter().fold(self.spec.c0 * theta, |acc, h| {
            let n = h.n as f64;
            let (s, c) = (n * theta).sin_cos();
            acc + (h.a * s + h.b * (1.0 - c)) / n
        })
    }

    /// Inverse of [`Self::arclength_at_theta`] for any real `s`.
    pub fn theta_at_arclength(&self, s: f64) -> f64 {
        let c0 = self.spec.c0;
        let pad = (self.arclength_drift + 1e-12 * (1.0 + s.abs())) / c0;
        solve_increasing(
            |t| (self.arclength_at_theta(t) - s, self.spec.radius(t)),
            s / c0 - pad,
            s / c0 + pad,
            s / c0,
            1e-15 * (1.0 + (s / c0).abs()),
            "theta_at_arclength",
        )
        .expect("arc length is strictly increasing on a valid curve")
    }

    /// Lazutkin coordinate `x = C ∫₀^θ ρ^{1/3}(t) dt`, unwrapped.
    pub fn lazutkin_x_at_theta(&self, theta: f64) -> f64 {
        self.lazutkin_constant * self.cube_root.integral(theta)
    }

    /// Inverse of [`Self::lazutkin_x_at_theta`] for any real `x`.
    pub fn theta_at_lazutkin_x(&self, x: f64) -> f64 {
        let m = self.cube_root.mean;
        let target = x / self.lazutkin_constant;
        let pad = (self.cube_root.drift_bound + 1e-12 * (1.0 + target.abs())) / m;
        solve_increasing(
            |t| (self.cube_root.integral(t) - target, self.spec.radius(t).cbrt()),
            target / m - pad,
            target / m + pad,
            target / m,
            1e-15 * (1.0 + (target / m).abs()),
            "theta_at_lazutkin_x",
        )
        .expect("lazutkin x is strictly increasing on a valid curve")
    }

    /// `γ(θ0 + δ) - γ(θ0)` expressed in the frame of the unit tangent at `θ0`.
    ///
    /// Every term is integrated in product form (`sin(mδ/2)` factors), so the
    /// normal component keeps full relative accuracy as `δ → 0`.
    pub fn chord(&self, theta0: f64, delta: f64) -> (f64, f64) {
        let ic = |m: f64| if m == 0.0 { delta } else { (m * delta).sin() / m };
        let is = |m: f64| {
            if m == 0.0 {
                0.0
            } else {
                let h = (0.5 * m * delta).sin();
                2.0 * h * h / m
            }
        };
        let mut x = self.spec.c0 * delta.sin();
        let h0 = (0.5 * delta).sin();
        let mut y = self.spec.c0 * 2.0 * h0 * h0;
        for h in &self.spec.harmonics {
            let n = h.n as f64;
            let (sn, cn) = (n * theta0).sin_cos();
            let a = h.a * cn + h.b * sn;
            let b = -h.a * sn + h.b * cn;
            let (up, dn) = (n + 1.0, n - 1.0);
            x += 0.5 * (a * (ic(up) + ic(dn)) + b * (is(up) + is(dn)));
            y += 0.5 * (a * (is(up) - is(dn)) + b * (ic(dn) - ic(up)));
        }
        (x, y)
    }

    pub fn position_at_theta(&self, theta: f64) -> [f64; 2] {
        let (x, y) = self.chord(0.0, theta);
        [x, y]
    }

    /// `[ρ, dρ/ds, d²ρ/ds², d³ρ/ds³]` at tangent angle θ, via `d/ds = ρ⁻¹ d/dθ`.
    pub fn curvature_jet_at_theta(&self, theta: f64) -> CurvatureJet {
        let [r, r1, r2, r3] = self.spec.radius_jet(theta);
        let inv = 1.0 / r;
        let inv2 = inv * inv;
        let inv3 = inv2 * inv;
        CurvatureJet {
            rho: r,
            d1: r1 * inv,
            d2: r2 * inv2 - r1 * r1 * inv3,
            d3: r3 * inv3 - 4.0 * r1 * r2 * inv3 * inv + 3.0 * r1 * r1 * r1 * inv3 * inv2,
        }
    }

    /// Arc length reduced to `[0, L)`.
    pub fn reduce(&self, s: f64) -> f64 {
        let r = s.rem_euclid(self.perimeter);
        if r >= self.perimeter {
            0.0
        } else {
            r
        }
    }

    pub fn eval_curvature(&self, s: f64) -> CurvatureJet {
        self.curvature_jet_at_theta(self.theta_at_arclength(self.reduce(s)))
    }

    pub fn eval_point(&self, s: f64) -> BoundaryPoint {
        let theta = self.theta_at_arclength(self.reduce(s));
        BoundaryPoint {
            position: self.position_at_theta(theta),
            tangent_angle: theta,
        }
    }

    /// Tangent angle in `[0, 2π)` for a reduced arc length.
    pub fn tangent_angle(&self, s: f64) -> f64 {
        self.theta_at_arclength(self.reduce(s)).rem_euclid(TAU)
    }
}

/// Angle `θ₀` such that the table rotated by `θ₀` has curvature profile
/// `x ↦ ρ(x + shift)` in its own Lazutkin coordinate.
pub fn rotation_for_x_shift(curve: &BoundaryCurve, shift: f64) -> f64 {
    -curve.theta_at_lazutkin_x(shift)
}

/// The spec of `curve` rotated so that its Lazutkin profile moves by `shift`.
pub fn x_shifted_spec(curve: &BoundaryCurve, shift: f64) -> FourierCurvatureSpec {
    let mut spec = curve.spec().rotated(rotation_for_x_shift(curve, shift));
    spec.name = format!("{}-shift{shift}", curve.spec().name);
    spec
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn perturbed() -> BoundaryCurve {
        build_domain(FourierCurvatureSpec::perturbed_circle(2, 0.3)).unwrap()
    }

    #[test]
    fn curve_is_shareable_across_threads() {
        fn check<T: Send + Sync>() {}
        check::<BoundaryCurve>();
    }

    #[test]
    fn unit_circle_constants() {
        let c = build_domain(FourierCurvatureSpec::circle(1.0)).unwrap();
        assert!((c.perimeter() - TAU).abs() < 1e-15);
        assert!((c.lazutkin_constant() - 1.0 / TAU).abs() < 1e-15);
        assert!(c.closure_error() < 1e-15);
    }

    #[test]
    fn perturbed_circle_closes() {
        let c = perturbed();
        assert!((c.perimeter() - TAU).abs() < 1e-15);
        assert!(c.closure_error() < 1e-12 * c.perimeter());
    }

    #[test]
    fn rejects_non_convex_spec() {
        let spec = FourierCurvatureSpec::new("bad", 1.0, vec![Harmonic::new(2, 1.2, 0.0)]);
        match build_domain(spec) {
            Err(Error::NotConvex { theta, rho }) => {
                assert!((rho + 0.2).abs() < 1e-12);
                assert!(((2.0 * theta).cos() + 1.0).abs() < 1e-12, "theta = {theta}");
            }
            other => panic!("expected NotConvex, got {other:?}"),
        }
    }

    #[test]
    fn rejects_first_harmonic_and_bad_c0() {
        let spec = FourierCurvatureSpec::new("n1", 1.0, vec![Harmonic::new(1, 0.1, 0.0)]);
        assert!(matches!(build_domain(spec), Err(Error::InvalidSpec(_))));
        assert!(matches!(build_domain(FourierCurvatureSpec::circle(0.0)), Err(Error::InvalidSpec(_))));
        let spec = FourierCurvatureSpec::new("nan", 1.0, vec![Harmonic::new(3, f64::NAN, 0.0)]);
        assert!(matches!(build_domain(spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn circle_curvature_is_constant() {
        let c = build_domain(FourierCurvatureSpec::circle(1.0)).unwrap();
        for s in [0.0, 1.0, 4.0] {
            let j = c.eval_curvature(s);
            assert_eq!(j.as_array(), [1.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn even_perturbation_at_origin() {
        let j = perturbed().eval_curvature(0.0);
        assert!((j.rho - 1.3).abs() < 1e-15);
        assert!(j.d1.abs() < 1e-15);
    }

    #[test]
    fn curvature_derivatives_match_finite_differences() {
        let c = build_domain(FourierCurvatureSpec::new(
            "mixed",
            1.0,
            vec![Harmonic::new(2, 0.3, 0.0), Harmonic::new(3, 0.05, -0.07)],
        ))
        .unwrap();
        let h = 1e-3;
        for s in [0.3, 1.7, 4.1, 5.9] {
            let f = |k: f64| c.eval_curvature(s + k * h).rho;
            let (m2, m1, p1, p2) = (f(-2.0), f(-1.0), f(1.0), f(2.0));
            let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
            let d2 = (-m2 + 16.0 * m1 - 30.0 * f(0.0) + 16.0 * p1 - p2) / (12.0 * h * h);
            let j = c.eval_curvature(s);
            assert!((j.d1 - d1).abs() < 1e-6, "d1 at {s}");
            assert!((j.d2 - d2).abs() < 1e-6, "d2 at {s}");
            let g = |k: f64| c.eval_curvature(s + k * h).d2;
            let d3 = (g(-2.0) - 8.0 * g(-1.0) + 8.0 * g(1.0) - g(2.0)) / (12.0 * h);
            assert!((j.d3 - d3).abs() < 1e-6, "d3 at {s}");
        }
    }

    #[test]
    fn circle_points() {
        let c = build_domain(FourierCurvatureSpec::circle(1.0)).unwrap();
        let p = c.eval_point(0.0);
        assert_eq!(p.tangent_angle, 0.0);
        assert_eq!(p.position, [0.0, 0.0]);
        let q = c.eval_point(PI / 2.0);
        assert!((q.tangent_angle - PI / 2.0).abs() < 1e-15);
        // the circle through the origin with centre (0, 1)
        assert!((q.position[0] - 1.0).abs() < 1e-15 && (q.position[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn perimeter_returns_to_start() {
        let c = perturbed();
        let a = c.eval_point(0.0).position;
        let b = c.position_at_theta(c.theta_at_arclength(c.perimeter()));
        assert!((a[0] - b[0]).hypot(a[1] - b[1]) < 1e-12);
    }

    #[test]
    fn unit_speed() {
        let c = perturbed();
        let h = 1e-6;
        for s in [0.0, 0.9, 2.5, 5.0] {
            let a = c.position_at_theta(c.theta_at_arclength(s));
            let b = c.position_at_theta(c.theta_at_arclength(s + h));
            let speed = (b[0] - a[0]).hypot(b[1] - a[1]) / h;
            assert!((speed - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn arclength_inversion_round_trips() {
        let c = perturbed();
        for k in 0..50 {
            let s = -3.0 + 0.37 * k as f64;
            let t = c.theta_at_arclength(s);
            assert!((c.arclength_at_theta(t) - s).abs() < 1e-13);
        }
    }

    #[test]
    fn chord_matches_position_difference() {
        let c = perturbed();
        let (t0, d) = (0.8, 1.3);
        let (x, y) = c.chord(t0, d);
        let a = c.position_at_theta(t0);
        let b = c.position_at_theta(t0 + d);
        let (s, co) = t0.sin_cos();
        let gx = (b[0] - a[0]) * co + (b[1] - a[1]) * s;
        let gy = -(b[0] - a[0]) * s + (b[1] - a[1]) * co;
        assert!((gx - x).abs() < 1e-14 && (gy - y).abs() < 1e-14);
    }

    #[test]
    fn x_shift_moves_the_profile() {
        let c = BoundaryCurve::new(FourierCurvatureSpec::new(
            "m",
            1.0,
            vec![Harmonic::new(2, 0.2, 0.1), Harmonic::new(3, 0.05, 0.0)],
        ))
        .unwrap();
        let d = BoundaryCurve::new(x_shifted_spec(&c, 0.25)).unwrap();
        for x in [0.0, 0.3, 0.71] {
            let rc = c.radius_at_theta(c.theta_at_lazutkin_x(x + 0.25));
            let rd = d.radius_at_theta(d.theta_at_lazutkin_x(x));
            assert!((rc - rd).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_and_reflection_preserve_shape() {
        let spec = FourierCurvatureSpec::new("m", 1.0, vec![Harmonic::new(3, 0.1, 0.2)]);
        let rot = spec.rotated(0.4);
        assert!((rot.radius(1.0) - spec.radius(0.6)).abs() < 1e-15);
        let mir = spec.reflected();
        assert!((mir.radius(1.0) - spec.radius(-1.0)).abs() < 1e-15);
    }
}
