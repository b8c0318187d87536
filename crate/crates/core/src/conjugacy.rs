//! Boundary jets of conjugacies between two billiard maps.
//!
//! A map `Φ(s, φ) = (a₀(s) + O(φ), b₁(s)φ + O(φ²))` conjugating `T₁` to `T₂`
//! must satisfy, with `α₁ = 2ρ` and `β₂ = -(2/3)ρ'` of each table,
//!
//! ```text
//! α₁²(a₀) b₁ = α₁¹ a₀'
//! β₂²(a₀) b₁² = β₂¹ b₁ + α₁¹ b₁'
//! ```
//!
//! [`transition_jet`] gives the jet of `L₂⁻¹ ∘ L₁` in closed form and
//! [`solve_jet_system`] integrates the system above by shooting; the two
//! agree, which is the content of the tangency statement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundaryCurve;
use crate::spectral;

pub const DEFAULT_JET_GRID: usize = 512;
const RK_SUBSTEPS: usize = 8;
const SHOOTING_TOL: f64 = 1e-12;

/// Order-1 jet sampled at `s_i = i L₁ / N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyJet {
    pub s: Vec<f64>,
    pub a0: Vec<f64>,
    pub a0_prime: Vec<f64>,
    pub b1: Vec<f64>,
    /// `a₀(L₁)`, which should equal `L₂`.
    pub endpoint: f64,
}

impl ConjugacyJet {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

/// `(a₀, a₀', b₁)` of `L₂⁻¹ ∘ L₁` at arc length `s` on the first curve.
pub fn transition_point(c1: &BoundaryCurve, c2: &BoundaryCurve, s: f64) -> (f64, f64, f64) {
    let theta1 = c1.theta_at_arclength(s);
    let x = c1.lazutkin_x_at_theta(theta1);
    let theta2 = c2.theta_at_lazutkin_x(x);
    let a0 = c2.arclength_at_theta(theta2);
    let r1 = c1.radius_at_theta(theta1).cbrt();
    let r2 = c2.radius_at_theta(theta2).cbrt();
    let k = c1.lazutkin_constant() / c2.lazutkin_constant();
    (a0, k * r2 * r2 / (r1 * r1), k * r1 / r2)
}

fn grid(c1: &BoundaryCurve, n: usize) -> Vec<f64> {
    (0..n).map(|i| c1.perimeter() * i as f64 / n as f64).collect()
}

pub fn transition_jet(c1: &BoundaryCurve, c2: &BoundaryCurve, n: usize) -> ConjugacyJet {
    let s = grid(c1, n);
    let rows: Vec<_> = s.iter().map(|&s| transition_point(c1, c2, s)).collect();
    ConjugacyJet {
        a0: rows.iter().map(|r| r.0).collect(),
        a0_prime: rows.iter().map(|r| r.1).collect(),
        b1: rows.iter().map(|r| r.2).collect(),
        endpoint: transition_point(c1, c2, c1.perimeter()).0,
        s,
    }
}

/// Right-hand side of the system for `(a₀, b₁)`.
fn rhs(c1: &BoundaryCurve, c2: &BoundaryCurve, s: f64, a0: f64, b1: f64) -> [f64; 2] {
    let j1 = c1.eval_curvature(s);
    let j2 = c2.eval_curvature(a0);
    [
        b1 * j2.rho / j1.rho,
        b1 * (j1.d1 - j2.d1 * b1) / (3.0 * j1.rho),
    ]
}

struct Trajectory {
    a0: Vec<f64>,
    b1: Vec<f64>,
    endpoint: f64,
}

fn integrate(c1: &BoundaryCurve, c2: &BoundaryCurve, n: usize, slope0: f64) -> Trajectory {
    let l1 = c1.perimeter();
    let h = l1 / (n * RK_SUBSTEPS) as f64;
    let mut y = [0.0, slope0 * c1.eval_curvature(0.0).rho / c2.eval_curvature(0.0).rho];
    let mut a0 = Vec::with_capacity(n);
    let mut b1 = Vec::with_capacity(n);
    for i in 0..n {
        a0.push(y[0]);
        b1.push(y[1]);
        for k in 0..RK_SUBSTEPS {
            let s = l1 * i as f64 / n as f64 + h * k as f64;
            let f = |s: f64, y: [f64; 2]| rhs(c1, c2, s, y[0], y[1]);
            let k1 = f(s, y);
            let k2 = f(s + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = f(s + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = f(s + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for j in 0..2 {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
    }
    Trajectory { a0, b1, endpoint: y[0] }
}

/// Integrate the jet system from `a₀(0) = 0`, shooting on `a₀'(0)` until
/// `a₀(L₁) = L₂`.
pub fn solve_jet_system(c1: &BoundaryCurve, c2: &BoundaryCurve, n: usize) -> Result<ConjugacyJet> {
    if n < 8 {
        return Err(Error::Precondition(format!("jet grid {n} below the minimum of 8")));
    }
    let l2 = c2.perimeter();
    let mut q0 = l2 / c1.perimeter();
    let mut t0 = integrate(c1, c2, n, q0);
    let mut q1 = q0 * 1.01;
    let mut t1 = integrate(c1, c2, n, q1);
    let mut trace = vec![t0.endpoint - l2, t1.endpoint - l2];
    for _ in 0..60 {
        let (f0, f1) = (t0.endpoint - l2, t1.endpoint - l2);
        if f1.abs() < SHOOTING_TOL * l2.max(1.0) {
            let ratio: Vec<f64> = radius_ratio(c1, c2, &grid(c1, n), &t1.a0);
            return Ok(ConjugacyJet {
                a0_prime: t1.b1.iter().zip(&ratio).map(|(b, r)| b * r).collect(),
                a0: t1.a0,
                b1: t1.b1,
                endpoint: t1.endpoint,
                s: grid(c1, n),
            });
        }
        if f1 == f0 {
            break;
        }
        let q2 = q1 - f1 * (q1 - q0) / (f1 - f0);
        if !(q2.is_finite() && q2 > 0.0) {
            break;
        }
        (q0, t0) = (q1, t1);
        q1 = q2;
        t1 = integrate(c1, c2, n, q1);
        trace.push(t1.endpoint - l2);
    }
    Err(Error::numerical(
        "solve_jet_system",
        format!("shooting did not converge; endpoint residuals {trace:?}"),
    ))
}

/// `ρ₂(a₀)/ρ₁(s)` on the grid.
fn radius_ratio(c1: &BoundaryCurve, c2: &BoundaryCurve, s: &[f64], a0: &[f64]) -> Vec<f64> {
    s.iter()
        .zip(a0)
        .map(|(&s, &a)| c2.eval_curvature(a).rho / c1.eval_curvature(s).rho)
        .collect()
}

/// Largest residuals of the two jet equations on a jet, with `b₁'` taken
/// spectrally on the periodic grid.
pub fn system_residual(c1: &BoundaryCurve, c2: &BoundaryCurve, jet: &ConjugacyJet) -> (f64, f64) {
    let l1 = c1.perimeter();
    let db1: Vec<f64> = spectral::derivative(&jet.b1).iter().map(|v| v / l1).collect();
    let mut r1: f64 = 0.0;
    let mut r2: f64 = 0.0;
    for (i, &db) in db1.iter().enumerate() {
        let j1 = c1.eval_curvature(jet.s[i]);
        let j2 = c2.eval_curvature(jet.a0[i]);
        let b = jet.b1[i];
        r1 = r1.max((2.0 * j2.rho * b - 2.0 * j1.rho * jet.a0_prime[i]).abs());
        let lhs = -2.0 / 3.0 * j2.d1 * b * b;
        let rhs = -2.0 / 3.0 * j1.d1 * b + 2.0 * j1.rho * db;
        r2 = r2.max((lhs - rhs).abs());
    }
    (r1, r2)
}

/// Order-1 tangency verdict between two jets on the same grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangencyReport {
    pub order: u32,
    pub a0_deviation: f64,
    pub b1_deviation: f64,
    pub tolerance: f64,
    pub tangent: bool,
}

pub fn verify_tangency(a: &ConjugacyJet, b: &ConjugacyJet, tolerance: f64) -> Result<TangencyReport> {
    if a.len() != b.len() || a.s.iter().zip(&b.s).any(|(x, y)| (x - y).abs() > 1e-12 * x.abs().max(1.0)) {
        return Err(Error::Grid(format!(
            "jets sampled on different grids ({} and {} points)",
            a.len(),
            b.len()
        )));
    }
    let sup = |u: &[f64], v: &[f64]| u.iter().zip(v).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let a0_deviation = sup(&a.a0, &b.a0);
    let b1_deviation = sup(&a.b1, &b.b1);
    Ok(TangencyReport {
        order: 1,
        a0_deviation,
        b1_deviation,
        tolerance,
        tangent: a0_deviation < tolerance && b1_deviation < tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, FourierCurvatureSpec, Harmonic};

    fn curve(spec: FourierCurvatureSpec) -> BoundaryCurve {
        build_domain(spec).unwrap()
    }

    fn pair() -> (BoundaryCurve, BoundaryCurve) {
        (
            curve(FourierCurvatureSpec::perturbed_circle(2, 0.2)),
            curve(FourierCurvatureSpec::new("q", 1.3, vec![Harmonic::new(3, 0.1, 0.05)])),
        )
    }

    #[test]
    fn identity_jet() {
        let c = curve(FourierCurvatureSpec::perturbed_circle(2, 0.3));
        let j = transition_jet(&c, &c, 64);
        for i in 0..64 {
            assert!((j.a0[i] - j.s[i]).abs() < 1e-12);
            assert!((j.b1[i] - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn dilation_jet() {
        let spec = FourierCurvatureSpec::perturbed_circle(3, 0.1);
        let (a, b) = (curve(spec.clone()), curve(spec.scaled(2.5)));
        let j = transition_jet(&a, &b, 64);
        for i in 0..64 {
            assert!((j.a0[i] - 2.5 * j.s[i]).abs() < 1e-11);
            assert!((j.b1[i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn endpoint_and_monotonicity() {
        let (a, b) = (curve(FourierCurvatureSpec::circle(1.0)), curve(FourierCurvatureSpec::perturbed_circle(2, 0.3)));
        let j = transition_jet(&a, &b, 128);
        assert!((j.endpoint - b.perimeter()).abs() < 1e-10);
        assert!(j.a0.windows(2).all(|w| w[1] > w[0]));
        assert!(j.a0_prime.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn circles_of_radius_one_and_two() {
        let (a, b) = (curve(FourierCurvatureSpec::circle(1.0)), curve(FourierCurvatureSpec::circle(2.0)));
        let j = solve_jet_system(&a, &b, 64).unwrap();
        for i in 0..64 {
            assert!((j.a0[i] - 2.0 * j.s[i]).abs() < 1e-11);
            assert!((j.b1[i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn transition_jet_solves_the_system() {
        let (a, b) = pair();
        let j = transition_jet(&a, &b, 256);
        let (r1, r2) = system_residual(&a, &b, &j);
        assert!(r1 < 1e-12 && r2 < 1e-10, "{r1:e} {r2:e}");
    }

    #[test]
    fn shooting_matches_transition_jet() {
        let (a, b) = pair();
        let solved = solve_jet_system(&a, &b, DEFAULT_JET_GRID).unwrap();
        let closed = transition_jet(&a, &b, DEFAULT_JET_GRID);
        let report = verify_tangency(&solved, &closed, 1e-8).unwrap();
        assert!(report.tangent, "{report:?}");
    }

    #[test]
    fn cocycle() {
        let c1 = curve(FourierCurvatureSpec::perturbed_circle(2, 0.2));
        let c2 = curve(FourierCurvatureSpec::new("q", 1.3, vec![Harmonic::new(3, 0.1, 0.05)]));
        let c3 = curve(FourierCurvatureSpec::new("r", 0.8, vec![Harmonic::new(2, -0.1, 0.2)]));
        for k in 0..16 {
            let s = a_point(&c1, k);
            let direct = transition_point(&c1, &c3, s).0;
            let via = transition_point(&c2, &c3, transition_point(&c1, &c2, s).0).0;
            assert!((direct - via).abs() < 1e-10);
        }
    }

    fn a_point(c: &BoundaryCurve, k: usize) -> f64 {
        c.perimeter() * (k as f64 + 0.37) / 16.0
    }

    #[test]
    fn detects_non_conjugate_pairs() {
        let a = curve(FourierCurvatureSpec::perturbed_circle(2, 0.3));
        let b = curve(FourierCurvatureSpec::perturbed_circle(2, 0.25));
        let same = transition_jet(&a, &a, 128);
        let other = transition_jet(&a, &b, 128);
        let r = verify_tangency(&same, &other, 1e-3).unwrap();
        assert!(!r.tangent && r.b1_deviation.max(r.a0_deviation) > 1e-3);
        assert_eq!(verify_tangency(&same, &same, 1e-12).unwrap().a0_deviation, 0.0);
    }

    #[test]
    fn grid_mismatch() {
        let a = curve(FourierCurvatureSpec::circle(1.0));
        assert!(matches!(
            verify_tangency(&transition_jet(&a, &a, 16), &transition_jet(&a, &a, 32), 1e-8),
            Err(Error::Grid(_))
        ));
    }
}
