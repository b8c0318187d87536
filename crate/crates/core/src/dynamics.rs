//! The billiard map `T(s, φ) = (s₁, φ₁)` on a [`BoundaryCurve`].
//!
//! The boundary is oriented counterclockwise and `φ ∈ (0, π)` is measured from
//! the forward tangent. The next impact is found in the tangent-angle
//! parameter: with `δ = θ(s₁) - θ(s)`, the direction of the chord
//! `γ(s) → γ(s₁)` seen from the tangent frame at `s` is a strictly increasing
//! function `ψ(δ)` from `0` to `π` on `(0, 2π)`, so the impact is the unique
//! root of `ψ(δ) = φ`, and `φ₁ = δ - φ`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundaryCurve;
use crate::numeric::solve_increasing;

/// Rays closer than this to the tangent are rejected.
pub const GRAZING_FLOOR: f64 = 1e-8;

const SCAN_SAMPLES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub s: f64,
    pub phi: f64,
}

impl PhasePoint {
    pub fn new(s: f64, phi: f64) -> Self {
        PhasePoint { s, phi }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.s.is_finite() {
            return Err(Error::InvalidState(format!("s = {} is not finite", self.s)));
        }
        if !(self.phi > 0.0 && self.phi < PI) {
            return Err(Error::InvalidState(format!("phi = {} outside (0, pi)", self.phi)));
        }
        if self.phi < GRAZING_FLOOR || PI - self.phi < GRAZING_FLOOR {
            return Err(Error::InvalidState(format!(
                "phi = {:e} within {GRAZING_FLOOR:e} of grazing",
                self.phi
            )));
        }
        Ok(())
    }
}

/// Direction of the chord from `θ0` to `θ0 + δ`, relative to the tangent at `θ0`.
fn chord_angle(curve: &BoundaryCurve, theta0: f64, delta: f64) -> f64 {
    let (x, y) = curve.chord(theta0, delta);
    y.atan2(x)
}

/// Tangent-angle advance `δ` of the ray leaving `θ0` at angle `phi`.
pub(crate) fn advance(curve: &BoundaryCurve, theta0: f64, phi: f64) -> Result<f64> {
    let step = TAU / SCAN_SAMPLES as f64;
    let mut lo = 0.0;
    let mut hi = TAU;
    for j in 1..SCAN_SAMPLES {
        let d = step * j as f64;
        if chord_angle(curve, theta0, d) >= phi {
            hi = d;
            break;
        }
        lo = d;
    }
    let guess = 2.0 * phi;
    let tol = 4e-16 * hi;
    let delta = solve_increasing(
        |d| {
            if d <= 0.0 {
                return (-phi, 0.5);
            }
            let (x, y) = curve.chord(theta0, d);
            let (sd, cd) = d.sin_cos();
            let slope = curve.radius_at_theta(theta0 + d) * (x * sd - y * cd) / (x * x + y * y);
            (y.atan2(x) - phi, slope)
        },
        lo,
        hi,
        guess,
        tol,
        "billiard_step",
    )?;
    // signed distance of the impact point from the ray line
    let (x, y) = curve.chord(theta0, delta);
    let (sp, cp) = phi.sin_cos();
    let residual = x * sp - y * cp;
    if residual.abs() > 1e-13 * curve.perimeter() {
        return Err(Error::numerical(
            "billiard_step",
            format!("chord residual {residual:e} at theta0 = {theta0}, phi = {phi}"),
        ));
    }
    Ok(delta)
}

/// One application of the billiard map; `s₁` is reduced to `[0, L)`.
pub fn billiard_step(curve: &BoundaryCurve, p: PhasePoint) -> Result<PhasePoint> {
    p.validate()?;
    let theta0 = curve.theta_at_arclength(curve.reduce(p.s));
    let delta = advance(curve, theta0, p.phi)?;
    Ok(PhasePoint {
        s: curve.reduce(curve.arclength_at_theta(theta0 + delta)),
        phi: delta - p.phi,
    })
}

/// `n` iterates of the billiard map, excluding the seed.
pub fn orbit(curve: &BoundaryCurve, p: PhasePoint, n: usize) -> Result<Vec<PhasePoint>> {
    let mut out = Vec::with_capacity(n);
    let mut cur = p;
    for index in 0..n {
        cur = billiard_step(curve, cur).map_err(|e| Error::Orbit {
            index,
            source: Box::new(e),
        })?;
        out.push(cur);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, FourierCurvatureSpec, Harmonic};

    fn circle() -> BoundaryCurve {
        build_domain(FourierCurvatureSpec::circle(1.0)).unwrap()
    }

    fn perturbed() -> BoundaryCurve {
        build_domain(FourierCurvatureSpec::perturbed_circle(2, 0.3)).unwrap()
    }

    #[test]
    fn circle_chord_advances_by_twice_the_angle() {
        let q = billiard_step(&circle(), PhasePoint::new(0.0, PI / 3.0)).unwrap();
        assert!((q.s - 2.0 * PI / 3.0).abs() < 1e-14);
        assert!((q.phi - PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn circle_diameter() {
        let c = circle();
        for s in [0.0, 1.0, 4.0] {
            let q = billiard_step(&c, PhasePoint::new(s, PI / 2.0)).unwrap();
            assert!(((q.s - (s + PI).rem_euclid(TAU) + PI).rem_euclid(TAU) - PI).abs() < 1e-13);
            assert!((q.phi - PI / 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn circle_preserves_angle() {
        let c = circle();
        for phi in [1e-4, 0.01, 0.3, 1.2, 2.9, 3.1] {
            let q = billiard_step(&c, PhasePoint::new(0.4, phi)).unwrap();
            assert!((q.phi - phi).abs() < 1e-13, "phi = {phi}");
        }
    }

    #[test]
    fn grazing_step_follows_first_order_law() {
        let c = perturbed();
        let (s, phi) = (0.7, 0.05);
        let q = billiard_step(&c, PhasePoint::new(s, phi)).unwrap();
        let rho = c.eval_curvature(s).rho;
        assert!((q.s - s - 2.0 * rho * phi).abs() < 0.01);
    }

    #[test]
    fn rejects_invalid_angles() {
        let c = circle();
        for phi in [0.0, -0.1, PI, 4.0, 1e-9, f64::NAN] {
            assert!(matches!(
                billiard_step(&c, PhasePoint::new(0.0, phi)),
                Err(Error::InvalidState(_))
            ));
        }
    }

    #[test]
    fn orbits() {
        let c = circle();
        let o = orbit(&c, PhasePoint::new(0.0, PI / 2.0), 2).unwrap();
        assert_eq!(o.len(), 2);
        assert!((o[0].s - PI).abs() < 1e-13);
        assert!(o[1].s < 1e-13 || TAU - o[1].s < 1e-13);
        assert!(orbit(&c, PhasePoint::new(0.0, 0.5), 0).unwrap().is_empty());
        let tri = orbit(&c, PhasePoint::new(0.0, PI / 3.0), 3).unwrap();
        let last = tri[2].s;
        assert!(last < 1e-12 || TAU - last < 1e-12);
    }

    #[test]
    fn orbit_reports_failing_index() {
        let c = circle();
        match orbit(&c, PhasePoint::new(0.0, 0.0), 3) {
            Err(Error::Orbit { index, .. }) => assert_eq!(index, 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn time_reversal() {
        let c = build_domain(FourierCurvatureSpec::new(
            "mixed",
            1.0,
            vec![Harmonic::new(2, 0.3, 0.0), Harmonic::new(3, 0.04, 0.06)],
        ))
        .unwrap();
        for (s, phi) in [(0.0, 0.01), (1.3, 0.4), (3.0, 1.5), (5.5, 2.8)] {
            let q = billiard_step(&c, PhasePoint::new(s, phi)).unwrap();
            let back = billiard_step(&c, PhasePoint::new(q.s, PI - q.phi)).unwrap();
            let ds = (back.s - s + c.perimeter() / 2.0).rem_euclid(c.perimeter()) - c.perimeter() / 2.0;
            assert!(ds.abs() < 1e-11, "s: {ds:e}");
            assert!((back.phi - (PI - phi)).abs() < 1e-11);
        }
    }
}
