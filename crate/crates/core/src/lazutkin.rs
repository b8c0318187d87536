//! Lazutkin coordinates
//!
//! ```text
//! x = C ∫₀^s ρ^{-2/3}(σ) dσ,     y = 4 C ρ^{1/3}(s) sin(φ/2)
//! ```
//!
//! `x` is evaluated through `dx = C ρ^{1/3} dθ` using the spectral series of
//! `ρ^{1/3}(θ)` held by the curve.

use serde::{Deserialize, Serialize};

use crate::dynamics::{advance, PhasePoint};
use crate::error::{Error, Result};
use crate::geometry::BoundaryCurve;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LazutkinPoint {
    pub x: f64,
    pub y: f64,
}

impl LazutkinPoint {
    pub fn new(x: f64, y: f64) -> Self {
        LazutkinPoint { x, y }
    }
}

/// Largest admissible `y` at tangent angle θ (the image of `φ = π`).
pub fn y_bound_at_theta(curve: &BoundaryCurve, theta: f64) -> f64 {
    4.0 * curve.lazutkin_constant() * curve.radius_at_theta(theta).cbrt()
}

fn reduce_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

pub fn to_lazutkin(curve: &BoundaryCurve, p: PhasePoint) -> LazutkinPoint {
    let theta = curve.theta_at_arclength(curve.reduce(p.s));
    LazutkinPoint {
        x: reduce_unit(curve.lazutkin_x_at_theta(theta)),
        y: y_bound_at_theta(curve, theta) * (0.5 * p.phi).sin(),
    }
}

/// Tangent angle and incidence angle for a Lazutkin point.
pub(crate) fn phase_from_lazutkin(curve: &BoundaryCurve, q: LazutkinPoint) -> Result<(f64, f64)> {
    if !q.x.is_finite() {
        return Err(Error::InvalidState(format!("x = {} is not finite", q.x)));
    }
    let theta = curve.theta_at_lazutkin_x(q.x);
    let bound = y_bound_at_theta(curve, theta);
    if !(q.y > 0.0 && q.y < bound) {
        return Err(Error::OutOfRange { x: q.x, y: q.y, bound });
    }
    Ok((theta, 2.0 * (q.y / bound).asin()))
}

pub fn from_lazutkin(curve: &BoundaryCurve, q: LazutkinPoint) -> Result<PhasePoint> {
    let (theta, phi) = phase_from_lazutkin(curve, q)?;
    Ok(PhasePoint {
        s: curve.reduce(curve.arclength_at_theta(theta)),
        phi,
    })
}

/// `T^L(x, y)` with `x₁` left unwrapped: `x₁ - x ∈ (0, 1)`.
pub fn lazutkin_step_unwrapped(curve: &BoundaryCurve, q: LazutkinPoint) -> Result<LazutkinPoint> {
    let (theta0, phi) = phase_from_lazutkin(curve, q)?;
    PhasePoint::new(0.0, phi).validate()?;
    let delta = advance(curve, theta0, phi)?;
    let theta1 = theta0 + delta;
    let x1 = q.x + (curve.lazutkin_x_at_theta(theta1) - curve.lazutkin_x_at_theta(theta0));
    let y1 = y_bound_at_theta(curve, theta1) * (0.5 * (delta - phi)).sin();
    Ok(LazutkinPoint { x: x1, y: y1 })
}

/// `T^L = L ∘ T ∘ L⁻¹`, with the image `x` reduced to `[0, 1)`.
pub fn lazutkin_step(curve: &BoundaryCurve, q: LazutkinPoint) -> Result<LazutkinPoint> {
    let p = lazutkin_step_unwrapped(curve, q)?;
    Ok(LazutkinPoint::new(reduce_unit(p.x), p.y))
}

/// Iterates of `T^L`, excluding the seed.
pub fn lazutkin_orbit(curve: &BoundaryCurve, q: LazutkinPoint, n: usize) -> Result<Vec<LazutkinPoint>> {
    let mut out = Vec::with_capacity(n);
    let mut cur = q;
    for index in 0..n {
        cur = lazutkin_step(curve, cur).map_err(|e| Error::Orbit {
            index,
            source: Box::new(e),
        })?;
        out.push(cur);
    }
    Ok(out)
}
