//! Closed-form coefficients of the billiard map near the boundary.
//!
//! In `(s, φ)` coordinates
//!
//! ```text
//! s₁ = s + α₁φ + α₂φ² + α₃φ³ + α₄φ⁴ + O(φ⁵)
//! φ₁ = φ + β₂φ² + β₃φ³ + β₄φ⁴ + O(φ⁵)
//! ```
//!
//! and in Lazutkin coordinates
//!
//! ```text
//! x₁ = x + y + α₃(x)y³ + α₄(x)y⁴ + O(y⁵)
//! y₁ = y + β₄(x)y⁴ + O(y⁵)
//! ```
//!
//! The Lazutkin coefficients are linear combinations of a few basis terms in
//! `ρ(x)` and its `x`-derivatives; they are stored as weight vectors
//! ([`LazutkinWeights`]) so that relations between them can be studied
//! exactly. A second route goes through the `(s, φ)` coefficients and the
//! Taylor compositions `A_i`, `B_i` ([`ab_coefficients`]).

use serde::{Deserialize, Serialize};

use crate::geometry::{BoundaryCurve, CurvatureJet};
use crate::numeric::power_jet;

/// Coefficients of the map in `(s, φ)` coordinates at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SCoefficients {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
}

impl SCoefficients {
    pub fn from_jet(jet: CurvatureJet) -> Self {
        let CurvatureJet { rho: r, d1, d2, d3 } = jet;
        SCoefficients {
            alpha1: 2.0 * r,
            alpha2: 4.0 / 3.0 * r * d1,
            alpha3: 2.0 / 3.0 * r * r * d2 + 4.0 / 9.0 * r * d1 * d1,
            alpha4: 4.0 / 15.0 * r * r * r * d3 + 28.0 / 45.0 * r * r * d1 * d2
                + 16.0 / 135.0 * r * d1 * d1 * d1
                - 2.0 / 45.0 * r * d1,
            beta2: -2.0 / 3.0 * d1,
            beta3: -2.0 / 3.0 * r * d2 + 4.0 / 9.0 * d1 * d1,
            beta4: -2.0 / 5.0 * r * r * d3 + 28.0 / 45.0 * r * d1 * d2
                - 44.0 / 135.0 * d1 * d1 * d1
                - 2.0 / 45.0 * d1,
        }
    }
}

pub fn s_coefficients(curve: &BoundaryCurve, s: f64) -> SCoefficients {
    SCoefficients::from_jet(curve.eval_curvature(s))
}

/// Taylor compositions: `x₁ - x = Σ A_i φ^i` and `y₁ = Σ B_i φ^i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ABCoefficients {
    pub a: [f64; 4],
    pub b: [f64; 4],
}

impl ABCoefficients {
    pub fn from_jet(jet: CurvatureJet, lazutkin_constant: f64) -> Self {
        let c = lazutkin_constant;
        let sc = SCoefficients::from_jet(jet);
        let (a1, a2, a3, a4) = (sc.alpha1, sc.alpha2, sc.alpha3, sc.alpha4);
        let (b2, b3, b4) = (sc.beta2, sc.beta3, sc.beta4);
        // ℓ' = Cρ^{-2/3} and r = ρ^{1/3} with their derivatives
        let l = power_jet(jet.as_array(), -2.0 / 3.0).map(|v| c * v);
        let r = power_jet(jet.as_array(), 1.0 / 3.0);
        let a = [
            a1 * l[0],
            a2 * l[0] + 0.5 * a1 * a1 * l[1],
            a3 * l[0] + a1 * a2 * l[1] + a1 * a1 * a1 * l[2] / 6.0,
            a4 * l[0] + 0.5 * l[1] * (a2 * a2 + 2.0 * a1 * a3) + 0.5 * a1 * a1 * a2 * l[2]
                + a1 * a1 * a1 * a1 * l[3] / 24.0,
        ];
        let b = [
            2.0 * c * r[0],
            2.0 * c * a1 * r[1] + 2.0 * c * b2 * r[0],
            c * (2.0 * b3 * r[0] - r[0] / 12.0 + 2.0 * a1 * b2 * r[1] + 2.0 * a2 * r[1] + a1 * a1 * r[2]),
            c * (2.0 * b4 * r[0] - b2 * r[0] / 4.0 + 2.0 * b3 * a1 * r[1] - a1 * r[1] / 12.0
                + 2.0 * b2 * a2 * r[1]
                + a1 * a1 * b2 * r[2]
                + 2.0 * a3 * r[1]
                + 2.0 * a1 * a2 * r[2]
                + a1 * a1 * a1 * r[3] / 3.0),
        ];
        ABCoefficients { a, b }
    }

    /// Substitute `φ = 2 arcsin(y / 2A₁)`: returns `(α₃, α₄, y³-drift, β₄)`.
    pub fn to_lazutkin(&self) -> [f64; 4] {
        let a1 = self.a[0];
        let a1_3 = a1 * a1 * a1;
        let a1_4 = a1_3 * a1;
        [
            (24.0 * self.a[2] + a1) / (24.0 * a1_3),
            self.a[3] / a1_4,
            (24.0 * self.b[2] + self.b[0]) / (24.0 * a1_3),
            self.b[3] / a1_4,
        ]
    }
}

pub fn ab_coefficients(curve: &BoundaryCurve, s: f64) -> ABCoefficients {
    ABCoefficients::from_jet(curve.eval_curvature(s), curve.lazutkin_constant())
}

/// `ρ` and its derivatives with respect to the Lazutkin coordinate `x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XJet {
    pub rho: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl XJet {
    /// Invert `ρ'(s) = Cρ^{-2/3}ρ'(x)` and its first two derivatives.
    pub fn from_s_jet(jet: CurvatureJet, c: f64) -> Self {
        let r = jet.rho;
        let r13 = r.cbrt();
        let r23 = r13 * r13;
        let d1 = r23 * jet.d1 / c;
        let d2 = (jet.d2 / (c * c) + 2.0 / 3.0 * d1 * d1 / (r * r * r13)) * r * r13;
        let d3 = (jet.d3 / (c * c * c) + 8.0 / 3.0 * d1 * d2 / (r * r * r)
            - 14.0 / 9.0 * d1 * d1 * d1 / (r * r * r * r))
            * r
            * r;
        XJet { rho: r, d1, d2, d3 }
    }
}

pub fn x_derivatives(curve: &BoundaryCurve, x: f64) -> XJet {
    let theta = curve.theta_at_lazutkin_x(x);
    XJet::from_s_jet(curve.curvature_jet_at_theta(theta), curve.lazutkin_constant())
}

/// Basis terms the Lazutkin coefficients are built from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisTerms {
    /// `C⁻²ρ^{-2/3}`
    pub t0: f64,
    /// `ρ⁻¹ρ''(x)`
    pub q2: f64,
    /// `ρ⁻²ρ'(x)²`
    pub q11: f64,
    /// `C⁻²ρ^{-5/3}ρ'(x)`
    pub t1: f64,
    /// `ρ⁻¹ρ'''(x)`
    pub t2: f64,
    /// `ρ⁻²ρ'(x)ρ''(x)`
    pub t3: f64,
    /// `ρ⁻³ρ'(x)³`
    pub t4: f64,
}

impl BasisTerms {
    pub fn new(jet: XJet, c: f64) -> Self {
        let inv = 1.0 / jet.rho;
        let u = jet.d1 * inv;
        let t0 = 1.0 / (c * c * jet.rho.cbrt().powi(2));
        BasisTerms {
            t0,
            q2: jet.d2 * inv,
            q11: u * u,
            t1: t0 * u,
            t2: jet.d3 * inv,
            t3: u * jet.d2 * inv,
            t4: u * u * u,
        }
    }

    pub fn at(curve: &BoundaryCurve, x: f64) -> Self {
        Self::new(x_derivatives(curve, x), curve.lazutkin_constant())
    }

    pub fn alpha3_basis(&self) -> [f64; 3] {
        [self.t0, self.q2, self.q11]
    }

    pub fn fourth_order_basis(&self) -> [f64; 4] {
        [self.t1, self.t2, self.t3, self.t4]
    }
}

/// Weight vectors: `α₃` on `(t0, q2, q11)`; `α₃'`, `α₄`, `β₄` on `(t1..t4)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LazutkinWeights {
    pub alpha3: [f64; 3],
    pub alpha4: [f64; 4],
    pub beta4: [f64; 4],
    pub alpha3_prime: [f64; 4],
}

/// Weights obtained by composing the series of the `(s, φ)` map with the
/// change of coordinates, and confirmed against coefficients fitted on the
/// simulated map (see `fitting::validate_weights`). They satisfy the two
/// structural identities `α₃' = -5β₄` (invariant measure `y dx dy`) and
/// `2α₄ = β₄ + α₃'` (time reversal).
pub const ALPHA3_WEIGHTS: [f64; 3] = [1.0 / 96.0, -1.0 / 36.0, 1.0 / 27.0];
pub const ALPHA4_WEIGHTS: [f64; 4] = [-1.0 / 360.0, -1.0 / 90.0, 11.0 / 270.0, -4.0 / 135.0];
pub const BETA4_WEIGHTS: [f64; 4] = [1.0 / 720.0, 1.0 / 180.0, -11.0 / 540.0, 2.0 / 135.0];

/// Weights as they are usually transcribed. They fail both structural
/// identities above and disagree with the fitted map in the `t3`, `t4` (and
/// `q11`) slots; kept for comparison only.
pub const TRANSCRIBED_ALPHA3_WEIGHTS: [f64; 3] = [1.0 / 96.0, -1.0 / 36.0, 4.0 / 27.0];
pub const TRANSCRIBED_ALPHA4_WEIGHTS: [f64; 4] = [-1.0 / 360.0, -1.0 / 90.0, 29.0 / 270.0, -4.0 / 27.0];
pub const TRANSCRIBED_BETA4_WEIGHTS: [f64; 4] = [1.0 / 720.0, 1.0 / 180.0, -119.0 / 540.0, 5.0 / 27.0];
pub const TRANSCRIBED_ALPHA3_PRIME_WEIGHTS: [f64; 4] = [-1.0 / 144.0, -1.0 / 36.0, 35.0 / 108.0, -8.0 / 27.0];

impl LazutkinWeights {
    /// Builds the set with `α₃'` obtained by differentiating `α₃` in `x`:
    /// `t0' = -2/3 t1`, `q2' = t2 - t3`, `q11' = 2 t3 - 2 t4`.
    pub fn from_alpha3(alpha3: [f64; 3], alpha4: [f64; 4], beta4: [f64; 4]) -> Self {
        let [w0, w2, w11] = alpha3;
        LazutkinWeights {
            alpha3,
            alpha4,
            beta4,
            alpha3_prime: [-2.0 / 3.0 * w0, w2, -w2 + 2.0 * w11, -2.0 * w11],
        }
    }

    pub fn derived() -> Self {
        Self::from_alpha3(ALPHA3_WEIGHTS, ALPHA4_WEIGHTS, BETA4_WEIGHTS)
    }

    pub fn transcribed() -> Self {
        LazutkinWeights {
            alpha3: TRANSCRIBED_ALPHA3_WEIGHTS,
            alpha4: TRANSCRIBED_ALPHA4_WEIGHTS,
            beta4: TRANSCRIBED_BETA4_WEIGHTS,
            alpha3_prime: TRANSCRIBED_ALPHA3_PRIME_WEIGHTS,
        }
    }

    pub fn evaluate(&self, basis: &BasisTerms) -> LazutkinCoefficients {
        let dot3 = |w: &[f64; 3], b: [f64; 3]| w.iter().zip(b).map(|(w, b)| w * b).sum::<f64>();
        let dot4 = |w: &[f64; 4], b: [f64; 4]| w.iter().zip(b).map(|(w, b)| w * b).sum::<f64>();
        let b4 = basis.fourth_order_basis();
        LazutkinCoefficients {
            alpha3: dot3(&self.alpha3, basis.alpha3_basis()),
            alpha4: dot4(&self.alpha4, b4),
            beta4: dot4(&self.beta4, b4),
            alpha3_prime: dot4(&self.alpha3_prime, b4),
        }
    }

    /// Largest violation of `α₃' = -5β₄` and `2α₄ = β₄ + α₃'` over the weights.
    pub fn structural_defect(&self) -> f64 {
        (0..4)
            .map(|k| {
                let measure = self.alpha3_prime[k] + 5.0 * self.beta4[k];
                let reversal = 2.0 * self.alpha4[k] - self.beta4[k] - self.alpha3_prime[k];
                measure.abs().max(reversal.abs())
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LazutkinCoefficients {
    pub alpha3: f64,
    pub alpha4: f64,
    pub beta4: f64,
    pub alpha3_prime: f64,
}

pub fn lazutkin_coefficients(curve: &BoundaryCurve, x: f64) -> LazutkinCoefficients {
    lazutkin_coefficients_with(curve, x, &LazutkinWeights::derived())
}

pub fn lazutkin_coefficients_with(curve: &BoundaryCurve, x: f64, weights: &LazutkinWeights) -> LazutkinCoefficients {
    weights.evaluate(&BasisTerms::at(curve, x))
}

/// The same coefficients through `(s, φ)` coefficients and `A_i, B_i`;
/// returns `(α₃, α₄, y³-drift, β₄)`.
pub fn lazutkin_coefficients_via_s(curve: &BoundaryCurve, x: f64) -> [f64; 4] {
    let theta = curve.theta_at_lazutkin_x(x);
    ABCoefficients::from_jet(curve.curvature_jet_at_theta(theta), curve.lazutkin_constant()).to_lazutkin()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::dynamics::{billiard_step, PhasePoint};
    use crate::geometry::{build_domain, FourierCurvatureSpec, Harmonic};

    fn domains() -> Vec<BoundaryCurve> {
        [
            FourierCurvatureSpec::perturbed_circle(2, 0.3),
            FourierCurvatureSpec::new("a", 1.0, vec![Harmonic::new(2, 0.15, 0.05), Harmonic::new(3, 0.08, -0.04)]),
            FourierCurvatureSpec::new("b", 1.7, vec![Harmonic::new(3, 0.2, 0.3), Harmonic::new(5, 0.05, 0.0)]),
        ]
        .into_iter()
        .map(|s| build_domain(s).unwrap())
        .collect()
    }

    #[test]
    fn circle_s_coefficients() {
        let c = build_domain(FourierCurvatureSpec::circle(1.0)).unwrap();
        let k = s_coefficients(&c, 0.4);
        assert_eq!((k.alpha1, k.alpha2, k.beta2, k.beta3, k.beta4), (2.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn beta2_is_minus_two_thirds_rho_prime() {
        for c in domains() {
            for s in [0.2, 2.0, 4.4] {
                let k = s_coefficients(&c, s);
                assert!((k.beta2 + 2.0 / 3.0 * c.eval_curvature(s).d1).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn alpha2_matches_simulated_map() {
        let c = build_domain(FourierCurvatureSpec::perturbed_circle(2, 0.3)).unwrap();
        let s = 0.6;
        let k = s_coefficients(&c, s);
        // fit s₁ - s - α₁φ = α₂φ² + α₃φ³ on φ ∈ [1e-3, 1e-2]
        let phis: Vec<f64> = (0..10).map(|i| 1e-3 * 10f64.powf(i as f64 / 9.0)).collect();
        let design = nalgebra::DMatrix::from_fn(phis.len(), 3, |i, j| phis[i].powi(2 + j as i32));
        let target = nalgebra::DVector::from_iterator(
            phis.len(),
            phis.iter().map(|&p| {
                let q = billiard_step(&c, PhasePoint::new(s, p)).unwrap();
                q.s - s - k.alpha1 * p
            }),
        );
        let ls = crate::numeric::least_squares(&design, &target).unwrap();
        assert!((ls.coefficients[0] - k.alpha2).abs() < 0.01 * k.alpha2.abs());
    }

    #[test]
    fn structural_zeros_of_ab() {
        for c in domains() {
            for k in 0..8 {
                let s = c.perimeter() * k as f64 / 8.0 + 0.1;
                let ab = ab_coefficients(&c, s);
                let scale = ab.a[0];
                assert!(ab.a[1].abs() < 1e-12 * scale);
                assert!(ab.b[1].abs() < 1e-12 * scale);
                assert!((ab.b[0] - ab.a[0]).abs() < 1e-12 * scale);
                assert!((24.0 * ab.b[2] + ab.b[0]).abs() < 1e-12 * scale);
                let rho = c.eval_curvature(s).rho;
                assert!((ab.a[0] - 2.0 * c.lazutkin_constant() * rho.cbrt()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn circle_lazutkin_coefficients() {
        let c = build_domain(FourierCurvatureSpec::circle(1.0)).unwrap();
        let k = lazutkin_coefficients(&c, 0.3);
        assert!((k.alpha3 - PI * PI / 24.0).abs() < 1e-14);
        assert!((k.alpha3 - 0.411234).abs() < 1e-6);
        assert_eq!((k.alpha4, k.beta4, k.alpha3_prime), (0.0, 0.0, 0.0));
    }

    #[test]
    fn x_derivatives_match_finite_differences() {
        let c = build_domain(FourierCurvatureSpec::perturbed_circle(2, 0.3)).unwrap();
        let rho = |x: f64| c.radius_at_theta(c.theta_at_lazutkin_x(x));
        let h = 1e-3;
        for x in [0.05, 0.31, 0.62, 0.9] {
            let j = x_derivatives(&c, x);
            let d1 = (rho(x - 2.0 * h) - 8.0 * rho(x - h) + 8.0 * rho(x + h) - rho(x + 2.0 * h)) / (12.0 * h);
            assert!((j.d1 - d1).abs() < 1e-6);
            // 7-point stencil for the third derivative
            let f = |k: f64| rho(x + k * h);
            let d3 = (-f(3.0) + 8.0 * f(2.0) - 13.0 * f(1.0) + 13.0 * f(-1.0) - 8.0 * f(-2.0) + f(-3.0)) / (8.0 * h * h * h);
            assert!((j.d3 - d3).abs() < 1e-4, "{} vs {}", j.d3, d3);
        }
        let circle = build_domain(FourierCurvatureSpec::circle(1.0)).unwrap();
        let j = x_derivatives(&circle, 0.2);
        assert_eq!([j.rho, j.d1, j.d2, j.d3], [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn alpha3_prime_is_the_x_derivative_of_alpha3() {
        let c = domains().remove(1);
        let h = 1e-3;
        for x in [0.1, 0.45, 0.8] {
            let a = |k: f64| lazutkin_coefficients(&c, x + k * h).alpha3;
            let fd = (a(-2.0) - 8.0 * a(-1.0) + 8.0 * a(1.0) - a(2.0)) / (12.0 * h);
            let exact = lazutkin_coefficients(&c, x).alpha3_prime;
            assert!((exact - fd).abs() < 1e-6 * exact.abs().max(1.0), "{exact} vs {fd}");
        }
    }

    #[test]
    fn routes_through_s_and_x_agree() {
        for c in domains() {
            for k in 0..8 {
                let x = (k as f64 + 0.3) / 8.0;
                let direct = lazutkin_coefficients(&c, x);
                let [a3, a4, drift, b4] = lazutkin_coefficients_via_s(&c, x);
                assert!((direct.alpha3 - a3).abs() < 1e-10);
                assert!((direct.alpha4 - a4).abs() < 1e-10);
                assert!((direct.beta4 - b4).abs() < 1e-10);
                assert!(drift.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn remark_ratio_of_first_two_weights() {
        for w in [LazutkinWeights::derived(), LazutkinWeights::transcribed()] {
            for v in [w.alpha3_prime, w.alpha4, w.beta4] {
                assert!((v[0] / v[1] - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn structural_identities() {
        assert!(LazutkinWeights::derived().structural_defect() < 1e-16);
        assert!(LazutkinWeights::transcribed().structural_defect() > 0.1);
    }
}
