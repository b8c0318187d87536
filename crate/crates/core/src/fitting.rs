//! Measuring the Lazutkin expansion coefficients from the simulated map.
//!
//! At a base point `x` the conjugated map is evaluated on a geometric ladder
//! `y_k = y_max · 0.8^k` and the increments are fitted by column-scaled least
//! squares:
//!
//! ```text
//! x₁ - x - y ≈ α₃y³ + α₄y⁴ + c₅y⁵ + … + c_d y^d
//! y₁ - y     ≈ β₄y⁴ + d₅y⁵ + … + d_d y^d
//! ```
//!
//! The powers beyond four are guard terms that absorb the truncation of the
//! series.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{lazutkin_coefficients, BasisTerms, LazutkinWeights};
use crate::geometry::BoundaryCurve;
use crate::lazutkin::{lazutkin_step_unwrapped, LazutkinPoint};
use crate::numeric::least_squares;
use crate::{spectral, Execution};

/// Absolute size below which map increments are indistinguishable from rounding.
const NOISE_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub y_max: f64,
    pub n_samples: usize,
    /// Highest power kept in both fits.
    pub fit_degree: u32,
    pub ratio: f64,
    /// Largest acceptable relative residual.
    pub residual_tol: f64,
    /// Largest acceptable condition number of the scaled design.
    pub condition_limit: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            y_max: 0.03,
            n_samples: 24,
            fit_degree: 9,
            ratio: 0.8,
            residual_tol: 1e-3,
            condition_limit: 1e12,
        }
    }
}

impl FitConfig {
    pub fn ladder(&self) -> Vec<f64> {
        (0..self.n_samples)
            .map(|k| self.y_max * self.ratio.powi(k as i32))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.fit_degree < 4 {
            return Err(Error::Precondition(format!(
                "fit_degree = {} must be at least 4",
                self.fit_degree
            )));
        }
        if self.n_samples <= self.fit_degree as usize {
            return Err(Error::Precondition(format!(
                "n_samples = {} must exceed fit_degree = {}",
                self.n_samples, self.fit_degree
            )));
        }
        if !(self.y_max > 0.0 && self.y_max < 0.5) || !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Precondition(format!(
                "ladder y_max = {}, ratio = {} out of range",
                self.y_max, self.ratio
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedCoeffs {
    pub alpha3: f64,
    pub alpha4: f64,
    pub beta4: f64,
    /// `y³` coefficient of `y₁ - y` when that power is admitted in the fit.
    pub cubic_drift: f64,
    pub residual_x: f64,
    pub residual_y: f64,
    pub condition: f64,
    pub reliable: bool,
}

fn fit_powers(ys: &[f64], target: &[f64], low: u32, high: u32) -> Result<crate::numeric::LeastSquares> {
    let cols = (high - low + 1) as usize;
    let design = DMatrix::from_fn(ys.len(), cols, |i, j| ys[i].powi((low + j as u32) as i32));
    least_squares(&design, &DVector::from_column_slice(target))
}

pub fn fit_map_coefficients(curve: &BoundaryCurve, x: f64, cfg: &FitConfig) -> Result<FittedCoeffs> {
    cfg.validate()?;
    let ys = cfg.ladder();
    let mut dx = Vec::with_capacity(ys.len());
    let mut dy = Vec::with_capacity(ys.len());
    for &y in &ys {
        let q = lazutkin_step_unwrapped(curve, LazutkinPoint::new(x, y))?;
        dx.push(q.x - x - y);
        dy.push(q.y - y);
    }
    let fx = fit_powers(&ys, &dx, 3, cfg.fit_degree)?;
    // increments at rounding level (circle y) are measured against the floor
    let floored = |rel: f64, target: &[f64]| {
        let peak = target.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        rel * peak / peak.max(NOISE_FLOOR)
    };
    let fy = fit_powers(&ys, &dy, 4, cfg.fit_degree)?;
    let drift = fit_powers(&ys, &dy, 3, cfg.fit_degree)?;
    let condition = fx.condition.max(fy.condition).max(drift.condition);
    let residual_x = floored(fx.relative_residual, &dx);
    let residual_y = floored(fy.relative_residual, &dy);
    let reliable = condition <= cfg.condition_limit && residual_x <= cfg.residual_tol && residual_y <= cfg.residual_tol;
    Ok(FittedCoeffs {
        alpha3: fx.coefficients[0],
        alpha4: fx.coefficients[1],
        beta4: fy.coefficients[0],
        cubic_drift: drift.coefficients[0],
        residual_x,
        residual_y,
        condition,
        reliable,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileSource {
    Closed,
    Fitted,
}

impl ProfileSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProfileSource::Closed => "closed",
            ProfileSource::Fitted => "fitted",
        }
    }
}

/// Coefficients sampled on the uniform grid `x_i = i/N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffProfile {
    pub x: Vec<f64>,
    pub alpha3: Vec<f64>,
    pub alpha4: Vec<f64>,
    pub beta4: Vec<f64>,
    pub alpha3_prime: Option<Vec<f64>>,
    pub source: ProfileSource,
    /// Per-point fit diagnostics for fitted profiles.
    pub fits: Option<Vec<FittedCoeffs>>,
}

impl CoeffProfile {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn check_uniform(&self) -> Result<()> {
        let n = self.x.len();
        if n < 8 {
            return Err(Error::Grid(format!("grid has {n} points, need at least 8")));
        }
        if [&self.alpha3, &self.alpha4, &self.beta4].iter().any(|c| c.len() != n) {
            return Err(Error::Grid("column lengths differ from the grid".into()));
        }
        for (i, &x) in self.x.iter().enumerate() {
            if (x - i as f64 / n as f64).abs() > 1e-12 {
                return Err(Error::Grid(format!("grid point {i} is {x}, expected {}", i as f64 / n as f64)));
            }
        }
        Ok(())
    }

    /// Fitted profiles whose every point passed the residual and condition checks.
    pub fn reliable(&self) -> bool {
        self.fits.as_ref().is_none_or(|f| f.iter().all(|c| c.reliable))
    }
}

pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / n as f64).collect()
}

pub fn coefficient_profile(
    curve: &BoundaryCurve,
    n: usize,
    cfg: &FitConfig,
    source: ProfileSource,
    exec: Execution,
) -> Result<CoeffProfile> {
    if n < 8 {
        return Err(Error::Precondition(format!("grid size {n} below the minimum of 8")));
    }
    let x = uniform_grid(n);
    match source {
        ProfileSource::Closed => {
            let rows = exec.map(n, |i| lazutkin_coefficients(curve, x[i]));
            Ok(CoeffProfile {
                alpha3: rows.iter().map(|r| r.alpha3).collect(),
                alpha4: rows.iter().map(|r| r.alpha4).collect(),
                beta4: rows.iter().map(|r| r.beta4).collect(),
                alpha3_prime: Some(rows.iter().map(|r| r.alpha3_prime).collect()),
                x,
                source,
                fits: None,
            })
        }
        ProfileSource::Fitted => {
            cfg.validate()?;
            let rows = exec.map(n, |i| {
                fit_map_coefficients(curve, x[i], cfg).map_err(|e| Error::FitAt {
                    x: x[i],
                    source: Box::new(e),
                })
            });
            let fits = rows.into_iter().collect::<Result<Vec<_>>>()?;
            Ok(CoeffProfile {
                alpha3: fits.iter().map(|r| r.alpha3).collect(),
                alpha4: fits.iter().map(|r| r.alpha4).collect(),
                beta4: fits.iter().map(|r| r.beta4).collect(),
                alpha3_prime: None,
                x,
                source,
                fits: Some(fits),
            })
        }
    }
}

/// Replaces `α₃'` by the spectral derivative of the `α₃` column.
pub fn differentiate_profile(profile: &CoeffProfile) -> Result<CoeffProfile> {
    profile.check_uniform()?;
    let mut out = profile.clone();
    out.alpha3_prime = Some(spectral::derivative(&profile.alpha3));
    Ok(out)
}

/// Weights recovered from fitted coefficients, with the largest relative
/// residual of each regression.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightValidation {
    pub weights: LazutkinWeights,
    pub residual_alpha3: f64,
    pub residual_alpha4: f64,
    pub residual_beta4: f64,
    /// Relative residual of the fitted coefficients against each weight set
    /// (`derived`, `transcribed`).
    pub misfit_derived: f64,
    pub misfit_transcribed: f64,
    pub samples: usize,
}

fn relative_misfit(weights: &LazutkinWeights, basis: &[BasisTerms], fits: &[FittedCoeffs]) -> f64 {
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for (b, f) in basis.iter().zip(fits) {
        let c = weights.evaluate(b);
        num = num
            .max((c.alpha3 - f.alpha3).abs())
            .max((c.alpha4 - f.alpha4).abs())
            .max((c.beta4 - f.beta4).abs());
        den = den.max(f.alpha3.abs()).max(f.alpha4.abs()).max(f.beta4.abs());
    }
    num / den
}

/// Regress fitted coefficients on the basis terms over several domains.
pub fn validate_weights(
    curves: &[BoundaryCurve],
    points_per_curve: usize,
    cfg: &FitConfig,
    exec: Execution,
) -> Result<WeightValidation> {
    if curves.len() < 3 || points_per_curve < 8 {
        return Err(Error::Precondition(
            "weight validation needs at least 3 domains and 8 points each".into(),
        ));
    }
    let m = points_per_curve;
    let jobs: Vec<(usize, f64)> = (0..curves.len())
        .flat_map(|c| (0..m).map(move |i| (c, (i as f64 + 0.5) / m as f64)))
        .collect();
    let rows = exec.map(jobs.len(), |j| {
        let (c, x) = jobs[j];
        fit_map_coefficients(&curves[c], x, cfg)
            .map(|f| (BasisTerms::at(&curves[c], x), f))
            .map_err(|e| Error::FitAt { x, source: Box::new(e) })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let (basis, fits): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let n = basis.len();
    let a3 = DMatrix::from_fn(n, 3, |i, j| basis[i].alpha3_basis()[j]);
    let a4 = DMatrix::from_fn(n, 4, |i, j| basis[i].fourth_order_basis()[j]);
    let solve = |design: &DMatrix<f64>, f: &dyn Fn(&FittedCoeffs) -> f64| {
        least_squares(design, &DVector::from_iterator(n, fits.iter().map(f)))
    };
    let w3 = solve(&a3, &|f| f.alpha3)?;
    let w4 = solve(&a4, &|f| f.alpha4)?;
    let wb = solve(&a4, &|f| f.beta4)?;
    let arr3 = [w3.coefficients[0], w3.coefficients[1], w3.coefficients[2]];
    let arr4 = |v: &[f64]| [v[0], v[1], v[2], v[3]];
    let weights = LazutkinWeights::from_alpha3(arr3, arr4(&w4.coefficients), arr4(&wb.coefficients));
    Ok(WeightValidation {
        weights,
        residual_alpha3: w3.relative_residual,
        residual_alpha4: w4.relative_residual,
        residual_beta4: wb.relative_residual,
        misfit_derived: relative_misfit(&LazutkinWeights::derived(), &basis, &fits),
        misfit_transcribed: relative_misfit(&LazutkinWeights::transcribed(), &basis, &fits),
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::{build_domain, FourierCurvatureSpec, Harmonic};

    fn circle() -> BoundaryCurve {
        build_domain(FourierCurvatureSpec::circle(1.0)).unwrap()
    }

    fn perturbed() -> BoundaryCurve {
        build_domain(FourierCurvatureSpec::perturbed_circle(2, 0.3)).unwrap()
    }

    #[test]
    fn circle_fit() {
        let f = fit_map_coefficients(&circle(), 0.3, &FitConfig::default()).unwrap();
        assert!((f.alpha3 / (PI * PI / 24.0) - 1.0).abs() < 1e-3);
        assert!(f.alpha4.abs() < 1e-3 && f.beta4.abs() < 1e-3);
        assert!(f.reliable);
    }

    #[test]
    fn perturbed_fit_matches_closed_form() {
        let c = perturbed();
        for x in [0.0, 0.2, 0.7] {
            let f = fit_map_coefficients(&c, x, &FitConfig::default()).unwrap();
            let k = lazutkin_coefficients(&c, x);
            assert!((f.alpha3 / k.alpha3 - 1.0).abs() < 0.01);
            assert!(f.cubic_drift.abs() < 1e-3);
        }
    }

    #[test]
    fn degenerate_config_is_rejected() {
        let cfg = FitConfig {
            n_samples: 3,
            ..FitConfig::default()
        };
        assert!(matches!(
            fit_map_coefficients(&circle(), 0.0, &cfg),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn ladder_stability() {
        let c = build_domain(FourierCurvatureSpec::new("m", 1.0, vec![Harmonic::new(3, 0.1, 0.05)])).unwrap();
        let cfg = FitConfig::default();
        let half = FitConfig {
            y_max: cfg.y_max / 2.0,
            ..cfg
        };
        for x in [0.1, 0.6] {
            let a = fit_map_coefficients(&c, x, &cfg).unwrap().alpha3;
            let b = fit_map_coefficients(&c, x, &half).unwrap().alpha3;
            assert!((a / b - 1.0).abs() < 2e-3);
        }
    }

    #[test]
    fn circle_closed_profile() {
        let p = coefficient_profile(&circle(), 16, &FitConfig::default(), ProfileSource::Closed, Execution::Sequential)
            .unwrap();
        for i in 0..16 {
            assert!((p.alpha3[i] - PI * PI / 24.0).abs() < 1e-14);
            assert_eq!((p.alpha4[i], p.beta4[i]), (0.0, 0.0));
        }
        let d = differentiate_profile(&p).unwrap();
        assert!(d.alpha3_prime.unwrap().iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn small_grid_is_rejected() {
        assert!(matches!(
            coefficient_profile(&circle(), 4, &FitConfig::default(), ProfileSource::Closed, Execution::Sequential),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn spectral_derivative_matches_closed_alpha3_prime() {
        let p = coefficient_profile(&perturbed(), 64, &FitConfig::default(), ProfileSource::Closed, Execution::Sequential)
            .unwrap();
        let d = differentiate_profile(&p).unwrap();
        let exact = p.alpha3_prime.unwrap();
        let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in d.alpha3_prime.unwrap().iter().zip(&exact) {
            assert!((a - b).abs() < 1e-6 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn non_uniform_grid_is_rejected() {
        let mut p = coefficient_profile(&circle(), 8, &FitConfig::default(), ProfileSource::Closed, Execution::Sequential)
            .unwrap();
        p.x[3] += 0.01;
        assert!(matches!(differentiate_profile(&p), Err(Error::Grid(_))));
    }

    #[test]
    fn execution_modes_agree_bitwise() {
        let c = perturbed();
        let cfg = FitConfig::default();
        let a = coefficient_profile(&c, 8, &cfg, ProfileSource::Fitted, Execution::Sequential).unwrap();
        let b = coefficient_profile(&c, 8, &cfg, ProfileSource::Fitted, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
