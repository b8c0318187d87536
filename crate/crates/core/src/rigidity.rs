//! Recovering the curvature profile from Lazutkin coefficients and deciding
//! whether two profiles describe the same table.
//!
//! Profiles are scale-free: Lazutkin coordinates do not see dilations, so a
//! reconstruction is `log ρ̃(x) = log ρ(x) - log ρ(0)` and two tables match
//! when their profiles agree up to a shift in `x` (and possibly `x ↦ -x`).
//!
//! Two reconstruction routes are available.
//!
//! * [`ReconstructionRoute::Alpha3`] uses only `α₃`. Writing
//!   `p = dθ/dx = 1/(Cρ^{1/3})`, the closed form of `α₃` collapses to
//!   `α₃ = p²/96 + p''/(12p)`, a periodic boundary-value problem for `p`.
//! * [`ReconstructionRoute::Invariant`] forms a linear combination
//!   `K = c₁α₃' + c₂α₄ + c₃β₄ = μ(ρ'/ρ)³` and integrates `cbrt(K/μ)`. Such a
//!   combination exists only when the weight vectors are independent enough;
//!   see [`find_annihilating_combination`].

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::expansion::LazutkinWeights;
use crate::fitting::{CoeffProfile, ProfileSource};
use crate::numeric::rank;
use crate::spectral;

/// Weights on `(α₃', α₄, β₄)` and the multiple `μ` of `ρ⁻³ρ'(x)³` they produce.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Combination {
    pub c_a3p: f64,
    pub c_a4: f64,
    pub c_b4: f64,
    pub mu: f64,
    /// Largest surviving weight on `t₁..t₃`.
    pub residual: f64,
}

impl Combination {
    /// The combination `3α₃' - 14α₄ + 2β₄ = (2/3)ρ⁻³ρ'³` as it is usually quoted.
    pub const PRINTED: Combination = Combination {
        c_a3p: 3.0,
        c_a4: -14.0,
        c_b4: 2.0,
        mu: 2.0 / 3.0,
        residual: f64::NAN,
    };

    /// Applies the combination to a weight set: weights on `(t₁, t₂, t₃, t₄)`.
    pub fn weights_on(&self, w: &LazutkinWeights) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.c_a3p * w.alpha3_prime[k] + self.c_a4 * w.alpha4[k] + self.c_b4 * w.beta4[k];
        }
        out
    }

    pub fn apply(&self, a3p: f64, a4: f64, b4: f64) -> f64 {
        self.c_a3p * a3p + self.c_a4 * a4 + self.c_b4 * b4
    }
}

/// Solve for weights on `(α₃', α₄, β₄)` that cancel `t₁..t₃`, normalised to `c_b4 = 2`.
///
/// The `t₁` and `t₂` slots must be in ratio `1/4` in each vector (so they
/// enter only through `u = t₂ + t₁/4`); the remaining 3×3 system in
/// `(u, t₃, t₄)` must then have `t₄` in its range.
pub fn find_annihilating_combination(w: &LazutkinWeights) -> Result<Combination> {
    let cols = [w.alpha3_prime, w.alpha4, w.beta4];
    let scale = cols.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::Degenerate {
            rank: 0,
            detail: "all weight vectors vanish".into(),
        });
    }
    for v in &cols {
        if (v[0] - v[1] / 4.0).abs() > 1e-12 * scale {
            return Err(Error::Precondition(format!(
                "t1/t2 weights {:?} are not in ratio 1/4",
                [v[0], v[1]]
            )));
        }
    }
    let full = DMatrix::from_fn(4, 3, |i, j| cols[j][i]);
    let r = Matrix3::from_fn(|i, j| cols[j][i + 1]);
    let found = rank(&DMatrix::from_fn(3, 3, |i, j| r[(i, j)]), 1e-12);
    let solution = r.lu().solve(&Vector3::new(0.0, 0.0, 1.0));
    let Some(c) = solution.filter(|_| found == 3) else {
        return Err(Error::Degenerate {
            rank: found,
            detail: format!(
                "weight vectors of (alpha3', alpha4, beta4) span a space of dimension {found} \
                 (full rank {}); no combination isolates rho^-3 rho'^3",
                rank(&full, 1e-12)
            ),
        });
    };
    if c[2].abs() < 1e-14 {
        return Err(Error::Degenerate {
            rank: found,
            detail: "the isolating combination has no beta4 component".into(),
        });
    }
    let k = 2.0 / c[2];
    let mut comb = Combination {
        c_a3p: k * c[0],
        c_a4: k * c[1],
        c_b4: 2.0,
        mu: 0.0,
        residual: 0.0,
    };
    let applied = comb.weights_on(w);
    comb.mu = applied[3];
    comb.residual = applied[..3].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(comb)
}

/// `K(x_i)` on the profile grid.
pub fn k_invariant(profile: &CoeffProfile, comb: &Combination) -> Result<Vec<f64>> {
    let a3p = profile
        .alpha3_prime
        .as_ref()
        .ok_or_else(|| Error::Precondition("profile has no alpha3' column".into()))?;
    Ok((0..profile.len())
        .map(|i| comb.apply(a3p[i], profile.alpha4[i], profile.beta4[i]))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ReconstructionRoute {
    Alpha3,
    Invariant(Combination),
}

/// Scale-free curvature profile `log ρ̃` on the uniform grid, `log ρ̃(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureProfile {
    pub x: Vec<f64>,
    pub log_rho: Vec<f64>,
    /// Estimate of `(log ρ)'(x)`.
    pub g: Vec<f64>,
    /// The invariant used, for the invariant route.
    pub k: Option<Vec<f64>>,
    /// Consistency diagnostic: `mean(p)/2π - 1` for the α₃ route, `∫g` for
    /// the invariant route. Both vanish for exact data.
    pub diagnostic: f64,
    pub consistent: bool,
}

impl CurvatureProfile {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Build from samples of `log ρ` on the grid `i/N`, normalised at `x = 0`.
    pub fn from_log_rho(log_rho: Vec<f64>) -> Self {
        let n = log_rho.len();
        let origin = log_rho[0];
        let log_rho: Vec<f64> = log_rho.iter().map(|v| v - origin).collect();
        CurvatureProfile {
            x: crate::fitting::uniform_grid(n),
            g: spectral::derivative(&log_rho),
            log_rho,
            k: None,
            diagnostic: 0.0,
            consistent: true,
        }
    }
}

/// Threshold on the diagnostic above which a reconstruction is flagged.
pub const CONSISTENCY_THRESHOLD: f64 = 1e-2;

pub fn reconstruct_curvature(profile: &CoeffProfile, route: ReconstructionRoute) -> Result<CurvatureProfile> {
    profile.check_uniform()?;
    match route {
        ReconstructionRoute::Alpha3 => reconstruct_from_alpha3(&profile.alpha3),
        ReconstructionRoute::Invariant(comb) => reconstruct_from_invariant(profile, &comb),
    }
}

fn reconstruct_from_invariant(profile: &CoeffProfile, comb: &Combination) -> Result<CurvatureProfile> {
    if !(comb.mu.is_finite() && comb.mu != 0.0) {
        return Err(Error::Precondition(format!("combination has mu = {}", comb.mu)));
    }
    let k = k_invariant(profile, comb)?;
    let floor = match profile.source {
        ProfileSource::Closed => 1e-8,
        ProfileSource::Fitted => 1e-5,
    };
    let g: Vec<f64> = k
        .iter()
        .map(|&v| if v.abs() < floor { 0.0 } else { (v / comb.mu).cbrt() })
        .collect();
    let (log_rho, mean) = spectral::antiderivative(&g);
    let g_centered: Vec<f64> = g.iter().map(|v| v - mean).collect();
    Ok(CurvatureProfile {
        x: profile.x.clone(),
        log_rho,
        g: g_centered,
        k: Some(k),
        diagnostic: mean,
        consistent: mean.abs() <= CONSISTENCY_THRESHOLD,
    })
}

/// Periodic solution of `p'' = 12 a p - p³/8`, continued from the constant
/// solution for `mean(a)`.
fn solve_alpha3_ode(a: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    let mean = a.iter().sum::<f64>() / n as f64;
    if !(mean > 0.0) {
        return Err(Error::numerical(
            "reconstruct_curvature",
            format!("mean alpha3 = {mean} is not positive"),
        ));
    }
    let d2 = spectral::second_derivative_matrix(n);
    let mut p = DVector::from_element(n, (96.0 * mean).sqrt());
    let mut lambda = 0.0;
    let mut step: f64 = 1.0;
    while lambda < 1.0 {
        let target = (lambda + step).min(1.0);
        let coeff: Vec<f64> = a.iter().map(|v| mean + target * (v - mean)).collect();
        match newton_alpha3(&d2, &coeff, p.clone()) {
            Some(next) => {
                p = next;
                lambda = target;
                step = (step * 2.0).min(1.0);
            }
            None => {
                step /= 2.0;
                if step < 1e-4 {
                    return Err(Error::numerical(
                        "reconstruct_curvature",
                        format!("continuation stalled at lambda = {lambda}"),
                    ));
                }
            }
        }
    }
    Ok(p.iter().copied().collect())
}

fn newton_alpha3(d2: &DMatrix<f64>, a: &[f64], mut p: DVector<f64>) -> Option<DVector<f64>> {
    let n = a.len();
    for _ in 0..40 {
        let mut f = d2 * &p;
        let mut jac = d2.clone();
        for i in 0..n {
            f[i] += -12.0 * a[i] * p[i] + p[i].powi(3) / 8.0;
            jac[(i, i)] += -12.0 * a[i] + 3.0 * p[i] * p[i] / 8.0;
        }
        let dp = jac.lu().solve(&f)?;
        p -= &dp;
        if p.iter().any(|v| !(*v > 0.0)) {
            return None;
        }
        if dp.amax() <= 1e-14 * p.amax() {
            return Some(p);
        }
    }
    None
}

fn reconstruct_from_alpha3(alpha3: &[f64]) -> Result<CurvatureProfile> {
    let p = solve_alpha3_ode(alpha3)?;
    let mean_p = p.iter().sum::<f64>() / p.len() as f64;
    let log_p: Vec<f64> = p.iter().map(|v| v.ln()).collect();
    let mut out = CurvatureProfile::from_log_rho(log_p.iter().map(|v| -3.0 * v).collect());
    out.diagnostic = mean_p / TAU - 1.0;
    out.consistent = out.diagnostic.abs() <= CONSISTENCY_THRESHOLD;
    Ok(out)
}

/// Outcome of comparing two curvature profiles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    #[serde(rename = "match")]
    pub matched: bool,
    /// `c` with `log ρ̃₁(±(x + c)) ≈ log ρ̃₂(x) + const`, in `[0, 1)`.
    pub shift: f64,
    pub reflected: bool,
    /// Smallest sup-norm distance modulo an additive constant.
    pub distance: f64,
}

fn distance_mod_constant(a: &[f64], b: &[f64]) -> f64 {
    let (lo, hi) = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
    0.5 * (hi - lo)
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Best shift (and orientation) aligning `p1` with `p2`; `matched` when the
/// distance is below `tol`.
pub fn match_profiles(p1: &CurvatureProfile, p2: &CurvatureProfile, tol: f64) -> Result<MatchResult> {
    let n = p1.len();
    if n != p2.len() || n < 2 {
        return Err(Error::Grid(format!("profiles have {} and {} points", n, p2.len())));
    }
    let mut best: Option<MatchResult> = None;
    for reflected in [false, true] {
        let base = if reflected {
            spectral::reflect(&p1.log_rho)
        } else {
            p1.log_rho.clone()
        };
        let (k, coarse) = (0..n)
            .map(|k| {
                let rolled: Vec<f64> = (0..n).map(|i| base[(i + k) % n]).collect();
                (k, distance_mod_constant(&rolled, &p2.log_rho))
            })
            .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        let h = 1.0 / n as f64;
        let centre = k as f64 * h;
        let (c, refined) = golden_section(
            |c| distance_mod_constant(&spectral::shift(&base, c), &p2.log_rho),
            centre - h,
            centre + h,
            60,
        );
        let (shift, distance) = if refined < coarse { (c, refined) } else { (centre, coarse) };
        let candidate = MatchResult {
            matched: distance < tol,
            shift: shift.rem_euclid(1.0) % 1.0,
            reflected,
            distance,
        };
        if best.is_none_or(|b| candidate.distance < b.distance) {
            best = Some(candidate);
        }
    }
    Ok(best.expect("two orientations tried"))
}
