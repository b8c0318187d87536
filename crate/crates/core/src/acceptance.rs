//! The acceptance suite: eleven numerical checks of the whole pipeline.
//!
//! Each check returns a [`CriterionOutcome`] instead of panicking, so the
//! same code backs the `acceptance` test target and the `selftest` command.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conjugacy::{solve_jet_system, transition_jet, verify_tangency, DEFAULT_JET_GRID};
use crate::dynamics::{billiard_step, PhasePoint};
use crate::error::{Error, Result};
use crate::expansion::{ab_coefficients, x_derivatives, LazutkinWeights};
use crate::fitting::{
    coefficient_profile, differentiate_profile, fit_map_coefficients, uniform_grid, validate_weights, CoeffProfile,
    FitConfig, ProfileSource,
};
use crate::geometry::{build_domain, x_shifted_spec, BoundaryCurve, FourierCurvatureSpec, Harmonic};
use crate::lazutkin::{from_lazutkin, lazutkin_step, to_lazutkin, LazutkinPoint};
use crate::rigidity::{
    find_annihilating_combination, k_invariant, match_profiles, reconstruct_curvature, Combination,
    CurvatureProfile, ReconstructionRoute,
};
use crate::{spectral, Execution};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {}: {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail
        )
    }
}

pub const TITLES: [&str; 11] = [
    "circle coefficient law",
    "closed-form vs fitted agreement",
    "structural zeros",
    "no cubic drift",
    "annihilating combination exists",
    "K identity",
    "reconstruction round trip",
    "discrimination",
    "homothety",
    "conjugacy jet",
    "coordinate round trip",
];

/// Runs criterion `id` (1..=11).
pub fn run(id: u8, exec: Execution) -> CriterionOutcome {
    let result = match id {
        1 => circle_law(),
        2 => closed_vs_fitted(exec),
        3 => structural_zeros(),
        4 => cubic_drift(exec),
        5 => annihilating_combination(),
        6 => k_identity(exec),
        7 => reconstruction_round_trip(exec),
        8 => discrimination(exec),
        9 => homothety(exec),
        10 => conjugacy_jet(),
        11 => coordinate_round_trip(),
        _ => Err(Error::Precondition(format!("no criterion {id}"))),
    };
    let title = TITLES.get((id as usize).wrapping_sub(1)).copied().unwrap_or("unknown");
    match result {
        Ok((passed, detail)) => CriterionOutcome { id, title, passed, detail },
        Err(e) => CriterionOutcome {
            id,
            title,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

pub fn run_all(exec: Execution) -> Vec<CriterionOutcome> {
    (1..=11).map(|id| run(id, exec)).collect()
}

type Check = Result<(bool, String)>;

fn curve(spec: FourierCurvatureSpec) -> Result<BoundaryCurve> {
    build_domain(spec)
}

fn eps_domain(eps: f64) -> Result<BoundaryCurve> {
    curve(FourierCurvatureSpec::perturbed_circle(2, eps))
}

fn test_domains() -> Result<Vec<BoundaryCurve>> {
    [
        FourierCurvatureSpec::perturbed_circle(2, 0.3),
        FourierCurvatureSpec::new("mixed", 1.0, vec![Harmonic::new(2, 0.15, 0.05), Harmonic::new(3, 0.08, -0.04)]),
        FourierCurvatureSpec::new("tri", 1.7, vec![Harmonic::new(3, 0.2, 0.3), Harmonic::new(5, 0.05, 0.0)]),
    ]
    .into_iter()
    .map(curve)
    .collect()
}

fn sup_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

fn circle_law() -> Check {
    let c = curve(FourierCurvatureSpec::circle(1.0))?;
    let exact = PI * PI / 24.0;
    let (mut rel, mut a4, mut b4) = (0.0f64, 0.0f64, 0.0f64);
    for x in [0.0, 0.25, 0.6, 0.9] {
        let f = fit_map_coefficients(&c, x, &FitConfig::default())?;
        rel = rel.max((f.alpha3 / exact - 1.0).abs());
        a4 = a4.max(f.alpha4.abs());
        b4 = b4.max(f.beta4.abs());
    }
    Ok((
        rel < 1e-3 && a4 < 1e-3 && b4 < 1e-3,
        format!("alpha3 rel err {rel:.2e}, |alpha4| {a4:.2e}, |beta4| {b4:.2e}"),
    ))
}

/// Largest gap per coefficient, relative to the scale of the closed profile
/// (never below the scale of the closed alpha3).
pub fn profile_gaps(closed: &CoeffProfile, fitted: &CoeffProfile) -> [f64; 3] {
    let floor = sup_abs(closed.alpha3.iter().copied()).max(f64::MIN_POSITIVE);
    let gap = |a: &[f64], b: &[f64]| {
        let scale = sup_abs(a.iter().copied()).max(floor);
        sup_abs(a.iter().zip(b).map(|(x, y)| x - y)) / scale
    };
    [
        gap(&closed.alpha3, &fitted.alpha3),
        gap(&closed.alpha4, &fitted.alpha4),
        gap(&closed.beta4, &fitted.beta4),
    ]
}

fn closed_vs_fitted(exec: Execution) -> Check {
    let cfg = FitConfig::default();
    let v = validate_weights(&test_domains()?, 8, &cfg, exec)?;
    let protocol_ok = v.misfit_derived < 1e-3 && v.residual_alpha3.max(v.residual_alpha4).max(v.residual_beta4) < 1e-3;
    let c = eps_domain(0.3)?;
    let closed = coefficient_profile(&c, 16, &cfg, ProfileSource::Closed, exec)?;
    let fitted = coefficient_profile(&c, 16, &cfg, ProfileSource::Fitted, exec)?;
    let [g3, g4, gb] = profile_gaps(&closed, &fitted);
    Ok((
        protocol_ok && g3 < 0.02 && g4 < 0.02 && gb < 0.02,
        format!(
            "gaps alpha3 {g3:.2e}, alpha4 {g4:.2e}, beta4 {gb:.2e}; weight validation misfit {:.2e} (transcribed weights {:.2e})",
            v.misfit_derived, v.misfit_transcribed
        ),
    ))
}

fn structural_zeros() -> Check {
    let mut worst = 0.0f64;
    for c in test_domains()? {
        for k in 0..8 {
            let ab = ab_coefficients(&c, c.perimeter() * (k as f64 + 0.2) / 8.0);
            worst = worst
                .max(ab.a[1].abs())
                .max(ab.b[1].abs())
                .max((ab.b[0] - ab.a[0]).abs())
                .max((24.0 * ab.b[2] + ab.b[0]).abs());
        }
    }
    Ok((worst < 1e-12, format!("max |A2|, |B2|, |B1 - A1|, |24B3 + B1| = {worst:.2e}")))
}

fn cubic_drift(exec: Execution) -> Check {
    let cfg = FitConfig::default();
    let mut worst = 0.0f64;
    let mut domains = test_domains()?;
    domains.push(curve(FourierCurvatureSpec::circle(1.0))?);
    for c in &domains {
        let p = coefficient_profile(c, 16, &cfg, ProfileSource::Fitted, exec)?;
        worst = worst.max(sup_abs(p.fits.iter().flatten().map(|f| f.cubic_drift)));
    }
    Ok((worst < 1e-3, format!("max |y^3 coefficient of y1 - y| = {worst:.2e} over 4 domains x 16 points")))
}

fn annihilating_combination() -> Check {
    let transcribed = LazutkinWeights::transcribed();
    let note = match find_annihilating_combination(&transcribed) {
        Ok(c) => format!(
            "transcribed weights give ({:.4}, {:.4}, 2) with mu {:.4}; printed (3, -14, 2) leaves t1..t4 weights {:?}",
            c.c_a3p,
            c.c_a4,
            c.mu,
            Combination::PRINTED.weights_on(&transcribed).map(|v| (v * 1e4).round() / 1e4)
        ),
        Err(e) => format!("transcribed weights: {e}"),
    };
    match find_annihilating_combination(&LazutkinWeights::derived()) {
        Ok(c) => Ok((
            c.residual < 1e-12,
            format!(
                "validated weights give ({:.6}, {:.6}, 2), mu {:.6}, residual {:.1e}; {note}",
                c.c_a3p, c.c_a4, c.mu, c.residual
            ),
        )),
        Err(Error::Degenerate { rank, .. }) => Ok((
            false,
            format!(
                "validated weights are degenerate (rank {rank}: alpha3' = 5/2 alpha4, beta4 = -alpha4/2), \
                 no combination isolates rho^-3 rho'^3; {note}"
            ),
        )),
        Err(e) => Err(e),
    }
}

fn k_identity(exec: Execution) -> Check {
    let c = eps_domain(0.3)?;
    let closed = coefficient_profile(&c, 32, &FitConfig::default(), ProfileSource::Closed, exec)?;
    let target: Vec<(f64, f64)> = uniform_grid(32)
        .iter()
        .map(|&x| {
            let j = x_derivatives(&c, x);
            ((j.d1 / j.rho).powi(3), j.d1)
        })
        .collect();
    let printed = k_invariant(&closed, &Combination::PRINTED)?;
    let printed_residual = sup_abs(printed.iter().zip(&target).map(|(k, t)| k - 2.0 / 3.0 * t.0));
    let comb = match find_annihilating_combination(&LazutkinWeights::derived()) {
        Ok(comb) => comb,
        Err(Error::Degenerate { rank, .. }) => {
            return Ok((
                false,
                format!(
                    "no combination available (weights rank {rank}); printed (3, -14, 2) gives \
                     sup |K - (2/3) rho^-3 rho'^3| = {printed_residual:.3e} on the closed profile"
                ),
            ))
        }
        Err(e) => return Err(e),
    };
    let k = k_invariant(&closed, &comb)?;
    let closed_residual = sup_abs(k.iter().zip(&target).map(|(k, t)| k - comb.mu * t.0));
    let fitted = differentiate_profile(&coefficient_profile(&c, 32, &FitConfig::default(), ProfileSource::Fitted, exec)?)?;
    let kf = k_invariant(&fitted, &comb)?;
    let fitted_rel = sup_abs(
        kf.iter()
            .zip(&target)
            .filter(|(_, t)| t.1.abs() > 0.05)
            .map(|(k, t)| (k - comb.mu * t.0) / (comb.mu * t.0)),
    );
    Ok((
        closed_residual < 1e-10 && fitted_rel < 0.05,
        format!("closed residual {closed_residual:.2e}, fitted rel err {fitted_rel:.2e}"),
    ))
}

/// `log ρ̃` sampled from the geometry.
pub fn true_profile(c: &BoundaryCurve, n: usize) -> CurvatureProfile {
    CurvatureProfile::from_log_rho(uniform_grid(n).iter().map(|&x| x_derivatives(c, x).rho.ln()).collect())
}

/// Sup error of `rec` against `truth` after aligning with [`match_profiles`].
pub fn aligned_error(truth: &CurvatureProfile, rec: &CurvatureProfile) -> Result<f64> {
    let m = match_profiles(truth, rec, 0.0)?;
    let base = if m.reflected {
        spectral::reflect(&truth.log_rho)
    } else {
        truth.log_rho.clone()
    };
    let aligned = CurvatureProfile::from_log_rho(spectral::shift(&base, m.shift));
    Ok(sup_abs(aligned.log_rho.iter().zip(&rec.log_rho).map(|(a, b)| a - b)))
}

fn reconstruct(c: &BoundaryCurve, n: usize, source: ProfileSource, exec: Execution) -> Result<CurvatureProfile> {
    let p = coefficient_profile(c, n, &FitConfig::default(), source, exec)?;
    reconstruct_curvature(&p, ReconstructionRoute::Alpha3)
}

fn reconstruction_round_trip(exec: Execution) -> Check {
    let c = eps_domain(0.3)?;
    let truth = true_profile(&c, 64);
    let fitted = aligned_error(&truth, &reconstruct(&c, 64, ProfileSource::Fitted, exec)?)?;
    let closed = aligned_error(&truth, &reconstruct(&c, 64, ProfileSource::Closed, exec)?)?;
    Ok((
        fitted < 1e-2 && closed < 1e-8,
        format!("sup log-curvature error: fitted {fitted:.2e}, closed {closed:.2e} (alpha3 route, N = 64)"),
    ))
}

fn discrimination(exec: Execution) -> Check {
    let a = eps_domain(0.3)?;
    let b = eps_domain(0.2)?;
    let n = 64;
    let pa = reconstruct(&a, n, ProfileSource::Fitted, exec)?;
    let pb = reconstruct(&b, n, ProfileSource::Fitted, exec)?;
    let distinct = match_profiles(&pa, &pb, 2e-2)?;
    let mixed = curve(FourierCurvatureSpec::new(
        "mixed",
        1.0,
        vec![Harmonic::new(2, 0.2, 0.1), Harmonic::new(3, 0.05, 0.0)],
    ))?;
    let shifted = curve(x_shifted_spec(&mixed, 0.25))?;
    let pm = reconstruct(&mixed, n, ProfileSource::Fitted, exec)?;
    let ps = reconstruct(&shifted, n, ProfileSource::Fitted, exec)?;
    let same = match_profiles(&pm, &ps, 2e-2)?;
    let step = 1.0 / (8.0 * n as f64);
    let shift_err = (same.shift - 0.25).abs();
    Ok((
        !distinct.matched && distinct.distance > 0.05 && same.matched && !same.reflected && shift_err < step,
        format!(
            "eps 0.3 vs 0.2 distance {:.3e}; shifted copy distance {:.2e}, shift {:.6} (error {shift_err:.1e}, subgrid step {step:.1e})",
            distinct.distance, same.distance, same.shift
        ),
    ))
}

fn homothety(exec: Execution) -> Check {
    let spec = FourierCurvatureSpec::new("h", 1.0, vec![Harmonic::new(2, 0.2, 0.1), Harmonic::new(3, 0.05, -0.03)]);
    let a = curve(spec.clone())?;
    let b = curve(spec.scaled(2.0))?;
    let (mut qa, mut qb) = (LazutkinPoint::new(0.1, 0.15), LazutkinPoint::new(0.1, 0.15));
    let mut orbit_gap = 0.0f64;
    for _ in 0..100 {
        qa = lazutkin_step(&a, qa)?;
        qb = lazutkin_step(&b, qb)?;
        let dx = (qa.x - qb.x + 0.5).rem_euclid(1.0) - 0.5;
        orbit_gap = orbit_gap.max(dx.abs()).max((qa.y - qb.y).abs());
    }
    let ra = reconstruct(&a, 64, ProfileSource::Closed, exec)?;
    let rb = reconstruct(&b, 64, ProfileSource::Closed, exec)?;
    let profile_gap = sup_abs(ra.log_rho.iter().zip(&rb.log_rho).map(|(x, y)| x - y));
    Ok((
        orbit_gap < 1e-10 && profile_gap < 1e-10,
        format!(
            "max per-step orbit gap {orbit_gap:.2e} over 100 steps, profile gap {profile_gap:.2e}; \
             Lazutkin data do not determine scale"
        ),
    ))
}

fn conjugacy_jet() -> Check {
    let pairs = [
        (
            FourierCurvatureSpec::perturbed_circle(2, 0.2),
            FourierCurvatureSpec::new("q", 1.3, vec![Harmonic::new(3, 0.1, 0.05)]),
        ),
        (
            FourierCurvatureSpec::perturbed_circle(3, 0.15),
            FourierCurvatureSpec::new("r", 0.8, vec![Harmonic::new(2, -0.1, 0.2), Harmonic::new(4, 0.02, 0.0)]),
        ),
    ];
    let mut worst = 0.0f64;
    for (s1, s2) in pairs {
        let (c1, c2) = (curve(s1)?, curve(s2)?);
        let solved = solve_jet_system(&c1, &c2, DEFAULT_JET_GRID)?;
        let closed = transition_jet(&c1, &c2, DEFAULT_JET_GRID);
        let r = verify_tangency(&solved, &closed, 1e-8)?;
        worst = worst.max(r.a0_deviation).max(r.b1_deviation);
    }
    Ok((worst < 1e-8, format!("max sup deviation in a0, b1 over 2 pairs: {worst:.2e}")))
}

fn coordinate_round_trip() -> Check {
    let c = curve(FourierCurvatureSpec::new(
        "mixed",
        1.0,
        vec![Harmonic::new(2, 0.3, 0.0), Harmonic::new(3, 0.04, 0.06)],
    ))?;
    let l = c.perimeter();
    let wrap = |d: f64| (d + 0.5 * l).rem_euclid(l) - 0.5 * l;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2b);
    let (mut round, mut reversal) = (0.0f64, 0.0f64);
    for k in 0..1000 {
        let p = PhasePoint::new(rng.random_range(0.0..l), rng.random_range(1e-3..PI - 1e-3));
        let back = from_lazutkin(&c, to_lazutkin(&c, p))?;
        round = round.max(wrap(back.s - p.s).abs()).max((back.phi - p.phi).abs());
        if k % 5 == 0 {
            let q = billiard_step(&c, p)?;
            let r = billiard_step(&c, PhasePoint::new(q.s, PI - q.phi))?;
            reversal = reversal.max(wrap(r.s - p.s).abs()).max((r.phi - (PI - p.phi)).abs());
        }
    }
    Ok((
        round < 1e-12 && reversal < 1e-11,
        format!("round trip {round:.2e} over 1000 states, time reversal {reversal:.2e} over 200"),
    ))
}
