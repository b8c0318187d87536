//! Small numerical kernels shared by the modules: a safeguarded Newton solver
//! for monotone scalar equations and a column-scaled least-squares solve.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solve `f(t) = 0` for a strictly increasing `f` on `[lo, hi]` with
/// `f(lo) <= 0 <= f(hi)`.
///
/// `f` returns the value and the derivative. Newton steps that leave the
/// bracket fall back to bisection. Terminates when the step falls below
/// `tol` (absolute) or the bracket collapses.
pub fn solve_increasing<F>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    guess: f64,
    tol: f64,
    context: &'static str,
) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::numerical(context, format!("bad bracket [{lo}, {hi}]")));
    }
    let mut t = if guess > lo && guess < hi {
        guess
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..200 {
        let (v, d) = f(t);
        if v == 0.0 {
            return Ok(t);
        }
        if v < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - v / d;
        let next = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - t).abs();
        t = next;
        if step <= tol || hi - lo <= tol {
            return Ok(t);
        }
    }
    Err(Error::numerical(
        context,
        format!("no convergence in 200 iterations, bracket [{lo:e}, {hi:e}]"),
    ))
}

/// Result of a column-scaled least-squares solve.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    /// Max absolute residual divided by max absolute target.
    pub relative_residual: f64,
    /// 2-norm condition number of the column-scaled design.
    pub condition: f64,
}

/// Minimise `|A c - b|` with every column of `A` scaled to unit norm first.
pub fn least_squares(design: &DMatrix<f64>, target: &DVector<f64>) -> Result<LeastSquares> {
    let (rows, cols) = design.shape();
    if rows < cols || cols == 0 {
        return Err(Error::Precondition(format!(
            "least squares needs rows >= cols > 0, got {rows}x{cols}"
        )));
    }
    let mut scaled = design.clone();
    let mut scales = vec![1.0; cols];
    for (j, scale) in scales.iter_mut().enumerate() {
        let norm = scaled.column(j).norm();
        if norm > 0.0 {
            *scale = norm;
            scaled.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    let svd = scaled.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let solution = svd
        .solve(target, smax * 1e-15)
        .map_err(|e| Error::numerical("least_squares", e))?;
    let coefficients: Vec<f64> = solution
        .iter()
        .zip(&scales)
        .map(|(c, s)| c / s)
        .collect();
    let residual = &scaled * &solution - target;
    let scale = target.amax();
    let relative_residual = if scale > 0.0 {
        residual.amax() / scale
    } else {
        residual.amax()
    };
    Ok(LeastSquares {
        coefficients,
        relative_residual,
        condition,
    })
}

/// Numerical rank: singular values above `rel_tol * largest`.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Derivatives of `rho^p` from the jet `(rho, rho', rho'', rho''')`.
pub fn power_jet(jet: [f64; 4], p: f64) -> [f64; 4] {
    let [r, r1, r2, r3] = jet;
    let pm = r.powf(p - 1.0);
    let pm2 = pm / r;
    let pm3 = pm2 / r;
    [
        pm * r,
        p * pm * r1,
        p * (p - 1.0) * pm2 * r1 * r1 + p * pm * r2,
        p * (p - 1.0) * (p - 2.0) * pm3 * r1 * r1 * r1 + 3.0 * p * (p - 1.0) * pm2 * r1 * r2 + p * pm * r3,
    ]
}
