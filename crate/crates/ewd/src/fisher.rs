//! The limiting Fisher information matrix under type II censoring,
//! expressed entrywise as single integrals over the probability scale,
//! plus the inference built on it: asymptotic covariance, Wald confidence
//! intervals and the likelihood-ratio test for `beta = 1`.
//!
//! With `z = 1 - e^{-(x/sigma)^beta}` the log-hazard partials reduce to
//! functions of `z` alone (up to the displayed prefactors), so every
//! entry of `I_p(theta)` is a one-dimensional integral: the `(alpha,
//! alpha)` entry over `(0, p)`, the rest over `(0, p^{1/alpha})` with
//! weight `x^{alpha-1}`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::distributions::{ln_one_minus_exp, point, psi, Theta};
use crate::error::{EwdError, Result};
use crate::likelihood::CensoredSample;
use crate::mle::{fit_backfitting, fit_eed, FitConfig, FitResult};
use crate::quad;

/// Parameter axis, in the fixed order `(alpha, beta, sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Alpha,
    Beta,
    Sigma,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::Alpha => 0,
            Axis::Beta => 1,
            Axis::Sigma => 2,
        }
    }
}

const QUAD_ABS_TOL: f64 = 1e-9;
const QUAD_REL_TOL: f64 = 1e-9;
const QUAD_MAX_EVALS: usize = 100_000;

/// Symmetric 3x3 information matrix with its inverse and diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FisherMatrix {
    /// Censoring proportion actually integrated to.
    pub p: f64,
    /// `p = 1` was requested and capped to `1 - 1e-10` for integrability.
    pub p_capped: bool,
    pub entries: [[f64; 3]; 3],
    /// Asymptotic covariance of `sqrt(n) (theta_hat - theta)`; withheld
    /// when the matrix is numerically singular.
    pub covariance: Option<[[f64; 3]; 3]>,
    /// Per-entry estimated absolute quadrature error.
    pub quadrature_error: [[f64; 3]; 3],
    pub condition_number: f64,
}

/// The three partial derivatives of `ln h(x; theta)`.
pub fn log_hazard_partials(x: f64, theta: Theta) -> Result<[f64; 3]> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(EwdError::Domain(format!("x must be > 0, got {x}")));
    }
    let Theta { alpha, beta, sigma } = theta;
    let pt = point(x, theta);
    let ln_surv = ln_one_minus_exp(alpha * pt.ln_z);
    if ln_surv == f64::NEG_INFINITY || pt.ln_z == f64::NEG_INFINITY {
        return Err(EwdError::NumericalOverflow(format!(
            "F is 0 or 1 at machine precision at x = {x}"
        )));
    }
    let one_minus_za = ln_surv.exp();
    let psi_z = psi(pt.z, alpha)?;
    let d_alpha = 1.0 / alpha * (1.0 + alpha * pt.ln_z / one_minus_za);
    let d_beta = (1.0 + pt.ln_t * psi_z) / beta;
    let d_sigma = -beta / sigma * psi_z;
    Ok([d_alpha, d_beta, d_sigma])
}

/// One Fisher entry with its quadrature error estimate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FisherEntry {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

fn entry_quad(
    f: impl FnMut(f64) -> f64,
    upper: f64,
) -> quad::QuadResult {
    quad::integrate(f, 0.0, upper, QUAD_ABS_TOL, QUAD_REL_TOL, QUAD_MAX_EVALS)
}

/// Compute entry `(i, j)` of `I_p(theta)` from its single-integral form.
pub fn fisher_entry(i: Axis, j: Axis, theta: Theta, p: f64) -> Result<FisherEntry> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(EwdError::Domain(format!("p must lie in (0,1], got {p}")));
    }
    let Theta { alpha, beta, sigma } = theta;
    // integrand helpers on the z scale
    let weight = |x: f64| ((alpha - 1.0) * x.ln()).exp();
    let a_term = |x: f64| 1.0 / alpha + x.ln() / (-(alpha * x.ln()).exp_m1());
    let b_term = |x: f64| 1.0 + (-(-x).ln_1p()).ln() * psi(x, alpha).unwrap_or(f64::NAN);
    let psi_term = |x: f64| psi(x, alpha).unwrap_or(f64::NAN);
    let upper = (p.ln() / alpha).exp();

    let (prefactor, r) = match (i.index().min(j.index()), i.index().max(j.index())) {
        (0, 0) => {
            let r = entry_quad(
                |x| {
                    let t = 1.0 + x.ln() / (1.0 - x);
                    t * t
                },
                p,
            );
            (1.0 / (alpha * alpha), r)
        }
        (1, 1) => {
            let r = entry_quad(
                |x| {
                    let b = b_term(x);
                    b * b * weight(x)
                },
                upper,
            );
            (alpha / (beta * beta), r)
        }
        (2, 2) => {
            let r = entry_quad(
                |x| {
                    let ps = psi_term(x);
                    ps * ps * weight(x)
                },
                upper,
            );
            (alpha * (beta / sigma) * (beta / sigma), r)
        }
        (0, 1) => {
            let r = entry_quad(|x| a_term(x) * b_term(x) * weight(x), upper);
            (alpha / beta, r)
        }
        (0, 2) => {
            let r = entry_quad(|x| a_term(x) * psi_term(x) * weight(x), upper);
            (-(alpha * beta) / sigma, r)
        }
        (1, 2) => {
            let r = entry_quad(|x| b_term(x) * psi_term(x) * weight(x), upper);
            (-alpha / sigma, r)
        }
        _ => unreachable!("axis indices are 0..3"),
    };
    if !r.value.is_finite() {
        return Err(EwdError::Quadrature(format!(
            "integrand not finite for entry ({i:?}, {j:?})"
        )));
    }
    Ok(FisherEntry {
        value: prefactor * r.value,
        error: prefactor.abs() * r.error,
        converged: r.converged,
    })
}

// --- small symmetric-matrix helpers ----------------------------------------

fn cholesky3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut sum = m[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

/// Inverse of a symmetric positive-definite 3x3 via its Cholesky factor.
fn spd_inverse3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let l = cholesky3(m)?;
    // invert lower-triangular L
    let mut li = [[0.0; 3]; 3];
    for i in 0..3 {
        li[i][i] = 1.0 / l[i][i];
        for j in 0..i {
            let mut sum = 0.0;
            for k in j..i {
                sum -= l[i][k] * li[k][j];
            }
            li[i][j] = sum / l[i][i];
        }
    }
    // A^{-1} = L^{-T} L^{-1}
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut sum = 0.0;
            for k in i.max(j)..3 {
                sum += li[k][i] * li[k][j];
            }
            inv[i][j] = sum;
        }
    }
    Some(inv)
}

/// Eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi rotations.
pub(crate) fn sym3_eigenvalues(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let mut a = *m;
    for _ in 0..100 {
        let off = a[0][1].abs().max(a[0][2].abs()).max(a[1][2].abs());
        let scale = (0..3).map(|i| a[i][i].abs()).fold(0.0f64, f64::max);
        if off <= 1e-15 * scale.max(1e-300) {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q].abs() < 1e-300 {
                continue;
            }
            let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut b = a;
            for k in 0..3 {
                b[p][k] = c * a[p][k] - s * a[q][k];
                b[q][k] = s * a[p][k] + c * a[q][k];
            }
            let tmp = b;
            for k in 0..3 {
                b[k][p] = c * tmp[k][p] - s * tmp[k][q];
                b[k][q] = s * tmp[k][p] + c * tmp[k][q];
            }
            a = b;
        }
    }
    [a[0][0], a[1][1], a[2][2]]
}

/// Assemble the full information matrix, its inverse and diagnostics.
pub fn fisher_matrix(theta: Theta, p: f64) -> Result<FisherMatrix> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(EwdError::Domain(format!("p must lie in (0,1], got {p}")));
    }
    let mut p_eff = p;
    let mut p_capped = false;
    let axes = [Axis::Alpha, Axis::Beta, Axis::Sigma];
    let compute = |p_eff: f64| -> Result<([[f64; 3]; 3], [[f64; 3]; 3], bool)> {
        let mut entries = [[0.0; 3]; 3];
        let mut errors = [[0.0; 3]; 3];
        let mut all_converged = true;
        for i in 0..3 {
            for j in i..3 {
                let e = fisher_entry(axes[i], axes[j], theta, p_eff)?;
                entries[i][j] = e.value;
                entries[j][i] = e.value;
                errors[i][j] = e.error;
                errors[j][i] = e.error;
                all_converged &= e.converged;
            }
        }
        Ok((entries, errors, all_converged))
    };
    let (mut entries, mut errors, mut converged) = compute(p_eff)?;
    if !converged && p == 1.0 {
        p_eff = 1.0 - 1e-10;
        p_capped = true;
        let redo = compute(p_eff)?;
        entries = redo.0;
        errors = redo.1;
        converged = redo.2;
    }
    if !converged {
        return Err(EwdError::Quadrature(
            "Fisher entries did not reach the requested tolerance".into(),
        ));
    }
    let eig = sym3_eigenvalues(&entries);
    let (e_min, e_max) = eig
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let condition_number = if e_min > 0.0 { e_max / e_min } else { f64::INFINITY };
    let covariance = if condition_number < 1e12 {
        spd_inverse3(&entries)
    } else {
        None
    };
    Ok(FisherMatrix {
        p: p_eff,
        p_capped,
        entries,
        covariance,
        quadrature_error: errors,
        condition_number,
    })
}

/// Wald intervals `theta_i +/- z * sqrt(cov_ii / n)`, truncated below at 0.
pub fn asymptotic_ci(
    fit: &FitResult,
    sample: &CensoredSample,
    level: f64,
) -> Result<[(f64, f64); 3]> {
    if !(0.0..1.0).contains(&level) {
        return Err(EwdError::Domain(format!(
            "confidence level must lie in [0,1), got {level}"
        )));
    }
    let p = sample.r() as f64 / sample.n_total() as f64;
    let info = fisher_matrix(fit.theta_hat, p)?;
    let cov = info.covariance.ok_or_else(|| {
        EwdError::IllConditioned(format!(
            "information matrix singular (condition number {:.3e})",
            info.condition_number
        ))
    })?;
    let z = if level == 0.0 {
        0.0
    } else {
        Normal::standard().inverse_cdf(0.5 * (1.0 + level))
    };
    let n = sample.n_total() as f64;
    let est = [fit.theta_hat.alpha, fit.theta_hat.beta, fit.theta_hat.sigma];
    let mut out = [(0.0, 0.0); 3];
    for i in 0..3 {
        let se = (cov[i][i] / n).sqrt();
        out[i] = ((est[i] - z * se).max(0.0), est[i] + z * se);
    }
    Ok(out)
}

/// Likelihood-ratio test of the EED sub-model (`beta = 1`) against EWD.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LrtResult {
    pub statistic: f64,
    pub p_value: f64,
    pub loglik_ewd: f64,
    pub loglik_eed: f64,
}

pub fn lrt_beta_equals_one(sample: &CensoredSample, config: &FitConfig) -> Result<LrtResult> {
    let ewd = fit_backfitting(sample, config)?;
    let eed = fit_eed(sample, config)?;
    let statistic = 2.0 * (ewd.loglik_kernel - eed.loglik_kernel);
    if statistic < -1e-6 {
        return Err(EwdError::NonConvergence(format!(
            "nested model beat the full model: LRT statistic {statistic:.3e}"
        )));
    }
    let statistic = statistic.max(0.0);
    let chi2 = ChiSquared::new(1.0).expect("valid dof");
    let p_value = chi2.sf(statistic);
    Ok(LrtResult {
        statistic,
        p_value,
        loglik_ewd: ewd.loglik_kernel,
        loglik_eed: eed.loglik_kernel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{ewd_cdf, ewd_hazard};

    fn theta(a: f64, b: f64, s: f64) -> Theta {
        Theta::new(a, b, s).unwrap()
    }

    #[test]
    fn partials_alpha_one_identity() {
        // alpha-partial at alpha=1: 1 + ln F / (1 - F)
        let th = theta(1.0, 1.4, 2.0);
        let x = 1.7;
        let f = ewd_cdf(x, th).unwrap();
        let d = log_hazard_partials(x, th).unwrap();
        assert!((d[0] - (1.0 + f.ln() / (1.0 - f))).abs() < 1e-12);
        // Weibull sigma-partial has constant sign in x (psi = 1)
        for x in [0.2, 1.0, 3.0, 8.0] {
            let d = log_hazard_partials(x, th).unwrap();
            assert!(d[2] < 0.0);
            assert!((d[2] - (-th.beta / th.sigma)).abs() < 1e-12);
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        let th = theta(2.3, 0.8, 1.6);
        let x = 1.2;
        let d = log_hazard_partials(x, th).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut hi = th;
            let mut lo = th;
            match i {
                0 => {
                    hi.alpha += h;
                    lo.alpha -= h;
                }
                1 => {
                    hi.beta += h;
                    lo.beta -= h;
                }
                _ => {
                    hi.sigma += h;
                    lo.sigma -= h;
                }
            }
            let fd = (ewd_hazard(x, hi).unwrap().ln() - ewd_hazard(x, lo).unwrap().ln()) / (2.0 * h);
            assert!(
                (d[i] - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                "axis {i}: {} vs {fd}",
                d[i]
            );
        }
    }

    #[test]
    fn entry_11_frozen_oracle() {
        // (1/alpha^2) int_0^0.5 [1 + ln x/(1-x)]^2 dx at alpha = 1
        let e = fisher_entry(Axis::Alpha, Axis::Alpha, theta(1.0, 1.0, 1.0), 0.5).unwrap();
        assert!((e.value - 0.980453013918201425).abs() < 1e-9, "{}", e.value);
    }

    #[test]
    fn entry_33_alpha_one_closed_form() {
        // psi = 1, weight = 1: I33 = (beta/sigma)^2 p
        for p in [0.3, 0.8, 1.0] {
            let th = theta(1.0, 1.7, 2.5);
            let e = fisher_entry(Axis::Sigma, Axis::Sigma, th, p).unwrap();
            let expect = (th.beta / th.sigma).powi(2) * p;
            assert!((e.value - expect).abs() < 1e-8, "p={p}: {} vs {expect}", e.value);
        }
    }

    #[test]
    fn matrix_symmetry_and_positive_definiteness() {
        let m = fisher_matrix(theta(2.0, 1.5, 1.0), 0.9).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.entries[i][j], m.entries[j][i]);
            }
        }
        let eig = sym3_eigenvalues(&m.entries);
        assert!(eig.iter().all(|&v| v > 0.0), "eigenvalues {eig:?}");
        // covariance * entries = identity
        let cov = m.covariance.unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut dot = 0.0;
                for k in 0..3 {
                    dot += cov[i][k] * m.entries[k][j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-8, "({i},{j}): {dot}");
            }
        }
    }

    #[test]
    fn scale_structure_of_entries() {
        // I11 depends only on (alpha, p); I22 is sigma-free; I33 scales as (beta/sigma)^2
        let p = 0.7;
        let a = fisher_entry(Axis::Alpha, Axis::Alpha, theta(1.8, 1.0, 1.0), p).unwrap();
        let b = fisher_entry(Axis::Alpha, Axis::Alpha, theta(1.8, 3.0, 17.0), p).unwrap();
        assert!((a.value - b.value).abs() < 1e-9);

        let a = fisher_entry(Axis::Beta, Axis::Beta, theta(1.8, 1.3, 1.0), p).unwrap();
        let b = fisher_entry(Axis::Beta, Axis::Beta, theta(1.8, 1.3, 9.0), p).unwrap();
        assert!((a.value - b.value).abs() < 1e-9);

        let base = fisher_entry(Axis::Sigma, Axis::Sigma, theta(1.8, 1.3, 1.0), p).unwrap();
        let scaled = fisher_entry(Axis::Sigma, Axis::Sigma, theta(1.8, 1.3, 4.0), p).unwrap();
        assert!((scaled.value - base.value / 16.0).abs() < 1e-9 * base.value.abs());
    }

    #[test]
    fn psi_change_of_variables_identity() {
        // 1 - (x/s)^b + (a-1)xf/(abF) + xf/(b(1-F)) = psi(z; a)
        let th = theta(2.2, 1.4, 1.1);
        for x in [0.3, 0.8, 1.5, 2.5] {
            let pt = point(x, th);
            let c = crate::distributions::score_components(x, th).unwrap();
            // reuse the score components: xf/(abF) and xf/(b(1-F))
            let xf_abf = -c.dlnf_dsigma * th.sigma / th.beta - (1.0 - pt.t);
            let lhs = 1.0 - pt.t + xf_abf
                - c.dcdf_dsigma_over_surv * th.sigma / th.beta;
            let rhs = psi(pt.z, th.alpha).unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "x={x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn ci_degenerate_level_collapses() {
        let sample = crate::datasets::ball_bearings().complete_sample();
        let fit = fit_backfitting(&sample, &FitConfig::default()).unwrap();
        let ci = asymptotic_ci(&fit, &sample, 0.0).unwrap();
        assert!((ci[0].0 - ci[0].1).abs() < 1e-12);
        let wide = asymptotic_ci(&fit, &sample, 0.95).unwrap();
        assert!(wide[0].0 < fit.theta_hat.alpha && wide[0].1 > fit.theta_hat.alpha);
    }

    #[test]
    fn lrt_on_fixtures() {
        let cfg = FitConfig::default();
        let ball = crate::datasets::ball_bearings().complete_sample();
        let l = lrt_beta_equals_one(&ball, &cfg).unwrap();
        assert!(l.statistic >= 0.0 && l.statistic < 0.05, "stat {}", l.statistic);
        assert!(l.p_value > 0.05);

        let carbon = crate::datasets::carbon_fibres().complete_sample();
        let l = lrt_beta_equals_one(&carbon, &cfg).unwrap();
        assert!((l.statistic - 9.7006).abs() < 0.01, "stat {}", l.statistic);
        assert!(l.p_value < 0.01);
    }
}
