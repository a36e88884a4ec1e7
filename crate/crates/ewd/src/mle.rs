//! Maximum likelihood estimation under type II censoring.
//!
//! The back-fitting algorithm alternates an inner solver for the
//! exponentiated-exponential (EED) sub-model in `(alpha, lambda)` at fixed
//! `beta` (the data transform `y = x^beta` reduces the problem to EED) with
//! an outer profile-likelihood search over `beta`. The attained maximum
//! equals the joint three-parameter maximum, which `fit_direct` verifies
//! with an independent box-constrained simplex optimizer.
//!
//! The inner solver iterates the substitution
//! `alpha <- r / g1(alpha, lambda)`, `lambda <- r * g2(alpha, lambda)`;
//! the converged point zeroes the analytic EED censored score (the two
//! statements are algebraically equivalent), and a damped Newton polish on
//! the score equations runs afterwards to certify it.

use serde::{Deserialize, Serialize};

use crate::distributions::{ln_one_minus_exp, Theta};
use crate::error::{EwdError, Result};
use crate::likelihood::{log_likelihood, log_likelihood_kernel, score, CensoredSample};
use crate::optim::{golden_section_max, nelder_mead_max, NelderMeadOptions};

/// Solver configuration for the back-fitting and direct fits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    /// Outer stop tolerance on the relative parameter-change norm.
    pub epsilon_outer: f64,
    /// Inner fixed-point stop tolerance on the relative `(alpha, lambda)` delta.
    pub epsilon_inner: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub beta_init: f64,
    pub alpha_init: f64,
    /// Defaults to the mean of the transformed observed data when `None`.
    pub lambda_init: Option<f64>,
    /// Search interval for `beta` in the profile stage.
    pub beta_bracket: (f64, f64),
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            epsilon_outer: 1e-7,
            epsilon_inner: 1e-8,
            max_outer: 50,
            max_inner: 500,
            beta_init: 1.0,
            alpha_init: 1.0,
            lambda_init: None,
            beta_bracket: (0.05, 20.0),
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if self.epsilon_outer <= 0.0 || self.epsilon_inner <= 0.0 {
            return Err(EwdError::InvalidParameter("tolerances must be > 0".into()));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(EwdError::InvalidParameter(
                "iteration limits must be >= 1".into(),
            ));
        }
        if !(self.beta_bracket.0 > 0.0 && self.beta_bracket.1 > self.beta_bracket.0) {
            return Err(EwdError::InvalidParameter("empty beta bracket".into()));
        }
        if self.beta_init <= 0.0 || self.alpha_init <= 0.0 {
            return Err(EwdError::InvalidParameter(
                "initial values must be > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    Backfit,
    Direct,
    BothAgree,
}

/// One outer back-fitting iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OuterStep {
    pub beta: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub loglik_kernel: f64,
    pub inner_iterations: usize,
}

/// Converged estimates with diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: Theta,
    /// Log-likelihood without the permutation constant (the convention of
    /// published tables at 0% censoring).
    pub loglik_kernel: f64,
    /// Log-likelihood including `ln(n!/(n-r)!)`.
    pub loglik_full: f64,
    pub n_outer: usize,
    pub inner_trace: Vec<OuterStep>,
    pub converged: bool,
    /// The profile search stopped on the edge of the `beta` bracket.
    pub at_beta_bound: bool,
    pub method: FitMethod,
}

// --- EED inner solver -------------------------------------------------------

/// Per-point quantities for the EED sample `y` at scale `lambda`.
struct EedPoint {
    y: f64,
    ln_z: f64,
    /// `y e^{-y/lambda} / (1 - e^{-y/lambda})`
    y_ratio: f64,
}

fn eed_points(y_sample: &CensoredSample, lambda: f64) -> Result<Vec<EedPoint>> {
    y_sample
        .observed()
        .iter()
        .map(|&y| {
            let u = y / lambda;
            let ln_z = ln_one_minus_exp(-u);
            if ln_z == f64::NEG_INFINITY || !ln_z.is_finite() {
                return Err(EwdError::NumericalOverflow(format!(
                    "1 - e^(-y/lambda) underflows at y = {y}, lambda = {lambda}"
                )));
            }
            let y_ratio = y * (-u - ln_z).exp();
            Ok(EedPoint { y, ln_z, y_ratio })
        })
        .collect()
}

/// Censored tail factor shared by `g1`/`g2`:
/// `z_r^alpha ln z_r / (1 - z_r^alpha)` and
/// `y_r e^{-y_r/lambda} z_r^{alpha-1} / (1 - z_r^alpha)`.
fn censored_factors(pt: &EedPoint, alpha: f64) -> Result<(f64, f64)> {
    let w = alpha * pt.ln_z;
    let ln_surv = ln_one_minus_exp(w);
    if ln_surv == f64::NEG_INFINITY {
        return Err(EwdError::NumericalOverflow(
            "censored survivor underflows".into(),
        ));
    }
    let g1_term = (w - ln_surv).exp() * pt.ln_z;
    let g2_term = pt.y_ratio * (w - ln_surv).exp();
    Ok((g1_term, g2_term))
}

fn check_eed_params(alpha: f64, lambda: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite() && lambda > 0.0 && lambda.is_finite()) {
        return Err(EwdError::InvalidParameter(format!(
            "EED parameters out of domain: alpha = {alpha}, lambda = {lambda}"
        )));
    }
    Ok(())
}

fn g1_from_points(pts: &[EedPoint], alpha: f64, censored: f64) -> Result<f64> {
    let mut g1 = -pts.iter().map(|p| p.ln_z).sum::<f64>();
    if censored > 0.0 {
        let (t1, _) = censored_factors(pts.last().expect("nonempty"), alpha)?;
        g1 += censored * t1;
    }
    Ok(g1)
}

fn g2_from_points(pts: &[EedPoint], alpha: f64, censored: f64, r: f64) -> Result<f64> {
    let sum_y: f64 = pts.iter().map(|p| p.y).sum();
    let sum_ratio: f64 = pts.iter().map(|p| p.y_ratio).sum();
    let mut num = sum_y - (alpha - 1.0) * sum_ratio;
    if censored > 0.0 {
        let (_, t2) = censored_factors(pts.last().expect("nonempty"), alpha)?;
        num += censored * alpha * t2;
    }
    Ok(num / (r * r))
}

/// `g1(alpha, lambda)`: the reciprocal update for `alpha` is `r / g1`.
pub fn eed_g1(alpha: f64, lambda: f64, y_sample: &CensoredSample) -> Result<f64> {
    check_eed_params(alpha, lambda)?;
    let pts = eed_points(y_sample, lambda)?;
    let censored = (y_sample.n_total() - y_sample.r()) as f64;
    g1_from_points(&pts, alpha, censored)
}

/// `g2(alpha, lambda)`: the update for `lambda` is `r * g2`.
///
/// The middle term enters with a minus sign so that `lambda = r g2` is
/// exactly the stationarity condition of the censored EED log-likelihood
/// in `lambda` (for `alpha = 1`, complete data, `r g2` is the sample mean).
pub fn eed_g2(alpha: f64, lambda: f64, y_sample: &CensoredSample) -> Result<f64> {
    check_eed_params(alpha, lambda)?;
    let pts = eed_points(y_sample, lambda)?;
    let r = y_sample.r() as f64;
    let censored = (y_sample.n_total() - y_sample.r()) as f64;
    g2_from_points(&pts, alpha, censored, r)
}

fn score_from_points(
    pts: &[EedPoint],
    alpha: f64,
    lambda: f64,
    censored: f64,
    r: f64,
) -> Result<[f64; 2]> {
    let g1 = g1_from_points(pts, alpha, censored)?;
    let g2 = g2_from_points(pts, alpha, censored, r)?;
    Ok([
        r / alpha - g1,
        r * (r * g2 - lambda) / (lambda * lambda),
    ])
}

/// Analytic censored EED score in `(alpha, lambda)`.
pub fn eed_score(alpha: f64, lambda: f64, y_sample: &CensoredSample) -> Result<[f64; 2]> {
    check_eed_params(alpha, lambda)?;
    let pts = eed_points(y_sample, lambda)?;
    let r = y_sample.r() as f64;
    let censored = (y_sample.n_total() - y_sample.r()) as f64;
    score_from_points(&pts, alpha, lambda, censored, r)
}

/// Trace of the inner fixed-point iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InnerTrace {
    pub path: Vec<(f64, f64)>,
    pub converged: bool,
}

/// Solve the censored EED likelihood equations by damped substitution,
/// then polish with a damped Newton step on the score until the
/// (log-scale) score norm is negligible.
pub fn eed_fixed_point(
    y_sample: &CensoredSample,
    alpha0: f64,
    lambda0: f64,
    config: &FitConfig,
) -> Result<(f64, f64, InnerTrace)> {
    let r = y_sample.r() as f64;
    let censored = (y_sample.n_total() - y_sample.r()) as f64;
    let mut alpha = alpha0;
    let mut lambda = lambda0;
    let mut path = vec![(alpha, lambda)];
    let mut omega = 1.0_f64;
    let mut prev_delta = f64::INFINITY;
    let mut converged = false;

    for _ in 0..config.max_inner {
        // Sequential (Gauss-Seidel) sweep: the fresh alpha feeds the
        // lambda update. The simultaneous variant is unstable under heavy
        // censoring.
        let step = (|| -> Result<(f64, f64)> {
            check_eed_params(alpha, lambda)?;
            // One point-table computation serves both half-steps: the table
            // depends only on lambda, which is fixed within the sweep.
            let pts = eed_points(y_sample, lambda)?;
            let g1 = g1_from_points(&pts, alpha, censored)?;
            if g1 <= 0.0 {
                return Err(EwdError::NumericalOverflow(
                    "non-positive fixed-point update".into(),
                ));
            }
            let a_new = r / g1;
            check_eed_params(a_new, lambda)?;
            let g2 = g2_from_points(&pts, a_new, censored, r)?;
            if g2 <= 0.0 {
                return Err(EwdError::NumericalOverflow(
                    "non-positive fixed-point update".into(),
                ));
            }
            Ok((a_new, r * g2))
        })();
        let (a_new, l_new) = match step {
            Ok(v) => v,
            Err(_) => {
                omega *= 0.5;
                if omega < 1e-4 {
                    break;
                }
                continue;
            }
        };
        let a_next = (1.0 - omega) * alpha + omega * a_new;
        let l_next = (1.0 - omega) * lambda + omega * l_new;
        if !(a_next > 0.0 && l_next > 0.0 && a_next.is_finite() && l_next.is_finite()) {
            omega *= 0.5;
            if omega < 1e-4 {
                break;
            }
            continue;
        }
        let delta = ((a_next - alpha) / alpha.max(1e-300)).hypot((l_next - lambda) / lambda);
        if delta > 2.0 * prev_delta {
            // oscillation or divergence: retreat to averaged updates
            omega *= 0.5;
            if omega < 1e-4 {
                break;
            }
            continue;
        }
        alpha = a_next;
        lambda = l_next;
        path.push((alpha, lambda));
        prev_delta = delta;
        if delta < config.epsilon_inner {
            converged = true;
            break;
        }
    }

    // Newton polish on the score in (ln alpha, ln lambda); quadratic near
    // the root, and certifies the fixed-point/score equivalence.
    let scaled_score = |a: f64, l: f64| -> Result<[f64; 2]> {
        check_eed_params(a, l)?;
        let pts = eed_points(y_sample, l)?;
        let s = score_from_points(&pts, a, l, censored, r)?;
        Ok([a * s[0], l * s[1]])
    };
    // A converged substitution already locates the root to inner-tolerance
    // accuracy, so certify it cheaply; demand full Newton accuracy only
    // when the substitution stalled.
    let polish_gate = if converged { 1e-8 * r } else { 1e-10 * r };
    for _ in 0..40 {
        let s = match scaled_score(alpha, lambda) {
            Ok(s) => s,
            Err(_) => break,
        };
        let norm = s[0].hypot(s[1]);
        if norm < polish_gate {
            converged = true;
            break;
        }
        let (la, ll) = (alpha.ln(), lambda.ln());
        let h = 1e-7;
        let jac = (|| -> Result<[[f64; 2]; 2]> {
            // alpha perturbations leave lambda (hence the point table) fixed
            let pts = eed_points(y_sample, lambda)?;
            let score_alpha = |a: f64| -> Result<[f64; 2]> {
                let s = score_from_points(&pts, a, lambda, censored, r)?;
                Ok([a * s[0], lambda * s[1]])
            };
            let sa = score_alpha((la + h).exp())?;
            let sa2 = score_alpha((la - h).exp())?;
            let sl = scaled_score(alpha, (ll + h).exp())?;
            let sl2 = scaled_score(alpha, (ll - h).exp())?;
            Ok([
                [(sa[0] - sa2[0]) / (2.0 * h), (sl[0] - sl2[0]) / (2.0 * h)],
                [(sa[1] - sa2[1]) / (2.0 * h), (sl[1] - sl2[1]) / (2.0 * h)],
            ])
        })();
        let j = match jac {
            Ok(j) => j,
            Err(_) => break,
        };
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-30 {
            break;
        }
        let da = -(j[1][1] * s[0] - j[0][1] * s[1]) / det;
        let dl = -(-j[1][0] * s[0] + j[0][0] * s[1]) / det;
        // damped line search on the score norm
        let mut t = 1.0_f64;
        let mut accepted = false;
        for _ in 0..20 {
            let (a_try, l_try) = ((la + t * da).exp(), (ll + t * dl).exp());
            if let Ok(s_try) = scaled_score(a_try, l_try) {
                if s_try[0].hypot(s_try[1]) < norm {
                    alpha = a_try;
                    lambda = l_try;
                    path.push((alpha, lambda));
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    let score_ok = scaled_score(alpha, lambda)
        .map(|s| s[0].hypot(s[1]) < 1e-5 * r)
        .unwrap_or(false);
    if !(converged || score_ok) {
        return Err(EwdError::NonConvergence(format!(
            "EED fixed point diverged after {} steps (last alpha={alpha:.6}, lambda={lambda:.6})",
            path.len()
        )));
    }
    Ok((
        alpha,
        lambda,
        InnerTrace {
            path,
            converged: true,
        },
    ))
}

/// Profile point at fixed `beta`: the inner EED maximizer mapped back to
/// EWD coordinates and the attained (kernel) log-likelihood.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub value: f64,
    pub alpha_hat: f64,
    pub sigma_hat: f64,
    pub lambda_hat: f64,
    pub inner_iterations: usize,
}

/// Evaluate the profile log-likelihood `L1(beta)`: transform `y = x^beta`,
/// solve the EED sub-model, map `sigma = lambda^(1/beta)` back.
pub fn profile_loglik(
    beta: f64,
    sample: &CensoredSample,
    config: &FitConfig,
    warm: Option<(f64, f64)>,
) -> Result<ProfilePoint> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(EwdError::Domain(format!("beta must be > 0, got {beta}")));
    }
    let y = sample.power_transform(beta);
    let (alpha0, lambda0) = warm.unwrap_or_else(|| {
        let mean = y.observed().iter().sum::<f64>() / y.r() as f64;
        (
            config.alpha_init,
            config.lambda_init.unwrap_or(mean),
        )
    });
    let (alpha, lambda, trace) = eed_fixed_point(&y, alpha0, lambda0, config)?;
    let sigma = lambda.powf(1.0 / beta);
    let theta = Theta::new(alpha, beta, sigma)?;
    Ok(ProfilePoint {
        value: log_likelihood_kernel(sample, theta),
        alpha_hat: alpha,
        sigma_hat: sigma,
        lambda_hat: lambda,
        inner_iterations: trace.path.len(),
    })
}

/// Back-fitting fit: inner `(alpha, sigma)` maximization at fixed `beta`,
/// outer golden-section maximization of the profile likelihood over
/// `beta`, repeated until the parameter change drops below
/// `epsilon_outer`.
pub fn fit_backfitting(sample: &CensoredSample, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let (b_lo, b_hi) = config.beta_bracket;
    let warm = std::cell::RefCell::new(None::<(f64, f64)>);
    let last_point = std::cell::RefCell::new(None::<(f64, ProfilePoint)>);

    let eval = |beta: f64| -> f64 {
        let w = *warm.borrow();
        let point = profile_loglik(beta, sample, config, w)
            .or_else(|_| profile_loglik(beta, sample, config, None));
        match point {
            Ok(p) => {
                *warm.borrow_mut() = Some((p.alpha_hat, p.lambda_hat));
                let better = last_point
                    .borrow()
                    .map(|(_, q)| p.value > q.value)
                    .unwrap_or(true);
                if better {
                    *last_point.borrow_mut() = Some((beta, p));
                }
                p.value
            }
            Err(_) => f64::NEG_INFINITY,
        }
    };

    // Coarse log-spaced pre-scan guards against multimodal profiles.
    let n_scan = 17;
    let mut best_beta = config.beta_init.clamp(b_lo, b_hi);
    let mut best_val = eval(best_beta);
    let mut grid = Vec::with_capacity(n_scan);
    for i in 0..n_scan {
        let t = i as f64 / (n_scan - 1) as f64;
        let beta = (b_lo.ln() + t * (b_hi.ln() - b_lo.ln())).exp();
        let v = eval(beta);
        grid.push((beta, v));
        if v > best_val {
            best_val = v;
            best_beta = beta;
        }
    }
    let idx = grid
        .iter()
        .position(|&(b, _)| (b - best_beta).abs() < 1e-12)
        .unwrap_or(0);
    let mut lo = if idx == 0 { b_lo } else { grid[idx - 1].0 };
    let mut hi = if idx + 1 >= grid.len() { b_hi } else { grid[idx + 1].0 };
    if best_beta <= lo {
        lo = b_lo;
    }
    if best_beta >= hi {
        hi = b_hi;
    }

    let mut trace = Vec::new();
    let mut prev: Option<Theta> = None;
    let mut converged = false;
    let mut n_outer = 0;
    let mut beta;

    for k in 0..config.max_outer {
        n_outer = k + 1;
        let (b_best, _) = golden_section_max(&eval, lo, hi, 1e-9, 200);
        beta = b_best;
        let (_, point) = last_point
            .borrow()
            .ok_or_else(|| EwdError::NonConvergence("no profile point succeeded".into()))?;
        // re-evaluate exactly at the returned beta
        let point = profile_loglik(beta, sample, config, Some((point.alpha_hat, point.lambda_hat)))?;
        let theta = Theta::new(point.alpha_hat, beta, point.sigma_hat)?;
        trace.push(OuterStep {
            beta,
            alpha: point.alpha_hat,
            lambda: point.lambda_hat,
            sigma: point.sigma_hat,
            loglik_kernel: point.value,
            inner_iterations: point.inner_iterations,
        });
        if let Some(p) = prev {
            let delta = ((theta.alpha - p.alpha) / p.alpha)
                .hypot((theta.beta - p.beta) / p.beta)
                .hypot((theta.sigma - p.sigma) / p.sigma);
            if delta < config.epsilon_outer {
                converged = true;
                prev = Some(theta);
                break;
            }
        }
        prev = Some(theta);
        // shrink the search window around the incumbent
        lo = (beta / 1.6).max(b_lo);
        hi = (beta * 1.6).min(b_hi);
    }

    let theta_hat = prev.expect("at least one outer iteration");
    let at_beta_bound = (theta_hat.beta - b_lo).abs() < 1e-9 * b_lo.max(1.0)
        || (theta_hat.beta - b_hi).abs() < 1e-9 * b_hi;
    // interior optima must zero the score; boundary optima are flagged
    if converged && !at_beta_bound {
        if let Ok(g) = score(sample, theta_hat) {
            let scaled = (g[0] * theta_hat.alpha)
                .hypot(g[1] * theta_hat.beta)
                .hypot(g[2] * theta_hat.sigma);
            if scaled > 1e-3 * sample.r() as f64 {
                converged = false;
            }
        }
    }
    Ok(FitResult {
        theta_hat,
        loglik_kernel: log_likelihood_kernel(sample, theta_hat),
        loglik_full: log_likelihood(sample, theta_hat),
        n_outer,
        inner_trace: trace,
        converged,
        at_beta_bound,
        method: FitMethod::Backfit,
    })
}

/// Direct three-parameter fit: bounded Nelder-Mead over
/// `(ln alpha, ln beta, ln sigma)` from several neutral starts. Used to
/// validate the back-fitting maximum.
pub fn fit_direct(sample: &CensoredSample, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let mean = sample.observed().iter().sum::<f64>() / sample.r() as f64;
    let bounds = [
        ((1e-6f64).ln(), (1e6f64).ln()),
        (config.beta_bracket.0.ln(), config.beta_bracket.1.ln()),
        ((mean * 1e-4).ln(), (mean * 1e4).ln()),
    ];
    let mut objective = |x: &[f64]| {
        match Theta::new(x[0].exp(), x[1].exp(), x[2].exp()) {
            Ok(theta) => log_likelihood_kernel(sample, theta),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let mut best: Option<crate::optim::NelderMeadResult> = None;
    for beta0 in [0.5, config.beta_init, 2.0] {
        let beta0 = beta0.clamp(config.beta_bracket.0, config.beta_bracket.1);
        let x0 = [0.0, beta0.ln(), mean.ln()];
        let r = nelder_mead_max(&mut objective, &x0, &bounds, NelderMeadOptions::default());
        if best.as_ref().map(|b| r.f > b.f).unwrap_or(true) {
            best = Some(r);
        }
    }
    let best = best.expect("at least one start");
    if best.f == f64::NEG_INFINITY {
        return Err(EwdError::NonConvergence(
            "direct optimizer found no finite likelihood".into(),
        ));
    }
    let theta_hat = Theta::new(best.x[0].exp(), best.x[1].exp(), best.x[2].exp())?;
    let at_beta_bound = (best.x[1] - bounds[1].0).abs() < 1e-9
        || (best.x[1] - bounds[1].1).abs() < 1e-9;
    Ok(FitResult {
        theta_hat,
        loglik_kernel: best.f,
        loglik_full: log_likelihood(sample, theta_hat),
        n_outer: best.evals,
        inner_trace: Vec::new(),
        converged: best.converged,
        at_beta_bound,
        method: FitMethod::Direct,
    })
}

/// EED fit (`beta` frozen at 1) via the inner fixed-point solver, reported
/// in EWD coordinates.
pub fn fit_eed(sample: &CensoredSample, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let point = profile_loglik(1.0, sample, config, None)?;
    let theta_hat = Theta::new(point.alpha_hat, 1.0, point.sigma_hat)?;
    Ok(FitResult {
        theta_hat,
        loglik_kernel: point.value,
        loglik_full: log_likelihood(sample, theta_hat),
        n_outer: 1,
        inner_trace: vec![OuterStep {
            beta: 1.0,
            alpha: point.alpha_hat,
            lambda: point.lambda_hat,
            sigma: point.sigma_hat,
            loglik_kernel: point.value,
            inner_iterations: point.inner_iterations,
        }],
        converged: true,
        at_beta_bound: false,
        method: FitMethod::Backfit,
    })
}
