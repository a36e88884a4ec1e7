//! The exponentiated-Weibull (EWD) and exponentiated-exponential (EED)
//! families: density, CDF, quantile, hazard, sampling and the analytic
//! score components shared by the likelihood and Fisher modules.
//!
//! All tail quantities are computed in log space (`ln_1p`/`exp_m1`) so that
//! `ln(1 - F)` stays accurate when `(x/sigma)^beta` is very large or tiny.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EwdError, Result};

/// Parameter triple of the EWD family. All fields strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    /// Outer shape parameter (the exponent on the bracket).
    pub alpha: f64,
    /// Weibull shape parameter.
    pub beta: f64,
    /// Scale parameter, in time units.
    pub sigma: f64,
}

impl Theta {
    pub fn new(alpha: f64, beta: f64, sigma: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("sigma", sigma)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(EwdError::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(Self { alpha, beta, sigma })
    }
}

/// EED parameters (the `beta = 1` sub-family): shape `alpha`, scale `lambda`.
///
/// Under the power transform `y = x^beta` an EWD sample maps to an EED
/// sample with `lambda = sigma^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EedTheta {
    pub alpha: f64,
    pub lambda: f64,
}

impl EedTheta {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("lambda", lambda)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(EwdError::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(Self { alpha, lambda })
    }

    /// The equivalent EWD parameters (`beta = 1`, `sigma = lambda`).
    pub fn as_ewd(self) -> Theta {
        Theta {
            alpha: self.alpha,
            beta: 1.0,
            sigma: self.lambda,
        }
    }
}

/// `ln(1 - e^w)` for `w <= 0`, stable at both ends.
pub(crate) fn ln_one_minus_exp(w: f64) -> f64 {
    debug_assert!(w <= 0.0);
    if w > -std::f64::consts::LN_2 {
        (-w.exp_m1()).ln()
    } else {
        (-w.exp()).ln_1p()
    }
}

/// Intermediate quantities at a point `x > 0`: `t = (x/sigma)^beta`,
/// `z = 1 - e^{-t}` and their logs.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Point {
    pub t: f64,
    pub ln_t: f64,
    pub z: f64,
    pub ln_z: f64,
}

pub(crate) fn point(x: f64, theta: Theta) -> Point {
    let ln_xs = (x / theta.sigma).ln();
    let ln_t = theta.beta * ln_xs;
    let t = ln_t.exp();
    // z = 1 - e^{-t}
    let z = -(-t).exp_m1();
    let ln_z = ln_one_minus_exp(-t);
    Point { t, ln_t, z, ln_z }
}

/// `ln F(x; theta)`.
pub fn ewd_ln_cdf(x: f64, theta: Theta) -> Result<f64> {
    if x < 0.0 || !x.is_finite() {
        return Err(EwdError::Domain(format!("x must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(theta.alpha * point(x, theta).ln_z)
}

/// CDF `F(x; theta) = [1 - exp(-(x/sigma)^beta)]^alpha`.
pub fn ewd_cdf(x: f64, theta: Theta) -> Result<f64> {
    Ok(ewd_ln_cdf(x, theta)?.exp())
}

/// `ln(1 - F(x; theta))`, computed without forming `F`.
pub fn ewd_ln_surv(x: f64, theta: Theta) -> Result<f64> {
    if x < 0.0 || !x.is_finite() {
        return Err(EwdError::Domain(format!("x must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let p = point(x, theta);
    if p.ln_z == 0.0 && p.t > 0.0 {
        // e^{-t} underflowed, so ln z rounded to -0. Asymptotically
        // 1 - z^alpha = alpha e^{-t} (1 + O(e^{-t})), whose log is still
        // representable long after e^{-t} itself is not.
        return Ok(theta.alpha.ln() - p.t);
    }
    Ok(ln_one_minus_exp(theta.alpha * p.ln_z))
}

/// `ln f(x; theta)` for `x > 0`.
pub fn ewd_ln_pdf(x: f64, theta: Theta) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(EwdError::Domain(format!("x must be > 0, got {x}")));
    }
    let p = point(x, theta);
    let ln_xs = (x / theta.sigma).ln();
    Ok(theta.alpha.ln() + theta.beta.ln() - theta.sigma.ln()
        + (theta.beta - 1.0) * ln_xs
        - p.t
        + (theta.alpha - 1.0) * p.ln_z)
}

/// Density `f = dF/dx = (alpha beta / sigma)(x/sigma)^(beta-1)
/// e^(-(x/sigma)^beta) [1 - e^(-(x/sigma)^beta)]^(alpha-1)`.
pub fn ewd_pdf(x: f64, theta: Theta) -> Result<f64> {
    Ok(ewd_ln_pdf(x, theta)?.exp())
}

/// The limit of the density as `x -> 0+`: `0` when `alpha*beta > 1`,
/// `1/sigma` when `alpha*beta = 1`, `+inf` when `alpha*beta < 1`.
///
/// `ewd_pdf` itself rejects `x <= 0`; this is the opt-in extended value.
pub fn ewd_pdf_limit_at_zero(theta: Theta) -> f64 {
    let ab = theta.alpha * theta.beta;
    if ab > 1.0 {
        0.0
    } else if ab == 1.0 {
        ab / theta.sigma
    } else {
        f64::INFINITY
    }
}

/// Quantile `sigma * (-ln(1 - u^(1/alpha)))^(1/beta)` for `u` in `(0,1)`.
pub fn ewd_quantile(u: f64, theta: Theta) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(EwdError::Domain(format!("u must lie in (0,1), got {u}")));
    }
    // v = u^{1/alpha}; -ln(1 - v) via ln_1p for accuracy when v is small.
    let ln_v = u.ln() / theta.alpha;
    let v = ln_v.exp();
    let t = if v < 0.5 {
        -(-v).ln_1p()
    } else {
        -ln_one_minus_exp(ln_v)
    };
    Ok(theta.sigma * t.powf(1.0 / theta.beta))
}

/// Hazard `h(x) = f(x) / (1 - F(x))`, evaluated via logarithms.
pub fn ewd_hazard(x: f64, theta: Theta) -> Result<f64> {
    let ln_surv = ewd_ln_surv(x, theta)?;
    if ln_surv == f64::NEG_INFINITY {
        return Err(EwdError::NumericalOverflow(format!(
            "1 - F underflows at x = {x}"
        )));
    }
    Ok((ewd_ln_pdf(x, theta)? - ln_surv).exp())
}

/// `n` i.i.d. draws by inverse-CDF sampling; deterministic given `seed`.
pub fn ewd_sample(theta: Theta, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(EwdError::Domain("sample size must be >= 1".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u: f64 = rng.random();
        if u > 0.0 && u < 1.0 {
            out.push(ewd_quantile(u, theta)?);
        }
    }
    Ok(out)
}

/// The six analytic score components at a point: derivatives of `ln f` and
/// the censoring factors `F'/(1-F)` with respect to `alpha`, `beta`, `sigma`.
#[derive(Debug, Clone, Copy)]
pub struct ScoreComponents {
    pub dlnf_dalpha: f64,
    pub dcdf_dalpha_over_surv: f64,
    pub dlnf_dbeta: f64,
    pub dcdf_dbeta_over_surv: f64,
    pub dlnf_dsigma: f64,
    pub dcdf_dsigma_over_surv: f64,
}

pub fn score_components(x: f64, theta: Theta) -> Result<ScoreComponents> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(EwdError::Domain(format!("x must be > 0, got {x}")));
    }
    let Theta { alpha, beta, sigma } = theta;
    let p = point(x, theta);
    // 1 - F = 1 - z^alpha, kept in log space.
    let ln_surv = ln_one_minus_exp(alpha * p.ln_z);
    if ln_surv == f64::NEG_INFINITY || p.ln_z == f64::NEG_INFINITY {
        return Err(EwdError::NumericalOverflow(format!(
            "F is 0 or 1 at machine precision at x = {x}"
        )));
    }
    let surv = ln_surv.exp();
    let cdf = (alpha * p.ln_z).exp();

    // x f / (alpha beta F) = (1-z) t / z  and  x f / (beta (1-F)) = alpha z^{alpha-1} (1-z) t / (1-z^alpha)
    let one_minus_z = (-p.t).exp();
    let xf_over_abf = one_minus_z * p.t / p.z;
    let xf_over_b_surv = alpha * ((alpha - 1.0) * p.ln_z - p.t - ln_surv).exp() * p.t;

    let dlnf_dalpha = 1.0 / alpha + p.ln_z;
    let dcdf_dalpha_over_surv = cdf * p.ln_z / surv;
    let dlnf_dbeta = (1.0 + p.ln_t * (1.0 - p.t + (alpha - 1.0) * xf_over_abf)) / beta;
    let dcdf_dbeta_over_surv = p.ln_t / beta * xf_over_b_surv;
    let dlnf_dsigma = -beta / sigma * (1.0 - p.t + (alpha - 1.0) * xf_over_abf);
    let dcdf_dsigma_over_surv = -beta / sigma * xf_over_b_surv;
    Ok(ScoreComponents {
        dlnf_dalpha,
        dcdf_dalpha_over_surv,
        dlnf_dbeta,
        dcdf_dbeta_over_surv,
        dlnf_dsigma,
        dcdf_dsigma_over_surv,
    })
}

/// The auxiliary function
/// `psi(z; alpha) = 1 + ln(1-z) [1 + ((1-z)/z)(1 - alpha/(1 - z^alpha))]`
/// appearing in the Fisher-information integrands. `psi(z; 1) = 1`.
pub fn psi(z: f64, alpha: f64) -> Result<f64> {
    if !(z > 0.0 && z < 1.0) {
        return Err(EwdError::Domain(format!("z must lie in (0,1), got {z}")));
    }
    // 1 - z^alpha via exp_m1 to keep accuracy for z near 0 or 1.
    let one_minus_za = -(alpha * z.ln()).exp_m1();
    Ok(1.0 + (-z).ln_1p() * (1.0 + ((1.0 - z) / z) * (1.0 - alpha / one_minus_za)))
}

// --- EED convenience wrappers -----------------------------------------------

pub fn eed_cdf(y: f64, theta: EedTheta) -> Result<f64> {
    ewd_cdf(y, theta.as_ewd())
}

pub fn eed_ln_pdf(y: f64, theta: EedTheta) -> Result<f64> {
    ewd_ln_pdf(y, theta.as_ewd())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta(a: f64, b: f64, s: f64) -> Theta {
        Theta::new(a, b, s).unwrap()
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(Theta::new(0.0, 1.0, 1.0).is_err());
        assert!(Theta::new(1.0, -2.0, 1.0).is_err());
        assert!(Theta::new(1.0, 1.0, f64::NAN).is_err());
        assert!(EedTheta::new(1.0, 0.0).is_err());
    }

    #[test]
    fn cdf_exponential_subfamily() {
        let th = theta(1.0, 1.0, 1.0);
        let x = std::f64::consts::LN_2;
        assert!((ewd_cdf(x, th).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(ewd_cdf(0.0, theta(2.0, 1.5, 3.0)).unwrap(), 0.0);
        assert!(ewd_cdf(-1.0, th).is_err());
    }

    #[test]
    fn cdf_closed_form_oracle() {
        // frozen from a 50-digit evaluation of the closed form
        let v = ewd_cdf(2.0, theta(2.0, 1.5, 1.0)).unwrap();
        assert!((v - 0.885281996152733726).abs() < 1e-15);
    }

    #[test]
    fn pdf_subfamilies() {
        assert!((ewd_pdf(1.0, theta(1.0, 1.0, 1.0)).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        // Rayleigh: f(1) = 2 e^{-1}
        assert!((ewd_pdf(1.0, theta(1.0, 2.0, 1.0)).unwrap() - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!(ewd_pdf(0.0, theta(1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn pdf_matches_cdf_derivative() {
        // central difference with Richardson extrapolation at x = 0.7
        let th = theta(3.0, 0.5, 2.0);
        let x = 0.7;
        let d = |h: f64| {
            (ewd_cdf(x + h, th).unwrap() - ewd_cdf(x - h, th).unwrap()) / (2.0 * h)
        };
        let (d1, d2) = (d(1e-4), d(5e-5));
        let extrap = (4.0 * d2 - d1) / 3.0;
        let f = ewd_pdf(x, th).unwrap();
        assert!((f - extrap).abs() / f < 1e-8, "f={f} extrap={extrap}");
        // and the frozen high-precision value
        assert!((f - 0.139914042851099728).abs() < 1e-14);
    }

    #[test]
    fn pdf_limit_at_zero() {
        assert_eq!(ewd_pdf_limit_at_zero(theta(2.0, 2.0, 1.0)), 0.0);
        assert_eq!(ewd_pdf_limit_at_zero(theta(1.0, 1.0, 2.0)), 0.5);
        assert_eq!(ewd_pdf_limit_at_zero(theta(0.5, 0.8, 1.0)), f64::INFINITY);
    }

    #[test]
    fn quantile_round_trip() {
        let th = theta(2.0, 0.8, 1.5);
        let u = ewd_cdf(1.3, th).unwrap();
        assert!((ewd_quantile(u, th).unwrap() - 1.3).abs() < 1e-12);
        let ln2 = ewd_quantile(0.5, theta(1.0, 1.0, 1.0)).unwrap();
        assert!((ln2 - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(ewd_quantile(0.0, th).is_err());
        assert!(ewd_quantile(1.0, th).is_err());
    }

    #[test]
    fn quantile_table1_eed_fit() {
        // frozen closed-form value at the published EED fit of the
        // ball-bearings data
        let th = theta(5.2707, 1.0, 31.0035);
        let q = ewd_quantile(0.9, th).unwrap();
        assert!((q - 121.611501113408291).abs() < 1e-10);
    }

    #[test]
    fn hazard_subfamilies_and_oracle() {
        for x in [0.1, 1.0, 7.3] {
            assert!((ewd_hazard(x, theta(1.0, 1.0, 2.0)).unwrap() - 0.5).abs() < 1e-13);
        }
        // Weibull hazard beta x^{beta-1} / sigma^beta
        assert!((ewd_hazard(1.0, theta(1.0, 2.0, 1.0)).unwrap() - 2.0).abs() < 1e-13);
        let h = ewd_hazard(0.5, theta(0.5, 0.8, 1.0)).unwrap();
        assert!((h - 1.154600742037560676).abs() < 1e-13);
    }

    #[test]
    fn hazard_deep_tail_does_not_overflow() {
        // (x/sigma)^beta = 900: 1 - F underflows in direct arithmetic but
        // the log-space hazard stays finite.
        let th = theta(2.0, 2.0, 1.0);
        let h = ewd_hazard(30.0, th).unwrap();
        assert!(h.is_finite() && h > 0.0);
    }

    #[test]
    fn sampling_moments_and_determinism() {
        let th = theta(1.0, 1.0, 1.0);
        assert!(ewd_sample(th, 0, 1).is_err());
        let n = 100_000;
        let xs = ewd_sample(th, n, 42).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt());
        assert_eq!(xs, ewd_sample(th, n, 42).unwrap());
    }

    #[test]
    fn sampling_ks_band() {
        // empirical CDF within the 99% Kolmogorov-Smirnov band
        let th = theta(2.0, 1.5, 1.0);
        let n = 100_000;
        let mut xs = ewd_sample(th, n, 7).unwrap();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let f = ewd_cdf(x, th).unwrap();
            d = d.max((f - i as f64 / n as f64).abs());
            d = d.max(((i + 1) as f64 / n as f64 - f).abs());
        }
        let crit = 1.628 / (n as f64).sqrt();
        assert!(d < crit, "KS statistic {d} exceeds 99% critical value {crit}");
    }

    #[test]
    fn score_component_identities() {
        // f'_alpha/f at alpha=1 equals 1 + ln F
        let th = theta(1.0, 1.7, 2.3);
        let x = 1.1;
        let c = score_components(x, th).unwrap();
        let lnf_cdf = ewd_ln_cdf(x, th).unwrap();
        assert!((c.dlnf_dalpha - (1.0 + lnf_cdf)).abs() < 1e-13);
        // F'_sigma/(1-F) at (x=1, theta=(1,1,1)) equals -1 exactly:
        // d/dsigma [1 - e^{-x/sigma}] = -(x/sigma^2) e^{-x/sigma}
        let c = score_components(1.0, theta(1.0, 1.0, 1.0)).unwrap();
        assert!((c.dcdf_dsigma_over_surv + 1.0).abs() < 1e-13);
    }

    #[test]
    fn score_components_match_finite_differences() {
        let th = theta(2.5, 0.7, 1.3);
        let x = 0.9;
        let c = score_components(x, th).unwrap();
        let h = 1e-6;
        let fd_lnf = |i: usize| {
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
            (ewd_ln_pdf(x, hi).unwrap() - ewd_ln_pdf(x, lo).unwrap()) / (2.0 * h)
        };
        let surv = ewd_ln_surv(x, th).unwrap().exp();
        let fd_surv = |i: usize| {
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
            (ewd_cdf(x, hi).unwrap() - ewd_cdf(x, lo).unwrap()) / (2.0 * h) / surv
        };
        for (got, want) in [
            (c.dlnf_dalpha, fd_lnf(0)),
            (c.dlnf_dbeta, fd_lnf(1)),
            (c.dlnf_dsigma, fd_lnf(2)),
            (c.dcdf_dalpha_over_surv, fd_surv(0)),
            (c.dcdf_dbeta_over_surv, fd_surv(1)),
            (c.dcdf_dsigma_over_surv, fd_surv(2)),
        ] {
            assert!(
                (got - want).abs() <= 1e-6 * want.abs().max(1.0),
                "component {got} vs finite difference {want}"
            );
        }
    }

    #[test]
    fn psi_identity_and_oracle() {
        assert!((psi(0.3, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((psi(0.99, 1.0).unwrap() - 1.0).abs() < 1e-12);
        // frozen: 1 + ln(0.5) [1 + (1 - 2/(1 - 0.25))]
        assert!((psi(0.5, 2.0).unwrap() - 1.462098120373296873).abs() < 1e-14);
        assert!(psi(0.0, 2.0).is_err());
        assert!(psi(1.0, 2.0).is_err());
    }

    #[test]
    fn scale_equivariance() {
        let th = theta(2.3, 0.9, 4.2);
        let unit = theta(2.3, 0.9, 1.0);
        for x in [0.3, 1.0, 5.5, 20.0] {
            let a = ewd_cdf(x, th).unwrap();
            let b = ewd_cdf(x / th.sigma, unit).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn power_transform_to_eed() {
        let th = theta(1.7, 2.2, 1.4);
        let eed = EedTheta::new(th.alpha, th.sigma.powf(th.beta)).unwrap();
        for x in [0.2, 0.9, 2.5] {
            let a = ewd_cdf(x, th).unwrap();
            let b = eed_cdf(x.powf(th.beta), eed).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }
}
