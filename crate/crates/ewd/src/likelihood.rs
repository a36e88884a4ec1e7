//! Type II censored log-likelihood for the EWD family, with analytic score
//! and a numerical Hessian.
//!
//! For the first `r` order statistics of `n` lifetimes,
//!
//! ```text
//! ln L = ln(n!/(n-r)!) + sum_i ln f(x_{i:n}) + (n-r) ln(1 - F(x_{r:n}))
//! ```
//!
//! The permutation constant is reported separately (`log_likelihood` vs
//! `log_likelihood_kernel`); it never moves the argmax, and published
//! "-log(likelihood)" values for these data correspond to the kernel.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::distributions::{ewd_ln_pdf, ewd_ln_surv, score_components, Theta};
use crate::error::{EwdError, Result};

/// The first `r` order statistics out of `n_total` lifetimes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoredSample {
    observed: Vec<f64>,
    n_total: usize,
}

impl CensoredSample {
    /// `observed` must be nondecreasing, strictly positive, nonempty, and
    /// no longer than `n_total`.
    pub fn new(observed: Vec<f64>, n_total: usize) -> Result<Self> {
        if observed.is_empty() {
            return Err(EwdError::InvalidData("observed sample is empty".into()));
        }
        if observed.len() > n_total {
            return Err(EwdError::InvalidData(format!(
                "r = {} exceeds n = {}",
                observed.len(),
                n_total
            )));
        }
        for w in observed.windows(2) {
            if !(w[1] >= w[0]) {
                return Err(EwdError::InvalidData(
                    "observed values must be nondecreasing".into(),
                ));
            }
        }
        if !observed.iter().all(|&x| x.is_finite() && x > 0.0) {
            return Err(EwdError::InvalidData(
                "observed values must be finite and > 0".into(),
            ));
        }
        Ok(Self { observed, n_total })
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    pub fn r(&self) -> usize {
        self.observed.len()
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    /// Largest observed order statistic `x_{r:n}`.
    pub fn censoring_point(&self) -> f64 {
        *self.observed.last().expect("nonempty")
    }

    /// The sample of `y = x^beta` with the same censoring structure.
    /// Monotone transforms commute with order-statistic selection.
    pub fn power_transform(&self, beta: f64) -> Self {
        Self {
            observed: self.observed.iter().map(|x| x.powf(beta)).collect(),
            n_total: self.n_total,
        }
    }

    /// `ln(n!/(n-r)!)`.
    pub fn permutation_constant(&self) -> f64 {
        ln_gamma(self.n_total as f64 + 1.0) - ln_gamma((self.n_total - self.r()) as f64 + 1.0)
    }
}

fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Censored log-likelihood without the permutation constant. Returns
/// `-inf` when any term underflows beyond recovery.
pub fn log_likelihood_kernel(sample: &CensoredSample, theta: Theta) -> f64 {
    let mut terms = Vec::with_capacity(sample.r() + 1);
    for &x in sample.observed() {
        match ewd_ln_pdf(x, theta) {
            Ok(v) if v.is_finite() => terms.push(v),
            _ => return f64::NEG_INFINITY,
        }
    }
    let censored = sample.n_total() - sample.r();
    if censored > 0 {
        match ewd_ln_surv(sample.censoring_point(), theta) {
            Ok(v) if v.is_finite() => terms.push(censored as f64 * v),
            _ => return f64::NEG_INFINITY,
        }
    }
    kahan_sum(terms.into_iter())
}

/// Censored log-likelihood including `ln(n!/(n-r)!)`.
pub fn log_likelihood(sample: &CensoredSample, theta: Theta) -> f64 {
    let kernel = log_likelihood_kernel(sample, theta);
    if kernel == f64::NEG_INFINITY {
        kernel
    } else {
        kernel + sample.permutation_constant()
    }
}

/// Analytic gradient of the log-likelihood in `(alpha, beta, sigma)`.
pub fn score(sample: &CensoredSample, theta: Theta) -> Result<[f64; 3]> {
    let mut a = Vec::with_capacity(sample.r());
    let mut b = Vec::with_capacity(sample.r());
    let mut s = Vec::with_capacity(sample.r());
    for &x in sample.observed() {
        let c = score_components(x, theta)?;
        a.push(c.dlnf_dalpha);
        b.push(c.dlnf_dbeta);
        s.push(c.dlnf_dsigma);
    }
    let mut grad = [
        kahan_sum(a.into_iter()),
        kahan_sum(b.into_iter()),
        kahan_sum(s.into_iter()),
    ];
    let censored = (sample.n_total() - sample.r()) as f64;
    if censored > 0.0 {
        let c = score_components(sample.censoring_point(), theta)?;
        grad[0] -= censored * c.dcdf_dalpha_over_surv;
        grad[1] -= censored * c.dcdf_dbeta_over_surv;
        grad[2] -= censored * c.dcdf_dsigma_over_surv;
    }
    Ok(grad)
}

/// Central-difference Jacobian of the analytic score, symmetrized.
///
/// Per-coordinate steps `h_i = max(1e-5 |theta_i|, 1e-8)` accommodate the
/// mixed parameter scales of real fits.
pub fn numerical_hessian(sample: &CensoredSample, theta: Theta) -> Result<[[f64; 3]; 3]> {
    let params = [theta.alpha, theta.beta, theta.sigma];
    let mut jac = [[0.0; 3]; 3];
    for j in 0..3 {
        let h = (1e-5 * params[j].abs()).max(1e-8);
        let mut hi = params;
        let mut lo = params;
        hi[j] += h;
        lo[j] -= h;
        let sp = score(sample, Theta::new(hi[0], hi[1], hi[2])?)?;
        let sm = score(sample, Theta::new(lo[0], lo[1], lo[2])?)?;
        for i in 0..3 {
            jac[i][j] = (sp[i] - sm[i]) / (2.0 * h);
        }
    }
    let mut hess = [[0.0; 3]; 3];
    let mut asym: f64 = 0.0;
    let mut norm: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            hess[i][j] = 0.5 * (jac[i][j] + jac[j][i]);
            asym = asym.max((jac[i][j] - jac[j][i]).abs());
            norm = norm.max(jac[i][j].abs());
        }
    }
    if asym > 1e-3 * norm.max(1.0) {
        return Err(EwdError::IllConditioned(format!(
            "hessian symmetrization residual {asym:.3e} exceeds 1e-3 of norm {norm:.3e}"
        )));
    }
    Ok(hess)
}
