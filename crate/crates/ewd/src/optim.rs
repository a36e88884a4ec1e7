//! Small derivative-free maximizers used by the fitting routines:
//! golden-section line search (with bracket expansion) and a bounded
//! Nelder-Mead simplex.

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Maximize a univariate function on `[lo, hi]` by golden-section search,
/// finished with one parabolic refinement step. Returns `(x, f(x))`.
pub fn golden_section_max(
    mut f: impl FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..max_iter {
        if hi - lo <= rel_tol * (lo.abs() + hi.abs()).max(1e-12) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        }
    }
    let (mut xb, mut fb) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    // parabolic polish through (lo, xb, hi)
    let (fl, fh) = (f(lo), f(hi));
    let denom = (xb - lo) * (fb - fh) - (xb - hi) * (fb - fl);
    if denom.abs() > 1e-300 {
        let num = (xb - lo).powi(2) * (fb - fh) - (xb - hi).powi(2) * (fb - fl);
        let cand = xb - 0.5 * num / denom;
        if cand > lo && cand < hi {
            let fc = f(cand);
            if fc > fb {
                xb = cand;
                fb = fc;
            }
        }
    }
    if fl > fb {
        xb = lo;
        fb = fl;
    }
    if fh > fb {
        xb = hi;
        fb = fh;
    }
    (xb, fb)
}

/// Expand geometrically from `x0` until `f` has an interior maximum, then
/// return the bracketing interval clipped to `[lo_cap, hi_cap]`.
pub fn expand_bracket(
    mut f: impl FnMut(f64) -> f64,
    x0: f64,
    lo_cap: f64,
    hi_cap: f64,
) -> (f64, f64) {
    let x0 = x0.clamp(lo_cap, hi_cap);
    let factor = 2.0;
    let mut lo = x0;
    let mut hi = x0;
    let mut f_lo = f(lo);
    let mut f_hi = f_lo;
    let f0 = f_lo;
    // walk down
    while f_lo >= f0 - 1e-12 && lo > lo_cap {
        lo = (lo / factor).max(lo_cap);
        f_lo = f(lo);
        if f_lo < f0 {
            break;
        }
    }
    // walk up
    while f_hi >= f0 - 1e-12 && hi < hi_cap {
        hi = (hi * factor).min(hi_cap);
        f_hi = f(hi);
        if f_hi < f0 {
            break;
        }
    }
    (lo, hi)
}

/// Options for the Nelder-Mead maximizer.
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_evals: usize,
    /// Initial simplex edge length per coordinate.
    pub step: f64,
    /// Restarts around the incumbent best after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            x_tol: 1e-10,
            f_tol: 1e-12,
            max_evals: 20_000,
            step: 0.25,
            restarts: 2,
        }
    }
}

/// Outcome of a simplex run.
#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Maximize `f` over the box `bounds` by Nelder-Mead with vertex clamping.
pub fn nelder_mead_max(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    bounds: &[(f64, f64)],
    opts: NelderMeadOptions,
) -> NelderMeadResult {
    assert_eq!(x0.len(), bounds.len());
    let clamp = |x: &mut Vec<f64>| {
        for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
            *v = v.clamp(lo, hi);
        }
    };
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    let mut best_x: Vec<f64> = x0.to_vec();
    clamp(&mut best_x);
    let mut best_f = eval(&best_x, &mut evals);
    let mut converged = false;

    for round in 0..=opts.restarts {
        let step = opts.step / (1 << round) as f64;
        let n = x0.len();
        // simplex around the incumbent
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((best_x.clone(), best_f));
        for i in 0..n {
            let mut v = best_x.clone();
            v[i] += if v[i] + step <= bounds[i].1 { step } else { -step };
            clamp(&mut v);
            let fv = eval(&v, &mut evals);
            simplex.push((v, fv));
        }

        loop {
            simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
            let f_spread = simplex[0].1 - simplex[n].1;
            let x_spread = (0..n)
                .map(|i| {
                    simplex
                        .iter()
                        .map(|(v, _)| v[i])
                        .fold((f64::MAX, f64::MIN), |(lo, hi), x| (lo.min(x), hi.max(x)))
                })
                .map(|(lo, hi)| hi - lo)
                .fold(0.0f64, f64::max);
            if f_spread.abs() <= opts.f_tol && x_spread <= opts.x_tol {
                converged = true;
                break;
            }
            if evals >= opts.max_evals {
                break;
            }

            let centroid: Vec<f64> = (0..n)
                .map(|i| simplex[..n].iter().map(|(v, _)| v[i]).sum::<f64>() / n as f64)
                .collect();
            let worst = simplex[n].clone();
            let point = |coef: f64| {
                let mut v: Vec<f64> = centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c + coef * (c - w))
                    .collect();
                clamp(&mut v);
                v
            };

            let xr = point(1.0);
            let fr = eval(&xr, &mut evals);
            if fr > simplex[0].1 {
                let xe = point(2.0);
                let fe = eval(&xe, &mut evals);
                simplex[n] = if fe > fr { (xe, fe) } else { (xr, fr) };
            } else if fr > simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let xc = point(-0.5);
                let fc = eval(&xc, &mut evals);
                if fc > simplex[n].1 {
                    simplex[n] = (xc, fc);
                } else {
                    // shrink toward the best vertex
                    let best = simplex[0].0.clone();
                    for entry in simplex.iter_mut().skip(1) {
                        let mut v: Vec<f64> = best
                            .iter()
                            .zip(&entry.0)
                            .map(|(b, x)| b + 0.5 * (x - b))
                            .collect();
                        clamp(&mut v);
                        let fv = eval(&v, &mut evals);
                        *entry = (v, fv);
                    }
                }
            }
        }

        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        if simplex[0].1 > best_f {
            best_f = simplex[0].1;
            best_x = simplex[0].0.clone();
        }
        if evals >= opts.max_evals {
            break;
        }
    }

    NelderMeadResult {
        x: best_x,
        f: best_f,
        evals,
        converged,
    }
}
