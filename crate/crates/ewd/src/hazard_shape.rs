//! Hazard-shape classification from the shape parameters `(alpha, beta)`.
//!
//! The first quadrant splits into four regions along the curves `beta = 1`
//! and `alpha * beta = 1`:
//!
//! - region I   (`beta >= 1`, `alpha*beta >= 1`): monotone increasing;
//! - region II  (`beta <= 1`, `alpha*beta <= 1`): monotone decreasing;
//! - region III (`beta < 1`,  `alpha*beta > 1`): unimodal;
//! - region IV  (`beta > 1`,  `alpha*beta < 1`): bathtub (nominal).
//!
//! The sign of the hazard derivative at `x = sigma (ln z)^(1/beta)` equals
//! the sign of `s(z)` below, which `sign_scan` evaluates on a log-spaced
//! grid as the empirical check. In region IV `s(z)` can keep one sign for
//! some parameters; a scan finding no `- -> +` change downgrades the label
//! to the observed monotone shape with a warning flag.

use serde::{Deserialize, Serialize};

use crate::distributions::{ewd_hazard, Theta};
use crate::error::{EwdError, Result};

const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    I,
    II,
    III,
    IV,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HazardShape {
    MonotoneIncreasing,
    MonotoneDecreasing,
    Unimodal,
    Bathtub,
    Constant,
    Boundary,
}

/// Classification of `(alpha, beta)` into a parameter region and shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeRegion {
    pub label: Region,
    pub shape: HazardShape,
    /// For boundary points, the monotone shape of the adjacent closed region.
    pub adjacent: Option<HazardShape>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignChange {
    PosToNeg,
    NegToPos,
}

/// Evaluations of `s(z)` on a grid with the detected sign changes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignScan {
    pub z_grid: Vec<f64>,
    pub s_values: Vec<f64>,
    /// `(z_lo, z_hi, direction)` per sign change between consecutive nodes.
    pub sign_changes: Vec<(f64, f64, SignChange)>,
}

/// Classification plus the empirical scan evidence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeReport {
    pub region: ShapeRegion,
    /// Shape after reconciling the nominal label with the scan.
    pub observed_shape: HazardShape,
    /// Set when a region IV scan found no `- -> +` change and the label was
    /// downgraded to the observed monotone shape.
    pub downgraded: bool,
    pub scan: SignScan,
}

/// The sign function of the hazard derivative,
/// `s(z) = beta z ln z [(z-1)^alpha + (alpha-z) z^(alpha-1)]
///        + (beta-1)(z-1) [z^alpha - (z-1)^alpha]`, for `z > 1`.
pub fn s_of_z(z: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(z > 1.0) {
        return Err(EwdError::Domain(format!("z must be > 1, got {z}")));
    }
    let zm1 = z - 1.0;
    let first = beta * z * z.ln() * (zm1.powf(alpha) + (alpha - z) * z.powf(alpha - 1.0));
    let second = (beta - 1.0) * zm1 * (z.powf(alpha) - zm1.powf(alpha));
    Ok(first + second)
}

/// Region label and nominal shape from `(alpha, beta)` alone. The scale
/// parameter plays no role.
pub fn classify_region(alpha: f64, beta: f64) -> Result<ShapeRegion> {
    if !(alpha > 0.0 && alpha.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
        return Err(EwdError::InvalidParameter(format!(
            "alpha and beta must be finite and > 0, got ({alpha}, {beta})"
        )));
    }
    let ab = alpha * beta;
    let on_beta = (beta - 1.0).abs() < BOUNDARY_TOL;
    let on_ab = (ab - 1.0).abs() < BOUNDARY_TOL;
    if on_beta || on_ab {
        let (label, adjacent) = if on_beta && on_ab {
            (Region::I, HazardShape::Constant)
        } else if beta >= 1.0 && ab >= 1.0 - BOUNDARY_TOL {
            (Region::I, HazardShape::MonotoneIncreasing)
        } else {
            (Region::II, HazardShape::MonotoneDecreasing)
        };
        return Ok(ShapeRegion {
            label,
            shape: HazardShape::Boundary,
            adjacent: Some(adjacent),
        });
    }
    let (label, shape) = if beta >= 1.0 && ab >= 1.0 {
        (Region::I, HazardShape::MonotoneIncreasing)
    } else if beta <= 1.0 && ab <= 1.0 {
        (Region::II, HazardShape::MonotoneDecreasing)
    } else if beta < 1.0 {
        (Region::III, HazardShape::Unimodal)
    } else {
        (Region::IV, HazardShape::Bathtub)
    };
    Ok(ShapeRegion {
        label,
        shape,
        adjacent: None,
    })
}

/// Default scan grid: log-spaced over (1, 1e6] with 4096 points; sign
/// changes cluster near `z = 1` for extreme `beta`.
pub const DEFAULT_Z_MAX: f64 = 1e6;
pub const DEFAULT_SCAN_POINTS: usize = 4096;

/// Evaluate `s(z)` on a log-spaced grid over `(1, z_max]` and record the
/// sign changes between consecutive nodes. Values below an absolute floor
/// of `1e-12` count as zero and never produce a change.
pub fn sign_scan(alpha: f64, beta: f64, z_max: f64, n_points: usize) -> Result<SignScan> {
    if !(z_max > 1.0) {
        return Err(EwdError::Domain(format!("z_max must be > 1, got {z_max}")));
    }
    if n_points < 2 {
        return Err(EwdError::Domain("n_points must be >= 2".into()));
    }
    let ln_max = z_max.ln();
    let mut z_grid = Vec::with_capacity(n_points);
    let mut s_values = Vec::with_capacity(n_points);
    for i in 1..=n_points {
        let z = (ln_max * i as f64 / n_points as f64).exp();
        z_grid.push(z);
        s_values.push(s_of_z(z, alpha, beta)?);
    }
    let mut sign_changes = Vec::new();
    let sign = |v: f64| {
        if v.abs() < 1e-12 || !v.is_finite() {
            0i8
        } else if v > 0.0 {
            1
        } else {
            -1
        }
    };
    let mut last: Option<(usize, i8)> = None;
    for (i, &v) in s_values.iter().enumerate() {
        let s = sign(v);
        if s == 0 {
            continue;
        }
        if let Some((j, prev)) = last {
            if prev != s {
                let dir = if prev > 0 {
                    SignChange::PosToNeg
                } else {
                    SignChange::NegToPos
                };
                sign_changes.push((z_grid[j], z_grid[i], dir));
            }
        }
        last = Some((i, s));
    }
    Ok(SignScan {
        z_grid,
        s_values,
        sign_changes,
    })
}

/// Classify and back the label with a default sign scan. Region IV labels
/// are downgraded to the observed monotone shape when the scan shows no
/// `- -> +` change.
pub fn shape_report(alpha: f64, beta: f64) -> Result<ShapeReport> {
    let region = classify_region(alpha, beta)?;
    let scan = sign_scan(alpha, beta, DEFAULT_Z_MAX, DEFAULT_SCAN_POINTS)?;
    let mut observed = region.shape;
    let mut downgraded = false;
    if region.label == Region::IV
        && region.shape == HazardShape::Bathtub
        && !scan
            .sign_changes
            .iter()
            .any(|&(_, _, d)| d == SignChange::NegToPos)
    {
        observed = if scan.s_values.iter().any(|&v| v > 1e-12) {
            HazardShape::MonotoneIncreasing
        } else {
            HazardShape::MonotoneDecreasing
        };
        downgraded = true;
    }
    Ok(ShapeReport {
        region,
        observed_shape: observed,
        downgraded,
        scan,
    })
}

/// Hazard curve samples `(x, h(x))` on a uniform grid over `(0, x_max]`.
pub fn hazard_curve(theta: Theta, x_max: f64, n_points: usize) -> Result<Vec<(f64, f64)>> {
    if !(x_max > 0.0) {
        return Err(EwdError::Domain(format!("x_max must be > 0, got {x_max}")));
    }
    if n_points < 1 {
        return Err(EwdError::Domain("n_points must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(n_points);
    for i in 1..=n_points {
        let x = x_max * i as f64 / n_points as f64;
        out.push((x, ewd_hazard(x, theta)?));
    }
    Ok(out)
}
