//! Temperature sweeps of the lower bound and entanglement-threshold search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::ssi::{ssi_parameter_with, SsiResult};
use crate::thermal::{thermal_moments, XxzParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

/// A temperature grid for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub params: XxzParams,
    pub t_min: f64,
    pub t_max: f64,
    pub steps: usize,
    pub scale: Scale,
    /// Prepend the `T = 0` ground-state limit.
    pub ground: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_max.is_finite() && self.t_max >= self.t_min) {
            return domain(format!(
                "temperature range [{}, {}] must satisfy 0 < T_min <= T_max",
                self.t_min, self.t_max
            ));
        }
        if self.steps == 0 {
            return domain("a sweep needs at least one step");
        }
        Ok(())
    }

    /// Grid points in increasing order (`0.0` first when `ground` is set).
    pub fn temperatures(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let mut out = Vec::with_capacity(self.steps + 1);
        if self.ground {
            out.push(0.0);
        }
        if self.steps == 1 {
            out.push(self.t_min);
            return Ok(out);
        }
        let last = (self.steps - 1) as f64;
        for i in 0..self.steps {
            let f = i as f64 / last;
            out.push(match self.scale {
                Scale::Linear => self.t_min + f * (self.t_max - self.t_min),
                Scale::Log => (self.t_min.ln() + f * (self.t_max / self.t_min).ln()).exp(),
            });
        }
        Ok(out)
    }
}

/// One row of a lower-bound sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerRow {
    pub temperature: f64,
    pub log_z: f64,
    pub jz: f64,
    pub jz2: f64,
    pub jx2: f64,
    pub ssi: SsiResult,
}

impl LowerRow {
    pub fn lower_bound(&self) -> f64 {
        self.ssi.lower_bound
    }
}

/// Lower bound of the Gibbs state at `temperature` (`0.0` is the ground limit),
/// normalized over remainders sharing the Hamiltonian's symmetry.
pub fn lower_point(params: &XxzParams, temperature: f64) -> Result<LowerRow> {
    let (log_z, m) = thermal_moments(params, temperature)?;
    Ok(LowerRow {
        temperature,
        log_z,
        jz: m.mean[2],
        jz2: m.second[2][2],
        jx2: m.second[0][0],
        ssi: ssi_parameter_with(&m, params.symmetry()),
    })
}

/// Evaluates every grid point in parallel; rows come back in grid order.
pub fn lower_sweep(spec: &SweepSpec) -> Result<Vec<LowerRow>> {
    let ts = spec.temperatures()?;
    ts.par_iter().map(|&t| lower_point(&spec.params, t)).collect()
}

/// Certified bracket around the largest temperature with a positive bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    /// Midpoint of the final bracket.
    pub t_star: f64,
    /// `lower_bound(left) > 0`.
    pub left: f64,
    /// `lower_bound(right) = 0`, and no grid point above it is positive.
    pub right: f64,
}

/// Default scan used to locate the threshold before bisection.
pub const THRESHOLD_SCAN_POINTS: usize = 400;

/// Largest `T` in `[t_lo, t_hi]` at which the lower bound is positive, refined
/// by bisection until the bracket is narrower than `tol`.
///
/// Returns `None` when the bound vanishes on the whole scan. Fails when it is
/// still positive at `t_hi`, since no certified bracket exists then.
pub fn entanglement_threshold(
    params: &XxzParams,
    t_lo: f64,
    t_hi: f64,
    tol: f64,
) -> Result<Option<Threshold>> {
    if !(tol > 0.0) {
        return domain("bisection tolerance must be positive");
    }
    let spec = SweepSpec {
        params: *params,
        t_min: t_lo,
        t_max: t_hi,
        steps: THRESHOLD_SCAN_POINTS,
        scale: Scale::Log,
        ground: false,
    };
    let ts = spec.temperatures()?;
    let positive: Vec<bool> = ts
        .par_iter()
        .map(|&t| lower_point(params, t).map(|r| r.lower_bound() > 0.0))
        .collect::<Result<_>>()?;
    let Some(last) = positive.iter().rposition(|&p| p) else {
        return Ok(None);
    };
    if last + 1 == ts.len() {
        return domain(format!(
            "lower bound is still positive at T = {t_hi}; widen the scan"
        ));
    }
    let (mut left, mut right) = (ts[last], ts[last + 1]);
    while right - left > tol {
        let mid = 0.5 * (left + right);
        if lower_point(params, mid)?.lower_bound() > 0.0 {
            left = mid;
        } else {
            right = mid;
        }
    }
    Ok(Some(Threshold {
        t_star: 0.5 * (left + right),
        left,
        right,
    }))
}
