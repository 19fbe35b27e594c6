//! Expected-value calibration: drive the mean of f under mu to a target.

use crate::domain::BoxDomain;
use crate::error::{FwError, Result};
use crate::measure::AtomicMeasure;
use crate::oracle::{Convexity, Functional, InstanceTruth, PointFn, ProblemInstance};
use crate::subsolver::{minimize_over_box, SubsolverConfig};
use std::sync::Arc;

/// Scalar function on a 1-d domain.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub(crate) struct ScalarProfile {
    pub xmin: f64,
    pub fmin: f64,
    pub xmax: f64,
    pub fmax: f64,
}

/// Locates the extrema of f on the interval with the subsolver (build time,
/// deterministic).
pub(crate) fn profile_scalar(f: &ScalarFn, interval: &BoxDomain) -> Result<ScalarProfile> {
    let cfg = SubsolverConfig::for_dim(1);
    let f1 = Arc::clone(f);
    let lo = minimize_over_box(&move |x: &[f64]| f1(x[0]), interval, &cfg)?;
    let f2 = Arc::clone(f);
    let hi = minimize_over_box(&move |x: &[f64]| -f2(x[0]), interval, &cfg)?;
    Ok(ScalarProfile {
        xmin: lo.minimizer[0],
        fmin: lo.min_value,
        xmax: hi.minimizer[0],
        fmax: -hi.min_value,
    })
}

/// Two-point mixture placing weight `p` on `x_hi` and `1-p` on `x_lo`.
pub(crate) fn two_point(dom: &BoxDomain, x_lo: f64, x_hi: f64, p: f64) -> Result<AtomicMeasure> {
    AtomicMeasure::new(
        vec![vec![x_hi], vec![x_lo]],
        vec![p, 1.0 - p],
        dom.clone(),
    )
}

struct Calibration {
    f: ScalarFn,
    y0: f64,
}

impl Calibration {
    fn mean(&self, mu: &AtomicMeasure) -> f64 {
        mu.expect(|x| (self.f)(x[0]))
    }
}

impl Functional for Calibration {
    fn name(&self) -> &str {
        "calibration"
    }

    fn objective(&self, mu: &AtomicMeasure) -> Result<f64> {
        let m = self.mean(mu);
        Ok((m - self.y0) * (m - self.y0))
    }

    fn influence_fn(&self, mu: &AtomicMeasure) -> Result<PointFn> {
        let m = self.mean(mu);
        let slope = 2.0 * (m - self.y0);
        let f = Arc::clone(&self.f);
        Ok(Box::new(move |x: &[f64]| slope * (f(x[0]) - m)))
    }

    fn has_exact_influence(&self) -> bool {
        true
    }
}

/// J(mu) = (int f dmu - y0)^2 on a compact interval, with the two-point
/// optimal mixture and the analytic smoothness constant attached.
pub fn build_calibration(f: ScalarFn, y0: f64, interval: BoxDomain) -> Result<ProblemInstance> {
    if interval.dim() != 1 {
        return Err(FwError::argument("calibration requires a 1-d interval"));
    }
    let prof = profile_scalar(&f, &interval)?;
    if y0 < prof.fmin - 1e-12 || y0 > prof.fmax + 1e-12 {
        return Err(FwError::argument(format!(
            "target {y0} outside the attainable range [{}, {}]",
            prof.fmin, prof.fmax
        )));
    }
    let range = prof.fmax - prof.fmin;
    let p = if range > 0.0 {
        ((y0 - prof.fmin) / range).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let optimum = two_point(&interval, prof.xmin, prof.xmax, p)?;
    // |h_mu1 - h_mu2| <= 2 |m1 - m2| sup_x |f(x) - m1 - m2 + y0| with
    // |m1 - m2| <= range * tv.
    let l = 2.0
        * range
        * (prof.fmax - 2.0 * prof.fmin + y0).max(2.0 * prof.fmax - prof.fmin - y0);
    Ok(ProblemInstance::new(
        "calibration",
        interval,
        Convexity::Convex,
        Some(InstanceTruth::new(Some(optimum), Some(0.0), Some(l))),
        Arc::new(Calibration { f, y0 }),
    ))
}
