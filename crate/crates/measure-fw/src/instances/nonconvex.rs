//! Nonconvex test vehicle: a smooth nonconvex transform of the calibration
//! functional, with closed-form influence via the chain rule.

use crate::domain::BoxDomain;
use crate::error::{FwError, Result};
use crate::instances::calibration::{profile_scalar, two_point, ScalarFn};
use crate::measure::AtomicMeasure;
use crate::oracle::{Convexity, Functional, InstanceTruth, PointFn, ProblemInstance};
use std::sync::Arc;

fn g(u: f64) -> f64 {
    u * u - 0.5 * u.powi(4)
}

fn g_prime(u: f64) -> f64 {
    2.0 * u - 2.0 * u.powi(3)
}

struct NonconvexCalibration {
    f: ScalarFn,
    y0: f64,
}

impl Functional for NonconvexCalibration {
    fn name(&self) -> &str {
        "nonconvex_calibration"
    }

    fn objective(&self, mu: &AtomicMeasure) -> Result<f64> {
        let m = mu.expect(|x| (self.f)(x[0]));
        Ok(g(m - self.y0))
    }

    fn influence_fn(&self, mu: &AtomicMeasure) -> Result<PointFn> {
        let m = mu.expect(|x| (self.f)(x[0]));
        let slope = g_prime(m - self.y0);
        let f = Arc::clone(&self.f);
        Ok(Box::new(move |x: &[f64]| slope * (f(x[0]) - m)))
    }

    fn has_exact_influence(&self) -> bool {
        true
    }
}

/// J(mu) = g(int f dmu - y0) with g(u) = u^2 - u^4/2: smooth, nonconvex in mu
/// on ranges where |u| > 1/sqrt(3). The minimum value 0 is attained by any
/// measure whose f-mean equals y0; g stays nonnegative while |u| <= sqrt(2),
/// which the builder checks before attaching that truth.
pub fn build_nonconvex_calibration(
    f: ScalarFn,
    y0: f64,
    interval: BoxDomain,
) -> Result<ProblemInstance> {
    if interval.dim() != 1 {
        return Err(FwError::argument(
            "nonconvex calibration requires a 1-d interval",
        ));
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
    let spread = (prof.fmax - y0).max(y0 - prof.fmin);
    let truth = if spread <= std::f64::consts::SQRT_2 {
        let optimum = two_point(&interval, prof.xmin, prof.xmax, p)?;
        Some(InstanceTruth::new(Some(optimum), Some(0.0), None))
    } else {
        None
    };
    Ok(ProblemInstance::new(
        "nonconvex_calibration",
        interval,
        Convexity::Nonconvex,
        truth,
        Arc::new(NonconvexCalibration { f, y0 }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subsolver::SubsolverConfig;

    fn inst() -> ProblemInstance {
        build_nonconvex_calibration(
            Arc::new(|x| x),
            0.3,
            BoxDomain::interval(0.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn gap_at_delta0_matches_hand_value() {
        let inst = inst();
        let d0 = AtomicMeasure::dirac(vec![0.0], inst.domain().clone()).unwrap();
        // g'(-0.3) = -0.6 + 0.054 = -0.546; influence -0.546 x, minimized at 1.
        let h = inst.influence_fn(&d0).unwrap();
        assert!((h(&[1.0]) + 0.546).abs() < 1e-12);
        let gap = inst.fw_gap(&d0, &SubsolverConfig::for_dim(1)).unwrap();
        assert!((gap - 0.546).abs() < 1e-9);
    }

    #[test]
    fn stationary_mean_has_zero_gap() {
        let inst = inst();
        let mu = inst.truth().unwrap().optimal_measure.clone().unwrap();
        let gap = inst.fw_gap(&mu, &SubsolverConfig::for_dim(1)).unwrap();
        assert!(gap.abs() <= 1e-9);
        assert_eq!(inst.objective(&mu).unwrap(), 0.0);
    }

    #[test]
    fn fd_matches_influence_first_order() {
        let inst = inst();
        let mu = AtomicMeasure::new(
            vec![vec![0.2], vec![0.9]],
            vec![0.6, 0.4],
            inst.domain().clone(),
        )
        .unwrap();
        let h = inst.influence_fn(&mu).unwrap();
        for x in [0.0, 0.5, 1.0] {
            let exact = h(&[x]);
            let fd = inst.fd_influence(&mu, &[x], 1e-6).unwrap();
            assert!((fd - exact).abs() < 1e-4, "x={x}: {fd} vs {exact}");
        }
    }
}
