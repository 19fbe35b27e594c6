//! Pairwise-interaction risk functional: J(mu) = c0 + int V dmu
//! + (1/2) intint U dmu dmu with a symmetric PSD kernel U. Convex when U is
//! PSD; the influence carries the additive constant that makes it zero-mean.

use crate::domain::BoxDomain;
use crate::error::{FwError, Result};
use crate::measure::AtomicMeasure;
use crate::oracle::{grid_points, Convexity, Functional, PointFn, ProblemInstance};
use std::sync::Arc;

pub type PotentialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type KernelFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

struct NnRisk {
    v: PotentialFn,
    u: KernelFn,
    c0: f64,
}

impl Functional for NnRisk {
    fn name(&self) -> &str {
        "nn_risk"
    }

    fn objective(&self, mu: &AtomicMeasure) -> Result<f64> {
        let linear = mu.expect(|x| (self.v)(x));
        let mut quad = 0.0;
        for (a, wa) in mu.iter() {
            for (b, wb) in mu.iter() {
                quad += wa * wb * (self.u)(a, b);
            }
        }
        Ok(self.c0 + linear + 0.5 * quad)
    }

    fn influence_fn(&self, mu: &AtomicMeasure) -> Result<PointFn> {
        let vbar = mu.expect(|x| (self.v)(x));
        let mut ubar = 0.0;
        for (a, wa) in mu.iter() {
            for (b, wb) in mu.iter() {
                ubar += wa * wb * (self.u)(a, b);
            }
        }
        let v = Arc::clone(&self.v);
        let u = Arc::clone(&self.u);
        let mu = mu.clone();
        // c = -vbar - ubar pins int h dmu = 0.
        Ok(Box::new(move |x: &[f64]| {
            v(x) + mu.expect(|a| u(x, a)) - vbar - ubar
        }))
    }

    fn has_exact_influence(&self) -> bool {
        true
    }
}

/// Builds the pairwise-risk instance. `u` must be symmetric (checked on a
/// deterministic sample of domain pairs); positive semidefiniteness is
/// asserted by the caller and underpins the convexity flag.
pub fn build_nn_risk(
    v: PotentialFn,
    u: KernelFn,
    c0: f64,
    dom: BoxDomain,
) -> Result<ProblemInstance> {
    let probe = grid_points(&dom, 7);
    for (i, a) in probe.iter().enumerate() {
        for b in probe.iter().skip(i + 1).step_by(3) {
            if (u(a, b) - u(b, a)).abs() > 1e-9 {
                return Err(FwError::argument("interaction kernel is not symmetric"));
            }
        }
    }
    Ok(ProblemInstance::new(
        "nn_risk",
        dom,
        Convexity::Convex,
        None,
        Arc::new(NnRisk { v, u, c0 }),
    ))
}
