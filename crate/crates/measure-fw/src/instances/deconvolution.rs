//! Gaussian deconvolution: nonparametric maximum likelihood for the latent
//! distribution of observations corrupted by N(0, sigma^2) noise. The
//! negative log-likelihood is evaluated in log space.

use crate::domain::BoxDomain;
use crate::error::{FwError, Result};
use crate::measure::AtomicMeasure;
use crate::oracle::{Convexity, Functional, PointFn, ProblemInstance};
use std::sync::Arc;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

struct Deconvolution {
    data: Vec<f64>,
    sigma: f64,
}

impl Deconvolution {
    fn log_kernel(&self, z: f64) -> f64 {
        -0.5 * (z / self.sigma) * (z / self.sigma) - self.sigma.ln() - LN_SQRT_2PI
    }

    /// log of the mixture likelihood int phi_sigma(y - t) dmu(t).
    fn log_likelihood(&self, mu: &AtomicMeasure, y: f64) -> f64 {
        let mut max_term = f64::NEG_INFINITY;
        let terms: Vec<f64> = mu
            .iter()
            .map(|(t, w)| {
                let v = w.ln() + self.log_kernel(y - t[0]);
                max_term = max_term.max(v);
                v
            })
            .collect();
        max_term + terms.iter().map(|v| (v - max_term).exp()).sum::<f64>().ln()
    }
}

impl Functional for Deconvolution {
    fn name(&self) -> &str {
        "deconvolution"
    }

    fn objective(&self, mu: &AtomicMeasure) -> Result<f64> {
        Ok(-self
            .data
            .iter()
            .map(|&y| self.log_likelihood(mu, y))
            .sum::<f64>())
    }

    fn influence_fn(&self, mu: &AtomicMeasure) -> Result<PointFn> {
        let lls: Vec<f64> = self
            .data
            .iter()
            .map(|&y| self.log_likelihood(mu, y))
            .collect();
        let data = self.data.clone();
        let sigma = self.sigma;
        let n = data.len() as f64;
        Ok(Box::new(move |x: &[f64]| {
            let mut ratio_sum = 0.0;
            for (y, ll) in data.iter().zip(&lls) {
                let z = (y - x[0]) / sigma;
                let logphi = -0.5 * z * z - sigma.ln() - LN_SQRT_2PI;
                ratio_sum += (logphi - ll).exp();
            }
            n - ratio_sum
        }))
    }

    fn has_exact_influence(&self) -> bool {
        true
    }
}

/// Builds the deconvolution NPMLE objective for the given observations.
pub fn build_deconvolution(data: Vec<f64>, sigma: f64, dom: BoxDomain) -> Result<ProblemInstance> {
    if data.is_empty() {
        return Err(FwError::argument("deconvolution requires observations"));
    }
    if !(sigma > 0.0) {
        return Err(FwError::argument("sigma must be positive"));
    }
    if dom.dim() != 1 {
        return Err(FwError::argument("deconvolution is one-dimensional"));
    }
    Ok(ProblemInstance::new(
        "deconvolution",
        dom,
        Convexity::Convex,
        None,
        Arc::new(Deconvolution { data, sigma }),
    ))
}
