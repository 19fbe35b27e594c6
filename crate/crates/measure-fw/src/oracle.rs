//! The influence-function and objective oracle layer.
//!
//! A [`ProblemInstance`] bundles a domain with a [`Functional`]: the exact
//! objective, optionally an exact influence function, and optionally
//! per-sample Monte Carlo oracles with their sampler. Influence evaluation is
//! factory-style: `influence_fn(mu)` precomputes everything that depends on
//! the measure once and returns a cheap closure in `x`.

use crate::domain::{BoxDomain, Point};
use crate::error::{FwError, Result};
use crate::measure::AtomicMeasure;
use crate::rng::RngStream;
use crate::subsolver::{minimize_over_box, SubsolverConfig};
use rand::Rng;
use std::sync::Arc;

/// Convexity of the objective as a functional of the measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convexity {
    Convex,
    Nonconvex,
    Unknown,
}

/// Known facts about the optimum, when the construction pins them down.
#[derive(Debug, Clone)]
pub struct InstanceTruth {
    pub optimal_measure: Option<AtomicMeasure>,
    pub optimal_value: Option<f64>,
    pub smoothness_l: Option<f64>,
    /// Diameter constant used in bound checks; fixed to 2 by convention even
    /// though the implemented sup-over-sets TV distance is at most 1.
    pub diameter_r: f64,
}

impl InstanceTruth {
    pub fn new(measure: Option<AtomicMeasure>, value: Option<f64>, l: Option<f64>) -> Self {
        Self {
            optimal_measure: measure,
            optimal_value: value,
            smoothness_l: l,
            diameter_r: 2.0,
        }
    }
}

/// A measure-independent evaluator returned by the influence factories.
pub type PointFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// The problem-defining functional. Methods with default bodies are optional
/// capabilities; implementations advertise them via the `has_*` flags.
pub trait Functional: Send + Sync {
    fn name(&self) -> &str;

    /// Exact objective J(mu).
    fn objective(&self, mu: &AtomicMeasure) -> Result<f64>;

    /// Exact influence function at `mu`, precomputed into a closure.
    fn influence_fn(&self, _mu: &AtomicMeasure) -> Result<PointFn> {
        Err(FwError::capability(self.name(), "an exact influence function"))
    }

    fn has_exact_influence(&self) -> bool {
        false
    }

    /// One draw of the per-sample objective F(mu, y).
    fn sample_objective(&self, _mu: &AtomicMeasure, _y: f64) -> Result<f64> {
        Err(FwError::capability(self.name(), "a stochastic objective oracle"))
    }

    /// Sample-average influence estimate with a frozen batch of draws:
    /// the returned closure is x -> (1/m) sum_j H_mu(x, y_j).
    fn sampled_influence_fn(&self, _mu: &AtomicMeasure, _ys: &[f64]) -> Result<PointFn> {
        Err(FwError::capability(self.name(), "a stochastic influence oracle"))
    }

    /// One i.i.d. draw of Y.
    fn draw(&self, _rng: &mut rand_chacha::ChaCha8Rng) -> Result<f64> {
        Err(FwError::capability(self.name(), "a sampler"))
    }

    fn has_stochastic(&self) -> bool {
        false
    }
}

#[derive(Clone)]
pub struct ProblemInstance {
    name: String,
    domain: BoxDomain,
    convexity: Convexity,
    truth: Option<InstanceTruth>,
    functional: Arc<dyn Functional>,
}

impl std::fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("convexity", &self.convexity)
            .finish_non_exhaustive()
    }
}

impl ProblemInstance {
    pub fn new(
        name: impl Into<String>,
        domain: BoxDomain,
        convexity: Convexity,
        truth: Option<InstanceTruth>,
        functional: Arc<dyn Functional>,
    ) -> Self {
        Self {
            name: name.into(),
            domain,
            convexity,
            truth,
            functional,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn convexity(&self) -> Convexity {
        self.convexity
    }

    pub fn truth(&self) -> Option<&InstanceTruth> {
        self.truth.as_ref()
    }

    pub fn set_truth(&mut self, truth: Option<InstanceTruth>) {
        self.truth = truth;
    }

    pub fn has_exact_influence(&self) -> bool {
        self.functional.has_exact_influence()
    }

    pub fn has_stochastic_oracle(&self) -> bool {
        self.functional.has_stochastic()
    }

    /// Exact objective J(mu).
    pub fn objective(&self, mu: &AtomicMeasure) -> Result<f64> {
        self.functional.objective(mu)
    }

    /// Exact influence function h_mu as a closure over points.
    pub fn influence_fn(&self, mu: &AtomicMeasure) -> Result<PointFn> {
        self.functional.influence_fn(mu)
    }

    /// Exact influence h_mu(x) at a single point.
    pub fn influence(&self, mu: &AtomicMeasure, x: &[f64]) -> Result<f64> {
        self.domain.check_contains(x)?;
        Ok(self.influence_fn(mu)?(x))
    }

    /// Draws `m` fresh samples from the instance's sampler.
    pub fn draws(&self, m: usize, stream: RngStream) -> Result<Vec<f64>> {
        if m == 0 {
            return Err(FwError::argument("sample size must be >= 1"));
        }
        let mut rng = stream.rng();
        (0..m).map(|_| self.functional.draw(&mut rng)).collect()
    }

    /// Frozen-batch sample-average influence H_{mu,m}: the same `m` draws are
    /// reused for every point the returned closure is evaluated at, so the
    /// subsolver minimizes one fixed sampled function.
    pub fn mc_influence_fn(&self, mu: &AtomicMeasure, m: usize, stream: RngStream) -> Result<PointFn> {
        let ys = self.draws(m, stream)?;
        self.functional.sampled_influence_fn(mu, &ys)
    }

    /// Sample-average influence estimate at a single point.
    pub fn mc_influence(&self, mu: &AtomicMeasure, x: &[f64], m: usize, stream: RngStream) -> Result<f64> {
        self.domain.check_contains(x)?;
        let v = self.mc_influence_fn(mu, m, stream)?(x);
        if !v.is_finite() {
            return Err(FwError::Oracle { point: x.to_vec() });
        }
        Ok(v)
    }

    /// Sample-average objective estimate J_m(mu) over `m` fresh draws.
    pub fn mc_objective(&self, mu: &AtomicMeasure, m: usize, stream: RngStream) -> Result<f64> {
        let ys = self.draws(m, stream)?;
        let mut acc = 0.0;
        for y in &ys {
            let v = self.functional.sample_objective(mu, *y)?;
            if !v.is_finite() {
                return Err(FwError::Oracle { point: vec![*y] });
            }
            acc += v;
        }
        Ok(acc / m as f64)
    }

    /// One per-sample objective draw F(mu, y).
    pub fn sample_objective(&self, mu: &AtomicMeasure, y: f64) -> Result<f64> {
        self.functional.sample_objective(mu, y)
    }

    /// Difference quotient (J((1-t)mu + t delta_x) - J(mu)) / t; the defining
    /// limit of the influence function, used as a fallback oracle (bias O(t)).
    pub fn fd_influence(&self, mu: &AtomicMeasure, x: &[f64], t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= 0.5) {
            return Err(FwError::argument(format!("fd step {t} outside (0, 0.5]")));
        }
        let dirac = AtomicMeasure::dirac(x.to_vec(), self.domain.clone())?;
        let perturbed = mu.mix(&dirac, t)?;
        Ok((self.objective(&perturbed)? - self.objective(mu)?) / t)
    }

    /// Default finite-difference step for the fallback influence oracle.
    pub const FD_DEFAULT_T: f64 = 1e-5;

    /// von Mises derivative J'_mu(nu - mu) = E_{X~nu}[h_mu(X)].
    pub fn von_mises(&self, mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<f64> {
        let h = self.influence_fn(mu)?;
        Ok(nu.expect(|x| h(x)))
    }

    /// Frank-Wolfe gap G(mu) = -min_x h_mu(x) >= 0; zero iff locally optimal.
    pub fn fw_gap(&self, mu: &AtomicMeasure, cfg: &SubsolverConfig) -> Result<f64> {
        let h = self.influence_fn(mu)?;
        let res = minimize_over_box(&|x: &[f64]| h(x), &self.domain, cfg)?;
        Ok(-res.min_value)
    }

    /// Wraps the exact oracles as a zero-variance stochastic oracle:
    /// F(mu, y) := J(mu) and H_mu(., y) := h_mu(.) for every draw.
    pub fn with_degenerate_oracle(&self) -> ProblemInstance {
        let inner = Arc::clone(&self.functional);
        ProblemInstance {
            name: format!("{}+degenerate", self.name),
            domain: self.domain.clone(),
            convexity: self.convexity,
            truth: self.truth.clone(),
            functional: Arc::new(DegenerateOracle { inner }),
        }
    }

    /// Sampled Lipschitz estimate of the smoothness constant: the largest
    /// observed sup_x |h_mu(x) - h_nu(x)| / tv(mu, nu) over random atomic
    /// pairs, inflated by 1.5. Reported as "estimated-L" by the harness.
    pub fn estimate_smoothness_l(&self, pairs: usize, stream: RngStream) -> Result<f64> {
        let mut rng = stream.rng();
        let d = self.domain.dim();
        let grid: Vec<Point> = grid_points(&self.domain, if d == 1 { 65 } else { 17 });
        let mut worst: f64 = 0.0;
        let draw_measure = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<AtomicMeasure> {
            let n = rng.random_range(1..=5usize);
            let atoms: Vec<Point> = (0..n)
                .map(|_| {
                    (0..d)
                        .map(|c| rng.random_range(self.domain.lower()[c]..=self.domain.upper()[c]))
                        .collect()
                })
                .collect();
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            AtomicMeasure::new(atoms, raw.iter().map(|w| w / s).collect(), self.domain.clone())
        };
        for _ in 0..pairs {
            let mu = draw_measure(&mut rng)?;
            let nu = draw_measure(&mut rng)?;
            let tv = mu.tv_distance(&nu)?;
            if tv < 1e-6 {
                continue;
            }
            let hmu = self.influence_fn(&mu)?;
            let hnu = self.influence_fn(&nu)?;
            let sup = grid
                .iter()
                .map(|x| (hmu(x) - hnu(x)).abs())
                .fold(0.0f64, f64::max);
            worst = worst.max(sup / tv);
        }
        if worst == 0.0 {
            return Err(FwError::argument(
                "smoothness estimation saw no usable pairs",
            ));
        }
        Ok(1.5 * worst)
    }

    /// Smoothness constant for bound checks: the analytic one from truth when
    /// present, otherwise the sampled estimate. The flag says which it was.
    pub fn smoothness_l(&self, stream: RngStream) -> Result<(f64, bool)> {
        if let Some(l) = self.truth.as_ref().and_then(|t| t.smoothness_l) {
            return Ok((l, false));
        }
        Ok((self.estimate_smoothness_l(40, stream)?, true))
    }
}

/// Evenly spaced scan grid over the box (used by diagnostics).
pub fn grid_points(dom: &BoxDomain, per_dim: usize) -> Vec<Point> {
    let d = dom.dim();
    let total = per_dim.pow(d as u32);
    (0..total)
        .map(|idx| {
            let mut rem = idx;
            (0..d)
                .map(|c| {
                    let j = rem % per_dim;
                    rem /= per_dim;
                    dom.lower()[c] + (dom.upper()[c] - dom.lower()[c]) * j as f64 / (per_dim - 1) as f64
                })
                .collect()
        })
        .collect()
}

struct DegenerateOracle {
    inner: Arc<dyn Functional>,
}

impl Functional for DegenerateOracle {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn objective(&self, mu: &AtomicMeasure) -> Result<f64> {
        self.inner.objective(mu)
    }

    fn influence_fn(&self, mu: &AtomicMeasure) -> Result<PointFn> {
        self.inner.influence_fn(mu)
    }

    fn has_exact_influence(&self) -> bool {
        self.inner.has_exact_influence()
    }

    fn sample_objective(&self, mu: &AtomicMeasure, _y: f64) -> Result<f64> {
        self.inner.objective(mu)
    }

    fn sampled_influence_fn(&self, mu: &AtomicMeasure, _ys: &[f64]) -> Result<PointFn> {
        self.inner.influence_fn(mu)
    }

    fn draw(&self, _rng: &mut rand_chacha::ChaCha8Rng) -> Result<f64> {
        Ok(0.0)
    }

    fn has_stochastic(&self) -> bool {
        self.inner.has_exact_influence()
    }
}
