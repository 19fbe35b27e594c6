//! Optimal response time, parts (a) and (b).
//!
//! Part (a): expected dispatch cost E_eta E_mu [t(X, Y)]; the influence is
//! the marginal cost minus the objective, so its argmin does not depend on
//! the incumbent measure. Part (b): squared-error matching of the response
//! time distribution F_mu against a target profile curve; the optimum can be
//! non-sparse, so no optimal measure is attached (the infimum value 0 is).

use crate::domain::BoxDomain;
use crate::error::{FwError, Result};
use crate::measure::AtomicMeasure;
use crate::oracle::{Convexity, Functional, InstanceTruth, PointFn, ProblemInstance};
use crate::subsolver::{minimize_over_box, SubsolverConfig};
use std::sync::Arc;

/// Dispatch cost t(x, y) of serving an incident at y from x.
pub type CostFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

struct ResponseTimeA {
    cost: CostFn,
    eta: AtomicMeasure,
}

impl ResponseTimeA {
    fn marginal_cost(&self, x: &[f64]) -> f64 {
        self.eta.expect(|y| (self.cost)(x, y))
    }
}

impl Functional for ResponseTimeA {
    fn name(&self) -> &str {
        "response_time_a"
    }

    fn objective(&self, mu: &AtomicMeasure) -> Result<f64> {
        Ok(mu.expect(|x| self.marginal_cost(x)))
    }

    fn influence_fn(&self, mu: &AtomicMeasure) -> Result<PointFn> {
        let j = self.objective(mu)?;
        let cost = Arc::clone(&self.cost);
        let eta = self.eta.clone();
        Ok(Box::new(move |x: &[f64]| {
            eta.expect(|y| cost(x, y)) - j
        }))
    }

    fn has_exact_influence(&self) -> bool {
        true
    }
}

/// Expected-cost placement against incident measure `eta`. The optimum (a
/// Dirac at the marginal-cost argmin) and the smoothness constant (the range
/// of the marginal cost, scanned at build time) are attached.
pub fn build_response_time_a(
    cost: CostFn,
    eta: AtomicMeasure,
    dom: BoxDomain,
) -> Result<ProblemInstance> {
    if eta.domain() != &dom {
        return Err(FwError::argument("eta must live on the decision domain"));
    }
    let f = ResponseTimeA { cost, eta };
    let cfg = SubsolverConfig::for_dim(dom.dim());
    let lo = minimize_over_box(&|x: &[f64]| f.marginal_cost(x), &dom, &cfg)?;
    let hi = minimize_over_box(&|x: &[f64]| -f.marginal_cost(x), &dom, &cfg)?;
    let optimum = AtomicMeasure::dirac(lo.minimizer.clone(), dom.clone())?;
    let truth = InstanceTruth::new(
        Some(optimum),
        Some(lo.min_value),
        Some(-hi.min_value - lo.min_value),
    );
    Ok(ProblemInstance::new(
        "response_time_a",
        dom,
        Convexity::Convex,
        Some(truth),
        Arc::new(f),
    ))
}

/// Step function t -> sum of masses with breakpoint <= t, as sorted
/// (breakpoint, jump) pairs with cumulative values.
struct StepCdf {
    breaks: Vec<f64>,
    cum: Vec<f64>,
}

impl StepCdf {
    fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut breaks = Vec::with_capacity(pairs.len());
        let mut cum = Vec::with_capacity(pairs.len());
        let mut acc = 0.0;
        for (b, w) in pairs {
            acc += w;
            match breaks.last() {
                Some(&last) if b == last => *cum.last_mut().unwrap() = acc,
                _ => {
                    breaks.push(b);
                    cum.push(acc);
                }
            }
        }
        Self { breaks, cum }
    }

    fn value(&self, t: f64) -> f64 {
        let idx = self.breaks.partition_point(|b| *b <= t);
        if idx == 0 {
            0.0
        } else {
            self.cum[idx - 1]
        }
    }

    fn max_break(&self) -> f64 {
        self.breaks.last().copied().unwrap_or(0.0)
    }
}

struct ResponseTimeB {
    eta: AtomicMeasure,
    /// Target profile F*(t) = min(slope * t, 1).
    slope: f64,
    speed: f64,
}

impl ResponseTimeB {
    fn response_cdf(&self, mu: &AtomicMeasure) -> StepCdf {
        let mut pairs = Vec::with_capacity(mu.atom_count() * self.eta.atom_count());
        for (x, w) in mu.iter() {
            for (y, v) in self.eta.iter() {
                pairs.push(((x[0] - y[0]).abs() / self.speed, w * v));
            }
        }
        StepCdf::from_pairs(pairs)
    }

    fn target(&self, t: f64) -> f64 {
        (self.slope * t).min(1.0)
    }
}

/// Integrates g over [0, t_end] where g is polynomial between consecutive
/// merged breakpoints (the step functions are constant and the target is
/// linear there, so degree <= 2). Two-point Gauss-Legendre per segment is
/// exact for that degree and keeps both nodes strictly off the jumps.
fn integrate_over_merged(
    mut breaks: Vec<f64>,
    t_end: f64,
    slope: f64,
    g: impl Fn(f64) -> f64,
) -> f64 {
    breaks.push(0.0);
    breaks.push(t_end);
    breaks.push(1.0 / slope);
    breaks.retain(|t| *t >= 0.0 && *t <= t_end);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    const HALF_INV_SQRT3: f64 = 0.288_675_134_594_812_9;
    let mut total = 0.0;
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let len = b - a;
        if len <= 0.0 {
            continue;
        }
        let m = 0.5 * (a + b);
        let off = len * HALF_INV_SQRT3;
        total += 0.5 * len * (g(m - off) + g(m + off));
    }
    total
}

impl Functional for ResponseTimeB {
    fn name(&self) -> &str {
        "response_time_b"
    }

    fn objective(&self, mu: &AtomicMeasure) -> Result<f64> {
        let f_mu = self.response_cdf(mu);
        let t_end = f_mu.max_break().max(1.0 / self.slope);
        let breaks = f_mu.breaks.clone();
        let slope = self.slope;
        Ok(integrate_over_merged(breaks, t_end, slope, |t| {
            let d = f_mu.value(t) - self.target(t);
            d * d
        }))
    }

    fn influence_fn(&self, mu: &AtomicMeasure) -> Result<PointFn> {
        let f_mu = self.response_cdf(mu);
        let eta = self.eta.clone();
        let slope = self.slope;
        let speed = self.speed;
        Ok(Box::new(move |x: &[f64]| {
            let g_x = StepCdf::from_pairs(
                eta.iter()
                    .map(|(y, v)| ((y[0] - x[0]).abs() / speed, v))
                    .collect(),
            );
            let mut breaks = f_mu.breaks.clone();
            breaks.extend_from_slice(&g_x.breaks);
            let t_end = f_mu.max_break().max(g_x.max_break()).max(1.0 / slope);
            // 2 int (F_mu - F*)(G_x - F_mu) dt; piecewise (linear x constant).
            integrate_over_merged(breaks, t_end, slope, |t| {
                let f = f_mu.value(t);
                2.0 * (f - (slope * t).min(1.0)) * (g_x.value(t) - f)
            })
        }))
    }

    fn has_exact_influence(&self) -> bool {
        true
    }
}

/// Profile matching of response-time distributions at unit mass: the target
/// is the ramp F*(t) = min(slope * t, 1). The infimum 0 is generally attained
/// only by non-atomic measures, so the truth carries a value but no measure.
pub fn build_response_time_b(
    eta: AtomicMeasure,
    slope: f64,
    speed: f64,
    dom: BoxDomain,
) -> Result<ProblemInstance> {
    if dom.dim() != 1 {
        return Err(FwError::argument("response_time_b is one-dimensional"));
    }
    if eta.domain() != &dom {
        return Err(FwError::argument("eta must live on the decision domain"));
    }
    if !(slope > 0.0) || !(speed > 0.0) {
        return Err(FwError::argument(
            "target slope and speed must be positive",
        ));
    }
    Ok(ProblemInstance::new(
        "response_time_b",
        dom,
        Convexity::Convex,
        Some(InstanceTruth::new(None, Some(0.0), None)),
        Arc::new(ResponseTimeB { eta, slope, speed }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> BoxDomain {
        BoxDomain::interval(0.0, 1.0).unwrap()
    }

    fn abs_cost() -> CostFn {
        Arc::new(|x: &[f64], y: &[f64]| (x[0] - y[0]).abs())
    }

    #[test]
    fn part_a_median_optimum_and_cloud_value() {
        let eta = AtomicMeasure::grid_cloud(&unit(), 201).unwrap();
        let inst = build_response_time_a(abs_cost(), eta.clone(), unit()).unwrap();
        let truth = inst.truth().unwrap();
        let opt = truth.optimal_measure.as_ref().unwrap();
        assert!((opt.atoms()[0][0] - 0.5).abs() < 1e-6);
        // Brute force over the atom cloud.
        let brute = eta.expect(|y| (0.5 - y[0]).abs());
        assert!((truth.optimal_value.unwrap() - brute).abs() < 1e-9);
        assert!((brute - 0.25).abs() < 0.01);
    }

    #[test]
    fn part_a_influence_argmin_is_measure_independent() {
        let eta = AtomicMeasure::grid_cloud(&unit(), 21).unwrap();
        let inst = build_response_time_a(abs_cost(), eta, unit()).unwrap();
        let mu1 = AtomicMeasure::dirac(vec![0.1], unit()).unwrap();
        let mu2 = AtomicMeasure::new(
            vec![vec![0.3], vec![0.9]],
            vec![0.4, 0.6],
            unit(),
        )
        .unwrap();
        let h1 = inst.influence_fn(&mu1).unwrap();
        let h2 = inst.influence_fn(&mu2).unwrap();
        // The difference h1 - h2 is constant in x.
        let d0 = h1(&[0.0]) - h2(&[0.0]);
        for x in [0.2, 0.5, 0.8, 1.0] {
            assert!((h1(&[x]) - h2(&[x]) - d0).abs() < 1e-12);
        }
        let cfg = SubsolverConfig::for_dim(1);
        let m1 = minimize_over_box(&|x: &[f64]| h1(x), &unit(), &cfg).unwrap();
        let m2 = minimize_over_box(&|x: &[f64]| h2(x), &unit(), &cfg).unwrap();
        assert!((m1.minimizer[0] - m2.minimizer[0]).abs() < 1e-9);
    }

    fn paper_setup() -> ProblemInstance {
        let eta = AtomicMeasure::dirac(vec![0.5], unit()).unwrap();
        build_response_time_b(eta, 2.0, 1.0, unit()).unwrap()
    }

    #[test]
    fn part_b_closed_form_values() {
        let inst = paper_setup();
        // J(delta_1/2) = int_0^{1/2} (1 - 2t)^2 dt = 1/6.
        let dc = AtomicMeasure::dirac(vec![0.5], unit()).unwrap();
        assert!((inst.objective(&dc).unwrap() - 1.0 / 6.0).abs() < 1e-12);
        // J(half at 1/4, half at 3/4) = 1/48 + 1/48 = 1/24.
        let two = AtomicMeasure::new(
            vec![vec![0.25], vec![0.75]],
            vec![0.5, 0.5],
            unit(),
        )
        .unwrap();
        assert!((inst.objective(&two).unwrap() - 1.0 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn part_b_dense_cloud_nearly_optimal_and_atoms_suboptimal() {
        let inst = paper_setup();
        let cloud = AtomicMeasure::grid_cloud(&unit(), 2001).unwrap();
        let j_cloud = inst.objective(&cloud).unwrap();
        assert!(j_cloud < 1e-4, "got {j_cloud}");
        // Every sparse measure keeps J strictly positive.
        for mu in [
            AtomicMeasure::dirac(vec![0.5], unit()).unwrap(),
            AtomicMeasure::new(
                vec![vec![0.3], vec![0.5], vec![0.8]],
                vec![0.3, 0.4, 0.3],
                unit(),
            )
            .unwrap(),
        ] {
            assert!(inst.objective(&mu).unwrap() > 1e-3);
        }
    }

    #[test]
    fn part_b_influence_zero_mean() {
        let inst = paper_setup();
        let mu = AtomicMeasure::new(
            vec![vec![0.2], vec![0.55], vec![0.9]],
            vec![0.25, 0.5, 0.25],
            unit(),
        )
        .unwrap();
        let h = inst.influence_fn(&mu).unwrap();
        let mean = mu.expect(|x| h(x));
        assert!(mean.abs() < 1e-10, "got {mean}");
    }
}
