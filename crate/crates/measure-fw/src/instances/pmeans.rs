//! The P-means problem: responders placed by a spatial Poisson process with
//! mean measure mu serve fixed demand points; minimize the expected total
//! closest-responder cost. Ships exact piecewise quadrature and the per-sample
//! Monte Carlo oracles.

use crate::domain::{euclidean, BoxDomain, Point};
use crate::error::{FwError, Result};
use crate::measure::AtomicMeasure;
use crate::oracle::{Convexity, Functional, InstanceTruth, PointFn, ProblemInstance};
use rand::Rng;
use std::sync::Arc;

struct PMeans {
    demands: Vec<Point>,
    u: f64,
}

/// Piecewise-constant coverage t -> mu(B(center, t)) on [0, u]:
/// boundaries b_0 = 0 < ... < b_K = u and the value on each [b_s, b_{s+1}).
struct CoverageProfile {
    boundaries: Vec<f64>,
    values: Vec<f64>,
}

impl CoverageProfile {
    fn build(mu: &AtomicMeasure, center: &[f64], u: f64) -> Self {
        let mut dw: Vec<(f64, f64)> = mu
            .iter()
            .map(|(a, w)| (euclidean(a, center), w))
            .collect();
        dw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut boundaries = vec![0.0];
        for (d, _) in &dw {
            if *d > 0.0 && *d < u && *d > *boundaries.last().unwrap() {
                boundaries.push(*d);
            }
        }
        boundaries.push(u);
        let values = boundaries[..boundaries.len() - 1]
            .iter()
            .map(|b| covered_before(&dw, *b))
            .collect();
        Self { boundaries, values }
    }

    /// Segment index containing t (clamped to the last segment at t = u).
    fn segment(&self, t: f64) -> usize {
        match self
            .boundaries
            .binary_search_by(|b| b.partial_cmp(&t).unwrap())
        {
            Ok(i) => i.min(self.values.len() - 1),
            Err(i) => (i - 1).min(self.values.len() - 1),
        }
    }

    /// Integral over [0, u] of g(W(t)) dt for piecewise-constant W.
    fn integral(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(s, &w)| (self.boundaries[s + 1] - self.boundaries[s]) * g(w))
            .sum()
    }

    /// Suffix integrals int_{b_j}^{u} exp(-W) dt at every boundary.
    fn exp_suffix(&self) -> Vec<f64> {
        let mut suf = vec![0.0; self.boundaries.len()];
        for s in (0..self.values.len()).rev() {
            suf[s] = suf[s + 1]
                + (self.boundaries[s + 1] - self.boundaries[s]) * (-self.values[s]).exp();
        }
        suf
    }
}

/// Mass at distance <= t for the sorted (distance, weight) list.
fn covered_before(dw: &[(f64, f64)], t: f64) -> f64 {
    dw.iter().take_while(|(d, _)| *d <= t).map(|(_, w)| w).sum()
}

impl PMeans {
    fn profiles(&self, mu: &AtomicMeasure) -> Vec<CoverageProfile> {
        self.demands
            .iter()
            .map(|l| CoverageProfile::build(mu, l, self.u))
            .collect()
    }
}

impl Functional for PMeans {
    fn name(&self) -> &str {
        "pmeans"
    }

    fn objective(&self, mu: &AtomicMeasure) -> Result<f64> {
        Ok(self
            .profiles(mu)
            .iter()
            .map(|p| p.integral(|w| (-w).exp()))
            .sum())
    }

    fn influence_fn(&self, mu: &AtomicMeasure) -> Result<PointFn> {
        let profiles = self.profiles(mu);
        // Per demand: the x-independent term and suffix integrals of exp(-W).
        let consts: Vec<f64> = profiles
            .iter()
            .map(|p| p.integral(|w| w * (-w).exp()))
            .collect();
        let suffixes: Vec<Vec<f64>> = profiles.iter().map(|p| p.exp_suffix()).collect();
        let demands = self.demands.clone();
        Ok(Box::new(move |x: &[f64]| {
            let mut h = 0.0;
            for (i, l) in demands.iter().enumerate() {
                let d = euclidean(l, x);
                let p = &profiles[i];
                let s = p.segment(d);
                let tail = (p.boundaries[s + 1] - d).max(0.0) * (-p.values[s]).exp()
                    + suffixes[i][s + 1];
                h += consts[i] - tail;
            }
            h
        }))
    }

    fn has_exact_influence(&self) -> bool {
        true
    }

    fn sample_objective(&self, mu: &AtomicMeasure, y: f64) -> Result<f64> {
        let mut total = 0.0;
        for l in &self.demands {
            total += self.u * (-mu.ball_mass(l, y)?).exp();
        }
        Ok(total)
    }

    fn sampled_influence_fn(&self, mu: &AtomicMeasure, ys: &[f64]) -> Result<PointFn> {
        let m = ys.len();
        if m == 0 {
            return Err(FwError::argument("empty sample batch"));
        }
        let mut sorted_ys = ys.to_vec();
        sorted_ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Per demand: coverage and exp(-coverage) at each sorted draw, plus
        // suffix sums of exp(-coverage) so the closure costs O(n0 log m).
        let mut const_term = 0.0;
        let mut suffix_tables: Vec<Vec<f64>> = Vec::with_capacity(self.demands.len());
        for l in &self.demands {
            let mut dw: Vec<(f64, f64)> = mu.iter().map(|(a, w)| (euclidean(a, l), w)).collect();
            dw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut cum = Vec::with_capacity(dw.len());
            let mut acc = 0.0;
            for (_, w) in &dw {
                acc += w;
                cum.push(acc);
            }
            let coverage_at = |t: f64| -> f64 {
                let idx = dw.partition_point(|(d, _)| *d <= t);
                if idx == 0 {
                    0.0
                } else {
                    cum[idx - 1]
                }
            };
            let exps: Vec<f64> = sorted_ys
                .iter()
                .map(|&y| {
                    let cov = coverage_at(y);
                    let e = (-cov).exp();
                    const_term += cov * e;
                    e
                })
                .collect();
            let mut suf = vec![0.0; m + 1];
            for j in (0..m).rev() {
                suf[j] = suf[j + 1] + exps[j];
            }
            suffix_tables.push(suf);
        }
        let scale = self.u / m as f64;
        let demands = self.demands.clone();
        Ok(Box::new(move |x: &[f64]| {
            let mut covered_sum = 0.0;
            for (i, l) in demands.iter().enumerate() {
                let d = euclidean(l, x);
                let j = sorted_ys.partition_point(|&y| y < d);
                covered_sum += suffix_tables[i][j];
            }
            scale * (const_term - covered_sum)
        }))
    }

    fn draw(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Result<f64> {
        Ok(rng.random_range(0.0..self.u))
    }

    fn has_stochastic(&self) -> bool {
        true
    }
}

/// Builds the P-means instance; `u` is the domain diameter. With a single
/// demand the optimum is the Dirac at the demand point (every ball around it
/// has full mass), so that truth is attached automatically.
pub fn build_pmeans(demands: Vec<Point>, dom: BoxDomain) -> Result<ProblemInstance> {
    if demands.is_empty() {
        return Err(FwError::argument("at least one demand point required"));
    }
    for l in &demands {
        if !dom.contains(l) {
            return Err(FwError::argument(format!("demand {l:?} outside the domain")));
        }
    }
    let u = dom.diameter();
    let truth = if demands.len() == 1 {
        let opt = AtomicMeasure::dirac(demands[0].clone(), dom.clone())?;
        Some(InstanceTruth::new(
            Some(opt),
            Some(u * (-1.0f64).exp()),
            None,
        ))
    } else {
        None
    };
    Ok(ProblemInstance::new(
        "pmeans",
        dom,
        Convexity::Convex,
        truth,
        Arc::new(PMeans { demands, u }),
    ))
}
