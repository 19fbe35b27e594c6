//! Cumulative-residual-entropy maximization: minimize the negated CRE
//! J(mu) = int S log S over the survival function S(t) = mu((t, inf)).
//!
//! J is evaluated exactly, piecewise over atom breakpoints (0 log 0 := 0).
//! The influence function is finite only at points up to the current maximum
//! support: adding mass strictly above it changes J at an unbounded rate, so
//! the evaluator returns -inf there and the subsolver surfaces an oracle
//! error. Runs must therefore start with mass at the upper endpoint.

use crate::domain::BoxDomain;
use crate::error::{FwError, Result};
use crate::measure::AtomicMeasure;
use crate::oracle::{Convexity, Functional, InstanceTruth, PointFn, ProblemInstance};
use std::sync::Arc;

fn xlnx(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        s * s.ln()
    }
}

/// Sorted atom positions with the survival value on each gap segment
/// [x_(s), x_(s+1)).
fn survival_segments(mu: &AtomicMeasure) -> (Vec<f64>, Vec<f64>) {
    let mut pw: Vec<(f64, f64)> = mu.iter().map(|(a, w)| (a[0], w)).collect();
    pw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut positions = Vec::with_capacity(pw.len());
    let mut below = Vec::with_capacity(pw.len());
    let mut cum = 0.0;
    for (x, w) in &pw {
        cum += w;
        match positions.last() {
            Some(&last) if *x == last => {
                *below.last_mut().unwrap() = cum;
            }
            _ => {
                positions.push(*x);
                below.push(cum);
            }
        }
    }
    // Survival on [positions[s], positions[s+1]) is 1 - mass at <= positions[s].
    let survival = below.iter().map(|b| (1.0 - b).max(0.0)).collect();
    (positions, survival)
}

struct Cre;

impl Functional for Cre {
    fn name(&self) -> &str {
        "cre"
    }

    fn objective(&self, mu: &AtomicMeasure) -> Result<f64> {
        let (positions, survival) = survival_segments(mu);
        let mut j = 0.0;
        for s in 0..positions.len().saturating_sub(1) {
            j += (positions[s + 1] - positions[s]) * xlnx(survival[s]);
        }
        Ok(j)
    }

    fn influence_fn(&self, mu: &AtomicMeasure) -> Result<PointFn> {
        let (positions, survival) = survival_segments(mu);
        let x_first = positions[0];
        let x_last = *positions.last().unwrap();
        Ok(Box::new(move |x: &[f64]| {
            let x = x[0];
            if x > x_last {
                return f64::NEG_INFINITY;
            }
            // Leading segment [0, x_first) where S = 1: integrand reduces to
            // I(x > t) - 1, contributing -(x_first - x) when x < x_first.
            let mut h = -(x_first - x).max(0.0);
            for s in 0..positions.len() - 1 {
                let (lo, hi) = (positions[s], positions[s + 1]);
                let sv = survival[s];
                if sv <= 0.0 {
                    continue;
                }
                let indicator_len = (x - lo).clamp(0.0, hi - lo);
                h += (sv.ln() + 1.0) * (indicator_len - sv * (hi - lo));
            }
            h
        }))
    }

    fn has_exact_influence(&self) -> bool {
        true
    }
}

/// Builds the CRE instance on [a, b] with 0 < a < b. The optimum places mass
/// 1/e at b and the rest at a: pointwise s ln s >= -1/e with equality iff
/// s = 1/e, so the flat survival level 1/e on (a, b) is the unique minimizer.
pub fn build_cre(a: f64, b: f64) -> Result<ProblemInstance> {
    if !(a > 0.0) {
        return Err(FwError::argument("CRE interval must satisfy a > 0"));
    }
    let dom = BoxDomain::interval(a, b)?;
    let p_top = (-1.0f64).exp();
    let optimum = AtomicMeasure::new(
        vec![vec![a], vec![b]],
        vec![1.0 - p_top, p_top],
        dom.clone(),
    )?;
    let truth = InstanceTruth::new(Some(optimum), Some(-(b - a) * p_top), None);
    Ok(ProblemInstance::new(
        "cre",
        dom,
        Convexity::Convex,
        Some(truth),
        Arc::new(Cre),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst() -> ProblemInstance {
        build_cre(1.0, 2.0).unwrap()
    }

    fn half_half(inst: &ProblemInstance) -> AtomicMeasure {
        AtomicMeasure::new(
            vec![vec![1.0], vec![2.0]],
            vec![0.5, 0.5],
            inst.domain().clone(),
        )
        .unwrap()
    }

    #[test]
    fn objective_values() {
        let inst = inst();
        // Even mixture: S = 1/2 on (1, 2), J = (1/2) ln(1/2) = -ln2/2.
        let j = inst.objective(&half_half(&inst)).unwrap();
        assert!((j - 0.5 * 0.5f64.ln()).abs() < 1e-15);
        assert!((j + 0.346_574).abs() < 1e-6);
        // Degenerate survival: S is 0/1 everywhere.
        let da = AtomicMeasure::dirac(vec![1.0], inst.domain().clone()).unwrap();
        assert_eq!(inst.objective(&da).unwrap(), 0.0);
        // Optimal level 1/e: J = -(b - a)/e.
        let opt = inst.truth().unwrap().optimal_measure.clone().unwrap();
        let j_opt = inst.objective(&opt).unwrap();
        assert!((j_opt + (-1.0f64).exp()).abs() < 1e-15);
        assert!(j_opt < j);
    }

    #[test]
    fn influence_vanishes_exactly_at_the_optimum() {
        let inst = inst();
        let opt = inst.truth().unwrap().optimal_measure.clone().unwrap();
        let h = inst.influence_fn(&opt).unwrap();
        for x in [1.0, 1.25, 1.5, 1.9, 2.0] {
            assert!(h(&[x]).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn even_mixture_is_not_stationary() {
        // h at the even mixture is (1 - ln 2)(x - 3/2); negative below the
        // midpoint, so the even mixture cannot be optimal.
        let inst = inst();
        let h = inst.influence_fn(&half_half(&inst)).unwrap();
        let c = 1.0 - std::f64::consts::LN_2;
        for x in [1.0, 1.2, 1.5, 1.8, 2.0] {
            assert!((h(&[x]) - c * (x - 1.5)).abs() < 1e-12, "x={x}");
        }
        assert!(h(&[1.0]) < -0.15);
    }

    #[test]
    fn influence_is_unbounded_above_support() {
        let inst = inst();
        let da = AtomicMeasure::dirac(vec![1.5], inst.domain().clone()).unwrap();
        let h = inst.influence_fn(&da).unwrap();
        assert!(h(&[1.6]).is_infinite() && h(&[1.6]) < 0.0);
        assert!(h(&[1.4]).is_finite());
    }

    #[test]
    fn rejects_nonpositive_lower_end() {
        assert!(build_cre(0.0, 1.0).is_err());
        assert!(build_cre(-1.0, 1.0).is_err());
    }

    #[test]
    fn fd_derivative_confirms_influence_sign_at_even_mixture() {
        let inst = inst();
        let mu = half_half(&inst);
        let fd = inst.fd_influence(&mu, &[1.0], 1e-6).unwrap();
        let h = inst.influence_fn(&mu).unwrap()(&[1.0]);
        assert!((fd - h).abs() < 1e-4, "fd {fd} vs exact {h}");
    }
}
