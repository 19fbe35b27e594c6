//! Global minimization over the box: the Frank-Wolfe subproblem engine.
//!
//! Uniform grid scan, keep the best few candidates, refine each locally
//! (golden section in 1-d, Nelder-Mead otherwise), return the best point.
//! Deterministic for fixed inputs; ties break to the lexicographically
//! smallest minimizer.

use crate::domain::{lex_cmp, BoxDomain, Point};
use crate::error::{FwError, Result};

#[derive(Debug, Clone)]
pub struct SubsolverConfig {
    pub grid_points_per_dim: usize,
    pub refine_candidates: usize,
    pub refine_xtol: f64,
    pub refine_max_evals: usize,
}

impl SubsolverConfig {
    /// Defaults: 64 grid points for d = 1, 32 for d = 2 or 3.
    pub fn for_dim(d: usize) -> Self {
        Self {
            grid_points_per_dim: if d <= 1 { 64 } else { 32 },
            refine_candidates: 5,
            refine_xtol: 1e-8,
            refine_max_evals: 400,
        }
    }

    /// Coarse configuration used for epsilon-inexact subproblem solves:
    /// a quarter of the grid resolution and no local refinement.
    pub fn coarsened(&self) -> Self {
        Self {
            grid_points_per_dim: (self.grid_points_per_dim / 4).max(2),
            refine_candidates: self.refine_candidates,
            refine_xtol: self.refine_xtol,
            refine_max_evals: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points_per_dim < 2 {
            return Err(FwError::argument("grid_points_per_dim must be >= 2"));
        }
        if self.refine_candidates < 1 {
            return Err(FwError::argument("refine_candidates must be >= 1"));
        }
        if !(self.refine_xtol > 0.0) {
            return Err(FwError::argument("refine_xtol must be positive"));
        }
        Ok(())
    }
}

impl Default for SubsolverConfig {
    fn default() -> Self {
        Self::for_dim(1)
    }
}

#[derive(Debug, Clone)]
pub struct SubsolverResult {
    pub minimizer: Point,
    pub min_value: f64,
    pub evals: usize,
}

struct Eval<'a, F: Fn(&[f64]) -> f64> {
    f: &'a F,
    count: usize,
}

impl<'a, F: Fn(&[f64]) -> f64> Eval<'a, F> {
    fn call(&mut self, x: &[f64]) -> Result<f64> {
        self.count += 1;
        let v = (self.f)(x);
        if !v.is_finite() {
            return Err(FwError::Oracle { point: x.to_vec() });
        }
        Ok(v)
    }
}

/// Approximate global minimizer of `f` over the box.
pub fn minimize_over_box<F: Fn(&[f64]) -> f64>(
    f: &F,
    dom: &BoxDomain,
    cfg: &SubsolverConfig,
) -> Result<SubsolverResult> {
    cfg.validate()?;
    let d = dom.dim();
    let n = cfg.grid_points_per_dim;
    let mut ev = Eval { f, count: 0 };

    let coord = |c: usize, j: usize| -> f64 {
        let lo = dom.lower()[c];
        let hi = dom.upper()[c];
        lo + (hi - lo) * j as f64 / (n - 1) as f64
    };

    // Full lexicographic grid scan.
    let total = n.pow(d as u32);
    let mut scanned: Vec<(Point, f64)> = Vec::with_capacity(total.min(1 << 16));
    for idx in 0..total {
        let mut rem = idx;
        let mut p = Vec::with_capacity(d);
        for c in 0..d {
            p.push(coord(c, rem % n));
            rem /= n;
        }
        let v = ev.call(&p)?;
        scanned.push((p, v));
    }
    scanned.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| lex_cmp(&a.0, &b.0)));
    scanned.truncate(cfg.refine_candidates);

    let spacing: Vec<f64> = (0..d)
        .map(|c| (dom.upper()[c] - dom.lower()[c]) / (n - 1) as f64)
        .collect();

    // Refined points compete with their own grid seeds, so the result is
    // never worse than the pure grid scan.
    let mut candidates: Vec<(Point, f64)> = scanned.clone();
    if cfg.refine_max_evals > 0 {
        for (p, _) in &scanned {
            let refined = if d == 1 {
                golden_section(&mut ev, dom, p[0], spacing[0], cfg)?
            } else {
                nelder_mead(&mut ev, dom, p, &spacing, cfg)?
            };
            candidates.push(refined);
        }
    }
    let best = candidates
        .into_iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| lex_cmp(&a.0, &b.0)))
        .expect("candidate list is nonempty");

    Ok(SubsolverResult {
        minimizer: best.0,
        min_value: best.1,
        evals: ev.count,
    })
}

fn golden_section<F: Fn(&[f64]) -> f64>(
    ev: &mut Eval<F>,
    dom: &BoxDomain,
    seed: f64,
    spacing: f64,
    cfg: &SubsolverConfig,
) -> Result<(Point, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut a = (seed - spacing).max(dom.lower()[0]);
    let mut b = (seed + spacing).min(dom.upper()[0]);
    let mut best = (vec![seed], ev.call(&[seed])?);
    let mut budget = cfg.refine_max_evals;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = ev.call(&[x1])?;
    let mut f2 = ev.call(&[x2])?;
    budget = budget.saturating_sub(3);
    while (b - a) > cfg.refine_xtol && budget > 0 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = ev.call(&[x1])?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = ev.call(&[x2])?;
        }
        budget -= 1;
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v < best.1 || (v == best.1 && x < best.0[0]) {
            best = (vec![x], v);
        }
    }
    Ok(best)
}

fn nelder_mead<F: Fn(&[f64]) -> f64>(
    ev: &mut Eval<F>,
    dom: &BoxDomain,
    seed: &[f64],
    spacing: &[f64],
    cfg: &SubsolverConfig,
) -> Result<(Point, f64)> {
    let d = seed.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut simplex: Vec<(Point, f64)> = Vec::with_capacity(d + 1);
    let v0 = ev.call(seed)?;
    simplex.push((seed.to_vec(), v0));
    for c in 0..d {
        let mut p = seed.to_vec();
        // Step towards the interior when the seed sits on the upper face.
        p[c] = if p[c] + spacing[c] <= dom.upper()[c] {
            p[c] + spacing[c]
        } else {
            p[c] - spacing[c]
        };
        let p = dom.clamp(&p);
        let v = ev.call(&p)?;
        simplex.push((p, v));
    }
    let mut budget = cfg.refine_max_evals.saturating_sub(d + 1);
    loop {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| lex_cmp(&a.0, &b.0)));
        let diam = simplex
            .iter()
            .skip(1)
            .map(|(p, _)| crate::domain::euclidean(p, &simplex[0].0))
            .fold(0.0f64, f64::max);
        if diam <= cfg.refine_xtol || budget == 0 {
            break;
        }
        let centroid: Point = (0..d)
            .map(|c| simplex[..d].iter().map(|(p, _)| p[c]).sum::<f64>() / d as f64)
            .collect();
        let worst = simplex[d].clone();
        let reflect: Point = dom.clamp(
            &(0..d)
                .map(|c| centroid[c] + alpha * (centroid[c] - worst.0[c]))
                .collect::<Point>(),
        );
        let fr = ev.call(&reflect)?;
        budget = budget.saturating_sub(1);
        if fr < simplex[0].1 {
            let expand: Point = dom.clamp(
                &(0..d)
                    .map(|c| centroid[c] + gamma * (reflect[c] - centroid[c]))
                    .collect::<Point>(),
            );
            let fe = ev.call(&expand)?;
            budget = budget.saturating_sub(1);
            simplex[d] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (reflect, fr);
        } else {
            let contract: Point = dom.clamp(
                &(0..d)
                    .map(|c| centroid[c] + rho * (worst.0[c] - centroid[c]))
                    .collect::<Point>(),
            );
            let fc = ev.call(&contract)?;
            budget = budget.saturating_sub(1);
            if fc < worst.1 {
                simplex[d] = (contract, fc);
            } else {
                // Shrink towards the best vertex.
                for i in 1..=d {
                    let p: Point = dom.clamp(
                        &(0..d)
                            .map(|c| simplex[0].0[c] + sigma * (simplex[i].0[c] - simplex[0].0[c]))
                            .collect::<Point>(),
                    );
                    let v = ev.call(&p)?;
                    simplex[i] = (p, v);
                }
                budget = budget.saturating_sub(d);
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| lex_cmp(&a.0, &b.0)));
    Ok(simplex[0].clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> BoxDomain {
        BoxDomain::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn linear_argmin_hits_exact_boundary() {
        // The influence of the calibration instance at delta_0 is -0.6 x.
        let f = |x: &[f64]| -0.6 * x[0];
        let res = minimize_over_box(&f, &unit(), &SubsolverConfig::for_dim(1)).unwrap();
        assert_eq!(res.minimizer, vec![1.0]);
        assert_eq!(res.min_value, -0.6);
    }

    #[test]
    fn convex_quadratic_found_to_tolerance() {
        let f = |x: &[f64]| (x[0] - 0.25) * (x[0] - 0.25);
        let cfg = SubsolverConfig::for_dim(1);
        let res = minimize_over_box(&f, &unit(), &cfg).unwrap();
        assert!((res.minimizer[0] - 0.25).abs() <= 1e-6);
        assert!(res.min_value >= 0.0 && res.min_value < 1e-12);
        // Within 10x the refinement tolerance of the analytic argmin.
        assert!((res.minimizer[0] - 0.25).abs() <= 10.0 * cfg.refine_xtol);
    }

    #[test]
    fn symmetric_tie_breaks_lexicographically() {
        // h at the D-optimal optimum: 1 - x^2 on [-1, 1]; both endpoints
        // attain the minimum 0, the lexicographically smaller one wins.
        let f = |x: &[f64]| 1.0 - x[0] * x[0];
        let dom = BoxDomain::interval(-1.0, 1.0).unwrap();
        let res = minimize_over_box(&f, &dom, &SubsolverConfig::for_dim(1)).unwrap();
        assert_eq!(res.minimizer, vec![-1.0]);
        assert_eq!(res.min_value, 0.0);
    }

    #[test]
    fn two_dim_quadratic() {
        let dom = BoxDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.4).powi(2);
        let res = minimize_over_box(&f, &dom, &SubsolverConfig::for_dim(2)).unwrap();
        assert!((res.minimizer[0] - 0.3).abs() < 1e-4);
        assert!((res.minimizer[1] + 0.4).abs() < 1e-4);
    }

    #[test]
    fn never_worse_than_grid_and_deterministic() {
        let f = |x: &[f64]| (5.0 * x[0]).sin() + 0.5 * x[0];
        let cfg = SubsolverConfig::for_dim(1);
        let res1 = minimize_over_box(&f, &unit(), &cfg).unwrap();
        let res2 = minimize_over_box(&f, &unit(), &cfg).unwrap();
        assert_eq!(res1.minimizer, res2.minimizer);
        assert_eq!(res1.min_value.to_bits(), res2.min_value.to_bits());
        let n = cfg.grid_points_per_dim;
        let grid_min = (0..n)
            .map(|j| f(&[j as f64 / (n - 1) as f64]))
            .fold(f64::INFINITY, f64::min);
        assert!(res1.min_value <= grid_min);
        assert!(res1.evals > 0);
    }

    #[test]
    fn non_finite_oracle_is_reported_with_point() {
        let f = |x: &[f64]| if x[0] > 0.5 { f64::NEG_INFINITY } else { x[0] };
        let err = minimize_over_box(&f, &unit(), &SubsolverConfig::for_dim(1)).unwrap_err();
        match err {
            FwError::Oracle { point } => assert!(point[0] > 0.5),
            other => panic!("expected oracle error, got {other:?}"),
        }
    }
}
