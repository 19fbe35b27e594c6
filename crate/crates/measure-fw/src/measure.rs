//! Finitely supported probability measures on a box.
//!
//! Every solver iterate is an atomic measure: a list of atoms (points in the
//! box) with nonnegative weights on the simplex. Values are immutable after
//! construction; all operations are pure and return new measures.

use crate::domain::{euclidean, lex_cmp, BoxDomain, Point};
use crate::error::{FwError, Result};
use rand::Rng;

/// Default tolerance under which two atom locations are considered the same.
pub const DEFAULT_ATOM_TOL: f64 = 1e-9;

/// Slack allowed on the weight normalization invariant.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct AtomicMeasure {
    domain: BoxDomain,
    atoms: Vec<Point>,
    weights: Vec<f64>,
}

impl AtomicMeasure {
    /// Builds a measure from atoms and weights; weights must be nonnegative
    /// and sum to 1 within `1e-9` (they are renormalized to machine
    /// precision). Atoms with exactly zero weight are dropped so the atom
    /// list always equals the support.
    pub fn new(atoms: Vec<Point>, weights: Vec<f64>, domain: BoxDomain) -> Result<Self> {
        if atoms.len() != weights.len() || atoms.is_empty() {
            return Err(FwError::argument(
                "atoms and weights must be nonempty lists of equal length",
            ));
        }
        for a in &atoms {
            domain.check_contains(a)?;
        }
        let mut sum = 0.0;
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(FwError::argument(format!("negative or non-finite weight {w}")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(FwError::argument(format!(
                "weights must sum to 1 (got {sum})"
            )));
        }
        let mut kept_atoms = Vec::with_capacity(atoms.len());
        let mut kept_weights = Vec::with_capacity(weights.len());
        for (a, w) in atoms.into_iter().zip(weights) {
            if w > 0.0 {
                kept_atoms.push(a);
                kept_weights.push(w / sum);
            }
        }
        if kept_atoms.is_empty() {
            return Err(FwError::DegenerateMeasure);
        }
        Ok(Self {
            domain,
            atoms: kept_atoms,
            weights: kept_weights,
        })
    }

    /// Unit point mass at `x`.
    pub fn dirac(x: Point, domain: BoxDomain) -> Result<Self> {
        domain.check_contains(&x)?;
        Ok(Self {
            domain,
            atoms: vec![x],
            weights: vec![1.0],
        })
    }

    /// Dirac at the box center; the default initial iterate.
    pub fn center_dirac(domain: &BoxDomain) -> Self {
        Self::dirac(domain.center(), domain.clone()).expect("center lies in the box")
    }

    /// Evenly spaced atom cloud with equal weights, `per_dim` points per
    /// coordinate (endpoints included). Used to stand in for continuous
    /// measures, which this representation cannot hold exactly.
    pub fn grid_cloud(domain: &BoxDomain, per_dim: usize) -> Result<Self> {
        if per_dim < 2 {
            return Err(FwError::argument("grid cloud needs at least 2 points per dim"));
        }
        let d = domain.dim();
        let n = per_dim.pow(d as u32);
        let mut atoms = Vec::with_capacity(n);
        for idx in 0..n {
            let mut rem = idx;
            let mut p = Vec::with_capacity(d);
            for c in 0..d {
                let j = rem % per_dim;
                rem /= per_dim;
                let lo = domain.lower()[c];
                let hi = domain.upper()[c];
                p.push(lo + (hi - lo) * j as f64 / (per_dim - 1) as f64);
            }
            atoms.push(p);
        }
        let w = vec![1.0 / n as f64; n];
        Self::new(atoms, w, domain.clone())
    }

    /// I.i.d. uniform atom cloud with equal weights; approximates a
    /// continuous uniform initial measure.
    pub fn sampled_cloud(domain: &BoxDomain, n: usize, rng: &mut impl Rng) -> Result<Self> {
        if n == 0 {
            return Err(FwError::argument("cloud needs at least one atom"));
        }
        let d = domain.dim();
        let atoms = (0..n)
            .map(|_| {
                (0..d)
                    .map(|c| rng.random_range(domain.lower()[c]..=domain.upper()[c]))
                    .collect()
            })
            .collect();
        Self::new(atoms, vec![1.0 / n as f64; n], domain.clone())
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    /// Checks the representation invariants; solvers call this every iteration.
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(FwError::argument(format!(
                "weight sum drifted to {sum}"
            )));
        }
        if self.weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(FwError::argument("negative weight"));
        }
        for a in &self.atoms {
            self.domain.check_contains(a)?;
        }
        Ok(())
    }

    fn check_same_domain(&self, other: &Self) -> Result<()> {
        if self.domain != other.domain {
            return Err(FwError::argument("measures live on different domains"));
        }
        Ok(())
    }

    /// Convex combination `(1-t)*self + t*other`; the recursion step of every
    /// Frank-Wolfe variant. Atoms closer than [`DEFAULT_ATOM_TOL`] merge.
    pub fn mix(&self, other: &Self, t: f64) -> Result<Self> {
        self.check_same_domain(other)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(FwError::argument(format!("mix step {t} outside [0, 1]")));
        }
        let mut atoms = Vec::with_capacity(self.atoms.len() + other.atoms.len());
        let mut weights = Vec::with_capacity(atoms.capacity());
        for (a, w) in self.iter() {
            atoms.push(a.clone());
            weights.push((1.0 - t) * w);
        }
        for (a, w) in other.iter() {
            atoms.push(a.clone());
            weights.push(t * w);
        }
        Self {
            domain: self.domain.clone(),
            atoms,
            weights,
        }
        .consolidate(DEFAULT_ATOM_TOL, 0.0)
    }

    /// Total variation distance `sup_A |mu(A) - nu(A)|`; for atomic measures
    /// this is half the L1 distance of weights over the union support, with
    /// atoms matched up to [`DEFAULT_ATOM_TOL`]. Lies in [0, 1].
    pub fn tv_distance(&self, other: &Self) -> Result<f64> {
        self.check_same_domain(other)?;
        let mut pts: Vec<(&Point, f64, f64)> = Vec::with_capacity(self.atoms.len() + other.atoms.len());
        for (a, w) in self.iter() {
            pts.push((a, w, 0.0));
        }
        'outer: for (b, v) in other.iter() {
            for entry in pts.iter_mut() {
                if euclidean(entry.0, b) <= DEFAULT_ATOM_TOL {
                    entry.2 += v;
                    continue 'outer;
                }
            }
            pts.push((b, 0.0, v));
        }
        Ok(0.5 * pts.iter().map(|(_, w, v)| (w - v).abs()).sum::<f64>())
    }

    /// Mass of the closed Euclidean ball `B(center, radius)`.
    pub fn ball_mass(&self, center: &[f64], radius: f64) -> Result<f64> {
        if !(radius >= 0.0) {
            return Err(FwError::argument(format!("negative ball radius {radius}")));
        }
        Ok(self
            .iter()
            .filter(|(a, _)| euclidean(a, center) <= radius)
            .map(|(_, w)| w)
            .sum())
    }

    /// Expectation `sum_i w_i f(x_i)`.
    pub fn expect(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.iter().map(|(a, w)| w * f(a)).sum()
    }

    /// Merges atoms within `atom_tol` (weight-weighted centroid), drops atoms
    /// with weight below `weight_tol`, renormalizes. `weight_tol = 0` keeps
    /// the convex-combination structure exact (no pruning).
    pub fn consolidate(&self, atom_tol: f64, weight_tol: f64) -> Result<Self> {
        if !(atom_tol >= 0.0) {
            return Err(FwError::argument("atom_tol must be nonnegative"));
        }
        if !(0.0..1.0).contains(&weight_tol) {
            return Err(FwError::argument("weight_tol must lie in [0, 1)"));
        }
        // Deterministic clustering: sweep atoms in lexicographic order and
        // merge each into the first cluster whose centroid is within tol.
        let mut order: Vec<usize> = (0..self.atoms.len()).collect();
        order.sort_by(|&i, &j| lex_cmp(&self.atoms[i], &self.atoms[j]));
        let mut centroids: Vec<Point> = Vec::new();
        let mut masses: Vec<f64> = Vec::new();
        for &i in &order {
            let (a, w) = (&self.atoms[i], self.weights[i]);
            let mut placed = false;
            for (c, m) in centroids.iter_mut().zip(masses.iter_mut()) {
                if euclidean(c, a) <= atom_tol {
                    let total = *m + w;
                    if total > 0.0 {
                        for (cc, aa) in c.iter_mut().zip(a) {
                            *cc = (*cc * *m + aa * w) / total;
                        }
                    }
                    *m = total;
                    placed = true;
                    break;
                }
            }
            if !placed {
                centroids.push(a.clone());
                masses.push(w);
            }
        }
        let mut atoms = Vec::with_capacity(centroids.len());
        let mut weights = Vec::with_capacity(centroids.len());
        let mut kept = 0.0;
        for (c, m) in centroids.into_iter().zip(masses) {
            if m > 0.0 && m >= weight_tol {
                kept += m;
                atoms.push(self.domain.clamp(&c));
                weights.push(m);
            }
        }
        if atoms.is_empty() || kept <= 0.0 {
            return Err(FwError::DegenerateMeasure);
        }
        for w in &mut weights {
            *w /= kept;
        }
        Ok(Self {
            domain: self.domain.clone(),
            atoms,
            weights,
        })
    }

    /// Index of an existing atom within `tol` of `x`, if any (first in
    /// storage order).
    pub fn find_atom(&self, x: &[f64], tol: f64) -> Option<usize> {
        self.atoms.iter().position(|a| euclidean(a, x) <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> BoxDomain {
        BoxDomain::interval(0.0, 1.0).unwrap()
    }

    fn meas(atoms: &[f64], weights: &[f64]) -> AtomicMeasure {
        AtomicMeasure::new(
            atoms.iter().map(|&x| vec![x]).collect(),
            weights.to_vec(),
            unit(),
        )
        .unwrap()
    }

    #[test]
    fn dirac_basics() {
        let mu = AtomicMeasure::dirac(vec![0.5], unit()).unwrap();
        assert_eq!(mu.atoms(), &[vec![0.5]]);
        assert_eq!(mu.weights(), &[1.0]);
        assert!(matches!(
            AtomicMeasure::dirac(vec![1.5], unit()),
            Err(FwError::OutsideDomain { .. })
        ));
        // Boundary of a 2-d box is feasible.
        let sq = BoxDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let nu = AtomicMeasure::dirac(vec![-1.0, 1.0], sq).unwrap();
        assert_eq!(nu.atoms(), &[vec![-1.0, 1.0]]);
    }

    #[test]
    fn mix_endpoints_and_interior() {
        let d0 = AtomicMeasure::dirac(vec![0.0], unit()).unwrap();
        let d1 = AtomicMeasure::dirac(vec![1.0], unit()).unwrap();
        let full = d0.mix(&d1, 1.0).unwrap();
        assert_eq!(full.atoms(), &[vec![1.0]]);
        let zero = d0.mix(&d1, 0.0).unwrap();
        assert_eq!(zero.atoms(), &[vec![0.0]]);
        // mix(delta_1, delta_0, 2/3) -> weights {1/3 on 1, 2/3 on 0}
        let mu2 = d1.mix(&d0, 2.0 / 3.0).unwrap();
        let w0 = mu2.weights()[mu2.find_atom(&[0.0], 0.0).unwrap()];
        let w1 = mu2.weights()[mu2.find_atom(&[1.0], 0.0).unwrap()];
        assert!((w0 - 2.0 / 3.0).abs() < 1e-15);
        assert!((w1 - 1.0 / 3.0).abs() < 1e-15);
        assert!(d0.mix(&d1, 1.5).is_err());
        let other = AtomicMeasure::dirac(vec![0.5], BoxDomain::interval(0.0, 2.0).unwrap()).unwrap();
        assert!(d0.mix(&other, 0.5).is_err());
    }

    #[test]
    fn tv_examples() {
        let d0 = AtomicMeasure::dirac(vec![0.0], unit()).unwrap();
        let d1 = AtomicMeasure::dirac(vec![1.0], unit()).unwrap();
        let half = meas(&[0.0, 1.0], &[0.5, 0.5]);
        assert_eq!(d0.tv_distance(&d0).unwrap(), 0.0);
        assert_eq!(d0.tv_distance(&d1).unwrap(), 1.0);
        assert!((half.tv_distance(&d0).unwrap() - 0.5).abs() < 1e-15);
    }

    /// Brute-force sup over all subsets of the union support; the defining
    /// formula of the TV distance for atomic measures.
    fn tv_brute(mu: &AtomicMeasure, nu: &AtomicMeasure) -> f64 {
        let mut pts: Vec<Vec<f64>> = mu.atoms().to_vec();
        for a in nu.atoms() {
            if !pts.iter().any(|p| euclidean(p, a) <= DEFAULT_ATOM_TOL) {
                pts.push(a.clone());
            }
        }
        let w = |m: &AtomicMeasure, p: &[f64]| -> f64 {
            m.find_atom(p, DEFAULT_ATOM_TOL).map_or(0.0, |i| m.weights()[i])
        };
        let n = pts.len();
        assert!(n <= 16, "brute force TV limited to small unions");
        let mut best: f64 = 0.0;
        for mask in 0u32..(1 << n) {
            let mut dm = 0.0;
            for (i, p) in pts.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    dm += w(mu, p) - w(nu, p);
                }
            }
            best = best.max(dm.abs());
        }
        best
    }

    #[test]
    fn tv_matches_subset_sup() {
        let d0 = AtomicMeasure::dirac(vec![0.0], unit()).unwrap();
        let d1 = AtomicMeasure::dirac(vec![1.0], unit()).unwrap();
        let half = meas(&[0.0, 1.0], &[0.5, 0.5]);
        let skew = meas(&[0.0, 0.25, 1.0], &[0.2, 0.5, 0.3]);
        for (a, b) in [(&d0, &d1), (&half, &d0), (&skew, &half), (&skew, &d1)] {
            assert!((a.tv_distance(b).unwrap() - tv_brute(a, b)).abs() < 1e-12);
        }
    }

    #[test]
    fn ball_mass_examples() {
        let dc = AtomicMeasure::dirac(vec![0.5], unit()).unwrap();
        for t in [0.0, 0.1, 2.0] {
            assert_eq!(dc.ball_mass(&[0.5], t).unwrap(), 1.0);
        }
        let half = meas(&[0.0, 1.0], &[0.5, 0.5]);
        assert_eq!(half.ball_mass(&[0.5], 0.4).unwrap(), 0.0);
        // Closed ball: boundary atoms count.
        assert_eq!(half.ball_mass(&[0.5], 0.5).unwrap(), 1.0);
        assert!(half.ball_mass(&[0.5], -0.1).is_err());
    }

    #[test]
    fn expect_examples() {
        let d = AtomicMeasure::dirac(vec![0.3], unit()).unwrap();
        assert!((d.expect(|x| x[0]) - 0.3).abs() < 1e-15);
        let half = meas(&[0.0, 1.0], &[0.5, 0.5]);
        assert!((half.expect(|x| x[0] * x[0]) - 0.5).abs() < 1e-15);
        assert!((half.expect(|_| 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn consolidate_merges_prunes_renormalizes() {
        let mu = meas(&[0.5, 0.5 + 1e-12], &[0.4, 0.6]);
        let c = mu.consolidate(1e-9, 0.0).unwrap();
        assert_eq!(c.atom_count(), 1);
        assert!((c.weights()[0] - 1.0).abs() < 1e-15);

        let nu = meas(&[0.0, 1.0], &[1e-7, 1.0 - 1e-7]);
        assert_eq!(nu.consolidate(0.0, 0.0).unwrap().atom_count(), 2);
        let pruned = nu.consolidate(0.0, 1e-6).unwrap();
        assert_eq!(pruned.atoms(), &[vec![1.0]]);
        assert_eq!(pruned.weights(), &[1.0]);

        // Dropping everything is an error.
        let tiny = meas(&[0.2, 0.8], &[0.5, 0.5]);
        assert!(matches!(
            tiny.consolidate(0.0, 0.9),
            Err(FwError::DegenerateMeasure)
        ));
    }

    #[test]
    fn harmonic_mix_fold_reproduces_product_weights() {
        // Folding mix over Diracs with eta_k = 2/(k+2): the atom added at
        // step j must end with weight eta_j * prod_{i=j+1..k} (1 - eta_i).
        let dom = unit();
        let xs: Vec<f64> = (0..8).map(|j| j as f64 / 10.0).collect();
        let mut mu = AtomicMeasure::dirac(vec![0.95], dom.clone()).unwrap();
        let k_last = xs.len() - 1;
        for (k, &x) in xs.iter().enumerate() {
            let eta = 2.0 / (k as f64 + 2.0);
            mu = mu.mix(&AtomicMeasure::dirac(vec![x], dom.clone()).unwrap(), eta).unwrap();
        }
        for (j, &x) in xs.iter().enumerate() {
            let eta_j = 2.0 / (j as f64 + 2.0);
            let mut expect = eta_j;
            for i in (j + 1)..=k_last {
                expect *= 1.0 - 2.0 / (i as f64 + 2.0);
            }
            let idx = mu.find_atom(&[x], 1e-12).unwrap();
            assert!((mu.weights()[idx] - expect).abs() < 1e-12, "atom {j}");
        }
    }

    proptest! {
        #[test]
        fn prop_normalization_and_tv_axioms(
            xs in proptest::collection::vec(0.0f64..=1.0, 1..6),
            ys in proptest::collection::vec(0.0f64..=1.0, 1..6),
            ws in proptest::collection::vec(0.01f64..1.0, 6),
            vs in proptest::collection::vec(0.01f64..1.0, 6),
            zs in proptest::collection::vec(0.0f64..=1.0, 1..6),
            us in proptest::collection::vec(0.01f64..1.0, 6),
            t in 0.0f64..=1.0,
        ) {
            let norm = |raw: &[f64], n: usize| -> Vec<f64> {
                let s: f64 = raw[..n].iter().sum();
                raw[..n].iter().map(|w| w / s).collect()
            };
            let mu = meas(&xs, &norm(&ws, xs.len()));
            let nu = meas(&ys, &norm(&vs, ys.len()));
            let rho = meas(&zs, &norm(&us, zs.len()));

            // Normalization after operations.
            let mixed = mu.mix(&nu, t).unwrap();
            prop_assert!((mixed.weights().iter().sum::<f64>() - 1.0).abs() <= WEIGHT_SUM_TOL);
            let cons = mu.consolidate(1e-3, 0.0).unwrap();
            prop_assert!((cons.weights().iter().sum::<f64>() - 1.0).abs() <= WEIGHT_SUM_TOL);

            // TV metric axioms.
            let dmn = mu.tv_distance(&nu).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&dmn));
            prop_assert!(mu.tv_distance(&mu).unwrap() <= 1e-12);
            prop_assert!((dmn - nu.tv_distance(&mu).unwrap()).abs() <= 1e-12);
            let dmr = mu.tv_distance(&rho).unwrap();
            let drn = rho.tv_distance(&nu).unwrap();
            prop_assert!(dmn <= dmr + drn + 1e-12);

            // ball_mass monotone in radius, total mass at the diameter.
            let c = [0.5];
            let m1 = mu.ball_mass(&c, 0.2).unwrap();
            let m2 = mu.ball_mass(&c, 0.4).unwrap();
            prop_assert!(m1 <= m2 + 1e-15);
            prop_assert!((mu.ball_mass(&c, mu.domain().diameter()).unwrap() - 1.0).abs() < 1e-12);

            // expect linear in f and in mixing.
            let f = |x: &[f64]| 3.0 * x[0] - 1.0;
            let g = |x: &[f64]| x[0] * x[0];
            let lhs = mu.expect(|x| f(x) + 2.0 * g(x));
            let rhs = mu.expect(f) + 2.0 * mu.expect(g);
            prop_assert!((lhs - rhs).abs() < 1e-12);
            let mix_expect = mixed.expect(f);
            let direct = (1.0 - t) * mu.expect(f) + t * nu.expect(f);
            prop_assert!((mix_expect - direct).abs() < 1e-9);
        }
    }
}
