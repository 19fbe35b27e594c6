//! D-optimal experimental design: minimize det M(mu)^{-1} for the
//! information matrix M(mu) = int f f^T dmu of a regression basis.

use crate::domain::BoxDomain;
use crate::error::{FwError, Result};
use crate::measure::AtomicMeasure;
use crate::oracle::{grid_points, Convexity, Functional, PointFn, ProblemInstance};
use std::sync::Arc;

/// One basis function of the regression model.
pub type BasisFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

struct DOptimal {
    basis: Vec<BasisFn>,
}

impl DOptimal {
    fn feature(&self, x: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|f| f(x)).collect()
    }

    fn info_matrix(&self, mu: &AtomicMeasure) -> Vec<Vec<f64>> {
        let p = self.basis.len();
        let mut m = vec![vec![0.0; p]; p];
        for (a, w) in mu.iter() {
            let fv = self.feature(a);
            for i in 0..p {
                for j in 0..p {
                    m[i][j] += w * fv[i] * fv[j];
                }
            }
        }
        m
    }
}

/// Gauss-Jordan inverse with partial pivoting; returns (inverse, det).
fn invert(mut m: Vec<Vec<f64>>) -> Result<(Vec<Vec<f64>>, f64)> {
    let p = m.len();
    let scale: f64 = m
        .iter()
        .flat_map(|r| r.iter().map(|v| v.abs()))
        .fold(0.0, f64::max)
        .max(1.0);
    let mut inv: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut det = 1.0;
    for col in 0..p {
        let pivot_row = (col..p)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        let pivot = m[pivot_row][col];
        if pivot.abs() <= 1e-13 * scale {
            return Err(FwError::Singular);
        }
        if pivot_row != col {
            m.swap(pivot_row, col);
            inv.swap(pivot_row, col);
            det = -det;
        }
        det *= pivot;
        let inv_pivot = 1.0 / pivot;
        for j in 0..p {
            m[col][j] *= inv_pivot;
            inv[col][j] *= inv_pivot;
        }
        for row in 0..p {
            if row != col {
                let factor = m[row][col];
                if factor != 0.0 {
                    for j in 0..p {
                        m[row][j] -= factor * m[col][j];
                        inv[row][j] -= factor * inv[col][j];
                    }
                }
            }
        }
    }
    Ok((inv, det))
}

impl Functional for DOptimal {
    fn name(&self) -> &str {
        "doptimal"
    }

    fn objective(&self, mu: &AtomicMeasure) -> Result<f64> {
        let (_, det) = invert(self.info_matrix(mu))?;
        if det <= 0.0 {
            return Err(FwError::Singular);
        }
        Ok(1.0 / det)
    }

    fn influence_fn(&self, mu: &AtomicMeasure) -> Result<PointFn> {
        let (minv, det) = invert(self.info_matrix(mu))?;
        if det <= 0.0 {
            return Err(FwError::Singular);
        }
        let p = self.basis.len() as f64;
        let basis: Vec<BasisFn> = self.basis.iter().map(Arc::clone).collect();
        Ok(Box::new(move |x: &[f64]| {
            let fv: Vec<f64> = basis.iter().map(|f| f(x)).collect();
            let mut quad = 0.0;
            for (i, fi) in fv.iter().enumerate() {
                for (j, fj) in fv.iter().enumerate() {
                    quad += fi * minv[i][j] * fj;
                }
            }
            (p - quad) / det
        }))
    }

    fn has_exact_influence(&self) -> bool {
        true
    }
}

/// Determinant of the information matrix; the acceptance harness uses this to
/// assert a trajectory stays inside the region where the smoothness constant
/// was derived.
pub fn information_determinant(basis: &[BasisFn], mu: &AtomicMeasure) -> Result<f64> {
    let d = DOptimal {
        basis: basis.iter().map(Arc::clone).collect(),
    };
    match invert(d.info_matrix(mu)) {
        Ok((_, det)) => Ok(det),
        Err(FwError::Singular) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Builds the D-optimal instance. Basis functions must be linearly
/// independent on the domain; this is checked against a scan-grid Gram
/// matrix at build time.
pub fn build_doptimal(basis: Vec<BasisFn>, dom: BoxDomain) -> Result<ProblemInstance> {
    if basis.is_empty() {
        return Err(FwError::argument("basis must be nonempty"));
    }
    let probe = grid_points(&dom, 17);
    let n = probe.len() as f64;
    let d = DOptimal { basis };
    let mut gram = vec![vec![0.0; d.basis.len()]; d.basis.len()];
    for x in &probe {
        let fv = d.feature(x);
        for i in 0..d.basis.len() {
            for j in 0..d.basis.len() {
                gram[i][j] += fv[i] * fv[j] / n;
            }
        }
    }
    if invert(gram).is_err() {
        return Err(FwError::argument(
            "basis functions are linearly dependent on the domain",
        ));
    }
    Ok(ProblemInstance::new(
        "doptimal",
        dom,
        Convexity::Convex,
        None,
        Arc::new(d),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::InstanceTruth;

    fn linear_inst() -> ProblemInstance {
        let basis: Vec<BasisFn> = vec![Arc::new(|_| 1.0), Arc::new(|x: &[f64]| x[0])];
        build_doptimal(basis, BoxDomain::interval(-1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn optimum_value_and_influence() {
        let inst = linear_inst();
        let mu = AtomicMeasure::new(
            vec![vec![-1.0], vec![1.0]],
            vec![0.5, 0.5],
            inst.domain().clone(),
        )
        .unwrap();
        assert!((inst.objective(&mu).unwrap() - 1.0).abs() < 1e-14);
        let h = inst.influence_fn(&mu).unwrap();
        for x in [-1.0, -0.3, 0.0, 0.6, 1.0] {
            assert!((h(&[x]) - (1.0 - x * x)).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn rank_one_design_is_singular() {
        let inst = linear_inst();
        let mu = AtomicMeasure::dirac(vec![0.0], inst.domain().clone()).unwrap();
        assert!(matches!(inst.objective(&mu), Err(FwError::Singular)));
        assert!(matches!(inst.influence_fn(&mu), Err(FwError::Singular)));
    }

    #[test]
    fn dependent_basis_rejected() {
        let basis: Vec<BasisFn> = vec![
            Arc::new(|x: &[f64]| x[0]),
            Arc::new(|x: &[f64]| 2.0 * x[0]),
        ];
        assert!(build_doptimal(basis, BoxDomain::interval(-1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn truth_consistency_when_attached() {
        let mut inst = linear_inst();
        let mu = AtomicMeasure::new(
            vec![vec![-1.0], vec![1.0]],
            vec![0.5, 0.5],
            inst.domain().clone(),
        )
        .unwrap();
        inst.set_truth(Some(InstanceTruth::new(Some(mu.clone()), Some(1.0), None)));
        let truth = inst.truth().unwrap();
        let err = (inst.objective(truth.optimal_measure.as_ref().unwrap()).unwrap()
            - truth.optimal_value.unwrap())
        .abs();
        assert!(err <= 1e-10);
    }
}
