//! The shipped problem configurations with their known optima attached.

use crate::domain::BoxDomain;
use crate::instances::calibration::{build_calibration, ScalarFn};
use crate::instances::cre::build_cre;
use crate::instances::deconvolution::build_deconvolution;
use crate::instances::doptimal::{build_doptimal, information_determinant, BasisFn};
use crate::instances::nn_risk::{build_nn_risk, KernelFn, PotentialFn};
use crate::instances::nonconvex::build_nonconvex_calibration;
use crate::instances::pmeans::build_pmeans;
use crate::instances::response_time::{build_response_time_a, build_response_time_b, CostFn};
use crate::measure::AtomicMeasure;
use crate::oracle::{InstanceTruth, ProblemInstance};
use std::sync::Arc;

fn identity() -> ScalarFn {
    Arc::new(|x| x)
}

/// Calibration with f = identity on [0, 1] and target 0.3.
pub fn calibration_default() -> ProblemInstance {
    build_calibration(identity(), 0.3, BoxDomain::interval(0.0, 1.0).unwrap())
        .expect("default calibration is well posed")
}

/// Nonconvex transform of the default calibration functional.
pub fn nonconvex_calibration_default() -> ProblemInstance {
    build_nonconvex_calibration(identity(), 0.3, BoxDomain::interval(0.0, 1.0).unwrap())
        .expect("default nonconvex calibration is well posed")
}

pub fn linear_basis() -> Vec<BasisFn> {
    vec![Arc::new(|_: &[f64]| 1.0), Arc::new(|x: &[f64]| x[0])]
}

/// Region floor for the D-optimal smoothness constant: the bound-check
/// trajectory must keep det M(mu) at or above this value.
pub const DOPTIMAL_DET_FLOOR: f64 = 0.4;

/// Smoothness constant of the (1, x) design influence on the region
/// {mu : det M(mu) >= c}: with |dm1| <= 2 tv, |dm2| <= tv, |d det| <= 5 tv
/// and 0 <= f' M^{-1} f det <= 4 on [-1, 1], sup_x |h_mu - h_nu| <=
/// (15/c^2 + 40/c^4) tv.
pub fn doptimal_region_l(c: f64) -> f64 {
    15.0 / (c * c) + 40.0 / c.powi(4)
}

/// D-optimal design for the basis (1, x) on [-1, 1]: the optimum splits mass
/// evenly between the endpoints (det M = m2 - m1^2 is maximized at m1 = 0,
/// m2 = 1), giving J* = 1.
pub fn doptimal_linear() -> ProblemInstance {
    let dom = BoxDomain::interval(-1.0, 1.0).unwrap();
    let mut inst = build_doptimal(linear_basis(), dom.clone()).expect("linear basis independent");
    let optimum = AtomicMeasure::new(
        vec![vec![-1.0], vec![1.0]],
        vec![0.5, 0.5],
        dom,
    )
    .unwrap();
    inst.set_truth(Some(InstanceTruth::new(
        Some(optimum),
        Some(1.0),
        Some(doptimal_region_l(DOPTIMAL_DET_FLOOR)),
    )));
    inst
}

/// det M(mu) for the (1, x) basis; used by bound checks to assert the
/// trajectory stays in the region where the smoothness constant holds.
pub fn doptimal_linear_det(mu: &AtomicMeasure) -> f64 {
    information_determinant(&linear_basis(), mu).unwrap_or(0.0)
}

/// Single-demand P-means on [0, 1] with the demand at 0.5.
pub fn pmeans_single() -> ProblemInstance {
    build_pmeans(vec![vec![0.5]], BoxDomain::interval(0.0, 1.0).unwrap())
        .expect("demand inside the domain")
}

/// Two-demand P-means on [0, 1] with demands at 1/4 and 3/4. The optimum
/// splits mass evenly between the demand points: its influence function is
/// zero exactly on [1/4, 3/4] and positive outside (certified in tests), and
/// J* = e^{-1/2} + e^{-1}. Unlike the single-demand case, F(mu*, Y) is a
/// nondegenerate random variable, which the CLT experiment needs.
pub fn pmeans_two_demand() -> ProblemInstance {
    let dom = BoxDomain::interval(0.0, 1.0).unwrap();
    let mut inst =
        build_pmeans(vec![vec![0.25], vec![0.75]], dom.clone()).expect("demands inside the domain");
    let optimum = AtomicMeasure::new(
        vec![vec![0.25], vec![0.75]],
        vec![0.5, 0.5],
        dom,
    )
    .unwrap();
    let j_star = (-0.5f64).exp() + (-1.0f64).exp();
    inst.set_truth(Some(InstanceTruth::new(Some(optimum), Some(j_star), None)));
    inst
}

/// CRE on [1, 2].
pub fn cre_unit() -> ProblemInstance {
    build_cre(1.0, 2.0).expect("interval is valid")
}

/// Initial measure for CRE runs: mass on both endpoints (the influence is
/// finite only up to the maximum support point).
pub fn cre_endpoints_start(inst: &ProblemInstance) -> AtomicMeasure {
    let dom = inst.domain().clone();
    AtomicMeasure::new(
        vec![dom.lower().to_vec(), dom.upper().to_vec()],
        vec![0.5, 0.5],
        dom,
    )
    .unwrap()
}

/// Deconvolution with a single observation at 0, sigma = 1, on [-1, 1]:
/// the NPMLE is the Dirac at 0 with J* = ln(2 pi)/2.
pub fn deconvolution_point() -> ProblemInstance {
    let dom = BoxDomain::interval(-1.0, 1.0).unwrap();
    let mut inst = build_deconvolution(vec![0.0], 1.0, dom.clone()).expect("valid arguments");
    let optimum = AtomicMeasure::dirac(vec![0.0], dom).unwrap();
    inst.set_truth(Some(InstanceTruth::new(
        Some(optimum),
        Some(0.5 * (2.0 * std::f64::consts::PI).ln()),
        None,
    )));
    inst
}

/// Expected |x - Y| dispatch cost against a 201-point uniform incident cloud
/// on [0, 1].
pub fn response_time_a_default() -> ProblemInstance {
    let dom = BoxDomain::interval(0.0, 1.0).unwrap();
    let eta = AtomicMeasure::grid_cloud(&dom, 201).unwrap();
    let cost: CostFn = Arc::new(|x: &[f64], y: &[f64]| (x[0] - y[0]).abs());
    build_response_time_a(cost, eta, dom).expect("valid arguments")
}

/// Profile matching with incidents at 1/2, unit speed, ramp target
/// F*(t) = min(2t, 1) on [0, 1]; the optimum is non-atomic.
pub fn response_time_b_default() -> ProblemInstance {
    let dom = BoxDomain::interval(0.0, 1.0).unwrap();
    let eta = AtomicMeasure::dirac(vec![0.5], dom.clone()).unwrap();
    build_response_time_b(eta, 2.0, 1.0, dom).expect("valid arguments")
}

/// Gaussian-bump attraction with an RBF interaction kernel on [-1, 1];
/// the reference optimum is located by brute force in tests, not claimed.
pub fn nn_risk_default() -> ProblemInstance {
    let v: PotentialFn = Arc::new(|x: &[f64]| -(-0.5 * (x[0] - 0.3) * (x[0] - 0.3)).exp());
    let u: KernelFn =
        Arc::new(|a: &[f64], b: &[f64]| (-0.5 * (a[0] - b[0]) * (a[0] - b[0])).exp());
    build_nn_risk(v, u, 0.0, BoxDomain::interval(-1.0, 1.0).unwrap()).expect("kernel symmetric")
}

/// Every shipped instance, for sweep-style diagnostics.
pub fn all_instances() -> Vec<ProblemInstance> {
    vec![
        calibration_default(),
        nonconvex_calibration_default(),
        doptimal_linear(),
        pmeans_single(),
        pmeans_two_demand(),
        cre_unit(),
        deconvolution_point(),
        response_time_a_default(),
        response_time_b_default(),
        nn_risk_default(),
    ]
}
