//! Recursion-level behavior: hand-rolled iterates, reproducibility,
//! fully-corrective convergence and dominance, error paths.

mod common;

use measure_fw::instances::presets::{
    calibration_default, cre_endpoints_start, cre_unit, pmeans_single, response_time_a_default,
};
use measure_fw::solver::{
    run_dfw, run_fixed_sfw, run_fully_corrective, run_sfw, simplex_reweight, FcConfig,
    SampleSchedule, SolverConfig, StepSchedule, Variant,
};
use measure_fw::{AtomicMeasure, FwError};

fn cfg(variant: Variant, iters: usize, dim: usize) -> SolverConfig {
    let mut c = SolverConfig::new(variant, iters, dim);
    c.seed = 7;
    c
}

#[test]
fn dfw_calibration_hand_trace() {
    let inst = calibration_default();
    let mu0 = AtomicMeasure::dirac(vec![0.0], inst.domain().clone()).unwrap();
    let trace = run_dfw(&inst, &mu0, &cfg(Variant::Dfw, 2, 1)).unwrap();
    assert_eq!(trace.rows.len(), 3);
    // eta_0 = 1: mu_1 is the pure Dirac at the influence argmin x* = 1.
    assert_eq!(trace.rows[0].minimizer.as_ref().unwrap(), &vec![1.0]);
    assert!((trace.rows[1].objective - 0.49).abs() < 1e-14);
    // mu_2 = (1/3) delta_1 + (2/3) delta_0.
    let j2 = trace.rows[2].objective;
    assert!((j2 - 1.111111111e-3).abs() < 1e-9, "J(mu_2) = {j2}");
    let mu2 = &trace.final_measure;
    let i0 = mu2.find_atom(&[0.0], 1e-12).unwrap();
    let i1 = mu2.find_atom(&[1.0], 1e-12).unwrap();
    assert!((mu2.weights()[i0] - 2.0 / 3.0).abs() < 1e-12);
    assert!((mu2.weights()[i1] - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn dfw_bound_holds_on_calibration_prefix() {
    let inst = calibration_default();
    let l = inst.truth().unwrap().smoothness_l.unwrap();
    let r = inst.truth().unwrap().diameter_r;
    let mu0 = AtomicMeasure::dirac(vec![0.0], inst.domain().clone()).unwrap();
    let mut c = cfg(Variant::Dfw, 200, 1);
    c.gap_every = 0;
    let trace = run_dfw(&inst, &mu0, &c).unwrap();
    for row in &trace.rows[1..] {
        let bound = 2.0 * l * r * r / (row.k as f64 + 2.0);
        assert!(
            row.obj_gap.unwrap() <= bound,
            "k={} gap={} bound={}",
            row.k,
            row.obj_gap.unwrap(),
            bound
        );
    }
}

#[test]
fn dfw_response_time_minimizer_is_constant_across_iterations() {
    let inst = response_time_a_default();
    let mu0 = AtomicMeasure::center_dirac(inst.domain());
    let mut c = cfg(Variant::Dfw, 12, 1);
    c.gap_every = 0;
    let trace = run_dfw(&inst, &mu0, &c).unwrap();
    let first = trace.rows[0].minimizer.clone().unwrap();
    for row in &trace.rows[..trace.rows.len() - 1] {
        assert_eq!(row.minimizer.as_ref().unwrap(), &first);
    }
    // One step suffices to land on the optimal objective (eta_0 = 1).
    let j_star = inst.truth().unwrap().optimal_value.unwrap();
    assert!((trace.rows[1].objective - j_star).abs() < 1e-12);
}

#[test]
fn atom_count_nondecreasing_for_plain_variants() {
    let inst = calibration_default();
    let mu0 = AtomicMeasure::center_dirac(inst.domain());
    let trace = run_dfw(&inst, &mu0, &cfg(Variant::Dfw, 30, 1)).unwrap();
    for pair in trace.rows.windows(2) {
        assert!(pair[1].atoms >= pair[0].atoms);
    }
}

#[test]
fn sfw_same_seed_reproduces_trace_exactly() {
    let inst = pmeans_single();
    let mu0 = AtomicMeasure::center_dirac(inst.domain());
    let mut c = cfg(Variant::Sfw, 20, 1);
    c.gap_every = 5;
    let t1 = run_sfw(&inst, &mu0, &c).unwrap();
    let t2 = run_sfw(&inst, &mu0, &c).unwrap();
    assert_eq!(t1.rows.len(), t2.rows.len());
    for (a, b) in t1.rows.iter().zip(&t2.rows) {
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.minimizer, b.minimizer);
    }
    let mut c2 = c.clone();
    c2.seed = 8;
    let t3 = run_sfw(&inst, &mu0, &c2).unwrap();
    assert!(t1
        .rows
        .iter()
        .zip(&t3.rows)
        .any(|(a, b)| a.objective.to_bits() != b.objective.to_bits()));
}

#[test]
fn sfw_sample_schedule_matches_quadratic_growth() {
    let inst = pmeans_single();
    let mu0 = AtomicMeasure::center_dirac(inst.domain());
    let mut c = cfg(Variant::Sfw, 10, 1);
    c.samples = SampleSchedule::Quadratic { c: 1.5 };
    let trace = run_sfw(&inst, &mu0, &c).unwrap();
    for row in &trace.rows {
        let expected = (1.5 * (row.k as f64 + 2.0).powi(2)).ceil() as usize;
        assert_eq!(row.m, expected, "k={}", row.k);
    }
}

#[test]
fn sfw_capability_error_without_stochastic_oracle() {
    let inst = calibration_default();
    let mu0 = AtomicMeasure::center_dirac(inst.domain());
    let err = run_sfw(&inst, &mu0, &cfg(Variant::Sfw, 5, 1)).unwrap_err();
    assert!(matches!(err.source, FwError::Capability { .. }));
}

#[test]
fn fully_corrective_calibration_is_exact_within_three_iterations() {
    let inst = calibration_default();
    let mu0 = AtomicMeasure::dirac(vec![0.0], inst.domain().clone()).unwrap();
    let trace = run_fully_corrective(&inst, &mu0, &cfg(Variant::FcDfw, 3, 1)).unwrap();
    let hit = trace
        .rows
        .iter()
        .find(|r| r.objective <= 1e-10)
        .expect("no row reached 1e-10");
    assert!(hit.k <= 3);
    // The inner solve finds the 0.3/0.7 endpoint weights.
    let mu = &trace.final_measure;
    let i1 = mu.find_atom(&[1.0], 1e-9).unwrap();
    assert!((mu.weights()[i1] - 0.3).abs() < 1e-5);
}

#[test]
fn fully_corrective_dominates_plain_steps() {
    for (inst, is_cre) in [(calibration_default(), false), (cre_unit(), true)] {
        let mu0 = if is_cre {
            cre_endpoints_start(&inst)
        } else {
            AtomicMeasure::dirac(vec![0.0], inst.domain().clone()).unwrap()
        };
        let mut c = cfg(Variant::Dfw, 25, 1);
        c.gap_every = 0;
        if is_cre {
            // eta_0 = 1 would wipe the endpoint mass and the next influence
            // is unbounded below; the shifted schedule keeps it alive.
            c.step = StepSchedule::Harmonic { offset: 1 };
        }
        let plain = run_dfw(&inst, &mu0, &c).unwrap();
        let mut cf = c.clone();
        cf.variant = Variant::FcDfw;
        let fc = run_fully_corrective(&inst, &mu0, &cf).unwrap();
        for (p, f) in plain.rows.iter().zip(&fc.rows) {
            assert!(
                f.objective <= p.objective + 1e-12,
                "{}: k={} fc={} plain={}",
                inst.name(),
                p.k,
                f.objective,
                p.objective
            );
        }
    }
}

#[test]
fn fully_corrective_cre_reaches_the_true_optimum() {
    let inst = cre_unit();
    let mu0 = cre_endpoints_start(&inst);
    let mut c = cfg(Variant::FcDfw, 50, 1);
    c.gap_every = 0;
    let trace = run_fully_corrective(&inst, &mu0, &c).unwrap();
    let truth = inst.truth().unwrap();
    let j_star = truth.optimal_value.unwrap();
    let err = (trace.rows.last().unwrap().objective - j_star).abs();
    assert!(err <= 1e-9, "final objective error {err}");
    let tv = trace
        .final_measure
        .tv_distance(truth.optimal_measure.as_ref().unwrap())
        .unwrap();
    assert!(tv <= 1e-6, "tv to optimum {tv}");
}

#[test]
fn cre_from_interior_start_aborts_with_partial_trace() {
    // The influence is -inf above the support; starting from an interior
    // Dirac must surface an oracle error carrying the offending point.
    let inst = cre_unit();
    let mu0 = AtomicMeasure::center_dirac(inst.domain());
    let mut c = cfg(Variant::Dfw, 5, 1);
    c.gap_every = 0;
    let err = run_dfw(&inst, &mu0, &c).unwrap_err();
    match &err.source {
        FwError::Oracle { point } => assert!(point[0] > 1.5),
        other => panic!("expected oracle error, got {other:?}"),
    }
    assert_eq!(err.partial.rows.len(), 1);
}

#[test]
fn fixed_sfw_envelope_and_eta_one_oscillation() {
    let inst = calibration_default().with_degenerate_oracle();
    let mu0 = AtomicMeasure::dirac(vec![0.0], inst.domain().clone()).unwrap();
    let mut c = cfg(Variant::FixedSfw, 120, 1);
    c.step = StepSchedule::Fixed(0.1);
    c.samples = SampleSchedule::Fixed(4);
    c.gap_every = 0;
    let trace = run_fixed_sfw(&inst, &mu0, &c).unwrap();
    let l = inst.truth().unwrap().smoothness_l.unwrap();
    let r = inst.truth().unwrap().diameter_r;
    let delta1 = trace.rows[1].obj_gap.unwrap();
    for row in &trace.rows[1..] {
        let envelope = (1.0 - 0.1f64).powi(row.k as i32 - 1) * delta1 + l * r * r * 0.1;
        assert!(row.obj_gap.unwrap() <= envelope + 1e-12);
    }
    // eta = 1 keeps the iterate a pure Dirac at every step.
    let mut c1 = c.clone();
    c1.step = StepSchedule::Fixed(1.0);
    let trace1 = run_fixed_sfw(&inst, &mu0, &c1).unwrap();
    for row in &trace1.rows {
        assert_eq!(row.atoms, 1);
    }
}

#[test]
fn fixed_sfw_requires_fixed_schedules() {
    let inst = calibration_default().with_degenerate_oracle();
    let mu0 = AtomicMeasure::center_dirac(inst.domain());
    let mut c = cfg(Variant::FixedSfw, 5, 1);
    c.step = StepSchedule::harmonic();
    c.samples = SampleSchedule::Fixed(4);
    assert!(run_fixed_sfw(&inst, &mu0, &c).is_err());
}

#[test]
fn inexact_subsolve_audit_records_suboptimality() {
    let inst = calibration_default().with_degenerate_oracle();
    let mu0 = AtomicMeasure::center_dirac(inst.domain());
    let mut c = cfg(Variant::FixedSfw, 30, 1);
    c.step = StepSchedule::Fixed(0.2);
    c.samples = SampleSchedule::Fixed(2);
    c.epsilon_tilde = 0.05;
    c.audit_every = 5;
    c.gap_every = 0;
    let trace = run_fixed_sfw(&inst, &mu0, &c).unwrap();
    let worst = trace.audit_worst.expect("audit ran");
    assert!(worst >= 0.0);
    assert!(worst <= c.epsilon_tilde, "achieved {worst} > epsilon");
}

#[test]
fn simplex_reweight_examples() {
    let inst = calibration_default();
    let atoms = vec![vec![0.0], vec![1.0]];
    let w = simplex_reweight(&inst, &atoms, &[0.5, 0.5], &FcConfig::default()).unwrap();
    assert!((w[0] - 0.7).abs() < 1e-5, "w = {w:?}");
    assert!((w[1] - 0.3).abs() < 1e-5);

    // Single atom: unchanged.
    let w1 = simplex_reweight(&inst, &[vec![0.4]], &[1.0], &FcConfig::default()).unwrap();
    assert_eq!(w1, vec![1.0]);

    // Already optimal: no movement beyond the gap tolerance.
    let w2 = simplex_reweight(&inst, &atoms, &[0.7, 0.3], &FcConfig::default()).unwrap();
    assert!((w2[0] - 0.7).abs() < 1e-6);
}

#[test]
fn every_recorded_iterate_is_feasible() {
    let inst = pmeans_single();
    let mu0 = AtomicMeasure::center_dirac(inst.domain());
    let mut c = cfg(Variant::Sfw, 25, 1);
    c.gap_every = 0;
    let trace = run_sfw(&inst, &mu0, &c).unwrap();
    // validate() ran inside record(); re-check the final measure here.
    assert!(trace.final_measure.validate().is_ok());
    assert_eq!(trace.rows.len(), 26);
}
