//! Replication fan-out. Each replication owns its RNG streams (seed, k, rep)
//! and produces an independent trace; workers only change wall time, never
//! results. The reduce step orders by replication index.

use crate::config::ExperimentConfig;
use crate::error::CliError;
use measure_fw::solver::{run_dfw, run_fixed_sfw, run_fully_corrective, run_sfw};
use measure_fw::{AtomicMeasure, ProblemInstance, SolverConfig, Trace, Variant};

pub fn worker_count(reps: usize) -> usize {
    let configured = std::env::var("MFW_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1);
    let fallback = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    configured.unwrap_or(fallback).min(reps.max(1))
}

pub fn solve_one(
    inst: &ProblemInstance,
    mu0: &AtomicMeasure,
    solver: &SolverConfig,
    rep: u64,
) -> Result<Trace, CliError> {
    let mut cfg = solver.clone();
    cfg.rep = rep;
    let result = match cfg.variant {
        Variant::Dfw => run_dfw(inst, mu0, &cfg),
        Variant::Sfw => run_sfw(inst, mu0, &cfg),
        Variant::FixedSfw => run_fixed_sfw(inst, mu0, &cfg),
        Variant::FcDfw | Variant::FcSfw => run_fully_corrective(inst, mu0, &cfg),
    };
    result.map_err(|f| CliError::from(f.source))
}

/// Runs `reps` replications across the worker pool; traces return in
/// replication order. The first failure (by replication index) wins, so the
/// reported error does not depend on scheduling.
pub fn run_replications(
    cfg: &ExperimentConfig,
    solver: &SolverConfig,
    reps: u64,
) -> Result<Vec<Trace>, CliError> {
    run_replications_on(&cfg.instance, &cfg.mu0, solver, reps)
}

pub fn run_replications_on(
    inst: &ProblemInstance,
    mu0: &AtomicMeasure,
    solver: &SolverConfig,
    reps: u64,
) -> Result<Vec<Trace>, CliError> {
    let reps = reps as usize;
    let workers = worker_count(reps);
    let mut slots: Vec<Option<Result<Trace, CliError>>> = Vec::new();
    slots.resize_with(reps, || None);
    if workers <= 1 {
        for (rep, slot) in slots.iter_mut().enumerate() {
            *slot = Some(solve_one(inst, mu0, solver, rep as u64));
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let results: Vec<std::sync::Mutex<Option<Result<Trace, CliError>>>> =
            (0..reps).map(|_| std::sync::Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let rep = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if rep >= reps {
                        break;
                    }
                    let out = solve_one(inst, mu0, solver, rep as u64);
                    *results[rep].lock().unwrap() = Some(out);
                });
            }
        });
        for (slot, cell) in slots.iter_mut().zip(results) {
            *slot = cell.into_inner().unwrap();
        }
    }
    let mut traces = Vec::with_capacity(reps);
    for slot in slots {
        traces.push(slot.expect("every replication ran")?);
    }
    Ok(traces)
}
