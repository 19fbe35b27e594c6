//! Central-limit experiment on the estimated objective values at the
//! stochastic iterates: sqrt(n) (J_n(mu_n) - J*) should be centered, carry
//! the variance of the per-sample objective at the optimum, and look normal.

use crate::config::{Check, ExperimentConfig};
use crate::error::CliError;
use crate::report::CheckOutcome;
use crate::runner::run_replications_on;
use crate::stats;
use measure_fw::{RngStream, SampleSchedule, SolverConfig, StepSchedule, Variant};

/// Draw budget for the Monte Carlo estimate of Var[F(mu*, Y)].
const TARGET_VARIANCE_DRAWS: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct CltRow {
    pub n: usize,
    pub iterations: usize,
    pub mean: f64,
    pub se_mean: f64,
    pub variance: f64,
    pub ad_statistic: f64,
    pub centered: bool,
    pub variance_ok: bool,
    pub normal_ok: bool,
}

#[derive(Debug, Clone)]
pub struct CltReport {
    pub target_variance: f64,
    pub replications: u64,
    pub rows: Vec<CltRow>,
}

impl CltReport {
    pub fn pass(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.centered && r.variance_ok && r.normal_ok)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# clt report\n");
        out.push_str(&format!("target_variance: {}\n", self.target_variance));
        out.push_str(&format!("replications: {}\n", self.replications));
        for r in &self.rows {
            out.push_str(&format!(
                "n={} k={}: mean {:.6} (se {:.6}) centered={} variance {:.6} ok={} AD {:.3} normal={}\n",
                r.n,
                r.iterations,
                r.mean,
                r.se_mean,
                r.centered,
                r.variance,
                r.variance_ok,
                r.ad_statistic,
                r.normal_ok
            ));
        }
        out.push_str(&format!(
            "overall: {}\n",
            if self.pass() { "PASS" } else { "FAIL" }
        ));
        out
    }

    pub fn csv(&self) -> String {
        let mut out =
            String::from("n,iterations,mean,se_mean,variance,target_variance,ad_statistic,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.n,
                r.iterations,
                r.mean,
                r.se_mean,
                r.variance,
                self.target_variance,
                r.ad_statistic,
                r.centered && r.variance_ok && r.normal_ok
            ));
        }
        out
    }
}

/// Iteration budget coupled to the estimator sample size: cumulative oracle
/// effort under the quadratic sample schedule then tracks n.
pub fn iterations_for(n: usize) -> usize {
    (n as f64).sqrt().ceil() as usize
}

pub fn clt_experiment(cfg: &ExperimentConfig) -> Result<CltReport, CliError> {
    let inst = &cfg.instance;
    if !inst.has_stochastic_oracle() {
        return Err(CliError::Capability(format!(
            "{} has no stochastic oracle",
            inst.name()
        )));
    }
    let truth = inst
        .truth()
        .ok_or_else(|| CliError::Capability(format!("{} has no known optimum", inst.name())))?;
    let j_star = truth
        .optimal_value
        .ok_or_else(|| CliError::Capability(format!("{} has no optimal value", inst.name())))?;
    let mu_star = truth.optimal_measure.clone().ok_or_else(|| {
        CliError::Capability(format!("{} has no optimal measure", inst.name()))
    })?;

    // Var[F(mu*, Y)] by plain Monte Carlo at the optimum (Welford).
    let mut count = 0.0;
    let mut mean_acc = 0.0;
    let mut m2 = 0.0;
    let ys = inst.draws(TARGET_VARIANCE_DRAWS, RngStream::aux(cfg.solver.seed, 30_000, 0))?;
    for y in ys {
        let f = inst.sample_objective(&mu_star, y)?;
        count += 1.0;
        let delta = f - mean_acc;
        mean_acc += delta / count;
        m2 += delta * (f - mean_acc);
    }
    let target_variance = m2 / (count - 1.0);

    let seed = cfg.solver.seed;
    let reps = cfg.replications;
    let mut rows = Vec::new();
    for (ni, &n) in cfg.clt_n.iter().enumerate() {
        let k = iterations_for(n);
        let mut solver = SolverConfig::new(
            // The fully-corrective stochastic recursion keeps the residual
            // optimality gap far below the sqrt(n) scaling at this budget.
            match cfg.solver.variant {
                v @ (Variant::Sfw | Variant::FixedSfw | Variant::FcSfw) => v,
                _ => Variant::FcSfw,
            },
            k,
            inst.domain().dim(),
        );
        solver.seed = seed ^ (0x1000 + ni as u64);
        solver.sub = cfg.solver.sub.clone();
        solver.inner = cfg.solver.inner;
        solver.step = StepSchedule::harmonic();
        solver.samples = match cfg.solver.samples {
            q @ SampleSchedule::Quadratic { .. } => q,
            _ => SampleSchedule::quadratic(),
        };
        solver.gap_every = 0;
        let traces = run_replications_on(inst, &cfg.mu0, &solver, reps)?;
        let mut stats_vals = Vec::with_capacity(traces.len());
        for (rep, trace) in traces.iter().enumerate() {
            let j_n = inst.mc_objective(
                &trace.final_measure,
                n,
                RngStream::aux(seed, 31_000 + ni as u64, rep as u64),
            )?;
            stats_vals.push((n as f64).sqrt() * (j_n - j_star));
        }
        let mean = stats::mean(&stats_vals);
        let se_mean = stats::std_error(&stats_vals);
        let variance = stats::variance(&stats_vals);
        let ad = stats::anderson_darling(&stats_vals);
        let centered = mean.abs() <= 3.0 * se_mean;
        let variance_ok = if target_variance > 0.0 {
            (variance / target_variance - 1.0).abs() <= 0.20
        } else {
            variance <= 1e-12
        };
        let normal_ok = ad <= stats::AD_CRITICAL_1PCT;
        rows.push(CltRow {
            n,
            iterations: k,
            mean,
            se_mean,
            variance,
            ad_statistic: ad,
            centered,
            variance_ok,
            normal_ok,
        });
    }
    Ok(CltReport {
        target_variance,
        replications: reps,
        rows,
    })
}

pub fn check_clt(cfg: &ExperimentConfig) -> Result<CheckOutcome, CliError> {
    let name = Check::Clt.name();
    if cfg.replications < 30 {
        return Ok(CheckOutcome::skip(name, "needs at least 30 replications"));
    }
    let report = clt_experiment(cfg)?;
    let detail = report
        .rows
        .iter()
        .map(|r| {
            format!(
                "n={}: mean {:.4} (3SE {:.4}), var {:.4} vs target {:.4}, AD {:.3}",
                r.n,
                r.mean,
                3.0 * r.se_mean,
                r.variance,
                report.target_variance,
                r.ad_statistic
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    if report.pass() {
        Ok(CheckOutcome::pass(name, detail))
    } else {
        Ok(CheckOutcome::fail(name, detail))
    }
}
