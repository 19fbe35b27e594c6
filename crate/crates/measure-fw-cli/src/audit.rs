//! Monte Carlo oracle audit: unbiasedness z-tests against closed forms and
//! the CLT-scaling constant estimate across sample sizes.

use crate::checks::{estimate_c0, random_measure_for};
use crate::config::{Check, ExperimentConfig};
use crate::error::CliError;
use crate::report::CheckOutcome;
use crate::stats;
use measure_fw::oracle::grid_points;
use measure_fw::RngStream;

#[derive(Debug, Clone)]
pub struct AuditReport {
    pub pairs: usize,
    pub z_failures: usize,
    pub objective_z: f64,
    pub c0_rows: Vec<(usize, f64, f64)>,
    pub c0_flat: bool,
}

impl AuditReport {
    pub fn pass(&self) -> bool {
        self.z_failures <= self.pairs / 20 + 1 && self.objective_z.abs() <= 3.0 && self.c0_flat
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# oracle audit\n");
        out.push_str(&format!(
            "influence unbiasedness: {}/{} pairs failed the 3-sigma z-test\n",
            self.z_failures, self.pairs
        ));
        out.push_str(&format!("objective z-score: {:.3}\n", self.objective_z));
        for (m, mean, se) in &self.c0_rows {
            out.push_str(&format!("c0 estimate at m={m}: {mean:.6} (se {se:.6})\n"));
        }
        out.push_str(&format!(
            "c0 flat across m: {}\n",
            if self.c0_flat { "yes" } else { "no" }
        ));
        out.push_str(&format!(
            "overall: {}\n",
            if self.pass() { "PASS" } else { "FAIL" }
        ));
        out
    }
}

pub fn oracle_audit(cfg: &ExperimentConfig) -> Result<AuditReport, CliError> {
    let inst = &cfg.instance;
    if !inst.has_stochastic_oracle() {
        return Err(CliError::Capability(format!(
            "{} has no stochastic oracle",
            inst.name()
        )));
    }
    if !inst.has_exact_influence() {
        return Err(CliError::Capability(format!(
            "{} has no exact influence to audit against",
            inst.name()
        )));
    }
    let seed = cfg.solver.seed;
    let grid = grid_points(inst.domain(), 41);
    let pairs = cfg.audit_trials;
    let mut z_failures = 0;
    let mut rng = RngStream::aux(seed, 500, 0).rng();
    for pair in 0..pairs {
        let mu = random_measure_for(inst, &mut rng);
        let x = &grid[(pair * 7 + 3) % grid.len()];
        let exact = inst.influence(&mu, x)?;
        if !exact.is_finite() {
            continue;
        }
        let draws: Vec<f64> = (0..400)
            .map(|r| inst.mc_influence(&mu, x, 1, RngStream::aux(seed, 510 + pair as u64, r)))
            .collect::<Result<_, _>>()?;
        let mean = stats::mean(&draws);
        let se = stats::std_error(&draws);
        // Absolute floor keeps float summation noise from firing the test
        // on (near-)zero-variance oracles.
        let atol = 1e-12 * exact.abs().max(1.0);
        if (mean - exact).abs() > 3.0 * se + atol {
            z_failures += 1;
        }
    }

    // Objective estimator unbiasedness at the configured start measure.
    let exact_j = inst.objective(&cfg.mu0)?;
    let reps: Vec<f64> = (0..200)
        .map(|r| inst.mc_objective(&cfg.mu0, 500, RngStream::aux(seed, 600, r)))
        .collect::<Result<_, _>>()?;
    let mean = stats::mean(&reps);
    let se = stats::std_error(&reps);
    let atol = 1e-12 * exact_j.abs().max(1.0);
    let objective_z = (mean - exact_j) / se.max(atol / 3.0);

    // CLT-scaling constant across sample sizes: paired flatness within 2 SE.
    let estimate = estimate_c0(inst, &[16, 64, 256], 40, seed ^ 0xA0D1)?;
    let c0_rows = estimate.rows();
    let c0_flat = estimate.flat();

    Ok(AuditReport {
        pairs,
        z_failures,
        objective_z,
        c0_rows,
        c0_flat,
    })
}

pub fn check_audit(cfg: &ExperimentConfig) -> Result<CheckOutcome, CliError> {
    let name = Check::OracleAudit.name();
    let report = oracle_audit(cfg)?;
    let detail = format!(
        "{}/{} z-failures, objective z {:.2}, c0 flat: {}",
        report.z_failures, report.pairs, report.objective_z, report.c0_flat
    );
    if report.pass() {
        Ok(CheckOutcome::pass(name, detail))
    } else {
        Ok(CheckOutcome::fail(name, detail))
    }
}
