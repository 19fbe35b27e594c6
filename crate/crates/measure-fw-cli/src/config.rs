//! Strict experiment configuration: `key = value` lines under `[instance]`,
//! `[solver]`, and `[experiment]` sections. Unknown sections or keys are
//! errors, as are duplicates; a silent typo would corrupt a bound check.

use crate::error::CliError;
use measure_fw::instances::presets;
use measure_fw::instances::{build_calibration, build_cre, build_deconvolution, build_pmeans};
use measure_fw::{
    AtomicMeasure, BoxDomain, FcConfig, ProblemInstance, RngStream, SampleSchedule, SolverConfig,
    StepSchedule, SubsolverConfig, Variant,
};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    BoundDfw,
    BoundSfw,
    BoundFixed,
    GapNonconvex,
    Clt,
    OracleAudit,
    Invariants,
}

impl Check {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "bound_dfw" => Check::BoundDfw,
            "bound_sfw" => Check::BoundSfw,
            "bound_fixed" => Check::BoundFixed,
            "gap_nonconvex" => Check::GapNonconvex,
            "clt" => Check::Clt,
            "oracle_audit" => Check::OracleAudit,
            "invariants" => Check::Invariants,
            other => return Err(CliError::parse(format!("unknown check `{other}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Check::BoundDfw => "bound_dfw",
            Check::BoundSfw => "bound_sfw",
            Check::BoundFixed => "bound_fixed",
            Check::GapNonconvex => "gap_nonconvex",
            Check::Clt => "clt",
            Check::OracleAudit => "oracle_audit",
            Check::Invariants => "invariants",
        }
    }

    /// Checks whose verdicts rest on cross-replication statistics.
    pub fn is_statistical(&self) -> bool {
        matches!(self, Check::BoundSfw | Check::GapNonconvex | Check::Clt)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub instance_name: String,
    pub instance: ProblemInstance,
    pub mu0: AtomicMeasure,
    pub solver: SolverConfig,
    pub replications: u64,
    pub checks: Vec<Check>,
    pub clt_n: Vec<usize>,
    pub audit_trials: usize,
    pub degenerate_oracle: bool,
}

/// One parsed section with consume-style access so leftovers are detectable.
struct Section {
    name: String,
    entries: BTreeMap<String, String>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn take_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::parse(format!(
                    "key `{key}` in [{}] has malformed value `{raw}`",
                    self.name
                ))
            }),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        if let Some(key) = self.entries.keys().next() {
            return Err(CliError::parse(format!(
                "unknown key `{key}` in [{}]",
                self.name
            )));
        }
        Ok(())
    }
}

fn parse_sections(text: &str) -> Result<BTreeMap<String, Section>, CliError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_string();
            if !matches!(name.as_str(), "instance" | "solver" | "experiment") {
                return Err(CliError::parse(format!(
                    "unknown section [{name}] at line {}",
                    lineno + 1
                )));
            }
            if sections.contains_key(&name) {
                return Err(CliError::parse(format!("duplicate section [{name}]")));
            }
            sections.insert(
                name.clone(),
                Section {
                    name: name.clone(),
                    entries: BTreeMap::new(),
                },
            );
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::parse(format!(
                "expected `key = value` at line {}",
                lineno + 1
            )));
        };
        let section = current
            .as_ref()
            .ok_or_else(|| CliError::parse(format!("key outside a section at line {}", lineno + 1)))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let entries = &mut sections.get_mut(section).unwrap().entries;
        if entries.insert(key.clone(), value).is_some() {
            return Err(CliError::parse(format!(
                "duplicate key `{key}` in [{section}]"
            )));
        }
    }
    Ok(sections)
}

fn parse_float_list(raw: &str, what: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::parse(format!("malformed {what} entry `{s}`")))
        })
        .collect()
}

fn build_instance(sec: &mut Section) -> Result<(String, ProblemInstance), CliError> {
    let name = sec
        .take("name")
        .ok_or_else(|| CliError::parse("missing `name` in [instance]"))?;
    let lower = sec.take_parsed::<f64>("lower")?;
    let upper = sec.take_parsed::<f64>("upper")?;
    let interval = |default: (f64, f64)| -> Result<BoxDomain, CliError> {
        BoxDomain::interval(lower.unwrap_or(default.0), upper.unwrap_or(default.1))
            .map_err(|e| CliError::parse(e.to_string()))
    };
    let inst = match name.as_str() {
        "calibration" => {
            let y0 = sec.take_parsed::<f64>("y0")?.unwrap_or(0.3);
            build_calibration(Arc::new(|x| x), y0, interval((0.0, 1.0))?)
                .map_err(|e| CliError::parse(e.to_string()))?
        }
        "nonconvex_calibration" => {
            let y0 = sec.take_parsed::<f64>("y0")?.unwrap_or(0.3);
            measure_fw::instances::build_nonconvex_calibration(
                Arc::new(|x| x),
                y0,
                interval((0.0, 1.0))?,
            )
            .map_err(|e| CliError::parse(e.to_string()))?
        }
        "doptimal" => {
            if lower.unwrap_or(-1.0) == -1.0 && upper.unwrap_or(1.0) == 1.0 {
                presets::doptimal_linear()
            } else {
                measure_fw::instances::build_doptimal(presets::linear_basis(), interval((-1.0, 1.0))?)
                    .map_err(|e| CliError::parse(e.to_string()))?
            }
        }
        "pmeans" => {
            let demands_raw = sec.take("demands").unwrap_or_else(|| "0.5".into());
            let demands = parse_float_list(&demands_raw, "demands")?;
            let dom = interval((0.0, 1.0))?;
            if demands == [0.25, 0.75]
                && dom.lower() == [0.0]
                && dom.upper() == [1.0]
            {
                presets::pmeans_two_demand()
            } else {
                build_pmeans(demands.into_iter().map(|d| vec![d]).collect(), dom)
                    .map_err(|e| CliError::parse(e.to_string()))?
            }
        }
        "cre" => build_cre(lower.unwrap_or(1.0), upper.unwrap_or(2.0))
            .map_err(|e| CliError::parse(e.to_string()))?,
        "deconvolution" => {
            let data_raw = sec.take("data").unwrap_or_else(|| "0".into());
            let data = parse_float_list(&data_raw, "data")?;
            let sigma = sec.take_parsed::<f64>("sigma")?.unwrap_or(1.0);
            let dom = interval((-1.0, 1.0))?;
            if data == [0.0] && sigma == 1.0 && dom.lower() == [-1.0] && dom.upper() == [1.0] {
                presets::deconvolution_point()
            } else {
                build_deconvolution(data, sigma, dom).map_err(|e| CliError::parse(e.to_string()))?
            }
        }
        "response_time_a" => presets::response_time_a_default(),
        "response_time_b" => presets::response_time_b_default(),
        "nn_risk" => presets::nn_risk_default(),
        other => {
            return Err(CliError::parse(format!("unknown instance `{other}`")));
        }
    };
    Ok((name, inst))
}

fn build_mu0(
    spec: &str,
    inst: &ProblemInstance,
    seed: u64,
) -> Result<AtomicMeasure, CliError> {
    let dom = inst.domain().clone();
    let mu = if spec == "center" {
        AtomicMeasure::center_dirac(&dom)
    } else if spec == "endpoints" {
        AtomicMeasure::new(
            vec![dom.lower().to_vec(), dom.upper().to_vec()],
            vec![0.5, 0.5],
            dom,
        )
        .map_err(|e| CliError::parse(e.to_string()))?
    } else if let Some(n) = spec.strip_prefix("grid:") {
        let n: usize = n
            .parse()
            .map_err(|_| CliError::parse(format!("malformed mu0 `{spec}`")))?;
        AtomicMeasure::grid_cloud(&dom, n).map_err(|e| CliError::parse(e.to_string()))?
    } else if let Some(n) = spec.strip_prefix("cloud:") {
        let n: usize = n
            .parse()
            .map_err(|_| CliError::parse(format!("malformed mu0 `{spec}`")))?;
        let mut rng = RngStream::aux(seed, 999, 0).rng();
        AtomicMeasure::sampled_cloud(&dom, n, &mut rng).map_err(|e| CliError::parse(e.to_string()))?
    } else if let Some(atoms) = spec.strip_prefix("atoms:") {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for part in atoms.split(';') {
            let (x, w) = part
                .split_once('@')
                .ok_or_else(|| CliError::parse(format!("malformed mu0 atom `{part}`")))?;
            points.push(vec![x.trim().parse::<f64>().map_err(|_| {
                CliError::parse(format!("malformed mu0 atom `{part}`"))
            })?]);
            weights.push(w.trim().parse::<f64>().map_err(|_| {
                CliError::parse(format!("malformed mu0 atom `{part}`"))
            })?);
        }
        AtomicMeasure::new(points, weights, dom).map_err(|e| CliError::parse(e.to_string()))?
    } else {
        return Err(CliError::parse(format!("unknown mu0 spec `{spec}`")));
    };
    Ok(mu)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut sections = parse_sections(text)?;
    let mut inst_sec = sections
        .remove("instance")
        .ok_or_else(|| CliError::parse("missing [instance] section"))?;
    let (instance_name, instance) = build_instance(&mut inst_sec)?;
    let mu0_spec = inst_sec.take("mu0").unwrap_or_else(|| "center".into());
    let degenerate_oracle = match inst_sec.take("degenerate_oracle") {
        None => false,
        Some(v) => v
            .parse::<bool>()
            .map_err(|_| CliError::parse("degenerate_oracle must be true or false"))?,
    };
    inst_sec.finish()?;

    let mut solver = SolverConfig::new(Variant::Dfw, 100, instance.domain().dim());
    let mut seed_for_mu0 = 0u64;
    if let Some(mut sec) = sections.remove("solver") {
        if let Some(v) = sec.take("variant") {
            solver.variant = match v.as_str() {
                "dfw" => Variant::Dfw,
                "sfw" => Variant::Sfw,
                "fixed_sfw" => Variant::FixedSfw,
                "fc_dfw" => Variant::FcDfw,
                "fc_sfw" => Variant::FcSfw,
                other => return Err(CliError::parse(format!("unknown variant `{other}`"))),
            };
        }
        if let Some(k) = sec.take_parsed::<usize>("max_iters")? {
            solver.max_iters = k;
        }
        match sec.take("step") {
            None => {}
            Some(s) => {
                solver.step = match s.as_str() {
                    "harmonic" => StepSchedule::Harmonic { offset: 0 },
                    "harmonic1" => StepSchedule::Harmonic { offset: 1 },
                    "fixed" => StepSchedule::Fixed(
                        sec.take_parsed::<f64>("fixed_eta")?.unwrap_or(0.1),
                    ),
                    other => {
                        return Err(CliError::parse(format!("unknown step schedule `{other}`")))
                    }
                };
            }
        }
        if let Some(eta) = sec.take_parsed::<f64>("fixed_eta")? {
            solver.step = StepSchedule::Fixed(eta);
        }
        match sec.take("samples") {
            None => {}
            Some(s) => {
                solver.samples = match s.as_str() {
                    "quadratic" => SampleSchedule::Quadratic {
                        c: sec.take_parsed::<f64>("c_m")?.unwrap_or(1.0),
                    },
                    "fixed" => SampleSchedule::Fixed(
                        sec.take_parsed::<usize>("fixed_m")?.unwrap_or(64),
                    ),
                    other => {
                        return Err(CliError::parse(format!("unknown sample schedule `{other}`")))
                    }
                };
            }
        }
        if let Some(c) = sec.take_parsed::<f64>("c_m")? {
            solver.samples = SampleSchedule::Quadratic { c };
        }
        if let Some(m) = sec.take_parsed::<usize>("fixed_m")? {
            solver.samples = SampleSchedule::Fixed(m);
        }
        if let Some(e) = sec.take_parsed::<f64>("epsilon_tilde")? {
            solver.epsilon_tilde = e;
        }
        if let Some(g) = sec.take_parsed::<usize>("gap_every")? {
            solver.gap_every = g;
        }
        if let Some(a) = sec.take_parsed::<usize>("audit_every")? {
            solver.audit_every = a;
        }
        let mut sub = SubsolverConfig::for_dim(instance.domain().dim());
        if let Some(g) = sec.take_parsed::<usize>("grid_points")? {
            sub.grid_points_per_dim = g;
        }
        if let Some(c) = sec.take_parsed::<usize>("refine_candidates")? {
            sub.refine_candidates = c;
        }
        if let Some(x) = sec.take_parsed::<f64>("refine_xtol")? {
            sub.refine_xtol = x;
        }
        if let Some(e) = sec.take_parsed::<usize>("refine_max_evals")? {
            sub.refine_max_evals = e;
        }
        solver.sub = sub;
        let mut inner = FcConfig::default();
        if let Some(i) = sec.take_parsed::<usize>("inner_max_iters")? {
            inner.inner_max_iters = i;
        }
        if let Some(t) = sec.take_parsed::<f64>("inner_gap_tol")? {
            inner.inner_gap_tol = t;
        }
        solver.inner = inner;
        if let Some(s) = sec.take_parsed::<u64>("seed")? {
            solver.seed = s;
            seed_for_mu0 = s;
        }
        sec.finish()?;
    }

    let mut replications = 1u64;
    let mut checks = Vec::new();
    let mut clt_n = vec![4096usize];
    let mut audit_trials = 20usize;
    if let Some(mut sec) = sections.remove("experiment") {
        if let Some(r) = sec.take_parsed::<u64>("replications")? {
            replications = r;
        }
        if let Some(list) = sec.take("checks") {
            for item in list.split(',') {
                let item = item.trim();
                if !item.is_empty() {
                    checks.push(Check::parse(item)?);
                }
            }
        }
        if let Some(list) = sec.take("clt_n") {
            clt_n = list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| CliError::parse(format!("malformed clt_n entry `{s}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if clt_n.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::parse("clt_n must be strictly increasing"));
            }
        }
        if let Some(t) = sec.take_parsed::<usize>("audit_trials")? {
            audit_trials = t;
        }
        sec.finish()?;
    }

    if replications == 0 {
        return Err(CliError::parse("replications must be >= 1"));
    }
    if checks.iter().any(|c| c.is_statistical()) && replications < 30 {
        return Err(CliError::parse(
            "statistical checks (bound_sfw, gap_nonconvex, clt) require replications >= 30",
        ));
    }

    let instance = if degenerate_oracle {
        instance.with_degenerate_oracle()
    } else {
        instance
    };
    let mu0 = build_mu0(&mu0_spec, &instance, seed_for_mu0)?;
    if let Err(e) = solver.validate() {
        return Err(CliError::parse(e.to_string()));
    }

    Ok(ExperimentConfig {
        instance_name,
        instance,
        mu0,
        solver,
        replications,
        checks,
        clt_n,
        audit_trials,
        degenerate_oracle,
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::parse(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}
