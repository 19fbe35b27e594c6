//! Frank-Wolfe recursions on probability measures.
//!
//! Plain deterministic (`dfw`) and stochastic (`sfw`) recursions mix the
//! incumbent with a Dirac at the subproblem minimizer; the fixed-step
//! fixed-sample variant allows inexact subsolves; the fully-corrective
//! variants reoptimize the objective over the convex hull of all atoms
//! discovered so far.

use crate::domain::{lex_cmp, Point};
use crate::error::{FwError, Result};
use crate::measure::{AtomicMeasure, DEFAULT_ATOM_TOL};
use crate::oracle::{PointFn, ProblemInstance};
use crate::rng::RngStream;
use crate::subsolver::{minimize_over_box, SubsolverConfig, SubsolverResult};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Dfw,
    Sfw,
    FixedSfw,
    FcDfw,
    FcSfw,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Dfw => "dfw",
            Variant::Sfw => "sfw",
            Variant::FixedSfw => "fixed_sfw",
            Variant::FcDfw => "fc_dfw",
            Variant::FcSfw => "fc_sfw",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, Variant::Sfw | Variant::FixedSfw | Variant::FcSfw)
    }

    pub fn is_fully_corrective(&self) -> bool {
        matches!(self, Variant::FcDfw | Variant::FcSfw)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum StepSchedule {
    /// eta_k = 2 / (k + 2 + offset). Offset 0 is the standard schedule with
    /// eta_0 = 1; offset 1 shifts the index by one so the initial measure
    /// survives the first step (needed when a pure Dirac is infeasible for
    /// the objective, as in optimal design).
    Harmonic { offset: u32 },
    Fixed(f64),
}

impl StepSchedule {
    pub fn harmonic() -> Self {
        StepSchedule::Harmonic { offset: 0 }
    }

    pub fn eta(&self, k: usize) -> f64 {
        match self {
            StepSchedule::Harmonic { offset } => 2.0 / (k as f64 + 2.0 + *offset as f64),
            StepSchedule::Fixed(eta) => *eta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let StepSchedule::Fixed(eta) = self {
            if !(*eta > 0.0 && *eta <= 1.0) {
                return Err(FwError::argument("fixed step must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub enum SampleSchedule {
    /// m used at iteration k is ceil(c * (k + 2)^2); monotone in k.
    Quadratic { c: f64 },
    Fixed(usize),
}

impl SampleSchedule {
    pub fn quadratic() -> Self {
        SampleSchedule::Quadratic { c: 1.0 }
    }

    pub fn m(&self, k: usize) -> usize {
        match self {
            SampleSchedule::Quadratic { c } => {
                let v = c * (k as f64 + 2.0) * (k as f64 + 2.0);
                v.ceil().max(1.0) as usize
            }
            SampleSchedule::Fixed(m) => (*m).max(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SampleSchedule::Quadratic { c } if !(*c > 0.0) => {
                Err(FwError::argument("sample schedule constant must be positive"))
            }
            SampleSchedule::Fixed(0) => Err(FwError::argument("fixed sample size must be >= 1")),
            _ => Ok(()),
        }
    }
}

/// Inner fully-corrective solve settings.
#[derive(Debug, Clone, Copy)]
pub struct FcConfig {
    pub inner_max_iters: usize,
    pub inner_gap_tol: f64,
}

impl Default for FcConfig {
    fn default() -> Self {
        Self {
            inner_max_iters: 200,
            inner_gap_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub variant: Variant,
    pub max_iters: usize,
    pub step: StepSchedule,
    pub samples: SampleSchedule,
    /// Allowed subproblem suboptimality for the fixed-step variant; 0 means
    /// exact subsolves.
    pub epsilon_tilde: f64,
    /// Audit period for inexact subsolves (compare against a fine reference).
    pub audit_every: usize,
    /// Record the Frank-Wolfe gap every this many iterations (0 = never);
    /// each gap evaluation is a full subsolve.
    pub gap_every: usize,
    /// Keep every iterate in the trace (needed by diagnostics that evaluate
    /// functionals at intermediate measures).
    pub keep_measures: bool,
    pub inner: FcConfig,
    pub sub: SubsolverConfig,
    pub seed: u64,
    pub rep: u64,
}

impl SolverConfig {
    pub fn new(variant: Variant, max_iters: usize, dim: usize) -> Self {
        Self {
            variant,
            max_iters,
            step: StepSchedule::harmonic(),
            samples: SampleSchedule::quadratic(),
            epsilon_tilde: 0.0,
            audit_every: 25,
            gap_every: 10,
            keep_measures: false,
            inner: FcConfig::default(),
            sub: SubsolverConfig::for_dim(dim),
            seed: 0,
            rep: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(FwError::argument("max_iters must be >= 1"));
        }
        if self.epsilon_tilde < 0.0 {
            return Err(FwError::argument("epsilon_tilde must be >= 0"));
        }
        self.step.validate()?;
        self.samples.validate()?;
        self.sub.validate()
    }
}

/// Per-iteration record. `m` is the sample size used for the subproblem
/// solved at this iterate (zero for deterministic variants); `fw_gap` is
/// filled only on gap-recording iterations.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub k: usize,
    pub objective: f64,
    pub obj_gap: Option<f64>,
    pub fw_gap: Option<f64>,
    pub atoms: usize,
    pub eta: f64,
    pub m: usize,
    pub minimizer: Option<Point>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub instance: String,
    pub variant: Variant,
    pub seed: u64,
    pub rep: u64,
    pub rows: Vec<TraceRow>,
    pub final_measure: AtomicMeasure,
    /// Every iterate, populated only when the config asks for it.
    pub measures: Vec<AtomicMeasure>,
    /// Worst audited subproblem suboptimality (fixed-step inexact runs).
    pub audit_worst: Option<f64>,
}

impl Trace {
    /// Gap column as (k, gap) pairs, for rate fitting.
    pub fn gap_series(&self) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter_map(|r| r.obj_gap.map(|g| (r.k, g)))
            .collect()
    }
}

/// A solver abort carrying the partial trace accumulated so far.
#[derive(Debug, Error)]
#[error("solver aborted at iteration {at_k}: {source}")]
pub struct SolverFailure {
    pub at_k: usize,
    #[source]
    pub source: FwError,
    pub partial: Trace,
}

pub type SolveResult = std::result::Result<Trace, Box<SolverFailure>>;

struct RunState<'a> {
    inst: &'a ProblemInstance,
    cfg: &'a SolverConfig,
    trace: Trace,
    started: Instant,
}

impl<'a> RunState<'a> {
    fn new(inst: &'a ProblemInstance, cfg: &'a SolverConfig) -> Self {
        Self {
            inst,
            cfg,
            trace: Trace {
                instance: inst.name().to_string(),
                variant: cfg.variant,
                seed: cfg.seed,
                rep: cfg.rep,
                rows: Vec::with_capacity(cfg.max_iters + 1),
                final_measure: AtomicMeasure::center_dirac(inst.domain()),
                measures: Vec::new(),
                audit_worst: None,
            },
            started: Instant::now(),
        }
    }

    fn fail(&mut self, k: usize, source: FwError) -> Box<SolverFailure> {
        Box::new(SolverFailure {
            at_k: k,
            source,
            partial: self.trace.clone(),
        })
    }

    fn try_at<T>(&mut self, k: usize, r: Result<T>) -> std::result::Result<T, Box<SolverFailure>> {
        match r {
            Ok(v) => Ok(v),
            Err(e) => Err(self.fail(k, e)),
        }
    }

    fn record(&mut self, k: usize, mu: &AtomicMeasure, m_used: usize) -> Result<()> {
        mu.validate()?;
        let objective = self.inst.objective(mu)?;
        let obj_gap = self
            .inst
            .truth()
            .and_then(|t| t.optimal_value)
            .map(|j_star| objective - j_star);
        let fw_gap = if self.cfg.gap_every > 0
            && k % self.cfg.gap_every == 0
            && self.inst.has_exact_influence()
        {
            Some(self.inst.fw_gap(mu, &self.cfg.sub)?)
        } else {
            None
        };
        self.trace.rows.push(TraceRow {
            k,
            objective,
            obj_gap,
            fw_gap,
            atoms: mu.atom_count(),
            eta: self.cfg.step.eta(k),
            m: m_used,
            minimizer: None,
            elapsed_ms: self.started.elapsed().as_secs_f64() * 1e3,
        });
        self.trace.final_measure = mu.clone();
        if self.cfg.keep_measures {
            self.trace.measures.push(mu.clone());
        }
        Ok(())
    }
}

fn check_start(inst: &ProblemInstance, mu0: &AtomicMeasure, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    if mu0.domain() != inst.domain() {
        return Err(FwError::argument(
            "initial measure lives on a different domain",
        ));
    }
    mu0.validate()?;
    if cfg.variant.is_stochastic() && !inst.has_stochastic_oracle() {
        return Err(FwError::capability(inst.name(), "a stochastic oracle"));
    }
    if !cfg.variant.is_stochastic() && !inst.has_exact_influence() {
        return Err(FwError::capability(inst.name(), "an exact influence function"));
    }
    Ok(())
}

/// The subproblem objective for iteration k: the exact influence for
/// deterministic variants, the frozen sampled estimate otherwise.
fn subproblem_fn(
    inst: &ProblemInstance,
    mu: &AtomicMeasure,
    cfg: &SolverConfig,
    k: usize,
) -> Result<(PointFn, usize)> {
    if cfg.variant.is_stochastic() {
        let m = cfg.samples.m(k);
        let stream = RngStream::solver(cfg.seed, k, cfg.rep);
        Ok((inst.mc_influence_fn(mu, m, stream)?, m))
    } else {
        Ok((inst.influence_fn(mu)?, 0))
    }
}

/// Deterministic Frank-Wolfe: mu_{k+1} = (1 - eta_k) mu_k + eta_k
/// delta_{x*} with x* minimizing the exact influence at mu_k.
pub fn run_dfw(inst: &ProblemInstance, mu0: &AtomicMeasure, cfg: &SolverConfig) -> SolveResult {
    debug_assert!(matches!(cfg.variant, Variant::Dfw));
    run_plain(inst, mu0, cfg)
}

/// Stochastic Frank-Wolfe: the subproblem minimizes the frozen sample-average
/// influence with the scheduled sample size; reproducible given the seed.
pub fn run_sfw(inst: &ProblemInstance, mu0: &AtomicMeasure, cfg: &SolverConfig) -> SolveResult {
    debug_assert!(matches!(cfg.variant, Variant::Sfw));
    run_plain(inst, mu0, cfg)
}

/// Fixed-step fixed-sample recursion with epsilon-inexact subsolves: the
/// subproblem is solved on a coarsened grid without refinement when
/// epsilon_tilde > 0, and the achieved suboptimality is audited against the
/// fine reference every `audit_every` iterations.
pub fn run_fixed_sfw(inst: &ProblemInstance, mu0: &AtomicMeasure, cfg: &SolverConfig) -> SolveResult {
    debug_assert!(matches!(cfg.variant, Variant::FixedSfw));
    if !matches!(cfg.step, StepSchedule::Fixed(_)) {
        let mut state = RunState::new(inst, cfg);
        return Err(state.fail(0, FwError::argument("fixed_sfw requires a fixed step")));
    }
    if !matches!(cfg.samples, SampleSchedule::Fixed(_)) {
        let mut state = RunState::new(inst, cfg);
        return Err(state.fail(0, FwError::argument("fixed_sfw requires a fixed sample size")));
    }
    run_plain(inst, mu0, cfg)
}

fn run_plain(inst: &ProblemInstance, mu0: &AtomicMeasure, cfg: &SolverConfig) -> SolveResult {
    let mut state = RunState::new(inst, cfg);
    if let Err(e) = check_start(inst, mu0, cfg) {
        return Err(state.fail(0, e));
    }
    let inexact = cfg.epsilon_tilde > 0.0;
    let coarse = cfg.sub.coarsened();
    let mut mu = mu0.clone();
    let rec = state.record(0, &mu, scheduled_m(cfg, 0));
    state.try_at(0, rec)?;
    for k in 0..cfg.max_iters {
        let (h, m_used) = {
            let r = subproblem_fn(inst, &mu, cfg, k);
            state.try_at(k, r)?
        };
        let sub_cfg = if inexact { &coarse } else { &cfg.sub };
        let sol = {
            let r = minimize_over_box(&|x: &[f64]| h(x), inst.domain(), sub_cfg);
            state.try_at(k, r)?
        };
        if inexact && cfg.audit_every > 0 && k % cfg.audit_every == 0 {
            let fine = {
                let r = minimize_over_box(&|x: &[f64]| h(x), inst.domain(), &cfg.sub);
                state.try_at(k, r)?
            };
            let achieved = sol.min_value - fine.min_value;
            let worst = state.trace.audit_worst.unwrap_or(0.0).max(achieved);
            state.trace.audit_worst = Some(worst);
        }
        if let Some(row) = state.trace.rows.last_mut() {
            row.minimizer = Some(sol.minimizer.clone());
            row.m = m_used.max(row.m);
        }
        let eta = cfg.step.eta(k);
        mu = {
            let stepped = AtomicMeasure::dirac(sol.minimizer, inst.domain().clone())
                .and_then(|d| mu.mix(&d, eta));
            state.try_at(k, stepped)?
        };
        let rec = state.record(k + 1, &mu, scheduled_m(cfg, k + 1));
        state.try_at(k + 1, rec)?;
    }
    Ok(state.trace)
}

fn scheduled_m(cfg: &SolverConfig, k: usize) -> usize {
    if cfg.variant.is_stochastic() {
        cfg.samples.m(k)
    } else {
        0
    }
}

/// Fully-corrective variants: discover an atom with the (exact or sampled)
/// subproblem, then reoptimize the exact objective over the convex hull of
/// all atoms found so far.
pub fn run_fully_corrective(
    inst: &ProblemInstance,
    mu0: &AtomicMeasure,
    cfg: &SolverConfig,
) -> SolveResult {
    debug_assert!(cfg.variant.is_fully_corrective());
    let mut state = RunState::new(inst, cfg);
    if let Err(e) = check_start(inst, mu0, cfg) {
        return Err(state.fail(0, e));
    }
    let mut atoms: Vec<Point> = mu0.atoms().to_vec();
    let mut weights: Vec<f64> = mu0.weights().to_vec();
    let dom = inst.domain().clone();
    let build = |atoms: &Vec<Point>, weights: &Vec<f64>| -> Result<AtomicMeasure> {
        AtomicMeasure::new(atoms.clone(), weights.clone(), dom.clone())
    };
    let mut mu = {
        let r = build(&atoms, &weights);
        state.try_at(0, r)?
    };
    let mut prev_obj = {
        let r = inst.objective(&mu);
        state.try_at(0, r)?
    };
    let rec = state.record(0, &mu, scheduled_m(cfg, 0));
    state.try_at(0, rec)?;
    for k in 0..cfg.max_iters {
        let (h, m_used) = {
            let r = subproblem_fn(inst, &mu, cfg, k);
            state.try_at(k, r)?
        };
        let sol: SubsolverResult = {
            let r = minimize_over_box(&|x: &[f64]| h(x), inst.domain(), &cfg.sub);
            state.try_at(k, r)?
        };
        if let Some(row) = state.trace.rows.last_mut() {
            row.minimizer = Some(sol.minimizer.clone());
            row.m = m_used.max(row.m);
        }
        let idx = match atoms
            .iter()
            .position(|a| crate::domain::euclidean(a, &sol.minimizer) <= DEFAULT_ATOM_TOL)
        {
            Some(i) => i,
            None => {
                atoms.push(sol.minimizer.clone());
                weights.push(0.0);
                atoms.len() - 1
            }
        };
        // Initialize the inner solve at the better of the previous weights
        // and the plain convex-combination step, so the fully-corrective
        // iterate dominates the plain one.
        let eta = cfg.step.eta(k);
        let mut plain: Vec<f64> = weights.iter().map(|w| (1.0 - eta) * w).collect();
        plain[idx] += eta;
        let plain_obj = {
            let r = build(&atoms, &plain).and_then(|m| inst.objective(&m));
            state.try_at(k, r)?
        };
        let w_init = if plain_obj <= prev_obj { plain } else { weights.clone() };
        let reweighted = {
            let r = simplex_reweight(inst, &atoms, &w_init, &cfg.inner);
            state.try_at(k, r)?
        };
        weights = reweighted;
        // Exact-zero housekeeping: drop atoms the inner solve abandoned.
        let mut kept_atoms = Vec::with_capacity(atoms.len());
        let mut kept_weights = Vec::with_capacity(weights.len());
        for (a, w) in atoms.iter().zip(&weights) {
            if *w > 1e-15 {
                kept_atoms.push(a.clone());
                kept_weights.push(*w);
            }
        }
        let total: f64 = kept_weights.iter().sum();
        for w in &mut kept_weights {
            *w /= total;
        }
        atoms = kept_atoms;
        weights = kept_weights;
        mu = {
            let r = build(&atoms, &weights);
            state.try_at(k, r)?
        };
        let obj = {
            let r = inst.objective(&mu);
            state.try_at(k, r)?
        };
        if obj > prev_obj + 1e-9 {
            let err = FwError::InnerSolve(format!(
                "objective increased from {prev_obj} to {obj} at iteration {k}"
            ));
            return Err(state.fail(k, err));
        }
        prev_obj = obj;
        let rec = state.record(k + 1, &mu, scheduled_m(cfg, k + 1));
        state.try_at(k + 1, rec)?;
    }
    Ok(state.trace)
}

const LINE_SEARCH_XTOL: f64 = 1e-12;

/// Approximately minimizes w -> J(sum_i w_i delta_{x_i}) over the simplex by
/// Frank-Wolfe with exact line search along vertex directions. The gradient
/// component at atom i is the influence value h_{mu(w)}(x_i); when the
/// instance has no exact influence the finite-difference fallback with
/// t = 1e-5 is used.
pub fn simplex_reweight(
    inst: &ProblemInstance,
    atoms: &[Point],
    w0: &[f64],
    fc: &FcConfig,
) -> Result<Vec<f64>> {
    if atoms.is_empty() || atoms.len() != w0.len() {
        return Err(FwError::argument("atoms and weights must match and be nonempty"));
    }
    let sum: f64 = w0.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || w0.iter().any(|w| *w < 0.0) {
        return Err(FwError::argument("initial weights must lie on the simplex"));
    }
    if atoms.len() == 1 {
        return Ok(vec![1.0]);
    }
    let dom = inst.domain().clone();
    let measure_of = |w: &[f64]| -> Result<AtomicMeasure> {
        AtomicMeasure::new(atoms.to_vec(), w.to_vec(), dom.clone())
    };
    let objective_of = |w: &[f64]| -> Result<f64> { inst.objective(&measure_of(w)?) };

    let mut w: Vec<f64> = w0.to_vec();
    let mut j_curr = objective_of(&w)?;
    for _ in 0..fc.inner_max_iters {
        let mu = measure_of(&w)?;
        let grads: Vec<f64> = if inst.has_exact_influence() {
            let h = inst.influence_fn(&mu)?;
            atoms.iter().map(|a| h(a)).collect()
        } else {
            atoms
                .iter()
                .map(|a| inst.fd_influence(&mu, a, ProblemInstance::FD_DEFAULT_T))
                .collect::<Result<Vec<f64>>>()?
        };
        // FW gap restricted to the simplex.
        let weighted: f64 = w.iter().zip(&grads).map(|(wi, gi)| wi * gi).sum();
        let (best_idx, best_grad) = grads
            .iter()
            .enumerate()
            .min_by(|a, b| {
                a.1.partial_cmp(b.1)
                    .unwrap()
                    .then_with(|| lex_cmp(&atoms[a.0], &atoms[b.0]))
            })
            .expect("nonempty gradient");
        let gap = weighted - best_grad;
        if gap <= fc.inner_gap_tol {
            break;
        }
        // Exact line search along the vertex direction (golden section on a
        // convex 1-d slice); t = 0 always remains a candidate so the inner
        // objective never increases.
        let phi = |t: f64| -> Result<f64> {
            let mut wt: Vec<f64> = w.iter().map(|wi| (1.0 - t) * wi).collect();
            wt[best_idx] += t;
            objective_of(&wt)
        };
        let mut lo = 0.0;
        let mut hi = 1.0;
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let mut t1 = hi - INV_PHI * (hi - lo);
        let mut t2 = lo + INV_PHI * (hi - lo);
        let mut f1 = phi(t1)?;
        let mut f2 = phi(t2)?;
        while hi - lo > LINE_SEARCH_XTOL {
            if f1 <= f2 {
                hi = t2;
                t2 = t1;
                f2 = f1;
                t1 = hi - INV_PHI * (hi - lo);
                f1 = phi(t1)?;
            } else {
                lo = t1;
                t1 = t2;
                f1 = f2;
                t2 = lo + INV_PHI * (hi - lo);
                f2 = phi(t2)?;
            }
        }
        let mut best_t = 0.0;
        let mut best_j = j_curr;
        for (t, j) in [(t1, f1), (t2, f2), (1.0, phi(1.0)?)] {
            if j < best_j {
                best_t = t;
                best_j = j;
            }
        }
        if best_t == 0.0 {
            break;
        }
        for wi in w.iter_mut() {
            *wi *= 1.0 - best_t;
        }
        w[best_idx] += best_t;
        if best_j > j_curr + 1e-12 {
            return Err(FwError::InnerSolve(format!(
                "line search increased the objective: {j_curr} -> {best_j}"
            )));
        }
        j_curr = best_j;
    }
    // Renormalize drift from repeated rescaling.
    let total: f64 = w.iter().sum();
    for wi in w.iter_mut() {
        *wi /= total;
    }
    Ok(w)
}
