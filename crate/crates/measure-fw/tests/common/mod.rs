//! Shared test oracles, independent of the library's evaluation paths.

use measure_fw::{AtomicMeasure, BoxDomain, ProblemInstance, RngStream};
use rand::Rng;

/// Adaptive Simpson quadrature; the brute-force cross-check for the
/// piecewise closed-form integrals used by the instances.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(f, a, fa, m, fm, flm);
        let right = simpson(f, m, fm, b, fb, frm);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(f, a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 48)
}

/// Deterministic random atomic measure with up to `max_atoms` atoms.
pub fn random_measure(
    dom: &BoxDomain,
    max_atoms: usize,
    rng: &mut impl Rng,
) -> AtomicMeasure {
    let d = dom.dim();
    let n = rng.random_range(1..=max_atoms);
    let atoms: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|c| rng.random_range(dom.lower()[c]..=dom.upper()[c]))
                .collect()
        })
        .collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    AtomicMeasure::new(atoms, raw.iter().map(|w| w / s).collect(), dom.clone()).unwrap()
}

/// Random measure that always carries some mass at the upper corner; needed
/// for instances whose influence blows up above the support (CRE).
pub fn random_measure_with_top(
    dom: &BoxDomain,
    max_atoms: usize,
    rng: &mut impl Rng,
) -> AtomicMeasure {
    let base = random_measure(dom, max_atoms, rng);
    let top = AtomicMeasure::dirac(dom.upper().to_vec(), dom.clone()).unwrap();
    base.mix(&top, rng.random_range(0.1..0.5)).unwrap()
}

pub fn stream(tag: u64) -> RngStream {
    RngStream::new(0xC0FFEE, tag, 0)
}

/// Sample mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Instance-appropriate random measure for invariant sweeps.
pub fn instance_measure(
    inst: &ProblemInstance,
    rng: &mut impl Rng,
) -> AtomicMeasure {
    match inst.name() {
        "cre" => random_measure_with_top(inst.domain(), 4, rng),
        // Designs need full-rank information matrices: three spread atoms.
        "doptimal" => {
            let dom = inst.domain();
            let mut m = random_measure(dom, 3, rng);
            let lo = AtomicMeasure::dirac(dom.lower().to_vec(), dom.clone()).unwrap();
            let hi = AtomicMeasure::dirac(dom.upper().to_vec(), dom.clone()).unwrap();
            m = m.mix(&lo, 0.25).unwrap();
            m.mix(&hi, 0.25).unwrap()
        }
        _ => random_measure(inst.domain(), 4, rng),
    }
}
