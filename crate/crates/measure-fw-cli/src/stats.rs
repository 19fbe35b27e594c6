//! Small statistics toolbox for the harness checks.

use statrs::distribution::{ContinuousCDF, Normal};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n - 1 denominator).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Standard error of the sample mean.
pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Ordinary least squares fit y = intercept + slope * x.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope estimate.
    pub slope_se: f64,
}

pub fn ols(points: &[(f64, f64)]) -> Option<LineFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| {
            let r = p.1 - intercept - slope * p.0;
            r * r
        })
        .sum();
    let slope_se = if points.len() > 2 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LineFit {
        slope,
        intercept,
        slope_se,
    })
}

/// Anderson-Darling normality statistic with estimated mean and variance
/// (the A*^2 modification). The 1% critical value for this case is 1.035;
/// reject normality when the statistic exceeds it.
pub const AD_CRITICAL_1PCT: f64 = 1.035;

pub fn anderson_darling(xs: &[f64]) -> f64 {
    let n = xs.len();
    assert!(n >= 8, "Anderson-Darling needs a reasonable sample");
    let m = mean(xs);
    let sd = variance(xs).sqrt();
    let mut z: Vec<f64> = xs.iter().map(|x| (x - m) / sd).collect();
    z.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let normal = Normal::new(0.0, 1.0).unwrap();
    let nf = n as f64;
    let mut a2 = -nf;
    for i in 0..n {
        let phi_i = normal.cdf(z[i]).clamp(1e-300, 1.0 - 1e-16);
        let phi_tail = (1.0 - normal.cdf(z[n - 1 - i])).clamp(1e-300, 1.0);
        a2 -= (2.0 * i as f64 + 1.0) / nf * (phi_i.ln() + phi_tail.ln());
    }
    a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use measure_fw::RngStream;
    use rand::Rng;

    #[test]
    fn ols_recovers_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 - 2.0 * i as f64)).collect();
        let fit = ols(&pts).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!((fit.intercept - 3.0).abs() < 1e-12);
        assert!(fit.slope_se < 1e-9);
    }

    #[test]
    fn anderson_darling_separates_normal_from_uniform() {
        let mut rng = RngStream::new(1234, 0, 0).rng();
        // Approximately normal draws via CLT of 12 uniforms.
        let normals: Vec<f64> = (0..500)
            .map(|_| (0..12).map(|_| rng.random_range(0.0..1.0)).sum::<f64>() - 6.0)
            .collect();
        assert!(anderson_darling(&normals) < AD_CRITICAL_1PCT);
        let uniforms: Vec<f64> = (0..500).map(|_| rng.random_range(0.0..1.0)).collect();
        assert!(anderson_darling(&uniforms) > AD_CRITICAL_1PCT);
    }

    #[test]
    fn moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        assert!((std_error(&xs) - (5.0 / 12.0f64).sqrt()).abs() < 1e-15);
    }
}
