//! Straight-line fits in log-log coordinates.

use crate::error::{Error, Result};

/// Result of fitting `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square (weighted) residual.
    pub residual: f64,
}

/// Weighted least squares; `w` are non-negative weights.
pub fn weighted_line(x: &[f64], y: &[f64], w: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::Fit("length mismatch".into()));
    }
    let used = w.iter().filter(|&&v| v > 0.0).count();
    if used < 2 {
        return Err(Error::Fit(format!("need two weighted points, have {used}")));
    }
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((xi, yi), wi) in x.iter().zip(y).zip(w) {
        sxx += wi * (xi - mx) * (xi - mx);
        sxy += wi * (xi - mx) * (yi - my);
    }
    if sxx <= 0.0 {
        return Err(Error::Fit("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((xi, yi), wi)| wi * (yi - intercept - slope * xi).powi(2))
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        residual: (ss / sw).sqrt(),
    })
}

/// Line fit with known per-point variances `v` plus a common excess
/// variance `σ²` chosen so the weighted chi-square equals its degrees of
/// freedom (Paule–Mandel). Returns the fit and `σ²`.
pub fn scatter_line(x: &[f64], y: &[f64], v: &[f64]) -> Result<(LineFit, f64)> {
    let fit_at = |s2: f64| -> Result<(LineFit, f64)> {
        let w: Vec<f64> = v.iter().map(|vi| 1.0 / (vi + s2).max(1e-300)).collect();
        let f = weighted_line(x, y, &w)?;
        let q = x
            .iter()
            .zip(y)
            .zip(&w)
            .map(|((xi, yi), wi)| wi * (yi - f.intercept - f.slope * xi).powi(2))
            .sum();
        Ok((f, q))
    };
    let dof = x.len() as f64 - 2.0;
    let (f0, q0) = fit_at(0.0)?;
    if dof <= 0.0 || q0 <= dof {
        return Ok((f0, 0.0));
    }
    let spread = y.iter().fold(0.0_f64, |a, b| a.max((b - y[0]).abs()));
    let mut lo = 0.0;
    let mut hi = (spread * spread).max(1e-12);
    while fit_at(hi)?.1 > dof {
        hi *= 4.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fit_at(mid)?.1 > dof {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((fit_at(hi)?.0, hi))
}

/// Standard error of the slope for weights `w`.
pub fn slope_stderr(x: &[f64], w: &[f64]) -> f64 {
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - mx) * (a - mx)).sum();
    (1.0 / sxx).sqrt()
}

pub fn line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    weighted_line(x, y, &vec![1.0; x.len()])
}

/// Fit of `log v` against `log k`; requires positive data.
pub fn loglog(k: &[f64], v: &[f64]) -> Result<LineFit> {
    if k.iter().chain(v).any(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(Error::Fit("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = k.iter().map(|a| a.ln()).collect();
    let ly: Vec<f64> = v.iter().map(|a| a.ln()).collect();
    line(&lx, &ly)
}

/// Empirical quantile with linear interpolation; `q` in [0, 1].
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean and standard error of the mean.
pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let m = mean(v);
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (m, (var / v.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_zero_for_consistent_data() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (f, s2) = scatter_line(&x, &y, &[0.01; 4]).unwrap();
        assert_eq!(s2, 0.0);
        assert!((f.slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scatter_absorbs_misfit() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [0.0, 1.5, 1.5, 3.5, 3.5];
        let v = [1e-8; 5];
        let (f, s2) = scatter_line(&x, &y, &v).unwrap();
        let w = [1.0 / (1e-8 + s2); 5];
        let q: f64 = (0..5)
            .map(|i| w[i] * (y[i] - f.intercept - f.slope * x[i]).powi(2))
            .sum();
        assert!(s2 > 0.0);
        assert!((q - 3.0).abs() < 1e-6, "{q}");
    }

    #[test]
    fn exact_line_recovered() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 1.5 - 0.25 * v).collect();
        let f = line(&x, &y).unwrap();
        assert!((f.slope + 0.25).abs() < 1e-14);
        assert!((f.intercept - 1.5).abs() < 1e-14);
        assert!(f.residual < 1e-14);
    }

    #[test]
    fn zero_weight_points_ignored() {
        let f = weighted_line(&[0.0, 1.0, 2.0], &[0.0, 1.0, 100.0], &[1.0, 1.0, 0.0]).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-14);
    }

    #[test]
    fn loglog_power_law() {
        let k = [16.0, 32.0, 64.0];
        let v: Vec<f64> = k.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((loglog(&k, &v).unwrap().slope + 0.5).abs() < 1e-12);
        assert!(loglog(&k, &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn quantile_interpolates() {
        let s = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile(&s, 0.5), 1.5);
        assert_eq!(quantile(&s, 1.0), 3.0);
    }
}
