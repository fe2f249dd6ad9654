use super::radius::golden_min;
use crate::error::{Error, Result};
use crate::synthesis::MAX_GAIN;

#[derive(Debug, Clone, PartialEq)]
pub struct FitParameter {
    pub name: &'static str,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub parameters: Vec<FitParameter>,
    /// sqrt of the residual sum of squares.
    pub residual_norm: f64,
    pub points: usize,
}

impl FitResult {
    pub fn parameter(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

fn check_points(points: &[(f64, f64)], min: usize) -> Result<()> {
    if points.len() < min {
        return Err(Error::Fit(format!("{} points, need at least {min}", points.len())));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Fit("non-finite input point".into()));
    }
    Ok(())
}

/// Least-squares σ in `N = k sinh²(σ A)` with `k` fixed.
///
/// The search range puts the largest gain σ·A_max between 1e-6 and the
/// synthesis gain ceiling.
pub fn fit_sinh2(points: &[(f64, f64)], k: f64) -> Result<FitResult> {
    let a_max = points.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    if !(a_max > 0.0) {
        return Err(Error::Fit("all pump amplitudes are zero".into()));
    }
    fit_sinh2_in(points, k, (1e-6 / a_max, MAX_GAIN / a_max))
}

/// [`fit_sinh2`] on an explicit σ range: log-grid scan, golden-section
/// bracket refinement, then Newton polishing to 1e-9 relative.
pub fn fit_sinh2_in(points: &[(f64, f64)], k: f64, range: (f64, f64)) -> Result<FitResult> {
    check_points(points, 3)?;
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Fit(format!("k = {k} must be positive")));
    }
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Fit(format!("bad σ range [{lo}, {hi}]")));
    }
    let rss = |s: f64| -> f64 {
        points
            .iter()
            .map(|&(a, n)| {
                let r = n - k * (s * a).sinh().powi(2);
                r * r
            })
            .sum()
    };
    let steps: usize = 400;
    let ratio = (hi / lo).powf(1.0 / steps as f64);
    let grid: Vec<f64> = (0..=steps).map(|i| lo * ratio.powi(i as i32)).collect();
    let best = grid
        .iter()
        .enumerate()
        .map(|(i, &s)| (i, rss(s)))
        .filter(|(_, r)| r.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Fit("residual overflow across the σ range".into()))?;
    if best == 0 || best == steps {
        return Err(Error::Fit(format!(
            "no bracketed minimum in σ ∈ [{lo:.3e}, {hi:.3e}]"
        )));
    }
    let mut s = golden_min(rss, grid[best - 1], grid[best + 1], 1e-12);

    // Newton on dRSS/dσ
    for _ in 0..50 {
        let (mut g1, mut g2) = (0.0, 0.0);
        for &(a, n) in points {
            let sh = (s * a).sinh();
            let r = n - k * sh * sh;
            let j = k * a * (2.0 * s * a).sinh();
            let dj = 2.0 * k * a * a * (2.0 * s * a).cosh();
            g1 += -2.0 * r * j;
            g2 += 2.0 * (j * j - r * dj);
        }
        if !(g2 > 0.0) {
            break;
        }
        let step = g1 / g2;
        let next = s - step;
        if !(next > grid[best - 1] && next < grid[best + 1]) {
            break;
        }
        s = next;
        if step.abs() <= 1e-9 * s.abs() {
            break;
        }
    }

    let res = rss(s);
    let jj: f64 = points
        .iter()
        .map(|&(a, _)| (k * a * (2.0 * s * a).sinh()).powi(2))
        .sum();
    if !(jj > 0.0) {
        return Err(Error::Fit("zero sensitivity to σ".into()));
    }
    let n = points.len() as f64;
    Ok(FitResult {
        parameters: vec![FitParameter {
            name: "sigma",
            value: s,
            stderr: (res / (n - 1.0) / jj).sqrt(),
        }],
        residual_norm: res.sqrt(),
        points: points.len(),
    })
}

/// Ordinary least squares `y = α x + y₀`. Two points interpolate exactly and
/// carry infinite standard errors.
pub fn fit_linear(points: &[(f64, f64)]) -> Result<FitResult> {
    check_points(points, 2)?;
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("all abscissae coincide; slope undetermined".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let (se_slope, se_icpt) = if points.len() > 2 {
        let s2 = rss / (n - 2.0);
        let sum_x2: f64 = points.iter().map(|p| p.0 * p.0).sum();
        ((s2 / sxx).sqrt(), (s2 * sum_x2 / (n * sxx)).sqrt())
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(FitResult {
        parameters: vec![
            FitParameter {
                name: "slope",
                value: slope,
                stderr: se_slope,
            },
            FitParameter {
                name: "intercept",
                value: intercept,
                stderr: se_icpt,
            },
        ],
        residual_norm: rss.sqrt(),
        points: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sinh2_identity() {
        let pts: Vec<(f64, f64)> = (1..=5)
            .map(|i| {
                let a = i as f64 * 0.4;
                (a, a.sinh().powi(2))
            })
            .collect();
        let f = fit_sinh2(&pts, 1.0).unwrap();
        assert_relative_eq!(f.parameters[0].value, 1.0, max_relative = 1e-9);
        assert!(f.residual_norm < 1e-9);
    }

    #[test]
    fn sinh2_needs_three_points() {
        assert!(matches!(fit_sinh2(&[(1.0, 1.0), (2.0, 2.0)], 1.0), Err(Error::Fit(_))));
    }

    #[test]
    fn sinh2_unbracketed() {
        let pts = [(1.0, 1.0), (2.0, 4.0), (3.0, 9.0)];
        assert!(matches!(fit_sinh2_in(&pts, 1.0, (10.0, 20.0)), Err(Error::Fit(_))));
    }

    #[test]
    fn line_recovery() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| (i as f64 * 0.5, 0.67 * i as f64 * 0.5 + 1.0)).collect();
        let f = fit_linear(&pts).unwrap();
        assert_relative_eq!(f.parameter("slope").unwrap().value, 0.67, max_relative = 1e-12);
        assert_relative_eq!(f.parameter("intercept").unwrap().value, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn two_points_interpolate() {
        let f = fit_linear(&[(1.0, 2.0), (3.0, 3.0)]).unwrap();
        assert_relative_eq!(f.parameters[0].value, 0.5);
        assert_relative_eq!(f.parameters[1].value, 1.5);
        assert_eq!(f.residual_norm, 0.0);
        assert!(f.parameters[0].stderr.is_infinite());
    }

    #[test]
    fn rank_deficient_line() {
        assert!(matches!(fit_linear(&[(1.0, 2.0), (1.0, 3.0), (1.0, 4.0)]), Err(Error::Fit(_))));
    }
}
