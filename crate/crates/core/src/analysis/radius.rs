use std::f64::consts::LN_2;

use super::correlation::{CorrelationKind, CorrelationMap};
use crate::config::RadiusConvention;
use crate::error::{Error, Result};

/// Gaussian shoulder fitted to an autocorrelation map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusEstimate {
    /// Radius in pixels under `convention`.
    pub radius: f64,
    pub stderr: f64,
    /// Fitted Gaussian standard width s.
    pub width: f64,
    pub amplitude: f64,
    pub convention: RadiusConvention,
    pub points: usize,
}

fn convention_factor(c: RadiusConvention) -> f64 {
    match c {
        RadiusConvention::Hwhm => (2.0 * LN_2).sqrt(),
        RadiusConvention::OneOverE => 2f64.sqrt(),
    }
}

/// HWHM of the autocorrelation shoulder.
pub fn speckle_radius(map: &CorrelationMap) -> Result<RadiusEstimate> {
    speckle_radius_with(map, RadiusConvention::Hwhm)
}

/// Fit `A·exp(−|ξ|²/(2s²))` to every defined entry with `1 ≤ |ξ| ≤ max_disp`.
///
/// The zero-lag spike is excluded. A is eliminated linearly, leaving a 1-D
/// minimisation over s.
pub fn speckle_radius_with(map: &CorrelationMap, convention: RadiusConvention) -> Result<RadiusEstimate> {
    if map.kind != CorrelationKind::Auto {
        return Err(Error::DegenerateMap("radius needs an autocorrelation map".into()));
    }
    if map.max_disp < 4 {
        return Err(Error::DegenerateMap(format!(
            "max displacement {} < 4",
            map.max_disp
        )));
    }
    let d = map.max_disp as isize;
    let dmax2 = (map.max_disp * map.max_disp) as f64;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for dy in -d..=d {
        for dx in -d..=d {
            let r2 = (dy * dy + dx * dx) as f64;
            let v = map.get(dy, dx);
            if r2 >= 1.0 && r2 <= dmax2 && v.is_finite() {
                pts.push((r2, v));
            }
        }
    }
    if pts.len() < 3 {
        return Err(Error::DegenerateMap(format!("{} defined entries", pts.len())));
    }

    // RSS(s) with the optimal amplitude for that s
    let profile = |s: f64| -> (f64, f64) {
        let k = 0.5 / (s * s);
        let (mut yf, mut ff) = (0.0, 0.0);
        for &(r2, y) in &pts {
            let f = (-r2 * k).exp();
            yf += y * f;
            ff += f * f;
        }
        let a = if ff > 0.0 { yf / ff } else { 0.0 };
        let rss = pts
            .iter()
            .map(|&(r2, y)| (y - a * (-r2 * k).exp()).powi(2))
            .sum::<f64>();
        (rss, a)
    };

    let lo = 0.1f64;
    let hi = 4.0 * map.max_disp as f64;
    let steps: usize = 200;
    let ratio = (hi / lo).powf(1.0 / steps as f64);
    let grid: Vec<f64> = (0..=steps).map(|i| lo * ratio.powi(i as i32)).collect();
    let (best, _) = grid
        .iter()
        .enumerate()
        .map(|(i, &s)| (i, profile(s).0))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    if best == 0 {
        return Err(Error::DegenerateMap("no resolvable shoulder beyond zero lag".into()));
    }
    if best == steps {
        return Err(Error::DegenerateMap("shoulder wider than the displacement window".into()));
    }
    let mut s = golden_min(|s| profile(s).0, grid[best - 1], grid[best + 1], 1e-12);
    // Gauss-Newton polish on (A, s); the golden bracket is limited by RSS rounding
    let (mut rss, mut amp) = profile(s);
    for _ in 0..20 {
        let (mut jaa, mut jas, mut jss, mut ga, mut gs) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(r2, y) in &pts {
            let f = (-r2 / (2.0 * s * s)).exp();
            let ds = amp * f * r2 / (s * s * s);
            let r = y - amp * f;
            jaa += f * f;
            jas += f * ds;
            jss += ds * ds;
            ga += f * r;
            gs += ds * r;
        }
        let det = jaa * jss - jas * jas;
        if !(det > 0.0) {
            break;
        }
        let step_s = (jaa * gs - jas * ga) / det;
        let trial = s + step_s;
        if !(trial > 0.0) {
            break;
        }
        let (trial_rss, trial_amp) = profile(trial);
        if trial_rss > rss {
            break;
        }
        let done = step_s.abs() <= 1e-14 * s;
        s = trial;
        rss = trial_rss;
        amp = trial_amp;
        if done {
            break;
        }
    }
    if amp <= 0.0 {
        return Err(Error::DegenerateMap(format!("non-positive shoulder amplitude {amp:.3e}")));
    }

    // Gauss-Newton covariance of (A, s)
    let (mut jaa, mut jas, mut jss) = (0.0, 0.0, 0.0);
    for &(r2, _) in &pts {
        let f = (-r2 / (2.0 * s * s)).exp();
        let ds = amp * f * r2 / (s * s * s);
        jaa += f * f;
        jas += f * ds;
        jss += ds * ds;
    }
    let det = jaa * jss - jas * jas;
    if !(det > 0.0) {
        return Err(Error::DegenerateMap("non-positive curvature at the fitted width".into()));
    }
    let dof = pts.len() as f64 - 2.0;
    let var_s = rss / dof * jaa / det;
    let factor = convention_factor(convention);
    Ok(RadiusEstimate {
        radius: factor * s,
        stderr: factor * var_s.sqrt(),
        width: s,
        amplitude: amp,
        convention,
        points: pts.len(),
    })
}

/// Golden-section minimum of a unimodal function on `[a, b]`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaussian_map(s: f64, amp: f64, max_disp: usize) -> CorrelationMap {
        CorrelationMap::from_fn(CorrelationKind::Auto, max_disp, |dy, dx| {
            if (dy, dx) == (0, 0) {
                1.0
            } else {
                amp * (-((dy * dy + dx * dx) as f64) / (2.0 * s * s)).exp()
            }
        })
    }

    #[test]
    fn recovers_width_two() {
        // exp(−|ξ|²/8) ⇒ s = 2, HWHM = 2·sqrt(2 ln 2) = 2.35482
        let r = speckle_radius(&gaussian_map(2.0, 1.0, 8)).unwrap();
        assert_relative_eq!(r.width, 2.0, max_relative = 1e-6);
        assert_relative_eq!(r.radius, 2.354_820_045_030_949, max_relative = 1e-6);
        assert!(r.stderr < 1e-6);
    }

    #[test]
    fn one_over_e_convention() {
        let r = speckle_radius_with(&gaussian_map(2.0, 0.6, 8), RadiusConvention::OneOverE).unwrap();
        assert_relative_eq!(r.radius, 2.0 * 2f64.sqrt(), max_relative = 1e-6);
        assert_relative_eq!(r.amplitude, 0.6, max_relative = 1e-6);
    }

    #[test]
    fn amplitude_does_not_move_radius() {
        let a = speckle_radius(&gaussian_map(1.7, 0.9, 8)).unwrap();
        let b = speckle_radius(&gaussian_map(1.7, 0.09, 8)).unwrap();
        assert_relative_eq!(a.radius, b.radius, max_relative = 1e-8);
    }

    #[test]
    fn flat_map_is_degenerate() {
        let m = CorrelationMap::from_fn(CorrelationKind::Auto, 6, |dy, dx| {
            if (dy, dx) == (0, 0) {
                1.0
            } else {
                0.0
            }
        });
        assert!(matches!(speckle_radius(&m), Err(Error::DegenerateMap(_))));
    }

    #[test]
    fn cross_map_rejected() {
        let m = CorrelationMap::from_fn(CorrelationKind::Cross, 6, |_, _| 0.5);
        assert!(matches!(speckle_radius(&m), Err(Error::DegenerateMap(_))));
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let x = golden_min(|x| (x - 1.25).powi(2), 0.0, 3.0, 1e-12);
        assert_relative_eq!(x, 1.25, max_relative = 1e-6);
    }
}
