use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Minimum pixel count of a region or of a displaced overlap.
pub const MIN_PIXELS: usize = 16;

/// Rectangle in frame pixel coordinates: columns `[x, x+width)`, rows
/// `[y, y+height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Region {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Result<Self> {
        if width * height < MIN_PIXELS {
            return Err(Error::Region(format!(
                "{width}x{height} holds fewer than {MIN_PIXELS} pixels"
            )));
        }
        Ok(Self {
            x,
            y,
            width,
            height,
        })
    }

    /// Central 80 % (per axis) of the signal half of a `rows × cols` frame.
    pub fn default_for(rows: usize, cols: usize) -> Result<Self> {
        let half = cols / 2;
        let w = (half * 4) / 5;
        let h = (rows * 4) / 5;
        Self::new((half - w) / 2, (rows - h) / 2, w, h)
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn check_within(&self, rows: usize, cols: usize) -> Result<()> {
        if self.x + self.width > cols || self.y + self.height > rows {
            return Err(Error::Region(format!(
                "{}x{} at ({}, {}) leaves the {rows}x{cols} frame",
                self.width, self.height, self.x, self.y
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationKind {
    Auto,
    Cross,
}

/// Correlation coefficients over integer displacements `|dy|, |dx| ≤
/// max_disp`; undefined entries hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMap {
    pub values: Array2<f64>,
    pub max_disp: usize,
    pub kind: CorrelationKind,
}

impl CorrelationMap {
    /// Map filled from `f(dy, dx)`; mostly for synthetic inputs.
    pub fn from_fn(kind: CorrelationKind, max_disp: usize, f: impl Fn(isize, isize) -> f64) -> Self {
        let d = max_disp as isize;
        let n = 2 * max_disp + 1;
        let values = Array2::from_shape_fn((n, n), |(r, c)| f(r as isize - d, c as isize - d));
        Self {
            values,
            max_disp,
            kind,
        }
    }

    pub fn get(&self, dy: isize, dx: isize) -> f64 {
        let d = self.max_disp as isize;
        if dy.abs() > d || dx.abs() > d {
            return f64::NAN;
        }
        self.values[[(dy + d) as usize, (dx + d) as usize]]
    }

    /// Displacement of the largest defined entry.
    pub fn argmax(&self) -> Option<(isize, isize)> {
        let d = self.max_disp as isize;
        self.values
            .indexed_iter()
            .filter(|(_, v)| v.is_finite())
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|((r, c), _)| (r as isize - d, c as isize - d))
    }

    pub fn is_fully_undefined(&self) -> bool {
        self.values.iter().all(|v| v.is_nan())
    }
}

/// Pearson coefficient of two equally long sequences; NaN if either is flat.
fn pearson(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let mut n = 0usize;
    let (mut sa, mut sb) = (0.0, 0.0);
    for (a, b) in pairs.clone() {
        n += 1;
        sa += a;
        sb += b;
    }
    let ma = sa / n as f64;
    let mb = sb / n as f64;
    let (mut cab, mut caa, mut cbb) = (0.0, 0.0, 0.0);
    for (a, b) in pairs {
        let da = a - ma;
        let db = b - mb;
        cab += da * db;
        caa += da * da;
        cbb += db * db;
    }
    if caa <= 0.0 || cbb <= 0.0 {
        return f64::NAN;
    }
    (cab / (caa * cbb).sqrt()).clamp(-1.0, 1.0)
}

/// Normalized autocorrelation of intensity fluctuations over `region`.
///
/// For each displacement ξ the means and variances are taken over the pixel
/// pairs `(x, x+ξ)` with both ends inside the region. Only one half-plane is
/// computed; C(−ξ) reuses the identical pair set, so the map is exactly
/// point-symmetric.
pub fn autocorrelation(data: ArrayView2<'_, f64>, region: &Region, max_disp: usize) -> Result<CorrelationMap> {
    let (rows, cols) = data.dim();
    region.check_within(rows, cols)?;
    let d = max_disp;
    if region.width <= d || region.height <= d || (region.width - d) * (region.height - d) < MIN_PIXELS {
        return Err(Error::Region(format!(
            "{}x{} region overlaps its ±{d} shifts in fewer than {MIN_PIXELS} pixels",
            region.width, region.height
        )));
    }
    let n = 2 * d + 1;
    let mut values = Array2::from_elem((n, n), f64::NAN);
    let di = d as isize;
    for dy in 0..=di {
        for dx in -di..=di {
            if dy == 0 && dx < 0 {
                continue;
            }
            let r_lo = region.y;
            let r_hi = region.y + region.height - dy as usize;
            let c_lo = region.x + (-dx).max(0) as usize;
            let c_hi = region.x + region.width - dx.max(0) as usize;
            let pairs = (r_lo..r_hi).flat_map(move |r| {
                (c_lo..c_hi).map(move |c| {
                    (
                        data[[r, c]],
                        data[[r + dy as usize, (c as isize + dx) as usize]],
                    )
                })
            });
            let mut v = pearson(pairs);
            if dy == 0 && dx == 0 && v.is_finite() {
                v = 1.0;
            }
            values[[(di + dy) as usize, (di + dx) as usize]] = v;
            values[[(di - dy) as usize, (di - dx) as usize]] = v;
        }
    }
    Ok(CorrelationMap {
        values,
        max_disp,
        kind: CorrelationKind::Auto,
    })
}

/// Correlation between region `r1` of the signal half and the point-reflected
/// region of the idler half shifted by each displacement.
///
/// The reflection maps pixel `(r, c)` to `(rows−1−r, cols−1−c)`, which is the
/// twin pixel of a registered frame, so the q → −q pairing shows up at
/// displacement (0, 0).
pub fn cross_correlation(data: ArrayView2<'_, f64>, r1: &Region, max_disp: usize) -> Result<CorrelationMap> {
    let (rows, cols) = data.dim();
    if cols % 2 != 0 {
        return Err(Error::Region(format!("frame width {cols} is not split into two halves")));
    }
    let half = cols / 2;
    r1.check_within(rows, half)?;
    let d = max_disp;
    // reflected rows span [rows−y−h, rows−1−y], columns [cols−x−w, cols−1−x]
    let fits = r1.y >= d
        && r1.x >= d
        && rows - r1.y - r1.height >= d
        && cols - r1.x - r1.width >= half + d;
    if !fits {
        return Err(Error::Region(format!(
            "reflected region shifted by ±{d} leaves the idler half"
        )));
    }
    let n = 2 * d + 1;
    let di = d as isize;
    let mut values = Array2::from_elem((n, n), f64::NAN);
    for dy in -di..=di {
        for dx in -di..=di {
            let pairs = (r1.y..r1.y + r1.height).flat_map(move |r| {
                (r1.x..r1.x + r1.width).map(move |c| {
                    let r2 = (rows - 1 - r) as isize + dy;
                    let c2 = (cols - 1 - c) as isize + dx;
                    (data[[r, c]], data[[r2 as usize, c2 as usize]])
                })
            });
            values[[(di + dy) as usize, (di + dx) as usize]] = pearson(pairs);
        }
    }
    Ok(CorrelationMap {
        values,
        max_disp,
        kind: CorrelationKind::Cross,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn white(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(&mut rng))
    }

    #[test]
    fn region_minimum_size() {
        assert!(Region::new(0, 0, 3, 5).is_err());
        assert!(Region::new(0, 0, 4, 4).is_ok());
    }

    #[test]
    fn zero_lag_is_one_and_map_symmetric() {
        let img = white(40, 80, 1);
        let reg = Region::new(4, 4, 30, 30).unwrap();
        let m = autocorrelation(img.view(), &reg, 6).unwrap();
        assert_eq!(m.get(0, 0), 1.0);
        for dy in -6..=6 {
            for dx in -6..=6 {
                assert_eq!(m.get(dy, dx), m.get(-dy, -dx));
                assert!(m.get(dy, dx).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn white_noise_decorrelates() {
        let img = white(64, 128, 2);
        let reg = Region::new(2, 2, 56, 56).unwrap();
        let m = autocorrelation(img.view(), &reg, 8).unwrap();
        let bound = 3.0 / (56.0 - 8.0);
        let mut bad = 0;
        let mut total = 0;
        for dy in -8..=8isize {
            for dx in -8..=8isize {
                if (dy, dx) != (0, 0) {
                    total += 1;
                    if m.get(dy, dx).abs() >= bound {
                        bad += 1;
                    }
                }
            }
        }
        assert!((bad as f64) <= 0.01 * total as f64 + 1.0, "{bad}/{total}");
    }

    #[test]
    fn constant_frame_is_undefined() {
        let img = Array2::from_elem((20, 40), 7.0);
        let reg = Region::new(0, 0, 20, 20).unwrap();
        let m = autocorrelation(img.view(), &reg, 4).unwrap();
        assert!(m.is_fully_undefined());
        assert!(m.argmax().is_none());
    }

    #[test]
    fn region_too_small_for_shifts() {
        let img = white(20, 40, 3);
        let reg = Region::new(0, 0, 6, 6).unwrap();
        assert!(matches!(autocorrelation(img.view(), &reg, 4), Err(Error::Region(_))));
    }

    #[test]
    fn mirrored_copy_gives_unit_cross_correlation() {
        let rows = 24;
        let half = 24;
        let sig = white(rows, half, 4);
        let mut img = Array2::zeros((rows, 2 * half));
        for r in 0..rows {
            for c in 0..half {
                img[[r, c]] = sig[[r, c]];
                img[[rows - 1 - r, 2 * half - 1 - c]] = sig[[r, c]];
            }
        }
        let reg = Region::new(4, 4, 16, 16).unwrap();
        let m = cross_correlation(img.view(), &reg, 4).unwrap();
        assert!((m.get(0, 0) - 1.0).abs() < 1e-12);
        assert_eq!(m.argmax(), Some((0, 0)));
    }

    #[test]
    fn cross_region_must_leave_margin() {
        let img = white(24, 48, 5);
        let reg = Region::new(0, 4, 16, 16).unwrap();
        assert!(matches!(cross_correlation(img.view(), &reg, 4), Err(Error::Region(_))));
    }
}
