use std::fmt;

use super::HydroError;

/// Piecewise-linear map between stored volume (m³) and surface elevation (m).
///
/// Both coordinates are strictly increasing, so the map is a bijection on
/// the covered range and can be inverted exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationStorageCurve {
    storage: Vec<f64>,
    elevation: Vec<f64>,
}

/// A lookup fell outside the tabulated range of a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRangeError {
    pub quantity: &'static str,
    pub value: f64,
    pub min: f64,
    pub max: f64,
    pub reservoir: Option<usize>,
    pub period: Option<usize>,
}

impl CurveRangeError {
    pub fn with_context(mut self, reservoir: usize, period: usize) -> Self {
        self.reservoir = Some(reservoir);
        self.period = Some(period);
        self
    }
}

impl fmt::Display for CurveRangeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} outside curve range [{}, {}]",
            self.quantity, self.value, self.min, self.max
        )?;
        if let Some(r) = self.reservoir {
            write!(f, " (reservoir {r}")?;
            if let Some(t) = self.period {
                write!(f, ", period {t}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl std::error::Error for CurveRangeError {}

impl ElevationStorageCurve {
    /// Builds a curve from `(storage, elevation)` knots.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, HydroError> {
        if points.len() < 2 {
            return Err(HydroError::InvalidCurve(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        for (k, w) in points.windows(2).enumerate() {
            let ((s0, e0), (s1, e1)) = (w[0], w[1]);
            if !(s0.is_finite() && e0.is_finite() && s1.is_finite() && e1.is_finite()) {
                return Err(HydroError::InvalidCurve(format!("non-finite value near knot {k}")));
            }
            if s1 <= s0 {
                return Err(HydroError::InvalidCurve(format!(
                    "storage not strictly increasing at knot {}",
                    k + 1
                )));
            }
            if e1 <= e0 {
                return Err(HydroError::InvalidCurve(format!(
                    "elevation not strictly increasing at knot {}",
                    k + 1
                )));
            }
        }
        let (storage, elevation) = points.into_iter().unzip();
        Ok(Self { storage, elevation })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.storage.iter().copied().zip(self.elevation.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn storage_range(&self) -> (f64, f64) {
        (self.storage[0], *self.storage.last().unwrap())
    }

    pub fn elevation_range(&self) -> (f64, f64) {
        (self.elevation[0], *self.elevation.last().unwrap())
    }

    /// Elevation at storage `v`, exact at knots.
    pub fn elevation_of_storage(&self, v: f64) -> Result<f64, CurveRangeError> {
        interpolate(&self.storage, &self.elevation, v).ok_or_else(|| {
            let (min, max) = self.storage_range();
            CurveRangeError {
                quantity: "storage",
                value: v,
                min,
                max,
                reservoir: None,
                period: None,
            }
        })
    }

    /// Inverse map: storage holding the surface at elevation `l`.
    pub fn storage_of_elevation(&self, l: f64) -> Result<f64, CurveRangeError> {
        interpolate(&self.elevation, &self.storage, l).ok_or_else(|| {
            let (min, max) = self.elevation_range();
            CurveRangeError {
                quantity: "elevation",
                value: l,
                min,
                max,
                reservoir: None,
                period: None,
            }
        })
    }

    /// Elevation with `v` clamped into the tabulated storage range.
    pub fn elevation_clamped(&self, v: f64) -> f64 {
        let (lo, hi) = self.storage_range();
        let v = if v.is_nan() { lo } else { v.clamp(lo, hi) };
        interpolate(&self.storage, &self.elevation, v).expect("clamped into range")
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let n = xs.len();
    if !(x >= xs[0] && x <= xs[n - 1]) {
        return None;
    }
    // first knot strictly greater than x
    let hi = xs.partition_point(|&k| k <= x);
    if hi == 0 {
        return Some(ys[0]);
    }
    if hi == n {
        return Some(ys[n - 1]);
    }
    let lo = hi - 1;
    if x == xs[lo] {
        return Some(ys[lo]);
    }
    let frac = (x - xs[lo]) / (xs[hi] - xs[lo]);
    Some(ys[lo] + frac * (ys[hi] - ys[lo]))
}
