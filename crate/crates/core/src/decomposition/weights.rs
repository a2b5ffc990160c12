use std::fmt;

use super::BoundsError;

/// Convex combination of the three objectives.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WeightVector([f64; 3]);

impl WeightVector {
    /// Accepts nonnegative weights summing to one within 1e-9.
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self, BoundsError> {
        let w = [w1, w2, w3];
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0 && *x <= 1.0)) {
            return Err(BoundsError::InvalidWeights(format!("{w:?} has a component outside [0, 1]")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(BoundsError::InvalidWeights(format!("{w:?} sums to {sum}")));
        }
        Ok(Self(w))
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    /// Parses `"a,b,c"`.
    pub fn parse(s: &str) -> Result<Self, BoundsError> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| BoundsError::InvalidWeights(format!("{s:?}: {e}")))?;
        match parts.as_slice() {
            [a, b, c] => Self::new(*a, *b, *c),
            _ => Err(BoundsError::InvalidWeights(format!("{s:?}: expected three comma-separated values"))),
        }
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0[0], self.0[1], self.0[2])
    }
}

/// Every weight vector with components in `{0.05, 0.10, …, 0.90}` that sums
/// to one, in lexicographic order: 171 vectors from `[0.05, 0.05, 0.9]` to
/// `[0.9, 0.05, 0.05]`.
pub fn weight_grid() -> Vec<WeightVector> {
    const STEPS: u32 = 20;
    let mut out = Vec::with_capacity(171);
    for a in 1..STEPS {
        for b in 1..STEPS - a {
            let c = STEPS - a - b;
            out.push(WeightVector([
                a as f64 / STEPS as f64,
                b as f64 / STEPS as f64,
                c as f64 / STEPS as f64,
            ]));
        }
    }
    out
}
