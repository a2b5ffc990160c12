//! Simulated binary crossover and polynomial mutation on `[0, 1]` genes.

use rand::Rng;

/// SBX on each gene pair with probability 0.5 (bounded variant).
pub fn sbx<R: Rng + ?Sized>(a: &[f64], b: &[f64], eta: f64, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = a.to_vec();
    let mut c2 = b.to_vec();
    for k in 0..a.len() {
        if !rng.random_bool(0.5) {
            continue;
        }
        let (x1, x2) = (a[k].min(b[k]), a[k].max(b[k]));
        if x2 - x1 < 1e-14 {
            continue;
        }
        let u: f64 = rng.random();
        let child = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let beta_lo = 1.0 + 2.0 * x1 / (x2 - x1);
        let beta_hi = 1.0 + 2.0 * (1.0 - x2) / (x2 - x1);
        let y1 = (0.5 * ((x1 + x2) - child(beta_lo) * (x2 - x1))).clamp(0.0, 1.0);
        let y2 = (0.5 * ((x1 + x2) + child(beta_hi) * (x2 - x1))).clamp(0.0, 1.0);
        let (y1, y2) = if rng.random_bool(0.5) { (y2, y1) } else { (y1, y2) };
        c1[k] = y1;
        c2[k] = y2;
    }
    (c1, c2)
}

/// Polynomial mutation applied to each gene with probability `prob`.
pub fn polynomial_mutation<R: Rng + ?Sized>(genes: &mut [f64], prob: f64, eta: f64, rng: &mut R) {
    for x in genes.iter_mut() {
        if !rng.random_bool(prob) {
            continue;
        }
        let y = *x;
        let (d1, d2) = (y, 1.0 - y);
        let u: f64 = rng.random();
        let pow = 1.0 / (eta + 1.0);
        let dq = if u < 0.5 {
            let v = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
            v.powf(pow) - 1.0
        } else {
            let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - v.powf(pow)
        };
        *x = (y + dq).clamp(0.0, 1.0);
    }
}

/// Das–Dennis lattice on the 3-simplex with `p` divisions, lexicographic.
pub fn das_dennis(p: usize) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity((p + 1) * (p + 2) / 2);
    for a in 0..=p {
        for b in 0..=p - a {
            let c = p - a - b;
            out.push([a as f64 / p as f64, b as f64 / p as f64, c as f64 / p as f64]);
        }
    }
    out
}

/// Largest `p` whose lattice size `C(p + 2, 2)` does not exceed `population`.
pub fn partitions_for(population: usize) -> usize {
    let mut p = 1;
    while (p + 2) * (p + 3) / 2 <= population {
        p += 1;
    }
    p
}
