use crate::hydro::{Decisions, SystemInstance};

/// Real-coded schedule genome layout.
///
/// Genes live in `[0, 1]` and are laid out as `I·T` turbine-flow genes,
/// then `I·J·T` supply-flag genes, then `I·J·T` supply-amount genes, each
/// block ordered by reservoir, then area, then period. Flags switch on at
/// `0.5`; an off flag forces the amount to zero when decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenomeLayout {
    pub reservoirs: usize,
    pub areas: usize,
    pub horizon: usize,
}

impl GenomeLayout {
    pub fn of(inst: &SystemInstance) -> Self {
        Self {
            reservoirs: inst.num_reservoirs(),
            areas: inst.num_areas(),
            horizon: inst.horizon,
        }
    }

    fn supply_block(&self) -> usize {
        self.reservoirs * self.areas * self.horizon
    }

    pub fn len(&self) -> usize {
        self.reservoirs * self.horizon + 2 * self.supply_block()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn qp_index(&self, i: usize, t: usize) -> usize {
        i * self.horizon + t
    }

    pub fn flag_index(&self, i: usize, j: usize, t: usize) -> usize {
        self.reservoirs * self.horizon + (i * self.areas + j) * self.horizon + t
    }

    pub fn amount_index(&self, i: usize, j: usize, t: usize) -> usize {
        self.flag_index(i, j, t) + self.supply_block()
    }

    pub fn decode(&self, inst: &SystemInstance, genes: &[f64]) -> Decisions {
        assert_eq!(genes.len(), self.len(), "genome length");
        let mut d = Decisions::zeros(self.reservoirs, self.areas, self.horizon);
        for (i, r) in inst.reservoirs.iter().enumerate() {
            let (lo, hi) = r.turbine_flow_range;
            for t in 0..self.horizon {
                d.qp[i][t] = lo + genes[self.qp_index(i, t)] * (hi - lo);
                for (j, a) in inst.areas.iter().enumerate() {
                    if genes[self.flag_index(i, j, t)] >= 0.5 {
                        d.x[i][j][t] = true;
                        d.qs[i][j][t] = genes[self.amount_index(i, j, t)] * a.supply_max[t] / inst.period_seconds;
                    }
                }
            }
        }
        d
    }

    /// Inverse of [`GenomeLayout::decode`] for in-range decisions; an on
    /// flag encodes as 1, an off flag as 0 with a zero amount gene.
    pub fn encode(&self, inst: &SystemInstance, d: &Decisions) -> Vec<f64> {
        let mut genes = vec![0.0; self.len()];
        for (i, r) in inst.reservoirs.iter().enumerate() {
            let (lo, hi) = r.turbine_flow_range;
            for t in 0..self.horizon {
                genes[self.qp_index(i, t)] = if hi > lo { (d.qp[i][t] - lo) / (hi - lo) } else { 0.0 };
                for (j, a) in inst.areas.iter().enumerate() {
                    if d.x[i][j][t] {
                        genes[self.flag_index(i, j, t)] = 1.0;
                        let cap = a.supply_max[t] / inst.period_seconds;
                        genes[self.amount_index(i, j, t)] = if cap > 0.0 { d.qs[i][j][t] / cap } else { 0.0 };
                    }
                }
            }
        }
        genes
    }
}
