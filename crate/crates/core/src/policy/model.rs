use rand::Rng;

use super::{EncoderConfig, EncoderVariant, PolicyError, StaticInputs};
use crate::env::{ActionSpace, DecisionStep, Observation, Policy, StepKind};
use crate::hydro::SystemInstance;
use crate::rng::rng_from_seed;
use crate::tensor::{Checkpoint, Graph, ParamId, ParamStore, Tensor, Var};

/// Version of the parameter layout recorded in checkpoints, per variant.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy)]
struct Linear {
    w: ParamId,
    b: ParamId,
}

#[derive(Debug, Clone, Copy)]
struct Block {
    wq: ParamId,
    wk: ParamId,
    wv: ParamId,
    wo: ParamId,
    ff1: Linear,
    ff2: Linear,
}

#[derive(Debug, Clone)]
struct Layout {
    res_embed: Linear,
    res_blocks: Vec<Block>,
    area_embed: Linear,
    area_blocks: Vec<Block>,
    /// Fusion layers of the two-stage variant (`None` for direct).
    power_fuse: Option<Linear>,
    supply_fuse: Option<Linear>,
    power_head: Linear,
    flag_head: Linear,
    amount_head: Linear,
}

struct Builder<'a, R> {
    store: &'a mut ParamStore,
    rng: &'a mut R,
}

impl<R: Rng> Builder<'_, R> {
    fn uniform(&mut self, name: String, rows: usize, cols: usize, fan_in: usize) -> ParamId {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let data = (0..rows * cols).map(|_| self.rng.random_range(-bound..bound)).collect();
        self.store.add(name, Tensor::matrix(rows, cols, data)).expect("unique parameter names")
    }

    fn linear(&mut self, name: &str, inputs: usize, outputs: usize) -> Linear {
        Linear {
            w: self.uniform(format!("{name}.w"), inputs, outputs, inputs),
            b: self.uniform(format!("{name}.b"), 1, outputs, inputs),
        }
    }

    fn block(&mut self, name: &str, d: usize) -> Block {
        Block {
            wq: self.uniform(format!("{name}.wq"), d, d, d),
            wk: self.uniform(format!("{name}.wk"), d, d, d),
            wv: self.uniform(format!("{name}.wv"), d, d, d),
            wo: self.uniform(format!("{name}.wo"), d, d, d),
            ff1: self.linear(&format!("{name}.ff1"), d, d),
            ff2: self.linear(&format!("{name}.ff2"), d, d),
        }
    }
}

/// Which output head a decision uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Head {
    Power,
    Flag,
    Amount,
}

impl Head {
    fn of(kind: &StepKind) -> Self {
        match kind {
            StepKind::Power { .. } => Self::Power,
            StepKind::SupplyFlag { .. } => Self::Flag,
            StepKind::SupplyAmount { .. } => Self::Amount,
        }
    }
}

/// Per-instance encoder outputs, `[I·T, d]` and `[J·T, d]`.
struct Encoded {
    reservoirs: Var,
    areas: Var,
}

/// The policy network and its parameters.
#[derive(Debug, Clone)]
pub struct PolicyModel {
    config: EncoderConfig,
    space: ActionSpace,
    store: ParamStore,
    layout: Layout,
}

impl PolicyModel {
    pub fn new(config: EncoderConfig, space: ActionSpace, seed: u64) -> Result<Self, PolicyError> {
        config.validate()?;
        let d = config.embedding_size;
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(seed);
        let mut b = Builder {
            store: &mut store,
            rng: &mut rng,
        };
        let two_stage = config.variant == EncoderVariant::TwoStage;
        let (res_in, area_in) = if two_stage { (3, 2) } else { (4, 5) };
        let res_embed = b.linear("res.embed", res_in, d);
        let res_blocks = (0..config.layers).map(|l| b.block(&format!("res.enc{l}"), d)).collect();
        let area_embed = b.linear("area.embed", area_in, d);
        let area_blocks = (0..config.layers).map(|l| b.block(&format!("area.enc{l}"), d)).collect();
        let power_fuse = two_stage.then(|| b.linear("power.fuse", d + 1, d));
        let supply_fuse = two_stage.then(|| b.linear("supply.fuse", d + 3, d));
        let layout = Layout {
            res_embed,
            res_blocks,
            area_embed,
            area_blocks,
            power_fuse,
            supply_fuse,
            power_head: b.linear("power.head", d, space.qp_bins),
            flag_head: b.linear("flag.head", d, 2),
            amount_head: b.linear("amount.head", d, space.qs_bins),
        };
        Ok(Self {
            config,
            space,
            store,
            layout,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn action_space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn params(&self) -> &ParamStore {
        &self.store
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn linear(&self, g: &mut Graph, l: Linear, x: Var) -> Result<Var, PolicyError> {
        let w = g.param(l.w);
        let b = g.param(l.b);
        let y = g.matmul(x, w)?;
        Ok(g.add_bias(y, b)?)
    }

    /// Attention across each group of `group` rows, residual, then a
    /// two-layer feed-forward with residual.
    fn block(&self, g: &mut Graph, b: &Block, x: Var, group: usize) -> Result<Var, PolicyError> {
        let (wq, wk, wv, wo) = (g.param(b.wq), g.param(b.wk), g.param(b.wv), g.param(b.wo));
        let q = g.matmul(x, wq)?;
        let k = g.matmul(x, wk)?;
        let v = g.matmul(x, wv)?;
        let a = g.attention(q, k, v, group, self.config.num_heads)?;
        let a = g.matmul(a, wo)?;
        let h = g.add(x, a)?;
        let f = self.linear(g, b.ff1, h)?;
        let f = g.relu(f);
        let f = self.linear(g, b.ff2, f)?;
        Ok(g.add(h, f)?)
    }

    fn encode(&self, g: &mut Graph, reservoir: bool, tokens: Tensor, group: usize) -> Result<Var, PolicyError> {
        let l = &self.layout;
        let (embed, blocks) = if reservoir {
            (l.res_embed, &l.res_blocks)
        } else {
            (l.area_embed, &l.area_blocks)
        };
        let x = g.constant(tokens);
        let mut h = self.linear(g, embed, x)?;
        if !reservoir {
            h = g.relu(h);
        }
        for b in blocks {
            h = self.block(g, b, h, group)?;
        }
        Ok(h)
    }

    fn encode_static(&self, g: &mut Graph, inputs: &StaticInputs) -> Result<Encoded, PolicyError> {
        let t = inputs.horizon.max(1);
        match self.config.variant {
            EncoderVariant::TwoStage => Ok(Encoded {
                reservoirs: self.encode(g, true, inputs.reservoirs.clone(), t)?,
                areas: self.encode(g, false, inputs.areas.clone(), t)?,
            }),
            EncoderVariant::Direct => {
                Ok(Encoded {
                    reservoirs: self.encode(g, true, zero_pad(&inputs.reservoirs, 1), t)?,
                    areas: self.encode(g, false, zero_pad(&inputs.areas, 3), t)?,
                })
            }
        }
    }

    fn encoded_tensor(&self, inst: &SystemInstance, reservoirs: bool) -> Result<Tensor, PolicyError> {
        let inputs = StaticInputs::new(inst);
        let mut g = Graph::inference(&self.store);
        let enc = self.encode_static(&mut g, &inputs)?;
        let (v, n) = if reservoirs {
            (enc.reservoirs, inst.num_reservoirs())
        } else {
            (enc.areas, inst.num_areas())
        };
        let d = self.config.embedding_size;
        Ok(g.value(v).clone().reshape(&[n, inst.horizon, d])?)
    }

    /// Reservoir embeddings, shape `[I, T, d]`. For the direct variant the
    /// dynamic inputs are set to zero.
    pub fn encode_reservoirs(&self, inst: &SystemInstance) -> Result<Tensor, PolicyError> {
        self.encoded_tensor(inst, true)
    }

    /// Area embeddings, shape `[J, T, d]`.
    pub fn encode_areas(&self, inst: &SystemInstance) -> Result<Tensor, PolicyError> {
        self.encoded_tensor(inst, false)
    }

    /// Log-probabilities `[n, arity]` for `n` decisions of the same head.
    fn head_log_probs(
        &self,
        g: &mut Graph,
        head: Head,
        inputs: &StaticInputs,
        encoded: Option<&Encoded>,
        rows: &[(StepKind, [f64; 3])],
    ) -> Result<Var, PolicyError> {
        let l = &self.layout;
        let t_len = inputs.horizon;
        let hidden = match self.config.variant {
            EncoderVariant::TwoStage => {
                let enc = encoded.expect("two-stage decisions need static encodings");
                let (src, fuse, width) = match head {
                    Head::Power => (enc.reservoirs, l.power_fuse, 1),
                    _ => (enc.areas, l.supply_fuse, 3),
                };
                let idx: Vec<usize> = rows.iter().map(|(k, _)| token_row(k, t_len)).collect();
                let x = g.gather_rows(src, &idx)?;
                let f: Vec<f64> = rows.iter().flat_map(|(_, f)| f[..width].iter().copied()).collect();
                let f = g.constant(Tensor::matrix(rows.len(), width, f));
                let z = g.concat(&[x, f])?;
                let z = self.linear(g, fuse.expect("two-stage layout"), z)?;
                g.relu(z)
            }
            EncoderVariant::Direct => {
                let power = head == Head::Power;
                let mut tokens = Vec::new();
                let width = if power { 4 } else { 5 };
                for (k, f) in rows {
                    let (src, entity, extra) = if power {
                        (&inputs.reservoirs, k.reservoir(), &f[..1])
                    } else {
                        (&inputs.areas, k.area().expect("supply step"), &f[..])
                    };
                    for u in 0..t_len {
                        tokens.extend_from_slice(src.row(entity * t_len + u));
                        tokens.extend_from_slice(extra);
                    }
                }
                let tokens = Tensor::matrix(rows.len() * t_len, width, tokens);
                let h = self.encode(g, power, tokens, t_len)?;
                let idx: Vec<usize> = rows
                    .iter()
                    .enumerate()
                    .map(|(s, (k, _))| s * t_len + k.period())
                    .collect();
                g.gather_rows(h, &idx)?
            }
        };
        let head = match head {
            Head::Power => l.power_head,
            Head::Flag => l.flag_head,
            Head::Amount => l.amount_head,
        };
        let logits = self.linear(g, head, hidden)?;
        Ok(g.log_softmax(logits)?)
    }

    /// Builds `Σ_e coef_e · Σ_{steps of e} log p(choice)` on `g`, which must
    /// be a graph over [`PolicyModel::params`].
    pub fn weighted_log_prob(
        &self,
        g: &mut Graph,
        inst: &SystemInstance,
        episodes: &[(&[DecisionStep], f64)],
    ) -> Result<Var, PolicyError> {
        let inputs = StaticInputs::new(inst);
        let encoded = match self.config.variant {
            EncoderVariant::TwoStage => Some(self.encode_static(g, &inputs)?),
            EncoderVariant::Direct => None,
        };
        let mut total: Option<Var> = None;
        for head in [Head::Power, Head::Flag, Head::Amount] {
            let mut rows = Vec::new();
            let mut choices = Vec::new();
            let mut coefs = Vec::new();
            for (steps, coef) in episodes {
                for s in steps.iter().filter(|s| Head::of(&s.kind) == head) {
                    rows.push((s.kind, s.observation.features));
                    choices.push(s.choice);
                    coefs.push(*coef);
                }
            }
            if rows.is_empty() {
                continue;
            }
            let lp = self.head_log_probs(g, head, &inputs, encoded.as_ref(), &rows)?;
            let picked = g.pick(lp, &choices)?;
            let n = coefs.len();
            let weighted = g.mul_const(picked, &Tensor::matrix(n, 1, coefs))?;
            let s = g.sum(weighted);
            total = Some(match total {
                Some(t) => g.add(t, s)?,
                None => s,
            });
        }
        Ok(total.unwrap_or_else(|| g.constant(Tensor::scalar(0.0))))
    }

    /// A [`Policy`] bound to one instance.
    pub fn runner<'a>(&'a self, inst: &SystemInstance) -> Result<PolicyRunner<'a>, PolicyError> {
        let inputs = StaticInputs::new(inst);
        let encoded = match self.config.variant {
            EncoderVariant::TwoStage => {
                let mut g = Graph::inference(&self.store);
                let e = self.encode_static(&mut g, &inputs)?;
                Some((g.value(e.reservoirs).clone(), g.value(e.areas).clone()))
            }
            EncoderVariant::Direct => None,
        };
        Ok(PolicyRunner {
            model: self,
            inputs,
            encoded,
        })
    }

    /// Probabilities for one decision; see [`PolicyRunner`].
    fn distribution_with(
        &self,
        inputs: &StaticInputs,
        encoded: Option<&(Tensor, Tensor)>,
        kind: &StepKind,
        features: [f64; 3],
    ) -> Result<Vec<f64>, PolicyError> {
        let mut g = Graph::inference(&self.store);
        let head = Head::of(kind);
        let enc = match encoded {
            Some((res, area)) => {
                // Only the deciding token is needed: it becomes a one-row
                // source addressed as entity 0, period 0.
                let row = token_row(kind, inputs.horizon);
                let src = if head == Head::Power { res } else { area };
                let single = g.constant(Tensor::matrix(1, src.cols(), src.row(row).to_vec()));
                Some(Encoded {
                    reservoirs: single,
                    areas: single,
                })
            }
            None => None,
        };
        let placeholder;
        let (local, kind) = if enc.is_some() {
            placeholder = StaticInputs {
                horizon: 1,
                reservoirs: Tensor::zeros(&[0, 3]),
                areas: Tensor::zeros(&[0, 2]),
            };
            (&placeholder, zero_entity(*kind))
        } else {
            (inputs, *kind)
        };
        let lp = self.head_log_probs(&mut g, head, local, enc.as_ref(), &[(kind, features)])?;
        Ok(g.value(lp).data().iter().map(|x| x.exp()).collect())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ckpt = Checkpoint {
            params: self.store.clone(),
            ..Default::default()
        };
        let c = &self.config;
        let meta = [
            ("model.variant", c.variant.as_str().to_string()),
            ("model.format", format!("{}/{}", c.variant.as_str(), MODEL_FORMAT_VERSION)),
            ("model.embedding_size", c.embedding_size.to_string()),
            ("model.num_heads", c.num_heads.to_string()),
            ("model.layers", c.layers.to_string()),
            ("model.qp_bins", self.space.qp_bins.to_string()),
            ("model.qs_bins", self.space.qs_bins.to_string()),
        ];
        for (k, v) in meta {
            ckpt.meta.insert(k.to_string(), v);
        }
        ckpt
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, PolicyError> {
        let get = |k: &str| {
            ckpt.meta
                .get(k)
                .ok_or_else(|| PolicyError::Checkpoint(format!("missing metadata {k}")))
        };
        let num = |k: &str| -> Result<usize, PolicyError> {
            get(k)?
                .parse()
                .map_err(|_| PolicyError::Checkpoint(format!("metadata {k} is not an integer")))
        };
        let variant = EncoderVariant::parse(get("model.variant")?)
            .ok_or_else(|| PolicyError::Checkpoint("unknown encoder variant".into()))?;
        let expected_format = format!("{}/{}", variant.as_str(), MODEL_FORMAT_VERSION);
        let format = get("model.format")?;
        if *format != expected_format {
            return Err(PolicyError::Checkpoint(format!(
                "layout {format} is not supported (expected {expected_format})"
            )));
        }
        let config = EncoderConfig {
            embedding_size: num("model.embedding_size")?,
            num_heads: num("model.num_heads")?,
            variant,
            layers: num("model.layers")?,
        };
        let (qp, qs) = (num("model.qp_bins")?, num("model.qs_bins")?);
        if qp < 2 || qs < 2 {
            return Err(PolicyError::Checkpoint("action grids need at least two bins".into()));
        }
        let mut model = Self::new(config, ActionSpace::new(qp, qs), 0)?;
        let fresh: Vec<(&str, &[usize])> = model.store.iter().map(|(_, n, t)| (n, t.shape())).collect();
        let loaded: Vec<(&str, &[usize])> = ckpt.params.iter().map(|(_, n, t)| (n, t.shape())).collect();
        if fresh != loaded {
            return Err(PolicyError::Checkpoint(
                "parameter names or shapes do not match the recorded configuration".into(),
            ));
        }
        model.store.copy_values_from(&ckpt.params);
        Ok(model)
    }
}

fn zero_entity(kind: StepKind) -> StepKind {
    match kind {
        StepKind::Power { .. } => StepKind::Power { reservoir: 0, period: 0 },
        StepKind::SupplyFlag { .. } => StepKind::SupplyFlag {
            reservoir: 0,
            area: 0,
            period: 0,
        },
        StepKind::SupplyAmount { .. } => StepKind::SupplyAmount {
            reservoir: 0,
            area: 0,
            period: 0,
        },
    }
}

/// Row of the deciding token in the stacked `[entity·T, d]` encodings.
fn token_row(kind: &StepKind, horizon: usize) -> usize {
    let entity = match kind {
        StepKind::Power { reservoir, .. } => *reservoir,
        _ => kind.area().expect("supply step"),
    };
    entity * horizon + kind.period()
}

/// Appends `extra` zero columns.
fn zero_pad(src: &Tensor, extra: usize) -> Tensor {
    let (n, w) = (src.rows(), src.cols());
    let mut data = Vec::with_capacity(n * (w + extra));
    for r in 0..n {
        data.extend_from_slice(src.row(r));
        data.extend(std::iter::repeat_n(0.0, extra));
    }
    Tensor::matrix(n, w + extra, data)
}

/// A [`PolicyModel`] bound to one instance, usable as an
/// [`env::Policy`](crate::env::Policy).
pub struct PolicyRunner<'a> {
    model: &'a PolicyModel,
    inputs: StaticInputs,
    encoded: Option<(Tensor, Tensor)>,
}

impl PolicyRunner<'_> {
    pub fn try_distribution(&self, kind: &StepKind, obs: &Observation) -> Result<Vec<f64>, PolicyError> {
        self.model
            .distribution_with(&self.inputs, self.encoded.as_ref(), kind, obs.features)
    }
}

impl Policy for PolicyRunner<'_> {
    fn distribution(&self, kind: &StepKind, obs: &Observation) -> Vec<f64> {
        self.try_distribution(kind, obs)
            .expect("model layout was validated at construction")
    }
}
