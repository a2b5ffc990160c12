use super::{Gradients, ParamId, ParamStore, Tensor, TensorError};

static EMPTY_STORE: ParamStore = ParamStore::new();

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Constant,
    Param(ParamId),
    MatMul(usize, usize),
    Add(usize, usize),
    AddBias(usize, usize),
    Concat(Vec<usize>),
    Relu(usize),
    Tanh(usize),
    Softmax(usize),
    LogSoftmax(usize),
    Log(usize),
    Sum(usize),
    Mean(usize),
    Scale(usize, f64),
    MulConst(usize, Vec<f64>),
    GatherRows(usize, Vec<usize>),
    Pick(usize, Vec<usize>),
    Attention {
        q: usize,
        k: usize,
        v: usize,
        group: usize,
        heads: usize,
        weights: Vec<f64>,
    },
}

#[derive(Debug)]
struct Node {
    /// `None` for parameter nodes, whose value lives in the store.
    value: Option<Tensor>,
    op: Op,
    tracked: bool,
}

/// Operation tape over a borrowed [`ParamStore`].
pub struct Graph<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_nodes: Vec<Option<usize>>,
    grad_enabled: bool,
}

fn shape_err(op: &'static str, detail: String) -> TensorError {
    TensorError::Shape { op, detail }
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Self {
            params,
            nodes: Vec::new(),
            param_nodes: vec![None; params.len()],
            grad_enabled: true,
        }
    }

    /// A graph without gradient tracking; ops record values only.
    pub fn inference(params: &'p ParamStore) -> Self {
        Self {
            grad_enabled: false,
            ..Self::new(params)
        }
    }

    /// A graph with no parameters, for constant-only computations.
    pub fn detached() -> Graph<'static> {
        Graph::new(&EMPTY_STORE)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drops every node recorded after the first `len`.
    pub fn truncate(&mut self, len: usize) {
        self.nodes.truncate(len);
        for slot in &mut self.param_nodes {
            if matches!(slot, Some(i) if *i >= len) {
                *slot = None;
            }
        }
    }

    pub fn value(&self, v: Var) -> &Tensor {
        let node = &self.nodes[v.0];
        match (&node.value, &node.op) {
            (Some(t), _) => t,
            (None, Op::Param(id)) => self.params.get(*id),
            _ => unreachable!("node without value"),
        }
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.value(v).shape()
    }

    fn push(&mut self, value: Tensor, op: Op, parents: &[usize]) -> Var {
        let tracked = self.grad_enabled && parents.iter().any(|&p| self.nodes[p].tracked);
        let op = if tracked { op } else { Op::Constant };
        self.nodes.push(Node {
            value: Some(value),
            op,
            tracked,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Constant, &[])
    }

    /// The node for parameter `id`; repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(i) = self.param_nodes[id.0] {
            return Var(i);
        }
        self.nodes.push(Node {
            value: None,
            op: Op::Param(id),
            tracked: self.grad_enabled,
        });
        let i = self.nodes.len() - 1;
        self.param_nodes[id.0] = Some(i);
        Var(i)
    }

    fn matrix_dims(&self, v: Var, op: &'static str) -> Result<(usize, usize), TensorError> {
        let s = self.shape(v);
        if s.len() != 2 {
            return Err(shape_err(op, format!("expected a matrix, got shape {s:?}")));
        }
        Ok((s[0], s[1]))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (n, k) = self.matrix_dims(a, "matmul")?;
        let (k2, m) = self.matrix_dims(b, "matmul")?;
        if k != k2 {
            return Err(shape_err("matmul", format!("[{n}, {k}] x [{k2}, {m}]")));
        }
        let out = matmul_raw(self.value(a).data(), self.value(b).data(), n, k, m);
        Ok(self.push(Tensor::matrix(n, m, out), Op::MatMul(a.0, b.0), &[a.0, b.0]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err("add", format!("{:?} + {:?}", self.shape(a), self.shape(b))));
        }
        let out: Vec<f64> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.shape(a).to_vec();
        Ok(self.push(Tensor::new(shape, out)?, Op::Add(a.0, b.0), &[a.0, b.0]))
    }

    /// Adds a `[1, m]` row to every row of an `[n, m]` matrix.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var, TensorError> {
        let (n, m) = self.matrix_dims(a, "add_bias")?;
        let (br, bc) = self.matrix_dims(bias, "add_bias")?;
        if br != 1 || bc != m {
            return Err(shape_err("add_bias", format!("[{n}, {m}] + [{br}, {bc}]")));
        }
        let b = self.value(bias).data();
        let mut out = self.value(a).data().to_vec();
        for row in out.chunks_mut(m.max(1)) {
            for (x, y) in row.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(self.push(Tensor::matrix(n, m, out), Op::AddBias(a.0, bias.0), &[a.0, bias.0]))
    }

    /// Concatenates matrices with equal row counts along the last axis.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        if parts.is_empty() {
            return Err(shape_err("concat", "no inputs".into()));
        }
        let n = self.matrix_dims(parts[0], "concat")?.0;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = self.matrix_dims(p, "concat")?;
            if r != n {
                let shapes: Vec<_> = parts.iter().map(|&p| self.shape(p).to_vec()).collect();
                return Err(shape_err("concat", format!("row counts differ: {shapes:?}")));
            }
            widths.push(c);
        }
        let m: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(n * m);
        for r in 0..n {
            for (&p, &w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&self.value(p).data()[r * w..(r + 1) * w]);
            }
        }
        let ids: Vec<usize> = parts.iter().map(|v| v.0).collect();
        Ok(self.push(Tensor::matrix(n, m, out), Op::Concat(ids.clone()), &ids))
    }

    fn map(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let t = self.value(a);
        let out = Tensor::new(t.shape().to_vec(), t.data().iter().map(|&x| f(x)).collect()).unwrap();
        self.push(out, op, &[a.0])
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map(a, |x| x.max(0.0), Op::Relu(a.0))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, f64::tanh, Op::Tanh(a.0))
    }

    /// Elementwise natural logarithm.
    pub fn log(&mut self, a: Var) -> Var {
        self.map(a, f64::ln, Op::Log(a.0))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        self.map(a, |x| k * x, Op::Scale(a.0, k))
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax(&mut self, a: Var) -> Result<Var, TensorError> {
        let (n, m) = self.matrix_dims(a, "softmax")?;
        let mut out = self.value(a).data().to_vec();
        for row in out.chunks_mut(m.max(1)) {
            softmax_in_place(row);
        }
        Ok(self.push(Tensor::matrix(n, m, out), Op::Softmax(a.0), &[a.0]))
    }

    /// Row-wise `log(softmax(x))`, computed without forming the softmax.
    pub fn log_softmax(&mut self, a: Var) -> Result<Var, TensorError> {
        let (n, m) = self.matrix_dims(a, "log_softmax")?;
        let mut out = self.value(a).data().to_vec();
        for row in out.chunks_mut(m.max(1)) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
            row.iter_mut().for_each(|x| *x -= lse);
        }
        Ok(self.push(Tensor::matrix(n, m, out), Op::LogSoftmax(a.0), &[a.0]))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a.0), &[a.0])
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let s = t.data().iter().sum::<f64>() / t.len().max(1) as f64;
        self.push(Tensor::scalar(s), Op::Mean(a.0), &[a.0])
    }

    /// Elementwise product with a constant tensor of the same shape.
    pub fn mul_const(&mut self, a: Var, c: &Tensor) -> Result<Var, TensorError> {
        if self.shape(a) != c.shape() {
            return Err(shape_err("mul_const", format!("{:?} * {:?}", self.shape(a), c.shape())));
        }
        let out: Vec<f64> = self.value(a).data().iter().zip(c.data()).map(|(x, y)| x * y).collect();
        let shape = self.shape(a).to_vec();
        Ok(self.push(Tensor::new(shape, out)?, Op::MulConst(a.0, c.data().to_vec()), &[a.0]))
    }

    /// Rows `a[idx[0]], a[idx[1]], …`.
    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var, TensorError> {
        let (n, m) = self.matrix_dims(a, "gather_rows")?;
        if let Some(&bad) = idx.iter().find(|&&r| r >= n) {
            return Err(shape_err("gather_rows", format!("row {bad} out of range for [{n}, {m}]")));
        }
        let src = self.value(a).data();
        let mut out = Vec::with_capacity(idx.len() * m);
        for &r in idx {
            out.extend_from_slice(&src[r * m..(r + 1) * m]);
        }
        Ok(self.push(Tensor::matrix(idx.len(), m, out), Op::GatherRows(a.0, idx.to_vec()), &[a.0]))
    }

    /// Column `idx[r]` of each row `r`, as an `[n, 1]` matrix.
    pub fn pick(&mut self, a: Var, idx: &[usize]) -> Result<Var, TensorError> {
        let (n, m) = self.matrix_dims(a, "pick")?;
        if idx.len() != n || idx.iter().any(|&c| c >= m) {
            return Err(shape_err("pick", format!("{} indices for [{n}, {m}]", idx.len())));
        }
        let src = self.value(a).data();
        let out: Vec<f64> = idx.iter().enumerate().map(|(r, &c)| src[r * m + c]).collect();
        Ok(self.push(Tensor::matrix(n, 1, out), Op::Pick(a.0, idx.to_vec()), &[a.0]))
    }

    /// Multi-head scaled dot-product attention within consecutive groups
    /// of `group` rows.
    ///
    /// `q`, `k`, `v` are `[G·group, d]`; columns are split into `heads`
    /// slices of width `d / heads`. Row `t` of a group attends to every row
    /// of the same group, with logits scaled by `1/√(d / heads)`.
    pub fn attention(&mut self, q: Var, k: Var, v: Var, group: usize, heads: usize) -> Result<Var, TensorError> {
        let (n, d) = self.matrix_dims(q, "attention")?;
        if self.shape(k) != [n, d] || self.shape(v) != [n, d] {
            return Err(shape_err(
                "attention",
                format!("q {:?}, k {:?}, v {:?}", self.shape(q), self.shape(k), self.shape(v)),
            ));
        }
        if group == 0 || n % group != 0 || heads == 0 || d % heads != 0 {
            return Err(shape_err("attention", format!("[{n}, {d}] with group {group}, heads {heads}")));
        }
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let (qd, kd, vd) = (self.value(q).data(), self.value(k).data(), self.value(v).data());
        let groups = n / group;
        let mut weights = vec![0.0; groups * heads * group * group];
        let mut out = vec![0.0; n * d];
        for g in 0..groups {
            let base = g * group;
            for h in 0..heads {
                let col = h * dh;
                for t in 0..group {
                    let w = &mut weights[((g * heads + h) * group + t) * group..][..group];
                    let qr = &qd[(base + t) * d + col..][..dh];
                    for (u, wu) in w.iter_mut().enumerate() {
                        let kr = &kd[(base + u) * d + col..][..dh];
                        *wu = scale * dot(qr, kr);
                    }
                    softmax_in_place(w);
                    let o = &mut out[(base + t) * d + col..][..dh];
                    for (u, &wu) in w.iter().enumerate() {
                        let vr = &vd[(base + u) * d + col..][..dh];
                        for (x, y) in o.iter_mut().zip(vr) {
                            *x += wu * y;
                        }
                    }
                }
            }
        }
        let op = Op::Attention {
            q: q.0,
            k: k.0,
            v: v.0,
            group,
            heads,
            weights,
        };
        Ok(self.push(Tensor::matrix(n, d, out), op, &[q.0, k.0, v.0]))
    }

    /// Reverse pass from a scalar `loss`, adding parameter gradients into
    /// `grads`. Repeated calls accumulate.
    pub fn backward(&self, loss: Var, grads: &mut Gradients) -> Result<(), TensorError> {
        if self.value(loss).len() != 1 {
            return Err(TensorError::NonScalarLoss(self.shape(loss).to_vec()));
        }
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        adj[loss.0] = Some(vec![1.0]);
        for idx in (0..=loss.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.tracked {
                continue;
            }
            self.propagate(idx, &node.op, &g, &mut adj, grads);
        }
        Ok(())
    }

    fn val(&self, i: usize) -> &Tensor {
        self.value(Var(i))
    }

    fn propagate(&self, idx: usize, op: &Op, g: &[f64], adj: &mut [Option<Vec<f64>>], grads: &mut Gradients) {
        let mut acc = |p: usize, f: &mut dyn FnMut(&mut [f64])| {
            if !self.nodes[p].tracked {
                return;
            }
            let slot = adj[p].get_or_insert_with(|| vec![0.0; self.val(p).len()]);
            f(slot);
        };
        match op {
            Op::Constant => {}
            Op::Param(id) => grads.add_slice(*id, g),
            Op::MatMul(a, b) => {
                let (n, k) = (self.val(*a).rows(), self.val(*a).cols());
                let m = self.val(*b).cols();
                let (ad, bd) = (self.val(*a).data(), self.val(*b).data());
                acc(*a, &mut |da| {
                    for i in 0..n {
                        let gr = &g[i * m..(i + 1) * m];
                        for p in 0..k {
                            da[i * k + p] += dot(gr, &bd[p * m..(p + 1) * m]);
                        }
                    }
                });
                acc(*b, &mut |db| {
                    for i in 0..n {
                        let gr = &g[i * m..(i + 1) * m];
                        for p in 0..k {
                            let aip = ad[i * k + p];
                            if aip != 0.0 {
                                for (x, y) in db[p * m..(p + 1) * m].iter_mut().zip(gr) {
                                    *x += aip * y;
                                }
                            }
                        }
                    }
                });
            }
            Op::Add(a, b) => {
                acc(*a, &mut |da| add_into(da, g));
                acc(*b, &mut |db| add_into(db, g));
            }
            Op::AddBias(a, b) => {
                let m = self.val(*b).cols();
                acc(*a, &mut |da| add_into(da, g));
                acc(*b, &mut |db| {
                    for row in g.chunks(m.max(1)) {
                        add_into(db, row);
                    }
                });
            }
            Op::Concat(parts) => {
                let n = self.val(idx).rows();
                let m = self.val(idx).cols();
                let mut offset = 0;
                for &p in parts {
                    let w = self.val(p).cols();
                    acc(p, &mut |dp| {
                        for r in 0..n {
                            add_into(&mut dp[r * w..(r + 1) * w], &g[r * m + offset..r * m + offset + w]);
                        }
                    });
                    offset += w;
                }
            }
            Op::Relu(a) => {
                let x = self.val(*a).data();
                acc(*a, &mut |da| {
                    for ((d, &xi), &gi) in da.iter_mut().zip(x).zip(g) {
                        if xi > 0.0 {
                            *d += gi;
                        }
                    }
                });
            }
            Op::Tanh(a) => {
                let y = self.val(idx).data();
                acc(*a, &mut |da| {
                    for ((d, &yi), &gi) in da.iter_mut().zip(y).zip(g) {
                        *d += gi * (1.0 - yi * yi);
                    }
                });
            }
            Op::Softmax(a) => {
                let y = self.val(idx);
                let m = y.cols().max(1);
                acc(*a, &mut |da| {
                    for ((dr, yr), gr) in da.chunks_mut(m).zip(y.data().chunks(m)).zip(g.chunks(m)) {
                        let s = dot(yr, gr);
                        for ((d, &yi), &gi) in dr.iter_mut().zip(yr).zip(gr) {
                            *d += yi * (gi - s);
                        }
                    }
                });
            }
            Op::LogSoftmax(a) => {
                let y = self.val(idx);
                let m = y.cols().max(1);
                acc(*a, &mut |da| {
                    for ((dr, yr), gr) in da.chunks_mut(m).zip(y.data().chunks(m)).zip(g.chunks(m)) {
                        let s: f64 = gr.iter().sum();
                        for ((d, &yi), &gi) in dr.iter_mut().zip(yr).zip(gr) {
                            *d += gi - yi.exp() * s;
                        }
                    }
                });
            }
            Op::Log(a) => {
                let x = self.val(*a).data();
                acc(*a, &mut |da| {
                    for ((d, &xi), &gi) in da.iter_mut().zip(x).zip(g) {
                        *d += gi / xi;
                    }
                });
            }
            Op::Sum(a) => acc(*a, &mut |da| da.iter_mut().for_each(|d| *d += g[0])),
            Op::Mean(a) => {
                let n = self.val(*a).len().max(1) as f64;
                acc(*a, &mut |da| da.iter_mut().for_each(|d| *d += g[0] / n));
            }
            Op::Scale(a, k) => acc(*a, &mut |da| {
                for (d, gi) in da.iter_mut().zip(g) {
                    *d += k * gi;
                }
            }),
            Op::MulConst(a, c) => acc(*a, &mut |da| {
                for ((d, gi), ci) in da.iter_mut().zip(g).zip(c) {
                    *d += gi * ci;
                }
            }),
            Op::GatherRows(a, rows) => {
                let m = self.val(*a).cols();
                acc(*a, &mut |da| {
                    for (k, &r) in rows.iter().enumerate() {
                        add_into(&mut da[r * m..(r + 1) * m], &g[k * m..(k + 1) * m]);
                    }
                });
            }
            Op::Pick(a, cols) => {
                let m = self.val(*a).cols();
                acc(*a, &mut |da| {
                    for (r, &c) in cols.iter().enumerate() {
                        da[r * m + c] += g[r];
                    }
                });
            }
            Op::Attention {
                q,
                k,
                v,
                group,
                heads,
                weights,
            } => {
                let (q, k, v, group, heads) = (*q, *k, *v, *group, *heads);
                let (n, d) = (self.val(q).rows(), self.val(q).cols());
                let dh = d / heads;
                let scale = 1.0 / (dh as f64).sqrt();
                let (qd, kd, vd) = (self.val(q).data(), self.val(k).data(), self.val(v).data());
                let mut dq = vec![0.0; n * d];
                let mut dk = vec![0.0; n * d];
                let mut dv = vec![0.0; n * d];
                let mut ds = vec![0.0; group];
                for gi in 0..n / group {
                    let base = gi * group;
                    for h in 0..heads {
                        let col = h * dh;
                        for t in 0..group {
                            let w = &weights[((gi * heads + h) * group + t) * group..][..group];
                            let go = &g[(base + t) * d + col..][..dh];
                            for u in 0..group {
                                ds[u] = dot(go, &vd[(base + u) * d + col..][..dh]);
                                let dvr = &mut dv[(base + u) * d + col..][..dh];
                                for (x, y) in dvr.iter_mut().zip(go) {
                                    *x += w[u] * y;
                                }
                            }
                            let s = dot(w, &ds);
                            for u in 0..group {
                                ds[u] = w[u] * (ds[u] - s) * scale;
                            }
                            let qr = &qd[(base + t) * d + col..][..dh];
                            for u in 0..group {
                                let su = ds[u];
                                if su == 0.0 {
                                    continue;
                                }
                                let kr = &kd[(base + u) * d + col..][..dh];
                                let dqr = &mut dq[(base + t) * d + col..][..dh];
                                for (x, y) in dqr.iter_mut().zip(kr) {
                                    *x += su * y;
                                }
                                let dkr = &mut dk[(base + u) * d + col..][..dh];
                                for (x, y) in dkr.iter_mut().zip(qr) {
                                    *x += su * y;
                                }
                            }
                        }
                    }
                }
                acc(q, &mut |a| add_into(a, &dq));
                acc(k, &mut |a| add_into(a, &dk));
                acc(v, &mut |a| add_into(a, &dv));
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in row.iter_mut() {
        *x /= sum;
    }
}

fn matmul_raw(a: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * m];
    for i in 0..n {
        let crow = &mut c[i * m..(i + 1) * m];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            for (x, y) in crow.iter_mut().zip(&b[p * m..(p + 1) * m]) {
                *x += aip * y;
            }
        }
    }
    c
}
