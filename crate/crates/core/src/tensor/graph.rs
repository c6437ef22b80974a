//! Tape-based reverse-mode automatic differentiation.
//!
//! A [`Graph`] records every operation as a node in creation order, which is
//! also a topological order, so [`Graph::backward`] is a single reverse sweep.
//! Parameters enter the graph through [`Graph::param`], which shares the
//! stored value instead of copying it.

use std::sync::Arc;

use super::dense::{gemm_nt, gemm_tn, Tensor};
use super::params::{ParamId, ParamStore};
use super::TensorError;

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Boolean mask with the same shape as the scores it filters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseMask {
    rows: usize,
    cols: usize,
    allowed: Vec<bool>,
}

impl DenseMask {
    pub fn new(rows: usize, cols: usize, allowed: Vec<bool>) -> Self {
        assert_eq!(allowed.len(), rows * cols);
        Self { rows, cols, allowed }
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![true; rows * cols])
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.rows, self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.allowed[r * self.cols + c]
    }
}

/// Compressed-row list of allowed `(row, col)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsePattern {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    n_cols: usize,
}

impl SparsePattern {
    /// Build from per-row column lists; `n_cols` bounds every entry.
    pub fn from_rows(rows: &[Vec<usize>], n_cols: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for r in rows {
            debug_assert!(r.iter().all(|&c| c < n_cols));
            cols.extend_from_slice(r);
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols, n_cols }
    }

    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    fn range(&self, r: usize) -> std::ops::Range<usize> {
        self.row_ptr[r]..self.row_ptr[r + 1]
    }
}

enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    Relu(Var),
    Transpose(Var),
    ConcatCols(Vec<Var>),
    GatherRows(Var, Arc<[usize]>),
    SliceRows(Var, usize),
    SegmentMax { input: Var, argmax: Vec<usize> },
    LayerNorm { input: Var, gain: Var, bias: Var, xhat: Tensor, inv_std: Vec<f64> },
    SoftmaxMasked { input: Var, mask: Arc<DenseMask> },
    SparseAttention { q: Var, k: Var, v: Var, pattern: Arc<SparsePattern>, scale: f64, weights: Vec<f64> },
    TreeRecurrence { input: Var, parent: Arc<[Option<usize>]> },
    CrossEntropy { logits: Var, labels: Vec<usize>, probs: Tensor },
    Sum(Var),
}

struct Node {
    value: Arc<Tensor>,
    op: Op,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    param_vars: Vec<Option<Var>>,
}

fn mismatch(op: &'static str, expected: [usize; 2], got: [usize; 2]) -> TensorError {
    TensorError::ShapeMismatch { op, expected: expected.to_vec(), got: got.to_vec() }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value: Arc::new(value), op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> [usize; 2] {
        self.value(v).shape()
    }

    /// Constant input.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Parameter input; repeated calls for the same id return the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        let slot = id.index();
        if self.param_vars.len() <= slot {
            self.param_vars.resize(slot + 1, None);
        }
        if let Some(v) = self.param_vars[slot] {
            return v;
        }
        self.nodes.push(Node { value: Arc::clone(store.value_arc(id)), op: Op::Param(id) });
        let v = Var(self.nodes.len() - 1);
        self.param_vars[slot] = Some(v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    /// Elementwise sum of equal shapes, or `a + b` with `b` a single row
    /// broadcast over the rows of `a`.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa == sb {
            let mut out = self.value(a).clone();
            out.add_assign(self.value(b));
            return Ok(self.push(out, Op::Add(a, b)));
        }
        if sb[0] == 1 && sb[1] == sa[1] {
            let mut out = self.value(a).clone();
            let bias = self.value(b).data().to_vec();
            for r in 0..sa[0] {
                for (o, b) in out.row_mut(r).iter_mut().zip(&bias) {
                    *o += b;
                }
            }
            return Ok(self.push(out, Op::AddRow(a, b)));
        }
        Err(mismatch("add", sa, sb))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(mismatch("mul", sa, sb));
        }
        let data = self.value(a).data().iter().zip(self.value(b).data()).map(|(x, y)| x * y).collect();
        let out = Tensor::from_vec(sa[0], sa[1], data)?;
        Ok(self.push(out, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let out = self.value(a).map(|x| x * c);
        self.push(out, Op::Scale(a, c))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::tanh);
        self.push(out, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| if x > 0.0 { x } else { 0.0 });
        self.push(out, Op::Relu(a))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).transpose();
        self.push(out, Op::Transpose(a))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let Some(&first) = parts.first() else {
            return Err(TensorError::EmptyReduction { op: "concat_cols" });
        };
        let rows = self.shape(first)[0];
        let mut total = 0;
        for &p in parts {
            let s = self.shape(p);
            if s[0] != rows {
                return Err(mismatch("concat_cols", [rows, s[1]], s));
            }
            total += s[1];
        }
        let mut out = Tensor::zeros(rows, total);
        for r in 0..rows {
            let mut offset = 0;
            for &p in parts {
                let src = self.value(p).row(r);
                out.row_mut(r)[offset..offset + src.len()].copy_from_slice(src);
                offset += src.len();
            }
        }
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    /// Rows `indices[i]` of `table`, stacked.
    pub fn gather_rows(&mut self, table: Var, indices: &[usize]) -> Result<Var, TensorError> {
        let t = self.value(table);
        if let Some(&bad) = indices.iter().find(|&&i| i >= t.rows()) {
            return Err(TensorError::IndexOutOfRange { index: bad, len: t.rows() });
        }
        let mut out = Tensor::zeros(indices.len(), t.cols());
        for (r, &i) in indices.iter().enumerate() {
            out.row_mut(r).copy_from_slice(t.row(i));
        }
        Ok(self.push(out, Op::GatherRows(table, indices.into())))
    }

    /// Rows `start..end` of `a`.
    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Result<Var, TensorError> {
        let t = self.value(a);
        if start > end || end > t.rows() {
            return Err(TensorError::IndexOutOfRange { index: end, len: t.rows() });
        }
        let data = t.data()[start * t.cols()..end * t.cols()].to_vec();
        let out = Tensor::from_vec(end - start, t.cols(), data)?;
        Ok(self.push(out, Op::SliceRows(a, start)))
    }

    /// Column-wise maximum over all rows: a `1 x cols` vector plus the row
    /// that won in each column (first one on ties).
    pub fn maxpool_rows(&mut self, a: Var) -> Result<(Var, Vec<usize>), TensorError> {
        let rows = self.shape(a)[0];
        let v = self.segment_max_rows(a, &[(0, rows)])?;
        let argmax = match &self.nodes[v.0].op {
            Op::SegmentMax { argmax, .. } => argmax.clone(),
            _ => unreachable!(),
        };
        Ok((v, argmax))
    }

    /// Column-wise maximum over each row range; one output row per segment.
    pub fn segment_max_rows(&mut self, a: Var, segments: &[(usize, usize)]) -> Result<Var, TensorError> {
        let t = self.value(a);
        let cols = t.cols();
        let mut out = Tensor::zeros(segments.len(), cols);
        let mut argmax = vec![0; segments.len() * cols];
        for (s, &(start, end)) in segments.iter().enumerate() {
            if start >= end {
                return Err(TensorError::EmptyReduction { op: "maxpool_rows" });
            }
            if end > t.rows() {
                return Err(TensorError::IndexOutOfRange { index: end, len: t.rows() });
            }
            let best = &mut argmax[s * cols..(s + 1) * cols];
            best.fill(start);
            let out_row = out.row_mut(s);
            out_row.copy_from_slice(t.row(start));
            for r in start + 1..end {
                for (c, &x) in t.row(r).iter().enumerate() {
                    if x > out_row[c] {
                        out_row[c] = x;
                        best[c] = r;
                    }
                }
            }
        }
        Ok(self.push(out, Op::SegmentMax { input: a, argmax }))
    }

    /// Row-wise layer normalization with learned `1 x cols` gain and bias.
    pub fn layer_norm(&mut self, a: Var, gain: Var, bias: Var, eps: f64) -> Result<Var, TensorError> {
        let x = self.value(a);
        let [rows, cols] = x.shape();
        for p in [gain, bias] {
            if self.shape(p) != [1, cols] {
                return Err(mismatch("layer_norm", [1, cols], self.shape(p)));
            }
        }
        let mut xhat = Tensor::zeros(rows, cols);
        let mut inv_std = Vec::with_capacity(rows);
        for r in 0..rows {
            let row = x.row(r);
            let mean = row.iter().sum::<f64>() / cols as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
            let istd = 1.0 / (var + eps).sqrt();
            for (o, v) in xhat.row_mut(r).iter_mut().zip(row) {
                *o = (v - mean) * istd;
            }
            inv_std.push(istd);
        }
        let g = self.value(gain).data();
        let b = self.value(bias).data();
        let mut out = xhat.clone();
        for r in 0..rows {
            for ((o, gv), bv) in out.row_mut(r).iter_mut().zip(g).zip(b) {
                *o = *o * gv + bv;
            }
        }
        Ok(self.push(out, Op::LayerNorm { input: a, gain, bias, xhat, inv_std }))
    }

    /// Softmax over the allowed entries of each row; masked entries are
    /// exactly zero and a row with no allowed entry is all zeros.
    pub fn softmax_rows_masked(&mut self, a: Var, mask: Arc<DenseMask>) -> Result<Var, TensorError> {
        let x = self.value(a);
        if mask.shape() != x.shape() {
            return Err(mismatch("softmax_rows_masked", x.shape(), mask.shape()));
        }
        let [rows, cols] = x.shape();
        let mut out = Tensor::zeros(rows, cols);
        for r in 0..rows {
            let row = x.row(r);
            let max = (0..cols)
                .filter(|&c| mask.get(r, c))
                .map(|c| row[c])
                .fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                continue;
            }
            let out_row = out.row_mut(r);
            let mut z = 0.0;
            for c in 0..cols {
                if mask.get(r, c) {
                    let e = (row[c] - max).exp();
                    out_row[c] = e;
                    z += e;
                }
            }
            for o in out_row.iter_mut() {
                *o /= z;
            }
        }
        Ok(self.push(out, Op::SoftmaxMasked { input: a, mask }))
    }

    /// Scaled dot-product attention evaluated only on the pairs of
    /// `pattern`: row `i` of the output is `Σ_j w_ij v_j` over allowed `j`
    /// with `w_i· = softmax(scale · q_i·k_j)`.
    pub fn sparse_attention(
        &mut self,
        q: Var,
        k: Var,
        v: Var,
        pattern: Arc<SparsePattern>,
        scale: f64,
    ) -> Result<Var, TensorError> {
        let (qt, kt, vt) = (self.value(q), self.value(k), self.value(v));
        let n = qt.rows();
        if kt.cols() != qt.cols() {
            return Err(mismatch("sparse_attention", [kt.rows(), qt.cols()], kt.shape()));
        }
        if vt.rows() != kt.rows() {
            return Err(mismatch("sparse_attention", [kt.rows(), vt.cols()], vt.shape()));
        }
        if pattern.n_rows() != n || pattern.n_cols() != kt.rows() {
            return Err(mismatch("sparse_attention", [n, kt.rows()], [pattern.n_rows(), pattern.n_cols()]));
        }
        let dv = vt.cols();
        let mut out = Tensor::zeros(n, dv);
        let mut weights = vec![0.0; pattern.nnz()];
        for i in 0..n {
            let range = pattern.range(i);
            if range.is_empty() {
                continue;
            }
            let qi = qt.row(i);
            let w = &mut weights[range.clone()];
            let mut max = f64::NEG_INFINITY;
            for (slot, &j) in w.iter_mut().zip(pattern.row(i)) {
                let s = scale * dot(qi, kt.row(j));
                *slot = s;
                max = max.max(s);
            }
            let mut z = 0.0;
            for slot in w.iter_mut() {
                *slot = (*slot - max).exp();
                z += *slot;
            }
            let out_row = out.row_mut(i);
            for (slot, &j) in w.iter_mut().zip(pattern.row(i)) {
                *slot /= z;
                for (o, x) in out_row.iter_mut().zip(vt.row(j)) {
                    *o += *slot * x;
                }
            }
        }
        Ok(self.push(out, Op::SparseAttention { q, k, v, pattern, scale, weights }))
    }

    /// Attention weights of a [`Graph::sparse_attention`] node, expanded to
    /// a dense matrix with zeros outside the pattern.
    pub fn sparse_attention_weights(&self, node: Var) -> Option<Tensor> {
        match &self.nodes[node.0].op {
            Op::SparseAttention { pattern, weights, .. } => {
                let mut dense = Tensor::zeros(pattern.n_rows(), pattern.n_cols());
                for i in 0..pattern.n_rows() {
                    for (w, &j) in weights[pattern.range(i)].iter().zip(pattern.row(i)) {
                        dense.set(i, j, *w);
                    }
                }
                Some(dense)
            }
            _ => None,
        }
    }

    /// Child-sum recursion over a forest: `h_n = tanh(x_n + Σ_children h_c)`.
    ///
    /// `parent[n]` must be smaller than `n` (pre-order numbering); roots have
    /// `None`.
    pub fn tree_recurrence(&mut self, input: Var, parent: Arc<[Option<usize>]>) -> Result<Var, TensorError> {
        let x = self.value(input);
        let [rows, cols] = x.shape();
        if parent.len() != rows {
            return Err(mismatch("tree_recurrence", [parent.len(), cols], [rows, cols]));
        }
        for (n, p) in parent.iter().enumerate() {
            if p.is_some_and(|p| p >= n) {
                return Err(TensorError::IndexOutOfRange { index: p.unwrap(), len: n });
            }
        }
        let mut acc = x.clone();
        for n in (0..rows).rev() {
            for v in acc.row_mut(n) {
                *v = v.tanh();
            }
            if let Some(p) = parent[n] {
                let (head, tail) = acc.data_mut().split_at_mut(n * cols);
                let child = &tail[..cols];
                for (o, h) in head[p * cols..(p + 1) * cols].iter_mut().zip(child) {
                    *o += h;
                }
            }
        }
        Ok(self.push(acc, Op::TreeRecurrence { input, parent }))
    }

    /// Mean over rows of `-log softmax(logits)[label]`, computed with the
    /// log-sum-exp shift.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var, TensorError> {
        let x = self.value(logits);
        let [rows, cols] = x.shape();
        if labels.len() != rows {
            return Err(mismatch("cross_entropy", [labels.len(), cols], [rows, cols]));
        }
        let mut probs = Tensor::zeros(rows, cols);
        let mut total = 0.0;
        for (r, &y) in labels.iter().enumerate() {
            if y >= cols {
                return Err(TensorError::IndexOutOfRange { index: y, len: cols });
            }
            let row = x.row(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|v| (v - max).exp()).sum();
            let log_z = max + z.ln();
            total += log_z - row[y];
            for (p, v) in probs.row_mut(r).iter_mut().zip(row) {
                *p = (v - log_z).exp();
            }
        }
        let loss = Tensor::scalar(total / rows as f64);
        Ok(self.push(loss, Op::CrossEntropy { logits, labels: labels.to_vec(), probs }))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let total = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(total), Op::Sum(a))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients, TensorError> {
        if self.shape(loss) != [1, 1] {
            return Err(TensorError::NotScalar { shape: self.shape(loss).to_vec() });
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            self.backprop_node(idx, &g, &mut grads);
            if matches!(self.nodes[idx].op, Op::Leaf | Op::Param(_)) {
                grads[idx] = Some(g);
            }
        }
        Ok(Gradients { grads })
    }

    fn backprop_node(&self, idx: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[idx];
        let y = &*node.value;
        match &node.op {
            Op::Leaf | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                gemm_nt(g, bv, slot(grads, *a, av.shape()));
                gemm_tn(av, g, slot(grads, *b, bv.shape()));
            }
            Op::Add(a, b) => {
                accumulate(grads, *a, g);
                accumulate(grads, *b, g);
            }
            Op::AddRow(a, b) => {
                accumulate(grads, *a, g);
                let gb = slot(grads, *b, [1, g.cols()]);
                for r in 0..g.rows() {
                    for (o, v) in gb.data_mut().iter_mut().zip(g.row(r)) {
                        *o += v;
                    }
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let ga = slot(grads, *a, g.shape());
                for ((o, gv), bx) in ga.data_mut().iter_mut().zip(g.data()).zip(bv.data()) {
                    *o += gv * bx;
                }
                let gb = slot(grads, *b, g.shape());
                for ((o, gv), ax) in gb.data_mut().iter_mut().zip(g.data()).zip(av.data()) {
                    *o += gv * ax;
                }
            }
            Op::Scale(a, c) => {
                let ga = slot(grads, *a, g.shape());
                for (o, gv) in ga.data_mut().iter_mut().zip(g.data()) {
                    *o += c * gv;
                }
            }
            Op::Tanh(a) => {
                let ga = slot(grads, *a, g.shape());
                for ((o, gv), yv) in ga.data_mut().iter_mut().zip(g.data()).zip(y.data()) {
                    *o += gv * (1.0 - yv * yv);
                }
            }
            Op::Relu(a) => {
                let ga = slot(grads, *a, g.shape());
                for ((o, gv), yv) in ga.data_mut().iter_mut().zip(g.data()).zip(y.data()) {
                    if *yv > 0.0 {
                        *o += gv;
                    }
                }
            }
            Op::Transpose(a) => {
                accumulate_owned(grads, *a, g.transpose());
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for p in parts {
                    let width = self.shape(*p)[1];
                    let gp = slot(grads, *p, [g.rows(), width]);
                    for r in 0..g.rows() {
                        for (o, v) in gp.row_mut(r).iter_mut().zip(&g.row(r)[offset..offset + width]) {
                            *o += v;
                        }
                    }
                    offset += width;
                }
            }
            Op::GatherRows(table, indices) => {
                let gt = slot(grads, *table, self.shape(*table));
                for (r, &i) in indices.iter().enumerate() {
                    for (o, v) in gt.row_mut(i).iter_mut().zip(g.row(r)) {
                        *o += v;
                    }
                }
            }
            Op::SliceRows(a, start) => {
                let ga = slot(grads, *a, self.shape(*a));
                for r in 0..g.rows() {
                    for (o, v) in ga.row_mut(start + r).iter_mut().zip(g.row(r)) {
                        *o += v;
                    }
                }
            }
            Op::SegmentMax { input, argmax } => {
                let cols = g.cols();
                let gi = slot(grads, *input, self.shape(*input));
                for s in 0..g.rows() {
                    for c in 0..cols {
                        let r = argmax[s * cols + c];
                        gi.data_mut()[r * cols + c] += g.get(s, c);
                    }
                }
            }
            Op::LayerNorm { input, gain, bias, xhat, inv_std } => {
                let [rows, cols] = g.shape();
                let gain_v = self.value(*gain).data().to_vec();
                {
                    let gg = slot(grads, *gain, [1, cols]);
                    for r in 0..rows {
                        for ((o, gv), xh) in gg.data_mut().iter_mut().zip(g.row(r)).zip(xhat.row(r)) {
                            *o += gv * xh;
                        }
                    }
                }
                {
                    let gb = slot(grads, *bias, [1, cols]);
                    for r in 0..rows {
                        for (o, gv) in gb.data_mut().iter_mut().zip(g.row(r)) {
                            *o += gv;
                        }
                    }
                }
                let gi = slot(grads, *input, [rows, cols]);
                let d = cols as f64;
                let mut dxhat = vec![0.0; cols];
                for r in 0..rows {
                    for ((o, gv), gn) in dxhat.iter_mut().zip(g.row(r)).zip(&gain_v) {
                        *o = gv * gn;
                    }
                    let sum_d: f64 = dxhat.iter().sum();
                    let sum_dx: f64 = dxhat.iter().zip(xhat.row(r)).map(|(a, b)| a * b).sum();
                    let k = inv_std[r] / d;
                    for ((o, dh), xh) in gi.row_mut(r).iter_mut().zip(&dxhat).zip(xhat.row(r)) {
                        *o += k * (d * dh - sum_d - xh * sum_dx);
                    }
                }
            }
            Op::SoftmaxMasked { input, mask } => {
                let [rows, cols] = g.shape();
                let gi = slot(grads, *input, [rows, cols]);
                for r in 0..rows {
                    let (yr, gr) = (y.row(r), g.row(r));
                    let dot: f64 = (0..cols).filter(|&c| mask.get(r, c)).map(|c| yr[c] * gr[c]).sum();
                    let out = gi.row_mut(r);
                    for c in 0..cols {
                        if mask.get(r, c) {
                            out[c] += yr[c] * (gr[c] - dot);
                        }
                    }
                }
            }
            Op::SparseAttention { q, k, v, pattern, scale, weights } => {
                self.backprop_sparse_attention(g, [*q, *k, *v], pattern, *scale, weights, grads);
            }
            Op::TreeRecurrence { input, parent } => {
                let [rows, cols] = g.shape();
                let mut dz = Tensor::zeros(rows, cols);
                for n in 0..rows {
                    let carry = parent[n].map(|p| dz.row(p).to_vec());
                    let h = y.row(n);
                    let gr = g.row(n);
                    let out = dz.row_mut(n);
                    for c in 0..cols {
                        let dh = gr[c] + carry.as_ref().map_or(0.0, |cv| cv[c]);
                        out[c] = dh * (1.0 - h[c] * h[c]);
                    }
                }
                accumulate_owned(grads, *input, dz);
            }
            Op::CrossEntropy { logits, labels, probs } => {
                let upstream = g.item() / labels.len() as f64;
                let gl = slot(grads, *logits, probs.shape());
                for (r, &label) in labels.iter().enumerate() {
                    for (c, (o, p)) in gl.row_mut(r).iter_mut().zip(probs.row(r)).enumerate() {
                        let target = if c == label { 1.0 } else { 0.0 };
                        *o += upstream * (p - target);
                    }
                }
            }
            Op::Sum(a) => {
                let up = g.item();
                let ga = slot(grads, *a, self.shape(*a));
                for o in ga.data_mut() {
                    *o += up;
                }
            }
        }
    }

    fn backprop_sparse_attention(
        &self,
        g: &Tensor,
        [q, k, v]: [Var; 3],
        pattern: &SparsePattern,
        scale: f64,
        weights: &[f64],
        grads: &mut [Option<Tensor>],
    ) {
        let (qt, kt, vt) = (self.value(q), self.value(k), self.value(v));
        let mut dq = Tensor::zeros(qt.rows(), qt.cols());
        let mut dk = Tensor::zeros(kt.rows(), kt.cols());
        let mut dv = Tensor::zeros(vt.rows(), vt.cols());
        let mut dw = Vec::new();
        for i in 0..pattern.n_rows() {
            let cols = pattern.row(i);
            if cols.is_empty() {
                continue;
            }
            let w = &weights[pattern.range(i)];
            let gi = g.row(i);
            dw.clear();
            for (&wij, &j) in w.iter().zip(cols) {
                dw.push(dot(gi, vt.row(j)));
                for (o, x) in dv.row_mut(j).iter_mut().zip(gi) {
                    *o += wij * x;
                }
            }
            let mean: f64 = w.iter().zip(&dw).map(|(a, b)| a * b).sum();
            let qi = qt.row(i).to_vec();
            let dqi = dq.row_mut(i);
            for ((&wij, &dwij), &j) in w.iter().zip(&dw).zip(cols) {
                let ds = scale * wij * (dwij - mean);
                for (o, x) in dqi.iter_mut().zip(kt.row(j)) {
                    *o += ds * x;
                }
                for (o, x) in dk.row_mut(j).iter_mut().zip(&qi) {
                    *o += ds * x;
                }
            }
        }
        accumulate_owned(grads, q, dq);
        accumulate_owned(grads, k, dk);
        accumulate_owned(grads, v, dv);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: &Tensor) {
    match &mut grads[v.0] {
        Some(t) => t.add_assign(g),
        empty => *empty = Some(g.clone()),
    }
}

fn accumulate_owned(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(t) => t.add_assign(&g),
        empty => *empty = Some(g),
    }
}

fn slot(grads: &mut [Option<Tensor>], v: Var, shape: [usize; 2]) -> &mut Tensor {
    grads[v.0].get_or_insert_with(|| Tensor::zeros(shape[0], shape[1]))
}

/// Result of [`Graph::backward`]: `∂loss/∂node` for every leaf and
/// parameter node the loss depends on.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Add parameter gradients into the store's accumulators.
    pub fn accumulate_into(&self, graph: &Graph, store: &mut ParamStore) {
        for (node, grad) in graph.nodes.iter().zip(&self.grads) {
            if let (Op::Param(id), Some(g)) = (&node.op, grad) {
                store.grad_mut(*id).add_assign(g);
            }
        }
    }
}
