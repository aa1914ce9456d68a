//! Reverse-mode differentiation over a recorded operation tape.
//!
//! A [`Graph`] is built fresh for every forward pass. Each operation appends a
//! node holding its value and whatever it needs for the backward pass; nodes are
//! only ever appended, so reverse insertion order is a valid reverse topological
//! order. [`Graph::backward`] seeds the chosen scalar with 1 and sweeps the tape
//! once.

use super::tensor::{gemm_acc, gemm_tn_acc, transpose, Tensor};
use crate::error::{Error, Result};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Linear { x: Var, w: Var, b: Var },
    MatMulNT { a: Var, b: Var },
    Add { a: Var, b: Var },
    Scale { a: Var, factor: f64 },
    Relu { a: Var },
    Conv { x: Var, kernel: Var, dilation: usize },
    MaskRows { x: Var, keep: Vec<bool> },
    SliceRows { x: Var, start: usize },
    /// `argmax[h]` is the winning row per feature; `usize::MAX` when every row is masked.
    MaskedMax { x: Var, argmax: Vec<usize> },
    MaskedMean { x: Var, mask: Vec<bool>, count: usize },
    /// `source[i]` indexes the input element behind output element `i`.
    MaxPoolTime { x: Var, source: Vec<usize> },
    GatherRows { sources: Vec<(Var, usize)> },
    ConcatCols { a: Var, b: Var },
    L2NormalizeRows { x: Var, norms: Vec<f64> },
    SoftmaxXent { logits: Var, targets: Vec<usize>, excluded: Vec<Option<usize>>, probs: Vec<f64> },
    Sum { a: Var },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    requires_grad: bool,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
}

fn mismatch(op: &'static str, detail: String) -> Error {
    Error::ShapeMismatch { op, detail }
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

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node { value, requires_grad, op });
        Var(self.nodes.len() - 1)
    }

    /// Trainable leaf; receives a gradient on `backward`.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node { value, requires_grad: true, op: Op::Leaf });
        Var(self.nodes.len() - 1)
    }

    /// Non-trainable leaf.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node { value, requires_grad: false, op: Op::Leaf });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient of the last `backward` target with respect to `v`, if any flowed there.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Affine map over the last axis: `x[.., in] * w[in, out] + b[out]`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        if wv.shape().len() != 2 || xv.cols() != wv.shape()[0] || bv.numel() != wv.shape()[1] {
            return Err(mismatch(
                "linear",
                format!("x {:?}, w {:?}, b {:?}", xv.shape(), wv.shape(), bv.shape()),
            ));
        }
        let (n, k, m) = (xv.rows(), xv.cols(), wv.shape()[1]);
        let mut out = Vec::with_capacity(n * m);
        for _ in 0..n {
            out.extend_from_slice(bv.data());
        }
        gemm_acc(xv.data(), wv.data(), &mut out, n, k, m);
        let mut shape = xv.shape().to_vec();
        *shape.last_mut().unwrap() = m;
        let value = Tensor::new(shape, out)?;
        Ok(self.push(value, Op::Linear { x, w, b }, &[x, w, b]))
    }

    /// `a[n, k] * b[m, k]^T`
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.cols() != bv.cols() {
            return Err(mismatch("matmul_nt", format!("a {:?}, b {:?}", av.shape(), bv.shape())));
        }
        let (n, k, m) = (av.rows(), av.cols(), bv.rows());
        let bt = transpose(bv.data(), m, k);
        let mut out = vec![0.0; n * m];
        gemm_acc(av.data(), &bt, &mut out, n, k, m);
        let value = Tensor::matrix(n, m, out)?;
        Ok(self.push(value, Op::MatMulNT { a, b }, &[a, b]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(mismatch("add", format!("{:?} vs {:?}", av.shape(), bv.shape())));
        }
        let data = av.data().iter().zip(bv.data()).map(|(x, y)| x + y).collect();
        let value = Tensor::new(av.shape().to_vec(), data)?;
        Ok(self.push(value, Op::Add { a, b }, &[a, b]))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let av = self.value(a);
        let value = Tensor::new(av.shape().to_vec(), av.data().iter().map(|x| x * factor).collect())
            .expect("same shape");
        self.push(value, Op::Scale { a, factor }, &[a])
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let av = self.value(a);
        let value = Tensor::new(av.shape().to_vec(), av.data().iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect())
            .expect("same shape");
        self.push(value, Op::Relu { a }, &[a])
    }

    /// Causal dilated convolution: `y[t] = sum_j x[t - j * dilation] * kernel[j]`,
    /// with zeros before the start of the sequence.
    pub fn causal_conv1d(&mut self, x: Var, kernel: Var, dilation: usize) -> Result<Var> {
        let (xv, kv) = (self.value(x), self.value(kernel));
        if dilation == 0 || xv.shape().len() != 2 || kv.shape().len() != 3 || kv.shape()[1] != xv.cols() {
            return Err(mismatch(
                "causal_conv1d",
                format!("x {:?}, kernel {:?}, dilation {dilation}", xv.shape(), kv.shape()),
            ));
        }
        let (len, c_in) = (xv.rows(), xv.cols());
        let (taps, c_out) = (kv.shape()[0], kv.shape()[2]);
        let mut out = vec![0.0; len * c_out];
        for j in 0..taps {
            let lag = j * dilation;
            if lag >= len {
                break;
            }
            let rows = len - lag;
            let kj = &kv.data()[j * c_in * c_out..(j + 1) * c_in * c_out];
            gemm_acc(&xv.data()[..rows * c_in], kj, &mut out[lag * c_out..], rows, c_in, c_out);
        }
        let value = Tensor::matrix(len, c_out, out)?;
        Ok(self.push(value, Op::Conv { x, kernel, dilation }, &[x, kernel]))
    }

    /// Zeroes the rows where `keep` is false.
    pub fn mask_rows(&mut self, x: Var, keep: &[bool]) -> Result<Var> {
        let xv = self.value(x);
        if keep.len() != xv.rows() {
            return Err(mismatch("mask_rows", format!("{} flags for {} rows", keep.len(), xv.rows())));
        }
        let c = xv.cols();
        let mut data = xv.data().to_vec();
        for (i, &k) in keep.iter().enumerate() {
            if !k {
                data[i * c..(i + 1) * c].fill(0.0);
            }
        }
        let value = Tensor::new(xv.shape().to_vec(), data)?;
        Ok(self.push(value, Op::MaskRows { x, keep: keep.to_vec() }, &[x]))
    }

    /// Rows `start..end` of a matrix.
    pub fn slice_rows(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let xv = self.value(x);
        if xv.shape().len() != 2 || start >= end || end > xv.rows() {
            return Err(mismatch("slice_rows", format!("rows {start}..{end} of {:?}", xv.shape())));
        }
        let c = xv.cols();
        let value = Tensor::matrix(end - start, c, xv.data()[start * c..end * c].to_vec())?;
        Ok(self.push(value, Op::SliceRows { x, start }, &[x]))
    }

    /// Per-feature maximum over the rows whose mask is set; zeros if none is.
    /// Ties go to the first row.
    pub fn masked_max_over_set(&mut self, x: Var, mask: &[bool]) -> Result<Var> {
        let xv = self.value(x);
        if xv.shape().len() != 2 || mask.len() != xv.rows() {
            return Err(mismatch("masked_max_over_set", format!("{} flags for {:?}", mask.len(), xv.shape())));
        }
        let c = xv.cols();
        let mut out = vec![0.0; c];
        let mut argmax = vec![usize::MAX; c];
        for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
            for (h, &v) in xv.row(i).iter().enumerate() {
                if argmax[h] == usize::MAX || v > out[h] {
                    out[h] = v;
                    argmax[h] = i;
                }
            }
        }
        Ok(self.push(Tensor::vector(out), Op::MaskedMax { x, argmax }, &[x]))
    }

    /// Per-feature maximum over time of a `[T, F]` sequence.
    pub fn max_over_time(&mut self, x: Var) -> Result<Var> {
        let rows = self.value(x).rows();
        self.masked_max_over_set(x, &vec![true; rows])
    }

    /// Per-feature mean over the rows whose mask is set; zeros if none is.
    pub fn masked_mean_over_set(&mut self, x: Var, mask: &[bool]) -> Result<Var> {
        let xv = self.value(x);
        if xv.shape().len() != 2 || mask.len() != xv.rows() {
            return Err(mismatch("masked_mean_over_set", format!("{} flags for {:?}", mask.len(), xv.shape())));
        }
        let c = xv.cols();
        let count = mask.iter().filter(|&&m| m).count();
        let mut out = vec![0.0; c];
        for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
            for (o, v) in out.iter_mut().zip(xv.row(i)) {
                *o += v;
            }
        }
        if count > 0 {
            out.iter_mut().for_each(|o| *o /= count as f64);
        }
        Ok(self.push(Tensor::vector(out), Op::MaskedMean { x, mask: mask.to_vec(), count }, &[x]))
    }

    /// Max-pool along time with window and stride 2; an odd last row passes through.
    pub fn max_pool_time(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        if xv.shape().len() != 2 {
            return Err(mismatch("max_pool_time", format!("{:?}", xv.shape())));
        }
        let (len, c) = (xv.rows(), xv.cols());
        let out_len = len.div_ceil(2);
        let mut out = vec![0.0; out_len * c];
        let mut source = vec![0; out_len * c];
        for i in 0..out_len {
            for h in 0..c {
                let first = 2 * i * c + h;
                let mut best = first;
                if 2 * i + 1 < len && xv.data()[first + c] > xv.data()[first] {
                    best = first + c;
                }
                out[i * c + h] = xv.data()[best];
                source[i * c + h] = best;
            }
        }
        let value = Tensor::matrix(out_len, c, out)?;
        Ok(self.push(value, Op::MaxPoolTime { x, source }, &[x]))
    }

    /// Stacks selected rows (row `r` of each source, viewed as `[rows, F]`) into `[n, F]`.
    pub fn gather_rows(&mut self, sources: &[(Var, usize)]) -> Result<Var> {
        let Some(&(first, _)) = sources.first() else {
            return Err(mismatch("gather_rows", "no rows".into()));
        };
        let c = self.value(first).cols();
        let mut data = Vec::with_capacity(sources.len() * c);
        for &(v, r) in sources {
            let t = self.value(v);
            if t.cols() != c || r >= t.rows() {
                return Err(mismatch("gather_rows", format!("row {r} of {:?} (width {c})", t.shape())));
            }
            data.extend_from_slice(t.row(r));
        }
        let value = Tensor::matrix(sources.len(), c, data)?;
        let inputs: Vec<Var> = sources.iter().map(|s| s.0).collect();
        Ok(self.push(value, Op::GatherRows { sources: sources.to_vec() }, &inputs))
    }

    /// `[a | b]` along the last axis of two matrices with equal row counts.
    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.rows() != bv.rows() {
            return Err(mismatch("concat_cols", format!("{:?} vs {:?}", av.shape(), bv.shape())));
        }
        let (n, ca, cb) = (av.rows(), av.cols(), bv.cols());
        let mut data = Vec::with_capacity(n * (ca + cb));
        for i in 0..n {
            data.extend_from_slice(av.row(i));
            data.extend_from_slice(bv.row(i));
        }
        let value = Tensor::matrix(n, ca + cb, data)?;
        Ok(self.push(value, Op::ConcatCols { a, b }, &[a, b]))
    }

    /// Scales every row to unit Euclidean norm; a zero row is an error.
    pub fn l2_normalize_rows(&mut self, x: Var, which: &'static str) -> Result<Var> {
        let xv = self.value(x);
        let c = xv.cols();
        let mut norms = Vec::with_capacity(xv.rows());
        let mut data = Vec::with_capacity(xv.numel());
        for i in 0..xv.rows() {
            let row = xv.row(i);
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::ZeroNorm { which, row: i });
            }
            norms.push(norm);
            data.extend(row.iter().map(|v| v / norm));
        }
        let value = Tensor::matrix(xv.rows(), c, data)?;
        Ok(self.push(value, Op::L2NormalizeRows { x, norms }, &[x]))
    }

    /// Summed cross-entropy `sum_i -log softmax(logits[i])[targets[i]]`, where the
    /// column `excluded[i]` (if any) is left out of row `i`'s normaliser.
    pub fn softmax_xent(&mut self, logits: Var, targets: &[usize], excluded: &[Option<usize>]) -> Result<Var> {
        let lv = self.value(logits);
        let (n, k) = (lv.rows(), lv.cols());
        if lv.shape().len() != 2 || targets.len() != n || excluded.len() != n {
            return Err(mismatch("softmax_xent", format!("logits {:?}, {} targets", lv.shape(), targets.len())));
        }
        let mut probs = vec![0.0; n * k];
        let mut total = 0.0;
        for i in 0..n {
            let row = lv.row(i);
            let skip = excluded[i];
            if targets[i] >= k || skip == Some(targets[i]) {
                return Err(mismatch("softmax_xent", format!("target {} invalid for row {i}", targets[i])));
            }
            let max = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| Some(j) != skip)
                .map(|(_, &v)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for (j, &v) in row.iter().enumerate() {
                if Some(j) != skip {
                    let e = (v - max).exp();
                    probs[i * k + j] = e;
                    z += e;
                }
            }
            probs[i * k..(i + 1) * k].iter_mut().for_each(|p| *p /= z);
            total += max + z.ln() - row[targets[i]];
        }
        let op = Op::SoftmaxXent { logits, targets: targets.to_vec(), excluded: excluded.to_vec(), probs };
        Ok(self.push(Tensor::scalar(total), op, &[logits]))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let total = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(total), Op::Sum { a }, &[a])
    }

    /// Back-propagates from a one-element node. Gradients of earlier calls are discarded.
    pub fn backward(&mut self, target: Var) -> Result<()> {
        if self.value(target).numel() != 1 {
            return Err(mismatch("backward", format!("target has shape {:?}", self.value(target).shape())));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[target.0] = Some(vec![1.0]);
        for idx in (0..=target.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            if self.nodes[idx].requires_grad {
                self.propagate(idx, &g, &mut grads);
            }
            grads[idx] = Some(g);
        }
        self.grads = grads;
        Ok(())
    }

    fn accumulate<'g>(&self, grads: &'g mut [Option<Vec<f64>>], v: Var) -> Option<&'g mut Vec<f64>> {
        if !self.nodes[v.0].requires_grad {
            return None;
        }
        let numel = self.nodes[v.0].value.numel();
        Some(grads[v.0].get_or_insert_with(|| vec![0.0; numel]))
    }

    fn propagate(&self, idx: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[idx];
        match &node.op {
            Op::Leaf => {}
            Op::Linear { x, w, b } => {
                let (xv, wv) = (self.value(*x), self.value(*w));
                let (n, k, m) = (xv.rows(), xv.cols(), wv.shape()[1]);
                if let Some(gx) = self.accumulate(grads, *x) {
                    let wt = transpose(wv.data(), k, m);
                    gemm_acc(g, &wt, gx, n, m, k);
                }
                if let Some(gw) = self.accumulate(grads, *w) {
                    gemm_tn_acc(xv.data(), g, gw, n, k, m);
                }
                if let Some(gb) = self.accumulate(grads, *b) {
                    for row in g.chunks(m) {
                        for (o, v) in gb.iter_mut().zip(row) {
                            *o += v;
                        }
                    }
                }
            }
            Op::MatMulNT { a, b } => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (n, k, m) = (av.rows(), av.cols(), bv.rows());
                if let Some(ga) = self.accumulate(grads, *a) {
                    gemm_acc(g, bv.data(), ga, n, m, k);
                }
                if let Some(gb) = self.accumulate(grads, *b) {
                    gemm_tn_acc(g, av.data(), gb, n, m, k);
                }
            }
            Op::Add { a, b } => {
                for v in [*a, *b] {
                    if let Some(gv) = self.accumulate(grads, v) {
                        gv.iter_mut().zip(g).for_each(|(o, d)| *o += d);
                    }
                }
            }
            Op::Scale { a, factor } => {
                if let Some(ga) = self.accumulate(grads, *a) {
                    ga.iter_mut().zip(g).for_each(|(o, d)| *o += d * factor);
                }
            }
            Op::Relu { a } => {
                let av = self.value(*a).data();
                if let Some(ga) = self.accumulate(grads, *a) {
                    for ((o, d), x) in ga.iter_mut().zip(g).zip(av) {
                        if *x > 0.0 {
                            *o += d;
                        }
                    }
                }
            }
            Op::Conv { x, kernel, dilation } => {
                let (xv, kv) = (self.value(*x), self.value(*kernel));
                let (len, c_in) = (xv.rows(), xv.cols());
                let (taps, c_out) = (kv.shape()[0], kv.shape()[2]);
                if let Some(gx) = self.accumulate(grads, *x) {
                    for j in 0..taps {
                        let lag = j * dilation;
                        if lag >= len {
                            break;
                        }
                        let rows = len - lag;
                        let kt = transpose(&kv.data()[j * c_in * c_out..(j + 1) * c_in * c_out], c_in, c_out);
                        gemm_acc(&g[lag * c_out..], &kt, &mut gx[..rows * c_in], rows, c_out, c_in);
                    }
                }
                if let Some(gk) = self.accumulate(grads, *kernel) {
                    for j in 0..taps {
                        let lag = j * dilation;
                        if lag >= len {
                            break;
                        }
                        let rows = len - lag;
                        gemm_tn_acc(
                            &xv.data()[..rows * c_in],
                            &g[lag * c_out..],
                            &mut gk[j * c_in * c_out..(j + 1) * c_in * c_out],
                            rows,
                            c_in,
                            c_out,
                        );
                    }
                }
            }
            Op::MaskRows { x, keep } => {
                let c = node.value.cols();
                if let Some(gx) = self.accumulate(grads, *x) {
                    for (i, _) in keep.iter().enumerate().filter(|(_, &k)| k) {
                        for (o, d) in gx[i * c..(i + 1) * c].iter_mut().zip(&g[i * c..(i + 1) * c]) {
                            *o += d;
                        }
                    }
                }
            }
            Op::SliceRows { x, start } => {
                let c = node.value.cols();
                if let Some(gx) = self.accumulate(grads, *x) {
                    gx[start * c..start * c + g.len()].iter_mut().zip(g).for_each(|(o, d)| *o += d);
                }
            }
            Op::MaskedMax { x, argmax } => {
                let c = node.value.numel();
                if let Some(gx) = self.accumulate(grads, *x) {
                    for (h, &row) in argmax.iter().enumerate() {
                        if row != usize::MAX {
                            gx[row * c + h] += g[h];
                        }
                    }
                }
            }
            Op::MaskedMean { x, mask, count } => {
                let c = node.value.numel();
                if let Some(gx) = self.accumulate(grads, *x) {
                    for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
                        for (o, d) in gx[i * c..(i + 1) * c].iter_mut().zip(g) {
                            *o += d / *count as f64;
                        }
                    }
                }
            }
            Op::MaxPoolTime { x, source } => {
                if let Some(gx) = self.accumulate(grads, *x) {
                    for (d, &s) in g.iter().zip(source) {
                        gx[s] += d;
                    }
                }
            }
            Op::GatherRows { sources } => {
                let c = node.value.cols();
                for (i, &(v, r)) in sources.iter().enumerate() {
                    if let Some(gv) = self.accumulate(grads, v) {
                        for (o, d) in gv[r * c..(r + 1) * c].iter_mut().zip(&g[i * c..(i + 1) * c]) {
                            *o += d;
                        }
                    }
                }
            }
            Op::ConcatCols { a, b } => {
                let ca = self.value(*a).cols();
                let cb = self.value(*b).cols();
                if let Some(ga) = self.accumulate(grads, *a) {
                    for (i, row) in g.chunks(ca + cb).enumerate() {
                        ga[i * ca..(i + 1) * ca].iter_mut().zip(&row[..ca]).for_each(|(o, d)| *o += d);
                    }
                }
                if let Some(gb) = self.accumulate(grads, *b) {
                    for (i, row) in g.chunks(ca + cb).enumerate() {
                        gb[i * cb..(i + 1) * cb].iter_mut().zip(&row[ca..]).for_each(|(o, d)| *o += d);
                    }
                }
            }
            Op::L2NormalizeRows { x, norms } => {
                let y = &node.value;
                let c = y.cols();
                if let Some(gx) = self.accumulate(grads, *x) {
                    for (i, norm) in norms.iter().enumerate() {
                        let yr = y.row(i);
                        let gr = &g[i * c..(i + 1) * c];
                        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for ((o, d), yv) in gx[i * c..(i + 1) * c].iter_mut().zip(gr).zip(yr) {
                            *o += (d - yv * dot) / norm;
                        }
                    }
                }
            }
            Op::SoftmaxXent { logits, targets, excluded, probs } => {
                let k = self.value(*logits).cols();
                let scale = g[0];
                if let Some(gl) = self.accumulate(grads, *logits) {
                    for (i, &t) in targets.iter().enumerate() {
                        for j in 0..k {
                            if Some(j) != excluded[i] {
                                gl[i * k + j] += scale * probs[i * k + j];
                            }
                        }
                        gl[i * k + t] -= scale;
                    }
                }
            }
            Op::Sum { a } => {
                if let Some(ga) = self.accumulate(grads, *a) {
                    ga.iter_mut().for_each(|o| *o += g[0]);
                }
            }
        }
    }
}
