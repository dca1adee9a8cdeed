//! Tape-based reverse-mode differentiation.
//!
//! A [`Graph`] records every forward op in creation order; since parents are
//! always created before children, walking the node list backwards is a valid
//! topological order for the backward sweep. Parameters are borrowed from
//! their [`ParamStore`] for the lifetime of the graph and receive gradients
//! through [`Gradients::accumulate_into`] once the graph has been dropped.

use super::params::{ParamId, ParamStore};
use super::tensor::{numel, Tensor};
use crate::error::{ensure, Error, Result};
use crate::scalar::Scalar;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Value<'a, T> {
    Owned(Tensor<T>),
    Borrowed(&'a Tensor<T>),
}

impl<T> Value<'_, T> {
    fn get(&self) -> &Tensor<T> {
        match self {
            Value::Owned(t) => t,
            Value::Borrowed(t) => t,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct ConvGeom {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    o: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    oh: usize,
    ow: usize,
}

impl ConvGeom {
    fn ckk(&self) -> usize {
        self.c * self.kh * self.kw
    }
    fn p(&self) -> usize {
        self.oh * self.ow
    }
}

enum Op<T> {
    Leaf { param: Option<ParamId> },
    Conv2d { input: Var, kernel: Var, bias: Option<Var>, geom: ConvGeom, cols: Vec<T> },
    Dense { input: Var, weight: Var, bias: Option<Var>, rows: usize },
    LeakyRelu { x: Var, slope: T },
    Swish { x: Var },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale { x: Var, c: T },
    AddScalar { x: Var },
    Exp { x: Var },
    Square { x: Var },
    Clamp { x: Var, lo: T, hi: T },
    Minimum(Var, Var),
    Sum { x: Var },
    Mean { x: Var },
    Reshape { x: Var },
    Concat { a: Var, b: Var, rows: usize, wa: usize, wb: usize },
    Rows { x: Var, start: usize },
    LogSoftmax { x: Var, rows: usize, k: usize },
    Gather { x: Var, idx: Vec<usize>, k: usize },
}

struct Node<'a, T> {
    value: Value<'a, T>,
    op: Op<T>,
    needs_grad: bool,
}

/// Recorded computation. `'a` is the lifetime of borrowed parameters.
pub struct Graph<'a, T> {
    nodes: Vec<Node<'a, T>>,
    record: bool,
}

impl<T: Scalar> Default for Graph<'_, T> {
    fn default() -> Self {
        Self::new()
    }
}

fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Rows and row width of a tensor viewed as a matrix over its last axis.
fn as_matrix(shape: &[usize]) -> (usize, usize) {
    match shape {
        [] => (1, 1),
        [k] => (1, *k),
        _ => {
            let k = *shape.last().unwrap();
            (numel(shape) / k.max(1), k)
        }
    }
}

impl<'a, T: Scalar> Graph<'a, T> {
    /// Graph that keeps the intermediates needed for [`Graph::backward`].
    pub fn new() -> Self {
        Self { nodes: Vec::new(), record: true }
    }

    /// Forward-only graph; backward caches are not kept.
    pub fn inference() -> Self {
        Self { nodes: Vec::new(), record: false }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, needs_grad: bool) -> Var {
        self.nodes.push(Node { value: Value::Owned(value), op, needs_grad: needs_grad && self.record });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        self.nodes[v.0].value.get()
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.value(v).shape()
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Leaf { param: None }, false)
    }

    /// Owned leaf whose gradient is reported by [`Gradients::wrt`].
    pub fn variable(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Leaf { param: None }, true)
    }

    /// Borrowed trainable parameter.
    pub fn param(&mut self, store: &'a ParamStore<T>, id: ParamId) -> Var {
        self.nodes.push(Node { value: Value::Borrowed(store.get(id)), op: Op::Leaf { param: Some(id) }, needs_grad: self.record });
        Var(self.nodes.len() - 1)
    }

    /// Copy of `v`'s value cut off from the gradient flow.
    pub fn detach(&mut self, v: Var) -> Var {
        let t = self.value(v).clone();
        self.constant(t)
    }

    /// Valid (unpadded) 2-D convolution. Input `[C,H,W]` or `[N,C,H,W]`, kernels `[O,C,kH,kW]`, bias `[O]`.
    pub fn conv2d(&mut self, input: Var, kernel: Var, bias: Option<Var>, stride: usize) -> Result<Var> {
        let ishape = self.shape(input).to_vec();
        let kshape = self.shape(kernel).to_vec();
        ensure!(stride >= 1, Contract, "conv2d stride must be >= 1");
        ensure!(kshape.len() == 4, Dimension, "conv2d kernels must be 4-D, got {:?}", kshape);
        let (n, c, h, w, batched) = match ishape.as_slice() {
            [c, h, w] => (1, *c, *h, *w, false),
            [n, c, h, w] => (*n, *c, *h, *w, true),
            s => return Err(Error::Dimension(format!("conv2d input must be 3-D or 4-D, got {s:?}"))),
        };
        let (o, kc, kh, kw) = (kshape[0], kshape[1], kshape[2], kshape[3]);
        ensure!(kc == c, Dimension, "conv2d input has {c} channels but kernels expect {kc}");
        ensure!(h >= kh && w >= kw, Dimension, "conv2d input {h}x{w} smaller than kernel {kh}x{kw}");
        if let Some(b) = bias {
            ensure!(self.shape(b) == [o], Dimension, "conv2d bias must be [{o}], got {:?}", self.shape(b));
        }
        let oh = (h - kh) / stride + 1;
        let ow = (w - kw) / stride + 1;
        let geom = ConvGeom { n, c, h, w, o, kh, kw, stride, oh, ow };
        let (ckk, p) = (geom.ckk(), geom.p());
        let np = n * p;

        // Patch-major im2col: row `ni*p + pos` holds one receptive field.
        let x = self.value(input).data();
        let mut cols = vec![T::zero(); np * ckk];
        for ni in 0..n {
            let xin = &x[ni * c * h * w..(ni + 1) * c * h * w];
            for oy in 0..oh {
                for ox in 0..ow {
                    let patch = &mut cols[(ni * p + oy * ow + ox) * ckk..(ni * p + oy * ow + ox + 1) * ckk];
                    for ci in 0..c {
                        for ki in 0..kh {
                            let src = ci * h * w + (oy * stride + ki) * w + ox * stride;
                            let dst = (ci * kh + ki) * kw;
                            patch[dst..dst + kw].copy_from_slice(&xin[src..src + kw]);
                        }
                    }
                }
            }
        }
        let mut out2 = vec![T::zero(); np * o];
        T::gemm_nt(np, o, ckk, &cols, self.value(kernel).data(), &mut out2);
        let mut out = vec![T::zero(); n * o * p];
        let bias_vals = bias.map(|b| self.value(b).data().to_vec());
        for ni in 0..n {
            for pos in 0..p {
                let src = &out2[(ni * p + pos) * o..(ni * p + pos + 1) * o];
                for (oi, &s) in src.iter().enumerate() {
                    let bv = bias_vals.as_ref().map_or(T::zero(), |b| b[oi]);
                    out[(ni * o + oi) * p + pos] = s + bv;
                }
            }
        }
        let oshape: Vec<usize> = if batched { vec![n, o, oh, ow] } else { vec![o, oh, ow] };
        let needs = self.needs(input) || self.needs(kernel) || bias.is_some_and(|b| self.needs(b));
        let cols = if self.record && needs { cols } else { Vec::new() };
        let t = Tensor::new(&oshape, out)?;
        Ok(self.push(t, Op::Conv2d { input, kernel, bias, geom, cols }, needs))
    }

    /// Affine layer `x·Wᵀ + b`. Input `[n]` or `[N,n]`, weights `[m,n]`, bias `[m]`.
    pub fn dense(&mut self, input: Var, weight: Var, bias: Option<Var>) -> Result<Var> {
        let ishape = self.shape(input).to_vec();
        let wshape = self.shape(weight).to_vec();
        ensure!(wshape.len() == 2, Dimension, "dense weights must be 2-D, got {:?}", wshape);
        let (m, nin) = (wshape[0], wshape[1]);
        let (rows, batched) = match ishape.as_slice() {
            [k] => {
                ensure!(*k == nin, Dimension, "dense input length {k} vs weight columns {nin}");
                (1, false)
            }
            [r, k] => {
                ensure!(*k == nin, Dimension, "dense input width {k} vs weight columns {nin}");
                (*r, true)
            }
            s => return Err(Error::Dimension(format!("dense input must be 1-D or 2-D, got {s:?}"))),
        };
        if let Some(b) = bias {
            ensure!(self.shape(b) == [m], Dimension, "dense bias must be [{m}], got {:?}", self.shape(b));
        }
        let mut out = vec![T::zero(); rows * m];
        T::gemm_nt(rows, m, nin, self.value(input).data(), self.value(weight).data(), &mut out);
        if let Some(b) = bias {
            let bv = self.value(b).data();
            for row in out.chunks_exact_mut(m) {
                row.iter_mut().zip(bv).for_each(|(o, &b)| *o += b);
            }
        }
        let oshape: Vec<usize> = if batched { vec![rows, m] } else { vec![m] };
        let needs = self.needs(input) || self.needs(weight) || bias.is_some_and(|b| self.needs(b));
        Ok(self.push(Tensor::new(&oshape, out)?, Op::Dense { input, weight, bias, rows }, needs))
    }

    fn unary(&mut self, x: Var, f: impl Fn(T) -> T, op: Op<T>) -> Var {
        let xt = self.value(x);
        let data = xt.data().iter().map(|&v| f(v)).collect();
        let t = Tensor::new(xt.shape(), data).expect("same shape");
        let needs = self.needs(x);
        self.push(t, op, needs)
    }

    pub fn leaky_relu(&mut self, x: Var, slope: T) -> Var {
        self.unary(x, |v| if v > T::zero() { v } else { v * slope }, Op::LeakyRelu { x, slope })
    }

    /// `x·sigmoid(x)`.
    pub fn swish(&mut self, x: Var) -> Var {
        self.unary(x, |v| v * sigmoid(v), Op::Swish { x })
    }

    pub fn exp(&mut self, x: Var) -> Var {
        self.unary(x, |v| v.exp(), Op::Exp { x })
    }

    pub fn square(&mut self, x: Var) -> Var {
        self.unary(x, |v| v * v, Op::Square { x })
    }

    pub fn scale(&mut self, x: Var, c: T) -> Var {
        self.unary(x, |v| v * c, Op::Scale { x, c })
    }

    pub fn neg(&mut self, x: Var) -> Var {
        self.scale(x, -T::one())
    }

    pub fn add_scalar(&mut self, x: Var, c: T) -> Var {
        self.unary(x, |v| v + c, Op::AddScalar { x })
    }

    pub fn clamp(&mut self, x: Var, lo: T, hi: T) -> Var {
        self.unary(x, |v| v.max(lo).min(hi), Op::Clamp { x, lo, hi })
    }

    fn binary(&mut self, a: Var, b: Var, f: impl Fn(T, T) -> T, op: Op<T>) -> Result<Var> {
        let (at, bt) = (self.value(a), self.value(b));
        ensure!(at.shape() == bt.shape(), Dimension, "elementwise shapes differ: {:?} vs {:?}", at.shape(), bt.shape());
        let data = at.data().iter().zip(bt.data()).map(|(&x, &y)| f(x, y)).collect();
        let t = Tensor::new(at.shape(), data)?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(t, op, needs))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    /// Elementwise minimum; ties route the gradient to `a`.
    pub fn minimum(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, |x, y| if x <= y { x } else { y }, Op::Minimum(a, b))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().copied().sum();
        let needs = self.needs(x);
        self.push(Tensor::scalar(s), Op::Sum { x }, needs)
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let s: T = t.data().iter().copied().sum();
        let m = s / T::from_usize(t.numel().max(1)).unwrap();
        let needs = self.needs(x);
        self.push(Tensor::scalar(m), Op::Mean { x }, needs)
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let t = self.value(x).clone().reshape(shape)?;
        let needs = self.needs(x);
        Ok(self.push(t, Op::Reshape { x }, needs))
    }

    /// Joins two `[N,p]` and `[N,q]` matrices (or vectors) along the last axis.
    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        ensure!(sa.len() == sb.len() && (sa.len() == 1 || sa.len() == 2), Dimension, "concat needs matching 1-D/2-D shapes");
        let (ra, wa) = as_matrix(&sa);
        let (rb, wb) = as_matrix(&sb);
        ensure!(ra == rb, Dimension, "concat row counts differ: {ra} vs {rb}");
        let (da, db) = (self.value(a).data(), self.value(b).data());
        let mut out = Vec::with_capacity(ra * (wa + wb));
        for r in 0..ra {
            out.extend_from_slice(&da[r * wa..(r + 1) * wa]);
            out.extend_from_slice(&db[r * wb..(r + 1) * wb]);
        }
        let shape: Vec<usize> = if sa.len() == 1 { vec![wa + wb] } else { vec![ra, wa + wb] };
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor::new(&shape, out)?, Op::Concat { a, b, rows: ra, wa, wb }, needs))
    }

    /// Slice `[start, end)` along the leading axis.
    pub fn rows(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let s = self.shape(x).to_vec();
        ensure!(!s.is_empty() && start <= end && end <= s[0], Dimension, "rows {start}..{end} out of range for {:?}", s);
        let inner: usize = s[1..].iter().product();
        let data = self.value(x).data()[start * inner..end * inner].to_vec();
        let mut shape = s.clone();
        shape[0] = end - start;
        let needs = self.needs(x);
        Ok(self.push(Tensor::new(&shape, data)?, Op::Rows { x, start }, needs))
    }

    /// Log-softmax over the last axis.
    pub fn log_softmax(&mut self, x: Var) -> Var {
        let xt = self.value(x);
        let (rows, k) = as_matrix(xt.shape());
        let mut out = xt.data().to_vec();
        for r in 0..rows {
            log_softmax_row(&mut out[r * k..(r + 1) * k]);
        }
        let t = Tensor::new(xt.shape(), out).expect("same shape");
        let needs = self.needs(x);
        self.push(t, Op::LogSoftmax { x, rows, k }, needs)
    }

    /// Picks `x[r, idx[r]]` from an `[N,k]` matrix, giving `[N]`.
    pub fn gather(&mut self, x: Var, idx: &[usize]) -> Result<Var> {
        let s = self.shape(x).to_vec();
        ensure!(s.len() == 2 && s[0] == idx.len(), Dimension, "gather needs [N,k] with N indices, got {:?} and {}", s, idx.len());
        let k = s[1];
        ensure!(idx.iter().all(|&i| i < k), Dimension, "gather index out of range (k = {k})");
        let d = self.value(x).data();
        let out = idx.iter().enumerate().map(|(r, &i)| d[r * k + i]).collect();
        let needs = self.needs(x);
        Ok(self.push(Tensor::new(&[idx.len()], out)?, Op::Gather { x, idx: idx.to_vec(), k }, needs))
    }

    /// Which branch every piecewise op took, in tape order.
    ///
    /// Two evaluations with equal patterns lie on the same smooth piece, so a
    /// finite difference between them is free of kink error.
    pub fn branch_pattern(&self) -> Vec<bool> {
        let mut out = Vec::new();
        for node in &self.nodes {
            match &node.op {
                Op::LeakyRelu { x, .. } => out.extend(self.value(*x).data().iter().map(|&v| v > T::zero())),
                Op::Clamp { x, lo, hi } => out.extend(self.value(*x).data().iter().flat_map(|&v| [v < *lo, v > *hi])),
                Op::Minimum(a, b) => {
                    out.extend(self.value(*a).data().iter().zip(self.value(*b).data()).map(|(x, y)| x <= y))
                }
                _ => {}
            }
        }
        out
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        ensure!(self.record, Contract, "backward on an inference graph");
        let lt = self.value(loss);
        ensure!(lt.numel() == 1, Contract, "backward needs a scalar loss, got shape {:?}", lt.shape());
        let mut grads: Vec<Option<Vec<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![T::one()]);

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let Some(gy) = grads[i].take() else { continue };
            self.backprop_node(node, &gy, &mut grads)?;
            grads[i] = Some(gy);
        }

        let params = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n.op {
                Op::Leaf { param: Some(id) } => Some((id, i)),
                _ => None,
            })
            .collect();
        Ok(Gradients { grads, params, shapes: self.nodes.iter().map(|n| n.value.get().shape().to_vec()).collect() })
    }

    fn backprop_node(&self, node: &Node<'a, T>, gy: &[T], grads: &mut [Option<Vec<T>>]) -> Result<()> {
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [T])| {
            if self.nodes[v.0].needs_grad {
                let n = self.value(v).numel();
                let g = grads[v.0].get_or_insert_with(|| vec![T::zero(); n]);
                f(g);
            }
        };
        match &node.op {
            Op::Leaf { .. } => {}
            Op::Conv2d { input, kernel, bias, geom, cols } => {
                let g = *geom;
                let (ckk, p, np) = (g.ckk(), g.p(), g.n * g.p());
                let mut dout2 = vec![T::zero(); np * g.o];
                for ni in 0..g.n {
                    for oi in 0..g.o {
                        let src = &gy[(ni * g.o + oi) * p..(ni * g.o + oi + 1) * p];
                        for (pos, &v) in src.iter().enumerate() {
                            dout2[(ni * p + pos) * g.o + oi] = v;
                        }
                    }
                }
                acc(*kernel, &mut |dk| T::gemm(g.o, np, ckk, &dout2, true, cols, false, dk, T::one()));
                if let Some(b) = bias {
                    acc(*b, &mut |db| {
                        for row in dout2.chunks_exact(g.o) {
                            db.iter_mut().zip(row).for_each(|(d, &v)| *d += v);
                        }
                    });
                }
                if self.nodes[input.0].needs_grad {
                    let mut dcols = vec![T::zero(); np * ckk];
                    T::gemm(np, g.o, ckk, &dout2, false, self.value(*kernel).data(), false, &mut dcols, T::zero());
                    acc(*input, &mut |dx| {
                        for ni in 0..g.n {
                            let dxn = &mut dx[ni * g.c * g.h * g.w..(ni + 1) * g.c * g.h * g.w];
                            for oy in 0..g.oh {
                                for ox in 0..g.ow {
                                    let patch = &dcols[(ni * p + oy * g.ow + ox) * ckk..(ni * p + oy * g.ow + ox + 1) * ckk];
                                    for ci in 0..g.c {
                                        for ki in 0..g.kh {
                                            let dst = ci * g.h * g.w + (oy * g.stride + ki) * g.w + ox * g.stride;
                                            let src = &patch[(ci * g.kh + ki) * g.kw..(ci * g.kh + ki + 1) * g.kw];
                                            dxn[dst..dst + g.kw].iter_mut().zip(src).for_each(|(d, &v)| *d += v);
                                        }
                                    }
                                }
                            }
                        }
                    });
                }
            }
            Op::Dense { input, weight, bias, rows } => {
                let ws = self.shape(*weight);
                let (m, nin) = (ws[0], ws[1]);
                let x = self.value(*input).data();
                acc(*weight, &mut |dw| T::gemm(m, *rows, nin, gy, true, x, false, dw, T::one()));
                if let Some(b) = bias {
                    acc(*b, &mut |db| {
                        for r in 0..*rows {
                            db.iter_mut().zip(&gy[r * m..(r + 1) * m]).for_each(|(d, &g)| *d += g);
                        }
                    });
                }
                let w = self.value(*weight).data();
                acc(*input, &mut |dx| T::gemm(*rows, m, nin, gy, false, w, false, dx, T::one()));
            }
            Op::LeakyRelu { x, slope } => {
                let xv = self.value(*x).data();
                acc(*x, &mut |dx| {
                    for ((d, &g), &v) in dx.iter_mut().zip(gy).zip(xv) {
                        *d += if v > T::zero() { g } else { g * *slope };
                    }
                });
            }
            Op::Swish { x } => {
                let xv = self.value(*x).data();
                acc(*x, &mut |dx| {
                    for ((d, &g), &v) in dx.iter_mut().zip(gy).zip(xv) {
                        let s = sigmoid(v);
                        *d += g * (s + v * s * (T::one() - s));
                    }
                });
            }
            Op::Add(a, b) => {
                acc(*a, &mut |d| d.iter_mut().zip(gy).for_each(|(d, &g)| *d += g));
                acc(*b, &mut |d| d.iter_mut().zip(gy).for_each(|(d, &g)| *d += g));
            }
            Op::Sub(a, b) => {
                acc(*a, &mut |d| d.iter_mut().zip(gy).for_each(|(d, &g)| *d += g));
                acc(*b, &mut |d| d.iter_mut().zip(gy).for_each(|(d, &g)| *d -= g));
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                acc(*a, &mut |d| d.iter_mut().zip(gy).zip(bv).for_each(|((d, &g), &y)| *d += g * y));
                acc(*b, &mut |d| d.iter_mut().zip(gy).zip(av).for_each(|((d, &g), &x)| *d += g * x));
            }
            Op::Scale { x, c } => acc(*x, &mut |d| d.iter_mut().zip(gy).for_each(|(d, &g)| *d += g * *c)),
            Op::AddScalar { x } | Op::Reshape { x } => acc(*x, &mut |d| d.iter_mut().zip(gy).for_each(|(d, &g)| *d += g)),
            Op::Exp { x } => {
                let yv = node.value.get().data();
                acc(*x, &mut |d| d.iter_mut().zip(gy).zip(yv).for_each(|((d, &g), &y)| *d += g * y));
            }
            Op::Square { x } => {
                let xv = self.value(*x).data();
                let two = T::lit(2.0);
                acc(*x, &mut |d| d.iter_mut().zip(gy).zip(xv).for_each(|((d, &g), &v)| *d += two * v * g));
            }
            Op::Clamp { x, lo, hi } => {
                let xv = self.value(*x).data();
                acc(*x, &mut |d| {
                    for ((d, &g), &v) in d.iter_mut().zip(gy).zip(xv) {
                        if v >= *lo && v <= *hi {
                            *d += g;
                        }
                    }
                });
            }
            Op::Minimum(a, b) => {
                let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                acc(*a, &mut |d| {
                    for (i, dv) in d.iter_mut().enumerate() {
                        if av[i] <= bv[i] {
                            *dv += gy[i];
                        }
                    }
                });
                acc(*b, &mut |d| {
                    for (i, dv) in d.iter_mut().enumerate() {
                        if av[i] > bv[i] {
                            *dv += gy[i];
                        }
                    }
                });
            }
            Op::Sum { x } => acc(*x, &mut |d| d.iter_mut().for_each(|d| *d += gy[0])),
            Op::Mean { x } => {
                let n = T::from_usize(self.value(*x).numel().max(1)).unwrap();
                acc(*x, &mut |d| d.iter_mut().for_each(|d| *d += gy[0] / n));
            }
            Op::Concat { a, b, rows, wa, wb } => {
                let w = wa + wb;
                acc(*a, &mut |d| {
                    for r in 0..*rows {
                        d[r * wa..(r + 1) * wa].iter_mut().zip(&gy[r * w..r * w + wa]).for_each(|(d, &g)| *d += g);
                    }
                });
                acc(*b, &mut |d| {
                    for r in 0..*rows {
                        d[r * wb..(r + 1) * wb].iter_mut().zip(&gy[r * w + wa..(r + 1) * w]).for_each(|(d, &g)| *d += g);
                    }
                });
            }
            Op::Rows { x, start } => {
                let inner: usize = self.shape(*x)[1..].iter().product();
                let off = start * inner;
                acc(*x, &mut |d| d[off..off + gy.len()].iter_mut().zip(gy).for_each(|(d, &g)| *d += g));
            }
            Op::LogSoftmax { x, rows, k } => {
                let yv = node.value.get().data();
                acc(*x, &mut |d| {
                    for r in 0..*rows {
                        let gs: T = gy[r * k..(r + 1) * k].iter().copied().sum();
                        for j in 0..*k {
                            let i = r * k + j;
                            d[i] += gy[i] - yv[i].exp() * gs;
                        }
                    }
                });
            }
            Op::Gather { x, idx, k } => {
                acc(*x, &mut |d| {
                    for (r, &i) in idx.iter().enumerate() {
                        d[r * k + i] += gy[r];
                    }
                });
            }
        }
        Ok(())
    }
}

/// Result of a backward sweep.
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
    params: Vec<(ParamId, usize)>,
    shapes: Vec<Vec<usize>>,
}

impl<T: Scalar> Gradients<T> {
    /// ∂loss/∂v; zeros when `v` is unreachable from the loss.
    pub fn wrt(&self, v: Var) -> Vec<T> {
        self.grads[v.0].clone().unwrap_or_else(|| vec![T::zero(); numel(&self.shapes[v.0])])
    }

    /// Adds every parameter gradient into the owning store's grad buffers.
    pub fn accumulate_into(&self, store: &mut ParamStore<T>) -> Result<()> {
        for &(id, node) in &self.params {
            if let Some(g) = &self.grads[node] {
                store.get_mut(id).accumulate_grad(g)?;
            }
        }
        Ok(())
    }
}

/// In-place log-softmax with the exact arithmetic of [`Graph::log_softmax`].
pub fn log_softmax_row<T: Scalar>(row: &mut [T]) {
    let m = row.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = m + row.iter().map(|&v| (v - m).exp()).sum::<T>().ln();
    row.iter_mut().for_each(|v| *v -= lse);
}
