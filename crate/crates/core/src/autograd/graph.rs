//! Define-by-run computation graph with reverse-mode differentiation.
//!
//! Values are computed eagerly as nodes are appended, so node indices are
//! already a topological order and the backward pass is a single reverse
//! sweep.

use super::{AutogradError, GrlConfig, Tensor};

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Constant,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MulCol(Var, Var),
    DivCol(Var, Var),
    MatMul(Var, Var),
    Transpose(Var),
    Relu(Var),
    Exp(Var),
    Ln(Var),
    Cos(Var),
    Acos(Var),
    Clamp(Var, f64, f64),
    Scale(Var, f64),
    AddScalar(Var),
    Softmax(Var),
    LogSoftmax(Var),
    Concat(Var, Var),
    RowNorm(Var),
    Sum(Var),
    Mean(Var),
    GatherRows(Var, Vec<usize>),
    Pick(Var, Vec<usize>),
    Grl(Var, f64),
}

impl Op {
    fn kind(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Constant => "constant",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::AddRow(..) => "add_row",
            Op::MulCol(..) => "mul_col",
            Op::DivCol(..) => "div_col",
            Op::MatMul(..) => "matmul",
            Op::Transpose(..) => "transpose",
            Op::Relu(..) => "relu",
            Op::Exp(..) => "exp",
            Op::Ln(..) => "ln",
            Op::Cos(..) => "cos",
            Op::Acos(..) => "acos",
            Op::Clamp(..) => "clamp",
            Op::Scale(..) => "scale",
            Op::AddScalar(..) => "add_scalar",
            Op::Softmax(..) => "softmax",
            Op::LogSoftmax(..) => "log_softmax",
            Op::Concat(..) => "concat",
            Op::RowNorm(..) => "row_norm",
            Op::Sum(..) => "sum",
            Op::Mean(..) => "mean",
            Op::GatherRows(..) => "gather_rows",
            Op::Pick(..) => "pick",
            Op::Grl(..) => "grl",
        }
    }
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
}

/// A single-threaded tape of operations. Rebuild one per training step.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Adjoints of every leaf after a backward pass.
#[derive(Debug, Clone)]
pub struct Gradients {
    leaves: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of the loss with respect to `leaf`. `None` for non-leaf nodes
    /// and constants.
    pub fn get(&self, leaf: Var) -> Option<&Tensor> {
        self.leaves.get(leaf.0).and_then(Option::as_ref)
    }
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

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v).item()
    }

    pub fn op_kind(&self, v: Var) -> &'static str {
        self.nodes[v.0].op.kind()
    }

    /// A differentiable input.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(Op::Leaf, value)
    }

    /// An input that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(Op::Constant, value)
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) {
        let (sa, sb) = (self.value(a).dims2(), self.value(b).dims2());
        assert_eq!(sa, sb, "{what}: shape mismatch {sa:?} vs {sb:?}");
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.same_shape(a, b, "add");
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.push(Op::Add(a, b), v)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.same_shape(a, b, "sub");
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        self.push(Op::Sub(a, b), v)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.same_shape(a, b, "mul");
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        self.push(Op::Mul(a, b), v)
    }

    /// `x[i, j] + bias[0, j]`.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Var {
        let (n, k) = self.value(x).dims2();
        assert_eq!(
            self.value(bias).dims2(),
            (1, k),
            "add_row: bias must be 1x{k}"
        );
        let b = self.value(bias).data().to_vec();
        let mut out = self.value(x).clone();
        for i in 0..n {
            for (o, bv) in out.data_mut()[i * k..(i + 1) * k].iter_mut().zip(&b) {
                *o += *bv;
            }
        }
        self.push(Op::AddRow(x, bias), out)
    }

    /// `x[i, j] * c[i, 0]`.
    pub fn mul_col(&mut self, x: Var, c: Var) -> Var {
        let (n, k) = self.value(x).dims2();
        assert_eq!(
            self.value(c).dims2(),
            (n, 1),
            "mul_col: column must be {n}x1"
        );
        let cv = self.value(c).data().to_vec();
        let mut out = self.value(x).clone();
        for i in 0..n {
            for o in &mut out.data_mut()[i * k..(i + 1) * k] {
                *o *= cv[i];
            }
        }
        self.push(Op::MulCol(x, c), out)
    }

    /// `x[i, j] / c[i, 0]`.
    pub fn div_col(&mut self, x: Var, c: Var) -> Var {
        let (n, k) = self.value(x).dims2();
        assert_eq!(
            self.value(c).dims2(),
            (n, 1),
            "div_col: column must be {n}x1"
        );
        let cv = self.value(c).data().to_vec();
        let mut out = self.value(x).clone();
        for i in 0..n {
            for o in &mut out.data_mut()[i * k..(i + 1) * k] {
                *o /= cv[i];
            }
        }
        self.push(Op::DivCol(x, c), out)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(Op::MatMul(a, b), v)
    }

    pub fn transpose(&mut self, x: Var) -> Var {
        let v = self.value(x).transpose();
        self.push(Op::Transpose(x), v)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let v = self.value(x).map(|t| if t > 0.0 { t } else { 0.0 });
        self.push(Op::Relu(x), v)
    }

    pub fn exp(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::exp);
        self.push(Op::Exp(x), v)
    }

    pub fn ln(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::ln);
        self.push(Op::Ln(x), v)
    }

    pub fn cos(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::cos);
        self.push(Op::Cos(x), v)
    }

    pub fn acos(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::acos);
        self.push(Op::Acos(x), v)
    }

    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        assert!(lo <= hi, "clamp: empty interval [{lo}, {hi}]");
        let v = self.value(x).map(|t| t.clamp(lo, hi));
        self.push(Op::Clamp(x, lo, hi), v)
    }

    pub fn scale(&mut self, x: Var, k: f64) -> Var {
        let v = self.value(x).map(|t| k * t);
        self.push(Op::Scale(x, k), v)
    }

    pub fn add_scalar(&mut self, x: Var, k: f64) -> Var {
        let v = self.value(x).map(|t| t + k);
        self.push(Op::AddScalar(x), v)
    }

    /// Row-wise softmax.
    pub fn softmax(&mut self, x: Var) -> Var {
        let src = self.value(x);
        let (n, k) = src.dims2();
        let mut out = src.clone();
        for i in 0..n {
            let row = &mut out.data_mut()[i * k..(i + 1) * k];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                total += *v;
            }
            for v in row.iter_mut() {
                *v /= total;
            }
        }
        self.push(Op::Softmax(x), out)
    }

    /// Row-wise log-softmax.
    pub fn log_softmax(&mut self, x: Var) -> Var {
        let src = self.value(x);
        let (n, k) = src.dims2();
        let mut out = src.clone();
        for i in 0..n {
            let row = &mut out.data_mut()[i * k..(i + 1) * k];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            for v in row.iter_mut() {
                *v -= lse;
            }
        }
        self.push(Op::LogSoftmax(x), out)
    }

    /// Column-wise concatenation `[a | b]`.
    pub fn concat(&mut self, a: Var, b: Var) -> Var {
        let (na, ka) = self.value(a).dims2();
        let (nb, kb) = self.value(b).dims2();
        assert_eq!(na, nb, "concat: row counts {na} vs {nb}");
        let mut data = Vec::with_capacity(na * (ka + kb));
        for i in 0..na {
            data.extend_from_slice(self.value(a).row_slice(i));
            data.extend_from_slice(self.value(b).row_slice(i));
        }
        self.push(Op::Concat(a, b), Tensor::matrix(na, ka + kb, data))
    }

    /// Euclidean norm of each row, as an `n x 1` column.
    pub fn row_norm(&mut self, x: Var) -> Var {
        let src = self.value(x);
        let n = src.rows();
        let data = (0..n)
            .map(|i| src.row_slice(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        self.push(Op::RowNorm(x), Tensor::matrix(n, 1, data))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.push(Op::Sum(x), Tensor::scalar(s))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let src = self.value(x);
        assert!(src.numel() > 0, "mean of an empty tensor");
        let s = src.data().iter().sum::<f64>() / src.numel() as f64;
        self.push(Op::Mean(x), Tensor::scalar(s))
    }

    /// Selects rows by index; indices may repeat.
    pub fn gather_rows(&mut self, x: Var, idx: &[usize]) -> Var {
        let src = self.value(x);
        let (n, k) = src.dims2();
        let mut data = Vec::with_capacity(idx.len() * k);
        for &i in idx {
            assert!(i < n, "gather_rows: row {i} out of {n}");
            data.extend_from_slice(src.row_slice(i));
        }
        let out = Tensor::matrix(idx.len(), k, data);
        self.push(Op::GatherRows(x, idx.to_vec()), out)
    }

    /// Picks `x[i, cols[i]]` for every row, as an `n x 1` column.
    pub fn pick(&mut self, x: Var, cols: &[usize]) -> Var {
        let src = self.value(x);
        let (n, k) = src.dims2();
        assert_eq!(cols.len(), n, "pick: need one column per row");
        let data = cols
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                assert!(c < k, "pick: column {c} out of {k}");
                src.get(i, c)
            })
            .collect();
        self.push(Op::Pick(x, cols.to_vec()), Tensor::matrix(n, 1, data))
    }

    /// Gradient reversal: identity forward, adjoint scaled by `-lambda` backward.
    pub fn grl(&mut self, x: Var, cfg: GrlConfig) -> Var {
        let v = self.value(x).clone();
        self.push(Op::Grl(x, cfg.lambda()), v)
    }

    fn first_non_finite(&self, upto: usize) -> Option<usize> {
        (0..=upto).find(|&i| !self.nodes[i].value.is_finite())
    }

    /// Runs the reverse sweep from a scalar `root`.
    pub fn backward(&self, root: Var) -> Result<Gradients, AutogradError> {
        let root_value = self.value(root);
        if root_value.numel() != 1 {
            return Err(AutogradError::NonScalarRoot(root_value.shape().to_vec()));
        }
        if let Some(i) = self.first_non_finite(root.0) {
            return Err(AutogradError::NonFinite {
                node: i,
                op: self.nodes[i].op.kind(),
                pass: "forward",
            });
        }

        let mut adj: Vec<Option<Tensor>> = vec![None; root.0 + 1];
        adj[root.0] = Some(Tensor::full(1, 1, 1.0));
        let mut leaves: Vec<Option<Tensor>> = vec![None; self.nodes.len()];

        for i in (0..=root.0).rev() {
            let Some(g) = adj[i].take() else {
                if matches!(self.nodes[i].op, Op::Leaf) {
                    let (r, c) = self.nodes[i].value.dims2();
                    leaves[i] = Some(Tensor::zeros(r, c));
                }
                continue;
            };
            if !g.is_finite() {
                return Err(AutogradError::NonFinite {
                    node: i,
                    op: self.nodes[i].op.kind(),
                    pass: "backward",
                });
            }
            let node = &self.nodes[i];
            let out = &node.value;
            match &node.op {
                Op::Leaf => leaves[i] = Some(g),
                Op::Constant => {}
                Op::Add(a, b) => {
                    accumulate(&mut adj, *a, &g);
                    accumulate(&mut adj, *b, &g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut adj, *a, &g);
                    accumulate_owned(&mut adj, *b, g.map(|v| -v));
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    accumulate_owned(&mut adj, *a, g.zip_map(vb, |gv, y| gv * y));
                    accumulate_owned(&mut adj, *b, g.zip_map(va, |gv, x| gv * x));
                }
                Op::AddRow(x, bias) => {
                    let (n, k) = g.dims2();
                    let mut gb = vec![0.0; k];
                    for r in 0..n {
                        for (acc, v) in gb.iter_mut().zip(g.row_slice(r)) {
                            *acc += *v;
                        }
                    }
                    accumulate(&mut adj, *x, &g);
                    accumulate_owned(&mut adj, *bias, Tensor::matrix(1, k, gb));
                }
                Op::MulCol(x, c) => {
                    let (vx, vc) = (self.value(*x), self.value(*c));
                    let (n, k) = vx.dims2();
                    let mut gx = g.clone();
                    let mut gc = vec![0.0; n];
                    for r in 0..n {
                        let cr = vc.data()[r];
                        for j in 0..k {
                            gx.data_mut()[r * k + j] *= cr;
                            gc[r] += g.data()[r * k + j] * vx.data()[r * k + j];
                        }
                    }
                    accumulate_owned(&mut adj, *x, gx);
                    accumulate_owned(&mut adj, *c, Tensor::matrix(n, 1, gc));
                }
                Op::DivCol(x, c) => {
                    let (vx, vc) = (self.value(*x), self.value(*c));
                    let (n, k) = vx.dims2();
                    let mut gx = g.clone();
                    let mut gc = vec![0.0; n];
                    for r in 0..n {
                        let cr = vc.data()[r];
                        for j in 0..k {
                            gx.data_mut()[r * k + j] /= cr;
                            gc[r] -= g.data()[r * k + j] * vx.data()[r * k + j] / (cr * cr);
                        }
                    }
                    accumulate_owned(&mut adj, *x, gx);
                    accumulate_owned(&mut adj, *c, Tensor::matrix(n, 1, gc));
                }
                Op::MatMul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    accumulate_owned(&mut adj, *a, g.matmul(&vb.transpose()));
                    accumulate_owned(&mut adj, *b, va.transpose().matmul(&g));
                }
                Op::Transpose(x) => accumulate_owned(&mut adj, *x, g.transpose()),
                Op::Relu(x) => {
                    let vx = self.value(*x);
                    accumulate_owned(
                        &mut adj,
                        *x,
                        g.zip_map(vx, |gv, t| if t > 0.0 { gv } else { 0.0 }),
                    );
                }
                Op::Exp(x) => accumulate_owned(&mut adj, *x, g.zip_map(out, |gv, y| gv * y)),
                Op::Ln(x) => {
                    let vx = self.value(*x);
                    accumulate_owned(&mut adj, *x, g.zip_map(vx, |gv, t| gv / t));
                }
                Op::Cos(x) => {
                    let vx = self.value(*x);
                    accumulate_owned(&mut adj, *x, g.zip_map(vx, |gv, t| -gv * t.sin()));
                }
                Op::Acos(x) => {
                    let vx = self.value(*x);
                    accumulate_owned(
                        &mut adj,
                        *x,
                        g.zip_map(vx, |gv, t| -gv / (1.0 - t * t).sqrt()),
                    );
                }
                Op::Clamp(x, lo, hi) => {
                    let vx = self.value(*x);
                    let (lo, hi) = (*lo, *hi);
                    accumulate_owned(
                        &mut adj,
                        *x,
                        g.zip_map(vx, |gv, t| if t >= lo && t <= hi { gv } else { 0.0 }),
                    );
                }
                Op::Scale(x, k) => {
                    let k = *k;
                    accumulate_owned(&mut adj, *x, g.map(|gv| k * gv));
                }
                Op::AddScalar(x) => accumulate(&mut adj, *x, &g),
                Op::Softmax(x) => {
                    let (n, k) = out.dims2();
                    let mut gx = vec![0.0; n * k];
                    for r in 0..n {
                        let y = out.row_slice(r);
                        let gr = g.row_slice(r);
                        let dot: f64 = y.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for j in 0..k {
                            gx[r * k + j] = y[j] * (gr[j] - dot);
                        }
                    }
                    accumulate_owned(&mut adj, *x, Tensor::matrix(n, k, gx));
                }
                Op::LogSoftmax(x) => {
                    let (n, k) = out.dims2();
                    let mut gx = vec![0.0; n * k];
                    for r in 0..n {
                        let y = out.row_slice(r);
                        let gr = g.row_slice(r);
                        let total: f64 = gr.iter().sum();
                        for j in 0..k {
                            gx[r * k + j] = gr[j] - y[j].exp() * total;
                        }
                    }
                    accumulate_owned(&mut adj, *x, Tensor::matrix(n, k, gx));
                }
                Op::Concat(a, b) => {
                    let (n, ka) = self.value(*a).dims2();
                    let kb = self.value(*b).cols();
                    let mut ga = Vec::with_capacity(n * ka);
                    let mut gb = Vec::with_capacity(n * kb);
                    for r in 0..n {
                        let row = g.row_slice(r);
                        ga.extend_from_slice(&row[..ka]);
                        gb.extend_from_slice(&row[ka..]);
                    }
                    accumulate_owned(&mut adj, *a, Tensor::matrix(n, ka, ga));
                    accumulate_owned(&mut adj, *b, Tensor::matrix(n, kb, gb));
                }
                Op::RowNorm(x) => {
                    let vx = self.value(*x);
                    let (n, k) = vx.dims2();
                    let mut gx = vec![0.0; n * k];
                    for r in 0..n {
                        let norm = out.data()[r];
                        // subgradient 0 at the origin
                        if norm > 0.0 {
                            let scale = g.data()[r] / norm;
                            for j in 0..k {
                                gx[r * k + j] = scale * vx.data()[r * k + j];
                            }
                        }
                    }
                    accumulate_owned(&mut adj, *x, Tensor::matrix(n, k, gx));
                }
                Op::Sum(x) => {
                    let (r, c) = self.value(*x).dims2();
                    accumulate_owned(&mut adj, *x, Tensor::full(r, c, g.item()));
                }
                Op::Mean(x) => {
                    let (r, c) = self.value(*x).dims2();
                    let share = g.item() / (r * c) as f64;
                    accumulate_owned(&mut adj, *x, Tensor::full(r, c, share));
                }
                Op::GatherRows(x, idx) => {
                    let (n, k) = self.value(*x).dims2();
                    let mut gx = vec![0.0; n * k];
                    for (row, &src) in idx.iter().enumerate() {
                        for (acc, v) in gx[src * k..(src + 1) * k].iter_mut().zip(g.row_slice(row))
                        {
                            *acc += *v;
                        }
                    }
                    accumulate_owned(&mut adj, *x, Tensor::matrix(n, k, gx));
                }
                Op::Pick(x, cols) => {
                    let (n, k) = self.value(*x).dims2();
                    let mut gx = vec![0.0; n * k];
                    for (r, &c) in cols.iter().enumerate() {
                        gx[r * k + c] = g.data()[r];
                    }
                    accumulate_owned(&mut adj, *x, Tensor::matrix(n, k, gx));
                }
                Op::Grl(x, lambda) => {
                    let scale = -*lambda;
                    accumulate_owned(&mut adj, *x, g.map(|gv| scale * gv));
                }
            }
        }
        for (i, node) in self.nodes.iter().enumerate().skip(root.0 + 1) {
            if matches!(node.op, Op::Leaf) {
                let (r, c) = node.value.dims2();
                leaves[i] = Some(Tensor::zeros(r, c));
            }
        }
        Ok(Gradients { leaves })
    }

    /// Loss value and leaf gradients for a scalar `root`.
    pub fn forward_backward(&self, root: Var) -> Result<(f64, Gradients), AutogradError> {
        let grads = self.backward(root)?;
        Ok((self.scalar(root), grads))
    }
}

fn accumulate(adj: &mut [Option<Tensor>], v: Var, g: &Tensor) {
    match &mut adj[v.0] {
        Some(existing) => existing.add_assign(g),
        slot @ None => *slot = Some(g.clone()),
    }
}

fn accumulate_owned(adj: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut adj[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}
