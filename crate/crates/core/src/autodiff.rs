//! Define-by-run reverse-mode differentiation over dense `f64` tensors.
//!
//! A [`Tape`] records every operation whose inputs need gradients and hands out
//! [`Var`] handles to the recorded values. A fresh tape is built for every
//! forward pass; [`Tape::backward`] consumes it and returns the gradients of all
//! leaves in one reverse sweep.
//!
//! ```
//! use spikeid::autodiff::{Tape, Tensor};
//!
//! let tape = Tape::new();
//! let x = tape.leaf(Tensor::scalar(3.0).unwrap());
//! let y = x.mul(x).unwrap();
//! let grads = tape.backward(y).unwrap();
//! assert_eq!(grads.wrt(x), vec![6.0]);
//! ```

use std::cell::{Cell, RefCell};
use std::fmt;

use crate::error::{Error, Result};

/// Dense row-major array of `f64` values with an optional gradient buffer.
#[derive(Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    requires_grad: bool,
    grad: Option<Vec<f64>>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("requires_grad", &self.requires_grad)
            .field("data", &self.data)
            .finish()
    }
}

impl Tensor {
    /// Builds a tensor, rejecting length mismatches and non-finite entries.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape {
                op: "tensor",
                detail: format!("shape {shape:?} needs {expected} values, got {}", data.len()),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { op: "tensor" });
        }
        Ok(Self { shape, data, requires_grad: false, grad: None })
    }

    pub fn scalar(value: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![value])
    }

    pub fn vector(data: Vec<f64>) -> Result<Self> {
        Self::new(vec![data.len()], data)
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self { shape, data: vec![0.0; n], requires_grad: false, grad: None }
    }

    // Values computed by checked ops are already known to be finite.
    fn from_checked(shape: Vec<usize>, data: Vec<f64>) -> Self {
        Self { shape, data, requires_grad: false, grad: None }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access for optimizers. Callers must keep values finite.
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// First element; the value of a scalar tensor.
    pub fn item(&self) -> f64 {
        self.data[0]
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn with_requires_grad(mut self, flag: bool) -> Self {
        self.requires_grad = flag;
        self
    }

    pub fn set_requires_grad(&mut self, flag: bool) {
        self.requires_grad = flag;
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub fn set_grad(&mut self, grad: Vec<f64>) -> Result<()> {
        if grad.len() != self.data.len() {
            return Err(Error::Shape {
                op: "set_grad",
                detail: format!("gradient of length {} for tensor of length {}", grad.len(), self.data.len()),
            });
        }
        self.grad = Some(grad);
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        self.grad = None;
    }
}

/// Dense `W·x` for a row-major `rows × cols` matrix, skipping zero entries of
/// `x`. Spike vectors are mostly zero, so this is the hot path of the SNN.
pub(crate) fn matvec_into(w: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    let active: Vec<usize> = (0..cols).filter(|&j| x[j] != 0.0).collect();
    for (i, o) in out.iter_mut().enumerate().take(rows) {
        let row = &w[i * cols..(i + 1) * cols];
        let mut acc = 0.0;
        for &j in &active {
            acc += row[j] * x[j];
        }
        *o = acc;
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Constant,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    /// `s·a + c`; only the slope matters for backward.
    Affine(usize, f64),
    /// `a + s·b`
    Axpy(usize, usize, f64),
    MatVec { w: usize, x: usize },
    Tanh(usize),
    Exp(usize),
    Log(usize),
    Square(usize),
    Recip(usize),
    Mean(usize),
    Sum(usize),
    ClampNorm(usize, f64),
    Spike(usize, f64),
    Index(usize, usize),
    Stack(Vec<usize>),
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Operation record for one forward pass.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    consumed: Cell<bool>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var#{}", self.id)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of recorded nodes (leaves, constants and operations).
    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Tensor, op: Op, needs_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let op = if needs_grad { op } else { Op::Constant };
        nodes.push(Node { value, op, needs_grad });
        Var { tape: self, id: nodes.len() - 1 }
    }

    /// Records a trainable leaf.
    pub fn leaf(&self, mut value: Tensor) -> Var<'_> {
        value.grad = None;
        value.requires_grad = true;
        self.push(value, Op::Leaf, true)
    }

    /// Records a value that never receives a gradient.
    pub fn constant(&self, mut value: Tensor) -> Var<'_> {
        value.grad = None;
        value.requires_grad = false;
        self.push(value, Op::Constant, false)
    }

    /// Records `value` as a leaf or a constant according to its `requires_grad` flag.
    pub fn param(&self, value: &Tensor) -> Var<'_> {
        if value.requires_grad {
            self.leaf(value.clone())
        } else {
            self.constant(value.clone())
        }
    }

    pub fn scalar(&self, value: f64) -> Result<Var<'_>> {
        Ok(self.constant(Tensor::scalar(value)?))
    }

    /// Stacks scalar variables into a vector.
    pub fn stack<'t>(&'t self, items: &[Var<'t>]) -> Result<Var<'t>> {
        let nodes = self.nodes.borrow();
        let mut data = Vec::with_capacity(items.len());
        let mut needs = false;
        for v in items {
            self.check(*v)?;
            let node = &nodes[v.id];
            if node.value.len() != 1 {
                return Err(Error::Shape { op: "stack", detail: format!("item shape {:?} is not scalar", node.value.shape) });
            }
            data.push(node.value.data[0]);
            needs |= node.needs_grad;
        }
        drop(nodes);
        let ids = items.iter().map(|v| v.id).collect();
        Ok(self.push(Tensor::from_checked(vec![data.len()], data), Op::Stack(ids), needs))
    }

    fn check(&self, v: Var<'_>) -> Result<()> {
        if std::ptr::eq(self, v.tape) {
            Ok(())
        } else {
            Err(Error::ForeignVar)
        }
    }

    /// Reverse sweep from a scalar `loss`. The tape cannot be reused afterwards.
    pub fn backward(&self, loss: Var<'_>) -> Result<Gradients> {
        self.check(loss)?;
        if self.consumed.replace(true) {
            return Err(Error::TapeConsumed);
        }
        let nodes = self.nodes.borrow();
        let root = &nodes[loss.id];
        if root.value.len() != 1 {
            return Err(Error::NonScalarLoss(root.value.shape.clone()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; nodes.len()];
        if root.needs_grad {
            grads[loss.id] = Some(vec![1.0]);
        }
        for i in (0..=loss.id).rev() {
            let node = &nodes[i];
            if !node.needs_grad {
                continue;
            }
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            backprop(&nodes, &mut grads, node, &g);
        }
        let leaves = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| matches!(n.op, Op::Leaf).then(|| grads[i].take().unwrap_or_else(|| vec![0.0; n.value.len()])))
            .collect();
        Ok(Gradients { grads: leaves })
    }
}

fn accumulate(nodes: &[Node], grads: &mut [Option<Vec<f64>>], id: usize, f: impl FnOnce(&mut [f64])) {
    if !nodes[id].needs_grad {
        return;
    }
    let buf = grads[id].get_or_insert_with(|| vec![0.0; nodes[id].value.len()]);
    f(buf);
}

fn backprop(nodes: &[Node], grads: &mut [Option<Vec<f64>>], node: &Node, g: &[f64]) {
    let out = &node.value.data;
    match &node.op {
        Op::Leaf | Op::Constant => {}
        Op::Add(a, b) => {
            accumulate(nodes, grads, *a, |buf| buf.iter_mut().zip(g).for_each(|(d, gi)| *d += gi));
            accumulate(nodes, grads, *b, |buf| buf.iter_mut().zip(g).for_each(|(d, gi)| *d += gi));
        }
        Op::Sub(a, b) => {
            accumulate(nodes, grads, *a, |buf| buf.iter_mut().zip(g).for_each(|(d, gi)| *d += gi));
            accumulate(nodes, grads, *b, |buf| buf.iter_mut().zip(g).for_each(|(d, gi)| *d -= gi));
        }
        Op::Mul(a, b) => {
            let (va, vb) = (&nodes[*a].value.data, &nodes[*b].value.data);
            accumulate(nodes, grads, *a, |buf| {
                for ((d, gi), y) in buf.iter_mut().zip(g).zip(vb) {
                    *d += gi * y;
                }
            });
            accumulate(nodes, grads, *b, |buf| {
                for ((d, gi), x) in buf.iter_mut().zip(g).zip(va) {
                    *d += gi * x;
                }
            });
        }
        Op::Affine(a, s) => {
            accumulate(nodes, grads, *a, |buf| buf.iter_mut().zip(g).for_each(|(d, gi)| *d += s * gi));
        }
        Op::Axpy(a, b, s) => {
            accumulate(nodes, grads, *a, |buf| buf.iter_mut().zip(g).for_each(|(d, gi)| *d += gi));
            accumulate(nodes, grads, *b, |buf| buf.iter_mut().zip(g).for_each(|(d, gi)| *d += s * gi));
        }
        Op::MatVec { w, x } => {
            let wv = &nodes[*w].value;
            let xv = &nodes[*x].value.data;
            let (rows, cols) = (wv.shape[0], wv.shape[1]);
            accumulate(nodes, grads, *w, |buf| {
                let active: Vec<usize> = (0..cols).filter(|&j| xv[j] != 0.0).collect();
                for (i, gi) in g.iter().enumerate() {
                    if *gi == 0.0 {
                        continue;
                    }
                    let row = &mut buf[i * cols..(i + 1) * cols];
                    for &j in &active {
                        row[j] += gi * xv[j];
                    }
                }
            });
            accumulate(nodes, grads, *x, |buf| {
                for (i, gi) in g.iter().enumerate() {
                    if *gi == 0.0 {
                        continue;
                    }
                    let row = &wv.data[i * cols..(i + 1) * cols];
                    for (d, wij) in buf.iter_mut().zip(row) {
                        *d += gi * wij;
                    }
                }
            });
            let _ = rows;
        }
        Op::Tanh(a) => {
            accumulate(nodes, grads, *a, |buf| {
                for ((d, gi), y) in buf.iter_mut().zip(g).zip(out) {
                    *d += gi * (1.0 - y * y);
                }
            });
        }
        Op::Exp(a) => {
            accumulate(nodes, grads, *a, |buf| {
                for ((d, gi), y) in buf.iter_mut().zip(g).zip(out) {
                    *d += gi * y;
                }
            });
        }
        Op::Log(a) => {
            let va = &nodes[*a].value.data;
            accumulate(nodes, grads, *a, |buf| {
                for ((d, gi), x) in buf.iter_mut().zip(g).zip(va) {
                    *d += gi / x;
                }
            });
        }
        Op::Square(a) => {
            let va = &nodes[*a].value.data;
            accumulate(nodes, grads, *a, |buf| {
                for ((d, gi), x) in buf.iter_mut().zip(g).zip(va) {
                    *d += 2.0 * gi * x;
                }
            });
        }
        Op::Recip(a) => {
            accumulate(nodes, grads, *a, |buf| {
                for ((d, gi), y) in buf.iter_mut().zip(g).zip(out) {
                    *d -= gi * y * y;
                }
            });
        }
        Op::Mean(a) => {
            let n = nodes[*a].value.len() as f64;
            accumulate(nodes, grads, *a, |buf| buf.iter_mut().for_each(|d| *d += g[0] / n));
        }
        Op::Sum(a) => {
            accumulate(nodes, grads, *a, |buf| buf.iter_mut().for_each(|d| *d += g[0]));
        }
        Op::ClampNorm(a, max) => {
            let va = &nodes[*a].value.data;
            let norm = va.iter().map(|x| x * x).sum::<f64>().sqrt();
            accumulate(nodes, grads, *a, |buf| {
                if norm <= *max {
                    buf.iter_mut().zip(g).for_each(|(d, gi)| *d += gi);
                } else {
                    let dot: f64 = va.iter().zip(g).map(|(x, gi)| x * gi).sum();
                    let k = max / norm;
                    for ((d, gi), x) in buf.iter_mut().zip(g).zip(va) {
                        *d += k * (gi - x * dot / (norm * norm));
                    }
                }
            });
        }
        Op::Spike(a, alpha) => {
            let va = &nodes[*a].value.data;
            accumulate(nodes, grads, *a, |buf| {
                for ((d, gi), x) in buf.iter_mut().zip(g).zip(va) {
                    *d += gi * surrogate_factor(*x, *alpha);
                }
            });
        }
        Op::Index(a, i) => {
            accumulate(nodes, grads, *a, |buf| buf[*i] += g[0]);
        }
        Op::Stack(ids) => {
            for (k, id) in ids.iter().enumerate() {
                accumulate(nodes, grads, *id, |buf| buf[0] += g[k]);
            }
        }
    }
}

/// Fast-sigmoid surrogate derivative `1 / (1 + alpha·|x|)²`.
pub fn surrogate_factor(x: f64, alpha: f64) -> f64 {
    let d = 1.0 + alpha * x.abs();
    1.0 / (d * d)
}

/// Heaviside step with a closed threshold: fires when `x >= 0`.
pub fn heaviside(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Slope of the spike surrogate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateConfig {
    pub alpha: f64,
}

impl SurrogateConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("surrogate slope must be positive, got {alpha}")));
        }
        Ok(Self { alpha })
    }
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self { alpha: 25.0 }
    }
}

/// Leaf gradients produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient with respect to a leaf; `None` for constants and intermediates.
    pub fn get(&self, v: Var<'_>) -> Option<&[f64]> {
        self.grads.get(v.id).and_then(|g| g.as_deref())
    }

    /// Gradient with respect to a leaf, zeros when the loss does not depend on it.
    pub fn wrt(&self, v: Var<'_>) -> Vec<f64> {
        match self.get(v) {
            Some(g) => g.to_vec(),
            None => vec![0.0; v.len()],
        }
    }
}

fn finite(op: &'static str, data: &[f64]) -> Result<()> {
    if data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { op })
    }
}

impl<'t> Var<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn to_tensor(&self) -> Tensor {
        self.tape.nodes.borrow()[self.id].value.clone()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.tape.nodes.borrow()[self.id].value.data.clone()
    }

    pub fn item(&self) -> f64 {
        self.tape.nodes.borrow()[self.id].value.data[0]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.nodes.borrow()[self.id].value.shape.clone()
    }

    pub fn len(&self) -> usize {
        self.tape.nodes.borrow()[self.id].value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.nodes.borrow()[self.id].needs_grad
    }

    fn unary(self, op: &'static str, f: impl Fn(f64) -> f64, record: Op) -> Result<Var<'t>> {
        let nodes = self.tape.nodes.borrow();
        let a = &nodes[self.id];
        let data: Vec<f64> = a.value.data.iter().map(|&x| f(x)).collect();
        finite(op, &data)?;
        let (shape, needs) = (a.value.shape.clone(), a.needs_grad);
        drop(nodes);
        Ok(self.tape.push(Tensor::from_checked(shape, data), record, needs))
    }

    fn binary(self, other: Var<'t>, op: &'static str, f: impl Fn(f64, f64) -> f64, record: Op) -> Result<Var<'t>> {
        self.tape.check(other)?;
        let nodes = self.tape.nodes.borrow();
        let (a, b) = (&nodes[self.id], &nodes[other.id]);
        if a.value.shape != b.value.shape {
            return Err(Error::Shape { op, detail: format!("{:?} vs {:?}", a.value.shape, b.value.shape) });
        }
        let data: Vec<f64> = a.value.data.iter().zip(&b.value.data).map(|(&x, &y)| f(x, y)).collect();
        finite(op, &data)?;
        let (shape, needs) = (a.value.shape.clone(), a.needs_grad || b.needs_grad);
        drop(nodes);
        Ok(self.tape.push(Tensor::from_checked(shape, data), record, needs))
    }

    fn reduce(self, op: &'static str, f: impl Fn(&[f64]) -> f64, record: Op) -> Result<Var<'t>> {
        let nodes = self.tape.nodes.borrow();
        let a = &nodes[self.id];
        if a.value.is_empty() {
            return Err(Error::Shape { op, detail: "empty input".into() });
        }
        let v = f(&a.value.data);
        finite(op, &[v])?;
        let needs = a.needs_grad;
        drop(nodes);
        Ok(self.tape.push(Tensor::from_checked(Vec::new(), vec![v]), record, needs))
    }

    pub fn add(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, "add", |x, y| x + y, Op::Add(self.id, other.id))
    }

    pub fn sub(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, "sub", |x, y| x - y, Op::Sub(self.id, other.id))
    }

    /// Elementwise product.
    pub fn mul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, "mul", |x, y| x * y, Op::Mul(self.id, other.id))
    }

    pub fn scale(self, s: f64) -> Result<Var<'t>> {
        self.unary("scale", |x| s * x, Op::Affine(self.id, s))
    }

    /// `s·self + c` elementwise.
    pub fn affine(self, s: f64, c: f64) -> Result<Var<'t>> {
        self.unary("affine", |x| s * x + c, Op::Affine(self.id, s))
    }

    /// `self + s·other`.
    pub fn axpy(self, s: f64, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, "axpy", |x, y| x + s * y, Op::Axpy(self.id, other.id, s))
    }

    /// Matrix-vector product with `self` as a `rows × cols` matrix.
    pub fn matvec(self, x: Var<'t>) -> Result<Var<'t>> {
        self.tape.check(x)?;
        let nodes = self.tape.nodes.borrow();
        let (w, xv) = (&nodes[self.id], &nodes[x.id]);
        if w.value.shape.len() != 2 || xv.value.shape.len() != 1 || w.value.shape[1] != xv.value.shape[0] {
            return Err(Error::Shape { op: "matvec", detail: format!("{:?} x {:?}", w.value.shape, xv.value.shape) });
        }
        let (rows, cols) = (w.value.shape[0], w.value.shape[1]);
        let mut data = vec![0.0; rows];
        matvec_into(&w.value.data, rows, cols, &xv.value.data, &mut data);
        finite("matvec", &data)?;
        let needs = w.needs_grad || xv.needs_grad;
        drop(nodes);
        Ok(self.tape.push(Tensor::from_checked(vec![rows], data), Op::MatVec { w: self.id, x: x.id }, needs))
    }

    pub fn tanh(self) -> Result<Var<'t>> {
        self.unary("tanh", f64::tanh, Op::Tanh(self.id))
    }

    pub fn exp(self) -> Result<Var<'t>> {
        self.unary("exp", f64::exp, Op::Exp(self.id))
    }

    pub fn log(self) -> Result<Var<'t>> {
        self.unary("log", f64::ln, Op::Log(self.id))
    }

    pub fn square(self) -> Result<Var<'t>> {
        self.unary("square", |x| x * x, Op::Square(self.id))
    }

    pub fn recip(self) -> Result<Var<'t>> {
        self.unary("recip", |x| 1.0 / x, Op::Recip(self.id))
    }

    pub fn mean(self) -> Result<Var<'t>> {
        self.reduce("mean", |d| d.iter().sum::<f64>() / d.len() as f64, Op::Mean(self.id))
    }

    pub fn sum(self) -> Result<Var<'t>> {
        self.reduce("sum", |d| d.iter().sum(), Op::Sum(self.id))
    }

    /// Rescales `self` so its Euclidean norm does not exceed `max_norm`.
    pub fn clamp_norm(self, max_norm: f64) -> Result<Var<'t>> {
        if !(max_norm > 0.0) {
            return Err(Error::invalid(format!("clamp_norm limit must be positive, got {max_norm}")));
        }
        let norm = {
            let nodes = self.tape.nodes.borrow();
            nodes[self.id].value.data.iter().map(|x| x * x).sum::<f64>().sqrt()
        };
        let k = if norm > max_norm { max_norm / norm } else { 1.0 };
        self.unary("clamp_norm", |x| x * k, Op::ClampNorm(self.id, max_norm))
    }

    /// Heaviside step forward, fast-sigmoid surrogate backward.
    pub fn spike(self, cfg: SurrogateConfig) -> Result<Var<'t>> {
        self.unary("spike", heaviside, Op::Spike(self.id, cfg.alpha))
    }

    /// Copy of the value with the gradient path cut.
    pub fn detach(self) -> Var<'t> {
        let value = self.to_tensor();
        self.tape.constant(value)
    }

    /// Scalar element `i` of a vector.
    pub fn index(self, i: usize) -> Result<Var<'t>> {
        let nodes = self.tape.nodes.borrow();
        let a = &nodes[self.id];
        let v = *a.value.data.get(i).ok_or_else(|| Error::Shape {
            op: "index",
            detail: format!("index {i} out of range for length {}", a.value.len()),
        })?;
        let needs = a.needs_grad;
        drop(nodes);
        Ok(self.tape.push(Tensor::from_checked(Vec::new(), vec![v]), Op::Index(self.id, i), needs))
    }
}
