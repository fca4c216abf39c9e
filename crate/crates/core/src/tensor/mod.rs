//! Dense row-major tensors with reverse-mode automatic differentiation.
//!
//! [`Tensor`] is an immutable n-dimensional value (channels-last layout for
//! images). Differentiable operations live on [`Tape`]: a recording tape
//! tracks every op touching a grad-enabled tensor, and [`Tape::backward`]
//! replays the records in reverse to accumulate gradients into parameter
//! leaves. `Tape::inference()` runs the same ops without recording.
//!
//! Parameters are the only tensors with a persistent gradient buffer; their
//! values may be updated in place through [`Tensor::update_data`] (used by
//! the optimizer and checkpoint loading), which is the one sanctioned
//! mutation besides the grad buffer itself.

mod elementwise;
mod linalg;
mod nn;
mod scalar;
mod shape_ops;
mod tape;

pub use scalar::Scalar;
pub use tape::Tape;

use crate::rng::Rng;
use std::cell::{Ref, RefCell};
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

static NEXT_TENSOR_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_TENSOR_ID.fetch_add(1, Ordering::Relaxed)
}

/// Dense row-major tensor. Clones share the underlying buffer.
#[derive(Clone)]
pub struct Tensor<T: Scalar> {
    id: u64,
    shape: Vec<usize>,
    data: Rc<RefCell<Vec<T>>>,
    grad_enabled: bool,
    grad: Option<Rc<RefCell<Vec<T>>>>,
}

impl<T: Scalar> Tensor<T> {
    /// Plain value tensor; gradients do not flow through it.
    pub fn new(data: Vec<T>, shape: &[usize]) -> Self {
        let numel: usize = shape.iter().product();
        assert_eq!(
            data.len(),
            numel,
            "tensor data length {} does not match shape {:?}",
            data.len(),
            shape
        );
        Tensor {
            id: fresh_id(),
            shape: shape.to_vec(),
            data: Rc::new(RefCell::new(data)),
            grad_enabled: false,
            grad: None,
        }
    }

    /// Trainable leaf: grad-enabled with a persistent gradient buffer.
    pub fn param(data: Vec<T>, shape: &[usize]) -> Self {
        let mut t = Tensor::new(data, shape);
        let n = t.numel();
        t.grad_enabled = true;
        t.grad = Some(Rc::new(RefCell::new(vec![T::ZERO; n])));
        t
    }

    pub(crate) fn internal(data: Vec<T>, shape: Vec<usize>, grad_enabled: bool) -> Self {
        let numel: usize = shape.iter().product();
        debug_assert_eq!(data.len(), numel);
        Tensor {
            id: fresh_id(),
            shape,
            data: Rc::new(RefCell::new(data)),
            grad_enabled,
            grad: None,
        }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Tensor::new(vec![T::ZERO; shape.iter().product()], shape)
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        Tensor::new(vec![value; shape.iter().product()], shape)
    }

    pub fn scalar(value: T) -> Self {
        Tensor::new(vec![value], &[])
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(usize) -> T) -> Self {
        let n = shape.iter().product();
        Tensor::new((0..n).map(&mut f).collect(), shape)
    }

    /// Values drawn iid from N(0, std^2).
    pub fn randn(shape: &[usize], std: f64, rng: &mut Rng) -> Self {
        Tensor::from_fn(shape, |_| T::from_f64(rng.normal() * std))
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn grad_enabled(&self) -> bool {
        self.grad_enabled
    }

    pub fn is_leaf_param(&self) -> bool {
        self.grad.is_some()
    }

    /// Borrow of the underlying buffer.
    pub fn data(&self) -> Ref<'_, Vec<T>> {
        self.data.borrow()
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.data.borrow().clone()
    }

    /// Sole element of a scalar tensor.
    pub fn item(&self) -> T {
        assert_eq!(self.numel(), 1, "item() on tensor of shape {:?}", self.shape);
        self.data.borrow()[0]
    }

    pub fn all_finite(&self) -> bool {
        self.data.borrow().iter().all(|v| v.is_finite())
    }

    /// Accumulated gradient; zeros when nothing has reached this leaf.
    pub fn grad(&self) -> Vec<T> {
        match &self.grad {
            Some(g) => g.borrow().clone(),
            None => vec![T::ZERO; self.numel()],
        }
    }

    pub fn zero_grad(&self) {
        if let Some(g) = &self.grad {
            for v in g.borrow_mut().iter_mut() {
                *v = T::ZERO;
            }
        }
    }

    pub(crate) fn accumulate_grad(&self, contribution: &[T]) {
        let slot = self
            .grad
            .as_ref()
            .expect("accumulate_grad on tensor without grad buffer");
        let mut g = slot.borrow_mut();
        debug_assert_eq!(g.len(), contribution.len());
        for (dst, src) in g.iter_mut().zip(contribution) {
            *dst += *src;
        }
    }

    /// In-place parameter update (optimizer step, checkpoint load).
    /// Must not be called while a recording tape holds live records.
    pub fn update_data(&self, f: impl FnOnce(&mut [T])) {
        f(&mut self.data.borrow_mut());
    }

    pub(crate) fn data_rc(&self) -> Rc<RefCell<Vec<T>>> {
        Rc::clone(&self.data)
    }

    /// Cast element type, e.g. to run a checkpointed f32 model at f64.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        let data = self
            .data
            .borrow()
            .iter()
            .map(|v| U::from_f64(v.to_f64()))
            .collect();
        if self.is_leaf_param() {
            Tensor::param(data, &self.shape)
        } else {
            Tensor::new(data, &self.shape)
        }
    }
}

impl<T: Scalar> std::fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let data = self.data.borrow();
        if data.len() <= 8 {
            write!(f, "Tensor{:?} {:?}", self.shape, &data[..])
        } else {
            write!(f, "Tensor{:?} [{:?}, {:?}, ...]", self.shape, data[0], data[1])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_data_agreement_enforced() {
        let t = Tensor::<f64>::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[2, 3]);
        assert_eq!(t.numel(), 6);
        assert_eq!(t.shape(), &[2, 3]);
    }

    #[test]
    #[should_panic(expected = "does not match shape")]
    fn mismatched_shape_panics() {
        let _ = Tensor::<f64>::new(vec![1.0, 2.0], &[3]);
    }

    #[test]
    fn param_grad_starts_zero() {
        let p = Tensor::<f64>::param(vec![1.0, 2.0], &[2]);
        assert_eq!(p.grad(), vec![0.0, 0.0]);
        assert!(p.grad_enabled());
    }

    #[test]
    fn scalar_item() {
        assert_eq!(Tensor::<f32>::scalar(2.5).item(), 2.5);
    }

    #[test]
    fn clones_share_storage() {
        let p = Tensor::<f64>::param(vec![1.0], &[1]);
        let q = p.clone();
        p.update_data(|d| d[0] = 7.0);
        assert_eq!(q.item(), 7.0);
    }
}
