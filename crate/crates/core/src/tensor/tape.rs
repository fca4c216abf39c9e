//! Gradient tape: a Wengert list of recorded operations.

use super::{Scalar, Tensor};
use crate::error::{Error, Result};
use std::cell::RefCell;
use std::collections::HashMap;

/// Rule mapping the output gradient to one gradient per parent.
type BackwardFn<T> = Box<dyn Fn(&[T]) -> Vec<Vec<T>>>;

/// One recorded operation: the output it produced, the inputs it consumed,
/// and its backward rule.
struct Record<T: Scalar> {
    out_id: u64,
    parents: Vec<Tensor<T>>,
    backward: BackwardFn<T>,
}

/// Recording context for one forward/backward cycle.
///
/// Single-owner: a tape must not be shared across threads (and cannot be,
/// since tensors are `!Send`). Recording order is a topological order of
/// the computation, so the backward pass is a single reverse sweep.
pub struct Tape<T: Scalar> {
    records: RefCell<Vec<Record<T>>>,
    recording: bool,
}

impl<T: Scalar> Tape<T> {
    /// A tape that records every op touching a grad-enabled tensor.
    pub fn new() -> Self {
        Tape {
            records: RefCell::new(Vec::new()),
            recording: true,
        }
    }

    /// A tape that records nothing; forward values only.
    pub fn inference() -> Self {
        Tape {
            records: RefCell::new(Vec::new()),
            recording: false,
        }
    }

    pub fn is_recording(&self) -> bool {
        self.recording
    }

    /// Number of live records (drained to zero by `backward`).
    pub fn len(&self) -> usize {
        self.records.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.borrow().is_empty()
    }

    /// Wrap op output: mark it grad-enabled and record the backward rule
    /// when this tape is recording and any parent participates.
    ///
    /// `backward` receives the output gradient and must return one gradient
    /// buffer per parent, in parent order, each matching the parent's size.
    pub(crate) fn record(
        &self,
        out: &mut Tensor<T>,
        parents: &[&Tensor<T>],
        backward: impl Fn(&[T]) -> Vec<Vec<T>> + 'static,
    ) {
        if !self.recording || !parents.iter().any(|p| p.grad_enabled()) {
            return;
        }
        out.grad_enabled = true;
        self.records.borrow_mut().push(Record {
            out_id: out.id(),
            parents: parents.iter().map(|p| (*p).clone()).collect(),
            backward: Box::new(backward),
        });
    }

    /// Reverse sweep from a scalar loss.
    ///
    /// Accumulates gradients into every grad-enabled leaf reachable from
    /// `loss` (each contribution exactly once) and clears the tape.
    /// Unreachable leaves keep their zero gradient.
    pub fn backward(&self, loss: &Tensor<T>) -> Result<()> {
        if loss.numel() != 1 {
            return Err(Error::Usage(format!(
                "backward requires a scalar loss, got shape {:?}",
                loss.shape()
            )));
        }
        let records: Vec<Record<T>> = self.records.borrow_mut().drain(..).collect();
        if !records.iter().any(|r| r.out_id == loss.id()) {
            return Err(Error::Usage(
                "loss was not produced on this tape (missing record)".into(),
            ));
        }

        // Transient gradients for interior nodes, keyed by tensor id.
        let mut flowing: HashMap<u64, Vec<T>> = HashMap::new();
        flowing.insert(loss.id(), vec![T::ONE]);

        for record in records.into_iter().rev() {
            let Some(grad_out) = flowing.remove(&record.out_id) else {
                continue; // not on any path to the loss
            };
            let parent_grads = (record.backward)(&grad_out);
            debug_assert_eq!(parent_grads.len(), record.parents.len());
            for (parent, grad) in record.parents.iter().zip(parent_grads) {
                if !parent.grad_enabled() {
                    continue;
                }
                debug_assert_eq!(grad.len(), parent.numel());
                if parent.is_leaf_param() {
                    parent.accumulate_grad(&grad);
                } else {
                    match flowing.entry(parent.id()) {
                        std::collections::hash_map::Entry::Occupied(mut e) => {
                            for (dst, src) in e.get_mut().iter_mut().zip(&grad) {
                                *dst += *src;
                            }
                        }
                        std::collections::hash_map::Entry::Vacant(e) => {
                            e.insert(grad);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Tape::new()
    }
}
