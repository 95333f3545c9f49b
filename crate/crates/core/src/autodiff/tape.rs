use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Maps the gradient of a node's output to gradients of its parents, in
/// parent order. `None` marks a parent that receives no gradient.
pub type BackwardFn = Box<dyn Fn(&Tensor) -> Vec<Option<Tensor>>>;

struct Node {
    value: Rc<Tensor>,
    requires_grad: bool,
    leaf: bool,
    parents: Vec<usize>,
    backward: Option<BackwardFn>,
}

/// Reverse-mode gradient tape.
///
/// Nodes are appended in evaluation order, so node ids are a topological
/// order and the backward pass simply walks them in reverse. A tape is
/// single-threaded; independent tapes can live on different threads.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    leaf_grads: RefCell<HashMap<usize, Tensor>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    pub(crate) tape: &'t Tape,
    pub(crate) id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = self.value();
        f.debug_struct("Var")
            .field("id", &self.id)
            .field("shape", &v.shape())
            .finish()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Register a trainable leaf.
    pub fn leaf(&self, value: Tensor) -> Var<'_> {
        self.push_node(Rc::new(value), true, true, Vec::new(), None)
    }

    /// Register a value that never receives gradients.
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.push_node(Rc::new(value), false, false, Vec::new(), None)
    }

    /// Record an operation computed outside the tape. `backward` receives the
    /// gradient of the output and returns one entry per parent.
    pub fn custom<'t>(
        &'t self,
        name: &str,
        parents: &[Var<'t>],
        value: Tensor,
        backward: impl Fn(&Tensor) -> Vec<Option<Tensor>> + 'static,
    ) -> Result<Var<'t>> {
        self.record(name, parents, value, Box::new(backward))
    }

    pub(crate) fn record<'t>(
        &'t self,
        name: &str,
        parents: &[Var<'t>],
        value: Tensor,
        backward: BackwardFn,
    ) -> Result<Var<'t>> {
        if !value.is_finite() {
            return Err(Error::NonFinite(name.to_string()));
        }
        let ids: Vec<usize> = parents.iter().map(|p| p.id).collect();
        let requires_grad = {
            let nodes = self.nodes.borrow();
            ids.iter().any(|&i| nodes[i].requires_grad)
        };
        let backward = if requires_grad { Some(backward) } else { None };
        Ok(self.push_node(Rc::new(value), requires_grad, false, ids, backward))
    }

    fn push_node(
        &self,
        value: Rc<Tensor>,
        requires_grad: bool,
        leaf: bool,
        parents: Vec<usize>,
        backward: Option<BackwardFn>,
    ) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            requires_grad,
            leaf,
            parents,
            backward,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    pub(crate) fn value_of(&self, id: usize) -> Rc<Tensor> {
        self.nodes.borrow()[id].value.clone()
    }

    pub(crate) fn requires_grad(&self, id: usize) -> bool {
        self.nodes.borrow()[id].requires_grad
    }

    /// Accumulate dLoss/dLeaf into every trainable leaf reachable from `loss`.
    /// Calling this twice without [`Tape::zero_grad`] sums the gradients.
    pub fn backward(&self, loss: Var<'_>) -> Result<()> {
        let nodes = self.nodes.borrow();
        let root = &nodes[loss.id];
        if root.value.len() != 1 {
            return Err(Error::Shape(format!(
                "backward needs a scalar loss, got shape {:?}",
                root.value.shape()
            )));
        }
        if !root.value.is_finite() {
            return Err(Error::NonFinite("loss".into()));
        }
        if !root.requires_grad {
            return Ok(());
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.id + 1];
        grads[loss.id] = Some(Tensor::ones(root.value.shape()));
        let mut leaf_grads = self.leaf_grads.borrow_mut();
        for id in (0..=loss.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            if node.leaf {
                match leaf_grads.get_mut(&id) {
                    Some(acc) => acc.add_assign(&g),
                    None => {
                        leaf_grads.insert(id, g);
                    }
                }
                continue;
            }
            let Some(f) = &node.backward else { continue };
            let parent_grads = f(&g);
            debug_assert_eq!(parent_grads.len(), node.parents.len());
            for (&p, pg) in node.parents.iter().zip(parent_grads) {
                let Some(pg) = pg else { continue };
                if !nodes[p].requires_grad {
                    continue;
                }
                match &mut grads[p] {
                    Some(acc) => acc.add_assign(&pg),
                    slot @ None => *slot = Some(pg),
                }
            }
        }
        Ok(())
    }

    /// Accumulated gradient of a leaf; zeros when the leaf was never reached.
    pub fn grad(&self, v: Var<'_>) -> Option<Tensor> {
        let nodes = self.nodes.borrow();
        let node = &nodes[v.id];
        if !node.leaf {
            return None;
        }
        Some(
            self.leaf_grads
                .borrow()
                .get(&v.id)
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(node.value.shape())),
        )
    }

    pub fn zero_grad(&self) {
        self.leaf_grads.borrow_mut().clear();
    }
}

impl<'t> Var<'t> {
    pub fn value(&self) -> Rc<Tensor> {
        self.tape.value_of(self.id)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.value().shape().to_vec()
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.requires_grad(self.id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_gradient() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(3.0));
        let y = x.mul(x).unwrap();
        tape.backward(y).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[6.0]);
    }

    #[test]
    fn repeated_backward_accumulates() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(3.0));
        let y = x.mul(x).unwrap();
        tape.backward(y).unwrap();
        tape.backward(y).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[12.0]);
        tape.zero_grad();
        assert_eq!(tape.grad(x).unwrap().data(), &[0.0]);
    }

    #[test]
    fn untouched_leaf_has_zero_grad() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(vec![1.0, 2.0]));
        let unused = tape.leaf(Tensor::from_vec(vec![5.0, 5.0, 5.0]));
        let loss = x.sum_all().unwrap();
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(unused).unwrap().data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn non_scalar_loss_is_shape_error() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(vec![1.0, 2.0]));
        assert!(matches!(tape.backward(x), Err(Error::Shape(_))));
    }

    #[test]
    fn inner_product_gradient_is_other_factor() {
        let tape = Tape::new();
        let a = tape.leaf(Tensor::from_vec(vec![1.0, -2.0, 0.5]));
        let b = tape.constant(Tensor::from_vec(vec![4.0, 5.0, 6.0]));
        let loss = a.mul(b).unwrap().sum_all().unwrap();
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(a).unwrap().data(), &[4.0, 5.0, 6.0]);
        assert!(tape.grad(b).is_none());
    }
}
