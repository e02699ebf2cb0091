//! Minimal reverse-mode automatic differentiation over dense `f64` matrices.
//!
//! The engine is define-by-run: build a fresh [`Graph`] per step, append
//! operations (each computes its value immediately), then call
//! [`Graph::forward_backward`] on a scalar node to get the loss and the
//! gradient of every leaf.
//!
//! ```
//! use sasv_core::autograd::{Graph, Tensor};
//!
//! let mut g = Graph::new();
//! let x = g.leaf(Tensor::scalar(3.0));
//! let y = g.mul(x, x);
//! let (value, grads) = g.forward_backward(y).unwrap();
//! assert_eq!(value, 9.0);
//! assert_eq!(grads.get(x).unwrap().item(), 6.0);
//! ```

mod check;
mod graph;
mod tensor;

pub use check::grad_check;
pub use graph::{Gradients, Graph, Var};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutogradError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("backward requires a scalar root, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),
    #[error("non-finite value in {pass} pass at node {node} ({op})")]
    NonFinite {
        node: usize,
        op: &'static str,
        pass: &'static str,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Scale applied to the reversed gradient of a gradient-reversal node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrlConfig {
    lambda: f64,
}

impl GrlConfig {
    pub fn new(lambda: f64) -> Result<Self, AutogradError> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(AutogradError::InvalidArgument(format!(
                "gradient reversal scale must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(self) -> f64 {
        self.lambda
    }
}

impl Default for GrlConfig {
    fn default() -> Self {
        Self { lambda: 1.0 }
    }
}

/// Appends a gradient-reversal node over `x`.
pub fn grl_apply(g: &mut Graph, x: Var, cfg: GrlConfig) -> Var {
    g.grl(x, cfg)
}
