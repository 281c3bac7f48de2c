//! Per-coordinate AdaGrad with sparse updates.

use serde::{Deserialize, Serialize};

/// Accumulated squared gradients for one parameter block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaGrad {
    pub eta: f64,
    pub epsilon: f64,
    accum: Vec<f64>,
}

impl AdaGrad {
    pub fn new(len: usize, eta: f64, epsilon: f64) -> Self {
        AdaGrad {
            eta,
            epsilon,
            accum: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.accum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accum.is_empty()
    }

    pub fn accumulated(&self) -> &[f64] {
        &self.accum
    }

    /// Grows the state to cover `len` coordinates.
    pub fn resize(&mut self, len: usize) {
        if len > self.accum.len() {
            self.accum.resize(len, 0.0);
        }
    }

    /// Updates a single coordinate: `G += g^2; theta -= eta * g / (sqrt(G) + eps)`.
    /// Zero gradients leave both `theta` and `G` untouched.
    #[inline]
    pub fn update(&mut self, param: &mut f64, index: usize, grad: f64) {
        if grad == 0.0 {
            return;
        }
        let g = &mut self.accum[index];
        *g += grad * grad;
        *param -= self.eta * grad / (g.sqrt() + self.epsilon);
    }

    /// Applies a sparse gradient given as `(index, value)` pairs.
    pub fn step_sparse<I>(&mut self, params: &mut [f64], grads: I)
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        for (i, g) in grads {
            self.update(&mut params[i], i, g);
        }
    }

    /// Dense step; shapes must match.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), grads.len(), "parameter/gradient shape mismatch");
        assert_eq!(params.len(), self.accum.len(), "parameter/state shape mismatch");
        for (i, (p, &g)) in params.iter_mut().zip(grads).enumerate() {
            self.update(p, i, g);
        }
    }
}
