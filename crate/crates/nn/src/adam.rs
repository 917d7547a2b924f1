//! Parameters with persistent Adam state.

use crate::backward::Grads;
use crate::graph::{Graph, TensorId};
use crate::{NnError, Result};

/// One trainable tensor plus its Adam moments and step count.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
    pub m: Vec<f32>,
    pub v: Vec<f32>,
    pub step: u64,
}

/// Ordered collection of parameters; the order defines slot indices and the
/// checkpoint layout.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    pub params: Vec<Parameter>,
}

impl ParamStore {
    pub fn add(&mut self, name: impl Into<String>, shape: &[usize], data: Vec<f32>) -> usize {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        let n = data.len();
        self.params.push(Parameter {
            name: name.into(),
            shape: shape.to_vec(),
            data,
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        });
        self.params.len() - 1
    }

    pub fn total_len(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    /// Registers every parameter as a graph leaf; returns slot-aligned ids.
    pub fn register_all(&self, g: &mut Graph) -> Result<Vec<TensorId>> {
        self.params
            .iter()
            .enumerate()
            .map(|(slot, p)| g.param(slot, &p.shape, p.data.clone()))
            .collect()
    }

    /// Snapshot of the raw parameter values (no optimizer state).
    pub fn snapshot(&self) -> Vec<Vec<f32>> {
        self.params.iter().map(|p| p.data.clone()).collect()
    }

    pub fn restore(&mut self, snapshot: &[Vec<f32>]) {
        for (p, s) in self.params.iter_mut().zip(snapshot) {
            p.data.copy_from_slice(s);
        }
    }
}

/// Bias-corrected Adam.
#[derive(Debug, Clone, Copy)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Adam {
    /// Applies one update from the gradients of the registered leaf ids
    /// (`ids[slot]` from `register_all`). Parameters whose gradient is absent
    /// (disconnected from the loss) are left untouched.
    pub fn step(
        &self,
        store: &mut ParamStore,
        lr: f64,
        ids: &[TensorId],
        grads: &mut Grads,
    ) -> Result<()> {
        for (slot, param) in store.params.iter_mut().enumerate() {
            let id = *ids.get(slot).ok_or(NnError::UnregisteredParam { slot })?;
            let Some(grad) = grads.take(id) else {
                continue;
            };
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(NnError::NonFiniteGrad {
                    name: param.name.clone(),
                });
            }
            param.step += 1;
            let t = param.step as i32;
            let bc1 = 1.0 - self.beta1.powi(t);
            let bc2 = 1.0 - self.beta2.powi(t);
            let (b1, b2) = (self.beta1 as f32, self.beta2 as f32);
            for i in 0..param.data.len() {
                let g = grad[i];
                param.m[i] = b1 * param.m[i] + (1.0 - b1) * g;
                param.v[i] = b2 * param.v[i] + (1.0 - b2) * g * g;
                let m_hat = param.m[i] as f64 / bc1;
                let v_hat = param.v[i] as f64 / bc2;
                param.data[i] -= (lr * m_hat / (v_hat.sqrt() + self.eps)) as f32;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut store = ParamStore::default();
        let slot = store.add("w", &[3], vec![1.0, -2.0, 0.5]);
        let mut g = Graph::new(true);
        let ids = store.register_all(&mut g).unwrap();
        let w = ids[slot];
        let zero = g.input(&[3], vec![0.0; 3]).unwrap();
        let prod = g.mul(w, zero).unwrap();
        let loss = g.sum_all(prod).unwrap();
        let mut grads = g.backward(loss).unwrap();
        let before = store.params[slot].data.clone();
        Adam::default()
            .step(&mut store, 0.05, &ids, &mut grads)
            .unwrap();
        // gradient exists but is exactly zero
        assert_eq!(store.params[slot].data, before);
    }

    #[test]
    fn first_step_magnitude_is_lr() {
        // constant gradient: bias-corrected first update is exactly lr
        let mut store = ParamStore::default();
        let slot = store.add("w", &[4], vec![0.0; 4]);
        let mut g = Graph::new(true);
        let ids = store.register_all(&mut g).unwrap();
        let loss = g.sum_all(ids[slot]).unwrap(); // d loss / dw = 1
        let mut grads = g.backward(loss).unwrap();
        let lr = 0.01;
        Adam::default()
            .step(&mut store, lr, &ids, &mut grads)
            .unwrap();
        for &w in &store.params[slot].data {
            assert!(
                (w + lr as f32).abs() < 1e-6,
                "expected -lr = {}, got {w}",
                -lr
            );
        }
    }

    #[test]
    fn quadratic_bowl_converges() {
        // f(x) = sum x^2 from |x0| = 1 reaches |x| < 1e-3 within 500 steps
        let mut store = ParamStore::default();
        let x0 = vec![0.6f32, -0.8];
        let slot = store.add("x", &[2], x0);
        let adam = Adam::default();
        for _ in 0..500 {
            let mut g = Graph::new(true);
            let ids = store.register_all(&mut g).unwrap();
            let x = ids[slot];
            let sq = g.mul(x, x).unwrap();
            let loss = g.sum_all(sq).unwrap();
            let mut grads = g.backward(loss).unwrap();
            adam.step(&mut store, 0.05, &ids, &mut grads).unwrap();
        }
        let norm: f32 = store.params[slot]
            .data
            .iter()
            .map(|v| v * v)
            .sum::<f32>()
            .sqrt();
        assert!(norm < 1e-3, "|x| = {norm} after 500 steps");
    }

    #[test]
    fn disconnected_parameter_untouched() {
        let mut store = ParamStore::default();
        let a = store.add("a", &[2], vec![1.0, 2.0]);
        let b = store.add("b", &[2], vec![3.0, 4.0]);
        let mut g = Graph::new(true);
        let ids = store.register_all(&mut g).unwrap();
        let loss = g.sum_all(ids[a]).unwrap();
        let mut grads = g.backward(loss).unwrap();
        assert!(grads.of(ids[b]).is_none());
        let before = store.params[b].data.clone();
        Adam::default()
            .step(&mut store, 0.1, &ids, &mut grads)
            .unwrap();
        assert_eq!(store.params[b].data, before);
        assert_ne!(store.params[a].data, vec![1.0, 2.0]);
    }
}
