use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::tensor::{ParamStore, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamaxConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamaxConfig {
    fn default() -> Self {
        Self { lr: 0.002, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First moment `m` and infinity-norm accumulator `u` per parameter.
#[derive(Debug, Clone)]
pub struct AdamaxState {
    pub t: u64,
    m: Vec<Tensor>,
    u: Vec<Tensor>,
}

impl AdamaxState {
    pub fn new(store: &ParamStore) -> Self {
        let zeros = || store.iter().map(|p| Tensor::zeros(p.value().rows(), p.value().cols())).collect();
        Self { t: 0, m: zeros(), u: zeros() }
    }
}

/// `m <- b1 m + (1 - b1) g`, `u <- max(b2 u, |g|)`,
/// `theta <- theta - lr / (1 - b1^t) * m / max(u, eps)`.
pub fn adamax_step(store: &mut ParamStore, state: &mut AdamaxState, cfg: &AdamaxConfig) -> Result<(), TrainError> {
    if state.m.len() != store.len() {
        let name = store.iter().nth(state.m.len()).map_or_else(|| "<extra state>".to_string(), |p| p.name.clone());
        return Err(TrainError::MissingGradient(name));
    }
    for (i, id) in store.ids().collect::<Vec<_>>().into_iter().enumerate() {
        if store.grad(id).shape() != state.m[i].shape() {
            return Err(TrainError::MissingGradient(store.get(id).name.clone()));
        }
    }
    state.t += 1;
    let step = cfg.lr / (1.0 - cfg.beta1.powi(state.t as i32));
    for (i, id) in store.ids().collect::<Vec<_>>().into_iter().enumerate() {
        let (value, grad) = store.value_and_grad_mut(id);
        let (m, u) = (state.m[i].data_mut(), state.u[i].data_mut());
        for (((th, &g), mi), ui) in value.data_mut().iter_mut().zip(grad.data()).zip(m.iter_mut()).zip(u.iter_mut()) {
            *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * g;
            *ui = (cfg.beta2 * *ui).max(g.abs());
            *th -= step * *mi / ui.max(cfg.eps);
        }
    }
    Ok(())
}
