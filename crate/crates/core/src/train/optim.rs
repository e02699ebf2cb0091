//! Adam with bias correction.

use super::TrainError;
use crate::autograd::Tensor;
use crate::model::{ModelParams, ParamId};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let zeros: Vec<Tensor> = params
            .tensors()
            .iter()
            .map(|t| {
                let (r, c) = t.dims2();
                Tensor::zeros(r, c)
            })
            .collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }
}

/// One Adam update of every trainable tensor, followed by renormalising the
/// ASV class vectors. The frozen branch is never touched.
pub fn optimizer_step(
    params: &mut ModelParams,
    grads: &[Tensor],
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<(), TrainError> {
    if grads.len() != ParamId::ALL.len() || state.m.len() != ParamId::ALL.len() {
        return Err(TrainError::Optimizer(format!(
            "expected {} gradient tensors, got {}",
            ParamId::ALL.len(),
            grads.len()
        )));
    }
    for &id in &ParamId::ALL {
        let i = id.index();
        let p = params.get(id);
        if !p.same_shape(&grads[i]) || !p.same_shape(&state.m[i]) {
            return Err(TrainError::Optimizer(format!(
                "{}: parameter {:?}, gradient {:?}",
                id.name(),
                p.shape(),
                grads[i].shape()
            )));
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for &id in &ParamId::ALL {
        if id.is_frozen() {
            continue;
        }
        let i = id.index();
        let g = grads[i].data();
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        let p = params.get_mut(id).data_mut();
        for k in 0..p.len() {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            p[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    params.normalize_class_vectors();
    Ok(())
}
