use crate::model::{ModelDims, ModelParams};
use crate::Real;

/// First and second moment estimates plus the step counter.
pub struct AdamState {
    m: ModelParams,
    v: ModelParams,
    t: u64,
}

impl AdamState {
    pub fn new(dims: ModelDims) -> Self {
        AdamState {
            m: ModelParams::zeros(dims),
            v: ModelParams::zeros(dims),
            t: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.t
    }
}

/// One Adam update with bias correction:
/// m <- b1 m + (1-b1) g; v <- b2 v + (1-b2) g^2;
/// theta <- theta - lr * m_hat / (sqrt(v_hat) + eps).
pub fn adam_update(
    params: &mut ModelParams,
    grads: &ModelParams,
    state: &mut AdamState,
    lr: Real,
    beta1: Real,
    beta2: Real,
    epsilon: Real,
) {
    state.t += 1;
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);
    let theta = params.views_mut();
    let g = grads.views();
    let m = state.m.views_mut();
    let v = state.v.views_mut();
    for (((mut theta, g), mut m), mut v) in theta.into_iter().zip(g).zip(m).zip(v) {
        let theta = theta.as_slice_mut().unwrap();
        let g = g.as_slice().unwrap();
        let m = m.as_slice_mut().unwrap();
        let v = v.as_slice_mut().unwrap();
        for i in 0..theta.len() {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            theta[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
}
