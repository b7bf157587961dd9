use crate::autodiff::Tensor;
use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Cosine annealing from `base` at epoch 0 to 0 at `epochs`.
pub fn cosine_lr(base: f64, epoch: usize, epochs: usize) -> f64 {
    if epochs == 0 {
        return base;
    }
    let x = (epoch.min(epochs) as f64) / epochs as f64;
    base * 0.5 * (1.0 + (std::f64::consts::PI * x).cos())
}

pub fn global_norm(grads: &[Vec<f64>]) -> f64 {
    grads.iter().flatten().map(|g| g * g).sum::<f64>().sqrt()
}

/// Rescales `grads` in place so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [Vec<f64>], max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm <= max_norm || !norm.is_finite() {
        return norm;
    }
    let mut scale = max_norm / norm;
    let original: Vec<Vec<f64>> = grads.to_vec();
    loop {
        for (g, o) in grads.iter_mut().zip(&original) {
            for (gi, oi) in g.iter_mut().zip(o) {
                *gi = oi * scale;
            }
        }
        if global_norm(grads) <= max_norm {
            return norm;
        }
        // rounding pushed the result a few ulps over
        scale *= 1.0 - 4.0 * f64::EPSILON;
    }
}

/// Adam with one learning-rate multiplier per parameter tensor.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl Adam {
    pub fn new(params: &[&Tensor]) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|p| vec![0.0; p.len()]).collect();
        Self { m: zeros.clone(), v: zeros, step: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One update. `lr_mult[i]` scales `lr` for parameter `i`.
    pub fn update(&mut self, params: &mut [&mut Tensor], grads: &[Vec<f64>], lr: f64, lr_mult: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() || lr_mult.len() != self.m.len() {
            return Err(Error::invalid("optimizer state does not match the parameter list"));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - ADAM_BETA1.powi(t);
        let c2 = 1.0 - ADAM_BETA2.powi(t);
        for (i, p) in params.iter_mut().enumerate() {
            let g = &grads[i];
            if g.len() != p.len() {
                return Err(Error::invalid(format!("gradient {i} has {} entries for {} parameters", g.len(), p.len())));
            }
            let step = lr * lr_mult[i];
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (j, w) in p.data_mut().iter_mut().enumerate() {
                m[j] = ADAM_BETA1 * m[j] + (1.0 - ADAM_BETA1) * g[j];
                v[j] = ADAM_BETA2 * v[j] + (1.0 - ADAM_BETA2) * g[j] * g[j];
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                *w -= step * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
        }
        Ok(())
    }
}
