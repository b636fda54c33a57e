//! Gradient clipping and Adam.

use serde::{Deserialize, Serialize};

use super::model::Grads;
use super::params::{ParamStore, TrainableMask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments of one tensor plus its own step count (a
/// tensor only advances when it receives a gradient).
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Moments {
    pub fn zeros(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of `param` in place.
pub fn adam_update(param: &mut [f64], grad: &[f64], mom: &mut Moments, cfg: &AdamConfig) {
    mom.t += 1;
    let c1 = 1.0 - cfg.beta1.powi(mom.t as i32);
    let c2 = 1.0 - cfg.beta2.powi(mom.t as i32);
    for i in 0..param.len() {
        let g = grad[i];
        mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g;
        mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g * g;
        let mh = mom.m[i] / c1;
        let vh = mom.v[i] / c2;
        param[i] -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
    }
}

/// Rescales `grads` so the global L2 norm is at most `max_norm`. Returns
/// the norm before clipping.
pub fn clip_grad_norm(grads: &mut Grads, max_norm: f64) -> f64 {
    let norm = grads.norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale(max_norm / norm);
    }
    norm
}

/// Adam moments for every tensor of a store, by tensor id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdamState {
    slots: Vec<Option<Moments>>,
}

impl AdamState {
    pub fn moments(&self, id: usize) -> Option<&Moments> {
        self.slots.get(id).and_then(Option::as_ref)
    }

    /// Applies `grads` to every trainable tensor that has one; the rest are
    /// left untouched.
    pub fn step(&mut self, store: &mut ParamStore, grads: &Grads, mask: Option<&TrainableMask>, cfg: &AdamConfig) {
        if self.slots.len() < store.len() {
            self.slots.resize(store.len(), None);
        }
        for id in 0..store.len() {
            if mask.is_some_and(|m| !m.contains(id)) {
                continue;
            }
            let Some(g) = grads.get(id) else { continue };
            let t = store.tensor_mut(id);
            let mom = self.slots[id].get_or_insert_with(|| Moments::zeros(t.len()));
            adam_update(&mut t.data, g, mom, cfg);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::params::Tensor;

    #[test]
    fn first_adam_step_moves_by_lr() {
        // With zero moments the bias-corrected step is lr·g/(|g|+eps).
        let mut p = vec![1.0];
        let mut m = Moments::zeros(1);
        adam_update(&mut p, &[0.5], &mut m, &AdamConfig::default());
        assert!((p[0] - (1.0 - 1e-3 * 0.5 / (0.5 + 1e-8))).abs() < 1e-15);
        assert_eq!(m.t, 1);
    }

    #[test]
    fn adam_with_hand_set_moments() {
        let cfg = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut p = vec![2.0];
        let mut m = Moments {
            m: vec![0.2],
            v: vec![0.01],
            t: 1,
        };
        adam_update(&mut p, &[1.0], &mut m, &cfg);
        // m = 0.9·0.2 + 0.1 = 0.28, v = 0.999·0.01 + 0.001 = 0.01099
        // m̂ = 0.28/(1-0.81) , v̂ = 0.01099/(1-0.998001)
        let mh = 0.28 / 0.19;
        let vh = 0.01099 / (1.0 - 0.999f64 * 0.999);
        let want = 2.0 - 0.1 * mh / (vh.sqrt() + 1e-8);
        assert!((m.m[0] - 0.28).abs() < 1e-15);
        assert!((m.v[0] - 0.01099).abs() < 1e-15);
        assert!((p[0] - want).abs() < 1e-12, "{} vs {want}", p[0]);
        assert!((p[0] - 1.937149).abs() < 1e-5);
    }

    #[test]
    fn clipping_scales_norm_five_by_a_fifth() {
        let mut store = ParamStore::new();
        store.insert("a", Tensor::zeros(&[2]));
        let mut g = Grads::new(1);
        g.put(0, vec![3.0, 4.0]);
        let before = clip_grad_norm(&mut g, 1.0);
        assert_eq!(before, 5.0);
        assert_eq!(g.get(0).unwrap(), &[0.6000000000000001, 0.8]);
        let mut small = Grads::new(1);
        small.put(0, vec![0.3, 0.4]);
        clip_grad_norm(&mut small, 1.0);
        assert_eq!(small.get(0).unwrap(), &[0.3, 0.4]);
    }

    #[test]
    fn untouched_tensors_are_skipped() {
        let mut store = ParamStore::new();
        store.insert("a", Tensor::filled(&[1], 1.0));
        store.insert("b", Tensor::filled(&[1], 1.0));
        let mut g = Grads::new(2);
        g.put(0, vec![1.0]);
        let mut st = AdamState::default();
        st.step(&mut store, &g, None, &AdamConfig::default());
        assert!(store.get("a").unwrap().data[0] < 1.0);
        assert_eq!(store.get("b").unwrap().data[0], 1.0);
        assert!(st.moments(1).is_none());
    }
}
