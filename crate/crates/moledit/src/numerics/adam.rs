//! Adam optimizer with bias correction.

use std::collections::BTreeMap;

use super::params::ParamStore;
use super::tensor::Tensor;

#[derive(Debug, Clone, Copy)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamHyper {
    pub fn with_lr(lr: f64) -> Self {
        AdamHyper {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
struct Moments {
    m: Tensor,
    v: Tensor,
}

/// First/second moment buffers per parameter plus the shared step counter.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub hyper: AdamHyper,
    step: u64,
    moments: BTreeMap<String, Moments>,
}

impl OptimizerState {
    pub fn new(hyper: AdamHyper) -> Self {
        OptimizerState {
            hyper,
            step: 0,
            moments: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over every parameter present in `grads`. Buffers are
    /// created on first sight, shaped like their parameter.
    pub fn step(&mut self, params: &mut ParamStore, grads: &BTreeMap<String, Tensor>) {
        self.step += 1;
        let t = self.step as i32;
        let AdamHyper {
            lr,
            beta1,
            beta2,
            eps,
        } = self.hyper;
        let bias1 = 1.0 - beta1.powi(t);
        let bias2 = 1.0 - beta2.powi(t);
        for (name, grad) in grads {
            let p = params.get_mut(name);
            assert!(
                p.same_shape(grad),
                "gradient shape {:?} vs parameter {:?} for {name}",
                grad.shape(),
                p.shape()
            );
            let entry = self.moments.entry(name.clone()).or_insert_with(|| Moments {
                m: Tensor::zeros(grad.shape()),
                v: Tensor::zeros(grad.shape()),
            });
            let (pd, md, vd) = (p.data_mut(), entry.m.data_mut(), entry.v.data_mut());
            for i in 0..pd.len() {
                let g = grad.data()[i];
                md[i] = beta1 * md[i] + (1.0 - beta1) * g;
                vd[i] = beta2 * vd[i] + (1.0 - beta2) * g * g;
                let m_hat = md[i] / bias1;
                let v_hat = vd[i] / bias2;
                pd[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store_with(value: Vec<f64>) -> ParamStore {
        let mut s = ParamStore::new();
        s.insert("w", Tensor::new(vec![1, value.len()], value));
        s
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut params = store_with(vec![1.0, -2.0]);
        let mut opt = OptimizerState::new(AdamHyper::with_lr(0.1));
        let mut grads = BTreeMap::new();
        grads.insert("w".to_string(), Tensor::new(vec![1, 2], vec![0.0, 0.0]));
        opt.step(&mut params, &grads);
        assert_eq!(params.get("w").data(), &[1.0, -2.0]);
    }

    #[test]
    fn first_step_moves_by_roughly_lr_against_gradient_sign() {
        let lr = 0.05;
        let mut params = store_with(vec![0.0, 0.0]);
        let mut opt = OptimizerState::new(AdamHyper::with_lr(lr));
        let mut grads = BTreeMap::new();
        grads.insert("w".to_string(), Tensor::new(vec![1, 2], vec![3.0, -0.5]));
        opt.step(&mut params, &grads);
        let w = params.get("w").data();
        // bias-corrected first step is lr * g/|g| up to eps
        assert!((w[0] + lr).abs() < 1e-6, "{w:?}");
        assert!((w[1] - lr).abs() < 1e-6, "{w:?}");
    }

    #[test]
    fn repeated_identical_gradients_move_monotonically() {
        let mut params = store_with(vec![1.0]);
        let mut opt = OptimizerState::new(AdamHyper::with_lr(0.01));
        let mut grads = BTreeMap::new();
        grads.insert("w".to_string(), Tensor::new(vec![1, 1], vec![2.0]));
        let mut prev = params.get("w").data()[0];
        for _ in 0..5 {
            opt.step(&mut params, &grads);
            let cur = params.get("w").data()[0];
            assert!(cur < prev, "expected monotone descent, {cur} !< {prev}");
            prev = cur;
        }
    }
}
