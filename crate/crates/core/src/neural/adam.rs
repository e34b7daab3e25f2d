//! Adam optimizer with bias-corrected moment estimates.

use crate::error::{Error, Result};
use crate::neural::{MlpGradient, MlpParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment accumulators and the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        AdamState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected update: w -= lr * mhat / (sqrt(vhat) + eps).
pub fn adam_step(
    params: &mut MlpParams,
    grad: &MlpGradient,
    state: &mut AdamState,
    hyper: &AdamHyper,
) -> Result<()> {
    if grad.data.len() != params.data.len() || state.m.len() != params.data.len() {
        return Err(Error::Domain("optimizer state shape mismatch".into()));
    }
    state.t += 1;
    let bc1 = 1.0 - hyper.beta1.powi(state.t as i32);
    let bc2 = 1.0 - hyper.beta2.powi(state.t as i32);
    for i in 0..params.data.len() {
        let g = grad.data[i];
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
        let mhat = state.m[i] / bc1;
        let vhat = state.v[i] / bc2;
        params.data[i] -= hyper.lr * mhat / (vhat.sqrt() + hyper.epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{init_params, MlpArchitecture};

    fn setup() -> (MlpParams, MlpArchitecture) {
        let arch = MlpArchitecture::new(3, vec![4], 1).unwrap();
        (init_params(&arch, 5), arch)
    }

    #[test]
    fn first_step_closed_form() {
        // with m = (1-b1) g and v = (1-b2) g^2, bias correction gives
        // mhat = g, vhat = g^2, so dw = -lr * g / (|g| + eps)
        let (mut params, arch) = setup();
        let before = params.clone();
        let grad = MlpGradient {
            data: (0..arch.param_count())
                .map(|i| (i as f64 - 3.0) * 0.25)
                .collect(),
        };
        let hyper = AdamHyper::default();
        let mut state = AdamState::new(arch.param_count());
        adam_step(&mut params, &grad, &mut state, &hyper).unwrap();
        for i in 0..arch.param_count() {
            let g = grad.data[i];
            let expect = before.data[i] - hyper.lr * g / (g.abs() + hyper.epsilon);
            assert!((params.data[i] - expect).abs() < 1e-15, "i={i}");
        }
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let (mut params, arch) = setup();
        let before = params.clone();
        let grad = MlpGradient::zeros(arch.param_count());
        let mut state = AdamState::new(arch.param_count());
        adam_step(&mut params, &grad, &mut state, &AdamHyper::default()).unwrap();
        assert_eq!(params, before);
    }

    #[test]
    fn identical_runs_bit_identical() {
        let (p0, arch) = setup();
        let hyper = AdamHyper::default();
        let run = || {
            let mut params = p0.clone();
            let mut state = AdamState::new(arch.param_count());
            for t in 0..25 {
                let grad = MlpGradient {
                    data: (0..arch.param_count())
                        .map(|i| ((i + t) as f64 * 0.7).sin())
                        .collect(),
                };
                adam_step(&mut params, &grad, &mut state, &hyper).unwrap();
            }
            params
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let (mut params, _) = setup();
        let grad = MlpGradient::zeros(3);
        let mut state = AdamState::new(3);
        assert!(adam_step(&mut params, &grad, &mut state, &AdamHyper::default()).is_err());
    }
}
