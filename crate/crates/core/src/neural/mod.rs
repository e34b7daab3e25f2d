//! From-scratch dense feed-forward network with manual backpropagation.
//!
//! Parameters live in one flat vector (per layer: row-major weights, then
//! biases), gradients share the layout, and every operation is a pure
//! function of (inputs, seed). Sigmoid activation on hidden and output
//! layers.

pub mod adam;
pub mod exact;
pub mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Network shape: input width n, hidden widths, output width (1 for the
/// parity target, n when predicting every dlog bit).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpArchitecture {
    pub input_width: usize,
    pub hidden: Vec<usize>,
    pub output_width: usize,
}

/// Offsets of one dense layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy)]
pub struct LayerView {
    pub w_off: usize,
    pub b_off: usize,
    pub d_in: usize,
    pub d_out: usize,
}

impl MlpArchitecture {
    pub fn new(input_width: usize, hidden: Vec<usize>, output_width: usize) -> Result<Self> {
        if input_width == 0 || output_width == 0 || hidden.is_empty() {
            return Err(Error::Domain(
                "need input, output, and at least one hidden layer".into(),
            ));
        }
        if hidden.contains(&0) {
            return Err(Error::Domain("layer widths must be >= 1".into()));
        }
        Ok(MlpArchitecture {
            input_width,
            hidden,
            output_width,
        })
    }

    /// (d_in, d_out) per dense layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut d_in = self.input_width;
        for &h in &self.hidden {
            dims.push((d_in, h));
            d_in = h;
        }
        dims.push((d_in, self.output_width));
        dims
    }

    pub fn layer_views(&self) -> Vec<LayerView> {
        let mut views = Vec::new();
        let mut off = 0;
        for (d_in, d_out) in self.layer_dims() {
            views.push(LayerView {
                w_off: off,
                b_off: off + d_in * d_out,
                d_in,
                d_out,
            });
            off += (d_in + 1) * d_out;
        }
        views
    }

    /// Total parameter count: sum over layers of (d_in + 1) * d_out.
    pub fn param_count(&self) -> usize {
        self.layer_dims()
            .iter()
            .map(|(i, o)| (i + 1) * o)
            .sum()
    }

    /// Widest activation, for workspace sizing.
    fn max_width(&self) -> usize {
        self.hidden
            .iter()
            .copied()
            .chain([self.input_width, self.output_width])
            .max()
            .unwrap()
    }
}

/// Flat parameter vector of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub data: Vec<f64>,
}

/// Gradient with the same layout as the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub data: Vec<f64>,
}

impl MlpGradient {
    pub fn zeros(dim: usize) -> Self {
        MlpGradient {
            data: vec![0.0; dim],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Per-example loss attached to the sigmoid output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// l(yhat, y) = (yhat - y)^2 / 2 against targets in {-1, +1}.
    Squared,
    /// Binary cross-entropy against bit targets in {0, 1}.
    BinaryCrossEntropy,
}

/// LSB-first 0/1 bit expansion of a group element.
pub fn encode_input(x: u64, n: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; n];
    encode_into(x, &mut out)?;
    Ok(out)
}

/// In-place bit encoding for hot loops.
pub fn encode_into(x: u64, out: &mut [f64]) -> Result<()> {
    let n = out.len();
    if n < 64 && x >= 1u64 << n {
        return Err(Error::Domain(format!("{x} does not fit into {n} bits")));
    }
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = ((x >> i) & 1) as f64;
    }
    Ok(())
}

/// Uniform initialization on [-1/sqrt(d_in), 1/sqrt(d_in)] per layer,
/// weights first then biases, deterministic per seed.
pub fn init_params(arch: &MlpArchitecture, seed: u64) -> MlpParams {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(arch.param_count());
    for (d_in, d_out) in arch.layer_dims() {
        let bound = 1.0 / (d_in as f64).sqrt();
        for _ in 0..(d_in + 1) * d_out {
            data.push(rng.gen_range(-bound..bound));
        }
    }
    MlpParams { data }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Reusable activation buffers for forward/backward passes.
#[derive(Debug, Clone)]
pub struct Workspace {
    /// Post-activation values per layer, including the input at index 0.
    acts: Vec<Vec<f64>>,
    /// Delta buffers (dL/dz per layer).
    delta: Vec<f64>,
    delta_next: Vec<f64>,
}

impl Workspace {
    pub fn new(arch: &MlpArchitecture) -> Self {
        let mut acts = vec![vec![0.0; arch.input_width]];
        for (_, d_out) in arch.layer_dims() {
            acts.push(vec![0.0; d_out]);
        }
        let w = arch.max_width();
        Workspace {
            acts,
            delta: vec![0.0; w],
            delta_next: vec![0.0; w],
        }
    }

    pub fn output(&self) -> &[f64] {
        self.acts.last().unwrap()
    }
}

/// Forward pass; returns the sigmoid outputs, each strictly inside (0, 1).
pub fn forward(params: &MlpParams, arch: &MlpArchitecture, input: &[f64]) -> Result<Vec<f64>> {
    let mut ws = Workspace::new(arch);
    forward_ws(params, arch, input, &mut ws)?;
    Ok(ws.output().to_vec())
}

pub fn forward_ws(
    params: &MlpParams,
    arch: &MlpArchitecture,
    input: &[f64],
    ws: &mut Workspace,
) -> Result<()> {
    if input.len() != arch.input_width {
        return Err(Error::Domain(format!(
            "input width {} does not match architecture ({})",
            input.len(),
            arch.input_width
        )));
    }
    if params.data.len() != arch.param_count() {
        return Err(Error::Domain("parameter vector has wrong length".into()));
    }
    ws.acts[0].copy_from_slice(input);
    for (l, view) in arch.layer_views().into_iter().enumerate() {
        let (prev, rest) = ws.acts.split_at_mut(l + 1);
        let x = &prev[l];
        let out = &mut rest[0];
        for o in 0..view.d_out {
            let row = &params.data[view.w_off + o * view.d_in..view.w_off + (o + 1) * view.d_in];
            let mut z = params.data[view.b_off + o];
            for (w, xi) in row.iter().zip(x.iter()) {
                z += w * xi;
            }
            out[o] = sigmoid(z);
        }
    }
    Ok(())
}

fn loss_value(loss: LossKind, yhat: f64, target: f64) -> f64 {
    match loss {
        LossKind::Squared => 0.5 * (yhat - target).powi(2),
        LossKind::BinaryCrossEntropy => {
            let y = yhat.clamp(1e-12, 1.0 - 1e-12);
            -(target * y.ln() + (1.0 - target) * (1.0 - y).ln())
        }
    }
}

/// dL/dz at the output unit (z = pre-sigmoid). For cross-entropy the
/// sigmoid derivative cancels into yhat - t.
fn output_delta(loss: LossKind, yhat: f64, target: f64) -> f64 {
    match loss {
        LossKind::Squared => (yhat - target) * yhat * (1.0 - yhat),
        LossKind::BinaryCrossEntropy => yhat - target,
    }
}

/// Per-example loss and gradient by reverse-mode accumulation.
pub fn backward(
    params: &MlpParams,
    arch: &MlpArchitecture,
    input: &[f64],
    target: &[f64],
    loss: LossKind,
) -> Result<(f64, MlpGradient)> {
    let mut grad = MlpGradient::zeros(arch.param_count());
    let mut ws = Workspace::new(arch);
    let l = backward_accumulate(params, arch, input, target, loss, &mut ws, &mut grad.data, 1.0)?;
    Ok((l, grad))
}

/// Accumulates `scale` times the per-example gradient into `grad_acc` and
/// returns the loss value. The workhorse for batch training and for the
/// exact group-expectation gradients.
#[allow(clippy::too_many_arguments)]
pub fn backward_accumulate(
    params: &MlpParams,
    arch: &MlpArchitecture,
    input: &[f64],
    target: &[f64],
    loss: LossKind,
    ws: &mut Workspace,
    grad_acc: &mut [f64],
    scale: f64,
) -> Result<f64> {
    if target.len() != arch.output_width {
        return Err(Error::Domain(format!(
            "target width {} does not match architecture ({})",
            target.len(),
            arch.output_width
        )));
    }
    forward_ws(params, arch, input, ws)?;
    let views = arch.layer_views();
    let mut total = 0.0;
    {
        let out = ws.acts.last().unwrap();
        for (o, (&yhat, &t)) in out.iter().zip(target.iter()).enumerate() {
            total += loss_value(loss, yhat, t);
            ws.delta[o] = output_delta(loss, yhat, t);
        }
    }
    backprop_deltas(params, &views, ws, grad_acc, scale);
    Ok(total)
}

/// Gradient of the scalar network output itself (d yhat / d w), seeded by
/// d yhat = 1 at the single output unit.
pub fn output_gradient(
    params: &MlpParams,
    arch: &MlpArchitecture,
    input: &[f64],
    ws: &mut Workspace,
    grad_out: &mut [f64],
) -> Result<f64> {
    if arch.output_width != 1 {
        return Err(Error::Domain(
            "output gradient is defined for a scalar output".into(),
        ));
    }
    forward_ws(params, arch, input, ws)?;
    let yhat = ws.acts.last().unwrap()[0];
    // dL/dz with L = yhat: sigmoid derivative at the output.
    ws.delta[0] = yhat * (1.0 - yhat);
    grad_out.fill(0.0);
    let views = arch.layer_views();
    backprop_deltas(params, &views, ws, grad_out, 1.0);
    Ok(yhat)
}

/// Shared reverse sweep: consumes ws.delta as dL/dz of the last layer.
fn backprop_deltas(
    params: &MlpParams,
    views: &[LayerView],
    ws: &mut Workspace,
    grad_acc: &mut [f64],
    scale: f64,
) {
    for (l, view) in views.iter().enumerate().rev() {
        let x = &ws.acts[l];
        // weight and bias gradients of this layer
        for o in 0..view.d_out {
            let d = ws.delta[o] * scale;
            if d != 0.0 {
                let row = &mut grad_acc[view.w_off + o * view.d_in..view.w_off + (o + 1) * view.d_in];
                for (g, xi) in row.iter_mut().zip(x.iter()) {
                    *g += d * xi;
                }
            }
            grad_acc[view.b_off + o] += d;
        }
        if l == 0 {
            break;
        }
        // delta for the previous layer: (W^T delta) * sigma'(z_prev)
        ws.delta_next[..view.d_in].fill(0.0);
        for o in 0..view.d_out {
            let d = ws.delta[o];
            if d != 0.0 {
                let row = &params.data[view.w_off + o * view.d_in..view.w_off + (o + 1) * view.d_in];
                for (acc, w) in ws.delta_next[..view.d_in].iter_mut().zip(row.iter()) {
                    *acc += w * d;
                }
            }
        }
        for (i, a) in ws.acts[l].iter().enumerate() {
            ws.delta_next[i] *= a * (1.0 - a);
        }
        std::mem::swap(&mut ws.delta, &mut ws.delta_next);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_arch() -> MlpArchitecture {
        MlpArchitecture::new(1, vec![1], 1).unwrap()
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_input(3, 4).unwrap(), vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(encode_input(8, 4).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
        assert!(encode_input(16, 4).is_err());
        assert!(encode_input(15, 4).is_ok());
    }

    #[test]
    fn architecture_validation() {
        assert!(MlpArchitecture::new(4, vec![], 1).is_err());
        assert!(MlpArchitecture::new(4, vec![0], 1).is_err());
        assert!(MlpArchitecture::new(0, vec![3], 1).is_err());
        let a = MlpArchitecture::new(4, vec![5, 3], 2).unwrap();
        assert_eq!(a.param_count(), (4 + 1) * 5 + (5 + 1) * 3 + (3 + 1) * 2);
    }

    #[test]
    fn init_stays_in_interval_and_is_deterministic() {
        let arch = MlpArchitecture::new(9, vec![1000], 1).unwrap();
        let p1 = init_params(&arch, 7);
        let p2 = init_params(&arch, 7);
        assert_eq!(p1, p2);
        let views = arch.layer_views();
        for (view, (d_in, _)) in views.iter().zip(arch.layer_dims()) {
            let bound = 1.0 / (d_in as f64).sqrt();
            let layer = &p1.data[view.w_off..view.b_off + view.d_out];
            assert!(layer.iter().all(|&v| v >= -bound && v < bound));
        }
        // mean of the wide layer within 3 standard errors of 0
        let view = views[0];
        let w = &p1.data[view.w_off..view.b_off];
        let n = w.len() as f64;
        let bound = 1.0 / 3.0;
        let se = (bound * bound / 3.0 / n).sqrt();
        let mean = w.iter().sum::<f64>() / n;
        assert!(mean.abs() <= 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn zero_params_give_half() {
        let arch = MlpArchitecture::new(4, vec![3], 2).unwrap();
        let params = MlpParams {
            data: vec![0.0; arch.param_count()],
        };
        let out = forward(&params, &arch, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(out, vec![0.5, 0.5]);
    }

    #[test]
    fn hand_computed_1_1_1() {
        // w1 = 2, b1 = -1, w2 = 0.5, b2 = 0.25 on input 1
        let arch = tiny_arch();
        let params = MlpParams {
            data: vec![2.0, -1.0, 0.5, 0.25],
        };
        let h = sigmoid(2.0 * 1.0 - 1.0);
        let expect = sigmoid(0.5 * h + 0.25);
        let out = forward(&params, &arch, &[1.0]).unwrap();
        assert!((out[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn outputs_strictly_inside_unit_interval() {
        let arch = MlpArchitecture::new(6, vec![8, 8], 3).unwrap();
        let params = init_params(&arch, 11);
        for x in 0..64u64 {
            let out = forward(&params, &arch, &encode_input(x, 6).unwrap()).unwrap();
            assert!(out.iter().all(|&y| y > 0.0 && y < 1.0));
        }
    }

    #[test]
    fn cross_entropy_at_half_is_ln2() {
        let arch = tiny_arch();
        let params = MlpParams {
            data: vec![0.0; arch.param_count()],
        };
        let (l, _) = backward(&params, &arch, &[1.0], &[1.0], LossKind::BinaryCrossEntropy).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn squared_loss_zero_residual_zero_gradient() {
        let arch = MlpArchitecture::new(3, vec![4], 1).unwrap();
        let params = init_params(&arch, 3);
        let input = [1.0, 0.0, 1.0];
        let y = forward(&params, &arch, &input).unwrap()[0];
        let (l, grad) = backward(&params, &arch, &input, &[y], LossKind::Squared).unwrap();
        assert_eq!(l, 0.0);
        assert!(grad.data.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // central differences, step 1e-5, relative error <= 1e-4
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        for case in 0..100 {
            let d_in = rng.gen_range(1..6);
            let hidden = vec![rng.gen_range(1..8usize); rng.gen_range(1..3usize)];
            let d_out = rng.gen_range(1..3);
            let arch = MlpArchitecture::new(d_in, hidden, d_out).unwrap();
            let params = init_params(&arch, rng.gen());
            let input: Vec<f64> = (0..d_in).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let loss = if case % 2 == 0 {
                LossKind::Squared
            } else {
                LossKind::BinaryCrossEntropy
            };
            let target: Vec<f64> = (0..d_out)
                .map(|_| match loss {
                    LossKind::Squared => {
                        if rng.gen::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                    LossKind::BinaryCrossEntropy => {
                        if rng.gen::<bool>() {
                            1.0
                        } else {
                            0.0
                        }
                    }
                })
                .collect();
            let (_, grad) = backward(&params, &arch, &input, &target, loss).unwrap();
            assert!(grad.is_finite());
            let h = 1e-5;
            for idx in 0..arch.param_count() {
                let mut plus = params.clone();
                plus.data[idx] += h;
                let mut minus = params.clone();
                minus.data[idx] -= h;
                let lp = eval_loss(&plus, &arch, &input, &target, loss);
                let lm = eval_loss(&minus, &arch, &input, &target, loss);
                let fd = (lp - lm) / (2.0 * h);
                let g = grad.data[idx];
                let denom = g.abs().max(fd.abs()).max(1e-6);
                assert!(
                    (g - fd).abs() / denom <= 1e-4,
                    "case {case}, idx {idx}: analytic {g} vs fd {fd}"
                );
            }
        }
    }

    fn eval_loss(
        params: &MlpParams,
        arch: &MlpArchitecture,
        input: &[f64],
        target: &[f64],
        loss: LossKind,
    ) -> f64 {
        let out = forward(params, arch, input).unwrap();
        out.iter()
            .zip(target)
            .map(|(&y, &t)| loss_value(loss, y, t))
            .sum()
    }

    #[test]
    fn output_gradient_matches_loss_gradient_route() {
        // for squared loss with target y - 1 the chain factor is exactly 1:
        // grad l = (yhat - (yhat - 1)) * dyhat/dw = dyhat/dw
        let arch = MlpArchitecture::new(4, vec![5], 1).unwrap();
        let params = init_params(&arch, 21);
        let input = encode_input(9, 4).unwrap();
        let mut ws = Workspace::new(&arch);
        let mut g = vec![0.0; arch.param_count()];
        let yhat = output_gradient(&params, &arch, &input, &mut ws, &mut g).unwrap();
        let (_, grad) = backward(&params, &arch, &input, &[yhat - 1.0], LossKind::Squared).unwrap();
        for (a, b) in g.iter().zip(&grad.data) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}
