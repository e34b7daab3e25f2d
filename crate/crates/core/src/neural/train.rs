//! Minibatch Adam training on sampled dlog-parity (or all-bits) data.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::neural::adam::{adam_step, AdamHyper, AdamState};
use crate::neural::{
    backward_accumulate, encode_into, forward_ws, init_params, LossKind, MlpArchitecture,
    MlpGradient, Workspace,
};
use crate::seeds::child_seed;
use crate::zp::GroupSpec;

/// What the network predicts: the parity bit, or every bit of the dlog.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Parity,
    AllBits,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub dataset_size: usize,
    pub train_fraction: f64,
    pub batch: usize,
    pub epochs: usize,
    pub hyper: AdamHyper,
    pub seed: u64,
    pub targets: TargetKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dataset_size: 5000,
            train_fraction: 0.7,
            batch: 100,
            epochs: 2000,
            hyper: AdamHyper::default(),
            seed: 0,
            targets: TargetKind::Parity,
        }
    }
}

/// Sampled inputs with their bit targets; the first `n_train` rows are the
/// training split.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub xs: Vec<u64>,
    pub targets: Vec<Vec<f64>>,
    pub n_train: usize,
}

/// Draws x_1..x_m uniformly from Z_p^* (with replacement) and labels them
/// with the parity bit (or every bit) of log_base x.
pub fn sample_dataset(
    group: GroupSpec,
    base: u64,
    arch: &MlpArchitecture,
    cfg: &TrainConfig,
) -> Result<Dataset> {
    let p = group.p();
    if cfg.dataset_size == 0 || cfg.batch == 0 || cfg.dataset_size < cfg.batch {
        return Err(Error::Config(
            "dataset must hold at least one batch".into(),
        ));
    }
    if !(0.0..1.0).contains(&cfg.train_fraction) || cfg.train_fraction == 0.0 {
        return Err(Error::Config("train fraction must lie in (0, 1)".into()));
    }
    match cfg.targets {
        TargetKind::Parity if arch.output_width != 1 => {
            return Err(Error::Config("parity target needs one output unit".into()))
        }
        TargetKind::AllBits => {
            let need = 64 - (p - 1).leading_zeros() as usize;
            if arch.output_width < need {
                return Err(Error::Config(format!(
                    "all-bits target needs {need} output units, architecture has {}",
                    arch.output_width
                )));
            }
        }
        _ => {}
    }
    let inv = group.mod_inverse(base)?;
    let mut rng = ChaCha12Rng::seed_from_u64(child_seed(cfg.seed, 0, 0));
    let mut xs = Vec::with_capacity(cfg.dataset_size);
    let mut targets = Vec::with_capacity(cfg.dataset_size);
    for _ in 0..cfg.dataset_size {
        let x = rng.gen_range(1..p);
        let dlog = group.mul(inv, x);
        let t = match cfg.targets {
            TargetKind::Parity => vec![(dlog & 1) as f64],
            TargetKind::AllBits => (0..arch.output_width)
                .map(|i| ((dlog >> i) & 1) as f64)
                .collect(),
        };
        xs.push(x);
        targets.push(t);
    }
    let n_train = ((cfg.dataset_size as f64) * cfg.train_fraction).round() as usize;
    let n_train = n_train.clamp(1, cfg.dataset_size - 1);
    Ok(Dataset {
        xs,
        targets,
        n_train,
    })
}

/// One epoch row of the training history.
#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
    /// Per-output-bit test accuracy; empty for the parity target.
    pub per_bit_test_acc: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainHistory {
    pub stats: Vec<EpochStats>,
}

impl TrainHistory {
    pub fn final_test_accuracy(&self) -> f64 {
        self.stats.last().map(|s| s.test_acc).unwrap_or(f64::NAN)
    }
}

/// Trains with minibatch Adam under binary cross-entropy (summed over
/// output bits) and reports per-epoch statistics. Train loss/accuracy are
/// running means over the epoch's batches; test statistics are full
/// evaluations of the held-out split.
pub fn train(
    arch: &MlpArchitecture,
    group: GroupSpec,
    base: u64,
    cfg: &TrainConfig,
) -> Result<TrainHistory> {
    if cfg.epochs == 0 {
        return Err(Error::Config("need at least one epoch".into()));
    }
    let data = sample_dataset(group, base, arch, cfg)?;
    let loss = LossKind::BinaryCrossEntropy;
    let mut params = init_params(arch, child_seed(cfg.seed, 1, 0));
    let mut state = AdamState::new(arch.param_count());
    let mut shuffle_rng = ChaCha12Rng::seed_from_u64(child_seed(cfg.seed, 2, 0));
    let mut order: Vec<usize> = (0..data.n_train).collect();
    let mut ws = Workspace::new(arch);
    let mut grad = MlpGradient::zeros(arch.param_count());
    let mut input = vec![0.0; arch.input_width];
    let out_w = arch.output_width;
    let mut stats = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut train_loss = 0.0;
        let mut train_hits = 0usize;
        for chunk in order.chunks(cfg.batch) {
            grad.data.fill(0.0);
            let scale = 1.0 / chunk.len() as f64;
            for &idx in chunk {
                encode_into(data.xs[idx], &mut input)?;
                train_loss += backward_accumulate(
                    &params,
                    arch,
                    &input,
                    &data.targets[idx],
                    loss,
                    &mut ws,
                    &mut grad.data,
                    scale,
                )?;
                let out = ws.output();
                train_hits += out
                    .iter()
                    .zip(&data.targets[idx])
                    .filter(|(&y, &t)| (y >= 0.5) == (t == 1.0))
                    .count();
            }
            adam_step(&mut params, &grad, &mut state, &cfg.hyper)?;
        }
        let train_n = data.n_train;
        let (test_loss, test_acc, per_bit) = evaluate(
            &params,
            arch,
            &data,
            loss,
            &mut ws,
            &mut input,
        )?;
        stats.push(EpochStats {
            epoch,
            train_loss: train_loss / train_n as f64,
            train_acc: train_hits as f64 / (train_n * out_w) as f64,
            test_loss,
            test_acc,
            per_bit_test_acc: if matches!(cfg.targets, TargetKind::AllBits) {
                per_bit
            } else {
                Vec::new()
            },
        });
    }
    Ok(TrainHistory { stats })
}

fn evaluate(
    params: &crate::neural::MlpParams,
    arch: &MlpArchitecture,
    data: &Dataset,
    loss: LossKind,
    ws: &mut Workspace,
    input: &mut [f64],
) -> Result<(f64, f64, Vec<f64>)> {
    let out_w = arch.output_width;
    let test = data.n_train..data.xs.len();
    let n_test = test.len();
    let mut total_loss = 0.0;
    let mut bit_hits = vec![0usize; out_w];
    for idx in test {
        encode_into(data.xs[idx], input)?;
        forward_ws(params, arch, input, ws)?;
        let out = ws.output();
        for (b, (&y, &t)) in out.iter().zip(&data.targets[idx]).enumerate() {
            let yc = y.clamp(1e-12, 1.0 - 1e-12);
            total_loss += -(t * yc.ln() + (1.0 - t) * (1.0 - yc).ln());
            if (y >= 0.5) == (t == 1.0) {
                bit_hits[b] += 1;
            }
        }
        let _ = loss;
    }
    let per_bit: Vec<f64> = bit_hits
        .iter()
        .map(|&h| h as f64 / n_test as f64)
        .collect();
    let acc = bit_hits.iter().sum::<usize>() as f64 / (n_test * out_w) as f64;
    Ok((total_loss / n_test as f64, acc, per_bit))
}
