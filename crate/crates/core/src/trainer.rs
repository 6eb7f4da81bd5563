//! Training loop: AdamW with cosine-annealed learning rate, early stopping
//! on validation loss, best-epoch checkpoint restoration.

use crate::datagen::{Dataset, TimeSeriesInstance};
use crate::error::{Error, Result};
use crate::floatfmt;
use crate::kernels;
use crate::net::Network;
use crate::seeds;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Hyperparameters; the defaults are the benchmark protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Epochs without a validation-loss improvement before stopping.
    pub patience: usize,
    #[serde(serialize_with = "floatfmt::ser_f64")]
    pub lr0: f64,
    #[serde(serialize_with = "floatfmt::ser_f64")]
    pub lr_min: f64,
    #[serde(serialize_with = "floatfmt::ser_f64")]
    pub beta1: f64,
    #[serde(serialize_with = "floatfmt::ser_f64")]
    pub beta2: f64,
    #[serde(serialize_with = "floatfmt::ser_f64")]
    pub eps: f64,
    #[serde(serialize_with = "floatfmt::ser_f64")]
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 100,
            patience: 10,
            lr0: 1e-3,
            lr_min: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-4,
            batch_size: 64,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patience >= self.max_epochs {
            return Err(Error::InvalidSpec("patience must be below max_epochs".into()));
        }
        if self.lr_min < 0.0 || self.lr0 <= 0.0 {
            return Err(Error::InvalidSpec("learning rates must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidSpec("batch_size must be at least 1".into()));
        }
        Ok(())
    }

    /// Cosine annealing from `lr0` to `lr_min`, anchored to `max_epochs`
    /// regardless of early stopping. `epoch` is zero-based.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let t = epoch as f64 / self.max_epochs as f64;
        self.lr_min + 0.5 * (self.lr0 - self.lr_min) * (1.0 + (std::f64::consts::PI * t).cos())
    }
}

/// One row of the epoch table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

/// Outcome of a training run; the returned network is the best-epoch
/// checkpoint by validation loss, not the last epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// 1-based epoch that minimized validation loss.
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub test_accuracy: f64,
    pub test_weighted_f1: f64,
    pub wall_seconds: f64,
}

/// AdamW: Adam moments with decoupled weight decay.
struct AdamW {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamW {
    fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], step: 0 }
    }

    fn step(&mut self, theta: &mut [f64], grad: &[f64], lr: f64, cfg: &TrainConfig) {
        self.step += 1;
        let b1 = cfg.beta1;
        let b2 = cfg.beta2;
        let bc1 = 1.0 - b1.powi(self.step as i32);
        let bc2 = 1.0 - b2.powi(self.step as i32);
        for i in 0..theta.len() {
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * grad[i];
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * grad[i] * grad[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            theta[i] -= lr * (mhat / (vhat.sqrt() + cfg.eps) + cfg.weight_decay * theta[i]);
        }
    }
}

fn batch_of<'a>(split: &'a [TimeSeriesInstance], idx: &[usize]) -> Vec<(&'a [f64], u8)> {
    idx.iter().map(|&i| (split[i].values.as_slice(), split[i].label)).collect()
}

/// Mean cross-entropy and accuracy of a network over a split.
fn split_loss_acc(net: &Network, split: &[TimeSeriesInstance]) -> Result<(f64, f64)> {
    let per: Vec<(f64, bool)> = split
        .par_iter()
        .map(|inst| {
            let out = net.forward(&inst.values)?;
            let loss = kernels::log_sum_exp(&out.logits) - out.logits[inst.label as usize];
            Ok((loss, out.predicted_class == inst.label))
        })
        .collect::<Result<_>>()?;
    let n = split.len() as f64;
    let loss: f64 = per.iter().map(|(l, _)| l).sum::<f64>() / n;
    let acc = per.iter().filter(|(_, ok)| *ok).count() as f64 / n;
    Ok((loss, acc))
}

/// Runs the training protocol and reports test accuracy and weighted F1.
///
/// Deterministic given `cfg.seed`: the shuffling stream is fixed and batch
/// gradients reduce in sample order.
pub fn train(net: Network, data: &Dataset, cfg: &TrainConfig) -> Result<(Network, TrainReport)> {
    cfg.validate()?;
    if data.train.is_empty() || data.val.is_empty() || data.test.is_empty() {
        return Err(Error::InvalidInput("dataset splits must be nonempty".into()));
    }
    let start = std::time::Instant::now();
    let mut net = net;
    let mut opt = AdamW::new(net.param_count());
    let mut shuffle_rng = seeds::rng_from(cfg.seed, "shuffle", 0);
    let mut order: Vec<usize> = (0..data.train.len()).collect();

    let mut epochs = Vec::new();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut best_theta = net.theta().to_vec();
    let mut since_best = 0usize;
    let mut stopped_early = false;

    for epoch in 0..cfg.max_epochs {
        let lr = cfg.lr_at(epoch);
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = batch_of(&data.train, chunk);
            let stats = net.batch_grad(&batch)?;
            if !stats.mean_loss.is_finite() {
                return Err(Error::Divergence {
                    epoch: epoch + 1,
                    detail: format!("batch loss {}", stats.mean_loss),
                });
            }
            loss_sum += stats.mean_loss * batch.len() as f64;
            correct += stats.correct;
            opt.step(net.theta_mut(), &stats.grad, lr, cfg);
        }
        let n_train = data.train.len() as f64;
        let (val_loss, val_acc) = split_loss_acc(&net, &data.val)?;
        if !val_loss.is_finite() {
            return Err(Error::Divergence { epoch: epoch + 1, detail: format!("validation loss {val_loss}") });
        }
        epochs.push(EpochStats {
            epoch: epoch + 1,
            lr,
            train_loss: loss_sum / n_train,
            train_acc: correct as f64 / n_train,
            val_loss,
            val_acc,
        });

        if val_loss < best_loss {
            best_loss = val_loss;
            best_epoch = epoch + 1;
            best_theta.copy_from_slice(net.theta());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    net.theta_mut().copy_from_slice(&best_theta);
    let (test_accuracy, test_weighted_f1) = evaluate(&net, &data.test)?;
    let report = TrainReport {
        epochs,
        best_epoch,
        stopped_early,
        test_accuracy,
        test_weighted_f1,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((net, report))
}

/// Accuracy and support-weighted F1 of a network over a split.
pub fn evaluate(net: &Network, split: &[TimeSeriesInstance]) -> Result<(f64, f64)> {
    if split.is_empty() {
        return Err(Error::InvalidInput("split must be nonempty".into()));
    }
    let preds: Vec<u8> = split
        .par_iter()
        .map(|inst| Ok(net.forward(&inst.values)?.predicted_class))
        .collect::<Result<_>>()?;
    let labels: Vec<u8> = split.iter().map(|i| i.label).collect();
    Ok(accuracy_and_weighted_f1(&labels, &preds))
}

/// `accuracy = fraction correct`; `weighted F1 = Σ_c (support_c / total) · F1_c`
/// with per-class F1 the harmonic mean of precision and recall, and an
/// undefined per-class F1 counted as 0.
pub fn accuracy_and_weighted_f1(labels: &[u8], preds: &[u8]) -> (f64, f64) {
    assert_eq!(labels.len(), preds.len());
    let total = labels.len() as f64;
    let correct = labels.iter().zip(preds).filter(|(l, p)| l == p).count() as f64;
    let mut weighted = 0.0;
    for class in 0..2u8 {
        let support = labels.iter().filter(|&&l| l == class).count() as f64;
        let predicted = preds.iter().filter(|&&p| p == class).count() as f64;
        let tp = labels
            .iter()
            .zip(preds)
            .filter(|(&l, &p)| l == class && p == class)
            .count() as f64;
        let f1 = if predicted == 0.0 || support == 0.0 || tp == 0.0 {
            0.0
        } else {
            let precision = tp / predicted;
            let recall = tp / support;
            2.0 * precision * recall / (precision + recall)
        };
        weighted += (support / total) * f1;
    }
    (correct / total, weighted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_dataset, Contrast, DatasetConfig, FeatureKind};
    use crate::net::Architecture;

    fn tiny_dataset(n_train: usize) -> Dataset {
        let mut config = DatasetConfig::benchmark(Contrast::Amplitude, FeatureKind::Sine, 7);
        config.n_train = n_train;
        config.n_val = 8;
        config.n_test = 8;
        generate_dataset(&config).unwrap()
    }

    fn quick_cfg() -> TrainConfig {
        TrainConfig { max_epochs: 4, patience: 2, batch_size: 8, seed: 1, ..TrainConfig::default() }
    }

    #[test]
    fn perfect_predictions_score_one() {
        let labels = vec![0, 1, 0, 1];
        let (acc, f1) = accuracy_and_weighted_f1(&labels, &labels);
        assert_eq!((acc, f1), (1.0, 1.0));
    }

    #[test]
    fn all_class_zero_on_balanced_split() {
        let labels = vec![0, 0, 1, 1];
        let preds = vec![0, 0, 0, 0];
        let (acc, f1) = accuracy_and_weighted_f1(&labels, &preds);
        assert_eq!(acc, 0.5);
        assert!((f1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_balanced_confusion_gives_equal_metrics() {
        // brute force over random symmetric, balanced confusion matrices:
        // c01 == c10 and equal class supports imply accuracy == weighted F1
        let mut rng = seeds::rng_from(5, "confusion", 0);
        use rand::Rng;
        for _ in 0..50 {
            let c00 = rng.gen_range(1usize..40);
            let cross = rng.gen_range(0usize..20);
            let c11 = c00;
            let mut labels = Vec::new();
            let mut preds = Vec::new();
            for (l, p, n) in [(0, 0, c00), (0, 1, cross), (1, 0, cross), (1, 1, c11)] {
                labels.extend(std::iter::repeat(l as u8).take(n));
                preds.extend(std::iter::repeat(p as u8).take(n));
            }
            let (acc, f1) = accuracy_and_weighted_f1(&labels, &preds);
            assert!((acc - f1).abs() < 1e-12, "acc {acc} f1 {f1}");
        }
    }

    #[test]
    fn cosine_schedule_spans_lr0_to_near_min() {
        let cfg = TrainConfig::default();
        assert!((cfg.lr_at(0) - cfg.lr0).abs() < 1e-15);
        assert!(cfg.lr_at(99) > cfg.lr_min);
        assert!(cfg.lr_at(99) < cfg.lr_at(50));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = TrainConfig::default();
        cfg.patience = cfg.max_epochs;
        assert!(cfg.validate().is_err());
        let cfg = TrainConfig { batch_size: 0, ..TrainConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let data = tiny_dataset(16);
        let cfg = quick_cfg();
        let run = || {
            let net = Network::init(
                Architecture { input_len: 150, ..Architecture::default() },
                3,
            )
            .unwrap();
            train(net, &data, &cfg).unwrap()
        };
        let (net_a, rep_a) = run();
        let (net_b, rep_b) = run();
        assert_eq!(rep_a, rep_b);
        assert_eq!(net_a, net_b);
    }

    #[test]
    fn returned_network_is_best_epoch_checkpoint() {
        let data = tiny_dataset(16);
        let cfg = TrainConfig { max_epochs: 6, patience: 5, batch_size: 8, seed: 2, ..TrainConfig::default() };
        let net = Network::init(Architecture::default(), 9).unwrap();
        let (best, report) = train(net, &data, &cfg).unwrap();
        let (val_loss, _) = split_loss_acc(&best, &data.val).unwrap();
        let reported_best = report
            .epochs
            .iter()
            .map(|e| e.val_loss)
            .fold(f64::INFINITY, f64::min);
        assert!((val_loss - reported_best).abs() < 1e-12);
        assert_eq!(
            report.best_epoch,
            report
                .epochs
                .iter()
                .min_by(|a, b| a.val_loss.partial_cmp(&b.val_loss).unwrap())
                .unwrap()
                .epoch
        );
    }

    #[test]
    fn patience_exhaustion_stops_training() {
        let data = tiny_dataset(8);
        // lr 0 cannot improve, so validation stalls immediately after epoch 1
        let cfg = TrainConfig {
            max_epochs: 30,
            patience: 3,
            lr0: 1e-12,
            lr_min: 0.0,
            batch_size: 8,
            seed: 4,
            ..TrainConfig::default()
        };
        let net = Network::init(Architecture::default(), 5).unwrap();
        let (_, report) = train(net, &data, &cfg).unwrap();
        assert!(report.stopped_early);
        let total = report.epochs.len();
        assert!(total < 30);
        assert!(report.best_epoch <= total - cfg.patience);
    }

    #[test]
    fn overfits_ten_samples_within_200_steps() {
        let data = tiny_dataset(10);
        let cfg = TrainConfig {
            max_epochs: 200,
            patience: 199,
            lr0: 3e-3,
            lr_min: 3e-3,
            batch_size: 10,
            seed: 6,
            ..TrainConfig::default()
        };
        // full-batch: one optimizer step per epoch, so 200 epochs = 200 steps
        let net = Network::init(Architecture::default(), 7).unwrap();
        let mut net = net;
        let mut opt = AdamW::new(net.param_count());
        let batch = batch_of(&data.train, &(0..10).collect::<Vec<_>>());
        let mut final_loss = f64::INFINITY;
        for step in 0..200 {
            let stats = net.batch_grad(&batch).unwrap();
            final_loss = stats.mean_loss;
            if final_loss < 0.01 {
                break;
            }
            opt.step(net.theta_mut(), &stats.grad, cfg.lr0, &cfg);
            let _ = step;
        }
        assert!(final_loss < 0.01, "loss stuck at {final_loss}");
    }

    use crate::seeds;
}
