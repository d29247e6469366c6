use log::{debug, info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{adam_step, AdamState, Network, NnError, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Share of the data held out for early stopping; 0 disables it.
    pub validation_fraction: f64,
    pub learning_rate: f64,
}

impl TrainConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            batch_size: 64,
            epochs: 30,
            seed,
            patience: 5,
            validation_fraction: 0.1,
            learning_rate: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.batch_size == 0 {
            return Err(NnError::Config("batch_size must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(NnError::Config("epochs must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(NnError::Config(format!(
                "validation_fraction {} outside [0, 1)",
                self.validation_fraction
            )));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(NnError::Config(format!("learning_rate {} is invalid", self.learning_rate)));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::new(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (last one without validation).
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn train_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }
}

fn gather(x: &Tensor, idx: &[usize]) -> Result<Tensor, NnError> {
    let item = x.item_len();
    let mut data = Vec::with_capacity(idx.len() * item);
    for &i in idx {
        data.extend_from_slice(x.item(i));
    }
    let mut shape = x.shape().to_vec();
    shape[0] = idx.len();
    Tensor::new(&shape, data)
}

fn mean_loss(net: &Network, x: &Tensor, labels: &[usize], idx: &[usize], batch: usize) -> Result<f64, NnError> {
    let mut losses = vec![0.0; labels.len()];
    for chunk in idx.chunks(batch) {
        let ys: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
        for (&i, l) in chunk.iter().zip(net.losses(&gather(x, chunk)?, &ys)?) {
            losses[i] = l;
        }
    }
    Ok(ordered_mean(&losses, idx))
}

/// Sums in sample-index order so the result does not depend on batch order.
fn ordered_mean(losses: &[f64], idx: &[usize]) -> f64 {
    let mut sorted = idx.to_vec();
    sorted.sort_unstable();
    sorted.iter().map(|&i| losses[i]).sum::<f64>() / idx.len() as f64
}

/// Minibatch Adam on the mean cross-entropy. Samples are `x`'s leading
/// axis. A seeded shuffle holds out the validation share; training stops
/// after `patience` epochs without validation improvement and the best
/// parameters are restored.
pub fn train(net: &mut Network, x: &Tensor, labels: &[usize], cfg: &TrainConfig) -> Result<TrainHistory, NnError> {
    cfg.validate()?;
    if labels.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    if labels.len() != x.batch() {
        return Err(NnError::Shape(format!("{} labels for {} samples", labels.len(), x.batch())));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= net.classes()) {
        return Err(NnError::Label {
            label: bad,
            classes: net.classes(),
        });
    }
    if labels.iter().all(|&y| y == labels[0]) {
        warn!("training set holds a single class ({}); proceeding", labels[0]);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((labels.len() as f64) * cfg.validation_fraction).floor() as usize;
    let n_val = n_val.min(labels.len() - 1);
    let validation: Vec<usize> = order[..n_val].to_vec();
    let mut training: Vec<usize> = order[n_val..].to_vec();

    let mut adam = AdamState::new(net.params(), cfg.learning_rate);
    let mut history = TrainHistory {
        epochs: Vec::new(),
        best_epoch: 0,
    };
    let mut best: Option<(f64, Vec<Tensor>)> = None;
    let mut stale = 0;
    let mut losses = vec![0.0; labels.len()];
    for epoch in 0..cfg.epochs {
        training.shuffle(&mut rng);
        for batch in training.chunks(cfg.batch_size) {
            let xb = gather(x, batch)?;
            let yb: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let g = net.gradients(&xb, &yb, 1.0 / batch.len() as f64)?;
            for (&i, l) in batch.iter().zip(&g.losses) {
                losses[i] = *l;
            }
            adam_step(net.params_mut(), &g.params, &mut adam)?;
        }
        let train_loss = ordered_mean(&losses, &training);
        let validation_loss = if validation.is_empty() {
            None
        } else {
            Some(mean_loss(net, x, labels, &validation, cfg.batch_size)?)
        };
        debug!("epoch {epoch}: train loss {train_loss:.6}, validation loss {validation_loss:?}");
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            validation_loss,
        });
        match validation_loss {
            None => history.best_epoch = epoch,
            Some(v) => {
                if best.as_ref().is_none_or(|(b, _)| v < *b) {
                    best = Some((v, net.params().to_vec()));
                    history.best_epoch = epoch;
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= cfg.patience {
                        info!("early stop after epoch {epoch}; best epoch {}", history.best_epoch);
                        break;
                    }
                }
            }
        }
    }
    if let Some((_, params)) = best {
        net.set_params(params)?;
    }
    Ok(history)
}
