//! Training loop, optimizer, losses, metrics, synthetic data and the
//! stability experiment.

pub mod adam;
pub mod loss;
pub mod metrics;
pub mod stability;
pub mod synthetic;

pub use adam::{grad_norm, AdamState};
pub use metrics::{accuracy, argmax_rows, f1_binary, mean_average_precision};
pub use loss::{bce_loss, cross_entropy_loss, one_hot};
pub use stability::{stability_experiment, StabilityOutcome};
pub use synthetic::SyntheticTask;

use crate::error::Result;
use crate::model::FastModel;
use crate::rng::Rng;
use crate::tensor::{Scalar, Tape, Tensor};

/// One log row per optimization step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub step: u64,
    pub epoch: u64,
    pub loss: f64,
    pub grad_norm: f64,
    pub lr: f64,
    pub nan_flag: bool,
}

/// Learning-rate schedule hook.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LrSchedule {
    Constant,
    /// Halve the rate once training moves past the given epoch
    /// (e.g. `HalveAfter { epoch: 2 }` halves from epoch 3 on).
    HalveAfter { epoch: u64 },
}

impl LrSchedule {
    pub fn rate(&self, base: f64, epoch: u64) -> f64 {
        match self {
            LrSchedule::Constant => base,
            LrSchedule::HalveAfter { epoch: after } => {
                if epoch > *after {
                    base / 2.0
                } else {
                    base
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub steps: u64,
    /// Steps per epoch; only affects the epoch column and the schedule.
    pub steps_per_epoch: u64,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub schedule: LrSchedule,
}

impl TrainOptions {
    pub fn new(steps: u64, batch_size: usize, lr: f64, seed: u64) -> Self {
        TrainOptions {
            steps,
            steps_per_epoch: steps.max(1),
            batch_size,
            lr,
            seed,
            schedule: LrSchedule::Constant,
        }
    }
}

/// Train on the synthetic task with multi-label BCE against one-hot
/// targets. Deterministic given (options.seed, model); a non-finite loss
/// or gradient sets `nan_flag`, skips the update, and training continues
/// so divergence shows up as data rather than an abort.
pub fn train<T: Scalar>(
    model: &FastModel<T>,
    task: &SyntheticTask,
    options: &TrainOptions,
) -> Result<Vec<TrainRecord>> {
    let params = model.parameters();
    let mut adam = AdamState::new(&params, options.lr);
    let mut droppath_rng = Rng::new(options.seed ^ 0x517e_ad00);
    let mut records = Vec::with_capacity(options.steps as usize);

    for step in 0..options.steps {
        let epoch = 1 + step / options.steps_per_epoch.max(1);
        adam.lr = options.schedule.rate(options.lr, epoch);

        let (batch, labels) = task.batch::<T>(step * options.batch_size as u64, options.batch_size);
        let targets = one_hot::<T>(&labels, model.config.num_classes);

        model.zero_grads();
        let tape = Tape::new();
        let logits = model.forward(&tape, &batch, true, &mut droppath_rng)?;
        let loss = bce_loss(&tape, &logits, &targets)?;
        let loss_value = loss.item().to_f64();
        tape.backward(&loss)?;
        let gnorm = grad_norm(&params);

        let finite = loss_value.is_finite() && gnorm.is_finite();
        let mut applied = false;
        if finite {
            applied = adam.step(&params);
        }
        records.push(TrainRecord {
            step,
            epoch,
            loss: loss_value,
            grad_norm: gnorm,
            lr: adam.lr,
            nan_flag: !finite || !applied,
        });
    }
    Ok(records)
}

/// Train on an in-memory dataset (spectrogram, label) with per-epoch
/// seeded shuffling; used by the directory-data CLI path.
pub struct MemoryDataset<T: Scalar> {
    pub samples: Vec<(Tensor<T>, usize)>,
    pub classes: usize,
}

pub fn train_memory<T: Scalar>(
    model: &FastModel<T>,
    dataset: &MemoryDataset<T>,
    epochs: u64,
    options: &TrainOptions,
) -> Result<Vec<TrainRecord>> {
    if dataset.samples.is_empty() {
        return Err(crate::error::Error::Usage("empty dataset".into()));
    }
    let params = model.parameters();
    let mut adam = AdamState::new(&params, options.lr);
    let mut shuffle_rng = Rng::new(options.seed ^ 0x0da7a);
    let mut droppath_rng = Rng::new(options.seed ^ 0x517e_ad00);
    let mut records = Vec::new();
    let mut step = 0u64;

    for epoch in 1..=epochs {
        adam.lr = options.schedule.rate(options.lr, epoch);
        let mut order: Vec<usize> = (0..dataset.samples.len()).collect();
        shuffle_rng.shuffle(&mut order);
        for chunk in order.chunks(options.batch_size.max(1)) {
            let mut data = Vec::new();
            let mut labels = Vec::with_capacity(chunk.len());
            let shape = dataset.samples[chunk[0]].0.shape().to_vec();
            for &i in chunk {
                data.extend_from_slice(&dataset.samples[i].0.data());
                labels.push(dataset.samples[i].1);
            }
            let mut batch_shape = vec![chunk.len()];
            batch_shape.extend_from_slice(&shape);
            let batch = Tensor::new(data, &batch_shape);
            let targets = one_hot::<T>(&labels, dataset.classes);

            model.zero_grads();
            let tape = Tape::new();
            let logits = model.forward(&tape, &batch, true, &mut droppath_rng)?;
            let loss = bce_loss(&tape, &logits, &targets)?;
            let loss_value = loss.item().to_f64();
            tape.backward(&loss)?;
            let gnorm = grad_norm(&params);
            let finite = loss_value.is_finite() && gnorm.is_finite();
            let mut applied = false;
            if finite {
                applied = adam.step(&params);
            }
            records.push(TrainRecord {
                step,
                epoch,
                loss: loss_value,
                grad_norm: gnorm,
                lr: adam.lr,
                nan_flag: !finite || !applied,
            });
            step += 1;
        }
    }
    Ok(records)
}

/// CSV rows: `step,epoch,variant,lr,loss,grad_norm,nan` (LF endings).
pub fn records_to_csv(rows: &[(String, f64, TrainRecord)]) -> String {
    let mut out = String::from("step,epoch,variant,lr,loss,grad_norm,nan\n");
    for (variant, lr, r) in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{}\n",
            r.step,
            r.epoch,
            variant,
            lr,
            r.loss,
            r.grad_norm,
            u8::from(r.nan_flag)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build, ModelConfig};

    fn micro_config() -> ModelConfig {
        // smallest legal config: keeps unit tests fast
        ModelConfig::tiny(2)
    }

    #[test]
    fn lr_zero_freezes_model() {
        let model = build::<f32>(&micro_config(), 3).unwrap();
        let before: Vec<Vec<f32>> = model.parameters().iter().map(|p| p.to_vec()).collect();
        let task = SyntheticTask::new(2, micro_config().image_size, 9);
        let records = train(&model, &task, &TrainOptions::new(3, 2, 0.0, 1)).unwrap();
        let after: Vec<Vec<f32>> = model.parameters().iter().map(|p| p.to_vec()).collect();
        assert_eq!(before, after);
        assert!(records.iter().all(|r| !r.nan_flag));
    }

    #[test]
    fn same_seed_identical_record_streams() {
        let run = || {
            let model = build::<f32>(&micro_config(), 11).unwrap();
            let task = SyntheticTask::new(2, micro_config().image_size, 5);
            train(&model, &task, &TrainOptions::new(4, 2, 1e-3, 7)).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn adam_with_gradient_changes_parameters() {
        let model = build::<f32>(&micro_config(), 3).unwrap();
        let before: Vec<Vec<f32>> = model.parameters().iter().map(|p| p.to_vec()).collect();
        let task = SyntheticTask::new(2, micro_config().image_size, 9);
        train(&model, &task, &TrainOptions::new(1, 2, 1e-3, 1)).unwrap();
        let after: Vec<Vec<f32>> = model.parameters().iter().map(|p| p.to_vec()).collect();
        assert_ne!(before, after);
    }

    #[test]
    fn schedule_halves_after_epoch() {
        let s = LrSchedule::HalveAfter { epoch: 2 };
        assert_eq!(s.rate(1e-3, 1), 1e-3);
        assert_eq!(s.rate(1e-3, 2), 1e-3);
        assert_eq!(s.rate(1e-3, 3), 5e-4);
    }

    #[test]
    fn csv_schema() {
        let rows = vec![(
            "lips".to_string(),
            0.001,
            TrainRecord {
                step: 0,
                epoch: 1,
                loss: 0.75,
                grad_norm: 1.0,
                lr: 0.001,
                nan_flag: false,
            },
        )];
        let csv = records_to_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("step,epoch,variant,lr,loss,grad_norm,nan"));
        assert_eq!(lines.next(), Some("0,1,lips,0.001,0.750000,1.000000,0"));
    }
}
