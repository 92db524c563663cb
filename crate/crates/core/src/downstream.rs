//! Post-meta-training adaptation: train a meta-initialized or fresh model
//! on n sampled strings of a target language, n epochs of SGD followed by
//! m epochs of Adam. Downstream data uses the canonical (unshuffled)
//! vocabulary, matching how the model is later evaluated.

use crate::formal_langs::{CanonicalString, LangError, LangName, LanguageSpec};
use crate::neural::{
    adam_step, sgd_step, AdamState, Batch, ModelError, ModelParams,
};
use crate::rngs::{substream, Stream};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite loss on {lang} during {phase} epoch {epoch} batch {batch}")]
    NonFiniteLoss {
        lang: LangName,
        phase: &'static str,
        epoch: usize,
        batch: usize,
    },
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The published downstream schedule rows, keyed by training-set size:
/// (1, 5 SGD, 1 Adam), (10, 5, 1), (100, 10, 5); batch size 32, SGD at 1.0,
/// Adam at 0.0005.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainSchedule {
    pub n_strings: usize,
    pub sgd_epochs: usize,
    pub adam_epochs: usize,
    pub batch_size: usize,
    pub sgd_lr: f32,
    pub adam_lr: f32,
    /// Sampling depth range for the training strings.
    pub depth_range: (usize, usize),
}

impl TrainSchedule {
    /// Published row for n in {1, 10, 100}.
    pub fn for_n(n_strings: usize) -> Option<TrainSchedule> {
        let (sgd_epochs, adam_epochs) = match n_strings {
            1 => (5, 1),
            10 => (5, 1),
            100 => (10, 5),
            _ => return None,
        };
        Some(TrainSchedule::custom(n_strings, sgd_epochs, adam_epochs))
    }

    /// Explicit override for non-published sizes.
    pub fn custom(n_strings: usize, sgd_epochs: usize, adam_epochs: usize) -> TrainSchedule {
        TrainSchedule {
            n_strings,
            sgd_epochs,
            adam_epochs,
            batch_size: 32,
            sgd_lr: 1.0,
            adam_lr: 5e-4,
            depth_range: (1, 10),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    /// Checkpoint hash of the initialization, or "unmetatrained".
    pub init: String,
    pub lang: LangName,
    pub n_strings: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub params: ModelParams<f32>,
    pub provenance: Provenance,
    /// Optimizer steps actually taken (epochs x batches per epoch).
    pub steps_taken: usize,
}

/// Training strings: depth sampled uniformly over the schedule's range,
/// then a string sampled uniformly at that depth. Duplicates are kept.
pub fn sample_train_set<R: Rng>(
    lang: &LanguageSpec,
    n: usize,
    depth_range: (usize, usize),
    rng: &mut R,
) -> Result<Vec<CanonicalString>, LangError> {
    lang.sample_by_length_range(depth_range.0, depth_range.1, n, rng)
}

/// Runs the SGD-then-Adam schedule over a freshly sampled training set.
/// The set is frozen before the first epoch; only the batch order
/// reshuffles between epochs.
pub fn train(
    init: ModelParams<f32>,
    lang: &LanguageSpec,
    schedule: &TrainSchedule,
    seed: u64,
    init_label: &str,
) -> Result<TrainedModel, TrainError> {
    let mut rng = substream(seed, Stream::Downstream, 0);
    let strings = sample_train_set(lang, schedule.n_strings, schedule.depth_range, &mut rng)?;
    let batches: Vec<Batch> = strings
        .chunks(schedule.batch_size)
        .map(|chunk| {
            let seqs: Vec<_> = chunk.iter().map(|s| s.symbols.clone()).collect();
            Batch::frame(&seqs)
        })
        .collect();

    let mut params = init;
    let mut steps_taken = 0;
    let mut order: Vec<usize> = (0..batches.len()).collect();
    let mut shuffle = |order: &mut Vec<usize>, rng: &mut rand_chacha::ChaCha8Rng| {
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
    };

    for epoch in 0..schedule.sgd_epochs {
        shuffle(&mut order, &mut rng);
        for (step, &bi) in order.iter().enumerate() {
            let (loss, grads) =
                params
                    .loss_and_grad(&batches[bi])
                    .map_err(|_| TrainError::NonFiniteLoss {
                        lang: lang.name,
                        phase: "sgd",
                        epoch,
                        batch: step,
                    })?;
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    lang: lang.name,
                    phase: "sgd",
                    epoch,
                    batch: step,
                });
            }
            sgd_step(&mut params, &grads, schedule.sgd_lr)?;
            steps_taken += 1;
        }
    }

    let mut adam = AdamState::new(&params);
    for epoch in 0..schedule.adam_epochs {
        shuffle(&mut order, &mut rng);
        for (step, &bi) in order.iter().enumerate() {
            let (loss, grads) =
                params
                    .loss_and_grad(&batches[bi])
                    .map_err(|_| TrainError::NonFiniteLoss {
                        lang: lang.name,
                        phase: "adam",
                        epoch,
                        batch: step,
                    })?;
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    lang: lang.name,
                    phase: "adam",
                    epoch,
                    batch: step,
                });
            }
            adam_step(&mut adam, &mut params, &grads, schedule.adam_lr)?;
            steps_taken += 1;
        }
    }

    Ok(TrainedModel {
        params,
        provenance: Provenance {
            init: init_label.to_string(),
            lang: lang.name,
            n_strings: schedule.n_strings,
            seed,
        },
        steps_taken,
    })
}
