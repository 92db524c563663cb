//! First-order MAML over tasks drawn from a single formal language or from
//! the grammar zoo. Each task shuffles the payload vocabulary, adapts a
//! clone of the initialization on its support batches with SGD, and
//! contributes the gradient of its query loss (taken at the adapted
//! parameters) to the outer Adam update.

use crate::exec;
use crate::formal_langs::{LangError, LanguageSpec};
use crate::grammar_zoo::{SamplingPrior, Zoo};
use crate::neural::{
    adam_step, clip_global_norm, sgd_step, AdamState, ArchDescriptor, Batch, Gradients,
    ModelError, ModelParams, ParamSet,
};
use crate::rngs::{substream, Stream};
use crate::vocab::{Symbol, VocabMap};
use rand::Rng;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetaError {
    #[error("non-finite loss in {task} during {stage}")]
    NonFiniteLoss { task: String, stage: String },
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where tasks come from: a single language, or softmax draws over the zoo.
#[derive(Clone, Copy)]
pub enum TaskSource<'a> {
    Lang(LanguageSpec),
    Zoo { zoo: &'a Zoo, prior: SamplingPrior },
}

impl TaskSource<'_> {
    pub fn describe(&self) -> String {
        match self {
            TaskSource::Lang(spec) => spec.name.to_string(),
            TaskSource::Zoo { prior, .. } => format!("zoo(T={})", prior.temperature),
        }
    }
}

/// One meta-learning task: a payload-vocabulary shuffle plus support and
/// query strings already mapped into the task vocabulary.
#[derive(Clone, Debug)]
pub struct TaskInstance {
    pub vocab_map: VocabMap,
    pub support: Vec<Vec<Symbol>>,
    pub query: Vec<Vec<Symbol>>,
    pub source_desc: String,
}

#[derive(Clone, Debug)]
pub struct MetaConfig {
    pub arch: ArchDescriptor,
    /// Inner-loop SGD learning rate.
    pub inner_lr: f32,
    /// Outer-loop Adam learning rate.
    pub outer_lr: f32,
    /// Total number of tasks (inner loops) consumed.
    pub inner_loops_total: usize,
    /// Tasks whose meta-gradients are combined per outer step.
    pub meta_accumulation: usize,
    pub support_strings: usize,
    pub support_batch: usize,
    pub query_strings: usize,
    pub query_batch: usize,
    pub support_lengths: (usize, usize),
    pub query_lengths: (usize, usize),
    /// Global-norm clip applied to inner-step gradients and to the combined
    /// meta-gradient. Infinite disables clipping.
    pub grad_clip: f64,
    /// Average (rather than sum) the accumulated meta-gradients, keeping the
    /// outer learning rate's meaning independent of the accumulation count.
    pub average_accumulated: bool,
    pub seed: u64,
}

impl MetaConfig {
    /// Published hyperparameters: 25 000 inner loops, accumulation 2, inner
    /// SGD at 1.0, outer Adam at 1e-4, 200 support strings in 20 batches of
    /// 10 with lengths 1-10, 2 query batches of 10 with lengths 11-20.
    pub fn paper_defaults(arch: ArchDescriptor, seed: u64) -> MetaConfig {
        MetaConfig {
            arch,
            inner_lr: 1.0,
            outer_lr: 1e-4,
            inner_loops_total: 25_000,
            meta_accumulation: 2,
            support_strings: 200,
            support_batch: 10,
            query_strings: 20,
            query_batch: 10,
            support_lengths: (1, 10),
            query_lengths: (11, 20),
            grad_clip: 5.0,
            average_accumulated: true,
            seed,
        }
    }

    /// Same schedule at desk scale: 2000 tasks.
    pub fn desk(arch: ArchDescriptor, seed: u64) -> MetaConfig {
        MetaConfig {
            inner_loops_total: 2_000,
            ..MetaConfig::paper_defaults(arch, seed)
        }
    }
}

/// Draws a fresh task: new vocabulary shuffle, fresh support/query samples.
/// Language sources sample by language length; zoo sources draw a grammar
/// under the prior, sample support+query strings from it, and split them by
/// token length (shortest fraction as support).
pub fn make_task<R: Rng>(
    source: &TaskSource,
    cfg: &MetaConfig,
    rng: &mut R,
) -> Result<TaskInstance, MetaError> {
    let vocab_map = VocabMap::shuffled(rng);
    let (support_raw, query_raw, source_desc) = match source {
        TaskSource::Lang(spec) => {
            let (lo, hi) = cfg.support_lengths;
            let support = if cfg.support_strings > 0 {
                spec.sample_by_length_range(lo, hi, cfg.support_strings, rng)?
            } else {
                Vec::new()
            };
            let (qlo, qhi) = cfg.query_lengths;
            let query = spec.sample_by_length_range(qlo, qhi, cfg.query_strings, rng)?;
            (
                support.into_iter().map(|s| s.symbols).collect::<Vec<_>>(),
                query.into_iter().map(|s| s.symbols).collect::<Vec<_>>(),
                spec.name.to_string(),
            )
        }
        TaskSource::Zoo { zoo, prior } => {
            let idx = zoo.sampler(*prior).sample_index(rng);
            let grammar = &zoo.grammars[idx];
            let total = cfg.support_strings + cfg.query_strings;
            let mut strings: Vec<Vec<Symbol>> =
                (0..total).map(|_| grammar.sample_string(rng)).collect();
            // stable sort by token length: short strings play the support
            // role, long ones the query role
            strings.sort_by_key(|s| s.len());
            let query = strings.split_off(cfg.support_strings);
            (strings, query, format!("zoo[{idx}]"))
        }
    };
    Ok(TaskInstance {
        support: support_raw.iter().map(|s| vocab_map.map_seq(s)).collect(),
        query: query_raw.iter().map(|s| vocab_map.map_seq(s)).collect(),
        vocab_map,
        source_desc,
    })
}

/// Outcome of one inner loop.
pub struct InnerResult {
    pub adapted: ModelParams<f32>,
    pub meta_grad: Gradients<f32>,
    pub query_loss: f32,
    pub sgd_steps: usize,
    pub clipped_steps: usize,
}

/// Adapts a clone of `init` on the task's support batches (single pass, one
/// SGD step per batch), then returns the gradient of the query loss at the
/// adapted parameters. First-order MAML: that gradient is later applied to
/// the initialization without differentiating through the inner steps.
pub fn inner_loop(
    init: &ModelParams<f32>,
    task: &TaskInstance,
    cfg: &MetaConfig,
) -> Result<InnerResult, MetaError> {
    let nonfinite = |stage: String| MetaError::NonFiniteLoss {
        task: task.source_desc.clone(),
        stage,
    };
    let mut adapted = init.clone();
    let mut sgd_steps = 0;
    let mut clipped_steps = 0;
    for (step, chunk) in task.support.chunks(cfg.support_batch).enumerate() {
        let batch = Batch::frame(chunk);
        let (_, mut grads) = adapted
            .loss_and_grad(&batch)
            .map_err(|_| nonfinite(format!("support step {step}")))?;
        let (_, clipped) = clip_global_norm(&mut grads, cfg.grad_clip);
        clipped_steps += clipped as usize;
        sgd_step(&mut adapted, &grads, cfg.inner_lr)?;
        sgd_steps += 1;
    }

    let mut meta_grad = init.zeros_like();
    let mut query_loss = 0.0f32;
    let query_batches: Vec<_> = task.query.chunks(cfg.query_batch).collect();
    let k = query_batches.len();
    for (qi, chunk) in query_batches.into_iter().enumerate() {
        let batch = Batch::frame(chunk);
        let (loss, grads) = adapted
            .loss_and_grad(&batch)
            .map_err(|_| nonfinite(format!("query batch {qi}")))?;
        query_loss += loss / k as f32;
        meta_grad.add_scaled(&grads, 1.0 / k as f32)?;
    }
    if !query_loss.is_finite() {
        return Err(nonfinite("query loss".into()));
    }
    Ok(InnerResult {
        adapted,
        meta_grad,
        query_loss,
        sgd_steps,
        clipped_steps,
    })
}

/// One row of the outer-loop training log.
#[derive(Clone, Debug, PartialEq)]
pub struct OuterLogRow {
    pub outer_step: usize,
    pub mean_query_loss: f32,
    pub grad_norm: f64,
    pub clipped: bool,
}

pub struct MetaOutcome {
    pub params: ModelParams<f32>,
    pub log: Vec<OuterLogRow>,
}

/// Runs the full meta-training schedule. The tasks of one accumulation
/// group may execute in parallel; their RNG streams are derived from the
/// task index and their gradients are reduced in task-index order, so the
/// result is bit-identical at any thread count.
pub fn meta_train(cfg: &MetaConfig, source: &TaskSource) -> Result<MetaOutcome, MetaError> {
    assert!(
        cfg.meta_accumulation >= 1
            && cfg.inner_loops_total % cfg.meta_accumulation == 0,
        "inner_loops_total must be a multiple of meta_accumulation"
    );
    cfg.arch.validate().expect("valid arch");
    let mut params: ModelParams<f32> =
        ParamSet::init(cfg.arch, &mut substream(cfg.seed, Stream::ParamInit, 0));
    let mut outer = AdamState::new(&params);
    let n_outer = cfg.inner_loops_total / cfg.meta_accumulation;
    let mut log = Vec::with_capacity(n_outer);

    for outer_step in 0..n_outer {
        let results = exec::maybe_par_map_indices(cfg.meta_accumulation, |a| {
            let task_idx = (outer_step * cfg.meta_accumulation + a) as u64;
            let mut rng = substream(cfg.seed, Stream::MetaTask, task_idx);
            let task = make_task(source, cfg, &mut rng)?;
            inner_loop(&params, &task, cfg)
        });

        let mut meta = params.zeros_like();
        let mut mean_query_loss = 0.0f32;
        for result in results {
            let result = result?;
            meta.add_scaled(&result.meta_grad, 1.0)?;
            mean_query_loss += result.query_loss / cfg.meta_accumulation as f32;
        }
        if cfg.average_accumulated {
            meta.scale(1.0 / cfg.meta_accumulation as f32);
        }
        let (grad_norm, clipped) = clip_global_norm(&mut meta, cfg.grad_clip);
        adam_step(&mut outer, &mut params, &meta, cfg.outer_lr)?;
        log.push(OuterLogRow {
            outer_step,
            mean_query_loss,
            grad_norm,
            clipped,
        });
    }
    Ok(MetaOutcome { params, log })
}

/// Training log as CSV: outer_step, mean_query_loss, grad_norm, clipped_flag.
pub fn write_log_csv(log: &[OuterLogRow], path: &Path) -> Result<(), MetaError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "outer_step,mean_query_loss,grad_norm,clipped_flag")?;
    for row in log {
        writeln!(
            file,
            "{},{},{},{}",
            row.outer_step,
            row.mean_query_loss,
            row.grad_norm,
            u8::from(row.clipped)
        )?;
    }
    Ok(())
}
