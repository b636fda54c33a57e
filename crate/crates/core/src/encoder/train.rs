//! Round-robin multi-task training.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{EncoderConfig, Mode};
use super::model::{loss_and_grads, Batch};
use super::optim::{clip_grad_norm, AdamConfig, AdamState};
use super::params::{ParamStore, TrainableMask};
use super::EncoderError;

/// Optimizer state, step counter and per-cell visit counts.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub step: u64,
    /// Intent ids visited by the schedule, in order.
    pub tasks: Vec<usize>,
    /// Steps taken per task (indexed like `tasks`) and mode.
    pub counters: Vec<[u64; 2]>,
    pub adam: AdamState,
}

impl TrainState {
    pub fn new(tasks: Vec<usize>) -> Self {
        let counters = vec![[0; 2]; tasks.len()];
        Self {
            step: 0,
            tasks,
            counters,
            adam: AdamState::default(),
        }
    }

    /// Schedule over all intents `0..n`.
    pub fn for_intents(n: usize) -> Self {
        Self::new((0..n).collect())
    }
}

/// Cell for the next step: tasks in order, tag before gen, cycling through
/// all `2·|tasks|` cells.
pub fn schedule_next(state: &TrainState) -> (usize, Mode) {
    let cells = 2 * state.tasks.len() as u64;
    let cell = (state.step % cells) as usize;
    let mode = if cell.is_multiple_of(2) { Mode::Tag } else { Mode::Gen };
    (state.tasks[cell / 2], mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepOptions {
    pub adam: AdamConfig,
    /// Global gradient-norm clip.
    pub clip: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            adam: AdamConfig::default(),
            clip: 1.0,
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: u64,
    pub task: usize,
    pub mode: Mode,
    pub loss: f64,
    /// Norm before clipping.
    pub grad_norm: f64,
}

/// Runs one optimizer step on `batch`, which must belong to the cell the
/// schedule expects. Frozen tensors (outside `mask`) are neither clipped
/// nor updated.
pub fn train_step(
    cfg: &EncoderConfig,
    store: &mut ParamStore,
    state: &mut TrainState,
    batch: &Batch,
    opts: &StepOptions,
    mask: Option<&TrainableMask>,
) -> Result<StepReport, EncoderError> {
    let expected = schedule_next(state);
    if (batch.intent, batch.mode) != expected {
        return Err(EncoderError::ScheduleMismatch {
            expected,
            found: (batch.intent, batch.mode),
        });
    }
    let (loss, mut grads) = loss_and_grads(cfg, store, batch)?;
    if let Some(mask) = mask {
        for id in 0..store.len() {
            if !mask.contains(id) {
                grads.clear(id);
            }
        }
    }
    if !loss.is_finite() || !grads.all_finite() {
        return Err(EncoderError::NonFiniteGradient(format!("step {}", state.step)));
    }
    let grad_norm = clip_grad_norm(&mut grads, opts.clip);
    state.adam.step(store, &grads, mask, &opts.adam);
    let task_pos = (state.step % (2 * state.tasks.len() as u64)) as usize / 2;
    state.counters[task_pos][batch.mode.index()] += 1;
    let report = StepReport {
        step: state.step,
        task: batch.intent,
        mode: batch.mode,
        loss,
        grad_norm,
    };
    state.step += 1;
    Ok(report)
}

/// An encoded training example: input ids and one target per scored
/// position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub input: Vec<u32>,
    pub target: Vec<u32>,
}

/// Encoded examples of one intent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaskData {
    pub tag: Vec<Example>,
    pub gen: Vec<Example>,
}

impl TaskData {
    pub fn mode(&self, z: Mode) -> &[Example] {
        match z {
            Mode::Tag => &self.tag,
            Mode::Gen => &self.gen,
        }
    }
}

/// Epoch-wise shuffled batches for each (task, mode) cell.
pub struct BatchSampler {
    rng: ChaCha8Rng,
    orders: Vec<[(Vec<usize>, usize); 2]>,
}

impl BatchSampler {
    pub fn new(data: &[TaskData], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let orders = data
            .iter()
            .map(|d| {
                Mode::BOTH.map(|z| {
                    let mut o: Vec<usize> = (0..d.mode(z).len()).collect();
                    o.shuffle(&mut rng);
                    (o, 0)
                })
            })
            .collect();
        Self { rng, orders }
    }

    /// Next `size` examples of cell (`task_pos`, `z`); empty if the cell has
    /// no data.
    pub fn next<'a>(&mut self, data: &'a [TaskData], task_pos: usize, z: Mode, size: usize) -> Vec<&'a Example> {
        let examples = data[task_pos].mode(z);
        if examples.is_empty() {
            return vec![];
        }
        let (order, cursor) = &mut self.orders[task_pos][z.index()];
        let mut out = Vec::with_capacity(size);
        while out.len() < size.min(examples.len()) {
            if *cursor == order.len() {
                order.shuffle(&mut self.rng);
                *cursor = 0;
            }
            out.push(&examples[order[*cursor]]);
            *cursor += 1;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOptions {
    pub steps: u64,
    pub batch_size: usize,
    pub step: StepOptions,
    /// Wall-clock cap in seconds; training stops early once exceeded.
    pub time_limit_secs: Option<f64>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            steps: 2000,
            batch_size: 32,
            step: StepOptions::default(),
            time_limit_secs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub steps: u64,
    pub elapsed: Duration,
    pub final_losses: Vec<[f64; 2]>,
    pub stopped_by_time: bool,
}

/// Trains for `opts.steps` scheduled steps. `data` is indexed like
/// `state.tasks`. Cells without examples still consume their step.
pub fn train(
    cfg: &EncoderConfig,
    store: &mut ParamStore,
    state: &mut TrainState,
    data: &[TaskData],
    opts: &TrainOptions,
    mask: Option<&TrainableMask>,
    mut on_step: impl FnMut(&StepReport),
) -> Result<TrainSummary, EncoderError> {
    if data.len() != state.tasks.len() {
        return Err(EncoderError::ShapeMismatch(format!(
            "{} task datasets for {} scheduled tasks",
            data.len(),
            state.tasks.len()
        )));
    }
    let start = Instant::now();
    let mut sampler = BatchSampler::new(data, cfg.seed ^ state.step);
    let mut final_losses = vec![[f64::NAN; 2]; data.len()];
    let mut stopped_by_time = false;
    let mut done = 0;
    while done < opts.steps {
        if let Some(limit) = opts.time_limit_secs {
            if start.elapsed().as_secs_f64() > limit {
                stopped_by_time = true;
                break;
            }
        }
        let (intent, z) = schedule_next(state);
        let pos = (state.step % (2 * state.tasks.len() as u64)) as usize / 2;
        let examples = sampler.next(data, pos, z, opts.batch_size);
        let batch = Batch {
            intent,
            mode: z,
            inputs: examples.iter().map(|e| e.input.clone()).collect(),
            targets: examples.iter().map(|e| e.target.clone()).collect(),
        };
        let report = train_step(cfg, store, state, &batch, &opts.step, mask)?;
        if !examples.is_empty() {
            final_losses[pos][z.index()] = report.loss;
        }
        on_step(&report);
        done += 1;
    }
    Ok(TrainSummary {
        steps: done,
        elapsed: start.elapsed(),
        final_losses,
        stopped_by_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_cycles_all_cells() {
        let mut st = TrainState::for_intents(3);
        let mut seen = vec![];
        for _ in 0..6 {
            seen.push(schedule_next(&st));
            st.step += 1;
        }
        assert_eq!(
            seen,
            vec![
                (0, Mode::Tag),
                (0, Mode::Gen),
                (1, Mode::Tag),
                (1, Mode::Gen),
                (2, Mode::Tag),
                (2, Mode::Gen)
            ]
        );
        assert_eq!(schedule_next(&st), (0, Mode::Tag));
        let sub = TrainState::new(vec![4, 6]);
        assert_eq!(schedule_next(&sub), (4, Mode::Tag));
    }

    #[test]
    fn sampler_covers_epoch_before_repeating() {
        let data = vec![TaskData {
            tag: (0..5)
                .map(|i| Example {
                    input: vec![i],
                    target: vec![0],
                })
                .collect(),
            gen: vec![],
        }];
        let mut s = BatchSampler::new(&data, 1);
        let mut first: Vec<u32> = s.next(&data, 0, Mode::Tag, 5).iter().map(|e| e.input[0]).collect();
        first.sort();
        assert_eq!(first, vec![0, 1, 2, 3, 4]);
        assert!(s.next(&data, 0, Mode::Gen, 4).is_empty());
        assert_eq!(s.next(&data, 0, Mode::Tag, 9).len(), 5);
    }
}
