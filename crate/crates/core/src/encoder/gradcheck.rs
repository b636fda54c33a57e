//! Finite-difference verification of the hand-written backward pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{EncoderConfig, Mode};
use super::model::{batch_loss, loss_and_grads, scored_positions, Batch};
use super::params::ParamStore;
use super::vocab::{MASK_ID, SPECIALS};
use super::EncoderError;

/// Denominator floor of the relative error, so entries whose true gradient
/// is ~0 are judged by absolute error instead.
pub const REL_ERROR_FLOOR: f64 = 1e-5;

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub max_rel_error: f64,
    /// Tensor and flat index of the worst entry.
    pub worst: (String, usize),
    pub checked: usize,
    /// Max relative error per tensor, in store order.
    pub per_tensor: Vec<(String, f64)>,
}

/// Compares analytic gradients with central differences of step `h` for
/// every entry of every tensor reached by `batch` (unreached tensors must
/// have zero numeric gradient too, which is also checked).
pub fn gradcheck(cfg: &EncoderConfig, store: &ParamStore, batch: &Batch, h: f64) -> Result<GradcheckReport, EncoderError> {
    let (_, grads) = loss_and_grads(cfg, store, batch)?;
    let mut work = store.clone();
    let mut report = GradcheckReport {
        max_rel_error: 0.0,
        worst: (String::new(), 0),
        checked: 0,
        per_tensor: Vec::new(),
    };
    for id in 0..store.len() {
        let name = store.name(id).to_string();
        let analytic = grads.get(id);
        let mut worst: f64 = 0.0;
        for k in 0..store.tensor(id).len() {
            let orig = store.tensor(id).data[k];
            work.tensor_mut(id).data[k] = orig + h;
            let up = batch_loss(cfg, &work, batch)?;
            work.tensor_mut(id).data[k] = orig - h;
            let down = batch_loss(cfg, &work, batch)?;
            work.tensor_mut(id).data[k] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.map_or(0.0, |g| g[k]);
            let e = rel_error(a, numeric);
            if e > report.max_rel_error {
                report.max_rel_error = e;
                report.worst = (name.clone(), k);
            }
            worst = worst.max(e);
            report.checked += 1;
        }
        report.per_tensor.push((name, worst));
    }
    Ok(report)
}

/// Random batch for `intent`/`mode` with rows of 3..=6 tokens. Gen rows
/// hold two masks each.
pub fn random_batch(cfg: &EncoderConfig, intent: usize, mode: Mode, rows: usize, seed: u64) -> Batch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = SPECIALS.len() as u32..cfg.vocab_size as u32;
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for _ in 0..rows {
        let len = rng.gen_range(3..=6usize.min(cfg.max_seq_len));
        let mut row: Vec<u32> = (0..len).map(|_| rng.gen_range(words.clone())).collect();
        if mode == Mode::Gen {
            row[1] = MASK_ID;
            row[len - 1] = MASK_ID;
        }
        let classes = match mode {
            Mode::Tag => cfg.num_tags(),
            Mode::Gen => cfg.vocab_size,
        } as u32;
        let n = scored_positions(&row, mode).len();
        targets.push((0..n).map(|_| rng.gen_range(0..classes)).collect());
        inputs.push(row);
    }
    Batch {
        intent,
        mode,
        inputs,
        targets,
    }
}
