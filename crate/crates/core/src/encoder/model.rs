//! Forward and backward passes.
//!
//! Rows are processed independently (no padding is materialized; attention
//! only ever sees a row's own tokens). Batches are split into fixed-size
//! row chunks whose gradients are summed in chunk order, so results do not
//! depend on the thread count.

use rayon::prelude::*;

use super::config::{EncoderConfig, Granularity, Mode, SparsityMode};
use super::ops::{self, LnCache};
use super::params::{expert_prefix, head_prefix, layer_prefix, router_name, ParamStore, Tensor};
use super::vocab::MASK_ID;
use super::EncoderError;

const ROW_CHUNK: usize = 8;

/// One training or inference batch. Every row shares the intent and mode.
///
/// `targets` is either empty (inference) or has one entry per row: a class
/// id per input position in tag mode, or a vocabulary id per `[MASK]` in
/// gen mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub intent: usize,
    pub mode: Mode,
    pub inputs: Vec<Vec<u32>>,
    pub targets: Vec<Vec<u32>>,
}

impl Batch {
    pub fn num_targets(&self) -> usize {
        self.targets.iter().map(Vec::len).sum()
    }

    fn validate(&self, cfg: &EncoderConfig) -> Result<(), EncoderError> {
        let bad = |m: String| Err(EncoderError::ShapeMismatch(m));
        if self.intent >= cfg.num_intents {
            return Err(EncoderError::UnknownIntent(self.intent));
        }
        if !self.targets.is_empty() && self.targets.len() != self.inputs.len() {
            return bad(format!("{} target rows for {} inputs", self.targets.len(), self.inputs.len()));
        }
        let classes = match self.mode {
            Mode::Tag => cfg.num_tags(),
            Mode::Gen => cfg.vocab_size,
        };
        for (i, row) in self.inputs.iter().enumerate() {
            if row.is_empty() || row.len() > cfg.max_seq_len {
                return bad(format!("row {i} has length {} (max {})", row.len(), cfg.max_seq_len));
            }
            if let Some(&id) = row.iter().find(|&&id| id as usize >= cfg.vocab_size) {
                return bad(format!("row {i} holds token id {id} outside the vocabulary"));
            }
            if let Some(t) = self.targets.get(i) {
                let want = scored_positions(row, self.mode).len();
                if t.len() != want {
                    return bad(format!("row {i} has {} targets for {want} scored positions", t.len()));
                }
                if let Some(&c) = t.iter().find(|&&c| c as usize >= classes) {
                    return bad(format!("row {i} target {c} outside {classes} classes"));
                }
            }
        }
        Ok(())
    }
}

/// Positions that receive logits: every position for tagging, `[MASK]`
/// positions for generation.
pub(crate) fn scored_positions(row: &[u32], mode: Mode) -> Vec<usize> {
    match mode {
        Mode::Tag => (0..row.len()).collect(),
        Mode::Gen => (0..row.len()).filter(|&t| row[t] == MASK_ID).collect(),
    }
}

/// Per-tensor gradients; `None` means the tensor was not reached.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    slots: Vec<Option<Vec<f64>>>,
}

impl Grads {
    pub fn new(num_tensors: usize) -> Self {
        Self {
            slots: vec![None; num_tensors],
        }
    }

    pub fn get(&self, id: usize) -> Option<&[f64]> {
        self.slots.get(id).and_then(|s| s.as_deref())
    }

    pub fn by_name<'a>(&'a self, store: &ParamStore, name: &str) -> Option<&'a [f64]> {
        store.id(name).and_then(|id| self.get(id))
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.iter().all(Option::is_none)
    }

    pub(crate) fn take(&mut self, id: usize, len: usize) -> Vec<f64> {
        self.slots[id].take().unwrap_or_else(|| vec![0.0; len])
    }

    pub(crate) fn put(&mut self, id: usize, v: Vec<f64>) {
        self.slots[id] = Some(v);
    }

    pub(crate) fn clear(&mut self, id: usize) {
        self.slots[id] = None;
    }

    pub(crate) fn add(&mut self, other: Grads) {
        for (mine, theirs) in self.slots.iter_mut().zip(other.slots) {
            match (mine.as_mut(), theirs) {
                (Some(m), Some(t)) => ops::add_into(m, &t),
                (None, Some(t)) => *mine = Some(t),
                _ => {}
            }
        }
    }

    pub(crate) fn scale(&mut self, f: f64) {
        for v in self.slots.iter_mut().flatten() {
            for x in v.iter_mut() {
                *x *= f;
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.slots
            .iter()
            .flatten()
            .flat_map(|v| v.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.slots.iter().flatten().flat_map(|v| v.iter()).all(|x| x.is_finite())
    }
}

// ---- layout ---------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct CoreIds {
    wq: usize,
    bq: usize,
    wk: usize,
    bk: usize,
    wv: usize,
    bv: usize,
    wo: usize,
    bo: usize,
    ln1g: usize,
    ln1b: usize,
    ln2g: usize,
    ln2b: usize,
}

#[derive(Debug, Clone, Copy)]
struct FfnIds {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

#[derive(Debug, Clone, Copy)]
struct BlockIds {
    core: CoreIds,
    ffn: FfnIds,
}

enum LayerPlan {
    Dense(BlockIds),
    /// Shared attention, FFN routed among `experts` (indexed by intent).
    SparseFfn {
        core: CoreIds,
        experts: Vec<FfnIds>,
        router: Option<usize>,
    },
    /// Whole block routed.
    SparseBlock {
        experts: Vec<BlockIds>,
        router: Option<usize>,
    },
}

struct Layout {
    tok: usize,
    pos: usize,
    emb_g: usize,
    emb_b: usize,
    layers: Vec<LayerPlan>,
    head_w: usize,
    head_b: usize,
    classes: usize,
}

fn core_ids(s: &ParamStore, p: &str) -> Result<CoreIds, EncoderError> {
    let g = |part: &str| s.require(&format!("{p}.{part}"));
    Ok(CoreIds {
        wq: g("attn.wq")?,
        bq: g("attn.bq")?,
        wk: g("attn.wk")?,
        bk: g("attn.bk")?,
        wv: g("attn.wv")?,
        bv: g("attn.bv")?,
        wo: g("attn.wo")?,
        bo: g("attn.bo")?,
        ln1g: g("ln1.g")?,
        ln1b: g("ln1.b")?,
        ln2g: g("ln2.g")?,
        ln2b: g("ln2.b")?,
    })
}

fn ffn_ids(s: &ParamStore, p: &str) -> Result<FfnIds, EncoderError> {
    let g = |part: &str| s.require(&format!("{p}.{part}"));
    Ok(FfnIds {
        w1: g("ffn.w1")?,
        b1: g("ffn.b1")?,
        w2: g("ffn.w2")?,
        b2: g("ffn.b2")?,
    })
}

impl Layout {
    fn resolve(cfg: &EncoderConfig, s: &ParamStore, r: usize, z: Mode) -> Result<Self, EncoderError> {
        let sparse = cfg.sparse_layers();
        let mut layers = Vec::with_capacity(cfg.num_layers);
        for l in 0..cfg.num_layers {
            let base = layer_prefix(l);
            let router = match router_name(cfg, l, r, z) {
                Some(name) if sparse.contains(&l) => Some(s.require(&name)?),
                _ => None,
            };
            let plan = if !sparse.contains(&l) {
                LayerPlan::Dense(BlockIds {
                    core: core_ids(s, &base)?,
                    ffn: ffn_ids(s, &base)?,
                })
            } else {
                match cfg.sparsity_mode {
                    SparsityMode::SparseFFN => LayerPlan::SparseFfn {
                        core: core_ids(s, &base)?,
                        experts: (0..cfg.num_intents)
                            .map(|e| ffn_ids(s, &expert_prefix(cfg, l, e, z)))
                            .collect::<Result<_, _>>()?,
                        router,
                    },
                    SparsityMode::SparseLastLayer => LayerPlan::SparseBlock {
                        experts: (0..cfg.num_intents)
                            .map(|e| {
                                let p = expert_prefix(cfg, l, e, z);
                                Ok(BlockIds {
                                    core: core_ids(s, &p)?,
                                    ffn: ffn_ids(s, &p)?,
                                })
                            })
                            .collect::<Result<_, EncoderError>>()?,
                        router,
                    },
                    SparsityMode::Dense => unreachable!("dense models have no sparse layers"),
                }
            };
            layers.push(plan);
        }
        let head = head_prefix(cfg, r);
        let (head_w, head_b, classes) = match z {
            Mode::Tag => (
                s.require(&format!("{head}.tag.w"))?,
                s.require(&format!("{head}.tag.b"))?,
                cfg.num_tags(),
            ),
            Mode::Gen => (
                s.require(&format!("{head}.gen.w"))?,
                s.require(&format!("{head}.gen.b"))?,
                cfg.vocab_size,
            ),
        };
        Ok(Self {
            tok: s.require("emb.tok")?,
            pos: s.require("emb.pos")?,
            emb_g: s.require("emb.ln.g")?,
            emb_b: s.require("emb.ln.b")?,
            layers,
            head_w,
            head_b,
            classes,
        })
    }
}

// ---- routing --------------------------------------------------------------

/// Outcome of routing one context vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingDecision {
    /// Expert position in the slot layout (`z·n + r`, or `r` when shared).
    pub expert: usize,
    /// Intent index of the chosen expert within the active mode.
    pub intent: usize,
    /// Multiplier applied to the expert output.
    pub gate: f64,
    /// Router distribution over the active mode's experts (linear routers).
    pub probs: Option<Vec<f64>>,
}

/// Routes `context` for intent `r` in mode `z`.
///
/// Task-id routing (no `router` weights) picks expert `r` with gate 1.
/// A linear router scores the active mode's `n` experts as
/// `softmax(context·W / T)`, keeps the top one (lowest index on ties) and
/// gates its output by that probability.
pub fn route(cfg: &EncoderConfig, router: Option<&Tensor>, context: &[f64], r: usize, z: Mode) -> RoutingDecision {
    let Some(w) = router else {
        return RoutingDecision {
            expert: cfg.expert_index(r, z),
            intent: r,
            gate: 1.0,
            probs: None,
        };
    };
    let n = w.shape[1];
    let mut logits = vec![0.0; n];
    for (i, &c) in context.iter().enumerate() {
        for (k, l) in logits.iter_mut().enumerate() {
            *l += c * w.data[i * n + k];
        }
    }
    for l in &mut logits {
        *l /= cfg.softmax_temperature;
    }
    ops::softmax(&mut logits);
    let j = ops::argmax(&logits);
    RoutingDecision {
        expert: cfg.expert_index(j, z),
        intent: j,
        gate: logits[j],
        probs: Some(logits),
    }
}

/// Routing state for one sparse layer of one row.
struct Routing {
    decisions: Vec<RoutingDecision>,
    /// Context vector behind each decision.
    contexts: Vec<Vec<f64>>,
    /// Decision index per token.
    token_route: Vec<usize>,
}

impl Routing {
    fn compute(c: &Ctx, router: Option<usize>, x: &[f64], len: usize) -> Self {
        let d = c.cfg.hidden_dim;
        let w = router.map(|id| c.store.tensor(id));
        let contexts: Vec<Vec<f64>> = match c.cfg.routing_granularity {
            _ if w.is_none() => vec![vec![]],
            Granularity::Sequence => {
                let mut m = vec![0.0; d];
                for t in 0..len {
                    ops::add_into(&mut m, &x[t * d..(t + 1) * d]);
                }
                m.iter_mut().for_each(|v| *v /= len as f64);
                vec![m]
            }
            Granularity::Token => (0..len).map(|t| x[t * d..(t + 1) * d].to_vec()).collect(),
        };
        let decisions = contexts
            .iter()
            .map(|ctx| route(c.cfg, w, ctx, c.intent, c.mode))
            .collect();
        let token_route = if contexts.len() == 1 {
            vec![0; len]
        } else {
            (0..len).collect()
        };
        Self {
            decisions,
            contexts,
            token_route,
        }
    }

    fn gate(&self, t: usize) -> f64 {
        self.decisions[self.token_route[t]].gate
    }

    /// Token groups per chosen intent, in ascending intent order.
    fn groups(&self) -> Vec<(usize, Vec<usize>)> {
        let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut by_intent: Vec<(usize, usize)> = self
            .token_route
            .iter()
            .enumerate()
            .map(|(t, &k)| (self.decisions[k].intent, t))
            .collect();
        by_intent.sort_unstable();
        for (e, t) in by_intent {
            match out.last_mut() {
                Some((last, toks)) if *last == e => toks.push(t),
                _ => out.push((e, vec![t])),
            }
        }
        out
    }

    /// Backpropagates per-token gate gradients into the router weights and
    /// the routing input `dx`.
    fn backward(&self, c: &Ctx, router: Option<usize>, dgate: &[f64], len: usize, dx: &mut [f64], grads: &mut Grads) {
        let Some(wid) = router else { return };
        let d = c.cfg.hidden_dim;
        let w = &c.store.tensor(wid).data;
        let n = c.store.tensor(wid).shape[1];
        let temp = c.cfg.softmax_temperature;
        let mut dw = grads.take(wid, d * n);
        for (k, dec) in self.decisions.iter().enumerate() {
            let g: f64 = (0..len).filter(|&t| self.token_route[t] == k).map(|t| dgate[t]).sum();
            let p = dec.probs.as_ref().expect("linear routing keeps probabilities");
            let j = dec.intent;
            let dlogit: Vec<f64> = (0..n)
                .map(|m| g * p[j] * (if m == j { 1.0 } else { 0.0 } - p[m]) / temp)
                .collect();
            let ctx = &self.contexts[k];
            let mut dctx = vec![0.0; d];
            for i in 0..d {
                for m in 0..n {
                    dw[i * n + m] += ctx[i] * dlogit[m];
                    dctx[i] += w[i * n + m] * dlogit[m];
                }
            }
            if self.decisions.len() == 1 {
                for t in 0..len {
                    for i in 0..d {
                        dx[t * d + i] += dctx[i] / len as f64;
                    }
                }
            } else {
                ops::add_into(&mut dx[k * d..(k + 1) * d], &dctx);
            }
        }
        grads.put(wid, dw);
    }
}

// ---- forward ---------------------------------------------------------------

struct Ctx<'a> {
    cfg: &'a EncoderConfig,
    store: &'a ParamStore,
    layout: &'a Layout,
    intent: usize,
    mode: Mode,
}

impl Ctx<'_> {
    fn t(&self, id: usize) -> &[f64] {
        &self.store.tensor(id).data
    }
}

struct AttnCache {
    x: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// heads × len × len
    probs: Vec<f64>,
    ctx: Vec<f64>,
}

struct FfnGroup {
    tokens: Vec<usize>,
    ids: FfnIds,
    x: Vec<f64>,
    u: Vec<f64>,
    a: Vec<f64>,
    out: Vec<f64>,
}

struct BlockCache {
    attn: AttnCache,
    ln1: LnCache,
    ffn: Vec<FfnGroup>,
    ffn_routing: Option<Routing>,
    ln2: LnCache,
}

enum LayerCache {
    Block(Box<BlockCache>),
    Routed {
        routing: Routing,
        experts: Vec<(Vec<usize>, BlockIds, BlockCache, Vec<f64>)>,
    },
}

struct RowCache {
    ids: Vec<u32>,
    emb_ln: LnCache,
    layers: Vec<LayerCache>,
    hidden: Vec<f64>,
    positions: Vec<usize>,
    logits: Vec<f64>,
}

fn attn_forward(c: &Ctx, ids: &CoreIds, x: &[f64], len: usize) -> (Vec<f64>, AttnCache) {
    let d = c.cfg.hidden_dim;
    let heads = c.cfg.num_heads;
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let q = ops::linear(x, len, c.t(ids.wq), c.t(ids.bq), d, d);
    let k = ops::linear(x, len, c.t(ids.wk), c.t(ids.bk), d, d);
    let v = ops::linear(x, len, c.t(ids.wv), c.t(ids.bv), d, d);
    let mut probs = vec![0.0; heads * len * len];
    let mut ctx = vec![0.0; len * d];
    for h in 0..heads {
        let off = h * dh;
        for i in 0..len {
            let row = &mut probs[(h * len + i) * len..(h * len + i + 1) * len];
            let qi = &q[i * d + off..i * d + off + dh];
            for j in 0..len {
                row[j] = ops::dot(qi, &k[j * d + off..j * d + off + dh]) * scale;
            }
            ops::softmax(row);
            let ci = &mut ctx[i * d + off..i * d + off + dh];
            for j in 0..len {
                let p = row[j];
                for (cv, vv) in ci.iter_mut().zip(&v[j * d + off..j * d + off + dh]) {
                    *cv += p * vv;
                }
            }
        }
    }
    let o = ops::linear(&ctx, len, c.t(ids.wo), c.t(ids.bo), d, d);
    (
        o,
        AttnCache {
            x: x.to_vec(),
            q,
            k,
            v,
            probs,
            ctx,
        },
    )
}

fn ffn_group_forward(c: &Ctx, ids: FfnIds, x: Vec<f64>, tokens: Vec<usize>) -> FfnGroup {
    let (d, f) = (c.cfg.hidden_dim, c.cfg.ffn_dim);
    let n = tokens.len();
    let u = ops::linear(&x, n, c.t(ids.w1), c.t(ids.b1), d, f);
    let a: Vec<f64> = u.iter().map(|&v| ops::gelu(v)).collect();
    let out = ops::linear(&a, n, c.t(ids.w2), c.t(ids.b2), f, d);
    FfnGroup {
        tokens,
        ids,
        x,
        u,
        a,
        out,
    }
}

/// Runs one block. `experts`/`router` select a routed FFN; otherwise `ffn`
/// is used for every token.
fn block_forward(
    c: &Ctx,
    core: &CoreIds,
    ffn: Option<FfnIds>,
    experts: &[FfnIds],
    router: Option<usize>,
    x: &[f64],
    len: usize,
) -> (Vec<f64>, BlockCache) {
    let d = c.cfg.hidden_dim;
    let eps = c.cfg.layer_norm_eps;
    let (o, attn) = attn_forward(c, core, x, len);
    let r1: Vec<f64> = x.iter().zip(&o).map(|(a, b)| a + b).collect();
    let (h1, ln1) = ops::layer_norm(&r1, len, d, c.t(core.ln1g), c.t(core.ln1b), eps);
    let mut f = vec![0.0; len * d];
    let (groups, routing) = match ffn {
        Some(ids) => (vec![ffn_group_forward(c, ids, h1.clone(), (0..len).collect())], None),
        None => {
            let routing = Routing::compute(c, router, &h1, len);
            let groups = routing
                .groups()
                .into_iter()
                .map(|(e, toks)| {
                    let gx: Vec<f64> = toks.iter().flat_map(|&t| h1[t * d..(t + 1) * d].iter().copied()).collect();
                    ffn_group_forward(c, experts[e], gx, toks)
                })
                .collect();
            (groups, Some(routing))
        }
    };
    for g in &groups {
        for (gi, &t) in g.tokens.iter().enumerate() {
            let gate = routing.as_ref().map_or(1.0, |r| r.gate(t));
            for k in 0..d {
                f[t * d + k] = gate * g.out[gi * d + k];
            }
        }
    }
    let r2: Vec<f64> = h1.iter().zip(&f).map(|(a, b)| a + b).collect();
    let (y, ln2) = ops::layer_norm(&r2, len, d, c.t(core.ln2g), c.t(core.ln2b), eps);
    (
        y,
        BlockCache {
            attn,
            ln1,
            ffn: groups,
            ffn_routing: routing,
            ln2,
        },
    )
}

fn forward_row(c: &Ctx, ids: &[u32]) -> RowCache {
    let d = c.cfg.hidden_dim;
    let len = ids.len();
    let tok = c.t(c.layout.tok);
    let pos = c.t(c.layout.pos);
    let mut e = vec![0.0; len * d];
    for (t, &id) in ids.iter().enumerate() {
        let id = id as usize;
        for k in 0..d {
            e[t * d + k] = tok[id * d + k] + pos[t * d + k];
        }
    }
    let (mut h, emb_ln) = ops::layer_norm(&e, len, d, c.t(c.layout.emb_g), c.t(c.layout.emb_b), c.cfg.layer_norm_eps);
    let mut layers = Vec::with_capacity(c.layout.layers.len());
    for plan in &c.layout.layers {
        let (y, cache) = match plan {
            LayerPlan::Dense(b) => {
                let (y, bc) = block_forward(c, &b.core, Some(b.ffn), &[], None, &h, len);
                (y, LayerCache::Block(Box::new(bc)))
            }
            LayerPlan::SparseFfn { core, experts, router } => {
                let (y, bc) = block_forward(c, core, None, experts, *router, &h, len);
                (y, LayerCache::Block(Box::new(bc)))
            }
            LayerPlan::SparseBlock { experts, router } => {
                let routing = Routing::compute(c, *router, &h, len);
                let mut y = vec![0.0; len * d];
                let mut runs = Vec::new();
                for (e, toks) in routing.groups() {
                    let b = experts[e];
                    let (ye, bc) = block_forward(c, &b.core, Some(b.ffn), &[], None, &h, len);
                    for &t in &toks {
                        let g = routing.gate(t);
                        for k in 0..d {
                            y[t * d + k] = g * ye[t * d + k];
                        }
                    }
                    runs.push((toks, b, bc, ye));
                }
                (y, LayerCache::Routed { routing, experts: runs })
            }
        };
        layers.push(cache);
        h = y;
    }
    let positions = scored_positions(ids, c.mode);
    let hs: Vec<f64> = positions.iter().flat_map(|&t| h[t * d..(t + 1) * d].iter().copied()).collect();
    let logits = ops::linear(&hs, positions.len(), c.t(c.layout.head_w), c.t(c.layout.head_b), d, c.layout.classes);
    RowCache {
        ids: ids.to_vec(),
        emb_ln,
        layers,
        hidden: h,
        positions,
        logits,
    }
}

// ---- backward -------------------------------------------------------------

fn linear_bwd(
    c: &Ctx,
    grads: &mut Grads,
    (w, b): (usize, usize),
    x: &[f64],
    n: usize,
    (din, dout): (usize, usize),
    dy: &[f64],
    dx: Option<&mut [f64]>,
) {
    let mut dw = grads.take(w, din * dout);
    let mut db = grads.take(b, dout);
    ops::linear_backward(x, n, c.t(w), din, dout, dy, dx, &mut dw, &mut db);
    grads.put(w, dw);
    grads.put(b, db);
}

fn ln_bwd(c: &Ctx, grads: &mut Grads, (g, b): (usize, usize), cache: &LnCache, n: usize, dy: &[f64], dx: &mut [f64]) {
    let d = c.cfg.hidden_dim;
    let mut dg = grads.take(g, d);
    let mut db = grads.take(b, d);
    ops::layer_norm_backward(cache, n, d, c.t(g), dy, dx, &mut dg, &mut db);
    grads.put(g, dg);
    grads.put(b, db);
}

fn attn_backward(c: &Ctx, ids: &CoreIds, a: &AttnCache, len: usize, dout: &[f64], dx: &mut [f64], grads: &mut Grads) {
    let d = c.cfg.hidden_dim;
    let heads = c.cfg.num_heads;
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let mut dctx = vec![0.0; len * d];
    linear_bwd(c, grads, (ids.wo, ids.bo), &a.ctx, len, (d, d), dout, Some(&mut dctx));
    let mut dq = vec![0.0; len * d];
    let mut dk = vec![0.0; len * d];
    let mut dv = vec![0.0; len * d];
    let mut dp = vec![0.0; len];
    for h in 0..heads {
        let off = h * dh;
        for i in 0..len {
            let p = &a.probs[(h * len + i) * len..(h * len + i + 1) * len];
            let dci = &dctx[i * d + off..i * d + off + dh];
            for j in 0..len {
                dp[j] = ops::dot(dci, &a.v[j * d + off..j * d + off + dh]);
                for (g, &cv) in dv[j * d + off..j * d + off + dh].iter_mut().zip(dci) {
                    *g += p[j] * cv;
                }
            }
            let s: f64 = p.iter().zip(&dp).map(|(x, y)| x * y).sum();
            for j in 0..len {
                let ds = p[j] * (dp[j] - s) * scale;
                if ds == 0.0 {
                    continue;
                }
                for c2 in 0..dh {
                    dq[i * d + off + c2] += ds * a.k[j * d + off + c2];
                    dk[j * d + off + c2] += ds * a.q[i * d + off + c2];
                }
            }
        }
    }
    linear_bwd(c, grads, (ids.wq, ids.bq), &a.x, len, (d, d), &dq, Some(dx));
    linear_bwd(c, grads, (ids.wk, ids.bk), &a.x, len, (d, d), &dk, Some(dx));
    linear_bwd(c, grads, (ids.wv, ids.bv), &a.x, len, (d, d), &dv, Some(dx));
}

fn block_backward(
    c: &Ctx,
    core: &CoreIds,
    router: Option<usize>,
    b: &BlockCache,
    len: usize,
    dy: &[f64],
    dx: &mut [f64],
    grads: &mut Grads,
) {
    let (d, f) = (c.cfg.hidden_dim, c.cfg.ffn_dim);
    // y = LN2(h1 + ffn(h1))
    let mut dr2 = vec![0.0; len * d];
    ln_bwd(c, grads, (core.ln2g, core.ln2b), &b.ln2, len, dy, &mut dr2);
    let mut dh1 = dr2.clone();
    let mut dgate = vec![0.0; len];
    for g in &b.ffn {
        let n = g.tokens.len();
        let mut dout = vec![0.0; n * d];
        for (gi, &t) in g.tokens.iter().enumerate() {
            let gate = b.ffn_routing.as_ref().map_or(1.0, |r| r.gate(t));
            let src = &dr2[t * d..(t + 1) * d];
            dgate[t] = ops::dot(src, &g.out[gi * d..(gi + 1) * d]);
            for k in 0..d {
                dout[gi * d + k] = gate * src[k];
            }
        }
        let mut da = vec![0.0; n * f];
        linear_bwd(c, grads, (g.ids.w2, g.ids.b2), &g.a, n, (f, d), &dout, Some(&mut da));
        for (dv, &u) in da.iter_mut().zip(&g.u) {
            *dv *= ops::gelu_grad(u);
        }
        let mut dgx = vec![0.0; n * d];
        linear_bwd(c, grads, (g.ids.w1, g.ids.b1), &g.x, n, (d, f), &da, Some(&mut dgx));
        for (gi, &t) in g.tokens.iter().enumerate() {
            ops::add_into(&mut dh1[t * d..(t + 1) * d], &dgx[gi * d..(gi + 1) * d]);
        }
    }
    if let Some(routing) = &b.ffn_routing {
        routing.backward(c, router, &dgate, len, &mut dh1, grads);
    }
    // h1 = LN1(x + attn(x))
    let mut dr1 = vec![0.0; len * d];
    ln_bwd(c, grads, (core.ln1g, core.ln1b), &b.ln1, len, &dh1, &mut dr1);
    ops::add_into(dx, &dr1);
    attn_backward(c, core, &b.attn, len, &dr1, dx, grads);
}

fn backward_row(c: &Ctx, row: &RowCache, dlogits: &[f64], grads: &mut Grads) {
    let d = c.cfg.hidden_dim;
    let len = row.ids.len();
    let np = row.positions.len();
    let hs: Vec<f64> = row
        .positions
        .iter()
        .flat_map(|&t| row.hidden[t * d..(t + 1) * d].iter().copied())
        .collect();
    let mut dhs = vec![0.0; np * d];
    linear_bwd(
        c,
        grads,
        (c.layout.head_w, c.layout.head_b),
        &hs,
        np,
        (d, c.layout.classes),
        dlogits,
        Some(&mut dhs),
    );
    let mut dh = vec![0.0; len * d];
    for (pi, &t) in row.positions.iter().enumerate() {
        ops::add_into(&mut dh[t * d..(t + 1) * d], &dhs[pi * d..(pi + 1) * d]);
    }
    for (plan, cache) in c.layout.layers.iter().zip(&row.layers).rev() {
        let mut dx = vec![0.0; len * d];
        match (plan, cache) {
            (LayerPlan::Dense(b), LayerCache::Block(bc)) => {
                block_backward(c, &b.core, None, bc, len, &dh, &mut dx, grads)
            }
            (LayerPlan::SparseFfn { core, router, .. }, LayerCache::Block(bc)) => {
                block_backward(c, core, *router, bc, len, &dh, &mut dx, grads)
            }
            (LayerPlan::SparseBlock { router, .. }, LayerCache::Routed { routing, experts }) => {
                let mut dgate = vec![0.0; len];
                for (toks, b, bc, ye) in experts {
                    let mut dye = vec![0.0; len * d];
                    for &t in toks {
                        let g = routing.gate(t);
                        let src = &dh[t * d..(t + 1) * d];
                        dgate[t] = ops::dot(src, &ye[t * d..(t + 1) * d]);
                        for k in 0..d {
                            dye[t * d + k] = g * src[k];
                        }
                    }
                    block_backward(c, &b.core, None, bc, len, &dye, &mut dx, grads);
                }
                routing.backward(c, *router, &dgate, len, &mut dx, grads);
            }
            _ => unreachable!("cache matches plan"),
        }
        dh = dx;
    }
    let mut de = vec![0.0; len * d];
    ln_bwd(c, grads, (c.layout.emb_g, c.layout.emb_b), &row.emb_ln, len, &dh, &mut de);
    let vocab = c.cfg.vocab_size;
    let mut dtok = grads.take(c.layout.tok, vocab * d);
    let mut dpos = grads.take(c.layout.pos, c.cfg.max_seq_len * d);
    for (t, &id) in row.ids.iter().enumerate() {
        let id = id as usize;
        let src = &de[t * d..(t + 1) * d];
        ops::add_into(&mut dtok[id * d..(id + 1) * d], src);
        ops::add_into(&mut dpos[t * d..(t + 1) * d], src);
    }
    grads.put(c.layout.tok, dtok);
    grads.put(c.layout.pos, dpos);
}

// ---- public entry points --------------------------------------------------

/// Final hidden states and head logits for every row.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub classes: usize,
    /// `len × hidden_dim` per row.
    pub hidden: Vec<Vec<f64>>,
    /// Scored positions per row (see [`Batch`]).
    pub positions: Vec<Vec<usize>>,
    /// `positions × classes` per row.
    pub logits: Vec<Vec<f64>>,
}

pub fn forward(cfg: &EncoderConfig, store: &ParamStore, batch: &Batch) -> Result<ForwardOutput, EncoderError> {
    batch.validate(cfg)?;
    let layout = Layout::resolve(cfg, store, batch.intent, batch.mode)?;
    let c = Ctx {
        cfg,
        store,
        layout: &layout,
        intent: batch.intent,
        mode: batch.mode,
    };
    let rows: Vec<RowCache> = batch.inputs.par_iter().map(|ids| forward_row(&c, ids)).collect();
    Ok(ForwardOutput {
        classes: layout.classes,
        hidden: rows.iter().map(|r| r.hidden.clone()).collect(),
        positions: rows.iter().map(|r| r.positions.clone()).collect(),
        logits: rows.into_iter().map(|r| r.logits).collect(),
    })
}

/// Batch objective and its gradient.
///
/// The objective is the mean token cross-entropy over all targets in the
/// batch, multiplied by `lambda` for generation batches. A batch without
/// targets yields zero and an empty gradient.
pub fn loss_and_grads(cfg: &EncoderConfig, store: &ParamStore, batch: &Batch) -> Result<(f64, Grads), EncoderError> {
    batch.validate(cfg)?;
    let total = batch.num_targets();
    if total == 0 {
        return Ok((0.0, Grads::new(store.len())));
    }
    let weight = match batch.mode {
        Mode::Tag => 1.0,
        Mode::Gen => cfg.lambda,
    };
    let layout = Layout::resolve(cfg, store, batch.intent, batch.mode)?;
    let c = Ctx {
        cfg,
        store,
        layout: &layout,
        intent: batch.intent,
        mode: batch.mode,
    };
    let classes = layout.classes;
    let scale = weight / total as f64;
    let rows: Vec<(&Vec<u32>, &Vec<u32>)> = batch.inputs.iter().zip(&batch.targets).collect();
    let parts: Vec<(f64, Grads)> = rows
        .par_chunks(ROW_CHUNK)
        .map(|chunk| {
            let mut grads = Grads::new(store.len());
            let mut loss = 0.0;
            for (ids, gold) in chunk {
                let row = forward_row(&c, ids);
                let mut dlogits = vec![0.0; row.logits.len()];
                for (pi, &g) in gold.iter().enumerate() {
                    let span = pi * classes..(pi + 1) * classes;
                    loss += ops::cross_entropy_row(&row.logits[span.clone()], g as usize, &mut dlogits[span]);
                }
                dlogits.iter_mut().for_each(|v| *v *= scale);
                backward_row(&c, &row, &dlogits, &mut grads);
            }
            (loss, grads)
        })
        .collect();
    let mut grads = Grads::new(store.len());
    let mut loss = 0.0;
    for (l, g) in parts {
        loss += l;
        grads.add(g);
    }
    Ok((loss * scale, grads))
}

/// Objective only, used by finite-difference checks.
pub fn batch_loss(cfg: &EncoderConfig, store: &ParamStore, batch: &Batch) -> Result<f64, EncoderError> {
    batch.validate(cfg)?;
    let total = batch.num_targets();
    if total == 0 {
        return Ok(0.0);
    }
    let out = forward(cfg, store, batch)?;
    let weight = match batch.mode {
        Mode::Tag => 1.0,
        Mode::Gen => cfg.lambda,
    };
    let mut loss = 0.0;
    let mut scratch = vec![0.0; out.classes];
    for (logits, gold) in out.logits.iter().zip(&batch.targets) {
        for (pi, &g) in gold.iter().enumerate() {
            loss += ops::cross_entropy_row(&logits[pi * out.classes..(pi + 1) * out.classes], g as usize, &mut scratch);
        }
    }
    Ok(loss * weight / total as f64)
}
