//! Named parameter tensors, initialization and expert surgery.

use std::collections::{BTreeSet, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{EncoderConfig, Mode, RouterKind, SparsityMode};
use super::EncoderError;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn filled(shape: &[usize], v: f64) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![v; shape.iter().product()],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Parameter tensors addressed by name. Ids are insertion positions and
/// stay valid until the store is rebuilt.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl PartialEq for ParamStore {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len()
            && self
                .iter()
                .all(|(name, t)| other.get(name).is_some_and(|o| o == t))
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or overwrites `name`.
    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> usize {
        let name = name.into();
        if let Some(&id) = self.index.get(&name) {
            self.tensors[id] = tensor;
            return id;
        }
        let id = self.names.len();
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.tensors.push(tensor);
        id
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub(crate) fn require(&self, name: &str) -> Result<usize, EncoderError> {
        self.id(name)
            .ok_or_else(|| EncoderError::MissingParameter(name.to_string()))
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.id(name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.id(name).map(|i| &mut self.tensors[i])
    }

    pub fn tensor(&self, id: usize) -> &Tensor {
        &self.tensors[id]
    }

    pub fn tensor_mut(&mut self, id: usize) -> &mut Tensor {
        &mut self.tensors[id]
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(self.tensors.iter())
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Names in sorted order, the canonical serialization order.
    pub fn sorted_names(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.names.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }
}

// ---- naming -------------------------------------------------------------

pub(crate) fn layer_prefix(l: usize) -> String {
    format!("layer{l}")
}

fn mode_key(config: &EncoderConfig, z: Mode) -> &'static str {
    if config.share_tag_gen {
        "shared"
    } else {
        z.as_str()
    }
}

/// Prefix of expert `r` for mode `z` at layer `l`.
pub(crate) fn expert_prefix(config: &EncoderConfig, l: usize, r: usize, z: Mode) -> String {
    format!("layer{l}.expert.r{r}.{}", mode_key(config, z))
}

/// Router weight name at layer `l` for mode `z` (and task `r` for
/// task-conditioned linear routers). `None` for task-id routing.
pub(crate) fn router_name(config: &EncoderConfig, l: usize, r: usize, z: Mode) -> Option<String> {
    match config.router {
        RouterKind::TaskId => None,
        RouterKind::Linear => Some(format!("layer{l}.router.{}", mode_key(config, z))),
        RouterKind::TaskIdLinear => Some(format!("layer{l}.router.r{r}.{}", mode_key(config, z))),
    }
}

/// Head prefix: shared heads for sparse models, per-intent heads for the
/// dense baseline.
pub(crate) fn head_prefix(config: &EncoderConfig, r: usize) -> String {
    if config.is_sparse() {
        "head".to_string()
    } else {
        format!("head.r{r}")
    }
}

pub(crate) fn is_expert_param(name: &str) -> bool {
    name.contains(".expert.")
}

const ATTN_PARTS: [&str; 8] = [
    "attn.wq", "attn.bq", "attn.wk", "attn.bk", "attn.wv", "attn.bv", "attn.wo", "attn.bo",
];
const FFN_PARTS: [&str; 4] = ["ffn.w1", "ffn.b1", "ffn.w2", "ffn.b2"];
const LN_PARTS: [&str; 4] = ["ln1.g", "ln1.b", "ln2.g", "ln2.b"];

// ---- initialization -----------------------------------------------------

struct Init {
    rng: ChaCha8Rng,
    normal: Normal<f64>,
}

impl Init {
    fn new(seed: u64, std: f64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            normal: Normal::new(0.0, std).expect("positive std"),
        }
    }

    fn normal(&mut self, shape: &[usize]) -> Tensor {
        let mut t = Tensor::zeros(shape);
        for v in &mut t.data {
            *v = self.normal.sample(&mut self.rng);
        }
        t
    }
}

fn init_block(store: &mut ParamStore, init: &mut Init, prefix: &str, d: usize, f: usize, with_ffn: bool) {
    for part in ATTN_PARTS {
        let t = if part.contains(".w") {
            init.normal(&[d, d])
        } else {
            Tensor::zeros(&[d])
        };
        store.insert(format!("{prefix}.{part}"), t);
    }
    for part in LN_PARTS {
        let t = if part.ends_with(".g") {
            Tensor::filled(&[d], 1.0)
        } else {
            Tensor::zeros(&[d])
        };
        store.insert(format!("{prefix}.{part}"), t);
    }
    if with_ffn {
        store.insert(format!("{prefix}.ffn.w1"), init.normal(&[d, f]));
        store.insert(format!("{prefix}.ffn.b1"), Tensor::zeros(&[f]));
        store.insert(format!("{prefix}.ffn.w2"), init.normal(&[f, d]));
        store.insert(format!("{prefix}.ffn.b2"), Tensor::zeros(&[d]));
    }
}

fn copy_params(store: &mut ParamStore, from: &str, to: &str, parts: &[&str]) {
    for part in parts {
        let t = store
            .get(&format!("{from}.{part}"))
            .expect("source tensor exists")
            .clone();
        store.insert(format!("{to}.{part}"), t);
    }
}

impl ParamStore {
    /// Builds freshly initialized parameters for `config`.
    ///
    /// The backbone draws from one stream in a fixed order regardless of the
    /// sparsity mode, and every expert starts as a copy of the backbone
    /// block it replaces. A sparse model therefore computes exactly what the
    /// dense model with the same seed computes until training diverges them.
    pub fn init(config: &EncoderConfig) -> Result<Self, EncoderError> {
        config.validate()?;
        let (d, f, n) = (config.hidden_dim, config.ffn_dim, config.num_intents);
        let mut init = Init::new(config.seed, config.init_std);
        let mut s = ParamStore::new();
        s.insert("emb.tok", init.normal(&[config.vocab_size, d]));
        s.insert("emb.pos", init.normal(&[config.max_seq_len, d]));
        s.insert("emb.ln.g", Tensor::filled(&[d], 1.0));
        s.insert("emb.ln.b", Tensor::zeros(&[d]));
        for l in 0..config.num_layers {
            init_block(&mut s, &mut init, &layer_prefix(l), d, f, true);
        }
        let tags = config.num_tags();
        let head_tag_w = init.normal(&[d, tags]);
        let head_gen_w = init.normal(&[d, config.vocab_size]);
        let heads: Vec<String> = if config.is_sparse() {
            vec!["head".into()]
        } else {
            (0..n).map(|r| format!("head.r{r}")).collect()
        };
        for h in heads {
            s.insert(format!("{h}.tag.w"), head_tag_w.clone());
            s.insert(format!("{h}.tag.b"), Tensor::zeros(&[tags]));
            s.insert(format!("{h}.gen.w"), head_gen_w.clone());
            s.insert(format!("{h}.gen.b"), Tensor::zeros(&[config.vocab_size]));
        }

        let modes: &[Mode] = if config.share_tag_gen { &[Mode::Tag] } else { &Mode::BOTH };
        for l in config.sparse_layers() {
            let base = layer_prefix(l);
            for &z in modes {
                for r in 0..n {
                    let p = expert_prefix(config, l, r, z);
                    match config.sparsity_mode {
                        SparsityMode::SparseFFN => copy_params(&mut s, &base, &p, &FFN_PARTS),
                        SparsityMode::SparseLastLayer => {
                            copy_params(&mut s, &base, &p, &ATTN_PARTS);
                            copy_params(&mut s, &base, &p, &LN_PARTS);
                            copy_params(&mut s, &base, &p, &FFN_PARTS);
                        }
                        SparsityMode::Dense => unreachable!(),
                    }
                }
            }
        }
        // Drop the backbone copies that experts replaced so nothing unused
        // lingers in checkpoints.
        let replaced: Vec<&str> = match config.sparsity_mode {
            SparsityMode::Dense => vec![],
            SparsityMode::SparseFFN => FFN_PARTS.to_vec(),
            SparsityMode::SparseLastLayer => ATTN_PARTS.iter().chain(&LN_PARTS).chain(&FFN_PARTS).copied().collect(),
        };
        let mut drop = BTreeSet::new();
        for l in config.sparse_layers() {
            for part in &replaced {
                drop.insert(format!("{}.{part}", layer_prefix(l)));
            }
        }

        let mut router_init = Init::new(config.seed ^ 0x005E_ED0F_u64.rotate_left(32), config.router_init_std);
        for l in config.sparse_layers() {
            let mut names = BTreeSet::new();
            for &z in modes {
                for r in 0..n {
                    if let Some(name) = router_name(config, l, r, z) {
                        names.insert(name);
                    }
                }
            }
            for name in names {
                s.insert(name, router_init.normal(&[d, n]));
            }
        }
        Ok(s.without(&drop))
    }

    fn without(self, drop: &BTreeSet<String>) -> Self {
        let mut out = ParamStore::new();
        for (name, t) in self.names.into_iter().zip(self.tensors) {
            if !drop.contains(&name) {
                out.insert(name, t);
            }
        }
        out
    }
}

// ---- expert surgery -----------------------------------------------------

/// Appends `copies` new intents whose experts (and router columns) are
/// copies of `source_intent`'s. Returns the updated config; `store` is
/// modified in place.
pub fn clone_expert(
    store: &mut ParamStore,
    config: &EncoderConfig,
    source_intent: usize,
    copies: usize,
) -> Result<EncoderConfig, EncoderError> {
    if !config.is_sparse() {
        return Err(EncoderError::NoExperts);
    }
    let n = config.num_intents;
    if source_intent >= n {
        return Err(EncoderError::UnknownIntent(source_intent));
    }
    let mut out = config.clone();
    out.num_intents = n + copies;
    let modes: &[Mode] = if config.share_tag_gen { &[Mode::Tag] } else { &Mode::BOTH };
    for l in config.sparse_layers() {
        for &z in modes {
            let from = expert_prefix(config, l, source_intent, z);
            let names: Vec<(String, Tensor)> = store
                .iter()
                .filter(|(name, _)| name.starts_with(&format!("{from}.")))
                .map(|(name, t)| (name[from.len()..].to_string(), t.clone()))
                .collect();
            for c in 0..copies {
                let to = expert_prefix(config, l, n + c, z);
                for (suffix, t) in &names {
                    store.insert(format!("{to}{suffix}"), t.clone());
                }
            }
        }
        // Routers: widen every router by duplicating the source column; a
        // task-conditioned router also gets copies for the new tasks.
        let mut routers = BTreeSet::new();
        for &z in modes {
            for r in 0..n {
                if let Some(name) = router_name(config, l, r, z) {
                    routers.insert(name);
                }
            }
        }
        for name in &routers {
            let old = store.get(name).expect("router exists").clone();
            store.insert(name.clone(), widen_router(&old, n, source_intent, copies));
        }
        if config.router == RouterKind::TaskIdLinear {
            for &z in modes {
                let from = router_name(config, l, source_intent, z).expect("task router");
                let t = store.get(&from).expect("router exists").clone();
                for c in 0..copies {
                    let to = router_name(&out, l, n + c, z).expect("task router");
                    store.insert(to, t.clone());
                }
            }
        }
    }
    Ok(out)
}

fn widen_router(old: &Tensor, n: usize, src: usize, copies: usize) -> Tensor {
    let d = old.shape[0];
    let m = n + copies;
    let mut t = Tensor::zeros(&[d, m]);
    for i in 0..d {
        for k in 0..m {
            let from = if k < n { k } else { src };
            t.data[i * m + k] = old.data[i * n + from];
        }
    }
    t
}

/// Tensor ids that remain trainable. Everything else is frozen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainableMask {
    ids: BTreeSet<usize>,
}

impl TrainableMask {
    pub fn all(store: &ParamStore) -> Self {
        Self {
            ids: (0..store.len()).collect(),
        }
    }

    pub fn contains(&self, id: usize) -> bool {
        self.ids.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn names<'a>(&self, store: &'a ParamStore) -> Vec<&'a str> {
        self.ids.iter().map(|&i| store.name(i)).collect()
    }
}

/// Fine-tuning mask: expert parameters only; shared layers, embeddings,
/// routers and heads stay frozen.
pub fn freeze_for_finetune(store: &ParamStore, config: &EncoderConfig) -> Result<TrainableMask, EncoderError> {
    if !config.is_sparse() {
        return Err(EncoderError::NoExperts);
    }
    let ids: BTreeSet<usize> = (0..store.len())
        .filter(|&i| is_expert_param(store.name(i)))
        .collect();
    if ids.is_empty() {
        return Err(EncoderError::NoExperts);
    }
    Ok(TrainableMask { ids })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::config::Granularity;

    fn cfg(mode: SparsityMode, router: RouterKind) -> EncoderConfig {
        EncoderConfig {
            sparsity_mode: mode,
            router,
            routing_granularity: Granularity::Sequence,
            ..EncoderConfig::toy()
        }
    }

    #[test]
    fn init_is_deterministic() {
        let c = cfg(SparsityMode::SparseFFN, RouterKind::Linear);
        assert_eq!(ParamStore::init(&c).unwrap(), ParamStore::init(&c).unwrap());
        let other = EncoderConfig { seed: 7, ..c.clone() };
        assert_ne!(ParamStore::init(&c).unwrap(), ParamStore::init(&other).unwrap());
    }

    #[test]
    fn experts_copy_dense_backbone() {
        let dense = ParamStore::init(&cfg(SparsityMode::Dense, RouterKind::TaskId)).unwrap();
        let c = cfg(SparsityMode::SparseFFN, RouterKind::TaskId);
        let sparse = ParamStore::init(&c).unwrap();
        let w = dense.get("layer1.ffn.w1").unwrap();
        for r in 0..c.num_intents {
            for z in Mode::BOTH {
                let p = expert_prefix(&c, 1, r, z);
                assert_eq!(sparse.get(&format!("{p}.ffn.w1")).unwrap(), w);
            }
        }
        assert!(sparse.get("layer1.ffn.w1").is_none());
        assert_eq!(sparse.get("layer0.attn.wq"), dense.get("layer0.attn.wq"));
        assert_eq!(sparse.get("head.tag.w"), dense.get("head.r1.tag.w"));
    }

    #[test]
    fn expert_counts() {
        let c = cfg(SparsityMode::SparseLastLayer, RouterKind::TaskIdLinear);
        let s = ParamStore::init(&c).unwrap();
        let experts: BTreeSet<String> = s
            .iter()
            .filter(|(n, _)| is_expert_param(n))
            .map(|(n, _)| n.split(".attn").next().unwrap().split(".ffn").next().unwrap().split(".ln").next().unwrap().to_string())
            .collect();
        assert_eq!(experts.len(), c.experts_per_slot());
        assert!(s.get("layer0.ffn.w1").is_some());
        assert!(s.get("layer1.attn.wq").is_none());
        assert_eq!(s.get("layer1.router.r1.gen").unwrap().shape, vec![8, 2]);

        let shared = EncoderConfig { share_tag_gen: true, ..c };
        let s = ParamStore::init(&shared).unwrap();
        assert!(s.get("layer1.expert.r1.shared.attn.wq").is_some());
        assert!(s.get("layer1.expert.r1.tag.attn.wq").is_none());
    }

    #[test]
    fn clone_and_freeze() {
        let c = cfg(SparsityMode::SparseFFN, RouterKind::TaskIdLinear);
        let mut s = ParamStore::init(&c).unwrap();
        s.get_mut("layer0.expert.r1.gen.ffn.w1").unwrap().data[0] = 3.0;
        let c2 = clone_expert(&mut s, &c, 1, 2).unwrap();
        assert_eq!(c2.num_intents, 4);
        for r in [2, 3] {
            assert_eq!(s.get(&format!("layer0.expert.r{r}.gen.ffn.w1")).unwrap().data[0], 3.0);
            assert!(s.get(&format!("layer1.router.r{r}.tag")).is_some());
        }
        let router = s.get("layer0.router.r0.tag").unwrap();
        assert_eq!(router.shape, vec![8, 4]);
        assert_eq!(router.data[2], router.data[1]);

        let mask = freeze_for_finetune(&s, &c2).unwrap();
        assert!(mask.names(&s).iter().all(|n| is_expert_param(n)));
        assert_eq!(mask.len(), 2 * 4 * 2 * 4);

        let dense = cfg(SparsityMode::Dense, RouterKind::TaskId);
        let mut ds = ParamStore::init(&dense).unwrap();
        assert!(matches!(freeze_for_finetune(&ds, &dense), Err(EncoderError::NoExperts)));
        assert!(matches!(clone_expert(&mut ds, &dense, 0, 1), Err(EncoderError::NoExperts)));
        assert!(matches!(clone_expert(&mut s, &c2, 9, 1), Err(EncoderError::UnknownIntent(9))));
    }
}
