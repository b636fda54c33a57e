use sparsedit::encoder::gradcheck::{gradcheck, random_batch};
use sparsedit::encoder::{EncoderConfig, Granularity, Mode, ParamStore, RouterKind, SparsityMode};

fn toy(mode: SparsityMode, router: RouterKind, gran: Granularity, share: bool) -> EncoderConfig {
    EncoderConfig {
        sparsity_mode: mode,
        router,
        routing_granularity: gran,
        share_tag_gen: share,
        lambda: 0.7,
        ..EncoderConfig::toy()
    }
}

fn variants() -> Vec<EncoderConfig> {
    use Granularity::*;
    use RouterKind::*;
    use SparsityMode::*;
    vec![
        toy(Dense, TaskId, Sequence, false),
        toy(SparseFFN, TaskId, Sequence, false),
        toy(SparseFFN, Linear, Sequence, false),
        toy(SparseFFN, Linear, Token, false),
        toy(SparseFFN, TaskIdLinear, Sequence, true),
        toy(SparseLastLayer, TaskId, Sequence, false),
        toy(SparseLastLayer, Linear, Token, false),
        toy(SparseLastLayer, TaskIdLinear, Sequence, false),
    ]
}

#[test]
fn analytic_gradients_match_central_differences() {
    for (v, cfg) in variants().into_iter().enumerate() {
        // Larger router weights than the default init so routing gradients
        // are well above the noise floor.
        let mut store = ParamStore::init(&cfg).unwrap();
        let names: Vec<String> = store
            .iter()
            .filter(|(n, _)| n.contains(".router."))
            .map(|(n, _)| n.to_string())
            .collect();
        for n in names {
            for x in &mut store.get_mut(&n).unwrap().data {
                *x *= 300.0;
            }
        }
        for mode in Mode::BOTH {
            let batch = random_batch(&cfg, 1, mode, 3, 11 + v as u64);
            let report = gradcheck(&cfg, &store, &batch, 1e-5).unwrap();
            println!(
                "{:?}/{:?}/{:?}/share={} {mode:?}: max rel {:.2e} at {:?} over {}",
                cfg.sparsity_mode, cfg.router, cfg.routing_granularity, cfg.share_tag_gen, report.max_rel_error, report.worst, report.checked
            );
            assert!(report.max_rel_error <= 1e-4, "{:?}", report.worst);
        }
    }
}
