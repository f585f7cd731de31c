//! On synchronous models over serial queues the fused-dispatch semantics
//! and the pushdown translation must be step-for-step equivalent: every
//! reachable configuration is a chain of waiting tasks, and mapping the
//! chain onto a pushdown configuration (callers' resume states on the
//! stack, the running task in the control) is a bisimulation. The tests
//! check reachable-set equality under that mapping, per-configuration
//! successor agreement, Parikh agreement, and agreement of the two
//! coverability procedures on random targets.

use qdas::ctg::{Configuration, EdgeKind, SemanticsOpts, VId, VKind};
use qdas::explore::{check_cover_bounded, explore_all, CoverOutcome, Limits};
use qdas::model::{Qdas, QueueKind};
use qdas::pds::{check_parikh_cover_sync, from_sync_qdas, Pds, StackSym, SyncCover};
use qdas::testgen::{random_model, random_target, ModelShape};
use std::collections::{BTreeMap, BTreeSet};

type PdsConfig = (usize, Vec<usize>);

/// Vertices in caller-to-callee order, following the wait edges from the
/// main task. Asserts the chain shape expected under fused dispatch.
fn chain(cfg: &Configuration, model: &Qdas) -> Vec<VId> {
    for (_, v) in cfg.ctg.vertices() {
        assert_eq!(v.kind, VKind::Task, "fused semantics leaves no pending calls");
    }
    let Some((root, _)) = cfg.ctg.vertices().find(|(_, v)| v.block == model.main) else {
        assert_eq!(cfg.ctg.n_vertices(), 0);
        return Vec::new();
    };
    let mut out = vec![root];
    let mut cur = root;
    while let Some(e) = cfg
        .ctg
        .edges()
        .iter()
        .find(|e| e.src == cur && e.kind == EdgeKind::Wait)
    {
        out.push(e.dst);
        cur = e.dst;
    }
    assert_eq!(out.len(), cfg.ctg.n_vertices(), "configuration is one chain");
    out
}

struct Mapper {
    ctl_idx: BTreeMap<(qdas::pds::SyncCtl, qdas::model::Valuation), usize>,
    sym_idx: BTreeMap<StackSym, usize>,
}

impl Mapper {
    fn new(pds: &Pds) -> Self {
        Mapper {
            ctl_idx: pds
                .controls
                .iter()
                .enumerate()
                .map(|(i, c)| (c.clone(), i))
                .collect(),
            sym_idx: pds
                .symbols
                .iter()
                .enumerate()
                .map(|(i, &s)| (s, i))
                .collect(),
        }
    }

    fn map(&self, model: &Qdas, cfg: &Configuration) -> PdsConfig {
        let ids = chain(cfg, model);
        let occ: BTreeSet<_> = ids
            .iter()
            .skip(1)
            .filter_map(|&v| cfg.ctg.vertex(v).queue)
            .filter(|&q| model.queues[q].kind == QueueKind::Serial)
            .collect();
        let skel = qdas::pds::SyncCtl {
            state: ids.last().map(|&v| cfg.ctg.vertex(v).state),
            occ,
        };
        let ctl = *self
            .ctl_idx
            .get(&(skel, cfg.val.clone()))
            .expect("mapped control exists in the pushdown system");
        let stack: Vec<usize> = ids
            .windows(2)
            .map(|w| {
                let callee = cfg.ctg.vertex(w[1]);
                let sym = StackSym {
                    ret: cfg.ctg.vertex(w[0]).state,
                    serial: callee
                        .queue
                        .filter(|&q| model.queues[q].kind == QueueKind::Serial),
                };
                *self
                    .sym_idx
                    .get(&sym)
                    .expect("mapped symbol exists in the pushdown system")
            })
            .collect();
        (ctl, stack)
    }
}

fn pds_reachable(pds: &Pds) -> BTreeSet<PdsConfig> {
    let mut seen: BTreeSet<PdsConfig> = BTreeSet::new();
    let mut frontier = vec![(pds.init, Vec::new())];
    seen.insert(frontier[0].clone());
    while let Some((ctl, stack)) = frontier.pop() {
        for (_, next) in pds.step_config(ctl, &stack) {
            if seen.insert(next.clone()) {
                frontier.push(next);
            }
        }
        assert!(seen.len() <= 200_000, "reachable set must stay finite");
    }
    seen
}

fn setup(seed: u64) -> (Qdas, Pds, SemanticsOpts, Limits) {
    let model = random_model(ModelShape::SerialSync, seed);
    let pds = from_sync_qdas(&model).unwrap().expand_data(&model);
    let opts = SemanticsOpts {
        atomic_sync: true,
        ..SemanticsOpts::default()
    };
    let n_serial = model
        .queues
        .iter()
        .filter(|q| q.kind == QueueKind::Serial)
        .count();
    let limits = Limits {
        max_configs: 100_000,
        max_vertices: n_serial + 2,
    };
    (model, pds, opts, limits)
}

#[test]
fn fused_exploration_matches_pushdown_reachability() {
    for seed in 0..25 {
        let (model, pds, opts, limits) = setup(seed);
        let (configs, stats) = explore_all(&model, &opts, &limits, 1);
        assert!(stats.complete, "seed {seed}: chain length is bounded by the serial queues");
        let mapper = Mapper::new(&pds);

        let mapped: BTreeSet<PdsConfig> =
            configs.iter().map(|c| mapper.map(&model, c)).collect();
        assert_eq!(
            mapped.len(),
            configs.len(),
            "seed {seed}: the mapping is injective on canonical representatives"
        );
        let reach = pds_reachable(&pds);
        assert_eq!(mapped, reach, "seed {seed}: reachable sets agree");

        for cfg in &configs {
            let (ctl, stack) = mapper.map(&model, cfg);
            assert_eq!(
                cfg.parikh(),
                pds.config_parikh(ctl, &stack),
                "seed {seed}: Parikh images agree"
            );
            let succ_model: BTreeSet<PdsConfig> = cfg
                .successors(&model, &opts)
                .into_iter()
                .map(|s| mapper.map(&model, &s.config))
                .collect();
            let succ_pds: BTreeSet<PdsConfig> = pds
                .step_config(ctl, &stack)
                .into_iter()
                .map(|(_, next)| next)
                .collect();
            assert_eq!(succ_model, succ_pds, "seed {seed}: one-step successors agree");
        }
    }
}

#[test]
fn pushdown_cover_agrees_with_exhaustive_search() {
    for seed in 0..25 {
        let (model, pds, opts, limits) = setup(seed);
        let reach = pds_reachable(&pds);
        for t in 0..5 {
            let target = random_target(&model, seed * 101 + t);
            let sync = check_parikh_cover_sync(&pds, &target);
            let (bounded, stats) = check_cover_bounded(&model, &target, &opts, &limits, 1);
            match (&sync, &bounded) {
                (SyncCover::Coverable { control, stack }, CoverOutcome::Covered { .. }) => {
                    assert!(
                        pds.config_parikh(*control, stack).covers(&target),
                        "seed {seed}: witness covers the target"
                    );
                    assert!(
                        reach.contains(&(*control, stack.clone())),
                        "seed {seed}: witness is reachable"
                    );
                }
                (SyncCover::NotCoverable, CoverOutcome::NotCoverableComplete) => {
                    assert!(stats.complete, "seed {seed}: negative verdicts need exhaustion");
                }
                other => panic!("seed {seed} target {t}: procedures disagree: {other:?}"),
            }
        }
    }
}
