//! Semantic properties checked on randomly generated models: reachable
//! configurations stay well formed, Parikh images track vertex counts,
//! synchronous models keep the wait-chain shape with its vertex bound,
//! fork of one behaves like a synchronous dispatch, and exploration is
//! deterministic across thread counts and monotone in its limits.

use qdas::ctg::{Configuration, EdgeKind, SemanticsOpts};
use qdas::dsl::{parse_model, print_model};
use qdas::explore::{
    check_cover_bounded, check_termination_bounded, explore_all, random_walk, CoverOutcome,
    Limits, TermOutcome,
};
use qdas::model::{Qdas, QueueKind};
use qdas::testgen::{random_model, random_target, ModelShape};
use std::collections::BTreeMap;

const SHAPES: [ModelShape; 4] = [
    ModelShape::Mixed,
    ModelShape::SerialSync,
    ModelShape::AsyncConcurrent,
    ModelShape::Extended,
];

#[test]
fn random_walks_stay_well_formed() {
    for shape in SHAPES {
        for seed in 0..12 {
            let model = random_model(shape, seed);
            for (desc, cfg) in random_walk(&model, seed ^ 0xabcd, 200, &SemanticsOpts::default())
            {
                cfg.ctg
                    .well_formed(&model)
                    .unwrap_or_else(|e| panic!("{shape:?} seed {seed}: after `{desc}`: {e}"));
                let total: u64 = cfg.parikh().0.values().sum();
                assert_eq!(
                    total as usize,
                    cfg.ctg.n_vertices(),
                    "Parikh counts every vertex exactly once"
                );
            }
        }
    }
}

/// Between consecutive configurations the Parikh image moves by one rule:
/// at most one state loses exactly one vertex, and any state gaining two
/// or more is some block's initial state (a fork enqueueing n calls).
#[test]
fn parikh_deltas_follow_single_rules() {
    for shape in SHAPES {
        for seed in 0..12 {
            let model = random_model(shape, seed);
            let inits: Vec<_> = model.blocks.iter().map(|b| b.init).collect();
            let mut prev = Configuration::initial(&model).parikh();
            for (desc, cfg) in random_walk(&model, seed ^ 0x7711, 120, &SemanticsOpts::default())
            {
                let cur = cfg.parikh();
                let mut delta: BTreeMap<usize, i64> = BTreeMap::new();
                for (&s, &n) in &cur.0 {
                    delta.insert(s, n as i64);
                }
                for (&s, &n) in &prev.0 {
                    *delta.entry(s).or_insert(0) -= n as i64;
                }
                delta.retain(|_, d| *d != 0);
                let drops: Vec<_> = delta.iter().filter(|(_, &d)| d < 0).collect();
                assert!(
                    drops.len() <= 1 && drops.iter().all(|(_, &d)| d == -1),
                    "{shape:?} seed {seed}: `{desc}` dropped {drops:?}"
                );
                for (&s, &d) in &delta {
                    assert!(
                        d < 2 || inits.contains(&s),
                        "{shape:?} seed {seed}: `{desc}` grew non-initial state {s} by {d}"
                    );
                }
                prev = cur;
            }
        }
    }
}

/// Synchronous models over serial queues: every reachable graph is one
/// wait chain with at most one unblocked vertex, no queue edges, and at
/// most one vertex per serial queue plus main plus one pending call.
#[test]
fn synchronous_configurations_are_bounded_wait_chains() {
    for seed in 0..20 {
        let model = random_model(ModelShape::SerialSync, seed);
        let n_serial = model
            .queues
            .iter()
            .filter(|q| q.kind == QueueKind::Serial)
            .count();
        let limits = Limits {
            max_configs: 200_000,
            max_vertices: n_serial + 3,
        };
        let (configs, stats) = explore_all(&model, &SemanticsOpts::default(), &limits, 1);
        assert!(stats.complete, "seed {seed}: one extra slot must suffice");
        for cfg in &configs {
            assert!(
                cfg.ctg.n_vertices() <= n_serial + 2,
                "seed {seed}: chain exceeds the serial-queue bound"
            );
            let unblocked = cfg
                .ctg
                .vertices()
                .filter(|(v, _)| cfg.ctg.is_unblocked(*v))
                .count();
            assert!(unblocked <= 1, "seed {seed}: at most one runnable vertex");
            let mut out_w: BTreeMap<_, usize> = BTreeMap::new();
            let mut in_w: BTreeMap<_, usize> = BTreeMap::new();
            for e in cfg.ctg.edges() {
                match e.kind {
                    EdgeKind::Fifo(_) => panic!("seed {seed}: a queue never buffers two calls"),
                    EdgeKind::Wait => {
                        *out_w.entry(e.src).or_default() += 1;
                        *in_w.entry(e.dst).or_default() += 1;
                    }
                    EdgeKind::Block(_) => {}
                }
            }
            assert!(out_w.values().all(|&n| n == 1), "seed {seed}: chain shape");
            assert!(in_w.values().all(|&n| n == 1), "seed {seed}: chain shape");
            let wait_edges = cfg.ctg.edges().iter().filter(|e| e.kind == EdgeKind::Wait);
            assert_eq!(
                wait_edges.count() + 1,
                cfg.ctg.n_vertices().max(1),
                "seed {seed}: wait edges link all vertices into one path"
            );
        }
    }
}

#[test]
fn fork_of_one_matches_synchronous_dispatch() {
    let sync_src = "
qdas pair_a {
  domain { 0 }
  cqueue q;
  block main { states m0, m1, f; init m0; final f;
    m0 -> m1 : dispatch_s(q, w);
    m1 -> f : true;
  }
  block w { states w0, f; init w0; final f; w0 -> f : true; }
}
";
    let fork_src = "
eqdas pair_b {
  domain { 0 }
  cqueue q;
  block main { states m0, m1, f; init m0; final f;
    m0 -> m1 : forkjoin(q, w, 1);
    m1 -> f : true;
  }
  block w { states w0, f; init w0; final f; w0 -> f : true; }
}
";
    let a = parse_model(sync_src).unwrap();
    let b = parse_model(fork_src).unwrap();
    let limits = Limits::default();
    let keys = |m: &Qdas| -> std::collections::BTreeSet<String> {
        let (configs, stats) = explore_all(m, &SemanticsOpts::default(), &limits, 1);
        assert!(stats.complete);
        configs.iter().map(|c| c.canonical_key(m)).collect()
    };
    assert_eq!(keys(&a), keys(&b));
}

#[test]
fn exploration_is_deterministic_across_thread_counts() {
    for shape in SHAPES {
        for seed in 0..6 {
            let model = random_model(shape, seed);
            let limits = Limits {
                max_configs: 3_000,
                max_vertices: 10,
            };
            let opts = SemanticsOpts::default();
            let (c1, s1) = explore_all(&model, &opts, &limits, 1);
            let (c4, s4) = explore_all(&model, &opts, &limits, 4);
            let k1: Vec<String> = c1.iter().map(|c| c.canonical_key(&model)).collect();
            let k4: Vec<String> = c4.iter().map(|c| c.canonical_key(&model)).collect();
            assert_eq!(k1, k4, "{shape:?} seed {seed}: same configurations, same order");
            assert_eq!(s1.visited, s4.visited);
            assert_eq!(s1.truncated, s4.truncated);

            let target = random_target(&model, seed + 500);
            let (o1, _) = check_cover_bounded(&model, &target, &opts, &limits, 1);
            let (o4, _) = check_cover_bounded(&model, &target, &opts, &limits, 4);
            assert_eq!(
                format!("{o1:?}"),
                format!("{o4:?}"),
                "{shape:?} seed {seed}: cover outcome including the trace"
            );
        }
    }
}

#[test]
fn larger_limits_never_lose_witnesses() {
    for shape in SHAPES {
        for seed in 0..8 {
            let model = random_model(shape, seed);
            let target = random_target(&model, seed + 900);
            let opts = SemanticsOpts::default();
            let small = Limits {
                max_configs: 300,
                max_vertices: 6,
            };
            let big = Limits {
                max_configs: 3_000,
                max_vertices: 12,
            };
            let (o_small, _) = check_cover_bounded(&model, &target, &opts, &small, 1);
            if matches!(o_small, CoverOutcome::Covered { .. }) {
                let (o_big, _) = check_cover_bounded(&model, &target, &opts, &big, 1);
                assert!(
                    matches!(o_big, CoverOutcome::Covered { .. }),
                    "{shape:?} seed {seed}: enlarging limits lost a witness"
                );
            }
        }
    }
}

#[test]
fn reported_lassos_are_nonempty() {
    for shape in SHAPES {
        for seed in 0..10 {
            let model = random_model(shape, seed);
            let limits = Limits {
                max_configs: 2_000,
                max_vertices: 8,
            };
            let (out, _) = check_termination_bounded(&model, &SemanticsOpts::default(), &limits);
            if let TermOutcome::NonTerminating { cycle, .. } = out {
                assert!(!cycle.is_empty(), "{shape:?} seed {seed}: empty cycle");
            }
        }
    }
}

#[test]
fn printed_models_reparse_to_the_same_model() {
    for shape in SHAPES {
        for seed in 0..12 {
            let model = random_model(shape, seed);
            let printed = print_model(&model);
            let reparsed = parse_model(&printed)
                .unwrap_or_else(|e| panic!("{shape:?} seed {seed}: reparse failed: {e}\n{printed}"));
            assert_eq!(
                printed,
                print_model(&reparsed),
                "{shape:?} seed {seed}: printing is a fixed point"
            );
            assert_eq!(
                model.classify().to_string(),
                reparsed.classify().to_string()
            );
        }
    }
}
