//! End-to-end checks of the model-to-model constructions: hand-computed
//! verdicts for the reduction gadgets, and agreement between the Petri
//! abstraction and the explorer.

use qdas::ctg::SemanticsOpts;
use qdas::explore::{check_cover_bounded, CoverOutcome, Limits};
use qdas::model::ParikhImage;
use qdas::petri::PnCover;
use qdas::testgen::{random_model, ModelShape};
use qdas::translate::{
    config_marking, fifo_to_qdas, parse_2cs, parse_fifo, pn_to_qdas, qdas_to_pn,
    two_counter_to_qdas,
};

fn cover_any(
    model: &qdas::model::Qdas,
    targets: &[ParikhImage],
    limits: &Limits,
) -> (bool, bool) {
    // (some target covered, all verdicts conclusive)
    let opts = SemanticsOpts::default();
    let mut all_conclusive = true;
    for t in targets {
        match check_cover_bounded(model, t, &opts, limits, 1).0 {
            CoverOutcome::Covered { .. } => return (true, true),
            CoverOutcome::NotCoverableComplete => {}
            CoverOutcome::Inconclusive => all_conclusive = false,
        }
    }
    (false, all_conclusive)
}

#[test]
fn fifo_internal_loop_never_reaches_the_goal() {
    let f = parse_fifo(
        "fifo loopy {
           states s0, g;
           init s0;
           s0 -> s0 : eps;
         }",
    )
    .unwrap();
    let (m, targets) = fifo_to_qdas(&f, 1);
    assert_eq!(targets.len(), 1);
    let (covered, conclusive) = cover_any(&m, &targets, &Limits::default());
    assert!(!covered);
    assert!(conclusive, "the loop gadget has a finite configuration space");
}

#[test]
fn fifo_send_then_receive_reaches_the_goal() {
    let f = parse_fifo(
        "fifo pingpong {
           states s0, s1, g;
           init s0;
           messages a;
           s0 -> s1 : !a;
           s1 -> g : ?a;
         }",
    )
    .unwrap();
    let (m, targets) = fifo_to_qdas(&f, 2);
    let (covered, _) = cover_any(&m, &targets, &Limits::default());
    assert!(covered);
}

#[test]
fn counter_machine_cannot_zero_test_a_positive_counter() {
    let cs = parse_2cs(
        "2cs stuck {
           states s0, s1, g;
           init s0;
           s0 -> s1 : incr(1);
           s1 -> g : zero(1);
         }",
    )
    .unwrap();
    let (m, target) = two_counter_to_qdas(&cs, 2);
    let opts = SemanticsOpts::default();
    let (out, stats) = check_cover_bounded(&m, &target, &opts, &Limits::default(), 1);
    assert!(matches!(out, CoverOutcome::NotCoverableComplete), "{out:?}");
    assert!(stats.complete);
}

#[test]
fn counter_machine_up_down_zero_reaches_the_goal() {
    let cs = parse_2cs(
        "2cs updown {
           states s0, s1, s2, g;
           init s0;
           s0 -> s1 : incr(1);
           s1 -> s2 : decr(1);
           s2 -> g : zero(1);
         }",
    )
    .unwrap();
    let (m, target) = two_counter_to_qdas(&cs, 3);
    let opts = SemanticsOpts::default();
    let (out, _) = check_cover_bounded(&m, &target, &opts, &Limits::default(), 1);
    let CoverOutcome::Covered { trace } = out else {
        panic!("expected a witness, got {out:?}");
    };
    assert!(!trace.is_empty());
}

#[test]
fn counters_are_independent() {
    // Incrementing counter 1 leaves counter 2 answerable to a zero test.
    let cs = parse_2cs(
        "2cs cross {
           states s0, s1, g;
           init s0;
           s0 -> s1 : incr(1);
           s1 -> g : zero(2);
         }",
    )
    .unwrap();
    let (m, target) = two_counter_to_qdas(&cs, 2);
    let opts = SemanticsOpts::default();
    let (out, _) = check_cover_bounded(&m, &target, &opts, &Limits::default(), 1);
    assert!(matches!(out, CoverOutcome::Covered { .. }), "{out:?}");
}

#[test]
fn walk_configurations_stay_coverable_in_the_net() {
    // Every configuration reached by the semantics must map to a
    // coverable marking of the Parikh abstraction.
    for seed in 0..12u64 {
        let m = random_model(ModelShape::AsyncConcurrent, seed);
        let net = qdas_to_pn(&m).unwrap();
        for (step, cfg) in random_walk_configs(&m, seed) {
            let marking = config_marking(&net, &m, &cfg);
            match net.coverable(&marking).unwrap() {
                PnCover::Coverable { .. } => {}
                PnCover::NotCoverable => {
                    panic!("seed {seed}: config after `{step}` not coverable in the net")
                }
            }
        }
    }
}

fn random_walk_configs(
    m: &qdas::model::Qdas,
    seed: u64,
) -> Vec<(String, qdas::ctg::Configuration)> {
    qdas::explore::random_walk(m, seed, 40, &SemanticsOpts::default())
}

#[test]
fn net_round_trip_preserves_coverability_verdicts() {
    // One coverable and one uncoverable marking of a handcrafted net,
    // checked through the generated model with an exhaustive search.
    // The net must terminate for the negative side to exhaust: every
    // firing leaves a finished task behind, so a net with an infinite
    // firing sequence yields a model with unboundedly many vertices.
    let net = qdas::petri::parse_net(
        "net drain
         place a init 2
         place b
         trans move in a out b",
    )
    .unwrap();
    let (m, enc) = pn_to_qdas(&net).unwrap();
    let opts = SemanticsOpts::default();
    let limits = Limits {
        max_configs: 400_000,
        max_vertices: 12,
    };

    let coverable = net.parse_marking("b=2").unwrap();
    assert!(matches!(
        net.coverable(&coverable).unwrap(),
        PnCover::Coverable { .. }
    ));
    let (out, _) = check_cover_bounded(&m, &enc.cover_target(&coverable), &opts, &limits, 1);
    assert!(matches!(out, CoverOutcome::Covered { .. }), "{out:?}");

    let uncoverable = net.parse_marking("b=3").unwrap();
    assert!(matches!(
        net.coverable(&uncoverable).unwrap(),
        PnCover::NotCoverable
    ));
    let (out, _) = check_cover_bounded(&m, &enc.cover_target(&uncoverable), &opts, &limits, 1);
    assert!(
        matches!(out, CoverOutcome::NotCoverableComplete),
        "search for an impossible marking must exhaust, got {out:?}"
    );
}
