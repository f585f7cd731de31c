//! Seeded random generators for models, nets and targets.
//!
//! Every generator is a pure function of its seed (ChaCha8 keyed by the
//! seed), so failures reproduce across runs and platforms. The sizes are
//! deliberately small: the generated objects feed cross-validation
//! harnesses that compare independent decision procedures, and those
//! need exhaustible state spaces more than they need variety in bulk.

use crate::model::{
    Action, Block, BlockId, ForkCount, Guard, GuardAtom, ParikhImage, Qdas, QueueDecl, QueueKind,
    StateId, Transition,
};
use crate::petri::{Marking, Net, Weight};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// What dispatch and queue kinds a generated model may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelShape {
    /// Any dispatch kind over a mix of serial and concurrent queues.
    Mixed,
    /// Synchronous dispatch over serial queues only.
    SerialSync,
    /// Asynchronous dispatch over concurrent queues only.
    AsyncConcurrent,
    /// Extended: asynchronous dispatch and fork/join over concurrent
    /// queues, including unbounded forks.
    Extended,
}

/// Generate a small well-formed model of the requested shape.
///
/// Bounds: at most 4 blocks, 4 states per block, 2 variables over a
/// domain of size 2, 2 queues. The result always passes validation.
pub fn random_model(shape: ModelShape, seed: u64) -> Qdas {
    let mut r = rng(seed);
    let n_blocks = r.gen_range(2..=if shape == ModelShape::SerialSync { 4 } else { 3 });
    let n_vars = r.gen_range(0..=2usize);
    let domain: Vec<String> = vec!["0".to_string(), "1".to_string()];
    let n_queues = r.gen_range(1..=2usize);
    let queues: Vec<QueueDecl> = (0..n_queues)
        .map(|q| QueueDecl {
            name: format!("q{q}"),
            kind: match shape {
                ModelShape::SerialSync => QueueKind::Serial,
                ModelShape::AsyncConcurrent | ModelShape::Extended => QueueKind::Concurrent,
                ModelShape::Mixed => {
                    if r.gen_bool(0.5) {
                        QueueKind::Serial
                    } else {
                        QueueKind::Concurrent
                    }
                }
            },
        })
        .collect();

    let mut blocks = Vec::new();
    let mut states: Vec<(BlockId, String)> = Vec::new();
    let mut block_states: Vec<Vec<StateId>> = Vec::new();
    for b in 0..n_blocks {
        let name = if b == 0 { "main".to_string() } else { format!("b{b}") };
        let n_states = r.gen_range(2..=4usize);
        let ids: Vec<StateId> = (0..n_states)
            .map(|s| {
                let id = states.len();
                states.push((b, format!("s{s}")));
                id
            })
            .collect();
        blocks.push(Block {
            name,
            states: ids.clone(),
            init: ids[0],
            fin: *ids.last().unwrap(),
            transitions: Vec::new(),
        });
        block_states.push(ids);
    }

    for b in 0..n_blocks {
        let ids = block_states[b].clone();
        let fin = *ids.last().unwrap();
        for &s in ids.iter().filter(|&&s| s != fin) {
            let n_out = r.gen_range(1..=2usize);
            for _ in 0..n_out {
                let to = *ids.choose(&mut r).unwrap();
                let action = random_action(&mut r, shape, n_blocks, n_vars, domain.len(), &queues);
                blocks[b].transitions.push(Transition { from: s, action, to });
            }
        }
    }

    let m = Qdas::new(
        format!("gen{seed}"),
        shape == ModelShape::Extended,
        domain,
        (0..n_vars).map(|x| format!("x{x}")).collect(),
        queues,
        blocks,
        states,
    );
    debug_assert!(m.validate().is_empty(), "{:?}", m.validate());
    m
}

fn random_action(
    r: &mut ChaCha8Rng,
    shape: ModelShape,
    n_blocks: usize,
    n_vars: usize,
    domain: usize,
    queues: &[QueueDecl],
) -> Action {
    // Dispatch targets exclude main (block 0); serial queues cannot take
    // forks; extended models cannot dispatch synchronously.
    let callee = |r: &mut ChaCha8Rng| r.gen_range(1..n_blocks);
    let queue = |r: &mut ChaCha8Rng| r.gen_range(0..queues.len());
    let pick = r.gen_range(0..100u32);
    if pick >= 40 {
        // Data action.
        if n_vars == 0 || pick >= 90 {
            let mut atoms = Vec::new();
            for _ in 0..r.gen_range(0..=2usize.min(n_vars)) {
                atoms.push(GuardAtom {
                    var: r.gen_range(0..n_vars),
                    positive: r.gen_bool(0.7),
                    val: r.gen_range(0..domain),
                });
            }
            return Action::Test(Guard(atoms));
        }
        if r.gen_bool(0.5) {
            return Action::Test(Guard(vec![GuardAtom {
                var: r.gen_range(0..n_vars),
                positive: r.gen_bool(0.7),
                val: r.gen_range(0..domain),
            }]));
        }
        return Action::Assign {
            var: r.gen_range(0..n_vars),
            val: r.gen_range(0..domain),
        };
    }
    match shape {
        ModelShape::SerialSync => Action::DispatchS {
            queue: queue(r),
            block: callee(r),
        },
        ModelShape::AsyncConcurrent => Action::DispatchA {
            queue: queue(r),
            block: callee(r),
        },
        ModelShape::Extended => {
            if r.gen_bool(0.5) {
                return Action::DispatchA {
                    queue: queue(r),
                    block: callee(r),
                };
            }
            let count = match r.gen_range(0..4u32) {
                0 => ForkCount::Star,
                n => ForkCount::Finite(n),
            };
            Action::ForkJoin {
                queue: queue(r),
                block: callee(r),
                count,
            }
        }
        ModelShape::Mixed => {
            let q = queue(r);
            if r.gen_bool(0.5) {
                Action::DispatchA {
                    queue: q,
                    block: callee(r),
                }
            } else {
                Action::DispatchS {
                    queue: q,
                    block: callee(r),
                }
            }
        }
    }
}

/// Random Parikh target over a model's states: one or two distinct
/// states with counts of one or two.
pub fn random_target(model: &Qdas, seed: u64) -> ParikhImage {
    let mut r = rng(seed);
    let mut f = ParikhImage::default();
    for _ in 0..r.gen_range(1..=2u32) {
        f.add(r.gen_range(0..model.n_states()), u64::from(r.gen_range(1..=2u32)));
    }
    f
}

/// Generate a small Petri net with 0/1 arcs.
///
/// Bounds: at most 5 places and 6 transitions, initial counts at most 2.
pub fn random_net(seed: u64) -> Net {
    let mut r = rng(seed);
    let n_places = r.gen_range(2..=5usize);
    let n_trans = r.gen_range(2..=6usize);
    let mut net = Net::default();
    net.name = format!("gen{seed}");
    for p in 0..n_places {
        let init = [0, 0, 1, 2][r.gen_range(0..4usize)];
        net.add_place(&format!("p{p}"), init);
    }
    for t in 0..n_trans {
        let mut input = Vec::new();
        let mut output = Vec::new();
        for p in 0..n_places {
            if r.gen_bool(0.3) {
                input.push((p, 1u64));
            }
            if r.gen_bool(0.35) {
                output.push((p, Weight::Finite(1)));
            }
        }
        net.add_trans(&format!("t{t}"), &input, &output);
    }
    net
}

/// Like [`random_net`] but with a few omega output arcs.
pub fn random_omega_net(seed: u64) -> Net {
    let mut r = rng(seed);
    let mut net = random_net(seed.wrapping_add(0x9e3779b97f4a7c15));
    for t in &mut net.transitions {
        for w in &mut t.output {
            if *w == Weight::Finite(1) && r.gen_bool(0.2) {
                *w = Weight::Omega;
            }
        }
    }
    net
}

/// Random coverability target for a net: counts bounded by `cap`, at
/// least one nonzero entry.
pub fn random_net_target(net: &Net, seed: u64, cap: u64) -> Marking {
    let mut r = rng(seed);
    loop {
        let m: Marking = (0..net.places.len())
            .map(|_| {
                if r.gen_bool(0.5) {
                    r.gen_range(0..=cap)
                } else {
                    0
                }
            })
            .collect();
        if m.iter().any(|&k| k > 0) {
            return m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DispatchClass, QueueClass};

    #[test]
    fn generated_models_validate_and_match_their_shape() {
        for seed in 0..40 {
            for shape in [
                ModelShape::Mixed,
                ModelShape::SerialSync,
                ModelShape::AsyncConcurrent,
                ModelShape::Extended,
            ] {
                let m = random_model(shape, seed);
                assert!(m.validate().is_empty(), "seed {seed} {shape:?}");
                let tags = m.classify();
                match shape {
                    ModelShape::SerialSync => {
                        assert!(tags.is_synchronous());
                        assert_ne!(tags.queues, QueueClass::Concurrent);
                    }
                    ModelShape::AsyncConcurrent => {
                        assert!(tags.is_asynchronous());
                        assert!(!m.extended);
                        assert_ne!(tags.queues, QueueClass::Serial);
                    }
                    ModelShape::Extended => {
                        assert!(m.extended);
                        assert_ne!(tags.dispatch, DispatchClass::Sync);
                    }
                    ModelShape::Mixed => {}
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let a = crate::dsl::print_model(&random_model(ModelShape::Mixed, 7));
        let b = crate::dsl::print_model(&random_model(ModelShape::Mixed, 7));
        assert_eq!(a, b);
        let c = crate::dsl::print_model(&random_model(ModelShape::Mixed, 8));
        assert_ne!(a, c);
        assert_eq!(
            crate::petri::print_net(&random_net(3)),
            crate::petri::print_net(&random_net(3))
        );
    }

    #[test]
    fn generated_models_round_trip_through_the_dsl() {
        for seed in 0..20 {
            let m = random_model(ModelShape::Mixed, seed);
            let printed = crate::dsl::print_model(&m);
            let again = crate::dsl::parse_model(&printed).unwrap();
            assert_eq!(crate::dsl::print_model(&again), printed, "seed {seed}");
        }
    }

    #[test]
    fn generated_nets_have_unit_arcs_and_omega_only_when_asked() {
        for seed in 0..30 {
            let net = random_net(seed);
            assert!(net.places.len() <= 5);
            assert!(net.transitions.len() <= 6);
            assert!(!net.has_omega());
            for t in &net.transitions {
                assert!(t.input.iter().all(|&w| w <= 1));
            }
            let printed = crate::petri::print_net(&net);
            let again = crate::petri::parse_net(&printed).unwrap();
            assert_eq!(crate::petri::print_net(&again), printed);
        }
        assert!((0..30).any(|seed| random_omega_net(seed).has_omega()));
    }

    #[test]
    fn targets_are_nonempty_and_in_range(){
        for seed in 0..10 {
            let m = random_model(ModelShape::SerialSync, seed);
            let f = random_target(&m, seed);
            assert!(!f.is_empty());
            assert!(f.0.keys().all(|&s| s < m.n_states()));
            let net = random_net(seed);
            let t = random_net_target(&net, seed, 2);
            assert_eq!(t.len(), net.places.len());
            assert!(t.iter().any(|&k| k > 0));
        }
    }
}
