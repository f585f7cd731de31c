//! Bounded exploration of the call-task-graph semantics.
//!
//! Works for every model class. Configurations are deduplicated by their
//! canonical isomorphism key, so the search quotient is exact. Results are
//! conclusive when the reachable space was exhausted within the limits and
//! no successor was pruned; otherwise they are explicitly inconclusive,
//! reflecting that exploration is only a semi-decision procedure for the
//! undecidable classes.
//!
//! Breadth-first search is used for coverability (shortest witnesses),
//! depth-first search with an on-path check for termination (lassos).
//! With more than one worker thread, successor computation is parallel
//! per layer and merged in layer order, so the result, including every
//! witness, is identical to the sequential one.

use crate::ctg::{Configuration, SemanticsOpts};
use crate::model::{ParikhImage, Qdas};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::{HashMap, HashSet};

/// Search limits. `max_configs` bounds the number of distinct
/// configurations visited; successors with more than `max_vertices`
/// vertices are pruned (and counted).
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_configs: usize,
    pub max_vertices: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_configs: 100_000,
            max_vertices: 64,
        }
    }
}

/// What the search saw.
#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    /// Distinct configurations visited.
    pub visited: usize,
    /// Largest BFS layer (or deepest DFS path).
    pub frontier_peak: usize,
    /// Successors pruned by `max_vertices`.
    pub truncated: usize,
    /// Layers completed (BFS) or longest path (DFS).
    pub depth: usize,
    /// The reachable space was exhausted with nothing pruned.
    pub complete: bool,
}

/// Coverability result of a bounded search.
#[derive(Debug, Clone)]
pub enum CoverOutcome {
    /// A reachable configuration covers the target; the trace lists the
    /// steps from the initial configuration.
    Covered { trace: Vec<String> },
    /// The whole reachable space was enumerated and no configuration
    /// covers the target.
    NotCoverableComplete,
    /// Limits were hit first.
    Inconclusive,
}

/// Termination result of a bounded search.
#[derive(Debug, Clone)]
pub enum TermOutcome {
    /// A cycle in the configuration space: steps to reach it, then the
    /// steps around it.
    NonTerminating {
        prefix: Vec<String>,
        cycle: Vec<String>,
    },
    /// Every run is finite; the whole space was enumerated.
    TerminatesComplete,
    /// Limits were hit first.
    Inconclusive,
}

struct Node {
    parent: usize,
    ordinal: usize,
}

/// Replay a path of successor ordinals from the initial configuration.
/// Returns the step descriptions and the final configuration. Panics if
/// an ordinal is out of range, which would mean the search and the
/// semantics disagree.
fn replay(model: &Qdas, opts: &SemanticsOpts, ordinals: &[usize]) -> (Vec<String>, Configuration) {
    let mut cfg = Configuration::initial(model);
    let mut descs = Vec::new();
    for &o in ordinals {
        let succs = cfg.successors(model, opts);
        let s = &succs[o];
        descs.push(s.desc.clone());
        cfg = s.config.clone();
    }
    (descs, cfg)
}

fn ordinals_to_root(arena: &[Node], mut idx: usize) -> Vec<usize> {
    let mut path = Vec::new();
    while idx != 0 {
        path.push(arena[idx].ordinal);
        idx = arena[idx].parent;
    }
    path.reverse();
    path
}

/// Breadth-first search underlying both [`explore_all`] and
/// [`check_cover_bounded`]. `stop` inspects each newly discovered
/// configuration; returning true ends the search with that node.
fn bfs(
    model: &Qdas,
    opts: &SemanticsOpts,
    limits: &Limits,
    threads: usize,
    mut on_config: impl FnMut(&Configuration) -> bool,
) -> (Option<Vec<usize>>, Stats, Vec<Configuration>, bool) {
    let mut stats = Stats::default();
    let mut visited: HashSet<String> = HashSet::new();
    let mut arena: Vec<Node> = Vec::new();
    let mut all: Vec<Configuration> = Vec::new();
    let mut hit_config_limit = false;

    let init = Configuration::initial(model);
    let key = init.canonical_key(model);
    visited.insert(key);
    arena.push(Node {
        parent: 0,
        ordinal: usize::MAX,
    });
    stats.visited = 1;
    if on_config(&init) {
        return (Some(Vec::new()), stats, all, false);
    }
    all.push(init.clone());
    let mut layer: Vec<(usize, Configuration)> = vec![(0, init)];

    // Ordinals recorded for replay must index the unfiltered successor
    // list, so pruning keeps the original positions.
    let expand = |cfg: &Configuration| -> (Vec<(usize, Configuration)>, usize) {
        let succs = cfg.successors(model, opts);
        let mut kept = Vec::new();
        let mut trunc = 0;
        for (ordinal, s) in succs.into_iter().enumerate() {
            if s.config.ctg.n_vertices() > limits.max_vertices {
                trunc += 1;
            } else {
                kept.push((ordinal, s.config));
            }
        }
        (kept, trunc)
    };

    while !layer.is_empty() {
        stats.frontier_peak = stats.frontier_peak.max(layer.len());
        stats.depth += 1;
        let expanded: Vec<(usize, Vec<(usize, Configuration)>, usize)> = if threads > 1 {
            layer
                .par_iter()
                .map(|(idx, cfg)| {
                    let (kept, trunc) = expand(cfg);
                    (*idx, kept, trunc)
                })
                .collect()
        } else {
            layer
                .iter()
                .map(|(idx, cfg)| {
                    let (kept, trunc) = expand(cfg);
                    (*idx, kept, trunc)
                })
                .collect()
        };
        let mut next = Vec::new();
        'merge: for (parent, kept, trunc) in expanded {
            stats.truncated += trunc;
            for (ordinal, cfg) in kept {
                let key = cfg.canonical_key(model);
                if !visited.insert(key) {
                    continue;
                }
                arena.push(Node { parent, ordinal });
                stats.visited += 1;
                if on_config(&cfg) {
                    let path = ordinals_to_root(&arena, arena.len() - 1);
                    return (Some(path), stats, all, hit_config_limit);
                }
                all.push(cfg.clone());
                next.push((arena.len() - 1, cfg));
                if stats.visited >= limits.max_configs {
                    hit_config_limit = true;
                    break 'merge;
                }
            }
        }
        if hit_config_limit {
            break;
        }
        layer = next;
    }
    stats.complete = !hit_config_limit && stats.truncated == 0;
    (None, stats, all, hit_config_limit)
}

/// Enumerate reachable configurations breadth-first, up to the limits.
pub fn explore_all(
    model: &Qdas,
    opts: &SemanticsOpts,
    limits: &Limits,
    threads: usize,
) -> (Vec<Configuration>, Stats) {
    let (_, stats, all, _) = bfs(model, opts, limits, threads, |_| false);
    (all, stats)
}

/// Bounded Parikh coverability: search for a reachable configuration
/// whose state multiset covers `target`. The returned trace is replayed
/// against the semantics before being reported.
pub fn check_cover_bounded(
    model: &Qdas,
    target: &ParikhImage,
    opts: &SemanticsOpts,
    limits: &Limits,
    threads: usize,
) -> (CoverOutcome, Stats) {
    let (hit, stats, _, limited) = bfs(model, opts, limits, threads, |cfg| {
        cfg.parikh().covers(target)
    });
    match hit {
        Some(ordinals) => {
            let (trace, end) = replay(model, opts, &ordinals);
            assert!(
                end.parikh().covers(target),
                "replayed witness does not cover the target"
            );
            (CoverOutcome::Covered { trace }, stats)
        }
        None if stats.complete && !limited => (CoverOutcome::NotCoverableComplete, stats),
        None => (CoverOutcome::Inconclusive, stats),
    }
}

/// Bounded termination check: depth-first search for a cycle of
/// configurations, deduplicating by canonical key. Conclusive when the
/// space was exhausted without pruning.
pub fn check_termination_bounded(
    model: &Qdas,
    opts: &SemanticsOpts,
    limits: &Limits,
) -> (TermOutcome, Stats) {
    struct Frame {
        succs: Vec<crate::ctg::Succ>,
        key: String,
        ordinal_in: usize,
        next_child: usize,
    }
    let mut stats = Stats::default();
    let mut done: HashSet<String> = HashSet::new();
    let mut on_path: HashMap<String, usize> = HashMap::new();
    let mut truncated = 0usize;
    let mut hit_limit = false;

    let init = Configuration::initial(model);
    let init_key = init.canonical_key(model);
    let mut stack = vec![Frame {
        key: init_key.clone(),
        ordinal_in: usize::MAX,
        next_child: 0,
        succs: init.successors(model, opts),
    }];
    on_path.insert(init_key, 0);
    stats.visited = 1;

    'outer: while let Some(top) = stack.last() {
        stats.frontier_peak = stats.frontier_peak.max(stack.len());
        stats.depth = stats.depth.max(stack.len());
        let child = top.next_child;
        if child >= top.succs.len() {
            let f = stack.pop().unwrap();
            on_path.remove(&f.key);
            done.insert(f.key);
            continue;
        }
        stack.last_mut().unwrap().next_child += 1;
        let succ_cfg = stack.last().unwrap().succs[child].config.clone();
        if succ_cfg.ctg.n_vertices() > limits.max_vertices {
            truncated += 1;
            continue;
        }
        let key = succ_cfg.canonical_key(model);
        if let Some(&pos) = on_path.get(&key) {
            // Lasso found. Replay it to produce validated descriptions.
            let mut ordinals: Vec<usize> = stack[1..].iter().map(|f| f.ordinal_in).collect();
            ordinals.push(child);
            let (descs, end) = replay(model, opts, &ordinals);
            assert_eq!(
                end.canonical_key(model),
                key,
                "replayed lasso does not close"
            );
            let prefix = descs[..pos].to_vec();
            let cycle = descs[pos..].to_vec();
            stats.truncated = truncated;
            return (TermOutcome::NonTerminating { prefix, cycle }, stats);
        }
        if done.contains(&key) {
            continue;
        }
        if stats.visited >= limits.max_configs {
            hit_limit = true;
            break 'outer;
        }
        stats.visited += 1;
        let succs = succ_cfg.successors(model, opts);
        on_path.insert(key.clone(), stack.len());
        stack.push(Frame {
            succs,
            key,
            ordinal_in: child,
            next_child: 0,
        });
    }
    stats.truncated = truncated;
    stats.complete = !hit_limit && truncated == 0;
    if stats.complete {
        (TermOutcome::TerminatesComplete, stats)
    } else {
        (TermOutcome::Inconclusive, stats)
    }
}

/// One uniformly random maximal run, cut off after `max_steps` steps.
/// Returns each step's description and resulting configuration.
pub fn random_walk(
    model: &Qdas,
    seed: u64,
    max_steps: usize,
    opts: &SemanticsOpts,
) -> Vec<(String, Configuration)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = Configuration::initial(model);
    let mut walk = Vec::new();
    for _ in 0..max_steps {
        let succs = cfg.successors(model, opts);
        if succs.is_empty() {
            break;
        }
        let pick = rng.gen_range(0..succs.len());
        cfg = succs[pick].config.clone();
        walk.push((succs[pick].desc.clone(), cfg.clone()));
    }
    walk
}
