//! Core model types: queue-dispatch asynchronous systems (QDAS).
//!
//! A model is a finite set of blocks (labeled transition systems over a
//! shared action alphabet), a set of FIFO queues partitioned into serial
//! and concurrent queues, and a finite-domain store of global variables.
//! Actions either dispatch a block onto a queue (asynchronously or
//! synchronously), fork a number of copies and join on their termination
//! (extended models only), test the store with a conjunction of
//! (in)equalities, or assign a constant to a variable.

use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Index of a block in [`Qdas::blocks`].
pub type BlockId = usize;
/// Global index of a state in [`Qdas::states`].
pub type StateId = usize;
/// Index of a variable in [`Qdas::vars`].
pub type VarId = usize;
/// Index of a domain value in [`Qdas::domain`].
pub type ValId = usize;
/// Index of a queue in [`Qdas::queues`].
pub type QueueId = usize;

/// Queue discipline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueueKind {
    /// At most one task dequeued from this queue is alive at a time.
    Serial,
    /// Any number of tasks from this queue may run concurrently.
    Concurrent,
}

/// A declared queue.
#[derive(Debug, Clone)]
pub struct QueueDecl {
    pub name: String,
    pub kind: QueueKind,
}

/// One atom of a guard: `var == val` or `var != val`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct GuardAtom {
    pub var: VarId,
    /// `true` for equality, `false` for disequality.
    pub positive: bool,
    pub val: ValId,
}

/// A conjunction of guard atoms. The empty conjunction is `true`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Guard(pub Vec<GuardAtom>);

impl Guard {
    /// Does the valuation satisfy every atom?
    pub fn holds(&self, v: &Valuation) -> bool {
        self.0
            .iter()
            .all(|a| (v.0[a.var] == a.val) == a.positive)
    }
}

/// Fork multiplicity: a concrete count or the unbounded `*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForkCount {
    Finite(u32),
    Star,
}

/// Transition action.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Asynchronous dispatch of `block` onto `queue`; the dispatcher continues.
    DispatchA { queue: QueueId, block: BlockId },
    /// Synchronous dispatch: the dispatcher blocks until the new task terminates.
    DispatchS { queue: QueueId, block: BlockId },
    /// Fork `count` copies of `block` onto `queue` and join on their termination.
    ForkJoin {
        queue: QueueId,
        block: BlockId,
        count: ForkCount,
    },
    /// Store test.
    Test(Guard),
    /// Store update `var <- val`.
    Assign { var: VarId, val: ValId },
}

/// A transition of some block's LTS. `from` and `to` are global state ids
/// belonging to the owning block.
#[derive(Debug, Clone)]
pub struct Transition {
    pub from: StateId,
    pub action: Action,
    pub to: StateId,
}

/// One block: a finite LTS with an initial and a distinct final state.
#[derive(Debug, Clone)]
pub struct Block {
    pub name: String,
    /// Global ids of this block's states, in declaration order.
    pub states: Vec<StateId>,
    pub init: StateId,
    pub fin: StateId,
    pub transitions: Vec<Transition>,
}

/// A complete model.
#[derive(Debug, Clone)]
pub struct Qdas {
    pub name: String,
    /// Extended models may use `forkjoin` and are restricted to
    /// asynchronous dispatch over concurrent queues.
    pub extended: bool,
    /// Shared finite domain; the first value is the initial value of every variable.
    pub domain: Vec<String>,
    pub vars: Vec<String>,
    pub queues: Vec<QueueDecl>,
    pub blocks: Vec<Block>,
    /// Designated main block (the block named `main`).
    pub main: BlockId,
    /// Qualified names of all states, indexed by [`StateId`].
    states: Vec<StateInfo>,
}

#[derive(Debug, Clone)]
struct StateInfo {
    block: BlockId,
    name: String,
}

/// A total assignment of domain values to variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Valuation(pub Vec<ValId>);

impl Valuation {
    /// The initial valuation: every variable holds the first domain value.
    pub fn initial(model: &Qdas) -> Self {
        Valuation(vec![0; model.vars.len()])
    }

    /// Copy with `var` set to `val`.
    pub fn assign(&self, var: VarId, val: ValId) -> Self {
        let mut v = self.clone();
        v.0[var] = val;
        v
    }
}

/// A multiset of states: how many vertices (queued calls count at the
/// block's initial state) sit at each state. Absent entries are zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParikhImage(pub BTreeMap<StateId, u64>);

impl ParikhImage {
    pub fn count(&self, s: StateId) -> u64 {
        self.0.get(&s).copied().unwrap_or(0)
    }

    pub fn add(&mut self, s: StateId, n: u64) {
        if n > 0 {
            *self.0.entry(s).or_insert(0) += n;
        }
    }

    pub fn remove(&mut self, s: StateId, n: u64) {
        if n == 0 {
            return;
        }
        match self.0.get_mut(&s) {
            Some(c) if *c > n => *c -= n,
            Some(c) if *c == n => {
                self.0.remove(&s);
            }
            _ => panic!("parikh image underflow at state {s}"),
        }
    }

    /// Pointwise `self >= other`.
    pub fn covers(&self, other: &ParikhImage) -> bool {
        other.0.iter().all(|(s, n)| self.count(*s) >= *n)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Render as `block.state=count` pairs in state-id order.
    pub fn display<'a>(&'a self, model: &'a Qdas) -> impl fmt::Display + 'a {
        struct D<'a>(&'a ParikhImage, &'a Qdas);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let mut first = true;
                for (s, n) in &self.0 .0 {
                    if !first {
                        write!(f, ", ")?;
                    }
                    first = false;
                    write!(f, "{}={}", self.1.qualified_state_name(*s), n)?;
                }
                if first {
                    write!(f, "(empty)")?;
                }
                Ok(())
            }
        }
        D(self, model)
    }
}

/// Dispatch classification: which dispatch kinds occur in the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispatchClass {
    /// No dispatch action at all.
    None,
    /// Only synchronous dispatches.
    Sync,
    /// Only asynchronous dispatches (forkjoin counts as asynchronous).
    Async,
    /// Both kinds occur.
    Mixed,
}

/// Queue classification: which queue kinds are declared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueueClass {
    Queueless,
    Serial,
    Concurrent,
    Mixed,
}

/// Classification tags for a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassTags {
    pub dispatch: DispatchClass,
    pub queues: QueueClass,
    pub extended: bool,
}

impl ClassTags {
    /// No asynchronous dispatch occurs.
    pub fn is_synchronous(&self) -> bool {
        matches!(self.dispatch, DispatchClass::None | DispatchClass::Sync)
    }

    /// No synchronous dispatch occurs.
    pub fn is_asynchronous(&self) -> bool {
        matches!(self.dispatch, DispatchClass::None | DispatchClass::Async)
    }
}

impl fmt::Display for ClassTags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.dispatch {
            DispatchClass::None => "no-dispatch",
            DispatchClass::Sync => "synchronous",
            DispatchClass::Async => "asynchronous",
            DispatchClass::Mixed => "mixed-dispatch",
        };
        let q = match self.queues {
            QueueClass::Queueless => "queueless",
            QueueClass::Serial => "serial",
            QueueClass::Concurrent => "concurrent",
            QueueClass::Mixed => "mixed-queues",
        };
        write!(f, "{d} {q}")?;
        if self.extended {
            write!(f, " extended")?;
        }
        Ok(())
    }
}

/// Status of a verification problem for a model class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemStatus {
    Decidable(&'static str),
    Undecidable,
}

impl ProblemStatus {
    pub fn label(&self) -> &'static str {
        match self {
            ProblemStatus::Decidable(s) => s,
            ProblemStatus::Undecidable => "undecidable",
        }
    }
}

/// Decidability of the two verification problems for a classified model.
#[derive(Debug, Clone, Copy)]
pub struct Decidability {
    pub cover: ProblemStatus,
    pub termination: ProblemStatus,
}

/// Model validation error.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("no block named `main`")]
    NoMain,
    #[error("empty domain")]
    EmptyDomain,
    #[error("duplicate {kind} name `{name}`")]
    DuplicateName { kind: &'static str, name: String },
    #[error("block `{block}`: initial and final state must differ")]
    InitEqualsFinal { block: String },
    #[error("block `{block}`: transition endpoint `{state}` is not a state of this block")]
    ForeignState { block: String, state: String },
    #[error("`{name}` is reserved and cannot be declared as a queue")]
    ReservedQueue { name: String },
    #[error("block `{block}`: the main block cannot be dispatched")]
    DispatchesMain { block: String },
    #[error("block `{block}`: forkjoin is only available in extended models")]
    ForkInPlainModel { block: String },
    #[error("block `{block}`: forkjoin requires a concurrent queue, `{queue}` is serial")]
    ForkOnSerialQueue { block: String, queue: String },
    #[error("extended models admit no synchronous dispatch (block `{block}`)")]
    SyncInExtended { block: String },
    #[error("extended models admit no serial queues (queue `{queue}`)")]
    SerialInExtended { queue: String },
}

/// Pseudo-queue name of the main task; not declarable.
pub const IOTA: &str = "iota";

impl Qdas {
    /// Assemble a model, assigning global state ids. Blocks carry local
    /// state names; `main` must be among the block names. Minimal
    /// structural requirements (resolvable names) are the caller's
    /// responsibility; everything else is reported by [`Qdas::validate`].
    pub fn new(
        name: String,
        extended: bool,
        domain: Vec<String>,
        vars: Vec<String>,
        queues: Vec<QueueDecl>,
        blocks: Vec<Block>,
        states: Vec<(BlockId, String)>,
    ) -> Self {
        let main = blocks
            .iter()
            .position(|b| b.name == "main")
            .unwrap_or(usize::MAX);
        Qdas {
            name,
            extended,
            domain,
            vars,
            queues,
            blocks,
            main,
            states: states
                .into_iter()
                .map(|(block, name)| StateInfo { block, name })
                .collect(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    /// Owning block of a state.
    pub fn state_block(&self, s: StateId) -> BlockId {
        self.states[s].block
    }

    /// Local name of a state.
    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s].name
    }

    /// `block.state` name of a state.
    pub fn qualified_state_name(&self, s: StateId) -> String {
        format!("{}.{}", self.blocks[self.states[s].block].name, self.states[s].name)
    }

    pub fn block_by_name(&self, name: &str) -> Option<BlockId> {
        self.blocks.iter().position(|b| b.name == name)
    }

    pub fn queue_by_name(&self, name: &str) -> Option<QueueId> {
        self.queues.iter().position(|q| q.name == name)
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn value_by_name(&self, name: &str) -> Option<ValId> {
        self.domain.iter().position(|v| v == name)
    }

    pub fn state_by_name(&self, block: BlockId, name: &str) -> Option<StateId> {
        self.blocks[block]
            .states
            .iter()
            .copied()
            .find(|&s| self.states[s].name == name)
    }

    /// Is this state some block's final state?
    pub fn is_final(&self, s: StateId) -> bool {
        self.blocks[self.state_block(s)].fin == s
    }

    /// All structural problems with the model.
    pub fn validate(&self) -> Vec<ModelError> {
        let mut errs = Vec::new();
        if self.main >= self.blocks.len() {
            errs.push(ModelError::NoMain);
        }
        if self.domain.is_empty() {
            errs.push(ModelError::EmptyDomain);
        }
        let check_dup = |kind: &'static str, names: Vec<&str>, errs: &mut Vec<ModelError>| {
            let mut seen = std::collections::BTreeSet::new();
            for n in names {
                if !seen.insert(n) {
                    errs.push(ModelError::DuplicateName {
                        kind,
                        name: n.to_string(),
                    });
                }
            }
        };
        check_dup("domain value", self.domain.iter().map(|s| s.as_str()).collect(), &mut errs);
        check_dup("variable", self.vars.iter().map(|s| s.as_str()).collect(), &mut errs);
        check_dup("queue", self.queues.iter().map(|q| q.name.as_str()).collect(), &mut errs);
        check_dup("block", self.blocks.iter().map(|b| b.name.as_str()).collect(), &mut errs);
        for q in &self.queues {
            if q.name == IOTA {
                errs.push(ModelError::ReservedQueue {
                    name: q.name.clone(),
                });
            }
            if self.extended && q.kind == QueueKind::Serial {
                errs.push(ModelError::SerialInExtended {
                    queue: q.name.clone(),
                });
            }
        }
        for b in &self.blocks {
            check_dup(
                "state",
                b.states.iter().map(|&s| self.state_name(s)).collect(),
                &mut errs,
            );
            if b.init == b.fin {
                errs.push(ModelError::InitEqualsFinal {
                    block: b.name.clone(),
                });
            }
            for t in &b.transitions {
                for s in [t.from, t.to] {
                    if !b.states.contains(&s) {
                        errs.push(ModelError::ForeignState {
                            block: b.name.clone(),
                            state: self.qualified_state_name(s),
                        });
                    }
                }
                match &t.action {
                    Action::DispatchA { block, .. } | Action::DispatchS { block, .. } => {
                        if Some(*block) == self.main_id() {
                            errs.push(ModelError::DispatchesMain {
                                block: b.name.clone(),
                            });
                        }
                        if matches!(t.action, Action::DispatchS { .. }) && self.extended {
                            errs.push(ModelError::SyncInExtended {
                                block: b.name.clone(),
                            });
                        }
                    }
                    Action::ForkJoin { queue, block, .. } => {
                        if Some(*block) == self.main_id() {
                            errs.push(ModelError::DispatchesMain {
                                block: b.name.clone(),
                            });
                        }
                        if !self.extended {
                            errs.push(ModelError::ForkInPlainModel {
                                block: b.name.clone(),
                            });
                        } else if self.queues[*queue].kind == QueueKind::Serial {
                            errs.push(ModelError::ForkOnSerialQueue {
                                block: b.name.clone(),
                                queue: self.queues[*queue].name.clone(),
                            });
                        }
                    }
                    Action::Test(_) | Action::Assign { .. } => {}
                }
            }
        }
        errs
    }

    fn main_id(&self) -> Option<BlockId> {
        (self.main < self.blocks.len()).then_some(self.main)
    }

    /// Classification tags: which dispatch and queue kinds occur.
    pub fn classify(&self) -> ClassTags {
        let mut has_sync = false;
        let mut has_async = false;
        for b in &self.blocks {
            for t in &b.transitions {
                match t.action {
                    Action::DispatchA { .. } | Action::ForkJoin { .. } => has_async = true,
                    Action::DispatchS { .. } => has_sync = true,
                    _ => {}
                }
            }
        }
        let dispatch = match (has_sync, has_async) {
            (false, false) => DispatchClass::None,
            (true, false) => DispatchClass::Sync,
            (false, true) => DispatchClass::Async,
            (true, true) => DispatchClass::Mixed,
        };
        let has_serial = self.queues.iter().any(|q| q.kind == QueueKind::Serial);
        let has_conc = self.queues.iter().any(|q| q.kind == QueueKind::Concurrent);
        let queues = match (has_serial, has_conc) {
            (false, false) => QueueClass::Queueless,
            (true, false) => QueueClass::Serial,
            (false, true) => QueueClass::Concurrent,
            (true, true) => QueueClass::Mixed,
        };
        ClassTags {
            dispatch,
            queues,
            extended: self.extended,
        }
    }

    /// Decidability of Parikh coverability and termination for the model's class.
    pub fn decidability(&self) -> Decidability {
        decidability(self.classify())
    }
}

/// Decidability table for the classification.
pub fn decidability(tags: ClassTags) -> Decidability {
    use ProblemStatus::*;
    if tags.extended {
        return Decidability {
            cover: Undecidable,
            termination: Undecidable,
        };
    }
    if tags.queues == QueueClass::Queueless {
        return Decidability {
            cover: Decidable("PSpace-complete"),
            termination: Decidable("PSpace-complete"),
        };
    }
    if tags.is_synchronous() {
        let cover = match tags.queues {
            QueueClass::Serial => Decidable("PSpace-complete"),
            _ => Decidable("ExpTime-complete"),
        };
        let termination = match tags.queues {
            QueueClass::Serial => Decidable("PSpace-complete"),
            _ => Decidable("in ExpTime, PSpace-hard"),
        };
        return Decidability { cover, termination };
    }
    if tags.is_asynchronous() && tags.queues == QueueClass::Concurrent {
        return Decidability {
            cover: Decidable("ExpSpace-complete"),
            termination: Decidable("ExpSpace-complete"),
        };
    }
    Decidability {
        cover: Undecidable,
        termination: Undecidable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl;

    fn tiny(src: &str) -> Qdas {
        dsl::parse_model(src).expect("parse")
    }

    #[test]
    fn guard_semantics() {
        let g = Guard(vec![
            GuardAtom {
                var: 0,
                positive: true,
                val: 1,
            },
            GuardAtom {
                var: 1,
                positive: false,
                val: 0,
            },
        ]);
        assert!(g.holds(&Valuation(vec![1, 1])));
        assert!(!g.holds(&Valuation(vec![1, 0])));
        assert!(!g.holds(&Valuation(vec![0, 1])));
        assert!(Guard::default().holds(&Valuation(vec![0, 0])));
    }

    #[test]
    fn parikh_cover_is_pointwise() {
        let mut a = ParikhImage::default();
        a.add(0, 2);
        a.add(3, 1);
        let mut b = ParikhImage::default();
        b.add(0, 1);
        assert!(a.covers(&b));
        assert!(!b.covers(&a));
        b.add(4, 1);
        assert!(!a.covers(&b));
        assert!(a.covers(&ParikhImage::default()));
    }

    #[test]
    fn classify_mixed_model() {
        let m = tiny(
            "qdas t { domain {0,1} vars {x} cqueue c; squeue s;\n\
             block main { states a, b, f; init a; final f;\n\
               a -> b : dispatch_a(c, w); b -> f : dispatch_s(s, w); }\n\
             block w { states a, f; init a; final f; a -> f : x == 0; } }",
        );
        let tags = m.classify();
        assert_eq!(tags.dispatch, DispatchClass::Mixed);
        assert_eq!(tags.queues, QueueClass::Mixed);
        assert!(!tags.is_synchronous());
        assert!(!tags.is_asynchronous());
        let d = m.decidability();
        assert_eq!(d.cover, ProblemStatus::Undecidable);
        assert_eq!(d.termination, ProblemStatus::Undecidable);
    }

    #[test]
    fn classify_serial_sync() {
        let m = tiny(
            "qdas t { domain {0} vars {} squeue s;\n\
             block main { states a, f; init a; final f; a -> f : dispatch_s(s, w); }\n\
             block w { states a, f; init a; final f; } }",
        );
        let tags = m.classify();
        assert!(tags.is_synchronous());
        assert_eq!(tags.queues, QueueClass::Serial);
        assert_eq!(m.decidability().cover, ProblemStatus::Decidable("PSpace-complete"));
        assert_eq!(
            m.decidability().termination,
            ProblemStatus::Decidable("PSpace-complete")
        );
    }

    #[test]
    fn classify_async_concurrent() {
        let m = tiny(
            "qdas t { domain {0} vars {} cqueue c;\n\
             block main { states a, f; init a; final f; a -> a : dispatch_a(c, w); }\n\
             block w { states a, f; init a; final f; } }",
        );
        let d = m.decidability();
        assert_eq!(d.cover, ProblemStatus::Decidable("ExpSpace-complete"));
        assert_eq!(d.termination, ProblemStatus::Decidable("ExpSpace-complete"));
    }

    #[test]
    fn validate_rejects_fork_in_plain_model() {
        let src = "qdas t { domain {0} vars {} cqueue c;\n\
             block main { states a, f; init a; final f; a -> f : forkjoin(c, w, 2); }\n\
             block w { states a, f; init a; final f; } }";
        let m = tiny(src);
        assert!(m
            .validate()
            .iter()
            .any(|e| matches!(e, ModelError::ForkInPlainModel { .. })));
    }

    #[test]
    fn validate_rejects_dispatching_main() {
        let m = tiny(
            "qdas t { domain {0} vars {} cqueue c;\n\
             block main { states a, f; init a; final f; a -> f : dispatch_a(c, main); } }",
        );
        assert!(m
            .validate()
            .iter()
            .any(|e| matches!(e, ModelError::DispatchesMain { .. })));
    }
}
