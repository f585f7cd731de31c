//! Pushdown route for synchronous models.
//!
//! In a model without asynchronous dispatch, at most one task is runnable
//! at any time: every dispatcher waits for its callee, so reachable
//! configurations are single chains and behave like a call stack. The
//! translation produces a pushdown system whose control state is the
//! running task's block state together with the set of occupied serial
//! queues and the store valuation; the stack holds one return symbol per
//! waiting dispatcher (its post-dispatch state, tagged with the serial
//! queue its callee occupies, if any).
//!
//! Serial-queue discipline is enforced in the control state: a dispatch
//! onto a serial queue is only enabled while that queue is unoccupied.
//! This mirrors the fused dispatch-and-dequeue semantics; a dispatch into
//! a busy serial queue deadlocks the whole chain in the graph semantics
//! and is dropped here.
//!
//! Reachability questions are answered by forward saturation of a finite
//! automaton over stack words. Parikh coverability intersects the
//! saturated automaton with a counting automaton; termination reduces to
//! finding a reachable control on a stack-growing loop.

use crate::model::{
    Action, ParikhImage, Qdas, QueueId, QueueKind, StateId, Valuation,
};
use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

/// Control-state skeleton before data expansion. `state == None` is the
/// sink after the main task's removal at empty stack.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SyncCtl {
    pub state: Option<StateId>,
    pub occ: BTreeSet<QueueId>,
}

/// Stack symbol: the dispatcher resumes at `ret`; `serial` names the
/// serial queue the callee occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct StackSym {
    pub ret: StateId,
    pub serial: Option<QueueId>,
}

/// Stack effect of a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StackOp {
    Nop,
    Push(usize),
    Pop(usize),
    /// Enabled only at empty stack.
    EmptyTest,
}

/// Store effect of a rule, present before data expansion.
#[derive(Debug, Clone, PartialEq)]
pub enum DataOp {
    None,
    Guard(crate::model::Guard),
    Assign(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataRule {
    pub from: usize,
    pub to: usize,
    pub stack: StackOp,
    pub op: DataOp,
}

/// Pushdown system whose rules still carry guards and assignments.
#[derive(Debug, Clone)]
pub struct DataPds {
    pub controls: Vec<SyncCtl>,
    pub symbols: Vec<StackSym>,
    pub init: usize,
    pub rules: Vec<DataRule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rule {
    pub from: usize,
    pub to: usize,
    pub stack: StackOp,
}

/// Fully expanded pushdown system: controls pair a skeleton control with
/// a store valuation.
#[derive(Debug, Clone)]
pub struct Pds {
    pub controls: Vec<(SyncCtl, Valuation)>,
    pub symbols: Vec<StackSym>,
    pub init: usize,
    pub rules: Vec<Rule>,
}

/// Translate a synchronous model. Fails on models with asynchronous
/// dispatch or fork/join.
pub fn from_sync_qdas(model: &Qdas) -> Result<DataPds, String> {
    if !model.classify().is_synchronous() {
        return Err("pushdown translation requires a synchronous model".to_string());
    }
    let serial: Vec<QueueId> = (0..model.queues.len())
        .filter(|&q| model.queues[q].kind == QueueKind::Serial)
        .collect();
    let n_masks = 1usize << serial.len();
    let occ_of_mask = |mask: usize| -> BTreeSet<QueueId> {
        serial
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &q)| q)
            .collect()
    };

    let mut controls = Vec::new();
    let mut ctl_idx: BTreeMap<SyncCtl, usize> = BTreeMap::new();
    for s in 0..model.n_states() {
        for mask in 0..n_masks {
            let c = SyncCtl {
                state: Some(s),
                occ: occ_of_mask(mask),
            };
            ctl_idx.insert(c.clone(), controls.len());
            controls.push(c);
        }
    }
    let sink = SyncCtl {
        state: None,
        occ: BTreeSet::new(),
    };
    ctl_idx.insert(sink.clone(), controls.len());
    controls.push(sink.clone());

    // Stack symbols: one per synchronous dispatch target state.
    let mut symbols = Vec::new();
    let mut sym_idx: BTreeMap<StackSym, usize> = BTreeMap::new();
    for b in &model.blocks {
        for t in &b.transitions {
            if let Action::DispatchS { queue, .. } = t.action {
                let sym = StackSym {
                    ret: t.to,
                    serial: (model.queues[queue].kind == QueueKind::Serial).then_some(queue),
                };
                if !sym_idx.contains_key(&sym) {
                    sym_idx.insert(sym, symbols.len());
                    symbols.push(sym);
                }
            }
        }
    }

    let mut rules = Vec::new();
    for (ci, ctl) in controls.iter().enumerate() {
        let Some(s) = ctl.state else { continue };
        let block = &model.blocks[model.state_block(s)];
        for t in &block.transitions {
            if t.from != s {
                continue;
            }
            match &t.action {
                Action::DispatchS { queue, block: b } => {
                    let is_serial = model.queues[*queue].kind == QueueKind::Serial;
                    if is_serial && ctl.occ.contains(queue) {
                        continue;
                    }
                    let mut occ = ctl.occ.clone();
                    if is_serial {
                        occ.insert(*queue);
                    }
                    let to = ctl_idx[&SyncCtl {
                        state: Some(model.blocks[*b].init),
                        occ,
                    }];
                    let sym = sym_idx[&StackSym {
                        ret: t.to,
                        serial: is_serial.then_some(*queue),
                    }];
                    rules.push(DataRule {
                        from: ci,
                        to,
                        stack: StackOp::Push(sym),
                        op: DataOp::None,
                    });
                }
                Action::Test(g) => {
                    let to = ctl_idx[&SyncCtl {
                        state: Some(t.to),
                        occ: ctl.occ.clone(),
                    }];
                    rules.push(DataRule {
                        from: ci,
                        to,
                        stack: StackOp::Nop,
                        op: DataOp::Guard(g.clone()),
                    });
                }
                Action::Assign { var, val } => {
                    let to = ctl_idx[&SyncCtl {
                        state: Some(t.to),
                        occ: ctl.occ.clone(),
                    }];
                    rules.push(DataRule {
                        from: ci,
                        to,
                        stack: StackOp::Nop,
                        op: DataOp::Assign(*var, *val),
                    });
                }
                Action::DispatchA { .. } | Action::ForkJoin { .. } => {
                    unreachable!("rejected above")
                }
            }
        }
        // Task finishes: pop a return symbol, or retire the main task.
        if s == block.fin {
            if model.state_block(s) == model.main {
                if ctl.occ.is_empty() {
                    rules.push(DataRule {
                        from: ci,
                        to: ctl_idx[&sink],
                        stack: StackOp::EmptyTest,
                        op: DataOp::None,
                    });
                }
            } else {
                for (si, sym) in symbols.iter().enumerate() {
                    if let Some(q) = sym.serial {
                        if !ctl.occ.contains(&q) {
                            continue;
                        }
                    }
                    let mut occ = ctl.occ.clone();
                    if let Some(q) = sym.serial {
                        occ.remove(&q);
                    }
                    let to = ctl_idx[&SyncCtl {
                        state: Some(sym.ret),
                        occ,
                    }];
                    rules.push(DataRule {
                        from: ci,
                        to,
                        stack: StackOp::Pop(si),
                        op: DataOp::None,
                    });
                }
            }
        }
    }

    let init = ctl_idx[&SyncCtl {
        state: Some(model.blocks[model.main].init),
        occ: BTreeSet::new(),
    }];
    Ok(DataPds {
        controls,
        symbols,
        init,
        rules,
    })
}

/// Enumerate all store valuations of a model, lexicographically.
pub fn all_valuations(model: &Qdas) -> Vec<Valuation> {
    if model.vars.is_empty() {
        return vec![Valuation(Vec::new())];
    }
    let mut out = Vec::new();
    let mut cur = vec![0usize; model.vars.len()];
    loop {
        out.push(Valuation(cur.clone()));
        let mut i = model.vars.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < model.domain.len() {
                break;
            }
            cur[i] = 0;
        }
    }
}

impl DataPds {
    /// Expand guards and assignments into the control state.
    pub fn expand_data(&self, model: &Qdas) -> Pds {
        let vals = all_valuations(model);
        let n_vals = vals.len();
        let idx = |ctl: usize, v: usize| ctl * n_vals + v;
        let mut controls = Vec::with_capacity(self.controls.len() * n_vals);
        for ctl in &self.controls {
            for v in &vals {
                controls.push((ctl.clone(), v.clone()));
            }
        }
        let mut rules = Vec::new();
        for r in &self.rules {
            for (vi, v) in vals.iter().enumerate() {
                let to_vi = match &r.op {
                    DataOp::None => vi,
                    DataOp::Guard(g) => {
                        if !g.holds(v) {
                            continue;
                        }
                        vi
                    }
                    DataOp::Assign(var, val) => {
                        let nv = v.assign(*var, *val);
                        vals.iter().position(|x| *x == nv).unwrap()
                    }
                };
                rules.push(Rule {
                    from: idx(r.from, vi),
                    to: idx(r.to, to_vi),
                    stack: r.stack,
                });
            }
        }
        Pds {
            controls,
            symbols: self.symbols.clone(),
            init: idx(self.init, 0),
            rules,
        }
    }
}

/// Saturated automaton over stack words. State `i < n_controls` is the
/// pushdown control `i`; `f0` is the accepting state; higher states spell
/// out the initial stack word. A transition label of `None` is epsilon.
/// The automaton accepts `(c, w)` iff reading `w` top-first from state
/// `c` can reach `f0`; after saturation that holds iff `(c, w)` is
/// reachable from the initial configuration.
#[derive(Debug, Clone)]
pub struct PostStar {
    pub n_controls: usize,
    pub f0: usize,
    pub edges: BTreeSet<(usize, Option<usize>, usize)>,
}

impl PostStar {
    fn eps_closure(&self, from: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut out = from.clone();
        let mut work: Vec<usize> = out.iter().copied().collect();
        while let Some(s) = work.pop() {
            for &(a, ref l, b) in &self.edges {
                if a == s && l.is_none() && out.insert(b) {
                    work.push(b);
                }
            }
        }
        out
    }

    fn step(&self, from: &BTreeSet<usize>, sym: usize) -> BTreeSet<usize> {
        let closed = self.eps_closure(from);
        let mut out = BTreeSet::new();
        for &(a, ref l, b) in &self.edges {
            if *l == Some(sym) && closed.contains(&a) {
                out.insert(b);
            }
        }
        self.eps_closure(&out)
    }

    /// Is `(ctl, stack)` accepted? The stack is given bottom to top.
    pub fn accepts(&self, ctl: usize, stack: &[usize]) -> bool {
        let mut cur = BTreeSet::from([ctl]);
        for &sym in stack.iter().rev() {
            cur = self.step(&cur, sym);
            if cur.is_empty() {
                return false;
            }
        }
        self.eps_closure(&cur).contains(&self.f0)
    }

    /// Is any `(ctl, w)` accepted?
    pub fn nonempty(&self, ctl: usize) -> bool {
        let mut seen = BTreeSet::from([ctl]);
        let mut work = vec![ctl];
        while let Some(s) = work.pop() {
            if s == self.f0 {
                return true;
            }
            for &(a, _, b) in &self.edges {
                if a == s && seen.insert(b) {
                    work.push(b);
                }
            }
        }
        false
    }
}

impl Pds {
    /// Saturate from the initial configuration (initial control, empty stack).
    pub fn post_star(&self) -> PostStar {
        self.post_star_from(self.init, &[])
    }

    /// Saturate from an arbitrary configuration.
    pub fn post_star_from(&self, ctl: usize, stack: &[usize]) -> PostStar {
        let f0 = self.controls.len();
        let mut aut = PostStar {
            n_controls: self.controls.len(),
            f0,
            edges: BTreeSet::new(),
        };
        // Spell the initial stack, read top-first, from `ctl` to `f0`.
        let mut cur = ctl;
        for (i, &sym) in stack.iter().rev().enumerate() {
            let nxt = if i + 1 == stack.len() { f0 } else { f0 + 1 + i };
            aut.edges.insert((cur, Some(sym), nxt));
            cur = nxt;
        }
        if stack.is_empty() {
            aut.edges.insert((ctl, None, f0));
        }

        loop {
            let mut changed = false;
            for r in &self.rules {
                match r.stack {
                    StackOp::Nop => {
                        changed |= aut.edges.insert((r.to, None, r.from));
                    }
                    StackOp::Push(a) => {
                        changed |= aut.edges.insert((r.to, Some(a), r.from));
                    }
                    StackOp::Pop(a) => {
                        let reach = aut.step(&BTreeSet::from([r.from]), a);
                        for z in reach {
                            changed |= aut.edges.insert((r.to, None, z));
                        }
                    }
                    StackOp::EmptyTest => {
                        if aut.eps_closure(&BTreeSet::from([r.from])).contains(&f0) {
                            changed |= aut.edges.insert((r.to, None, f0));
                        }
                    }
                }
            }
            if !changed {
                return aut;
            }
        }
    }

    /// Human-readable control name.
    pub fn control_name(&self, model: &Qdas, ctl: usize) -> String {
        let (c, v) = &self.controls[ctl];
        let state = match c.state {
            Some(s) => model.qualified_state_name(s),
            None => "(terminated)".to_string(),
        };
        let mut out = state;
        if !c.occ.is_empty() {
            let occ: Vec<&str> = c
                .occ
                .iter()
                .map(|&q| model.queues[q].name.as_str())
                .collect();
            out.push_str(&format!(" busy[{}]", occ.join(",")));
        }
        if !v.0.is_empty() {
            let vals: Vec<String> = v
                .0
                .iter()
                .enumerate()
                .map(|(x, &d)| format!("{}={}", model.vars[x], model.domain[d]))
                .collect();
            out.push_str(&format!(" {}", vals.join(",")));
        }
        out
    }

    pub fn symbol_name(&self, model: &Qdas, sym: usize) -> String {
        let s = &self.symbols[sym];
        match s.serial {
            Some(q) => format!("{}^{}", model.qualified_state_name(s.ret), model.queues[q].name),
            None => model.qualified_state_name(s.ret),
        }
    }

    pub fn rule_desc(&self, model: &Qdas, r: &Rule) -> String {
        let op = match r.stack {
            StackOp::Nop => "".to_string(),
            StackOp::Push(a) => format!(" push {}", self.symbol_name(model, a)),
            StackOp::Pop(a) => format!(" pop {}", self.symbol_name(model, a)),
            StackOp::EmptyTest => " at empty stack".to_string(),
        };
        format!(
            "{} => {}{op}",
            self.control_name(model, r.from),
            self.control_name(model, r.to)
        )
    }

    /// Concrete one-step successors of a configuration, as rule indices
    /// paired with the configuration they yield.
    pub fn step_config(
        &self,
        ctl: usize,
        stack: &[usize],
    ) -> Vec<(usize, (usize, Vec<usize>))> {
        let mut out = Vec::new();
        for (ri, r) in self.rules.iter().enumerate() {
            if r.from != ctl {
                continue;
            }
            match r.stack {
                StackOp::Nop => out.push((ri, (r.to, stack.to_vec()))),
                StackOp::Push(a) => {
                    let mut s = stack.to_vec();
                    s.push(a);
                    out.push((ri, (r.to, s)));
                }
                StackOp::Pop(a) => {
                    if stack.last() == Some(&a) {
                        out.push((ri, (r.to, stack[..stack.len() - 1].to_vec())));
                    }
                }
                StackOp::EmptyTest => {
                    if stack.is_empty() {
                        out.push((ri, (r.to, Vec::new())));
                    }
                }
            }
        }
        out
    }

    /// Parikh image of a configuration: the running state plus the return
    /// states on the stack.
    pub fn config_parikh(&self, ctl: usize, stack: &[usize]) -> ParikhImage {
        let mut img = ParikhImage::default();
        if let Some(s) = self.controls[ctl].0.state {
            img.add(s, 1);
        }
        for &sym in stack {
            img.add(self.symbols[sym].ret, 1);
        }
        img
    }
}

/// Automaton counting letter occurrences against a target multiset: it
/// accepts exactly the words containing at least `f(s)` occurrences of
/// each state `s` in the target's support.
#[derive(Debug, Clone)]
pub struct CountingAutomaton {
    pub support: Vec<StateId>,
    pub need: Vec<u64>,
}

impl CountingAutomaton {
    pub fn new(target: &ParikhImage) -> Self {
        let support: Vec<StateId> = target.0.keys().copied().collect();
        let need = support.iter().map(|s| target.count(*s)).collect();
        CountingAutomaton { support, need }
    }

    /// Initial state: everything still owed.
    pub fn start(&self) -> Vec<u64> {
        self.need.clone()
    }

    /// Read one letter; owed counts saturate at zero.
    pub fn step(&self, q: &[u64], letter: StateId) -> Vec<u64> {
        q.iter()
            .zip(&self.support)
            .map(|(&owed, &s)| if s == letter { owed.saturating_sub(1) } else { owed })
            .collect()
    }

    pub fn accepting(&self, q: &[u64]) -> bool {
        q.iter().all(|&owed| owed == 0)
    }

    pub fn accepts_word(&self, word: &[StateId]) -> bool {
        let mut q = self.start();
        for &l in word {
            q = self.step(&q, l);
        }
        self.accepting(&q)
    }
}

/// Coverability verdict for the pushdown route. The witness is a single
/// reachable configuration (control and stack, bottom to top) whose
/// Parikh image covers the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyncCover {
    Coverable { control: usize, stack: Vec<usize> },
    NotCoverable,
}

/// Decide Parikh coverability for an expanded synchronous pushdown
/// system: intersect, for every control, the saturated automaton with the
/// counting automaton for the target minus the control's own state.
pub fn check_parikh_cover_sync(pds: &Pds, target: &ParikhImage) -> SyncCover {
    let post = pds.post_star();
    for ctl in 0..pds.controls.len() {
        let Some(s) = pds.controls[ctl].0.state else {
            continue;
        };
        let mut residual = target.clone();
        if residual.count(s) > 0 {
            residual.remove(s, 1);
        }
        let counter = CountingAutomaton::new(&residual);
        // Product search: automaton state x owed vector; epsilon edges
        // advance only the automaton. The trail stores the symbols read.
        #[derive(PartialEq, Eq, Hash, Clone)]
        struct PState(usize, Vec<u64>);
        let start = PState(ctl, counter.start());
        let mut seen: HashSet<PState> = HashSet::from([start.clone()]);
        let mut parents: BTreeMap<(usize, Vec<u64>), ((usize, Vec<u64>), Option<usize>)> =
            BTreeMap::new();
        let mut queue = VecDeque::from([start]);
        let mut goal: Option<(usize, Vec<u64>)> = None;
        'bfs: while let Some(PState(a, q)) = queue.pop_front() {
            if a == post.f0 && counter.accepting(&q) {
                goal = Some((a, q));
                break 'bfs;
            }
            for &(x, ref l, y) in &post.edges {
                if x != a {
                    continue;
                }
                let nq = match l {
                    None => q.clone(),
                    Some(sym) => counter.step(&q, pds.symbols[*sym].ret),
                };
                let st = PState(y, nq.clone());
                if seen.insert(st) {
                    parents.insert((y, nq.clone()), ((a, q.clone()), *l));
                    queue.push_back(PState(y, nq));
                }
            }
        }
        if let Some(mut cur) = goal {
            let mut word = Vec::new();
            while let Some((prev, label)) = parents.get(&cur) {
                if let Some(sym) = label {
                    word.push(*sym);
                }
                cur = prev.clone();
            }
            // The product read the stack top-first; configurations store
            // it bottom-first.
            let stack: Vec<usize> = word;
            debug_assert!(pds.config_parikh(ctl, &stack).covers(target));
            debug_assert!(post.accepts(ctl, &stack));
            return SyncCover::Coverable {
                control: ctl,
                stack,
            };
        }
    }
    SyncCover::NotCoverable
}

/// Termination verdict for the pushdown route.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyncTerm {
    Terminates,
    /// Rule indices reaching a looping control, then the rules of one
    /// loop iteration, which can repeat forever.
    NonTerminating {
        prefix: Vec<usize>,
        pump: Vec<usize>,
    },
}

/// Decide termination for an expanded synchronous pushdown system.
///
/// Runs that merely empty the stack stop (rules enabled at empty stack
/// are the main task's retirement and are removed). An infinite run
/// exists iff some reachable control `y` admits a derivation from `(y,
/// empty)` back to control `y`: such a derivation never inspects the
/// stack below its starting point, so it replays from the reachable
/// configuration and from each of its own iterates.
pub fn check_termination_sync(pds: &Pds) -> SyncTerm {
    let mut trimmed = pds.clone();
    // Witness rule indices must refer to the caller's rule list.
    let orig_idx: Vec<usize> = pds
        .rules
        .iter()
        .enumerate()
        .filter(|(_, r)| r.stack != StackOp::EmptyTest)
        .map(|(i, _)| i)
        .collect();
    trimmed.rules.retain(|r| r.stack != StackOp::EmptyTest);
    let post = trimmed.post_star();

    // Controls on a cycle of the rule graph; only those can repeat.
    let n = trimmed.controls.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in &trimmed.rules {
        adj[r.from].push(r.to);
    }
    let on_cycle = |y: usize| -> bool {
        let mut seen = vec![false; n];
        let mut work: Vec<usize> = adj[y].clone();
        while let Some(s) = work.pop() {
            if s == y {
                return true;
            }
            if !seen[s] {
                seen[s] = true;
                work.extend(&adj[s]);
            }
        }
        false
    };

    for y in 0..n {
        if !post.nonempty(y) || !on_cycle(y) {
            continue;
        }
        // One-step successors of (y, empty), then saturation from each.
        for r in &trimmed.rules {
            if r.from != y {
                continue;
            }
            let (ctl, stack): (usize, Vec<usize>) = match r.stack {
                StackOp::Nop => (r.to, vec![]),
                StackOp::Push(a) => (r.to, vec![a]),
                StackOp::Pop(_) | StackOp::EmptyTest => continue,
            };
            let from_here = trimmed.post_star_from(ctl, &stack);
            if !from_here.nonempty(y) {
                continue;
            }
            // Witness: shortest concrete paths, found with a widening
            // stack bound. Both exist by the saturation argument.
            let prefix = concrete_path(&trimmed, trimmed.init, &[], y, false)
                .expect("reachable control must admit a concrete path");
            let pump = concrete_path(&trimmed, y, &[], y, true)
                .expect("pumpable control must admit a concrete loop");
            return SyncTerm::NonTerminating {
                prefix: prefix.into_iter().map(|i| orig_idx[i]).collect(),
                pump: pump.into_iter().map(|i| orig_idx[i]).collect(),
            };
        }
    }
    SyncTerm::Terminates
}

/// Shortest rule sequence from `(ctl, stack)` to control `goal` (with at
/// least one step if `strict`), searching under a growing stack bound.
fn concrete_path(
    pds: &Pds,
    ctl: usize,
    stack: &[usize],
    goal: usize,
    strict: bool,
) -> Option<Vec<usize>> {
    for bound in [8usize, 32, 128, 512] {
        let mut seen: HashSet<(usize, Vec<usize>)> = HashSet::new();
        let mut parents: BTreeMap<(usize, Vec<usize>), ((usize, Vec<usize>), usize)> =
            BTreeMap::new();
        let start = (ctl, stack.to_vec());
        seen.insert(start.clone());
        let mut queue = VecDeque::from([start.clone()]);
        while let Some((c, st)) = queue.pop_front() {
            if c == goal && (!strict || (c, st.clone()) != start) {
                let mut rules = Vec::new();
                let mut cur = (c, st);
                while let Some((prev, ri)) = parents.get(&cur) {
                    rules.push(*ri);
                    cur = prev.clone();
                }
                rules.reverse();
                return Some(rules);
            }
            for (ri, (nc, nst)) in pds.step_config(c, &st) {
                if nst.len() > bound {
                    continue;
                }
                if nc == goal {
                    // Any path to a successor already has one step.
                    let mut rules = vec![ri];
                    let mut cur = (c, st.clone());
                    while let Some((prev, r)) = parents.get(&cur) {
                        rules.push(*r);
                        cur = prev.clone();
                    }
                    rules.reverse();
                    return Some(rules);
                }
                let key = (nc, nst.clone());
                if seen.insert(key.clone()) {
                    parents.insert(key, ((c, st.clone()), ri));
                    queue.push_back((nc, nst));
                }
            }
            if seen.len() > 2_000_000 {
                break;
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_model, parse_target};

    fn sync_pds(src: &str) -> (crate::model::Qdas, Pds) {
        let m = parse_model(src).unwrap();
        assert!(m.validate().is_empty());
        let pds = from_sync_qdas(&m).unwrap().expand_data(&m);
        (m, pds)
    }

    const RECURSIVE: &str = "qdas rec { domain {0} vars {} cqueue c;
        block main { states a, f; init a; final f; a -> f : dispatch_s(c, w); }
        block w { states a, b, f; init a; final f;
          a -> b : dispatch_s(c, w);
          a -> f : true;
          b -> f : true; } }";

    #[test]
    fn recursion_covers_stacked_return_states() {
        let (m, pds) = sync_pds(RECURSIVE);
        // Two nested calls leave two return symbols at w.b.
        let t = parse_target(&m, "w.b=2").unwrap();
        match check_parikh_cover_sync(&pds, &t) {
            SyncCover::Coverable { control, stack } => {
                assert_eq!(stack.len() >= 2, true);
                assert!(pds.config_parikh(control, &stack).covers(&t));
            }
            other => panic!("{other:?}"),
        }
        // w.a is only ever the running control, never stacked.
        let t2 = parse_target(&m, "w.a=2").unwrap();
        assert_eq!(check_parikh_cover_sync(&pds, &t2), SyncCover::NotCoverable);
    }

    #[test]
    fn recursive_model_admits_infinite_runs() {
        let (m, pds) = sync_pds(RECURSIVE);
        match check_termination_sync(&pds) {
            SyncTerm::NonTerminating { prefix, pump } => {
                assert!(!pump.is_empty());
                // Replay: the pump must return to its starting control.
                let mut cfg = (pds.init, Vec::new());
                for &ri in &prefix {
                    let nexts = pds.step_config(cfg.0, &cfg.1);
                    let (_, nc) = nexts.into_iter().find(|(i, _)| *i == ri).unwrap();
                    cfg = nc;
                }
                let y = cfg.0;
                let base = cfg.1.len();
                for &ri in &pump {
                    let nexts = pds.step_config(cfg.0, &cfg.1);
                    let (_, nc) = nexts.into_iter().find(|(i, _)| *i == ri).unwrap();
                    cfg = nc;
                }
                assert_eq!(cfg.0, y);
                assert!(cfg.1.len() >= base, "pump must not shrink the stack");
                let _ = m;
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn straight_line_sync_model_terminates() {
        let (_, pds) = sync_pds(
            "qdas t { domain {0} vars {} squeue s;
               block main { states a, f; init a; final f; a -> f : dispatch_s(s, w); }
               block w { states a, f; init a; final f; a -> f : true; } }",
        );
        assert_eq!(check_termination_sync(&pds), SyncTerm::Terminates);
    }

    #[test]
    fn serial_occupancy_disables_reentrant_dispatch() {
        // w re-dispatches itself on the serial queue it occupies; the
        // only run deadlocks, so w.b is unreachable.
        let (m, pds) = sync_pds(
            "qdas t { domain {0} vars {} squeue s;
               block main { states a, f; init a; final f; a -> f : dispatch_s(s, w); }
               block w { states a, b, f; init a; final f; a -> b : dispatch_s(s, w); } }",
        );
        let t = parse_target(&m, "w.b=1").unwrap();
        assert_eq!(check_parikh_cover_sync(&pds, &t), SyncCover::NotCoverable);
        // On a concurrent queue the same shape recurses freely.
        let (m2, pds2) = sync_pds(
            "qdas t { domain {0} vars {} cqueue s;
               block main { states a, f; init a; final f; a -> f : dispatch_s(s, w); }
               block w { states a, b, f; init a; final f; a -> b : dispatch_s(s, w); } }",
        );
        let t2 = parse_target(&m2, "w.b=3").unwrap();
        assert!(matches!(
            check_parikh_cover_sync(&pds2, &t2),
            SyncCover::Coverable { .. }
        ));
    }

    #[test]
    fn guards_and_assignments_expand_into_controls() {
        let (m, pds) = sync_pds(
            "qdas t { domain {0, 1} vars {x} squeue s;
               block main { states a, b, c, f; init a; final f;
                 a -> b : x <- 1;
                 b -> c : x == 1;
                 c -> f : dispatch_s(s, w); }
               block w { states a, f; init a; final f; a -> f : x == 1; } }",
        );
        let t = parse_target(&m, "w.f=1").unwrap();
        assert!(matches!(
            check_parikh_cover_sync(&pds, &t),
            SyncCover::Coverable { .. }
        ));
        // Without the assignment the guard blocks everything.
        let (m3, pds3) = sync_pds(
            "qdas t { domain {0, 1} vars {x} squeue s;
               block main { states a, b, c, f; init a; final f;
                 a -> b : true;
                 b -> c : x == 1;
                 c -> f : dispatch_s(s, w); }
               block w { states a, f; init a; final f; } }",
        );
        let t3 = parse_target(&m3, "w.a=1").unwrap();
        assert_eq!(check_parikh_cover_sync(&pds3, &t3), SyncCover::NotCoverable);
    }

    #[test]
    fn post_star_matches_small_step_semantics() {
        let (_, pds) = sync_pds(RECURSIVE);
        let post = pds.post_star();
        // Enumerate configurations with stack depth <= 4 by brute force.
        let mut seen: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
        let mut work = vec![(pds.init, Vec::<usize>::new())];
        seen.insert(work[0].clone());
        while let Some((c, st)) = work.pop() {
            for (_, (nc, nst)) in pds.step_config(c, &st) {
                if nst.len() <= 4 && seen.insert((nc, nst.clone())) {
                    work.push((nc, nst));
                }
            }
        }
        for (c, st) in &seen {
            assert!(post.accepts(*c, st), "missing ({c}, {st:?})");
        }
        // Conversely, shallow accepted configurations are reachable.
        for c in 0..pds.controls.len() {
            for sym in 0..pds.symbols.len() {
                for st in [vec![], vec![sym], vec![sym, sym]] {
                    if post.accepts(c, &st) {
                        assert!(seen.contains(&(c, st.clone())), "extra ({c}, {st:?})");
                    }
                }
            }
        }
    }

    #[test]
    fn counting_automaton_counts_exactly() {
        let mut target = ParikhImage::default();
        target.add(3, 2);
        target.add(5, 1);
        let ca = CountingAutomaton::new(&target);
        let letters = [3usize, 5, 7];
        // All words up to length 4 over three letters.
        let mut words: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..4 {
            let mut next = Vec::new();
            for w in &words {
                for &l in &letters {
                    let mut w2 = w.clone();
                    w2.push(l);
                    next.push(w2);
                }
            }
            words.extend(next);
        }
        for w in &words {
            let expected = w.iter().filter(|&&l| l == 3).count() >= 2
                && w.iter().filter(|&&l| l == 5).count() >= 1;
            assert_eq!(ca.accepts_word(w), expected, "{w:?}");
        }
    }

    #[test]
    fn main_retirement_needs_empty_stack() {
        let (_, pds) = sync_pds(
            "qdas t { domain {0} vars {} squeue s;
               block main { states a, f; init a; final f; a -> f : dispatch_s(s, w); }
               block w { states a, f; init a; final f; a -> f : true; } }",
        );
        let post = pds.post_star();
        let sink = pds
            .controls
            .iter()
            .position(|(c, _)| c.state.is_none())
            .unwrap();
        assert!(post.accepts(sink, &[]));
        assert!(post.nonempty(sink));
    }
}
