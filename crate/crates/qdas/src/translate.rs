//! Model-to-model constructions.
//!
//! Forward abstractions: [`qdas_to_pn`] turns an asynchronous concurrent
//! model into a Petri net with the same Parikh behaviour, and
//! [`eqdas_to_pn_times`] / [`eqdas_to_pn_star`] extend it to fork/join
//! models (exact for fixed fork counts, over-approximate for `*`).
//!
//! Reduction gadgets: [`pn_to_qdas`], [`fifo_to_qdas`] and
//! [`two_counter_to_qdas`] compile a Petri net, a FIFO channel system, or
//! a two-counter system into models whose coverability answers mirror the
//! source problem. They exist as a cross-validation corpus: the source
//! systems are easy to decide or simulate independently, the generated
//! models exercise the full queue semantics.
//!
//! Generated models print through the standard DSL, so every generator
//! output is a first-class input to the rest of the toolchain.

use crate::ctg::Configuration;
use crate::dsl::{lex, ParseError, Parser, Tok};
use crate::model::{
    Action, Block, BlockId, ForkCount, Guard, GuardAtom, ParikhImage, Qdas, QueueDecl, QueueKind,
    StateId, ValId, VarId,
};
use crate::petri::{Marking, Net, Weight};

// ---------------------------------------------------------------------
// Model builder.

/// Incremental construction of a [`Qdas`], used by the gadget generators.
struct Mb {
    name: String,
    extended: bool,
    domain: Vec<String>,
    vars: Vec<String>,
    queues: Vec<QueueDecl>,
    blocks: Vec<Block>,
    states: Vec<(BlockId, String)>,
}

impl Mb {
    fn new(name: &str, domain: Vec<String>, vars: Vec<String>, queues: Vec<QueueDecl>) -> Mb {
        Mb {
            name: name.to_string(),
            extended: false,
            domain,
            vars,
            queues,
            blocks: Vec::new(),
            states: Vec::new(),
        }
    }

    fn block(&mut self, name: &str) -> BlockId {
        self.blocks.push(Block {
            name: name.to_string(),
            states: Vec::new(),
            init: usize::MAX,
            fin: usize::MAX,
            transitions: Vec::new(),
        });
        self.blocks.len() - 1
    }

    fn state(&mut self, b: BlockId, name: &str) -> StateId {
        let id = self.states.len();
        self.states.push((b, name.to_string()));
        self.blocks[b].states.push(id);
        id
    }

    fn tr(&mut self, b: BlockId, from: StateId, action: Action, to: StateId) {
        self.blocks[b].transitions.push(crate::model::Transition {
            from,
            action,
            to,
        });
    }

    fn val(&self, name: &str) -> ValId {
        self.domain
            .iter()
            .position(|d| d == name)
            .unwrap_or_else(|| panic!("domain value {name}"))
    }

    fn guard_eq(&self, var: VarId, val: &str) -> Action {
        Action::Test(Guard(vec![GuardAtom {
            var,
            positive: true,
            val: self.val(val),
        }]))
    }

    fn guard_ne(&self, var: VarId, val: &str) -> Action {
        Action::Test(Guard(vec![GuardAtom {
            var,
            positive: false,
            val: self.val(val),
        }]))
    }

    fn assign(&self, var: VarId, val: &str) -> Action {
        Action::Assign {
            var,
            val: self.val(val),
        }
    }

    fn build(self) -> Qdas {
        let m = Qdas::new(
            self.name,
            self.extended,
            self.domain,
            self.vars,
            self.queues,
            self.blocks,
            self.states,
        );
        debug_assert!(m.validate().is_empty(), "{:?}", m.validate());
        m
    }
}

const TRUE: Action = Action::Test(Guard(Vec::new()));

// ---------------------------------------------------------------------
// QDAS -> Petri net.

/// Place index of variable `x` holding value `d`: state places come
/// first and share indices with [`StateId`].
pub fn var_place(model: &Qdas, x: VarId, d: ValId) -> usize {
    model.n_states() + x * model.domain.len() + d
}

/// Abstract an asynchronous concurrent model into a Petri net.
///
/// Places are the model's states plus one place per (variable, value)
/// pair; state places share indices with [`StateId`]. A token on a state
/// place is a call or task at that state, a token on `(x,d)` means `x`
/// currently holds `d`. Dispatches produce a token on the callee's
/// initial state; dequeues need no transition because a call and a fresh
/// task occupy the same state. Guards become one read-only transition per
/// satisfying assignment of the mentioned variables; finished tasks are
/// absorbed by one sink transition per block.
///
/// The abstraction is exact: reachable markings correspond one-to-one to
/// reachable Parikh images (plus the valuation on the variable places),
/// because without waiting edges every task is always unblocked.
pub fn qdas_to_pn(model: &Qdas) -> Result<Net, String> {
    let tags = model.classify();
    if model.extended {
        return Err("fork/join models need the fork-aware abstraction".to_string());
    }
    if !tags.is_asynchronous() || model.queues.iter().any(|q| q.kind == QueueKind::Serial) {
        return Err(
            "Petri abstraction requires asynchronous dispatch and concurrent queues only"
                .to_string(),
        );
    }
    let mut net = base_net(model);
    let mut idx = 0usize;
    for b in &model.blocks {
        for t in &b.transitions {
            add_transition_nets(model, &mut net, b, t, &mut idx)?;
        }
    }
    for b in &model.blocks {
        net.add_trans(&format!("end_{}", b.name), &[(b.fin, 1)], &[]);
    }
    Ok(net)
}

fn base_net(model: &Qdas) -> Net {
    let mut net = Net {
        name: format!("{}_net", model.name),
        places: Vec::new(),
        initial: Vec::new(),
        transitions: Vec::new(),
    };
    let mut seen = std::collections::BTreeSet::new();
    let mut fresh = |base: String| {
        let mut n = base;
        while !seen.insert(n.clone()) {
            n.push('_');
        }
        n
    };
    for s in 0..model.n_states() {
        let init = u64::from(s == model.blocks[model.main].init);
        net.add_place(&fresh(model.qualified_state_name(s).replace('.', "_")), init);
    }
    for xname in &model.vars {
        for (d, dname) in model.domain.iter().enumerate() {
            let init = u64::from(d == 0);
            net.add_place(&fresh(format!("v_{xname}_{dname}")), init);
        }
    }
    net
}

/// Shared transition compilation for the plain and fork-aware
/// abstractions. Fork handling is injected by the caller via `idx`-named
/// fresh places, so this only handles dispatch/guard/assign.
fn add_transition_nets(
    model: &Qdas,
    net: &mut Net,
    block: &Block,
    t: &crate::model::Transition,
    idx: &mut usize,
) -> Result<(), String> {
    let i = *idx;
    *idx += 1;
    match &t.action {
        Action::DispatchA { block: callee, .. } => {
            net.add_trans(
                &format!("t{i}_disp_{}", model.blocks[*callee].name),
                &[(t.from, 1)],
                &[
                    (t.to, Weight::Finite(1)),
                    (model.blocks[*callee].init, Weight::Finite(1)),
                ],
            );
        }
        Action::Test(g) => {
            let mut vars: Vec<VarId> = g.0.iter().map(|a| a.var).collect();
            vars.sort_unstable();
            vars.dedup();
            for (j, assignment) in satisfying_assignments(model, g, &vars).into_iter().enumerate() {
                let mut input = vec![(t.from, 1)];
                let mut output = vec![(t.to, Weight::Finite(1))];
                for (&x, &d) in vars.iter().zip(&assignment) {
                    input.push((var_place(model, x, d), 1));
                    output.push((var_place(model, x, d), Weight::Finite(1)));
                }
                net.add_trans(&format!("t{i}_test_{j}"), &input, &output);
            }
        }
        Action::Assign { var, val } => {
            for d in 0..model.domain.len() {
                net.add_trans(
                    &format!("t{i}_set_{}", model.domain[d]),
                    &[(t.from, 1), (var_place(model, *var, d), 1)],
                    &[
                        (t.to, Weight::Finite(1)),
                        (var_place(model, *var, *val), Weight::Finite(1)),
                    ],
                );
            }
        }
        Action::ForkJoin { .. } => {
            return Err(format!(
                "fork in block {} outside the fork-aware abstraction",
                block.name
            ))
        }
        Action::DispatchS { .. } => {
            return Err(format!(
                "synchronous dispatch in block {} has no Petri abstraction",
                block.name
            ))
        }
    }
    Ok(())
}

/// All assignments of `vars` (ascending variable ids) satisfying `g`.
fn satisfying_assignments(model: &Qdas, g: &Guard, vars: &[VarId]) -> Vec<Vec<ValId>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; vars.len()];
    loop {
        let ok = g.0.iter().all(|a| {
            let pos = vars.iter().position(|&x| x == a.var).unwrap();
            (cur[pos] == a.val) == a.positive
        });
        if ok {
            out.push(cur.clone());
        }
        let mut i = vars.len();
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

/// Net marking a Parikh target corresponds to: the target's counts on
/// state places, zero everywhere else (variable places unconstrained by
/// the target stay at zero, which coverability treats as "any value").
pub fn target_marking(net: &Net, f: &ParikhImage) -> Marking {
    let mut m = vec![0u64; net.places.len()];
    for (&s, &n) in &f.0 {
        m[s] = n;
    }
    m
}

/// Net marking encoding a concrete configuration: Parikh counts on state
/// places plus one token on each variable's current-value place.
pub fn config_marking(net: &Net, model: &Qdas, cfg: &Configuration) -> Marking {
    let mut m = vec![0u64; net.places.len()];
    for (&s, &n) in &cfg.ctg.parikh().0 {
        m[s] = n;
    }
    for (x, &d) in cfg.val.0.iter().enumerate() {
        m[var_place(model, x, d)] = 1;
    }
    m
}

/// Fork-aware abstraction for extended models without `*` forks.
///
/// A `forkjoin(q, b, n)` at `(s, s')` becomes a fork transition moving
/// the token from `s` to a fresh waiting place and putting `n` tokens on
/// b's initial state, plus a join transition that returns the waiting
/// token to `s'` once it can collect `n` tokens from b's final state.
/// Everything else compiles as in [`qdas_to_pn`]. The result
/// over-approximates: the per-block sink transitions can steal finished
/// children from a pending join, which only adds behaviour, so a
/// terminating net still proves the model terminating and an uncoverable
/// net target still proves the model target uncoverable.
pub fn eqdas_to_pn_times(model: &Qdas) -> Result<Net, String> {
    if !model.extended {
        return Err("fork-aware abstraction expects an extended model".to_string());
    }
    if has_star(model) {
        return Err("unbounded fork present; use the omega abstraction".to_string());
    }
    eqdas_net(model, false)
}

/// Fork-aware abstraction allowing `*` forks, producing omega arcs.
///
/// An unbounded fork emits an omega output arc on the callee's initial
/// state (the fired count is chosen arbitrarily), and its join is
/// approximated by an unconditional advance that ignores the children.
/// Bounded forks compile exactly as in [`eqdas_to_pn_times`]. Only the
/// safe directions survive the approximation: a coverable model target is
/// coverable in the net, and a terminating net means a terminating model;
/// the converses fail, so "coverable" answers about the net alone prove
/// nothing.
pub fn eqdas_to_pn_star(model: &Qdas) -> Result<Net, String> {
    if !model.extended {
        return Err("fork-aware abstraction expects an extended model".to_string());
    }
    eqdas_net(model, true)
}

/// Whether any fork in the model is unbounded.
pub fn has_star(model: &Qdas) -> bool {
    model.blocks.iter().any(|b| {
        b.transitions.iter().any(|t| {
            matches!(
                t.action,
                Action::ForkJoin {
                    count: ForkCount::Star,
                    ..
                }
            )
        })
    })
}

fn eqdas_net(model: &Qdas, allow_star: bool) -> Result<Net, String> {
    let mut net = base_net(model);
    let mut idx = 0usize;
    for b in &model.blocks {
        for t in &b.transitions {
            if let Action::ForkJoin { block: callee, count, .. } = &t.action {
                let i = idx;
                idx += 1;
                let callee_name = model.blocks[*callee].name.clone();
                let w = net.add_place(&format!("w{i}_{callee_name}"), 0);
                match count {
                    ForkCount::Finite(n) => {
                        let mut out = vec![(w, Weight::Finite(1))];
                        if *n > 0 {
                            out.push((model.blocks[*callee].init, Weight::Finite(u64::from(*n))));
                        }
                        net.add_trans(&format!("t{i}_fork_{callee_name}"), &[(t.from, 1)], &out);
                        let mut join_in = vec![(w, 1)];
                        if *n > 0 {
                            join_in.push((model.blocks[*callee].fin, u64::from(*n)));
                        }
                        net.add_trans(
                            &format!("t{i}_join_{callee_name}"),
                            &join_in,
                            &[(t.to, Weight::Finite(1))],
                        );
                    }
                    ForkCount::Star => {
                        if !allow_star {
                            unreachable!("checked by eqdas_to_pn_times");
                        }
                        net.add_trans(
                            &format!("t{i}_fork_{callee_name}"),
                            &[(t.from, 1)],
                            &[
                                (w, Weight::Finite(1)),
                                (model.blocks[*callee].init, Weight::Omega),
                            ],
                        );
                        net.add_trans(
                            &format!("t{i}_join_{callee_name}"),
                            &[(w, 1)],
                            &[(t.to, Weight::Finite(1))],
                        );
                    }
                }
            } else {
                add_transition_nets(model, &mut net, b, t, &mut idx)?;
            }
        }
    }
    for b in &model.blocks {
        net.add_trans(&format!("end_{}", b.name), &[(b.fin, 1)], &[]);
    }
    Ok(net)
}

// ---------------------------------------------------------------------
// Petri net -> QDAS.

/// How configurations of the generated model encode source-net markings.
///
/// A configuration encodes marking `m` exactly when the main task sits on
/// its idle loop, the pump task sits on its selection loop, each place
/// block `p` has exactly `m(p)` vertices at its waiting state, and no
/// vertex at its two later states.
#[derive(Debug, Clone)]
pub struct MarkingEncoding {
    /// Main's idle-loop state.
    pub main_loop: StateId,
    /// The pump block's selection-loop state.
    pub pump_loop: StateId,
    /// Waiting state of each place block, in net place order.
    pub place_wait: Vec<StateId>,
    /// The later (consuming and final) states of each place block.
    pub place_other: Vec<[StateId; 2]>,
}

impl MarkingEncoding {
    /// Parikh target whose coverability is equivalent to `m`'s net
    /// coverability: idle main, selecting pump, `m(p)` waiting vertices.
    /// Leaving the later place-block states unconstrained is harmless
    /// because surplus or consumed vertices only witness larger markings,
    /// and coverability is downward closed.
    pub fn cover_target(&self, m: &Marking) -> ParikhImage {
        let mut f = ParikhImage::default();
        f.add(self.main_loop, 1);
        f.add(self.pump_loop, 1);
        for (s, &cnt) in self.place_wait.iter().zip(m) {
            f.add(*s, cnt);
        }
        f
    }

    /// Exact encoding test: the three conditions above.
    pub fn encodes(&self, img: &ParikhImage, m: &Marking) -> bool {
        img.count(self.main_loop) == 1
            && img.count(self.pump_loop) == 1
            && self
                .place_wait
                .iter()
                .zip(m)
                .all(|(s, &cnt)| img.count(*s) == cnt)
            && self
                .place_other
                .iter()
                .all(|pair| pair.iter().all(|s| img.count(*s) == 0))
    }
}

fn dsl_safe(name: &str) -> String {
    let mut out: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if out.is_empty() {
        out.push('_');
    }
    out
}

/// Compile a Petri net with 0/1 arcs into an asynchronous concurrent
/// model whose Parikh coverability answers net coverability.
///
/// One block per place `p`: its tasks are the tokens. A boolean variable
/// `v_p` is the consumption handshake: the pump block fires a net
/// transition by raising `v_p` for every input place, waiting until all
/// are lowered again (each lowering kills one waiting `p` task), then
/// dispatching one task per output place. Main seeds at most `m0(p)`
/// tasks per place (the run may under-fill, which is sound because
/// coverability is downward closed) and parks on an idle loop.
pub fn pn_to_qdas(net: &Net) -> Result<(Qdas, MarkingEncoding), String> {
    for t in &net.transitions {
        if t.input.iter().any(|&w| w > 1)
            || t.output.iter().any(|&w| w != Weight::Finite(0) && w != Weight::Finite(1))
        {
            return Err(format!(
                "transition {} has non-unit arcs; this encoding needs 0/1 arcs",
                t.name
            ));
        }
    }

    let pnames: Vec<String> = {
        let mut seen = std::collections::BTreeSet::new();
        net.places
            .iter()
            .map(|p| {
                let mut n = dsl_safe(p);
                while !seen.insert(n.clone()) {
                    n.push('_');
                }
                n
            })
            .collect()
    };
    let vars: Vec<String> = pnames.iter().map(|p| format!("v_{p}")).collect();
    let mut mb = Mb::new(
        &format!("{}_qdas", dsl_safe(&net.name)),
        vec!["0".to_string(), "1".to_string()],
        vars,
        vec![QueueDecl {
            name: "jobs".to_string(),
            kind: QueueKind::Concurrent,
        }],
    );

    // Place blocks: wait for the handshake, lower it, finish.
    let mut place_blocks = Vec::new();
    let mut place_wait = Vec::new();
    let mut place_other = Vec::new();
    for (p, pname) in pnames.iter().enumerate() {
        let b = mb.block(&format!("p_{pname}"));
        let l10 = mb.state(b, "l10");
        let l11 = mb.state(b, "l11");
        let f = mb.state(b, "f");
        mb.blocks[b].init = l10;
        mb.blocks[b].fin = f;
        let g0 = mb.guard_eq(p, "0");
        let g1 = mb.guard_eq(p, "1");
        let a0 = mb.assign(p, "0");
        mb.tr(b, l10, g0, l10);
        mb.tr(b, l10, g1, l11);
        mb.tr(b, l11, a0, f);
        place_blocks.push(b);
        place_wait.push(l10);
        place_other.push([l11, f]);
    }

    // Pump block: repeatedly pick a net transition and play its handshake.
    let pump = mb.block("pump");
    let l14 = mb.state(pump, "l14");
    let pump_fin = mb.state(pump, "f");
    mb.blocks[pump].init = l14;
    mb.blocks[pump].fin = pump_fin;
    for (ti, t) in net.transitions.iter().enumerate() {
        let inputs: Vec<usize> = (0..net.places.len()).filter(|&p| t.input[p] == 1).collect();
        let outputs: Vec<usize> = (0..net.places.len())
            .filter(|&p| t.output[p] == Weight::Finite(1))
            .collect();
        // Raise v_p for every input place.
        let mut cur = l14;
        let wait = mb.state(pump, &format!("l18_{ti}"));
        if inputs.is_empty() {
            mb.tr(pump, cur, TRUE, wait);
        } else {
            for (k, &p) in inputs.iter().enumerate() {
                let next = if k + 1 == inputs.len() {
                    wait
                } else {
                    mb.state(pump, &format!("l16_{ti}_{k}"))
                };
                let a1 = mb.assign(p, "1");
                mb.tr(pump, cur, a1, next);
                cur = next;
            }
        }
        // Busy-wait until every place lowered its flag again.
        for p in 0..net.places.len() {
            let g1 = mb.guard_eq(p, "1");
            mb.tr(pump, wait, g1, wait);
        }
        let all_zero = Action::Test(Guard(
            (0..net.places.len())
                .map(|p| GuardAtom {
                    var: p,
                    positive: true,
                    val: 0,
                })
                .collect(),
        ));
        // Dispatch one task per output place, then back to selection.
        cur = wait;
        let mut pending = all_zero;
        for (k, &p) in outputs.iter().enumerate() {
            let next = mb.state(pump, &format!("l19_{ti}_{k}"));
            mb.tr(pump, cur, pending, next);
            pending = Action::DispatchA {
                queue: 0,
                block: place_blocks[p],
            };
            cur = next;
        }
        mb.tr(pump, cur, pending, l14);
    }

    // Main: seed up to m0(p) tasks per place, start the pump, idle.
    let main = mb.block("main");
    let mut seed_states = Vec::new();
    for (p, pname) in pnames.iter().enumerate() {
        let l3 = mb.state(main, &format!("l3_{pname}"));
        let mut chain = Vec::new();
        for k in 0..net.initial[p] {
            chain.push(mb.state(main, &format!("l6_{pname}_{k}")));
        }
        seed_states.push((l3, chain));
    }
    let l7 = mb.state(main, "l7");
    let l8 = mb.state(main, "l8");
    let main_fin = mb.state(main, "f");
    mb.blocks[main].init = seed_states.first().map(|(l3, _)| *l3).unwrap_or(l7);
    mb.blocks[main].fin = main_fin;
    for p in 0..pnames.len() {
        let (l3, chain) = &seed_states[p];
        let section_end = seed_states
            .get(p + 1)
            .map(|(l3, _)| *l3)
            .unwrap_or(l7);
        let a0 = mb.assign(p, "0");
        mb.tr(main, *l3, a0, chain.first().copied().unwrap_or(section_end));
        for (k, &s) in chain.iter().enumerate() {
            let next = chain.get(k + 1).copied().unwrap_or(section_end);
            mb.tr(
                main,
                s,
                Action::DispatchA {
                    queue: 0,
                    block: place_blocks[p],
                },
                next,
            );
            mb.tr(main, s, TRUE, section_end);
        }
    }
    mb.tr(
        main,
        l7,
        Action::DispatchA {
            queue: 0,
            block: pump,
        },
        l8,
    );
    mb.tr(main, l8, TRUE, l8);

    let enc = MarkingEncoding {
        main_loop: l8,
        pump_loop: l14,
        place_wait,
        place_other,
    };
    Ok((mb.build(), enc))
}

// ---------------------------------------------------------------------
// FIFO channel systems.

/// A finite control with one reliable FIFO channel.
#[derive(Debug, Clone)]
pub struct FifoSystem {
    pub name: String,
    pub states: Vec<String>,
    pub init: usize,
    pub messages: Vec<String>,
    pub transitions: Vec<(usize, FifoOp, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FifoOp {
    Send(usize),
    Recv(usize),
    Internal,
}

/// Parse the channel-system text format:
///
/// ```text
/// fifo ping {
///   states s0, s1, done;
///   init s0;
///   messages a;
///   s0 -> s1 : !a;      // send a
///   s1 -> done : ?a;    // receive a
///   s0 -> s0 : eps;     // internal step
/// }
/// ```
pub fn parse_fifo(src: &str) -> Result<FifoSystem, ParseError> {
    let mut p = Parser::new(lex(src)?);
    let (kw, at) = p.expect_name("`fifo`")?;
    if kw != "fifo" {
        return p.err(at, "expected `fifo`");
    }
    let (name, _) = p.expect_name("a system name")?;
    p.expect_sym("{")?;
    let mut states: Vec<String> = Vec::new();
    let mut messages: Vec<String> = Vec::new();
    let mut init: Option<usize> = None;
    let mut transitions = Vec::new();
    loop {
        if p.eat_sym("}") {
            break;
        }
        let (word, at) = p.expect_name("a section or state name")?;
        match word {
            "states" | "messages" => {
                let dst = if word == "states" { &mut states } else { &mut messages };
                loop {
                    let (n, nat) = p.expect_name("a name")?;
                    if n == "eps" {
                        return p.err(nat, "`eps` is reserved");
                    }
                    if dst.iter().any(|x| x == n) {
                        return p.err(nat, format!("duplicate name `{n}`"));
                    }
                    dst.push(n.to_string());
                    if p.eat_sym(";") {
                        break;
                    }
                    p.expect_sym(",")?;
                }
            }
            "init" => {
                let (n, nat) = p.expect_name("a state name")?;
                let Some(i) = states.iter().position(|s| s == n) else {
                    return p.err(nat, format!("unknown state `{n}`"));
                };
                init = Some(i);
                p.expect_sym(";")?;
            }
            from_name => {
                let Some(from) = states.iter().position(|s| s == from_name) else {
                    return p.err(at, format!("unknown state `{from_name}`"));
                };
                p.expect_sym("->")?;
                let (to_name, tat) = p.expect_name("a state name")?;
                let Some(to) = states.iter().position(|s| s == to_name) else {
                    return p.err(tat, format!("unknown state `{to_name}`"));
                };
                p.expect_sym(":")?;
                let op = if p.eat_sym("!") {
                    let (m, mat) = p.expect_name("a message name")?;
                    let Some(mi) = messages.iter().position(|x| x == m) else {
                        return p.err(mat, format!("unknown message `{m}`"));
                    };
                    FifoOp::Send(mi)
                } else if p.eat_sym("?") {
                    let (m, mat) = p.expect_name("a message name")?;
                    let Some(mi) = messages.iter().position(|x| x == m) else {
                        return p.err(mat, format!("unknown message `{m}`"));
                    };
                    FifoOp::Recv(mi)
                } else {
                    let (w, wat) = p.expect_name("`!m`, `?m` or `eps`")?;
                    if w != "eps" {
                        return p.err(wat, "expected `!m`, `?m` or `eps`");
                    }
                    FifoOp::Internal
                };
                p.expect_sym(";")?;
                transitions.push((from, op, to));
            }
        }
    }
    let Tok::Eof = p.peek().tok else {
        let at = p.peek();
        return p.err(at, "trailing input after `}`");
    };
    let Some(init) = init else {
        let at = p.peek();
        return p.err(at, "missing `init`");
    };
    Ok(FifoSystem {
        name: name.to_string(),
        states,
        init,
        messages,
        transitions,
    })
}

/// Compile a FIFO system and a goal state into a serial asynchronous
/// model plus the per-block goal targets.
///
/// The serial queue holds the channel: sending `m` dispatches block
/// `m_{m}`, receiving hands control to the next dequeued task after
/// recording the expected message in `head`. Each message block first
/// checks it matches `head`, then simulates the control from `state`,
/// terminating on its own receive so the queue can advance. Wrong guesses
/// park in a dead loop. The goal is reached iff some block's `l21` state
/// is coverable, so the result carries one target per message block.
pub fn fifo_to_qdas(f: &FifoSystem, goal: usize) -> (Qdas, Vec<ParikhImage>) {
    let mut domain = vec!["eps".to_string()];
    domain.extend(f.messages.iter().map(|m| format!("m_{m}")));
    domain.extend(f.states.iter().map(|s| format!("s_{s}")));
    let mut mb = Mb::new(
        &format!("{}_qdas", dsl_safe(&f.name)),
        domain,
        vec!["state".to_string(), "head".to_string()],
        vec![QueueDecl {
            name: "chan".to_string(),
            kind: QueueKind::Serial,
        }],
    );
    let (vstate, vhead) = (0usize, 1usize);

    // One block per message plus the kick-off block for the empty head.
    let tags: Vec<String> = std::iter::once("eps".to_string())
        .chain(f.messages.iter().map(|m| format!("m_{m}")))
        .collect();
    let blocks: Vec<BlockId> = tags.iter().map(|t| mb.block(t)).collect();

    let mut targets = Vec::new();
    for (bi, b) in blocks.iter().copied().enumerate() {
        let me = tags[bi].clone();
        let l10 = mb.state(b, "l10");
        let l11 = mb.state(b, "l11");
        let l20 = mb.state(b, "l20");
        let l21 = mb.state(b, "l21");
        let fin = mb.state(b, "f");
        mb.blocks[b].init = l10;
        mb.blocks[b].fin = fin;
        let head_is_me = mb.guard_eq(vhead, &me);
        let head_not_me = mb.guard_ne(vhead, &me);
        mb.tr(b, l10, head_is_me, l11);
        mb.tr(b, l10, head_not_me, l20);
        let at_goal = mb.guard_eq(vstate, &format!("s_{}", f.states[goal]));
        mb.tr(b, l11, at_goal, l21);
        for (k, &(from, op, to)) in f.transitions.iter().enumerate() {
            let sel = mb.state(b, &format!("l13_{k}"));
            let chk = mb.state(b, &format!("l15_{k}"));
            let done = mb.state(b, &format!("l16_{k}"));
            mb.tr(b, l11, TRUE, sel);
            let right = mb.guard_eq(vstate, &format!("s_{}", f.states[from]));
            let wrong = mb.guard_ne(vstate, &format!("s_{}", f.states[from]));
            mb.tr(b, sel, right, chk);
            mb.tr(b, sel, wrong, l20);
            let step = mb.assign(vstate, &format!("s_{}", f.states[to]));
            mb.tr(b, chk, step, done);
            match op {
                FifoOp::Send(m) => {
                    mb.tr(
                        b,
                        done,
                        Action::DispatchA {
                            queue: 0,
                            block: blocks[m + 1],
                        },
                        l11,
                    );
                }
                FifoOp::Recv(m) => {
                    let l18 = mb.state(b, &format!("l18_{k}"));
                    let expect = mb.assign(vhead, &format!("m_{}", f.messages[m]));
                    mb.tr(b, done, expect, l18);
                    mb.tr(b, l18, TRUE, fin);
                }
                FifoOp::Internal => {
                    mb.tr(b, done, TRUE, l11);
                }
            }
        }
        mb.tr(b, l20, TRUE, l20);
        mb.tr(b, l21, TRUE, l21);
        let mut t = ParikhImage::default();
        t.add(l21, 1);
        targets.push(t);
    }

    // Main: set the start state, blank the head, launch the kick-off task.
    let main = mb.block("main");
    let l5 = mb.state(main, "l5");
    let l6 = mb.state(main, "l6");
    let l7 = mb.state(main, "l7");
    let l8 = mb.state(main, "l8");
    let fin = mb.state(main, "f");
    mb.blocks[main].init = l5;
    mb.blocks[main].fin = fin;
    let set_state = mb.assign(vstate, &format!("s_{}", f.states[f.init]));
    let set_head = mb.assign(vhead, "eps");
    mb.tr(main, l5, set_state, l6);
    mb.tr(main, l6, set_head, l7);
    mb.tr(
        main,
        l7,
        Action::DispatchA {
            queue: 0,
            block: blocks[0],
        },
        l8,
    );
    mb.tr(main, l8, TRUE, l8);

    (mb.build(), targets)
}

// ---------------------------------------------------------------------
// Two-counter systems.

/// A finite control with two natural-number counters.
#[derive(Debug, Clone)]
pub struct TwoCounterSystem {
    pub name: String,
    pub states: Vec<String>,
    pub init: usize,
    pub transitions: Vec<(usize, CounterOp, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterOp {
    Incr(u8),
    Decr(u8),
    Zero(u8),
}

impl CounterOp {
    pub fn counter(self) -> u8 {
        match self {
            CounterOp::Incr(i) | CounterOp::Decr(i) | CounterOp::Zero(i) => i,
        }
    }
}

/// Parse the two-counter text format:
///
/// ```text
/// 2cs updown {
///   states s0, s1, done;
///   init s0;
///   s0 -> s1 : incr(1);
///   s1 -> done : zero(2);
/// }
/// ```
pub fn parse_2cs(src: &str) -> Result<TwoCounterSystem, ParseError> {
    let mut p = Parser::new(lex(src)?);
    let (kw, at) = p.expect_name("`2cs`")?;
    if kw != "2cs" {
        return p.err(at, "expected `2cs`");
    }
    let (name, _) = p.expect_name("a system name")?;
    p.expect_sym("{")?;
    let mut states: Vec<String> = Vec::new();
    let mut init: Option<usize> = None;
    let mut transitions = Vec::new();
    loop {
        if p.eat_sym("}") {
            break;
        }
        let (word, at) = p.expect_name("a section or state name")?;
        match word {
            "states" => loop {
                let (n, nat) = p.expect_name("a state name")?;
                if states.iter().any(|x| x == n) {
                    return p.err(nat, format!("duplicate state `{n}`"));
                }
                states.push(n.to_string());
                if p.eat_sym(";") {
                    break;
                }
                p.expect_sym(",")?;
            },
            "init" => {
                let (n, nat) = p.expect_name("a state name")?;
                let Some(i) = states.iter().position(|s| s == n) else {
                    return p.err(nat, format!("unknown state `{n}`"));
                };
                init = Some(i);
                p.expect_sym(";")?;
            }
            from_name => {
                let Some(from) = states.iter().position(|s| s == from_name) else {
                    return p.err(at, format!("unknown state `{from_name}`"));
                };
                p.expect_sym("->")?;
                let (to_name, tat) = p.expect_name("a state name")?;
                let Some(to) = states.iter().position(|s| s == to_name) else {
                    return p.err(tat, format!("unknown state `{to_name}`"));
                };
                p.expect_sym(":")?;
                let (op_name, oat) = p.expect_name("`incr`, `decr` or `zero`")?;
                p.expect_sym("(")?;
                let (idx, iat) = p.expect_name("a counter index")?;
                let i: u8 = match idx {
                    "1" => 1,
                    "2" => 2,
                    _ => return p.err(iat, "counter index must be 1 or 2"),
                };
                p.expect_sym(")")?;
                p.expect_sym(";")?;
                let op = match op_name {
                    "incr" => CounterOp::Incr(i),
                    "decr" => CounterOp::Decr(i),
                    "zero" => CounterOp::Zero(i),
                    _ => return p.err(oat, "expected `incr`, `decr` or `zero`"),
                };
                transitions.push((from, op, to));
            }
        }
    }
    let Tok::Eof = p.peek().tok else {
        let at = p.peek();
        return p.err(at, "trailing input after `}`");
    };
    let Some(init) = init else {
        let at = p.peek();
        return p.err(at, "missing `init`");
    };
    Ok(TwoCounterSystem {
        name: name.to_string(),
        states,
        init,
        transitions,
    })
}

/// Handshake variable triple for one channel.
#[derive(Clone, Copy)]
struct Chan {
    ready: VarId,
    sent: VarId,
    data: VarId,
}

/// Emit the sending half of a handshake: wait for the receiver, write the
/// message, raise `sent`, wait for the pickup, lower `sent`.
fn emit_send(mb: &mut Mb, b: BlockId, from: StateId, to: StateId, ch: Chan, msg: &str, tag: &str) {
    let s1 = mb.state(b, &format!("{tag}_w"));
    let s2 = mb.state(b, &format!("{tag}_d"));
    let s3 = mb.state(b, &format!("{tag}_r"));
    let s4 = mb.state(b, &format!("{tag}_a"));
    let g_ready = mb.guard_eq(ch.ready, "1");
    let a_data = mb.assign(ch.data, msg);
    let a_sent = mb.assign(ch.sent, "1");
    let g_taken = mb.guard_eq(ch.ready, "0");
    let a_clear = mb.assign(ch.sent, "0");
    mb.tr(b, from, g_ready, s1);
    mb.tr(b, s1, a_data, s2);
    mb.tr(b, s2, a_sent, s3);
    mb.tr(b, s3, g_taken, s4);
    mb.tr(b, s4, a_clear, to);
}

/// Emit the receiving half: announce readiness, wait for the message,
/// check it, confirm the pickup, wait for the sender to finish.
fn emit_recv(mb: &mut Mb, b: BlockId, from: StateId, to: StateId, ch: Chan, msg: &str, tag: &str) {
    let s1 = mb.state(b, &format!("{tag}_r"));
    let s2 = mb.state(b, &format!("{tag}_s"));
    let s3 = mb.state(b, &format!("{tag}_m"));
    let s4 = mb.state(b, &format!("{tag}_c"));
    let a_ready = mb.assign(ch.ready, "1");
    let g_sent = mb.guard_eq(ch.sent, "1");
    let g_msg = mb.guard_eq(ch.data, msg);
    let a_taken = mb.assign(ch.ready, "0");
    let g_done = mb.guard_eq(ch.sent, "0");
    mb.tr(b, from, a_ready, s1);
    mb.tr(b, s1, g_sent, s2);
    mb.tr(b, s2, g_msg, s3);
    mb.tr(b, s3, a_taken, s4);
    mb.tr(b, s4, g_done, to);
}

/// Compile a two-counter system and a goal state into a mixed-dispatch
/// concurrent model plus the single goal target.
///
/// Counter `i` lives as a chain of synchronously dispatched `one_i`
/// tasks rooted in a `zero_i` task; the chain tip is the only unblocked
/// member and the chain length is the counter value. Main drives the
/// control flow and performs each counter operation by a two-variable
/// handshake with the tip: `incr` makes the tip grow the chain (the fresh
/// task acknowledges), `decr` terminates a `one_i` tip (the task below
/// resumes and acknowledges), and `zero` is only answerable by the
/// `zero_i` root. Wrong operations leave the handshake stuck, so exactly
/// the source system's runs drive main to its goal state.
pub fn two_counter_to_qdas(cs: &TwoCounterSystem, goal: usize) -> (Qdas, ParikhImage) {
    let mut domain: Vec<String> = ["0", "1", "incr", "decr", "zero", "ack"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    domain.extend(cs.states.iter().map(|s| format!("s_{s}")));
    let vars = vec![
        "state".to_string(),
        "rdy_1".to_string(),
        "snt_1".to_string(),
        "msg_1".to_string(),
        "rdy_2".to_string(),
        "snt_2".to_string(),
        "msg_2".to_string(),
    ];
    let mut mb = Mb::new(
        &format!("{}_qdas", dsl_safe(&cs.name)),
        domain,
        vars,
        vec![QueueDecl {
            name: "tasks".to_string(),
            kind: QueueKind::Concurrent,
        }],
    );
    let vstate = 0usize;
    let chan = |i: u8| Chan {
        ready: 1 + 3 * (usize::from(i) - 1),
        sent: 2 + 3 * (usize::from(i) - 1),
        data: 3 + 3 * (usize::from(i) - 1),
    };

    // Counter blocks. `one_i` may terminate (a decrement); `zero_i` never.
    let mut zero_blocks = [0usize; 2];
    let mut one_blocks = [0usize; 2];
    for i in [1u8, 2u8] {
        one_blocks[usize::from(i) - 1] = mb.block(&format!("one_{i}"));
        zero_blocks[usize::from(i) - 1] = mb.block(&format!("zero_{i}"));
    }
    for i in [1u8, 2u8] {
        let ch = chan(i);
        let one = one_blocks[usize::from(i) - 1];
        let grow = Action::DispatchS {
            queue: 0,
            block: one,
        };
        for (is_zero, b) in [(true, zero_blocks[usize::from(i) - 1]), (false, one)] {
            let s1 = mb.state(b, "born");
            let s4 = mb.state(b, "tip");
            let s5 = mb.state(b, "grow");
            let s2 = mb.state(b, "grown");
            let fin = mb.state(b, "f");
            mb.blocks[b].init = s1;
            mb.blocks[b].fin = fin;
            emit_send(&mut mb, b, s1, s4, ch, "ack", "hello");
            emit_recv(&mut mb, b, s4, s5, ch, "incr", "up");
            mb.tr(b, s5, grow.clone(), s2);
            emit_send(&mut mb, b, s2, s4, ch, "ack", "upack");
            if is_zero {
                let s3 = mb.state(b, "zeroed");
                emit_recv(&mut mb, b, s4, s3, ch, "zero", "test");
                emit_send(&mut mb, b, s3, s4, ch, "ack", "testack");
            } else {
                emit_recv(&mut mb, b, s4, fin, ch, "decr", "down");
            }
        }
    }

    // Main: start both counters at zero, then walk the control graph.
    let main = mb.block("main");
    let m0 = mb.state(main, "m0");
    let m1 = mb.state(main, "m1");
    let m2 = mb.state(main, "m2");
    let m3 = mb.state(main, "m3");
    let m4 = mb.state(main, "m4");
    let mloop = mb.state(main, "mloop");
    let mgoal = mb.state(main, "mgoal");
    let fin = mb.state(main, "f");
    mb.blocks[main].init = m0;
    mb.blocks[main].fin = fin;
    mb.tr(
        main,
        m0,
        Action::DispatchA {
            queue: 0,
            block: zero_blocks[0],
        },
        m1,
    );
    emit_recv(&mut mb, main, m1, m2, chan(1), "ack", "boot1");
    mb.tr(
        main,
        m2,
        Action::DispatchA {
            queue: 0,
            block: zero_blocks[1],
        },
        m3,
    );
    emit_recv(&mut mb, main, m3, m4, chan(2), "ack", "boot2");
    let set0 = mb.assign(vstate, &format!("s_{}", cs.states[cs.init]));
    mb.tr(main, m4, set0, mloop);

    for (k, &(from, op, to)) in cs.transitions.iter().enumerate() {
        let c1 = mb.state(main, &format!("op{k}_go"));
        let c2 = mb.state(main, &format!("op{k}_sent"));
        let c3 = mb.state(main, &format!("op{k}_ok"));
        let here = mb.guard_eq(vstate, &format!("s_{}", cs.states[from]));
        mb.tr(main, mloop, here, c1);
        let msg = match op {
            CounterOp::Incr(_) => "incr",
            CounterOp::Decr(_) => "decr",
            CounterOp::Zero(_) => "zero",
        };
        let ch = chan(op.counter());
        emit_send(&mut mb, main, c1, c2, ch, msg, &format!("op{k}"));
        emit_recv(&mut mb, main, c2, c3, ch, "ack", &format!("op{k}ack"));
        let advance = mb.assign(vstate, &format!("s_{}", cs.states[to]));
        mb.tr(main, c3, advance, mloop);
    }
    let at_goal = mb.guard_eq(vstate, &format!("s_{}", cs.states[goal]));
    mb.tr(main, mloop, at_goal, mgoal);
    mb.tr(main, mgoal, TRUE, mgoal);

    let mut target = ParikhImage::default();
    target.add(mgoal, 1);
    (mb.build(), target)
}
