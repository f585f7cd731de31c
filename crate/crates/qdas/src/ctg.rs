//! Call-task graphs: configurations and the operational semantics.
//!
//! A configuration is a directed labeled graph over call vertices (pending
//! dispatches sitting in a queue) and task vertices (dequeued, executing
//! instances of a block), together with a store valuation. Edges come in
//! three kinds:
//!
//! - `Fifo(q)`: order between the call vertices of queue `q`, pointing from
//!   newer to older. The oldest call (no outgoing `Fifo` edge) is the head,
//!   the newest (no incoming one) is the tail.
//! - `Block(q)`: scheduling edge of a serial queue, from the head call to
//!   the queue's unique running task. It exists exactly while a serial
//!   queue has both a task and a pending call, and keeps the head from
//!   being dequeued until the task is removed.
//! - `Wait`: from a waiting task to the vertex it waits on; created by
//!   synchronous dispatch and by fork/join.
//!
//! A vertex is blocked iff it has an outgoing edge of any kind. Only
//! unblocked tasks step, only unblocked heads are dequeued, only unblocked
//! tasks at their block's final state are removed.

use crate::model::{
    Action, BlockId, ForkCount, ParikhImage, Qdas, QueueId, QueueKind, StateId, Valuation,
};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Vertex id, unique within one configuration's history.
pub type VId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VKind {
    Call,
    Task,
}

/// The pseudo-queue of the main task is represented by `queue == None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vertex {
    pub kind: VKind,
    pub block: BlockId,
    pub queue: Option<QueueId>,
    /// Current state; call vertices stay at their block's initial state.
    pub state: StateId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Fifo(QueueId),
    Block(QueueId),
    Wait,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub src: VId,
    pub dst: VId,
    pub kind: EdgeKind,
}

/// The graph part of a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Ctg {
    verts: BTreeMap<VId, Vertex>,
    edges: Vec<Edge>,
    next: VId,
}

impl Ctg {
    pub fn vertices(&self) -> impl Iterator<Item = (VId, &Vertex)> {
        self.verts.iter().map(|(k, v)| (*k, v))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex(&self, v: VId) -> &Vertex {
        &self.verts[&v]
    }

    pub fn n_vertices(&self) -> usize {
        self.verts.len()
    }

    pub fn contains(&self, v: VId) -> bool {
        self.verts.contains_key(&v)
    }

    pub fn add_vertex(&mut self, v: Vertex) -> VId {
        let id = self.next;
        self.next += 1;
        self.verts.insert(id, v);
        id
    }

    /// Remove a vertex together with all incident edges.
    pub fn remove_vertex(&mut self, v: VId) {
        self.verts.remove(&v);
        self.edges.retain(|e| e.src != v && e.dst != v);
    }

    pub fn add_edge(&mut self, src: VId, dst: VId, kind: EdgeKind) {
        self.edges.push(Edge { src, dst, kind });
    }

    pub fn has_outgoing(&self, v: VId) -> bool {
        self.edges.iter().any(|e| e.src == v)
    }

    /// No outgoing edge of any kind.
    pub fn is_unblocked(&self, v: VId) -> bool {
        !self.has_outgoing(v)
    }

    /// Call vertices of `q`, unordered.
    pub fn calls_of(&self, q: QueueId) -> Vec<VId> {
        self.verts
            .iter()
            .filter(|(_, v)| v.kind == VKind::Call && v.queue == Some(q))
            .map(|(id, _)| *id)
            .collect()
    }

    /// Task vertices of `q`.
    pub fn tasks_of(&self, q: QueueId) -> Vec<VId> {
        self.verts
            .iter()
            .filter(|(_, v)| v.kind == VKind::Task && v.queue == Some(q))
            .map(|(id, _)| *id)
            .collect()
    }

    /// Oldest call of `q`: the call with no outgoing `Fifo` edge.
    pub fn head(&self, q: QueueId) -> Option<VId> {
        self.calls_of(q).into_iter().find(|&c| {
            !self
                .edges
                .iter()
                .any(|e| e.src == c && matches!(e.kind, EdgeKind::Fifo(_)))
        })
    }

    /// Newest call of `q`: the call with no incoming `Fifo` edge.
    pub fn tail(&self, q: QueueId) -> Option<VId> {
        self.calls_of(q).into_iter().find(|&c| {
            !self
                .edges
                .iter()
                .any(|e| e.dst == c && matches!(e.kind, EdgeKind::Fifo(_)))
        })
    }

    /// Calls of `q` in queue order, head first.
    pub fn queue_order(&self, q: QueueId) -> Vec<VId> {
        let mut out = Vec::new();
        let mut cur = self.head(q);
        while let Some(c) = cur {
            out.push(c);
            cur = self
                .edges
                .iter()
                .find(|e| e.dst == c && matches!(e.kind, EdgeKind::Fifo(_)))
                .map(|e| e.src);
        }
        out
    }

    /// Append a call for `block` to queue `q`. Adds the FIFO edge to the
    /// previous tail, or the scheduling edge to the running task when `q`
    /// is an empty serial queue that is busy.
    pub fn enqueue(&mut self, model: &Qdas, q: QueueId, block: BlockId) -> VId {
        let old_tail = self.tail(q);
        let c = self.add_vertex(Vertex {
            kind: VKind::Call,
            block,
            queue: Some(q),
            state: model.blocks[block].init,
        });
        match old_tail {
            Some(t) => self.add_edge(c, t, EdgeKind::Fifo(q)),
            None => {
                if model.queues[q].kind == QueueKind::Serial {
                    if let Some(task) = self.tasks_of(q).first().copied() {
                        self.add_edge(c, task, EdgeKind::Block(q));
                    }
                }
            }
        }
        c
    }

    /// Turn the unblocked head of `q` into a task. Severs its incoming
    /// FIFO edge, so the next call becomes the head; for a serial queue
    /// the new head is then re-blocked on the fresh task. Returns the
    /// dequeued vertex.
    ///
    /// Panics if `q` has no head or the head is blocked.
    pub fn dequeue(&mut self, model: &Qdas, q: QueueId) -> VId {
        let h = self.head(q).expect("dequeue on queue without head");
        assert!(self.is_unblocked(h), "dequeue on blocked head");
        self.verts.get_mut(&h).unwrap().kind = VKind::Task;
        self.edges
            .retain(|e| !(e.dst == h && matches!(e.kind, EdgeKind::Fifo(_))));
        if model.queues[q].kind == QueueKind::Serial {
            if let Some(new_head) = self.head(q) {
                self.add_edge(new_head, h, EdgeKind::Block(q));
            }
        }
        h
    }

    /// Advance a task to a new state.
    pub fn step(&mut self, v: VId, to: StateId) {
        let vert = self.verts.get_mut(&v).unwrap();
        debug_assert_eq!(vert.kind, VKind::Task);
        vert.state = to;
    }

    /// Multiset of control states over all vertices; calls count at their
    /// block's initial state.
    pub fn parikh(&self) -> ParikhImage {
        let mut img = ParikhImage::default();
        for v in self.verts.values() {
            img.add(v.state, 1);
        }
        img
    }

    /// Structural invariants of reachable configurations. Returns the
    /// first violation found.
    pub fn well_formed(&self, model: &Qdas) -> Result<(), String> {
        for (id, v) in &self.verts {
            let b = &model.blocks[v.block];
            if !b.states.contains(&v.state) {
                return Err(format!("vertex #{id}: state outside its block"));
            }
            if v.kind == VKind::Call && v.state != b.init {
                return Err(format!("call #{id} not at its block's initial state"));
            }
            match v.queue {
                None => {
                    if v.kind != VKind::Task || v.block != model.main {
                        return Err(format!("vertex #{id}: only the main task has no queue"));
                    }
                }
                Some(q) if q >= model.queues.len() => {
                    return Err(format!("vertex #{id}: unknown queue"));
                }
                _ => {}
            }
        }
        if self
            .verts
            .values()
            .filter(|v| v.queue.is_none())
            .count()
            > 1
        {
            return Err("more than one main vertex".to_string());
        }
        for e in &self.edges {
            let (Some(s), Some(d)) = (self.verts.get(&e.src), self.verts.get(&e.dst)) else {
                return Err("dangling edge".to_string());
            };
            match e.kind {
                EdgeKind::Fifo(q) => {
                    if s.kind != VKind::Call
                        || d.kind != VKind::Call
                        || s.queue != Some(q)
                        || d.queue != Some(q)
                    {
                        return Err("fifo edge must join two calls of its queue".to_string());
                    }
                }
                EdgeKind::Block(q) => {
                    if model.queues[q].kind != QueueKind::Serial {
                        return Err("scheduling edge on a concurrent queue".to_string());
                    }
                    if s.kind != VKind::Call || s.queue != Some(q) {
                        return Err("scheduling edge source must be a call of its queue".to_string());
                    }
                    if d.kind != VKind::Task || d.queue != Some(q) {
                        return Err("scheduling edge target must be the queue's task".to_string());
                    }
                }
                EdgeKind::Wait => {
                    if s.kind != VKind::Task {
                        return Err("wait edge source must be a task".to_string());
                    }
                    if d.queue.is_none() {
                        return Err("wait edge target must be a dispatched vertex".to_string());
                    }
                }
            }
        }
        // One incoming wait edge per vertex; one outgoing unless forking.
        for (id, _) in &self.verts {
            let w_in = self
                .edges
                .iter()
                .filter(|e| e.dst == *id && e.kind == EdgeKind::Wait)
                .count();
            if w_in > 1 {
                return Err(format!("vertex #{id} has {w_in} waiters"));
            }
            if !model.extended {
                let w_out = self
                    .edges
                    .iter()
                    .filter(|e| e.src == *id && e.kind == EdgeKind::Wait)
                    .count();
                if w_out > 1 {
                    return Err(format!("vertex #{id} waits on {w_out} vertices"));
                }
            }
        }
        // FIFO edges of each queue form one simple path over its calls.
        for q in 0..model.queues.len() {
            let calls = self.calls_of(q);
            let fifo: Vec<&Edge> = self
                .edges
                .iter()
                .filter(|e| e.kind == EdgeKind::Fifo(q))
                .collect();
            if calls.is_empty() {
                if !fifo.is_empty() {
                    return Err(format!("queue {q} has fifo edges but no calls"));
                }
                continue;
            }
            if fifo.len() + 1 != calls.len() {
                return Err(format!("queue {q}: fifo edges do not form a path"));
            }
            let order = self.queue_order(q);
            if order.len() != calls.len() {
                return Err(format!("queue {q}: fifo path does not cover all calls"));
            }
            for &c in &calls {
                for dir in [true, false] {
                    let deg = self
                        .edges
                        .iter()
                        .filter(|e| e.kind == EdgeKind::Fifo(q) && (if dir { e.src } else { e.dst }) == c)
                        .count();
                    if deg > 1 {
                        return Err(format!("queue {q}: call #{c} has fifo degree {deg}"));
                    }
                }
            }
        }
        // Serial queues: at most one task, and the scheduling edge exists
        // exactly when both a task and a head are present.
        for (q, decl) in model.queues.iter().enumerate() {
            if decl.kind != QueueKind::Serial {
                continue;
            }
            let tasks = self.tasks_of(q);
            if tasks.len() > 1 {
                return Err(format!("serial queue {q} has {} tasks", tasks.len()));
            }
            let blocks: Vec<&Edge> = self
                .edges
                .iter()
                .filter(|e| e.kind == EdgeKind::Block(q))
                .collect();
            let expected: Vec<(VId, VId)> = match (self.head(q), tasks.first()) {
                (Some(h), Some(&t)) => vec![(h, t)],
                _ => vec![],
            };
            let got: Vec<(VId, VId)> = blocks.iter().map(|e| (e.src, e.dst)).collect();
            if got != expected {
                return Err(format!(
                    "serial queue {q}: scheduling edges {got:?}, expected {expected:?}"
                ));
            }
        }
        Ok(())
    }
}

/// A full configuration: graph plus store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub ctg: Ctg,
    pub val: Valuation,
}

/// Options controlling successor enumeration.
#[derive(Debug, Clone, Copy)]
pub struct SemanticsOpts {
    /// Fuse each synchronous dispatch with the immediate dequeue of the
    /// fresh call, and drop the dispatch when the fresh call would be
    /// blocked. Faithful for termination on synchronous models and for
    /// comparison against the pushdown route; not meaningful for models
    /// with asynchronous dispatch.
    pub atomic_sync: bool,
    /// Concrete multiplicities enumerated for `forkjoin(_, _, *)`.
    pub star_bound: u32,
}

impl Default for SemanticsOpts {
    fn default() -> Self {
        SemanticsOpts {
            atomic_sync: false,
            star_bound: 2,
        }
    }
}

/// One enabled step: a description and the configuration it leads to.
#[derive(Debug, Clone)]
pub struct Succ {
    pub desc: String,
    pub config: Configuration,
}

impl Configuration {
    /// The initial configuration: a single main task at its initial state.
    pub fn initial(model: &Qdas) -> Self {
        let mut ctg = Ctg::default();
        ctg.add_vertex(Vertex {
            kind: VKind::Task,
            block: model.main,
            queue: None,
            state: model.blocks[model.main].init,
        });
        Configuration {
            ctg,
            val: Valuation::initial(model),
        }
    }

    pub fn parikh(&self) -> ParikhImage {
        self.ctg.parikh()
    }

    /// All enabled steps, in a fixed deterministic order: removals of
    /// finished tasks (by vertex id), dequeues (by queue id), then block
    /// transitions of unblocked tasks (by vertex id, then declaration
    /// order).
    pub fn successors(&self, model: &Qdas, opts: &SemanticsOpts) -> Vec<Succ> {
        let mut out = Vec::new();
        // Removals.
        for (v, vert) in self.ctg.vertices() {
            if vert.kind == VKind::Task
                && model.blocks[vert.block].fin == vert.state
                && self.ctg.is_unblocked(v)
            {
                let mut next = self.clone();
                next.ctg.remove_vertex(v);
                out.push(Succ {
                    desc: format!("remove finished {} task #{v}", model.blocks[vert.block].name),
                    config: next,
                });
            }
        }
        // Dequeues.
        for q in 0..model.queues.len() {
            if let Some(h) = self.ctg.head(q) {
                if self.ctg.is_unblocked(h) {
                    let mut next = self.clone();
                    next.ctg.dequeue(model, q);
                    out.push(Succ {
                        desc: format!("dequeue {} -> #{h}", model.queues[q].name),
                        config: next,
                    });
                }
            }
        }
        // Block transitions.
        for (v, vert) in self.ctg.vertices() {
            if vert.kind != VKind::Task || !self.ctg.is_unblocked(v) {
                continue;
            }
            let block = &model.blocks[vert.block];
            for t in &block.transitions {
                if t.from != vert.state {
                    continue;
                }
                let tag = || {
                    format!(
                        "#{v} {}: {} -> {} : {}",
                        block.name,
                        model.state_name(t.from),
                        model.state_name(t.to),
                        crate::dsl::print_action(model, &t.action),
                    )
                };
                match &t.action {
                    Action::DispatchA { queue, block: b } => {
                        let mut next = self.clone();
                        next.ctg.enqueue(model, *queue, *b);
                        next.ctg.step(v, t.to);
                        out.push(Succ {
                            desc: tag(),
                            config: next,
                        });
                    }
                    Action::DispatchS { queue, block: b } => {
                        let mut next = self.clone();
                        let c = next.ctg.enqueue(model, *queue, *b);
                        next.ctg.add_edge(v, c, EdgeKind::Wait);
                        next.ctg.step(v, t.to);
                        if opts.atomic_sync {
                            if next.ctg.is_unblocked(c) {
                                next.ctg.dequeue(model, *queue);
                                out.push(Succ {
                                    desc: tag() + " [atomic]",
                                    config: next,
                                });
                            }
                            // A blocked fresh call would deadlock the
                            // caller chain; the fused semantics drops it.
                        } else {
                            out.push(Succ {
                                desc: tag(),
                                config: next,
                            });
                        }
                    }
                    Action::ForkJoin {
                        queue,
                        block: b,
                        count,
                    } => {
                        let ns: Vec<u32> = match count {
                            ForkCount::Finite(n) => vec![*n],
                            ForkCount::Star => (0..=opts.star_bound).collect(),
                        };
                        for n in ns {
                            let mut next = self.clone();
                            next.ctg.step(v, t.to);
                            for _ in 0..n {
                                let c = next.ctg.enqueue(model, *queue, *b);
                                next.ctg.add_edge(v, c, EdgeKind::Wait);
                            }
                            let mut desc = tag();
                            if matches!(count, ForkCount::Star) {
                                let _ = write!(desc, " [*={n}]");
                            }
                            out.push(Succ { desc, config: next });
                        }
                    }
                    Action::Test(g) => {
                        if g.holds(&self.val) {
                            let mut next = self.clone();
                            next.ctg.step(v, t.to);
                            out.push(Succ {
                                desc: tag(),
                                config: next,
                            });
                        }
                    }
                    Action::Assign { var, val } => {
                        let mut next = self.clone();
                        next.val = next.val.assign(*var, *val);
                        next.ctg.step(v, t.to);
                        out.push(Succ {
                            desc: tag(),
                            config: next,
                        });
                    }
                }
            }
        }
        out
    }

    /// Canonical isomorphism key. Two configurations get the same key
    /// exactly when their graphs are isomorphic respecting labels, queue
    /// contents and order, the serial schedulers, and the wait structure,
    /// and their valuations agree.
    ///
    /// Anchors pin down the non-interchangeable vertices: position in the
    /// queue for calls, the queue itself for serial tasks, the pseudo-queue
    /// for main. Unanchored vertices (concurrent tasks) are identified up
    /// to permutation by sorting encodings. Scheduling edges are implied
    /// by the anchors and are not encoded.
    pub fn canonical_key(&self, model: &Qdas) -> String {
        let mut anchor: BTreeMap<VId, String> = BTreeMap::new();
        for q in 0..model.queues.len() {
            for (pos, c) in self.ctg.queue_order(q).iter().enumerate() {
                anchor.insert(*c, format!("q{q}.{pos}"));
            }
            if model.queues[q].kind == QueueKind::Serial {
                for t in self.ctg.tasks_of(q) {
                    anchor.insert(t, format!("t{q}"));
                }
            }
        }
        for (v, vert) in self.ctg.vertices() {
            if vert.queue.is_none() {
                anchor.insert(v, "main".to_string());
            }
        }
        // Wait edges form a forest: waiter is the parent of the waitee.
        let mut children: BTreeMap<VId, Vec<VId>> = BTreeMap::new();
        let mut has_parent: BTreeMap<VId, bool> = BTreeMap::new();
        for e in self.ctg.edges() {
            if e.kind == EdgeKind::Wait {
                children.entry(e.src).or_default().push(e.dst);
                has_parent.insert(e.dst, true);
            }
        }
        fn enc(
            v: VId,
            ctg: &Ctg,
            anchor: &BTreeMap<VId, String>,
            children: &BTreeMap<VId, Vec<VId>>,
        ) -> String {
            let vert = ctg.vertex(v);
            let k = match vert.kind {
                VKind::Call => "c",
                VKind::Task => "t",
            };
            let q = match vert.queue {
                Some(q) => q.to_string(),
                None => "i".to_string(),
            };
            let a = anchor.get(&v).map(String::as_str).unwrap_or("-");
            let mut kids: Vec<String> = children
                .get(&v)
                .map(|cs| {
                    cs.iter()
                        .map(|&c| enc(c, ctg, anchor, children))
                        .collect()
                })
                .unwrap_or_default();
            kids.sort();
            format!(
                "({k}:{b}:{q}:{s}|{a}|{kids})",
                b = vert.block,
                s = vert.state,
                kids = kids.join(",")
            )
        }
        let mut roots: Vec<String> = self
            .ctg
            .vertices()
            .filter(|(v, _)| !has_parent.get(v).copied().unwrap_or(false))
            .map(|(v, _)| enc(v, &self.ctg, &anchor, &children))
            .collect();
        roots.sort();
        let vals: Vec<String> = self.val.0.iter().map(|v| v.to_string()).collect();
        format!("[{}]#[{}]", roots.join(";"), vals.join(","))
    }

    /// GraphViz rendering for inspection.
    pub fn to_dot(&self, model: &Qdas) -> String {
        let mut s = String::from("digraph ctg {\n  rankdir=LR;\n");
        for (v, vert) in self.ctg.vertices() {
            let shape = match vert.kind {
                VKind::Call => "box",
                VKind::Task => "ellipse",
            };
            let q = match vert.queue {
                Some(q) => model.queues[q].name.clone(),
                None => "iota".to_string(),
            };
            let _ = writeln!(
                s,
                "  v{v} [shape={shape}, label=\"#{v} {}@{} ({q})\"];",
                model.blocks[vert.block].name,
                model.state_name(vert.state),
            );
        }
        for e in self.ctg.edges() {
            let style = match e.kind {
                EdgeKind::Fifo(q) => format!("label=\"{}\"", model.queues[q].name),
                EdgeKind::Block(q) => {
                    format!("style=dashed, label=\"{}!\"", model.queues[q].name)
                }
                EdgeKind::Wait => "style=dashed, label=\"wait\"".to_string(),
            };
            let _ = writeln!(s, "  v{} -> v{} [{style}];", e.src, e.dst);
        }
        s.push_str("}\n");
        s
    }
}
