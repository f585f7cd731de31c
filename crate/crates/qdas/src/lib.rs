//! Verification of queue-dispatch asynchronous systems.
//!
//! A model consists of blocks (finite LTSs) that dispatch one another onto
//! FIFO dispatch queues, either asynchronously (caller continues) or
//! synchronously (caller waits), over a finite-domain shared store. Serial
//! queues run at most one task at a time; concurrent queues impose no such
//! bound. Extended models add a fork/join primitive with a possibly
//! unbounded multiplicity.
//!
//! The semantics is a transition system over call-task graphs ([`ctg`]).
//! Two verification problems are supported: Parikh coverability (can a
//! configuration be reached whose multiset of control states covers a
//! given target) and termination (are all runs finite).
//!
//! Decision procedures:
//! - bounded breadth-first exploration of the call-task-graph semantics
//!   for any model ([`explore`]), complete when the state space is finite;
//! - a pushdown-system route for synchronous models ([`pds`]);
//! - a Petri-net route for asynchronous models over concurrent queues and
//!   for the fork/join abstractions of extended models ([`petri`]);
//! - reductions between formalisms, including lower-bound gadgets from
//!   Petri-net coverability, FIFO channel systems, and two-counter
//!   machines ([`translate`]).

pub mod ctg;
pub mod dsl;
pub mod explore;
pub mod model;
pub mod pds;
pub mod petri;
pub mod testgen;
pub mod translate;
