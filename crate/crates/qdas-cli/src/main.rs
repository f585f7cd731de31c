//! Command-line front end: parse models, classify them, and route
//! verification queries to the procedure matching the model's class.
//!
//! Exit codes: 0 the property holds (target not coverable / terminating),
//! 1 the property is violated, 2 unknown within the configured bounds,
//! 3 input or usage error. Timing goes to stderr so stdout is identical
//! across runs.

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use qdas::ctg::SemanticsOpts;
use qdas::dsl::{parse_model, parse_target, print_model};
use qdas::explore::{self, CoverOutcome, Limits, TermOutcome};
use qdas::model::{ParikhImage, Qdas, QueueClass};
use qdas::pds::{self, Pds, SyncCover, SyncTerm};
use qdas::petri::{parse_net, print_net, Net, PnCover, PnTermination};
use qdas::translate;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "qdas",
    version,
    about = "Verify queue-dispatch asynchronous systems",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print a model's dispatch/queue class and what is decidable for it.
    Classify {
        /// Model file (DSL text).
        model: PathBuf,
        /// Emit a JSON report instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Decide or semi-decide Parikh coverability of a target.
    CheckCover {
        /// Model file (DSL text).
        model: PathBuf,
        /// Target multiset, e.g. "main.crit=2, worker.busy=1"
        /// (unlisted states default to 0).
        #[arg(long)]
        target: String,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Decide or semi-decide whether every run of the model is finite.
    CheckTerm {
        /// Model file (DSL text).
        model: PathBuf,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Enumerate reachable configurations within bounds and print stats.
    Explore {
        /// Model file (DSL text).
        model: PathBuf,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Run one seeded random walk and print the step trace.
    Simulate {
        /// Model file (DSL text).
        model: PathBuf,
        /// Random seed; equal seeds give equal walks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Maximum number of steps.
        #[arg(long, default_value_t = 50)]
        steps: usize,
        /// Unbounded forks expand to 0..=N children per step.
        #[arg(long, default_value_t = 2)]
        star_bound: u32,
        /// Fuse synchronous dispatch with the matching dequeue.
        #[arg(long)]
        atomic_sync: bool,
    },
    /// Print the model's Petri net or pushdown translation.
    Translate {
        /// Model file (DSL text).
        model: PathBuf,
        /// Target formalism.
        #[arg(long, value_enum)]
        to: TranslateTo,
    },
    /// Compile external systems (nets, channel systems, counter
    /// machines) into models.
    Gen {
        #[command(subcommand)]
        what: GenCmd,
    },
}

#[derive(Subcommand)]
enum GenCmd {
    /// Petri net with 0/1 arcs -> model whose coverability matches.
    Pn2qdas {
        /// Net file (net text format).
        net: PathBuf,
        /// Also print the cover target encoding this marking, e.g. "p=2".
        #[arg(long)]
        marking: Option<String>,
    },
    /// FIFO channel system -> model reaching a goal control state.
    Fifo2qdas {
        /// Channel system file.
        fifo: PathBuf,
        /// Goal control state name.
        #[arg(long)]
        goal: String,
    },
    /// Two-counter machine -> model reaching a goal control state.
    #[command(name = "2cs2qdas")]
    Cs2qdas {
        /// Counter machine file.
        cs: PathBuf,
        /// Goal control state name.
        #[arg(long)]
        goal: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TranslateTo {
    /// Petri net (exact for asynchronous concurrent models, fork-aware
    /// abstraction for extended ones).
    Pn,
    /// Pushdown system (synchronous models only).
    Pds,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Route by the model's class.
    Auto,
    /// Always use the bounded explorer (semi-decision).
    ForceBounded,
    /// Require a decision procedure; error out if the class has none.
    ForceDecision,
}

#[derive(Args)]
struct Knobs {
    /// Routing mode.
    #[arg(long, value_enum, default_value_t = Mode::Auto)]
    mode: Mode,
    /// Bounded exploration: maximum distinct configurations.
    #[arg(long, default_value_t = 100_000)]
    max_configs: usize,
    /// Bounded exploration: maximum vertices per configuration.
    #[arg(long, default_value_t = 64)]
    max_vertices: usize,
    /// Worker threads for the explorer (output is thread-count
    /// independent).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Unbounded forks expand to 0..=N children per step.
    #[arg(long, default_value_t = 2)]
    star_bound: u32,
    /// Fuse synchronous dispatch with the matching dequeue.
    #[arg(long)]
    atomic_sync: bool,
    /// Emit a JSON report instead of text.
    #[arg(long)]
    json: bool,
}

impl Knobs {
    fn limits(&self) -> Limits {
        Limits {
            max_configs: self.max_configs,
            max_vertices: self.max_vertices,
        }
    }

    fn opts(&self) -> SemanticsOpts {
        SemanticsOpts {
            atomic_sync: self.atomic_sync,
            star_bound: self.star_bound,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems are input errors (3); --help/--version are
            // not errors at all.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Classify { model, json } => {
            let m = load_model(&model)?;
            let tags = m.classify();
            let dec = m.decidability();
            if json {
                println!(
                    "{}",
                    json!({
                        "model": m.name,
                        "class": tags.to_string(),
                        "cover": dec.cover.label(),
                        "termination": dec.termination.label(),
                    })
                );
            } else {
                println!("model: {}", m.name);
                println!("class: {tags}");
                println!("cover: {}", dec.cover.label());
                println!("termination: {}", dec.termination.label());
            }
            Ok(0)
        }
        Cmd::CheckCover {
            model,
            target,
            knobs,
        } => {
            let m = load_model(&model)?;
            let f = parse_target(&m, &target).map_err(|e| anyhow!("bad --target: {e}"))?;
            let started = Instant::now();
            let report = check_cover(&m, &f, &target, &knobs)?;
            eprintln!("timing: {} ms", started.elapsed().as_millis());
            Ok(report.emit(&knobs)?)
        }
        Cmd::CheckTerm { model, knobs } => {
            let m = load_model(&model)?;
            let started = Instant::now();
            let report = check_term(&m, &knobs)?;
            eprintln!("timing: {} ms", started.elapsed().as_millis());
            Ok(report.emit(&knobs)?)
        }
        Cmd::Explore { model, knobs } => {
            let m = load_model(&model)?;
            let started = Instant::now();
            let (_, stats) =
                explore::explore_all(&m, &knobs.opts(), &knobs.limits(), knobs.threads);
            eprintln!("timing: {} ms", started.elapsed().as_millis());
            if knobs.json {
                println!(
                    "{}",
                    json!({
                        "model": m.name,
                        "visited": stats.visited,
                        "depth": stats.depth,
                        "frontier_peak": stats.frontier_peak,
                        "truncated": stats.truncated,
                        "complete": stats.complete,
                    })
                );
            } else {
                println!("model: {}", m.name);
                println!("visited: {}", stats.visited);
                println!("depth: {}", stats.depth);
                println!("frontier peak: {}", stats.frontier_peak);
                println!("truncated: {}", stats.truncated);
                println!("complete: {}", stats.complete);
            }
            Ok(0)
        }
        Cmd::Simulate {
            model,
            seed,
            steps,
            star_bound,
            atomic_sync,
        } => {
            let m = load_model(&model)?;
            let opts = SemanticsOpts {
                atomic_sync,
                star_bound,
            };
            let walk = explore::random_walk(&m, seed, steps, &opts);
            for (i, (desc, _)) in walk.iter().enumerate() {
                println!("{:3}. {desc}", i + 1);
            }
            println!("walk ended after {} steps", walk.len());
            Ok(0)
        }
        Cmd::Translate { model, to } => {
            let m = load_model(&model)?;
            match to {
                TranslateTo::Pn => {
                    let net = model_to_net(&m)?;
                    print!("{}", print_net(&net));
                }
                TranslateTo::Pds => {
                    let pds = build_pds(&m)?;
                    print_pds(&m, &pds);
                }
            }
            Ok(0)
        }
        Cmd::Gen { what } => run_gen(what),
    }
}

fn load_model(path: &Path) -> Result<Qdas> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let m = parse_model(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let errors = m.validate();
    if !errors.is_empty() {
        let lines: Vec<String> = errors.iter().map(|e| format!("  {e}")).collect();
        bail!("{} is not a valid model:\n{}", path.display(), lines.join("\n"));
    }
    Ok(m)
}

fn run_gen(what: GenCmd) -> Result<u8> {
    match what {
        GenCmd::Pn2qdas { net, marking } => {
            let text = std::fs::read_to_string(&net)
                .with_context(|| format!("reading {}", net.display()))?;
            let n = parse_net(&text).map_err(|e| anyhow!("{}: {e}", net.display()))?;
            let (m, enc) = translate::pn_to_qdas(&n).map_err(|e| anyhow!(e))?;
            print!("{}", print_model(&m));
            if let Some(src) = marking {
                let mk = n.parse_marking(&src).map_err(|e| anyhow!("bad --marking: {e}"))?;
                println!("// cover target for {}:", n.display_marking(&mk));
                println!("//   {}", enc.cover_target(&mk).display(&m));
            }
            Ok(0)
        }
        GenCmd::Fifo2qdas { fifo, goal } => {
            let text = std::fs::read_to_string(&fifo)
                .with_context(|| format!("reading {}", fifo.display()))?;
            let f = translate::parse_fifo(&text).map_err(|e| anyhow!("{}: {e}", fifo.display()))?;
            let g = f
                .states
                .iter()
                .position(|s| *s == goal)
                .ok_or_else(|| anyhow!("unknown goal state `{goal}`"))?;
            let (m, targets) = translate::fifo_to_qdas(&f, g);
            print!("{}", print_model(&m));
            println!("// goal `{goal}` is reached iff some target below is coverable:");
            for t in &targets {
                println!("//   {}", t.display(&m));
            }
            Ok(0)
        }
        GenCmd::Cs2qdas { cs, goal } => {
            let text = std::fs::read_to_string(&cs)
                .with_context(|| format!("reading {}", cs.display()))?;
            let c = translate::parse_2cs(&text).map_err(|e| anyhow!("{}: {e}", cs.display()))?;
            let g = c
                .states
                .iter()
                .position(|s| *s == goal)
                .ok_or_else(|| anyhow!("unknown goal state `{goal}`"))?;
            let (m, target) = translate::two_counter_to_qdas(&c, g);
            print!("{}", print_model(&m));
            println!("// goal `{goal}` is reached iff this target is coverable:");
            println!("//   {}", target.display(&m));
            Ok(0)
        }
    }
}

// ---------------------------------------------------------------------
// Routing.

/// Which procedure answers a query, per the model's class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Route {
    /// Synchronous models: pushdown system, exact.
    Pushdown,
    /// Asynchronous concurrent models: Petri net, exact.
    PetriExact,
    /// Extended models without unbounded forks: fork-aware net,
    /// conclusive in the safe direction only.
    PetriTimes,
    /// Extended models with unbounded forks: omega net, conclusive in
    /// the safe direction only.
    PetriStar,
    /// Everything else: bounded exploration, a semi-decision.
    Explorer,
}

impl Route {
    fn name(self) -> &'static str {
        match self {
            Route::Pushdown => "pushdown system (exact)",
            Route::PetriExact => "Petri net (exact)",
            Route::PetriTimes => "Petri net abstraction (bounded forks)",
            Route::PetriStar => "Petri net abstraction (unbounded forks)",
            Route::Explorer => "bounded exploration (semi-decision only)",
        }
    }
}

fn auto_route(m: &Qdas) -> Route {
    let tags = m.classify();
    if m.extended {
        if translate::has_star(m) {
            Route::PetriStar
        } else {
            Route::PetriTimes
        }
    } else if tags.is_synchronous() {
        Route::Pushdown
    } else if tags.is_asynchronous() && tags.queues == QueueClass::Concurrent {
        Route::PetriExact
    } else {
        Route::Explorer
    }
}

fn pick_route(m: &Qdas, knobs: &Knobs) -> Result<Route> {
    let auto = auto_route(m);
    match knobs.mode {
        Mode::Auto => Ok(auto),
        Mode::ForceBounded => Ok(Route::Explorer),
        Mode::ForceDecision => {
            if auto == Route::Explorer {
                bail!(
                    "no decision procedure applies: the model is {} and both problems are \
                     undecidable for that class; rerun with --mode auto or --mode force-bounded",
                    m.classify()
                );
            }
            Ok(auto)
        }
    }
}

fn model_to_net(m: &Qdas) -> Result<Net> {
    if m.extended {
        if translate::has_star(m) {
            translate::eqdas_to_pn_star(m).map_err(|e| anyhow!(e))
        } else {
            translate::eqdas_to_pn_times(m).map_err(|e| anyhow!(e))
        }
    } else {
        translate::qdas_to_pn(m).map_err(|e| {
            anyhow!("{e}; only asynchronous concurrent or extended models translate to nets")
        })
    }
}

fn build_pds(m: &Qdas) -> Result<Pds> {
    if !m.classify().is_synchronous() {
        bail!(
            "the pushdown translation needs a synchronous model; this one is {}",
            m.classify()
        );
    }
    let data = pds::from_sync_qdas(m).map_err(|e| anyhow!(e))?;
    Ok(data.expand_data(m))
}

fn print_pds(m: &Qdas, p: &Pds) {
    println!("pds {}", m.name);
    println!("controls: {}", p.controls.len());
    println!("symbols: {}", p.symbols.len());
    println!("initial: {}", p.control_name(m, p.init));
    println!("rules:");
    for r in &p.rules {
        println!("  {}", p.rule_desc(m, r));
    }
}

// ---------------------------------------------------------------------
// Reports.

/// Verdict plus witness, ready to print in text or JSON.
struct Report {
    model: String,
    class: String,
    route: Route,
    problem: &'static str,
    target: Option<String>,
    verdict: &'static str,
    exit: u8,
    notes: Vec<String>,
    witness: Vec<(String, Vec<String>)>,
}

impl Report {
    fn new(m: &Qdas, route: Route, problem: &'static str) -> Report {
        Report {
            model: m.name.clone(),
            class: m.classify().to_string(),
            route,
            problem,
            target: None,
            verdict: "unknown",
            exit: 2,
            notes: Vec::new(),
            witness: Vec::new(),
        }
    }

    fn emit(self, knobs: &Knobs) -> Result<u8> {
        if knobs.json {
            let witness: serde_json::Map<String, serde_json::Value> = self
                .witness
                .iter()
                .map(|(k, v)| (k.clone(), json!(v)))
                .collect();
            println!(
                "{}",
                json!({
                    "model": self.model,
                    "class": self.class,
                    "route": self.route.name(),
                    "problem": self.problem,
                    "target": self.target,
                    "verdict": self.verdict,
                    "notes": self.notes,
                    "witness": witness,
                    "exit": self.exit,
                })
            );
        } else {
            println!("model: {}", self.model);
            println!("class: {}", self.class);
            println!("route: {}", self.route.name());
            if let Some(t) = &self.target {
                println!("target: {t}");
            }
            println!("problem: {}", self.problem);
            println!("verdict: {}", self.verdict);
            for n in &self.notes {
                println!("note: {n}");
            }
            for (label, lines) in &self.witness {
                println!("{label}:");
                for (i, l) in lines.iter().enumerate() {
                    println!("  {:3}. {l}", i + 1);
                }
            }
        }
        Ok(self.exit)
    }
}

fn check_cover(m: &Qdas, f: &ParikhImage, target_src: &str, knobs: &Knobs) -> Result<Report> {
    let route = pick_route(m, knobs)?;
    let mut r = Report::new(m, route, "cover");
    r.target = Some(target_src.trim().to_string());
    match route {
        Route::Pushdown => {
            // Auto-routing must never leave the procedure's subclass.
            assert!(m.classify().is_synchronous());
            let pds = build_pds(m)?;
            match pds::check_parikh_cover_sync(&pds, f) {
                SyncCover::Coverable { control, stack } => {
                    r.verdict = "coverable";
                    r.exit = 1;
                    let mut lines = vec![format!("control: {}", pds.control_name(m, control))];
                    let syms: Vec<String> = stack
                        .iter()
                        .map(|&s| pds.symbol_name(m, s))
                        .collect();
                    lines.push(format!("stack (bottom to top): [{}]", syms.join(", ")));
                    r.witness.push(("witness configuration".to_string(), lines));
                }
                SyncCover::NotCoverable => {
                    r.verdict = "not coverable";
                    r.exit = 0;
                }
            }
        }
        Route::PetriExact | Route::PetriTimes | Route::PetriStar => {
            // Auto-routing must never leave the procedure's subclass.
            assert!(
                m.extended
                    || (m.classify().is_asynchronous()
                        && m.classify().queues == QueueClass::Concurrent)
            );
            let net = model_to_net(m)?;
            let net = if net.has_omega() { net.deomegaize() } else { net };
            let marking = translate::target_marking(&net, f);
            match net.coverable(&marking).map_err(|e| anyhow!(e))? {
                PnCover::Coverable { firing } => {
                    if route == Route::PetriExact {
                        r.verdict = "coverable";
                        r.exit = 1;
                    } else {
                        r.verdict = "unknown";
                        r.exit = 2;
                        r.notes.push(
                            "the fork abstraction over-approximates; this witness may be spurious"
                                .to_string(),
                        );
                    }
                    let names: Vec<String> = firing
                        .iter()
                        .map(|&t| net.transitions[t].name.clone())
                        .collect();
                    r.witness.push(("witness (net firing sequence)".to_string(), names));
                }
                PnCover::NotCoverable => {
                    r.verdict = "not coverable";
                    r.exit = 0;
                }
            }
        }
        Route::Explorer => {
            r.notes.push(semi_banner(m));
            let (out, stats) =
                explore::check_cover_bounded(m, f, &knobs.opts(), &knobs.limits(), knobs.threads);
            match out {
                CoverOutcome::Covered { trace } => {
                    r.verdict = "coverable";
                    r.exit = 1;
                    r.witness.push(("witness trace".to_string(), trace));
                }
                CoverOutcome::NotCoverableComplete => {
                    r.verdict = "not coverable";
                    r.exit = 0;
                    r.notes.push(format!(
                        "exhausted the reachable space: {} configurations",
                        stats.visited
                    ));
                }
                CoverOutcome::Inconclusive => {
                    r.verdict = "unknown";
                    r.exit = 2;
                    r.notes.push(limit_note(&stats, knobs));
                }
            }
        }
    }
    Ok(r)
}

fn check_term(m: &Qdas, knobs: &Knobs) -> Result<Report> {
    let route = pick_route(m, knobs)?;
    let mut r = Report::new(m, route, "termination");
    match route {
        Route::Pushdown => {
            // Auto-routing must never leave the procedure's subclass.
            assert!(m.classify().is_synchronous());
            let pds = build_pds(m)?;
            match pds::check_termination_sync(&pds) {
                SyncTerm::Terminates => {
                    r.verdict = "terminates";
                    r.exit = 0;
                }
                SyncTerm::NonTerminating { prefix, pump } => {
                    r.verdict = "non-terminating";
                    r.exit = 1;
                    let desc = |ix: &[usize]| -> Vec<String> {
                        ix.iter().map(|&i| pds.rule_desc(m, &pds.rules[i])).collect()
                    };
                    r.witness.push(("prefix".to_string(), desc(&prefix)));
                    r.witness.push(("pump".to_string(), desc(&pump)));
                }
            }
        }
        Route::PetriExact | Route::PetriTimes | Route::PetriStar => {
            // Auto-routing must never leave the procedure's subclass.
            assert!(
                m.extended
                    || (m.classify().is_asynchronous()
                        && m.classify().queues == QueueClass::Concurrent)
            );
            let net = model_to_net(m)?;
            match net.terminates() {
                PnTermination::Terminates { conclusive } => {
                    if conclusive {
                        r.verdict = "terminates";
                        r.exit = 0;
                    } else {
                        r.verdict = "unknown";
                        r.exit = 2;
                        r.notes.push(
                            "unbounded forks were instantiated with finite bounds; no pump was \
                             found but that is not conclusive"
                                .to_string(),
                        );
                    }
                }
                PnTermination::NonTerminating { prefix, pump, .. } => {
                    if route == Route::PetriExact {
                        r.verdict = "non-terminating";
                        r.exit = 1;
                    } else {
                        r.verdict = "unknown";
                        r.exit = 2;
                        r.notes.push(
                            "the fork abstraction over-approximates; this pump may be spurious"
                                .to_string(),
                        );
                    }
                    let names = |ix: &[usize]| -> Vec<String> {
                        ix.iter().map(|&t| net.transitions[t].name.clone()).collect()
                    };
                    r.witness.push(("prefix".to_string(), names(&prefix)));
                    r.witness.push(("pump".to_string(), names(&pump)));
                }
            }
        }
        Route::Explorer => {
            r.notes.push(semi_banner(m));
            let (out, stats) = explore::check_termination_bounded(m, &knobs.opts(), &knobs.limits());
            match out {
                TermOutcome::NonTerminating { prefix, cycle } => {
                    r.verdict = "non-terminating";
                    r.exit = 1;
                    r.witness.push(("prefix".to_string(), prefix));
                    r.witness.push(("cycle".to_string(), cycle));
                }
                TermOutcome::TerminatesComplete => {
                    r.verdict = "terminates";
                    r.exit = 0;
                    r.notes.push(format!(
                        "exhausted the reachable space: {} configurations",
                        stats.visited
                    ));
                }
                TermOutcome::Inconclusive => {
                    r.verdict = "unknown";
                    r.exit = 2;
                    r.notes.push(limit_note(&stats, knobs));
                }
            }
        }
    }
    Ok(r)
}

fn semi_banner(m: &Qdas) -> String {
    let dec = m.decidability();
    format!(
        "semi-decision only: this class is {} for cover and {} for termination",
        dec.cover.label(),
        dec.termination.label()
    )
}

fn limit_note(stats: &explore::Stats, knobs: &Knobs) -> String {
    format!(
        "limits hit after {} configurations (max-configs {}, max-vertices {}); raise the bounds \
         for a stronger verdict",
        stats.visited, knobs.max_configs, knobs.max_vertices
    )
}
