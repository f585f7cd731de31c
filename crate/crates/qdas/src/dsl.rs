//! Textual model format: parser and printer.
//!
//! ```text
//! qdas fig1 {                      // or `eqdas` for extended models
//!   domain { 0, 1 }                // first value initializes every variable
//!   vars { count }
//!   cqueue workqueue;              // concurrent queue
//!   squeue semaphore;              // serial queue
//!   block main {
//!     states m0, m1, f;
//!     init m0;
//!     final f;
//!     m0 -> m1 : dispatch_a(workqueue, one_cell);
//!     m1 -> m1 : count != 1;       // guards are &&-conjunctions; `true` is empty
//!     m1 -> f  : count == 1;
//!   }
//! }
//! ```
//!
//! Actions: `dispatch_a(q, b)`, `dispatch_s(q, b)`, `forkjoin(q, b, n)` with
//! `n` a number or `*`, assignments `x <- v`, and guards. Names are words
//! over `[A-Za-z0-9_]`. `//` starts a comment. A block named `main` is
//! required; the queue name `iota` is reserved for the main task.

use crate::model::{
    Action, Block, ForkCount, Guard, GuardAtom, ParikhImage, Qdas, QueueDecl, QueueKind,
};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

/// Parse failure, with 1-based source position.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub msg: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Tok<'a> {
    Name(&'a str),
    Sym(&'a str),
    Eof,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Spanned<'a> {
    pub(crate) tok: Tok<'a>,
    pub(crate) line: u32,
    pub(crate) col: u32,
}

pub(crate) fn lex(src: &str) -> Result<Vec<Spanned<'_>>, ParseError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;
    let is_name = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
    while i < bytes.len() {
        let b = bytes[i];
        if b == b'\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if b.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if b == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let (tline, tcol) = (line, col);
        if is_name(b) {
            let start = i;
            while i < bytes.len() && is_name(bytes[i]) {
                i += 1;
                col += 1;
            }
            out.push(Spanned {
                tok: Tok::Name(&src[start..i]),
                line: tline,
                col: tcol,
            });
            continue;
        }
        let two = if i + 1 < bytes.len() { &src[i..i + 2] } else { "" };
        let sym = match two {
            "->" | "<-" | "==" | "!=" | "&&" => two,
            _ => match b {
                b'{' | b'}' | b'(' | b')' | b',' | b';' | b':' | b'*' | b'!' | b'?' => {
                    &src[i..i + 1]
                }
                _ => {
                    return Err(ParseError {
                        line,
                        col,
                        msg: format!("unexpected character `{}`", b as char),
                    })
                }
            },
        };
        i += sym.len();
        col += sym.len() as u32;
        out.push(Spanned {
            tok: Tok::Sym(sym),
            line: tline,
            col: tcol,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

pub(crate) struct Parser<'a> {
    toks: Vec<Spanned<'a>>,
    pos: usize,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(toks: Vec<Spanned<'a>>) -> Self {
        Parser { toks, pos: 0 }
    }

    pub(crate) fn peek(&self) -> Spanned<'a> {
        self.toks[self.pos]
    }

    pub(crate) fn bump(&mut self) -> Spanned<'a> {
        let t = self.toks[self.pos];
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn err<T>(&self, at: Spanned<'a>, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            line: at.line,
            col: at.col,
            msg: msg.into(),
        })
    }

    pub(crate) fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        let t = self.bump();
        if t.tok == Tok::Sym(s) {
            Ok(())
        } else {
            self.err(t, format!("expected `{s}`, found {}", describe(t.tok)))
        }
    }

    pub(crate) fn expect_name(&mut self, what: &str) -> Result<(&'a str, Spanned<'a>), ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Name(n) => Ok((n, t)),
            other => self.err(t, format!("expected {what}, found {}", describe(other))),
        }
    }

    pub(crate) fn eat_sym(&mut self, s: &str) -> bool {
        if self.peek().tok == Tok::Sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Comma-separated names inside braces; the list may be empty.
    pub(crate) fn name_list_braced(&mut self) -> Result<Vec<(&'a str, Spanned<'a>)>, ParseError> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        if self.eat_sym("}") {
            return Ok(out);
        }
        loop {
            out.push(self.expect_name("a name")?);
            if self.eat_sym("}") {
                return Ok(out);
            }
            self.expect_sym(",")?;
        }
    }
}

fn describe(t: Tok<'_>) -> String {
    match t {
        Tok::Name(n) => format!("`{n}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".to_string(),
    }
}

#[derive(Debug)]
enum RawAction<'a> {
    Dispatch {
        sync: bool,
        queue: (&'a str, Spanned<'a>),
        block: (&'a str, Spanned<'a>),
    },
    ForkJoin {
        queue: (&'a str, Spanned<'a>),
        block: (&'a str, Spanned<'a>),
        count: ForkCount,
    },
    Assign {
        var: (&'a str, Spanned<'a>),
        val: (&'a str, Spanned<'a>),
    },
    Test(Vec<RawAtom<'a>>),
}

#[derive(Debug)]
struct RawAtom<'a> {
    var: (&'a str, Spanned<'a>),
    positive: bool,
    val: (&'a str, Spanned<'a>),
}

#[derive(Debug)]
struct RawTransition<'a> {
    from: (&'a str, Spanned<'a>),
    to: (&'a str, Spanned<'a>),
    action: RawAction<'a>,
}

#[derive(Debug)]
struct RawBlock<'a> {
    name: &'a str,
    span: Spanned<'a>,
    states: Vec<(&'a str, Spanned<'a>)>,
    init: Option<(&'a str, Spanned<'a>)>,
    fin: Option<(&'a str, Spanned<'a>)>,
    transitions: Vec<RawTransition<'a>>,
}

/// Parse a model from source text.
pub fn parse_model(src: &str) -> Result<Qdas, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let (kw, kw_span) = p.expect_name("`qdas` or `eqdas`")?;
    let extended = match kw {
        "qdas" => false,
        "eqdas" => true,
        _ => return p.err(kw_span, "expected `qdas` or `eqdas`"),
    };
    let (model_name, _) = p.expect_name("a model name")?;
    p.expect_sym("{")?;

    let mut domain: Option<Vec<(&str, Spanned)>> = None;
    let mut vars: Option<Vec<(&str, Spanned)>> = None;
    let mut queues: Vec<(QueueKind, &str, Spanned)> = Vec::new();
    let mut raw_blocks: Vec<RawBlock> = Vec::new();

    loop {
        if p.eat_sym("}") {
            break;
        }
        let (section, span) = p.expect_name("a section (`domain`, `vars`, `cqueue`, `squeue`, `block`)")?;
        match section {
            "domain" => {
                if domain.is_some() {
                    return p.err(span, "duplicate `domain` section");
                }
                domain = Some(p.name_list_braced()?);
            }
            "vars" => {
                if vars.is_some() {
                    return p.err(span, "duplicate `vars` section");
                }
                vars = Some(p.name_list_braced()?);
            }
            "cqueue" | "squeue" => {
                let kind = if section == "cqueue" {
                    QueueKind::Concurrent
                } else {
                    QueueKind::Serial
                };
                let (name, nspan) = p.expect_name("a queue name")?;
                p.expect_sym(";")?;
                queues.push((kind, name, nspan));
            }
            "block" => {
                let (name, nspan) = p.expect_name("a block name")?;
                raw_blocks.push(parse_block(&mut p, name, nspan)?);
            }
            other => {
                return p.err(span, format!("unknown section `{other}`"));
            }
        }
    }
    let t = p.peek();
    if t.tok != Tok::Eof {
        return p.err(t, format!("trailing input: {}", describe(t.tok)));
    }

    resolve(
        model_name,
        extended,
        domain.unwrap_or_default(),
        vars.unwrap_or_default(),
        queues,
        raw_blocks,
    )
}

fn parse_block<'a>(
    p: &mut Parser<'a>,
    name: &'a str,
    span: Spanned<'a>,
) -> Result<RawBlock<'a>, ParseError> {
    p.expect_sym("{")?;
    let mut b = RawBlock {
        name,
        span,
        states: Vec::new(),
        init: None,
        fin: None,
        transitions: Vec::new(),
    };
    loop {
        if p.eat_sym("}") {
            return Ok(b);
        }
        let (word, wspan) = p.expect_name("a block item (`states`, `init`, `final`, or a transition)")?;
        match word {
            "states" => loop {
                b.states.push(p.expect_name("a state name")?);
                if p.eat_sym(";") {
                    break;
                }
                p.expect_sym(",")?;
            },
            "init" => {
                if b.init.is_some() {
                    return p.err(wspan, "duplicate `init`");
                }
                b.init = Some(p.expect_name("a state name")?);
                p.expect_sym(";")?;
            }
            "final" => {
                if b.fin.is_some() {
                    return p.err(wspan, "duplicate `final`");
                }
                b.fin = Some(p.expect_name("a state name")?);
                p.expect_sym(";")?;
            }
            from => {
                p.expect_sym("->")?;
                let to = p.expect_name("a state name")?;
                p.expect_sym(":")?;
                let action = parse_action(p)?;
                p.expect_sym(";")?;
                b.transitions.push(RawTransition {
                    from: (from, wspan),
                    to,
                    action,
                });
            }
        }
    }
}

fn parse_action<'a>(p: &mut Parser<'a>) -> Result<RawAction<'a>, ParseError> {
    let (head, hspan) = p.expect_name("an action")?;
    match head {
        "dispatch_a" | "dispatch_s" => {
            p.expect_sym("(")?;
            let queue = p.expect_name("a queue name")?;
            p.expect_sym(",")?;
            let block = p.expect_name("a block name")?;
            p.expect_sym(")")?;
            Ok(RawAction::Dispatch {
                sync: head == "dispatch_s",
                queue,
                block,
            })
        }
        "forkjoin" => {
            p.expect_sym("(")?;
            let queue = p.expect_name("a queue name")?;
            p.expect_sym(",")?;
            let block = p.expect_name("a block name")?;
            p.expect_sym(",")?;
            let count = if p.eat_sym("*") {
                ForkCount::Star
            } else {
                let (n, nspan) = p.expect_name("a count or `*`")?;
                match n.parse::<u32>() {
                    Ok(k) => ForkCount::Finite(k),
                    Err(_) => return p.err(nspan, format!("invalid fork count `{n}`")),
                }
            };
            p.expect_sym(")")?;
            Ok(RawAction::ForkJoin {
                queue,
                block,
                count,
            })
        }
        "true" if !matches!(p.peek().tok, Tok::Sym("==") | Tok::Sym("!=") | Tok::Sym("<-")) => {
            Ok(RawAction::Test(Vec::new()))
        }
        _ => {
            // Assignment or guard conjunction, both starting with a variable name.
            let var = (head, hspan);
            let op = p.bump();
            match op.tok {
                Tok::Sym("<-") => {
                    let val = p.expect_name("a domain value")?;
                    Ok(RawAction::Assign { var, val })
                }
                Tok::Sym(cmp @ ("==" | "!=")) => {
                    let mut atoms = vec![RawAtom {
                        var,
                        positive: cmp == "==",
                        val: p.expect_name("a domain value")?,
                    }];
                    while p.eat_sym("&&") {
                        let var = p.expect_name("a variable name")?;
                        let op = p.bump();
                        let positive = match op.tok {
                            Tok::Sym("==") => true,
                            Tok::Sym("!=") => false,
                            other => {
                                return p.err(op, format!("expected `==` or `!=`, found {}", describe(other)))
                            }
                        };
                        let val = p.expect_name("a domain value")?;
                        atoms.push(RawAtom {
                            var,
                            positive,
                            val,
                        });
                    }
                    Ok(RawAction::Test(atoms))
                }
                other => p.err(
                    op,
                    format!("expected `<-`, `==` or `!=` after `{head}`, found {}", describe(other)),
                ),
            }
        }
    }
}

fn resolve(
    model_name: &str,
    extended: bool,
    domain: Vec<(&str, Spanned)>,
    vars: Vec<(&str, Spanned)>,
    queues: Vec<(QueueKind, &str, Spanned)>,
    raw_blocks: Vec<RawBlock>,
) -> Result<Qdas, ParseError> {
    let fail = |s: Spanned, msg: String| -> ParseError {
        ParseError {
            line: s.line,
            col: s.col,
            msg,
        }
    };
    let val_ids: BTreeMap<&str, usize> = domain
        .iter()
        .enumerate()
        .map(|(i, (n, _))| (*n, i))
        .collect();
    let var_ids: BTreeMap<&str, usize> = vars
        .iter()
        .enumerate()
        .map(|(i, (n, _))| (*n, i))
        .collect();
    let queue_ids: BTreeMap<&str, usize> = queues
        .iter()
        .enumerate()
        .map(|(i, (_, n, _))| (*n, i))
        .collect();
    let block_ids: BTreeMap<&str, usize> = raw_blocks
        .iter()
        .enumerate()
        .map(|(i, b)| (b.name, i))
        .collect();

    let mut states: Vec<(usize, String)> = Vec::new();
    let mut state_ids: Vec<BTreeMap<&str, usize>> = Vec::new();
    for (bi, rb) in raw_blocks.iter().enumerate() {
        let mut ids = BTreeMap::new();
        for (name, span) in &rb.states {
            if ids.contains_key(name) {
                return Err(fail(*span, format!("duplicate state `{name}` in block `{}`", rb.name)));
            }
            ids.insert(*name, states.len());
            states.push((bi, name.to_string()));
        }
        state_ids.push(ids);
    }

    let mut blocks = Vec::new();
    for (bi, rb) in raw_blocks.iter().enumerate() {
        let lookup_state = |pair: &(&str, Spanned)| -> Result<usize, ParseError> {
            state_ids[bi].get(pair.0).copied().ok_or_else(|| {
                fail(
                    pair.1,
                    format!("unknown state `{}` in block `{}`", pair.0, rb.name),
                )
            })
        };
        let init = rb
            .init
            .as_ref()
            .ok_or_else(|| fail(rb.span, format!("block `{}` has no `init`", rb.name)))?;
        let fin = rb
            .fin
            .as_ref()
            .ok_or_else(|| fail(rb.span, format!("block `{}` has no `final`", rb.name)))?;
        let mut transitions = Vec::new();
        for rt in &rb.transitions {
            let lookup_queue = |pair: &(&str, Spanned)| -> Result<usize, ParseError> {
                queue_ids
                    .get(pair.0)
                    .copied()
                    .ok_or_else(|| fail(pair.1, format!("unknown queue `{}`", pair.0)))
            };
            let lookup_block = |pair: &(&str, Spanned)| -> Result<usize, ParseError> {
                block_ids
                    .get(pair.0)
                    .copied()
                    .ok_or_else(|| fail(pair.1, format!("unknown block `{}`", pair.0)))
            };
            let lookup_var = |pair: &(&str, Spanned)| -> Result<usize, ParseError> {
                var_ids
                    .get(pair.0)
                    .copied()
                    .ok_or_else(|| fail(pair.1, format!("unknown variable `{}`", pair.0)))
            };
            let lookup_val = |pair: &(&str, Spanned)| -> Result<usize, ParseError> {
                val_ids
                    .get(pair.0)
                    .copied()
                    .ok_or_else(|| fail(pair.1, format!("unknown domain value `{}`", pair.0)))
            };
            let action = match &rt.action {
                RawAction::Dispatch { sync, queue, block } => {
                    let q = lookup_queue(queue)?;
                    let b = lookup_block(block)?;
                    if *sync {
                        Action::DispatchS { queue: q, block: b }
                    } else {
                        Action::DispatchA { queue: q, block: b }
                    }
                }
                RawAction::ForkJoin {
                    queue,
                    block,
                    count,
                } => Action::ForkJoin {
                    queue: lookup_queue(queue)?,
                    block: lookup_block(block)?,
                    count: *count,
                },
                RawAction::Assign { var, val } => Action::Assign {
                    var: lookup_var(var)?,
                    val: lookup_val(val)?,
                },
                RawAction::Test(atoms) => {
                    let mut g = Vec::new();
                    for a in atoms {
                        g.push(GuardAtom {
                            var: lookup_var(&a.var)?,
                            positive: a.positive,
                            val: lookup_val(&a.val)?,
                        });
                    }
                    Action::Test(Guard(g))
                }
            };
            transitions.push(crate::model::Transition {
                from: lookup_state(&rt.from)?,
                action,
                to: lookup_state(&rt.to)?,
            });
        }
        blocks.push(Block {
            name: rb.name.to_string(),
            states: state_ids[bi].values().copied().collect::<Vec<_>>(),
            init: lookup_state(init)?,
            fin: lookup_state(fin)?,
            transitions,
        });
    }
    // Keep declaration order for per-block state lists.
    for (bi, rb) in raw_blocks.iter().enumerate() {
        blocks[bi].states = rb
            .states
            .iter()
            .map(|(n, _)| state_ids[bi][n])
            .collect();
    }

    Ok(Qdas::new(
        model_name.to_string(),
        extended,
        domain.into_iter().map(|(n, _)| n.to_string()).collect(),
        vars.into_iter().map(|(n, _)| n.to_string()).collect(),
        queues
            .into_iter()
            .map(|(kind, n, _)| QueueDecl {
                name: n.to_string(),
                kind,
            })
            .collect(),
        blocks,
        states,
    ))
}

/// Render a model in the canonical source layout. `parse_model` of the
/// result reproduces the model.
pub fn print_model(m: &Qdas) -> String {
    let mut s = String::new();
    let kw = if m.extended { "eqdas" } else { "qdas" };
    let _ = writeln!(s, "{kw} {} {{", m.name);
    let _ = writeln!(s, "  domain {{ {} }}", m.domain.join(", "));
    let _ = writeln!(s, "  vars {{ {} }}", m.vars.join(", "));
    for q in &m.queues {
        let kw = match q.kind {
            QueueKind::Concurrent => "cqueue",
            QueueKind::Serial => "squeue",
        };
        let _ = writeln!(s, "  {kw} {};", q.name);
    }
    for b in &m.blocks {
        let _ = writeln!(s, "  block {} {{", b.name);
        let names: Vec<&str> = b.states.iter().map(|&st| m.state_name(st)).collect();
        let _ = writeln!(s, "    states {};", names.join(", "));
        let _ = writeln!(s, "    init {};", m.state_name(b.init));
        let _ = writeln!(s, "    final {};", m.state_name(b.fin));
        for t in &b.transitions {
            let _ = writeln!(
                s,
                "    {} -> {} : {};",
                m.state_name(t.from),
                m.state_name(t.to),
                print_action(m, &t.action)
            );
        }
        let _ = writeln!(s, "  }}");
    }
    s.push_str("}\n");
    s
}

/// Render an action in source syntax.
pub fn print_action(m: &Qdas, a: &Action) -> String {
    match a {
        Action::DispatchA { queue, block } => {
            format!("dispatch_a({}, {})", m.queues[*queue].name, m.blocks[*block].name)
        }
        Action::DispatchS { queue, block } => {
            format!("dispatch_s({}, {})", m.queues[*queue].name, m.blocks[*block].name)
        }
        Action::ForkJoin {
            queue,
            block,
            count,
        } => {
            let c = match count {
                ForkCount::Finite(n) => n.to_string(),
                ForkCount::Star => "*".to_string(),
            };
            format!("forkjoin({}, {}, {c})", m.queues[*queue].name, m.blocks[*block].name)
        }
        Action::Test(g) if g.0.is_empty() => "true".to_string(),
        Action::Test(g) => g
            .0
            .iter()
            .map(|at| {
                format!(
                    "{} {} {}",
                    m.vars[at.var],
                    if at.positive { "==" } else { "!=" },
                    m.domain[at.val]
                )
            })
            .collect::<Vec<_>>()
            .join(" && "),
        Action::Assign { var, val } => format!("{} <- {}", m.vars[*var], m.domain[*val]),
    }
}

/// Parse a cover target of the form `block.state=N, block.state=N, ...`
/// against a model. Unmentioned states are zero.
pub fn parse_target(m: &Qdas, src: &str) -> Result<ParikhImage, String> {
    let mut img = ParikhImage::default();
    for part in src.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (name, count) = match part.split_once('=') {
            Some((n, c)) => (n.trim(), c.trim()),
            None => (part, "1"),
        };
        let (block, state) = name
            .split_once('.')
            .ok_or_else(|| format!("target `{part}`: expected `block.state=count`"))?;
        let b = m
            .block_by_name(block.trim())
            .ok_or_else(|| format!("target `{part}`: unknown block `{block}`"))?;
        let s = m
            .state_by_name(b, state.trim())
            .ok_or_else(|| format!("target `{part}`: unknown state `{state}` in block `{block}`"))?;
        let n: u64 = count
            .parse()
            .map_err(|_| format!("target `{part}`: invalid count `{count}`"))?;
        img.add(s, n);
    }
    if img.is_empty() {
        return Err("empty cover target".to_string());
    }
    Ok(img)
}
