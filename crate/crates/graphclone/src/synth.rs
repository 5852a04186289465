//! Seeded generator of Java-like methods and labeled clone corpora.
//!
//! A method is a small statement tree. Type-1 clones re-render the same tree
//! with another layout (indentation, brace placement, comments, blank
//! lines); Type-2 clones rename every identifier and change literal values.
//! Near-duplicate negatives keep the tree shape, and therefore every keyword
//! and brace count, but flip operators and callees so they compute something
//! else.

use std::path::Path;

use anyhow::{Context, Result};
use graphclone_core::eval::{CloneType, LabeledPair};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::write_file;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Int,
    Long,
    Double,
    Short,
    Byte,
    Float,
    Boolean,
    Char,
    Str,
    Obj,
    Void,
}

impl Ty {
    fn name(self) -> &'static str {
        match self {
            Ty::Int => "int",
            Ty::Long => "long",
            Ty::Double => "double",
            Ty::Short => "short",
            Ty::Byte => "byte",
            Ty::Float => "float",
            Ty::Boolean => "boolean",
            Ty::Char => "char",
            Ty::Str => "String",
            Ty::Obj => "Object",
            Ty::Void => "void",
        }
    }
}

/// Statement kinds, in the order of [`Archetype::weights`].
const KINDS: usize = 17;
const K_DECL: usize = 0;
const K_ASSIGN: usize = 1;
const K_INCR: usize = 2;
const K_IF: usize = 3;
const K_FOR: usize = 4;
const K_WHILE: usize = 5;
const K_DO: usize = 6;
const K_SWITCH: usize = 7;
const K_TRY: usize = 8;
const K_SYNC: usize = 9;
// 10 is a helper call, also the fallback for kinds that do not fit.
const K_PRINT: usize = 11;
const K_THROW: usize = 12;
const K_BREAK: usize = 13;
const K_CONTINUE: usize = 14;
const K_FIELD: usize = 15;
const K_RETURN: usize = 16;

/// Broad method families with their own statement mix and types, so a
/// generated corpus spreads over the keyword space the way real code does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Archetype {
    Numeric,
    Text,
    Predicate,
    Object,
    Exceptional,
    Switchy,
}

impl Archetype {
    const ALL: [Archetype; 6] = [
        Archetype::Numeric,
        Archetype::Text,
        Archetype::Predicate,
        Archetype::Object,
        Archetype::Exceptional,
        Archetype::Switchy,
    ];

    fn weights(self) -> [u32; KINDS] {
        match self {
            Archetype::Numeric => [5, 4, 2, 3, 4, 1, 1, 0, 0, 0, 1, 1, 0, 1, 1, 0, 0],
            Archetype::Text => [4, 3, 1, 2, 0, 3, 1, 0, 0, 0, 3, 2, 0, 1, 0, 0, 1],
            Archetype::Predicate => [2, 1, 0, 6, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 4],
            Archetype::Object => [2, 1, 0, 1, 0, 0, 0, 0, 0, 3, 3, 1, 0, 0, 0, 5, 0],
            Archetype::Exceptional => [2, 2, 0, 1, 0, 0, 0, 0, 5, 0, 2, 1, 3, 0, 0, 0, 0],
            Archetype::Switchy => [2, 2, 1, 1, 0, 0, 0, 5, 0, 0, 1, 2, 0, 0, 0, 0, 1],
        }
    }

    fn locals(self) -> &'static [Ty] {
        match self {
            Archetype::Numeric => &[
                Ty::Int,
                Ty::Long,
                Ty::Double,
                Ty::Short,
                Ty::Byte,
                Ty::Float,
            ],
            Archetype::Text => &[Ty::Str, Ty::Char, Ty::Int],
            Archetype::Predicate => &[Ty::Boolean, Ty::Int, Ty::Obj],
            Archetype::Object => &[Ty::Obj, Ty::Str, Ty::Boolean],
            Archetype::Exceptional => &[Ty::Str, Ty::Obj, Ty::Int, Ty::Long],
            Archetype::Switchy => &[Ty::Int, Ty::Char, Ty::Str, Ty::Byte],
        }
    }

    fn returns(self) -> &'static [Ty] {
        match self {
            Archetype::Numeric => &[Ty::Int, Ty::Long, Ty::Double, Ty::Float],
            Archetype::Text => &[Ty::Str, Ty::Char],
            Archetype::Predicate => &[Ty::Boolean],
            Archetype::Object => &[Ty::Void, Ty::Obj],
            Archetype::Exceptional => &[Ty::Void, Ty::Str, Ty::Int],
            Archetype::Switchy => &[Ty::Str, Ty::Int, Ty::Void],
        }
    }
}

const API: [&str; 8] = [
    "length",
    "charAt",
    "indexOf",
    "substring",
    "append",
    "get",
    "size",
    "hashCode",
];

#[derive(Debug, Clone)]
enum Expr {
    Var(usize),
    Param(usize),
    Lit(i64),
    Text(i64),
    Bin(Box<Expr>, usize, Box<Expr>),
    Call(usize, Box<Expr>),
    Method(usize, usize, Box<Expr>),
    Ternary(Box<Cond>, Box<Expr>, Box<Expr>),
    Cast(Ty, Box<Expr>),
    Truth(Box<Cond>),
    Field(usize),
}

#[derive(Debug, Clone)]
enum Cond {
    Cmp(Expr, usize, Expr),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
    InstanceOf(Expr),
    Null(Expr),
}

#[derive(Debug, Clone)]
enum Stmt {
    Decl(Ty, usize, Expr),
    NewList(usize),
    Assign(usize, usize, Expr),
    Incr(usize),
    If(Cond, Vec<Stmt>, Option<Vec<Stmt>>),
    For(usize, Expr, Vec<Stmt>),
    While(Cond, Vec<Stmt>),
    DoWhile(Vec<Stmt>, Cond),
    Switch(usize, Vec<(i64, Vec<Stmt>)>, Vec<Stmt>),
    Try(Vec<Stmt>, Vec<Stmt>, bool),
    Sync(Vec<Stmt>),
    Call(usize, Expr),
    Print(Expr),
    Throw(i64),
    Break,
    Continue,
    SetField(usize, Expr),
    Return(Option<Expr>),
}

const ARITH: [&str; 5] = ["+", "-", "*", "/", "%"];
const COMPARE: [&str; 6] = ["<", ">", "<=", ">=", "==", "!="];
const ASSIGN: [&str; 4] = ["=", "+=", "-=", "*="];

/// A generated method before rendering.
#[derive(Debug, Clone)]
pub struct MethodTree {
    modifiers: Vec<&'static str>,
    ret: Ty,
    params: Vec<Ty>,
    throws: bool,
    body: Vec<Stmt>,
    n_vars: usize,
    n_helpers: usize,
    n_fields: usize,
}

/// Identifier spelling and literal offsets of one rendering.
#[derive(Debug, Clone)]
pub struct Names {
    pub method: String,
    pub vars: Vec<String>,
    pub params: Vec<String>,
    pub helpers: Vec<String>,
    pub fields: Vec<String>,
    pub literal_shift: i64,
    /// Rotates arithmetic and comparison operators (0 keeps them).
    pub op_shift: usize,
}

/// Layout of one rendering. None of it changes the token sequence.
#[derive(Debug, Clone, Copy)]
pub struct Style {
    pub indent: &'static str,
    pub brace_on_new_line: bool,
    pub tight_operators: bool,
    pub comments: bool,
    pub blank_lines: bool,
}

impl Style {
    pub const PLAIN: Style = Style {
        indent: "    ",
        brace_on_new_line: false,
        tight_operators: false,
        comments: false,
        blank_lines: false,
    };

    pub const REFORMATTED: Style = Style {
        indent: "\t",
        brace_on_new_line: true,
        tight_operators: true,
        comments: true,
        blank_lines: true,
    };
}

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "ra", "te", "sun", "vo", "bel", "dor", "fen", "gal", "hut", "ix", "jor",
    "kel", "mar", "nim", "or", "pel", "quo", "ris", "tam", "ul", "zed",
];

fn word(rng: &mut ChaCha8Rng, parts: usize) -> String {
    let mut s = String::new();
    for i in 0..parts {
        let syl = *SYLLABLES.choose(rng).expect("non-empty");
        if i == 0 {
            s.push_str(syl);
        } else {
            let mut c = syl.chars();
            let first = c.next().expect("non-empty").to_ascii_uppercase();
            s.push(first);
            s.push_str(c.as_str());
        }
    }
    s
}

impl Names {
    pub fn random(rng: &mut ChaCha8Rng, tree: &MethodTree) -> Names {
        let mut used = std::collections::BTreeSet::new();
        let mut fresh = |rng: &mut ChaCha8Rng, parts: usize| loop {
            let w = word(rng, parts);
            if used.insert(w.clone()) {
                return w;
            }
        };
        Names {
            method: fresh(rng, 3),
            vars: (0..tree.n_vars).map(|_| fresh(rng, 2)).collect(),
            params: (0..tree.params.len()).map(|_| fresh(rng, 2)).collect(),
            helpers: (0..tree.n_helpers()).map(|_| fresh(rng, 3)).collect(),
            fields: (0..tree.n_fields).map(|_| fresh(rng, 2)).collect(),
            literal_shift: 0,
            op_shift: 0,
        }
    }
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    arch: Archetype,
    n_vars: usize,
    n_params: usize,
    n_helpers: usize,
    n_fields: usize,
    /// Loop nesting, so `break`/`continue` only appear inside loops.
    loops: usize,
}

impl Gen<'_> {
    fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        *items.choose(self.rng).expect("non-empty")
    }

    fn len(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.random_range(lo..hi)
    }

    fn expr(&mut self, depth: usize) -> Expr {
        match self.rng.random_range(0..14) {
            0..=2 if self.n_vars > 0 => Expr::Var(self.rng.random_range(0..self.n_vars)),
            3 if self.n_params > 0 => Expr::Param(self.rng.random_range(0..self.n_params)),
            4 | 5 if depth > 0 => Expr::Bin(
                Box::new(self.expr(depth - 1)),
                self.rng.random_range(0..ARITH.len()),
                Box::new(self.expr(depth - 1)),
            ),
            6 if depth > 0 => Expr::Call(
                self.rng.random_range(0..self.n_helpers),
                Box::new(self.expr(depth - 1)),
            ),
            7 if depth > 1 => Expr::Ternary(
                Box::new(self.cond(0)),
                Box::new(self.expr(depth - 2)),
                Box::new(self.expr(depth - 2)),
            ),
            8 if depth > 0 && self.arch == Archetype::Numeric => {
                let t = self.pick(Archetype::Numeric.locals());
                Expr::Cast(t, Box::new(self.expr(depth - 1)))
            }
            9 if depth > 0
                && self.n_vars > 0
                && matches!(self.arch, Archetype::Text | Archetype::Object) =>
            {
                Expr::Method(
                    self.rng.random_range(0..self.n_vars),
                    self.rng.random_range(0..API.len()),
                    Box::new(self.expr(depth - 1)),
                )
            }
            10 if matches!(
                self.arch,
                Archetype::Text | Archetype::Exceptional | Archetype::Switchy
            ) =>
            {
                Expr::Text(self.rng.random_range(0..100))
            }
            11 if depth > 0 && self.arch == Archetype::Predicate => {
                Expr::Truth(Box::new(self.cond(0)))
            }
            12 if self.n_fields > 0 => Expr::Field(self.rng.random_range(0..self.n_fields)),
            _ => Expr::Lit(self.rng.random_range(0..100)),
        }
    }

    fn cond(&mut self, depth: usize) -> Cond {
        match self.rng.random_range(0..10) {
            0 if depth > 0 => Cond::And(
                Box::new(self.cond(depth - 1)),
                Box::new(self.cond(depth - 1)),
            ),
            1 if depth > 0 => Cond::Or(
                Box::new(self.cond(depth - 1)),
                Box::new(self.cond(depth - 1)),
            ),
            2 if depth > 0 => Cond::Not(Box::new(self.cond(depth - 1))),
            3 if matches!(self.arch, Archetype::Predicate | Archetype::Object) => {
                Cond::InstanceOf(self.expr(0))
            }
            4 if matches!(
                self.arch,
                Archetype::Predicate | Archetype::Object | Archetype::Text
            ) =>
            {
                Cond::Null(self.expr(0))
            }
            _ => Cond::Cmp(
                self.expr(1),
                self.rng.random_range(0..COMPARE.len()),
                self.expr(1),
            ),
        }
    }

    fn block(&mut self, depth: usize, len: usize) -> Vec<Stmt> {
        (0..len).map(|_| self.stmt(depth)).collect()
    }

    fn loop_body(&mut self, depth: usize, len: usize) -> Vec<Stmt> {
        self.loops += 1;
        let body = self.block(depth, len);
        self.loops -= 1;
        body
    }

    fn stmt(&mut self, depth: usize) -> Stmt {
        let weights = self.arch.weights();
        let dist = rand::distr::weighted::WeightedIndex::new(weights).expect("positive weights");
        let kind = self.rng.sample(&dist);
        let nested = depth > 0;
        match kind {
            K_DECL => {
                let v = self.n_vars;
                self.n_vars += 1;
                if matches!(self.arch, Archetype::Object | Archetype::Text)
                    && self.rng.random_bool(0.2)
                {
                    Stmt::NewList(v)
                } else {
                    let t = self.pick(self.arch.locals());
                    Stmt::Decl(t, v, self.expr(2))
                }
            }
            K_ASSIGN if self.n_vars > 0 => Stmt::Assign(
                self.rng.random_range(0..self.n_vars),
                self.rng.random_range(0..ASSIGN.len()),
                self.expr(2),
            ),
            K_INCR if self.n_vars > 0 => Stmt::Incr(self.rng.random_range(0..self.n_vars)),
            K_IF if nested => {
                let c = self.cond(1);
                let n = self.len(1, 3);
                let then = self.block(depth - 1, n);
                let els = if self.rng.random_bool(0.4) {
                    let n = self.len(1, 3);
                    Some(self.block(depth - 1, n))
                } else {
                    None
                };
                Stmt::If(c, then, els)
            }
            K_FOR if nested => {
                let v = self.n_vars;
                self.n_vars += 1;
                let bound = self.expr(1);
                let n = self.len(1, 4);
                Stmt::For(v, bound, self.loop_body(depth - 1, n))
            }
            K_WHILE if nested => {
                let c = self.cond(1);
                let n = self.len(1, 3);
                Stmt::While(c, self.loop_body(depth - 1, n))
            }
            K_DO if nested => {
                let n = self.len(1, 3);
                let body = self.loop_body(depth - 1, n);
                Stmt::DoWhile(body, self.cond(0))
            }
            K_SWITCH if nested && self.n_vars > 0 => {
                let v = self.rng.random_range(0..self.n_vars);
                let cases = self.len(1, 5);
                let cases = (0..cases)
                    .map(|i| {
                        let n = self.len(1, 3);
                        (i as i64, self.block(depth - 1, n))
                    })
                    .collect();
                Stmt::Switch(v, cases, self.block(depth - 1, 1))
            }
            K_TRY if nested => {
                let n = self.len(1, 3);
                let body = self.block(depth - 1, n);
                let catch = self.block(depth - 1, 1);
                Stmt::Try(body, catch, self.rng.random_bool(0.3))
            }
            K_SYNC if nested => {
                let n = self.len(1, 3);
                Stmt::Sync(self.block(depth - 1, n))
            }
            K_THROW => Stmt::Throw(self.rng.random_range(0..10)),
            K_BREAK if self.loops > 0 => Stmt::Break,
            K_CONTINUE if self.loops > 0 => Stmt::Continue,
            K_FIELD => {
                if self.n_fields == 0 || self.rng.random_bool(0.3) {
                    self.n_fields += 1;
                }
                let f = self.rng.random_range(0..self.n_fields);
                Stmt::SetField(f, self.expr(2))
            }
            K_RETURN if nested => Stmt::Return(self.value()),
            K_PRINT => Stmt::Print(self.expr(1)),
            _ => Stmt::Call(self.rng.random_range(0..self.n_helpers), self.expr(1)),
        }
    }

    /// The value of a `return` in a method of this archetype.
    fn value(&mut self) -> Option<Expr> {
        match self.arch {
            Archetype::Object if self.rng.random_bool(0.5) => None,
            Archetype::Predicate => Some(Expr::Truth(Box::new(self.cond(1)))),
            _ => Some(self.expr(2)),
        }
    }
}

impl MethodTree {
    /// A method of roughly `statements` top-level statements.
    pub fn random(rng: &mut ChaCha8Rng, statements: usize) -> MethodTree {
        let arch = *Archetype::ALL.choose(rng).expect("non-empty");
        let n_params = rng.random_range(0..4);
        let params: Vec<Ty> = (0..n_params)
            .map(|_| *arch.locals().choose(rng).expect("non-empty"))
            .collect();
        let n_helpers = rng.random_range(1..4);
        let mut modifiers = vec![*["public", "private", "protected"]
            .choose(rng)
            .expect("non-empty")];
        if rng.random_bool(0.4) {
            modifiers.push("static");
        }
        if rng.random_bool(0.15) {
            modifiers.push("final");
        }
        let ret = *arch.returns().choose(rng).expect("non-empty");
        let throws = arch == Archetype::Exceptional && rng.random_bool(0.6);
        let mut g = Gen {
            rng,
            arch,
            n_vars: 0,
            n_params,
            n_helpers,
            n_fields: 0,
            loops: 0,
        };
        let mut body = g.block(3, statements.max(1));
        // Nested returns are only valid for a void method when bare.
        if ret == Ty::Void {
            strip_return_values(&mut body);
        } else {
            let value = g.value().unwrap_or_else(|| g.expr(1));
            body.push(Stmt::Return(Some(value)));
        }
        let (n_vars, n_fields) = (g.n_vars, g.n_fields);
        MethodTree {
            modifiers,
            ret,
            params,
            throws,
            body,
            n_vars,
            n_helpers,
            n_fields,
        }
    }
}

fn strip_return_values(body: &mut [Stmt]) {
    for s in body {
        match s {
            Stmt::Return(v) => *v = None,
            Stmt::If(_, a, b) => {
                strip_return_values(a);
                if let Some(b) = b {
                    strip_return_values(b);
                }
            }
            Stmt::For(_, _, a) | Stmt::While(_, a) | Stmt::DoWhile(a, _) | Stmt::Sync(a) => {
                strip_return_values(a)
            }
            Stmt::Try(a, b, _) => {
                strip_return_values(a);
                strip_return_values(b);
            }
            Stmt::Switch(_, cases, d) => {
                for (_, c) in cases {
                    strip_return_values(c);
                }
                strip_return_values(d);
            }
            _ => {}
        }
    }
}

struct Render<'a> {
    names: &'a Names,
    style: Style,
    out: String,
    comment_counter: usize,
}

impl Render<'_> {
    fn op<'s>(&self, table: &'s [&'s str], i: usize) -> &'s str {
        table[(i + self.names.op_shift) % table.len()]
    }

    fn bin(&self, op: &str) -> String {
        if self.style.tight_operators {
            op.to_string()
        } else {
            format!(" {op} ")
        }
    }

    fn expr(&self, e: &Expr) -> String {
        match e {
            Expr::Var(v) => self.names.vars[*v].clone(),
            Expr::Param(p) => self.names.params[*p].clone(),
            Expr::Lit(n) => (n + self.names.literal_shift).to_string(),
            Expr::Text(n) => format!("\"item{}\"", n + self.names.literal_shift),
            Expr::Bin(a, op, b) => format!(
                "({}{}{})",
                self.expr(a),
                self.bin(self.op(&ARITH, *op)),
                self.expr(b)
            ),
            Expr::Call(h, a) => format!("{}({})", self.names.helpers[*h], self.expr(a)),
            Expr::Method(v, m, a) => {
                format!("{}.{}({})", self.names.vars[*v], API[*m], self.expr(a))
            }
            Expr::Ternary(c, a, b) => {
                format!("({} ? {} : {})", self.cond(c), self.expr(a), self.expr(b))
            }
            Expr::Cast(t, a) => format!("({}) {}", t.name(), self.expr(a)),
            Expr::Truth(c) => format!("({})", self.cond(c)),
            Expr::Field(f) => format!("this.{}", self.names.fields[*f]),
        }
    }

    fn cond(&self, c: &Cond) -> String {
        match c {
            Cond::Cmp(a, op, b) => format!(
                "{}{}{}",
                self.expr(a),
                self.bin(self.op(&COMPARE, *op)),
                self.expr(b)
            ),
            Cond::And(a, b) => format!("({}){}({})", self.cond(a), self.bin("&&"), self.cond(b)),
            Cond::Or(a, b) => format!("({}){}({})", self.cond(a), self.bin("||"), self.cond(b)),
            Cond::Not(a) => format!("!({})", self.cond(a)),
            Cond::InstanceOf(a) => format!("{} instanceof Number", self.expr(a)),
            Cond::Null(a) => format!(
                "{}{}null",
                self.expr(a),
                self.bin(self.op(&["==", "!="], 0))
            ),
        }
    }

    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str(self.style.indent);
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn open(&mut self, depth: usize, head: &str) {
        if self.style.brace_on_new_line {
            self.line(depth, head);
            self.line(depth, "{");
        } else {
            self.line(depth, &format!("{head} {{"));
        }
    }

    /// Writes `head {`, the body, then `}` plus an optional tail.
    fn braced(&mut self, depth: usize, head: &str, body: &[Stmt], tail: &str) {
        self.open(depth, head);
        self.block(depth + 1, body);
        self.line(depth, &format!("}}{tail}"));
    }

    fn block(&mut self, depth: usize, body: &[Stmt]) {
        for s in body {
            if self.style.comments && self.comment_counter.is_multiple_of(3) {
                let note = match self.comment_counter % 2 {
                    0 => format!("// step {} {{ keeps state", self.comment_counter),
                    _ => format!("/* check {} for (int x) */", self.comment_counter),
                };
                self.line(depth, &note);
            }
            self.comment_counter += 1;
            self.stmt(depth, s);
            if self.style.blank_lines && self.comment_counter.is_multiple_of(4) {
                self.out.push('\n');
            }
        }
    }

    fn stmt(&mut self, depth: usize, s: &Stmt) {
        let text = match s {
            Stmt::Decl(t, v, e) => format!(
                "{} {}{}{};",
                t.name(),
                self.names.vars[*v],
                self.bin("="),
                self.expr(e)
            ),
            Stmt::NewList(v) => format!(
                "List<Object> {}{}new ArrayList<>();",
                self.names.vars[*v],
                self.bin("=")
            ),
            Stmt::Assign(v, op, e) => format!(
                "{}{}{};",
                self.names.vars[*v],
                self.bin(ASSIGN[*op]),
                self.expr(e)
            ),
            Stmt::Incr(v) => format!("{}++;", self.names.vars[*v]),
            Stmt::SetField(f, e) => format!(
                "this.{}{}{};",
                self.names.fields[*f],
                self.bin("="),
                self.expr(e)
            ),
            Stmt::Call(h, e) => format!("{}({});", self.names.helpers[*h], self.expr(e)),
            Stmt::Print(e) => format!("System.out.println({});", self.expr(e)),
            Stmt::Throw(n) => format!(
                "throw new IllegalStateException(\"code {}\");",
                n + self.names.literal_shift
            ),
            Stmt::Break => "break;".to_string(),
            Stmt::Continue => "continue;".to_string(),
            Stmt::Return(Some(e)) => format!("return {};", self.expr(e)),
            Stmt::Return(None) => "return;".to_string(),
            Stmt::If(c, then, els) => {
                let head = format!("if ({})", self.cond(c));
                self.braced(depth, &head, then, "");
                if let Some(els) = els {
                    self.braced(depth, "else", els, "");
                }
                return;
            }
            Stmt::For(v, bound, body) => {
                let i = &self.names.vars[*v];
                let head = format!("for (int {i} = 0; {i} < {}; {i}++)", self.expr(bound));
                self.braced(depth, &head, body, "");
                return;
            }
            Stmt::While(c, body) => {
                let head = format!("while ({})", self.cond(c));
                self.braced(depth, &head, body, "");
                return;
            }
            Stmt::DoWhile(body, c) => {
                let tail = format!(" while ({});", self.cond(c));
                self.braced(depth, "do", body, &tail);
                return;
            }
            Stmt::Switch(v, cases, default) => {
                let head = format!("switch ({})", self.names.vars[*v]);
                self.open(depth, &head);
                for (k, body) in cases {
                    self.line(
                        depth + 1,
                        &format!("case {}:", k + self.names.literal_shift),
                    );
                    self.block(depth + 2, body);
                    self.line(depth + 2, "break;");
                }
                self.line(depth + 1, "default:");
                self.block(depth + 2, default);
                self.line(depth, "}");
                return;
            }
            Stmt::Try(body, catch, finally) => {
                self.braced(depth, "try", body, "");
                self.braced(depth, "catch (RuntimeException err)", catch, "");
                if *finally {
                    self.braced(depth, "finally", &[Stmt::Print(Expr::Lit(0))], "");
                }
                return;
            }
            Stmt::Sync(body) => {
                self.braced(depth, "synchronized (this)", body, "");
                return;
            }
        };
        self.line(depth, &text);
    }
}

impl MethodTree {
    pub fn render(&self, names: &Names, style: Style, depth: usize) -> String {
        let mut r = Render {
            names,
            style,
            out: String::new(),
            comment_counter: 0,
        };
        let params: Vec<String> = self
            .params
            .iter()
            .zip(&names.params)
            .map(|(t, n)| format!("{} {n}", t.name()))
            .collect();
        let throws = if self.throws { " throws Exception" } else { "" };
        let head = format!(
            "{} {} {}({}){throws}",
            self.modifiers.join(" "),
            self.ret.name(),
            names.method,
            params.join(", ")
        );
        r.braced(depth, &head, &self.body, "");
        r.out
    }

    pub fn n_helpers(&self) -> usize {
        self.n_helpers
    }
}

/// A generated function with its file stem.
#[derive(Debug, Clone)]
pub struct SynthFunction {
    pub stem: String,
    pub text: String,
}

/// Labeled corpus: functions plus pair labels keyed by the sample ids the
/// ingester will assign (`<stem>.java#0`).
#[derive(Debug, Clone, Default)]
pub struct LabeledCorpus {
    pub functions: Vec<SynthFunction>,
    pub labels: Vec<LabeledPair>,
    /// Clone family of each function, parallel to `functions`. Near-duplicate
    /// negatives get a family of their own.
    pub families: Vec<usize>,
}

pub fn sample_id(stem: &str) -> String {
    format!("{stem}.java#0")
}

fn class_file(stem: &str, method: &str) -> String {
    let class: String = stem
        .split('_')
        .map(|p| {
            let mut c = p.chars();
            match c.next() {
                Some(f) => f.to_ascii_uppercase().to_string() + c.as_str(),
                None => String::new(),
            }
        })
        .collect();
    format!("public class {class} {{\n{method}}}\n")
}

#[derive(Debug, Clone, Copy)]
pub struct CloneCorpusSpec {
    pub bases: usize,
    pub seed: u64,
    /// Add a Type-1 and a Type-2 clone of every base.
    pub clones: bool,
    /// Number of bases that get a near-duplicate labeled NEG.
    pub near_negatives: usize,
    /// Number of random base pairs labeled NEG.
    pub random_negatives: usize,
}

/// Base functions with their Type-1/Type-2 clones and NEG pairs.
pub fn clone_corpus(spec: CloneCorpusSpec) -> LabeledCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = LabeledCorpus::default();
    let mut family = 0;
    for b in 0..spec.bases {
        let statements = rng.random_range(3..9);
        let tree = MethodTree::random(&mut rng, statements);
        let names = Names::random(&mut rng, &tree);
        let base = format!("base_{b:04}");
        let push = |out: &mut LabeledCorpus, stem: String, text: String, fam: usize| {
            out.functions.push(SynthFunction {
                text: class_file(&stem, &text),
                stem,
            });
            out.families.push(fam);
        };
        push(
            &mut out,
            base.clone(),
            tree.render(&names, Style::PLAIN, 1),
            family,
        );
        if spec.clones {
            let t1 = format!("base_{b:04}_t1");
            push(
                &mut out,
                t1.clone(),
                tree.render(&names, Style::REFORMATTED, 1),
                family,
            );
            let mut renamed = Names::random(&mut rng, &tree);
            renamed.literal_shift = rng.random_range(1..50);
            let t2 = format!("base_{b:04}_t2");
            push(
                &mut out,
                t2.clone(),
                tree.render(&renamed, Style::PLAIN, 1),
                family,
            );
            out.labels.push(LabeledPair::new(
                &sample_id(&base),
                &sample_id(&t1),
                CloneType::T1,
            ));
            out.labels.push(LabeledPair::new(
                &sample_id(&base),
                &sample_id(&t2),
                CloneType::T2,
            ));
        }
        if b < spec.near_negatives {
            let mut other = names.clone();
            other.op_shift = 1;
            other.helpers = (0..tree.n_helpers()).map(|i| format!("other{i}")).collect();
            let neg = format!("base_{b:04}_neg");
            family += 1;
            push(
                &mut out,
                neg.clone(),
                tree.render(&other, Style::PLAIN, 1),
                family,
            );
            out.labels.push(LabeledPair::new(
                &sample_id(&base),
                &sample_id(&neg),
                CloneType::Neg,
            ));
        }
        family += 1;
    }
    let mut drawn = std::collections::BTreeSet::new();
    while drawn.len()
        < spec
            .random_negatives
            .min(spec.bases * spec.bases.saturating_sub(1) / 2)
    {
        let a = rng.random_range(0..spec.bases);
        let b = rng.random_range(0..spec.bases);
        if a != b && drawn.insert((a.min(b), a.max(b))) {
            out.labels.push(LabeledPair::new(
                &sample_id(&format!("base_{a:04}")),
                &sample_id(&format!("base_{b:04}")),
                CloneType::Neg,
            ));
        }
    }
    out
}

impl LabeledCorpus {
    pub fn write(&self, dir: &Path) -> Result<()> {
        for f in &self.functions {
            let path = dir.join(format!("{}.java", f.stem));
            write_file(&path, &f.text).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

/// Writes about `target_loc` non-blank lines of Java into `dir`, as classes
/// of several methods spread over sub-directories. A tenth of the methods are
/// Type-1 or Type-2 copies of an earlier one. Returns the lines written.
pub fn scale_corpus(dir: &Path, target_loc: usize, seed: u64) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut written = 0;
    let mut file = 0;
    let mut pool: Vec<(MethodTree, Names)> = Vec::new();
    while written < target_loc {
        let mut body = String::new();
        for _ in 0..rng.random_range(4..12) {
            let text = if !pool.is_empty() && rng.random_bool(0.1) {
                let (tree, names) = &pool[rng.random_range(0..pool.len())];
                if rng.random_bool(0.5) {
                    tree.render(names, Style::REFORMATTED, 1)
                } else {
                    let mut renamed = Names::random(&mut rng, tree);
                    renamed.literal_shift = 7;
                    tree.render(&renamed, Style::PLAIN, 1)
                }
            } else {
                let statements = rng.random_range(3..10);
                let tree = MethodTree::random(&mut rng, statements);
                let names = Names::random(&mut rng, &tree);
                let text = tree.render(&names, Style::PLAIN, 1);
                if pool.len() < 4096 {
                    pool.push((tree, names));
                } else {
                    let slot = rng.random_range(0..pool.len());
                    pool[slot] = (tree, names);
                }
                text
            };
            body.push_str(&text);
            body.push('\n');
        }
        let stem = format!("unit_{file:06}");
        let text = class_file(&stem, &body);
        written += crate::corpus::count_loc(&text);
        let mut path = dir.join(format!("pkg{:03}", file / 500));
        path.push(format!("{stem}.java"));
        write_file(&path, &text).with_context(|| format!("writing {}", path.display()))?;
        file += 1;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use graphclone_core::lexis::{tokenize, IndividualInfo, TokenKind};
    use graphclone_core::split::split_methods;

    fn method_of(text: &str) -> String {
        let spans = split_methods(text).unwrap();
        assert_eq!(spans.len(), 1, "{text}");
        spans[0].text.clone()
    }

    #[test]
    fn clones_keep_individual_info() {
        let c = clone_corpus(CloneCorpusSpec {
            bases: 30,
            seed: 5,
            clones: true,
            near_negatives: 30,
            random_negatives: 10,
        });
        assert_eq!(c.functions.len(), 120);
        assert_eq!(c.labels.len(), 30 * 3 + 10);
        for chunk in c.functions.chunks(4) {
            let infos: Vec<IndividualInfo> = chunk
                .iter()
                .map(|f| IndividualInfo::from_text(&method_of(&f.text)).unwrap())
                .collect();
            assert!(infos.iter().all(|i| *i == infos[0]), "{}", chunk[0].stem);
        }
    }

    #[test]
    fn type1_changes_layout_only_and_type2_renames() {
        let c = clone_corpus(CloneCorpusSpec {
            bases: 10,
            seed: 1,
            clones: true,
            near_negatives: 0,
            random_negatives: 0,
        });
        for chunk in c.functions.chunks(3) {
            let toks = |t: &str| -> Vec<(TokenKind, String)> {
                tokenize(&method_of(t))
                    .unwrap()
                    .iter()
                    .map(|t| (t.kind, t.lexeme.clone()))
                    .collect()
            };
            let (base, t1, t2) = (
                toks(&chunk[0].text),
                toks(&chunk[1].text),
                toks(&chunk[2].text),
            );
            assert_eq!(base, t1);
            assert_ne!(chunk[0].text, chunk[1].text);
            assert_eq!(base.len(), t2.len());
            let kinds = |v: &[(TokenKind, String)]| v.iter().map(|t| t.0).collect::<Vec<_>>();
            assert_eq!(kinds(&base), kinds(&t2));
            assert_ne!(base, t2);
        }
    }

    #[test]
    fn generation_is_seeded() {
        let spec = CloneCorpusSpec {
            bases: 5,
            seed: 9,
            clones: true,
            near_negatives: 2,
            random_negatives: 3,
        };
        let (a, b) = (clone_corpus(spec), clone_corpus(spec));
        assert_eq!(a.labels, b.labels);
        assert!(a
            .functions
            .iter()
            .zip(&b.functions)
            .all(|(x, y)| x.text == y.text));
    }
}
