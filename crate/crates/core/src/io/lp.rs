//! Mixed-integer export in LP file syntax, plus a reader for the subset of
//! that syntax we emit.
//!
//! Each product gets a price `p_i` and three binaries `zP_i`, `zL_i`, `zR_i`
//! (held, lowered, raised). Two rows per product tie the price to the chosen
//! side. Without price bounds the open ends use a big-M; with bounds the
//! lower and upper bounds take its place.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gpa::{side_of, Side};
use crate::io::{read_text, write_atomic};
use crate::model::{profit_constant, Instance};

/// Longest line the writer produces; the format allows 510 characters.
const WRAP: usize = 240;
const MAX_LINE: usize = 510;

/// Rounds to 12 significant digits and prints in plain decimal.
fn num(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{rounded}")
}

struct Lines {
    out: String,
    col: usize,
}

impl Lines {
    fn new() -> Self {
        Lines { out: String::new(), col: 0 }
    }

    fn start(&mut self, head: &str) {
        if self.col > 0 {
            self.out.push('\n');
        }
        self.out.push_str(head);
        self.col = head.len();
    }

    fn token(&mut self, t: &str) {
        if self.col + 1 + t.len() > WRAP {
            self.out.push_str("\n   ");
            self.col = 3;
        }
        self.out.push(' ');
        self.out.push_str(t);
        self.col += 1 + t.len();
    }

    /// Appends `coef * var` with an explicit sign unless it opens the
    /// expression. Zero coefficients are dropped.
    fn term(&mut self, coef: f64, var: &str, first: &mut bool) {
        let text = num(coef.abs());
        if text == "0" {
            return;
        }
        let sign = if coef < 0.0 { "-" } else { "+" };
        let body = if text == "1" { var.to_string() } else { format!("{text} {var}") };
        if *first && coef >= 0.0 {
            self.token(&body);
        } else {
            self.token(&format!("{sign} {body}"));
        }
        *first = false;
    }

    fn finish(mut self) -> String {
        if self.col > 0 {
            self.out.push('\n');
        }
        self.out
    }
}

/// Big-M used when `big_m` is not given: ten times the largest raised price
/// threshold.
pub fn default_big_m(instance: &Instance) -> f64 {
    10.0 * (0..instance.n())
        .map(|i| instance.p0()[i] + instance.delta()[i])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Renders the model; see [`export_mip_lp`].
pub fn mip_lp_string(instance: &Instance, big_m: Option<f64>) -> Result<String> {
    instance.check_solvable()?;
    let n = instance.n();
    let p0 = instance.p0();
    let delta = instance.delta();
    let (lower, upper): (Vec<f64>, Vec<f64>) = match instance.bounds() {
        Some(b) => (b.lower.clone(), b.upper.clone()),
        None => {
            let m = big_m.unwrap_or_else(|| default_big_m(instance));
            let reach = (0..n)
                .map(|i| (p0[i] + delta[i]).max(-(p0[i] - delta[i])))
                .fold(f64::NEG_INFINITY, f64::max);
            if !(m.is_finite() && m > reach) {
                return Err(Error::validation(
                    "big_m",
                    format!("{m} must be finite and exceed every |p0 +/- delta| (max {reach})"),
                ));
            }
            (vec![-m; n], vec![m; n])
        }
    };

    let mut head = String::new();
    let _ = writeln!(head, "\\ Price optimization with at most k changed prices, n = {n}, k = {}", instance.k());
    let _ = writeln!(head, "\\ Objective is profit without its constant term:");
    let _ = writeln!(head, "\\   profit(p) = objective(p) - {}", num(profit_constant(instance)));
    match instance.bounds() {
        Some(_) => {
            let _ = writeln!(head, "\\ Price bounds close the open ends of the changed intervals");
        }
        None => {
            let _ = writeln!(head, "\\ Big-M for the open ends of the changed intervals: {}", num(upper[0]));
        }
    }

    let mut w = Lines::new();
    w.start("Maximize");
    w.start(" obj:");
    let mut first = true;
    let f = instance.linear_term();
    for (i, fi) in f.iter().enumerate() {
        w.term(*fi, &format!("p_{}", i + 1), &mut first);
    }
    w.token(if first { "[" } else { "+ [" });
    let mut qfirst = true;
    for i in 0..n {
        for (j, s) in instance.s_row(i) {
            if j == i {
                w.term(-s, &format!("p_{} ^ 2", i + 1), &mut qfirst);
            } else if j > i {
                w.term(-2.0 * s, &format!("p_{} * p_{}", i + 1, j + 1), &mut qfirst);
            }
        }
    }
    w.token("] / 2");

    w.start("Subject To");
    for i in 0..n {
        let id = i + 1;
        let (p, zp, zl, zr) = (format!("p_{id}"), format!("zP_{id}"), format!("zL_{id}"), format!("zR_{id}"));

        w.start(&format!(" lo_{id}:"));
        let mut first = true;
        w.term(1.0, &p, &mut first);
        w.term(-p0[i], &zp, &mut first);
        w.term(-lower[i], &zl, &mut first);
        w.term(-(p0[i] + delta[i]), &zr, &mut first);
        w.token(">= 0");

        w.start(&format!(" up_{id}:"));
        let mut first = true;
        w.term(1.0, &p, &mut first);
        w.term(-p0[i], &zp, &mut first);
        w.term(-(p0[i] - delta[i]), &zl, &mut first);
        w.term(-upper[i], &zr, &mut first);
        w.token("<= 0");

        w.start(&format!(" pick_{id}:"));
        let mut first = true;
        for z in [&zp, &zl, &zr] {
            w.term(1.0, z, &mut first);
        }
        w.token("= 1");
    }
    w.start(" card:");
    let mut first = true;
    for i in 0..n {
        w.term(1.0, &format!("zL_{}", i + 1), &mut first);
        w.term(1.0, &format!("zR_{}", i + 1), &mut first);
    }
    w.token(&format!("<= {}", instance.k()));

    w.start("Bounds");
    for i in 0..n {
        w.start(&format!(" p_{} free", i + 1));
    }
    w.start("Binary");
    for i in 0..n {
        let id = i + 1;
        w.start(&format!(" zP_{id} zL_{id} zR_{id}"));
    }
    w.start("End");
    Ok(head + &w.finish())
}

/// Writes the mixed-integer model for `instance` in LP syntax. `big_m`
/// defaults to [`default_big_m`] and is ignored when the instance has price
/// bounds.
pub fn export_mip_lp(instance: &Instance, big_m: Option<f64>, path: &Path) -> Result<()> {
    write_atomic(path, mip_lp_string(instance, big_m)?.as_bytes())
}

/// Variable values encoding the feasible price vector `p`: the price itself
/// and the side indicators.
pub fn assignment_for(instance: &Instance, p: &[f64]) -> HashMap<String, f64> {
    let mut values = HashMap::with_capacity(4 * p.len());
    for (i, &x) in p.iter().enumerate() {
        let id = i + 1;
        let side = side_of(instance.p0()[i], x);
        values.insert(format!("p_{id}"), x);
        values.insert(format!("zP_{id}"), f64::from(u8::from(side == Side::Held)));
        values.insert(format!("zL_{id}"), f64::from(u8::from(side == Side::Lowered)));
        values.insert(format!("zR_{id}"), f64::from(u8::from(side == Side::Raised)));
    }
    values
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpConstraint {
    pub name: Option<String>,
    pub terms: Vec<(String, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A parsed LP file.
#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub maximize: bool,
    pub objective_name: Option<String>,
    pub linear: Vec<(String, f64)>,
    /// `(x, y, c)` contributes `c * x * y`; the `/ 2` is already applied.
    pub quadratic: Vec<(String, String, f64)>,
    pub constant: f64,
    pub constraints: Vec<LpConstraint>,
    pub bounds: HashMap<String, (f64, f64)>,
    pub binaries: Vec<String>,
    pub generals: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Op(&'static str),
}

/// Section, maximize flag, all body tokens, and the body tokens per line.
type RawSection = (Section, bool, Vec<(Tok, usize)>, Vec<Vec<(Tok, usize)>>);

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Objective,
    Constraints,
    Bounds,
    Binary,
    General,
    End,
}

fn header(line: &str) -> Option<(Section, bool)> {
    let l = line.trim().to_ascii_lowercase();
    let l = l.split_whitespace().collect::<Vec<_>>().join(" ");
    Some(match l.as_str() {
        "maximize" | "maximise" | "maximum" | "max" => (Section::Objective, true),
        "minimize" | "minimise" | "minimum" | "min" => (Section::Objective, false),
        "subject to" | "such that" | "st" | "s.t." | "st." => (Section::Constraints, false),
        "bounds" | "bound" => (Section::Bounds, false),
        "binary" | "binaries" | "bin" => (Section::Binary, false),
        "general" | "generals" | "gen" => (Section::General, false),
        "end" => (Section::End, false),
        _ => return None,
    })
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "_.!\"#$%&(),;?@'{}|~".contains(c)
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<(Tok, usize)>> {
    let err = |m: String| Error::Parse { location: format!("line {lineno}"), message: m };
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| err(format!("bad number {text:?}")))?;
            out.push((Tok::Num(v), lineno));
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let op: Option<(&'static str, usize)> = match two.as_str() {
            "<=" | "=<" => Some(("<=", 2)),
            ">=" | "=>" => Some((">=", 2)),
            _ => match c {
                '<' => Some(("<=", 1)),
                '>' => Some((">=", 1)),
                '=' => Some(("=", 1)),
                '+' => Some(("+", 1)),
                '-' => Some(("-", 1)),
                '*' => Some(("*", 1)),
                '^' => Some(("^", 1)),
                '[' => Some(("[", 1)),
                ']' => Some(("]", 1)),
                '/' => Some(("/", 1)),
                ':' => Some((":", 1)),
                _ => None,
            },
        };
        if let Some((op, len)) = op {
            out.push((Tok::Op(op), lineno));
            i += len;
            continue;
        }
        if is_name_char(c) {
            let start = i;
            while i < chars.len() && is_name_char(chars[i]) {
                i += 1;
            }
            let name: String = chars[start..i].iter().collect();
            if name.len() > 255 {
                return Err(err(format!("name {name:?} exceeds 255 characters")));
            }
            out.push((Tok::Name(name), lineno));
            continue;
        }
        return Err(err(format!("unexpected character {c:?}")));
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek_at(&self, ahead: usize) -> Option<&'a Tok> {
        self.toks.get(self.pos + ahead).map(|t| &t.0)
    }

    fn next(&mut self) -> Option<&'a Tok> {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn err(&self, message: impl Into<String>) -> Error {
        let line = self.toks.get(self.pos.min(self.toks.len().saturating_sub(1))).map_or(0, |t| t.1);
        Error::Parse { location: format!("line {line}"), message: message.into() }
    }

    fn eat(&mut self, op: &str) -> bool {
        let hit = matches!(self.peek(), Some(Tok::Op(o)) if *o == op);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn expect_op(&mut self, op: &'static str) -> Result<()> {
        match self.next() {
            Some(Tok::Op(o)) if *o == op => Ok(()),
            other => Err(self.err(format!("expected {op:?}, found {other:?}"))),
        }
    }

    fn expect_name(&mut self) -> Result<String> {
        match self.next() {
            Some(Tok::Name(n)) if !is_keyword_number(n) => Ok(n.clone()),
            other => Err(self.err(format!("expected a variable name, found {other:?}"))),
        }
    }

    /// An optional leading `name:` label.
    fn label(&mut self) -> Option<String> {
        if let (Some(Tok::Name(n)), Some(Tok::Op(":"))) = (self.peek(), self.peek_at(1)) {
            self.pos += 2;
            Some(n.clone())
        } else {
            None
        }
    }

    fn sign(&mut self, required: bool) -> Result<f64> {
        let mut s = 1.0;
        let mut seen = false;
        loop {
            if self.eat("+") {
                seen = true;
            } else if self.eat("-") {
                s = -s;
                seen = true;
            } else {
                break;
            }
        }
        if required && !seen {
            return Err(self.err("expected '+' or '-' between terms"));
        }
        Ok(s)
    }
}

fn is_keyword_number(n: &str) -> bool {
    matches!(n.to_ascii_lowercase().as_str(), "inf" | "infinity")
}

fn at_sense(cur: &Cursor<'_>) -> bool {
    matches!(cur.peek(), Some(Tok::Op("<=" | ">=" | "=")))
}

struct Expr {
    linear: Vec<(String, f64)>,
    quadratic: Vec<(String, String, f64)>,
    constant: f64,
}

/// Parses terms until the tokens run out or a sense operator appears.
fn parse_expr(cur: &mut Cursor<'_>, objective: bool) -> Result<Expr> {
    let mut e = Expr { linear: Vec::new(), quadratic: Vec::new(), constant: 0.0 };
    let mut first = true;
    while cur.peek().is_some() && !at_sense(cur) {
        let s = cur.sign(!first)?;
        first = false;
        match cur.next() {
            Some(Tok::Op("[")) => {
                if !objective || s < 0.0 {
                    return Err(cur.err("quadratic bracket only allowed as '+ [ ... ] / 2' in the objective"));
                }
                let mut qfirst = true;
                while cur.peek() != Some(&Tok::Op("]")) {
                    if cur.peek().is_none() {
                        return Err(cur.err("unterminated quadratic bracket"));
                    }
                    let qs = cur.sign(!qfirst)?;
                    qfirst = false;
                    let coef = match cur.peek() {
                        Some(Tok::Num(v)) => {
                            cur.pos += 1;
                            *v
                        }
                        _ => 1.0,
                    };
                    let x = cur.expect_name()?;
                    match cur.next() {
                        Some(Tok::Op("^")) => match cur.next() {
                            Some(Tok::Num(v)) if *v == 2.0 => e.quadratic.push((x.clone(), x, qs * coef / 2.0)),
                            other => return Err(cur.err(format!("expected exponent 2, found {other:?}"))),
                        },
                        Some(Tok::Op("*")) => {
                            let y = cur.expect_name()?;
                            e.quadratic.push((x, y, qs * coef / 2.0));
                        }
                        other => return Err(cur.err(format!("expected '^ 2' or '* name', found {other:?}"))),
                    }
                }
                cur.pos += 1;
                cur.expect_op("/")?;
                match cur.next() {
                    Some(Tok::Num(v)) if *v == 2.0 => {}
                    other => return Err(cur.err(format!("quadratic bracket must be divided by 2, found {other:?}"))),
                }
            }
            Some(Tok::Num(v)) => match cur.peek() {
                Some(Tok::Name(n)) if !is_keyword_number(n) => {
                    let n = n.clone();
                    cur.pos += 1;
                    e.linear.push((n, s * v));
                }
                _ if objective => e.constant += s * v,
                _ => return Err(cur.err("constant on the left-hand side of a constraint")),
            },
            Some(Tok::Name(n)) if !is_keyword_number(n) => e.linear.push((n.clone(), s)),
            other => return Err(cur.err(format!("unexpected token {other:?}"))),
        }
    }
    Ok(e)
}

fn bound_value(cur: &mut Cursor<'_>) -> Result<f64> {
    let s = cur.sign(false)?;
    match cur.next() {
        Some(Tok::Num(v)) => Ok(s * v),
        Some(Tok::Name(n)) if is_keyword_number(n) => Ok(s * f64::INFINITY),
        other => Err(cur.err(format!("expected a number, found {other:?}"))),
    }
}

fn sense_of(cur: &mut Cursor<'_>) -> Result<Sense> {
    match cur.next() {
        Some(Tok::Op("<=")) => Ok(Sense::Le),
        Some(Tok::Op(">=")) => Ok(Sense::Ge),
        Some(Tok::Op("=")) => Ok(Sense::Eq),
        other => Err(cur.err(format!("expected a comparison, found {other:?}"))),
    }
}

impl LpModel {
    pub fn read(path: &Path) -> Result<LpModel> {
        LpModel::parse(&read_text(path)?)
    }

    /// Parses and checks the file. Section headers must sit on their own
    /// lines; everything else may wrap freely.
    pub fn parse(text: &str) -> Result<LpModel> {
        let mut sections: Vec<RawSection> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            if raw.len() > MAX_LINE {
                return Err(Error::Parse {
                    location: format!("line {lineno}"),
                    message: format!("line longer than {MAX_LINE} characters"),
                });
            }
            let line = raw.split('\\').next().unwrap_or("");
            if line.trim().is_empty() {
                continue;
            }
            if let Some((sec, max)) = header(line) {
                sections.push((sec, max, Vec::new(), Vec::new()));
                continue;
            }
            let toks = tokenize(line, lineno)?;
            match sections.last_mut() {
                Some((Section::End, ..)) => {
                    return Err(Error::Parse { location: format!("line {lineno}"), message: "content after End".into() })
                }
                Some((_, _, all, lines)) => {
                    all.extend(toks.iter().cloned());
                    lines.push(toks);
                }
                None => {
                    return Err(Error::Parse {
                        location: format!("line {lineno}"),
                        message: "content before the objective section".into(),
                    })
                }
            }
        }

        let order: Vec<Section> = sections.iter().map(|s| s.0).collect();
        if order.first() != Some(&Section::Objective) {
            return Err(Error::Parse { location: "file".into(), message: "missing objective section".into() });
        }
        if order.last() != Some(&Section::End) {
            return Err(Error::Parse { location: "file".into(), message: "missing End".into() });
        }
        let rank = |s: &Section| match s {
            Section::Objective => 0,
            Section::Constraints => 1,
            Section::Bounds => 2,
            Section::Binary | Section::General => 3,
            Section::End => 4,
        };
        if order.windows(2).any(|w| rank(&w[0]) > rank(&w[1]) || (rank(&w[0]) == rank(&w[1]) && rank(&w[0]) < 3)) {
            return Err(Error::Parse { location: "file".into(), message: "sections out of order or repeated".into() });
        }
        if !order.contains(&Section::Constraints) {
            return Err(Error::Parse { location: "file".into(), message: "missing Subject To section".into() });
        }

        let mut model = LpModel {
            maximize: sections[0].1,
            objective_name: None,
            linear: Vec::new(),
            quadratic: Vec::new(),
            constant: 0.0,
            constraints: Vec::new(),
            bounds: HashMap::new(),
            binaries: Vec::new(),
            generals: Vec::new(),
        };
        let mut names = HashSet::new();
        for (sec, _, toks, lines) in &sections {
            match sec {
                Section::Objective => {
                    let mut cur = Cursor { toks, pos: 0 };
                    model.objective_name = cur.label();
                    let e = parse_expr(&mut cur, true)?;
                    if cur.peek().is_some() {
                        return Err(cur.err("comparison operator in the objective"));
                    }
                    model.linear = e.linear;
                    model.quadratic = e.quadratic;
                    model.constant = e.constant;
                }
                Section::Constraints => {
                    let mut cur = Cursor { toks, pos: 0 };
                    while cur.peek().is_some() {
                        let name = cur.label();
                        if let Some(n) = &name {
                            if !names.insert(n.clone()) {
                                return Err(cur.err(format!("duplicate constraint name {n:?}")));
                            }
                        }
                        let e = parse_expr(&mut cur, false)?;
                        if e.linear.is_empty() {
                            return Err(cur.err("constraint without variables"));
                        }
                        let sense = sense_of(&mut cur)?;
                        let rhs = bound_value(&mut cur)?;
                        if !rhs.is_finite() {
                            return Err(cur.err("infinite right-hand side"));
                        }
                        model.constraints.push(LpConstraint { name, terms: e.linear, sense, rhs });
                    }
                }
                Section::Bounds => {
                    for line in lines {
                        let mut cur = Cursor { toks: line, pos: 0 };
                        let (var, lo, hi) = parse_bound(&mut cur)?;
                        if cur.peek().is_some() {
                            return Err(cur.err("trailing tokens after bound"));
                        }
                        let entry = model.bounds.entry(var).or_insert((0.0, f64::INFINITY));
                        if let Some(lo) = lo {
                            entry.0 = lo;
                        }
                        if let Some(hi) = hi {
                            entry.1 = hi;
                        }
                    }
                }
                Section::Binary | Section::General => {
                    let mut cur = Cursor { toks, pos: 0 };
                    while cur.peek().is_some() {
                        let v = cur.expect_name()?;
                        if *sec == Section::Binary {
                            model.binaries.push(v);
                        } else {
                            model.generals.push(v);
                        }
                    }
                }
                Section::End => {}
            }
        }

        let used: HashSet<&str> = model
            .constraints
            .iter()
            .flat_map(|c| c.terms.iter().map(|t| t.0.as_str()))
            .chain(model.linear.iter().map(|t| t.0.as_str()))
            .chain(model.quadratic.iter().flat_map(|t| [t.0.as_str(), t.1.as_str()]))
            .collect();
        let mut seen = HashSet::new();
        for b in &model.binaries {
            if !used.contains(b.as_str()) {
                return Err(Error::Parse { location: "Binary".into(), message: format!("binary {b} is never used") });
            }
            if !seen.insert(b.as_str()) {
                return Err(Error::Parse { location: "Binary".into(), message: format!("binary {b} listed twice") });
            }
        }
        Ok(model)
    }

    /// Objective value at `values`; variables missing from the map are an
    /// error.
    pub fn objective_value(&self, values: &HashMap<String, f64>) -> Result<f64> {
        let get = |v: &str| {
            values
                .get(v)
                .copied()
                .ok_or_else(|| Error::validation("assignment", format!("no value for {v}")))
        };
        let mut total = self.constant;
        for (v, c) in &self.linear {
            total += c * get(v)?;
        }
        for (x, y, c) in &self.quadratic {
            total += c * get(x)? * get(y)?;
        }
        Ok(total)
    }

    /// Every constraint, bound or integrality requirement violated by
    /// `values` by more than `tol`.
    pub fn violations(&self, values: &HashMap<String, f64>, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (idx, c) in self.constraints.iter().enumerate() {
            let lhs: f64 = c.terms.iter().map(|(v, a)| a * values.get(v).copied().unwrap_or(f64::NAN)).sum();
            let ok = match c.sense {
                Sense::Le => lhs <= c.rhs + tol,
                Sense::Ge => lhs >= c.rhs - tol,
                Sense::Eq => (lhs - c.rhs).abs() <= tol,
            };
            if !ok {
                let name = c.name.clone().unwrap_or_else(|| format!("#{}", idx + 1));
                out.push(format!("{name}: lhs {lhs} vs rhs {}", c.rhs));
            }
        }
        for (v, x) in values {
            let (lo, hi) = self.bounds.get(v).copied().unwrap_or((0.0, f64::INFINITY));
            if *x < lo - tol || *x > hi + tol {
                out.push(format!("{v} = {x} outside [{lo}, {hi}]"));
            }
        }
        for b in &self.binaries {
            match values.get(b) {
                Some(x) if (x - x.round()).abs() <= tol && (-tol..=1.0 + tol).contains(x) => {}
                other => out.push(format!("binary {b} = {other:?}")),
            }
        }
        out
    }
}

/// One bound statement: `x free`, `x <op> v`, `v <op> x`, or `v <op> x <op> w`.
fn parse_bound(cur: &mut Cursor<'_>) -> Result<(String, Option<f64>, Option<f64>)> {
    let flip = |s: Sense| match s {
        Sense::Le => Sense::Ge,
        Sense::Ge => Sense::Le,
        Sense::Eq => Sense::Eq,
    };
    let apply = |s: Sense, v: f64| match s {
        Sense::Le => (None, Some(v)),
        Sense::Ge => (Some(v), None),
        Sense::Eq => (Some(v), Some(v)),
    };
    if let Some(Tok::Name(n)) = cur.peek() {
        if !is_keyword_number(n) {
            let var = n.clone();
            cur.pos += 1;
            if let Some(Tok::Name(f)) = cur.peek() {
                if f.eq_ignore_ascii_case("free") {
                    cur.pos += 1;
                    return Ok((var, Some(f64::NEG_INFINITY), Some(f64::INFINITY)));
                }
            }
            let s = sense_of(cur)?;
            let v = bound_value(cur)?;
            let (lo, hi) = apply(s, v);
            return Ok((var, lo, hi));
        }
    }
    let v = bound_value(cur)?;
    let s = sense_of(cur)?;
    let var = cur.expect_name()?;
    let (mut lo, mut hi) = apply(flip(s), v);
    if cur.peek().is_some() {
        let s2 = sense_of(cur)?;
        let w = bound_value(cur)?;
        let (lo2, hi2) = apply(s2, w);
        lo = lo.or(lo2);
        hi = hi.or(hi2);
    }
    Ok((var, lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{objective_q, profit_z, Bounds};
    use crate::sparse::CsrMatrix;

    fn single(bounds: Option<Bounds>) -> Instance {
        Instance::new(
            1,
            vec![8.0],
            CsrMatrix::from_triplets(1, &[(0, 0, 2.0)]).unwrap(),
            vec![1.0],
            vec![3.0],
            vec![0.5],
            bounds,
        )
        .unwrap()
    }

    #[test]
    fn numbers_keep_twelve_digits() {
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(123_456_789.123_456_78), "123456789.123");
        assert_eq!(num(-2.5), "-2.5");
        assert_eq!(num(0.0), "0");
    }

    #[test]
    fn single_product_model() {
        let text = mip_lp_string(&single(None), None).unwrap();
        assert!(text.contains("zP_1 + zL_1 + zR_1 = 1"), "{text}");
        let model = LpModel::parse(&text).unwrap();
        assert_eq!(model.binaries, vec!["zP_1", "zL_1", "zR_1"]);
        assert!(model.maximize);
        assert_eq!(model.constraints.len(), 4);
        // big-M = 10 * (3 + 0.5)
        assert!(text.contains("lo_1: p_1 - 3 zP_1 + 35 zL_1 - 3.5 zR_1 >= 0"), "{text}");
        assert!(text.contains("up_1: p_1 - 3 zP_1 - 2.5 zL_1 - 35 zR_1 <= 0"), "{text}");
    }

    #[test]
    fn bounded_rows_use_bounds() {
        let inst = single(Some(Bounds { lower: vec![1.25], upper: vec![7.0] }));
        let text = mip_lp_string(&inst, Some(99.0)).unwrap();
        assert!(text.contains("lo_1: p_1 - 3 zP_1 - 1.25 zL_1 - 3.5 zR_1 >= 0"), "{text}");
        assert!(text.contains("up_1: p_1 - 3 zP_1 - 2.5 zL_1 - 7 zR_1 <= 0"), "{text}");
        assert!(!text.contains("99"));
    }

    #[test]
    fn objective_matches_profit_plus_constant() {
        let inst = single(None);
        let model = LpModel::parse(&mip_lp_string(&inst, None).unwrap()).unwrap();
        for p in [3.0, 4.25, 1.0, 2.5] {
            let values = assignment_for(&inst, &[p]);
            assert!(model.violations(&values, 1e-9).is_empty());
            let obj = model.objective_value(&values).unwrap();
            let z = profit_z(&inst, &[p]).unwrap();
            assert!((obj - (z + profit_constant(&inst))).abs() < 1e-9);
            assert!((obj + objective_q(&inst, &[p]).unwrap()).abs() < 1e-9);
        }
        // infeasible: moved by less than delta
        let bad = assignment_for(&inst, &[3.2]);
        assert!(!model.violations(&bad, 1e-9).is_empty());
    }

    #[test]
    fn rejects_bad_big_m() {
        assert!(mip_lp_string(&single(None), Some(2.0)).is_err());
        assert!(mip_lp_string(&single(None), Some(f64::INFINITY)).is_err());
    }

    #[test]
    fn grammar_errors() {
        let ok = "Maximize\n obj: x + [ - x ^ 2 ] / 2\nSubject To\n c1: x <= 4\nBounds\n 0 <= x <= 3\nEnd\n";
        let m = LpModel::parse(ok).unwrap();
        assert_eq!(m.bounds["x"], (0.0, 3.0));
        assert_eq!(m.quadratic, vec![("x".into(), "x".into(), -0.5)]);
        for bad in [
            "Subject To\n c: x <= 1\nEnd\n",
            "Maximize\n obj: x\nSubject To\n c: x <= 1\n",
            "Maximize\n obj: x y\nSubject To\n c: x <= 1\nEnd\n",
            "Maximize\n obj: x + [ x ^ 2 ]\nSubject To\n c: x <= 1\nEnd\n",
            "Maximize\n obj: x\nSubject To\n c: x <= 1\n c: x >= 0\nEnd\n",
            "Maximize\n obj: x\nSubject To\n c: x 1\nEnd\n",
            "Maximize\n obj: x\nBounds\n x free\nSubject To\n c: x <= 1\nEnd\n",
            "Maximize\n obj: x\nSubject To\n c: x <= 1\nBinary\n y\nEnd\n",
        ] {
            assert!(LpModel::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn long_objectives_wrap() {
        let n = 300;
        let trip: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        let inst = Instance::new(
            10,
            vec![7.123456; n],
            CsrMatrix::from_triplets(n, &trip).unwrap(),
            vec![0.0; n],
            vec![3.0; n],
            vec![0.5; n],
            None,
        )
        .unwrap();
        let text = mip_lp_string(&inst, None).unwrap();
        assert!(text.lines().all(|l| l.len() <= WRAP));
        let model = LpModel::parse(&text).unwrap();
        assert_eq!(model.linear.len(), n);
        assert_eq!(model.binaries.len(), 3 * n);
    }
}
