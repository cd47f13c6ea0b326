// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::sexpr::{read, tokenize, Sexp, Tok};
use super::{CcdfgDocument, Design, ParseError, Pos, FORMAT_VERSION};
use crate::ir::{
    BinOp, BlockLabel, Ccdfg, Expression, Microstep, Operand, PhiChoice, PipelinedCcdfg, SchedulingStep, Statement,
    Terminator, VarName,
};

const KEYWORDS: &[&str] = &[
    "step",
    "micro",
    "jump",
    "branch",
    "entry",
    "meta",
    "pre:",
    "loop:",
    "post:",
    "prologue:",
    "fullstage:",
    "epilogue:",
];

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
    labels: BTreeSet<BlockLabel>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.0)
    }

    fn pos(&self) -> Pos {
        self.toks
            .get(self.i)
            .or(self.toks.last())
            .map(|t| t.1)
            .unwrap_or(Pos { line: 1, col: 1 })
    }

    fn unexpected(&self, message: &str) -> ParseError {
        let token = self.peek().map(Tok::describe).unwrap_or_else(|| "<eof>".into());
        ParseError::syntax(self.pos(), &token, message)
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Atom(a)) if a == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.peek_keyword(kw) {
            self.i += 1;
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected `{kw}`")))
        }
    }

    fn atom(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        match self.toks.get(self.i) {
            Some((Tok::Atom(a), pos)) if !KEYWORDS.contains(&a.as_str()) => {
                self.i += 1;
                Ok((a.clone(), *pos))
            }
            _ => Err(self.unexpected(&format!("expected {what}"))),
        }
    }

    fn string(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.i += 1;
                Ok(s)
            }
            _ => Err(self.unexpected("expected a quoted string")),
        }
    }

    fn label(&mut self) -> Result<(BlockLabel, Pos), ParseError> {
        let (a, pos) = self.atom("a step label")?;
        let label = BlockLabel::new(&a).map_err(|_| ParseError::syntax(pos, &a, "invalid step label"))?;
        Ok((label, pos))
    }

    fn region(&mut self, header: &str) -> Result<Vec<SchedulingStep>, ParseError> {
        self.keyword(header)?;
        let mut steps = Vec::new();
        while self.peek_keyword("step") {
            steps.push(self.step()?);
        }
        Ok(steps)
    }

    fn step(&mut self) -> Result<SchedulingStep, ParseError> {
        self.keyword("step")?;
        let (label, pos) = self.label()?;
        if !self.labels.insert(label.clone()) {
            return Err(ParseError::semantic(pos, format!("duplicate step label `{label}`")));
        }
        let mut microsteps = Vec::new();
        while self.peek_keyword("micro") {
            let mpos = self.pos();
            self.i += 1;
            let mut statements = Vec::new();
            while matches!(self.peek(), Some(Tok::Open)) {
                let sexp = read(&self.toks, &mut self.i)?;
                statements.push(statement(&sexp)?);
            }
            let micro = Microstep::new(statements).map_err(|e| ParseError::semantic(mpos, e.to_string()))?;
            microsteps.push(micro);
        }
        let terminator = if self.peek_keyword("jump") {
            self.i += 1;
            Some(Terminator::Jump(self.label()?.0))
        } else if self.peek_keyword("branch") {
            self.i += 1;
            let (cond, cpos) = self.atom("a branch condition")?;
            let cond = operand(&Sexp::Atom(cond, cpos))?;
            let taken = self.label()?.0;
            let not_taken = self.label()?.0;
            Some(Terminator::Branch { cond, taken, not_taken })
        } else {
            None
        };
        Ok(SchedulingStep {
            label,
            microsteps,
            terminator,
        })
    }
}

fn number(a: &str, pos: Pos) -> Result<Option<u64>, ParseError> {
    if !a.starts_with(|c: char| c.is_ascii_digit()) {
        return Ok(None);
    }
    let parsed = match a.strip_prefix("0x").or_else(|| a.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => a.parse::<u64>(),
    };
    parsed
        .map(Some)
        .map_err(|_| ParseError::syntax(pos, a, "invalid number literal"))
}

fn var(s: &Sexp) -> Result<VarName, ParseError> {
    match s {
        Sexp::Atom(a, pos) => VarName::new(a).map_err(|_| ParseError::syntax(*pos, a, "invalid variable name")),
        Sexp::List(_, pos) => Err(ParseError::syntax(*pos, "(", "expected a variable")),
    }
}

fn operand(s: &Sexp) -> Result<Operand, ParseError> {
    match s {
        Sexp::Atom(a, pos) => match number(a, *pos)? {
            Some(n) => Ok(Operand::Const(n)),
            None => Ok(Operand::Var(var(s)?)),
        },
        Sexp::List(_, pos) => Err(ParseError::syntax(
            *pos,
            "(",
            "arithmetic operands must be variables or literals",
        )),
    }
}

fn expression(s: &Sexp) -> Result<Expression, ParseError> {
    let (items, pos) = match s {
        Sexp::Atom(..) => {
            return Ok(match operand(s)? {
                Operand::Const(c) => Expression::Const(c),
                Operand::Var(v) => Expression::Var(v),
            })
        }
        Sexp::List(items, pos) => (items, *pos),
    };
    let Some(Sexp::Atom(head, hpos)) = items.first() else {
        return Err(ParseError::syntax(pos, "(", "expected an operator"));
    };
    let arity = |n: usize| {
        if items.len() == n + 1 {
            Ok(())
        } else {
            Err(ParseError::syntax(
                *hpos,
                head,
                format!("`{head}` takes {n} operand(s), got {}", items.len() - 1),
            ))
        }
    };
    match head.as_str() {
        "load" => {
            arity(1)?;
            Ok(Expression::Load(Box::new(expression(&items[1])?)))
        }
        "gep" => {
            arity(2)?;
            Ok(Expression::GetElemPtr {
                base: var(&items[1])?,
                offset: Box::new(expression(&items[2])?),
            })
        }
        "phi" => Err(ParseError::syntax(
            *hpos,
            head,
            "phi is a statement form, not an operand",
        )),
        other => match BinOp::from_mnemonic(other) {
            Some(op) => {
                arity(2)?;
                Ok(Expression::binary(op, operand(&items[1])?, operand(&items[2])?))
            }
            None => Err(ParseError::syntax(*hpos, head, "unknown operator")),
        },
    }
}

fn statement(s: &Sexp) -> Result<Statement, ParseError> {
    let Sexp::List(items, pos) = s else {
        return Err(ParseError::syntax(s.pos(), &s.describe(), "expected a statement"));
    };
    match items.as_slice() {
        [Sexp::Atom(head, _), addr, value] if head == "store" => {
            Ok(Statement::store(expression(addr)?, expression(value)?))
        }
        [target, Sexp::List(rhs, rpos)] if matches!(rhs.first(), Some(Sexp::Atom(h, _)) if h == "phi") => {
            let target = var(target)?;
            let choices = match rhs.as_slice() {
                [_, Sexp::List(choices, _)] => choices,
                _ => return Err(ParseError::syntax(*rpos, "phi", "expected (phi ((E0 b) (E1 b')))")),
            };
            if choices.len() != 2 {
                return Err(ParseError::semantic(
                    *rpos,
                    format!("phi requires exactly two choices, got {}", choices.len()),
                ));
            }
            let mut parsed = Vec::with_capacity(2);
            for c in choices {
                match c {
                    Sexp::List(pair, _) if pair.len() == 2 => {
                        let pred = match &pair[1] {
                            Sexp::Atom(a, p) => {
                                BlockLabel::new(a).map_err(|_| ParseError::syntax(*p, a, "invalid block label"))?
                            }
                            other => return Err(ParseError::syntax(other.pos(), "(", "expected a block label")),
                        };
                        parsed.push(PhiChoice {
                            value: expression(&pair[0])?,
                            pred,
                        });
                    }
                    other => {
                        return Err(ParseError::syntax(
                            other.pos(),
                            &other.describe(),
                            "expected (expr block)",
                        ))
                    }
                }
            }
            let second = parsed.pop().expect("two choices");
            let first = parsed.pop().expect("two choices");
            Statement::phi(target, first, second).map_err(|e| ParseError::semantic(*rpos, e.to_string()))
        }
        [target, rhs] => Ok(Statement::assign(var(target)?, expression(rhs)?)),
        _ => Err(ParseError::syntax(
            *pos,
            "(",
            "expected (var expr), (var (phi ...)) or (store addr value)",
        )),
    }
}

pub fn parse_ccdfg(text: &str) -> Result<CcdfgDocument, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        i: 0,
        labels: BTreeSet::new(),
    };
    p.keyword("ccdfg-format")?;
    let (version, vpos) = p.atom("a format version")?;
    if version != FORMAT_VERSION {
        return Err(ParseError::semantic(
            vpos,
            format!("unsupported format version `{version}`"),
        ));
    }
    p.keyword("design")?;
    let (kind, kpos) = p.atom("`sequential` or `pipelined`")?;
    let mut entry = None;
    let mut meta = BTreeMap::new();
    loop {
        if p.peek_keyword("entry") {
            p.i += 1;
            let (label, pos) = p.label()?;
            if entry.replace(label).is_some() {
                return Err(ParseError::semantic(pos, "entry given twice"));
            }
        } else if p.peek_keyword("meta") {
            let pos = p.pos();
            p.i += 1;
            let key = p.string()?;
            let value = p.string()?;
            if meta.insert(key.clone(), value).is_some() {
                return Err(ParseError::semantic(pos, format!("duplicate meta key `{key}`")));
            }
        } else {
            break;
        }
    }
    let design = match kind.as_str() {
        "sequential" => {
            let entry = match entry {
                Some(e) => e,
                None => BlockLabel::new("Entry").expect("valid label"),
            };
            p.labels.insert(entry.clone());
            let pre = p.region("pre:")?;
            let body = p.region("loop:")?;
            let post = p.region("post:")?;
            Design::Sequential(Ccdfg { entry, pre, body, post })
        }
        "pipelined" => {
            if entry.is_some() {
                return Err(ParseError::semantic(kpos, "pipelined designs take no entry label"));
            }
            let prologue = p.region("prologue:")?;
            let fullstage = p.region("fullstage:")?;
            let epilogue = p.region("epilogue:")?;
            Design::Pipelined(PipelinedCcdfg {
                prologue,
                fullstage,
                epilogue,
            })
        }
        other => return Err(ParseError::syntax(kpos, other, "expected `sequential` or `pipelined`")),
    };
    if p.peek().is_some() {
        return Err(p.unexpected("trailing input"));
    }
    Ok(CcdfgDocument { version, design, meta })
}

/// Parses raw bytes; anything that is not UTF-8 is a syntax error.
pub fn parse_ccdfg_bytes(bytes: &[u8]) -> Result<CcdfgDocument, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_ccdfg(text),
        Err(e) => {
            let prefix = &bytes[..e.valid_up_to()];
            let line = 1 + prefix.iter().filter(|&&b| b == b'\n').count();
            let col = 1 + prefix.iter().rev().take_while(|&&b| b != b'\n').count();
            Err(ParseError::syntax(
                Pos { line, col },
                "<bytes>",
                "input is not valid UTF-8",
            ))
        }
    }
}

fn write_operand(out: &mut String, o: &Operand) {
    match o {
        Operand::Var(v) => out.push_str(v.as_str()),
        Operand::Const(c) => {
            let _ = write!(out, "{c}");
        }
    }
}

fn write_expr(out: &mut String, e: &Expression) {
    match e {
        Expression::Const(c) => {
            let _ = write!(out, "{c}");
        }
        Expression::Var(v) => out.push_str(v.as_str()),
        Expression::Binary { op, lhs, rhs } => {
            out.push('(');
            out.push_str(op.mnemonic());
            out.push(' ');
            write_operand(out, lhs);
            out.push(' ');
            write_operand(out, rhs);
            out.push(')');
        }
        Expression::Load(addr) => {
            out.push_str("(load ");
            write_expr(out, addr);
            out.push(')');
        }
        Expression::GetElemPtr { base, offset } => {
            let _ = write!(out, "(gep {base} ");
            write_expr(out, offset);
            out.push(')');
        }
    }
}

pub(crate) fn write_statement(out: &mut String, st: &Statement) {
    match st {
        Statement::Assign { target, rhs } => {
            let _ = write!(out, "({target} ");
            write_expr(out, rhs);
            out.push(')');
        }
        Statement::Store { addr, value } => {
            out.push_str("(store ");
            write_expr(out, addr);
            out.push(' ');
            write_expr(out, value);
            out.push(')');
        }
        Statement::Phi { target, choices } => {
            let _ = write!(out, "({target} (phi (");
            for (i, c) in choices.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push('(');
                write_expr(out, &c.value);
                let _ = write!(out, " {})", c.pred);
            }
            out.push_str(")))");
        }
    }
}

fn write_region(out: &mut String, header: &str, steps: &[SchedulingStep]) {
    out.push_str(header);
    out.push('\n');
    for s in steps {
        let _ = writeln!(out, "  step {}", s.label);
        for m in &s.microsteps {
            out.push_str("    micro");
            for st in m.statements() {
                out.push(' ');
                write_statement(out, st);
            }
            out.push('\n');
        }
        match &s.terminator {
            None => {}
            Some(Terminator::Jump(t)) => {
                let _ = writeln!(out, "    jump {t}");
            }
            Some(Terminator::Branch { cond, taken, not_taken }) => {
                out.push_str("    branch ");
                write_operand(out, cond);
                let _ = writeln!(out, " {taken} {not_taken}");
            }
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
    out.push('"');
    out
}

/// Canonical text: program order is kept, whitespace is normalized and
/// meta entries are sorted by key.
pub fn serialize_ccdfg(d: &CcdfgDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ccdfg-format {}", d.version);
    let kind = match d.design {
        Design::Sequential(_) => "sequential",
        Design::Pipelined(_) => "pipelined",
    };
    let _ = writeln!(out, "design {kind}");
    if let Design::Sequential(c) = &d.design {
        let _ = writeln!(out, "entry {}", c.entry);
    }
    for (k, v) in &d.meta {
        let _ = writeln!(out, "meta {} {}", quote(k), quote(v));
    }
    match &d.design {
        Design::Sequential(c) => {
            write_region(&mut out, "pre:", &c.pre);
            write_region(&mut out, "loop:", &c.body);
            write_region(&mut out, "post:", &c.post);
        }
        Design::Pipelined(p) => {
            write_region(&mut out, "prologue:", &p.prologue);
            write_region(&mut out, "fullstage:", &p.fullstage);
            write_region(&mut out, "epilogue:", &p.epilogue);
        }
    }
    out
}
