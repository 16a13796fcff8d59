//! Recursive-descent parser; stops at the first error.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::lexer::{tokenize, Pos, Tok, Token};
use super::{DslError, EstimandDecl, NodeDecl, ParseError, SemanticError, SpecError, StudySpec};
use crate::estimand::{EstimandError, StrategyTag};
use crate::graph::{Role, Value, VarName};
use crate::oracle::expr::{BinOp, Expr, UnOp};
use crate::oracle::{Mechanism, ScmSpec, ScmVariable};

const MAX_DEPTH: usize = 64;

pub fn parse(text: &str) -> Result<StudySpec, DslError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        i: 0,
        depth: 0,
        where_: Locations::default(),
    };
    let raw = p.study()?;
    raw.build(&p.where_)
}

#[derive(Default)]
struct Locations {
    study: Option<Pos>,
    nodes: BTreeMap<String, Pos>,
    strategies: BTreeMap<String, Pos>,
    estimand: Option<Pos>,
    scm: BTreeMap<String, Pos>,
}

impl Locations {
    fn locate(&self, err: &SpecError) -> Pos {
        let fallback = self.study.unwrap_or(Pos { line: 1, column: 1 });
        let strategy_first = matches!(
            err,
            SpecError::StrategyTarget(_)
                | SpecError::LevelOutsideSupport { .. }
                | SpecError::PrincipalStratumVar { .. }
                | SpecError::Estimand(_)
        );
        let estimand = matches!(
            err,
            SpecError::EstimandOutcome(_)
                | SpecError::EstimandTreatment(_)
                | SpecError::EstimandLevels(_)
        );
        if estimand {
            return self.estimand.unwrap_or(fallback);
        }
        if let SpecError::Scm(_) = err {
            if let Some(pos) = err.subject().and_then(|s| self.scm.get(s)) {
                return *pos;
            }
        }
        let Some(subject) = err.subject() else {
            return fallback;
        };
        let ordered = if strategy_first {
            [&self.strategies, &self.nodes]
        } else {
            [&self.nodes, &self.strategies]
        };
        ordered
            .iter()
            .find_map(|m| m.get(subject))
            .copied()
            .unwrap_or(fallback)
    }
}

/// Parent names and rows of a `table(...)` mechanism.
type RawTable = (Vec<VarName>, BTreeMap<Vec<i64>, i64>);

struct RawScmEntry {
    name: VarName,
    table: Option<RawTable>,
    expr: Option<Expr>,
    noise: Vec<(i64, BigRational)>,
}

struct RawStudy {
    name: String,
    nodes: Vec<NodeDecl>,
    edges: Vec<(VarName, VarName)>,
    strategies: BTreeMap<VarName, StrategyTag>,
    estimand: EstimandDecl,
    scm: Option<Vec<RawScmEntry>>,
}

impl RawStudy {
    fn build(self, where_: &Locations) -> Result<StudySpec, DslError> {
        let semantic = |err: SpecError| {
            let pos = where_.locate(&err);
            DslError::Semantic(SemanticError {
                line: pos.line,
                column: pos.column,
                message: err.to_string(),
            })
        };
        let spec = StudySpec::new(
            self.name,
            self.nodes,
            self.edges,
            self.strategies,
            self.estimand,
            None,
        )
        .map_err(semantic)?;
        let Some(entries) = self.scm else {
            return Ok(spec);
        };
        let parents = spec.parent_map();
        let mut scm = ScmSpec::default();
        for entry in entries {
            let support = spec
                .node(&entry.name)
                .map(|d| d.values.clone())
                .unwrap_or_default();
            let (parents, mechanism) = match (entry.table, entry.expr) {
                (Some((ps, rows)), _) => (ps, Mechanism::Table(rows)),
                (None, Some(e)) => (
                    parents.get(&entry.name).cloned().unwrap_or_default(),
                    Mechanism::Expr(e),
                ),
                (None, None) => unreachable!("entry has a mechanism"),
            };
            scm.variables.insert(
                entry.name,
                ScmVariable {
                    parents,
                    support,
                    mechanism,
                    noise: entry.noise,
                },
            );
        }
        spec.with_scm(Some(scm)).map_err(semantic)
    }
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    depth: usize,
    where_: Locations,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if t != Tok::Eof {
            self.i += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        let pos = self.pos();
        ParseError {
            line: pos.line,
            column: pos.column,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        self.error_here(format!("unexpected {}", self.peek().describe()), expected)
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            let want = format!("`{}`", tok.symbol());
            Err(self.unexpected(&[&want]))
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        if self.at_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            let want = format!("`{kw}`");
            Err(self.unexpected(&[&want]))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn var_name(&mut self) -> PResult<(VarName, Pos)> {
        let pos = self.pos();
        let s = self.ident()?;
        let name = VarName::new(s.clone()).map_err(|e| ParseError {
            line: pos.line,
            column: pos.column,
            message: e.to_string(),
            expected: Vec::new(),
        })?;
        Ok((name, pos))
    }

    fn int(&mut self) -> PResult<i64> {
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match *self.peek() {
            Tok::Int(v) => {
                self.bump();
                Ok(if negative { -v } else { v })
            }
            _ => Err(self.unexpected(&["integer"])),
        }
    }

    fn study(&mut self) -> PResult<RawStudy> {
        self.where_.study = Some(self.pos());
        self.keyword("study")?;
        let name = self.ident()?;
        self.expect(Tok::LBrace)?;
        let mut nodes = Vec::new();
        while self.at_keyword("node") {
            nodes.push(self.node()?);
        }
        if nodes.is_empty() {
            return Err(self.unexpected(&["`node`"]));
        }
        if !self.at_keyword("edges") {
            return Err(self.unexpected(&["`node`", "`edges`"]));
        }
        let edges = self.edges()?;
        let strategies = if self.at_keyword("strategy") {
            self.strategy()?
        } else if self.at_keyword("estimand") {
            BTreeMap::new()
        } else {
            return Err(self.unexpected(&["`strategy`", "`estimand`"]));
        };
        if !self.at_keyword("estimand") {
            return Err(self.unexpected(&["`estimand`"]));
        }
        let estimand = self.estimand()?;
        let scm = if self.at_keyword("scm") {
            Some(self.scm()?)
        } else if *self.peek() == Tok::RBrace {
            None
        } else {
            return Err(self.unexpected(&["`scm`", "`}`"]));
        };
        self.expect(Tok::RBrace)?;
        if *self.peek() != Tok::Eof {
            return Err(self.unexpected(&["end of input"]));
        }
        Ok(RawStudy {
            name,
            nodes,
            edges,
            strategies,
            estimand,
            scm,
        })
    }

    fn node(&mut self) -> PResult<NodeDecl> {
        self.keyword("node")?;
        let (name, pos) = self.var_name()?;
        self.where_.nodes.entry(name.to_string()).or_insert(pos);
        let mut role = None;
        let mut observed = None;
        let mut adjust = None;
        let mut values = None;
        if *self.peek() == Tok::LBrace {
            self.bump();
            loop {
                let key_pos = self.pos();
                let key = self.ident()?;
                self.expect(Tok::Colon)?;
                let duplicate = match key.as_str() {
                    "role" => role.replace(self.role()?).is_some(),
                    "observed" => observed.replace(self.boolean()?).is_some(),
                    "adjust" => adjust.replace(self.boolean()?).is_some(),
                    "values" => values.replace(self.value_list()?).is_some(),
                    _ => {
                        return Err(ParseError {
                            line: key_pos.line,
                            column: key_pos.column,
                            message: format!("unknown attribute `{key}`"),
                            expected: ["`role`", "`observed`", "`adjust`", "`values`"]
                                .map(String::from)
                                .to_vec(),
                        })
                    }
                };
                if duplicate {
                    return Err(ParseError {
                        line: key_pos.line,
                        column: key_pos.column,
                        message: format!("attribute `{key}` given twice"),
                        expected: Vec::new(),
                    });
                }
                match self.peek() {
                    Tok::Comma => {
                        self.bump();
                    }
                    Tok::RBrace => {
                        self.bump();
                        break;
                    }
                    _ => return Err(self.unexpected(&["`,`", "`}`"])),
                }
            }
        }
        self.expect(Tok::Semi)?;
        let observed = observed.unwrap_or_else(|| role != Some(Role::Latent));
        let role = role.unwrap_or_else(|| NodeDecl::default_role(observed));
        let mut values = values.unwrap_or_else(|| vec![0, 1]);
        values.sort_unstable();
        Ok(NodeDecl {
            name,
            role,
            observed,
            adjust: adjust.unwrap_or(false),
            values,
        })
    }

    fn role(&mut self) -> PResult<Role> {
        const ROLES: &[&str] = &[
            "`treatment`",
            "`intercurrent`",
            "`outcome`",
            "`covariate`",
            "`latent`",
        ];
        match self.peek().clone() {
            Tok::Ident(s) => match s.parse::<Role>() {
                Ok(r) if r != Role::Derived => {
                    self.bump();
                    Ok(r)
                }
                _ => Err(self.error_here(format!("unknown role `{s}`"), ROLES)),
            },
            _ => Err(self.unexpected(ROLES)),
        }
    }

    fn boolean(&mut self) -> PResult<bool> {
        match self.peek() {
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(true)
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(false)
            }
            _ => Err(self.unexpected(&["`true`", "`false`"])),
        }
    }

    fn value_list(&mut self) -> PResult<Vec<i64>> {
        self.expect(Tok::LBracket)?;
        let mut out = vec![self.int()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.int()?);
        }
        self.expect(Tok::RBracket)?;
        Ok(out)
    }

    fn edges(&mut self) -> PResult<Vec<(VarName, VarName)>> {
        self.keyword("edges")?;
        self.expect(Tok::LBrace)?;
        let mut edges = Vec::new();
        while *self.peek() != Tok::RBrace {
            let (from, _) = self.var_name()?;
            self.expect(Tok::Arrow)?;
            let (to, _) = self.var_name()?;
            self.expect(Tok::Semi)?;
            edges.push((from, to));
        }
        self.bump();
        Ok(edges)
    }

    fn strategy(&mut self) -> PResult<BTreeMap<VarName, StrategyTag>> {
        self.keyword("strategy")?;
        self.expect(Tok::LBrace)?;
        let mut out = BTreeMap::new();
        loop {
            let (ie, pos) = self.var_name()?;
            self.expect(Tok::Colon)?;
            let tag = self.strategy_tag()?;
            self.expect(Tok::Semi)?;
            if out.insert(ie.clone(), tag).is_some() {
                let err = SpecError::Estimand(EstimandError::ConflictingStrategies(ie.to_string()));
                return Err(ParseError {
                    line: pos.line,
                    column: pos.column,
                    message: err.to_string(),
                    expected: Vec::new(),
                });
            }
            self.where_.strategies.insert(ie.to_string(), pos);
            if *self.peek() == Tok::RBrace {
                self.bump();
                return Ok(out);
            }
        }
    }

    fn strategy_tag(&mut self) -> PResult<StrategyTag> {
        const TAGS: &[&str] = &[
            "`treatment_policy`",
            "`hypothetical`",
            "`composite`",
            "`principal_stratum`",
        ];
        let Tok::Ident(kw) = self.peek().clone() else {
            return Err(self.unexpected(TAGS));
        };
        let tag = match kw.as_str() {
            "treatment_policy" => {
                self.bump();
                StrategyTag::TreatmentPolicy
            }
            "hypothetical" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let v = self.int()?;
                self.expect(Tok::RParen)?;
                StrategyTag::Hypothetical(Value::Int(v))
            }
            "composite" => {
                self.bump();
                self.expect(Tok::LParen)?;
                self.keyword("failure")?;
                self.expect(Tok::Assign)?;
                let v = self.int()?;
                self.expect(Tok::RParen)?;
                StrategyTag::Composite {
                    failure: Value::Int(v),
                }
            }
            "principal_stratum" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let (var, _) = self.var_name()?;
                self.expect(Tok::LParen)?;
                let under = self.int()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Assign)?;
                let equals = self.int()?;
                self.expect(Tok::RParen)?;
                StrategyTag::PrincipalStratum {
                    var,
                    under: Value::Int(under),
                    equals: Value::Int(equals),
                }
            }
            _ => return Err(self.error_here(format!("unknown strategy `{kw}`"), TAGS)),
        };
        Ok(tag)
    }

    fn estimand(&mut self) -> PResult<EstimandDecl> {
        self.where_.estimand = Some(self.pos());
        self.keyword("estimand")?;
        self.expect(Tok::LBrace)?;
        self.keyword("mean_difference")?;
        self.expect(Tok::LParen)?;
        let (outcome, _) = self.var_name()?;
        self.expect(Tok::Semi)?;
        let (treatment, _) = self.var_name()?;
        self.expect(Tok::Assign)?;
        let left = self.int()?;
        self.keyword("vs")?;
        let at = self.pos();
        let (other, _) = self.var_name()?;
        if other != treatment {
            return Err(ParseError {
                line: at.line,
                column: at.column,
                message: format!("both arms must set `{treatment}`, found `{other}`"),
                expected: vec![format!("`{treatment}`")],
            });
        }
        self.expect(Tok::Assign)?;
        let right = self.int()?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::RBrace)?;
        Ok(EstimandDecl {
            outcome,
            treatment,
            left,
            right,
        })
    }

    fn scm(&mut self) -> PResult<Vec<RawScmEntry>> {
        self.keyword("scm")?;
        self.expect(Tok::LBrace)?;
        let mut entries: Vec<RawScmEntry> = Vec::new();
        loop {
            let (name, pos) = self.var_name()?;
            if entries.iter().any(|e| e.name == name) {
                return Err(ParseError {
                    line: pos.line,
                    column: pos.column,
                    message: format!("second mechanism for `{name}`"),
                    expected: Vec::new(),
                });
            }
            self.where_.scm.insert(name.to_string(), pos);
            self.expect(Tok::Define)?;
            let (table, expr) = if self.at_keyword("table") {
                (Some(self.table()?), None)
            } else {
                (None, Some(self.expr()?))
            };
            let noise = if *self.peek() == Tok::Tilde {
                self.bump();
                self.noise()?
            } else {
                ScmVariable::degenerate_noise()
            };
            self.expect(Tok::Semi)?;
            entries.push(RawScmEntry {
                name,
                table,
                expr,
                noise,
            });
            if *self.peek() == Tok::RBrace {
                self.bump();
                return Ok(entries);
            }
        }
    }

    fn table(&mut self) -> PResult<RawTable> {
        self.keyword("table")?;
        self.expect(Tok::LParen)?;
        let mut header = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let (p, pos) = self.var_name()?;
                if header.contains(&p) {
                    return Err(ParseError {
                        line: pos.line,
                        column: pos.column,
                        message: format!("parent `{p}` listed twice"),
                        expected: Vec::new(),
                    });
                }
                header.push(p);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        // columns are stored in sorted parent order
        let mut order: Vec<usize> = (0..header.len()).collect();
        order.sort_by(|&a, &b| header[a].cmp(&header[b]));
        let parents: Vec<VarName> = order.iter().map(|&i| header[i].clone()).collect();

        self.expect(Tok::LBrace)?;
        let mut rows = BTreeMap::new();
        while *self.peek() != Tok::RBrace {
            let pos = self.pos();
            let key = self.value_list()?;
            if key.len() != header.len() + 1 {
                return Err(ParseError {
                    line: pos.line,
                    column: pos.column,
                    message: format!(
                        "row has {} entries; expected {} parent values and a noise value",
                        key.len(),
                        header.len()
                    ),
                    expected: Vec::new(),
                });
            }
            self.expect(Tok::Colon)?;
            let out = self.int()?;
            let mut sorted: Vec<i64> = order.iter().map(|&i| key[i]).collect();
            sorted.push(key[header.len()]);
            if rows.insert(sorted, out).is_some() {
                return Err(ParseError {
                    line: pos.line,
                    column: pos.column,
                    message: format!("duplicate row {key:?}"),
                    expected: Vec::new(),
                });
            }
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RBrace => {}
                _ => return Err(self.unexpected(&["`,`", "`}`"])),
            }
        }
        self.bump();
        Ok((parents, rows))
    }

    fn noise(&mut self) -> PResult<Vec<(i64, BigRational)>> {
        self.expect(Tok::LBrace)?;
        let mut out: Vec<(i64, BigRational)> = Vec::new();
        loop {
            let pos = self.pos();
            let v = self.int()?;
            self.expect(Tok::Colon)?;
            let p = self.rational()?;
            if out.iter().any(|(x, _)| *x == v) {
                return Err(ParseError {
                    line: pos.line,
                    column: pos.column,
                    message: format!("noise value {v} listed twice"),
                    expected: Vec::new(),
                });
            }
            out.push((v, p));
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                _ => return Err(self.unexpected(&["`,`", "`}`"])),
            }
        }
        out.sort_by_key(|(v, _)| *v);
        Ok(out)
    }

    fn rational(&mut self) -> PResult<BigRational> {
        let Tok::Int(n) = *self.peek() else {
            return Err(self.unexpected(&["probability"]));
        };
        self.bump();
        let d = if *self.peek() == Tok::Slash {
            self.bump();
            match *self.peek() {
                Tok::Int(0) => return Err(self.error_here("zero denominator", &[])),
                Tok::Int(d) => {
                    self.bump();
                    d
                }
                _ => return Err(self.unexpected(&["integer"])),
            }
        } else {
            1
        };
        Ok(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error_here(format!("expression nested deeper than {MAX_DEPTH}"), &[]));
        }
        Ok(())
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.enter()?;
        let out = if self.at_keyword("if") {
            self.bump();
            let c = self.expr()?;
            self.keyword("then")?;
            let t = self.expr()?;
            self.keyword("else")?;
            let e = self.expr()?;
            Expr::If(Box::new(c), Box::new(t), Box::new(e))
        } else {
            self.or()?
        };
        self.depth -= 1;
        Ok(out)
    }

    fn binary_chain(
        &mut self,
        next: fn(&mut Self) -> PResult<Expr>,
        ops: &[(Tok, BinOp)],
    ) -> PResult<Expr> {
        let mut lhs = next(self)?;
        while let Some(&(_, op)) = ops.iter().find(|(t, _)| t == self.peek()) {
            self.bump();
            let rhs = next(self)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> PResult<Expr> {
        self.binary_chain(Self::and, &[(Tok::OrOr, BinOp::Or)])
    }

    fn and(&mut self) -> PResult<Expr> {
        self.binary_chain(Self::comparison, &[(Tok::AndAnd, BinOp::And)])
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.additive()?;
        Ok(Expr::Binary(op, Box::new(lhs), Box::new(rhs)))
    }

    fn additive(&mut self) -> PResult<Expr> {
        self.binary_chain(
            Self::multiplicative,
            &[(Tok::Plus, BinOp::Add), (Tok::Minus, BinOp::Sub)],
        )
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        self.binary_chain(
            Self::unary,
            &[
                (Tok::Star, BinOp::Mul),
                (Tok::Slash, BinOp::Div),
                (Tok::Percent, BinOp::Rem),
            ],
        )
    }

    fn unary(&mut self) -> PResult<Expr> {
        let op = match self.peek() {
            Tok::Minus => UnOp::Neg,
            Tok::Bang => UnOp::Not,
            _ => return self.primary(),
        };
        self.bump();
        self.enter()?;
        let inner = self.unary()?;
        self.depth -= 1;
        Ok(Expr::Unary(op, Box::new(inner)))
    }

    fn primary(&mut self) -> PResult<Expr> {
        const START: &[&str] = &[
            "integer", "variable", "`noise`", "`(`", "`if`", "`min`", "`max`",
        ];
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(s) if s == "noise" => {
                self.bump();
                Ok(Expr::Noise)
            }
            Tok::Ident(s) if s == "if" => self.expr(),
            Tok::Ident(s) if s == "min" || s == "max" => {
                self.bump();
                let op = if s == "min" { BinOp::Min } else { BinOp::Max };
                self.expect(Tok::LParen)?;
                let l = self.expr()?;
                self.expect(Tok::Comma)?;
                let r = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(Expr::Binary(op, Box::new(l), Box::new(r)))
            }
            Tok::Ident(s) if super::RESERVED.contains(&s.as_str()) => Err(self.unexpected(START)),
            Tok::Ident(_) => {
                let (name, _) = self.var_name()?;
                Ok(Expr::Var(name))
            }
            _ => Err(self.unexpected(START)),
        }
    }
}
