//! Expression language for metric functions, measures and curves.
//!
//! ```text
//! expr     = term { ("+" | "-") term } ;
//! term     = unary { ("*" | "/") unary } ;
//! unary    = "-" unary | power ;
//! power    = atom [ "^" exponent ] ;
//! exponent = unary ;                       (* must fold to a number *)
//! atom     = number | ident [ "(" expr ")" ] | "(" expr ")" ;
//! ```
//!
//! Identifiers are `x1..xn`, `y1..yn`, declared parameters, bound names (for
//! example the curve parameter `s`), the constant `pi`, and the functions
//! `sqrt exp log sin cos abs`.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{EvalError, ParseError, SourceSpan};
use crate::jet::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X(usize),
    Y(usize),
    /// Index into the environment's extra bound scalars.
    Bound(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryFn {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Abs,
}

impl UnaryFn {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sqrt" => UnaryFn::Sqrt,
            "exp" => UnaryFn::Exp,
            "log" => UnaryFn::Log,
            "sin" => UnaryFn::Sin,
            "cos" => UnaryFn::Cos,
            "abs" => UnaryFn::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Exp => "exp",
            UnaryFn::Log => "log",
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(Var),
    Param(String),
    Neg(Box<Expr>),
    Call(UnaryFn, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
}

/// AST node with its source location. Equality ignores spans.
#[derive(Debug, Clone)]
pub struct Expr {
    pub node: Node,
    pub span: SourceSpan,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

impl Expr {
    fn new(node: Node, span: SourceSpan) -> Self {
        Expr { node, span }
    }

    fn precedence(&self) -> u8 {
        match &self.node {
            Node::Binary(op, ..) => op.precedence(),
            Node::Neg(_) => 3,
            Node::Pow(..) => 4,
            _ => 5,
        }
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match &self.node {
            Node::Neg(e) | Node::Call(_, e) | Node::Pow(e, _) => e.visit(f),
            Node::Binary(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            _ => {}
        }
    }

    fn fold_constant(&self) -> Option<f64> {
        match &self.node {
            Node::Num(v) => Some(*v),
            Node::Neg(e) => e.fold_constant().map(|v| -v),
            Node::Pow(b, p) => b.fold_constant().map(|v| v.powf(*p)),
            Node::Binary(op, l, r) => {
                let (a, b) = (l.fold_constant()?, r.fold_constant()?);
                Some(match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                })
            }
            Node::Call(func, e) => {
                let v = e.fold_constant()?;
                Some(match func {
                    UnaryFn::Sqrt => v.sqrt(),
                    UnaryFn::Exp => v.exp(),
                    UnaryFn::Log => v.ln(),
                    UnaryFn::Sin => v.sin(),
                    UnaryFn::Cos => v.cos(),
                    UnaryFn::Abs => v.abs(),
                })
            }
            Node::Var(_) | Node::Param(_) => None,
        }
    }
}

/// A parsed expression together with the context it was parsed in.
#[derive(Debug, Clone)]
pub struct Expression {
    root: Expr,
    dimension: usize,
    parameters: Vec<String>,
    bound: Vec<String>,
    source: String,
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.dimension == other.dimension
    }
}

impl Serialize for Expression {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl Expression {
    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn parameters(&self) -> &[String] {
        &self.parameters
    }

    /// True if any node is `abs(..)`, which is not smooth at zero.
    pub fn uses_abs(&self) -> bool {
        let mut found = false;
        self.root.visit(&mut |e| {
            if matches!(e.node, Node::Call(UnaryFn::Abs, _)) {
                found = true;
            }
        });
        found
    }

    pub fn references_x(&self) -> bool {
        self.references(|v| matches!(v, Var::X(_)))
    }

    pub fn references_y(&self) -> bool {
        self.references(|v| matches!(v, Var::Y(_)))
    }

    fn references(&self, pred: impl Fn(Var) -> bool) -> bool {
        let mut found = false;
        self.root.visit(&mut |e| {
            if let Node::Var(v) = e.node {
                found |= pred(v);
            }
        });
        found
    }

    /// Evaluates over any scalar; jets propagate derivatives.
    pub fn evaluate<S: Scalar>(&self, env: &Env<'_, S>) -> Result<S, EvalError> {
        eval_node(&self.root, env, self)
    }

    /// Plain-number evaluation.
    pub fn evaluate_f64(
        &self,
        x: &[f64],
        y: &[f64],
        params: &BTreeMap<String, f64>,
    ) -> Result<f64, EvalError> {
        self.evaluate(&Env::new(x, y, params))
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, &self.root, 0, &self.bound)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8, bound: &[String]) -> fmt::Result {
    let prec = e.precedence();
    let wrap = prec < min_prec;
    if wrap {
        f.write_str("(")?;
    }
    match &e.node {
        Node::Num(v) => write!(f, "{v}")?,
        Node::Var(Var::X(i)) => write!(f, "x{}", i + 1)?,
        Node::Var(Var::Y(i)) => write!(f, "y{}", i + 1)?,
        Node::Var(Var::Bound(i)) => f.write_str(&bound[*i])?,
        Node::Param(name) => f.write_str(name)?,
        Node::Neg(inner) => {
            f.write_str("-")?;
            write_expr(f, inner, 3, bound)?;
        }
        Node::Call(func, arg) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, arg, 0, bound)?;
            f.write_str(")")?;
        }
        Node::Binary(op, l, r) => {
            write_expr(f, l, prec, bound)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, r, prec + 1, bound)?;
        }
        Node::Pow(base, p) => {
            write_expr(f, base, 5, bound)?;
            if *p < 0.0 || (*p == 0.0 && p.is_sign_negative()) {
                write!(f, "^({p})")?;
            } else {
                write!(f, "^{p}")?;
            }
        }
    }
    if wrap {
        f.write_str(")")?;
    }
    Ok(())
}

/// Variable bindings for evaluation.
pub struct Env<'a, S> {
    pub x: &'a [S],
    pub y: &'a [S],
    pub bound: &'a [S],
    pub params: &'a BTreeMap<String, f64>,
}

impl<'a, S> Env<'a, S> {
    pub fn new(x: &'a [S], y: &'a [S], params: &'a BTreeMap<String, f64>) -> Self {
        Env {
            x,
            y,
            bound: &[],
            params,
        }
    }

    pub fn with_bound(mut self, bound: &'a [S]) -> Self {
        self.bound = bound;
        self
    }

    fn template(&self) -> Option<&S> {
        self.y
            .first()
            .or_else(|| self.x.first())
            .or_else(|| self.bound.first())
    }
}

fn domain(op: &'static str, value: f64, span: SourceSpan) -> EvalError {
    EvalError::Domain { op, value, span }
}

fn eval_node<S: Scalar>(e: &Expr, env: &Env<'_, S>, ctx: &Expression) -> Result<S, EvalError> {
    let constant = |v: f64| -> Result<S, EvalError> {
        env.template()
            .map(|t| t.lift(v))
            .ok_or_else(|| EvalError::UnboundVariable {
                name: "<scalar context>".into(),
                span: e.span,
            })
    };
    match &e.node {
        Node::Num(v) => constant(*v),
        Node::Param(name) => match env.params.get(name) {
            Some(v) => constant(*v),
            None => Err(EvalError::UnboundParameter {
                name: name.clone(),
                span: e.span,
            }),
        },
        Node::Var(var) => {
            let (slot, name) = match var {
                Var::X(i) => (env.x.get(*i), format!("x{}", i + 1)),
                Var::Y(i) => (env.y.get(*i), format!("y{}", i + 1)),
                Var::Bound(i) => (
                    env.bound.get(*i),
                    ctx.bound.get(*i).cloned().unwrap_or_default(),
                ),
            };
            slot.cloned()
                .ok_or(EvalError::UnboundVariable { name, span: e.span })
        }
        Node::Neg(inner) => Ok(-eval_node(inner, env, ctx)?),
        Node::Call(func, arg) => {
            let a = eval_node(arg, env, ctx)?;
            let v = a.value();
            Ok(match func {
                UnaryFn::Sqrt => {
                    if v.is_nan() || v <= 0.0 {
                        return Err(domain("sqrt", v, e.span));
                    }
                    a.sqrt()
                }
                UnaryFn::Log => {
                    if v.is_nan() || v <= 0.0 {
                        return Err(domain("log", v, e.span));
                    }
                    a.ln()
                }
                UnaryFn::Exp => a.exp(),
                UnaryFn::Sin => a.sin(),
                UnaryFn::Cos => a.cos(),
                UnaryFn::Abs => a.abs(),
            })
        }
        Node::Binary(op, l, r) => {
            let a = eval_node(l, env, ctx)?;
            let b = eval_node(r, env, ctx)?;
            Ok(match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b.value() == 0.0 {
                        return Err(domain("division", 0.0, r.span));
                    }
                    a / b
                }
            })
        }
        Node::Pow(base, p) => {
            let a = eval_node(base, env, ctx)?;
            let v = a.value();
            let integral = p.fract() == 0.0;
            if (!integral && v <= 0.0) || (v == 0.0 && *p < 0.0) || v.is_nan() {
                return Err(domain("pow", v, e.span));
            }
            Ok(a.powf(*p))
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, SourceSpan::new(start, start + 1)));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let span = SourceSpan::new(start, i);
            let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                message: format!("malformed number `{text}`"),
                span,
            })?;
            out.push((Tok::Num(v), span));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), SourceSpan::new(start, i)));
            continue;
        }
        let ch = src[start..].chars().next().unwrap_or('?');
        return Err(ParseError::Syntax {
            message: format!("unexpected character `{ch}`"),
            span: SourceSpan::new(start, start + ch.len_utf8()),
        });
    }
    out.push((Tok::End, SourceSpan::new(src.len(), src.len())));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

/// Parser configuration: dimension plus the names allowed besides `x_i`/`y_i`.
#[derive(Debug, Clone)]
pub struct Parser {
    dimension: usize,
    parameters: Vec<String>,
    bound: Vec<String>,
}

impl Parser {
    pub fn new(dimension: usize) -> Self {
        Parser {
            dimension,
            parameters: Vec::new(),
            bound: Vec::new(),
        }
    }

    pub fn with_parameters<I, T>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        self.parameters.extend(names.into_iter().map(Into::into));
        self
    }

    /// Extra names bound positionally at evaluation time (see [`Env::with_bound`]).
    pub fn with_bound<I, T>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        self.bound.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn parse(&self, source: &str) -> Result<Expression, ParseError> {
        let tokens = lex(source)?;
        let mut state = State {
            cfg: self,
            tokens,
            pos: 0,
        };
        let root = state.expr()?;
        let (tok, span) = state.peek();
        if *tok != Tok::End {
            let message = if *tok == Tok::RParen {
                "unmatched `)`".to_string()
            } else {
                format!("unexpected {}", tok.describe())
            };
            return Err(ParseError::Syntax { message, span });
        }
        Ok(Expression {
            root,
            dimension: self.dimension,
            parameters: self.parameters.clone(),
            bound: self.bound.clone(),
            source: source.to_string(),
        })
    }
}

/// Parses `source` in dimension `dimension` with no parameters.
pub fn parse(source: &str, dimension: usize) -> Result<Expression, ParseError> {
    Parser::new(dimension).parse(source)
}

struct State<'c> {
    cfg: &'c Parser,
    tokens: Vec<(Tok, SourceSpan)>,
    pos: usize,
}

impl State<'_> {
    fn peek(&self) -> (&Tok, SourceSpan) {
        let (t, s) = &self.tokens[self.pos];
        (t, *s)
    }

    fn bump(&mut self) -> (Tok, SourceSpan) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn missing_operand(&self, op: &Tok, op_span: SourceSpan) -> Option<ParseError> {
        let (next, _) = self.peek();
        if matches!(next, Tok::End | Tok::RParen) {
            Some(ParseError::Syntax {
                message: format!("expected an operand after {}", op.describe()),
                span: op_span,
            })
        } else {
            None
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().0 {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let (tok, op_span) = self.bump();
            if let Some(err) = self.missing_operand(&tok, op_span) {
                return Err(err);
            }
            let rhs = self.term()?;
            let span = lhs.span.join(rhs.span);
            lhs = Expr::new(Node::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().0 {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            let (tok, op_span) = self.bump();
            if let Some(err) = self.missing_operand(&tok, op_span) {
                return Err(err);
            }
            let rhs = self.unary()?;
            let span = lhs.span.join(rhs.span);
            lhs = Expr::new(Node::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek().0 == Tok::Minus {
            let (tok, span) = self.bump();
            if let Some(err) = self.missing_operand(&tok, span) {
                return Err(err);
            }
            let inner = self.unary()?;
            let full = span.join(inner.span);
            return Ok(Expr::new(Node::Neg(Box::new(inner)), full));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek().0 != Tok::Caret {
            return Ok(base);
        }
        let (tok, caret) = self.bump();
        if let Some(err) = self.missing_operand(&tok, caret) {
            return Err(err);
        }
        let exponent = self.unary()?;
        let value = exponent
            .fold_constant()
            .ok_or(ParseError::NonConstantExponent {
                span: exponent.span,
            })?;
        if !value.is_finite() {
            return Err(ParseError::Syntax {
                message: "exponent does not evaluate to a finite number".into(),
                span: exponent.span,
            });
        }
        let span = base.span.join(exponent.span);
        Ok(Expr::new(Node::Pow(Box::new(base), value), span))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, span) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::new(Node::Num(v), span)),
            Tok::LParen => {
                let inner = self.expr()?;
                let (close, close_span) = self.bump();
                if close != Tok::RParen {
                    return Err(ParseError::Syntax {
                        message: "unclosed `(`".into(),
                        span: span.join(close_span),
                    });
                }
                Ok(Expr::new(inner.node, span.join(close_span)))
            }
            Tok::Ident(name) => {
                if let Some(func) = UnaryFn::from_name(&name) {
                    let (open, open_span) = self.bump();
                    if open != Tok::LParen {
                        return Err(ParseError::Syntax {
                            message: format!("expected `(` after `{name}`"),
                            span: open_span,
                        });
                    }
                    let arg = self.expr()?;
                    let (close, close_span) = self.bump();
                    if close != Tok::RParen {
                        return Err(ParseError::Syntax {
                            message: format!("unclosed call to `{name}`"),
                            span: span.join(close_span),
                        });
                    }
                    return Ok(Expr::new(Node::Call(func, Box::new(arg)), span.join(close_span)));
                }
                self.identifier(name, span)
            }
            Tok::End => Err(ParseError::Syntax {
                message: "unexpected end of input".into(),
                span,
            }),
            other => Err(ParseError::Syntax {
                message: format!("unexpected {}", other.describe()),
                span,
            }),
        }
    }

    fn identifier(&self, name: String, span: SourceSpan) -> Result<Expr, ParseError> {
        if let Some(i) = self.cfg.bound.iter().position(|b| *b == name) {
            return Ok(Expr::new(Node::Var(Var::Bound(i)), span));
        }
        if self.cfg.parameters.contains(&name) {
            return Ok(Expr::new(Node::Param(name), span));
        }
        if name == "pi" {
            return Ok(Expr::new(Node::Num(std::f64::consts::PI), span));
        }
        let coordinate = name
            .strip_prefix('x')
            .map(|d| (true, d))
            .or_else(|| name.strip_prefix('y').map(|d| (false, d)));
        if let Some((is_x, digits)) = coordinate {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = digits.parse().unwrap_or(usize::MAX);
                if index == 0 || index > self.cfg.dimension {
                    return Err(ParseError::VariableOutOfRange {
                        name,
                        dimension: self.cfg.dimension,
                        span,
                    });
                }
                let var = if is_x {
                    Var::X(index - 1)
                } else {
                    Var::Y(index - 1)
                };
                return Ok(Expr::new(Node::Var(var), span));
            }
        }
        Err(ParseError::UnknownIdentifier { name, span })
    }
}

// ---------------------------------------------------------------------------
// Homogeneity

/// Outcome of a homogeneity probe.
#[derive(Debug, Clone, Serialize)]
pub struct HomogeneityCheck {
    pub passed: bool,
    pub max_residual: f64,
    pub tolerance: f64,
}

/// Scale factors used by every homogeneity probe.
pub const HOMOGENEITY_SCALES: [f64; 3] = [0.5, 2.0, 7.0];

/// Directions used for homogeneity probes: the coordinate axes followed by
/// seeded random points of the unit sphere.
pub fn probe_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = (0..n.min(count))
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while dirs.len() < count {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-6 {
            dirs.push(v.iter().map(|c| c / norm).collect());
        }
    }
    dirs
}

/// Max of `|φ(λy) − λ^degree φ(y)|` over `directions × HOMOGENEITY_SCALES`.
pub fn homogeneity_residual<F, E>(phi: F, degree: i32, directions: &[Vec<f64>]) -> Result<f64, E>
where
    F: Fn(&[f64]) -> Result<f64, E>,
{
    let mut worst = 0.0f64;
    for y in directions {
        let base = phi(y)?;
        for &lambda in &HOMOGENEITY_SCALES {
            let scaled: Vec<f64> = y.iter().map(|c| c * lambda).collect();
            let r = (phi(&scaled)? - lambda.powi(degree) * base).abs();
            worst = worst.max(r);
        }
    }
    Ok(worst)
}

/// Samples `sample_count` directions (coordinate axes first) and checks
/// `expr(x, λy) = λ^degree expr(x, y)` for `λ ∈ {0.5, 2, 7}`.
pub fn check_homogeneity(
    expr: &Expression,
    params: &BTreeMap<String, f64>,
    degree: i32,
    x: &[f64],
    sample_count: usize,
    tolerance: f64,
) -> Result<HomogeneityCheck, EvalError> {
    let dirs = probe_directions(expr.dimension(), sample_count.max(1), 0x5eed);
    let max_residual = homogeneity_residual(|y| expr.evaluate_f64(x, y, params), degree, &dirs)?;
    Ok(HomogeneityCheck {
        passed: max_residual <= tolerance,
        max_residual,
        tolerance,
    })
}
