//! Untyped syntax tree, shared by the parser, the expander, and the printer.

use crate::error::Span;

#[derive(Debug, Clone, PartialEq)]
pub struct SourceUnit {
    pub decls: Vec<Decl>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decl {
    Const { name: String, value: Expr, span: Span },
    TypeAlias { name: String, ty: TypeExpr, span: Span },
    Enum { name: String, variants: Vec<(String, u128)>, span: Span },
    Product { name: String, fields: Vec<FieldDecl>, span: Span },
    Sum { name: String, variants: Vec<(String, TypeExpr)>, span: Span },
    Circuit(CircuitDef),
    Property(PropertyDef),
}

impl Decl {
    pub fn name(&self) -> &str {
        match self {
            Decl::Const { name, .. }
            | Decl::TypeAlias { name, .. }
            | Decl::Enum { name, .. }
            | Decl::Product { name, .. }
            | Decl::Sum { name, .. } => name,
            Decl::Circuit(c) => &c.name,
            Decl::Property(p) => &p.name,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDecl {
    pub name: String,
    pub ty: TypeExpr,
    /// Optional custom placement `@ [hi:lo]`.
    pub range: Option<(Expr, Expr)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitDef {
    pub name: String,
    pub states: Vec<StateDecl>,
    pub insts: Vec<InstDecl>,
    pub inputs: Vec<(String, TypeExpr)>,
    pub output: TypeExpr,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDecl {
    pub name: String,
    pub ty: TypeExpr,
    pub reset: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstDecl {
    pub name: String,
    pub circuit: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyDef {
    pub name: String,
    pub circuit: String,
    pub expr: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypeExpr {
    Bit,
    /// `bv[w]` (unsigned) or `sbv[w]` (signed); the width is a constant
    /// expression until expansion folds it to a literal.
    Bv { width: Box<Expr>, signed: bool },
    Named(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    /// `name = expr;` — a local binding, an input rebind, or a state write,
    /// disambiguated during typechecking.
    Assign { name: String, value: Expr },
    If { cond: Expr, then_body: Vec<Stmt>, else_body: Vec<Stmt> },
    Return(Expr),
    /// Compile-time loop; gone after expansion.
    Unroll { var: String, items: Vec<Expr>, body: Vec<Stmt> },
    /// Compile-time branch; gone after expansion.
    StaticIf { cond: Expr, then_body: Vec<Stmt>, else_body: Vec<Stmt> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn int(v: u128, span: Span) -> Self {
        Expr::new(ExprKind::Int(v), span)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    /// Integer literal; adopts the width its context requires.
    Int(u128),
    /// `true` / `false` (single-bit literals).
    Bool(bool),
    Var(String),
    /// `base.name` — enum literal (`AluOp.ADD`) or product field access,
    /// resolved during typechecking.
    Dot(Box<Expr>, String),
    /// `cond.ite(a, b)` — expression-level multiplexer.
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
    /// `x[i]` — single bit select.
    Index(Box<Expr>, Box<Expr>),
    /// `x[hi:lo]` — contiguous slice.
    Slice(Box<Expr>, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Calls: sub-circuit instances, plus the built-ins
    /// `zext`/`sext`/`trunc`/`concat` and `next` (properties only).
    Call(String, Vec<Expr>),
    /// `e as T` — type ascription (no conversion; just a checking hint).
    Ascribe(Box<Expr>, TypeExpr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    /// Arithmetic negation `-`.
    Neg,
    /// Bitwise / Boolean complement `~`.
    Flip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Shl,
    Shr,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Xor,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        use BinOp::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Rem => "%",
            Shl => "<<",
            Shr => ">>",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            And => "&",
            Xor => "^",
            Or => "|",
        }
    }

    /// Binding strength; larger binds tighter. Mirrors the parser.
    pub fn precedence(self) -> u8 {
        use BinOp::*;
        match self {
            Mul | Div | Rem => 7,
            Add | Sub => 6,
            Shl | Shr => 5,
            Lt | Le | Gt | Ge => 4,
            Eq | Ne => 3,
            And => 2,
            Xor => 1,
            Or => 0,
        }
    }

    /// Comparisons don't chain; everything else is left-associative.
    pub fn is_chainable(self) -> bool {
        use BinOp::*;
        !matches!(self, Lt | Le | Gt | Ge | Eq | Ne)
    }
}
