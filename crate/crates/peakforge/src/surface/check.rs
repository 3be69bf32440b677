//! Type checking and elaboration into a typed tree.
//!
//! Works on expanded units only (no consts, no compile-time statements,
//! literal widths). Responsibilities:
//!
//! - resolve named types (enums, products, sums, aliases) in any declaration
//!   order, rejecting cycles;
//! - resolve circuits in dependency order, rejecting recursive instantiation;
//! - bidirectional literal typing: integer literals adopt the width their
//!   context demands, and `0`/`1` work as bit literals;
//! - static signedness: comparison, shift-right, division and remainder pick
//!   their operator from the operand signedness, and mixing `bv`/`sbv` is an
//!   error;
//! - flow checking: every path returns, locals must be assigned on every
//!   path before use, a name keeps a single type;
//! - stateful sub-circuit instances are called exactly once and
//!   unconditionally; stateless ones freely.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::ast::{
    BinOp, CircuitDef, Decl, Expr, ExprKind, PropertyDef, SourceUnit, Stmt, StmtKind,
    TypeExpr, UnOp,
};
use crate::adt::{adt_encode, AdtKind, AdtType, AdtValue, Field, Type, Variant};
use crate::bitvec::{
    bv_apply, bv_ite, signed_dispatch, BVValue, OpCode, Sign, SignSensitiveOp, Value,
};
use crate::error::{Error, Result, Span};

#[derive(Debug, Clone, PartialEq)]
pub struct TExpr {
    pub ty: Type,
    pub kind: TExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TExprKind {
    BitLit(bool),
    BvLit(BVValue),
    /// Enum literal; the node type names the enum, this is the variant index.
    EnumLit(usize),
    /// Local, input, or state (entry value) read.
    Var(String),
    /// Product field read.
    Field(Box<TExpr>, String),
    /// Sum tag read (`x.tag`).
    SumTag(Box<TExpr>),
    /// Sum payload reinterpreted at variant index (`x.<variant>`).
    SumPayload(Box<TExpr>, usize),
    /// Single-bit select with a constant index.
    BitIndex(Box<TExpr>, u32),
    Op(OpCode, Vec<TExpr>),
    Ite(Box<TExpr>, Box<TExpr>, Box<TExpr>),
    /// Sub-circuit application.
    CallSub { inst: String, args: Vec<TExpr> },
    /// Property-only: the post-step value of a state.
    Next(String),
    /// Property-only: the circuit output.
    OutRef,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TStmt {
    Assign { name: String, value: TExpr, is_state: bool },
    If { cond: TExpr, then_body: Vec<TStmt>, else_body: Vec<TStmt> },
    Return(TExpr),
}

#[derive(Debug, Clone)]
pub struct TypedState {
    pub name: String,
    pub ty: Type,
    /// Power-on value, already encoded to bits.
    pub reset: Value,
}

#[derive(Debug, Clone)]
pub struct TypedCircuit {
    pub name: String,
    pub inputs: Vec<(String, Type)>,
    pub states: Vec<TypedState>,
    /// Instance name, instantiated circuit name.
    pub insts: Vec<(String, String)>,
    pub output: Type,
    pub body: Vec<TStmt>,
    /// Has registers of its own or instantiates a circuit that does.
    pub stateful: bool,
}

impl TypedCircuit {
    pub fn state(&self, name: &str) -> Option<&TypedState> {
        self.states.iter().find(|s| s.name == name)
    }

    pub fn inst_circuit(&self, inst: &str) -> Option<&str> {
        self.insts
            .iter()
            .find(|(n, _)| n == inst)
            .map(|(_, c)| c.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct TypedProperty {
    pub name: String,
    pub circuit: String,
    pub expr: TExpr,
}

#[derive(Debug)]
pub struct TypedUnit {
    /// Named types (aliases resolved away into their targets).
    pub types: BTreeMap<String, Type>,
    /// Circuits in dependency order: instantiated circuits come first.
    pub circuits: Vec<TypedCircuit>,
    pub properties: Vec<TypedProperty>,
}

impl TypedUnit {
    pub fn circuit(&self, name: &str) -> Option<&TypedCircuit> {
        self.circuits.iter().find(|c| c.name == name)
    }

    pub fn property(&self, name: &str) -> Option<&TypedProperty> {
        self.properties.iter().find(|p| p.name == name)
    }
}

const BUILTINS: &[&str] = &["zext", "sext", "trunc", "concat", "next"];

pub fn typecheck(unit: &SourceUnit) -> Result<TypedUnit> {
    let types = resolve_types(unit)?;

    // global namespace: a circuit may not share a name with a type
    let mut names: HashSet<&str> = types.keys().map(String::as_str).collect();
    for decl in &unit.decls {
        if let Decl::Circuit(c) = decl {
            if !names.insert(&c.name) {
                return Err(Error::ty(
                    c.span,
                    format!("duplicate declaration `{}`", c.name),
                ));
            }
        }
    }

    let order = order_circuits(unit)?;
    let mut done: HashMap<String, TypedCircuit> = HashMap::new();
    let mut circuits = Vec::new();
    for def in order {
        let tc = check_circuit(def, &types, &done)?;
        done.insert(def.name.clone(), tc.clone());
        circuits.push(tc);
    }

    let mut properties = Vec::new();
    let mut prop_names = HashSet::new();
    for decl in &unit.decls {
        if let Decl::Property(p) = decl {
            if !prop_names.insert(p.name.clone()) {
                return Err(Error::ty(p.span, format!("duplicate property `{}`", p.name)));
            }
            properties.push(check_property(p, &types, &done)?);
        }
    }

    Ok(TypedUnit { types, circuits, properties })
}

// ---- named type resolution ----

fn resolve_types(unit: &SourceUnit) -> Result<BTreeMap<String, Type>> {
    let mut decls: HashMap<&str, &Decl> = HashMap::new();
    for decl in &unit.decls {
        match decl {
            Decl::TypeAlias { name, span, .. }
            | Decl::Enum { name, span, .. }
            | Decl::Product { name, span, .. }
            | Decl::Sum { name, span, .. } => {
                if decls.insert(name, decl).is_some() {
                    return Err(Error::ty(*span, format!("duplicate declaration `{name}`")));
                }
            }
            _ => {}
        }
    }

    let mut memo: BTreeMap<String, Type> = BTreeMap::new();
    let mut visiting: Vec<String> = Vec::new();
    for decl in &unit.decls {
        if let Some(name) = match decl {
            Decl::TypeAlias { name, .. }
            | Decl::Enum { name, .. }
            | Decl::Product { name, .. }
            | Decl::Sum { name, .. } => Some(name.as_str()),
            _ => None,
        } {
            resolve_named(name, decl.span_of(), &decls, &mut memo, &mut visiting)?;
        }
    }
    Ok(memo)
}

impl Decl {
    fn span_of(&self) -> Span {
        match self {
            Decl::Const { span, .. }
            | Decl::TypeAlias { span, .. }
            | Decl::Enum { span, .. }
            | Decl::Product { span, .. }
            | Decl::Sum { span, .. } => *span,
            Decl::Circuit(c) => c.span,
            Decl::Property(p) => p.span,
        }
    }
}

fn resolve_named(
    name: &str,
    use_span: Span,
    decls: &HashMap<&str, &Decl>,
    memo: &mut BTreeMap<String, Type>,
    visiting: &mut Vec<String>,
) -> Result<Type> {
    if let Some(t) = memo.get(name) {
        return Ok(t.clone());
    }
    if visiting.iter().any(|n| n == name) {
        return Err(Error::ty(
            use_span,
            format!("type `{name}` is defined in terms of itself"),
        ));
    }
    let decl = *decls
        .get(name)
        .ok_or_else(|| Error::ty(use_span, format!("unknown type `{name}`")))?;
    visiting.push(name.to_string());
    let ty = match decl {
        Decl::TypeAlias { ty, .. } => resolve_type_expr(ty, decls, memo, visiting)?,
        Decl::Enum { name, variants, span } => {
            let t = AdtType::enum_type(name.clone(), variants.clone())
                .map_err(|e| Error::ty(*span, e.to_string()))?;
            Type::Adt(t)
        }
        Decl::Product { name, fields, span } => {
            let mut fs = Vec::new();
            for f in fields {
                let ty = resolve_type_expr(&f.ty, decls, memo, visiting)?;
                let annotation = match &f.range {
                    None => None,
                    Some((hi, lo)) => Some((
                        literal_u32(hi, "field range")?,
                        literal_u32(lo, "field range")?,
                    )),
                };
                fs.push(Field { name: f.name.clone(), ty, annotation });
            }
            let t = AdtType::product(name.clone(), fs)
                .map_err(|e| Error::ty(*span, e.to_string()))?;
            Type::Adt(t)
        }
        Decl::Sum { name, variants, span } => {
            let mut vs = Vec::new();
            for (vname, vty) in variants {
                let ty = resolve_type_expr(vty, decls, memo, visiting)?;
                vs.push(Variant { name: vname.clone(), ty });
            }
            let t = AdtType::sum(name.clone(), vs)
                .map_err(|e| Error::ty(*span, e.to_string()))?;
            Type::Adt(t)
        }
        _ => unreachable!(),
    };
    visiting.pop();
    memo.insert(name.to_string(), ty.clone());
    Ok(ty)
}

fn resolve_type_expr(
    ty: &TypeExpr,
    decls: &HashMap<&str, &Decl>,
    memo: &mut BTreeMap<String, Type>,
    visiting: &mut Vec<String>,
) -> Result<Type> {
    match ty {
        TypeExpr::Bit => Ok(Type::Bit),
        TypeExpr::Bv { width, signed } => Ok(Type::Bv {
            width: literal_u32(width, "width")?,
            sign: if *signed { Sign::Signed } else { Sign::Unsigned },
        }),
        TypeExpr::Named(name) => {
            let span = Span { line: 1, col: 1 };
            resolve_named(name, span, decls, memo, visiting)
        }
    }
}

/// Read a literal the expander folded; anything else is an internal error in
/// the pipeline, reported gently.
fn literal_u32(e: &Expr, what: &str) -> Result<u32> {
    match &e.kind {
        ExprKind::Int(v) => u32::try_from(*v)
            .map_err(|_| Error::ty(e.span, format!("{what} is too large"))),
        _ => Err(Error::ty(e.span, format!("{what} must be a compile-time constant"))),
    }
}

/// Resolve a type expression against the finished type table.
fn lookup_type(ty: &TypeExpr, types: &BTreeMap<String, Type>) -> Result<Type> {
    match ty {
        TypeExpr::Bit => Ok(Type::Bit),
        TypeExpr::Bv { width, signed } => Ok(Type::Bv {
            width: literal_u32(width, "width")?,
            sign: if *signed { Sign::Signed } else { Sign::Unsigned },
        }),
        TypeExpr::Named(name) => types.get(name).cloned().ok_or_else(|| {
            Error::ty(Span { line: 1, col: 1 }, format!("unknown type `{name}`"))
        }),
    }
}

// ---- circuit ordering ----

fn order_circuits(unit: &SourceUnit) -> Result<Vec<&CircuitDef>> {
    let mut by_name: HashMap<&str, &CircuitDef> = HashMap::new();
    for decl in &unit.decls {
        if let Decl::Circuit(c) = decl {
            if by_name.insert(&c.name, c).is_some() {
                return Err(Error::ty(c.span, format!("duplicate circuit `{}`", c.name)));
            }
        }
    }

    fn visit<'a>(
        c: &'a CircuitDef,
        by_name: &HashMap<&str, &'a CircuitDef>,
        done: &mut Vec<&'a CircuitDef>,
        seen: &mut HashSet<String>,
        stack: &mut Vec<String>,
    ) -> Result<()> {
        if seen.contains(&c.name) {
            return Ok(());
        }
        if stack.contains(&c.name) {
            return Err(Error::ty(
                c.span,
                format!("circuit `{}` instantiates itself, possibly indirectly", c.name),
            ));
        }
        stack.push(c.name.clone());
        for inst in &c.insts {
            let callee = by_name.get(inst.circuit.as_str()).ok_or_else(|| {
                Error::ty(inst.span, format!("unknown circuit `{}`", inst.circuit))
            })?;
            visit(callee, by_name, done, seen, stack)?;
        }
        stack.pop();
        seen.insert(c.name.clone());
        done.push(c);
        Ok(())
    }

    let mut done = Vec::new();
    let mut seen = HashSet::new();
    let mut stack = Vec::new();
    for decl in &unit.decls {
        if let Decl::Circuit(c) = decl {
            visit(c, &by_name, &mut done, &mut seen, &mut stack)?;
        }
    }
    Ok(done)
}

// ---- circuit checking ----

struct Checker<'a> {
    types: &'a BTreeMap<String, Type>,
    done: &'a HashMap<String, TypedCircuit>,
    /// Inputs and locals live on the current path.
    vars: HashMap<String, Type>,
    /// Names assigned on only some paths; reads report a dedicated error.
    partial: HashSet<String>,
    state_types: HashMap<String, Type>,
    insts: HashMap<String, String>,
    output: Type,
    cond_depth: u32,
    may_return: bool,
    stateful_calls: HashMap<String, u32>,
    /// Property scope: `out` and `next(..)` resolve, instance calls don't.
    property_ctx: bool,
}

fn check_circuit(
    def: &CircuitDef,
    types: &BTreeMap<String, Type>,
    done: &HashMap<String, TypedCircuit>,
) -> Result<TypedCircuit> {
    let mut taken: HashSet<String> = HashSet::new();
    let mut reserve = |name: &str, what: &str, span: Span| -> Result<()> {
        if types.contains_key(name) {
            return Err(Error::ty(
                span,
                format!("{what} `{name}` collides with a type name"),
            ));
        }
        if !taken.insert(name.to_string()) {
            return Err(Error::ty(span, format!("duplicate name `{name}` in circuit")));
        }
        Ok(())
    };

    let mut inputs = Vec::new();
    for (name, ty) in &def.inputs {
        reserve(name, "input", def.span)?;
        inputs.push((name.clone(), lookup_type(ty, types)?));
    }

    let mut state_types = HashMap::new();
    let mut state_order = Vec::new();
    for s in &def.states {
        reserve(&s.name, "state", s.span)?;
        let ty = lookup_type(&s.ty, types)?;
        state_types.insert(s.name.clone(), ty.clone());
        state_order.push((s.name.clone(), ty, &s.reset));
    }

    let mut insts = HashMap::new();
    let mut inst_order = Vec::new();
    for i in &def.insts {
        reserve(&i.name, "instance", i.span)?;
        if BUILTINS.contains(&i.name.as_str()) {
            return Err(Error::ty(
                i.span,
                format!("`{}` is a built-in function name", i.name),
            ));
        }
        if !done.contains_key(&i.circuit) {
            return Err(Error::ty(i.span, format!("unknown circuit `{}`", i.circuit)));
        }
        insts.insert(i.name.clone(), i.circuit.clone());
        inst_order.push((i.name.clone(), i.circuit.clone()));
    }

    let output = lookup_type(&def.output, types)?;

    let mut ck = Checker {
        types,
        done,
        vars: inputs.iter().cloned().collect(),
        partial: HashSet::new(),
        state_types,
        insts,
        output: output.clone(),
        cond_depth: 0,
        may_return: false,
        stateful_calls: HashMap::new(),
        property_ctx: false,
    };

    // resets are closed constant expressions checked against the state type
    let mut states = Vec::new();
    for (name, ty, reset) in state_order {
        let mut rck = Checker {
            types,
            done,
            vars: HashMap::new(),
            partial: HashSet::new(),
            state_types: HashMap::new(),
            insts: HashMap::new(),
            output: output.clone(),
            cond_depth: 0,
            may_return: false,
            stateful_calls: HashMap::new(),
            property_ctx: false,
        };
        let texpr = rck.check_expr(reset, &ty)?;
        let value = eval_const_texpr(&texpr)
            .map_err(|msg| Error::ty(reset.span, msg))?;
        states.push(TypedState { name, ty, reset: value });
    }

    let (body, terminated) = ck.check_stmts(&def.body)?;
    if !terminated {
        return Err(Error::ty(
            def.span,
            format!("circuit `{}`: not every path returns a value", def.name),
        ));
    }

    for (inst, circuit) in &ck.insts {
        if done[circuit].stateful && ck.stateful_calls.get(inst).copied().unwrap_or(0) == 0 {
            return Err(Error::ty(
                def.span,
                format!("stateful instance `{inst}` is never called"),
            ));
        }
    }

    let stateful =
        !states.is_empty() || inst_order.iter().any(|(_, c)| done[c].stateful);

    Ok(TypedCircuit {
        name: def.name.clone(),
        inputs,
        states,
        insts: inst_order,
        output,
        body,
        stateful,
    })
}

fn check_property(
    p: &PropertyDef,
    types: &BTreeMap<String, Type>,
    done: &HashMap<String, TypedCircuit>,
) -> Result<TypedProperty> {
    let target = done
        .get(&p.circuit)
        .ok_or_else(|| Error::ty(p.span, format!("unknown circuit `{}`", p.circuit)))?;
    let mut ck = Checker {
        types,
        done,
        vars: target.inputs.iter().cloned().collect(),
        partial: HashSet::new(),
        state_types: target
            .states
            .iter()
            .map(|s| (s.name.clone(), s.ty.clone()))
            .collect(),
        insts: HashMap::new(),
        output: target.output.clone(),
        cond_depth: 0,
        may_return: false,
        stateful_calls: HashMap::new(),
        property_ctx: true,
    };
    let expr = ck.check_expr(&p.expr, &Type::Bit)?;
    Ok(TypedProperty { name: p.name.clone(), circuit: p.circuit.clone(), expr })
}

// ---- statements ----

impl<'a> Checker<'a> {
    fn check_stmts(&mut self, stmts: &[Stmt]) -> Result<(Vec<TStmt>, bool)> {
        let mut out = Vec::new();
        let mut terminated = false;
        for stmt in stmts {
            if terminated {
                return Err(Error::ty(stmt.span, "unreachable statement"));
            }
            match &stmt.kind {
                StmtKind::Assign { name, value } => {
                    if self.types.contains_key(name) {
                        return Err(Error::ty(
                            stmt.span,
                            format!("cannot assign to `{name}`: it names a type"),
                        ));
                    }
                    if self.insts.contains_key(name) {
                        return Err(Error::ty(
                            stmt.span,
                            format!("cannot assign to `{name}`: it names an instance"),
                        ));
                    }
                    if let Some(ty) = self.state_types.get(name).cloned() {
                        let value = self.check_expr(value, &ty)?;
                        out.push(TStmt::Assign { name: name.clone(), value, is_state: true });
                    } else if let Some(ty) = self.vars.get(name).cloned() {
                        // a name keeps one type for the whole circuit
                        let value = self.check_expr(value, &ty)?;
                        out.push(TStmt::Assign { name: name.clone(), value, is_state: false });
                    } else {
                        let value = self.infer(value)?;
                        self.partial.remove(name);
                        self.vars.insert(name.clone(), value.ty.clone());
                        out.push(TStmt::Assign { name: name.clone(), value, is_state: false });
                    }
                }
                StmtKind::Return(e) => {
                    let out_ty = self.output.clone();
                    let value = self.check_expr(e, &out_ty)?;
                    self.may_return = true;
                    terminated = true;
                    out.push(TStmt::Return(value));
                }
                StmtKind::If { cond, then_body, else_body } => {
                    let cond = self.check_expr(cond, &Type::Bit)?;
                    let entry = self.vars.clone();

                    self.cond_depth += 1;
                    let (then_t, then_term) = self.check_stmts(then_body)?;
                    let then_vars = std::mem::replace(&mut self.vars, entry.clone());
                    let (else_t, else_term) = self.check_stmts(else_body)?;
                    let else_vars = std::mem::replace(&mut self.vars, entry);
                    self.cond_depth -= 1;

                    self.vars = match (then_term, else_term) {
                        (false, false) => {
                            let mut merged = HashMap::new();
                            for (name, ty) in &then_vars {
                                match else_vars.get(name) {
                                    Some(other) if other == ty => {
                                        merged.insert(name.clone(), ty.clone());
                                    }
                                    Some(_) | None => {
                                        self.partial.insert(name.clone());
                                    }
                                }
                            }
                            for name in else_vars.keys() {
                                if !merged.contains_key(name) {
                                    self.partial.insert(name.clone());
                                }
                            }
                            merged
                        }
                        (false, true) => then_vars,
                        (true, false) => else_vars,
                        (true, true) => HashMap::new(),
                    };
                    terminated = then_term && else_term;
                    out.push(TStmt::If { cond, then_body: then_t, else_body: else_t });
                }
                StmtKind::Unroll { .. } | StmtKind::StaticIf { .. } => {
                    return Err(Error::ty(
                        stmt.span,
                        "compile-time statement survived expansion (internal error)",
                    ));
                }
            }
        }
        Ok((out, terminated))
    }

    // ---- expressions ----

    /// Check `e` against an expected type. Literals, conditionals, and
    /// width-preserving operators propagate the expectation inward; anything
    /// else is inferred and compared.
    fn check_expr(&mut self, e: &Expr, want: &Type) -> Result<TExpr> {
        let span = e.span;
        match &e.kind {
            ExprKind::Int(v) => self.literal(*v, want, span),
            ExprKind::Bool(b) => {
                if *want != Type::Bit {
                    return Err(Error::ty(
                        span,
                        format!("`{b}` is a bit, but a {want} is expected here"),
                    ));
                }
                Ok(TExpr { ty: Type::Bit, kind: TExprKind::BitLit(*b), span })
            }
            ExprKind::Ite(c, t, f) => {
                let c = self.check_expr(c, &Type::Bit)?;
                let t = self.check_expr(t, want)?;
                let f = self.check_expr(f, want)?;
                Ok(TExpr {
                    ty: want.clone(),
                    kind: TExprKind::Ite(Box::new(c), Box::new(t), Box::new(f)),
                    span,
                })
            }
            ExprKind::Ascribe(inner, ty) => {
                let ascribed = lookup_type(ty, self.types)?;
                if &ascribed != want {
                    return Err(Error::ty(
                        span,
                        format!("expression is ascribed {ascribed} but a {want} is expected"),
                    ));
                }
                self.check_expr(inner, &ascribed)
            }
            ExprKind::Unary(op, inner) => {
                let t = self.check_expr(inner, want)?;
                self.apply_unary(*op, t, span)
            }
            ExprKind::Binary(op, a, b) if propagates(*op, want) => {
                let ta = self.check_expr(a, want)?;
                let tb = self.check_expr(b, want)?;
                self.apply_binary(*op, ta, tb, span)
            }
            _ => {
                let t = self.infer(e)?;
                if &t.ty != want {
                    return Err(Error::ty(
                        span,
                        format!("expected {want}, found {}", t.ty),
                    ));
                }
                Ok(t)
            }
        }
    }

    fn infer(&mut self, e: &Expr) -> Result<TExpr> {
        let span = e.span;
        match &e.kind {
            ExprKind::Int(_) => Err(Error::ty(
                span,
                "integer literal needs a type from context here; ascribe it with `as`",
            )),
            ExprKind::Bool(b) => {
                Ok(TExpr { ty: Type::Bit, kind: TExprKind::BitLit(*b), span })
            }
            ExprKind::Var(name) => self.lookup_var(name, span),
            ExprKind::Dot(base, label) => self.infer_dot(base, label, span),
            ExprKind::Ite(c, t, f) => {
                let c = self.check_expr(c, &Type::Bit)?;
                let (t, f) = if literalish(t) && !literalish(f) {
                    let tf = self.infer(f)?;
                    let tt = self.check_expr(t, &tf.ty)?;
                    (tt, tf)
                } else {
                    let tt = self.infer(t)?;
                    let tf = self.check_expr(f, &tt.ty)?;
                    (tt, tf)
                };
                Ok(TExpr {
                    ty: t.ty.clone(),
                    kind: TExprKind::Ite(Box::new(c), Box::new(t), Box::new(f)),
                    span,
                })
            }
            ExprKind::Index(base, idx) => {
                let base = self.infer(base)?;
                let Type::Bv { width, .. } = base.ty else {
                    return Err(Error::ty(
                        span,
                        format!("bit indexing needs a bit-vector, found {}", base.ty),
                    ));
                };
                let i = literal_u32(idx, "bit index")?;
                if i >= width {
                    return Err(Error::ty(
                        idx.span,
                        format!("bit index {i} is out of range for bv[{width}]"),
                    ));
                }
                Ok(TExpr { ty: Type::Bit, kind: TExprKind::BitIndex(Box::new(base), i), span })
            }
            ExprKind::Slice(base, hi, lo) => {
                let base = self.infer(base)?;
                let Type::Bv { width, .. } = base.ty else {
                    return Err(Error::ty(
                        span,
                        format!("slicing needs a bit-vector, found {}", base.ty),
                    ));
                };
                let hi = literal_u32(hi, "slice bound")?;
                let lo = literal_u32(lo, "slice bound")?;
                if hi < lo || hi >= width {
                    return Err(Error::ty(
                        span,
                        format!("slice [{hi}:{lo}] is out of range for bv[{width}]"),
                    ));
                }
                Ok(TExpr {
                    ty: Type::unsigned(hi - lo + 1),
                    kind: TExprKind::Op(OpCode::Extract { hi, lo }, vec![base]),
                    span,
                })
            }
            ExprKind::Unary(op, inner) => {
                let t = self.infer(inner)?;
                self.apply_unary(*op, t, span)
            }
            ExprKind::Binary(op, a, b) => {
                // a lone literal adopts the other operand's type
                let (ta, tb) = if literalish(a) && !literalish(b) {
                    let tb = self.infer(b)?;
                    let ta = self.check_expr(a, &tb.ty.clone())?;
                    (ta, tb)
                } else {
                    let ta = self.infer(a)?;
                    let tb = self.check_expr(b, &ta.ty.clone())?;
                    (ta, tb)
                };
                self.apply_binary(*op, ta, tb, span)
            }
            ExprKind::Call(name, args) => self.infer_call(name, args, span),
            ExprKind::Ascribe(inner, ty) => {
                let ascribed = lookup_type(ty, self.types)?;
                self.check_expr(inner, &ascribed)
            }
        }
    }

    fn literal(&self, v: u128, want: &Type, span: Span) -> Result<TExpr> {
        match want {
            Type::Bit => match v {
                0 => Ok(TExpr { ty: Type::Bit, kind: TExprKind::BitLit(false), span }),
                1 => Ok(TExpr { ty: Type::Bit, kind: TExprKind::BitLit(true), span }),
                _ => Err(Error::ty(span, format!("`{v}` is not a bit; only 0 and 1 are"))),
            },
            Type::Bv { width, sign } => {
                let bv = BVValue::new(v, *width, *sign).map_err(|_| {
                    Error::ty(span, format!("literal `{v}` does not fit in {want}"))
                })?;
                Ok(TExpr { ty: want.clone(), kind: TExprKind::BvLit(bv), span })
            }
            Type::Adt(t) => Err(Error::ty(
                span,
                format!("an integer literal cannot have type `{}`; use its constructors", t.name),
            )),
        }
    }

    fn lookup_var(&self, name: &str, span: Span) -> Result<TExpr> {
        if let Some(ty) = self.vars.get(name) {
            return Ok(TExpr { ty: ty.clone(), kind: TExprKind::Var(name.into()), span });
        }
        if let Some(ty) = self.state_types.get(name) {
            return Ok(TExpr { ty: ty.clone(), kind: TExprKind::Var(name.into()), span });
        }
        if self.property_ctx && name == "out" {
            return Ok(TExpr { ty: self.output.clone(), kind: TExprKind::OutRef, span });
        }
        if self.partial.contains(name) {
            return Err(Error::ty(
                span,
                format!("`{name}` is not assigned on every path reaching this point"),
            ));
        }
        Err(Error::ty(span, format!("unknown variable `{name}`")))
    }

    fn infer_dot(&mut self, base: &Expr, label: &str, span: Span) -> Result<TExpr> {
        // `TypeName.LABEL` is an enum literal when the base names an enum type
        if let ExprKind::Var(tyname) = &base.kind {
            if !self.vars.contains_key(tyname) && !self.state_types.contains_key(tyname) {
                if let Some(Type::Adt(t)) = self.types.get(tyname) {
                    if let AdtKind::Enum(vs) = &t.kind {
                        let index =
                            vs.iter().position(|v| v.label == label).ok_or_else(|| {
                                Error::ty(
                                    span,
                                    format!("enum `{}` has no variant `{label}`", t.name),
                                )
                            })?;
                        return Ok(TExpr {
                            ty: Type::Adt(t.clone()),
                            kind: TExprKind::EnumLit(index),
                            span,
                        });
                    }
                }
            }
        }

        let base = self.infer(base)?;
        let Type::Adt(t) = &base.ty else {
            return Err(Error::ty(
                span,
                format!("`.{label}` needs a product or sum value, found {}", base.ty),
            ));
        };
        match &t.kind {
            AdtKind::Product(fields) => {
                let field = fields.iter().find(|f| f.name == label).ok_or_else(|| {
                    Error::ty(span, format!("`{}` has no field `{label}`", t.name))
                })?;
                Ok(TExpr {
                    ty: field.ty.clone(),
                    kind: TExprKind::Field(Box::new(base), label.into()),
                    span,
                })
            }
            AdtKind::Sum(variants) => {
                if let Some(i) = variants.iter().position(|v| v.name == label) {
                    return Ok(TExpr {
                        ty: variants[i].ty.clone(),
                        kind: TExprKind::SumPayload(Box::new(base), i),
                        span,
                    });
                }
                if label == "tag" {
                    return Ok(TExpr {
                        ty: Type::unsigned(t.tag_width()),
                        kind: TExprKind::SumTag(Box::new(base)),
                        span,
                    });
                }
                Err(Error::ty(
                    span,
                    format!("`{}` has no variant `{label}` (and `.tag` reads the tag)", t.name),
                ))
            }
            AdtKind::Enum(_) => Err(Error::ty(
                span,
                format!("`{}` is an enum; its values have no fields", t.name),
            )),
        }
    }

    fn apply_unary(&self, op: UnOp, t: TExpr, span: Span) -> Result<TExpr> {
        let (opcode, ty) = match (op, &t.ty) {
            (UnOp::Neg, Type::Bv { .. }) => (OpCode::BvNeg, t.ty.clone()),
            (UnOp::Flip, Type::Bv { .. }) => (OpCode::BvNot, t.ty.clone()),
            (UnOp::Flip, Type::Bit) => (OpCode::Not, Type::Bit),
            (UnOp::Neg, other) => {
                return Err(Error::ty(
                    span,
                    format!("`-` needs a bit-vector, found {other}"),
                ))
            }
            (UnOp::Flip, other) => {
                return Err(Error::ty(
                    span,
                    format!("`~` needs a bit or bit-vector, found {other}"),
                ))
            }
        };
        Ok(TExpr { ty, kind: TExprKind::Op(opcode, vec![t]), span })
    }

    fn apply_binary(&self, op: BinOp, a: TExpr, b: TExpr, span: Span) -> Result<TExpr> {
        use BinOp::*;
        if a.ty != b.ty {
            return Err(Error::ty(
                span,
                format!("`{}` needs equal operand types, found {} and {}", op.symbol(), a.ty, b.ty),
            ));
        }
        let ty = a.ty.clone();
        let sign = match &ty {
            Type::Bv { sign, .. } => Some(*sign),
            _ => None,
        };
        let bv_only = |what: &str| {
            Error::ty(span, format!("`{}` needs bit-vector operands, found {what}", op.symbol()))
        };

        let (opcode, result) = match op {
            Add | Sub | Mul => match sign {
                Some(_) => (
                    match op {
                        Add => OpCode::BvAdd,
                        Sub => OpCode::BvSub,
                        _ => OpCode::BvMul,
                    },
                    ty.clone(),
                ),
                None => return Err(bv_only(&ty.to_string())),
            },
            Div | Rem | Shr => match sign {
                Some(s) => {
                    let sop = match op {
                        Div => SignSensitiveOp::Div,
                        Rem => SignSensitiveOp::Rem,
                        _ => SignSensitiveOp::Shr,
                    };
                    (signed_dispatch(sop, s), ty.clone())
                }
                None => return Err(bv_only(&ty.to_string())),
            },
            Shl => match sign {
                Some(_) => (OpCode::BvShl, ty.clone()),
                None => return Err(bv_only(&ty.to_string())),
            },
            Lt | Le | Gt | Ge => match sign {
                Some(s) => {
                    let sop = match op {
                        Lt => SignSensitiveOp::Lt,
                        Le => SignSensitiveOp::Le,
                        Gt => SignSensitiveOp::Gt,
                        _ => SignSensitiveOp::Ge,
                    };
                    (signed_dispatch(sop, s), Type::Bit)
                }
                None => return Err(bv_only(&ty.to_string())),
            },
            Eq | Ne => {
                match &ty {
                    Type::Bit | Type::Bv { .. } => {}
                    Type::Adt(t) => match t.kind {
                        AdtKind::Enum(_) => {}
                        _ => {
                            return Err(Error::ty(
                                span,
                                format!(
                                    "`{}` does not apply to `{}`; compare fields instead",
                                    op.symbol(),
                                    t.name
                                ),
                            ))
                        }
                    },
                }
                (if op == Eq { OpCode::Eq } else { OpCode::Neq }, Type::Bit)
            }
            And | Or | Xor => match &ty {
                Type::Bit => (
                    match op {
                        And => OpCode::And,
                        Or => OpCode::Or,
                        _ => OpCode::Xor,
                    },
                    Type::Bit,
                ),
                Type::Bv { .. } => (
                    match op {
                        And => OpCode::BvAnd,
                        Or => OpCode::BvOr,
                        _ => OpCode::BvXor,
                    },
                    ty.clone(),
                ),
                Type::Adt(t) => {
                    return Err(Error::ty(
                        span,
                        format!("`{}` does not apply to `{}`", op.symbol(), t.name),
                    ))
                }
            },
        };
        Ok(TExpr { ty: result, kind: TExprKind::Op(opcode, vec![a, b]), span })
    }

    fn infer_call(&mut self, name: &str, args: &[Expr], span: Span) -> Result<TExpr> {
        match name {
            "zext" | "sext" => {
                let [e, w] = args else {
                    return Err(Error::ty(span, format!("`{name}` takes (value, width)")));
                };
                let t = self.infer(e)?;
                let Type::Bv { width, sign } = t.ty else {
                    return Err(Error::ty(
                        span,
                        format!("`{name}` needs a bit-vector, found {}", t.ty),
                    ));
                };
                let target = literal_u32(w, "extension width")?;
                if target < width || target > 128 {
                    return Err(Error::ty(
                        span,
                        format!("cannot extend bv[{width}] to width {target}"),
                    ));
                }
                let by = target - width;
                let opcode = if name == "zext" {
                    OpCode::ZeroExtend { by }
                } else {
                    OpCode::SignExtend { by }
                };
                Ok(TExpr {
                    ty: Type::Bv { width: target, sign },
                    kind: TExprKind::Op(opcode, vec![t]),
                    span,
                })
            }
            "trunc" => {
                let [e, w] = args else {
                    return Err(Error::ty(span, "`trunc` takes (value, width)"));
                };
                let t = self.infer(e)?;
                let Type::Bv { width, sign } = t.ty else {
                    return Err(Error::ty(
                        span,
                        format!("`trunc` needs a bit-vector, found {}", t.ty),
                    ));
                };
                let target = literal_u32(w, "truncation width")?;
                if target == 0 || target > width {
                    return Err(Error::ty(
                        span,
                        format!("cannot truncate bv[{width}] to width {target}"),
                    ));
                }
                Ok(TExpr {
                    ty: Type::Bv { width: target, sign },
                    kind: TExprKind::Op(OpCode::Extract { hi: target - 1, lo: 0 }, vec![t]),
                    span,
                })
            }
            "concat" => {
                let [hi, lo] = args else {
                    return Err(Error::ty(span, "`concat` takes (high, low)"));
                };
                let hi = self.infer(hi)?;
                let lo = self.infer(lo)?;
                let (Type::Bv { width: wh, .. }, Type::Bv { width: wl, .. }) = (&hi.ty, &lo.ty)
                else {
                    return Err(Error::ty(
                        span,
                        format!("`concat` needs bit-vectors, found {} and {}", hi.ty, lo.ty),
                    ));
                };
                if wh + wl > 128 {
                    return Err(Error::ty(span, "concatenation exceeds 128 bits"));
                }
                Ok(TExpr {
                    ty: Type::unsigned(wh + wl),
                    kind: TExprKind::Op(OpCode::Concat, vec![hi, lo]),
                    span,
                })
            }
            "next" => {
                if !self.property_ctx {
                    return Err(Error::ty(
                        span,
                        "`next` is only available inside properties",
                    ));
                }
                let [arg] = args else {
                    return Err(Error::ty(span, "`next` takes one state name"));
                };
                let ExprKind::Var(state) = &arg.kind else {
                    return Err(Error::ty(arg.span, "`next` takes a state name"));
                };
                let ty = self.state_types.get(state).ok_or_else(|| {
                    Error::ty(arg.span, format!("`{state}` is not a state of this circuit"))
                })?;
                Ok(TExpr { ty: ty.clone(), kind: TExprKind::Next(state.clone()), span })
            }
            _ => self.infer_inst_call(name, args, span),
        }
    }

    fn infer_inst_call(&mut self, name: &str, args: &[Expr], span: Span) -> Result<TExpr> {
        if self.property_ctx {
            return Err(Error::ty(
                span,
                format!("`{name}`: instance calls are not allowed in properties"),
            ));
        }
        let circuit = self.insts.get(name).cloned().ok_or_else(|| {
            Error::ty(span, format!("no instance or built-in named `{name}`"))
        })?;
        let callee = &self.done[&circuit];

        if callee.stateful {
            if self.cond_depth > 0 {
                return Err(Error::ty(
                    span,
                    format!("stateful instance `{name}` cannot be called conditionally"),
                ));
            }
            if self.may_return {
                return Err(Error::ty(
                    span,
                    format!(
                        "stateful instance `{name}` must be called on every path, \
                         but an earlier return can skip it"
                    ),
                ));
            }
            let count = self.stateful_calls.entry(name.to_string()).or_insert(0);
            *count += 1;
            if *count > 1 {
                return Err(Error::ty(
                    span,
                    format!("stateful instance `{name}` is called more than once"),
                ));
            }
        }

        if args.len() != callee.inputs.len() {
            return Err(Error::ty(
                span,
                format!(
                    "`{name}` takes {} argument(s), found {}",
                    callee.inputs.len(),
                    args.len()
                ),
            ));
        }
        let input_types: Vec<Type> =
            callee.inputs.iter().map(|(_, t)| t.clone()).collect();
        let output = callee.output.clone();
        let targs = args
            .iter()
            .zip(&input_types)
            .map(|(a, t)| self.check_expr(a, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(TExpr {
            ty: output,
            kind: TExprKind::CallSub { inst: name.to_string(), args: targs },
            span,
        })
    }
}

/// Operators that pass an expected bit/bv type straight to their operands.
fn propagates(op: BinOp, want: &Type) -> bool {
    use BinOp::*;
    match op {
        Add | Sub | Mul | Div | Rem | Shl | Shr => matches!(want, Type::Bv { .. }),
        And | Or | Xor => matches!(want, Type::Bv { .. } | Type::Bit),
        _ => false,
    }
}

fn literalish(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Int(_) => true,
        ExprKind::Unary(_, inner) => literalish(inner),
        _ => false,
    }
}

/// Evaluate a closed typed expression (state resets).
fn eval_const_texpr(e: &TExpr) -> std::result::Result<Value, String> {
    match &e.kind {
        TExprKind::BitLit(b) => Ok(Value::Bit(*b)),
        TExprKind::BvLit(v) => Ok(Value::Bv(*v)),
        TExprKind::EnumLit(index) => {
            let Type::Adt(t) = &e.ty else { unreachable!() };
            let bits = adt_encode(&AdtValue::Enum { ty: t.clone(), index: *index })
                .map_err(|err| err.to_string())?;
            Ok(Value::Bv(bits))
        }
        TExprKind::Op(op, args) => {
            let vals = args
                .iter()
                .map(eval_const_texpr)
                .collect::<std::result::Result<Vec<_>, _>>()?;
            bv_apply(*op, &vals).map_err(|err| err.to_string())
        }
        TExprKind::Ite(c, t, f) => {
            let c = eval_const_texpr(c)?.as_bit().map_err(|err| err.to_string())?;
            let t = eval_const_texpr(t)?;
            let f = eval_const_texpr(f)?;
            bv_ite(c, &t, &f).map_err(|err| err.to_string())
        }
        _ => Err("state reset must be a compile-time constant".to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::super::expand::expand;
    use super::super::parser::parse;
    use super::*;

    fn typed(src: &str) -> Result<TypedUnit> {
        typecheck(&expand(&parse(src).unwrap(), &[])?)
    }

    fn typed_ok(src: &str) -> TypedUnit {
        typed(src).unwrap_or_else(|e| panic!("expected to typecheck: {e}"))
    }

    fn typed_err(src: &str, needle: &str) {
        let err = typed(src).expect_err("expected a type error");
        assert!(
            err.to_string().contains(needle),
            "error `{err}` does not mention `{needle}`"
        );
    }

    const ALU: &str = "\
enum AluOp { ADD = 1, MUL = 0 }
type T = bv[8];
circuit ALU(op: AluOp, in_0: T, in_1: T) -> T {
    if op == AluOp.ADD {
        return in_0 + in_1;
    } else {
        return in_0 * in_1;
    }
}";

    #[test]
    fn alu_typechecks_and_enum_compare_is_eq() {
        let unit = typed_ok(ALU);
        let alu = unit.circuit("ALU").unwrap();
        assert!(!alu.stateful);
        assert_eq!(alu.output, Type::unsigned(8));
        let TStmt::If { cond, .. } = &alu.body[0] else { panic!() };
        assert!(matches!(cond.kind, TExprKind::Op(OpCode::Eq, _)));
        assert_eq!(cond.ty, Type::Bit);
    }

    #[test]
    fn literals_adopt_context_width() {
        let unit = typed_ok(
            "circuit T(a: bv[4]) -> bv[4] {\n    b = a + 1;\n    c = 1 + a;\n    return 15 - b + c;\n}",
        );
        let c = unit.circuit("T").unwrap();
        let TStmt::Assign { value, .. } = &c.body[0] else { panic!() };
        let TExprKind::Op(OpCode::BvAdd, args) = &value.kind else { panic!() };
        assert_eq!(args[1].kind, TExprKind::BvLit(BVValue::unsigned(1, 4).unwrap()));
    }

    #[test]
    fn bare_literals_need_context() {
        typed_err(
            "circuit T(a: bv[4]) -> bv[4] {\n    b = 0;\n    return a;\n}",
            "needs a type",
        );
        typed_err(
            "circuit T(a: bv[4]) -> bv[4] {\n    b = 1 + 2;\n    return a;\n}",
            "needs a type",
        );
    }

    #[test]
    fn ascription_gives_literals_a_type() {
        let unit = typed_ok(
            "circuit T(a: bv[4]) -> bv[4] {\n    b = 3 as bv[4];\n    return a + b;\n}",
        );
        let c = unit.circuit("T").unwrap();
        let TStmt::Assign { value, .. } = &c.body[0] else { panic!() };
        assert_eq!(value.ty, Type::unsigned(4));
    }

    #[test]
    fn literal_out_of_range_is_an_error() {
        typed_err(
            "circuit T(a: bv[4]) -> bv[4] {\n    return a + 16;\n}",
            "does not fit",
        );
    }

    #[test]
    fn signedness_never_mixes() {
        // under a known result type the mismatch surfaces as expected/found
        typed_err(
            "circuit T(a: bv[4], b: sbv[4]) -> bv[4] {\n    return a + b;\n}",
            "expected bv[4], found sbv[4]",
        );
        // equality has no expected type to propagate
        typed_err(
            "circuit T(a: bv[4], b: sbv[4]) -> bit {\n    return a == b;\n}",
            "expected bv[4], found sbv[4]",
        );
    }

    #[test]
    fn signed_comparison_dispatches_to_signed_ops() {
        let unit = typed_ok(
            "circuit T(a: sbv[4], b: sbv[4]) -> bit {\n    return a < b;\n}",
        );
        let c = unit.circuit("T").unwrap();
        let TStmt::Return(e) = &c.body[0] else { panic!() };
        assert!(matches!(e.kind, TExprKind::Op(OpCode::BvSlt, _)));

        let unit = typed_ok(
            "circuit T(a: bv[4], b: bv[4]) -> bit {\n    return a < b;\n}",
        );
        let TStmt::Return(e) = &unit.circuit("T").unwrap().body[0] else { panic!() };
        assert!(matches!(e.kind, TExprKind::Op(OpCode::BvUlt, _)));
    }

    #[test]
    fn signed_shift_and_division_dispatch() {
        let unit = typed_ok(
            "circuit T(a: sbv[8], b: sbv[8]) -> sbv[8] {\n    return a >> b / a % b;\n}",
        );
        let TStmt::Return(e) = &unit.circuit("T").unwrap().body[0] else { panic!() };
        let TExprKind::Op(OpCode::BvAshr, args) = &e.kind else { panic!("{e:?}") };
        let TExprKind::Op(OpCode::BvSrem, inner) = &args[1].kind else { panic!() };
        assert!(matches!(inner[0].kind, TExprKind::Op(OpCode::BvSdiv, _)));
    }

    #[test]
    fn width_mismatch_is_an_error() {
        typed_err(
            "circuit T(a: bv[4], b: bv[8]) -> bv[4] {\n    return a + b;\n}",
            "expected bv[4], found bv[8]",
        );
    }

    #[test]
    fn every_path_must_return() {
        typed_err(
            "circuit T(a: bv[4], c: bit) -> bv[4] {\n    if c {\n        return a;\n    }\n}",
            "not every path returns",
        );
    }

    #[test]
    fn unreachable_code_is_an_error() {
        typed_err(
            "circuit T(a: bv[4]) -> bv[4] {\n    return a;\n    b = a;\n    return b;\n}",
            "unreachable",
        );
    }

    #[test]
    fn branch_local_names_do_not_escape() {
        typed_err(
            "circuit T(a: bv[4], c: bit) -> bv[4] {\n    if c {\n        b = a;\n    }\n    return b;\n}",
            "not assigned on every path",
        );
        // assigned in both branches: fine
        typed_ok(
            "circuit T(a: bv[4], c: bit) -> bv[4] {\n    if c {\n        b = a;\n    } else {\n        b = a + 1;\n    }\n    return b;\n}",
        );
        // other branch returns: the binding flows out
        typed_ok(
            "circuit T(a: bv[4], c: bit) -> bv[4] {\n    if c {\n        return a;\n    } else {\n        b = a + 1;\n    }\n    return b;\n}",
        );
    }

    #[test]
    fn names_keep_one_type() {
        typed_err(
            "circuit T(a: bv[4], c: bit) -> bv[4] {\n    b = a;\n    b = c;\n    return b;\n}",
            "expected bv[4]",
        );
    }

    #[test]
    fn state_reads_writes_and_wrong_type_write() {
        typed_ok(
            "circuit Counter(en: bit) -> bv[8] {\n    state reg : bv[8] = 0;\n    s = reg;\n    if en {\n        s = s + 1;\n    }\n    reg = s;\n    return s;\n}",
        );
        typed_err(
            "circuit T(c: bit) -> bv[8] {\n    state reg : bv[8] = 0;\n    reg = c;\n    return reg;\n}",
            "expected bv[8]",
        );
    }

    #[test]
    fn state_resets_are_evaluated() {
        let unit = typed_ok(
            "enum Mode { IDLE = 0, RUN = 3 }\ncircuit T(c: bit) -> bv[2] {\n    state m : Mode = Mode.RUN;\n    state r : bv[2] = 1 + 1;\n    return r;\n}",
        );
        let c = unit.circuit("T").unwrap();
        assert_eq!(c.states[0].reset.raw_bits(), 3);
        assert_eq!(c.states[1].reset.raw_bits(), 2);
    }

    #[test]
    fn reset_too_wide_is_an_error() {
        typed_err(
            "circuit T(c: bit) -> bv[2] {\n    state r : bv[2] = 4;\n    return r;\n}",
            "does not fit",
        );
    }

    #[test]
    fn stateful_calls_are_disciplined() {
        let base = "circuit C(x: bv[4]) -> bv[4] {\n    state r : bv[4] = 0;\n    r = x;\n    return r;\n}\n";
        // exactly once, unconditionally: fine
        typed_ok(&format!(
            "{base}circuit T(x: bv[4]) -> bv[4] {{\n    inst c : C;\n    y = c(x);\n    return y;\n}}"
        ));
        // twice: error
        typed_err(
            &format!(
                "{base}circuit T(x: bv[4]) -> bv[4] {{\n    inst c : C;\n    y = c(x) + c(x);\n    return y;\n}}"
            ),
            "more than once",
        );
        // conditionally: error
        typed_err(
            &format!(
                "{base}circuit T(x: bv[4], b: bit) -> bv[4] {{\n    inst c : C;\n    if b {{\n        y = c(x);\n        return y;\n    }}\n    return x;\n}}"
            ),
            "conditionally",
        );
        // after a possible early return: error
        typed_err(
            &format!(
                "{base}circuit T(x: bv[4], b: bit) -> bv[4] {{\n    inst c : C;\n    if b {{\n        return x;\n    }}\n    y = c(x);\n    return y;\n}}"
            ),
            "every path",
        );
        // never called: error
        typed_err(
            &format!(
                "{base}circuit T(x: bv[4]) -> bv[4] {{\n    inst c : C;\n    return x;\n}}"
            ),
            "never called",
        );
    }

    #[test]
    fn stateless_calls_are_free() {
        let unit = typed_ok(&format!(
            "{ALU}\ncircuit Top(op: AluOp, x: T, b: bit) -> T {{\n    inst a1 : ALU;\n    if b {{\n        y = a1(op, x, x);\n    }} else {{\n        y = a1(op, x, x + 1);\n    }}\n    return y;\n}}"
        ));
        assert!(!unit.circuit("Top").unwrap().stateful);
    }

    #[test]
    fn statefulness_is_transitive() {
        let unit = typed_ok(
            "circuit C(x: bv[4]) -> bv[4] {\n    state r : bv[4] = 0;\n    r = x;\n    return r;\n}\ncircuit M(x: bv[4]) -> bv[4] {\n    inst c : C;\n    y = c(x);\n    return y;\n}\ncircuit T(x: bv[4]) -> bv[4] {\n    inst m : M;\n    y = m(x);\n    return y;\n}",
        );
        assert!(unit.circuit("M").unwrap().stateful);
        assert!(unit.circuit("T").unwrap().stateful);
    }

    #[test]
    fn recursive_instantiation_is_an_error() {
        typed_err(
            "circuit A(x: bv[4]) -> bv[4] {\n    inst b : B;\n    y = b(x);\n    return y;\n}\ncircuit B(x: bv[4]) -> bv[4] {\n    inst a : A;\n    y = a(x);\n    return y;\n}",
            "instantiates itself",
        );
    }

    #[test]
    fn product_fields_and_sum_accessors() {
        let unit = typed_ok(
            "enum AluOp { ADD = 1, MUL = 0 }\nproduct Inst {\n    op: AluOp,\n    imm: bv[4],\n}\nsum Operand { imm: bv[4], flag: bit }\ncircuit T(i: Inst, o: Operand) -> bv[4] {\n    x = i.imm;\n    t = o.tag;\n    p = o.imm;\n    if i.op == AluOp.ADD {\n        return x + p;\n    }\n    return x;\n}",
        );
        let c = unit.circuit("T").unwrap();
        let TStmt::Assign { value, .. } = &c.body[1] else { panic!() };
        assert_eq!(value.ty, Type::unsigned(1));
        assert!(matches!(value.kind, TExprKind::SumTag(_)));
    }

    #[test]
    fn unknown_field_and_variant_errors() {
        typed_err(
            "product P { a: bv[4] }\ncircuit T(p: P) -> bv[4] {\n    return p.b;\n}",
            "no field `b`",
        );
        typed_err(
            "enum E { A = 0 }\ncircuit T(e: E) -> bit {\n    return e == E.B;\n}",
            "no variant `B`",
        );
    }

    #[test]
    fn products_do_not_compare() {
        typed_err(
            "product P { a: bv[4] }\ncircuit T(p: P, q: P) -> bit {\n    return p == q;\n}",
            "compare fields",
        );
    }

    #[test]
    fn builtin_extensions_and_concat() {
        let unit = typed_ok(
            "circuit T(a: bv[4], s: sbv[4]) -> bv[8] {\n    z = zext(a, 8);\n    x = sext(s, 8);\n    t = trunc(z, 4);\n    c = concat(a, t);\n    return c;\n}",
        );
        let c = unit.circuit("T").unwrap();
        let TStmt::Assign { value, .. } = &c.body[1] else { panic!() };
        assert_eq!(value.ty, Type::Bv { width: 8, sign: Sign::Signed });
        let TStmt::Assign { value, .. } = &c.body[3] else { panic!() };
        assert_eq!(value.ty, Type::unsigned(8));
    }

    #[test]
    fn bit_index_bounds() {
        typed_err(
            "circuit T(a: bv[4]) -> bit {\n    return a[4];\n}",
            "out of range",
        );
        typed_err(
            "circuit T(a: bv[4]) -> bv[2] {\n    return a[0:1];\n}",
            "out of range",
        );
    }

    #[test]
    fn slices_are_unsigned() {
        let unit = typed_ok(
            "circuit T(a: sbv[8]) -> bv[4] {\n    return a[7:4];\n}",
        );
        let TStmt::Return(e) = &unit.circuit("T").unwrap().body[0] else { panic!() };
        assert_eq!(e.ty, Type::unsigned(4));
    }

    #[test]
    fn properties_resolve_out_and_next() {
        let unit = typed_ok(
            "circuit T(x: bv[4]) -> bv[4] {\n    state r : bv[4] = 0;\n    r = x;\n    return r;\n}\nproperty load on T { next(r) == x }\nproperty echo on T { out == r }",
        );
        assert_eq!(unit.properties.len(), 2);
        assert!(matches!(
            unit.property("load").unwrap().expr.kind,
            TExprKind::Op(OpCode::Eq, _)
        ));
    }

    #[test]
    fn next_outside_properties_is_an_error() {
        typed_err(
            "circuit T(x: bv[4]) -> bv[4] {\n    state r : bv[4] = 0;\n    r = x;\n    return next(r);\n}",
            "only available inside properties",
        );
    }

    #[test]
    fn next_of_non_state_is_an_error() {
        typed_err(
            "circuit T(x: bv[4]) -> bv[4] {\n    state r : bv[4] = 0;\n    r = x;\n    return r;\n}\nproperty p on T { next(x) == x }",
            "not a state",
        );
    }

    #[test]
    fn type_alias_cycle_is_an_error() {
        typed_err("type A = B;\ntype B = A;", "defined in terms of itself");
    }

    #[test]
    fn ascription_mismatch_is_an_error() {
        typed_err(
            "circuit T(a: bv[4]) -> bv[8] {\n    return a as bv[8];\n}",
            "expected bv[8], found bv[4]",
        );
    }

    #[test]
    fn ite_in_expressions() {
        let unit = typed_ok(
            "circuit T(c: bit, a: bv[4]) -> bv[4] {\n    return c.ite(a + 1, a - 1);\n}",
        );
        let TStmt::Return(e) = &unit.circuit("T").unwrap().body[0] else { panic!() };
        assert!(matches!(e.kind, TExprKind::Ite(..)));
    }
}
