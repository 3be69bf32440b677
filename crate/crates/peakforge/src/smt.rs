//! The formal interpretation: symbolic execution of normal forms into
//! hash-consed bitvector terms, SMT-LIB 2 emission, and concrete term
//! evaluation (the oracle the other backends are checked against).

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::adt::{AdtKind, AdtType, Type};
use crate::bitvec::{bv_apply, bv_ite, BVValue, OpCode, Sort, Value};
use crate::error::{Error, Result};
use crate::normalize::{NfExpr, NormalForm};

/// Handle into a [`TermPool`]. Children always have smaller ids than their
/// parents, so ascending id order is a topological order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(u32);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    /// Free variable: an input port or a state entry value.
    Var(String, Sort),
    BitLit(bool),
    BvLit(BVValue),
    Op(OpCode, Vec<TermId>),
    Ite(TermId, TermId, TermId),
}

/// Hash-consing term store: structurally equal terms share one node, so the
/// store is a DAG and evaluation/emission can memoize by id.
#[derive(Debug, Default)]
pub struct TermPool {
    nodes: Vec<Term>,
    sorts: Vec<Sort>,
    dedup: HashMap<Term, TermId>,
}

impl TermPool {
    pub fn new() -> Self {
        TermPool::default()
    }

    fn intern(&mut self, t: Term, sort: Sort) -> TermId {
        if let Some(&id) = self.dedup.get(&t) {
            return id;
        }
        let id = TermId(self.nodes.len() as u32);
        self.nodes.push(t.clone());
        self.sorts.push(sort);
        self.dedup.insert(t, id);
        id
    }

    pub fn var(&mut self, name: &str, sort: Sort) -> TermId {
        self.intern(Term::Var(name.to_string(), sort), sort)
    }

    pub fn bit(&mut self, b: bool) -> TermId {
        self.intern(Term::BitLit(b), Sort::Bit)
    }

    pub fn bv(&mut self, v: BVValue) -> TermId {
        let sort = Sort::Bv(v.width());
        self.intern(Term::BvLit(v), sort)
    }

    /// Sort-checked operator application.
    pub fn apply(&mut self, op: OpCode, args: Vec<TermId>) -> Result<TermId> {
        let sorts: Vec<Sort> = args.iter().map(|&a| self.sort(a)).collect();
        let sort = op.result_sort(&sorts)?;
        Ok(self.intern(Term::Op(op, args), sort))
    }

    pub fn ite(&mut self, cond: TermId, t: TermId, e: TermId) -> Result<TermId> {
        if self.sort(cond) != Sort::Bit {
            return Err(Error::Emit(format!(
                "ite condition must be a bit, got {:?}",
                self.sort(cond)
            )));
        }
        if self.sort(t) != self.sort(e) {
            return Err(Error::Emit(format!(
                "ite branches disagree: {:?} vs {:?}",
                self.sort(t),
                self.sort(e)
            )));
        }
        let sort = self.sort(t);
        Ok(self.intern(Term::Ite(cond, t, e), sort))
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.nodes[id.0 as usize]
    }

    pub fn sort(&self, id: TermId) -> Sort {
        self.sorts[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn children(&self, id: TermId) -> Vec<TermId> {
        match self.term(id) {
            Term::Var(..) | Term::BitLit(_) | Term::BvLit(_) => vec![],
            Term::Op(_, args) => args.clone(),
            Term::Ite(c, t, e) => vec![*c, *t, *e],
        }
    }

    fn is_leaf(&self, id: TermId) -> bool {
        matches!(
            self.term(id),
            Term::Var(..) | Term::BitLit(_) | Term::BvLit(_)
        )
    }
}

/// A circuit as terms: one free variable per input and per state element,
/// one term per next-state value, one output term, and the validity
/// constraints that confine algebraic variables to decodable encodings.
#[derive(Debug)]
pub struct SymbolicModel {
    pub circuit: String,
    pub pool: TermPool,
    pub inputs: Vec<(String, Type, TermId)>,
    pub states: Vec<(String, Type, TermId)>,
    /// Aligned with `states`.
    pub next: Vec<(String, TermId)>,
    pub output: TermId,
    pub output_ty: Type,
    pub validity: Vec<TermId>,
}

/// Symbolically execute a normal form: every def becomes a term over the
/// input and state-entry variables.
pub fn symexec(nf: &NormalForm) -> Result<SymbolicModel> {
    let mut pool = TermPool::new();
    let mut env: HashMap<String, TermId> = HashMap::new();

    let mut inputs = Vec::with_capacity(nf.inputs.len());
    for (name, ty) in &nf.inputs {
        let id = pool.var(name, ty.sort());
        env.insert(name.clone(), id);
        inputs.push((name.clone(), ty.clone(), id));
    }
    let mut states = Vec::with_capacity(nf.states.len());
    for s in &nf.states {
        let id = pool.var(&s.name, s.ty.sort());
        env.insert(s.name.clone(), id);
        states.push((s.name.clone(), s.ty.clone(), id));
    }

    let mut validity = Vec::new();
    for (_, ty, id) in inputs.iter().chain(states.iter()) {
        if let Type::Adt(t) = ty {
            if let Some(v) = valid_encoding(&mut pool, t, *id)? {
                validity.push(v);
            }
        }
    }

    for d in &nf.defs {
        let id = lower(&mut pool, &env, &d.expr)?;
        env.insert(d.name.clone(), id);
    }
    let output = lower(&mut pool, &env, &nf.output)?;
    let next = nf
        .next
        .iter()
        .map(|(name, e)| Ok((name.clone(), lower(&mut pool, &env, e)?)))
        .collect::<Result<Vec<_>>>()?;

    Ok(SymbolicModel {
        circuit: nf.name.clone(),
        pool,
        inputs,
        states,
        next,
        output,
        output_ty: nf.output_ty.clone(),
        validity,
    })
}

/// Lower one normal-form expression over an environment of already-built
/// terms. Also used by the property path, which resolves `out`/`next(s)`
/// to model terms before calling this.
pub fn lower(pool: &mut TermPool, env: &HashMap<String, TermId>, e: &NfExpr) -> Result<TermId> {
    Ok(match e {
        NfExpr::Var(n) | NfExpr::StateEntry(n) => *env.get(n).ok_or_else(|| {
            Error::Emit(format!("`{n}` has no term (corrupt normal form)"))
        })?,
        NfExpr::BitLit(b) => pool.bit(*b),
        NfExpr::BvLit(v) => pool.bv(*v),
        NfExpr::Op(op, args) => {
            let args = args
                .iter()
                .map(|a| lower(pool, env, a))
                .collect::<Result<Vec<_>>>()?;
            pool.apply(*op, args)?
        }
        NfExpr::Ite(c, t, f) => {
            let c = lower(pool, env, c)?;
            let t = lower(pool, env, t)?;
            let f = lower(pool, env, f)?;
            pool.ite(c, t, f)?
        }
        NfExpr::BitIndex(b, i) => {
            let b = lower(pool, env, b)?;
            let bit = pool.apply(OpCode::Extract { hi: *i, lo: *i }, vec![b])?;
            let one = pool.bv(BVValue::unsigned(1, 1)?);
            pool.apply(OpCode::Eq, vec![bit, one])?
        }
        NfExpr::CallSub { inst, .. } => {
            return Err(Error::Emit(format!(
                "call to `{inst}` survived inlining (corrupt normal form)"
            )))
        }
    })
}

/// True when every bit pattern of the type decodes, so no constraint is
/// needed.
fn fully_valid(ty: &Type) -> bool {
    match ty {
        Type::Bit | Type::Bv { .. } => true,
        Type::Adt(t) => match (t.count(), 1u128.checked_shl(t.width())) {
            (Some(c), Some(full)) => c == full,
            _ => false,
        },
    }
}

/// Build the predicate that holds exactly on the valid encodings of `t`,
/// mirroring the concrete decoder. `None` means every pattern is valid.
pub(crate) fn valid_encoding(
    pool: &mut TermPool,
    t: &Arc<AdtType>,
    x: TermId,
) -> Result<Option<TermId>> {
    let w = t.width();
    if fully_valid(&Type::Adt(t.clone())) {
        return Ok(None);
    }
    let full_mask = if w == 128 { u128::MAX } else { (1u128 << w) - 1 };
    match &t.kind {
        AdtKind::Enum(vs) => {
            let mut alts = Vec::with_capacity(vs.len());
            for v in vs {
                let code = pool.bv(BVValue::unsigned(v.value, w)?);
                alts.push(pool.apply(OpCode::Eq, vec![x, code])?);
            }
            Ok(Some(or_fold(pool, alts)?))
        }
        AdtKind::Product(fs) => {
            let ranges = t.field_ranges();
            let mut used = 0u128;
            for &(hi, lo) in &ranges {
                let span = hi - lo + 1;
                let m = if span == 128 { u128::MAX } else { (1u128 << span) - 1 };
                used |= m << lo;
            }
            let mut conj = Vec::new();
            if used != full_mask {
                let unused = pool.bv(BVValue::unsigned(!used & full_mask, w)?);
                let zero = pool.bv(BVValue::unsigned(0, w)?);
                let masked = pool.apply(OpCode::BvAnd, vec![x, unused])?;
                conj.push(pool.apply(OpCode::Eq, vec![masked, zero])?);
            }
            for (f, &(hi, lo)) in fs.iter().zip(&ranges) {
                if fully_valid(&f.ty) {
                    continue;
                }
                if let Type::Adt(ft) = &f.ty {
                    let slice = pool.apply(OpCode::Extract { hi, lo }, vec![x])?;
                    if let Some(v) = valid_encoding(pool, ft, slice)? {
                        conj.push(v);
                    }
                }
            }
            Ok(if conj.is_empty() { None } else { Some(and_fold(pool, conj)?) })
        }
        AdtKind::Sum(vs) => {
            let tw = t.tag_width();
            let mut alts = Vec::with_capacity(vs.len());
            for (i, v) in vs.iter().enumerate() {
                let mut conj = Vec::new();
                let tag = pool.apply(OpCode::Extract { hi: tw - 1, lo: 0 }, vec![x])?;
                let code = pool.bv(BVValue::unsigned(i as u128, tw)?);
                conj.push(pool.apply(OpCode::Eq, vec![tag, code])?);
                let pw = v.ty.encoded_width();
                if tw + pw < w {
                    let pad = pool.apply(
                        OpCode::Extract { hi: w - 1, lo: tw + pw },
                        vec![x],
                    )?;
                    let zero = pool.bv(BVValue::unsigned(0, w - tw - pw)?);
                    conj.push(pool.apply(OpCode::Eq, vec![pad, zero])?);
                }
                if !fully_valid(&v.ty) {
                    if let Type::Adt(vt) = &v.ty {
                        let slice = pool.apply(
                            OpCode::Extract { hi: tw + pw - 1, lo: tw },
                            vec![x],
                        )?;
                        if let Some(c) = valid_encoding(pool, vt, slice)? {
                            conj.push(c);
                        }
                    }
                }
                alts.push(and_fold(pool, conj)?);
            }
            Ok(Some(or_fold(pool, alts)?))
        }
    }
}

fn and_fold(pool: &mut TermPool, terms: Vec<TermId>) -> Result<TermId> {
    fold_op(pool, OpCode::And, terms)
}

fn or_fold(pool: &mut TermPool, terms: Vec<TermId>) -> Result<TermId> {
    fold_op(pool, OpCode::Or, terms)
}

fn fold_op(pool: &mut TermPool, op: OpCode, terms: Vec<TermId>) -> Result<TermId> {
    let mut it = terms.into_iter();
    let first = it
        .next()
        .ok_or_else(|| Error::Emit("empty connective fold".into()))?;
    it.try_fold(first, |acc, t| pool.apply(op, vec![acc, t]))
}

/// Evaluate a term bottom-up under a valuation of its free variables,
/// delegating every operator to the concrete bitvector semantics.
pub fn eval_term(
    pool: &TermPool,
    id: TermId,
    valuation: &HashMap<String, Value>,
) -> Result<Value> {
    let mut memo: Vec<Option<Value>> = vec![None; pool.len()];
    eval_rec(pool, id, valuation, &mut memo)
}

fn eval_rec(
    pool: &TermPool,
    id: TermId,
    valuation: &HashMap<String, Value>,
    memo: &mut Vec<Option<Value>>,
) -> Result<Value> {
    if let Some(v) = memo[id.0 as usize] {
        return Ok(v);
    }
    let v = match pool.term(id) {
        Term::Var(name, _) => *valuation
            .get(name)
            .ok_or_else(|| Error::Eval(format!("no value for `{name}`")))?,
        Term::BitLit(b) => Value::Bit(*b),
        Term::BvLit(bv) => Value::Bv(*bv),
        Term::Op(op, args) => {
            let vals = args
                .iter()
                .map(|&a| eval_rec(pool, a, valuation, memo))
                .collect::<Result<Vec<_>>>()?;
            bv_apply(*op, &vals)?
        }
        Term::Ite(c, t, e) => {
            let c = eval_rec(pool, *c, valuation, memo)?.as_bit()?;
            let t = eval_rec(pool, *t, valuation, memo)?;
            let e = eval_rec(pool, *e, valuation, memo)?;
            bv_ite(c, &t, &e)?
        }
    };
    memo[id.0 as usize] = Some(v);
    Ok(v)
}

impl SymbolicModel {
    /// Concrete output and next-state values for one step — the formal
    /// model's own opinion, for cross-checking against the interpreter.
    pub fn eval(&self, inputs: &[Value], states: &[Value]) -> Result<(Value, Vec<Value>)> {
        let valuation = self.valuation(inputs, states)?;
        let out = eval_term(&self.pool, self.output, &valuation)?;
        let next = self
            .next
            .iter()
            .map(|(_, t)| eval_term(&self.pool, *t, &valuation))
            .collect::<Result<Vec<_>>>()?;
        Ok((out, next))
    }

    /// Bind input and state values to this model's variable names,
    /// validating counts and sorts.
    pub fn valuation(
        &self,
        inputs: &[Value],
        states: &[Value],
    ) -> Result<HashMap<String, Value>> {
        if inputs.len() != self.inputs.len() || states.len() != self.states.len() {
            return Err(Error::Eval(format!(
                "`{}` takes {} input(s) and {} state(s), got {} and {}",
                self.circuit,
                self.inputs.len(),
                self.states.len(),
                inputs.len(),
                states.len()
            )));
        }
        let mut m = HashMap::new();
        for ((name, ty, _), v) in self.inputs.iter().zip(inputs) {
            if v.sort() != ty.sort() {
                return Err(Error::Eval(format!(
                    "input `{name}` wants {:?}, got {:?}",
                    ty.sort(),
                    v.sort()
                )));
            }
            m.insert(name.clone(), *v);
        }
        for ((name, ty, _), v) in self.states.iter().zip(states) {
            if v.sort() != ty.sort() {
                return Err(Error::Eval(format!(
                    "state `{name}` wants {:?}, got {:?}",
                    ty.sort(),
                    v.sort()
                )));
            }
            m.insert(name.clone(), *v);
        }
        Ok(m)
    }
}

// ---- SMT-LIB 2 emission ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitMode {
    /// Declarations plus `out`/`next_*` definitions; no assertions.
    TransitionFun,
    /// Additionally asserts encoding validity and one goal term, then
    /// `(check-sat)`.
    Assertion,
}

/// The SMT symbol an input port is declared under.
pub fn input_symbol(circuit: &str, port: &str) -> String {
    sanitize(&format!("{circuit}.{port}"))
}

/// The SMT symbol a state's entry value is declared under.
pub fn state_symbol(circuit: &str, state: &str) -> String {
    sanitize(&format!("{circuit}.{state}__in"))
}

/// SMT-LIB simple symbols allow letters, digits and `~!@$%^&*_-+=<>.?/`;
/// anything else becomes `_`, and a leading digit is prefixed.
pub(crate) fn sanitize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c) {
            out.push(c);
        } else {
            out.push('_');
        }
    }
    if out.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        out.insert(0, '_');
    }
    out
}

pub(crate) fn sort_text(s: Sort) -> String {
    match s {
        Sort::Bit => "Bool".to_string(),
        Sort::Bv(w) => format!("(_ BitVec {w})"),
    }
}

pub(crate) fn bv_text(v: &BVValue) -> String {
    let w = v.width() as usize;
    let mut s = String::with_capacity(w + 2);
    s.push_str("#b");
    for i in (0..w).rev() {
        s.push(if (v.bits() >> i) & 1 == 1 { '1' } else { '0' });
    }
    s
}

/// Grab `want`, suffixing `~` until it is free of `taken`.
pub(crate) fn claim(taken: &mut BTreeSet<String>, want: String) -> String {
    let mut name = want;
    while taken.contains(&name) {
        name.push('~');
    }
    taken.insert(name.clone());
    name
}

/// The symbol each input and state is declared under, in declaration order
/// (inputs first), exactly as [`emit_smtlib`] names them — collision
/// suffixes included. Model output from a solver maps back through this.
pub fn declaration_symbols(m: &SymbolicModel) -> Vec<String> {
    let mut taken = BTreeSet::new();
    m.inputs
        .iter()
        .map(|(name, _, _)| input_symbol(&m.circuit, name))
        .chain(m.states.iter().map(|(name, _, _)| state_symbol(&m.circuit, name)))
        .map(|want| claim(&mut taken, want))
        .collect()
}

/// Render a symbolic model as SMT-LIB 2 text. Subterms referenced more than
/// once become zero-argument `define-fun`s so the text stays linear in the
/// DAG. Output is a pure function of the model and mode.
pub fn emit_smtlib(
    m: &SymbolicModel,
    mode: EmitMode,
    extra: Option<TermId>,
) -> Result<String> {
    match mode {
        EmitMode::Assertion => {
            let goal = extra.ok_or_else(|| {
                Error::Emit("assertion output needs a term to assert".into())
            })?;
            if m.pool.sort(goal) != Sort::Bit {
                return Err(Error::Emit(format!(
                    "asserted term must be a bit, got {:?}",
                    m.pool.sort(goal)
                )));
            }
        }
        EmitMode::TransitionFun => {
            if extra.is_some() {
                return Err(Error::Emit(
                    "transition output carries no assertions".into(),
                ));
            }
        }
    }

    let decl_syms = declaration_symbols(m);
    let mut taken: BTreeSet<String> = decl_syms.iter().cloned().collect();
    let mut names: HashMap<TermId, String> = HashMap::new();

    let mut text = String::new();
    let _ = writeln!(text, "; circuit {}", m.circuit);
    let _ = writeln!(text, "; symbol = source : type");
    let mut decls: Vec<(String, Sort)> = Vec::new();
    for ((name, ty, id), sym) in m.inputs.iter().zip(&decl_syms) {
        let _ = writeln!(text, ";   {sym} = {name} : {ty}");
        names.insert(*id, sym.clone());
        decls.push((sym.clone(), ty.sort()));
    }
    for ((name, ty, id), sym) in m.states.iter().zip(&decl_syms[m.inputs.len()..]) {
        let _ = writeln!(text, ";   {sym} = state {name} : {ty}");
        names.insert(*id, sym.clone());
        decls.push((sym.clone(), ty.sort()));
    }

    let _ = writeln!(text, "(set-logic QF_BV)");
    for (sym, sort) in &decls {
        let _ = writeln!(text, "(declare-const {sym} {})", sort_text(*sort));
    }

    // reference counts over everything this mode will print
    let mut roots = vec![m.output];
    roots.extend(m.next.iter().map(|(_, t)| *t));
    if mode == EmitMode::Assertion {
        roots.extend(m.validity.iter().copied());
        roots.extend(extra);
    }
    let refs = count_refs(&m.pool, &roots);

    // shared interior nodes become named defs, in topological (id) order
    let mut shared = 0usize;
    for i in 0..m.pool.len() {
        let id = TermId(i as u32);
        if refs[i] >= 2 && !m.pool.is_leaf(id) {
            let sym = claim(&mut taken, format!(".t{shared}"));
            shared += 1;
            let mut body = String::new();
            print_node(&m.pool, id, &names, &mut body);
            let _ = writeln!(
                text,
                "(define-fun {sym} () {} {body})",
                sort_text(m.pool.sort(id))
            );
            names.insert(id, sym);
        }
    }

    let out_sym = claim(&mut taken, "out".to_string());
    let mut body = String::new();
    print_ref(&m.pool, m.output, &names, &mut body);
    let _ = writeln!(
        text,
        "(define-fun {out_sym} () {} {body})",
        sort_text(m.pool.sort(m.output))
    );
    for (state, t) in &m.next {
        let sym = claim(&mut taken, sanitize(&format!("next_{state}")));
        let mut body = String::new();
        print_ref(&m.pool, *t, &names, &mut body);
        let _ = writeln!(
            text,
            "(define-fun {sym} () {} {body})",
            sort_text(m.pool.sort(*t))
        );
    }

    if mode == EmitMode::Assertion {
        for v in &m.validity {
            let mut body = String::new();
            print_ref(&m.pool, *v, &names, &mut body);
            let _ = writeln!(text, "(assert {body})");
        }
        let mut body = String::new();
        print_ref(&m.pool, extra.unwrap(), &names, &mut body);
        let _ = writeln!(text, "(assert {body})");
        let _ = writeln!(text, "(check-sat)");
    }

    Ok(text)
}

fn count_refs(pool: &TermPool, roots: &[TermId]) -> Vec<u32> {
    let mut refs = vec![0u32; pool.len()];
    let mut seen = vec![false; pool.len()];
    let mut stack = Vec::new();
    for &r in roots {
        refs[r.0 as usize] += 1;
        if !seen[r.0 as usize] {
            seen[r.0 as usize] = true;
            stack.push(r);
        }
    }
    while let Some(id) = stack.pop() {
        for c in pool.children(id) {
            refs[c.0 as usize] += 1;
            if !seen[c.0 as usize] {
                seen[c.0 as usize] = true;
                stack.push(c);
            }
        }
    }
    refs
}

/// Print a reference to a node: its assigned name if it has one, else its
/// structure.
pub(crate) fn print_ref(
    pool: &TermPool,
    id: TermId,
    names: &HashMap<TermId, String>,
    out: &mut String,
) {
    if let Some(n) = names.get(&id) {
        out.push_str(n);
    } else {
        print_node(pool, id, names, out);
    }
}

/// Print a node's structure (children still go through references).
fn print_node(pool: &TermPool, id: TermId, names: &HashMap<TermId, String>, out: &mut String) {
    match pool.term(id) {
        Term::Var(name, _) => out.push_str(&sanitize(name)),
        Term::BitLit(b) => out.push_str(if *b { "true" } else { "false" }),
        Term::BvLit(v) => out.push_str(&bv_text(v)),
        Term::Op(op, args) => {
            out.push('(');
            match op {
                OpCode::Extract { hi, lo } => {
                    let _ = write!(out, "(_ extract {hi} {lo})");
                }
                OpCode::ZeroExtend { by } => {
                    let _ = write!(out, "(_ zero_extend {by})");
                }
                OpCode::SignExtend { by } => {
                    let _ = write!(out, "(_ sign_extend {by})");
                }
                _ => out.push_str(op.mnemonic()),
            }
            for &a in args {
                out.push(' ');
                print_ref(pool, a, names, out);
            }
            out.push(')');
        }
        Term::Ite(c, t, e) => {
            out.push_str("(ite ");
            print_ref(pool, *c, names, out);
            out.push(' ');
            print_ref(pool, *t, names, out);
            out.push(' ');
            print_ref(pool, *e, names, out);
            out.push(')');
        }
    }
}

// ---- internal well-formedness checker for emitted text ----

#[derive(Debug, PartialEq)]
pub(crate) enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

pub(crate) fn parse_sexps(text: &str) -> std::result::Result<Vec<Sexp>, String> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '(' => tokens.push("(".to_string()),
            ')' => tokens.push(")".to_string()),
            c if c.is_whitespace() => {}
            c => {
                let mut atom = String::new();
                atom.push(c);
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' || n == ';' {
                        break;
                    }
                    atom.push(n);
                    chars.next();
                }
                tokens.push(atom);
            }
        }
    }
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    for t in tokens {
        match t.as_str() {
            "(" => stack.push(Vec::new()),
            ")" => {
                let done = stack.pop().ok_or("unbalanced `)`")?;
                stack
                    .last_mut()
                    .ok_or("unbalanced `)`")?
                    .push(Sexp::List(done));
            }
            _ => stack.last_mut().unwrap().push(Sexp::Atom(t)),
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced `(`".to_string());
    }
    Ok(stack.pop().unwrap())
}

pub(crate) fn atom(s: &Sexp) -> std::result::Result<&str, String> {
    match s {
        Sexp::Atom(a) => Ok(a),
        Sexp::List(_) => Err("expected an atom".to_string()),
    }
}

fn parse_sort(s: &Sexp) -> std::result::Result<Sort, String> {
    match s {
        Sexp::Atom(a) if a == "Bool" => Ok(Sort::Bit),
        Sexp::List(items) => {
            if items.len() == 3
                && atom(&items[0])? == "_"
                && atom(&items[1])? == "BitVec"
            {
                let w: u32 = atom(&items[2])?
                    .parse()
                    .map_err(|_| "bad bitvector width".to_string())?;
                if w == 0 {
                    return Err("zero-width bitvector sort".to_string());
                }
                return Ok(Sort::Bv(w));
            }
            Err(format!("unknown sort {s:?}"))
        }
        Sexp::Atom(a) => Err(format!("unknown sort `{a}`")),
    }
}

fn op_from_mnemonic(name: &str) -> Option<OpCode> {
    use OpCode::*;
    const PLAIN: &[OpCode] = &[
        BvNeg, BvNot, BvAdd, BvSub, BvMul, BvUdiv, BvUrem, BvSdiv, BvSrem, BvAnd,
        BvOr, BvXor, BvShl, BvLshr, BvAshr, BvComp, BvUlt, BvUle, BvUgt, BvUge,
        BvSlt, BvSle, BvSgt, BvSge, Concat, Eq, Neq, And, Or, Xor, Not,
    ];
    PLAIN.iter().copied().find(|op| op.mnemonic() == name)
}

fn infer_sort(
    e: &Sexp,
    env: &HashMap<String, Sort>,
) -> std::result::Result<Sort, String> {
    match e {
        Sexp::Atom(a) => {
            if a == "true" || a == "false" {
                return Ok(Sort::Bit);
            }
            if let Some(b) = a.strip_prefix("#b") {
                if b.is_empty() || !b.chars().all(|c| c == '0' || c == '1') {
                    return Err(format!("bad binary literal `{a}`"));
                }
                return Ok(Sort::Bv(b.len() as u32));
            }
            if let Some(h) = a.strip_prefix("#x") {
                if h.is_empty() || !h.chars().all(|c| c.is_ascii_hexdigit()) {
                    return Err(format!("bad hex literal `{a}`"));
                }
                return Ok(Sort::Bv(4 * h.len() as u32));
            }
            env.get(a)
                .copied()
                .ok_or_else(|| format!("`{a}` used before declaration"))
        }
        Sexp::List(items) => {
            if items.is_empty() {
                return Err("empty application".to_string());
            }
            if let Sexp::Atom(h) = &items[0] {
                if h == "forall" {
                    if items.len() != 3 {
                        return Err("forall takes binders and a body".to_string());
                    }
                    let Sexp::List(binders) = &items[1] else {
                        return Err("forall binders must be a list".to_string());
                    };
                    let mut inner = env.clone();
                    for b in binders {
                        let Sexp::List(pair) = b else {
                            return Err("each binder is (name sort)".to_string());
                        };
                        if pair.len() != 2 {
                            return Err("each binder is (name sort)".to_string());
                        }
                        inner.insert(atom(&pair[0])?.to_string(), parse_sort(&pair[1])?);
                    }
                    if infer_sort(&items[2], &inner)? != Sort::Bit {
                        return Err("forall body is not Bool".to_string());
                    }
                    return Ok(Sort::Bit);
                }
            }
            let args: Vec<Sort> = items[1..]
                .iter()
                .map(|a| infer_sort(a, env))
                .collect::<std::result::Result<_, _>>()?;
            let op = match &items[0] {
                Sexp::Atom(h) if h == "ite" => {
                    if args.len() != 3 {
                        return Err("ite takes three arguments".to_string());
                    }
                    if args[0] != Sort::Bit {
                        return Err("ite condition must be Bool".to_string());
                    }
                    if args[1] != args[2] {
                        return Err("ite branch sorts differ".to_string());
                    }
                    return Ok(args[1]);
                }
                Sexp::Atom(h) => op_from_mnemonic(h)
                    .ok_or_else(|| format!("unknown operator `{h}`"))?,
                Sexp::List(idx) => {
                    // indexed operator: (_ name numerals...)
                    if idx.len() < 2 || atom(&idx[0])? != "_" {
                        return Err(format!("bad application head {idx:?}"));
                    }
                    let name = atom(&idx[1])?;
                    let nums: Vec<u32> = idx[2..]
                        .iter()
                        .map(|n| {
                            atom(n)?
                                .parse::<u32>()
                                .map_err(|_| "bad index numeral".to_string())
                        })
                        .collect::<std::result::Result<_, _>>()?;
                    match (name, nums.as_slice()) {
                        ("extract", &[hi, lo]) => OpCode::Extract { hi, lo },
                        ("zero_extend", &[by]) => OpCode::ZeroExtend { by },
                        ("sign_extend", &[by]) => OpCode::SignExtend { by },
                        _ => return Err(format!("unknown indexed operator `{name}`")),
                    }
                }
            };
            if args.len() != op.arity() {
                return Err(format!(
                    "`{}` takes {} argument(s), got {}",
                    op.mnemonic(),
                    op.arity(),
                    args.len()
                ));
            }
            op.result_sort(&args).map_err(|e| e.to_string())
        }
    }
}

/// Structural and sort-level well-formedness of emitted SMT-LIB text:
/// balanced forms, known commands, symbols declared before use, and every
/// expression sort-correct under the bitvector typing rules.
pub fn check_smtlib(text: &str) -> Result<()> {
    check_smtlib_inner(text).map_err(Error::Emit)
}

fn check_smtlib_inner(text: &str) -> std::result::Result<(), String> {
    let forms = parse_sexps(text)?;
    let mut env: HashMap<String, Sort> = HashMap::new();
    for form in &forms {
        let items = match form {
            Sexp::List(items) if !items.is_empty() => items,
            _ => return Err(format!("stray form {form:?}")),
        };
        match atom(&items[0])? {
            "set-logic" => {
                if items.len() != 2 {
                    return Err("set-logic takes one symbol".to_string());
                }
                atom(&items[1])?;
            }
            "declare-const" => {
                if items.len() != 3 {
                    return Err("declare-const takes a name and a sort".to_string());
                }
                let name = atom(&items[1])?;
                let sort = parse_sort(&items[2])?;
                if env.insert(name.to_string(), sort).is_some() {
                    return Err(format!("`{name}` declared twice"));
                }
            }
            "define-fun" => {
                if items.len() != 5 {
                    return Err(
                        "define-fun takes name, parameters, sort, body".to_string()
                    );
                }
                let name = atom(&items[1])?;
                match &items[2] {
                    Sexp::List(ps) if ps.is_empty() => {}
                    _ => return Err("only zero-parameter definitions".to_string()),
                }
                let declared = parse_sort(&items[3])?;
                let actual = infer_sort(&items[4], &env)?;
                if declared != actual {
                    return Err(format!(
                        "`{name}` declared {declared:?} but body is {actual:?}"
                    ));
                }
                if env.insert(name.to_string(), declared).is_some() {
                    return Err(format!("`{name}` declared twice"));
                }
            }
            "assert" => {
                if items.len() != 2 {
                    return Err("assert takes one term".to_string());
                }
                if infer_sort(&items[1], &env)? != Sort::Bit {
                    return Err("asserted term is not Bool".to_string());
                }
            }
            "check-sat" | "get-model" | "exit" => {
                if items.len() != 1 {
                    return Err(format!("{} takes no arguments", atom(&items[0])?));
                }
            }
            other => return Err(format!("unknown command `{other}`")),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::Evaluator;
    use crate::normalize::normalize_circuit;
    use crate::surface::{expand, parse, typecheck};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(src: &str, circuit: &str) -> SymbolicModel {
        let unit = typecheck(&expand(&parse(src).unwrap(), &[]).unwrap()).unwrap();
        symexec(&normalize_circuit(&unit, circuit).unwrap()).unwrap()
    }

    fn bv(v: u128, w: u32) -> Value {
        Value::Bv(BVValue::unsigned(v, w).unwrap())
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
    fn alu_output_is_a_mux_over_the_opcode() {
        let m = model(ALU, "ALU");
        let Term::Ite(c, t, e) = m.pool.term(m.output) else {
            panic!("output should be an ite");
        };
        assert!(matches!(m.pool.term(*c), Term::Op(OpCode::Eq, _)));
        assert!(matches!(m.pool.term(*t), Term::Op(OpCode::BvAdd, _)));
        assert!(matches!(m.pool.term(*e), Term::Op(OpCode::BvMul, _)));
    }

    #[test]
    fn pass_through_output_is_the_input_variable() {
        let m = model("circuit P(x: bv[8]) -> bv[8] {\n    return x;\n}", "P");
        assert_eq!(m.output, m.inputs[0].2);
    }

    #[test]
    fn eval_delegates_to_bitvector_semantics() {
        let mut pool = TermPool::new();
        let x = pool.var("x", Sort::Bv(8));
        let y = pool.var("y", Sort::Bv(8));
        let add = pool.apply(OpCode::BvAdd, vec![x, y]).unwrap();
        let mut v = HashMap::new();
        v.insert("x".to_string(), bv(0xff, 8));
        v.insert("y".to_string(), bv(1, 8));
        assert_eq!(eval_term(&pool, add, &v).unwrap(), bv(0, 8));

        let b = pool.var("b", Sort::Bit);
        let ite = pool.ite(b, x, y).unwrap();
        v.insert("b".to_string(), Value::Bit(false));
        assert_eq!(eval_term(&pool, ite, &v).unwrap(), bv(1, 8));

        v.remove(&"y".to_string());
        let err = eval_term(&pool, add, &v).unwrap_err().to_string();
        assert!(err.contains("no value for `y`"), "{err}");
    }

    const COUNTER4: &str = "\
circuit Counter(en: bit) -> bv[4] {
    state reg : bv[4] = 0;
    s = reg;
    if en {
        s = s + 1;
    }
    reg = s;
    return s;
}";

    #[test]
    fn counter_terms_match_interpreter_exhaustively() {
        let unit =
            typecheck(&expand(&parse(COUNTER4).unwrap(), &[]).unwrap()).unwrap();
        let nf = normalize_circuit(&unit, "Counter").unwrap();
        let m = symexec(&nf).unwrap();
        let ev = Evaluator::new(&nf).unwrap();
        for reg in 0..16u128 {
            for en in [false, true] {
                let inputs = [Value::Bit(en)];
                let states = [bv(reg, 4)];
                let (o1, n1) = m.eval(&inputs, &states).unwrap();
                let (o2, n2) = ev.step(&inputs, &states).unwrap();
                assert_eq!(o1, o2, "out reg={reg} en={en}");
                assert_eq!(n1, n2, "next reg={reg} en={en}");
            }
        }
    }

    const REGALU: &str = "\
enum AluOp { ADD = 1, MUL = 0 }
type T = bv[8];
circuit ALU(op: AluOp, in_0: T, in_1: T) -> T {
    if op == AluOp.ADD {
        return in_0 + in_1;
    } else {
        return in_0 * in_1;
    }
}
circuit RegALU(op: AluOp, in_0: T, wr: bit) -> T {
    state reg_0 : T = 0;
    state reg_1 : T = 0;
    inst alu : ALU;
    if wr {
        reg_1 = in_0;
    }
    acc = alu(op, reg_0, reg_1);
    reg_0 = acc;
    return acc;
}";

    #[test]
    fn regalu_terms_match_interpreter_on_random_vectors() {
        let unit = typecheck(&expand(&parse(REGALU).unwrap(), &[]).unwrap()).unwrap();
        let nf = normalize_circuit(&unit, "RegALU").unwrap();
        let m = symexec(&nf).unwrap();
        let ev = Evaluator::new(&nf).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let inputs = [
                bv(rng.gen_range(0..2), 1),
                bv(rng.gen_range(0..256), 8),
                Value::Bit(rng.gen()),
            ];
            let states = [bv(rng.gen_range(0..256), 8), bv(rng.gen_range(0..256), 8)];
            let (o1, n1) = m.eval(&inputs, &states).unwrap();
            let (o2, n2) = ev.step(&inputs, &states).unwrap();
            assert_eq!(o1, o2);
            assert_eq!(n1, n2);
        }
    }

    #[test]
    fn interning_shares_structurally_equal_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let seed: u64 = rng.gen();
            let mut pool = TermPool::new();
            let x = pool.var("x", Sort::Bv(8));
            let y = pool.var("y", Sort::Bv(8));
            let (t1, mirror) = random_term(&mut pool, x, y, seed);
            let before = pool.len();
            let (t2, _) = random_term(&mut pool, x, y, seed);
            assert_eq!(t1, t2, "same structure must intern to the same node");
            assert_eq!(pool.len(), before, "rebuilding must allocate nothing");
            for _ in 0..20 {
                let xv: u128 = rng.gen_range(0..256);
                let yv: u128 = rng.gen_range(0..256);
                let mut v = HashMap::new();
                v.insert("x".to_string(), bv(xv, 8));
                v.insert("y".to_string(), bv(yv, 8));
                let pooled = eval_term(&pool, t1, &v).unwrap();
                assert_eq!(pooled, bv(mirror_eval(&mirror, xv, yv), 8));
            }
        }
    }

    /// Plain tree mirror of a pooled term, for checking that sharing never
    /// changes meaning.
    enum Mirror {
        X,
        Y,
        Lit(u128),
        Op(OpCode, Box<Mirror>, Box<Mirror>),
    }

    fn random_term(
        pool: &mut TermPool,
        x: TermId,
        y: TermId,
        seed: u64,
    ) -> (TermId, Mirror) {
        fn go(
            pool: &mut TermPool,
            x: TermId,
            y: TermId,
            rng: &mut ChaCha8Rng,
            depth: u32,
        ) -> (TermId, Mirror) {
            if depth == 0 || rng.gen_bool(0.25) {
                return match rng.gen_range(0..3) {
                    0 => (x, Mirror::X),
                    1 => (y, Mirror::Y),
                    _ => {
                        let v = rng.gen_range(0..256);
                        (
                            pool.bv(BVValue::unsigned(v, 8).unwrap()),
                            Mirror::Lit(v),
                        )
                    }
                };
            }
            let ops = [
                OpCode::BvAdd,
                OpCode::BvSub,
                OpCode::BvMul,
                OpCode::BvAnd,
                OpCode::BvOr,
                OpCode::BvXor,
            ];
            let op = ops[rng.gen_range(0..ops.len())];
            let (a, ma) = go(pool, x, y, rng, depth - 1);
            let (b, mb) = go(pool, x, y, rng, depth - 1);
            (
                pool.apply(op, vec![a, b]).unwrap(),
                Mirror::Op(op, Box::new(ma), Box::new(mb)),
            )
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        go(pool, x, y, &mut rng, 5)
    }

    fn mirror_eval(m: &Mirror, x: u128, y: u128) -> u128 {
        match m {
            Mirror::X => x,
            Mirror::Y => y,
            Mirror::Lit(v) => *v,
            Mirror::Op(op, a, b) => {
                let va = bv(mirror_eval(a, x, y), 8);
                let vb = bv(mirror_eval(b, x, y), 8);
                bv_apply(*op, &[va, vb]).unwrap().raw_bits()
            }
        }
    }

    #[test]
    fn alu_transition_text_golden() {
        let m = model(ALU, "ALU");
        let text = emit_smtlib(&m, EmitMode::TransitionFun, None).unwrap();
        let expect = "\
; circuit ALU
; symbol = source : type
;   ALU.op = op : AluOp
;   ALU.in_0 = in_0 : bv[8]
;   ALU.in_1 = in_1 : bv[8]
(set-logic QF_BV)
(declare-const ALU.op (_ BitVec 1))
(declare-const ALU.in_0 (_ BitVec 8))
(declare-const ALU.in_1 (_ BitVec 8))
(define-fun out () (_ BitVec 8) (ite (= ALU.op #b1) (bvadd ALU.in_0 ALU.in_1) (bvmul ALU.in_0 ALU.in_1)))
";
        assert_eq!(text, expect);
        check_smtlib(&text).unwrap();
    }

    #[test]
    fn counter_transition_text_shares_the_mux() {
        let unit = typecheck(
            &expand(
                &parse(
                    "circuit Counter(en: bit) -> bv[8] {\n    state reg : bv[8] = 0;\n    s = reg;\n    if en {\n        s = s + 1;\n    }\n    reg = s;\n    return s;\n}",
                )
                .unwrap(),
                &[],
            )
            .unwrap(),
        )
        .unwrap();
        let m = symexec(&normalize_circuit(&unit, "Counter").unwrap()).unwrap();
        let text = emit_smtlib(&m, EmitMode::TransitionFun, None).unwrap();
        let expect = "\
; circuit Counter
; symbol = source : type
;   Counter.en = en : bit
;   Counter.reg__in = state reg : bv[8]
(set-logic QF_BV)
(declare-const Counter.en Bool)
(declare-const Counter.reg__in (_ BitVec 8))
(define-fun .t0 () (_ BitVec 8) (ite Counter.en (bvadd Counter.reg__in #b00000001) Counter.reg__in))
(define-fun out () (_ BitVec 8) .t0)
(define-fun next_reg () (_ BitVec 8) .t0)
";
        assert_eq!(text, expect);
        check_smtlib(&text).unwrap();
    }

    #[test]
    fn emission_is_deterministic() {
        let a = emit_smtlib(&model(REGALU, "RegALU"), EmitMode::TransitionFun, None)
            .unwrap();
        let b = emit_smtlib(&model(REGALU, "RegALU"), EmitMode::TransitionFun, None)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sixteen_bit_variable_sort() {
        let m = model("circuit W(x: bv[16]) -> bv[16] {\n    return x;\n}", "W");
        let text = emit_smtlib(&m, EmitMode::TransitionFun, None).unwrap();
        assert!(text.contains("(declare-const W.x (_ BitVec 16))"), "{text}");
    }

    #[test]
    fn assertion_mode_asserts_validity_and_goal() {
        let src = "\
enum Mode { IDLE = 0, RUN = 3 }
circuit M(m: Mode) -> bit {
    return m == Mode.RUN;
}";
        let mut m = model(src, "M");
        // sparse enum: two valid codes out of four
        assert_eq!(m.validity.len(), 1);
        let zero = m.pool.bv(BVValue::unsigned(0, 2).unwrap());
        let var = m.inputs[0].2;
        let goal = m.pool.apply(OpCode::Eq, vec![var, zero]).unwrap();
        let text = emit_smtlib(&m, EmitMode::Assertion, Some(goal)).unwrap();
        check_smtlib(&text).unwrap();
        assert!(text.contains("(check-sat)"), "{text}");
        assert_eq!(text.matches("(assert ").count(), 2, "{text}");

        // the validity predicate agrees with the decoder on all patterns
        let ty = match &m.inputs[0].1 {
            Type::Adt(t) => t.clone(),
            _ => unreachable!(),
        };
        for raw in 0..4u128 {
            let mut v = HashMap::new();
            v.insert("m".to_string(), bv(raw, 2));
            let sat = eval_term(&m.pool, m.validity[0], &v).unwrap();
            let decodes =
                crate::adt::adt_decode(&ty, &BVValue::unsigned(raw, 2).unwrap())
                    .is_ok();
            assert_eq!(sat, Value::Bit(decodes), "raw={raw}");
        }
    }

    #[test]
    fn dense_types_need_no_validity() {
        // both codes of a width-1 enum are assigned, every pattern decodes
        let m = model(ALU, "ALU");
        assert!(m.validity.is_empty());
    }

    #[test]
    fn assertion_mode_requires_a_bit_goal() {
        let mut m = model(ALU, "ALU");
        assert!(emit_smtlib(&m, EmitMode::Assertion, None).is_err());
        let wide = m.pool.bv(BVValue::unsigned(3, 8).unwrap());
        assert!(emit_smtlib(&m, EmitMode::Assertion, Some(wide)).is_err());
    }

    #[test]
    fn bit_index_becomes_extract_against_one() {
        let m = model("circuit B(x: bv[4]) -> bit {\n    return x[3];\n}", "B");
        let text = emit_smtlib(&m, EmitMode::TransitionFun, None).unwrap();
        assert!(
            text.contains("(= ((_ extract 3 3) B.x) #b1)"),
            "{text}"
        );
        check_smtlib(&text).unwrap();
        let mut v = HashMap::new();
        v.insert("x".to_string(), bv(0b1000, 4));
        assert_eq!(eval_term(&m.pool, m.output, &v).unwrap(), Value::Bit(true));
    }

    #[test]
    fn checker_rejects_malformed_text() {
        let good = emit_smtlib(&model(ALU, "ALU"), EmitMode::TransitionFun, None)
            .unwrap();
        check_smtlib(&good).unwrap();
        // undeclared symbol at one use site
        let bad = good.replace("(bvadd ALU.in_0 ALU.in_1)", "(bvadd ALU.in_0 ALU.in_9)");
        let err = check_smtlib(&bad).unwrap_err().to_string();
        assert!(err.contains("before declaration"), "{err}");
        // unbalanced parens
        assert!(check_smtlib(&good[..good.len() - 3]).is_err());
        // sort error: add a bool to a vector
        let bad = good.replace("(bvadd ALU.in_0 ALU.in_1)", "(bvadd ALU.in_0 true)");
        assert!(check_smtlib(&bad).is_err());
    }

    #[test]
    fn checker_handles_quantified_queries() {
        let good = "\
(set-logic BV)
(declare-const e (_ BitVec 2))
(assert (forall ((x (_ BitVec 4)) (b Bool))
  (or b (= (bvadd x ((_ zero_extend 2) e)) x))))
(check-sat)
";
        check_smtlib(good).unwrap();
        // binder sorts are local: `x` is unknown outside the body
        let leak = "\
(set-logic BV)
(assert (forall ((x (_ BitVec 4))) (= x x)))
(assert (= x x))
(check-sat)
";
        assert!(check_smtlib(leak).is_err());
        // the body must be Bool
        let bad = good.replace("(or b (=", "(bvadd x ((_ zero_extend 2) e)) ; (");
        assert!(check_smtlib(&bad).is_err());
        let unsorted = "\
(set-logic BV)
(assert (forall ((x (_ BitVec 4))) x))
(check-sat)
";
        let err = check_smtlib(unsorted).unwrap_err().to_string();
        assert!(err.contains("Bool"), "{err}");
    }

    #[test]
    fn sum_validity_mirrors_the_decoder() {
        let src = "\
enum Mode { IDLE = 0, RUN = 3 }
sum Cmd { Step: bv[2], Set: Mode }
circuit C(c: Cmd) -> bv[1] {
    return c.tag;
}";
        let m = model(src, "C");
        assert_eq!(m.validity.len(), 1);
        let ty = match &m.inputs[0].1 {
            Type::Adt(t) => t.clone(),
            _ => unreachable!(),
        };
        let w = ty.width();
        for raw in 0..(1u128 << w) {
            let mut v = HashMap::new();
            v.insert("c".to_string(), bv(raw, w));
            let sat = eval_term(&m.pool, m.validity[0], &v).unwrap();
            let decodes =
                crate::adt::adt_decode(&ty, &BVValue::unsigned(raw, w).unwrap())
                    .is_ok();
            assert_eq!(sat, Value::Bit(decodes), "raw={raw:#b}");
        }
    }
}
