//! Lowering from typed circuits to the flat normal form the back ends share.
//!
//! A [`NormalForm`] is a straight-line list of single-assignment definitions
//! over bit and bit-vector sorts. Getting there takes:
//!
//! - **renaming**: each assignment of `x` defines a fresh `x_k`; reads resolve
//!   to the latest version on the current path, and copies are propagated
//!   instead of defined;
//! - **branch lowering**: each `if` defines `cond_k` (encounter order); a
//!   variable assigned differently in the two arms gets a `cond_k.ite(..)`
//!   definition at the join; an `if` whose condition is statically known keeps
//!   only the live arm;
//! - **return materialization**: return site `k` defines `<state>_f_k`
//!   snapshots of every register followed by the returned value `r_val_k`;
//!   with several sites, `r_val_f` (and `<state>_f`) select among them with
//!   earlier sites taking priority;
//! - **inlining**: sub-circuit applications splice in the callee's normal
//!   form with definitions renamed to `<inst>.<name>`, and callee registers
//!   hoisted the same way.
//!
//! Algebraic values are bare bit-vectors here: field reads become extracts,
//! enum literals become constants, and enum `==` compares encodings.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::adt::{adt_encode, AdtValue, Type};
use crate::bitvec::{BVValue, OpCode, Sort, Value};
use crate::error::{Error, Result};
use crate::surface::check::{
    TExpr, TExprKind, TStmt, TypedCircuit, TypedProperty, TypedUnit,
};
use crate::surface::fresh_name;

#[derive(Debug, Clone, PartialEq)]
pub enum NfExpr {
    /// An input port or an earlier definition.
    Var(String),
    /// A register's value at the start of the step.
    StateEntry(String),
    BitLit(bool),
    BvLit(BVValue),
    Op(OpCode, Vec<NfExpr>),
    Ite(Box<NfExpr>, Box<NfExpr>, Box<NfExpr>),
    /// Single-bit read; distinct from `Extract`, whose result is `bv[1]`.
    BitIndex(Box<NfExpr>, u32),
    /// Sub-circuit application; gone after inlining.
    CallSub { inst: String, args: Vec<NfExpr> },
}

impl NfExpr {
    pub fn is_leaf(&self) -> bool {
        matches!(
            self,
            NfExpr::Var(_) | NfExpr::StateEntry(_) | NfExpr::BitLit(_) | NfExpr::BvLit(_)
        )
    }
}

#[derive(Debug, Clone)]
pub struct NfDef {
    pub name: String,
    pub sort: Sort,
    pub expr: NfExpr,
}

#[derive(Debug, Clone)]
pub struct NfState {
    pub name: String,
    pub ty: Type,
    pub reset: Value,
}

#[derive(Debug, Clone)]
pub struct NormalForm {
    pub name: String,
    pub inputs: Vec<(String, Type)>,
    pub states: Vec<NfState>,
    pub defs: Vec<NfDef>,
    /// Always a leaf reference.
    pub output: NfExpr,
    pub output_ty: Type,
    /// Per state, aligned with `states`: the committed value, a leaf.
    pub next: Vec<(String, NfExpr)>,
}

/// Normalize every circuit of a unit; the map is keyed by circuit name and
/// every entry is fully inlined.
pub fn normalize_unit(unit: &TypedUnit) -> Result<BTreeMap<String, NormalForm>> {
    let mut done = BTreeMap::new();
    // unit.circuits is in dependency order: callees come first
    for circuit in &unit.circuits {
        let flat = Flattener::run(circuit)?;
        let full = inline_calls(flat, circuit, &done)?;
        done.insert(circuit.name.clone(), full);
    }
    Ok(done)
}

pub fn normalize_circuit(unit: &TypedUnit, name: &str) -> Result<NormalForm> {
    normalize_unit(unit)?.remove(name).ok_or_else(|| Error::Normalize {
        circuit: name.to_string(),
        msg: "no such circuit".to_string(),
    })
}

/// Lower a property expression against the normal form of its circuit.
/// `out` resolves to the output definition and `next(s)` to the committed
/// value of `s`; inputs and bare state names stay symbolic.
pub fn lower_property(prop: &TypedProperty, nf: &NormalForm) -> Result<NfExpr> {
    let inputs: BTreeSet<&str> = nf.inputs.iter().map(|(n, _)| n.as_str()).collect();
    let states: BTreeSet<&str> = nf.states.iter().map(|s| s.name.as_str()).collect();
    let err = |msg: String| Error::Normalize { circuit: nf.name.clone(), msg };
    lower_texpr(&prop.expr, &mut |kind: Ref<'_>| match kind {
        Ref::Var(name) => {
            if inputs.contains(name) {
                Ok(NfExpr::Var(name.to_string()))
            } else if states.contains(name) {
                Ok(NfExpr::StateEntry(name.to_string()))
            } else {
                Err(err(format!("`{name}` is not visible in this property")))
            }
        }
        Ref::Out => Ok(nf.output.clone()),
        Ref::Next(state) => nf
            .next
            .iter()
            .find(|(n, _)| n == state)
            .map(|(_, e)| e.clone())
            .ok_or_else(|| err(format!("`{state}` is not a state"))),
        Ref::Call { .. } => Err(err("sub-circuit call in a property".to_string())),
    })
}

// ---- typed-expression lowering (shared by bodies and properties) ----

enum Ref<'a> {
    Var(&'a str),
    Out,
    Next(&'a str),
    Call { inst: &'a str, args: Vec<NfExpr> },
}

fn lower_texpr(
    e: &TExpr,
    resolve: &mut dyn FnMut(Ref<'_>) -> Result<NfExpr>,
) -> Result<NfExpr> {
    Ok(match &e.kind {
        TExprKind::BitLit(b) => NfExpr::BitLit(*b),
        TExprKind::BvLit(v) => NfExpr::BvLit(*v),
        TExprKind::EnumLit(index) => {
            let Type::Adt(t) = &e.ty else { unreachable!() };
            let bits = adt_encode(&AdtValue::Enum { ty: t.clone(), index: *index })
                .expect("enum literals encode");
            NfExpr::BvLit(bits)
        }
        TExprKind::Var(name) => resolve(Ref::Var(name))?,
        TExprKind::Field(base, field) => {
            let Type::Adt(t) = &base.ty else { unreachable!() };
            let crate::adt::AdtKind::Product(fields) = &t.kind else { unreachable!() };
            let i = fields.iter().position(|f| f.name == *field).unwrap();
            let (hi, lo) = t.field_ranges()[i];
            bit_range(lower_texpr(base, resolve)?, &e.ty, hi, lo)
        }
        TExprKind::SumTag(base) => {
            let Type::Adt(t) = &base.ty else { unreachable!() };
            let base = lower_texpr(base, resolve)?;
            NfExpr::Op(OpCode::Extract { hi: t.tag_width() - 1, lo: 0 }, vec![base])
        }
        TExprKind::SumPayload(base, _index) => {
            let Type::Adt(t) = &base.ty else { unreachable!() };
            let lo = t.tag_width();
            let hi = lo + e.ty.encoded_width() - 1;
            bit_range(lower_texpr(base, resolve)?, &e.ty, hi, lo)
        }
        TExprKind::BitIndex(base, i) => {
            NfExpr::BitIndex(Box::new(lower_texpr(base, resolve)?), *i)
        }
        TExprKind::Op(op, args) => {
            let args = args
                .iter()
                .map(|a| lower_texpr(a, resolve))
                .collect::<Result<Vec<_>>>()?;
            NfExpr::Op(*op, args)
        }
        TExprKind::Ite(c, t, f) => NfExpr::Ite(
            Box::new(lower_texpr(c, resolve)?),
            Box::new(lower_texpr(t, resolve)?),
            Box::new(lower_texpr(f, resolve)?),
        ),
        TExprKind::CallSub { inst, args } => {
            let args = args
                .iter()
                .map(|a| lower_texpr(a, resolve))
                .collect::<Result<Vec<_>>>()?;
            resolve(Ref::Call { inst, args })?
        }
        TExprKind::Next(state) => resolve(Ref::Next(state))?,
        TExprKind::OutRef => resolve(Ref::Out)?,
    })
}

/// A field or payload read: single-bit results use `BitIndex`, anything wider
/// an extract.
fn bit_range(base: NfExpr, ty: &Type, hi: u32, lo: u32) -> NfExpr {
    if ty.sort() == Sort::Bit {
        NfExpr::BitIndex(Box::new(base), lo)
    } else {
        NfExpr::Op(OpCode::Extract { hi, lo }, vec![base])
    }
}

// ---- flattening one circuit body ----

struct ReturnSite {
    /// Conditions guarding the site, outermost first.
    path: Vec<(String, bool)>,
    /// `r_val_k` definition name.
    value: String,
    /// `<state>_f_k` definition names, aligned with the state list.
    snaps: Vec<String>,
}

struct Flattener<'a> {
    circuit: &'a TypedCircuit,
    defs: Vec<NfDef>,
    def_sorts: HashMap<String, Sort>,
    used: BTreeSet<String>,
    versions: HashMap<String, u32>,
    /// Current value of every name on this path; always a leaf.
    env: HashMap<String, NfExpr>,
    path: Vec<(String, bool)>,
    sites: Vec<ReturnSite>,
    cond_count: u32,
}

impl<'a> Flattener<'a> {
    fn run(circuit: &'a TypedCircuit) -> Result<NormalForm> {
        let mut env = HashMap::new();
        let mut used = BTreeSet::new();
        for (name, _) in &circuit.inputs {
            env.insert(name.clone(), NfExpr::Var(name.clone()));
            used.insert(name.clone());
        }
        for s in &circuit.states {
            env.insert(s.name.clone(), NfExpr::StateEntry(s.name.clone()));
            used.insert(s.name.clone());
        }
        let mut fl = Flattener {
            circuit,
            defs: Vec::new(),
            def_sorts: HashMap::new(),
            used,
            versions: HashMap::new(),
            env,
            path: Vec::new(),
            sites: Vec::new(),
            cond_count: 0,
        };
        let terminated = fl.walk(&circuit.body)?;
        debug_assert!(terminated, "typechecker guarantees every path returns");
        fl.finish()
    }

    fn fail(&self, msg: impl Into<String>) -> Error {
        Error::Normalize { circuit: self.circuit.name.clone(), msg: msg.into() }
    }

    fn define(&mut self, proposed: &str, sort: Sort, expr: NfExpr) -> String {
        let name = fresh_name(&self.used, proposed);
        self.used.insert(name.clone());
        self.def_sorts.insert(name.clone(), sort);
        self.defs.push(NfDef { name: name.clone(), sort, expr });
        name
    }

    /// Define the next SSA version of `base`.
    fn define_version(&mut self, base: &str, sort: Sort, expr: NfExpr) -> String {
        let k = self.versions.entry(base.to_string()).or_insert(0);
        let proposed = format!("{base}_{k}");
        *k += 1;
        self.define(&proposed, sort, expr)
    }

    fn leaf_sort(&self, e: &NfExpr) -> Sort {
        match e {
            NfExpr::Var(n) => self
                .def_sorts
                .get(n)
                .copied()
                .or_else(|| {
                    self.circuit
                        .inputs
                        .iter()
                        .find(|(i, _)| i == n)
                        .map(|(_, t)| t.sort())
                })
                .expect("leaf names a def or an input"),
            NfExpr::StateEntry(n) => self
                .circuit
                .state(n)
                .map(|s| s.ty.sort())
                .expect("state exists"),
            NfExpr::BitLit(_) => Sort::Bit,
            NfExpr::BvLit(v) => Sort::Bv(v.width()),
            _ => unreachable!("env holds leaves only"),
        }
    }

    fn lower(&mut self, e: &TExpr) -> Result<NfExpr> {
        let env = &self.env;
        let circuit = self.circuit.name.clone();
        lower_texpr(e, &mut |kind| match kind {
            Ref::Var(name) => Ok(env
                .get(name)
                .unwrap_or_else(|| panic!("`{name}` resolved by the typechecker"))
                .clone()),
            Ref::Call { inst, args } => {
                Ok(NfExpr::CallSub { inst: inst.to_string(), args })
            }
            Ref::Out | Ref::Next(_) => Err(Error::Normalize {
                circuit: circuit.clone(),
                msg: "property-only reference in a circuit body".to_string(),
            }),
        })
    }

    fn walk(&mut self, stmts: &[TStmt]) -> Result<bool> {
        for stmt in stmts {
            match stmt {
                TStmt::Assign { name, value, .. } => {
                    let expr = self.lower(value)?;
                    let leaf = if expr.is_leaf() {
                        expr
                    } else {
                        let sort = value.ty.sort();
                        NfExpr::Var(self.define_version(name, sort, expr))
                    };
                    self.env.insert(name.clone(), leaf);
                }
                TStmt::Return(value) => {
                    let expr = self.lower(value)?;
                    let k = self.sites.len();
                    let mut snaps = Vec::new();
                    let states: Vec<(String, Sort)> = self
                        .circuit
                        .states
                        .iter()
                        .map(|s| (s.name.clone(), s.ty.sort()))
                        .collect();
                    for (sname, sort) in states {
                        let held = self.env[&sname].clone();
                        snaps.push(self.define(&format!("{sname}_f_{k}"), sort, held));
                    }
                    let sort = value.ty.sort();
                    let value = self.define(&format!("r_val_{k}"), sort, expr);
                    self.sites.push(ReturnSite { path: self.path.clone(), value, snaps });
                    return Ok(true);
                }
                TStmt::If { cond, then_body, else_body } => {
                    let c = self.lower(cond)?;
                    // statically decided branches keep only the live arm
                    if let NfExpr::BitLit(b) = c {
                        let arm = if b { then_body } else { else_body };
                        if self.walk(arm)? {
                            return Ok(true);
                        }
                        continue;
                    }
                    let k = self.cond_count;
                    self.cond_count += 1;
                    let cname = self.define(&format!("cond_{k}"), Sort::Bit, c);

                    let entry = self.env.clone();
                    self.path.push((cname.clone(), true));
                    let then_term = self.walk(then_body)?;
                    let then_env = std::mem::replace(&mut self.env, entry.clone());
                    self.path.pop();

                    self.path.push((cname.clone(), false));
                    let else_term = self.walk(else_body)?;
                    let else_env = std::mem::replace(&mut self.env, entry);
                    self.path.pop();

                    match (then_term, else_term) {
                        (true, true) => return Ok(true),
                        (true, false) => self.env = else_env,
                        (false, true) => self.env = then_env,
                        (false, false) => {
                            // join: merge diverging values through the condition;
                            // sorted so the definitions land in a stable order
                            let mut names: Vec<&String> = then_env.keys().collect();
                            names.sort();
                            let mut merged = HashMap::new();
                            for name in names {
                                let t_leaf = &then_env[name];
                                let Some(e_leaf) = else_env.get(name) else { continue };
                                if t_leaf == e_leaf {
                                    merged.insert(name.clone(), t_leaf.clone());
                                    continue;
                                }
                                let sort = self.leaf_sort(t_leaf);
                                let phi = NfExpr::Ite(
                                    Box::new(NfExpr::Var(cname.clone())),
                                    Box::new(t_leaf.clone()),
                                    Box::new(e_leaf.clone()),
                                );
                                let def = self.define_version(name, sort, phi);
                                merged.insert(name.clone(), NfExpr::Var(def));
                            }
                            self.env = merged;
                        }
                    }
                }
            }
        }
        Ok(false)
    }

    /// One site selects directly; several fold into a priority chain with
    /// earlier sites outermost.
    fn select(&mut self, leaves: Vec<NfExpr>, fallback_base: &str, sort: Sort) -> NfExpr {
        debug_assert_eq!(leaves.len(), self.sites.len());
        if leaves.len() == 1 {
            return leaves.into_iter().next().unwrap();
        }
        let mut acc = leaves.last().unwrap().clone();
        for (site, leaf) in self.sites.iter().zip(&leaves).rev().skip(1) {
            let cond = conj(&site.path);
            if leaf == &acc {
                continue;
            }
            acc = NfExpr::Ite(Box::new(cond), Box::new(leaf.clone()), Box::new(acc));
        }
        let def = {
            let proposed = format!("{fallback_base}_f");
            let name = fresh_name(&self.used, &proposed);
            self.used.insert(name.clone());
            self.def_sorts.insert(name.clone(), sort);
            self.defs.push(NfDef { name: name.clone(), sort, expr: acc });
            name
        };
        NfExpr::Var(def)
    }

    fn finish(mut self) -> Result<NormalForm> {
        if self.sites.is_empty() {
            return Err(self.fail("no return site"));
        }
        let out_sort = self.circuit.output.sort();
        let values: Vec<NfExpr> =
            self.sites.iter().map(|s| NfExpr::Var(s.value.clone())).collect();
        let output = self.select(values, "r_val", out_sort);

        let mut next = Vec::new();
        for (i, s) in self.circuit.states.iter().enumerate() {
            let snaps: Vec<NfExpr> = self
                .sites
                .iter()
                .map(|site| NfExpr::Var(site.snaps[i].clone()))
                .collect();
            let committed = self.select(snaps, &s.name, s.ty.sort());
            next.push((s.name.clone(), committed));
        }

        Ok(NormalForm {
            name: self.circuit.name.clone(),
            inputs: self.circuit.inputs.clone(),
            states: self
                .circuit
                .states
                .iter()
                .map(|s| NfState { name: s.name.clone(), ty: s.ty.clone(), reset: s.reset })
                .collect(),
            defs: self.defs,
            output,
            output_ty: self.circuit.output.clone(),
            next,
        })
    }
}

/// Conjunction of a site's guarding conditions.
fn conj(path: &[(String, bool)]) -> NfExpr {
    let mut terms = path.iter().map(|(name, pol)| {
        let v = NfExpr::Var(name.clone());
        if *pol {
            v
        } else {
            NfExpr::Op(OpCode::Not, vec![v])
        }
    });
    let first = terms.next().expect("non-final sites are conditional");
    terms.fold(first, |acc, t| NfExpr::Op(OpCode::And, vec![acc, t]))
}

// ---- inlining ----

fn inline_calls(
    nf: NormalForm,
    circuit: &TypedCircuit,
    done: &BTreeMap<String, NormalForm>,
) -> Result<NormalForm> {
    if circuit.insts.is_empty() {
        return Ok(nf);
    }
    let mut used: BTreeSet<String> = nf.defs.iter().map(|d| d.name.clone()).collect();
    used.extend(nf.inputs.iter().map(|(n, _)| n.clone()));
    used.extend(nf.states.iter().map(|s| s.name.clone()));

    let mut inliner = Inliner {
        circuit,
        done,
        used,
        defs: Vec::new(),
        hoisted_states: Vec::new(),
        hoisted_next: Vec::new(),
    };

    for def in &nf.defs {
        let expr = inliner.rewrite(&def.expr)?;
        inliner.defs.push(NfDef { name: def.name.clone(), sort: def.sort, expr });
    }
    let output = inliner.rewrite(&nf.output)?;
    let mut next: Vec<(String, NfExpr)> = nf
        .next
        .iter()
        .map(|(n, e)| Ok((n.clone(), inliner.rewrite(e)?)))
        .collect::<Result<Vec<_>>>()?;

    let mut states = nf.states.clone();
    states.extend(inliner.hoisted_states);
    next.extend(inliner.hoisted_next);

    Ok(NormalForm { defs: inliner.defs, states, next, output, ..nf })
}

struct Inliner<'a> {
    circuit: &'a TypedCircuit,
    done: &'a BTreeMap<String, NormalForm>,
    used: BTreeSet<String>,
    defs: Vec<NfDef>,
    hoisted_states: Vec<NfState>,
    hoisted_next: Vec<(String, NfExpr)>,
}

impl<'a> Inliner<'a> {
    fn define(&mut self, proposed: &str, sort: Sort, expr: NfExpr) -> String {
        let name = fresh_name(&self.used, proposed);
        self.used.insert(name.clone());
        self.defs.push(NfDef { name: name.clone(), sort, expr });
        name
    }

    fn rewrite(&mut self, e: &NfExpr) -> Result<NfExpr> {
        Ok(match e {
            NfExpr::CallSub { inst, args } => {
                let args = args
                    .iter()
                    .map(|a| self.rewrite(a))
                    .collect::<Result<Vec<_>>>()?;
                self.splice(inst, args)?
            }
            NfExpr::Op(op, args) => NfExpr::Op(
                *op,
                args.iter().map(|a| self.rewrite(a)).collect::<Result<Vec<_>>>()?,
            ),
            NfExpr::Ite(c, t, f) => NfExpr::Ite(
                Box::new(self.rewrite(c)?),
                Box::new(self.rewrite(t)?),
                Box::new(self.rewrite(f)?),
            ),
            NfExpr::BitIndex(b, i) => NfExpr::BitIndex(Box::new(self.rewrite(b)?), *i),
            _ => e.clone(),
        })
    }

    fn splice(&mut self, inst: &str, args: Vec<NfExpr>) -> Result<NfExpr> {
        let target = self.circuit.inst_circuit(inst).expect("typechecked");
        let callee = &self.done[target];

        // bind arguments: leaves substitute directly, anything else gets a
        // definition named after the port
        let mut sub: HashMap<&str, NfExpr> = HashMap::new();
        for ((port, ty), arg) in callee.inputs.iter().zip(args) {
            let leaf = if arg.is_leaf() {
                arg
            } else {
                NfExpr::Var(self.define(&format!("{inst}.{port}"), ty.sort(), arg))
            };
            sub.insert(port, leaf);
        }

        let mut renamed: HashMap<&str, String> = HashMap::new();
        for def in &callee.defs {
            let expr = subst(&def.expr, &sub, &renamed, inst);
            let name = self.define(&format!("{inst}.{}", def.name), def.sort, expr);
            renamed.insert(&def.name, name);
        }

        for (state, (_, committed)) in callee.states.iter().zip(&callee.next) {
            self.hoisted_states.push(NfState {
                name: format!("{inst}.{}", state.name),
                ty: state.ty.clone(),
                reset: state.reset,
            });
            self.hoisted_next.push((
                format!("{inst}.{}", state.name),
                subst(committed, &sub, &renamed, inst),
            ));
        }

        Ok(subst(&callee.output, &sub, &renamed, inst))
    }
}

fn subst(
    e: &NfExpr,
    inputs: &HashMap<&str, NfExpr>,
    renamed: &HashMap<&str, String>,
    inst: &str,
) -> NfExpr {
    match e {
        NfExpr::Var(n) => inputs
            .get(n.as_str())
            .cloned()
            .unwrap_or_else(|| NfExpr::Var(renamed[n.as_str()].clone())),
        NfExpr::StateEntry(s) => NfExpr::StateEntry(format!("{inst}.{s}")),
        NfExpr::BitLit(_) | NfExpr::BvLit(_) => e.clone(),
        NfExpr::Op(op, args) => NfExpr::Op(
            *op,
            args.iter().map(|a| subst(a, inputs, renamed, inst)).collect(),
        ),
        NfExpr::Ite(c, t, f) => NfExpr::Ite(
            Box::new(subst(c, inputs, renamed, inst)),
            Box::new(subst(t, inputs, renamed, inst)),
            Box::new(subst(f, inputs, renamed, inst)),
        ),
        NfExpr::BitIndex(b, i) => {
            NfExpr::BitIndex(Box::new(subst(b, inputs, renamed, inst)), *i)
        }
        NfExpr::CallSub { .. } => unreachable!("callees are fully inlined"),
    }
}

// ---- listing ----

impl NormalForm {
    /// Human-readable listing: header, registers, definitions, then the
    /// output and committed register values.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        let inputs = self
            .inputs
            .iter()
            .map(|(n, t)| format!("{n}: {t}"))
            .collect::<Vec<_>>()
            .join(", ");
        out.push_str(&format!("{}({}) -> {}\n", self.name, inputs, self.output_ty));
        for s in &self.states {
            out.push_str(&format!(
                "  state {} : {} init {}\n",
                s.name,
                s.ty,
                fmt_value(&s.reset)
            ));
        }
        for d in &self.defs {
            out.push_str(&format!("  {} = {}\n", d.name, fmt_nf(&d.expr, 0)));
        }
        out.push_str(&format!("  O := {}\n", fmt_nf(&self.output, 0)));
        for (s, e) in &self.next {
            out.push_str(&format!("  {s}' := {}\n", fmt_nf(e, 0)));
        }
        out
    }
}

fn fmt_value(v: &Value) -> String {
    match v {
        Value::Bit(b) => if *b { "1" } else { "0" }.to_string(),
        Value::Bv(bv) => format!("{}", bv.bits()),
    }
}

/// Infix symbol and precedence for listing display; signed variants carry an
/// `s` suffix so the listing stays unambiguous without type annotations.
fn op_infix(op: OpCode) -> Option<(&'static str, u8)> {
    use OpCode::*;
    Some(match op {
        BvOr | Or => ("|", 0),
        BvXor | Xor => ("^", 1),
        BvAnd | And => ("&", 2),
        Eq => ("==", 3),
        Neq => ("!=", 3),
        BvUlt => ("<", 4),
        BvUle => ("<=", 4),
        BvUgt => (">", 4),
        BvUge => (">=", 4),
        BvSlt => ("<s", 4),
        BvSle => ("<=s", 4),
        BvSgt => (">s", 4),
        BvSge => (">=s", 4),
        BvShl => ("<<", 5),
        BvLshr => (">>", 5),
        BvAshr => (">>s", 5),
        BvAdd => ("+", 6),
        BvSub => ("-", 6),
        BvMul => ("*", 7),
        BvUdiv => ("/", 7),
        BvSdiv => ("/s", 7),
        BvUrem => ("%", 7),
        BvSrem => ("%s", 7),
        _ => return None,
    })
}

fn fmt_nf(e: &NfExpr, min_prec: u8) -> String {
    match e {
        NfExpr::Var(n) | NfExpr::StateEntry(n) => n.clone(),
        NfExpr::BitLit(b) => if *b { "1" } else { "0" }.to_string(),
        NfExpr::BvLit(v) => format!("{}", v.bits()),
        NfExpr::BitIndex(b, i) => format!("{}[{i}]", fmt_nf(b, 9)),
        NfExpr::Ite(c, t, f) => {
            format!("{}.ite({}, {})", fmt_nf(c, 9), fmt_nf(t, 0), fmt_nf(f, 0))
        }
        NfExpr::CallSub { inst, args } => {
            let args = args.iter().map(|a| fmt_nf(a, 0)).collect::<Vec<_>>().join(", ");
            format!("{inst}({args})")
        }
        NfExpr::Op(op, args) => {
            if let Some((sym, prec)) = op_infix(*op) {
                let s = format!(
                    "{} {sym} {}",
                    fmt_nf(&args[0], prec),
                    fmt_nf(&args[1], prec + 1)
                );
                if prec < min_prec {
                    format!("({s})")
                } else {
                    s
                }
            } else {
                match op {
                    OpCode::BvNeg => maybe_paren(format!("-{}", fmt_nf(&args[0], 8)), 8, min_prec),
                    OpCode::BvNot | OpCode::Not => {
                        maybe_paren(format!("~{}", fmt_nf(&args[0], 8)), 8, min_prec)
                    }
                    OpCode::Extract { hi, lo } => {
                        format!("{}[{hi}:{lo}]", fmt_nf(&args[0], 9))
                    }
                    OpCode::ZeroExtend { by } => format!("zext({}, +{by})", fmt_nf(&args[0], 0)),
                    OpCode::SignExtend { by } => format!("sext({}, +{by})", fmt_nf(&args[0], 0)),
                    OpCode::Concat => {
                        format!("concat({}, {})", fmt_nf(&args[0], 0), fmt_nf(&args[1], 0))
                    }
                    other => {
                        let args =
                            args.iter().map(|a| fmt_nf(a, 0)).collect::<Vec<_>>().join(", ");
                        format!("{}({})", other.mnemonic(), args)
                    }
                }
            }
        }
    }
}

fn maybe_paren(s: String, prec: u8, min_prec: u8) -> String {
    if prec < min_prec {
        format!("({s})")
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{expand, parse, typecheck};

    fn nf(src: &str, circuit: &str) -> NormalForm {
        let unit = typecheck(&expand(&parse(src).unwrap(), &[]).unwrap()).unwrap();
        normalize_circuit(&unit, circuit).unwrap()
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

    const COUNTER: &str = "\
circuit Counter(en: bit) -> bv[8] {
    state reg : bv[8] = 0;
    s = reg;
    if en {
        s = s + 1;
    }
    reg = s;
    return s;
}";

    #[test]
    fn alu_listing_golden() {
        let listing = nf(ALU, "ALU").listing();
        let expected = "\
ALU(op: AluOp, in_0: bv[8], in_1: bv[8]) -> bv[8]
  cond_0 = op == 1
  r_val_0 = in_0 + in_1
  r_val_1 = in_0 * in_1
  r_val_f = cond_0.ite(r_val_0, r_val_1)
  O := r_val_f
";
        assert_eq!(listing, expected);
    }

    #[test]
    fn alu_structure() {
        let form = nf(ALU, "ALU");
        let names: Vec<&str> = form.defs.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["cond_0", "r_val_0", "r_val_1", "r_val_f"]);
        assert_eq!(form.output, NfExpr::Var("r_val_f".into()));
        let last = &form.defs[3].expr;
        let NfExpr::Ite(c, t, f) = last else { panic!("{last:?}") };
        assert_eq!(**c, NfExpr::Var("cond_0".into()));
        assert_eq!(**t, NfExpr::Var("r_val_0".into()));
        assert_eq!(**f, NfExpr::Var("r_val_1".into()));
    }

    #[test]
    fn counter_listing_golden() {
        let listing = nf(COUNTER, "Counter").listing();
        let expected = "\
Counter(en: bit) -> bv[8]
  state reg : bv[8] init 0
  cond_0 = en
  s_0 = reg + 1
  s_1 = cond_0.ite(s_0, reg)
  reg_f_0 = s_1
  r_val_0 = s_1
  O := r_val_0
  reg' := reg_f_0
";
        assert_eq!(listing, expected);
    }

    #[test]
    fn copies_propagate_instead_of_defining() {
        // `s = reg` and `reg = s` produce no definitions of their own
        let form = nf(COUNTER, "Counter");
        assert_eq!(form.defs.len(), 5);
        assert_eq!(form.next[0].1, NfExpr::Var("reg_f_0".into()));
    }

    #[test]
    fn trailing_return_takes_the_low_priority_arm() {
        let form = nf(
            "circuit T(a: bit, x: bv[4], y: bv[4]) -> bv[4] {\n    if a {\n        return x;\n    }\n    return y;\n}",
            "T",
        );
        let names: Vec<&str> = form.defs.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["cond_0", "r_val_0", "r_val_1", "r_val_f"]);
        let NfExpr::Ite(c, ..) = &form.defs[3].expr else { panic!() };
        assert_eq!(**c, NfExpr::Var("cond_0".into()));
    }

    #[test]
    fn else_only_return_negates_the_condition() {
        let form = nf(
            "circuit T(a: bit, x: bv[4]) -> bv[4] {\n    if a {\n        b = x + 1;\n    } else {\n        return x;\n    }\n    return b;\n}",
            "T",
        );
        // site 0 is the else-return, reached when !cond_0
        let NfExpr::Ite(c, t, f) = &form.defs.last().unwrap().expr else { panic!() };
        assert_eq!(**c, NfExpr::Op(OpCode::Not, vec![NfExpr::Var("cond_0".into())]));
        assert_eq!(**t, NfExpr::Var("r_val_0".into()));
        assert_eq!(**f, NfExpr::Var("r_val_1".into()));
    }

    #[test]
    fn static_condition_keeps_only_the_live_arm() {
        let form = nf(
            "circuit T(x: bv[4]) -> bv[4] {\n    c = true;\n    if c {\n        return x;\n    }\n    return x + 1;\n}",
            "T",
        );
        let names: Vec<&str> = form.defs.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["r_val_0"]);
        assert_eq!(form.output, NfExpr::Var("r_val_0".into()));
    }

    #[test]
    fn nested_conditions_conjoin() {
        let form = nf(
            "circuit T(a: bit, b: bit, x: bv[4]) -> bv[4] {\n    if a {\n        if b {\n            return x;\n        }\n        return x + 1;\n    }\n    return x + 2;\n}",
            "T",
        );
        // priority chain: site0 guarded by cond_0 & cond_1
        let NfExpr::Ite(c, ..) = &form.defs.last().unwrap().expr else { panic!() };
        let NfExpr::Op(OpCode::And, parts) = &**c else { panic!("{c:?}") };
        assert_eq!(parts[0], NfExpr::Var("cond_0".into()));
        assert_eq!(parts[1], NfExpr::Var("cond_1".into()));
    }

    #[test]
    fn equal_branch_values_skip_the_join_mux() {
        let form = nf(
            "circuit T(a: bit, x: bv[4]) -> bv[4] {\n    y = x;\n    if a {\n        y = x;\n    }\n    return y;\n}",
            "T",
        );
        let names: Vec<&str> = form.defs.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["cond_0", "r_val_0"]);
    }

    #[test]
    fn enum_values_are_bare_bits() {
        // AluOp's largest value is 1, so it encodes in a single bit
        let form = nf(ALU, "ALU");
        let NfExpr::Op(OpCode::Eq, args) = &form.defs[0].expr else { panic!() };
        assert_eq!(args[0], NfExpr::Var("op".into()));
        assert_eq!(args[1], NfExpr::BvLit(BVValue::unsigned(1, 1).unwrap()));
    }

    #[test]
    fn product_reads_become_extracts() {
        let form = nf(
            "product P {\n    lo: bv[4],\n    hi: bv[4],\n    flag: bit,\n}\ncircuit T(p: P) -> bv[4] {\n    if p.flag {\n        return p.hi;\n    }\n    return p.lo;\n}",
            "T",
        );
        // p.flag is bit 8; p.hi is bits [7:4]; p.lo is bits [3:0]
        assert_eq!(
            form.defs[0].expr,
            NfExpr::BitIndex(Box::new(NfExpr::Var("p".into())), 8)
        );
        let NfExpr::Op(OpCode::Extract { hi: 7, lo: 4 }, _) = &form.defs[1].expr else {
            panic!("{:?}", form.defs[1].expr)
        };
    }

    #[test]
    fn sum_accessors_become_extracts() {
        let form = nf(
            "sum S { word: bv[4], flag: bit }\ncircuit T(s: S) -> bv[4] {\n    t = s.tag == 0;\n    if t {\n        return s.word;\n    }\n    return zext(s.flag.ite(1 as bv[1], 0 as bv[1]), 4);\n}",
            "T",
        );
        let listing = form.listing();
        assert!(listing.contains("s[0:0]"), "{listing}");
        assert!(listing.contains("s[4:1]"), "{listing}");
        assert!(listing.contains("s[1]"), "{listing}");
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
    fn inlining_splices_and_prefixes() {
        let form = nf(REGALU, "RegALU");
        let names: Vec<&str> = form.defs.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "cond_0",
                "reg_1_0",
                "alu.cond_0",
                "alu.r_val_0",
                "alu.r_val_1",
                "alu.r_val_f",
                "acc_0",
                "reg_0_f_0",
                "reg_1_f_0",
                "r_val_0",
            ]
        );
        // callee ports were substituted with caller leaves
        let NfExpr::Op(OpCode::BvAdd, args) = &form.defs[3].expr else { panic!() };
        assert_eq!(args[0], NfExpr::StateEntry("reg_0".into()));
        assert_eq!(args[1], NfExpr::Var("reg_1_0".into()));
        // no call nodes survive
        fn flat(e: &NfExpr) -> bool {
            match e {
                NfExpr::CallSub { .. } => false,
                NfExpr::Op(_, args) => args.iter().all(flat),
                NfExpr::Ite(c, t, f) => flat(c) && flat(t) && flat(f),
                NfExpr::BitIndex(b, _) => flat(b),
                _ => true,
            }
        }
        assert!(form.defs.iter().all(|d| flat(&d.expr)));
    }

    #[test]
    fn stateful_inlining_hoists_registers() {
        let src = format!(
            "{COUNTER}\ncircuit Wrap(en: bit) -> bv[8] {{\n    inst c : Counter;\n    y = c(en);\n    return y + 1;\n}}"
        );
        let form = nf(&src, "Wrap");
        assert_eq!(form.states.len(), 1);
        assert_eq!(form.states[0].name, "c.reg");
        assert_eq!(form.states[0].reset.raw_bits(), 0);
        assert_eq!(form.next[0].0, "c.reg");
        assert_eq!(form.next[0].1, NfExpr::Var("c.reg_f_0".into()));
        let listing = form.listing();
        assert!(listing.contains("state c.reg : bv[8] init 0"), "{listing}");
        assert!(listing.contains("c.reg' := c.reg_f_0"), "{listing}");
    }

    #[test]
    fn two_calls_to_one_stateless_instance_splice_twice() {
        let src = format!(
            "{ALU}\ncircuit Twice(op: AluOp, x: T) -> T {{\n    inst a : ALU;\n    u = a(op, x, x);\n    v = a(op, u, x);\n    return v;\n}}"
        );
        let form = nf(&src, "Twice");
        let names: Vec<&str> = form.defs.iter().map(|d| d.name.as_str()).collect();
        // second splice dodges the first's names
        assert!(names.contains(&"a.r_val_f"));
        assert!(names.contains(&"a.r_val_f_0"), "{names:?}");
    }

    #[test]
    fn compound_call_arguments_get_port_definitions() {
        let src = format!(
            "{ALU}\ncircuit T2(op: AluOp, x: T) -> T {{\n    inst a : ALU;\n    u = a(op, x + 1, x);\n    return u;\n}}"
        );
        let form = nf(&src, "T2");
        let d = form.defs.iter().find(|d| d.name == "a.in_0").expect("port def");
        let NfExpr::Op(OpCode::BvAdd, _) = &d.expr else { panic!() };
    }

    #[test]
    fn property_lowering_resolves_out_and_next() {
        let src = format!(
            "{REGALU}\nproperty store on RegALU {{ wr.ite(next(reg_1) == in_0, next(reg_1) == reg_1) }}\nproperty echo on RegALU {{ out == next(reg_0) }}"
        );
        let unit = typecheck(&expand(&parse(&src).unwrap(), &[]).unwrap()).unwrap();
        let form = normalize_circuit(&unit, "RegALU").unwrap();
        let store = lower_property(unit.property("store").unwrap(), &form).unwrap();
        let NfExpr::Ite(c, t, _) = &store else { panic!("{store:?}") };
        assert_eq!(**c, NfExpr::Var("wr".into()));
        let NfExpr::Op(OpCode::Eq, args) = &**t else { panic!() };
        assert_eq!(args[0], NfExpr::Var("reg_1_f_0".into()));

        let echo = lower_property(unit.property("echo").unwrap(), &form).unwrap();
        let NfExpr::Op(OpCode::Eq, args) = &echo else { panic!() };
        assert_eq!(args[0], NfExpr::Var("r_val_0".into()));
        assert_eq!(args[1], NfExpr::Var("reg_0_f_0".into()));
    }

    #[test]
    fn state_snapshots_respect_return_order() {
        // a return before the state write must snapshot the entry value
        let form = nf(
            "circuit T(a: bit, x: bv[4]) -> bv[4] {\n    state r : bv[4] = 0;\n    if a {\n        return r;\n    }\n    r = x;\n    return r;\n}",
            "T",
        );
        // site 0 snapshots the entry value, site 1 the written one
        let s0 = form.defs.iter().find(|d| d.name == "r_f_0").unwrap();
        assert_eq!(s0.expr, NfExpr::StateEntry("r".into()));
        let s1 = form.defs.iter().find(|d| d.name == "r_f_1").unwrap();
        assert_eq!(s1.expr, NfExpr::Var("x".into()));
        // committed value selects by site priority
        let (_, committed) = &form.next[0];
        assert_eq!(*committed, NfExpr::Var("r_f".into()));
        let rf = form.defs.iter().find(|d| d.name == "r_f").unwrap();
        let NfExpr::Ite(c, t, f) = &rf.expr else { panic!() };
        assert_eq!(**c, NfExpr::Var("cond_0".into()));
        assert_eq!(**t, NfExpr::Var("r_f_0".into()));
        assert_eq!(**f, NfExpr::Var("r_f_1".into()));
    }
}
