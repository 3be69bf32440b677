//! Searches a programmable circuit's instruction set for encodings that make
//! the circuit implement a small operator spec (`x + y`, `x - y`, ...), and
//! reports them as machine-checkable rewrite rules.
//!
//! The target circuit must take exactly one ADT-typed input: the instruction
//! word. Its fields split into an existential set the search assigns and a
//! universal set that stays symbolic (immediates and other pass-through
//! payload); register state and unbound data ports are always universal. A
//! candidate assignment wins when the circuit's output equals the spec on
//! every operand vector — exhaustively when the space is small, by seeded
//! sampling otherwise, optionally via an SMT solver on an exists-forall
//! query. Every rule is re-verified before it is reported: `verified` is
//! never set on trust, and a solver model that fails re-verification is an
//! error, not a rule.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adt::{adt_encode, adt_nth, nth_field, AdtKind, AdtType, AdtValue, FieldVal, Type};
use crate::bitvec::{bv_apply, bv_ite, BVValue, OpCode, Sort, Value};
use crate::error::{Error, Result};
use crate::interp::Evaluator;
use crate::normalize::{NfExpr, NormalForm};
use crate::smt::{self, claim, print_ref, sanitize, sort_text, valid_encoding, TermId, TermPool};
use crate::verify::{collect_model_values, run_solver, SolverRun};

/// Most candidate instructions `synth_enumerate` will walk.
pub const DEFAULT_CANDIDATE_CAP: u128 = 1 << 16;
/// Largest operand/state space checked exhaustively per candidate.
const EXHAUSTIVE_CAP: u128 = 1 << 20;
/// Trials per candidate when the space is too large to exhaust.
const SAMPLE_TRIALS: u64 = 4096;
const SAMPLE_SEED: u64 = 0x7061_6b66;
/// Winning candidates are checked twice; the second pass samples elsewhere.
const RECHECK_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const SOLVER_TIMEOUT: Duration = Duration::from_secs(120);

const OPERAND_NAMES: [&str; 2] = ["x", "y"];

/// The operator a rewrite rule should implement, as a pure expression over
/// the operands `x` (and `y` at arity 2) plus an optional constant `c` drawn
/// from a universally-bound instruction field.
#[derive(Debug, Clone)]
pub struct IrOpSpec {
    pub name: String,
    pub arity: usize,
    /// Operand width; data ports must match it exactly.
    pub width: u32,
    expr: NfExpr,
    uses_const: bool,
}

impl IrOpSpec {
    pub fn new(name: &str, arity: usize, width: u32, expr: NfExpr) -> Result<Self> {
        if !(1..=2).contains(&arity) {
            return Err(Error::Synth(format!("spec arity must be 1 or 2, got {arity}")));
        }
        if !(1..=128).contains(&width) {
            return Err(Error::Synth(format!("spec width must be 1..=128, got {width}")));
        }
        let mut uses_const = false;
        check_spec_expr(&expr, arity, &mut uses_const)?;
        Ok(Self { name: name.to_string(), arity, width, expr, uses_const })
    }

    pub fn expr(&self) -> &NfExpr {
        &self.expr
    }

    /// True when the expression reads `c`, requiring exactly one universal
    /// instruction field to supply it.
    pub fn uses_const(&self) -> bool {
        self.uses_const
    }
}

fn check_spec_expr(e: &NfExpr, arity: usize, uses_const: &mut bool) -> Result<()> {
    match e {
        NfExpr::Var(n) => match n.as_str() {
            "x" => Ok(()),
            "y" if arity == 2 => Ok(()),
            "c" => {
                *uses_const = true;
                Ok(())
            }
            other => Err(Error::Synth(format!(
                "spec expressions may use `x`{} and `c`, not `{other}`",
                if arity == 2 { ", `y`" } else { "" }
            ))),
        },
        NfExpr::BitLit(_) | NfExpr::BvLit(_) => Ok(()),
        NfExpr::Op(_, args) => args.iter().try_for_each(|a| check_spec_expr(a, arity, uses_const)),
        NfExpr::Ite(c, t, f) => {
            check_spec_expr(c, arity, uses_const)?;
            check_spec_expr(t, arity, uses_const)?;
            check_spec_expr(f, arity, uses_const)
        }
        NfExpr::BitIndex(b, _) => check_spec_expr(b, arity, uses_const),
        NfExpr::StateEntry(_) | NfExpr::CallSub { .. } => {
            Err(Error::Synth("spec expressions are pure operator trees".into()))
        }
    }
}

/// Names accepted by [`builtin_op`].
pub const BUILTIN_OPS: &[&str] = &[
    "add", "sub", "mul", "and", "or", "xor", "nand", "nor", "not", "neg", "shl", "lshr", "ashr",
    "ult", "ule", "ugt", "uge", "slt", "sle", "sgt", "sge",
];

/// A ready-made spec for a common two's-complement operator, width-generic.
pub fn builtin_op(name: &str, width: u32) -> Option<IrOpSpec> {
    let x = || NfExpr::Var("x".into());
    let y = || NfExpr::Var("y".into());
    let bin = |op: OpCode| NfExpr::Op(op, vec![x(), y()]);
    let inv = |op: OpCode| NfExpr::Op(OpCode::BvNot, vec![NfExpr::Op(op, vec![x(), y()])]);
    let (arity, expr) = match name {
        "add" => (2, bin(OpCode::BvAdd)),
        "sub" => (2, bin(OpCode::BvSub)),
        "mul" => (2, bin(OpCode::BvMul)),
        "and" => (2, bin(OpCode::BvAnd)),
        "or" => (2, bin(OpCode::BvOr)),
        "xor" => (2, bin(OpCode::BvXor)),
        "nand" => (2, inv(OpCode::BvAnd)),
        "nor" => (2, inv(OpCode::BvOr)),
        "not" => (1, NfExpr::Op(OpCode::BvNot, vec![x()])),
        "neg" => (1, NfExpr::Op(OpCode::BvNeg, vec![x()])),
        "shl" => (2, bin(OpCode::BvShl)),
        "lshr" => (2, bin(OpCode::BvLshr)),
        "ashr" => (2, bin(OpCode::BvAshr)),
        "ult" => (2, bin(OpCode::BvUlt)),
        "ule" => (2, bin(OpCode::BvUle)),
        "ugt" => (2, bin(OpCode::BvUgt)),
        "uge" => (2, bin(OpCode::BvUge)),
        "slt" => (2, bin(OpCode::BvSlt)),
        "sle" => (2, bin(OpCode::BvSle)),
        "sgt" => (2, bin(OpCode::BvSgt)),
        "sge" => (2, bin(OpCode::BvSge)),
        _ => return None,
    };
    Some(IrOpSpec::new(name, arity, width, expr).expect("builtin specs are well-formed"))
}

/// How spec operands map onto the circuit's data ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    /// Wire operands to the first matching ports, in declaration order.
    FixedOrder,
    /// Try every injective assignment of operands to matching ports.
    AllPermutations,
}

/// A synthesized instruction-selection rule. `instruction` fixes the
/// existential fields; `constant_fields` stay symbolic and pass a value
/// through (an immediate); data ports not wired to an operand accept
/// anything.
#[derive(Debug, Clone, PartialEq)]
pub struct RewriteRule {
    pub op: String,
    /// Existential fields and the values the search chose, field order.
    pub instruction: Vec<(String, FieldVal)>,
    /// Data port names, in port order (instruction port excluded).
    pub ports: Vec<String>,
    /// Aligned with `ports`: `Some(k)` wires spec operand `k` there.
    pub permutation: Vec<Option<usize>>,
    /// Universal instruction fields the rule leaves symbolic.
    pub constant_fields: Vec<String>,
    /// Always true on returned rules; set only after re-verification.
    pub verified: bool,
}

impl std::fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts: Vec<String> = self
            .instruction
            .iter()
            .map(|(n, v)| format!("{n}={}", fieldval_text(v)))
            .collect();
        for (o, slot) in self.permutation.iter().enumerate() {
            match slot {
                Some(k) => parts.push(format!("{}<-{}", self.ports[o], OPERAND_NAMES[*k])),
                None => parts.push(format!("{}<-*", self.ports[o])),
            }
        }
        for c in &self.constant_fields {
            parts.push(format!("{c}:pass-through"));
        }
        write!(f, "{} := {}", self.op, parts.join(", "))
    }
}

fn fieldval_text(v: &FieldVal) -> String {
    match v {
        FieldVal::Bits(b) => b.to_string(),
        FieldVal::Adt(a) => a.to_string(),
    }
}

/// The target's relevant anatomy: where the instruction is, how it splits
/// into assignable units, and which inputs carry data.
struct Shape {
    inst_pos: usize,
    inst_name: String,
    inst_ty: Arc<AdtType>,
    /// One unit spanning the whole instruction (enum/sum targets).
    whole: bool,
    unit_names: Vec<String>,
    unit_tys: Vec<Type>,
    /// Input positions of the non-instruction ports, port order.
    data_ports: Vec<usize>,
    port_names: Vec<String>,
    port_tys: Vec<Type>,
    state_names: Vec<String>,
    state_tys: Vec<Type>,
}

fn shape_of(nf: &NormalForm) -> Result<Shape> {
    let mut inst = None;
    for (i, (name, ty)) in nf.inputs.iter().enumerate() {
        if let Type::Adt(t) = ty {
            if inst.is_some() {
                return Err(Error::Synth(format!(
                    "`{}` has more than one instruction-typed input; synthesis needs exactly one",
                    nf.name
                )));
            }
            inst = Some((i, name.clone(), t.clone()));
        }
    }
    let Some((inst_pos, inst_name, inst_ty)) = inst else {
        return Err(Error::Synth(format!(
            "`{}` has no instruction-typed (ADT) input to synthesize over",
            nf.name
        )));
    };
    let (whole, unit_names, unit_tys) = match &inst_ty.kind {
        AdtKind::Product(fs) => (
            false,
            fs.iter().map(|f| f.name.clone()).collect::<Vec<_>>(),
            fs.iter().map(|f| f.ty.clone()).collect::<Vec<_>>(),
        ),
        _ => (true, vec![inst_name.clone()], vec![Type::Adt(inst_ty.clone())]),
    };
    for (name, ty) in unit_names.iter().zip(&unit_tys) {
        if ty.count().is_none() {
            return Err(Error::Synth(format!(
                "instruction field `{name}` has more values than fit in 128 bits"
            )));
        }
    }
    let mut data_ports = Vec::new();
    let mut port_names = Vec::new();
    let mut port_tys = Vec::new();
    for (i, (name, ty)) in nf.inputs.iter().enumerate() {
        if i != inst_pos {
            data_ports.push(i);
            port_names.push(name.clone());
            port_tys.push(ty.clone());
        }
    }
    Ok(Shape {
        inst_pos,
        inst_name,
        inst_ty,
        whole,
        unit_names,
        unit_tys,
        data_ports,
        port_names,
        port_tys,
        state_names: nf.states.iter().map(|s| s.name.clone()).collect(),
        state_tys: nf.states.iter().map(|s| s.ty.clone()).collect(),
    })
}

/// A shape plus a compiled evaluator at one elaboration width.
struct ModelCtx {
    shape: Shape,
    eval: Evaluator,
    /// Operand width at this elaboration.
    width: u32,
    /// Data-port ordinals whose sort is `bv[width]`, port order.
    bindable: Vec<usize>,
}

fn model_ctx(nf: &NormalForm, width: u32) -> Result<ModelCtx> {
    let shape = shape_of(nf)?;
    let bindable = shape
        .port_tys
        .iter()
        .enumerate()
        .filter(|(_, t)| t.sort() == Sort::Bv(width))
        .map(|(i, _)| i)
        .collect();
    Ok(ModelCtx { shape, eval: Evaluator::new(nf)?, width, bindable })
}

/// A validated synthesis problem: one spec against one target, with an
/// optional narrower re-elaboration used for exhaustive checking.
#[derive(Debug)]
pub struct SynthQuery {
    spec: IrOpSpec,
    target: NormalForm,
    verify_target: Option<NormalForm>,
    verify_width: Option<u32>,
    binding: Binding,
    /// Aligned with the instruction's units: true = the search assigns it.
    existential: Vec<bool>,
}

/// Check a spec against a target circuit and fix the field partition.
/// `universal_fields` names the instruction fields left symbolic.
pub fn build_query(
    spec: IrOpSpec,
    target: &NormalForm,
    universal_fields: &[&str],
    binding: Binding,
) -> Result<SynthQuery> {
    let shape = shape_of(target)?;
    for f in universal_fields {
        if !shape.unit_names.iter().any(|n| n == f) {
            return Err(Error::Synth(format!(
                "`{f}` names no field of `{}`",
                shape.inst_ty.name
            )));
        }
    }
    let existential: Vec<bool> = shape
        .unit_names
        .iter()
        .map(|n| !universal_fields.contains(&n.as_str()))
        .collect();
    let u_count = existential.iter().filter(|e| !**e).count();
    if spec.uses_const && u_count != 1 {
        return Err(Error::Synth(format!(
            "a spec with a constant operand needs exactly one universal instruction field, got {u_count}"
        )));
    }
    let bindable = shape.port_tys.iter().filter(|t| t.sort() == Sort::Bv(spec.width)).count();
    if bindable < spec.arity {
        return Err(Error::Synth(format!(
            "type mismatch: the spec works on bv[{}] operands but `{}` has {bindable} such data ports and needs {}",
            spec.width, target.name, spec.arity
        )));
    }
    // a throwaway evaluation pins down the spec's result sort
    let zero = Value::Bv(BVValue::unsigned(0, spec.width)?);
    let c = if spec.uses_const {
        let u = existential.iter().position(|e| !e).expect("u_count == 1");
        Some(field_value(&nth_field(&shape.unit_tys[u], 0))?)
    } else {
        None
    };
    let env = SpecEnv { x: zero, y: (spec.arity == 2).then_some(zero), c };
    let spec_sort = eval_spec(&spec.expr, &env)
        .map_err(|e| Error::Synth(format!("the spec for `{}` does not evaluate: {e}", spec.name)))?
        .sort();
    if spec_sort != target.output_ty.sort() {
        return Err(Error::Synth(format!(
            "shape mismatch: the spec for `{}` produces {} but `{}` returns {}",
            spec.name,
            sort_name(spec_sort),
            target.name,
            sort_name(target.output_ty.sort())
        )));
    }
    Ok(SynthQuery {
        spec,
        target: target.clone(),
        verify_target: None,
        verify_width: None,
        binding,
        existential,
    })
}

fn sort_name(s: Sort) -> String {
    match s {
        Sort::Bit => "bit".to_string(),
        Sort::Bv(w) => format!("bv[{w}]"),
    }
}

impl SynthQuery {
    pub fn spec(&self) -> &IrOpSpec {
        &self.spec
    }

    /// Attach the same circuit re-elaborated at a smaller width; candidates
    /// are then checked exhaustively there and by sampling at full width.
    pub fn with_verify_model(mut self, nf: &NormalForm) -> Result<Self> {
        let full = shape_of(&self.target)?;
        let small = shape_of(nf)?;
        if nf.name != self.target.name
            || nf.inputs.len() != self.target.inputs.len()
            || small.state_tys.len() != full.state_tys.len()
        {
            return Err(Error::Synth(format!(
                "the verify model must be `{}` re-elaborated at another width",
                self.target.name
            )));
        }
        if small.inst_pos != full.inst_pos || small.unit_names != full.unit_names {
            return Err(Error::Synth(
                "the verify model's instruction layout differs from the target's".into(),
            ));
        }
        for (i, e) in self.existential.iter().enumerate() {
            if *e && small.unit_tys[i].count() != full.unit_tys[i].count() {
                return Err(Error::Synth(format!(
                    "re-elaboration resized instruction field `{}`; bind it universally or synthesize at one width",
                    full.unit_names[i]
                )));
            }
        }
        let full_bindable: Vec<usize> = full
            .port_tys
            .iter()
            .enumerate()
            .filter(|(_, t)| t.sort() == Sort::Bv(self.spec.width))
            .map(|(i, _)| i)
            .collect();
        let Sort::Bv(wv) = small.port_tys[full_bindable[0]].sort() else {
            return Err(Error::Synth(
                "the verify model's operand ports are not bitvectors".into(),
            ));
        };
        let small_bindable: Vec<usize> = small
            .port_tys
            .iter()
            .enumerate()
            .filter(|(_, t)| t.sort() == Sort::Bv(wv))
            .map(|(i, _)| i)
            .collect();
        if small_bindable != full_bindable {
            return Err(Error::Synth(
                "the verify model binds different data ports than the target".into(),
            ));
        }
        self.verify_target = Some(nf.clone());
        self.verify_width = Some(wv);
        Ok(self)
    }

    /// The instruction a rule encodes to, when it fixes every field.
    /// `None` when the rule has pass-through (constant) fields.
    pub fn rule_encoding(&self, rule: &RewriteRule) -> Result<Option<BVValue>> {
        if !rule.constant_fields.is_empty() {
            return Ok(None);
        }
        let shape = shape_of(&self.target)?;
        let value = if shape.whole {
            let FieldVal::Adt(av) = &rule.instruction[0].1 else {
                return Err(Error::Synth("internal: whole-instruction units are ADTs".into()));
            };
            av.clone()
        } else {
            AdtValue::Product {
                ty: shape.inst_ty.clone(),
                fields: rule.instruction.iter().map(|(_, v)| v.clone()).collect(),
            }
        };
        Ok(Some(adt_encode(&value)?))
    }
}

// ---- candidate checking ----

struct SpecEnv {
    x: Value,
    y: Option<Value>,
    c: Option<Value>,
}

fn eval_spec(e: &NfExpr, env: &SpecEnv) -> Result<Value> {
    Ok(match e {
        NfExpr::Var(n) => match n.as_str() {
            "x" => env.x,
            "y" => env
                .y
                .ok_or_else(|| Error::Synth("the spec names `y` but has no second operand".into()))?,
            "c" => env
                .c
                .ok_or_else(|| Error::Synth("the spec names `c` but binds no constant field".into()))?,
            other => {
                return Err(Error::Synth(format!(
                    "spec expressions know `x`, `y` and `c`, not `{other}`"
                )))
            }
        },
        NfExpr::BitLit(b) => Value::Bit(*b),
        NfExpr::BvLit(v) => Value::Bv(*v),
        NfExpr::Op(op, args) => {
            let vals = args.iter().map(|a| eval_spec(a, env)).collect::<Result<Vec<_>>>()?;
            bv_apply(*op, &vals)?
        }
        NfExpr::Ite(c, t, f) => {
            let cv = eval_spec(c, env)?.as_bit()?;
            bv_ite(cv, &eval_spec(t, env)?, &eval_spec(f, env)?)?
        }
        NfExpr::BitIndex(b, i) => {
            let v = eval_spec(b, env)?;
            let bv = v.as_bv()?;
            if *i >= bv.width() {
                return Err(Error::Synth(format!(
                    "bit {i} is out of range for bv[{}]",
                    bv.width()
                )));
            }
            Value::Bit((bv.bits() >> i) & 1 == 1)
        }
        NfExpr::StateEntry(_) | NfExpr::CallSub { .. } => {
            return Err(Error::Synth("spec expressions are pure operator trees".into()))
        }
    })
}

fn field_value(fv: &FieldVal) -> Result<Value> {
    Ok(match fv {
        FieldVal::Bits(v) => *v,
        FieldVal::Adt(av) => Value::Bv(adt_encode(av)?),
    })
}

/// One universally-quantified position in a candidate check.
enum Dim {
    Operand(usize),
    Port(usize),
    Unit(usize),
    State(usize),
}

/// Everything needed to test one candidate under one operand wiring on one
/// model.
struct CandidateRun<'a> {
    q: &'a SynthQuery,
    ctx: &'a ModelCtx,
    u_ordinals: &'a [usize],
    /// Existential units pre-resolved to values: (unit ordinal, value).
    e_fields: Vec<(usize, FieldVal)>,
    map: &'a [usize],
    dims: Vec<Dim>,
    counts: Vec<Option<u128>>,
}

impl<'a> CandidateRun<'a> {
    fn new(
        q: &'a SynthQuery,
        ctx: &'a ModelCtx,
        e_ordinals: &[usize],
        u_ordinals: &'a [usize],
        cand: &[u128],
        map: &'a [usize],
    ) -> Self {
        let shape = &ctx.shape;
        let e_fields = e_ordinals
            .iter()
            .zip(cand)
            .map(|(&o, &i)| (o, nth_field(&shape.unit_tys[o], i)))
            .collect();
        let bound: BTreeSet<usize> = map.iter().map(|&m| ctx.bindable[m]).collect();
        let mut dims = Vec::new();
        let mut counts = Vec::new();
        for k in 0..q.spec.arity {
            dims.push(Dim::Operand(k));
            counts.push(1u128.checked_shl(ctx.width));
        }
        for o in 0..shape.data_ports.len() {
            if !bound.contains(&o) {
                dims.push(Dim::Port(o));
                counts.push(shape.port_tys[o].count());
            }
        }
        for &o in u_ordinals {
            dims.push(Dim::Unit(o));
            counts.push(shape.unit_tys[o].count());
        }
        for i in 0..shape.state_tys.len() {
            dims.push(Dim::State(i));
            counts.push(shape.state_tys[i].count());
        }
        Self { q, ctx, u_ordinals, e_fields, map, dims, counts }
    }

    fn check(&self, salt: u64) -> Result<bool> {
        let total = self
            .counts
            .iter()
            .try_fold(1u128, |a, c| c.and_then(|c| a.checked_mul(c)));
        match total {
            Some(t) if t <= EXHAUSTIVE_CAP => {
                let counts: Vec<u128> =
                    self.counts.iter().map(|c| c.expect("finite space")).collect();
                for_all_vectors(&counts, |digits| self.vector(digits))
            }
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED ^ salt);
                let mut digits = vec![0u128; self.dims.len()];
                for _ in 0..SAMPLE_TRIALS {
                    for (d, c) in digits.iter_mut().zip(&self.counts) {
                        *d = match c {
                            Some(c) => rng.gen_range(0..*c),
                            None => rng.gen(),
                        };
                    }
                    if !self.vector(&digits)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    fn vector(&self, digits: &[u128]) -> Result<bool> {
        let shape = &self.ctx.shape;
        let mut inputs = vec![Value::Bit(false); shape.data_ports.len() + 1];
        let mut states = vec![Value::Bit(false); shape.state_tys.len()];
        let mut units: Vec<Option<FieldVal>> = vec![None; shape.unit_tys.len()];
        for (o, f) in &self.e_fields {
            units[*o] = Some(f.clone());
        }
        let mut x = Value::Bit(false);
        let mut y = None;
        for (dim, &digit) in self.dims.iter().zip(digits) {
            match *dim {
                Dim::Operand(k) => {
                    let v = Value::Bv(BVValue::unsigned(digit, self.ctx.width)?);
                    if k == 0 {
                        x = v;
                    } else {
                        y = Some(v);
                    }
                    inputs[shape.data_ports[self.ctx.bindable[self.map[k]]]] = v;
                }
                Dim::Port(o) => {
                    inputs[shape.data_ports[o]] = field_value(&nth_field(&shape.port_tys[o], digit))?
                }
                Dim::Unit(o) => units[o] = Some(nth_field(&shape.unit_tys[o], digit)),
                Dim::State(i) => states[i] = field_value(&nth_field(&shape.state_tys[i], digit))?,
            }
        }
        let fields: Vec<FieldVal> =
            units.into_iter().map(|u| u.expect("every unit assigned")).collect();
        let c = if self.q.spec.uses_const {
            Some(field_value(&fields[self.u_ordinals[0]])?)
        } else {
            None
        };
        let enc = if shape.whole {
            let FieldVal::Adt(av) = &fields[0] else {
                return Err(Error::Synth("internal: whole-instruction units are ADTs".into()));
            };
            adt_encode(av)?
        } else {
            adt_encode(&AdtValue::Product { ty: shape.inst_ty.clone(), fields })?
        };
        inputs[shape.inst_pos] = Value::Bv(enc);
        let (out, _) = self.ctx.eval.step(&inputs, &states)?;
        let spec = eval_spec(&self.q.spec.expr, &SpecEnv { x, y, c })?;
        Ok(spec.sort() == out.sort() && spec.raw_bits() == out.raw_bits())
    }
}

/// Drive `f` over every digit vector, first position fastest. Stops early
/// (returning false) as soon as `f` does.
fn for_all_vectors<F: FnMut(&[u128]) -> Result<bool>>(counts: &[u128], mut f: F) -> Result<bool> {
    let mut digits = vec![0u128; counts.len()];
    loop {
        if !f(&digits)? {
            return Ok(false);
        }
        let mut i = 0;
        loop {
            if i == counts.len() {
                return Ok(true);
            }
            digits[i] += 1;
            if digits[i] < counts[i] {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// The compiled search state shared by the enumerator and the solver path.
struct Search<'q> {
    q: &'q SynthQuery,
    full: ModelCtx,
    verify: Option<ModelCtx>,
    e_ordinals: Vec<usize>,
    u_ordinals: Vec<usize>,
    e_counts: Vec<u128>,
    n_cands: u128,
}

fn search(q: &SynthQuery) -> Result<Search<'_>> {
    let full = model_ctx(&q.target, q.spec.width)?;
    let verify = match (&q.verify_target, q.verify_width) {
        (Some(nf), Some(w)) => Some(model_ctx(nf, w)?),
        _ => None,
    };
    let e_ordinals: Vec<usize> =
        q.existential.iter().enumerate().filter(|(_, e)| **e).map(|(i, _)| i).collect();
    let u_ordinals: Vec<usize> =
        q.existential.iter().enumerate().filter(|(_, e)| !**e).map(|(i, _)| i).collect();
    let e_counts: Vec<u128> = e_ordinals
        .iter()
        .map(|&o| full.shape.unit_tys[o].count().expect("validated in shape_of"))
        .collect();
    let n_cands = e_counts
        .iter()
        .try_fold(1u128, |a, &c| a.checked_mul(c))
        .ok_or_else(|| Error::Synth("more candidate instructions than fit in 128 bits".into()))?;
    Ok(Search { q, full, verify, e_ordinals, u_ordinals, e_counts, n_cands })
}

impl Search<'_> {
    /// Candidate `k` as per-unit enumeration indices, first unit fastest
    /// (numeric encoding order for default field layouts).
    fn unrank(&self, mut k: u128) -> Vec<u128> {
        self.e_counts
            .iter()
            .map(|&c| {
                let d = k % c;
                k /= c;
                d
            })
            .collect()
    }

    fn passes(&self, cand: &[u128], map: &[usize], salt: u64) -> Result<bool> {
        if let Some(v) = &self.verify {
            let run = CandidateRun::new(self.q, v, &self.e_ordinals, &self.u_ordinals, cand, map);
            if !run.check(salt)? {
                return Ok(false);
            }
        }
        CandidateRun::new(self.q, &self.full, &self.e_ordinals, &self.u_ordinals, cand, map)
            .check(salt)
    }

    fn rule(&self, cand: &[u128], map: &[usize]) -> RewriteRule {
        let shape = &self.full.shape;
        let instruction = self
            .e_ordinals
            .iter()
            .zip(cand)
            .map(|(&o, &i)| (shape.unit_names[o].clone(), nth_field(&shape.unit_tys[o], i)))
            .collect();
        let mut permutation = vec![None; shape.data_ports.len()];
        for (k, &m) in map.iter().enumerate() {
            permutation[self.full.bindable[m]] = Some(k);
        }
        RewriteRule {
            op: self.q.spec.name.clone(),
            instruction,
            ports: shape.port_names.clone(),
            permutation,
            constant_fields: self.u_ordinals.iter().map(|&o| shape.unit_names[o].clone()).collect(),
            verified: true,
        }
    }
}

fn operand_maps(arity: usize, ports: usize, binding: Binding) -> Vec<Vec<usize>> {
    match binding {
        Binding::FixedOrder => vec![(0..arity).collect()],
        Binding::AllPermutations => {
            let mut out = Vec::new();
            let mut cur = Vec::with_capacity(arity);
            let mut used = vec![false; ports];
            permute(arity, &mut cur, &mut used, &mut out);
            out
        }
    }
}

fn permute(arity: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
    if cur.len() == arity {
        out.push(cur.clone());
        return;
    }
    for p in 0..used.len() {
        if !used[p] {
            used[p] = true;
            cur.push(p);
            permute(arity, cur, used, out);
            cur.pop();
            used[p] = false;
        }
    }
}

/// Walk the instruction set in encoding order and return the first verified
/// rule, or `None` when no instruction implements the spec. Deterministic:
/// equal queries give equal rules.
pub fn synth_enumerate(q: &SynthQuery, cap: Option<u128>) -> Result<Option<RewriteRule>> {
    let cap = cap.unwrap_or(DEFAULT_CANDIDATE_CAP);
    let s = search(q)?;
    if s.n_cands > cap {
        return Err(Error::Synth(format!(
            "{} candidate instructions exceed the enumeration cap of {cap}; raise the cap or use solver-backed synthesis",
            s.n_cands
        )));
    }
    let maps = operand_maps(q.spec.arity, s.full.bindable.len(), q.binding);
    for k in 0..s.n_cands {
        let cand = s.unrank(k);
        for map in &maps {
            if s.passes(&cand, map, 0)? {
                if !s.passes(&cand, map, RECHECK_SALT)? {
                    return Err(Error::Synth(format!(
                        "candidate {k} for `{}` passed once and failed re-verification; the sampled check is unstable",
                        q.spec.name
                    )));
                }
                return Ok(Some(s.rule(&cand, map)));
            }
        }
    }
    Ok(None)
}

/// What solver-backed synthesis concluded.
#[derive(Debug)]
pub enum SynthOutcome {
    Rule(RewriteRule),
    /// Every operand wiring is unsatisfiable: no instruction works.
    NoRule,
    /// No solver, solver failure, or timeout; the message says which and
    /// where the emitted queries are.
    Unknown(String),
}

/// Ask an SMT solver for an instruction instead of enumerating. One
/// exists-forall query is emitted per operand wiring; a sat model is decoded
/// and re-verified through the same checker the enumerator uses before it
/// becomes a rule. Without a solver the queries are still written to `dir`.
pub fn synth_solver(q: &SynthQuery, solver: Option<&str>, dir: &Path) -> Result<SynthOutcome> {
    let s = search(q)?;
    let maps = operand_maps(q.spec.arity, s.full.bindable.len(), q.binding);
    let mut note: Option<String> = None;
    let mut emitted: Vec<PathBuf> = Vec::new();
    for (i, map) in maps.iter().enumerate() {
        let (text, e_syms) = emit_query(q, &s.full, map)?;
        smt::check_smtlib(&text)?;
        let path = dir.join(format!("{}.{}.p{i}.smt2", q.target.name, q.spec.name));
        std::fs::write(&path, &text)
            .map_err(|e| Error::Synth(format!("cannot write {}: {e}", path.display())))?;
        let Some(cmd) = solver else {
            emitted.push(path);
            continue;
        };
        match run_solver(cmd, &path, SOLVER_TIMEOUT)? {
            SolverRun::SpawnFailed(why) => {
                return Ok(SynthOutcome::Unknown(format!(
                    "could not run the solver: {why}; the query is at {}",
                    path.display()
                )));
            }
            SolverRun::TimedOut => {
                note = Some(format!("the solver timed out on {}", path.display()));
            }
            SolverRun::Finished { stdout, .. } => match stdout.split_whitespace().next() {
                Some("unsat") => {}
                Some("sat") => {
                    let cand = decode_candidate(&s, cmd, &path, &text, &e_syms)?;
                    if !(s.passes(&cand, map, 0)? && s.passes(&cand, map, RECHECK_SALT)?) {
                        return Err(Error::Synth(format!(
                            "the solver proposed an instruction for `{}` that failed re-verification",
                            q.spec.name
                        )));
                    }
                    return Ok(SynthOutcome::Rule(s.rule(&cand, map)));
                }
                other => {
                    note = Some(format!(
                        "the solver returned no verdict on {} ({})",
                        path.display(),
                        other.unwrap_or("no output")
                    ));
                }
            },
        }
    }
    if solver.is_none() {
        return Ok(SynthOutcome::Unknown(format!(
            "no solver configured; {} quantified quer{} written, first at {}",
            emitted.len(),
            if emitted.len() == 1 { "y" } else { "ies" },
            emitted[0].display()
        )));
    }
    Ok(match note {
        Some(n) => SynthOutcome::Unknown(n),
        None => SynthOutcome::NoRule,
    })
}

/// Rerun the sat query with `(get-model)` appended and map the existential
/// constants back to enumeration indices.
fn decode_candidate(
    s: &Search<'_>,
    cmd: &str,
    path: &Path,
    text: &str,
    e_syms: &[String],
) -> Result<Vec<u128>> {
    let model_path = path.with_extension("model.smt2");
    let mut with_model = text.to_string();
    with_model.push_str("(get-model)\n");
    std::fs::write(&model_path, &with_model)
        .map_err(|e| Error::Synth(format!("cannot write {}: {e}", model_path.display())))?;
    let run = run_solver(cmd, &model_path, SOLVER_TIMEOUT)?;
    let SolverRun::Finished { stdout, .. } = run else {
        return Err(Error::Synth("the solver answered sat but would not print a model".into()));
    };
    let trimmed = stdout.trim_start();
    if !trimmed.starts_with("sat") {
        return Err(Error::Synth(format!(
            "the solver did not reproduce its sat answer (got {:?})",
            trimmed.lines().next().unwrap_or("")
        )));
    }
    let body = &trimmed[3..];
    let sexps = smt::parse_sexps(body)
        .map_err(|e| Error::Synth(format!("unreadable solver model: {e}")))?;
    let mut vals: HashMap<String, Value> = HashMap::new();
    for sexp in &sexps {
        collect_model_values(sexp, &mut vals);
    }
    e_syms
        .iter()
        .zip(&s.e_ordinals)
        .map(|(sym, &o)| {
            let ty = &s.full.shape.unit_tys[o];
            match vals.get(sym) {
                // an unconstrained constant may be omitted from the model
                None => Ok(0),
                Some(v) => {
                    if v.sort() != Sort::Bv(ty.encoded_width()) {
                        return Err(Error::Synth(format!(
                            "the model binds `{sym}` at the wrong sort"
                        )));
                    }
                    index_for_raw(ty, v.raw_bits())
                }
            }
        })
        .collect()
}

/// Enumeration index of the unit value encoded as `raw`.
fn index_for_raw(ty: &Type, raw: u128) -> Result<u128> {
    match ty {
        Type::Bit | Type::Bv { .. } => Ok(raw),
        Type::Adt(t) => match &t.kind {
            AdtKind::Enum(vs) => {
                if !vs.iter().any(|v| v.value == raw) {
                    return Err(Error::Synth(format!(
                        "the solver picked {raw:#x}, not a valid `{}` encoding",
                        t.name
                    )));
                }
                Ok(vs.iter().filter(|v| v.value < raw).count() as u128)
            }
            _ => {
                let n = t.count().ok_or_else(|| {
                    Error::Synth(format!("`{}` is too large to decode", t.name))
                })?;
                if n > EXHAUSTIVE_CAP {
                    return Err(Error::Synth(format!(
                        "`{}` is too large to decode by scanning",
                        t.name
                    )));
                }
                for i in 0..n {
                    if adt_encode(&adt_nth(t, i))?.bits() == raw {
                        return Ok(i);
                    }
                }
                Err(Error::Synth(format!(
                    "the solver picked {raw:#x}, not a valid `{}` encoding",
                    t.name
                )))
            }
        },
    }
}

/// Render one operand wiring as an exists-forall SMT-LIB query: existential
/// constants for the searched fields, a single `forall` over operands,
/// universal fields, unbound ports and state.
fn emit_query(q: &SynthQuery, ctx: &ModelCtx, map: &[usize]) -> Result<(String, Vec<String>)> {
    let shape = &ctx.shape;
    let nf = &q.target;
    let mut pool = TermPool::new();
    let mut taken: BTreeSet<String> = BTreeSet::new();

    let mut decls: Vec<(String, u32)> = Vec::new();
    let mut e_syms: Vec<String> = Vec::new();
    let mut e_asserts: Vec<TermId> = Vec::new();
    let mut binders: Vec<(String, Sort)> = Vec::new();
    let mut antecedents: Vec<TermId> = Vec::new();
    let mut unit_vars: Vec<Option<TermId>> = vec![None; shape.unit_tys.len()];
    let mut c_var: Option<TermId> = None;

    for (i, name) in shape.unit_names.iter().enumerate() {
        if !q.existential[i] {
            continue;
        }
        let ty = &shape.unit_tys[i];
        let w = ty.encoded_width();
        let sym = claim(&mut taken, sanitize(&format!("e_{name}")));
        let v = pool.var(&sym, Sort::Bv(w));
        if let Type::Adt(t) = ty {
            if let Some(ok) = valid_encoding(&mut pool, t, v)? {
                e_asserts.push(ok);
            }
        }
        unit_vars[i] = Some(v);
        decls.push((sym.clone(), w));
        e_syms.push(sym);
    }

    let xsym = claim(&mut taken, "x".to_string());
    let xv = pool.var(&xsym, Sort::Bv(ctx.width));
    binders.push((xsym, Sort::Bv(ctx.width)));
    let mut yv = None;
    if q.spec.arity == 2 {
        let ysym = claim(&mut taken, "y".to_string());
        let v = pool.var(&ysym, Sort::Bv(ctx.width));
        binders.push((ysym, Sort::Bv(ctx.width)));
        yv = Some(v);
    }
    for (i, name) in shape.unit_names.iter().enumerate() {
        if q.existential[i] {
            continue;
        }
        let ty = &shape.unit_tys[i];
        let w = ty.encoded_width();
        let sym = claim(&mut taken, sanitize(&format!("u_{name}")));
        let v = pool.var(&sym, Sort::Bv(w));
        binders.push((sym, Sort::Bv(w)));
        if let Type::Adt(t) = ty {
            if let Some(ok) = valid_encoding(&mut pool, t, v)? {
                antecedents.push(ok);
            }
        }
        unit_vars[i] = Some(v);
        c_var = Some(v);
    }
    let bound: BTreeSet<usize> = map.iter().map(|&m| ctx.bindable[m]).collect();
    let mut port_vars: Vec<Option<TermId>> = vec![None; shape.data_ports.len()];
    for (o, pname) in shape.port_names.iter().enumerate() {
        if bound.contains(&o) {
            continue;
        }
        let sort = shape.port_tys[o].sort();
        let sym = claim(&mut taken, sanitize(&format!("p_{pname}")));
        let v = pool.var(&sym, sort);
        binders.push((sym, sort));
        if let Type::Adt(t) = &shape.port_tys[o] {
            if let Some(ok) = valid_encoding(&mut pool, t, v)? {
                antecedents.push(ok);
            }
        }
        port_vars[o] = Some(v);
    }
    let mut state_vars = Vec::new();
    for (name, ty) in shape.state_names.iter().zip(&shape.state_tys) {
        let sort = ty.sort();
        let sym = claim(&mut taken, sanitize(&format!("s_{name}")));
        let v = pool.var(&sym, sort);
        binders.push((sym, sort));
        if let Type::Adt(t) = ty {
            if let Some(ok) = valid_encoding(&mut pool, t, v)? {
                antecedents.push(ok);
            }
        }
        state_vars.push(v);
    }

    // assemble the instruction word from its field variables
    let word = if shape.whole {
        unit_vars[0].expect("whole unit assigned")
    } else {
        let ranges = shape.inst_ty.field_ranges();
        let mut parts: Vec<(u32, u32, TermId)> = ranges
            .iter()
            .zip(&unit_vars)
            .map(|(&(hi, lo), v)| (hi, lo, v.expect("every field assigned")))
            .collect();
        parts.sort_by(|a, b| b.1.cmp(&a.1));
        let mut cur: Option<TermId> = None;
        let mut next_lo = shape.inst_ty.width();
        for (hi, lo, v) in parts {
            if hi + 1 < next_lo {
                let pad = pool.bv(BVValue::unsigned(0, next_lo - hi - 1)?);
                cur = Some(match cur {
                    Some(c) => pool.apply(OpCode::Concat, vec![c, pad])?,
                    None => pad,
                });
            }
            cur = Some(match cur {
                Some(c) => pool.apply(OpCode::Concat, vec![c, v])?,
                None => v,
            });
            next_lo = lo;
        }
        if next_lo > 0 {
            let pad = pool.bv(BVValue::unsigned(0, next_lo)?);
            cur = Some(match cur {
                Some(c) => pool.apply(OpCode::Concat, vec![c, pad])?,
                None => pad,
            });
        }
        cur.expect("products have at least one field")
    };

    let mut env: HashMap<String, TermId> = HashMap::new();
    env.insert(shape.inst_name.clone(), word);
    for (k, &m) in map.iter().enumerate() {
        let o = ctx.bindable[m];
        env.insert(shape.port_names[o].clone(), if k == 0 { xv } else { yv.expect("arity 2") });
    }
    for (o, v) in port_vars.iter().enumerate() {
        if let Some(v) = v {
            env.insert(shape.port_names[o].clone(), *v);
        }
    }
    for (name, v) in shape.state_names.iter().zip(&state_vars) {
        env.insert(name.clone(), *v);
    }
    for def in &nf.defs {
        let t = smt::lower(&mut pool, &env, &def.expr)?;
        env.insert(def.name.clone(), t);
    }
    let out = smt::lower(&mut pool, &env, &nf.output)?;

    let mut senv: HashMap<String, TermId> = HashMap::new();
    senv.insert("x".into(), xv);
    if let Some(y) = yv {
        senv.insert("y".into(), y);
    }
    if let Some(c) = c_var {
        senv.insert("c".into(), c);
    }
    let spec_t = smt::lower(&mut pool, &senv, &q.spec.expr)?;
    let eq = pool.apply(OpCode::Eq, vec![spec_t, out])?;
    let body = if antecedents.is_empty() {
        eq
    } else {
        let mut ante = antecedents[0];
        for &a in &antecedents[1..] {
            ante = pool.apply(OpCode::And, vec![ante, a])?;
        }
        let na = pool.apply(OpCode::Not, vec![ante])?;
        pool.apply(OpCode::Or, vec![na, eq])?
    };

    // quantified bodies cannot reference hoisted definitions, so terms are
    // printed as plain trees
    let names: HashMap<TermId, String> = HashMap::new();
    let mut text = String::new();
    let _ = writeln!(text, "; is there a `{}` instruction computing `{}`?", nf.name, q.spec.name);
    let _ = writeln!(text, "(set-logic BV)");
    for (sym, w) in &decls {
        let _ = writeln!(text, "(declare-const {sym} (_ BitVec {w}))");
    }
    for a in &e_asserts {
        text.push_str("(assert ");
        print_ref(&pool, *a, &names, &mut text);
        text.push_str(")\n");
    }
    text.push_str("(assert (forall (");
    for (i, (sym, sort)) in binders.iter().enumerate() {
        if i > 0 {
            text.push(' ');
        }
        let _ = write!(text, "({sym} {})", sort_text(*sort));
    }
    text.push_str(")\n  ");
    print_ref(&pool, body, &names, &mut text);
    text.push_str("))\n(check-sat)\n");
    Ok((text, e_syms))
}

// ---- suites ----

/// One op's result in a synthesis suite.
#[derive(Debug)]
pub struct SuiteEntry {
    pub op: String,
    pub found: bool,
    pub rule: Option<RewriteRule>,
    pub millis: u128,
    /// Build errors, cap refusals, or solver diagnostics.
    pub note: Option<String>,
}

/// Shared settings for [`synth_suite`].
pub struct SuiteConfig<'a> {
    pub universal_fields: &'a [&'a str],
    pub binding: Binding,
    pub cap: Option<u128>,
    /// Switch every op to solver-backed synthesis, writing queries here.
    /// Without a `solver` command the queries are still emitted and each op
    /// reports unknown.
    pub solver_dir: Option<&'a Path>,
    /// Solver command template containing `{file}`.
    pub solver: Option<&'a str>,
}

impl Default for SuiteConfig<'static> {
    fn default() -> Self {
        Self {
            universal_fields: &[],
            binding: Binding::AllPermutations,
            cap: None,
            solver_dir: None,
            solver: None,
        }
    }
}

/// Synthesize a whole op table against one target. Per-op failures become
/// entries with `found: false` and a note; the suite itself never fails.
pub fn synth_suite(
    ops: &[IrOpSpec],
    target: &NormalForm,
    verify_target: Option<&NormalForm>,
    cfg: &SuiteConfig<'_>,
) -> Vec<SuiteEntry> {
    ops.iter()
        .map(|op| {
            let t0 = Instant::now();
            let built = build_query(op.clone(), target, cfg.universal_fields, cfg.binding)
                .and_then(|q| match verify_target {
                    Some(nf) => q.with_verify_model(nf),
                    None => Ok(q),
                });
            let (found, rule, note) = match built {
                Err(e) => (false, None, Some(e.to_string())),
                Ok(q) => match cfg.solver_dir {
                    None => match synth_enumerate(&q, cfg.cap) {
                        Ok(Some(r)) => (true, Some(r), None),
                        Ok(None) => (false, None, None),
                        Err(e) => (false, None, Some(e.to_string())),
                    },
                    Some(dir) => match synth_solver(&q, cfg.solver, dir) {
                        Ok(SynthOutcome::Rule(r)) => (true, Some(r), None),
                        Ok(SynthOutcome::NoRule) => (false, None, None),
                        Ok(SynthOutcome::Unknown(m)) => (false, None, Some(m)),
                        Err(e) => (false, None, Some(e.to_string())),
                    },
                },
            };
            SuiteEntry {
                op: op.name.clone(),
                found,
                rule,
                millis: t0.elapsed().as_millis(),
                note,
            }
        })
        .collect()
}

/// Machine-readable suite report: one object per op with `op`, `found`,
/// `instruction` (field name to value text, or null), `permutation`
/// (operand index per data port, nulls for unbound ports), `constant_fields`
/// and `millis`.
pub fn suite_json(entries: &[SuiteEntry]) -> serde_json::Value {
    serde_json::Value::Array(
        entries
            .iter()
            .map(|e| {
                let mut o = serde_json::Map::new();
                o.insert("op".into(), e.op.clone().into());
                o.insert("found".into(), e.found.into());
                match &e.rule {
                    Some(r) => {
                        let inst: serde_json::Map<String, serde_json::Value> = r
                            .instruction
                            .iter()
                            .map(|(n, v)| (n.clone(), fieldval_text(v).into()))
                            .collect();
                        o.insert("instruction".into(), inst.into());
                        o.insert(
                            "permutation".into(),
                            r.permutation
                                .iter()
                                .map(|p| match p {
                                    Some(k) => (*k).into(),
                                    None => serde_json::Value::Null,
                                })
                                .collect::<Vec<_>>()
                                .into(),
                        );
                        o.insert(
                            "constant_fields".into(),
                            r.constant_fields
                                .iter()
                                .map(|c| serde_json::Value::from(c.clone()))
                                .collect::<Vec<_>>()
                                .into(),
                        );
                    }
                    None => {
                        o.insert("instruction".into(), serde_json::Value::Null);
                        o.insert("permutation".into(), serde_json::Value::Null);
                        o.insert("constant_fields".into(), serde_json::Value::Null);
                    }
                }
                o.insert("millis".into(), (e.millis.min(u64::MAX as u128) as u64).into());
                if let Some(n) = &e.note {
                    o.insert("note".into(), n.clone().into());
                }
                serde_json::Value::Object(o)
            })
            .collect(),
    )
}

/// Plain-text suite report, one line per op.
pub fn render_table(entries: &[SuiteEntry]) -> String {
    let op_w = entries.iter().map(|e| e.op.len()).max().unwrap_or(2).max(2);
    let mut out = String::new();
    let _ = writeln!(out, "{:op_w$}  {:5}  {:>6}  rule", "op", "found", "ms");
    for e in entries {
        let rule = match (&e.rule, &e.note) {
            (Some(r), _) => r.to_string(),
            (None, Some(n)) => format!("({n})"),
            (None, None) => "(none)".to_string(),
        };
        let _ = writeln!(
            out,
            "{:op_w$}  {:5}  {:>6}  {}",
            e.op,
            if e.found { "yes" } else { "no" },
            e.millis,
            rule
        );
    }
    out
}
