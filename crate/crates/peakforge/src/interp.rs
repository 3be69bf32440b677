//! Functional simulation of normal forms.
//!
//! An [`Evaluator`] compiles a [`NormalForm`] once — names become register
//! slots — and then evaluates steps without any lookups. An [`Instance`] adds
//! the architectural state: it owns the register values, starting from their
//! reset encodings, and commits the next-state values after every step.

use std::collections::HashMap;

use crate::adt::{adt_decode, AdtValue, Type};
use crate::bitvec::{bv_apply, bv_ite, BVValue, OpCode, Sort, Value};
use crate::error::{Error, Result};
use crate::normalize::{NfExpr, NormalForm};

/// An expression with every reference resolved to a register slot.
#[derive(Debug, Clone)]
pub struct Compiled(Code);

#[derive(Debug, Clone)]
enum Code {
    Slot(usize),
    BitLit(bool),
    BvLit(BVValue),
    Op(OpCode, Vec<Code>),
    Ite(Box<Code>, Box<Code>, Box<Code>),
    BitIndex(Box<Code>, u32),
}

pub struct Evaluator {
    name: String,
    input_sorts: Vec<Sort>,
    n_states: usize,
    /// Definitions in order: (destination slot, code).
    program: Vec<(usize, Code)>,
    output: Code,
    next: Vec<Code>,
    slot_count: usize,
    slots: HashMap<String, usize>,
}

impl Evaluator {
    pub fn new(nf: &NormalForm) -> Result<Self> {
        let mut slots = HashMap::new();
        for (i, (name, _)) in nf.inputs.iter().enumerate() {
            slots.insert(name.clone(), i);
        }
        let n_inputs = nf.inputs.len();
        for (i, s) in nf.states.iter().enumerate() {
            slots.insert(s.name.clone(), n_inputs + i);
        }
        let base = n_inputs + nf.states.len();
        for (i, d) in nf.defs.iter().enumerate() {
            slots.insert(d.name.clone(), base + i);
        }

        let lookup = |name: &str| -> Result<usize> {
            slots.get(name).copied().ok_or_else(|| {
                Error::Eval(format!("`{name}` has no slot (corrupt normal form)"))
            })
        };
        let program = nf
            .defs
            .iter()
            .enumerate()
            .map(|(i, d)| Ok((base + i, compile(&d.expr, &lookup)?)))
            .collect::<Result<Vec<_>>>()?;
        let output = compile(&nf.output, &lookup)?;
        let next = nf
            .next
            .iter()
            .map(|(_, e)| compile(e, &lookup))
            .collect::<Result<Vec<_>>>()?;

        Ok(Evaluator {
            name: nf.name.clone(),
            input_sorts: nf.inputs.iter().map(|(_, t)| t.sort()).collect(),
            n_states: nf.states.len(),
            program,
            output,
            next,
            slot_count: base + nf.defs.len(),
            slots,
        })
    }

    /// Resolve an expression over this circuit's names (a lowered property)
    /// into slot-addressed code.
    pub fn compile_expr(&self, e: &NfExpr) -> Result<Compiled> {
        let lookup = |name: &str| -> Result<usize> {
            self.slots.get(name).copied().ok_or_else(|| {
                Error::Eval(format!("`{name}` is not defined in `{}`", self.name))
            })
        };
        Ok(Compiled(compile(e, &lookup)?))
    }

    /// One combinational pass: compute the output and the values the
    /// registers would take, without committing anything.
    pub fn step(&self, inputs: &[Value], states: &[Value]) -> Result<(Value, Vec<Value>)> {
        let frame = self.frame(inputs, states)?;
        let output = eval(&self.output, &frame)?;
        let next =
            self.next.iter().map(|c| eval(c, &frame)).collect::<Result<Vec<_>>>()?;
        Ok((output, next))
    }

    /// One pass that also evaluates extra compiled expressions (properties)
    /// against the same frame.
    pub fn step_with(
        &self,
        inputs: &[Value],
        states: &[Value],
        extra: &[&Compiled],
    ) -> Result<(Value, Vec<Value>, Vec<Value>)> {
        let frame = self.frame(inputs, states)?;
        let output = eval(&self.output, &frame)?;
        let next =
            self.next.iter().map(|c| eval(c, &frame)).collect::<Result<Vec<_>>>()?;
        let more = extra
            .iter()
            .map(|c| eval(&c.0, &frame))
            .collect::<Result<Vec<_>>>()?;
        Ok((output, next, more))
    }

    fn frame(&self, inputs: &[Value], states: &[Value]) -> Result<Vec<Value>> {
        if inputs.len() != self.input_sorts.len() {
            return Err(Error::Eval(format!(
                "`{}` takes {} input(s), got {}",
                self.name,
                self.input_sorts.len(),
                inputs.len()
            )));
        }
        for (i, (v, want)) in inputs.iter().zip(&self.input_sorts).enumerate() {
            if v.sort() != *want {
                return Err(Error::Eval(format!(
                    "input {i} of `{}` wants {want:?}, got {:?}",
                    self.name,
                    v.sort()
                )));
            }
        }
        if states.len() != self.n_states {
            return Err(Error::Eval(format!(
                "`{}` has {} state(s), got {}",
                self.name, self.n_states, states.len()
            )));
        }
        let mut frame = Vec::with_capacity(self.slot_count);
        frame.extend_from_slice(inputs);
        frame.extend_from_slice(states);
        frame.resize(self.slot_count, Value::Bit(false));
        for (slot, code) in &self.program {
            frame[*slot] = eval(code, &frame)?;
        }
        Ok(frame)
    }
}

fn compile(e: &NfExpr, lookup: &dyn Fn(&str) -> Result<usize>) -> Result<Code> {
    Ok(match e {
        NfExpr::Var(n) | NfExpr::StateEntry(n) => Code::Slot(lookup(n)?),
        NfExpr::BitLit(b) => Code::BitLit(*b),
        NfExpr::BvLit(v) => Code::BvLit(*v),
        NfExpr::Op(op, args) => Code::Op(
            *op,
            args.iter().map(|a| compile(a, lookup)).collect::<Result<Vec<_>>>()?,
        ),
        NfExpr::Ite(c, t, f) => Code::Ite(
            Box::new(compile(c, lookup)?),
            Box::new(compile(t, lookup)?),
            Box::new(compile(f, lookup)?),
        ),
        NfExpr::BitIndex(b, i) => Code::BitIndex(Box::new(compile(b, lookup)?), *i),
        NfExpr::CallSub { inst, .. } => {
            return Err(Error::Eval(format!(
                "call to `{inst}` survived inlining (corrupt normal form)"
            )))
        }
    })
}

fn eval(c: &Code, frame: &[Value]) -> Result<Value> {
    Ok(match c {
        Code::Slot(i) => frame[*i],
        Code::BitLit(b) => Value::Bit(*b),
        Code::BvLit(v) => Value::Bv(*v),
        Code::Op(op, args) => {
            let vals =
                args.iter().map(|a| eval(a, frame)).collect::<Result<Vec<_>>>()?;
            bv_apply(*op, &vals)?
        }
        Code::Ite(cond, t, f) => {
            let cond = eval(cond, frame)?.as_bit()?;
            bv_ite(cond, &eval(t, frame)?, &eval(f, frame)?)?
        }
        Code::BitIndex(b, i) => {
            let v = eval(b, frame)?;
            Value::Bit((v.as_bv()?.bits() >> i) & 1 == 1)
        }
    })
}

/// A circuit plus its architectural state.
pub struct Instance {
    eval: Evaluator,
    resets: Vec<Value>,
    states: Vec<Value>,
}

impl Instance {
    pub fn new(nf: &NormalForm) -> Result<Self> {
        let eval = Evaluator::new(nf)?;
        let resets: Vec<Value> = nf.states.iter().map(|s| s.reset).collect();
        Ok(Instance { eval, states: resets.clone(), resets })
    }

    /// Evaluate one step and commit the state.
    pub fn step(&mut self, inputs: &[Value]) -> Result<Value> {
        let (output, next) = self.eval.step(inputs, &self.states)?;
        self.states = next;
        Ok(output)
    }

    /// Back to reset values.
    pub fn reset(&mut self) {
        self.states = self.resets.clone();
    }

    pub fn states(&self) -> &[Value] {
        &self.states
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.eval
    }
}

// ---- value parsing and display for simulation vectors ----

/// Parse one stimulus token against an input's declared type.
///
/// Accepted: decimal/`0x`/`0b` integers giving the raw encoding (validated —
/// a pattern no abstract value encodes to is rejected), `0`/`1`/`true`/`false`
/// for bits, and a bare variant label for enum-typed inputs.
pub fn parse_value(token: &str, ty: &Type) -> Result<Value> {
    let bad = |msg: String| Error::Eval(msg);
    match ty {
        Type::Bit => match token {
            "0" | "false" => Ok(Value::Bit(false)),
            "1" | "true" => Ok(Value::Bit(true)),
            _ => Err(bad(format!("`{token}` is not a bit (0/1/true/false)"))),
        },
        Type::Bv { width, sign } => {
            let raw = parse_int(token)
                .ok_or_else(|| bad(format!("`{token}` is not an integer")))?;
            BVValue::new(raw, *width, *sign)
                .map(Value::Bv)
                .map_err(|_| bad(format!("`{token}` does not fit in {ty}")))
        }
        Type::Adt(t) => {
            if let Some(raw) = parse_int(token) {
                let bits = BVValue::unsigned(raw, t.width())
                    .map_err(|_| bad(format!("`{token}` does not fit in {}", t.name)))?;
                adt_decode(t, &bits).map_err(|e| bad(e.to_string()))?;
                Ok(Value::Bv(bits))
            } else {
                // bare label, with an optional `Type.` qualifier
                let label = token.strip_prefix(&format!("{}.", t.name)).unwrap_or(token);
                let v = AdtValue::enum_label(t, label).map_err(|e| bad(e.to_string()))?;
                Ok(Value::Bv(crate::adt::adt_encode(&v).map_err(|e| bad(e.to_string()))?))
            }
        }
    }
}

fn parse_int(token: &str) -> Option<u128> {
    let t = token.replace('_', "");
    if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        u128::from_str_radix(hex, 16).ok()
    } else if let Some(bin) = t.strip_prefix("0b").or_else(|| t.strip_prefix("0B")) {
        u128::from_str_radix(bin, 2).ok()
    } else {
        t.parse().ok()
    }
}

/// Render an output or state value under its declared type: bits as `0`/`1`,
/// vectors as decimal, algebraic values decoded (`AluOp.ADD`, ...).
pub fn format_value(v: &Value, ty: &Type) -> String {
    match (v, ty) {
        (Value::Bit(b), _) => if *b { "1" } else { "0" }.to_string(),
        (Value::Bv(bv), Type::Adt(t)) => match adt_decode(t, bv) {
            Ok(av) => av.to_string(),
            Err(_) => format!("{}#invalid({})", t.name, bv.bits()),
        },
        (Value::Bv(bv), _) => format!("{}", bv.bits()),
    }
}
