//! Property checking: seeded random trials, exhaustive enumeration of the
//! full assignment space at small widths, and formal checks that assert the
//! negation of the property and hand the file to an external SMT solver.
//!
//! A property quantifies over the circuit's inputs *and* entry-state values;
//! one check evaluates a single combinational step. Counterexamples are
//! always re-validated against the interpreter before they are reported, no
//! matter which method produced them.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adt::{adt_encode, adt_nth, Type};
use crate::bitvec::{BVValue, OpCode, Value};
use crate::error::{Error, Result};
use crate::interp::{format_value, Compiled, Evaluator};
use crate::normalize::{lower_property, NfExpr, NormalForm};
use crate::smt::{
    self, declaration_symbols, emit_smtlib, symexec, EmitMode, Sexp,
};
use crate::surface::check::TypedProperty;

/// Outcome of a check. A counterexample carries the violating assignment as
/// `(name, value)` pairs, inputs first and entry states after, in declaration
/// order; `Unknown` carries a diagnostic explaining why no verdict exists.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Holds,
    Counterexample(Vec<(String, Value)>),
    Unknown(String),
}

impl Verdict {
    /// Process exit code the CLI maps this verdict to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Holds => 0,
            Verdict::Counterexample(_) => 1,
            Verdict::Unknown(_) => 2,
        }
    }

    pub fn word(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Counterexample(_) => "counterexample",
            Verdict::Unknown(_) => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Random,
    Exhaustive,
    Solver,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Random => "random",
            Method::Exhaustive => "exhaustive",
            Method::Solver => "solver",
        })
    }
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub circuit: String,
    pub property: String,
    pub method: Method,
    pub verdict: Verdict,
    /// Property evaluations performed (0 for the solver method).
    pub trials: u64,
    pub duration: Duration,
    /// The emitted query, when the formal path ran.
    pub smt_file: Option<PathBuf>,
}

/// How to run random checking.
#[derive(Debug, Clone)]
pub struct RandomPlan {
    pub trials: u64,
    pub seed: u64,
    /// Cycle algebraic-typed inputs through every valid inhabitant (in
    /// enumeration order) instead of sampling them, so each instruction gets
    /// exercised; data inputs and states stay random either way.
    pub sweep_adts: bool,
}

impl Default for RandomPlan {
    fn default() -> Self {
        RandomPlan { trials: 1000, seed: 0, sweep_adts: false }
    }
}

/// Cap on the exhaustive assignment space (2^24 points).
pub const DEFAULT_SPACE_CAP: u128 = 1 << 24;

/// Cap on the instruction cross product a sweep may cycle through.
const SWEEP_CAP: u128 = 1 << 16;

/// How long a solver subprocess may run before it is killed.
const SOLVER_TIMEOUT: Duration = Duration::from_secs(120);

/// A property bound to its circuit's normal form, ready to check by any
/// method.
pub struct Checker {
    nf: NormalForm,
    eval: Evaluator,
    property: String,
    prop_expr: NfExpr,
    prop: Compiled,
}

impl Checker {
    pub fn new(nf: &NormalForm, prop: &TypedProperty) -> Result<Self> {
        if prop.circuit != nf.name {
            return Err(Error::Verify(format!(
                "property `{}` is about `{}`, not `{}`",
                prop.name, prop.circuit, nf.name
            )));
        }
        let prop_expr = lower_property(prop, nf)?;
        let eval = Evaluator::new(nf)?;
        let compiled = eval.compile_expr(&prop_expr)?;
        Ok(Checker {
            nf: nf.clone(),
            eval,
            property: prop.name.clone(),
            prop_expr,
            prop: compiled,
        })
    }

    pub fn circuit(&self) -> &str {
        &self.nf.name
    }

    pub fn property(&self) -> &str {
        &self.property
    }

    /// The quantified variables of the property: inputs then entry states,
    /// with their surface types. Counterexample valuations follow this order.
    pub fn signature(&self) -> Vec<(String, Type)> {
        self.nf
            .inputs
            .iter()
            .cloned()
            .chain(self.nf.states.iter().map(|s| (s.name.clone(), s.ty.clone())))
            .collect()
    }

    /// One line per report, plus the counterexample assignment when present.
    pub fn render(&self, r: &CheckReport) -> String {
        let mut s = format!(
            "{}.{}: {} ({}, {} trial(s), {:?})",
            r.circuit,
            r.property,
            r.verdict.word(),
            r.method,
            r.trials,
            r.duration
        );
        if let Some(f) = &r.smt_file {
            s.push_str(&format!("\n  query: {}", f.display()));
        }
        if let Verdict::Counterexample(vals) = &r.verdict {
            let types: HashMap<&str, &Type> = self
                .nf
                .inputs
                .iter()
                .map(|(n, t)| (n.as_str(), t))
                .chain(self.nf.states.iter().map(|st| (st.name.as_str(), &st.ty)))
                .collect();
            for (name, v) in vals {
                let text = match types.get(name.as_str()) {
                    Some(ty) => format_value(v, ty),
                    None => format!("{v:?}"),
                };
                s.push_str(&format!("\n  {name} = {text}"));
            }
        }
        if let Verdict::Unknown(why) = &r.verdict {
            s.push_str(&format!("\n  {why}"));
        }
        s
    }

    // ---- random ----

    /// Sample assignments uniformly (algebraic types over their valid
    /// inhabitants only) and evaluate the property on each. Deterministic in
    /// the seed.
    pub fn check_random(&self, plan: &RandomPlan) -> Result<CheckReport> {
        if plan.trials == 0 {
            return Err(Error::Verify("at least one trial is required".into()));
        }
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);

        // positions the sweep pins, with their inhabitant counts
        let sweep: Vec<(usize, u128)> = if plan.sweep_adts {
            let mut v = Vec::new();
            let mut total: u128 = 1;
            for (i, (name, ty)) in self.nf.inputs.iter().enumerate() {
                if let Type::Adt(t) = ty {
                    let n = t.count().ok_or_else(|| {
                        Error::Verify(format!("`{name}` has too many values to sweep"))
                    })?;
                    total = total.saturating_mul(n);
                    v.push((i, n));
                }
            }
            if total > SWEEP_CAP {
                return Err(Error::Verify(format!(
                    "sweeping {total} instruction combinations exceeds the cap \
                     of {SWEEP_CAP}; sample without the sweep instead"
                )));
            }
            v
        } else {
            Vec::new()
        };
        let n_combos: u128 = sweep.iter().map(|(_, n)| n).product();

        for t in 0..plan.trials {
            let mut inputs = Vec::with_capacity(self.nf.inputs.len());
            for (_, ty) in &self.nf.inputs {
                inputs.push(sample_value(ty, &mut rng)?);
            }
            if !sweep.is_empty() {
                let mut rest = t as u128 % n_combos;
                for &(pos, n) in &sweep {
                    let Type::Adt(t) = &self.nf.inputs[pos].1 else { unreachable!() };
                    inputs[pos] = Value::Bv(adt_encode(&adt_nth(t, rest % n))?);
                    rest /= n;
                }
            }
            let states = self
                .nf
                .states
                .iter()
                .map(|s| sample_value(&s.ty, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            if !self.holds_on(&inputs, &states)? {
                return self.violation(Method::Random, t + 1, start, inputs, states);
            }
        }
        Ok(self.report(Method::Random, Verdict::Holds, plan.trials, start))
    }

    // ---- exhaustive ----

    /// Evaluate the property on every assignment of inputs and entry states.
    /// Refuses when the space exceeds `cap` (default [`DEFAULT_SPACE_CAP`]),
    /// naming the cap a successful run would need.
    pub fn check_exhaustive(&self, cap: Option<u128>) -> Result<CheckReport> {
        let cap = cap.unwrap_or(DEFAULT_SPACE_CAP);
        let start = Instant::now();

        let types: Vec<&Type> = self
            .nf
            .inputs
            .iter()
            .map(|(_, t)| t)
            .chain(self.nf.states.iter().map(|s| &s.ty))
            .collect();
        let mut space: u128 = 1;
        for ty in &types {
            space = ty
                .count()
                .and_then(|n| space.checked_mul(n))
                .ok_or_else(|| {
                    Error::Verify(
                        "assignment space does not fit in 128 bits; \
                         exhaustive checking is impossible at this width"
                            .into(),
                    )
                })?;
        }
        if space > cap {
            return Err(Error::Verify(format!(
                "assignment space has {space} points, over the cap of {cap}; \
                 exhaustive checking needs the cap raised to at least {space}"
            )));
        }

        let counts: Vec<u128> = types.iter().map(|t| t.count().unwrap()).collect();
        let n_in = self.nf.inputs.len();
        let mut digits = vec![0u128; types.len()];
        let mut vals: Vec<Value> =
            types.iter().map(|t| nth_value(t, 0)).collect::<Result<_>>()?;

        let mut trials: u64 = 0;
        loop {
            trials += 1;
            let (inputs, states) = vals.split_at(n_in);
            if !self.holds_on(inputs, states)? {
                let (inputs, states) = (inputs.to_vec(), states.to_vec());
                return self.violation(Method::Exhaustive, trials, start, inputs, states);
            }
            // odometer, first position fastest
            let mut pos = 0;
            loop {
                if pos == digits.len() {
                    return Ok(self.report(
                        Method::Exhaustive,
                        Verdict::Holds,
                        trials,
                        start,
                    ));
                }
                digits[pos] += 1;
                if digits[pos] < counts[pos] {
                    vals[pos] = nth_value(types[pos], digits[pos])?;
                    break;
                }
                digits[pos] = 0;
                vals[pos] = nth_value(types[pos], 0)?;
                pos += 1;
            }
        }
    }

    // ---- formal ----

    /// Emit the negated property as an SMT-LIB query at `smt_path` and, when
    /// a solver command is given, run it and map its answer back:
    /// `unsat` means the property holds, `sat` yields a counterexample
    /// decoded from the model and re-validated against the interpreter.
    /// With no solver the verdict is unknown and the file is the product.
    ///
    /// `solver` is a command template; every `{file}` becomes the query path
    /// (appended as a final argument if the template never mentions it). The
    /// template is split on whitespace. See [`discover_solver`].
    pub fn check_formal(
        &self,
        smt_path: &Path,
        solver: Option<&str>,
    ) -> Result<CheckReport> {
        let start = Instant::now();

        let mut model = symexec(&self.nf)?;
        let mut env: HashMap<String, smt::TermId> = HashMap::new();
        for (name, _, id) in model.inputs.iter().chain(model.states.iter()) {
            env.insert(name.clone(), *id);
        }
        // interning makes re-lowering the defs free: same terms, same ids
        for d in &self.nf.defs {
            let id = smt::lower(&mut model.pool, &env, &d.expr)?;
            env.insert(d.name.clone(), id);
        }
        let p = smt::lower(&mut model.pool, &env, &self.prop_expr)?;
        let not_p = model.pool.apply(OpCode::Not, vec![p])?;
        let text = emit_smtlib(&model, EmitMode::Assertion, Some(not_p))?;
        smt::check_smtlib(&text)?;
        write_file(smt_path, &text)?;

        let Some(template) = solver else {
            return Ok(CheckReport {
                circuit: self.nf.name.clone(),
                property: self.property.clone(),
                method: Method::Solver,
                verdict: Verdict::Unknown(
                    "no solver configured; run the emitted query manually".into(),
                ),
                trials: 0,
                duration: start.elapsed(),
                smt_file: Some(smt_path.to_path_buf()),
            });
        };

        let verdict = match run_solver(template, smt_path, SOLVER_TIMEOUT)? {
            SolverRun::SpawnFailed(why) => {
                Verdict::Unknown(format!("could not run `{template}`: {why}"))
            }
            SolverRun::TimedOut => Verdict::Unknown(format!(
                "solver exceeded {SOLVER_TIMEOUT:?} and was killed"
            )),
            SolverRun::Finished { stdout, stderr } => {
                match first_word(&stdout) {
                    Some("unsat") => Verdict::Holds,
                    Some("unknown") => {
                        Verdict::Unknown("solver answered unknown".into())
                    }
                    Some("sat") => {
                        let vals = self.solver_model(template, smt_path, &model)?;
                        let (inputs, states) =
                            vals.split_at(self.nf.inputs.len());
                        return self.violation(
                            Method::Solver,
                            0,
                            start,
                            inputs.to_vec(),
                            states.to_vec(),
                        )
                        .map(|mut r| {
                            r.smt_file = Some(smt_path.to_path_buf());
                            r
                        });
                    }
                    _ => Verdict::Unknown(format!(
                        "solver produced no verdict: {}",
                        diagnostic(&stdout, &stderr)
                    )),
                }
            }
        };
        Ok(CheckReport {
            circuit: self.nf.name.clone(),
            property: self.property.clone(),
            method: Method::Solver,
            verdict,
            trials: 0,
            duration: start.elapsed(),
            smt_file: Some(smt_path.to_path_buf()),
        })
    }

    /// After a `sat` answer: append `(get-model)` in a sibling file, run the
    /// solver again, and decode every declared symbol's value.
    fn solver_model(
        &self,
        template: &str,
        smt_path: &Path,
        model: &smt::SymbolicModel,
    ) -> Result<Vec<Value>> {
        let text = std::fs::read_to_string(smt_path)
            .map_err(|e| Error::Io { path: smt_path.display().to_string(), source: e })?;
        let model_path = smt_path.with_extension("model.smt2");
        write_file(&model_path, &format!("{text}(get-model)\n"))?;

        let run = run_solver(template, &model_path, SOLVER_TIMEOUT)?;
        let SolverRun::Finished { stdout, stderr } = run else {
            return Err(Error::Verify(
                "solver failed while producing the model".into(),
            ));
        };
        if first_word(&stdout) != Some("sat") {
            return Err(Error::Verify(format!(
                "solver contradicted itself on the model query: {}",
                diagnostic(&stdout, &stderr)
            )));
        }
        let body = stdout.trim_start().strip_prefix("sat").unwrap_or(&stdout);
        let forms = smt::parse_sexps(body)
            .map_err(|e| Error::Verify(format!("unparsable model: {e}")))?;
        let mut bound: HashMap<String, Value> = HashMap::new();
        for form in &forms {
            collect_model_values(form, &mut bound);
        }

        let syms = declaration_symbols(model);
        let types: Vec<&Type> = model
            .inputs
            .iter()
            .chain(model.states.iter())
            .map(|(_, t, _)| t)
            .collect();
        syms.iter()
            .zip(types)
            .map(|(sym, ty)| {
                // a symbol the model omits is a don't-care; any valid value do
                let v = match bound.get(sym) {
                    Some(v) => *v,
                    None => nth_value(ty, 0)?,
                };
                if v.sort() != ty.sort() {
                    return Err(Error::Verify(format!(
                        "model value for `{sym}` has sort {:?}, wanted {:?}",
                        v.sort(),
                        ty.sort()
                    )));
                }
                Ok(v)
            })
            .collect()
    }

    // ---- shared plumbing ----

    fn holds_on(&self, inputs: &[Value], states: &[Value]) -> Result<bool> {
        let (_, _, checks) = self.eval.step_with(inputs, states, &[&self.prop])?;
        Ok(checks[0].as_bit()?)
    }

    fn report(
        &self,
        method: Method,
        verdict: Verdict,
        trials: u64,
        start: Instant,
    ) -> CheckReport {
        CheckReport {
            circuit: self.nf.name.clone(),
            property: self.property.clone(),
            method,
            verdict,
            trials,
            duration: start.elapsed(),
            smt_file: None,
        }
    }

    /// Build a counterexample report — after re-checking that the assignment
    /// really violates the property, whatever method claimed it does.
    fn violation(
        &self,
        method: Method,
        trials: u64,
        start: Instant,
        inputs: Vec<Value>,
        states: Vec<Value>,
    ) -> Result<CheckReport> {
        if self.holds_on(&inputs, &states)? {
            return Err(Error::Verify(format!(
                "internal: `{}` reported a counterexample for `{}.{}` that \
                 does not violate the property",
                method, self.nf.name, self.property
            )));
        }
        let vals = self
            .nf
            .inputs
            .iter()
            .map(|(n, _)| n.clone())
            .chain(self.nf.states.iter().map(|s| s.name.clone()))
            .zip(inputs.into_iter().chain(states))
            .collect();
        Ok(self.report(method, Verdict::Counterexample(vals), trials, start))
    }
}

/// The solver command to use when none is given explicitly: the
/// `PEAKFORGE_SOLVER` environment variable if set, else `cvc5` if on PATH.
pub fn discover_solver() -> Option<String> {
    if let Ok(cmd) = std::env::var("PEAKFORGE_SOLVER") {
        if !cmd.trim().is_empty() {
            return Some(cmd);
        }
    }
    let probe = Command::new("cvc5")
        .arg("--version")
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status();
    match probe {
        Ok(s) if s.success() => Some("cvc5 --lang smt2 {file}".into()),
        _ => None,
    }
}

pub(crate) enum SolverRun {
    Finished { stdout: String, stderr: String },
    SpawnFailed(String),
    TimedOut,
}

/// Run a solver command template on a file, with a kill-after timeout.
/// Paths with whitespace are not supported (the template splits on it).
pub(crate) fn run_solver(
    template: &str,
    file: &Path,
    timeout: Duration,
) -> Result<SolverRun> {
    let path = file.display().to_string();
    let mut tokens: Vec<String> = template
        .split_whitespace()
        .map(|t| t.replace("{file}", &path))
        .collect();
    if tokens.is_empty() {
        return Ok(SolverRun::SpawnFailed("empty solver command".into()));
    }
    if !template.contains("{file}") {
        tokens.push(path);
    }

    let mut child = match Command::new(&tokens[0])
        .args(&tokens[1..])
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
    {
        Ok(c) => c,
        Err(e) => return Ok(SolverRun::SpawnFailed(e.to_string())),
    };
    // drain pipes on threads so a chatty solver can't deadlock the poll loop
    let mut out_pipe = child.stdout.take().expect("stdout piped");
    let mut err_pipe = child.stderr.take().expect("stderr piped");
    let out_thread = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = out_pipe.read_to_string(&mut s);
        s
    });
    let err_thread = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = err_pipe.read_to_string(&mut s);
        s
    });

    let started = Instant::now();
    let timed_out = loop {
        match child.try_wait() {
            Ok(Some(_)) => break false,
            Ok(None) if started.elapsed() > timeout => {
                let _ = child.kill();
                let _ = child.wait();
                break true;
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(10)),
            Err(e) => return Err(Error::Verify(format!("waiting on solver: {e}"))),
        }
    };
    let stdout = out_thread.join().unwrap_or_default();
    let stderr = err_thread.join().unwrap_or_default();
    if timed_out {
        return Ok(SolverRun::TimedOut);
    }
    Ok(SolverRun::Finished { stdout, stderr })
}

fn first_word(text: &str) -> Option<&str> {
    text.split_whitespace().next()
}

fn diagnostic(stdout: &str, stderr: &str) -> String {
    let pick = if stderr.trim().is_empty() { stdout } else { stderr };
    let line = pick.lines().find(|l| !l.trim().is_empty()).unwrap_or("(no output)");
    line.trim().chars().take(200).collect()
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

/// Gather `(define-fun sym () sort value)` bindings anywhere in a model
/// response, tolerating the wrapping shapes different solvers print.
pub(crate) fn collect_model_values(s: &Sexp, out: &mut HashMap<String, Value>) {
    if let Sexp::List(items) = s {
        if items.len() == 5 {
            if let (Sexp::Atom(head), Sexp::Atom(name)) = (&items[0], &items[1]) {
                if head == "define-fun" {
                    if let Some(v) = model_value(&items[4]) {
                        out.insert(name.clone(), v);
                    }
                    return;
                }
            }
        }
        for item in items {
            collect_model_values(item, out);
        }
    }
}

/// A concrete value in solver-model syntax: `true`/`false`, `#b...`,
/// `#x...`, or `(_ bvN width)`.
pub(crate) fn model_value(s: &Sexp) -> Option<Value> {
    match s {
        Sexp::Atom(a) if a == "true" => Some(Value::Bit(true)),
        Sexp::Atom(a) if a == "false" => Some(Value::Bit(false)),
        Sexp::Atom(a) => {
            if let Some(b) = a.strip_prefix("#b") {
                let bits = u128::from_str_radix(b, 2).ok()?;
                return Some(Value::Bv(BVValue::unsigned(bits, b.len() as u32).ok()?));
            }
            if let Some(h) = a.strip_prefix("#x") {
                let bits = u128::from_str_radix(h, 16).ok()?;
                let w = u32::try_from(h.len()).ok()?.checked_mul(4)?;
                return Some(Value::Bv(BVValue::unsigned(bits, w).ok()?));
            }
            None
        }
        Sexp::List(items) => {
            let [u, n, w] = items.as_slice() else { return None };
            if smt::atom(u).ok()? != "_" {
                return None;
            }
            let bits: u128 = smt::atom(n).ok()?.strip_prefix("bv")?.parse().ok()?;
            let width: u32 = smt::atom(w).ok()?.parse().ok()?;
            Some(Value::Bv(BVValue::unsigned(bits, width).ok()?))
        }
    }
}

/// Uniform sample of a type's values; algebraic types draw only valid
/// inhabitants.
fn sample_value(ty: &Type, rng: &mut ChaCha8Rng) -> Result<Value> {
    Ok(match ty {
        Type::Bit => Value::Bit(rng.gen()),
        Type::Bv { width, sign } => {
            let mask = if *width == 128 { u128::MAX } else { (1u128 << width) - 1 };
            Value::Bv(BVValue::new(rng.gen::<u128>() & mask, *width, *sign)?)
        }
        Type::Adt(t) => {
            let n = t.count().ok_or_else(|| {
                Error::Verify(format!("`{}` has too many values to sample", t.name))
            })?;
            Value::Bv(adt_encode(&adt_nth(t, rng.gen_range(0..n)))?)
        }
    })
}

/// The `i`-th value of a type, in the same enumeration order exhaustive
/// checking iterates.
fn nth_value(ty: &Type, i: u128) -> Result<Value> {
    Ok(match ty {
        Type::Bit => Value::Bit(i == 1),
        Type::Bv { width, sign } => Value::Bv(BVValue::new(i, *width, *sign)?),
        Type::Adt(t) => Value::Bv(adt_encode(&adt_nth(t, i))?),
    })
}
