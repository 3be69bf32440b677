//! Command-line driver: every subcommand is a thin dispatcher into the
//! `peakforge` library.
//!
//! Exit codes: 0 success (property holds / all rules found), 1
//! counterexample or rule not found, 2 no verdict, 3 usage errors, 4 file
//! errors, 5 parse/type/elaboration errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use peakforge::adt::{adt_decode, adt_encode, AdtValue, Type};
use peakforge::bitvec::{BVValue, Sort, Value};
use peakforge::interp::{format_value, Evaluator};
use peakforge::normalize::NormalForm;
use peakforge::pipeline::Compilation;
use peakforge::rtl::RtlOptions;
use peakforge::synth::{
    builtin_op, render_table, suite_json, synth_suite, Binding, IrOpSpec, SuiteConfig,
    BUILTIN_OPS,
};
use peakforge::verify::{discover_solver, RandomPlan, Verdict};

#[derive(Parser)]
#[command(
    name = "peakforge",
    version,
    about = "Compile circuit specs to simulation, SMT-LIB, Verilog, and rewrite rules"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct SourceArgs {
    /// Circuit spec source file
    file: PathBuf,
    /// Override a top-level `const` (repeatable)
    #[arg(long = "define", value_name = "NAME=VALUE")]
    defines: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a circuit to synthesizable Verilog
    Compile {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long)]
        circuit: String,
        /// Write here instead of stdout
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Collapse single-use wires into their use site
        #[arg(long)]
        inline: bool,
        /// Emit CLK/ASYNCRESET ports even on stateless modules
        #[arg(long)]
        always_clk: bool,
        /// Make the asynchronous reset active-low
        #[arg(long)]
        reset_low: bool,
    },
    /// Print a circuit's normal form
    Normal {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long)]
        circuit: String,
    },
    /// Emit a circuit's transition function as SMT-LIB 2
    Smt {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long)]
        circuit: String,
        /// Write here instead of stdout
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Step a circuit over a JSON vector file, starting from reset
    Simulate {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long)]
        circuit: String,
        /// JSON array of cycles, each an object mapping input names to
        /// values (integers in encoded form; enum labels as strings)
        #[arg(long)]
        vectors: PathBuf,
        /// Machine-readable report
        #[arg(long)]
        json: bool,
    },
    /// Check a property by random testing, exhaustion, or a solver
    Check {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long)]
        property: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Random)]
        method: MethodArg,
        /// Random trials
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cycle instruction-typed inputs through every value while data
        /// stays random
        #[arg(long)]
        sweep_adts: bool,
        /// Cap on the exhaustive assignment space (default 2^24)
        #[arg(long)]
        cap: Option<u128>,
        /// Solver command template containing {file}
        /// (default: $PEAKFORGE_SOLVER, else a cvc5 probe)
        #[arg(long)]
        solver: Option<String>,
        /// Machine-readable report
        #[arg(long)]
        json: bool,
    },
    /// Synthesize rewrite rules mapping IR ops onto a circuit
    Synth {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long)]
        circuit: String,
        /// Comma-separated op names (add, sub, mul, and, or, xor, nand,
        /// nor, not, neg, shifts, comparisons)
        #[arg(long, value_delimiter = ',', required = true)]
        ops: Vec<String>,
        /// Re-elaborate with `const W = <N>` before synthesizing
        #[arg(long)]
        width: Option<u32>,
        /// Also check candidates exhaustively at this elaboration width
        #[arg(long)]
        verify_width: Option<u32>,
        /// Instruction field to leave universally bound, an immediate
        /// (repeatable)
        #[arg(long = "universal", value_name = "FIELD")]
        universal: Vec<String>,
        /// Wire operands to ports in declaration order instead of trying
        /// every permutation
        #[arg(long)]
        fixed_order: bool,
        /// Cap on enumerated candidate instructions (default 2^16)
        #[arg(long)]
        cap: Option<u128>,
        /// Ask an SMT solver instead of enumerating; emits exists-forall
        /// queries even when no solver is installed
        #[arg(long)]
        use_solver: bool,
        /// Solver command template containing {file}
        #[arg(long)]
        solver: Option<String>,
        /// Where solver queries are written (default: next to the source)
        #[arg(long)]
        query_dir: Option<PathBuf>,
        /// Machine-readable report
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Random,
    Exhaustive,
    Formal,
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure { code: 3, msg: msg.into() }
    }

    fn io(msg: impl Into<String>) -> Self {
        Failure { code: 4, msg: msg.into() }
    }
}

impl From<peakforge::Error> for Failure {
    fn from(e: peakforge::Error) -> Self {
        Failure { code: 5, msg: e.to_string() }
    }
}

type CliResult = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    match run(cli.cmd) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Cmd) -> CliResult {
    match cmd {
        Cmd::Compile { src, circuit, out, inline, always_clk, reset_low } => {
            let c = load(&src, &[])?;
            let opts = RtlOptions { always_clk, inline, reset_high: !reset_low };
            let text = c.verilog(&circuit, &opts)?;
            write_artifact(out.as_deref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Normal { src, circuit } => {
            let c = load(&src, &[])?;
            print!("{}", c.normal_form(&circuit)?.listing());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Smt { src, circuit, out } => {
            let c = load(&src, &[])?;
            let text = c.smtlib(&circuit)?;
            write_artifact(out.as_deref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Simulate { src, circuit, vectors, json } => simulate(&src, &circuit, &vectors, json),
        Cmd::Check { src, property, method, trials, seed, sweep_adts, cap, solver, json } => {
            check(&src, &property, method, trials, seed, sweep_adts, cap, solver, json)
        }
        Cmd::Synth {
            src,
            circuit,
            ops,
            width,
            verify_width,
            universal,
            fixed_order,
            cap,
            use_solver,
            solver,
            query_dir,
            json,
        } => synth(SynthTask {
            src,
            circuit,
            ops,
            width,
            verify_width,
            universal,
            fixed_order,
            cap,
            use_solver,
            solver,
            query_dir,
            json,
        }),
    }
}

fn load(src: &SourceArgs, extra_defines: &[(String, i128)]) -> Result<Compilation, Failure> {
    let text = std::fs::read_to_string(&src.file)
        .map_err(|e| Failure::io(format!("cannot read {}: {e}", src.file.display())))?;
    let mut defines = parse_defines(&src.defines)?;
    for (name, value) in extra_defines {
        defines.retain(|(n, _)| n != name);
        defines.push((name.clone(), *value));
    }
    Ok(Compilation::from_source(&text, &defines)?)
}

fn parse_defines(items: &[String]) -> Result<Vec<(String, i128)>, Failure> {
    items
        .iter()
        .map(|item| {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| Failure::usage(format!("--define takes NAME=VALUE, got `{item}`")))?;
            let value: i128 = value
                .trim()
                .parse()
                .map_err(|_| Failure::usage(format!("`{value}` is not an integer")))?;
            Ok((name.trim().to_string(), value))
        })
        .collect()
}

fn write_artifact(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---- simulate ----

fn simulate(src: &SourceArgs, circuit: &str, vectors: &Path, json: bool) -> CliResult {
    let c = load(src, &[])?;
    let nf = c.normal_form(circuit)?;
    let eval = Evaluator::new(&nf)?;
    let cycles = parse_vectors(vectors, &nf)?;
    let mut states: Vec<Value> = nf.states.iter().map(|s| s.reset).collect();
    let mut rows = Vec::new();
    for (i, inputs) in cycles.iter().enumerate() {
        let (out, next) = eval.step(inputs, &states)?;
        let out_text = format_value(&out, &nf.output_ty);
        let next_text: Vec<(String, String)> = nf
            .states
            .iter()
            .zip(&next)
            .map(|(s, v)| (s.name.clone(), format_value(v, &s.ty)))
            .collect();
        if json {
            let mut o = serde_json::Map::new();
            o.insert("cycle".into(), i.into());
            o.insert("out".into(), out_text.into());
            o.insert(
                "next".into(),
                next_text
                    .iter()
                    .map(|(n, v)| (n.clone(), serde_json::Value::from(v.clone())))
                    .collect::<serde_json::Map<_, _>>()
                    .into(),
            );
            rows.push(serde_json::Value::Object(o));
        } else {
            let regs: String =
                next_text.iter().map(|(n, v)| format!(" {n}<={v}")).collect();
            println!("{i}: out={out_text}{regs}");
        }
        states = next;
    }
    if json {
        println!("{}", serde_json::Value::Array(rows));
    }
    Ok(ExitCode::SUCCESS)
}

/// Read a JSON array of cycle objects into per-cycle input vectors in the
/// circuit's port order.
fn parse_vectors(path: &Path, nf: &NormalForm) -> Result<Vec<Vec<Value>>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))?;
    let parsed: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{} is not JSON: {e}", path.display())))?;
    let Some(cycles) = parsed.as_array() else {
        return Err(Failure::usage("the vector file must be a JSON array of cycles"));
    };
    cycles
        .iter()
        .enumerate()
        .map(|(i, cycle)| {
            let Some(entries) = cycle.as_object() else {
                return Err(Failure::usage(format!("cycle {i} is not an object")));
            };
            for key in entries.keys() {
                if !nf.inputs.iter().any(|(n, _)| n == key) {
                    return Err(Failure::usage(format!("cycle {i} sets unknown input `{key}`")));
                }
            }
            nf.inputs
                .iter()
                .map(|(name, ty)| {
                    let v = entries.get(name).ok_or_else(|| {
                        Failure::usage(format!("cycle {i} is missing input `{name}`"))
                    })?;
                    parse_input(v, ty).map_err(|m| {
                        Failure::usage(format!("cycle {i}, input `{name}`: {m}"))
                    })
                })
                .collect()
        })
        .collect()
}

fn parse_input(v: &serde_json::Value, ty: &Type) -> Result<Value, String> {
    if let Type::Bit = ty {
        return match v {
            serde_json::Value::Bool(b) => Ok(Value::Bit(*b)),
            serde_json::Value::Number(n) if n.as_u64() == Some(0) => Ok(Value::Bit(false)),
            serde_json::Value::Number(n) if n.as_u64() == Some(1) => Ok(Value::Bit(true)),
            _ => Err("expected true/false or 0/1".to_string()),
        };
    }
    let width = ty.encoded_width();
    let bits = match v {
        serde_json::Value::Number(n) => n
            .as_u64()
            .map(u128::from)
            .ok_or_else(|| "expected a non-negative integer".to_string())?,
        serde_json::Value::String(s) => {
            let Type::Adt(t) = ty else {
                return Err("only enum-typed inputs take string values".to_string());
            };
            let label = s.strip_prefix(&format!("{}.", t.name)).unwrap_or(s);
            let av = AdtValue::enum_label(t, label)
                .map_err(|_| format!("`{s}` is not a value of `{}`", t.name))?;
            return Ok(Value::Bv(adt_encode(&av).map_err(|e| e.to_string())?));
        }
        _ => return Err("expected an integer or an enum label".to_string()),
    };
    let bv = BVValue::unsigned(bits, width)
        .map_err(|_| format!("{bits} does not fit in {width} bits"))?;
    if let Type::Adt(t) = ty {
        adt_decode(t, &bv).map_err(|_| format!("{bits} is not a valid `{}` encoding", t.name))?;
    }
    Ok(Value::Bv(bv))
}

// ---- check ----

#[allow(clippy::too_many_arguments)]
fn check(
    src: &SourceArgs,
    property: &str,
    method: MethodArg,
    trials: u64,
    seed: u64,
    sweep_adts: bool,
    cap: Option<u128>,
    solver: Option<String>,
    json: bool,
) -> CliResult {
    let c = load(src, &[])?;
    let checker = c.checker(property)?;
    let report = match method {
        MethodArg::Random => {
            checker.check_random(&RandomPlan { trials, seed, sweep_adts })?
        }
        MethodArg::Exhaustive => checker.check_exhaustive(cap)?,
        MethodArg::Formal => {
            let stem = src.file.file_stem().unwrap_or_default().to_string_lossy();
            let smt_path = src.file.with_file_name(format!("{stem}.{property}.smt2"));
            let solver = solver.or_else(discover_solver);
            checker.check_formal(&smt_path, solver.as_deref())?
        }
    };
    if json {
        let mut o = serde_json::Map::new();
        o.insert("circuit".into(), report.circuit.clone().into());
        o.insert("property".into(), report.property.clone().into());
        o.insert("method".into(), report.method.to_string().into());
        o.insert("verdict".into(), report.verdict.word().into());
        if let Verdict::Counterexample(assignment) = &report.verdict {
            o.insert(
                "counterexample".into(),
                assignment
                    .iter()
                    .map(|(n, v)| (n.clone(), serde_json::Value::from(v.to_string())))
                    .collect::<serde_json::Map<_, _>>()
                    .into(),
            );
        }
        o.insert("trials".into(), report.trials.into());
        o.insert("millis".into(), (report.duration.as_millis() as u64).into());
        if let Some(p) = &report.smt_file {
            o.insert("smt_file".into(), p.display().to_string().into());
        }
        println!("{}", serde_json::Value::Object(o));
    } else {
        println!("{}", checker.render(&report));
    }
    let code = u8::try_from(report.verdict.exit_code()).expect("verdicts map to 0..=2");
    Ok(ExitCode::from(code))
}

// ---- synth ----

struct SynthTask {
    src: SourceArgs,
    circuit: String,
    ops: Vec<String>,
    width: Option<u32>,
    verify_width: Option<u32>,
    universal: Vec<String>,
    fixed_order: bool,
    cap: Option<u128>,
    use_solver: bool,
    solver: Option<String>,
    query_dir: Option<PathBuf>,
    json: bool,
}

fn synth(task: SynthTask) -> CliResult {
    let width_defines: Vec<(String, i128)> = task
        .width
        .map(|w| ("W".to_string(), i128::from(w)))
        .into_iter()
        .collect();
    let c = load(&task.src, &width_defines)?;
    let target = c.normal_form(&task.circuit)?;
    let op_width = data_width(&target).ok_or_else(|| {
        Failure::usage(format!("`{}` has no bitvector data port to bind operands to", task.circuit))
    })?;
    let specs: Vec<IrOpSpec> = task
        .ops
        .iter()
        .map(|name| {
            builtin_op(name, op_width).ok_or_else(|| {
                Failure::usage(format!(
                    "unknown op `{name}`; known ops: {}",
                    BUILTIN_OPS.join(", ")
                ))
            })
        })
        .collect::<Result<_, _>>()?;
    let verify_nf = match task.verify_width {
        Some(w) => {
            let small = load(&task.src, &[("W".to_string(), i128::from(w))])?;
            Some(small.normal_form(&task.circuit)?)
        }
        None => None,
    };
    let universal: Vec<&str> = task.universal.iter().map(|s| s.as_str()).collect();
    let solver_cmd = task.solver.clone().or_else(discover_solver);
    let query_dir = task.query_dir.clone().unwrap_or_else(|| {
        task.src.file.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
    });
    if task.use_solver {
        fs::create_dir_all(&query_dir)
            .map_err(|e| Failure::io(format!("cannot create {}: {e}", query_dir.display())))?;
    }
    let cfg = SuiteConfig {
        universal_fields: &universal,
        binding: if task.fixed_order { Binding::FixedOrder } else { Binding::AllPermutations },
        cap: task.cap,
        solver_dir: task.use_solver.then_some(query_dir.as_path()),
        solver: solver_cmd.as_deref(),
    };
    let entries = synth_suite(&specs, &target, verify_nf.as_ref(), &cfg);
    if task.json {
        println!("{}", suite_json(&entries));
    } else {
        print!("{}", render_table(&entries));
    }
    // solver mode without a verdict is unknown; otherwise a missing rule
    // means the op is not expressible on this circuit
    let unknown = task.use_solver && entries.iter().any(|e| !e.found && e.note.is_some());
    let missing = entries.iter().any(|e| !e.found);
    Ok(if unknown {
        ExitCode::from(2)
    } else if missing {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn data_width(nf: &NormalForm) -> Option<u32> {
    nf.inputs.iter().find_map(|(_, ty)| match ty {
        Type::Adt(_) => None,
        other => match other.sort() {
            Sort::Bv(w) => Some(w),
            Sort::Bit => None,
        },
    })
}
