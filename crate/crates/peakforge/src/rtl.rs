//! Verilog-2001 emission. Every normal-form def becomes a named wire with a
//! declaration-time continuous assignment, so the module reads like the
//! normal-form listing; state elements become registers with an asynchronous
//! reset. Division and remainder are guarded so the emitted logic computes
//! the same total functions as the other backends.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::bitvec::{bv_apply, OpCode, Sort, Value};
use crate::error::{Error, Result};
use crate::normalize::{NfExpr, NormalForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortDir {
    Input,
    Output,
}

#[derive(Debug, Clone)]
pub struct Port {
    pub dir: PortDir,
    pub name: String,
    pub sort: Sort,
}

#[derive(Debug, Clone)]
pub struct Wire {
    pub name: String,
    pub sort: Sort,
    pub expr: String,
}

#[derive(Debug, Clone)]
pub struct RegBlock {
    pub name: String,
    pub sort: Sort,
    pub reset_value: String,
    pub next: String,
}

/// A structured module, ready to print: ports, single-driver wires, the
/// output assignment, and one register block per state element.
#[derive(Debug)]
pub struct RtlModule {
    pub name: String,
    pub ports: Vec<Port>,
    pub wires: Vec<Wire>,
    pub regs: Vec<RegBlock>,
    pub output_expr: String,
    pub reset_high: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct RtlOptions {
    /// Emit CLK/ASYNCRESET ports even on stateless modules.
    pub always_clk: bool,
    /// Collapse single-use wires into their use site.
    pub inline: bool,
    /// Active-high asynchronous reset (false = active-low).
    pub reset_high: bool,
}

impl Default for RtlOptions {
    fn default() -> Self {
        RtlOptions { always_clk: false, inline: false, reset_high: true }
    }
}

const KEYWORDS: &[&str] = &[
    "always", "and", "assign", "begin", "buf", "case", "casex", "casez",
    "default", "defparam", "else", "end", "endcase", "endfunction",
    "endgenerate", "endmodule", "for", "function", "generate", "genvar", "if",
    "initial", "inout", "input", "integer", "localparam", "module", "nand",
    "negedge", "nor", "not", "or", "output", "parameter", "posedge", "reg",
    "repeat", "signed", "unsigned", "wait", "while", "wire", "xnor", "xor",
];

/// Map a source name to a legal identifier: dots and other foreign
/// characters become `_`, keywords get a trailing `_`.
fn rtl_name(s: &str) -> String {
    let mut out: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if out.chars().next().is_none_or(|c| c.is_ascii_digit()) {
        out.insert(0, '_');
    }
    if KEYWORDS.contains(&out.as_str()) {
        out.push('_');
    }
    out
}

fn bit_text(b: bool) -> &'static str {
    if b { "1'b1" } else { "1'b0" }
}

fn value_text(v: &Value) -> String {
    match v {
        Value::Bit(b) => bit_text(*b).to_string(),
        Value::Bv(bv) => format!("{}'d{}", bv.width(), bv.bits()),
    }
}

fn all_ones(w: u32) -> u128 {
    if w == 128 { u128::MAX } else { (1u128 << w) - 1 }
}

struct Ctx<'a> {
    /// Source name → rendered reference (a final name, or folded-in text).
    env: HashMap<&'a str, String>,
    /// Source name → sort, for width-dependent templates.
    sorts: HashMap<&'a str, Sort>,
}

pub fn emit_verilog(nf: &NormalForm, opts: &RtlOptions) -> Result<String> {
    Ok(render(&build_module(nf, opts)?))
}

/// Structure a normal form as an RTL module: resolve names (erroring on
/// post-sanitization collisions), fold single-use wires if asked, render
/// every expression.
pub fn build_module(nf: &NormalForm, opts: &RtlOptions) -> Result<RtlModule> {
    let clocked = !nf.states.is_empty() || opts.always_clk;

    let mut names: HashMap<&str, String> = HashMap::new();
    let mut taken: BTreeSet<String> = BTreeSet::new();
    taken.insert("O".to_string());
    if clocked {
        taken.insert("CLK".to_string());
        taken.insert("ASYNCRESET".to_string());
    }
    {
        let mut claim = |src: &'_ str| -> Result<String> {
            let name = rtl_name(src);
            if !taken.insert(name.clone()) {
                return Err(Error::Emit(format!(
                    "`{src}` collides with another name as `{name}`"
                )));
            }
            Ok(name)
        };
        for (name, _) in &nf.inputs {
            let n = claim(name)?;
            names.insert(name, n);
        }
        for s in &nf.states {
            let n = claim(&s.name)?;
            names.insert(&s.name, n);
        }
        for d in &nf.defs {
            let n = claim(&d.name)?;
            names.insert(&d.name, n);
        }
    }

    // which defs could fold into their single use site
    let mut uses: HashMap<&str, u32> = HashMap::new();
    let mut needs_name: BTreeSet<&str> = BTreeSet::new();
    for d in &nf.defs {
        count_uses(&d.expr, &mut uses, &mut needs_name);
    }
    count_uses(&nf.output, &mut uses, &mut needs_name);
    for (_, e) in &nf.next {
        count_uses(e, &mut uses, &mut needs_name);
    }

    let mut ctx = Ctx { env: HashMap::new(), sorts: HashMap::new() };
    for (name, ty) in &nf.inputs {
        ctx.env.insert(name, names[name.as_str()].clone());
        ctx.sorts.insert(name, ty.sort());
    }
    for s in &nf.states {
        ctx.env.insert(&s.name, names[s.name.as_str()].clone());
        ctx.sorts.insert(&s.name, s.ty.sort());
    }

    let mut wires = Vec::new();
    for d in &nf.defs {
        let text = expr_text(&d.expr, &ctx)?;
        ctx.sorts.insert(&d.name, d.sort);
        let fold = opts.inline
            && uses.get(d.name.as_str()).copied().unwrap_or(0) == 1
            && !needs_name.contains(d.name.as_str());
        if fold {
            ctx.env.insert(&d.name, text);
        } else {
            wires.push(Wire {
                name: names[d.name.as_str()].clone(),
                sort: d.sort,
                expr: text,
            });
            ctx.env.insert(&d.name, names[d.name.as_str()].clone());
        }
    }
    let output_expr = expr_text(&nf.output, &ctx)?;
    let mut regs = Vec::new();
    for (s, (_, next)) in nf.states.iter().zip(&nf.next) {
        regs.push(RegBlock {
            name: names[s.name.as_str()].clone(),
            sort: s.ty.sort(),
            reset_value: value_text(&s.reset),
            next: expr_text(next, &ctx)?,
        });
    }

    let mut ports = Vec::new();
    if clocked {
        ports.push(Port { dir: PortDir::Input, name: "CLK".into(), sort: Sort::Bit });
        ports.push(Port {
            dir: PortDir::Input,
            name: "ASYNCRESET".into(),
            sort: Sort::Bit,
        });
    }
    for (name, ty) in &nf.inputs {
        ports.push(Port {
            dir: PortDir::Input,
            name: names[name.as_str()].clone(),
            sort: ty.sort(),
        });
    }
    ports.push(Port {
        dir: PortDir::Output,
        name: "O".into(),
        sort: nf.output_ty.sort(),
    });

    Ok(RtlModule {
        name: rtl_name(&nf.name),
        ports,
        wires,
        regs,
        output_expr,
        reset_high: opts.reset_high,
    })
}

/// Count name references and pin down names that must stay named because
/// they sit under a part-select or sign replication.
fn count_uses<'a>(
    e: &'a NfExpr,
    uses: &mut HashMap<&'a str, u32>,
    needs_name: &mut BTreeSet<&'a str>,
) {
    match e {
        NfExpr::Var(n) | NfExpr::StateEntry(n) => {
            *uses.entry(n).or_insert(0) += 1;
        }
        NfExpr::BitLit(_) | NfExpr::BvLit(_) => {}
        NfExpr::Op(op, args) => {
            if matches!(op, OpCode::Extract { .. } | OpCode::SignExtend { .. }) {
                if let NfExpr::Var(n) | NfExpr::StateEntry(n) = &args[0] {
                    needs_name.insert(n);
                }
            }
            for a in args {
                count_uses(a, uses, needs_name);
            }
        }
        NfExpr::Ite(c, t, f) => {
            count_uses(c, uses, needs_name);
            count_uses(t, uses, needs_name);
            count_uses(f, uses, needs_name);
        }
        NfExpr::BitIndex(b, _) => {
            if let NfExpr::Var(n) | NfExpr::StateEntry(n) = &**b {
                needs_name.insert(n);
            }
            count_uses(b, uses, needs_name);
        }
        NfExpr::CallSub { args, .. } => {
            for a in args {
                count_uses(a, uses, needs_name);
            }
        }
    }
}

/// Width of a normal-form operand (op operands are always leaves).
fn arg_width(e: &NfExpr, ctx: &Ctx) -> Result<u32> {
    let sort = match e {
        NfExpr::BvLit(v) => Sort::Bv(v.width()),
        NfExpr::BitLit(_) => Sort::Bit,
        NfExpr::Var(n) | NfExpr::StateEntry(n) => *ctx
            .sorts
            .get(n.as_str())
            .ok_or_else(|| Error::Emit(format!("`{n}` used before definition")))?,
        _ => {
            return Err(Error::Emit(
                "compound operand in normal form (internal)".into(),
            ))
        }
    };
    match sort {
        Sort::Bv(w) => Ok(w),
        Sort::Bit => Err(Error::Emit("bit operand where a vector is needed".into())),
    }
}

fn expr_text(e: &NfExpr, ctx: &Ctx) -> Result<String> {
    Ok(match e {
        NfExpr::Var(n) | NfExpr::StateEntry(n) => ctx
            .env
            .get(n.as_str())
            .ok_or_else(|| Error::Emit(format!("`{n}` used before definition")))?
            .clone(),
        NfExpr::BitLit(b) => bit_text(*b).to_string(),
        NfExpr::BvLit(v) => value_text(&Value::Bv(*v)),
        NfExpr::Op(op, args) => {
            // part-selects of literals fold to literals
            if matches!(
                op,
                OpCode::Extract { .. }
                    | OpCode::SignExtend { .. }
                    | OpCode::ZeroExtend { .. }
            ) {
                if let NfExpr::BvLit(v) = &args[0] {
                    let folded = bv_apply(*op, &[Value::Bv(*v)])?;
                    return Ok(value_text(&folded));
                }
            }
            op_text(*op, args, ctx)?
        }
        NfExpr::Ite(c, t, f) => format!(
            "({} ? {} : {})",
            expr_text(c, ctx)?,
            expr_text(t, ctx)?,
            expr_text(f, ctx)?
        ),
        NfExpr::BitIndex(b, i) => match &**b {
            NfExpr::BvLit(v) => bit_text((v.bits() >> i) & 1 == 1).to_string(),
            _ => format!("{}[{i}]", expr_text(b, ctx)?),
        },
        NfExpr::CallSub { inst, .. } => {
            return Err(Error::Emit(format!(
                "call to `{inst}` survived inlining (corrupt normal form)"
            )))
        }
    })
}

fn op_text(op: OpCode, args: &[NfExpr], ctx: &Ctx) -> Result<String> {
    use OpCode::*;
    let sub = |i: usize| -> Result<String> { expr_text(&args[i], ctx) };
    let bin =
        |sym: &str| -> Result<String> { Ok(format!("({} {sym} {})", sub(0)?, sub(1)?)) };
    let signed_bin = |sym: &str| -> Result<String> {
        Ok(format!("($signed({}) {sym} $signed({}))", sub(0)?, sub(1)?))
    };

    Ok(match op {
        BvAdd => bin("+")?,
        BvSub => bin("-")?,
        BvMul => bin("*")?,
        BvAnd | And => bin("&")?,
        BvOr | Or => bin("|")?,
        BvXor | Xor => bin("^")?,
        BvShl => bin("<<")?,
        BvLshr => bin(">>")?,
        BvAshr => format!("($signed({}) >>> {})", sub(0)?, sub(1)?),
        BvNeg => format!("(-{})", sub(0)?),
        BvNot | Not => format!("(~{})", sub(0)?),
        BvComp | Eq => bin("==")?,
        Neq => bin("!=")?,
        BvUlt => bin("<")?,
        BvUle => bin("<=")?,
        BvUgt => bin(">")?,
        BvUge => bin(">=")?,
        BvSlt => signed_bin("<")?,
        BvSle => signed_bin("<=")?,
        BvSgt => signed_bin(">")?,
        BvSge => signed_bin(">=")?,
        Concat => format!("{{{}, {}}}", sub(0)?, sub(1)?),
        Extract { hi, lo } => format!("{}[{hi}:{lo}]", sub(0)?),
        ZeroExtend { by } => format!("{{{{{by}{{1'b0}}}}, {}}}", sub(0)?),
        SignExtend { by } => {
            let a = sub(0)?;
            let msb = arg_width(&args[0], ctx)? - 1;
            format!("{{{{{by}{{{a}[{msb}]}}}}, {a}}}")
        }
        BvUdiv => {
            let (a, b) = (sub(0)?, sub(1)?);
            let w = arg_width(&args[0], ctx)?;
            format!("(({b} == {w}'d0) ? {w}'d{} : ({a} / {b}))", all_ones(w))
        }
        BvUrem => {
            let (a, b) = (sub(0)?, sub(1)?);
            let w = arg_width(&args[0], ctx)?;
            format!("(({b} == {w}'d0) ? {a} : ({a} % {b}))")
        }
        BvSdiv => {
            let (a, b) = (sub(0)?, sub(1)?);
            let w = arg_width(&args[0], ctx)?;
            format!(
                "(({b} == {w}'d0) ? (($signed({a}) < $signed({w}'d0)) ? {w}'d1 : {w}'d{}) : ($signed({a}) / $signed({b})))",
                all_ones(w)
            )
        }
        BvSrem => {
            let (a, b) = (sub(0)?, sub(1)?);
            let w = arg_width(&args[0], ctx)?;
            format!("(({b} == {w}'d0) ? {a} : ($signed({a}) % $signed({b})))")
        }
    })
}

fn range_text(sort: Sort) -> String {
    match sort {
        Sort::Bit => String::new(),
        Sort::Bv(w) => format!("[{}:0] ", w - 1),
    }
}

pub fn render(m: &RtlModule) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "module {}(", m.name);
    for (i, p) in m.ports.iter().enumerate() {
        let dir = match p.dir {
            PortDir::Input => "input",
            PortDir::Output => "output",
        };
        let comma = if i + 1 == m.ports.len() { "" } else { "," };
        let _ = writeln!(t, "  {dir} {}{}{comma}", range_text(p.sort), p.name);
    }
    let _ = writeln!(t, ");");
    for r in &m.regs {
        let _ = writeln!(t, "  reg {}{};", range_text(r.sort), r.name);
    }
    for w in &m.wires {
        let _ = writeln!(t, "  wire {}{} = {};", range_text(w.sort), w.name, w.expr);
    }
    let _ = writeln!(t, "  assign O = {};", m.output_expr);
    for r in &m.regs {
        let edge = if m.reset_high { "posedge" } else { "negedge" };
        let cond = if m.reset_high { "ASYNCRESET" } else { "!ASYNCRESET" };
        let _ = writeln!(t, "  always @(posedge CLK or {edge} ASYNCRESET) begin");
        let _ = writeln!(t, "    if ({cond}) begin");
        let _ = writeln!(t, "      {} <= {};", r.name, r.reset_value);
        let _ = writeln!(t, "    end else begin");
        let _ = writeln!(t, "      {} <= {};", r.name, r.next);
        let _ = writeln!(t, "    end");
        let _ = writeln!(t, "  end");
    }
    let _ = writeln!(t, "endmodule");
    t
}

// ---- lint ----

#[derive(Debug, PartialEq)]
enum Tok {
    Id(String),
    /// Bare decimal literal.
    Num(String),
    /// Width-annotated literal like `8'd255`.
    Based(String),
    Sym(char),
}

fn tokenize(text: &str) -> Vec<Tok> {
    let mut toks = Vec::new();
    let bytes: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '/' && bytes.get(i + 1) == Some(&'/') {
            while i < bytes.len() && bytes[i] != '\n' {
                i += 1;
            }
        } else if c.is_ascii_alphabetic() || c == '_' || c == '$' {
            let start = i;
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_' || bytes[i] == '$')
            {
                i += 1;
            }
            toks.push(Tok::Id(bytes[start..i].iter().collect()));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if bytes.get(i) == Some(&'\'') {
                i += 1; // '
                i += 1; // base letter
                while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                toks.push(Tok::Based(bytes[start..i].iter().collect()));
            } else {
                toks.push(Tok::Num(bytes[start..i].iter().collect()));
            }
        } else {
            toks.push(Tok::Sym(c));
            i += 1;
        }
    }
    toks
}

/// Structural checks on emitted text: balanced nesting, every identifier
/// declared before use, single-driver wires, width-annotated literals.
/// Diagnostics are data; an empty vector means clean. When an external
/// Verilog front end is installed its complaints are appended, and its
/// absence is silently fine.
pub fn lint_emitted(text: &str) -> Vec<String> {
    let mut diags = internal_lint(text);
    if let Some(mut ext) = external_lint(text) {
        diags.append(&mut ext);
    }
    diags
}

fn internal_lint(text: &str) -> Vec<String> {
    let toks = tokenize(text);
    let mut diags = Vec::new();

    // nesting balance
    let mut parens = 0i64;
    let mut brackets = 0i64;
    let mut braces = 0i64;
    let mut begins = 0i64;
    let mut modules = 0i64;
    for t in &toks {
        match t {
            Tok::Sym('(') => parens += 1,
            Tok::Sym(')') => parens -= 1,
            Tok::Sym('[') => brackets += 1,
            Tok::Sym(']') => brackets -= 1,
            Tok::Sym('{') => braces += 1,
            Tok::Sym('}') => braces -= 1,
            Tok::Id(w) if w == "begin" => begins += 1,
            Tok::Id(w) if w == "end" => begins -= 1,
            Tok::Id(w) if w == "module" => modules += 1,
            Tok::Id(w) if w == "endmodule" => modules -= 1,
            _ => {}
        }
    }
    for (count, what) in [
        (parens, "parentheses"),
        (brackets, "brackets"),
        (braces, "braces"),
        (begins, "begin/end"),
        (modules, "module/endmodule"),
    ] {
        if count != 0 {
            diags.push(format!("unbalanced {what}"));
        }
    }

    // declarations: name → index where it becomes usable
    let mut declared: HashMap<String, usize> = HashMap::new();
    let mut decl_tokens: BTreeSet<usize> = BTreeSet::new();
    let mut inputs: BTreeSet<String> = BTreeSet::new();
    let mut drives: HashMap<String, u32> = HashMap::new();
    let mut regs: BTreeSet<String> = BTreeSet::new();
    let semi_after = |from: usize| -> usize {
        (from..toks.len())
            .find(|&j| toks[j] == Tok::Sym(';'))
            .unwrap_or(toks.len())
    };
    let mut i = 0;
    while i < toks.len() {
        if let Tok::Id(w) = &toks[i] {
            match w.as_str() {
                "module" => {
                    if let Some(Tok::Id(_)) = toks.get(i + 1) {
                        decl_tokens.insert(i + 1);
                    }
                }
                "input" | "output" | "wire" | "reg" => {
                    let kind = w.clone();
                    let mut j = i + 1;
                    if toks.get(j) == Some(&Tok::Sym('[')) {
                        while j < toks.len() && toks[j] != Tok::Sym(']') {
                            j += 1;
                        }
                        j += 1;
                    }
                    if let Some(Tok::Id(name)) = toks.get(j) {
                        decl_tokens.insert(j);
                        let end = match kind.as_str() {
                            // a port is usable immediately
                            "input" | "output" => j,
                            // wires/regs only after their statement closes
                            _ => semi_after(j),
                        };
                        if declared.insert(name.clone(), end).is_some() {
                            diags.push(format!("`{name}` declared twice"));
                        }
                        match kind.as_str() {
                            "input" => {
                                inputs.insert(name.clone());
                            }
                            "reg" => {
                                regs.insert(name.clone());
                            }
                            "wire" => {
                                let init = (j..semi_after(j))
                                    .any(|k| toks[k] == Tok::Sym('='));
                                drives.insert(name.clone(), init as u32);
                            }
                            "output" => {
                                drives.insert(name.clone(), 0);
                            }
                            _ => {}
                        }
                    }
                }
                "assign" => {
                    if let Some(Tok::Id(name)) = toks.get(i + 1) {
                        if inputs.contains(name) {
                            diags.push(format!("`{name}` is an input but is driven"));
                        }
                        *drives.entry(name.clone()).or_insert(0) += 1;
                    }
                }
                _ => {}
            }
        }
        i += 1;
    }

    // nonblocking drives: `name <=` at statement starts inside always blocks
    for i in 0..toks.len() {
        if let Tok::Id(name) = &toks[i] {
            let at_stmt_start = i == 0
                || matches!(&toks[i - 1], Tok::Sym(';'))
                || matches!(&toks[i - 1], Tok::Id(w) if w == "begin" || w == "end" || w == "else");
            if at_stmt_start
                && toks.get(i + 1) == Some(&Tok::Sym('<'))
                && toks.get(i + 2) == Some(&Tok::Sym('='))
            {
                if regs.contains(name) {
                    *drives.entry(name.clone()).or_insert(0) += 1;
                } else if declared.contains_key(name) {
                    diags.push(format!("`{name}` gets a nonblocking drive but is not a reg"));
                }
            }
        }
    }

    // identifier uses
    for (i, t) in toks.iter().enumerate() {
        if let Tok::Id(name) = t {
            if decl_tokens.contains(&i)
                || KEYWORDS.contains(&name.as_str())
                || name.starts_with('$')
            {
                continue;
            }
            match declared.get(name) {
                None => diags.push(format!("`{name}` used before declaration")),
                Some(&end) if i < end => {
                    diags.push(format!("`{name}` used before declaration"))
                }
                _ => {}
            }
        }
    }

    // drive counts
    for (name, count) in &drives {
        if regs.contains(name) || inputs.contains(name) {
            continue;
        }
        match count {
            0 => diags.push(format!("`{name}` is never driven")),
            1 => {}
            _ => diags.push(format!("`{name}` is driven more than once")),
        }
    }
    for name in &regs {
        if drives.get(name).copied().unwrap_or(0) == 0 {
            diags.push(format!("`{name}` is never driven"));
        }
    }

    // bare literals are only legal inside ranges/indexes or as replication
    // counts
    let mut depth = 0i64;
    for (i, t) in toks.iter().enumerate() {
        match t {
            Tok::Sym('[') => depth += 1,
            Tok::Sym(']') => depth -= 1,
            Tok::Num(n) => {
                let replication = toks.get(i + 1) == Some(&Tok::Sym('{'));
                if depth == 0 && !replication {
                    diags.push(format!("unsized literal `{n}`"));
                }
            }
            _ => {}
        }
    }

    diags
}

/// Run an installed Verilog front end over the text, if one exists.
/// `None` means no tool was found; diagnostics otherwise.
fn external_lint(text: &str) -> Option<Vec<String>> {
    use std::process::Command;
    use std::sync::atomic::{AtomicU64, Ordering};
    static SEQ: AtomicU64 = AtomicU64::new(0);

    let candidates: [(&str, &[&str]); 2] =
        [("iverilog", &["-t", "null"]), ("verilator", &["--lint-only", "-Wno-DECLFILENAME"])];
    for (tool, args) in candidates {
        let probe = Command::new(tool).arg("--version").output();
        let available = match probe {
            Ok(_) => true,
            Err(_) => Command::new(tool).arg("-V").output().is_ok(),
        };
        if !available {
            continue;
        }
        let path = std::env::temp_dir().join(format!(
            "pf-lint-{}-{}.v",
            std::process::id(),
            SEQ.fetch_add(1, Ordering::Relaxed)
        ));
        if std::fs::write(&path, text).is_err() {
            return None;
        }
        let out = Command::new(tool).args(args).arg(&path).output();
        let _ = std::fs::remove_file(&path);
        let out = out.ok()?;
        let mut diags: Vec<String> = String::from_utf8_lossy(&out.stderr)
            .lines()
            .filter(|l| l.contains("error") || l.contains("Error"))
            .map(|l| format!("{tool}: {l}"))
            .collect();
        if !out.status.success() && diags.is_empty() {
            diags.push(format!("{tool}: exited with {}", out.status));
        }
        return Some(diags);
    }
    None
}
