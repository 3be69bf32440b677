//! Source printer. Emits canonical formatting with minimal parentheses;
//! `parse(print(parse(s)))` prints back byte-identically.

use super::ast::*;

pub fn print_unit(unit: &SourceUnit) -> String {
    let mut out = String::new();
    for (i, decl) in unit.decls.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        fmt_decl(&mut out, decl);
    }
    out
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    fmt_expr(&mut out, e, 0);
    out
}

pub fn print_type(ty: &TypeExpr) -> String {
    let mut out = String::new();
    fmt_type(&mut out, ty);
    out
}

fn fmt_decl(out: &mut String, decl: &Decl) {
    match decl {
        Decl::Const { name, value, .. } => {
            out.push_str(&format!("const {name} = {};\n", print_expr(value)));
        }
        Decl::TypeAlias { name, ty, .. } => {
            out.push_str(&format!("type {name} = {};\n", print_type(ty)));
        }
        Decl::Enum { name, variants, .. } => {
            out.push_str(&format!("enum {name} {{\n"));
            for (label, value) in variants {
                out.push_str(&format!("    {label} = {value},\n"));
            }
            out.push_str("}\n");
        }
        Decl::Product { name, fields, .. } => {
            out.push_str(&format!("product {name} {{\n"));
            for f in fields {
                out.push_str(&format!("    {}: {}", f.name, print_type(&f.ty)));
                if let Some((hi, lo)) = &f.range {
                    out.push_str(&format!(" @ [{}:{}]", print_expr(hi), print_expr(lo)));
                }
                out.push_str(",\n");
            }
            out.push_str("}\n");
        }
        Decl::Sum { name, variants, .. } => {
            out.push_str(&format!("sum {name} {{\n"));
            for (vname, ty) in variants {
                out.push_str(&format!("    {vname}: {},\n", print_type(ty)));
            }
            out.push_str("}\n");
        }
        Decl::Circuit(c) => fmt_circuit(out, c),
        Decl::Property(p) => {
            out.push_str(&format!("property {} on {} {{\n", p.name, p.circuit));
            out.push_str(&format!("    {}\n", print_expr(&p.expr)));
            out.push_str("}\n");
        }
    }
}

fn fmt_circuit(out: &mut String, c: &CircuitDef) {
    out.push_str(&format!("circuit {}(", c.name));
    for (i, (name, ty)) in c.inputs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&format!("{name}: {}", print_type(ty)));
    }
    out.push_str(&format!(") -> {} {{\n", print_type(&c.output)));
    for s in &c.states {
        out.push_str(&format!(
            "    state {} : {} = {};\n",
            s.name,
            print_type(&s.ty),
            print_expr(&s.reset)
        ));
    }
    for i in &c.insts {
        out.push_str(&format!("    inst {} : {};\n", i.name, i.circuit));
    }
    for stmt in &c.body {
        fmt_stmt(out, stmt, 1);
    }
    out.push_str("}\n");
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("    ");
    }
}

fn fmt_stmt(out: &mut String, stmt: &Stmt, indent: usize) {
    match &stmt.kind {
        StmtKind::Assign { name, value } => {
            pad(out, indent);
            out.push_str(&format!("{name} = {};\n", print_expr(value)));
        }
        StmtKind::Return(e) => {
            pad(out, indent);
            out.push_str(&format!("return {};\n", print_expr(e)));
        }
        StmtKind::If { cond, then_body, else_body } => {
            pad(out, indent);
            out.push_str(&format!("if {} {{\n", print_expr(cond)));
            fmt_branch_tail(out, then_body, else_body, indent, false);
        }
        StmtKind::StaticIf { cond, then_body, else_body } => {
            pad(out, indent);
            out.push_str(&format!("static if {} {{\n", print_expr(cond)));
            fmt_branch_tail(out, then_body, else_body, indent, true);
        }
        StmtKind::Unroll { var, items, body } => {
            pad(out, indent);
            let items: Vec<String> = items.iter().map(print_expr).collect();
            out.push_str(&format!("unroll {var} in [{}] {{\n", items.join(", ")));
            for s in body {
                fmt_stmt(out, s, indent + 1);
            }
            pad(out, indent);
            out.push_str("}\n");
        }
    }
}

fn fmt_branch_tail(
    out: &mut String,
    then_body: &[Stmt],
    else_body: &[Stmt],
    indent: usize,
    static_ctx: bool,
) {
    for s in then_body {
        fmt_stmt(out, s, indent + 1);
    }
    pad(out, indent);
    if else_body.is_empty() {
        out.push_str("}\n");
        return;
    }
    // `else if` chains stay flat
    if else_body.len() == 1 {
        let chains = match &else_body[0].kind {
            StmtKind::If { .. } => !static_ctx,
            StmtKind::StaticIf { .. } => static_ctx,
            _ => false,
        };
        if chains {
            out.push_str("} else ");
            let mut tail = String::new();
            fmt_stmt(&mut tail, &else_body[0], indent);
            // drop the indentation the nested statement printed for itself
            out.push_str(tail.trim_start());
            return;
        }
    }
    out.push_str("} else {\n");
    for s in else_body {
        fmt_stmt(out, s, indent + 1);
    }
    pad(out, indent);
    out.push_str("}\n");
}

/// Binding strength of a printed node; parentheses appear whenever a child
/// is looser than its context requires.
fn expr_prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) | ExprKind::Call(..) => 100,
        ExprKind::Dot(..) | ExprKind::Ite(..) | ExprKind::Index(..) | ExprKind::Slice(..) => 90,
        ExprKind::Unary(..) => 80,
        ExprKind::Ascribe(..) => 75,
        ExprKind::Binary(op, ..) => op.precedence(),
    }
}

fn fmt_expr(out: &mut String, e: &Expr, min_prec: u8) {
    let prec = expr_prec(e);
    let parens = prec < min_prec;
    if parens {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Int(v) => out.push_str(&v.to_string()),
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Var(name) => out.push_str(name),
        ExprKind::Call(name, args) => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                fmt_expr(out, a, 0);
            }
            out.push(')');
        }
        ExprKind::Dot(base, name) => {
            fmt_expr(out, base, 90);
            out.push('.');
            out.push_str(name);
        }
        ExprKind::Ite(c, t, f) => {
            fmt_expr(out, c, 90);
            out.push_str(".ite(");
            fmt_expr(out, t, 0);
            out.push_str(", ");
            fmt_expr(out, f, 0);
            out.push(')');
        }
        ExprKind::Index(base, idx) => {
            fmt_expr(out, base, 90);
            out.push('[');
            fmt_expr(out, idx, 0);
            out.push(']');
        }
        ExprKind::Slice(base, hi, lo) => {
            fmt_expr(out, base, 90);
            out.push('[');
            fmt_expr(out, hi, 0);
            out.push(':');
            fmt_expr(out, lo, 0);
            out.push(']');
        }
        ExprKind::Unary(op, inner) => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Flip => '~',
            });
            fmt_expr(out, inner, 80);
        }
        ExprKind::Ascribe(inner, ty) => {
            fmt_expr(out, inner, 75);
            out.push_str(" as ");
            fmt_type(out, ty);
        }
        ExprKind::Binary(op, lhs, rhs) => {
            // non-chainable comparisons need parens even at equal depth
            let lmin = if op.is_chainable() { prec } else { prec + 1 };
            fmt_expr(out, lhs, lmin);
            out.push_str(&format!(" {} ", op.symbol()));
            fmt_expr(out, rhs, prec + 1);
        }
    }
    if parens {
        out.push(')');
    }
}

fn fmt_type(out: &mut String, ty: &TypeExpr) {
    match ty {
        TypeExpr::Bit => out.push_str("bit"),
        TypeExpr::Bv { width, signed } => {
            out.push_str(if *signed { "sbv" } else { "bv" });
            out.push('[');
            fmt_expr(out, width, 0);
            out.push(']');
        }
        TypeExpr::Named(name) => out.push_str(name),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse;
    use super::*;
    use crate::error::Span;
    use proptest::prelude::*;

    fn canon(src: &str) -> String {
        print_unit(&parse(src).unwrap())
    }

    #[test]
    fn printing_is_a_fixpoint_on_a_full_unit() {
        let src = "\
const W = 8;
enum AluOp { ADD = 1, MUL = 0 }
type T = bv[W];

circuit ALU(op: AluOp, in_0: T, in_1: T) -> T {
    if op == AluOp.ADD {
        return in_0 + in_1;
    } else {
        return in_0 * in_1;
    }
}

circuit RegALU(op: AluOp, wr: bit, in_0: T) -> T {
    state reg_0 : T = 0;
    state reg_1 : T = 0;
    inst alu : ALU;
    if wr {
        reg_1 = in_0;
    }
    acc = alu(op, reg_0, reg_1);
    reg_0 = acc;
    return acc;
}

property acc_load on RegALU { next(reg_1) == in_0 }
";
        let once = canon(src);
        let twice = print_unit(&parse(&once).unwrap());
        assert_eq!(once, twice);
    }

    #[test]
    fn minimal_parentheses() {
        let cases = [
            ("(a + b) * c", "(a + b) * c"),
            ("a + (b * c)", "a + b * c"),
            ("(a < b) == c", "a < b == c"),
            ("(a == b) == c", "(a == b) == c"),
            ("-(a + b)", "-(a + b)"),
            ("(-a) + b", "-a + b"),
            ("(a + b) as bv[4]", "(a + b) as bv[4]"),
            ("a + (b as bv[4])", "a + b as bv[4]"),
            ("(c == 1).ite(a, b)", "(c == 1).ite(a, b)"),
            ("a - (b - c)", "a - (b - c)"),
            ("a - b - c", "a - b - c"),
        ];
        for (src, want) in cases {
            let unit = parse(&format!("const X = {src};")).unwrap();
            let printed = print_unit(&unit);
            assert_eq!(printed, format!("const X = {want};\n"), "input: {src}");
        }
    }

    const SP: Span = Span { line: 0, col: 0 };

    fn arb_name() -> impl Strategy<Value = String> {
        prop_oneof![Just("a"), Just("b"), Just("x_1"), Just("state")]
            .prop_map(str::to_string)
    }

    fn arb_type() -> impl Strategy<Value = TypeExpr> {
        prop_oneof![
            Just(TypeExpr::Bit),
            (1u128..=16, any::<bool>()).prop_map(|(w, signed)| TypeExpr::Bv {
                width: Box::new(Expr::int(w, SP)),
                signed,
            }),
            Just(TypeExpr::Named("T".to_string())),
        ]
    }

    fn arb_binop() -> impl Strategy<Value = BinOp> {
        use BinOp::*;
        prop_oneof![
            Just(Add), Just(Sub), Just(Mul), Just(Div), Just(Rem),
            Just(Shl), Just(Shr), Just(Lt), Just(Le), Just(Gt), Just(Ge),
            Just(Eq), Just(Ne), Just(And), Just(Xor), Just(Or),
        ]
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u128..10_000).prop_map(|v| Expr::int(v, SP)),
            arb_name().prop_map(|n| Expr::new(ExprKind::Var(n), SP)),
            any::<bool>().prop_map(|b| Expr::new(ExprKind::Bool(b), SP)),
        ];
        leaf.prop_recursive(4, 48, 3, |inner| {
            prop_oneof![
                (arb_binop(), inner.clone(), inner.clone()).prop_map(|(op, a, b)| {
                    Expr::new(ExprKind::Binary(op, Box::new(a), Box::new(b)), SP)
                }),
                (any::<bool>(), inner.clone()).prop_map(|(neg, e)| {
                    let op = if neg { UnOp::Neg } else { UnOp::Flip };
                    Expr::new(ExprKind::Unary(op, Box::new(e)), SP)
                }),
                (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, t, f)| {
                    Expr::new(ExprKind::Ite(Box::new(c), Box::new(t), Box::new(f)), SP)
                }),
                (inner.clone(), arb_name()).prop_map(|(e, n)| {
                    Expr::new(ExprKind::Dot(Box::new(e), n), SP)
                }),
                (inner.clone(), 0u128..16).prop_map(|(e, i)| {
                    Expr::new(
                        ExprKind::Index(Box::new(e), Box::new(Expr::int(i, SP))),
                        SP,
                    )
                }),
                (inner.clone(), 0u128..8, 8u128..16).prop_map(|(e, lo, hi)| {
                    Expr::new(
                        ExprKind::Slice(
                            Box::new(e),
                            Box::new(Expr::int(hi, SP)),
                            Box::new(Expr::int(lo, SP)),
                        ),
                        SP,
                    )
                }),
                (inner.clone(), arb_type()).prop_map(|(e, ty)| {
                    Expr::new(ExprKind::Ascribe(Box::new(e), ty), SP)
                }),
                (arb_name(), prop::collection::vec(inner, 0..3)).prop_map(|(n, args)| {
                    Expr::new(ExprKind::Call(n, args), SP)
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_print_fixpoint(e in arb_expr()) {
            let printed = format!("const X = {};", print_expr(&e));
            let reparsed = parse(&printed).unwrap_or_else(|err| {
                panic!("printed form failed to parse: {printed}\n{err}")
            });
            let reprinted = print_unit(&reparsed);
            prop_assert_eq!(format!("const X = {};\n", print_expr(&e)), reprinted);
        }
    }
}
