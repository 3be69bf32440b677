//! Compile-time elaboration: evaluates `const` declarations (with optional
//! command-line overrides), substitutes them everywhere, splices `unroll`
//! bodies, resolves `static if`, and folds every type width to a literal.
//! The output contains no `const` declarations and no compile-time
//! statements.

use std::collections::HashMap;

use super::ast::*;
use crate::error::{Error, Result, Span};

/// Compile-time value: plain integers plus the booleans comparisons produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CVal {
    Int(i128),
    Bool(bool),
}

pub fn expand(unit: &SourceUnit, overrides: &[(String, i128)]) -> Result<SourceUnit> {
    let consts = eval_consts(unit, overrides)?;
    check_reserved_names(unit, &consts)?;

    let mut decls = Vec::new();
    for decl in &unit.decls {
        match decl {
            Decl::Const { .. } => {}
            Decl::TypeAlias { name, ty, span } => decls.push(Decl::TypeAlias {
                name: name.clone(),
                ty: rewrite_type(ty, &consts)?,
                span: *span,
            }),
            Decl::Enum { .. } => decls.push(decl.clone()),
            Decl::Product { name, fields, span } => {
                let mut out = Vec::new();
                for f in fields {
                    let range = match &f.range {
                        None => None,
                        Some((hi, lo)) => {
                            let hi = fold_to_literal(hi, &consts, "field range")?;
                            let lo = fold_to_literal(lo, &consts, "field range")?;
                            Some((hi, lo))
                        }
                    };
                    out.push(FieldDecl {
                        name: f.name.clone(),
                        ty: rewrite_type(&f.ty, &consts)?,
                        range,
                    });
                }
                decls.push(Decl::Product { name: name.clone(), fields: out, span: *span });
            }
            Decl::Sum { name, variants, span } => {
                let variants = variants
                    .iter()
                    .map(|(n, ty)| Ok((n.clone(), rewrite_type(ty, &consts)?)))
                    .collect::<Result<Vec<_>>>()?;
                decls.push(Decl::Sum { name: name.clone(), variants, span: *span });
            }
            Decl::Circuit(c) => {
                let inputs = c
                    .inputs
                    .iter()
                    .map(|(n, ty)| Ok((n.clone(), rewrite_type(ty, &consts)?)))
                    .collect::<Result<Vec<_>>>()?;
                let states = c
                    .states
                    .iter()
                    .map(|s| {
                        Ok(StateDecl {
                            name: s.name.clone(),
                            ty: rewrite_type(&s.ty, &consts)?,
                            reset: rewrite_expr(&s.reset, &consts)?,
                            span: s.span,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                // macro expansion first: once unroll variables are
                // substituted away, constant positions (bit indexes, slice
                // bounds) become closed and fold to literals
                let body = expand_stmts(c.body.clone(), &consts)?;
                let body = rewrite_stmts(&body, &consts)?;
                decls.push(Decl::Circuit(CircuitDef {
                    name: c.name.clone(),
                    states,
                    insts: c.insts.clone(),
                    inputs,
                    output: rewrite_type(&c.output, &consts)?,
                    body,
                    span: c.span,
                }));
            }
            Decl::Property(p) => decls.push(Decl::Property(PropertyDef {
                name: p.name.clone(),
                circuit: p.circuit.clone(),
                expr: rewrite_expr(&p.expr, &consts)?,
                span: p.span,
            })),
        }
    }
    Ok(SourceUnit { decls })
}

fn eval_consts(
    unit: &SourceUnit,
    overrides: &[(String, i128)],
) -> Result<HashMap<String, CVal>> {
    let mut consts = HashMap::new();
    for decl in &unit.decls {
        if let Decl::Const { name, value, span } = decl {
            if consts.contains_key(name) {
                return Err(Error::expand(*span, format!("duplicate constant `{name}`")));
            }
            let v = match overrides.iter().find(|(n, _)| n == name) {
                Some((_, ov)) => CVal::Int(*ov),
                None => eval_cexpr(value, &consts)?,
            };
            consts.insert(name.clone(), v);
        }
    }
    for (name, _) in overrides {
        if !consts.contains_key(name) {
            return Err(Error::expand(
                Span { line: 1, col: 1 },
                format!("override `{name}` does not match any declared constant"),
            ));
        }
    }
    Ok(consts)
}

fn check_reserved_names(unit: &SourceUnit, consts: &HashMap<String, CVal>) -> Result<()> {
    fn check_stmts(stmts: &[Stmt], consts: &HashMap<String, CVal>) -> Result<()> {
        for s in stmts {
            match &s.kind {
                StmtKind::Assign { name, .. } => {
                    if consts.contains_key(name) {
                        return Err(Error::expand(
                            s.span,
                            format!("`{name}` is a constant and cannot be assigned"),
                        ));
                    }
                }
                StmtKind::If { then_body, else_body, .. }
                | StmtKind::StaticIf { then_body, else_body, .. } => {
                    check_stmts(then_body, consts)?;
                    check_stmts(else_body, consts)?;
                }
                StmtKind::Unroll { var, body, .. } => {
                    if consts.contains_key(var) {
                        return Err(Error::expand(
                            s.span,
                            format!("`{var}` is a constant and cannot be an unroll variable"),
                        ));
                    }
                    check_stmts(body, consts)?;
                }
                StmtKind::Return(_) => {}
            }
        }
        Ok(())
    }

    for decl in &unit.decls {
        if let Decl::Circuit(c) = decl {
            for (name, _) in &c.inputs {
                if consts.contains_key(name) {
                    return Err(Error::expand(
                        c.span,
                        format!("input `{name}` collides with a constant"),
                    ));
                }
            }
            for s in &c.states {
                if consts.contains_key(&s.name) {
                    return Err(Error::expand(
                        s.span,
                        format!("state `{}` collides with a constant", s.name),
                    ));
                }
            }
            check_stmts(&c.body, consts)?;
        }
    }
    Ok(())
}

// ---- constant substitution and width folding ----

fn literal_of(v: CVal, span: Span) -> Expr {
    match v {
        CVal::Bool(b) => Expr::new(ExprKind::Bool(b), span),
        CVal::Int(v) if v >= 0 => Expr::int(v as u128, span),
        CVal::Int(v) => Expr::new(
            ExprKind::Unary(UnOp::Neg, Box::new(Expr::int(v.unsigned_abs(), span))),
            span,
        ),
    }
}

fn rewrite_expr(e: &Expr, consts: &HashMap<String, CVal>) -> Result<Expr> {
    let span = e.span;
    let kind = match &e.kind {
        ExprKind::Var(name) => match consts.get(name) {
            Some(v) => return Ok(literal_of(*v, span)),
            None => ExprKind::Var(name.clone()),
        },
        ExprKind::Int(v) => ExprKind::Int(*v),
        ExprKind::Bool(b) => ExprKind::Bool(*b),
        ExprKind::Dot(base, name) => {
            ExprKind::Dot(Box::new(rewrite_expr(base, consts)?), name.clone())
        }
        ExprKind::Ite(c, t, f) => ExprKind::Ite(
            Box::new(rewrite_expr(c, consts)?),
            Box::new(rewrite_expr(t, consts)?),
            Box::new(rewrite_expr(f, consts)?),
        ),
        ExprKind::Index(base, idx) => ExprKind::Index(
            Box::new(rewrite_expr(base, consts)?),
            Box::new(fold_to_literal(idx, consts, "bit index")?),
        ),
        ExprKind::Slice(base, hi, lo) => ExprKind::Slice(
            Box::new(rewrite_expr(base, consts)?),
            Box::new(fold_to_literal(hi, consts, "slice bound")?),
            Box::new(fold_to_literal(lo, consts, "slice bound")?),
        ),
        ExprKind::Unary(op, inner) => {
            ExprKind::Unary(*op, Box::new(rewrite_expr(inner, consts)?))
        }
        ExprKind::Binary(op, a, b) => ExprKind::Binary(
            *op,
            Box::new(rewrite_expr(a, consts)?),
            Box::new(rewrite_expr(b, consts)?),
        ),
        ExprKind::Call(name, args) => ExprKind::Call(
            name.clone(),
            args.iter()
                .map(|a| rewrite_expr(a, consts))
                .collect::<Result<Vec<_>>>()?,
        ),
        ExprKind::Ascribe(inner, ty) => ExprKind::Ascribe(
            Box::new(rewrite_expr(inner, consts)?),
            rewrite_type(ty, consts)?,
        ),
    };
    Ok(Expr::new(kind, span))
}

fn rewrite_type(ty: &TypeExpr, consts: &HashMap<String, CVal>) -> Result<TypeExpr> {
    match ty {
        TypeExpr::Bit => Ok(TypeExpr::Bit),
        TypeExpr::Named(n) => Ok(TypeExpr::Named(n.clone())),
        TypeExpr::Bv { width, signed } => {
            let span = width.span;
            let v = match eval_cexpr(&rewrite_expr(width, consts)?, consts)? {
                CVal::Int(v) => v,
                CVal::Bool(_) => {
                    return Err(Error::expand(span, "width must be an integer"))
                }
            };
            if !(1..=128).contains(&v) {
                return Err(Error::expand(
                    span,
                    format!("width must be between 1 and 128, got {v}"),
                ));
            }
            Ok(TypeExpr::Bv { width: Box::new(Expr::int(v as u128, span)), signed: *signed })
        }
    }
}

/// Fold a compile-time-constant position (slice bounds, bit indexes, field
/// ranges) all the way to a literal.
fn fold_to_literal(
    e: &Expr,
    consts: &HashMap<String, CVal>,
    what: &str,
) -> Result<Expr> {
    let rewritten = rewrite_expr(e, consts)?;
    match eval_cexpr(&rewritten, consts)? {
        CVal::Int(v) if v >= 0 => Ok(Expr::int(v as u128, e.span)),
        CVal::Int(v) => Err(Error::expand(
            e.span,
            format!("{what} must be non-negative, got {v}"),
        )),
        CVal::Bool(_) => Err(Error::expand(e.span, format!("{what} must be an integer"))),
    }
}

fn rewrite_stmts(stmts: &[Stmt], consts: &HashMap<String, CVal>) -> Result<Vec<Stmt>> {
    stmts
        .iter()
        .map(|s| {
            let kind = match &s.kind {
                StmtKind::Assign { name, value } => StmtKind::Assign {
                    name: name.clone(),
                    value: rewrite_expr(value, consts)?,
                },
                StmtKind::Return(e) => StmtKind::Return(rewrite_expr(e, consts)?),
                StmtKind::If { cond, then_body, else_body } => StmtKind::If {
                    cond: rewrite_expr(cond, consts)?,
                    then_body: rewrite_stmts(then_body, consts)?,
                    else_body: rewrite_stmts(else_body, consts)?,
                },
                StmtKind::StaticIf { .. } | StmtKind::Unroll { .. } => {
                    unreachable!("compile-time statements are gone after expansion")
                }
            };
            Ok(Stmt { kind, span: s.span })
        })
        .collect()
}

// ---- unroll / static-if expansion ----

fn expand_stmts(stmts: Vec<Stmt>, consts: &HashMap<String, CVal>) -> Result<Vec<Stmt>> {
    let mut out = Vec::new();
    for stmt in stmts {
        let span = stmt.span;
        match stmt.kind {
            StmtKind::Unroll { var, items, body } => {
                for item in &items {
                    validate_unroll_item(item)?;
                    let copy = subst_stmts(&body, &var, item);
                    out.extend(expand_stmts(copy, consts)?);
                }
            }
            StmtKind::StaticIf { cond, then_body, else_body } => {
                let taken = match eval_cexpr(&cond, consts)? {
                    CVal::Bool(b) => b,
                    CVal::Int(v) => v != 0,
                };
                let branch = if taken { then_body } else { else_body };
                out.extend(expand_stmts(branch, consts)?);
            }
            StmtKind::If { cond, then_body, else_body } => {
                out.push(Stmt {
                    kind: StmtKind::If {
                        cond,
                        then_body: expand_stmts(then_body, consts)?,
                        else_body: expand_stmts(else_body, consts)?,
                    },
                    span,
                });
            }
            other => out.push(Stmt { kind: other, span }),
        }
    }
    Ok(out)
}

fn validate_unroll_item(item: &Expr) -> Result<()> {
    fn is_path(e: &Expr) -> bool {
        match &e.kind {
            ExprKind::Var(_) => true,
            ExprKind::Dot(base, _) => is_path(base),
            _ => false,
        }
    }
    let ok = match &item.kind {
        ExprKind::Int(_) | ExprKind::Bool(_) => true,
        ExprKind::Unary(UnOp::Neg, inner) => matches!(inner.kind, ExprKind::Int(_)),
        _ => is_path(item),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::expand(
            item.span,
            "unroll items must be integer literals or names",
        ))
    }
}

fn subst_expr(e: &Expr, var: &str, item: &Expr) -> Expr {
    let span = e.span;
    let kind = match &e.kind {
        ExprKind::Var(name) if name == var => return Expr { span, ..item.clone() },
        ExprKind::Var(name) => ExprKind::Var(name.clone()),
        ExprKind::Int(v) => ExprKind::Int(*v),
        ExprKind::Bool(b) => ExprKind::Bool(*b),
        ExprKind::Dot(base, name) => {
            ExprKind::Dot(Box::new(subst_expr(base, var, item)), name.clone())
        }
        ExprKind::Ite(c, t, f) => ExprKind::Ite(
            Box::new(subst_expr(c, var, item)),
            Box::new(subst_expr(t, var, item)),
            Box::new(subst_expr(f, var, item)),
        ),
        ExprKind::Index(base, idx) => ExprKind::Index(
            Box::new(subst_expr(base, var, item)),
            Box::new(subst_expr(idx, var, item)),
        ),
        ExprKind::Slice(base, hi, lo) => ExprKind::Slice(
            Box::new(subst_expr(base, var, item)),
            Box::new(subst_expr(hi, var, item)),
            Box::new(subst_expr(lo, var, item)),
        ),
        ExprKind::Unary(op, inner) => {
            ExprKind::Unary(*op, Box::new(subst_expr(inner, var, item)))
        }
        ExprKind::Binary(op, a, b) => ExprKind::Binary(
            *op,
            Box::new(subst_expr(a, var, item)),
            Box::new(subst_expr(b, var, item)),
        ),
        ExprKind::Call(name, args) => ExprKind::Call(
            name.clone(),
            args.iter().map(|a| subst_expr(a, var, item)).collect(),
        ),
        ExprKind::Ascribe(inner, ty) => {
            ExprKind::Ascribe(Box::new(subst_expr(inner, var, item)), ty.clone())
        }
    };
    Expr::new(kind, span)
}

fn subst_stmts(stmts: &[Stmt], var: &str, item: &Expr) -> Vec<Stmt> {
    stmts
        .iter()
        .map(|s| {
            let kind = match &s.kind {
                StmtKind::Assign { name, value } => StmtKind::Assign {
                    name: name.clone(),
                    value: subst_expr(value, var, item),
                },
                StmtKind::Return(e) => StmtKind::Return(subst_expr(e, var, item)),
                StmtKind::If { cond, then_body, else_body } => StmtKind::If {
                    cond: subst_expr(cond, var, item),
                    then_body: subst_stmts(then_body, var, item),
                    else_body: subst_stmts(else_body, var, item),
                },
                StmtKind::StaticIf { cond, then_body, else_body } => StmtKind::StaticIf {
                    cond: subst_expr(cond, var, item),
                    then_body: subst_stmts(then_body, var, item),
                    else_body: subst_stmts(else_body, var, item),
                },
                StmtKind::Unroll { var: inner_var, items, body } => {
                    let items = items.iter().map(|i| subst_expr(i, var, item)).collect();
                    // an inner loop over the same name shadows the outer variable
                    let body = if inner_var == var {
                        body.clone()
                    } else {
                        subst_stmts(body, var, item)
                    };
                    StmtKind::Unroll { var: inner_var.clone(), items, body }
                }
            };
            Stmt { kind, span: s.span }
        })
        .collect()
}

// ---- compile-time integer evaluation ----

fn eval_cexpr(e: &Expr, consts: &HashMap<String, CVal>) -> Result<CVal> {
    let span = e.span;
    let int = |v: CVal| -> Result<i128> {
        match v {
            CVal::Int(v) => Ok(v),
            CVal::Bool(_) => Err(Error::expand(span, "expected an integer, got a boolean")),
        }
    };
    match &e.kind {
        ExprKind::Int(v) => {
            if *v > i128::MAX as u128 {
                return Err(Error::expand(
                    span,
                    "constant exceeds the compile-time integer range",
                ));
            }
            Ok(CVal::Int(*v as i128))
        }
        ExprKind::Bool(b) => Ok(CVal::Bool(*b)),
        ExprKind::Var(name) => consts.get(name).copied().ok_or_else(|| {
            Error::expand(span, format!("`{name}` is not a compile-time constant"))
        }),
        ExprKind::Unary(UnOp::Neg, inner) => {
            let v = int(eval_cexpr(inner, consts)?)?;
            v.checked_neg()
                .map(CVal::Int)
                .ok_or_else(|| Error::expand(span, "constant overflow"))
        }
        ExprKind::Unary(UnOp::Flip, inner) => match eval_cexpr(inner, consts)? {
            CVal::Bool(b) => Ok(CVal::Bool(!b)),
            CVal::Int(v) => Ok(CVal::Int(!v)),
        },
        ExprKind::Binary(op, a, b) => {
            let lhs = eval_cexpr(a, consts)?;
            let rhs = eval_cexpr(b, consts)?;
            use BinOp::*;
            let arith = |f: fn(i128, i128) -> Option<i128>| -> Result<CVal> {
                f(int(lhs)?, int(rhs)?)
                    .map(CVal::Int)
                    .ok_or_else(|| Error::expand(span, "constant overflow"))
            };
            match op {
                Add => arith(i128::checked_add),
                Sub => arith(i128::checked_sub),
                Mul => arith(i128::checked_mul),
                Div => {
                    if int(rhs)? == 0 {
                        return Err(Error::expand(span, "constant division by zero"));
                    }
                    arith(i128::checked_div)
                }
                Rem => {
                    if int(rhs)? == 0 {
                        return Err(Error::expand(span, "constant division by zero"));
                    }
                    arith(i128::checked_rem)
                }
                Shl | Shr => {
                    let sh = int(rhs)?;
                    if !(0..128).contains(&sh) {
                        return Err(Error::expand(span, "constant shift out of range"));
                    }
                    let l = int(lhs)?;
                    let r = if *op == Shl {
                        l.checked_shl(sh as u32)
                            .ok_or_else(|| Error::expand(span, "constant overflow"))?
                    } else {
                        l >> sh
                    };
                    Ok(CVal::Int(r))
                }
                Lt => Ok(CVal::Bool(int(lhs)? < int(rhs)?)),
                Le => Ok(CVal::Bool(int(lhs)? <= int(rhs)?)),
                Gt => Ok(CVal::Bool(int(lhs)? > int(rhs)?)),
                Ge => Ok(CVal::Bool(int(lhs)? >= int(rhs)?)),
                Eq | Ne => {
                    let same = match (lhs, rhs) {
                        (CVal::Int(x), CVal::Int(y)) => x == y,
                        (CVal::Bool(x), CVal::Bool(y)) => x == y,
                        _ => {
                            return Err(Error::expand(
                                span,
                                "cannot compare an integer with a boolean",
                            ))
                        }
                    };
                    Ok(CVal::Bool(if *op == Eq { same } else { !same }))
                }
                And | Or | Xor => match (lhs, rhs) {
                    (CVal::Bool(x), CVal::Bool(y)) => Ok(CVal::Bool(match op {
                        And => x & y,
                        Or => x | y,
                        _ => x ^ y,
                    })),
                    (CVal::Int(x), CVal::Int(y)) => Ok(CVal::Int(match op {
                        And => x & y,
                        Or => x | y,
                        _ => x ^ y,
                    })),
                    _ => Err(Error::expand(
                        span,
                        "cannot mix integers and booleans in a bitwise operation",
                    )),
                },
            }
        }
        ExprKind::Ascribe(inner, _) => eval_cexpr(inner, consts),
        _ => Err(Error::expand(
            span,
            "expression is not usable in a compile-time constant",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse;
    use super::super::pretty::print_unit;
    use super::*;

    fn expand_src(src: &str, overrides: &[(&str, i128)]) -> Result<SourceUnit> {
        let overrides: Vec<(String, i128)> =
            overrides.iter().map(|(n, v)| (n.to_string(), *v)).collect();
        expand(&parse(src).unwrap(), &overrides)
    }

    fn body(unit: &SourceUnit) -> &[Stmt] {
        for d in &unit.decls {
            if let Decl::Circuit(c) = d {
                return &c.body;
            }
        }
        panic!("no circuit")
    }

    #[test]
    fn constants_fold_into_widths_and_expressions() {
        let unit = expand_src(
            "const W = 8;\nconst W2 = W * 2;\n\
             circuit T(a: bv[W]) -> bv[W2] {\n    return zext(a, W2) + W;\n}",
            &[],
        )
        .unwrap();
        let Decl::Circuit(c) = &unit.decls[0] else { panic!() };
        let TypeExpr::Bv { width, .. } = &c.inputs[0].1 else { panic!() };
        assert_eq!(width.kind, ExprKind::Int(8));
        let TypeExpr::Bv { width, .. } = &c.output else { panic!() };
        assert_eq!(width.kind, ExprKind::Int(16));
        let printed = print_unit(&unit);
        assert!(printed.contains("return zext(a, 16) + 8;"), "{printed}");
    }

    #[test]
    fn overrides_replace_declared_values() {
        let unit = expand_src(
            "const W = 8;\nconst W2 = W * 2;\ncircuit T(a: bv[W]) -> bv[W2] {\n    return zext(a, W2);\n}",
            &[("W", 4)],
        )
        .unwrap();
        let Decl::Circuit(c) = &unit.decls[0] else { panic!() };
        let TypeExpr::Bv { width, .. } = &c.output else { panic!() };
        assert_eq!(width.kind, ExprKind::Int(8));
    }

    #[test]
    fn unknown_override_is_an_error() {
        let err = expand_src("const W = 8;\ncircuit T(a: bv[W]) -> bv[W] {\n    return a;\n}", &[("Q", 1)])
            .unwrap_err();
        assert!(err.to_string().contains("`Q`"), "{err}");
    }

    #[test]
    fn unroll_splices_one_copy_per_item() {
        let unit = expand_src(
            "circuit T(a: bv[4]) -> bv[4] {\n    acc = a;\n    unroll i in [1, 3, 9] {\n        acc = acc + i;\n    }\n    return acc;\n}",
            &[],
        )
        .unwrap();
        let b = body(&unit);
        assert_eq!(b.len(), 5);
        let adds: Vec<String> = b[1..4]
            .iter()
            .map(|s| match &s.kind {
                StmtKind::Assign { value, .. } => super::super::pretty::print_expr(value),
                _ => panic!(),
            })
            .collect();
        assert_eq!(adds, vec!["acc + 1", "acc + 3", "acc + 9"]);
    }

    #[test]
    fn nested_unroll_is_row_major() {
        let unit = expand_src(
            "circuit T(a: bv[4]) -> bv[4] {\n    acc = a;\n    unroll i in [0, 1] {\n        unroll j in [2, 3] {\n            acc = acc + i * j;\n        }\n    }\n    return acc;\n}",
            &[],
        )
        .unwrap();
        let b = body(&unit);
        let pairs: Vec<String> = b[1..5]
            .iter()
            .map(|s| match &s.kind {
                StmtKind::Assign { value, .. } => super::super::pretty::print_expr(value),
                _ => panic!(),
            })
            .collect();
        assert_eq!(
            pairs,
            vec!["acc + 0 * 2", "acc + 0 * 3", "acc + 1 * 2", "acc + 1 * 3"]
        );
    }

    #[test]
    fn unroll_over_names_substitutes_paths() {
        let unit = expand_src(
            "circuit T(in_1: bv[4], in_2: bv[4]) -> bv[4] {\n    acc = 0;\n    unroll x in [in_1, in_2] {\n        acc = acc + x;\n    }\n    return acc;\n}",
            &[],
        )
        .unwrap();
        let b = body(&unit);
        assert_eq!(b.len(), 4);
        let StmtKind::Assign { value, .. } = &b[1].kind else { panic!() };
        assert_eq!(super::super::pretty::print_expr(value), "acc + in_1");
    }

    #[test]
    fn static_if_selects_a_branch_at_compile_time() {
        let src = "const W = 8;\ncircuit T(a: bv[W]) -> bv[W] {\n    static if W > 4 {\n        return a + 1;\n    } else {\n        return a - 1;\n    }\n}";
        let unit = expand_src(src, &[]).unwrap();
        let b = body(&unit);
        assert_eq!(b.len(), 1);
        let StmtKind::Return(e) = &b[0].kind else { panic!() };
        assert_eq!(super::super::pretty::print_expr(e), "a + 1");

        let unit = expand_src(src, &[("W", 2)]).unwrap();
        let StmtKind::Return(e) = &body(&unit)[0].kind else { panic!() };
        assert_eq!(super::super::pretty::print_expr(e), "a - 1");
    }

    #[test]
    fn static_if_on_a_runtime_variable_is_an_error() {
        let err = expand_src(
            "circuit T(a: bv[4]) -> bv[4] {\n    static if a {\n        return 1;\n    }\n    return a;\n}",
            &[],
        )
        .unwrap_err();
        assert!(err.to_string().contains("not a compile-time constant"), "{err}");
    }

    #[test]
    fn inner_unroll_variable_shadows_outer() {
        let unit = expand_src(
            "circuit T(a: bv[4]) -> bv[4] {\n    acc = a;\n    unroll i in [1] {\n        unroll i in [5, 6] {\n            acc = acc + i;\n        }\n    }\n    return acc;\n}",
            &[],
        )
        .unwrap();
        let b = body(&unit);
        let StmtKind::Assign { value, .. } = &b[1].kind else { panic!() };
        assert_eq!(super::super::pretty::print_expr(value), "acc + 5");
    }

    #[test]
    fn assigning_a_constant_is_an_error() {
        let err = expand_src(
            "const W = 8;\ncircuit T(a: bv[W]) -> bv[W] {\n    W = a;\n    return a;\n}",
            &[],
        )
        .unwrap_err();
        assert!(err.to_string().contains("cannot be assigned"), "{err}");
    }

    #[test]
    fn width_bounds_are_checked() {
        assert!(expand_src("circuit T(a: bv[0]) -> bv[4] {\n    return 0;\n}", &[]).is_err());
        assert!(expand_src("circuit T(a: bv[129]) -> bv[4] {\n    return 0;\n}", &[]).is_err());
        let err = expand_src(
            "const W = 8;\ncircuit T(a: bv[W - 8]) -> bv[4] {\n    return 0;\n}",
            &[],
        )
        .unwrap_err();
        assert!(err.to_string().contains("between 1 and 128"), "{err}");
    }

    #[test]
    fn negative_constants_substitute_as_negations() {
        let unit = expand_src(
            "const M = 0 - 3;\ncircuit T(a: bv[4]) -> bv[4] {\n    return a + M;\n}",
            &[],
        )
        .unwrap();
        let StmtKind::Return(e) = &body(&unit)[0].kind else { panic!() };
        assert_eq!(super::super::pretty::print_expr(e), "a + -3");
    }

    #[test]
    fn unroll_variable_works_as_a_bit_index() {
        let unit = expand_src(
            "circuit T(a: bv[4]) -> bit {\n    p = a[0];\n    unroll i in [1, 2, 3] {\n        p = p ^ a[i];\n    }\n    return p;\n}",
            &[],
        )
        .unwrap();
        let b = body(&unit);
        let StmtKind::Assign { value, .. } = &b[3].kind else { panic!() };
        assert_eq!(super::super::pretty::print_expr(value), "p ^ a[3]");
    }

    #[test]
    fn slice_bounds_fold() {
        let unit = expand_src(
            "const W = 8;\ncircuit T(a: bv[W]) -> bv[4] {\n    return a[W - 1:W - 4] + a[W / 2];\n}",
            &[],
        )
        .unwrap();
        let StmtKind::Return(e) = &body(&unit)[0].kind else { panic!() };
        assert_eq!(super::super::pretty::print_expr(e), "a[7:4] + a[4]");
    }
}
