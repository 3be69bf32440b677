//! Recursive-descent parser.
//!
//! Precedence, loosest to tightest:
//! `|`, `^`, `&`, `==`/`!=`, `<`/`<=`/`>`/`>=`, `<<`/`>>`, `+`/`-`,
//! `*`/`/`/`%`, `as`, unary `-`/`~`, postfix (`.`, `[..]`, calls).
//! Comparisons don't chain: `a < b < c` is a syntax error.

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use crate::error::{Error, Result, Span};

pub fn parse(src: &str) -> Result<SourceUnit> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let unit = p.unit()?;
    Ok(unit)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<Span> {
        if self.at(&t) {
            Ok(self.next().span)
        } else {
            Err(Error::syntax(
                self.span(),
                format!("expected {}, found {}", t.describe(), self.peek().describe()),
            ))
        }
    }

    fn ident(&mut self) -> Result<(String, Span)> {
        match self.peek() {
            Tok::Ident(_) => {
                let t = self.next();
                let Tok::Ident(name) = t.tok else { unreachable!() };
                Ok((name, t.span))
            }
            other => Err(Error::syntax(
                self.span(),
                format!("expected identifier, found {}", other.describe()),
            )),
        }
    }

    fn int(&mut self) -> Result<(u128, Span)> {
        match self.peek() {
            Tok::Int(_) => {
                let t = self.next();
                let Tok::Int(v) = t.tok else { unreachable!() };
                Ok((v, t.span))
            }
            other => Err(Error::syntax(
                self.span(),
                format!("expected integer, found {}", other.describe()),
            )),
        }
    }

    // ---- declarations ----

    fn unit(&mut self) -> Result<SourceUnit> {
        let mut decls = Vec::new();
        while !self.at(&Tok::Eof) {
            decls.push(self.decl()?);
        }
        Ok(SourceUnit { decls })
    }

    fn decl(&mut self) -> Result<Decl> {
        let span = self.span();
        match self.peek() {
            Tok::Const => {
                self.next();
                let (name, _) = self.ident()?;
                self.expect(Tok::Assign)?;
                let value = self.expr()?;
                self.expect(Tok::Semi)?;
                Ok(Decl::Const { name, value, span })
            }
            Tok::Type => {
                self.next();
                let (name, _) = self.ident()?;
                self.expect(Tok::Assign)?;
                let ty = self.type_expr()?;
                self.expect(Tok::Semi)?;
                Ok(Decl::TypeAlias { name, ty, span })
            }
            Tok::Enum => {
                self.next();
                let (name, _) = self.ident()?;
                self.expect(Tok::LBrace)?;
                let mut variants = Vec::new();
                while !self.at(&Tok::RBrace) {
                    let (label, _) = self.ident()?;
                    self.expect(Tok::Assign)?;
                    let (value, _) = self.int()?;
                    variants.push((label, value));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                Ok(Decl::Enum { name, variants, span })
            }
            Tok::Product => {
                self.next();
                let (name, _) = self.ident()?;
                self.expect(Tok::LBrace)?;
                let mut fields = Vec::new();
                while !self.at(&Tok::RBrace) {
                    let (fname, _) = self.ident()?;
                    self.expect(Tok::Colon)?;
                    let ty = self.type_expr()?;
                    let range = if self.eat(&Tok::At) {
                        self.expect(Tok::LBracket)?;
                        let hi = self.expr()?;
                        self.expect(Tok::Colon)?;
                        let lo = self.expr()?;
                        self.expect(Tok::RBracket)?;
                        Some((hi, lo))
                    } else {
                        None
                    };
                    fields.push(FieldDecl { name: fname, ty, range });
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                Ok(Decl::Product { name, fields, span })
            }
            Tok::Sum => {
                self.next();
                let (name, _) = self.ident()?;
                self.expect(Tok::LBrace)?;
                let mut variants = Vec::new();
                while !self.at(&Tok::RBrace) {
                    let (vname, _) = self.ident()?;
                    self.expect(Tok::Colon)?;
                    let ty = self.type_expr()?;
                    variants.push((vname, ty));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                Ok(Decl::Sum { name, variants, span })
            }
            Tok::Circuit => self.circuit().map(Decl::Circuit),
            Tok::Property => {
                self.next();
                let (name, _) = self.ident()?;
                self.expect(Tok::On)?;
                let (circuit, _) = self.ident()?;
                self.expect(Tok::LBrace)?;
                let expr = self.expr()?;
                self.expect(Tok::RBrace)?;
                Ok(Decl::Property(PropertyDef { name, circuit, expr, span }))
            }
            other => Err(Error::syntax(
                span,
                format!("expected a declaration, found {}", other.describe()),
            )),
        }
    }

    fn circuit(&mut self) -> Result<CircuitDef> {
        let span = self.expect(Tok::Circuit)?;
        let (name, _) = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut inputs = Vec::new();
        while !self.at(&Tok::RParen) {
            let (pname, _) = self.ident()?;
            self.expect(Tok::Colon)?;
            let ty = self.type_expr()?;
            inputs.push((pname, ty));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Arrow)?;
        let output = self.type_expr()?;
        self.expect(Tok::LBrace)?;

        // `state` is only a keyword here, where an identifier follows it;
        // `state = e;` further down is an ordinary assignment.
        let mut states = Vec::new();
        let mut insts = Vec::new();
        loop {
            if self.at(&Tok::Inst) {
                let ispan = self.next().span;
                let (iname, _) = self.ident()?;
                self.expect(Tok::Colon)?;
                let (cname, _) = self.ident()?;
                self.expect(Tok::Semi)?;
                insts.push(InstDecl { name: iname, circuit: cname, span: ispan });
            } else if matches!(self.peek(), Tok::Ident(w) if w == "state")
                && matches!(self.peek2(), Tok::Ident(_))
            {
                let sspan = self.next().span;
                let (sname, _) = self.ident()?;
                self.expect(Tok::Colon)?;
                let ty = self.type_expr()?;
                self.expect(Tok::Assign)?;
                let reset = self.expr()?;
                self.expect(Tok::Semi)?;
                states.push(StateDecl { name: sname, ty, reset, span: sspan });
            } else {
                break;
            }
        }

        let mut body = Vec::new();
        while !self.at(&Tok::RBrace) {
            body.push(self.stmt()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(CircuitDef { name, states, insts, inputs, output, body, span })
    }

    fn type_expr(&mut self) -> Result<TypeExpr> {
        match self.peek() {
            Tok::Bit => {
                self.next();
                Ok(TypeExpr::Bit)
            }
            Tok::Bv | Tok::Sbv => {
                let signed = self.at(&Tok::Sbv);
                self.next();
                self.expect(Tok::LBracket)?;
                let width = self.expr()?;
                self.expect(Tok::RBracket)?;
                Ok(TypeExpr::Bv { width: Box::new(width), signed })
            }
            Tok::Ident(_) => {
                let (name, _) = self.ident()?;
                Ok(TypeExpr::Named(name))
            }
            other => Err(Error::syntax(
                self.span(),
                format!("expected a type, found {}", other.describe()),
            )),
        }
    }

    // ---- statements ----

    fn block(&mut self) -> Result<Vec<Stmt>> {
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while !self.at(&Tok::RBrace) {
            stmts.push(self.stmt()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(stmts)
    }

    fn stmt(&mut self) -> Result<Stmt> {
        let span = self.span();
        match self.peek() {
            Tok::Return => {
                self.next();
                let e = self.expr()?;
                self.expect(Tok::Semi)?;
                Ok(Stmt { kind: StmtKind::Return(e), span })
            }
            Tok::If => {
                let (cond, then_body, else_body) = self.if_tail()?;
                Ok(Stmt { kind: StmtKind::If { cond, then_body, else_body }, span })
            }
            Tok::Static => {
                self.next();
                self.expect(Tok::If)?;
                let cond = self.expr()?;
                let then_body = self.block()?;
                let else_body = self.else_tail(true)?;
                Ok(Stmt { kind: StmtKind::StaticIf { cond, then_body, else_body }, span })
            }
            Tok::Unroll => {
                self.next();
                let (var, _) = self.ident()?;
                self.expect(Tok::In)?;
                self.expect(Tok::LBracket)?;
                let mut items = Vec::new();
                while !self.at(&Tok::RBracket) {
                    items.push(self.expr()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBracket)?;
                let body = self.block()?;
                Ok(Stmt { kind: StmtKind::Unroll { var, items, body }, span })
            }
            Tok::Ident(_) => {
                let (name, _) = self.ident()?;
                self.expect(Tok::Assign)?;
                let value = self.expr()?;
                self.expect(Tok::Semi)?;
                Ok(Stmt { kind: StmtKind::Assign { name, value }, span })
            }
            other => Err(Error::syntax(
                span,
                format!("expected a statement, found {}", other.describe()),
            )),
        }
    }

    fn if_tail(&mut self) -> Result<(Expr, Vec<Stmt>, Vec<Stmt>)> {
        self.expect(Tok::If)?;
        let cond = self.expr()?;
        let then_body = self.block()?;
        let else_body = self.else_tail(false)?;
        Ok((cond, then_body, else_body))
    }

    fn else_tail(&mut self, static_ctx: bool) -> Result<Vec<Stmt>> {
        if !self.eat(&Tok::Else) {
            return Ok(Vec::new());
        }
        if self.at(&Tok::If) || (static_ctx && self.at(&Tok::Static)) {
            let span = self.span();
            let stmt = self.stmt()?;
            let _ = span;
            Ok(vec![stmt])
        } else {
            self.block()
        }
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<Expr> {
        self.binary(0)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Percent => BinOp::Rem,
            Tok::Shl => BinOp::Shl,
            Tok::Shr => BinOp::Shr,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Amp => BinOp::And,
            Tok::Caret => BinOp::Xor,
            Tok::Pipe => BinOp::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr> {
        let mut lhs = self.cast()?;
        while let Some(op) = self.peek_binop() {
            if op.precedence() < min_prec {
                break;
            }
            let op_span = self.next().span;
            let rhs = self.binary(op.precedence() + 1)?;
            let span = lhs.span;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
            if !op.is_chainable() {
                if let Some(next_op) = self.peek_binop() {
                    if next_op.precedence() == op.precedence() {
                        return Err(Error::syntax(
                            op_span,
                            format!(
                                "`{}` does not chain; parenthesize the comparison",
                                next_op.symbol()
                            ),
                        ));
                    }
                }
            }
        }
        Ok(lhs)
    }

    fn cast(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        while self.eat(&Tok::As) {
            let ty = self.type_expr()?;
            let span = e.span;
            e = Expr::new(ExprKind::Ascribe(Box::new(e), ty), span);
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr> {
        let span = self.span();
        if self.eat(&Tok::Minus) {
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(e)), span));
        }
        if self.eat(&Tok::Tilde) {
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Flip, Box::new(e)), span));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.eat(&Tok::Dot) {
                let (name, nspan) = self.ident()?;
                if name == "ite" && self.at(&Tok::LParen) {
                    self.next();
                    let t = self.expr()?;
                    self.expect(Tok::Comma)?;
                    let f = self.expr()?;
                    self.expect(Tok::RParen)?;
                    let span = e.span;
                    e = Expr::new(
                        ExprKind::Ite(Box::new(e), Box::new(t), Box::new(f)),
                        span,
                    );
                } else {
                    let span = e.span;
                    let _ = nspan;
                    e = Expr::new(ExprKind::Dot(Box::new(e), name), span);
                }
            } else if self.eat(&Tok::LBracket) {
                let first = self.expr()?;
                if self.eat(&Tok::Colon) {
                    let lo = self.expr()?;
                    self.expect(Tok::RBracket)?;
                    let span = e.span;
                    e = Expr::new(
                        ExprKind::Slice(Box::new(e), Box::new(first), Box::new(lo)),
                        span,
                    );
                } else {
                    self.expect(Tok::RBracket)?;
                    let span = e.span;
                    e = Expr::new(ExprKind::Index(Box::new(e), Box::new(first)), span);
                }
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                Ok(Expr::int(v, span))
            }
            Tok::True => {
                self.next();
                Ok(Expr::new(ExprKind::Bool(true), span))
            }
            Tok::False => {
                self.next();
                Ok(Expr::new(ExprKind::Bool(false), span))
            }
            Tok::Ident(name) => {
                self.next();
                if self.eat(&Tok::LParen) {
                    let mut args = Vec::new();
                    while !self.at(&Tok::RParen) {
                        args.push(self.expr()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RParen)?;
                    Ok(Expr::new(ExprKind::Call(name, args), span))
                } else {
                    Ok(Expr::new(ExprKind::Var(name), span))
                }
            }
            Tok::LParen => {
                self.next();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(Expr { span, ..e })
            }
            other => Err(Error::syntax(
                span,
                format!("expected an expression, found {}", other.describe()),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_expr(src: &str) -> Expr {
        let unit = parse(&format!("const X = {src};")).unwrap();
        match unit.decls.into_iter().next().unwrap() {
            Decl::Const { value, .. } => value,
            _ => unreachable!(),
        }
    }

    fn bin(e: &Expr) -> (BinOp, &Expr, &Expr) {
        match &e.kind {
            ExprKind::Binary(op, a, b) => (*op, a, b),
            other => panic!("expected binary, got {other:?}"),
        }
    }

    #[test]
    fn multiplication_binds_tighter_than_addition() {
        let e = parse_expr("1 + 2 * 3");
        let (op, _, rhs) = bin(&e);
        assert_eq!(op, BinOp::Add);
        assert_eq!(bin(rhs).0, BinOp::Mul);
    }

    #[test]
    fn shift_is_looser_than_addition() {
        let e = parse_expr("1 << 2 + 3");
        let (op, _, rhs) = bin(&e);
        assert_eq!(op, BinOp::Shl);
        assert_eq!(bin(rhs).0, BinOp::Add);
    }

    #[test]
    fn bitwise_tower_or_xor_and() {
        let e = parse_expr("a & b ^ c | d");
        let (op, lhs, _) = bin(&e);
        assert_eq!(op, BinOp::Or);
        let (op2, lhs2, _) = bin(lhs);
        assert_eq!(op2, BinOp::Xor);
        assert_eq!(bin(lhs2).0, BinOp::And);
    }

    #[test]
    fn left_associative_subtraction() {
        let e = parse_expr("8 - 3 - 2");
        let (op, lhs, _) = bin(&e);
        assert_eq!(op, BinOp::Sub);
        assert_eq!(bin(lhs).0, BinOp::Sub);
    }

    #[test]
    fn comparisons_do_not_chain() {
        let err = parse("const X = a < b < c;").unwrap_err();
        assert!(err.to_string().contains("does not chain"), "{err}");
        assert!(parse("const X = a == b == c;").is_err());
        // different levels are fine: (a < b) == c
        parse_expr("a < b == c");
    }

    #[test]
    fn cast_binds_tighter_than_binary() {
        let e = parse_expr("x + 1 as bv[4]");
        let (op, _, rhs) = bin(&e);
        assert_eq!(op, BinOp::Add);
        assert!(matches!(rhs.kind, ExprKind::Ascribe(..)));
    }

    #[test]
    fn postfix_forms() {
        assert!(matches!(parse_expr("c.ite(a, b)").kind, ExprKind::Ite(..)));
        assert!(matches!(parse_expr("AluOp.ADD").kind, ExprKind::Dot(..)));
        assert!(matches!(parse_expr("x[3]").kind, ExprKind::Index(..)));
        assert!(matches!(parse_expr("x[7:4]").kind, ExprKind::Slice(..)));
        assert!(matches!(parse_expr("alu(a, b)").kind, ExprKind::Call(..)));
        // postfix on call results and nested indexes
        assert!(matches!(parse_expr("f(a).q[2]").kind, ExprKind::Index(..)));
    }

    #[test]
    fn unary_stacks() {
        let e = parse_expr("-~x");
        match &e.kind {
            ExprKind::Unary(UnOp::Neg, inner) => {
                assert!(matches!(inner.kind, ExprKind::Unary(UnOp::Flip, _)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn circuit_with_states_insts_and_control_flow() {
        let src = "\
circuit RegALU(instr: bv[2], in_0: bv[8], in_1: bv[8]) -> bv[8] {
    state reg_0 : bv[8] = 0;
    state reg_1 : bv[8] = 0;
    inst alu : ALU;
    if instr[0] == 1 {
        reg_1 = in_1;
    }
    acc = alu(instr[1], reg_0, reg_1);
    reg_0 = acc;
    return acc;
}";
        let unit = parse(src).unwrap();
        let Decl::Circuit(c) = &unit.decls[0] else { panic!() };
        assert_eq!(c.name, "RegALU");
        assert_eq!(c.inputs.len(), 3);
        assert_eq!(c.states.len(), 2);
        assert_eq!(c.insts.len(), 1);
        assert_eq!(c.body.len(), 4);
        assert!(matches!(c.body[0].kind, StmtKind::If { .. }));
    }

    #[test]
    fn state_doubles_as_a_local_name() {
        let src = "\
circuit Counter(en: bit) -> bv[8] {
    state reg : bv[8] = 0;
    state = reg;
    if en {
        state = state + 1;
    }
    reg = state;
    return reg;
}";
        let unit = parse(src).unwrap();
        let Decl::Circuit(c) = &unit.decls[0] else { panic!() };
        assert_eq!(c.states.len(), 1);
        assert!(
            matches!(&c.body[0].kind, StmtKind::Assign { name, .. } if name == "state")
        );
    }

    #[test]
    fn adt_declarations() {
        let src = "\
enum AluOp { ADD = 1, MUL = 0 }
product Inst {
    op: AluOp,
    ctl: RegCtrl @ [1:1],
}
sum Operand { imm: bv[4], reg: RegId }
type T = bv[4];
";
        let unit = parse(src).unwrap();
        assert_eq!(unit.decls.len(), 4);
        let Decl::Enum { variants, .. } = &unit.decls[0] else { panic!() };
        assert_eq!(variants[0], ("ADD".to_string(), 1));
        let Decl::Product { fields, .. } = &unit.decls[1] else { panic!() };
        assert!(fields[0].range.is_none());
        assert!(fields[1].range.is_some());
    }

    #[test]
    fn unroll_and_static_if() {
        let src = "\
circuit T(a: bv[4]) -> bv[4] {
    acc = a;
    unroll i in [1, 3, 9] {
        acc = acc + i;
    }
    static if W > 2 {
        acc = acc + 1;
    } else {
        acc = acc - 1;
    }
    return acc;
}";
        let unit = parse(src).unwrap();
        let Decl::Circuit(c) = &unit.decls[0] else { panic!() };
        let StmtKind::Unroll { items, .. } = &c.body[1].kind else { panic!() };
        assert_eq!(items.len(), 3);
        assert!(matches!(c.body[2].kind, StmtKind::StaticIf { .. }));
    }

    #[test]
    fn property_declaration() {
        let src = "property acc_load on RegALU { next(reg_1) == in_1 }";
        let unit = parse(src).unwrap();
        let Decl::Property(p) = &unit.decls[0] else { panic!() };
        assert_eq!(p.circuit, "RegALU");
        assert!(matches!(p.expr.kind, ExprKind::Binary(BinOp::Eq, ..)));
    }

    #[test]
    fn else_if_chains() {
        let src = "\
circuit T(a: bv[2]) -> bv[2] {
    if a == 0 {
        return 1;
    } else if a == 1 {
        return 2;
    } else {
        return 3;
    }
}";
        let unit = parse(src).unwrap();
        let Decl::Circuit(c) = &unit.decls[0] else { panic!() };
        let StmtKind::If { else_body, .. } = &c.body[0].kind else { panic!() };
        assert_eq!(else_body.len(), 1);
        assert!(matches!(else_body[0].kind, StmtKind::If { .. }));
    }

    #[test]
    fn error_messages_carry_position() {
        let err = parse("circuit T(a bv[2]) -> bv[2] { return a; }").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("1:13"), "{msg}");
    }
}
