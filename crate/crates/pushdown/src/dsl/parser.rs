use super::ast::*;
use super::lexer::{lex, Tok};
use super::DslError;

pub fn parse(src: &str) -> Result<Program, DslError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let mut stmts = Vec::new();
    while !matches!(p.peek(), Tok::Eof) {
        stmts.push(p.stmt()?);
    }
    if stmts.is_empty() {
        return Err(p.expected(&["identifier"]));
    }
    Ok(Program { stmts })
}

/// Parse a standalone expression (used for atoms printed by the tools).
pub fn parse_expr(src: &str) -> Result<Expr, DslError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    p.eat(&Tok::Eof, &["end of input"])?;
    Ok(e)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expected(&self, what: &[&str]) -> DslError {
        DslError::expected(self.span(), what, &self.peek().describe())
    }

    fn eat(&mut self, t: &Tok, what: &[&str]) -> Result<(), DslError> {
        if self.peek() == t {
            self.next();
            Ok(())
        } else {
            Err(self.expected(what))
        }
    }

    fn ident(&mut self) -> Result<String, DslError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            _ => Err(self.expected(&["identifier"])),
        }
    }

    fn stmt(&mut self) -> Result<Stmt, DslError> {
        let span = self.span();
        let name = self.ident()?;
        match self.peek() {
            Tok::Assign => {
                self.next();
                let expr = self.expr()?;
                Ok(Stmt::Assign { name, expr, span })
            }
            Tok::Colon => {
                self.next();
                self.eat(&Tok::LParen, &["`(`"])?;
                let types = self.types()?;
                self.eat(&Tok::RParen, &["`)`"])?;
                self.eat(&Tok::Assign, &["`=`"])?;
                let expr = self.expr()?;
                Ok(Stmt::Typed { name, types, expr, span })
            }
            _ => Err(self.expected(&["`=`", "`:`"])),
        }
    }

    fn starts_type(t: &Tok) -> bool {
        matches!(t, Tok::TyBool | Tok::TyInt | Tok::TyFloat | Tok::TyStr | Tok::TyList | Tok::TyOptional)
    }

    /// `type , (type ,)*` — every type is followed by a comma.
    fn types(&mut self) -> Result<Vec<TypeAst>, DslError> {
        let mut out = vec![self.ty()?];
        self.eat(&Tok::Comma, &["`,`"])?;
        while Self::starts_type(self.peek()) {
            out.push(self.ty()?);
            self.eat(&Tok::Comma, &["`,`"])?;
        }
        Ok(out)
    }

    fn ty(&mut self) -> Result<TypeAst, DslError> {
        let t = match self.peek() {
            Tok::TyBool => TypeAst::Bool,
            Tok::TyInt => TypeAst::Int,
            Tok::TyFloat => TypeAst::Float,
            Tok::TyStr => TypeAst::Str,
            Tok::TyList | Tok::TyOptional => {
                let list = matches!(self.peek(), Tok::TyList);
                self.next();
                self.eat(&Tok::LBrack, &["`[`"])?;
                let inner = Box::new(self.ty()?);
                self.eat(&Tok::RBrack, &["`]`"])?;
                return Ok(if list { TypeAst::List(inner) } else { TypeAst::Optional(inner) });
            }
            _ => return Err(self.expected(&["bool", "int", "float", "str", "List", "Optional"])),
        };
        self.next();
        Ok(t)
    }

    pub fn expr(&mut self) -> Result<Expr, DslError> {
        let span = self.span();
        let then = self.or_expr()?;
        if matches!(self.peek(), Tok::If) {
            self.next();
            let cond = self.or_expr()?;
            self.eat(&Tok::Else, &["`else`"])?;
            let els = self.expr()?;
            return Ok(Expr::new(
                ExprKind::Cond { then: Box::new(then), cond: Box::new(cond), els: Box::new(els) },
                span,
            ));
        }
        Ok(then)
    }

    fn binary_chain(
        &mut self,
        ops: &[(Tok, BinOp)],
        next: fn(&mut Parser) -> Result<Expr, DslError>,
    ) -> Result<Expr, DslError> {
        let mut lhs = next(self)?;
        'outer: loop {
            for (t, op) in ops {
                if self.peek() == t {
                    let span = self.span();
                    self.next();
                    let rhs = next(self)?;
                    lhs = Expr::new(ExprKind::Binary(*op, Box::new(lhs), Box::new(rhs)), span);
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn or_expr(&mut self) -> Result<Expr, DslError> {
        self.binary_chain(&[(Tok::Or, BinOp::Or)], Parser::and_expr)
    }

    fn and_expr(&mut self) -> Result<Expr, DslError> {
        self.binary_chain(&[(Tok::And, BinOp::And)], Parser::not_expr)
    }

    fn not_expr(&mut self) -> Result<Expr, DslError> {
        if matches!(self.peek(), Tok::Not) {
            let span = self.span();
            self.next();
            let inner = self.not_expr()?;
            return Ok(Expr::new(ExprKind::Not(Box::new(inner)), span));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> Result<Expr, DslError> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::EqEq => BinOp::Eq,
            Tok::Ge => BinOp::Ge,
            Tok::Gt => BinOp::Gt,
            Tok::Le => BinOp::Le,
            Tok::Lt => BinOp::Lt,
            _ => return Ok(lhs),
        };
        let span = self.span();
        self.next();
        let rhs = self.add_expr()?;
        if matches!(self.peek(), Tok::EqEq | Tok::Ge | Tok::Gt | Tok::Le | Tok::Lt) {
            return Err(DslError::syntax(self.span(), "chained comparisons are not supported"));
        }
        Ok(Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span))
    }

    fn add_expr(&mut self) -> Result<Expr, DslError> {
        self.binary_chain(&[(Tok::Plus, BinOp::Add), (Tok::Minus, BinOp::Sub)], Parser::mul_expr)
    }

    fn mul_expr(&mut self) -> Result<Expr, DslError> {
        self.binary_chain(&[(Tok::Star, BinOp::Mul), (Tok::Slash, BinOp::Div)], Parser::unary)
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if !matches!(self.peek(), Tok::Minus) {
            return self.postfix();
        }
        let span = self.span();
        self.next();
        let kind = match self.next() {
            Tok::Int(n) => ExprKind::Int(-n),
            Tok::Float(r) => ExprKind::Float(-r),
            Tok::Inf => ExprKind::NegInf,
            _ => {
                self.pos -= 1;
                return Err(self.expected(&["numeric literal after `-`"]));
            }
        };
        Ok(Expr::new(kind, span))
    }

    fn postfix(&mut self) -> Result<Expr, DslError> {
        let mut e = self.primary()?;
        while matches!(self.peek(), Tok::LBrack) {
            let span = self.span();
            self.next();
            let k = match self.next() {
                Tok::Int(n) => i64::try_from(n).map_err(|_| DslError::syntax(span, "index out of range"))?,
                _ => {
                    self.pos -= 1;
                    return Err(self.expected(&["integer index"]));
                }
            };
            if matches!(self.peek(), Tok::Colon) {
                self.next();
                self.eat(&Tok::RBrack, &["`]`"])?;
                e = Expr::new(ExprKind::Slice(Box::new(e), k), span);
            } else {
                self.eat(&Tok::RBrack, &["`]`", "`:`"])?;
                e = Expr::new(ExprKind::Index(Box::new(e), k), span);
            }
        }
        Ok(e)
    }

    fn exprs_until(&mut self, close: &Tok, close_name: &str) -> Result<(Vec<Expr>, bool), DslError> {
        let mut items = Vec::new();
        let mut trailing = false;
        while self.peek() != close {
            items.push(self.expr()?);
            trailing = false;
            if matches!(self.peek(), Tok::Comma) {
                self.next();
                trailing = true;
            } else if self.peek() != close {
                return Err(self.expected(&["`,`", close_name]));
            }
        }
        self.next();
        Ok((items, trailing))
    }

    fn lambda(&mut self) -> Result<Lambda, DslError> {
        let span = self.span();
        let fix = match self.peek() {
            Tok::Lambda => false,
            Tok::Fix => true,
            _ => return Err(self.expected(&["`lambda`", "`fix`"])),
        };
        self.next();
        let mut params = Vec::new();
        while let Tok::Ident(_) = self.peek() {
            params.push(self.ident()?);
            if matches!(self.peek(), Tok::Comma) {
                self.next();
            } else {
                break;
            }
        }
        self.eat(&Tok::Colon, &["`:`", "parameter"])?;
        let body = Box::new(self.expr()?);
        Ok(Lambda { fix, params, body, span })
    }

    fn primary(&mut self) -> Result<Expr, DslError> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Bool(b) => {
                self.next();
                ExprKind::Bool(b)
            }
            Tok::Int(n) => {
                self.next();
                ExprKind::Int(n)
            }
            Tok::Float(r) => {
                self.next();
                ExprKind::Float(r)
            }
            Tok::Inf => {
                return Err(DslError::syntax(span, "positive infinity is not supported; only `-inf` is"));
            }
            Tok::Str(s) => {
                self.next();
                ExprKind::Str(s)
            }
            Tok::Ident(s) => {
                self.next();
                ExprKind::Ident(s)
            }
            Tok::None => {
                self.next();
                ExprKind::None
            }
            Tok::LParen => {
                self.next();
                if Self::starts_type(self.peek()) {
                    let types = self.types()?;
                    self.eat(&Tok::RParen, &["`)`"])?;
                    ExprKind::Types(types)
                } else {
                    let (mut items, trailing) = self.exprs_until(&Tok::RParen, "`)`")?;
                    if items.len() == 1 && !trailing {
                        return Ok(items.pop().unwrap());
                    }
                    ExprKind::Tuple(items)
                }
            }
            Tok::LBrack => {
                self.next();
                let (items, _) = self.exprs_until(&Tok::RBrack, "`]`")?;
                ExprKind::List(items)
            }
            Tok::Insert => {
                self.next();
                self.eat(&Tok::LParen, &["`(`"])?;
                let l = self.expr()?;
                self.eat(&Tok::Comma, &["`,`"])?;
                let x = self.expr()?;
                self.eat(&Tok::RParen, &["`)`"])?;
                ExprKind::Insert(Box::new(l), Box::new(x))
            }
            Tok::Match => {
                self.next();
                let scrut = self.expr()?;
                self.eat(&Tok::Colon, &["`:`"])?;
                let mut cases = Vec::new();
                while matches!(self.peek(), Tok::Case) {
                    self.next();
                    let pattern = self.pattern()?;
                    self.eat(&Tok::Colon, &["`:`"])?;
                    let body = self.expr()?;
                    cases.push(Case { pattern, body });
                }
                if cases.is_empty() {
                    return Err(self.expected(&["`case`"]));
                }
                ExprKind::Match(Box::new(scrut), cases)
            }
            Tok::Fold => {
                self.next();
                self.eat(&Tok::LParen, &["`(`"])?;
                let x = self.expr()?;
                self.eat(&Tok::Comma, &["`,`"])?;
                let init = self.expr()?;
                self.eat(&Tok::Comma, &["`,`"])?;
                let f = self.lambda()?;
                self.eat(&Tok::RParen, &["`)`"])?;
                ExprKind::Fold(Box::new(x), Box::new(init), f)
            }
            Tok::Filter => {
                self.next();
                self.eat(&Tok::LParen, &["`(`"])?;
                let x = self.expr()?;
                self.eat(&Tok::Comma, &["`,`"])?;
                let f = self.lambda()?;
                self.eat(&Tok::RParen, &["`)`"])?;
                ExprKind::Filter(Box::new(x), f)
            }
            _ => {
                return Err(self.expected(&[
                    "literal", "identifier", "`(`", "`[`", "`not`", "`match`", "`fold`", "`filter`", "`insert`",
                ]))
            }
        };
        Ok(Expr::new(kind, span))
    }

    fn pattern(&mut self) -> Result<Expr, DslError> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Minus => return self.unary(),
            Tok::Bool(b) => ExprKind::Bool(b),
            Tok::Int(n) => ExprKind::Int(n),
            Tok::Float(r) => ExprKind::Float(r),
            Tok::Str(s) => ExprKind::Str(s),
            Tok::Ident(s) => ExprKind::Ident(s),
            Tok::None => ExprKind::None,
            _ => return Err(self.expected(&["pattern value"])),
        };
        self.next();
        Ok(Expr::new(kind, span))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fold_with_conditional() {
        let src = "x = (float,)\nI : (float, float,) = (-inf, -inf)\n\
                   out = fold(x, I, lambda a, r: (r[0], a[0]) if r[0] > a[0] else a)";
        let p = parse(src).unwrap();
        assert_eq!(p.stmts.len(), 3);
        let mut folds = 0;
        p.stmts[2].expr().walk(&mut |e| {
            if matches!(e.kind, ExprKind::Fold(..)) {
                folds += 1;
            }
        });
        assert_eq!(folds, 1);
    }

    #[test]
    fn empty_program_is_error_at_eof() {
        let e = parse("  # nothing\n").unwrap_err();
        assert!(e.to_string().contains("end of input"), "{e}");
    }

    #[test]
    fn one_tuple_versus_parens() {
        assert!(matches!(parse_expr("(a,)").unwrap().kind, ExprKind::Tuple(ref v) if v.len() == 1));
        assert!(matches!(parse_expr("(a)").unwrap().kind, ExprKind::Ident(_)));
        assert!(matches!(parse_expr("()").unwrap().kind, ExprKind::Tuple(ref v) if v.is_empty()));
    }

    #[test]
    fn match_with_two_cases() {
        let e = parse_expr("match a[1]: case None: True case v: v <= 38").unwrap();
        match e.kind {
            ExprKind::Match(_, cases) => assert_eq!(cases.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn precedence_is_python_like() {
        let e = parse_expr("not a and b or c").unwrap();
        assert!(matches!(e.kind, ExprKind::Binary(BinOp::Or, ..)));
        let e = parse_expr("a + b * c > d").unwrap();
        match e.kind {
            ExprKind::Binary(BinOp::Gt, l, _) => assert!(matches!(l.kind, ExprKind::Binary(BinOp::Add, ..))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_position_and_expectations() {
        let e = parse("x = (1, 2").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("1:10"), "{msg}");
        assert!(msg.contains("`)`"), "{msg}");
        assert!(parse("x = a < b < c").is_err());
        assert!(parse("x = inf").is_err());
        assert!(parse("x = 1 +").is_err());
    }

    #[test]
    fn slices_and_insert() {
        let e = parse_expr("insert(a[0], r[0])[1:]").unwrap();
        assert!(matches!(e.kind, ExprKind::Slice(_, 1)));
    }

    #[test]
    fn fix_lambdas_parse() {
        assert!(parse("y = fold(x, I, fix a, r: a)").is_ok());
    }
}
