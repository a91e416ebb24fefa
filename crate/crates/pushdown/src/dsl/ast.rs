use num_bigint::BigInt;
use num_rational::BigRational;

/// Source position. Spans never participate in structural equality so that a
/// re-parsed pretty-print compares equal to the original tree.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeAst {
    Bool,
    Int,
    Float,
    Str,
    List(Box<TypeAst>),
    Optional(Box<TypeAst>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ge,
    Gt,
    Le,
    Lt,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "==",
            BinOp::Ge => ">=",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Lt => "<",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ge | BinOp::Gt | BinOp::Le | BinOp::Lt)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lambda {
    pub fix: bool,
    pub params: Vec<String>,
    pub body: Box<Expr>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Case {
    pub pattern: Expr,
    pub body: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Bool(bool),
    Int(BigInt),
    Float(BigRational),
    NegInf,
    Str(String),
    Ident(String),
    None,
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Types(Vec<TypeAst>),
    Tuple(Vec<Expr>),
    List(Vec<Expr>),
    Index(Box<Expr>, i64),
    Slice(Box<Expr>, i64),
    Insert(Box<Expr>, Box<Expr>),
    Cond {
        then: Box<Expr>,
        cond: Box<Expr>,
        els: Box<Expr>,
    },
    Match(Box<Expr>, Vec<Case>),
    Fold(Box<Expr>, Box<Expr>, Lambda),
    Filter(Box<Expr>, Lambda),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    pub fn synth(kind: ExprKind) -> Expr {
        Expr { kind, span: Span::default() }
    }

    /// Visit this node and all descendants, including lambda bodies.
    pub fn walk(&self, visit: &mut impl FnMut(&Expr)) {
        visit(self);
        match &self.kind {
            ExprKind::Binary(_, a, b) | ExprKind::Insert(a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
            ExprKind::Not(a) | ExprKind::Index(a, _) | ExprKind::Slice(a, _) => a.walk(visit),
            ExprKind::Tuple(es) | ExprKind::List(es) => es.iter().for_each(|e| e.walk(visit)),
            ExprKind::Cond { then, cond, els } => {
                then.walk(visit);
                cond.walk(visit);
                els.walk(visit);
            }
            ExprKind::Match(s, cases) => {
                s.walk(visit);
                for c in cases {
                    c.pattern.walk(visit);
                    c.body.walk(visit);
                }
            }
            ExprKind::Fold(x, i, l) => {
                x.walk(visit);
                i.walk(visit);
                l.body.walk(visit);
            }
            ExprKind::Filter(x, l) => {
                x.walk(visit);
                l.body.walk(visit);
            }
            _ => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign {
        name: String,
        expr: Expr,
        span: Span,
    },
    Typed {
        name: String,
        types: Vec<TypeAst>,
        expr: Expr,
        span: Span,
    },
}

impl Stmt {
    pub fn name(&self) -> &str {
        match self {
            Stmt::Assign { name, .. } | Stmt::Typed { name, .. } => name,
        }
    }

    pub fn expr(&self) -> &Expr {
        match self {
            Stmt::Assign { expr, .. } | Stmt::Typed { expr, .. } => expr,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Stmt::Assign { span, .. } | Stmt::Typed { span, .. } => *span,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub stmts: Vec<Stmt>,
}
