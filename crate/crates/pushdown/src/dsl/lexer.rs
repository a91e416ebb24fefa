use super::ast::Span;
use super::DslError;
use num_bigint::BigInt;
use num_rational::BigRational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(BigInt),
    Float(BigRational),
    /// The `inf` literal.
    Inf,
    Str(String),
    Bool(bool),
    None,
    Not,
    And,
    Or,
    If,
    Else,
    Match,
    Case,
    Fold,
    Filter,
    Lambda,
    Fix,
    Insert,
    TyBool,
    TyInt,
    TyFloat,
    TyStr,
    TyList,
    TyOptional,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Colon,
    Assign,
    EqEq,
    Ge,
    Gt,
    Le,
    Lt,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Float(_) | Tok::Inf => "float literal".into(),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    pub fn text(&self) -> &'static str {
        match self {
            Tok::Bool(true) => "True",
            Tok::Bool(false) => "False",
            Tok::None => "None",
            Tok::Not => "not",
            Tok::And => "and",
            Tok::Or => "or",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::Match => "match",
            Tok::Case => "case",
            Tok::Fold => "fold",
            Tok::Filter => "filter",
            Tok::Lambda => "lambda",
            Tok::Fix => "fix",
            Tok::Insert => "insert",
            Tok::TyBool => "bool",
            Tok::TyInt => "int",
            Tok::TyFloat => "float",
            Tok::TyStr => "str",
            Tok::TyList => "List",
            Tok::TyOptional => "Optional",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrack => "[",
            Tok::RBrack => "]",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::Ge => ">=",
            Tok::Gt => ">",
            Tok::Le => "<=",
            Tok::Lt => "<",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Inf => "inf",
            Tok::Ident(_) | Tok::Int(_) | Tok::Float(_) | Tok::Str(_) | Tok::Eof => "",
        }
    }
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "True" => Tok::Bool(true),
        "False" => Tok::Bool(false),
        "None" => Tok::None,
        "not" => Tok::Not,
        "and" => Tok::And,
        "or" => Tok::Or,
        "if" => Tok::If,
        "else" => Tok::Else,
        "match" => Tok::Match,
        "case" => Tok::Case,
        "fold" => Tok::Fold,
        "filter" => Tok::Filter,
        "lambda" => Tok::Lambda,
        "fix" => Tok::Fix,
        "insert" => Tok::Insert,
        "bool" => Tok::TyBool,
        "int" => Tok::TyInt,
        "float" => Tok::TyFloat,
        "str" => Tok::TyStr,
        "List" => Tok::TyList,
        "Optional" => Tok::TyOptional,
        "inf" => Tok::Inf,
        _ => return None,
    })
}

/// Exact rational value of a decimal literal such as `90.5` or `1e3`.
fn decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    let digits = format!("{int_part}{frac_part}");
    let digits = if digits.is_empty() { "0".to_string() } else { digits };
    let n: BigInt = digits.parse().ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let r = if scale >= 0 {
        BigRational::from_integer(n * ten.pow(scale as u32))
    } else {
        BigRational::new(n, ten.pow((-scale) as u32))
    };
    Some(r)
}

pub fn lex(src: &str) -> Result<Vec<(Tok, Span)>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        let bump = |i: &mut usize, col: &mut usize, n: usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            bump(&mut i, &mut col, 1);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            out.push((keyword(&word).unwrap_or(Tok::Ident(word)), span));
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut is_float = false;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                is_float = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    is_float = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = if is_float {
                Tok::Float(decimal(&text).ok_or_else(|| DslError::syntax(span, format!("bad float `{text}`")))?)
            } else {
                Tok::Int(text.parse().map_err(|_| DslError::syntax(span, format!("bad integer `{text}`")))?)
            };
            out.push((tok, span));
            continue;
        }
        if c == '"' || c == '\'' {
            let quote = c;
            let mut s = String::new();
            bump(&mut i, &mut col, 1);
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err(DslError::syntax(span, "unterminated string literal")),
                    Some(&ch) if ch == quote => {
                        bump(&mut i, &mut col, 1);
                        break;
                    }
                    Some('\\') => {
                        let esc = *chars.get(i + 1).ok_or_else(|| DslError::syntax(span, "bad escape"))?;
                        s.push(match esc {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        });
                        bump(&mut i, &mut col, 2);
                    }
                    Some(&ch) => {
                        s.push(ch);
                        bump(&mut i, &mut col, 1);
                    }
                }
            }
            out.push((Tok::Str(s), span));
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let (tok, n) = match two.as_str() {
            "==" => (Tok::EqEq, 2),
            ">=" => (Tok::Ge, 2),
            "<=" => (Tok::Le, 2),
            _ => (
                match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBrack,
                    ']' => Tok::RBrack,
                    ',' => Tok::Comma,
                    ':' => Tok::Colon,
                    '=' => Tok::Assign,
                    '>' => Tok::Gt,
                    '<' => Tok::Lt,
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    other => return Err(DslError::syntax(span, format!("unexpected character `{other}`"))),
                },
                1,
            ),
        };
        bump(&mut i, &mut col, n);
        out.push((tok, span));
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}
