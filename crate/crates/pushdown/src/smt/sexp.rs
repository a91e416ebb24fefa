//! Reader for the S-expressions a solver prints back.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    Str(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s) => Some(s),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(xs) => Some(xs),
            _ => None,
        }
    }

    /// Head symbol of an application.
    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|xs| xs.first()).and_then(Sexp::atom)
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(s) => f.write_str(s),
            Sexp::Str(s) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
            Sexp::List(xs) => {
                f.write_str("(")?;
                for (k, x) in xs.iter().enumerate() {
                    if k > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Net parenthesis depth of `s`, ignoring those inside strings and quoted symbols.
pub fn depth_delta(s: &str) -> i64 {
    let mut d = 0;
    let mut in_str = false;
    let mut in_bar = false;
    for c in s.chars() {
        match c {
            '"' if !in_bar => in_str = !in_str,
            '|' if !in_str => in_bar = !in_bar,
            '(' if !in_str && !in_bar => d += 1,
            ')' if !in_str && !in_bar => d -= 1,
            _ => {}
        }
    }
    d
}

pub fn parse(src: &str) -> Result<Sexp, String> {
    let mut p = Reader { chars: src.chars().collect(), pos: 0 };
    let e = p.read()?;
    p.skip_ws();
    if p.pos != p.chars.len() {
        return Err(format!("trailing input after s-expression: {src:?}"));
    }
    Ok(e)
}

struct Reader {
    chars: Vec<char>,
    pos: usize,
}

impl Reader {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() {
            let c = self.chars[self.pos];
            if c.is_whitespace() {
                self.pos += 1;
            } else if c == ';' {
                while self.pos < self.chars.len() && self.chars[self.pos] != '\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Sexp, String> {
        self.skip_ws();
        let Some(&c) = self.chars.get(self.pos) else {
            return Err("unexpected end of s-expression".into());
        };
        match c {
            '(' => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.chars.get(self.pos) {
                        Some(')') => {
                            self.pos += 1;
                            return Ok(Sexp::List(items));
                        }
                        Some(_) => items.push(self.read()?),
                        None => return Err("unbalanced parentheses".into()),
                    }
                }
            }
            ')' => Err("unexpected `)`".into()),
            '"' => {
                self.pos += 1;
                let mut s = String::new();
                loop {
                    match self.chars.get(self.pos) {
                        Some('"') if self.chars.get(self.pos + 1) == Some(&'"') => {
                            s.push('"');
                            self.pos += 2;
                        }
                        Some('"') => {
                            self.pos += 1;
                            return Ok(Sexp::Str(s));
                        }
                        Some(&ch) => {
                            s.push(ch);
                            self.pos += 1;
                        }
                        None => return Err("unterminated string".into()),
                    }
                }
            }
            '|' => {
                self.pos += 1;
                let start = self.pos;
                while self.chars.get(self.pos).is_some_and(|&ch| ch != '|') {
                    self.pos += 1;
                }
                if self.pos >= self.chars.len() {
                    return Err("unterminated quoted symbol".into());
                }
                let s: String = self.chars[start..self.pos].iter().collect();
                self.pos += 1;
                Ok(Sexp::Atom(s))
            }
            _ => {
                let start = self.pos;
                while self
                    .chars
                    .get(self.pos)
                    .is_some_and(|&ch| !ch.is_whitespace() && ch != '(' && ch != ')' && ch != ';')
                {
                    self.pos += 1;
                }
                Ok(Sexp::Atom(self.chars[start..self.pos].iter().collect()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists() {
        let e = parse("((a1 (mk_T2XX NegInf (Fin (/ 1.0 3.0)))) (r |odd sym|))").unwrap();
        let xs = e.list().unwrap();
        assert_eq!(xs.len(), 2);
        assert_eq!(xs[1], Sexp::List(vec![Sexp::Atom("r".into()), Sexp::Atom("odd sym".into())]));
        assert_eq!(e.to_string(), "((a1 (mk_T2XX NegInf (Fin (/ 1.0 3.0)))) (r odd sym))");
    }

    #[test]
    fn strings_and_depth() {
        assert_eq!(parse("(error \"line 1: \"\"x\"\" (\")").unwrap().head(), Some("error"));
        assert_eq!(depth_delta("(a \"(\" |)| (b"), 2);
        assert!(parse("(a b").is_err());
        assert!(parse("a b").is_err());
    }
}
