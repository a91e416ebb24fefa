use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;

/// DSL types. `Float` is interpreted over the reals, optionally extended with
/// a negative-infinity sentinel when a task mentions `-inf`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ty {
    Bool,
    Int,
    Float,
    Str,
    Opt(Box<Ty>),
    List(Box<Ty>),
    Tuple(Vec<Ty>),
}

impl Ty {
    pub fn opt(t: Ty) -> Ty {
        Ty::Opt(Box::new(t))
    }

    pub fn list(t: Ty) -> Ty {
        Ty::List(Box::new(t))
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Ty::Int | Ty::Float)
    }

    pub fn tuple_fields(&self) -> Option<&[Ty]> {
        match self {
            Ty::Tuple(ts) => Some(ts),
            _ => None,
        }
    }

    /// Strip one level of `Optional`.
    pub fn payload(&self) -> &Ty {
        match self {
            Ty::Opt(t) => t,
            t => t,
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Bool => write!(f, "bool"),
            Ty::Int => write!(f, "int"),
            Ty::Float => write!(f, "float"),
            Ty::Str => write!(f, "str"),
            Ty::Opt(t) => write!(f, "Optional[{t}]"),
            Ty::List(t) => write!(f, "List[{t}]"),
            Ty::Tuple(ts) => {
                write!(f, "(")?;
                for t in ts {
                    write!(f, "{t},")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Concrete values. Arithmetic is exact.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Int(BigInt),
    Real(BigRational),
    NegInf,
    Str(String),
    None,
    Some(Box<Value>),
    Tuple(Vec<Value>),
    List(Vec<Value>),
}

/// Label used for strings outside the program's constant set.
pub const OTHER_LABEL: &str = "<other>";

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Int(BigInt::from(n))
    }

    pub fn real(n: i64, d: i64) -> Value {
        Value::Real(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn some(v: Value) -> Value {
        Value::Some(Box::new(v))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn field(&self, i: usize) -> Option<&Value> {
        match self {
            Value::Tuple(vs) => vs.get(i),
            _ => None,
        }
    }

    pub fn is_zero_number(&self) -> bool {
        match self {
            Value::Int(n) => n.is_zero(),
            Value::Real(r) => r.is_zero(),
            _ => false,
        }
    }

    /// Numeric ordering. `NegInf` sits below every real. Returns `None` for
    /// non-numeric operands.
    pub fn num_cmp(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            (Value::Real(a), Value::Real(b)) => Some(a.cmp(b)),
            (Value::Int(a), Value::Real(b)) => Some(BigRational::from_integer(a.clone()).cmp(b)),
            (Value::Real(a), Value::Int(b)) => Some(a.cmp(&BigRational::from_integer(b.clone()))),
            (Value::NegInf, Value::NegInf) => Some(Ordering::Equal),
            (Value::NegInf, Value::Int(_) | Value::Real(_)) => Some(Ordering::Less),
            (Value::Int(_) | Value::Real(_), Value::NegInf) => Some(Ordering::Greater),
            _ => None,
        }
    }

    /// Zero value of a type; used as the payload of an unwrapped `None`.
    pub fn default_of(ty: &Ty) -> Value {
        match ty {
            Ty::Bool => Value::Bool(false),
            Ty::Int => Value::int(0),
            Ty::Float => Value::Real(BigRational::zero()),
            Ty::Str => Value::Str(OTHER_LABEL.to_string()),
            Ty::Opt(_) => Value::None,
            Ty::List(_) => Value::List(vec![]),
            Ty::Tuple(ts) => Value::Tuple(ts.iter().map(Value::default_of).collect()),
        }
    }
}

/// Render a rational as a DSL float literal when it has a finite decimal
/// expansion, otherwise as a parenthesised quotient.
pub fn fmt_rational(r: &BigRational) -> String {
    let neg = r.is_negative();
    let a = r.abs();
    let mut d = a.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut digits = 0usize;
    let (mut p2, mut p5) = (0usize, 0usize);
    while (&d % &two).is_zero() {
        d /= &two;
        p2 += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        p5 += 1;
    }
    let body = if d.is_one() {
        digits = digits.max(p2).max(p5);
        let scale = BigInt::from(10).pow(digits as u32);
        let scaled = a.numer() * &scale / a.denom();
        let int_part = &scaled / &scale;
        let frac = &scaled % &scale;
        if digits == 0 {
            format!("{int_part}.0")
        } else {
            let mut fs = format!("{:0>width$}", frac.to_string(), width = digits);
            while fs.ends_with('0') && fs.len() > 1 {
                fs.pop();
            }
            format!("{int_part}.{fs}")
        }
    } else {
        let sign = if neg { "-" } else { "" };
        return format!("({sign}{}.0 / {}.0)", a.numer(), a.denom());
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(true) => write!(f, "True"),
            Value::Bool(false) => write!(f, "False"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Real(r) => write!(f, "{}", fmt_rational(r)),
            Value::NegInf => write!(f, "-inf"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::None => write!(f, "None"),
            Value::Some(v) => write!(f, "{v}"),
            Value::Tuple(vs) => {
                write!(f, "(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                if vs.len() == 1 {
                    write!(f, ",")?;
                }
                write!(f, ")")
            }
            Value::List(vs) => {
                write!(f, "[")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_rendering() {
        assert_eq!(fmt_rational(&BigRational::from_integer(BigInt::from(90))), "90.0");
        assert_eq!(fmt_rational(&BigRational::new(BigInt::from(9), BigInt::from(10))), "0.9");
        assert_eq!(fmt_rational(&BigRational::new(BigInt::from(-181), BigInt::from(2))), "-90.5");
        assert_eq!(fmt_rational(&BigRational::new(BigInt::from(1), BigInt::from(3))), "(1.0 / 3.0)");
        assert_eq!(fmt_rational(&BigRational::new(BigInt::from(-1), BigInt::from(3))), "(-1.0 / 3.0)");
    }

    #[test]
    fn neg_inf_is_below_reals() {
        assert_eq!(Value::NegInf.num_cmp(&Value::real(-1000, 1)), Some(Ordering::Less));
        assert_eq!(Value::NegInf.num_cmp(&Value::NegInf), Some(Ordering::Equal));
        assert_eq!(Value::int(3).num_cmp(&Value::real(5, 2)), Some(Ordering::Greater));
    }

    #[test]
    fn type_display_uses_trailing_commas() {
        let t = Ty::Tuple(vec![Ty::Float, Ty::opt(Ty::Int)]);
        assert_eq!(t.to_string(), "(float,Optional[int],)");
    }
}
