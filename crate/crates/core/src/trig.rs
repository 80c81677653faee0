//! Exact constants and trigonometric coefficient functions of θ.
//!
//! A [`Surd`] is `num/den · √2^a · √3^b`; coefficient tables keep the
//! rational parts exact and only round when evaluated.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Surd {
    pub num: i64,
    pub den: i64,
    pub sqrt2: i32,
    pub sqrt3: i32,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Surd {
    pub const ZERO: Surd = Surd { num: 0, den: 1, sqrt2: 0, sqrt3: 0 };
    pub const ONE: Surd = Surd { num: 1, den: 1, sqrt2: 0, sqrt3: 0 };

    pub fn new(num: i64, den: i64, sqrt2: i32, sqrt3: i32) -> Self {
        assert!(den != 0, "zero denominator");
        let mut s = Self { num, den, sqrt2, sqrt3 };
        // pull even powers of the radicals into the rational part
        while s.sqrt2 >= 2 {
            s.num *= 2;
            s.sqrt2 -= 2;
        }
        while s.sqrt2 <= -2 {
            s.den *= 2;
            s.sqrt2 += 2;
        }
        while s.sqrt3 >= 2 {
            s.num *= 3;
            s.sqrt3 -= 2;
        }
        while s.sqrt3 <= -2 {
            s.den *= 3;
            s.sqrt3 += 2;
        }
        let g = gcd(s.num, s.den).max(1);
        s.num /= g;
        s.den /= g;
        if s.den < 0 {
            s.num = -s.num;
            s.den = -s.den;
        }
        s
    }

    pub fn int(n: i64) -> Self {
        Self::new(n, 1, 0, 0)
    }

    pub fn rat(num: i64, den: i64) -> Self {
        Self::new(num, den, 0, 0)
    }

    /// `num/den · √2`.
    pub fn r2(num: i64, den: i64) -> Self {
        Self::new(num, den, 1, 0)
    }

    /// `num/den · √3`.
    pub fn r3(num: i64, den: i64) -> Self {
        Self::new(num, den, 0, 1)
    }

    /// `num/den / √2`.
    pub fn over_r2(num: i64, den: i64) -> Self {
        Self::new(num, den, -1, 0)
    }

    /// `num/den / √3`.
    pub fn over_r3(num: i64, den: i64) -> Self {
        Self::new(num, den, 0, -1)
    }

    pub fn value(self) -> f64 {
        let r2 = std::f64::consts::SQRT_2.powi(self.sqrt2);
        let r3 = 3f64.sqrt().powi(self.sqrt3);
        self.num as f64 / self.den as f64 * r2 * r3
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }
}

impl Mul for Surd {
    type Output = Surd;
    fn mul(self, o: Surd) -> Surd {
        Surd::new(self.num * o.num, self.den * o.den, self.sqrt2 + o.sqrt2, self.sqrt3 + o.sqrt3)
    }
}

impl Neg for Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd { num: -self.num, ..self }
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.num)?;
        if self.den != 1 {
            write!(f, "/{}", self.den)?;
        }
        match self.sqrt2 {
            1 => write!(f, "*sqrt(2)")?,
            -1 => write!(f, "/sqrt(2)")?,
            _ => {}
        }
        match self.sqrt3 {
            1 => write!(f, "*sqrt(3)")?,
            -1 => write!(f, "/sqrt(3)")?,
            _ => {}
        }
        Ok(())
    }
}

/// Trigonometric expression in θ.
#[derive(Debug, Clone, PartialEq)]
pub enum Trig {
    Const(Surd),
    /// `sin(k θ)`
    Sin(Surd),
    /// `cos(k θ)`
    Cos(Surd),
    Sum(Vec<Trig>),
    Prod(Vec<Trig>),
    Scaled(Surd, Box<Trig>),
}

impl Trig {
    pub fn constant(s: Surd) -> Self {
        Trig::Const(s)
    }

    pub fn one() -> Self {
        Trig::Const(Surd::ONE)
    }

    pub fn sin(k: Surd) -> Self {
        Trig::Sin(k)
    }

    pub fn cos(k: Surd) -> Self {
        Trig::Cos(k)
    }

    pub fn scaled(self, c: Surd) -> Self {
        Trig::Scaled(c, Box::new(self))
    }

    pub fn pow(self, k: usize) -> Self {
        Trig::Prod(vec![self; k])
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            Trig::Const(c) => c.value(),
            Trig::Sin(k) => (k.value() * theta).sin(),
            Trig::Cos(k) => (k.value() * theta).cos(),
            Trig::Sum(v) => v.iter().map(|t| t.eval(theta)).sum(),
            Trig::Prod(v) => v.iter().map(|t| t.eval(theta)).product(),
            Trig::Scaled(c, t) => c.value() * t.eval(theta),
        }
    }
}

impl fmt::Display for Trig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, v: &[Trig], sep: &str| -> fmt::Result {
            write!(f, "(")?;
            for (i, t) in v.iter().enumerate() {
                if i > 0 {
                    write!(f, "{sep}")?;
                }
                write!(f, "{t}")?;
            }
            write!(f, ")")
        };
        match self {
            Trig::Const(c) => write!(f, "{c}"),
            Trig::Sin(k) => write!(f, "sin({k}*t)"),
            Trig::Cos(k) => write!(f, "cos({k}*t)"),
            Trig::Sum(v) => join(f, v, " + "),
            Trig::Prod(v) => join(f, v, " * "),
            Trig::Scaled(c, t) => write!(f, "{c}*{t}"),
        }
    }
}

impl Add for Trig {
    type Output = Trig;
    fn add(self, o: Trig) -> Trig {
        match self {
            Trig::Sum(mut v) => {
                v.push(o);
                Trig::Sum(v)
            }
            s => Trig::Sum(vec![s, o]),
        }
    }
}

impl Sub for Trig {
    type Output = Trig;
    fn sub(self, o: Trig) -> Trig {
        self + (-o)
    }
}

impl Neg for Trig {
    type Output = Trig;
    fn neg(self) -> Trig {
        self.scaled(Surd::int(-1))
    }
}

impl Mul for Trig {
    type Output = Trig;
    fn mul(self, o: Trig) -> Trig {
        match self {
            Trig::Prod(mut v) => {
                v.push(o);
                Trig::Prod(v)
            }
            s => Trig::Prod(vec![s, o]),
        }
    }
}

/// `c · sin(k θ)`
pub fn csin(c: Surd, k: Surd) -> Trig {
    Trig::sin(k).scaled(c)
}

/// `c · cos(k θ)`
pub fn ccos(c: Surd, k: Surd) -> Trig {
    Trig::cos(k).scaled(c)
}

pub fn konst(c: Surd) -> Trig {
    Trig::Const(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surd_normalizes() {
        let s = Surd::new(6, 4, 3, -2);
        assert_eq!(s, Surd::new(1, 1, 1, 0));
        assert!((s.value() - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!((Surd::over_r3(16, 25).value() - 16.0 / (25.0 * 3f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn expression_eval() {
        let e = csin(Surd::r2(2, 1), Surd::over_r2(1, 1)) - Trig::sin(Surd::ONE);
        let t = 0.37;
        let want = 2.0 * 2f64.sqrt() * (t / 2f64.sqrt()).sin() - t.sin();
        assert!((e.eval(t) - want).abs() < 1e-15);
        let sq = (Trig::cos(Surd::ONE) - konst(Surd::ONE)).pow(2);
        assert!((sq.eval(t) - (t.cos() - 1.0).powi(2)).abs() < 1e-15);
    }
}
