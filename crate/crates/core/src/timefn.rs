//! Scalar functions of time from a small whitelist, with exact derivatives of
//! any order via truncated Taylor jets.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFn {
    Const(f64),
    T,
    Sin(Box<ScalarFn>),
    Cos(Box<ScalarFn>),
    Add(Box<ScalarFn>, Box<ScalarFn>),
    Mul(Box<ScalarFn>, Box<ScalarFn>),
    Scale(f64, Box<ScalarFn>),
}

impl ScalarFn {
    pub fn constant(c: f64) -> Self {
        ScalarFn::Const(c)
    }

    pub fn t() -> Self {
        ScalarFn::T
    }

    pub fn t_squared() -> Self {
        ScalarFn::Mul(Box::new(ScalarFn::T), Box::new(ScalarFn::T))
    }

    pub fn sin(inner: ScalarFn) -> Self {
        ScalarFn::Sin(Box::new(inner))
    }

    pub fn cos(inner: ScalarFn) -> Self {
        ScalarFn::Cos(Box::new(inner))
    }

    pub fn scale(self, k: f64) -> Self {
        ScalarFn::Scale(k, Box::new(self))
    }

    pub fn add(self, other: ScalarFn) -> Self {
        ScalarFn::Add(Box::new(self), Box::new(other))
    }

    pub fn mul(self, other: ScalarFn) -> Self {
        ScalarFn::Mul(Box::new(self), Box::new(other))
    }

    /// k·cos(ν t)
    pub fn cos_wave(k: f64, nu: f64) -> Self {
        ScalarFn::cos(ScalarFn::T.scale(nu)).scale(k)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ScalarFn::Const(c) => *c,
            ScalarFn::T => t,
            ScalarFn::Sin(f) => f.eval(t).sin(),
            ScalarFn::Cos(f) => f.eval(t).cos(),
            ScalarFn::Add(f, g) => f.eval(t) + g.eval(t),
            ScalarFn::Mul(f, g) => f.eval(t) * g.eval(t),
            ScalarFn::Scale(k, f) => k * f.eval(t),
        }
    }

    /// Taylor coefficients f^{(k)}(t)/k! for k = 0..=order.
    pub fn jet(&self, t: f64, order: usize) -> Vec<f64> {
        let n = order + 1;
        match self {
            ScalarFn::Const(c) => {
                let mut j = vec![0.0; n];
                j[0] = *c;
                j
            }
            ScalarFn::T => {
                let mut j = vec![0.0; n];
                j[0] = t;
                if n > 1 {
                    j[1] = 1.0;
                }
                j
            }
            ScalarFn::Add(f, g) => {
                let (a, b) = (f.jet(t, order), g.jet(t, order));
                a.iter().zip(&b).map(|(x, y)| x + y).collect()
            }
            ScalarFn::Scale(k, f) => f.jet(t, order).into_iter().map(|x| k * x).collect(),
            ScalarFn::Mul(f, g) => {
                let (a, b) = (f.jet(t, order), g.jet(t, order));
                (0..n).map(|k| (0..=k).map(|i| a[i] * b[k - i]).sum()).collect()
            }
            ScalarFn::Sin(f) | ScalarFn::Cos(f) => {
                let u = f.jet(t, order);
                let mut s = vec![0.0; n];
                let mut c = vec![0.0; n];
                s[0] = u[0].sin();
                c[0] = u[0].cos();
                for k in 1..n {
                    let mut sk = 0.0;
                    let mut ck = 0.0;
                    for j in 1..=k {
                        sk += j as f64 * u[j] * c[k - j];
                        ck -= j as f64 * u[j] * s[k - j];
                    }
                    s[k] = sk / k as f64;
                    c[k] = ck / k as f64;
                }
                if matches!(self, ScalarFn::Sin(_)) {
                    s
                } else {
                    c
                }
            }
        }
    }

    /// n-th derivative at t.
    pub fn derivative(&self, t: f64, n: usize) -> f64 {
        if n == 0 {
            return self.eval(t);
        }
        let j = self.jet(t, n);
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        j[n] * fact
    }

    /// Parse a whitelisted selector: `t`, `t^2`, `cos t`, `sin t`, or a numeric constant.
    pub fn parse_selector(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|ch| !ch.is_whitespace()).collect::<String>().to_lowercase();
        match norm.as_str() {
            "t" => return Ok(ScalarFn::T),
            "t^2" | "t²" | "t*t" => return Ok(ScalarFn::t_squared()),
            "cost" | "cos(t)" => return Ok(ScalarFn::cos(ScalarFn::T)),
            "sint" | "sin(t)" => return Ok(ScalarFn::sin(ScalarFn::T)),
            _ => {}
        }
        let num = norm.strip_prefix("const:").unwrap_or(&norm);
        match num.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(ScalarFn::Const(v)),
            _ => Err(Error::InvalidArgument(format!(
                "`{s}` is not one of t, t^2, cos t, sin t, or a numeric constant"
            ))),
        }
    }
}

impl fmt::Display for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFn::Const(c) => write!(f, "{c}"),
            ScalarFn::T => write!(f, "t"),
            ScalarFn::Sin(g) => write!(f, "sin({g})"),
            ScalarFn::Cos(g) => write!(f, "cos({g})"),
            ScalarFn::Add(a, b) => write!(f, "({a} + {b})"),
            ScalarFn::Mul(a, b) => write!(f, "({a} * {b})"),
            ScalarFn::Scale(k, g) => write!(f, "{k}*{g}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn whitelist_parsing() {
        assert_eq!(ScalarFn::parse_selector("t").unwrap(), ScalarFn::T);
        assert_eq!(ScalarFn::parse_selector("cos t").unwrap(), ScalarFn::cos(ScalarFn::T));
        assert_eq!(ScalarFn::parse_selector("Sin(t)").unwrap(), ScalarFn::sin(ScalarFn::T));
        assert_eq!(ScalarFn::parse_selector("t^2").unwrap(), ScalarFn::t_squared());
        assert_eq!(ScalarFn::parse_selector("2.5").unwrap(), ScalarFn::Const(2.5));
        assert_eq!(ScalarFn::parse_selector("const:1e-8").unwrap(), ScalarFn::Const(1e-8));
        assert!(ScalarFn::parse_selector("exp(t)").is_err());
        assert!(ScalarFn::parse_selector("nan").is_err());
    }

    #[test]
    fn closed_form_derivatives() {
        let t = 0.73;
        let f = ScalarFn::cos(ScalarFn::cos(ScalarFn::T));
        // d/dt cos(cos t) = sin(cos t) sin t
        assert_abs_diff_eq!(f.derivative(t, 1), t.cos().sin() * t.sin(), epsilon = 1e-15);
        // d²/dt²: cos(cos t) (−sin² t) ... computed by hand
        let d2 = -t.cos().cos() * t.sin().powi(2) + t.cos().sin() * t.cos();
        assert_abs_diff_eq!(f.derivative(t, 2), d2, epsilon = 1e-14);

        let w = ScalarFn::cos_wave(2.0, 3.0);
        for n in 0..6 {
            let expect = 2.0 * 3f64.powi(n as i32) * (3.0 * t + n as f64 * std::f64::consts::FRAC_PI_2).cos();
            assert_abs_diff_eq!(w.derivative(t, n), expect, epsilon = 1e-11);
        }
        let sq = ScalarFn::t_squared();
        assert_eq!(sq.derivative(t, 1), 2.0 * t);
        assert_eq!(sq.derivative(t, 2), 2.0);
        assert_eq!(sq.derivative(t, 3), 0.0);
        let prod = ScalarFn::T.mul(ScalarFn::sin(ScalarFn::T)).add(ScalarFn::Const(4.0));
        assert_abs_diff_eq!(prod.derivative(t, 1), t.sin() + t * t.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(prod.derivative(t, 2), 2.0 * t.cos() - t * t.sin(), epsilon = 1e-14);
    }

    #[test]
    fn jets_match_finite_differences() {
        let f = ScalarFn::sin(ScalarFn::t_squared()).mul(ScalarFn::cos(ScalarFn::T.scale(0.5)));
        let h = 1e-4;
        for &t in &[-1.2, 0.0, 0.4, 2.2] {
            let fd1 = (f.eval(t + h) - f.eval(t - h)) / (2.0 * h);
            let fd2 = (f.eval(t + h) - 2.0 * f.eval(t) + f.eval(t - h)) / (h * h);
            assert_abs_diff_eq!(f.derivative(t, 1), fd1, epsilon = 1e-7);
            assert_abs_diff_eq!(f.derivative(t, 2), fd2, epsilon = 1e-5);
        }
    }
}
