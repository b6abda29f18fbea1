//! Second-order forward-mode automatic differentiation.
//!
//! A [`ScalarJet`] carries the value of a scalar field at a point together
//! with its gradient and Hessian with respect to the chart coordinates.
//! Arithmetic on jets is the truncated Taylor arithmetic of order two, so
//! composing jets gives exact first and second partials (up to rounding).

use serde::Serialize;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarJet {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Row-major `n x n`.
    pub hess: Vec<f64>,
}

impl ScalarJet {
    pub fn constant(value: f64, n: usize) -> Self {
        Self {
            value,
            grad: vec![0.0; n],
            hess: vec![0.0; n * n],
        }
    }

    /// The coordinate function `x^index` seeded at `value`.
    pub fn variable(value: f64, index: usize, n: usize) -> Self {
        let mut jet = Self::constant(value, n);
        jet.grad[index] = 1.0;
        jet
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    #[inline]
    pub fn d2(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|x| x.is_finite())
            && self.hess.iter().all(|x| x.is_finite())
    }

    /// Applies a univariate function given its value and first two derivatives
    /// at `self.value`.
    pub fn chain(&self, f: f64, df: f64, d2f: f64) -> Self {
        let n = self.dim();
        let grad = self.grad.iter().map(|g| df * g).collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = df * self.hess[i * n + j] + d2f * self.grad[i] * self.grad[j];
            }
        }
        Self {
            value: f,
            grad,
            hess,
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            value: self.value * k,
            grad: self.grad.iter().map(|g| g * k).collect(),
            hess: self.hess.iter().map(|h| h * k).collect(),
        }
    }

    pub fn recip(&self) -> Self {
        let v = self.value;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn tan(&self) -> Self {
        let t = self.value.tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }

    pub fn sinh(&self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(s, c, s)
    }

    pub fn cosh(&self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(c, s, c)
    }

    pub fn tanh(&self) -> Self {
        let t = self.value.tanh();
        let sech2 = 1.0 - t * t;
        self.chain(t, sech2, -2.0 * t * sech2)
    }

    pub fn abs(&self) -> Self {
        let s = if self.value < 0.0 { -1.0 } else { 1.0 };
        self.chain(self.value.abs(), s, 0.0)
    }

    /// `self^k` for a constant exponent. Integer exponents use `powi` so
    /// negative bases stay finite.
    pub fn powf(&self, k: f64) -> Self {
        let v = self.value;
        if k == 0.0 {
            return Self::constant(1.0, self.dim());
        }
        if k.fract() == 0.0 && k.abs() < i32::MAX as f64 {
            let ki = k as i32;
            let f = v.powi(ki);
            let df = k * v.powi(ki - 1);
            let d2f = if ki == 1 { 0.0 } else { k * (k - 1.0) * v.powi(ki - 2) };
            return self.chain(f, df, d2f);
        }
        let f = v.powf(k);
        self.chain(f, k * v.powf(k - 1.0), k * (k - 1.0) * v.powf(k - 2.0))
    }

    /// General `self^other`, through `exp(other * ln(self))` when the exponent varies.
    pub fn pow(&self, other: &Self) -> Self {
        if other.grad.iter().all(|g| *g == 0.0) && other.hess.iter().all(|h| *h == 0.0) {
            return self.powf(other.value);
        }
        (other * &self.ln()).exp()
    }
}

impl Add for &ScalarJet {
    type Output = ScalarJet;
    fn add(self, rhs: &ScalarJet) -> ScalarJet {
        ScalarJet {
            value: self.value + rhs.value,
            grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| a + b).collect(),
            hess: self.hess.iter().zip(&rhs.hess).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ScalarJet {
    type Output = ScalarJet;
    fn sub(self, rhs: &ScalarJet) -> ScalarJet {
        ScalarJet {
            value: self.value - rhs.value,
            grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| a - b).collect(),
            hess: self.hess.iter().zip(&rhs.hess).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ScalarJet {
    type Output = ScalarJet;
    fn mul(self, rhs: &ScalarJet) -> ScalarJet {
        let n = self.dim();
        let (a, b) = (self.value, rhs.value);
        let grad = (0..n).map(|i| a * rhs.grad[i] + b * self.grad[i]).collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                hess[k] = a * rhs.hess[k]
                    + b * self.hess[k]
                    + self.grad[i] * rhs.grad[j]
                    + rhs.grad[i] * self.grad[j];
            }
        }
        ScalarJet {
            value: a * b,
            grad,
            hess,
        }
    }
}

impl Div for &ScalarJet {
    type Output = ScalarJet;
    fn div(self, rhs: &ScalarJet) -> ScalarJet {
        self * &rhs.recip()
    }
}

impl Neg for &ScalarJet {
    type Output = ScalarJet;
    fn neg(self) -> ScalarJet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for ScalarJet {
            type Output = ScalarJet;
            fn $m(self, rhs: ScalarJet) -> ScalarJet {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);
