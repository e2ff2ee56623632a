//! Hyper-dual numbers: exact first and mixed second derivatives by forward-mode AD.
//!
//! A hyper-dual number is `re + e1·ε₁ + e2·ε₂ + e12·ε₁ε₂` with `ε₁² = ε₂² = 0`.
//! Seeding `ε₁` along direction `u` and `ε₂` along direction `w` and evaluating
//! a function `f` yields `f`, `∂_u f`, `∂_w f` and `∂_u ∂_w f` without truncation
//! error. Comparison operators look at the real part only.

use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_traits::{Float, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default)]
pub struct HyperDual<T> {
    pub re: T,
    pub e1: T,
    pub e2: T,
    pub e12: T,
}

impl<T: Real> HyperDual<T> {
    pub fn new(re: T, e1: T, e2: T, e12: T) -> Self {
        Self { re, e1, e2, e12 }
    }

    pub fn constant(re: T) -> Self {
        Self::new(re, T::zero(), T::zero(), T::zero())
    }

    /// Applies a scalar function given its value and first two derivatives at `re`.
    #[inline]
    fn chain(self, f: T, df: T, d2f: T) -> Self {
        Self {
            re: f,
            e1: df * self.e1,
            e2: df * self.e2,
            e12: df * self.e12 + d2f * self.e1 * self.e2,
        }
    }

    fn is_constant(&self) -> bool {
        self.e1 == T::zero() && self.e2 == T::zero() && self.e12 == T::zero()
    }
}

impl<T: Real> PartialEq for HyperDual<T> {
    fn eq(&self, other: &Self) -> bool {
        self.re == other.re
    }
}

impl<T: Real> PartialOrd for HyperDual<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.re.partial_cmp(&other.re)
    }
}

impl<T: Real> fmt::Display for HyperDual<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}ε₁ + {}ε₂ + {}ε₁ε₂", self.re, self.e1, self.e2, self.e12)
    }
}

impl<T: Real> Add for HyperDual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.e1 + o.e1, self.e2 + o.e2, self.e12 + o.e12)
    }
}

impl<T: Real> Sub for HyperDual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.e1 - o.e1, self.e2 - o.e2, self.e12 - o.e12)
    }
}

impl<T: Real> Mul for HyperDual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.re * o.re,
            self.re * o.e1 + self.e1 * o.re,
            self.re * o.e2 + self.e2 * o.re,
            self.re * o.e12 + self.e1 * o.e2 + self.e2 * o.e1 + self.e12 * o.re,
        )
    }
}

impl<T: Real> Div for HyperDual<T> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<T: Real> Rem for HyperDual<T> {
    type Output = Self;
    /// Remainder keeps the derivative parts of `self` (`d(x mod c)/dx = 1` almost everywhere).
    fn rem(self, o: Self) -> Self {
        Self::new(self.re % o.re, self.e1, self.e2, self.e12)
    }
}

impl<T: Real> Neg for HyperDual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.e1, -self.e2, -self.e12)
    }
}

impl<T: Real> AddAssign for HyperDual<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}
impl<T: Real> SubAssign for HyperDual<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}
impl<T: Real> MulAssign for HyperDual<T> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}
impl<T: Real> DivAssign for HyperDual<T> {
    fn div_assign(&mut self, o: Self) {
        *self = *self / o;
    }
}

impl<T: Real> Zero for HyperDual<T> {
    fn zero() -> Self {
        Self::constant(T::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero()
    }
}

impl<T: Real> One for HyperDual<T> {
    fn one() -> Self {
        Self::constant(T::one())
    }
}

impl<T: Real> Num for HyperDual<T> {
    type FromStrRadixErr = <T as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        T::from_str_radix(s, radix).map(Self::constant)
    }
}

impl<T: Real> ToPrimitive for HyperDual<T> {
    fn to_i64(&self) -> Option<i64> {
        self.re.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.re.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        self.re.to_f64()
    }
}

impl<T: Real> NumCast for HyperDual<T> {
    fn from<N: ToPrimitive>(n: N) -> Option<Self> {
        <T as NumCast>::from(n).map(Self::constant)
    }
}

impl<T: Real> FromPrimitive for HyperDual<T> {
    fn from_i64(n: i64) -> Option<Self> {
        T::from_i64(n).map(Self::constant)
    }
    fn from_u64(n: u64) -> Option<Self> {
        T::from_u64(n).map(Self::constant)
    }
    fn from_f64(n: f64) -> Option<Self> {
        T::from_f64(n).map(Self::constant)
    }
}

impl<T: Real> Float for HyperDual<T> {
    fn nan() -> Self {
        Self::constant(T::nan())
    }
    fn infinity() -> Self {
        Self::constant(T::infinity())
    }
    fn neg_infinity() -> Self {
        Self::constant(T::neg_infinity())
    }
    fn neg_zero() -> Self {
        Self::constant(T::neg_zero())
    }
    fn min_value() -> Self {
        Self::constant(T::min_value())
    }
    fn min_positive_value() -> Self {
        Self::constant(T::min_positive_value())
    }
    fn max_value() -> Self {
        Self::constant(T::max_value())
    }
    fn epsilon() -> Self {
        Self::constant(T::epsilon())
    }
    fn is_nan(self) -> bool {
        self.re.is_nan() || self.e1.is_nan() || self.e2.is_nan() || self.e12.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.re.is_infinite() || self.e1.is_infinite() || self.e2.is_infinite() || self.e12.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.e1.is_finite() && self.e2.is_finite() && self.e12.is_finite()
    }
    fn is_normal(self) -> bool {
        self.re.is_normal()
    }
    fn classify(self) -> FpCategory {
        self.re.classify()
    }
    fn floor(self) -> Self {
        Self::constant(self.re.floor())
    }
    fn ceil(self) -> Self {
        Self::constant(self.re.ceil())
    }
    fn round(self) -> Self {
        Self::constant(self.re.round())
    }
    fn trunc(self) -> Self {
        Self::constant(self.re.trunc())
    }
    fn fract(self) -> Self {
        Self::new(self.re.fract(), self.e1, self.e2, self.e12)
    }
    fn abs(self) -> Self {
        if self.re < T::zero() {
            -self
        } else {
            self
        }
    }
    fn signum(self) -> Self {
        Self::constant(self.re.signum())
    }
    fn is_sign_positive(self) -> bool {
        self.re.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.re.is_sign_negative()
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        let p = self * a + b;
        Self { re: self.re.mul_add(a.re, b.re), ..p }
    }
    fn recip(self) -> Self {
        let r = self.re.recip();
        self.chain(r, -r * r, T::two() * r * r * r)
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::one(),
            1 => self,
            _ => {
                let nf = T::from_i32(n).unwrap();
                let x = self.re;
                self.chain(
                    x.powi(n),
                    nf * x.powi(n - 1),
                    nf * (nf - T::one()) * x.powi(n - 2),
                )
            }
        }
    }
    fn powf(self, n: Self) -> Self {
        if n.is_constant() {
            let p = n.re;
            let x = self.re;
            if p == T::zero() {
                return Self::one();
            }
            if p == T::one() {
                return self;
            }
            self.chain(
                x.powf(p),
                p * x.powf(p - T::one()),
                p * (p - T::one()) * x.powf(p - T::two()),
            )
        } else {
            (n * self.ln()).exp()
        }
    }
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        let d = T::half() / r;
        self.chain(r, d, -d / (T::two() * self.re))
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e, e)
    }
    fn exp2(self) -> Self {
        let e = self.re.exp2();
        let l = T::two().ln();
        self.chain(e, e * l, e * l * l)
    }
    fn ln(self) -> Self {
        let r = self.re.recip();
        self.chain(self.re.ln(), r, -r * r)
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        self.ln() / Self::constant(T::two().ln())
    }
    fn log10(self) -> Self {
        self.ln() / Self::constant(T::lit(10.0).ln())
    }
    fn max(self, o: Self) -> Self {
        if self.re >= o.re {
            self
        } else {
            o
        }
    }
    fn min(self, o: Self) -> Self {
        if self.re <= o.re {
            self
        } else {
            o
        }
    }
    fn abs_sub(self, o: Self) -> Self {
        if self.re > o.re {
            self - o
        } else {
            Self::zero()
        }
    }
    fn cbrt(self) -> Self {
        let c = self.re.cbrt();
        let third = T::one() / T::lit(3.0);
        let d = third * c / self.re;
        self.chain(c, d, -T::two() * third * d / self.re)
    }
    fn hypot(self, o: Self) -> Self {
        (self * self + o * o).sqrt()
    }
    fn sin(self) -> Self {
        let (s, c) = self.re.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.re.sin_cos();
        self.chain(c, -s, -c)
    }
    fn tan(self) -> Self {
        let t = self.re.tan();
        let sec2 = T::one() + t * t;
        self.chain(t, sec2, T::two() * t * sec2)
    }
    fn asin(self) -> Self {
        let x = self.re;
        let q = T::one() - x * x;
        let d = q.sqrt().recip();
        self.chain(x.asin(), d, x * d / q)
    }
    fn acos(self) -> Self {
        let x = self.re;
        let q = T::one() - x * x;
        let d = q.sqrt().recip();
        self.chain(x.acos(), -d, -x * d / q)
    }
    fn atan(self) -> Self {
        let x = self.re;
        let d = (T::one() + x * x).recip();
        self.chain(x.atan(), d, -T::two() * x * d * d)
    }
    fn atan2(self, o: Self) -> Self {
        let r = (self / o).atan();
        Self::new(self.re.atan2(o.re), r.e1, r.e2, r.e12)
    }
    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
    fn exp_m1(self) -> Self {
        let e = self.re.exp();
        self.chain(self.re.exp_m1(), e, e)
    }
    fn ln_1p(self) -> Self {
        let r = (T::one() + self.re).recip();
        self.chain(self.re.ln_1p(), r, -r * r)
    }
    fn sinh(self) -> Self {
        let (s, c) = (self.re.sinh(), self.re.cosh());
        self.chain(s, c, s)
    }
    fn cosh(self) -> Self {
        let (s, c) = (self.re.sinh(), self.re.cosh());
        self.chain(c, s, c)
    }
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        let d = T::one() - t * t;
        self.chain(t, d, -T::two() * t * d)
    }
    fn asinh(self) -> Self {
        let x = self.re;
        let q = T::one() + x * x;
        let d = q.sqrt().recip();
        self.chain(x.asinh(), d, -x * d / q)
    }
    fn acosh(self) -> Self {
        let x = self.re;
        let q = x * x - T::one();
        let d = q.sqrt().recip();
        self.chain(x.acosh(), d, -x * d / q)
    }
    fn atanh(self) -> Self {
        let x = self.re;
        let d = (T::one() - x * x).recip();
        self.chain(x.atanh(), d, T::two() * x * d * d)
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        self.re.integer_decode()
    }
}

impl<T: Real> Real for HyperDual<T> {}

/// Second directional derivative `∂_u ∂_w f(x)`, exact up to rounding.
pub fn mixed_second<T: Real, F>(f: F, x: &[T], u: &[T], w: &[T]) -> T
where
    F: Fn(&[HyperDual<T>]) -> HyperDual<T>,
{
    let args: Vec<HyperDual<T>> = x
        .iter()
        .zip(u)
        .zip(w)
        .map(|((&xi, &ui), &wi)| HyperDual::new(xi, ui, wi, T::zero()))
        .collect();
    f(&args).e12
}

/// Full Hessian of `f` at `x` via `n(n+1)/2` hyper-dual evaluations.
pub fn hessian<T: Real, F>(f: F, x: &[T]) -> Vec<Vec<T>>
where
    F: Fn(&[HyperDual<T>]) -> HyperDual<T>,
{
    let n = x.len();
    let mut h = vec![vec![T::zero(); n]; n];
    let unit = |k: usize| -> Vec<T> { (0..n).map(|i| if i == k { T::one() } else { T::zero() }).collect() };
    for i in 0..n {
        let ui = unit(i);
        for j in i..n {
            let v = mixed_second(&f, x, &ui, &unit(j));
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(x: f64) -> HyperDual<f64> {
        HyperDual::new(x, 1.0, 1.0, 0.0)
    }

    #[test]
    fn second_derivative_of_power() {
        // f = x^3 → f'' = 6x
        let y = d(2.0).powi(3);
        assert_eq!(y.re, 8.0);
        assert_eq!(y.e1, 12.0);
        assert_eq!(y.e12, 12.0);
        let z = d(2.0).powf(HyperDual::constant(3.0));
        assert!((z.e12 - 12.0).abs() < 1e-12);
    }

    #[test]
    fn elementary_functions_match_closed_forms() {
        let x = 0.7;
        let checks: Vec<(HyperDual<f64>, f64, f64)> = vec![
            (d(x).exp(), x.exp(), x.exp()),
            (d(x).ln(), 1.0 / x, -1.0 / (x * x)),
            (d(x).sqrt(), 0.5 / x.sqrt(), -0.25 * x.powf(-1.5)),
            (d(x).sin(), x.cos(), -x.sin()),
            (d(x).recip(), -1.0 / (x * x), 2.0 / (x * x * x)),
            (d(x).cbrt(), x.powf(-2.0 / 3.0) / 3.0, -2.0 / 9.0 * x.powf(-5.0 / 3.0)),
            (d(x).tanh(), 1.0 - x.tanh().powi(2), -2.0 * x.tanh() * (1.0 - x.tanh().powi(2))),
        ];
        for (y, d1, d2) in checks {
            assert!((y.e1 - d1).abs() < 1e-12, "{y} vs {d1}");
            assert!((y.e12 - d2).abs() < 1e-12, "{y} vs {d2}");
        }
    }

    #[test]
    fn variable_exponent_goes_through_exp_ln() {
        // f = x^x, f' = x^x (ln x + 1), f'' = x^x ((ln x + 1)^2 + 1/x)
        let x = 1.3;
        let y = d(x).powf(d(x));
        let f = x.powf(x);
        assert!((y.e1 - f * (x.ln() + 1.0)).abs() < 1e-12);
        assert!((y.e12 - f * ((x.ln() + 1.0).powi(2) + 1.0 / x)).abs() < 1e-12);
    }

    #[test]
    fn hessian_of_quadratic_form() {
        let a = [[2.0, 1.0], [1.0, -3.0]];
        let h = hessian(
            |v: &[HyperDual<f64>]| {
                let mut acc = HyperDual::zero();
                for i in 0..2 {
                    for j in 0..2 {
                        acc += HyperDual::constant(a[i][j]) * v[i] * v[j];
                    }
                }
                acc
            },
            &[0.3, -1.1],
        );
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[i][j] - 2.0 * a[i][j]).abs() < 1e-14);
            }
        }
    }
}
