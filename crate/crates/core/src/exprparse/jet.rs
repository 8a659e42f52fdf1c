//! Truncated Taylor series arithmetic.
//!
//! A [`Jet`] stores Taylor coefficients `c[k] = f^(k)(t0) / k!` rather than raw
//! derivatives, so that multiplication is a plain Cauchy convolution. The
//! coefficient type is itself generic over [`Scalar`], which makes
//! `Jet<Jet<f64>>` a bivariate jet: the outer series runs in one variable and
//! each coefficient is a series in another. That nesting is how mixed partial
//! derivatives (metric derivatives along a curve, second derivatives of an
//! immersion along a direction) are obtained without finite differences.
//!
//! A jet with a single coefficient is treated as an exact constant: combining
//! it with a longer jet pads it with zeros. Two non-constant jets of different
//! lengths combine to the shorter length.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Highest jet order accepted at the public evaluation boundary.
pub const MAX_ORDER: usize = 5;

/// Field-like numeric type accepted by the expression evaluator and the
/// geometry kernels. Implemented for `f64` and, recursively, for [`Jet`].
pub trait Scalar:
    Clone
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;

    /// The plain value at the expansion point (innermost constant term).
    fn value(&self) -> f64;

    fn is_finite(&self) -> bool;

    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
    fn sqrt(&self) -> Self;

    fn scale(&self, k: f64) -> Self {
        self.clone() * Self::from_f64(k)
    }

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn recip(&self) -> Self {
        Self::one() / self.clone()
    }

    fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        let mut base = self.clone();
        let mut e = n.unsigned_abs();
        let mut acc: Option<Self> = None;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    Some(a) => a * base.clone(),
                    None => base.clone(),
                });
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        let acc = acc.unwrap_or_else(Self::one);
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sinh(&self) -> Self {
        f64::sinh(*self)
    }
    fn cosh(&self) -> Self {
        f64::cosh(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
}

/// Truncated Taylor series with coefficients of type `T`.
#[derive(Clone, PartialEq)]
pub struct Jet<T = f64> {
    coeffs: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Jet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Jet").field(&self.coeffs).finish()
    }
}

fn combined_len(a: usize, b: usize) -> usize {
    if a == 1 {
        b
    } else if b == 1 {
        a
    } else {
        a.min(b)
    }
}

impl<T: Scalar> Jet<T> {
    /// Exact constant (all higher coefficients zero).
    pub fn constant(v: T) -> Self {
        Jet { coeffs: vec![v] }
    }

    /// Independent variable `v + 1·ε` truncated at `order`.
    pub fn variable(v: T, order: usize) -> Self {
        let mut coeffs = vec![T::zero(); order + 1];
        coeffs[0] = v;
        if order >= 1 {
            coeffs[1] = T::one();
        }
        Jet { coeffs }
    }

    /// Builds a jet from Taylor coefficients. An empty vector becomes the
    /// constant zero.
    pub fn from_coeffs(coeffs: Vec<T>) -> Self {
        if coeffs.is_empty() {
            Jet::constant(T::zero())
        } else {
            Jet { coeffs }
        }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() == 1
    }

    /// Coefficient `k`, zero beyond the stored length.
    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn base(&self) -> &T {
        &self.coeffs[0]
    }

    /// The `k`-th derivative at the expansion point, `k! · c[k]`.
    pub fn derivative(&self, k: usize) -> T {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.coeff(k).scale(fact)
    }

    /// The series of `d/dt`; its order is one less than this jet's.
    pub fn differentiate(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Jet::constant(T::zero());
        }
        let coeffs = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(k, c)| c.scale((k + 1) as f64))
            .collect();
        Jet { coeffs }
    }

    /// The antiderivative with constant term `c0`; its order is one more.
    pub fn integrate(&self, c0: T) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(c0);
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c.scale(1.0 / (k + 1) as f64));
        }
        Jet { coeffs }
    }

    /// Drops coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let n = (order + 1).min(self.coeffs.len());
        Jet {
            coeffs: self.coeffs[..n].to_vec(),
        }
    }

    /// Pads with zeros (or truncates) to exactly `order + 1` coefficients.
    pub fn to_order(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, T::zero());
        Jet { coeffs }
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        let n = combined_len(self.coeffs.len(), rhs.coeffs.len());
        let coeffs = (0..n)
            .map(|k| {
                let a = self.coeffs.get(k).cloned().unwrap_or_else(T::zero);
                let b = rhs.coeffs.get(k).cloned().unwrap_or_else(T::zero);
                f(&a, &b)
            })
            .collect();
        Jet { coeffs }
    }

    fn map_coeffs(&self, f: impl Fn(&T) -> T) -> Self {
        Jet {
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    fn mul_ref(&self, rhs: &Self) -> Self {
        if rhs.coeffs.len() == 1 {
            let b = &rhs.coeffs[0];
            return self.map_coeffs(|a| a.clone() * b.clone());
        }
        if self.coeffs.len() == 1 {
            let a = &self.coeffs[0];
            return rhs.map_coeffs(|b| a.clone() * b.clone());
        }
        let n = combined_len(self.coeffs.len(), rhs.coeffs.len());
        let coeffs = (0..n)
            .map(|k| {
                let mut acc = self.coeffs[0].clone() * rhs.coeffs[k].clone();
                for i in 1..=k {
                    acc = acc + self.coeffs[i].clone() * rhs.coeffs[k - i].clone();
                }
                acc
            })
            .collect();
        Jet { coeffs }
    }

    fn div_ref(&self, rhs: &Self) -> Self {
        if rhs.coeffs.len() == 1 {
            let b = &rhs.coeffs[0];
            return self.map_coeffs(|a| a.clone() / b.clone());
        }
        let n = combined_len(self.coeffs.len(), rhs.coeffs.len());
        let b0 = rhs.coeffs[0].clone();
        let mut out: Vec<T> = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = self.coeff(k);
            for j in 1..=k {
                acc = acc - rhs.coeffs[j].clone() * out[k - j].clone();
            }
            out.push(acc / b0.clone());
        }
        Jet { coeffs: out }
    }

    /// Simultaneous series of (sin, cos) or (sinh, cosh).
    fn trig_pair(&self, hyperbolic: bool) -> (Self, Self) {
        let a = &self.coeffs;
        let n = a.len();
        let (s0, c0) = if hyperbolic {
            (a[0].sinh(), a[0].cosh())
        } else {
            (a[0].sin(), a[0].cos())
        };
        let mut s = vec![s0];
        let mut c = vec![c0];
        for k in 1..n {
            let mut sk = T::zero();
            let mut ck = T::zero();
            for j in 1..=k {
                let w = a[j].scale(j as f64);
                sk = sk + w.clone() * c[k - j].clone();
                ck = ck + w * s[k - j].clone();
            }
            let inv_k = 1.0 / k as f64;
            s.push(sk.scale(inv_k));
            c.push(if hyperbolic {
                ck.scale(inv_k)
            } else {
                ck.scale(-inv_k)
            });
        }
        (Jet { coeffs: s }, Jet { coeffs: c })
    }
}

impl<T: Scalar> Add for Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: Self) -> Self {
        self.zip_with(&rhs, |a, b| a.clone() + b.clone())
    }
}

impl<T: Scalar> Sub for Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: Self) -> Self {
        self.zip_with(&rhs, |a, b| a.clone() - b.clone())
    }
}

impl<T: Scalar> Mul for Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: Self) -> Self {
        self.mul_ref(&rhs)
    }
}

impl<T: Scalar> Div for Jet<T> {
    type Output = Jet<T>;
    fn div(self, rhs: Self) -> Self {
        self.div_ref(&rhs)
    }
}

impl<T: Scalar> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Self {
        self.map_coeffs(|a| -a.clone())
    }
}

impl<T: Scalar> Scalar for Jet<T> {
    fn from_f64(v: f64) -> Self {
        Jet::constant(T::from_f64(v))
    }

    fn value(&self) -> f64 {
        self.coeffs[0].value()
    }

    fn is_finite(&self) -> bool {
        self.coeffs.iter().all(Scalar::is_finite)
    }

    fn scale(&self, k: f64) -> Self {
        self.map_coeffs(|a| a.scale(k))
    }

    fn exp(&self) -> Self {
        let a = &self.coeffs;
        let mut b = vec![a[0].exp()];
        for k in 1..a.len() {
            let mut acc = T::zero();
            for j in 1..=k {
                acc = acc + a[j].scale(j as f64) * b[k - j].clone();
            }
            b.push(acc.scale(1.0 / k as f64));
        }
        Jet { coeffs: b }
    }

    fn ln(&self) -> Self {
        let a = &self.coeffs;
        let mut b = vec![a[0].ln()];
        for k in 1..a.len() {
            let mut acc = T::zero();
            for j in 1..k {
                acc = acc + b[j].scale(j as f64) * a[k - j].clone();
            }
            b.push((a[k].clone() - acc.scale(1.0 / k as f64)) / a[0].clone());
        }
        Jet { coeffs: b }
    }

    fn sin(&self) -> Self {
        self.trig_pair(false).0
    }

    fn cos(&self) -> Self {
        self.trig_pair(false).1
    }

    fn sinh(&self) -> Self {
        self.trig_pair(true).0
    }

    fn cosh(&self) -> Self {
        self.trig_pair(true).1
    }

    fn sqrt(&self) -> Self {
        let a = &self.coeffs;
        let b0 = a[0].sqrt();
        let two_b0 = b0.scale(2.0);
        let mut b = vec![b0];
        for k in 1..a.len() {
            let mut acc = a[k].clone();
            for j in 1..k {
                acc = acc - b[j].clone() * b[k - j].clone();
            }
            b.push(acc / two_b0.clone());
        }
        Jet { coeffs: b }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-13);
        }
    }

    #[test]
    fn elementary_series_at_zero() {
        let t = Jet::variable(0.0, 4);
        close(t.cos().coeffs(), &[1.0, 0.0, -0.5, 0.0, 1.0 / 24.0]);
        close(t.sin().coeffs(), &[0.0, 1.0, 0.0, -1.0 / 6.0, 0.0]);
        close(t.exp().coeffs(), &[1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0]);
        close(t.sinh().coeffs(), &[0.0, 1.0, 0.0, 1.0 / 6.0, 0.0]);
        close(t.cosh().coeffs(), &[1.0, 0.0, 0.5, 0.0, 1.0 / 24.0]);
        let one_plus = Jet::constant(1.0) + t.clone();
        close(one_plus.ln().coeffs(), &[0.0, 1.0, -0.5, 1.0 / 3.0, -0.25]);
        close(
            one_plus.sqrt().coeffs(),
            &[1.0, 0.5, -0.125, 0.0625, -5.0 / 128.0],
        );
        let geo = Jet::constant(1.0) / (Jet::constant(1.0) - t);
        close(geo.coeffs(), &[1.0; 5]);
    }

    #[test]
    fn powi_matches_repeated_product() {
        let t = Jet::variable(1.5, 3);
        let cube = t.clone() * t.clone() * t.clone();
        close(t.powi(3).coeffs(), cube.coeffs());
        let inv = Jet::constant(1.0) / cube;
        close(t.powi(-3).coeffs(), inv.coeffs());
        close(t.powi(0).coeffs(), &[1.0]);
    }

    #[test]
    fn derivative_applies_factorial() {
        let t = Jet::variable(0.0, 5);
        let s = t.sin();
        assert_abs_diff_eq!(s.derivative(3), -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.derivative(5), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn constants_broadcast_and_mixed_orders_truncate() {
        let a = Jet::variable(2.0, 4);
        let b = Jet::variable(3.0, 2);
        assert_eq!((a.clone() * b).order(), 2);
        assert_eq!((a + Jet::constant(1.0)).order(), 4);
    }

    #[test]
    fn nested_jets_give_mixed_partials() {
        // f(x, y) = x^2 y at (1, 2): d2f/dxdy = 2x = 2
        let x = Jet::variable(Jet::constant(1.0), 1);
        let y = Jet::constant(Jet::variable(2.0, 1));
        let f = x.clone() * x * y;
        let fx = f.coeff(1);
        assert_abs_diff_eq!(fx.coeff(0), 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fx.coeff(1), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn integrate_inverts_differentiate() {
        let j = Jet::variable(0.3, 4).exp();
        let back = j.differentiate().integrate(j.coeff(0));
        close(back.coeffs(), j.coeffs());
    }
}
