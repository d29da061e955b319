//! Truncated bivariate Taylor series ("jets") for exact forward-mode
//! derivatives up to a fixed total order.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// Highest total derivative order carried.
pub const ORDER: usize = 5;
const LEN: usize = (ORDER + 1) * (ORDER + 2) / 2;

#[inline]
const fn idx(a: usize, b: usize) -> usize {
    let n = a + b;
    n * (n + 1) / 2 + b
}

/// Taylor coefficients `∂ˣᵃ∂ʸᵇ f / (a! b!)` at a base point, for `a + b ≤ ORDER`.
#[derive(Clone, Copy, PartialEq)]
pub struct Jet {
    c: [f64; LEN],
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Jet({} | {}, {})", self.value(), self.dx_value(), self.dy_value())
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Jet {
    pub const ZERO: Jet = Jet { c: [0.0; LEN] };

    pub fn constant(v: f64) -> Self {
        let mut j = Self::ZERO;
        j.c[0] = v;
        j
    }

    /// The coordinate function `x` (axis 0) or `y` (axis 1) around `at`.
    pub fn variable(at: f64, axis: usize) -> Self {
        let mut j = Self::constant(at);
        j.c[if axis == 0 { idx(1, 0) } else { idx(0, 1) }] = 1.0;
        j
    }

    /// Both coordinate jets at `p`.
    pub fn point(p: [f64; 2]) -> (Jet, Jet) {
        (Jet::variable(p[0], 0), Jet::variable(p[1], 1))
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn dx_value(&self) -> f64 {
        self.c[idx(1, 0)]
    }

    pub fn dy_value(&self) -> f64 {
        self.c[idx(0, 1)]
    }

    /// `∂ˣᵃ∂ʸᵇ f` at the base point.
    pub fn partial(&self, a: usize, b: usize) -> f64 {
        assert!(a + b <= ORDER, "derivative order exceeds jet order");
        self.c[idx(a, b)] * factorial(a) * factorial(b)
    }

    /// Partial derivative along an axis; loses one order of accuracy.
    pub fn d(&self, axis: usize) -> Jet {
        let mut out = Self::ZERO;
        for n in 0..ORDER {
            for b in 0..=n {
                let a = n - b;
                out.c[idx(a, b)] = if axis == 0 {
                    (a + 1) as f64 * self.c[idx(a + 1, b)]
                } else {
                    (b + 1) as f64 * self.c[idx(a, b + 1)]
                };
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = *self;
        out.c.iter_mut().for_each(|x| *x *= s);
        out
    }

    /// `Σ coeffs[k]·(self − value)^k`, for a function with Taylor
    /// coefficients `coeffs` at the value.
    fn compose(&self, coeffs: &[f64; ORDER + 1]) -> Jet {
        let mut h = *self;
        h.c[0] = 0.0;
        let mut r = Jet::constant(coeffs[ORDER]);
        for k in (0..ORDER).rev() {
            r = r * h;
            r.c[0] += coeffs[k];
        }
        r
    }

    pub fn recip(&self) -> Jet {
        let x = self.value();
        let mut c = [0.0; ORDER + 1];
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = if k % 2 == 0 { 1.0 } else { -1.0 } / x.powi(k as i32 + 1);
        }
        self.compose(&c)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut c = [0.0; ORDER + 1];
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = e / factorial(k);
        }
        self.compose(&c)
    }

    pub fn ln(&self) -> Jet {
        let x = self.value();
        let mut c = [0.0; ORDER + 1];
        c[0] = x.ln();
        for (k, ck) in c.iter_mut().enumerate().skip(1) {
            *ck = if k % 2 == 1 { 1.0 } else { -1.0 } / (k as f64 * x.powi(k as i32));
        }
        self.compose(&c)
    }

    /// Real power; the base value must be positive unless `p` is a
    /// non-negative integer.
    pub fn powf(&self, p: f64) -> Jet {
        let x = self.value();
        let mut c = [0.0; ORDER + 1];
        let mut binom = 1.0;
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = binom * x.powf(p - k as f64);
            binom *= (p - k as f64) / (k + 1) as f64;
        }
        self.compose(&c)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn sin(&self) -> Jet {
        self.trig(0)
    }

    pub fn cos(&self) -> Jet {
        self.trig(1)
    }

    fn trig(&self, shift: usize) -> Jet {
        let (s, co) = self.value().sin_cos();
        // Derivative cycle of sin: sin, cos, −sin, −cos.
        let cycle = [s, co, -s, -co];
        let mut c = [0.0; ORDER + 1];
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = cycle[(k + shift) % 4] / factorial(k);
        }
        self.compose(&c)
    }
}

impl From<f64> for Jet {
    fn from(v: f64) -> Self {
        Jet::constant(v)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        self += o;
        self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, o: Jet) {
        self.c.iter_mut().zip(o.c).for_each(|(a, b)| *a += b);
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, o: Jet) -> Jet {
        self -= o;
        self
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, o: Jet) {
        self.c.iter_mut().zip(o.c).for_each(|(a, b)| *a -= b);
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut out = Jet::ZERO;
        for n1 in 0..=ORDER {
            for b1 in 0..=n1 {
                let x = self.c[idx(n1 - b1, b1)];
                if x == 0.0 {
                    continue;
                }
                for n2 in 0..=ORDER - n1 {
                    for b2 in 0..=n2 {
                        out.c[idx(n1 - b1 + n2 - b2, b1 + b2)] += x * o.c[idx(n2 - b2, b2)];
                    }
                }
            }
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, o: f64) -> Jet {
        self.c[0] += o;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, o: f64) -> Jet {
        self.c[0] -= o;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, o: f64) -> Jet {
        self.scale(o)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        o.scale(self)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, o: f64) -> Jet {
        self.scale(1.0 / o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-11 * (1.0 + b.abs())
    }

    #[test]
    fn product_rule_and_mixed_partials() {
        let (x, y) = Jet::point([0.7, -0.3]);
        let f = x * x * y; // x²y
        assert!(close(f.value(), 0.49 * -0.3));
        assert!(close(f.partial(1, 0), 2.0 * 0.7 * -0.3));
        assert!(close(f.partial(1, 1), 1.4));
        assert!(close(f.partial(2, 1), 2.0));
        assert!(close(f.partial(3, 0), 0.0));
    }

    #[test]
    fn elementary_functions() {
        let (x, y) = Jet::point([0.4, 1.3]);
        let f = (x * y).exp();
        // ∂x∂y e^{xy} = (1 + xy) e^{xy}
        let xy: f64 = 0.4 * 1.3;
        assert!(close(f.partial(1, 1), (1.0 + xy) * xy.exp()));
        let g = (x.sin() * y.cos()).partial(2, 1);
        assert!(close(g, 0.4f64.sin() * 1.3f64.sin()));
        let h = y.ln().partial(0, 3);
        assert!(close(h, 2.0 / 1.3f64.powi(3)));
        let s = (x * x + y * y).sqrt();
        let r = (0.16f64 + 1.69).sqrt();
        assert!(close(s.partial(1, 0), 0.4 / r));
        let q = (Jet::constant(1.0) / y).partial(0, 2);
        assert!(close(q, 2.0 / 1.3f64.powi(3)));
        assert!(close(y.powf(-2.5).partial(0, 1), -2.5 * 1.3f64.powf(-3.5)));
    }

    #[test]
    fn differentiation_matches_partials() {
        let (x, y) = Jet::point([0.2, 0.9]);
        let f = (x * y * y).sin() + x.exp() * y;
        let fx = f.d(0);
        let fxy = fx.d(1);
        assert!(close(fx.value(), f.partial(1, 0)));
        assert!(close(fxy.value(), f.partial(1, 1)));
        assert!(close(fxy.partial(1, 1), f.partial(2, 2)));
    }
}
