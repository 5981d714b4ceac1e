//! Truncated bivariate Taylor series (order 4) for exact derivatives of
//! the analytic potentials.

use std::ops::{Add, Mul, Neg, Sub};

pub const ORDER: usize = 4;
const LEN: usize = (ORDER + 1) * (ORDER + 2) / 2;

/// Slot of the s^i t^j coefficient.
const fn idx(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

const FACT: [f64; ORDER + 1] = [1.0, 1.0, 2.0, 6.0, 24.0];

/// f(s0 + s, t0 + t) expanded in (s, t) up to total degree 4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    c: [f64; LEN],
}

impl Jet2 {
    pub const ZERO: Jet2 = Jet2 { c: [0.0; LEN] };

    pub fn constant(a: f64) -> Self {
        let mut j = Self::ZERO;
        j.c[0] = a;
        j
    }

    /// a + da_s·s + da_t·t.
    pub fn linear(a: f64, da_s: f64, da_t: f64) -> Self {
        let mut j = Self::constant(a);
        j.c[idx(1, 0)] = da_s;
        j.c[idx(0, 1)] = da_t;
        j
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        assert!(i + j <= ORDER, "order {} exceeds {ORDER}", i + j);
        self.c[idx(i, j)]
    }

    /// ∂ⁱ_s ∂ʲ_t at the expansion point.
    pub fn derivative(&self, i: usize, j: usize) -> f64 {
        self.coefficient(i, j) * FACT[i] * FACT[j]
    }

    pub fn scale(mut self, k: f64) -> Self {
        self.c.iter_mut().for_each(|x| *x *= k);
        self
    }

    /// self + k·other
    pub fn add_scaled(&mut self, k: f64, other: &Jet2) {
        for (a, b) in self.c.iter_mut().zip(other.c.iter()) {
            *a += k * b;
        }
    }

    fn series(self, coeffs: [f64; ORDER + 1]) -> Self {
        // Σ coeffs[k]·h^k with h the non-constant part.
        let mut h = self;
        h.c[0] = 0.0;
        let mut out = Jet2::constant(coeffs[0]);
        let mut p = Jet2::constant(1.0);
        for &ck in &coeffs[1..] {
            p = p * h;
            out.add_scaled(ck, &p);
        }
        out
    }

    pub fn exp(self) -> Self {
        let e = self.c[0].exp();
        self.series([e, e, e / 2.0, e / 6.0, e / 24.0])
    }

    pub fn recip(self) -> Self {
        let a = self.c[0];
        let r = 1.0 / a;
        self.series([r, -r * r, r * r * r, -r.powi(4), r.powi(5)])
    }

    pub fn square(self) -> Self {
        self * self
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(mut self, rhs: Jet2) -> Jet2 {
        self.add_scaled(1.0, &rhs);
        self
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(mut self, rhs: Jet2) -> Jet2 {
        self.add_scaled(-1.0, &rhs);
        self
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(mut self, rhs: f64) -> Jet2 {
        self.c[0] += rhs;
        self
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: f64) -> Jet2 {
        self.scale(rhs)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        let mut out = Jet2::ZERO;
        for d1 in 0..=ORDER {
            for j1 in 0..=d1 {
                let a = self.c[idx(d1 - j1, j1)];
                if a == 0.0 {
                    continue;
                }
                for d2 in 0..=ORDER - d1 {
                    for j2 in 0..=d2 {
                        out.c[idx(d1 - j1 + d2 - j2, j1 + j2)] += a * rhs.c[idx(d2 - j2, j2)];
                    }
                }
            }
        }
        out
    }
}
