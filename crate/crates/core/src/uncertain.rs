use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A value with an uncorrelated 1σ uncertainty.
///
/// Arithmetic assumes independent errors: sums and differences combine
/// uncertainties in quadrature, scaling by an exact constant scales σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Uncertain {
    pub value: f64,
    pub sigma: f64,
}

impl Uncertain {
    pub const ZERO: Uncertain = Uncertain { value: 0.0, sigma: 0.0 };

    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma: sigma.abs() }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, sigma: 0.0 }
    }

    /// Quadrature sum of a sequence of independent values.
    pub fn sum<I: IntoIterator<Item = Uncertain>>(items: I) -> Self {
        items.into_iter().fold(Self::ZERO, |acc, x| acc + x)
    }

    /// True when `other` lies within `k` combined standard deviations.
    pub fn agrees_with(&self, other: &Uncertain, k: f64) -> bool {
        let s = self.sigma.hypot(other.sigma);
        (self.value - other.value).abs() <= k * s
    }
}

impl Add for Uncertain {
    type Output = Uncertain;
    fn add(self, rhs: Self) -> Self {
        Uncertain::new(self.value + rhs.value, self.sigma.hypot(rhs.sigma))
    }
}

impl Sub for Uncertain {
    type Output = Uncertain;
    fn sub(self, rhs: Self) -> Self {
        Uncertain::new(self.value - rhs.value, self.sigma.hypot(rhs.sigma))
    }
}

impl Neg for Uncertain {
    type Output = Uncertain;
    fn neg(self) -> Self {
        Uncertain::new(-self.value, self.sigma)
    }
}

impl Mul<f64> for Uncertain {
    type Output = Uncertain;
    fn mul(self, rhs: f64) -> Self {
        Uncertain::new(self.value * rhs, self.sigma * rhs.abs())
    }
}

impl Div<f64> for Uncertain {
    type Output = Uncertain;
    fn div(self, rhs: f64) -> Self {
        Uncertain::new(self.value / rhs, self.sigma / rhs.abs())
    }
}

impl fmt::Display for Uncertain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "{:.*} ± {:.*}", p, self.value, p, self.sigma),
            None => write!(f, "{} ± {}", self.value, self.sigma),
        }
    }
}
