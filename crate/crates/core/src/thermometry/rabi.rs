use super::ThermoError;

/// Generalized Laguerre polynomial L_n^α(x) by upward recurrence.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Signed coupling factor D_{n,κ,η} for |n⟩ → |n+κ⟩ relative to the bare
/// carrier rate. Zero when n + κ < 0.
pub fn coupling_factor(n: usize, kappa: i32, eta: f64) -> f64 {
    let m = n as i64 + kappa as i64;
    if m < 0 {
        return 0.0;
    }
    let (lo, hi) = if (m as usize) < n { (m as usize, n) } else { (n, m as usize) };
    let k = hi - lo;
    let ratio: f64 = (lo + 1..=hi).map(|j| 1.0 / (j as f64).sqrt()).product();
    let x = eta * eta;
    (-x / 2.0).exp() * ratio * eta.powi(k as i32) * laguerre(lo, k as f64, x)
}

/// Rabi rate Ω_{n,κ} (same units as `omega`), taken as a magnitude.
pub fn rabi_frequency(n: usize, kappa: i32, eta: f64, omega: f64) -> Result<f64, ThermoError> {
    if (n as i64) + (kappa as i64) < 0 {
        return Err(ThermoError::InvalidParams(format!("no Fock state {n}{kappa:+}")));
    }
    Ok((omega * coupling_factor(n, kappa, eta)).abs())
}

/// D_{n,κ,η} for n = 0..=max in one pass.
pub fn coupling_table(max: usize, kappa: i32, eta: f64) -> Vec<f64> {
    (0..=max).map(|n| coupling_factor(n, kappa, eta)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_low_orders() {
        let x = 0.37;
        assert_eq!(laguerre(0, 1.0, x), 1.0);
        assert!((laguerre(1, 1.0, x) - (2.0 - x)).abs() < 1e-15);
        assert!((laguerre(2, 0.0, x) - (x * x - 4.0 * x + 2.0) / 2.0).abs() < 1e-15);
        assert!((laguerre(3, 1.0, x) - (-x.powi(3) + 12.0 * x * x - 36.0 * x + 24.0) / 6.0).abs() < 1e-13);
    }

    #[test]
    fn rabi_examples() {
        let om = 2.0e5;
        assert_eq!(rabi_frequency(3, 0, 0.0, om).unwrap(), om);
        assert_eq!(rabi_frequency(3, 1, 0.0, om).unwrap(), 0.0);
        let eta: f64 = 0.25;
        assert!((rabi_frequency(0, 1, eta, om).unwrap() - om * eta * (-eta * eta / 2.0).exp()).abs() < 1e-9);
        assert!(rabi_frequency(0, -1, eta, om).is_err());
        assert_eq!(coupling_factor(0, -1, eta), 0.0);
    }

    #[test]
    fn red_and_blue_are_symmetric() {
        // ⟨n+1|D|n⟩ and ⟨n|D|n+1⟩ have the same magnitude.
        for n in 0..20 {
            let b = coupling_factor(n, 1, 0.3);
            let r = coupling_factor(n + 1, -1, 0.3);
            assert!((b.abs() - r.abs()).abs() < 1e-14);
        }
    }
}
