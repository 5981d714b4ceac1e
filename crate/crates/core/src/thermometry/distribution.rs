use crate::dynamics::OccupationDistribution;

/// Neglected population allowed beyond the automatic truncation.
pub const TAIL_TOLERANCE: f64 = 1e-8;

/// Hard ceiling on automatic truncation.
pub const MAX_FOCK: usize = 2000;

/// Bose-Einstein occupation of |n⟩ at mean n̄.
pub fn thermal_population(nbar: f64, n: usize) -> f64 {
    if nbar <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let r = nbar / (nbar + 1.0);
    r.powi(n as i32) / (nbar + 1.0)
}

/// Poisson occupation of |n⟩ at mean n̄.
pub fn coherent_population(nbar: f64, n: usize) -> f64 {
    if nbar <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let ln_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    (n as f64 * nbar.ln() - nbar - ln_fact).exp()
}

pub fn population(dist: OccupationDistribution, nbar: f64, n: usize) -> f64 {
    match dist {
        OccupationDistribution::Thermal => thermal_population(nbar, n),
        OccupationDistribution::Coherent => coherent_population(nbar, n),
    }
}

/// p_0..=p_max, by recurrence.
pub fn populations(dist: OccupationDistribution, nbar: f64, max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max + 1);
    if nbar <= 0.0 {
        out.push(1.0);
        out.resize(max + 1, 0.0);
        return out;
    }
    match dist {
        OccupationDistribution::Thermal => {
            let r = nbar / (nbar + 1.0);
            let mut p = 1.0 / (nbar + 1.0);
            for _ in 0..=max {
                out.push(p);
                p *= r;
            }
        }
        OccupationDistribution::Coherent => {
            let mut p = (-nbar).exp();
            for n in 0..=max {
                out.push(p);
                p *= nbar / (n + 1) as f64;
            }
        }
    }
    out
}

/// Smallest N with Σ_{n>N} p_n below [`TAIL_TOLERANCE`].
pub fn auto_truncation(dist: OccupationDistribution, nbar: f64) -> usize {
    if nbar <= 0.0 {
        return 1;
    }
    match dist {
        OccupationDistribution::Thermal => {
            // Tail beyond N is r^(N+1).
            let r = nbar / (nbar + 1.0);
            let n = (TAIL_TOLERANCE.ln() / r.ln()).floor() as usize;
            n.clamp(1, MAX_FOCK)
        }
        OccupationDistribution::Coherent => {
            let mut p = (-nbar).exp();
            let mut cum = p;
            let mut n = 0;
            while 1.0 - cum >= TAIL_TOLERANCE && n < MAX_FOCK {
                n += 1;
                p *= nbar / n as f64;
                cum += p;
            }
            n.max(1)
        }
    }
}
