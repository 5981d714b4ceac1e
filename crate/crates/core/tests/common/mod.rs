//! Independent reference computations shared by the integration tests and
//! the acceptance runner.

#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};
use rand::Rng;

use xjunction::dynamics::{ModeLabel, OccupationDistribution};
use xjunction::thermometry::{Crystal, FlopModelParams, Sideband};

/// ⟨m| exp(iη(a + a†)) |n⟩ magnitudes in a truncated Fock space, by
/// diagonalizing the position operator.
pub struct Displacement {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl Displacement {
    pub fn new(eta: f64, dim: usize) -> Self {
        let mut x = DMatrix::zeros(dim, dim);
        for n in 1..dim {
            let s = (n as f64).sqrt();
            x[(n, n - 1)] = s;
            x[(n - 1, n)] = s;
        }
        let eig = SymmetricEigen::new(x);
        let q = &eig.eigenvectors;
        let cos = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (eta * l).cos()));
        let sin = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (eta * l).sin()));
        Self { re: q * cos * q.transpose(), im: q * sin * q.transpose() }
    }

    pub fn element(&self, to: i64, from: usize) -> f64 {
        if to < 0 {
            return 0.0;
        }
        let to = to as usize;
        self.re[(to, from)].hypot(self.im[(to, from)])
    }
}

/// Occupation probabilities from their textbook closed forms.
pub fn occupation(dist: OccupationDistribution, nbar: f64, n: usize) -> f64 {
    if nbar == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    match dist {
        OccupationDistribution::Thermal => nbar.powi(n as i32) / (nbar + 1.0).powi(n as i32 + 1),
        OccupationDistribution::Coherent => {
            let mut p = (-nbar).exp();
            for k in 1..=n {
                p *= nbar / k as f64;
            }
            p
        }
    }
}

/// Resonant ladder with real off-diagonal couplings, started in level 0.
/// Returns Σ_j w_j |c_j(t)|², with e^{−γt} on every beat between distinct
/// eigenfrequencies.
pub fn ladder_signal(couplings: &[f64], weights: &[f64], gamma: f64, t: f64) -> f64 {
    let d = couplings.len() + 1;
    let mut h = DMatrix::zeros(d, d);
    for (k, g) in couplings.iter().enumerate() {
        h[(k, k + 1)] = *g;
        h[(k + 1, k)] = *g;
    }
    let eig = SymmetricEigen::new(h);
    let q = &eig.eigenvectors;
    let lam = &eig.eigenvalues;
    let decay = (-gamma * t).exp();
    let mut out = 0.0;
    for (j, w) in weights.iter().enumerate() {
        for k in 0..d {
            for l in 0..d {
                let amp = q[(j, k)] * q[(0, k)] * q[(j, l)] * q[(0, l)];
                let dl = lam[k] - lam[l];
                out += w * amp * if dl.abs() < 1e-9 * (1.0 + lam[k].abs()) { 1.0 } else { decay * (dl * t).cos() };
            }
        }
    }
    out
}

/// |c0|², |c1|², |c2|² of the three-level ladder by fixed-step RK4 on the
/// Schrödinger equation.
pub fn rk4_three_level(g1: f64, g2: f64, t: f64, steps: usize) -> [f64; 3] {
    let h = Matrix3::new(0.0, g1, 0.0, g1, 0.0, g2, 0.0, g2, 0.0);
    // i ċ = H c  →  ṙ = H s, ṡ = −H r for c = r + i s.
    let f = |r: &nalgebra::Vector3<f64>, s: &nalgebra::Vector3<f64>| (h * s, -(h * r));
    let mut r = nalgebra::Vector3::new(1.0, 0.0, 0.0);
    let mut s = nalgebra::Vector3::zeros();
    let dt = t / steps as f64;
    for _ in 0..steps {
        let (k1r, k1s) = f(&r, &s);
        let (k2r, k2s) = f(&(r + k1r * (dt / 2.0)), &(s + k1s * (dt / 2.0)));
        let (k3r, k3s) = f(&(r + k2r * (dt / 2.0)), &(s + k2s * (dt / 2.0)));
        let (k4r, k4s) = f(&(r + k3r * dt), &(s + k3s * dt));
        r += (k1r + k2r * 2.0 + k3r * 2.0 + k4r) * (dt / 6.0);
        s += (k1s + k2s * 2.0 + k3s * 2.0 + k4s) * (dt / 6.0);
    }
    [0, 1, 2].map(|j| r[j] * r[j] + s[j] * s[j])
}

/// Fock-sum reference for every forward model. Truncations must be set
/// explicitly in `params`.
pub fn flop_oracle(params: &FlopModelParams, crystal: Crystal, sb: Sideband, t: f64) -> f64 {
    let probed = sb.mode;
    let n_max = params.truncation[&probed];
    let d1 = Displacement::new(params.eta[&probed], n_max + 50);
    let spectator = match crystal {
        Crystal::OneIonOneMode => None,
        _ => params.eta.keys().copied().find(|m| *m != probed),
    };
    let (m_max, d2) = match spectator {
        Some(s) => (params.truncation[&s], Some(Displacement::new(params.eta[&s], params.truncation[&s] + 50))),
        None => (0, None),
    };
    let k = sb.kappa as i64;
    let mut total = 0.0;
    for n in 0..=n_max {
        let pn = occupation(params.distribution, params.nbar[&probed], n);
        for m in 0..=m_max {
            let (pm, c2) = match (&d2, spectator) {
                (Some(d), Some(s)) => (occupation(params.distribution, params.nbar[&s], m), d.element(m as i64, m)),
                _ => (1.0, 1.0),
            };
            let c1 = d1.element(n as i64 + k, n);
            let signal = match crystal {
                Crystal::TwoIonsSameSpecies => {
                    let next = (n as i64 + k).max(0) as usize;
                    let c1b = if n as i64 + k < 0 { 0.0 } else { d1.element(next as i64 + k, next) };
                    let g = params.omega / std::f64::consts::SQRT_2 * c2;
                    ladder_signal(&[g * c1, g * c1b], &[1.0, 0.5, 0.0], params.gamma, t)
                }
                _ => ladder_signal(&[params.omega / 2.0 * c1 * c2], &[1.0, 0.0], params.gamma, t),
            };
            total += pn * pm * signal;
        }
    }
    total
}

/// A random small model instance with explicit truncation ≤ 30.
pub fn random_instance(rng: &mut impl Rng) -> (FlopModelParams, Crystal, Sideband, Vec<f64>) {
    let crystal = [Crystal::OneIonOneMode, Crystal::OneIonTwoModes, Crystal::TwoIonsSameSpecies][rng.random_range(0..3)];
    let dist = if rng.random_bool(0.5) { OccupationDistribution::Thermal } else { OccupationDistribution::Coherent };
    let modes: Vec<ModeLabel> = match crystal {
        Crystal::OneIonOneMode => vec![ModeLabel::Axial],
        _ => vec![ModeLabel::Com, ModeLabel::Str],
    };
    let mut p = FlopModelParams::single_mode(modes[0], 0.0, 0.0, 0.0, 0.0);
    p.nbar.clear();
    p.eta.clear();
    p.omega = std::f64::consts::TAU * rng.random_range(30e3..250e3);
    p.gamma = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..8000.0) };
    p.distribution = dist;
    for m in &modes {
        p.nbar.insert(*m, rng.random_range(0.0..2.5));
        p.eta.insert(*m, rng.random_range(0.01..0.45));
        p.truncation.insert(*m, rng.random_range(4..=30));
    }
    let sb = Sideband { mode: modes[rng.random_range(0..modes.len())], kappa: rng.random_range(-1..=1) };
    let times = (0..4).map(|_| rng.random_range(0.0..150e-6)).collect();
    (p, crystal, sb, times)
}
