use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::distribution::auto_truncation;
use super::models::{expansion, FlopModelParams};
use super::dataset::SidebandDataset;
use super::rabi::coupling_factor;
use super::ThermoError;
use crate::dynamics::ModeLabel;

/// A fit parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamId {
    Omega,
    Gamma,
    Nbar(ModeLabel),
    Eta(ModeLabel),
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamId::Omega => f.write_str("omega"),
            ParamId::Gamma => f.write_str("gamma"),
            ParamId::Nbar(m) => write!(f, "nbar:{m}"),
            ParamId::Eta(m) => write!(f, "eta:{m}"),
        }
    }
}

impl FromStr for ParamId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "omega" => Ok(ParamId::Omega),
            "gamma" => Ok(ParamId::Gamma),
            _ => {
                let (kind, mode) = s.split_once(':').ok_or_else(|| format!("unknown parameter {s:?}"))?;
                let mode: ModeLabel = mode.parse()?;
                match kind {
                    "nbar" => Ok(ParamId::Nbar(mode)),
                    "eta" => Ok(ParamId::Eta(mode)),
                    _ => Err(format!("unknown parameter {s:?}")),
                }
            }
        }
    }
}

impl Serialize for ParamId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ParamId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl ParamId {
    fn get(self, p: &FlopModelParams) -> Result<f64, ThermoError> {
        match self {
            ParamId::Omega => Ok(p.omega),
            ParamId::Gamma => Ok(p.gamma),
            ParamId::Nbar(m) => p.nbar.get(&m).copied().ok_or(ThermoError::MissingMode(m)),
            ParamId::Eta(m) => p.eta.get(&m).copied().ok_or(ThermoError::MissingMode(m)),
        }
    }

    fn set(self, p: &mut FlopModelParams, v: f64) {
        match self {
            ParamId::Omega => p.omega = v,
            ParamId::Gamma => p.gamma = v,
            ParamId::Nbar(m) => {
                p.nbar.insert(m, v);
            }
            ParamId::Eta(m) => {
                p.eta.insert(m, v);
            }
        }
    }

    /// Keep the value inside the model's domain.
    fn project(self, v: f64, reference: f64) -> f64 {
        match self {
            ParamId::Omega => v.max(1e-9 * reference.abs()),
            ParamId::Gamma | ParamId::Nbar(_) => v.max(0.0),
            ParamId::Eta(_) => v.clamp(0.0, 0.999),
        }
    }

    /// Magnitude below which steps are measured absolutely.
    fn floor(self, reference: f64) -> f64 {
        match self {
            ParamId::Omega => reference.abs().max(1e-300),
            ParamId::Gamma => 1.0,
            ParamId::Nbar(_) | ParamId::Eta(_) => 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Converged when the largest relative parameter step falls below this.
    pub relative_step_tolerance: f64,
    /// Agresti–Coull z for the binomial weights.
    pub z: f64,
    /// Evaluate the binomial weights at the current model prediction
    /// (refreshed once per iteration) instead of at the observed values.
    pub model_weights: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iterations: 200, relative_step_tolerance: 1e-10, z: 1.96, model_weights: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: FlopModelParams,
    pub free: Vec<ParamId>,
    pub values: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Over `free`, in the same order.
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    pub reduced_chi2: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Weighted residuals (model − data)/σ, per curve.
    pub residuals: Vec<Vec<f64>>,
}

impl FitResult {
    pub fn value(&self, id: ParamId) -> Option<f64> {
        self.free.iter().position(|p| *p == id).map(|i| self.values[i])
    }

    pub fn sigma_of(&self, id: ParamId) -> Option<f64> {
        self.free.iter().position(|p| *p == id).map(|i| self.sigma[i])
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error(transparent)]
    Model(#[from] ThermoError),
    #[error("no convergence after {} iterations", .0.iterations)]
    NotConverged(Box<FitResult>),
    #[error("singular normal matrix; degenerate directions {directions:?}")]
    Singular { directions: Vec<Vec<(ParamId, f64)>>, best: Box<FitResult> },
}

/// Binomial standard error with the Agresti–Coull adjustment.
pub fn binomial_sigma(population: f64, shots: u32, z: f64) -> f64 {
    let n = shots as f64;
    let z2 = z * z;
    let nt = n + z2;
    let pt = (population * n + z2 / 2.0) / nt;
    (pt * (1.0 - pt) / nt).sqrt()
}

struct Problem<'a> {
    data: &'a [SidebandDataset],
    sigma: Vec<Vec<f64>>,
    free: &'a [ParamId],
    base: FlopModelParams,
    reference: Vec<f64>,
    z: f64,
}

impl Problem<'_> {
    fn params_at(&self, x: &[f64]) -> FlopModelParams {
        let mut p = self.base.clone();
        for (id, v) in self.free.iter().zip(x) {
            id.set(&mut p, *v);
        }
        p
    }

    fn residuals(&self, p: &FlopModelParams) -> Result<Vec<Vec<f64>>, ThermoError> {
        self.data
            .iter()
            .zip(&self.sigma)
            .map(|(ds, sig)| {
                let e = expansion(p, ds.crystal, ds.sideband)?;
                Ok(ds.points.iter().zip(sig).map(|(pt, s)| (e.eval(pt.t, p.gamma) - pt.population) / s).collect())
            })
            .collect()
    }

    fn flat(&self, x: &[f64]) -> Result<DVector<f64>, ThermoError> {
        let r = self.residuals(&self.params_at(x))?;
        Ok(DVector::from_iterator(r.iter().map(Vec::len).sum(), r.into_iter().flatten()))
    }

    fn jacobian(&self, x: &[f64], r0: &DVector<f64>) -> Result<DMatrix<f64>, ThermoError> {
        let mut j = DMatrix::zeros(r0.len(), x.len());
        for (k, id) in self.free.iter().enumerate() {
            let h = 1e-5 * x[k].abs().max(id.floor(self.reference[k]));
            let mut up = x.to_vec();
            let mut dn = x.to_vec();
            up[k] += h;
            dn[k] -= h;
            let col = if id.project(dn[k], self.reference[k]) == dn[k] {
                (self.flat(&up)? - self.flat(&dn)?) / (2.0 * h)
            } else {
                (self.flat(&up)? - r0) / h
            };
            j.set_column(k, &col);
        }
        Ok(j)
    }

    fn reweight(&mut self, x: &[f64]) -> Result<(), ThermoError> {
        let p = self.params_at(x);
        self.sigma = self
            .data
            .iter()
            .map(|ds| {
                let e = expansion(&p, ds.crystal, ds.sideband)?;
                Ok(ds.points.iter().map(|pt| binomial_sigma(e.eval(pt.t, p.gamma).clamp(0.0, 1.0), pt.shots, self.z)).collect())
            })
            .collect::<Result<_, ThermoError>>()?;
        Ok(())
    }

    /// Fix truncation for the current iterate so every evaluation within
    /// one iteration uses the same Fock space.
    fn freeze_truncation(&mut self, x: &[f64], user: &std::collections::BTreeMap<ModeLabel, usize>) {
        let p = self.params_at(x);
        for (m, nbar) in &p.nbar {
            if !user.contains_key(m) {
                let n = auto_truncation(p.distribution, 1.5 * nbar + 0.5);
                self.base.truncation.insert(*m, n);
            }
        }
    }
}

/// Joint weighted least-squares fit of `datasets` starting from `guess`.
/// Parameters not in `free` stay at their guess values.
pub fn fit(
    datasets: &[SidebandDataset],
    guess: &FlopModelParams,
    free: &[ParamId],
    options: &FitOptions,
) -> Result<FitResult, FitError> {
    guess.validate()?;
    if datasets.is_empty() {
        return Err(ThermoError::InvalidParams("no datasets".into()).into());
    }
    for ds in datasets {
        ds.validate().map_err(|e| ThermoError::InvalidParams(e.to_string()))?;
    }
    let mut seen = std::collections::BTreeSet::new();
    for id in free {
        id.get(guess)?;
        if !seen.insert(*id) {
            return Err(ThermoError::InvalidParams(format!("parameter {id} listed twice")).into());
        }
    }
    let sigma = datasets
        .iter()
        .map(|ds| ds.points.iter().map(|p| binomial_sigma(p.population, p.shots, options.z)).collect())
        .collect();
    let mut x: Vec<f64> = free.iter().map(|id| id.get(guess)).collect::<Result<_, _>>()?;
    let mut prob = Problem { data: datasets, sigma, free, base: guess.clone(), reference: x.clone(), z: options.z };
    let user_trunc = guess.truncation.clone();
    let n_points: usize = datasets.iter().map(|d| d.points.len()).sum();
    let dof = n_points.saturating_sub(free.len());

    let finish = |prob: &Problem, x: &[f64], iterations: usize, converged: bool| -> Result<(FitResult, Vec<Vec<(ParamId, f64)>>), FitError> {
        let mut params = prob.params_at(x);
        let residuals = prob.residuals(&params)?;
        let chi2: f64 = residuals.iter().flatten().map(|r| r * r).sum();
        let mut covariance = Vec::new();
        let mut degenerate = Vec::new();
        if !free.is_empty() {
            let r0 = prob.flat(x)?;
            let j = prob.jacobian(x, &r0)?;
            let a = j.transpose() * &j;
            let d: Vec<f64> = (0..a.nrows()).map(|i| a[(i, i)]).collect();
            let scale = DVector::from_iterator(d.len(), d.iter().map(|v| if *v > 0.0 { 1.0 / v.sqrt() } else { 0.0 }));
            let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |i, k| a[(i, k)] * scale[i] * scale[k]);
            // Degeneracy is judged with columns in units of each parameter's
            // own magnitude, so a column that barely moves the residuals
            // is not hidden by diagonal normalisation.
            let mag: Vec<f64> = free.iter().enumerate().map(|(k, id)| x[k].abs().max(id.floor(prob.reference[k]))).collect();
            let natural = DMatrix::from_fn(a.nrows(), a.ncols(), |i, k| a[(i, k)] * mag[i] * mag[k]);
            let eig = SymmetricEigen::new(natural);
            let max_eig = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
            for (k, &ev) in eig.eigenvalues.iter().enumerate() {
                if !(ev > 1e-12 * max_eig) {
                    let v = eig.eigenvectors.column(k);
                    degenerate.push(free.iter().zip(v.iter()).map(|(id, c)| (*id, *c)).collect());
                }
            }
            let eig = SymmetricEigen::new(scaled.clone());
            if d.iter().any(|v| *v <= 0.0) && degenerate.is_empty() {
                for (i, v) in d.iter().enumerate() {
                    if *v <= 0.0 {
                        degenerate.push(free.iter().enumerate().map(|(k, id)| (*id, if k == i { 1.0 } else { 0.0 })).collect());
                    }
                }
            }
            if degenerate.is_empty() {
                let inv_scaled = scaled.cholesky().map(|c| c.inverse()).or_else(|| eig_inverse(&eig));
                if let Some(inv) = inv_scaled {
                    covariance = (0..a.nrows())
                        .map(|i| (0..a.ncols()).map(|k| inv[(i, k)] * scale[i] * scale[k]).collect())
                        .collect();
                }
            }
        }
        params.truncation = user_trunc.clone();
        let sigma_v = (0..free.len())
            .map(|i| covariance.get(i).map(|row: &Vec<f64>| row[i].max(0.0).sqrt()).unwrap_or(f64::NAN))
            .collect();
        let reduced_chi2 = chi2 / dof.max(1) as f64;
        Ok((
            FitResult {
                params,
                free: free.to_vec(),
                values: x.to_vec(),
                sigma: sigma_v,
                covariance,
                chi2,
                dof,
                reduced_chi2,
                iterations,
                converged,
                residuals,
            },
            degenerate,
        ))
    };

    if options.model_weights {
        prob.reweight(&x)?;
    }
    if free.is_empty() {
        let (res, _) = finish(&prob, &x, 0, true)?;
        return Ok(res);
    }

    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        prob.freeze_truncation(&x, &user_trunc);
        if options.model_weights {
            prob.reweight(&x)?;
        }
        let r = prob.flat(&x)?;
        let chi2 = r.norm_squared();
        let j = prob.jacobian(&x, &r)?;
        let a = j.transpose() * &j;
        let g = j.transpose() * &r;
        let max_diag = (0..a.nrows()).map(|i| a[(i, i)]).fold(0.0, f64::max).max(1e-300);
        let mut accepted = false;
        let mut step_rel = f64::INFINITY;
        for _ in 0..40 {
            let mut m = a.clone();
            for i in 0..m.nrows() {
                m[(i, i)] += lambda * a[(i, i)].max(1e-12 * max_diag);
            }
            let Some(delta) = m.clone().cholesky().map(|c| c.solve(&(-&g))).or_else(|| m.lu().solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = free
                .iter()
                .enumerate()
                .map(|(k, id)| id.project(x[k] + delta[k], prob.reference[k]))
                .collect();
            step_rel = free
                .iter()
                .enumerate()
                .map(|(k, id)| (trial[k] - x[k]).abs() / x[k].abs().max(id.floor(prob.reference[k])))
                .fold(0.0, f64::max);
            let chi2_trial = prob.flat(&trial)?.norm_squared();
            if chi2_trial <= chi2 {
                x = trial;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
            if step_rel < options.relative_step_tolerance {
                break;
            }
        }
        // A rejected step with λ this large means no descent direction is
        // left at machine precision.
        if step_rel < options.relative_step_tolerance || (!accepted && lambda > 1e20) {
            converged = true;
            break;
        }
    }
    prob.freeze_truncation(&x, &user_trunc);
    if options.model_weights {
        prob.reweight(&x)?;
    }
    let (res, degenerate) = finish(&prob, &x, iterations, converged)?;
    if !degenerate.is_empty() {
        return Err(FitError::Singular { directions: degenerate, best: Box::new(res) });
    }
    if !converged {
        return Err(FitError::NotConverged(Box::new(res)));
    }
    Ok(res)
}

fn eig_inverse(eig: &SymmetricEigen<f64, nalgebra::Dyn>) -> Option<DMatrix<f64>> {
    if eig.eigenvalues.iter().any(|v| *v <= 0.0) {
        return None;
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v));
    Some(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Starting point from the data: Ω from the first minimum of a blue
/// sideband curve, n̄ per mode from the early red/blue depletion ratio.
/// Everything else is taken from `template`.
pub fn initial_guess(datasets: &[SidebandDataset], template: &FlopModelParams) -> FlopModelParams {
    let mut out = template.clone();
    let sorted = |ds: &SidebandDataset| {
        let mut pts: Vec<(f64, f64)> = ds.points.iter().map(|p| (p.t, p.population)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts
    };
    let mut t_min_by_mode = std::collections::BTreeMap::new();
    for ds in datasets.iter().filter(|d| d.sideband.kappa == 1) {
        let pts = sorted(ds);
        if pts.len() < 3 {
            continue;
        }
        // 3-point moving average before looking for the first dip.
        let smooth: Vec<f64> = (0..pts.len())
            .map(|i| {
                let lo = i.saturating_sub(1);
                let hi = (i + 1).min(pts.len() - 1);
                pts[lo..=hi].iter().map(|p| p.1).sum::<f64>() / (hi - lo + 1) as f64
            })
            .collect();
        let dip = (1..pts.len() - 1).find(|&i| smooth[i] < smooth[i - 1] && smooth[i] <= smooth[i + 1] && smooth[i] < 0.9);
        if let Some(i) = dip {
            let t_min = pts[i].0;
            t_min_by_mode.entry(ds.sideband.mode).or_insert(t_min);
            if let Some(eta) = template.eta.get(&ds.sideband.mode) {
                let d = coupling_factor(0, 1, *eta).abs();
                if d > 0.0 && t_min > 0.0 && out.omega == template.omega {
                    out.omega = std::f64::consts::PI / (t_min * d);
                }
            }
        }
    }
    for (mode, _) in template.nbar.clone() {
        let red = datasets.iter().find(|d| d.sideband.mode == mode && d.sideband.kappa == -1);
        let blue = datasets.iter().find(|d| d.sideband.mode == mode && d.sideband.kappa == 1);
        let (Some(red), Some(blue)) = (red, blue) else { continue };
        let horizon = t_min_by_mode.get(&mode).map(|t| t / 2.0).unwrap_or(f64::INFINITY);
        let depletion = |ds: &SidebandDataset| -> f64 {
            ds.points.iter().filter(|p| p.t > 0.0 && p.t <= horizon).map(|p| 1.0 - p.population).sum()
        };
        let (dr, db) = (depletion(red), depletion(blue));
        if db > 0.0 {
            let r = (dr / db).clamp(0.0, 0.9);
            out.nbar.insert(mode, r / (1.0 - r));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermometry::{synthesize_dataset, Crystal, Sampling, Sideband};

    const AX: ModeLabel = ModeLabel::Axial;

    fn times() -> Vec<f64> {
        (0..41).map(|k| k as f64 * 2.5e-6).collect()
    }

    fn truth(nbar: f64) -> FlopModelParams {
        FlopModelParams::single_mode(AX, 2.0 * std::f64::consts::PI * 100e3, 2000.0, nbar, 0.3)
    }

    fn curves(p: &FlopModelParams, sampling: Sampling) -> Vec<SidebandDataset> {
        [Sideband::red(AX), Sideband::blue(AX)]
            .into_iter()
            .enumerate()
            .map(|(k, sb)| {
                let s = match sampling {
                    Sampling::Binomial { seed } => Sampling::Binomial { seed: seed + k as u64 },
                    a => a,
                };
                synthesize_dataset(p, Crystal::OneIonOneMode, sb, &times(), 250, s).unwrap()
            })
            .collect()
    }

    #[test]
    fn param_ids_round_trip() {
        for id in [ParamId::Omega, ParamId::Gamma, ParamId::Nbar(ModeLabel::Str), ParamId::Eta(ModeLabel::Radial(2))] {
            assert_eq!(id.to_string().parse::<ParamId>().unwrap(), id);
        }
        assert!("nbar".parse::<ParamId>().is_err());
    }

    #[test]
    fn agresti_coull_never_zero() {
        assert!(binomial_sigma(1.0, 250, 1.96) > 0.0);
        assert!(binomial_sigma(0.0, 250, 1.96) > 0.0);
        let s = binomial_sigma(0.5, 10_000, 0.0);
        assert!((s - 0.005).abs() < 1e-12);
    }

    #[test]
    fn noiseless_fit_recovers_exactly() {
        let t = truth(1.1);
        let data = curves(&t, Sampling::Analytic);
        let mut guess = t.clone();
        guess.omega *= 1.1;
        guess.nbar.insert(AX, 0.6);
        guess.gamma = 500.0;
        let free = [ParamId::Omega, ParamId::Gamma, ParamId::Nbar(AX)];
        let r = fit(&data, &guess, &free, &FitOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.value(ParamId::Nbar(AX)).unwrap() - 1.1).abs() < 1e-6);
        assert!((r.value(ParamId::Omega).unwrap() / t.omega - 1.0).abs() < 1e-8);
        assert!(r.chi2 < 1e-10);
        let c = &r.covariance;
        for i in 0..3 {
            for k in 0..3 {
                assert!((c[i][k] - c[k][i]).abs() <= 1e-12 * c[i][i].abs().max(c[k][k].abs()));
            }
        }
    }

    #[test]
    fn noisy_fit_within_five_percent() {
        let t = truth(1.1);
        let data = curves(&t, Sampling::Binomial { seed: 11 });
        let guess = initial_guess(&data, &FlopModelParams { nbar: [(AX, 0.5)].into(), ..t.clone() });
        let free = [ParamId::Omega, ParamId::Gamma, ParamId::Nbar(AX)];
        let r = fit(&data, &guess, &free, &FitOptions::default()).unwrap();
        let n = r.value(ParamId::Nbar(AX)).unwrap();
        assert!((n / 1.1 - 1.0).abs() < 0.05 || (n - 1.1).abs() < 3.0 * r.sigma_of(ParamId::Nbar(AX)).unwrap(), "{n}");
        assert!(r.reduced_chi2 > 0.3 && r.reduced_chi2 < 3.0);
    }

    #[test]
    fn all_fixed_evaluates_residuals_only() {
        let t = truth(0.43);
        let data = curves(&t, Sampling::Binomial { seed: 3 });
        let r = fit(&data, &t, &[], &FitOptions::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.chi2.is_finite() && r.chi2 > 0.0);
        assert_eq!(r.residuals.len(), 2);
        assert!(r.covariance.is_empty());
    }

    #[test]
    fn degenerate_parameters_are_reported() {
        // Only a blue sideband at η→0 for a spectator: its n̄ does not enter.
        let mut t = truth(0.43);
        t.nbar.insert(ModeLabel::Str, 0.5);
        t.eta.insert(ModeLabel::Str, 0.0);
        let data = vec![synthesize_dataset(&t, Crystal::OneIonTwoModes, Sideband::blue(AX), &times(), 250, Sampling::Analytic).unwrap()];
        let free = [ParamId::Nbar(AX), ParamId::Nbar(ModeLabel::Str)];
        match fit(&data, &t, &free, &FitOptions::default()) {
            Err(FitError::Singular { directions, .. }) => {
                assert_eq!(directions.len(), 1);
                let v = &directions[0];
                assert!(v.iter().any(|(id, c)| *id == ParamId::Nbar(ModeLabel::Str) && c.abs() > 0.99));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn iteration_cap_reports_best() {
        let t = truth(1.1);
        let data = curves(&t, Sampling::Binomial { seed: 5 });
        let mut guess = t.clone();
        guess.nbar.insert(AX, 0.2);
        let opts = FitOptions { max_iterations: 1, ..Default::default() };
        match fit(&data, &guess, &[ParamId::Omega, ParamId::Nbar(AX)], &opts) {
            Err(FitError::NotConverged(best)) => {
                assert_eq!(best.iterations, 1);
                assert!(best.chi2.is_finite());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn guess_heuristic_is_close() {
        let t = truth(1.1);
        let data = curves(&t, Sampling::Analytic);
        let g = initial_guess(&data, &FlopModelParams { omega: 1.0, nbar: [(AX, 0.0)].into(), ..t.clone() });
        assert!((g.omega / t.omega - 1.0).abs() < 0.5, "{}", g.omega / t.omega);
        assert!(g.nbar[&AX] > 0.3 && g.nbar[&AX] < 3.0, "{}", g.nbar[&AX]);
    }
}
