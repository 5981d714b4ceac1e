use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::dataset::{DataPoint, SidebandDataset};
use super::models::{expansion, Crystal, FlopModelParams, Sideband};
use super::ThermoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Exact model values; `shots` is only recorded.
    Analytic,
    /// Binomially sampled populations from a seeded stream.
    Binomial { seed: u64 },
}

/// Sample one curve of the forward model at `times` (s).
pub fn synthesize_dataset(
    params: &FlopModelParams,
    crystal: Crystal,
    sideband: Sideband,
    times: &[f64],
    shots: u32,
    sampling: Sampling,
) -> Result<SidebandDataset, ThermoError> {
    if shots == 0 {
        return Err(ThermoError::InvalidParams("shots must be >= 1".into()));
    }
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(ThermoError::InvalidParams(format!("negative probe duration {t}")));
    }
    let model = expansion(params, crystal, sideband)?;
    let mut rng = match sampling {
        Sampling::Binomial { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        Sampling::Analytic => None,
    };
    let points = times
        .iter()
        .map(|&t| {
            let p = model.eval(t, params.gamma).clamp(0.0, 1.0);
            let population = match rng.as_mut() {
                Some(rng) => {
                    let k = Binomial::new(shots as u64, p).expect("p in [0, 1]").sample(rng);
                    k as f64 / shots as f64
                }
                None => p,
            };
            DataPoint { t, population, shots }
        })
        .collect();
    Ok(SidebandDataset { crystal, sideband, eta: params.eta.clone(), points, label: None })
}
