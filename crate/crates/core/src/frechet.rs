//! Fréchet features of a random distribution function.
//!
//! For a contrast `c` the Fréchet feature of an ensemble `{F_j}` is obtained
//! node by node on the quantile scale: its quantile function at `v` is
//! `argmin_s (1/N) Σ_j c(F_j^-(v), s)`. Squared cost gives the pointwise mean
//! (the Wasserstein barycenter), the pinball cost the pointwise quantile.

use crate::distributions::{quantile_index, ContrastFunction, EmpiricalDistribution, QuantileGrid};
use crate::error::{GsaError, Result};
use crate::numeric::{biased_variance, mean, pairwise_sum};

/// `N >= 1` realizations of a random distribution function together with the
/// quantile grid used to discretize `dv` integrals.
#[derive(Debug, Clone)]
pub struct DistributionEnsemble {
    members: Vec<EmpiricalDistribution>,
    grid: QuantileGrid,
}

impl DistributionEnsemble {
    pub fn new(members: Vec<EmpiricalDistribution>, grid: QuantileGrid) -> Result<Self> {
        if members.is_empty() {
            return Err(GsaError::InsufficientSample { needed: 1, got: 0 });
        }
        Ok(Self { members, grid })
    }

    pub fn members(&self) -> &[EmpiricalDistribution] {
        &self.members
    }

    pub fn grid(&self) -> &QuantileGrid {
        &self.grid
    }

    /// Quantiles of every member at grid node `k`.
    fn column(&self, k: usize) -> Vec<f64> {
        let v = self.grid.nodes()[k];
        self.members
            .iter()
            .map(|m| m.atoms()[quantile_index(m.len(), v)])
            .collect()
    }
}

/// Fréchet feature of the ensemble for `c`, represented by one atom per grid
/// node.
///
/// Supported contrasts: `Power(2)` (pointwise mean), `Pinball(alpha)`
/// (pointwise lower empirical `alpha`-quantile) and `Power(1)` (pointwise
/// lower median). Other kinds have no closed-form pointwise minimizer.
pub fn frechet_feature(e: &DistributionEnsemble, c: &ContrastFunction) -> Result<EmpiricalDistribution> {
    let reduce: Box<dyn Fn(Vec<f64>) -> f64> = match c {
        ContrastFunction::Power(q) if *q == 2.0 => Box::new(|col: Vec<f64>| mean(&col)),
        ContrastFunction::Power(q) if *q == 1.0 => Box::new(|col| lower_quantile(col, 0.5)),
        ContrastFunction::Pinball(alpha) => {
            let alpha = *alpha;
            Box::new(move |col| lower_quantile(col, alpha))
        }
        other => {
            return Err(GsaError::Unsupported(format!(
                "no pointwise minimizer available for contrast {other:?}"
            )))
        }
    };
    let atoms: Vec<f64> = (0..e.grid.len()).map(|k| reduce(e.column(k))).collect();
    EmpiricalDistribution::new(atoms)
}

/// Lower empirical quantile with the same generalized-inverse convention as
/// [`EmpiricalDistribution::quantile`].
fn lower_quantile(mut col: Vec<f64>, alpha: f64) -> f64 {
    col.sort_by(f64::total_cmp);
    col[quantile_index(col.len(), alpha)]
}

/// `Var(F) = ∫_0^1 Var(F^-(v)) dv`, discretized on the ensemble grid with
/// the 1/N variance normalization.
pub fn wasserstein_variance(e: &DistributionEnsemble) -> Result<f64> {
    if e.members.len() < 2 {
        return Err(GsaError::InsufficientSample {
            needed: 2,
            got: e.members.len(),
        });
    }
    let terms: Vec<f64> = e
        .grid
        .weights()
        .iter()
        .enumerate()
        .map(|(k, w)| w * biased_variance(&e.column(k)))
        .collect();
    Ok(pairwise_sum(&terms))
}
