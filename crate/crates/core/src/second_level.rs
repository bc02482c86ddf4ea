//! Second-level sensitivity analysis: sensitivity of the output law to the
//! choice of input distributions.
//!
//! Input `i` follows `μ_θ` with `θ` drawn from a prior on a parametric
//! family. The map `(θ_1, ..., θ_p) ↦ f(X_1, ..., X_p)` with `X_i ~ μ_{θ_i}`
//! is a stochastic code whose inputs are the parameters, so the problem is
//! handed to [`crate::stochastic`].

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};

use crate::design::{GsaSettings, InputSampler};
use crate::error::{GsaError, Result};
use crate::indices::{IndexEstimate, IndexSet, Method, TestFunctionFamily};
use crate::seed::{derive_seed, StreamRng};
use crate::stochastic::{stochastic_gsa, stochastic_gsa_many, StochasticCode};

type PriorFn = dyn Fn(&mut dyn RngCore) -> Vec<f64> + Send + Sync;
type RealizeFn = dyn Fn(&[f64], &mut dyn RngCore) -> f64 + Send + Sync;
type SortKeyFn = dyn Fn(&[f64]) -> Option<f64> + Send + Sync;

/// A parametric set of input laws `{μ_θ}` with a prior on `θ`.
#[derive(Clone)]
pub struct ParametricFamily {
    name: String,
    theta_dim: usize,
    prior: Arc<PriorFn>,
    realize: Arc<RealizeFn>,
    sort_key: Arc<SortKeyFn>,
}

impl fmt::Debug for ParametricFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricFamily")
            .field("name", &self.name)
            .field("theta_dim", &self.theta_dim)
            .finish_non_exhaustive()
    }
}

impl ParametricFamily {
    /// `prior` draws `θ`, `realize` draws from `μ_θ`, `sort_key` orders
    /// parameter draws for the rank method.
    pub fn new<P, R, K>(name: impl Into<String>, theta_dim: usize, prior: P, realize: R, sort_key: K) -> Result<Self>
    where
        P: Fn(&mut dyn RngCore) -> Vec<f64> + Send + Sync + 'static,
        R: Fn(&[f64], &mut dyn RngCore) -> f64 + Send + Sync + 'static,
        K: Fn(&[f64]) -> Option<f64> + Send + Sync + 'static,
    {
        if theta_dim == 0 {
            return Err(GsaError::Domain("parameter dimension must be positive".into()));
        }
        Ok(Self {
            name: name.into(),
            theta_dim,
            prior: Arc::new(prior),
            realize: Arc::new(realize),
            sort_key: Arc::new(sort_key),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn theta_dim(&self) -> usize {
        self.theta_dim
    }

    pub fn draw_theta(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (self.prior)(rng)
    }

    pub fn realize(&self, theta: &[f64], rng: &mut dyn RngCore) -> f64 {
        (self.realize)(theta, rng)
    }

    pub fn sort_key(&self, theta: &[f64]) -> Option<f64> {
        (self.sort_key)(theta)
    }

    /// Replaces the ranking key.
    pub fn with_sort_key<K>(mut self, key: K) -> Self
    where
        K: Fn(&[f64]) -> Option<f64> + Send + Sync + 'static,
    {
        self.sort_key = Arc::new(key);
        self
    }
}

/// `X ~ U[A, B]` with `A ~ U[a_low, a_high]` and `B ~ U[b_low, b_high]`.
/// Draws are ranked by `A + B`.
pub fn uniform_interval_family(a_low: f64, a_high: f64, b_low: f64, b_high: f64) -> Result<ParametricFamily> {
    let finite = [a_low, a_high, b_low, b_high].iter().all(|v| v.is_finite());
    if !finite || a_low > a_high || b_low > b_high || a_high > b_low || a_low >= b_high {
        return Err(GsaError::Domain(format!(
            "uniform interval prior needs a_low <= a_high <= b_low <= b_high with a_low < b_high, got \
             ({a_low}, {a_high}, {b_low}, {b_high})"
        )));
    }
    let between = |lo: f64, hi: f64, rng: &mut dyn RngCore| lo + (hi - lo) * rng.random::<f64>();
    ParametricFamily::new(
        format!("uniform[U({a_low},{a_high}), U({b_low},{b_high})]"),
        2,
        move |rng| vec![between(a_low, a_high, rng), between(b_low, b_high, rng)],
        move |theta, rng| between(theta[0], theta[1], rng),
        |theta| Some(theta[0] + theta[1]),
    )
}

/// Families with a prior, a deterministic inner code and the sizes `N`, `n`.
#[derive(Clone)]
pub struct SecondLevelProblem {
    pub families: Vec<ParametricFamily>,
    /// Deterministic scalar map `f(x_1, ..., x_p)`; its seed argument is
    /// unused by deterministic codes.
    pub inner: Arc<dyn StochasticCode>,
    pub sample_size: usize,
    pub approximation_size: usize,
}

impl SecondLevelProblem {
    pub fn new(
        families: Vec<ParametricFamily>,
        inner: Arc<dyn StochasticCode>,
        sample_size: usize,
        approximation_size: usize,
    ) -> Result<Self> {
        if families.len() != inner.input_dim() {
            return Err(GsaError::InvalidDesign(format!(
                "{} families for an inner code with {} inputs",
                families.len(),
                inner.input_dim()
            )));
        }
        Ok(Self {
            families,
            inner,
            sample_size,
            approximation_size,
        })
    }

    /// The induced stochastic code on the concatenated parameters.
    pub fn induced_code(&self) -> InducedCode {
        InducedCode {
            families: self.families.clone(),
            inner: Arc::clone(&self.inner),
        }
    }

    /// The prior on the concatenated parameters, one group per family.
    pub fn prior_sampler(&self) -> PriorSampler {
        PriorSampler {
            families: self.families.clone(),
        }
    }
}

/// `θ ↦ f(X_1, ..., X_p)` with `X_i ~ μ_{θ_i}` drawn from the call seed.
pub struct InducedCode {
    families: Vec<ParametricFamily>,
    inner: Arc<dyn StochasticCode>,
}

impl StochasticCode for InducedCode {
    fn input_dim(&self) -> usize {
        self.families.iter().map(|f| f.theta_dim).sum()
    }

    fn evaluate(&self, theta: &[f64], seed: u64) -> Result<f64> {
        let mut rng = StreamRng::seed_from_u64(seed);
        let mut offset = 0;
        let x: Vec<f64> = self
            .families
            .iter()
            .map(|f| {
                let v = f.realize(&theta[offset..offset + f.theta_dim], &mut rng);
                offset += f.theta_dim;
                v
            })
            .collect();
        self.inner.evaluate(&x, derive_seed(seed, &[1]))
    }

    fn reentrant(&self) -> bool {
        self.inner.reentrant()
    }
}

pub struct PriorSampler {
    families: Vec<ParametricFamily>,
}

impl InputSampler for PriorSampler {
    fn group_dims(&self) -> Vec<usize> {
        self.families.iter().map(|f| f.theta_dim).collect()
    }

    fn draw_group(&self, group: usize, rng: &mut StreamRng, out: &mut Vec<f64>) {
        out.extend(self.families[group].draw_theta(rng));
    }

    fn rank_key(&self, group: usize, values: &[f64]) -> Option<f64> {
        self.families[group].sort_key(values)
    }
}

/// Second-level index of the parameter groups `u`: parameters drawn from the
/// priors, `n` inner runs per parameter draw, Pick-Freeze copies redraw the
/// parameters outside `u` (rank: parameters ordered by their sort key).
pub fn second_level_gsa(
    prob: &SecondLevelProblem,
    u: &IndexSet,
    fam: &dyn TestFunctionFamily,
    method: Method,
    seed: u64,
) -> Result<IndexEstimate> {
    let settings = GsaSettings::new(prob.sample_size, method, seed);
    stochastic_gsa(
        &prob.induced_code(),
        &prob.prior_sampler(),
        u,
        fam,
        prob.approximation_size,
        &settings,
    )
}

/// [`second_level_gsa`] for several index sets sharing the plain sample.
pub fn second_level_gsa_many(
    prob: &SecondLevelProblem,
    us: &[IndexSet],
    fam: &dyn TestFunctionFamily,
    settings: &GsaSettings,
) -> Result<Vec<Result<IndexEstimate>>> {
    let settings = GsaSettings {
        sample_size: prob.sample_size,
        ..settings.clone()
    };
    stochastic_gsa_many(
        &prob.induced_code(),
        &prob.prior_sampler(),
        us,
        fam,
        prob.approximation_size,
        &settings,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::stochastic_fn;

    #[test]
    fn interval_family_validation() {
        assert!(uniform_interval_family(0.0, 0.1, 0.9, 1.0).is_ok());
        assert!(uniform_interval_family(0.0, 0.0, 1.0, 1.0).is_ok());
        assert!(uniform_interval_family(0.0, 0.6, 0.5, 1.0).is_err());
        assert!(uniform_interval_family(0.2, 0.1, 0.9, 1.0).is_err());
        assert!(uniform_interval_family(0.5, 0.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn degenerate_interval_prior_is_unit_uniform() {
        let f = uniform_interval_family(0.0, 0.0, 1.0, 1.0).unwrap();
        let mut rng = StreamRng::seed_from_u64(1);
        for _ in 0..10 {
            assert_eq!(f.draw_theta(&mut rng), vec![0.0, 1.0]);
            let x = f.realize(&[0.0, 1.0], &mut rng);
            assert!((0.0..1.0).contains(&x));
        }
        assert_eq!(f.sort_key(&[0.0, 1.0]), Some(1.0));
    }

    #[test]
    fn realizations_stay_in_the_interval() {
        let f = uniform_interval_family(0.0, 0.45, 0.55, 1.0).unwrap();
        let mut rng = StreamRng::seed_from_u64(2);
        for _ in 0..1000 {
            let theta = f.draw_theta(&mut rng);
            assert!(theta[0] <= 0.45 && theta[1] >= 0.55);
            let x = f.realize(&theta, &mut rng);
            assert!(x >= theta[0] && x <= theta[1]);
        }
    }

    #[test]
    fn problem_checks_dimensions() {
        let f = uniform_interval_family(0.0, 0.1, 0.9, 1.0).unwrap();
        let inner: Arc<dyn StochasticCode> = Arc::new(stochastic_fn(2, |x, _| x[0] + x[1]));
        assert!(SecondLevelProblem::new(vec![f.clone()], Arc::clone(&inner), 10, 10).is_err());
        let p = SecondLevelProblem::new(vec![f.clone(), f], inner, 10, 10).unwrap();
        assert_eq!(p.induced_code().input_dim(), 4);
    }
}
