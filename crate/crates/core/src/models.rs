//! Built-in test models.
//!
//! * The toy CDF-valued code: `F^-(v) = v (1 + X1 + X2 + X1 X3)`, i.e. the
//!   output is `U[0, L]` with `L = 1 + X1 + X2 + X1 X3`, with closed-form
//!   Fréchet and Wasserstein-ball indices for Bernoulli inputs.
//! * The Gremaud function `2 x2 exp(-2 x1) + x3²` and the interval priors of
//!   its second-level study.

use std::sync::Arc;

use rand::{Rng, SeedableRng};

use crate::design::{code_fn, Code, IndependentInputs, ScalarLaw};
use crate::distributions::{EmpiricalDistribution, QuantileGrid};
use crate::error::{GsaError, Result};
use crate::indices::{IndexSet, OutputPoint};
use crate::second_level::{uniform_interval_family, SecondLevelProblem};
use crate::seed::StreamRng;
use crate::stochastic::StochasticCode;

/// Bernoulli parameters of the toy model inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyModelParams {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl ToyModelParams {
    pub fn new(p1: f64, p2: f64, p3: f64) -> Result<Self> {
        for (i, p) in [p1, p2, p3].into_iter().enumerate() {
            if !(p > 0.0 && p < 1.0) {
                return Err(GsaError::Domain(format!("p{} must lie in (0,1), got {p}", i + 1)));
            }
        }
        Ok(Self { p1, p2, p3 })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.p1, self.p2, self.p3]
    }

    /// Independent Bernoulli inputs.
    pub fn sampler(&self) -> IndependentInputs {
        IndependentInputs::new(self.as_array().map(ScalarLaw::Bernoulli).to_vec()).expect("valid Bernoulli laws")
    }
}

/// Upper end `L = 1 + x1 + x2 + x1 x3` of the toy output support.
pub fn toy_scale(x: &[f64]) -> Result<f64> {
    match x {
        [x1, x2, x3] if *x1 >= 0.0 && *x2 >= 0.0 && *x3 >= 0.0 => Ok(1.0 + x1 + x2 + x1 * x3),
        [_, _, _] => Err(GsaError::Domain(format!(
            "toy model inputs must be non-negative, got {x:?}"
        ))),
        _ => Err(GsaError::Domain(format!("toy model takes 3 inputs, got {}", x.len()))),
    }
}

/// Ideal toy code: the exact output law `U[0, L]`, represented by its
/// quantile function on `grid`.
pub fn toy_ideal_code(grid: QuantileGrid) -> impl Code {
    code_fn(3, move |x| {
        let l = toy_scale(x)?;
        Ok(OutputPoint::Distribution(EmpiricalDistribution::from_quantile_fn(
            &grid,
            |v| v * l,
        )?))
    })
}

/// Stochastic toy code: one call draws from `U[0, L]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ToyStochasticCode;

impl StochasticCode for ToyStochasticCode {
    fn input_dim(&self) -> usize {
        3
    }

    fn evaluate(&self, x: &[f64], seed: u64) -> Result<f64> {
        let l = toy_scale(x)?;
        let mut rng = StreamRng::seed_from_u64(seed);
        Ok(l * rng.random::<f64>())
    }
}

/// Index values of the toy model for `u = {1}, {2}, {3}, {1,3}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ToyIndices {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s13: f64,
}

impl ToyIndices {
    /// Value for a 0-based index set, when tabulated.
    pub fn get(&self, u: &IndexSet) -> Option<f64> {
        match u.groups() {
            [0] => Some(self.s1),
            [1] => Some(self.s2),
            [2] => Some(self.s3),
            [0, 2] => Some(self.s13),
            _ => None,
        }
    }

    pub fn index_sets() -> [IndexSet; 4] {
        [
            IndexSet::single(0),
            IndexSet::single(1),
            IndexSet::single(2),
            IndexSet::new([0, 2]).expect("non-empty"),
        ]
    }
}

/// Fréchet indices of the toy model for independent inputs with the given
/// means and variances. The `v²` factor of the conditional variances cancels.
pub fn toy_frechet_indices_from_moments(mean: [f64; 3], var: [f64; 3]) -> ToyIndices {
    let n1 = (1.0 + mean[2]).powi(2) * var[0];
    let n2 = var[1];
    let n3 = mean[0] * mean[0] * var[2];
    let n13 = var[0] * var[2] + var[0] * (1.0 + mean[2]).powi(2) + var[2] * mean[0] * mean[0];
    let den = n13 + n2;
    ToyIndices {
        s1: n1 / den,
        s2: n2 / den,
        s3: n3 / den,
        s13: n13 / den,
    }
}

/// Fréchet indices of the toy model with Bernoulli inputs.
pub fn toy_frechet_indices(p: &ToyModelParams) -> ToyIndices {
    let mean = p.as_array();
    toy_frechet_indices_from_moments(mean, mean.map(|q| q * (1.0 - q)))
}

/// Contribution of one `(F1, F2) = (U[0, first], U[0, second])` case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WballCase {
    pub first: u8,
    pub second: u8,
    pub prob: f64,
    /// Numerator contributions for `{1}, {2}, {3}, {1,3}`.
    pub num: [f64; 4],
    /// Probability that `F` falls in the ball.
    pub q_den: f64,
}

impl WballCase {
    /// Denominator contribution `q (1 - q)`.
    pub fn den(&self) -> f64 {
        self.q_den * (1.0 - self.q_den)
    }
}

/// The sixteen `(F1, F2)` cases of the Wasserstein-ball index for Bernoulli
/// inputs, transcribed term by term.
pub fn toy_wball_cases(p: &ToyModelParams) -> [WballCase; 16] {
    let (p1, p2, p3) = (p.p1, p.p2, p.p3);
    let v1 = p1 * (1.0 - p1);
    let v2 = p2 * (1.0 - p2);
    let v3 = p3 * (1.0 - p3);
    let q = [
        (1.0 - p1) * (1.0 - p2),
        (1.0 - p1) * p2 + p1 * (1.0 - p2) * (1.0 - p3),
        p1 * ((1.0 - p2) * p3 + p2 * (1.0 - p3)),
        p1 * p2 * p3,
    ];

    // Rows shared by several cases.
    let l1_small = (
        [
            v1 * (1.0 - p2).powi(2),
            (1.0 - p1).powi(2) * v2,
            0.0,
            v1 * (1.0 - p2).powi(2),
        ],
        (1.0 - p1) * (1.0 - p2),
    );
    let l_at_least_2 = (
        [
            v1 * (1.0 - p2).powi(2),
            (1.0 - p1).powi(2) * v2,
            0.0,
            v1 * (1.0 - p2).powi(2),
        ],
        (1.0 - p1) * p2 + p1,
    );
    let below_4 = (
        [
            v1 * (p2 * p3).powi(2),
            p1 * p1 * v2 * p3 * p3,
            p1 * p1 * p2 * p2 * v3,
            p1 * p2 * p2 * p3 * (1.0 - p1 * p3),
        ],
        1.0 - p1 * p2 * p3,
    );
    let always = ([0.0; 4], 0.0);

    let rows: [([f64; 4], f64); 16] = [
        // (1,1)
        l1_small,
        // (1,2)
        (
            [
                v1 * (p2 + p3 - p2 * p3).powi(2),
                p1 * p1 * v2 * (1.0 - p3).powi(2),
                p1 * p1 * (1.0 - p2).powi(2) * v3,
                v1 * (1.0 - (1.0 - p2) * (1.0 - p3)).powi(2) + p1 * (1.0 - p2).powi(2) * v3,
            ],
            (1.0 - p1) + p1 * (1.0 - p2) * (1.0 - p3),
        ),
        // (1,3)
        below_4,
        // (1,4)
        always,
        // (2,1)
        below_4,
        // (2,2)
        (
            [
                v1 * (p2 - (1.0 - p2) * (1.0 - p3)).powi(2),
                v2 * (p1 * (1.0 - p3) - (1.0 - p1)).powi(2),
                p1 * p1 * (1.0 - p2).powi(2) * v3,
                v1 * (p2 - (1.0 - p2) * (1.0 - p3)).powi(2) + p1 * (1.0 - p2).powi(2) * v3,
            ],
            (1.0 - p1) * p2 + p1 * (1.0 - p2) * (1.0 - p3),
        ),
        // (2,3)
        below_4,
        // (2,4)
        always,
        // (3,1)
        always,
        // (3,2)
        l_at_least_2,
        // (3,3)
        (
            [
                v1 * (p2 * (1.0 - p3) + (1.0 - p2) * p3).powi(2),
                p1 * p1 * v2 * (2.0 * p3 - 1.0).powi(2),
                p1 * p1 * (2.0 * p2 - 1.0).powi(2) * v3,
                v1 * (p2 + (1.0 - 2.0 * p2) * p3).powi(2) + p1 * (1.0 - 2.0 * p2).powi(2) * v3,
            ],
            p1 * (p2 * (1.0 - p3) + (1.0 - p2) * p3),
        ),
        // (3,4)
        l_at_least_2,
        // (4,1)
        always,
        // (4,2)
        l_at_least_2,
        // (4,3)
        (
            [
                v1 * (p2 + (1.0 - p2) * p3).powi(2),
                p1 * p1 * v2 * (1.0 - p3).powi(2),
                p1 * p1 * (1.0 - p2).powi(2) * v3,
                v1 * (p2 + (1.0 - p2) * p3).powi(2) + p1 * (1.0 - p2).powi(2) * v3,
            ],
            p1 * (p2 + (1.0 - p2) * p3),
        ),
        // (4,4)
        (
            [
                v1 * (p2 * p3).powi(2),
                p1 * p1 * v2 * p3 * p3,
                p1 * p1 * p2 * p2 * v3,
                p1 * p2 * p2 * p3 * (1.0 - p1 * p3),
            ],
            p1 * p2 * p3,
        ),
    ];

    std::array::from_fn(|k| {
        let (i, j) = (k / 4, k % 4);
        WballCase {
            first: i as u8 + 1,
            second: j as u8 + 1,
            prob: q[i] * q[j],
            num: rows[k].0,
            q_den: rows[k].1,
        }
    })
}

/// Wasserstein-ball indices of the toy model with Bernoulli inputs.
pub fn toy_wball_indices(p: &ToyModelParams) -> ToyIndices {
    let cases = toy_wball_cases(p);
    let den: f64 = cases.iter().map(|c| c.prob * c.den()).sum();
    let num = |k: usize| cases.iter().map(|c| c.prob * c.num[k]).sum::<f64>() / den;
    ToyIndices {
        s1: num(0),
        s2: num(1),
        s3: num(2),
        s13: num(3),
    }
}

/// `2 x2 exp(-2 x1) + x3²`.
pub fn gremaud_code(x1: f64, x2: f64, x3: f64) -> f64 {
    2.0 * x2 * (-2.0 * x1).exp() + x3 * x3
}

/// The Gremaud function as a (deterministic) inner code.
#[derive(Debug, Clone, Copy, Default)]
pub struct GremaudInner;

impl StochasticCode for GremaudInner {
    fn input_dim(&self) -> usize {
        3
    }

    fn evaluate(&self, x: &[f64], _seed: u64) -> Result<f64> {
        match x {
            [x1, x2, x3] => Ok(gremaud_code(*x1, *x2, *x3)),
            _ => Err(GsaError::Domain(format!(
                "Gremaud function takes 3 inputs, got {}",
                x.len()
            ))),
        }
    }
}

/// The Gremaud function as a scalar code.
pub fn gremaud_scalar_code() -> impl Code {
    code_fn(3, |x| GremaudInner.evaluate(x, 0).map(OutputPoint::Scalar))
}

/// Independent `U[0,1]` inputs.
pub fn gremaud_inputs() -> IndependentInputs {
    IndependentInputs::new(vec![ScalarLaw::Uniform { low: 0.0, high: 1.0 }; 3]).expect("valid laws")
}

/// Priors on the supports `[A_i, B_i]` of the Gremaud inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GremaudPrior {
    /// `A_i ~ U[0, 0.1]`, `B_i ~ U[0.9, 1]`.
    Tight,
    /// `A_i ~ U[0, 0.45]`, `B_i ~ U[0.55, 1]`.
    Wide,
    /// Tight, except `B_3 ~ U[0.5, 1]`.
    WideThirdUpper,
}

impl std::str::FromStr for GremaudPrior {
    type Err = GsaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tight" => Ok(GremaudPrior::Tight),
            "wide" => Ok(GremaudPrior::Wide),
            "b3wide" | "wide-b3" => Ok(GremaudPrior::WideThirdUpper),
            other => Err(GsaError::Domain(format!(
                "unknown prior '{other}' (expected tight, wide or b3wide)"
            ))),
        }
    }
}

impl GremaudPrior {
    pub fn name(&self) -> &'static str {
        match self {
            GremaudPrior::Tight => "tight",
            GremaudPrior::Wide => "wide",
            GremaudPrior::WideThirdUpper => "b3wide",
        }
    }

    /// Published single-run estimates for `N = n = 500`, in the order of
    /// [`gremaud_index_sets`].
    pub fn reference(&self) -> [f64; 6] {
        match self {
            GremaudPrior::Tight => [0.07022, 0.08791, 0.09236, 0.14467, 0.21839, 0.19066],
            GremaudPrior::Wide => [0.11587, 0.06542, 0.16953, 0.22647, 0.40848, 0.34913],
            GremaudPrior::WideThirdUpper => [0.01196, 0.06069, 0.56176, -0.01723, 0.63830, 0.59434],
        }
    }
}

/// Published CvM Pick-Freeze estimates on `U[0,1]` inputs with `N = 10^4`,
/// in the order of [`gremaud_index_sets`].
pub const GREMAUD_CVM_REFERENCE: [f64; 6] = [0.13717, 0.15317, 0.33889, 0.33405, 0.46816, 0.53536];

/// `{1}, {2}, {3}, {1,2}, {1,3}, {2,3}`.
pub fn gremaud_index_sets() -> Vec<IndexSet> {
    [&[1][..], &[2], &[3], &[1, 2], &[1, 3], &[2, 3]]
        .iter()
        .map(|l| IndexSet::one_based(l).expect("valid labels"))
        .collect()
}

pub fn gremaud_problem(
    prior: GremaudPrior,
    sample_size: usize,
    approximation_size: usize,
) -> Result<SecondLevelProblem> {
    let (a_high, b_low) = match prior {
        GremaudPrior::Tight | GremaudPrior::WideThirdUpper => (0.1, 0.9),
        GremaudPrior::Wide => (0.45, 0.55),
    };
    let mut families = vec![uniform_interval_family(0.0, a_high, b_low, 1.0)?; 3];
    if prior == GremaudPrior::WideThirdUpper {
        families[2] = uniform_interval_family(0.0, 0.1, 0.5, 1.0)?;
    }
    SecondLevelProblem::new(families, Arc::new(GremaudInner), sample_size, approximation_size)
}
