//! Designs of experiments: input samplers with Pick-Freeze support, codes,
//! and the driver that turns a code into estimates.
//!
//! Every draw is addressed by a seed path, so a given `(sampler, seed)`
//! produces the same inputs whatever code is run on them. This gives common
//! random numbers across codes and approximation sizes for free.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{GsaError, Result};
use crate::estimators::{pick_freeze_estimate, rank_estimate, ustat_estimate, PickFreezeDesign, RankDesign};
use crate::indices::{IndexEstimate, IndexSet, Method, OutputPoint, ParamSource, TestFunctionFamily};
use crate::seed::{derive_seed, stream, tag, StreamRng};

/// A code `x ↦ output`. Deterministic codes ignore `seed`.
pub trait Code: Send + Sync {
    fn input_dim(&self) -> usize;

    fn output(&self, x: &[f64], seed: u64) -> Result<OutputPoint>;

    /// Whether concurrent calls are allowed.
    fn reentrant(&self) -> bool {
        true
    }
}

/// Deterministic code given by a closure.
pub struct FnCode<F> {
    dim: usize,
    f: F,
}

pub fn code_fn<F>(dim: usize, f: F) -> FnCode<F>
where
    F: Fn(&[f64]) -> Result<OutputPoint> + Send + Sync,
{
    FnCode { dim, f }
}

impl<F> Code for FnCode<F>
where
    F: Fn(&[f64]) -> Result<OutputPoint> + Send + Sync,
{
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn output(&self, x: &[f64], _seed: u64) -> Result<OutputPoint> {
        (self.f)(x)
    }
}

/// Law of the inputs, split into independent groups. Index sets refer to
/// groups; a code input vector is the concatenation of all groups.
pub trait InputSampler: Send + Sync {
    fn group_dims(&self) -> Vec<usize>;

    /// Appends one draw of group `group` to `out`.
    fn draw_group(&self, group: usize, rng: &mut StreamRng, out: &mut Vec<f64>);

    /// Scalar used to rank draws of a group, when one exists.
    fn rank_key(&self, _group: usize, values: &[f64]) -> Option<f64> {
        match values {
            [v] => Some(*v),
            _ => None,
        }
    }
}

/// One-dimensional input laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarLaw {
    Uniform { low: f64, high: f64 },
    Bernoulli(f64),
    PointMass(f64),
    Normal { mean: f64, sd: f64 },
}

impl ScalarLaw {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScalarLaw::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
            ScalarLaw::Bernoulli(p) => (0.0..=1.0).contains(&p),
            ScalarLaw::PointMass(c) => c.is_finite(),
            ScalarLaw::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(GsaError::Domain(format!("invalid input law {self:?}")))
        }
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        match *self {
            ScalarLaw::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            ScalarLaw::Bernoulli(p) => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            ScalarLaw::PointMass(c) => c,
            ScalarLaw::Normal { mean, sd } => Normal::new(mean, sd).map(|d| d.sample(rng)).unwrap_or(mean),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ScalarLaw::Uniform { low, high } => 0.5 * (low + high),
            ScalarLaw::Bernoulli(p) => p,
            ScalarLaw::PointMass(c) => c,
            ScalarLaw::Normal { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            ScalarLaw::Uniform { low, high } => (high - low).powi(2) / 12.0,
            ScalarLaw::Bernoulli(p) => p * (1.0 - p),
            ScalarLaw::PointMass(_) => 0.0,
            ScalarLaw::Normal { sd, .. } => sd * sd,
        }
    }
}

/// Independent scalar inputs, one group each.
#[derive(Debug, Clone)]
pub struct IndependentInputs {
    laws: Vec<ScalarLaw>,
}

impl IndependentInputs {
    pub fn new(laws: Vec<ScalarLaw>) -> Result<Self> {
        if laws.is_empty() {
            return Err(GsaError::Domain("at least one input is required".into()));
        }
        for law in &laws {
            law.validate()?;
        }
        Ok(Self { laws })
    }

    pub fn laws(&self) -> &[ScalarLaw] {
        &self.laws
    }
}

impl InputSampler for IndependentInputs {
    fn group_dims(&self) -> Vec<usize> {
        vec![1; self.laws.len()]
    }

    fn draw_group(&self, group: usize, rng: &mut StreamRng, out: &mut Vec<f64>) {
        out.push(self.laws[group].sample(rng));
    }
}

/// Where output-law family parameters come from in Pick-Freeze designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AuxSampling {
    /// Reuse the plain outputs as the parameter sample (no extra code calls).
    #[default]
    ReuseOutputs,
    /// Run the code on `m` fresh input samples.
    Fresh,
}

#[derive(Debug, Clone)]
pub struct GsaSettings {
    pub sample_size: usize,
    pub method: Method,
    pub seed: u64,
    /// Tuple budget (Pick-Freeze) or subset budget (U-statistic).
    pub budget: Option<usize>,
    pub aux: AuxSampling,
}

impl GsaSettings {
    pub fn new(sample_size: usize, method: Method, seed: u64) -> Self {
        Self {
            sample_size,
            method,
            seed,
            budget: None,
            aux: AuxSampling::default(),
        }
    }

    pub fn with_budget(mut self, budget: Option<usize>) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_aux(mut self, aux: AuxSampling) -> Self {
        self.aux = aux;
        self
    }
}

/// Hidden-seed branch labels.
pub mod branch {
    pub const PLAIN: u64 = 0;
    pub const PICK_FREEZE: u64 = 1;
    /// Fresh auxiliary sample `l` uses `AUX_BASE + l`.
    pub const AUX_BASE: u64 = 2;
}

fn check_groups(sampler: &dyn InputSampler, u: &IndexSet) -> Result<()> {
    let groups = sampler.group_dims().len();
    if let Some(&g) = u.groups().iter().find(|&&g| g >= groups) {
        return Err(GsaError::Domain(format!(
            "index set {u} refers to input {} but only {groups} exist",
            g + 1
        )));
    }
    Ok(())
}

fn draw_input(sampler: &dyn InputSampler, seed: u64, prefix: &[u64], j: usize, frozen: Option<&IndexSet>) -> Vec<f64> {
    let dims = sampler.group_dims();
    let mut x = Vec::with_capacity(dims.iter().sum());
    for g in 0..dims.len() {
        let path: Vec<u64> = match frozen {
            Some(u) if !u.contains(g) => vec![tag::INPUT_PF, j as u64, g as u64],
            _ => prefix.iter().copied().chain([j as u64, g as u64]).collect(),
        };
        let mut rng = stream(seed, &path);
        sampler.draw_group(g, &mut rng, &mut x);
    }
    x
}

/// Plain input sample `X_1..X_N`.
pub fn draw_inputs(sampler: &dyn InputSampler, n: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|j| draw_input(sampler, seed, &[tag::INPUT], j, None))
        .collect()
}

/// Pick-Freeze copies `X_j^u`: groups in `u` equal those of the plain
/// sample, the others are redrawn.
pub fn draw_inputs_pf(sampler: &dyn InputSampler, u: &IndexSet, n: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|j| draw_input(sampler, seed, &[tag::INPUT], j, Some(u)))
        .collect()
}

fn draw_inputs_aux(sampler: &dyn InputSampler, l: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|j| draw_input(sampler, seed, &[tag::AUX, l as u64], j, None))
        .collect()
}

/// Seed handed to the code for sample `j` of a branch.
pub fn hidden_seed(seed: u64, branch: u64, j: usize) -> u64 {
    derive_seed(seed, &[tag::HIDDEN, branch, j as u64])
}

/// Runs the code on every input of a branch, in parallel when allowed.
pub fn evaluate_branch(code: &dyn Code, inputs: &[Vec<f64>], branch: u64, seed: u64) -> Result<Vec<OutputPoint>> {
    if let Some(x) = inputs.iter().find(|x| x.len() != code.input_dim()) {
        return Err(GsaError::InvalidDesign(format!(
            "code expects {} inputs, sampler produced {}",
            code.input_dim(),
            x.len()
        )));
    }
    let run = |(j, x): (usize, &Vec<f64>)| code.output(x, hidden_seed(seed, branch, j));
    if code.reentrant() {
        inputs.par_iter().enumerate().map(run).collect()
    } else {
        inputs.iter().enumerate().map(run).collect()
    }
}

/// Parameter rows drawn from a family's external parameter law.
fn drawn_parameters(fam: &dyn TestFunctionFamily, n: usize, seed: u64) -> Vec<Vec<OutputPoint>> {
    let source = fam.param_source();
    (0..fam.arity())
        .map(|l| {
            let mut rng = stream(seed, &[tag::AUX, l as u64]);
            (0..n)
                .map(|_| source.draw(&mut rng).expect("external parameter source"))
                .collect()
        })
        .collect()
}

fn auxiliary_rows(
    code: &dyn Code,
    sampler: &dyn InputSampler,
    fam: &dyn TestFunctionFamily,
    settings: &GsaSettings,
) -> Result<Vec<Vec<OutputPoint>>> {
    let n = settings.sample_size;
    match fam.param_source() {
        ParamSource::OutputLaw => match settings.aux {
            AuxSampling::ReuseOutputs => Ok(Vec::new()),
            AuxSampling::Fresh => (0..fam.arity())
                .map(|l| {
                    let inputs = draw_inputs_aux(sampler, l, n, settings.seed);
                    evaluate_branch(code, &inputs, branch::AUX_BASE + l as u64, settings.seed)
                })
                .collect(),
        },
        _ => Ok(drawn_parameters(fam, n, settings.seed)),
    }
}

/// The design an index is estimated from: Pick-Freeze pairs (also used by
/// the U-statistic) or a rank-ordered single sample.
#[derive(Debug, Clone)]
pub enum Design {
    PickFreeze(PickFreezeDesign),
    Rank(RankDesign),
}

/// Builds the design of every set in `us`, sharing one plain sample.
pub fn build_designs(
    code: &dyn Code,
    sampler: &dyn InputSampler,
    us: &[IndexSet],
    fam: &dyn TestFunctionFamily,
    settings: &GsaSettings,
) -> Result<Vec<Design>> {
    let n = settings.sample_size;
    if n < 2 {
        return Err(GsaError::InsufficientSample { needed: 2, got: n });
    }
    for u in us {
        check_groups(sampler, u)?;
    }
    let inputs = draw_inputs(sampler, n, settings.seed);
    let z = evaluate_branch(code, &inputs, branch::PLAIN, settings.seed)?;
    match settings.method {
        Method::Rank => {
            let aux = match fam.param_source() {
                ParamSource::OutputLaw => Vec::new(),
                _ => drawn_parameters(fam, n, settings.seed),
            };
            let dims = sampler.group_dims();
            us.iter()
                .map(|u| {
                    let x = rank_column(sampler, &dims, &inputs, u)?;
                    Ok(Design::Rank(RankDesign::new(x, z.clone(), aux.clone())?))
                })
                .collect()
        }
        Method::PickFreeze | Method::UStat => {
            let aux = if settings.method == Method::PickFreeze {
                auxiliary_rows(code, sampler, fam, settings)?
            } else {
                Vec::new()
            };
            us.iter()
                .map(|u| {
                    let inputs_pf = draw_inputs_pf(sampler, u, n, settings.seed);
                    let z_pf = evaluate_branch(code, &inputs_pf, branch::PICK_FREEZE, settings.seed)?;
                    Ok(Design::PickFreeze(PickFreezeDesign::new(z.clone(), z_pf, aux.clone())?))
                })
                .collect()
        }
    }
}

/// Estimates an index from a design with the method, budget and seed of
/// `settings`. Pick-Freeze designs serve both Pick-Freeze and U-statistics.
pub fn estimate_design(d: &Design, fam: &dyn TestFunctionFamily, settings: &GsaSettings) -> Result<IndexEstimate> {
    match (d, settings.method) {
        (Design::PickFreeze(d), Method::PickFreeze) => pick_freeze_estimate(d, fam, settings.budget, settings.seed),
        (Design::PickFreeze(d), Method::UStat) => ustat_estimate(d.z(), d.z_pf(), fam, settings.budget, settings.seed),
        (Design::Rank(d), Method::Rank) => rank_estimate(d, fam, settings.seed),
        (Design::Rank(_), m) => Err(GsaError::Unsupported(format!("method {m} needs a Pick-Freeze design"))),
        (Design::PickFreeze(_), m) => Err(GsaError::Unsupported(format!("method {m} needs a rank design"))),
    }
}

/// Estimates the index of every set in `us` on one shared plain sample.
///
/// The outer error reports design failures (bad configuration, simulator
/// errors); the inner ones are per-index estimator failures.
pub fn gsa_many(
    code: &dyn Code,
    sampler: &dyn InputSampler,
    us: &[IndexSet],
    fam: &dyn TestFunctionFamily,
    settings: &GsaSettings,
) -> Result<Vec<Result<IndexEstimate>>> {
    let designs = build_designs(code, sampler, us, fam, settings)?;
    Ok(designs.iter().map(|d| estimate_design(d, fam, settings)).collect())
}

/// Single-index form of [`gsa_many`].
pub fn gsa(
    code: &dyn Code,
    sampler: &dyn InputSampler,
    u: &IndexSet,
    fam: &dyn TestFunctionFamily,
    settings: &GsaSettings,
) -> Result<IndexEstimate> {
    gsa_many(code, sampler, std::slice::from_ref(u), fam, settings)?
        .pop()
        .expect("one index set")
}

/// The ranking column of group `u` in a plain sample.
pub fn rank_column(sampler: &dyn InputSampler, dims: &[usize], inputs: &[Vec<f64>], u: &IndexSet) -> Result<Vec<f64>> {
    let [g] = u.groups() else {
        return Err(GsaError::Unsupported(format!(
            "rank estimation handles first-order indices only, got {u}"
        )));
    };
    let offset: usize = dims[..*g].iter().sum();
    inputs
        .iter()
        .map(|x| {
            sampler
                .rank_key(*g, &x[offset..offset + dims[*g]])
                .ok_or_else(|| GsaError::Unsupported(format!("input group {} has no scalar ranking key", g + 1)))
        })
        .collect()
}
