//! Test-function families. Each sensitivity index handled by the crate is the
//! universal index built from a family `T_a` and a parameter law `Q`:
//!
//! ```text
//!            ∫ Var(E[T_a(Z) | X_u]) dQ(a)
//! S_u  =  ---------------------------------
//!                ∫ Var(T_a(Z)) dQ(a)
//! ```
//!
//! Estimators evaluate families through a [`BoundKernel`], which a family may
//! specialize to precompute whatever its evaluations share (the
//! Wasserstein-ball family caches the distance matrices, for instance).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{quantile_index, wasserstein_pow, EmpiricalDistribution};
use crate::error::{GsaError, Result};

/// A code output: a real number or a distribution on the real line.
#[derive(Debug, Clone, PartialEq)]
pub enum OutputPoint {
    Scalar(f64),
    Distribution(EmpiricalDistribution),
}

impl OutputPoint {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            OutputPoint::Scalar(x) => Some(*x),
            OutputPoint::Distribution(_) => None,
        }
    }

    pub fn as_distribution(&self) -> Option<&EmpiricalDistribution> {
        match self {
            OutputPoint::Distribution(d) => Some(d),
            OutputPoint::Scalar(_) => None,
        }
    }
}

impl From<f64> for OutputPoint {
    fn from(x: f64) -> Self {
        OutputPoint::Scalar(x)
    }
}

impl From<EmpiricalDistribution> for OutputPoint {
    fn from(d: EmpiricalDistribution) -> Self {
        OutputPoint::Distribution(d)
    }
}

pub trait ParamSampler: Send + Sync {
    fn sample(&self, rng: &mut dyn RngCore) -> OutputPoint;
}

impl<F> ParamSampler for F
where
    F: Fn(&mut dyn RngCore) -> OutputPoint + Send + Sync,
{
    fn sample(&self, rng: &mut dyn RngCore) -> OutputPoint {
        self(rng)
    }
}

/// Where the family parameters `a` come from.
#[derive(Clone)]
pub enum ParamSource {
    /// `a ~ P^{⊗m}`, the law of the output itself.
    OutputLaw,
    /// `a = v ~ U([0,1])`.
    UniformUnit,
    Custom(Arc<dyn ParamSampler>),
}

impl fmt::Debug for ParamSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamSource::OutputLaw => write!(f, "OutputLaw"),
            ParamSource::UniformUnit => write!(f, "UniformUnit"),
            ParamSource::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl ParamSource {
    /// Draws one parameter point for the non-output-law sources.
    pub fn draw(&self, rng: &mut dyn RngCore) -> Option<OutputPoint> {
        match self {
            ParamSource::OutputLaw => None,
            ParamSource::UniformUnit => Some(OutputPoint::Scalar(open_unit(rng))),
            ParamSource::Custom(s) => Some(s.sample(rng)),
        }
    }
}

/// Uniform draw on the open interval (0,1).
pub(crate) fn open_unit(rng: &mut dyn RngCore) -> f64 {
    loop {
        // 53 random bits, centred on the dyadic cell so 0 is never produced.
        let v = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        if v < 1.0 {
            return v;
        }
    }
}

/// Evaluation of a family against fixed parameter rows and evaluation points.
///
/// `tuple[l]` indexes row `l` of the parameters, `point` indexes the points.
pub trait BoundKernel: Send + Sync {
    fn value(&self, tuple: &[usize], point: usize) -> f64;

    /// Writes `T_tuple(points[p])` into `out[p]` for every point.
    fn fill(&self, tuple: &[usize], out: &mut [f64]) {
        for (p, slot) in out.iter_mut().enumerate() {
            *slot = self.value(tuple, p);
        }
    }
}

/// A family of test functions `T_a(z)` with `a` made of `arity` parameter
/// points.
pub trait TestFunctionFamily: Send + Sync {
    fn name(&self) -> &str;

    fn arity(&self) -> usize;

    fn param_source(&self) -> ParamSource;

    fn evaluate(&self, params: &[&OutputPoint], z: &OutputPoint) -> Result<f64>;

    /// Binds the family to parameter rows and evaluation points. The default
    /// evaluates pointwise through [`TestFunctionFamily::evaluate`]; failed
    /// evaluations surface as NaN and are rejected by the estimators.
    fn bind<'a>(
        &'a self,
        params: &'a [&'a [OutputPoint]],
        points: &'a [OutputPoint],
    ) -> Result<Box<dyn BoundKernel + 'a>> {
        check_rows(self.arity(), params)?;
        Ok(Box::new(GenericKernel {
            family: self,
            params,
            points,
        }))
    }
}

fn check_rows(arity: usize, params: &[&[OutputPoint]]) -> Result<()> {
    if params.len() != arity {
        return Err(GsaError::InvalidDesign(format!(
            "family arity {arity} but {} parameter rows supplied",
            params.len()
        )));
    }
    Ok(())
}

struct GenericKernel<'a, F: ?Sized> {
    family: &'a F,
    params: &'a [&'a [OutputPoint]],
    points: &'a [OutputPoint],
}

impl<F: TestFunctionFamily + ?Sized> BoundKernel for GenericKernel<'_, F> {
    fn value(&self, tuple: &[usize], point: usize) -> f64 {
        let a: Vec<&OutputPoint> = tuple.iter().zip(self.params).map(|(&i, row)| &row[i]).collect();
        self.family.evaluate(&a, &self.points[point]).unwrap_or(f64::NAN)
    }

    fn fill(&self, tuple: &[usize], out: &mut [f64]) {
        let a: Vec<&OutputPoint> = tuple.iter().zip(self.params).map(|(&i, row)| &row[i]).collect();
        for (slot, z) in out.iter_mut().zip(self.points) {
            *slot = self.family.evaluate(&a, z).unwrap_or(f64::NAN);
        }
    }
}

fn scalars(points: &[OutputPoint], what: &str) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|p| {
            p.as_scalar()
                .ok_or_else(|| GsaError::Unsupported(format!("{what} needs scalar outputs")))
        })
        .collect()
}

fn distributions<'a>(points: &'a [OutputPoint], what: &str) -> Result<Vec<&'a EmpiricalDistribution>> {
    points
        .iter()
        .map(|p| {
            p.as_distribution()
                .ok_or_else(|| GsaError::Unsupported(format!("{what} needs distribution-valued outputs")))
        })
        .collect()
}

/// Identity family: the universal index is the Sobol index.
#[derive(Debug, Clone, Copy, Default)]
pub struct SobolFamily;

pub fn family_sobol() -> SobolFamily {
    SobolFamily
}

struct ValuesKernel(Vec<f64>);

impl BoundKernel for ValuesKernel {
    fn value(&self, _tuple: &[usize], point: usize) -> f64 {
        self.0[point]
    }

    fn fill(&self, _tuple: &[usize], out: &mut [f64]) {
        out.copy_from_slice(&self.0);
    }
}

impl TestFunctionFamily for SobolFamily {
    fn name(&self) -> &str {
        "sobol"
    }

    fn arity(&self) -> usize {
        0
    }

    fn param_source(&self) -> ParamSource {
        ParamSource::OutputLaw
    }

    fn evaluate(&self, _params: &[&OutputPoint], z: &OutputPoint) -> Result<f64> {
        z.as_scalar()
            .ok_or_else(|| GsaError::Unsupported("Sobol family needs scalar outputs".into()))
    }

    fn bind<'a>(
        &'a self,
        params: &'a [&'a [OutputPoint]],
        points: &'a [OutputPoint],
    ) -> Result<Box<dyn BoundKernel + 'a>> {
        check_rows(0, params)?;
        Ok(Box::new(ValuesKernel(scalars(points, "Sobol family")?)))
    }
}

/// Half-line indicators `1{z <= a}` with `a` drawn from the output law: the
/// Cramér-von-Mises index.
#[derive(Debug, Clone, Copy, Default)]
pub struct CvmFamily;

pub fn family_cvm() -> CvmFamily {
    CvmFamily
}

struct CvmKernel {
    thresholds: Vec<f64>,
    values: Vec<f64>,
}

impl BoundKernel for CvmKernel {
    fn value(&self, tuple: &[usize], point: usize) -> f64 {
        indicator(self.values[point] <= self.thresholds[tuple[0]])
    }

    fn fill(&self, tuple: &[usize], out: &mut [f64]) {
        let a = self.thresholds[tuple[0]];
        for (slot, &z) in out.iter_mut().zip(&self.values) {
            *slot = indicator(z <= a);
        }
    }
}

#[inline]
fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl TestFunctionFamily for CvmFamily {
    fn name(&self) -> &str {
        "cvm"
    }

    fn arity(&self) -> usize {
        1
    }

    fn param_source(&self) -> ParamSource {
        ParamSource::OutputLaw
    }

    fn evaluate(&self, params: &[&OutputPoint], z: &OutputPoint) -> Result<f64> {
        let (Some(a), Some(z)) = (params.first().and_then(|a| a.as_scalar()), z.as_scalar()) else {
            return Err(GsaError::Unsupported(
                "CvM family needs one scalar parameter and a scalar output".into(),
            ));
        };
        Ok(indicator(z <= a))
    }

    fn bind<'a>(
        &'a self,
        params: &'a [&'a [OutputPoint]],
        points: &'a [OutputPoint],
    ) -> Result<Box<dyn BoundKernel + 'a>> {
        check_rows(1, params)?;
        Ok(Box::new(CvmKernel {
            thresholds: scalars(params[0], "CvM family")?,
            values: scalars(points, "CvM family")?,
        }))
    }
}

/// Wasserstein-ball indicators `1{W_q(F1, F) <= W_q(F1, F2)}` with
/// `(F1, F2)` drawn from the output law.
#[derive(Debug, Clone, Copy)]
pub struct WassersteinBallFamily {
    q: f64,
}

pub fn family_wasserstein_ball(q: f64) -> Result<WassersteinBallFamily> {
    if !q.is_finite() || q < 1.0 {
        return Err(GsaError::Domain(format!("Wasserstein order must be >= 1, got {q}")));
    }
    Ok(WassersteinBallFamily { q })
}

impl WassersteinBallFamily {
    pub fn order(&self) -> f64 {
        self.q
    }
}

/// Distances are kept as `W_q^q`; the indicator only compares them.
struct BallKernel {
    /// `W_q^q(F1_i, point_p)`, row-major `[i * n_points + p]`.
    to_points: Vec<f64>,
    /// `W_q^q(F1_i, F2_k)`, row-major `[i * n_second + k]`.
    radii: Vec<f64>,
    n_points: usize,
    n_second: usize,
}

impl BoundKernel for BallKernel {
    fn value(&self, tuple: &[usize], point: usize) -> f64 {
        let r = self.radii[tuple[0] * self.n_second + tuple[1]];
        indicator(self.to_points[tuple[0] * self.n_points + point] <= r)
    }

    fn fill(&self, tuple: &[usize], out: &mut [f64]) {
        let r = self.radii[tuple[0] * self.n_second + tuple[1]];
        let row = &self.to_points[tuple[0] * self.n_points..(tuple[0] + 1) * self.n_points];
        for (slot, &d) in out.iter_mut().zip(row) {
            *slot = indicator(d <= r);
        }
    }
}

fn distance_matrix(rows: &[&EmpiricalDistribution], cols: &[&EmpiricalDistribution], q: f64) -> Result<Vec<f64>> {
    let chunks: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|r| {
            cols.iter()
                .map(|c| wasserstein_pow(r, c, q))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(chunks.concat())
}

impl TestFunctionFamily for WassersteinBallFamily {
    fn name(&self) -> &str {
        "wasserstein_ball"
    }

    fn arity(&self) -> usize {
        2
    }

    fn param_source(&self) -> ParamSource {
        ParamSource::OutputLaw
    }

    fn evaluate(&self, params: &[&OutputPoint], z: &OutputPoint) -> Result<f64> {
        let err = || {
            GsaError::Unsupported(
                "Wasserstein-ball family needs two distribution parameters and a distribution output".into(),
            )
        };
        if params.len() != 2 {
            return Err(err());
        }
        let f1 = params[0].as_distribution().ok_or_else(err)?;
        let f2 = params[1].as_distribution().ok_or_else(err)?;
        let f = z.as_distribution().ok_or_else(err)?;
        Ok(indicator(
            wasserstein_pow(f1, f, self.q)? <= wasserstein_pow(f1, f2, self.q)?,
        ))
    }

    fn bind<'a>(
        &'a self,
        params: &'a [&'a [OutputPoint]],
        points: &'a [OutputPoint],
    ) -> Result<Box<dyn BoundKernel + 'a>> {
        check_rows(2, params)?;
        let first = distributions(params[0], "Wasserstein-ball family")?;
        let second = distributions(params[1], "Wasserstein-ball family")?;
        let pts = distributions(points, "Wasserstein-ball family")?;
        Ok(Box::new(BallKernel {
            to_points: distance_matrix(&first, &pts, self.q)?,
            radii: distance_matrix(&first, &second, self.q)?,
            n_points: pts.len(),
            n_second: second.len(),
        }))
    }
}

/// Quantile evaluations `T_v(F) = F^-(v)` with `v ~ U([0,1])`. The resulting
/// universal index is the Fréchet (Wasserstein barycenter) index.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuantileFamily;

pub fn family_quantile_eval() -> QuantileFamily {
    QuantileFamily
}

struct QuantileKernel<'a> {
    levels: Vec<f64>,
    dists: Vec<&'a EmpiricalDistribution>,
}

impl BoundKernel for QuantileKernel<'_> {
    fn value(&self, tuple: &[usize], point: usize) -> f64 {
        let d = self.dists[point];
        d.atoms()[quantile_index(d.len(), self.levels[tuple[0]])]
    }

    fn fill(&self, tuple: &[usize], out: &mut [f64]) {
        let v = self.levels[tuple[0]];
        for (slot, d) in out.iter_mut().zip(&self.dists) {
            *slot = d.atoms()[quantile_index(d.len(), v)];
        }
    }
}

impl TestFunctionFamily for QuantileFamily {
    fn name(&self) -> &str {
        "quantile"
    }

    fn arity(&self) -> usize {
        1
    }

    fn param_source(&self) -> ParamSource {
        ParamSource::UniformUnit
    }

    fn evaluate(&self, params: &[&OutputPoint], z: &OutputPoint) -> Result<f64> {
        let (Some(v), Some(f)) = (params.first().and_then(|a| a.as_scalar()), z.as_distribution()) else {
            return Err(GsaError::Unsupported(
                "quantile family needs a level in (0,1) and a distribution output".into(),
            ));
        };
        f.quantile(v)
    }

    fn bind<'a>(
        &'a self,
        params: &'a [&'a [OutputPoint]],
        points: &'a [OutputPoint],
    ) -> Result<Box<dyn BoundKernel + 'a>> {
        check_rows(1, params)?;
        let levels = scalars(params[0], "quantile family")?;
        if let Some(bad) = levels.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(GsaError::Domain(format!("quantile level {bad} outside (0,1)")));
        }
        Ok(Box::new(QuantileKernel {
            levels,
            dists: distributions(points, "quantile family")?,
        }))
    }
}

type Evaluator = dyn Fn(&[&OutputPoint], &OutputPoint) -> f64 + Send + Sync;

/// A family given by a closure.
#[derive(Clone)]
pub struct CustomFamily {
    name: String,
    arity: usize,
    source: ParamSource,
    evaluator: Arc<Evaluator>,
}

impl CustomFamily {
    pub fn new<F>(name: impl Into<String>, arity: usize, source: ParamSource, evaluator: F) -> Self
    where
        F: Fn(&[&OutputPoint], &OutputPoint) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            arity,
            source,
            evaluator: Arc::new(evaluator),
        }
    }
}

impl TestFunctionFamily for CustomFamily {
    fn name(&self) -> &str {
        &self.name
    }

    fn arity(&self) -> usize {
        self.arity
    }

    fn param_source(&self) -> ParamSource {
        self.source.clone()
    }

    fn evaluate(&self, params: &[&OutputPoint], z: &OutputPoint) -> Result<f64> {
        if params.len() != self.arity {
            return Err(GsaError::InvalidDesign(format!(
                "family {} expects {} parameters, got {}",
                self.name,
                self.arity,
                params.len()
            )));
        }
        Ok((self.evaluator)(params, z))
    }
}

/// Estimation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "pf")]
    PickFreeze,
    #[serde(rename = "ustat")]
    UStat,
    #[serde(rename = "rank")]
    Rank,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::PickFreeze => "pf",
            Method::UStat => "ustat",
            Method::Rank => "rank",
        })
    }
}

impl FromStr for Method {
    type Err = GsaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pf" | "pick-freeze" | "pickfreeze" => Ok(Method::PickFreeze),
            "ustat" | "u-stat" | "ustatistic" => Ok(Method::UStat),
            "rank" => Ok(Method::Rank),
            other => Err(GsaError::Domain(format!("unknown method '{other}'"))),
        }
    }
}

/// An estimated index together with its ratio components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexEstimate {
    pub value: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub method: Method,
    /// Sample size `N`.
    pub sample_size: usize,
    /// Family arity `m`.
    pub arity: usize,
    /// Seed of the tie-breaking / subsampling streams, when any were used.
    pub seed: Option<u64>,
    /// Number of input values involved in ties (rank method only).
    pub tied_inputs: usize,
}

impl IndexEstimate {
    pub(crate) fn from_ratio(
        numerator: f64,
        denominator: f64,
        method: Method,
        sample_size: usize,
        arity: usize,
    ) -> Result<Self> {
        if !numerator.is_finite() || !denominator.is_finite() {
            return Err(GsaError::Domain(
                "non-finite test-function evaluations in the design".into(),
            ));
        }
        Ok(Self {
            value: numerator / denominator,
            numerator,
            denominator,
            method,
            sample_size,
            arity,
            seed: None,
            tied_inputs: 0,
        })
    }
}

/// A set `u` of input groups, stored 0-based and displayed 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    /// From 0-based group indices.
    pub fn new(groups: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: BTreeSet<usize> = groups.into_iter().collect();
        if set.is_empty() {
            return Err(GsaError::Domain("index set must not be empty".into()));
        }
        Ok(Self(set.into_iter().collect()))
    }

    /// Single group, 0-based.
    pub fn single(group: usize) -> Self {
        Self(vec![group])
    }

    /// From 1-based group labels, as written in tables.
    pub fn one_based(labels: &[usize]) -> Result<Self> {
        if labels.contains(&0) {
            return Err(GsaError::Domain("1-based index labels start at 1".into()));
        }
        Self::new(labels.iter().map(|l| l - 1))
    }

    pub fn groups(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, group: usize) -> bool {
        self.0.binary_search(&group).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.0.iter().map(|g| (g + 1).to_string()).collect();
        write!(f, "{{{}}}", labels.join(","))
    }
}

impl FromStr for IndexSet {
    type Err = GsaError;

    /// Parses 1-based labels such as `1`, `1,3` or `{1,3}`.
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('{').trim_end_matches('}');
        let labels = body
            .split([',', ' ', '+'])
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| GsaError::Domain(format!("bad index label '{t}' in '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::one_based(&labels)
    }
}
