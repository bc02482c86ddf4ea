//! Empirical probability measures on the real line, their quantile
//! functions, and Wasserstein distances / contrast costs between them.
//!
//! Every measure is stored as a sorted list of equally weighted atoms. On the
//! line the optimal coupling between two measures is the monotone one, so any
//! cost `c` with the submodularity property reduces to
//!
//! ```text
//! W_c(F, G) = ∫_0^1 c(F^-(v), G^-(v)) dv
//! ```
//!
//! which is evaluated exactly here: both quantile functions are piecewise
//! constant, and the integral is a finite sum over the merged jump grid.

use std::fmt;
use std::sync::Arc;

use crate::error::{GsaError, Result};
use crate::numeric::pairwise_sum;

/// Default number of nodes of [`QuantileGrid::default`].
pub const DEFAULT_GRID_SIZE: usize = 512;

/// A finitely supported probability measure with uniform weights `1/n`.
#[derive(Clone, PartialEq)]
pub struct EmpiricalDistribution {
    atoms: Arc<[f64]>,
}

impl fmt::Debug for EmpiricalDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.len() <= 8 {
            f.debug_struct("EmpiricalDistribution")
                .field("atoms", &&self.atoms[..])
                .finish()
        } else {
            f.debug_struct("EmpiricalDistribution")
                .field("n", &self.atoms.len())
                .field("min", &self.atoms[0])
                .field("max", &self.atoms[self.atoms.len() - 1])
                .finish()
        }
    }
}

impl EmpiricalDistribution {
    /// Builds the empirical measure of `values`. Fails on an empty input or
    /// on non-finite values.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(GsaError::Domain(
                "an empirical distribution needs at least one atom".into(),
            ));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(GsaError::Domain(format!("non-finite atom {bad}")));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { atoms: values.into() })
    }

    pub fn point_mass(x: f64) -> Result<Self> {
        Self::new(vec![x])
    }

    /// Restricts a quantile function to the nodes of `grid`: one equally
    /// weighted atom `quantile(v_k)` per node.
    pub fn from_quantile_fn<F>(grid: &QuantileGrid, quantile: F) -> Result<Self>
    where
        F: Fn(f64) -> f64,
    {
        Self::new(grid.nodes().iter().map(|&v| quantile(v)).collect())
    }

    /// Sorted atoms.
    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.atoms) / self.atoms.len() as f64
    }

    /// Translates every atom by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|x| x + c).collect(),
        }
    }

    /// Multiplies every atom by `lambda` (order is restored for negative factors).
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.atoms.iter().map(|x| x * lambda).collect())
    }

    /// Generalized inverse `F^-(v) = inf{x : F(x) >= v}`, i.e. the atom of
    /// 1-based rank `ceil(v n)`.
    pub fn quantile(&self, v: f64) -> Result<f64> {
        if !(v > 0.0 && v < 1.0) {
            return Err(GsaError::Domain(format!("quantile level must lie in (0,1), got {v}")));
        }
        Ok(self.atoms[quantile_index(self.atoms.len(), v)])
    }
}

/// 0-based index of the atom returned by the generalized inverse at `v`.
#[inline]
pub(crate) fn quantile_index(n: usize, v: f64) -> usize {
    let k = (v * n as f64).ceil() as usize;
    k.clamp(1, n) - 1
}

/// Free-function form of [`EmpiricalDistribution::quantile`].
pub fn quantile(d: &EmpiricalDistribution, v: f64) -> Result<f64> {
    d.quantile(v)
}

/// A cost `c(x, y)` whose mixed second difference is non-positive, so that
/// the monotone coupling is optimal.
#[derive(Clone)]
pub enum ContrastFunction {
    /// `|x - y|^q`, `q >= 1`.
    Power(f64),
    /// Pinball (check) loss whose Fréchet feature is the `alpha`-quantile.
    Pinball(f64),
    /// Caller-supplied cost. The caller asserts the submodularity property;
    /// it cannot be checked here.
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for ContrastFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContrastFunction::Power(q) => write!(f, "Power({q})"),
            ContrastFunction::Pinball(a) => write!(f, "Pinball({a})"),
            ContrastFunction::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl ContrastFunction {
    pub fn power(q: f64) -> Result<Self> {
        if !q.is_finite() || q < 1.0 {
            return Err(GsaError::Domain(format!("power contrast needs q >= 1, got {q}")));
        }
        Ok(ContrastFunction::Power(q))
    }

    pub fn pinball(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(GsaError::Domain(format!(
                "pinball level must lie in (0,1), got {alpha}"
            )));
        }
        Ok(ContrastFunction::Pinball(alpha))
    }

    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        ContrastFunction::Custom(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            ContrastFunction::Power(q) => power_cost(x - y, *q),
            ContrastFunction::Pinball(alpha) => {
                if x < y {
                    (1.0 - alpha) * (y - x)
                } else {
                    alpha * (x - y)
                }
            }
            ContrastFunction::Custom(f) => f(x, y),
        }
    }
}

#[inline]
fn power_cost(diff: f64, q: f64) -> f64 {
    let d = diff.abs();
    if q == 2.0 {
        d * d
    } else if q == 1.0 {
        d
    } else {
        d.powf(q)
    }
}

/// Quadrature nodes and weights for integrals over `dv` on (0,1).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Default for QuantileGrid {
    fn default() -> Self {
        Self::midpoint(DEFAULT_GRID_SIZE).expect("default grid is valid")
    }
}

impl QuantileGrid {
    /// Equally spaced midpoints `v_k = (k - 1/2)/size` with uniform weights.
    pub fn midpoint(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(GsaError::Domain("quantile grid needs at least one node".into()));
        }
        let h = 1.0 / size as f64;
        Ok(Self {
            nodes: (0..size).map(|k| (k as f64 + 0.5) * h).collect(),
            weights: vec![h; size],
        })
    }

    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(GsaError::Domain(
                "grid nodes and weights must be non-empty and of equal length".into(),
            ));
        }
        if nodes.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
            return Err(GsaError::Domain("grid nodes must lie strictly inside (0,1)".into()));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GsaError::Domain("grid nodes must be strictly increasing".into()));
        }
        if weights.iter().any(|&w| w.is_nan() || w <= 0.0) {
            return Err(GsaError::Domain("grid weights must be positive".into()));
        }
        let total = pairwise_sum(&weights);
        if (total - 1.0).abs() > 1e-12 {
            return Err(GsaError::Domain(format!("grid weights sum to {total}, not 1")));
        }
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `W_q(d1, d2)`.
///
/// Equal atom counts use the order-statistic formula
/// `((1/n) Σ |x_(k) - y_(k)|^q)^(1/q)`; otherwise the quantile integral is
/// summed exactly over the merged jump grid.
pub fn wasserstein(d1: &EmpiricalDistribution, d2: &EmpiricalDistribution, q: f64) -> Result<f64> {
    let cost = wasserstein_pow(d1, d2, q)?;
    Ok(if q == 1.0 {
        cost
    } else if q == 2.0 {
        cost.sqrt()
    } else {
        cost.powf(1.0 / q)
    })
}

/// `W_q(d1, d2)^q`, the transport cost for `|x - y|^q`. Comparisons between
/// distances can use this directly since `t -> t^(1/q)` is increasing.
pub fn wasserstein_pow(d1: &EmpiricalDistribution, d2: &EmpiricalDistribution, q: f64) -> Result<f64> {
    if !q.is_finite() || q < 1.0 {
        return Err(GsaError::Domain(format!("Wasserstein order must be >= 1, got {q}")));
    }
    Ok(transport_cost(d1.atoms(), d2.atoms(), |x, y| power_cost(x - y, q)))
}

/// `∫_0^1 c(F^-(v), G^-(v)) dv`, exact for empirical inputs.
pub fn wasserstein_cost(d1: &EmpiricalDistribution, d2: &EmpiricalDistribution, c: &ContrastFunction) -> f64 {
    transport_cost(d1.atoms(), d2.atoms(), |x, y| c.eval(x, y))
}

pub(crate) fn transport_cost<C>(xs: &[f64], ys: &[f64], cost: C) -> f64
where
    C: Fn(f64, f64) -> f64,
{
    if xs.len() == ys.len() {
        let terms: Vec<f64> = xs.iter().zip(ys).map(|(&x, &y)| cost(x, y)).collect();
        return pairwise_sum(&terms) / xs.len() as f64;
    }
    merged_grid_cost(xs, ys, cost)
}

/// Quantile integral over the merged grid `{i/n1} ∪ {j/n2}`. Breakpoints are
/// tracked as integers in units of `1/(n1 n2)`, so interval boundaries are
/// compared exactly.
fn merged_grid_cost<C>(xs: &[f64], ys: &[f64], cost: C) -> f64
where
    C: Fn(f64, f64) -> f64,
{
    let (n1, n2) = (xs.len() as u128, ys.len() as u128);
    let total = (n1 * n2) as f64;
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev: u128 = 0;
    let mut terms = Vec::with_capacity(xs.len() + ys.len());
    while i < xs.len() && j < ys.len() {
        let next_x = (i as u128 + 1) * n2;
        let next_y = (j as u128 + 1) * n1;
        let t = next_x.min(next_y);
        terms.push((t - prev) as f64 / total * cost(xs[i], ys[j]));
        prev = t;
        if next_x == t {
            i += 1;
        }
        if next_y == t {
            j += 1;
        }
    }
    pairwise_sum(&terms)
}
