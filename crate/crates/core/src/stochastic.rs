//! Stochastic simulators `f_s(x, D)` seen as distribution-valued codes
//! through the empirical measure of `n` runs at each input.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use rand::SeedableRng;

use crate::design::{
    branch, draw_inputs, draw_inputs_pf, evaluate_branch, gsa, gsa_many, Code, GsaSettings, InputSampler,
};
use crate::distributions::EmpiricalDistribution;
use crate::error::{GsaError, Result};
use crate::indices::{IndexEstimate, IndexSet, OutputPoint, TestFunctionFamily};
use crate::seed::{derive_seed, StreamRng};

/// One call returns one draw of the output law at `x`; the hidden
/// randomness is fully determined by `seed`.
pub trait StochasticCode: Send + Sync {
    fn input_dim(&self) -> usize;

    fn evaluate(&self, x: &[f64], seed: u64) -> Result<f64>;

    /// Whether concurrent calls are allowed.
    fn reentrant(&self) -> bool {
        true
    }
}

/// Stochastic code given by a closure drawing from a seeded generator.
pub struct FnStochasticCode<F> {
    dim: usize,
    f: F,
}

pub fn stochastic_fn<F>(dim: usize, f: F) -> FnStochasticCode<F>
where
    F: Fn(&[f64], &mut StreamRng) -> f64 + Send + Sync,
{
    FnStochasticCode { dim, f }
}

impl<F> StochasticCode for FnStochasticCode<F>
where
    F: Fn(&[f64], &mut StreamRng) -> f64 + Send + Sync,
{
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64], seed: u64) -> Result<f64> {
        let mut rng = StreamRng::seed_from_u64(seed);
        Ok((self.f)(x, &mut rng))
    }
}

/// Simulator run as an external program, one process per call.
///
/// The input values are written space-separated on one line of standard
/// input and the call seed is exported as `GSA_SEED`; the program prints one
/// real on standard output. A nonzero exit status is a simulator failure.
#[derive(Debug, Clone)]
pub struct ExternalProcessCode {
    program: PathBuf,
    args: Vec<String>,
    dim: usize,
    reentrant: bool,
}

impl ExternalProcessCode {
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>, dim: usize) -> Self {
        Self {
            program: program.into(),
            args,
            dim,
            reentrant: false,
        }
    }

    /// Allows concurrent processes.
    pub fn with_reentrant(mut self, reentrant: bool) -> Self {
        self.reentrant = reentrant;
        self
    }
}

impl StochasticCode for ExternalProcessCode {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn reentrant(&self) -> bool {
        self.reentrant
    }

    fn evaluate(&self, x: &[f64], seed: u64) -> Result<f64> {
        let fail = |message: String| GsaError::Simulator {
            input: x.to_vec(),
            message,
        };
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .env("GSA_SEED", seed.to_string())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| fail(format!("cannot start {}: {e}", self.program.display())))?;
        let line: Vec<String> = x.iter().map(|v| format!("{v:e}")).collect();
        if let Some(mut stdin) = child.stdin.take() {
            // A program that exits without reading its input is not an error
            // by itself; its exit status decides.
            let _ = writeln!(stdin, "{}", line.join(" "));
        }
        let out = child.wait_with_output().map_err(|e| fail(e.to_string()))?;
        if !out.status.success() {
            return Err(fail(format!(
                "exit status {}: {}",
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        let text = String::from_utf8_lossy(&out.stdout);
        let token = text
            .split_whitespace()
            .next()
            .ok_or_else(|| fail("empty output".into()))?;
        token
            .parse::<f64>()
            .map_err(|_| fail(format!("output '{token}' is not a number")))
    }
}

/// `(1/n) Σ_k δ_{f_s(x, D_k)}` with the seed of draw `k` derived from
/// `seed`.
pub fn empirical_output_measure(
    code: &dyn StochasticCode,
    x: &[f64],
    n: usize,
    seed: u64,
) -> Result<EmpiricalDistribution> {
    if n == 0 {
        return Err(GsaError::Domain("approximation size n must be at least 1".into()));
    }
    let draws = (0..n)
        .map(|k| {
            let y = code.evaluate(x, derive_seed(seed, &[k as u64])).map_err(|e| match e {
                GsaError::Simulator { .. } => e,
                other => GsaError::Simulator {
                    input: x.to_vec(),
                    message: other.to_string(),
                },
            })?;
            if y.is_finite() {
                Ok(y)
            } else {
                Err(GsaError::Simulator {
                    input: x.to_vec(),
                    message: format!("non-finite output {y}"),
                })
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    EmpiricalDistribution::new(draws)
}

/// A stochastic code viewed as the distribution-valued code
/// `x ↦ μ_{x,n}`.
pub struct EmpiricalMeasureCode<'a> {
    code: &'a dyn StochasticCode,
    n: usize,
}

impl<'a> EmpiricalMeasureCode<'a> {
    pub fn new(code: &'a dyn StochasticCode, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(GsaError::Domain("approximation size n must be at least 1".into()));
        }
        Ok(Self { code, n })
    }
}

impl Code for EmpiricalMeasureCode<'_> {
    fn input_dim(&self) -> usize {
        self.code.input_dim()
    }

    fn output(&self, x: &[f64], seed: u64) -> Result<OutputPoint> {
        empirical_output_measure(self.code, x, self.n, seed).map(OutputPoint::Distribution)
    }

    fn reentrant(&self) -> bool {
        self.code.reentrant()
    }
}

/// The `2·N·n` Pick-Freeze design built from a stochastic code.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticDesignResult {
    pub measures: Vec<EmpiricalDistribution>,
    pub measures_pf: Vec<EmpiricalDistribution>,
    pub inputs: Vec<Vec<f64>>,
    pub inputs_pf: Vec<Vec<f64>>,
    pub sample_size: usize,
    pub approximation_size: usize,
}

fn into_measures(points: Vec<OutputPoint>) -> Vec<EmpiricalDistribution> {
    points
        .into_iter()
        .map(|p| match p {
            OutputPoint::Distribution(d) => d,
            OutputPoint::Scalar(_) => unreachable!("empirical measure code returns distributions"),
        })
        .collect()
}

pub fn stochastic_design(
    code: &dyn StochasticCode,
    sampler: &dyn InputSampler,
    u: &IndexSet,
    sample_size: usize,
    n: usize,
    seed: u64,
) -> Result<StochasticDesignResult> {
    let measure_code = EmpiricalMeasureCode::new(code, n)?;
    let inputs = draw_inputs(sampler, sample_size, seed);
    let inputs_pf = draw_inputs_pf(sampler, u, sample_size, seed);
    let measures = evaluate_branch(&measure_code, &inputs, branch::PLAIN, seed)?;
    let measures_pf = evaluate_branch(&measure_code, &inputs_pf, branch::PICK_FREEZE, seed)?;
    Ok(StochasticDesignResult {
        measures: into_measures(measures),
        measures_pf: into_measures(measures_pf),
        inputs,
        inputs_pf,
        sample_size,
        approximation_size: n,
    })
}

/// Index of the distribution-valued code `x ↦ μ_{x,n}`. Pick-Freeze and
/// U-statistics use `2·N·n` simulator calls, the rank method `N·n`.
pub fn stochastic_gsa(
    code: &dyn StochasticCode,
    sampler: &dyn InputSampler,
    u: &IndexSet,
    fam: &dyn TestFunctionFamily,
    n: usize,
    settings: &GsaSettings,
) -> Result<IndexEstimate> {
    gsa(&EmpiricalMeasureCode::new(code, n)?, sampler, u, fam, settings)
}

/// [`stochastic_gsa`] for several index sets sharing the plain sample.
pub fn stochastic_gsa_many(
    code: &dyn StochasticCode,
    sampler: &dyn InputSampler,
    us: &[IndexSet],
    fam: &dyn TestFunctionFamily,
    n: usize,
    settings: &GsaSettings,
) -> Result<Vec<Result<IndexEstimate>>> {
    gsa_many(&EmpiricalMeasureCode::new(code, n)?, sampler, us, fam, settings)
}

/// Assumption on the output laws `μ_x` used to size `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CalibrationRegime {
    /// Supported on an interval of the given width.
    UniformSupport {
        width: f64,
    },
    LogConcave {
        sigma: f64,
    },
    GaussianMixture,
    /// No assumption: falls back to `n = N²`.
    Generic,
}

impl CalibrationRegime {
    /// Default constant of the regime's bound.
    pub fn default_constant(&self) -> f64 {
        match self {
            CalibrationRegime::UniformSupport { .. } => 4.0 / std::f64::consts::LN_2,
            _ => 1.0,
        }
    }
}

pub const DEFAULT_CALIBRATION_CEILING: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Overrides the regime's default constant.
    pub constant: Option<f64>,
    pub ceiling: u64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            constant: None,
            ceiling: DEFAULT_CALIBRATION_CEILING,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub n: u64,
    pub warning: Option<String>,
}

/// Smallest `n >= lo` such that `bound(n') <= target` for every `n' >= n`,
/// given that `bound` is decreasing on `[peak, ∞)`. `Err` carries an
/// approximation of the required `n` when it exceeds `ceiling`.
fn smallest_tail(
    bound: impl Fn(f64) -> f64,
    target: f64,
    lo: u64,
    peak: u64,
    ceiling: u64,
) -> std::result::Result<u64, f64> {
    let ok = |n: u64| bound(n as f64) <= target;
    let n_peak = peak.max(lo);
    let mut n = if ok(n_peak) {
        n_peak
    } else {
        if !ok(ceiling) {
            // Report the requirement beyond the ceiling.
            let mut hi = ceiling as f64;
            while bound(hi) > target && hi < 1e300 {
                hi *= 2.0;
            }
            let mut low = hi / 2.0;
            for _ in 0..200 {
                let mid = 0.5 * (low + hi);
                if bound(mid) <= target {
                    hi = mid;
                } else {
                    low = mid;
                }
            }
            return Err(hi.ceil());
        }
        let (mut a, mut b) = (n_peak, ceiling);
        while b - a > 1 {
            let mid = a + (b - a) / 2;
            if ok(mid) {
                b = mid;
            } else {
                a = mid;
            }
        }
        b
    };
    while n > lo && ok(n - 1) {
        n -= 1;
    }
    Ok(n)
}

/// Approximation size `n` making the empirical-measure error negligible for
/// a sample of size `N`, with the threshold taken as `δ(N) = 1/N`.
///
/// * uniform support of width `w`: `C w² / (n+1) <= N^-3` with `C = 4/ln 2`;
/// * log-concave with scale `σ`: `C σ² ln n / n <= N^-3`, `n >= 3`;
/// * Gaussian mixture: `C ln ln n / n <= N^-2`, `n >= 3`;
/// * generic: `n = N²`, flagged with a warning.
pub fn calibrate_n(sample_size: usize, regime: CalibrationRegime, opts: &CalibrationOptions) -> Result<Calibration> {
    if sample_size < 2 {
        return Err(GsaError::InsufficientSample {
            needed: 2,
            got: sample_size,
        });
    }
    let c = opts.constant.unwrap_or_else(|| regime.default_constant());
    if !(c > 0.0 && c.is_finite()) {
        return Err(GsaError::Domain(format!(
            "calibration constant must be positive, got {c}"
        )));
    }
    let big_n = sample_size as f64;
    let infeasible = |required: f64| GsaError::CalibrationInfeasible {
        required,
        ceiling: opts.ceiling,
    };
    let n = match regime {
        CalibrationRegime::UniformSupport { width } => {
            if !(width > 0.0 && width.is_finite()) {
                return Err(GsaError::Domain(format!("support width must be positive, got {width}")));
            }
            let target = big_n.powi(-3);
            smallest_tail(|n| c * width * width / (n + 1.0), target, 1, 1, opts.ceiling).map_err(infeasible)?
        }
        CalibrationRegime::LogConcave { sigma } => {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(GsaError::Domain(format!("sigma must be positive, got {sigma}")));
            }
            let target = big_n.powi(-3);
            smallest_tail(|n| c * sigma * sigma * n.ln() / n, target, 3, 3, opts.ceiling).map_err(infeasible)?
        }
        CalibrationRegime::GaussianMixture => {
            let target = big_n.powi(-2);
            // ln ln n / n increases up to n ≈ 5.8 and decreases afterwards.
            smallest_tail(|n| c * n.ln().ln() / n, target, 3, 6, opts.ceiling).map_err(infeasible)?
        }
        CalibrationRegime::Generic => {
            let n = (sample_size as u64).saturating_mul(sample_size as u64);
            if n > opts.ceiling {
                return Err(infeasible(n as f64));
            }
            return Ok(Calibration {
                n,
                warning: Some("no assumption on the output laws: falling back to n = N^2".into()),
            });
        }
    };
    Ok(Calibration { n, warning: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn deterministic_code_gives_repeated_atom() {
        let code = stochastic_fn(1, |x, _| 2.0 * x[0]);
        let d = empirical_output_measure(&code, &[1.5], 7, 3).unwrap();
        assert_eq!(d.atoms(), &[3.0; 7]);
    }

    #[test]
    fn atoms_are_the_sorted_draws() {
        let code = stochastic_fn(1, |_, rng| rng.random::<f64>());
        let d = empirical_output_measure(&code, &[0.0], 50, 9).unwrap();
        let mut draws: Vec<f64> = (0..50)
            .map(|k| code.evaluate(&[0.0], derive_seed(9, &[k])).unwrap())
            .collect();
        draws.sort_by(f64::total_cmp);
        assert_eq!(d.atoms(), draws.as_slice());
    }

    #[test]
    fn zero_approximation_size_rejected() {
        let code = stochastic_fn(1, |_, _| 0.0);
        assert!(empirical_output_measure(&code, &[0.0], 0, 0).is_err());
    }

    #[test]
    fn failures_carry_the_input() {
        let code = stochastic_fn(2, |_, _| f64::NAN);
        match empirical_output_measure(&code, &[1.0, 2.0], 3, 0) {
            Err(GsaError::Simulator { input, .. }) => assert_eq!(input, vec![1.0, 2.0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn calibration_uniform_and_generic() {
        let opts = CalibrationOptions::default();
        let cal = calibrate_n(2, CalibrationRegime::UniformSupport { width: 1.0 }, &opts).unwrap();
        assert_eq!(cal.n, 46);
        let c = 4.0 / std::f64::consts::LN_2;
        assert!(c / 47.0 <= 1.0 / 8.0 && c / 46.0 > 1.0 / 8.0);
        let g = calibrate_n(10, CalibrationRegime::Generic, &opts).unwrap();
        assert_eq!(g.n, 100);
        assert!(g.warning.is_some());
    }

    #[test]
    fn calibration_ceiling() {
        let opts = CalibrationOptions {
            constant: None,
            ceiling: 1000,
        };
        match calibrate_n(100, CalibrationRegime::UniformSupport { width: 1.0 }, &opts) {
            Err(GsaError::CalibrationInfeasible { required, ceiling }) => {
                assert_eq!(ceiling, 1000);
                assert!(required > 5.0e6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
