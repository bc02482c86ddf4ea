use std::sync::Arc;
use std::time::Instant;

use gsa_core::models::{
    gremaud_index_sets, gremaud_inputs, gremaud_problem, gremaud_scalar_code, toy_frechet_indices, toy_ideal_code,
    toy_wball_indices, GremaudInner, GremaudPrior, ToyIndices, ToyModelParams, ToyStochasticCode,
    GREMAUD_CVM_REFERENCE,
};
use gsa_core::second_level::second_level_gsa_many;
use gsa_core::seed::{derive_seed, tag};
use gsa_core::stochastic::{
    CalibrationOptions, EmpiricalMeasureCode, ExternalProcessCode, DEFAULT_CALIBRATION_CEILING,
};
use gsa_core::{
    build_designs, calibrate_n, estimate_design, family_cvm, family_quantile_eval, family_sobol,
    family_wasserstein_ball, gsa_many, uniform_interval_family, CalibrationRegime, Code, Design, GsaSettings,
    IndexEstimate, IndexSet, InputSampler, Method, QuantileGrid, SecondLevelProblem, StochasticCode,
    TestFunctionFamily,
};
use rayon::prelude::*;

use crate::args::{CalibrateArgs, EstimateArgs, FamilySpec, GremaudArgs, SecondLevelArgs, ToyArgs};
use crate::design_io::{load_design, write_design};
use crate::error::CliError;
use crate::report::{Cell, Table};

const SEED: u64 = 1;

fn parse_method(s: Option<&str>, default: Method) -> Result<Method, CliError> {
    s.map_or(Ok(default), |s| {
        s.parse()
            .map_err(|e: gsa_core::GsaError| CliError::field("method", e.to_string()))
    })
}

fn parse_family(name: &str, q: Option<f64>) -> Result<Box<dyn TestFunctionFamily>, CliError> {
    Ok(match name {
        "sobol" => Box::new(family_sobol()),
        "cvm" => Box::new(family_cvm()),
        "wball" => {
            Box::new(family_wasserstein_ball(q.unwrap_or(2.0)).map_err(|e| CliError::field("q", e.to_string()))?)
        }
        "quantile" | "frechet" => Box::new(family_quantile_eval()),
        other => {
            return Err(CliError::field(
                "family",
                format!("unknown family '{other}' (expected sobol, cvm, wball or quantile)"),
            ))
        }
    })
}

/// Index sets from 1-based labels; rank estimation takes first-order sets only.
fn parse_sets(labels: Option<&[String]>, default: Vec<IndexSet>, method: Method) -> Result<Vec<IndexSet>, CliError> {
    let sets: Vec<IndexSet> = match labels {
        None => default,
        Some([]) => return Err(CliError::field("u", "no index sets given")),
        Some(labels) => labels
            .iter()
            .map(|l| {
                l.parse()
                    .map_err(|e: gsa_core::GsaError| CliError::field("u", e.to_string()))
            })
            .collect::<Result<_, _>>()?,
    };
    if method == Method::Rank {
        if let Some(u) = sets.iter().find(|u| u.groups().len() != 1) {
            return Err(CliError::field(
                "u",
                format!("rank estimation takes first-order sets only, got {u}"),
            ));
        }
    }
    Ok(sets)
}

fn positive(value: Option<usize>, default: usize, field: &str) -> Result<usize, CliError> {
    match value.unwrap_or(default) {
        0 => Err(CliError::field(field, "must be at least 1")),
        v => Ok(v),
    }
}

/// Worker pool sized by `GSA_WORKERS` (all cores when unset).
fn worker_pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var("GSA_WORKERS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::field("GSA_WORKERS", format!("'{v}' is not a worker count")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::field("GSA_WORKERS", e.to_string()))
}

fn replication_seed(seed: u64, r: usize) -> u64 {
    derive_seed(seed, &[tag::REPLICATION, r as u64])
}

struct Replication {
    seed: u64,
    estimates: Vec<gsa_core::Result<IndexEstimate>>,
    seconds: f64,
}

/// Runs `run(seed)` for every replication on the worker pool, keeping
/// replication order.
fn replicate<F>(replications: usize, seed: u64, run: F) -> Result<Vec<Replication>, CliError>
where
    F: Fn(u64) -> gsa_core::Result<Vec<gsa_core::Result<IndexEstimate>>> + Sync,
{
    let pool = worker_pool()?;
    pool.install(|| {
        (0..replications)
            .into_par_iter()
            .map(|r| {
                let seed = replication_seed(seed, r);
                let start = Instant::now();
                let estimates = run(seed)?;
                Ok(Replication {
                    seed,
                    estimates,
                    seconds: start.elapsed().as_secs_f64(),
                })
            })
            .collect::<gsa_core::Result<Vec<_>>>()
    })
    .map_err(CliError::from)
}

fn estimate_cells(e: &gsa_core::Result<IndexEstimate>) -> [Cell; 4] {
    match e {
        Ok(e) => [e.value.into(), e.numerator.into(), e.denominator.into(), Cell::Empty],
        Err(err) => [Cell::Empty, Cell::Empty, Cell::Empty, err.to_string().into()],
    }
}

struct Summary {
    label: String,
    values: Vec<f64>,
    target: Option<f64>,
}

fn summarize(sets: &[IndexSet], reps: &[Replication], target: impl Fn(usize) -> Option<f64>) -> Vec<Summary> {
    sets.iter()
        .enumerate()
        .map(|(k, u)| Summary {
            label: u.to_string(),
            values: reps
                .iter()
                .filter_map(|r| r.estimates[k].as_ref().ok().map(|e| e.value))
                .collect(),
            target: target(k),
        })
        .collect()
}

fn print_summary(title: &str, target_name: &str, rows: &[Summary]) {
    eprintln!("{title}");
    for s in rows {
        if s.values.is_empty() {
            eprintln!("  u={}: no successful replication", s.label);
            continue;
        }
        let n = s.values.len() as f64;
        let mean = s.values.iter().sum::<f64>() / n;
        match s.target {
            Some(t) => {
                let mut se: Vec<f64> = s.values.iter().map(|v| (v - t).powi(2)).collect();
                se.sort_by(f64::total_cmp);
                let mse = se.iter().sum::<f64>() / n;
                let median = se[se.len() / 2];
                eprintln!(
                    "  u={}: {target_name} {t:.5}, mean {mean:.5}, mse {mse:.3e}, median se {median:.3e} over {} runs",
                    s.label,
                    s.values.len()
                );
            }
            None => eprintln!("  u={}: mean {mean:.5} over {} runs", s.label, s.values.len()),
        }
    }
}

fn save_first_design(
    path: &std::path::Path,
    code: &dyn Code,
    sampler: &dyn InputSampler,
    u: &IndexSet,
    fam: &dyn TestFunctionFamily,
    settings: &GsaSettings,
) -> Result<(), CliError> {
    let design = build_designs(code, sampler, std::slice::from_ref(u), fam, settings)?
        .pop()
        .expect("one design");
    write_design(path, &design)
}

pub fn estimate(a: EstimateArgs) -> Result<Table, CliError> {
    let path = a
        .design
        .ok_or_else(|| CliError::field("design", "a design file is required"))?;
    let design = load_design(&path)?;
    let default_method = match design {
        Design::Rank(_) => Method::Rank,
        Design::PickFreeze(_) => Method::PickFreeze,
    };
    let method = parse_method(a.method.as_deref(), default_method)?;
    let family_name = a.family.unwrap_or_else(|| "sobol".into());
    let fam = parse_family(&family_name, a.q)?;
    let sample_size = match &design {
        Design::Rank(d) => d.sample_size(),
        Design::PickFreeze(d) => d.sample_size(),
    };
    let seed = a.seed.unwrap_or(SEED);
    let settings = GsaSettings::new(sample_size, method, seed).with_budget(a.budget);
    let start = Instant::now();
    let est = estimate_design(&design, fam.as_ref(), &settings);
    let mut table = Table::new(
        "estimate",
        &[
            "method",
            "family",
            "N",
            "m",
            "seed",
            "estimate",
            "numerator",
            "denominator",
            "tied_inputs",
            "error",
            "wall_time",
        ],
    );
    let [value, num, den, error] = estimate_cells(&est);
    let tied = est.as_ref().ok().map(|e| e.tied_inputs);
    table.push(vec![
        method.to_string().into(),
        family_name.into(),
        sample_size.into(),
        fam.arity().into(),
        seed.into(),
        value,
        num,
        den,
        tied.into(),
        error,
        start.elapsed().as_secs_f64().into(),
    ]);
    Ok(table)
}

const RUN_COLUMNS: [&str; 13] = [
    "method",
    "family",
    "u",
    "replication",
    "N",
    "n",
    "seed",
    "estimate",
    "numerator",
    "denominator",
    "target",
    "error",
    "wall_time",
];

struct RunTable<'a> {
    method: Method,
    family: &'a str,
    sample_size: usize,
    approximation_size: Option<usize>,
}

impl RunTable<'_> {
    fn fill(&self, table: &mut Table, sets: &[IndexSet], reps: &[Replication], target: impl Fn(usize) -> Option<f64>) {
        for (r, rep) in reps.iter().enumerate() {
            for (k, u) in sets.iter().enumerate() {
                let [value, num, den, error] = estimate_cells(&rep.estimates[k]);
                table.push(vec![
                    self.method.to_string().into(),
                    self.family.into(),
                    u.to_string().into(),
                    r.into(),
                    self.sample_size.into(),
                    self.approximation_size.into(),
                    rep.seed.into(),
                    value,
                    num,
                    den,
                    target(k).into(),
                    error,
                    rep.seconds.into(),
                ]);
            }
        }
    }
}

fn columns_with_target(name: &'static str) -> Vec<&'static str> {
    RUN_COLUMNS
        .iter()
        .map(|&c| if c == "target" { name } else { c })
        .collect()
}

pub fn toy(a: ToyArgs) -> Result<Table, CliError> {
    let p = match a.p.as_deref() {
        None => ToyModelParams::new(1.0 / 3.0, 2.0 / 3.0, 0.75)?,
        Some([p1, p2, p3]) => ToyModelParams::new(*p1, *p2, *p3).map_err(|e| CliError::field("p", e.to_string()))?,
        Some(other) => {
            return Err(CliError::field(
                "p",
                format!("expected 3 parameters, got {}", other.len()),
            ))
        }
    };
    let method = parse_method(a.method.as_deref(), Method::Rank)?;
    let family_name = a.family.unwrap_or_else(|| "frechet".into());
    let (fam, analytic): (Box<dyn TestFunctionFamily>, ToyIndices) = match family_name.as_str() {
        "frechet" => (Box::new(family_quantile_eval()), toy_frechet_indices(&p)),
        "wball" => (Box::new(family_wasserstein_ball(2.0)?), toy_wball_indices(&p)),
        other => {
            return Err(CliError::field(
                "family",
                format!("unknown toy family '{other}' (expected frechet or wball)"),
            ))
        }
    };
    let sample_size = positive(a.sample_size, 1000, "N")?;
    let replications = positive(a.replications, 1, "R")?;
    let grid = QuantileGrid::midpoint(positive(a.grid, gsa_core::distributions::DEFAULT_GRID_SIZE, "grid")?)?;
    let sets = parse_sets(a.u.as_deref(), (0..3).map(IndexSet::single).collect(), method)?;
    let seed = a.seed.unwrap_or(SEED);
    let ideal = toy_ideal_code(grid);
    let stochastic = a
        .approximation_size
        .map(|n| EmpiricalMeasureCode::new(&ToyStochasticCode, n))
        .transpose()
        .map_err(|e| CliError::field("n", e.to_string()))?;
    let code: &dyn Code = match &stochastic {
        Some(c) => c,
        None => &ideal,
    };
    let sampler = p.sampler();
    let settings = |s: u64| GsaSettings::new(sample_size, method, s).with_budget(a.budget);
    if let Some(path) = &a.save_design {
        save_first_design(
            path,
            code,
            &sampler,
            &sets[0],
            fam.as_ref(),
            &settings(replication_seed(seed, 0)),
        )?;
    }
    let reps = replicate(replications, seed, |s| {
        gsa_many(code, &sampler, &sets, fam.as_ref(), &settings(s))
    })?;

    let target = |k: usize| analytic.get(&sets[k]);
    print_summary(
        &format!("toy model, {family_name} family, {method}, N={sample_size}, {replications} replication(s)"),
        "analytic",
        &summarize(&sets, &reps, target),
    );
    let mut table = Table::new("toy", &columns_with_target("analytic"));
    RunTable {
        method,
        family: &family_name,
        sample_size,
        approximation_size: a.approximation_size,
    }
    .fill(&mut table, &sets, &reps, target);
    Ok(table)
}

/// Tabulated value for `u` among the standard Gremaud index sets.
fn reference_for(u: &IndexSet, reference: &[f64; 6]) -> Option<f64> {
    gremaud_index_sets().iter().position(|s| s == u).map(|i| reference[i])
}

fn default_sets(method: Method) -> Vec<IndexSet> {
    match method {
        Method::Rank => (0..3).map(IndexSet::single).collect(),
        _ => gremaud_index_sets(),
    }
}

pub fn gremaud(a: GremaudArgs) -> Result<Table, CliError> {
    let method = parse_method(a.method.as_deref(), Method::PickFreeze)?;
    let family_name = a.family.unwrap_or_else(|| "cvm".into());
    if !matches!(family_name.as_str(), "cvm" | "sobol") {
        return Err(CliError::field(
            "family",
            format!("'{family_name}' needs distribution outputs (expected cvm or sobol)"),
        ));
    }
    let fam = parse_family(&family_name, None)?;
    let sample_size = positive(a.sample_size, 10_000, "N")?;
    let replications = positive(a.replications, 1, "R")?;
    let sets = parse_sets(a.u.as_deref(), default_sets(method), method)?;
    let seed = a.seed.unwrap_or(SEED);
    let code = gremaud_scalar_code();
    let sampler = gremaud_inputs();
    let settings = |s: u64| GsaSettings::new(sample_size, method, s).with_budget(a.budget);
    if let Some(path) = &a.save_design {
        save_first_design(
            path,
            &code,
            &sampler,
            &sets[0],
            fam.as_ref(),
            &settings(replication_seed(seed, 0)),
        )?;
    }
    let reps = replicate(replications, seed, |s| {
        gsa_many(&code, &sampler, &sets, fam.as_ref(), &settings(s))
    })?;

    let published = (family_name == "cvm").then_some(&GREMAUD_CVM_REFERENCE);
    let target = |k: usize| published.and_then(|r| reference_for(&sets[k], r));
    print_summary(
        &format!("Gremaud function, {family_name} family, {method}, N={sample_size}, {replications} replication(s)"),
        "reference",
        &summarize(&sets, &reps, target),
    );
    let mut table = Table::new("gremaud", &columns_with_target("reference"));
    RunTable {
        method,
        family: &family_name,
        sample_size,
        approximation_size: None,
    }
    .fill(&mut table, &sets, &reps, target);
    Ok(table)
}

fn custom_problem(
    specs: &[FamilySpec],
    inner_command: Option<&[String]>,
    sample_size: usize,
    n: usize,
) -> Result<SecondLevelProblem, CliError> {
    let families = specs
        .iter()
        .map(|spec| match *spec {
            FamilySpec::UniformInterval {
                a_low,
                a_high,
                b_low,
                b_high,
            } => uniform_interval_family(a_low, a_high, b_low, b_high)
                .map_err(|e| CliError::field("families", e.to_string())),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let inner: Arc<dyn StochasticCode> = match inner_command {
        Some([program, args @ ..]) => Arc::new(ExternalProcessCode::new(program, args.to_vec(), families.len())),
        Some([]) => return Err(CliError::field("inner_command", "empty command")),
        None => Arc::new(GremaudInner),
    };
    Ok(SecondLevelProblem::new(families, inner, sample_size, n)?)
}

pub fn second_level(a: SecondLevelArgs) -> Result<Table, CliError> {
    let method = parse_method(a.method.as_deref(), Method::PickFreeze)?;
    let sample_size = positive(a.sample_size, 500, "N")?;
    let n = positive(a.approximation_size, 500, "n")?;
    let replications = positive(a.replications, 1, "R")?;
    let seed = a.seed.unwrap_or(SEED);
    let q = a.q.unwrap_or(2.0);
    let fam = family_wasserstein_ball(q).map_err(|e| CliError::field("q", e.to_string()))?;
    match a.model.as_deref() {
        None | Some("gremaud") => {}
        Some(other) => {
            return Err(CliError::field(
                "model",
                format!("unknown model '{other}' (expected gremaud)"),
            ))
        }
    }
    let (prob, prior) = match &a.families {
        Some(specs) => {
            if a.prior.is_some() {
                return Err(CliError::field("prior", "give either a prior or explicit families"));
            }
            (custom_problem(specs, a.inner_command.as_deref(), sample_size, n)?, None)
        }
        None => {
            if a.inner_command.is_some() {
                return Err(CliError::field(
                    "inner_command",
                    "an external inner code needs explicit families",
                ));
            }
            let prior: GremaudPrior = a
                .prior
                .as_deref()
                .unwrap_or("tight")
                .parse()
                .map_err(|e: gsa_core::GsaError| CliError::field("prior", e.to_string()))?;
            (gremaud_problem(prior, sample_size, n)?, Some(prior))
        }
    };
    let sets = parse_sets(a.u.as_deref(), default_sets(method), method)?;
    let reps = replicate(replications, seed, |s| {
        let settings = GsaSettings::new(sample_size, method, s).with_budget(a.budget);
        second_level_gsa_many(&prob, &sets, &fam, &settings)
    })?;

    let published = prior
        .filter(|_| method == Method::PickFreeze && q == 2.0)
        .map(|p| p.reference());
    let target = |k: usize| published.as_ref().and_then(|r| reference_for(&sets[k], r));
    let prior_name = prior.map_or("custom", |p| p.name());
    print_layout(prior_name, &summarize(&sets, &reps, target));
    let mut table = Table::new(
        "second-level",
        &["prior"]
            .into_iter()
            .chain(columns_with_target("reference"))
            .collect::<Vec<_>>(),
    );
    let mut body = Table::new("second-level", &columns_with_target("reference"));
    RunTable {
        method,
        family: "wball",
        sample_size,
        approximation_size: Some(n),
    }
    .fill(&mut body, &sets, &reps, target);
    for row in body.rows {
        table.push(std::iter::once(Cell::from(prior_name)).chain(row).collect());
    }
    Ok(table)
}

/// Published-table layout on stderr: one column per index set.
fn print_layout(prior: &str, rows: &[Summary]) {
    let header: Vec<String> = rows.iter().map(|s| format!("{:>9}", s.label)).collect();
    eprintln!("prior {prior}");
    eprintln!("  {:<10}{}", "u", header.join(" "));
    let means: Vec<String> = rows
        .iter()
        .map(|s| match s.values.len() {
            0 => format!("{:>9}", "-"),
            k => format!("{:>9.5}", s.values.iter().sum::<f64>() / k as f64),
        })
        .collect();
    eprintln!("  {:<10}{}", "estimate", means.join(" "));
    if rows.iter().any(|s| s.target.is_some()) {
        let refs: Vec<String> = rows
            .iter()
            .map(|s| s.target.map_or(format!("{:>9}", "-"), |t| format!("{t:>9.5}")))
            .collect();
        eprintln!("  {:<10}{}", "reference", refs.join(" "));
    }
}

pub fn calibrate(a: CalibrateArgs) -> Result<Table, CliError> {
    let sample_size = a
        .sample_size
        .ok_or_else(|| CliError::field("N", "a sample size is required"))?;
    let regime_name = a.regime.unwrap_or_else(|| "generic".into());
    let regime = match regime_name.as_str() {
        "uniform" => CalibrationRegime::UniformSupport {
            width: a
                .width
                .ok_or_else(|| CliError::field("width", "the uniform regime needs --width"))?,
        },
        "log-concave" => CalibrationRegime::LogConcave {
            sigma: a
                .sigma
                .ok_or_else(|| CliError::field("sigma", "the log-concave regime needs --sigma"))?,
        },
        "gaussian-mixture" => CalibrationRegime::GaussianMixture,
        "generic" => CalibrationRegime::Generic,
        other => {
            return Err(CliError::field(
                "regime",
                format!("unknown regime '{other}' (expected uniform, log-concave, gaussian-mixture or generic)"),
            ))
        }
    };
    let opts = CalibrationOptions {
        constant: a.constant,
        ceiling: a.ceiling.unwrap_or(DEFAULT_CALIBRATION_CEILING),
    };
    let cal = calibrate_n(sample_size, regime, &opts)?;
    if let Some(w) = &cal.warning {
        eprintln!("warning: {w}");
    }
    let mut table = Table::new("calibrate", &["N", "regime", "n", "warning"]);
    table.push(vec![
        sample_size.into(),
        regime_name.into(),
        cal.n.into(),
        cal.warning.clone().into(),
    ]);
    Ok(table)
}
