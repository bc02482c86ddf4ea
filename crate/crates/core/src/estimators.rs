//! Pick-Freeze, U-statistic and rank-based estimators of the universal index,
//! plus Chatterjee's rank correlation.
//!
//! All outer sums over parameter tuples are computed in fixed-size chunks and
//! reduced pairwise, so results do not depend on the number of worker
//! threads.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{GsaError, Result};
use crate::indices::{BoundKernel, IndexEstimate, Method, OutputPoint, ParamSource, TestFunctionFamily};
use crate::numeric::{binomial, pairwise_sum};
use crate::seed::{stream, tag};

const TUPLE_CHUNK: usize = 4096;

/// Above this many subsets of size `m + 2` the U-statistic switches to its
/// incomplete (budgeted) form...
pub const USTAT_FULL_SUBSET_CAP: f64 = 2.0e6;
/// ...unless the ordered-tuple reduction needs at most this many kernel
/// evaluations, in which case the complete statistic is still cheap.
pub const USTAT_FULL_WORK_CAP: f64 = 1.3e8;
pub const USTAT_DEFAULT_BUDGET: usize = 100_000;

/// Seed used by [`chatterjee_xi`] to break ties.
pub const DEFAULT_TIE_SEED: u64 = 0x5EED_71E5;

/// Paired outputs `(Z_j, Z_j^u)` plus `m` auxiliary parameter samples.
#[derive(Debug, Clone)]
pub struct PickFreezeDesign {
    z: Vec<OutputPoint>,
    z_pf: Vec<OutputPoint>,
    aux: Vec<Vec<OutputPoint>>,
}

impl PickFreezeDesign {
    pub fn new(z: Vec<OutputPoint>, z_pf: Vec<OutputPoint>, aux: Vec<Vec<OutputPoint>>) -> Result<Self> {
        let n = z.len();
        if n < 2 {
            return Err(GsaError::InsufficientSample { needed: 2, got: n });
        }
        if z_pf.len() != n {
            return Err(GsaError::InvalidDesign(format!(
                "z has {n} entries but z_pf has {}",
                z_pf.len()
            )));
        }
        if let Some((l, row)) = aux.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(GsaError::InvalidDesign(format!(
                "auxiliary row {} has {} entries, expected {n}",
                l + 1,
                row.len()
            )));
        }
        Ok(Self { z, z_pf, aux })
    }

    pub fn z(&self) -> &[OutputPoint] {
        &self.z
    }

    pub fn z_pf(&self) -> &[OutputPoint] {
        &self.z_pf
    }

    pub fn aux(&self) -> &[Vec<OutputPoint>] {
        &self.aux
    }

    pub fn sample_size(&self) -> usize {
        self.z.len()
    }
}

/// One scalar input column, the matching outputs and optional auxiliary
/// parameter samples.
#[derive(Debug, Clone)]
pub struct RankDesign {
    x: Vec<f64>,
    z: Vec<OutputPoint>,
    aux: Vec<Vec<OutputPoint>>,
}

impl RankDesign {
    pub fn new(x: Vec<f64>, z: Vec<OutputPoint>, aux: Vec<Vec<OutputPoint>>) -> Result<Self> {
        let n = x.len();
        if n < 2 {
            return Err(GsaError::InsufficientSample { needed: 2, got: n });
        }
        if z.len() != n {
            return Err(GsaError::InvalidDesign(format!(
                "x has {n} entries but z has {}",
                z.len()
            )));
        }
        if let Some((l, row)) = aux.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(GsaError::InvalidDesign(format!(
                "auxiliary row {} has {} entries, expected {n}",
                l + 1,
                row.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(GsaError::Domain("input column contains non-finite values".into()));
        }
        Ok(Self { x, z, aux })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn z(&self) -> &[OutputPoint] {
        &self.z
    }

    pub fn aux(&self) -> &[Vec<OutputPoint>] {
        &self.aux
    }

    pub fn sample_size(&self) -> usize {
        self.x.len()
    }
}

/// Parameter rows for a family: explicit auxiliary samples when given,
/// otherwise the outputs themselves for output-law families.
fn parameter_rows<'a>(
    fam: &dyn TestFunctionFamily,
    aux: &'a [Vec<OutputPoint>],
    outputs: &'a [OutputPoint],
) -> Result<Vec<&'a [OutputPoint]>> {
    let m = fam.arity();
    if m == 0 {
        return Ok(Vec::new());
    }
    if aux.is_empty() {
        return match fam.param_source() {
            ParamSource::OutputLaw => Ok(vec![outputs; m]),
            _ => Err(GsaError::InvalidDesign(format!(
                "family {} draws its parameters outside the output law; {m} auxiliary rows required",
                fam.name()
            ))),
        };
    }
    if aux.len() != m {
        return Err(GsaError::InvalidDesign(format!(
            "family {} has arity {m} but the design carries {} auxiliary rows",
            fam.name(),
            aux.len()
        )));
    }
    Ok(aux.iter().map(|r| r.as_slice()).collect())
}

/// Per-tuple moments: cross moment, mean, second moment.
#[derive(Clone, Copy, Default)]
struct Moments {
    cross: f64,
    mean_sq: f64,
    second: f64,
}

fn reduce_moments(parts: &[Moments]) -> Moments {
    let pick = |f: fn(&Moments) -> f64| pairwise_sum(&parts.iter().map(f).collect::<Vec<_>>());
    Moments {
        cross: pick(|m| m.cross),
        mean_sq: pick(|m| m.mean_sq),
        second: pick(|m| m.second),
    }
}

/// Decodes tuple number `t` in mixed radix over the row lengths.
fn decode_tuple(mut t: usize, radices: &[usize], out: &mut [usize]) {
    for (slot, &r) in out.iter_mut().zip(radices).rev() {
        *slot = t % r;
        t /= r;
    }
}

enum TupleSet {
    All { radices: Vec<usize>, count: usize },
    Drawn(Vec<Vec<usize>>),
}

impl TupleSet {
    fn len(&self) -> usize {
        match self {
            TupleSet::All { count, .. } => *count,
            TupleSet::Drawn(v) => v.len(),
        }
    }

    fn get(&self, t: usize, out: &mut [usize]) {
        match self {
            TupleSet::All { radices, .. } => decode_tuple(t, radices, out),
            TupleSet::Drawn(v) => out.copy_from_slice(&v[t]),
        }
    }
}

fn tuple_set(rows: &[&[OutputPoint]], budget: Option<usize>, seed: u64) -> Result<TupleSet> {
    let radices: Vec<usize> = rows.iter().map(|r| r.len()).collect();
    match budget {
        Some(b) if !rows.is_empty() => {
            if b == 0 {
                return Err(GsaError::Domain("tuple budget must be positive".into()));
            }
            let mut rng = stream(seed, &[tag::TUPLES]);
            let drawn = (0..b)
                .map(|_| radices.iter().map(|&r| rng.random_range(0..r)).collect())
                .collect();
            Ok(TupleSet::Drawn(drawn))
        }
        _ => {
            let count = radices
                .iter()
                .try_fold(1usize, |acc, &r| acc.checked_mul(r))
                .ok_or_else(|| GsaError::Domain("number of parameter tuples overflows; set a tuple budget".into()))?;
            Ok(TupleSet::All { radices, count })
        }
    }
}

/// Averages `per_tuple` over every tuple of the set, in parallel chunks.
fn average_over_tuples<F>(tuples: &TupleSet, arity: usize, n_points: usize, per_tuple: F) -> Moments
where
    F: Fn(&[usize], &mut [f64]) -> Moments + Sync,
{
    let count = tuples.len();
    let chunks = count.div_ceil(TUPLE_CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut idx = vec![0usize; arity];
            let mut buf = vec![0.0; n_points];
            let mut acc = Moments::default();
            for t in c * TUPLE_CHUNK..((c + 1) * TUPLE_CHUNK).min(count) {
                tuples.get(t, &mut idx);
                let m = per_tuple(&idx, &mut buf);
                acc.cross += m.cross;
                acc.mean_sq += m.mean_sq;
                acc.second += m.second;
            }
            acc
        })
        .collect();
    let total = reduce_moments(&parts);
    let k = count as f64;
    Moments {
        cross: total.cross / k,
        mean_sq: total.mean_sq / k,
        second: total.second / k,
    }
}

fn finish(avg: Moments, method: Method, sample_size: usize, arity: usize) -> Result<IndexEstimate> {
    let numerator = avg.cross - avg.mean_sq;
    let denominator = avg.second - avg.mean_sq;
    let est = IndexEstimate::from_ratio(numerator, denominator, method, sample_size, arity)?;
    if denominator.is_nan() || denominator <= 1e-12 * avg.second.abs() {
        return Err(GsaError::DegenerateOutput { numerator, denominator });
    }
    Ok(est)
}

/// Pick-Freeze estimate: average over all `N^m` parameter tuples (or `budget`
/// uniformly drawn tuples) of the per-tuple empirical covariance of
/// `T(Z_j), T(Z_j^u)` over the symmetrized empirical variance.
///
/// Output-law families with no auxiliary rows reuse `z` as parameter sample.
pub fn pick_freeze_estimate(
    d: &PickFreezeDesign,
    fam: &dyn TestFunctionFamily,
    budget: Option<usize>,
    seed: u64,
) -> Result<IndexEstimate> {
    let n = d.sample_size();
    let rows = parameter_rows(fam, &d.aux, &d.z)?;
    let points: Vec<OutputPoint> = d.z.iter().chain(&d.z_pf).cloned().collect();
    let kernel = fam.bind(&rows, &points)?;
    let tuples = tuple_set(&rows, budget, seed)?;
    let inv_n = 1.0 / n as f64;
    let avg = average_over_tuples(&tuples, rows.len(), 2 * n, |idx, buf| {
        kernel.fill(idx, buf);
        let (plain, frozen) = buf.split_at(n);
        let (mut cross, mut sum, mut sq) = (0.0, 0.0, 0.0);
        for (a, b) in plain.iter().zip(frozen) {
            cross += a * b;
            sum += a + b;
            sq += a * a + b * b;
        }
        let mean = 0.5 * sum * inv_n;
        Moments {
            cross: cross * inv_n,
            mean_sq: mean * mean,
            second: 0.5 * sq * inv_n,
        }
    });
    let mut est = finish(avg, Method::PickFreeze, n, fam.arity())?;
    if budget.is_some() && fam.arity() > 0 {
        est.seed = Some(seed);
    }
    Ok(est)
}

/// Ranks `x` with ties broken by a seeded random permutation. Returns the
/// sample indices in increasing order of `x` and the number of tied values.
fn tie_broken_order(x: &[f64], seed: u64) -> (Vec<usize>, usize) {
    let mut rng = stream(seed, &[tag::TIES]);
    let keys: Vec<u64> = x.iter().map(|_| rng.random()).collect();
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(keys[a].cmp(&keys[b])).then(a.cmp(&b)));
    let mut tied = 0;
    let mut start = 0;
    for i in 1..=order.len() {
        if i == order.len() || x[order[i]] != x[order[start]] {
            if i - start > 1 {
                tied += i - start;
            }
            start = i;
        }
    }
    (order, tied)
}

/// Successor map: `next[j]` is the sample whose input rank follows that of
/// `j`, the largest wrapping to the smallest.
fn successor_map(order: &[usize]) -> Vec<usize> {
    let n = order.len();
    let mut next = vec![0; n];
    for r in 0..n {
        next[order[r]] = order[(r + 1) % n];
    }
    next
}

/// Rank-based estimate of a first-order index from a single sample.
pub fn rank_estimate(d: &RankDesign, fam: &dyn TestFunctionFamily, seed: u64) -> Result<IndexEstimate> {
    let n = d.sample_size();
    let rows = parameter_rows(fam, &d.aux, &d.z)?;
    let kernel = fam.bind(&rows, &d.z)?;
    let tuples = tuple_set(&rows, None, seed)?;
    let (order, tied) = tie_broken_order(&d.x, seed);
    let next = successor_map(&order);
    let inv_n = 1.0 / n as f64;
    let avg = average_over_tuples(&tuples, rows.len(), n, |idx, buf| {
        kernel.fill(idx, buf);
        let (mut cross, mut sum, mut sq) = (0.0, 0.0, 0.0);
        for (j, &t) in buf.iter().enumerate() {
            cross += t * buf[next[j]];
            sum += t;
            sq += t * t;
        }
        let mean = sum * inv_n;
        Moments {
            cross: cross * inv_n,
            mean_sq: mean * mean,
            second: sq * inv_n,
        }
    });
    let mut est = finish(avg, Method::Rank, n, fam.arity())?;
    est.seed = Some(seed);
    est.tied_inputs = tied;
    Ok(est)
}

/// Sums of `Φ_1..Φ_4` over the ordered tuples handled so far.
#[derive(Clone, Copy, Default)]
struct PhiSums([f64; 4]);

/// Falling factorial `n (n-1) ... (n-k+1)` as f64.
fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

/// Complete U-statistic via ordered tuples: for each ordered tuple of `m`
/// distinct parameter indices the sums over the remaining evaluation indices
/// reduce to one pass over the bound values.
fn ustat_complete(kernel: &dyn BoundKernel, n: usize, m: usize) -> [f64; 4] {
    let work = |first: Option<usize>| -> PhiSums {
        let mut acc = PhiSums::default();
        let mut idx = vec![0usize; m];
        let mut used = vec![false; n];
        let mut buf = vec![0.0; 2 * n];
        if let Some(i) = first {
            idx[0] = i;
            used[i] = true;
        }
        let start = usize::from(first.is_some());
        visit_tuples(&mut idx, start, &mut used, &mut |idx, used| {
            kernel.fill(idx, &mut buf);
            let (plain, frozen) = buf.split_at(n);
            let (mut cross, mut sq, mut s, mut s_u) = (0.0, 0.0, 0.0, 0.0);
            for c in 0..n {
                if used[c] {
                    continue;
                }
                let (a, b) = (plain[c], frozen[c]);
                cross += a * b;
                sq += a * a;
                s += a;
                s_u += b;
            }
            acc.0[0] += cross;
            acc.0[1] += s * s_u - cross;
            acc.0[2] += sq;
            acc.0[3] += s * s - sq;
        });
        acc
    };
    let parts: Vec<PhiSums> = if m == 0 {
        vec![work(None)]
    } else {
        (0..n).into_par_iter().map(|i| work(Some(i))).collect()
    };
    let sums: Vec<f64> = (0..4)
        .map(|l| pairwise_sum(&parts.iter().map(|p| p.0[l]).collect::<Vec<_>>()))
        .collect();
    let c1 = falling(n, m + 1);
    let c2 = falling(n, m + 2);
    [sums[0] / c1, sums[1] / c2, sums[2] / c1, sums[3] / c2]
}

/// Calls `f` on every completion of `idx[pos..]` with indices distinct from
/// each other and from those already marked in `used`.
fn visit_tuples<F>(idx: &mut [usize], pos: usize, used: &mut [bool], f: &mut F)
where
    F: FnMut(&[usize], &[bool]),
{
    if pos == idx.len() {
        f(idx, used);
        return;
    }
    for i in 0..used.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        idx[pos] = i;
        visit_tuples(idx, pos + 1, used, f);
        used[i] = false;
    }
}

/// Symmetrized kernels on one subset: `[Φ1^s, Φ3^s]` on its first `m + 1`
/// entries and `[Φ2^s, Φ4^s]` on all `m + 2`.
fn phi_symmetrized(kernel: &dyn BoundKernel, n: usize, subset: &[usize], m: usize) -> [f64; 4] {
    let mut out = [0.0; 4];
    let mut perm: Vec<usize> = Vec::with_capacity(subset.len());
    let short = &subset[..m + 1];
    let mut count = 0.0;
    permutations(short, &mut perm, &mut vec![false; short.len()], &mut |p| {
        let (a, b) = (kernel.value(&p[..m], p[m]), kernel.value(&p[..m], n + p[m]));
        out[0] += a * b;
        out[2] += a * a;
        count += 1.0;
    });
    out[0] /= count;
    out[2] /= count;
    count = 0.0;
    permutations(subset, &mut perm, &mut vec![false; subset.len()], &mut |p| {
        let a = kernel.value(&p[..m], p[m]);
        out[1] += a * kernel.value(&p[..m], n + p[m + 1]);
        out[3] += a * kernel.value(&p[..m], p[m + 1]);
        count += 1.0;
    });
    out[1] /= count;
    out[3] /= count;
    out
}

fn permutations<F: FnMut(&[usize])>(items: &[usize], cur: &mut Vec<usize>, taken: &mut [bool], f: &mut F) {
    if cur.len() == items.len() {
        f(cur);
        return;
    }
    for i in 0..items.len() {
        if taken[i] {
            continue;
        }
        taken[i] = true;
        cur.push(items[i]);
        permutations(items, cur, taken, f);
        cur.pop();
        taken[i] = false;
    }
}

/// Incomplete U-statistic over `budget` uniformly drawn subsets of size
/// `m + 2`; `Φ1`, `Φ3` use the first `m + 1` members of each (a uniform
/// `(m+1)`-subset).
fn ustat_incomplete(kernel: &dyn BoundKernel, n: usize, m: usize, budget: usize, seed: u64) -> [f64; 4] {
    let mut rng = stream(seed, &[tag::SUBSETS]);
    let subsets: Vec<Vec<usize>> = (0..budget)
        .map(|_| rand::seq::index::sample(&mut rng, n, m + 2).into_vec())
        .collect();
    let values: Vec<[f64; 4]> = subsets.par_iter().map(|s| phi_symmetrized(kernel, n, s, m)).collect();
    let mut out = [0.0; 4];
    for (l, slot) in out.iter_mut().enumerate() {
        *slot = pairwise_sum(&values.iter().map(|v| v[l]).collect::<Vec<_>>()) / budget as f64;
    }
    out
}

/// U-statistic estimate `(U1 - U2) / (U3 - U4)` from Pick-Freeze pairs, with
/// the family parameters taken from the output sample itself.
///
/// Without a budget the complete statistic is computed when affordable (see
/// [`USTAT_FULL_SUBSET_CAP`]) and an incomplete one with
/// [`USTAT_DEFAULT_BUDGET`] subsets otherwise. A budget at least as large as
/// the number of `(m+2)`-subsets also yields the complete statistic.
pub fn ustat_estimate(
    z: &[OutputPoint],
    z_pf: &[OutputPoint],
    fam: &dyn TestFunctionFamily,
    budget: Option<usize>,
    seed: u64,
) -> Result<IndexEstimate> {
    if !matches!(fam.param_source(), ParamSource::OutputLaw) {
        return Err(GsaError::Unsupported(format!(
            "U-statistics need parameters drawn from the output law; family {} draws them elsewhere",
            fam.name()
        )));
    }
    let n = z.len();
    let m = fam.arity();
    if z_pf.len() != n {
        return Err(GsaError::InvalidDesign(format!(
            "z has {n} entries but z_pf has {}",
            z_pf.len()
        )));
    }
    if n < m + 2 {
        return Err(GsaError::InsufficientSample { needed: m + 2, got: n });
    }
    let rows = vec![z; m];
    let points: Vec<OutputPoint> = z.iter().chain(z_pf).cloned().collect();
    let kernel = fam.bind(&rows, &points)?;

    let subsets = binomial(n, m + 2);
    let budget = match budget {
        Some(0) => return Err(GsaError::Domain("subset budget must be positive".into())),
        Some(b) if b as f64 >= subsets => None,
        Some(b) => Some(b),
        None if subsets <= USTAT_FULL_SUBSET_CAP || falling(n, m) * n as f64 <= USTAT_FULL_WORK_CAP => None,
        None => Some(USTAT_DEFAULT_BUDGET),
    };
    let u = match budget {
        None => ustat_complete(kernel.as_ref(), n, m),
        Some(b) => ustat_incomplete(kernel.as_ref(), n, m, b, seed),
    };
    let numerator = u[0] - u[1];
    let denominator = u[2] - u[3];
    let mut est = IndexEstimate::from_ratio(numerator, denominator, Method::UStat, n, m)?;
    if denominator.is_nan() || denominator <= 1e-12 * u[2].abs() {
        return Err(GsaError::DegenerateOutput { numerator, denominator });
    }
    if budget.is_some() {
        est.seed = Some(seed);
    }
    Ok(est)
}

/// Chatterjee's rank correlation `1 - 3 Σ|r_{j+1} - r_j| / (N² - 1)`, ties in
/// `x` broken with [`DEFAULT_TIE_SEED`].
pub fn chatterjee_xi(x: &[f64], y: &[f64]) -> Result<f64> {
    chatterjee_xi_seeded(x, y, DEFAULT_TIE_SEED)
}

pub fn chatterjee_xi_seeded(x: &[f64], y: &[f64], seed: u64) -> Result<f64> {
    let n = x.len();
    if y.len() != n {
        return Err(GsaError::InvalidDesign(format!(
            "x has {n} entries but y has {}",
            y.len()
        )));
    }
    if n < 2 {
        return Err(GsaError::InsufficientSample { needed: 2, got: n });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(GsaError::Domain("non-finite value in chatterjee_xi input".into()));
    }
    let (order, _) = tie_broken_order(x, seed);
    let mut sorted_y = y.to_vec();
    sorted_y.sort_by(f64::total_cmp);
    // r_j = #{j' : y_j' <= y_j}
    let ranks: Vec<f64> = order
        .iter()
        .map(|&j| sorted_y.partition_point(|v| *v <= y[j]) as f64)
        .collect();
    let total: f64 = ranks.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let nf = n as f64;
    Ok(1.0 - 3.0 * total / (nf * nf - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indices::{family_cvm, family_sobol};

    fn scalars(xs: &[f64]) -> Vec<OutputPoint> {
        xs.iter().map(|&x| OutputPoint::Scalar(x)).collect()
    }

    #[test]
    fn chatterjee_hand_cases() {
        assert_eq!(chatterjee_xi(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.25);
        assert_eq!(chatterjee_xi(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), 0.25);
    }

    #[test]
    fn chatterjee_monotone_exact_value() {
        let n = 10_000;
        let x: Vec<f64> = (0..n).map(|i| ((i * 7919) % n) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0).collect();
        let xi = chatterjee_xi(&x, &y).unwrap();
        let nf = n as f64;
        let exact = 1.0 - 3.0 * (nf - 1.0) / (nf * nf - 1.0);
        assert!((xi - exact).abs() < 1e-12);
        assert!(xi >= 1.0 - 3.0 / (nf + 1.0) - 1e-12);
    }

    #[test]
    fn constant_outputs_are_degenerate() {
        let z = scalars(&[2.0; 6]);
        let d = PickFreezeDesign::new(z.clone(), z.clone(), vec![]).unwrap();
        assert!(matches!(
            pick_freeze_estimate(&d, &family_sobol(), None, 1),
            Err(GsaError::DegenerateOutput { .. })
        ));
        assert!(matches!(
            ustat_estimate(&z, &z, &family_sobol(), None, 1),
            Err(GsaError::DegenerateOutput { .. })
        ));
        let r = RankDesign::new((0..6).map(f64::from).collect(), z, vec![]).unwrap();
        assert!(matches!(
            rank_estimate(&r, &family_cvm(), 1),
            Err(GsaError::DegenerateOutput { .. })
        ));
    }

    #[test]
    fn design_validation() {
        let z = scalars(&[1.0, 2.0, 3.0]);
        assert!(PickFreezeDesign::new(z.clone(), scalars(&[1.0]), vec![]).is_err());
        assert!(PickFreezeDesign::new(scalars(&[1.0]), scalars(&[1.0]), vec![]).is_err());
        assert!(PickFreezeDesign::new(z.clone(), z.clone(), vec![scalars(&[1.0])]).is_err());
        assert!(RankDesign::new(vec![1.0, 2.0], z, vec![]).is_err());
    }

    #[test]
    fn ustat_needs_enough_samples() {
        let z = scalars(&[1.0, 2.0]);
        assert!(matches!(
            ustat_estimate(&z, &z, &family_cvm(), None, 0),
            Err(GsaError::InsufficientSample { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn successor_map_wraps() {
        let (order, tied) = tie_broken_order(&[0.3, 0.1, 0.2], 0);
        assert_eq!(order, vec![1, 2, 0]);
        assert_eq!(tied, 0);
        assert_eq!(successor_map(&order), vec![1, 2, 0]);
    }

    #[test]
    fn ties_are_counted_and_broken_reproducibly() {
        let x = [1.0, 1.0, 2.0, 3.0, 3.0, 3.0];
        let (a, tied) = tie_broken_order(&x, 9);
        let (b, _) = tie_broken_order(&x, 9);
        assert_eq!(a, b);
        assert_eq!(tied, 5);
    }
}
