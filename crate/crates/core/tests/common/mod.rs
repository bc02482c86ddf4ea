//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

/// All 8 outcomes of three Bernoulli inputs with their probabilities.
pub fn outcomes(p: [f64; 3]) -> Vec<([f64; 3], f64)> {
    let mut out = Vec::with_capacity(8);
    for bits in 0..8u32 {
        let x = [0, 1, 2].map(|i| f64::from((bits >> i) & 1));
        let prob = (0..3).map(|i| if x[i] == 1.0 { p[i] } else { 1.0 - p[i] }).product();
        out.push((x, prob));
    }
    out
}

fn toy_l(x: &[f64; 3]) -> f64 {
    1.0 + x[0] + x[1] + x[0] * x[2]
}

/// `Var(E[g(X) | X_u])` by enumeration, `u` given as 0-based indices.
pub fn conditional_variance(p: [f64; 3], u: &[usize], g: &dyn Fn(&[f64; 3]) -> f64) -> f64 {
    let all = outcomes(p);
    let mean: f64 = all.iter().map(|(x, w)| w * g(x)).sum();
    let mut total = 0.0;
    // Group outcomes by the values of the conditioning coordinates.
    for bits in 0..(1u32 << u.len()) {
        let fixed: Vec<f64> = (0..u.len()).map(|k| f64::from((bits >> k) & 1)).collect();
        let members: Vec<&([f64; 3], f64)> = all
            .iter()
            .filter(|(x, _)| u.iter().zip(&fixed).all(|(&i, &v)| x[i] == v))
            .collect();
        let mass: f64 = members.iter().map(|(_, w)| w).sum();
        if mass == 0.0 {
            continue;
        }
        let cond: f64 = members.iter().map(|(x, w)| w * g(x)).sum::<f64>() / mass;
        total += mass * (cond - mean).powi(2);
    }
    total
}

pub fn variance(p: [f64; 3], g: &dyn Fn(&[f64; 3]) -> f64) -> f64 {
    conditional_variance(p, &[0, 1, 2], g)
}

pub const TOY_SETS: [&[usize]; 4] = [&[0], &[1], &[2], &[0, 2]];

/// Fréchet indices by enumeration: `∫ Var(E[v L | X_u]) dv / ∫ Var(v L) dv`.
pub fn frechet_enumeration(p: [f64; 3]) -> [f64; 4] {
    let den = variance(p, &toy_l);
    TOY_SETS.map(|u| conditional_variance(p, u, &toy_l) / den)
}

/// Wasserstein-ball indices by enumeration over the 8 outcomes and the 4×4
/// grid of `(F1, F2)`. `W2(U[0,a], U[0,b]) = |a - b| / √3`.
pub fn wball_enumeration(p: [f64; 3]) -> [f64; 4] {
    let all = outcomes(p);
    let law: Vec<f64> = (1..=4)
        .map(|l| all.iter().filter(|(x, _)| toy_l(x) == l as f64).map(|(_, w)| w).sum())
        .collect();
    let w2 = |a: f64, b: f64| (a - b).abs() / 3f64.sqrt();
    let mut num = [0.0; 4];
    let mut den = 0.0;
    for (i, qi) in law.iter().enumerate() {
        for (j, qj) in law.iter().enumerate() {
            let (l1, l2) = ((i + 1) as f64, (j + 1) as f64);
            let ind = move |x: &[f64; 3]| if w2(l1, toy_l(x)) <= w2(l1, l2) { 1.0 } else { 0.0 };
            den += qi * qj * variance(p, &ind);
            for (k, u) in TOY_SETS.iter().enumerate() {
                num[k] += qi * qj * conditional_variance(p, u, &ind);
            }
        }
    }
    num.map(|n| n / den)
}

pub fn skewness_kurtosis(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let c2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let c3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    let c4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    (c3 / c2.powf(1.5), c4 / (c2 * c2) - 3.0)
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

use gsa_core::{OutputPoint, TestFunctionFamily};

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// `U_1..U_4` straight from the definition: average over all subsets of the
/// symmetrized kernels, each symmetrization an average over permutations.
pub fn brute_force_ustat(z: &[OutputPoint], z_pf: &[OutputPoint], fam: &dyn TestFunctionFamily) -> [f64; 4] {
    let m = fam.arity();
    let n = z.len();
    let t = |params: &[usize], point: &OutputPoint| {
        let a: Vec<&OutputPoint> = params.iter().map(|&i| &z[i]).collect();
        fam.evaluate(&a, point).unwrap()
    };
    let phi = |l: usize, s: &[usize]| -> f64 {
        let a = &s[..m];
        match l {
            0 => t(a, &z[s[m]]) * t(a, &z_pf[s[m]]),
            1 => t(a, &z[s[m]]) * t(a, &z_pf[s[m + 1]]),
            2 => t(a, &z[s[m]]).powi(2),
            _ => t(a, &z[s[m]]) * t(a, &z[s[m + 1]]),
        }
    };
    let mut u = [0.0; 4];
    for (l, slot) in u.iter_mut().enumerate() {
        let size = if l % 2 == 0 { m + 1 } else { m + 2 };
        let subsets = combinations(n, size);
        let mut total = 0.0;
        for s in &subsets {
            let perms = permutations(s);
            total += perms.iter().map(|p| phi(l, p)).sum::<f64>() / perms.len() as f64;
        }
        *slot = total / subsets.len() as f64;
    }
    u
}
