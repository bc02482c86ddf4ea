mod common;

use common::{frechet_enumeration, wball_enumeration};
use gsa_core::models::{toy_frechet_indices, toy_wball_cases, toy_wball_indices, ToyIndices, ToyModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn as_array(t: ToyIndices) -> [f64; 4] {
    [t.s1, t.s2, t.s3, t.s13]
}

fn close(a: [f64; 4], b: [f64; 4], tol: f64) -> bool {
    a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn closed_forms_match_enumeration_on_random_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let p = [0, 1, 2].map(|_| rng.random_range(0.01..0.99));
        let params = ToyModelParams::new(p[0], p[1], p[2]).unwrap();
        assert!(
            close(as_array(toy_frechet_indices(&params)), frechet_enumeration(p), 1e-12),
            "{p:?}"
        );
        assert!(
            close(as_array(toy_wball_indices(&params)), wball_enumeration(p), 1e-12),
            "{p:?}"
        );
    }
}

#[test]
fn symmetric_parameters() {
    let p = ToyModelParams::new(0.5, 0.5, 0.5).unwrap();
    let f = toy_frechet_indices(&p);
    // Means 1/2 and variances 1/4: Var L = 1/16 + 9/16 + 1/16 + 1/4.
    let den = 0.25 * 0.25 + 0.25 * 2.25 + 0.25 * 0.25 + 0.25;
    assert!((f.s1 - 2.25 * 0.25 / den).abs() < 1e-15);
    assert!((f.s2 - 0.25 / den).abs() < 1e-15);
    assert!((f.s3 - 0.0625 / den).abs() < 1e-15);
    assert!(close(as_array(f), frechet_enumeration([0.5; 3]), 1e-12));
    assert!(close(
        as_array(toy_wball_indices(&p)),
        wball_enumeration([0.5; 3]),
        1e-12
    ));
}

#[test]
fn published_frechet_values() {
    let p = ToyModelParams::new(1.0 / 3.0, 2.0 / 3.0, 0.75).unwrap();
    let f = toy_frechet_indices(&p);
    for (got, want) in [f.s1, f.s2, f.s3].iter().zip([0.70504, 0.23022, 0.02158]) {
        assert!((got - want).abs() < 5e-6, "{got} vs {want}");
    }
}

#[test]
fn indices_are_bounded_and_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let p = ToyModelParams::new(
            rng.random_range(0.01..0.99),
            rng.random_range(0.01..0.99),
            rng.random_range(0.01..0.99),
        )
        .unwrap();
        for t in [toy_frechet_indices(&p), toy_wball_indices(&p)] {
            for v in as_array(t) {
                assert!((-1e-12..=1.0 + 1e-12).contains(&v));
            }
            assert!(t.s13 + 1e-12 >= t.s1.max(t.s3));
        }
    }
}

#[test]
fn wball_case_probabilities_sum_to_one() {
    let p = ToyModelParams::new(0.2, 0.7, 0.4).unwrap();
    let total: f64 = toy_wball_cases(&p).iter().map(|c| c.prob).sum();
    assert!((total - 1.0).abs() < 1e-14);
}
