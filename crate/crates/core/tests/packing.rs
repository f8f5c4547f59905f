//! Properties of the local packing refinement in the unit square.

use alpha_cheeger::packing::{boundary_distance, refine_maximin, refine_product, PackingResult};
use alpha_cheeger::Domain;
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn square() -> Domain {
    Domain::unit_square()
}

// The eight symmetries of [0,1]^2.
fn symmetry(s: usize, p: &[f64]) -> Vec<f64> {
    let (mut x, mut y) = (p[0], p[1]);
    if s & 1 == 1 {
        x = 1.0 - x;
    }
    if s & 2 == 2 {
        y = 1.0 - y;
    }
    if s & 4 == 4 {
        std::mem::swap(&mut x, &mut y);
    }
    vec![x, y]
}

fn starts() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=5).prop_flat_map(|k| {
        prop::collection::vec(prop::collection::vec(0.05f64..0.95, 2), k).prop_filter(
            "separated centers",
            |c| {
                (0..c.len())
                    .all(|i| (0..i).all(|j| (c[i][0] - c[j][0]).hypot(c[i][1] - c[j][1]) > 0.05))
            },
        )
    })
}

// Largest common radius the start admits without moving.
fn start_radius(c: &[Vec<f64>]) -> f64 {
    let mut r = f64::INFINITY;
    for i in 0..c.len() {
        r = r.min(boundary_distance(&c[i], &square()).unwrap());
        for j in 0..i {
            r = r.min(0.5 * (c[i][0] - c[j][0]).hypot(c[i][1] - c[j][1]));
        }
    }
    r
}

fn best_of(k: usize, tries: usize) -> PackingResult {
    let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
    let mut best: Option<PackingResult> = None;
    for _ in 0..tries {
        let c: Vec<Vec<f64>> = (0..k)
            .map(|_| vec![rng.random_range(0.1..0.9), rng.random_range(0.1..0.9)])
            .collect();
        if let Ok(r) = refine_maximin(&c, &square()) {
            if best.as_ref().is_none_or(|b| r.value > b.value) {
                best = Some(r);
            }
        }
    }
    best.expect("some start refines")
}

thread_local! {
    static BEST: Vec<Vec<Vec<f64>>> = (1..=5).map(|k| best_of(k, 12).config.centers).collect();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refinement_never_worsens(c in starts()) {
        let r0 = start_radius(&c);
        let res = refine_maximin(&c, &square()).unwrap();
        prop_assert!(res.value >= r0 - 1e-12, "{} < {r0}", res.value);
        prop_assert!(res.config.max_violation().unwrap() <= 1e-9);
    }

    // Starts near a packing, where the refiner is meant to be used. From
    // arbitrary starts the LP steps may pick different degenerate vertices and
    // end in different local optima.
    #[test]
    fn square_symmetries_keep_the_value(
        k in 1usize..=5,
        noise in prop::collection::vec(-0.04f64..0.04, 10),
        s in 1usize..8,
    ) {
        let base = &BEST.with(|b| b[k - 1].clone());
        let c: Vec<Vec<f64>> = base
            .iter()
            .enumerate()
            .map(|(i, p)| vec![p[0] + noise[2 * i], p[1] + noise[2 * i + 1]])
            .collect();
        let moved: Vec<Vec<f64>> = c.iter().map(|p| symmetry(s, p)).collect();
        let a = refine_maximin(&c, &square()).unwrap();
        let b = refine_maximin(&moved, &square()).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-9, "{} vs {}", a.value, b.value);
        let pa = refine_product(&c, &square()).unwrap();
        let pb = refine_product(&moved, &square()).unwrap();
        prop_assert!((pa.value - pb.value).abs() <= 1e-9, "{} vs {}", pa.value, pb.value);
    }

    #[test]
    fn product_is_locally_optimal(c in starts(), seed in 0u64..1000) {
        let res = refine_product(&c, &square()).unwrap();
        prop_assert!(res.config.max_violation().unwrap() <= 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = c.len();
        for _ in 0..100 {
            let t = 1e-7;
            let mut cfg = res.config.clone();
            for i in 0..k {
                for x in cfg.centers[i].iter_mut() {
                    *x += t * rng.random_range(-1.0..1.0);
                }
                cfg.radii[i] += t * rng.random_range(-1.0..1.0);
            }
            if cfg.max_violation().unwrap() <= 0.0 {
                let v: f64 = cfg.radii.iter().map(|r| r.ln()).sum();
                prop_assert!(v <= res.value + 1e-9, "{v} > {}", res.value);
            }
        }
    }
}

#[test]
fn maximin_radius_decreases_with_k() {
    let radii: Vec<f64> = (1..=5).map(|k| best_of(k, 12).value).collect();
    for w in radii.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{radii:?}");
    }
    // known optima: 1/2, (2 - sqrt 2)/2, 0.2543, 1/4, (sqrt 2 - 1)/2
    assert!((radii[0] - 0.5).abs() < 1e-6);
    assert!((radii[1] - (2.0 - 2f64.sqrt()) / 2.0).abs() < 1e-6);
    assert!((radii[3] - 0.25).abs() < 1e-6);
    assert!(
        (radii[4] - (2f64.sqrt() - 1.0) / 2.0).abs() < 1e-6,
        "{radii:?}"
    );
}
