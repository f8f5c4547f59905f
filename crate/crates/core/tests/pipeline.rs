//! Whole runs on small problems.

use alpha_cheeger::functional::measure_threshold;
use alpha_cheeger::packing::{extract_centers, refine_maximin};
use alpha_cheeger::pipeline::{run, run_seeds, RunConfig};
use alpha_cheeger::{Domain, Shape};

fn disk(radius: f64) -> Domain {
    Domain::new(
        vec![1.0, 1.0],
        Shape::Ball {
            center: vec![0.5, 0.5],
            radius,
        },
    )
}

#[test]
fn unit_square_cheeger_constant() {
    let config = RunConfig::default();
    assert!(config.final_m() >= 300);
    let res = run(&config).unwrap();
    let exact = 2.0 + std::f64::consts::PI.sqrt();
    let h = res.sharp.per_phase_h_alpha[0];
    assert!((h - exact).abs() / exact < 0.01, "h = {h}");
}

#[test]
fn disk_is_its_own_cheeger_set() {
    let radius = 0.35;
    let config = RunConfig {
        stages: 4,
        domain: disk(radius),
        ..RunConfig::default()
    };
    let res = run(&config).unwrap();
    let h = res.sharp.per_phase_h_alpha[0];
    assert!((h - 2.0 / radius).abs() * radius / 2.0 < 0.02, "h = {h}");
    let area = res.sharp.per_phase_area[0];
    let full = std::f64::consts::PI * radius * radius;
    assert!(
        area > 0.95 * full && area <= full * 1.001,
        "area {area} of {full}"
    );
}

#[test]
fn larger_alpha_gives_larger_sets() {
    let area = |alpha: f64| {
        let config = RunConfig {
            alpha,
            stages: 3,
            ..RunConfig::default()
        };
        let res = run(&config).unwrap();
        measure_threshold(&res.final_system, 0.5, alpha)
            .unwrap()
            .per_phase_area[0]
    };
    let (small, large) = (area(0.5001), area(2.0));
    assert!(large >= small, "{large} < {small}");
}

#[test]
fn three_cells_are_disjoint() {
    let config = RunConfig {
        k: 3,
        stages: 3,
        ..RunConfig::default()
    };
    let res = run(&config).unwrap();
    let sys = &res.final_system;
    for n in 0..sys.grid().node_count() {
        let above = (0..3).filter(|&i| sys.phase(i).values()[n] > 0.5).count();
        assert!(above <= 1, "node {n} is in {above} cells");
    }
    assert!(res.sharp.per_phase_area.iter().all(|&a| a > 0.05));
    for r in &res.reports {
        assert!(r.value_trace.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn best_seed_is_kept() {
    let config = RunConfig {
        k: 2,
        stages: 2,
        ..RunConfig::default()
    };
    let best = run_seeds(&config, &[3, 4, 5]).unwrap();
    for seed in [3, 4, 5] {
        let single = run(&RunConfig {
            seed,
            ..config.clone()
        })
        .unwrap();
        assert!(best.final_value() <= single.final_value());
        if seed == best.config.seed {
            assert_eq!(best.final_value().to_bits(), single.final_value().to_bits());
        }
    }
}

#[test]
fn cube_run_has_finite_constant() {
    let config = RunConfig {
        stages: 2,
        ..RunConfig::unit_cube()
    };
    let res = run(&config).unwrap();
    assert!(res.sharp.per_phase_h_alpha[0].is_finite());
    assert_eq!(res.stages.len(), 2);
}

// Slow: about two and a half minutes in the test profile.
#[test]
fn nineteen_disks_in_the_disk() {
    let config = RunConfig {
        k: 19,
        alpha: 0.501,
        p: 50.0,
        eps_factor: 2.0,
        m0: 40,
        stages: 3,
        domain: Domain::new(
            vec![2.0, 2.0],
            Shape::Ball {
                center: vec![1.0, 1.0],
                radius: 1.0,
            },
        ),
        ..RunConfig::default()
    };
    let res = run(&config).unwrap();
    let centers = extract_centers(&res.final_system, 0.5).unwrap();
    let packing = refine_maximin(&centers, &config.domain).unwrap();
    // Rigid solve: the outer twelve touch the boundary and their neighbours,
    // 2 (1 - r) sin(pi/12) = 2 r.
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..100 {
        let r = 0.5 * (lo + hi);
        if (1.0 - r) * (std::f64::consts::PI / 12.0).sin() > r {
            lo = r;
        } else {
            hi = r;
        }
    }
    let rigid = 0.5 * (lo + hi);
    assert!(
        (packing.value - rigid).abs() / rigid < 1e-6,
        "{} vs {rigid}",
        packing.value
    );
    let ring = packing
        .config
        .centers
        .iter()
        .filter(|c| ((c[0] - 1.0).hypot(c[1] - 1.0) - (1.0 - rigid)).abs() < 1e-6)
        .count();
    assert_eq!(ring, 12);
}
