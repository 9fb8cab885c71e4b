use hesslab::garding::{self, classify_vab, DEFAULT_TOL};
use hesslab::integrate::{Ball, EstimatorConfig};
use hesslab::lelong::{self, Quality, RadiusLadder};
use hesslab::slicing::{self, q_min};
use hesslab::suite::{self, Suite, SuiteConfig};
use hesslab::{hessian, Point, TestFunction, C64};

fn zero(n: usize) -> Vec<C64> {
    vec![C64::new(0.0, 0.0); n]
}

fn cfg(samples: usize) -> EstimatorConfig {
    EstimatorConfig {
        samples,
        stratified: true,
        ..EstimatorConfig::default()
    }
}

/// Index of `f` on `C^n`, minimized over points `(x', z'')`.
fn parent_index(f: &TestFunction, x: &[C64], probes: &[Vec<C64>]) -> usize {
    probes
        .iter()
        .map(|z| {
            let full: Vec<C64> = x.iter().chain(z).copied().collect();
            let h = f.hessian(&Point::new(full)).unwrap();
            garding::subharmonic_index(hessian::spectrum(&h).unwrap().eigenvalues(), DEFAULT_TOL)
        })
        .min()
        .unwrap()
}

#[test]
fn slices_lose_at_most_q_min_indices() {
    let mut cases = Vec::new();
    for n in [4usize, 5, 6] {
        for (a, b) in [
            (1.0, 1.0),
            (2.0, -0.5),
            (-0.3, 4.0),
            (0.5, -1.2),
            (-2.0, -0.1),
        ] {
            cases.push(TestFunction::quadratic_ab(n, a, b).unwrap());
        }
        for m in 2..n {
            cases.push(TestFunction::power_tau(n, n as f64 / m as f64).unwrap());
            cases.push(TestFunction::fundamental(n, m).unwrap());
        }
        cases.push(TestFunction::log_abs(n).unwrap());
    }
    for f in &cases {
        let n = f.dim();
        for p in 1..n - 1 {
            let probes = slicing::sphere_probes(n - p, 12, 0.7, 11);
            for x in [zero(p), vec![C64::new(0.3, -0.2); p]] {
                let m = parent_index(f, &x, &probes);
                let k = slicing::slice_index(f, &x, &probes, DEFAULT_TOL).unwrap();
                if m == 0 || m >= n || p >= m {
                    // q_min needs p < m < n
                    continue;
                }
                let q = q_min(n, m, p).unwrap();
                assert!(
                    k + q >= m,
                    "{f} p={p} x'={x:?}: slice {k}, parent {m}, q_min {q}"
                );
            }
        }
    }
}

fn subset_sk(lambda: &[f64], k: usize) -> f64 {
    (0u32..1 << lambda.len())
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| {
            lambda
                .iter()
                .enumerate()
                .filter(|(j, _)| mask & (1 << j) != 0)
                .map(|(_, l)| l)
                .product::<f64>()
        })
        .sum()
}

#[test]
fn classifier_matches_subset_enumeration_in_four_variables() {
    let n = 4;
    for i in 0..=120 {
        for j in 0..=120 {
            let (a, b) = (-6.0 + 0.1 * i as f64, -6.0 + 0.1 * j as f64);
            if garding::certified_margin(n, a, b) < 1e-3 {
                continue;
            }
            let full = [a, b, 1.0, 1.0];
            let m = (1..=n).take_while(|&k| subset_sk(&full, k) >= 0.0).count();
            let k = (1..n)
                .take_while(|&k| subset_sk(&full[1..], k) >= 0.0)
                .count();
            let l = classify_vab(n, a, b, DEFAULT_TOL).unwrap();
            assert_eq!((l.m_index, l.slice_k_index), (m, k), "a={a} b={b}");
        }
    }
}

#[test]
fn directional_estimates_are_reproducible_across_pools() {
    let f = TestFunction::fundamental(5, 3).unwrap();
    let b = Ball::new(vec![C64::new(0.5, 0.0)], 0.25).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                slicing::directional_lelong(
                    &f,
                    &b,
                    &zero(4),
                    3,
                    1,
                    &RadiusLadder::default(),
                    &cfg(2048),
                )
                .unwrap()
            })
    };
    let one = run(1);
    assert_eq!(one, run(2));
    assert_eq!(one, run(5));
}

#[test]
fn sphere_and_ball_limits_agree_where_both_converge() {
    let ladder = RadiusLadder::default();
    let cases = [
        (TestFunction::fundamental(5, 3).unwrap(), 3usize),
        (TestFunction::power_tau(5, 1.4).unwrap(), 3),
        (TestFunction::quadratic_ab(4, -1.0, 3.0).unwrap(), 2),
        (TestFunction::log_abs(4).unwrap(), 2),
    ];
    let mut compared = 0;
    for (f, m) in &cases {
        let a = zero(f.dim());
        let s = lelong::lelong_point_sphere(f, &a, *m, &ladder, &cfg(8192)).unwrap();
        let b = lelong::lelong_point_ball(f, &a, *m, &ladder, &cfg(8192)).unwrap();
        if s.quality == Quality::Converged && b.quality == Quality::Converged {
            let budget = 0.02 * s.limit.abs().max(b.limit.abs()) + 1e-2;
            assert!(
                (s.limit - b.limit).abs() <= budget,
                "{f}: {} vs {}",
                s.limit,
                b.limit
            );
            compared += 1;
        }
    }
    assert!(compared >= 3, "only {compared} pairs converged");
}

// J(r) is driven by the z'-block trace, which for Φ_{n,m} is
// s^{-n/m} (p - (n/m)|z'|^2/s) up to a positive factor: negative near the
// z' axis once p < n/m, so J decreases in r there.
#[test]
fn j_decreases_for_the_fundamental_solution_when_p_is_below_n_over_m() {
    let (n, m, p, q) = suite::MONOTONICITY_COUNTEREXAMPLE;
    assert!((p as f64) < n as f64 / m as f64);
    let f = TestFunction::fundamental(n, m).unwrap();
    let b = Ball::new(vec![C64::new(0.5, 0.0)], 0.25).unwrap();
    let rep = slicing::monotonicity_check(
        &f,
        &b,
        &zero(n - p),
        m,
        q,
        &RadiusLadder::default(),
        &cfg(4096),
    )
    .unwrap();
    assert!(!rep.passed);
    assert!(rep.violations.iter().all(|v| v.series == "j"));
    assert!(rep.estimate.per_radius.iter().skip(1).all(|d| d.j < 0.0));
}

#[test]
fn monotone_triples_satisfy_p_at_least_n_over_m() {
    for (n, m, p, q) in suite::MONOTONE_TRIPLES {
        assert!(p * m >= n);
        assert!(q >= q_min(n, m, p).unwrap() && q < m);
    }
}

#[test]
fn quick_suite_outcomes_are_stable() {
    let cfg = SuiteConfig {
        samples: 1024,
        ..SuiteConfig::default()
    };
    let a = suite::run_criterion(1, &cfg).unwrap();
    assert!(a.passed);
    assert_eq!(a.details["row_count"], 15);
    let b = suite::run_criterion(11, &cfg).unwrap();
    assert_eq!(b, suite::run_criterion(11, &cfg).unwrap());
    assert!(suite::run_criterion(13, &cfg).is_err());
    assert_eq!(Suite::parse("slicing"), Some(Suite::Slicing));
    assert_eq!(Suite::parse("everything"), None);
}
