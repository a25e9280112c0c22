use proptest::prelude::*;
use spillover_core::model::{
    solve, solve_constrained, solve_unconstrained, sweep, unconstrained_capital,
    verify_propositions, Axis, EntrepreneurParams, EntrepreneurSolution, Regime, DEFAULT_STEP,
};
use spillover_core::{Error, RngStream};

fn fixture(b0: f64) -> EntrepreneurParams {
    EntrepreneurParams {
        b0,
        ..EntrepreneurParams::default()
    }
}

fn check_solution(p: &EntrepreneurParams, s: &EntrepreneurSolution) {
    let r = 1.0 + p.r1;
    let w0 = p.k0.powf(p.alpha) - p.b0 * (1.0 + p.r0);
    assert!(s.c0 > 0.0 && s.c1 > 0.0 && s.k1 > 0.0 && s.mu >= 0.0);
    assert!((s.c0 + s.k1 - w0 - s.b1).abs() < 1e-10, "period-0 budget");
    assert!(
        (s.c1 - s.k1.powf(p.alpha) + s.b1 * r).abs() < 1e-10,
        "period-1 budget"
    );
    assert!(s.b1 <= p.theta * s.k1 + 1e-12);
    assert!(
        (s.mu * (p.theta * s.k1 - s.b1)).abs() < 1e-10,
        "complementary slackness"
    );
    let capital = p.beta / s.c1 * p.alpha * s.k1.powf(p.alpha - 1.0) + s.mu * p.theta;
    let bond = p.beta / s.c1 * r + s.mu;
    assert!((1.0 / s.c0 - capital).abs() < 1e-8, "capital Euler");
    assert!((1.0 / s.c0 - bond).abs() < 1e-8, "bond Euler");
}

#[test]
fn closed_form_capital_on_grid() {
    for i in 0..10 {
        for j in 0..10 {
            let alpha = 0.1 + 0.08 * i as f64;
            let r1 = -0.05 + 0.03 * j as f64;
            let p = EntrepreneurParams {
                alpha,
                r1,
                b0: -5.0,
                ..EntrepreneurParams::default()
            };
            let s = solve_unconstrained(&p).unwrap();
            let oracle = (((1.0 + r1) / alpha).ln() / (alpha - 1.0)).exp();
            assert!(
                (s.k1 - oracle).abs() < 1e-12 * oracle.max(1.0),
                "alpha {alpha} r1 {r1}"
            );
        }
    }
    assert!((unconstrained_capital(0.5, 2.0) - 0.0625).abs() < 1e-15);
    let k = unconstrained_capital(0.3, 1.02);
    assert!((k - 0.174078).abs() < 1e-6);
    assert!((0.3 * k.powf(-0.7) - 1.02).abs() < 1e-12);
}

#[test]
fn unconstrained_capital_ignores_initial_conditions() {
    let a = solve_unconstrained(&fixture(0.1)).unwrap();
    let b = solve_unconstrained(&EntrepreneurParams {
        k0: 2.5,
        b0: -1.0,
        ..EntrepreneurParams::default()
    })
    .unwrap();
    assert_eq!(a.k1, b.k1);
    assert_ne!(a.b1, b.b1);
}

#[test]
fn regimes_on_the_fixture() {
    for b0 in [-2.0, 0.0, 0.1, 0.2, 0.3] {
        let s = solve(&fixture(b0)).unwrap();
        assert_eq!(s.regime, Regime::Unconstrained, "b0 {b0}");
        assert!((s.k1 - 0.16702).abs() < 1e-5);
        check_solution(&fixture(b0), &s);
    }
    for (b0, k) in [(0.5, 0.1452), (0.6, 0.1206)] {
        let p = fixture(b0);
        let s = solve(&p).unwrap();
        assert_eq!(s.regime, Regime::Constrained);
        assert!((s.k1 - k).abs() < 1e-4, "b0 {b0}: {}", s.k1);
        assert!(s.mu > 0.0);
        assert!(0.3 * s.k1.powf(-0.7) > 1.05);
        assert!(s.k1 < unconstrained_capital(0.3, 1.05));
        check_solution(&p, &s);
    }
    assert!(matches!(
        solve_unconstrained(&fixture(0.6)),
        Err(Error::ConstraintViolated { .. })
    ));
}

#[test]
fn constrained_matches_line_search() {
    let p = fixture(0.6);
    let s = solve_constrained(&p).unwrap();
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 1..10_000 {
        let k = i as f64 * 1e-4;
        let u = p.utility_at(k, p.theta * k);
        if u > best.0 {
            best = (u, k);
        }
    }
    assert!((s.k1 - best.1).abs() <= 1e-4);
    assert!(s.utility(p.beta) >= best.0 - 1e-12);
}

/// Best utility on an `m × m` grid over `(k1, b1)` covering the feasible set.
fn grid_oracle(p: &EntrepreneurParams, m: usize) -> f64 {
    let w0 = p.k0.powf(p.alpha) - p.b0 * (1.0 + p.r0);
    let r = 1.0 + p.r1;
    let k_max = (w0 + 2.0) * 2.0;
    let mut best = f64::NEG_INFINITY;
    for i in 1..=m {
        let k = k_max * i as f64 / m as f64;
        let b_lo = k - w0;
        let b_hi = (p.theta * k).min(k.powf(p.alpha) / r);
        if b_lo >= b_hi {
            continue;
        }
        for j in 0..m {
            let b = b_lo + (b_hi - b_lo) * (j as f64 + 0.5) / m as f64;
            best = best.max(p.utility_at(k, b));
        }
    }
    best
}

fn between(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.uniform()
}

fn random_params(rng: &mut RngStream) -> EntrepreneurParams {
    let alpha = between(rng, 0.2, 0.6);
    let theta = between(rng, 0.2, 0.8);
    let r0 = between(rng, 0.0, 0.1);
    let r1 = between(rng, 0.0, 0.1);
    // Keep initial wealth positive so both regimes are reachable.
    let b0 = between(rng, -0.5, 0.85) / (1.0 + r0);
    EntrepreneurParams {
        alpha,
        beta: between(rng, 0.85, 0.99),
        theta,
        k0: 1.0,
        b0,
        r0,
        r1,
    }
}

#[test]
fn solver_dominates_brute_force_grid() {
    let mut rng = RngStream::new(42);
    let mut regimes = [0, 0];
    for _ in 0..50 {
        let p = random_params(&mut rng);
        let s = solve(&p).unwrap();
        check_solution(&p, &s);
        regimes[(s.regime == Regime::Constrained) as usize] += 1;
        let grid = grid_oracle(&p, 400);
        assert!(s.utility(p.beta) >= grid - 1e-6, "{p:?}");
        assert!(s.utility(p.beta) - grid < 0.05);
    }
    assert!(regimes[0] > 0 && regimes[1] > 0, "{regimes:?}");
}

#[test]
fn continuous_across_the_kink() {
    // Unconstrained slack θk* − b1 is affine in b0; find where it equals ±1e-6.
    let slack = |b0: f64| {
        let p = fixture(b0);
        let k = unconstrained_capital(p.alpha, 1.0 + p.r1);
        let r = 1.0 + p.r1;
        let w0 = p.k0.powf(p.alpha) - b0 * (1.0 + p.r0);
        p.theta * k - (k.powf(p.alpha) - p.beta * r * (w0 - k)) / (r * (1.0 + p.beta))
    };
    let (s0, s1) = (slack(0.0), slack(1.0));
    let at = |target: f64| (target - s0) / (s1 - s0);
    let below = solve(&fixture(at(1e-6))).unwrap();
    let above = solve(&fixture(at(-1e-6))).unwrap();
    assert_eq!(below.regime, Regime::Unconstrained);
    assert_eq!(above.regime, Regime::Constrained);
    assert!((below.k1 - above.k1).abs() < 1e-3);
}

#[test]
fn rate_sweeps_coincide_while_unconstrained() {
    let grid: Vec<f64> = (0..41).map(|i| 1.0 + 0.005 * i as f64).collect();
    let low = sweep(&fixture(0.1), Axis::R1, &grid).unwrap();
    let high = sweep(&fixture(0.4), Axis::R1, &grid).unwrap();
    let mut shared = 0;
    for (a, b) in low.points.iter().zip(&high.points) {
        let (a, b) = (a.solution.as_ref().unwrap(), b.solution.as_ref().unwrap());
        if a.regime == Regime::Unconstrained && b.regime == Regime::Unconstrained {
            assert_eq!(a.k1, b.k1);
            shared += 1;
        } else {
            assert!(b.k1 <= a.k1 + 1e-12);
        }
    }
    assert!(shared > 0);
    let kink = high.kink.expect("high-debt entrepreneur switches regime");
    assert!(kink > 1.0 && kink < 1.2);
    // Constrained at low rates, unconstrained from the kink onward.
    assert!(high.flags.is_empty());
    let regimes: Vec<_> = high
        .points
        .iter()
        .map(|p| p.solution.as_ref().unwrap().regime)
        .collect();
    let first = regimes
        .iter()
        .position(|r| *r == Regime::Unconstrained)
        .unwrap();
    assert!(regimes[first..].iter().all(|r| *r == Regime::Unconstrained));
}

#[test]
fn theta_sweep_is_nondecreasing() {
    let grid: Vec<f64> = (1..40).map(|i| 0.02 * i as f64).collect();
    let c = sweep(&fixture(0.6), Axis::Theta, &grid).unwrap();
    let k = c.k1();
    assert!(k.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{k:?}");
}

#[test]
fn tighter_theta_lies_below_on_debt_sweep() {
    let grid: Vec<f64> = (0..61).map(|i| -0.2 + 0.015 * i as f64).collect();
    let loose = sweep(&fixture(0.0), Axis::B0, &grid).unwrap();
    let tight = sweep(
        &EntrepreneurParams {
            theta: 0.3,
            ..fixture(0.0)
        },
        Axis::B0,
        &grid,
    )
    .unwrap();
    for (a, b) in loose.points.iter().zip(&tight.points) {
        let (Ok(a), Ok(b)) = (&a.solution, &b.solution) else {
            continue;
        };
        assert!(b.k1 <= a.k1 + 1e-12);
        if b.regime == Regime::Unconstrained {
            assert_eq!(a.k1, b.k1);
        }
    }
    assert!(tight.kink.unwrap() < loose.kink.unwrap());
}

#[test]
fn sweep_flags_failed_points_and_writes_csv() {
    let c = sweep(&fixture(0.0), Axis::B0, &[0.0, 0.5, 5.0]).unwrap();
    assert!(matches!(
        c.points[2].solution,
        Err(Error::InfeasibleConsumption)
    ));
    assert_eq!(c.flags.len(), 1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    c.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "axis_value,k1,b1,c0,c1,mu,regime");
    assert!(lines[1].ends_with(",0,unconstrained"));
    assert!(lines[2].ends_with(",constrained"));
    assert_eq!(lines[3], "5,,,,,,error");
    assert!(sweep(&fixture(0.0), Axis::B0, &[0.5, 0.1]).is_err());
}

#[test]
fn rate_response_on_straddling_pair() {
    let (u, c) = (fixture(0.2), fixture(0.5));
    let r = verify_propositions((&u, &c), DEFAULT_STEP).unwrap();
    assert!(r.dk_dr_unconstrained < 0.0 && r.dk_dr_constrained < 0.0);
    assert!(r.dk_dr_unconstrained.abs() > r.dk_dr_constrained.abs());
    assert!(
        r.closed_form_rel_error < 1e-6,
        "{}",
        r.closed_form_rel_error
    );
    assert!(r.holds());
    // Order of the pair does not matter.
    let swapped = verify_propositions((&c, &u), DEFAULT_STEP).unwrap();
    assert_eq!(swapped.dk_dr_constrained, r.dk_dr_constrained);
    assert!(r.to_string().contains("PASS"));
}

#[test]
fn closed_form_derivative_example() {
    let p = EntrepreneurParams {
        alpha: 0.5,
        r1: 1.0,
        b0: -1.0,
        ..EntrepreneurParams::default()
    };
    let s = solve(&p).unwrap();
    assert!((s.k1 - 0.0625).abs() < 1e-15);
    let analytic = 1.0 / (0.5 * -0.5 * 0.0625f64.powf(-1.5));
    assert!((analytic + 0.0625).abs() < 1e-15);
    let h = 1e-5 * 2.0;
    let plus = solve(&EntrepreneurParams { r1: 1.0 + h, ..p }).unwrap().k1;
    let minus = solve(&EntrepreneurParams { r1: 1.0 - h, ..p }).unwrap().k1;
    assert!(((plus - minus) / (2.0 * h) - analytic).abs() < 1e-6 * analytic.abs());
}

#[test]
fn theta_response_on_constrained_instances() {
    let mut rng = RngStream::new(7);
    let mut checked = 0;
    while checked < 20 {
        let p = random_params(&mut rng);
        if !matches!(solve(&p), Ok(s) if s.regime == Regime::Constrained) {
            continue;
        }
        let d = 1e-5 * p.theta;
        let k = |t: f64| solve(&EntrepreneurParams { theta: t, ..p }).unwrap().k1;
        assert!((k(p.theta + d) - k(p.theta - d)) / (2.0 * d) > 0.0, "{p:?}");
        let grid: Vec<f64> = (1..=30)
            .map(|i| p.theta * (0.5 + i as f64 / 30.0))
            .filter(|t| *t < 1.0)
            .collect();
        let curve = sweep(&p, Axis::Theta, &grid).unwrap().k1();
        assert!(curve.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        checked += 1;
    }
}

#[test]
fn mismatched_pairs_rejected() {
    let e = verify_propositions((&fixture(0.1), &fixture(0.2)), DEFAULT_STEP).unwrap_err();
    assert!(matches!(e, Error::RegimeMismatch(_)));
    let other = EntrepreneurParams {
        alpha: 0.4,
        ..fixture(0.5)
    };
    assert!(matches!(
        verify_propositions((&fixture(0.1), &other), DEFAULT_STEP),
        Err(Error::InvalidSpec(_))
    ));
}

proptest! {
    #[test]
    fn unconstrained_capital_strictly_decreasing(alpha in 0.05..0.95f64, r in 0.5..3.0f64, dr in 1e-6..0.5f64) {
        prop_assert!(unconstrained_capital(alpha, r + dr) < unconstrained_capital(alpha, r));
    }
}
