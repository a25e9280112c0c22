use nalgebra::DMatrix;
use proptest::prelude::*;
use spillover_core::bvar::{
    ChainDiagnostics, GibbsSettings, PosteriorDraws, PriorSettings, VarSpec,
};
use spillover_core::ingest::Month;
use spillover_core::irf::{compute_irf, share_decomposition_run, subsample_compare, IrfSpec};
use spillover_core::simulate::{blocks_to_panel, simulate_panel_var, simulate_var};
use spillover_core::{Error, Matrix, RngStream};

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

fn fixed_draws(
    b: Vec<Matrix>,
    s: Vec<Matrix>,
    n: usize,
    lags: usize,
    constant: bool,
) -> PosteriorDraws {
    PosteriorDraws {
        coefficients: b,
        covariances: s,
        spec: VarSpec {
            variables: names(n),
            lags,
            include_constant: constant,
            ..VarSpec::default()
        },
        seed: 0,
        diagnostics: ChainDiagnostics::default(),
    }
}

fn spec(target: &str, response: f64, horizon: usize) -> IrfSpec {
    IrfSpec {
        horizon,
        shock_index: 0,
        target_variable: target.into(),
        target_response: response,
    }
}

#[test]
fn ar1_decays_geometrically() {
    let d = fixed_draws(
        vec![Matrix::from_element(1, 1, 0.5)],
        vec![Matrix::identity(1, 1)],
        1,
        1,
        false,
    );
    let irf = compute_irf(&d, &spec("v0", 1.0, 20)).unwrap();
    for h in 0..=20 {
        assert_eq!(irf.summary[h][0].median, 0.5f64.powi(h as i32));
    }
}

#[test]
fn white_noise_system() {
    let d = fixed_draws(
        vec![Matrix::zeros(5, 2)],
        vec![Matrix::identity(2, 2)],
        2,
        2,
        true,
    );
    let irf = compute_irf(&d, &spec("v0", 1.0, 6)).unwrap();
    for h in 0..=6 {
        for v in 0..2 {
            let expected = if h == 0 && v == 0 { 1.0 } else { 0.0 };
            assert_eq!(irf.summary[h][v].median, expected);
        }
    }
}

/// Responses from powers of the companion matrix applied to the stacked impact.
fn companion_oracle(
    b: &Matrix,
    sigma: &Matrix,
    n: usize,
    p: usize,
    horizon: usize,
) -> Vec<Vec<f64>> {
    let mut comp = DMatrix::<f64>::zeros(n * p, n * p);
    for j in 0..p {
        for i in 0..n {
            for l in 0..n {
                comp[(i, j * n + l)] = b[(1 + j * n + l, i)];
            }
        }
    }
    for i in n..n * p {
        comp[(i, i - n)] = 1.0;
    }
    let l = sigma.clone().cholesky().unwrap().l();
    let mut state = DMatrix::<f64>::zeros(n * p, 1);
    for i in 0..n {
        state[(i, 0)] = l[(i, 0)];
    }
    let mut out = Vec::new();
    for _ in 0..=horizon {
        out.push((0..n).map(|i| state[(i, 0)]).collect());
        state = &comp * state;
    }
    out
}

#[test]
fn matches_companion_powers() {
    #[rustfmt::skip]
    let b = DMatrix::from_row_slice(7, 3, &[
        0.0, 0.0, 0.0,
        0.5, 0.1, 0.0,
        0.2, 0.4, 0.1,
        0.1, -0.3, 0.3,
        0.1, 0.0, 0.0,
        0.0, 0.2, 0.05,
        0.0, -0.1, 0.2,
    ]);
    let sigma = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.2, 0.3, 0.8, 0.1, 0.2, 0.1, 0.5]);
    let d = fixed_draws(vec![b.clone()], vec![sigma.clone()], 3, 2, true);
    let irf = compute_irf(&d, &spec("v0", 1.0, 48)).unwrap();
    let oracle = companion_oracle(&b, &sigma, 3, 2, 48);
    for h in 0..=48 {
        for v in 0..3 {
            assert!(
                (irf.summary[h][v].median - oracle[h][v]).abs() < 1e-10,
                "h={h} v={v}"
            );
        }
    }
}

#[test]
fn normalization_rescales_every_cell() {
    // Raw impact of v1 is 0.25, so a 0.5 target doubles everything.
    let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, 1.0]);
    let b = DMatrix::from_row_slice(2, 2, &[0.6, 0.1, 0.2, 0.7]);
    let d = fixed_draws(vec![b.clone()], vec![sigma.clone()], 2, 1, false);
    let raw = compute_irf(&d, &spec("v0", 1.0, 10)).unwrap();
    let norm = compute_irf(&d, &spec("v1", 0.5, 10)).unwrap();
    for h in 0..=10 {
        for v in 0..2 {
            assert!((norm.summary[h][v].median - 2.0 * raw.summary[h][v].median).abs() < 1e-14);
        }
    }
}

fn random_draws(count: usize, seed: u64) -> PosteriorDraws {
    let mut rng = RngStream::new(seed);
    let mut bs = Vec::new();
    let mut ss = Vec::new();
    for _ in 0..count {
        bs.push(rng.normal_matrix(7, 3) * 0.2);
        let a = rng.normal_matrix(3, 3);
        ss.push(&a * a.transpose() + Matrix::identity(3, 3) * 0.1);
    }
    fixed_draws(bs, ss, 3, 2, true)
}

#[test]
fn every_draw_hits_target_exactly_and_doubling_is_exact() {
    let d = random_draws(200, 3);
    let one = compute_irf(&d, &spec("v2", 0.5, 24)).unwrap();
    assert!(one.responses.iter().all(|r| r[(0, 2)] == 0.5));
    let two = compute_irf(&d, &spec("v2", 1.0, 24)).unwrap();
    for h in 0..=24 {
        for v in 0..3 {
            let (a, b) = (one.summary[h][v], two.summary[h][v]);
            assert_eq!(2.0 * a.median, b.median);
            assert_eq!(2.0 * a.p05, b.p05);
            assert_eq!(2.0 * a.p95, b.p95);
        }
    }
}

#[test]
fn degenerate_draws_are_dropped_and_counted() {
    let b = Matrix::zeros(2, 2);
    let uncorrelated = Matrix::identity(2, 2);
    let correlated = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
    let d = fixed_draws(
        vec![b.clone(), b.clone()],
        vec![uncorrelated.clone(), correlated],
        2,
        1,
        false,
    );
    let irf = compute_irf(&d, &spec("v1", 0.5, 3)).unwrap();
    assert_eq!((irf.dropped, irf.responses.len()), (1, 1));
    let all_bad = fixed_draws(vec![b], vec![uncorrelated], 2, 1, false);
    assert!(matches!(
        compute_irf(&all_bad, &spec("v1", 0.5, 3)),
        Err(Error::DegenerateNormalization { dropped: 1 })
    ));
}

#[test]
fn stable_responses_die_out() {
    let b = DMatrix::from_row_slice(2, 2, &[0.9, 0.0, 0.3, 0.5]);
    let d = fixed_draws(vec![b], vec![Matrix::identity(2, 2)], 2, 1, false);
    let irf = compute_irf(&d, &spec("v0", 1.0, 200)).unwrap();
    assert!(irf.summary[200].iter().all(|c| c.median.abs() < 1e-6));
}

#[test]
fn explosive_draws_kept_and_counted() {
    let stable = Matrix::from_element(1, 1, 0.5);
    let explosive = Matrix::from_element(1, 1, 1.05);
    let i = Matrix::identity(1, 1);
    let d = fixed_draws(vec![stable, explosive], vec![i.clone(), i], 1, 1, false);
    let irf = compute_irf(&d, &spec("v0", 1.0, 5)).unwrap();
    assert_eq!((irf.explosive, irf.responses.len()), (1, 2));
}

#[test]
fn rejects_unknown_target() {
    let d = random_draws(2, 1);
    assert!(matches!(
        compute_irf(&d, &spec("gdp", 0.5, 4)),
        Err(Error::InvalidSpec(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn bands_are_ordered(seed in 0u64..1000) {
        let irf = compute_irf(&random_draws(60, seed), &spec("v1", 0.5, 12)).unwrap();
        for row in &irf.summary {
            for c in row {
                prop_assert!(c.p05 <= c.p16 && c.p16 <= c.median && c.median <= c.p84 && c.p84 <= c.p95);
            }
        }
    }
}

fn quick_spec(variables: Vec<String>) -> VarSpec {
    VarSpec {
        variables,
        lags: 1,
        prior: PriorSettings {
            overall_tightness: 1.0,
            ..PriorSettings::default()
        },
        gibbs: GibbsSettings {
            iterations: 1_500,
            burn_in: 300,
        },
        ..VarSpec::default()
    }
}

#[test]
fn identical_subsamples_agree() {
    let b = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 0.3, 0.4, 0.0, 0.6]);
    let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 1.0]);
    let block = simulate_var(&b, &sigma, 1, true, 150, 50, &mut RngStream::new(2)).unwrap();
    let names = vec!["shock".to_string(), "y".to_string()];
    let panel = blocks_to_panel(
        &[block.clone(), block.clone(), block.clone(), block],
        &names,
        Month::new(2004, 1),
    )
    .unwrap();
    let (left, right) = (
        vec!["C1".to_string(), "C2".to_string()],
        vec!["C3".to_string(), "C4".to_string()],
    );
    let irf_spec = spec("y", 0.5, 12);
    let (a, b) = subsample_compare(
        &panel,
        (&left, &right),
        &quick_spec(names.clone()),
        &irf_spec,
        7,
    )
    .unwrap();
    assert_eq!(a.horizon, b.horizon);
    for h in 0..=12 {
        let (x, y) = (a.summary[h][1], b.summary[h][1]);
        let width = (x.p84 - x.p16).max(1e-3);
        assert!((x.median - y.median).abs() < 0.25 * width, "h={h}");
    }
    assert!(matches!(
        subsample_compare(&panel, (&left, &[]), &quick_spec(names), &irf_spec, 7),
        Err(Error::EmptyPartition(_))
    ));
}

#[test]
fn only_loaded_share_responds_on_impact() {
    let shares: Vec<String> = spillover_core::irf::EXPENDITURE_SHARES
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut variables = vec!["shock".to_string()];
    variables.extend(shares.iter().cloned());
    let n = variables.len();
    let mut b = Matrix::zeros(1 + n, n);
    for i in 1..n {
        b[(0, i)] = 0.1;
        b[(1 + i, i)] = 0.5;
    }
    let mut sigma = Matrix::identity(n, n) * 0.01;
    sigma[(0, 0)] = 1.0;
    // Investment share is the last variable.
    sigma[(0, n - 1)] = 0.05;
    sigma[(n - 1, 0)] = 0.05;
    let blocks =
        simulate_panel_var(&b, &sigma, 1, true, 3, 200, 50, &mut RngStream::new(5)).unwrap();
    let panel = blocks_to_panel(&blocks, &variables, Month::new(2004, 1)).unwrap();
    let irf_spec = spec("shock", 1.0, 6);
    let irf = share_decomposition_run(
        &panel,
        &quick_spec(variables.clone()),
        &irf_spec,
        &shares,
        &mut RngStream::new(1),
    )
    .unwrap();
    let inv = irf.summary[0][n - 1];
    assert!(inv.p05 > 0.0, "investment share impact band {inv:?}");
    for v in 1..n - 1 {
        let c = irf.summary[0][v];
        assert!(
            c.p05 < 0.0 && c.p95 > 0.0,
            "{} responded on impact: {c:?}",
            variables[v]
        );
    }

    let mut missing = variables.clone();
    missing.pop();
    let panel_missing = blocks_to_panel(
        &blocks
            .iter()
            .map(|m| m.columns(0, n - 1).into_owned())
            .collect::<Vec<_>>(),
        &missing,
        Month::new(2004, 1),
    )
    .unwrap();
    assert!(matches!(
        share_decomposition_run(
            &panel_missing,
            &quick_spec(missing),
            &irf_spec,
            &shares,
            &mut RngStream::new(1)
        ),
        Err(Error::SchemaMismatch(_))
    ));
}
