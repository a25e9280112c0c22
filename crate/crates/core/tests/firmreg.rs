use nalgebra::DMatrix;
use spillover_core::firmreg::{
    clustered_vcov, estimate_spec, format_table, local_projection, table_columns,
    write_results_csv, Control, FixedEffects, Grouping, Interaction, RegressionData,
    RegressionSpec, TableLayout,
};
use spillover_core::ingest::{
    build_firm_regressors, standardize_leverage, AggregateControls, FirmPanel, LeverageDef,
    PeriodSeries,
};
use spillover_core::simulate::{synthetic_firm_panel, FirmSimSpec};
use spillover_core::{Error, Matrix, RngStream};

fn prepared(sim: &FirmSimSpec, seed: u64, horizons: usize) -> (FirmPanel, PeriodSeries) {
    let s = synthetic_firm_panel(sim, &mut RngStream::new(seed)).unwrap();
    let built = build_firm_regressors(&s.panel, LeverageDef::Total, horizons);
    (standardize_leverage(&built).unwrap(), s.shock)
}

fn data<'a>(panel: &'a FirmPanel, shock: &'a PeriodSeries) -> RegressionData<'a> {
    RegressionData {
        panel,
        shock,
        aggregates: None,
    }
}

#[test]
fn planted_beta_recovered_without_noise() {
    let sim = FirmSimSpec {
        noise_sd: 0.0,
        ..FirmSimSpec::default()
    };
    let (panel, shock) = prepared(&sim, 1, 0);
    let r = estimate_spec(&data(&panel, &shock), &RegressionSpec::default()).unwrap();
    let b = r.coefficient("leverage_x_shock").unwrap();
    assert!((b.estimate + 0.4).abs() < 1e-8, "{}", b.estimate);
    assert!(r.r2 > 1.0 - 1e-12);
    assert_eq!(r.n_obs, 60 * 23);
}

/// Least squares on explicit firm and sector-time dummies (minimum-norm SVD
/// solution); returns the coefficients of the leading regressors.
fn dummy_ols(panel: &FirmPanel, shock: &PeriodSeries, controls: &[Control]) -> Vec<f64> {
    let d = &panel.derived;
    let mut rows = Vec::new();
    for (i, r) in panel.records.iter().enumerate() {
        let (Some(y), Some(z), Some(e)) = (
            d.growth[0][i],
            d.lagged_leverage_z[i],
            shock.at_quarter(r.quarter),
        ) else {
            continue;
        };
        let mut x = vec![z * e];
        for c in controls {
            let v = match c {
                Control::LaggedInvestment => d.lagged_investment[i],
                Control::LaggedMismatch => d.lagged_mismatch[i],
                Control::LaggedLeverage => d.lagged_leverage[i],
                Control::LaggedAssetGrowth => d.lagged_asset_growth[i],
            };
            match v {
                Some(v) => x.push(v),
                None => break,
            }
        }
        if x.len() == controls.len() + 1 {
            rows.push((i, y, x));
        }
    }
    let firms = Grouping::from_labels(
        &rows
            .iter()
            .map(|(i, ..)| panel.records[*i].firm_id.clone())
            .collect::<Vec<_>>(),
    );
    let cells = Grouping::from_labels(
        &rows
            .iter()
            .map(|(i, ..)| (panel.records[*i].sector.clone(), panel.records[*i].quarter))
            .collect::<Vec<_>>(),
    );
    let k = controls.len() + 1;
    let cols = k + firms.groups + cells.groups;
    let mut x = DMatrix::<f64>::zeros(rows.len(), cols);
    let mut y = DMatrix::<f64>::zeros(rows.len(), 1);
    for (r, (_, yv, xv)) in rows.iter().enumerate() {
        y[(r, 0)] = *yv;
        for (j, v) in xv.iter().enumerate() {
            x[(r, j)] = *v;
        }
        x[(r, k + firms.ids[r])] = 1.0;
        x[(r, k + firms.groups + cells.ids[r])] = 1.0;
    }
    let svd = x.svd(true, true);
    let beta = svd.solve(&y, 1e-10).unwrap();
    (0..k).map(|j| beta[(j, 0)]).collect()
}

#[test]
fn absorbed_ols_equals_dummy_ols() {
    let controls = vec![Control::LaggedInvestment, Control::LaggedMismatch];
    for seed in 0..20u64 {
        let sim = FirmSimSpec {
            firms: 20 + (seed as usize % 6),
            sectors: 2 + (seed as usize % 3),
            quarters: 12 + (seed as usize % 8),
            exit_probability: 0.03,
            ..FirmSimSpec::default()
        };
        let (panel, shock) = prepared(&sim, seed, 0);
        assert!(panel.len() <= 500);
        let spec = RegressionSpec {
            controls: controls.clone(),
            ..RegressionSpec::default()
        };
        let r = estimate_spec(&data(&panel, &shock), &spec).unwrap();
        let oracle = dummy_ols(&panel, &shock, &controls);
        for (c, o) in r.coefficients.iter().zip(&oracle) {
            assert!(
                (c.estimate - o).abs() < 1e-8,
                "seed {seed} {}: {} vs {o}",
                c.name,
                c.estimate
            );
        }
    }
}

#[test]
fn zero_shock_is_rank_deficient() {
    let (panel, mut shock) = prepared(&FirmSimSpec::default(), 2, 0);
    shock.values.iter_mut().for_each(|v| *v = 0.0);
    assert!(matches!(
        estimate_spec(&data(&panel, &shock), &RegressionSpec::default()),
        Err(Error::RankDeficient(_))
    ));
}

fn constant_aggregates(start: i32, len: usize) -> AggregateControls {
    AggregateControls {
        start: spillover_core::ingest::Quarter::from_index(start - 4),
        names: vec!["inflation".into()],
        values: vec![vec![5.0; len + 4]],
    }
}

#[test]
fn absorbed_regressor_reports_no_variation() {
    let (panel, shock) = prepared(&FirmSimSpec::default(), 3, 0);
    let agg = constant_aggregates(shock.start, shock.values.len());
    let d = RegressionData {
        aggregates: Some(&agg),
        ..data(&panel, &shock)
    };
    let spec = RegressionSpec {
        fixed_effects: FixedEffects::SectorSeason,
        aggregate_controls: true,
        aggregate_lags: 1,
        ..RegressionSpec::default()
    };
    match estimate_spec(&d, &spec) {
        Err(Error::NoVariationLeft { column }) => assert_eq!(column, "inflation_l1"),
        other => panic!("expected NoVariationLeft, got {other:?}"),
    }
}

#[test]
fn level_shock_needs_seasonal_effects() {
    let (panel, shock) = prepared(&FirmSimSpec::default(), 4, 0);
    let mut spec = RegressionSpec {
        include_level_shock: true,
        ..RegressionSpec::default()
    };
    assert!(matches!(
        estimate_spec(&data(&panel, &shock), &spec),
        Err(Error::InvalidSpec(_))
    ));
    spec.fixed_effects = FixedEffects::SectorSeason;
    let r = estimate_spec(&data(&panel, &shock), &spec).unwrap();
    assert!(r.coefficient("shock").is_some());
}

#[test]
fn rescaling_a_firms_leverage_leaves_beta_unchanged() {
    let s = synthetic_firm_panel(&FirmSimSpec::default(), &mut RngStream::new(5)).unwrap();
    let mut scaled = s.panel.clone();
    for r in scaled.records.iter_mut().filter(|r| r.firm_id == "F0007") {
        r.liab_total = r.liab_total.map(|v| 3.0 * v);
    }
    let fit = |p: &FirmPanel| {
        let p = standardize_leverage(&build_firm_regressors(p, LeverageDef::Total, 0)).unwrap();
        estimate_spec(&data(&p, &s.shock), &RegressionSpec::default())
            .unwrap()
            .coefficients[0]
            .estimate
    };
    assert!((fit(&s.panel) - fit(&scaled)).abs() < 1e-10);
}

#[test]
fn indicator_interaction() {
    let (panel, shock) = prepared(&FirmSimSpec::default(), 6, 0);
    for threshold in [0.0, 1.0] {
        let spec = RegressionSpec {
            interaction: Interaction::Indicator { threshold },
            ..RegressionSpec::default()
        };
        let r = estimate_spec(&data(&panel, &shock), &spec).unwrap();
        let c = r.coefficient("indicator_x_shock").unwrap();
        assert!(c.estimate < 0.0 && c.se > 0.0);
    }
}

fn brute_force_one_way(x: &Matrix, e: &[f64], labels: &[usize]) -> Matrix {
    let (n, k) = x.shape();
    let g = labels
        .iter()
        .collect::<std::collections::BTreeSet<_>>()
        .len() as f64;
    let mut meat = Matrix::zeros(k, k);
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                for a in 0..k {
                    for b in 0..k {
                        meat[(a, b)] += x[(i, a)] * e[i] * x[(j, b)] * e[j];
                    }
                }
            }
        }
    }
    let bread = (x.transpose() * x).try_inverse().unwrap();
    let c = g / (g - 1.0) * (n as f64 - 1.0) / (n as f64 - k as f64);
    &bread * meat * &bread * c
}

fn hand_fixture() -> (Matrix, Vec<f64>) {
    let x = DMatrix::from_row_slice(
        6,
        2,
        &[
            1.0, 0.5, 2.0, -1.0, -1.0, 0.3, 0.5, 2.0, 1.5, -0.7, -2.0, 1.0,
        ],
    );
    let e = vec![0.3, -0.2, 0.5, -0.4, 0.1, 0.25];
    (x, e)
}

#[test]
fn one_way_matches_brute_force() {
    let (x, e) = hand_fixture();
    let labels = vec![0, 0, 0, 1, 1, 1];
    let v = clustered_vcov(&x, &e, &[Grouping::from_labels(&labels)]).unwrap();
    let oracle = brute_force_one_way(&x, &e, &labels);
    assert!((v.matrix - oracle).abs().max() < 1e-10);
    assert!(v.warnings.is_empty());
}

#[test]
fn singleton_clusters_give_hc1() {
    let (x, e) = hand_fixture();
    let labels: Vec<usize> = (0..6).collect();
    let v = clustered_vcov(&x, &e, &[Grouping::from_labels(&labels)]).unwrap();
    let bread = (x.transpose() * &x).try_inverse().unwrap();
    let mut meat = Matrix::zeros(2, 2);
    for i in 0..6 {
        let xi = x.row(i).transpose();
        meat += &xi * xi.transpose() * (e[i] * e[i]);
    }
    let hc1 = &bread * meat * &bread * (6.0 / 4.0);
    assert!((v.matrix - hc1).abs().max() < 1e-12);
}

#[test]
fn two_way_matches_brute_force_and_collapses() {
    let (x, e) = hand_fixture();
    let firm = vec![0, 0, 1, 1, 2, 2];
    let time = vec![0, 1, 0, 1, 0, 1];
    let both: Vec<usize> = firm.iter().zip(&time).map(|(f, t)| f * 2 + t).collect();
    let v = clustered_vcov(
        &x,
        &e,
        &[Grouping::from_labels(&firm), Grouping::from_labels(&time)],
    )
    .unwrap();
    let mut oracle = brute_force_one_way(&x, &e, &firm) + brute_force_one_way(&x, &e, &time)
        - brute_force_one_way(&x, &e, &both);
    let one_firm = brute_force_one_way(&x, &e, &firm);
    let one_time = brute_force_one_way(&x, &e, &time);
    for j in 0..2 {
        if oracle[(j, j)] < 0.0 {
            oracle[(j, j)] = one_firm[(j, j)].max(one_time[(j, j)]);
            assert!(v.floored);
        }
    }
    assert!((&v.matrix - oracle).abs().max() < 1e-10);

    let same = Grouping::from_labels(&firm);
    let collapsed = clustered_vcov(&x, &e, &[same.clone(), same.clone()]).unwrap();
    let one = clustered_vcov(&x, &e, &[same]).unwrap();
    assert!((collapsed.matrix - one.matrix).abs().max() < 1e-14);
}

#[test]
fn too_few_clusters() {
    let (x, e) = hand_fixture();
    let v = clustered_vcov(&x, &e, &[Grouping::from_labels(&[0, 0, 0, 0, 0, 0])]);
    assert!(matches!(v, Err(Error::InvalidSpec(_))));
    let x3 = DMatrix::from_fn(6, 3, |i, j| {
        ((i + 1) * (j + 2)) as f64 + (i * i) as f64 * 0.1 * j as f64
    });
    let v = clustered_vcov(&x3, &e, &[Grouping::from_labels(&[0, 0, 0, 1, 1, 1])]).unwrap();
    assert!(v
        .warnings
        .iter()
        .any(|w| w.starts_with("FewerClustersThanRegressors")));
}

#[test]
fn two_way_variance_nonnegative_on_random_fixtures() {
    for seed in 0..10u64 {
        let sim = FirmSimSpec {
            firms: 30,
            quarters: 10,
            noise_sd: 0.2,
            ..FirmSimSpec::default()
        };
        let (panel, shock) = prepared(&sim, 100 + seed, 0);
        let r = estimate_spec(&data(&panel, &shock), &RegressionSpec::default()).unwrap();
        assert!(r
            .coefficients
            .iter()
            .all(|c| c.se >= 0.0 && c.se.is_finite()));
    }
}

#[test]
fn horizon_zero_projection_matches_baseline_exactly() {
    let sim = FirmSimSpec {
        exit_probability: 0.02,
        ..FirmSimSpec::default()
    };
    let (panel, shock) = prepared(&sim, 7, 8);
    let spec = RegressionSpec {
        controls: vec![Control::LaggedInvestment],
        clustering: "firm".into(),
        ..RegressionSpec::default()
    };
    let lp = local_projection(&data(&panel, &shock), &spec, 8).unwrap();
    let base = estimate_spec(&data(&panel, &shock), &spec).unwrap();
    assert_eq!(lp.len(), 9);
    assert_eq!(lp[0].coefficients, base.coefficients);
    assert_eq!(lp[0].n_obs, base.n_obs);
    assert!(lp.windows(2).all(|w| w[1].n_obs <= w[0].n_obs));
}

#[test]
fn planted_flat_profile() {
    let (mut panel, shock) = prepared(&FirmSimSpec::default(), 8, 8);
    let mut rng = RngStream::new(99);
    let firm_ids = Grouping::from_labels(
        &panel
            .records
            .iter()
            .map(|r| r.firm_id.clone())
            .collect::<Vec<_>>(),
    );
    let cells = Grouping::from_labels(
        &panel
            .records
            .iter()
            .map(|r| (r.sector.clone(), r.quarter))
            .collect::<Vec<_>>(),
    );
    for j in 0..=8 {
        let fe_firm: Vec<f64> = (0..firm_ids.groups)
            .map(|_| rng.standard_normal())
            .collect();
        let fe_cell: Vec<f64> = (0..cells.groups).map(|_| rng.standard_normal()).collect();
        for i in 0..panel.len() {
            let q = panel.records[i].quarter;
            let planted = match (panel.derived.lagged_leverage_z[i], shock.at_quarter(q)) {
                (Some(z), Some(e)) => {
                    Some(fe_firm[firm_ids.ids[i]] + fe_cell[cells.ids[i]] - 0.4 * z * e)
                }
                _ => None,
            };
            panel.derived.growth[j][i] = panel.derived.growth[j][i].and(planted);
        }
    }
    let lp = local_projection(&data(&panel, &shock), &RegressionSpec::default(), 8).unwrap();
    for r in &lp {
        assert!(
            (r.coefficients[0].estimate + 0.4).abs() < 1e-6,
            "h={} {}",
            r.horizon,
            r.coefficients[0].estimate
        );
    }
}

#[test]
fn exit_only_affects_later_horizons() {
    let s = synthetic_firm_panel(&FirmSimSpec::default(), &mut RngStream::new(10)).unwrap();
    let first = s
        .panel
        .records
        .iter()
        .filter(|r| r.firm_id == "F0001")
        .map(|r| r.quarter)
        .min()
        .unwrap();
    let offset = |r: &spillover_core::ingest::FirmRecord| r.quarter.index() - first.index();
    // F0001 is last seen at offset 8, so it exits three quarters after offset 6.
    let records: Vec<_> = s
        .panel
        .records
        .iter()
        .filter(|r| r.firm_id != "F0001" || offset(r) <= 8)
        .cloned()
        .collect();
    let panel = build_firm_regressors(&FirmPanel::new(records).unwrap(), LeverageDef::Total, 5);
    let row = panel
        .records
        .iter()
        .position(|r| r.firm_id == "F0001" && offset(r) == 6)
        .unwrap();
    for j in 0..=5 {
        assert_eq!(panel.derived.growth[j][row].is_some(), j < 3, "horizon {j}");
    }
}

#[test]
fn table_and_csv_emission() {
    let (panel, shock) = prepared(&FirmSimSpec::default(), 11, 0);
    let specs = table_columns(&RegressionSpec::default(), TableLayout::Baseline);
    assert_eq!(specs[3].controls.len(), 3);
    let results: Vec<_> = specs
        .iter()
        .map(|s| estimate_spec(&data(&panel, &shock), s).unwrap())
        .collect();
    let table = format_table("Capital growth", &specs, &results);
    assert!(
        table.contains("(4)")
            && table.contains("Observations")
            && table.contains("leverage_x_shock")
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.csv");
    write_results_csv(&results, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("spec_id,horizon,coef_name,estimate,se,stars,n_obs,r2")
    );
    assert_eq!(text.lines().count(), 1 + 1 + 2 + 3 + 4);
    assert!(text.contains("baseline-4,0,lagged_leverage,"));

    let alt = table_columns(&RegressionSpec::default(), TableLayout::Alternative);
    assert!(alt
        .iter()
        .all(|s| s.include_level_shock && s.fixed_effects == FixedEffects::SectorSeason));
    assert!(alt[3].aggregate_controls);
}
