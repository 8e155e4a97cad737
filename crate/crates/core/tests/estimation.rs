use dcwelfare::binary::{ate, SubsidyScenario};
use dcwelfare::choice::ChoiceProbabilities;
use dcwelfare::estimation::*;
use dcwelfare::oracle::{simulate_dataset, DatasetDesign};

fn design(rows: usize, endogeneity: f64, seed: u64) -> DatasetDesign {
    DatasetDesign { rows, endogeneity, seed, ..Default::default() }
}

fn fit(data: &EstimationDataset, control_function: bool, constrained: bool) -> DemandFit {
    let cfg = EstimationConfig {
        fit: FitOptions { control_function, constrained, ..Default::default() },
        ..Default::default()
    };
    estimate_demand(data, &cfg).unwrap()
}

fn bootstrap_sd(data: &EstimationDataset, opts: FitOptions, draws: usize, stat: impl Fn(&DemandFit) -> f64) -> f64 {
    let (basis, grid) = basis_and_grid(data, &EstimationConfig::default()).unwrap();
    let post = bootstrap_fit(data, &basis, &grid, &opts, draws, 5).unwrap();
    sd(&post.draws.iter().map(stat).collect::<Vec<_>>())
}

fn sd(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[test]
fn exogenous_price_coefficient_within_three_bootstrap_se() {
    let sim = simulate_dataset(&design(20_000, 0.0, 21)).unwrap();
    let f = fit(&sim.data, false, true);
    let opts = FitOptions { control_function: false, ..Default::default() };
    let se = bootstrap_sd(&sim.data, opts, 30, |d| d.price_coefficient);
    let err = (f.price_coefficient + 0.5).abs();
    assert!(err < 3.0 * se, "error {err}, se {se}");
}

#[test]
fn control_function_removes_endogeneity_bias() {
    let sim = simulate_dataset(&design(20_000, 0.6, 22)).unwrap();
    let naive = fit(&sim.data, false, true);
    let cf = fit(&sim.data, true, true);
    let se = bootstrap_sd(&sim.data, FitOptions::default(), 30, |d| d.price_coefficient);
    assert!((cf.price_coefficient + 0.5).abs() < 3.0 * se, "cf {} se {se}", cf.price_coefficient);
    assert!((naive.price_coefficient + 0.5).abs() > 3.0 * se, "naive {}", naive.price_coefficient);
    assert!(cf.control_coefficient > 0.0);
    assert!(cf.structural_scale < 1.0);
}

#[test]
fn first_stage_recovers_price_equation() {
    let sim = simulate_dataset(&design(10_000, 0.6, 23)).unwrap();
    let fs = first_stage(&sim.data).unwrap();
    let truth = [2.0, 0.8, 0.1, 0.0, 0.0];
    assert_eq!(fs.coefficients.len(), truth.len());
    for ((b, se), t) in fs.coefficients.iter().zip(&fs.standard_errors).zip(truth) {
        assert!((b - t).abs() < 3.0 * se, "{b} vs {t} (se {se})");
    }
    assert!(fs.f_statistic.unwrap() > 100.0);
}

#[test]
fn irrelevant_instrument_gives_uniform_f_p_values() {
    let mut p: Vec<f64> = (0..200)
        .map(|r| {
            let d = DatasetDesign { price_equation: [2.0, 0.0, 0.1], ..design(400, 0.0, 1000 + r) };
            first_stage(&simulate_dataset(&d).unwrap().data).unwrap().f_p_value
        })
        .collect();
    p.sort_by(f64::total_cmp);
    let n = p.len() as f64;
    let ks = p.iter().enumerate().map(|(i, u)| ((i + 1) as f64 / n - u).max(u - i as f64 / n)).fold(0.0, f64::max);
    // asymptotic 5% critical value
    assert!(ks < 1.358 / n.sqrt(), "KS distance {ks}");
}

#[test]
fn inactive_constraints_leave_fit_unchanged() {
    let d = DatasetDesign { income_profile: [0.8, 0.1, 0.0], ..design(20_000, 0.6, 24) };
    let sim = simulate_dataset(&d).unwrap();
    let cfg = |constrained| EstimationConfig {
        intervals: 4,
        fit: FitOptions { constrained, ..Default::default() },
        ..Default::default()
    };
    let free = estimate_demand(&sim.data, &cfg(false)).unwrap();
    let tied = estimate_demand(&sim.data, &cfg(true)).unwrap();
    let (_, grid) = basis_and_grid(&sim.data, &cfg(true)).unwrap();
    let worst = grid.iter().map(|y| free.directional_slope(*y)).fold(f64::MIN, f64::max);
    assert!(worst < 0.0 && free.price_coefficient < 0.0, "premise: {worst}");
    assert_eq!(tied.active_constraints, 0);
    assert!((free.price_coefficient - tied.price_coefficient).abs() < 1e-5);
    for (a, b) in free.income_coefficients.iter().zip(&tied.income_coefficients) {
        assert!((a - b).abs() < 1e-5);
    }
}

#[test]
fn binding_constraints_hold_on_audit_grid() {
    // f'(y) = 0.9 against β_p = -0.5 violates the directional restriction
    let d = DatasetDesign { income_profile: [-3.0, 0.9, -0.02], ..design(20_000, 0.3, 25) };
    let sim = simulate_dataset(&d).unwrap();
    let free = fit(&sim.data, true, false);
    let tied = fit(&sim.data, true, true);
    assert!(free.constraint_grid.is_empty());
    assert!(tied.active_constraints > 0);
    assert!(tied.audit.passed, "{:?}", tied.audit);
    assert!(tied.loglik <= free.loglik);
    for &y in &tied.constraint_grid {
        assert!(tied.directional_slope(y) <= 1e-10, "{y}: {}", tied.directional_slope(y));
    }
    let m = fit_to_model(&tied, &[0.0, 0.0]).unwrap();
    let h = 1e-6;
    for &y in &tied.constraint_grid {
        let q = |p: f64, y: f64| m.choice_probability(1, &[p], y).unwrap();
        let along = (q(3.0 + h, y + h) - q(3.0 - h, y - h)) / (2.0 * h);
        assert!(along <= 1e-8, "{y}: {along}");
    }
}

#[test]
fn fitted_model_is_monotone_and_matches_index() {
    let sim = simulate_dataset(&design(5_000, 0.6, 26)).unwrap();
    let f = fit(&sim.data, true, true);
    let row = &sim.data.covariates[0];
    let m = fit_to_model(&f, row).unwrap();
    let (p, y) = (sim.data.price[0].unwrap(), sim.data.income[0]);
    let by_hand = dcwelfare::numeric::normal_cdf(f.index(p, y, row));
    assert!((m.choice_probability(1, &[p], y).unwrap() - by_hand).abs() < 1e-14);
    for y in income_grid(1.5, 9.5, 10) {
        let mut last = f64::INFINITY;
        for k in 0..10 {
            let q = m.choice_probability(1, &[0.5 * k as f64], y).unwrap();
            assert!(q <= last);
            last = q;
        }
    }
    assert!(fit_to_model(&f, &[100.0, 0.0]).is_err());
    assert!(fit_to_model(&f, &[0.0]).is_err());
}

#[test]
fn bootstrap_is_reproducible() {
    let sim = simulate_dataset(&design(2_000, 0.6, 27)).unwrap();
    let (basis, grid) = basis_and_grid(&sim.data, &EstimationConfig::default()).unwrap();
    let opts = FitOptions::default();
    let a = bootstrap_fit(&sim.data, &basis, &grid, &opts, 2, 9).unwrap();
    let b = bootstrap_fit(&sim.data, &basis, &grid, &opts, 2, 9).unwrap();
    assert_eq!(a.draws, b.draws);
    let c = bootstrap_fit(&sim.data, &basis, &grid, &opts, 2, 10).unwrap();
    assert_ne!(a.draws, c.draws);
    assert!(bootstrap_fit(&sim.data, &basis, &grid, &opts, 1, 9).is_err());
}

#[test]
fn bootstrap_se_of_ate_tracks_sampling_sd() {
    let rows = 2_000;
    let scenario = SubsidyScenario::new(3.0, 1.0, 5.0, 0.0).unwrap();
    let ate_of = |f: &DemandFit| ate(&fit_to_model(f, &[0.0, 0.0]).unwrap(), &scenario).unwrap();
    let truth: Vec<f64> = (0..200)
        .map(|r| ate_of(&fit(&simulate_dataset(&design(rows, 0.6, 500 + r)).unwrap().data, true, true)))
        .collect();
    let mc = sd(&truth);
    let sim = simulate_dataset(&design(rows, 0.6, 499)).unwrap();
    let boot = bootstrap_sd(&sim.data, FitOptions::default(), 200, ate_of);
    assert!((boot / mc - 1.0).abs() < 0.3, "bootstrap {boot} vs Monte Carlo {mc}");
}

#[test]
fn imputation_uses_cluster_then_stratum_means() {
    let data = EstimationDataset {
        choice: vec![true, true, false, true, false, false],
        price: vec![Some(100.0), Some(200.0), None, Some(80.0), None, None],
        income: vec![1.0; 6],
        covariates: vec![vec![]; 6],
        covariate_names: vec![],
        instrument: vec![0.0; 6],
        cluster: vec![1, 1, 1, 2, 2, 3],
        stratum: vec![1, 1, 1, 2, 2, 1],
    };
    let (out, report) = impute_prices(&data).unwrap();
    assert_eq!(out.price[2], Some(150.0));
    assert_eq!(out.price[4], Some(80.0));
    // cluster 3 has no purchaser: stratum 1 mean over purchasers
    assert_eq!(out.price[5], Some(150.0));
    assert_eq!(report.from_cluster, 2);
    assert_eq!(report.from_stratum, 1);
    assert_eq!(report.fallback_clusters, vec![3]);
    assert_eq!(&out.price[..2], &data.price[..2]);

    let all_buy = EstimationDataset { choice: vec![true; 2], price: vec![Some(1.0), Some(2.0)], ..sub(&data, 2) };
    assert_eq!(impute_prices(&all_buy).unwrap().0, all_buy);

    let orphan = EstimationDataset { choice: vec![false; 2], price: vec![None; 2], ..sub(&data, 2) };
    assert!(matches!(impute_prices(&orphan), Err(dcwelfare::Error::Data(_))));
}

fn sub(d: &EstimationDataset, n: usize) -> EstimationDataset {
    d.subset(&(0..n).collect::<Vec<_>>())
}

#[test]
fn masked_prices_are_imputed_before_fitting() {
    let d = DatasetDesign { mask_nonbuyer_prices: true, ..design(3_000, 0.0, 28) };
    let sim = simulate_dataset(&d).unwrap();
    assert!(estimate_demand(&sim.data, &EstimationConfig::default()).is_err());
    let (full, report) = impute_prices(&sim.data).unwrap();
    assert!(report.from_cluster > 0);
    let f = estimate_demand(&full, &EstimationConfig::default()).unwrap();
    assert!(f.price_coefficient <= 0.0);
}
