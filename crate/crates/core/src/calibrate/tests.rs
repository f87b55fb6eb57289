use approx::assert_abs_diff_eq;
use chrono::NaiveDate;

use super::*;
use crate::market::DailyHistory;
use crate::model::sample::sample_ensemble;

fn toy_ensemble(rows: &[Vec<f64>]) -> Ensemble {
    let histories = rows
        .iter()
        .enumerate()
        .map(|(i, returns)| DailyHistory {
            date: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap() + chrono::Days::new(i as u64),
            returns: returns.clone(),
        })
        .collect();
    Ensemble::new(histories, rows[0].len()).unwrap()
}

#[test]
fn identical_histories_have_zero_bootstrap_error() {
    let row = vec![0.01, -0.02, 0.005, 0.001];
    let ens = toy_ensemble(&vec![row; 40]);
    let table = empirical_moments(&ens, &[0.5, 1.0], &[1, 2, 3], None, 50, 0).unwrap();
    // Every resample averages the same values, so the spread is pure float
    // summation residue.
    for per_t in &table.se {
        for &se in per_t {
            assert!(se < 1e-12, "se = {se:e}");
        }
    }
}

#[test]
fn zeroth_moment_is_one() {
    let ens = toy_ensemble(&[vec![0.01, -0.02, 0.005], vec![0.0, 0.001, -0.003]]);
    let table = empirical_moments(&ens, &[0.0], &[0, 1, 2], None, 10, 0).unwrap();
    for &m in &table.m[0] {
        assert_abs_diff_eq!(m, 1.0, epsilon = 1e-15);
    }
}

#[test]
fn all_zero_returns_are_degenerate() {
    let ens = toy_ensemble(&vec![vec![0.0; 4]; 10]);
    let err = empirical_moments(&ens, &[1.0], &[1, 2], None, 10, 0).unwrap_err();
    assert!(matches!(err, Error::Data(ref m) if m.contains("degenerate")), "{err}");
}

#[test]
fn cap_excludes_whole_histories() {
    let ens = toy_ensemble(&[
        vec![0.01, 0.001, 0.002],
        vec![0.001, 0.05, 0.002], // one bar over the cap: whole day out
        vec![0.003, 0.001, 0.0],
    ]);
    let table = empirical_moments(&ens, &[1.0], &[1, 2], Some(0.02), 10, 0).unwrap();
    assert_eq!(table.histories_used, 2);
    let uncapped = empirical_moments(&ens, &[1.0], &[1, 2], None, 10, 0).unwrap();
    assert_eq!(uncapped.histories_used, 3);
}

#[test]
fn bootstrap_is_seed_deterministic() {
    let p = crate::model::ModelParams::calibrated();
    let ens = sample_ensemble(&p, 300, 8).unwrap();
    let a = empirical_moments(&ens, &[1.0], &[1, 5, 9], None, 60, 123).unwrap();
    let b = empirical_moments(&ens, &[1.0], &[1, 5, 9], None, 60, 123).unwrap();
    assert_eq!(a.se, b.se);
    let c = empirical_moments(&ens, &[1.0], &[1, 5, 9], None, 60, 124).unwrap();
    assert_ne!(a.se, c.se);
}

#[test]
fn grid_validation() {
    let ens = toy_ensemble(&[vec![0.01, 0.02, 0.03]]);
    assert!(matches!(
        empirical_moments(&ens, &[], &[1], None, 10, 0),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        empirical_moments(&ens, &[1.0], &[1, 1], None, 10, 0),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        empirical_moments(&ens, &[1.0], &[3], None, 10, 0),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        empirical_moments(&ens, &[-0.5], &[1], None, 10, 0),
        Err(Error::Config(_))
    ));
}

/// Synthetic table m[q][t] = c_q (t+1)^{0.35 q}: recovery to machine precision.
#[test]
fn exact_power_law_recovers_d() {
    let q_grid: Vec<f64> = (1..=8).map(|k| 0.25 * k as f64).collect();
    let t_grid: Vec<usize> = (1..20).collect();
    let m: Vec<Vec<f64>> = q_grid
        .iter()
        .map(|&q| {
            t_grid
                .iter()
                .map(|&t| (-q).exp() * ((t + 1) as f64).powf(0.35 * q))
                .collect()
        })
        .collect();
    let se = vec![vec![0.0; t_grid.len()]; q_grid.len()];
    let table = MomentTable { q_grid, t_grid, m, se, histories_used: 1 };
    let fit = fit_scaling_exponent(&table, TimeRegressor::ShiftedLog).unwrap();
    assert_abs_diff_eq!(fit.d, 0.35, epsilon = 1e-13);
    for g in &fit.gamma {
        assert_abs_diff_eq!(g.gamma, 0.35 * g.q, epsilon = 1e-12);
    }
}

#[test]
fn scaling_fit_requires_three_points_each_way() {
    let table = MomentTable {
        q_grid: vec![0.5, 1.0],
        t_grid: vec![1, 2, 3],
        m: vec![vec![1.0; 3]; 2],
        se: vec![vec![0.0; 3]; 2],
        histories_used: 1,
    };
    assert!(matches!(
        fit_scaling_exponent(&table, TimeRegressor::ShiftedLog),
        Err(Error::Fit(_))
    ));
}

#[test]
fn plain_log_regressor_rejects_t_zero() {
    let table = MomentTable {
        q_grid: vec![0.5, 1.0, 1.5],
        t_grid: vec![0, 1, 2],
        m: vec![vec![1.0; 3]; 3],
        se: vec![vec![0.0; 3]; 3],
        histories_used: 1,
    };
    assert!(matches!(
        fit_scaling_exponent(&table, TimeRegressor::PlainLog),
        Err(Error::Config(_))
    ));
}

#[test]
fn regressor_choice_shifts_the_estimate() {
    // On data generated with the shifted convention, the plain-log regressor
    // lands below the true slope: d ln(t+1) / d ln t = t/(t+1) < 1.
    let q_grid = vec![0.5, 1.0, 1.5, 2.0];
    let t_grid: Vec<usize> = (1..10).collect();
    let m: Vec<Vec<f64>> = q_grid
        .iter()
        .map(|&q| t_grid.iter().map(|&t| ((t + 1) as f64).powf(0.35 * q)).collect())
        .collect();
    let se = vec![vec![0.0; t_grid.len()]; q_grid.len()];
    let table = MomentTable { q_grid, t_grid, m, se, histories_used: 1 };
    let shifted = fit_scaling_exponent(&table, TimeRegressor::ShiftedLog).unwrap();
    let plain = fit_scaling_exponent(&table, TimeRegressor::PlainLog).unwrap();
    assert_abs_diff_eq!(shifted.d, 0.35, epsilon = 1e-13);
    assert!(plain.d < shifted.d - 0.05, "plain {} vs shifted {}", plain.d, shifted.d);
}

#[test]
fn simulated_moment_growth_matches_2d_and_gamma_is_monotone() {
    let p = crate::model::ModelParams::calibrated();
    let ens = sample_ensemble(&p, 4000, 21).unwrap();
    let q_grid: Vec<f64> = (1..=8).map(|k| 0.25 * k as f64).collect();
    let t_grid: Vec<usize> = (1..20).collect();
    let table = empirical_moments(&ens, &q_grid, &t_grid, Some(0.02), 100, 0).unwrap();
    let fit = fit_scaling_exponent(&table, TimeRegressor::ShiftedLog).unwrap();

    // gamma(2) = 2D = 0.70 within a few bootstrap sigmas.
    let g2 = fit.gamma.iter().find(|g| g.q == 2.0).unwrap();
    assert!(
        (g2.gamma - 0.70).abs() < 4.0 * g2.se.max(0.01),
        "gamma(2) = {} +- {}",
        g2.gamma,
        g2.se
    );
    for w in fit.gamma.windows(2) {
        assert!(
            w[1].gamma > w[0].gamma - 1e-9,
            "gamma not monotone: {} then {}",
            w[0].gamma,
            w[1].gamma
        );
    }
}

#[test]
fn full_calibration_recovers_the_generator() {
    let p = crate::model::ModelParams::calibrated();
    let ens = sample_ensemble(&p, 6283, 42).unwrap();
    let result = calibrate(&ens, &CalibrationConfig::default_for(ens.n)).unwrap();
    assert!((result.params.d - 0.35).abs() < 0.03, "D = {}", result.params.d);
    assert!((result.params.alpha - 3.5).abs() < 0.4, "alpha = {}", result.params.alpha);
    assert!(
        (result.params.beta / 2.9e-3 - 1.0).abs() < 0.15,
        "beta = {}",
        result.params.beta
    );
    assert_eq!(result.params.n, 20);
}

#[test]
fn cap_sensitivity_is_small_on_simulated_data() {
    let p = crate::model::ModelParams::calibrated();
    let ens = sample_ensemble(&p, 3000, 33).unwrap();
    let mut config = CalibrationConfig::default_for(ens.n);
    config.resamples = 50;
    let (with_cap, without_cap) = cap_sensitivity(&ens, &config).unwrap();
    assert!(with_cap.is_finite() && without_cap.is_finite());
    assert!(
        (with_cap - without_cap).abs() < 0.05,
        "cap moves D from {without_cap} to {with_cap}"
    );
}
