//! Tail curves, the Weibull big jump and renewal concentration.

use langevin_ldp::cycles::{simulate_cycles_pooled, DetectorConfig, StopRule};
use langevin_ldp::experiments::{
    cramer_rate, n_delta_concentration, renewal_bias, tail_curve_additive, tail_curve_cycle,
    weibull_sum_check, AdditiveTailConfig, CycleAreaModel,
};
use langevin_ldp::rng::AuxUniforms;
use langevin_ldp::splitting::{crude_scores, estimate_tail, SplittingConfig};
use langevin_ldp::{moment_p, DriftSpec, ModelParams, StationaryLaw};

fn linear_params() -> ModelParams {
    ModelParams::new(1.0, 4.0, 1.0, 0.5).unwrap()
}

#[test]
fn splitting_agrees_with_crude_monte_carlo() {
    let model = CycleAreaModel::new(&linear_params(), 1e-3).unwrap();
    let u = 12.0;
    let crude = crude_scores(&model, 100_000, 77);
    let hits = crude.iter().filter(|&&a| a >= u).count() as f64;
    let pc = hits / crude.len() as f64;
    let se_c = (pc * (1.0 - pc) / crude.len() as f64).sqrt();
    assert!(pc > 1e-3);
    let est = estimate_tail(&model, &[u], &SplittingConfig::default()).unwrap();
    let e = est.targets[0];
    let se = e.prob * e.se_log;
    assert!((e.prob - pc).abs() < 3.0 * (se * se + se_c * se_c).sqrt(), "{e:?} vs {pc} ± {se_c}");
}

#[test]
fn cycle_tail_is_linear_in_the_speed_abscissa() {
    let c = tail_curve_cycle(&linear_params(), &[4.0, 8.0, 16.0, 32.0, 64.0], &SplittingConfig::default(), 1e-3).unwrap();
    assert!(c.degenerate.iter().all(|d| !d));
    assert!(c.fit.slope < 0.0 && c.fit.r2 >= 0.98, "{:?}", c.fit);
    for r in [1.0, c.speed_r / 2.0] {
        let (w, _) = c.refit(r).unwrap();
        assert!(w.r2 < c.fit.r2, "r' = {r}: {w:?}");
    }
    // thresholds below the median area are exceeded more often than not
    let low = tail_curve_cycle(&linear_params(), &[0.01, 0.02], &SplittingConfig::default(), 1e-3).unwrap();
    assert!(low.log_prob.iter().all(|l| *l > -(2f64.ln())), "{:?}", low.log_prob);
}

#[test]
fn additive_tail_decays_above_the_mean() {
    let params = linear_params();
    let moment = moment_p(&StationaryLaw::new(1.0, 1.0).unwrap(), 4.0).unwrap();
    let cfg = AdditiveTailConfig {
        replicas: 2000,
        splitting: SplittingConfig {
            particles: 500,
            pilot_particles: 250,
            ..Default::default()
        },
        dt: 1e-2,
        ..Default::default()
    };
    let grid = [10.0, 20.0, 40.0, 80.0];
    let lo = tail_curve_additive(&params, &grid, 2.0 * moment, &cfg).unwrap();
    let hi = tail_curve_additive(&params, &grid, 3.0 * moment, &cfg).unwrap();
    assert!(lo.fit.slope < 0.0 && hi.fit.slope < lo.fit.slope, "{:?} {:?}", lo.fit, hi.fit);
    let predicted = (2.0f64).powf(lo.speed_r);
    eprintln!(
        "slope ratio {:.3} against (b - moment)^r ratio {predicted:.3}",
        hi.fit.slope / lo.fit.slope
    );
}

#[test]
fn weibull_big_jump() {
    let cfg = SplittingConfig::default();
    let rep = weibull_sum_check(0.5, &[25, 100], 4.0, 1.0, &cfg, 200_000).unwrap();
    assert!((rep.mean - 2.0).abs() < 1e-12);
    assert!((rep.rows[0].limit + 2f64.sqrt()).abs() < 1e-12);
    for row in &rep.rows {
        let se = (row.se_log.powi(2) + row.se_log_split.powi(2)).sqrt();
        assert!((row.log_prob - row.log_prob_split).abs() < 3.0 * se, "{row:?}");
    }
    // the normalized log-probability moves toward the limit with n
    assert!(rep.rows[1].rel_err < rep.rows[0].rel_err);
    assert!(weibull_sum_check(0.5, &[25], 1.5, 1.0, &cfg, 100).is_err());
}

#[test]
fn cramer_transform_of_simulated_cycle_durations() {
    let mut aux = AuxUniforms::new(3, 0);
    let exp: Vec<f64> = (0..200_000).map(|_| -aux.uniform().ln()).collect();
    let c = cramer_rate(&exp, 2.0).unwrap();
    assert!((c.value / (1.0 - 2f64.ln()) - 1.0).abs() < 0.05, "{c:?}");

    let det = DetectorConfig::new(0.5, 4.0).with_bridge(1.0);
    let pool: Vec<f64> = simulate_cycles_pooled(&DriftSpec::exact(1.0), 1.0, 1e-2, &[det], StopRule::Horizon(2500.0), 4, 8).unwrap()[0]
        .iter()
        .map(|r| r.duration)
        .collect();
    let mean = pool.iter().sum::<f64>() / pool.len() as f64;
    assert!(cramer_rate(&pool, mean).unwrap().value < 1e-6);
    assert!(cramer_rate(&pool, 1.5 * mean).unwrap().value > 0.0);

    let r = n_delta_concentration(&pool, 100.0, 0.2 / mean, 20_000, 5).unwrap();
    assert!(r.consistent, "{r:?}");
    let far = n_delta_concentration(&pool, 100.0, 2.0 / mean, 20_000, 5).unwrap();
    assert!(far.upper_bound_only && far.consistent);

    // N(t)/t - 1/mean is O(1/t): doubling t roughly halves it
    let (b1, s1) = renewal_bias(&pool, 25.0, 400_000, 6).unwrap();
    let (b2, s2) = renewal_bias(&pool, 50.0, 400_000, 6).unwrap();
    let ratio = b1 / b2;
    let tol = 3.0 * ratio * ((s1 / b1).powi(2) + (s2 / b2).powi(2)).sqrt();
    assert!((ratio - 2.0).abs() < tol.max(0.3), "{b1} ± {s1}, {b2} ± {s2}");
}
