//! Regeneration cycles: the regenerative moment identity, threshold
//! invariance and the small-noise rescaling of a cycle.

use langevin_ldp::cycles::{
    regenerative_moment_ratio, renewal_count, simulate_cycles_pooled, write_cycles_csv,
    DetectorConfig, StopRule,
};
use langevin_ldp::stats::ks_two_sample;
use langevin_ldp::{moment_p, DriftSpec, ModelParams, StationaryLaw};

#[test]
fn regenerative_ratio_matches_stationary_moment() {
    let dt = 2e-3;
    let cfgs = [
        DetectorConfig::new(0.5, 2.0).with_bridge(1.0),
        DetectorConfig::new(0.5, 4.0).with_bridge(1.0),
    ];
    let pooled = simulate_cycles_pooled(&DriftSpec::exact(1.0), 1.0, dt, &cfgs, StopRule::Horizon(4000.0), 21, 8).unwrap();
    let law = StationaryLaw::new(1.0, 1.0).unwrap();
    for (cfg, recs) in cfgs.iter().zip(&pooled) {
        let est = regenerative_moment_ratio(recs).unwrap();
        let target = moment_p(&law, cfg.p).unwrap();
        assert!(est.n > 20_000);
        assert!((est.ratio - target).abs() < 0.05 * target, "p={}: {est:?} vs {target}", cfg.p);
    }
}

#[test]
fn ratio_does_not_depend_on_the_threshold() {
    let cfgs: Vec<DetectorConfig> = [0.25, 0.5, 1.0]
        .iter()
        .map(|&d| DetectorConfig::new(d, 2.0).with_bridge(1.0))
        .collect();
    let pooled = simulate_cycles_pooled(&DriftSpec::exact(1.0), 1.0, 2e-3, &cfgs, StopRule::Horizon(4000.0), 22, 8).unwrap();
    let ests: Vec<_> = pooled.iter().map(|r| regenerative_moment_ratio(r).unwrap()).collect();
    for i in 0..ests.len() {
        for j in i + 1..ests.len() {
            assert!(ests[i].overlaps(&ests[j]), "{:?} vs {:?}", ests[i], ests[j]);
        }
    }
}

#[test]
fn rescaled_cycle_area_has_the_same_law() {
    // (1/t) × cycle area of X at threshold delta has the law of the cycle
    // area of the small-noise process at threshold delta t^(-alpha/p)
    let params = ModelParams::new(0.5, 2.0, 1.0, 0.5).unwrap();
    let ex = params.scaling().unwrap();
    let t = 10.0;
    let dt = 2e-3;
    let d = DriftSpec::exact(params.kappa);
    let base = DetectorConfig::new(params.delta, params.p).with_bridge(params.sigma);
    let orig = simulate_cycles_pooled(&d, params.sigma, dt, &[base], StopRule::Cycles(1250), 31, 8).unwrap();
    let amp = ex.scaled_noise(params.sigma, t);
    let small = DetectorConfig::new(params.delta * t.powf(-ex.alpha / params.p), params.p).with_bridge(amp);
    let dt_small = dt * t.powf(-ex.beta);
    let scaled = simulate_cycles_pooled(&d, amp, dt_small, &[small], StopRule::Cycles(1250), 32, 8).unwrap();
    let a: Vec<f64> = orig[0].iter().map(|c| c.area / t).collect();
    let b: Vec<f64> = scaled[0].iter().map(|c| c.area).collect();
    assert!(a.len() >= 10_000 && b.len() >= 10_000);
    let ks = ks_two_sample(&a, &b).unwrap();
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn cycles_csv_and_renewal_count() {
    let cfg = DetectorConfig::new(0.5, 4.0);
    let recs = &simulate_cycles_pooled(&DriftSpec::exact(1.0), 1.0, 1e-2, &[cfg], StopRule::Horizon(50.0), 1, 1).unwrap()[0];
    assert!(!recs.is_empty());
    let mut buf = Vec::new();
    write_cycles_csv(recs, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("start,end,duration,area,peak\n"));
    assert_eq!(text.lines().count(), recs.len() + 1);
    assert_eq!(renewal_count(recs, 50.0), recs.len());
    assert_eq!(renewal_count(recs, 0.0), 0);
}
