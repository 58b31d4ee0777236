//! The variational constant against a brute-force dynamic program and the
//! structural properties it must have.

mod support {
    pub mod dp;
}

use langevin_ldp::drift::DriftFamily;
use langevin_ldp::rng::AuxUniforms;
use langevin_ldp::variational::{
    extrapolate_t, mollification_gap, shifted_path_bound_check, solve_v, solve_v_plus,
    RateFunctionalSpec, ShiftedPathInstance,
};
use langevin_ldp::DriftSpec;
use support::dp::{dp_v_plus, DpPass};

fn spec(kappa: f64, x0: f64, t: f64) -> RateFunctionalSpec {
    RateFunctionalSpec::new(DriftSpec::exact(kappa), 1.0, x0, t)
}

#[test]
fn solver_is_below_the_dynamic_program_on_the_same_grid() {
    // the DP searches a subset of the solver's feasible set on the same time
    // grid, so it can only be higher, and only by its position resolution
    for &(kappa, p, t, steps) in &[(1.0, 4.0, 4.0, 64), (0.5, 2.0, 3.0, 48)] {
        let solved = solve_v_plus(&spec(kappa, 0.0, t), p, 1.0, steps).unwrap();
        let dp = dp_v_plus(kappa, p, 1.0, 1.0, t, steps, 1.6, 300, &[
            DpPass { half_width: None, nodes: 121 },
            DpPass { half_width: Some(0.08), nodes: 81 },
        ]);
        assert!(solved.converged);
        assert!(solved.value <= dp.value + 1e-9, "{kappa}: {} > {}", solved.value, dp.value);
        assert!(dp.value <= 1.02 * solved.value, "{kappa}: {} vs {}", dp.value, solved.value);
    }
}

#[test]
fn linear_drift_value_scales_exactly_with_the_area() {
    // for kappa = 1 the time scale is fixed and xi -> c xi maps the problem
    // at m onto the problem at c^4 m with cost c^2: V(m) = m^(1/2) V(1)
    let s = spec(1.0, 0.0, 4.0);
    let base = solve_v(&s, 4.0, 1.0, 256).unwrap().value;
    for b in [0.5, 2.0, 4.0] {
        let v = solve_v(&s, 4.0, b, 256).unwrap().value;
        assert!((v / (b.sqrt() * base) - 1.0).abs() < 1e-6, "b={b}: {v}");
    }
}

#[test]
fn free_and_nonnegative_problems_agree_and_mirror() {
    let free = solve_v(&spec(0.5, 0.0, 3.0), 2.0, 1.0, 192).unwrap();
    let plus = solve_v_plus(&spec(0.5, 0.0, 3.0), 2.0, 1.0, 192).unwrap();
    assert!((free.value - plus.value).abs() <= 1e-6);
    let left = solve_v(&spec(0.5, -0.3, 3.0), 2.0, 1.0, 192).unwrap();
    let right = solve_v(&spec(0.5, 0.3, 3.0), 2.0, 1.0, 192).unwrap();
    assert!((left.value - right.value).abs() <= 1e-6);
}

#[test]
fn value_decreases_in_the_horizon() {
    let sweep = extrapolate_t(&spec(1.0, 0.0, 1.0), 4.0, 1.0, &[1.0, 2.0, 4.0, 8.0], 1.0 / 64.0).unwrap();
    assert!(sweep.monotone && sweep.all_converged, "{sweep:?}");
    assert!(sweep.values[0] > sweep.values[3]);
    // V(4) and V(8) already agree to 2%
    assert!(sweep.values[2] / sweep.values[3] < 1.02);
}

#[test]
fn mollified_values_converge_from_below() {
    let study = mollification_gap(&[0.05, 0.1, 0.2, 0.4], 0.5, 1.0, 2.0, 3.0, 192).unwrap();
    assert!(study.start_bound_holds(1e-6), "{study:?}");
    assert!(study.converges_monotonically(1e-6), "{study:?}");
    let gap = |e: f64| study.rows.iter().find(|r| r.eps == e).unwrap().drift_gap;
    assert!(gap(0.05) < gap(0.4));
}

#[test]
fn shifted_path_inequality_on_random_instances() {
    let mut u = AuxUniforms::new(0x5A1F, 0);
    for _ in 0..3 {
        let kappa = if u.uniform() < 0.5 { 0.5 } else { 1.0 };
        let x = 0.1 + 0.4 * u.uniform();
        let inst = ShiftedPathInstance {
            x,
            y: x * u.uniform(),
            cap: 2.0 + 2.0 * u.uniform(),
            horizon: 2.0 + 3.0 * u.uniform(),
            p: 4.0,
            m: 0.5 + 1.5 * u.uniform(),
            kappa,
            sigma: 1.0,
            eps: 0.5 * x,
            lower_family: DriftFamily::OneSidedLowerUEps,
            n: 96,
        };
        let c = shifted_path_bound_check(&inst).unwrap();
        assert!(c.holds && c.margin > 0.0, "{inst:?}: {c:?}");
    }
}
