use mutsel::dynamics::{closed_form_uniform_linear, integrate, perron_growth_ceiling};
use mutsel::equilibrium::{equilibrium_homotopy, equilibrium_uniform, residual, HomotopyConfig};
use mutsel::presets;

#[test]
fn mut4_reaches_uniform_quasispecies() {
    let m = presets::mut4();
    let tr = integrate(&m, &[40.0, 30.0, 20.0, 5.0], 2000.0, 1e-10, 1e-12, 10.0).unwrap();
    for x in tr.final_state() {
        assert!((x - 25.0).abs() < 1e-8, "{x}");
    }
}

#[test]
fn integrator_error_shrinks_with_tolerance() {
    let m = presets::sym2();
    let times: Vec<f64> = (0..=20).map(|k| k as f64).collect();
    let exact = closed_form_uniform_linear(&m, &[8.0, 2.0], &times).unwrap();
    let err = |rtol: f64| {
        let tr = integrate(&m, &[8.0, 2.0], 20.0, rtol, rtol * 1e-2, 1.0).unwrap();
        tr.states
            .iter()
            .zip(&exact.states)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    };
    let loose = err(1e-5);
    let tight = err(1e-10);
    assert!(tight < loose * 1e-2, "{loose} {tight}");
    assert!(tight < 1e-7);
}

#[test]
fn perron_ceiling_bounds_trajectory() {
    let m = presets::fit2asym();
    let v0 = [0.05, 0.05];
    let tr = integrate(&m, &v0, 10.0, 1e-10, 1e-12, 0.5).unwrap();
    for (t, v) in tr.times.iter().zip(&tr.states) {
        let c = perron_growth_ceiling(&m, &v0, *t).unwrap();
        for (x, y) in v.iter().zip(&c) {
            assert!(*x <= y + 1e-9, "t={t}: {x} > {y}");
        }
    }
}

#[test]
fn crowd3_equilibrium_is_attracting() {
    let m = presets::crowd3();
    let eq = equilibrium_homotopy(&m, &HomotopyConfig::default()).unwrap();
    assert!(eq.v_bar.iter().all(|&x| x > 0.0));
    assert!(residual(&m, &eq.v_bar) <= 1e-10);
    let tr = integrate(&m, &[1.0, 1.0, 1.0], 400.0, 1e-10, 1e-12, 10.0).unwrap();
    for (a, b) in tr.final_state().iter().zip(&eq.v_bar) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn both_solvers_agree_on_uniform_models() {
    for m in [presets::sym2(), presets::fit2asym(), presets::mut4()] {
        let p = equilibrium_uniform(&m).unwrap();
        let h = equilibrium_homotopy(&m, &HomotopyConfig::default()).unwrap();
        for (a, b) in p.v_bar.iter().zip(&h.v_bar) {
            assert!((a - b).abs() < 1e-8 * a.max(1.0));
        }
    }
}
