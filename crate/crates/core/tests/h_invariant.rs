use maxloss::simulate::{empirical_h_check, SimConfig, StoppingRule};
use maxloss::{ExpTimeLaw, LevyModel};

/// Chance that an exponential clock of rate γ rings before driftless unit
/// Brownian motion falls y below its start: 1 − e^{−√(2γ) y}.
fn oracle(gamma: f64, y: f64) -> f64 {
    1.0 - (-(2.0 * gamma).sqrt() * y).exp()
}

#[test]
fn h_matches_closed_form_and_simulation() {
    let bm = LevyModel::brownian(0.0, 1.0).unwrap();
    for gamma in [0.5, 2.0] {
        let law = ExpTimeLaw::new(bm, gamma).unwrap();
        let mut cfg = SimConfig::new(bm, StoppingRule::ExponentialTime(gamma));
        cfg.dt = 1e-3;
        cfg.n_paths = 20_000;
        cfg.seed = 11;
        cfg.bridge_correction = true;
        for y in [0.25, 1.0, 4.0] {
            let exact = oracle(gamma, y);
            let h = law.h(y).unwrap();
            assert!((h - exact).abs() < 1e-9, "gamma {gamma}, y {y}: {h} vs {exact}");
            let est = empirical_h_check(&cfg, gamma, y).unwrap();
            let se = (exact * (1.0 - exact) / est.n as f64).sqrt();
            assert!(
                (est.value - exact).abs() <= 3.0 * se,
                "gamma {gamma}, y {y}: mc {} vs {exact} (se {se})",
                est.value
            );
        }
    }
}
