use cpa::aot::Normalization;
use cpa::baselines::{aloha_grid_pa, downlink_delay, simulate_mean_delay, singleton_prob};
use cpa::bench::{Evaluator, PiSettings};
use cpa::SystemConfig;
use proptest::prelude::*;

#[test]
fn aloha_simulation_matches_analysis() {
    let ev = Evaluator::new(SystemConfig::default(), Normalization::Eq5, PiSettings::default());
    let analytic = ev.aloha(400, 64, 1.0, 4).unwrap();
    let sim = ev.aloha_sim(400, 64, 1.0, 4, 500).unwrap();
    let rel = (sim.gamma - analytic.gamma).abs() / analytic.gamma;
    assert!(rel <= 0.03, "sim {} vs analysis {}", sim.gamma, analytic.gamma);
}

#[test]
fn aloha_optimum_and_singleton_rate() {
    let (k, tau) = (1000, 4);
    let pa = aloha_grid_pa(k, tau, 100_000);
    let beta = pa * k as f64 / tau as f64;
    assert!((beta - 1.0).abs() <= 0.02, "beta* = {beta}");
    let rate = singleton_prob(k, tau, pa);
    let e1 = (-1f64).exp();
    assert!((rate - e1).abs() / e1 <= 0.01, "singleton rate {rate}");
}

#[test]
fn simulated_delay_matches_geometric_mean() {
    let model = downlink_delay(0.004, 4, 1000).unwrap();
    let mean = simulate_mean_delay(0.004, 4, 1000, 100_000, 9).unwrap();
    let rel = (mean - model.expectation()).abs() / model.expectation();
    assert!(rel <= 0.02, "simulated {mean} vs {}", model.expectation());
}

proptest! {
    #[test]
    fn singleton_probability_peaks_at_tau_over_k(users in 2usize..3000, pilots in 1usize..64, p in 0.0f64..=1.0) {
        let best = (pilots as f64 / users as f64).min(1.0);
        let at_best = singleton_prob(users, pilots, best);
        prop_assert!((0.0..=1.0).contains(&singleton_prob(users, pilots, p)));
        prop_assert!(singleton_prob(users, pilots, p) <= at_best + 1e-12);
    }

    #[test]
    fn delay_pmf_is_normalized(p in 0.0005f64..0.05, pilots in 1usize..32, users in 1usize..2000) {
        let m = downlink_delay(p, pilots, users).unwrap();
        prop_assume!(m.p_eff > 1e-3);
        let n = (40.0 / m.p_eff) as usize;
        let total: f64 = (1..=n).map(|d| m.pmf(d)).sum();
        prop_assert!((total - 1.0).abs() < 1e-6);
        prop_assert!(m.expectation() >= 0.0);
    }
}
