mod common;

use cpa::phy::ChannelModel;
use cpa::pi::{pi_micro, MicroModel};
use cpa::sic::{run_trial, trial_schedule, DecoderOptions, SignalMode, SimOptions};
use cpa::SystemConfig;
use proptest::prelude::*;

fn validation(signal: SignalMode, cancellation: bool) -> SimOptions {
    SimOptions {
        signal,
        channel: ChannelModel::Ideal,
        decoder: DecoderOptions {
            cancellation,
            ..Default::default()
        },
    }
}

fn small(beta: f64, alpha: f64, seed: u64) -> SystemConfig {
    SystemConfig {
        users: 200,
        antennas: 64,
        noise_var: 0.0,
        seed,
        ..Default::default()
    }
    .with_scheme(alpha, beta, 4)
}

#[test]
fn validation_mode_matches_peeling_in_every_signal_mode() {
    for signal in [SignalMode::Full, SignalMode::Virtual, SignalMode::Gram] {
        for (i, beta) in [0.5, 1.0, 2.0].into_iter().enumerate() {
            let cfg = small(beta, 1.1, 40 + i as u64);
            for t in 0..8 {
                let res = run_trial(&cfg, &validation(signal, true), t).unwrap();
                let want = common::peel(&trial_schedule(&cfg, t));
                assert_eq!(common::decoded_set(&res), want, "{signal:?} beta={beta} trial={t}");
            }
        }
    }
}

#[test]
fn no_cancellation_decodes_exactly_the_singletons() {
    let cfg = small(1.0, 1.1, 5);
    for t in 0..20 {
        let res = run_trial(&cfg, &validation(SignalMode::Gram, false), t).unwrap();
        assert_eq!(common::decoded_set(&res), common::singletons(&trial_schedule(&cfg, t)));
    }
}

#[test]
fn singleton_decode_rate_matches_pi_1() {
    let cfg = SystemConfig::default().with_scheme(1.1, 1.0, 4);
    let opts = SimOptions::default();
    let (mut hits, mut total) = (0usize, 0usize);
    for t in 0..200 {
        let res = run_trial(&cfg, &opts, t).unwrap();
        for node in res.trace.iter().filter(|n| n.original_degree == 1) {
            total += 1;
            hits += usize::from(node.last_member_passed == Some(true));
        }
    }
    let rate = hits as f64 / total as f64;
    let model = MicroModel::random_access(1.0, 4);
    let pi_1 = pi_micro(1, &cfg, 10_000, model, 0.0).unwrap().estimate;
    assert!((rate - pi_1).abs() <= 0.02, "sim {rate} vs micro {pi_1}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sic_never_exceeds_peeling(
        seed in 0u64..1_000,
        beta in 0.25f64..3.0,
        alpha in 0.5f64..2.0,
        antennas in 8usize..200,
        noise_var in 0.0f64..1.0,
        rate in prop_oneof![Just(0.5), Just(1.0)],
    ) {
        let cfg = SystemConfig {
            users: 120,
            antennas,
            noise_var,
            code_rate: rate,
            seed,
            ..Default::default()
        }
        .with_scheme(alpha, beta, 4);
        let res = run_trial(&cfg, &SimOptions::default(), 0).unwrap();
        let got = common::decoded_set(&res);
        let bound = common::peel(&trial_schedule(&cfg, 0));
        prop_assert!(got.is_subset(&bound));
        prop_assert_eq!(got.len(), res.decoded_users);
        prop_assert_eq!(res.decode_events(), res.decoded_users);
    }

    #[test]
    fn rerun_is_bit_identical(seed in 0u64..10_000, trial in 0u64..50) {
        let cfg = SystemConfig { users: 100, seed, ..Default::default() }.with_scheme(1.1, 1.0, 4);
        let a = run_trial(&cfg, &SimOptions::default(), trial).unwrap();
        let b = run_trial(&cfg, &SimOptions::default(), trial).unwrap();
        prop_assert_eq!(a, b);
    }
}
