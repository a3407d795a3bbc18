//! Reference schemes and the downlink delay model.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rng::{purpose, substream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scheme {
    Cpa,
    Aloha,
    Smm,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Cpa => "CPA",
            Scheme::Aloha => "ALOHA",
            Scheme::Smm => "SMM",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CPA" => Ok(Scheme::Cpa),
            "ALOHA" => Ok(Scheme::Aloha),
            "SMM" => Ok(Scheme::Smm),
            _ => Err(Error::Parse(format!("unknown scheme `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineReport {
    pub scheme: Scheme,
    pub pilots: usize,
    /// Access probability (ALOHA only).
    pub p_active: Option<f64>,
    pub pi_1: f64,
    pub gamma: f64,
}

/// Probability that a given pilot of a slot is chosen by exactly one of `K`
/// users: `K (p/tau) (1 - p/tau)^(K-1)`.
pub fn singleton_prob(users: usize, pilots: usize, p_active: f64) -> f64 {
    let q = p_active / pilots as f64;
    users as f64 * q * (1.0 - q).powi(users as i32 - 1)
}

/// Access probability maximizing [`singleton_prob`]: `min(1, tau / K)`.
pub fn aloha_optimal_pa(users: usize, pilots: usize) -> f64 {
    (pilots as f64 / users as f64).min(1.0)
}

/// Brute-force maximizer of [`singleton_prob`] over `points + 1` evenly
/// spaced values in [0, 1].
pub fn aloha_grid_pa(users: usize, pilots: usize, points: usize) -> f64 {
    (0..=points)
        .map(|i| i as f64 / points as f64)
        .map(|p| (p, singleton_prob(users, pilots, p)))
        .fold((0.0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0
}

fn rate_factor(cfg: &SystemConfig) -> f64 {
    cfg.code_rate * cfg.data_len() as f64 / cfg.coherence as f64
}

/// Framed ALOHA without SIC: `tau Pr(|A| = 1) pi_1 R D / L` at the
/// configured access probability.
pub fn aloha_throughput(cfg: &SystemConfig, pi_1: f64) -> f64 {
    cfg.pilots as f64 * singleton_prob(cfg.users, cfg.pilots, cfg.p_active) * pi_1 * rate_factor(cfg)
}

/// Scheduled, collision-free operation: `tau pi_1 R D / L`.
pub fn smm_throughput(cfg: &SystemConfig, pi_1: f64) -> f64 {
    cfg.pilots as f64 * pi_1 * rate_factor(cfg)
}

/// Geometric waiting time of a user for a collision-free downlink slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayModel {
    /// Per-slot chance of being active with a unique pilot.
    pub p_eff: f64,
}

impl DelayModel {
    /// `Pr(Delta = delta) = p' (1 - p')^(delta - 1)`, `delta >= 1`.
    pub fn pmf(&self, delta: usize) -> f64 {
        if delta == 0 {
            return 0.0;
        }
        self.p_eff * (1.0 - self.p_eff).powf((delta - 1) as f64)
    }

    /// `(1 - p') / p'`: slots spent waiting before the successful one.
    /// Infinite when `p' = 0`.
    pub fn expectation(&self) -> f64 {
        if self.p_eff <= 0.0 {
            f64::INFINITY
        } else {
            (1.0 - self.p_eff) / self.p_eff
        }
    }

    /// Collision-free downlink users per slot times `R D / L`.
    pub fn downlink_throughput(&self, cfg: &SystemConfig) -> f64 {
        cfg.users as f64 * self.p_eff * rate_factor(cfg)
    }
}

/// `p' = p_a (1 - p_a/tau)^(K-1)`.
pub fn downlink_delay(p_active: f64, pilots: usize, users: usize) -> Result<DelayModel> {
    if !(0.0..=1.0).contains(&p_active) || pilots == 0 || users == 0 {
        return Err(Error::InvalidConfig(format!(
            "delay model needs p_a in [0, 1], tau >= 1, K >= 1 (got {p_active}, {pilots}, {users})"
        )));
    }
    let p_eff = p_active * (1.0 - p_active / pilots as f64).powi(users as i32 - 1);
    Ok(DelayModel { p_eff })
}

/// Slots one user waits before a collision-free activation, simulated slot
/// by slot: activity is Bernoulli(p_a) and a collision occurs when any of
/// the other `K - 1` users picks the same pilot. Capped at `cap` slots.
fn simulate_wait<R: Rng + ?Sized>(
    p_active: f64,
    pilots: usize,
    users: usize,
    cap: u64,
    rng: &mut R,
) -> u64 {
    if p_active <= 0.0 {
        return cap;
    }
    let idle = Geometric::new(p_active).expect("p in (0, 1]");
    let others = Binomial::new((users - 1) as u64, p_active / pilots as f64).expect("valid binomial");
    let mut waited = 0u64;
    loop {
        waited += idle.sample(rng);
        if waited >= cap {
            return cap;
        }
        if others.sample(rng) == 0 {
            return waited;
        }
        waited += 1;
    }
}

/// Mean simulated wait over `draws` independent users (stream
/// `(DELAY, user)` of `seed`).
pub fn simulate_mean_delay(
    p_active: f64,
    pilots: usize,
    users: usize,
    draws: usize,
    seed: u64,
) -> Result<f64> {
    downlink_delay(p_active, pilots, users)?;
    let cap = 1u64 << 40;
    let total: u64 = (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, &[purpose::DELAY, i]);
            simulate_wait(p_active, pilots, users, cap, &mut rng)
        })
        .sum();
    Ok(total as f64 / draws as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(pilots: usize, coherence: usize, code_rate: f64) -> SystemConfig {
        SystemConfig {
            pilots,
            coherence,
            code_rate,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn optimal_pa_examples() {
        assert_eq!(aloha_optimal_pa(1, 1), 1.0);
        assert_eq!(aloha_optimal_pa(1, 4), 1.0);
        assert!((aloha_optimal_pa(1000, 4) - 0.004).abs() < 1e-15);
        let grid = aloha_grid_pa(1000, 4, 100_000);
        assert!((grid - 0.004).abs() < 1e-4);
        let s = singleton_prob(1000, 4, 0.004);
        assert!((s / (-1f64).exp() - 1.0).abs() < 0.01);
    }

    #[test]
    fn optimal_beta_is_one() {
        for (k, tau) in [(500, 2), (1000, 4), (2000, 8), (4000, 32)] {
            let p = aloha_grid_pa(k, tau, 200_000);
            let beta = p * k as f64 / tau as f64;
            assert!((beta - 1.0).abs() < 0.02, "K={k} tau={tau} beta={beta}");
        }
    }

    #[test]
    fn aloha_and_smm_values() {
        let c = cfg(4, 64, 1.0);
        assert_eq!(aloha_throughput(&c, 0.0), 0.0);
        assert!((smm_throughput(&c, 1.0) - 3.75).abs() < 1e-12);
        let half = cfg(4, 64, 0.5);
        assert!((smm_throughput(&half, 1.0) - 1.875).abs() < 1e-12);
        let big = SystemConfig { users: 100_000, p_active: 4e-5, ..c };
        let limit = 4.0 * (-1f64).exp() * 60.0 / 64.0;
        assert!((aloha_throughput(&big, 1.0) - limit).abs() < 1e-4);
        assert!(smm_throughput(&c, 1.0) > aloha_throughput(&c, 1.0));
    }

    #[test]
    fn delay_model_examples() {
        let d = downlink_delay(1.0, 1, 1).unwrap();
        assert_eq!(d.p_eff, 1.0);
        assert_eq!(d.expectation(), 0.0);
        assert_eq!(DelayModel { p_eff: 0.5 }.expectation(), 1.0);
        assert!(DelayModel { p_eff: 0.0 }.expectation().is_infinite());
        assert!(downlink_delay(1.5, 4, 10).is_err());
    }

    #[test]
    fn delay_pmf_sums_to_one() {
        for p in [0.9, 0.3, 0.00147] {
            let d = DelayModel { p_eff: p };
            let max = (50.0 / p).ceil() as usize;
            let total: f64 = (1..=max).map(|k| d.pmf(k)).sum();
            assert!(total >= 1.0 - 1e-9 && total <= 1.0 + 1e-9, "p={p} total={total}");
        }
    }

    #[test]
    fn simulated_delay_small_case() {
        let model = downlink_delay(0.3, 2, 5).unwrap();
        let mc = simulate_mean_delay(0.3, 2, 5, 20_000, 9).unwrap();
        assert!((mc / model.expectation() - 1.0).abs() < 0.03, "{mc} vs {}", model.expectation());
        let sure = simulate_mean_delay(1.0, 1, 1, 100, 9).unwrap();
        assert_eq!(sure, 0.0);
    }

    #[test]
    fn scheme_names() {
        for s in [Scheme::Cpa, Scheme::Aloha, Scheme::Smm] {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        assert!("tdma".parse::<Scheme>().is_err());
    }
}
