//! Counter-based random streams.
//!
//! Every random quantity in a simulation is drawn from a stream addressed by
//! `(seed, stream id)`. Stream ids are built from a path of integers such as
//! `[trial, purpose, slot]`, so a trial's draws never depend on which thread
//! ran it or in which order trials were scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Stream purposes used by the frame simulator.
pub mod purpose {
    pub const SCHEDULE: u64 = 1;
    pub const CHANNEL: u64 = 2;
    pub const PILOT_NOISE: u64 = 3;
    pub const DATA_NOISE: u64 = 4;
    pub const MESSAGE: u64 = 5;
    pub const FRAME_NORMS: u64 = 6;
    pub const PI_MICRO: u64 = 7;
    pub const DELAY: u64 = 8;
    pub const PI_POOL: u64 = 9;
}

/// Returns the random stream `id` of generator `seed`.
pub fn rng_stream(seed: u64, id: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Folds a path of integers into a single stream id.
pub fn stream_id(path: &[u64]) -> u64 {
    path.iter().fold(0x243f_6a88_85a3_08d3, |acc, &x| {
        splitmix64(acc ^ splitmix64(x.wrapping_add(0x9e37_79b9_7f4a_7c15)))
    })
}

/// Shorthand for `rng_stream(seed, stream_id(path))`.
pub fn substream(seed: u64, path: &[u64]) -> Stream {
    rng_stream(seed, stream_id(path))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn same_stream_is_reproducible() {
        let mut a = rng_stream(42, 7);
        let mut b = rng_stream(42, 7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_ids_differ() {
        let mut a = rng_stream(42, 7);
        let mut b = rng_stream(42, 8);
        assert_ne!(a.next_u64(), b.next_u64());
        assert_ne!(stream_id(&[1, 2]), stream_id(&[2, 1]));
        assert_ne!(stream_id(&[0]), stream_id(&[0, 0]));
    }

    #[test]
    fn first_outputs_are_uniform() {
        let bins = 20;
        let n = 10_000;
        let mut counts = vec![0usize; bins];
        for id in 0..n {
            let x = rng_stream(2016, id as u64).next_u64();
            counts[(x >> 32) as usize * bins >> 32] += 1;
        }
        let expected = n as f64 / bins as f64;
        let stat: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat);
        assert!(p > 0.01, "chi-square p = {p}");
    }
}
