//! Monte Carlo estimation of the physical-layer success probabilities
//! `pi_j`: the chance that a node of original degree j, once reduced to a
//! single member, still carries a decodable signal.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;

use crate::aot::PiTable;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::phy::{sample_gram, C64};
use crate::receiver::{node_sinr, CancellationLedger, FactorNode};
use crate::rng::{purpose, substream};
use crate::sic::{run_trial, SimOptions};

/// Where an estimate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PiMode {
    Micro,
    Frame,
}

impl fmt::Display for PiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PiMode::Micro => "micro",
            PiMode::Frame => "frame",
        })
    }
}

impl FromStr for PiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro" => Ok(PiMode::Micro),
            "frame" => Ok(PiMode::Frame),
            _ => Err(Error::Parse(format!("unknown pi mode `{s}`"))),
        }
    }
}

/// Users on the other pilots of the decoding slot. Their signals leak
/// through the matched filter and are never cancelled at this node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CrossPilot {
    /// No other users in the slot.
    #[default]
    None,
    /// Poisson count with the given mean, `beta (tau - 1)` for random access.
    Poisson(f64),
    /// Exactly this many, `tau - 1` for a fully scheduled slot.
    Fixed(usize),
}

impl CrossPilot {
    /// Random-access load at `beta` users per resource.
    pub fn random_access(beta: f64, pilots: usize) -> Self {
        if pilots <= 1 || beta <= 0.0 {
            CrossPilot::None
        } else {
            CrossPilot::Poisson(beta * (pilots - 1) as f64)
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match *self {
            CrossPilot::None => 0,
            CrossPilot::Fixed(n) => n,
            CrossPilot::Poisson(mean) if mean > 0.0 => {
                Poisson::new(mean).expect("positive mean").sample(rng) as usize
            }
            CrossPilot::Poisson(_) => 0,
        }
    }

    /// Short tag for file names and CSV columns.
    pub fn tag(&self) -> String {
        match self {
            CrossPilot::None => "isolated".into(),
            CrossPilot::Poisson(m) => format!("poisson{m}"),
            CrossPilot::Fixed(n) => format!("fixed{n}"),
        }
    }
}

/// How the cancellation values of the `j - 1` interferers are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Chain {
    /// `||h'||^2` for an independent channel vector: only the temporal
    /// fluctuation of the channel power.
    #[default]
    Fresh,
    /// The residual power sum of a synthetic decoding node of degree
    /// `1 + Poisson(mean)` on which the interferer passed the threshold.
    /// That node's other members are cancelled with values drawn the same
    /// way, `depth` levels deep, then with fresh values. Values are
    /// resampled from a pool built once per estimate.
    Decoded { mean: f64, depth: usize },
}

/// Mean number of other members at an interferer's decoding node, per unit
/// of `beta`, before conditioning on the interferer passing there. Frame
/// traces put the conditioned mean at 0.4 to 0.56 `beta`; 0.4 with deep
/// chains reproduces frame-mode pi_j over M from 50 to 1024.
pub const CHAIN_SHARE: f64 = 0.4;
/// Levels of decoding nodes drawn before falling back to fresh values.
pub const CHAIN_DEPTH: usize = 8;

/// Interference environment of a micro-mode node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MicroModel {
    pub cross: CrossPilot,
    pub chain: Chain,
}

impl MicroModel {
    /// Cross-pilot leakage and decoding-node chain of random access at
    /// `beta` users per resource.
    pub fn random_access(beta: f64, pilots: usize) -> Self {
        Self {
            cross: CrossPilot::random_access(beta, pilots),
            chain: if beta > 0.0 {
                Chain::Decoded {
                    mean: CHAIN_SHARE * beta,
                    depth: CHAIN_DEPTH,
                }
            } else {
                Chain::Fresh
            },
        }
    }

    pub fn tag(&self) -> String {
        match self.chain {
            Chain::Fresh => self.cross.tag(),
            Chain::Decoded { mean, depth } => format!("{}_dec{mean}d{depth}", self.cross.tag()),
        }
    }
}

impl From<CrossPilot> for MicroModel {
    fn from(cross: CrossPilot) -> Self {
        Self {
            cross,
            chain: Chain::Fresh,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiEntry {
    pub degree: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl PiEntry {
    pub fn from_counts(degree: usize, successes: usize, trials: usize) -> Self {
        let p = successes as f64 / trials as f64;
        Self {
            degree,
            estimate: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
        }
    }
}

/// Estimates by degree. Degrees without samples are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct PiEstimate {
    pub mode: PiMode,
    pub entries: Vec<PiEntry>,
}

impl PiEstimate {
    pub fn get(&self, degree: usize) -> Option<&PiEntry> {
        self.entries.iter().find(|e| e.degree == degree)
    }

    /// Dense table for the and-or recursion; gaps and the tail repeat the
    /// last observed degree.
    pub fn to_table(&self) -> Result<PiTable> {
        let sparse = self.entries.iter().map(|e| (e.degree, e.estimate)).collect();
        PiTable::from_sparse(&sparse)
    }

    pub const CSV_HEADER: [&'static str; 5] = ["degree", "estimate", "stderr", "trials", "mode"];

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for e in &self.entries {
            w.write_record([
                e.degree.to_string(),
                e.estimate.to_string(),
                e.stderr.to_string(),
                e.trials.to_string(),
                self.mode.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<pi csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut entries = Vec::new();
        let mut mode = None;
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != 5 {
                return Err(Error::Parse(format!("pi csv row has {} fields", rec.len())));
            }
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number `{}`", &rec[i])))
            };
            entries.push(PiEntry {
                degree: num(0)? as usize,
                estimate: num(1)?,
                stderr: num(2)?,
                trials: num(3)? as usize,
            });
            mode = Some(rec[4].parse()?);
        }
        Ok(Self {
            mode: mode.unwrap_or(PiMode::Micro),
            entries,
        })
    }
}

/// Decoded cancellation values kept per chain level.
const POOL_SIZE: usize = 16384;
/// Candidate decoding nodes per pool entry. Pools that stay short after
/// this many candidates are topped up with nodes that failed.
const POOL_TRIES: usize = 16;

/// Source of the cancellation values of a node's interferers.
enum Ghat {
    Fresh(Gamma<f64>),
    Pool(Vec<f64>),
}

impl Ghat {
    /// Pools are built level by level from stream `(PI_POOL, level)`, each
    /// level's nodes cancelling with values from the level below.
    fn build(cfg: &SystemConfig, model: MicroModel, threshold: f64) -> Self {
        let mut level = Ghat::Fresh(Gamma::new(cfg.antennas as f64, 1.0).expect("antennas > 0"));
        let Chain::Decoded { mean, depth } = model.chain else {
            return level;
        };
        for lvl in 1..=depth {
            let mut rng = substream(cfg.seed, &[purpose::PI_POOL, lvl as u64]);
            let mut passed = Vec::with_capacity(POOL_SIZE);
            let mut failed = Vec::new();
            for _ in 0..POOL_SIZE * POOL_TRIES {
                if passed.len() == POOL_SIZE {
                    break;
                }
                let d = 1 + CrossPilot::Poisson(mean).draw(&mut rng);
                let (sinr, residual) = micro_node(d, cfg, model.cross, &level, &mut rng);
                if sinr >= threshold {
                    passed.push(residual);
                } else if failed.len() < POOL_SIZE {
                    failed.push(residual);
                }
            }
            let short = POOL_SIZE - passed.len();
            passed.extend(failed.into_iter().take(short));
            level = Ghat::Pool(passed);
        }
        level
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Ghat::Fresh(g) => g.sample(rng),
            Ghat::Pool(v) => v[rng.random_range(0..v.len())],
        }
    }
}

/// One synthetic node of degree `j` after its `j - 1` interferers were
/// cancelled. Returns the target's SINR and the residual power sum, which
/// is the value subtracted elsewhere if the target decodes here.
fn micro_node<R: Rng + ?Sized>(
    j: usize,
    cfg: &SystemConfig,
    cross: CrossPilot,
    ghat: &Ghat,
    rng: &mut R,
) -> (f64, f64) {
    let with_noise = cfg.noise_var > 0.0;
    let mut scales = vec![1.0; j];
    if with_noise {
        scales.push(cfg.noise_var / cfg.pilots as f64);
    }
    let p = scales.len();
    let gram = sample_gram(&scales, cfg.antennas, rng);
    // phi is the sum of all p columns
    let mut coeffs: Vec<(usize, C64)> = (0..j)
        .map(|l| (l, (0..p).map(|a| gram[a * p + l]).sum()))
        .collect();
    let energy: f64 = gram.iter().map(|g| g.re).sum();

    let mut ledger = CancellationLedger::new(j + 1);
    let mut residual = energy;
    for l in 1..j {
        let g = ghat.sample(rng);
        residual -= g;
        ledger.record(l, g);
    }
    let cross = cross.draw(rng);
    if cross > 0 {
        // phi^H h for independent h is CN(0, ||phi||^2); the sum of the
        // squared magnitudes is ||phi||^2 Gamma(n, 1)
        let leak = energy * Gamma::new(cross as f64, 1.0).expect("n > 0").sample(rng);
        coeffs.push((j, C64::new(leak.sqrt(), 0.0)));
    }
    let node = FactorNode {
        slot: 0,
        pilot: 0,
        members: (0..j).collect(),
        residual: vec![0],
        cancelled: (1..j).collect(),
        coeffs,
        power_sum: residual,
        estimate_energy: energy,
        noise_power: energy * cfg.noise_var,
        filtered: None,
    };
    (node_sinr(&node, 0, &ledger).expect("target is a member"), residual)
}

/// Micro-mode estimate of `pi_j` over `trials` synthetic nodes. Trial t of
/// degree j draws from stream `(PI_MICRO, j, t)` of `cfg.seed`, so degrees
/// and loads share their channel draws.
pub fn pi_micro(
    j: usize,
    cfg: &SystemConfig,
    trials: usize,
    model: impl Into<MicroModel>,
    margin_db: f64,
) -> Result<PiEntry> {
    let model = model.into();
    if j == 0 {
        return Err(Error::InvalidConfig("pi_j needs j >= 1".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidConfig("pi estimation needs trials >= 1".into()));
    }
    let threshold = cfg.sinr_threshold(margin_db);
    Ok(estimate(j, cfg, trials, model.cross, &Ghat::build(cfg, model, threshold), threshold))
}

fn estimate(j: usize, cfg: &SystemConfig, trials: usize, cross: CrossPilot, ghat: &Ghat, threshold: f64) -> PiEntry {
    let successes = (0..trials as u64)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = substream(cfg.seed, &[purpose::PI_MICRO, j as u64, t]);
            micro_node(j, cfg, cross, ghat, &mut rng).0 >= threshold
        })
        .count();
    PiEntry::from_counts(j, successes, trials)
}

/// Micro-mode estimates for degrees `1..=j_max`.
pub fn pi_micro_table(
    cfg: &SystemConfig,
    j_max: usize,
    trials: usize,
    model: impl Into<MicroModel>,
) -> Result<PiEstimate> {
    let model = model.into();
    if trials == 0 {
        return Err(Error::InvalidConfig("pi estimation needs trials >= 1".into()));
    }
    let threshold = cfg.sinr_threshold(0.0);
    let ghat = Ghat::build(cfg, model, threshold);
    let entries = (1..=j_max)
        .map(|j| estimate(j, cfg, trials, model.cross, &ghat, threshold))
        .collect();
    Ok(PiEstimate {
        mode: PiMode::Micro,
        entries,
    })
}

/// Frame-mode estimates tallied from full SIC runs: for each original degree
/// j, the share of nodes reduced to one member whose last member met the
/// threshold there.
pub fn pi_frame(cfg: &SystemConfig, opts: &SimOptions, trials: usize) -> Result<PiEstimate> {
    let tallies: Vec<Vec<(usize, usize)>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let res = run_trial(cfg, opts, t)?;
            let mut counts = Vec::new();
            for node in &res.trace {
                if !node.reduced_to_one {
                    continue;
                }
                let d = node.original_degree;
                if counts.len() <= d {
                    counts.resize(d + 1, (0, 0));
                }
                counts[d].0 += 1;
                if node.last_member_passed == Some(true) {
                    counts[d].1 += 1;
                }
            }
            Ok(counts)
        })
        .collect::<Result<_>>()?;
    let mut total: Vec<(usize, usize)> = Vec::new();
    for counts in tallies {
        if total.len() < counts.len() {
            total.resize(counts.len(), (0, 0));
        }
        for (d, (n, s)) in counts.into_iter().enumerate() {
            total[d].0 += n;
            total[d].1 += s;
        }
    }
    let entries = total
        .into_iter()
        .enumerate()
        .filter(|&(d, (n, _))| d > 0 && n > 0)
        .map(|(d, (n, s))| PiEntry::from_counts(d, s, n))
        .collect();
    Ok(PiEstimate {
        mode: PiMode::Frame,
        entries,
    })
}
