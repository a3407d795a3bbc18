//! Asymptotic and-or tree evaluation of SIC recovery with imperfect
//! physical-layer decoding.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A degree distribution, stored as a pmf indexed by degree.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSpec {
    pmf: Vec<f64>,
}

/// Where to cut a Poisson pmf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Truncation {
    /// `max(40, mean + 12 sqrt(mean))`.
    #[default]
    Auto,
    /// Highest kept degree.
    At(usize),
}

impl DegreeSpec {
    /// Poisson pmf truncated at the chosen degree and renormalized.
    pub fn poisson(mean: f64, truncation: Truncation) -> Result<Self> {
        if !(mean >= 0.0 && mean.is_finite()) {
            return Err(Error::InvalidDistribution(format!("Poisson mean {mean}")));
        }
        let max = match truncation {
            Truncation::Auto => 40usize.max((mean + 12.0 * mean.sqrt()).ceil() as usize),
            Truncation::At(0) => {
                return Err(Error::InvalidDistribution(
                    "truncation at degree 0 leaves a degenerate distribution".into(),
                ))
            }
            Truncation::At(d) => d,
        };
        // log-space recursion stays finite for large means
        let mut pmf = Vec::with_capacity(max + 1);
        let mut log_p = -mean;
        for d in 0..=max {
            if d > 0 {
                log_p += mean.ln() - (d as f64).ln();
            }
            pmf.push(if mean == 0.0 {
                if d == 0 { 1.0 } else { 0.0 }
            } else {
                log_p.exp()
            });
        }
        Self::from_weights(pmf)
    }

    /// Explicit pmf `{degree: probability}`; normalized if it does not sum
    /// to one.
    pub fn from_map(map: &BTreeMap<usize, f64>) -> Result<Self> {
        let max = map.keys().next_back().copied().unwrap_or(0);
        let mut pmf = vec![0.0; max + 1];
        for (&d, &p) in map {
            pmf[d] = p;
        }
        Self::from_weights(pmf)
    }

    pub fn from_weights(pmf: Vec<f64>) -> Result<Self> {
        if pmf.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidDistribution("negative or non-finite mass".into()));
        }
        let total: f64 = pmf.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("zero total mass".into()));
        }
        Ok(Self {
            pmf: pmf.into_iter().map(|p| p / total).collect(),
        })
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn prob(&self, d: usize) -> f64 {
        self.pmf.get(d).copied().unwrap_or(0.0)
    }

    pub fn max_degree(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(d, p)| d as f64 * p).sum()
    }
}

/// Edge-perspective distribution `psi_d = d Psi_d / sum_j j Psi_j`.
pub fn edge_perspective(spec: &DegreeSpec) -> Result<DegreeSpec> {
    let mean = spec.mean();
    if mean <= 0.0 {
        return Err(Error::ZeroMeanDistribution);
    }
    let pmf = spec
        .pmf
        .iter()
        .enumerate()
        .map(|(d, p)| d as f64 * p / mean)
        .collect();
    Ok(DegreeSpec { pmf })
}

/// Factor-node Poisson(beta) and variable-node Poisson(alpha beta).
pub fn make_poisson_specs(
    alpha: f64,
    beta: f64,
    truncation: Truncation,
) -> Result<(DegreeSpec, DegreeSpec)> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "alpha and beta must be positive, got {alpha}, {beta}"
        )));
    }
    Ok((
        DegreeSpec::poisson(beta, truncation)?,
        DegreeSpec::poisson(alpha * beta, truncation)?,
    ))
}

/// Physical-layer success probabilities `pi_j`, j >= 1. Degrees beyond the
/// table reuse the last entry.
#[derive(Debug, Clone, PartialEq)]
pub struct PiTable {
    values: Vec<f64>,
}

impl PiTable {
    /// `values[0]` is pi_1.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDistribution("empty pi table".into()));
        }
        if values.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidDistribution("pi outside [0, 1]".into()));
        }
        let table = Self { values };
        if !table.is_non_increasing() {
            log::warn!("pi table is not non-increasing in degree: {:?}", table.values);
        }
        Ok(table)
    }

    /// `pi_j = 1` for every degree: plain erasure peeling.
    pub fn ideal() -> Self {
        Self { values: vec![1.0] }
    }

    pub fn get(&self, degree: usize) -> f64 {
        assert!(degree >= 1, "pi is defined for degree >= 1");
        let i = (degree - 1).min(self.values.len() - 1);
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_non_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] + 1e-12)
    }

    /// Two-column CSV `degree,probability`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["degree", "probability"])?;
        for (i, p) in self.values.iter().enumerate() {
            w.write_record([(i + 1).to_string(), p.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<pi table>", e))?;
        Ok(())
    }

    /// Reads the first two columns (degree, probability) of a CSV with a
    /// header. Missing degrees take the value of the previous degree.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut entries = BTreeMap::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<&str> {
                rec.get(i)
                    .ok_or_else(|| Error::Parse("pi table row needs two columns".into()))
            };
            let d: usize = parse(0)?
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad degree `{}`", &rec[0])))?;
            let p: f64 = parse(1)?
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad probability `{}`", &rec[1])))?;
            if d == 0 {
                return Err(Error::Parse("pi degrees start at 1".into()));
            }
            entries.insert(d, p);
        }
        Self::from_sparse(&entries)
    }

    /// Fills gaps in a sparse `{degree: pi}` map with the previous degree's
    /// value (pi_1 defaults to 1 if absent).
    pub fn from_sparse(entries: &BTreeMap<usize, f64>) -> Result<Self> {
        let max = entries.keys().next_back().copied().unwrap_or(1);
        let mut values = Vec::with_capacity(max);
        let mut last = 1.0;
        for d in 1..=max {
            if let Some(&p) = entries.get(&d) {
                last = p;
            }
            values.push(last);
        }
        Self::new(values)
    }
}

/// Which composed recursion to iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Recursion {
    /// `q_i = sum_k lambda_k (1 - sum_j psi_j pi_j (1 - q_{i-1})^{j-1})^{k-1}`.
    /// The inner sum is the probability that an edge is recovered at its
    /// factor node; an edge stays unrecovered if none of the other k-1
    /// replicas was recovered.
    #[default]
    Standard,
    /// `q_i = sum_k lambda_k (sum_j psi_j pi_j (1 - q_{i-1})^{j-1})^{k-1}`,
    /// the composed expression evaluated exactly as printed.
    Literal,
}

/// Counting convention for users that never transmit in a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegreeZero {
    /// Recovery is normalized by users active at least once, matching the
    /// simulator's decoded/active statistic.
    #[default]
    Exclude,
    /// Recovery is normalized by all users.
    Include,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AotResult {
    /// `1 - q_inf`: asymptotic recovery probability over all users.
    pub p_d: f64,
    /// `q_0 = 1, q_1, ...`
    pub q_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Whether `q_i` was non-increasing throughout.
    pub monotone: bool,
}

impl AotResult {
    pub fn q_final(&self) -> f64 {
        *self.q_trace.last().expect("trace starts at q_0")
    }

    /// Recovery under a degree-zero convention; `lambda0` is `Lambda_0`.
    pub fn recovery(&self, mode: DegreeZero, lambda0: f64) -> f64 {
        match mode {
            DegreeZero::Include => self.p_d,
            DegreeZero::Exclude if lambda0 < 1.0 => (self.p_d / (1.0 - lambda0)).min(1.0),
            DegreeZero::Exclude => 0.0,
        }
    }
}

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Fixed-point iteration of the composed recursion from `q_0 = 1` until
/// `|q_i - q_{i-1}| < tol` or `max_iter` steps.
pub fn aot_iterate(
    psi: &DegreeSpec,
    lambda: &DegreeSpec,
    pi: &PiTable,
    tol: f64,
    max_iter: usize,
    recursion: Recursion,
) -> AotResult {
    // psi_j pi_j, j >= 1
    let weights: Vec<f64> = (1..=psi.max_degree())
        .map(|j| psi.prob(j) * pi.get(j))
        .collect();
    let lam = lambda.pmf();
    let mut q = 1.0f64;
    let mut trace = vec![q];
    let mut monotone = true;
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..max_iter {
        let erased_other = 1.0 - q;
        let mut recovered = 0.0;
        let mut pow = 1.0;
        for w in &weights {
            recovered += w * pow;
            pow *= erased_other;
        }
        let base = match recursion {
            Recursion::Standard => 1.0 - recovered,
            Recursion::Literal => recovered,
        }
        .clamp(0.0, 1.0);
        let mut next = 0.0;
        let mut pow = 1.0;
        for &l in lam.iter().skip(1) {
            next += l * pow;
            pow *= base;
        }
        let next = next.clamp(0.0, 1.0);
        iterations += 1;
        if next > q + 1e-12 {
            monotone = false;
        }
        let delta = (next - q).abs();
        q = next;
        trace.push(q);
        if delta < tol {
            converged = true;
            break;
        }
    }
    if recursion == Recursion::Standard {
        debug_assert!(monotone, "q_i increased: {:?}", &trace[..trace.len().min(10)]);
    }
    AotResult {
        p_d: 1.0 - q,
        q_trace: trace,
        converged,
        iterations,
        monotone,
    }
}

/// Convenience: Poisson specs, edge perspectives and iteration with defaults.
pub fn evaluate_poisson(alpha: f64, beta: f64, pi: &PiTable) -> Result<(AotResult, f64)> {
    let (big_psi, big_lambda) = make_poisson_specs(alpha, beta, Truncation::Auto)?;
    let psi = edge_perspective(&big_psi)?;
    let lambda = edge_perspective(&big_lambda)?;
    let res = aot_iterate(&psi, &lambda, pi, DEFAULT_TOL, DEFAULT_MAX_ITER, Recursion::Standard);
    Ok((res, big_lambda.prob(0)))
}

/// Throughput unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Sum rate per channel use, frame-averaged: `|S| R D / (L Delta)`.
    #[default]
    Eq5,
    /// Decoded users per orthogonal resource times `R (L - tau)`,
    /// i.e. `(p_d / alpha) R (L - tau)`. Larger than `Eq5` by `L / tau`.
    Sec4,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::Eq5 => "eq5",
            Normalization::Sec4 => "sec4",
        }
    }

    /// Converts a per-channel-use throughput into this unit.
    pub fn from_eq5(self, gamma: f64, pilots: usize, coherence: usize) -> f64 {
        match self {
            Normalization::Eq5 => gamma,
            Normalization::Sec4 => gamma * coherence as f64 / pilots as f64,
        }
    }
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eq5" => Ok(Normalization::Eq5),
            "sec4" => Ok(Normalization::Sec4),
            _ => Err(Error::Parse(format!("unknown normalization `{s}`"))),
        }
    }
}

/// Expected throughput from the recovered share of all users `p_d`.
pub fn expected_throughput(
    p_d: f64,
    alpha: f64,
    code_rate: f64,
    coherence: usize,
    pilots: usize,
    mode: Normalization,
) -> f64 {
    let data = (coherence - pilots) as f64;
    let sec4 = p_d / alpha * code_rate * data;
    match mode {
        Normalization::Sec4 => sec4,
        Normalization::Eq5 => sec4 * pilots as f64 / coherence as f64,
    }
}
