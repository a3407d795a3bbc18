//! Parameter sweeps, grid optimization, scheme comparison and plot data.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aot::{evaluate_poisson, expected_throughput, Normalization, PiTable};
use crate::baselines::{aloha_optimal_pa, aloha_throughput, singleton_prob, smm_throughput, Scheme};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::pi::{pi_micro, pi_micro_table, CrossPilot, MicroModel, PiEstimate};
use crate::sic::{run_trials, DecoderOptions, SimOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Aot,
    Sim,
    Both,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Aot => "aot",
            Backend::Sim => "sim",
            Backend::Both => "both",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aot" => Ok(Backend::Aot),
            "sim" => Ok(Backend::Sim),
            "both" => Ok(Backend::Both),
            _ => Err(Error::Parse(format!("unknown backend `{s}`"))),
        }
    }
}

/// One evaluated operating point.
///
/// `p_d` is the recovered share of all K users for CPA, and the decoded
/// share of transmitting users for the baselines. `alpha` is empty for the
/// baselines, which have no frame structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputRow {
    pub scheme: Scheme,
    #[serde(rename = "K")]
    pub users: usize,
    #[serde(rename = "M")]
    pub antennas: usize,
    #[serde(rename = "L")]
    pub coherence: usize,
    #[serde(rename = "tau")]
    pub pilots: usize,
    #[serde(rename = "sigma2")]
    pub noise_var: f64,
    pub alpha: Option<f64>,
    pub beta: f64,
    #[serde(rename = "R")]
    pub code_rate: f64,
    pub p_d: f64,
    pub gamma: f64,
    pub gamma_stderr: f64,
    pub backend: Backend,
    pub normalization: Normalization,
    pub trials: usize,
    pub seed: u64,
}

pub type ThroughputReport = Vec<ThroughputRow>;

pub const REPORT_HEADER: [&str; 16] = [
    "scheme",
    "K",
    "M",
    "L",
    "tau",
    "sigma2",
    "alpha",
    "beta",
    "R",
    "p_d",
    "gamma",
    "gamma_stderr",
    "backend",
    "normalization",
    "trials",
    "seed",
];

/// Interference included in micro-mode pi tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PiModel {
    /// Node members only, fresh cancellation values.
    Isolated,
    /// Adds leakage from users on the other pilots of the slot.
    Loaded,
    /// Leakage plus cancellation values taken from the interferers'
    /// decoding nodes.
    #[default]
    Chained,
}

impl FromStr for PiModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "isolated" => Ok(PiModel::Isolated),
            "loaded" => Ok(PiModel::Loaded),
            "chained" => Ok(PiModel::Chained),
            _ => Err(Error::Parse(format!("unknown pi model `{s}`"))),
        }
    }
}

/// How micro-mode pi tables are produced.
#[derive(Debug, Clone, PartialEq)]
pub struct PiSettings {
    pub trials: usize,
    /// Highest tabulated degree; larger degrees reuse it.
    pub j_max: usize,
    pub model: PiModel,
    pub cache_dir: Option<PathBuf>,
}

impl Default for PiSettings {
    fn default() -> Self {
        Self {
            trials: 10_000,
            j_max: 16,
            model: PiModel::default(),
            cache_dir: None,
        }
    }
}

/// Memory and optional disk cache of pi tables, keyed by everything that
/// enters the estimate.
#[derive(Debug, Default)]
pub struct PiCache {
    settings: PiSettings,
    tables: Mutex<HashMap<String, Arc<PiEstimate>>>,
}

impl PiCache {
    pub fn new(settings: PiSettings) -> Self {
        Self {
            settings,
            tables: Mutex::new(HashMap::new()),
        }
    }

    pub fn settings(&self) -> &PiSettings {
        &self.settings
    }

    /// Micro model of a random-access operating point.
    pub fn model_for(&self, beta: f64, pilots: usize) -> MicroModel {
        match self.settings.model {
            PiModel::Isolated => MicroModel::default(),
            PiModel::Loaded => CrossPilot::random_access(beta, pilots).into(),
            PiModel::Chained => MicroModel::random_access(beta, pilots),
        }
    }

    fn key(&self, cfg: &SystemConfig, model: MicroModel) -> String {
        format!(
            "pi_M{}_tau{}_R{}_b{}_s{}_{}_t{}_seed{}_j{}",
            cfg.antennas,
            cfg.pilots,
            cfg.code_rate,
            cfg.bits_per_symbol,
            cfg.noise_var,
            model.tag(),
            self.settings.trials,
            cfg.seed,
            self.settings.j_max
        )
    }

    /// Micro-mode table for `cfg` under `load`, computed on first use.
    pub fn table(&self, cfg: &SystemConfig, model: impl Into<MicroModel>) -> Result<Arc<PiEstimate>> {
        let model = model.into();
        let key = self.key(cfg, model);
        if let Some(t) = self.tables.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(t));
        }
        let path = self
            .settings
            .cache_dir
            .as_ref()
            .map(|d| d.join(format!("{key}.csv")));
        if let Some(p) = path.as_ref().filter(|p| p.exists()) {
            let file = fs::File::open(p).map_err(|e| Error::io(p, e))?;
            let est = Arc::new(PiEstimate::read_csv(file)?);
            log::info!("pi cache hit: {}", p.display());
            self.tables.lock().expect("cache lock").insert(key, Arc::clone(&est));
            return Ok(est);
        }
        log::debug!("estimating pi table {key}");
        let est = Arc::new(pi_micro_table(cfg, self.settings.j_max, self.settings.trials, model)?);
        if let Some(p) = path {
            let dir = p.parent().expect("cache file has a parent");
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let tmp = p.with_extension(format!("tmp{}", std::process::id()));
            let file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
            est.write_csv(file)?;
            fs::rename(&tmp, &p).map_err(|e| Error::io(&p, e))?;
        }
        self.tables.lock().expect("cache lock").insert(key, Arc::clone(&est));
        Ok(est)
    }
}

/// Evaluates operating points against a fixed base configuration.
#[derive(Debug)]
pub struct Evaluator {
    pub base: SystemConfig,
    pub normalization: Normalization,
    pub sim: SimOptions,
    pub pi: PiCache,
}

impl Evaluator {
    pub fn new(base: SystemConfig, normalization: Normalization, pi: PiSettings) -> Self {
        Self {
            base,
            normalization,
            sim: SimOptions::default(),
            pi: PiCache::new(pi),
        }
    }

    fn system(&self, antennas: usize, coherence: usize, code_rate: f64) -> SystemConfig {
        SystemConfig {
            antennas,
            coherence,
            code_rate,
            ..self.base.clone()
        }
    }

    fn row(&self, cfg: &SystemConfig, scheme: Scheme, backend: Backend) -> ThroughputRow {
        ThroughputRow {
            scheme,
            users: cfg.users,
            antennas: cfg.antennas,
            coherence: cfg.coherence,
            pilots: cfg.pilots,
            noise_var: cfg.noise_var,
            alpha: None,
            beta: 1.0,
            code_rate: cfg.code_rate,
            p_d: 0.0,
            gamma: 0.0,
            gamma_stderr: 0.0,
            backend,
            normalization: self.normalization,
            trials: 0,
            seed: cfg.seed,
        }
    }

    /// pi table for CPA at `(alpha, beta, tau)` on a system with
    /// `(antennas, coherence, code_rate)`.
    pub fn cpa_pi(&self, cfg: &SystemConfig, beta: f64) -> Result<PiTable> {
        self.pi.table(cfg, self.pi.model_for(beta, cfg.pilots))?.to_table()
    }

    /// And-or evaluation at the nominal `(alpha, beta)`.
    pub fn cpa_aot(&self, point: &Point) -> Result<ThroughputRow> {
        let cfg = SystemConfig {
            pilots: point.pilots,
            ..self.system(point.antennas, point.coherence, point.code_rate)
        };
        let pi = self.cpa_pi(&cfg, point.beta)?;
        let (res, _) = evaluate_poisson(point.alpha, point.beta, &pi)?;
        let gamma = expected_throughput(
            res.p_d,
            point.alpha,
            point.code_rate,
            point.coherence,
            point.pilots,
            self.normalization,
        );
        Ok(ThroughputRow {
            alpha: Some(point.alpha),
            beta: point.beta,
            p_d: res.p_d,
            gamma,
            trials: self.pi.settings.trials,
            ..self.row(&cfg, Scheme::Cpa, Backend::Aot)
        })
    }

    /// Frame simulation at the integer frame length nearest to `alpha`.
    pub fn cpa_sim(&self, point: &Point, trials: usize) -> Result<ThroughputRow> {
        let cfg = self
            .system(point.antennas, point.coherence, point.code_rate)
            .with_scheme(point.alpha, point.beta, point.pilots);
        let s = run_trials(&cfg, &self.sim, trials)?;
        let norm = |g: f64| self.normalization.from_eq5(g, cfg.pilots, cfg.coherence);
        Ok(ThroughputRow {
            alpha: Some(point.alpha),
            beta: point.beta,
            p_d: s.recovered_all,
            gamma: norm(s.throughput),
            gamma_stderr: norm(s.throughput_stderr),
            trials,
            ..self.row(&cfg, Scheme::Cpa, Backend::Sim)
        })
    }

    /// Framed ALOHA at `p_a = min(1, tau/K)`. The singleton success
    /// probability includes leakage from the other pilots when the pi
    /// settings are loaded.
    pub fn aloha(&self, antennas: usize, coherence: usize, code_rate: f64, pilots: usize) -> Result<ThroughputRow> {
        let mut cfg = SystemConfig {
            pilots,
            ..self.system(antennas, coherence, code_rate)
        };
        cfg.p_active = aloha_optimal_pa(cfg.users, pilots);
        let beta = cfg.beta();
        let pi_1 = self.pi_1(&cfg, self.pi.model_for(beta, pilots).cross)?;
        let gamma = aloha_throughput(&cfg, pi_1);
        let clean = singleton_prob(cfg.users, pilots, cfg.p_active) * pilots as f64
            / (cfg.users as f64 * cfg.p_active);
        Ok(ThroughputRow {
            beta,
            p_d: clean * pi_1,
            gamma: self.normalization.from_eq5(gamma, pilots, coherence),
            trials: self.pi.settings.trials,
            ..self.row(&cfg, Scheme::Aloha, Backend::Aot)
        })
    }

    /// ALOHA by frame simulation with cancellation disabled.
    pub fn aloha_sim(
        &self,
        antennas: usize,
        coherence: usize,
        code_rate: f64,
        pilots: usize,
        trials: usize,
    ) -> Result<ThroughputRow> {
        let base = self.system(antennas, coherence, code_rate);
        let mut cfg = base.with_scheme(1.0, 1.0, pilots);
        cfg.p_active = aloha_optimal_pa(cfg.users, pilots);
        let opts = SimOptions {
            decoder: DecoderOptions {
                cancellation: false,
                ..self.sim.decoder
            },
            ..self.sim
        };
        let s = run_trials(&cfg, &opts, trials)?;
        let norm = |g: f64| self.normalization.from_eq5(g, pilots, coherence);
        Ok(ThroughputRow {
            beta: cfg.beta(),
            p_d: s.recovered_active,
            gamma: norm(s.throughput),
            gamma_stderr: norm(s.throughput_stderr),
            trials,
            ..self.row(&cfg, Scheme::Aloha, Backend::Sim)
        })
    }

    /// Scheduled operation: every pilot of every slot carries one user and
    /// the other `tau - 1` users of the slot leak through the filter.
    pub fn smm(&self, antennas: usize, coherence: usize, code_rate: f64, pilots: usize) -> Result<ThroughputRow> {
        let cfg = SystemConfig {
            pilots,
            ..self.system(antennas, coherence, code_rate)
        };
        let load = if self.pi.settings.model != PiModel::Isolated && pilots > 1 {
            CrossPilot::Fixed(pilots - 1)
        } else {
            CrossPilot::None
        };
        let pi_1 = self.pi_1(&cfg, load)?;
        Ok(ThroughputRow {
            p_d: pi_1,
            gamma: self
                .normalization
                .from_eq5(smm_throughput(&cfg, pi_1), pilots, coherence),
            trials: self.pi.settings.trials,
            ..self.row(&cfg, Scheme::Smm, Backend::Aot)
        })
    }

    fn pi_1(&self, cfg: &SystemConfig, load: CrossPilot) -> Result<f64> {
        Ok(pi_micro(1, cfg, self.pi.settings.trials, load, 0.0)?.estimate)
    }

    /// Recomputes a row from its recorded parameters.
    pub fn reevaluate(&self, row: &ThroughputRow) -> Result<ThroughputRow> {
        if row.seed != self.base.seed || row.users != self.base.users || row.noise_var != self.base.noise_var {
            return Err(Error::InvalidConfig(
                "row was produced with a different base configuration".into(),
            ));
        }
        match (row.scheme, row.backend) {
            (Scheme::Cpa, backend) => {
                let point = Point {
                    antennas: row.antennas,
                    coherence: row.coherence,
                    code_rate: row.code_rate,
                    pilots: row.pilots,
                    alpha: row
                        .alpha
                        .ok_or_else(|| Error::Parse("CPA row without alpha".into()))?,
                    beta: row.beta,
                };
                match backend {
                    Backend::Sim => self.cpa_sim(&point, row.trials),
                    _ => self.cpa_aot(&point),
                }
            }
            (Scheme::Aloha, Backend::Sim) => {
                self.aloha_sim(row.antennas, row.coherence, row.code_rate, row.pilots, row.trials)
            }
            (Scheme::Aloha, _) => self.aloha(row.antennas, row.coherence, row.code_rate, row.pilots),
            (Scheme::Smm, _) => self.smm(row.antennas, row.coherence, row.code_rate, row.pilots),
        }
    }
}

/// A CPA operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub antennas: usize,
    pub coherence: usize,
    pub code_rate: f64,
    pub pilots: usize,
    pub alpha: f64,
    pub beta: f64,
}

/// Cartesian parameter grid for [`sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub pilots: Vec<usize>,
    pub antennas: Vec<usize>,
    pub rates: Vec<f64>,
    pub backend: Backend,
    /// Frames per point for the simulation backend.
    pub trials: usize,
    pub output: Option<PathBuf>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("alpha", self.alphas.is_empty()),
            ("beta", self.betas.is_empty()),
            ("tau", self.pilots.is_empty()),
            ("M", self.antennas.is_empty()),
            ("R", self.rates.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::InvalidSweep(format!("empty {name} grid")));
        }
        if self.backend != Backend::Aot && self.trials == 0 {
            return Err(Error::InvalidSweep("simulation backend needs trials >= 1".into()));
        }
        Ok(())
    }

    fn points(&self, coherence: usize) -> Vec<Point> {
        let mut out = Vec::new();
        for &antennas in &self.antennas {
            for &code_rate in &self.rates {
                for &pilots in &self.pilots {
                    for &beta in &self.betas {
                        for &alpha in &self.alphas {
                            out.push(Point {
                                antennas,
                                coherence,
                                code_rate,
                                pilots,
                                alpha,
                                beta,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// One row per grid point and backend, in grid order (M, R, tau, beta,
/// alpha; alpha fastest). Written to `spec.output` if set.
pub fn sweep(ev: &Evaluator, spec: &SweepSpec) -> Result<ThroughputReport> {
    spec.validate()?;
    let points = spec.points(ev.base.coherence);
    let rows: Vec<Vec<ThroughputRow>> = points
        .par_iter()
        .map(|p| {
            let mut rows = Vec::with_capacity(2);
            if spec.backend != Backend::Sim {
                rows.push(ev.cpa_aot(p)?);
            }
            if spec.backend != Backend::Aot {
                rows.push(ev.cpa_sim(p, spec.trials)?);
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let report: ThroughputReport = rows.into_iter().flatten().collect();
    if let Some(path) = &spec.output {
        emit_csv(&report, path)?;
    }
    Ok(report)
}

/// Optimization grids.
#[derive(Debug, Clone, PartialEq)]
pub struct Grids {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub pilots: Vec<usize>,
}

/// `start, start + step, ...` up to `stop` inclusive, rounded to kill drift.
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            alphas: linspace_step(0.6, 2.0, 0.05),
            betas: linspace_step(0.25, 4.0, 0.25),
            pilots: vec![2, 4, 8, 16, 32],
        }
    }
}

impl Grids {
    fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.betas.is_empty() || self.pilots.is_empty() {
            return Err(Error::InvalidSweep("optimization grids must be non-empty".into()));
        }
        Ok(())
    }

    fn pilots_below(&self, coherence: usize) -> Vec<usize> {
        self.pilots.iter().copied().filter(|&t| t < coherence).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub alpha: f64,
    pub beta: f64,
    pub pilots: usize,
    pub gamma: f64,
    pub row: ThroughputRow,
}

/// Orders candidates by throughput, preferring smaller alpha, then beta,
/// then tau on ties.
fn better(a: &ThroughputRow, b: &ThroughputRow) -> bool {
    if a.gamma != b.gamma {
        return a.gamma > b.gamma;
    }
    let key = |r: &ThroughputRow| (r.alpha.unwrap_or(0.0), r.beta, r.pilots);
    let (ka, kb) = (key(a), key(b));
    (ka.0, ka.1) < (kb.0, kb.1) || ((ka.0, ka.1) == (kb.0, kb.1) && ka.2 < kb.2)
}

fn best(rows: Vec<ThroughputRow>) -> Result<Optimum> {
    let row = rows
        .into_iter()
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .ok_or_else(|| Error::InvalidSweep("no admissible grid point".into()))?;
    Ok(Optimum {
        alpha: row.alpha.unwrap_or(f64::NAN),
        beta: row.beta,
        pilots: row.pilots,
        gamma: row.gamma,
        row,
    })
}

/// Grid maximizer of the and-or throughput over (alpha, beta, tau).
pub fn optimize(ev: &Evaluator, antennas: usize, code_rate: f64, grids: &Grids) -> Result<Optimum> {
    optimize_with(ev, antennas, code_rate, grids, None)
}

/// Same grid search with frame simulation (`trials` frames per point).
pub fn optimize_sim(
    ev: &Evaluator,
    antennas: usize,
    code_rate: f64,
    grids: &Grids,
    trials: usize,
) -> Result<Optimum> {
    optimize_with(ev, antennas, code_rate, grids, Some(trials))
}

fn optimize_with(
    ev: &Evaluator,
    antennas: usize,
    code_rate: f64,
    grids: &Grids,
    sim_trials: Option<usize>,
) -> Result<Optimum> {
    grids.validate()?;
    let coherence = ev.base.coherence;
    let mut points = Vec::new();
    for pilots in grids.pilots_below(coherence) {
        for &beta in &grids.betas {
            for &alpha in &grids.alphas {
                points.push(Point {
                    antennas,
                    coherence,
                    code_rate,
                    pilots,
                    alpha,
                    beta,
                });
            }
        }
    }
    let rows = points
        .par_iter()
        .map(|p| match sim_trials {
            Some(t) => ev.cpa_sim(p, t),
            None => ev.cpa_aot(p),
        })
        .collect::<Result<Vec<_>>>()?;
    best(rows)
}

/// ALOHA maximized over the tau grid.
pub fn optimize_aloha(ev: &Evaluator, antennas: usize, code_rate: f64, pilots: &[usize]) -> Result<Optimum> {
    let coherence = ev.base.coherence;
    let rows = pilots
        .iter()
        .filter(|&&t| t < coherence)
        .map(|&t| ev.aloha(antennas, coherence, code_rate, t))
        .collect::<Result<Vec<_>>>()?;
    best(rows)
}

/// SMM maximized over the tau grid.
pub fn optimize_smm(ev: &Evaluator, antennas: usize, code_rate: f64, pilots: &[usize]) -> Result<Optimum> {
    let coherence = ev.base.coherence;
    let rows = pilots
        .iter()
        .filter(|&&t| t < coherence)
        .map(|&t| ev.smm(antennas, coherence, code_rate, t))
        .collect::<Result<Vec<_>>>()?;
    best(rows)
}

/// Optimized CPA, ALOHA and SMM rows for every (M, R), in that order.
pub fn compare_schemes(
    ev: &Evaluator,
    antennas: &[usize],
    rates: &[f64],
    grids: &Grids,
) -> Result<ThroughputReport> {
    let mut report = Vec::new();
    for &m in antennas {
        for &r in rates {
            report.push(optimize(ev, m, r, grids)?.row);
            report.push(optimize_aloha(ev, m, r, &grids.pilots)?.row);
            report.push(optimize_smm(ev, m, r, &grids.pilots)?.row);
        }
    }
    Ok(report)
}

pub fn write_report<W: Write>(report: &[ThroughputRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for row in report {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<report>", e))?;
    Ok(())
}

pub fn read_report<R: std::io::Read>(input: R) -> Result<ThroughputReport> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(REPORT_HEADER.iter().copied()) {
        return Err(Error::Parse(format!("unexpected report header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Writes the report as CSV (header only when empty).
pub fn emit_csv(report: &[ThroughputRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_report(report, std::io::BufWriter::new(file))
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<ThroughputReport> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_report(file)
}

/// One plotted value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub x: f64,
    pub series: String,
    pub y: f64,
}

pub fn emit_plotdata(points: &[PlotPoint], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(std::io::BufWriter::new(file));
    w.write_record(["x", "series", "y"])?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Figure recipes. Each returns plot points plus the report rows behind
/// them.
pub mod figures {
    use super::*;

    pub type Figure = (Vec<PlotPoint>, ThroughputReport);

    /// Throughput against alpha, one series per beta.
    pub fn fig5(ev: &Evaluator, antennas: usize, pilots: usize, betas: &[f64], alphas: &[f64]) -> Result<Figure> {
        let spec = SweepSpec {
            alphas: alphas.to_vec(),
            betas: betas.to_vec(),
            pilots: vec![pilots],
            antennas: vec![antennas],
            rates: vec![ev.base.code_rate],
            backend: Backend::Aot,
            trials: 0,
            output: None,
        };
        let report = sweep(ev, &spec)?;
        let points = report
            .iter()
            .map(|r| PlotPoint {
                x: r.alpha.expect("CPA row"),
                series: format!("beta={}", r.beta),
                y: r.gamma,
            })
            .collect();
        Ok((points, report))
    }

    /// Optimal alpha and beta against M at fixed tau; simulated optima
    /// are added when `sim_trials > 0`.
    pub fn fig6(
        ev: &Evaluator,
        antennas: &[usize],
        pilots: usize,
        grids: &Grids,
        sim_trials: usize,
    ) -> Result<Figure> {
        let grids = Grids {
            pilots: vec![pilots],
            ..grids.clone()
        };
        let mut points = Vec::new();
        let mut report = Vec::new();
        for &m in antennas {
            let mut runs = vec![("aot", optimize(ev, m, ev.base.code_rate, &grids)?)];
            if sim_trials > 0 {
                runs.push(("sim", optimize_sim(ev, m, ev.base.code_rate, &grids, sim_trials)?));
            }
            for (tag, opt) in runs {
                points.push(PlotPoint { x: m as f64, series: format!("alpha_{tag}"), y: opt.alpha });
                points.push(PlotPoint { x: m as f64, series: format!("beta_{tag}"), y: opt.beta });
                report.push(opt.row);
            }
        }
        Ok((points, report))
    }

    /// Optimized throughput against M, one series per tau.
    pub fn gamma_vs_m_per_tau(ev: &Evaluator, antennas: &[usize], code_rate: f64, grids: &Grids) -> Result<Figure> {
        let mut points = Vec::new();
        let mut report = Vec::new();
        for &tau in &grids.pilots_below(ev.base.coherence) {
            let g = Grids {
                pilots: vec![tau],
                ..grids.clone()
            };
            for &m in antennas {
                let opt = optimize(ev, m, code_rate, &g)?;
                points.push(PlotPoint {
                    x: m as f64,
                    series: format!("tau={tau}"),
                    y: opt.gamma,
                });
                report.push(opt.row);
            }
        }
        Ok((points, report))
    }

    /// Scheme comparison against M, one series per (scheme, R).
    pub fn fig9(ev: &Evaluator, antennas: &[usize], rates: &[f64], grids: &Grids) -> Result<Figure> {
        let report = compare_schemes(ev, antennas, rates, grids)?;
        let points = report
            .iter()
            .map(|r| PlotPoint {
                x: r.antennas as f64,
                series: format!("{} R={}", r.scheme, r.code_rate),
                y: r.gamma,
            })
            .collect();
        Ok((points, report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn evaluator(trials: usize) -> Evaluator {
        Evaluator::new(
            SystemConfig::default(),
            Normalization::Eq5,
            PiSettings {
                trials,
                j_max: 8,
                ..PiSettings::default()
            },
        )
    }

    fn point(alpha: f64, beta: f64) -> Point {
        Point {
            antennas: 400,
            coherence: 64,
            code_rate: 1.0,
            pilots: 4,
            alpha,
            beta,
        }
    }

    #[test]
    fn single_point_sweep_matches_direct_evaluation() {
        let ev = evaluator(500);
        let spec = SweepSpec {
            alphas: vec![1.1],
            betas: vec![1.0],
            pilots: vec![4],
            antennas: vec![400],
            rates: vec![1.0],
            backend: Backend::Both,
            trials: 3,
            output: None,
        };
        let report = sweep(&ev, &spec).unwrap();
        assert_eq!(report.len(), 2);
        assert_eq!(report[0], ev.cpa_aot(&point(1.1, 1.0)).unwrap());
        assert_eq!(report[1], ev.cpa_sim(&point(1.1, 1.0), 3).unwrap());
        let bad = SweepSpec { betas: vec![], ..spec };
        assert!(matches!(sweep(&ev, &bad), Err(Error::InvalidSweep(_))));
    }

    #[test]
    fn default_grids() {
        let g = Grids::default();
        assert_eq!(g.alphas.len(), 29);
        assert_eq!(g.alphas[0], 0.6);
        assert_eq!(*g.alphas.last().unwrap(), 2.0);
        assert_eq!(g.alphas[9], 1.05);
        assert_eq!(g.betas.len(), 16);
        assert_eq!(g.pilots_below(16), vec![2, 4, 8]);
    }

    #[test]
    fn degenerate_grid_optimum() {
        let ev = evaluator(300);
        let g = Grids {
            alphas: vec![1.3],
            betas: vec![0.75],
            pilots: vec![4],
        };
        let opt = optimize(&ev, 400, 1.0, &g).unwrap();
        assert_eq!((opt.alpha, opt.beta, opt.pilots), (1.3, 0.75, 4));
        assert!(optimize(&ev, 400, 1.0, &Grids { alphas: vec![], ..g }).is_err());
    }

    #[test]
    fn optimum_dominates_grid_and_breaks_ties_low() {
        let ev = evaluator(300);
        let g = Grids {
            alphas: vec![0.8, 1.0, 1.2, 1.4],
            betas: vec![0.5, 1.0, 2.0],
            pilots: vec![4],
        };
        let opt = optimize(&ev, 400, 1.0, &g).unwrap();
        for &a in &g.alphas {
            for &b in &g.betas {
                assert!(ev.cpa_aot(&point(a, b)).unwrap().gamma <= opt.gamma);
            }
        }
        let row = |alpha, beta, pilots| ThroughputRow {
            alpha: Some(alpha),
            beta,
            pilots,
            gamma: 1.0,
            ..opt.row.clone()
        };
        let tied = best(vec![row(1.2, 1.0, 4), row(1.0, 2.0, 8), row(1.0, 2.0, 4), row(1.0, 3.0, 2)]).unwrap();
        assert_eq!((tied.alpha, tied.beta, tied.pilots), (1.0, 2.0, 4));
    }

    #[test]
    fn report_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        emit_csv(&[], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), REPORT_HEADER.join(",") + "\n");
        assert!(load_csv(&path).unwrap().is_empty());

        let ev = evaluator(300);
        let mut report = vec![ev.cpa_aot(&point(1.1, 1.0)).unwrap(), ev.cpa_sim(&point(1.1, 1.0), 2).unwrap()];
        report.push(ev.aloha(400, 64, 1.0, 4).unwrap());
        report.push(ev.smm(400, 64, 0.5, 4).unwrap());
        let path = dir.path().join("r.csv");
        emit_csv(&report, &path).unwrap();
        assert_eq!(load_csv(&path).unwrap(), report);
        for row in &report {
            assert_eq!(&ev.reevaluate(row).unwrap(), row);
        }
    }

    #[test]
    fn pi_cache_persists() {
        let dir = tempfile::tempdir().unwrap();
        let settings = PiSettings {
            trials: 200,
            j_max: 4,
            model: PiModel::Loaded,
            cache_dir: Some(dir.path().to_path_buf()),
        };
        let cfg = SystemConfig::default();
        let first = PiCache::new(settings.clone());
        let a = first.table(&cfg, CrossPilot::Poisson(3.0)).unwrap();
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        let second = PiCache::new(settings);
        let b = second.table(&cfg, CrossPilot::Poisson(3.0)).unwrap();
        assert_eq!(a, b);
        let other = second.table(&cfg, CrossPilot::None).unwrap();
        assert_eq!(other.entries.len(), 4);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
    }

    #[test]
    fn fig5_has_one_series_per_beta() {
        let ev = evaluator(200);
        let (points, report) = figures::fig5(&ev, 400, 4, &[0.5, 1.0, 1.5], &[0.8, 1.2]).unwrap();
        assert_eq!(report.len(), 6);
        let mut series: Vec<_> = points.iter().map(|p| p.series.clone()).collect();
        series.dedup();
        assert_eq!(series, ["beta=0.5", "beta=1", "beta=1.5"]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fig5.csv");
        emit_plotdata(&points, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,series,y\n0.8,beta=0.5,"));
    }

    #[test]
    fn scheme_ordering_small() {
        let ev = evaluator(2_000);
        let g = Grids {
            alphas: linspace_step(0.8, 1.6, 0.2),
            betas: vec![0.5, 1.0, 1.5],
            pilots: vec![4, 8],
        };
        let rows = compare_schemes(&ev, &[200], &[1.0], &g).unwrap();
        let gamma = |s: Scheme| rows.iter().find(|r| r.scheme == s).unwrap().gamma;
        assert!(gamma(Scheme::Smm) >= gamma(Scheme::Cpa));
        assert!(gamma(Scheme::Cpa) >= gamma(Scheme::Aloha));
    }
}
