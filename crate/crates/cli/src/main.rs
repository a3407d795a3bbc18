use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cpa::aot::{aot_iterate, edge_perspective, make_poisson_specs, DegreeZero, Normalization, PiTable, Recursion, Truncation};
use cpa::bench::{
    self, figures, linspace_step, Backend, Evaluator, Grids, PiModel, PiSettings, PlotPoint, SweepSpec,
    ThroughputRow,
};
use cpa::phy::ChannelModel;
use cpa::pi::{pi_frame, pi_micro_table, CrossPilot, MicroModel, PiEstimate};
use cpa::sic::{run_trial, summarize, write_trace, DecoderOptions, SignalMode, SimOptions, TRACE_HEADER};
use cpa::SystemConfig;

/// Coded pilot access for crowded massive MIMO: simulation, analysis and
/// parameter studies.
#[derive(Parser, Debug)]
#[command(name = "cpa", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Frames per simulated operating point.
    #[arg(long, global = true, default_value_t = 100)]
    trials: usize,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Norm::Eq5)]
    normalization: Norm,
    /// TOML file with system parameters.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set antennas=256`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Monte Carlo draws per degree for pi tables.
    #[arg(long, global = true, default_value_t = 10_000)]
    pi_trials: usize,
    #[arg(long, global = true, value_enum, default_value_t = PiKind::Chained)]
    pi_model: PiKind,
    /// Directory for cached pi tables.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Norm {
    Eq5,
    Sec4,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PiKind {
    Isolated,
    Loaded,
    Chained,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PiSource {
    Micro,
    Frame,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    Aot,
    Sim,
    Both,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate frames and report throughput.
    Simulate {
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Ideal orthogonal channels without noise.
        #[arg(long)]
        validation: bool,
        /// Disable cancellation (framed ALOHA receiver).
        #[arg(long)]
        no_sic: bool,
        #[arg(long, value_enum, default_value_t = SignalArg::Gram)]
        signal: SignalArg,
        /// Per-node decoding trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// And-or tree evaluation of one operating point.
    Analyze {
        #[command(flatten)]
        scheme: SchemeArgs,
        /// pi table CSV (degree, probability, ...); default is micro mode.
        #[arg(long)]
        pi_table: Option<PathBuf>,
        /// Use pi = 1 for every degree.
        #[arg(long)]
        ideal: bool,
        #[arg(long, value_enum, default_value_t = RecursionArg::Standard)]
        recursion: RecursionArg,
        /// Print the q_i trace.
        #[arg(long)]
        q_trace: bool,
    },
    /// Estimate pi_j.
    Pi {
        #[arg(long, value_enum, default_value_t = PiSource::Micro)]
        mode: PiSource,
        #[arg(long, default_value_t = 16)]
        j_max: usize,
        /// Scheme parameters (frame mode and loaded micro models).
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parameter sweep over a grid.
    Sweep {
        #[command(flatten)]
        grid: GridArgs,
        /// Antenna counts, comma separated.
        #[arg(long, default_value = "400")]
        antennas: String,
        /// Code rates, comma separated.
        #[arg(long, default_value = "1")]
        rates: String,
        #[arg(long, value_enum, default_value_t = BackendArg::Aot)]
        backend: BackendArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid search for (alpha, beta, tau) maximizing throughput.
    Optimize {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = BackendArg::Aot)]
        backend: BackendArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CPA against ALOHA and SMM at optimized parameters.
    Compare {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "100,200,400,1024")]
        antennas: String,
        #[arg(long, default_value = "0.5,1")]
        rates: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plot data: 5 gamma vs alpha, 6 optimal (alpha, beta) vs M, 7 and 8
    /// gamma vs M per tau at R=1 and R=0.5, 9 scheme comparison.
    Fig {
        #[arg(value_parser = clap::value_parser!(u8).range(5..=9))]
        number: u8,
        #[command(flatten)]
        grid: GridArgs,
        /// Antenna counts for the M axis.
        #[arg(long)]
        antennas: Option<String>,
        /// Frames per point for the simulated optima of plot 6 (0 skips).
        #[arg(long, default_value_t = 0)]
        sim_trials: usize,
        /// Plot data (x, series, y).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report rows behind the plot.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct SchemeArgs {
    /// Overhead factor; with --beta and --pilots, derives frame length and p_a.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    pilots: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    /// Either `start:stop:step` or a comma-separated list.
    #[arg(long, default_value = "0.6:2.0:0.05")]
    alphas: String,
    #[arg(long, default_value = "0.25:4.0:0.25")]
    betas: String,
    #[arg(long, default_value = "2,4,8,16,32")]
    pilots: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SignalArg {
    Full,
    Virtual,
    Gram,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RecursionArg {
    Standard,
    Literal,
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<T>().map_err(|e| anyhow::anyhow!("bad list entry `{t}`: {e}")))
        .collect()
}

fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step): (f64, f64, f64) = (a.parse()?, b.parse()?, step.parse()?);
            if step <= 0.0 || b < a {
                bail!("range `{s}` needs start <= stop and a positive step");
            }
            Ok(linspace_step(a, b, step))
        }
        _ => parse_list(s),
    }
}

impl GridArgs {
    fn grids(&self) -> Result<Grids> {
        Ok(Grids {
            alphas: parse_range(&self.alphas)?,
            betas: parse_range(&self.betas)?,
            pilots: parse_list(&self.pilots)?,
        })
    }
}

impl Global {
    fn system(&self) -> Result<SystemConfig> {
        let mut cfg = match &self.config {
            Some(path) => SystemConfig::from_file(path)?,
            None => SystemConfig::default(),
        };
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("override `{kv}` is not KEY=VALUE"))?;
            cfg.set_key(k.trim(), v.trim())?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn normalization(&self) -> Normalization {
        match self.normalization {
            Norm::Eq5 => Normalization::Eq5,
            Norm::Sec4 => Normalization::Sec4,
        }
    }

    fn evaluator(&self, cfg: SystemConfig) -> Evaluator {
        let model = match self.pi_model {
            PiKind::Isolated => PiModel::Isolated,
            PiKind::Loaded => PiModel::Loaded,
            PiKind::Chained => PiModel::Chained,
        };
        Evaluator::new(
            cfg,
            self.normalization(),
            PiSettings {
                trials: self.pi_trials,
                model,
                cache_dir: self.cache_dir.clone(),
                ..PiSettings::default()
            },
        )
    }
}

fn apply_scheme(cfg: &SystemConfig, s: &SchemeArgs) -> SystemConfig {
    let pilots = s.pilots.unwrap_or(cfg.pilots);
    match (s.alpha, s.beta) {
        (None, None) if pilots == cfg.pilots => cfg.clone(),
        (a, b) => cfg.with_scheme(a.unwrap_or(cfg.alpha()), b.unwrap_or(cfg.beta()), pilots),
    }
}

fn write_rows(rows: &[ThroughputRow], out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => bench::emit_csv(rows, p)?,
        None => bench::write_report(rows, io::stdout().lock())?,
    }
    Ok(())
}

fn simulate(
    g: &Global,
    cfg: SystemConfig,
    validation: bool,
    no_sic: bool,
    signal: SignalArg,
    trace: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let cfg = if validation {
        SystemConfig { noise_var: 0.0, ..cfg }
    } else {
        cfg
    };
    let opts = SimOptions {
        signal: match signal {
            SignalArg::Full => SignalMode::Full,
            SignalArg::Virtual => SignalMode::Virtual,
            SignalArg::Gram => SignalMode::Gram,
        },
        channel: if validation { ChannelModel::Ideal } else { ChannelModel::Rayleigh },
        decoder: DecoderOptions {
            cancellation: !no_sic,
            ..DecoderOptions::default()
        },
    };
    let results = {
        use rayon::prelude::*;
        (0..g.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(&cfg, &opts, t))
            .collect::<cpa::Result<Vec<_>>>()?
    };
    if let Some(path) = trace {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(TRACE_HEADER)?;
        for (t, r) in results.iter().enumerate() {
            write_trace(&mut w, t as u64, r)?;
        }
        w.flush()?;
    }
    let s = summarize(&results);
    let norm = g.normalization();
    let scale = |x: f64| norm.from_eq5(x, cfg.pilots, cfg.coherence);
    let row = ThroughputRow {
        scheme: if no_sic { cpa::baselines::Scheme::Aloha } else { cpa::baselines::Scheme::Cpa },
        users: cfg.users,
        antennas: cfg.antennas,
        coherence: cfg.coherence,
        pilots: cfg.pilots,
        noise_var: cfg.noise_var,
        alpha: Some(cfg.alpha()),
        beta: cfg.beta(),
        code_rate: cfg.code_rate,
        p_d: s.recovered_all,
        gamma: scale(s.throughput),
        gamma_stderr: scale(s.throughput_stderr),
        backend: Backend::Sim,
        normalization: norm,
        trials: g.trials,
        seed: cfg.seed,
    };
    log::info!(
        "decoded {} of {} active users ({:.4})",
        s.decoded_users,
        s.active_users,
        s.recovered_active
    );
    write_rows(&[row], out)
}

fn analyze(g: &Global, cfg: SystemConfig, pi_table: Option<&Path>, ideal: bool, recursion: RecursionArg, q_trace: bool) -> Result<()> {
    let (alpha, beta) = (cfg.alpha(), cfg.beta());
    let pi = if ideal {
        PiTable::ideal()
    } else if let Some(p) = pi_table {
        PiTable::read_csv(fs::File::open(p).with_context(|| format!("opening {}", p.display()))?)?
    } else {
        g.evaluator(cfg.clone()).cpa_pi(&cfg, beta)?
    };
    let (big_psi, big_lambda) = make_poisson_specs(alpha, beta, Truncation::Auto)?;
    let recursion = match recursion {
        RecursionArg::Standard => Recursion::Standard,
        RecursionArg::Literal => Recursion::Literal,
    };
    let res = aot_iterate(
        &edge_perspective(&big_psi)?,
        &edge_perspective(&big_lambda)?,
        &pi,
        cpa::aot::DEFAULT_TOL,
        cpa::aot::DEFAULT_MAX_ITER,
        recursion,
    );
    let gamma = cpa::aot::expected_throughput(res.p_d, alpha, cfg.code_rate, cfg.coherence, cfg.pilots, g.normalization());
    let mut out = io::stdout().lock();
    writeln!(out, "alpha={alpha} beta={beta} tau={}", cfg.pilots)?;
    writeln!(
        out,
        "p_d={:.6} p_d_active={:.6} gamma={:.6} ({}) iterations={} converged={}",
        res.p_d,
        res.recovery(DegreeZero::Exclude, big_lambda.prob(0)),
        gamma,
        g.normalization().as_str(),
        res.iterations,
        res.converged
    )?;
    if q_trace {
        for (i, q) in res.q_trace.iter().enumerate() {
            writeln!(out, "q[{i}]={q:.12}")?;
        }
    }
    Ok(())
}

fn pi(g: &Global, cfg: SystemConfig, mode: PiSource, j_max: usize, out: Option<&Path>) -> Result<()> {
    let est: PiEstimate = match mode {
        PiSource::Micro => {
            let model = match g.pi_model {
                PiKind::Isolated => MicroModel::default(),
                PiKind::Loaded => CrossPilot::random_access(cfg.beta(), cfg.pilots).into(),
                PiKind::Chained => MicroModel::random_access(cfg.beta(), cfg.pilots),
            };
            pi_micro_table(&cfg, j_max, g.pi_trials, model)?
        }
        PiSource::Frame => pi_frame(&cfg, &SimOptions::default(), g.trials)?,
    };
    match out {
        Some(p) => est.write_csv(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)?,
        None => est.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn backend(b: BackendArg) -> Backend {
    match b {
        BackendArg::Aot => Backend::Aot,
        BackendArg::Sim => Backend::Sim,
        BackendArg::Both => Backend::Both,
    }
}

fn write_plot(points: &[PlotPoint], out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => bench::emit_plotdata(points, p)?,
        None => {
            let mut w = io::stdout().lock();
            writeln!(w, "x,series,y")?;
            for p in points {
                writeln!(w, "{},{},{}", p.x, p.series, p.y)?;
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn fig(
    g: &Global,
    cfg: SystemConfig,
    number: u8,
    grids: Grids,
    antennas: Option<&str>,
    sim_trials: usize,
    out: Option<&Path>,
    report: Option<&Path>,
) -> Result<()> {
    let ms = |default: &[usize]| -> Result<Vec<usize>> {
        match antennas {
            Some(s) => parse_list(s),
            None => Ok(default.to_vec()),
        }
    };
    let (points, rows) = match number {
        5 => {
            let cfg = SystemConfig { coherence: 64, code_rate: 1.0, ..cfg };
            let ev = g.evaluator(cfg);
            figures::fig5(&ev, ms(&[400])?[0], 4, &[0.5, 1.0, 1.5], &grids.alphas)?
        }
        6 => {
            let cfg = SystemConfig { coherence: 64, code_rate: 1.0, ..cfg };
            let ev = g.evaluator(cfg);
            figures::fig6(&ev, &ms(&[25, 50, 100, 200, 400, 700, 1024])?, 4, &grids, sim_trials)?
        }
        7 | 8 => {
            let rate = if number == 7 { 1.0 } else { 0.5 };
            let cfg = SystemConfig { coherence: 512, ..cfg };
            let ev = g.evaluator(cfg);
            figures::gamma_vs_m_per_tau(&ev, &ms(&[50, 100, 200, 400, 700, 1024])?, rate, &grids)?
        }
        9 => {
            let cfg = SystemConfig { coherence: 512, ..cfg };
            let ev = g.evaluator(cfg);
            figures::fig9(&ev, &ms(&[50, 100, 200, 400, 700, 1024])?, &[0.5, 1.0], &grids)?
        }
        _ => bail!("no recipe for figure {number}"),
    };
    if let Some(p) = report {
        bench::emit_csv(&rows, p)?;
    }
    write_plot(&points, out)
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let cfg = g.system()?;
    match cli.command {
        Command::Simulate {
            scheme,
            validation,
            no_sic,
            signal,
            trace,
            out,
        } => simulate(g, apply_scheme(&cfg, &scheme), validation, no_sic, signal, trace.as_deref(), out.as_deref()),
        Command::Analyze {
            scheme,
            pi_table,
            ideal,
            recursion,
            q_trace,
        } => analyze(g, apply_scheme(&cfg, &scheme), pi_table.as_deref(), ideal, recursion, q_trace),
        Command::Pi { mode, j_max, scheme, out } => pi(g, apply_scheme(&cfg, &scheme), mode, j_max, out.as_deref()),
        Command::Sweep {
            grid,
            antennas,
            rates,
            backend: b,
            out,
        } => {
            let grids = grid.grids()?;
            let spec = SweepSpec {
                alphas: grids.alphas,
                betas: grids.betas,
                pilots: grids.pilots,
                antennas: parse_list(&antennas)?,
                rates: parse_list(&rates)?,
                backend: backend(b),
                trials: g.trials,
                output: None,
            };
            let rows = bench::sweep(&g.evaluator(cfg), &spec)?;
            write_rows(&rows, out.as_deref())
        }
        Command::Optimize { grid, backend: b, out } => {
            let grids = grid.grids()?;
            let ev = g.evaluator(cfg.clone());
            let mut rows = Vec::new();
            if !matches!(b, BackendArg::Sim) {
                rows.push(bench::optimize(&ev, cfg.antennas, cfg.code_rate, &grids)?.row);
            }
            if !matches!(b, BackendArg::Aot) {
                rows.push(bench::optimize_sim(&ev, cfg.antennas, cfg.code_rate, &grids, g.trials)?.row);
            }
            write_rows(&rows, out.as_deref())
        }
        Command::Compare {
            grid,
            antennas,
            rates,
            out,
        } => {
            let rows = bench::compare_schemes(
                &g.evaluator(cfg),
                &parse_list(&antennas)?,
                &parse_list(&rates)?,
                &grid.grids()?,
            )?;
            write_rows(&rows, out.as_deref())
        }
        Command::Fig {
            number,
            grid,
            antennas,
            sim_trials,
            out,
            report,
        } => fig(g, cfg, number, grid.grids()?, antennas.as_deref(), sim_trials, out.as_deref(), report.as_deref()),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list::<usize>("2,4, 8").unwrap(), vec![2, 4, 8]);
        assert_eq!(parse_range("0.5:1.0:0.25").unwrap(), vec![0.5, 0.75, 1.0]);
        assert_eq!(parse_range("1.5").unwrap(), vec![1.5]);
        assert!(parse_range("1:0:0.1").is_err());
        assert!(parse_list::<usize>("a,b").is_err());
    }

    #[test]
    fn cli_parses() {
        let cli = Cli::try_parse_from(["cpa", "--seed", "7", "--set", "antennas=64", "fig", "5"]).unwrap();
        assert_eq!(cli.global.seed, Some(7));
        assert!(matches!(cli.command, Command::Fig { number: 5, .. }));
        assert!(Cli::try_parse_from(["cpa", "fig", "4"]).is_err());
        let cfg = cli.global.system().unwrap();
        assert_eq!((cfg.antennas, cfg.seed), (64, 7));
    }
}
