//! Iterative successive interference cancellation over the bipartite graph
//! of factor nodes (slot, pilot) and user messages.

use std::io::Write;

use rayon::prelude::*;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::phy::{
    draw_data_noise, draw_messages, draw_pilot_noise, draw_slot_channels, frame_powers,
    make_pilots, synth_slot, ChannelModel, SlotChannels, C64,
};
use crate::receiver::{
    node_sinr, nodes_from_channels, nodes_from_gram, nodes_from_signals, CancellationLedger,
    FactorNode, GramSlot,
};
use crate::rng::{purpose, substream};
use crate::schedule::{draw_schedule, PilotSchedule};

/// How the received statistics of a slot are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignalMode {
    /// Received matrices Y^pu, Y^u are formed and filtered explicitly.
    Full,
    /// Channel vectors and pilot noise are drawn, the received matrices are
    /// skipped. Same draws as `Full`, so results agree up to rounding.
    Virtual,
    /// Inner products are drawn from their joint law; cost is independent
    /// of the antenna count.
    #[default]
    Gram,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderOptions {
    /// Cancel decoded users from their other replicas. Off gives the
    /// singleton-only (ALOHA-style) receiver.
    pub cancellation: bool,
    /// Let nodes of residual degree >= 2 try their strongest member.
    pub capture: bool,
    /// Extra SINR margin on top of the capacity threshold, in dB.
    pub margin_db: f64,
}

impl Default for DecoderOptions {
    fn default() -> Self {
        Self {
            cancellation: true,
            capture: false,
            margin_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimOptions {
    pub signal: SignalMode,
    pub channel: ChannelModel,
    pub decoder: DecoderOptions,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeEvent {
    pub user: usize,
    pub node: usize,
    /// Power value subtracted at the user's other replicas.
    pub ghat: f64,
    pub iteration: usize,
    pub sinr: f64,
}

/// Factor nodes of a frame plus the decoder state.
#[derive(Debug, Clone)]
pub struct DecodingGraph {
    pub users: usize,
    pub pilots: usize,
    pub frame_len: usize,
    /// Node of (slot n, pilot j) is at `n * pilots + j`.
    pub nodes: Vec<FactorNode>,
    /// Node indices containing each user.
    pub appearances: Vec<Vec<usize>>,
    /// User messages, only available in full signal mode.
    pub messages: Option<Vec<Option<Vec<C64>>>>,
    pub ledger: CancellationLedger,
    pub events: Vec<DecodeEvent>,
    decoded_at: Vec<Option<usize>>,
    /// Member left when the node first reached residual degree one.
    last_member: Vec<Option<usize>>,
}

impl DecodingGraph {
    pub fn new(
        users: usize,
        pilots: usize,
        frame_len: usize,
        nodes: Vec<FactorNode>,
        messages: Option<Vec<Option<Vec<C64>>>>,
    ) -> Result<Self> {
        if nodes.len() != pilots * frame_len {
            return Err(Error::Dimension(format!(
                "{} nodes for {frame_len} slots of {pilots} pilots",
                nodes.len()
            )));
        }
        let mut appearances = vec![Vec::new(); users];
        for (i, node) in nodes.iter().enumerate() {
            if node.slot * pilots + node.pilot != i {
                return Err(Error::Dimension(format!("node {i} out of order")));
            }
            for &u in &node.members {
                appearances
                    .get_mut(u)
                    .ok_or_else(|| Error::Dimension(format!("user {u} >= {users}")))?
                    .push(i);
            }
        }
        let last_member = nodes
            .iter()
            .map(|n| (n.members.len() == 1).then(|| n.members[0]))
            .collect();
        Ok(Self {
            users,
            pilots,
            frame_len,
            nodes,
            appearances,
            messages,
            ledger: CancellationLedger::new(users),
            events: Vec::new(),
            decoded_at: vec![None; users],
            last_member,
        })
    }

    pub fn is_decoded(&self, user: usize) -> bool {
        self.decoded_at[user].is_some()
    }

    pub fn active_users(&self) -> usize {
        self.appearances.iter().filter(|a| !a.is_empty()).count()
    }

    /// Sum of residual degrees over all nodes.
    pub fn residual_edges(&self) -> usize {
        self.nodes.iter().map(FactorNode::residual_degree).sum()
    }

    fn decode(&mut self, node_idx: usize, user: usize, sinr: f64, iteration: usize) {
        let ghat = self.nodes[node_idx].power_sum;
        self.ledger.record(user, ghat);
        self.decoded_at[user] = Some(self.events.len());
        self.events.push(DecodeEvent {
            user,
            node: node_idx,
            ghat,
            iteration,
            sinr,
        });
        let message = self
            .messages
            .as_ref()
            .and_then(|m| m[user].as_ref())
            .cloned();
        for &other in &self.appearances[user] {
            let node = &mut self.nodes[other];
            if other == node_idx {
                node.residual.retain(|&u| u != user);
            } else {
                node.cancel(user, ghat, message.as_deref());
                if node.residual.len() == 1 && self.last_member[other].is_none() {
                    self.last_member[other] = Some(node.residual[0]);
                }
            }
        }
    }
}

/// Whether the target's SINR meets the rate threshold
/// `log2(1 + sinr) >= b R` (plus margin).
pub fn decodable(
    node: &FactorNode,
    target: usize,
    ledger: &CancellationLedger,
    cfg: &SystemConfig,
    margin_db: f64,
) -> Result<bool> {
    Ok(node_sinr(node, target, ledger)? >= cfg.sinr_threshold(margin_db))
}

/// Per-node outcome of a decoding run.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTrace {
    pub slot: usize,
    pub pilot: usize,
    pub original_degree: usize,
    pub decoded_user: Option<usize>,
    pub iteration: Option<usize>,
    /// SINR of the decoded user, or of the last remaining member when the
    /// node reached degree one without decoding here.
    pub sinr_db: Option<f64>,
    pub reduced_to_one: bool,
    /// Whether the last remaining member met the threshold at this node.
    pub last_member_passed: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodingResult {
    /// Users decoded at a node of slot n, the set S_n.
    pub decoded_per_slot: Vec<Vec<usize>>,
    /// Number of cancellation waves that made progress.
    pub iterations: usize,
    pub trace: Vec<NodeTrace>,
    /// Users active in at least one slot.
    pub active_users: usize,
    /// Distinct users decoded.
    pub decoded_users: usize,
    pub users: usize,
    /// Per-slot sum rate `|S_n| R D / L`.
    pub throughput_per_slot: Vec<f64>,
    /// Frame average of `throughput_per_slot`.
    pub throughput: f64,
}

impl DecodingResult {
    pub fn decode_events(&self) -> usize {
        self.decoded_per_slot.iter().map(Vec::len).sum()
    }

    /// Decoded share of users active at least once (0 when none were).
    pub fn recovered_active(&self) -> f64 {
        if self.active_users == 0 {
            0.0
        } else {
            self.decoded_users as f64 / self.active_users as f64
        }
    }

    /// Decoded share of all users.
    pub fn recovered_all(&self) -> f64 {
        self.decoded_users as f64 / self.users as f64
    }
}

/// Runs SIC to its fixed point.
///
/// Each wave scans nodes in slot-then-pilot order and collects every node of
/// residual degree one whose member passes the threshold; the collected
/// users are then decoded in order. Decoding user k at node i sets
/// `ghat_k = g_i` (current residual power sum) and subtracts `ghat_k x_k`
/// and `ghat_k` at every other node holding k. Stops when a wave decodes
/// nothing.
pub fn sic_decode(
    graph: &mut DecodingGraph,
    cfg: &SystemConfig,
    opts: &DecoderOptions,
) -> Result<DecodingResult> {
    let threshold = cfg.sinr_threshold(opts.margin_db);
    let mut iterations = 0;
    let mut per_slot_events: Vec<Vec<usize>> = vec![Vec::new(); graph.frame_len];
    let mut decoded_here: Vec<Option<(usize, usize, f64)>> = vec![None; graph.nodes.len()];

    loop {
        let mut wave = Vec::new();
        for (i, node) in graph.nodes.iter().enumerate() {
            let target = match node.residual.len() {
                0 => continue,
                1 => node.residual[0],
                _ if opts.capture => strongest(node),
                _ => continue,
            };
            if opts.cancellation && graph.is_decoded(target) {
                continue;
            }
            let sinr = node_sinr(node, target, &graph.ledger)?;
            if sinr >= threshold {
                wave.push((i, target, sinr));
            }
        }
        if wave.is_empty() {
            break;
        }
        iterations += 1;
        for (i, target, sinr) in wave {
            if !opts.cancellation {
                decoded_here[i] = Some((target, iterations, sinr));
                per_slot_events[graph.nodes[i].slot].push(target);
                graph.decoded_at[target].get_or_insert(i);
                continue;
            }
            if graph.is_decoded(target) || !graph.nodes[i].residual.contains(&target) {
                continue;
            }
            decoded_here[i] = Some((target, iterations, sinr));
            per_slot_events[graph.nodes[i].slot].push(target);
            graph.decode(i, target, sinr, iterations);
        }
        if !opts.cancellation {
            break;
        }
    }

    let mut trace = Vec::with_capacity(graph.nodes.len());
    for (i, node) in graph.nodes.iter().enumerate() {
        let last = graph.last_member[i];
        let last_sinr = match last {
            Some(u) => Some(node_sinr(node, u, &graph.ledger)?),
            None => None,
        };
        let (decoded_user, iteration, sinr) = match decoded_here[i] {
            Some((u, it, s)) => (Some(u), Some(it), Some(s)),
            None => (None, None, last_sinr),
        };
        trace.push(NodeTrace {
            slot: node.slot,
            pilot: node.pilot,
            original_degree: node.degree(),
            decoded_user,
            iteration,
            sinr_db: sinr.map(|s| 10.0 * s.log10()),
            reduced_to_one: last.is_some(),
            last_member_passed: last_sinr.map(|s| s >= threshold),
        });
    }

    let rate = cfg.code_rate * cfg.data_len() as f64 / cfg.coherence as f64;
    let throughput_per_slot: Vec<f64> = per_slot_events
        .iter()
        .map(|s| s.len() as f64 * rate)
        .collect();
    let throughput = throughput_per_slot.iter().sum::<f64>() / graph.frame_len as f64;
    let decoded_users = graph.decoded_at.iter().filter(|d| d.is_some()).count();
    Ok(DecodingResult {
        decoded_per_slot: per_slot_events,
        iterations,
        trace,
        active_users: graph.active_users(),
        decoded_users,
        users: graph.users,
        throughput_per_slot,
        throughput,
    })
}

fn strongest(node: &FactorNode) -> usize {
    node.residual
        .iter()
        .copied()
        .max_by(|&a, &b| {
            let pa = node.coeff(a).map_or(0.0, |c| c.norm_sqr());
            let pb = node.coeff(b).map_or(0.0, |c| c.norm_sqr());
            pa.total_cmp(&pb)
        })
        .expect("non-empty residual")
}

/// Builds the factor nodes of a frame for the chosen signal mode.
pub fn build_graph(
    cfg: &SystemConfig,
    schedule: &PilotSchedule,
    opts: &SimOptions,
    trial: u64,
) -> Result<DecodingGraph> {
    let seed = cfg.seed;
    let pilots = make_pilots(cfg.pilots);
    let powers = (opts.channel == ChannelModel::Ideal).then(|| frame_powers(cfg, seed, trial));
    let messages = (opts.signal == SignalMode::Full).then(|| draw_messages(cfg, schedule, seed, trial));
    let mut nodes = Vec::with_capacity(cfg.pilots * cfg.frame_len);
    for n in 0..schedule.frame_len() {
        let slot_nodes = match opts.signal {
            SignalMode::Full | SignalMode::Virtual => {
                let users: Vec<usize> = schedule.slot(n).iter().map(|a| a.user).collect();
                let h = draw_slot_channels(cfg, &users, opts.channel, powers.as_deref(), seed, trial, n)?;
                let channels = SlotChannels { users, h };
                let pilot_noise = draw_pilot_noise(cfg, seed, trial, n);
                if opts.signal == SignalMode::Full {
                    let signals = synth_slot(
                        schedule,
                        n,
                        &channels,
                        messages.as_ref().expect("full mode draws messages"),
                        &pilots,
                        pilot_noise,
                        draw_data_noise(cfg, seed, trial, n),
                    )?;
                    nodes_from_signals(schedule, n, &signals, &channels, &pilots, cfg.noise_var)?
                } else {
                    nodes_from_channels(schedule, n, &channels, &pilot_noise, &pilots, cfg.noise_var)?
                }
            }
            SignalMode::Gram => {
                let mut rng = substream(seed, &[trial, purpose::CHANNEL, n as u64]);
                let params = GramSlot {
                    antennas: cfg.antennas,
                    pilots: cfg.pilots,
                    noise_var: cfg.noise_var,
                    model: opts.channel,
                    powers: powers.as_deref(),
                };
                nodes_from_gram(schedule, n, &params, &mut rng)?
            }
        };
        nodes.extend(slot_nodes);
    }
    DecodingGraph::new(cfg.users, cfg.pilots, cfg.frame_len, nodes, messages)
}

/// Draws the access pattern of trial `trial` from stream `(trial, SCHEDULE)`.
pub fn trial_schedule(cfg: &SystemConfig, trial: u64) -> PilotSchedule {
    draw_schedule(cfg, &mut substream(cfg.seed, &[trial, purpose::SCHEDULE]))
}

/// One frame: schedule, channels, receiver processing and SIC. Deterministic
/// in `(cfg.seed, trial)`.
pub fn run_trial(cfg: &SystemConfig, opts: &SimOptions, trial: u64) -> Result<DecodingResult> {
    cfg.validate()?;
    let schedule = trial_schedule(cfg, trial);
    let mut graph = build_graph(cfg, &schedule, opts, trial)?;
    sic_decode(&mut graph, cfg, &opts.decoder)
}

/// Aggregate of many independent frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub trials: usize,
    pub throughput: f64,
    pub throughput_stderr: f64,
    /// Decoded / active-at-least-once, pooled over trials.
    pub recovered_active: f64,
    /// Decoded / all users, pooled over trials.
    pub recovered_all: f64,
    pub recovered_active_stderr: f64,
    pub decoded_users: usize,
    pub active_users: usize,
}

/// Runs trials `0..trials` (in parallel on the current rayon pool) and
/// reduces them in trial order, so the result does not depend on the
/// number of threads.
pub fn run_trials(cfg: &SystemConfig, opts: &SimOptions, trials: usize) -> Result<SimSummary> {
    let results: Vec<DecodingResult> = (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, opts, t))
        .collect::<Result<_>>()?;
    Ok(summarize(&results))
}

pub fn summarize(results: &[DecodingResult]) -> SimSummary {
    let n = results.len();
    let nf = n as f64;
    let gammas: Vec<f64> = results.iter().map(|r| r.throughput).collect();
    let mean = gammas.iter().sum::<f64>() / nf;
    let var = if n > 1 {
        gammas.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };
    let decoded: usize = results.iter().map(|r| r.decoded_users).sum();
    let active: usize = results.iter().map(|r| r.active_users).sum();
    let users: usize = results.iter().map(|r| r.users).sum();
    let per_trial: Vec<f64> = results.iter().map(DecodingResult::recovered_active).collect();
    let pm = per_trial.iter().sum::<f64>() / nf;
    let pv = if n > 1 {
        per_trial.iter().map(|p| (p - pm).powi(2)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };
    SimSummary {
        trials: n,
        throughput: mean,
        throughput_stderr: (var / nf).sqrt(),
        recovered_active: if active == 0 { 0.0 } else { decoded as f64 / active as f64 },
        recovered_all: if users == 0 { 0.0 } else { decoded as f64 / users as f64 },
        recovered_active_stderr: (pv / nf).sqrt(),
        decoded_users: decoded,
        active_users: active,
    }
}

/// Writes the per-node trace of one trial as CSV rows
/// `trial,slot,pilot,original_degree,decoded_user,iteration,sinr_db`.
pub fn write_trace<W: Write>(
    out: &mut csv::Writer<W>,
    trial: u64,
    result: &DecodingResult,
) -> Result<()> {
    for t in &result.trace {
        out.write_record([
            trial.to_string(),
            t.slot.to_string(),
            t.pilot.to_string(),
            t.original_degree.to_string(),
            t.decoded_user.map(|u| u.to_string()).unwrap_or_default(),
            t.iteration.map(|u| u.to_string()).unwrap_or_default(),
            t.sinr_db.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    Ok(())
}

pub const TRACE_HEADER: [&str; 7] = [
    "trial",
    "slot",
    "pilot",
    "original_degree",
    "decoded_user",
    "iteration",
    "sinr_db",
];

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_example_config() -> SystemConfig {
        SystemConfig {
            users: 3,
            antennas: 16,
            coherence: 8,
            pilots: 2,
            noise_var: 0.0,
            code_rate: 1.0,
            p_active: 0.5,
            frame_len: 2,
            ..SystemConfig::default()
        }
    }

    fn validation(signal: SignalMode) -> SimOptions {
        SimOptions {
            signal,
            channel: ChannelModel::Ideal,
            decoder: DecoderOptions::default(),
        }
    }

    #[test]
    fn worked_example_decodes_three_then_one() {
        // Users 1..3 are 0..2 here. Slot 1: user 3 alone on pilot 2.
        // Slot 2: users 1 and 3 share pilot 2. User 2 is silent.
        let cfg = worked_example_config();
        let sched = PilotSchedule::from_triples(3, 2, 2, &[(0, 2, 1), (1, 0, 1), (1, 2, 1)]).unwrap();
        for mode in [SignalMode::Full, SignalMode::Virtual, SignalMode::Gram] {
            let mut graph = build_graph(&cfg, &sched, &validation(mode), 0).unwrap();
            let res = sic_decode(&mut graph, &cfg, &DecoderOptions::default()).unwrap();
            let order: Vec<usize> = graph.events.iter().map(|e| e.user).collect();
            assert_eq!(order, vec![2, 0], "{mode:?}");
            assert_eq!(res.decoded_users, 2);
            assert_eq!(res.iterations, 2);
            assert!(!graph.is_decoded(1));
            assert_eq!(res.decoded_per_slot, vec![vec![2], vec![0]]);
        }
    }

    #[test]
    fn stopping_set_decodes_nothing() {
        let cfg = worked_example_config();
        // both users collide in both slots on the same pilot
        let sched =
            PilotSchedule::from_triples(3, 2, 2, &[(0, 0, 0), (0, 1, 0), (1, 0, 1), (1, 1, 1)])
                .unwrap();
        let mut graph = build_graph(&cfg, &sched, &validation(SignalMode::Virtual), 0).unwrap();
        let res = sic_decode(&mut graph, &cfg, &DecoderOptions::default()).unwrap();
        assert_eq!(res.decoded_users, 0);
        assert_eq!(res.iterations, 0);
        assert_eq!(res.throughput, 0.0);
        // empty graph is a valid fixed point
        let empty = PilotSchedule::empty(3, 2, 2);
        let mut graph = build_graph(&cfg, &empty, &validation(SignalMode::Gram), 0).unwrap();
        let res = sic_decode(&mut graph, &cfg, &DecoderOptions::default()).unwrap();
        assert_eq!(res.decoded_users, 0);
        assert_eq!(res.active_users, 0);
        assert_eq!(res.recovered_active(), 0.0);
    }

    #[test]
    fn threshold_boundary() {
        let cfg = SystemConfig {
            code_rate: 0.5,
            ..SystemConfig::default()
        };
        let ledger = CancellationLedger::new(3);
        let node = |sinr: f64| FactorNode {
            slot: 0,
            pilot: 0,
            members: vec![0],
            residual: vec![0],
            cancelled: vec![],
            coeffs: vec![(0, C64::new(sinr.sqrt(), 0.0)), (1, C64::new(1.0, 0.0))],
            power_sum: 1.0,
            estimate_energy: 1.0,
            noise_power: 0.0,
            filtered: None,
        };
        assert!(!decodable(&node(0.99), 0, &ledger, &cfg, 0.0).unwrap());
        assert!(decodable(&node(1.01), 0, &ledger, &cfg, 0.0).unwrap());
        assert!(!decodable(&node(1.01), 0, &ledger, &cfg, 1.0).unwrap());
    }

    #[test]
    fn single_clean_user_rate() {
        let cfg = SystemConfig {
            users: 1,
            antennas: 8,
            coherence: 16,
            pilots: 1,
            noise_var: 0.0,
            p_active: 1.0,
            frame_len: 1,
            ..SystemConfig::default()
        };
        for signal in [SignalMode::Full, SignalMode::Virtual, SignalMode::Gram] {
            let opts = SimOptions {
                signal,
                ..SimOptions::default()
            };
            let res = run_trial(&cfg, &opts, 0).unwrap();
            assert!((res.throughput - 15.0 / 16.0).abs() < 1e-15);
        }
        let silent = SystemConfig { p_active: 0.0, ..cfg };
        let res = run_trial(&silent, &SimOptions::default(), 0).unwrap();
        assert_eq!(res.throughput, 0.0);
    }

    #[test]
    fn edge_conservation_and_ledger_replay() {
        let cfg = SystemConfig {
            users: 60,
            antennas: 32,
            coherence: 12,
            pilots: 4,
            noise_var: 0.1,
            ..SystemConfig::default()
        }
        .with_scheme(1.2, 1.0, 4);
        let opts = SimOptions {
            signal: SignalMode::Full,
            ..SimOptions::default()
        };
        for trial in 0..5 {
            let sched = trial_schedule(&cfg, trial);
            let pristine = build_graph(&cfg, &sched, &opts, trial).unwrap();
            let mut graph = pristine.clone();
            let before = graph.residual_edges();
            let res = sic_decode(&mut graph, &cfg, &opts.decoder).unwrap();
            let removed: usize = graph
                .events
                .iter()
                .map(|e| sched_degree(&sched, e.user))
                .sum();
            assert_eq!(before - graph.residual_edges(), removed);
            assert!(res.decoded_per_slot.iter().all(|s| s.len() <= cfg.pilots));

            // replay the ledger against the pristine residuals
            let msgs = graph.messages.as_ref().unwrap();
            for (i, node) in graph.nodes.iter().enumerate() {
                let mut f = pristine.nodes[i].filtered.clone().unwrap_or_default();
                let mut g = pristine.nodes[i].power_sum;
                for &c in &node.cancelled {
                    let ghat = graph.ledger.ghat(c).unwrap();
                    g -= ghat;
                    let x = msgs[c].as_ref().unwrap();
                    f.iter_mut().zip(x).for_each(|(fi, xi)| *fi -= ghat * xi);
                }
                assert!((g - node.power_sum).abs() <= 1e-9 * pristine.nodes[i].power_sum.abs().max(1.0));
                if let Some(fr) = &node.filtered {
                    for (a, b) in f.iter().zip(fr) {
                        assert!((a - b).norm() <= 1e-9 * a.norm().max(1.0));
                    }
                }
            }
        }
    }

    fn sched_degree(s: &PilotSchedule, user: usize) -> usize {
        s.variable_degree(user)
    }

    #[test]
    fn trace_csv_columns() {
        let cfg = worked_example_config();
        let sched = PilotSchedule::from_triples(3, 2, 2, &[(0, 2, 1), (1, 0, 1), (1, 2, 1)]).unwrap();
        let mut graph = build_graph(&cfg, &sched, &validation(SignalMode::Virtual), 0).unwrap();
        let res = sic_decode(&mut graph, &cfg, &DecoderOptions::default()).unwrap();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(TRACE_HEADER).unwrap();
        write_trace(&mut w, 7, &res).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "trial,slot,pilot,original_degree,decoded_user,iteration,sinr_db");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("7,0,0,0,,,"));
        assert!(lines[2].starts_with("7,0,1,1,2,1,"));
        assert!(lines[4].starts_with("7,1,1,2,0,2,"));
    }
}
