//! Base-station processing of one slot: least-squares channel estimates,
//! matched filtering with contaminated estimates, power sums, and the
//! genie-side SINR bookkeeping used to judge decodability.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::phy::{
    complex_normal, inner, norm_sqr, sample_gram, CMatrix, ChannelModel, PilotMatrix,
    SlotChannels, SlotSignals, C64,
};
use crate::schedule::PilotSchedule;

/// Finite stand-in for an infinite SINR (no interference and no noise).
pub const SINR_CAP: f64 = 1e15;

/// Least-squares estimate `phi = (s s^H)^{-1} Y s^H`.
pub fn ls_estimate(pilot_rx: &CMatrix, pilot: &[C64]) -> Result<Vec<C64>> {
    if pilot_rx.cols() != pilot.len() {
        return Err(Error::Dimension(format!(
            "pilot observation has {} columns, pilot length {}",
            pilot_rx.cols(),
            pilot.len()
        )));
    }
    Ok(pilot_rx.mul_conj_row(pilot, norm_sqr(pilot)))
}

/// Zero-forcing data estimate `psi = (phi^H phi)^{-1} phi^H Y`.
pub fn zf_estimate(phi: &[C64], data_rx: &CMatrix) -> Result<Vec<C64>> {
    let energy = norm_sqr(phi);
    if energy == 0.0 {
        return Err(Error::ZeroNormEstimate);
    }
    let mut psi = matched_filter(phi, data_rx)?;
    psi.iter_mut().for_each(|z| *z /= energy);
    Ok(psi)
}

/// Matched filter output `f = phi^H Y`.
pub fn matched_filter(phi: &[C64], data_rx: &CMatrix) -> Result<Vec<C64>> {
    if phi.len() != data_rx.rows() {
        return Err(Error::Dimension(format!(
            "estimate length {} != antenna count {}",
            phi.len(),
            data_rx.rows()
        )));
    }
    Ok(data_rx.herm_left(phi))
}

/// Power-sum estimate `g = phi^H phi`.
pub fn power_sum(phi: &[C64]) -> f64 {
    norm_sqr(phi)
}

/// Estimate of the concatenated downlink channel `q = h^T w` from the
/// downlink pilot observation: `y^pd s^H / tau`.
pub fn downlink_concat_channel(y_pd: &[C64], pilot: &[C64]) -> Result<C64> {
    if y_pd.len() != pilot.len() {
        return Err(Error::Dimension("downlink pilot length".into()));
    }
    Ok(inner(pilot, y_pd) / norm_sqr(pilot))
}

/// One orthogonal resource (pilot `pilot` in slot `slot`) after matched
/// filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorNode {
    pub slot: usize,
    pub pilot: usize,
    /// Original member set A_n^j, ascending.
    pub members: Vec<usize>,
    /// Members not yet cancelled. Genie knowledge, used for accounting only.
    pub residual: Vec<usize>,
    /// Members whose contribution has been subtracted from `filtered` and
    /// `power_sum`, in cancellation order.
    pub cancelled: Vec<usize>,
    /// `phi^H h_l` for every user active in the slot. Genie knowledge.
    pub coeffs: Vec<(usize, C64)>,
    /// Residual power sum g, reduced by every cancellation. May go negative.
    pub power_sum: f64,
    /// `||phi||^2` at construction.
    pub estimate_energy: f64,
    /// Per-symbol noise power after matched filtering, `||phi||^2 sigma^2`.
    pub noise_power: f64,
    /// Residual filtered data f (full signal mode only).
    pub filtered: Option<Vec<C64>>,
}

impl FactorNode {
    pub fn degree(&self) -> usize {
        self.members.len()
    }

    pub fn residual_degree(&self) -> usize {
        self.residual.len()
    }

    pub fn coeff(&self, user: usize) -> Option<C64> {
        self.coeffs.iter().find(|(u, _)| *u == user).map(|(_, c)| *c)
    }

    fn empty(slot: usize, pilot: usize) -> Self {
        Self {
            slot,
            pilot,
            members: Vec::new(),
            residual: Vec::new(),
            cancelled: Vec::new(),
            coeffs: Vec::new(),
            power_sum: 0.0,
            estimate_energy: 0.0,
            noise_power: 0.0,
            filtered: None,
        }
    }

    /// Subtracts `ghat * x` from the residual signal and `ghat` from the
    /// power sum, and drops `user` from the residual set.
    pub fn cancel(&mut self, user: usize, ghat: f64, message: Option<&[C64]>) {
        self.residual.retain(|&u| u != user);
        self.cancelled.push(user);
        self.power_sum -= ghat;
        if let (Some(f), Some(x)) = (self.filtered.as_mut(), message) {
            for (fi, xi) in f.iter_mut().zip(x) {
                *fi -= ghat * xi;
            }
        }
    }
}

/// Power values subtracted for decoded users, indexed by user.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CancellationLedger {
    ghat: Vec<Option<f64>>,
}

impl CancellationLedger {
    pub fn new(users: usize) -> Self {
        Self {
            ghat: vec![None; users],
        }
    }

    pub fn record(&mut self, user: usize, ghat: f64) {
        self.ghat[user] = Some(ghat);
    }

    pub fn ghat(&self, user: usize) -> Option<f64> {
        self.ghat.get(user).copied().flatten()
    }
}

/// Per-symbol SINR of `target` in the node's residual signal:
///
/// `|c_t|^2 / (sum_cancelled |c_c - ghat_c|^2 + sum_other |c_l|^2 + ||phi||^2 sigma^2)`
///
/// where `c_l = phi^H h_l` and the "other" sum runs over every user of the
/// slot that has not been cancelled at this node, including users on other
/// pilots. The target's own cancellation, if any, is ignored.
pub fn node_sinr(node: &FactorNode, target: usize, ledger: &CancellationLedger) -> Result<f64> {
    if !node.members.contains(&target) {
        return Err(Error::NotInNode {
            user: target,
            slot: node.slot,
            pilot: node.pilot,
        });
    }
    let mut signal = 0.0;
    let mut interference = node.noise_power;
    for &(user, c) in &node.coeffs {
        if user == target {
            signal = c.norm_sqr();
        } else if node.cancelled.contains(&user) {
            let ghat = ledger.ghat(user).unwrap_or(0.0);
            interference += (c - ghat).norm_sqr();
        } else {
            interference += c.norm_sqr();
        }
    }
    if interference <= 0.0 {
        return Ok(SINR_CAP);
    }
    Ok((signal / interference).min(SINR_CAP))
}

fn pilot_groups(schedule: &PilotSchedule, slot: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); schedule.pilots()];
    for a in schedule.slot(slot) {
        groups[a.pilot].push(a.user);
    }
    groups
}

fn node_from_estimate(
    slot: usize,
    pilot: usize,
    members: Vec<usize>,
    phi: &[C64],
    channels: &SlotChannels,
    noise_var: f64,
) -> FactorNode {
    let coeffs = channels
        .users
        .iter()
        .enumerate()
        .map(|(i, &u)| (u, inner(phi, channels.h.col(i))))
        .collect();
    let g = power_sum(phi);
    FactorNode {
        slot,
        pilot,
        residual: members.clone(),
        members,
        cancelled: Vec::new(),
        coeffs,
        power_sum: g,
        estimate_energy: g,
        noise_power: g * noise_var,
        filtered: None,
    }
}

/// Factor nodes of one slot from full received signals.
pub fn nodes_from_signals(
    schedule: &PilotSchedule,
    slot: usize,
    signals: &SlotSignals,
    channels: &SlotChannels,
    pilots: &PilotMatrix,
    noise_var: f64,
) -> Result<Vec<FactorNode>> {
    pilot_groups(schedule, slot)
        .into_iter()
        .enumerate()
        .map(|(j, members)| {
            if members.is_empty() {
                return Ok(FactorNode::empty(slot, j));
            }
            let phi = ls_estimate(&signals.pilot_rx, pilots.row(j))?;
            let mut node = node_from_estimate(slot, j, members, &phi, channels, noise_var);
            node.filtered = Some(matched_filter(&phi, &signals.data_rx)?);
            Ok(node)
        })
        .collect()
}

/// Factor nodes of one slot computed from the channel columns and pilot
/// noise directly, `phi_j = sum_k h_k + Z s_j^H / tau`, without forming the
/// received matrices. Agrees with [`nodes_from_signals`] up to rounding when
/// given the same draws.
pub fn nodes_from_channels(
    schedule: &PilotSchedule,
    slot: usize,
    channels: &SlotChannels,
    pilot_noise: &CMatrix,
    pilots: &PilotMatrix,
    noise_var: f64,
) -> Result<Vec<FactorNode>> {
    pilot_groups(schedule, slot)
        .into_iter()
        .enumerate()
        .map(|(j, members)| {
            if members.is_empty() {
                return Ok(FactorNode::empty(slot, j));
            }
            let mut phi = ls_estimate(pilot_noise, pilots.row(j))?;
            for &u in &members {
                let h = channels
                    .column_of(u)
                    .ok_or_else(|| Error::Dimension(format!("no channel for user {u}")))?;
                phi.iter_mut().zip(h).for_each(|(p, x)| *p += x);
            }
            Ok(node_from_estimate(slot, j, members, &phi, channels, noise_var))
        })
        .collect()
}

/// Parameters for sampling a slot's Gram statistics directly.
#[derive(Debug, Clone, Copy)]
pub struct GramSlot<'a> {
    pub antennas: usize,
    pub pilots: usize,
    pub noise_var: f64,
    pub model: ChannelModel,
    /// Per-user frame powers, required by the ideal model.
    pub powers: Option<&'a [f64]>,
}

/// Factor nodes of one slot with the inner products `h_m^H h_k`, `z_j^H h_k`
/// and `||z_j||^2` drawn from their exact joint law instead of from
/// M-dimensional vectors. Cost does not depend on the antenna count.
pub fn nodes_from_gram<R: Rng + ?Sized>(
    schedule: &PilotSchedule,
    slot: usize,
    params: &GramSlot<'_>,
    rng: &mut R,
) -> Result<Vec<FactorNode>> {
    let acts = schedule.slot(slot);
    let users: Vec<usize> = acts.iter().map(|a| a.user).collect();
    let groups = pilot_groups(schedule, slot);
    let occupied: Vec<usize> = (0..groups.len()).filter(|&j| !groups[j].is_empty()).collect();
    let m = users.len();
    let with_noise = params.noise_var > 0.0;
    let z_var = params.noise_var / params.pilots as f64;
    let p = m + if with_noise { occupied.len() } else { 0 };

    let gram = match params.model {
        ChannelModel::Rayleigh => {
            let mut scales = vec![1.0; m];
            if with_noise {
                scales.extend(std::iter::repeat_n(z_var, occupied.len()));
            }
            sample_gram(&scales, params.antennas, rng)
        }
        ChannelModel::Ideal => {
            if m > params.antennas {
                return Err(Error::TooFewAntennas {
                    needed: m,
                    antennas: params.antennas,
                });
            }
            let powers = params.powers.expect("ideal model needs frame powers");
            let mut g = vec![C64::new(0.0, 0.0); p * p];
            for (i, &u) in users.iter().enumerate() {
                g[i * p + i] = C64::new(powers[u], 0.0);
            }
            if with_noise {
                let rest = params.antennas - m;
                for zi in 0..occupied.len() {
                    let a = m + zi;
                    let mut energy = 0.0;
                    for (i, &u) in users.iter().enumerate() {
                        let w = complex_normal(rng, 1.0);
                        energy += w.norm_sqr();
                        let v = w * (powers[u] * z_var).sqrt();
                        g[a * p + i] = v;
                        g[i * p + a] = v.conj();
                    }
                    if rest > 0 {
                        energy += Gamma::new(rest as f64, 1.0).expect("shape > 0").sample(rng);
                    }
                    g[a * p + a] = C64::new(z_var * energy, 0.0);
                }
            }
            g
        }
    };

    let index_of = |u: usize| users.binary_search(&u).expect("member is active");
    let mut nodes = Vec::with_capacity(groups.len());
    let mut zi = 0;
    for (j, members) in groups.into_iter().enumerate() {
        if members.is_empty() {
            nodes.push(FactorNode::empty(slot, j));
            continue;
        }
        let mut cols: Vec<usize> = members.iter().map(|&u| index_of(u)).collect();
        if with_noise {
            cols.push(m + zi);
        }
        zi += 1;
        let coeffs = users
            .iter()
            .enumerate()
            .map(|(l, &u)| (u, cols.iter().map(|&a| gram[a * p + l]).sum()))
            .collect();
        let energy: f64 = cols
            .iter()
            .flat_map(|&a| cols.iter().map(move |&b| (a, b)))
            .map(|(a, b)| gram[a * p + b].re)
            .sum();
        nodes.push(FactorNode {
            slot,
            pilot: j,
            residual: members.clone(),
            members,
            cancelled: Vec::new(),
            coeffs,
            power_sum: energy,
            estimate_energy: energy,
            noise_power: energy * params.noise_var,
            filtered: None,
        });
    }
    Ok(nodes)
}
