//! Channels, pilots, user data and received signals.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rng::{purpose, substream};
use crate::schedule::PilotSchedule;

pub type C64 = Complex64;

/// Draws one circularly-symmetric complex Gaussian sample with variance `var`.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(s * re, s * im)
}

/// Dense complex matrix, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (c, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::Dimension(format!(
                    "column {c} has length {}, expected {rows}",
                    col.len()
                )));
            }
            m.col_mut(c).copy_from_slice(col);
        }
        Ok(m)
    }

    pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, var: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| complex_normal(rng, var)).collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, c: usize) -> &[C64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn col_mut(&mut self, c: usize) -> &mut [C64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[c * self.rows + r]
    }

    /// Adds `col * row` (outer product) in place.
    pub fn add_outer(&mut self, col: &[C64], row: &[C64]) {
        debug_assert_eq!(col.len(), self.rows);
        debug_assert_eq!(row.len(), self.cols);
        for (c, &r) in row.iter().enumerate() {
            for (dst, &v) in self.col_mut(c).iter_mut().zip(col) {
                *dst += v * r;
            }
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `self * v^H / scale`, i.e. a right-multiplication by a conjugated row.
    pub fn mul_conj_row(&self, row: &[C64], scale: f64) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for (c, r) in row.iter().enumerate() {
            let rc = r.conj();
            for (o, &v) in out.iter_mut().zip(self.col(c)) {
                *o += v * rc;
            }
        }
        out.iter_mut().for_each(|o| *o /= scale);
        out
    }

    /// `v^H * self`, a row of length `cols`.
    pub fn herm_left(&self, v: &[C64]) -> Vec<C64> {
        (0..self.cols).map(|c| inner(v, self.col(c))).collect()
    }
}

/// `a^H b`.
#[inline]
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Orthogonal pilot sequences, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotMatrix {
    rows: Vec<Vec<C64>>,
}

/// DFT pilots: `s_j(i) = exp(-2 pi i j i / tau)`. Rows are orthogonal with
/// energy `tau` and every symbol is unit-modulus.
pub fn make_pilots(tau: usize) -> PilotMatrix {
    let rows = (0..tau)
        .map(|j| {
            (0..tau)
                .map(|i| C64::from_polar(1.0, -2.0 * PI * ((j * i) % tau) as f64 / tau as f64))
                .collect()
        })
        .collect();
    PilotMatrix { rows }
}

impl PilotMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, j: usize) -> &[C64] {
        &self.rows[j]
    }
}

/// How per-slot channel vectors are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelModel {
    /// i.i.d. CN(0, 1) entries, independent across slots.
    #[default]
    Rayleigh,
    /// Validation regime: channels of users sharing a slot are exactly
    /// orthogonal and each user's channel power is the same in every slot of
    /// the frame.
    Ideal,
}

/// Channel columns of the users active in each slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub slots: Vec<SlotChannels>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotChannels {
    /// Active users, ascending; column `i` of `h` belongs to `users[i]`.
    pub users: Vec<usize>,
    pub h: CMatrix,
}

impl SlotChannels {
    pub fn column_of(&self, user: usize) -> Option<&[C64]> {
        self.users
            .binary_search(&user)
            .ok()
            .map(|i| self.h.col(i))
    }
}

/// Per-frame channel powers `||h_k||^2` used by the ideal model, distributed
/// as the squared norm of an M-dimensional CN(0, I) vector.
pub fn frame_powers(cfg: &SystemConfig, seed: u64, trial: u64) -> Vec<f64> {
    let mut rng = substream(seed, &[trial, purpose::FRAME_NORMS]);
    let gamma = Gamma::new(cfg.antennas as f64, 1.0).expect("antennas >= 1");
    (0..cfg.users).map(|_| gamma.sample(&mut rng)).collect()
}

/// Draws the channels of one slot's active users from stream
/// `(trial, CHANNEL, slot)`.
pub fn draw_slot_channels(
    cfg: &SystemConfig,
    users: &[usize],
    model: ChannelModel,
    powers: Option<&[f64]>,
    seed: u64,
    trial: u64,
    slot: usize,
) -> Result<CMatrix> {
    let mut rng = substream(seed, &[trial, purpose::CHANNEL, slot as u64]);
    let m = cfg.antennas;
    let mut h = CMatrix::gaussian(m, users.len(), 1.0, &mut rng);
    if model == ChannelModel::Ideal {
        if users.len() > m {
            return Err(Error::TooFewAntennas {
                needed: users.len(),
                antennas: m,
            });
        }
        let powers = powers.expect("ideal model needs frame powers");
        // Gram-Schmidt, then scale each column to the user's frame power.
        for c in 0..users.len() {
            for p in 0..c {
                let prev = h.col(p).to_vec();
                let proj = inner(&prev, h.col(c));
                for (x, q) in h.col_mut(c).iter_mut().zip(&prev) {
                    *x -= proj * q;
                }
            }
            let norm = norm_sqr(h.col(c)).sqrt();
            h.col_mut(c).iter_mut().for_each(|x| *x /= norm);
        }
        for (c, &u) in users.iter().enumerate() {
            let s = powers[u].sqrt();
            h.col_mut(c).iter_mut().for_each(|x| *x *= s);
        }
    }
    Ok(h)
}

/// Draws channels for every slot of a schedule. Only active users' columns
/// are materialized.
pub fn draw_channels(
    cfg: &SystemConfig,
    schedule: &PilotSchedule,
    model: ChannelModel,
    seed: u64,
    trial: u64,
) -> Result<ChannelRealization> {
    let powers = (model == ChannelModel::Ideal).then(|| frame_powers(cfg, seed, trial));
    let slots = (0..schedule.frame_len())
        .map(|n| {
            let users: Vec<usize> = schedule.slot(n).iter().map(|a| a.user).collect();
            let h = draw_slot_channels(cfg, &users, model, powers.as_deref(), seed, trial, n)?;
            Ok(SlotChannels { users, h })
        })
        .collect::<Result<_>>()?;
    Ok(ChannelRealization { slots })
}

/// Unit-power QPSK symbols.
pub fn qpsk_symbols<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<C64> {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    (0..len)
        .map(|_| {
            let bits: u8 = rng.random_range(0..4);
            C64::new(
                if bits & 1 == 0 { a } else { -a },
                if bits & 2 == 0 { a } else { -a },
            )
        })
        .collect()
}

/// The uplink message of a user. The same vector is sent in every slot the
/// user is active in.
pub fn user_message(cfg: &SystemConfig, seed: u64, trial: u64, user: usize) -> Vec<C64> {
    let mut rng = substream(seed, &[trial, purpose::MESSAGE, user as u64]);
    qpsk_symbols(cfg.data_len(), &mut rng)
}

/// Messages of all users that are active at least once, indexed by user.
pub fn draw_messages(
    cfg: &SystemConfig,
    schedule: &PilotSchedule,
    seed: u64,
    trial: u64,
) -> Vec<Option<Vec<C64>>> {
    let mut msgs = vec![None; cfg.users];
    for n in 0..schedule.frame_len() {
        for a in schedule.slot(n) {
            if msgs[a.user].is_none() {
                msgs[a.user] = Some(user_message(cfg, seed, trial, a.user));
            }
        }
    }
    msgs
}

/// The M x tau uplink pilot noise of one slot, stream `(trial, PILOT_NOISE, slot)`.
pub fn draw_pilot_noise(cfg: &SystemConfig, seed: u64, trial: u64, slot: usize) -> CMatrix {
    let mut rng = substream(seed, &[trial, purpose::PILOT_NOISE, slot as u64]);
    CMatrix::gaussian(cfg.antennas, cfg.pilots, cfg.noise_var, &mut rng)
}

/// The M x D uplink data noise of one slot, stream `(trial, DATA_NOISE, slot)`.
pub fn draw_data_noise(cfg: &SystemConfig, seed: u64, trial: u64, slot: usize) -> CMatrix {
    let mut rng = substream(seed, &[trial, purpose::DATA_NOISE, slot as u64]);
    CMatrix::gaussian(cfg.antennas, cfg.data_len(), cfg.noise_var, &mut rng)
}

/// Received uplink signals of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotSignals {
    /// Y^pu, M x tau.
    pub pilot_rx: CMatrix,
    /// Y^u, M x D.
    pub data_rx: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSignals {
    pub slots: Vec<SlotSignals>,
}

/// Synthesizes one slot:
/// `Y^pu = sum_j sum_{k in A_n^j} h_k s_j + Z^pu` and
/// `Y^u = sum_{k in A_n} h_k x_k + Z^u`.
pub fn synth_slot(
    schedule: &PilotSchedule,
    slot: usize,
    channels: &SlotChannels,
    messages: &[Option<Vec<C64>>],
    pilots: &PilotMatrix,
    pilot_noise: CMatrix,
    data_noise: CMatrix,
) -> Result<SlotSignals> {
    let m = channels.h.rows();
    let tau = pilots.len();
    if pilot_noise.rows() != m || pilot_noise.cols() != tau {
        return Err(Error::Dimension(format!(
            "pilot noise is {}x{}, expected {m}x{tau}",
            pilot_noise.rows(),
            pilot_noise.cols()
        )));
    }
    let d = data_noise.cols();
    if data_noise.rows() != m {
        return Err(Error::Dimension("data noise row count".into()));
    }
    let mut pilot_rx = pilot_noise;
    let mut data_rx = data_noise;
    for a in schedule.slot(slot) {
        let h = channels
            .column_of(a.user)
            .ok_or_else(|| Error::Dimension(format!("no channel for user {}", a.user)))?;
        if a.pilot >= tau {
            return Err(Error::Dimension(format!("pilot {} >= tau", a.pilot)));
        }
        pilot_rx.add_outer(h, pilots.row(a.pilot));
        let x = messages
            .get(a.user)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::Dimension(format!("no message for user {}", a.user)))?;
        if x.len() != d {
            return Err(Error::Dimension(format!(
                "message length {} != data length {d}",
                x.len()
            )));
        }
        data_rx.add_outer(h, x);
    }
    Ok(SlotSignals { pilot_rx, data_rx })
}

/// Full signal-domain synthesis of every slot in a frame.
pub fn synth_uplink(
    cfg: &SystemConfig,
    schedule: &PilotSchedule,
    channels: &ChannelRealization,
    messages: &[Option<Vec<C64>>],
    pilots: &PilotMatrix,
    seed: u64,
    trial: u64,
) -> Result<FrameSignals> {
    if channels.slots.len() != schedule.frame_len() {
        return Err(Error::Dimension("channel realization frame length".into()));
    }
    let slots = (0..schedule.frame_len())
        .map(|n| {
            synth_slot(
                schedule,
                n,
                &channels.slots[n],
                messages,
                pilots,
                draw_pilot_noise(cfg, seed, trial, n),
                draw_data_noise(cfg, seed, trial, n),
            )
        })
        .collect::<Result<_>>()?;
    Ok(FrameSignals { slots })
}

/// Downlink pilot and data observations of a single user:
/// `y^pd = h^T w s_j + z^pd`, `y^d = h^T w x^d + z^d`.
pub fn synth_downlink<R: Rng + ?Sized>(
    h: &[C64],
    w: &[C64],
    pilot: &[C64],
    data: &[C64],
    noise_var: f64,
    rng: &mut R,
) -> Result<(Vec<C64>, Vec<C64>)> {
    if h.len() != w.len() {
        return Err(Error::Dimension(format!(
            "channel length {} != precoder length {}",
            h.len(),
            w.len()
        )));
    }
    let q: C64 = h.iter().zip(w).map(|(a, b)| a * b).sum();
    let y_pd = pilot
        .iter()
        .map(|s| q * s + complex_normal(rng, noise_var))
        .collect();
    let y_d = data
        .iter()
        .map(|x| q * x + complex_normal(rng, noise_var))
        .collect();
    Ok((y_pd, y_d))
}

/// Conjugate beamforming precoder `w = h^*`.
pub fn conjugate_precoder(h: &[C64]) -> Vec<C64> {
    h.iter().map(|z| z.conj()).collect()
}

/// Samples the Gram matrix `V^H V` of `p` independent columns
/// `v_i ~ CN(0, scales[i] I_M)` without materializing the columns.
///
/// Uses the Bartlett decomposition of the complex Wishart law: with
/// `V = Q R`, `R` is upper triangular with `|R_ii|^2 ~ Gamma(M - i, 1)` and
/// `R_ik ~ CN(0, 1)` above the diagonal. Falls back to explicit columns when
/// `M < p`. Returned row-major, `G[a * p + b] = v_a^H v_b`.
pub fn sample_gram<R: Rng + ?Sized>(scales: &[f64], antennas: usize, rng: &mut R) -> Vec<C64> {
    let p = scales.len();
    let mut g = vec![C64::new(0.0, 0.0); p * p];
    if antennas < p {
        let cols: Vec<Vec<C64>> = scales
            .iter()
            .map(|&s| (0..antennas).map(|_| complex_normal(rng, s)).collect())
            .collect();
        for a in 0..p {
            for b in a..p {
                let v = inner(&cols[a], &cols[b]);
                g[a * p + b] = v;
                g[b * p + a] = v.conj();
            }
        }
        return g;
    }
    // r is stored row-major, upper triangle only
    let mut r = vec![C64::new(0.0, 0.0); p * p];
    for i in 0..p {
        let shape = (antennas - i) as f64;
        let d: f64 = Gamma::new(shape, 1.0).expect("shape > 0").sample(rng);
        r[i * p + i] = C64::new(d.sqrt(), 0.0);
        for k in i + 1..p {
            r[i * p + k] = complex_normal(rng, 1.0);
        }
    }
    let sq: Vec<f64> = scales.iter().map(|s| s.sqrt()).collect();
    for a in 0..p {
        for b in a..p {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..=a {
                acc += r[i * p + a].conj() * r[i * p + b];
            }
            let v = acc * (sq[a] * sq[b]);
            g[a * p + b] = v;
            g[b * p + a] = v.conj();
        }
    }
    g
}
