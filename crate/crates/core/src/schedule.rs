//! Random access pattern of a frame: who is active in which slot, and on
//! which pilot.

use rand::Rng;
use rand_distr::{Distribution, Geometric};

use crate::config::SystemConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Activation {
    pub user: usize,
    pub pilot: usize,
}

/// Per-slot activity and pilot choice of every user. Users and pilots are
/// 0-based. Activations within a slot are sorted by user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PilotSchedule {
    users: usize,
    pilots: usize,
    slots: Vec<Vec<Activation>>,
}

impl PilotSchedule {
    pub fn empty(users: usize, pilots: usize, frame_len: usize) -> Self {
        Self {
            users,
            pilots,
            slots: vec![Vec::new(); frame_len],
        }
    }

    /// Builds a schedule from `(slot, user, pilot)` triples.
    pub fn from_triples(
        users: usize,
        pilots: usize,
        frame_len: usize,
        triples: &[(usize, usize, usize)],
    ) -> Result<Self> {
        let mut sched = Self::empty(users, pilots, frame_len);
        for &(slot, user, pilot) in triples {
            if slot >= frame_len || user >= users || pilot >= pilots {
                return Err(Error::Dimension(format!(
                    "activation (slot {slot}, user {user}, pilot {pilot}) outside {frame_len}x{users}x{pilots}"
                )));
            }
            let acts = &mut sched.slots[slot];
            if acts.iter().any(|a| a.user == user) {
                return Err(Error::Dimension(format!(
                    "user {user} activated twice in slot {slot}"
                )));
            }
            acts.push(Activation { user, pilot });
        }
        for acts in &mut sched.slots {
            acts.sort_by_key(|a| a.user);
        }
        Ok(sched)
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn pilots(&self) -> usize {
        self.pilots
    }

    pub fn frame_len(&self) -> usize {
        self.slots.len()
    }

    /// Active users of slot `n` (the set A_n) with their pilots.
    pub fn slot(&self, n: usize) -> &[Activation] {
        &self.slots[n]
    }

    pub fn pilot_of(&self, slot: usize, user: usize) -> Option<usize> {
        let acts = &self.slots[slot];
        acts.binary_search_by_key(&user, |a| a.user)
            .ok()
            .map(|i| acts[i].pilot)
    }

    /// Users of slot `n` on pilot `j` (the set A_n^j), ascending.
    pub fn members(&self, slot: usize, pilot: usize) -> Vec<usize> {
        self.slots[slot]
            .iter()
            .filter(|a| a.pilot == pilot)
            .map(|a| a.user)
            .collect()
    }

    /// Number of slots in which `user` is active.
    pub fn variable_degree(&self, user: usize) -> usize {
        (0..self.frame_len())
            .filter(|&n| self.pilot_of(n, user).is_some())
            .count()
    }

    pub fn total_activations(&self) -> usize {
        self.slots.iter().map(Vec::len).sum()
    }

    /// Factor- and variable-degree histograms. Their totals are
    /// `pilots * frame_len` and `users` respectively.
    pub fn empirical_degrees(&self) -> DegreeHistograms {
        let mut factor = vec![0usize; 1];
        let mut var_deg = vec![0usize; self.users];
        let mut per_pilot = vec![0usize; self.pilots];
        for acts in &self.slots {
            per_pilot.iter_mut().for_each(|c| *c = 0);
            for a in acts {
                per_pilot[a.pilot] += 1;
                var_deg[a.user] += 1;
            }
            for &d in &per_pilot {
                bump(&mut factor, d);
            }
        }
        let mut variable = vec![0usize; 1];
        for d in var_deg {
            bump(&mut variable, d);
        }
        DegreeHistograms { factor, variable }
    }
}

fn bump(hist: &mut Vec<usize>, d: usize) {
    if hist.len() <= d {
        hist.resize(d + 1, 0);
    }
    hist[d] += 1;
}

/// Degree counts indexed by degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeHistograms {
    pub factor: Vec<usize>,
    pub variable: Vec<usize>,
}

impl DegreeHistograms {
    pub fn mean_factor_degree(&self) -> f64 {
        hist_mean(&self.factor)
    }

    pub fn mean_variable_degree(&self) -> f64 {
        hist_mean(&self.variable)
    }
}

fn hist_mean(h: &[usize]) -> f64 {
    let total: usize = h.iter().sum();
    let weighted: usize = h.iter().enumerate().map(|(d, c)| d * c).sum();
    weighted as f64 / total as f64
}

/// Draws a frame's access pattern: every (slot, user) pair is active
/// independently with probability `p_active`, and each activation picks a
/// pilot uniformly.
pub fn draw_schedule<R: Rng>(cfg: &SystemConfig, rng: &mut R) -> PilotSchedule {
    let mut sched = PilotSchedule::empty(cfg.users, cfg.pilots, cfg.frame_len);
    if cfg.p_active <= 0.0 {
        return sched;
    }
    let total = cfg.users as u64 * cfg.frame_len as u64;
    // Skip over inactive pairs with geometric gaps.
    let gap = Geometric::new(cfg.p_active).expect("p_active in (0, 1]");
    let mut idx = 0u64;
    loop {
        idx = idx.saturating_add(gap.sample(rng));
        if idx >= total {
            break;
        }
        let slot = (idx / cfg.users as u64) as usize;
        let user = (idx % cfg.users as u64) as usize;
        let pilot = rng.random_range(0..cfg.pilots);
        sched.slots[slot].push(Activation { user, pilot });
        idx += 1;
    }
    sched
}
