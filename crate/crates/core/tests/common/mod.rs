#![allow(dead_code)]

use std::collections::BTreeSet;

use cpa::schedule::PilotSchedule;
use cpa::sic::DecodingResult;

/// Plain peeling on the bipartite graph of a schedule: repeatedly take any
/// factor node with exactly one undecoded member and mark it decoded.
pub fn peel(schedule: &PilotSchedule) -> BTreeSet<usize> {
    let mut nodes = Vec::new();
    for n in 0..schedule.frame_len() {
        for p in 0..schedule.pilots() {
            let members = schedule.members(n, p);
            if !members.is_empty() {
                nodes.push(members);
            }
        }
    }
    let mut decoded = BTreeSet::new();
    loop {
        let mut progress = false;
        for members in &nodes {
            let open: Vec<usize> = members.iter().copied().filter(|u| !decoded.contains(u)).collect();
            if open.len() == 1 {
                decoded.insert(open[0]);
                progress = true;
            }
        }
        if !progress {
            return decoded;
        }
    }
}

/// Users sitting alone on some factor node, the ALOHA decodable set.
pub fn singletons(schedule: &PilotSchedule) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for n in 0..schedule.frame_len() {
        for p in 0..schedule.pilots() {
            if let [u] = schedule.members(n, p)[..] {
                out.insert(u);
            }
        }
    }
    out
}

pub fn decoded_set(result: &DecodingResult) -> BTreeSet<usize> {
    result.decoded_per_slot.iter().flatten().copied().collect()
}

pub fn verdict(id: u32, pass: bool, detail: &str) -> bool {
    println!("criterion {id}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}
