use std::collections::{BTreeMap, BTreeSet};

use crate::lang::{BlockId, Cfg, NodeId};

/// A definition: statement and the variable it writes.
pub type Def = (NodeId, String);

/// Reaching definitions at the entry of every block (classic forward fixpoint).
pub fn reaching_in(cfg: &Cfg) -> Vec<BTreeSet<Def>> {
    let n = cfg.len();
    let preds: Vec<Vec<BlockId>> = (0..n).map(|b| cfg.preds(b)).collect();
    let mut inn: Vec<BTreeSet<Def>> = vec![BTreeSet::new(); n];
    let mut out: Vec<BTreeSet<Def>> = vec![BTreeSet::new(); n];
    let mut changed = true;
    while changed {
        changed = false;
        for b in 0..n {
            let new_in: BTreeSet<Def> = preds[b].iter().flat_map(|&p| out[p].iter().cloned()).collect();
            let new_out = transfer(cfg, b, new_in.clone(), None);
            if new_in != inn[b] || new_out != out[b] {
                inn[b] = new_in;
                out[b] = new_out;
                changed = true;
            }
        }
    }
    inn
}

/// Apply the block's statements, stopping before index `upto` when given.
fn transfer(cfg: &Cfg, b: BlockId, mut live: BTreeSet<Def>, upto: Option<usize>) -> BTreeSet<Def> {
    for (i, s) in cfg.blocks[b].stmts.iter().enumerate() {
        if Some(i) == upto {
            break;
        }
        for v in &s.defs {
            live.retain(|(_, w)| w != v);
            live.insert((s.id, v.clone()));
        }
    }
    live
}

/// Definitions reaching the point just before statement `at`.
pub fn reaching_at(cfg: &Cfg, inn: &[BTreeSet<Def>], at: NodeId) -> BTreeSet<Def> {
    match cfg.position(at) {
        Some((b, i)) => transfer(cfg, b, inn[b].clone(), Some(i)),
        None => BTreeSet::new(),
    }
}

/// For every (statement, used variable), the statements whose definition may reach it.
pub fn def_use_chains(cfg: &Cfg) -> BTreeMap<(NodeId, String), BTreeSet<NodeId>> {
    let inn = reaching_in(cfg);
    let mut out = BTreeMap::new();
    for b in 0..cfg.len() {
        let mut live = inn[b].clone();
        for s in &cfg.blocks[b].stmts {
            for u in &s.uses {
                let defs: BTreeSet<NodeId> = live.iter().filter(|(_, v)| v == u).map(|(d, _)| *d).collect();
                out.insert((s.id, u.clone()), defs);
            }
            for v in &s.defs {
                live.retain(|(_, w)| w != v);
                live.insert((s.id, v.clone()));
            }
        }
    }
    out
}
