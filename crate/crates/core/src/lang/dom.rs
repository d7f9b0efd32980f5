use std::collections::BTreeSet;

use super::cfg::{BlockId, Cfg};

/// Dominator sets by the iterative dataflow fixpoint. Unreachable blocks get the full set.
pub fn dominators(cfg: &Cfg) -> Vec<BTreeSet<BlockId>> {
    let preds: Vec<Vec<BlockId>> = (0..cfg.len()).map(|b| cfg.preds(b)).collect();
    fixpoint(cfg.len(), cfg.entry, &preds)
}

/// Post-dominator sets (dominators of the reversed graph rooted at exit).
pub fn post_dominators(cfg: &Cfg) -> Vec<BTreeSet<BlockId>> {
    let succs: Vec<Vec<BlockId>> = (0..cfg.len()).map(|b| cfg.succs(b)).collect();
    fixpoint(cfg.len(), cfg.exit, &succs)
}

fn fixpoint(n: usize, root: BlockId, preds: &[Vec<BlockId>]) -> Vec<BTreeSet<BlockId>> {
    let all: BTreeSet<BlockId> = (0..n).collect();
    let mut dom = vec![all; n];
    dom[root] = BTreeSet::from([root]);
    let mut changed = true;
    while changed {
        changed = false;
        for b in 0..n {
            if b == root {
                continue;
            }
            let mut new: Option<BTreeSet<BlockId>> = None;
            for &p in &preds[b] {
                new = Some(match new {
                    None => dom[p].clone(),
                    Some(acc) => acc.intersection(&dom[p]).copied().collect(),
                });
            }
            let mut new = new.unwrap_or_else(|| (0..n).collect());
            new.insert(b);
            if new != dom[b] {
                dom[b] = new;
                changed = true;
            }
        }
    }
    dom
}

/// Immediate dominator: the strict dominator dominated by all other strict dominators.
pub fn immediate_dominator(dom: &[BTreeSet<BlockId>], b: BlockId) -> Option<BlockId> {
    let strict: Vec<BlockId> = dom[b].iter().copied().filter(|&d| d != b).collect();
    strict.iter().copied().find(|&d| strict.iter().all(|&o| dom[d].contains(&o)))
}
