//! CHARM closed itemset search over vertical tidset bitsets, plus an
//! exhaustive reference enumerator.

use std::collections::HashMap;

use super::{ClosedItemset, Item, TransactionDB};
use crate::error::{Error, Result};

/// Fixed-width bitset over transaction positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct TidSet {
    words: Vec<u64>,
}

impl TidSet {
    fn empty(n: usize) -> Self {
        TidSet {
            words: vec![0; n.div_ceil(64)],
        }
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn and(&self, other: &TidSet) -> TidSet {
        TidSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, bits)| {
            (0..64).filter(move |b| bits >> b & 1 == 1).map(move |b| w * 64 + b)
        })
    }
}

fn vertical(db: &TransactionDB) -> Vec<(Item, TidSet)> {
    let mut map: std::collections::BTreeMap<Item, TidSet> = Default::default();
    for (pos, tr) in db.transactions.iter().enumerate() {
        for item in tr {
            map.entry(*item).or_insert_with(|| TidSet::empty(db.len())).insert(pos);
        }
    }
    map.into_iter().collect()
}

struct Node {
    items: Vec<Item>,
    tids: TidSet,
}

struct Search {
    minsup: usize,
    /// Closed sets found so far, bucketed by tidset.
    found: HashMap<TidSet, Vec<Vec<Item>>>,
}

impl Search {
    fn subsumed(&self, node: &Node) -> bool {
        self.found
            .get(&node.tids)
            .is_some_and(|sets| sets.iter().any(|s| node.items.iter().all(|i| s.binary_search(i).is_ok())))
    }

    fn extend(&mut self, mut nodes: Vec<Option<Node>>) {
        for i in 0..nodes.len() {
            let Some(mut current) = nodes[i].take() else { continue };
            let mut children: Vec<Option<Node>> = Vec::new();
            for j in i + 1..nodes.len() {
                let Some(other) = nodes[j].as_ref() else { continue };
                let tids = current.tids.and(&other.tids);
                if tids.len() < self.minsup {
                    continue;
                }
                let same_i = tids == current.tids;
                let same_j = tids == other.tids;
                if same_i {
                    // Every extension of `current` also holds `other`'s items.
                    let extra = other.items.clone();
                    merge_into(&mut current.items, &extra);
                    for child in children.iter_mut().flatten() {
                        merge_into(&mut child.items, &extra);
                    }
                    if same_j {
                        nodes[j] = None;
                    }
                } else {
                    let mut items = current.items.clone();
                    merge_into(&mut items, &other.items);
                    if same_j {
                        nodes[j] = None;
                    }
                    children.push(Some(Node { items, tids }));
                }
            }
            if !children.is_empty() {
                sort_nodes(&mut children);
                self.extend(children);
            }
            if !self.subsumed(&current) {
                self.found.entry(current.tids.clone()).or_default().push(current.items.clone());
            }
        }
    }
}

fn merge_into(target: &mut Vec<Item>, extra: &[Item]) {
    target.extend_from_slice(extra);
    target.sort();
    target.dedup();
}

/// Ascending support, then items.
fn sort_nodes(nodes: &mut [Option<Node>]) {
    nodes.sort_by(|a, b| match (a, b) {
        (Some(a), Some(b)) => a.tids.len().cmp(&b.tids.len()).then_with(|| a.items.cmp(&b.items)),
        _ => std::cmp::Ordering::Equal,
    });
}

fn finish(db: &TransactionDB, sets: impl IntoIterator<Item = (Vec<Item>, TidSet)>) -> Vec<ClosedItemset> {
    let mut out: Vec<ClosedItemset> = sets
        .into_iter()
        .map(|(items, tids)| {
            let tids: Vec<usize> = tids.positions().map(|p| db.tids[p]).collect();
            ClosedItemset {
                items,
                support: tids.len(),
                tids,
            }
        })
        .collect();
    out.sort();
    out
}

/// All non-empty closed itemsets with support ≥ `minsup` (clamped to 1),
/// sorted by items.
pub fn charm(db: &TransactionDB, minsup: usize) -> Vec<ClosedItemset> {
    let minsup = minsup.max(1);
    if db.is_empty() || minsup > db.len() {
        return Vec::new();
    }
    let mut roots: Vec<Option<Node>> = vertical(db)
        .into_iter()
        .filter(|(_, t)| t.len() >= minsup)
        .map(|(item, tids)| Some(Node { items: vec![item], tids }))
        .collect();
    sort_nodes(&mut roots);
    let mut search = Search {
        minsup,
        found: HashMap::new(),
    };
    search.extend(roots);
    finish(
        db,
        search
            .found
            .into_iter()
            .flat_map(|(tids, sets)| sets.into_iter().map(move |s| (s, tids.clone()))),
    )
}

/// Exhaustive enumeration of closed itemsets; at most 20 distinct items.
pub fn brute_force_closed(db: &TransactionDB, minsup: usize) -> Result<Vec<ClosedItemset>> {
    let minsup = minsup.max(1);
    let universe = vertical(db);
    if universe.len() > 20 {
        return Err(Error::UniverseTooLarge(universe.len()));
    }
    let mut frequent: Vec<(u32, TidSet)> = Vec::new();
    for mask in 1u32..(1 << universe.len()) {
        let mut tids: Option<TidSet> = None;
        for (bit, (_, t)) in universe.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                tids = Some(match tids {
                    None => t.clone(),
                    Some(acc) => acc.and(t),
                });
            }
        }
        let tids = tids.expect("mask is non-zero");
        if tids.len() >= minsup {
            frequent.push((mask, tids));
        }
    }
    let closed = frequent.iter().filter(|(mask, tids)| {
        !frequent
            .iter()
            .any(|(other, t)| other != mask && other & mask == *mask && t == tids)
    });
    Ok(finish(
        db,
        closed.map(|(mask, tids)| {
            let items = universe
                .iter()
                .enumerate()
                .filter(|(bit, _)| mask >> bit & 1 == 1)
                .map(|(_, (item, _))| *item)
                .collect();
            (items, tids.clone())
        }),
    ))
}
