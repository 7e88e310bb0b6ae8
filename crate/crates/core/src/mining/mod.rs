//! Transaction databases of per-point best models, closed frequent itemset
//! mining, and extraction of consistent model sets per component.

mod charm;

pub use charm::{brute_force_closed, charm};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experts::BestModelSets;
use crate::models::Role;

/// A component-tagged atomic model id, written `T:5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Item {
    pub role: Role,
    pub id: u32,
}

impl Item {
    pub fn new(role: Role, id: u32) -> Self {
        Item { role, id }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.role.tag(), self.id)
    }
}

impl FromStr for Item {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("bad item {s:?}, expected e.g. T:5"));
        let (tag, id) = s.split_once(':').ok_or_else(bad)?;
        let mut chars = tag.chars();
        let role = match (chars.next(), chars.next()) {
            (Some(c), None) => Role::from_tag(c).ok_or_else(bad)?,
            _ => return Err(bad()),
        };
        Ok(Item {
            role,
            id: id.parse().map_err(|_| bad())?,
        })
    }
}

impl From<Item> for String {
    fn from(i: Item) -> String {
        i.to_string()
    }
}

impl TryFrom<String> for Item {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Polarity {
    Good,
    Bad,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TransactionDB {
    /// Transaction ids (scored point indices), parallel to `transactions`.
    pub tids: Vec<usize>,
    pub transactions: Vec<BTreeSet<Item>>,
}

impl TransactionDB {
    pub fn new(tids: Vec<usize>, transactions: Vec<BTreeSet<Item>>) -> Self {
        assert_eq!(tids.len(), transactions.len());
        TransactionDB { tids, transactions }
    }

    /// Database with sequential tids.
    pub fn from_transactions(transactions: Vec<BTreeSet<Item>>) -> Self {
        TransactionDB {
            tids: (0..transactions.len()).collect(),
            transactions,
        }
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    /// Distinct items in canonical order.
    pub fn items(&self) -> BTreeSet<Item> {
        self.transactions.iter().flatten().copied().collect()
    }

    pub fn item_counts(&self) -> BTreeMap<Item, usize> {
        let mut counts = BTreeMap::new();
        for item in self.transactions.iter().flatten() {
            *counts.entry(*item).or_insert(0) += 1;
        }
        counts
    }

    /// One line per transaction, items separated by spaces.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for tr in &self.transactions {
            let line: Vec<String> = tr.iter().map(Item::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let transactions = text
            .lines()
            .map(|line| line.split_whitespace().map(str::parse).collect::<Result<BTreeSet<Item>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(TransactionDB::from_transactions(transactions))
    }
}

/// One transaction per scored point holding that point's best (or bad)
/// ids of all three components. Dropped points have no transaction.
pub fn build_db(best: &BestModelSets, which: Polarity) -> Result<TransactionDB> {
    if best.points.is_empty() {
        return Err(Error::invalid("no scored points to build transactions from"));
    }
    let mut db = TransactionDB::default();
    for p in &best.points {
        let sets = match which {
            Polarity::Good => &p.best,
            Polarity::Bad => &p.bad,
        };
        let tr = Role::ALL
            .iter()
            .flat_map(|r| sets[r.index()].iter().map(move |id| Item::new(*r, *id)))
            .collect();
        db.tids.push(p.t);
        db.transactions.push(tr);
    }
    if db.transactions.iter().all(BTreeSet::is_empty) {
        return Err(Error::EmptyDatabase);
    }
    Ok(db)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClosedItemset {
    pub items: Vec<Item>,
    pub support: usize,
    pub tids: Vec<usize>,
}

/// `ceil(ratio × n)`, clamped to at least 1.
pub fn minsup_count(ratio: f64, n: usize) -> usize {
    ((ratio * n as f64 - 1e-9).ceil().max(1.0)) as usize
}

/// Model ids per component.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ComponentSets {
    pub trend: BTreeSet<u32>,
    pub seasonal: BTreeSet<u32>,
    pub irregular: BTreeSet<u32>,
}

impl ComponentSets {
    pub fn get(&self, role: Role) -> &BTreeSet<u32> {
        match role {
            Role::Trend => &self.trend,
            Role::Seasonal => &self.seasonal,
            Role::Irregular => &self.irregular,
        }
    }

    pub fn get_mut(&mut self, role: Role) -> &mut BTreeSet<u32> {
        match role {
            Role::Trend => &mut self.trend,
            Role::Seasonal => &mut self.seasonal,
            Role::Irregular => &mut self.irregular,
        }
    }

    pub fn is_complete(&self) -> bool {
        Role::ALL.iter().all(|r| !self.get(*r).is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConsistentSets {
    pub good: ComponentSets,
    pub bad: ComponentSets,
}

/// Union of the items of all closed sets, partitioned by component.
///
/// A component with no item in any closed set falls back to its single most
/// frequent item in `db` (smallest id on ties); it stays empty only when the
/// database has no item of that component at all.
pub fn consistent_models(closed: &[ClosedItemset], db: &TransactionDB) -> Result<ComponentSets> {
    let counts = db.item_counts();
    if counts.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    let mut sets = ComponentSets::default();
    for item in closed.iter().flat_map(|c| c.items.iter()) {
        sets.get_mut(item.role).insert(item.id);
    }
    for role in Role::ALL {
        if !sets.get(role).is_empty() {
            continue;
        }
        let top = counts
            .iter()
            .filter(|(i, _)| i.role == role)
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.id.cmp(&a.0.id)));
        if let Some((item, _)) = top {
            sets.get_mut(role).insert(item.id);
        }
    }
    Ok(sets)
}

/// Mines `db` at `ceil(minsup_ratio × |db|)` and extracts consistent sets.
pub fn mine_consistent(db: &TransactionDB, minsup_ratio: f64) -> Result<(Vec<ClosedItemset>, ComponentSets)> {
    let closed = charm(db, minsup_count(minsup_ratio, db.len()));
    let sets = consistent_models(&closed, db)?;
    Ok((closed, sets))
}
