use std::fmt;
use std::path::Path;

use super::dataset::InteractionDataset;
use crate::error::{Error, Result};

/// Popularity tier of an item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    Head,
    Mid,
    Tail,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::Head, Group::Mid, Group::Tail];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Head => "H",
            Group::Mid => "M",
            Group::Tail => "T",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Head/Mid/Tail item assignment from training counts.
#[derive(Debug, Clone, PartialEq)]
pub struct PopularityGrouping {
    counts: Vec<u64>,
    groups: Vec<Group>,
    /// Lowest Head count and highest Tail count.
    boundaries: (u64, u64),
}

impl PopularityGrouping {
    /// Groups items from raw counts: sort by (count desc, index asc), the
    /// first `ceil(0.2 m)` are Head, the last `floor(0.2 m)` are Tail.
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let m = counts.len();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
        // exact integer form of ceil(0.2 m) and floor(0.2 m)
        let n_head = m.div_ceil(5);
        let n_tail = m / 5;
        let mut groups = vec![Group::Mid; m];
        for (rank, &item) in order.iter().enumerate() {
            groups[item] = if rank < n_head {
                Group::Head
            } else if rank >= m - n_tail {
                Group::Tail
            } else {
                Group::Mid
            };
        }
        let head_min = order[..n_head].last().map_or(0, |&i| counts[i]);
        let tail_max = order[m - n_tail..].first().map_or(0, |&i| counts[i]);
        Self {
            counts,
            groups,
            boundaries: (head_min, tail_max),
        }
    }

    pub fn group_of(&self, item: usize) -> Group {
        self.groups[item]
    }

    pub fn count(&self, item: usize) -> u64 {
        self.counts[item]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn boundaries(&self) -> (u64, u64) {
        self.boundaries
    }

    pub fn n_items(&self) -> usize {
        self.groups.len()
    }

    pub fn size(&self, group: Group) -> usize {
        self.groups.iter().filter(|&&g| g == group).count()
    }

    /// Share of each group among `items`. `None` for an empty slice.
    pub fn distribution_of<I>(&self, items: I) -> Option<GroupDistribution>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut tally = [0usize; 3];
        for item in items {
            tally[self.group_of(item).index()] += 1;
        }
        let total: usize = tally.iter().sum();
        if total == 0 {
            return None;
        }
        let t = total as f64;
        Some(GroupDistribution {
            head: tally[0] as f64 / t,
            mid: tally[1] as f64 / t,
            tail: tally[2] as f64 / t,
        })
    }
}

pub fn assign_popularity_groups(train: &InteractionDataset) -> PopularityGrouping {
    PopularityGrouping::from_counts(train.item_counts())
}

/// Head/Mid/Tail proportions of a set of items.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupDistribution {
    pub head: f64,
    pub mid: f64,
    pub tail: f64,
}

impl GroupDistribution {
    pub fn new(head: f64, mid: f64, tail: f64) -> Self {
        Self { head, mid, tail }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.head, self.mid, self.tail]
    }

    pub fn get(&self, group: Group) -> f64 {
        self.as_array()[group.index()]
    }
}

/// Group proportions of `user`'s items in `interactions`.
pub fn profile_distribution(
    user: usize,
    interactions: &InteractionDataset,
    grouping: &PopularityGrouping,
) -> Result<GroupDistribution> {
    grouping
        .distribution_of(interactions.user_items(user).iter().map(|&i| i as usize))
        .ok_or(Error::EmptyProfile { user })
}

/// Writes `item_id,count,group` rows.
pub fn write_grouping_csv(
    path: impl AsRef<Path>,
    grouping: &PopularityGrouping,
    ds: &InteractionDataset,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["item_id", "count", "group"])
        .map_err(|e| Error::csv(path, e))?;
    for item in 0..grouping.n_items() {
        w.write_record([
            ds.item_ids().id(item),
            &grouping.count(item).to_string(),
            grouping.group_of(item).as_str(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
