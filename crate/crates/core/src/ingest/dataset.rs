use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Bidirectional map between external ids and dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds `0..n` mapped to the ids `"0"`, `"1"`, ...
    pub fn sequential(n: usize) -> Self {
        let mut map = Self::new();
        for i in 0..n {
            map.intern(&i.to_string());
        }
        map
    }

    /// Returns the dense index for `id`, assigning the next one if unseen.
    pub fn intern(&mut self, id: &str) -> usize {
        if let Some(&idx) = self.index.get(id) {
            return idx;
        }
        let idx = self.ids.len();
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), idx);
        idx
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, idx: usize) -> &str {
        &self.ids[idx]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// A binary user-item interaction matrix stored row-compressed by user.
///
/// Rows are sorted and duplicate-free. Train and test partitions of the same
/// source share their id maps, so indices are comparable across them.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionDataset {
    users: Arc<IdMap>,
    items: Arc<IdMap>,
    indptr: Vec<usize>,
    indices: Vec<u32>,
}

impl InteractionDataset {
    /// Builds a dataset from `(user, item)` index pairs. Duplicates collapse.
    pub fn from_pairs(
        users: Arc<IdMap>,
        items: Arc<IdMap>,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = users.len();
        let m = items.len();
        if n == 0 || m == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (u, i) in pairs {
            if u >= n || i >= m {
                return Err(Error::Config(format!("pair ({u}, {i}) outside a {n}x{m} matrix")));
            }
            rows[u].push(i as u32);
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            indices.extend_from_slice(&row);
            indptr.push(indices.len());
        }
        Ok(Self {
            users,
            items,
            indptr,
            indices,
        })
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    /// Number of interactions.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn user_ids(&self) -> &Arc<IdMap> {
        &self.users
    }

    pub fn item_ids(&self) -> &Arc<IdMap> {
        &self.items
    }

    /// Items of `user`, sorted ascending.
    pub fn user_items(&self, user: usize) -> &[u32] {
        &self.indices[self.indptr[user]..self.indptr[user + 1]]
    }

    pub fn contains(&self, user: usize, item: usize) -> bool {
        self.user_items(user).binary_search(&(item as u32)).is_ok()
    }

    /// The `k`-th interaction in (user, item) order.
    pub fn pair_at(&self, k: usize) -> (usize, usize) {
        // partition_point finds the first row whose end exceeds k.
        let user = self.indptr[1..].partition_point(|&end| end <= k);
        (user, self.indices[k] as usize)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_users()).flat_map(move |u| self.user_items(u).iter().map(move |&i| (u, i as usize)))
    }

    /// Interaction count per item over the full catalog.
    pub fn item_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_items()];
        for &i in &self.indices {
            counts[i as usize] += 1;
        }
        counts
    }

    /// A dataset over the same universes with a different set of pairs.
    pub fn with_pairs(&self, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::from_pairs(self.users.clone(), self.items.clone(), pairs)
    }
}
