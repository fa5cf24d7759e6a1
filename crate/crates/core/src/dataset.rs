//! Sparse rating data with contiguous 0-based user and item ids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval of admissible rating values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingRange {
    pub lo: f64,
    pub hi: f64,
}

impl RatingRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::Domain(format!("invalid rating range [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.lo && value <= self.hi
    }

    pub fn clip(&self, value: f64) -> f64 {
        value.clamp(self.lo, self.hi)
    }
}

/// One observed rating triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: usize,
    pub item: usize,
    pub value: f64,
}

/// Sparse user x item rating table.
///
/// Triples are stored sorted by (user, item), so the observed set of a user
/// is a contiguous slice. Construction enforces that every (user, item) pair
/// appears at most once and that every value lies inside the rating range.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsDataset {
    n_users: usize,
    n_items: usize,
    range: RatingRange,
    ratings: Vec<Rating>,
    offsets: Vec<usize>,
}

impl RatingsDataset {
    pub fn new(
        n_users: usize,
        n_items: usize,
        mut ratings: Vec<Rating>,
        range: RatingRange,
    ) -> Result<Self> {
        for r in &ratings {
            if r.user >= n_users {
                return Err(Error::Data(format!(
                    "user id {} out of range (n_users = {n_users})",
                    r.user
                )));
            }
            if r.item >= n_items {
                return Err(Error::Data(format!(
                    "item id {} out of range (n_items = {n_items})",
                    r.item
                )));
            }
            if !r.value.is_finite() {
                return Err(Error::Data(format!(
                    "non-finite rating for pair ({}, {})",
                    r.user, r.item
                )));
            }
            if !range.contains(r.value) {
                return Err(Error::Data(format!(
                    "rating {} for pair ({}, {}) outside [{}, {}]",
                    r.value, r.user, r.item, range.lo, range.hi
                )));
            }
        }
        ratings.sort_by(|a, b| (a.user, a.item).cmp(&(b.user, b.item)));
        for w in ratings.windows(2) {
            if w[0].user == w[1].user && w[0].item == w[1].item {
                return Err(Error::Data(format!(
                    "duplicate rating for pair ({}, {})",
                    w[0].user, w[0].item
                )));
            }
        }
        let mut offsets = vec![0usize; n_users + 1];
        for r in &ratings {
            offsets[r.user + 1] += 1;
        }
        for u in 0..n_users {
            offsets[u + 1] += offsets[u];
        }
        Ok(Self {
            n_users,
            n_items,
            range,
            ratings,
            offsets,
        })
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    pub fn range(&self) -> RatingRange {
        self.range
    }

    /// Fraction of the user x item grid that is observed.
    pub fn density(&self) -> f64 {
        if self.n_users == 0 || self.n_items == 0 {
            return 0.0;
        }
        self.ratings.len() as f64 / (self.n_users as f64 * self.n_items as f64)
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    /// Triples of one user, sorted by item id.
    pub fn user_ratings(&self, user: usize) -> &[Rating] {
        &self.ratings[self.offsets[user]..self.offsets[user + 1]]
    }

    /// Observed item ids of a user, ascending.
    pub fn observed_items(&self, user: usize) -> impl Iterator<Item = usize> + '_ {
        self.user_ratings(user).iter().map(|r| r.item)
    }

    pub fn observed_count(&self, user: usize) -> usize {
        self.offsets[user + 1] - self.offsets[user]
    }

    pub fn is_observed(&self, user: usize, item: usize) -> bool {
        self.user_ratings(user)
            .binary_search_by(|r| r.item.cmp(&item))
            .is_ok()
    }

    pub fn rating(&self, user: usize, item: usize) -> Option<f64> {
        let row = self.user_ratings(user);
        row.binary_search_by(|r| r.item.cmp(&item))
            .ok()
            .map(|pos| row[pos].value)
    }

    /// Dense rating row of a user; unobserved entries are zero.
    pub fn dense_row(&self, user: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.n_items];
        for r in self.user_ratings(user) {
            row[r.item] = r.value;
        }
        row
    }

    pub fn global_mean(&self) -> Option<f64> {
        if self.ratings.is_empty() {
            return None;
        }
        Some(self.ratings.iter().map(|r| r.value).sum::<f64>() / self.ratings.len() as f64)
    }

    /// Number of ratings each item received.
    pub fn item_rating_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_items];
        for r in &self.ratings {
            counts[r.item] += 1;
        }
        counts
    }

    /// Mean observed rating per item; `None` for unrated items.
    pub fn item_mean_ratings(&self) -> Vec<Option<f64>> {
        let mut sums = vec![0.0; self.n_items];
        let mut counts = vec![0usize; self.n_items];
        for r in &self.ratings {
            sums[r.item] += r.value;
            counts[r.item] += 1;
        }
        sums.iter()
            .zip(&counts)
            .map(|(s, &c)| if c > 0 { Some(s / c as f64) } else { None })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn range() -> RatingRange {
        RatingRange::new(1.0, 5.0).unwrap()
    }

    fn triple(user: usize, item: usize, value: f64) -> Rating {
        Rating { user, item, value }
    }

    #[test]
    fn builds_and_indexes() {
        let ds = RatingsDataset::new(
            2,
            2,
            vec![triple(1, 0, 2.0), triple(0, 1, 4.0), triple(0, 0, 3.0)],
            range(),
        )
        .unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.density(), 0.75);
        assert_eq!(ds.observed_items(0).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(ds.rating(1, 0), Some(2.0));
        assert_eq!(ds.rating(1, 1), None);
        assert!(ds.is_observed(0, 1));
        assert!(!ds.is_observed(1, 1));
    }

    #[test]
    fn rejects_duplicate_pair() {
        let err = RatingsDataset::new(
            1,
            2,
            vec![triple(0, 1, 2.0), triple(0, 1, 3.0)],
            range(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn rejects_out_of_range_value() {
        let err = RatingsDataset::new(1, 1, vec![triple(0, 0, 9.0)], range()).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn dense_row_zero_fills() {
        let ds = RatingsDataset::new(1, 3, vec![triple(0, 2, 5.0)], range()).unwrap();
        assert_eq!(ds.dense_row(0), vec![0.0, 0.0, 5.0]);
    }
}
