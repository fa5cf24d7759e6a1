//! Action spaces (which ratings a user may strategically set) and target
//! sets (which items the selection rule chooses among).

use serde::{Deserialize, Serialize};

use crate::dataset::{RatingRange, RatingsDataset};
use crate::error::{Error, Result};

/// How the strategically editable items of a user are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionKind {
    /// Edit ratings of already-seen items.
    HistoryEdits,
    /// Assign ratings to unseen items.
    FutureEdits,
    /// Assign ratings to the top scoring unseen items.
    NextK,
}

/// The set of items whose ratings a user may set, together with the interval
/// each edited rating must lie in.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpace {
    user: usize,
    kind: ActionKind,
    items: Vec<usize>,
    bounds: RatingRange,
}

impl ActionSpace {
    /// Validates the action items against the user's observed set:
    /// history edits must be observed, future edits must not be.
    pub fn new(
        user: usize,
        kind: ActionKind,
        mut items: Vec<usize>,
        bounds: RatingRange,
        dataset: &RatingsDataset,
    ) -> Result<Self> {
        if user >= dataset.n_users() {
            return Err(Error::Domain(format!("user {user} out of range")));
        }
        if items.is_empty() {
            return Err(Error::Domain("empty action space".into()));
        }
        items.sort_unstable();
        for w in items.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Domain(format!("duplicate action item {}", w[0])));
            }
        }
        for &i in &items {
            if i >= dataset.n_items() {
                return Err(Error::Domain(format!("action item {i} out of range")));
            }
            let observed = dataset.is_observed(user, i);
            match kind {
                ActionKind::HistoryEdits if !observed => {
                    return Err(Error::Domain(format!(
                        "history action item {i} was never rated by user {user}"
                    )));
                }
                ActionKind::FutureEdits | ActionKind::NextK if observed => {
                    return Err(Error::Domain(format!(
                        "future action item {i} was already rated by user {user}"
                    )));
                }
                _ => {}
            }
        }
        Ok(Self {
            user,
            kind,
            items,
            bounds,
        })
    }

    pub fn user(&self) -> usize {
        self.user
    }

    pub fn kind(&self) -> ActionKind {
        self.kind
    }

    /// Action item ids, ascending; action vector coordinates follow this order.
    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn bounds(&self) -> RatingRange {
        self.bounds
    }

    pub fn contains(&self, item: usize) -> bool {
        self.items.binary_search(&item).is_ok()
    }
}

/// Candidate items the selection rule chooses among for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    user: usize,
    items: Vec<usize>,
    repeatable: bool,
}

impl TargetSet {
    /// Targets never overlap the action items; without repeatable
    /// consumption they must also avoid the user's observed set.
    pub fn new(
        user: usize,
        mut items: Vec<usize>,
        repeatable: bool,
        dataset: &RatingsDataset,
        actions: &ActionSpace,
    ) -> Result<Self> {
        if items.len() < 2 {
            return Err(Error::Domain(format!(
                "target set needs at least two items, got {}",
                items.len()
            )));
        }
        items.sort_unstable();
        for w in items.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Domain(format!("duplicate target item {}", w[0])));
            }
        }
        for &i in &items {
            if i >= dataset.n_items() {
                return Err(Error::Domain(format!("target item {i} out of range")));
            }
            if actions.contains(i) {
                return Err(Error::Domain(format!(
                    "target item {i} is also an action item"
                )));
            }
            if !repeatable && dataset.is_observed(user, i) {
                return Err(Error::Domain(format!(
                    "target item {i} was already consumed by user {user}"
                )));
            }
        }
        Ok(Self {
            user,
            items,
            repeatable,
        })
    }

    pub fn user(&self) -> usize {
        self.user
    }

    /// Target item ids, ascending.
    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn repeatable(&self) -> bool {
        self.repeatable
    }

    pub fn position(&self, item: usize) -> Option<usize> {
        self.items.binary_search(&item).ok()
    }
}

/// The do-nothing action: observed action items keep their historical
/// rating, unseen ones take their predicted score clipped to the bounds.
pub fn baseline_action(
    space: &ActionSpace,
    dataset: &RatingsDataset,
    scores: &[f64],
) -> Vec<f64> {
    space
        .items()
        .iter()
        .map(|&i| match dataset.rating(space.user(), i) {
            Some(r) => space.bounds().clip(r),
            None => space.bounds().clip(scores[i]),
        })
        .collect()
}
