//! Per-pair agency metrics and their user/item aggregations.

use serde::{Deserialize, Serialize};

use crate::dataset::RatingsDataset;
use crate::error::{Error, Result};

/// Audited outcome of one (user, item, selection rule) solve. `beta` is the
/// soft-max temperature; epsilon-greedy rows carry NaN there and in the
/// fields that only apply to the smooth solver.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMetrics {
    pub user: usize,
    pub item: usize,
    pub beta: f64,
    pub rho_star: f64,
    pub rho_base: f64,
    pub lift: f64,
    pub rank_gain: i64,
    pub converged: bool,
    pub iterations: u64,
    pub grad_norm: f64,
    /// 0 = clean solve; anything else encodes the failure of this pair.
    pub error_code: u32,
}

impl PairMetrics {
    pub fn is_clean(&self) -> bool {
        self.error_code == 0
    }
}

/// Fraction of the probabilities strictly above the threshold.
pub fn discovery(rhos: &[f64], threshold: f64) -> Result<f64> {
    if rhos.is_empty() {
        return Err(Error::Domain("discovery over an empty list".into()));
    }
    let hits = rhos.iter().filter(|&&r| r > threshold).count();
    Ok(hits as f64 / rhos.len() as f64)
}

/// Mean recommendation probability over the users targeting one item.
pub fn availability(rhos: &[f64]) -> Result<f64> {
    if rhos.is_empty() {
        return Err(Error::Domain("availability over an empty list".into()));
    }
    Ok(rhos.iter().sum::<f64>() / rhos.len() as f64)
}

/// Multiplicative agency over one item: best case over baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lift {
    pub lift: f64,
    pub log_lift: f64,
}

/// `rho_base <= 0` yields the infinite-lift sentinel.
pub fn lift(rho_star: f64, rho_base: f64) -> Lift {
    if rho_base <= 0.0 {
        return Lift {
            lift: f64::INFINITY,
            log_lift: f64::INFINITY,
        };
    }
    let value = rho_star / rho_base;
    Lift {
        lift: value,
        log_lift: value.ln(),
    }
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // ties share the average of the ranks they span (1-based)
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of average-ranked data.
/// Returns `None` when either input is constant (the statistic is
/// undefined there).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::Domain(
            "rank correlation needs at least three observations".into(),
        ));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite observation".into()));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for i in 0..x.len() {
        let dx = rx[i] - mean;
        let dy = ry[i] - mean;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Ok(None);
    }
    Ok(Some(cov / (var_x * var_y).sqrt()))
}

/// Per-user discovery aggregate for one selection setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAggregate {
    pub user: usize,
    pub n_targets: usize,
    pub threshold: f64,
    pub baseline_discovery: f64,
    pub max_discovery: f64,
}

/// Per-item availability aggregate for one selection setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemAggregate {
    pub item: usize,
    pub n_users: usize,
    pub baseline_availability: f64,
    pub max_availability: f64,
}

/// Builds user- and item-level aggregates from per-pair rows of a single
/// selection setting. The discovery threshold is better-than-uniform over
/// each user's solved targets; rows with errors count toward the target
/// total but contribute no probability.
pub fn aggregate_pairs(pairs: &[PairMetrics]) -> (Vec<UserAggregate>, Vec<ItemAggregate>) {
    use std::collections::BTreeMap;
    let mut by_user: BTreeMap<usize, Vec<&PairMetrics>> = BTreeMap::new();
    let mut by_item: BTreeMap<usize, Vec<&PairMetrics>> = BTreeMap::new();
    for pair in pairs {
        by_user.entry(pair.user).or_default().push(pair);
        by_item.entry(pair.item).or_default().push(pair);
    }
    let users = by_user
        .into_iter()
        .map(|(user, rows)| {
            let n_targets = rows.len();
            let threshold = 1.0 / n_targets as f64;
            let clean: Vec<&&PairMetrics> = rows.iter().filter(|p| p.is_clean()).collect();
            let count_above = |f: &dyn Fn(&PairMetrics) -> f64| {
                clean.iter().filter(|p| f(p) > threshold).count() as f64 / n_targets as f64
            };
            UserAggregate {
                user,
                n_targets,
                threshold,
                baseline_discovery: count_above(&|p| p.rho_base),
                max_discovery: count_above(&|p| p.rho_star),
            }
        })
        .collect();
    let items = by_item
        .into_iter()
        .map(|(item, rows)| {
            let clean: Vec<&&PairMetrics> = rows.iter().filter(|p| p.is_clean()).collect();
            let n_users = clean.len();
            let mean = |f: &dyn Fn(&PairMetrics) -> f64| {
                if n_users == 0 {
                    f64::NAN
                } else {
                    clean.iter().map(|p| f(p)).sum::<f64>() / n_users as f64
                }
            };
            ItemAggregate {
                item,
                n_users,
                baseline_availability: mean(&|p| p.rho_base),
                max_availability: mean(&|p| p.rho_star),
            }
        })
        .collect();
    (users, items)
}

/// Spearman correlations between dataset statistics and the aggregates.
/// Missing entries mean the statistic was undefined (constant input or too
/// few observations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    pub popularity_vs_baseline_availability: Option<f64>,
    pub popularity_vs_max_availability: Option<f64>,
    pub popularity_vs_rating_count: Option<f64>,
    pub experience_vs_baseline_discovery: Option<f64>,
    pub experience_vs_max_discovery: Option<f64>,
}

/// One quantile bin of a bias table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    pub bin: usize,
    pub count: usize,
    pub stat_lo: f64,
    pub stat_hi: f64,
    pub mean_baseline: f64,
    pub mean_best: f64,
}

/// Quantile-binned distributions behind the popularity and experience
/// analyses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasTables {
    pub correlations: Correlations,
    pub popularity_bins: Vec<BinSummary>,
    pub experience_bins: Vec<BinSummary>,
}

/// Splits (statistic, baseline, best) triples into `bins` equal-count
/// groups by ascending statistic and summarizes each.
pub fn quantile_bins(mut rows: Vec<(f64, f64, f64)>, bins: usize) -> Vec<BinSummary> {
    if rows.is_empty() || bins == 0 {
        return Vec::new();
    }
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let n = rows.len();
    let mut out = Vec::new();
    for b in 0..bins {
        let start = b * n / bins;
        let end = (b + 1) * n / bins;
        if start >= end {
            continue;
        }
        let chunk = &rows[start..end];
        let count = chunk.len() as f64;
        out.push(BinSummary {
            bin: b,
            count: chunk.len(),
            stat_lo: chunk.first().unwrap().0,
            stat_hi: chunk.last().unwrap().0,
            mean_baseline: chunk.iter().map(|r| r.1).sum::<f64>() / count,
            mean_best: chunk.iter().map(|r| r.2).sum::<f64>() / count,
        });
    }
    out
}

/// Correlates item popularity (mean observed rating) with availability and
/// user experience (number of rated items) with discovery, and emits the
/// quartile tables behind those comparisons.
pub fn bias_tables(
    users: &[UserAggregate],
    items: &[ItemAggregate],
    dataset: &RatingsDataset,
) -> BiasTables {
    let item_means = dataset.item_mean_ratings();
    let item_counts = dataset.item_rating_counts();

    // items without observed ratings have no popularity statistic
    let mut popularity = Vec::new();
    let mut base_avail = Vec::new();
    let mut max_avail = Vec::new();
    let mut counts = Vec::new();
    for item in items {
        if item.n_users == 0 {
            continue;
        }
        if let Some(mean) = item_means[item.item] {
            popularity.push(mean);
            base_avail.push(item.baseline_availability);
            max_avail.push(item.max_availability);
            counts.push(item_counts[item.item] as f64);
        }
    }
    let mut experience = Vec::new();
    let mut base_disc = Vec::new();
    let mut max_disc = Vec::new();
    for user in users {
        experience.push(dataset.observed_count(user.user) as f64);
        base_disc.push(user.baseline_discovery);
        max_disc.push(user.max_discovery);
    }

    let corr = |x: &[f64], y: &[f64]| -> Option<f64> {
        if x.len() < 3 {
            return None;
        }
        spearman(x, y).ok().flatten()
    };
    let correlations = Correlations {
        popularity_vs_baseline_availability: corr(&popularity, &base_avail),
        popularity_vs_max_availability: corr(&popularity, &max_avail),
        popularity_vs_rating_count: corr(&popularity, &counts),
        experience_vs_baseline_discovery: corr(&experience, &base_disc),
        experience_vs_max_discovery: corr(&experience, &max_disc),
    };
    let popularity_rows = popularity
        .iter()
        .zip(base_avail.iter().zip(&max_avail))
        .map(|(&p, (&b, &m))| (p, b, m))
        .collect();
    let experience_rows = experience
        .iter()
        .zip(base_disc.iter().zip(&max_disc))
        .map(|(&e, (&b, &m))| (e, b, m))
        .collect();
    BiasTables {
        correlations,
        popularity_bins: quantile_bins(popularity_rows, 4),
        experience_bins: quantile_bins(experience_rows, 4),
    }
}

/// Mean value per group label, sorted by label; the generic group-by used
/// for demographic summaries.
pub fn group_means(labels: &[String], values: &[f64]) -> Vec<(String, f64, usize)> {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<&String, (f64, usize)> = BTreeMap::new();
    for (label, &value) in labels.iter().zip(values) {
        let entry = groups.entry(label).or_insert((0.0, 0));
        entry.0 += value;
        entry.1 += 1;
    }
    groups
        .into_iter()
        .map(|(label, (sum, count))| (label.clone(), sum / count as f64, count))
        .collect()
}
