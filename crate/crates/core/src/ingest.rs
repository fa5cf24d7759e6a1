//! File parsing, implicit-feedback transforms, seeded splits and
//! subsampling.
//!
//! Input files are delimiter-separated UTF-8 text with one interaction per
//! line. Column positions are configurable so both `tab`-separated and
//! `::`-delimited layouts parse without preprocessing.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Rating, RatingRange, RatingsDataset};
use crate::error::{Error, Result};

/// One raw interaction before ids are assigned: an explicit rating or an
/// event count keyed by the original identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct RawInteraction {
    pub user_key: String,
    pub item_key: String,
    pub value: f64,
}

/// Describes how a line of an input file maps to an interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileFormat {
    /// Field separator, e.g. "\t", "," or "::".
    pub delimiter: String,
    pub user_col: usize,
    pub item_col: usize,
    pub value_col: usize,
}

impl Default for FileFormat {
    fn default() -> Self {
        Self {
            delimiter: "\t".into(),
            user_col: 0,
            item_col: 1,
            value_col: 2,
        }
    }
}

/// A dataset together with the original keys behind each contiguous id.
#[derive(Debug, Clone)]
pub struct IndexedDataset {
    pub dataset: RatingsDataset,
    pub user_keys: Vec<String>,
    pub item_keys: Vec<String>,
}

fn parse_lines<R: Read>(reader: R, format: &FileFormat) -> Result<Vec<RawInteraction>> {
    if format.delimiter.is_empty() {
        return Err(Error::Config("empty delimiter".into()));
    }
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(format.delimiter.as_str()).collect();
        let need = format.user_col.max(format.item_col).max(format.value_col) + 1;
        if fields.len() < need {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected at least {need} fields, found {}", fields.len()),
            });
        }
        let user_key = fields[format.user_col].trim();
        let item_key = fields[format.item_col].trim();
        if user_key.is_empty() || item_key.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty user or item key".into(),
            });
        }
        let value: f64 = fields[format.value_col].trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("malformed value '{}'", fields[format.value_col]),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("non-finite value {value}"),
            });
        }
        out.push(RawInteraction {
            user_key: user_key.to_string(),
            item_key: item_key.to_string(),
            value,
        });
    }
    Ok(out)
}

/// Reads every interaction of a file without assigning ids.
pub fn parse_interactions(path: &Path, format: &FileFormat) -> Result<Vec<RawInteraction>> {
    let file = std::fs::File::open(path)?;
    parse_lines(file, format)
}

/// Assigns contiguous 0-based ids in first-appearance order and builds the
/// dataset. Duplicate (user, item) pairs are rejected.
pub fn index_interactions(
    interactions: &[RawInteraction],
    range: RatingRange,
) -> Result<IndexedDataset> {
    let mut user_ids: HashMap<&str, usize> = HashMap::new();
    let mut item_ids: HashMap<&str, usize> = HashMap::new();
    let mut user_keys = Vec::new();
    let mut item_keys = Vec::new();
    let mut triples = Vec::with_capacity(interactions.len());
    for inter in interactions {
        let user = *user_ids.entry(&inter.user_key).or_insert_with(|| {
            user_keys.push(inter.user_key.clone());
            user_keys.len() - 1
        });
        let item = *item_ids.entry(&inter.item_key).or_insert_with(|| {
            item_keys.push(inter.item_key.clone());
            item_keys.len() - 1
        });
        triples.push(Rating {
            user,
            item,
            value: inter.value,
        });
    }
    let dataset = RatingsDataset::new(user_keys.len(), item_keys.len(), triples, range)?;
    Ok(IndexedDataset {
        dataset,
        user_keys,
        item_keys,
    })
}

/// Parses a ratings file with explicit values in the given range.
pub fn parse_ratings(
    path: &Path,
    format: &FileFormat,
    range: RatingRange,
) -> Result<IndexedDataset> {
    let interactions = parse_interactions(path, format)?;
    index_interactions(&interactions, range)
}

/// Turns nonnegative event counts into ratings r = ln(count + 1) with range
/// [0, hi]. The natural logarithm is used throughout; transformed values
/// above `hi` are clipped so the range invariant holds.
pub fn implicit_transform(interactions: &[RawInteraction], hi: f64) -> Result<IndexedDataset> {
    if !hi.is_finite() || hi <= 0.0 {
        return Err(Error::Domain(format!(
            "implicit rating ceiling must be positive, got {hi}"
        )));
    }
    let mut transformed = Vec::with_capacity(interactions.len());
    for inter in interactions {
        if inter.value < 0.0 {
            return Err(Error::Domain(format!(
                "negative count {} for pair ({}, {})",
                inter.value, inter.user_key, inter.item_key
            )));
        }
        transformed.push(RawInteraction {
            user_key: inter.user_key.clone(),
            item_key: inter.item_key.clone(),
            value: (inter.value + 1.0).ln().min(hi),
        });
    }
    index_interactions(&transformed, RatingRange::new(0.0, hi)?)
}

/// Parses a two-column key file (e.g. item -> category, entity -> group)
/// in the same delimiter format; the first two columns are used.
pub fn parse_key_map(path: &Path, delimiter: &str) -> Result<HashMap<String, String>> {
    if delimiter.is_empty() {
        return Err(Error::Config("empty delimiter".into()));
    }
    let file = std::fs::File::open(path)?;
    let mut map = HashMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(delimiter).collect();
        if fields.len() < 2 {
            return Err(Error::Parse {
                line: line_no,
                message: "expected two fields".into(),
            });
        }
        map.insert(fields[0].trim().to_string(), fields[1].trim().to_string());
    }
    Ok(map)
}

/// Sums interaction values per (user, mapped category), preserving
/// first-appearance order. Every item key must be present in the map.
pub fn aggregate_categories(
    interactions: &[RawInteraction],
    item_to_category: &HashMap<String, String>,
) -> Result<Vec<RawInteraction>> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut sums: HashMap<(String, String), f64> = HashMap::new();
    for inter in interactions {
        let category = item_to_category.get(&inter.item_key).ok_or_else(|| {
            Error::Data(format!("item key '{}' missing from category map", inter.item_key))
        })?;
        let key = (inter.user_key.clone(), category.clone());
        if !sums.contains_key(&key) {
            order.push(key.clone());
        }
        *sums.entry(key).or_insert(0.0) += inter.value;
    }
    Ok(order
        .into_iter()
        .map(|key| {
            let value = sums[&key];
            RawInteraction {
                user_key: key.0,
                item_key: key.1,
                value,
            }
        })
        .collect())
}

/// Disjoint partition of the rating triples, uniform under the seeded
/// generator. The test part receives floor(test_fraction * n) triples.
/// Both parts keep the full user/item universe.
pub fn split(
    dataset: &RatingsDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(RatingsDataset, RatingsDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Domain(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = dataset.len();
    let n_test = (test_fraction * n as f64).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let test_idx: std::collections::HashSet<usize> = order[..n_test].iter().copied().collect();
    let mut train = Vec::with_capacity(n - n_test);
    let mut test = Vec::with_capacity(n_test);
    for (i, r) in dataset.ratings().iter().enumerate() {
        if test_idx.contains(&i) {
            test.push(*r);
        } else {
            train.push(*r);
        }
    }
    Ok((
        RatingsDataset::new(dataset.n_users(), dataset.n_items(), train, dataset.range())?,
        RatingsDataset::new(dataset.n_users(), dataset.n_items(), test, dataset.range())?,
    ))
}

/// Keeps a seeded sample of users and items (floor of fraction * count) and
/// every rating among them, reindexed contiguously in ascending original-id
/// order. Also returns the retained original ids.
pub fn subsample_indexed(
    dataset: &RatingsDataset,
    user_fraction: f64,
    item_fraction: f64,
    seed: u64,
) -> Result<(RatingsDataset, Vec<usize>, Vec<usize>)> {
    for (name, f) in [("user", user_fraction), ("item", item_fraction)] {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::Domain(format!(
                "{name} fraction must lie in (0, 1], got {f}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |count: usize, fraction: f64, rng: &mut ChaCha8Rng| -> Vec<usize> {
        let k = ((fraction * count as f64).floor() as usize).min(count);
        let mut ids: Vec<usize> = (0..count).collect();
        ids.shuffle(rng);
        let mut kept: Vec<usize> = ids.into_iter().take(k).collect();
        kept.sort_unstable();
        kept
    };
    let users = pick(dataset.n_users(), user_fraction, &mut rng);
    let items = pick(dataset.n_items(), item_fraction, &mut rng);
    if users.is_empty() || items.is_empty() {
        return Err(Error::Data("subsample kept no users or no items".into()));
    }
    let user_map: HashMap<usize, usize> =
        users.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let item_map: HashMap<usize, usize> =
        items.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let triples: Vec<Rating> = dataset
        .ratings()
        .iter()
        .filter_map(|r| {
            let user = *user_map.get(&r.user)?;
            let item = *item_map.get(&r.item)?;
            Some(Rating {
                user,
                item,
                value: r.value,
            })
        })
        .collect();
    if triples.is_empty() {
        return Err(Error::Data("subsample kept no ratings".into()));
    }
    let sampled = RatingsDataset::new(users.len(), items.len(), triples, dataset.range())?;
    Ok((sampled, users, items))
}

/// See [`subsample_indexed`]; drops the id bookkeeping.
pub fn subsample(
    dataset: &RatingsDataset,
    user_fraction: f64,
    item_fraction: f64,
    seed: u64,
) -> Result<RatingsDataset> {
    subsample_indexed(dataset, user_fraction, item_fraction, seed).map(|(ds, _, _)| ds)
}

/// Canonical serialized form: a header line
/// `n_users<TAB>n_items<TAB>lo<TAB>hi` followed by one `user<TAB>item<TAB>value`
/// line per rating, sorted by user then item.
pub fn write_canonical<W: Write>(dataset: &RatingsDataset, mut writer: W) -> Result<()> {
    writeln!(
        writer,
        "{}\t{}\t{}\t{}",
        dataset.n_users(),
        dataset.n_items(),
        dataset.range().lo,
        dataset.range().hi
    )?;
    for r in dataset.ratings() {
        writeln!(writer, "{}\t{}\t{}", r.user, r.item, r.value)?;
    }
    Ok(())
}

/// Reads the canonical form written by [`write_canonical`].
pub fn read_canonical<R: Read>(reader: R) -> Result<RatingsDataset> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "missing header".into(),
        })??;
    let fields: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
    if fields.len() != 4 {
        return Err(Error::Parse {
            line: 1,
            message: "header must hold n_users, n_items, lo, hi".into(),
        });
    }
    let parse_err = |line: usize, what: &str| Error::Parse {
        line,
        message: format!("malformed {what}"),
    };
    let n_users: usize = fields[0].parse().map_err(|_| parse_err(1, "user count"))?;
    let n_items: usize = fields[1].parse().map_err(|_| parse_err(1, "item count"))?;
    let lo: f64 = fields[2].parse().map_err(|_| parse_err(1, "range"))?;
    let hi: f64 = fields[3].parse().map_err(|_| parse_err(1, "range"))?;
    let mut triples = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(line_no, "rating line"));
        }
        triples.push(Rating {
            user: fields[0].parse().map_err(|_| parse_err(line_no, "user id"))?,
            item: fields[1].parse().map_err(|_| parse_err(line_no, "item id"))?,
            value: fields[2].parse().map_err(|_| parse_err(line_no, "value"))?,
        });
    }
    RatingsDataset::new(n_users, n_items, triples, RatingRange::new(lo, hi)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn raw(user: &str, item: &str, value: f64) -> RawInteraction {
        RawInteraction {
            user_key: user.into(),
            item_key: item.into(),
            value,
        }
    }

    fn toy_dataset(n: usize) -> RatingsDataset {
        let triples = (0..n)
            .map(|i| Rating {
                user: i % 7,
                item: i / 7,
                value: 1.0 + (i % 5) as f64,
            })
            .collect();
        RatingsDataset::new(7, n / 7 + 1, triples, RatingRange::new(1.0, 5.0).unwrap()).unwrap()
    }

    #[test]
    fn parses_double_colon_layout() {
        let text = "7::11::4::978300760\n7::12::3::978300761\n8::11::5::978300762\n";
        let format = FileFormat {
            delimiter: "::".into(),
            ..FileFormat::default()
        };
        let inter = parse_lines(text.as_bytes(), &format).unwrap();
        let indexed = index_interactions(&inter, RatingRange::new(1.0, 5.0).unwrap()).unwrap();
        assert_eq!(indexed.dataset.n_users(), 2);
        assert_eq!(indexed.dataset.n_items(), 2);
        assert_eq!(indexed.dataset.len(), 3);
        assert_abs_diff_eq!(indexed.dataset.density(), 0.75, epsilon = 1e-15);
        assert_eq!(indexed.user_keys, vec!["7", "8"]);
        assert_eq!(indexed.dataset.rating(0, 1), Some(3.0));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "a\t1\t3.0\nb\t2\tnope\n";
        let err = parse_lines(text.as_bytes(), &FileFormat::default()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_pair_is_a_data_error() {
        let inter = vec![raw("u", "i", 1.0), raw("u", "i", 2.0)];
        let err = index_interactions(&inter, RatingRange::new(1.0, 5.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn implicit_transform_values() {
        let inter = vec![raw("u", "a", 0.0), raw("u", "b", std::f64::consts::E - 1.0), raw("u", "c", 9.0)];
        let indexed = implicit_transform(&inter, 10.0).unwrap();
        let ds = &indexed.dataset;
        assert_abs_diff_eq!(ds.rating(0, 0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ds.rating(0, 1).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ds.rating(0, 2).unwrap(), 2.302585, epsilon = 1e-6);
        assert_eq!(ds.range().lo, 0.0);
        assert_eq!(ds.range().hi, 10.0);

        let err = implicit_transform(&[raw("u", "a", -1.0)], 10.0).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn implicit_transform_is_monotone() {
        let counts = [0.0, 0.5, 1.0, 3.0, 9.0, 100.0];
        let inter: Vec<RawInteraction> = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| raw("u", &format!("i{i}"), c))
            .collect();
        let ds = implicit_transform(&inter, 20.0).unwrap().dataset;
        let values: Vec<f64> = (0..counts.len()).map(|i| ds.rating(0, i).unwrap()).collect();
        for w in values.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn category_aggregation_sums_clicks() {
        let inter = vec![
            raw("u", "n1", 1.0),
            raw("u", "n2", 2.0),
            raw("v", "n1", 1.0),
            raw("u", "n3", 4.0),
        ];
        let mut map = HashMap::new();
        map.insert("n1".to_string(), "sports".to_string());
        map.insert("n2".to_string(), "sports".to_string());
        map.insert("n3".to_string(), "news".to_string());
        let agg = aggregate_categories(&inter, &map).unwrap();
        assert_eq!(agg.len(), 3);
        assert_eq!(agg[0], raw("u", "sports", 3.0));
        assert_eq!(agg[1], raw("v", "sports", 1.0));
        assert_eq!(agg[2], raw("u", "news", 4.0));

        let err = aggregate_categories(&[raw("u", "unmapped", 1.0)], &map).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn split_is_exact_and_disjoint() {
        let ds = toy_dataset(100);
        let (train, test) = split(&ds, 0.1, 3).unwrap();
        assert_eq!(test.len(), 10);
        assert_eq!(train.len(), 90);
        // union equals the input, intersection empty
        let mut all: Vec<_> = train.ratings().to_vec();
        all.extend_from_slice(test.ratings());
        all.sort_by(|a, b| (a.user, a.item).cmp(&(b.user, b.item)));
        assert_eq!(all, ds.ratings());

        let (train2, test2) = split(&ds, 0.1, 3).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);

        assert!(split(&ds, 0.0, 1).is_err());
        assert!(split(&ds, 1.0, 1).is_err());
    }

    #[test]
    fn subsample_identity_and_exact_counts() {
        let ds = toy_dataset(40);
        let same = subsample(&ds, 1.0, 1.0, 9).unwrap();
        assert_eq!(same, ds);

        let four = RatingsDataset::new(
            4,
            2,
            vec![
                Rating { user: 0, item: 0, value: 1.0 },
                Rating { user: 1, item: 0, value: 2.0 },
                Rating { user: 2, item: 1, value: 3.0 },
                Rating { user: 3, item: 1, value: 4.0 },
            ],
            RatingRange::new(1.0, 5.0).unwrap(),
        )
        .unwrap();
        let half = subsample(&four, 0.5, 1.0, 11).unwrap();
        assert_eq!(half.n_users(), 2);

        let a = subsample(&ds, 0.6, 0.8, 17).unwrap();
        let b = subsample(&ds, 0.6, 0.8, 17).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn canonical_round_trip_is_idempotent() {
        let ds = toy_dataset(33);
        let mut first = Vec::new();
        write_canonical(&ds, &mut first).unwrap();
        let reparsed = read_canonical(first.as_slice()).unwrap();
        assert_eq!(reparsed, ds);
        let mut second = Vec::new();
        write_canonical(&reparsed, &mut second).unwrap();
        assert_eq!(first, second);
    }
}
