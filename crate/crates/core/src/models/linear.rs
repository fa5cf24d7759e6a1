//! Linear-weight preference models: item neighborhoods (KNN), the
//! closed-form ridge autoencoder (EASE), and externally trained sparse
//! weight matrices (SLIM).
//!
//! All of them score a user as an affine function of the dense rating row,
//! which makes the strategic score update a column selection of the weight
//! matrix.

use std::io::{BufRead, BufReader};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::actions::ActionSpace;
use crate::dataset::RatingsDataset;
use crate::error::{Error, Result};
use crate::models::affine::AffineUpdate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearModelKind {
    ItemKnn,
    Ease,
    ExternalSlim,
}

/// Optional bias terms for the centered prediction form.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasTerms {
    pub user_bias: DVector<f64>,
    pub item_bias: DVector<f64>,
    pub global_bias: f64,
}

/// An m x m weight matrix scoring users linearly in their rating rows.
///
/// Without biases: `scores = W r`. With biases (the neighborhood form):
/// `scores = W (r - g - w 1) + g + w 1` where `w = mu + f_u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearWeightModel {
    pub kind: LinearModelKind,
    pub weights: DMatrix<f64>,
    pub bias: Option<BiasTerms>,
    /// For KNN: per item, the neighborhood as (item, raw similarity) pairs.
    pub neighborhoods: Option<Vec<Vec<(usize, f64)>>>,
}

impl LinearWeightModel {
    pub fn new(
        kind: LinearModelKind,
        weights: DMatrix<f64>,
        bias: Option<BiasTerms>,
        neighborhoods: Option<Vec<Vec<(usize, f64)>>>,
    ) -> Result<Self> {
        if weights.nrows() != weights.ncols() {
            return Err(Error::Domain(format!(
                "weight matrix must be square, got {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        if !weights.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("non-finite weight".into()));
        }
        if matches!(kind, LinearModelKind::Ease | LinearModelKind::ExternalSlim) {
            for j in 0..weights.nrows() {
                if weights[(j, j)] != 0.0 {
                    return Err(Error::Domain(format!(
                        "diagonal weight ({j}, {j}) must be zero"
                    )));
                }
            }
        }
        if let Some(b) = &bias {
            if b.item_bias.len() != weights.nrows() {
                return Err(Error::Domain("item bias length mismatch".into()));
            }
        }
        Ok(Self {
            kind,
            weights,
            bias,
            neighborhoods,
        })
    }

    pub fn n_items(&self) -> usize {
        self.weights.nrows()
    }

    fn user_shift(&self, user: usize) -> Result<f64> {
        match &self.bias {
            None => Ok(0.0),
            Some(b) => {
                if user >= b.user_bias.len() {
                    return Err(Error::Domain(format!("user {user} out of range")));
                }
                Ok(b.global_bias + b.user_bias[user])
            }
        }
    }

    /// Scores for an arbitrary dense rating row.
    pub fn score_rating_row(&self, user: usize, row: &DVector<f64>) -> Result<DVector<f64>> {
        if row.len() != self.n_items() {
            return Err(Error::Domain(format!(
                "rating row has {} entries for {} items",
                row.len(),
                self.n_items()
            )));
        }
        match &self.bias {
            None => Ok(&self.weights * row),
            Some(b) => {
                let shift = self.user_shift(user)?;
                let mut centered = row - &b.item_bias;
                centered.add_scalar_mut(-shift);
                let mut scores = &self.weights * centered + &b.item_bias;
                scores.add_scalar_mut(shift);
                Ok(scores)
            }
        }
    }

    /// Predicted scores of one user from their observed ratings.
    pub fn score_vector(&self, user: usize, train: &RatingsDataset) -> Result<DVector<f64>> {
        if user >= train.n_users() {
            return Err(Error::Domain(format!("user {user} out of range")));
        }
        let row = DVector::from_vec(train.dense_row(user));
        self.score_rating_row(user, &row)
    }
}

/// Item-based neighborhoods from column cosines with a shrinkage factor
/// `n_ij / (n_ij + shrink)` on the co-rating count. Each neighborhood keeps
/// the top-k most similar other items (lowest id on ties) and the weight
/// rows are normalized to unit absolute sum over the neighborhood.
pub fn build_knn(train: &RatingsDataset, k: usize, shrink: f64) -> Result<LinearWeightModel> {
    if k < 1 {
        return Err(Error::Domain("neighborhood size must be at least 1".into()));
    }
    if !shrink.is_finite() || shrink < 0.0 {
        return Err(Error::Domain(format!(
            "shrinkage must be nonnegative, got {shrink}"
        )));
    }
    let m = train.n_items();
    let n = train.n_users();
    let k = k.min(m.saturating_sub(1));
    if k == 0 {
        return Err(Error::Domain("need at least two items for neighborhoods".into()));
    }

    let mut columns = DMatrix::zeros(n, m);
    for r in train.ratings() {
        columns[(r.user, r.item)] = r.value;
    }
    let gram = columns.transpose() * &columns;
    let mut co_counts = DMatrix::zeros(n, m);
    for r in train.ratings() {
        co_counts[(r.user, r.item)] = 1.0;
    }
    let co = co_counts.transpose() * co_counts;

    let norms: Vec<f64> = (0..m).map(|j| gram[(j, j)].sqrt()).collect();
    let mut neighborhoods: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
    let mut weights = DMatrix::zeros(m, m);
    for i in 0..m {
        let mut sims: Vec<(usize, f64)> = (0..m)
            .filter(|&j| j != i)
            .map(|j| {
                let co_count = co[(i, j)];
                let sim = if norms[i] > 0.0 && norms[j] > 0.0 && co_count > 0.0 {
                    (gram[(i, j)] / (norms[i] * norms[j])) * (co_count / (co_count + shrink))
                } else {
                    0.0
                };
                (j, sim)
            })
            .collect();
        sims.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        sims.truncate(k);
        sims.sort_by_key(|&(j, _)| j);
        let denom: f64 = sims.iter().map(|&(_, w)| w.abs()).sum();
        if denom > 0.0 {
            for &(j, w) in &sims {
                weights[(i, j)] = w / denom;
            }
        }
        neighborhoods.push(sims);
    }
    LinearWeightModel::new(LinearModelKind::ItemKnn, weights, None, Some(neighborhoods))
}

/// Attaches neighborhood bias terms (global mean, per-user and per-item
/// deviations from it) to a KNN model.
pub fn with_mean_biases(model: LinearWeightModel, train: &RatingsDataset) -> Result<LinearWeightModel> {
    let mu = train
        .global_mean()
        .ok_or_else(|| Error::Data("cannot derive biases from an empty dataset".into()))?;
    let user_bias = DVector::from_fn(train.n_users(), |u, _| {
        let row = train.user_ratings(u);
        if row.is_empty() {
            0.0
        } else {
            row.iter().map(|r| r.value).sum::<f64>() / row.len() as f64 - mu
        }
    });
    let means = train.item_mean_ratings();
    let item_bias = DVector::from_fn(train.n_items(), |i, _| match means[i] {
        Some(mean) => mean - mu,
        None => 0.0,
    });
    LinearWeightModel::new(
        model.kind,
        model.weights,
        Some(BiasTerms {
            user_bias,
            item_bias,
            global_bias: mu,
        }),
        model.neighborhoods,
    )
}

/// Closed-form ridge autoencoder: with `G = R'R + reg I` and `P = G^-1`,
/// the weights are `W = I - P diag(1 / diag(P))` with an exactly zero
/// diagonal.
pub fn build_ease(train: &RatingsDataset, reg: f64) -> Result<LinearWeightModel> {
    if !reg.is_finite() || reg <= 0.0 {
        return Err(Error::Domain(format!(
            "ridge regularization must be positive, got {reg}"
        )));
    }
    let m = train.n_items();
    let n = train.n_users();
    let mut r = DMatrix::zeros(n, m);
    for t in train.ratings() {
        r[(t.user, t.item)] = t.value;
    }
    let gram = r.transpose() * r + DMatrix::identity(m, m) * reg;
    let chol = nalgebra::Cholesky::new(gram)
        .ok_or_else(|| Error::Numeric("gram matrix is not positive definite".into()))?;
    let p = chol.inverse();
    let mut weights = DMatrix::identity(m, m);
    for j in 0..m {
        let scale = 1.0 / p[(j, j)];
        for i in 0..m {
            weights[(i, j)] -= p[(i, j)] * scale;
        }
        weights[(j, j)] = 0.0;
    }
    LinearWeightModel::new(LinearModelKind::Ease, weights, None, None)
}

/// Reads an externally trained weight matrix from coordinate text
/// (`item_row item_col weight` per line, whitespace separated).
pub fn load_external_slim(path: &Path, n_items: usize) -> Result<LinearWeightModel> {
    let file = std::fs::File::open(path)?;
    let mut weights = DMatrix::zeros(n_items, n_items);
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: "expected 'row col weight'".into(),
            });
        }
        let i: usize = fields[0].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: "malformed row index".into(),
        })?;
        let j: usize = fields[1].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: "malformed column index".into(),
        })?;
        let w: f64 = fields[2].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: "malformed weight".into(),
        })?;
        if i >= n_items || j >= n_items {
            return Err(Error::Data(format!(
                "weight index ({i}, {j}) outside {n_items} items"
            )));
        }
        if !seen.insert((i, j)) {
            return Err(Error::Data(format!("duplicate weight entry ({i}, {j})")));
        }
        weights[(i, j)] = w;
    }
    LinearWeightModel::new(LinearModelKind::ExternalSlim, weights, None, None)
}

/// Affine score update of a linear model: the offset is the prediction on
/// the rating row with the action coordinates zeroed (so a rated action
/// item is not counted twice), and the gain columns are the weight columns
/// of the action items.
pub fn affine_update_linear(
    model: &LinearWeightModel,
    space: &ActionSpace,
    train: &RatingsDataset,
) -> Result<AffineUpdate> {
    if space.is_empty() {
        return Err(Error::Domain("empty action space".into()));
    }
    let user = space.user();
    let mut row = DVector::from_vec(train.dense_row(user));
    for &i in space.items() {
        row[i] = 0.0;
    }
    let offset = model.score_rating_row(user, &row)?;
    let m = model.n_items();
    let mut matrix = DMatrix::zeros(m, space.len());
    for (col, &item) in space.items().iter().enumerate() {
        for r in 0..m {
            matrix[(r, col)] = model.weights[(r, item)];
        }
    }
    AffineUpdate::new(user, space.items().to_vec(), matrix, offset)
}
