//! Biased matrix factorization: training and its affine score updates.
//!
//! Scores are rating predictions `p_u . q_i + f_u + g_i + mu` with user and
//! item factors P, Q, user/item biases f, g and a global bias mu.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::actions::ActionSpace;
use crate::dataset::RatingsDataset;
use crate::error::{Error, Result};
use crate::models::affine::{AffineUpdate, UpdateConfig, UpdateVariant};

#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub user_factors: DMatrix<f64>,
    pub item_factors: DMatrix<f64>,
    pub user_bias: DVector<f64>,
    pub item_bias: DVector<f64>,
    pub global_bias: f64,
}

impl FactorModel {
    pub fn new(
        user_factors: DMatrix<f64>,
        item_factors: DMatrix<f64>,
        user_bias: DVector<f64>,
        item_bias: DVector<f64>,
        global_bias: f64,
    ) -> Result<Self> {
        if user_factors.ncols() != item_factors.ncols() {
            return Err(Error::Domain(format!(
                "user factors have dim {} but item factors have dim {}",
                user_factors.ncols(),
                item_factors.ncols()
            )));
        }
        if user_bias.len() != user_factors.nrows() || item_bias.len() != item_factors.nrows() {
            return Err(Error::Domain("bias length does not match factor rows".into()));
        }
        let finite = user_factors.iter().all(|v| v.is_finite())
            && item_factors.iter().all(|v| v.is_finite())
            && user_bias.iter().all(|v| v.is_finite())
            && item_bias.iter().all(|v| v.is_finite())
            && global_bias.is_finite();
        if !finite {
            return Err(Error::Numeric("non-finite model parameter".into()));
        }
        Ok(Self {
            user_factors,
            item_factors,
            user_bias,
            item_bias,
            global_bias,
        })
    }

    pub fn n_users(&self) -> usize {
        self.user_factors.nrows()
    }

    pub fn n_items(&self) -> usize {
        self.item_factors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.item_factors.ncols()
    }

    pub fn score(&self, user: usize, item: usize) -> f64 {
        self.user_factors.row(user).dot(&self.item_factors.row(item))
            + self.user_bias[user]
            + self.item_bias[item]
            + self.global_bias
    }

    /// Predicted scores of one user over all items.
    pub fn score_vector(&self, user: usize) -> Result<DVector<f64>> {
        if user >= self.n_users() {
            return Err(Error::Domain(format!("user {user} out of range")));
        }
        let p = self.user_factors.row(user).transpose();
        let shift = self.global_bias + self.user_bias[user];
        let mut scores = &self.item_factors * p + &self.item_bias;
        scores.add_scalar_mut(shift);
        Ok(scores)
    }
}

/// Trains a biased factor model by SGD over the squared error with
/// Frobenius regularization of the factors.
///
/// Initialization: factors i.i.d. normal with standard deviation
/// 0.1/sqrt(dim), biases zero, global bias = mean training rating. The
/// per-epoch visiting order is a seeded shuffle, so a fixed seed gives a
/// bit-identical model.
pub fn train_mf_sgd(
    train: &RatingsDataset,
    dim: usize,
    step: f64,
    regularization: f64,
    epochs: usize,
    seed: u64,
) -> Result<FactorModel> {
    if train.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    if dim < 1 {
        return Err(Error::Domain("latent dimension must be at least 1".into()));
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    if !regularization.is_finite() || regularization < 0.0 {
        return Err(Error::Domain(format!(
            "regularization must be nonnegative, got {regularization}"
        )));
    }
    if epochs < 1 {
        return Err(Error::Domain("at least one epoch required".into()));
    }

    let n = train.n_users();
    let m = train.n_items();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 0.1 / (dim as f64).sqrt())
        .map_err(|e| Error::Numeric(e.to_string()))?;
    let mut p = DMatrix::from_fn(n, dim, |_, _| normal.sample(&mut rng));
    let mut q = DMatrix::from_fn(m, dim, |_, _| normal.sample(&mut rng));
    let mut f = DVector::zeros(n);
    let mut g = DVector::zeros(m);
    let mu = train.global_mean().unwrap_or(0.0);

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut p_old = vec![0.0; dim];
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let r = train.ratings()[idx];
            let (u, i) = (r.user, r.item);
            let mut pred = mu + f[u] + g[i];
            for d in 0..dim {
                pred += p[(u, d)] * q[(i, d)];
            }
            let err = pred - r.value;
            for d in 0..dim {
                p_old[d] = p[(u, d)];
            }
            for d in 0..dim {
                p[(u, d)] -= step * (err * q[(i, d)] + regularization * p[(u, d)]);
                q[(i, d)] -= step * (err * p_old[d] + regularization * q[(i, d)]);
            }
            f[u] -= step * err;
            g[i] -= step * err;
        }
    }
    FactorModel::new(p, q, f, g, mu)
}

/// Root mean squared prediction error of a factor model on held-out triples.
pub fn rmse_factor(model: &FactorModel, test: &RatingsDataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Domain("empty test set".into()));
    }
    let sum: f64 = test
        .ratings()
        .iter()
        .map(|r| {
            let e = model.score(r.user, r.item) - r.value;
            e * e
        })
        .sum();
    Ok((sum / test.len() as f64).sqrt())
}

/// Builds the affine score update of a factor model for one user's action
/// space.
///
/// With action-item factors `Qa` (one row per action item), item biases over
/// the action set `ga`, and the user shift `w = mu + f_u`:
///
/// * one-step SGD: the updated user factor is affine in the action,
///   `p+ = (1 - step*reg) p - step * Qa' (Qa p + ga + w 1) + step * Qa' a`,
///   giving `matrix = step * Q Qa'`.
/// * ALS: `p+ = M^-1 (h + Qa' (a - ga - w 1))` with `M = Qa' Qa + reg I` and
///   `h` the bias-centered contribution of the user's immutable observed
///   items, giving `matrix = Q M^-1 Qa'`.
///
/// Item and global/user biases are re-added so the map produces full
/// predicted scores.
pub fn affine_update_factor(
    model: &FactorModel,
    space: &ActionSpace,
    cfg: &UpdateConfig,
    train: &RatingsDataset,
) -> Result<AffineUpdate> {
    cfg.validate()?;
    if space.is_empty() {
        return Err(Error::Domain("empty action space".into()));
    }
    let user = space.user();
    if user >= model.n_users() {
        return Err(Error::Domain(format!("user {user} out of range")));
    }
    let dim = model.dim();
    let k = space.len();
    let q = &model.item_factors;
    let q_a = DMatrix::from_fn(k, dim, |row, col| q[(space.items()[row], col)]);
    let g_a = DVector::from_fn(k, |row, _| model.item_bias[space.items()[row]]);
    let shift = model.global_bias + model.user_bias[user];
    let p_u = model.user_factors.row(user).transpose();

    // item-level bias part of the final scores
    let mut bias_scores = model.item_bias.clone();
    bias_scores.add_scalar_mut(shift);

    let (factor_gain, p_base) = match cfg.variant {
        UpdateVariant::SgdOneStep => {
            // p+ = (1 - step*reg) p - step Qa'(Qa p + ga + shift 1) + step Qa' a
            let mut resid = &q_a * &p_u + &g_a;
            resid.add_scalar_mut(shift);
            let p_base = p_u * (1.0 - cfg.step * cfg.regularization)
                - q_a.transpose() * resid * cfg.step;
            (q_a.transpose() * cfg.step, p_base)
        }
        UpdateVariant::Als => {
            let gram = q_a.transpose() * &q_a
                + DMatrix::identity(dim, dim) * cfg.regularization;
            let chol = nalgebra::Cholesky::new(gram).ok_or_else(|| {
                Error::Numeric(
                    "action-item gram matrix is singular; increase the regularization or \
                     use more action items"
                        .into(),
                )
            })?;
            // centered contribution of immutable observed items
            let mut h = DVector::zeros(dim);
            for r in train.user_ratings(user) {
                if space.contains(r.item) {
                    continue;
                }
                let centered = r.value - model.item_bias[r.item] - shift;
                for d in 0..dim {
                    h[d] += q[(r.item, d)] * centered;
                }
            }
            let mut centered_bias = g_a.clone();
            centered_bias.add_scalar_mut(shift);
            let p_base = chol.solve(&(h - q_a.transpose() * centered_bias));
            (chol.solve(&q_a.transpose()), p_base)
        }
    };

    let matrix = q * &factor_gain;
    let offset = q * p_base + bias_scores;
    AffineUpdate::new(user, space.items().to_vec(), matrix, offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::ActionKind;
    use crate::dataset::{Rating, RatingRange};
    use approx::assert_abs_diff_eq;

    fn single_point() -> RatingsDataset {
        RatingsDataset::new(
            1,
            1,
            vec![Rating { user: 0, item: 0, value: 3.0 }],
            RatingRange::new(1.0, 5.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn fits_a_single_rating() {
        let ds = single_point();
        let model = train_mf_sgd(&ds, 2, 0.05, 0.0, 400, 7).unwrap();
        assert_abs_diff_eq!(model.score(0, 0), 3.0, epsilon = 1e-3);
    }

    #[test]
    fn identical_users_predict_identically() {
        // rank-1 ratings: both users can be fit exactly
        let ds = RatingsDataset::new(
            2,
            2,
            vec![
                Rating { user: 0, item: 0, value: 4.0 },
                Rating { user: 0, item: 1, value: 2.0 },
                Rating { user: 1, item: 0, value: 4.0 },
                Rating { user: 1, item: 1, value: 2.0 },
            ],
            RatingRange::new(1.0, 5.0).unwrap(),
        )
        .unwrap();
        let model = train_mf_sgd(&ds, 1, 0.05, 0.0, 3000, 11).unwrap();
        for item in 0..2 {
            assert_abs_diff_eq!(model.score(0, item), model.score(1, item), epsilon = 1e-6);
        }
    }

    #[test]
    fn training_is_seed_deterministic() {
        let ds = RatingsDataset::new(
            3,
            3,
            vec![
                Rating { user: 0, item: 0, value: 4.0 },
                Rating { user: 1, item: 1, value: 2.0 },
                Rating { user: 2, item: 2, value: 5.0 },
                Rating { user: 0, item: 2, value: 1.0 },
            ],
            RatingRange::new(1.0, 5.0).unwrap(),
        )
        .unwrap();
        let a = train_mf_sgd(&ds, 3, 0.02, 0.01, 20, 42).unwrap();
        let b = train_mf_sgd(&ds, 3, 0.02, 0.01, 20, 42).unwrap();
        assert_eq!(a, b);
        assert!(train_mf_sgd(
            &RatingsDataset::new(1, 1, vec![], ds.range()).unwrap(),
            2,
            0.1,
            0.0,
            1,
            0
        )
        .is_err());
    }

    #[test]
    fn constant_model_scores() {
        let model = FactorModel::new(
            DMatrix::zeros(2, 1),
            DMatrix::zeros(3, 1),
            DVector::zeros(2),
            DVector::zeros(3),
            2.0,
        )
        .unwrap();
        let s = model.score_vector(1).unwrap();
        assert_eq!(s.as_slice(), &[2.0, 2.0, 2.0]);
    }

    /// One latent dimension, no biases: the one-step map has a hand
    /// computable gain step*q_i*q_a and offset q_i*(p - step*q_a^2*p).
    #[test]
    fn sgd_update_matches_hand_computation() {
        // items: index 0 is the action item (factor 2), index 1 scores (factor 3)
        let model = FactorModel::new(
            DMatrix::from_row_slice(1, 1, &[1.0]),
            DMatrix::from_row_slice(2, 1, &[2.0, 3.0]),
            DVector::zeros(1),
            DVector::zeros(2),
            0.0,
        )
        .unwrap();
        let ds = RatingsDataset::new(
            1,
            2,
            vec![Rating { user: 0, item: 0, value: 3.0 }],
            RatingRange::new(1.0, 5.0).unwrap(),
        )
        .unwrap();
        let space =
            ActionSpace::new(0, ActionKind::HistoryEdits, vec![0], ds.range(), &ds).unwrap();
        let cfg = UpdateConfig {
            step: 0.1,
            regularization: 0.0,
            variant: UpdateVariant::SgdOneStep,
        };
        let update = affine_update_factor(&model, &space, &cfg, &ds).unwrap();
        assert_abs_diff_eq!(update.matrix[(1, 0)], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(update.offset[1], 1.8, epsilon = 1e-12);
    }

    #[test]
    fn zero_step_means_no_agency() {
        let model = FactorModel::new(
            DMatrix::from_row_slice(1, 2, &[0.5, -0.25]),
            DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.7, 0.7]),
            DVector::from_element(1, 0.2),
            DVector::from_row_slice(&[0.1, -0.1, 0.0]),
            3.0,
        )
        .unwrap();
        let ds = RatingsDataset::new(
            1,
            3,
            vec![Rating { user: 0, item: 0, value: 4.0 }],
            RatingRange::new(1.0, 5.0).unwrap(),
        )
        .unwrap();
        let space =
            ActionSpace::new(0, ActionKind::HistoryEdits, vec![0], ds.range(), &ds).unwrap();
        // step -> 0 limit checked with a tiny positive step
        let cfg = UpdateConfig {
            step: 1e-300,
            regularization: 0.0,
            variant: UpdateVariant::SgdOneStep,
        };
        let update = affine_update_factor(&model, &space, &cfg, &ds).unwrap();
        let baseline = model.score_vector(0).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(update.matrix[(i, 0)], 0.0, epsilon = 1e-250);
            assert_abs_diff_eq!(update.offset[i], baseline[i], epsilon = 1e-12);
        }
    }

    /// ALS, one action item with factor 2, scoring item with factor 3 and no
    /// biases: scores(a) = 3 * (2a / 4) = 1.5 a.
    #[test]
    fn als_update_matches_hand_solution() {
        let model = FactorModel::new(
            DMatrix::from_row_slice(1, 1, &[0.9]),
            DMatrix::from_row_slice(2, 1, &[2.0, 3.0]),
            DVector::zeros(1),
            DVector::zeros(2),
            0.0,
        )
        .unwrap();
        let ds = RatingsDataset::new(
            1,
            2,
            vec![Rating { user: 0, item: 0, value: 3.0 }],
            RatingRange::new(1.0, 5.0).unwrap(),
        )
        .unwrap();
        let space =
            ActionSpace::new(0, ActionKind::HistoryEdits, vec![0], ds.range(), &ds).unwrap();
        let cfg = UpdateConfig {
            step: 0.1,
            regularization: 0.0,
            variant: UpdateVariant::Als,
        };
        let update = affine_update_factor(&model, &space, &cfg, &ds).unwrap();
        assert_abs_diff_eq!(update.matrix[(1, 0)], 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(update.offset[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn als_rejects_rank_deficient_unregularized_gram() {
        // two identical action-item factors in dim 2 -> singular gram
        let model = FactorModel::new(
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 1.0, 0.5, -0.5]),
            DVector::zeros(1),
            DVector::zeros(3),
            0.0,
        )
        .unwrap();
        let ds = RatingsDataset::new(
            1,
            3,
            vec![
                Rating { user: 0, item: 0, value: 4.0 },
                Rating { user: 0, item: 1, value: 2.0 },
            ],
            RatingRange::new(1.0, 5.0).unwrap(),
        )
        .unwrap();
        let space =
            ActionSpace::new(0, ActionKind::HistoryEdits, vec![0, 1], ds.range(), &ds).unwrap();
        let cfg = UpdateConfig {
            step: 0.1,
            regularization: 0.0,
            variant: UpdateVariant::Als,
        };
        assert!(matches!(
            affine_update_factor(&model, &space, &cfg, &ds),
            Err(Error::Numeric(_))
        ));
    }
}
