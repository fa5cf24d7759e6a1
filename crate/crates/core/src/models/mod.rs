//! Desk-scale preference models and their affine score updates.

pub mod affine;
pub mod checkpoint;
pub mod factor;
pub mod linear;

use nalgebra::DVector;

pub use affine::{AffineUpdate, UpdateConfig, UpdateVariant};
pub use factor::{affine_update_factor, train_mf_sgd, FactorModel};
pub use linear::{
    affine_update_linear, build_ease, build_knn, load_external_slim, with_mean_biases, BiasTerms,
    LinearModelKind, LinearWeightModel,
};

use crate::actions::ActionSpace;
use crate::dataset::RatingsDataset;
use crate::error::{Error, Result};

/// Any trained scorer the audit can handle.
#[derive(Debug, Clone, PartialEq)]
pub enum PreferenceModel {
    Factor(FactorModel),
    Linear(LinearWeightModel),
}

impl PreferenceModel {
    pub fn n_items(&self) -> usize {
        match self {
            PreferenceModel::Factor(m) => m.n_items(),
            PreferenceModel::Linear(m) => m.n_items(),
        }
    }

    /// Predicted scores of one user over all items. Linear models read the
    /// user's rating row from `train`.
    pub fn score_vector(&self, user: usize, train: &RatingsDataset) -> Result<DVector<f64>> {
        match self {
            PreferenceModel::Factor(m) => m.score_vector(user),
            PreferenceModel::Linear(m) => m.score_vector(user, train),
        }
    }

    /// The affine action -> score map for one user and action space.
    pub fn affine_update(
        &self,
        space: &ActionSpace,
        cfg: &UpdateConfig,
        train: &RatingsDataset,
    ) -> Result<AffineUpdate> {
        match self {
            PreferenceModel::Factor(m) => affine_update_factor(m, space, cfg, train),
            PreferenceModel::Linear(m) => affine_update_linear(m, space, train),
        }
    }
}

/// Root mean squared prediction error over held-out triples. Linear models
/// score from the training rows, so `train` supplies the observed history.
pub fn rmse(model: &PreferenceModel, train: &RatingsDataset, test: &RatingsDataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Domain("empty test set".into()));
    }
    let mut sum = 0.0;
    match model {
        PreferenceModel::Factor(m) => {
            for r in test.ratings() {
                let e = m.score(r.user, r.item) - r.value;
                sum += e * e;
            }
        }
        PreferenceModel::Linear(m) => {
            let mut user = usize::MAX;
            let mut scores = DVector::zeros(0);
            for r in test.ratings() {
                if r.user != user {
                    user = r.user;
                    scores = m.score_vector(user, train)?;
                }
                let e = scores[r.item] - r.value;
                sum += e * e;
            }
        }
    }
    Ok((sum / test.len() as f64).sqrt())
}
