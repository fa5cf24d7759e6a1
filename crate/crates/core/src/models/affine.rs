//! The per-user affine score update: action vector -> updated score vector.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which one-step model refit the score update mimics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateVariant {
    /// One stochastic-gradient step on the user factor over the action items.
    SgdOneStep,
    /// Ridge least-squares refit of the user factor.
    Als,
}

/// Step size and regularization of the user-factor update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UpdateConfig {
    pub step: f64,
    pub regularization: f64,
    pub variant: UpdateVariant,
}

impl Default for UpdateConfig {
    fn default() -> Self {
        Self {
            step: 0.1,
            regularization: 0.0,
            variant: UpdateVariant::SgdOneStep,
        }
    }
}

impl UpdateConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.step.is_finite() || self.step <= 0.0 {
            return Err(Error::Domain(format!(
                "update step must be positive, got {}",
                self.step
            )));
        }
        if !self.regularization.is_finite() || self.regularization < 0.0 {
            return Err(Error::Domain(format!(
                "update regularization must be nonnegative, got {}",
                self.regularization
            )));
        }
        Ok(())
    }
}

/// Affine map from an action vector to the updated full score vector:
/// `scores(a) = matrix * a + offset`. Columns follow the ascending order of
/// `action_items`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineUpdate {
    pub user: usize,
    pub action_items: Vec<usize>,
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl AffineUpdate {
    pub fn new(
        user: usize,
        action_items: Vec<usize>,
        matrix: DMatrix<f64>,
        offset: DVector<f64>,
    ) -> Result<Self> {
        if matrix.ncols() != action_items.len() {
            return Err(Error::Domain(format!(
                "action matrix has {} columns for {} action items",
                matrix.ncols(),
                action_items.len()
            )));
        }
        if matrix.nrows() != offset.len() {
            return Err(Error::Domain(format!(
                "action matrix has {} rows but the offset has {} entries",
                matrix.nrows(),
                offset.len()
            )));
        }
        Ok(Self {
            user,
            action_items,
            matrix,
            offset,
        })
    }

    pub fn n_items(&self) -> usize {
        self.offset.len()
    }

    pub fn n_actions(&self) -> usize {
        self.action_items.len()
    }

    /// Full updated score vector for one action.
    pub fn apply(&self, action: &DVector<f64>) -> DVector<f64> {
        &self.matrix * action + &self.offset
    }

    /// Rows of the map restricted to a subset of items (e.g. a target set).
    pub fn restrict(&self, items: &[usize]) -> (DMatrix<f64>, DVector<f64>) {
        let k = self.n_actions();
        let mut b = DMatrix::zeros(items.len(), k);
        let mut c = DVector::zeros(items.len());
        for (row, &item) in items.iter().enumerate() {
            for col in 0..k {
                b[(row, col)] = self.matrix[(item, col)];
            }
            c[row] = self.offset[item];
        }
        (b, c)
    }
}
