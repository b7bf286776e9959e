//! Model and adapter persistence.
//!
//! Adapters serialize as a flat record `{d, k, rank, alpha, a, b}` with both
//! factors in row-major order; a model snapshot is the list of layers with
//! their frozen weights, optional adapter records, and activation names.

use super::HarnessError;
use crate::linalg::DenseMatrix;
use crate::lora::{self, LoraAdapter};
use crate::model::{Activation, Layer, LoraLinearModel, LossKind, ModelError};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdapterSnapshot {
    pub d: usize,
    pub k: usize,
    pub rank: usize,
    pub alpha: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl AdapterSnapshot {
    pub fn from_adapter(ad: &LoraAdapter) -> Self {
        Self {
            d: ad.out_dim(),
            k: ad.in_dim(),
            rank: ad.rank(),
            alpha: ad.alpha(),
            a: ad.a().data().to_vec(),
            b: ad.b().data().to_vec(),
        }
    }

    pub fn to_adapter(&self) -> Result<LoraAdapter, HarnessError> {
        // Rebuild via init (validates rank/alpha), then overwrite the factors.
        let mut rng = crate::linalg::SeededRng::new(0);
        let mut ad = lora::init_adapter(&mut rng, self.d, self.k, self.rank, self.alpha, 1.0)
            .map_err(ModelError::from)?;
        if self.a.len() != self.rank * self.k || self.b.len() != self.d * self.rank {
            return Err(HarnessError::InvalidConfig {
                key: "adapter".into(),
                reason: format!(
                    "factor lengths {}/{} do not match rank {} for {}x{}",
                    self.a.len(),
                    self.b.len(),
                    self.rank,
                    self.d,
                    self.k
                ),
            });
        }
        ad.a_mut().data_mut().copy_from_slice(&self.a);
        ad.b_mut().data_mut().copy_from_slice(&self.b);
        Ok(ad)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSnapshot {
    pub rows: usize,
    pub cols: usize,
    pub frozen: Vec<f64>,
    pub adapter: Option<AdapterSnapshot>,
    pub activation: Activation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub layers: Vec<LayerSnapshot>,
    pub loss: LossKind,
}

impl ModelSnapshot {
    pub fn from_model(model: &LoraLinearModel) -> Self {
        let layers = model
            .layers()
            .iter()
            .map(|l| LayerSnapshot {
                rows: l.frozen.rows(),
                cols: l.frozen.cols(),
                frozen: l.frozen.data().to_vec(),
                adapter: l.adapter.as_ref().map(AdapterSnapshot::from_adapter),
                activation: l.activation,
            })
            .collect();
        Self {
            layers,
            loss: model.loss_kind(),
        }
    }

    pub fn to_model(&self) -> Result<LoraLinearModel, HarnessError> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let frozen = DenseMatrix::new(l.rows, l.cols, l.frozen.clone())?;
            let adapter = match &l.adapter {
                Some(snap) => Some(snap.to_adapter()?),
                None => None,
            };
            layers.push(Layer {
                frozen,
                adapter,
                activation: l.activation,
            });
        }
        Ok(LoraLinearModel::new(layers, self.loss)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let json = serde_json::to_string(self).expect("serializable");
        std::fs::write(path, json).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| HarnessError::ConfigParse {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}
