//! Canonical JSON document for fitted or constructed VARFI models.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::VarfiModel;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Model JSON schema. Keys are part of the file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ModelDocument {
    pub M: usize,
    pub p: usize,
    pub q: usize,
    pub d: Vec<f64>,
    /// Lag-major: `A[lag][row][col]`.
    pub A: Vec<Vec<Vec<f64>>>,
    pub SigmaE: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub version: String,
    pub config_hash: String,
}

impl ModelDocument {
    pub fn from_model(model: &VarfiModel, q: usize, config_hash: impl Into<String>) -> Self {
        Self {
            M: model.dim(),
            p: model.order(),
            q,
            d: model.d.clone(),
            A: model.ar.iter().map(linalg::to_rows).collect(),
            SigmaE: linalg::to_rows(&model.sigma),
            labels: model.labels.clone(),
            version: TOOLKIT_VERSION.to_string(),
            config_hash: config_hash.into(),
        }
    }

    pub fn to_model(&self) -> Result<VarfiModel> {
        let bad = |what: &str| Error::Config(format!("model JSON: {what}"));
        if self.d.len() != self.M || self.labels.len() != self.M {
            return Err(bad("d and labels must have M entries"));
        }
        if self.A.len() != self.p {
            return Err(bad("A must have p lag matrices"));
        }
        let ar = self
            .A
            .iter()
            .map(|rows| {
                linalg::from_rows(rows)
                    .filter(|m| m.shape() == (self.M, self.M))
                    .ok_or_else(|| bad("each A[lag] must be M x M"))
            })
            .collect::<Result<Vec<Mat>>>()?;
        let sigma = linalg::from_rows(&self.SigmaE)
            .filter(|m| m.shape() == (self.M, self.M))
            .ok_or_else(|| bad("SigmaE must be M x M"))?;
        VarfiModel::new(ar, self.d.clone(), sigma, self.labels.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("model JSON: {e}")))
    }
}

pub fn save_model(path: &std::path::Path, model: &VarfiModel, q: usize, config_hash: &str) -> Result<()> {
    std::fs::write(path, ModelDocument::from_model(model, q, config_hash).to_json())
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn load_model(path: &std::path::Path) -> Result<(VarfiModel, ModelDocument)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let doc = ModelDocument::from_json(&text)?;
    Ok((doc.to_model()?, doc))
}

/// Short content hash of anything serializable.
pub fn short_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("hashable value serializes");
    let digest = Sha256::digest(&bytes);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Hash of the model parameters (independent of version and config fields).
pub fn model_hash(model: &VarfiModel, q: usize) -> String {
    let mut doc = ModelDocument::from_model(model, q, "");
    doc.version.clear();
    short_hash(&doc)
}
