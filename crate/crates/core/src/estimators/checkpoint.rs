use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::{SurrogateConfig, Tensor};
use crate::converter::Passives;
use crate::error::{Error, Result};

use super::{DirectParams, Estimator, EstimatorKind, FfEstimator, Model, SnnConfig, SnnEstimator};

const FORMAT: &str = "spikeid-checkpoint";
const VERSION: u32 = 1;

/// A model snapshot together with the epoch, loss and estimate it was taken at.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub epoch: usize,
    pub loss: f64,
    pub estimate: Passives,
    pub model: Model,
}

#[derive(Serialize, Deserialize)]
struct SnnConfigRecord {
    hidden: usize,
    beta: f64,
    beta_out: f64,
    u_thr: f64,
    alpha: f64,
}

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointRecord {
    format: String,
    version: u32,
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    config: Option<SnnConfigRecord>,
    epoch: usize,
    loss: f64,
    estimate: [f64; 3],
    tensors: Vec<TensorRecord>,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        let config = self.model.as_snn().map(|s| SnnConfigRecord {
            hidden: s.config.hidden,
            beta: s.config.beta,
            beta_out: s.config.beta_out,
            u_thr: s.config.u_thr,
            alpha: s.config.surrogate.alpha,
        });
        let tensors = self
            .model
            .parameters()
            .into_iter()
            .map(|(name, t)| TensorRecord { name: name.to_string(), shape: t.shape().to_vec(), data: t.data().to_vec() })
            .collect();
        let rec = CheckpointRecord {
            format: FORMAT.into(),
            version: VERSION,
            kind: self.model.kind().as_str().into(),
            config,
            epoch: self.epoch,
            loss: self.loss,
            estimate: self.estimate.to_array(),
            tensors,
        };
        Ok(serde_json::to_string_pretty(&rec)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: CheckpointRecord = serde_json::from_str(text)?;
        if rec.format != FORMAT || rec.version != VERSION {
            return Err(Error::Parse(format!("unsupported checkpoint {} v{}", rec.format, rec.version)));
        }
        let kind: EstimatorKind = rec.kind.parse()?;
        let mut model = match kind {
            EstimatorKind::Snn => {
                let c = rec.config.as_ref().ok_or_else(|| Error::Parse("SNN checkpoint without config".into()))?;
                let config = SnnConfig {
                    hidden: c.hidden,
                    beta: c.beta,
                    beta_out: c.beta_out,
                    u_thr: c.u_thr,
                    surrogate: SurrogateConfig::new(c.alpha)?,
                };
                Model::Snn(SnnEstimator::init(config, 0)?)
            }
            EstimatorKind::Ff => Model::Ff(FfEstimator::init(0)),
            EstimatorKind::Direct => Model::Direct(DirectParams::default()),
        };
        let expected: Vec<(String, Vec<usize>)> =
            model.parameters().iter().map(|(n, t)| (n.to_string(), t.shape().to_vec())).collect();
        if expected.len() != rec.tensors.len() {
            return Err(Error::Parse(format!("expected {} tensors, found {}", expected.len(), rec.tensors.len())));
        }
        for ((slot, (name, shape)), tr) in model.parameters_mut().into_iter().zip(expected).zip(rec.tensors) {
            if tr.name != name || tr.shape != shape {
                return Err(Error::Parse(format!("tensor `{}` {:?} does not match `{name}` {shape:?}", tr.name, tr.shape)));
            }
            *slot = Tensor::new(tr.shape, tr.data)?.with_requires_grad(true);
        }
        Ok(Checkpoint { epoch: rec.epoch, loss: rec.loss, estimate: Passives::from_array(rec.estimate), model })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
