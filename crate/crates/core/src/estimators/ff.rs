use rand::Rng as _;

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::rng;

use super::{initial_bias, uniform_fan_in, Estimator, EstimatorKind};

/// Number of waveform samples the baseline consumes.
pub const FF_SAMPLES: usize = 100;

/// Feedforward baseline: `200 → 128 → 128 → 128 → 3` with tanh hidden layers.
///
/// The input is the normalized window flattened channel-major
/// (`iL[0..100]` then `Vo[0..100]`). The output layer has no bias of its own;
/// `b_param` plays that role in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct FfEstimator {
    /// `(weight, bias)` of each tanh layer.
    pub hidden: Vec<(Tensor, Tensor)>,
    /// `3 × 128` output weights.
    pub output: Tensor,
    pub b_param: Tensor,
}

impl FfEstimator {
    pub const LAYER_DIMS: [usize; 5] = [2 * FF_SAMPLES, 128, 128, 128, 3];

    pub fn init(seed: u64) -> Self {
        let mut rng = rng::stream(seed, rng::streams::WEIGHTS);
        let d = Self::LAYER_DIMS;
        let hidden = (0..3)
            .map(|i| {
                let w = uniform_fan_in(d[i + 1], d[i], &mut rng);
                let bound = 1.0 / (d[i] as f64).sqrt();
                let b = (0..d[i + 1]).map(|_| rng.gen_range(-bound..bound)).collect();
                let b = Tensor::vector(b).unwrap();
                (w, b.with_requires_grad(true))
            })
            .collect();
        let output = uniform_fan_in(d[4], d[3], &mut rng);
        Self { hidden, output, b_param: initial_bias() }
    }

    /// Channel-major flattening of a normalized window.
    pub fn flatten(input: &[[f64; 2]]) -> Result<Vec<f64>> {
        if input.len() != FF_SAMPLES {
            return Err(Error::invalid(format!("feedforward estimator needs {FF_SAMPLES} samples, got {}", input.len())));
        }
        Ok(input.iter().map(|p| p[0]).chain(input.iter().map(|p| p[1])).collect())
    }
}

impl Estimator for FfEstimator {
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::Ff
    }

    fn parameters(&self) -> Vec<(&'static str, &Tensor)> {
        const NAMES: [(&str, &str); 3] = [("fc1.weight", "fc1.bias"), ("fc2.weight", "fc2.bias"), ("fc3.weight", "fc3.bias")];
        let mut out = Vec::new();
        for ((w, b), (nw, nb)) in self.hidden.iter().zip(NAMES) {
            out.push((nw, w));
            out.push((nb, b));
        }
        out.push(("out.weight", &self.output));
        out.push(("b_param", &self.b_param));
        out
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for (w, b) in &mut self.hidden {
            out.push(w);
            out.push(b);
        }
        out.push(&mut self.output);
        out.push(&mut self.b_param);
        out
    }

    fn bias_index(&self) -> usize {
        2 * self.hidden.len() + 1
    }

    fn log_params<'t>(&self, tape: &'t Tape, bound: &[Var<'t>], input: &[[f64; 2]]) -> Result<Var<'t>> {
        let mut h = tape.constant(Tensor::vector(Self::flatten(input)?)?);
        for i in 0..self.hidden.len() {
            h = bound[2 * i].matvec(h)?.add(bound[2 * i + 1])?.tanh()?;
        }
        let n = self.hidden.len();
        bound[2 * n].matvec(h)?.add(bound[2 * n + 1])
    }
}
