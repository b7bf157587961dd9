//! Parameter estimators: a three-layer LIF network with a leaky-integrator
//! readout and a tanh feedforward baseline. Both read the same normalized
//! 100-sample window and emit `exp(output + b_param)` as `(L, C, Rs)`.

mod checkpoint;
mod ff;
mod snn;

pub use checkpoint::Checkpoint;
pub use ff::FfEstimator;
pub use snn::{lif_step, LiReadout, LifLayer, SnnConfig, SnnEstimator, SnnForward, SnnState};

use rand::Rng as _;

use crate::autodiff::{Tape, Tensor, Var};
use crate::converter::{Passives, Waveform};
use crate::error::{Error, Result};

/// Initial log-space output bias: 100 µH, 10 µF, 0.1 Ω.
pub const INITIAL_GUESS: Passives = Passives { inductance: 100e-6, capacitance: 10e-6, series_resistance: 0.1 };

pub(crate) fn initial_bias() -> Tensor {
    let g = INITIAL_GUESS.to_array();
    Tensor::vector(g.iter().map(|v| v.ln()).collect()).unwrap().with_requires_grad(true)
}

/// Per-channel z-score over the window using the population standard
/// deviation. A channel with `std < 1e-12` maps to zeros.
pub fn normalize_input(w: &Waveform) -> Vec<[f64; 2]> {
    let norm = |x: &[f64]| -> Vec<f64> {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let std = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        if std < 1e-12 {
            vec![0.0; x.len()]
        } else {
            x.iter().map(|v| (v - mean) / std).collect()
        }
    };
    let (il, vo) = (norm(&w.il), norm(&w.vo));
    il.into_iter().zip(vo).map(|(a, b)| [a, b]).collect()
}

/// Uniform `[-1/√fan_in, 1/√fan_in)` weights for a `rows × cols` map.
pub(crate) fn uniform_fan_in(rows: usize, cols: usize, rng: &mut crate::rng::Rng) -> Tensor {
    let bound = 1.0 / (cols as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect();
    Tensor::matrix(rows, cols, data).unwrap().with_requires_grad(true)
}

/// Which architecture a model or checkpoint holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Snn,
    Ff,
    Direct,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Snn => "snn",
            EstimatorKind::Ff => "ff",
            EstimatorKind::Direct => "direct",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snn" => Ok(Self::Snn),
            "ff" => Ok(Self::Ff),
            "direct" => Ok(Self::Direct),
            other => Err(Error::invalid(format!("unknown estimator kind `{other}`"))),
        }
    }
}

/// A trainable map from a normalized waveform window to log-space passives.
pub trait Estimator {
    fn kind(&self) -> EstimatorKind;

    /// Named parameters in a fixed order.
    fn parameters(&self) -> Vec<(&'static str, &Tensor)>;

    /// Same order as [`Estimator::parameters`].
    fn parameters_mut(&mut self) -> Vec<&mut Tensor>;

    /// Position of `b_param` in the parameter list.
    fn bias_index(&self) -> usize;

    /// `[log L, log C, log Rs]` as a 3-vector, from parameters bound by [`bind`].
    fn log_params<'t>(&self, tape: &'t Tape, bound: &[Var<'t>], input: &[[f64; 2]]) -> Result<Var<'t>>;

    /// Inference without gradients.
    fn estimate(&self, input: &[[f64; 2]]) -> Result<Passives> {
        let tape = Tape::new();
        let bound = bind(self, &tape, false);
        let out = self.log_params(&tape, &bound, input)?.to_vec();
        Ok(Passives::from_array([out[0].exp(), out[1].exp(), out[2].exp()]))
    }
}

/// Records every parameter of `est` on `tape`, as leaves when `trainable`.
pub fn bind<'t, E: Estimator + ?Sized>(est: &E, tape: &'t Tape, trainable: bool) -> Vec<Var<'t>> {
    est.parameters()
        .into_iter()
        .map(|(_, t)| if trainable { tape.leaf(t.clone()) } else { tape.constant(t.clone()) })
        .collect()
}

/// Optimizes the log-space passives directly, with no network in front.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectParams {
    pub b_param: Tensor,
}

impl DirectParams {
    pub fn new(initial: Passives) -> Result<Self> {
        let logs = initial.to_array().map(f64::ln);
        Ok(Self { b_param: Tensor::vector(logs.to_vec())?.with_requires_grad(true) })
    }
}

impl Default for DirectParams {
    fn default() -> Self {
        Self { b_param: initial_bias() }
    }
}

impl Estimator for DirectParams {
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::Direct
    }

    fn parameters(&self) -> Vec<(&'static str, &Tensor)> {
        vec![("b_param", &self.b_param)]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.b_param]
    }

    fn bias_index(&self) -> usize {
        0
    }

    fn log_params<'t>(&self, _tape: &'t Tape, bound: &[Var<'t>], _input: &[[f64; 2]]) -> Result<Var<'t>> {
        Ok(bound[0])
    }
}

/// Any of the supported estimators, for checkpoints and CLI dispatch.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Snn(SnnEstimator),
    Ff(FfEstimator),
    Direct(DirectParams),
}

impl Model {
    pub fn as_snn(&self) -> Option<&SnnEstimator> {
        match self {
            Model::Snn(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_ff(&self) -> Option<&FfEstimator> {
        match self {
            Model::Ff(f) => Some(f),
            _ => None,
        }
    }

    fn inner(&self) -> &dyn Estimator {
        match self {
            Model::Snn(m) => m,
            Model::Ff(m) => m,
            Model::Direct(m) => m,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Estimator {
        match self {
            Model::Snn(m) => m,
            Model::Ff(m) => m,
            Model::Direct(m) => m,
        }
    }
}

impl Estimator for Model {
    fn kind(&self) -> EstimatorKind {
        self.inner().kind()
    }

    fn parameters(&self) -> Vec<(&'static str, &Tensor)> {
        self.inner().parameters()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        self.inner_mut().parameters_mut()
    }

    fn bias_index(&self) -> usize {
        self.inner().bias_index()
    }

    fn log_params<'t>(&self, tape: &'t Tape, bound: &[Var<'t>], input: &[[f64; 2]]) -> Result<Var<'t>> {
        self.inner().log_params(tape, bound, input)
    }
}

impl From<SnnEstimator> for Model {
    fn from(m: SnnEstimator) -> Self {
        Model::Snn(m)
    }
}

impl From<FfEstimator> for Model {
    fn from(m: FfEstimator) -> Self {
        Model::Ff(m)
    }
}

impl From<DirectParams> for Model {
    fn from(m: DirectParams) -> Self {
        Model::Direct(m)
    }
}

/// Hidden-layer spike activity of one SNN pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeRecord {
    layer_sizes: Vec<usize>,
    /// `raster[l][k]`: sorted indices of neurons in layer `l` that fired at step `k`.
    raster: Vec<Vec<Vec<u32>>>,
}

impl SpikeRecord {
    pub fn new(layer_sizes: Vec<usize>) -> Self {
        let raster = vec![Vec::new(); layer_sizes.len()];
        Self { layer_sizes, raster }
    }

    /// Builds a record from explicit firing lists, validating every index.
    pub fn from_raster(layer_sizes: Vec<usize>, raster: Vec<Vec<Vec<u32>>>) -> Result<Self> {
        if raster.len() != layer_sizes.len() {
            return Err(Error::invalid("raster layer count does not match layer sizes"));
        }
        let steps = raster.first().map_or(0, Vec::len);
        for (l, layer) in raster.iter().enumerate() {
            if layer.len() != steps {
                return Err(Error::invalid("raster layers cover different numbers of steps"));
            }
            for step in layer {
                if step.windows(2).any(|w| w[0] >= w[1]) || step.iter().any(|&i| i as usize >= layer_sizes[l]) {
                    return Err(Error::invalid(format!("invalid firing list in layer {l}")));
                }
            }
        }
        Ok(Self { layer_sizes, raster })
    }

    pub(crate) fn push(&mut self, layer: usize, fired: Vec<u32>) {
        self.raster[layer].push(fired);
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len()
    }

    /// Recorded timesteps.
    pub fn steps(&self) -> usize {
        self.raster.first().map_or(0, Vec::len)
    }

    /// Spike count of layer `l` at step `k`.
    pub fn count(&self, l: usize, k: usize) -> usize {
        self.raster[l][k].len()
    }

    pub fn fired(&self, l: usize, k: usize) -> &[u32] {
        &self.raster[l][k]
    }

    pub fn layer_total(&self, l: usize) -> usize {
        self.raster[l].iter().map(Vec::len).sum()
    }

    pub fn total_spikes(&self) -> usize {
        (0..self.num_layers()).map(|l| self.layer_total(l)).sum()
    }

    /// Fraction of possible hidden spike events that occurred.
    pub fn mean_rate(&self) -> f64 {
        let slots = self.steps() * self.layer_sizes.iter().sum::<usize>();
        if slots == 0 {
            0.0
        } else {
            self.total_spikes() as f64 / slots as f64
        }
    }
}
