use crate::autodiff::{SurrogateConfig, Tape, Tensor, Var};
use crate::converter::Passives;
use crate::error::{Error, Result};
use crate::rng;

use super::{initial_bias, uniform_fan_in, Estimator, EstimatorKind, SpikeRecord};

/// Hyperparameters of the spiking estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnnConfig {
    pub hidden: usize,
    /// Membrane decay of the LIF layers.
    pub beta: f64,
    /// Decay of the leaky-integrator readout.
    pub beta_out: f64,
    pub u_thr: f64,
    pub surrogate: SurrogateConfig,
}

impl Default for SnnConfig {
    fn default() -> Self {
        Self { hidden: 128, beta: 0.9, beta_out: 0.95, u_thr: 1.0, surrogate: SurrogateConfig::default() }
    }
}

impl SnnConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.hidden > 0
            && self.beta > 0.0
            && self.beta < 1.0
            && self.beta_out > 0.0
            && self.beta_out < 1.0
            && self.u_thr > 0.0
            && self.surrogate.alpha > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("SNN configuration out of range: {self:?}")))
        }
    }
}

/// Leaky integrate-and-fire layer with subtract reset.
#[derive(Debug, Clone, PartialEq)]
pub struct LifLayer {
    /// `out × in` synaptic weights.
    pub weight: Tensor,
    pub beta: f64,
    pub u_thr: f64,
}

impl LifLayer {
    pub fn size(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn fan_in(&self) -> usize {
        self.weight.shape()[1]
    }
}

/// Non-spiking leaky integrator producing the log-space estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct LiReadout {
    /// `3 × H` weights.
    pub weight: Tensor,
    pub beta_out: f64,
    pub b_param: Tensor,
}

/// One LIF update:
/// `u = beta·u_prev + W·s_in − s_prev·u_thr`, `s = Θ(u − u_thr)`.
///
/// The reset term is detached, so gradients flow only through the leak,
/// the synaptic drive and the surrogate of the new spike.
pub fn lif_step<'t>(
    weight: Var<'t>,
    beta: f64,
    u_thr: f64,
    surrogate: SurrogateConfig,
    u_prev: Var<'t>,
    s_prev: Var<'t>,
    s_in: Var<'t>,
) -> Result<(Var<'t>, Var<'t>)> {
    let drive = weight.matvec(s_in)?;
    let reset = s_prev.detach().scale(u_thr)?;
    let u = u_prev.scale(beta)?.add(drive)?.sub(reset)?;
    let s = u.affine(1.0, -u_thr)?.spike(surrogate)?;
    Ok((u, s))
}

/// Membranes and last spikes carried between calls in persistent mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SnnState {
    pub membranes: Vec<Vec<f64>>,
    pub spikes: Vec<Vec<f64>>,
    pub readout: Vec<f64>,
}

impl SnnState {
    pub fn zeros(hidden: usize, layers: usize) -> Self {
        Self { membranes: vec![vec![0.0; hidden]; layers], spikes: vec![vec![0.0; hidden]; layers], readout: vec![0.0; 3] }
    }

    pub fn is_zero(&self) -> bool {
        self.membranes.iter().chain(&self.spikes).chain(std::iter::once(&self.readout)).all(|v| v.iter().all(|x| *x == 0.0))
    }
}

/// Result of an SNN forward pass.
pub struct SnnForward<'t> {
    /// `[log L, log C, log Rs]`.
    pub log_params: Var<'t>,
    pub record: SpikeRecord,
    pub final_state: SnnState,
}

/// Three LIF layers and a leaky-integrator readout.
///
/// The first layer's weight is the dense `H × 2` input projection: normalized
/// samples are injected as analog current, one sample per timestep. Layers two
/// and three are `H × H`; the readout is `3 × H`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnnEstimator {
    pub config: SnnConfig,
    pub layers: Vec<LifLayer>,
    pub readout: LiReadout,
}

impl SnnEstimator {
    pub fn init(config: SnnConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::stream(seed, rng::streams::WEIGHTS);
        let h = config.hidden;
        let dims = [(h, 2), (h, h), (h, h)];
        let layers = dims
            .iter()
            .map(|&(o, i)| LifLayer { weight: uniform_fan_in(o, i, &mut rng), beta: config.beta, u_thr: config.u_thr })
            .collect();
        let readout = LiReadout { weight: uniform_fan_in(3, h, &mut rng), beta_out: config.beta_out, b_param: initial_bias() };
        Ok(Self { config, layers, readout })
    }

    /// Dense input projection (the first layer's weights).
    pub fn input_proj(&self) -> &Tensor {
        &self.layers[0].weight
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(LifLayer::size).collect()
    }

    pub fn fresh_state(&self) -> SnnState {
        SnnState::zeros(self.config.hidden, self.layers.len())
    }

    /// Unrolls one timestep per input sample. `bound` holds the parameters in
    /// [`Estimator::parameters`] order; `init` carries state from a previous call.
    pub fn forward<'t>(
        &self,
        tape: &'t Tape,
        bound: &[Var<'t>],
        inputs: &[[f64; 2]],
        init: Option<&SnnState>,
    ) -> Result<SnnForward<'t>> {
        if inputs.is_empty() {
            return Err(Error::invalid("SNN needs at least one input sample"));
        }
        let n_layers = self.layers.len();
        let fresh;
        let init = match init {
            Some(s) => {
                if s.membranes.len() != n_layers || s.membranes.iter().any(|m| m.len() != self.config.hidden) {
                    return Err(Error::invalid("carried state does not match the network shape"));
                }
                s
            }
            None => {
                fresh = self.fresh_state();
                &fresh
            }
        };
        let vec_const = |v: &[f64]| Tensor::vector(v.to_vec()).map(|t| tape.constant(t));
        let mut u: Vec<Var<'t>> = init.membranes.iter().map(|m| vec_const(m)).collect::<Result<_>>()?;
        let mut s: Vec<Var<'t>> = init.spikes.iter().map(|m| vec_const(m)).collect::<Result<_>>()?;
        let mut m = vec_const(&init.readout)?;
        let readout_w = bound[n_layers];
        let b_param = bound[n_layers + 1];

        let mut record = SpikeRecord::new(self.hidden_sizes());
        for x in inputs {
            let mut layer_in = vec_const(x)?;
            for (l, layer) in self.layers.iter().enumerate() {
                let (nu, ns) = lif_step(bound[l], layer.beta, layer.u_thr, self.config.surrogate, u[l], s[l], layer_in)?;
                let fired = ns
                    .to_vec()
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, _)| i as u32)
                    .collect();
                record.push(l, fired);
                u[l] = nu;
                s[l] = ns;
                layer_in = ns;
            }
            m = m.scale(self.readout.beta_out)?.add(readout_w.matvec(layer_in)?)?;
        }
        let log_params = m.add(b_param)?;
        let final_state = SnnState {
            membranes: u.iter().map(Var::to_vec).collect(),
            spikes: s.iter().map(Var::to_vec).collect(),
            readout: m.to_vec(),
        };
        Ok(SnnForward { log_params, record, final_state })
    }

    /// Gradient-free inference returning estimates, spikes and the final state.
    pub fn predict(&self, inputs: &[[f64; 2]], init: Option<&SnnState>) -> Result<(Passives, SpikeRecord, SnnState)> {
        let tape = Tape::new();
        let bound = super::bind(self, &tape, false);
        let out = self.forward(&tape, &bound, inputs, init)?;
        let lp = out.log_params.to_vec();
        Ok((Passives::from_array([lp[0].exp(), lp[1].exp(), lp[2].exp()]), out.record, out.final_state))
    }
}

impl Estimator for SnnEstimator {
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::Snn
    }

    fn parameters(&self) -> Vec<(&'static str, &Tensor)> {
        const NAMES: [&str; 3] = ["lif1.weight", "lif2.weight", "lif3.weight"];
        let mut out: Vec<(&'static str, &Tensor)> = self.layers.iter().zip(NAMES).map(|(l, n)| (n, &l.weight)).collect();
        out.push(("readout.weight", &self.readout.weight));
        out.push(("b_param", &self.readout.b_param));
        out
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = self.layers.iter_mut().map(|l| &mut l.weight).collect();
        out.push(&mut self.readout.weight);
        out.push(&mut self.readout.b_param);
        out
    }

    fn bias_index(&self) -> usize {
        self.layers.len() + 1
    }

    fn log_params<'t>(&self, tape: &'t Tape, bound: &[Var<'t>], input: &[[f64; 2]]) -> Result<Var<'t>> {
        Ok(self.forward(tape, bound, input, None)?.log_params)
    }
}
