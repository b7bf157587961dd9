//! Reconstruction loss, the Adam + cosine optimization loop with
//! best-checkpoint selection, and multi-condition retraining.

mod dataset;
mod loss;
mod optim;

pub use dataset::{
    generate_dataset, load_dataset, sample_params, save_dataset, Acquisition, DatasetEntry, Measurement, ParamRanges,
};
pub use loss::{channel_weights, reconstruction_loss, reconstruction_loss_value};
pub use optim::{clip_global_norm, cosine_lr, global_norm, Adam, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};

use std::fmt::Write as _;
use std::path::Path;

use crate::autodiff::Tape;
use crate::converter::{rk4_integrate, step_count, ConverterParams, Passives, TapePassives, Waveform};
use crate::error::{Error, Result};
use crate::estimators::{bind, Checkpoint, Estimator, Model};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Learning-rate multiplier for the output bias.
    pub lr_bias_mult: f64,
    /// Global gradient-norm limit; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub seed: u64,
    /// RK4 step used inside the loss.
    pub solver_dt: f64,
    pub sim_span: f64,
    /// First epoch index, for resumed runs. The schedule still spans `0..epochs`.
    pub start_epoch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 3000,
            lr: 5e-5,
            lr_bias_mult: 3.0,
            clip_norm: Some(0.3),
            seed: 1,
            solver_dt: 5e-6,
            sim_span: 1.5e-3,
            start_epoch: 0,
        }
    }
}

impl TrainConfig {
    /// Multi-condition defaults: 6000 epochs at `1e-4`.
    pub fn multi_condition() -> Self {
        Self { epochs: 6000, lr: 1e-4, ..Self::default() }
    }

    /// A zero learning rate is allowed and freezes the estimator.
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be positive"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("learning rate {} must be finite and non-negative", self.lr)));
        }
        if !(self.lr_bias_mult > 0.0 && self.lr_bias_mult.is_finite()) {
            return Err(Error::invalid("bias learning-rate multiplier must be positive"));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid(format!("clip norm {c} must be positive")));
            }
        }
        if self.start_epoch >= self.epochs {
            return Err(Error::invalid(format!("start epoch {} is past the last epoch", self.start_epoch)));
        }
        step_count(self.sim_span, self.solver_dt)?;
        Ok(())
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        cosine_lr(self.lr, epoch, self.epochs)
    }
}

/// One loss target: the estimator input and the measurement on the solver grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingItem {
    /// Vg, d, R and fs for the solver; passives are the ground truth when known.
    pub known: ConverterParams,
    pub input: Vec<[f64; 2]>,
    pub target: Waveform,
}

impl TrainingItem {
    /// Pairs the solver samples at `k·solver_dt` with the measured samples at
    /// the same instants.
    pub fn new(known: ConverterParams, measured: &Waveform, acq: &Acquisition, cfg: &TrainConfig) -> Result<Self> {
        let n = step_count(cfg.sim_span, cfg.solver_dt)?;
        Ok(Self {
            known,
            input: acq.input(measured)?,
            target: measured.aligned(cfg.solver_dt, cfg.solver_dt, n)?,
        })
    }
}

/// Loss, estimate and parameter gradients of one forward/backward pass.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub loss: f64,
    pub estimate: Passives,
    pub grads: Vec<Vec<f64>>,
}

/// Estimator → passives → RK4 from rest → loss → backward.
pub fn evaluate<E: Estimator + ?Sized>(est: &E, item: &TrainingItem, cfg: &TrainConfig) -> Result<Evaluation> {
    let tape = Tape::new();
    let bound = bind(est, &tape, true);
    let params = est.log_params(&tape, &bound, &item.input)?.exp()?;
    let passives = TapePassives {
        inductance: params.index(0)?,
        capacitance: params.index(1)?,
        series_resistance: params.index(2)?,
    };
    let pv = params.to_vec();
    let estimate = Passives::from_array([pv[0], pv[1], pv[2]]);
    let pred = rk4_integrate(&tape, passives, &item.known, (0.0, cfg.sim_span), cfg.solver_dt, (0.0, 0.0))?;
    let loss = reconstruction_loss(&pred, &item.target)?;
    let value = loss.item();
    let g = tape.backward(loss)?;
    let grads: Vec<Vec<f64>> = bound.iter().map(|v| g.wrt(*v)).collect();
    if grads.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { op: "backward" });
    }
    Ok(Evaluation { loss: value, estimate, grads })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub epoch: usize,
    /// Mean loss over the epoch's evaluated items; NaN when all were skipped.
    pub loss: f64,
    /// Estimate for the epoch's first item.
    pub estimate: Passives,
    pub lr: f64,
}

/// An epoch or item whose update was skipped because the numbers blew up.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedUpdate {
    pub epoch: usize,
    pub item: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub rows: Vec<HistoryRow>,
    pub skipped: Vec<SkippedUpdate>,
    /// Loss evaluations performed, skipped ones included.
    pub evaluations: usize,
}

pub const HISTORY_HEADER: &str = "epoch,loss,L,C,Rs,lr";

impl History {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(HISTORY_HEADER);
        out.push('\n');
        for r in &self.rows {
            let p = r.estimate;
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e}",
                r.epoch, r.loss, p.inductance, p.capacitance, p.series_resistance, r.lr
            )
            .unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(HISTORY_HEADER) {
            return Err(Error::Parse(format!("history must start with `{HISTORY_HEADER}`")));
        }
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            let bad = |what: &str| Error::Parse(format!("history line {}: {what}", n + 2));
            if f.len() != 6 {
                return Err(bad("expected 6 fields"));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(&e.to_string()));
            rows.push(HistoryRow {
                epoch: f[0].trim().parse().map_err(|_| bad("bad epoch"))?,
                loss: num(f[1])?,
                estimate: Passives::from_array([num(f[2])?, num(f[3])?, num(f[4])?]),
                lr: num(f[5])?,
            });
        }
        Ok(History { rows, ..Default::default() })
    }

    pub fn losses(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.loss).collect()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: Checkpoint,
    pub history: History,
}

/// Optimizes `est` in place over `items` for `cfg.epochs` epochs.
///
/// Each epoch visits every item once in order with one Adam step per item.
/// The returned checkpoint holds the weights from the start of the epoch with
/// the lowest mean loss, so a single-item run reproduces that loss exactly.
/// Items whose loss, gradients or solver state are not finite are skipped and
/// logged.
pub fn train<E>(
    est: &mut E,
    items: &[TrainingItem],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&HistoryRow),
) -> Result<TrainOutcome>
where
    E: Estimator + Clone + Into<Model>,
{
    cfg.validate()?;
    if items.is_empty() {
        return Err(Error::invalid("training needs at least one item"));
    }
    let n_params = est.parameters().len();
    let mut lr_mult = vec![1.0; n_params];
    lr_mult[est.bias_index()] = cfg.lr_bias_mult;
    let mut adam = {
        let params: Vec<_> = est.parameters().into_iter().map(|(_, t)| t).collect();
        Adam::new(&params)
    };

    let mut history = History::default();
    let mut best: Option<(f64, usize, Passives, E)> = None;
    // with one item a skipped update leaves everything as it was, so every
    // later epoch would fail identically
    let mut stalled: Option<String> = None;

    for epoch in cfg.start_epoch..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        let snapshot = est.clone();
        let mut sum = 0.0;
        let mut evaluated = 0usize;
        let mut first_estimate = None;
        for (i, item) in items.iter().enumerate() {
            history.evaluations += 1;
            let step = match &stalled {
                Some(reason) => Err(reason.clone()),
                None => match evaluate(est, item, cfg) {
                    Ok(ev) if ev.loss.is_finite() => Ok(ev),
                    Ok(ev) => Err(format!("loss {}", ev.loss)),
                    Err(e) if e.is_numerical() => Err(e.to_string()),
                    Err(e) => return Err(e),
                },
            };
            match step {
                Ok(mut ev) => {
                    if i == 0 {
                        first_estimate = Some(ev.estimate);
                    }
                    sum += ev.loss;
                    evaluated += 1;
                    if let Some(c) = cfg.clip_norm {
                        clip_global_norm(&mut ev.grads, c);
                    }
                    adam.update(&mut est.parameters_mut(), &ev.grads, lr, &lr_mult)?;
                }
                Err(reason) => {
                    if items.len() == 1 {
                        stalled = Some(reason.clone());
                    }
                    history.skipped.push(SkippedUpdate { epoch, item: i, reason });
                }
            }
        }
        let loss = if evaluated > 0 { sum / evaluated as f64 } else { f64::NAN };
        let estimate = first_estimate.unwrap_or(Passives::from_array([f64::NAN; 3]));
        let row = HistoryRow { epoch, loss, estimate, lr };
        on_epoch(&row);
        history.rows.push(row);
        if loss.is_finite() && best.as_ref().map_or(true, |b| loss < b.0) {
            best = Some((loss, epoch, estimate, snapshot));
        }
    }

    let (loss, epoch, estimate, model) =
        best.ok_or(Error::NonFinite { op: "training (every epoch was skipped)" })?;
    Ok(TrainOutcome { best: Checkpoint { epoch, loss, estimate, model: model.into() }, history })
}

/// Fits `est` to one measured waveform.
pub fn train_single<E>(
    est: &mut E,
    measured: &Waveform,
    known: &ConverterParams,
    acq: &Acquisition,
    cfg: &TrainConfig,
    on_epoch: impl FnMut(&HistoryRow),
) -> Result<TrainOutcome>
where
    E: Estimator + Clone + Into<Model>,
{
    let item = TrainingItem::new(*known, measured, acq, cfg)?;
    train(est, std::slice::from_ref(&item), cfg, on_epoch)
}

/// Fits `est` to every dataset entry, one item at a time in dataset order.
pub fn train_multi<E>(
    est: &mut E,
    dataset: &[DatasetEntry],
    acq: &Acquisition,
    cfg: &TrainConfig,
    on_epoch: impl FnMut(&HistoryRow),
) -> Result<TrainOutcome>
where
    E: Estimator + Clone + Into<Model>,
{
    let items = dataset
        .iter()
        .map(|d| TrainingItem::new(d.params, &d.measured, acq, cfg))
        .collect::<Result<Vec<_>>>()?;
    train(est, &items, cfg, on_epoch)
}
