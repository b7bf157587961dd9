//! Spike sparsity, MAC and SOP counting, firing-rate profiles and energy
//! projection.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::estimators::SpikeRecord;

/// Per-operation energy of the reference hardware.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCatalog {
    /// J per multiply-accumulate on a conventional processor.
    pub mac_energy: f64,
    /// J per synaptic operation on neuromorphic hardware.
    pub sop_energy: f64,
}

impl Default for EnergyCatalog {
    fn default() -> Self {
        Self { mac_energy: 15e-9, sop_energy: 9.9e-12 }
    }
}

impl EnergyCatalog {
    pub fn validate(&self) -> Result<()> {
        if self.mac_energy > 0.0 && self.sop_energy > 0.0 && self.mac_energy.is_finite() && self.sop_energy.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(format!("energy catalog entries must be positive: {self:?}")))
        }
    }
}

/// `1 − ΣS_l[k] / (N_s·ΣH_l)` over the recorded layers.
pub fn sparsity(rec: &SpikeRecord) -> Result<f64> {
    if rec.steps() == 0 || rec.layer_sizes().iter().sum::<usize>() == 0 {
        return Err(Error::invalid("sparsity of an empty spike record"));
    }
    Ok(1.0 - rec.mean_rate())
}

/// Sum of products of consecutive layer widths; biases are not counted.
pub fn count_macs(dims: &[usize]) -> u64 {
    dims.windows(2).map(|w| (w[0] * w[1]) as u64).sum()
}

/// Postsynaptic fan-out of each hidden layer: the next layer's width, then
/// `outputs` for the last one.
pub fn fanouts(layer_sizes: &[usize], outputs: usize) -> Vec<usize> {
    layer_sizes.iter().skip(1).copied().chain(std::iter::once(outputs)).collect()
}

/// Synaptic operations: every spike of layer `l` drives `fanouts[l]` synapses.
pub fn count_sops(rec: &SpikeRecord, fanouts: &[usize]) -> Result<u64> {
    if fanouts.len() != rec.num_layers() {
        return Err(Error::invalid(format!("{} fan-outs for {} recorded layers", fanouts.len(), rec.num_layers())));
    }
    Ok(fanouts.iter().enumerate().map(|(l, f)| rec.layer_total(l) as u64 * *f as u64).sum())
}

/// Dense input-projection operations, `N_s · input_dim · H_1`, reported
/// beside the SOP count.
pub fn input_projection_ops(rec: &SpikeRecord, input_dim: usize) -> u64 {
    let first = rec.layer_sizes().first().copied().unwrap_or(0);
    (rec.steps() * input_dim * first) as u64
}

/// SOP count if every neuron fired at every step.
pub fn all_fire_sops(layer_sizes: &[usize], fanouts: &[usize], steps: usize) -> u64 {
    layer_sizes.iter().zip(fanouts).map(|(h, f)| (steps * h * f) as u64).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateProfile {
    /// Mean firing rate of each layer over all steps.
    pub layer_means: Vec<f64>,
    /// `series[l][k]`: fraction of layer `l` firing at step `k`.
    pub series: Vec<Vec<f64>>,
}

pub fn rate_profiles(rec: &SpikeRecord) -> RateProfile {
    let n = rec.steps();
    let mut layer_means = Vec::with_capacity(rec.num_layers());
    let mut series = Vec::with_capacity(rec.num_layers());
    for (l, &h) in rec.layer_sizes().iter().enumerate() {
        let h = h.max(1) as f64;
        series.push((0..n).map(|k| rec.count(l, k) as f64 / h).collect());
        layer_means.push(if n == 0 { 0.0 } else { rec.layer_total(l) as f64 / (n as f64 * h) });
    }
    RateProfile { layer_means, series }
}

impl RateProfile {
    /// `layer,timestep,rate` with 1-based layers.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,timestep,rate\n");
        for (l, s) in self.series.iter().enumerate() {
            for (k, r) in s.iter().enumerate() {
                writeln!(out, "{},{k},{r:e}", l + 1).unwrap();
            }
        }
        out
    }
}

/// One row per spike: `layer,neuron,timestep`, with 1-based layers.
pub fn raster_csv(rec: &SpikeRecord) -> String {
    let mut out = String::from("layer,neuron,timestep\n");
    for l in 0..rec.num_layers() {
        for k in 0..rec.steps() {
            for n in rec.fired(l, k) {
                writeln!(out, "{},{n},{k}", l + 1).unwrap();
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub macs: u64,
    pub sops: u64,
    /// J per inference.
    pub ff_energy: f64,
    pub snn_energy: f64,
    /// `ff_energy / snn_energy`; absent when there were no SOPs.
    pub ratio: Option<f64>,
}

pub fn energy_report(macs: u64, sops: u64, cat: &EnergyCatalog) -> EnergyReport {
    let ff_energy = macs as f64 * cat.mac_energy;
    let snn_energy = sops as f64 * cat.sop_energy;
    let ratio = (sops > 0).then(|| ff_energy / snn_energy);
    EnergyReport { macs, sops, ff_energy, snn_energy, ratio }
}

impl EnergyReport {
    /// Average power in W of `(ff, snn)` at `rate` inferences per second.
    pub fn always_on_power(&self, rate: f64) -> (f64, f64) {
        (self.ff_energy * rate, self.snn_energy * rate)
    }
}

/// One line of the efficiency report CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub unit: &'static str,
    pub source: &'static str,
}

impl Metric {
    fn new(name: impl Into<String>, value: f64, unit: &'static str, source: &'static str) -> Self {
        Self { name: name.into(), value, unit, source }
    }
}

/// Every efficiency figure for one recorded inference.
pub fn efficiency_metrics(
    rec: &SpikeRecord,
    ff_dims: &[usize],
    outputs: usize,
    input_dim: usize,
    cat: &EnergyCatalog,
    snapshot_rate: f64,
) -> Result<Vec<Metric>> {
    cat.validate()?;
    let fo = fanouts(rec.layer_sizes(), outputs);
    let sops = count_sops(rec, &fo)?;
    let proj = input_projection_ops(rec, input_dim);
    let macs = count_macs(ff_dims);
    let report = energy_report(macs, sops, cat);
    let (ff_power, snn_power) = report.always_on_power(snapshot_rate);
    let profile = rate_profiles(rec);

    let mut rows = vec![Metric::new("sparsity", sparsity(rec)?, "fraction", "measured")];
    for (l, r) in profile.layer_means.iter().enumerate() {
        rows.push(Metric::new(format!("rate_layer{}", l + 1), *r, "fraction", "measured"));
    }
    rows.push(Metric::new("timesteps", rec.steps() as f64, "count", "measured"));
    rows.push(Metric::new("macs", macs as f64, "ops", "counted"));
    rows.push(Metric::new("sops", sops as f64, "ops", "measured"));
    rows.push(Metric::new("input_projection_ops", proj as f64, "ops", "counted"));
    rows.push(Metric::new("sops_inclusive", (sops + proj) as f64, "ops", "measured"));
    rows.push(Metric::new("ff_energy_uJ", report.ff_energy * 1e6, "uJ", "estimated"));
    rows.push(Metric::new("snn_energy_uJ", report.snn_energy * 1e6, "uJ", "estimated"));
    rows.push(Metric::new("ratio", report.ratio.unwrap_or(f64::NAN), "x", "estimated"));
    rows.push(Metric::new("snapshot_rate", snapshot_rate, "Hz", "config"));
    rows.push(Metric::new("always_on_ff_uW", ff_power * 1e6, "uW", "estimated"));
    rows.push(Metric::new("always_on_uW", snn_power * 1e6, "uW", "estimated"));
    Ok(rows)
}

/// `metric,value,unit,source`.
pub fn metrics_csv(rows: &[Metric]) -> String {
    let mut out = String::from("metric,value,unit,source\n");
    for r in rows {
        writeln!(out, "{},{:e},{},{}", r.name, r.value, r.unit, r.source).unwrap();
    }
    out
}
