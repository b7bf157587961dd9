//! The shared key table, `key = value` config files and typed accessors.

use std::path::{Path, PathBuf};

use spikeid::converter::{ConverterParams, EmiConfig, Passives};
use spikeid::efficiency::EnergyCatalog;
use spikeid::monitoring::{DegradationSchedule, Scenario, ScenarioKind};
use spikeid::training::{Acquisition, ParamRanges, TrainConfig};
use spikeid::{SnnConfig, SurrogateConfig};

use crate::error::CliError;

pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key { name, default, help }
}

/// Every configurable value and its default. Flags are `--name` with `_`
/// written as `-`.
pub const KEYS: &[Key] = &[
    key("seed", "1", "seed for weights and measurement noise"),
    key("out", "", "output directory (empty: $SPIKEID_OUT/<subcommand>)"),
    key("jobs", "1", "worker threads for dataset generation"),
    key("log_every", "100", "print training progress every N epochs (0: quiet)"),
    // converter
    key("vg", "20", "input voltage (V)"),
    key("duty", "0.5", "duty ratio"),
    key("load", "10", "load resistance (ohm)"),
    key("fs", "10000", "switching frequency (Hz)"),
    key("true_l", "138e-6", "inductance of the measured converter (H)"),
    key("true_c", "10e-6", "capacitance of the measured converter (F)"),
    key("true_rs", "0.1", "series resistance of the measured converter (ohm)"),
    // acquisition
    key("dt", "0.5e-6", "measurement RK4 step (s)"),
    key("span", "1.5e-3", "measurement and reconstruction window (s)"),
    key("stride", "30", "subsampling stride from measurement to estimator input"),
    key("noise", "true", "add EMI to measurements"),
    key("emi_sigma", "0.02", "background noise sigma as a fraction of channel std"),
    key("emi_pulse_width", "4e-6", "EMI pulse width (s)"),
    key("emi_pulse_amp", "0.25", "EMI pulse peak as a fraction of channel std"),
    // dataset
    key("write_dataset", "false", "simulate: also write a multi-condition dataset"),
    key("dataset_size", "200", "number of dataset waveforms"),
    key("dataset", "", "dataset directory for multi-condition training"),
    key("l_min", "80e-6", "dataset inductance lower bound (H)"),
    key("l_max", "200e-6", "dataset inductance upper bound (H)"),
    key("c_min", "5e-6", "dataset capacitance lower bound (F)"),
    key("c_max", "15e-6", "dataset capacitance upper bound (F)"),
    key("rs_min", "0.02", "dataset series resistance lower bound (ohm)"),
    key("rs_max", "0.5", "dataset series resistance upper bound (ohm)"),
    // training
    key("mode", "snn", "estimator: snn or ff"),
    key("protocol", "single", "training protocol: single (benchmark waveform) or multi (dataset)"),
    key("epochs", "3000", "single-waveform epochs"),
    key("lr", "5e-5", "single-waveform learning rate"),
    key("multi_epochs", "6000", "multi-condition epochs"),
    key("multi_lr", "1e-4", "multi-condition learning rate"),
    key("lr_bias_mult", "3", "learning-rate multiplier for the output bias"),
    key("clip_norm", "0.3", "SNN global gradient-norm limit (off: disabled)"),
    key("ff_clip_norm", "off", "feedforward global gradient-norm limit (off: disabled)"),
    key("solver_dt", "5e-6", "RK4 step inside the reconstruction loss (s)"),
    key("resume", "", "checkpoint to resume training from"),
    // SNN
    key("hidden", "128", "SNN hidden width"),
    key("beta", "0.9", "LIF membrane decay"),
    key("beta_out", "0.95", "readout decay"),
    key("u_thr", "1.0", "firing threshold"),
    key("alpha", "25", "surrogate-gradient slope"),
    // evaluation and efficiency
    key("checkpoint", "", "checkpoint for eval and efficiency"),
    key("waveform", "", "measured waveform CSV for eval and efficiency (empty: simulated benchmark)"),
    key("mac_energy", "15e-9", "energy per MAC (J)"),
    key("sop_energy", "9.9e-12", "energy per synaptic operation (J)"),
    key("snapshot_rate", "1", "inferences per second for always-on power (Hz)"),
    // monitoring
    key("snn_checkpoint", "", "multi-condition SNN checkpoint for degrade and monitor"),
    key("ff_checkpoint", "", "multi-condition feedforward checkpoint for degrade and monitor"),
    key("snapshots", "50", "degradation snapshots"),
    key("end_l", "120e-6", "inductance at the last snapshot (H)"),
    key("end_c", "7e-6", "capacitance at the last snapshot (F)"),
    key("end_rs", "0.3", "series resistance at the last snapshot (ohm)"),
    key("scenario", "abrupt", "monitoring scenario: healthy, abrupt or gradual"),
    key("cycles", "40", "monitoring cycles"),
    key("fault_cycle", "21", "first faulty cycle of the abrupt scenario"),
    key("rs_fault", "0.3", "series resistance after the fault (ohm)"),
    key("persistent", "true", "carry SNN state between monitoring cycles"),
    key("threshold_pp", "2", "fault threshold on the cycle-to-cycle spike-rate rise (percentage points)"),
    // report
    key("runs", "", "report: directory holding subcommand outputs (empty: $SPIKEID_OUT)"),
];

pub const OUT_ENV: &str = "SPIKEID_OUT";
const FALLBACK_ROOT: &str = "spikeid-out";

pub fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

pub fn lookup(name: &str) -> Option<&'static Key> {
    KEYS.iter().find(|k| k.name == name)
}

/// Resolved values, one per entry of [`KEYS`].
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: Vec<String>,
}

impl Default for Config {
    fn default() -> Self {
        Self { values: KEYS.iter().map(|k| k.default.to_string()).collect() }
    }
}

impl Config {
    fn index(name: &str) -> Result<usize, CliError> {
        KEYS.iter().position(|k| k.name == name).ok_or_else(|| CliError::Config(format!("unknown config key `{name}`")))
    }

    pub fn set(&mut self, name: &str, value: &str) -> Result<(), CliError> {
        let i = Self::index(name)?;
        self.values[i] = value.trim().to_string();
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment. Every unknown key is
    /// reported at once.
    pub fn apply_file_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        let mut unknown = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{origin}:{}: expected `key = value`", n + 1)))?;
            let k = k.trim();
            if lookup(k).is_none() {
                unknown.push(k.to_string());
                continue;
            }
            self.set(k, v)?;
        }
        if !unknown.is_empty() {
            return Err(CliError::Config(format!("{origin}: unknown config keys: {}", unknown.join(", "))));
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_file_text(&text, &path.display().to_string())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&'static str, &str)> {
        KEYS.iter().zip(&self.values).map(|(k, v)| (k.name, v.as_str()))
    }

    pub fn str(&self, name: &str) -> &str {
        &self.values[Self::index(name).expect("key is in the table")]
    }

    fn parsed<T: std::str::FromStr>(&self, name: &str, what: &str) -> Result<T, CliError> {
        self.str(name)
            .parse()
            .map_err(|_| CliError::Config(format!("`{name}` must be {what}, got `{}`", self.str(name))))
    }

    pub fn f64(&self, name: &str) -> Result<f64, CliError> {
        let v: f64 = self.parsed(name, "a number")?;
        if !v.is_finite() {
            return Err(CliError::Config(format!("`{name}` must be finite")));
        }
        Ok(v)
    }

    pub fn usize(&self, name: &str) -> Result<usize, CliError> {
        self.parsed(name, "a non-negative integer")
    }

    pub fn u64(&self, name: &str) -> Result<u64, CliError> {
        self.parsed(name, "a non-negative integer")
    }

    pub fn bool(&self, name: &str) -> Result<bool, CliError> {
        match self.str(name) {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            other => Err(CliError::Config(format!("`{name}` must be true or false, got `{other}`"))),
        }
    }

    /// `off` disables; anything else must be a positive number.
    pub fn optional_f64(&self, name: &str) -> Result<Option<f64>, CliError> {
        if matches!(self.str(name), "off" | "none" | "") {
            return Ok(None);
        }
        self.f64(name).map(Some)
    }

    pub fn path(&self, name: &str) -> Option<PathBuf> {
        let s = self.str(name);
        (!s.is_empty()).then(|| PathBuf::from(s))
    }

    pub fn output_root(&self) -> PathBuf {
        std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(FALLBACK_ROOT))
    }

    pub fn out_dir(&self, subcommand: &str) -> PathBuf {
        self.path("out").unwrap_or_else(|| self.output_root().join(subcommand))
    }

    pub fn converter(&self) -> Result<ConverterParams, CliError> {
        let p = ConverterParams {
            inductance: self.f64("true_l")?,
            capacitance: self.f64("true_c")?,
            series_resistance: self.f64("true_rs")?,
            input_voltage: self.f64("vg")?,
            duty: self.f64("duty")?,
            load_resistance: self.f64("load")?,
            switching_frequency: self.f64("fs")?,
        };
        p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(p)
    }

    pub fn acquisition(&self) -> Result<Acquisition, CliError> {
        let a = Acquisition { dt: self.f64("dt")?, span: self.f64("span")?, input_stride: self.usize("stride")? };
        a.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(a)
    }

    pub fn emi(&self) -> Result<EmiConfig, CliError> {
        let seed = self.u64("seed")?;
        let cfg = if self.bool("noise")? {
            EmiConfig {
                background_sigma_frac: self.f64("emi_sigma")?,
                pulse_width: self.f64("emi_pulse_width")?,
                pulse_amp_frac: self.f64("emi_pulse_amp")?,
                seed,
            }
        } else {
            EmiConfig { pulse_width: self.f64("emi_pulse_width")?, ..EmiConfig::silent(seed) }
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn ranges(&self) -> Result<ParamRanges, CliError> {
        let r = ParamRanges {
            inductance: (self.f64("l_min")?, self.f64("l_max")?),
            capacitance: (self.f64("c_min")?, self.f64("c_max")?),
            series_resistance: (self.f64("rs_min")?, self.f64("rs_max")?),
        };
        r.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(r)
    }

    pub fn snn(&self) -> Result<SnnConfig, CliError> {
        let cfg = SnnConfig {
            hidden: self.usize("hidden")?,
            beta: self.f64("beta")?,
            beta_out: self.f64("beta_out")?,
            u_thr: self.f64("u_thr")?,
            surrogate: SurrogateConfig::new(self.f64("alpha")?).map_err(|e| CliError::Config(e.to_string()))?,
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn is_multi(&self) -> Result<bool, CliError> {
        match self.str("protocol") {
            "single" => Ok(false),
            "multi" => Ok(true),
            other => Err(CliError::Config(format!("`protocol` must be single or multi, got `{other}`"))),
        }
    }

    pub fn train(&self, is_snn: bool) -> Result<TrainConfig, CliError> {
        let multi = self.is_multi()?;
        let cfg = TrainConfig {
            epochs: self.usize(if multi { "multi_epochs" } else { "epochs" })?,
            lr: self.f64(if multi { "multi_lr" } else { "lr" })?,
            lr_bias_mult: self.f64("lr_bias_mult")?,
            clip_norm: self.optional_f64(if is_snn { "clip_norm" } else { "ff_clip_norm" })?,
            seed: self.u64("seed")?,
            solver_dt: self.f64("solver_dt")?,
            sim_span: self.f64("span")?,
            start_epoch: 0,
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn catalog(&self) -> Result<EnergyCatalog, CliError> {
        let c = EnergyCatalog { mac_energy: self.f64("mac_energy")?, sop_energy: self.f64("sop_energy")? };
        c.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn schedule(&self) -> Result<DegradationSchedule, CliError> {
        let start = self.converter()?.passives();
        let end = Passives {
            inductance: self.f64("end_l")?,
            capacitance: self.f64("end_c")?,
            series_resistance: self.f64("end_rs")?,
        };
        let s = DegradationSchedule { snapshots: self.usize("snapshots")?, start, end };
        s.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(s)
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let kind: ScenarioKind = self.str("scenario").parse().map_err(|e: spikeid::Error| CliError::Config(e.to_string()))?;
        let s = Scenario {
            kind,
            cycles: self.usize("cycles")?,
            fault_cycle: self.usize("fault_cycle")?,
            rs_healthy: self.f64("true_rs")?,
            rs_fault: self.f64("rs_fault")?,
        };
        s.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(s)
    }
}

/// `--help` footer listing every key with its default.
pub fn key_table() -> String {
    let width = KEYS.iter().map(|k| k.name.len()).max().unwrap_or(0);
    let mut out = String::from("Config keys (file: `key = value`, flag: --key-name value; flags override the file):\n");
    for k in KEYS {
        let default = if k.default.is_empty() { "\"\"" } else { k.default };
        out.push_str(&format!("  {:width$}  {:>8}  {}\n", k.name, default, k.help));
    }
    out
}
