//! Degradation tracking over independent snapshots and event-driven
//! monitoring with membrane state carried between cycles.

use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::Path;

use crate::converter::{ConverterParams, EmiConfig, Passives};
use crate::error::{Error, Result};
use crate::estimators::{Estimator, FfEstimator, SnnEstimator, SnnState};
use crate::rng::{self, streams};
use crate::training::Acquisition;

/// Linear drift of the passives from `start` (first snapshot) to `end` (last).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradationSchedule {
    pub snapshots: usize,
    pub start: Passives,
    pub end: Passives,
}

impl Default for DegradationSchedule {
    fn default() -> Self {
        Self {
            snapshots: 50,
            start: Passives { inductance: 138e-6, capacitance: 10e-6, series_resistance: 0.1 },
            end: Passives { inductance: 120e-6, capacitance: 7e-6, series_resistance: 0.3 },
        }
    }
}

impl DegradationSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.snapshots < 2 {
            return Err(Error::invalid("a degradation schedule needs at least 2 snapshots"));
        }
        if !self.start.all_positive_finite() || !self.end.all_positive_finite() {
            return Err(Error::invalid("degradation endpoints must be positive"));
        }
        Ok(())
    }

    /// Passives at 0-based snapshot `i`.
    pub fn at(&self, i: usize) -> Passives {
        let f = i as f64 / (self.snapshots - 1) as f64;
        let (a, b) = (self.start.to_array(), self.end.to_array());
        Passives::from_array([0, 1, 2].map(|j| a[j] + (b[j] - a[j]) * f))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Healthy,
    Abrupt,
    Gradual,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Healthy => "healthy",
            ScenarioKind::Abrupt => "abrupt",
            ScenarioKind::Gradual => "gradual",
        }
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "healthy" => Ok(Self::Healthy),
            "abrupt" => Ok(Self::Abrupt),
            "gradual" => Ok(Self::Gradual),
            other => Err(Error::invalid(format!("unknown scenario `{other}` (healthy, abrupt, gradual)"))),
        }
    }
}

/// A sequence of monitoring cycles on the benchmark converter with a
/// series-resistance fault.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub cycles: usize,
    /// First faulty cycle (1-based) of the abrupt scenario.
    pub fault_cycle: usize,
    pub rs_healthy: f64,
    pub rs_fault: f64,
}

impl Scenario {
    pub fn new(kind: ScenarioKind) -> Self {
        Self { kind, cycles: 40, fault_cycle: 21, rs_healthy: 0.1, rs_fault: 0.3 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cycles < 2 || self.fault_cycle < 1 || self.fault_cycle > self.cycles {
            return Err(Error::invalid(format!(
                "scenario needs 2 or more cycles and 1 <= fault cycle <= cycles (got {} and {})",
                self.cycles, self.fault_cycle
            )));
        }
        if !(self.rs_healthy >= 0.0 && self.rs_fault >= 0.0) {
            return Err(Error::invalid("series resistances must be non-negative"));
        }
        Ok(())
    }

    /// True series resistance at 1-based `cycle`.
    pub fn rs_at(&self, cycle: usize) -> f64 {
        match self.kind {
            ScenarioKind::Healthy => self.rs_healthy,
            ScenarioKind::Abrupt if cycle < self.fault_cycle => self.rs_healthy,
            ScenarioKind::Abrupt => self.rs_fault,
            ScenarioKind::Gradual => {
                let f = (cycle - 1) as f64 / (self.cycles - 1) as f64;
                self.rs_healthy + (self.rs_fault - self.rs_healthy) * f
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRow {
    /// 1-based cycle or snapshot number.
    pub cycle: usize,
    pub truth: Passives,
    pub snn: Passives,
    pub ff: Passives,
    /// Mean hidden-layer firing rate over the cycle.
    pub spike_rate: f64,
    pub persistent: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonitorLog {
    pub rows: Vec<MonitorRow>,
}

pub const MONITOR_HEADER: &str = "cycle,true_L,true_C,true_Rs,snn_L,snn_C,snn_Rs,ff_L,ff_C,ff_Rs,spike_rate,persistent";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Snn,
    Ff,
}

impl MonitorLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(MONITOR_HEADER);
        out.push('\n');
        for r in &self.rows {
            write!(out, "{}", r.cycle).unwrap();
            for p in [r.truth, r.snn, r.ff] {
                write!(out, ",{:e},{:e},{:e}", p.inductance, p.capacitance, p.series_resistance).unwrap();
            }
            writeln!(out, ",{:e},{}", r.spike_rate, r.persistent).unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(MONITOR_HEADER) {
            return Err(Error::Parse(format!("monitor log must start with `{MONITOR_HEADER}`")));
        }
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = |what: String| Error::Parse(format!("monitor log line {}: {what}", n + 2));
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 12 {
                return Err(bad(format!("expected 12 fields, found {}", f.len())));
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|e| bad(e.to_string()));
            let triple = |i: usize| -> Result<Passives> { Ok(Passives::from_array([num(i)?, num(i + 1)?, num(i + 2)?])) };
            rows.push(MonitorRow {
                cycle: f[0].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                truth: triple(1)?,
                snn: triple(4)?,
                ff: triple(7)?,
                spike_rate: num(10)?,
                persistent: f[11].parse().map_err(|e: std::str::ParseBoolError| bad(e.to_string()))?,
            });
        }
        Ok(Self { rows })
    }

    pub fn spike_rates(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.spike_rate).collect()
    }

    fn window(&self, window: &RangeInclusive<usize>) -> Result<Vec<&MonitorRow>> {
        let rows: Vec<&MonitorRow> = self.rows.iter().filter(|r| window.contains(&r.cycle)).collect();
        if rows.is_empty() {
            return Err(Error::invalid(format!("no cycles in window {}..={}", window.start(), window.end())));
        }
        Ok(rows)
    }

    /// Mean spike rate over the 1-based cycle window.
    pub fn mean_rate(&self, window: RangeInclusive<usize>) -> Result<f64> {
        let rows = self.window(&window)?;
        Ok(rows.iter().map(|r| r.spike_rate).sum::<f64>() / rows.len() as f64)
    }

    /// Mean `|estimate − true|` of Rs in Ω over the 1-based cycle window.
    pub fn rs_mae(&self, window: RangeInclusive<usize>, which: Which) -> Result<f64> {
        let rows = self.window(&window)?;
        let est = |r: &MonitorRow| match which {
            Which::Snn => r.snn.series_resistance,
            Which::Ff => r.ff.series_resistance,
        };
        Ok(rows.iter().map(|r| (est(r) - r.truth.series_resistance).abs()).sum::<f64>() / rows.len() as f64)
    }

    /// Mean relative error of `(L, C, Rs)` over every row.
    pub fn mean_relative_errors(&self, which: Which) -> Result<[f64; 3]> {
        if self.rows.is_empty() {
            return Err(Error::invalid("empty monitor log"));
        }
        let mut acc = [0.0; 3];
        for r in &self.rows {
            let est = if which == Which::Snn { r.snn } else { r.ff };
            for (a, e) in acc.iter_mut().zip(est.relative_error(r.truth)) {
                *a += e;
            }
        }
        Ok(acc.map(|a| a / self.rows.len() as f64))
    }
}

/// 1-based cycle of the first rise of at least `threshold_pp` percentage
/// points over the previous cycle's rate.
pub fn detect_fault(rates: &[f64], threshold_pp: f64) -> Option<usize> {
    let thr = threshold_pp / 100.0;
    rates.windows(2).position(|w| w[1] - w[0] >= thr).map(|i| i + 2)
}

pub const DEFAULT_THRESHOLD_PP: f64 = 2.0;

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid("rank correlation needs two equal-length series of 2 or more points"));
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - mean) * (y - mean);
        saa += (x - mean) * (x - mean);
        sbb += (y - mean) * (y - mean);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate("constant series has no rank correlation".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Evaluates both estimators on an independently noised waveform per snapshot,
/// starting the SNN from rest every time. Snapshot `i` draws its noise from
/// stream `DEGRADATION + i` of `seed`.
pub fn run_degradation(
    snn: &SnnEstimator,
    ff: &FfEstimator,
    sched: &DegradationSchedule,
    acq: &Acquisition,
    emi: &EmiConfig,
    seed: u64,
) -> Result<MonitorLog> {
    sched.validate()?;
    let mut log = MonitorLog::default();
    for i in 0..sched.snapshots {
        let truth = sched.at(i);
        let p = ConverterParams::BENCHMARK.with_passives(truth);
        let mut noise = rng::stream(seed, streams::DEGRADATION + i as u64);
        let m = acq.measure_with(&p, emi, &mut noise)?;
        let input = acq.input(&m.noisy)?;
        let (snn_est, rec, _) = snn.predict(&input, None)?;
        log.rows.push(MonitorRow {
            cycle: i + 1,
            truth,
            snn: snn_est,
            ff: ff.estimate(&input)?,
            spike_rate: rec.mean_rate(),
            persistent: false,
        });
    }
    Ok(log)
}

/// Runs the scenario cycle by cycle. With `persistent`, each cycle's SNN pass
/// starts from the previous cycle's final state. Cycle `c` draws its noise
/// from stream `MONITOR + c` of `seed`.
pub fn run_event_driven(
    snn: &SnnEstimator,
    ff: &FfEstimator,
    sc: &Scenario,
    acq: &Acquisition,
    emi: &EmiConfig,
    seed: u64,
    persistent: bool,
) -> Result<MonitorLog> {
    sc.validate()?;
    let base = ConverterParams::BENCHMARK;
    let mut log = MonitorLog::default();
    let mut state: Option<SnnState> = None;
    for cycle in 1..=sc.cycles {
        let truth = Passives { series_resistance: sc.rs_at(cycle), ..base.passives() };
        let p = base.with_passives(truth);
        let mut noise = rng::stream(seed, streams::MONITOR + cycle as u64);
        let m = acq.measure_with(&p, emi, &mut noise)?;
        let input = acq.input(&m.noisy)?;
        let carried = if persistent { state.as_ref() } else { None };
        let (snn_est, rec, final_state) = snn.predict(&input, carried)?;
        state = Some(final_state);
        log.rows.push(MonitorRow {
            cycle,
            truth,
            snn: snn_est,
            ff: ff.estimate(&input)?,
            spike_rate: rec.mean_rate(),
            persistent,
        });
    }
    Ok(log)
}

/// Headline figures of one monitoring scenario run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSummary {
    pub pre_mae: [f64; 2],
    pub post_mae: [f64; 2],
    pub early_rate: f64,
    pub late_rate: f64,
    pub detected: Option<usize>,
}

impl EventSummary {
    /// Pre/post windows split at the fault cycle; early and late rates over
    /// the first and last quarter of the run.
    pub fn from_log(log: &MonitorLog, sc: &Scenario, threshold_pp: f64) -> Result<Self> {
        let split = sc.fault_cycle.clamp(2, sc.cycles);
        let quarter = (sc.cycles / 4).max(1);
        let mae = |w: RangeInclusive<usize>| -> Result<[f64; 2]> {
            Ok([log.rs_mae(w.clone(), Which::Snn)?, log.rs_mae(w, Which::Ff)?])
        };
        Ok(Self {
            pre_mae: mae(1..=split - 1)?,
            post_mae: mae(split..=sc.cycles)?,
            early_rate: log.mean_rate(1..=quarter)?,
            late_rate: log.mean_rate(sc.cycles + 1 - quarter..=sc.cycles)?,
            detected: detect_fault(&log.spike_rates(), threshold_pp),
        })
    }
}
