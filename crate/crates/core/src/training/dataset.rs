use std::fmt::Write as _;
use std::path::Path;

use rand::Rng as _;

use crate::converter::{add_emi_with, simulate, step_count, subsample, ConverterParams, EmiConfig, Passives, Waveform};
use crate::error::{Error, Result};
use crate::estimators::normalize_input;
use crate::rng::{self, streams};

/// How a measurement is taken: fine-grid RK4 over the window, and the stride
/// that thins it to estimator timesteps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Acquisition {
    pub dt: f64,
    pub span: f64,
    pub input_stride: usize,
}

impl Default for Acquisition {
    fn default() -> Self {
        Self { dt: 0.5e-6, span: 1.5e-3, input_stride: 30 }
    }
}

/// A clean and an EMI-corrupted copy of the same run.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub clean: Waveform,
    pub noisy: Waveform,
}

impl Acquisition {
    pub fn validate(&self) -> Result<()> {
        if self.input_stride == 0 {
            return Err(Error::invalid("input stride must be at least 1"));
        }
        step_count(self.span, self.dt).map(|_| ())
    }

    pub fn steps(&self) -> Result<usize> {
        step_count(self.span, self.dt)
    }

    pub fn clean(&self, p: &ConverterParams) -> Result<Waveform> {
        simulate(p, self.dt, self.steps()?, (0.0, 0.0))
    }

    /// Noise drawn from the `BENCHMARK_NOISE` stream of `emi.seed`.
    pub fn measure(&self, p: &ConverterParams, emi: &EmiConfig) -> Result<Measurement> {
        self.measure_with(p, emi, &mut rng::stream(emi.seed, streams::BENCHMARK_NOISE))
    }

    pub fn measure_with(&self, p: &ConverterParams, emi: &EmiConfig, rng: &mut rng::Rng) -> Result<Measurement> {
        emi.validate()?;
        let clean = self.clean(p)?;
        let noisy = add_emi_with(&clean, emi, p, rng);
        Ok(Measurement { clean, noisy })
    }

    /// Subsampled, normalized estimator input.
    pub fn input(&self, measured: &Waveform) -> Result<Vec<[f64; 2]>> {
        Ok(normalize_input(&subsample(measured, self.input_stride)?))
    }
}

/// Sampling box for the passive components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRanges {
    pub inductance: (f64, f64),
    pub capacitance: (f64, f64),
    pub series_resistance: (f64, f64),
}

impl Default for ParamRanges {
    fn default() -> Self {
        Self { inductance: (80e-6, 200e-6), capacitance: (5e-6, 15e-6), series_resistance: (0.02, 0.5) }
    }
}

impl ParamRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("L", self.inductance), ("C", self.capacitance), ("Rs", self.series_resistance)] {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::invalid(format!("{name} range [{lo:e}, {hi:e}] must satisfy 0 < lower < upper")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: Passives) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        inside(p.inductance, self.inductance)
            && inside(p.capacitance, self.capacitance)
            && inside(p.series_resistance, self.series_resistance)
    }
}

/// Componentwise uniform passives; every other constant is the benchmark's.
pub fn sample_params(ranges: &ParamRanges, rng: &mut rng::Rng) -> ConverterParams {
    let mut draw = |(lo, hi): (f64, f64)| rng.gen_range(lo..hi);
    let p = Passives {
        inductance: draw(ranges.inductance),
        capacitance: draw(ranges.capacitance),
        series_resistance: draw(ranges.series_resistance),
    };
    ConverterParams::BENCHMARK.with_passives(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub params: ConverterParams,
    pub measured: Waveform,
}

/// `n` noisy waveforms with sampled passives.
///
/// Passives come from stream `DATASET` of `seed`, in item order; item `i`
/// draws its noise from stream `DATASET + 1 + i`, so the result does not
/// depend on `jobs`.
pub fn generate_dataset(
    n: usize,
    ranges: &ParamRanges,
    acq: &Acquisition,
    emi: &EmiConfig,
    seed: u64,
    jobs: usize,
) -> Result<Vec<DatasetEntry>> {
    ranges.validate()?;
    acq.validate()?;
    let mut prng = rng::stream(seed, streams::DATASET);
    let params: Vec<ConverterParams> = (0..n).map(|_| sample_params(ranges, &mut prng)).collect();
    let make = |i: usize| -> Result<DatasetEntry> {
        let mut noise = rng::stream(seed, streams::DATASET + 1 + i as u64);
        let m = acq.measure_with(&params[i], emi, &mut noise)?;
        Ok(DatasetEntry { params: params[i], measured: m.noisy })
    };
    let jobs = jobs.clamp(1, n.max(1));
    if jobs == 1 {
        return (0..n).map(make).collect();
    }
    let chunk = n.div_ceil(jobs);
    let mut parts: Vec<Result<Vec<DatasetEntry>>> = Vec::new();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|j| {
                let make = &make;
                s.spawn(move || (j * chunk..((j + 1) * chunk).min(n)).map(make).collect::<Result<Vec<_>>>())
            })
            .collect();
        parts = handles.into_iter().map(|h| h.join().expect("dataset worker panicked")).collect();
    });
    let mut out = Vec::with_capacity(n);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

const INDEX_FILE: &str = "params.csv";
const INDEX_HEADER: &str = "index,L,C,Rs,file";

/// Writes `params.csv` and one waveform CSV per entry into `dir`.
pub fn save_dataset(dir: &Path, entries: &[DatasetEntry]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut index = String::from(INDEX_HEADER);
    index.push('\n');
    for (i, e) in entries.iter().enumerate() {
        let file = format!("wave_{i:04}.csv");
        e.measured.write_csv(&dir.join(&file))?;
        let p = e.params;
        writeln!(index, "{i},{:e},{:e},{:e},{file}", p.inductance, p.capacitance, p.series_resistance).unwrap();
    }
    std::fs::write(dir.join(INDEX_FILE), index)?;
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<Vec<DatasetEntry>> {
    let index_path = dir.join(INDEX_FILE);
    let text = std::fs::read_to_string(&index_path)
        .map_err(|e| Error::Parse(format!("cannot read dataset index {}: {e}", index_path.display())))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(INDEX_HEADER) {
        return Err(Error::Parse(format!("{} must start with `{INDEX_HEADER}`", index_path.display())));
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 5 {
            return Err(Error::Parse(format!("dataset index line {}: expected 5 fields", n + 2)));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("dataset index line {}: {e}", n + 2)));
        let p = Passives { inductance: num(f[1])?, capacitance: num(f[2])?, series_resistance: num(f[3])? };
        let params = ConverterParams::BENCHMARK.with_passives(p);
        params.validate()?;
        out.push(DatasetEntry { params, measured: Waveform::read_csv(&dir.join(f[4]))? });
    }
    if out.is_empty() {
        return Err(Error::Parse(format!("dataset {} is empty", dir.display())));
    }
    Ok(out)
}
