//! Averaged buck-converter model, fixed-step RK4 integration (plain and
//! differentiable), switching-synchronous EMI synthesis and waveform I/O.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::rng;

/// Circuit constants and passive-component values of a synchronous buck converter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConverterParams {
    /// Inductance (H).
    pub inductance: f64,
    /// Output capacitance (F).
    pub capacitance: f64,
    /// Lumped series resistance in the inductor path (Ω).
    pub series_resistance: f64,
    /// Input voltage (V).
    pub input_voltage: f64,
    /// Duty ratio in (0, 1).
    pub duty: f64,
    /// Load resistance (Ω).
    pub load_resistance: f64,
    /// Switching frequency (Hz).
    pub switching_frequency: f64,
}

impl ConverterParams {
    /// Benchmark converter: 20 V in, d = 0.5, 10 kHz, 10 Ω load, 138 µH, 10 µF, 0.1 Ω.
    pub const BENCHMARK: ConverterParams = ConverterParams {
        inductance: 138e-6,
        capacitance: 10e-6,
        series_resistance: 0.1,
        input_voltage: 20.0,
        duty: 0.5,
        load_resistance: 10.0,
        switching_frequency: 10e3,
    };

    pub fn validate(&self) -> Result<()> {
        let ok = self.inductance > 0.0
            && self.capacitance > 0.0
            && self.series_resistance >= 0.0
            && self.input_voltage > 0.0
            && self.duty > 0.0
            && self.duty < 1.0
            && self.load_resistance > 0.0
            && self.switching_frequency > 0.0
            && [
                self.inductance,
                self.capacitance,
                self.series_resistance,
                self.input_voltage,
                self.load_resistance,
                self.switching_frequency,
            ]
            .iter()
            .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("converter parameters out of range: {self:?}")))
        }
    }

    pub fn passives(&self) -> Passives {
        Passives { inductance: self.inductance, capacitance: self.capacitance, series_resistance: self.series_resistance }
    }

    pub fn with_passives(mut self, p: Passives) -> Self {
        self.inductance = p.inductance;
        self.capacitance = p.capacitance;
        self.series_resistance = p.series_resistance;
        self
    }

    /// Equilibrium `(iL, Vo)` of the averaged model.
    pub fn steady_state(&self) -> (f64, f64) {
        let vo = self.duty * self.input_voltage / (1.0 + self.series_resistance / self.load_resistance);
        (vo / self.load_resistance, vo)
    }
}

impl Default for ConverterParams {
    fn default() -> Self {
        Self::BENCHMARK
    }
}

/// The three identified quantities (L, C, Rs).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Passives {
    pub inductance: f64,
    pub capacitance: f64,
    pub series_resistance: f64,
}

impl Passives {
    pub fn to_array(self) -> [f64; 3] {
        [self.inductance, self.capacitance, self.series_resistance]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { inductance: a[0], capacitance: a[1], series_resistance: a[2] }
    }

    /// Componentwise `|self − truth| / truth`.
    pub fn relative_error(self, truth: Passives) -> [f64; 3] {
        let (a, b) = (self.to_array(), truth.to_array());
        [0, 1, 2].map(|i| (a[i] - b[i]).abs() / b[i])
    }

    pub fn all_positive_finite(self) -> bool {
        self.to_array().iter().all(|v| v.is_finite() && *v > 0.0)
    }
}

/// Right-hand side of the averaged model: `(diL/dt, dVo/dt)`.
pub fn buck_rhs(state: (f64, f64), p: &ConverterParams) -> (f64, f64) {
    let (il, vo) = state;
    let dil = (p.duty * p.input_voltage - vo - p.series_resistance * il) / p.inductance;
    let dvo = (il - vo / p.load_resistance) / p.capacitance;
    (dil, dvo)
}

/// Uniformly sampled inductor current and output voltage.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    /// Sample period (s).
    pub dt: f64,
    /// Time of the first sample (s).
    pub t0: f64,
    /// Inductor current (A).
    pub il: Vec<f64>,
    /// Output voltage (V).
    pub vo: Vec<f64>,
}

impl Waveform {
    pub fn new(dt: f64, t0: f64, il: Vec<f64>, vo: Vec<f64>) -> Result<Self> {
        if il.len() != vo.len() || il.is_empty() {
            return Err(Error::invalid(format!("waveform channels must be equal and non-empty ({} vs {})", il.len(), vo.len())));
        }
        if !(dt > 0.0 && dt.is_finite()) || !t0.is_finite() {
            return Err(Error::invalid(format!("waveform timing invalid: dt = {dt}, t0 = {t0}")));
        }
        if il.iter().chain(&vo).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { op: "waveform" });
        }
        Ok(Self { dt, t0, il, vo })
    }

    pub fn len(&self) -> usize {
        self.il.len()
    }

    pub fn is_empty(&self) -> bool {
        self.il.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.len() - 1)
    }

    /// Samples at `t0 + k·dt`, `k = 0..n`, matched by exact time against this
    /// waveform's grid.
    pub fn aligned(&self, t0: f64, dt: f64, n: usize) -> Result<Waveform> {
        let tol = 1e-6 * self.dt;
        let mut il = Vec::with_capacity(n);
        let mut vo = Vec::with_capacity(n);
        for k in 0..n {
            let t = t0 + k as f64 * dt;
            let pos = (t - self.t0) / self.dt;
            let idx = pos.round();
            if idx < 0.0 || idx as usize >= self.len() || ((idx - pos) * self.dt).abs() > tol {
                return Err(Error::invalid(format!("time {t:e} s is not on the measurement grid")));
            }
            il.push(self.il[idx as usize]);
            vo.push(self.vo[idx as usize]);
        }
        Waveform::new(dt, t0, il, vo)
    }

    /// CSV with header `t,iL,Vo` and 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * self.len());
        out.push_str("t,iL,Vo\n");
        for k in 0..self.len() {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", self.time(k), self.il[k], self.vo[k]).unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.to_csv().as_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<Waveform> {
        let mut lines = text.lines();
        match lines.next().map(str::trim) {
            Some("t,iL,Vo") => {}
            other => return Err(Error::Parse(format!("expected header `t,iL,Vo`, found {other:?}"))),
        }
        let (mut t, mut il, mut vo) = (Vec::new(), Vec::new(), Vec::new());
        for (n, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected 3 fields", n + 2)));
            }
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", n + 2)));
            t.push(parse(fields[0])?);
            il.push(parse(fields[1])?);
            vo.push(parse(fields[2])?);
        }
        if t.is_empty() {
            return Err(Error::Parse("waveform CSV has no samples".into()));
        }
        let dt = if t.len() > 1 { (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64 } else { t[0] };
        Waveform::new(dt, t[0], il, vo)
    }

    pub fn read_csv(path: &Path) -> Result<Waveform> {
        let mut text = String::new();
        for line in std::io::BufReader::new(std::fs::File::open(path)?).lines() {
            text.push_str(&line?);
            text.push('\n');
        }
        Self::from_csv(&text)
    }
}

/// Plain fixed-step RK4 of the averaged model from `init` at t = 0. Returns
/// the `steps` states at `t = dt·k`, `k = 1..=steps`; the initial state itself
/// is not stored.
pub fn simulate(p: &ConverterParams, dt: f64, steps: usize, init: (f64, f64)) -> Result<Waveform> {
    p.validate()?;
    if steps == 0 {
        return Err(Error::invalid("simulation needs at least one step"));
    }
    let mut il = Vec::with_capacity(steps);
    let mut vo = Vec::with_capacity(steps);
    let (mut x, mut y) = init;
    for step in 0..steps {
        let (k1x, k1y) = buck_rhs((x, y), p);
        let (k2x, k2y) = buck_rhs((x + 0.5 * dt * k1x, y + 0.5 * dt * k1y), p);
        let (k3x, k3y) = buck_rhs((x + 0.5 * dt * k2x, y + 0.5 * dt * k2y), p);
        let (k4x, k4y) = buck_rhs((x + dt * k3x, y + dt * k3y), p);
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        y += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::Diverged { step });
        }
        il.push(x);
        vo.push(y);
    }
    Waveform::new(dt, dt, il, vo)
}

/// Number of fixed steps covering `span` at `dt`; rejects spans that are not a
/// whole number of steps.
pub fn step_count(span: f64, dt: f64) -> Result<usize> {
    if !(span > 0.0 && dt > 0.0) {
        return Err(Error::invalid(format!("span {span} and step {dt} must be positive")));
    }
    let ratio = span / dt;
    let n = (ratio + 1e-9).floor();
    if ratio - n > 1e-6 || n < 1.0 {
        return Err(Error::invalid(format!("span {span:e} s is not a whole number of {dt:e} s steps")));
    }
    Ok(n as usize)
}

/// Differentiable passive parameters recorded on a tape.
#[derive(Debug, Clone, Copy)]
pub struct TapePassives<'t> {
    pub inductance: Var<'t>,
    pub capacitance: Var<'t>,
    pub series_resistance: Var<'t>,
}

/// Solver output recorded on a tape: one vector per channel, sampled at
/// `t0 + k·dt`.
#[derive(Debug, Clone, Copy)]
pub struct TapeWaveform<'t> {
    pub dt: f64,
    pub t0: f64,
    pub il: Var<'t>,
    pub vo: Var<'t>,
}

impl TapeWaveform<'_> {
    pub fn to_waveform(&self) -> Result<Waveform> {
        Waveform::new(self.dt, self.t0, self.il.to_vec(), self.vo.to_vec())
    }
}

/// Fixed-step RK4 over `t_span` recorded on `tape`, differentiable with respect
/// to the passive parameters. `known` supplies Vg, d and R; its passive fields
/// are ignored. Samples are stored at the end of every step.
pub fn rk4_integrate<'t>(
    tape: &'t Tape,
    passives: TapePassives<'t>,
    known: &ConverterParams,
    t_span: (f64, f64),
    dt: f64,
    init: (f64, f64),
) -> Result<TapeWaveform<'t>> {
    let steps = step_count(t_span.1 - t_span.0, dt)?;
    let drive = known.duty * known.input_voltage;
    let inv_load = 1.0 / known.load_resistance;
    let at = |step: usize| move |e: Error| if e.is_numerical() { Error::Diverged { step } } else { e };

    let inv_l = passives.inductance.recip().map_err(at(0))?;
    let inv_c = passives.capacitance.recip().map_err(at(0))?;
    let rs = passives.series_resistance;
    let rhs = |il: Var<'t>, vo: Var<'t>| -> Result<(Var<'t>, Var<'t>)> {
        // (d·Vg − Vo − Rs·iL) / L
        let dil = vo.add(rs.mul(il)?)?.affine(-1.0, drive)?.mul(inv_l)?;
        // (iL − Vo/R) / C
        let dvo = il.axpy(-inv_load, vo)?.mul(inv_c)?;
        Ok((dil, dvo))
    };

    let mut il = tape.scalar(init.0)?;
    let mut vo = tape.scalar(init.1)?;
    let mut il_out = Vec::with_capacity(steps);
    let mut vo_out = Vec::with_capacity(steps);
    for step in 0..steps {
        let advance = || -> Result<(Var<'t>, Var<'t>)> {
            let (k1i, k1v) = rhs(il, vo)?;
            let (k2i, k2v) = rhs(il.axpy(0.5 * dt, k1i)?, vo.axpy(0.5 * dt, k1v)?)?;
            let (k3i, k3v) = rhs(il.axpy(0.5 * dt, k2i)?, vo.axpy(0.5 * dt, k2v)?)?;
            let (k4i, k4v) = rhs(il.axpy(dt, k3i)?, vo.axpy(dt, k3v)?)?;
            let si = k1i.axpy(2.0, k2i)?.axpy(2.0, k3i)?.add(k4i)?;
            let sv = k1v.axpy(2.0, k2v)?.axpy(2.0, k3v)?.add(k4v)?;
            Ok((il.axpy(dt / 6.0, si)?, vo.axpy(dt / 6.0, sv)?))
        };
        let (ni, nv) = advance().map_err(at(step))?;
        il = ni;
        vo = nv;
        il_out.push(il);
        vo_out.push(vo);
    }
    Ok(TapeWaveform { dt, t0: t_span.0 + dt, il: tape.stack(&il_out)?, vo: tape.stack(&vo_out)? })
}

/// Switching-synchronous interference added on top of measured waveforms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmiConfig {
    /// Background Gaussian σ as a fraction of the channel's standard deviation.
    pub background_sigma_frac: f64,
    /// Full width of each Gaussian-envelope pulse (s); the envelope σ is half of it.
    pub pulse_width: f64,
    /// Pulse peak as a fraction of the channel's standard deviation.
    pub pulse_amp_frac: f64,
    pub seed: u64,
}

impl Default for EmiConfig {
    fn default() -> Self {
        Self { background_sigma_frac: 0.02, pulse_width: 4e-6, pulse_amp_frac: 0.25, seed: 0 }
    }
}

impl EmiConfig {
    pub fn silent(seed: u64) -> Self {
        Self { background_sigma_frac: 0.0, pulse_width: 4e-6, pulse_amp_frac: 0.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.background_sigma_frac >= 0.0 && self.pulse_amp_frac >= 0.0 && self.pulse_width > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("EMI configuration out of range: {self:?}")))
        }
    }
}

/// Population standard deviation.
pub fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// PWM turn-on (`k/fs`) and turn-off (`(k+d)/fs`) instants in `[start, end)`,
/// in time order.
pub fn switching_edges(p: &ConverterParams, start: f64, end: f64) -> Vec<f64> {
    let period = 1.0 / p.switching_frequency;
    let eps = 1e-9 * period;
    let first = ((start - p.duty * period) / period).floor().max(0.0) as usize;
    let mut edges = Vec::new();
    let mut k = first;
    loop {
        let on = k as f64 * period;
        if on >= end - eps {
            break;
        }
        for t in [on, (k as f64 + p.duty) * period] {
            if t >= start - eps && t < end - eps {
                edges.push(t);
            }
        }
        k += 1;
    }
    edges
}

/// Adds background noise and PWM-edge pulses to both channels.
///
/// Draw order from stream `BENCHMARK_NOISE` of `cfg.seed`: background for iL,
/// background for Vo, then one sign per edge per channel (iL before Vo).
pub fn add_emi(w: &Waveform, cfg: &EmiConfig, p: &ConverterParams) -> Waveform {
    add_emi_with(w, cfg, p, &mut rng::stream(cfg.seed, rng::streams::BENCHMARK_NOISE))
}

/// [`add_emi`] drawing from a caller-provided generator.
pub fn add_emi_with(w: &Waveform, cfg: &EmiConfig, p: &ConverterParams, rng: &mut rng::Rng) -> Waveform {
    let mut out = w.clone();
    if cfg.background_sigma_frac == 0.0 && cfg.pulse_amp_frac == 0.0 {
        return out;
    }
    let scales = [std_dev(&w.il), std_dev(&w.vo)];
    {
        let channels = [&mut out.il, &mut out.vo];
        for (ch, scale) in channels.into_iter().zip(scales) {
            let sigma = cfg.background_sigma_frac * scale;
            for v in ch.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v += sigma * z;
            }
        }
    }
    if cfg.pulse_amp_frac == 0.0 {
        return out;
    }
    let sigma_p = cfg.pulse_width / 2.0;
    let reach = 8.0 * sigma_p;
    // samples represent [t0 − dt, t_end): the implicit initial state sits at t0 − dt
    let edges = switching_edges(p, w.t0 - w.dt, w.end_time());
    for edge in edges {
        let signs = [rng.gen::<bool>(), rng.gen::<bool>()];
        let lo = (((edge - reach - w.t0) / w.dt).floor().max(0.0)) as usize;
        let hi = ((((edge + reach - w.t0) / w.dt).ceil()).max(0.0) as usize).min(w.len().saturating_sub(1));
        for k in lo..=hi {
            let x = (w.time(k) - edge) / sigma_p;
            let env = (-0.5 * x * x).exp();
            for (c, (ch, scale)) in [&mut out.il, &mut out.vo].into_iter().zip(scales).enumerate() {
                let amp = if signs[c] { 1.0 } else { -1.0 } * cfg.pulse_amp_frac * scale;
                ch[k] += amp * env;
            }
        }
    }
    out
}

/// Keeps samples `0, stride, 2·stride, …`.
pub fn subsample(w: &Waveform, stride: usize) -> Result<Waveform> {
    if stride == 0 {
        return Err(Error::invalid("subsample stride must be at least 1"));
    }
    let il: Vec<f64> = w.il.iter().step_by(stride).copied().collect();
    let vo: Vec<f64> = w.vo.iter().step_by(stride).copied().collect();
    if il.is_empty() {
        return Err(Error::invalid("subsampling produced an empty waveform"));
    }
    Waveform::new(w.dt * stride as f64, w.t0, il, vo)
}
