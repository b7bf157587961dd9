use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use spikeid::converter::{simulate, step_count, subsample, ConverterParams, Passives, Waveform};
use spikeid::efficiency::{efficiency_metrics, metrics_csv, raster_csv, rate_profiles, Metric};
use spikeid::estimators::{Checkpoint, Estimator, EstimatorKind, FfEstimator, Model, SnnEstimator};
use spikeid::monitoring::{
    run_degradation, run_event_driven, spearman, EventSummary, MonitorLog, Scenario, Which,
};
use spikeid::training::{
    generate_dataset, load_dataset, reconstruction_loss_value, save_dataset, train_multi, train_single, History,
    HistoryRow, TrainOutcome,
};

use crate::config::Config;
use crate::error::CliError;

pub const SUBCOMMANDS: &[(&str, &str)] = &[
    ("simulate", "Simulate the converter and write clean, noisy and subsampled waveforms"),
    ("train", "Train an estimator on the benchmark waveform or a multi-condition dataset"),
    ("eval", "Evaluate a checkpoint on a measured waveform"),
    ("efficiency", "Record SNN spikes for one inference and project energy use"),
    ("degrade", "Track a linear degradation over independent snapshots"),
    ("monitor", "Event-driven monitoring of a series-resistance fault"),
    ("report", "Summarize the outputs of earlier subcommands"),
];

pub fn run(subcommand: &str, cfg: &Config) -> Result<(), CliError> {
    let dir = prepare(subcommand, cfg)?;
    match subcommand {
        "simulate" => cmd_simulate(cfg, &dir),
        "train" => cmd_train(cfg, &dir),
        "eval" => cmd_eval(cfg, &dir),
        "efficiency" => cmd_efficiency(cfg, &dir),
        "degrade" => cmd_degrade(cfg, &dir),
        "monitor" => cmd_monitor(cfg, &dir),
        "report" => cmd_report(cfg, &dir),
        other => Err(CliError::Config(format!("unknown subcommand `{other}`"))),
    }
}

/// Creates the output directory and writes the manifest before any work.
fn prepare(subcommand: &str, cfg: &Config) -> Result<PathBuf, CliError> {
    let dir = cfg.out_dir(subcommand);
    std::fs::create_dir_all(&dir)?;
    let mut m = String::new();
    writeln!(m, "subcommand={subcommand}").unwrap();
    writeln!(m, "version={}", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(m, "output_dir={}", dir.display()).unwrap();
    for (k, v) in cfg.entries() {
        writeln!(m, "{k}={v}").unwrap();
    }
    std::fs::write(dir.join("manifest.txt"), m)?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

/// The measured waveform from `waveform`, or a fresh benchmark simulation.
fn measurement(cfg: &Config) -> Result<(ConverterParams, Waveform), CliError> {
    let p = cfg.converter()?;
    match cfg.path("waveform") {
        Some(path) => Ok((p, Waveform::read_csv(&path)?)),
        None => Ok((p, cfg.acquisition()?.measure(&p, &cfg.emi()?)?.noisy)),
    }
}

fn table_row(out: &mut String, label: &str, scale: f64, truth: f64, est: f64) {
    let err = (est - truth).abs() / truth * 100.0;
    writeln!(out, "{label:<10}{:>12.4}{:>12.4}{:>10.2}%", truth * scale, est * scale, err).unwrap();
}

/// True value, estimate and relative error per parameter.
fn param_table(truth: Passives, est: Passives) -> String {
    let mut out = format!("{:<10}{:>12}{:>12}{:>11}\n", "", "True", "Estimate", "Error");
    table_row(&mut out, "L (uH)", 1e6, truth.inductance, est.inductance);
    table_row(&mut out, "C (uF)", 1e6, truth.capacitance, est.capacitance);
    table_row(&mut out, "Rs (ohm)", 1.0, truth.series_resistance, est.series_resistance);
    out
}

fn cmd_simulate(cfg: &Config, dir: &Path) -> Result<(), CliError> {
    let p = cfg.converter()?;
    let acq = cfg.acquisition()?;
    let emi = cfg.emi()?;
    let m = acq.measure(&p, &emi)?;
    m.clean.write_csv(&dir.join("clean.csv"))?;
    m.noisy.write_csv(&dir.join("noisy.csv"))?;
    subsample(&m.noisy, acq.input_stride)?.write_csv(&dir.join("subsampled.csv"))?;
    println!("wrote {} samples to {}", m.clean.len(), dir.display());
    if cfg.bool("write_dataset")? {
        let n = cfg.usize("dataset_size")?;
        let data = generate_dataset(n, &cfg.ranges()?, &acq, &emi, cfg.u64("seed")?, cfg.usize("jobs")?)?;
        save_dataset(&dir.join("dataset"), &data)?;
        println!("wrote {n} dataset waveforms to {}", dir.join("dataset").display());
    }
    Ok(())
}

fn estimator_kind(cfg: &Config) -> Result<EstimatorKind, CliError> {
    match cfg.str("mode") {
        "snn" => Ok(EstimatorKind::Snn),
        "ff" => Ok(EstimatorKind::Ff),
        other => Err(CliError::Config(format!("`mode` must be snn or ff, got `{other}`"))),
    }
}

fn check_snn_config(model: &Model, cfg: &Config) -> Result<(), CliError> {
    if let Model::Snn(s) = model {
        let want = cfg.snn()?;
        if s.config != want {
            return Err(CliError::Config(format!(
                "checkpoint SNN configuration {:?} does not match the run configuration {:?}",
                s.config, want
            )));
        }
    }
    Ok(())
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    Checkpoint::load(path).map_err(|e| CliError::Config(format!("cannot load checkpoint {}: {e}", path.display())))
}

fn cmd_train(cfg: &Config, dir: &Path) -> Result<(), CliError> {
    let kind = estimator_kind(cfg)?;
    let is_snn = kind == EstimatorKind::Snn;
    let mut tcfg = cfg.train(is_snn)?;
    let seed = tcfg.seed;
    let mut model = match cfg.path("resume") {
        Some(path) => {
            let ck = load_checkpoint(&path)?;
            if ck.model.kind() != kind {
                return Err(CliError::Config(format!(
                    "checkpoint holds a {} model but mode is {}",
                    ck.model.kind().as_str(),
                    kind.as_str()
                )));
            }
            check_snn_config(&ck.model, cfg)?;
            tcfg.start_epoch = ck.epoch;
            tcfg.validate()?;
            ck.model
        }
        None if is_snn => Model::Snn(SnnEstimator::init(cfg.snn()?, seed)?),
        None => Model::Ff(FfEstimator::init(seed)),
    };
    let acq = cfg.acquisition()?;
    let every = cfg.usize("log_every")?;
    let progress = |r: &HistoryRow| {
        if every > 0 && (r.epoch % every == 0 || r.epoch + 1 == tcfg.epochs) {
            let p = r.estimate;
            eprintln!(
                "epoch {:>5}  loss {:.6e}  L {:.4e}  C {:.4e}  Rs {:.4e}  lr {:.3e}",
                r.epoch, r.loss, p.inductance, p.capacitance, p.series_resistance, r.lr
            );
        }
    };
    let (outcome, truth): (TrainOutcome, Passives) = if cfg.is_multi()? {
        let path = cfg.path("dataset").ok_or_else(|| {
            CliError::Config(
                "multi-condition training needs `dataset`; create one with `spikeid simulate --write-dataset true`".into(),
            )
        })?;
        let data = load_dataset(&path).map_err(|e| CliError::Config(format!("missing or invalid dataset: {e}")))?;
        let truth = data[0].params.passives();
        (train_multi(&mut model, &data, &acq, &tcfg, progress)?, truth)
    } else {
        let (p, noisy) = measurement(cfg)?;
        (train_single(&mut model, &noisy, &p, &acq, &tcfg, progress)?, p.passives())
    };

    outcome.history.write_csv(&dir.join("history.csv"))?;
    outcome.best.save(&dir.join("checkpoint.json"))?;
    let mut skipped = String::from("epoch,item,reason\n");
    for s in &outcome.history.skipped {
        writeln!(skipped, "{},{},\"{}\"", s.epoch, s.item, s.reason.replace('"', "'")).unwrap();
    }
    write(dir, "skipped.csv", &skipped)?;

    let mut summary = format!(
        "{} {} training: best epoch {} of {}, loss {:.6e}, {} skipped updates\n",
        kind.as_str(),
        cfg.str("protocol"),
        outcome.best.epoch,
        tcfg.epochs,
        outcome.best.loss,
        outcome.history.skipped.len()
    );
    summary.push_str(&param_table(truth, outcome.best.estimate));
    write(dir, "summary.txt", &summary)?;
    print!("{summary}");
    Ok(())
}

fn required_checkpoint(cfg: &Config, key: &str, advice: &str) -> Result<Checkpoint, CliError> {
    let path = cfg
        .path(key)
        .ok_or_else(|| CliError::Config(format!("`{key}` is not set; {advice}")))?;
    if !path.exists() {
        return Err(CliError::Config(format!("checkpoint {} does not exist; {advice}", path.display())));
    }
    load_checkpoint(&path)
}

fn cmd_eval(cfg: &Config, dir: &Path) -> Result<(), CliError> {
    let ck = required_checkpoint(cfg, "checkpoint", "train a model first")?;
    check_snn_config(&ck.model, cfg)?;
    let acq = cfg.acquisition()?;
    let (p, noisy) = measurement(cfg)?;
    let est = ck.model.estimate(&acq.input(&noisy)?)?;
    let truth = p.passives();

    let solver_dt = cfg.f64("solver_dt")?;
    let n = step_count(acq.span, solver_dt)?;
    let predicted = simulate(&p.with_passives(est), solver_dt, n, (0.0, 0.0))?;
    let loss = reconstruction_loss_value(&predicted, &noisy.aligned(solver_dt, solver_dt, n)?)?;
    predicted.write_csv(&dir.join("predicted.csv"))?;

    let mut csv = String::from("param,true,estimate,rel_error\n");
    for (name, (t, e)) in ["L", "C", "Rs"].iter().zip(truth.to_array().into_iter().zip(est.to_array())) {
        writeln!(csv, "{name},{t:e},{e:e},{:e}", (e - t).abs() / t).unwrap();
    }
    write(dir, "eval.csv", &csv)?;
    let summary = format!("{} checkpoint, reconstruction loss {loss:.6e}\n{}", ck.model.kind().as_str(), param_table(truth, est));
    write(dir, "summary.txt", &summary)?;
    print!("{summary}");
    Ok(())
}

fn metric_line(m: &Metric) -> String {
    format!("{:<22}{:>14.6}  {} ({})\n", m.name, m.value, m.unit, m.source)
}

fn cmd_efficiency(cfg: &Config, dir: &Path) -> Result<(), CliError> {
    let ck = required_checkpoint(cfg, "checkpoint", "train an SNN first")?;
    let snn = match &ck.model {
        Model::Snn(s) => s,
        other => {
            return Err(CliError::Config(format!(
                "efficiency needs an SNN checkpoint, got {}",
                other.kind().as_str()
            )))
        }
    };
    check_snn_config(&ck.model, cfg)?;
    let acq = cfg.acquisition()?;
    let (_, noisy) = measurement(cfg)?;
    let (_, rec, _) = snn.predict(&acq.input(&noisy)?, None)?;
    let rows = efficiency_metrics(
        &rec,
        &FfEstimator::LAYER_DIMS,
        3,
        2,
        &cfg.catalog()?,
        cfg.f64("snapshot_rate")?,
    )?;
    write(dir, "efficiency.csv", &metrics_csv(&rows))?;
    write(dir, "raster.csv", &raster_csv(&rec))?;
    write(dir, "rates.csv", &rate_profiles(&rec).to_csv())?;
    let summary: String = rows.iter().map(metric_line).collect();
    write(dir, "summary.txt", &summary)?;
    print!("{summary}");
    Ok(())
}

fn trained_pair(cfg: &Config) -> Result<(SnnEstimator, FfEstimator), CliError> {
    let advice = "train with `spikeid train --protocol multi` first";
    let snn = match required_checkpoint(cfg, "snn_checkpoint", advice)?.model {
        Model::Snn(s) => s,
        _ => return Err(CliError::Config(format!("`snn_checkpoint` does not hold an SNN; {advice}"))),
    };
    check_snn_config(&Model::Snn(snn.clone()), cfg)?;
    let ff = match required_checkpoint(cfg, "ff_checkpoint", advice)?.model {
        Model::Ff(f) => f,
        _ => return Err(CliError::Config(format!("`ff_checkpoint` does not hold a feedforward model; {advice}"))),
    };
    Ok((snn, ff))
}

fn degradation_summary(log: &MonitorLog) -> Result<String, CliError> {
    let snn = log.mean_relative_errors(Which::Snn)?;
    let ff = log.mean_relative_errors(Which::Ff)?;
    let mut out = format!("{:<10}{:>10}{:>10}\n", "", "FF", "SNN");
    for (i, name) in ["L", "C", "Rs"].iter().enumerate() {
        writeln!(out, "{name:<10}{:>9.1}%{:>9.1}%", ff[i] * 100.0, snn[i] * 100.0).unwrap();
    }
    let truth: Vec<f64> = log.rows.iter().map(|r| r.truth.series_resistance).collect();
    let est: Vec<f64> = log.rows.iter().map(|r| r.snn.series_resistance).collect();
    match spearman(&truth, &est) {
        Ok(rho) => writeln!(out, "SNN Rs rank correlation with truth: {rho:.3}").unwrap(),
        Err(_) => writeln!(out, "SNN Rs rank correlation with truth: undefined").unwrap(),
    }
    Ok(out)
}

fn cmd_degrade(cfg: &Config, dir: &Path) -> Result<(), CliError> {
    let (snn, ff) = trained_pair(cfg)?;
    let log = run_degradation(&snn, &ff, &cfg.schedule()?, &cfg.acquisition()?, &cfg.emi()?, cfg.u64("seed")?)?;
    log.write_csv(&dir.join("degradation.csv"))?;
    let summary = format!("mean relative error over {} snapshots\n{}", log.rows.len(), degradation_summary(&log)?);
    write(dir, "summary.txt", &summary)?;
    print!("{summary}");
    Ok(())
}

fn monitor_summary(log: &MonitorLog, sc: &Scenario, threshold_pp: f64) -> Result<String, CliError> {
    let s = EventSummary::from_log(log, sc, threshold_pp)?;
    let mut out = format!("{:<22}{:>10}{:>10}\n", "", "FF", "SNN");
    writeln!(out, "{:<22}{:>10.3}{:>10.3}", "Rs MAE pre (ohm)", s.pre_mae[1], s.pre_mae[0]).unwrap();
    writeln!(out, "{:<22}{:>10.3}{:>10.3}", "Rs MAE post (ohm)", s.post_mae[1], s.post_mae[0]).unwrap();
    writeln!(out, "{:<22}{:>10}{:>9.1}%", "spike rate early", "-", s.early_rate * 100.0).unwrap();
    writeln!(out, "{:<22}{:>10}{:>9.1}%", "spike rate late", "-", s.late_rate * 100.0).unwrap();
    match s.detected {
        Some(c) => {
            let rates = log.spike_rates();
            let jump = (rates[c - 1] - rates[c - 2]) * 100.0;
            writeln!(out, "fault detected at cycle {c} (rate rise {jump:+.2} pp)").unwrap();
        }
        None => writeln!(out, "no fault detected at {threshold_pp} pp").unwrap(),
    }
    Ok(out)
}

fn cmd_monitor(cfg: &Config, dir: &Path) -> Result<(), CliError> {
    let (snn, ff) = trained_pair(cfg)?;
    let sc = cfg.scenario()?;
    let persistent = cfg.bool("persistent")?;
    let log = run_event_driven(&snn, &ff, &sc, &cfg.acquisition()?, &cfg.emi()?, cfg.u64("seed")?, persistent)?;
    log.write_csv(&dir.join("monitor.csv"))?;
    let summary = format!(
        "{} scenario, {} cycles, persistence {}\n{}",
        sc.kind.as_str(),
        sc.cycles,
        if persistent { "on" } else { "off" },
        monitor_summary(&log, &sc, cfg.f64("threshold_pp")?)?
    );
    write(dir, "summary.txt", &summary)?;
    print!("{summary}");
    Ok(())
}

fn cmd_report(cfg: &Config, dir: &Path) -> Result<(), CliError> {
    let root = cfg.path("runs").unwrap_or_else(|| cfg.output_root());
    let mut out = format!("runs under {}\n", root.display());
    let mut found = 0;

    let history = root.join("train").join("history.csv");
    if let Ok(text) = std::fs::read_to_string(&history) {
        let h = History::from_csv(&text)?;
        if let Some(best) = h.rows.iter().filter(|r| r.loss.is_finite()).min_by(|a, b| a.loss.total_cmp(&b.loss)) {
            found += 1;
            writeln!(out, "\n[train] best epoch {} of {}, loss {:.6e}", best.epoch, h.rows.len(), best.loss).unwrap();
            out.push_str(&param_table(cfg.converter()?.passives(), best.estimate));
        }
    }
    let eff = root.join("efficiency").join("efficiency.csv");
    if let Ok(text) = std::fs::read_to_string(&eff) {
        found += 1;
        out.push_str("\n[efficiency]\n");
        for line in text.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() == 4 {
                let v: f64 = f[1].parse().unwrap_or(f64::NAN);
                writeln!(out, "{:<22}{:>14.6}  {} ({})", f[0], v, f[2], f[3]).unwrap();
            }
        }
    }
    let deg = root.join("degrade").join("degradation.csv");
    if let Ok(text) = std::fs::read_to_string(&deg) {
        found += 1;
        let log = MonitorLog::from_csv(&text)?;
        writeln!(out, "\n[degrade] {} snapshots", log.rows.len()).unwrap();
        out.push_str(&degradation_summary(&log)?);
    }
    let mon = root.join("monitor").join("monitor.csv");
    if let Ok(text) = std::fs::read_to_string(&mon) {
        found += 1;
        let log = MonitorLog::from_csv(&text)?;
        let sc = Scenario { cycles: log.rows.len(), ..cfg.scenario()? };
        sc.validate()?;
        writeln!(out, "\n[monitor] {} cycles", log.rows.len()).unwrap();
        out.push_str(&monitor_summary(&log, &sc, cfg.f64("threshold_pp")?)?);
    }
    if found == 0 {
        return Err(CliError::Config(format!("no subcommand outputs found under {}", root.display())));
    }
    write(dir, "report.txt", &out)?;
    print!("{out}");
    Ok(())
}
