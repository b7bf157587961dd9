use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn spikeid(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spikeid"))
        .args(args)
        .env("SPIKEID_OUT", root)
        .current_dir(root)
        .output()
        .expect("binary runs")
}

fn ok(root: &Path, args: &[&str]) -> String {
    let out = spikeid(root, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

#[test]
fn help_lists_every_key_with_its_default() {
    let dir = TempDir::new().unwrap();
    let help = ok(dir.path(), &["train", "--help"]);
    for key in ["seed", "epochs", "lr", "clip_norm", "solver_dt", "hidden", "threshold_pp", "mac_energy"] {
        assert!(help.lines().any(|l| l.trim_start().starts_with(key)), "missing {key}");
    }
    assert!(help.contains("5e-5"));
    assert!(help.contains("9.9e-12"));
}

#[test]
fn unknown_flag_and_unknown_config_key_exit_with_config_code() {
    let dir = TempDir::new().unwrap();
    assert_eq!(spikeid(dir.path(), &["simulate", "--no-such-key", "1"]).status.code(), Some(2));

    std::fs::write(dir.path().join("bad.conf"), "seed = 2\nwarp_drive = on # nope\n").unwrap();
    let out = spikeid(dir.path(), &["simulate", "--config", "bad.conf"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warp_drive"));

    assert_eq!(spikeid(dir.path(), &["simulate", "--duty", "1.5"]).status.code(), Some(2));
    assert_eq!(spikeid(dir.path(), &["train", "--mode", "rnn"]).status.code(), Some(2));
}

#[test]
fn simulate_writes_waveforms_and_manifest() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["simulate"]);
    let sim = dir.path().join("simulate");
    let noisy = read(sim.join("noisy.csv"));
    assert_eq!(noisy.lines().next(), Some("t,iL,Vo"));
    assert_eq!(noisy.lines().count(), 3001);
    assert_eq!(read(sim.join("subsampled.csv")).lines().count(), 101);
    // 17 significant digits
    let first = noisy.lines().nth(1).unwrap();
    let mantissa = first.split(',').nth(1).unwrap().split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);

    let manifest = read(sim.join("manifest.txt"));
    assert!(manifest.starts_with("subcommand=simulate\n"));
    assert!(manifest.lines().any(|l| l == "seed=1"));
    assert!(manifest.lines().any(|l| l == "noise=true"));
}

#[test]
fn no_noise_gives_the_clean_waveform() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["simulate", "--no-noise"]);
    let sim = dir.path().join("simulate");
    assert_eq!(read(sim.join("clean.csv")), read(sim.join("noisy.csv")));
    assert!(read(sim.join("manifest.txt")).lines().any(|l| l == "noise=false"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("run.conf"), "# benchmark variant\nseed = 9\nvg = 24  # volts\n").unwrap();
    ok(dir.path(), &["simulate", "-c", "run.conf", "--seed", "4"]);
    let manifest = read(dir.path().join("simulate").join("manifest.txt"));
    assert!(manifest.lines().any(|l| l == "seed=4"));
    assert!(manifest.lines().any(|l| l == "vg=24"));
}

#[test]
fn single_epoch_ff_run_writes_one_history_row() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["train", "--mode", "ff", "--epochs", "1"]);
    let train = dir.path().join("train");
    let history = read(train.join("history.csv"));
    assert_eq!(history.lines().next(), Some("epoch,loss,L,C,Rs,lr"));
    assert_eq!(history.lines().count(), 2);
    assert!(train.join("checkpoint.json").exists());
    assert!(read(train.join("summary.txt")).contains("Rs (ohm)"));
}

#[test]
fn training_is_deterministic_and_resume_continues_exactly() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["train", "--epochs", "4", "--out", "a"]);
    ok(dir.path(), &["train", "--epochs", "4", "--out", "b"]);
    let a = read(dir.path().join("a/history.csv"));
    assert_eq!(a, read(dir.path().join("b/history.csv")));
    assert_eq!(read(dir.path().join("a/checkpoint.json")), read(dir.path().join("b/checkpoint.json")));

    ok(dir.path(), &["train", "--epochs", "6", "--resume", "a/checkpoint.json", "--out", "r"]);
    let ck: serde_json::Value = serde_json::from_str(&read(dir.path().join("a/checkpoint.json"))).unwrap();
    let resumed = read(dir.path().join("r/history.csv"));
    let first: Vec<&str> = resumed.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first[0].parse::<u64>().unwrap(), ck["epoch"].as_u64().unwrap());
    assert_eq!(first[1].parse::<f64>().unwrap(), ck["loss"].as_f64().unwrap());
}

#[test]
fn eval_and_efficiency_read_a_checkpoint() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["train", "--epochs", "1"]);
    ok(dir.path(), &["eval", "--checkpoint", "train/checkpoint.json"]);
    let eval = read(dir.path().join("eval/eval.csv"));
    assert_eq!(eval.lines().next(), Some("param,true,estimate,rel_error"));
    assert_eq!(eval.lines().count(), 4);

    ok(dir.path(), &["efficiency", "--checkpoint", "train/checkpoint.json"]);
    let eff = read(dir.path().join("efficiency/efficiency.csv"));
    assert_eq!(eff.lines().next(), Some("metric,value,unit,source"));
    assert!(eff.lines().any(|l| l.starts_with("macs,5.8752e4,")));
    assert_eq!(read(dir.path().join("efficiency/raster.csv")).lines().next(), Some("layer,neuron,timestep"));

    let mismatch = spikeid(dir.path(), &["efficiency", "--checkpoint", "train/checkpoint.json", "--hidden", "64"]);
    assert_eq!(mismatch.status.code(), Some(2));
    assert_eq!(spikeid(dir.path(), &["eval"]).status.code(), Some(2));
}

#[test]
fn multi_condition_pipeline_runs_end_to_end() {
    let dir = TempDir::new().unwrap();
    let root = dir.path();
    assert_eq!(spikeid(root, &["train", "--protocol", "multi"]).status.code(), Some(2));

    ok(root, &["simulate", "--write-dataset", "true", "--dataset-size", "3", "--jobs", "2"]);
    assert_eq!(read(root.join("simulate/dataset/params.csv")).lines().count(), 4);
    for (mode, out) in [("snn", "snn"), ("ff", "ff")] {
        ok(root, &["train", "--protocol", "multi", "--mode", mode, "--dataset", "simulate/dataset", "--multi-epochs", "2", "--out", out]);
    }
    std::fs::write(
        root.join("pair.conf"),
        "snn_checkpoint = snn/checkpoint.json\nff_checkpoint = ff/checkpoint.json\n",
    )
    .unwrap();

    ok(root, &["degrade", "-c", "pair.conf", "--snapshots", "5"]);
    let deg = read(root.join("degrade/degradation.csv"));
    assert!(deg.starts_with("cycle,true_L,true_C,true_Rs,snn_L,snn_C,snn_Rs,ff_L,ff_C,ff_Rs,spike_rate,persistent\n"));
    assert_eq!(deg.lines().count(), 6);

    ok(root, &["monitor", "-c", "pair.conf", "--scenario", "healthy"]);
    let mon = read(root.join("monitor/monitor.csv"));
    assert_eq!(mon.lines().count(), 41);
    for line in mon.lines().skip(1) {
        assert_eq!(line.split(',').nth(3).unwrap().parse::<f64>().unwrap(), 0.1);
    }

    let report = ok(root, &["report"]);
    assert!(report.contains("[degrade]"));
    assert!(report.contains("[monitor]"));
    assert!(root.join("report/report.txt").exists());
}

#[test]
fn resume_with_the_wrong_mode_is_rejected() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["train", "--mode", "ff", "--epochs", "1"]);
    let out = spikeid(dir.path(), &["train", "--resume", "train/checkpoint.json", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
}
