use spikeid::autodiff::*;
use spikeid::converter::*;
use spikeid::Error;
const BENCH: ConverterParams = ConverterParams::BENCHMARK;

#[test]
fn rhs_at_rest_is_drive_over_inductance() {
    let (di, dv) = buck_rhs((0.0, 0.0), &BENCH);
    assert!((di - 10.0 / 138e-6).abs() < 1e-6);
    assert!((di - 72_463.768_115_942).abs() < 1e-6);
    assert_eq!(dv, 0.0);
}

#[test]
fn rhs_vanishes_at_steady_state() {
    let (il, vo) = BENCH.steady_state();
    assert!((vo - 9.900_990_099).abs() < 1e-8);
    assert!((il - 0.990_099_0099).abs() < 1e-9);
    let (di, dv) = buck_rhs((il, vo), &BENCH);
    assert!(di.abs() < 1e-9 * 72_463.77);
    assert!(dv.abs() < 1e-9 * 1e5);
    // input power balances conduction and load losses
    let pin = BENCH.duty * BENCH.input_voltage * il;
    let pout = BENCH.series_resistance * il * il + vo * vo / BENCH.load_resistance;
    assert!((pin - pout).abs() / pin < 1e-3);
}

#[test]
fn zero_input_gives_zero_trajectory() {
    let p = ConverterParams { input_voltage: 0.0, ..BENCH };
    assert_eq!(buck_rhs((0.0, 0.0), &p), (0.0, 0.0));
    // validation rejects Vg = 0, so integrate the tape path directly
    let tape = Tape::new();
    let tp = TapePassives {
        inductance: tape.constant(Tensor::scalar(BENCH.inductance).unwrap()),
        capacitance: tape.constant(Tensor::scalar(BENCH.capacitance).unwrap()),
        series_resistance: tape.constant(Tensor::scalar(BENCH.series_resistance).unwrap()),
    };
    let w = rk4_integrate(&tape, tp, &p, (0.0, 1.5e-3), 5e-6, (0.0, 0.0)).unwrap();
    assert!(w.il.to_vec().iter().chain(&w.vo.to_vec()).all(|v| *v == 0.0));
}

#[test]
fn ground_truth_has_three_thousand_points() {
    let n = step_count(1.5e-3, 0.5e-6).unwrap();
    assert_eq!(n, 3000);
    let w = simulate(&BENCH, 0.5e-6, n, (0.0, 0.0)).unwrap();
    assert_eq!(w.len(), 3000);
    assert!((w.end_time() - 1.5e-3).abs() < 1e-15);
}

#[test]
fn step_count_rejects_fractional_spans() {
    assert_eq!(step_count(1.5e-3, 5e-6).unwrap(), 300);
    assert_eq!(step_count(1.5e-3, 50e-6).unwrap(), 30);
    assert!(step_count(1.5e-3, 0.7e-6).is_err());
}

#[test]
fn tape_and_plain_integrators_agree() {
    let tape = Tape::new();
    let tp = TapePassives {
        inductance: tape.leaf(Tensor::scalar(BENCH.inductance).unwrap()),
        capacitance: tape.leaf(Tensor::scalar(BENCH.capacitance).unwrap()),
        series_resistance: tape.leaf(Tensor::scalar(BENCH.series_resistance).unwrap()),
    };
    let a = rk4_integrate(&tape, tp, &BENCH, (0.0, 1.5e-3), 5e-6, (0.0, 0.0)).unwrap().to_waveform().unwrap();
    let b = simulate(&BENCH, 5e-6, 300, (0.0, 0.0)).unwrap();
    assert_eq!(a.len(), 300);
    for k in 0..300 {
        assert!((a.il[k] - b.il[k]).abs() <= 1e-12 * b.il[k].abs().max(1.0));
        assert!((a.vo[k] - b.vo[k]).abs() <= 1e-12 * b.vo[k].abs().max(1.0));
    }
    assert!((a.t0 - 5e-6).abs() < 1e-18);
}

#[test]
fn absurd_parameters_report_the_step() {
    let p = ConverterParams { inductance: 1e-12, ..BENCH };
    match simulate(&p, 5e-6, 300, (0.0, 0.0)) {
        Err(Error::Diverged { step }) => assert!(step < 300),
        other => panic!("expected divergence, got {other:?}"),
    }
}

fn bench_clean() -> Waveform {
    simulate(&BENCH, 0.5e-6, 3000, (0.0, 0.0)).unwrap()
}

#[test]
fn silent_emi_is_identity() {
    let w = bench_clean();
    let out = add_emi(&w, &EmiConfig::silent(9), &BENCH);
    assert_eq!(out, w);
}

#[test]
fn thirty_edges_over_fifteen_cycles() {
    let w = bench_clean();
    let edges = switching_edges(&BENCH, w.t0 - w.dt, w.end_time());
    assert_eq!(edges.len(), 30);
    assert_eq!(edges[0], 0.0);
    assert!((edges[1] - 50e-6).abs() < 1e-15);
    assert!((edges[29] - 1.45e-3).abs() < 1e-15);
}

#[test]
fn background_noise_matches_configured_sigma() {
    let w = bench_clean();
    let cfg = EmiConfig { seed: 3, ..EmiConfig::default() };
    let noisy = add_emi(&w, &cfg, &BENCH);
    let edges = switching_edges(&BENCH, 0.0, w.end_time());
    let far = |k: usize| edges.iter().all(|e| (w.time(k) - e).abs() > 3.0 * cfg.pulse_width);
    for (clean, dirty) in [(&w.il, &noisy.il), (&w.vo, &noisy.vo)] {
        let resid: Vec<f64> = (0..w.len()).filter(|&k| far(k)).map(|k| dirty[k] - clean[k]).collect();
        assert!(resid.len() > 500);
        let ratio = std_dev(&resid) / (0.02 * std_dev(clean));
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    }
}

#[test]
fn pulses_reach_configured_peak() {
    let w = bench_clean();
    let cfg = EmiConfig { background_sigma_frac: 0.0, ..EmiConfig::default() };
    let noisy = add_emi(&w, &cfg, &BENCH);
    // edge at 50 µs falls exactly on sample k = 99
    let k = 99;
    assert!((w.time(k) - 50e-6).abs() < 1e-15);
    let peak = 0.25 * std_dev(&w.vo);
    assert!(((noisy.vo[k] - w.vo[k]).abs() - peak).abs() < 1e-9 * peak);
}

#[test]
fn emi_is_seed_deterministic() {
    let w = bench_clean();
    let cfg = EmiConfig { seed: 11, ..EmiConfig::default() };
    assert_eq!(add_emi(&w, &cfg, &BENCH), add_emi(&w, &cfg, &BENCH));
    let other = EmiConfig { seed: 12, ..cfg };
    assert_ne!(add_emi(&w, &cfg, &BENCH), add_emi(&w, &other, &BENCH));
}

#[test]
fn subsample_examples() {
    let w = bench_clean();
    let s = subsample(&w, 30).unwrap();
    assert_eq!(s.len(), 100);
    assert!((s.dt - 15e-6).abs() < 1e-18);
    assert_eq!(subsample(&w, 1).unwrap(), w);
    let small = Waveform::new(1.0, 0.0, (0..10).map(f64::from).collect(), vec![0.0; 10]).unwrap();
    assert_eq!(subsample(&small, 4).unwrap().il, vec![0.0, 4.0, 8.0]);
    assert!(subsample(&small, 0).is_err());
}

#[test]
fn aligned_picks_every_tenth_sample() {
    let w = bench_clean();
    let a = w.aligned(5e-6, 5e-6, 300).unwrap();
    assert_eq!(a.len(), 300);
    assert_eq!(a.il[0], w.il[9]);
    assert_eq!(a.vo[299], w.vo[2999]);
    assert!(w.aligned(5.2e-6, 5e-6, 3).is_err());
}

#[test]
fn csv_round_trip_preserves_values() {
    let w = add_emi(&bench_clean(), &EmiConfig::default(), &BENCH);
    let text = w.to_csv();
    assert!(text.starts_with("t,iL,Vo\n"));
    let back = Waveform::from_csv(&text).unwrap();
    assert_eq!(back.il, w.il);
    assert_eq!(back.vo, w.vo);
    assert!((back.dt - w.dt).abs() < 1e-15 * w.dt.max(1.0));
    assert!(Waveform::from_csv("a,b\n1,2\n").is_err());
}

#[test]
fn invalid_waveforms_are_rejected() {
    assert!(Waveform::new(1.0, 0.0, vec![], vec![]).is_err());
    assert!(Waveform::new(1.0, 0.0, vec![1.0], vec![1.0, 2.0]).is_err());
    assert!(Waveform::new(0.0, 0.0, vec![1.0], vec![1.0]).is_err());
    assert!(Waveform::new(1.0, 0.0, vec![f64::INFINITY], vec![1.0]).is_err());
}
