use spikeid::autodiff::*;
use spikeid::estimators::*;
fn scalar_layer_step(u_prev: f64, s_prev: f64, drive: f64) -> (f64, f64) {
    let tape = Tape::new();
    let w = tape.constant(Tensor::matrix(1, 1, vec![drive]).unwrap());
    let u = tape.constant(Tensor::vector(vec![u_prev]).unwrap());
    let s = tape.constant(Tensor::vector(vec![s_prev]).unwrap());
    let x = tape.constant(Tensor::vector(vec![1.0]).unwrap());
    let (u, s) = lif_step(w, 0.9, 1.0, SurrogateConfig::default(), u, s, x).unwrap();
    (u.item(), s.item())
}

#[test]
fn lif_fires_then_subtracts_threshold() {
    let (u1, s1) = scalar_layer_step(0.0, 0.0, 1.5);
    assert_eq!((u1, s1), (1.5, 1.0));
    let (u2, s2) = scalar_layer_step(u1, s1, 0.0);
    assert!((u2 - 0.35).abs() < 1e-15);
    assert_eq!(s2, 0.0);
}

#[test]
fn lif_rest_and_boundary() {
    assert_eq!(scalar_layer_step(0.0, 0.0, 0.0), (0.0, 0.0));
    assert_eq!(scalar_layer_step(0.0, 0.0, 1.0), (1.0, 1.0));
}

fn zeroed(cfg: SnnConfig) -> SnnEstimator {
    let mut snn = SnnEstimator::init(cfg, 0).unwrap();
    for l in &mut snn.layers {
        l.weight.data_mut().fill(0.0);
    }
    snn.readout.weight.data_mut().fill(0.0);
    snn
}

#[test]
fn zero_network_returns_initial_guess() {
    let snn = zeroed(SnnConfig::default());
    let (p, rec, state) = snn.predict(&vec![[0.0, 0.0]; 100], None).unwrap();
    assert!((p.inductance - 100e-6).abs() < 1e-18);
    assert!((p.capacitance - 10e-6).abs() < 1e-19);
    assert!((p.series_resistance - 0.1).abs() < 1e-16);
    assert_eq!(rec.total_spikes(), 0);
    assert_eq!(rec.steps(), 100);
    assert!(state.is_zero());
}

#[test]
fn same_seed_gives_identical_weights() {
    let a = SnnEstimator::init(SnnConfig::default(), 42).unwrap();
    let b = SnnEstimator::init(SnnConfig::default(), 42).unwrap();
    let c = SnnEstimator::init(SnnConfig::default(), 43).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn weight_spread_matches_uniform_fan_in() {
    let snn = SnnEstimator::init(SnnConfig::default(), 5).unwrap();
    let w = snn.layers[1].weight.data();
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let std = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let expected = (1.0 / 128f64.sqrt()) / 3f64.sqrt();
    assert!((std / expected - 1.0).abs() < 0.1);
}

#[test]
fn membrane_decays_geometrically_without_spikes() {
    // one neuron, no input drive, starting below threshold
    let cfg = SnnConfig { hidden: 1, ..SnnConfig::default() };
    let snn = zeroed(cfg);
    let mut state = snn.fresh_state();
    state.membranes[0][0] = 0.8;
    let tape = Tape::new();
    let bound = bind(&snn, &tape, false);
    let out = snn.forward(&tape, &bound, &vec![[0.0, 0.0]; 10], Some(&state)).unwrap();
    let u = out.final_state.membranes[0][0];
    assert!((u - 0.9f64.powi(10) * 0.8).abs() < 1e-15);
    assert_eq!(out.record.total_spikes(), 0);
}

#[test]
fn carried_membrane_changes_the_second_pass() {
    // Two neurons fed by the first input channel: neuron 0 with weight 0.6
    // needs two steps from rest to cross threshold, so a carried membrane
    // makes it fire one step earlier.
    let cfg = SnnConfig { hidden: 2, ..SnnConfig::default() };
    let mut snn = zeroed(cfg);
    snn.layers[0].weight.data_mut().copy_from_slice(&[0.6, 0.0, 0.2, 0.0]);
    let inputs = vec![[1.0, 0.0]; 3];
    let (_, rec1, state) = snn.predict(&inputs, None).unwrap();
    assert!(!state.is_zero());
    let (_, rec2, _) = snn.predict(&inputs, Some(&state)).unwrap();
    assert_eq!(rec1.fired(0, 0), &[] as &[u32]);
    assert_eq!(rec1.fired(0, 1), &[0]);
    assert_eq!(rec2.fired(0, 0), &[0]);
    assert_ne!(rec1, rec2);
}

#[test]
fn outputs_positive_and_spikes_bounded() {
    let snn = SnnEstimator::init(SnnConfig::default(), 9).unwrap();
    let inputs: Vec<[f64; 2]> = (0..100).map(|k| [(k as f64 * 0.1).sin() * 2.0, (k as f64 * 0.05).cos()]).collect();
    let (p, rec, _) = snn.predict(&inputs, None).unwrap();
    assert!(p.all_positive_finite());
    for l in 0..3 {
        for k in 0..100 {
            assert!(rec.count(l, k) <= 128);
        }
    }
}

#[test]
fn every_weight_receives_a_finite_gradient() {
    let snn = SnnEstimator::init(SnnConfig { hidden: 16, ..SnnConfig::default() }, 3).unwrap();
    let inputs: Vec<[f64; 2]> = (0..50).map(|k| [(k as f64 * 0.2).sin() * 2.0, (k as f64 * 0.3).cos() * 1.5]).collect();
    let tape = Tape::new();
    let bound = bind(&snn, &tape, true);
    let lp = snn.log_params(&tape, &bound, &inputs).unwrap();
    let loss = lp.exp().unwrap().sum().unwrap();
    let grads = tape.backward(loss).unwrap();
    for (v, (name, t)) in bound.iter().zip(snn.parameters()) {
        let g = grads.wrt(*v);
        assert_eq!(g.len(), t.len(), "{name}");
        assert!(g.iter().all(|x| x.is_finite()), "{name}");
    }
    // b_param gradient of sum(exp(.)) is exp(log params)
    let gb = grads.wrt(bound[4]);
    let vals = lp.exp().unwrap().to_vec();
    for i in 0..3 {
        assert!((gb[i] - vals[i]).abs() <= 1e-12 * vals[i].abs());
    }
}
