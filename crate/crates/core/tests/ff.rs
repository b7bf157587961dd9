use spikeid::estimators::*;
#[test]
fn zero_weights_give_initial_guess() {
    let mut ff = FfEstimator::init(1);
    for t in ff.parameters_mut() {
        if t.len() != 3 {
            t.data_mut().fill(0.0);
        }
    }
    let p = ff.estimate(&vec![[0.3, -1.0]; 100]).unwrap();
    assert!((p.inductance - 100e-6).abs() < 1e-18);
    assert!((p.capacitance - 10e-6).abs() < 1e-19);
    assert!((p.series_resistance - 0.1).abs() < 1e-16);
}

#[test]
fn wrong_length_is_rejected() {
    let ff = FfEstimator::init(1);
    assert!(ff.estimate(&vec![[0.0, 0.0]; 99]).is_err());
}

#[test]
fn outputs_are_positive() {
    let ff = FfEstimator::init(2);
    let input: Vec<[f64; 2]> = (0..100).map(|k| [k as f64 / 50.0 - 1.0, (k as f64).sin()]).collect();
    assert!(ff.estimate(&input).unwrap().all_positive_finite());
}

#[test]
fn parameter_shapes() {
    let ff = FfEstimator::init(3);
    let shapes: Vec<Vec<usize>> = ff.parameters().iter().map(|(_, t)| t.shape().to_vec()).collect();
    assert_eq!(
        shapes,
        vec![vec![128, 200], vec![128], vec![128, 128], vec![128], vec![128, 128], vec![128], vec![3, 128], vec![3]]
    );
    assert_eq!(ff.parameters()[ff.bias_index()].0, "b_param");
}
