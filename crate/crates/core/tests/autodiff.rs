use spikeid::autodiff::*;
use spikeid::Error;
fn fd_check(f: impl Fn(&[f64]) -> f64, x: &[f64], grad: &[f64], tol: f64) {
    for i in 0..x.len() {
        let h = 1e-5 * x[i].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let fd = (f(&xp) - f(&xm)) / (2.0 * h);
        let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-8);
        assert!(rel < tol, "component {i}: fd {fd} vs ad {}", grad[i]);
    }
}

#[test]
fn mean_square_of_identical_vectors_is_zero() {
    let tape = Tape::new();
    let a = tape.constant(Tensor::vector(vec![1.0, 2.0, 3.0]).unwrap());
    let b = tape.constant(Tensor::vector(vec![1.0, 2.0, 3.0]).unwrap());
    let l = a.sub(b).unwrap().square().unwrap().mean().unwrap();
    assert_eq!(l.item(), 0.0);
}

#[test]
fn derivative_of_square_product() {
    let tape = Tape::new();
    let x = tape.leaf(Tensor::scalar(3.0).unwrap());
    let y = x.mul(x).unwrap();
    let g = tape.backward(y).unwrap();
    assert_eq!(g.wrt(x), vec![6.0]);
}

#[test]
fn sum_of_matvec_broadcasts_input_into_weight_gradient() {
    let tape = Tape::new();
    let w = tape.leaf(Tensor::matrix(2, 2, vec![0.3, -1.0, 2.0, 0.5]).unwrap());
    let x = tape.constant(Tensor::vector(vec![1.0, 1.0]).unwrap());
    let l = w.matvec(x).unwrap().sum().unwrap();
    let g = tape.backward(l).unwrap();
    assert_eq!(g.wrt(w), vec![1.0, 1.0, 1.0, 1.0]);
}

#[test]
fn unused_leaf_gets_zero_gradient() {
    let tape = Tape::new();
    let x = tape.leaf(Tensor::vector(vec![1.0, 2.0]).unwrap());
    let unused = tape.leaf(Tensor::vector(vec![5.0, 6.0, 7.0]).unwrap());
    let l = x.square().unwrap().sum().unwrap();
    let g = tape.backward(l).unwrap();
    assert_eq!(g.wrt(unused), vec![0.0; 3]);
    assert_eq!(g.wrt(x), vec![2.0, 4.0]);
}

#[test]
fn backward_rejects_non_scalar_and_second_pass() {
    let tape = Tape::new();
    let x = tape.leaf(Tensor::vector(vec![1.0, 2.0]).unwrap());
    assert!(matches!(tape.backward(x), Err(Error::NonScalarLoss(_))));

    let tape = Tape::new();
    let x = tape.leaf(Tensor::scalar(2.0).unwrap());
    let y = x.exp().unwrap();
    tape.backward(y).unwrap();
    assert!(matches!(tape.backward(y), Err(Error::TapeConsumed)));
}

#[test]
fn shape_mismatch_and_non_finite_are_errors() {
    let tape = Tape::new();
    let a = tape.constant(Tensor::vector(vec![1.0, 2.0]).unwrap());
    let b = tape.constant(Tensor::vector(vec![1.0]).unwrap());
    assert!(matches!(a.add(b), Err(Error::Shape { op: "add", .. })));
    let big = tape.constant(Tensor::scalar(1e3).unwrap());
    assert!(matches!(big.exp(), Err(Error::NonFinite { op: "exp" })));
    let neg = tape.constant(Tensor::scalar(-1.0).unwrap());
    assert!(matches!(neg.log(), Err(Error::NonFinite { op: "log" })));
    assert!(Tensor::vector(vec![f64::NAN]).is_err());
    assert!(Tensor::new(vec![2, 2], vec![1.0; 3]).is_err());
}

#[test]
fn spike_forward_uses_closed_threshold() {
    let tape = Tape::new();
    let x = tape.constant(Tensor::vector(vec![-0.2, 0.0, 0.3]).unwrap());
    let s = x.spike(SurrogateConfig::default()).unwrap();
    assert_eq!(s.to_vec(), vec![0.0, 1.0, 1.0]);
}

#[test]
fn spike_backward_is_fast_sigmoid() {
    assert_eq!(surrogate_factor(0.0, 25.0), 1.0);
    assert!((surrogate_factor(1.0, 25.0) - 1.0 / 676.0).abs() < 1e-18);
    let tape = Tape::new();
    let x = tape.leaf(Tensor::vector(vec![0.0, 1.0, -0.04]).unwrap());
    let l = x.spike(SurrogateConfig::default()).unwrap().sum().unwrap();
    let g = tape.backward(l).unwrap().wrt(x);
    assert_eq!(g[0], 1.0);
    assert!((g[1] - 1.479_289_940_828_402e-3).abs() < 1e-15);
    assert!((g[2] - 0.25).abs() < 1e-15);
}

#[test]
fn detach_blocks_gradient() {
    let tape = Tape::new();
    let x = tape.leaf(Tensor::scalar(2.0).unwrap());
    let y = x.mul(x.detach()).unwrap();
    let g = tape.backward(y).unwrap();
    assert_eq!(g.wrt(x), vec![2.0]);
}

#[test]
fn clamp_norm_forward_and_gradient() {
    let f = |v: &[f64]| {
        let tape = Tape::new();
        let x = tape.constant(Tensor::vector(v.to_vec()).unwrap());
        let w = tape.constant(Tensor::vector(vec![0.7, -1.3, 0.4]).unwrap());
        x.clamp_norm(1.0).unwrap().mul(w).unwrap().sum().unwrap().item()
    };
    let x0 = vec![2.0, 1.0, -0.5];
    let tape = Tape::new();
    let x = tape.leaf(Tensor::vector(x0.clone()).unwrap());
    let w = tape.constant(Tensor::vector(vec![0.7, -1.3, 0.4]).unwrap());
    let c = x.clamp_norm(1.0).unwrap();
    let norm: f64 = c.to_vec().iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((norm - 1.0).abs() < 1e-12);
    let l = c.mul(w).unwrap().sum().unwrap();
    let g = tape.backward(l).unwrap().wrt(x);
    fd_check(f, &x0, &g, 1e-7);
}

#[test]
fn composite_exp_chain_matches_finite_differences() {
    let b = [0.5, -1.0, 2.0, 0.1];
    let f = |a: &[f64]| a.iter().zip(&b).map(|(x, y)| (x.exp() - y).powi(2)).sum::<f64>() / a.len() as f64;
    let a0 = vec![0.3, -0.2, 0.8, 1.1];
    let tape = Tape::new();
    let a = tape.leaf(Tensor::vector(a0.clone()).unwrap());
    let bv = tape.constant(Tensor::vector(b.to_vec()).unwrap());
    let l = a.exp().unwrap().sub(bv).unwrap().square().unwrap().mean().unwrap();
    assert!((l.item() - f(&a0)).abs() < 1e-14);
    let g = tape.backward(l).unwrap().wrt(a);
    fd_check(f, &a0, &g, 1e-6);
}

#[test]
fn tanh_of_matvec_weight_gradient_matches_finite_differences() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let w0: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x0: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let f = |w: &[f64]| {
        (0..4)
            .map(|i| {
                let z: f64 = (0..4).map(|j| w[i * 4 + j] * x0[j]).sum();
                c[i] * z.tanh()
            })
            .sum::<f64>()
    };
    let tape = Tape::new();
    let w = tape.leaf(Tensor::matrix(4, 4, w0.clone()).unwrap());
    let x = tape.constant(Tensor::vector(x0.clone()).unwrap());
    let cv = tape.constant(Tensor::vector(c.clone()).unwrap());
    let l = w.matvec(x).unwrap().tanh().unwrap().mul(cv).unwrap().sum().unwrap();
    let g = tape.backward(l).unwrap().wrt(w);
    fd_check(f, &w0, &g, 1e-6);
}

#[test]
fn matvec_input_gradient_and_stack_index_roundtrip() {
    let tape = Tape::new();
    let w = tape.constant(Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap());
    let x = tape.leaf(Tensor::vector(vec![1.0, 0.0, -1.0]).unwrap());
    let y = w.matvec(x).unwrap();
    assert_eq!(y.to_vec(), vec![-2.0, -2.0]);
    let parts = [y.index(1).unwrap(), y.index(0).unwrap()];
    let s = tape.stack(&parts).unwrap();
    let weights = tape.constant(Tensor::vector(vec![10.0, 1.0]).unwrap());
    let l = s.mul(weights).unwrap().sum().unwrap();
    let g = tape.backward(l).unwrap().wrt(x);
    // d/dx of 10·row1·x + row0·x
    assert_eq!(g, vec![41.0, 52.0, 63.0]);
}

#[test]
fn foreign_variables_are_rejected() {
    let t1 = Tape::new();
    let t2 = Tape::new();
    let a = t1.leaf(Tensor::scalar(1.0).unwrap());
    let b = t2.leaf(Tensor::scalar(1.0).unwrap());
    assert!(matches!(a.add(b), Err(Error::ForeignVar)));
    assert!(matches!(t2.backward(a), Err(Error::ForeignVar)));
}
