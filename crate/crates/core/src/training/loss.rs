use crate::autodiff::{Tensor, Var};
use crate::converter::{std_dev, TapeWaveform, Waveform};
use crate::error::{Error, Result};

const MIN_STD: f64 = 1e-12;

fn check_grid(pred_dt: f64, pred_t0: f64, pred_len: usize, meas: &Waveform) -> Result<()> {
    let tol = 1e-6 * meas.dt;
    if pred_len != meas.len() || (pred_dt - meas.dt).abs() > tol || (pred_t0 - meas.t0).abs() > tol {
        return Err(Error::Shape {
            op: "reconstruction_loss",
            detail: format!(
                "prediction grid ({pred_len} @ {pred_dt:e} s from {pred_t0:e} s) differs from measurement ({} @ {:e} s from {:e} s)",
                meas.len(),
                meas.dt,
                meas.t0
            ),
        });
    }
    Ok(())
}

/// Inverse variances of the two measured channels.
pub fn channel_weights(meas: &Waveform) -> Result<[f64; 2]> {
    let (s_il, s_vo) = (std_dev(&meas.il), std_dev(&meas.vo));
    if !(s_il >= MIN_STD) || !(s_vo >= MIN_STD) {
        return Err(Error::Degenerate(format!("channel standard deviations {s_il:e} (iL), {s_vo:e} (Vo)")));
    }
    Ok([1.0 / (s_il * s_il), 1.0 / (s_vo * s_vo)])
}

/// `MSE(iL)/σ²(iL) + MSE(Vo)/σ²(Vo)`, with σ the population standard
/// deviations of the measured channels.
pub fn reconstruction_loss<'t>(pred: &TapeWaveform<'t>, meas: &Waveform) -> Result<Var<'t>> {
    check_grid(pred.dt, pred.t0, pred.il.len(), meas)?;
    let [w_il, w_vo] = channel_weights(meas)?;
    let tape = pred.il.tape();
    let term = |p: Var<'t>, m: &[f64], w: f64| -> Result<Var<'t>> {
        let m = tape.constant(Tensor::vector(m.to_vec())?);
        p.sub(m)?.square()?.mean()?.scale(w)
    };
    term(pred.il, &meas.il, w_il)?.add(term(pred.vo, &meas.vo, w_vo)?)
}

/// [`reconstruction_loss`] on plain waveforms.
pub fn reconstruction_loss_value(pred: &Waveform, meas: &Waveform) -> Result<f64> {
    check_grid(pred.dt, pred.t0, pred.len(), meas)?;
    let [w_il, w_vo] = channel_weights(meas)?;
    let mse = |p: &[f64], m: &[f64]| p.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / p.len() as f64;
    Ok(w_il * mse(&pred.il, &meas.il) + w_vo * mse(&pred.vo, &meas.vo))
}
