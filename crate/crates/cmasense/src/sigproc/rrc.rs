//! Root-raised-cosine pulse shaping.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Root-raised-cosine filter taps, symmetric and normalized to unit energy.
///
/// `rolloff` is the excess-bandwidth factor, `span_symbols` the filter
/// length in symbol periods and `sps` the oversampling factor; the result
/// has `span_symbols * sps + 1` taps. Two of these filters in cascade form
/// a (near-)Nyquist raised-cosine pulse, so a matched TX/RX pair leaves
/// almost no ISI at the symbol instants.
pub fn rrc_taps(rolloff: f64, span_symbols: usize, sps: usize) -> Result<Vec<f64>> {
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return Err(Error::config(format!("rolloff {rolloff} outside (0, 1]")));
    }
    if span_symbols < 4 {
        return Err(Error::config("RRC span must be at least 4 symbols"));
    }
    if sps < 2 {
        return Err(Error::config("RRC needs at least 2 samples per symbol"));
    }

    let n = span_symbols * sps + 1;
    let center = (n - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..n)
        .map(|i| rrc_impulse((i as f64 - center) / sps as f64, rolloff))
        .collect();

    let energy: f64 = taps.iter().map(|t| t * t).sum();
    let norm = energy.sqrt();
    for t in &mut taps {
        *t /= norm;
    }
    Ok(taps)
}

/// Unnormalized RRC impulse response at time `t` in symbol periods.
fn rrc_impulse(t: f64, beta: f64) -> f64 {
    // The two removable singularities of the closed form.
    if t.abs() < 1e-9 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    let singular = 1.0 / (4.0 * beta);
    if (t.abs() - singular).abs() < 1e-9 {
        let a = (1.0 + 2.0 / PI) * (PI / (4.0 * beta)).sin();
        let b = (1.0 - 2.0 / PI) * (PI / (4.0 * beta)).cos();
        return beta / std::f64::consts::SQRT_2 * (a + b);
    }
    let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
    let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
    num / den
}
