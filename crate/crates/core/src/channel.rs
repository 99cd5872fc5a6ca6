//! Baseband AWGN channel parameterized by channel SNR.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// The generator every experiment uses. ChaCha gives the same stream on
/// every platform for a given seed.
pub type ChannelRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> ChannelRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Channel SNR in dB; `f64::INFINITY` is a noiseless channel.
    pub csnr_db: f64,
    /// Mean square of the transmitted ensemble, volts².
    pub signal_power: f64,
    pub seed: u64,
}

impl ChannelParams {
    pub fn sigma(&self) -> Result<f64> {
        noise_sigma(self.csnr_db, self.signal_power)
    }
}

/// Noise standard deviation giving `csnr_db` against `signal_power`.
pub fn noise_sigma(csnr_db: f64, signal_power: f64) -> Result<f64> {
    if !(signal_power > 0.0) || !signal_power.is_finite() {
        return Err(Error::param(format!(
            "signal power must be positive and finite, got {signal_power}"
        )));
    }
    if csnr_db.is_nan() || csnr_db == f64::NEG_INFINITY {
        return Err(Error::param(format!("CSNR must be finite or +inf, got {csnr_db}")));
    }
    if csnr_db == f64::INFINITY {
        return Ok(0.0);
    }
    Ok((signal_power / 10f64.powf(csnr_db / 10.0)).sqrt())
}

/// Adds one Gaussian noise sample of standard deviation `sigma` to `s`.
pub fn transmit<R: Rng + ?Sized>(s: f64, sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return s;
    }
    let g: f64 = StandardNormal.sample(rng);
    s + sigma * g
}

pub fn measure_signal_power(ensemble: &[f64]) -> Result<f64> {
    if ensemble.is_empty() {
        return Err(Error::param("cannot measure the power of an empty ensemble"));
    }
    Ok(ensemble.iter().map(|s| s * s).sum::<f64>() / ensemble.len() as f64)
}

/// Empirical SNR in dB of `received` against the clean `sent` sequence.
pub fn measure_snr_db(sent: &[f64], received: &[f64]) -> Result<f64> {
    if sent.len() != received.len() || sent.is_empty() {
        return Err(Error::param("SNR needs two nonempty sequences of equal length"));
    }
    let signal = measure_signal_power(sent)?;
    let noise = sent
        .iter()
        .zip(received)
        .map(|(s, r)| (r - s) * (r - s))
        .sum::<f64>()
        / sent.len() as f64;
    Ok(10.0 * (signal / noise).log10())
}
