//! Reference schemes: point-to-point MISO with transmit MRC (one symbol per
//! use) and two superposed symbols with successive decoding (two per use).

use rand::Rng;

use crate::error::{invalid, Result};
use crate::model::{awgn, PamConstellation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineScheme {
    MrcMiso,
    Successive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    pub scheme: BaselineScheme,
    pub total_power_per_use: f64,
}

impl BaselineConfig {
    /// Both baselines spend `2P` per channel use.
    pub fn new(scheme: BaselineScheme, p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(invalid(format!("power must be positive, got {p}")));
        }
        Ok(Self { scheme, total_power_per_use: 2.0 * p })
    }

    /// Per-symbol alphabet: MRC puts all of `2P` on one symbol, successive
    /// decoding splits it evenly between two.
    pub fn alphabet(&self, half_size: u32) -> Result<PamConstellation> {
        let per_symbol = match self.scheme {
            BaselineScheme::MrcMiso => self.total_power_per_use,
            BaselineScheme::Successive => self.total_power_per_use / 2.0,
        };
        PamConstellation::with_power(per_symbol, half_size)
    }
}

/// Beamforming gain `√Σ g_n²`.
pub fn mrc_gain(g: &[f64]) -> f64 {
    g.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Receive side of MRC: nearest neighbour on `y / √Σg²`.
pub fn mrc_decode(y: f64, g: &[f64], alphabet: &PamConstellation) -> f64 {
    alphabet.nearest(y / mrc_gain(g))
}

/// `y = √Σg² · s + n`, then [`mrc_decode`]. `alphabet` is already scaled to
/// the full per-use power.
pub fn mrc_transmit_decode<R: Rng + ?Sized>(
    symbol: f64,
    g: &[f64],
    alphabet: &PamConstellation,
    sigma2: f64,
    rng: &mut R,
) -> f64 {
    let y = mrc_gain(g) * symbol + awgn(sigma2, rng);
    mrc_decode(y, g, alphabet)
}

/// Effective SNR of MRC with per-use power `total_power`.
pub fn mrc_effective_snr(total_power: f64, g: &[f64], sigma2: f64) -> f64 {
    total_power * g.iter().map(|x| x * x).sum::<f64>() / sigma2
}

/// Decodes the symbol with the larger `|h|` first treating the other as
/// noise, subtracts it, then decodes the weaker one.
pub fn successive_decode(y: f64, h1: f64, h2: f64, alphabet: &PamConstellation) -> (f64, f64) {
    if h1.abs() >= h2.abs() {
        let s1 = alphabet.nearest(y / h1);
        let s2 = alphabet.nearest((y - h1 * s1) / h2);
        (s1, s2)
    } else {
        let s2 = alphabet.nearest(y / h2);
        let s1 = alphabet.nearest((y - h2 * s2) / h1);
        (s1, s2)
    }
}

/// `y = h₁s₁ + h₂s₂ + n`, then [`successive_decode`].
pub fn successive_transmit_decode<R: Rng + ?Sized>(
    s1: f64,
    s2: f64,
    h1: f64,
    h2: f64,
    alphabet: &PamConstellation,
    sigma2: f64,
    rng: &mut R,
) -> (f64, f64) {
    let y = h1 * s1 + h2 * s2 + awgn(sigma2, rng);
    successive_decode(y, h1, h2, alphabet)
}
