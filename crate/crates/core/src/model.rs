//! Constellations, channel draws, noise and power accounting.
//!
//! Everything random in the crate is driven by an explicit [`SimRng`]. Monte
//! Carlo code derives one independent stream per trial with [`trial_rng`], so
//! a run gives the same numbers whether the trials execute serially or on a
//! thread pool.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{invalid, Result};

/// Gains with magnitude below this are redrawn: a deep-faded antenna is not used.
pub const GAIN_FLOOR: f64 = 1e-3;

pub type SimRng = ChaCha8Rng;

/// Stream `stream` of the master `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const TRIAL_BITS: u32 = 40;

/// Counter-based stream for trial `trial` of sweep point `point`.
pub fn trial_rng(seed: u64, point: u64, trial: u64) -> SimRng {
    assert!(trial < (1 << TRIAL_BITS), "trial index out of range");
    assert!(point < (1 << (64 - TRIAL_BITS)), "point index out of range");
    stream_rng(seed, (point << TRIAL_BITS) | trial)
}

/// Zero-excluded real PAM alphabet `{A·l : l = ±1, …, ±Q}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PamConstellation {
    amplitude: f64,
    half_size: u32,
}

impl PamConstellation {
    pub fn new(amplitude: f64, half_size: u32) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(invalid(format!("amplitude must be positive, got {amplitude}")));
        }
        if half_size == 0 {
            return Err(invalid("half size must be at least 1"));
        }
        Ok(Self { amplitude, half_size })
    }

    /// Alphabet of half-size `half_size` scaled to average power `power`.
    pub fn with_power(power: f64, half_size: u32) -> Result<Self> {
        Self::new(amplitude_for_power(power, half_size)?, half_size)
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn half_size(&self) -> u32 {
        self.half_size
    }

    /// Number of points, `2Q`.
    pub fn len(&self) -> usize {
        2 * self.half_size as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Integer label of point `index` in ascending order: `-Q, …, -1, 1, …, Q`.
    pub fn label(&self, index: usize) -> i64 {
        let q = self.half_size as i64;
        let i = index as i64;
        if i < q {
            i - q
        } else {
            i - q + 1
        }
    }

    pub fn point(&self, index: usize) -> f64 {
        self.amplitude * self.label(index) as f64
    }

    /// Points in ascending order.
    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Closed-form average power `A²(Q+1)(2Q+1)/6` under uniform symbols.
    pub fn power(&self) -> f64 {
        let q = self.half_size as f64;
        self.amplitude * self.amplitude * (q + 1.0) * (2.0 * q + 1.0) / 6.0
    }

    /// Average power by direct summation over the alphabet.
    pub fn empirical_power(&self) -> f64 {
        let points = self.points();
        points.iter().map(|s| s * s).sum::<f64>() / points.len() as f64
    }

    /// Index of the point nearest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let q = self.half_size as i64;
        let mut l = (x / self.amplitude).round().clamp(-q as f64, q as f64) as i64;
        if l == 0 {
            l = if x < 0.0 { -1 } else { 1 };
        }
        if l < 0 {
            (l + q) as usize
        } else {
            (l + q - 1) as usize
        }
    }

    /// Nearest-neighbour decision.
    pub fn nearest(&self, x: f64) -> f64 {
        self.point(self.nearest_index(x))
    }

    pub fn contains(&self, s: f64) -> bool {
        let l = s / self.amplitude;
        let r = l.round();
        (l - r).abs() < 1e-9 && r != 0.0 && r.abs() <= self.half_size as f64
    }

    /// Uniform draw from the alphabet.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.point(rng.random_range(0..self.len()))
    }
}

/// Amplitude step that gives a `2Q`-point alphabet average power exactly `power`.
pub fn amplitude_for_power(power: f64, half_size: u32) -> Result<f64> {
    if !(power.is_finite() && power > 0.0) {
        return Err(invalid(format!("power must be positive, got {power}")));
    }
    if half_size == 0 {
        return Err(invalid("half size must be at least 1"));
    }
    let q = half_size as f64;
    Ok((6.0 * power / ((q + 1.0) * (2.0 * q + 1.0))).sqrt())
}

/// How the `K` symbol gains relate to the `N` antenna gains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainMapping {
    /// Every symbol sees its own gain. Draws `max(K, N)` gains and takes the
    /// first `K` as `h` and the first `N` as `g`, so for `K ≤ N` the symbol
    /// gains are a sub-vector of the antenna gains.
    #[default]
    Independent,
    /// `K > N`: the symbols are split into `N` contiguous blocks and block `n`
    /// is sent from antenna `n`, so `h_k` repeats the antenna gain.
    SharedAntennas,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Per-symbol gains.
    pub h: Vec<f64>,
    /// Per-antenna gains, for the MISO capacity reference.
    pub g: Vec<f64>,
}

impl ChannelRealization {
    pub fn new(h: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if h.len() < 2 || g.is_empty() {
            return Err(invalid("need at least two symbol gains and one antenna gain"));
        }
        if h.iter().chain(&g).any(|x| !x.is_finite()) {
            return Err(invalid("channel gains must be finite"));
        }
        Ok(Self { h, g })
    }

    /// Channel where the antenna gains are the symbol gains.
    pub fn from_gains(h: Vec<f64>) -> Result<Self> {
        let g = h.clone();
        Self::new(h, g)
    }

    pub fn k(&self) -> usize {
        self.h.len()
    }

    pub fn sum_h2(&self) -> f64 {
        self.h.iter().map(|x| x * x).sum()
    }

    pub fn sum_g2(&self) -> f64 {
        self.g.iter().map(|x| x * x).sum()
    }
}

/// One real gain: Rayleigh magnitude with `E[h²] = 1` and a uniform random
/// sign, redrawn while `|h| < GAIN_FLOOR`.
pub fn rayleigh_gain<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let power: f64 = Exp1.sample(rng);
        let magnitude = power.sqrt();
        if magnitude >= GAIN_FLOOR {
            return if rng.random_bool(0.5) { magnitude } else { -magnitude };
        }
    }
}

/// `K` symbol gains and `N` antenna gains with the default mapping.
pub fn draw_channel<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> Result<ChannelRealization> {
    draw_channel_with(k, n, GainMapping::Independent, rng)
}

pub fn draw_channel_with<R: Rng + ?Sized>(
    k: usize,
    n: usize,
    mapping: GainMapping,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if k < 2 || n < 2 {
        return Err(invalid(format!("need k >= 2 and n >= 2, got k={k}, n={n}")));
    }
    match mapping {
        GainMapping::Independent => {
            let gains: Vec<f64> = (0..k.max(n)).map(|_| rayleigh_gain(rng)).collect();
            ChannelRealization::new(gains[..k].to_vec(), gains[..n].to_vec())
        }
        GainMapping::SharedAntennas => {
            let g: Vec<f64> = (0..n).map(|_| rayleigh_gain(rng)).collect();
            let h = (0..k).map(|i| g[antenna_for_symbol(i, k, n)]).collect();
            ChannelRealization::new(h, g)
        }
    }
}

/// Antenna carrying symbol `i` (0-based) when `k` symbols share `n` antennas
/// in contiguous blocks; the first block holds `⌊k/n⌋` symbols.
pub fn antenna_for_symbol(i: usize, k: usize, n: usize) -> usize {
    (0..n).rev().find(|&a| i >= a * k / n).unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma2: f64,
}

impl NoiseModel {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(invalid(format!("noise variance must be positive, got {sigma2}")));
        }
        Ok(Self { sigma2 })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        awgn(self.sigma2, rng)
    }
}

/// One zero-mean Gaussian sample of variance `sigma2`.
pub fn awgn<R: Rng + ?Sized>(sigma2: f64, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    sigma2.sqrt() * z
}

/// Per-symbol power `P` and the SNR `ζ = P/σ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    pub p: f64,
    pub sigma2: f64,
}

impl PowerBudget {
    pub fn new(p: f64, sigma2: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(invalid(format!("power must be positive, got {p}")));
        }
        NoiseModel::new(sigma2)?;
        Ok(Self { p, sigma2 })
    }

    pub fn from_zeta_db(zeta_db: f64, sigma2: f64) -> Result<Self> {
        Self::new(sigma2 * db_to_linear(zeta_db), sigma2)
    }

    pub fn zeta(&self) -> f64 {
        self.p / self.sigma2
    }

    pub fn zeta_db(&self) -> f64 {
        linear_to_db(self.zeta())
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel { sigma2: self.sigma2 }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn smallest_alphabet() {
        let c = PamConstellation::new(1.0, 1).unwrap();
        assert_eq!(c.points(), vec![-1.0, 1.0]);
    }

    #[test]
    fn four_pam() {
        let c = PamConstellation::new(1.0, 2).unwrap();
        assert_eq!(c.points(), vec![-2.0, -1.0, 1.0, 2.0]);
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn power_of_half_step_six_point() {
        // direct sum: 0.25 * 2 * (1 + 4 + 9) / 6 = 7/6
        let c = PamConstellation::new(0.5, 3).unwrap();
        assert_relative_eq!(c.power(), 7.0 / 6.0, max_relative = 1e-15);
        assert_relative_eq!(c.empirical_power(), 7.0 / 6.0, max_relative = 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PamConstellation::new(0.0, 2).is_err());
        assert!(PamConstellation::new(-1.0, 2).is_err());
        assert!(PamConstellation::new(1.0, 0).is_err());
        assert!(amplitude_for_power(0.0, 2).is_err());
        assert!(NoiseModel::new(0.0).is_err());
        assert!(PowerBudget::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn amplitude_examples() {
        assert_relative_eq!(amplitude_for_power(1.0, 1).unwrap(), 1.0);
        assert_relative_eq!(amplitude_for_power(5.0, 2).unwrap(), 2f64.sqrt(), max_relative = 1e-15);
        // A²Q²/3 asymptote
        let q = 4000;
        let a = amplitude_for_power(2.0, q).unwrap();
        assert_relative_eq!(a, (3.0 * 2.0f64).sqrt() / q as f64, max_relative = 1e-3);
    }

    #[test]
    fn power_identity_up_to_64() {
        for q in 1..=64 {
            for &a in &[0.1, 1.0, 3.7] {
                let c = PamConstellation::new(a, q).unwrap();
                assert_relative_eq!(c.power(), c.empirical_power(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn nearest_decisions() {
        let c = PamConstellation::new(1.0, 2).unwrap();
        assert_eq!(c.nearest(0.1), 1.0);
        assert_eq!(c.nearest(-0.1), -1.0);
        assert_eq!(c.nearest(1.4), 1.0);
        assert_eq!(c.nearest(1.6), 2.0);
        assert_eq!(c.nearest(-40.0), -2.0);
        for i in 0..c.len() {
            assert_eq!(c.nearest_index(c.point(i)), i);
        }
    }

    #[test]
    fn channel_is_reproducible_and_floored() {
        let a = draw_channel(8, 2, &mut stream_rng(7, 0)).unwrap();
        let b = draw_channel(8, 2, &mut stream_rng(7, 0)).unwrap();
        assert_eq!(a, b);
        let mut rng = stream_rng(3, 1);
        for _ in 0..10_000 {
            let ch = draw_channel(4, 2, &mut rng).unwrap();
            assert!(ch.h.iter().all(|x| x.abs() >= GAIN_FLOOR));
        }
    }

    #[test]
    fn channel_second_moment() {
        let mut rng = stream_rng(11, 0);
        let n = 1_000_000;
        let mean: f64 = (0..n).map(|_| rayleigh_gain(&mut rng).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "E[h^2] = {mean}");
    }

    #[test]
    fn gain_mappings() {
        let mut rng = stream_rng(5, 0);
        let small = draw_channel(2, 4, &mut rng).unwrap();
        assert_eq!(small.h[..], small.g[..2]);
        assert!(small.sum_h2() <= small.sum_g2());

        let big = draw_channel(10, 2, &mut rng).unwrap();
        assert_eq!(big.g[..], big.h[..2]);
        assert!(big.sum_h2() > big.sum_g2());

        let shared = draw_channel_with(5, 2, GainMapping::SharedAntennas, &mut rng).unwrap();
        assert_eq!(shared.h, vec![shared.g[0], shared.g[0], shared.g[1], shared.g[1], shared.g[1]]);
        assert!(shared.sum_h2() > shared.sum_g2());
    }

    #[test]
    fn antenna_blocks() {
        let k = 100;
        let first = (0..k).filter(|&i| antenna_for_symbol(i, k, 2) == 0).count();
        assert_eq!(first, 50);
        assert_eq!(antenna_for_symbol(0, 7, 3), 0);
        assert_eq!(antenna_for_symbol(6, 7, 3), 2);
    }

    #[test]
    fn awgn_moments() {
        let mut rng = stream_rng(1, 9);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| awgn(1.0, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 0.01, "variance {var}");

        let ys: Vec<f64> = (0..n).map(|_| awgn(4.0, &mut rng)).collect();
        let std = (ys.iter().map(|y| y * y).sum::<f64>() / n as f64).sqrt();
        assert!((std - 2.0).abs() < 0.02, "std {std}");

        let a: Vec<f64> = (0..5).map(|_| awgn(1.0, &mut stream_rng(2, 2))).collect();
        let b: Vec<f64> = (0..5).map(|_| awgn(1.0, &mut stream_rng(2, 2))).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn trial_streams_are_distinct() {
        let a: f64 = trial_rng(1, 0, 0).random();
        let b: f64 = trial_rng(1, 0, 1).random();
        let c: f64 = trial_rng(1, 1, 0).random();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, trial_rng(1, 0, 0).random::<f64>());
    }

    #[test]
    fn zeta_round_trip() {
        let b = PowerBudget::from_zeta_db(17.0, 2.0).unwrap();
        assert_relative_eq!(b.zeta_db(), 17.0, max_relative = 1e-12);
        assert_relative_eq!(b.p, 2.0 * db_to_linear(17.0), max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn amplitude_hits_power(p in 1e-3f64..1e6, q in 1u32..200) {
            let c = PamConstellation::with_power(p, q).unwrap();
            prop_assert!((c.empirical_power() - p).abs() <= 1e-12 * p);
        }

        #[test]
        fn alphabet_is_symmetric(a in 1e-3f64..1e3, q in 1u32..64) {
            let c = PamConstellation::new(a, q).unwrap();
            let pts = c.points();
            prop_assert_eq!(pts.len(), 2 * q as usize);
            prop_assert!(pts.iter().sum::<f64>().abs() <= 1e-9 * a * q as f64);
            prop_assert!(pts.iter().all(|s| *s != 0.0 && c.contains(*s)));
            prop_assert_eq!(pts.iter().map(|s| s.abs()).fold(f64::INFINITY, f64::min), a);
        }
    }
}
