//! Three-user multicast: three symbols in two channel uses.
//!
//! The transmitter sends `s₁ + s₂ + αs₃` and then `s₂ − βs₁` with
//! `β = 1 + αs₃/s₂`, so user `i` sees `h_i [(s₁, s₂) + β(s₂, −s₁)] + n` and
//! recovers `(s₁, s₂)` with the pair decoder. User 3 then strips
//! `h₃(ŝ₁ + ŝ₂)` from its first observation and reads `s₃` off the residual.

use rand::Rng;
use rayon::prelude::*;

use crate::analysis::fano_rate_lower_bound;
use crate::error::{invalid, Error, Result};
use crate::model::{awgn, trial_rng, PamConstellation};
use crate::scheme::decode_observation;

pub const DEFAULT_ALPHA: f64 = 0.866_025_403_784_438_6;

pub const MULTICAST_SYMBOLS: usize = 3;
pub const MULTICAST_CHANNEL_USES: usize = 2;

/// Symbols delivered per channel use, `3/2`.
pub fn multicast_throughput() -> f64 {
    MULTICAST_SYMBOLS as f64 / MULTICAST_CHANNEL_USES as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MulticastFrame {
    pub alpha: f64,
    pub beta: f64,
    /// `s₁ + s₂ + αs₃`.
    pub x1: f64,
    /// `s₂ − βs₁`.
    pub x2: f64,
}

pub fn multicast_transmit(s1: f64, s2: f64, s3: f64, alpha: f64) -> Result<MulticastFrame> {
    if s2 == 0.0 {
        return Err(Error::Degenerate("s2 carries the dissolved symbol and must be nonzero".into()));
    }
    let beta = 1.0 + alpha * s3 / s2;
    Ok(MulticastFrame { alpha, beta, x1: s1 + s2 + alpha * s3, x2: s2 - beta * s1 })
}

/// Noiseless observation at a user with gain `h`.
pub fn multicast_receive_noiseless(frame: &MulticastFrame, h: f64) -> [f64; 2] {
    [h * frame.x1, h * frame.x2]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserDecision {
    pub y: [f64; 2],
    pub pair: (f64, f64),
}

/// Receives both uses at gain `h_i` with noise variance `sigma2` (zero for a
/// noiseless channel) and decodes `(s₁, s₂)`.
pub fn multicast_receive_decode<R: Rng + ?Sized>(
    frame: &MulticastFrame,
    h_i: f64,
    sigma2: f64,
    rng: &mut R,
    alphabet: &PamConstellation,
) -> UserDecision {
    let clean = multicast_receive_noiseless(frame, h_i);
    let y = if sigma2 > 0.0 {
        [clean[0] + awgn(sigma2, rng), clean[1] + awgn(sigma2, rng)]
    } else {
        clean
    };
    UserDecision { y, pair: decode_observation(y, [h_i, h_i], alphabet).pair }
}

/// Nearest neighbour on `(y₁ − h₃(ŝ₁ + ŝ₂)) / (αh₃)`.
pub fn multicast_decode_s3(
    y1_user3: f64,
    h3: f64,
    s1_hat: f64,
    s2_hat: f64,
    alpha: f64,
    alphabet: &PamConstellation,
) -> f64 {
    alphabet.nearest((y1_user3 - h3 * (s1_hat + s2_hat)) / (alpha * h3))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct S3Setup {
    pub trials: usize,
    pub seed: u64,
    pub sigma2: f64,
    /// User 3's gain.
    pub h3: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct S3RatePoint {
    pub p: f64,
    /// Half-size of the `s₃` alphabet that maximizes the Fano bound.
    pub q3: u32,
    pub p_e: f64,
    pub fano_bound: f64,
    /// `fano_bound / (½ log₂ P)`.
    pub slope: f64,
}

/// Half-sizes tried for `s₃`: roughly geometric with ratio `2^{1/4}`.
pub fn s3_half_size_grid(p: f64) -> Vec<u32> {
    let top = (2.0 * p.sqrt()).max(2.0);
    let mut grid: Vec<u32> = (0..)
        .map(|i| 2f64.powf(i as f64 / 4.0).round() as u32)
        .take_while(|&q| (q as f64) <= top)
        .collect();
    grid.dedup();
    grid
}

/// `s₃` error rate at user 3 with `(s₁, s₂)` on BPSK and `s₃` on a
/// `2·q3`-PAM, all at power `p`.
pub fn s3_error_rate(p: f64, q3: u32, setup: &S3Setup, point: u64) -> Result<f64> {
    let pair_alphabet = PamConstellation::with_power(p, 1)?;
    let s3_alphabet = PamConstellation::with_power(p, q3)?;
    let errors: usize = (0..setup.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(setup.seed, point, t as u64);
            let s1 = pair_alphabet.sample(&mut rng);
            let s2 = pair_alphabet.sample(&mut rng);
            let s3 = s3_alphabet.sample(&mut rng);
            let frame = multicast_transmit(s1, s2, s3, setup.alpha).expect("alphabet excludes zero");
            let user = multicast_receive_decode(&frame, setup.h3, setup.sigma2, &mut rng, &pair_alphabet);
            let s3_hat = multicast_decode_s3(user.y[0], setup.h3, user.pair.0, user.pair.1, setup.alpha, &s3_alphabet);
            (s3_hat != s3) as usize
        })
        .sum();
    Ok(errors as f64 / setup.trials as f64)
}

/// Best Fano bound for `s₃` over [`s3_half_size_grid`], normalized by
/// `½ log₂ P`.
pub fn s3_rate_slope(p: f64, setup: &S3Setup) -> Result<S3RatePoint> {
    if p <= 1.0 {
        return Err(invalid(format!("power must exceed 1, got {p}")));
    }
    if setup.trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let mut best: Option<S3RatePoint> = None;
    for (i, q3) in s3_half_size_grid(p).into_iter().enumerate() {
        let p_e = s3_error_rate(p, q3, setup, i as u64)?;
        let fano_bound = fano_rate_lower_bound(p_e, q3)?;
        if best.is_none_or(|b| fano_bound > b.fano_bound) {
            best = Some(S3RatePoint { p, q3, p_e, fano_bound, slope: fano_bound / (0.5 * p.log2()) });
        }
    }
    best.ok_or_else(|| invalid("empty alphabet grid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rayleigh_gain, stream_rng};
    use approx::assert_relative_eq;

    #[test]
    fn default_alpha() {
        assert_relative_eq!(DEFAULT_ALPHA, 3f64.sqrt() / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn transmit_example() {
        let f = multicast_transmit(1.0, 1.0, 2.0, DEFAULT_ALPHA).unwrap();
        assert_relative_eq!(f.beta, 1.0 + 3f64.sqrt(), max_relative = 1e-15);
        assert!(multicast_transmit(1.0, 0.0, 2.0, DEFAULT_ALPHA).is_err());
    }

    #[test]
    fn dissolution_identities() {
        let alphabet = PamConstellation::new(1.0, 4).unwrap();
        let mut rng = stream_rng(50, 0);
        for _ in 0..10_000 {
            let s: Vec<f64> = (0..3).map(|_| alphabet.sample(&mut rng)).collect();
            let f = multicast_transmit(s[0], s[1], s[2], DEFAULT_ALPHA).unwrap();
            assert_relative_eq!(f.x1, s[0] + f.beta * s[1], max_relative = 1e-12);
            assert_relative_eq!(f.beta * s[1] - DEFAULT_ALPHA * s[2], s[1], max_relative = 1e-12);
            let h = rayleigh_gain(&mut rng);
            let y = multicast_receive_noiseless(&f, h);
            let expect = [h * (s[0] + f.beta * s[1]), h * (s[1] - f.beta * s[0])];
            assert_relative_eq!(y[0], expect[0], max_relative = 1e-12);
            assert_relative_eq!(y[1], expect[1], max_relative = 1e-12);
        }
    }

    #[test]
    fn s3_residual_noiseless() {
        let alphabet = PamConstellation::new(0.7, 3).unwrap();
        let f = multicast_transmit(2.1, -0.7, 1.4, DEFAULT_ALPHA).unwrap();
        let y = multicast_receive_noiseless(&f, -1.3);
        assert_eq!(multicast_decode_s3(y[0], -1.3, 2.1, -0.7, DEFAULT_ALPHA, &alphabet), 1.4);
    }

    #[test]
    fn wrong_pair_shifts_residual() {
        let alphabet = PamConstellation::new(1.0, 2).unwrap();
        let f = multicast_transmit(1.0, 1.0, 1.0, DEFAULT_ALPHA).unwrap();
        let y = multicast_receive_noiseless(&f, 1.0);
        // ŝ₁ = −1 leaves a residual of α + 2 → 2
        assert_eq!(multicast_decode_s3(y[0], 1.0, -1.0, 1.0, DEFAULT_ALPHA, &alphabet), 2.0);
        // ŝ = (2, 2) leaves α − 2 → −1
        assert_eq!(multicast_decode_s3(y[0], 1.0, 2.0, 2.0, DEFAULT_ALPHA, &alphabet), -1.0);
    }

    #[test]
    fn noisy_decisions_stay_in_alphabet() {
        let alphabet = PamConstellation::new(1.0, 2).unwrap();
        let mut rng = stream_rng(51, 0);
        let f = multicast_transmit(1.0, 2.0, -1.0, DEFAULT_ALPHA).unwrap();
        for _ in 0..1000 {
            let d = multicast_receive_decode(&f, 0.5, 1e4, &mut rng, &alphabet);
            assert!(alphabet.contains(d.pair.0) && alphabet.contains(d.pair.1));
        }
    }

    #[test]
    fn throughput() {
        assert_eq!(multicast_throughput(), 1.5);
    }

    #[test]
    fn half_size_grid() {
        let g = s3_half_size_grid(1e4);
        assert_eq!(g[0], 1);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(*g.last().unwrap() <= 200);
    }
}
