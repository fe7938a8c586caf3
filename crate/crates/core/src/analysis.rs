//! Closed-form rates and bounds, the exhaustive minimum-distance prober and
//! the degrees-of-freedom slope estimator.

use nalgebra::Matrix2;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::model::{awgn, rayleigh_gain, stream_rng, trial_rng, ChannelRealization, PamConstellation};
use crate::scheme::{channel_uses, decode_observation, orthogonal_vector, pair_schedule, signal_vector, Pair};

fn sum_sq(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum()
}

fn sum_sq_excluding(h: &[f64], pair: Pair) -> f64 {
    h.iter()
        .enumerate()
        .filter(|(k, _)| !pair.contains(*k))
        .map(|(_, x)| x * x)
        .sum()
}

/// MISO capacity `½ log₂(1 + P_s Σ g_n² / σ²)` in bits per real channel use.
pub fn capacity_miso(g: &[f64], p_s: f64, sigma2: f64) -> f64 {
    0.5 * (1.0 + p_s * sum_sq(g) / sigma2).log2()
}

/// Gaussian-input rate of `pair` over its two observations, in bits per
/// two channel uses:
///
/// ```text
/// ½ log₂(1 + PΣh²/σ²) + ½ log₂((σ² + PΣh²) / (2PΣ_{k∉pair} h_k² + σ²))
/// ```
pub fn rate_pair_gaussian(h: &[f64], p: f64, sigma2: f64, pair: Pair) -> f64 {
    let total = p * sum_sq(h);
    let rest = p * sum_sq_excluding(h, pair);
    0.5 * (1.0 + total / sigma2).log2() + 0.5 * ((sigma2 + total) / (2.0 * rest + sigma2)).log2()
}

/// Overall rate per channel use, `Σ_m R_m / (⌈K/2⌉ + 1)`.
pub fn rate_total(h: &[f64], p: f64, sigma2: f64) -> f64 {
    let k = h.len();
    pair_schedule(k)
        .into_iter()
        .map(|pair| rate_pair_gaussian(h, p, sigma2, pair))
        .sum::<f64>()
        / channel_uses(k) as f64
}

/// Lower bound on [`rate_total`] after replacing every interference term by
/// `PΣh² + σ²`: `⌈K/2⌉ / (2(⌈K/2⌉+1)) · (log₂(1 + PΣh²/σ²) − 1)`.
pub fn rate_total_lower_bound(sum_h2: f64, p: f64, sigma2: f64, k: usize) -> f64 {
    let pairs = k.div_ceil(2) as f64;
    pairs / (2.0 * (pairs + 1.0)) * ((1.0 + p * sum_h2 / sigma2).log2() - 1.0)
}

/// Large-`K` limit of [`rate_total_lower_bound`]: `½ (log₂(1 + PΣh²/σ²) − 1)`.
pub fn rate_lower_bound_large_k(sum_h2: f64, p: f64, sigma2: f64) -> f64 {
    0.5 * ((1.0 + p * sum_h2 / sigma2).log2() - 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// Per-pair rates, bits per two channel uses.
    pub r_pair: Vec<f64>,
    /// Bits per channel use.
    pub r_total: f64,
    /// MISO capacity with `P_s = 2P`.
    pub c_miso: f64,
    /// `½ log₂(1 + 2PΣh²/σ²)`.
    pub c_sum_h: f64,
    pub gap: f64,
}

pub fn rate_report(ch: &ChannelRealization, p: f64, sigma2: f64) -> RateReport {
    let r_pair: Vec<f64> = pair_schedule(ch.k())
        .into_iter()
        .map(|pair| rate_pair_gaussian(&ch.h, p, sigma2, pair))
        .collect();
    let r_total = r_pair.iter().sum::<f64>() / channel_uses(ch.k()) as f64;
    let c_miso = capacity_miso(&ch.g, 2.0 * p, sigma2);
    RateReport {
        r_pair,
        r_total,
        c_miso,
        c_sum_h: capacity_miso(&ch.h, 2.0 * p, sigma2),
        gap: c_miso - r_total,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapCheck {
    /// `R > C − 1`.
    pub holds: bool,
    /// `R − (C − 1)`.
    pub margin: f64,
}

/// Evaluates `R − (C − 1)` with `C` the MISO capacity at `P_s = 2P`.
pub fn capacity_gap_check(ch: &ChannelRealization, p: f64, sigma2: f64) -> GapCheck {
    let margin = rate_total(&ch.h, p, sigma2) - (capacity_miso(&ch.g, 2.0 * p, sigma2) - 1.0);
    GapCheck { holds: margin > 0.0, margin }
}

/// Unconditional covariance of `(y₁, y_{m+1})` under the Gaussian-input model:
/// `(PΣh² + σ²) I`.
pub fn covariance_unconditional(h: &[f64], p: f64, sigma2: f64) -> Matrix2<f64> {
    Matrix2::identity() * (p * sum_sq(h) + sigma2)
}

/// Covariance of `(y₁, y_{m+1})` given the pair symbols: only β is random, so
/// `C = Var(β) v⊥v⊥ᵀ + σ²I`. Writing `Σ' = Σ_{k∉pair} h_k²` and
/// `r = h_a s_a / (h_b s_b)`:
///
/// ```text
/// [ PΣ' + σ²    −PΣ' r       ]
/// [ −PΣ' r      PΣ' r² + σ²  ]
/// ```
///
/// With a common pair gain `r = s_a / s_b`.
pub fn covariance_conditional(h: &[f64], p: f64, sigma2: f64, pair: Pair, s_a: f64, s_b: f64) -> Matrix2<f64> {
    let rest = p * sum_sq_excluding(h, pair);
    let r = h[pair.first] * s_a / (h[pair.second] * s_b);
    Matrix2::new(rest + sigma2, -rest * r, -rest * r, rest * r * r + sigma2)
}

/// Conditional covariance with the symbol ratio replaced by its Gaussian-input
/// surrogate `r² = 1`. The determinant is affine in `r²`, so this matrix's
/// determinant is `E[det C(y | s)]` whenever `E[r²] = 1`.
pub fn covariance_conditional_surrogate(h: &[f64], p: f64, sigma2: f64, pair: Pair) -> Matrix2<f64> {
    let rest = p * sum_sq_excluding(h, pair);
    Matrix2::new(rest + sigma2, -rest, -rest, rest + sigma2)
}

/// `½ log₂ det C(y) − ½ log₂ E[det C(y|s)]` from assembled matrices.
pub fn rate_pair_log_det(h: &[f64], p: f64, sigma2: f64, pair: Pair) -> f64 {
    let unconditional = covariance_unconditional(h, p, sigma2).determinant();
    let conditional = covariance_conditional_surrogate(h, p, sigma2, pair).determinant();
    0.5 * unconditional.log2() - 0.5 * conditional.log2()
}

/// Binary entropy in bits, `H(0) = H(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Fano lower bound on the per-symbol rate, `(1 − Pₑ) log₂(2Q) − H(Pₑ)`,
/// clamped at zero.
pub fn fano_rate_lower_bound(p_e: f64, half_size: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_e) {
        return Err(invalid(format!("error probability must lie in [0, 1], got {p_e}")));
    }
    if half_size == 0 {
        return Err(invalid("half size must be at least 1"));
    }
    let bits = (2.0 * half_size as f64).log2();
    Ok(((1.0 - p_e) * bits - binary_entropy(p_e)).max(0.0))
}

/// `Pₑ ≤ exp(−d²_min / (8σ²))`.
pub fn pe_upper_bound(dmin2: f64, sigma2: f64) -> f64 {
    (-dmin2 / (8.0 * sigma2)).exp()
}

/// Squared minimum distance for arbitrary pair gains: the smallest squared
/// noiseless weight `⟨y − v(t), v(t)⟩² / ‖v(t)‖²` over candidates `t ≠ s`,
/// where `y = v(s) + β v⊥(s)`.
pub fn dmin_exhaustive_gains(s_true: (f64, f64), beta: f64, gains: [f64; 2], alphabet: &PamConstellation) -> f64 {
    let v = signal_vector(gains, s_true);
    let vp = orthogonal_vector(gains, s_true);
    let y = [v[0] + beta * vp[0], v[1] + beta * vp[1]];
    let points = alphabet.points();
    let mut best = f64::INFINITY;
    for &a in &points {
        for &b in &points {
            if (a, b) == s_true {
                continue;
            }
            let c = signal_vector(gains, (a, b));
            let dot = (y[0] - c[0]) * c[0] + (y[1] - c[1]) * c[1];
            best = best.min(dot * dot / (c[0] * c[0] + c[1] * c[1]));
        }
    }
    best
}

/// [`dmin_exhaustive_gains`] with both symbols on the common gain `h`.
pub fn dmin_exhaustive(s_true: (f64, f64), beta: f64, h: f64, alphabet: &PamConstellation) -> f64 {
    dmin_exhaustive_gains(s_true, beta, [h, h], alphabet)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DminReport {
    pub q_s: u32,
    pub samples: usize,
    /// `d²_min Q² / (h² A²)` per channel draw.
    pub dmin2_scaled: Vec<f64>,
}

impl DminReport {
    /// Smallest scaled value over all draws.
    pub fn floor(&self) -> f64 {
        self.dmin2_scaled.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Draws `samples` channels with a common pair gain and `interferers` extra
/// symbols on their own gains, and records the scaled squared minimum
/// distance of each. Draw `i` uses stream `(q_s, i)` of `seed`.
pub fn probe_dmin(q_s: u32, samples: usize, interferers: usize, seed: u64) -> Result<DminReport> {
    if interferers == 0 {
        return Err(invalid("the prober needs at least one interferer"));
    }
    let alphabet = PamConstellation::new(1.0, q_s)?;
    let a = alphabet.amplitude();
    let q = q_s as f64;
    let dmin2_scaled = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, q_s as u64, i as u64);
            let h = rayleigh_gain(&mut rng);
            let s = (alphabet.sample(&mut rng), alphabet.sample(&mut rng));
            let interference: f64 = (0..interferers)
                .map(|_| rayleigh_gain(&mut rng) * alphabet.sample(&mut rng))
                .sum();
            let beta = 1.0 + interference / (h * s.1);
            dmin_exhaustive(s, beta, h, &alphabet) * q * q / (h * h * a * a)
        })
        .collect();
    Ok(DminReport { q_s, samples, dmin2_scaled })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Constellation half-size `round(P^((1−ε)/4))`, at least 1.
pub fn qs_for_power(p: f64, epsilon: f64) -> u32 {
    p.powf((1.0 - epsilon) / 4.0).round().max(1.0) as u32
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofSetup {
    /// Block length; the measured pair is `(s₁, s₂)`.
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    pub sigma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofPoint {
    pub p: f64,
    pub q_s: u32,
    /// Symbol error rate of the pair's symbols.
    pub p_e: f64,
    pub fano_bound: f64,
    /// `fano_bound / (½ log₂ P)`.
    pub slope: f64,
}

/// Gains for the DoF experiment: the pair shares unit gain, as in the
/// per-realization analysis, and the `K − 2` interferers get fixed Rayleigh
/// gains drawn from `seed`.
pub fn dof_reference_gains(k: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, u64::MAX);
    let mut h = vec![1.0, 1.0];
    h.extend((2..k).map(|_| rayleigh_gain(&mut rng)));
    h
}

/// For each power, sizes the alphabet with [`qs_for_power`], measures the
/// pair's symbol error rate by Monte Carlo on a fixed channel and reports the
/// Fano bound normalized by `½ log₂ P`.
pub fn dof_slope(p_grid: &[f64], epsilon: f64, setup: &DofSetup) -> Result<Vec<DofPoint>> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if setup.k < 3 {
        return Err(invalid("the DoF experiment needs at least one interferer"));
    }
    if setup.trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let h = dof_reference_gains(setup.k, setup.seed);
    p_grid
        .iter()
        .enumerate()
        .map(|(point, &p)| {
            if p <= 1.0 {
                return Err(invalid(format!("powers must exceed 1, got {p}")));
            }
            let q_s = qs_for_power(p, epsilon);
            let alphabet = PamConstellation::with_power(p, q_s)?;
            let errors: usize = (0..setup.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(setup.seed, point as u64, t as u64);
                    let s: Vec<f64> = (0..setup.k).map(|_| alphabet.sample(&mut rng)).collect();
                    let interference: f64 = s[2..].iter().zip(&h[2..]).map(|(x, g)| x * g).sum();
                    let beta = 1.0 + interference / (h[1] * s[1]);
                    let y1 = h[0] * s[0] + h[1] * s[1] + interference + awgn(setup.sigma2, &mut rng);
                    let y2 = h[1] * s[1] - beta * h[0] * s[0] + awgn(setup.sigma2, &mut rng);
                    let (a, b) = decode_observation([y1, y2], [h[0], h[1]], &alphabet).pair;
                    (a != s[0]) as usize + (b != s[1]) as usize
                })
                .sum();
            let p_e = errors as f64 / (2 * setup.trials) as f64;
            let fano_bound = fano_rate_lower_bound(p_e, q_s)?;
            Ok(DofPoint { p, q_s, p_e, fano_bound, slope: fano_bound / (0.5 * p.log2()) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{draw_channel, draw_channel_with, stream_rng, GainMapping};
    use approx::assert_relative_eq;

    #[test]
    fn capacity_examples() {
        assert_relative_eq!(capacity_miso(&[1.0, 0.0], 1.0, 1.0), 0.5);
        let g = [0.8, 1.1];
        let lo = capacity_miso(&g, 1e6, 1.0);
        let hi = capacity_miso(&g, 2e6, 1.0);
        assert!((hi - lo - 0.5).abs() < 1e-5);
    }

    #[test]
    fn two_symbols_are_fully_informative() {
        let h = [0.7, -1.4];
        let (p, s2) = (3.0, 0.5);
        let r = rate_pair_gaussian(&h, p, s2, Pair::new(0, 1));
        assert_relative_eq!(r, (1.0 + p * (0.49 + 1.96) / s2).log2(), max_relative = 1e-14);
        assert_relative_eq!(rate_total(&h, p, s2), r / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn rate_vanishes_with_power() {
        let h = [0.7, -1.4, 0.3, 1.0];
        assert!(rate_total(&h, 1e-12, 1.0) < 1e-10);
    }

    #[test]
    fn rate_matches_log_det() {
        let mut rng = stream_rng(40, 0);
        for _ in 0..10_000 {
            let ch = draw_channel(5, 2, &mut rng).unwrap();
            let p = 10f64.powf(rng_uniform(&mut rng) * 4.0 - 1.0);
            for pair in pair_schedule(5) {
                let closed = rate_pair_gaussian(&ch.h, p, 1.0, pair);
                let numeric = rate_pair_log_det(&ch.h, p, 1.0, pair);
                assert_relative_eq!(closed, numeric, max_relative = 1e-10);
            }
        }
    }

    fn rng_uniform(rng: &mut crate::model::SimRng) -> f64 {
        use rand::Rng;
        rng.random()
    }

    #[test]
    fn conditional_covariance_reduces_to_common_gain_form() {
        let h = [0.9, 0.9, 1.3, -0.4];
        let c = covariance_conditional(&h, 2.0, 1.0, Pair::new(0, 1), 1.0, 2.0);
        let rest = 2.0 * (1.69 + 0.16);
        assert_relative_eq!(c[(0, 1)], -rest * 0.5, max_relative = 1e-12);
        assert_relative_eq!(c[(1, 1)], rest * 0.25 + 1.0, max_relative = 1e-12);
    }

    #[test]
    fn total_rate_counting() {
        // equal pair rates r → total r·(K/2)/(K/2 + 1)
        let h = vec![1.0; 40];
        let r = rate_pair_gaussian(&h, 1.0, 1.0, Pair::new(0, 1));
        assert_relative_eq!(rate_total(&h, 1.0, 1.0), r * 20.0 / 21.0, max_relative = 1e-12);
    }

    #[test]
    fn gap_holds_for_long_blocks() {
        let mut rng = stream_rng(41, 0);
        for _ in 0..100 {
            let ch = draw_channel_with(100, 2, GainMapping::SharedAntennas, &mut rng).unwrap();
            for zeta_db in [0.0, 10.0, 20.0, 30.0] {
                let p = 10f64.powf(zeta_db / 10.0);
                let check = capacity_gap_check(&ch, p, 1.0);
                assert!(check.holds, "margin {}", check.margin);
            }
        }
    }

    #[test]
    fn gap_near_zero_snr() {
        let mut rng = stream_rng(42, 0);
        let ch = draw_channel_with(100, 2, GainMapping::SharedAntennas, &mut rng).unwrap();
        let check = capacity_gap_check(&ch, 1e-9, 1.0);
        assert!(check.margin > 0.99 && check.margin <= 1.0 + 1e-6);
    }

    #[test]
    fn report_is_consistent() {
        let mut rng = stream_rng(43, 0);
        let ch = draw_channel(6, 2, &mut rng).unwrap();
        let r = rate_report(&ch, 10.0, 1.0);
        assert_eq!(r.r_pair.len(), 3);
        assert_relative_eq!(r.r_total, rate_total(&ch.h, 10.0, 1.0), max_relative = 1e-14);
        assert_relative_eq!(r.gap, r.c_miso - r.r_total);
        assert!(r.r_pair.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn lower_bounds_are_below_rate() {
        let mut rng = stream_rng(44, 0);
        for _ in 0..1000 {
            let ch = draw_channel(8, 2, &mut rng).unwrap();
            let lb = rate_total_lower_bound(ch.sum_h2(), 5.0, 1.0, 8);
            assert!(lb <= rate_total(&ch.h, 5.0, 1.0));
        }
        assert_relative_eq!(rate_lower_bound_large_k(1.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn fano_examples() {
        assert_relative_eq!(fano_rate_lower_bound(0.0, 2).unwrap(), 2.0);
        assert_relative_eq!(fano_rate_lower_bound(0.5, 2).unwrap(), 0.0);
        assert_eq!(fano_rate_lower_bound(0.9, 1).unwrap(), 0.0);
        assert!(fano_rate_lower_bound(1.5, 2).is_err());
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert_relative_eq!(binary_entropy(0.5), 1.0);
    }

    #[test]
    fn pe_bound_examples() {
        assert_eq!(pe_upper_bound(0.0, 1.0), 1.0);
        assert_relative_eq!(pe_upper_bound(8.0 * 2.0 * 100f64.ln(), 2.0), 0.01, max_relative = 1e-12);
    }

    #[test]
    fn dmin_of_rational_beta_collapses() {
        // K = 2 with a common gain: β = 1 and y = (2, 0); candidate (1, −1)
        // has ⟨(1, 1), (1, −1)⟩ = 0.
        let alphabet = PamConstellation::new(1.0, 1).unwrap();
        assert_eq!(dmin_exhaustive((1.0, 1.0), 1.0, 1.0, &alphabet), 0.0);
    }

    #[test]
    fn dmin_matches_brute_force_weights() {
        let alphabet = PamConstellation::new(1.0, 2).unwrap();
        let (s, beta, g) = ((2.0, -1.0), 1.0 + 2f64.sqrt(), [0.8, 1.7]);
        let v = signal_vector(g, s);
        let vp = orthogonal_vector(g, s);
        let y = [v[0] + beta * vp[0], v[1] + beta * vp[1]];
        let mut best = f64::INFINITY;
        for a in alphabet.points() {
            for b in alphabet.points() {
                if (a, b) != s {
                    best = best.min(crate::scheme::weight_at(y, g, (a, b)).powi(2));
                }
            }
        }
        assert_relative_eq!(dmin_exhaustive_gains(s, beta, g, &alphabet), best, max_relative = 1e-12);
        assert!(best > 0.0);
    }

    #[test]
    fn prober_is_positive_and_reproducible() {
        let a = probe_dmin(4, 2000, 2, 9).unwrap();
        let b = probe_dmin(4, 2000, 2, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.floor() > 0.0);
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let xs = [2.0, 4.0, 8.0, 16.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.5)).collect();
        assert_relative_eq!(loglog_slope(&xs, &ys), -1.5, max_relative = 1e-12);
    }

    #[test]
    fn dof_with_epsilon_near_one_pins_alphabet() {
        assert_eq!(qs_for_power(1e6, 0.999), 1);
        assert_eq!(qs_for_power(1e6, 0.1), 22);
        let setup = DofSetup { k: 4, trials: 200, seed: 1, sigma2: 1.0 };
        let pts = dof_slope(&[1e4, 1e6, 1e8], 0.999, &setup).unwrap();
        // one bit per symbol at most, so the slope shrinks like 2 / log₂P
        assert!(pts.iter().all(|p| p.q_s == 1));
        assert!(pts.windows(2).all(|w| w[1].slope < w[0].slope));
        assert!(pts[2].slope <= 1.0 / (0.5 * 1e8f64.log2()) + 1e-12);
    }

    #[test]
    fn dof_rejects_bad_input() {
        let setup = DofSetup { k: 4, trials: 10, seed: 1, sigma2: 1.0 };
        assert!(dof_slope(&[100.0], 0.0, &setup).is_err());
        assert!(dof_slope(&[0.5], 0.1, &setup).is_err());
        assert!(dof_slope(&[100.0], 0.1, &DofSetup { k: 2, ..setup }).is_err());
    }
}
