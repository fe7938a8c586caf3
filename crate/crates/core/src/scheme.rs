//! Interference dissolution over a real MISO channel.
//!
//! Channel use 1 carries every symbol, `y₁ = Σ h_k s_k + n₁`. For each pair
//! `(s_a, s_b)` the transmitter folds all other symbols into `s_b` through the
//! dissolution factor
//!
//! ```text
//! β = 1 + (Σ_{k∉{a,b}} h_k s_k) / (h_b s_b)
//! ```
//!
//! and spends one more channel use on `h_b s_b − β h_a s_a`. Stacking the two
//! observations gives `y = v + β v⊥ + n` with `v = (h_a s_a, h_b s_b)` and
//! `v⊥ = (h_b s_b, −h_a s_a)`: the interference lies along `v⊥`, so the
//! receiver can pick the candidate whose residual is orthogonal to itself
//! without knowing β.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::model::{ChannelRealization, NoiseModel, PamConstellation};

/// Indices (0-based) of the two symbols decoded together.
///
/// `second` is the symbol the interference is dissolved into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pair {
    pub first: usize,
    pub second: usize,
}

impl Pair {
    pub fn new(first: usize, second: usize) -> Self {
        Self { first, second }
    }

    pub fn contains(&self, k: usize) -> bool {
        k == self.first || k == self.second
    }
}

/// Pairs `(s₁,s₂), (s₃,s₄), …`; for odd `K` the last symbol is paired with `s₁`.
pub fn pair_schedule(k: usize) -> Vec<Pair> {
    let mut pairs: Vec<Pair> = (0..k / 2).map(|m| Pair::new(2 * m, 2 * m + 1)).collect();
    if k % 2 == 1 {
        pairs.push(Pair::new(k - 1, 0));
    }
    pairs
}

/// `⌈K/2⌉ + 1`.
pub fn channel_uses(k: usize) -> usize {
    k.div_ceil(2) + 1
}

/// Symbols delivered per channel use, `K / (⌈K/2⌉ + 1)`.
pub fn symbols_per_use(k: usize) -> f64 {
    k as f64 / channel_uses(k) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    symbols: Vec<f64>,
}

impl SymbolBlock {
    pub fn new(symbols: Vec<f64>) -> Result<Self> {
        if symbols.len() < 2 {
            return Err(invalid("a block needs at least two symbols"));
        }
        if symbols.iter().any(|s| !s.is_finite() || *s == 0.0) {
            return Err(invalid("symbols must be finite and non-zero"));
        }
        Ok(Self { symbols })
    }

    /// `k` uniform draws from `alphabet`.
    pub fn draw<R: Rng + ?Sized>(k: usize, alphabet: &PamConstellation, rng: &mut R) -> Result<Self> {
        Self::new((0..k).map(|_| alphabet.sample(rng)).collect())
    }

    pub fn symbols(&self) -> &[f64] {
        &self.symbols
    }

    pub fn k(&self) -> usize {
        self.symbols.len()
    }
}

fn check_dims(block: &SymbolBlock, ch: &ChannelRealization) -> Result<()> {
    if block.k() != ch.k() {
        return Err(invalid(format!(
            "block has {} symbols but channel has {} gains",
            block.k(),
            ch.k()
        )));
    }
    Ok(())
}

fn check_pair(pair: Pair, k: usize) -> Result<()> {
    if pair.first >= k || pair.second >= k || pair.first == pair.second {
        return Err(invalid(format!("invalid pair {pair:?} for K={k}")));
    }
    Ok(())
}

/// Noiseless first-use observation `Σ h_k s_k`.
pub fn first_use_signal(block: &SymbolBlock, ch: &ChannelRealization) -> Result<f64> {
    check_dims(block, ch)?;
    Ok(block.symbols.iter().zip(&ch.h).map(|(s, h)| h * s).sum())
}

/// Interference seen by `pair` in the first use: `Σ_{k∉pair} h_k s_k`.
pub fn interference(block: &SymbolBlock, ch: &ChannelRealization, pair: Pair) -> Result<f64> {
    check_dims(block, ch)?;
    check_pair(pair, block.k())?;
    Ok(block
        .symbols
        .iter()
        .zip(&ch.h)
        .enumerate()
        .filter(|(k, _)| !pair.contains(*k))
        .map(|(_, (s, h))| h * s)
        .sum())
}

/// Sum of squared interferer gains `Σ_{k∉pair} h_k²`.
pub fn interference_gain2(ch: &ChannelRealization, pair: Pair) -> f64 {
    ch.h
        .iter()
        .enumerate()
        .filter(|(k, _)| !pair.contains(*k))
        .map(|(_, h)| h * h)
        .sum()
}

/// Dissolution factor `β = 1 + interference / (h_b s_b)`.
pub fn dissolution_factor(block: &SymbolBlock, ch: &ChannelRealization, pair: Pair) -> Result<f64> {
    let i = interference(block, ch, pair)?;
    let carrier = ch.h[pair.second] * block.symbols[pair.second];
    if carrier == 0.0 {
        return Err(Error::Degenerate(format!("zero carrier h·s for symbol {}", pair.second)));
    }
    Ok(1.0 + i / carrier)
}

/// Everything the transmitter sends for one block.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePlan {
    pub pairs: Vec<Pair>,
    pub betas: Vec<f64>,
    /// Noiseless `y₁`.
    pub first_use: f64,
    /// Noiseless observation of channel uses `2 … ⌈K/2⌉+1`.
    pub later_uses: Vec<f64>,
    /// Transmit power of each use with `E[s²]` replaced by the actual symbols:
    /// `Σ s_k²` for use 1, `β² s_a² + s_b²` for the others.
    pub realized_power: Vec<f64>,
}

impl FramePlan {
    pub fn new(block: &SymbolBlock, ch: &ChannelRealization) -> Result<Self> {
        let first_use = first_use_signal(block, ch)?;
        let pairs = pair_schedule(block.k());
        let s = &block.symbols;
        let mut betas = Vec::with_capacity(pairs.len());
        let mut later_uses = Vec::with_capacity(pairs.len());
        let mut realized_power = vec![s.iter().map(|x| x * x).sum()];
        for &pair in &pairs {
            let beta = dissolution_factor(block, ch, pair)?;
            let (sa, sb) = (s[pair.first], s[pair.second]);
            later_uses.push(ch.h[pair.second] * sb - beta * ch.h[pair.first] * sa);
            realized_power.push(beta * beta * sa * sa + sb * sb);
            betas.push(beta);
        }
        Ok(Self { pairs, betas, first_use, later_uses, realized_power })
    }

    pub fn channel_uses(&self) -> usize {
        1 + self.later_uses.len()
    }

    /// Mean realized transmit power per channel use.
    pub fn mean_power_per_use(&self) -> f64 {
        self.realized_power.iter().sum::<f64>() / self.realized_power.len() as f64
    }
}

/// Observations `(y₁, y_{m+1})` used to decode one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceivedPair {
    pub y1: f64,
    pub ym: f64,
    pub pair: Pair,
}

impl ReceivedPair {
    pub fn as_vector(&self) -> [f64; 2] {
        [self.y1, self.ym]
    }
}

/// Noiseless observations for `pair`.
pub fn receive_noiseless(block: &SymbolBlock, ch: &ChannelRealization, pair: Pair) -> Result<ReceivedPair> {
    let y1 = first_use_signal(block, ch)?;
    let beta = dissolution_factor(block, ch, pair)?;
    let s = &block.symbols;
    let ym = ch.h[pair.second] * s[pair.second] - beta * ch.h[pair.first] * s[pair.first];
    Ok(ReceivedPair { y1, ym, pair })
}

/// Sends `pair` over the first use and its own dissolution use, each with
/// independent AWGN.
pub fn transmit_pair<R: Rng + ?Sized>(
    block: &SymbolBlock,
    ch: &ChannelRealization,
    pair: Pair,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<ReceivedPair> {
    let clean = receive_noiseless(block, ch, pair)?;
    Ok(ReceivedPair {
        y1: clean.y1 + noise.sample(rng),
        ym: clean.ym + noise.sample(rng),
        pair,
    })
}

/// `v(t) = (h_a t_a, h_b t_b)`.
pub fn signal_vector(gains: [f64; 2], cand: (f64, f64)) -> [f64; 2] {
    [gains[0] * cand.0, gains[1] * cand.1]
}

/// `v⊥(t) = (h_b t_b, −h_a t_a)`.
pub fn orthogonal_vector(gains: [f64; 2], cand: (f64, f64)) -> [f64; 2] {
    [gains[1] * cand.1, -gains[0] * cand.0]
}

/// `|⟨y − v(t), v(t)⟩| / ‖v(t)‖` for an observation and the pair's gains.
pub fn weight_at(y: [f64; 2], gains: [f64; 2], cand: (f64, f64)) -> f64 {
    let v = signal_vector(gains, cand);
    let norm2 = v[0] * v[0] + v[1] * v[1];
    ((y[0] - v[0]) * v[0] + (y[1] - v[1]) * v[1]).abs() / norm2.sqrt()
}

fn pair_gains(ch: &ChannelRealization, pair: Pair) -> [f64; 2] {
    [ch.h[pair.first], ch.h[pair.second]]
}

/// Weight component of candidate `cand` for the pair in `rp`.
pub fn weight(rp: &ReceivedPair, cand: (f64, f64), ch: &ChannelRealization) -> f64 {
    weight_at(rp.as_vector(), pair_gains(ch, rp.pair), cand)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecoderKind {
    /// Minimum weight component.
    #[default]
    Weight,
    /// Gaussian-interference maximum likelihood.
    Ml,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeResult {
    pub pair: (f64, f64),
    /// Weight component of the decision.
    pub weight_min: f64,
    /// Objective value the decoder minimized (the weight itself for
    /// [`DecoderKind::Weight`]).
    pub metric: f64,
    pub decoder: DecoderKind,
}

/// Exhaustive search over `alphabet²` for the smallest objective; the first
/// candidate in lexicographic index order wins ties.
fn argmin_candidates<F>(alphabet: &PamConstellation, mut objective: F) -> Result<((f64, f64), f64)>
where
    F: FnMut((f64, f64)) -> Result<f64>,
{
    let points = alphabet.points();
    let mut best = ((points[0], points[0]), f64::INFINITY);
    for &a in &points {
        for &b in &points {
            let value = objective((a, b))?;
            if value < best.1 {
                best = ((a, b), value);
            }
        }
    }
    Ok(best)
}

/// Weight decoder on a raw observation vector.
pub fn decode_observation(y: [f64; 2], gains: [f64; 2], alphabet: &PamConstellation) -> DecodeResult {
    let (pair, w) = argmin_candidates(alphabet, |c| Ok(weight_at(y, gains, c)))
        .expect("weight objective is infallible");
    DecodeResult { pair, weight_min: w, metric: w, decoder: DecoderKind::Weight }
}

pub fn decode_pair(rp: &ReceivedPair, ch: &ChannelRealization, alphabet: &PamConstellation) -> DecodeResult {
    decode_observation(rp.as_vector(), pair_gains(ch, rp.pair), alphabet)
}

/// Variance of β given the candidate: `η² = P Σ_{k∉pair} h_k² / (h_b t_b)²`.
pub fn beta_variance(interference_gain2: f64, gain_b: f64, cand_b: f64, p: f64) -> f64 {
    let carrier = gain_b * cand_b;
    p * interference_gain2 / (carrier * carrier)
}

/// ML decision function `σ² (y − E[y])ᵀ C⁻¹ (y − E[y])` with
/// `C = η² v⊥v⊥ᵀ + σ² I` and `E[y] = v + v⊥` (interferers are zero-mean, so
/// `E[β] = 1`). Uses the closed-form inverse
/// `C⁻¹ = (η² v vᵀ + σ² I) / (σ² (η²‖v‖² + σ²))`.
pub fn ml_metric_at(
    y: [f64; 2],
    gains: [f64; 2],
    interference_gain2: f64,
    cand: (f64, f64),
    p: f64,
    sigma2: f64,
) -> Result<f64> {
    let v = signal_vector(gains, cand);
    let vp = orthogonal_vector(gains, cand);
    let eta2 = beta_variance(interference_gain2, gains[1], cand.1, p);
    let norm2 = v[0] * v[0] + v[1] * v[1];
    let det_scale = eta2 * norm2 + sigma2;
    if !(det_scale.is_finite() && det_scale > 0.0 && sigma2 > 0.0) {
        return Err(Error::SingularCovariance(cand.0, cand.1));
    }
    let d = [y[0] - v[0] - vp[0], y[1] - v[1] - vp[1]];
    let dv = d[0] * v[0] + d[1] * v[1];
    let dd = d[0] * d[0] + d[1] * d[1];
    Ok((eta2 * dv * dv + sigma2 * dd) / det_scale)
}

pub fn ml_decode_observation(
    y: [f64; 2],
    gains: [f64; 2],
    interference_gain2: f64,
    alphabet: &PamConstellation,
    p: f64,
    sigma2: f64,
) -> Result<DecodeResult> {
    let (pair, metric) =
        argmin_candidates(alphabet, |c| ml_metric_at(y, gains, interference_gain2, c, p, sigma2))?;
    Ok(DecodeResult {
        pair,
        weight_min: weight_at(y, gains, pair),
        metric,
        decoder: DecoderKind::Ml,
    })
}

/// ML oracle for the pair in `rp`; `p` is the interferers' symbol power.
pub fn ml_decode_pair(
    rp: &ReceivedPair,
    ch: &ChannelRealization,
    alphabet: &PamConstellation,
    p: f64,
    sigma2: f64,
) -> Result<DecodeResult> {
    ml_decode_observation(
        rp.as_vector(),
        pair_gains(ch, rp.pair),
        interference_gain2(ch, rp.pair),
        alphabet,
        p,
        sigma2,
    )
}

/// Decoded block plus per-pair detail.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub decoded: Vec<f64>,
    pub pairs: Vec<DecodeResult>,
    pub channel_uses: usize,
    pub plan: FramePlan,
}

impl FrameOutcome {
    pub fn symbol_errors(&self, block: &SymbolBlock) -> usize {
        self.decoded.iter().zip(block.symbols()).filter(|(a, b)| a != b).count()
    }
}

/// Runs the whole block: one shared first use, one dissolution use per pair.
/// `noise = None` gives the noiseless channel. For odd `K` the final pair
/// `(s_K, s₁)` is decoded jointly and only `s_K` is kept.
pub fn transmit_and_decode_all<R: Rng + ?Sized>(
    block: &SymbolBlock,
    ch: &ChannelRealization,
    noise: Option<&NoiseModel>,
    decoder: DecoderKind,
    alphabet: &PamConstellation,
    rng: &mut R,
) -> Result<FrameOutcome> {
    let plan = FramePlan::new(block, ch)?;
    let draw = |rng: &mut R| noise.map_or(0.0, |n| n.sample(rng));
    let y1 = plan.first_use + draw(rng);
    let gain_p = alphabet.power();
    let sigma2 = noise.map_or(0.0, NoiseModel::sigma2);

    let mut decoded = vec![f64::NAN; block.k()];
    let mut results = Vec::with_capacity(plan.pairs.len());
    for (&pair, &clean) in plan.pairs.iter().zip(&plan.later_uses) {
        let rp = ReceivedPair { y1, ym: clean + draw(rng), pair };
        let result = match decoder {
            DecoderKind::Weight => decode_pair(&rp, ch, alphabet),
            DecoderKind::Ml => ml_decode_pair(&rp, ch, alphabet, gain_p, sigma2)?,
        };
        if decoded[pair.first].is_nan() {
            decoded[pair.first] = result.pair.0;
        }
        if decoded[pair.second].is_nan() {
            decoded[pair.second] = result.pair.1;
        }
        results.push(result);
    }
    Ok(FrameOutcome { decoded, pairs: results, channel_uses: plan.channel_uses(), plan })
}
