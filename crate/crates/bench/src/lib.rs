//! Fixed inputs for the decoder benchmarks.

use dissolve::model::{draw_channel, stream_rng};
use dissolve::scheme::{transmit_pair, Pair, ReceivedPair, SymbolBlock};
use dissolve::{ChannelRealization, NoiseModel, PamConstellation};

pub struct PairFixture {
    pub alphabet: PamConstellation,
    pub channel: ChannelRealization,
    pub received: ReceivedPair,
    pub p: f64,
    pub sigma2: f64,
}

/// One noisy pair observation for a `k`-symbol block on a `2·q_s`-PAM at
/// 20 dB.
pub fn pair_fixture(k: usize, q_s: u32, seed: u64) -> PairFixture {
    let p = 100.0;
    let sigma2 = 1.0;
    let mut rng = stream_rng(seed, 0);
    let alphabet = PamConstellation::with_power(p, q_s).expect("valid alphabet");
    let channel = draw_channel(k, 2, &mut rng).expect("valid channel");
    let block = SymbolBlock::draw(k, &alphabet, &mut rng).expect("valid block");
    let noise = NoiseModel::new(sigma2).expect("positive variance");
    let received = transmit_pair(&block, &channel, Pair::new(0, 1), &noise, &mut rng).expect("valid pair");
    PairFixture { alphabet, channel, received, p, sigma2 }
}

/// `n` random blocks with their channels.
pub fn block_fixtures(n: usize, k: usize, q_s: u32, seed: u64) -> Vec<(SymbolBlock, ChannelRealization)> {
    let alphabet = PamConstellation::with_power(100.0, q_s).expect("valid alphabet");
    let mut rng = stream_rng(seed, 1);
    (0..n)
        .map(|_| {
            let ch = draw_channel(k, 2, &mut rng).expect("valid channel");
            (SymbolBlock::draw(k, &alphabet, &mut rng).expect("valid block"), ch)
        })
        .collect()
}
