//! Interference dissolution over a real-valued MISO channel: `K` symbols in
//! `⌈K/2⌉ + 1` channel uses, decoded pairwise without knowledge of the
//! interference.

pub mod analysis;
pub mod baselines;
pub mod error;
pub mod harness;
pub mod model;
pub mod multicast;
pub mod scheme;

pub use error::{Error, Result};
pub use harness::{ExperimentConfig, ExperimentKind, SweepRow};
pub use model::{ChannelRealization, GainMapping, NoiseModel, PamConstellation, PowerBudget, SimRng};
pub use multicast::MulticastFrame;
pub use scheme::{DecodeResult, DecoderKind, FramePlan, Pair, SymbolBlock};
