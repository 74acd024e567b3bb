//! Link-level signal model and Monte-Carlo trials.

mod modulation;
mod sim;

pub use modulation::{modulate, ModulationScheme};
pub use sim::{
    link_count, run_trials, Fading, InterferenceModel, LinkConfig, MimoMode, PointStats,
    DEFAULT_PACKET_BITS,
};

use crate::beamformer::{left_pseudoinverse_of, NormalizationG};
use crate::channel::ChannelMatrix;
use crate::{CMatrix, Error, Result, C64, DEFAULT_RANK_TOLERANCE};
use serde::{Deserialize, Serialize};

/// Error counters; additive across trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TrialStats {
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub symbols_sent: u64,
    pub symbol_errors: u64,
    pub packets_sent: u64,
    pub packet_errors: u64,
    /// Packets lost to a numerical failure (counted in `packet_errors` too).
    pub erasures: u64,
}

impl std::ops::AddAssign for TrialStats {
    fn add_assign(&mut self, rhs: Self) {
        self.bits_sent += rhs.bits_sent;
        self.bit_errors += rhs.bit_errors;
        self.symbols_sent += rhs.symbols_sent;
        self.symbol_errors += rhs.symbol_errors;
        self.packets_sent += rhs.packets_sent;
        self.packet_errors += rhs.packet_errors;
        self.erasures += rhs.erasures;
    }
}

impl TrialStats {
    /// Count one decoded packet.
    pub fn record_packet(&mut self, sent: &[u8], decided: &[u8], bits_per_symbol: usize) {
        debug_assert_eq!(sent.len(), decided.len());
        let bit_errors = sent.iter().zip(decided).filter(|(a, b)| a != b).count() as u64;
        let symbol_errors = sent
            .chunks(bits_per_symbol)
            .zip(decided.chunks(bits_per_symbol))
            .filter(|(a, b)| a != b)
            .count() as u64;
        self.bits_sent += sent.len() as u64;
        self.bit_errors += bit_errors;
        self.symbols_sent += sent.len().div_ceil(bits_per_symbol) as u64;
        self.symbol_errors += symbol_errors;
        self.packets_sent += 1;
        self.packet_errors += (bit_errors > 0) as u64;
    }

    /// Count one packet that could not be detected.
    pub fn record_erasure(&mut self) {
        self.packets_sent += 1;
        self.packet_errors += 1;
        self.erasures += 1;
    }
}

/// How the normalization `G` scales the received signal.
///
/// `Power` divides amplitudes by `sqrt(G)`, so the participating beamformers
/// jointly radiate unit power. `Amplitude` divides by `G` itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainNormalization {
    #[default]
    Power,
    Amplitude,
}

impl GainNormalization {
    pub fn amplitude_scale(self, g: &NormalizationG) -> f64 {
        match self {
            GainNormalization::Power => 1.0 / g.value().sqrt(),
            GainNormalization::Amplitude => 1.0 / g.value(),
        }
    }
}

/// One transmitter's contribution at a receive point.
#[derive(Debug, Clone, Copy)]
pub struct Transmission<'a> {
    /// Channel from the transmitter to the point, path gain included.
    pub channel: &'a ChannelMatrix,
    pub beamformer: &'a CMatrix,
    /// `M x T` transmit block, one column per channel use.
    pub symbols: &'a CMatrix,
    pub power: f64,
}

/// `Y = Σ_I sqrt(P_I) S_I M_I X_I / norm(G) + N`.
pub fn received_signal(
    transmissions: &[Transmission<'_>],
    g: &NormalizationG,
    mode: GainNormalization,
    noise: &CMatrix,
) -> Result<CMatrix> {
    let scale = mode.amplitude_scale(g);
    let mut y = noise.clone();
    for t in transmissions {
        let s = t.channel.entries();
        if s.ncols() != t.beamformer.nrows()
            || t.beamformer.ncols() != t.symbols.nrows()
            || s.nrows() != y.nrows()
            || t.symbols.ncols() != y.ncols()
        {
            return Err(Error::DimensionMismatch(
                "transmission operands do not chain".into(),
            ));
        }
        y += (s * t.beamformer * t.symbols) * C64::new(t.power.sqrt() * scale, 0.0);
    }
    Ok(y)
}

/// Zero-forcing equalization with the left pseudoinverse of `h_eff`,
/// followed by minimum-distance slicing. Symbols are read column by column,
/// stream by stream.
pub fn detect(y: &CMatrix, h_eff: &CMatrix, scheme: ModulationScheme) -> Result<Vec<u8>> {
    if y.nrows() != h_eff.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "received block has {} rows, channel {}",
            y.nrows(),
            h_eff.nrows()
        )));
    }
    let equalizer = left_pseudoinverse_of(h_eff, DEFAULT_RANK_TOLERANCE)?;
    Ok(slice_block(&(equalizer * y), scheme))
}

pub(crate) fn slice_block(z: &CMatrix, scheme: ModulationScheme) -> Vec<u8> {
    let mut bits = Vec::with_capacity(z.len() * scheme.bits_per_symbol());
    // column-major storage is exactly the symbol order
    for v in z.iter() {
        scheme.slice_into(*v, &mut bits);
    }
    bits
}

/// Arrange a symbol sequence into an `M x T` transmit block.
///
/// Multiplexing fills `M` streams column by column; diversity repeats each
/// symbol on every antenna with amplitude `1/sqrt(M)`.
pub fn transmit_block(symbols: &[C64], dim: usize, mode: MimoMode) -> Result<CMatrix> {
    match mode {
        MimoMode::Multiplexing => {
            if !symbols.len().is_multiple_of(dim) {
                return Err(Error::DimensionMismatch(format!(
                    "{} symbols do not fill {dim} streams",
                    symbols.len()
                )));
            }
            Ok(CMatrix::from_column_slice(
                dim,
                symbols.len() / dim,
                symbols,
            ))
        }
        MimoMode::Diversity => {
            let a = 1.0 / (dim as f64).sqrt();
            Ok(CMatrix::from_fn(dim, symbols.len(), |_, t| symbols[t] * a))
        }
    }
}

/// Channel seen by the detector for a given layout: `H` itself for
/// multiplexing, `H * 1/sqrt(M)` (an `M x 1` column) for diversity.
pub fn detection_channel(h: &CMatrix, mode: MimoMode) -> CMatrix {
    match mode {
        MimoMode::Multiplexing => h.clone(),
        MimoMode::Diversity => {
            let a = C64::new(1.0 / (h.ncols() as f64).sqrt(), 0.0);
            let col: nalgebra::DVector<C64> = h.column_sum() * a;
            CMatrix::from_column_slice(h.nrows(), 1, col.as_slice())
        }
    }
}
