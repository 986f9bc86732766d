//! Per-user transmit chain: pilot selection, CRC + polar encoding, QPSK and
//! on-off placement into the data part of the frame.

use num_complex::Complex64;

use crate::codebook::{bits_to_index, PatternMatrix, PilotCodebook};
use crate::config::Message;
use crate::error::{Error, Result};
use crate::modem::{qpsk_modulate, SymbolVector};
use crate::polar::{crc_attach, polar_encode, CrcSpec, PolarCodeSpec};

/// Everything a user needs to build its frame; shared by all users.
#[derive(Debug)]
pub struct Transmitter<'a> {
    pub pilots: &'a PilotCodebook,
    pub patterns: &'a PatternMatrix,
    pub polar: &'a PolarCodeSpec,
    pub crc: &'a CrcSpec,
    pub data_power: f64,
    pub pilot_bits: usize,
}

/// One active user's transmission.
#[derive(Clone, Debug, PartialEq)]
pub struct UserFrame {
    pub message: Message,
    pub pilot_index: usize,
    /// Data-part positions occupied by the codeword, increasing.
    pub pattern: Vec<u32>,
    pub codeword_symbols: SymbolVector,
    /// Length-`n` signal: pilot, then the sparse data part.
    pub signal: Vec<Complex64>,
}

impl UserFrame {
    pub fn energy(&self) -> f64 {
        self.signal.iter().map(|z| z.norm_sqr()).sum()
    }
}

impl Transmitter<'_> {
    pub fn frame_len(&self) -> usize {
        self.pilots.pilot_len() + self.patterns.data_slots()
    }

    pub fn message_bits(&self) -> usize {
        self.pilot_bits + self.polar.k() - self.crc.width
    }

    /// Encodes the payload bits into QPSK symbols.
    pub fn codeword_symbols(&self, payload: &[u8]) -> Result<SymbolVector> {
        let codeword = polar_encode(&crc_attach(payload, self.crc), self.polar)?;
        qpsk_modulate(&codeword, self.data_power)
    }

    /// Builds the transmitted frame of `message`.
    pub fn encode_user(&self, message: &Message) -> Result<UserFrame> {
        if message.bits.len() != self.message_bits() {
            return Err(Error::contract(format!(
                "message has {} bits, expected {}",
                message.bits.len(),
                self.message_bits()
            )));
        }
        let (head, payload) = message.bits.split_at(self.pilot_bits);
        let pilot_index = bits_to_index(head, self.pilot_bits)?;
        let symbols = self.codeword_symbols(payload)?;
        let signal = self.frame(pilot_index, &symbols.values)?;
        Ok(UserFrame {
            message: message.clone(),
            pilot_index,
            pattern: self.patterns.active_indices(pilot_index).to_vec(),
            codeword_symbols: symbols,
            signal,
        })
    }

    /// Pilot column followed by `symbols` placed on the pattern of
    /// `pilot_index` in increasing slot order.
    pub fn frame(&self, pilot_index: usize, symbols: &[Complex64]) -> Result<Vec<Complex64>> {
        let pattern = self.patterns.active_indices(pilot_index);
        if symbols.len() != pattern.len() {
            return Err(Error::contract(format!(
                "{} symbols for a pattern of weight {}",
                symbols.len(),
                pattern.len()
            )));
        }
        let n_p = self.pilots.pilot_len();
        let mut signal = vec![Complex64::new(0.0, 0.0); self.frame_len()];
        for (t, s) in signal[..n_p].iter_mut().enumerate() {
            *s = self.pilots.entry(t, pilot_index);
        }
        for (&slot, &c) in pattern.iter().zip(symbols) {
            signal[n_p + slot as usize] = c;
        }
        Ok(signal)
    }
}
