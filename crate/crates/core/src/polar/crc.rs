use crate::config::CrcParams;

/// Bit-serial CRC over bit sequences of arbitrary length.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrcSpec {
    pub width: usize,
    pub params: CrcParams,
}

impl CrcSpec {
    pub fn new(width: usize, params: CrcParams) -> Self {
        assert!(width <= 32, "CRC width {width} > 32");
        CrcSpec { width, params }
    }

    /// The default 16-bit CCITT polynomial with zero init.
    pub fn ccitt16() -> Self {
        CrcSpec::new(16, CrcParams::default())
    }

    /// A zero-width check that accepts everything.
    pub fn none() -> Self {
        CrcSpec::new(0, CrcParams { poly: 0, ..CrcParams::default() })
    }

    fn mask(&self) -> u64 {
        (1u64 << self.width) - 1
    }

    /// CRC register of `bits` after final reflection and xor.
    pub fn checksum(&self, bits: &[u8]) -> u32 {
        if self.width == 0 {
            return 0;
        }
        let mask = self.mask();
        let top = 1u64 << (self.width - 1);
        let poly = self.params.poly as u64 & mask;
        let mut reg = self.params.init as u64 & mask;
        let mut feed = |b: u8| {
            let fb = ((reg & top) != 0) ^ (b & 1 == 1);
            reg = (reg << 1) & mask;
            if fb {
                reg ^= poly;
            }
        };
        if self.params.reflect_in {
            // Each byte enters LSB first; a trailing partial byte is reversed too.
            for chunk in bits.chunks(8) {
                chunk.iter().rev().for_each(|&b| feed(b));
            }
        } else {
            bits.iter().for_each(|&b| feed(b));
        }
        if self.params.reflect_out {
            reg = reverse_bits(reg, self.width);
        }
        ((reg ^ self.params.xor_out as u64) & mask) as u32
    }

    /// Check bits for `payload`, most significant first.
    pub fn check_bits(&self, payload: &[u8]) -> Vec<u8> {
        let c = self.checksum(payload);
        (0..self.width)
            .rev()
            .map(|s| ((c >> s) & 1) as u8)
            .collect()
    }
}

fn reverse_bits(v: u64, width: usize) -> u64 {
    (0..width).fold(0, |acc, i| acc | (((v >> i) & 1) << (width - 1 - i)))
}

/// Returns `payload ∥ crc(payload)`.
pub fn crc_attach(payload: &[u8], crc: &CrcSpec) -> Vec<u8> {
    let mut out = Vec::with_capacity(payload.len() + crc.width);
    out.extend_from_slice(payload);
    out.extend(crc.check_bits(payload));
    out
}

/// True iff the trailing `width` bits are the CRC of the leading ones.
pub fn crc_check(bits: &[u8], crc: &CrcSpec) -> bool {
    if bits.len() < crc.width {
        return false;
    }
    let (payload, tail) = bits.split_at(bits.len() - crc.width);
    crc.check_bits(payload) == tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
        bytes
            .iter()
            .flat_map(|b| (0..8).rev().map(move |s| (b >> s) & 1))
            .collect()
    }

    /// Textbook polynomial long division over GF(2) on the augmented message.
    fn long_division_crc(msg: &[u8], poly_with_top: u64, width: usize, init: u64) -> u64 {
        // Non-zero init is equivalent to xoring it into the first `width` bits.
        let mut m: Vec<u8> = msg.to_vec();
        for i in 0..width.min(m.len()) {
            m[i] ^= ((init >> (width - 1 - i)) & 1) as u8;
        }
        m.extend(std::iter::repeat(0).take(width));
        for i in 0..msg.len() {
            if m[i] == 1 {
                for j in 0..=width {
                    m[i + j] ^= ((poly_with_top >> (width - j)) & 1) as u8;
                }
            }
        }
        m[msg.len()..]
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    #[test]
    fn ccitt_false_reference_vector() {
        let bits = bytes_to_bits(b"123456789");
        let oracle = long_division_crc(&bits, 0x11021, 16, 0xFFFF);
        assert_eq!(oracle, 0x29B1);
        let spec = CrcSpec::new(
            16,
            CrcParams {
                init: 0xFFFF,
                ..CrcParams::default()
            },
        );
        assert_eq!(spec.checksum(&bits), 0x29B1);
    }

    #[test]
    fn reflected_reference_vector() {
        // CRC-16/ARC: poly 0x8005, reflected in and out.
        let spec = CrcSpec::new(
            16,
            CrcParams {
                poly: 0x8005,
                init: 0,
                reflect_in: true,
                reflect_out: true,
                xor_out: 0,
            },
        );
        assert_eq!(spec.checksum(&bytes_to_bits(b"123456789")), 0xBB3D);
    }

    #[test]
    fn matches_long_division_on_random_payloads() {
        let spec = CrcSpec::ccitt16();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for len in [1usize, 7, 16, 84, 88, 200] {
            let p: Vec<u8> = (0..len).map(|_| rng.gen_range(0..2)).collect();
            assert_eq!(
                spec.checksum(&p) as u64,
                long_division_crc(&p, 0x11021, 16, 0)
            );
        }
    }

    #[test]
    fn zero_payload_has_zero_crc() {
        let out = crc_attach(&[0; 84], &CrcSpec::ccitt16());
        assert_eq!(out.len(), 100);
        assert!(out.iter().all(|&b| b == 0));
    }

    #[test]
    fn round_trip_and_single_flips() {
        let spec = CrcSpec::ccitt16();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let p: Vec<u8> = (0..88).map(|_| rng.gen_range(0..2)).collect();
            let w = crc_attach(&p, &spec);
            assert!(crc_check(&w, &spec));
            for i in 0..w.len() {
                let mut f = w.clone();
                f[i] ^= 1;
                assert!(!crc_check(&f, &spec), "flip at {i} undetected");
            }
        }
    }

    #[test]
    fn zero_width_accepts_everything() {
        let spec = CrcSpec::none();
        assert!(crc_check(&[1, 0, 1], &spec));
        assert_eq!(crc_attach(&[1, 0], &spec), vec![1, 0]);
    }

    #[test]
    fn random_words_pass_with_probability_two_to_minus_sixteen() {
        let spec = CrcSpec::ccitt16();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let trials = 1_000_000;
        let passes = (0..trials)
            .filter(|_| {
                let w: Vec<u8> = (0..104).map(|_| rng.gen::<bool>() as u8).collect();
                crc_check(&w, &spec)
            })
            .count();
        // Expected 15.26; a ±4σ Poisson band.
        assert!((1..=31).contains(&passes), "{passes}");
    }
}
