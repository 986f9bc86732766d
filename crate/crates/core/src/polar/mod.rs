//! CRC-concatenated polar code: 5G reliability-sequence construction,
//! natural-order encoder and CRC-aided successive-cancellation list decoder.

mod crc;
mod scl;

use std::sync::OnceLock;

pub use crc::{crc_attach, crc_check, CrcSpec};
pub use scl::scl_decode;

use crate::config::MAX_CODE_LEN;
use crate::error::{Error, Result};

/// Version tag of the bundled reliability table.
pub const RELIABILITY_TABLE_VERSION: &str = "38.212-v1";

const RELIABILITY_TABLE: &str = include_str!("../../data/nr_polar_reliability_v1.txt");

/// The 3GPP TS 38.212 universal polar reliability sequence, least reliable
/// bit-channel first.
pub fn reliability_sequence() -> &'static [u16] {
    static SEQ: OnceLock<Vec<u16>> = OnceLock::new();
    SEQ.get_or_init(|| {
        let seq: Vec<u16> = RELIABILITY_TABLE
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse().expect("reliability table entry"))
            .collect();
        assert_eq!(seq.len(), MAX_CODE_LEN, "reliability table length");
        seq
    })
}

/// A polar code of length `n_c` with its information bit-channels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolarCodeSpec {
    code_len: usize,
    info_set: Vec<usize>,
    frozen: Vec<bool>,
}

impl PolarCodeSpec {
    pub fn code_len(&self) -> usize {
        self.code_len
    }

    /// Number of information bits, CRC included.
    pub fn k(&self) -> usize {
        self.info_set.len()
    }

    /// Sorted information bit-channel indices.
    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    /// Builds a code from an explicit information set.
    pub fn from_info_set(code_len: usize, mut info_set: Vec<usize>) -> Result<Self> {
        if !code_len.is_power_of_two() {
            return Err(Error::contract(format!("n_c = {code_len} is not a power of two")));
        }
        info_set.sort_unstable();
        info_set.dedup();
        if info_set.last().is_some_and(|&i| i >= code_len) {
            return Err(Error::contract("information index out of range"));
        }
        let mut frozen = vec![true; code_len];
        for &i in &info_set {
            frozen[i] = false;
        }
        Ok(PolarCodeSpec {
            code_len,
            info_set,
            frozen,
        })
    }
}

/// Picks the `k` most reliable bit-channels below `n_c` from the 5G table.
pub fn construct_info_set(code_len: usize, k: usize) -> Result<PolarCodeSpec> {
    if !code_len.is_power_of_two() || code_len > MAX_CODE_LEN {
        return Err(Error::contract(format!(
            "n_c = {code_len} must be a power of two ≤ {MAX_CODE_LEN}"
        )));
    }
    if k > code_len {
        return Err(Error::contract(format!("k = {k} exceeds n_c = {code_len}")));
    }
    let usable: Vec<usize> = reliability_sequence()
        .iter()
        .map(|&q| q as usize)
        .filter(|&q| q < code_len)
        .collect();
    PolarCodeSpec::from_info_set(code_len, usable[code_len - k..].to_vec())
}

/// Encodes `k` information bits: places them on the information set and
/// applies the `n_c × n_c` transform `F^{⊗m}`, `F = [1 0; 1 1]`.
pub fn polar_encode(info_bits: &[u8], spec: &PolarCodeSpec) -> Result<Vec<u8>> {
    if info_bits.len() != spec.k() {
        return Err(Error::contract(format!(
            "polar encoder got {} bits, expected {}",
            info_bits.len(),
            spec.k()
        )));
    }
    let mut x = vec![0u8; spec.code_len];
    for (&i, &b) in spec.info_set.iter().zip(info_bits) {
        x[i] = b & 1;
    }
    transform_in_place(&mut x);
    Ok(x)
}

/// `x ← x F^{⊗m}`; the transform is its own inverse over GF(2).
pub(crate) fn transform_in_place(x: &mut [u8]) {
    let n = x.len();
    let mut h = 1;
    while h < n {
        for block in x.chunks_exact_mut(2 * h) {
            let (l, r) = block.split_at_mut(h);
            for (a, b) in l.iter_mut().zip(r.iter()) {
                *a ^= *b;
            }
        }
        h *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn table_is_a_permutation() {
        let mut seq: Vec<u16> = reliability_sequence().to_vec();
        assert_eq!(&seq[..8], &[0, 1, 2, 4, 8, 16, 32, 3]);
        assert_eq!(*seq.last().unwrap(), 1023);
        seq.sort_unstable();
        assert!(seq.iter().enumerate().all(|(i, &q)| i == q as usize));
    }

    #[test]
    fn construction_edge_cases() {
        let all = construct_info_set(16, 16).unwrap();
        assert_eq!(all.info_set(), (0..16).collect::<Vec<_>>().as_slice());
        assert!(construct_info_set(16, 0).unwrap().info_set().is_empty());
        assert!(matches!(construct_info_set(8, 9), Err(Error::Contract(_))));
        assert_eq!(construct_info_set(8, 4).unwrap().info_set(), &[3, 5, 6, 7]);
    }

    #[test]
    fn kernel_row() {
        let spec = PolarCodeSpec::from_info_set(2, vec![1]).unwrap();
        assert_eq!(polar_encode(&[1], &spec).unwrap(), vec![1, 1]);
        let spec = construct_info_set(1024, 104).unwrap();
        assert!(polar_encode(&[0; 104], &spec).unwrap().iter().all(|&b| b == 0));
    }

    /// Generator matrix built by explicit Kronecker powers.
    fn kronecker_generator(n: usize) -> Vec<Vec<u8>> {
        let mut g = vec![vec![1u8]];
        while g.len() < n {
            let s = g.len();
            let mut next = vec![vec![0u8; 2 * s]; 2 * s];
            for i in 0..s {
                for j in 0..s {
                    next[i][j] = g[i][j];
                    next[s + i][j] = g[i][j];
                    next[s + i][s + j] = g[i][j];
                }
            }
            g = next;
        }
        g
    }

    #[test]
    fn encoder_matches_generator_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [2usize, 8, 32] {
            let g = kronecker_generator(n);
            let spec = construct_info_set(n, n / 2).unwrap();
            let info: Vec<u8> = (0..n / 2).map(|_| rng.gen_range(0..2)).collect();
            let mut u = vec![0u8; n];
            for (&i, &b) in spec.info_set().iter().zip(&info) {
                u[i] = b;
            }
            let want: Vec<u8> = (0..n)
                .map(|j| (0..n).fold(0, |acc, i| acc ^ (u[i] & g[i][j])))
                .collect();
            assert_eq!(polar_encode(&info, &spec).unwrap(), want);
        }
    }

    #[test]
    fn encoder_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (n, k) in [(8usize, 4usize), (64, 20), (1024, 104)] {
            let spec = construct_info_set(n, k).unwrap();
            for _ in 0..20 {
                let a: Vec<u8> = (0..k).map(|_| rng.gen_range(0..2)).collect();
                let b: Vec<u8> = (0..k).map(|_| rng.gen_range(0..2)).collect();
                let ab: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
                let ea = polar_encode(&a, &spec).unwrap();
                let eb = polar_encode(&b, &spec).unwrap();
                let sum: Vec<u8> = ea.iter().zip(&eb).map(|(x, y)| x ^ y).collect();
                assert_eq!(polar_encode(&ab, &spec).unwrap(), sum);
            }
        }
    }

    #[test]
    fn wrong_length_is_a_contract_error() {
        let spec = construct_info_set(8, 4).unwrap();
        assert!(polar_encode(&[1, 0], &spec).is_err());
    }
}
