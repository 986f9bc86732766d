//! Gray-mapped QPSK and its LLR demapper.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// QPSK symbols of power `P_d`, each in `sqrt(P_d/2)(±1 ± j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolVector {
    pub values: Vec<Complex64>,
    pub power: f64,
}

impl SymbolVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Maps bit pairs `(b_2t, b_2t+1)` to `sqrt(P_d/2)((1-2b_2t) + j(1-2b_2t+1))`.
pub fn qpsk_modulate(bits: &[u8], power: f64) -> Result<SymbolVector> {
    if bits.len() % 2 != 0 {
        return Err(Error::contract(format!(
            "QPSK needs an even number of bits, got {}",
            bits.len()
        )));
    }
    let amp = (power / 2.0).sqrt();
    let level = |b: u8| if b & 1 == 0 { amp } else { -amp };
    let values = bits
        .chunks_exact(2)
        .map(|p| Complex64::new(level(p[0]), level(p[1])))
        .collect();
    Ok(SymbolVector { values, power })
}

/// Bit LLRs (positive favours 0): `2√2·Re(c)/s` and `2√2·Im(c)/s`.
pub fn qpsk_llr(estimates: &[Complex64], noise_scale: f64) -> Vec<f64> {
    assert!(noise_scale > 0.0, "noise scale must be positive");
    let k = 2.0 * std::f64::consts::SQRT_2 / noise_scale;
    let mut out = Vec::with_capacity(2 * estimates.len());
    for c in estimates {
        out.push(k * c.re);
        out.push(k * c.im);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mapping_convention() {
        let s = qpsk_modulate(&[0, 0, 1, 1, 0, 1, 1, 0], 2.0).unwrap();
        assert_eq!(
            s.values,
            vec![
                Complex64::new(1.0, 1.0),
                Complex64::new(-1.0, -1.0),
                Complex64::new(1.0, -1.0),
                Complex64::new(-1.0, 1.0)
            ]
        );
        assert!(qpsk_modulate(&[0, 1, 1], 1.0).is_err());
    }

    #[test]
    fn all_zero_codeword_at_ten_milliwatts() {
        let s = qpsk_modulate(&[0; 1024], 0.01).unwrap();
        assert_eq!(s.len(), 512);
        let a = 0.005f64.sqrt();
        assert!(s.values.iter().all(|&z| z == Complex64::new(a, a)));
        let mean_energy: f64 = s.values.iter().map(|z| z.norm_sqr()).sum::<f64>() / 512.0;
        assert!((mean_energy - 0.01).abs() < 1e-15);
    }

    #[test]
    fn llr_signs_and_erasures() {
        let l = qpsk_llr(&[Complex64::new(1.0, 1.0)], 0.3);
        assert!(l.iter().all(|&x| x > 0.0));
        assert_eq!(qpsk_llr(&[Complex64::new(0.0, 0.0)], 1.0), vec![0.0, 0.0]);
    }

    #[test]
    fn hard_decisions_invert_the_mapping() {
        for pair in [[0u8, 0], [0, 1], [1, 0], [1, 1]] {
            let s = qpsk_modulate(&pair, 0.7).unwrap();
            let hard: Vec<u8> = qpsk_llr(&s.values, 1.0)
                .iter()
                .map(|&x| (x < 0.0) as u8)
                .collect();
            assert_eq!(hard, pair);
        }
    }
}
