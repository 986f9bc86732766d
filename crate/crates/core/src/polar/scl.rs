//! Successive-cancellation list decoding with min-sum LLR updates.
//!
//! Each path owns one LLR array and one partial-sum array per tree depth.
//! Arrays are reference counted and copied on first write, so forking a
//! path only clones pointers; large shallow arrays are rarely duplicated.

use std::rc::Rc;

use super::{crc_check, CrcSpec, PolarCodeSpec};

#[derive(Clone)]
struct Path {
    metric: f64,
    llr: Vec<Rc<Vec<f64>>>,
    bits: Vec<Rc<Vec<u8>>>,
    info: Vec<u8>,
}

#[inline]
fn min_sum(a: f64, b: f64) -> f64 {
    let m = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -m
    } else {
        m
    }
}

/// Cost of deciding `bit` against a leaf LLR (positive favours 0).
#[inline]
fn penalty(llr: f64, bit: u8) -> f64 {
    let hard = (llr < 0.0) as u8;
    if hard == bit {
        0.0
    } else {
        llr.abs()
    }
}

/// Preferred decision at an information leaf. An exact erasure gets a fixed
/// pseudo-random bit per leaf so that all-erasure input does not collapse
/// onto the all-zero word, which always satisfies a zero-init CRC.
#[inline]
fn preferred_bit(llr: f64, index: usize) -> u8 {
    if llr > 0.0 {
        0
    } else if llr < 0.0 {
        1
    } else {
        ((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 63) as u8
    }
}

struct Decoder<'a> {
    spec: &'a PolarCodeSpec,
    depth: usize,
    list_size: usize,
    paths: Vec<Path>,
}

impl Decoder<'_> {
    fn node(&mut self, d: usize, offset: usize) {
        if d == self.depth {
            self.leaf(offset);
            return;
        }
        let half = (self.spec.code_len() >> d) / 2;
        for p in &mut self.paths {
            let parent = Rc::clone(&p.llr[d]);
            let child = Rc::make_mut(&mut p.llr[d + 1]);
            for j in 0..half {
                child[j] = min_sum(parent[j], parent[j + half]);
            }
        }
        self.node(d + 1, offset);
        for p in &mut self.paths {
            let left = Rc::clone(&p.bits[d + 1]);
            let acc = Rc::make_mut(&mut p.bits[d]);
            acc[..half].copy_from_slice(&left[..half]);
            let parent = Rc::clone(&p.llr[d]);
            let child = Rc::make_mut(&mut p.llr[d + 1]);
            for j in 0..half {
                child[j] = if acc[j] == 0 {
                    parent[j + half] + parent[j]
                } else {
                    parent[j + half] - parent[j]
                };
            }
        }
        self.node(d + 1, offset + half);
        for p in &mut self.paths {
            let right = Rc::clone(&p.bits[d + 1]);
            let acc = Rc::make_mut(&mut p.bits[d]);
            for j in 0..half {
                acc[j] ^= right[j];
                acc[j + half] = right[j];
            }
        }
    }

    fn leaf(&mut self, index: usize) {
        let m = self.depth;
        if self.spec.is_frozen(index) {
            for p in &mut self.paths {
                let llr = p.llr[m][0];
                p.metric += penalty(llr, 0);
                Rc::make_mut(&mut p.bits[m])[0] = 0;
            }
            return;
        }
        // (metric, path, rank, bit); ties go to the earlier path, then to
        // its preferred decision.
        let mut cand: Vec<(f64, usize, u8, u8)> = Vec::with_capacity(2 * self.paths.len());
        for (i, p) in self.paths.iter().enumerate() {
            let llr = p.llr[m][0];
            let best = preferred_bit(llr, index);
            cand.push((p.metric + penalty(llr, best), i, 0, best));
            cand.push((p.metric + penalty(llr, best ^ 1), i, 1, best ^ 1));
        }
        if cand.len() > self.list_size {
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            cand.truncate(self.list_size);
            cand.sort_by(|a, b| a.1.cmp(&b.1).then(a.2.cmp(&b.2)));
        }
        let old = std::mem::take(&mut self.paths);
        let mut next = Vec::with_capacity(cand.len());
        for (metric, i, _, bit) in cand {
            let mut p = old[i].clone();
            p.metric = metric;
            Rc::make_mut(&mut p.bits[m])[0] = bit;
            p.info.push(bit);
            next.push(p);
        }
        self.paths = next;
    }
}

/// Decodes channel LLRs (positive favours bit 0) with a list of
/// `list_size` paths. Returns the information bits without the CRC of the
/// best-metric path that passes `crc`, or `None` if no path does.
pub fn scl_decode(
    llrs: &[f64],
    spec: &PolarCodeSpec,
    crc: &CrcSpec,
    list_size: usize,
) -> Option<Vec<u8>> {
    let n = spec.code_len();
    assert_eq!(llrs.len(), n, "scl_decode: expected {n} LLRs");
    assert!(list_size >= 1, "list size must be positive");
    if spec.k() < crc.width {
        return None;
    }
    let depth = n.trailing_zeros() as usize;
    let root = Path {
        metric: 0.0,
        llr: (0..=depth)
            .map(|d| {
                if d == 0 {
                    Rc::new(llrs.to_vec())
                } else {
                    Rc::new(vec![0.0; n >> d])
                }
            })
            .collect(),
        bits: (0..=depth).map(|d| Rc::new(vec![0u8; n >> d])).collect(),
        info: Vec::with_capacity(spec.k()),
    };
    let mut dec = Decoder {
        spec,
        depth,
        list_size,
        paths: vec![root],
    };
    dec.node(0, 0);

    let mut order: Vec<usize> = (0..dec.paths.len()).collect();
    order.sort_by(|&a, &b| dec.paths[a].metric.total_cmp(&dec.paths[b].metric).then(a.cmp(&b)));
    order.into_iter().find_map(|i| {
        let info = &dec.paths[i].info;
        crc_check(info, crc).then(|| info[..info.len() - crc.width].to_vec())
    })
}

#[cfg(test)]
mod tests {
    use super::super::{construct_info_set, crc_attach, polar_encode};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn bpsk(code: &[u8], amp: f64) -> Vec<f64> {
        code.iter().map(|&b| if b == 0 { amp } else { -amp }).collect()
    }

    #[test]
    fn noiseless_zero_codeword() {
        let spec = construct_info_set(1024, 104).unwrap();
        let out = scl_decode(&vec![1e6; 1024], &spec, &CrcSpec::ccitt16(), 8).unwrap();
        assert_eq!(out, vec![0; 88]);
    }

    #[test]
    fn noiseless_round_trip_any_list_size() {
        let crc = CrcSpec::ccitt16();
        let spec = construct_info_set(256, 60).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for list in [1usize, 2, 4, 8, 32] {
            for _ in 0..10 {
                let p: Vec<u8> = (0..44).map(|_| rng.gen_range(0..2)).collect();
                let cw = polar_encode(&crc_attach(&p, &crc), &spec).unwrap();
                assert_eq!(scl_decode(&bpsk(&cw, 3.0), &spec, &crc, list), Some(p));
            }
        }
    }

    #[test]
    fn positive_scaling_does_not_change_the_output() {
        let crc = CrcSpec::ccitt16();
        let spec = construct_info_set(128, 40).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..30 {
            let p: Vec<u8> = (0..24).map(|_| rng.gen_range(0..2)).collect();
            let cw = polar_encode(&crc_attach(&p, &crc), &spec).unwrap();
            let llr: Vec<f64> = bpsk(&cw, 1.0)
                .into_iter()
                .map(|x| 2.0 * (x + 0.9 * rng.sample::<f64, _>(StandardNormal)))
                .collect();
            let base = scl_decode(&llr, &spec, &crc, 8);
            for lambda in [0.25, 3.7e-3, 1.0 / 3.0, 1e4] {
                let scaled: Vec<f64> = llr.iter().map(|x| x * lambda).collect();
                assert_eq!(scl_decode(&scaled, &spec, &crc, 8), base);
            }
        }
    }

    #[test]
    fn corrects_noise_at_moderate_snr() {
        let crc = CrcSpec::ccitt16();
        let spec = construct_info_set(1024, 104).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mut ok = 0;
        for _ in 0..20 {
            let p: Vec<u8> = (0..88).map(|_| rng.gen_range(0..2)).collect();
            let cw = polar_encode(&crc_attach(&p, &crc), &spec).unwrap();
            // Es/N0 of about -3 dB per real dimension.
            let llr: Vec<f64> = bpsk(&cw, 1.0)
                .into_iter()
                .map(|x| x + 1.4 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            if scl_decode(&llr, &spec, &crc, 8) == Some(p) {
                ok += 1;
            }
        }
        assert!(ok >= 19, "{ok}/20");
    }

    #[test]
    fn failing_crc_returns_none() {
        let crc = CrcSpec::ccitt16();
        let spec = construct_info_set(64, 30).unwrap();
        // Pure erasures: every path is equally likely and almost none passes.
        let mut hits = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..50 {
            let llr: Vec<f64> = (0..64).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            hits += scl_decode(&llr, &spec, &crc, 1).is_some() as usize;
        }
        assert!(hits <= 2);
        let spec = construct_info_set(1024, 104).unwrap();
        assert_eq!(scl_decode(&[0.0; 1024], &spec, &crc, 8), None);
        assert_eq!(scl_decode(&[0.0; 64], &construct_info_set(64, 10).unwrap(), &crc, 4), None);
    }
}
