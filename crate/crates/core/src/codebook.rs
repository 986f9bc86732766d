//! Shared pilot codebook `A` and on-off transmission pattern matrix `P`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Distribution of the raw pilot entries before column normalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PilotDistribution {
    /// Real zero-mean unit-variance Gaussian; imaginary parts are zero.
    RealGaussian,
    /// Circularly-symmetric CN(0,1).
    ComplexGaussian,
}

/// `A^H a_c` for one codebook column, computed on first use.
struct GramColumn {
    re: Box<[f64]>,
    im: Option<Box<[f64]>>,
}

/// Non-orthogonal pilot matrix with `N` columns of length `n_p`, each of
/// Euclidean norm `sqrt(n_p P_p)`.
pub struct PilotCodebook {
    pilot_len: usize,
    num_pilots: usize,
    power: f64,
    // Column-major; `im` is absent for real pilots.
    re: Vec<f64>,
    im: Option<Vec<f64>>,
    gram: Vec<OnceLock<GramColumn>>,
}

impl std::fmt::Debug for PilotCodebook {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PilotCodebook")
            .field("pilot_len", &self.pilot_len)
            .field("num_pilots", &self.num_pilots)
            .field("power", &self.power)
            .field("complex", &self.im.is_some())
            .finish()
    }
}

impl PartialEq for PilotCodebook {
    fn eq(&self, other: &Self) -> bool {
        self.pilot_len == other.pilot_len
            && self.num_pilots == other.num_pilots
            && self.power == other.power
            && self.re == other.re
            && self.im == other.im
    }
}

/// Draws the pilot codebook. Deterministic in `seed`.
pub fn generate_pilot_codebook(
    seed: u64,
    pilot_len: usize,
    num_pilots: usize,
    pilot_power: f64,
    dist: PilotDistribution,
) -> Result<PilotCodebook> {
    if pilot_len == 0 || num_pilots == 0 {
        return Err(Error::contract("pilot codebook needs n_p ≥ 1 and N ≥ 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = pilot_len * num_pilots;
    let mut re: Vec<f64> = Vec::with_capacity(len);
    let mut im: Option<Vec<f64>> = match dist {
        PilotDistribution::RealGaussian => None,
        PilotDistribution::ComplexGaussian => Some(Vec::with_capacity(len)),
    };
    for _ in 0..len {
        match im.as_mut() {
            None => re.push(rng.sample(StandardNormal)),
            Some(im) => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                re.push(s * rng.sample::<f64, _>(StandardNormal));
                im.push(s * rng.sample::<f64, _>(StandardNormal));
            }
        }
    }
    let target = (pilot_len as f64 * pilot_power).sqrt();
    for c in 0..num_pilots {
        let cols = c * pilot_len..(c + 1) * pilot_len;
        let mut energy: f64 = re[cols.clone()].iter().map(|x| x * x).sum();
        if let Some(im) = &im {
            energy += im[cols.clone()].iter().map(|x| x * x).sum::<f64>();
        }
        let scale = if energy > 0.0 { target / energy.sqrt() } else { 0.0 };
        re[cols.clone()].iter_mut().for_each(|x| *x *= scale);
        if let Some(im) = im.as_mut() {
            im[cols].iter_mut().for_each(|x| *x *= scale);
        }
    }
    Ok(PilotCodebook::from_parts(pilot_len, num_pilots, pilot_power, re, im))
}

impl PilotCodebook {
    fn from_parts(
        pilot_len: usize,
        num_pilots: usize,
        power: f64,
        re: Vec<f64>,
        im: Option<Vec<f64>>,
    ) -> Self {
        PilotCodebook {
            pilot_len,
            num_pilots,
            power,
            re,
            im,
            gram: (0..num_pilots).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn pilot_len(&self) -> usize {
        self.pilot_len
    }

    pub fn num_pilots(&self) -> usize {
        self.num_pilots
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn is_complex(&self) -> bool {
        self.im.is_some()
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        let i = col * self.pilot_len + row;
        Complex64::new(self.re[i], self.im.as_ref().map_or(0.0, |im| im[i]))
    }

    pub fn column(&self, col: usize) -> DVector<Complex64> {
        DVector::from_fn(self.pilot_len, |row, _| self.entry(row, col))
    }

    pub fn column_norm(&self, col: usize) -> f64 {
        let r = &self.re[col * self.pilot_len..(col + 1) * self.pilot_len];
        let mut e: f64 = r.iter().map(|x| x * x).sum();
        if let Some(im) = &self.im {
            e += im[col * self.pilot_len..(col + 1) * self.pilot_len]
                .iter()
                .map(|x| x * x)
                .sum::<f64>();
        }
        e.sqrt()
    }

    /// Dense copy of the selected columns, `n_p × |cols|`.
    pub fn submatrix(&self, cols: &[usize]) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.pilot_len, cols.len(), |r, k| self.entry(r, cols[k]))
    }

    /// Correlates every codebook column with every column of `y`: `A^H y`.
    pub fn correlate(&self, y: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        assert_eq!(y.nrows(), self.pilot_len, "correlate: row mismatch");
        let mut out = DMatrix::zeros(self.num_pilots, y.ncols());
        let mut yr = vec![0.0; self.pilot_len];
        let mut yi = vec![0.0; self.pilot_len];
        for r in 0..y.ncols() {
            for (t, v) in y.column(r).iter().enumerate() {
                yr[t] = v.re;
                yi[t] = v.im;
            }
            for c in 0..self.num_pilots {
                out[(c, r)] = self.column_dot(c, &yr, &yi);
            }
        }
        out
    }

    /// `a_c^H y` for a vector given as split real/imaginary parts.
    fn column_dot(&self, c: usize, yr: &[f64], yi: &[f64]) -> Complex64 {
        let span = c * self.pilot_len..(c + 1) * self.pilot_len;
        let ar = &self.re[span.clone()];
        match &self.im {
            None => {
                let (s_r, s_i) = dot2(ar, yr, yi);
                Complex64::new(s_r, s_i)
            }
            Some(im) => {
                let ai = &im[span];
                let (rr, ri) = dot2(ar, yr, yi);
                let (ir, ii) = dot2(ai, yr, yi);
                // conj(a) y = (ar - j ai)(yr + j yi)
                Complex64::new(rr + ii, ri - ir)
            }
        }
    }

    /// Entry `k` of the Gram column `A^H a_c`, i.e. `a_k^H a_c`.
    ///
    /// Columns are computed once and cached; concurrent readers are fine.
    pub fn gram(&self, k: usize, c: usize) -> Complex64 {
        let g = self.gram_column(c);
        Complex64::new(g.re[k], g.im.as_ref().map_or(0.0, |im| im[k]))
    }

    fn gram_column(&self, c: usize) -> &GramColumn {
        self.gram[c].get_or_init(|| {
            let span = c * self.pilot_len..(c + 1) * self.pilot_len;
            let cr = &self.re[span.clone()];
            match &self.im {
                None => {
                    let re = (0..self.num_pilots)
                        .map(|k| {
                            dot1(&self.re[k * self.pilot_len..(k + 1) * self.pilot_len], cr)
                        })
                        .collect();
                    GramColumn { re, im: None }
                }
                Some(im) => {
                    let ci = &im[span];
                    let mut re = Vec::with_capacity(self.num_pilots);
                    let mut out_im = Vec::with_capacity(self.num_pilots);
                    for k in 0..self.num_pilots {
                        let z = self.column_dot(k, cr, ci);
                        re.push(z.re);
                        out_im.push(z.im);
                    }
                    GramColumn {
                        re: re.into_boxed_slice(),
                        im: Some(out_im.into_boxed_slice()),
                    }
                }
            }
        })
    }

    /// Adds `scale * (A^H a_c) * row` to every row of `target` (`N × M_r`).
    pub(crate) fn add_gram_outer(
        &self,
        target: &mut DMatrix<Complex64>,
        c: usize,
        row: &[Complex64],
        scale: f64,
    ) {
        let g = self.gram_column(c);
        for (r, &w) in row.iter().enumerate() {
            let w = w * scale;
            let mut col = target.column_mut(r);
            match &g.im {
                None => {
                    for (k, v) in col.iter_mut().enumerate() {
                        *v += w * g.re[k];
                    }
                }
                Some(gi) => {
                    for (k, v) in col.iter_mut().enumerate() {
                        *v += w * Complex64::new(g.re[k], gi[k]);
                    }
                }
            }
        }
    }
}

fn dot1(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    acc.iter().sum::<f64>() + tail
}

fn dot2(a: &[f64], yr: &[f64], yi: &[f64]) -> (f64, f64) {
    let mut ar = [0.0f64; 4];
    let mut ai = [0.0f64; 4];
    let n = a.len() / 4 * 4;
    for ((x, r), i) in a[..n]
        .chunks_exact(4)
        .zip(yr[..n].chunks_exact(4))
        .zip(yi[..n].chunks_exact(4))
    {
        for l in 0..4 {
            ar[l] += x[l] * r[l];
            ai[l] += x[l] * i[l];
        }
    }
    let mut sr: f64 = ar.iter().sum();
    let mut si: f64 = ai.iter().sum();
    for t in n..a.len() {
        sr += a[t] * yr[t];
        si += a[t] * yi[t];
    }
    (sr, si)
}

/// Binary on-off pattern matrix with `n_data_slots` rows and `N` columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternMatrix {
    data_slots: usize,
    num_cols: usize,
    ones_per_col: usize,
    // Sorted one-positions, column after column.
    active: Vec<u32>,
}

/// Draws each column's support as a uniform `n_d`-subset of the data slots,
/// independently per column, by a partial Fisher-Yates shuffle.
pub fn generate_pattern_matrix(
    seed: u64,
    data_slots: usize,
    num_cols: usize,
    ones_per_col: usize,
) -> Result<PatternMatrix> {
    if ones_per_col > data_slots {
        return Err(Error::contract(format!(
            "pattern needs n_d ≤ slots, got {ones_per_col} > {data_slots}"
        )));
    }
    if data_slots > u32::MAX as usize {
        return Err(Error::contract("too many data slots"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<u32> = (0..data_slots as u32).collect();
    let mut active = Vec::with_capacity(num_cols * ones_per_col);
    for _ in 0..num_cols {
        for t in 0..ones_per_col {
            let j = rng.gen_range(t..data_slots);
            perm.swap(t, j);
        }
        let start = active.len();
        active.extend_from_slice(&perm[..ones_per_col]);
        active[start..].sort_unstable();
    }
    Ok(PatternMatrix {
        data_slots,
        num_cols,
        ones_per_col,
        active,
    })
}

impl PatternMatrix {
    pub fn data_slots(&self) -> usize {
        self.data_slots
    }

    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    pub fn ones_per_col(&self) -> usize {
        self.ones_per_col
    }

    /// Strictly increasing one-positions of column `col`.
    pub fn active_indices(&self, col: usize) -> &[u32] {
        &self.active[col * self.ones_per_col..(col + 1) * self.ones_per_col]
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.active_indices(col)
            .binary_search(&(row as u32))
            .is_ok()
    }

    fn from_columns(data_slots: usize, cols: Vec<Vec<u32>>) -> std::result::Result<Self, String> {
        let ones = cols.first().map_or(0, Vec::len);
        let mut active = Vec::with_capacity(ones * cols.len());
        for (c, col) in cols.iter().enumerate() {
            if col.len() != ones {
                return Err(format!(
                    "column {c} has {} ones, expected {ones}",
                    col.len()
                ));
            }
            active.extend_from_slice(col);
        }
        Ok(PatternMatrix {
            data_slots,
            num_cols: cols.len(),
            ones_per_col: ones,
            active,
        })
    }
}

/// Big-endian: the first bit is the most significant.
pub fn bits_to_index(bits: &[u8], pilot_bits: usize) -> Result<usize> {
    if bits.len() != pilot_bits {
        return Err(Error::contract(format!(
            "pilot selector has {} bits, expected {pilot_bits}",
            bits.len()
        )));
    }
    if pilot_bits >= usize::BITS as usize {
        return Err(Error::contract("pilot selector too wide"));
    }
    Ok(bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize))
}

/// Inverse of [`bits_to_index`].
pub fn index_to_bits(index: usize, pilot_bits: usize) -> Vec<u8> {
    (0..pilot_bits)
        .rev()
        .map(|s| ((index >> s) & 1) as u8)
        .collect()
}

const DUMP_MAGIC: &[u8; 8] = b"CFURACB\0";
const DUMP_VERSION: u32 = 1;

/// Writes `A` and `P` for cross-implementation comparison.
///
/// Layout, all little-endian: magic `CFURACB\0`, then u32 version, flags
/// (bit 0 = complex pilots), `n_p`, `N`, `n_d`, data slots, then f64 `P_p`.
/// `A` follows row-major as f64 (interleaved re/im when complex), then `P`
/// row-major with each row packed LSB-first into `ceil(N/8)` bytes.
pub fn write_codebook_dump(
    path: &Path,
    pilots: &PilotCodebook,
    patterns: &PatternMatrix,
) -> Result<()> {
    if pilots.num_pilots != patterns.num_cols {
        return Err(Error::contract("pilot and pattern column counts differ"));
    }
    let ctx = || format!("writing {}", path.display());
    let file = File::create(path).map_err(|e| Error::io(ctx(), e))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes);
    let header = (|| -> std::io::Result<()> {
        put(DUMP_MAGIC)?;
        for v in [
            DUMP_VERSION,
            pilots.is_complex() as u32,
            pilots.pilot_len as u32,
            pilots.num_pilots as u32,
            patterns.ones_per_col as u32,
            patterns.data_slots as u32,
        ] {
            put(&v.to_le_bytes())?;
        }
        put(&pilots.power.to_le_bytes())?;
        for r in 0..pilots.pilot_len {
            for c in 0..pilots.num_pilots {
                let z = pilots.entry(r, c);
                put(&z.re.to_le_bytes())?;
                if pilots.is_complex() {
                    put(&z.im.to_le_bytes())?;
                }
            }
        }
        let row_bytes = patterns.num_cols.div_ceil(8);
        let mut rows = vec![0u8; row_bytes * patterns.data_slots];
        for c in 0..patterns.num_cols {
            for &r in patterns.active_indices(c) {
                rows[r as usize * row_bytes + c / 8] |= 1 << (c % 8);
            }
        }
        put(&rows)?;
        Ok(())
    })();
    header.map_err(|e| Error::io(ctx(), e))?;
    w.flush().map_err(|e| Error::io(ctx(), e))
}

/// Reads a dump written by [`write_codebook_dump`] and re-checks the column
/// norm and column weight invariants.
pub fn read_codebook_dump(path: &Path) -> Result<(PilotCodebook, PatternMatrix)> {
    let ctx = || format!("reading {}", path.display());
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    let file = File::open(path).map_err(|e| Error::io(ctx(), e))?;
    let mut r = BufReader::new(file);
    let mut buf = Vec::new();
    r.read_to_end(&mut buf).map_err(|e| Error::io(ctx(), e))?;

    let mut pos = 0usize;
    let mut take = |n: usize| -> std::result::Result<&[u8], String> {
        let s = buf
            .get(pos..pos + n)
            .ok_or_else(|| "unexpected end of file".to_string())?;
        pos += n;
        Ok(s)
    };
    if take(8).map_err(bad)? != DUMP_MAGIC {
        return Err(bad("bad magic".into()));
    }
    let mut u32s = [0u32; 6];
    for v in u32s.iter_mut() {
        *v = u32::from_le_bytes(take(4).map_err(bad)?.try_into().unwrap());
    }
    let [version, flags, n_p, n, n_d, slots] = u32s.map(|v| v as usize);
    if version != DUMP_VERSION as usize {
        return Err(bad(format!("unsupported version {version}")));
    }
    let power = f64::from_le_bytes(take(8).map_err(bad)?.try_into().unwrap());
    let complex = flags & 1 == 1;
    let mut re = vec![0.0; n_p * n];
    let mut im = complex.then(|| vec![0.0; n_p * n]);
    for row in 0..n_p {
        for c in 0..n {
            re[c * n_p + row] = f64::from_le_bytes(take(8).map_err(bad)?.try_into().unwrap());
            if let Some(im) = im.as_mut() {
                im[c * n_p + row] =
                    f64::from_le_bytes(take(8).map_err(bad)?.try_into().unwrap());
            }
        }
    }
    let row_bytes = n.div_ceil(8);
    let packed = take(row_bytes * slots).map_err(bad)?.to_vec();
    let mut cols = vec![Vec::with_capacity(n_d); n];
    for row in 0..slots {
        for (c, col) in cols.iter_mut().enumerate() {
            if packed[row * row_bytes + c / 8] >> (c % 8) & 1 == 1 {
                col.push(row as u32);
            }
        }
    }
    let patterns = PatternMatrix::from_columns(slots, cols).map_err(bad)?;
    if n > 0 && patterns.ones_per_col != n_d {
        return Err(bad(format!(
            "pattern weight {} does not match header n_d {n_d}",
            patterns.ones_per_col
        )));
    }
    let pilots = PilotCodebook::from_parts(n_p, n, power, re, im);
    let target = (n_p as f64 * power).sqrt();
    for c in 0..n {
        let norm = pilots.column_norm(c);
        if (norm - target).abs() > 1e-12 * target.max(f64::MIN_POSITIVE) {
            return Err(bad(format!("column {c} has norm {norm}, expected {target}")));
        }
    }
    Ok((pilots, patterns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn column_norms_match_power() {
        for dist in [PilotDistribution::RealGaussian, PilotDistribution::ComplexGaussian] {
            let a = generate_pilot_codebook(7, 37, 50, 0.01, dist).unwrap();
            let target = (37.0f64 * 0.01).sqrt();
            for c in 0..50 {
                assert!((a.column_norm(c) - target).abs() <= 1e-12 * target);
            }
        }
        let small = generate_pilot_codebook(1, 4, 2, 1.0, PilotDistribution::RealGaussian).unwrap();
        assert!((small.column_norm(0) - 2.0).abs() < 1e-12);
        assert!((small.column_norm(1) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn real_pilots_have_zero_imaginary_part() {
        let a = generate_pilot_codebook(3, 8, 4, 1.0, PilotDistribution::RealGaussian).unwrap();
        assert!(a.column(2).iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn codebooks_are_deterministic() {
        let a = generate_pilot_codebook(9, 16, 32, 1.0, PilotDistribution::RealGaussian).unwrap();
        let b = generate_pilot_codebook(9, 16, 32, 1.0, PilotDistribution::RealGaussian).unwrap();
        let c = generate_pilot_codebook(10, 16, 32, 1.0, PilotDistribution::RealGaussian).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let p = generate_pattern_matrix(9, 40, 32, 7).unwrap();
        assert_eq!(p, generate_pattern_matrix(9, 40, 32, 7).unwrap());
    }

    #[test]
    fn correlate_and_gram_match_dense_products() {
        for dist in [PilotDistribution::RealGaussian, PilotDistribution::ComplexGaussian] {
            let a = generate_pilot_codebook(5, 13, 9, 0.5, dist).unwrap();
            let dense = a.submatrix(&(0..9).collect::<Vec<_>>());
            let y = DMatrix::from_fn(13, 2, |r, c| {
                Complex64::new((r * 3 + c) as f64 * 0.1 - 0.4, (r as f64 - c as f64) * 0.05)
            });
            let want = dense.adjoint() * &y;
            let got = a.correlate(&y);
            assert!((want - got).norm() < 1e-12);
            let gram = dense.adjoint() * &dense;
            for k in 0..9 {
                for c in 0..9 {
                    assert!((a.gram(k, c) - gram[(k, c)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn full_support_pattern_is_all_ones() {
        let p = generate_pattern_matrix(1, 6, 5, 6).unwrap();
        for c in 0..5 {
            assert_eq!(p.active_indices(c), &[0, 1, 2, 3, 4, 5]);
        }
        assert!(generate_pattern_matrix(1, 3, 5, 4).is_err());
    }

    #[test]
    fn pattern_columns_have_fixed_weight() {
        let p = generate_pattern_matrix(2, 2048, 64, 512).unwrap();
        for c in 0..64 {
            let idx = p.active_indices(c);
            assert_eq!(idx.len(), 512);
            assert!(idx.windows(2).all(|w| w[0] < w[1]));
            assert_eq!((0..2048).filter(|&r| p.get(r, c)).count(), 512);
        }
    }

    #[test]
    fn pattern_occupancy_is_uniform() {
        // Each slot is occupied with probability n_d / slots = 2/8.
        let p = generate_pattern_matrix(11, 8, 10_000, 2).unwrap();
        for slot in 0..8 {
            let freq = (0..10_000).filter(|&c| p.get(slot, c)).count() as f64 / 1e4;
            assert!((freq - 0.25).abs() < 0.02, "slot {slot}: {freq}");
        }
    }

    #[test]
    fn bits_to_index_examples() {
        assert_eq!(bits_to_index(&[0; 12], 12).unwrap(), 0);
        let mut one = vec![0; 12];
        one[11] = 1;
        assert_eq!(bits_to_index(&one, 12).unwrap(), 1);
        assert_eq!(bits_to_index(&[1, 0, 1], 3).unwrap(), 5);
        assert!(matches!(bits_to_index(&[1, 0], 3), Err(Error::Contract(_))));
    }

    #[test]
    fn bits_to_index_is_a_bijection() {
        for width in [1usize, 5, 12, 16] {
            for idx in 0..(1usize << width) {
                assert_eq!(bits_to_index(&index_to_bits(idx, width), width).unwrap(), idx);
            }
        }
    }

    #[test]
    fn truncated_dump_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cb.bin");
        let a = generate_pilot_codebook(1, 4, 3, 1.0, PilotDistribution::RealGaussian).unwrap();
        let p = generate_pattern_matrix(1, 5, 3, 2).unwrap();
        write_codebook_dump(&path, &a, &p).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(read_codebook_dump(&path), Err(Error::Format { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn dump_round_trip_keeps_invariants(
            seed in any::<u64>(), n_p in 1usize..12, n in 1usize..20,
            slots in 1usize..20, complex in any::<bool>(), power in 1e-4f64..10.0,
        ) {
            let dist = if complex { PilotDistribution::ComplexGaussian } else { PilotDistribution::RealGaussian };
            let a = generate_pilot_codebook(seed, n_p, n, power, dist).unwrap();
            let p = generate_pattern_matrix(seed, slots, n, slots / 2).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("dump.bin");
            write_codebook_dump(&path, &a, &p).unwrap();
            let (a2, p2) = read_codebook_dump(&path).unwrap();
            prop_assert!(a == a2);
            prop_assert_eq!(&p, &p2);
            let target = (n_p as f64 * power).sqrt();
            for c in 0..n {
                prop_assert!((a2.column_norm(c) - target).abs() <= 1e-12 * target);
            }
        }
    }
}
