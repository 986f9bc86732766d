//! Access-point receiver: OMP pilot detection with LMMSE deflation and
//! channel estimation, LMMSE symbol estimation, and SIC.
//!
//! OMP works entirely in the correlation domain. With `C = A^H Y_p` and the
//! Gram columns `A^H a_s`, the residual correlation after deflating support
//! `S` is `C - (A^H A_S) X_S`, where `X_S = (A_S^H A_S + reg I)^{-1} C[S,:]`.
//! The same identity lets SIC update `C` without touching the codebook again.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::codebook::{PatternMatrix, PilotCodebook};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Detected pilots of one OMP run and their channel estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct OmpOutput {
    /// Pilot indices in detection order.
    pub detected: Vec<usize>,
    /// `|detected| × M_r`; row `u` estimates the channel of `detected[u]`.
    pub g_hat: DMatrix<Complex64>,
}

/// Runs `K_m` OMP iterations on the pilot part `y_p` (`n_p × M_r`).
pub fn omp_detect(
    y_p: &DMatrix<Complex64>,
    pilots: &PilotCodebook,
    k_m: usize,
    reg: f64,
) -> Result<OmpOutput> {
    if y_p.nrows() != pilots.pilot_len() {
        return Err(Error::contract("pilot part has the wrong number of rows"));
    }
    omp_from_correlation(&pilots.correlate(y_p), pilots, k_m, reg, None)
}

/// OMP given the correlation `A^H Y_p` (`N × M_r`). Indices flagged in
/// `excluded` are never selected.
pub fn omp_from_correlation(
    corr: &DMatrix<Complex64>,
    pilots: &PilotCodebook,
    k_m: usize,
    reg: f64,
    excluded: Option<&[bool]>,
) -> Result<OmpOutput> {
    if !(reg > 0.0) {
        return Err(Error::contract("OMP regularizer must be positive"));
    }
    let n = pilots.num_pilots();
    if corr.nrows() != n {
        return Err(Error::contract("correlation has the wrong number of rows"));
    }
    let m_r = corr.ncols();
    let mut taken = vec![false; n];
    if let Some(ex) = excluded {
        for (t, &e) in taken.iter_mut().zip(ex) {
            *t = e;
        }
    }
    let mut support: Vec<usize> = Vec::with_capacity(k_m);
    let mut x = DMatrix::<Complex64>::zeros(0, m_r);
    let mut resid = corr.clone();
    for _ in 0..k_m {
        let mut best: Option<(usize, f64)> = None;
        for c in 0..n {
            if taken[c] {
                continue;
            }
            let metric: f64 = resid.row(c).iter().map(|z| z.norm_sqr()).sum();
            if best.map_or(true, |(_, b)| metric > b) {
                best = Some((c, metric));
            }
        }
        let Some((pick, _)) = best else { break };
        taken[pick] = true;
        support.push(pick);
        x = support_solve(corr, pilots, &support, reg)?;
        resid.copy_from(corr);
        for (u, &s) in support.iter().enumerate() {
            let row: Vec<Complex64> = x.row(u).iter().copied().collect();
            pilots.add_gram_outer(&mut resid, s, &row, -1.0);
        }
    }
    Ok(OmpOutput {
        detected: support,
        g_hat: x,
    })
}

/// `(A_S^H A_S + reg I)^{-1} C[S,:]`.
fn support_solve(
    corr: &DMatrix<Complex64>,
    pilots: &PilotCodebook,
    support: &[usize],
    reg: f64,
) -> Result<DMatrix<Complex64>> {
    let k = support.len();
    let gram = DMatrix::from_fn(k, k, |i, j| {
        let g = pilots.gram(support[i], support[j]);
        if i == j {
            g + reg
        } else {
            g
        }
    });
    let rhs = DMatrix::from_fn(k, corr.ncols(), |i, r| corr[(support[i], r)]);
    let chol = gram.cholesky().ok_or_else(|| {
        Error::Internal(format!("support Gram matrix not positive definite (|S| = {k})"))
    })?;
    Ok(chol.solve(&rhs))
}

/// LMMSE symbol estimates of the detected users.
///
/// `W = (Ĝ^H Ĝ + σ²/P_d I_{M_r})^{-1} Ĝ^H` and `Ĉ' = Y_d W`; column `u` of
/// the result holds the rows of `Ĉ'[:,u]` at user `u`'s pattern positions.
pub fn lmmse_symbols(
    y_d: &DMatrix<Complex64>,
    g_hat: &DMatrix<Complex64>,
    noise_power: f64,
    data_power: f64,
    patterns: &[&[u32]],
) -> Result<DMatrix<Complex64>> {
    let k = g_hat.nrows();
    let m_r = g_hat.ncols();
    if patterns.len() != k {
        return Err(Error::contract("one pattern per detected user is required"));
    }
    if y_d.ncols() != m_r {
        return Err(Error::contract("data part and channel estimate disagree on M_r"));
    }
    let n_d = patterns.first().map_or(0, |p| p.len());
    if patterns.iter().any(|p| p.len() != n_d) {
        return Err(Error::contract("patterns of unequal weight"));
    }
    if patterns
        .iter()
        .flat_map(|p| p.iter())
        .any(|&t| t as usize >= y_d.nrows())
    {
        return Err(Error::contract("pattern position outside the data part"));
    }
    let w = lmmse_matrix(g_hat, noise_power / data_power)?;
    let mut c_hat = DMatrix::zeros(n_d, k);
    for (u, pat) in patterns.iter().enumerate() {
        for (t, &slot) in pat.iter().enumerate() {
            let mut acc = ZERO;
            for r in 0..m_r {
                acc += y_d[(slot as usize, r)] * w[(r, u)];
            }
            c_hat[(t, u)] = acc;
        }
    }
    Ok(c_hat)
}

/// `(Ĝ^H Ĝ + ρ I)^{-1} Ĝ^H`, `M_r × K`. Zero when `ρ` is infinite.
fn lmmse_matrix(g_hat: &DMatrix<Complex64>, rho: f64) -> Result<DMatrix<Complex64>> {
    let m_r = g_hat.ncols();
    let gh = g_hat.adjoint();
    if !rho.is_finite() {
        return Ok(DMatrix::zeros(m_r, g_hat.nrows()));
    }
    if !(rho > 0.0) {
        return Err(Error::contract("LMMSE needs positive noise power"));
    }
    let mut gram = &gh * g_hat;
    for i in 0..m_r {
        gram[(i, i)] += rho;
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Internal("LMMSE Gram matrix not positive definite".into()))?;
    Ok(chol.solve(&gh))
}

/// A decoded user's rebuilt frame together with its pilot index.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub pilot_index: usize,
    pub signal: Vec<Complex64>,
}

/// Subtracts `x̂ ĝ` from `y` (`n × M_r`) for every reconstruction whose pilot
/// this AP detected, using the AP's own channel estimate.
pub fn sic_subtract(
    y: &mut DMatrix<Complex64>,
    decoded: &[Reconstruction],
    g_hat: &DMatrix<Complex64>,
    detected: &[usize],
) -> Result<()> {
    for rec in decoded {
        let Some(u) = detected.iter().position(|&p| p == rec.pilot_index) else {
            continue;
        };
        if rec.signal.len() != y.nrows() {
            return Err(Error::contract("reconstructed frame length mismatch"));
        }
        for r in 0..y.ncols() {
            let g = g_hat[(u, r)];
            let mut col = y.column_mut(r);
            for (t, &x) in rec.signal.iter().enumerate() {
                if x != ZERO {
                    col[t] -= x * g;
                }
            }
        }
    }
    Ok(())
}

/// Receiver state of one AP across decoding iterations.
#[derive(Clone, Debug)]
pub struct ApState {
    /// `n × M_r` residual received signal.
    pub y_resid: DMatrix<Complex64>,
    pub detected: Vec<usize>,
    pub g_hat: DMatrix<Complex64>,
    /// `n_d × |detected|` symbol estimates, columns in detection order.
    pub c_hat: DMatrix<Complex64>,
    /// `A^H` times the pilot part of `y_resid`.
    corr: DMatrix<Complex64>,
}

impl ApState {
    pub fn new(y: DMatrix<Complex64>, pilots: &PilotCodebook) -> Result<Self> {
        let n_p = pilots.pilot_len();
        if y.nrows() < n_p {
            return Err(Error::contract("received frame shorter than the pilot"));
        }
        let corr = pilots.correlate(&y.rows(0, n_p).into_owned());
        let m_r = y.ncols();
        Ok(ApState {
            y_resid: y,
            detected: Vec::new(),
            g_hat: DMatrix::zeros(0, m_r),
            c_hat: DMatrix::zeros(0, 0),
            corr,
        })
    }

    pub fn antennas(&self) -> usize {
        self.y_resid.ncols()
    }

    /// OMP on the current residual, skipping `excluded` pilots.
    pub fn detect(
        &mut self,
        pilots: &PilotCodebook,
        k_m: usize,
        reg: f64,
        excluded: Option<&[bool]>,
    ) -> Result<()> {
        let out = omp_from_correlation(&self.corr, pilots, k_m, reg, excluded)?;
        self.detected = out.detected;
        self.g_hat = out.g_hat;
        Ok(())
    }

    /// LMMSE symbol estimation for the currently detected users.
    pub fn estimate_symbols(
        &mut self,
        pilot_len: usize,
        noise_power: f64,
        data_power: f64,
        patterns: &PatternMatrix,
    ) -> Result<()> {
        let pats: Vec<&[u32]> = self
            .detected
            .iter()
            .map(|&p| patterns.active_indices(p))
            .collect();
        let rows = self.y_resid.nrows() - pilot_len;
        let y_d = self.y_resid.rows(pilot_len, rows).into_owned();
        self.c_hat = lmmse_symbols(&y_d, &self.g_hat, noise_power, data_power, &pats)?;
        Ok(())
    }

    /// Applies SIC for the users decoded in this iteration and keeps the
    /// cached pilot correlation in step with the residual.
    pub fn cancel(&mut self, decoded: &[Reconstruction], pilots: &PilotCodebook) -> Result<()> {
        sic_subtract(&mut self.y_resid, decoded, &self.g_hat, &self.detected)?;
        for rec in decoded {
            if let Some(u) = self.detected.iter().position(|&p| p == rec.pilot_index) {
                let row: Vec<Complex64> = self.g_hat.row(u).iter().copied().collect();
                pilots.add_gram_outer(&mut self.corr, rec.pilot_index, &row, -1.0);
            }
        }
        Ok(())
    }

    /// Pilot correlation of the residual, `N × M_r`.
    pub fn correlation(&self) -> &DMatrix<Complex64> {
        &self.corr
    }
}
