//! Cell-free propagation: point placement, correlated shadowing, path loss,
//! spatially correlated Rayleigh fading and the AWGN channel.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{derive_seed, CorrelationModel};
use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Shadowing variance in dB², and decorrelation distance in meters.
pub const SHADOW_VARIANCE_DB2: f64 = 16.0;
pub const SHADOW_DECORRELATION_M: f64 = 9.0;

/// Path-loss floor distance used by the simulator, meters.
pub const MIN_DISTANCE_M: f64 = 1.0;

/// Positions of APs and active users with their pairwise distances.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    pub ap_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
    /// `K_a × M` user-to-AP distances.
    pub dist: DMatrix<f64>,
    /// `K_a × K_a` inter-user distances.
    pub user_dist: DMatrix<f64>,
}

fn euclid(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Topology {
    pub fn new(ap_positions: Vec<Point>, user_positions: Vec<Point>) -> Self {
        let k = user_positions.len();
        let m = ap_positions.len();
        let dist = DMatrix::from_fn(k, m, |i, j| euclid(user_positions[i], ap_positions[j]));
        let user_dist = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                0.0
            } else {
                euclid(user_positions[i], user_positions[j])
            }
        });
        Topology {
            ap_positions,
            user_positions,
            dist,
            user_dist,
        }
    }

    pub fn num_users(&self) -> usize {
        self.user_positions.len()
    }

    pub fn num_aps(&self) -> usize {
        self.ap_positions.len()
    }

    /// User-to-AP distances clamped from below.
    pub fn floored_distances(&self, min: f64) -> DMatrix<f64> {
        self.dist.map(|d| d.max(min))
    }

    /// Azimuth of user `i` seen from AP `m`, measured from the broadside of
    /// an x-aligned ULA, radians.
    pub fn arrival_angle(&self, i: usize, m: usize) -> f64 {
        let u = self.user_positions[i];
        let a = self.ap_positions[m];
        (u[0] - a[0]).atan2(u[1] - a[1])
    }
}

/// Binomial point process: `count` i.i.d. uniform points on `[0, D]²`.
pub fn place_points(seed: u64, count: usize, side: f64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| [rng.gen::<f64>() * side, rng.gen::<f64>() * side])
        .collect()
}

/// `16 · 2^(-d/9)` for every user pair.
pub fn shadow_covariance(user_dist: &DMatrix<f64>) -> DMatrix<f64> {
    user_dist.map(|d| SHADOW_VARIANCE_DB2 * (-d / SHADOW_DECORRELATION_M).exp2())
}

/// Real square-root factor `L` with `L Lᵀ = C`. Falls back to a clipped
/// eigen-decomposition when Cholesky fails (e.g. co-located users).
pub(crate) fn covariance_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = cov.clone().cholesky() {
        return Ok(ch.l());
    }
    let eig = cov.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    if !min.is_finite() || min < -1e-8 * scale {
        return Err(Error::Internal(format!(
            "shadow covariance is not PSD: smallest eigenvalue {min:e}, largest {scale:e}"
        )));
    }
    let sqrt = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&sqrt) * eig.eigenvectors.transpose())
}

/// Shadow fading in dB, `K_a × M`. Columns are independent; within a
/// column the covariance is [`shadow_covariance`].
pub fn shadow_fading(seed: u64, topology: &Topology) -> Result<DMatrix<f64>> {
    let k = topology.num_users();
    let m = topology.num_aps();
    if k == 0 {
        return Ok(DMatrix::zeros(0, m));
    }
    let factor = covariance_factor(&shadow_covariance(&topology.user_dist))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = DMatrix::from_fn(k, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(factor * z)
}

/// Large-scale gain `β = 10^((-30.5 - 36.7 log10 d + F)/10)`, linear.
pub fn large_scale(distances: &DMatrix<f64>, shadow_db: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if distances.shape() != shadow_db.shape() {
        return Err(Error::contract("distance and shadowing shapes differ"));
    }
    if distances.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::contract(
            "path loss needs strictly positive distances; apply a floor first",
        ));
    }
    Ok(distances.zip_map(shadow_db, |d, f| {
        db_to_linear(-30.5 - 36.7 * d.log10() + f)
    }))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Gaussian local-scattering correlation of a half-wavelength ULA:
/// `R[l,k] = exp(jπ(l-k)sin φ) · exp(-(σ²/2)(π(l-k)cos φ)²)`.
pub fn spatial_correlation(angle_rad: f64, asd_deg: f64, antennas: usize) -> DMatrix<Complex64> {
    let asd = asd_deg.to_radians();
    let (s, c) = angle_rad.sin_cos();
    DMatrix::from_fn(antennas, antennas, |l, k| {
        let dist = l as f64 - k as f64;
        let phase = Complex64::from_polar(1.0, PI * dist * s);
        let spread = (-(asd * asd / 2.0) * (PI * dist * c).powi(2)).exp();
        phase * spread
    })
}

/// Hermitian square root with negative eigenvalues clipped to zero.
pub fn hermitian_sqrt(r: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    if r.nrows() == 1 {
        return r.map(|z| Complex64::new(z.re.max(0.0).sqrt(), 0.0));
    }
    let eig = r.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

pub(crate) fn complex_normal<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    Complex64::new(
        s * rng.sample::<f64, _>(StandardNormal),
        s * rng.sample::<f64, _>(StandardNormal),
    )
}

/// `h = R^{1/2} w` with `w ~ CN(0, I)`, given the square root of `R`.
pub fn draw_correlated<R: Rng>(rng: &mut R, sqrt_r: &DMatrix<Complex64>) -> DVector<Complex64> {
    let w = DVector::from_fn(sqrt_r.ncols(), |_, _| complex_normal(rng, 1.0));
    sqrt_r * w
}

/// One small-scale fading vector with covariance `R`.
pub fn draw_small_scale(seed: u64, r: &DMatrix<Complex64>) -> DVector<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_correlated(&mut rng, &hermitian_sqrt(r))
}

/// Quasi-static channel of one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    /// `K_a × M` large-scale gains, linear.
    pub beta: DMatrix<f64>,
    /// Per AP, `K_a × M_r` small-scale fading (row `i` is `h_{i,m}`).
    pub h: Vec<DMatrix<Complex64>>,
    /// Per AP, `K_a × M_r` channel (row `i` is `g_{i,m} = sqrt(β) h_{i,m}`).
    pub g: Vec<DMatrix<Complex64>>,
}

impl ChannelRealization {
    pub fn from_parts(beta: DMatrix<f64>, h: Vec<DMatrix<Complex64>>) -> Self {
        let g = h
            .iter()
            .enumerate()
            .map(|(m, hm)| {
                DMatrix::from_fn(hm.nrows(), hm.ncols(), |i, r| hm[(i, r)] * beta[(i, m)].sqrt())
            })
            .collect();
        ChannelRealization { beta, h, g }
    }
}

/// Draws small-scale fading for every (user, AP) pair and combines it with
/// the large-scale gains.
pub fn draw_realization(
    seed: u64,
    topology: &Topology,
    beta: DMatrix<f64>,
    antennas: usize,
    model: CorrelationModel,
    asd_deg: f64,
) -> ChannelRealization {
    let k = topology.num_users();
    let h = (0..topology.num_aps())
        .map(|m| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "small_scale", m as u64));
            let mut hm = DMatrix::zeros(k, antennas);
            for i in 0..k {
                let v = match model {
                    CorrelationModel::Identity => {
                        DVector::from_fn(antennas, |_, _| complex_normal(&mut rng, 1.0))
                    }
                    CorrelationModel::GaussianLocalScattering => {
                        let r = spatial_correlation(topology.arrival_angle(i, m), asd_deg, antennas);
                        draw_correlated(&mut rng, &hermitian_sqrt(&r))
                    }
                };
                hm.row_mut(i).copy_from(&v.transpose());
            }
            hm
        })
        .collect();
    ChannelRealization::from_parts(beta, h)
}

/// `Y_m = Σ_i x_i g_{i,m} + Z_m` for every AP, with `Z` i.i.d. `CN(0, σ²)`.
pub fn apply_channel(
    seed: u64,
    frames: &[Vec<Complex64>],
    channels: &[DMatrix<Complex64>],
    frame_len: usize,
    noise_power: f64,
) -> Result<Vec<DMatrix<Complex64>>> {
    if frames.iter().any(|x| x.len() != frame_len) {
        return Err(Error::contract("frame length mismatch"));
    }
    if channels.iter().any(|g| g.nrows() != frames.len()) {
        return Err(Error::contract("channel rows must match the number of frames"));
    }
    let support: Vec<Vec<usize>> = frames
        .iter()
        .map(|x| (0..frame_len).filter(|&t| x[t] != Complex64::new(0.0, 0.0)).collect())
        .collect();
    let out = channels
        .iter()
        .enumerate()
        .map(|(m, g)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "noise", m as u64));
            let mut y = DMatrix::from_fn(frame_len, g.ncols(), |_, _| {
                if noise_power > 0.0 {
                    complex_normal(&mut rng, noise_power)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            for (i, x) in frames.iter().enumerate() {
                for r in 0..g.ncols() {
                    let gi = g[(i, r)];
                    let mut col = y.column_mut(r);
                    for &t in &support[i] {
                        col[t] += x[t] * gi;
                    }
                }
            }
            y
        })
        .collect();
    Ok(out)
}

/// Writes one row per (user, AP) pair: positions, distance and `β` in dB.
pub fn write_environment_csv(path: &Path, topology: &Topology, beta: &DMatrix<f64>) -> Result<()> {
    let ctx = || format!("writing {}", path.display());
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(ctx(), e))?);
    let mut body = String::from("user,ap,user_x_m,user_y_m,ap_x_m,ap_y_m,distance_m,beta_db\n");
    for i in 0..topology.num_users() {
        for m in 0..topology.num_aps() {
            let u = topology.user_positions[i];
            let a = topology.ap_positions[m];
            body.push_str(&format!(
                "{i},{m},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                u[0],
                u[1],
                a[0],
                a[1],
                topology.dist[(i, m)],
                10.0 * beta[(i, m)].log10()
            ));
        }
    }
    f.write_all(body.as_bytes()).map_err(|e| Error::io(ctx(), e))?;
    f.flush().map_err(|e| Error::io(ctx(), e))
}
