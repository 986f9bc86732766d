#![allow(dead_code)]

//! Independent reference computations used by the integration tests.
//! None of these call into the library's numerical kernels.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C = Complex64;

pub fn cn<R: Rng>(rng: &mut R, var: f64) -> C {
    let s = (var / 2.0).sqrt();
    C::new(s * rng.sample::<f64, _>(StandardNormal), s * rng.sample::<f64, _>(StandardNormal))
}

/// Dense row-major complex matrix.
#[derive(Clone, Debug)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub v: Vec<C>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Dense { rows, cols, v: vec![C::new(0.0, 0.0); rows * cols] }
    }

    pub fn at(&self, r: usize, c: usize) -> C {
        self.v[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, x: C) {
        self.v[r * self.cols + c] = x;
    }

    pub fn mul(&self, o: &Dense) -> Dense {
        assert_eq!(self.cols, o.rows);
        let mut out = Dense::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for j in 0..o.cols {
                let mut s = C::new(0.0, 0.0);
                for k in 0..self.cols {
                    s += self.at(i, k) * o.at(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Dense {
        let mut out = Dense::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.at(i, j).conj());
            }
        }
        out
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Dense {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Dense::zeros(n, n);
        for i in 0..n {
            inv.set(i, i, C::new(1.0, 0.0));
        }
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| a.at(x, col).norm().partial_cmp(&a.at(y, col).norm()).unwrap())
                .unwrap();
            for j in 0..n {
                a.v.swap(col * n + j, piv * n + j);
                inv.v.swap(col * n + j, piv * n + j);
            }
            let d = a.at(col, col);
            assert!(d.norm() > 1e-300, "singular");
            for j in 0..n {
                a.set(col, j, a.at(col, j) / d);
                inv.set(col, j, inv.at(col, j) / d);
            }
            for r in 0..n {
                if r != col {
                    let f = a.at(r, col);
                    if f != C::new(0.0, 0.0) {
                        for j in 0..n {
                            a.set(r, j, a.at(r, j) - f * a.at(col, j));
                            inv.set(r, j, inv.at(r, j) - f * inv.at(col, j));
                        }
                    }
                }
            }
        }
        inv
    }
}

/// Codeword of `u` under `F^{⊗m}` built as an explicit Kronecker product.
pub fn kron_encode(u: &[u8]) -> Vec<u8> {
    let n = u.len();
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
    (0..n)
        .map(|j| (0..n).fold(0u8, |acc, i| acc ^ (u[i] & g[i][j])))
        .collect()
}

/// ML decision by enumeration: the information word whose codeword
/// maximizes `Σ (1 - 2c_i) llr_i`. `None` when the optimum is tied.
pub fn brute_force_ml(llrs: &[f64], info_set: &[usize]) -> Option<Vec<u8>> {
    let n = llrs.len();
    let k = info_set.len();
    let mut best: Option<(f64, Vec<u8>)> = None;
    let mut tied = false;
    for w in 0..(1u32 << k) {
        let info: Vec<u8> = (0..k).map(|b| ((w >> (k - 1 - b)) & 1) as u8).collect();
        let mut u = vec![0u8; n];
        for (&i, &b) in info_set.iter().zip(&info) {
            u[i] = b;
        }
        let c = kron_encode(&u);
        let score: f64 = c.iter().zip(llrs).map(|(&b, &l)| if b == 0 { l } else { -l }).sum();
        match &best {
            Some((s, _)) if (score - s).abs() <= 1e-12 * s.abs().max(1.0) => tied = true,
            Some((s, _)) if score < *s => {}
            _ => {
                best = Some((score, info));
                tied = false;
            }
        }
    }
    if tied {
        None
    } else {
        best.map(|b| b.1)
    }
}

/// Real Gauss-Jordan inverse, row-major `k × k`.
pub fn real_inverse(m: &[f64], k: usize) -> Vec<f64> {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; k * k];
    for i in 0..k {
        inv[i * k + i] = 1.0;
    }
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&x, &y| a[x * k + col].abs().partial_cmp(&a[y * k + col].abs()).unwrap())
            .unwrap();
        for j in 0..k {
            a.swap(col * k + j, piv * k + j);
            inv.swap(col * k + j, piv * k + j);
        }
        let d = a[col * k + col];
        for j in 0..k {
            a[col * k + j] /= d;
            inv[col * k + j] /= d;
        }
        for r in 0..k {
            if r != col {
                let f = a[r * k + col];
                for j in 0..k {
                    a[r * k + j] -= f * a[col * k + j];
                    inv[r * k + j] -= f * inv[col * k + j];
                }
            }
        }
    }
    inv
}

/// Support of size `k` with the smallest least-squares residual, by
/// enumeration. `a` is `n_p × N` real (row-major rows), `y` one complex
/// column. Maximizing the explained energy `bᴴ G_S⁻¹ b` is equivalent.
pub fn exhaustive_support(a: &[Vec<f64>], y: &[C], k: usize) -> Vec<usize> {
    let n_p = a.len();
    let n = a[0].len();
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (0..n_p).map(|t| a[t][i] * a[t][j]).sum()).collect())
        .collect();
    let corr: Vec<C> = (0..n)
        .map(|i| (0..n_p).map(|t| y[t] * a[t][i]).sum())
        .collect();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut s: Vec<usize> = (0..k).collect();
    let mut g = vec![0.0; k * k];
    loop {
        for x in 0..k {
            for z in 0..k {
                g[x * k + z] = gram[s[x]][s[z]];
            }
        }
        let gi = real_inverse(&g, k);
        let mut e = 0.0;
        for x in 0..k {
            for z in 0..k {
                e += (corr[s[x]].conj() * corr[s[z]]).re * gi[x * k + z];
            }
        }
        if e > best.0 {
            best = (e, s.clone());
        }
        let mut i = k;
        loop {
            if i == 0 {
                return best.1;
            }
            i -= 1;
            if s[i] < n - k + i {
                s[i] += 1;
                for j in i + 1..k {
                    s[j] = s[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Reference for the LMMSE stage: `W = (ĜᴴĜ + ρI)^{-1} Ĝᴴ`, `Ĉ' = Y_d W`,
/// then column `u` sampled at its pattern.
pub fn lmmse_oracle(y_d: &Dense, g_hat: &Dense, rho: f64, patterns: &[Vec<u32>]) -> Dense {
    let gh = g_hat.adjoint();
    let mut gram = gh.mul(g_hat);
    for i in 0..gram.rows {
        let d = gram.at(i, i) + rho;
        gram.set(i, i, d);
    }
    let w = gram.inverse().mul(&gh);
    let c_full = y_d.mul(&w);
    let n_d = patterns.first().map_or(0, Vec::len);
    let mut out = Dense::zeros(n_d, patterns.len());
    for (u, p) in patterns.iter().enumerate() {
        for (t, &slot) in p.iter().enumerate() {
            out.set(t, u, c_full.at(slot as usize, u));
        }
    }
    out
}
