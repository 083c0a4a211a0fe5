//! Fractional-OAM dimensionality witness.
//!
//! The channel is probed with the states `U_n(phi, theta)` (sums of `n`
//! rotated fractional masks of charge `n/2`), whose OAM support sits on
//! multiples of `n`. Projecting the output onto `U_n(phi, 0)` yields a
//! fringe `P_n(theta)` whose visibility depends on the channel's diagonal
//! weights and on the isotropic-noise fraction; a least-squares fit of the
//! visibilities against the flat-channel model recovers the purity `p` and
//! dimensionality `K`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::modes::masks::probe_mask_coeffs;
use crate::{C64, Error, Result};

/// Azimuthal decomposition window `|l| <= ELL_WINDOW` shared by the coherent
/// and identity terms (consistent truncation).
pub const ELL_WINDOW: i32 = 64;

/// Diagonal channel `T = sum_l lambda_l |l><l|` with amplitude weights
/// normalized to `sum lambda^2 = 1`.
#[derive(Debug, Clone)]
pub struct DiagonalChannel {
    lambdas: BTreeMap<i32, f64>,
}

impl DiagonalChannel {
    pub fn new(lambdas: BTreeMap<i32, f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::Degenerate("empty channel support".into()));
        }
        if lambdas.values().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidConfig("Schmidt weights must be non-negative".into()));
        }
        let n2: f64 = lambdas.values().map(|v| v * v).sum();
        if n2 <= 0.0 {
            return Err(Error::Degenerate("all-zero channel weights".into()));
        }
        let s = 1.0 / n2.sqrt();
        Ok(DiagonalChannel {
            lambdas: lambdas.into_iter().map(|(l, v)| (l, v * s)).collect(),
        })
    }

    /// Flat channel over `d` modes, filled outward from `l = 0` with the
    /// positive value first: 0, +1, -1, +2, -2, ...
    pub fn flat(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        let mut map = BTreeMap::new();
        map.insert(0, 1.0);
        let mut k = 1;
        while map.len() < d {
            map.insert(k, 1.0);
            if map.len() < d {
                map.insert(-k, 1.0);
            }
            k += 1;
        }
        DiagonalChannel::new(map)
    }

    /// Amplitudes from a measured/simulated crosstalk diagonal: square
    /// roots of the intensities, renormalized.
    pub fn from_crosstalk_diagonal(ells: &[i32], intensities: &[f64]) -> Result<Self> {
        if ells.len() != intensities.len() {
            return Err(Error::InvalidConfig("label/intensity length mismatch".into()));
        }
        if intensities.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidConfig("negative intensity".into()));
        }
        let map: BTreeMap<i32, f64> = ells
            .iter()
            .zip(intensities)
            .map(|(&l, &p)| (l, p.sqrt()))
            .collect();
        DiagonalChannel::new(map)
    }

    pub fn lambda(&self, ell: i32) -> f64 {
        self.lambdas.get(&ell).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.lambdas.iter().map(|(&l, &v)| (l, v))
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }
}

/// Probe-state OAM amplitudes over the decomposition window, unit-normalized
/// within it.
fn probe_coeffs(n_index: u32, theta: f64) -> Result<Vec<C64>> {
    if n_index == 0 || n_index % 2 == 0 {
        return Err(Error::InvalidMode(format!(
            "probe index must be odd and positive, got {n_index}"
        )));
    }
    let mut c = probe_mask_coeffs(n_index, theta, -ELL_WINDOW, ELL_WINDOW);
    let n2: f64 = c.iter().map(|v| v.norm_sqr()).sum();
    let s = 1.0 / n2.sqrt();
    for v in &mut c {
        *v *= s;
    }
    Ok(c)
}

fn window_index(ell: i32) -> Option<usize> {
    if ell.abs() > ELL_WINDOW {
        None
    } else {
        Some((ell + ELL_WINDOW) as usize)
    }
}

/// Coherent overlap and truncated-identity factors for one analyzer setting.
fn probe_parts(chan: &DiagonalChannel, c0: &[C64], ct: &[C64]) -> (f64, f64) {
    let mut coh = C64::new(0.0, 0.0);
    let mut n0 = 0.0;
    let mut nt = 0.0;
    for (ell, lam) in chan.support() {
        if let Some(i) = window_index(ell) {
            coh += c0[i].conj() * ct[i] * lam;
            n0 += c0[i].norm_sqr();
            nt += ct[i].norm_sqr();
        }
    }
    (coh.norm_sqr(), n0 * nt)
}

/// Detection probability of the probe through the isotropic-noise channel:
/// `P_n(theta) = p |<0,M| T |M,theta>|^2 + (1 - p)/d^2 I_n(theta)` with the
/// identity term evaluated over the same truncated support as the coherent
/// one.
pub fn probe_probability(
    chan: &DiagonalChannel,
    n_index: u32,
    theta: f64,
    p_noise: f64,
    d: usize,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_noise) {
        return Err(Error::InvalidConfig("purity must lie in [0, 1]".into()));
    }
    if d < 2 {
        return Err(Error::InvalidConfig("dimension must be >= 2".into()));
    }
    let c0 = probe_coeffs(n_index, 0.0)?;
    let ct = probe_coeffs(n_index, theta)?;
    let (coh, iden) = probe_parts(chan, &c0, &ct);
    Ok(p_noise * coh + (1.0 - p_noise) / (d * d) as f64 * iden)
}

/// Visibilities `V_n = |P_n(0) - P_n(pi/n)| / |P_n(0) + P_n(pi/n)|`.
pub fn probe_visibilities(
    chan: &DiagonalChannel,
    n_list: &[u32],
    p_noise: f64,
    d: usize,
) -> Result<Vec<f64>> {
    n_list
        .iter()
        .map(|&n| {
            let p0 = probe_probability(chan, n, 0.0, p_noise, d)?;
            let p1 = probe_probability(chan, n, std::f64::consts::PI / n as f64, p_noise, d)?;
            let denom = (p0 + p1).abs();
            if denom <= 0.0 {
                return Err(Error::Degenerate("zero probe probability".into()));
            }
            Ok((p0 - p1).abs() / denom)
        })
        .collect()
}

/// Result of the purity/dimension least-squares fit.
#[derive(Debug, Clone)]
pub struct ProbeFit {
    pub n_list: Vec<u32>,
    pub visibilities: Vec<f64>,
    pub p_hat: f64,
    pub k_hat: f64,
    pub residual: f64,
    /// Set when the data carry no fringe information (all visibilities at
    /// the pure-noise level): the dimension is then unconstrained.
    pub indeterminate: bool,
}

/// Flat-channel forward parts per `(K, n)`, reused across the fit grid.
struct ModelParts {
    /// indexed `[k - 1][n_idx]` -> (coh0, iden0, coh1, iden1)
    parts: Vec<Vec<(f64, f64, f64, f64)>>,
}

impl ModelParts {
    fn build(n_list: &[u32], k_max: usize) -> Result<Self> {
        let coeff_pairs: Vec<(Vec<C64>, Vec<C64>)> = n_list
            .iter()
            .map(|&n| {
                Ok((
                    probe_coeffs(n, 0.0)?,
                    probe_coeffs(n, std::f64::consts::PI / n as f64)?,
                ))
            })
            .collect::<Result<_>>()?;
        let parts = (1..=k_max)
            .map(|k| {
                let chan = DiagonalChannel::flat(k)?;
                Ok(coeff_pairs
                    .iter()
                    .map(|(c0, c1)| {
                        let (a0, i0) = probe_parts(&chan, c0, c0);
                        let (a1, i1) = probe_parts(&chan, c0, c1);
                        (a0, i0, a1, i1)
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(ModelParts { parts })
    }

    fn vis_at(&self, p: f64, k: usize, n_idx: usize) -> f64 {
        let (a0, i0, a1, i1) = self.parts[k - 1][n_idx];
        let kk = (k * k) as f64;
        let p0 = p * a0 + (1.0 - p) / kk * i0;
        let p1 = p * a1 + (1.0 - p) / kk * i1;
        if p0 + p1 <= 0.0 {
            0.0
        } else {
            (p0 - p1).abs() / (p0 + p1)
        }
    }

    /// Linear interpolation between the neighbouring integer dimensions.
    fn vis(&self, p: f64, k: f64, n_idx: usize) -> f64 {
        let k_max = self.parts.len();
        let k0 = (k.floor() as usize).clamp(1, k_max);
        let k1 = (k.ceil() as usize).clamp(1, k_max);
        let v0 = self.vis_at(p, k0, n_idx);
        if k0 == k1 {
            return v0;
        }
        let f = k - k0 as f64;
        (1.0 - f) * v0 + f * self.vis_at(p, k1, n_idx)
    }

    fn residual(&self, p: f64, k: f64, vis: &[f64]) -> f64 {
        vis.iter()
            .enumerate()
            .map(|(i, &v)| {
                let m = self.vis(p, k, i);
                (m - v) * (m - v)
            })
            .sum()
    }
}

const NOISE_FLOOR_VIS: f64 = 1e-3;

/// Least-squares fit of `(p, K)` to measured visibilities: a coarse grid
/// (`p` step 0.01, `K` step 0.25 up to twice the largest probe index) with
/// local refinement. Ties break toward smaller `K`, then larger `p`.
pub fn fit_purity_dimension(points: &[(u32, f64)]) -> Result<ProbeFit> {
    if points.len() < 2 {
        return Err(Error::Degenerate("need at least two visibility points".into()));
    }
    let n_list: Vec<u32> = points.iter().map(|&(n, _)| n).collect();
    let vis: Vec<f64> = points.iter().map(|&(_, v)| v).collect();
    if n_list.iter().any(|&n| n == 0 || n % 2 == 0) {
        return Err(Error::InvalidMode("probe indices must be odd".into()));
    }
    let k_max = 2 * (*n_list.iter().max().unwrap() as usize);
    let model = ModelParts::build(&n_list, k_max)?;

    // Candidate order fixes the tie-break: K ascending, p descending.
    let coarse: Vec<(f64, f64)> = {
        let mut v = Vec::new();
        let mut k = 1.0;
        while k <= k_max as f64 + 1e-9 {
            let mut pi = 100i32;
            while pi >= 0 {
                v.push((k, pi as f64 / 100.0));
                pi -= 1;
            }
            k += 0.25;
        }
        v
    };
    let best = argmin_residual(&model, &coarse, &vis);

    let refine: Vec<(f64, f64)> = {
        let (k0, p0, _) = best;
        let mut v = Vec::new();
        let mut k = (k0 - 0.5).max(1.0);
        while k <= (k0 + 0.5).min(k_max as f64) + 1e-9 {
            let mut p = (p0 + 0.02).min(1.0);
            while p >= (p0 - 0.02).max(0.0) - 1e-12 {
                v.push((k, p));
                p -= 0.002;
            }
            k += 0.05;
        }
        v
    };
    let (k_hat, p_hat, residual) = argmin_residual(&model, &refine, &vis);

    let indeterminate = vis.iter().all(|&v| v.abs() <= NOISE_FLOOR_VIS) || p_hat < 0.02;
    Ok(ProbeFit {
        n_list,
        visibilities: vis,
        p_hat,
        k_hat,
        residual,
        indeterminate,
    })
}

fn argmin_residual(model: &ModelParts, candidates: &[(f64, f64)], vis: &[f64]) -> (f64, f64, f64) {
    let residuals: Vec<f64> = candidates
        .par_iter()
        .map(|&(k, p)| model.residual(p, k, vis))
        .collect();
    let mut best = (candidates[0].0, candidates[0].1, residuals[0]);
    for (&(k, p), &r) in candidates.iter().zip(&residuals).skip(1) {
        if r < best.2 - 1e-15 {
            best = (k, p, r);
        }
    }
    best
}
