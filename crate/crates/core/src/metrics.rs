//! Fidelity, the classical state-transfer bound, its Monte Carlo
//! verification over Haar-random states, similarity, and visibility.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::tomography::DensityMatrix;
use crate::{C64, Error, Result};

/// Pure qudit state, unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Normalize the amplitude vector; dimension must be at least 2.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::InvalidConfig("state dimension must be >= 2".into()));
        }
        let n: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(n > 0.0) {
            return Err(Error::Degenerate("zero state vector".into()));
        }
        Ok(StateVector { amplitudes: amplitudes.into_iter().map(|a| a / n).collect() })
    }

    /// Computational basis state `|k>` in dimension `d`.
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(Error::InvalidConfig(format!("basis index {k} out of range {d}")));
        }
        let mut v = vec![C64::new(0.0, 0.0); d];
        v[k] = C64::new(1.0, 0.0);
        StateVector::new(v)
    }

    /// Uniform superposition in dimension `d`.
    pub fn uniform(d: usize) -> Result<Self> {
        StateVector::new(vec![C64::new(1.0, 0.0); d])
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn overlap(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidConfig("dimension mismatch".into()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// `F = |<a|b>|^2` for pure states.
pub fn fidelity_pure(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.overlap(b)?.norm_sqr())
}

/// `F = <psi| rho |psi>` for a mixed state against a pure target.
pub fn fidelity_mixed(rho: &DensityMatrix, target: &StateVector) -> Result<f64> {
    rho.validate()?;
    if rho.dim() != target.dim() {
        return Err(Error::InvalidConfig("dimension mismatch".into()));
    }
    let psi = target.amplitudes();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            acc += psi[i].conj() * rho.entries()[[i, j]] * psi[j];
        }
    }
    Ok(acc.re.clamp(0.0, 1.0))
}

/// Classical state-transfer fidelity bound `2 / (d + 1)`.
pub fn classical_bound(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidConfig("bound defined for d >= 2".into()));
    }
    Ok(2.0 / (d as f64 + 1.0))
}

/// Measure-and-prepare strategy for the classical baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Rank-1 projective measurement, prepare the measured basis state;
    /// attains the classical bound.
    OptimalProjective,
    /// Ignore the measurement and always prepare `|0>`; averages to `1/d`.
    FixedGuess,
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Haar-random pure state from a per-sample seeded generator: normalized
/// vector of standard complex Gaussians.
fn haar_state(d: usize, seed: u64, index: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index)));
    let mut v: Vec<C64> = (0..d)
        .map(|_| {
            // Box-Muller from uniform draws keeps the dependency surface small.
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = (-2.0 * u1.ln()).sqrt();
            C64::new(r * u2.cos(), r * u2.sin())
        })
        .collect();
    let n: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut v {
        *a /= n;
    }
    v
}

/// Average classical teleportation fidelity over Haar-random input states.
///
/// Deterministic for a fixed seed, independent of how samples are batched:
/// every sample owns a generator derived from `(seed, index)`.
pub fn haar_mc_classical_fidelity(
    d: usize,
    strategy: Strategy,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if d < 2 {
        return Err(Error::InvalidConfig("d must be >= 2".into()));
    }
    if samples < 1 {
        return Err(Error::InvalidConfig("need at least one sample".into()));
    }
    const CHUNK: usize = 4096;
    let n_chunks = samples.div_ceil(CHUNK);
    let partials: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(samples);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for i in lo..hi {
                let psi = haar_state(d, seed, i as u64);
                let f = match strategy {
                    // Measuring in the computational basis with outcome
                    // probability |psi_k|^2 and re-preparing |k> gives
                    // E[F] = sum_k |psi_k|^4 per sample.
                    Strategy::OptimalProjective => psi.iter().map(|a| a.norm_sqr().powi(2)).sum(),
                    Strategy::FixedGuess => psi[0].norm_sqr(),
                };
                s += f;
                s2 += f * f;
            }
            (s, s2)
        })
        .collect();
    let (sum, sum_sq) = partials
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (s, s2)| (a + s, b + s2));
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(McEstimate { mean, std_error: (var / n).sqrt() })
}

/// Normalized distance similarity
/// `S = 1 - sum |c_exp - c_th| / (sum c_exp + sum c_th)` over intensity
/// coefficients.
pub fn similarity(c_exp: &[f64], c_th: &[f64]) -> Result<f64> {
    if c_exp.len() != c_th.len() {
        return Err(Error::InvalidConfig("coefficient length mismatch".into()));
    }
    if c_exp.iter().chain(c_th).any(|&v| v < 0.0) {
        return Err(Error::InvalidConfig("intensity coefficients must be non-negative".into()));
    }
    let denom: f64 = c_exp.iter().sum::<f64>() + c_th.iter().sum::<f64>();
    if denom <= 0.0 {
        return Err(Error::Degenerate("all-zero coefficient vectors".into()));
    }
    let dist: f64 = c_exp.iter().zip(c_th).map(|(a, b)| (a - b).abs()).sum();
    Ok(1.0 - dist / denom)
}

/// Fringe contrast `(p_max - p_min) / (p_max + p_min)`.
pub fn visibility(p_max: f64, p_min: f64) -> Result<f64> {
    if p_max < 0.0 || p_min < 0.0 {
        return Err(Error::InvalidConfig("probabilities must be non-negative".into()));
    }
    let denom = p_max + p_min;
    if denom <= 0.0 {
        return Err(Error::Degenerate("visibility of an all-zero fringe".into()));
    }
    Ok((p_max - p_min).abs() / denom)
}
