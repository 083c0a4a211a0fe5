//! Fractional spiral phase masks and their azimuthal Fourier analysis.
//!
//! A mask of charge `M` rotated to `alpha` is the unimodular function
//!
//! ```text
//! exp(i Phi_M(phi; alpha)) = exp(i M (2 pi + phi - alpha))   0 <= phi < alpha
//!                            exp(i M (phi - alpha))          alpha <= phi < 2 pi
//! ```
//!
//! i.e. the base mask `exp(i M phi')` evaluated at `phi' = (phi - alpha) mod
//! 2 pi`. For half-integer `M` the mask carries a genuine phase cut at
//! `phi = alpha`; integer charges reduce to ordinary vortex phases. Fourier
//! coefficients are computed from the exact piecewise integrals, so they are
//! limited only by floating-point rounding; a point-sampled DFT variant is
//! provided for cross-validation.

use crate::C64;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// `exp(i Phi_M(phi; offset))` for charge `M = twice_m / 2`; `phi` in `[0, 2 pi)`.
pub fn frac_phase_factor(twice_m: i32, phi: f64, offset: f64) -> C64 {
    let m = twice_m as f64 / 2.0;
    let a = offset.rem_euclid(TWO_PI);
    let phase = if phi < a {
        m * (TWO_PI + phi - a)
    } else {
        m * (phi - a)
    };
    C64::from_polar(1.0, phase)
}

/// Exact Fourier coefficients `c_l = (1/2pi) int exp(i Phi_M(phi; offset)) exp(-i l phi) dphi`
/// for `l` in `ell_min..=ell_max`.
pub fn mask_fourier_coeffs(twice_m: i32, offset: f64, ell_min: i32, ell_max: i32) -> Vec<C64> {
    assert!(ell_min <= ell_max);
    let m = twice_m as f64 / 2.0;
    let a = offset.rem_euclid(TWO_PI);
    (ell_min..=ell_max)
        .map(|l| {
            let d = m - l as f64;
            let pre_lo = C64::from_polar(1.0, m * (TWO_PI - a)); // branch phi < a
            let pre_hi = C64::from_polar(1.0, -m * a); // branch phi >= a
            (segment(d, 0.0, a, pre_lo) + segment(d, a, TWO_PI, pre_hi)) / TWO_PI
        })
        .collect()
}

/// `pref * int_lo^hi exp(i d phi) dphi`
fn segment(d: f64, lo: f64, hi: f64, pref: C64) -> C64 {
    if d.abs() < 1e-12 {
        pref * (hi - lo)
    } else {
        pref * (C64::from_polar(1.0, d * hi) - C64::from_polar(1.0, d * lo)) / C64::new(0.0, d)
    }
}

/// Point-sampled DFT estimate of the same coefficients (`n_phi` samples).
pub fn mask_fourier_coeffs_sampled(
    twice_m: i32,
    offset: f64,
    ell_min: i32,
    ell_max: i32,
    n_phi: usize,
) -> Vec<C64> {
    let samples: Vec<C64> = (0..n_phi)
        .map(|j| frac_phase_factor(twice_m, TWO_PI * j as f64 / n_phi as f64, offset))
        .collect();
    (ell_min..=ell_max)
        .map(|l| {
            let mut acc = C64::new(0.0, 0.0);
            for (j, s) in samples.iter().enumerate() {
                acc += s * C64::from_polar(1.0, -(l as f64) * TWO_PI * j as f64 / n_phi as f64);
            }
            acc / n_phi as f64
        })
        .collect()
}

/// Unnormalized azimuthal Fourier coefficients of the probe superposition
/// `U_n(phi, theta) = sum_k exp(i Phi_{n/2}(phi; 2 pi k / n (+) theta))`.
pub fn probe_mask_coeffs(n_index: u32, theta: f64, ell_min: i32, ell_max: i32) -> Vec<C64> {
    let n_bins = (ell_max - ell_min + 1) as usize;
    let mut acc = vec![C64::new(0.0, 0.0); n_bins];
    for k in 0..n_index {
        let off = (TWO_PI * k as f64 / n_index as f64 + theta).rem_euclid(TWO_PI);
        let c = mask_fourier_coeffs(n_index as i32, off, ell_min, ell_max);
        for (a, b) in acc.iter_mut().zip(c) {
            *a += b;
        }
    }
    acc
}
