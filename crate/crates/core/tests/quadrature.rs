//! Finite-length quadrature kernel against the thin-crystal closed form.
//!
//! Absolute normalisations differ by construction (the unit-norm pair
//! amplitudes scale with crystal length while the closed form fixes N = 1),
//! so element sets are compared after normalizing each by its fundamental
//! Gauss-Gauss element.

use teleportsim_core::channel::{
    kernel_element, kernel_thin, ChannelKernel, OpticalConfig, PmApprox, QuadratureKernel,
};
use teleportsim_core::modes::{mode_spectrum, AngularSpectrum, ModeSpec};

fn test_config(length: f64) -> OpticalConfig {
    let mut cfg = OpticalConfig::paper_defaults().with_alpha_beta(2.7, 1.1);
    cfg.l_p = length;
    cfg.l_d = length;
    cfg.grid_n = 64;
    cfg.grid_q_max = Some(9.0 / cfg.w_0);
    cfg
}

fn fields(cfg: &OpticalConfig) -> Vec<AngularSpectrum> {
    let grid = cfg.grid().unwrap();
    [
        ModeSpec::Lg { ell: 0, p: 0, waist: cfg.w_0 },
        ModeSpec::Lg { ell: 1, p: 0, waist: cfg.w_0 },
        ModeSpec::Lg { ell: 0, p: 1, waist: cfg.w_0 },
    ]
    .iter()
    .map(|s| mode_spectrum(s, &grid).unwrap())
    .collect()
}

/// Ratio-normalized elements for the pairs (0,0), (1,1), (2,2), (0,2).
fn normalized_elements(kernel: &ChannelKernel, f: &[AngularSpectrum]) -> Vec<f64> {
    let pairs = [(0usize, 0usize), (1, 1), (2, 2), (0, 2)];
    let raw: Vec<f64> = pairs
        .iter()
        .map(|&(i, j)| kernel_element(kernel, &f[i], &f[j]).unwrap().re)
        .collect();
    raw.iter().map(|v| v / raw[0]).collect()
}

#[test]
fn quadrature_converges_to_thin_crystal_monotonically() {
    let lengths = [5e-3, 5e-4, 5e-6];
    let mut errors = Vec::new();
    for &l in &lengths {
        let cfg = test_config(l);
        let f = fields(&cfg);
        let grid = cfg.grid().unwrap();
        let thin = normalized_elements(&kernel_thin(&cfg), &f);
        let quad_kernel = ChannelKernel::Quadrature(
            QuadratureKernel::new(&cfg, &grid, 1e-5, PmApprox::Sinc).unwrap(),
        );
        let quad = normalized_elements(&quad_kernel, &f);
        let err = thin
            .iter()
            .zip(&quad)
            .skip(1)
            .map(|(t, q)| (q / t - 1.0).abs())
            .fold(0.0, f64::max);
        errors.push(err);
    }
    assert!(
        errors[0] > errors[1] && errors[1] > errors[2],
        "errors not monotone across lengths: {errors:?}"
    );
    assert!(errors[2] < 1e-3, "5 um error {} too large", errors[2]);
}
