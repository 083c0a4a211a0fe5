//! Deterministic invariant suite behind `teleportsim selftest`.
//!
//! Every check is seeded and free of wall-clock or thread-order dependence,
//! so repeated runs produce byte-identical reports.

use teleportsim_core::capacity::{
    kappa_estimate, modal_capacity, schmidt_from_kernel, schmidt_from_spectrum, ScanBasis,
};
use teleportsim_core::channel::OpticalConfig;
use teleportsim_core::metrics::{
    classical_bound, fidelity_mixed, haar_mc_classical_fidelity, similarity, visibility,
    StateVector, Strategy,
};
use teleportsim_core::modes::{masks, ModeSpec};
use teleportsim_core::noise::{background_subtract, procrustean_weights, CoincidenceRecord};
use teleportsim_core::pipeline::{teleport_state, TeleportOptions};
use teleportsim_core::probe::{fit_purity_dimension, probe_visibilities, DiagonalChannel};
use teleportsim_core::tomography::{
    projector_set, reconstruct, simulate_counts, DensityMatrix, ProjectorScheme,
    ReconstructionMethod,
};
use teleportsim_core::{Error, Result};

pub struct Report {
    lines: Vec<(String, bool, String)>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.lines.iter().all(|(_, ok, _)| *ok)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, ok, detail) in &self.lines {
            out.push_str(if *ok { "ok   " } else { "FAIL " });
            out.push_str(name);
            if !detail.is_empty() {
                out.push_str("  # ");
                out.push_str(detail);
            }
            out.push('\n');
        }
        let passed = self.lines.iter().filter(|(_, ok, _)| *ok).count();
        out.push_str(&format!("{passed}/{} checks passed\n", self.lines.len()));
        out
    }
}

struct Harness {
    lines: Vec<(String, bool, String)>,
}

impl Harness {
    fn check(&mut self, name: &str, result: Result<String>) {
        match result {
            Ok(detail) => self.lines.push((name.into(), true, detail)),
            Err(e) => self.lines.push((name.into(), false, e.to_string())),
        }
    }
}

fn ensure(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Degenerate(msg.into()))
    }
}

pub fn run(seed: u64) -> Result<Report> {
    let mut h = Harness { lines: Vec::new() };
    let cfg64 = {
        let mut c = OpticalConfig::paper_defaults();
        c.grid_n = 64;
        c
    };

    h.check("classical_bound_values", (|| {
        ensure((classical_bound(2)? - 2.0 / 3.0).abs() < 1e-15, "d=2")?;
        ensure((classical_bound(3)? - 0.5).abs() < 1e-15, "d=3")?;
        ensure((classical_bound(9)? - 0.2).abs() < 1e-15, "d=9")?;
        Ok("2/(d+1) at d=2,3,9".into())
    })());

    h.check("haar_average_optimal_projective", (|| {
        let mut details = Vec::new();
        for d in [2usize, 3] {
            let est = haar_mc_classical_fidelity(d, Strategy::OptimalProjective, 30_000, seed)?;
            let bound = classical_bound(d)?;
            ensure(
                (est.mean - bound).abs() < 0.01,
                &format!("d={d}: {} vs {bound}", est.mean),
            )?;
            details.push(format!("d={d}: {:.4}", est.mean));
        }
        Ok(details.join(", "))
    })());

    h.check("haar_average_fixed_guess", (|| {
        let est = haar_mc_classical_fidelity(3, Strategy::FixedGuess, 30_000, seed)?;
        ensure((est.mean - 1.0 / 3.0).abs() < 0.01, "fixed guess off 1/d")?;
        Ok(format!("d=3: {:.4}", est.mean))
    })());

    h.check("schmidt_flat_spectrum_identity", (|| {
        for d in 2..=25usize {
            let k = schmidt_from_spectrum(&vec![1.0; d])?;
            ensure((k - d as f64).abs() < 1e-9, &format!("d={d}: K={k}"))?;
        }
        Ok("K = d for d = 2..25".into())
    })());

    h.check("kernel_schmidt_monotone_and_high_capacity", (|| {
        let base = OpticalConfig::paper_defaults();
        let mut prev = 0.0;
        for alpha in [1.0, 2.0, 3.0, 4.0] {
            let k = schmidt_from_kernel(&base.with_alpha_beta(alpha, 1.0));
            ensure(k > prev, "not increasing in alpha")?;
            prev = k;
        }
        let k10 = schmidt_from_kernel(&base);
        ensure(k10 >= 10.0, "paper-like K < 10")?;
        Ok(format!("K(defaults) = {k10:.2}"))
    })());

    h.check("kappa_order_one_agreement", (|| {
        let cfg = OpticalConfig::paper_defaults().with_alpha_beta(9.0, 1.0);
        let ratio = kappa_estimate(&cfg)? / schmidt_from_kernel(&cfg);
        ensure((1.0 / 3.0..=3.0).contains(&ratio), &format!("ratio {ratio}"))?;
        Ok(format!("ratio = {ratio:.3}"))
    })());

    h.check("mub_unbiasedness", (|| {
        for d in [2usize, 3, 4] {
            let set = projector_set(d, ProjectorScheme::MubComplete)?;
            for (i, a) in set.iter().enumerate() {
                for (j, b) in set.iter().enumerate() {
                    let ov = a.overlap(b)?.norm_sqr();
                    let expect = if i / d == j / d {
                        if i == j {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        1.0 / d as f64
                    };
                    ensure((ov - expect).abs() < 1e-12, &format!("d={d} pair {i},{j}"))?;
                }
            }
        }
        Ok("d = 2, 3, 4".into())
    })());

    h.check("tomography_roundtrip_qutrit", (|| {
        let psi = StateVector::uniform(3)?;
        let rho = DensityMatrix::from_pure(&psi);
        let projs = projector_set(3, ProjectorScheme::MubComplete)?;
        let recs = simulate_counts(&rho, &projs, 1e6, 0.0, None)?;
        let rec = reconstruct(&recs, 3, ReconstructionMethod::MaxLikelihood)?;
        let f = fidelity_mixed(&rec, &psi)?;
        ensure(f >= 0.999, &format!("fidelity {f}"))?;
        Ok(format!("fidelity = {f:.6}"))
    })());

    h.check("tomography_isotropic_fidelity", (|| {
        let psi = StateVector::uniform(3)?;
        let rho = DensityMatrix::isotropic(&psi, 0.7)?;
        let projs = projector_set(3, ProjectorScheme::MubComplete)?;
        let recs = simulate_counts(&rho, &projs, 1e6, 0.0, None)?;
        let rec = reconstruct(&recs, 3, ReconstructionMethod::MaxLikelihood)?;
        let f = fidelity_mixed(&rec, &psi)?;
        ensure((f - 0.8).abs() < 0.01, &format!("fidelity {f}"))?;
        Ok(format!("fidelity = {f:.4}"))
    })());

    h.check("procrustean_flattening", (|| {
        let diag = [4.0, 1.0, 2.5];
        let w = procrustean_weights(&diag)?;
        let out: Vec<f64> = w.weights.iter().zip(&diag).map(|(t, v)| t * v).collect();
        let max = out.iter().cloned().fold(f64::MIN, f64::max);
        let min = out.iter().cloned().fold(f64::MAX, f64::min);
        ensure(max / min <= 1.0 + 1e-12, "not flat")?;
        let k = schmidt_from_spectrum(&out)?;
        ensure((k - 3.0).abs() < 1e-9, "flattened K != mode count")?;
        Ok(format!("throughput = {:.4}", w.throughput))
    })());

    h.check("fractional_mask_series", (|| {
        let c = masks::mask_fourier_coeffs(1, 0.0, -6, 6);
        for (i, l) in (-6..=6).enumerate() {
            let expect = 1.0 / (std::f64::consts::PI.powi(2) * (l as f64 - 0.5).powi(2));
            ensure(
                (c[i].norm_sqr() - expect).abs() < 1e-12,
                &format!("l = {l}"),
            )?;
        }
        Ok("half-charge Fourier weights".into())
    })());

    h.check("probe_fit_roundtrip", (|| {
        let n_list = [1u32, 3, 5, 7, 9, 11];
        let chan = DiagonalChannel::flat(5)?;
        let vis = probe_visibilities(&chan, &n_list, 0.9, 5)?;
        let fit = fit_purity_dimension(
            &n_list.iter().copied().zip(vis.iter().copied()).collect::<Vec<_>>(),
        )?;
        ensure((fit.k_hat - 5.0).abs() <= 1.0, &format!("K_hat {}", fit.k_hat))?;
        ensure((fit.p_hat - 0.9).abs() <= 0.05, &format!("p_hat {}", fit.p_hat))?;
        Ok(format!("p_hat = {:.3}, K_hat = {:.2}", fit.p_hat, fit.k_hat))
    })());

    h.check("background_subtraction_restores_visibility", (|| {
        let (pmax, pmin, floor) = (0.93, 0.07, 0.4);
        let clean = (pmax - pmin) / (pmax + pmin);
        let smax = background_subtract(&CoincidenceRecord::new(pmax + floor, floor, 0.5)?);
        let smin = background_subtract(&CoincidenceRecord::new(pmin + floor, floor, 0.5)?);
        let v = visibility(smax.counts, smin.counts)?;
        ensure((v - clean).abs() < 1e-12, "restored visibility drifted")?;
        Ok(format!("V = {v:.4}"))
    })());

    h.check("similarity_and_visibility_values", (|| {
        ensure((similarity(&[0.6, 0.4], &[0.5, 0.5])? - 0.9).abs() < 1e-15, "similarity")?;
        ensure((visibility(0.925, 0.075)? - 0.85).abs() < 1e-12, "visibility")?;
        Ok("hand values".into())
    })());

    h.check("teleport_eigenmode_similarity_one", (|| {
        let basis: Vec<ModeSpec> = (-1..=1)
            .map(|ell| ModeSpec::PhaseVortex { ell, waist: cfg64.w_0 })
            .collect();
        let run = teleport_state(&cfg64, &basis[0], &basis, TeleportOptions::default())?;
        ensure((run.similarity - 1.0).abs() < 1e-9, "similarity")?;
        Ok(format!("S = {:.9}", run.similarity))
    })());

    h.check("modal_capacity_fig1_ordering", (|| {
        let kc = modal_capacity(&cfg64.with_alpha_beta(2.7, 4.1), ScanBasis::PhaseVortex, 8)?;
        let kd = modal_capacity(&cfg64.with_alpha_beta(2.7, 1.1), ScanBasis::PhaseVortex, 8)?;
        let ke = modal_capacity(&cfg64.with_alpha_beta(4.1, 1.1), ScanBasis::PhaseVortex, 8)?;
        ensure(kc < kd && kd < ke, &format!("{kc:.2} < {kd:.2} < {ke:.2} violated"))?;
        Ok(format!("K = {kc:.2}, {kd:.2}, {ke:.2}"))
    })());

    Ok(Report { lines: h.lines })
}
