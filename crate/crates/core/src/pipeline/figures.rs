//! Per-figure CSV exports.
//!
//! File names and contents:
//!
//! - `fig1b.csv`    — capacity contour: header row of alpha values, first
//!                    column beta values, body K entries.
//! - `fig1cde.csv`  — vortex crosstalk matrices at the three experimental
//!                    `(beta, alpha)` points; columns `fig, beta, alpha,
//!                    ell_prepared, ell_detected, probability, normalized`.
//! - `fig2.csv`     — fidelity versus dimension with the classical bound;
//!                    columns `d, fidelity_noiseless, fidelity_isotropic,
//!                    classical_bound`.
//! - `fig3a.csv`    — two-mode fringes for `l = 1, 2, 3`; columns `ell, chi,
//!                    theta, p_raw, p_subtracted`.
//! - `fig3c.csv`    — 4D MUB crosstalk and one set of modal bars; columns
//!                    `kind, prepared, detected, value`.
//! - `fig4.csv`     — HG-basis teleportation bars (3D and 9D); columns
//!                    `panel, mode, prepared, detected`.
//! - `fig5.csv`     — similarity summary across example states; columns
//!                    `state, dimension, similarity, fidelity`.

use std::path::{Path, PathBuf};

use crate::capacity::{capacity_scan, ScanBasis};
use crate::channel::{crosstalk_matrix, kernel_thin, Normalization, OpticalConfig};
use crate::metrics::classical_bound;
use crate::modes::ModeSpec;
use crate::pipeline::{teleport_state, visibility_curve, TeleportOptions};
use crate::{C64, Result};

fn vortex(cfg: &OpticalConfig, ell: i32) -> ModeSpec {
    ModeSpec::PhaseVortex { ell, waist: cfg.w_0 }
}

fn hg(cfg: &OpticalConfig, n: u32, m: u32) -> ModeSpec {
    ModeSpec::Hg { n, m, waist: cfg.w_0 }
}

fn write(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    Ok(path)
}

pub fn fig1b(cfg: &OpticalConfig, dir: &Path) -> Result<PathBuf> {
    let alphas: Vec<f64> = (2..=13).map(|i| i as f64 * 0.5).collect();
    let betas = [0.5, 1.1, 2.0, 4.1];
    let scan = capacity_scan(cfg, &alphas, &betas, ScanBasis::PhaseVortex, 12)?;
    write(dir, "fig1b.csv", &scan.to_csv())
}

pub fn fig1cde(cfg: &OpticalConfig, dir: &Path) -> Result<PathBuf> {
    let mut out = String::from("fig,beta,alpha,ell_prepared,ell_detected,probability,normalized\n");
    for (fig, beta, alpha) in [("c", 4.1, 2.7), ("d", 1.1, 2.7), ("e", 1.1, 4.1)] {
        let c = cfg.with_alpha_beta(alpha, beta);
        let grid = c.grid()?;
        let modes: Vec<ModeSpec> = (-5..=5).map(|l| vortex(&c, l)).collect();
        let m = crosstalk_matrix(&kernel_thin(&c), &modes, &modes, &grid, Normalization::Raw)?;
        let peak = m.max_diagonal().max(1e-300);
        for (j, _) in modes.iter().enumerate() {
            for (i, _) in modes.iter().enumerate() {
                let l_prep = j as i32 - 5;
                let l_det = i as i32 - 5;
                out.push_str(&format!(
                    "{fig},{beta},{alpha},{l_prep},{l_det},{},{}\n",
                    m.p[[i, j]],
                    m.p[[i, j]] / peak
                ));
            }
        }
    }
    write(dir, "fig1cde.csv", &out)
}

/// Noiseless teleport fidelity of the flat `d`-dimensional OAM state next to
/// the isotropic-model fidelity `p + (1 - p)/d` and the classical bound.
pub fn fig2(cfg: &OpticalConfig, purity: f64, dir: &Path) -> Result<PathBuf> {
    let mut out = String::from("d,fidelity_noiseless,fidelity_isotropic,classical_bound\n");
    for d in 2..=11usize {
        let ells = symmetric_ells(d);
        let basis: Vec<ModeSpec> = ells.iter().map(|&l| vortex(cfg, l)).collect();
        let input = ModeSpec::superposition(
            basis.iter().map(|b| (C64::new(1.0, 0.0), b.clone())).collect(),
        )?;
        let run = teleport_state(cfg, &input, &basis, TeleportOptions { accidental_floor: 0.0, flatten: true })?;
        let iso = purity + (1.0 - purity) / d as f64;
        out.push_str(&format!(
            "{d},{},{iso},{}\n",
            run.fidelity,
            classical_bound(d)?
        ));
    }
    write(dir, "fig2.csv", &out)
}

fn symmetric_ells(d: usize) -> Vec<i32> {
    let mut ells = vec![0];
    let mut k = 1;
    while ells.len() < d {
        ells.push(k);
        if ells.len() < d {
            ells.push(-k);
        }
        k += 1;
    }
    ells.sort_unstable();
    ells
}

pub fn fig3a(cfg: &OpticalConfig, dir: &Path) -> Result<PathBuf> {
    let mut out = String::from("ell,chi,theta,p_raw,p_subtracted\n");
    for ell in [1i32, 2, 3] {
        let n = 49usize;
        let chis: Vec<f64> = (0..n)
            .map(|i| std::f64::consts::PI / ell as f64 * i as f64 / (n - 1) as f64)
            .collect();
        let clean = visibility_curve(cfg, ell, &chis, 0.0)?;
        let pmax = clean.iter().map(|p| p.probability).fold(f64::MIN, f64::max);
        let pmin = clean.iter().map(|p| p.probability).fold(f64::MAX, f64::min);
        // floor reproducing the raw visibility of the measured fringes
        let v_raw = 0.85;
        let floor = (((pmax - pmin) - v_raw * (pmax + pmin)) / (2.0 * v_raw)).max(0.0);
        for p in visibility_curve(cfg, ell, &chis, floor)? {
            out.push_str(&format!(
                "{ell},{},{},{},{}\n",
                p.chi,
                p.theta,
                p.probability,
                (p.probability - floor).max(0.0)
            ));
        }
    }
    write(dir, "fig3a.csv", &out)
}

/// The four 4D MUB states over OAM `{-3, -1, 1, 3}` used in the experiment.
pub fn mub4_states(cfg: &OpticalConfig) -> Result<Vec<ModeSpec>> {
    let ells = [-3, -1, 1, 3];
    let phase_rows: [[f64; 3]; 4] = [
        [-std::f64::consts::FRAC_PI_2, -std::f64::consts::PI, -std::f64::consts::FRAC_PI_2],
        [-std::f64::consts::FRAC_PI_2, 0.0, std::f64::consts::FRAC_PI_2],
        [std::f64::consts::FRAC_PI_2, std::f64::consts::PI, std::f64::consts::FRAC_PI_2],
        [std::f64::consts::FRAC_PI_2, 0.0, -std::f64::consts::FRAC_PI_2],
    ];
    phase_rows
        .iter()
        .map(|row| {
            let mut terms = vec![(C64::new(1.0, 0.0), vortex(cfg, ells[0]))];
            for (k, &phi) in row.iter().enumerate() {
                terms.push((C64::from_polar(1.0, phi), vortex(cfg, ells[k + 1])));
            }
            ModeSpec::superposition(terms)
        })
        .collect()
}

pub fn fig3c(cfg: &OpticalConfig, dir: &Path) -> Result<PathBuf> {
    let states = mub4_states(cfg)?;
    let grid = cfg.grid()?;
    let kernel = kernel_thin(cfg);
    let m = crosstalk_matrix(&kernel, &states, &states, &grid, Normalization::PerPreparedColumn)?;
    let mut out = String::from("kind,prepared,detected,value\n");
    for j in 0..states.len() {
        for i in 0..states.len() {
            out.push_str(&format!("matrix,mub{j},mub{i},{}\n", m.p[[i, j]]));
        }
    }
    // modal bars for the first MUB state
    let basis: Vec<ModeSpec> = [-3, -1, 1, 3].iter().map(|&l| vortex(cfg, l)).collect();
    let run = teleport_state(
        cfg,
        &states[0],
        &basis,
        TeleportOptions { accidental_floor: 0.0, flatten: true },
    )?;
    for (k, label) in run.labels.iter().enumerate() {
        out.push_str(&format!("bars_prepared,mub0,{label},{}\n", run.prepared[k]));
        out.push_str(&format!("bars_detected,mub0,{label},{}\n", run.detected[k]));
    }
    write(dir, "fig3c.csv", &out)
}

/// HG mode lists of the 3D and 9D teleported states.
pub fn hg_basis_3(cfg: &OpticalConfig) -> Vec<ModeSpec> {
    vec![hg(cfg, 1, 0), hg(cfg, 1, 1), hg(cfg, 0, 1)]
}

pub fn hg_basis_9(cfg: &OpticalConfig) -> Vec<ModeSpec> {
    [(0, 0), (2, 0), (0, 2), (2, 2), (4, 0), (0, 4), (4, 2), (2, 4), (4, 4)]
        .iter()
        .map(|&(n, m)| hg(cfg, n, m))
        .collect()
}

fn uniform_superposition(basis: &[ModeSpec]) -> Result<ModeSpec> {
    ModeSpec::superposition(
        basis.iter().map(|b| (C64::new(1.0, 0.0), b.clone())).collect(),
    )
}

pub fn fig4(cfg: &OpticalConfig, dir: &Path) -> Result<PathBuf> {
    let mut out = String::from("panel,mode,prepared,detected\n");
    for (panel, basis) in [("a", hg_basis_3(cfg)), ("b", hg_basis_9(cfg))] {
        let input = uniform_superposition(&basis)?;
        let run = teleport_state(
            cfg,
            &input,
            &basis,
            TeleportOptions { accidental_floor: 0.0, flatten: true },
        )?;
        for (k, label) in run.labels.iter().enumerate() {
            out.push_str(&format!(
                "{panel},{label},{},{}\n",
                run.prepared[k], run.detected[k]
            ));
        }
    }
    write(dir, "fig4.csv", &out)
}

/// The example states of the summary figure.
pub fn summary_states(cfg: &OpticalConfig) -> Result<Vec<(String, ModeSpec, Vec<ModeSpec>)>> {
    let v = |l| vortex(cfg, l);
    let one = C64::new(1.0, 0.0);
    let i_c = C64::new(0.0, 1.0);
    let mut out = Vec::new();

    let phi1_basis = vec![v(0), v(-1)];
    out.push((
        "phi1".to_string(),
        ModeSpec::superposition(vec![(one, v(0)), (one, v(-1))])?,
        phi1_basis,
    ));
    out.push((
        "phi2".to_string(),
        ModeSpec::superposition(vec![(one, v(-1)), (one, v(1))])?,
        vec![v(-1), v(1)],
    ));
    out.push((
        "phi3".to_string(),
        ModeSpec::superposition(vec![(one, v(0)), (-one, v(1))])?,
        vec![v(0), v(1)],
    ));
    out.push((
        "phi4".to_string(),
        ModeSpec::superposition(vec![(one, v(-2)), (one, v(0)), (one, v(2))])?,
        vec![v(-2), v(0), v(2)],
    ));
    out.push((
        "phi5".to_string(),
        ModeSpec::superposition(vec![
            (one, v(-3)),
            (-i_c, v(-1)),
            (one, v(1)),
            (i_c, v(3)),
        ])?,
        vec![v(-3), v(-1), v(1), v(3)],
    ));

    let g1 = hg_basis_3(cfg);
    out.push(("gamma1".to_string(), uniform_superposition(&g1)?, g1));
    let g2 = vec![hg(cfg, 0, 0), hg(cfg, 1, 0), hg(cfg, 1, 1), hg(cfg, 0, 1)];
    out.push(("gamma2".to_string(), uniform_superposition(&g2)?, g2));
    let g3 = hg_basis_9(cfg);
    out.push(("gamma3".to_string(), uniform_superposition(&g3)?, g3));
    Ok(out)
}

pub fn fig5(cfg: &OpticalConfig, dir: &Path) -> Result<PathBuf> {
    let mut out = String::from("state,dimension,similarity,fidelity\n");
    for (label, input, basis) in summary_states(cfg)? {
        let run = teleport_state(
            cfg,
            &input,
            &basis,
            TeleportOptions { accidental_floor: 0.0, flatten: true },
        )?;
        out.push_str(&format!(
            "{label},{},{},{}\n",
            basis.len(),
            run.similarity,
            run.fidelity
        ));
    }
    write(dir, "fig5.csv", &out)
}

/// Write every figure file into `dir`; returns the paths.
pub fn emit_all(cfg: &OpticalConfig, purity: f64, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    Ok(vec![
        fig1b(cfg, dir)?,
        fig1cde(cfg, dir)?,
        fig2(cfg, purity, dir)?,
        fig3a(cfg, dir)?,
        fig3c(cfg, dir)?,
        fig4(cfg, dir)?,
        fig5(cfg, dir)?,
    ])
}
