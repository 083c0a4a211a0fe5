//! `teleportsim` — command-line front end for the teleportation-channel
//! simulator.
//!
//! Exit codes: 0 success, 1 usage/configuration error, 2 numerical
//! non-convergence.

mod modespec;
mod output;
mod ranges;
mod selftest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use teleportsim_core::capacity::{capacity_scan, ScanBasis};
use teleportsim_core::channel::{
    crosstalk_matrix, kernel_thin, ChannelKernel, Normalization, OpticalConfig, PmApprox,
    QuadratureKernel,
};
use teleportsim_core::metrics::{classical_bound, fidelity_mixed, StateVector};
use teleportsim_core::modes::ModeSpec;
use teleportsim_core::noise::{conversion_sigma, EfficiencyParams};
use teleportsim_core::pipeline::{figures, teleport_state, TeleportOptions};
use teleportsim_core::probe::{fit_purity_dimension, probe_visibilities, DiagonalChannel};
use teleportsim_core::tomography::{
    projector_set, reconstruct, simulate_counts, DensityMatrix, ProjectorScheme,
    ReconstructionMethod,
};
use teleportsim_core::{C64, Error};

use output::Table;

#[derive(Parser)]
#[command(
    name = "teleportsim",
    about = "Simulator of a nonlinear-optics high-dimensional teleportation channel",
    long_about = None,
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct IoArgs {
    /// Optical configuration file (key = value, `#` comments). Defaults to
    /// the built-in optimized-channel parameters.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path (CSV by default; `-` or omitted prints to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit JSON instead of CSV (flat object mirroring the CSV columns).
    #[arg(long)]
    json: bool,
    /// Random seed for sampled quantities.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Prepared-vs-detected crosstalk matrix over a vortex/LG mode ladder.
    Crosstalk {
        #[command(flatten)]
        io: IoArgs,
        /// Mode family: vortex | lg | hg
        #[arg(long, default_value = "vortex")]
        basis: String,
        /// Ladder half-width (|l| <= ell_max; HG uses n,m <= ell_max).
        #[arg(long, default_value_t = 5)]
        ell_max: i32,
        /// Override alpha = w_p/w_0 from the config.
        #[arg(long)]
        alpha: Option<f64>,
        /// Override beta = w_p/w_D from the config.
        #[arg(long)]
        beta: Option<f64>,
        /// Normalize each prepared column to unit sum.
        #[arg(long)]
        column_normalize: bool,
        /// Integrate the finite-length kernel instead of the thin-crystal
        /// closed form.
        #[arg(long)]
        quadrature: bool,
        /// Relative tolerance for the quadrature kernel.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Modal-capacity scan over the (alpha, beta) design space.
    Capacity {
        #[command(flatten)]
        io: IoArgs,
        /// Alpha values: `start:stop:step` (stop exclusive) or a comma list.
        #[arg(long, default_value = "1:6:0.5")]
        alphas: String,
        /// Beta values, same syntax.
        #[arg(long, default_value = "0.5,1,2")]
        betas: String,
        #[arg(long, default_value = "vortex")]
        basis: String,
        #[arg(long, default_value_t = 20)]
        ell_max: i32,
    },
    /// Fractional-OAM dimensionality probe: forward visibilities and the
    /// least-squares (p, K) fit.
    Probe {
        #[command(flatten)]
        io: IoArgs,
        /// Channel purity for the forward model.
        #[arg(long, default_value_t = 1.0)]
        purity: f64,
        /// Channel dimension; omit to derive the channel from the config
        /// crosstalk diagonal.
        #[arg(long)]
        dim: Option<usize>,
        /// Probe indices (odd), comma list or range.
        #[arg(long, default_value = "1,3,5,7,9,11")]
        n_list: String,
        /// Ladder half-width when deriving the channel from the config.
        #[arg(long, default_value_t = 10)]
        ell_max: i32,
    },
    /// Simulate tomographic counts for a qudit state and reconstruct it.
    Tomo {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, default_value_t = 3)]
        d: usize,
        /// Projector scheme: mub | pairwise
        #[arg(long, default_value = "mub")]
        scheme: String,
        /// State amplitudes, e.g. "1,1,1" or "1,0.7+0.2i,-1".
        #[arg(long, default_value = "1,1,1")]
        state: String,
        /// Isotropic purity applied to the state (1 = pure).
        #[arg(long, default_value_t = 1.0)]
        purity: f64,
        #[arg(long, default_value_t = 1e6)]
        counts: f64,
        /// Uniform accidental rate added to every projector.
        #[arg(long, default_value_t = 0.0)]
        accidental: f64,
        /// Poisson-sample the counts (seeded with --seed).
        #[arg(long)]
        poisson: bool,
        /// Reconstruction: mle | linear
        #[arg(long, default_value = "mle")]
        method: String,
    },
    /// Teleport a state through the configured channel.
    Teleport {
        #[command(flatten)]
        io: IoArgs,
        /// Input mode, e.g. "sup:(0.707,lg:ell=1)+(0.707i,lg:ell=-1)".
        #[arg(long)]
        input: String,
        /// Detection basis: mode specs separated by `;`.
        #[arg(long)]
        basis: String,
        /// Procrustean-flatten the channel diagonal over the basis.
        #[arg(long)]
        flatten: bool,
        /// Uniform accidental floor added to detected intensities.
        #[arg(long, default_value_t = 0.0)]
        floor: f64,
    },
    /// Classical state-transfer fidelity bound 2/(d+1).
    Bound {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        d: usize,
    },
    /// Nonlinear conversion coefficient sigma.
    Efficiency {
        #[command(flatten)]
        io: IoArgs,
        /// chi^(2) in pm/V.
        #[arg(long, default_value_t = 33.8)]
        chi2_pm_v: f64,
        /// Pump photon flux, photons / (s m^2).
        #[arg(long)]
        flux: f64,
    },
    /// Deterministic invariant suite; exit 0 when every check passes.
    Selftest {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Write the per-figure CSV files (fig1b, fig1cde, fig2, fig3a, fig3c,
    /// fig4, fig5).
    Figures {
        #[command(flatten)]
        io: IoArgs,
        /// Purity used for the isotropic fidelity column of fig2.
        #[arg(long, default_value_t = 0.75)]
        purity: f64,
        #[arg(long)]
        outdir: PathBuf,
    },
}

fn main() {
    std::process::exit(run(std::env::args().collect()));
}

fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            // --help / --version are successful exits
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(Error::ToleranceNotMet { .. }) | Err(Error::NonConvergence { .. }) => {
            eprintln!("error: numerical non-convergence");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load_config(io: &IoArgs) -> Result<OpticalConfig, Error> {
    match &io.config {
        None => Ok(OpticalConfig::paper_defaults()),
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            OpticalConfig::from_key_values(&text)
        }
    }
}

fn parse_basis_family(s: &str) -> Result<ScanBasis, Error> {
    match s {
        "vortex" => Ok(ScanBasis::PhaseVortex),
        "lg" => Ok(ScanBasis::Lg),
        "hg" => Ok(ScanBasis::Hg),
        other => Err(Error::Parse(format!("unknown basis family `{other}`"))),
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Bound { io, d } => {
            let b = classical_bound(d)?;
            let mut t = Table::new(&["d", "bound"]);
            t.push(vec![d.to_string(), b.to_string()]);
            println!("{b}");
            t.emit_opt(&io.out, io.json)
        }
        Command::Capacity { io, alphas, betas, basis, ell_max } => {
            let cfg = load_config(&io)?;
            let alphas = ranges::parse_list(&alphas)?;
            let betas = ranges::parse_list(&betas)?;
            let scan = capacity_scan(&cfg, &alphas, &betas, parse_basis_family(&basis)?, ell_max)?;
            if io.json {
                let mut t = Table::new(&["beta", "alpha", "k"]);
                for (i, &b) in scan.betas.iter().enumerate() {
                    for (j, &a) in scan.alphas.iter().enumerate() {
                        t.push(vec![b.to_string(), a.to_string(), scan.k[[i, j]].to_string()]);
                    }
                }
                t.emit_opt(&io.out, true)
            } else {
                output::write_text(&io.out, &scan.to_csv())
            }
        }
        Command::Crosstalk {
            io,
            basis,
            ell_max,
            alpha,
            beta,
            column_normalize,
            quadrature,
            tol,
        } => {
            let mut cfg = load_config(&io)?;
            if let (Some(a), Some(b)) = (alpha, beta) {
                cfg = cfg.with_alpha_beta(a, b);
            } else if let Some(a) = alpha {
                cfg = cfg.with_alpha_beta(a, cfg.beta());
            } else if let Some(b) = beta {
                cfg = cfg.with_alpha_beta(cfg.alpha(), b);
            }
            let grid = cfg.grid()?;
            let family = parse_basis_family(&basis)?;
            let modes = family.modes(ell_max, cfg.w_0);
            let kernel = if quadrature {
                ChannelKernel::Quadrature(QuadratureKernel::new(&cfg, &grid, tol, PmApprox::Sinc)?)
            } else {
                kernel_thin(&cfg)
            };
            let norm = if column_normalize {
                Normalization::PerPreparedColumn
            } else {
                Normalization::Raw
            };
            let m = crosstalk_matrix(&kernel, &modes, &modes, &grid, norm)?;
            let mut t = Table::new(&["prepared", "detected", "probability"]);
            for (j, pl) in m.prepared.iter().enumerate() {
                for (i, dl) in m.detected.iter().enumerate() {
                    t.push(vec![pl.clone(), dl.clone(), m.p[[i, j]].to_string()]);
                }
            }
            t.emit_opt(&io.out, io.json)
        }
        Command::Probe { io, purity, dim, n_list, ell_max } => {
            let n_list: Vec<u32> = ranges::parse_list(&n_list)?
                .into_iter()
                .map(|v| v as u32)
                .collect();
            let (chan, d) = match dim {
                Some(d) => (DiagonalChannel::flat(d)?, d),
                None => {
                    let cfg = load_config(&io)?;
                    let grid = cfg.grid()?;
                    let modes: Vec<ModeSpec> = (-ell_max..=ell_max)
                        .map(|ell| ModeSpec::PhaseVortex { ell, waist: cfg.w_0 })
                        .collect();
                    let m = crosstalk_matrix(
                        &kernel_thin(&cfg),
                        &modes,
                        &modes,
                        &grid,
                        Normalization::Raw,
                    )?;
                    let ells: Vec<i32> = (-ell_max..=ell_max).collect();
                    let diag = m.diagonal()?;
                    let k = teleportsim_core::capacity::schmidt_from_spectrum(&diag)?;
                    (
                        DiagonalChannel::from_crosstalk_diagonal(&ells, &diag)?,
                        k.round().max(2.0) as usize,
                    )
                }
            };
            let vis = probe_visibilities(&chan, &n_list, purity, d)?;
            let fit = fit_purity_dimension(
                &n_list.iter().copied().zip(vis.iter().copied()).collect::<Vec<_>>(),
            )?;
            let mut t = Table::new(&["n", "visibility", "p_hat", "k_hat", "residual"]);
            for (n, v) in n_list.iter().zip(&vis) {
                t.push(vec![
                    n.to_string(),
                    v.to_string(),
                    fit.p_hat.to_string(),
                    fit.k_hat.to_string(),
                    fit.residual.to_string(),
                ]);
            }
            if fit.indeterminate {
                eprintln!("warning: visibilities at the noise floor; dimension indeterminate");
            }
            t.emit_opt(&io.out, io.json)
        }
        Command::Tomo { io, d, scheme, state, purity, counts, accidental, poisson, method } => {
            let scheme = match scheme.as_str() {
                "mub" => ProjectorScheme::MubComplete,
                "pairwise" => ProjectorScheme::PairwiseOvercomplete,
                other => return Err(Error::Parse(format!("unknown scheme `{other}`"))),
            };
            let method = match method.as_str() {
                "mle" => ReconstructionMethod::MaxLikelihood,
                "linear" => ReconstructionMethod::LinearInversion,
                other => return Err(Error::Parse(format!("unknown method `{other}`"))),
            };
            let amps: Vec<C64> = state
                .split(',')
                .map(modespec::parse_complex)
                .collect::<Result<_, _>>()?;
            if amps.len() != d {
                return Err(Error::Parse(format!(
                    "state has {} amplitudes, expected {d}",
                    amps.len()
                )));
            }
            let target = StateVector::new(amps)?;
            let rho = DensityMatrix::isotropic(&target, purity)?;
            let projs = projector_set(d, scheme)?;
            let seed = poisson.then_some(io.seed);
            let recs = simulate_counts(&rho, &projs, counts, accidental, seed)?;
            let rec = reconstruct(&recs, d, method)?;
            let fid = fidelity_mixed(&rec, &target)?;
            let td = rec.trace_distance(&rho)?;
            eprintln!("fidelity to target: {fid:.6}; trace distance to truth: {td:.3e}");
            let (re, im) = rec.to_csv_pair();
            match &io.out {
                Some(path) => {
                    if io.json {
                        let mut t = Table::new(&["i", "j", "re", "im"]);
                        for i in 0..d {
                            for j in 0..d {
                                let v = rec.entries()[[i, j]];
                                t.push(vec![
                                    i.to_string(),
                                    j.to_string(),
                                    v.re.to_string(),
                                    v.im.to_string(),
                                ]);
                            }
                        }
                        t.emit_opt(&Some(path.clone()), true)?;
                    } else {
                        let stem = path.to_string_lossy();
                        std::fs::write(format!("{stem}.re.csv"), re)?;
                        std::fs::write(format!("{stem}.im.csv"), im)?;
                    }
                    Ok(())
                }
                None => {
                    print!("{re}");
                    print!("{im}");
                    Ok(())
                }
            }
        }
        Command::Teleport { io, input, basis, flatten, floor } => {
            let cfg = load_config(&io)?;
            let input = modespec::parse_mode(&input, cfg.w_0)?;
            let basis: Vec<ModeSpec> = basis
                .split(';')
                .map(|s| modespec::parse_mode(s.trim(), cfg.w_0))
                .collect::<Result<_, _>>()?;
            let run = teleport_state(
                &cfg,
                &input,
                &basis,
                TeleportOptions { accidental_floor: floor, flatten },
            )?;
            let mut t = Table::new(&["mode", "prepared", "detected", "similarity", "fidelity"]);
            for (k, label) in run.labels.iter().enumerate() {
                t.push(vec![
                    label.clone(),
                    run.prepared[k].to_string(),
                    run.detected[k].to_string(),
                    run.similarity.to_string(),
                    run.fidelity.to_string(),
                ]);
            }
            eprintln!("similarity: {:.6}, fidelity: {:.6}", run.similarity, run.fidelity);
            t.emit_opt(&io.out, io.json)
        }
        Command::Efficiency { io, chi2_pm_v, flux } => {
            let cfg = load_config(&io)?;
            let two_pi_c = 2.0 * std::f64::consts::PI * 299_792_458.0;
            let params = EfficiencyParams {
                chi2: chi2_pm_v * 1e-12,
                flux_per_area: flux,
                omega_p: two_pi_c / cfg.lambda_p,
                omega_b: two_pi_c / cfg.lambda_b,
                omega_c: two_pi_c / cfg.lambda_c,
                n_p: cfg.n_p,
                n_b: cfg.n_b,
                n_c: cfg.n_c,
            };
            let sigma = conversion_sigma(&params)?;
            println!("{sigma}");
            let mut t = Table::new(&["chi2_pm_v", "flux", "sigma"]);
            t.push(vec![chi2_pm_v.to_string(), flux.to_string(), sigma.to_string()]);
            t.emit_opt(&io.out, io.json)
        }
        Command::Selftest { io } => {
            let report = selftest::run(io.seed)?;
            let body = report.render();
            print!("{body}");
            if let Some(path) = &io.out {
                std::fs::write(path, &body)?;
            }
            if report.all_passed() {
                Ok(())
            } else {
                Err(Error::NonConvergence { iterations: 0, residual: f64::NAN })
            }
        }
        Command::Figures { io, purity, outdir } => {
            let cfg = load_config(&io)?;
            let paths = figures::emit_all(&cfg, purity, &outdir)?;
            for p in paths {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}
