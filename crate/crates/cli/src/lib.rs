//! Command-line driver: resolves a [`RunConfig`], runs one command and writes
//! its rows as CSV or as a JSON envelope `{tool_version, command, params, rows}`.

pub mod config;
pub mod output;

use std::path::PathBuf;

use log::{info, warn};
use nhbose_core::algebra::verify_identities;
use nhbose_core::eigensystem::{expand_amplitudes, norm_growth, pointwise_gram, InnerProductKind, ModeFunction, ModeSuperposition};
use nhbose_core::fock::{
    accretivity_check, build_matrix, numerical_range_boundary, pseudospectrum, spectrum_with_closed_forms, theta_grid,
    MatrixKind,
};
use nhbose_core::wkb::{wkb_integrals, QuadraticSummand};
use num_complex::Complex64;
use thiserror::Error;

pub use config::{Cli, Command, GammaSpec, OutputFormat, RunConfig, Summand};
use output::{
    AccretiveRow, AmplitudeRow, BiorthRow, NormRow, NumrangeRow, PseudoRow, Rows, SpectrumRow, WkbOutRow,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid parameter: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] nhbose_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Validation(_) => 2,
            CliError::Core(e) if e.is_convergence_failure() => 3,
            CliError::Core(_) => 2,
            CliError::Io { .. } | CliError::Serialize(_) => 1,
        }
    }
}

/// Computes the rows of one command without writing anything.
pub fn compute(cfg: &RunConfig) -> Result<Rows, CliError> {
    let gamma = cfg.gamma_value();
    if cfg.command.is_spectral() && gamma.abs() >= 1.0 {
        warn!("|γ| = {} ≥ 1: the relative-bound argument for the spectral claims no longer applies", gamma.abs());
    }
    let rows = match cfg.command {
        Command::VerifyAlgebra => {
            if let Some(g) = cfg.gamma.value() {
                info!("identities are verified exactly over the coefficient ring, so they hold at γ = {g} as well");
            }
            Rows::Identities(verify_identities()?.rows())
        }
        Command::Spectrum => {
            let rows = spectrum_with_closed_forms(cfg.truncation, gamma)?;
            let complex = rows.iter().filter(|r| r.im != 0.0).count();
            if complex > 0 {
                info!("{complex} of {} eigenvalues are off the real axis", rows.len());
            }
            Rows::Spectrum(
                rows.into_iter()
                    .map(|r| SpectrumRow {
                        index: r.index,
                        re: r.re,
                        im: r.im,
                        closed_form: r.closed_form,
                        abs_err: r.abs_err,
                    })
                    .collect(),
            )
        }
        Command::Numrange => {
            let thetas = theta_grid(cfg.theta_steps, cfg.theta_max);
            let b = numerical_range_boundary(cfg.truncation, gamma, &thetas)?;
            if !b.skipped.is_empty() {
                info!(
                    "{} angles skipped: no real support line for |θ| ≥ arctan(1/|γ|)",
                    b.skipped.len()
                );
            }
            Rows::Numrange(
                b.points
                    .into_iter()
                    .map(|p| NumrangeRow {
                        theta: p.theta,
                        e_numeric: p.e_numeric,
                        e_closed: p.e_closed,
                        x: p.x,
                        y: p.y,
                        envelope_y: p.envelope_y,
                    })
                    .collect(),
            )
        }
        Command::Pseudo => {
            let a = build_matrix(MatrixKind::H, cfg.truncation, gamma)?;
            let grid = pseudospectrum(&a, &cfg.grid)?;
            let missing = grid.sigma_min.iter().filter(|s| s.is_none()).count();
            if missing > 0 {
                warn!("{missing} grid points have no σ_min (solver failure)");
            }
            Rows::Pseudo(
                grid.points
                    .iter()
                    .zip(&grid.sigma_min)
                    .map(|(z, s)| PseudoRow {
                        re: z.re,
                        im: z.im,
                        sigma_min: *s,
                    })
                    .collect(),
            )
        }
        Command::Biorth => {
            let idx: Vec<(usize, usize)> = (0..=cfg.cutoff).flat_map(|m| (0..=cfg.cutoff).map(move |n| (m, n))).collect();
            let psi: Vec<ModeFunction> = idx.iter().map(|&(m, n)| ModeFunction::psi(m, n, gamma)).collect();
            let tilde: Vec<ModeFunction> = idx.iter().map(|&(m, n)| ModeFunction::psi_tilde(m, n, gamma)).collect();
            let gram = pointwise_gram(&psi, &tilde, InnerProductKind::Flat, cfg.nodes)?;
            let mut rows = Vec::with_capacity(idx.len() * idx.len());
            for (&(m, n), row) in idx.iter().zip(&gram) {
                for (&(p, q), &value) in idx.iter().zip(row) {
                    rows.push(BiorthRow { m, n, p, q, value });
                }
            }
            Rows::Biorth(rows)
        }
        Command::Norms => Rows::Norms(
            norm_growth(gamma, cfg.cutoff, cfg.nodes)?
                .into_iter()
                .enumerate()
                .map(|(m, norm_sq)| NormRow { m, n: m, norm_sq })
                .collect(),
        ),
        Command::Accretive => {
            let zs: Vec<Complex64> = cfg.points.iter().map(|z| Complex64::new(z[0], z[1])).collect();
            let report = accretivity_check(cfg.truncation, gamma, &zs, cfg.samples, cfg.seed)?;
            if !report.all_hold() {
                warn!("accretivity check failed for at least one sample");
            }
            let mut rows: Vec<AccretiveRow> = report
                .resolvent
                .iter()
                .map(|r| AccretiveRow {
                    kind: "resolvent",
                    re: r.re,
                    im: r.im,
                    sigma_min: Some(r.sigma_min),
                    bound: Some(r.bound),
                    holds: r.holds,
                })
                .collect();
            rows.extend(report.rayleigh.iter().map(|r| AccretiveRow {
                kind: "rayleigh",
                re: r.re,
                im: r.im,
                sigma_min: None,
                bound: None,
                holds: r.inside,
            }));
            Rows::Accretive(rows)
        }
        Command::Wkb => {
            let s = match cfg.summand {
                Summand::X => QuadraticSummand::capital(cfg.energy)?,
                Summand::Lower => QuadraticSummand::lower(cfg.energy)?,
            };
            Rows::Wkb(
                wkb_integrals(&s, &cfg.hbar)?
                    .into_iter()
                    .map(|r| WkbOutRow {
                        hbar: r.hbar,
                        i1: r.i1,
                        i2: r.i2,
                        i3: r.i3,
                    })
                    .collect(),
            )
        }
        Command::Expand => {
            let combo = ModeSuperposition {
                gamma,
                terms: cfg.coeffs.clone(),
            };
            let exp = expand_amplitudes(|x, y| combo.eval(x, y), gamma, cfg.cutoff, cfg.nodes)?;
            info!(
                "⟪ψ,ψ⟫ = {:?}, normalization defect {:?}, residual {:?}",
                exp.norm_sq, exp.normalization_defect, exp.residual
            );
            Rows::Amplitudes(
                exp.amplitudes
                    .into_iter()
                    .map(|a| AmplitudeRow {
                        m: a.m,
                        n: a.n,
                        coefficient: a.coefficient,
                    })
                    .collect(),
            )
        }
    };
    Ok(rows)
}

/// Runs the command and writes its output; returns the rendered bytes.
pub fn run(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let rows = compute(cfg)?;
    let bytes = match cfg.format {
        OutputFormat::Csv => rows.to_csv()?,
        OutputFormat::Json => output::to_json(cfg, &rows)?,
    };
    if cfg.out.as_os_str() == "-" {
        use std::io::Write;
        std::io::stdout().write_all(&bytes).map_err(|e| CliError::Io {
            path: cfg.out.clone(),
            source: e,
        })?;
    } else {
        if let Some(dir) = cfg.out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
                path: dir.to_path_buf(),
                source: e,
            })?;
        }
        std::fs::write(&cfg.out, &bytes).map_err(|e| CliError::Io {
            path: cfg.out.clone(),
            source: e,
        })?;
    }
    Ok(bytes)
}
