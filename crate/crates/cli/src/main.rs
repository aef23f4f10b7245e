//! `qsl`: tables, saturating systems and verification reports.
//!
//! Exit codes: 0 success, 1 a verification failed, 2 bad usage or input.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use qsl_core::acceptance;
use qsl_core::alpha::{alpha_table, alpha_value, DEFAULT_TOL};
use qsl_core::bounds::bounds_table;
use qsl_core::extremal::extreme_value_scan;
use qsl_core::first_passage::{default_t_max, verify_bounds, VerifyReport};
use qsl_core::geometry::{
    aa_phase_mod_2pi, bargmann_phase, dynamical_phase, hamiltonian_curve, ruled_seifert_surface, sigma_closure,
    symplectic_area, wrap_angle, DiscretizedCurve,
};
use qsl_core::io::{to_json_string, write_text, SystemFile};
use qsl_core::oracle::{minimize_over_m, OracleConfig, OracleResult};
use qsl_core::quantum::{energy_stats, EnergyStats};
use qsl_core::saturators::{saturating_system, SaturatorKind};
use qsl_core::QslError;

#[derive(Parser, Debug)]
#[command(name = "qsl", version, about = "Quantum speed limits for pure states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// CSV of alpha(delta) with its minimizer: delta,alpha,z_star,r_star,arccos_sqrt_delta
    AlphaTable {
        #[arg(long, default_value_t = 0.0)]
        delta_min: f64,
        #[arg(long, default_value_t = 1.0)]
        delta_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CSV of every bound on a fidelity grid, for unit energy statistics or
    /// those of a system file
    BoundsTable {
        #[arg(long, default_value_t = 0.0)]
        delta_min: f64,
        #[arg(long, default_value_t = 1.0)]
        delta_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// JSON system that saturates one bound at the target fidelity
    MakeSaturator {
        /// ml, dual or mt
        #[arg(long)]
        kind: SaturatorKind,
        #[arg(long)]
        delta: f64,
        /// Energy gap between the two occupied levels
        #[arg(long, default_value_t = 1.0)]
        gap: f64,
        /// Lowest occupied energy
        #[arg(long, default_value_t = 0.0)]
        eps0: f64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measures the first passage time of a system and compares it with
    /// every bound. The scan keeps at least 32 samples per period of the
    /// fastest occupied frequency; the default horizon is 4 pi over the
    /// smallest level gap.
    Verify {
        #[arg(long)]
        system: PathBuf,
        /// Target fidelity; defaults to the one stored in the system file
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dynamical phase, ruled-surface area and closure phases of the
    /// evolution curve relative to one eigenspace
    GeometryCheck {
        #[arg(long)]
        system: PathBuf,
        /// Index of the eigenvalue (ascending) whose eigenspace fixes the gauge
        #[arg(long)]
        sigma_level: usize,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 2049)]
        samples: usize,
        #[arg(long, default_value_t = 256)]
        s_nodes: usize,
        /// Also write the sampled curve as CSV: t,re_0,im_0,...
        #[arg(long)]
        curve_csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multi-start minimization of the spectral problem, compared with alpha
    Oracle {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = OracleConfig::default().starts)]
        starts: usize,
        #[arg(long, default_value_t = OracleConfig::default().seed)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CSV of the positive extreme value over radii: r,positive_extreme_value,running_min
    Extremal {
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1001)]
        r_grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the acceptance criteria and prints one line per criterion
    Selftest {
        /// Also write the reports as JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Verification(String),
}

impl From<QslError> for Failure {
    fn from(e: QslError) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => Ok(write_text(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn configure_threads() -> Outcome {
    let Ok(v) = std::env::var("QSL_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| Failure::Usage(format!("QSL_THREADS must be a positive integer, got {v:?}")))?;
    if n == 0 {
        return Err(Failure::Usage("QSL_THREADS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|_| run(cli.command));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::AlphaTable { delta_min, delta_max, points, tol, out } => {
            let rows = alpha_table(delta_min, delta_max, points, tol)?;
            emit(out.as_deref(), &csv("delta,alpha,z_star,r_star,arccos_sqrt_delta", rows.iter().map(|r| r.to_vec())))
        }
        Command::BoundsTable { delta_min, delta_max, points, system, out } => {
            let stats = match system {
                Some(p) => {
                    let (h, psi) = SystemFile::read(&p)?.system()?;
                    energy_stats(&h, &psi)?
                }
                None => EnergyStats::unit(),
            };
            let rows = bounds_table(delta_min, delta_max, points, &stats, DEFAULT_TOL)?;
            let header = "delta,tau_mt,tau_ml,tau_ml_dual,tau_max,tau1,tau2,tau3";
            emit(
                out.as_deref(),
                &csv(header, rows.iter().map(|r| std::iter::once(r.delta).chain(r.named().iter().map(|x| x.1)).collect())),
            )
        }
        Command::MakeSaturator { kind, delta, gap, eps0, dim, out } => {
            let s = saturating_system(kind, delta, eps0, eps0 + gap, dim)?;
            emit(out.as_deref(), &SystemFile::from_saturator(&s)?.to_json())
        }
        Command::Verify { system, delta, t_max, out } => verify(&system, delta, t_max, out.as_deref()),
        Command::GeometryCheck { system, sigma_level, tau, samples, s_nodes, curve_csv, out } => {
            geometry_check(&system, sigma_level, tau, samples, s_nodes, curve_csv.as_deref(), out.as_deref())
        }
        Command::Oracle { dim, delta, starts, seed, out } => oracle(dim, delta, starts, seed, out.as_deref()),
        Command::Extremal { delta, r_grid, out } => {
            let rows = extreme_value_scan(delta, r_grid)?;
            if let Some(r) = rows.iter().find(|r| r[1] > 2.0 * std::f64::consts::PI) {
                eprintln!("warning: extreme value {} at r = {} exceeds 2 pi", r[1], r[0]);
            }
            emit(out.as_deref(), &csv("r,positive_extreme_value,running_min", rows.iter().map(|r| r.to_vec())))
        }
        Command::Selftest { out } => selftest(out.as_deref()),
    }
}

#[derive(Serialize)]
struct VerifyOutput {
    #[serde(flatten)]
    report: VerifyReport,
    declared_kind: Option<SaturatorKind>,
    predicted_time: Option<f64>,
    /// The declared bound is attained, when a kind is declared.
    declared_saturated: Option<bool>,
}

fn verify(path: &Path, delta: Option<f64>, t_max: Option<f64>, out: Option<&Path>) -> Outcome {
    let file = SystemFile::read(path)?;
    let (h, psi) = file.system()?;
    let delta = delta.or(file.delta).ok_or_else(|| Failure::Usage("no --delta given and none stored in the system file".into()))?;
    let t_max = match t_max {
        Some(t) => t,
        None => default_t_max(&h)?,
    };
    let report = verify_bounds(&h, &psi, delta, t_max)?;
    let declared_saturated = file.kind.map(|k| {
        report.saturates(match k {
            SaturatorKind::Ml => "tau_ml",
            SaturatorKind::MlDual => "tau_ml_dual",
            SaturatorKind::Mt => "tau_mt",
        })
    });
    let output = VerifyOutput { report, declared_kind: file.kind, predicted_time: file.predicted_time, declared_saturated };
    emit(out, &to_json_string(&output))?;
    if !output.report.all_hold {
        let broken: Vec<&str> =
            output.report.checks.iter().filter(|c| c.holds == Some(false)).map(|c| c.name.as_str()).collect();
        return Err(Failure::Verification(format!("bounds violated: {}", broken.join(", "))));
    }
    if declared_saturated == Some(false) {
        return Err(Failure::Verification("the declared saturator does not attain its bound".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct GeometryReport {
    sigma_level: usize,
    sigma_energy: f64,
    tau: f64,
    samples: usize,
    /// `tau (<H> - e_sigma)`.
    expected_phase: f64,
    dynamical_phase: f64,
    phase_relative_error: f64,
    /// Absent when the curve is not at constant distance from sigma.
    ruled_area: Option<f64>,
    area_error: Option<f64>,
    aa_phase_mod_2pi: Option<f64>,
    bargmann_phase: f64,
    expected_phase_mod_2pi: f64,
    fs_length: f64,
    mean_speed: f64,
    energy_uncertainty: f64,
    passed: bool,
}

const PHASE_TOL: f64 = 1e-6;
const AREA_TOL: f64 = 1e-4;

fn geometry_check(
    path: &Path,
    level: usize,
    tau: f64,
    samples: usize,
    s_nodes: usize,
    curve_csv: Option<&Path>,
    out: Option<&Path>,
) -> Outcome {
    let (h, psi) = SystemFile::read(path)?.system()?;
    if !(tau > 0.0) {
        return Err(Failure::Usage(format!("tau must be positive, got {tau}")));
    }
    let e_sigma = *h.energies().get(level).ok_or_else(|| Failure::Usage(format!("no level {level}")))?;
    let scale = h.energies().iter().fold(1.0_f64, |m, e| m.max(e.abs()));
    let sigma = h.eigenspace_component(level, &psi, 1e-10 * scale)?.projector();
    let stats = energy_stats(&h, &psi)?;
    let curve = hamiltonian_curve(&h, &psi, tau, samples)?;
    if let Some(p) = curve_csv {
        write_text(p, &curve_table(&curve))?;
    }
    let expected = tau * (stats.mean - e_sigma);
    let phase = dynamical_phase(&curve, &sigma)?;
    let rel = (phase - expected).abs() / expected.abs().max(tau * stats.uncertainty()).max(f64::MIN_POSITIVE);
    let closure = sigma_closure(&curve, &sigma, 101)?;
    let (area, aa) = match ruled_seifert_surface(&sigma, &curve, s_nodes) {
        Ok(s) => (Some(symplectic_area(&s)), Some(aa_phase_mod_2pi(&closure, s_nodes)?)),
        Err(QslError::NotOnGeodesicSphere(_)) => (None, None),
        Err(e) => return Err(e.into()),
    };
    let area_error = area.map(|a| (a + expected).abs());
    let bp = bargmann_phase(&closure);
    let expected_mod = wrap_angle(expected);
    let closure_ok = wrap_angle(bp - expected_mod).abs() < AREA_TOL
        && aa.is_none_or(|a| wrap_angle(a - expected_mod).abs() < AREA_TOL);
    let passed = rel < PHASE_TOL && area_error.is_none_or(|e| e < AREA_TOL) && closure_ok;
    let report = GeometryReport {
        sigma_level: level,
        sigma_energy: e_sigma,
        tau,
        samples,
        expected_phase: expected,
        dynamical_phase: phase,
        phase_relative_error: rel,
        ruled_area: area,
        area_error,
        aa_phase_mod_2pi: aa,
        bargmann_phase: bp,
        expected_phase_mod_2pi: expected_mod,
        fs_length: curve.fs_length(),
        mean_speed: curve.fs_length() / tau,
        energy_uncertainty: stats.uncertainty(),
        passed,
    };
    emit(out, &to_json_string(&report))?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification("geometric identities do not hold to tolerance".into()))
    }
}

fn curve_table(curve: &DiscretizedCurve) -> String {
    let mut header = String::from("t");
    for k in 0..curve.dim() {
        let _ = write!(header, ",re_{k},im_{k}");
    }
    csv(
        &header,
        curve.samples().iter().enumerate().map(|(i, s)| {
            let mut row = vec![curve.step() * i as f64];
            row.extend(s.amplitudes().iter().flat_map(|z| [z.re, z.im]));
            row
        }),
    )
}

#[derive(Serialize)]
struct OracleOutput {
    #[serde(flatten)]
    result: OracleResult,
    alpha: f64,
    difference: f64,
    passed: bool,
}

fn oracle(dim: usize, delta: f64, starts: usize, seed: u64, out: Option<&Path>) -> Outcome {
    let cfg = OracleConfig { starts, seed, ..OracleConfig::default() };
    let result = minimize_over_m(dim, delta, &cfg)?;
    let alpha = alpha_value(delta)?;
    let difference = result.min_value - alpha;
    let passed = difference.abs() < 1e-3
        && result.stationarity_residual < 1e-6
        && result.structure.ground_occupied
        && result.structure.nonzero_eps_equal;
    emit(out, &to_json_string(&OracleOutput { result, alpha, difference, passed }))?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification("oracle minimum disagrees with alpha or lacks the two-level structure".into()))
    }
}

fn selftest(out: Option<&Path>) -> Outcome {
    let reports = acceptance::run_all();
    for r in &reports {
        println!("{r}");
    }
    if let Some(p) = out {
        write_text(p, &to_json_string(&reports))?;
    }
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| format!("{:02}", r.id)).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("criteria failed: {}", failed.join(", "))))
    }
}
