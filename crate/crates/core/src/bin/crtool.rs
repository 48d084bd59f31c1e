use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crtool::cr::{a3_matrix, determinant, CrError, CrFrame, Thresholds, UmbilicFlag};
use crtool::jet::JetError;
use crtool::output::{write_csv, write_json};
use crtool::scanner::{
    evaluate_point, find_umbilics, fit_scaling, scan_surface, ScanError, ScanOptions, ScanRecord,
};
use crtool::surface::{rho_jet, Family, FamilyKind, SurfaceError};
use crtool::verify::{run_suite, suite_criteria, VerifyOptions, SUITES};

/// Evaluates the CR umbilical obstruction det A3 on real hypersurfaces in C^2.
#[derive(Parser, Debug)]
#[command(name = "crtool", version)]
struct Cli {
    /// Worker threads for batch commands (default: all cores).
    #[arg(long, global = true, env = "CRTOOL_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the CR data at one point.
    Check {
        #[command(flatten)]
        family: FamilyArgs,
        /// Point as re z,im z,re w,im w.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
        point: [f64; 4],
        #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(6..=12))]
        degree: u8,
    },
    /// Evaluate sampled points of the hypersurface and write them as CSV or JSON.
    Scan {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        count: u64,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run acceptance checks.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        /// Slope tolerance for the scaling check.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Search for umbilical points by multistart minimization.
    FindUmbilics {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
        starts: u64,
        /// Largest normalized residual accepted as a candidate.
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fit log|det A3| against log eps.
    Scaling {
        #[command(flatten)]
        family: FamilyArgs,
        /// Comma-separated eps values (at least 3 distinct).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        eps_list: Vec<f64>,
        /// Sampled points per eps.
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        count: u64,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args, Debug)]
struct FamilyArgs {
    #[arg(long, value_enum)]
    family: FamilyName,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    /// Ellipsoid coefficients a,b,c,d.
    #[arg(long, value_parser = parse_params)]
    params: Option<[f64; 4]>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args, Debug)]
struct CommonArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(6..=12))]
    degree: u8,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyName {
    FlatTube,
    LogTube,
    Sphere,
    Ellipsoid,
    CartanMu,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn parse_reals<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err("values must be finite".into());
    }
    values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

fn parse_point(s: &str) -> Result<[f64; 4], String> {
    parse_reals::<4>(s)
}

fn parse_params(s: &str) -> Result<[f64; 4], String> {
    parse_reals::<4>(s)
}

/// Exit status 2: bad usage or a point/parameter outside the domain.
/// Exit status 1: a computation failed or a check did not hold.
enum Failure {
    Usage(String),
    Compute(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Compute(format!("i/o error: {e}"))
    }
}

impl From<crtool::output::OutputError> for Failure {
    fn from(e: crtool::output::OutputError) -> Self {
        Failure::Compute(format!("output error: {e}"))
    }
}

fn surface_failure(e: &SurfaceError) -> Failure {
    match e {
        SurfaceError::InvalidParameter(_)
        | SurfaceError::Domain { .. }
        | SurfaceError::InvalidLevel { .. }
        | SurfaceError::Jet(JetError::ZeroConstant { .. } | JetError::BranchCut { .. }) => {
            Failure::Usage(e.to_string())
        }
        _ => Failure::Compute(e.to_string()),
    }
}

fn cr_failure(e: &CrError) -> Failure {
    match e {
        CrError::Surface(s) => surface_failure(s),
        CrError::Jet(JetError::ZeroConstant { .. } | JetError::BranchCut { .. })
        | CrError::NotFlatTube(_)
        | CrError::NonPositiveRho(_) => Failure::Usage(e.to_string()),
        _ => Failure::Compute(e.to_string()),
    }
}

fn scan_failure(e: &ScanError) -> Failure {
    match e {
        ScanError::Precondition(_) => Failure::Usage(e.to_string()),
        ScanError::Surface(s) => surface_failure(s),
        ScanError::Cr(c) => cr_failure(c),
    }
}

impl FamilyArgs {
    fn kind(&self) -> FamilyKind {
        match self.family {
            FamilyName::FlatTube => FamilyKind::FlatTube,
            FamilyName::LogTube => FamilyKind::LogTube,
            FamilyName::Sphere => FamilyKind::Sphere,
            FamilyName::Ellipsoid => FamilyKind::Ellipsoid,
            FamilyName::CartanMu => FamilyKind::CartanMu,
        }
    }

    fn build(&self) -> Result<Family, Failure> {
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| Failure::Usage(format!("--family {} requires {flag}", self.kind())))
        };
        let fam = match self.family {
            FamilyName::FlatTube => Family::flat_tube(need(self.eps, "--eps")?),
            FamilyName::LogTube => Family::log_tube(need(self.eps, "--eps")?),
            FamilyName::Sphere => Family::sphere(need(self.r, "--r")?),
            FamilyName::Ellipsoid => {
                let [a, b, c, d] = self.params.ok_or_else(|| {
                    Failure::Usage("--family ellipsoid requires --params a,b,c,d".into())
                })?;
                Family::ellipsoid(a, b, c, d)
            }
            FamilyName::CartanMu => Family::cartan_mu(need(self.alpha, "--alpha")?),
        };
        fam.map_err(|e| surface_failure(&e))
    }
}

fn fmt_c(c: Complex64) -> String {
    format!("{:.16e} {:+.16e}i", c.re, c.im)
}

fn cmd_check(
    fam_args: &FamilyArgs,
    point: [f64; 4],
    degree: u8,
    out: &mut impl Write,
) -> Result<(), Failure> {
    let family = fam_args.build()?;
    let z = Complex64::new(point[0], point[1]);
    let w = Complex64::new(point[2], point[3]);
    let degree = degree as usize;
    let rho = rho_jet(&family, z, w, degree).map_err(|e| surface_failure(&e))?;
    let frame = CrFrame::from_rho(&rho).map_err(|e| cr_failure(&e))?;
    let m = a3_matrix(&family, z, w, degree).map_err(|e| cr_failure(&e))?;
    let flag = Thresholds::default().classify(m.normalized_residual());
    writeln!(out, "family: {}", family.kind())?;
    writeln!(out, "point: z = {}, w = {}", fmt_c(z), fmt_c(w))?;
    writeln!(out, "rho: {:.16e}", frame.rho)?;
    writeln!(out, "rho_resid: {:.16e}", frame.rho - family.level())?;
    writeln!(out, "levi: {:.16e}", frame.levi)?;
    writeln!(out, "hess_LL: {}", fmt_c(frame.hess_ll))?;
    writeln!(out, "det_a3: {}", fmt_c(m.det()))?;
    if let Family::FlatTube { .. } = family {
        writeln!(out, "det_b: {}", fmt_c(determinant(&m.b_block())))?;
    }
    writeln!(out, "norm_resid: {:.16e}", m.normalized_residual())?;
    writeln!(out, "flag: {flag}")?;
    if flag == UmbilicFlag::Poisoned {
        return Err(Failure::Compute("non-finite result".into()));
    }
    Ok(())
}

fn write_records(
    records: &[ScanRecord],
    output: &OutputArgs,
    stdout: &mut impl Write,
) -> Result<(), Failure> {
    match &output.out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            match output.format {
                Format::Csv => write_csv(records, &mut w)?,
                Format::Json => write_json(records, &mut w)?,
            }
            w.flush()?;
        }
        None => match output.format {
            Format::Csv => write_csv(records, stdout)?,
            Format::Json => write_json(records, stdout)?,
        },
    }
    Ok(())
}

fn poisoned_failure(records: &[ScanRecord]) -> Result<(), Failure> {
    let bad: Vec<&ScanRecord> = records
        .iter()
        .filter(|r| r.flag == UmbilicFlag::Poisoned)
        .collect();
    match bad.first() {
        None => Ok(()),
        Some(first) => Err(Failure::Compute(format!(
            "{} poisoned record(s); first: {}",
            bad.len(),
            first.error.as_deref().unwrap_or("non-finite value")
        ))),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Compute(format!("cannot start thread pool: {e}")))?;
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Check {
            family,
            point,
            degree,
        } => cmd_check(&family, point, degree, &mut out),
        Command::Scan {
            family,
            count,
            common,
            output,
        } => {
            let fam = family.build()?;
            let opts = ScanOptions {
                degree: common.degree as usize,
                ..ScanOptions::default()
            };
            let records = scan_surface(&fam, fam.level(), count as usize, common.seed, &opts)
                .map_err(|e| scan_failure(&e))?;
            write_records(&records, &output, &mut out)?;
            poisoned_failure(&records)
        }
        Command::Verify { suite, tol, seed } => {
            if suite_criteria(&suite).is_none() {
                let names: Vec<&str> = SUITES.iter().map(|(n, _)| *n).collect();
                return Err(Failure::Usage(format!(
                    "unknown suite `{suite}`; expected one of: {}",
                    names.join(", ")
                )));
            }
            if let Some(t) = tol {
                if !(t.is_finite() && t > 0.0) {
                    return Err(Failure::Usage("--tol must be a positive number".into()));
                }
            }
            let reports = run_suite(&suite, &VerifyOptions { seed, tol }).unwrap_or_default();
            for r in &reports {
                writeln!(out, "{r}")?;
            }
            let failed = reports.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                return Err(Failure::Compute(format!(
                    "{failed} of {} criteria failed",
                    reports.len()
                )));
            }
            Ok(())
        }
        Command::FindUmbilics {
            family,
            starts,
            tol,
            common,
            output,
        } => {
            let fam = family.build()?;
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(Failure::Usage("--tol must be a non-negative number".into()));
            }
            let opts = ScanOptions {
                degree: common.degree as usize,
                ..ScanOptions::default()
            };
            let search = find_umbilics(&fam, fam.level(), starts as usize, common.seed, tol, &opts)
                .map_err(|e| scan_failure(&e))?;
            let records: Vec<ScanRecord> = search
                .candidates
                .iter()
                .map(|c| evaluate_point(&fam, fam.level(), c.z, c.w, Some(c.param), &opts))
                .collect();
            let summary = format!(
                "starts: {}\nconverged: {}\ncandidates: {}",
                search.starts,
                search.converged,
                search.candidates.len()
            );
            if output.out.is_some() {
                writeln!(out, "{summary}")?;
                write_records(&records, &output, &mut out)?;
            } else {
                // keep stdout machine-readable: the summary goes to stderr
                eprintln!("{summary}");
                write_records(&records, &output, &mut out)?;
            }
            Ok(())
        }
        Command::Scaling {
            family,
            eps_list,
            count,
            common,
        } => {
            let kind = family.kind();
            if eps_list.is_empty() {
                return Err(Failure::Usage("--eps-list must not be empty".into()));
            }
            if let Some(bad) = eps_list.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
                return Err(Failure::Usage(format!(
                    "eps values must be positive, got {bad}"
                )));
            }
            let opts = ScanOptions {
                degree: common.degree as usize,
                ..ScanOptions::default()
            };
            let fit = fit_scaling(kind, &eps_list, count as usize, common.seed, &opts)
                .map_err(|e| scan_failure(&e))?;
            writeln!(out, "eps,mean_abs_det,spread")?;
            for ((e, d), s) in fit.eps_list.iter().zip(&fit.mean_abs_det).zip(&fit.spread) {
                writeln!(out, "{e:.16e},{d:.16e},{s:.16e}")?;
            }
            writeln!(out, "slope: {:.16e}", fit.slope)?;
            writeln!(out, "intercept: {:.16e}", fit.intercept)?;
            writeln!(out, "constant: {:.16e}", fit.constant)?;
            writeln!(out, "max_residual: {:.16e}", fit.max_residual)?;
            writeln!(out, "homogeneous: {}", fit.valid)?;
            if !fit.valid {
                return Err(Failure::Compute(
                    "per-eps spread of |det A3| exceeds 1e-8; fit is invalid".into(),
                ));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
