//! Command-line front end: construct classified surfaces, run the
//! verification battery, and probe ambient admissibility.
//!
//! Exit codes: 0 = success / all checks pass, 1 = a verification check
//! failed, 2 = invalid or inadmissible configuration.

mod config;
mod mesh;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{parse_grid_override, RunConfig};
use mesh::MeshGrid;
use rwsurf_core::ambient::constant_curvature_defect;
use rwsurf_core::families::{self, FamilySpec};
use rwsurf_core::surface::Immersion;
use rwsurf_core::verify::{self, CheckKind, GridSpec, VerifyCtx};

#[derive(Parser)]
#[command(
    name = "rwsurf",
    about = "Surfaces with positive relative nullity in Robertson-Walker space-times: construction and numeric verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Grid override, e.g. 33x33.
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Construct the configured family and export its mesh.
    Construct {
        #[command(flatten)]
        common: Common,
        /// Normal perturbation amplitude applied to the constructed surface.
        #[arg(long)]
        perturb: Option<f64>,
    },
    /// Run the verification battery on the configured family.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Overrides every tolerance the config leaves unset.
        #[arg(long)]
        tol: Option<f64>,
        /// Normal perturbation amplitude applied before checking.
        #[arg(long)]
        perturb: Option<f64>,
        /// Comma-separated subset of checks
        /// (prn,frame,theta,codazzi,ricci,closed-form,curvature,ambient).
        #[arg(long)]
        checks: Option<String>,
        /// Seed of the randomized samplers.
        #[arg(long)]
        seed: Option<u64>,
        /// Verify a previously exported CSV mesh instead of the analytic
        /// surface (relative-nullity check only, grid-resolution stencils).
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
    /// Sample the constant-curvature defect of the configured ambient.
    AmbientCheck {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Construct { common, perturb } => cmd_construct(&common, perturb),
        Command::Verify {
            common,
            tol,
            perturb,
            checks,
            seed,
            mesh,
        } => cmd_verify(&common, tol, perturb, checks, seed, mesh),
        Command::AmbientCheck { common } => cmd_ambient_check(&common),
    }
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(text) = &common.grid {
        let (nu, nv) = parse_grid_override(text)?;
        cfg.grid.nu = nu;
        cfg.grid.nv = nv;
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg
        .output
        .as_ref()
        .and_then(|o| o.dir.clone())
        .map(PathBuf::from)
        .unwrap_or_else(|| common.out.clone());
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    Ok(dir)
}

/// Validates and constructs; inadmissible specs print their diagnostics and
/// exit with code 2.
fn admit(spec: &FamilySpec) -> Result<Result<Immersion, ExitCode>> {
    let diagnostics = families::validate_spec(spec);
    if !diagnostics.is_empty() {
        eprintln!("configuration is inadmissible:");
        for d in &diagnostics {
            eprintln!("  - {}", d.message);
        }
        return Ok(Err(ExitCode::from(2)));
    }
    Ok(Ok(families::construct(spec)?))
}

fn cmd_construct(common: &Common, perturb: Option<f64>) -> Result<ExitCode> {
    let cfg = load(common)?;
    let spec = cfg.family_spec()?;
    let imm = match admit(&spec)? {
        Ok(imm) => imm,
        Err(code) => return Ok(code),
    };
    let warp = spec.ambient_warping()?;
    let imm = match perturb {
        Some(eps) => families::perturb_normal(&warp, &imm, eps),
        None => imm,
    };

    let us = linspace(cfg.grid.u_range, cfg.grid.nu);
    let vs = linspace(cfg.grid.v_range, cfg.grid.nv);
    let mut points = Vec::with_capacity(us.len() * vs.len());
    for &u in &us {
        for &v in &vs {
            points.push(imm.point(u, v)?);
        }
    }
    let grid = MeshGrid {
        us,
        vs,
        form: cfg.space_form()?,
        points,
    };

    let dir = out_dir(common, &cfg)?;
    let csv_path = dir.join("mesh.csv");
    mesh::write_csv(&csv_path, &grid)?;
    println!("wrote {}", csv_path.display());
    let formats = cfg
        .output
        .as_ref()
        .map(|o| o.formats.clone())
        .unwrap_or_default();
    if formats.iter().any(|f| f.eq_ignore_ascii_case("obj")) {
        let obj_path = dir.join("mesh.obj");
        mesh::write_obj(&obj_path, &grid)?;
        println!("wrote {}", obj_path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(
    common: &Common,
    tol: Option<f64>,
    perturb: Option<f64>,
    checks: Option<String>,
    seed: Option<u64>,
    mesh_path: Option<PathBuf>,
) -> Result<ExitCode> {
    let cfg = load(common)?;
    let dir = out_dir(common, &cfg)?;

    if let Some(path) = mesh_path {
        return verify_mesh(&cfg, &dir, &path, tol);
    }

    let spec = cfg.family_spec()?;
    let imm = match admit(&spec)? {
        Ok(imm) => imm,
        Err(code) => return Ok(code),
    };
    let warp = spec.ambient_warping()?;
    let imm = match perturb {
        Some(eps) => families::perturb_normal(&warp, &imm, eps),
        None => imm,
    };
    let ctx = VerifyCtx {
        warp: &warp,
        immersion: &imm,
    };
    let grid = GridSpec::shrunk(
        cfg.grid.u_range,
        cfg.grid.v_range,
        cfg.grid.nu,
        cfg.grid.nv,
        4.0,
    );
    let selected: Vec<CheckKind> = match checks {
        Some(list) => list
            .split(',')
            .map(CheckKind::parse)
            .collect::<Result<Vec<_>, _>>()?,
        None => CheckKind::ALL.to_vec(),
    };
    let tolerances = cfg.tolerances.clone().unwrap_or_default().resolve(tol);
    let seed = seed.or(cfg.seed).unwrap_or(0);

    let report = verify::run_battery(&spec, &ctx, &grid, &selected, &tolerances, seed);
    for check in &report.checks {
        print_check_line(check);
    }
    let path = dir.join("report.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
    println!("wrote {}", path.display());
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn verify_mesh(cfg: &RunConfig, dir: &Path, path: &Path, tol: Option<f64>) -> Result<ExitCode> {
    let warp = cfg.warping()?;
    let grid = mesh::read_csv(path, cfg.space_form()?)?;
    let (report, _) = mesh::mesh_prn_check(&warp, &grid, tol.unwrap_or(mesh::MESH_PRN_TOL))?;
    print_check_line(&report);
    let out = verify::VerificationReport::assemble(vec![report], 0);
    let report_path = dir.join("report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&out)?)?;
    println!("wrote {}", report_path.display());
    Ok(if out.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_ambient_check(common: &Common) -> Result<ExitCode> {
    let cfg = load(common)?;
    let warp = cfg.warping()?;
    let form = cfg.space_form()?;
    let (lo, hi) = warp.interval();
    let samples = 1024usize;
    let mut zeros: Vec<f64> = Vec::new();
    let mut sign_changes: Vec<f64> = Vec::new();
    let mut min_abs = f64::INFINITY;
    let mut all_zero = true;
    let mut prev: Option<f64> = None;
    for i in 0..=samples {
        let t = lo + (hi - lo) * i as f64 / samples as f64;
        let d = constant_curvature_defect(&warp, form, t);
        min_abs = min_abs.min(d.abs());
        if d.abs() <= 1e-12 {
            zeros.push(t);
        } else {
            all_zero = false;
        }
        if let Some(p) = prev {
            if p * d < 0.0 {
                sign_changes.push(t);
            }
        }
        prev = Some(d);
    }
    let classification = if all_zero {
        "constant curvature everywhere".to_string()
    } else if zeros.is_empty() && sign_changes.is_empty() {
        "defect nonzero: ambient admissible".to_string()
    } else {
        format!(
            "defect vanishes on the sampled grid ({} zeros, {} sign changes)",
            zeros.len(),
            sign_changes.len()
        )
    };
    println!("{classification}");
    if !zeros.is_empty() && !all_zero {
        let shown: Vec<String> = zeros.iter().take(10).map(|t| format!("{t:.6}")).collect();
        println!("zero set near: {}", shown.join(", "));
    }

    let dir = out_dir(common, &cfg)?;
    let json = serde_json::json!({
        "classification": classification,
        "interval": [lo, hi],
        "samples": samples + 1,
        "min_abs_defect": min_abs,
        "zeros": zeros,
        "sign_changes": sign_changes,
    });
    let path = dir.join("ambient.json");
    std::fs::write(&path, serde_json::to_string_pretty(&json)?)?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn print_check_line(check: &verify::CheckReport) {
    let status = if check.pass { "PASS" } else { "FAIL" };
    println!(
        "[{status}] {name} max_residual={res:.3e} tol={tol:.1e} skipped={skipped}/{total}",
        name = check.name,
        res = check.max_residual,
        tol = check.tolerance,
        skipped = check.points_skipped,
        total = check.points_total,
    );
}

fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (range.0 + range.1)];
    }
    (0..n)
        .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
        .collect()
}
