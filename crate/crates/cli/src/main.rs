mod config;
mod signal_io;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use framesmith::analysis::{
    approx_order_experiment, filterbank_analyze, filterbank_synthesize, mallat_l2_check, Pyramid,
    Signal,
};
use framesmith::builder::{build_dual, build_tight_with, FrameSystem};
use framesmith::verify::{verify_frame_system, Check, Report};
use framesmith::DilationMatrix;
use log::info;
use serde::{Deserialize, Serialize};

use config::Config;
use signal_io::{read_signal, write_signal};

/// Builds and checks compactly supported wavelet frames for integer dilation matrices.
#[derive(Parser)]
#[command(name = "framesmith", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prints `m = |det M|` and the canonical digit set.
    Digits {
        /// Row-major integer matrix, e.g. "[[1,1],[1,-1]]".
        #[arg(long)]
        matrix: String,
    },
    /// Builds a dual pair of frames.
    BuildDual(BuildArgs),
    /// Builds a tight frame.
    BuildTight(BuildArgs),
    /// Checks every identity of a frame system; exits with 1 on failure.
    Verify {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Replaces the tolerance of every numeric check.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Minimum grid per axis for the L2 bound of tight systems.
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Runs the periodic filter bank on a raw signal.
    Transform {
        #[arg(short, long)]
        input: PathBuf,
        /// Raw f64 signal (forward) or pyramid directory (with --inverse).
        #[arg(long)]
        signal: PathBuf,
        /// Output directory (forward) or raw signal path (with --inverse).
        #[arg(short, long)]
        output: PathBuf,
        /// Number of levels; defaults to the one in the signal sidecar.
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        inverse: bool,
    },
    /// Measures the decay exponent of the scaling-space approximation error.
    ApproxOrder {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Levels `j`, as `a..b` (inclusive) or a comma list.
        #[arg(long, default_value = "6..11")]
        levels: String,
        /// Sampling level `K`; samples sit on `M^{-K} Z^d`.
        #[arg(long)]
        fine: Option<u32>,
        #[arg(long, value_enum, default_value_t = TestFunction::Smooth)]
        function: TestFunction,
    },
    /// Writes a frame system, its masks or its polyphase matrices as canonical JSON.
    Export {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ExportFormat::System)]
        format: ExportFormat,
    },
}

#[derive(clap::Args)]
struct BuildArgs {
    #[arg(short, long)]
    config: PathBuf,
    /// Overrides the config `output`; stdout when neither is given.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Seed for random free polynomials.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestFunction {
    /// A trigonometric polynomial of degree 2 per axis.
    Smooth,
    Constant,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    System,
    Masks,
    Polyphase,
}

#[derive(Serialize, Deserialize)]
struct PyramidManifest {
    levels: usize,
    bands: usize,
    /// The analyzed signal was real, so the reconstruction is written as real.
    real: bool,
}

type TestFn = Box<dyn Fn(&[f64]) -> f64>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FRAMESMITH_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Digits { matrix } => {
            let entries: Vec<Vec<i64>> =
                serde_json::from_str(&matrix).context("parsing --matrix")?;
            let m = DilationMatrix::new(entries)?;
            println!("m = {}", m.m());
            println!("digits:");
            for s in m.digits() {
                println!("  {s:?}");
            }
        }
        Command::BuildDual(args) => build(&args, false)?,
        Command::BuildTight(args) => build(&args, true)?,
        Command::Verify {
            input,
            output,
            tolerance,
            grid,
        } => {
            let fs = load_system(&input)?;
            let report = verify(&fs, tolerance, grid);
            emit(output.as_deref(), &serde_json::to_string_pretty(&report)?)?;
            for c in report.failures() {
                eprintln!(
                    "FAILED {} ({}): residual {:e} > {:e}",
                    c.name, c.equation, c.residual, c.tolerance
                );
            }
            if !report.overall {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Transform {
            input,
            signal,
            output,
            levels,
            inverse,
        } => {
            let fs = load_system(&input)?;
            if inverse {
                let (pyramid, real) = read_pyramid(&signal)?;
                let mut y = filterbank_synthesize(&fs, &pyramid)?;
                if real {
                    y.values.iter_mut().for_each(|v| v.im = 0.0);
                }
                write_signal(&output, &y, pyramid.levels())?;
            } else {
                let (x, sidecar) = read_signal(&signal)?;
                let levels = levels.unwrap_or(sidecar.levels);
                let pyramid = filterbank_analyze(&fs, &x, levels)?;
                let y = filterbank_synthesize(&fs, &pyramid)?;
                let real = x.values.iter().all(|v| v.im == 0.0);
                write_pyramid(&output, &pyramid, real)?;
                let summary = serde_json::json!({
                    "levels": levels,
                    "bands": fs.redundancy(),
                    "reconstruction_error": y.max_abs_diff(&x),
                });
                println!("{}", serde_json::to_string_pretty(&summary)?);
            }
        }
        Command::ApproxOrder {
            input,
            output,
            levels,
            fine,
            function,
        } => {
            let fs = load_system(&input)?;
            let levels = parse_levels(&levels)?;
            let d = fs.matrix.dim();
            let top = levels.iter().max().copied().unwrap_or(0);
            let fine = fine.unwrap_or_else(|| default_fine_level(&fs.matrix, top));
            let f: TestFn = match function {
                TestFunction::Smooth => Box::new(move |x: &[f64]| {
                    (0..d)
                        .map(|i| {
                            (2.0 * PI * x[i]).sin() + 0.5 * (4.0 * PI * x[i] + 0.3).cos() + 2.0
                        })
                        .product()
                }),
                TestFunction::Constant => Box::new(|_: &[f64]| 1.0),
            };
            let report = approx_order_experiment(&fs, f.as_ref(), &levels, fine)?;
            emit(output.as_deref(), &serde_json::to_string_pretty(&report)?)?;
        }
        Command::Export {
            input,
            output,
            format,
        } => {
            let fs = load_system(&input)?;
            let text = match format {
                ExportFormat::System => fs.to_json()?,
                ExportFormat::Masks => serde_json::to_string_pretty(&serde_json::json!({
                    "refinable": fs.refinable,
                    "wavelets": fs.wavelets,
                    "refinable_dual": fs.refinable_dual,
                    "wavelets_dual": fs.wavelets_dual,
                }))?,
                ExportFormat::Polyphase => serde_json::to_string_pretty(&serde_json::json!({
                    "polyphase": fs.polyphase,
                    "polyphase_dual": fs.polyphase_dual,
                }))?,
            };
            emit(output.as_deref(), &text)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn build(args: &BuildArgs, tight: bool) -> Result<()> {
    let cfg = Config::load(&args.config)?;
    let m = cfg.dilation()?;
    let n = cfg.vm_order;
    let lambda = cfg.lambda(m.dim())?;
    let bound = if tight { 2 * n } else { n };
    let (free, seed) = Config::free(&cfg.free_polys, &m, bound, args.seed, 0)?;
    let fs = if tight {
        let opts = cfg.tolerances.unwrap_or_default();
        let mut fs = build_tight_with(&m, n, &lambda, &free, &opts)?;
        fs.provenance.rng_seed = seed;
        fs
    } else {
        let (free_dual, seed_dual) = Config::free(&cfg.free_polys_dual, &m, bound, args.seed, 1)?;
        let mut fs = build_dual(&m, n, &lambda, &free, &free_dual)?;
        fs.provenance.rng_seed = seed.or(seed_dual);
        fs
    };
    info!("built system with {} wavelets", fs.redundancy());
    let output = args.output.as_ref().or(cfg.output.as_ref());
    emit(output.map(PathBuf::as_path), &fs.to_json()?)
}

fn verify(fs: &FrameSystem, tolerance: Option<f64>, grid: usize) -> Report {
    let mut report = verify_frame_system(fs);
    if fs.kind == framesmith::builder::FrameKind::Tight && report.overall {
        let depth = if fs.matrix.dim() == 1 { 8 } else { 4 };
        let (residual, tol) = match mallat_l2_check(&fs.refinable, &fs.matrix, depth, grid) {
            Ok(r) => ((r.estimate - 1.0).max(0.0), 1e-6),
            Err(_) => (f64::INFINITY, 1e-6),
        };
        report.checks.push(Check {
            name: "mallat-l2".into(),
            equation: "||f_J||_2 <= 1".into(),
            residual,
            tolerance: tol,
            pass: residual <= tol,
        });
    }
    if let Some(t) = tolerance {
        for c in report.checks.iter_mut().filter(|c| c.tolerance > 0.0) {
            c.tolerance = t;
            c.pass = c.residual <= t;
        }
    }
    report.overall = report.checks.iter().all(|c| c.pass);
    report
}

fn load_system(path: &Path) -> Result<FrameSystem> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    FrameSystem::from_json(&text)
        .with_context(|| format!("loading frame system {}", path.display()))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, format!("{text}\n"))
            .with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn parse_levels(s: &str) -> Result<Vec<u32>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().context("level range start")?;
        let b: u32 = b.trim().parse().context("level range end")?;
        if b < a {
            bail!("empty level range {s}");
        }
        Ok((a..=b).collect())
    } else {
        s.split(',')
            .map(|t| t.trim().parse().with_context(|| format!("level {t:?}")))
            .collect()
    }
}

/// Keeps the sample count near `2^16` while staying above the coarsest level.
fn default_fine_level(m: &DilationMatrix, top: u32) -> u32 {
    let per_level = (m.m() as f64).log2();
    let budget = (16.0 / per_level).floor() as u32;
    budget.max(top + 3)
}

fn write_pyramid(dir: &Path, pyramid: &Pyramid, real: bool) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let levels = pyramid.levels();
    let bands = pyramid.details.first().map_or(0, Vec::len);
    for (l, level) in pyramid.details.iter().enumerate() {
        for (b, s) in level.iter().enumerate() {
            write_signal(&dir.join(format!("detail_{l}_{b}.bin")), s, 0)?;
        }
    }
    write_signal(&dir.join("coarse.bin"), &pyramid.coarse, levels)?;
    let manifest = PyramidManifest {
        levels,
        bands,
        real,
    };
    std::fs::write(
        dir.join("pyramid.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(())
}

fn read_pyramid(dir: &Path) -> Result<(Pyramid, bool)> {
    let manifest: PyramidManifest = serde_json::from_str(
        &std::fs::read_to_string(dir.join("pyramid.json")).context("reading pyramid manifest")?,
    )?;
    let details = (0..manifest.levels)
        .map(|l| {
            (0..manifest.bands)
                .map(|b| Ok(read_signal(&dir.join(format!("detail_{l}_{b}.bin")))?.0))
                .collect::<Result<Vec<Signal>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let coarse = read_signal(&dir.join("coarse.bin"))?.0;
    Ok((Pyramid { details, coarse }, manifest.real))
}
