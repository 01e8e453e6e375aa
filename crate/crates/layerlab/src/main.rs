use clap::{Parser, Subcommand};
use layerlab::experiments::ScanOverride;
use layerlab::{CliError, ExitCode};
use std::path::PathBuf;
use std::process::exit;

#[derive(Parser)]
#[command(
    name = "layerlab",
    version,
    about = "Spectral experiments on curved quantum layers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write results, CSV tables and plots.
    Run {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compute cross-section Dirichlet modes.
    Modes {
        /// Domain spec as JSON, e.g.
        /// {"shape":{"type":"interval","length":3.14},"h_fiber":0.01}
        #[arg(long)]
        domain: String,
        /// Number of eigenpairs.
        #[arg(long, default_value_t = 6)]
        count: usize,
        /// Output JSON file for the energies.
        #[arg(long)]
        out: PathBuf,
        /// Optional CSV with the sampled mode grids.
        #[arg(long)]
        modes_csv: Option<PathBuf>,
    },
    /// Run the certification scan of a scenario over an explicit
    /// lambda range.
    Scan {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        lambda_min: f64,
        #[arg(long)]
        lambda_max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the smoke-scale invariant suite.
    Selftest {
        /// Corrupt a named invariant (fault-injection hook for testing
        /// the harness itself).
        #[arg(long)]
        fuzz: Option<String>,
    },
}

fn init_threads() {
    if let Ok(v) = std::env::var("LAYERLAB_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn fail(e: CliError) -> ! {
    eprintln!("error: {e}");
    exit(e.exit_code() as i32)
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    init_threads();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, out } => {
            match layerlab::run_scenario_file(&scenario, &out, None) {
                Ok(record) => {
                    println!(
                        "{}: {} files written to {}",
                        record.scenario_name,
                        record.files.len() + 1,
                        out.display()
                    );
                }
                Err(e) => fail(e),
            }
        }
        Command::Modes { domain, count, out, modes_csv } => {
            match run_modes(&domain, count, &out, modes_csv.as_deref()) {
                Ok(()) => {}
                Err(e) => fail(e),
            }
        }
        Command::Scan { scenario, lambda_min, lambda_max, steps, out } => {
            let over = ScanOverride { lambda_min, lambda_max, steps };
            match layerlab::run_scenario_file(&scenario, &out, Some(over)) {
                Ok(record) => {
                    if let Some(scan) = &record.scan {
                        for lv in &scan.lambdas {
                            println!("lambda {:.6}: {:?}", lv.lambda, lv.decision);
                        }
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Selftest { fuzz } => {
            let outcome = layerlab::selftest::run(&layerlab::selftest::Config { fuzz });
            print!("{}", outcome.summary);
            if outcome.failed > 0 {
                exit(ExitCode::Invariant as i32);
            }
        }
    }
}

fn run_modes(
    domain: &str,
    count: usize,
    out: &std::path::Path,
    modes_csv: Option<&std::path::Path>,
) -> Result<(), CliError> {
    use layerlab::schema::{parse_json, Ctx};
    let raw = parse_json(domain)?;
    let root = Ctx::root(&raw);
    let shape = root.get("shape")?;
    let ty = shape.get("type")?.str()?;
    let cs_shape = match ty {
        "interval" => layerlab_core::cross_section::CrossSectionShape::Interval {
            length: shape.get("length")?.positive_f64()?,
        },
        "rectangle" => layerlab_core::cross_section::CrossSectionShape::Rectangle {
            width: shape.get("width")?.positive_f64()?,
            height: shape.get("height")?.positive_f64()?,
        },
        "disk" => layerlab_core::cross_section::CrossSectionShape::Disk {
            radius: shape.get("radius")?.positive_f64()?,
        },
        other => return Err(shape.bad(format!("unknown shape `{other}`"))),
    };
    let h = root.get("h_fiber")?.positive_f64()?;
    let domain = layerlab_core::cross_section::CrossSectionDomain::new(cs_shape, h);
    let modes = layerlab_core::cross_section::dirichlet_modes(&domain, count)
        .map_err(|e| layerlab::error::from_cross_section("modes", e))?;
    let json = serde_json::json!({
        "h_fiber": h,
        "energies": modes.energies,
        "residuals": modes.residuals,
    });
    std::fs::write(out, format!("{:#}\n", json))
        .map_err(|e| CliError::Io(format!("writing {}: {e}", out.display())))?;
    if let Some(csv_path) = modes_csv {
        let mut text = String::from("mode,unknown,coords,value\n");
        let d = modes.grid.codim;
        let mut x = vec![0.0f64; d];
        for (k, mode) in modes.modes.iter().enumerate() {
            for (u, &v) in mode.iter().enumerate() {
                modes.grid.unknown_coords(u, &mut x);
                let coords: Vec<String> = x.iter().map(|c| format!("{c:.9}")).collect();
                text.push_str(&format!("{k},{u},{},{:.12e}\n", coords.join(";"), v));
            }
        }
        std::fs::write(csv_path, text)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", csv_path.display())))?;
    }
    println!("E_k: {:?}", modes.energies);
    Ok(())
}
