//! `plates`: batch analyses of functionally graded plates.
//!
//! Exit codes: 0 ok, 2 configuration error, 3 numeric error, 4 comparison failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fgplate::cli::{compare, run, RunConfig, RunOptions};
use fgplate::mesh::{read_mesh, write_mesh, MeshSpec};
use fgplate::{PlateError, Result};

#[derive(Parser)]
#[command(name = "plates", version, about = "Functionally graded plate analyses with CS-DSG3 triangles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every case of a configuration over its sweep axes.
    Run {
        config: PathBuf,
        /// Directory for the CSV and JSON reports.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Execute sweep points and element loops on one thread.
        #[arg(long)]
        serial: bool,
        /// Use this mesh file instead of generating meshes.
        #[arg(long)]
        mesh_in: Option<PathBuf>,
    },
    /// Compare a report's normalized values with expected values.
    Compare {
        report: PathBuf,
        expected: PathBuf,
        /// Relative tolerance applied to every row.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Generate a mesh from a JSON mesh specification.
    Mesh {
        spec: PathBuf,
        #[arg(long)]
        mesh_out: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| PlateError::Config(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| PlateError::Config(format!("cannot write {}: {e}", path.display())))
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("PLATES_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(PlateError::Config(format!("PLATES_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run { config, out, serial, mesh_in } => {
            let config = RunConfig::from_path(&config)?;
            let mesh_in = mesh_in.map(|p| read(&p).and_then(|t| read_mesh(&t))).transpose()?;
            let options = RunOptions { serial, mesh_in };
            let report = match thread_cap()? {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| PlateError::Internal(format!("thread pool: {e}")))?
                    .install(|| run(&config, &options))?,
                None => run(&config, &options)?,
            };
            std::fs::create_dir_all(&out)
                .map_err(|e| PlateError::Config(format!("cannot create {}: {e}", out.display())))?;
            let csv_name = config.output.csv.clone().unwrap_or_else(|| format!("{}.csv", config.name));
            let json_name = config.output.json.clone().unwrap_or_else(|| format!("{}.json", config.name));
            write(&out.join(&csv_name), &report.to_csv()?)?;
            write(&out.join(&json_name), &report.to_json()?)?;
            for row in report.rows.iter().filter(|r| !r.message.is_empty()) {
                eprintln!("{} [{}] {} n={} a/h={}: {}", row.status.as_str(), row.case, row.mesh, row.n, row.a_over_h, row.message);
            }
            eprintln!("{} rows written to {}", report.rows.len(), out.join(&csv_name).display());
            Ok(report.exit_code())
        }
        Command::Compare { report, expected, tol } => {
            let result = compare(&read(&report)?, &read(&expected)?, tol)?;
            print!("{}", result.render());
            Ok(result.exit_code())
        }
        Command::Mesh { spec, mesh_out } => {
            let spec: MeshSpec =
                serde_json::from_str(&read(&spec)?).map_err(|e| PlateError::Config(format!("mesh spec: {e}")))?;
            let mesh = spec.generate()?;
            write(&mesh_out, &write_mesh(&mesh))?;
            eprintln!("{} nodes, {} triangles", mesh.node_count(), mesh.triangles.len());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
