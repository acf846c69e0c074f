//! Command-line front end: mesh generation, network compilation,
//! evaluation and the verification checks.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use derhamnet::generate::Domain;
use derhamnet::mesh::{Mesh, SubsimplexIndex};
use derhamnet::network::Network;
use derhamnet::shapes::SpaceKind;
use derhamnet::spaces::{basis_net, BasisNet};
use derhamnet::verify::{self, SamplePlan, Target};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "derhamnet", version, about = "Compile simplicial finite element spaces into exact neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mesh and write it as JSON.
    GenMesh {
        #[arg(long)]
        domain: Domain,
        #[arg(long)]
        n: usize,
        /// Output file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a basis net or a function net; writes `<out>` and the dof order
    /// to `<out>.dofs.json`.
    Build {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        space: SpaceKind,
        /// JSON array of coefficients in dof order.
        #[arg(long, conflicts_with = "basis")]
        coeffs: Option<PathBuf>,
        /// Build the basis net (default when no coefficients are given).
        #[arg(long)]
        basis: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a network at the points of a file (one point per line,
    /// comma-separated); writes values in the same format.
    Eval {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exactness against the oracle and conformity of one family.
    Verify {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        space: SpaceKind,
    },
    /// The discrete de Rham identities on random coefficient vectors.
    Derham {
        #[arg(long)]
        mesh: PathBuf,
    },
    /// Interpolation errors and observed rates over refinement levels.
    Convergence {
        #[arg(long)]
        domain: Domain,
        #[arg(long)]
        space: SpaceKind,
        /// Comma-separated subdivision counts, e.g. 4,8,16.
        #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 16])]
        levels: Vec<usize>,
        #[arg(long, default_value = "smooth")]
        target: Target,
    },
    /// Depths and size bounds of all nets of a family.
    Audit {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        space: SpaceKind,
    },
    /// Serialize, reload and re-evaluate a network bitwise.
    Roundtrip {
        #[arg(long)]
        net: PathBuf,
    },
}

/// Dof order sidecar of a built network.
#[derive(Serialize)]
struct DofFile<'a> {
    space: SpaceKind,
    dim: usize,
    value_dim: usize,
    dof_order: &'a [SubsimplexIndex],
}

fn seed() -> Result<u64> {
    match std::env::var("DERHAMNET_SEED") {
        Ok(s) => s.trim().parse().with_context(|| format!("DERHAMNET_SEED must be an integer, got '{s}'")),
        Err(_) => Ok(0),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_mesh(path: &Path) -> Result<Mesh> {
    Mesh::from_json(&read(path)?).with_context(|| format!("invalid mesh file {}", path.display()))
}

fn load_net(path: &Path) -> Result<Network> {
    Network::deserialize(read(path)?.as_bytes()).with_context(|| format!("invalid network file {}", path.display()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

/// Parses a point file: one point per line, comma-separated coordinates.
fn parse_points(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            line.split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .with_context(|| format!("line {}: expected comma-separated numbers", i + 1))
        })
        .collect()
}

fn format_points(rows: &[Vec<f64>]) -> String {
    rows.iter()
        .map(|r| r.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",") + "\n")
        .collect()
}

/// Runs a command; `Ok(true)` when every check passed.
fn run(cli: Cli) -> Result<bool> {
    let seed = seed()?;
    match cli.command {
        Command::GenMesh { domain, n, out } => {
            if n == 0 {
                bail!("--n must be at least 1");
            }
            let json = domain.generate(n).to_json() + "\n";
            match out {
                Some(path) => write(&path, &json)?,
                None => print!("{json}"),
            }
            Ok(true)
        }
        Command::Build {
            mesh,
            space,
            coeffs,
            basis: _,
            out,
        } => {
            let mesh = load_mesh(&mesh)?;
            let basis: BasisNet = basis_net(&mesh, space)?;
            let sidecar = DofFile {
                space,
                dim: basis.dim,
                value_dim: basis.value_dim,
                dof_order: &basis.dof_order,
            };
            let sidecar = to_json(&sidecar);
            let net = match coeffs {
                Some(path) => {
                    let values: Vec<f64> = serde_json::from_str(&read(&path)?)
                        .with_context(|| format!("{} must hold a JSON array of numbers", path.display()))?;
                    std::sync::Arc::new(basis).specialize(&values)?.net
                }
                None => basis.net,
            };
            write(&out, &String::from_utf8(net.serialize()).expect("utf-8 json"))?;
            let mut dof_path = out.into_os_string();
            dof_path.push(".dofs.json");
            write(Path::new(&dof_path), &sidecar)?;
            Ok(true)
        }
        Command::Eval { net, points, out } => {
            let net = load_net(&net)?;
            let points = parse_points(&read(&points)?)?;
            let values = points
                .iter()
                .map(|x| net.evaluate(x))
                .collect::<Result<Vec<_>, _>>()?;
            let text = format_points(&values);
            match out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
            Ok(true)
        }
        Command::Verify { mesh, space } => {
            let label = mesh.display().to_string();
            let mesh = load_mesh(&mesh)?;
            let plan = SamplePlan::with_seed(seed);
            let mut reports = vec![verify::check_exactness(&mesh, space, &plan, &label)?];
            if space != SpaceKind::S0 {
                reports.push(verify::check_conformity(&mesh, space, seed, &label)?);
            }
            print!("{}", to_json(&reports));
            Ok(reports.iter().all(|r| r.pass))
        }
        Command::Derham { mesh } => {
            let label = mesh.display().to_string();
            let reports = verify::check_derham(&load_mesh(&mesh)?, 10, seed, &label)?;
            print!("{}", to_json(&reports));
            Ok(reports.iter().all(|r| r.pass))
        }
        Command::Convergence {
            domain,
            space,
            levels,
            target,
        } => {
            let report = verify::convergence_study(domain, space, target, &levels)?;
            print!("{}", to_json(&report));
            Ok(match target {
                Target::Smooth => report.rates_within(0.8, 1.2),
                Target::Linear => report.errors.iter().all(|&e| e <= 1e-10),
            })
        }
        Command::Audit { mesh, space } => {
            let label = mesh.display().to_string();
            let report = verify::audit_sizes(&load_mesh(&mesh)?, space, &label)?;
            print!("{}", to_json(&report));
            Ok(report.pass)
        }
        Command::Roundtrip { net } => {
            let label = net.display().to_string();
            let net = load_net(&net)?;
            let points = verify::random_points_in_box(net.input_dim(), 100, seed);
            let report = verify::check_roundtrip(&net, &points, "network", &label)?;
            print!("{}", to_json(&report));
            Ok(report.pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
