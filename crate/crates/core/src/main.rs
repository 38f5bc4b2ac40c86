use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fnls::harness::{run, ExperimentSpec, Kind, RawConfig};

#[derive(Parser)]
#[command(name = "fnls", version, about = "Ground states of the fermionic NLS functional")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One ground state at the given mass.
    Solve(Common),
    /// Ground states over a list of masses.
    SweepLambda(Common),
    /// Binding inequalities over integer masses 1..=n_max.
    BindingTable(Common),
    /// Constants, energy bounds, critical exponent and plane-wave bounds.
    BoundsReport(Common),
    /// Interaction energy of two clusters against their separation.
    DimerCurve(Common),
    /// Many-peak density at a large mass.
    Figure1(Common),
    /// Two-dimensional densities for N = 1..=n_max.
    Figure2(Common),
    /// Two-dimensional J(N)/N for N = 1..=n_max.
    Figure3(Common),
    /// J(λ) and J(λ)/λ over a mass grid.
    Figure4(Common),
    /// Binding gap J(2) - 2J(1) against p.
    GapVsP(Common),
    /// Parse and resolve a configuration, then print the effective values.
    ValidateConfig(Common),
}

#[derive(Args)]
struct Common {
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    mass: Option<f64>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    box_l: Option<f64>,
}

impl Common {
    fn raw(&self) -> fnls::Result<RawConfig> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::load(path)?,
            None => RawConfig::default(),
        };
        let flags: [(&str, Option<String>); 6] = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("dim", self.dim.map(|v| v.to_string())),
            ("p", self.p.map(|v| v.to_string())),
            ("mass", self.mass.map(|v| v.to_string())),
            ("grid_n", self.grid_n.map(|v| v.to_string())),
            ("box_l", self.box_l.map(|v| v.to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                raw.set(key, v);
            }
        }
        Ok(raw)
    }
}

fn execute(cli: Cli) -> fnls::Result<bool> {
    let (kind, common) = match &cli.command {
        Command::Solve(c) => (Some(Kind::Solve), c),
        Command::SweepLambda(c) => (Some(Kind::SweepLambda), c),
        Command::BindingTable(c) => (Some(Kind::BindingTable), c),
        Command::BoundsReport(c) => (Some(Kind::BoundsReport), c),
        Command::DimerCurve(c) => (Some(Kind::DimerCurve), c),
        Command::Figure1(c) => (Some(Kind::Figure1), c),
        Command::Figure2(c) => (Some(Kind::Figure2), c),
        Command::Figure3(c) => (Some(Kind::Figure3), c),
        Command::Figure4(c) => (Some(Kind::Figure4), c),
        Command::GapVsP(c) => (Some(Kind::GapVsP), c),
        Command::ValidateConfig(c) => (None, c),
    };
    if let Some(t) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| fnls::Error::InvalidParameter(format!("threads: {e}")))?;
    }
    let spec = ExperimentSpec::resolve(kind, &common.raw()?, common.out.clone())?;
    if kind.is_none() {
        print!("{}", spec.to_config_text());
        return Ok(true);
    }
    let record = run(&spec)?;
    println!(
        "{}: converged = {}, {:.1} s, results in {}",
        spec.kind,
        record.converged,
        record.wall_time_s,
        spec.output.display()
    );
    Ok(record.converged)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: not every solve converged");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
