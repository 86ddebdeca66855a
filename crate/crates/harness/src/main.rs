//! `stability-lab`: command-line runs of the toolkit's experiments.

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use config::{Config, List};

#[derive(Parser)]
#[command(name = "stability-lab", version, about = "Permutation stability experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key = value file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for sampled experiments.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Frequency tolerance for subshift experiments.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Marked distance from Alt(2r+1) to A(Z) for a range of r.
    AltConvergence(AltArgs),
    /// Truncated diagonal products and tail defects of kernel words.
    Neumann(NeumannArgs),
    /// Coloring IRS of Alt(2n+1) against that of A(Z).
    Vershik(VershikArgs),
    /// Kakutani-Rokhlin partitions and their invariant checks.
    SubshiftKr(KrArgs),
    /// Local embedding reports on adapted partitions.
    FullgroupEmbed(EmbedArgs),
    /// Point-stabilizer IRS across partition levels.
    FullgroupIrs(FullIrsArgs),
    /// Exhaustive d_gen against the heuristic bound.
    Dgen(DgenArgs),
}

#[derive(Args)]
pub struct AltArgs {
    #[arg(long)]
    r_from: Option<usize>,
    #[arg(long)]
    r_to: Option<usize>,
    /// Largest ball radius compared.
    #[arg(long)]
    r_max: Option<usize>,
}

#[derive(Args)]
pub struct NeumannArgs {
    #[arg(long)]
    n_from: Option<usize>,
    #[arg(long)]
    n_to: Option<usize>,
    /// Number of factors kept in each truncation.
    #[arg(long)]
    len: Option<usize>,
    #[arg(long)]
    r_max: Option<usize>,
    /// Number of kernel words for the tail-defect table.
    #[arg(long)]
    words: Option<usize>,
}

#[derive(Args)]
pub struct VershikArgs {
    #[arg(long)]
    colors: Option<usize>,
    #[arg(long)]
    radius: Option<usize>,
    /// Comma-separated values of n.
    #[arg(long)]
    ns: Option<List<usize>>,
    /// Samples per IRS in sampled mode.
    #[arg(long)]
    samples: Option<u64>,
    /// Half-width of the inspected window of Z.
    #[arg(long)]
    window: Option<usize>,
    /// exact or sampled.
    #[arg(long)]
    mode: Option<String>,
    /// Coloring cap in exact mode.
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Args)]
pub struct KrArgs {
    /// fibonacci, thue-morse, chacon or rules like "a->ab;b->a".
    #[arg(long)]
    substitution: Option<String>,
    /// Comma-separated seed words; default is every word up to --seed-len.
    #[arg(long)]
    seeds: Option<List<String>>,
    #[arg(long)]
    seed_len: Option<usize>,
    /// Also refine by the cylinders of this word length (0 = off).
    #[arg(long)]
    refine_len: Option<usize>,
}

#[derive(Args)]
pub struct EmbedArgs {
    #[arg(long)]
    substitution: Option<String>,
    /// Number of disjoint three-cycle generators.
    #[arg(long)]
    gadgets: Option<usize>,
    #[arg(long)]
    gadget_len: Option<usize>,
    /// Comma-separated ball radii.
    #[arg(long)]
    ns: Option<List<usize>>,
    /// Comma-separated seed words, one partition level each.
    #[arg(long)]
    levels: Option<List<String>>,
}

#[derive(Args)]
pub struct FullIrsArgs {
    #[arg(long)]
    substitution: Option<String>,
    #[arg(long)]
    gadgets: Option<usize>,
    #[arg(long)]
    gadget_len: Option<usize>,
    /// Number of independent points.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long)]
    levels: Option<List<String>>,
}

#[derive(Args)]
pub struct DgenArgs {
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let out: PathBuf = cfg.get("out", cli.common.out.clone(), PathBuf::from("out"))?;
    let Common { seed, tolerance, .. } = cli.common;
    let subshift_based = matches!(
        cli.command,
        Command::SubshiftKr(_) | Command::FullgroupEmbed(_) | Command::FullgroupIrs(_)
    );
    if tolerance.is_some() && !subshift_based {
        bail!("--tolerance applies only to subshift-kr, fullgroup-embed and fullgroup-irs");
    }
    let (name, files) = match cli.command {
        Command::AltConvergence(a) => ("alt-convergence", experiments::alt_convergence(&cfg, a)),
        Command::Neumann(a) => ("neumann", experiments::neumann(&cfg, a)),
        Command::Vershik(a) => ("vershik", experiments::vershik(&cfg, a, seed)),
        Command::SubshiftKr(a) => ("subshift-kr", experiments::subshift_kr(&cfg, a, tolerance)),
        Command::FullgroupEmbed(a) => ("fullgroup-embed", experiments::fullgroup_embed(&cfg, a, tolerance)),
        Command::FullgroupIrs(a) => ("fullgroup-irs", experiments::fullgroup_irs(&cfg, a, tolerance)),
        Command::Dgen(a) => ("dgen", experiments::dgen(&cfg, a, seed)),
    };
    let files = files.map_err(|e| e.context(format!("experiment {name}")))?;
    cfg.check_unused()?;
    for (file, bytes) in files {
        let path = output::write_atomic(&out, &file, &bytes)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
