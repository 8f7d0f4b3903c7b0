use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trisub_cli::commands::{self, Exit, Overrides, RenderArgs, Seed};
use trisub_cli::config::CampaignConfig;

#[derive(Parser)]
#[command(
    name = "trisub",
    version,
    about = "Search for substitution rules on triangles with angles k*pi/n"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SearchFlags {
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    kill_threshold: Option<usize>,
    #[arg(long)]
    max_results: Option<u64>,
    #[arg(long)]
    max_nodes: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=2))]
    starter_side: Option<u8>,
    /// Ignore edge orientations while searching.
    #[arg(long)]
    no_orientation: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SeedKind {
    Prototile,
    SevenfoldStar,
}

#[derive(Subcommand)]
enum Command {
    /// Print lengths, areas, X, M and the classification of lambda.
    Analyze {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the search campaign and write a result archive.
    Search {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: SearchFlags,
        /// Write an empty archive instead of refusing an inadmissible lambda.
        #[arg(long)]
        force: bool,
    },
    /// Canonicalize an archive and group its results into families.
    Post {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw an archive, a family, or a family's rule iterated k times.
    Render {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, value_enum)]
        seed: Option<SeedKind>,
        /// Prototile used by the prototile seed.
        #[arg(long, default_value_t = 0)]
        proto: usize,
        #[arg(long)]
        family: Option<usize>,
    },
}

fn run(cli: Cli) -> trisub::Result<Exit> {
    let stdout = &mut std::io::stdout();
    match cli.command {
        Command::Analyze { config } => commands::analyze(&CampaignConfig::load(&config)?, stdout),
        Command::Search {
            config,
            out,
            flags,
            force,
        } => {
            let mut c = CampaignConfig::load(&config)?;
            Overrides {
                workers: flags.workers,
                kill_threshold: flags.kill_threshold,
                max_results: flags.max_results,
                max_nodes: flags.max_nodes,
                starter_side: flags.starter_side.map(usize::from),
                no_orientation: flags.no_orientation,
            }
            .apply(&mut c)?;
            commands::search(&c, &out, force, stdout)
        }
        Command::Post { input, out } => {
            let out = out.unwrap_or_else(|| commands::sibling(&input, "families.json"));
            commands::post(&input, &out, stdout)
        }
        Command::Render {
            input,
            out,
            k,
            seed,
            proto,
            family,
        } => {
            let out = out.unwrap_or_else(|| commands::sibling(&input, "svg"));
            let seed = seed.map(|s| match s {
                SeedKind::Prototile => Seed::Prototile(proto),
                SeedKind::SevenfoldStar => Seed::Star,
            });
            commands::render(&input, &out, &RenderArgs { k, seed, family }, stdout)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                Exit::Invalid as u8
            } else {
                0
            });
        }
    };
    match run(cli) {
        Ok(e) => ExitCode::from(e as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Exit::for_error(&e) as u8)
        }
    }
}
