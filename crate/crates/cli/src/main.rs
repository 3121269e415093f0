//! `k2join`: build indexes, run joins and top-K queries, benchmark engines.

mod bench;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "k2join",
    version,
    about = "Raster/vector joins over a compressed k2-raster and an R-tree"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a k2-raster file from an ASCII grid or a synthetic generator.
    BuildRaster(BuildRasterArgs),
    /// Bulk-load an R-tree from an MBR CSV.
    BuildRtree(BuildRtreeArgs),
    /// Objects overlapping cells whose values lie in [lo, hi].
    Join(JoinArgs),
    /// The K objects overlapping the highest (or lowest) values.
    Topk(TopkArgs),
    /// Run the synthetic scenario families against every engine.
    Bench(BenchArgs),
}

#[derive(Args)]
pub struct BuildRasterArgs {
    /// ESRI-style ASCII grid to ingest.
    #[arg(long, conflicts_with = "kind")]
    pub grid: Option<PathBuf>,
    /// Decimal digits kept when truncating grid values.
    #[arg(long, default_value_t = 0)]
    pub digits: u32,
    /// Synthetic raster kind: uniform, gradient, plasma or random.
    #[arg(long, required_unless_present = "grid")]
    pub kind: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 256)]
    pub rows: usize,
    #[arg(long, default_value_t = 256)]
    pub cols: usize,
    /// Value span of synthetic rasters, as LO:HI.
    #[arg(long, default_value = "0:1023", value_parser = parse_span)]
    pub span: (i64, i64),
    #[command(flatten)]
    pub k2: K2Flags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Clone)]
pub struct K2Flags {
    /// JSON file with any of n1, k1, k2, dacs_max_levels. Flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long)]
    pub k1: Option<usize>,
    #[arg(long)]
    pub k2: Option<usize>,
    #[arg(long)]
    pub dacs_levels: Option<usize>,
}

#[derive(Args)]
pub struct BuildRtreeArgs {
    #[arg(long)]
    pub csv: PathBuf,
    /// Maximum node fan-out.
    #[arg(long, default_value_t = k2join::rtree::DEFAULT_CAPACITY)]
    pub capacity: usize,
    /// Take the grid extent from this k2-raster file.
    #[arg(long, conflicts_with_all = ["rows", "cols"])]
    pub raster: Option<PathBuf>,
    #[arg(long, requires = "cols")]
    pub rows: Option<usize>,
    #[arg(long, requires = "rows")]
    pub cols: Option<usize>,
    /// Read real coordinates and map them to cells: X0,Y0,CELL_W,CELL_H with
    /// (X0, Y0) the top-left corner.
    #[arg(long, value_parser = parse_affine)]
    pub affine: Option<k2join::ingest::AffineTransform>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Debug)]
pub enum Engine {
    PlainMbrs,
    PlainCells,
    K2,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::PlainMbrs, Engine::PlainCells, Engine::K2];

    pub fn name(self) -> &'static str {
        match self {
            Engine::PlainMbrs => "plain-mbrs",
            Engine::PlainCells => "plain-cells",
            Engine::K2 => "k2",
        }
    }
}

#[derive(Args)]
pub struct JoinArgs {
    #[arg(long)]
    pub raster: PathBuf,
    #[arg(long)]
    pub rtree: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub lo: i64,
    #[arg(long, allow_negative_numbers = true)]
    pub hi: i64,
    /// Write result lines here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Append a JSON line of counters to stdout.
    #[arg(long)]
    pub stats: bool,
    #[arg(long, value_enum, default_value_t = Engine::K2)]
    pub engine: Engine,
}

#[derive(Args)]
pub struct TopkArgs {
    #[arg(long)]
    pub raster: PathBuf,
    #[arg(long)]
    pub rtree: PathBuf,
    #[arg(short = 'k', long = "k")]
    pub k: usize,
    #[arg(long)]
    pub lowest: bool,
    #[arg(long)]
    pub stats: bool,
    #[arg(long, value_enum, default_value_t = Engine::K2)]
    pub engine: Engine,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Debug)]
pub enum Scenario {
    /// Increasing raster size.
    I,
    /// Fixed size, increasing number of distinct values.
    Ii,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub scenario: Scenario,
    /// Raster sides for scenario I.
    #[arg(long, value_delimiter = ',', default_value = "256,512,1024")]
    pub sizes: Vec<usize>,
    /// Raster side for scenario II.
    #[arg(long, default_value_t = 512)]
    pub size: usize,
    /// Truncation digits for scenario II.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
    pub digits: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 10)]
    pub queries: usize,
    /// Objects per vector dataset.
    #[arg(long, default_value_t = 1000)]
    pub objects: usize,
    #[arg(long, default_value_t = 16)]
    pub capacity: usize,
    #[command(flatten)]
    pub k2: K2Flags,
    /// Report prefix: writes PREFIX.jsonl and PREFIX.csv.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_span(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(':').ok_or("expected LO:HI")?;
    let lo = a.trim().parse::<i64>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<i64>().map_err(|e| e.to_string())?;
    if lo > hi {
        return Err(format!("empty span {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn parse_affine(s: &str) -> Result<k2join::ingest::AffineTransform, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let [x0, y0, w, h] = parts[..] else {
        return Err("expected X0,Y0,CELL_W,CELL_H".into());
    };
    k2join::ingest::AffineTransform::new(x0, y0, w, h).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BuildRaster(a) => commands::build_raster(&a),
        Command::BuildRtree(a) => commands::build_rtree(&a),
        Command::Join(a) => commands::join(&a),
        Command::Topk(a) => commands::topk(&a),
        Command::Bench(a) => bench::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
