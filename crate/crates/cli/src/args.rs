use std::net::{IpAddr, Ipv4Addr};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qrmap::qrio::{EcLevel, ImageFormat};

#[derive(Debug, Parser)]
#[command(
    name = "qrmap",
    version,
    about = "Compile, inspect and run QRmap executable QR codes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile IR (or re-encode a payload) to a binary and optionally a QR image
    Compile(CompileArgs),
    /// Turn a binary payload or QR image back into IR text
    Decompile(DecompileArgs),
    /// Summarize a program and report its encoded size
    Inspect(InspectArgs),
    /// Execute the program's guide, interactively or from an answers file
    Run(RunArgs),
    /// Find a route without running the guide
    Route(RouteArgs),
    /// Serve the HTTP API used by the navigator
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    /// IR source, binary payload or QR image
    pub input: PathBuf,
    /// Binary output [default: input with a .qrmap-bin extension]
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write a QR image here
    #[arg(long)]
    pub qr: Option<PathBuf>,
    /// Image format [default: from the --qr extension, else png]
    #[arg(long)]
    pub format: Option<ImageFormat>,
    /// QR error correction level
    #[arg(long, default_value = "L")]
    pub ec_level: EcLevel,
    /// Force a QR version (1-40) instead of the smallest that fits
    #[arg(long)]
    pub qr_version: Option<u8>,
    /// Pixels per QR module
    #[arg(long, default_value_t = 4)]
    pub scale: u32,
    /// Round floats that the declared minifloat format cannot hold
    #[arg(long)]
    pub lossy_floats: bool,
    /// Print the report as JSON
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct DecompileArgs {
    /// Binary payload or QR image
    pub input: PathBuf,
    /// IR output [default: stdout]
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// IR source, binary payload or QR image
    pub input: PathBuf,
    /// Round floats that the declared minifloat format cannot hold
    #[arg(long)]
    pub lossy_floats: bool,
    /// Print the summary and report as JSON
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// IR source, binary payload or QR image
    pub input: PathBuf,
    /// Vertex the user stands at (1-based); overrides the program's origin
    #[arg(long)]
    pub origin: Option<u64>,
    /// One answer per line; "@quick N" presses quick choice N
    #[arg(long)]
    pub answers: Option<PathBuf>,
    /// Write the session transcript here ("-" for stdout instead of the usual output)
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// Weight for arcs that lack the search attribute
    #[arg(long)]
    pub default_weight: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RouteArgs {
    /// IR source, binary payload or QR image
    pub input: PathBuf,
    /// Start vertex (1-based); defaults to the program's origin
    #[arg(long)]
    pub origin: Option<u64>,
    /// Destination vertex (1-based); repeat for several candidates
    #[arg(long = "to", conflicts_with = "quick")]
    pub to: Vec<u64>,
    /// Use quick choice N's destination and weight
    #[arg(long)]
    pub quick: Option<usize>,
    /// Arc attribute to minimize
    #[arg(long, default_value = "length")]
    pub weight: String,
    /// Weight for arcs that lack the search attribute
    #[arg(long)]
    pub default_weight: Option<f64>,
    /// Print the route as JSON
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Loopback address to bind
    #[arg(long, env = "QRMAP_HOST", default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    pub host: IpAddr,
    /// Port to listen on
    #[arg(long, env = "QRMAP_PORT", default_value_t = 8750)]
    pub port: u16,
    /// Directory of stored programs
    #[arg(long, env = "QRMAP_STORE", default_value = "qrmap-store")]
    pub store: PathBuf,
    /// Idle seconds before a session is dropped
    #[arg(long, env = "QRMAP_SESSION_TIMEOUT", default_value_t = 1800)]
    pub session_timeout: u64,
}
