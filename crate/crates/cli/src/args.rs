use std::net::IpAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pigment_core::WavelengthGrid;

/// Pigment-space decomposition and editing of painting images.
#[derive(Debug, Parser)]
#[command(name = "pigmento", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a pigment palette and per-pixel mixing weights to an image.
    Decompose(DecomposeArgs),
    /// Render a bundle to PNG.
    Render {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scale one pigment's weights or scattering.
    Adjust(AdjustArgs),
    /// Replace a palette pigment by a dictionary pigment.
    Swap {
        #[command(flatten)]
        target: EditTarget,
        #[arg(long)]
        pigment: usize,
        /// Dictionary entry name.
        #[arg(long)]
        name: String,
        #[arg(long)]
        dict: Option<PathBuf>,
    },
    /// Copy the masked pixels' selected pigments to an offset position.
    Paste(PasteArgs),
    /// Remove the masked pixels' paint and inpaint the hole.
    Cut {
        #[command(flatten)]
        target: EditTarget,
        #[command(flatten)]
        mask: MaskArgs,
    },
    /// Write the merged weight-map edge response as a grayscale PNG.
    Edges {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Thicken paint along weight-map edges.
    Enhance {
        #[command(flatten)]
        target: EditTarget,
        #[arg(long)]
        strength: f64,
    },
    /// Write the mask of pixels where a pigment's weight reaches a threshold.
    Mask {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        pigment: usize,
        #[arg(long)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one palette to several images.
    Summarize(SummarizeArgs),
    /// Run the local HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Bundle to load at startup.
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long)]
        dict: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Init {
    Dictionary,
    Random,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long = "palette-size", short = 'm')]
    pub palette_size: usize,
    #[arg(long, default_value = "8", value_parser = parse_grid)]
    pub wavelengths: WavelengthGrid,
    /// Pigment dictionary JSON (the bundled one by default).
    #[arg(long)]
    pub dict: Option<PathBuf>,
    /// Solver config TOML; omitted keys keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Init::Dictionary)]
    pub init: Init,
    /// Seed of random initialisation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random initialisations tried (best kept).
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Output directory: bundle, reconstruction.png and weight_<i>.png.
    #[arg(long, default_value = "decomposition")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Images sharing the palette (repeat the flag).
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Palette JSON to write.
    #[arg(long)]
    pub out: PathBuf,
}

/// Bundle in, bundle out, and optionally the edited render.
#[derive(Debug, Args)]
pub struct EditTarget {
    #[arg(long)]
    pub bundle: PathBuf,
    /// Directory of the edited bundle (may equal --bundle).
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the edited render here.
    #[arg(long)]
    pub image: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "adjustment")]
pub struct Adjustment {
    /// Multiply the pigment's weights.
    #[arg(long)]
    pub weight: Option<f64>,
    /// Multiply the pigment's scattering: one factor or one per wavelength.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub scattering: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct AdjustArgs {
    #[command(flatten)]
    pub target: EditTarget,
    #[arg(long)]
    pub pigment: usize,
    #[command(flatten)]
    pub adjustment: Adjustment,
    /// With --weight: rescale each pixel's weights to sum to one.
    #[arg(long, requires = "weight")]
    pub renormalize: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PasteModeArg {
    Layer,
    Mix,
}

#[derive(Debug, Args)]
pub struct PasteArgs {
    #[command(flatten)]
    pub target: EditTarget,
    #[command(flatten)]
    pub mask: MaskArgs,
    /// Pigment indices to copy (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub pigments: Vec<usize>,
    /// Destination offset `dx,dy`.
    #[arg(long, value_parser = parse_offset, allow_hyphen_values = true)]
    pub offset: (i64, i64),
    #[arg(long, value_enum, default_value_t = PasteModeArg::Layer)]
    pub mode: PasteModeArg,
    /// Layer mode film thickness.
    #[arg(long, default_value_t = 1.0)]
    pub thickness: f64,
    /// Mix mode weight scale.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

/// A rectangle, or a weight threshold on one pigment.
#[derive(Debug, Args)]
pub struct MaskArgs {
    /// `x0,y0,x1,y1`, end-exclusive.
    #[arg(long, value_parser = parse_rect, required_unless_present = "mask_pigment", conflicts_with = "mask_pigment")]
    pub rect: Option<[usize; 4]>,
    /// Select where this pigment's weight reaches --threshold.
    #[arg(long = "mask-pigment", requires = "threshold")]
    pub mask_pigment: Option<usize>,
    #[arg(long, requires = "mask_pigment")]
    pub threshold: Option<f64>,
}

fn parse_grid(s: &str) -> Result<WavelengthGrid, String> {
    match s {
        "8" => Ok(WavelengthGrid::Bands8),
        "3" => Ok(WavelengthGrid::Bands3),
        _ => Err(format!("unsupported wavelength count {s:?} (use 3 or 8)")),
    }
}

fn numbers<T: std::str::FromStr>(s: &str, n: usize) -> Result<Vec<T>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated numbers"));
    }
    parts
        .iter()
        .map(|p| p.parse().map_err(|_| format!("invalid number {p:?}")))
        .collect()
}

fn parse_rect(s: &str) -> Result<[usize; 4], String> {
    let v = numbers::<usize>(s, 4)?;
    Ok([v[0], v[1], v[2], v[3]])
}

fn parse_offset(s: &str) -> Result<(i64, i64), String> {
    let v = numbers::<i64>(s, 2)?;
    Ok((v[0], v[1]))
}
