//! `pigmento`: decompose paintings into pigments, render and edit the result.
//!
//! Output on stdout is `key: value` lines; diagnostics go to stderr. Exit
//! status is 0 on success, 1 for invalid input and 2 when a solver fails.

mod args;

use std::net::SocketAddr;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use pigment_core::bundle::Provenance;
use pigment_core::edit::{
    copy_paste, cut_inpaint, edge_enhance, mask_from_weights, scale_scattering, scale_weight, swap_pigment,
    weight_edges, PasteMode, PixelMask,
};
use pigment_core::pipeline::{decompose, DecomposeOptions};
use pigment_core::solver::{joint_summarize, InitMode};
use pigment_core::{DecompositionBundle, PigmentDictionary, RenderContext};
use pigment_io::IoError;
use serde_json::json;
use thiserror::Error;

use args::{AdjustArgs, Cli, Command, DecomposeArgs, EditTarget, Init, MaskArgs, PasteArgs, PasteModeArg, SolveArgs, SummarizeArgs};

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Core(#[from] pigment_core::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("server: {0}")]
    Serve(std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use pigment_core::Error::SolverFailure;
        match self {
            CliError::Core(SolverFailure { .. }) | CliError::Io(IoError::Core(SolverFailure { .. })) => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code());
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// `PIGMENTO_THREADS` caps the worker pool.
fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("PIGMENTO_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Invalid(format!("PIGMENTO_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Invalid(e.to_string()))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Decompose(a) => cmd_decompose(a),
        Command::Render { bundle, out } => {
            let b = pigment_io::load_bundle(&bundle)?;
            pigment_io::save_image(&b.render(), &out)?;
            println!("image: {}", out.display());
            println!("size: {}x{}", b.width(), b.height());
            Ok(())
        }
        Command::Adjust(a) => cmd_adjust(a),
        Command::Swap {
            target,
            pigment,
            name,
            dict,
        } => {
            let dict = dictionary(dict.as_deref())?;
            edit(&target, |b| {
                let i = dict
                    .entries()
                    .iter()
                    .position(|e| e.name == name)
                    .ok_or_else(|| CliError::Invalid(format!("no dictionary pigment named {name:?}")))?;
                Ok(swap_pigment(b, pigment, &dict.pigment_on(i, b.palette().grid())?)?)
            })
        }
        Command::Paste(a) => cmd_paste(a),
        Command::Cut { target, mask } => edit(&target, |b| Ok(cut_inpaint(b, &selection(b, &mask)?)?)),
        Command::Edges { bundle, out } => {
            let b = pigment_io::load_bundle(&bundle)?;
            let edges = weight_edges(&b);
            pigment_io::save_gray(&edges.values, edges.width, edges.height, &out)?;
            println!("image: {}", out.display());
            println!("max edge: {:.6}", edges.values.iter().cloned().fold(0.0, f64::max));
            Ok(())
        }
        Command::Enhance { target, strength } => edit(&target, |b| Ok(edge_enhance(b, strength)?)),
        Command::Mask {
            bundle,
            pigment,
            threshold,
            out,
        } => {
            let b = pigment_io::load_bundle(&bundle)?;
            let mask = mask_from_weights(&b, pigment, threshold)?;
            let values: Vec<f64> = mask.bits().iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
            pigment_io::save_gray(&values, mask.width(), mask.height(), &out)?;
            println!("image: {}", out.display());
            println!("selected pixels: {}", mask.count());
            Ok(())
        }
        Command::Summarize(a) => cmd_summarize(a),
        Command::Serve {
            port,
            host,
            bundle,
            dict,
        } => {
            let dict = dictionary(dict.as_deref())?;
            let state = match bundle {
                Some(path) => pigment_service::AppState::with_bundle(dict, pigment_io::load_bundle(&path)?)
                    .map_err(|e| CliError::Invalid(e.message))?,
                None => pigment_service::AppState::new(dict),
            };
            let runtime = tokio::runtime::Runtime::new().map_err(CliError::Serve)?;
            println!("listening: http://{}", SocketAddr::new(host, port));
            runtime
                .block_on(pigment_service::serve(SocketAddr::new(host, port), Arc::new(state)))
                .map_err(CliError::Serve)
        }
    }
}

fn dictionary(path: Option<&Path>) -> Result<PigmentDictionary> {
    Ok(match path {
        Some(p) => pigment_io::load_dictionary(p)?,
        None => PigmentDictionary::bundled(),
    })
}

fn options(a: &SolveArgs) -> Result<DecomposeOptions> {
    let mut opts = DecomposeOptions::new(a.palette_size);
    opts.grid = a.wavelengths;
    if let Some(path) = &a.config {
        opts.config = pigment_io::load_config(path)?;
    }
    opts.init = match a.init {
        Init::Dictionary => InitMode::Dictionary,
        Init::Random => InitMode::Random {
            seeds: a.seeds,
            seed: a.seed,
        },
    };
    Ok(opts)
}

fn cmd_decompose(a: DecomposeArgs) -> Result<()> {
    let image = pigment_io::load_image(&a.input)?;
    let dict = dictionary(a.solve.dict.as_deref())?;
    let opts = options(&a.solve)?;
    let d = decompose(&image, &dict, &opts)?;
    let bundle = d.bundle.clone().with_provenance(Provenance {
        source_sha256: Some(pigment_io::sha256_file(&a.input)?),
        config: Some(opts.config.clone()),
    });

    pigment_io::save_bundle(&bundle, &a.out)?;
    let reconstruction = a.out.join("reconstruction.png");
    pigment_io::save_image(&bundle.render(), &reconstruction)?;
    for i in 0..bundle.palette().len() {
        pigment_io::save_gray(
            &bundle.weights().channel(i),
            bundle.width(),
            bundle.height(),
            &a.out.join(format!("weight_{i}.png")),
        )?;
    }

    println!("bundle: {}", a.out.display());
    println!("reconstruction: {}", reconstruction.display());
    println!("pigments: {}", bundle.palette().len());
    println!("wavelengths: {}", bundle.context().len());
    println!("subset colors: {}", d.subset_size);
    println!("palette iterations: {}", d.anls_iterations);
    println!("palette converged: {}", d.anls_converged);
    for l in &d.levels {
        println!(
            "level {}x{}: energy {:.6e} -> {:.6e} in {} iterations",
            l.width, l.height, l.initial_energy, l.final_energy, l.iterations
        );
    }
    println!("mean row-sum error: {:.6}", bundle.weights().mean_row_sum_error());
    println!("RGB RMSE: {:.6}", d.rmse);
    Ok(())
}

/// Load, edit, save; report the fraction of pixels whose 8-bit render changed.
fn edit(target: &EditTarget, f: impl FnOnce(&DecompositionBundle) -> Result<DecompositionBundle>) -> Result<()> {
    let before = pigment_io::load_bundle(&target.bundle)?;
    let after = f(&before)?;
    let (old, new) = (before.render(), after.render());
    let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    let changed = old
        .pixels()
        .iter()
        .zip(new.pixels())
        .filter(|(p, r)| p.map(q) != r.map(q))
        .count();
    pigment_io::save_bundle(&after, &target.out)?;
    println!("bundle: {}", target.out.display());
    if let Some(path) = &target.image {
        pigment_io::save_image(&new, path)?;
        println!("image: {}", path.display());
    }
    println!("changed pixels: {changed}");
    Ok(())
}

fn cmd_adjust(a: AdjustArgs) -> Result<()> {
    edit(&a.target, |b| {
        Ok(match (a.adjustment.weight, &a.adjustment.scattering) {
            (Some(c), None) => scale_weight(b, a.pigment, c, a.renormalize)?,
            (None, Some(f)) => scale_scattering(b, a.pigment, f)?,
            _ => return Err(CliError::Invalid("give exactly one of --weight or --scattering".into())),
        })
    })
}

fn selection(b: &DecompositionBundle, m: &MaskArgs) -> Result<PixelMask> {
    match (m.rect, m.mask_pigment, m.threshold) {
        (Some([x0, y0, x1, y1]), None, None) => {
            if x0 > x1 || y0 > y1 || x1 > b.width() || y1 > b.height() {
                return Err(CliError::Invalid(format!(
                    "rectangle {x0},{y0},{x1},{y1} lies outside the {}x{} image",
                    b.width(),
                    b.height()
                )));
            }
            Ok(PixelMask::rect(b.width(), b.height(), x0, y0, x1, y1))
        }
        (None, Some(i), Some(t)) => Ok(mask_from_weights(b, i, t)?),
        _ => Err(CliError::Invalid("give --rect or --mask-pigment with --threshold".into())),
    }
}

fn cmd_paste(a: PasteArgs) -> Result<()> {
    let mode = match a.mode {
        PasteModeArg::Layer => PasteMode::Layer { thickness: a.thickness },
        PasteModeArg::Mix => PasteMode::Mix { scale: a.scale },
    };
    edit(&a.target, |b| {
        let mask = selection(b, &a.mask)?;
        Ok(copy_paste(b, &mask, &a.pigments, a.offset, mode)?)
    })
}

fn cmd_summarize(a: SummarizeArgs) -> Result<()> {
    let images = a
        .inputs
        .iter()
        .map(|p| pigment_io::load_image(p))
        .collect::<pigment_io::Result<Vec<_>>>()?;
    let dict = dictionary(a.solve.dict.as_deref())?;
    let opts = options(&a.solve)?;
    let ctx = RenderContext::standard(opts.grid);
    let est = joint_summarize(&images, opts.palette_size, &dict, &ctx, opts.init, &opts.config)?;

    let pal = &est.palette;
    let swatches = pal.swatches(&ctx);
    let pigments: Vec<_> = (0..pal.len())
        .map(|i| json!({ "rgb": swatches[i], "a": pal.a(i), "s": pal.s(i) }))
        .collect();
    let doc = json!({
        "wavelengths_nm": ctx.grid().centers(),
        "sources": a.inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "pigments": pigments,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Invalid(e.to_string()))?;
    pigment_io::atomic_write(&a.out, text.as_bytes())?;

    println!("palette: {}", a.out.display());
    println!("images: {}", images.len());
    println!("pigments: {}", pal.len());
    println!("subset colors: {}", est.subset.len());
    println!("palette iterations: {}", est.iterations);
    println!("palette converged: {}", est.converged);
    println!("subset RGB RMSE: {:.6}", est.subset_rmse(&ctx)?);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solver_failures_exit_with_two() {
        let failure = pigment_core::Error::SolverFailure {
            reason: "non-finite objective".into(),
            best: vec![],
            value: f64::NAN,
        };
        assert_eq!(CliError::from(failure.clone()).exit_code(), 2);
        assert_eq!(CliError::from(IoError::Core(failure)).exit_code(), 2);
        assert_eq!(CliError::from(pigment_core::Error::DegenerateMixture).exit_code(), 1);
        assert_eq!(CliError::from(IoError::CorruptBundle("x".into())).exit_code(), 1);
    }
}
