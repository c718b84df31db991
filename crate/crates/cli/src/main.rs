mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{EvaluateArgs, KernelArgs, OtArgs, PsfArgs, ReconstructArgs, RefocusArgs, SimulateArgs};

/// Light-field imaging through scattering media: simulate captures, refocus,
/// build diffuse kernels and invert them.
#[derive(Debug, Parser)]
#[command(name = "scatterfield", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a camera-array light field of a scene with Monte Carlo transport.
    Simulate(SimulateArgs),
    /// Render a point emitter and compare its refocused profile with the diffuse kernel.
    Psf(PsfArgs),
    /// Shift-and-add refocus a light field onto one plane.
    Refocus(RefocusArgs),
    /// Rasterize the diffuse kernel of a medium.
    Kernel(KernelArgs),
    /// Refocus a light field and invert the diffuse blur.
    Reconstruct(ReconstructArgs),
    /// PSNR and SSIM between two images.
    Evaluate(EvaluateArgs),
    /// Optical thickness from beam powers, or measured on a simulated slab.
    Ot(OtArgs),
}

fn configure_threads() -> scatterfield::Result<()> {
    let Ok(raw) = std::env::var("SCATTERFIELD_THREADS") else { return Ok(()) };
    let n: usize = raw.trim().parse().map_err(|_| {
        scatterfield::Error::InvalidArgument(format!("SCATTERFIELD_THREADS must be a count (got {raw:?})"))
    })?;
    if n > 0 {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Psf(a) => commands::psf(a),
        Command::Refocus(a) => commands::refocus(a),
        Command::Kernel(a) => commands::kernel(a),
        Command::Reconstruct(a) => commands::reconstruct(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Ot(a) => commands::ot(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let core = err.chain().find_map(|e| e.downcast_ref::<scatterfield::Error>());
            let (category, code) = core.map_or(("error", 1), |e| (e.category(), e.exit_code()));
            eprintln!("scatterfield: {category}: {err:#}");
            ExitCode::from(code as u8)
        }
    }
}
