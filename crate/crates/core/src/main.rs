use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::{error, info};

use nls_bubbles::driver::{run_simulation, Method, RunConfig, TestCase};

/// Bubble (Gaussian wave packet) and spectral solvers for
/// i∂ₜψ + μ(Δψ − |x|²ψ) = λ|ψ|²ψ.
///
/// Flags override values read from `--config`.
#[derive(Parser, Debug)]
#[command(version, about, allow_negative_numbers = true)]
struct Cli {
    /// bubbles, spectral or both
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// preset initial data: 1, 2 or 3
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["1", "2", "3"]))]
    testcase: Option<String>,
    /// TOML file with a [run] table and optional [[bubbles]]
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "t-final")]
    t_final: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    halfwidth: Option<f64>,
    /// relative singular-value cutoff of the projection solve
    #[arg(long = "svd-rtol")]
    svd_rtol: Option<f64>,
    /// output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// write observables every this many steps
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum MethodArg {
    Bubbles,
    Spectral,
    Both,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Bubbles => Method::Bubbles,
            MethodArg::Spectral => Method::Spectral,
            MethodArg::Both => Method::Both,
        }
    }
}

fn build_config(cli: Cli) -> nls_bubbles::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = cli.method {
        cfg.method = m.into();
    }
    if let Some(t) = &cli.testcase {
        cfg.testcase = t.parse::<TestCase>()?;
        cfg.d = 2;
    }
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = cli.$field { cfg.$field = v; } )* };
    }
    set!(dt, t_final, mu, lambda, nx, ny, halfwidth, svd_rtol, stride);
    if let Some(out) = cli.out {
        cfg.output = out;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let result = build_config(Cli::parse()).and_then(|cfg| {
        let out = run_simulation(&cfg)?;
        info!(
            "wrote {} ({} observable rows per method)",
            cfg.output.display(),
            out.bubble_observables
                .as_ref()
                .or(out.spectral_observables.as_ref())
                .map_or(0, Vec::len)
        );
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::FAILURE
        }
    }
}
