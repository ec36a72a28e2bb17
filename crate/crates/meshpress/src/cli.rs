//! `meshpress` command line.
//!
//! `separate` runs the whole pipeline offline and exits with
//! 0 on success, 1 for an unreadable input image, 2 for a bad config,
//! 3 when `--strict-stylize` is set and the stylizer fails, and 4 when the
//! outputs cannot be written.

use std::ffi::OsString;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use meshpress_core::{render, PrintStrategy, RasterImage, RenderMode};

use crate::settings::Settings;
use crate::stylizer::{stylize, StylizerContract};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BAD_IMAGE: i32 = 1;
pub const EXIT_BAD_CONFIG: i32 = 2;
pub const EXIT_STYLIZER: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "meshpress",
    version,
    about = "Photo to CMYK silkscreen stencils for a thermal mesh printer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Separate one PNG into four stencils and a print plan.
    Separate(SeparateArgs),
    /// Run the HTTP job service.
    Serve(ServeArgs),
    /// Run the posterizing stand-in stylizer at POST /stylize.
    Stylizer {
        #[arg(long, default_value = "127.0.0.1:8090")]
        bind: SocketAddr,
    },
}

#[derive(Debug, Args)]
pub struct SeparateArgs {
    pub input: PathBuf,
    #[arg(long, default_value = "fourcolor")]
    pub mode: RenderMode,
    #[arg(long, default_value = "cmyk")]
    pub strategy: PrintStrategy,
    #[arg(long)]
    pub out: PathBuf,
    /// Same file format as the service configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Stylizer endpoint; overrides the config file.
    #[arg(long, conflicts_with = "no_stylize")]
    pub stylizer: Option<String>,
    #[arg(long)]
    pub no_stylize: bool,
    /// Fail instead of falling back to the unstyled photo.
    #[arg(long)]
    pub strict_stylize: bool,
    #[arg(long)]
    pub stylizer_timeout_ms: Option<u64>,
    /// Also write `{c,m,y,k}.escpos` raster frames.
    #[arg(long)]
    pub emit_frames: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `bind_addr` and `BIND_ADDR`.
    #[arg(long)]
    pub bind: Option<String>,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match cli.command {
        Command::Separate(args) => separate(&args),
        Command::Serve(args) => serve(&args),
        Command::Stylizer { bind } => run_async(crate::api::serve_stylizer(bind)),
    }
}

fn run_async(fut: impl std::future::Future<Output = std::io::Result<()>>) -> i32 {
    let rt = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("meshpress: cannot start runtime: {e}");
            return EXIT_IO;
        }
    };
    match rt.block_on(fut) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("meshpress: {e}");
            EXIT_IO
        }
    }
}

fn load_settings(path: Option<&PathBuf>) -> Result<Settings, i32> {
    match path {
        Some(p) => Settings::load(p).map_err(|e| {
            eprintln!("meshpress: {e}");
            EXIT_BAD_CONFIG
        }),
        None => Ok(Settings::default()),
    }
}

fn serve(args: &ServeArgs) -> i32 {
    let mut settings = match load_settings(args.config.as_ref()) {
        Ok(s) => s,
        Err(code) => return code,
    };
    settings.apply_env(|k| std::env::var(k).ok());
    if let Some(bind) = &args.bind {
        settings.service.bind_addr = bind.clone();
    }
    run_async(crate::api::serve(settings))
}

fn separate(args: &SeparateArgs) -> i32 {
    let settings = match load_settings(args.config.as_ref()) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let input = match std::fs::read(&args.input) {
        Ok(bytes) => bytes,
        Err(e) => {
            eprintln!("meshpress: cannot read {}: {e}", args.input.display());
            return EXIT_BAD_IMAGE;
        }
    };
    let mut image = match RasterImage::from_png(&input) {
        Ok(img) => img,
        Err(e) => {
            eprintln!("meshpress: {}: {e}", args.input.display());
            return EXIT_BAD_IMAGE;
        }
    };

    let endpoint = if args.no_stylize {
        None
    } else {
        args.stylizer
            .clone()
            .or(settings.service.stylizer_url.clone())
    };
    if let Some(endpoint) = endpoint {
        let timeout = args
            .stylizer_timeout_ms
            .unwrap_or(settings.service.stylizer_timeout_ms);
        let contract = StylizerContract::new(endpoint).with_timeout(Duration::from_millis(timeout));
        let dims = (image.width(), image.height());
        let outcome = tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .build()
            .map_err(|e| e.to_string())
            .and_then(|rt| {
                rt.block_on(stylize(&reqwest::Client::new(), &contract, input, dims))
                    .map_err(|e| e.to_string())
            });
        match outcome {
            Ok(styled) => image = styled,
            Err(e) if args.strict_stylize || settings.service.strict_stylize => {
                eprintln!("meshpress: {e}");
                return EXIT_STYLIZER;
            }
            Err(e) => eprintln!("meshpress: {e}; continuing with the original image"),
        }
    }

    let out = match render(&image, args.mode, args.strategy, &settings.pipeline) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("meshpress: {e}");
            return EXIT_BAD_IMAGE;
        }
    };
    if let Err(e) = out.write_to(&args.out, args.emit_frames) {
        eprintln!("meshpress: writing {}: {e}", args.out.display());
        return EXIT_IO;
    }
    EXIT_OK
}
