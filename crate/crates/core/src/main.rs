use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use invextract::pipeline::{EngineChoice, Pipeline, PipelineConfig, SCHEMA_JSON};
use invextract::Result;

#[derive(Parser)]
#[command(name = "invextract", version, about = "Invoice image to structured JSON")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract header fields and line items from one image or a list of images.
    Run {
        /// Input image (PNG or JPEG); omit with --batch.
        #[arg(required_unless_present = "batch")]
        image: Option<PathBuf>,
        /// TOML configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output JSON file (single image) or directory (batch). Single-image
        /// output goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write numbered stage images here.
        #[arg(long)]
        debug_dir: Option<PathBuf>,
        /// OCR engine: the external recognizer or the sidecar-backed mock.
        #[arg(long, value_enum, default_value_t = EngineChoice::External)]
        ocr: EngineChoice,
        /// File listing one image path per line; relative paths are resolved
        /// against the list's directory.
        #[arg(long, conflicts_with = "image")]
        batch: Option<PathBuf>,
    },
    /// Print the JSON schema of the output document.
    Schema,
}

fn read_list(list: &Path) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(list).map_err(|e| invextract::Error::Input {
        path: list.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = list.parent().unwrap_or(Path::new("."));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| base.join(l))
        .collect())
}

fn run(
    image: Option<PathBuf>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    debug_dir: Option<PathBuf>,
    ocr: EngineChoice,
    batch: Option<PathBuf>,
) -> Result<bool> {
    let mut cfg = match &config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(d) = debug_dir {
        cfg.debug_dir = Some(d);
        cfg.keep_stage_dumps = true;
    }
    let pipeline = Pipeline::new(cfg)?;
    let make_engine = |p: &Path| ocr.build(p, pipeline.config());

    if let Some(list) = batch {
        let inputs = read_list(&list)?;
        let out_dir = out.unwrap_or_else(|| PathBuf::from("invextract-out"));
        let mut ok = true;
        for o in pipeline.run_batch(&inputs, &out_dir, &make_engine)? {
            match o.result {
                Ok(r) => {
                    let flag = if r.diagnostics.degraded { " (degraded)" } else { "" };
                    eprintln!("{} -> {}{flag}", o.input.display(), o.output.display());
                }
                Err(e) => {
                    ok = false;
                    eprintln!("{}: error: {e}", o.input.display());
                }
            }
        }
        return Ok(ok);
    }

    let image = image.expect("clap requires an image without --batch");
    let engine = make_engine(&image)?;
    let result = pipeline.run(&image, engine.as_ref())?;
    let json = result.to_json()?;
    match out {
        Some(p) => std::fs::write(&p, json + "\n")?,
        None => println!("{json}"),
    }
    if result.diagnostics.degraded {
        for s in &result.diagnostics.degraded_stages {
            eprintln!("degraded: {}: {}", s.stage, s.reason);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Schema => {
            print!("{SCHEMA_JSON}");
            ExitCode::SUCCESS
        }
        Command::Run {
            image,
            config,
            out,
            debug_dir,
            ocr,
            batch,
        } => match run(image, config, out, debug_dir, ocr, batch) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => {
                eprintln!("error: {e}");
                if let invextract::Error::Engine { raw, .. } = &e {
                    if !raw.is_empty() {
                        eprintln!("{raw}");
                    }
                }
                ExitCode::from(2)
            }
        },
    }
}
