use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sphere_drr::array::ArrayGeometry;
use sphere_drr::config::{GeometrySource, OutputFormat, RunConfig};
use sphere_drr::drr::{AveragingDomain, OffsetScheme};
use sphere_drr::pipeline::{run_estimate, ErrorInfo};
use sphere_drr::report::{emit_plot_data, LabeledReport, PlotAxis};
use sphere_drr::sim::{DrySignal, RoomScene};
use sphere_drr::sweep::{run_sweep, scene_grid, simulate_scene, SweepSpec};
use sphere_drr::wav::write_wav_f32;
use sphere_drr::{selftest, Error};

const EXIT_ERROR: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NO_SIGNAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "sphere-drr",
    version,
    about = "Blind DRR estimation for a 32-capsule spherical array"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate subband and fullband DRR of a recording.
    Estimate(EstimateArgs),
    /// Render a scene to a 32-channel WAV plus ground-truth sidecar.
    Simulate(SimulateArgs),
    /// Simulate and estimate a batch of scenes.
    Sweep(SweepArgs),
    /// Run the numerical self-checks.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Offsets {
    Cross,
    OnAxis,
}

#[derive(Clone, Copy, ValueEnum)]
enum Signal {
    Speech,
    Bursts,
}

#[derive(Args)]
struct EstimateArgs {
    /// Input WAV; overrides `input` from --config.
    input: Option<PathBuf>,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Geometry JSON (default: built-in Eigenmike layout).
    #[arg(long)]
    geometry: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the result here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Use the first channels when the file has more than the geometry.
    #[arg(long)]
    allow_extra_channels: bool,
    #[arg(long)]
    frame_len: Option<usize>,
    #[arg(long)]
    hop: Option<usize>,
    #[arg(long)]
    vad_threshold_db: Option<f64>,
    #[arg(long)]
    doa_grid_deg: Option<f64>,
    /// DOA smoothing band as LOW:HIGH in Hz.
    #[arg(long, value_parser = parse_band)]
    doa_band: Option<[f64; 2]>,
    #[arg(long, value_enum)]
    offsets: Option<Offsets>,
    /// Average subbands in linear power instead of dB.
    #[arg(long)]
    linear_fullband: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scene JSON.
    scene: PathBuf,
    /// Output WAV path; the sidecar goes next to it as `.json`.
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 6.0)]
    duration_s: f64,
    #[arg(long, value_enum, default_value = "speech")]
    signal: Signal,
    #[arg(long)]
    geometry: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep JSON; without it a grid is built from the flags below.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 2.0])]
    distances_m: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.7, 0.55, 0.45, 0.35, 0.28])]
    absorptions: Vec<f64>,
    #[arg(long, default_value_t = 18.0)]
    snr_db: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 6.0)]
    duration_s: f64,
    #[arg(long)]
    geometry: Option<PathBuf>,
    /// Full results JSON (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Per-band plot data CSV.
    #[arg(long)]
    band_csv: Option<PathBuf>,
    /// Per-scene plot data CSV.
    #[arg(long)]
    scene_csv: Option<PathBuf>,
}

fn parse_band(s: &str) -> Result<[f64; 2], String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LOW:HIGH")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    Ok([lo, hi])
}

enum Failure {
    Pipeline(Error),
    NoSignal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Pipeline(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Pipeline(e.into())
    }
}

fn diagnostic(info: &ErrorInfo) {
    let line = serde_json::json!({ "error": info });
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn write_result(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn load_geometry(path: Option<&Path>) -> Result<ArrayGeometry, Error> {
    match path {
        Some(p) => GeometrySource::File(p.to_path_buf()).load(),
        None => GeometrySource::default().load(),
    }
}

fn estimate(args: EstimateArgs) -> Result<(), Failure> {
    let mut cfg = match (&args.config, &args.input) {
        (Some(c), _) => RunConfig::load(c)?,
        (None, Some(i)) => RunConfig::new(i),
        (None, None) => {
            return Err(Error::Config {
                field: "input".into(),
                message: "give an input WAV or --config".into(),
            }
            .into())
        }
    };
    if let Some(i) = args.input {
        cfg.input = i;
    }
    if let Some(g) = args.geometry {
        cfg.geometry = GeometrySource::File(g);
    }
    if let Some(f) = args.format {
        cfg.format = match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        };
    }
    if args.output.is_some() {
        cfg.output = args.output;
    }
    cfg.allow_extra_channels |= args.allow_extra_channels;
    let a = &mut cfg.analysis;
    if let Some(v) = args.frame_len {
        a.stft.frame_len = v;
    }
    if let Some(v) = args.hop {
        a.stft.hop = v;
    }
    if let Some(v) = args.vad_threshold_db {
        a.vad.threshold_db = v;
    }
    if let Some(v) = args.doa_grid_deg {
        a.doa.grid_deg = v;
        a.doa.refine_deg = a.doa.refine_deg.min(v);
    }
    if let Some(v) = args.doa_band {
        a.doa.band_hz = v;
    }
    match args.offsets {
        Some(Offsets::Cross) => a.drr.offsets = OffsetScheme::default(),
        Some(Offsets::OnAxis) => a.drr.offsets = OffsetScheme::OnAxis,
        None => {}
    }
    if args.linear_fullband {
        a.drr.fullband_averaging = AveragingDomain::Linear;
    }

    let report = run_estimate(&cfg)?;
    if report.provenance.extra_channels_ignored {
        let _ = writeln!(
            std::io::stderr(),
            "{}",
            serde_json::json!({"warning": "extra channels ignored", "used": report.provenance.num_channels})
        );
    }
    let text = match cfg.format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Csv => emit_plot_data(
            &[LabeledReport {
                id: "input",
                report: &report,
                truth_db: None,
            }],
            PlotAxis::Band,
        )?,
    };
    write_result(cfg.output.as_deref(), &text)?;
    if report.is_low_confidence() {
        return Err(Failure::NoSignal(format!(
            "DOA peak only {:.1} dB above the spectrum median",
            report.doa.peak_to_median_db
        )));
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    if !args.scene.exists() {
        return Err(Error::MissingFile(args.scene).into());
    }
    let scene: RoomScene = serde_json::from_str(&fs::read_to_string(&args.scene)?).map_err(|e| Error::Config {
        field: "scene".into(),
        message: e.to_string(),
    })?;
    scene.validate()?;
    if !args.duration_s.is_finite() || args.duration_s <= 0.0 {
        return Err(Error::Config {
            field: "duration_s".into(),
            message: "must be positive".into(),
        }
        .into());
    }
    let geometry = load_geometry(args.geometry.as_deref())?;
    let signal = match args.signal {
        Signal::Speech => DrySignal::SpeechShapedNoise,
        Signal::Bursts => DrySignal::BurstTrain {
            period_s: 0.5,
            duty: 0.5,
        },
    };
    let (rec, sidecar) = simulate_scene(&scene, &signal, args.duration_s, &geometry)?;
    write_wav_f32(&args.output, &rec)?;
    let sidecar_path = args.output.with_extension("json");
    fs::write(
        &sidecar_path,
        serde_json::to_string_pretty(&sidecar).map_err(Error::from)? + "\n",
    )?;
    write_result(
        None,
        &serde_json::json!({"wav": args.output, "sidecar": sidecar_path, "scene_hash": sidecar.scene_hash}).to_string(),
    )?;
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let spec = match &args.spec {
        Some(p) => {
            if !p.exists() {
                return Err(Error::MissingFile(p.clone()).into());
            }
            serde_json::from_str::<SweepSpec>(&fs::read_to_string(p)?).map_err(|e| Error::Config {
                field: "spec".into(),
                message: e.to_string(),
            })?
        }
        None => SweepSpec {
            scenes: scene_grid(&args.distances_m, &args.absorptions, args.snr_db, args.seed),
            signal: DrySignal::SpeechShapedNoise,
            duration_s: args.duration_s,
            analysis: Default::default(),
        },
    };
    spec.analysis.validate()?;
    for s in &spec.scenes {
        s.scene.validate()?;
    }
    let geometry = load_geometry(args.geometry.as_deref())?;
    let results = run_sweep(&spec, &geometry)?;
    for r in &results {
        if let Some(e) = &r.error {
            diagnostic(e);
        }
    }
    let labeled: Vec<LabeledReport> = results
        .iter()
        .filter_map(|r| {
            Some(LabeledReport {
                id: &r.id,
                report: r.report.as_ref()?,
                truth_db: r.sidecar.ground_truth_drr_db,
            })
        })
        .collect();
    if let Some(p) = &args.band_csv {
        fs::write(p, emit_plot_data(&labeled, PlotAxis::Band)?)?;
    }
    if let Some(p) = &args.scene_csv {
        fs::write(p, emit_plot_data(&labeled, PlotAxis::Scene)?)?;
    }
    let text = serde_json::to_string_pretty(&results).map_err(Error::from)?;
    write_result(args.output.as_deref(), &text)?;
    Ok(())
}

fn run_selftest() -> Result<(), Failure> {
    let checks = selftest::run();
    let text = serde_json::to_string_pretty(&checks).map_err(Error::from)?;
    write_result(None, &text)?;
    if let Some(c) = checks.iter().find(|c| !c.passed) {
        return Err(Error::InvalidArgument(format!("self-check {} failed: {:.3e}", c.name, c.value)).into());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            diagnostic(&ErrorInfo {
                code: "threads".into(),
                module: "cli".into(),
                message: e.to_string(),
            });
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let outcome = match cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Selftest => run_selftest(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NoSignal(msg)) => {
            diagnostic(&ErrorInfo {
                code: "no_signal".into(),
                module: "doa".into(),
                message: msg,
            });
            ExitCode::from(EXIT_NO_SIGNAL)
        }
        Err(Failure::Pipeline(e)) => {
            let mut info = ErrorInfo::from(&e);
            if let Some(b) = e.band_hz() {
                info.message = format!("{} (band {b:.1} Hz)", info.message);
            }
            diagnostic(&info);
            ExitCode::from(match e.code() {
                "no_signal" => EXIT_NO_SIGNAL,
                "config" | "missing_file" => EXIT_USAGE,
                _ => EXIT_ERROR,
            })
        }
    }
}
