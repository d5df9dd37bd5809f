use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use udm_core::alignment::PhonemeInventory;
use udm_core::classifier::Thresholds;
use udm_core::eval::{evaluate_detection, label_error_rate, EventSpan, MetricsReport};
use udm_core::frontend::FrontendConfig;
use udm_core::report::{
    render_alignment_svg, AnalysisConfig, AnalysisReport, Analyzer, ReportEngine, ReportError, ReportStore,
    SvgOptions,
};
use udm_core::service::{self, ServiceConfig, ServiceError};
use udm_core::synth::{
    generate_synthetic_case, random_spec, write_case, CategoryPriors, GoldAnnotation, SynthError, SynthesisSpec,
};
use udm_core::temporal::WeightBundle;

const DEFAULT_STORE: &str = "udm-store";

#[derive(Debug, Parser)]
#[command(name = "udm", version, about = "Interpretable dysfluency analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze one recording against its transcript and store the report.
    Analyze {
        #[arg(long)]
        audio: PathBuf,
        #[arg(long)]
        transcript: String,
        /// Phoneme inventory JSON; built-in demo inventory when omitted.
        #[arg(long)]
        inventory: Option<PathBuf>,
        #[arg(long)]
        thresholds: Option<PathBuf>,
        /// Analysis config JSON (frontend, calibration, decoder).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Frontend config JSON; overrides the one in --config.
        #[arg(long)]
        frontend: Option<PathBuf>,
        /// Temporal weight bundle for open-set scoring.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, env = "UDM_STORE", default_value = DEFAULT_STORE)]
        store: PathBuf,
    },
    /// Re-apply thresholds to a stored report.
    Reanalyze {
        #[arg(long)]
        report: String,
        #[arg(long)]
        thresholds: PathBuf,
        #[arg(long)]
        expected_version: Option<u64>,
        /// Also write the new version here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, env = "UDM_STORE", default_value = DEFAULT_STORE)]
        store: PathBuf,
    },
    /// Generate synthetic cases with gold annotations.
    Synth {
        #[arg(long)]
        seed: u64,
        /// Synthesis spec JSON; a random spec per seed when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Number of consecutive seeds (random specs only).
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long)]
        inventory: Option<PathBuf>,
        /// Frontend config used for the gold frame grid; short-window when omitted.
        #[arg(long)]
        frontend: Option<PathBuf>,
    },
    /// Score predicted events against gold.
    Eval {
        /// Report JSON or a JSON array of events.
        #[arg(long)]
        pred: PathBuf,
        /// Gold annotation JSON or a JSON array of events.
        #[arg(long)]
        gold: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "UDM_STORE")]
        store: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn input_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| input_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| input_err(path, e))
}

fn load_inventory(path: Option<&Path>) -> Result<PhonemeInventory, CliError> {
    match path {
        Some(p) => PhonemeInventory::load(p).map_err(|e| input_err(p, e)),
        None => Ok(PhonemeInventory::demo()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze {
            audio,
            transcript,
            inventory,
            thresholds,
            config,
            frontend,
            weights,
            out,
            svg,
            store,
        } => {
            let inv = load_inventory(inventory.as_deref())?;
            let mut cfg: AnalysisConfig = match &config {
                Some(p) => read_json(p)?,
                None => AnalysisConfig::default(),
            };
            if let Some(p) = &frontend {
                cfg.frontend = read_json::<FrontendConfig>(p)?;
            }
            if let Some(p) = &thresholds {
                cfg.thresholds = Thresholds::load(p).map_err(|e| input_err(p, e))?;
            }
            let mut analyzer = Analyzer::new(inv, cfg);
            if let Some(p) = &weights {
                analyzer = analyzer
                    .with_weights(&WeightBundle::load(p).map_err(|e| input_err(p, e))?)
                    .map_err(|e| input_err(p, e))?;
            }
            let engine = ReportEngine::new(analyzer, ReportStore::open(&store)?);
            let report = engine.analyze_file(&audio, &transcript)?;
            write_text(&out, &report.to_canonical_json())?;
            if let Some(p) = &svg {
                write_text(p, &render_alignment_svg(&report, &SvgOptions::default()))?;
            }
            println!("{}", report.report_id);
            eprintln!(
                "{} events, rtf {:.3}",
                report.events.len(),
                report.timing.real_time_factor
            );
        }
        Command::Reanalyze {
            report,
            thresholds,
            expected_version,
            out,
            svg,
            store,
        } => {
            let th = Thresholds::load(&thresholds).map_err(|e| input_err(&thresholds, e))?;
            let store = ReportStore::open(&store)?;
            let next = store.reanalyze(&report, &th, expected_version)?;
            if let Some(p) = &out {
                write_text(p, &next.to_canonical_json())?;
            }
            if let Some(p) = &svg {
                write_text(p, &render_alignment_svg(&next, &SvgOptions::default()))?;
            }
            println!("{} version {} ({} events)", next.report_id, next.version, next.events.len());
        }
        Command::Synth {
            seed,
            spec,
            out_dir,
            count,
            inventory,
            frontend,
        } => {
            let inv = load_inventory(inventory.as_deref())?;
            let cfg = match &frontend {
                Some(p) => read_json::<FrontendConfig>(p)?,
                None => FrontendConfig::short_window(),
            };
            let specs: Vec<SynthesisSpec> = match &spec {
                Some(p) => {
                    let mut s = SynthesisSpec::load(p)?;
                    s.seed = seed;
                    vec![s]
                }
                None => {
                    let priors = CategoryPriors::default();
                    (seed..seed + count.max(1)).map(|s| random_spec(s, &inv, &priors)).collect()
                }
            };
            for s in &specs {
                let case = generate_synthetic_case(s, &inv, &cfg)?;
                let files = write_case(&out_dir, s, &case)?;
                println!("{}\t{}\t{}", files.audio.display(), files.gold.display(), s.transcript(&inv)?.source_text);
            }
        }
        Command::Eval { pred, gold } => {
            let pred_value: serde_json::Value = read_json(&pred)?;
            let gold_value: serde_json::Value = read_json(&gold)?;
            let report: Option<AnalysisReport> = serde_json::from_value(pred_value.clone()).ok();
            let pred_events: Vec<EventSpan> = match &report {
                Some(r) => r.events.iter().map(EventSpan::from).collect(),
                None => serde_json::from_value(pred_value).map_err(|e| input_err(&pred, e))?,
            };
            let gold_ann: Option<GoldAnnotation> = serde_json::from_value(gold_value.clone()).ok();
            let gold_events: Vec<EventSpan> = match &gold_ann {
                Some(g) => g.events.clone(),
                None => serde_json::from_value(gold_value).map_err(|e| input_err(&gold, e))?,
            };
            let mut metrics = MetricsReport::from(evaluate_detection(&pred_events, &gold_events));
            if let (Some(r), Some(g)) = (&report, &gold_ann) {
                let labels = r.realized_frame_labels(g.frame_labels.len());
                match label_error_rate(&labels, &g.frame_labels) {
                    Ok(aer) => metrics.aer_percent = Some(aer),
                    Err(e) => log::warn!("alignment error rate skipped: {e}"),
                }
                metrics.rtf = Some(r.timing.real_time_factor);
            }
            println!("{}", serde_json::to_string_pretty(&metrics).expect("metrics serialize"));
        }
        Command::Serve { config, store } => {
            let mut cfg = ServiceConfig::load(&config)?;
            if let Some(s) = store {
                cfg.store_dir = s;
            }
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(service::serve(&cfg))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Report(r) = &e {
                if let Some(stage) = r.stage() {
                    eprintln!("stage: {stage}");
                }
            }
            ExitCode::FAILURE
        }
    }
}
