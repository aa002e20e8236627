//! The `ilsi` command-line tool.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data or format errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use log::{debug, info};

use crate::classify::{
    evaluate, leave_one_out, load_model, predict_all, save_model, split_holdout, Classifier,
    TrainSpec, DEFAULT_BINS, DEFAULT_THRESHOLD,
};
use crate::features::{
    build_feature_vector, read_csv, roi_schema, reference_fixture, write_csv, ClassLabel, Dataset,
};
use crate::image::{load_image, save_image, Roi};
use crate::monitor::{
    run_detection_loop, save_events_csv, FrameSample, FrameSource, DEFAULT_CADENCE_SECONDS,
    DEFAULT_DEBOUNCE,
};
use crate::speckle::{simulate_speckle, PhasorFieldConfig};

#[derive(Debug, Parser)]
#[command(
    name = "ilsi",
    version,
    about = "Laser speckle texture analysis and micro-collapse detection",
    arg_required_else_help = true
)]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a fully developed speckle image.
    Simulate(SimulateArgs),
    /// Extract texture features from sampling windows of one or more images.
    Features(FeaturesArgs),
    /// Write the built-in 20-row reference dataset as CSV.
    Fixture(FixtureArgs),
    /// Train a classifier on a feature CSV.
    Train(TrainArgs),
    /// Classify every row of a feature CSV.
    Predict(PredictArgs),
    /// Confusion matrix, accuracy, sensitivity and specificity.
    Evaluate(EvaluateArgs),
    /// Run the debounced detector over a frame sequence.
    Monitor(MonitorArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    /// Contributing phasors per pixel.
    #[arg(long, default_value_t = 100)]
    pub phasors: usize,
    /// Amplitude of every phasor.
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Box-smoothing radius of the phase field in pixels (0 = independent pixels).
    #[arg(long, default_value_t = 0)]
    pub radius: usize,
    /// Output PGM path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Input image (PGM P5 or 8-bit grayscale PNG); repeat for several frames.
    #[arg(long, required = true)]
    pub image: Vec<PathBuf>,
    /// Sampling window `x,y,w,h[:A|B|C]`; repeat for several areas.
    #[arg(long, required = true)]
    pub roi: Vec<Roi>,
    /// Class label written for every row.
    #[arg(long, default_value = "unlabeled")]
    pub label: String,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Nb,
    Knn,
    Ensemble,
}

#[derive(Debug, Args)]
pub struct AlgoArgs {
    /// Classifier family.
    #[arg(long, value_enum, default_value_t = Algo::Knn)]
    pub algo: Algo,
    /// Equal-frequency bins for naive Bayes.
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    /// Normalised mutual-information cutoff for naive Bayes attribute selection.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Neighbours for k-NN.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Standardise columns before k-NN (`--standardized false` to disable).
    #[arg(long, default_value_t = true, action = ArgAction::Set, num_args = 0..=1,
          default_missing_value = "true")]
    pub standardized: bool,
    /// Ensemble members, e.g. `nb,knn:1,knn:3:std`.
    #[arg(long, value_delimiter = ',', default_value = "nb,knn:1,knn:3")]
    pub members: Vec<TrainSpec>,
}

impl AlgoArgs {
    fn spec(&self) -> TrainSpec {
        match self.algo {
            Algo::Nb => TrainSpec::NaiveBayes {
                bins: self.bins,
                threshold: self.threshold,
            },
            Algo::Knn => TrainSpec::Knn {
                k: self.k,
                standardized: self.standardized,
            },
            Algo::Ensemble => TrainSpec::Ensemble {
                members: self.members.clone(),
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub algo: AlgoArgs,
    /// Training CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Feature CSV; its label column is ignored.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output CSV `row,predicted,confidence`; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Trained model. Without --loo/--holdout it is applied to --in as is;
    /// with them its hyper-parameters are reused for retraining.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub algo: AlgoArgs,
    /// Labelled feature CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Class counted as positive for sensitivity and specificity.
    #[arg(long, default_value = ClassLabel::MICRO_COLLAPSE)]
    pub positive: String,
    /// Leave-one-out cross-validation.
    #[arg(long, conflicts_with = "holdout")]
    pub loo: bool,
    /// Stratified holdout with this training fraction.
    #[arg(long)]
    pub holdout: Option<f64>,
    /// Seed for the holdout split.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Directory of frames, a `*` wildcard pattern, or a CSV of feature vectors.
    #[arg(long)]
    pub frames: String,
    /// Sampling windows for image frames.
    #[arg(long)]
    pub roi: Vec<Roi>,
    /// Consecutive frames required to commit a state change.
    #[arg(long, default_value_t = DEFAULT_DEBOUNCE)]
    pub debounce: usize,
    /// Seconds between frames.
    #[arg(long, default_value_t = DEFAULT_CADENCE_SECONDS)]
    pub cadence: f64,
    /// Event CSV `frame,timestamp,from,to,confidence`.
    #[arg(long)]
    pub events_out: Option<PathBuf>,
    /// Per-frame label CSV `frame,timestamp,label,confidence`.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
}

/// Failure of a subcommand after argument parsing.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl<E: Into<crate::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Data(e.into().to_string())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match run(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Features(a) => features(a),
        Command::Fixture(a) => fixture(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Monitor(a) => monitor(a),
    }
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let cfg = PhasorFieldConfig {
        width: a.width,
        height: a.height,
        n_phasors: a.phasors,
        amplitude: a.amplitude,
        seed: a.seed,
        correlation_radius: a.radius,
    };
    cfg.validate()
        .map_err(|e| CliError::Usage(format!("--phasors/--width/--height/--amplitude: {e}")))?;
    let img = simulate_speckle(&cfg)?;
    save_image(&img, &a.out)?;
    let contrast: f64 = crate::speckle::speckle_contrast(&img, None)?;
    println!(
        "wrote {}x{} speckle image to {} (quantised contrast {contrast:.4})",
        a.width,
        a.height,
        a.out.display()
    );
    Ok(())
}

fn features(a: FeaturesArgs) -> Result<(), CliError> {
    let label = ClassLabel::new(a.label.clone())
        .map_err(|_| CliError::Usage("--label must be non-empty".into()))?;
    let schema = roi_schema(&a.roi)?;
    let mut ds = Dataset::<f64>::new(schema);
    for path in &a.image {
        let img = load_image(path)?;
        let v = build_feature_vector(&img, &a.roi)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        debug!("{}: {:?}", path.display(), v.values());
        ds.push(v, label.clone())?;
    }
    write_csv(&ds, &a.out)?;
    println!(
        "wrote {} rows x {} attributes to {}",
        ds.len(),
        ds.schema().len(),
        a.out.display()
    );
    Ok(())
}

fn fixture(a: FixtureArgs) -> Result<(), CliError> {
    let ds = reference_fixture::<f64>();
    write_csv(&ds, &a.out)?;
    println!("wrote {} fixture rows to {}", ds.len(), a.out.display());
    Ok(())
}

fn train(a: TrainArgs) -> Result<(), CliError> {
    let ds: Dataset<f64> = read_csv(&a.input)?;
    let spec = a.algo.spec();
    info!("training {spec} on {} rows", ds.len());
    let model = spec.fit(&ds)?;
    save_model(&model, &a.out)?;
    println!("trained {spec} on {} rows; model written to {}", ds.len(), a.out.display());
    if let crate::classify::Model::NaiveBayes(nb) = &model {
        println!("selected attributes: {}", nb.selected_names().join(", "));
        if nb.fallback_selection {
            println!("note: no attribute reached the threshold; kept the best one");
        }
    }
    Ok(())
}

fn predict(a: PredictArgs) -> Result<(), CliError> {
    let model = load_model::<f64>(&a.model)?;
    let ds: Dataset<f64> = read_csv(&a.input)?;
    let mut out = String::from("row,predicted,confidence\n");
    for (i, (v, _)) in ds.iter().enumerate() {
        let p = model.predict(&v)?;
        out.push_str(&format!("{i},{},{}\n", p.label, p.confidence));
    }
    match &a.out {
        Some(path) => {
            write_file(path, out.as_bytes())?;
            println!("wrote {} predictions to {}", ds.len(), path.display());
        }
        None => print!("{out}"),
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct EvaluationDocument<'a> {
    protocol: String,
    classifier: String,
    truth: &'a [ClassLabel],
    predictions: &'a [ClassLabel],
    report: &'a crate::classify::EvalReport,
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<(), CliError> {
    let positive = ClassLabel::new(a.positive.clone())
        .map_err(|_| CliError::Usage("--positive must be non-empty".into()))?;
    let ds: Dataset<f64> = read_csv(&a.input)?;
    let model = a.model.as_ref().map(load_model::<f64>).transpose()?;
    let spec = match &model {
        Some(m) => m.spec(),
        None => a.algo.spec(),
    };
    let (protocol, truth, predictions) = if a.loo {
        ("leave-one-out".to_string(), ds.labels().to_vec(), leave_one_out(&ds, &spec)?)
    } else if let Some(fraction) = a.holdout {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(CliError::Usage(format!(
                "--holdout must lie strictly between 0 and 1, got {fraction}"
            )));
        }
        let (train, test) = split_holdout(&ds, fraction, a.seed)?;
        let m = spec.fit(&train)?;
        (
            format!("holdout {fraction} (seed {})", a.seed),
            test.labels().to_vec(),
            predict_all(&m, &test)?,
        )
    } else {
        let m = match model {
            Some(m) => m,
            None => spec.fit(&ds)?,
        };
        ("resubstitution".to_string(), ds.labels().to_vec(), predict_all(&m, &ds)?)
    };
    let report = evaluate(&predictions, &truth, &positive)?;
    println!("classifier: {spec}");
    println!("protocol:   {protocol}");
    println!("{report}");
    if let Some(path) = &a.out {
        let doc = EvaluationDocument {
            protocol,
            classifier: spec.to_string(),
            truth: &truth,
            predictions: &predictions,
            report: &report,
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("report serialises");
        text.push('\n');
        write_file(path, text.as_bytes())?;
    }
    Ok(())
}

/// `*` matches any run of characters, everything else matches literally.
fn wildcard_match(pattern: &str, name: &str) -> bool {
    let parts: Vec<&str> = pattern.split('*').collect();
    if parts.len() == 1 {
        return pattern == name;
    }
    let (first, last) = (parts[0], parts[parts.len() - 1]);
    if !name.starts_with(first) || name.len() < first.len() + last.len() || !name.ends_with(last) {
        return false;
    }
    let mut rest = &name[first.len()..name.len() - last.len()];
    for mid in &parts[1..parts.len() - 1] {
        match rest.find(mid) {
            Some(i) => rest = &rest[i + mid.len()..],
            None => return false,
        }
    }
    true
}

fn list_frames(spec: &str) -> Result<Vec<PathBuf>, CliError> {
    let path = Path::new(spec);
    let (dir, pattern) = if path.is_dir() {
        (path.to_path_buf(), None)
    } else {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| CliError::Usage(format!("--frames {spec:?} is not a directory or pattern")))?;
        let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
        (parent.unwrap_or(Path::new(".")).to_path_buf(), Some(name.to_string()))
    };
    let entries = fs::read_dir(&dir).map_err(|e| io_error(&dir, e))?;
    let mut frames: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            match &pattern {
                Some(pat) => wildcard_match(pat, name),
                None => {
                    let ext = p.extension().and_then(|e| e.to_str()).unwrap_or("");
                    ext.eq_ignore_ascii_case("pgm") || ext.eq_ignore_ascii_case("png")
                }
            }
        })
        .collect();
    frames.sort();
    if frames.is_empty() {
        return Err(CliError::Data(format!("--frames {spec:?} matched no files")));
    }
    Ok(frames)
}

fn monitor(a: MonitorArgs) -> Result<(), CliError> {
    if a.debounce == 0 {
        return Err(CliError::Usage("--debounce must be at least 1".into()));
    }
    if !(a.cadence.is_finite() && a.cadence >= 0.0) {
        return Err(CliError::Usage("--cadence must be a non-negative number".into()));
    }
    let model = load_model::<f64>(&a.model)?;
    let timestamp = |i: usize| i as f64 * a.cadence;
    let stream: Vec<FrameSample<f64>> = if a.frames.to_ascii_lowercase().ends_with(".csv") {
        let ds: Dataset<f64> = read_csv(&a.frames)?;
        ds.iter()
            .enumerate()
            .map(|(i, (v, _))| FrameSample {
                index: i,
                timestamp: timestamp(i),
                source: FrameSource::Features(v),
            })
            .collect()
    } else {
        if a.roi.is_empty() {
            return Err(CliError::Usage("--roi is required for image frames".into()));
        }
        list_frames(&a.frames)?
            .into_iter()
            .enumerate()
            .map(|(i, p)| FrameSample {
                index: i,
                timestamp: timestamp(i),
                source: FrameSource::ImagePath(p),
            })
            .collect()
    };
    let rois = if stream
        .iter()
        .all(|s| matches!(s.source, FrameSource::Features(_)))
    {
        Vec::new()
    } else {
        a.roi.clone()
    };
    let out = run_detection_loop(&stream, &model, &rois, a.debounce)?;
    println!("processed {} frames, {} event(s)", out.labels.len(), out.events.len());
    for e in &out.events {
        println!(
            "frame {} (t = {} s): {} -> {} (confidence {:.3})",
            e.frame, e.timestamp, e.from, e.to, e.confidence
        );
    }
    if let Some(path) = &a.events_out {
        save_events_csv(&out.events, path)?;
    }
    if let Some(path) = &a.labels_out {
        let mut file = fs::File::create(path).map_err(|e| io_error(path, e))?;
        let mut text = String::from("frame,timestamp,label,confidence\n");
        for l in &out.labels {
            text.push_str(&format!("{},{},{},{}\n", l.index, l.timestamp, l.label, l.confidence));
        }
        file.write_all(text.as_bytes()).map_err(|e| io_error(path, e))?;
    }
    Ok(())
}
