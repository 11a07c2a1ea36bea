//! Batch front end over the gaitdex library. `main.rs` only parses arguments
//! and maps [`CliError`] to an exit code.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gaitdex::cohort::Cohort;
use gaitdex::csv_io::{load_cohort, load_cohort_with_metadata, save_cohort, write_metadata};
use gaitdex::error::GaitError;
use gaitdex::indices::{
    stability_multivariate, stability_per_joint, GdiFeatureBasis, GDI_FEATURES, GDI_GRID_POINTS,
};
use gaitdex::pipeline::{fit_pipeline, Mode, PipelineConfig, PipelineModel};
use gaitdex::report::{
    compare_tables, correlate_columns, score_cohort, IndexReport, IndexSelection, ReportTable, ScoreOptions,
};
use gaitdex::synth::{synth_cohort, SynthConfig};
use gaitdex::variable::Side;
use serde::Serialize;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MISSING_BASIS: i32 = 3;
pub const GDI_BASIS_FILE: &str = "gdi_features_51x9.csv";

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn failure(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }
}

impl From<GaitError> for CliError {
    fn from(e: GaitError) -> Self {
        CliError::failure(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::failure(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "gaitdex", version, about = "Functional gait deviation indices")]
pub struct Cli {
    /// key = value file with defaults (omega, modes, pelvis_side, indices,
    /// data_dir, format, and the service keys).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// More log output on standard error (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit per-variable FPCA and MFPCA for the requested modes.
    Fit(FitArgs),
    /// Score a cohort with a fitted model and write the index report.
    Score(ScoreArgs),
    /// Sensitivity of the indices to the number of retained components.
    Stability(StabilityArgs),
    /// Kendall's tau between matching columns of two reports.
    Compare(CompareArgs),
    /// Pairwise Kendall's tau between the index columns of one report.
    Correlate(CorrelateArgs),
    /// Write a synthetic cohort with known deviation structure.
    Synth(SynthArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

fn parse_omega(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("omega must be in (0, 1], got {v}"))
    }
}

fn parse_modes(s: &str) -> Result<Vec<Mode>, String> {
    let modes: Vec<Mode> = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<Mode>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    if modes.is_empty() {
        return Err("no modes requested".into());
    }
    Ok(modes)
}

#[derive(Debug, Args)]
pub struct CohortInput {
    /// Long-format curve CSV.
    pub cohort: PathBuf,
    /// Optional clinical metadata CSV.
    #[arg(long)]
    pub metadata: Option<PathBuf>,
}

impl CohortInput {
    fn load(&self) -> Result<Cohort, CliError> {
        check_exists(&self.cohort)?;
        let c = match &self.metadata {
            Some(m) => {
                check_exists(m)?;
                load_cohort_with_metadata(&self.cohort, m)?
            }
            None => load_cohort(&self.cohort)?,
        };
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: CohortInput,
    /// Cumulative variance threshold, in (0, 1].
    #[arg(long, value_parser = parse_omega)]
    pub omega: Option<f64>,
    /// Comma-separated subset of combined,left,right,per_joint.
    #[arg(long)]
    pub modes: Option<String>,
    /// Side whose pelvis curves join the 15-variable set.
    #[arg(long)]
    pub pelvis_side: Option<Side>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    pub model: PathBuf,
    #[command(flatten)]
    pub input: CohortInput,
    /// Comma-separated subset of fgdi,gdi,gps,oa (default fgdi,gps,oa).
    #[arg(long)]
    pub indices: Option<String>,
    /// GDI feature basis CSV (459 rows x 15 columns, no header).
    #[arg(long)]
    pub gdi_basis: Option<PathBuf>,
    /// Learn a surrogate GDI basis from the cohort when no basis file is found.
    #[arg(long)]
    pub surrogate_gdi: bool,
    /// Output file; `.json` selects JSON unless --format says otherwise.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "json"])]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    pub model: PathBuf,
    #[command(flatten)]
    pub input: CohortInput,
    /// Component-count offsets, e.g. -2,-1,1,2.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "-2,-1,1,2"
    )]
    pub deltas: Vec<i32>,
    /// Which fitted mode to analyse.
    #[arg(long, default_value = "per_joint")]
    pub mode: Mode,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub report_a: PathBuf,
    pub report_b: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    pub report: PathBuf,
    /// Restrict to these columns (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    /// Only use healthy (`healthy`) or patient (`patients`) rows.
    #[arg(long, value_parser = ["all", "healthy", "patients"], default_value = "all")]
    pub rows: String,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub healthy: usize,
    #[arg(long, default_value_t = 20)]
    pub patients: usize,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub metadata_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub bind: Option<std::net::SocketAddr>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub max_upload_mib: Option<usize>,
}

/// Defaults from `--config` and the environment; command-line flags win.
#[derive(Debug, Default)]
struct Defaults {
    values: HashMap<String, String>,
}

impl Defaults {
    fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut values = match path {
            Some(p) => {
                check_exists(p)?;
                let text = std::fs::read_to_string(p)?;
                gaitdex_service::ServiceConfig::parse(&text).map_err(|e| CliError::usage(e.to_string()))?
            }
            None => HashMap::new(),
        };
        if let Ok(d) = std::env::var("DATA_DIR") {
            values.insert("DATA_DIR".into(), d);
        }
        Ok(Defaults { values })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn omega(&self, flag: Option<f64>) -> Result<f64, CliError> {
        match (flag, self.get("OMEGA")) {
            (Some(v), _) => Ok(v),
            (None, Some(s)) => parse_omega(s).map_err(|e| CliError::usage(format!("config omega: {e}"))),
            (None, None) => Ok(0.99),
        }
    }

    fn modes(&self, flag: Option<&str>) -> Result<Vec<Mode>, CliError> {
        match flag.or(self.get("MODES")) {
            Some(s) => parse_modes(s).map_err(CliError::usage),
            None => Ok(Mode::ALL.to_vec()),
        }
    }

    fn pelvis_side(&self, flag: Option<Side>) -> Result<Side, CliError> {
        match (flag, self.get("PELVIS_SIDE")) {
            (Some(s), _) => Ok(s),
            (None, Some(s)) => s.parse().map_err(|e: GaitError| CliError::usage(e.to_string())),
            (None, None) => Ok(Side::Left),
        }
    }

    fn indices(&self, flag: Option<&str>) -> Result<IndexSelection, CliError> {
        flag.or(self.get("INDICES"))
            .unwrap_or("fgdi,gps,oa")
            .parse()
            .map_err(|e: GaitError| CliError::usage(e.to_string()))
    }

    fn data_dir(&self) -> Option<PathBuf> {
        self.get("DATA_DIR").filter(|d| !d.is_empty()).map(PathBuf::from)
    }
}

fn check_exists(p: &Path) -> Result<(), CliError> {
    if p.exists() {
        Ok(())
    } else {
        Err(CliError::failure(format!("{}: no such file", p.display())))
    }
}

/// Write to `path`, or to standard output when none is given.
fn emit(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<(), CliError>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(
                File::create(p).map_err(|e| CliError::failure(format!("{}: {e}", p.display())))?,
            );
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    emit(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| CliError::failure(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    })
}

fn load_model(path: &Path) -> Result<PipelineModel, CliError> {
    check_exists(path)?;
    Ok(PipelineModel::load(path)?)
}

/// Read a report written by `score`, in either format.
pub fn read_report_table(path: &Path) -> Result<ReportTable, CliError> {
    check_exists(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        Ok(IndexReport::from_json(&std::fs::read_to_string(path)?)?.to_table())
    } else {
        Ok(ReportTable::read_csv(File::open(path)?)?)
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let defaults = Defaults::load(cli.config.as_deref())?;
    match cli.command {
        Command::Fit(a) => fit(a, &defaults),
        Command::Score(a) => score(a, &defaults),
        Command::Stability(a) => stability(a),
        Command::Compare(a) => compare(a),
        Command::Correlate(a) => correlate(a),
        Command::Synth(a) => synth(a),
        Command::Serve(a) => serve(a, cli.config.as_deref()),
    }
}

fn fit(a: FitArgs, d: &Defaults) -> Result<(), CliError> {
    let config = PipelineConfig {
        omega: d.omega(a.omega)?,
        modes: d.modes(a.modes.as_deref())?,
        pelvis_side: d.pelvis_side(a.pelvis_side)?,
        ..PipelineConfig::default()
    };
    let cohort = a.input.load()?;
    let model = fit_pipeline(&cohort, &config)?;
    model.save(&a.out)?;
    for line in model.summary() {
        println!("{line}");
    }
    Ok(())
}

fn gdi_basis(a: &ScoreArgs, d: &Defaults, cohort: &Cohort) -> Result<GdiFeatureBasis, CliError> {
    if let Some(p) = &a.gdi_basis {
        check_exists(p)?;
        return Ok(GdiFeatureBasis::load_csv(p)?);
    }
    if let Some(p) = d
        .data_dir()
        .map(|dir| dir.join(GDI_BASIS_FILE))
        .filter(|p| p.exists())
    {
        log::info!("using GDI basis {}", p.display());
        return Ok(GdiFeatureBasis::load_csv(p)?);
    }
    if !a.surrogate_gdi {
        return Err(CliError {
            code: EXIT_MISSING_BASIS,
            message: format!(
                "GDI requested but no feature basis found. Pass --gdi-basis <file>, place {GDI_BASIS_FILE} \
                 in DATA_DIR, allow a cohort-derived basis with --surrogate-gdi, or drop gdi from --indices"
            ),
        });
    }
    let resampled = cohort.resample(GDI_GRID_POINTS)?;
    Ok(GdiFeatureBasis::surrogate(&resampled, GDI_FEATURES)?)
}

fn score(a: ScoreArgs, d: &Defaults) -> Result<(), CliError> {
    let indices = d.indices(a.indices.as_deref())?;
    let model = load_model(&a.model)?;
    let cohort = a.input.load()?;
    let gdi_basis = if indices.gdi {
        Some(gdi_basis(&a, d, &cohort)?)
    } else {
        None
    };
    let report = score_cohort(&model, &cohort, &ScoreOptions { indices, gdi_basis })?;
    for n in &report.notices {
        eprintln!("notice: {n}");
    }
    let json = match a.format.as_deref().or(d.get("FORMAT")) {
        Some("json") => true,
        Some("csv") => false,
        Some(other) => return Err(CliError::usage(format!("unknown format `{other}`"))),
        None => a
            .out
            .as_ref()
            .is_some_and(|p| p.extension().is_some_and(|e| e == "json")),
    };
    emit(a.out.as_deref(), |w| {
        if json {
            writeln!(w, "{}", report.to_json()?)?;
        } else {
            report.to_table().write_csv(w)?;
        }
        Ok(())
    })
}

fn stability(a: StabilityArgs) -> Result<(), CliError> {
    let model = load_model(&a.model)?;
    let cohort = a.input.load()?;
    model.check_grid(&cohort)?;
    if model.mode(a.mode).is_none() {
        return Err(CliError::failure(format!(
            "mode `{}` was not fitted in {}",
            a.mode,
            a.model.display()
        )));
    }
    let set = a.mode.variable_set(model.pelvis_side);
    let table = if a.mode.is_multivariate() {
        stability_multivariate(&cohort, &set, model.omega, &a.deltas, model.smoothing)?
    } else {
        stability_per_joint(&cohort, &set, model.omega, &a.deltas, model.smoothing)?
    };
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    emit(a.out.as_deref(), |w| Ok(table.write_csv(w)?))
}

#[derive(Serialize)]
struct CompareSummary {
    report_a: String,
    report_b: String,
    columns: Vec<gaitdex::report::ColumnComparison>,
}

fn compare(a: CompareArgs) -> Result<(), CliError> {
    let ta = read_report_table(&a.report_a)?;
    let tb = read_report_table(&a.report_b)?;
    let columns = compare_tables(&ta, &tb);
    if columns.is_empty() {
        eprintln!("warning: the reports share no columns");
    }
    let summary = CompareSummary {
        report_a: a.report_a.display().to_string(),
        report_b: a.report_b.display().to_string(),
        columns,
    };
    emit_json(a.out.as_deref(), &summary)
}

fn correlate(a: CorrelateArgs) -> Result<(), CliError> {
    let mut table = read_report_table(&a.report)?;
    if a.rows != "all" {
        let keep_healthy = a.rows == "healthy";
        let idx: Vec<usize> = (0..table.subject_ids.len())
            .filter(|&i| table.healthy[i] == keep_healthy)
            .collect();
        table = ReportTable {
            subject_ids: idx.iter().map(|&i| table.subject_ids[i].clone()).collect(),
            healthy: idx.iter().map(|&i| table.healthy[i]).collect(),
            columns: table
                .columns
                .iter()
                .map(|(n, c)| (n.clone(), idx.iter().map(|&i| c[i]).collect()))
                .collect(),
            flags: idx.iter().map(|&i| table.flags[i].clone()).collect(),
        };
    }
    emit_json(a.out.as_deref(), &correlate_columns(&table, a.columns.as_deref()))
}

fn synth(a: SynthArgs) -> Result<(), CliError> {
    let cohort = synth_cohort(&SynthConfig {
        seed: a.seed,
        n_healthy: a.healthy,
        n_patients: a.patients,
        grid_points: a.points,
        deviation_scale: a.scale,
        noise_sd: a.noise,
    })?;
    save_cohort(&cohort, &a.out)?;
    if let Some(m) = &a.metadata_out {
        write_metadata(&cohort, BufWriter::new(File::create(m)?))?;
    }
    eprintln!("wrote {} subjects ({} healthy)", cohort.len(), cohort.n_healthy());
    Ok(())
}

fn serve(a: ServeArgs, config: Option<&Path>) -> Result<(), CliError> {
    let mut cfg = gaitdex_service::ServiceConfig::load(config).map_err(|e| CliError::usage(e.to_string()))?;
    if let Some(b) = a.bind {
        cfg.bind_addr = b;
    }
    if let Some(d) = a.data_dir {
        cfg.data_dir = Some(d);
    }
    if let Some(m) = a.max_upload_mib {
        cfg.max_upload_mib = m;
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(gaitdex_service::serve(cfg))?;
    Ok(())
}
