//! Flag parsing, the key=value config file, and settings resolution.
//!
//! Every tunable is an `Option` on the clap side. Resolution merges in
//! values from an optional `--config` file (command-line flags win),
//! then materializes defaults, so downstream code and the echoed
//! `run_config.json` always see fully explicit settings. Paths
//! (`--data`, `--out`, `--config`) and `--jobs` stay command-line-only.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use destchoice::analysis::{BootstrapConfig, CvConfig, ElasticityWeighting, SegmentRule};
use destchoice::impedance::{ImpedanceKind, Mode};
use destchoice::sampling::SamplingConfig;
use destchoice::synth::{ScenarioConfig, TrueModel};
use serde_json::{Map, Value, json};

/// A problem with how the tool was invoked (flags or config file),
/// as opposed to problems with the data or the numerics.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

#[derive(Debug, Parser)]
#[command(
    name = "destchoice",
    version,
    about = "Joint destination-choice estimation with group-level travel impedance"
)]
pub struct Cli {
    /// Worker threads for parallel stages; never affects numeric output.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    /// key=value file supplying values for flags not given on the
    /// command line; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset from known coefficients.
    Generate(GenerateArgs),
    /// Fit models on a dataset and cross-validate them side by side.
    Estimate(EstimateArgs),
    /// Cross-validate models with per-fold detail.
    Validate(ValidateArgs),
    /// Bootstrap coefficient and elasticity inference.
    Elasticity(ElasticityArgs),
    /// Choice-probability curves against focal-zone travel time.
    Curves(CurvesArgs),
    /// Split situations by a rule and bootstrap each side.
    Segment(SegmentArgs),
    /// Train the participant travel-mode classifier.
    #[command(name = "mode-model")]
    ModeModel(ModeModelArgs),
    /// End-to-end parameter recovery on synthetic data.
    Recover(RecoverArgs),
}

/// Which impedance aggregations to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpedanceChoice {
    All,
    One(ImpedanceKind),
}

impl ImpedanceChoice {
    pub fn kinds(self) -> Vec<ImpedanceKind> {
        match self {
            ImpedanceChoice::All => ImpedanceKind::ALL.to_vec(),
            ImpedanceChoice::One(kind) => vec![kind],
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            ImpedanceChoice::All => "all",
            ImpedanceChoice::One(kind) => kind.token(),
        }
    }
}

fn parse_impedance_choice(s: &str) -> Result<ImpedanceChoice, String> {
    if s.trim() == "all" {
        Ok(ImpedanceChoice::All)
    } else {
        ImpedanceKind::from_str(s).map(ImpedanceChoice::One)
    }
}

/// Where participant travel modes come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModePolicy {
    /// `modes.csv` must cover every (situation, participant) pair.
    Table,
    /// Observed modes where present; a classifier trained on the
    /// surveyed rows predicts the rest.
    Classifier,
    /// Everyone travels by one fixed mode.
    Fixed(Mode),
}

impl ModePolicy {
    pub fn token(self) -> &'static str {
        match self {
            ModePolicy::Table => "table",
            ModePolicy::Classifier => "classifier",
            ModePolicy::Fixed(mode) => mode.token(),
        }
    }
}

fn parse_mode_policy(s: &str) -> Result<ModePolicy, String> {
    match s.trim() {
        "table" => Ok(ModePolicy::Table),
        "classifier" => Ok(ModePolicy::Classifier),
        other => Mode::from_str(other).map(ModePolicy::Fixed).map_err(|_| {
            format!("unknown mode policy '{other}' (expected table, classifier, or a mode token)")
        }),
    }
}

fn parse_weighting(s: &str) -> Result<ElasticityWeighting, String> {
    match s.trim() {
        "uniform" => Ok(ElasticityWeighting::Uniform),
        "probability" => Ok(ElasticityWeighting::ProbabilityWeighted),
        other => Err(format!(
            "unknown weighting '{other}' (expected uniform or probability)"
        )),
    }
}

fn weighting_token(w: ElasticityWeighting) -> &'static str {
    match w {
        ElasticityWeighting::Uniform => "uniform",
        ElasticityWeighting::ProbabilityWeighted => "probability",
    }
}

/// `b_station,b_size,b_cost` coefficient triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaArg(pub [f64; 3]);

fn parse_beta(s: &str) -> Result<BetaArg, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got {s:?}"));
    }
    let mut beta = [0.0; 3];
    for (slot, part) in beta.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|_| format!("invalid number {part:?}"))?;
        if !slot.is_finite() {
            return Err(format!("coefficient {part:?} must be finite"));
        }
    }
    Ok(BetaArg(beta))
}

fn parse_rule(s: &str) -> Result<SegmentRule, String> {
    SegmentRule::parse(s).map_err(|e| e.to_string())
}

/// Values read from the `--config` file, consumed key by key.
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn empty() -> Self {
        FileConfig {
            values: HashMap::new(),
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut values = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(usage(format!(
                    "{}:{}: expected key=value, got {line:?}",
                    path.display(),
                    i + 1
                )));
            };
            let key = key.trim().to_owned();
            if values.insert(key.clone(), value.trim().to_owned()).is_some() {
                return Err(usage(format!(
                    "{}:{}: duplicate key '{key}'",
                    path.display(),
                    i + 1
                )));
            }
        }
        Ok(FileConfig { values })
    }

    /// Merge one setting: the flag value if given, else the parsed
    /// file value. The file value is validated even when overridden.
    fn resolve<T>(
        &mut self,
        key: &str,
        flag: Option<T>,
        parse: impl FnOnce(&str) -> Result<T, String>,
    ) -> anyhow::Result<Option<T>> {
        let from_file = match self.values.remove(key) {
            None => None,
            Some(raw) => Some(
                parse(&raw).map_err(|e| usage(format!("config key '{key}': {e}")))?,
            ),
        };
        Ok(flag.or(from_file))
    }

    /// Error on any key no setting consumed — almost always a typo.
    fn finish(self) -> anyhow::Result<()> {
        if self.values.is_empty() {
            return Ok(());
        }
        let mut keys: Vec<String> = self.values.into_keys().collect();
        keys.sort();
        Err(usage(format!("unknown config key(s): {}", keys.join(", "))))
    }
}

fn std_parse<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    s.trim().parse().map_err(|e: T::Err| e.to_string())
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(format!("expected a boolean, got {other:?}")),
    }
}

/// Shared data/sampling flags for commands that read a dataset.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Directory holding zones.csv, cliques.csv, situations.csv and
    /// (depending on --modes) modes.csv.
    #[arg(long, value_name = "DIR")]
    pub data: PathBuf,

    /// Impedance aggregation: max, min, mean, median, ego, or all.
    #[arg(long, value_parser = parse_impedance_choice)]
    pub impedance: Option<ImpedanceChoice>,

    /// Sampled non-chosen zones per choice set.
    #[arg(long)]
    pub k: Option<usize>,

    /// Add the sampling-correction utility offset.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_parser = parse_bool)]
    pub correction: Option<bool>,

    /// Travel-mode source: table, classifier, or a fixed mode token.
    #[arg(long, value_parser = parse_mode_policy)]
    pub modes: Option<ModePolicy>,

    /// Skim-matrix CSV (origin_cell,zone_id,mode,minutes) replacing
    /// the synthetic travel-time model.
    #[arg(long, value_name = "FILE")]
    pub skim: Option<PathBuf>,

    /// Origin grid-cell size for the skim matrix, km.
    #[arg(long, value_name = "KM")]
    pub cell_km: Option<f64>,

    /// Master random seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Resolved form of [`DataArgs`].
pub struct DataSettings {
    pub data: PathBuf,
    pub choice: ImpedanceChoice,
    pub sampling: SamplingConfig,
    pub mode_policy: ModePolicy,
    pub skim: Option<(PathBuf, f64)>,
    pub seed: u64,
}

impl DataArgs {
    fn resolve(self, file: &mut FileConfig, default_choice: ImpedanceChoice) -> anyhow::Result<DataSettings> {
        let choice = file
            .resolve("impedance", self.impedance, parse_impedance_choice)?
            .unwrap_or(default_choice);
        let k = file.resolve("k", self.k, std_parse)?.unwrap_or(20);
        let correction = file
            .resolve("correction", self.correction, parse_bool)?
            .unwrap_or(false);
        let mode_policy = file
            .resolve("modes", self.modes, parse_mode_policy)?
            .unwrap_or(ModePolicy::Table);
        let seed = file.resolve("seed", self.seed, std_parse)?.unwrap_or(0);
        let cell_km = file.resolve("cell_km", self.cell_km, std_parse)?;
        let skim = match (self.skim, cell_km) {
            (None, None) => None,
            (None, Some(_)) => {
                return Err(usage("--cell-km is only meaningful with --skim"));
            }
            (Some(path), cell) => Some((path, cell.unwrap_or(1.0))),
        };
        Ok(DataSettings {
            data: self.data,
            choice,
            sampling: SamplingConfig {
                k,
                include_correction: correction,
                rng_seed: seed,
            },
            mode_policy,
            skim,
            seed,
        })
    }

    fn echo(settings: &DataSettings, config: &mut Map<String, Value>) {
        config.insert("data".into(), json!(settings.data.to_string_lossy()));
        config.insert("impedance".into(), json!(settings.choice.token()));
        config.insert("k".into(), json!(settings.sampling.k));
        config.insert(
            "correction".into(),
            json!(settings.sampling.include_correction),
        );
        config.insert("modes".into(), json!(settings.mode_policy.token()));
        if let Some((path, cell_km)) = &settings.skim {
            config.insert("skim".into(), json!(path.to_string_lossy()));
            config.insert("cell_km".into(), json!(cell_km));
        }
        config.insert("seed".into(), json!(settings.seed));
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output directory for the generated dataset.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Master random seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Number of zones.
    #[arg(long)]
    pub zones: Option<usize>,

    /// Number of major-station zones (the center-nearest ones).
    #[arg(long)]
    pub major_zones: Option<usize>,

    /// Number of cliques.
    #[arg(long)]
    pub cliques: Option<usize>,

    /// Number of choice situations.
    #[arg(long)]
    pub situations: Option<usize>,

    /// Target mean restaurant count per zone.
    #[arg(long)]
    pub mean_restaurants: Option<f64>,

    /// Impedance aggregation the simulated chooser uses.
    #[arg(long, value_parser = ImpedanceKind::from_str)]
    pub true_impedance: Option<ImpedanceKind>,

    /// True coefficients: station,size,cost.
    #[arg(long, value_parser = parse_beta)]
    pub true_beta: Option<BetaArg>,
}

pub struct GenerateSettings {
    pub out: PathBuf,
    pub scenario: ScenarioConfig,
    pub model: TrueModel,
}

impl GenerateArgs {
    pub fn resolve(self, file: &mut FileConfig) -> anyhow::Result<GenerateSettings> {
        let seed = file.resolve("seed", self.seed, std_parse)?.unwrap_or(0);
        let mut scenario = ScenarioConfig {
            rng_seed: seed,
            ..ScenarioConfig::default()
        };
        if let Some(zones) = file.resolve("zones", self.zones, std_parse)? {
            scenario.n_zones = zones;
        }
        if let Some(major) = file.resolve("major_zones", self.major_zones, std_parse)? {
            scenario.n_major = major;
        }
        if let Some(cliques) = file.resolve("cliques", self.cliques, std_parse)? {
            scenario.n_cliques = cliques;
        }
        if let Some(situations) = file.resolve("situations", self.situations, std_parse)? {
            scenario.n_situations = situations;
        }
        if let Some(mean) = file.resolve("mean_restaurants", self.mean_restaurants, std_parse)? {
            scenario.mean_restaurants = mean;
        }
        let mut model = TrueModel::default();
        if let Some(kind) =
            file.resolve("true_impedance", self.true_impedance, std_parse::<ImpedanceKind>)?
        {
            model.impedance_kind = kind;
        }
        if let Some(BetaArg(beta)) = file.resolve("true_beta", self.true_beta, parse_beta)? {
            model.beta_true = destchoice::estimator::Coefficients(beta.to_vec());
        }
        file_finish(file)?;
        Ok(GenerateSettings {
            out: self.out,
            scenario,
            model,
        })
    }
}

impl GenerateSettings {
    pub fn run_config(&self) -> Value {
        let mut config = Map::new();
        config.insert("subcommand".into(), json!("generate"));
        config.insert("seed".into(), json!(self.scenario.rng_seed));
        config.insert(
            "generator".into(),
            serde_json::to_value(&self.scenario).expect("scenario serializes"),
        );
        config.insert(
            "true_model".into(),
            serde_json::to_value(&self.model).expect("model serializes"),
        );
        Value::Object(config)
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Output directory for reports.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Cross-validation folds for the validation block.
    #[arg(long)]
    pub folds: Option<usize>,

    /// Partition folds by clique instead of by situation.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_parser = parse_bool)]
    pub clique_folds: Option<bool>,
}

pub struct EstimateSettings {
    pub data: DataSettings,
    pub out: PathBuf,
    pub validation: CvConfig,
}

impl EstimateArgs {
    pub fn resolve(self, file: &mut FileConfig) -> anyhow::Result<EstimateSettings> {
        let data = self.data.resolve(file, ImpedanceChoice::All)?;
        let folds = file.resolve("folds", self.folds, std_parse)?.unwrap_or(10);
        let clique_folds = file
            .resolve("clique_folds", self.clique_folds, parse_bool)?
            .unwrap_or(false);
        file_finish(file)?;
        let validation = CvConfig {
            folds,
            rng_seed: data.seed,
            sampling: data.sampling.clone(),
            clique_folds,
        };
        Ok(EstimateSettings {
            data,
            out: self.out,
            validation,
        })
    }
}

impl EstimateSettings {
    pub fn run_config(&self, subcommand: &str) -> Value {
        let mut config = Map::new();
        config.insert("subcommand".into(), json!(subcommand));
        DataArgs::echo(&self.data, &mut config);
        config.insert("folds".into(), json!(self.validation.folds));
        config.insert("clique_folds".into(), json!(self.validation.clique_folds));
        Value::Object(config)
    }
}

/// `validate` shares the estimate surface; only the artifacts differ.
pub type ValidateArgs = EstimateArgs;

#[derive(Debug, Args)]
pub struct ElasticityArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Output directory for reports.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Bootstrap replicates.
    #[arg(long)]
    pub replicates: Option<usize>,

    /// Elasticity averaging: uniform or probability.
    #[arg(long, value_parser = parse_weighting)]
    pub weighting: Option<ElasticityWeighting>,
}

pub struct ElasticitySettings {
    pub data: DataSettings,
    pub out: PathBuf,
    pub bootstrap: BootstrapConfig,
}

impl ElasticityArgs {
    pub fn resolve(self, file: &mut FileConfig) -> anyhow::Result<ElasticitySettings> {
        let data = self.data.resolve(file, ImpedanceChoice::All)?;
        let replicates = file
            .resolve("replicates", self.replicates, std_parse)?
            .unwrap_or(50);
        let weighting = file
            .resolve("weighting", self.weighting, parse_weighting)?
            .unwrap_or(ElasticityWeighting::Uniform);
        file_finish(file)?;
        let bootstrap = BootstrapConfig {
            replicates,
            rng_seed: data.seed,
            sampling: data.sampling.clone(),
            weighting,
        };
        Ok(ElasticitySettings {
            data,
            out: self.out,
            bootstrap,
        })
    }

    pub fn resolve_with_rule(
        self,
        file: &mut FileConfig,
        rule_flag: Option<SegmentRule>,
        default_choice: ImpedanceChoice,
    ) -> anyhow::Result<(ElasticitySettings, SegmentRule)> {
        let data = self.data.resolve(file, default_choice)?;
        let replicates = file
            .resolve("replicates", self.replicates, std_parse)?
            .unwrap_or(50);
        let weighting = file
            .resolve("weighting", self.weighting, parse_weighting)?
            .unwrap_or(ElasticityWeighting::Uniform);
        let rule = file
            .resolve("rule", rule_flag, parse_rule)?
            .ok_or_else(|| usage("a segmentation rule is required (--rule or rule= in the config file)"))?;
        file_finish(file)?;
        let bootstrap = BootstrapConfig {
            replicates,
            rng_seed: data.seed,
            sampling: data.sampling.clone(),
            weighting,
        };
        Ok((
            ElasticitySettings {
                data,
                out: self.out,
                bootstrap,
            },
            rule,
        ))
    }
}

impl ElasticitySettings {
    pub fn run_config(&self, subcommand: &str) -> Value {
        let mut config = Map::new();
        config.insert("subcommand".into(), json!(subcommand));
        DataArgs::echo(&self.data, &mut config);
        config.insert("replicates".into(), json!(self.bootstrap.replicates));
        config.insert(
            "weighting".into(),
            json!(weighting_token(self.bootstrap.weighting)),
        );
        Value::Object(config)
    }
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Output directory for reports.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Restaurant count of the focal and background zones.
    #[arg(long)]
    pub restaurants: Option<u32>,

    /// Number of identical background zones.
    #[arg(long)]
    pub background_k: Option<usize>,

    /// Background travel time in minutes; defaults to each model's
    /// mean group impedance over the dataset.
    #[arg(long, value_name = "MIN")]
    pub background_time: Option<f64>,

    /// Last grid point of the curve, minutes (grid step is 1).
    #[arg(long, value_name = "MIN")]
    pub t_max: Option<u32>,
}

pub struct CurvesSettings {
    pub data: DataSettings,
    pub out: PathBuf,
    pub restaurants: u32,
    pub background_k: usize,
    pub background_time: Option<f64>,
    pub t_max: u32,
}

impl CurvesArgs {
    pub fn resolve(self, file: &mut FileConfig) -> anyhow::Result<CurvesSettings> {
        let data = self.data.resolve(file, ImpedanceChoice::All)?;
        let restaurants = file
            .resolve("restaurants", self.restaurants, std_parse)?
            .unwrap_or(300);
        let background_k = file
            .resolve("background_k", self.background_k, std_parse)?
            .unwrap_or(20);
        let background_time = file.resolve("background_time", self.background_time, std_parse)?;
        let t_max = file.resolve("t_max", self.t_max, std_parse)?.unwrap_or(90);
        file_finish(file)?;
        Ok(CurvesSettings {
            data,
            out: self.out,
            restaurants,
            background_k,
            background_time,
            t_max,
        })
    }
}

impl CurvesSettings {
    /// `resolved_backgrounds` pairs each model's token with the
    /// background time actually used, so the echo is explicit even
    /// when the default (data-derived) background applies.
    pub fn run_config(&self, resolved_backgrounds: &[(&'static str, f64)]) -> Value {
        let mut config = Map::new();
        config.insert("subcommand".into(), json!("curves"));
        DataArgs::echo(&self.data, &mut config);
        config.insert("restaurants".into(), json!(self.restaurants));
        config.insert("background_k".into(), json!(self.background_k));
        let mut backgrounds = Map::new();
        for &(token, time) in resolved_backgrounds {
            backgrounds.insert(token.into(), json!(time));
        }
        config.insert("background_time_min".into(), Value::Object(backgrounds));
        config.insert("t_max".into(), json!(self.t_max));
        Value::Object(config)
    }
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub inner: ElasticityArgs,

    /// Segmentation rule: age, gender, party_size, time, day,
    /// residence:<radius_km>, or relationship.
    #[arg(long, value_parser = parse_rule)]
    pub rule: Option<SegmentRule>,
}

impl SegmentArgs {
    pub fn resolve(
        self,
        file: &mut FileConfig,
    ) -> anyhow::Result<(ElasticitySettings, SegmentRule)> {
        self.inner
            .resolve_with_rule(file, self.rule, ImpedanceChoice::One(ImpedanceKind::Mean))
    }
}

pub fn segment_run_config(settings: &ElasticitySettings, rule: &SegmentRule) -> Value {
    let mut config = settings
        .run_config("segment")
        .as_object()
        .cloned()
        .expect("run config is an object");
    config.insert(
        "rule".into(),
        serde_json::to_value(rule).expect("rule serializes"),
    );
    Value::Object(config)
}

#[derive(Debug, Args)]
pub struct ModeModelArgs {
    /// Directory holding the dataset and modes.csv.
    #[arg(long, value_name = "DIR")]
    pub data: PathBuf,

    /// Output directory for the classifier artifact.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Cross-validation folds for the accuracy figure.
    #[arg(long)]
    pub folds: Option<usize>,

    /// Master random seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub struct ModeModelSettings {
    pub data: PathBuf,
    pub out: PathBuf,
    pub folds: usize,
    pub seed: u64,
}

impl ModeModelArgs {
    pub fn resolve(self, file: &mut FileConfig) -> anyhow::Result<ModeModelSettings> {
        let folds = file.resolve("folds", self.folds, std_parse)?.unwrap_or(10);
        let seed = file.resolve("seed", self.seed, std_parse)?.unwrap_or(0);
        file_finish(file)?;
        Ok(ModeModelSettings {
            data: self.data,
            out: self.out,
            folds,
            seed,
        })
    }
}

impl ModeModelSettings {
    pub fn run_config(&self) -> Value {
        let mut config = Map::new();
        config.insert("subcommand".into(), json!("mode-model"));
        config.insert("data".into(), json!(self.data.to_string_lossy()));
        config.insert("folds".into(), json!(self.folds));
        config.insert("seed".into(), json!(self.seed));
        Value::Object(config)
    }
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    /// Output directory for the recovery report.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Master random seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Number of zones in the generated scenario.
    #[arg(long)]
    pub zones: Option<usize>,

    /// Number of cliques in the generated scenario.
    #[arg(long)]
    pub cliques: Option<usize>,

    /// Number of choice situations in the generated scenario.
    #[arg(long)]
    pub situations: Option<usize>,

    /// Sampled non-chosen zones per choice set.
    #[arg(long)]
    pub k: Option<usize>,

    /// Add the sampling-correction utility offset.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_parser = parse_bool)]
    pub correction: Option<bool>,

    /// Bootstrap replicates.
    #[arg(long)]
    pub replicates: Option<usize>,

    /// Cross-validation folds; 0 skips validation.
    #[arg(long)]
    pub folds: Option<usize>,

    /// Elasticity averaging: uniform or probability.
    #[arg(long, value_parser = parse_weighting)]
    pub weighting: Option<ElasticityWeighting>,

    /// Impedance aggregation the simulated chooser uses (the fitted
    /// model uses the same one).
    #[arg(long, value_parser = ImpedanceKind::from_str)]
    pub true_impedance: Option<ImpedanceKind>,

    /// True coefficients: station,size,cost.
    #[arg(long, value_parser = parse_beta)]
    pub true_beta: Option<BetaArg>,
}

pub struct RecoverSettings {
    pub out: PathBuf,
    pub scenario: ScenarioConfig,
    pub model: TrueModel,
    pub bootstrap: BootstrapConfig,
    pub validation: Option<CvConfig>,
}

impl RecoverArgs {
    pub fn resolve(self, file: &mut FileConfig) -> anyhow::Result<RecoverSettings> {
        let seed = file.resolve("seed", self.seed, std_parse)?.unwrap_or(0);
        let mut scenario = ScenarioConfig {
            rng_seed: seed,
            ..ScenarioConfig::default()
        };
        if let Some(zones) = file.resolve("zones", self.zones, std_parse)? {
            scenario.n_zones = zones;
        }
        if let Some(cliques) = file.resolve("cliques", self.cliques, std_parse)? {
            scenario.n_cliques = cliques;
        }
        if let Some(situations) = file.resolve("situations", self.situations, std_parse)? {
            scenario.n_situations = situations;
        }
        let mut model = TrueModel::default();
        if let Some(kind) =
            file.resolve("true_impedance", self.true_impedance, std_parse::<ImpedanceKind>)?
        {
            model.impedance_kind = kind;
        }
        if let Some(BetaArg(beta)) = file.resolve("true_beta", self.true_beta, parse_beta)? {
            model.beta_true = destchoice::estimator::Coefficients(beta.to_vec());
        }
        let k = file.resolve("k", self.k, std_parse)?.unwrap_or(20);
        let correction = file
            .resolve("correction", self.correction, parse_bool)?
            .unwrap_or(false);
        let replicates = file
            .resolve("replicates", self.replicates, std_parse)?
            .unwrap_or(50);
        let folds = file.resolve("folds", self.folds, std_parse)?.unwrap_or(10);
        let weighting = file
            .resolve("weighting", self.weighting, parse_weighting)?
            .unwrap_or(ElasticityWeighting::Uniform);
        file_finish(file)?;
        let sampling = SamplingConfig {
            k,
            include_correction: correction,
            rng_seed: seed,
        };
        let bootstrap = BootstrapConfig {
            replicates,
            rng_seed: seed,
            sampling: sampling.clone(),
            weighting,
        };
        let validation = (folds > 0).then(|| CvConfig {
            folds,
            rng_seed: seed,
            sampling,
            clique_folds: false,
        });
        Ok(RecoverSettings {
            out: self.out,
            scenario,
            model,
            bootstrap,
            validation,
        })
    }
}

impl RecoverSettings {
    pub fn run_config(&self) -> Value {
        let mut config = Map::new();
        config.insert("subcommand".into(), json!("recover"));
        config.insert("seed".into(), json!(self.scenario.rng_seed));
        config.insert(
            "generator".into(),
            serde_json::to_value(&self.scenario).expect("scenario serializes"),
        );
        config.insert(
            "true_model".into(),
            serde_json::to_value(&self.model).expect("model serializes"),
        );
        config.insert("k".into(), json!(self.bootstrap.sampling.k));
        config.insert(
            "correction".into(),
            json!(self.bootstrap.sampling.include_correction),
        );
        config.insert("replicates".into(), json!(self.bootstrap.replicates));
        config.insert(
            "folds".into(),
            json!(self.validation.as_ref().map_or(0, |v| v.folds)),
        );
        config.insert(
            "weighting".into(),
            json!(weighting_token(self.bootstrap.weighting)),
        );
        Value::Object(config)
    }
}

fn file_finish(file: &mut FileConfig) -> anyhow::Result<()> {
    std::mem::replace(file, FileConfig::empty()).finish()
}
