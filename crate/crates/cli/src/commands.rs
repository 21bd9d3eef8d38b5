//! Subcommand implementations: wire loaded data through the pipeline
//! and emit the report artifacts.

use anyhow::Context;
use destchoice::analysis::{
    CurveSpec, SegmentRule, bootstrap_estimate, cross_validate, probability_curve,
    segment_and_estimate,
};
use destchoice::domain::{Dataset, load_dataset, write_dataset};
use destchoice::estimator::{self, EstimateOptions, EstimationResult, ModelSpec};
use destchoice::impedance::{
    ImpedanceTable, ModeAssignment, ModeSource, ModeTable, SkimMatrix, TravelTimeProvider,
    assign_modes, ego_training_records, train_mode_classifier,
};
use destchoice::report::{self, CurveSeries};
use destchoice::rng;
use destchoice::sampling::{build_choice_sets, mean_travel_time};
use destchoice::synth::{RecoveryOptions, generate_scenario, simulate_choices, recovery_test};
use serde_json::json;

use crate::artifacts::Emitter;
use crate::config::{
    Cli, Command, CurvesSettings, DataSettings, ElasticitySettings, EstimateSettings, FileConfig,
    GenerateSettings, ImpedanceChoice, ModeModelSettings, ModePolicy, RecoverSettings, UsageError,
    segment_run_config,
};

pub fn execute(cli: Cli) -> anyhow::Result<()> {
    let mut file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::empty(),
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(UsageError("--jobs must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("initializing the worker pool")?;
    }
    match cli.command {
        Command::Generate(args) => cmd_generate(args.resolve(&mut file)?),
        Command::Estimate(args) => cmd_estimate(args.resolve(&mut file)?),
        Command::Validate(args) => cmd_validate(args.resolve(&mut file)?),
        Command::Elasticity(args) => cmd_elasticity(args.resolve(&mut file)?),
        Command::Curves(args) => cmd_curves(args.resolve(&mut file)?),
        Command::Segment(args) => {
            let (settings, rule) = args.resolve(&mut file)?;
            cmd_segment(settings, rule)
        }
        Command::ModeModel(args) => cmd_mode_model(args.resolve(&mut file)?),
        Command::Recover(args) => cmd_recover(args.resolve(&mut file)?),
    }
}

fn provider_for(settings: &DataSettings) -> anyhow::Result<TravelTimeProvider> {
    match &settings.skim {
        Some((path, cell_km)) => Ok(TravelTimeProvider::Matrix(SkimMatrix::load(
            path, *cell_km,
        )?)),
        None => Ok(TravelTimeProvider::synthetic_default()),
    }
}

/// Load the dataset and fix one travel mode per participant per
/// situation, per the configured mode policy.
fn load_inputs(settings: &DataSettings) -> anyhow::Result<(Dataset, ModeAssignment)> {
    let dataset = load_dataset(&settings.data)?;
    let assignment = match settings.mode_policy {
        ModePolicy::Fixed(mode) => assign_modes(
            &dataset.situations,
            &dataset.cliques,
            &dataset.zones,
            &ModeSource::Fixed(mode),
        )?,
        ModePolicy::Table => {
            let table = ModeTable::load(settings.data.join("modes.csv"))?;
            assign_modes(
                &dataset.situations,
                &dataset.cliques,
                &dataset.zones,
                &ModeSource::Table(&table),
            )?
        }
        ModePolicy::Classifier => {
            let table = ModeTable::load(settings.data.join("modes.csv"))?;
            let records = ego_training_records(
                &dataset.situations,
                &dataset.cliques,
                &dataset.zones,
                &table,
            )?;
            let classifier = train_mode_classifier(&records, 10, settings.seed)?;
            assign_modes(
                &dataset.situations,
                &dataset.cliques,
                &dataset.zones,
                &ModeSource::Classifier {
                    classifier: &classifier,
                    observed: Some(&table),
                },
            )?
        }
    };
    Ok((dataset, assignment))
}

/// The headline fits must converge; a failed solve is a run failure,
/// not a value to tabulate.
fn require_converged(fit: &EstimationResult) -> anyhow::Result<()> {
    if fit.converged {
        return Ok(());
    }
    Err(destchoice::Error::NonConvergence {
        iterations: fit.iterations,
    })
    .with_context(|| format!("the {} model did not converge", fit.spec.impedance_kind))
}

fn cmd_generate(settings: GenerateSettings) -> anyhow::Result<()> {
    let mut emitter = Emitter::create(&settings.out)?;
    let mut scenario_rng = rng::substream(settings.scenario.rng_seed, rng::STREAM_SCENARIO);
    let scenario = generate_scenario(&settings.scenario, &mut scenario_rng)?;
    let provider = TravelTimeProvider::synthetic_default();
    let mut choice_rng = rng::substream(settings.scenario.rng_seed, rng::STREAM_CHOICES);
    let (dataset, modes) = simulate_choices(&settings.model, &scenario, &provider, &mut choice_rng)?;
    write_dataset(emitter.out_dir(), &dataset)?;
    modes.write(emitter.out_dir().join("modes.csv"))?;
    for name in ["zones.csv", "cliques.csv", "situations.csv", "modes.csv"] {
        emitter.add_existing(name)?;
    }
    emitter.finish(&settings.run_config())
}

fn cmd_estimate(settings: EstimateSettings) -> anyhow::Result<()> {
    let (dataset, assignment) = load_inputs(&settings.data)?;
    let provider = provider_for(&settings.data)?;
    let mut fits = Vec::new();
    let mut validations = Vec::new();
    for kind in settings.data.choice.kinds() {
        let spec = ModelSpec::new(kind);
        let table = ImpedanceTable::build(
            &dataset.situations,
            &dataset.zones,
            &provider,
            &assignment,
            kind,
        )?;
        let sets = build_choice_sets(
            &dataset.situations,
            &dataset.zones,
            &table,
            &settings.data.sampling,
        )?;
        let fit = estimator::estimate(&sets, &spec, &EstimateOptions::default())?;
        require_converged(&fit)?;
        let validation =
            cross_validate(&dataset, &assignment, &spec, &provider, &settings.validation)?;
        fits.push(fit);
        validations.push(validation);
    }
    let mut emitter = Emitter::create(&settings.out)?;
    emitter.write("coefficients.csv", &report::coefficients_table(&fits)?)?;
    emitter.write("fit.csv", &report::fit_table(&fits)?)?;
    emitter.write("validation.csv", &report::validation_table(&validations)?)?;
    let models: Vec<_> = fits
        .iter()
        .zip(&validations)
        .map(|(fit, validation)| json!({ "fit": fit, "validation": validation }))
        .collect();
    emitter.write_json("results.json", &json!({ "models": models }))?;
    emitter.finish(&settings.run_config("estimate"))
}

fn cmd_validate(settings: EstimateSettings) -> anyhow::Result<()> {
    let (dataset, assignment) = load_inputs(&settings.data)?;
    let provider = provider_for(&settings.data)?;
    let mut validations = Vec::new();
    for kind in settings.data.choice.kinds() {
        let spec = ModelSpec::new(kind);
        let validation =
            cross_validate(&dataset, &assignment, &spec, &provider, &settings.validation)?;
        validations.push(validation);
    }
    let mut emitter = Emitter::create(&settings.out)?;
    emitter.write("validation.csv", &report::validation_table(&validations)?)?;
    emitter.write("folds.csv", &report::fold_table(&validations)?)?;
    emitter.write_json("results.json", &json!({ "models": validations }))?;
    emitter.finish(&settings.run_config("validate"))
}

fn cmd_elasticity(settings: ElasticitySettings) -> anyhow::Result<()> {
    let (dataset, assignment) = load_inputs(&settings.data)?;
    let provider = provider_for(&settings.data)?;
    let mut results = Vec::new();
    for kind in settings.data.choice.kinds() {
        let spec = ModelSpec::new(kind);
        let result = bootstrap_estimate(
            &dataset,
            &assignment,
            &spec,
            &provider,
            &settings.bootstrap,
        )?;
        results.push(result);
    }
    let mut emitter = Emitter::create(&settings.out)?;
    emitter.write(
        "coefficients.csv",
        &report::bootstrap_coefficients_table(&results)?,
    )?;
    emitter.write("elasticities.csv", &report::elasticity_table(&results)?)?;
    emitter.write_json("results.json", &json!({ "models": results }))?;
    emitter.finish(&settings.run_config("elasticity"))
}

fn cmd_curves(settings: CurvesSettings) -> anyhow::Result<()> {
    let (dataset, assignment) = load_inputs(&settings.data)?;
    let provider = provider_for(&settings.data)?;
    let mut fits = Vec::new();
    let mut series = Vec::new();
    let mut backgrounds = Vec::new();
    for kind in settings.data.choice.kinds() {
        let spec = ModelSpec::new(kind);
        let table = ImpedanceTable::build(
            &dataset.situations,
            &dataset.zones,
            &provider,
            &assignment,
            kind,
        )?;
        let sets = build_choice_sets(
            &dataset.situations,
            &dataset.zones,
            &table,
            &settings.data.sampling,
        )?;
        let fit = estimator::estimate(&sets, &spec, &EstimateOptions::default())?;
        require_converged(&fit)?;
        let background = match settings.background_time {
            Some(time) => time,
            None => mean_travel_time(&table)?,
        };
        let curve_spec = CurveSpec::new(
            settings.restaurants,
            (0..=settings.t_max).map(f64::from).collect(),
            settings.background_k,
            background,
        )?;
        let points = probability_curve(&fit.beta, &curve_spec)?;
        series.push(CurveSeries {
            label: kind.token().to_owned(),
            points,
        });
        backgrounds.push((kind.token(), background));
        fits.push(fit);
    }
    let mut emitter = Emitter::create(&settings.out)?;
    let title = format!(
        "choice probability vs group travel time ({} background zones of {} restaurants)",
        settings.background_k, settings.restaurants
    );
    emitter.write("curves.csv", &report::curves_table(&series)?)?;
    emitter.write("curves.svg", &report::curves_svg(&series, &title)?)?;
    emitter.write("coefficients.csv", &report::coefficients_table(&fits)?)?;
    let models: Vec<_> = fits
        .iter()
        .zip(&backgrounds)
        .map(|(fit, &(_, background))| {
            json!({ "fit": fit, "background_time_min": background })
        })
        .collect();
    emitter.write_json("results.json", &json!({ "models": models }))?;
    emitter.finish(&settings.run_config(&backgrounds))
}

fn cmd_segment(settings: ElasticitySettings, rule: SegmentRule) -> anyhow::Result<()> {
    let kind = match settings.data.choice {
        ImpedanceChoice::One(kind) => kind,
        ImpedanceChoice::All => {
            return Err(UsageError(
                "segment runs one model; pass --impedance <max|min|mean|median|ego>".into(),
            )
            .into());
        }
    };
    let (dataset, assignment) = load_inputs(&settings.data)?;
    let provider = provider_for(&settings.data)?;
    let mut emitter = Emitter::create(&settings.out)?;

    // An empty side is a property of the data worth recording, not a
    // failure: note it and close the run without segment tables.
    let (yes_label, no_label) = rule.segment_labels();
    let mut inside = 0usize;
    let mut outside = 0usize;
    for situation in dataset.situations.iter() {
        let clique = dataset.cliques.get(situation.clique_id).ok_or_else(|| {
            destchoice::Error::DanglingReference(format!("clique {}", situation.clique_id))
        })?;
        if rule.applies(situation, clique) {
            inside += 1;
        } else {
            outside += 1;
        }
    }
    if inside == 0 || outside == 0 {
        let empty = if inside == 0 { &yes_label } else { &no_label };
        emitter.note(format!(
            "segment '{empty}' contains no situations; segment tables omitted"
        ));
        return emitter.finish(&segment_run_config(&settings, &rule));
    }

    let result = segment_and_estimate(
        &dataset,
        &assignment,
        rule,
        &ModelSpec::new(kind),
        &provider,
        &settings.bootstrap,
    )?;
    for warning in &result.warnings {
        emitter.note(warning.clone());
    }
    emitter.write("segments.csv", &report::segment_coefficients_table(&result))?;
    emitter.write(
        "segment_elasticities.csv",
        &report::segment_elasticity_table(&result),
    )?;
    emitter.write_json("results.json", &result)?;
    emitter.finish(&segment_run_config(&settings, &rule))
}

fn cmd_mode_model(settings: ModeModelSettings) -> anyhow::Result<()> {
    let dataset = load_dataset(&settings.data)?;
    let observed = ModeTable::load(settings.data.join("modes.csv"))?;
    let records = ego_training_records(
        &dataset.situations,
        &dataset.cliques,
        &dataset.zones,
        &observed,
    )?;
    let classifier = train_mode_classifier(&records, settings.folds, settings.seed)?;
    let mut emitter = Emitter::create(&settings.out)?;
    let mut artifact = classifier.to_json();
    artifact.push('\n');
    emitter.write("mode_model.json", &artifact)?;
    emitter.write_json(
        "results.json",
        &json!({ "n_records": records.len(), "cv_accuracy": classifier.cv_accuracy }),
    )?;
    emitter.finish(&settings.run_config())
}

fn cmd_recover(settings: RecoverSettings) -> anyhow::Result<()> {
    let options = RecoveryOptions {
        bootstrap: settings.bootstrap.clone(),
        validation: settings.validation.clone(),
    };
    let report = recovery_test(&settings.scenario, &settings.model, &options)?;
    let mut emitter = Emitter::create(&settings.out)?;
    emitter.write("recovery.csv", &report::recovery_table(&report))?;
    emitter.write_json("results.json", &report)?;
    emitter.finish(&settings.run_config())
}
