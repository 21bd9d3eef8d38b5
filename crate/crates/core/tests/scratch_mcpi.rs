use destchoice::estimator::{self, EstimateOptions, ModelSpec};
use destchoice::impedance::{ImpedanceKind, ImpedanceTable, ModeSource, TravelTimeProvider, assign_modes};
use destchoice::rng;
use destchoice::sampling::{SamplingConfig, build_choice_sets, mean_travel_time, sampling_weight};
use destchoice::synth::{ScenarioConfig, TrueModel, generate_scenario, simulate_choices};
use rand::Rng;

const TRUTH: [f64; 3] = [0.0093, 0.5590, -0.2943];

#[test]
#[ignore]
fn probe_mc_pi_offsets() {
    let mut sum_rosen = [0.0f64; 3];
    let mut sum_mc = [0.0f64; 3];
    const SEEDS: u64 = 12;
    for seed in 0..SEEDS {
        let config = ScenarioConfig {
            rng_seed: seed,
            ..ScenarioConfig::default()
        };
        let model = TrueModel::default();
        let provider = TravelTimeProvider::synthetic_default();
        let mut scenario_rng = rng::substream(seed, rng::STREAM_SCENARIO);
        let scenario = generate_scenario(&config, &mut scenario_rng).unwrap();
        let mut choice_rng = rng::substream(seed, rng::STREAM_CHOICES);
        let (dataset, modes) =
            simulate_choices(&model, &scenario, &provider, &mut choice_rng).unwrap();
        let assignment = assign_modes(
            &dataset.situations,
            &dataset.cliques,
            &dataset.zones,
            &ModeSource::Table(&modes),
        )
        .unwrap();
        let table = ImpedanceTable::build(
            &dataset.situations,
            &dataset.zones,
            &provider,
            &assignment,
            ImpedanceKind::Mean,
        )
        .unwrap();
        let sampling = SamplingConfig {
            k: 20,
            include_correction: true,
            rng_seed: seed,
        };
        let sets =
            build_choice_sets(&dataset.situations, &dataset.zones, &table, &sampling).unwrap();
        let spec = ModelSpec::new(ImpedanceKind::Mean);
        let fit_rosen = estimator::estimate(&sets, &spec, &EstimateOptions::default()).unwrap();

        // Same sets, offsets replaced by −ln of near-exact Monte-Carlo
        // inclusion frequencies of the sequential sampler.
        let t_bar = mean_travel_time(&table).unwrap();
        let mut mc_sets = sets.clone();
        let mut mc_rng = rng::substream(seed ^ 0xABCD_EF01, 900);
        for (s, set) in mc_sets.iter_mut().enumerate() {
            let chosen_zone = dataset.situations.situations()[s].chosen_zone;
            let mut weights = Vec::new();
            for (z, zone) in dataset.zones.iter().enumerate() {
                let w = sampling_weight(zone.restaurant_count, table.time(s, z), t_bar).unwrap();
                if zone.id != chosen_zone && w > 0.0 {
                    weights.push((zone.id, w));
                }
            }
            const DRAWS: u32 = 20_000;
            let mut counts = std::collections::HashMap::new();
            for _ in 0..DRAWS {
                let mut pool = weights.clone();
                for _ in 0..20 {
                    let total: f64 = pool.iter().map(|&(_, w)| w).sum();
                    let target = mc_rng.random::<f64>() * total;
                    let mut acc = 0.0;
                    let mut pick = pool.len() - 1;
                    for (i, &(_, w)) in pool.iter().enumerate() {
                        acc += w;
                        if target < acc {
                            pick = i;
                            break;
                        }
                    }
                    let (zid, _) = pool.remove(pick);
                    *counts.entry(zid).or_insert(0u32) += 1;
                }
            }
            for alt in set.alternatives.iter_mut().filter(|a| !a.chosen) {
                let c = counts.get(&alt.zone).copied().unwrap_or(0);
                let pi = (f64::from(c) + 0.5) / (f64::from(DRAWS) + 1.0);
                alt.offset = -pi.ln();
            }
        }
        let fit_mc = estimator::estimate(&mc_sets, &spec, &EstimateOptions::default()).unwrap();
        let r = fit_rosen.beta.as_slice();
        let m = fit_mc.beta.as_slice();
        for i in 0..3 {
            sum_rosen[i] += r[i] - TRUTH[i];
            sum_mc[i] += m[i] - TRUTH[i];
        }
        println!(
            "seed {seed}: rosen = [{:+.4} {:+.4} {:+.4}]  mc = [{:+.4} {:+.4} {:+.4}]",
            r[0], r[1], r[2], m[0], m[1], m[2]
        );
    }
    println!(
        "mean bias rosen = [{:+.4} {:+.4} {:+.4}]  mc = [{:+.4} {:+.4} {:+.4}]",
        sum_rosen[0] / SEEDS as f64,
        sum_rosen[1] / SEEDS as f64,
        sum_rosen[2] / SEEDS as f64,
        sum_mc[0] / SEEDS as f64,
        sum_mc[1] / SEEDS as f64,
        sum_mc[2] / SEEDS as f64,
    );
}
