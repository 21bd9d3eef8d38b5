use destchoice::analysis::BootstrapConfig;
use destchoice::sampling::SamplingConfig;
use destchoice::synth::{RecoveryOptions, ScenarioConfig, TrueModel, recovery_test};

#[test]
#[ignore]
fn probe_correction_bias() {
    for &(k, correction) in &[(20usize, true)] {
        println!("== k = {k}, include_correction = {correction} ==");
        let mut all_pass = 0u32;
        for seed in 20u64..40 {
            let config = ScenarioConfig {
                rng_seed: seed,
                ..ScenarioConfig::default()
            };
            let options = RecoveryOptions {
                bootstrap: BootstrapConfig {
                    replicates: 50,
                    rng_seed: seed,
                    sampling: SamplingConfig {
                        k,
                        include_correction: correction,
                        rng_seed: seed,
                    },
                    ..BootstrapConfig::default()
                },
                validation: None,
            };
            let start = std::time::Instant::now();
            let report = recovery_test(&config, &TrueModel::default(), &options).unwrap();
            if report.z_scores.iter().all(|z| z.abs() < 2.0) {
                all_pass += 1;
            }
            let m = &report.bootstrap.beta_summary;
            let f = report.fit.beta.as_slice();
            let zf: Vec<f64> = (0..3)
                .map(|i| {
                    let truth = [0.0093, 0.5590, -0.2943][i];
                    (f[i] - truth) / (m[i].std_error)
                })
                .collect();
            println!(
                "seed {seed}: boot = [{:+.4} {:+.4} {:+.4}]  z = [{:+.2} {:+.2} {:+.2}]  fit = [{:+.4} {:+.4} {:+.4}]  zfit = [{:+.2} {:+.2} {:+.2}] ({:.1}s)",
                m[0].mean,
                m[1].mean,
                m[2].mean,
                report.z_scores[0],
                report.z_scores[1],
                report.z_scores[2],
                f[0],
                f[1],
                f[2],
                zf[0],
                zf[1],
                zf[2],
                start.elapsed().as_secs_f64(),
            );
        }
        println!("all-three-z pass: {all_pass}/20");
    }
}
