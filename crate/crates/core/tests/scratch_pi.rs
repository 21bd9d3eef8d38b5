use destchoice::rng;
use destchoice::sampling::inclusion_probabilities;
use rand::Rng;
use rand_distr::{Distribution, LogNormal};

fn empirical(weights: &[f64], k: usize, draws: u32, seed: u64) -> Vec<f64> {
    let mut stream = rng::substream(seed, 0);
    let mut counts = vec![0u64; weights.len()];
    for _ in 0..draws {
        let mut pool: Vec<(usize, f64)> = weights.iter().copied().enumerate().collect();
        for _ in 0..k {
            let total: f64 = pool.iter().map(|&(_, w)| w).sum();
            let target = stream.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = pool.len() - 1;
            for (i, &(_, w)) in pool.iter().enumerate() {
                acc += w;
                if target < acc {
                    pick = i;
                    break;
                }
            }
            counts[pool.remove(pick).0] += 1;
        }
    }
    counts.iter().map(|&c| c as f64 / f64::from(draws)).collect()
}

#[test]
#[ignore]
fn probe_rosen_accuracy() {
    for &(n, k) in &[(10usize, 3usize), (20, 5), (40, 8), (60, 12), (118, 20)] {
        let log_normal = LogNormal::new(0.0, 1.0).unwrap();
        let mut wrng = rng::substream(42, n as u64);
        let weights: Vec<f64> = (0..n)
            .map(|i| {
                let m: f64 = log_normal.sample(&mut wrng);
                let t = 90.0 * i as f64 / n as f64;
                m * (-2.0 * t / 30.0).exp()
            })
            .collect();
        let pi = inclusion_probabilities(&weights, k).unwrap();
        let freq = empirical(&weights, k, 100_000, 7);
        let max_err = pi
            .iter()
            .zip(&freq)
            .map(|(p, f)| (p - f).abs())
            .fold(0.0f64, f64::max);
        let mean_err = pi
            .iter()
            .zip(&freq)
            .map(|(p, f)| (p - f).abs())
            .sum::<f64>()
            / n as f64;
        println!("n={n:3} k={k:2}  max|pi - freq| = {max_err:.4}  mean = {mean_err:.4}");
    }
}
