use gridnwa_core::demand::{
    bucket_masses, build_transition_matrix, mcmc_fit, sample_trajectory, BucketSpec, Gompertz, GrowthDistribution,
    GrowthState, McmcConfig, TransitionMatrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn draws(g: &Gompertz, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| g.quantile(rng.gen::<f64>())).collect()
}

#[test]
fn mcmc_recovers_known_gompertz() {
    let truth = Gompertz::new(0.6, 0.04).unwrap();
    let fit = mcmc_fit(&draws(&truth, 20_000, 7), &McmcConfig::default()).unwrap();
    let d = fit.distribution;
    assert!((d.shape / truth.shape - 1.0).abs() < 0.15, "shape {}", d.shape);
    assert!((d.scale / truth.scale - 1.0).abs() < 0.15, "scale {}", d.scale);
    let spec = BucketSpec::default();
    let want = bucket_masses(&GrowthDistribution::Gompertz(truth), &spec).unwrap();
    let got = bucket_masses(&fit.growth_distribution(), &spec).unwrap();
    for (w, g) in want.iter().zip(&got) {
        assert!((w - g).abs() < 0.02, "{want:?} vs {got:?}");
    }
}

#[test]
fn empirical_matrix_counts_samples() {
    let dist = GrowthDistribution::empirical(vec![0.01, 0.02, 0.06, 0.07, 0.09]).unwrap();
    let m = build_transition_matrix(&dist, &BucketSpec::default()).unwrap();
    for row in m.p {
        for (x, want) in row.iter().zip([0.4, 0.4, 0.2]) {
            assert!((x - want).abs() < 1e-15);
        }
    }
}

#[test]
fn sampled_chain_frequencies_follow_rows() {
    let m = TransitionMatrix::delhi_default();
    let growth = [0.03, 0.066, 0.099];
    let mut counts = [[0usize; 3]; 3];
    for seed in 0..4000 {
        let t = sample_trajectory(&m, GrowthState::Mid, 50, &growth, seed).unwrap();
        for w in t.periods.windows(2) {
            counts[w[0].state.index()][w[1].state.index()] += 1;
        }
    }
    for (i, row) in counts.iter().enumerate() {
        let n: usize = row.iter().sum();
        for j in 0..3 {
            let f = row[j] as f64 / n as f64;
            assert!((f - m.p[i][j]).abs() < 0.01, "({i},{j}) {f} vs {}", m.p[i][j]);
        }
    }
}

#[test]
fn trajectory_growth_matches_state() {
    let growth = [0.01, 0.02, 0.03];
    let t = sample_trajectory(&TransitionMatrix::delhi_default(), GrowthState::High, 6, &growth, 3).unwrap();
    assert_eq!(t.periods[0].state, GrowthState::High);
    for p in &t.periods {
        assert_eq!(p.growth, growth[p.state.index()]);
    }
}
