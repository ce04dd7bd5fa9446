use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use quantsel_core::{
    fitted_quantiles, quantile_draws, sample_posterior, Dataset, DesignOptions, SamplerConfig,
};

fn homoscedastic(n: usize, p: usize, seed: u64) -> (Vec<f64>, Vec<String>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols: Vec<Vec<f64>> = (1..p)
        .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let y = (0..n)
        .map(|i| {
            let noise: f64 = rng.sample(StandardNormal);
            1.0 + cols[0][i] - 0.5 * cols[1][i] + noise
        })
        .collect();
    let names = (2..=p).map(|j| format!("x{j}")).collect();
    (y, names, cols)
}

fn config() -> SamplerConfig {
    SamplerConfig {
        n_save: 1500,
        n_burn: 1500,
        ..SamplerConfig::default()
    }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[test]
fn shifting_the_response_shifts_fitted_quantiles() {
    let (y, names, cols) = homoscedastic(300, 4, 3);
    let c = 7.5;
    let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
    let opts = DesignOptions::default();
    let d0 = Dataset::from_columns("y", y, names.clone(), cols.clone(), opts).unwrap();
    let d1 = Dataset::from_columns("y", shifted, names, cols, opts).unwrap();
    let p0 = sample_posterior(&d0, &config(), 41).unwrap();
    let p1 = sample_posterior(&d1, &config(), 41).unwrap();
    for tau in [0.05, 0.5, 0.95] {
        let q0 = quantile_draws(&p0, &d0.x, tau).unwrap();
        let q1 = quantile_draws(&p1, &d1.x, tau).unwrap();
        let (f0, f1) = (fitted_quantiles(&q0), fitted_quantiles(&q1));
        // Compare at a few rows using the spread of the per-draw values.
        for i in [0, 100, 200] {
            let a: Vec<f64> = q0.rows().map(|r| r[i]).collect();
            let b: Vec<f64> = q1.rows().map(|r| r[i]).collect();
            let (_, sa) = mean_sd(&a);
            let (_, sb) = mean_sd(&b);
            // Chains are autocorrelated, so allow a generous effective size.
            let ess = 100.0;
            let se = (sa * sa / ess + sb * sb / ess).sqrt();
            assert!(
                (f1[i] - f0[i] - c).abs() <= 3.0 * se,
                "tau {tau} row {i}: shift {} vs {c} (se {se})",
                f1[i] - f0[i]
            );
        }
    }
}

#[test]
fn homoscedastic_data_gives_flat_scale_coefficients() {
    let p = 6;
    let (y, names, cols) = homoscedastic(500, p, 4);
    let d = Dataset::from_columns("y", y, names, cols, DesignOptions::default()).unwrap();
    let pd = sample_posterior(&d, &config(), 42).unwrap();
    let within = (1..p)
        .filter(|&j| {
            let g: Vec<f64> = pd.draws.iter().map(|t| t.gamma[j]).collect();
            let (mean, sd) = mean_sd(&g);
            mean.abs() <= 3.0 * sd
        })
        .count();
    assert!(within as f64 >= 0.9 * (p - 1) as f64, "{within} of {}", p - 1);
}
