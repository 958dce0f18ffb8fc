//! Oracles shared by the integration test targets.
#![allow(dead_code)]

use heatbayes::inference::{compute_posterior, ForwardOperator, Observation};
use heatbayes::mesh::DesignGrid;
use heatbayes::prior::PriorCovariance;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn dummy_design(n: usize) -> DesignGrid {
    DesignGrid::from_points((0..n).map(|i| [i as f64, 0.0]).collect(), 1.0)
}

pub fn operator(g: DMatrix<f64>) -> ForwardOperator {
    let n = g.nrows();
    ForwardOperator::new(g, dummy_design(n), 1.0).unwrap()
}

/// Prior with covariance `diag(v)`: α = 1 and λ_j = 1/v_j.
pub fn prior_from_variances(v: &[f64]) -> PriorCovariance {
    let mut inv: Vec<f64> = v.iter().map(|x| 1.0 / x).collect();
    inv.sort_by(f64::total_cmp);
    assert!(
        inv.iter().zip(v.iter().map(|x| 1.0 / x)).all(|(a, b)| *a == b),
        "variances must be non-increasing"
    );
    PriorCovariance::from_eigenvalues(1.0, &inv).unwrap()
}

/// Mean and covariance of `exp(−‖y−Gf‖²/2σ² − Σ f_j²/2v_j)` by midpoint quadrature on a
/// box of ±7 prior standard deviations.
pub fn grid_bayes(g: &DMatrix<f64>, y: &[f64], sigma: f64, v: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let j = v.len();
    let pts: usize = match j {
        1 => 4001,
        2 => 401,
        _ => 121,
    };
    let axes: Vec<Vec<f64>> = v
        .iter()
        .map(|vj| {
            let r = 7.0 * vj.sqrt();
            (0..pts).map(|k| -r + (k as f64 + 0.5) * 2.0 * r / pts as f64).collect()
        })
        .collect();
    let total = pts.pow(j as u32);
    // log-density values first, then a max-shift for stability
    let mut logs = Vec::with_capacity(total);
    let mut f = vec![0.0; j];
    for idx in 0..total {
        let mut rem = idx;
        for d in 0..j {
            f[d] = axes[d][rem % pts];
            rem /= pts;
        }
        let mut lp = 0.0;
        for (i, yi) in y.iter().enumerate() {
            let r = yi - (0..j).map(|d| g[(i, d)] * f[d]).sum::<f64>();
            lp -= r * r / (2.0 * sigma * sigma);
        }
        for d in 0..j {
            lp -= f[d] * f[d] / (2.0 * v[d]);
        }
        logs.push(lp);
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut m1 = vec![0.0; j];
    let mut m2 = vec![vec![0.0; j]; j];
    for (idx, lp) in logs.iter().enumerate() {
        let w = (lp - top).exp();
        let mut rem = idx;
        for d in 0..j {
            f[d] = axes[d][rem % pts];
            rem /= pts;
        }
        z += w;
        for a in 0..j {
            m1[a] += w * f[a];
            for b in 0..j {
                m2[a][b] += w * f[a] * f[b];
            }
        }
    }
    let mean: Vec<f64> = m1.iter().map(|x| x / z).collect();
    let cov = (0..j)
        .map(|a| (0..j).map(|b| m2[a][b] / z - mean[a] * mean[b]).collect())
        .collect();
    (mean, cov)
}

/// Draws a random instance with `J = 1 + case % 3` and `n ≤ 5` and returns the
/// largest absolute deviation between the conjugate formulae and grid quadrature,
/// over all mean and covariance entries.
pub fn conjugacy_case(case: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (case as u64).wrapping_mul(0x9e37_79b9));
    let j = 1 + case % 3;
    let n = rng.random_range(1..=5);
    let g = DMatrix::from_fn(n, j, |_, _| rng.random_range(-1.5..1.5));
    let mut v: Vec<f64> = (0..j).map(|_| rng.random_range(0.2..2.0)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    let sigma = rng.random_range(0.3..1.0);
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();

    let post = compute_posterior(
        &operator(g.clone()),
        &Observation::new(y.clone(), sigma, dummy_design(n)).unwrap(),
        &prior_from_variances(&v),
    )
    .unwrap();
    let (mean, cov) = grid_bayes(&g, &y, sigma, &v);
    let mut worst: f64 = 0.0;
    for a in 0..j {
        worst = worst.max((post.mean()[a] - mean[a]).abs());
        for b in 0..j {
            worst = worst.max((post.covariance()[(a, b)] - cov[a][b]).abs());
        }
    }
    worst
}
