use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;

pub const DEFAULT_QUADRATURE_ORDER: usize = 21;

/// Gauss–Hermite rule for `∫ e^{−x²} f(x) dx`, built by Golub–Welsch.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be at least 1");
        let mut jacobi = DMatrix::<f64>::zeros(order, order);
        for k in 1..order {
            let b = (k as f64 / 2.0).sqrt();
            jacobi[(k, k - 1)] = b;
            jacobi[(k - 1, k)] = b;
        }
        let eig = jacobi.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], PI.sqrt() * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // symmetrise to kill round-off asymmetry between ±x nodes
        let n = pairs.len();
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (pairs[j].0 - pairs[i].0);
            let w = 0.5 * (pairs[i].1 + pairs[j].1);
            pairs[i] = (-x, w);
            pairs[j] = (x, w);
        }
        if n % 2 == 1 {
            pairs[n / 2].0 = 0.0;
        }
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Detuning samples and probability weights for `δ ~ N(0, σ²)`.
    /// A zero width collapses to the single sample `δ = 0`.
    pub fn normal_samples(&self, sigma: f64) -> Vec<(f64, f64)> {
        if sigma == 0.0 {
            return vec![(0.0, 1.0)];
        }
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| (SQRT_2 * sigma * x, w / PI.sqrt()))
            .collect()
    }
}

impl Default for GaussHermite {
    fn default() -> Self {
        Self::new(DEFAULT_QUADRATURE_ORDER)
    }
}

/// `E[f(δ)]` for `δ ~ N(0, σ²)`.
pub fn ensemble_average<F>(rule: &GaussHermite, sigma: f64, mut f: F) -> f64
where
    F: FnMut(f64) -> f64,
{
    rule.normal_samples(sigma)
        .into_iter()
        .map(|(d, w)| w * f(d))
        .sum()
}
