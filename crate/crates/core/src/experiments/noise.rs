use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Adds shot-noise-like Gaussian noise, `σᵢ = level·√(|yᵢ|·max|y|)`, drawn
/// in index order from a seeded generator.
pub fn add_noise(y: &mut [f64], level: f64, seed: u64) {
    if level <= 0.0 {
        return;
    }
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in y.iter_mut() {
        let sigma = level * (v.abs() * peak).sqrt();
        if sigma > 0.0 {
            // σ is finite and positive here
            let d = Normal::new(0.0, sigma).expect("valid width");
            *v += d.sample(&mut rng);
        }
    }
}
