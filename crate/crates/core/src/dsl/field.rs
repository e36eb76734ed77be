use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sphere::{Dim, SpherePoint};

/// Cosine terms per output component.
const TERMS: usize = 4;
/// Frequencies are integer vectors with entries in `-MAX_FREQ..=MAX_FREQ`.
const MAX_FREQ: i32 = 2;

#[derive(Debug, Clone, PartialEq)]
struct Term {
    amplitude: f64,
    freq: [f64; 3],
    phase: f64,
}

/// A smooth vector field `V: Sᵐ → ℝᵐ⁺¹` with `‖V(x)‖₂ ≤ 1`, determined by a seed.
///
/// Component `j` is `Σ_t a_jt · cos(w_jt · x + φ_jt)`. The raw amplitudes are
/// divided by `sqrt(Σ_j (Σ_t |a_jt|)²)`, which bounds `‖V‖₂` everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationField {
    seed: u64,
    dim: Dim,
    components: Vec<[Term; TERMS]>,
}

impl PerturbationField {
    pub fn new(seed: u64, dim: Dim) -> PerturbationField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ambient = dim.ambient();
        let mut components: Vec<[Term; TERMS]> = (0..ambient)
            .map(|_| {
                std::array::from_fn(|_| {
                    let mut freq = [0.0; 3];
                    for w in freq.iter_mut().take(ambient) {
                        *w = rng.random_range(-MAX_FREQ..=MAX_FREQ) as f64;
                    }
                    Term {
                        amplitude: rng.random_range(-1.0..=1.0),
                        freq,
                        phase: rng.random_range(0.0..TAU),
                    }
                })
            })
            .collect();

        let bound = components
            .iter()
            .map(|c| c.iter().map(|t| t.amplitude.abs()).sum::<f64>().powi(2))
            .sum::<f64>()
            .sqrt();
        if bound > 0.0 {
            for t in components.iter_mut().flatten() {
                t.amplitude /= bound;
            }
        }
        PerturbationField {
            seed,
            dim,
            components,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    /// `V(x)` padded to ℝ³.
    pub fn eval(&self, x: &SpherePoint) -> [f64; 3] {
        let p = x.xyz();
        let mut out = [0.0; 3];
        for (o, terms) in out.iter_mut().zip(&self.components) {
            *o = terms
                .iter()
                .map(|t| {
                    let arg = t.freq[0] * p[0] + t.freq[1] * p[1] + t.freq[2] * p[2] + t.phase;
                    t.amplitude * arg.cos()
                })
                .sum();
        }
        out
    }
}
