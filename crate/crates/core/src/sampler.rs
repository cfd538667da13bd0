//! Finite-shot estimates of correlations, for checking the exact values
//! against something an experiment could produce.
//!
//! Outcomes are drawn from the exact joint distribution p(s, t) =
//! tr[ϱ (Pₛ ⊗ Qₜ)] built from the ±1 eigenprojectors of the two observables.
//! Trials are generated in fixed-size chunks, each from its own counter-seeded
//! stream, so estimates are reproducible, independent of thread count, and
//! stable under extending the trial count: the first n draws of a longer run
//! are the draws of a shorter one.

use nalgebra::Matrix2;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bell::Observable;
use crate::qstate::QubitPairState;

const CHUNK: u64 = 1 << 16;

/// A sampled correlation: sample mean of the ±1 outcome products and its
/// standard error (0 when a single trial gives no spread estimate).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SampleEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_trials: u64,
}

/// Samples ⟨A ⊗ B⟩ with `n_trials` independent joint measurements.
pub fn sample_correlation(
    state: &QubitPairState,
    first: &Observable,
    second: &Observable,
    n_trials: u64,
    rng_seed: u64,
) -> SampleEstimate {
    assert!(n_trials >= 1, "at least one trial is required");

    // joint outcome probabilities in the order (++, +−, −+, −−)
    let a = first.matrix();
    let b = second.matrix();
    let half = Complex::new(0.5, 0.0);
    let id: Matrix2<Complex<f64>> = Matrix2::identity();
    let pa = [(id + a) * half, (id - a) * half];
    let qb = [(id + b) * half, (id - b) * half];
    let mut probs = [0.0f64; 4];
    for s in 0..2 {
        for t in 0..2 {
            let joint = pa[s].kronecker(&qb[t]);
            let mut z = Complex::new(0.0, 0.0);
            for i in 0..4 {
                for k in 0..4 {
                    z += state.matrix()[(i, k)] * joint[(k, i)];
                }
            }
            probs[2 * s + t] = z.re.max(0.0);
        }
    }
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    // cumulative thresholds; outcome products are +1, −1, −1, +1
    let c = [
        probs[0],
        probs[0] + probs[1],
        probs[0] + probs[1] + probs[2],
    ];

    let chunks = n_trials.div_ceil(CHUNK);
    let plus: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(chunk);
            let draws = CHUNK.min(n_trials - chunk * CHUNK);
            let mut plus = 0u64;
            for _ in 0..draws {
                // [0, c0) → ++, [c0, c1) → +−, [c1, c2) → −+, [c2, 1) → −−
                let u = rng.random::<f64>();
                if u < c[0] || u >= c[2] {
                    plus += 1;
                }
            }
            plus
        })
        .sum();

    let n = n_trials as f64;
    let mean = (2.0 * plus as f64 - n) / n;
    let std_error = if n_trials > 1 {
        ((1.0 - mean * mean).max(0.0) / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    SampleEstimate {
        mean,
        std_error,
        n_trials,
    }
}
