//! Reference oracles used by the lexiclass test suites.
//!
//! Everything in this crate is written in the most direct way possible —
//! double loops and dense vectors — and must stay independent of the main
//! crate so it can serve as a cross-check. None of this is meant to be fast.

use rand_core::{RngCore, SeedableRng};

/// All length-`n` code-point substrings, by scanning every start position.
pub fn naive_char_ngrams(text: &str, n: usize) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    for start in 0..chars.len() {
        if start + n <= chars.len() {
            let mut gram = String::new();
            for offset in 0..n {
                gram.push(chars[start + offset]);
            }
            out.push(gram);
        }
    }
    out
}

/// All contiguous `n`-token sequences, joined with a single space.
pub fn naive_word_ngrams(tokens: &[String], n: usize) -> Vec<String> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    for start in 0..tokens.len() {
        if start + n <= tokens.len() {
            let mut parts = Vec::new();
            for offset in 0..n {
                parts.push(tokens[start + offset].clone());
            }
            out.push(parts.join(" "));
        }
    }
    out
}

/// All ordered pairs `(tokens[i], tokens[j])` with `1 <= j - i <= k + 1`.
pub fn naive_skip_bigrams(tokens: &[String], k: usize) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..tokens.len() {
        for j in 0..tokens.len() {
            if j > i && j - i <= k + 1 {
                out.push(format!("{} {}", tokens[i], tokens[j]));
            }
        }
    }
    out
}

/// Result of the dense reference solver.
pub struct ReferenceSolution {
    /// Weight vector including the bias coordinate (length `n + 1`).
    pub weights: Vec<f64>,
    /// Final dual variables.
    pub alpha: Vec<f64>,
    /// Final dual objective `sum(alpha) - 0.5 * ||w||^2`.
    pub dual_objective: f64,
    /// Iterations actually run.
    pub iterations: usize,
}

/// Dense reference solver for the L2-regularized L1-loss SVM.
///
/// Maximizes the box-constrained dual `sum(alpha) - 0.5 alpha' Q alpha`
/// (`Q_ij = y_i y_j <x~_i, x~_j>`, `x~` = `x` with the bias constant
/// appended) by projected gradient ascent with a fixed `1/L` step, where
/// `L` is estimated by power iteration on the explicit Gram matrix. Stops
/// early once the iterates are stationary.
pub fn reference_svm(
    x: &[Vec<f64>],
    y: &[f64],
    c: f64,
    bias: f64,
    max_iterations: usize,
) -> ReferenceSolution {
    let l = x.len();
    assert!(l > 0 && y.len() == l);
    let n = x[0].len();

    let augmented: Vec<Vec<f64>> = x
        .iter()
        .map(|xi| {
            assert_eq!(xi.len(), n);
            let mut v = xi.clone();
            v.push(bias);
            v
        })
        .collect();

    let mut gram = vec![vec![0.0f64; l]; l];
    for i in 0..l {
        for j in 0..l {
            let dot: f64 = augmented[i]
                .iter()
                .zip(&augmented[j])
                .map(|(a, b)| a * b)
                .sum();
            gram[i][j] = y[i] * y[j] * dot;
        }
    }

    // 1/L step with a safety margin; L slightly overestimated is fine,
    // underestimated makes the ascent cycle.
    let step = 1.0 / (1.05 * largest_eigenvalue(&gram)).max(1e-12);

    let mut alpha = vec![0.0f64; l];
    let mut gradient = vec![0.0f64; l];
    let mut iterations = 0;
    for _ in 0..max_iterations {
        iterations += 1;
        for i in 0..l {
            let mut q_alpha = 0.0;
            for j in 0..l {
                q_alpha += gram[i][j] * alpha[j];
            }
            gradient[i] = 1.0 - q_alpha;
        }
        let mut max_change = 0.0f64;
        for i in 0..l {
            let updated = (alpha[i] + step * gradient[i]).clamp(0.0, c);
            max_change = max_change.max((updated - alpha[i]).abs());
            alpha[i] = updated;
        }
        if max_change < 1e-14 {
            break;
        }
    }

    let mut weights = vec![0.0f64; n + 1];
    for i in 0..l {
        for d in 0..=n {
            weights[d] += y[i] * alpha[i] * augmented[i][d];
        }
    }
    let norm_sq: f64 = weights.iter().map(|w| w * w).sum();
    let dual_objective = alpha.iter().sum::<f64>() - 0.5 * norm_sq;

    ReferenceSolution {
        weights,
        alpha,
        dual_objective,
        iterations,
    }
}

/// Primal objective `0.5 ||w||^2 + C sum max(0, 1 - y_i <w, x~_i>)` for a
/// weight vector that includes the bias coordinate.
pub fn primal_objective(x: &[Vec<f64>], y: &[f64], c: f64, bias: f64, weights: &[f64]) -> f64 {
    let n = weights.len() - 1;
    let norm_sq: f64 = weights.iter().map(|w| w * w).sum();
    let mut loss = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        assert_eq!(xi.len(), n);
        let mut score = weights[n] * bias;
        for d in 0..n {
            score += weights[d] * xi[d];
        }
        loss += (1.0 - yi * score).max(0.0);
    }
    0.5 * norm_sq + c * loss
}

fn largest_eigenvalue(m: &[Vec<f64>]) -> f64 {
    let l = m.len();
    // Generic start direction; a constant vector can sit exactly on a
    // non-dominant eigenvector.
    let mut v: Vec<f64> = (0..l)
        .map(|i| {
            let h = (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            0.5 + (h >> 40) as f64 / (1u64 << 24) as f64
        })
        .collect();
    let mut lambda = 0.0;
    for _ in 0..200 {
        let mut next = vec![0.0f64; l];
        for i in 0..l {
            for j in 0..l {
                next[i] += m[i][j] * v[j];
            }
        }
        let norm = next.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return 0.0;
        }
        for a in next.iter_mut() {
            *a /= norm;
        }
        lambda = norm;
        v = next;
    }
    lambda
}

/// A small random binary classification problem with dense feature vectors.
pub struct RandomProblem {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

/// Deterministic random problem generator for solver cross-checks.
///
/// Features are dense vectors with roughly `density` nonzero entries drawn
/// uniformly from [-1, 1]; labels are +/-1 with a mild class-dependent shift
/// on the first feature so the problems are not pure noise.
pub fn random_problem(seed: u64, instances: usize, features: usize, density: f64) -> RandomProblem {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = move |lo: f64, hi: f64| {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        lo + u * (hi - lo)
    };
    let mut x = Vec::with_capacity(instances);
    let mut y = Vec::with_capacity(instances);
    for i in 0..instances {
        let label = if i % 2 == 0 { 1.0 } else { -1.0 };
        let mut xi = vec![0.0f64; features];
        for value in xi.iter_mut() {
            if uniform(0.0, 1.0) < density {
                *value = uniform(-1.0, 1.0);
            }
        }
        xi[0] += 0.3 * label;
        x.push(xi);
        y.push(label);
    }
    RandomProblem { x, y }
}
