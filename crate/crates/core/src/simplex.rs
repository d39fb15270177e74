//! Derivative-free Nelder-Mead simplex minimization.
//!
//! The spectral objective involves clipping, so it is not smooth everywhere
//! and gradient-based methods are a poor match; the simplex only needs
//! function values. Standard coefficients: reflection 1, expansion 2,
//! contraction 0.5, shrink 0.5.

const REFLECTION: f64 = 1.0;
const EXPANSION: f64 = 2.0;
const CONTRACTION: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the simplex spread (largest distance from
    /// the best vertex to any other vertex).
    pub tolerance: f64,
    /// Step added to each coordinate of the start point to form the
    /// initial simplex.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            tolerance: 1e-6,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective value seen up to each iteration; non-increasing.
    pub best_trace: Vec<f64>,
}

/// Minimizes `f` starting from `x0`. Deterministic: no randomness, fixed
/// tie-breaking through stable ordering of vertices.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    options: &SimplexOptions,
) -> SimplexResult {
    let dim = x0.len();
    assert!(dim > 0, "cannot optimize zero-dimensional input");

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += options.initial_step;
        simplex.push(v);
    }
    let mut scores: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut best_trace = Vec::with_capacity(options.max_iterations);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iterations {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];
        best_trace.push(scores[best]);

        if simplex_spread(&simplex, best) < options.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        // Centroid of all vertices except the worst.
        let mut centroid = vec![0.0; dim];
        for &idx in order.iter().take(dim) {
            for d in 0..dim {
                centroid[d] += simplex[idx][d];
            }
        }
        for c in &mut centroid {
            *c /= dim as f64;
        }

        let reflected = blend(&centroid, &simplex[worst], REFLECTION);
        let f_reflected = f(&reflected);

        if f_reflected < scores[best] {
            let expanded = blend(&centroid, &simplex[worst], EXPANSION);
            let f_expanded = f(&expanded);
            if f_expanded < f_reflected {
                simplex[worst] = expanded;
                scores[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                scores[worst] = f_reflected;
            }
            continue;
        }

        if f_reflected < scores[second_worst] {
            simplex[worst] = reflected;
            scores[worst] = f_reflected;
            continue;
        }

        // Contract toward the better of the worst vertex and its reflection.
        let contracted = if f_reflected < scores[worst] {
            blend(&centroid, &simplex[worst], CONTRACTION)
        } else {
            blend(&centroid, &simplex[worst], -CONTRACTION)
        };
        let f_contracted = f(&contracted);
        if f_contracted < scores[worst].min(f_reflected) {
            simplex[worst] = contracted;
            scores[worst] = f_contracted;
            continue;
        }

        // Shrink everything toward the best vertex.
        let anchor = simplex[best].clone();
        for idx in 0..=dim {
            if idx == best {
                continue;
            }
            for d in 0..dim {
                simplex[idx][d] = anchor[d] + SHRINK * (simplex[idx][d] - anchor[d]);
            }
            scores[idx] = f(&simplex[idx]);
        }
    }

    let best = (0..=dim)
        .min_by(|&a, &b| scores[a].total_cmp(&scores[b]))
        .expect("non-empty simplex");
    best_trace.push(scores[best]);
    SimplexResult {
        x: simplex[best].clone(),
        fx: scores[best],
        iterations,
        converged,
        best_trace,
    }
}

/// Reflected/expanded/contracted point: centroid + coeff * (centroid - worst).
fn blend(centroid: &[f64], worst: &[f64], coeff: f64) -> Vec<f64> {
    centroid
        .iter()
        .zip(worst)
        .map(|(&c, &w)| c + coeff * (c - w))
        .collect()
}

fn simplex_spread(simplex: &[Vec<f64>], best: usize) -> f64 {
    let mut spread = 0.0f64;
    for (idx, vertex) in simplex.iter().enumerate() {
        if idx == best {
            continue;
        }
        let dist: f64 = vertex
            .iter()
            .zip(&simplex[best])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        spread = spread.max(dist);
    }
    spread
}
