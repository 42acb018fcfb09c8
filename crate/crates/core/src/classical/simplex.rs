//! Derivative-free minimization with the Nelder-Mead simplex.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Converged once the spread of objective values across the simplex is
    /// at most `tolerance * max(1, |best|)`.
    pub tolerance: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-8,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective value after each iteration.
    pub trace: Vec<f64>,
}

/// Minimize `f` from `x0` with an initial simplex of `x0 + steps[i] * e_i`.
///
/// Non-finite objective values are treated as `+inf`. Vertices with equal
/// values keep their previous order, so runs are reproducible.
pub fn minimize<F>(mut f: F, x0: &[f64], steps: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    if n == 0 {
        let value = eval(x0);
        return SimplexResult {
            x: Vec::new(),
            value,
            iterations: 0,
            converged: true,
            trace: vec![value],
        };
    }

    let mut vertices: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    vertices.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let v = eval(&x);
        vertices.push((x, v));
    }

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        vertices.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = vertices[0].1;
        let worst = vertices[n].1;
        if worst - best <= opts.tolerance * best.abs().max(1.0) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &vertices[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&vertices[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(opts.reflection);
        let fr = eval(&reflected);
        if fr < vertices[0].1 {
            let expanded = along(opts.reflection * opts.expansion);
            let fe = eval(&expanded);
            vertices[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < vertices[n - 1].1 {
            vertices[n] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < vertices[n].1 {
                let x = along(opts.reflection * opts.contraction);
                let v = eval(&x);
                (x, v)
            } else {
                let x = along(-opts.contraction);
                let v = eval(&x);
                (x, v)
            };
            if fc < fr.min(vertices[n].1) {
                vertices[n] = (contracted, fc);
            } else {
                let anchor = vertices[0].0.clone();
                for (x, v) in vertices.iter_mut().skip(1) {
                    for (xi, a) in x.iter_mut().zip(&anchor) {
                        *xi = a + opts.shrink * (*xi - a);
                    }
                    *v = eval(x);
                }
            }
        }
        let current_best = vertices.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        trace.push(current_best);
    }
    vertices.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = vertices.swap_remove(0);
    SimplexResult {
        x,
        value,
        iterations,
        converged,
        trace,
    }
}
