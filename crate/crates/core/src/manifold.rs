//! Riemannian gradient descent on the complex Stiefel manifold
//! `St(k, r) = {U ∈ C^{k×r} : U†U = I}` with the embedded metric `Re Tr(A†B)`.
//!
//! The unit sphere in `C^d` is `St(d, 1)`; both the ensemble minimizer and the
//! conjugate-function maximizer run on this one engine.

use serde::{Deserialize, Serialize};

use crate::linalg::{self, c64, real_inner, ComplexMatrix};

/// A smooth function on the ambient space `C^{k×r}` restricted to the manifold.
///
/// Gradients are Euclidean for the real metric, i.e. `∂f/∂Re + i ∂f/∂Im`,
/// which equals `2 ∂f/∂Ū` in Wirtinger notation.
pub trait Objective {
    fn value(&self, x: &ComplexMatrix) -> f64;
    fn value_and_gradient(&self, x: &ComplexMatrix) -> (f64, ComplexMatrix);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum StopReason {
    GradientTolerance,
    /// No measurable decrease over the stagnation window.
    Stagnation,
    /// Backtracking could not find a non-increasing step.
    LineSearch,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct DescentOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub armijo: f64,
    pub stagnation_window: usize,
    /// Replace the analytic gradient by central differences with this step.
    pub finite_difference: Option<f64>,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            max_iters: 2000,
            grad_tol: 1e-7,
            armijo: 1e-4,
            stagnation_window: 50,
            finite_difference: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Descent {
    pub point: ComplexMatrix,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub stop: StopReason,
}

impl Descent {
    pub fn converged(&self) -> bool {
        matches!(self.stop, StopReason::GradientTolerance | StopReason::Stagnation)
    }
}

/// Orthogonal projection onto the tangent space at `x`: `Z − X sym(X†Z)`.
pub fn project_tangent(x: &ComplexMatrix, z: &ComplexMatrix) -> ComplexMatrix {
    let xz = x.adjoint() * z;
    let sym = (&xz + xz.adjoint()) * c64(0.5, 0.0);
    z - x * sym
}

/// QR retraction `qf(X + V)`.
pub fn retract(x: &ComplexMatrix, v: &ComplexMatrix) -> ComplexMatrix {
    linalg::orthonormalize_columns(&(x + v))
}

/// Central-difference Euclidean gradient, perturbing real and imaginary parts of each entry.
pub fn finite_difference_gradient(f: impl Fn(&ComplexMatrix) -> f64, x: &ComplexMatrix, h: f64) -> ComplexMatrix {
    let mut grad = ComplexMatrix::zeros(x.nrows(), x.ncols());
    let mut probe = x.clone();
    for idx in 0..x.len() {
        let base = probe[idx];
        probe[idx] = base + c64(h, 0.0);
        let fp = f(&probe);
        probe[idx] = base - c64(h, 0.0);
        let fm = f(&probe);
        probe[idx] = base + c64(0.0, h);
        let gp = f(&probe);
        probe[idx] = base - c64(0.0, h);
        let gm = f(&probe);
        probe[idx] = base;
        grad[idx] = c64((fp - fm) / (2.0 * h), (gp - gm) / (2.0 * h));
    }
    grad
}

fn evaluate<O: Objective>(obj: &O, x: &ComplexMatrix, opts: &DescentOptions) -> (f64, ComplexMatrix) {
    match opts.finite_difference {
        None => obj.value_and_gradient(x),
        Some(h) => (obj.value(x), finite_difference_gradient(|p| obj.value(p), x, h)),
    }
}

/// Minimizes `obj` from `start` by projected gradient steps with QR retraction,
/// Barzilai–Borwein trial steps and monotone Armijo backtracking.
pub fn minimize<O: Objective>(obj: &O, start: &ComplexMatrix, opts: &DescentOptions) -> Descent {
    let mut x = linalg::orthonormalize_columns(start);
    let (mut f, egrad) = evaluate(obj, &x, opts);
    let mut g = project_tangent(&x, &egrad);
    let mut gn = g.norm();
    let mut step = 1.0;
    let mut history = vec![f];
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        if gn <= opts.grad_tol {
            stop = StopReason::GradientTolerance;
            break;
        }
        // backtracking on the retracted steepest-descent curve
        let mut t = step;
        let mut accepted = None;
        for _ in 0..80 {
            let cand = retract(&x, &(&g * c64(-t, 0.0)));
            let fc = obj.value(&cand);
            let required = opts.armijo * t * gn * gn;
            let below_roundoff = required <= 8.0 * f64::EPSILON * f.abs().max(1e-300);
            if fc <= f - required || (below_roundoff && fc <= f) {
                accepted = Some((cand, t));
                break;
            }
            t *= 0.5;
        }
        let Some((next, t)) = accepted else {
            stop = StopReason::LineSearch;
            break;
        };
        iterations += 1;
        let (fn_, egrad_n) = evaluate(obj, &next, opts);
        let gnext = project_tangent(&next, &egrad_n);

        let s = &next - &x;
        let y = &gnext - project_tangent(&next, &g);
        let sy = real_inner(&s, &y);
        step = if sy > 0.0 {
            if iterations % 2 == 0 {
                s.norm_squared() / sy
            } else {
                sy / y.norm_squared()
            }
        } else {
            t * 4.0
        };
        step = step.clamp(1e-12, 1e6);

        x = next;
        f = fn_;
        g = gnext;
        gn = g.norm();
        history.push(f);
        let w = opts.stagnation_window;
        if history.len() > w && history[history.len() - 1 - w] - f <= 1e-15 * f.abs().max(1.0) {
            stop = StopReason::Stagnation;
            break;
        }
    }
    if iterations >= opts.max_iters && gn <= opts.grad_tol {
        stop = StopReason::GradientTolerance;
    }
    Descent {
        point: x,
        value: f,
        grad_norm: gn,
        iterations,
        stop,
    }
}
