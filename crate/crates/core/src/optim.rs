//! Newton maximization over a box `x_j >= 0` with an active set.
//!
//! Each iteration solves `(-H + lambda D) d = g` on the free coordinates,
//! with `lambda` raised from zero only when `-H` is not positive definite.
//! The step is clipped so no bounded coordinate goes negative and halved
//! until the objective does not decrease. A coordinate clipped to (or ending
//! within `snap` of) zero is fixed there and the remaining coordinates are
//! optimized as a sub-problem. At a stationary point of the sub-problem a
//! fixed coordinate whose gradient points into the interior is released.

use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Objective to maximize. Values outside the feasible region are `None`.
pub trait Objective<F: Scalar> {
    fn value(&self, x: &[F]) -> Option<F>;
    fn value_grad_hess(&self, x: &[F]) -> Option<(F, Vec<F>, Matrix<F>)>;
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions<F> {
    pub max_iterations: usize,
    pub gradient_tolerance: F,
    pub step_halving_limit: usize,
    pub snap: F,
}

#[derive(Debug, Clone)]
pub struct NewtonResult<F> {
    pub x: Vec<F>,
    pub value: F,
    pub gradient: Vec<F>,
    pub hessian: Matrix<F>,
    /// Coordinates held at exactly zero.
    pub fixed: Vec<bool>,
    pub converged: bool,
    pub iterations: usize,
    /// Objective value after each accepted step, starting point first.
    pub trace: Vec<F>,
}

/// Maximizes `objective` from `x0`. `bounded[j]` marks coordinates
/// constrained to `x_j >= 0`; others are only subject to the objective's own
/// feasibility region. Returns `None` if `x0` is infeasible.
pub fn maximize<F: Scalar, O: Objective<F>>(
    objective: &O,
    x0: &[F],
    bounded: &[bool],
    options: &NewtonOptions<F>,
) -> Option<NewtonResult<F>> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fixed = vec![false; n];
    for j in 0..n {
        if bounded[j] && x[j] <= F::zero() {
            x[j] = F::zero();
            fixed[j] = true;
        }
    }
    let (mut f, mut g, mut h) = objective.value_grad_hess(&x)?;
    let mut trace = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    let mut releases = 0;
    let tol = options.gradient_tolerance;

    while iterations < options.max_iterations {
        let free: Vec<usize> = (0..n).filter(|&j| !fixed[j]).collect();
        let gmax = free.iter().fold(F::zero(), |m, &j| m.max(g[j].abs()));
        if gmax < tol {
            // Release the fixed coordinate with the largest inward gradient.
            let candidate = (0..n)
                .filter(|&j| fixed[j] && g[j] > tol)
                .max_by(|&a, &b| g[a].partial_cmp(&g[b]).unwrap_or(std::cmp::Ordering::Equal));
            match candidate {
                Some(j) if releases < 2 * n => {
                    fixed[j] = false;
                    releases += 1;
                    continue;
                }
                _ => {
                    converged = true;
                    break;
                }
            }
        }
        iterations += 1;

        let Some(dir) = newton_direction(&h, &g, &free) else {
            break;
        };
        let mut d = vec![F::zero(); n];
        for (a, &j) in free.iter().enumerate() {
            d[j] = dir[a];
        }

        // Largest step keeping bounded coordinates nonnegative.
        let mut t_max = F::one();
        let mut blocking = None;
        for &j in &free {
            if bounded[j] && d[j] < F::zero() {
                let t = x[j] / -d[j];
                if t < t_max {
                    t_max = t;
                    blocking = Some(j);
                }
            }
        }

        let mut t = t_max;
        let mut accepted = None;
        let slack = F::lit(1e-12) * (F::one() + f.abs());
        for _ in 0..=options.step_halving_limit {
            let mut cand: Vec<F> = x.iter().zip(&d).map(|(&xi, &di)| xi + t * di).collect();
            let clipped = t == t_max && blocking.is_some();
            if let (true, Some(j)) = (clipped, blocking) {
                cand[j] = F::zero();
            }
            for j in 0..n {
                if bounded[j] && cand[j] < F::zero() {
                    cand[j] = F::zero();
                }
            }
            if let Some(v) = objective.value(&cand) {
                if v >= f - slack {
                    accepted = Some((cand, clipped));
                    break;
                }
            }
            t = t / F::lit(2.0);
        }
        let Some((mut cand, clipped)) = accepted else {
            break;
        };
        if clipped {
            if let Some(j) = blocking {
                fixed[j] = true;
            }
        }
        for j in 0..n {
            if bounded[j] && !fixed[j] && cand[j] < options.snap {
                cand[j] = F::zero();
                fixed[j] = true;
            }
        }
        let Some((nf, ng, nh)) = objective.value_grad_hess(&cand) else {
            break;
        };
        x = cand;
        f = nf;
        g = ng;
        h = nh;
        trace.push(f);
    }

    Some(NewtonResult {
        x,
        value: f,
        gradient: g,
        hessian: h,
        fixed,
        converged,
        iterations,
        trace,
    })
}

/// Solves `(-H_ff + lambda diag) d = g_f`, damping until the system is
/// positive definite.
fn newton_direction<F: Scalar>(h: &Matrix<F>, g: &[F], free: &[usize]) -> Option<Vec<F>> {
    if free.is_empty() {
        return None;
    }
    let neg = h.select(free).scaled(-F::one());
    let gf: Vec<F> = free.iter().map(|&j| g[j]).collect();
    if let Some(d) = neg.solve_spd(&gf) {
        return Some(d);
    }
    let scale = neg
        .diagonal()
        .iter()
        .fold(F::zero(), |m, v| m.max(v.abs()))
        .max(F::lit(1e-12));
    let mut lambda = F::lit(1e-6) * scale;
    for _ in 0..40 {
        let mut damped = neg.clone();
        for i in 0..free.len() {
            damped[(i, i)] = damped[(i, i)] + lambda;
        }
        if let Some(d) = damped.solve_spd(&gf) {
            return Some(d);
        }
        lambda = lambda * F::lit(10.0);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Concave quadratic -(x - a)' Q (x - a) / 2.
    struct Quad {
        a: Vec<f64>,
        q: Matrix,
    }

    impl Objective<f64> for Quad {
        fn value(&self, x: &[f64]) -> Option<f64> {
            let d: Vec<f64> = x.iter().zip(&self.a).map(|(x, a)| x - a).collect();
            let qd = self.q.mul_vec(&d);
            Some(-0.5 * d.iter().zip(&qd).map(|(a, b)| a * b).sum::<f64>())
        }
        fn value_grad_hess(&self, x: &[f64]) -> Option<(f64, Vec<f64>, Matrix)> {
            let d: Vec<f64> = x.iter().zip(&self.a).map(|(x, a)| x - a).collect();
            let g: Vec<f64> = self.q.mul_vec(&d).iter().map(|v| -v).collect();
            Some((self.value(x)?, g, self.q.scaled(-1.0)))
        }
    }

    fn opts() -> NewtonOptions<f64> {
        NewtonOptions {
            max_iterations: 100,
            gradient_tolerance: 1e-10,
            step_halving_limit: 30,
            snap: 1e-8,
        }
    }

    #[test]
    fn interior_optimum_in_one_step() {
        let q = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        let obj = Quad { a: vec![1.0, 2.0], q };
        let r = maximize(&obj, &[0.3, 0.3], &[true, true], &opts()).unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 2);
        assert!((r.x[0] - 1.0).abs() < 1e-12 && (r.x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_optimum_fixed_at_zero() {
        let q = Matrix::identity(2);
        let obj = Quad { a: vec![1.0, -2.0], q };
        let r = maximize(&obj, &[0.5, 0.5], &[true, true], &opts()).unwrap();
        assert!(r.converged);
        assert_eq!(r.x[1], 0.0);
        assert!(r.fixed[1] && !r.fixed[0]);
        assert!((r.x[0] - 1.0).abs() < 1e-12);
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn released_when_gradient_points_inward() {
        // Correlated quadratic: a first step pins x1 at 0, but the true
        // constrained optimum is interior.
        let q = Matrix::from_rows(&[vec![1.0, 0.9], vec![0.9, 1.0]]);
        let obj = Quad { a: vec![1.0, 0.05], q };
        let r = maximize(&obj, &[3.0, 0.01], &[true, true], &opts()).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-9 && (r.x[1] - 0.05).abs() < 1e-9);
    }

    #[test]
    fn unbounded_coordinate_can_go_negative() {
        let obj = Quad { a: vec![-3.0], q: Matrix::identity(1) };
        let r = maximize(&obj, &[1.0], &[false], &opts()).unwrap();
        assert!((r.x[0] + 3.0).abs() < 1e-12);
    }
}
