//! Dense BFGS with backtracking.
//!
//! A trial step is accepted under the Armijo condition, or, once function
//! differences sink into round-off, under the approximate Wolfe condition
//! of Hager and Zhang: `f(x+αp) ≤ f(x) + ε|f(x)|` together with a
//! directional derivative in `[σ·φ'(0), (2δ − 1)·φ'(0)]`.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when `‖∇f‖ < grad_tol`.
    pub grad_tol: f64,
    /// Sufficient-decrease constant.
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            max_iter: 500,
            grad_tol: 1e-8,
            armijo: 1e-4,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimises `f`, which returns `(value, gradient)`. A closure returning a
/// non-finite value is treated as a rejected trial point.
pub fn minimize<F>(mut f: F, x0: DVector<f64>, opts: &BfgsOptions) -> BfgsResult
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let dim = x0.len();
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut h = DMatrix::<f64>::identity(dim, dim);
    let mut first = true;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if g.norm() < opts.grad_tol {
            break;
        }
        iterations += 1;
        let mut p = -(&h * &g);
        let mut slope = g.dot(&p);
        if slope >= 0.0 {
            // lost descent: restart from steepest descent
            h = DMatrix::identity(dim, dim);
            p = -g.clone();
            slope = -g.norm_squared();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let xn = &x + &p * step;
            let (fn_, gn) = f(&xn);
            let armijo = fn_ <= fx + opts.armijo * step * slope;
            let approx_wolfe = {
                let dslope = gn.dot(&p);
                fn_ <= fx + 1e-12 * fx.abs() && dslope <= (2.0 * 0.1 - 1.0) * slope && dslope >= 0.9 * slope
            };
            if fn_.is_finite() && (armijo || approx_wolfe) {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            if first {
                break;
            }
            // retry once from a fresh Hessian before giving up
            h = DMatrix::identity(dim, dim);
            first = true;
            continue;
        };
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            if first {
                h = DMatrix::identity(dim, dim) * (sy / y.norm_squared());
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
            h += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            first = false;
        }
        x = xn;
        fx = fn_;
        g = gn;
    }
    let grad_norm = g.norm();
    BfgsResult {
        x,
        value: fx,
        grad_norm,
        iterations,
        converged: grad_norm < opts.grad_tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let res = minimize(
            |x| {
                let (a, b) = (x[0], x[1]);
                let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
                let g = DVector::from_vec(vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)]);
                (v, g)
            },
            DVector::from_vec(vec![-1.2, 1.0]),
            &BfgsOptions::default(),
        );
        assert!(res.converged, "{res:?}");
        assert!((res.x[0] - 1.0).abs() < 1e-6 && (res.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn quadratic_in_few_iterations() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let res = minimize(
            |x| (0.5 * x.dot(&(&a * x)) - b.dot(x), &a * x - &b),
            DVector::zeros(3),
            &BfgsOptions::default(),
        );
        let exact = a.clone().lu().solve(&b).unwrap();
        assert!((res.x - exact).amax() < 1e-8);
        assert!(res.iterations < 20);
    }
}
