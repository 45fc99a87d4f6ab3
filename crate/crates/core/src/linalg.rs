//! Small dense/sparse kernels shared by the spectral solvers.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;


pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn scale(alpha: f64, x: &mut [f64]) {
    for v in x {
        *v *= alpha;
    }
}

/// Symmetric operator applied matrix-free.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
}

/// Symmetric tridiagonal matrix: `diag[i]`, `off[i]` couples `i` and `i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymmetricOperator for Tridiagonal {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.diag.clone()
    }
}

impl Tridiagonal {
    /// Solves `(T − σI) x = b` by Gaussian elimination without pivoting.
    /// Vanishing pivots are nudged to keep the solve finite, which is
    /// harmless for inverse iteration.
    pub fn solve_shifted(&self, sigma: f64, b: &[f64], x: &mut [f64]) {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let tiny = f64::EPSILON * self.diag.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut pivot = self.diag[0] - sigma;
        if pivot.abs() < tiny {
            pivot = tiny;
        }
        x[0] = b[0] / pivot;
        for i in 1..n {
            c[i - 1] = self.off[i - 1] / pivot;
            pivot = self.diag[i] - sigma - self.off[i - 1] * c[i - 1];
            if pivot.abs() < tiny {
                pivot = tiny;
            }
            x[i] = (b[i] - self.off[i - 1] * x[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
    }
}

/// Eigen-decomposition of a small dense symmetric matrix (row-major) by
/// cyclic Jacobi rotations. Eigenvalues ascending; eigenvector `k` is
/// column `k` of the returned row-major matrix.
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|i, j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + col] = v[row * n + src];
        }
    }
    (values, vectors)
}

/// Outcome of an iterative smallest-eigenpair solve.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn project_out(v: &mut [f64], constraints: &[Vec<f64>]) {
    for c in constraints {
        let a = dot(v, c);
        axpy(-a, c, v);
    }
}

/// Orthonormalizes `v` against `basis` (twice, for stability). Returns
/// false when `v` is numerically dependent on the basis.
fn orthonormalize_against(v: &mut [f64], basis: &[Vec<f64>]) -> bool {
    let before = norm(v);
    if before == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for b in basis {
            let a = dot(v, b);
            axpy(-a, b, v);
        }
    }
    let after = norm(v);
    if after <= 1e-10 * before {
        return false;
    }
    scale(1.0 / after, v);
    true
}

/// Smallest eigenpair of a symmetric operator by single-vector LOBPCG with
/// a diagonal preconditioner, restricted to the orthogonal complement of
/// the (orthonormal) `constraints`. `tol` bounds `‖Ax − λx‖` for unit `x`.
pub fn lobpcg_smallest<A: SymmetricOperator>(
    op: &A,
    initial: Vec<f64>,
    constraints: &[Vec<f64>],
    tol: f64,
    max_iter: usize,
) -> Eigenpair {
    let n = op.dim();
    let inv_diag: Vec<f64> = op
        .diagonal()
        .iter()
        .map(|d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = initial;
    project_out(&mut x, constraints);
    let nx = norm(&x);
    scale(1.0 / nx, &mut x);
    let mut ax = vec![0.0; n];
    op.apply(&x, &mut ax);
    let mut lambda = dot(&x, &ax);
    let mut p: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut r = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    while iterations < max_iter {
        for i in 0..n {
            r[i] = ax[i] - lambda * x[i];
        }
        residual = norm(&r);
        if residual <= tol {
            return Eigenpair {
                value: lambda,
                vector: x,
                residual,
                iterations,
                converged: true,
            };
        }
        iterations += 1;

        let mut w: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
        project_out(&mut w, constraints);

        let mut basis: Vec<Vec<f64>> = vec![x.clone()];
        let mut images: Vec<Vec<f64>> = vec![ax.clone()];
        if orthonormalize_against(&mut w, &basis) {
            let mut aw = vec![0.0; n];
            op.apply(&w, &mut aw);
            basis.push(w);
            images.push(aw);
        }
        if let Some((mut pv, _)) = p.take() {
            project_out(&mut pv, constraints);
            if orthonormalize_against(&mut pv, &basis) {
                let mut apv = vec![0.0; n];
                op.apply(&pv, &mut apv);
                basis.push(pv);
                images.push(apv);
            }
        }
        let k = basis.len();
        if k == 1 {
            break;
        }
        let mut gram = vec![0.0; k * k];
        for i in 0..k {
            for j in i..k {
                let g = 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i]));
                gram[i * k + j] = g;
                gram[j * k + i] = g;
            }
        }
        let (values, vectors) = symmetric_eigen(&gram, k);
        let coef: Vec<f64> = (0..k).map(|i| vectors[i * k]).collect();

        let mut new_x = vec![0.0; n];
        let mut new_ax = vec![0.0; n];
        let mut new_p = vec![0.0; n];
        let mut new_ap = vec![0.0; n];
        for i in 0..k {
            axpy(coef[i], &basis[i], &mut new_x);
            axpy(coef[i], &images[i], &mut new_ax);
            if i > 0 {
                axpy(coef[i], &basis[i], &mut new_p);
                axpy(coef[i], &images[i], &mut new_ap);
            }
        }
        let nn = norm(&new_x);
        scale(1.0 / nn, &mut new_x);
        scale(1.0 / nn, &mut new_ax);
        x = new_x;
        ax = new_ax;
        if iterations % 25 == 0 {
            project_out(&mut x, constraints);
            let nx = norm(&x);
            scale(1.0 / nx, &mut x);
            op.apply(&x, &mut ax);
        }
        lambda = if iterations % 25 == 0 { dot(&x, &ax) } else { values[0] };
        p = Some((new_p, new_ap));
    }
    for i in 0..n {
        r[i] = ax[i] - lambda * x[i];
    }
    residual = residual.min(norm(&r));
    Eigenpair {
        value: lambda,
        vector: x,
        residual,
        iterations,
        converged: residual <= tol,
    }
}
