//! Finite-difference discretization of `H = −Δ + V` with Dirichlet
//! truncation and the ground-state pair `(λ₀, φ₀)`.
//!
//! Full grids cover `[−L, L]^d` (d ≤ 3) with `n` nodes per axis, boundary
//! nodes pinned to zero. The radial path solves for `u(r)` on `[0, L]`:
//! in one dimension as the even restriction of the full grid (vertex grid,
//! `h = L/(n−1)`), for `d ≥ 2` with a cell-centred finite-volume scheme
//! (`h = L/n`, centres at `(i + 1/2)h`) whose symmetric form is the reduced
//! operator on `w = r^{(d−1)/2} u`; the zero-area face at the origin takes
//! care of the centrifugal singularity.
//!
//! All solvers work on the symmetric form `S = W^{−1/2} K W^{−1/2}` where
//! `W` holds the quadrature weights, so unit Euclidean vectors map to
//! `L²`-normalized samples.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;


use crate::error::{invalid, Error, Result};
use crate::kernels::sphere_area;
use crate::linalg::{dot, lobpcg_smallest, norm, scale, SymmetricOperator, Tridiagonal};
use crate::potentials::{PotentialKind, PotentialSpec, RadialProfile};

/// Largest `V h²` at the truncation edge before a resolution warning.
pub const EDGE_RESOLUTION_LIMIT: f64 = 1.0;

const MAX_FULL_NODES: usize = 8_000_000;

/// Extra inverse-iteration sweeps after the residual target is met. Each
/// sweep damps the remaining excited components by roughly the relative
/// shift distance, which is what resolves deep tail entries.
const TAIL_POLISH_SWEEPS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub dimension: usize,
    pub half_width: f64,
    pub points: usize,
    pub radial: bool,
}

impl GridSpec {
    pub fn full(dimension: usize, half_width: f64, points: usize) -> Result<Self> {
        let g = Self {
            dimension,
            half_width,
            points,
            radial: false,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn radial(dimension: usize, half_width: f64, points: usize) -> Result<Self> {
        let g = Self {
            dimension,
            half_width,
            points,
            radial: true,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(invalid("grid dimension must be positive"));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(invalid(format!(
                "grid half-width must be positive, got {}",
                self.half_width
            )));
        }
        if self.points < 16 {
            return Err(invalid(format!(
                "grid needs at least 16 points per axis, got {}",
                self.points
            )));
        }
        if !self.radial {
            if self.dimension > 3 {
                return Err(invalid(
                    "full grids support d ≤ 3; use the radial path for higher dimensions",
                ));
            }
            let total = (self.points as f64).powi(self.dimension as i32);
            if total > MAX_FULL_NODES as f64 {
                return Err(invalid(format!("grid has {total} nodes, limit {MAX_FULL_NODES}")));
            }
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        let n = self.points as f64;
        match (self.radial, self.dimension) {
            (false, _) => 2.0 * self.half_width / (n - 1.0),
            (true, 1) => self.half_width / (n - 1.0),
            (true, _) => self.half_width / n,
        }
    }

    pub fn node_count(&self) -> usize {
        if self.radial {
            self.points
        } else {
            self.points.pow(self.dimension as u32)
        }
    }

    /// Coordinates of node `index` (radial nodes lie on the first axis).
    pub fn coordinates(&self, index: usize) -> Vec<f64> {
        let h = self.spacing();
        let mut x = vec![0.0; self.dimension];
        if self.radial {
            x[0] = self.radius_of(index);
        } else {
            let mut rest = index;
            for axis in (0..self.dimension).rev() {
                x[axis] = h * ((rest % self.points) as f64 - 0.5 * (self.points - 1) as f64);
                rest /= self.points;
            }
        }
        x
    }

    /// Radial coordinate of a radial-grid node.
    pub fn radius_of(&self, index: usize) -> f64 {
        let h = self.spacing();
        if self.dimension == 1 {
            h * index as f64
        } else {
            h * (index as f64 + 0.5)
        }
    }

    /// Per-axis indices of a full-grid node.
    pub fn axis_indices(&self, index: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dimension];
        let mut rest = index;
        for axis in (0..self.dimension).rev() {
            idx[axis] = rest % self.points;
            rest /= self.points;
        }
        idx
    }

    /// `L²` quadrature weight of every node.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        if !self.radial {
            return vec![h.powi(self.dimension as i32); self.node_count()];
        }
        let omega = sphere_area(self.dimension);
        (0..self.points)
            .map(|i| omega * radial_cell_weight(self, i))
            .collect()
    }
}

/// Weight `W_i` of radial node `i`, without the sphere area.
fn radial_cell_weight(grid: &GridSpec, i: usize) -> f64 {
    let h = grid.spacing();
    let d = grid.dimension;
    if d == 1 {
        if i == 0 {
            0.5 * h
        } else if i + 1 == grid.points {
            0.0
        } else {
            h
        }
    } else {
        let lo = h * i as f64;
        let hi = h * (i + 1) as f64;
        (hi.powi(d as i32) - lo.powi(d as i32)) / d as f64
    }
}

#[derive(Debug, Clone)]
enum Operator {
    Tridiagonal(Tridiagonal),
    Stencil(Stencil),
}

/// Matrix-free `−Δ_h + V` on the interior nodes of a full grid.
#[derive(Debug, Clone)]
struct Stencil {
    dimension: usize,
    interior: usize,
    inv_h2: f64,
    potential: Vec<f64>,
}

impl SymmetricOperator for Stencil {
    fn dim(&self) -> usize {
        self.potential.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m = self.interior;
        let center = 2.0 * self.dimension as f64 * self.inv_h2;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (center + self.potential[i]) * x[i];
        }
        let mut stride = 1usize;
        for _ in 0..self.dimension {
            for i in 0..x.len() {
                let idx = (i / stride) % m;
                let mut nb = 0.0;
                if idx > 0 {
                    nb += x[i - stride];
                }
                if idx + 1 < m {
                    nb += x[i + stride];
                }
                y[i] -= self.inv_h2 * nb;
            }
            stride *= m;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let center = 2.0 * self.dimension as f64 * self.inv_h2;
        self.potential.iter().map(|v| center + v).collect()
    }
}

/// Symmetric discretized Hamiltonian over the free unknowns of a grid.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    grid: GridSpec,
    op: Operator,
    /// Grid node of each unknown.
    nodes: Vec<usize>,
    /// `√(weight)` of each unknown; `w = √W · u`.
    sqrt_weights: Vec<f64>,
    pub warnings: Vec<String>,
}

impl SymmetricOperator for Hamiltonian {
    fn dim(&self) -> usize {
        self.nodes.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match &self.op {
            Operator::Tridiagonal(t) => t.apply(x, y),
            Operator::Stencil(s) => s.apply(x, y),
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        match &self.op {
            Operator::Tridiagonal(t) => t.diagonal(),
            Operator::Stencil(s) => s.diagonal(),
        }
    }
}

impl Hamiltonian {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Grid node carrying unknown `k`.
    pub fn node_of(&self, k: usize) -> usize {
        self.nodes[k]
    }

    /// Dense copy of the symmetric matrix, row-major. Intended for small
    /// grids in diagnostics and tests.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut dense = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            for i in 0..n {
                dense[i * n + j] = col[i];
            }
            e[j] = 0.0;
        }
        dense
    }

    /// Maps node samples `u` to symmetric-form unknowns `w`.
    pub fn to_unknowns(&self, phi: &[f64]) -> Vec<f64> {
        self.nodes
            .iter()
            .zip(&self.sqrt_weights)
            .map(|(&node, s)| phi[node] * s)
            .collect()
    }

    /// Maps unknowns back to node samples (pinned nodes are zero).
    pub fn to_nodes(&self, w: &[f64]) -> Vec<f64> {
        let mut phi = vec![0.0; self.grid.node_count()];
        for ((&node, s), v) in self.nodes.iter().zip(&self.sqrt_weights).zip(w) {
            phi[node] = v / s;
        }
        phi
    }

    fn tridiagonal(&self) -> Option<&Tridiagonal> {
        match &self.op {
            Operator::Tridiagonal(t) => Some(t),
            Operator::Stencil(_) => None,
        }
    }
}

/// Second-order finite-difference `−Δ + V` with Dirichlet truncation.
pub fn assemble_hamiltonian(grid: &GridSpec, potential: &PotentialSpec) -> Result<Hamiltonian> {
    grid.validate()?;
    if potential.dimension() != grid.dimension {
        return Err(Error::DimensionMismatch {
            expected: grid.dimension,
            got: potential.dimension(),
        });
    }
    if grid.radial {
        let profile = potential.radial_profile().ok_or_else(|| {
            invalid("the radial path needs a radial potential V(x) = g(|x|)")
        })?;
        return Ok(assemble_radial(grid, &profile));
    }
    let n = grid.points;
    let d = grid.dimension;
    let h = grid.spacing();
    let m = n - 2;
    let count = m.pow(d as u32);
    let mut nodes = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count);
    let mut edge_max = 0.0f64;
    let mut idx = vec![0usize; d];
    for k in 0..count {
        let mut rest = k;
        for axis in (0..d).rev() {
            idx[axis] = rest % m + 1;
            rest /= m;
        }
        let node = idx.iter().fold(0usize, |acc, i| acc * n + i);
        let x = grid.coordinates(node);
        let v = potential.eval(&x)?;
        if !v.is_finite() {
            return Err(Error::Domain(format!("potential not finite at {x:?}")));
        }
        if idx.iter().any(|&i| i == 1 || i == n - 2) {
            edge_max = edge_max.max(v);
        }
        nodes.push(node);
        values.push(v);
    }
    let mut warnings = Vec::new();
    resolution_warning(edge_max, h, &mut warnings);
    let sqrt_w = h.powf(0.5 * d as f64);
    let op = if d == 1 {
        let inv_h2 = 1.0 / (h * h);
        Operator::Tridiagonal(Tridiagonal {
            diag: values.iter().map(|v| 2.0 * inv_h2 + v).collect(),
            off: vec![-inv_h2; count - 1],
        })
    } else {
        Operator::Stencil(Stencil {
            dimension: d,
            interior: m,
            inv_h2: 1.0 / (h * h),
            potential: values,
        })
    };
    Ok(Hamiltonian {
        grid: *grid,
        op,
        nodes,
        sqrt_weights: vec![sqrt_w; count],
        warnings,
    })
}

fn resolution_warning(edge_value: f64, h: f64, warnings: &mut Vec<String>) {
    let stiffness = edge_value * h * h;
    if stiffness > EDGE_RESOLUTION_LIMIT {
        warnings.push(format!(
            "mesh too coarse for the potential at the domain edge: V·h² = {stiffness:.3e} > {EDGE_RESOLUTION_LIMIT}"
        ));
    }
}

fn assemble_radial(grid: &GridSpec, g: &RadialProfile) -> Hamiltonian {
    let n = grid.points;
    let d = grid.dimension;
    let h = grid.spacing();
    let unknowns = if d == 1 { n - 1 } else { n };
    let weights: Vec<f64> = (0..unknowns).map(|i| radial_cell_weight(grid, i)).collect();
    let mut stiff_diag = vec![0.0; unknowns];
    let mut stiff_off = vec![0.0; unknowns - 1];
    if d == 1 {
        // Edges (i, i+1) for i < n−1; node n−1 is pinned at zero.
        for (i, s) in stiff_diag.iter_mut().enumerate() {
            *s = if i == 0 { 1.0 / h } else { 2.0 / h };
        }
        for v in stiff_off.iter_mut() {
            *v = -1.0 / h;
        }
    } else {
        let area = |face: usize| (h * face as f64).powi(d as i32 - 1);
        for i in 0..n {
            let inner = if i == 0 { 0.0 } else { area(i) };
            let outer = if i + 1 == n { 2.0 * area(n) } else { area(i + 1) };
            stiff_diag[i] = (inner + outer) / h;
            if i + 1 < n {
                stiff_off[i] = -area(i + 1) / h;
            }
        }
    }
    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let potential: Vec<f64> = (0..unknowns).map(|i| g.eval(grid.radius_of(i))).collect();
    let diag = (0..unknowns)
        .map(|i| stiff_diag[i] / weights[i] + potential[i])
        .collect();
    let off = (0..unknowns - 1)
        .map(|i| stiff_off[i] / (sqrt_w[i] * sqrt_w[i + 1]))
        .collect();
    let omega = sphere_area(d).sqrt();
    let mut warnings = Vec::new();
    resolution_warning(potential[unknowns - 1], h, &mut warnings);
    Hamiltonian {
        grid: *grid,
        op: Operator::Tridiagonal(Tridiagonal { diag, off }),
        nodes: (0..unknowns).collect(),
        sqrt_weights: sqrt_w.iter().map(|s| s * omega).collect(),
        warnings,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on `‖Hφ − λφ‖ / ‖φ‖` in the symmetric form.
    pub tol: f64,
    pub max_iter: usize,
    /// Also compute the second eigenvalue (spectral-gap diagnostic).
    pub compute_gap: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 50_000,
            compute_gap: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub grid: GridSpec,
    pub lambda0: f64,
    /// Samples of `φ₀` at every grid node, `L²`-normalized.
    pub phi0: Vec<f64>,
    pub residual: f64,
    /// Second eigenvalue of the discrete operator, when computed.
    pub lambda1: Option<f64>,
    pub potential: PotentialSpec,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl GroundState {
    pub fn gap(&self) -> Option<f64> {
        self.lambda1.map(|l| l - self.lambda0)
    }

    pub fn max_value(&self) -> f64 {
        self.phi0.iter().fold(0.0f64, |m, v| m.max(*v))
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        self.grid.coordinates(index)
    }

    /// Absolute level below which samples are dominated by solver error.
    pub fn noise_floor(&self) -> f64 {
        let resolution = if self.grid.radial || self.grid.dimension == 1 {
            f64::EPSILON
        } else {
            self.residual.max(f64::EPSILON)
        };
        100.0 * resolution * self.max_value()
    }

    /// `Σ φ₀² w` over the grid.
    pub fn mass(&self) -> f64 {
        self.phi0
            .iter()
            .zip(self.grid.weights())
            .map(|(p, w)| p * p * w)
            .sum()
    }
}

/// Smallest eigenpair of the truncated operator.
pub fn solve_ground_state(
    grid: &GridSpec,
    potential: &PotentialSpec,
    opts: &SolverOptions,
) -> Result<GroundState> {
    let ham = assemble_hamiltonian(grid, potential)?;
    if !(opts.tol > 0.0) {
        return Err(invalid("solver tolerance must be positive"));
    }
    let (pair, second) = match ham.tridiagonal() {
        Some(t) => {
            let pair = tridiagonal_ground(t, opts)?;
            let second = if opts.compute_gap {
                tridiagonal_second(t, &pair.vector)
            } else {
                None
            };
            (pair, second)
        }
        None => {
            let init: Vec<f64> = (0..ham.dim())
                .map(|k| {
                    let x = grid.coordinates(ham.node_of(k));
                    1.0 / (1.0 + potential.eval_unchecked(&x))
                })
                .collect();
            let pair = lobpcg_smallest(&ham, init, &[], opts.tol, opts.max_iter);
            if !pair.converged {
                return Err(Error::NoConvergence {
                    iterations: pair.iterations,
                    residual: pair.residual,
                });
            }
            let second = if opts.compute_gap {
                let ramp: Vec<f64> = (0..ham.dim())
                    .map(|k| {
                        let x = grid.coordinates(ham.node_of(k));
                        x[0] / (1.0 + potential.eval_unchecked(&x))
                    })
                    .collect();
                let p2 = lobpcg_smallest(
                    &ham,
                    ramp,
                    core::slice::from_ref(&pair.vector),
                    opts.tol.max(1e-6),
                    opts.max_iter,
                );
                p2.converged.then_some(p2.value)
            } else {
                None
            };
            (pair, second)
        }
    };
    finish(ham, potential.clone(), pair.value, pair.vector, pair.iterations, second)
}

/// Ground state of `−Δ + g(|x|)` in `ℝ^d` through the radial reduction.
pub fn solve_radial_ground_state(
    g: &RadialProfile,
    dimension: usize,
    grid: &GridSpec,
    opts: &SolverOptions,
) -> Result<GroundState> {
    if !grid.radial || grid.dimension != dimension {
        return Err(invalid("solve_radial_ground_state needs a radial grid of matching dimension"));
    }
    let potential = PotentialSpec::new(PotentialKind::Radial(g.clone()), dimension)?;
    solve_ground_state(grid, &potential, opts)
}

fn finish(
    ham: Hamiltonian,
    potential: PotentialSpec,
    lambda0: f64,
    mut w: Vec<f64>,
    iterations: usize,
    lambda1: Option<f64>,
) -> Result<GroundState> {
    if w.iter().sum::<f64>() < 0.0 {
        scale(-1.0, &mut w);
    }
    let nw = norm(&w);
    scale(1.0 / nw, &mut w);
    let mut hw = vec![0.0; w.len()];
    ham.apply(&w, &mut hw);
    let residual = hw
        .iter()
        .zip(&w)
        .map(|(a, b)| (a - lambda0 * b) * (a - lambda0 * b))
        .sum::<f64>()
        .sqrt();
    let phi0 = ham.to_nodes(&w);
    let mut gs = GroundState {
        grid: ham.grid,
        lambda0,
        phi0,
        residual,
        lambda1,
        potential,
        iterations,
        warnings: ham.warnings.clone(),
    };
    let floor = gs.noise_floor();
    let mut unresolved = 0usize;
    for k in 0..ham.dim() {
        let v = gs.phi0[ham.node_of(k)];
        if v < -floor {
            return Err(Error::Discretization(format!(
                "ground-state sample {v:e} at node {} is negative beyond solver resolution {floor:e}",
                ham.node_of(k)
            )));
        }
        if v <= 0.0 {
            unresolved += 1;
        }
    }
    if unresolved > 0 {
        gs.warnings.push(format!(
            "{unresolved} interior samples are not positive (below solver resolution {floor:e})"
        ));
    }
    if lambda0 <= 0.0 {
        return Err(Error::Discretization(format!("λ₀ = {lambda0} is not positive")));
    }
    Ok(gs)
}

fn rayleigh(t: &Tridiagonal, x: &[f64], tx: &mut [f64]) -> f64 {
    t.apply(x, tx);
    dot(x, tx) / dot(x, x)
}

/// Inverse iteration: unshifted until the Rayleigh quotient settles, then
/// shifted just below it; a few extra sweeps after the residual target
/// polish the exponentially small tail entries.
fn tridiagonal_ground(t: &Tridiagonal, opts: &SolverOptions) -> Result<crate::linalg::Eigenpair> {
    let n = t.diag.len();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = vec![0.0; n];
    let mut tx = vec![0.0; n];
    let mut rq = rayleigh(t, &x, &mut tx);
    let mut iterations = 0;
    for _ in 0..200 {
        t.solve_shifted(0.0, &x, &mut y);
        let ny = norm(&y);
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
        iterations += 1;
        let next = rayleigh(t, &x, &mut tx);
        let settled = (next - rq).abs() < 1e-4 * next.abs();
        rq = next;
        if settled {
            break;
        }
    }
    let sigma = rq - 1e-3 * rq.abs();
    let mut residual = f64::INFINITY;
    let mut polish = 0;
    while iterations < opts.max_iter {
        t.solve_shifted(sigma, &x, &mut y);
        let ny = norm(&y);
        let sign = if dot(&x, &y) < 0.0 { -1.0 } else { 1.0 };
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = sign * yi / ny;
        }
        iterations += 1;
        rq = rayleigh(t, &x, &mut tx);
        residual = tx
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - rq * b) * (a - rq * b))
            .sum::<f64>()
            .sqrt();
        if residual <= opts.tol {
            polish += 1;
            if polish >= TAIL_POLISH_SWEEPS {
                return Ok(crate::linalg::Eigenpair {
                    value: rq,
                    vector: x,
                    residual,
                    iterations,
                    converged: true,
                });
            }
        }
    }
    Err(Error::NoConvergence {
        iterations,
        residual,
    })
}

/// Second eigenvalue by inverse iteration deflated against `ground`.
fn tridiagonal_second(t: &Tridiagonal, ground: &[f64]) -> Option<f64> {
    let n = t.diag.len();
    let mut x: Vec<f64> = (0..n).map(|i| i as f64 - 0.5 * n as f64).collect();
    let deflate = |v: &mut Vec<f64>| {
        let a = dot(v, ground) / dot(ground, ground);
        for (vi, gi) in v.iter_mut().zip(ground) {
            *vi -= a * gi;
        }
    };
    deflate(&mut x);
    let mut y = vec![0.0; n];
    let mut tx = vec![0.0; n];
    let mut rq = f64::NAN;
    for _ in 0..500 {
        t.solve_shifted(0.0, &x, &mut y);
        deflate(&mut y);
        let ny = norm(&y);
        if ny == 0.0 || !ny.is_finite() {
            return None;
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
        let next = rayleigh(t, &x, &mut tx);
        if (next - rq).abs() < 1e-13 * next.abs() {
            return Some(next);
        }
        rq = next;
    }
    Some(rq)
}

/// `‖Hφ₀ − λ₀φ₀‖ / ‖φ₀‖` recomputed on the stored grid.
pub fn eigen_residual(gs: &GroundState) -> Result<f64> {
    let ham = assemble_hamiltonian(&gs.grid, &gs.potential)?;
    let w = ham.to_unknowns(&gs.phi0);
    let mut hw = vec![0.0; w.len()];
    ham.apply(&w, &mut hw);
    let r = hw
        .iter()
        .zip(&w)
        .map(|(a, b)| (a - gs.lambda0 * b) * (a - gs.lambda0 * b))
        .sum::<f64>()
        .sqrt();
    Ok(r / norm(&w))
}

/// Compares a one-dimensional radial solution with the full-grid solution
/// on matching nodes (eigenvalue and samples). Returns the largest
/// discrepancy.
pub fn check_radial_consistency(radial: &GroundState, full: &GroundState, tol: f64) -> Result<f64> {
    if !radial.grid.radial || full.grid.radial {
        return Err(invalid("expected one radial and one full-grid ground state"));
    }
    let mut worst = (radial.lambda0 - full.lambda0).abs();
    if radial.grid.dimension == 1 && full.grid.dimension == 1 {
        let h = radial.grid.spacing();
        for (i, phi) in full.phi0.iter().enumerate() {
            let x = full.grid.coordinates(i)[0].abs();
            let k = (x / h).round();
            if (x - k * h).abs() <= 1e-9 * h && (k as usize) < radial.phi0.len() {
                worst = worst.max((radial.phi0[k as usize] - phi).abs());
            }
        }
    }
    if worst > tol {
        return Err(Error::Consistency {
            difference: worst,
            tolerance: tol,
        });
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::full(1, 10.0, 15).is_err());
        assert!(GridSpec::full(4, 5.0, 16).is_err());
        assert!(GridSpec::radial(4, 5.0, 16).is_ok());
        assert!(GridSpec::full(1, -1.0, 100).is_err());
        let g = GridSpec::full(1, 10.0, 2001).unwrap();
        assert!((g.spacing() - 0.01).abs() < 1e-15);
        assert_eq!(g.coordinates(1000), vec![0.0]);
    }

    #[test]
    fn operator_is_symmetric() {
        for (grid, v) in [
            (GridSpec::full(2, 3.0, 18).unwrap(), PotentialSpec::anisotropic(vec![1.0, 3.0]).unwrap()),
            (GridSpec::radial(2, 3.0, 20).unwrap(), PotentialSpec::power(1.0, 2).unwrap()),
            (GridSpec::radial(1, 3.0, 20).unwrap(), PotentialSpec::power(1.0, 1).unwrap()),
        ] {
            let h = assemble_hamiltonian(&grid, &v).unwrap();
            let n = h.dim();
            let a = h.to_dense();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(a[i * n + j], a[j * n + i]);
                }
            }
        }
    }

    #[test]
    fn constant_shift_moves_rayleigh_quotients() {
        let grid = GridSpec::full(2, 4.0, 20).unwrap();
        let base = PotentialSpec::power(1.0, 2).unwrap();
        let shifted = PotentialSpec::shifted(base.clone(), 2.5).unwrap();
        let h0 = assemble_hamiltonian(&grid, &base).unwrap();
        let h1 = assemble_hamiltonian(&grid, &shifted).unwrap();
        let x: Vec<f64> = (0..h0.dim()).map(|i| ((i * 37) % 11) as f64 - 4.0).collect();
        let mut y0 = vec![0.0; x.len()];
        let mut y1 = vec![0.0; x.len()];
        h0.apply(&x, &mut y0);
        h1.apply(&x, &mut y1);
        let q0 = dot(&x, &y0) / dot(&x, &x);
        let q1 = dot(&x, &y1) / dot(&x, &x);
        assert!((q1 - q0 - 2.5).abs() < 1e-12);
    }

    #[test]
    fn coarse_mesh_warns() {
        let grid = GridSpec::full(1, 10.0, 20).unwrap();
        let v = PotentialSpec::power(2.0, 1).unwrap();
        let h = assemble_hamiltonian(&grid, &v).unwrap();
        assert_eq!(h.warnings.len(), 1);
    }

    #[test]
    fn radial_needs_radial_potential() {
        let grid = GridSpec::radial(2, 4.0, 40).unwrap();
        let v = PotentialSpec::anisotropic(vec![1.0, 2.0]).unwrap();
        assert!(assemble_hamiltonian(&grid, &v).is_err());
    }

    #[test]
    fn harmonic_one_dimension() {
        let grid = GridSpec::full(1, 10.0, 2000).unwrap();
        let v = PotentialSpec::power(1.0, 1).unwrap();
        let gs = solve_ground_state(&grid, &v, &SolverOptions::default()).unwrap();
        assert!((gs.lambda0 - 1.0).abs() < 1e-4, "{}", gs.lambda0);
        assert!(gs.residual <= 1e-8);
        assert!((gs.mass() - 1.0).abs() < 1e-10);
        let gap = gs.gap().unwrap();
        assert!((gap - 2.0).abs() < 1e-3, "{gap}");
        assert!(gs.phi0[1..1999].iter().all(|p| *p > 0.0));
    }

    #[test]
    fn residual_recomputation_and_sensitivity() {
        let grid = GridSpec::full(1, 8.0, 801).unwrap();
        let v = PotentialSpec::power(1.0, 1).unwrap();
        let mut gs = solve_ground_state(&grid, &v, &SolverOptions::default()).unwrap();
        let r = eigen_residual(&gs).unwrap();
        assert!(r <= 1e-8, "{r}");
        for (i, p) in gs.phi0.iter_mut().enumerate() {
            *p += 1e-3 * (((i * 7919) % 13) as f64 / 13.0 - 0.5);
        }
        assert!(eigen_residual(&gs).unwrap() > 1e-4);
    }
}
