//! Leading eigenpairs of the linearized operator L + f′(u*).
//!
//! The transport operator L satisfies detailed balance with respect to the
//! exponential weight w = e^{(χ/d)(A − A_max)}: scaling by D = diag(√w)
//! turns it into a symmetric negative-semidefinite matrix whose off-diagonal
//! face coupling is √(a_f b_f). The linearization about a state u* adds the
//! diagonal f′(u*), so the full symmetrized matrix is tridiagonal in 1D and
//! pentadiagonal-with-bandwidth-nx in 2D. Eigenvalues are found by Sturm
//! bisection plus inverse iteration (1D) or shift-inverted power iteration
//! with a banded Cholesky factor (2D); both finish with a Rayleigh quotient
//! evaluated face-by-face, which is exact to a few ulps for near-exact
//! eigenvectors because the cancellation happens inside each face residual.
//!
//! Returned eigenvectors are in the original (unsymmetrized) coordinates,
//! scaled so the entry of largest magnitude is exactly +1.

use super::transport::{assemble_transport, TransportOperator};
use super::{Grid, ReactionSpec, SolverError};
use crate::potential::Potential;

/// Bisection stops when the bracket is this many ulp-scales wide.
const BISECTION_RELATIVE_WIDTH: f64 = 4.0 * f64::EPSILON;

/// Inverse-iteration sweeps per eigenvalue.
const INVERSE_ITERATIONS: usize = 4;

/// Shift-inverted power iteration gives up after this many sweeps.
const MAX_POWER_ITERATIONS: usize = 10_000;

/// Residual tolerance for power iteration, relative to the operator scale.
const POWER_RESIDUAL_TOL: f64 = 1e-11;

/// One eigenvalue with its eigenvector on the grid, peak-normalized to +1.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Face of the symmetrized operator: coupling √a, √b.
#[derive(Clone, Copy)]
struct SymFace {
    sqa: f64,
    sqb: f64,
}

/// Symmetrized linearization D⁻¹(L + f′)D, stored by faces.
struct SymmetricOperator {
    nx: usize,
    ny: usize,
    faces_x: Vec<SymFace>,
    faces_y: Vec<SymFace>,
    shift: Vec<f64>,
    scale: f64,
}

impl SymmetricOperator {
    fn build(op: &TransportOperator, fprime: Vec<f64>) -> Self {
        let (nx, ny) = op.shape();
        let mut faces_x = Vec::with_capacity((nx - 1) * ny);
        for iy in 0..ny {
            for ix in 0..nx - 1 {
                let (a, b) = op.face_x(ix, iy);
                faces_x.push(SymFace { sqa: a.sqrt(), sqb: b.sqrt() });
            }
        }
        let mut faces_y = Vec::with_capacity(nx * ny.saturating_sub(1));
        for iy in 0..ny.saturating_sub(1) {
            for ix in 0..nx {
                let (a, b) = op.face_y(ix, iy);
                faces_y.push(SymFace { sqa: a.sqrt(), sqb: b.sqrt() });
            }
        }
        let fmax = fprime.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = op.norm_inf() + fmax;
        SymmetricOperator { nx, ny, faces_x, faces_y, shift: fprime, scale }
    }

    fn cells(&self) -> usize {
        self.nx * self.ny
    }

    /// out = (L̃ + f′)x via face residuals g = √a·x_l − √b·x_r, so the
    /// large per-row cancellations happen inside one subtraction.
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, (s, xi)) in out.iter_mut().zip(self.shift.iter().zip(x)) {
            *o = s * xi;
        }
        let stride = self.nx - 1;
        for iy in 0..self.ny {
            for ix in 0..stride {
                let f = self.faces_x[ix + iy * stride];
                let l = ix + iy * self.nx;
                let g = f.sqa * x[l] - f.sqb * x[l + 1];
                out[l] -= f.sqa * g;
                out[l + 1] += f.sqb * g;
            }
        }
        for fy in 0..self.faces_y.len() {
            let f = self.faces_y[fy];
            let l = fy;
            let g = f.sqa * x[l] - f.sqb * x[l + self.nx];
            out[l] -= f.sqa * g;
            out[l + self.nx] += f.sqb * g;
        }
    }

    /// Rayleigh quotient xᵀ(L̃ + f′)x / xᵀx in face form.
    fn rayleigh(&self, x: &[f64]) -> f64 {
        let mut quad = 0.0;
        for (s, xi) in self.shift.iter().zip(x) {
            quad += s * xi * xi;
        }
        let stride = self.nx - 1;
        for iy in 0..self.ny {
            for ix in 0..stride {
                let f = self.faces_x[ix + iy * stride];
                let l = ix + iy * self.nx;
                let g = f.sqa * x[l] - f.sqb * x[l + 1];
                quad -= g * g;
            }
        }
        for fy in 0..self.faces_y.len() {
            let f = self.faces_y[fy];
            let g = f.sqa * x[fy] - f.sqb * x[fy + self.nx];
            quad -= g * g;
        }
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        quad / norm2
    }

    /// Tridiagonal entries (1D only).
    fn tridiagonal(&self) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(self.ny, 1, "tridiagonal form exists only in 1D");
        let n = self.nx;
        let mut diag = self.shift.clone();
        let mut off = vec![0.0; n - 1];
        for (i, f) in self.faces_x.iter().enumerate() {
            diag[i] -= f.sqa * f.sqa;
            diag[i + 1] -= f.sqb * f.sqb;
            off[i] = f.sqa * f.sqb;
        }
        (diag, off)
    }
}

/// Number of eigenvalues of the tridiagonal matrix strictly below sigma,
/// by the signs of the LDLᵀ pivots.
fn negcount(diag: &[f64], off: &[f64], sigma: f64) -> usize {
    let tiny = f64::MIN_POSITIVE;
    let mut count = 0usize;
    let mut t = diag[0] - sigma;
    if t < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let mut prev = t;
        if prev.abs() < tiny {
            prev = if prev < 0.0 { -tiny } else { tiny };
        }
        t = diag[i] - sigma - off[i - 1] * off[i - 1] / prev;
        if t < 0.0 {
            count += 1;
        }
    }
    count
}

/// k-th largest eigenvalue (k = 0 is the largest) by Sturm bisection.
fn bisect_kth_largest(diag: &[f64], off: &[f64], k: usize) -> f64 {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut radius = 0.0;
        if i > 0 {
            radius += off[i - 1].abs();
        }
        if i + 1 < n {
            radius += off[i].abs();
        }
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    // Eigenvalue index in ascending order; invariant: count(lo) ≤ j < count(hi).
    let j = n - 1 - k;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= BISECTION_RELATIVE_WIDTH * mid.abs().max(1.0) {
            break;
        }
        if negcount(diag, off, mid) <= j {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solve (T − σI)x = b for tridiagonal T with partial pivoting. Pivoting
/// fills one extra superdiagonal; the subdiagonal entry entering row i + 1
/// is always the original off[i] because earlier steps only zero it.
fn shifted_tridiagonal_solve(
    diag: &[f64],
    off: &[f64],
    sigma: f64,
    b: &mut [f64],
) -> Result<(), SolverError> {
    let n = diag.len();
    let mut d: Vec<f64> = diag.iter().map(|v| v - sigma).collect();
    let mut u1 = off.to_vec();
    let mut u2 = vec![0.0; n.saturating_sub(2)];
    for i in 0..n - 1 {
        let mut elim = off[i];
        if elim.abs() > d[i].abs() {
            // Swap rows i and i+1; row i+1's third entry was zero.
            let (di, u1i) = (d[i], u1[i]);
            d[i] = elim;
            u1[i] = d[i + 1];
            if i + 2 < n {
                u2[i] = u1[i + 1];
                u1[i + 1] = 0.0;
            }
            d[i + 1] = u1i;
            elim = di;
            b.swap(i, i + 1);
        }
        let pivot = d[i];
        if pivot == 0.0 {
            return Err(SolverError::LinearSolve("singular shifted tridiagonal".into()));
        }
        let m = elim / pivot;
        d[i + 1] -= m * u1[i];
        if i + 2 < n {
            u1[i + 1] -= m * u2[i];
        }
        b[i + 1] -= m * b[i];
    }
    if d[n - 1] == 0.0 {
        return Err(SolverError::LinearSolve("singular shifted tridiagonal".into()));
    }
    b[n - 1] /= d[n - 1];
    if n >= 2 {
        b[n - 2] = (b[n - 2] - u1[n - 2] * b[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - u1[i] * b[i + 1] - u2[i] * b[i + 2]) / d[i];
    }
    Ok(())
}

fn normalize_l2(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in x.iter_mut() {
        *v /= norm;
    }
}

fn orthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    for q in basis {
        let dot: f64 = x.iter().zip(q).map(|(a, b)| a * b).sum();
        for (xi, qi) in x.iter_mut().zip(q) {
            *xi -= dot * qi;
        }
    }
}

fn seeded_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut state = seed | 1;
    (0..n)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

/// Leading eigenpairs in 1D: Sturm bisection locates each of the `count`
/// largest eigenvalues, inverse iteration recovers the vectors.
fn leading_1d(sym: &SymmetricOperator, count: usize) -> Result<Vec<(f64, Vec<f64>)>, SolverError> {
    let (diag, off) = sym.tridiagonal();
    let n = diag.len();
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(count);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
    for k in 0..count {
        let estimate = bisect_kth_largest(&diag, &off, k);
        // Nudge the shift off the eigenvalue so the solve stays regular.
        let mut shift = estimate + 1e-12 * estimate.abs().max(1.0);
        let mut x = seeded_vector(n, 0x7f4a7c15u64.wrapping_add(k as u64));
        orthogonalize(&mut x, &basis);
        normalize_l2(&mut x);
        for _ in 0..INVERSE_ITERATIONS {
            if shifted_tridiagonal_solve(&diag, &off, shift, &mut x).is_err() {
                shift += 1e-10 * shift.abs().max(1.0);
                x = seeded_vector(n, 0x2545f491u64.wrapping_add(k as u64));
            }
            orthogonalize(&mut x, &basis);
            normalize_l2(&mut x);
        }
        let refined = sym.rayleigh(&x);
        let width = 1e-8 * sym.scale.max(1.0);
        let value = if (refined - estimate).abs() <= width { refined } else { estimate };
        basis.push(x.clone());
        pairs.push((value, x));
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite eigenvalues"));
    Ok(pairs)
}

/// Banded Cholesky factor of the SPD matrix σI − M̃ (bandwidth nx in 2D).
struct BandedCholesky {
    n: usize,
    bw: usize,
    /// Column-major band: entry (i, j) with j ≤ i ≤ j + bw at band[i - j][j].
    band: Vec<f64>,
}

impl BandedCholesky {
    fn factor(sym: &SymmetricOperator, sigma: f64) -> Result<Self, SolverError> {
        let n = sym.cells();
        let bw = sym.nx;
        let rows = bw + 1;
        let mut band = vec![0.0f64; rows * n];
        for (j, s) in sym.shift.iter().enumerate() {
            band[j * rows] = sigma - s;
        }
        let stride = sym.nx - 1;
        for iy in 0..sym.ny {
            for ix in 0..stride {
                let f = sym.faces_x[ix + iy * stride];
                let l = ix + iy * sym.nx;
                band[l * rows] += f.sqa * f.sqa;
                band[(l + 1) * rows] += f.sqb * f.sqb;
                band[l * rows + 1] = -(f.sqa * f.sqb);
            }
        }
        for (fy, f) in sym.faces_y.iter().enumerate() {
            band[fy * rows] += f.sqa * f.sqa;
            band[(fy + sym.nx) * rows] += f.sqb * f.sqb;
            band[fy * rows + bw] = -(f.sqa * f.sqb);
        }
        // In-place banded Cholesky, lower triangle.
        for j in 0..n {
            let start = j.saturating_sub(bw);
            for k in start..j {
                let ljk = band[k * rows + (j - k)];
                if ljk == 0.0 {
                    continue;
                }
                let top = (k + bw).min(n - 1);
                for i in j..=top {
                    band[j * rows + (i - j)] -= band[k * rows + (i - k)] * ljk;
                }
            }
            let pivot = band[j * rows];
            if pivot <= 0.0 {
                return Err(SolverError::LinearSolve(format!(
                    "shifted operator lost positive definiteness at row {j}"
                )));
            }
            let root = pivot.sqrt();
            let top = (j + bw).min(n - 1);
            for i in j..=top {
                band[j * rows + (i - j)] /= root;
            }
        }
        Ok(BandedCholesky { n, bw, band })
    }

    fn solve(&self, b: &mut [f64]) {
        let rows = self.bw + 1;
        for j in 0..self.n {
            let xj = b[j] / self.band[j * rows];
            b[j] = xj;
            let top = (j + self.bw).min(self.n - 1);
            for i in j + 1..=top {
                b[i] -= self.band[j * rows + (i - j)] * xj;
            }
        }
        for j in (0..self.n).rev() {
            let mut s = b[j];
            let top = (j + self.bw).min(self.n - 1);
            for i in j + 1..=top {
                s -= self.band[j * rows + (i - j)] * b[i];
            }
            b[j] = s / self.band[j * rows];
        }
    }
}

/// Leading eigenpairs in 2D by shift-inverted power iteration with deflation.
fn leading_2d(sym: &SymmetricOperator, count: usize) -> Result<Vec<(f64, Vec<f64>)>, SolverError> {
    let n = sym.cells();
    let fmax = sym.shift.iter().fold(0.0f64, |m, v| m.max(*v));
    // λ_max(M̃) ≤ max f′ because the transport part is negative semidefinite.
    let sigma = 1.0 + fmax;
    let chol = BandedCholesky::factor(sym, sigma)?;
    let tolerance = POWER_RESIDUAL_TOL * sym.scale.max(1.0);
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(count);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut work = vec![0.0f64; n];
    for k in 0..count {
        let mut x = seeded_vector(n, 0x9e3779b9u64.wrapping_add(k as u64));
        orthogonalize(&mut x, &basis);
        normalize_l2(&mut x);
        let mut converged = false;
        let mut residual = f64::INFINITY;
        let mut iterations = 0usize;
        while iterations < MAX_POWER_ITERATIONS {
            iterations += 1;
            chol.solve(&mut x);
            orthogonalize(&mut x, &basis);
            normalize_l2(&mut x);
            let rho = sym.rayleigh(&x);
            sym.apply(&x, &mut work);
            residual = work
                .iter()
                .zip(&x)
                .map(|(mx, xi)| (mx - rho * xi).powi(2))
                .sum::<f64>()
                .sqrt();
            if residual <= tolerance {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(SolverError::EigenNonConvergence { iterations, residual, tolerance });
        }
        let value = sym.rayleigh(&x);
        basis.push(x.clone());
        pairs.push((value, x));
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite eigenvalues"));
    Ok(pairs)
}

/// Leading `count` eigenpairs of the operator u ↦ ∇·(d∇u − χ_eff u∇A) + f′(u*)u
/// with no-flux boundaries, about the state `steady`.
pub fn linearized_leading_eigen(
    grid: &Grid,
    potential: &Potential,
    chi_eff: f64,
    d: f64,
    reaction: &ReactionSpec,
    steady: &[f64],
    count: usize,
) -> Result<Vec<EigenPair>, SolverError> {
    assert!(count >= 1, "at least one eigenpair must be requested");
    assert!(count <= 8, "only the leading few eigenpairs are supported");
    reaction.validate()?;
    if steady.len() != grid.cells() {
        return Err(SolverError::FieldLength { expected: grid.cells(), got: steady.len() });
    }
    if let Some(index) = steady.iter().position(|v| !v.is_finite()) {
        return Err(SolverError::NonFiniteSignal { index });
    }
    let op = assemble_transport(grid, potential, chi_eff, d)?;
    let resource = reaction.sample_resource(grid, potential)?;
    let fprime: Vec<f64> =
        steady.iter().zip(&resource).map(|(u, r)| reaction.derivative(*u, *r)).collect();
    let weight = op.kernel_vector();
    let sym = SymmetricOperator::build(&op, fprime);
    let pairs = if grid.dim() == 1 { leading_1d(&sym, count)? } else { leading_2d(&sym, count)? };
    Ok(pairs
        .into_iter()
        .map(|(value, x)| {
            let mut vector: Vec<f64> =
                x.iter().zip(&weight).map(|(xi, wi)| xi * wi.sqrt()).collect();
            let peak = vector
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite vector"))
                .map(|(i, _)| i)
                .expect("nonempty vector");
            let scale = vector[peak];
            for v in vector.iter_mut() {
                *v /= scale;
            }
            EigenPair { value, vector }
        })
        .collect())
}
