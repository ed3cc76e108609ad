//! Dictionary learning through the Lagrange dual in the Fourier domain.
//!
//! For fixed coefficients `X`, the dictionary subproblem
//! `min 1/2 ||Y - D * X||_F^2  s.t. ||D(:,j,:)||_F^2 <= 1` decouples over
//! spectral slices except for the per-atom energy constraints, which read
//! `sum_l ||D_l(:,j)||^2 <= k` after an unnormalized DFT. With one
//! multiplier per atom the inner minimizer is available in closed form,
//!
//! ```text
//! D_l = (Y_l X_l^H) (X_l X_l^H + diag(lambda))^-1,
//! ```
//!
//! and the concave dual `g(lambda)` is maximized over `lambda >= 0` with a
//! projected Newton iteration using its analytic Hessian.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{gemm_nh_acc, to_matrix};
use crate::tensor::spectral::{slice_weight, HalfSpectrum, TubeFft};
use crate::tensor::{idft3, Shape3, SpectralTensor, Tensor3};

/// Multiplier added to the diagonal of rank-deficient slice systems,
/// relative to their mean diagonal.
pub const LAMBDA_FLOOR: f64 = 1e-10;

/// Pivot ratio under which a Cholesky factor is considered singular.
const SINGULAR_PIVOT: f64 = 1e-13;

/// KKT residual accepted without the fallback solver.
const STALL_RESIDUAL: f64 = 1e-6;

/// Newton steps without a 10% residual decrease before giving up.
const STAGNATION_STEPS: usize = 8;

const MAX_HALVINGS: usize = 40;

const BISECTION_SWEEPS: usize = 8;

/// Dual variables and Newton settings. Warm-started across calls.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    /// One multiplier per atom, all nonnegative.
    pub lambda: Vec<f64>,
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl DualState {
    pub fn new(atoms: usize, newton_tol: f64, max_newton: usize) -> Self {
        Self {
            lambda: vec![0.0; atoms],
            newton_tol,
            max_newton,
        }
    }
}

/// Outcome of [`newton_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub lambda: Vec<f64>,
    /// Newton iterations taken.
    pub steps: usize,
    /// Set when Newton did not converge and coordinate bisection took over.
    pub degraded: bool,
    /// Final KKT residual (spectral units).
    pub kkt_residual: f64,
    /// Per-atom spectral energies `sum_l ||D_l(:,j)||^2` at the solution.
    pub atom_energy: Vec<f64>,
}

/// Result of [`learn_dictionary`].
#[derive(Debug, Clone)]
pub struct DictionaryUpdate {
    pub dictionary: Tensor3,
    pub dual: DualSolution,
}

/// Per-slice sufficient statistics of the dictionary subproblem:
/// `P_l = Y_l X_l^H`, `G_l = X_l X_l^H` and `||Y_l||_F^2`.
#[derive(Debug, Clone)]
pub struct DictionaryStatistics {
    rows: usize,
    atoms: usize,
    tubes: usize,
    /// Multiplicity of each stored slice in the full spectrum.
    weights: Vec<f64>,
    cross: Vec<Vec<Complex64>>,
    gram: Vec<Vec<Complex64>>,
    data_energy: Vec<f64>,
}

impl DictionaryStatistics {
    /// Empty statistics for slices `0..=k/2` of real data.
    pub fn new(rows: usize, atoms: usize, tubes: usize) -> Self {
        let h = tubes / 2 + 1;
        Self {
            rows,
            atoms,
            tubes,
            weights: (0..h).map(|l| slice_weight(tubes, l)).collect(),
            cross: vec![vec![Complex64::default(); rows * atoms]; h],
            gram: vec![vec![Complex64::default(); atoms * atoms]; h],
            data_energy: vec![0.0; h],
        }
    }

    pub fn from_tensors(y: &Tensor3, x: &Tensor3) -> Result<Self> {
        let mut s = Self::new(y.rows(), x.rows(), y.tubes());
        s.accumulate(y, x)?;
        Ok(s)
    }

    /// Statistics over every slice of arbitrary spectral tensors.
    pub fn from_spectral(y: &SpectralTensor, x: &SpectralTensor) -> Result<Self> {
        let (ys, xs) = (y.shape(), x.shape());
        if ys.cols != xs.cols || ys.tubes != xs.tubes {
            return Err(Error::shape("dictionary statistics", ys, xs));
        }
        let (m, r, k) = (ys.rows, xs.rows, ys.tubes);
        let mut s = Self {
            rows: m,
            atoms: r,
            tubes: k,
            weights: vec![1.0; k],
            cross: vec![vec![Complex64::default(); m * r]; k],
            gram: vec![vec![Complex64::default(); r * r]; k],
            data_energy: vec![0.0; k],
        };
        for l in 0..k {
            gemm_nh_acc(m, r, y.slice(l), x.slice(l), &mut s.cross[l]);
            gemm_nh_acc(r, r, x.slice(l), x.slice(l), &mut s.gram[l]);
            s.data_energy[l] = y.slice(l).iter().map(|c| c.norm_sqr()).sum();
        }
        Ok(s)
    }

    /// Adds the contribution of a block of patch columns.
    pub fn accumulate(&mut self, y: &Tensor3, x: &Tensor3) -> Result<()> {
        if y.cols() != x.cols() || y.tubes() != x.tubes() {
            return Err(Error::shape("dictionary statistics", y.shape(), x.shape()));
        }
        if y.rows() != self.rows || x.rows() != self.atoms || y.tubes() != self.tubes {
            return Err(Error::shape(
                "dictionary statistics",
                Shape3::new(self.rows, self.atoms, self.tubes),
                x.shape(),
            ));
        }
        let fft = TubeFft::new(self.tubes);
        let yh = fft.forward_half(y);
        let xh = fft.forward_half(x);
        let (m, r) = (self.rows, self.atoms);
        for l in 0..self.weights.len() {
            gemm_nh_acc(m, r, yh.slice(l), xh.slice(l), &mut self.cross[l]);
            gemm_nh_acc(r, r, xh.slice(l), xh.slice(l), &mut self.gram[l]);
            self.data_energy[l] += yh.slice(l).iter().map(|c| c.norm_sqr()).sum::<f64>();
        }
        Ok(())
    }

    /// Sums another block's statistics into this one.
    pub fn merge(&mut self, other: &DictionaryStatistics) {
        assert_eq!(self.weights.len(), other.weights.len());
        for (a, b) in self.cross.iter_mut().zip(&other.cross) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.gram.iter_mut().zip(&other.gram) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.data_energy.iter_mut().zip(&other.data_energy) {
            *a += b;
        }
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    fn has_coefficients(&self) -> bool {
        self.gram
            .iter()
            .any(|g| (0..self.atoms).any(|j| g[j * self.atoms + j].re > 0.0))
    }
}

/// Factors `G + diag(lambda)`; rank-deficient systems get `LAMBDA_FLOOR`
/// (relative) as a minimum multiplier when `floor` is set.
fn factor(
    gram: &[Complex64],
    lambda: &[f64],
    floor: bool,
    slice: Option<usize>,
) -> Result<Cholesky<Complex64, Dyn>> {
    let r = lambda.len();
    let base = to_matrix(r, r, gram);
    let mean_diag = (0..r).map(|j| base[(j, j)].re).sum::<f64>() / r as f64;
    let attempt = |shift: f64| -> Option<Cholesky<Complex64, Dyn>> {
        let mut m = base.clone();
        for (j, &lj) in lambda.iter().enumerate() {
            m[(j, j)] += Complex64::new(lj.max(shift), 0.0);
        }
        let scale = (0..r).map(|j| m[(j, j)].re).fold(0.0, f64::max);
        let chol = m.cholesky()?;
        let l = chol.l_dirty();
        let min_pivot = (0..r)
            .map(|j| l[(j, j)].norm_sqr())
            .fold(f64::INFINITY, f64::min);
        (scale > 0.0 && min_pivot > SINGULAR_PIVOT * scale).then_some(chol)
    };
    if let Some(c) = attempt(0.0) {
        return Ok(c);
    }
    if floor {
        let shift = LAMBDA_FLOOR * if mean_diag > 0.0 { mean_diag } else { 1.0 };
        if let Some(c) = attempt(shift) {
            return Ok(c);
        }
    }
    Err(Error::RankDeficient {
        slice: slice.unwrap_or(0),
    })
}

/// Closed-form slice dictionary `(Y_l X_l^H)(X_l X_l^H + diag(lambda))^-1`,
/// solved through a Cholesky factorization.
pub fn slice_update(
    y: &DMatrix<Complex64>,
    x: &DMatrix<Complex64>,
    lambda: &[f64],
) -> Result<DMatrix<Complex64>> {
    let r = x.nrows();
    if y.ncols() != x.ncols() || lambda.len() != r {
        return Err(Error::InvalidInput(format!(
            "slice update needs Y: m x n, X: r x n, r multipliers; got {}x{}, {}x{}, {}",
            y.nrows(),
            y.ncols(),
            x.nrows(),
            x.ncols(),
            lambda.len()
        )));
    }
    check_lambda(lambda)?;
    let gram = x * x.adjoint();
    let cross = y * x.adjoint();
    let chol = factor(gram.as_slice(), lambda, false, None)?;
    Ok(chol.solve(&cross.adjoint()).adjoint())
}

fn check_lambda(lambda: &[f64]) -> Result<()> {
    if lambda.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(
            "dual variables must be finite and nonnegative".into(),
        ));
    }
    Ok(())
}

/// Dual function value and derivatives at one `lambda`.
#[derive(Clone)]
struct DualEval {
    value: f64,
    /// `sum_l ||D_l(:,j)||^2 - k`.
    grad: Vec<f64>,
    energy: Vec<f64>,
    hessian: Option<DMatrix<f64>>,
    dict: Vec<DMatrix<Complex64>>,
}

fn evaluate(
    stats: &DictionaryStatistics,
    lambda: &[f64],
    hessian: bool,
    floor: bool,
) -> Result<DualEval> {
    let (m, r) = (stats.rows, stats.atoms);
    let k = stats.tubes as f64;
    let mut value = 0.0;
    let mut energy = vec![0.0; r];
    let mut hess = hessian.then(|| DMatrix::<f64>::zeros(r, r));
    let mut dict = Vec::with_capacity(stats.weights.len());
    for (l, &w) in stats.weights.iter().enumerate() {
        let chol = factor(&stats.gram[l], lambda, floor, Some(l))?;
        let cross = to_matrix(m, r, &stats.cross[l]);
        let d = chol.solve(&cross.adjoint()).adjoint();
        for j in 0..r {
            energy[j] += w * d.column(j).norm_squared();
        }
        let fit: f64 = d
            .iter()
            .zip(cross.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        value += w * (stats.data_energy[l] - fit);
        if let Some(h) = hess.as_mut() {
            let inv = chol.inverse();
            let dd = d.adjoint() * &d;
            for i in 0..r {
                for j in 0..r {
                    h[(i, j)] -= 2.0 * w * (inv[(j, i)] * dd[(i, j)]).re;
                }
            }
        }
        dict.push(d);
    }
    value -= k * lambda.iter().sum::<f64>();
    let grad = energy.iter().map(|e| e - k).collect();
    Ok(DualEval {
        value,
        grad,
        energy,
        hessian: hess,
        dict,
    })
}

/// KKT residual of `max g` over `lambda >= 0`: feasibility, stationarity on
/// positive multipliers, and complementary slackness.
fn kkt_residual(lambda: &[f64], grad: &[f64]) -> f64 {
    lambda
        .iter()
        .zip(grad)
        .map(|(&l, &g)| {
            if l > 0.0 {
                g.abs().max((l * g).abs())
            } else {
                g.max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Evaluates the dual function `g(lambda)`: the Lagrangian minimized over
/// the dictionary, summed over every slice of the given spectra.
pub fn dual_objective(y: &SpectralTensor, x: &SpectralTensor, lambda: &[f64]) -> Result<f64> {
    check_lambda(lambda)?;
    let stats = DictionaryStatistics::from_spectral(y, x)?;
    if lambda.len() != stats.atoms {
        return Err(Error::InvalidInput(format!(
            "expected {} dual variables, got {}",
            stats.atoms,
            lambda.len()
        )));
    }
    Ok(evaluate(&stats, lambda, false, false)?.value)
}

/// Maximizes the dual over `lambda >= 0` for the given spectra.
pub fn newton_solve(
    y: &SpectralTensor,
    x: &SpectralTensor,
    state: &DualState,
) -> Result<DualSolution> {
    let stats = DictionaryStatistics::from_spectral(y, x)?;
    solve_dual(&stats, state)
}

/// Per-atom multiplier guess from the diagonal of each slice system.
fn diagonal_guess(stats: &DictionaryStatistics, j: usize) -> f64 {
    let (m, r) = (stats.rows, stats.atoms);
    let k = stats.tubes as f64;
    let terms: Vec<(f64, f64)> = stats
        .weights
        .iter()
        .enumerate()
        .map(|(l, &w)| {
            let p: f64 = stats.cross[l][j * m..(j + 1) * m]
                .iter()
                .map(|c| c.norm_sqr())
                .sum();
            (w * p, stats.gram[l][j * r + j].re)
        })
        .collect();
    let energy = |lam: f64| -> f64 {
        terms
            .iter()
            .map(|&(p, g)| if p == 0.0 { 0.0 } else { p / (g + lam).powi(2) })
            .sum()
    };
    let total: f64 = terms.iter().map(|t| t.0).sum();
    let (mut lo, mut hi) = (0.0, (total / k).sqrt());
    if energy(lo) <= k {
        return 0.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if energy(mid) > k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn solve_dual(stats: &DictionaryStatistics, state: &DualState) -> Result<DualSolution> {
    let r = stats.atoms;
    let mut lambda: Vec<f64> = if state.lambda.len() == r {
        state.lambda.iter().map(|v| v.max(0.0)).collect()
    } else {
        vec![0.0; r]
    };
    check_lambda(&lambda)?;

    let mut eval = evaluate(stats, &lambda, true, true)?;
    // Cold start: seed violated atoms from the diagonal approximation.
    if lambda.iter().all(|&v| v == 0.0) && eval.grad.iter().any(|&g| g > 0.0) {
        let guess: Vec<f64> = (0..r)
            .map(|j| {
                if eval.grad[j] > 0.0 {
                    diagonal_guess(stats, j)
                } else {
                    0.0
                }
            })
            .collect();
        let trial = evaluate(stats, &guess, true, true)?;
        if kkt_residual(&guess, &trial.grad) < kkt_residual(&lambda, &eval.grad) {
            lambda = guess;
            eval = trial;
        }
    }

    let tol = state.newton_tol;
    let mut residual = kkt_residual(&lambda, &eval.grad);
    let mut best = (residual, lambda.clone(), eval.clone());
    let mut stagnant = 0;
    let mut steps = 0;
    while residual > tol && steps < state.max_newton && stagnant < STAGNATION_STEPS {
        steps += 1;
        let hess = eval.hessian.as_ref().expect("hessian requested");
        let curvature_scale = (0..r).map(|j| hess[(j, j)].abs()).fold(0.0, f64::max);
        if (0..r).any(|j| hess[(j, j)] > 1e-8 * curvature_scale.max(f64::MIN_POSITIVE)) {
            return Err(Error::Numerical(
                "dual Hessian has positive curvature; the dual is not concave".into(),
            ));
        }
        // Free coordinates: positive multipliers, or zero ones the gradient pushes up.
        let free: Vec<usize> = (0..r)
            .filter(|&j| lambda[j] > 0.0 || eval.grad[j] > 0.0)
            .collect();
        if free.is_empty() {
            break;
        }
        let direction = newton_direction(hess, &eval.grad, &free);
        let Some(direction) = direction else { break };

        let mut accepted = None;
        let mut step = 1.0;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = (0..r)
                .map(|j| (lambda[j] + step * direction[j]).max(0.0))
                .collect();
            if let Ok(next) = evaluate(stats, &trial, true, true) {
                let predicted: f64 = (0..r).map(|j| eval.grad[j] * (trial[j] - lambda[j])).sum();
                let next_residual = kkt_residual(&trial, &next.grad);
                let noise = 1e-14 * eval.value.abs().max(1.0);
                if next.value >= eval.value + 1e-4 * predicted - noise || next_residual < residual {
                    accepted = Some((trial, next, next_residual));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((l, e, res)) = accepted else { break };
        lambda = l;
        eval = e;
        residual = res;
        if residual < 0.9 * best.0 {
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        if residual < best.0 {
            best = (residual, lambda.clone(), eval.clone());
        }
    }
    let (mut residual, mut lambda, mut eval) = best;

    let mut degraded = false;
    if residual > tol && residual > STALL_RESIDUAL {
        degraded = true;
        let (l, e) = coordinate_bisection(stats, lambda.clone(), tol)?;
        let res = kkt_residual(&l, &e.grad);
        if res < residual {
            lambda = l;
            eval = e;
            residual = res;
        }
    }
    Ok(DualSolution {
        lambda,
        steps,
        degraded,
        kkt_residual: residual,
        atom_energy: eval.energy,
    })
}

/// Solves `(-H_FF) d_F = grad_F`, the ascent step on the free coordinates.
fn newton_direction(hess: &DMatrix<f64>, grad: &[f64], free: &[usize]) -> Option<Vec<f64>> {
    let f = free.len();
    let mut neg = DMatrix::<f64>::zeros(f, f);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            neg[(a, b)] = -0.5 * (hess[(i, j)] + hess[(j, i)]);
        }
    }
    let rhs = DVector::from_iterator(f, free.iter().map(|&j| grad[j]));
    let scale = (0..f).map(|a| neg[(a, a)]).fold(0.0, f64::max);
    let solved = neg
        .clone()
        .cholesky()
        .map(|c| c.solve(&rhs))
        .or_else(|| {
            let mut reg = neg.clone();
            for a in 0..f {
                reg[(a, a)] += 1e-12 * scale.max(f64::MIN_POSITIVE);
            }
            reg.cholesky().map(|c| c.solve(&rhs))
        })
        .or_else(|| neg.lu().solve(&rhs))?;
    let mut dir = vec![0.0; hess.nrows()];
    for (a, &j) in free.iter().enumerate() {
        dir[j] = solved[a];
    }
    dir.iter().all(|v| v.is_finite()).then_some(dir)
}

/// Fallback: cyclic one-dimensional root finding on each gradient
/// component, which is decreasing in its own multiplier.
fn coordinate_bisection(
    stats: &DictionaryStatistics,
    mut lambda: Vec<f64>,
    tol: f64,
) -> Result<(Vec<f64>, DualEval)> {
    let r = stats.atoms;
    let mut eval = evaluate(stats, &lambda, false, true)?;
    let mut residual = kkt_residual(&lambda, &eval.grad);
    for _sweep in 0..BISECTION_SWEEPS {
        let mut trial = lambda.clone();
        for j in 0..r {
            let grad_at = |lam: &mut Vec<f64>, v: f64| -> Result<f64> {
                lam[j] = v;
                Ok(evaluate(stats, lam, false, true)?.grad[j])
            };
            let start = trial[j];
            let g = grad_at(&mut trial, start)?;
            if g.abs() <= tol || (start == 0.0 && g <= 0.0) {
                trial[j] = start;
                continue;
            }
            let (mut lo, mut hi);
            if g > 0.0 {
                lo = start;
                hi = (2.0 * start)
                    .max(diagonal_guess(stats, j))
                    .max(f64::MIN_POSITIVE.sqrt());
                while grad_at(&mut trial, hi)? > 0.0 {
                    lo = hi;
                    hi *= 2.0;
                    if !hi.is_finite() {
                        return Err(Error::Numerical("dual bisection failed to bracket".into()));
                    }
                }
            } else {
                hi = start;
                lo = 0.5 * start;
                while grad_at(&mut trial, lo)? <= 0.0 {
                    hi = lo;
                    lo *= 0.5;
                    if lo < 1e-300 {
                        lo = 0.0;
                        break;
                    }
                }
                if lo == 0.0 && grad_at(&mut trial, 0.0)? <= 0.0 {
                    trial[j] = 0.0;
                    continue;
                }
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi || hi - lo <= 1e-12 * hi {
                    break;
                }
                if grad_at(&mut trial, mid)? > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            trial[j] = hi;
        }
        let next = evaluate(stats, &trial, false, true)?;
        let next_residual = kkt_residual(&trial, &next.grad);
        let improved = next_residual < 0.9 * residual;
        if next_residual < residual {
            lambda = trial;
            eval = next;
            residual = next_residual;
        }
        if residual <= tol.max(STALL_RESIDUAL) || !improved {
            break;
        }
    }
    Ok((lambda, eval))
}

/// Solves the dictionary subproblem from accumulated statistics.
pub fn solve_dictionary(
    stats: &DictionaryStatistics,
    state: &mut DualState,
) -> Result<DictionaryUpdate> {
    if !stats.has_coefficients() {
        return Err(Error::Unidentifiable);
    }
    let dual = solve_dual(stats, state)?;
    let eval = evaluate(stats, &dual.lambda, false, true)?;
    let (m, r, k) = (stats.rows, stats.atoms, stats.tubes);
    let mut half = HalfSpectrum::zeros(Shape3::new(m, r, k));
    for (l, d) in eval.dict.iter().enumerate() {
        let real = crate::tensor::spectral::is_self_conjugate(k, l);
        for (dst, &c) in half.slice_mut(l).iter_mut().zip(d.iter()) {
            *dst = if real { Complex64::new(c.re, 0.0) } else { c };
        }
    }
    let mut dictionary = idft3(&half.to_full())?;
    project_atoms(&mut dictionary);
    state.lambda.clone_from(&dual.lambda);
    Ok(DictionaryUpdate { dictionary, dual })
}

/// Rescales atoms whose energy exceeds one, removing the rounding-level
/// infeasibility left by an inexact multiplier.
fn project_atoms(d: &mut Tensor3) {
    let shape = d.shape();
    let norms = d.lateral_slice_norms();
    for (j, &nrm) in norms.iter().enumerate() {
        if nrm > 1.0 {
            for l in 0..shape.tubes {
                for i in 0..shape.rows {
                    d[(i, j, l)] /= nrm;
                }
            }
        }
    }
}

/// Dictionary step of the alternation: the constrained least-squares
/// minimizer of `1/2 ||Y - D * X||_F^2` over atoms of unit energy.
pub fn learn_dictionary(
    y: &Tensor3,
    x: &Tensor3,
    state: &mut DualState,
) -> Result<DictionaryUpdate> {
    if y.cols() != x.cols() || y.tubes() != x.tubes() {
        return Err(Error::shape("learn_dictionary", y.shape(), x.shape()));
    }
    if x.is_zero() {
        return Err(Error::Unidentifiable);
    }
    let stats = DictionaryStatistics::from_tensors(y, x)?;
    solve_dictionary(&stats, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::testing::*;
    use crate::tensor::{dft3, tprod};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn slice_update_exact_inverse() {
        let x =
            DMatrix::from_row_slice(2, 2, &[c(1.0, 1.0), c(0.0, 2.0), c(3.0, 0.0), c(1.0, -1.0)]);
        let d_true = DMatrix::from_row_slice(
            3,
            2,
            &[
                c(1.0, 0.0),
                c(2.0, 1.0),
                c(0.5, 0.0),
                c(0.0, -1.0),
                c(1.0, 1.0),
                c(2.0, 0.0),
            ],
        );
        let y = &d_true * &x;
        let d = slice_update(&y, &x, &[0.0, 0.0]).unwrap();
        assert!((&d - &d_true).norm() < 1e-12);
    }

    #[test]
    fn slice_update_large_penalty_vanishes() {
        let x = DMatrix::from_fn(2, 5, |i, j| c((i + j) as f64, i as f64 - j as f64));
        let y = DMatrix::from_fn(3, 5, |i, j| c((i * j) as f64, 1.0));
        let d = slice_update(&y, &x, &[1e14, 1e14]).unwrap();
        assert!(d.norm() < 1e-10);
    }

    #[test]
    fn slice_update_singular_system_errors() {
        let x = DMatrix::from_fn(3, 2, |i, j| c((i + j) as f64, 0.0));
        let y = DMatrix::from_fn(2, 2, |i, j| c((i + 2 * j) as f64, 0.0));
        assert!(matches!(
            slice_update(&y, &x, &[0.0; 3]),
            Err(Error::RankDeficient { .. })
        ));
        assert!(slice_update(&y, &x, &[-1.0; 3]).is_err());
    }

    #[test]
    fn slice_update_matches_augmented_least_squares() {
        let mut rng = rng(41);
        let gen = |rng: &mut _, r, c_| {
            DMatrix::from_fn(r, c_, |_, _| {
                c(
                    rand::Rng::random_range(rng, -1.0..1.0),
                    rand::Rng::random_range(rng, -1.0..1.0),
                )
            })
        };
        let x: DMatrix<Complex64> = gen(&mut rng, 3, 6);
        let y: DMatrix<Complex64> = gen(&mut rng, 4, 6);
        let lambda = [0.3, 1.2, 0.05];
        let d = slice_update(&y, &x, &lambda).unwrap();
        // normal equations D (X X^H + L) = Y X^H
        let mut m = &x * x.adjoint();
        for j in 0..3 {
            m[(j, j)] += c(lambda[j], 0.0);
        }
        assert!((&d * &m - &y * x.adjoint()).norm() <= 1e-10);
        // augmented system [X, sqrt(L)] solved with a QR least squares
        let mut aug_x = DMatrix::zeros(3, 9);
        aug_x.view_mut((0, 0), (3, 6)).copy_from(&x);
        let mut aug_y = DMatrix::zeros(4, 9);
        aug_y.view_mut((0, 0), (4, 6)).copy_from(&y);
        for j in 0..3 {
            aug_x[(j, 6 + j)] = c(lambda[j].sqrt(), 0.0);
        }
        // D aug_x = aug_y  <=>  aug_x^H D^H = aug_y^H
        let qr = aug_x.adjoint().qr();
        let rhs = qr.q().adjoint() * aug_y.adjoint();
        let sol = qr.r().solve_upper_triangular(&rhs).unwrap();
        assert!((sol.adjoint() - d).norm() <= 1e-10);
    }

    #[test]
    fn dual_objective_degenerate_cases() {
        let k = 3;
        // Unitary per slice: X is the identity tensor.
        let mut rng = rng(42);
        let y = random_tensor(&mut rng, Shape3::new(2, 2, k));
        let x = Tensor3::identity(2, k);
        let g = dual_objective(&dft3(&y), &dft3(&x), &[0.0, 0.0]).unwrap();
        assert!(g.abs() < 1e-12);

        let zero = Tensor3::zeros(Shape3::new(2, 2, k));
        let yh = dft3(&y);
        let lambda = [0.5, 2.0];
        let g = dual_objective(&yh, &dft3(&zero), &lambda).unwrap();
        let want = yh.energy() - k as f64 * 2.5;
        assert!((g - want).abs() < 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn dual_objective_matches_dense_least_squares() {
        let mut rng = rng(43);
        let k = 4;
        let y = random_tensor(&mut rng, Shape3::new(3, 7, k));
        let x = random_tensor(&mut rng, Shape3::new(2, 7, k));
        let (yh, xh) = (dft3(&y), dft3(&x));
        let lambda = [0.7, 0.2];
        let g = dual_objective(&yh, &xh, &lambda).unwrap();
        // Oracle: per slice, solve the Tikhonov least squares by stacking and
        // evaluate the Lagrangian directly.
        let mut want = -(k as f64) * lambda.iter().sum::<f64>();
        for l in 0..k {
            let ys = to_matrix(3, 7, yh.slice(l));
            let xs = to_matrix(2, 7, xh.slice(l));
            let mut aug_x = DMatrix::zeros(2, 9);
            aug_x.view_mut((0, 0), (2, 7)).copy_from(&xs);
            aug_x[(0, 7)] = c(lambda[0].sqrt(), 0.0);
            aug_x[(1, 8)] = c(lambda[1].sqrt(), 0.0);
            let mut aug_y = DMatrix::zeros(3, 9);
            aug_y.view_mut((0, 0), (3, 7)).copy_from(&ys);
            let qr = aug_x.adjoint().qr();
            let d = qr
                .r()
                .solve_upper_triangular(&(qr.q().adjoint() * aug_y.adjoint()))
                .unwrap()
                .adjoint();
            want += (&ys - &d * &xs).norm_squared();
            for j in 0..2 {
                want += lambda[j] * d.column(j).norm_squared();
            }
        }
        assert!((g - want).abs() <= 1e-10 * want.abs());
    }

    #[test]
    fn newton_returns_zero_when_slack() {
        let mut rng = rng(44);
        let k = 3;
        let d = random_tensor(&mut rng, Shape3::new(4, 2, k)).scaled(0.1);
        let x = random_tensor(&mut rng, Shape3::new(2, 10, k));
        let y = tprod(&d, &x).unwrap();
        let sol = newton_solve(&dft3(&y), &dft3(&x), &DualState::new(2, 1e-10, 50)).unwrap();
        assert_eq!(sol.lambda, vec![0.0, 0.0]);
        assert!(!sol.degraded);
    }

    #[test]
    fn newton_scalar_closed_form() {
        // r = 1, k = 1: g(l) = y^2 - (y x)^2 / (x^2 + l) - l, so
        // g'(l) = (y x / (x^2 + l))^2 - 1 = 0  =>  l = |y x| - x^2.
        let (yv, xv) = (3.0, 0.5);
        let y = Tensor3::from_vec(Shape3::new(1, 1, 1), vec![yv]).unwrap();
        let x = Tensor3::from_vec(Shape3::new(1, 1, 1), vec![xv]).unwrap();
        let sol = newton_solve(&dft3(&y), &dft3(&x), &DualState::new(1, 1e-12, 50)).unwrap();
        let want = (yv * xv).abs() - xv * xv;
        assert!(
            (sol.lambda[0] - want).abs() <= 1e-8,
            "{} vs {want}",
            sol.lambda[0]
        );
    }

    #[test]
    fn newton_satisfies_kkt_on_random_instances() {
        let mut rng = rng(45);
        for trial in 0..10 {
            let k = 2 + trial % 4;
            let y = random_tensor(&mut rng, Shape3::new(4, 12, k)).scaled(3.0);
            let x = random_tensor(&mut rng, Shape3::new(3, 12, k)).scaled(0.2);
            let sol = newton_solve(&dft3(&y), &dft3(&x), &DualState::new(3, 1e-9, 100)).unwrap();
            for j in 0..3 {
                let slack = sol.atom_energy[j] - k as f64;
                assert!(slack <= 1e-6, "feasibility {slack}");
                assert!((sol.lambda[j] * slack).abs() <= 1e-6, "slackness");
                assert!(sol.lambda[j] >= 0.0);
            }
        }
    }

    #[test]
    fn learn_dictionary_degenerate_inputs() {
        let mut rng = rng(46);
        let x = random_tensor(&mut rng, Shape3::new(3, 8, 4));
        let y = Tensor3::zeros(Shape3::new(5, 8, 4));
        let mut state = DualState::new(3, 1e-10, 50);
        let out = learn_dictionary(&y, &x, &mut state).unwrap();
        assert!(out.dictionary.is_zero());
        assert_eq!(out.dual.lambda, vec![0.0; 3]);

        let zero = Tensor3::zeros(Shape3::new(3, 8, 4));
        assert!(matches!(
            learn_dictionary(&y, &zero, &mut state),
            Err(Error::Unidentifiable)
        ));
    }

    #[test]
    fn learn_dictionary_recovers_planted_feasible_dictionary() {
        let mut rng = rng(47);
        let k = 5;
        let mut d_true = random_tensor(&mut rng, Shape3::new(6, 3, k));
        let norms = d_true.lateral_slice_norms();
        for l in 0..k {
            for j in 0..3 {
                for i in 0..6 {
                    d_true[(i, j, l)] *= 0.9 / norms[j];
                }
            }
        }
        let x = random_tensor(&mut rng, Shape3::new(3, 40, k));
        let y = tprod(&d_true, &x).unwrap();
        let mut state = DualState::new(3, 1e-10, 100);
        let out = learn_dictionary(&y, &x, &mut state).unwrap();
        let fit = tprod(&out.dictionary, &x)
            .unwrap()
            .sub(&y)
            .unwrap()
            .fro_norm_sq();
        assert!(fit <= 1e-8, "{fit}");
        assert!(rel_err(&out.dictionary, &d_true) <= 1e-6);
    }

    #[test]
    fn unused_atom_gets_floor_and_zero_column() {
        let mut rng = rng(48);
        let k = 4;
        let mut x = random_tensor(&mut rng, Shape3::new(3, 10, k));
        for l in 0..k {
            for j in 0..10 {
                x[(2, j, l)] = 0.0;
            }
        }
        let y = random_tensor(&mut rng, Shape3::new(5, 10, k)).scaled(4.0);
        let mut state = DualState::new(3, 1e-9, 100);
        let out = learn_dictionary(&y, &x, &mut state).unwrap();
        let norms = out.dictionary.lateral_slice_norms();
        assert!(norms[2] < 1e-12);
        assert!(norms.iter().all(|n| n * n <= 1.0 + 1e-6));
    }
}
