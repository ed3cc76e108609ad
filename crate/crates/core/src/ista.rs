//! Coefficient learning: iterative shrinkage-thresholding in the t-product
//! algebra with FISTA momentum (ISTA-T).
//!
//! Minimizes `1/2 ||Y - D * X||_F^2 + beta ||X||_1` over `X` for a fixed
//! dictionary `D`. The smooth part is evaluated in the Fourier domain where
//! the t-product is a stack of independent slice products, and the proximal
//! step (soft thresholding) is applied in the signal domain.

use crate::error::{Error, Result};
use crate::linalg::{gemm_hn, gemm_nn, gram_fro_norm, spectral_norm_sq};
use crate::tensor::spectral::{slice_weight, HalfSpectrum, TubeFft};
use crate::tensor::{Shape3, Tensor3};

/// How the base step-size constant is derived from the dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LipschitzRule {
    /// `max_l ||D_l||_2^2` over spectral slices: the exact Lipschitz
    /// constant of the gradient.
    SpectralNorm,
    /// `sum_l ||D_l^H D_l||_F` over all `k` spectral slices. A valid but
    /// loose upper bound (by up to a factor `k * sqrt(r)`).
    FrobeniusSum,
}

/// Hyperparameters shared by the coefficient solver, the dictionary
/// update and the alternation driver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Sparsity weight on `||X||_1`.
    pub beta: f64,
    /// Number of dictionary atoms `r`.
    pub atoms: usize,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Backtracking factor applied to the step constant on a failed
    /// majorization test.
    pub eta: f64,
    /// Relative objective change below which a loop stops.
    pub tol_obj: f64,
    pub seed: u64,
    /// KKT tolerance of the dual Newton solve.
    pub newton_tol: f64,
    pub max_newton: usize,
    pub lipschitz: LipschitzRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 0.1,
            atoms: 32,
            max_outer: 5,
            max_inner: 200,
            eta: 2.0,
            tol_obj: 1e-6,
            seed: 0,
            newton_tol: 1e-9,
            max_newton: 100,
            lipschitz: LipschitzRule::SpectralNorm,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if self.atoms == 0 {
            return bad("atom count must be positive".into());
        }
        if self.max_inner == 0 {
            return bad("max_inner must be positive".into());
        }
        if !(self.eta > 1.0 && self.eta.is_finite()) {
            return bad(format!("eta must exceed 1, got {}", self.eta));
        }
        if !(self.tol_obj > 0.0) {
            return bad(format!("tol_obj must be positive, got {}", self.tol_obj));
        }
        if !(self.newton_tol > 0.0) {
            return bad(format!(
                "newton_tol must be positive, got {}",
                self.newton_tol
            ));
        }
        if self.max_newton == 0 {
            return bad("max_newton must be positive".into());
        }
        Ok(())
    }
}

/// Iterate bookkeeping of one solve.
#[derive(Debug, Clone)]
pub struct IstaState {
    /// Latest iterate `X_p`.
    pub current: Tensor3,
    /// Iterate before it, `X_{p-1}`.
    pub previous: Tensor3,
    /// Extrapolation point `C_p` at which the next gradient is taken.
    pub extrapolated: Tensor3,
    /// Momentum scalar `t_p`; starts at 1 and never decreases.
    pub momentum: f64,
    /// Current step constant `L_p = eta^p * L_base`.
    pub lipschitz: f64,
    /// Number of completed iterations.
    pub iteration: usize,
    /// Number of backtracking multiplications applied so far.
    pub backtracks: u32,
}

/// Quantities of one accepted proximal step, kept for diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    /// `f(C_p)`.
    pub smooth_at_extrapolation: f64,
    /// Quadratic majorizer of `f` at `C_p` evaluated at the new iterate.
    pub majorizer: f64,
    /// `f(X_{p+1})`.
    pub smooth: f64,
    /// `f(X_{p+1}) + beta ||X_{p+1}||_1`.
    pub objective: f64,
    pub lipschitz: f64,
}

/// Result of [`ista_t_solve`].
#[derive(Debug, Clone)]
pub struct IstaOutcome {
    /// Lowest-objective iterate seen, including the warm start.
    pub coefficients: Tensor3,
    pub objective: f64,
    /// Best objective so far, starting with the warm start's objective.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub state: IstaState,
}

/// The dictionary prepared for repeated products: half spectrum plus the
/// base step constant.
pub struct CodingOperator {
    shape: Shape3,
    fft: TubeFft,
    dict: HalfSpectrum,
    lipschitz_base: f64,
}

impl CodingOperator {
    pub fn new(d: &Tensor3, rule: LipschitzRule) -> Result<Self> {
        if d.is_zero() {
            return Err(Error::ZeroDictionary);
        }
        let shape = d.shape();
        let fft = TubeFft::new(shape.tubes);
        let dict = fft.forward_half(d);
        let (m, r, k) = (shape.rows, shape.cols, shape.tubes);
        let lipschitz_base = match rule {
            LipschitzRule::SpectralNorm => (0..dict.slices())
                .map(|l| spectral_norm_sq(m, r, dict.slice(l)))
                .fold(0.0, f64::max),
            LipschitzRule::FrobeniusSum => frobenius_sum(&dict, m, r, k),
        };
        if !(lipschitz_base > 0.0) {
            return Err(Error::ZeroDictionary);
        }
        Ok(Self {
            shape,
            fft,
            dict,
            lipschitz_base,
        })
    }

    pub fn dictionary_shape(&self) -> Shape3 {
        self.shape
    }

    pub fn lipschitz_base(&self) -> f64 {
        self.lipschitz_base
    }

    /// `D^ X^` slice by slice.
    pub(crate) fn apply(&self, x: &HalfSpectrum) -> HalfSpectrum {
        let (m, r) = (self.shape.rows, self.shape.cols);
        let mut out = HalfSpectrum::zeros(Shape3::new(m, x.shape.cols, self.shape.tubes));
        for l in 0..out.slices() {
            gemm_nn(m, r, self.dict.slice(l), x.slice(l), out.slice_mut(l));
        }
        out
    }

    /// `D^^H R^` slice by slice.
    pub(crate) fn adjoint(&self, res: &HalfSpectrum) -> HalfSpectrum {
        let (m, r) = (self.shape.rows, self.shape.cols);
        let mut out = HalfSpectrum::zeros(Shape3::new(r, res.shape.cols, self.shape.tubes));
        for l in 0..out.slices() {
            gemm_hn(m, r, self.dict.slice(l), res.slice(l), out.slice_mut(l));
        }
        out
    }

    pub(crate) fn fft(&self) -> &TubeFft {
        &self.fft
    }

    /// `D * X` in the signal domain.
    pub fn product(&self, x: &Tensor3) -> Tensor3 {
        self.fft
            .inverse_half(&self.apply(&self.fft.forward_half(x)))
    }
}

fn frobenius_sum(dict: &HalfSpectrum, m: usize, r: usize, k: usize) -> f64 {
    (0..dict.slices())
        .map(|l| slice_weight(k, l) * gram_fro_norm(m, r, dict.slice(l)))
        .sum()
}

/// Full-spectrum energy of a half spectrum of a real tensor.
pub(crate) fn half_energy(h: &HalfSpectrum) -> f64 {
    let k = h.shape.tubes;
    (0..h.slices())
        .map(|l| slice_weight(k, l) * h.slice(l).iter().map(|c| c.norm_sqr()).sum::<f64>())
        .sum()
}

/// `a - b` on half spectra.
fn half_sub(a: &HalfSpectrum, b: &HalfSpectrum) -> HalfSpectrum {
    HalfSpectrum {
        shape: a.shape,
        data: a.data.iter().zip(&b.data).map(|(x, y)| x - y).collect(),
    }
}

/// `a + mu (a - b)` on half spectra.
fn half_extrapolate(a: &HalfSpectrum, b: &HalfSpectrum, mu: f64) -> HalfSpectrum {
    HalfSpectrum {
        shape: a.shape,
        data: a
            .data
            .iter()
            .zip(&b.data)
            .map(|(x, y)| x + (x - y) * mu)
            .collect(),
    }
}

fn check_shapes(y: &Tensor3, d: &Tensor3, x: &Tensor3, op: &'static str) -> Result<()> {
    if d.rows() != y.rows() || d.tubes() != y.tubes() {
        return Err(Error::shape(op, d.shape(), y.shape()));
    }
    if x.rows() != d.cols() || x.cols() != y.cols() || x.tubes() != y.tubes() {
        return Err(Error::shape(op, d.shape(), x.shape()));
    }
    Ok(())
}

/// Gradient of `f(C) = 1/2 ||Y - D * C||_F^2`, i.e. `D^T * (D * C - Y)`.
pub fn smooth_gradient(d: &Tensor3, y: &Tensor3, c: &Tensor3) -> Result<Tensor3> {
    check_shapes(y, d, c, "smooth_gradient")?;
    let fft = TubeFft::new(d.tubes());
    let dh = fft.forward_half(d);
    let ch = fft.forward_half(c);
    let yh = fft.forward_half(y);
    let (m, r) = (d.rows(), d.cols());
    let mut grad = HalfSpectrum::zeros(c.shape());
    let mut res = vec![Default::default(); m * c.cols()];
    for l in 0..grad.slices() {
        gemm_nn(m, r, dh.slice(l), ch.slice(l), &mut res);
        for (v, yv) in res.iter_mut().zip(yh.slice(l)) {
            *v -= yv;
        }
        gemm_hn(m, r, dh.slice(l), &res, grad.slice_mut(l));
    }
    Ok(fft.inverse_half(&grad))
}

/// Step constant `eta^p * sum_l ||D_l^H D_l||_F` over the `k` spectral
/// slices of `D`. Upper-bounds the curvature of the smooth term.
pub fn lipschitz_bound(d: &Tensor3, eta: f64, p: u32) -> Result<f64> {
    if d.is_zero() {
        return Err(Error::ZeroDictionary);
    }
    let s = d.shape();
    let dict = TubeFft::new(s.tubes).forward_half(d);
    Ok(eta.powi(p as i32) * frobenius_sum(&dict, s.rows, s.cols, s.tubes))
}

/// Elementwise `sign(a) * max(|a| - tau, 0)`: the proximal map of
/// `tau ||.||_1`.
pub fn soft_threshold(a: &Tensor3, tau: f64) -> Result<Tensor3> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "threshold must be nonnegative, got {tau}"
        )));
    }
    Ok(a.map(|v| shrink(v, tau)))
}

#[inline]
fn shrink(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

/// `1/2 ||Y - D * X||_F^2 + beta ||X||_1`.
pub fn objective(y: &Tensor3, d: &Tensor3, x: &Tensor3, beta: f64) -> Result<f64> {
    check_shapes(y, d, x, "objective")?;
    let fit = crate::tensor::tprod(d, x)?.sub(y)?.fro_norm_sq();
    Ok(0.5 * fit + beta * x.l1_norm())
}

/// Safety cap on backtracking multiplications within a single step.
const MAX_BACKTRACKS: u32 = 64;

/// Stateful solver for one coefficient subproblem.
pub struct IstaSolver<'a> {
    op: &'a CodingOperator,
    y: HalfSpectrum,
    beta: f64,
    eta: f64,
    k: f64,
    data_energy: f64,
    state: IstaState,
    // D^ applied to the current iterate and to the extrapolation point.
    dx_current: HalfSpectrum,
    dc: HalfSpectrum,
    objective: f64,
    best: Tensor3,
    best_objective: f64,
}

impl<'a> IstaSolver<'a> {
    pub fn new(
        op: &'a CodingOperator,
        y: &Tensor3,
        beta: f64,
        eta: f64,
        x0: Tensor3,
    ) -> Result<Self> {
        let ds = op.dictionary_shape();
        if ds.rows != y.rows() || ds.tubes != y.tubes() {
            return Err(Error::shape("ista_t_solve", ds, y.shape()));
        }
        if x0.rows() != ds.cols || x0.cols() != y.cols() || x0.tubes() != y.tubes() {
            return Err(Error::shape("ista_t_solve", ds, x0.shape()));
        }
        let fft = op.fft();
        let yh = fft.forward_half(y);
        let dx = if x0.is_zero() {
            HalfSpectrum::zeros(y.shape())
        } else {
            op.apply(&fft.forward_half(&x0))
        };
        let k = y.tubes() as f64;
        let smooth = half_energy(&half_sub(&dx, &yh)) / (2.0 * k);
        let objective = smooth + beta * x0.l1_norm();
        if !objective.is_finite() {
            return Err(Error::Divergence {
                iteration: 0,
                objective,
            });
        }
        Ok(Self {
            op,
            y: yh,
            beta,
            eta,
            k,
            data_energy: 0.5 * y.fro_norm_sq(),
            state: IstaState {
                previous: x0.clone(),
                extrapolated: x0.clone(),
                current: x0.clone(),
                momentum: 1.0,
                lipschitz: op.lipschitz_base(),
                iteration: 0,
                backtracks: 0,
            },
            dc: dx.clone(),
            dx_current: dx,
            objective,
            best: x0,
            best_objective: objective,
        })
    }

    pub fn state(&self) -> &IstaState {
        &self.state
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn best_objective(&self) -> f64 {
        self.best_objective
    }

    /// One proximal-gradient step from the extrapolation point, with
    /// backtracking on the quadratic majorization test.
    pub fn step(&mut self) -> Result<StepRecord> {
        let fft = self.op.fft();
        let residual = half_sub(&self.dc, &self.y);
        let smooth_c = half_energy(&residual) / (2.0 * self.k);
        let grad = fft.inverse_half(&self.op.adjoint(&residual));
        let c = &self.state.extrapolated;

        loop {
            let lip = self.state.lipschitz;
            let step = 1.0 / lip;
            let tau = self.beta / lip;
            let x_new = Tensor3::from_raw(
                c.shape(),
                c.as_slice()
                    .iter()
                    .zip(grad.as_slice())
                    .map(|(cv, gv)| shrink(cv - step * gv, tau))
                    .collect(),
            );
            let dx_new = if x_new.is_zero() {
                HalfSpectrum::zeros(self.y.shape)
            } else {
                self.op.apply(&fft.forward_half(&x_new))
            };
            let smooth = half_energy(&half_sub(&dx_new, &self.y)) / (2.0 * self.k);

            let (mut lin, mut quad) = (0.0, 0.0);
            for ((xv, cv), gv) in x_new
                .as_slice()
                .iter()
                .zip(c.as_slice())
                .zip(grad.as_slice())
            {
                let d = xv - cv;
                lin += gv * d;
                quad += d * d;
            }
            let majorizer = smooth_c + lin + 0.5 * lip * quad;
            // Rounding floor of residual energies evaluated near an exact fit.
            let slack = 1e-13 * (smooth_c + self.data_energy);
            if !smooth.is_finite() {
                return Err(Error::Divergence {
                    iteration: self.state.iteration + 1,
                    objective: smooth,
                });
            }
            if smooth > majorizer + slack {
                if self.state.backtracks >= MAX_BACKTRACKS {
                    return Err(Error::Numerical(format!(
                        "majorization still violated after {MAX_BACKTRACKS} backtracking steps"
                    )));
                }
                self.state.lipschitz *= self.eta;
                self.state.backtracks += 1;
                continue;
            }

            let objective = smooth + self.beta * x_new.l1_norm();
            if !objective.is_finite() {
                return Err(Error::Divergence {
                    iteration: self.state.iteration + 1,
                    objective,
                });
            }

            let t = self.state.momentum;
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let mu = (t - 1.0) / t_next;
            let extrapolated = Tensor3::from_raw(
                x_new.shape(),
                x_new
                    .as_slice()
                    .iter()
                    .zip(self.state.current.as_slice())
                    .map(|(a, b)| a + mu * (a - b))
                    .collect(),
            );
            self.dc = half_extrapolate(&dx_new, &self.dx_current, mu);
            self.dx_current = dx_new;

            if objective < self.best_objective {
                self.best_objective = objective;
                self.best = x_new.clone();
            }
            let previous = std::mem::replace(&mut self.state.current, x_new);
            self.state.previous = previous;
            self.state.extrapolated = extrapolated;
            self.state.momentum = t_next;
            self.state.iteration += 1;
            self.objective = objective;

            return Ok(StepRecord {
                smooth_at_extrapolation: smooth_c,
                majorizer,
                smooth,
                objective,
                lipschitz: lip,
            });
        }
    }

    /// Iterates until the relative objective change drops below `tol` or
    /// `max_iter` steps have run.
    pub fn run(mut self, max_iter: usize, tol: f64) -> Result<IstaOutcome> {
        let mut history = Vec::with_capacity(max_iter + 1);
        history.push(self.best_objective);
        let mut last = self.objective;
        for _ in 0..max_iter {
            let rec = self.step()?;
            history.push(self.best_objective);
            let change = (rec.objective - last).abs();
            last = rec.objective;
            if change <= tol * rec.objective.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        Ok(IstaOutcome {
            coefficients: self.best,
            objective: self.best_objective,
            history,
            iterations: self.state.iteration,
            state: self.state,
        })
    }
}

/// Solves the coefficient subproblem for dictionary `d` from warm start `x0`.
pub fn ista_t_solve(
    y: &Tensor3,
    d: &Tensor3,
    cfg: &SolverConfig,
    x0: Tensor3,
) -> Result<IstaOutcome> {
    cfg.validate()?;
    check_shapes(y, d, &x0, "ista_t_solve")?;
    let op = CodingOperator::new(d, cfg.lipschitz)?;
    ista_t_solve_with(&op, y, cfg, x0)
}

/// As [`ista_t_solve`] with a prepared operator.
pub fn ista_t_solve_with(
    op: &CodingOperator,
    y: &Tensor3,
    cfg: &SolverConfig,
    x0: Tensor3,
) -> Result<IstaOutcome> {
    IstaSolver::new(op, y, cfg.beta, cfg.eta, x0)?.run(cfg.max_inner, cfg.tol_obj)
}
