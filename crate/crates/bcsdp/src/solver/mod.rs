//! Alternating-direction augmented Lagrangian solver for [`SdpModel`].
//!
//! Each iteration updates, in order, the equality multipliers `y`, the
//! inequality multipliers `v >= 0`, the dual slack `S ⪰ 0` and the primal
//! matrix `X`. Constraint blocks whose Gram matrix is diagonal or of the form
//! `aI + bJ` are updated in closed form; other blocks use a dense Cholesky
//! factor or coordinate descent.

mod kernel;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use kernel::{uniform_nonneg_qp, verify_structure, KernelKind, PreparedBlock, PreparedModel, SparseGram};

use crate::error::{Error, Result};
use crate::graph::Partition;
use crate::linalg::{project_psd, SymMatrix};
use crate::relax::{BoundSemantics, SdpModel, Transform};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative tolerance on primal infeasibility, dual infeasibility and gap.
    pub eps: f64,
    pub max_iter: usize,
    pub mu0: f64,
    /// Residual ratio that triggers a penalty change.
    pub mu_ratio: f64,
    /// Factor applied to the penalty on a change.
    pub mu_factor: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    /// Colouring used to build the starting point.
    pub warm_start: Option<Partition>,
    /// Emit one line per iteration on stderr.
    pub trace: bool,
    pub time_limit: Option<Duration>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps: 1e-5,
            max_iter: 20_000,
            mu0: 1.0,
            mu_ratio: 10.0,
            mu_factor: 2.0,
            mu_min: 1e-4,
            mu_max: 1e4,
            warm_start: None,
            trace: false,
            time_limit: None,
        }
    }
}

impl SolverConfig {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || self.max_iter == 0 || !(self.mu0 > 0.0) {
            return Err(Error::InvalidArgument(
                "solver needs eps > 0, max_iter >= 1 and mu0 > 0".into(),
            ));
        }
        if !(self.mu_ratio > 1.0) || !(self.mu_factor > 1.0) || !(self.mu_min > 0.0) || self.mu_min > self.mu_max {
            return Err(Error::InvalidArgument("invalid penalty adaptation settings".into()));
        }
        Ok(())
    }
}

/// ADMM iterates. `residual` is the dual residual
/// `A₁ᵀy₁ + A₂ᵀy₂ + Bᵀv + S - C` and is kept in sync by every update.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x: SymMatrix,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    pub v: Vec<f64>,
    pub s: SymMatrix,
    pub mu: f64,
    pub iteration: usize,
    residual: SymMatrix,
}

impl SolverState {
    /// State with the given primal point, zero multipliers and `S = 0`.
    pub fn new(prep: &PreparedModel, x: SymMatrix, mu: f64) -> Self {
        let mut state = SolverState {
            x,
            y1: vec![0.0; prep.y1_len()],
            y2: vec![0.0; prep.y2_len()],
            v: vec![0.0; prep.v_len()],
            s: SymMatrix::zeros(prep.dim),
            mu,
            iteration: 0,
            residual: SymMatrix::zeros(prep.dim),
        };
        state.sync(prep);
        state
    }

    /// Recomputes the dual residual from the multipliers (after editing
    /// `y1`, `y2`, `v` or `s` directly).
    pub fn sync(&mut self, prep: &PreparedModel) {
        let mut r = self.s.sub(&prep.c);
        if let Some(block) = &prep.edge_block {
            for (c, &y) in block.rows.iter().zip(&self.y1) {
                c.matrix.add_to(y, &mut r);
            }
        }
        for block in &prep.eq_blocks {
            for (c, &y) in block.rows.iter().zip(&self.y2[block.offset..]) {
                c.matrix.add_to(y, &mut r);
            }
        }
        for block in &prep.ineq_blocks {
            for (c, &v) in block.rows.iter().zip(&self.v[block.offset..]) {
                c.matrix.add_to(v, &mut r);
            }
        }
        self.residual = r;
    }

    pub fn dual_residual(&self) -> &SymMatrix {
        &self.residual
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    TimeLimit,
    Diverged,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Colouring-side value through the bound semantics.
    pub value: f64,
    /// Model objective `⟨C, X⟩` in the model's own sense.
    pub objective: f64,
    pub x: SymMatrix,
    pub residuals: Residuals,
    pub iterations: usize,
    pub status: SolveStatus,
    pub seconds: f64,
    pub eps: f64,
    pub state: SolverState,
}

/// Equality multiplier step for the edge block then every other equality
/// block, each solved exactly given the others.
pub fn update_y(state: &mut SolverState, prep: &PreparedModel) {
    let mu = state.mu;
    if let Some(block) = &prep.edge_block {
        block.update_equality(&mut state.y1, &state.x, &mut state.residual, mu);
    }
    for block in &prep.eq_blocks {
        let range = block.offset..block.offset + block.len();
        block.update_equality(&mut state.y2[range], &state.x, &mut state.residual, mu);
    }
}

/// Inequality multiplier step: a nonnegative QP per block.
pub fn update_v(state: &mut SolverState, prep: &PreparedModel) {
    let mu = state.mu;
    for block in &prep.ineq_blocks {
        let range = block.offset..block.offset + block.len();
        block.update_inequality(&mut state.v[range], &state.x, &mut state.residual, mu);
    }
}

/// `S = proj_psd(C - A₁ᵀy₁ - A₂ᵀy₂ - Bᵀv - μX)`.
pub fn update_s(state: &mut SolverState) -> &SymMatrix {
    let mut base = state.residual.sub(&state.s);
    let mut arg = base.scaled(-1.0);
    arg.axpy(-state.mu, &state.x);
    state.s = project_psd(&arg);
    base.axpy(1.0, &state.s);
    state.residual = base;
    &state.s
}

/// `X ← X + (A₁ᵀy₁ + A₂ᵀy₂ + Bᵀv + S - C)/μ`.
pub fn update_x(state: &mut SolverState) -> &SymMatrix {
    let step = 1.0 / state.mu;
    state.x.axpy(step, &state.residual);
    &state.x
}

fn residuals(state: &SolverState, prep: &PreparedModel) -> Residuals {
    let mut primal_sq = 0.0;
    let mut dual_obj = 0.0;
    let eq = prep.edge_block.iter().map(|b| (b, &state.y1[..])).chain(
        prep.eq_blocks
            .iter()
            .map(|b| (b, &state.y2[b.offset..b.offset + b.len()])),
    );
    for (block, y) in eq {
        for (c, &yi) in block.rows.iter().zip(y) {
            let r = c.matrix.dot(&state.x) - c.rhs;
            primal_sq += r * r;
            dual_obj += c.rhs * yi;
        }
    }
    for block in &prep.ineq_blocks {
        for (c, &vi) in block.rows.iter().zip(&state.v[block.offset..]) {
            let r = (c.matrix.dot(&state.x) - c.rhs).min(0.0);
            primal_sq += r * r;
            dual_obj += c.rhs * vi;
        }
    }
    let primal_obj = prep.c.dot(&state.x);
    Residuals {
        primal: primal_sq.sqrt() / (1.0 + prep.rhs_norm),
        dual: state.residual.frobenius_norm() / (1.0 + prep.c_norm),
        gap: (primal_obj - dual_obj).abs() / (1.0 + primal_obj.abs() + dual_obj.abs()),
    }
}

/// Starting point: the block-indicator matrix of `warm` when it fits the
/// model, otherwise a feasible-leaning scaled identity.
pub fn initial_point(model: &SdpModel, sem: &BoundSemantics, warm: Option<&Partition>) -> SymMatrix {
    let dim = model.dim;
    let n = match sem.transform {
        Transform::Scaled => dim,
        Transform::Rewritten => dim / 2,
        Transform::Direct => return SymMatrix::identity(dim).scaled(1.0 / dim.max(1) as f64),
    };
    let y = match warm.filter(|p| covers(p, n) && (sem.transform != Transform::Rewritten || dim == 2 * n)) {
        Some(part) => {
            let k = part.len() as f64;
            let mut y = SymMatrix::zeros(n);
            for class in &part.classes {
                for &u in class {
                    for &v in class {
                        y.set(u, v, k);
                    }
                }
            }
            y
        }
        None => SymMatrix::identity(n).scaled(n as f64),
    };
    let shifted = y.sub(&SymMatrix::ones(n));
    match sem.transform {
        Transform::Scaled => shifted,
        _ => {
            let mut x = SymMatrix::zeros(dim);
            for i in 0..n {
                for j in i..n {
                    x.set(i, j, y.get(i, j));
                    x.set(n + i, n + j, shifted.get(i, j));
                }
            }
            x
        }
    }
}

fn covers(part: &Partition, n: usize) -> bool {
    let mut seen = vec![false; n];
    for &v in part.classes.iter().flatten() {
        if v >= n || seen[v] {
            return false;
        }
        seen[v] = true;
    }
    seen.into_iter().all(|s| s)
}

/// Runs the ADMM iteration until the relative residuals drop below
/// `cfg.eps`, the iteration or time budget runs out, or the residuals blow up.
pub fn solve(model: &SdpModel, sem: &BoundSemantics, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    if !model.is_well_formed() {
        return Err(Error::InvalidArgument(
            "model has out-of-range constraint entries".into(),
        ));
    }
    debug_assert!(verify_structure(model).is_empty(), "structure tags do not hold");
    let start = Instant::now();
    let prep = PreparedModel::new(model);
    let x0 = initial_point(model, sem, cfg.warm_start.as_ref());
    let mut state = SolverState::new(&prep, x0, cfg.mu0);
    let mut status = SolveStatus::MaxIter;
    let mut res = Residuals::default();
    let mut best = f64::INFINITY;
    let mut since_change = 0usize;
    let mut ratio_log = 0.0;

    for it in 1..=cfg.max_iter {
        update_y(&mut state, &prep);
        update_v(&mut state, &prep);
        update_s(&mut state);
        update_x(&mut state);
        state.iteration = it;

        res = residuals(&state, &prep);
        let worst = res.primal.max(res.dual);
        if cfg.trace {
            eprintln!(
                "iter={it} primal={:.3e} dual={:.3e} gap={:.3e} mu={:.3e} value={:.8}",
                res.primal,
                res.dual,
                res.gap,
                state.mu,
                sem.value(prep.sign * prep.c.dot(&state.x))
            );
        }
        if !worst.is_finite() || state.x.check_finite().is_err() {
            status = SolveStatus::Diverged;
            break;
        }
        best = best.min(worst);
        if it > 50 && worst > 1e6 * best.max(1e-300) {
            status = SolveStatus::Diverged;
            break;
        }
        if res.max() <= cfg.eps {
            status = SolveStatus::Converged;
            break;
        }
        if cfg.time_limit.is_some_and(|t| start.elapsed() >= t) {
            status = SolveStatus::TimeLimit;
            break;
        }

        // penalty adaptation on a smoothed log residual ratio
        let ratio = (res.primal.max(1e-300) / res.dual.max(1e-300)).ln();
        ratio_log = 0.8 * ratio_log + 0.2 * ratio;
        since_change += 1;
        if since_change >= 10 {
            let limit = cfg.mu_ratio.ln();
            let mu_old = state.mu;
            if ratio_log > limit {
                state.mu = (state.mu * cfg.mu_factor).min(cfg.mu_max);
            } else if ratio_log < -limit {
                state.mu = (state.mu / cfg.mu_factor).max(cfg.mu_min);
            }
            if state.mu != mu_old {
                since_change = 0;
                ratio_log = 0.0;
            }
        }
    }

    let objective = prep.sign * prep.c.dot(&state.x);
    Ok(SolveResult {
        value: sem.value(objective),
        objective,
        x: state.x.clone(),
        residuals: res,
        iterations: state.iteration,
        status,
        seconds: start.elapsed().as_secs_f64(),
        eps: cfg.eps,
        state,
    })
}

/// Real bound and its safeguarded ceiling
/// `⌈bound - 10·eps·max(1, |bound|)⌉`.
pub fn extract_bound(result: &SolveResult) -> Result<(f64, i64)> {
    if result.status == SolveStatus::Diverged {
        return Err(Error::Diverged {
            iterations: result.iterations,
        });
    }
    Ok((result.value, certify(result.value, result.eps)))
}

pub fn certify(bound: f64, eps: f64) -> i64 {
    let guard = 10.0 * eps * bound.abs().max(1.0);
    (bound - guard).ceil() as i64
}
