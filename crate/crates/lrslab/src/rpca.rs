//! Robust PCA solvers: four non-convex methods that chase a prescribed
//! (r, s) decomposition and two convex relaxations, all emitting uniform
//! traces.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{make_record, SolverTrace, TraceBuilder};
use crate::error::{Error, Result};
use crate::linalg::{self, hard_threshold, rank_trunc, soft_threshold, sv_threshold, svd};
use crate::matrix::Matrix;
use crate::rng::SplitMix64;

/// Component norms above this multiple of ||M||_F stop a solver; the trace
/// stays finite and the classifier reads the capped run.
pub const NORM_CAP_REL: f64 = 1e8;

/// Default convex regularization weight 1/sqrt(max(m, n)).
pub fn default_lambda(rows: usize, cols: usize) -> f64 {
    1.0 / (rows.max(cols) as f64).sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum RpcaInit {
    /// L0 = best rank-r approximation of M, S0 = keep-s of the remainder.
    SpectralDefault,
    Zero,
    Given {
        l0: Matrix,
        s0: Matrix,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RpcaConfig {
    pub r: usize,
    pub s: usize,
    pub max_iters: u64,
    /// Terminate when the residual drops below res_tol * ||M||_F.
    pub res_tol: f64,
    /// Convex solvers: l1 weight. FastGD: sparse-estimator control, with
    /// keep-fraction 1/lambda^2 per row and column.
    pub lambda: Option<f64>,
    /// FastGD step size.
    pub eta: f64,
    /// AltProj threshold control.
    pub beta: f64,
    /// Power/bilateral sweeps for the GoDec low-rank projection;
    /// 0 requests the exact SVD truncation instead.
    pub godec_power_iters: usize,
    pub init: RpcaInit,
    pub seed: u64,
}

impl Default for RpcaConfig {
    fn default() -> Self {
        RpcaConfig {
            r: 1,
            s: 1,
            max_iters: 10_000,
            res_tol: 1e-9,
            lambda: None,
            eta: 1.0 / 6.0,
            beta: 0.35,
            godec_power_iters: 10,
            init: RpcaInit::SpectralDefault,
            seed: 7,
        }
    }
}

impl RpcaConfig {
    fn snapshot(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    fn validate(&self, m: &Matrix) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if self.res_tol < 0.0 {
            return Err(Error::InvalidParameter(
                "res_tol must be nonnegative".into(),
            ));
        }
        if self.r > m.rows().min(m.cols()) {
            return Err(Error::InvalidParameter(format!(
                "r = {} exceeds min dimension {}",
                self.r,
                m.rows().min(m.cols())
            )));
        }
        Ok(())
    }

    fn initial_split(&self, m: &Matrix) -> Result<(Matrix, Matrix)> {
        match &self.init {
            RpcaInit::SpectralDefault => {
                let l0 = rank_trunc(m, self.r)?;
                let s0 = hard_threshold(&m.sub(&l0), self.s);
                Ok((l0, s0))
            }
            RpcaInit::Zero => Ok((
                Matrix::zeros(m.rows(), m.cols()),
                Matrix::zeros(m.rows(), m.cols()),
            )),
            RpcaInit::Given { l0, s0 } => {
                if l0.rows() != m.rows() || l0.cols() != m.cols() {
                    return Err(Error::DimensionMismatch("init L0 shape".into()));
                }
                if s0.rows() != m.rows() || s0.cols() != m.cols() {
                    return Err(Error::DimensionMismatch("init S0 shape".into()));
                }
                Ok((l0.clone(), s0.clone()))
            }
        }
    }
}

fn residual(m: &Matrix, l: &Matrix, s: &Matrix) -> f64 {
    m.sub(l).sub(s).frobenius()
}

/// GoDec: alternate a rank-r projection of M - S (power scheme) with a
/// keep-s hard threshold of M - L.
pub fn godec(m: &Matrix, cfg: &RpcaConfig) -> Result<SolverTrace> {
    cfg.validate(m)?;
    let mut rng = SplitMix64::new(cfg.seed);
    let scale = m.frobenius();
    let (mut l, mut s) = cfg.initial_split(m)?;
    let mut trace = TraceBuilder::new("godec", cfg.snapshot());
    trace.record(make_record(0, residual(m, &l, &s), &l, &s)?);
    for t in 1..=cfg.max_iters {
        let x = m.sub(&s);
        l = if cfg.godec_power_iters == 0 {
            rank_trunc(&x, cfg.r)?
        } else {
            power_rank_approx(&x, cfg.r, cfg.godec_power_iters, &mut rng)?
        };
        s = hard_threshold(&m.sub(&l), cfg.s);
        let res = residual(m, &l, &s);
        trace.record(make_record(t, res, &l, &s)?);
        if res <= cfg.res_tol * scale || l.frobenius().max(s.frobenius()) >= NORM_CAP_REL * scale {
            break;
        }
    }
    Ok(trace.finish())
}

/// Rank-r approximation by the bilateral power scheme: q passes of
/// X (X^T Y) from a seeded Gaussian start, then a QR range projection.
fn power_rank_approx(x: &Matrix, r: usize, q: usize, rng: &mut SplitMix64) -> Result<Matrix> {
    if r == 0 {
        return Ok(Matrix::zeros(x.rows(), x.cols()));
    }
    let n = x.cols();
    let g = Matrix::from_vec(n, r, (0..n * r).map(|_| rng.gaussian()).collect())
        .expect("finite gaussians");
    let mut y = x.matmul(&g);
    let xt = x.transpose();
    for _ in 0..q {
        y = x.matmul(&xt.matmul(&y));
        // renormalize columns so repeated powers do not overflow
        for j in 0..y.cols() {
            let ynorm: f64 = (0..y.rows())
                .map(|i| y.get(i, j).powi(2))
                .sum::<f64>()
                .sqrt();
            if ynorm > 0.0 {
                for i in 0..y.rows() {
                    y.set(i, j, y.get(i, j) / ynorm);
                }
            }
        }
    }
    let qmat = gram_schmidt(&y, rng);
    // L = Q Q^T X
    Ok(qmat.matmul(&qmat.transpose().matmul(x)))
}

/// Orthonormalize columns (two passes); degenerate columns are re-seeded
/// deterministically from the stream.
fn gram_schmidt(y: &Matrix, rng: &mut SplitMix64) -> Matrix {
    let (m, r) = (y.rows(), y.cols());
    let mut q = y.clone();
    for j in 0..r {
        for _pass in 0..2 {
            for k in 0..j {
                let dot: f64 = (0..m).map(|i| q.get(i, j) * q.get(i, k)).sum();
                for i in 0..m {
                    q.set(i, j, q.get(i, j) - dot * q.get(i, k));
                }
            }
        }
        let mut norm: f64 = (0..m).map(|i| q.get(i, j).powi(2)).sum::<f64>().sqrt();
        while norm < 1e-100 {
            for i in 0..m {
                q.set(i, j, rng.gaussian());
            }
            for k in 0..j {
                let dot: f64 = (0..m).map(|i| q.get(i, j) * q.get(i, k)).sum();
                for i in 0..m {
                    q.set(i, j, q.get(i, j) - dot * q.get(i, k));
                }
            }
            norm = (0..m).map(|i| q.get(i, j).powi(2)).sum::<f64>().sqrt();
        }
        for i in 0..m {
            q.set(i, j, q.get(i, j) / norm);
        }
    }
    q
}

/// AltMin: alternating least squares on the factors of L with a keep-s
/// hard threshold refit of S after each sweep.
pub fn altmin(m: &Matrix, cfg: &RpcaConfig) -> Result<SolverTrace> {
    cfg.validate(m)?;
    if cfg.r == 0 {
        return Err(Error::InvalidParameter("altmin needs r >= 1".into()));
    }
    let scale = m.frobenius();
    let (l0, mut s) = cfg.initial_split(m)?;
    let (mut u, mut v) = balanced_factors(&l0, cfg.r)?;
    let mut trace = TraceBuilder::new("altmin", cfg.snapshot());
    let mut l = u.matmul(&v.transpose());
    trace.record(make_record(0, residual(m, &l, &s), &l, &s)?);
    for t in 1..=cfg.max_iters {
        let x = m.sub(&s);
        // U <- argmin ||X - U V^T||, then V likewise (minimum-norm solves)
        u = linalg::lstsq(&v, &x.transpose())?.transpose();
        v = linalg::lstsq(&u, &x)?.transpose();
        l = u.matmul(&v.transpose());
        s = hard_threshold(&m.sub(&l), cfg.s);
        let res = residual(m, &l, &s);
        trace.record(make_record(t, res, &l, &s)?);
        if res <= cfg.res_tol * scale || l.frobenius().max(s.frobenius()) >= NORM_CAP_REL * scale {
            break;
        }
    }
    Ok(trace.finish())
}

/// Balanced rank-r factors of a matrix: U = U_r sqrt(S_r), V = V_r sqrt(S_r).
fn balanced_factors(l: &Matrix, r: usize) -> Result<(Matrix, Matrix)> {
    let dec = svd(l)?;
    let mut u = Matrix::zeros(l.rows(), r);
    let mut v = Matrix::zeros(l.cols(), r);
    for t in 0..r {
        let s = dec.singular_values.get(t).copied().unwrap_or(0.0).sqrt();
        for i in 0..l.rows() {
            u.set(i, t, dec.u.get(i, t) * s);
        }
        for j in 0..l.cols() {
            v.set(j, t, dec.v.get(j, t) * s);
        }
    }
    Ok((u, v))
}

/// AltProj: stagewise rank k = 1..r with an adaptive entrywise threshold
/// zeta = beta (sigma_{k+1}(M - S) + 2^{-i} sigma_k(M - S)); the sparsity
/// of S is emergent, not prescribed.
pub fn altproj(m: &Matrix, cfg: &RpcaConfig) -> Result<SolverTrace> {
    cfg.validate(m)?;
    if cfg.beta <= 0.0 {
        return Err(Error::InvalidParameter("beta must be positive".into()));
    }
    if cfg.r == 0 {
        return Err(Error::InvalidParameter("altproj needs r >= 1".into()));
    }
    let scale = m.frobenius();
    let mut s = Matrix::zeros(m.rows(), m.cols());
    let mut l = Matrix::zeros(m.rows(), m.cols());
    let mut trace = TraceBuilder::new("altproj", cfg.snapshot());
    trace.record(make_record(0, residual(m, &l, &s), &l, &s)?);
    let per_stage = (cfg.max_iters / cfg.r as u64).max(1);
    let mut t = 0u64;
    'stages: for k in 1..=cfg.r {
        for i in 0..per_stage {
            t += 1;
            let work = m.sub(&s);
            let dec = svd(&work)?;
            let sig_k = dec.singular_values.get(k - 1).copied().unwrap_or(0.0);
            let sig_k1 = dec.singular_values.get(k).copied().unwrap_or(0.0);
            let zeta = cfg.beta * (sig_k1 + 0.5f64.powi(i.min(1100) as i32) * sig_k);
            // rank-k truncation from the decomposition already at hand
            l = Matrix::zeros(m.rows(), m.cols());
            for comp in 0..k.min(dec.singular_values.len()) {
                let sv = dec.singular_values[comp];
                if sv == 0.0 {
                    break;
                }
                for ii in 0..m.rows() {
                    let us = dec.u.get(ii, comp) * sv;
                    for jj in 0..m.cols() {
                        l.set(ii, jj, l.get(ii, jj) + us * dec.v.get(jj, comp));
                    }
                }
            }
            let d = m.sub(&l);
            let mut snew = Matrix::zeros(m.rows(), m.cols());
            for ii in 0..m.rows() {
                for jj in 0..m.cols() {
                    let x = d.get(ii, jj);
                    if x.abs() > zeta {
                        snew.set(ii, jj, x);
                    }
                }
            }
            s = snew;
            let res = residual(m, &l, &s);
            trace.record(make_record(t, res, &l, &s)?);
            if res <= cfg.res_tol * scale
                || l.frobenius().max(s.frobenius()) >= NORM_CAP_REL * scale
                || t >= cfg.max_iters
            {
                break 'stages;
            }
        }
    }
    Ok(trace.finish())
}

/// FastGD sparse estimator: keep entries ranking in the top ceil(gamma * n)
/// of their row and the top ceil(gamma * m) of their column by magnitude
/// (row-major tie-break), gamma = 1 / lambda^2.
pub fn fastgd_sparse_estimate(x: &Matrix, lambda: f64) -> Matrix {
    let gamma = 1.0 / (lambda * lambda);
    let keep_in_row = ((x.cols() as f64 * gamma).ceil() as usize).max(1);
    let keep_in_col = ((x.rows() as f64 * gamma).ceil() as usize).max(1);
    let (m, n) = (x.rows(), x.cols());
    let mut row_ok = vec![false; m * n];
    let mut col_ok = vec![false; m * n];
    for i in 0..m {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            x.get(i, b)
                .abs()
                .partial_cmp(&x.get(i, a).abs())
                .unwrap()
                .then(a.cmp(&b))
        });
        for &j in order.iter().take(keep_in_row) {
            row_ok[i * n + j] = true;
        }
    }
    for j in 0..n {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            x.get(b, j)
                .abs()
                .partial_cmp(&x.get(a, j).abs())
                .unwrap()
                .then(a.cmp(&b))
        });
        for &i in order.iter().take(keep_in_col) {
            col_ok[i * n + j] = true;
        }
    }
    let mut out = Matrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            if row_ok[i * n + j] && col_ok[i * n + j] {
                out.set(i, j, x.get(i, j));
            }
        }
    }
    out
}

/// Gradient of the smooth part of the FastGD objective
/// f = 1/2 ||U V^T + S - M||_F^2 + 1/8 ||U^T U - V^T V||_F^2.
pub fn fastgd_gradient(m: &Matrix, s: &Matrix, u: &Matrix, v: &Matrix) -> (Matrix, Matrix) {
    let e = u.matmul(&v.transpose()).add(s).sub(m);
    let d = u.transpose().matmul(u).sub(&v.transpose().matmul(v));
    let gu = e.matmul(v).add(&u.matmul(&d).scale(0.5));
    let gv = e.transpose().matmul(u).sub(&v.matmul(&d).scale(0.5));
    (gu, gv)
}

/// Factorized gradient descent with the top-fraction sparse estimator.
pub fn fastgd(m: &Matrix, cfg: &RpcaConfig) -> Result<SolverTrace> {
    cfg.validate(m)?;
    if cfg.eta <= 0.0 {
        return Err(Error::InvalidParameter("eta must be positive".into()));
    }
    if cfg.r == 0 {
        return Err(Error::InvalidParameter("fastgd needs r >= 1".into()));
    }
    let lambda = cfg.lambda.unwrap_or(3.23);
    if lambda <= 0.0 {
        return Err(Error::InvalidParameter("lambda must be positive".into()));
    }
    let scale = m.frobenius();
    let (l0, s0) = cfg.initial_split(m)?;
    let (mut u, mut v) = balanced_factors(&l0, cfg.r)?;
    let mut s = s0;
    let mut trace = TraceBuilder::new("fastgd", cfg.snapshot());
    let mut l = u.matmul(&v.transpose());
    trace.record(make_record(0, residual(m, &l, &s), &l, &s)?);
    for t in 1..=cfg.max_iters {
        s = fastgd_sparse_estimate(&m.sub(&u.matmul(&v.transpose())), lambda);
        let (gu, gv) = fastgd_gradient(m, &s, &u, &v);
        let un = u.sub(&gu.scale(cfg.eta));
        let vn = v.sub(&gv.scale(cfg.eta));
        if !un.data().iter().all(|x| x.is_finite()) || !vn.data().iter().all(|x| x.is_finite()) {
            break; // fixed-step overflow: stop at the last finite iterate
        }
        u = un;
        v = vn;
        l = u.matmul(&v.transpose());
        let res = residual(m, &l, &s);
        trace.record(make_record(t, res, &l, &s)?);
        if res <= cfg.res_tol * scale || l.frobenius().max(s.frobenius()) >= NORM_CAP_REL * scale {
            break;
        }
    }
    Ok(trace.finish())
}

/// Principal component pursuit by alternating directions with a fixed
/// penalty: min ||L||_* + lambda ||S||_1 s.t. M = L + S.
pub fn pcp_admm(
    m: &Matrix,
    lambda: f64,
    cfg: &RpcaConfig,
) -> Result<(Matrix, Matrix, SolverTrace)> {
    convex_solver(m, lambda, cfg, false)
}

/// Inexact augmented Lagrangian: the same splitting with a geometrically
/// increasing penalty mu_{k+1} = 1.5 mu_k, clamped at 1e3 mu_0 so late
/// iterations keep refining the objective instead of freezing.
pub fn ialm(m: &Matrix, lambda: f64, cfg: &RpcaConfig) -> Result<(Matrix, Matrix, SolverTrace)> {
    convex_solver(m, lambda, cfg, true)
}

const IALM_RHO: f64 = 1.5;
const IALM_MU_CAP: f64 = 1e3;

fn convex_solver(
    m: &Matrix,
    lambda: f64,
    cfg: &RpcaConfig,
    inexact: bool,
) -> Result<(Matrix, Matrix, SolverTrace)> {
    cfg.validate(m)?;
    if lambda <= 0.0 {
        return Err(Error::InvalidParameter("lambda must be positive".into()));
    }
    let scale = m.frobenius();
    let name = if inexact { "ialm" } else { "pcp" };
    let mut trace = TraceBuilder::new(name, cfg.snapshot());
    let sigma1 = svd(m)?.sigma1();
    if sigma1 == 0.0 {
        let z = Matrix::zeros(m.rows(), m.cols());
        trace.record(make_record(0, 0.0, &z, &z)?);
        return Ok((z.clone(), z, trace.finish()));
    }
    let mu0 = 1.25 / sigma1;
    let mut mu = mu0;
    let mut y = Matrix::zeros(m.rows(), m.cols());
    let mut s = Matrix::zeros(m.rows(), m.cols());
    let mut l = Matrix::zeros(m.rows(), m.cols());
    trace.record(make_record(0, residual(m, &l, &s), &l, &s)?);
    for t in 1..=cfg.max_iters {
        l = sv_threshold(&m.sub(&s).add(&y.scale(1.0 / mu)), 1.0 / mu)?;
        s = soft_threshold(&m.sub(&l).add(&y.scale(1.0 / mu)), lambda / mu);
        let z = m.sub(&l).sub(&s);
        y = y.add(&z.scale(mu));
        if inexact {
            mu = (mu * IALM_RHO).min(IALM_MU_CAP * mu0);
        }
        let res = z.frobenius();
        trace.record(make_record(t, res, &l, &s)?);
        if res <= cfg.res_tol * scale {
            break;
        }
    }
    Ok((l, s, trace.finish()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvexSolver {
    Pcp,
    Ialm,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    #[serde(rename = "rank_L")]
    pub rank_l: usize,
    #[serde(rename = "nnz_S")]
    pub nnz_s: usize,
    #[serde(rename = "nuclear_L")]
    pub nuclear_l: f64,
    #[serde(rename = "l1_S")]
    pub l1_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepTable {
    pub solver: ConvexSolver,
    pub rows: Vec<SweepRow>,
    /// Per-lambda failures; the sweep continues past them.
    pub errors: Vec<(f64, String)>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,rank_L,nnz_S,nuclear_L,l1_S\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.lambda, r.rank_l, r.nnz_s, r.nuclear_l, r.l1_s
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Solve the convex relaxation across a lambda grid. Rank is read at 1e-6
/// relative, sparsity at 1e-6 ||M||_F absolute.
pub fn lambda_sweep(
    m: &Matrix,
    lambdas: &[f64],
    solver: ConvexSolver,
    cfg: &RpcaConfig,
) -> Result<SweepTable> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("empty lambda grid".into()));
    }
    let scale = m.frobenius();
    let outcomes: Vec<(f64, Result<SweepRow>)> = lambdas
        .par_iter()
        .map(|&lam| {
            let solve = match solver {
                ConvexSolver::Pcp => pcp_admm(m, lam, cfg),
                ConvexSolver::Ialm => ialm(m, lam, cfg),
            };
            let row = solve.and_then(|(l, s, _)| {
                Ok(SweepRow {
                    lambda: lam,
                    rank_l: linalg::numerical_rank(&l, 1e-6)?,
                    nnz_s: s.nnz(1e-6 * scale),
                    nuclear_l: linalg::norms(&l)?.nuclear,
                    l1_s: s.data().iter().map(|x| x.abs()).sum(),
                })
            });
            (lam, row)
        })
        .collect();
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (lam, outcome) in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) => errors.push((lam, e.to_string())),
        }
    }
    Ok(SweepTable {
        solver,
        rows,
        errors,
    })
}
