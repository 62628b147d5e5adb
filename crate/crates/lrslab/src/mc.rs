//! Non-convex matrix completion solvers driven by an observation mask.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{SolverTrace, TraceBuilder, TraceRecord};
use crate::error::{Error, Result};
use crate::linalg::{self, rank_trunc};
use crate::matrix::Matrix;

/// Iterate-norm cap relative to ||P_Omega(M)||_F: reaching it with a small
/// residual is the diverging outcome, not an error.
pub const NORM_CAP_REL: f64 = 1e8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    observed: Vec<bool>,
}

impl ObservationMask {
    pub fn full(rows: usize, cols: usize) -> Self {
        ObservationMask {
            rows,
            cols,
            observed: vec![true; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.observed[i * self.cols + j]
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&b| b).count()
    }

    /// Zero out the unobserved entries.
    pub fn project(&self, x: &Matrix) -> Matrix {
        assert_eq!((x.rows(), x.cols()), (self.rows, self.cols));
        let mut out = x.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                if !self.is_observed(i, j) {
                    out.set(i, j, 0.0);
                }
            }
        }
        out
    }

    pub fn observed_residual(&self, m: &Matrix, x: &Matrix) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.is_observed(i, j) {
                    acc += (m.get(i, j) - x.get(i, j)).powi(2);
                }
            }
        }
        acc.sqrt()
    }
}

/// Mask with everything observed except the listed entries. Indices must
/// be in range and distinct.
pub fn make_mask(rows: usize, cols: usize, missing: &[(usize, usize)]) -> Result<ObservationMask> {
    let mut mask = ObservationMask::full(rows, cols);
    for &(i, j) in missing {
        if i >= rows || j >= cols {
            return Err(Error::InvalidParameter(format!(
                "missing index ({}, {}) out of range for {}x{}",
                i, j, rows, cols
            )));
        }
        if !mask.observed[i * cols + j] {
            return Err(Error::InvalidParameter(format!(
                "duplicate missing index ({}, {})",
                i, j
            )));
        }
        mask.observed[i * cols + j] = false;
    }
    Ok(mask)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum McInit {
    /// Best rank-r approximation of the zero-filled observations.
    SpectralOfZeroFill,
    Given(Matrix),
    /// Spectral of the zero fill, then the (0,0) entry forced to 1.0 before
    /// re-truncation: deterministic, and honors the requirement that the
    /// initial guess not vanish at the missing corner.
    RandomNonzeroCorner,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    pub r: usize,
    pub max_iters: u64,
    /// Terminate when the observed residual drops below
    /// res_tol * ||P_Omega(M)||_F.
    pub res_tol: f64,
    pub init: McInit,
    /// LMaFit over-relaxation start value (>= 1).
    pub omega_sor: f64,
    /// Enable the LMaFit omega adaptation heuristic.
    pub omega_adapt: bool,
    /// CGIHT restarts when |cos| between successive gradients exceeds this.
    pub restart_angle: f64,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            r: 1,
            max_iters: 10_000,
            res_tol: 1e-9,
            init: McInit::SpectralOfZeroFill,
            omega_sor: 1.0,
            omega_adapt: true,
            restart_angle: 0.95,
            seed: 7,
        }
    }
}

impl McConfig {
    fn snapshot(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    fn validate(&self, m: &Matrix, mask: &ObservationMask) -> Result<()> {
        if (mask.rows(), mask.cols()) != (m.rows(), m.cols()) {
            return Err(Error::DimensionMismatch("mask shape".into()));
        }
        if mask.observed_count() == 0 {
            return Err(Error::InvalidParameter(
                "at least one observation required".into(),
            ));
        }
        if self.r < 1 || self.r > m.rows().min(m.cols()) {
            return Err(Error::InvalidParameter(format!(
                "rank {} out of range",
                self.r
            )));
        }
        if self.omega_sor < 1.0 {
            return Err(Error::InvalidParameter("omega_sor must be >= 1".into()));
        }
        Ok(())
    }

    fn initial_iterate(&self, m: &Matrix, mask: &ObservationMask) -> Result<Matrix> {
        let zero_fill = mask.project(m);
        match &self.init {
            McInit::SpectralOfZeroFill => rank_trunc(&zero_fill, self.r),
            McInit::Given(x0) => {
                if (x0.rows(), x0.cols()) != (m.rows(), m.cols()) {
                    return Err(Error::DimensionMismatch("init X0 shape".into()));
                }
                rank_trunc(x0, self.r)
            }
            McInit::RandomNonzeroCorner => {
                let mut x = rank_trunc(&zero_fill, self.r)?;
                x.set(0, 0, 1.0);
                rank_trunc(&x, self.r)
            }
        }
    }
}

fn mc_record(iter: u64, residual: f64, x: &Matrix) -> Result<TraceRecord> {
    Ok(TraceRecord {
        iter,
        residual,
        norm_l: x.frobenius(),
        norm_s: 0.0,
        rank_l: linalg::numerical_rank(x, linalg::RANK_REL_TOL)?,
        nnz_s: 0,
    })
}

fn factor_pair(x: &Matrix, r: usize) -> Result<(Matrix, Matrix)> {
    let dec = linalg::svd(x)?;
    let mut u = Matrix::zeros(x.rows(), r);
    let mut v = Matrix::zeros(x.cols(), r);
    for t in 0..r {
        let s = dec.singular_values.get(t).copied().unwrap_or(0.0).sqrt();
        for i in 0..x.rows() {
            u.set(i, t, dec.u.get(i, t) * s);
        }
        for j in 0..x.cols() {
            v.set(j, t, dec.v.get(j, t) * s);
        }
    }
    Ok((u, v))
}

/// Alternating steepest descent on f(U, V) = 1/2 ||P_Omega(M - U V^T)||^2
/// with an exact line search for each factor.
pub fn asd(m: &Matrix, mask: &ObservationMask, cfg: &McConfig) -> Result<SolverTrace> {
    cfg.validate(m, mask)?;
    let scale = mask.project(m).frobenius();
    let x0 = cfg.initial_iterate(m, mask)?;
    let (mut u, mut v) = factor_pair(&x0, cfg.r)?;
    let mut trace = TraceBuilder::new("asd", cfg.snapshot());
    let mut x = u.matmul(&v.transpose());
    trace.record(mc_record(0, mask.observed_residual(m, &x), &x)?);
    for t in 1..=cfg.max_iters {
        // U step
        let resid = mask.project(&m.sub(&u.matmul(&v.transpose())));
        let gu = resid.matmul(&v);
        let du = mask.project(&gu.matmul(&v.transpose()));
        let den = du.frobenius().powi(2);
        if den > 0.0 {
            let step = gu.frobenius().powi(2) / den;
            u = u.add(&gu.scale(step));
        }
        // V step
        let resid = mask.project(&m.sub(&u.matmul(&v.transpose())));
        let gv = resid.transpose().matmul(&u);
        let dv = mask.project(&u.matmul(&gv.transpose()));
        let den = dv.frobenius().powi(2);
        if den > 0.0 {
            let step = gv.frobenius().powi(2) / den;
            v = v.add(&gv.scale(step));
        }
        x = u.matmul(&v.transpose());
        let res = mask.observed_residual(m, &x);
        trace.record(mc_record(t, res, &x)?);
        if res <= cfg.res_tol * scale || x.frobenius() >= NORM_CAP_REL * scale {
            break;
        }
    }
    Ok(trace.finish())
}

/// Gradient of the ASD objective with respect to U (V fixed):
/// -P_Omega(M - U V^T) V.
pub fn asd_gradient_u(m: &Matrix, mask: &ObservationMask, u: &Matrix, v: &Matrix) -> Matrix {
    mask.project(&m.sub(&u.matmul(&v.transpose())))
        .matmul(v)
        .scale(-1.0)
}

/// Power factorization: alternating least squares over the observed
/// entries, row by row and column by column (minimum-norm local solves).
pub fn power_factorization(
    m: &Matrix,
    mask: &ObservationMask,
    cfg: &McConfig,
) -> Result<SolverTrace> {
    cfg.validate(m, mask)?;
    let scale = mask.project(m).frobenius();
    let x0 = cfg.initial_iterate(m, mask)?;
    let (mut u, mut v) = factor_pair(&x0, cfg.r)?;
    let mut trace = TraceBuilder::new("pf", cfg.snapshot());
    let mut x = u.matmul(&v.transpose());
    trace.record(mc_record(0, mask.observed_residual(m, &x), &x)?);
    for t in 1..=cfg.max_iters {
        als_sweep(m, mask, &mut u, &mut v, cfg.r)?;
        x = u.matmul(&v.transpose());
        let res = mask.observed_residual(m, &x);
        trace.record(mc_record(t, res, &x)?);
        if res <= cfg.res_tol * scale || x.frobenius() >= NORM_CAP_REL * scale {
            break;
        }
    }
    Ok(trace.finish())
}

fn als_sweep(
    m: &Matrix,
    mask: &ObservationMask,
    u: &mut Matrix,
    v: &mut Matrix,
    r: usize,
) -> Result<()> {
    let (rows, cols) = (m.rows(), m.cols());
    for i in 0..rows {
        let js: Vec<usize> = (0..cols).filter(|&j| mask.is_observed(i, j)).collect();
        if js.is_empty() {
            continue;
        }
        if r == 1 {
            let mut num = 0.0;
            let mut den = 0.0;
            for &j in &js {
                num += m.get(i, j) * v.get(j, 0);
                den += v.get(j, 0) * v.get(j, 0);
            }
            if den > 0.0 {
                u.set(i, 0, num / den);
            }
        } else {
            let vc = pick_rows(v, &js);
            let rhs = Matrix::from_vec(js.len(), 1, js.iter().map(|&j| m.get(i, j)).collect())
                .expect("finite");
            let sol = linalg::lstsq(&vc, &rhs)?;
            for t in 0..r {
                u.set(i, t, sol.get(t, 0));
            }
        }
    }
    for j in 0..cols {
        let is: Vec<usize> = (0..rows).filter(|&i| mask.is_observed(i, j)).collect();
        if is.is_empty() {
            continue;
        }
        if r == 1 {
            let mut num = 0.0;
            let mut den = 0.0;
            for &i in &is {
                num += m.get(i, j) * u.get(i, 0);
                den += u.get(i, 0) * u.get(i, 0);
            }
            if den > 0.0 {
                v.set(j, 0, num / den);
            }
        } else {
            let uc = pick_rows(u, &is);
            let rhs = Matrix::from_vec(is.len(), 1, is.iter().map(|&i| m.get(i, j)).collect())
                .expect("finite");
            let sol = linalg::lstsq(&uc, &rhs)?;
            for t in 0..r {
                v.set(j, t, sol.get(t, 0));
            }
        }
    }
    Ok(())
}

fn pick_rows(m: &Matrix, rows: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(rows.len(), m.cols());
    for (a, &i) in rows.iter().enumerate() {
        for j in 0..m.cols() {
            out.set(a, j, m.get(i, j));
        }
    }
    out
}

/// LMaFit: ALS against the fill variable Z = P_Omega(M) + P_Omega^c(U V^T),
/// with successive over-relaxation of the observed part controlled by the
/// residual ratio.
pub fn lmafit(m: &Matrix, mask: &ObservationMask, cfg: &McConfig) -> Result<SolverTrace> {
    cfg.validate(m, mask)?;
    let scale = mask.project(m).frobenius();
    let x0 = cfg.initial_iterate(m, mask)?;
    let (mut u, mut v) = factor_pair(&x0, cfg.r)?;
    let mut omega = cfg.omega_sor;
    let mut trace = TraceBuilder::new("lmafit", cfg.snapshot());
    let mut x = u.matmul(&v.transpose());
    let mut res_prev = mask.observed_residual(m, &x);
    trace.record(mc_record(0, res_prev, &x)?);
    let mut z = fill(m, mask, &x, omega);
    for t in 1..=cfg.max_iters {
        // full-matrix least squares against Z
        u = linalg::lstsq(&v, &z.transpose())?.transpose();
        v = linalg::lstsq(&u, &z)?.transpose();
        x = u.matmul(&v.transpose());
        let res = mask.observed_residual(m, &x);
        if cfg.omega_adapt {
            if res < res_prev {
                omega += 0.1 * (omega - 1.0 + 0.25);
            } else {
                omega = 1.0;
            }
        }
        res_prev = res;
        z = fill(m, mask, &x, omega);
        trace.record(mc_record(t, res, &x)?);
        if res <= cfg.res_tol * scale || x.frobenius() >= NORM_CAP_REL * scale {
            break;
        }
    }
    Ok(trace.finish())
}

/// Z = X + omega * P_Omega(M - X): observed entries relax toward the data,
/// unobserved entries carry the model.
fn fill(m: &Matrix, mask: &ObservationMask, x: &Matrix, omega: f64) -> Matrix {
    let mut z = x.clone();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if mask.is_observed(i, j) {
                z.set(i, j, x.get(i, j) + omega * (m.get(i, j) - x.get(i, j)));
            }
        }
    }
    z
}

/// CGIHT: conjugate-gradient iterative hard thresholding with restarts;
/// restart_angle = 0 restarts every step, which is plain NIHT.
pub fn cgiht(m: &Matrix, mask: &ObservationMask, cfg: &McConfig) -> Result<SolverTrace> {
    cfg.validate(m, mask)?;
    let scale = mask.project(m).frobenius();
    let mut x = cfg.initial_iterate(m, mask)?;
    let mut trace = TraceBuilder::new("cgiht", cfg.snapshot());
    let mut g = mask.project(&m.sub(&x));
    trace.record(mc_record(0, g.frobenius(), &x)?);
    let mut d = g.clone();
    for t in 1..=cfg.max_iters {
        let den = mask.project(&d).frobenius().powi(2);
        if den <= 0.0 {
            break;
        }
        let alpha = frob_dot(&g, &d) / den;
        x = rank_trunc(&x.add(&d.scale(alpha)), cfg.r)?;
        let gn = mask.project(&m.sub(&x));
        // Polak-Ribiere with a conjugacy restart test
        let gg = g.frobenius().powi(2);
        let mut beta = if gg > 0.0 {
            (frob_dot(&gn, &gn) - frob_dot(&gn, &g)) / gg
        } else {
            0.0
        };
        let cos = frob_dot(&gn, &g).abs() / (gn.frobenius() * g.frobenius()).max(1e-300);
        if beta < 0.0 || cos > cfg.restart_angle {
            beta = 0.0;
        }
        d = gn.add(&d.scale(beta));
        g = gn;
        let res = g.frobenius();
        trace.record(mc_record(t, res, &x)?);
        if res <= cfg.res_tol * scale || x.frobenius() >= NORM_CAP_REL * scale {
            break;
        }
    }
    Ok(trace.finish())
}

fn frob_dot(a: &Matrix, b: &Matrix) -> f64 {
    a.data()
        .iter()
        .zip(b.data().iter())
        .map(|(x, y)| x * y)
        .sum()
}
