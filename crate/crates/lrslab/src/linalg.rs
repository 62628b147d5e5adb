//! Numeric kernels: one-sided Jacobi SVD, low-rank truncation, sparsity
//! projections, thresholding, norms, coherence.
//!
//! Problem sizes in this crate stay small (n <= 50), so a one-sided Jacobi
//! sweep is accurate and fast enough; it also delivers high relative
//! accuracy for the badly scaled matrices the constructions produce
//! (entries spanning 1 to 1/epsilon).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Default relative tolerance for numerical rank detection. Sits far below
/// the epsilon schedule (>= 1e-6) used by the constructions.
pub const RANK_REL_TOL: f64 = 1e-9;

/// Default absolute tolerance for l0 counting.
pub const L0_ABS_TOL: f64 = 1e-12;

const JACOBI_SWEEP_BUDGET: usize = 64;

/// Thin SVD: U (m x k), nonincreasing singular values (k), V (n x k),
/// k = min(m, n).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvdResult {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let k = self.singular_values.len();
        let mut scaled = self.u.clone();
        for j in 0..k {
            for i in 0..scaled.rows() {
                scaled.set(i, j, self.u.get(i, j) * self.singular_values[j]);
            }
        }
        scaled.matmul(&self.v.transpose())
    }

    /// sigma_1, or 0 for an empty spectrum.
    pub fn sigma1(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }
}

/// One-sided Jacobi SVD.
pub fn svd(m: &Matrix) -> Result<SvdResult> {
    for (k, &x) in m.data().iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFinite {
                row: k / m.cols().max(1),
                col: k % m.cols().max(1),
            });
        }
    }
    // Work on a tall matrix so the rotations act on the short dimension.
    if m.rows() < m.cols() {
        let r = svd(&m.transpose())?;
        return Ok(SvdResult {
            u: r.v,
            singular_values: r.singular_values,
            v: r.u,
        });
    }

    let rows = m.rows();
    let n = m.cols();
    let mut a = m.clone(); // columns get rotated in place
    let mut v = Matrix::identity(n);

    let eps = 1e-15;
    // Columns this far below the dominant one are numerical residue of rank
    // deficiency: the scale-invariant pair test would chase them forever.
    let col_zero_rel = 1e-30;
    let mut converged = false;
    for _ in 0..JACOBI_SWEEP_BUDGET {
        let mut max_alpha = 0.0f64;
        for p in 0..n {
            let col: f64 = (0..rows).map(|i| a.get(i, p).powi(2)).sum();
            max_alpha = max_alpha.max(col);
        }
        let cut = max_alpha * col_zero_rel * col_zero_rel;
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..rows {
                    let ap = a.get(i, p);
                    let aq = a.get(i, q);
                    alpha += ap * ap;
                    beta += aq * aq;
                    gamma += ap * aq;
                }
                if alpha <= cut || beta <= cut {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                if gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                // Jacobi rotation zeroing the (p,q) Gram entry.
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let ap = a.get(i, p);
                    let aq = a.get(i, q);
                    a.set(i, p, c * ap - s * aq);
                    a.set(i, q, s * ap + c * aq);
                }
                for i in 0..n {
                    let vp = v.get(i, p);
                    let vq = v.get(i, q);
                    v.set(i, p, c * vp - s * vq);
                    v.set(i, q, s * vp + c * vq);
                }
            }
        }
        if off <= eps {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNonConvergence {
            sweeps: JACOBI_SWEEP_BUDGET,
        });
    }

    // Column norms are the singular values; sort nonincreasing.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..rows).map(|i| a.get(i, j).powi(2)).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap().then(x.cmp(&y)));

    let mut u = Matrix::zeros(rows, n);
    let mut vs = Matrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    let scale = norms.iter().fold(0.0f64, |m, &x| m.max(x));
    for (newj, &oldj) in order.iter().enumerate() {
        // residue columns below the deficiency cutoff report sigma = 0
        let s = if norms[oldj] > scale * col_zero_rel {
            norms[oldj]
        } else {
            0.0
        };
        sigma.push(s);
        for i in 0..n {
            vs.set(i, newj, v.get(i, oldj));
        }
        if s > 0.0 {
            for i in 0..rows {
                u.set(i, newj, a.get(i, oldj) / s);
            }
        }
    }
    // Zero columns of U (rank-deficient input) get an orthonormal completion
    // so U^T U = I holds regardless of rank.
    complete_orthonormal(&mut u, &sigma, scale);

    Ok(SvdResult {
        u,
        singular_values: sigma,
        v: vs,
    })
}

/// Fill zero columns of U (they sort to the end) with an orthonormal
/// completion so U^T U = I holds regardless of rank.
fn complete_orthonormal(u: &mut Matrix, sigma: &[f64], _scale: f64) {
    let rows = u.rows();
    let k = u.cols();
    for j in 0..k {
        if sigma[j] > 0.0 {
            continue;
        }
        'candidates: for e in 0..rows {
            let mut col = vec![0.0; rows];
            col[e] = 1.0;
            // two Gram-Schmidt passes against columns 0..j (all filled)
            for _ in 0..2 {
                for jj in 0..j {
                    let dot: f64 = (0..rows).map(|i| col[i] * u.get(i, jj)).sum();
                    for i in 0..rows {
                        col[i] -= dot * u.get(i, jj);
                    }
                }
            }
            let norm: f64 = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                for i in 0..rows {
                    u.set(i, j, col[i] / norm);
                }
                break 'candidates;
            }
        }
    }
}

/// Best rank-r approximation (Eckart-Young).
pub fn rank_trunc(m: &Matrix, r: usize) -> Result<Matrix> {
    let k = m.rows().min(m.cols());
    if r > k {
        return Err(Error::InvalidParameter(format!(
            "rank {} exceeds min dimension {}",
            r, k
        )));
    }
    if r == 0 {
        return Ok(Matrix::zeros(m.rows(), m.cols()));
    }
    let dec = svd(m)?;
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for t in 0..r {
        let s = dec.singular_values[t];
        if s == 0.0 {
            break;
        }
        for i in 0..m.rows() {
            let us = dec.u.get(i, t) * s;
            if us == 0.0 {
                continue;
            }
            for j in 0..m.cols() {
                out.set(i, j, out.get(i, j) + us * dec.v.get(j, t));
            }
        }
    }
    Ok(out)
}

/// Keep the min(s, nnz) largest-magnitude entries, zero the rest.
/// Equal magnitudes resolve in row-major index order, which keeps traces
/// reproducible.
pub fn hard_threshold(m: &Matrix, s: usize) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    if s == 0 {
        return out;
    }
    let mut idx: Vec<usize> = (0..m.data().len()).collect();
    idx.sort_by(|&a, &b| {
        m.data()[b]
            .abs()
            .partial_cmp(&m.data()[a].abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut kept = 0;
    for &k in &idx {
        if kept >= s {
            break;
        }
        if m.data()[k] != 0.0 {
            out.set(k / m.cols(), k % m.cols(), m.data()[k]);
            kept += 1;
        }
    }
    out
}

/// Entrywise soft threshold sign(x) * max(|x| - tau, 0).
pub fn soft_threshold(m: &Matrix, tau: f64) -> Matrix {
    assert!(tau >= 0.0);
    let data = m
        .data()
        .iter()
        .map(|&x| x.signum() * (x.abs() - tau).max(0.0))
        .collect();
    Matrix::from_vec(m.rows(), m.cols(), data).expect("soft threshold preserves shape")
}

/// Singular value thresholding: proximal map of the nuclear norm.
pub fn sv_threshold(m: &Matrix, tau: f64) -> Result<Matrix> {
    assert!(tau >= 0.0);
    let dec = svd(m)?;
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for t in 0..dec.singular_values.len() {
        let s = (dec.singular_values[t] - tau).max(0.0);
        if s == 0.0 {
            continue;
        }
        for i in 0..m.rows() {
            let us = dec.u.get(i, t) * s;
            for j in 0..m.cols() {
                out.set(i, j, out.get(i, j) + us * dec.v.get(j, t));
            }
        }
    }
    Ok(out)
}

/// Count of singular values above rel_tol * sigma_1 (0 for the zero matrix).
pub fn numerical_rank(m: &Matrix, rel_tol: f64) -> Result<usize> {
    assert!(rel_tol > 0.0);
    let dec = svd(m)?;
    let s1 = dec.sigma1();
    if s1 <= 0.0 {
        return Ok(0);
    }
    Ok(dec
        .singular_values
        .iter()
        .filter(|&&s| s > rel_tol * s1)
        .count())
}

/// Standard norms bundle; l0 counts entries with |x| > abs_tol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub fro: f64,
    pub nuclear: f64,
    pub l1: f64,
    pub l0: usize,
}

pub fn norms(m: &Matrix) -> Result<Norms> {
    norms_with_tol(m, L0_ABS_TOL)
}

pub fn norms_with_tol(m: &Matrix, l0_abs_tol: f64) -> Result<Norms> {
    let dec = svd(m)?;
    Ok(Norms {
        fro: m.frobenius(),
        nuclear: dec.singular_values.iter().sum(),
        l1: m.data().iter().map(|x| x.abs()).sum(),
        l0: m.nnz(l0_abs_tol),
    })
}

/// Row and column coherence of the leading r-dimensional singular subspaces:
/// mu_row = (m/r) max_i ||U^T e_i||^2, mu_col likewise with V.
pub fn coherence(l: &Matrix, r: usize) -> Result<(f64, f64)> {
    if r == 0 {
        return Err(Error::InvalidParameter("coherence needs r >= 1".into()));
    }
    let rank = numerical_rank(l, RANK_REL_TOL)?;
    if r > rank {
        return Err(Error::InvalidParameter(format!(
            "r = {} exceeds numerical rank {}: leading subspace ill-defined",
            r, rank
        )));
    }
    let dec = svd(l)?;
    let mu = |basis: &Matrix, dim: usize| -> f64 {
        let mut max_row = 0.0f64;
        for i in 0..dim {
            let norm2: f64 = (0..r).map(|t| basis.get(i, t).powi(2)).sum();
            max_row = max_row.max(norm2);
        }
        (dim as f64 / r as f64) * max_row
    };
    Ok((mu(&dec.u, l.rows()), mu(&dec.v, l.cols())))
}

/// Minimum-norm least squares solve of A x = b via the SVD (columns of B
/// solved independently). Rank cutoff at RANK_REL_TOL relative.
pub fn lstsq(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    assert_eq!(a.rows(), b.rows());
    let dec = svd(a)?;
    let s1 = dec.sigma1();
    let k = dec.singular_values.len();
    let ut_b = dec.u.transpose().matmul(b);
    let mut scaled = Matrix::zeros(k, b.cols());
    for t in 0..k {
        let s = dec.singular_values[t];
        if s1 > 0.0 && s > RANK_REL_TOL * s1 {
            for j in 0..b.cols() {
                scaled.set(t, j, ut_b.get(t, j) / s);
            }
        }
    }
    Ok(dec.v.matmul(&scaled))
}

/// Determinant via LU with partial pivoting. Small matrices only.
pub fn det(m: &Matrix) -> f64 {
    assert!(m.is_square());
    let n = m.rows();
    if n == 0 {
        return 1.0;
    }
    let mut a = m.clone();
    let mut sign = 1.0;
    let mut d = 1.0;
    for k in 0..n {
        let mut piv = k;
        for i in (k + 1)..n {
            if a.get(i, k).abs() > a.get(piv, k).abs() {
                piv = i;
            }
        }
        if a.get(piv, k) == 0.0 {
            return 0.0;
        }
        if piv != k {
            for j in 0..n {
                let tmp = a.get(k, j);
                a.set(k, j, a.get(piv, j));
                a.set(piv, j, tmp);
            }
            sign = -sign;
        }
        d *= a.get(k, k);
        for i in (k + 1)..n {
            let f = a.get(i, k) / a.get(k, k);
            for j in k..n {
                a.set(i, j, a.get(i, j) - f * a.get(k, j));
            }
        }
    }
    sign * d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use approx::assert_relative_eq;

    fn random_matrix(rng: &mut SplitMix64, m: usize, n: usize) -> Matrix {
        let data = (0..m * n).map(|_| rng.gaussian()).collect();
        Matrix::from_vec(m, n, data).unwrap()
    }

    pub(crate) fn m_demo1() -> Matrix {
        Matrix::from_rows(&[
            vec![2.0, -1.0, -1.0],
            vec![-1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0],
        ])
        .unwrap()
    }

    /// Independent spectral oracle for demo-sized symmetric problems:
    /// the nonzero eigenvalues of M^T M for the bowtie family
    /// [[a, b, b], [b, 0, 0], [b, 0, 0]] solve a quadratic obtained from
    /// the characteristic polynomial by hand.
    fn bowtie_singular_values(a: f64, b: f64) -> (f64, f64) {
        // M^T M = [[a^2 + 2b^2, ab, ab], [ab, b^2, b^2], [ab, b^2, b^2]];
        // eigenvector ansatz (x, y, y) gives
        // lambda^2 - (a^2 + 4 b^2) lambda + 4 b^4 = 0.
        let tr = a * a + 4.0 * b * b;
        let detq = 4.0 * b.powi(4);
        let disc = (tr * tr - 4.0 * detq).sqrt();
        let l1 = 0.5 * (tr + disc);
        let l2 = 0.5 * (tr - disc);
        (l1.sqrt(), l2.sqrt())
    }

    #[test]
    fn svd_identity_and_diag() {
        let dec = svd(&Matrix::identity(3)).unwrap();
        for s in &dec.singular_values {
            assert_relative_eq!(*s, 1.0, max_relative = 1e-12);
        }
        let dec = svd(&Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 0.0]]).unwrap()).unwrap();
        assert_relative_eq!(dec.singular_values[0], 3.0, max_relative = 1e-12);
        assert_relative_eq!(dec.singular_values[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn svd_demo_matrix_matches_charpoly_oracle() {
        // sigma(M1) from the hand-computed characteristic polynomial:
        // lambda^2 - 8 lambda + 4 = 0 for the (x, y, y) eigenspace.
        let (s1, s2) = bowtie_singular_values(2.0, -1.0);
        assert_relative_eq!(s1, 1.0 + 3.0f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(s2, 3.0f64.sqrt() - 1.0, max_relative = 1e-12);
        let dec = svd(&m_demo1()).unwrap();
        assert_relative_eq!(dec.singular_values[0], s1, max_relative = 1e-10);
        assert_relative_eq!(dec.singular_values[1], s2, max_relative = 1e-10);
        assert!(dec.singular_values[2].abs() < 1e-12);
        assert_eq!(numerical_rank(&m_demo1(), RANK_REL_TOL).unwrap(), 2);
    }

    #[test]
    fn svd_invariants_on_random_matrices() {
        let mut rng = SplitMix64::new(2024);
        for trial in 0..200 {
            let m = 2 + (trial % 5);
            let n = 2 + (trial % 4);
            let a = random_matrix(&mut rng, m, n);
            let dec = svd(&a).unwrap();
            // reconstruction
            let err = dec.reconstruct().sub(&a).frobenius();
            assert!(
                err <= 1e-10 * a.frobenius().max(1.0),
                "reconstruction err {} on trial {}",
                err,
                trial
            );
            // orthonormality, max-abs entry
            let utu = dec.u.transpose().matmul(&dec.u);
            let vtv = dec.v.transpose().matmul(&dec.v);
            let k = dec.singular_values.len();
            let id = Matrix::identity(k);
            assert!(utu.sub(&id).max_abs() <= 1e-10);
            assert!(vtv.sub(&id).max_abs() <= 1e-10);
            // nonincreasing
            for w in dec.singular_values.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn svd_orthonormal_even_for_rank_deficient() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let dec = svd(&a).unwrap();
        let utu = dec.u.transpose().matmul(&dec.u);
        assert!(utu.sub(&Matrix::identity(2)).max_abs() <= 1e-10);
        let z = Matrix::zeros(3, 3);
        let dec = svd(&z).unwrap();
        let utu = dec.u.transpose().matmul(&dec.u);
        assert!(utu.sub(&Matrix::identity(3)).max_abs() <= 1e-10);
    }

    #[test]
    fn rank_trunc_contract() {
        let m1 = m_demo1();
        // full-rank truncation is the identity
        let full = rank_trunc(&m1, 3).unwrap();
        assert!(full.sub(&m1).frobenius() <= 1e-10);
        // diagonal case
        let d = Matrix::from_diag(&[3.0, 1.0]);
        let t = rank_trunc(&d, 1).unwrap();
        assert!(t.sub(&Matrix::from_diag(&[3.0, 0.0])).frobenius() <= 1e-12);
        // error of the rank-1 truncation equals sigma_2 (charpoly oracle)
        let (_, s2) = bowtie_singular_values(2.0, -1.0);
        let err = rank_trunc(&m1, 1).unwrap().sub(&m1).frobenius();
        assert_relative_eq!(err, s2, max_relative = 1e-10);
    }

    #[test]
    fn eckart_young_dominance() {
        let mut rng = SplitMix64::new(99);
        for trial in 0..100 {
            let a = random_matrix(&mut rng, 6, 6);
            let r = 1 + trial % 4;
            let best = rank_trunc(&a, r).unwrap();
            let base = a.sub(&best).frobenius();
            // random rank-r competitor
            let x = random_matrix(&mut rng, 6, r);
            let y = random_matrix(&mut rng, r, 6);
            let b = x.matmul(&y);
            assert!(base <= a.sub(&b).frobenius() + 1e-9);
        }
    }

    #[test]
    fn hard_threshold_contract() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(hard_threshold(&m, 0).nnz(0.0), 0);
        let h = hard_threshold(&m, 1);
        assert_eq!(h.get(1, 0), 2.0);
        assert_eq!(h.nnz(0.0), 1);
        // row-major tie-break
        let t = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let h = hard_threshold(&t, 1);
        assert_eq!(h.get(0, 0), 1.0);
        assert_eq!(h.get(0, 1), 0.0);
    }

    #[test]
    fn hard_threshold_is_frobenius_nearest_exhaustive_3x3() {
        let mut rng = SplitMix64::new(5);
        let m = random_matrix(&mut rng, 3, 3);
        for s in 0..=4usize {
            let ours = m.sub(&hard_threshold(&m, s)).frobenius();
            // enumerate all keep-sets of size s
            let cells: Vec<usize> = (0..9).collect();
            let mut best = f64::INFINITY;
            let mut pick = vec![false; 9];
            fn rec(
                cells: &[usize],
                start: usize,
                left: usize,
                pick: &mut Vec<bool>,
                m: &Matrix,
                best: &mut f64,
            ) {
                if left == 0 {
                    let mut err = 0.0;
                    for k in 0..9 {
                        if !pick[k] {
                            err += m.data()[k] * m.data()[k];
                        }
                    }
                    *best = best.min(err.sqrt());
                    return;
                }
                for i in start..cells.len() {
                    pick[cells[i]] = true;
                    rec(cells, i + 1, left - 1, pick, m, best);
                    pick[cells[i]] = false;
                }
            }
            rec(&cells, 0, s, &mut pick, &m, &mut best);
            assert!(ours <= best + 1e-12, "s={}: {} vs {}", s, ours, best);
        }
    }

    #[test]
    fn soft_threshold_contract() {
        let m = Matrix::from_rows(&[vec![2.0, -0.5]]).unwrap();
        let s = soft_threshold(&m, 1.0);
        assert_eq!(s.data(), &[1.0, 0.0]);
        let m = Matrix::from_rows(&[vec![-3.0]]).unwrap();
        assert_eq!(soft_threshold(&m, 3.0).data(), &[0.0]);
        let m = m_demo1();
        assert_eq!(soft_threshold(&m, 0.0).data(), m.data());
    }

    #[test]
    fn sv_threshold_contract() {
        let m = m_demo1();
        assert!(sv_threshold(&m, 0.0).unwrap().sub(&m).frobenius() <= 1e-10);
        let d = Matrix::from_diag(&[3.0, 1.0]);
        let t = sv_threshold(&d, 2.0).unwrap();
        assert!(t.sub(&Matrix::from_diag(&[1.0, 0.0])).frobenius() <= 1e-12);
        // nuclear norm of output = sum max(sigma_i - tau, 0)
        let mut rng = SplitMix64::new(31);
        for _ in 0..50 {
            let a = random_matrix(&mut rng, 4, 4);
            let tau = rng.uniform(0.0, 2.0);
            let out = sv_threshold(&a, tau).unwrap();
            let expect: f64 = svd(&a)
                .unwrap()
                .singular_values
                .iter()
                .map(|&s| (s - tau).max(0.0))
                .sum();
            let got = norms(&out).unwrap().nuclear;
            assert_relative_eq!(got, expect, max_relative = 1e-9, epsilon = 1e-11);
        }
    }

    #[test]
    fn sv_threshold_first_order_optimality() {
        // X* = argmin 1/2 ||X - M||_F^2 + tau ||X||_* iff
        // M - X* = tau (U1 V1^T + W) with the subgradient structure below.
        let mut rng = SplitMix64::new(77);
        for _ in 0..50 {
            let m = random_matrix(&mut rng, 4, 4);
            let tau = rng.uniform(0.1, 1.5);
            let x = sv_threshold(&m, tau).unwrap();
            let g = m.sub(&x);
            let dx = svd(&x).unwrap();
            let s1x = dx.sigma1();
            let kept: Vec<usize> = (0..4)
                .filter(|&t| dx.singular_values[t] > 1e-9 * s1x.max(1.0))
                .collect();
            // On the support: U1^T (M - X*) V1 = tau I
            for &p in &kept {
                for &q in &kept {
                    let mut val = 0.0;
                    for i in 0..4 {
                        for j in 0..4 {
                            val += dx.u.get(i, p) * g.get(i, j) * dx.v.get(j, q);
                        }
                    }
                    let expect = if p == q { tau } else { 0.0 };
                    assert!((val - expect).abs() <= 1e-8, "support block violation");
                }
            }
            // Off the support: singular values of M - X* must not exceed tau.
            let gs = svd(&g).unwrap();
            assert!(gs.sigma1() <= tau * (1.0 + 1e-8));
        }
    }

    #[test]
    fn numerical_rank_cases() {
        assert_eq!(numerical_rank(&Matrix::zeros(3, 3), 1e-9).unwrap(), 0);
        assert_eq!(numerical_rank(&m_demo1(), 1e-9).unwrap(), 2);
        // X_eps at eps = 0.1 has rank 2
        let x = Matrix::from_rows(&[
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.1, 0.1],
            vec![1.0, 0.1, 0.1],
        ])
        .unwrap();
        assert_eq!(numerical_rank(&x, 1e-9).unwrap(), 2);
    }

    #[test]
    fn coherence_cases() {
        // all-ones: flat singular vectors, mu = 1
        let ones = Matrix::from_vec(4, 4, vec![1.0; 16]).unwrap();
        let (mr, mc) = coherence(&ones, 1).unwrap();
        assert_relative_eq!(mr, 1.0, max_relative = 1e-10);
        assert_relative_eq!(mc, 1.0, max_relative = 1e-10);
        // e1 e1^T: maximally coherent, mu = n
        let mut spike = Matrix::zeros(5, 5);
        spike.set(0, 0, 1.0);
        let (mr, mc) = coherence(&spike, 1).unwrap();
        assert_relative_eq!(mr, 5.0, max_relative = 1e-10);
        assert_relative_eq!(mc, 5.0, max_relative = 1e-10);
        // L_eps of the 3x3 family: mu -> 3/(1 + 2 eps^2)
        for &eps in &[0.1, 0.01] {
            let l = Matrix::from_rows(&[
                vec![1.0 / eps, 1.0, 1.0],
                vec![1.0, eps, eps],
                vec![1.0, eps, eps],
            ])
            .unwrap();
            let (mr, mc) = coherence(&l, 1).unwrap();
            let expect = 3.0 / (1.0 + 2.0 * eps * eps);
            assert_relative_eq!(mr, expect, max_relative = 1e-8);
            assert_relative_eq!(mc, expect, max_relative = 1e-8);
        }
        // r beyond numerical rank errors
        assert!(coherence(&spike, 2).is_err());
    }

    #[test]
    fn norms_cases() {
        let n = norms(&Matrix::identity(2)).unwrap();
        assert_relative_eq!(n.fro, 2.0f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(n.nuclear, 2.0, max_relative = 1e-10);
        assert_relative_eq!(n.l1, 2.0, max_relative = 1e-12);
        assert_eq!(n.l0, 2);
        // the 3x3 example matrix has four ones
        let m = Matrix::from_rows(&[
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(norms(&m).unwrap().l0, 4);
        let z = norms(&Matrix::zeros(2, 3)).unwrap();
        assert_eq!((z.fro, z.nuclear, z.l1, z.l0), (0.0, 0.0, 0.0, 0));
    }

    #[test]
    fn lstsq_minimum_norm_on_rank_deficient() {
        // A = [[1, 1], [1, 1]], b = (2, 2): min-norm solution (1, 1).
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![2.0], vec![2.0]]).unwrap();
        let x = lstsq(&a, &b).unwrap();
        assert_relative_eq!(x.get(0, 0), 1.0, max_relative = 1e-10);
        assert_relative_eq!(x.get(1, 0), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn det_small_cases() {
        assert_relative_eq!(det(&Matrix::identity(3)), 1.0);
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_relative_eq!(det(&m), -1.0);
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![4.0, 2.0]]).unwrap();
        assert_relative_eq!(det(&m), 0.0);
    }

    #[test]
    fn svd_badly_scaled_family_keeps_relative_accuracy() {
        // L_eps has entries spanning 1e6 .. 1e-6 at eps = 1e-6 and is rank 1.
        let eps = 1e-6;
        let l = Matrix::from_rows(&[
            vec![1.0 / eps, 1.0, 1.0],
            vec![1.0, eps, eps],
            vec![1.0, eps, eps],
        ])
        .unwrap();
        let dec = svd(&l).unwrap();
        assert!(dec.singular_values[1] / dec.singular_values[0] < 1e-9);
        assert_eq!(numerical_rank(&l, RANK_REL_TOL).unwrap(), 1);
    }
}
