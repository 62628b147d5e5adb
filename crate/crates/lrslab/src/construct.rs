//! Adversarial matrix families: limit matrices M outside LS(r, s) together
//! with epsilon-families M(eps) inside LS(r, s) and their explicit
//! (L_eps, S_eps) witnesses, plus the size-bound calculators.
//!
//! Every family follows the same blueprint: a bordered block matrix
//! [[0, A], [B, 0]] whose limit requires more than s changes to reach rank
//! r, while [[0, A], [B, eps B A]] factors exactly as a rank-r matrix plus
//! an r-sparse spike of magnitude 1/eps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, RANK_REL_TOL};
use crate::matrix::Matrix;
use crate::rng::SplitMix64;

/// Default epsilon schedule for sequence studies; stays well above the
/// rank-detection tolerance of 1e-9.
pub const DEFAULT_EPS_SCHEDULE: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// Condition-number cap for the random nonsingular blocks.
const BLOCK_COND_CAP: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Simple3,
    Lemma1General,
    Lemma2,
    Lemma3,
    Lemma4Block,
    MaxRigid3,
    Demo1,
    Demo2,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Simple3 => "simple3",
            Family::Lemma1General => "lemma1",
            Family::Lemma2 => "lemma2",
            Family::Lemma3 => "lemma3",
            Family::Lemma4Block => "lemma4",
            Family::MaxRigid3 => "maxrigid3",
            Family::Demo1 => "demo1",
            Family::Demo2 => "demo2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "simple3" => Family::Simple3,
            "lemma1" => Family::Lemma1General,
            "lemma2" => Family::Lemma2,
            "lemma3" => Family::Lemma3,
            "lemma4" => Family::Lemma4Block,
            "maxrigid3" => Family::MaxRigid3,
            "demo1" => Family::Demo1,
            "demo2" => Family::Demo2,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown family {:?} (expected one of simple3, lemma1, lemma2, lemma3, \
                     lemma4, maxrigid3, demo1, demo2)",
                    other
                )))
            }
        })
    }
}

/// Parameters selecting one member of one family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstructionSpec {
    pub family: Family,
    #[serde(default = "one")]
    pub r: usize,
    #[serde(default = "one")]
    pub s: usize,
    /// Block-grid count for the quadratic-sparsity family (s = p^2 r).
    #[serde(default = "one")]
    pub p: usize,
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    /// Zero-pad the output to this size, when given.
    #[serde(default)]
    pub pad_to: Option<usize>,
    /// Plain size parameter, used by the general lemma1 family only.
    #[serde(default)]
    pub n: Option<usize>,
}

fn one() -> usize {
    1
}

impl ConstructionSpec {
    pub fn new(family: Family, r: usize, s: usize, epsilon: f64, seed: u64) -> Self {
        ConstructionSpec {
            family,
            r,
            s,
            p: 1,
            epsilon,
            seed,
            pad_to: None,
            n: None,
        }
    }
}

/// A limit matrix, its epsilon-perturbation, and the explicit split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstructionOutput {
    pub m_limit: Matrix,
    pub m_eps: Matrix,
    pub l_eps: Matrix,
    pub s_eps: Matrix,
    pub r: usize,
    pub s: usize,
    pub n: usize,
    pub family: Family,
    /// Rigidity lower bound asserted by the family's supporting lemma;
    /// 0 when the family carries no non-membership claim. Metadata only:
    /// the rigidity oracle verifies it independently where tractable.
    pub claimed_rigidity_lower_bound: usize,
}

impl ConstructionOutput {
    /// Entrywise check that the split reproduces m_eps exactly.
    pub fn split_is_exact(&self) -> bool {
        self.l_eps.add(&self.s_eps).data() == self.m_eps.data()
    }
}

/// Dispatch a spec to its family constructor.
pub fn build(spec: &ConstructionSpec) -> Result<ConstructionOutput> {
    if spec.epsilon <= 0.0 {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let out = match spec.family {
        Family::Simple3 => simple3(spec.epsilon)?,
        Family::Lemma1General => {
            let n = spec.n.ok_or_else(|| {
                Error::InvalidParameter("lemma1 requires the size parameter n".into())
            })?;
            if n <= spec.r {
                return Err(Error::InvalidParameter(format!(
                    "lemma1 needs n > r, got n = {}, r = {}",
                    n, spec.r
                )));
            }
            let mut rng = SplitMix64::new(spec.seed);
            let a = random_nonzero(&mut rng, spec.r, n - spec.r);
            let b = random_nonzero(&mut rng, n - spec.r, spec.r);
            lemma1_pair(&a, &b, spec.epsilon)?
        }
        Family::Lemma2 => lemma2_pair(spec.r, spec.s, spec.seed, spec.epsilon)?,
        Family::Lemma3 => lemma3_pair(spec.r, spec.s, spec.seed, spec.epsilon)?,
        Family::Lemma4Block => lemma4_pair(spec.r, spec.p, spec.seed, spec.epsilon)?,
        Family::MaxRigid3 => maximally_rigid3(spec.seed, spec.epsilon)?,
        Family::Demo1 => demo_pair(demo_matrices().0, spec.epsilon)?,
        Family::Demo2 => demo_pair(demo_matrices().1, spec.epsilon)?,
    };
    match spec.pad_to {
        Some(n) => pad_to(&out, n),
        None => Ok(out),
    }
}

/// The 3x3 sequence: M = `[[0,1,1],[1,0,0],[1,0,0]]` approached by
/// X_eps = `[[0,1,1],[1,eps,eps],[1,eps,eps]]` with the rank-1 plus spike
/// split whose components carry energy 1/eps.
pub fn simple3(epsilon: f64) -> Result<ConstructionOutput> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let e = epsilon;
    let m_limit = Matrix::from_rows(&[
        vec![0.0, 1.0, 1.0],
        vec![1.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.0],
    ])?;
    let m_eps = Matrix::from_rows(&[vec![0.0, 1.0, 1.0], vec![1.0, e, e], vec![1.0, e, e]])?;
    let l_eps = Matrix::from_rows(&[vec![1.0 / e, 1.0, 1.0], vec![1.0, e, e], vec![1.0, e, e]])?;
    let mut s_eps = Matrix::zeros(3, 3);
    s_eps.set(0, 0, -1.0 / e);
    Ok(ConstructionOutput {
        m_limit,
        m_eps,
        l_eps,
        s_eps,
        r: 1,
        s: 1,
        n: 3,
        family: Family::Simple3,
        claimed_rigidity_lower_bound: 2,
    })
}

/// General bordered form: M = [[0, A], [B, 0]] and
/// M(eps) = [[0, A], [B, eps B A]], split as
/// L = [I_r/eps; B] [I_r, eps A] and S = -(1/eps) I_r in the corner.
pub fn lemma1_pair(a: &Matrix, b: &Matrix, epsilon: f64) -> Result<ConstructionOutput> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let r = a.rows();
    let tail = a.cols();
    if b.rows() != tail || b.cols() != r {
        return Err(Error::DimensionMismatch(format!(
            "lemma1 blocks: A is {}x{}, so B must be {}x{}, got {}x{}",
            r,
            tail,
            tail,
            r,
            b.rows(),
            b.cols()
        )));
    }
    let n = r + tail;
    let mut m_limit = Matrix::zeros(n, n);
    m_limit.set_block(0, r, a);
    m_limit.set_block(r, 0, b);

    let ba = b.matmul(a);
    let mut m_eps = m_limit.clone();
    m_eps.set_block(r, r, &ba.scale(epsilon));

    // L = [I_r/eps; B] * [I_r, eps A]  =>  [[I/eps, A], [B, eps B A]]
    let mut l_eps = Matrix::zeros(n, n);
    for i in 0..r {
        l_eps.set(i, i, 1.0 / epsilon);
    }
    l_eps.set_block(0, r, a);
    l_eps.set_block(r, 0, b);
    l_eps.set_block(r, r, &ba.scale(epsilon));

    let mut s_eps = Matrix::zeros(n, n);
    for i in 0..r {
        s_eps.set(i, i, -1.0 / epsilon);
    }

    Ok(ConstructionOutput {
        m_limit,
        m_eps,
        l_eps,
        s_eps,
        r,
        s: r,
        n,
        family: Family::Lemma1General,
        claimed_rigidity_lower_bound: 0,
    })
}

/// ceil((s+1)/2)
pub fn lemma_l(s: usize) -> usize {
    (s + 2) / 2
}

/// ceil(l / r)
pub fn lemma_k(l: usize, r: usize) -> usize {
    l.div_ceil(r)
}

/// Natural size of the lemma2 family: n = r (l + 1) + k.
pub fn lemma2_natural_size(r: usize, s: usize) -> usize {
    let l = lemma_l(s);
    r * (l + 1) + lemma_k(l, r)
}

/// Natural size of the lemma3 family: n = s (l + 1) + 1 + (s + 1)(r - s).
pub fn lemma3_natural_size(r: usize, s: usize) -> usize {
    let l = lemma_l(s);
    s * (l + 1) + 1 + (s + 1) * (r - s)
}

/// Bordered stacks for the lemma2-style core: upper = [beta, A_1 .. A_l]
/// (rows x tail) and lower = [alpha^T; B_1; ..; B_l] (tail x rows), with
/// alpha, beta all-nonzero (rows x k) and A_i, B_i nonsingular rows x rows.
fn core_stacks(rng: &mut SplitMix64, rows: usize, l: usize, k: usize) -> (Matrix, Matrix) {
    let tail = k + l * rows;
    let mut upper = Matrix::zeros(rows, tail);
    let mut lower = Matrix::zeros(tail, rows);
    let beta = random_nonzero(rng, rows, k);
    let alpha = random_nonzero(rng, rows, k);
    upper.set_block(0, 0, &beta);
    lower.set_block(0, 0, &alpha.transpose());
    for i in 0..l {
        let a = random_nonsingular(rng, rows);
        let b = random_nonsingular(rng, rows);
        upper.set_block(0, k + i * rows, &a);
        lower.set_block(k + i * rows, 0, &b);
    }
    (upper, lower)
}

fn random_nonzero(rng: &mut SplitMix64, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.nonzero_unit()).collect();
    Matrix::from_vec(rows, cols, data).expect("finite by construction")
}

/// Representable value s with fl(a + s) == target, so splits stay exact
/// entrywise. One correction step suffices; the loop guards rounding edge
/// cases near the target's ulp.
fn exact_complement(target: f64, a: f64) -> f64 {
    let mut s = target - a;
    for _ in 0..3 {
        let err = target - (a + s);
        if err == 0.0 {
            break;
        }
        s += err;
    }
    s
}

fn random_nonsingular(rng: &mut SplitMix64, n: usize) -> Matrix {
    for _ in 0..100 {
        let data: Vec<f64> = (0..n * n).map(|_| rng.gaussian()).collect();
        let m = Matrix::from_vec(n, n, data).expect("finite by construction");
        if let Ok(dec) = linalg::svd(&m) {
            let smin = *dec.singular_values.last().unwrap();
            if smin > 0.0 && dec.sigma1() / smin < BLOCK_COND_CAP {
                return m;
            }
        }
    }
    // Gaussian matrices with condition number above 1e3 at n <= 5 are rare
    // enough that 100 rejections do not happen in practice.
    unreachable!("rejection sampling failed to produce a well-conditioned block")
}

/// Family for 1 <= r <= s: not closed with claimed Rig(M, r) >= 2l >= s+1.
pub fn lemma2_pair(r: usize, s: usize, seed: u64, epsilon: f64) -> Result<ConstructionOutput> {
    if r < 1 || s < r {
        return Err(Error::InvalidParameter(format!(
            "lemma2 requires 1 <= r <= s, got r = {}, s = {}; use lemma3 for r > s",
            r, s
        )));
    }
    let l = lemma_l(s);
    let k = lemma_k(l, r);
    let mut rng = SplitMix64::new(seed);
    let (upper, lower) = core_stacks(&mut rng, r, l, k);
    let mut out = lemma1_pair(&upper, &lower, epsilon)?;
    debug_assert_eq!(out.n, lemma2_natural_size(r, s));
    out.family = Family::Lemma2;
    out.s = s;
    out.claimed_rigidity_lower_bound = 2 * l;
    Ok(out)
}

/// Family for r > s >= 1: block diagonal of an (s, s) core of size
/// n' = s(l+1)+1 and an (s+1) x (s+1) grid of one full-rank
/// (r-s) x (r-s) block N.
pub fn lemma3_pair(r: usize, s: usize, seed: u64, epsilon: f64) -> Result<ConstructionOutput> {
    if s < 1 || r <= s {
        return Err(Error::InvalidParameter(format!(
            "lemma3 requires r > s >= 1, got r = {}, s = {}; use lemma2 for r <= s",
            r, s
        )));
    }
    let l = lemma_l(s);
    // The (s, s) core always has k = ceil(l/s) = 1 since l <= s.
    debug_assert_eq!(lemma_k(l, s), 1);
    let mut rng = SplitMix64::new(seed);
    let (upper, lower) = core_stacks(&mut rng, s, l, 1);
    let core = lemma1_pair(&upper, &lower, epsilon)?;
    let n_prime = core.n;
    debug_assert_eq!(n_prime, s * (l + 1) + 1);

    let d = r - s;
    let n = n_prime + (s + 1) * d;
    let nblock = random_nonsingular(&mut rng, d);

    let mut m_limit = Matrix::zeros(n, n);
    m_limit.set_block(0, 0, &core.m_limit);
    let mut m_eps = Matrix::zeros(n, n);
    m_eps.set_block(0, 0, &core.m_eps);
    let mut l_eps = Matrix::zeros(n, n);
    l_eps.set_block(0, 0, &core.l_eps);
    let mut s_eps = Matrix::zeros(n, n);
    s_eps.set_block(0, 0, &core.s_eps);

    // Identical copies of N tile the trailing (s+1)(r-s) block in full,
    // adding rank r - s to both the limit and the low-rank component.
    for bi in 0..=s {
        for bj in 0..=s {
            let (i0, j0) = (n_prime + bi * d, n_prime + bj * d);
            m_limit.set_block(i0, j0, &nblock);
            m_eps.set_block(i0, j0, &nblock);
            l_eps.set_block(i0, j0, &nblock);
        }
    }

    Ok(ConstructionOutput {
        m_limit,
        m_eps,
        l_eps,
        s_eps,
        r,
        s,
        n,
        family: Family::Lemma3,
        claimed_rigidity_lower_bound: s + 1,
    })
}

/// Quadratic-sparsity family: a p x p grid of one (r, r) core of size
/// n' = r(l+1)+1, giving s = p^2 r and claimed Rig(K, r) >= p^2 * 2l.
pub fn lemma4_pair(r: usize, p: usize, seed: u64, epsilon: f64) -> Result<ConstructionOutput> {
    if r < 1 || p < 1 {
        return Err(Error::InvalidParameter(format!(
            "lemma4 requires r >= 1 and p >= 1, got r = {}, p = {}",
            r, p
        )));
    }
    let l = lemma_l(r);
    let mut rng = SplitMix64::new(seed);
    let (upper, lower) = core_stacks(&mut rng, r, l, 1);
    let core = lemma1_pair(&upper, &lower, epsilon)?;
    let n_prime = core.n;
    debug_assert_eq!(n_prime, r * (l + 1) + 1);

    let n = p * n_prime;
    let mut m_limit = Matrix::zeros(n, n);
    let mut m_eps = Matrix::zeros(n, n);
    let mut l_eps = Matrix::zeros(n, n);
    let mut s_eps = Matrix::zeros(n, n);
    for bi in 0..p {
        for bj in 0..p {
            let (i0, j0) = (bi * n_prime, bj * n_prime);
            m_limit.set_block(i0, j0, &core.m_limit);
            m_eps.set_block(i0, j0, &core.m_eps);
            l_eps.set_block(i0, j0, &core.l_eps);
            s_eps.set_block(i0, j0, &core.s_eps);
        }
    }

    Ok(ConstructionOutput {
        m_limit,
        m_eps,
        l_eps,
        s_eps,
        r,
        s: p * p * r,
        n,
        family: Family::Lemma4Block,
        claimed_rigidity_lower_bound: p * p * 2 * l,
    })
}

/// Maximally rigid 3x3 instance with generic nonzero entries:
/// M = `[[a,b,c],[d,e,0],[g,0,i]]` has Rig(M, 1) = 4, while replacing the
/// zeros with eps*c*d and eps*b*g drops the rigidity to 3 via a rank-1
/// plus diagonal split.
pub fn maximally_rigid3(seed: u64, epsilon: f64) -> Result<ConstructionOutput> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let a = rng.nonzero_unit();
    let b = rng.nonzero_unit();
    let c = rng.nonzero_unit();
    let d = rng.nonzero_unit();
    let e = rng.nonzero_unit();
    let g = rng.nonzero_unit();
    let i = rng.nonzero_unit();
    let ep = epsilon;

    let m_limit = Matrix::from_rows(&[vec![a, b, c], vec![d, e, 0.0], vec![g, 0.0, i]])?;
    // rank-1 part (1/ep, d, g)^T (1, ep b, ep c), diagonal remainder.
    // M(eps) is assembled as the literal sum L + S so the split identity is
    // bit-exact; its diagonal then matches (a, e, i) to within one ulp of
    // the dominant 1/eps entry, far below the eps-scale off-diagonal terms.
    let l_eps = Matrix::from_rows(&[
        vec![1.0 / ep, b, c],
        vec![d, ep * b * d, ep * c * d],
        vec![g, ep * b * g, ep * c * g],
    ])?;
    let s_eps = Matrix::from_diag(&[a - 1.0 / ep, e - ep * b * d, i - ep * c * g]);
    let m_eps = l_eps.add(&s_eps);

    Ok(ConstructionOutput {
        m_limit,
        m_eps,
        l_eps,
        s_eps,
        r: 1,
        s: 3,
        n: 3,
        family: Family::MaxRigid3,
        claimed_rigidity_lower_bound: 4,
    })
}

/// The two 3x3 demonstration matrices driving the solver experiments.
pub fn demo_matrices() -> (Matrix, Matrix) {
    let m1 = Matrix::from_rows(&[
        vec![2.0, -1.0, -1.0],
        vec![-1.0, 0.0, 0.0],
        vec![-1.0, 0.0, 0.0],
    ])
    .expect("static data");
    let m2 = Matrix::from_rows(&[
        vec![1.0, -2.0, -2.0],
        vec![-2.0, 0.0, 0.0],
        vec![-2.0, 0.0, 0.0],
    ])
    .expect("static data");
    (m1, m2)
}

/// Epsilon-family around a demo matrix: the bordered structure with a
/// nonzero corner, absorbed into the sparse spike.
fn demo_pair(m: Matrix, epsilon: f64) -> Result<ConstructionOutput> {
    let corner = m.get(0, 0);
    let a = m.submatrix(&[0], &[1, 2]);
    let b = m.submatrix(&[1, 2], &[0]);
    let mut out = lemma1_pair(&a, &b, epsilon)?;
    // shift the corner back in: M = [[corner, A], [B, 0]]
    out.m_limit.set(0, 0, corner);
    out.m_eps.set(0, 0, corner);
    out.s_eps.set(0, 0, exact_complement(corner, 1.0 / epsilon));
    out.family = if corner == 2.0 {
        Family::Demo1
    } else {
        Family::Demo2
    };
    out.claimed_rigidity_lower_bound = 2;
    debug_assert!(out.split_is_exact());
    Ok(out)
}

/// Which size-bound formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeBound {
    /// n >= (r+1)(s+2)
    TheoremMain,
    /// n >= (r+2)^{3/2} s^{1/2}, for s = p^2 r only
    QuadraticSparsity,
    /// n >= r + (s+1)^{1/2}
    Conjecture,
}

/// Smallest matrix size satisfying the selected non-closedness bound.
/// QuadraticSparsity returns an error when s is not of the form p^2 r.
pub fn min_size(r: usize, s: usize, bound: SizeBound) -> Result<usize> {
    if r < 1 || s < 1 {
        return Err(Error::InvalidParameter("min_size needs r, s >= 1".into()));
    }
    match bound {
        SizeBound::TheoremMain => Ok((r + 1) * (s + 2)),
        SizeBound::QuadraticSparsity => {
            if s % r != 0 || !is_perfect_square(s / r) {
                return Err(Error::InvalidParameter(format!(
                    "quadratic-sparsity bound needs s = p^2 r; s = {}, r = {} does not fit",
                    s, r
                )));
            }
            let bound = ((r + 2) as f64).powf(1.5) * (s as f64).sqrt();
            Ok(ceil_f64(bound))
        }
        SizeBound::Conjecture => {
            let bound = r as f64 + ((s + 1) as f64).sqrt();
            Ok(ceil_f64(bound))
        }
    }
}

fn is_perfect_square(x: usize) -> bool {
    let r = (x as f64).sqrt().round() as usize;
    r * r == x
}

fn ceil_f64(x: f64) -> usize {
    let c = x.ceil();
    // Guard against 10.000000000000002-style artifacts just above an integer.
    if c - x > 0.0 && (x - (c - 1.0)).abs() < 1e-9 {
        (c - 1.0) as usize
    } else {
        c as usize
    }
}

/// Zero-pad all four matrices of a construction to n x n. Rank, sparsity,
/// and the rigidity claim are unchanged.
pub fn pad_to(out: &ConstructionOutput, n: usize) -> Result<ConstructionOutput> {
    if n < out.n {
        return Err(Error::InvalidParameter(format!(
            "pad target {} below natural size {}",
            n, out.n
        )));
    }
    Ok(ConstructionOutput {
        m_limit: out.m_limit.pad_to(n)?,
        m_eps: out.m_eps.pad_to(n)?,
        l_eps: out.l_eps.pad_to(n)?,
        s_eps: out.s_eps.pad_to(n)?,
        r: out.r,
        s: out.s,
        n,
        family: out.family,
        claimed_rigidity_lower_bound: out.claimed_rigidity_lower_bound,
    })
}

/// Frobenius distance of the eps-member from its limit.
pub fn limit_distance(out: &ConstructionOutput) -> f64 {
    out.m_eps.sub(&out.m_limit).frobenius()
}

/// Sanity bundle used by tests and the epsilon study: exact split, rank of
/// the low-rank part, sparsity of the sparse part.
pub fn witness_stats(out: &ConstructionOutput) -> Result<(bool, usize, usize)> {
    let rank = linalg::numerical_rank(&out.l_eps, RANK_REL_TOL)?;
    let nnz = out.s_eps.nnz(linalg::L0_ABS_TOL);
    Ok((out.split_is_exact(), rank, nnz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simple3_matches_displayed_values() {
        let out = simple3(0.1).unwrap();
        assert_relative_eq!(limit_distance(&out), 0.2, epsilon = 1e-15);
        let (exact, rank, nnz) = witness_stats(&out).unwrap();
        assert!(exact);
        assert_eq!(rank, 1);
        assert_eq!(nnz, 1);
        assert_eq!(out.m_limit.get(0, 1), 1.0);
        assert_eq!(out.l_eps.get(0, 0), 10.0);
        assert_eq!(out.s_eps.get(0, 0), -10.0);
    }

    #[test]
    fn simple3_limit_is_in_ls_1_2() {
        // zeroing entries (0,1) and (0,2) leaves rank 1
        let out = simple3(0.01).unwrap();
        let mut m = out.m_limit.clone();
        m.set(0, 1, 0.0);
        m.set(0, 2, 0.0);
        assert_eq!(linalg::numerical_rank(&m, RANK_REL_TOL).unwrap(), 1);
    }

    #[test]
    fn lemma1_specializes_to_simple3_structure() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let out = lemma1_pair(&a, &b, 0.1).unwrap();
        let expect = simple3(0.1).unwrap();
        assert_eq!(out.m_limit.data(), expect.m_limit.data());
        assert_eq!(out.m_eps.data(), expect.m_eps.data());
    }

    #[test]
    fn lemma1_distance_is_eps_times_ba_norm() {
        let mut rng = SplitMix64::new(11);
        let a = random_nonzero(&mut rng, 2, 3);
        let b = random_nonzero(&mut rng, 3, 2);
        for &eps in &[1e-1, 1e-3] {
            let out = lemma1_pair(&a, &b, eps).unwrap();
            let ba_norm = b.matmul(&a).frobenius();
            assert_relative_eq!(limit_distance(&out), eps * ba_norm, max_relative = 1e-12);
            assert_eq!(linalg::numerical_rank(&out.l_eps, RANK_REL_TOL).unwrap(), 2);
            assert!(out.split_is_exact());
        }
    }

    #[test]
    fn lemma2_sizes() {
        assert_eq!(lemma2_natural_size(1, 1), 3);
        assert_eq!(lemma2_natural_size(1, 2), 5);
        assert_eq!(lemma2_natural_size(2, 3), 7);
        let out = lemma2_pair(1, 2, 0, 1e-2).unwrap();
        assert_eq!(out.n, 5);
        assert_eq!(out.claimed_rigidity_lower_bound, 4);
        let out = lemma2_pair(1, 1, 0, 1e-2).unwrap();
        assert_eq!(out.n, 3);
        let out = lemma2_pair(2, 3, 0, 1e-2).unwrap();
        assert_eq!(out.n, 7);
        assert!(lemma2_pair(2, 1, 0, 1e-2).is_err());
    }

    #[test]
    fn lemma3_sizes_and_rank() {
        assert_eq!(lemma3_natural_size(2, 1), 5);
        assert_eq!(lemma3_natural_size(3, 1), 7);
        let out = lemma3_pair(2, 1, 7, 1e-3).unwrap();
        assert_eq!(out.n, 5);
        assert_eq!(out.claimed_rigidity_lower_bound, 2);
        let (exact, rank, nnz) = witness_stats(&out).unwrap();
        assert!(exact);
        // the low-rank component carries rank r = 2: core rank 1 plus the
        // tiled N block; M_eps itself adds the 1-sparse spike on top
        assert_eq!(rank, 2);
        assert_eq!(nnz, 1);
        assert_eq!(linalg::numerical_rank(&out.m_eps, RANK_REL_TOL).unwrap(), 3);
        assert!(lemma3_pair(1, 1, 0, 1e-2).is_err());
    }

    #[test]
    fn lemma4_block_structure() {
        // p = 1 degenerates to the 3x3 core
        let out = lemma4_pair(1, 1, 3, 1e-2).unwrap();
        assert_eq!(out.n, 3);
        // p = 2: 6x6, s = 4, rank of the low-rank part stays 1
        let out = lemma4_pair(1, 2, 3, 1e-2).unwrap();
        assert_eq!((out.n, out.s), (6, 4));
        assert_eq!(out.claimed_rigidity_lower_bound, 8);
        let (exact, rank, nnz) = witness_stats(&out).unwrap();
        assert!(exact);
        assert_eq!(rank, 1);
        assert_eq!(nnz, 4);
    }

    #[test]
    fn maxrigid3_split() {
        let out = maximally_rigid3(42, 1e-3).unwrap();
        let (exact, rank, nnz) = witness_stats(&out).unwrap();
        assert!(exact);
        assert_eq!(rank, 1);
        assert_eq!(nnz, 3);
        assert_eq!(out.claimed_rigidity_lower_bound, 4);
        assert_eq!(out.m_limit.get(1, 2), 0.0);
        assert_eq!(out.m_limit.get(2, 1), 0.0);
        // first column of the rank-1 part is (1/eps, d, g)
        assert_relative_eq!(out.l_eps.get(0, 0), 1e3, max_relative = 1e-12);
    }

    #[test]
    fn demo_matrices_display_values() {
        let (m1, m2) = demo_matrices();
        assert_eq!(m1.get(0, 0), 2.0);
        assert_eq!(m2.get(0, 1), -2.0);
        assert_eq!(linalg::numerical_rank(&m1, RANK_REL_TOL).unwrap(), 2);
        assert_eq!(linalg::numerical_rank(&m2, RANK_REL_TOL).unwrap(), 2);
    }

    #[test]
    fn demo_families_split_exactly() {
        // ||M_eps - M|| = eps ||B A||: 2 eps for demo1 (blocks of -1),
        // 8 eps for demo2 (blocks of -2).
        for (fam, ba_norm) in [(Family::Demo1, 2.0), (Family::Demo2, 8.0)] {
            for &eps in &[1e-2, 1e-3, 1e-5] {
                let spec = ConstructionSpec::new(fam, 1, 1, eps, 0);
                let out = build(&spec).unwrap();
                let (exact, rank, nnz) = witness_stats(&out).unwrap();
                assert!(exact, "{:?} split not exact at eps={}", fam, eps);
                assert_eq!(rank, 1);
                assert_eq!(nnz, 1);
                assert_relative_eq!(limit_distance(&out), ba_norm * eps, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn min_size_values() {
        assert_eq!(min_size(1, 1, SizeBound::TheoremMain).unwrap(), 6);
        assert_eq!(min_size(1, 4, SizeBound::QuadraticSparsity).unwrap(), 11);
        assert_eq!(min_size(1, 3, SizeBound::Conjecture).unwrap(), 3);
        assert!(min_size(1, 3, SizeBound::QuadraticSparsity).is_err());
        assert!(min_size(2, 8, SizeBound::QuadraticSparsity).is_ok());
    }

    #[test]
    fn pad_preserves_claims_and_norms() {
        let out = simple3(0.1).unwrap();
        let padded = pad_to(&out, 4).unwrap();
        assert_eq!(padded.n, 4);
        assert_eq!(padded.m_limit.rows(), 4);
        assert_eq!(padded.claimed_rigidity_lower_bound, 2);
        assert_eq!(padded.m_limit.frobenius(), out.m_limit.frobenius());
        let (exact, rank, nnz) = witness_stats(&padded).unwrap();
        assert!(exact);
        assert_eq!((rank, nnz), (1, 1));
        assert!(pad_to(&out, 2).is_err());
    }

    #[test]
    fn families_satisfy_membership_invariants_across_schedule() {
        let specs = [
            ConstructionSpec::new(Family::Simple3, 1, 1, 1.0, 0),
            ConstructionSpec::new(Family::Lemma2, 1, 2, 1.0, 5),
            ConstructionSpec::new(Family::Lemma2, 2, 3, 1.0, 5),
            ConstructionSpec::new(Family::Lemma3, 2, 1, 1.0, 5),
            ConstructionSpec::new(Family::Lemma3, 3, 2, 1.0, 5),
            {
                let mut s = ConstructionSpec::new(Family::Lemma4Block, 1, 4, 1.0, 5);
                s.p = 2;
                s
            },
            ConstructionSpec::new(Family::MaxRigid3, 1, 3, 1.0, 5),
        ];
        for base in &specs {
            let mut prev_dist = f64::INFINITY;
            for &eps in DEFAULT_EPS_SCHEDULE.iter() {
                let mut spec = base.clone();
                spec.epsilon = eps;
                let out = build(&spec).unwrap();
                let (exact, rank, nnz) = witness_stats(&out).unwrap();
                assert!(exact, "{:?} eps={}", base.family, eps);
                assert!(
                    rank <= out.r,
                    "{:?}: rank {} > r {}",
                    base.family,
                    rank,
                    out.r
                );
                assert!(nnz <= out.s, "{:?}: nnz {} > s {}", base.family, nnz, out.s);
                let dist = limit_distance(&out);
                assert!(
                    dist < prev_dist,
                    "{:?}: distance not decreasing",
                    base.family
                );
                prev_dist = dist;
            }
        }
    }

    #[test]
    fn component_norms_diverge_along_schedule() {
        for &eps in &[1e-2, 1e-4] {
            let out = lemma2_pair(2, 2, 9, eps).unwrap();
            // ||S_eps||_F = sqrt(r)/eps exactly; ||L_eps|| >= 1/eps - ||B||
            assert_relative_eq!(
                out.s_eps.frobenius(),
                (2.0f64).sqrt() / eps,
                max_relative = 1e-12
            );
            assert!(out.l_eps.frobenius() >= 1.0 / eps - out.m_limit.frobenius());
        }
    }

    #[test]
    fn size_bound_dominates_natural_sizes() {
        for r in 1..=5usize {
            for s in 1..=5usize {
                let natural = if r <= s {
                    lemma2_natural_size(r, s)
                } else {
                    lemma3_natural_size(r, s)
                };
                let bound = min_size(r, s, SizeBound::TheoremMain).unwrap();
                assert!(
                    natural <= bound,
                    "natural {} > bound {} at (r, s) = ({}, {})",
                    natural,
                    bound,
                    r,
                    s
                );
            }
        }
    }
}
