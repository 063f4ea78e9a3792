//! Parametric QP data model and its dual transformation.
//!
//! The primal problem is
//!   min_x 1/2 x'Hx + f(theta)'x   s.t.  A x <= b(theta)
//! with f(theta) = f0 + F theta and b(theta) = b0 + B theta, over a parameter
//! polyhedron Theta0. With H = L L' the dual has simple nonnegativity
//! constraints, Hessian M M' where M = A L^{-T}, and linear term
//! d(theta) = d0 + D theta that carries all parameter dependence.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::Polyhedron;

pub const PD_TOL_REL: f64 = 1e-12;
pub const SING_TOL_REL: f64 = 1e-11;

#[derive(Debug, Error)]
pub enum MpqpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("H not symmetric (relative deviation {0:.3e})")]
    NotSymmetric(f64),
    #[error("H not positive definite (Cholesky pivot {0} failed)")]
    NotPositiveDefinite(usize),
    #[error("working-set index {0} out of range (m = {1})")]
    IndexOutOfRange(usize, usize),
    #[error("gram matrix singular; caller must take the singular branch")]
    SingularGram,
    #[error("gram matrix nonsingular; null direction undefined")]
    NonsingularGram,
}

/// Lower-triangular Cholesky with explicit pivot failure reporting.
///
/// Returns Err(k) when pivot k drops below `tol_rel * max_diag`; the partial
/// factor rows 0..k are valid in that case.
fn cholesky_lower(a: &DMatrix<f64>, tol_rel: f64) -> Result<DMatrix<f64>, (usize, DMatrix<f64>)> {
    let n = a.nrows();
    let max_diag = (0..n).map(|i| a[(i, i)].abs()).fold(0.0_f64, f64::max);
    let tol = tol_rel * max_diag.max(1.0);
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if diag <= tol {
            return Err((j, l));
        }
        let dj = diag.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / dj;
        }
    }
    Ok(l)
}

fn solve_lower(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in 0..n {
        for k in 0..i {
            let t = l[(i, k)] * x[k];
            x[i] -= t;
        }
        x[i] /= l[(i, i)];
    }
    x
}

fn solve_upper_t(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    // Solves L' x = b.
    let n = l.nrows();
    let mut x = b.clone();
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let t = l[(k, i)] * x[k];
            x[i] -= t;
        }
        x[i] /= l[(i, i)];
    }
    x
}

/// Solve (L L') x = b.
fn chol_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    solve_upper_t(l, &solve_lower(l, b))
}

/// The parametric QP of the module doc comment.
#[derive(Clone, Debug)]
pub struct MpQP {
    pub n: usize,
    pub m: usize,
    pub n_theta: usize,
    pub h: DMatrix<f64>,
    pub f0: DVector<f64>,
    pub f_mat: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b0: DVector<f64>,
    pub b_mat: DMatrix<f64>,
    pub theta0: Polyhedron,
}

impl MpQP {
    pub fn validate(&self) -> Result<(), MpqpError> {
        let (n, m, nt) = (self.n, self.m, self.n_theta);
        if self.h.nrows() != n || self.h.ncols() != n {
            return Err(MpqpError::Dimension("H".into()));
        }
        if self.f0.len() != n || self.f_mat.nrows() != n || self.f_mat.ncols() != nt {
            return Err(MpqpError::Dimension("f".into()));
        }
        if self.a.nrows() != m || self.a.ncols() != n {
            return Err(MpqpError::Dimension("A".into()));
        }
        if self.b0.len() != m || self.b_mat.nrows() != m || self.b_mat.ncols() != nt {
            return Err(MpqpError::Dimension("b".into()));
        }
        if self.theta0.dim() != nt {
            return Err(MpqpError::Dimension("Theta0".into()));
        }
        for (name, finite) in [
            ("H", self.h.iter().all(|v| v.is_finite())),
            ("f0", self.f0.iter().all(|v| v.is_finite())),
            ("F", self.f_mat.iter().all(|v| v.is_finite())),
            ("A", self.a.iter().all(|v| v.is_finite())),
            ("b0", self.b0.iter().all(|v| v.is_finite())),
            ("B", self.b_mat.iter().all(|v| v.is_finite())),
        ] {
            if !finite {
                return Err(MpqpError::NonFinite(name));
            }
        }
        let scale = self.h.amax().max(1e-300);
        let mut dev = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                dev = dev.max((self.h[(i, j)] - self.h[(j, i)]).abs());
            }
        }
        if dev > 1e-12 * scale.max(1.0) {
            return Err(MpqpError::NotSymmetric(dev / scale));
        }
        cholesky_lower(&self.h, PD_TOL_REL).map_err(|(k, _)| MpqpError::NotPositiveDefinite(k))?;
        Ok(())
    }

    /// Substitute fixed values for a subset of parameters, producing a
    /// lower-dimensional problem over the remaining coordinates.
    ///
    /// `fixed` maps parameter index -> value; `theta0_free` is the parameter
    /// set of the reduced problem.
    pub fn fix_parameters(&self, fixed: &[(usize, f64)], theta0_free: Polyhedron) -> Result<MpQP, MpqpError> {
        let fixed_idx: Vec<usize> = fixed.iter().map(|&(i, _)| i).collect();
        for &i in &fixed_idx {
            if i >= self.n_theta {
                return Err(MpqpError::IndexOutOfRange(i, self.n_theta));
            }
        }
        let free: Vec<usize> = (0..self.n_theta).filter(|i| !fixed_idx.contains(i)).collect();
        if theta0_free.dim() != free.len() {
            return Err(MpqpError::Dimension("Theta0 (reduced)".into()));
        }
        let mut f0 = self.f0.clone();
        let mut b0 = self.b0.clone();
        for &(i, v) in fixed {
            f0 += self.f_mat.column(i) * v;
            b0 += self.b_mat.column(i) * v;
        }
        let f_mat = self.f_mat.select_columns(free.iter());
        let b_mat = self.b_mat.select_columns(free.iter());
        Ok(MpQP {
            n: self.n,
            m: self.m,
            n_theta: free.len(),
            h: self.h.clone(),
            f0,
            f_mat,
            a: self.a.clone(),
            b0,
            b_mat,
            theta0: theta0_free,
        })
    }
}

/// Dual-side data shared by the solver and the certifier.
#[derive(Clone, Debug)]
pub struct DualData {
    pub n: usize,
    pub m: usize,
    pub n_theta: usize,
    /// M = A L^{-T}, so M M' = A H^{-1} A'.
    pub m_mat: DMatrix<f64>,
    pub d0: DVector<f64>,
    pub d_mat: DMatrix<f64>,
    /// Lower Cholesky factor of H, retained for primal recovery.
    pub l: DMatrix<f64>,
    pub f0: DVector<f64>,
    pub f_mat: DMatrix<f64>,
    pub a: DMatrix<f64>,
}

/// Ordered working set (insertion order preserved; order matters for the
/// memory/operation pattern and is replayed by the certifier).
pub type WorkingSet = Vec<usize>;

/// Affine map theta -> E theta + e.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub e_mat: DMatrix<f64>,
    pub e_vec: DVector<f64>,
}

impl AffineMap {
    pub fn empty(n_theta: usize) -> Self {
        AffineMap {
            e_mat: DMatrix::zeros(0, n_theta),
            e_vec: DVector::zeros(0),
        }
    }

    pub fn len(&self) -> usize {
        self.e_vec.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn eval(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.e_mat * theta + &self.e_vec
    }

    /// Row as (coefficients, offset).
    pub fn row(&self, i: usize) -> (Vec<f64>, f64) {
        (self.e_mat.row(i).iter().cloned().collect(), self.e_vec[i])
    }
}

/// Gram matrix of the working-set rows of M, with its factorization state.
#[derive(Clone, Debug)]
pub struct Gram {
    pub g: DMatrix<f64>,
    /// Lower Cholesky factor when nonsingular; partial factor otherwise.
    pub l: DMatrix<f64>,
    /// Index of the failed pivot when singular.
    pub singular_at: Option<usize>,
}

impl Gram {
    pub fn is_singular(&self) -> bool {
        self.singular_at.is_some()
    }
}

pub fn to_dual(p: &MpQP) -> Result<DualData, MpqpError> {
    p.validate()?;
    let l = cholesky_lower(&p.h, PD_TOL_REL).map_err(|(k, _)| MpqpError::NotPositiveDefinite(k))?;
    // M = A L^{-T}: row i of M solves L m_i = a_i.
    let mut m_mat = DMatrix::zeros(p.m, p.n);
    for i in 0..p.m {
        let ai = DVector::from_iterator(p.n, p.a.row(i).iter().cloned());
        let mi = solve_lower(&l, &ai);
        for j in 0..p.n {
            m_mat[(i, j)] = mi[j];
        }
    }
    // d0 = b0 + A H^{-1} f0; D = B + A H^{-1} F.
    let hinv_f0 = chol_solve(&l, &p.f0);
    let d0 = &p.b0 + &p.a * hinv_f0;
    let mut d_mat = p.b_mat.clone();
    for j in 0..p.n_theta {
        let col = DVector::from_iterator(p.n, p.f_mat.column(j).iter().cloned());
        let hinv_col = chol_solve(&l, &col);
        let add = &p.a * hinv_col;
        for i in 0..p.m {
            d_mat[(i, j)] += add[i];
        }
    }
    Ok(DualData {
        n: p.n,
        m: p.m,
        n_theta: p.n_theta,
        m_mat,
        d0,
        d_mat,
        l,
        f0: p.f0.clone(),
        f_mat: p.f_mat.clone(),
        a: p.a.clone(),
    })
}

impl DualData {
    fn check_ws(&self, w: &WorkingSet) -> Result<(), MpqpError> {
        for &i in w {
            if i >= self.m {
                return Err(MpqpError::IndexOutOfRange(i, self.m));
            }
        }
        Ok(())
    }

    /// d(theta) = d0 + D theta.
    pub fn d(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.d0 + &self.d_mat * theta
    }

    /// Gram matrix G = [M]_W [M]_W' in the working set's stored order,
    /// with an attempted Cholesky factorization. Depends only on W.
    pub fn gram(&self, w: &WorkingSet) -> Result<Gram, MpqpError> {
        self.check_ws(w)?;
        let s = w.len();
        let mut g = DMatrix::zeros(s, s);
        for (i, &wi) in w.iter().enumerate() {
            for (j, &wj) in w.iter().enumerate() {
                g[(i, j)] = self.m_mat.row(wi).dot(&self.m_mat.row(wj));
            }
        }
        match cholesky_lower(&g, SING_TOL_REL) {
            Ok(l) => Ok(Gram {
                g,
                l,
                singular_at: None,
            }),
            Err((k, l)) => Ok(Gram {
                g,
                l,
                singular_at: Some(k),
            }),
        }
    }

    /// Affine map for the equality-constrained dual solution on W:
    /// G lambda*(theta) = -[d(theta)]_W.
    pub fn affine_lambda_map(&self, w: &WorkingSet, gram: &Gram) -> Result<AffineMap, MpqpError> {
        if gram.is_singular() {
            return Err(MpqpError::SingularGram);
        }
        let s = w.len();
        let nt = self.n_theta;
        let mut e_mat = DMatrix::zeros(s, nt);
        for j in 0..nt {
            let rhs = DVector::from_iterator(s, w.iter().map(|&wi| -self.d_mat[(wi, j)]));
            let col = chol_solve(&gram.l, &rhs);
            for i in 0..s {
                e_mat[(i, j)] = col[i];
            }
        }
        let rhs = DVector::from_iterator(s, w.iter().map(|&wi| -self.d0[wi]));
        let e_vec = chol_solve(&gram.l, &rhs);
        Ok(AffineMap { e_mat, e_vec })
    }

    /// Complement of W in ascending index order.
    pub fn complement(&self, w: &WorkingSet) -> Vec<usize> {
        (0..self.m).filter(|i| !w.contains(i)).collect()
    }

    /// mu(theta) = [M]_Wbar [M]_W' lambda*(theta) + [d(theta)]_Wbar over the
    /// complement of W in ascending index order.
    pub fn affine_mu_map(&self, w: &WorkingSet, lam: &AffineMap) -> Result<AffineMap, MpqpError> {
        self.check_ws(w)?;
        if lam.len() != w.len() {
            return Err(MpqpError::Dimension("lambda map".into()));
        }
        let wbar = self.complement(w);
        let nt = self.n_theta;
        let mut cross = DMatrix::zeros(wbar.len(), w.len());
        for (i, &bi) in wbar.iter().enumerate() {
            for (j, &wj) in w.iter().enumerate() {
                cross[(i, j)] = self.m_mat.row(bi).dot(&self.m_mat.row(wj));
            }
        }
        let mut e_mat = &cross * &lam.e_mat;
        let mut e_vec = &cross * &lam.e_vec;
        for (i, &bi) in wbar.iter().enumerate() {
            for j in 0..nt {
                e_mat[(i, j)] += self.d_mat[(bi, j)];
            }
            e_vec[i] += self.d0[bi];
        }
        Ok(AffineMap { e_mat, e_vec })
    }

    /// Unit-norm null vector of a singular Gram matrix, taken from the
    /// zero-pivot subspace of the partial factorization. Sign orientation is
    /// applied later, per region. Depends only on W.
    pub fn null_direction(&self, w: &WorkingSet, gram: &Gram) -> Result<DVector<f64>, MpqpError> {
        let Some(k) = gram.singular_at else {
            return Err(MpqpError::NonsingularGram);
        };
        let s = w.len();
        // Leading k x k block factors as L_k L_k'; with g = G[0..k, k] the
        // vector (-(L_k L_k')^{-1} g, 1, 0, ...) annihilates G.
        let mut p = DVector::zeros(s);
        if k == 0 {
            p[0] = 1.0;
        } else {
            let lk = gram.l.view((0, 0), (k, k)).into_owned();
            let g = DVector::from_iterator(k, (0..k).map(|i| gram.g[(i, k)]));
            let y = chol_solve(&lk, &g);
            for i in 0..k {
                p[i] = -y[i];
            }
            p[k] = 1.0;
        }
        let norm = p.norm();
        Ok(p / norm)
    }

    /// x* = -H^{-1} (f(theta) + A' lambda) via the stored Cholesky factor.
    pub fn recover_primal(&self, lambda: &DVector<f64>, theta: &DVector<f64>) -> DVector<f64> {
        let f = &self.f0 + &self.f_mat * theta;
        let rhs = -(f + self.a.transpose() * lambda);
        chol_solve(&self.l, &rhs)
    }
}

/// Small worked examples shared by unit and acceptance tests.
pub mod examples {
    use super::*;
    use nalgebra::dmatrix;

    /// H = I2, f(theta) = -theta, A = [[1,0],[0,1],[-1,-1]], b0 = (1,1,1), B = 0.
    pub fn ex1() -> MpQP {
        MpQP {
            n: 2,
            m: 3,
            n_theta: 2,
            h: DMatrix::identity(2, 2),
            f0: DVector::zeros(2),
            f_mat: -DMatrix::identity(2, 2),
            a: dmatrix![1.0, 0.0; 0.0, 1.0; -1.0, -1.0],
            b0: DVector::from_vec(vec![1.0, 1.0, 1.0]),
            b_mat: DMatrix::zeros(3, 2),
            theta0: Polyhedron::from_box(&[-3.0, -3.0], &[3.0, 3.0]).unwrap(),
        }
    }

    /// Infeasible primal: x1 <= 0 and x1 >= 1.
    pub fn ex2() -> MpQP {
        MpQP {
            n: 2,
            m: 2,
            n_theta: 2,
            h: DMatrix::identity(2, 2),
            f0: DVector::zeros(2),
            f_mat: DMatrix::zeros(2, 2),
            a: dmatrix![1.0, 0.0; -1.0, 0.0],
            b0: DVector::from_vec(vec![0.0, -1.0]),
            b_mat: DMatrix::zeros(2, 2),
            theta0: Polyhedron::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap(),
        }
    }
}
