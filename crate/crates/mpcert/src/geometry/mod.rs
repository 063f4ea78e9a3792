//! Polyhedral and semi-algebraic parameter-region primitives.
//!
//! Regions are intersections of closed halfspaces `a.x <= b`, optionally
//! conjoined with low-degree polynomial inequalities `p(x) <= 0`. Emptiness
//! and Chebyshev centers are decided by a small dense LP (see `simplex`);
//! mixed regions fall back to budgeted hit-and-run sampling.

mod simplex;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::poly::Poly;
use crate::rng::Xoshiro256;

pub use simplex::{solve_lp as solve_lp_raw, LpStatus};

/// Bounding box applied before Chebyshev LPs so unbounded inputs stay solvable.
pub const DEFAULT_BOUND: f64 = 1e6;
/// Default feasibility / thin-region tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("dimension mismatch")]
    DimensionMismatch,
    #[error("non-finite input")]
    NonFinite,
    #[error("simplex failed to terminate")]
    LpStall,
}

/// Intersection of halfspaces `normals[i] . x <= offsets[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyhedron {
    pub normals: DMatrix<f64>,
    pub offsets: DVector<f64>,
}

impl Polyhedron {
    pub fn new(normals: DMatrix<f64>, offsets: DVector<f64>) -> Result<Self, GeometryError> {
        if normals.nrows() != offsets.len() {
            return Err(GeometryError::DimensionMismatch);
        }
        if normals.iter().any(|v| !v.is_finite()) || offsets.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Polyhedron { normals, offsets })
    }

    pub fn dim(&self) -> usize {
        self.normals.ncols()
    }

    pub fn num_rows(&self) -> usize {
        self.normals.nrows()
    }

    /// Axis-aligned box `lo <= x <= hi`.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self, GeometryError> {
        if lo.len() != hi.len() {
            return Err(GeometryError::DimensionMismatch);
        }
        let d = lo.len();
        let mut normals = DMatrix::zeros(2 * d, d);
        let mut offsets = DVector::zeros(2 * d);
        for i in 0..d {
            normals[(2 * i, i)] = 1.0;
            offsets[2 * i] = hi[i];
            normals[(2 * i + 1, i)] = -1.0;
            offsets[2 * i + 1] = -lo[i];
        }
        Polyhedron::new(normals, offsets)
    }

    /// True iff some zero row has a negative offset (region trivially empty).
    pub fn trivially_empty(&self) -> bool {
        for i in 0..self.num_rows() {
            let norm = self.normals.row(i).norm();
            if norm <= 1e-14 && self.offsets[i] < -1e-12 {
                return true;
            }
        }
        false
    }

    /// New polyhedron with an extra halfspace appended.
    pub fn with_row(&self, normal: &[f64], offset: f64) -> Polyhedron {
        let r = self.num_rows();
        let d = self.dim();
        let mut normals = DMatrix::zeros(r + 1, d);
        normals.view_mut((0, 0), (r, d)).copy_from(&self.normals);
        for j in 0..d {
            normals[(r, j)] = normal[j];
        }
        let mut offsets = DVector::zeros(r + 1);
        offsets.rows_mut(0, r).copy_from(&self.offsets);
        offsets[r] = offset;
        Polyhedron { normals, offsets }
    }

    /// Intersection with `other` (same dimension).
    pub fn intersect(&self, other: &Polyhedron) -> Polyhedron {
        let mut p = self.clone();
        for i in 0..other.num_rows() {
            let row: Vec<f64> = other.normals.row(i).iter().cloned().collect();
            p = p.with_row(&row, other.offsets[i]);
        }
        p
    }

    /// Per-coordinate bounds via 2*dim LPs, clamped to the default bound.
    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
        let d = self.dim();
        let mut lo = vec![-DEFAULT_BOUND; d];
        let mut hi = vec![DEFAULT_BOUND; d];
        for i in 0..d {
            let mut c = DVector::zeros(d);
            c[i] = 1.0;
            if let LpStatus::Optimal { value, .. } = solve_lp_raw(&c, &self.normals, &self.offsets)?
            {
                lo[i] = value.max(-DEFAULT_BOUND);
            }
            c[i] = -1.0;
            if let LpStatus::Optimal { value, .. } = solve_lp_raw(&c, &self.normals, &self.offsets)?
            {
                hi[i] = (-value).min(DEFAULT_BOUND);
            }
        }
        Ok((lo, hi))
    }
}

/// Result of a linear program over a polyhedron.
pub type LpResult = LpStatus;

/// Minimize `cost . x` over the polyhedron.
pub fn solve_lp(cost: &DVector<f64>, p: &Polyhedron) -> Result<LpStatus, GeometryError> {
    if cost.len() != p.dim() {
        return Err(GeometryError::DimensionMismatch);
    }
    solve_lp_raw(cost, &p.normals, &p.offsets)
}

/// Largest inscribed ball: maximizes r subject to `a.c + r*|a| <= b`.
///
/// A negative radius signals emptiness. The LP is solved inside an implicit
/// bounding box of half-width `DEFAULT_BOUND` so pathological unbounded
/// inputs stay well-posed. Zero rows with negative offsets short-circuit to
/// radius -inf.
pub fn chebyshev_center(p: &Polyhedron) -> Result<(DVector<f64>, f64), GeometryError> {
    let d = p.dim();
    if p.trivially_empty() {
        return Ok((DVector::zeros(d), f64::NEG_INFINITY));
    }
    // Variables y = (c, r); rows: a.c + |a| r <= b, plus box rows +-c_i + r <= BOUND.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..p.num_rows() {
        let norm = p.normals.row(i).norm();
        if norm <= 1e-14 {
            continue; // 0 <= b with b >= 0: vacuous
        }
        let mut row = vec![0.0; d + 1];
        for j in 0..d {
            row[j] = p.normals[(i, j)];
        }
        row[d] = norm;
        rows.push((row, p.offsets[i]));
    }
    for j in 0..d {
        let mut row = vec![0.0; d + 1];
        row[j] = 1.0;
        row[d] = 1.0;
        rows.push((row.clone(), DEFAULT_BOUND));
        row[j] = -1.0;
        rows.push((row, DEFAULT_BOUND));
    }
    if rows.is_empty() {
        return Ok((DVector::zeros(d), DEFAULT_BOUND));
    }
    let nr = rows.len();
    let mut normals = DMatrix::zeros(nr, d + 1);
    let mut offsets = DVector::zeros(nr);
    for (i, (row, b)) in rows.into_iter().enumerate() {
        for j in 0..=d {
            normals[(i, j)] = row[j];
        }
        offsets[i] = b;
    }
    let mut cost = DVector::zeros(d + 1);
    cost[d] = -1.0; // maximize r
    match solve_lp_raw(&cost, &normals, &offsets)? {
        LpStatus::Optimal { point, .. } => {
            let center = DVector::from_iterator(d, point.iter().take(d).cloned());
            Ok((center, point[d]))
        }
        // The Chebyshev LP over a box-augmented system is always feasible and
        // bounded; reaching here means degenerate input.
        LpStatus::Infeasible => Ok((DVector::zeros(d), f64::NEG_INFINITY)),
        LpStatus::Unbounded => Ok((DVector::zeros(d), DEFAULT_BOUND)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Emptiness {
    NonEmpty,
    /// Chebyshev radius within +-tol of zero: boundary-measure region.
    Thin,
    Empty,
}

/// Emptiness by Chebyshev radius: `Empty` iff radius < -tol, `Thin` iff
/// |radius| <= tol.
pub fn emptiness(p: &Polyhedron, tol: f64) -> Result<Emptiness, GeometryError> {
    let (_, r) = chebyshev_center(p)?;
    if r < -tol {
        Ok(Emptiness::Empty)
    } else if r <= tol {
        Ok(Emptiness::Thin)
    } else {
        Ok(Emptiness::NonEmpty)
    }
}

pub fn is_empty(p: &Polyhedron, tol: f64) -> Result<bool, GeometryError> {
    Ok(emptiness(p, tol)? != Emptiness::NonEmpty)
}

/// Polynomial inequality `p(x) <= 0` of degree >= 2 (affine constraints
/// belong in the Polyhedron part).
#[derive(Clone, Debug, PartialEq)]
pub struct PolyConstraint {
    pub poly: Poly,
}

impl PolyConstraint {
    pub fn new(poly: Poly) -> Self {
        debug_assert!(poly.degree() >= 2, "affine constraints go in the Polyhedron");
        PolyConstraint { poly }
    }

    pub fn satisfied(&self, x: &[f64], tol: f64) -> bool {
        self.poly.eval(x) <= tol
    }
}

/// Conjunction of a polyhedron and polynomial constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionDescription {
    pub linear: Polyhedron,
    pub nonlinear: Vec<PolyConstraint>,
}

impl RegionDescription {
    pub fn polyhedral(linear: Polyhedron) -> Self {
        RegionDescription {
            linear,
            nonlinear: Vec::new(),
        }
    }

    pub fn is_polyhedral(&self) -> bool {
        self.nonlinear.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.linear.dim()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Boundary,
    Outside,
}

/// Classifies a point against a region. Linear slacks are normalized by the
/// row norm; polynomial slacks are used raw.
pub fn contains(r: &RegionDescription, x: &DVector<f64>, tol: f64) -> Result<Membership, GeometryError> {
    if x.len() != r.dim() {
        return Err(GeometryError::DimensionMismatch);
    }
    let mut on_boundary = false;
    for i in 0..r.linear.num_rows() {
        let norm = r.linear.normals.row(i).norm();
        let raw = r.linear.offsets[i] - r.linear.normals.row(i).transpose().dot(x);
        let slack = if norm > 1e-14 { raw / norm } else { raw };
        if slack < -tol {
            return Ok(Membership::Outside);
        }
        if slack <= tol {
            on_boundary = true;
        }
    }
    let xs: Vec<f64> = x.iter().cloned().collect();
    for pc in &r.nonlinear {
        let slack = -pc.poly.eval(&xs);
        if slack < -tol {
            return Ok(Membership::Outside);
        }
        if slack <= tol {
            on_boundary = true;
        }
    }
    Ok(if on_boundary {
        Membership::Boundary
    } else {
        Membership::Inside
    })
}

/// Interior point: Chebyshev center fast path; seeded hit-and-run fallback
/// when polynomial constraints reject the center. `None` after `budget`
/// samples (caller flags the region unresolved).
pub fn interior_point(
    r: &RegionDescription,
    budget: usize,
    seed: u64,
) -> Result<Option<DVector<f64>>, GeometryError> {
    let (center, radius) = chebyshev_center(&r.linear)?;
    if radius <= 0.0 || !radius.is_finite() {
        return Ok(None);
    }
    let xs: Vec<f64> = center.iter().cloned().collect();
    if r.nonlinear.iter().all(|pc| pc.satisfied(&xs, 0.0)) {
        return Ok(Some(center));
    }
    // Hit-and-run inside the linear part, starting from the center.
    let mut rng = Xoshiro256::new(seed);
    let d = r.dim();
    let mut x = center.clone();
    for _ in 0..budget {
        let dir = DVector::from_vec(rng.unit_direction(d));
        // Exact chord clipping against every halfspace: a.(x + t dir) <= b.
        let mut t_lo = f64::NEG_INFINITY;
        let mut t_hi = f64::INFINITY;
        for i in 0..r.linear.num_rows() {
            let a_dir = r.linear.normals.row(i).transpose().dot(&dir);
            let slack = r.linear.offsets[i] - r.linear.normals.row(i).transpose().dot(&x);
            if a_dir.abs() <= 1e-14 {
                continue;
            }
            let t = slack / a_dir;
            if a_dir > 0.0 {
                t_hi = t_hi.min(t);
            } else {
                t_lo = t_lo.max(t);
            }
        }
        if !t_lo.is_finite() {
            t_lo = -DEFAULT_BOUND;
        }
        if !t_hi.is_finite() {
            t_hi = DEFAULT_BOUND;
        }
        if t_hi <= t_lo {
            continue;
        }
        let t = rng.uniform(t_lo, t_hi);
        x += t * &dir;
        let xs: Vec<f64> = x.iter().cloned().collect();
        if r.nonlinear.iter().all(|pc| pc.satisfied(&xs, 0.0)) {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn box2(h: f64) -> Polyhedron {
        Polyhedron::from_box(&[-h, -h], &[h, h]).unwrap()
    }

    #[test]
    fn chebyshev_box() {
        let (c, r) = chebyshev_center(&box2(3.0)).unwrap();
        assert!(c.norm() < 1e-9);
        assert!((r - 3.0).abs() < 1e-9);
    }

    #[test]
    fn chebyshev_triangle_inradius() {
        // {t1 >= 0, t2 >= 0, t1 + t2 <= 2}: inradius 2 - sqrt(2).
        let p = Polyhedron::new(
            dmatrix![-1.0, 0.0; 0.0, -1.0; 1.0, 1.0],
            DVector::from_vec(vec![0.0, 0.0, 2.0]),
        )
        .unwrap();
        let (c, r) = chebyshev_center(&p).unwrap();
        let expect = 2.0 - 2.0_f64.sqrt();
        assert!((r - expect).abs() < 1e-9, "r = {r}");
        assert!((c[0] - expect).abs() < 1e-8);
        assert!((c[1] - expect).abs() < 1e-8);
    }

    #[test]
    fn chebyshev_nonuniform_box_high_dim() {
        // Regression: the implicit +-1e6 guard rows must not destabilize
        // phase 1 on skinny high-dimensional boxes (they once pushed the
        // phase-1 objective past the feasibility tolerance, misreporting
        // plainly nonempty boxes as empty).
        let lo = [-1.0, -1.5, -0.4, -1.5, -0.5, -0.1, -0.05, -0.1];
        let hi: Vec<f64> = lo.iter().map(|v| -v).collect();
        let p = Polyhedron::from_box(&lo, &hi).unwrap();
        let (c, r) = chebyshev_center(&p).unwrap();
        assert!((r - 0.05).abs() < 1e-9, "r = {r}");
        for j in 0..8 {
            assert!(lo[j] <= c[j] && c[j] <= hi[j]);
        }
        assert_eq!(emptiness(&p, 1e-9).unwrap(), Emptiness::NonEmpty);
    }

    #[test]
    fn chebyshev_empty() {
        let p = Polyhedron::new(
            dmatrix![1.0, 0.0; -1.0, 0.0],
            DVector::from_vec(vec![0.0, -1.0]),
        )
        .unwrap();
        let (_, r) = chebyshev_center(&p).unwrap();
        assert!(r < 0.0);
    }

    #[test]
    fn emptiness_cases() {
        assert_eq!(emptiness(&box2(1.0), 1e-9).unwrap(), Emptiness::NonEmpty);
        let contradictory = Polyhedron::new(
            dmatrix![1.0, 0.0; -1.0, 0.0],
            DVector::from_vec(vec![0.0, -1.0]),
        )
        .unwrap();
        assert_eq!(emptiness(&contradictory, 1e-9).unwrap(), Emptiness::Empty);
        let thin = Polyhedron::new(
            dmatrix![1.0, 0.0; -1.0, 0.0],
            DVector::from_vec(vec![0.0, 0.0]),
        )
        .unwrap();
        assert_eq!(emptiness(&thin, 1e-9).unwrap(), Emptiness::Thin);
    }

    #[test]
    fn contains_classification() {
        let r = RegionDescription::polyhedral(box2(1.0));
        let tol = 1e-8;
        assert_eq!(
            contains(&r, &DVector::from_vec(vec![0.0, 0.0]), tol).unwrap(),
            Membership::Inside
        );
        assert_eq!(
            contains(&r, &DVector::from_vec(vec![1.0, 0.0]), tol).unwrap(),
            Membership::Boundary
        );
        assert_eq!(
            contains(&r, &DVector::from_vec(vec![2.0, 0.0]), tol).unwrap(),
            Membership::Outside
        );
    }

    #[test]
    fn interior_point_center_fast_path() {
        let r = RegionDescription::polyhedral(box2(1.0));
        let p = interior_point(&r, 10, 0).unwrap().unwrap();
        assert!(p.norm() < 1e-9);

        // Center (0,0) satisfies t1*t2 <= 0.5.
        let mut q = Poly::affine(&[1.0, 0.0], 0.0).mul(&Poly::affine(&[0.0, 1.0], 0.0));
        q = q.add(&Poly::constant(2, -0.5));
        let r = RegionDescription {
            linear: box2(1.0),
            nonlinear: vec![PolyConstraint::new(q)],
        };
        let p = interior_point(&r, 10, 0).unwrap().unwrap();
        assert!(p.norm() < 1e-9);
    }

    #[test]
    fn interior_point_unsatisfiable_exhausts_budget() {
        // On [0,1]^2 the max of t1*t2 is 1 < 2, so -t1*t2 <= -2 is empty.
        let linear = Polyhedron::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let q = Poly::affine(&[1.0, 0.0], 0.0)
            .mul(&Poly::affine(&[0.0, 1.0], 0.0))
            .scale(-1.0)
            .add(&Poly::constant(2, 2.0));
        let r = RegionDescription {
            linear,
            nonlinear: vec![PolyConstraint::new(q)],
        };
        assert!(interior_point(&r, 200, 1).unwrap().is_none());
    }

    #[test]
    fn interior_point_sampled_fallback_lands_inside() {
        // Center of [-1,1]^2 violates t1 + t2^2... use quadratic ring-like
        // constraint t1^2 >= 0.25 encoded as 0.25 - t1^2 <= 0.
        let q = Poly::affine(&[1.0, 0.0], 0.0)
            .mul(&Poly::affine(&[1.0, 0.0], 0.0))
            .scale(-1.0)
            .add(&Poly::constant(2, 0.25));
        let r = RegionDescription {
            linear: box2(1.0),
            nonlinear: vec![PolyConstraint::new(q)],
        };
        let p = interior_point(&r, 1000, 3).unwrap().unwrap();
        assert_eq!(
            contains(&r, &p, 1e-12).unwrap(),
            Membership::Inside
        );
    }

    #[test]
    fn determinism_same_seed() {
        let q = Poly::affine(&[1.0, 0.0], 0.0)
            .mul(&Poly::affine(&[1.0, 0.0], 0.0))
            .scale(-1.0)
            .add(&Poly::constant(2, 0.25));
        let r = RegionDescription {
            linear: box2(1.0),
            nonlinear: vec![PolyConstraint::new(q)],
        };
        let a = interior_point(&r, 1000, 9).unwrap().unwrap();
        let b = interior_point(&r, 1000, 9).unwrap().unwrap();
        assert_eq!(a, b);
    }
}
