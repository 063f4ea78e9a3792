//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Solves `min c'x  s.t.  Ax <= b` with free `x` by the split `x = u - v`,
//! slack variables per row, and artificial variables in phase 1. Problems at
//! hand are small (tens of rows), so a full dense tableau is used. Bland's
//! rule (lowest eligible index for both entering and leaving variables) makes
//! pivoting deterministic and cycle-free.

use nalgebra::{DMatrix, DVector};

use super::GeometryError;

const PIVOT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum LpStatus {
    Optimal { point: DVector<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// rows x (ncols + 1); last column is the rhs.
    a: DMatrix<f64>,
    /// objective row, length ncols + 1 (reduced costs; last entry = -objective).
    obj: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.a[(row, col)];
        for j in 0..=self.ncols {
            self.a[(row, j)] /= piv;
        }
        for i in 0..self.a.nrows() {
            if i != row {
                let f = self.a[(i, col)];
                if f != 0.0 {
                    for j in 0..=self.ncols {
                        self.a[(i, j)] -= f * self.a[(row, j)];
                    }
                }
            }
        }
        let f = self.obj[col];
        if f != 0.0 {
            for j in 0..=self.ncols {
                self.obj[j] -= f * self.a[(row, j)];
            }
        }
        self.basis[row] = col;
    }

    /// Runs Bland-rule simplex on the current objective row until optimal or
    /// unbounded. `allowed` limits the candidate entering columns.
    fn run(&mut self, allowed: &[bool]) -> Result<bool, GeometryError> {
        let max_iter = 50_000 * (self.ncols + 1);
        for _ in 0..max_iter {
            // Entering: lowest index with negative reduced cost.
            let mut enter = None;
            for j in 0..self.ncols {
                if allowed[j] && !self.basis.contains(&j) && self.obj[j] < -PIVOT_TOL {
                    enter = Some(j);
                    break;
                }
            }
            let Some(col) = enter else {
                return Ok(true);
            };
            // Leaving: min ratio, ties broken by lowest basis variable index.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.a.nrows() {
                let aij = self.a[(i, col)];
                if aij > PIVOT_TOL {
                    let ratio = self.a[(i, self.ncols)] / aij;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12
                                || (ratio < lr + 1e-12 && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Ok(false); // unbounded
            };
            self.pivot(row, col);
        }
        Err(GeometryError::LpStall)
    }
}

/// Minimize `cost . x` over `{x : normals x <= offsets}` with free variables.
pub fn solve_lp(
    cost: &DVector<f64>,
    normals: &DMatrix<f64>,
    offsets: &DVector<f64>,
) -> Result<LpStatus, GeometryError> {
    let d = cost.len();
    let r = normals.nrows();
    if normals.ncols() != d || offsets.len() != r {
        return Err(GeometryError::DimensionMismatch);
    }
    if cost.iter().any(|v| !v.is_finite())
        || normals.iter().any(|v| !v.is_finite())
        || offsets.iter().any(|v| !v.is_finite())
    {
        return Err(GeometryError::NonFinite);
    }
    if r == 0 {
        if cost.iter().all(|&c| c == 0.0) {
            return Ok(LpStatus::Optimal {
                point: DVector::zeros(d),
                value: 0.0,
            });
        }
        return Ok(LpStatus::Unbounded);
    }

    // Columns: u(d), v(d), slacks(r), then one artificial per negative-offset
    // row. Rows with a nonnegative offset start basic in their slack, so only
    // negative-offset rows take part in phase 1; guard rows with large
    // offsets never inflate the phase-1 objective.
    let neg_rows: Vec<usize> = (0..r).filter(|&i| offsets[i] < 0.0).collect();
    let na = neg_rows.len();
    let ncols = 2 * d + r + na;
    let mut a = DMatrix::zeros(r, ncols + 1);
    let mut basis = vec![0usize; r];
    let mut art_of_row = vec![usize::MAX; r];
    for (k, &i) in neg_rows.iter().enumerate() {
        art_of_row[i] = 2 * d + r + k;
    }
    for i in 0..r {
        let sign = if offsets[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            a[(i, j)] = sign * normals[(i, j)];
            a[(i, d + j)] = -sign * normals[(i, j)];
        }
        a[(i, 2 * d + i)] = sign;
        a[(i, ncols)] = sign * offsets[i];
        if sign < 0.0 {
            a[(i, art_of_row[i])] = 1.0;
            basis[i] = art_of_row[i];
        } else {
            basis[i] = 2 * d + i;
        }
    }

    let mut tab = Tableau { a, obj: vec![0.0; ncols + 1], basis, ncols };
    if na > 0 {
        // Phase 1: minimize sum of artificials.
        for j in (2 * d + r)..ncols {
            tab.obj[j] = 1.0;
        }
        // Reduce objective against the artificial basic rows.
        for &i in &neg_rows {
            for j in 0..=tab.ncols {
                tab.obj[j] -= tab.a[(i, j)];
            }
        }
        let allowed_all = vec![true; ncols];
        let ok = tab.run(&allowed_all)?;
        // Feasibility roundoff scales with the magnitude of the offsets the
        // artificials start at.
        let scale = neg_rows
            .iter()
            .fold(1.0_f64, |acc, &i| acc.max(offsets[i].abs()));
        let phase1 = -tab.obj[ncols];
        if !ok {
            // The phase-1 objective is bounded below by zero, so an
            // "unbounded" ray can only come from roundoff in the reduced
            // costs. If the artificial sum is already negligible the point
            // is feasible and we can proceed; otherwise the tableau has
            // genuinely broken down.
            if phase1 > FEAS_TOL * scale {
                return Err(GeometryError::LpStall);
            }
        } else if phase1 > FEAS_TOL * scale {
            return Ok(LpStatus::Infeasible);
        }

        // Drive remaining basic artificials out, or neutralize their rows.
        for i in 0..r {
            if tab.basis[i] >= 2 * d + r {
                let mut pivoted = false;
                for j in 0..(2 * d + r) {
                    if tab.a[(i, j)].abs() > PIVOT_TOL {
                        tab.pivot(i, j);
                        pivoted = true;
                        break;
                    }
                }
                if !pivoted {
                    // Redundant row; clear it so it can never pivot again.
                    for j in 0..=ncols {
                        tab.a[(i, j)] = 0.0;
                    }
                }
            }
        }
    }

    // Phase 2: real objective over u, v; artificials barred.
    let mut allowed = vec![true; ncols];
    for j in (2 * d + r)..ncols {
        allowed[j] = false;
    }
    let mut obj = vec![0.0; ncols + 1];
    for j in 0..d {
        obj[j] = cost[j];
        obj[d + j] = -cost[j];
    }
    tab.obj = obj;
    for i in 0..r {
        let b = tab.basis[i];
        let f = tab.obj[b];
        if f != 0.0 {
            for j in 0..=ncols {
                tab.obj[j] -= f * tab.a[(i, j)];
            }
        }
    }
    let bounded = tab.run(&allowed)?;
    if !bounded {
        return Ok(LpStatus::Unbounded);
    }

    let mut point = DVector::zeros(d);
    for i in 0..r {
        let b = tab.basis[i];
        let val = tab.a[(i, ncols)];
        if b < d {
            point[b] += val;
        } else if b < 2 * d {
            point[b - d] -= val;
        }
    }
    let value = cost.dot(&point);
    Ok(LpStatus::Optimal { point, value })
}
