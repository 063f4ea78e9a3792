//! Condensed linear-MPC front end: LTI prediction models, the condensing
//! transformation to a parametric QP over the input sequence, the
//! inverted-pendulum-on-cart example, and a closed-loop simulator.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{GeometryError, Polyhedron};
use crate::mpqp::{to_dual, MpQP, MpqpError};
use crate::solver::{solve, SolveStatus, SolverConfig, SolverError};
use crate::wcet::{trace_cost, CostModel, WcetError};

#[derive(Debug, Error)]
pub enum MpcError {
    #[error("dimension mismatch in {0}")]
    Dimension(&'static str),
    #[error("non-finite model data")]
    NonFinite,
    #[error("input bounds must satisfy u_lo < u_hi elementwise")]
    BadBounds,
    #[error(transparent)]
    Mpqp(#[from] MpqpError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Wcet(#[from] WcetError),
}

/// Discrete-time LTI model x+ = A_d x + B_d u.
#[derive(Clone, Debug, PartialEq)]
pub struct LtiModel {
    pub a_d: DMatrix<f64>,
    pub b_d: DMatrix<f64>,
    pub ts: f64,
}

impl LtiModel {
    pub fn n_states(&self) -> usize {
        self.a_d.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b_d.ncols()
    }

    pub fn validate(&self) -> Result<(), MpcError> {
        if self.a_d.nrows() != self.a_d.ncols() || self.b_d.nrows() != self.a_d.nrows() {
            return Err(MpcError::Dimension("LTI model"));
        }
        if self.n_states() == 0 || self.n_inputs() == 0 {
            return Err(MpcError::Dimension("LTI model"));
        }
        if self.a_d.iter().any(|v| !v.is_finite())
            || self.b_d.iter().any(|v| !v.is_finite())
            || !self.ts.is_finite()
        {
            return Err(MpcError::NonFinite);
        }
        Ok(())
    }
}

/// Zero-order-hold discretization of continuous dynamics xdot = A x + B u via
/// the exponential of the augmented matrix [[A, B], [0, 0]] * ts.
pub fn discretize_zoh(a: &DMatrix<f64>, b: &DMatrix<f64>, ts: f64) -> Result<LtiModel, MpcError> {
    let ns = a.nrows();
    let nu = b.ncols();
    if a.ncols() != ns || b.nrows() != ns {
        return Err(MpcError::Dimension("continuous model"));
    }
    let dim = ns + nu;
    let mut aug = DMatrix::zeros(dim, dim);
    aug.view_mut((0, 0), (ns, ns)).copy_from(a);
    aug.view_mut((0, ns), (ns, nu)).copy_from(b);
    let e = (aug * ts).exp();
    Ok(LtiModel {
        a_d: e.view((0, 0), (ns, ns)).into_owned(),
        b_d: e.view((0, ns), (ns, nu)).into_owned(),
        ts,
    })
}

/// MPC problem over a horizon: stage cost |x - r|_Q^2 + |u|_R^2, terminal
/// weight Q_N, box input constraints. The parameter is theta = [x0; r].
#[derive(Clone, Debug, PartialEq)]
pub struct MpcSpec {
    pub model: LtiModel,
    pub horizon: usize,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub q_n: DMatrix<f64>,
    pub u_lo: DVector<f64>,
    pub u_hi: DVector<f64>,
    /// Box of initial states covered by the certificate.
    pub x_lo: DVector<f64>,
    pub x_hi: DVector<f64>,
    /// Box of state references covered by the certificate.
    pub r_lo: DVector<f64>,
    pub r_hi: DVector<f64>,
}

impl MpcSpec {
    pub fn n_theta(&self) -> usize {
        self.model.n_states() + self.r_lo.len()
    }

    pub fn validate(&self) -> Result<(), MpcError> {
        self.model.validate()?;
        let ns = self.model.n_states();
        let nu = self.model.n_inputs();
        if self.horizon == 0 {
            return Err(MpcError::Dimension("horizon"));
        }
        if self.q.nrows() != ns || self.q.ncols() != ns || self.q_n.nrows() != ns {
            return Err(MpcError::Dimension("state weights"));
        }
        if self.r.nrows() != nu || self.r.ncols() != nu {
            return Err(MpcError::Dimension("input weight"));
        }
        if self.u_lo.len() != nu || self.u_hi.len() != nu {
            return Err(MpcError::Dimension("input bounds"));
        }
        if self.u_lo.iter().zip(self.u_hi.iter()).any(|(l, h)| l >= h) {
            return Err(MpcError::BadBounds);
        }
        if self.x_lo.len() != ns || self.x_hi.len() != ns || self.r_lo.len() != self.r_hi.len() {
            return Err(MpcError::Dimension("parameter boxes"));
        }
        Ok(())
    }
}

/// Condenses the MPC problem into a parametric QP over the stacked input
/// sequence: n = N n_u decisions, m = 2 N n_u box-constraint rows,
/// H = Gamma' Qbar Gamma + Rbar, f(theta) = Gamma' Qbar (Phi x0 - rbar).
pub fn condense(spec: &MpcSpec) -> Result<MpQP, MpcError> {
    spec.validate()?;
    let ns = spec.model.n_states();
    let nu = spec.model.n_inputs();
    let nn = spec.horizon;
    let n = nn * nu;
    let m = 2 * n;
    let nr = spec.r_lo.len();
    let n_theta = ns + nr;

    // Powers of A_d up to N.
    let mut pows: Vec<DMatrix<f64>> = Vec::with_capacity(nn + 1);
    pows.push(DMatrix::identity(ns, ns));
    for i in 0..nn {
        pows.push(&pows[i] * &spec.model.a_d);
    }

    // Phi stacks A, A^2, ..., A^N; Gamma is block lower-triangular with
    // block (i, j) = A^(i-j) B for j <= i (predicting x_1 ... x_N).
    let mut phi = DMatrix::zeros(nn * ns, ns);
    let mut gamma = DMatrix::zeros(nn * ns, n);
    for i in 0..nn {
        phi.view_mut((i * ns, 0), (ns, ns)).copy_from(&pows[i + 1]);
        for j in 0..=i {
            let blk = &pows[i - j] * &spec.model.b_d;
            gamma.view_mut((i * ns, j * nu), (ns, nu)).copy_from(&blk);
        }
    }

    let mut qbar = DMatrix::zeros(nn * ns, nn * ns);
    for i in 0..nn {
        let w = if i + 1 == nn { &spec.q_n } else { &spec.q };
        qbar.view_mut((i * ns, i * ns), (ns, ns)).copy_from(w);
    }
    let mut rbar = DMatrix::zeros(n, n);
    for i in 0..nn {
        rbar.view_mut((i * nu, i * nu), (nu, nu)).copy_from(&spec.r);
    }

    let gtq = gamma.transpose() * &qbar;
    let h = &gtq * &gamma + rbar;

    // f(theta) = Gamma' Qbar (Phi x0 - S r) with S repeating the reference
    // at every stage (reference shorter than the state is zero-padded).
    let mut s_mat = DMatrix::zeros(nn * ns, nr);
    for i in 0..nn {
        for j in 0..nr.min(ns) {
            s_mat[(i * ns + j, j)] = 1.0;
        }
    }
    let mut f_mat = DMatrix::zeros(n, n_theta);
    f_mat.view_mut((0, 0), (n, ns)).copy_from(&(&gtq * &phi));
    f_mat
        .view_mut((0, ns), (n, nr))
        .copy_from(&(-(&gtq * &s_mat)));
    let f0 = DVector::zeros(n);

    // Input box: u <= u_hi stacked, then -u <= -u_lo stacked.
    let mut a = DMatrix::zeros(m, n);
    let mut b0 = DVector::zeros(m);
    for k in 0..n {
        a[(k, k)] = 1.0;
        b0[k] = spec.u_hi[k % nu];
        a[(n + k, k)] = -1.0;
        b0[n + k] = -spec.u_lo[k % nu];
    }
    let b_mat = DMatrix::zeros(m, n_theta);

    let lo: Vec<f64> = spec
        .x_lo
        .iter()
        .chain(spec.r_lo.iter())
        .cloned()
        .collect();
    let hi: Vec<f64> = spec
        .x_hi
        .iter()
        .chain(spec.r_hi.iter())
        .cloned()
        .collect();
    let theta0 = Polyhedron::from_box(&lo, &hi)?;

    let qp = MpQP {
        n,
        m,
        n_theta,
        h,
        f0,
        f_mat,
        a,
        b0,
        b_mat,
        theta0,
    };
    qp.validate()?;
    Ok(qp)
}

/// Terminal weight from the discrete-time Riccati fixed point of (A, B, Q, R),
/// so the finite-horizon controller inherits infinite-horizon stability
/// whenever the input constraints stay inactive near the origin.
fn riccati_terminal_weight(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> DMatrix<f64> {
    let mut p = q.clone();
    for _ in 0..10_000 {
        let btp = b.transpose() * &p;
        let gain_den = (r + &btp * b)
            .try_inverse()
            .expect("R + B'PB is positive definite");
        let next =
            q + a.transpose() * (&p - btp.transpose() * gain_den * &btp) * a;
        // Symmetrize every iterate: roundoff asymmetry is amplified by the
        // unstable open loop and otherwise destroys convergence.
        let next = 0.5 * (&next + next.transpose());
        let diff = (&next - &p).amax();
        p = next;
        if diff < 1e-12 {
            break;
        }
    }
    p
}

/// Inverted pendulum on a cart, linearized upright and ZOH-discretized.
///
/// States (cart position, cart velocity, pole angle, pole angular rate),
/// one input (horizontal force). All numeric values are this crate's
/// documented defaults, chosen so the closed loop stabilizes small
/// perturbations: cart mass 0.5 kg, pole point mass 0.2 kg at 0.3 m,
/// g = 9.81, sample time 0.05 s, weights Q = diag(2, 0.1, 10, 0.1),
/// R = 0.5, Q_N = Riccati fixed point, force bounds +-4 N, parameter
/// boxes below.
pub fn pendulum_example(n_horizon: usize) -> MpcSpec {
    let m_cart = 0.5;
    let m_pole = 0.2;
    let l = 0.3;
    let g = 9.81;
    let ts = 0.05;
    let mut a = DMatrix::zeros(4, 4);
    a[(0, 1)] = 1.0;
    a[(1, 2)] = -m_pole * g / m_cart;
    a[(2, 3)] = 1.0;
    a[(3, 2)] = (m_cart + m_pole) * g / (m_cart * l);
    let mut b = DMatrix::zeros(4, 1);
    b[(1, 0)] = 1.0 / m_cart;
    b[(3, 0)] = -1.0 / (m_cart * l);
    let model = discretize_zoh(&a, &b, ts).expect("fixed-size model discretizes");

    let q = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.1, 10.0, 0.1]));
    let r = DMatrix::from_element(1, 1, 0.5);
    let q_n = riccati_terminal_weight(&model.a_d, &model.b_d, &q, &r);
    MpcSpec {
        model,
        horizon: n_horizon,
        q,
        r,
        q_n,
        u_lo: DVector::from_element(1, -4.0),
        u_hi: DVector::from_element(1, 4.0),
        x_lo: DVector::from_vec(vec![-1.0, -1.5, -0.4, -1.5]),
        x_hi: DVector::from_vec(vec![1.0, 1.5, 0.4, 1.5]),
        r_lo: DVector::from_vec(vec![-0.5, -0.1, -0.05, -0.1]),
        r_hi: DVector::from_vec(vec![0.5, 0.1, 0.05, 0.1]),
    }
}

#[derive(Clone, Debug)]
pub struct SimStep {
    pub x: DVector<f64>,
    pub u: DVector<f64>,
    pub iterations: usize,
    pub cost: u64,
    pub hit_iter_cap: bool,
}

#[derive(Clone, Debug)]
pub struct SimResult {
    pub steps: Vec<SimStep>,
    pub x_final: DVector<f64>,
}

/// Receding-horizon simulation: solve the condensed QP at theta = [x; r],
/// apply the first input, propagate. Every solve is cold-started per the
/// configured solver settings.
pub fn closed_loop_sim(
    spec: &MpcSpec,
    x0: &DVector<f64>,
    reference: &DVector<f64>,
    steps: usize,
    cfg: &SolverConfig,
    cm: &CostModel,
) -> Result<SimResult, MpcError> {
    if steps == 0 {
        return Err(MpcError::Dimension("steps"));
    }
    if x0.len() != spec.model.n_states() || reference.len() != spec.r_lo.len() {
        return Err(MpcError::Dimension("simulation inputs"));
    }
    let qp = condense(spec)?;
    let dd = to_dual(&qp)?;
    let nu = spec.model.n_inputs();
    let mut x = x0.clone();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let theta = DVector::from_iterator(
            qp.n_theta,
            x.iter().chain(reference.iter()).cloned(),
        );
        let sr = solve(&dd, &theta, cfg)?;
        let u = match &sr.x {
            Some(full) => DVector::from_iterator(nu, full.iter().take(nu).cloned()),
            None => DVector::zeros(nu),
        };
        let cost = trace_cost(&sr.trace, cm)?;
        out.push(SimStep {
            x: x.clone(),
            u: u.clone(),
            iterations: sr.iterations,
            cost,
            hit_iter_cap: sr.status == SolveStatus::IterCap,
        });
        x = &spec.model.a_d * &x + &spec.model.b_d * &u;
    }
    Ok(SimResult {
        steps: out,
        x_final: x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pendulum_dimensions() {
        for (n_hor, n, m) in [(10, 10, 20), (1, 1, 2), (2, 2, 4)] {
            let qp = condense(&pendulum_example(n_hor)).unwrap();
            assert_eq!((qp.n, qp.m, qp.n_theta), (n, m, 8));
        }
    }

    #[test]
    fn dimension_law_all_horizons() {
        for n_hor in 1..=10 {
            let qp = condense(&pendulum_example(n_hor)).unwrap();
            assert_eq!(qp.n, n_hor);
            assert_eq!(qp.m, 2 * n_hor);
            // condense validated H for positive definiteness already.
            assert!(to_dual(&qp).is_ok());
        }
    }

    #[test]
    fn zoh_against_closed_form() {
        // Double integrator: A = [[0,1],[0,0]], B = [0,1]': exact discretes
        // are A_d = [[1,ts],[0,1]], B_d = [ts^2/2, ts]'.
        let a = nalgebra::dmatrix![0.0, 1.0; 0.0, 0.0];
        let b = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let ts = 0.1;
        let d = discretize_zoh(&a, &b, ts).unwrap();
        assert!((d.a_d[(0, 1)] - ts).abs() < 1e-14);
        assert!((d.b_d[(0, 0)] - ts * ts / 2.0).abs() < 1e-14);
        assert!((d.b_d[(1, 0)] - ts).abs() < 1e-14);
    }

    #[test]
    fn zero_weights_mean_zero_inputs() {
        let mut spec = pendulum_example(3);
        spec.q = DMatrix::zeros(4, 4);
        spec.q_n = DMatrix::zeros(4, 4);
        let qp = condense(&spec).unwrap();
        assert!(qp.f_mat.amax() < 1e-14);
        let dd = to_dual(&qp).unwrap();
        let theta = DVector::from_vec(vec![0.3, 0.1, 0.05, -0.2, 0.1, 0.0, 0.0, 0.0]);
        let sr = solve(&dd, &theta, &SolverConfig::default()).unwrap();
        assert_eq!(sr.status, SolveStatus::Optimal);
        assert!(sr.w_final.is_empty());
        assert!(sr.x.unwrap().amax() < 1e-12);
    }

    #[test]
    fn equilibrium_sim_is_idle() {
        let spec = pendulum_example(4);
        let sim = closed_loop_sim(
            &spec,
            &DVector::zeros(4),
            &DVector::zeros(4),
            10,
            &SolverConfig::default(),
            &CostModel::unit(),
        )
        .unwrap();
        for step in &sim.steps {
            assert!(step.u.amax() < 1e-12);
            assert_eq!(step.iterations, 1);
        }
    }

    #[test]
    fn perturbation_is_stabilized() {
        let spec = pendulum_example(8);
        let x0 = DVector::from_vec(vec![0.2, 0.0, 0.08, 0.0]);
        let sim = closed_loop_sim(
            &spec,
            &x0,
            &DVector::zeros(4),
            120,
            &SolverConfig::default(),
            &CostModel::unit(),
        )
        .unwrap();
        assert!(sim.steps.iter().all(|s| !s.hit_iter_cap));
        assert!(
            sim.x_final.norm() < 0.1 * x0.norm(),
            "final state norm {} vs initial {}",
            sim.x_final.norm(),
            x0.norm()
        );
    }

    #[test]
    fn rejects_bad_bounds() {
        let mut spec = pendulum_example(2);
        spec.u_lo[0] = spec.u_hi[0];
        assert!(matches!(condense(&spec), Err(MpcError::BadBounds)));
    }
}
