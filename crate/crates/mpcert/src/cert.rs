//! Parametric certification: enumerates parameter regions together with the
//! exact working-set sequence the solver executes on each of them.
//!
//! The explorer mirrors the solver's branch structure symbolically. Every
//! runtime sign test on an affine quantity becomes a halfspace split; the
//! ratio-test argmin becomes a family of cross-multiplied comparisons, which
//! stay affine while the dual iterate is affine in theta and become
//! low-degree polynomial constraints after consecutive removals. The dual
//! iterate itself is carried as a rational function (polynomial numerators
//! over a shared denominator that is positive on each region's interior), so
//! removal steps compose exactly instead of being re-approximated.

use nalgebra::DVector;
use thiserror::Error;

use crate::geometry::{
    contains, emptiness, interior_point, solve_lp, Emptiness, GeometryError, LpStatus, Membership,
    PolyConstraint, Polyhedron, RegionDescription,
};
use crate::mpqp::{DualData, MpqpError, WorkingSet};
use crate::poly::Poly;
use crate::rng::{fnv1a, Xoshiro256, FNV_OFFSET};
use crate::solver::{
    solve, trace_hash, AddRule, RemoveRule, SolverConfig, SolverError, WorkingSetSequence,
};

/// Coefficients below this magnitude are treated as exact zeros when a branch
/// condition degenerates to a constant.
const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CertError {
    #[error(transparent)]
    Mpqp(#[from] MpqpError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("parameter set is unbounded in coordinate {0}")]
    UnboundedParameterSet(usize),
    #[error("parameter set is empty")]
    EmptyParameterSet,
    #[error("the literal ratio-test variant admits no convex region splits; certify supports the blocking rule only")]
    UnsupportedRemoveRule,
}

#[derive(Clone, Debug)]
pub struct CertOptions {
    /// Maximum total degree carried in the rational dual iterate; removal
    /// chains exceeding it freeze their region as unresolved.
    pub degree_cap: u32,
    /// Hit-and-run budget for interior points of mixed regions.
    pub sample_budget: usize,
    pub seed: u64,
    /// Emptiness / thin-region tolerance.
    pub tol: f64,
}

impl Default for CertOptions {
    fn default() -> Self {
        CertOptions {
            degree_cap: 4,
            sample_budget: 10_000,
            seed: 0,
            tol: 1e-9,
        }
    }
}

/// Dual iterate lambda(theta) restricted to the working set, as
/// numerators over a shared denominator. The denominator is positive on the
/// interior of the region that carries the state (guaranteed by the sign
/// splits that produced it); degree-zero denominator means the iterate is
/// polynomial (affine right after an add step).
#[derive(Clone, Debug, PartialEq)]
pub struct RationalAffineState {
    pub nums: Vec<Poly>,
    pub den: Poly,
}

impl RationalAffineState {
    fn constants(nvars: usize, values: &[f64]) -> Self {
        RationalAffineState {
            nums: values.iter().map(|&v| Poly::constant(nvars, v)).collect(),
            den: Poly::constant(nvars, 1.0),
        }
    }

    pub fn degree(&self) -> u32 {
        self.nums
            .iter()
            .map(Poly::degree)
            .max()
            .unwrap_or(0)
            .max(self.den.degree())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionStatus {
    Optimal,
    Infeasible,
    IterCap,
    Unresolved,
}

impl RegionStatus {
    pub fn name(self) -> &'static str {
        match self {
            RegionStatus::Optimal => "optimal",
            RegionStatus::Infeasible => "infeasible",
            RegionStatus::IterCap => "iter_cap",
            RegionStatus::Unresolved => "unresolved",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "optimal" => Some(RegionStatus::Optimal),
            "infeasible" => Some(RegionStatus::Infeasible),
            "iter_cap" => Some(RegionStatus::IterCap),
            "unresolved" => Some(RegionStatus::Unresolved),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionRecord {
    pub id: usize,
    pub region: RegionDescription,
    pub wseq: WorkingSetSequence,
    pub kbar: usize,
    pub status: RegionStatus,
    pub archetype: Option<DVector<f64>>,
    /// Canonical branch labels from the exploration root; stable across runs.
    pub branch_path: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CertStats {
    pub nodes_explored: usize,
    pub max_depth: usize,
    pub empty_pruned: usize,
    pub thin_pruned: usize,
    pub unresolved_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertOutput {
    pub regions: Vec<RegionRecord>,
    pub stats: CertStats,
    pub seed: u64,
    /// FNV digest of the dual problem data, for pairing artifacts.
    pub problem_digest: u64,
    pub n: usize,
    pub m: usize,
    pub n_theta: usize,
    pub theta0: Polyhedron,
}

/// Exploration node: a region on which the first `wseq.len() - 1` iterations
/// are already decided and `wseq.last()` is the working set about to be
/// processed.
struct Node {
    region: RegionDescription,
    w: WorkingSet,
    wseq: WorkingSetSequence,
    state: RationalAffineState,
    path: String,
}

/// Whether a symbolic sign condition corresponds to a closed (<=) or strict
/// (<) runtime test. Both are stored as closed halfspaces; the distinction
/// only matters when the condition degenerates to a constant.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Sense {
    Closed,
    Strict,
}

/// Region extended with `poly(theta) <= 0` (or the closure of `< 0`).
/// `None` means the condition is unsatisfiable on the region.
fn with_constraint(region: &RegionDescription, poly: &Poly, sense: Sense) -> Option<RegionDescription> {
    if let Some(c) = poly.as_constant() {
        let ok = match sense {
            Sense::Closed => c <= ZERO_TOL,
            Sense::Strict => c < -ZERO_TOL,
        };
        return if ok { Some(region.clone()) } else { None };
    }
    if let Some((coeffs, off)) = poly.as_affine() {
        let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm <= ZERO_TOL {
            // Effectively constant once the negligible slope is dropped.
            return with_constraint(region, &Poly::constant(poly.nvars, off), sense);
        }
        let normal: Vec<f64> = coeffs.iter().map(|c| c / norm).collect();
        let offset = -off / norm;
        // Skip rows already present (exact duplicates keep matrices small).
        for i in 0..region.linear.num_rows() {
            if (region.linear.offsets[i] - offset).abs() <= 1e-12
                && region
                    .linear
                    .normals
                    .row(i)
                    .iter()
                    .zip(&normal)
                    .all(|(a, b)| (a - b).abs() <= 1e-12)
            {
                return Some(region.clone());
            }
        }
        let mut out = region.clone();
        out.linear = out.linear.with_row(&normal, offset);
        return Some(out);
    }
    // Genuine polynomial condition: normalize by the largest coefficient.
    let scale = poly
        .terms
        .values()
        .fold(0.0_f64, |acc, &c| acc.max(c.abs()));
    let mut out = region.clone();
    out.nonlinear.push(PolyConstraint::new(poly.scale(1.0 / scale)));
    Some(out)
}

enum Fate {
    Keep,
    Empty,
    Thin,
    /// Linear relaxation nonempty but sampling found no interior point.
    Unresolved,
}

fn classify(region: &RegionDescription, opts: &CertOptions, seed: u64) -> Result<Fate, GeometryError> {
    match emptiness(&region.linear, opts.tol)? {
        Emptiness::Empty => return Ok(Fate::Empty),
        Emptiness::Thin => return Ok(Fate::Thin),
        Emptiness::NonEmpty => {}
    }
    if region.is_polyhedral() {
        return Ok(Fate::Keep);
    }
    match interior_point(region, opts.sample_budget, seed)? {
        Some(_) => Ok(Fate::Keep),
        None => Ok(Fate::Unresolved),
    }
}

fn path_seed(base: u64, path: &str) -> u64 {
    base ^ fnv1a(path.as_bytes(), FNV_OFFSET)
}

/// Order-sensitive FNV digest of the dual data, used to pair certification
/// artifacts with the problem file they were computed from.
pub fn digest_dual(dd: &DualData) -> u64 {
    let mut h = FNV_OFFSET;
    for v in [dd.n as u64, dd.m as u64, dd.n_theta as u64] {
        h = fnv1a(&v.to_le_bytes(), h);
    }
    for x in dd.m_mat.iter().chain(dd.d0.iter()).chain(dd.d_mat.iter()) {
        h = fnv1a(&x.to_bits().to_le_bytes(), h);
    }
    h
}

fn affine_row(coeffs: &[f64], off: f64) -> Poly {
    Poly::affine(coeffs, off)
}

pub fn certify(
    dd: &DualData,
    theta0: &Polyhedron,
    cfg: &SolverConfig,
    opts: &CertOptions,
) -> Result<CertOutput, CertError> {
    if cfg.remove_rule != RemoveRule::ClassicBlocking {
        return Err(CertError::UnsupportedRemoveRule);
    }
    if theta0.dim() != dd.n_theta {
        return Err(CertError::Mpqp(MpqpError::Dimension(
            "theta0 dimension".into(),
        )));
    }
    // Theta0 must be bounded and nonempty.
    for i in 0..theta0.dim() {
        for sign in [1.0, -1.0] {
            let mut c = DVector::zeros(theta0.dim());
            c[i] = sign;
            match solve_lp(&c, theta0)? {
                LpStatus::Unbounded => return Err(CertError::UnboundedParameterSet(i)),
                LpStatus::Infeasible => return Err(CertError::EmptyParameterSet),
                LpStatus::Optimal { .. } => {}
            }
        }
    }

    let nvars = dd.n_theta;
    let lambda0: Vec<f64> = match &cfg.lambda0 {
        Some(l0) => cfg.w0.iter().map(|&i| l0[i]).collect(),
        None => vec![0.0; cfg.w0.len()],
    };
    let root = Node {
        region: RegionDescription::polyhedral(theta0.clone()),
        w: cfg.w0.clone(),
        wseq: vec![cfg.w0.clone()],
        state: RationalAffineState::constants(nvars, &lambda0),
        path: String::new(),
    };

    let mut stats = CertStats::default();
    let mut records: Vec<RegionRecord> = Vec::new();
    let mut stack = vec![root];

    // Emits a finished region; archetype from a path-derived deterministic seed.
    let emit = |records: &mut Vec<RegionRecord>,
                stats: &mut CertStats,
                status: RegionStatus,
                region: RegionDescription,
                wseq: WorkingSetSequence,
                kbar: usize,
                path: String,
                opts: &CertOptions|
     -> Result<(), CertError> {
        let archetype = interior_point(&region, opts.sample_budget, path_seed(opts.seed, &path))?;
        if status == RegionStatus::Unresolved {
            stats.unresolved_count += 1;
        }
        records.push(RegionRecord {
            id: records.len(),
            region,
            wseq,
            kbar,
            status,
            archetype,
            branch_path: path,
        });
        Ok(())
    };

    // Classifies a candidate child region and routes it: exploration node,
    // emitted terminal, pruned, or frozen unresolved.
    enum Route {
        Explore(Node),
        Terminal(RegionStatus),
    }

    while let Some(node) = stack.pop() {
        stats.nodes_explored += 1;
        let depth = node.path.split('/').filter(|s| !s.is_empty()).count();
        stats.max_depth = stats.max_depth.max(depth);

        if node.wseq.len() > cfg.k_max {
            emit(
                &mut records,
                &mut stats,
                RegionStatus::IterCap,
                node.region,
                node.wseq,
                cfg.k_max,
                node.path,
                opts,
            )?;
            continue;
        }
        let k = node.wseq.len();
        let s = node.w.len();
        let gram = dd.gram(&node.w)?;

        // Children in canonical order; reversed before pushing so the DFS
        // visits (terminal, add ascending, remove ascending) first.
        let mut children: Vec<(Route, RegionDescription, String)> = Vec::new();

        if !gram.is_singular() {
            let lam_map = dd.affine_lambda_map(&node.w, &gram)?;
            let lam_polys: Vec<Poly> = (0..s)
                .map(|i| {
                    let (c, o) = lam_map.row(i);
                    affine_row(&c, o)
                })
                .collect();

            // (b1) lambda*(theta) >= 0 on all working-set positions.
            let mut r1 = Some(node.region.clone());
            for lp in &lam_polys {
                r1 = r1.and_then(|r| with_constraint(&r, &lp.scale(-1.0), Sense::Closed));
            }
            if let Some(r1) = r1 {
                let mu_map = dd.affine_mu_map(&node.w, &lam_map)?;
                let wbar = dd.complement(&node.w);
                let mu_polys: Vec<Poly> = (0..wbar.len())
                    .map(|i| {
                        let (c, o) = mu_map.row(i);
                        affine_row(&c, o)
                    })
                    .collect();

                // Terminal optimal: mu(theta) >= 0.
                let mut rt = Some(r1.clone());
                for mp in &mu_polys {
                    rt = rt.and_then(|r| with_constraint(&r, &mp.scale(-1.0), Sense::Closed));
                }
                if let Some(rt) = rt {
                    children.push((
                        Route::Terminal(RegionStatus::Optimal),
                        rt,
                        format!("{}/t", node.path),
                    ));
                }

                // Add children, one per complement constraint, ascending.
                for (i, &ci) in wbar.iter().enumerate() {
                    let mut rc = with_constraint(&r1, &mu_polys[i], Sense::Strict);
                    match cfg.add_rule {
                        AddRule::Dantzig => {
                            for l in 0..wbar.len() {
                                if l == i {
                                    continue;
                                }
                                let diff = mu_polys[i].sub(&mu_polys[l]);
                                let sense = if l < i { Sense::Strict } else { Sense::Closed };
                                rc = rc.and_then(|r| with_constraint(&r, &diff, sense));
                            }
                        }
                        AddRule::Bland => {
                            for l in 0..i {
                                rc = rc.and_then(|r| {
                                    with_constraint(&r, &mu_polys[l].scale(-1.0), Sense::Closed)
                                });
                            }
                        }
                    }
                    if let Some(rc) = rc {
                        let mut w = node.w.clone();
                        w.push(ci);
                        let mut wseq = node.wseq.clone();
                        wseq.push(w.clone());
                        // The iterate resets to the affine lambda* with a
                        // zero appended for the incoming constraint.
                        let mut nums = lam_polys.clone();
                        nums.push(Poly::zero(nvars));
                        let state = RationalAffineState {
                            nums,
                            den: Poly::constant(nvars, 1.0),
                        };
                        let path = format!("{}/a{}", node.path, ci);
                        children.push((
                            Route::Explore(Node {
                                region: rc.clone(),
                                w,
                                wseq,
                                state,
                                path: path.clone(),
                            }),
                            rc,
                            path,
                        ));
                    }
                }
            }

            // (b2) removal children: blocking-ratio argmin at position j.
            for j in 0..s {
                // Candidacy is strict at runtime (lambda*_j < 0).
                let mut rc = with_constraint(&node.region, &lam_polys[j], Sense::Strict);
                for l in 0..s {
                    if l == j || rc.is_none() {
                        continue;
                    }
                    // alpha_j <= alpha_l cross-multiplied by the positive
                    // denominators: num_l * lambda*_j - num_j * lambda*_l <= 0.
                    // Non-candidates (lambda*_l >= 0) satisfy it automatically.
                    let cmp = node.state.nums[l]
                        .mul(&lam_polys[j])
                        .sub(&node.state.nums[j].mul(&lam_polys[l]));
                    if let Some(c) = cmp.as_constant() {
                        if c.abs() <= ZERO_TOL {
                            if l < j {
                                // Identical ratios: the earlier candidate l
                                // always wins the tie, so j is removed only
                                // where l is not a candidate.
                                rc = rc.and_then(|r| {
                                    with_constraint(&r, &lam_polys[l].scale(-1.0), Sense::Closed)
                                });
                            }
                        } else if c > ZERO_TOL {
                            rc = None;
                        }
                    } else {
                        rc = rc.and_then(|r| with_constraint(&r, &cmp, Sense::Closed));
                    }
                }
                if let Some(rc) = rc {
                    // Blocking update: lambda'_l = (num_j lam*_l - num_l lam*_j) / den'.
                    let new_den = node.state.nums[j].sub(&node.state.den.mul(&lam_polys[j]));
                    let mut nums = Vec::with_capacity(s - 1);
                    for l in 0..s {
                        if l == j {
                            continue;
                        }
                        nums.push(
                            node.state.nums[j]
                                .mul(&lam_polys[l])
                                .sub(&node.state.nums[l].mul(&lam_polys[j])),
                        );
                    }
                    let state = RationalAffineState { nums, den: new_den };
                    let mut w = node.w.clone();
                    let removed = w.remove(j);
                    let mut wseq = node.wseq.clone();
                    wseq.push(w.clone());
                    let path = format!("{}/r{}", node.path, removed);
                    if state.degree() > opts.degree_cap {
                        // Frozen: the removal itself is certain, continuing
                        // symbolically is not.
                        match classify(&rc, opts, path_seed(opts.seed, &path))? {
                            Fate::Empty => stats.empty_pruned += 1,
                            Fate::Thin => stats.thin_pruned += 1,
                            Fate::Keep | Fate::Unresolved => {
                                emit(
                                    &mut records,
                                    &mut stats,
                                    RegionStatus::Unresolved,
                                    rc,
                                    wseq,
                                    k,
                                    path,
                                    opts,
                                )?;
                            }
                        }
                        continue;
                    }
                    children.push((
                        Route::Explore(Node {
                            region: rc.clone(),
                            w,
                            wseq,
                            state,
                            path: path.clone(),
                        }),
                        rc,
                        path,
                    ));
                }
            }
        } else {
            // Singular branch: p is theta-independent; only its orientation
            // depends on theta, through the affine sign of [d(theta)]_W' p.
            let p = dd.null_direction(&node.w, &gram)?;
            let mut coeffs = vec![0.0; nvars];
            let mut off = 0.0;
            for (i, &wi) in node.w.iter().enumerate() {
                off += p[i] * dd.d0[wi];
                for t in 0..nvars {
                    coeffs[t] += p[i] * dd.d_mat[(wi, t)];
                }
            }
            let spoly = affine_row(&coeffs, off);
            // The solver flips p only when the sign is strictly positive, so
            // the kept orientation owns the boundary.
            let sides = [
                (p.clone(), spoly.clone(), Sense::Closed, "dn"),
                (-p.clone(), spoly.scale(-1.0), Sense::Strict, "dp"),
            ];
            for (q, cond, sense, label) in sides {
                let Some(ro) = with_constraint(&node.region, &cond, sense) else {
                    continue;
                };
                let opath = format!("{}/{}", node.path, label);
                if q.iter().all(|&v| v >= 0.0) {
                    children.push((Route::Terminal(RegionStatus::Infeasible), ro, opath));
                    continue;
                }
                let cands: Vec<usize> = (0..s).filter(|&i| q[i] < 0.0).collect();
                for &j in &cands {
                    let mut rc = Some(ro.clone());
                    for &l in &cands {
                        if l == j || rc.is_none() {
                            continue;
                        }
                        // lambda_j / (-q_j) <= lambda_l / (-q_l), cross-multiplied.
                        let cmp = node.state.nums[j]
                            .scale(-q[l])
                            .sub(&node.state.nums[l].scale(-q[j]));
                        let sense = if l < j { Sense::Strict } else { Sense::Closed };
                        rc = rc.and_then(|r| with_constraint(&r, &cmp, sense));
                    }
                    if let Some(rc) = rc {
                        // lambda'_l = (num_l (-q_j) + num_j q_l) / (den (-q_j)).
                        let mut nums = Vec::with_capacity(s - 1);
                        for l in 0..s {
                            if l == j {
                                continue;
                            }
                            nums.push(
                                node.state.nums[l]
                                    .scale(-q[j])
                                    .add(&node.state.nums[j].scale(q[l])),
                            );
                        }
                        let state = RationalAffineState {
                            nums,
                            den: node.state.den.scale(-q[j]),
                        };
                        let mut w = node.w.clone();
                        let removed = w.remove(j);
                        let mut wseq = node.wseq.clone();
                        wseq.push(w.clone());
                        let path = format!("{}/s{}", opath, removed);
                        children.push((
                            Route::Explore(Node {
                                region: rc.clone(),
                                w,
                                wseq,
                                state,
                                path: path.clone(),
                            }),
                            rc,
                            path,
                        ));
                    }
                }
            }
        }

        // Route children: prune empty/thin, emit terminals and unresolved,
        // push survivors in reverse so DFS follows canonical order.
        let mut to_push: Vec<Node> = Vec::new();
        for (route, region, path) in children {
            match classify(&region, opts, path_seed(opts.seed, &path))? {
                Fate::Empty => stats.empty_pruned += 1,
                Fate::Thin => stats.thin_pruned += 1,
                Fate::Unresolved => {
                    let wseq = match &route {
                        Route::Explore(n) => n.wseq.clone(),
                        Route::Terminal(_) => node.wseq.clone(),
                    };
                    let kbar = wseq.len().min(k);
                    emit(
                        &mut records,
                        &mut stats,
                        RegionStatus::Unresolved,
                        region,
                        wseq,
                        kbar,
                        path,
                        opts,
                    )?;
                }
                Fate::Keep => match route {
                    Route::Terminal(status) => {
                        emit(
                            &mut records,
                            &mut stats,
                            status,
                            region,
                            node.wseq.clone(),
                            k,
                            path,
                            opts,
                        )?;
                    }
                    Route::Explore(n) => to_push.push(n),
                },
            }
        }
        for n in to_push.into_iter().rev() {
            stack.push(n);
        }
    }

    Ok(CertOutput {
        regions: records,
        stats,
        seed: opts.seed,
        problem_digest: digest_dual(dd),
        n: dd.n,
        m: dd.m,
        n_theta: dd.n_theta,
        theta0: theta0.clone(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub theta: Vec<f64>,
    pub kind: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub n_samples: usize,
    pub validated: usize,
    pub boundary_skipped: usize,
    pub rejected_outside: usize,
    pub cover_failures: usize,
    pub multi_cover_failures: usize,
    pub sequence_mismatches: usize,
    pub hash_mismatches: usize,
    pub counterexamples: Vec<Counterexample>,
    pub match_rate: f64,
    pub seed: u64,
    pub eps: f64,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.cover_failures == 0
            && self.multi_cover_failures == 0
            && self.sequence_mismatches == 0
            && self.hash_mismatches == 0
    }
}

/// Samples Theta0 and checks, away from an eps-band around all region
/// boundaries, that each point lies inside exactly one region, that a real
/// solve reproduces that region's working-set sequence, and that its trace
/// hash matches the region archetype's.
pub fn validate_cover(
    c: &CertOutput,
    dd: &DualData,
    cfg: &SolverConfig,
    n_samples: usize,
    eps: f64,
    seed: u64,
) -> Result<ValidationReport, CertError> {
    let (lo, hi) = c.theta0.bounding_box()?;
    let dim = c.theta0.dim();
    let mut rng = Xoshiro256::new(seed);

    // Archetype trace hashes, computed once per region.
    let mut arch_hash: Vec<Option<u64>> = Vec::with_capacity(c.regions.len());
    for rec in &c.regions {
        match &rec.archetype {
            Some(theta) => {
                let sr = solve(dd, theta, cfg)?;
                arch_hash.push(Some(trace_hash(&sr.trace)));
            }
            None => arch_hash.push(None),
        }
    }

    let mut report = ValidationReport {
        n_samples,
        validated: 0,
        boundary_skipped: 0,
        rejected_outside: 0,
        cover_failures: 0,
        multi_cover_failures: 0,
        sequence_mismatches: 0,
        hash_mismatches: 0,
        counterexamples: Vec::new(),
        match_rate: 1.0,
        seed,
        eps,
    };

    let mut drawn = 0;
    let max_attempts = n_samples.saturating_mul(1000).max(1000);
    let mut attempts = 0;
    while drawn < n_samples && attempts < max_attempts {
        attempts += 1;
        let theta = DVector::from_iterator(dim, (0..dim).map(|i| rng.uniform(lo[i], hi[i])));
        // Reject outside Theta0.
        let inside0 = (0..c.theta0.num_rows()).all(|i| {
            c.theta0.normals.row(i).transpose().dot(&theta) <= c.theta0.offsets[i]
        });
        if !inside0 {
            report.rejected_outside += 1;
            continue;
        }
        drawn += 1;

        let mut inside: Vec<usize> = Vec::new();
        let mut near_boundary = false;
        for rec in &c.regions {
            match contains(&rec.region, &theta, eps)? {
                Membership::Inside => inside.push(rec.id),
                Membership::Boundary => {
                    near_boundary = true;
                    break;
                }
                Membership::Outside => {}
            }
        }
        if near_boundary {
            report.boundary_skipped += 1;
            continue;
        }
        report.validated += 1;
        let tv: Vec<f64> = theta.iter().cloned().collect();
        if inside.is_empty() {
            report.cover_failures += 1;
            report.counterexamples.push(Counterexample {
                theta: tv,
                kind: "cover".into(),
                detail: "no region contains the sample".into(),
            });
            continue;
        }
        if inside.len() > 1 {
            report.multi_cover_failures += 1;
            report.counterexamples.push(Counterexample {
                theta: tv,
                kind: "overlap".into(),
                detail: format!("regions {:?} all claim the sample strictly inside", inside),
            });
            continue;
        }
        let rec = &c.regions[inside[0]];
        let sr = solve(dd, &theta, cfg)?;
        if sr.wseq != rec.wseq {
            report.sequence_mismatches += 1;
            report.counterexamples.push(Counterexample {
                theta: tv,
                kind: "sequence".into(),
                detail: format!(
                    "solver sequence {:?} != region {} sequence {:?}",
                    sr.wseq, rec.id, rec.wseq
                ),
            });
            continue;
        }
        if let Some(h) = arch_hash[rec.id] {
            if trace_hash(&sr.trace) != h {
                report.hash_mismatches += 1;
                report.counterexamples.push(Counterexample {
                    theta: tv,
                    kind: "trace".into(),
                    detail: format!("trace hash differs from region {} archetype", rec.id),
                });
            }
        }
    }

    let failures = report.cover_failures
        + report.multi_cover_failures
        + report.sequence_mismatches
        + report.hash_mismatches;
    report.match_rate = if report.validated == 0 {
        1.0
    } else {
        (report.validated - failures) as f64 / report.validated as f64
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpqp::examples::{ex1, ex2};
    use crate::mpqp::to_dual;

    fn certify_ex1() -> (crate::mpqp::DualData, CertOutput) {
        let p = ex1();
        let dd = to_dual(&p).unwrap();
        let out = certify(&dd, &p.theta0, &SolverConfig::default(), &CertOptions::default())
            .unwrap();
        (dd, out)
    }

    fn region_at<'a>(c: &'a CertOutput, theta: &[f64]) -> &'a RegionRecord {
        let t = DVector::from_vec(theta.to_vec());
        c.regions
            .iter()
            .find(|r| contains(&r.region, &t, 1e-9).unwrap() == Membership::Inside)
            .expect("no region strictly contains the probe point")
    }

    #[test]
    fn ex1_sample_points() {
        let (_, out) = certify_ex1();
        let r = region_at(&out, &[0.0, 0.0]);
        assert_eq!(r.wseq, vec![Vec::<usize>::new()]);
        assert_eq!(r.kbar, 1);
        assert_eq!(r.status, RegionStatus::Optimal);

        let r = region_at(&out, &[2.0, 0.0]);
        assert_eq!(r.wseq, vec![vec![], vec![0]]);
        assert_eq!(r.status, RegionStatus::Optimal);

        // (2,2) sits exactly on the Dantzig tie line mu_0 = mu_1, so it is a
        // boundary point of the two symmetric regions; non-strict containment.
        let t = DVector::from_vec(vec![2.0, 2.0]);
        let r = out
            .regions
            .iter()
            .find(|r| {
                contains(&r.region, &t, 1e-9).unwrap() != Membership::Outside && {
                    let mut last = r.wseq.last().unwrap().clone();
                    last.sort_unstable();
                    last == vec![0, 1]
                }
            })
            .expect("no region ending in {0,1} touches (2,2)");
        assert_eq!(r.status, RegionStatus::Optimal);
    }

    #[test]
    fn ex1_regions_match_solver_everywhere() {
        let (dd, out) = certify_ex1();
        let report = validate_cover(&out, &dd, &SolverConfig::default(), 1000, 1e-6, 7).unwrap();
        assert!(report.validated > 500, "too few validated: {report:?}");
        assert!(report.is_clean(), "validation failures: {report:?}");
        assert_eq!(report.match_rate, 1.0);
    }

    #[test]
    fn parameter_free_single_region() {
        // F = 0, B = 0: no theta dependence; one region equal to Theta0.
        let mut p = ex1();
        p.f_mat = nalgebra::DMatrix::zeros(2, 2);
        let dd = to_dual(&p).unwrap();
        let cfg = SolverConfig::default();
        let out = certify(&dd, &p.theta0, &cfg, &CertOptions::default()).unwrap();
        assert_eq!(out.regions.len(), 1);
        let sr = solve(&dd, &DVector::zeros(2), &cfg).unwrap();
        assert_eq!(out.regions[0].wseq, sr.wseq);
        assert_eq!(out.regions[0].status, RegionStatus::Optimal);
    }

    #[test]
    fn ex2_single_infeasible_region() {
        let p = ex2();
        let dd = to_dual(&p).unwrap();
        let out = certify(&dd, &p.theta0, &SolverConfig::default(), &CertOptions::default())
            .unwrap();
        assert_eq!(out.regions.len(), 1);
        assert_eq!(out.regions[0].status, RegionStatus::Infeasible);
        // The region is all of Theta0.
        let center = DVector::zeros(2);
        assert_eq!(
            contains(&out.regions[0].region, &center, 1e-9).unwrap(),
            Membership::Inside
        );
        let sr = solve(&dd, &center, &SolverConfig::default()).unwrap();
        assert_eq!(out.regions[0].wseq, sr.wseq);
    }

    #[test]
    fn corrupted_table_detected() {
        let (dd, mut out) = certify_ex1();
        // Swap the sequences of two regions: validation must notice.
        assert!(out.regions.len() >= 2);
        let a = out.regions[0].wseq.clone();
        let b = out.regions[1].wseq.clone();
        out.regions[0].wseq = b;
        out.regions[1].wseq = a;
        let report = validate_cover(&out, &dd, &SolverConfig::default(), 1000, 1e-6, 7).unwrap();
        assert!(report.sequence_mismatches > 0);
        assert!(report.match_rate < 1.0);
        assert!(!report.counterexamples.is_empty());
    }

    #[test]
    fn deterministic_output() {
        let (_, a) = certify_ex1();
        let (_, b) = certify_ex1();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_literal_ratio_rule() {
        let p = ex1();
        let dd = to_dual(&p).unwrap();
        let cfg = SolverConfig {
            remove_rule: RemoveRule::PaperLiteral,
            ..Default::default()
        };
        assert!(matches!(
            certify(&dd, &p.theta0, &cfg, &CertOptions::default()),
            Err(CertError::UnsupportedRemoveRule)
        ));
    }

    #[test]
    fn rejects_unbounded_theta0() {
        let p = ex1();
        let dd = to_dual(&p).unwrap();
        // Single halfspace: unbounded.
        let theta0 = Polyhedron::new(
            nalgebra::dmatrix![1.0, 0.0],
            DVector::from_vec(vec![1.0]),
        )
        .unwrap();
        assert!(matches!(
            certify(&dd, &theta0, &SolverConfig::default(), &CertOptions::default()),
            Err(CertError::UnboundedParameterSet(_))
        ));
    }

    #[test]
    fn bland_rule_certifies_too() {
        let p = ex1();
        let dd = to_dual(&p).unwrap();
        let cfg = SolverConfig {
            add_rule: AddRule::Bland,
            ..Default::default()
        };
        let out = certify(&dd, &p.theta0, &cfg, &CertOptions::default()).unwrap();
        let report = validate_cover(&out, &dd, &cfg, 500, 1e-6, 3).unwrap();
        assert!(report.is_clean(), "{report:?}");
    }

    #[test]
    fn archetypes_inside_their_regions() {
        let (_, out) = certify_ex1();
        for rec in &out.regions {
            let a = rec.archetype.as_ref().expect("polyhedral regions always yield a point");
            assert_ne!(
                contains(&rec.region, a, 1e-12).unwrap(),
                Membership::Outside,
                "archetype escaped region {}",
                rec.id
            );
        }
    }
}
