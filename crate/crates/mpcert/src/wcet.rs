//! Worst-case execution time under a deterministic cycle-cost model:
//! prefix pruning, archetype extraction, the certified WCET pipeline, exact
//! per-parameter lookup, and a Monte-Carlo baseline for comparison.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DVector;
use thiserror::Error;

use crate::cert::{certify, CertError, CertOptions, CertOutput, RegionStatus};
use crate::geometry::{contains, interior_point, GeometryError, Membership, Polyhedron};
use crate::mpqp::{to_dual, DualData, MpQP, MpqpError};
use crate::rng::{fnv1a, Xoshiro256, FNV_OFFSET};
use crate::solver::{
    solve, trace_from_sequence, Block, ExecutionTrace, SolveStatus, SolverConfig, SolverError,
};

#[derive(Debug, Error)]
pub enum WcetError {
    #[error("cost overflow in 64-bit cycle arithmetic")]
    Overflow,
    #[error("cost model '{0}' does not cover block {1}")]
    UnknownBlock(String, &'static str),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Mpqp(#[from] MpqpError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("parameter lies outside the certified set")]
    OutsideTheta0,
    #[error("no region contains the parameter")]
    NoRegion,
}

/// Per-block cost: base + per_flop * flop_count + per_mem * mem_access_count,
/// all in integer cycles. Flop and memory counts are closed forms in
/// (block, |W|, n, m), so the total is a pure function of the trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockCost {
    pub base: u64,
    pub per_flop: u64,
    pub per_mem: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostModel {
    pub name: String,
    /// Fixed per-call overhead added once per trace.
    pub overhead: u64,
    pub blocks: BTreeMap<Block, BlockCost>,
}

impl CostModel {
    fn uniform(name: &str, overhead: u64, cost: BlockCost) -> Self {
        CostModel {
            name: name.to_string(),
            overhead,
            blocks: Block::ALL.iter().map(|&b| (b, cost)).collect(),
        }
    }

    /// Every event costs one cycle; no overhead.
    pub fn unit() -> Self {
        CostModel::uniform(
            "unit",
            0,
            BlockCost {
                base: 1,
                per_flop: 0,
                per_mem: 0,
            },
        )
    }

    /// One cycle per flop and per memory access, from the solver's
    /// documented per-block count formulas.
    pub fn flop() -> Self {
        CostModel::uniform(
            "flop",
            0,
            BlockCost {
                base: 0,
                per_flop: 1,
                per_mem: 1,
            },
        )
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "unit" => Some(CostModel::unit()),
            "flop" => Some(CostModel::flop()),
            _ => None,
        }
    }
}

/// Exact integer trace cost: per-call overhead plus per-event block costs.
pub fn trace_cost(t: &ExecutionTrace, cm: &CostModel) -> Result<u64, WcetError> {
    let mut total = cm.overhead;
    for ev in &t.events {
        let bc = cm
            .blocks
            .get(&ev.block)
            .ok_or_else(|| WcetError::UnknownBlock(cm.name.clone(), ev.block.name()))?;
        let ev_cost = bc
            .base
            .checked_add(
                bc.per_flop
                    .checked_mul(ev.flop_count)
                    .ok_or(WcetError::Overflow)?,
            )
            .and_then(|c| c.checked_add(bc.per_mem.checked_mul(ev.mem_access_count)?))
            .ok_or(WcetError::Overflow)?;
        total = total.checked_add(ev_cost).ok_or(WcetError::Overflow)?;
    }
    Ok(total)
}

/// Indices of regions that survive prefix pruning.
///
/// A resolved region is pruned when its working-set sequence is a strict
/// prefix of another resolved region's sequence (any execution reaching the
/// longer sequence costs at least as much under any nonnegative profile), or
/// when it duplicates an earlier region's sequence. Unresolved regions are
/// never pruned and never act as pruning witnesses.
pub fn prune_prefixes(c: &CertOutput) -> Vec<usize> {
    let resolved: Vec<usize> = c
        .regions
        .iter()
        .filter(|r| r.status != RegionStatus::Unresolved)
        .map(|r| r.id)
        .collect();
    // Lexicographic sort puts every sequence immediately before its
    // extensions, so prefix checks only need neighboring distinct groups.
    let mut order = resolved.clone();
    order.sort_by(|&a, &b| {
        c.regions[a]
            .wseq
            .cmp(&c.regions[b].wseq)
            .then(a.cmp(&b))
    });
    let mut survives: Vec<bool> = vec![true; c.regions.len()];
    for i in 0..order.len() {
        let cur = &c.regions[order[i]].wseq;
        // Duplicate of the previous sequence: keep only the first (lowest id
        // within the group by the sort's tie-break).
        if i > 0 && c.regions[order[i - 1]].wseq == *cur {
            survives[order[i]] = false;
            continue;
        }
        // Strict prefix of the next distinct sequence? (Skip duplicates of
        // the current sequence first.)
        let mut j = i + 1;
        while j < order.len() && c.regions[order[j]].wseq == *cur {
            j += 1;
        }
        if let Some(&next) = order.get(j) {
            let nxt = &c.regions[next].wseq;
            if nxt.len() > cur.len() && nxt[..cur.len()] == cur[..] {
                survives[order[i]] = false;
            }
        }
    }
    c.regions
        .iter()
        .filter(|r| r.status == RegionStatus::Unresolved || survives[r.id])
        .map(|r| r.id)
        .collect()
}

/// All (prefix id, extension id) pairs among resolved regions; used to check
/// cost monotonicity along prefixes.
pub fn prefix_pairs(c: &CertOutput) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for a in &c.regions {
        if a.status == RegionStatus::Unresolved {
            continue;
        }
        for b in &c.regions {
            if b.id == a.id || b.status == RegionStatus::Unresolved {
                continue;
            }
            if b.wseq.len() > a.wseq.len() && b.wseq[..a.wseq.len()] == a.wseq[..] {
                pairs.push((a.id, b.id));
            }
        }
    }
    pairs
}

/// One representative parameter per requested region. Reuses the archetype
/// recorded at certification time when present; otherwise re-searches with a
/// seed derived from the region's branch path.
pub fn extract_archetypes(
    c: &CertOutput,
    ids: &[usize],
    budget: usize,
    seed: u64,
) -> Result<Vec<(usize, Option<DVector<f64>>)>, WcetError> {
    let mut out = Vec::with_capacity(ids.len());
    for &id in ids {
        let rec = &c.regions[id];
        let theta = match &rec.archetype {
            Some(t) => Some(t.clone()),
            None => interior_point(
                &rec.region,
                budget,
                seed ^ fnv1a(rec.branch_path.as_bytes(), FNV_OFFSET),
            )?,
        };
        out.push((id, theta));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionCost {
    pub id: usize,
    pub status: RegionStatus,
    pub cost: u64,
    pub surviving: bool,
    pub archetype: Option<DVector<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WcetReport {
    pub worst_cost: u64,
    pub witness_region: Option<usize>,
    /// Cost for every certified region (the full cost map), including the
    /// pruned ones.
    pub region_costs: Vec<RegionCost>,
    pub surviving: Vec<usize>,
    pub pruned_count: usize,
    pub unresolved_count: usize,
    /// True when every region is resolved: worst_cost is then exact. With
    /// unresolved regions present it is a certified lower bound only.
    pub certified_exact: bool,
    pub advisory: Option<String>,
    /// Sampled costs of unresolved regions (upper-bound candidates, not
    /// certified).
    pub advisory_costs: Vec<(usize, u64)>,
    pub profile: String,
    pub seed: u64,
    pub pruning_enabled: bool,
}

#[derive(Clone, Debug, Default)]
pub struct WcetOptions {
    pub no_prune: bool,
    pub cert: CertOptions,
}

fn region_solve_status(status: RegionStatus) -> SolveStatus {
    match status {
        RegionStatus::Optimal => SolveStatus::Optimal,
        RegionStatus::Infeasible => SolveStatus::Infeasible,
        // Unresolved sequences are partial: synthesize them like a capped
        // run, whose last recorded working set was never entered.
        RegionStatus::IterCap | RegionStatus::Unresolved => SolveStatus::IterCap,
    }
}

/// Certified WCET over a finished certification. Costs come from real solver
/// runs at each surviving archetype; pruned regions get synthesized traces so
/// the full cost map stays available.
pub fn wcet_from_cert(
    dd: &DualData,
    c: &CertOutput,
    cfg: &SolverConfig,
    cm: &CostModel,
    opts: &WcetOptions,
) -> Result<WcetReport, WcetError> {
    let surviving: Vec<usize> = if opts.no_prune {
        c.regions.iter().map(|r| r.id).collect()
    } else {
        prune_prefixes(c)
    };
    let surviving_set: Vec<bool> = {
        let mut v = vec![false; c.regions.len()];
        for &id in &surviving {
            v[id] = true;
        }
        v
    };
    let archetypes = extract_archetypes(c, &surviving, opts.cert.sample_budget, opts.cert.seed)?;
    let arch_by_id: BTreeMap<usize, Option<DVector<f64>>> = archetypes.into_iter().collect();

    let mut region_costs = Vec::with_capacity(c.regions.len());
    let mut worst: Option<(u64, usize)> = None;
    let mut advisory_costs = Vec::new();
    for rec in &c.regions {
        let arch = arch_by_id.get(&rec.id).cloned().flatten().or_else(|| rec.archetype.clone());
        let resolved = rec.status != RegionStatus::Unresolved;
        let cost = if surviving_set[rec.id] && resolved {
            // Authoritative: run the solver at the archetype.
            match &arch {
                Some(theta) => {
                    let sr = solve(dd, theta, cfg)?;
                    trace_cost(&sr.trace, cm)?
                }
                None => {
                    // No interior point (thin survivor); fall back to the
                    // synthesized trace of the certified sequence.
                    let t = synth_trace(dd, rec)?;
                    trace_cost(&t, cm)?
                }
            }
        } else {
            let t = synth_trace(dd, rec)?;
            trace_cost(&t, cm)?
        };
        if surviving_set[rec.id] && resolved {
            match worst {
                Some((w, _)) if w >= cost => {}
                _ => worst = Some((cost, rec.id)),
            }
        }
        if !resolved {
            if let Some(theta) = &arch {
                let sr = solve(dd, theta, cfg)?;
                advisory_costs.push((rec.id, trace_cost(&sr.trace, cm)?));
            }
        }
        region_costs.push(RegionCost {
            id: rec.id,
            status: rec.status,
            cost,
            surviving: surviving_set[rec.id],
            archetype: arch,
        });
    }

    let unresolved_count = c
        .regions
        .iter()
        .filter(|r| r.status == RegionStatus::Unresolved)
        .count();
    let (worst_cost, witness_region) = match worst {
        Some((w, id)) => (w, Some(id)),
        None => (0, None),
    };
    Ok(WcetReport {
        worst_cost,
        witness_region,
        region_costs,
        pruned_count: c.regions.len() - surviving.len(),
        surviving,
        unresolved_count,
        certified_exact: unresolved_count == 0,
        advisory: if unresolved_count > 0 {
            Some(format!(
                "{unresolved_count} unresolved region(s): worst_cost is a certified lower bound; \
                 sampled unresolved costs are listed as advisory upper-bound candidates"
            ))
        } else {
            None
        },
        advisory_costs,
        profile: cm.name.clone(),
        seed: opts.cert.seed,
        pruning_enabled: !opts.no_prune,
    })
}

fn synth_trace(dd: &DualData, rec: &crate::cert::RegionRecord) -> Result<ExecutionTrace, WcetError> {
    let mut err = None;
    let t = trace_from_sequence(
        &rec.wseq,
        region_solve_status(rec.status),
        |w| match dd.gram(w) {
            Ok(g) => g.is_singular(),
            Err(e) => {
                err = Some(e);
                false
            }
        },
        dd.n as u64,
        dd.m as u64,
    );
    match err {
        Some(e) => Err(WcetError::Mpqp(e)),
        None => Ok(t),
    }
}

/// Full pipeline: dual transform, certify, prune, archetypes, WCET.
pub fn wcet(
    p: &MpQP,
    theta0: &Polyhedron,
    cfg: &SolverConfig,
    cm: &CostModel,
    opts: &WcetOptions,
) -> Result<(CertOutput, WcetReport), WcetError> {
    let dd = to_dual(p)?;
    let c = certify(&dd, theta0, cfg, &opts.cert)?;
    let report = wcet_from_cert(&dd, &c, cfg, cm, opts)?;
    Ok((c, report))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LookupResult {
    pub region_id: usize,
    pub cost: u64,
    /// The parameter sits within tolerance of a region boundary.
    pub boundary: bool,
    /// The matched region is unresolved: the cost is advisory.
    pub advisory: bool,
}

/// Exact certified cost at a single parameter: the region containing it
/// strictly, or the lowest-id region whose boundary it touches.
pub fn lookup_cost(
    c: &CertOutput,
    costs: &[RegionCost],
    theta: &DVector<f64>,
    tol: f64,
) -> Result<LookupResult, WcetError> {
    let inside0 = (0..c.theta0.num_rows()).all(|i| {
        c.theta0.normals.row(i).transpose().dot(theta) <= c.theta0.offsets[i] + tol
    });
    if !inside0 {
        return Err(WcetError::OutsideTheta0);
    }
    let mut boundary_hit: Option<usize> = None;
    for rec in &c.regions {
        match contains(&rec.region, theta, tol)? {
            Membership::Inside => {
                return Ok(LookupResult {
                    region_id: rec.id,
                    cost: costs[rec.id].cost,
                    boundary: false,
                    advisory: rec.status == RegionStatus::Unresolved,
                });
            }
            Membership::Boundary => {
                if boundary_hit.is_none() {
                    boundary_hit = Some(rec.id);
                }
            }
            Membership::Outside => {}
        }
    }
    match boundary_hit {
        Some(id) => Ok(LookupResult {
            region_id: id,
            cost: costs[id].cost,
            boundary: true,
            advisory: c.regions[id].status == RegionStatus::Unresolved,
        }),
        None => Err(WcetError::NoRegion),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineResult {
    pub max_cost: u64,
    pub max_theta: Option<DVector<f64>>,
    /// cost -> sample count.
    pub histogram: BTreeMap<u64, usize>,
    pub n: usize,
    pub seed: u64,
}

/// Measurement-style baseline: solve at n uniform parameters and record the
/// empirical cost distribution. Never exceeds the certified WCET.
pub fn monte_carlo_baseline(
    dd: &DualData,
    theta0: &Polyhedron,
    cfg: &SolverConfig,
    cm: &CostModel,
    n: usize,
    seed: u64,
) -> Result<BaselineResult, WcetError> {
    let (lo, hi) = theta0.bounding_box()?;
    let dim = theta0.dim();
    let mut rng = Xoshiro256::new(seed);
    let mut histogram = BTreeMap::new();
    let mut max_cost = 0u64;
    let mut max_theta = None;
    let mut drawn = 0;
    let max_attempts = n.saturating_mul(1000).max(1000);
    let mut attempts = 0;
    while drawn < n && attempts < max_attempts {
        attempts += 1;
        let theta = DVector::from_iterator(dim, (0..dim).map(|i| rng.uniform(lo[i], hi[i])));
        let ok = (0..theta0.num_rows())
            .all(|i| theta0.normals.row(i).transpose().dot(&theta) <= theta0.offsets[i]);
        if !ok {
            continue;
        }
        drawn += 1;
        let sr = solve(dd, &theta, cfg)?;
        let cost = trace_cost(&sr.trace, cm)?;
        *histogram.entry(cost).or_insert(0) += 1;
        if cost > max_cost || max_theta.is_none() {
            max_cost = cost;
            max_theta = Some(theta);
        }
    }
    Ok(BaselineResult {
        max_cost,
        max_theta,
        histogram,
        n: drawn,
        seed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WallclockMeasurement {
    pub nanos: u128,
    pub repeats: usize,
    /// Always false: host-OS timing violates the determinism assumptions the
    /// certificates rest on.
    pub certified: bool,
}

/// Best-effort wall-clock timing of a single solve (minimum over repeats).
/// Excluded from every acceptance property; for external comparison only.
pub fn measure_wallclock(
    dd: &DualData,
    theta: &DVector<f64>,
    cfg: &SolverConfig,
    repeats: usize,
) -> Result<WallclockMeasurement, WcetError> {
    let repeats = repeats.max(1);
    let mut best = u128::MAX;
    for _ in 0..repeats {
        let start = Instant::now();
        let _ = solve(dd, theta, cfg)?;
        best = best.min(start.elapsed().as_nanos());
    }
    Ok(WallclockMeasurement {
        nanos: best,
        repeats,
        certified: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpqp::examples::ex1;
    use crate::solver::TraceEvent;

    fn certify_ex1() -> (DualData, CertOutput) {
        let p = ex1();
        let dd = to_dual(&p).unwrap();
        let c = certify(&dd, &p.theta0, &SolverConfig::default(), &CertOptions::default())
            .unwrap();
        (dd, c)
    }

    #[test]
    fn trace_cost_basics() {
        let mut cm = CostModel::unit();
        cm.overhead = 10;
        assert_eq!(trace_cost(&ExecutionTrace::default(), &cm).unwrap(), 10);

        let one = ExecutionTrace {
            events: vec![TraceEvent {
                k: 1,
                block: Block::TerminateOpt,
                size: 0,
                flop_count: 1,
                mem_access_count: 1,
            }],
        };
        assert_eq!(trace_cost(&one, &CostModel::unit()).unwrap(), 1);
    }

    #[test]
    fn ex1_origin_flop_cost_golden() {
        // theta = (0,0): single iteration through SING_CHECK, LINSYS,
        // LAM_CHECK, MU_COMP, MU_CHECK, TERMINATE_OPT at |W| = 0, m = 3.
        // Documented formulas give flops 0+0+0+6+6+1 and mems 0+0+0+3+3+1.
        let (dd, _) = certify_ex1();
        let sr = solve(&dd, &DVector::zeros(2), &SolverConfig::default()).unwrap();
        assert_eq!(trace_cost(&sr.trace, &CostModel::flop()).unwrap(), 20);
    }

    #[test]
    fn overflow_detected() {
        let cm = CostModel {
            name: "huge".into(),
            overhead: u64::MAX,
            blocks: CostModel::unit().blocks,
        };
        let one = ExecutionTrace {
            events: vec![TraceEvent {
                k: 1,
                block: Block::TerminateOpt,
                size: 0,
                flop_count: 0,
                mem_access_count: 0,
            }],
        };
        assert!(matches!(trace_cost(&one, &cm), Err(WcetError::Overflow)));
    }

    fn fake_cert(wseqs: Vec<Vec<Vec<usize>>>) -> CertOutput {
        // Minimal CertOutput for pruning-logic tests.
        let theta0 = Polyhedron::from_box(&[-1.0], &[1.0]).unwrap();
        let regions = wseqs
            .into_iter()
            .enumerate()
            .map(|(id, wseq)| crate::cert::RegionRecord {
                id,
                region: crate::geometry::RegionDescription::polyhedral(theta0.clone()),
                kbar: wseq.len(),
                wseq,
                status: RegionStatus::Optimal,
                archetype: None,
                branch_path: format!("/{id}"),
            })
            .collect();
        CertOutput {
            regions,
            stats: Default::default(),
            seed: 0,
            problem_digest: 0,
            n: 1,
            m: 1,
            n_theta: 1,
            theta0,
        }
    }

    #[test]
    fn prune_prefix_duplicate_before_extension() {
        // Two regions share a sequence that a third extends: the duplicate is
        // deduplicated AND the kept copy is still recognized as a prefix.
        let c = fake_cert(vec![
            vec![vec![]],
            vec![vec![]],
            vec![vec![], vec![0]],
        ]);
        assert_eq!(prune_prefixes(&c), vec![2]);
    }

    #[test]
    fn prune_prefix_examples() {
        // {(empty)}, {(empty,{1})}, {(empty,{2})} -> the two extensions survive.
        let c = fake_cert(vec![
            vec![vec![]],
            vec![vec![], vec![1]],
            vec![vec![], vec![2]],
        ]);
        assert_eq!(prune_prefixes(&c), vec![1, 2]);

        // All identical -> exactly one survivor.
        let c = fake_cert(vec![
            vec![vec![], vec![0]],
            vec![vec![], vec![0]],
            vec![vec![], vec![0]],
        ]);
        assert_eq!(prune_prefixes(&c), vec![0]);
    }

    #[test]
    fn unresolved_never_pruned_nor_witness() {
        let mut c = fake_cert(vec![vec![vec![]], vec![vec![], vec![1]]]);
        // Make the longer region unresolved: it must not prune the prefix.
        c.regions[1].status = RegionStatus::Unresolved;
        assert_eq!(prune_prefixes(&c), vec![0, 1]);

        let mut c = fake_cert(vec![vec![vec![]], vec![vec![], vec![1]]]);
        c.regions[0].status = RegionStatus::Unresolved;
        assert_eq!(prune_prefixes(&c), vec![0, 1]);
    }

    #[test]
    fn ex1_pruning_sound() {
        let p = ex1();
        let (dd, c) = certify_ex1();
        let cfg = SolverConfig::default();
        let cm = CostModel::unit();
        let pruned = wcet_from_cert(&dd, &c, &cfg, &cm, &WcetOptions::default()).unwrap();
        let unpruned = wcet_from_cert(
            &dd,
            &c,
            &cfg,
            &cm,
            &WcetOptions {
                no_prune: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(pruned.pruned_count >= 1);
        assert_eq!(pruned.worst_cost, unpruned.worst_cost);
        assert!(pruned.certified_exact);
        let _ = p;
    }

    #[test]
    fn ex1_wcet_matches_monte_carlo() {
        let (dd, c) = certify_ex1();
        let cfg = SolverConfig::default();
        let cm = CostModel::unit();
        let report = wcet_from_cert(&dd, &c, &cfg, &cm, &WcetOptions::default()).unwrap();
        // Witness region has a maximal-length sequence.
        let max_len = c.regions.iter().map(|r| r.wseq.len()).max().unwrap();
        let witness = report.witness_region.unwrap();
        assert_eq!(c.regions[witness].wseq.len(), max_len);

        let mc = monte_carlo_baseline(&dd, &c.theta0, &cfg, &cm, 10_000, 1).unwrap();
        assert_eq!(mc.max_cost, report.worst_cost);
    }

    #[test]
    fn prefix_cost_monotonicity() {
        let (dd, c) = certify_ex1();
        let cfg = SolverConfig::default();
        let cm = CostModel::unit();
        let report = wcet_from_cert(
            &dd,
            &c,
            &cfg,
            &cm,
            &WcetOptions {
                no_prune: true,
                ..Default::default()
            },
        )
        .unwrap();
        let pairs = prefix_pairs(&c);
        assert!(!pairs.is_empty());
        for (a, b) in pairs {
            assert!(
                report.region_costs[a].cost <= report.region_costs[b].cost,
                "prefix region {a} costs more than extension {b}"
            );
        }
    }

    #[test]
    fn lookup_examples() {
        let (dd, c) = certify_ex1();
        let cfg = SolverConfig::default();
        let cm = CostModel::unit();
        let report = wcet_from_cert(
            &dd,
            &c,
            &cfg,
            &cm,
            &WcetOptions {
                no_prune: true,
                ..Default::default()
            },
        )
        .unwrap();
        let at = |x: f64, y: f64| {
            lookup_cost(&c, &report.region_costs, &DVector::from_vec(vec![x, y]), 1e-9).unwrap()
        };
        let origin = at(0.0, 0.0);
        assert!(!origin.boundary);
        assert_eq!(c.regions[origin.region_id].wseq, vec![Vec::<usize>::new()]);
        let edge = at(2.0, 0.0);
        assert_eq!(c.regions[edge.region_id].wseq, vec![vec![], vec![0]]);
        assert!(edge.cost > origin.cost);
        // The Dantzig tie line is a shared facet.
        let tie = at(2.0, 2.0);
        assert!(tie.boundary);
        assert!(lookup_cost(
            &c,
            &report.region_costs,
            &DVector::from_vec(vec![9.0, 9.0]),
            1e-9
        )
        .is_err());
    }

    #[test]
    fn baseline_and_wallclock_basics() {
        let (dd, c) = certify_ex1();
        let cfg = SolverConfig::default();
        let cm = CostModel::unit();
        let one = monte_carlo_baseline(&dd, &c.theta0, &cfg, &cm, 1, 3).unwrap();
        assert_eq!(one.n, 1);
        assert_eq!(one.histogram.values().sum::<usize>(), 1);
        assert_eq!(*one.histogram.keys().next().unwrap(), one.max_cost);

        let wc = measure_wallclock(&dd, &DVector::zeros(2), &cfg, 3).unwrap();
        assert!(!wc.certified);
        assert!(wc.nanos > 0);
        assert_eq!(wc.repeats, 3);
    }

    #[test]
    fn profile_scaling_preserves_witness() {
        let (dd, c) = certify_ex1();
        let cfg = SolverConfig::default();
        let unit = CostModel::unit();
        let mut scaled = CostModel::unit();
        for bc in scaled.blocks.values_mut() {
            bc.base *= 7;
        }
        scaled.name = "unit7".into();
        let a = wcet_from_cert(&dd, &c, &cfg, &unit, &WcetOptions::default()).unwrap();
        let b = wcet_from_cert(&dd, &c, &cfg, &scaled, &WcetOptions::default()).unwrap();
        assert_eq!(b.worst_cost, 7 * a.worst_cost);
        assert_eq!(a.witness_region, b.witness_region);
    }
}
