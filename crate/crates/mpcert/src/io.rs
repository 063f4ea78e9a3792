//! File formats: JSON for structured artifacts, CSV for grids and
//! histograms.
//!
//! Every format is deterministic: struct fields serialize in declaration
//! order, maps are sorted, and numbers use the shortest decimal
//! representation that round-trips exactly. Parsing a file and serializing
//! it again reproduces the bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cert::{CertOutput, CertStats, RegionRecord, RegionStatus, ValidationReport};
use crate::geometry::{GeometryError, Polyhedron, PolyConstraint, RegionDescription};
use crate::mpqp::{MpQP, MpqpError};
use crate::poly::Poly;
use crate::solver::Block;
use crate::wcet::{BaselineResult, BlockCost, CostModel, RegionCost, WcetReport};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid file contents: {0}")]
    Format(String),
    #[error("geometry error: {0}")]
    Geometry(#[from] GeometryError),
    #[error("problem error: {0}")]
    Mpqp(#[from] MpqpError),
}

fn fmt_err(msg: impl Into<String>) -> IoError {
    IoError::Format(msg.into())
}

// ---------------------------------------------------------------------------
// Generic JSON plumbing
// ---------------------------------------------------------------------------

/// Serialize to pretty JSON with a trailing newline (diff-friendly,
/// byte-stable).
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, IoError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn flat_rows(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn matrix_from_flat(data: &[f64], rows: usize, cols: usize, what: &str) -> Result<DMatrix<f64>, IoError> {
    if data.len() != rows * cols {
        return Err(fmt_err(format!(
            "{what}: expected {rows}x{cols} = {} entries, found {}",
            rows * cols,
            data.len()
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, data))
}

// ---------------------------------------------------------------------------
// Problem files (p.json)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxJson {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfspacesJson {
    /// Row-major, `offsets.len()` rows by `n_theta` columns.
    pub normals: Vec<f64>,
    pub offsets: Vec<f64>,
}

/// Parameter-set payload: externally tagged, so the file reads either
/// `{"box": {...}}` or `{"halfspaces": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Theta0Json {
    #[serde(rename = "box")]
    Box(BoxJson),
    #[serde(rename = "halfspaces")]
    Halfspaces(HalfspacesJson),
}

/// On-disk form of a multi-parametric QP. Matrices are row-major flat
/// arrays; dimensions come from `n`, `m`, `n_theta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpqpJson {
    pub n: usize,
    pub m: usize,
    pub n_theta: usize,
    #[serde(rename = "H")]
    pub h: Vec<f64>,
    pub f0: Vec<f64>,
    #[serde(rename = "F")]
    pub f: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    pub b0: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    #[serde(rename = "Theta0")]
    pub theta0: Theta0Json,
}

impl Theta0Json {
    pub fn to_polyhedron(&self, n_theta: usize) -> Result<Polyhedron, IoError> {
        match self {
            Theta0Json::Box(b) => {
                if b.lo.len() != n_theta || b.hi.len() != n_theta {
                    return Err(fmt_err("Theta0 box dimensions do not match n_theta"));
                }
                Ok(Polyhedron::from_box(&b.lo, &b.hi)?)
            }
            Theta0Json::Halfspaces(h) => {
                let rows = h.offsets.len();
                let normals = matrix_from_flat(&h.normals, rows, n_theta, "Theta0 normals")?;
                Ok(Polyhedron::new(normals, DVector::from_vec(h.offsets.clone()))?)
            }
        }
    }

    pub fn from_polyhedron(p: &Polyhedron) -> Theta0Json {
        Theta0Json::Halfspaces(HalfspacesJson {
            normals: flat_rows(&p.normals),
            offsets: p.offsets.iter().cloned().collect(),
        })
    }
}

impl MpqpJson {
    pub fn from_problem(p: &MpQP) -> MpqpJson {
        MpqpJson {
            n: p.n,
            m: p.m,
            n_theta: p.n_theta,
            h: flat_rows(&p.h),
            f0: p.f0.iter().cloned().collect(),
            f: flat_rows(&p.f_mat),
            a: flat_rows(&p.a),
            b0: p.b0.iter().cloned().collect(),
            b: flat_rows(&p.b_mat),
            theta0: Theta0Json::from_polyhedron(&p.theta0),
        }
    }

    /// Same payload, with the parameter set recorded as a box (used by
    /// builders that know the box structure; keeps the file human-readable).
    pub fn from_problem_with_box(p: &MpQP, lo: &[f64], hi: &[f64]) -> MpqpJson {
        let mut out = MpqpJson::from_problem(p);
        out.theta0 = Theta0Json::Box(BoxJson {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
        });
        out
    }

    pub fn to_problem(&self) -> Result<MpQP, IoError> {
        let p = MpQP {
            n: self.n,
            m: self.m,
            n_theta: self.n_theta,
            h: matrix_from_flat(&self.h, self.n, self.n, "H")?,
            f0: DVector::from_vec(self.f0.clone()),
            f_mat: matrix_from_flat(&self.f, self.n, self.n_theta, "F")?,
            a: matrix_from_flat(&self.a, self.m, self.n, "A")?,
            b0: DVector::from_vec(self.b0.clone()),
            b_mat: matrix_from_flat(&self.b, self.m, self.n_theta, "B")?,
            theta0: self.theta0.to_polyhedron(self.n_theta)?,
        };
        p.validate()?;
        Ok(p)
    }
}

// ---------------------------------------------------------------------------
// Certification files (regions.json)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub exponents: Vec<u32>,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyJson {
    pub nvars: usize,
    pub terms: Vec<TermJson>,
}

impl PolyJson {
    fn from_poly(p: &Poly) -> PolyJson {
        PolyJson {
            nvars: p.nvars,
            terms: p
                .terms
                .iter()
                .map(|(e, &c)| TermJson {
                    exponents: e.clone(),
                    coefficient: c,
                })
                .collect(),
        }
    }

    fn to_poly(&self) -> Result<Poly, IoError> {
        let mut terms = BTreeMap::new();
        for t in &self.terms {
            if t.exponents.len() != self.nvars {
                return Err(fmt_err("polynomial term arity does not match nvars"));
            }
            if terms.insert(t.exponents.clone(), t.coefficient).is_some() {
                return Err(fmt_err("duplicate polynomial term"));
            }
        }
        Ok(Poly {
            nvars: self.nvars,
            terms,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionJson {
    pub id: usize,
    pub branch_path: String,
    pub status: String,
    pub kbar: usize,
    pub wseq: Vec<Vec<usize>>,
    /// Row-major halfspace normals, `offsets.len()` rows by `n_theta`.
    pub normals: Vec<f64>,
    pub offsets: Vec<f64>,
    pub polynomials: Vec<PolyJson>,
    pub archetype: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertStatsJson {
    pub nodes_explored: usize,
    pub max_depth: usize,
    pub empty_pruned: usize,
    pub thin_pruned: usize,
    pub unresolved_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertJson {
    pub schema_version: u32,
    pub problem_digest: u64,
    pub n: usize,
    pub m: usize,
    pub n_theta: usize,
    pub seed: u64,
    pub theta0: HalfspacesJson,
    pub stats: CertStatsJson,
    pub regions: Vec<RegionJson>,
}

impl CertJson {
    pub fn from_output(c: &CertOutput) -> CertJson {
        CertJson {
            schema_version: 1,
            problem_digest: c.problem_digest,
            n: c.n,
            m: c.m,
            n_theta: c.n_theta,
            seed: c.seed,
            theta0: HalfspacesJson {
                normals: flat_rows(&c.theta0.normals),
                offsets: c.theta0.offsets.iter().cloned().collect(),
            },
            stats: CertStatsJson {
                nodes_explored: c.stats.nodes_explored,
                max_depth: c.stats.max_depth,
                empty_pruned: c.stats.empty_pruned,
                thin_pruned: c.stats.thin_pruned,
                unresolved_count: c.stats.unresolved_count,
            },
            regions: c
                .regions
                .iter()
                .map(|r| RegionJson {
                    id: r.id,
                    branch_path: r.branch_path.clone(),
                    status: r.status.name().to_string(),
                    kbar: r.kbar,
                    wseq: r.wseq.clone(),
                    normals: flat_rows(&r.region.linear.normals),
                    offsets: r.region.linear.offsets.iter().cloned().collect(),
                    polynomials: r
                        .region
                        .nonlinear
                        .iter()
                        .map(|pc| PolyJson::from_poly(&pc.poly))
                        .collect(),
                    archetype: r.archetype.as_ref().map(|a| a.iter().cloned().collect()),
                })
                .collect(),
        }
    }

    pub fn to_output(&self) -> Result<CertOutput, IoError> {
        if self.schema_version != 1 {
            return Err(fmt_err(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        let theta0 = Polyhedron::new(
            matrix_from_flat(
                &self.theta0.normals,
                self.theta0.offsets.len(),
                self.n_theta,
                "theta0 normals",
            )?,
            DVector::from_vec(self.theta0.offsets.clone()),
        )?;
        let mut regions = Vec::with_capacity(self.regions.len());
        for r in &self.regions {
            let status = RegionStatus::from_name(&r.status)
                .ok_or_else(|| fmt_err(format!("unknown region status {:?}", r.status)))?;
            let linear = Polyhedron::new(
                matrix_from_flat(&r.normals, r.offsets.len(), self.n_theta, "region normals")?,
                DVector::from_vec(r.offsets.clone()),
            )?;
            let nonlinear = r
                .polynomials
                .iter()
                .map(|p| Ok(PolyConstraint::new(p.to_poly()?)))
                .collect::<Result<Vec<_>, IoError>>()?;
            regions.push(RegionRecord {
                id: r.id,
                region: RegionDescription { linear, nonlinear },
                wseq: r.wseq.clone(),
                kbar: r.kbar,
                status,
                archetype: r.archetype.as_ref().map(|a| DVector::from_vec(a.clone())),
                branch_path: r.branch_path.clone(),
            });
        }
        Ok(CertOutput {
            regions,
            stats: CertStats {
                nodes_explored: self.stats.nodes_explored,
                max_depth: self.stats.max_depth,
                empty_pruned: self.stats.empty_pruned,
                thin_pruned: self.stats.thin_pruned,
                unresolved_count: self.stats.unresolved_count,
            },
            seed: self.seed,
            problem_digest: self.problem_digest,
            n: self.n,
            m: self.m,
            n_theta: self.n_theta,
            theta0,
        })
    }
}

// ---------------------------------------------------------------------------
// WCET report files (report.json)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionCostJson {
    pub id: usize,
    pub status: String,
    pub cost: u64,
    pub surviving: bool,
    pub archetype: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WcetJson {
    pub schema_version: u32,
    pub worst_cost: u64,
    pub witness_region: Option<usize>,
    pub certified_exact: bool,
    pub advisory: Option<String>,
    pub profile: String,
    pub seed: u64,
    pub pruning_enabled: bool,
    pub surviving: Vec<usize>,
    pub pruned_count: usize,
    pub unresolved_count: usize,
    pub region_costs: Vec<RegionCostJson>,
    pub advisory_costs: Vec<(usize, u64)>,
}

impl WcetJson {
    pub fn from_report(r: &WcetReport) -> WcetJson {
        WcetJson {
            schema_version: 1,
            worst_cost: r.worst_cost,
            witness_region: r.witness_region,
            certified_exact: r.certified_exact,
            advisory: r.advisory.clone(),
            profile: r.profile.clone(),
            seed: r.seed,
            pruning_enabled: r.pruning_enabled,
            surviving: r.surviving.clone(),
            pruned_count: r.pruned_count,
            unresolved_count: r.unresolved_count,
            region_costs: r
                .region_costs
                .iter()
                .map(|rc| RegionCostJson {
                    id: rc.id,
                    status: rc.status.name().to_string(),
                    cost: rc.cost,
                    surviving: rc.surviving,
                    archetype: rc.archetype.as_ref().map(|a| a.iter().cloned().collect()),
                })
                .collect(),
            advisory_costs: r.advisory_costs.clone(),
        }
    }

    pub fn to_report(&self) -> Result<WcetReport, IoError> {
        if self.schema_version != 1 {
            return Err(fmt_err(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        let region_costs = self
            .region_costs
            .iter()
            .map(|rc| {
                let status = RegionStatus::from_name(&rc.status)
                    .ok_or_else(|| fmt_err(format!("unknown region status {:?}", rc.status)))?;
                Ok(RegionCost {
                    id: rc.id,
                    status,
                    cost: rc.cost,
                    surviving: rc.surviving,
                    archetype: rc.archetype.as_ref().map(|a| DVector::from_vec(a.clone())),
                })
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        Ok(WcetReport {
            worst_cost: self.worst_cost,
            witness_region: self.witness_region,
            region_costs,
            surviving: self.surviving.clone(),
            pruned_count: self.pruned_count,
            unresolved_count: self.unresolved_count,
            certified_exact: self.certified_exact,
            advisory: self.advisory.clone(),
            advisory_costs: self.advisory_costs.clone(),
            profile: self.profile.clone(),
            seed: self.seed,
            pruning_enabled: self.pruning_enabled,
        })
    }
}

// ---------------------------------------------------------------------------
// Cost profile files
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockCostJson {
    pub base: u64,
    pub per_flop: u64,
    pub per_mem: u64,
}

/// User-loadable cost profile: every block must be listed by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileJson {
    pub name: String,
    pub overhead: u64,
    pub blocks: BTreeMap<String, BlockCostJson>,
}

impl ProfileJson {
    pub fn from_model(cm: &CostModel) -> ProfileJson {
        ProfileJson {
            name: cm.name.clone(),
            overhead: cm.overhead,
            blocks: cm
                .blocks
                .iter()
                .map(|(&b, c)| {
                    (
                        b.name().to_string(),
                        BlockCostJson {
                            base: c.base,
                            per_flop: c.per_flop,
                            per_mem: c.per_mem,
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn to_model(&self) -> Result<CostModel, IoError> {
        let mut blocks = BTreeMap::new();
        for (name, c) in &self.blocks {
            let block = Block::from_name(name)
                .ok_or_else(|| fmt_err(format!("unknown block name {name:?}")))?;
            blocks.insert(
                block,
                BlockCost {
                    base: c.base,
                    per_flop: c.per_flop,
                    per_mem: c.per_mem,
                },
            );
        }
        for &b in Block::ALL.iter() {
            if !blocks.contains_key(&b) {
                return Err(fmt_err(format!("profile is missing block {}", b.name())));
            }
        }
        Ok(CostModel {
            name: self.name.clone(),
            overhead: self.overhead,
            blocks,
        })
    }
}

// ---------------------------------------------------------------------------
// Validation report (stdout JSON for the validate subcommand)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleJson {
    pub theta: Vec<f64>,
    pub kind: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationJson {
    pub n_samples: usize,
    pub validated: usize,
    pub boundary_skipped: usize,
    pub rejected_outside: usize,
    pub cover_failures: usize,
    pub multi_cover_failures: usize,
    pub sequence_mismatches: usize,
    pub hash_mismatches: usize,
    pub match_rate: f64,
    pub seed: u64,
    pub eps: f64,
    pub counterexamples: Vec<CounterexampleJson>,
}

impl ValidationJson {
    pub fn from_report(r: &ValidationReport) -> ValidationJson {
        ValidationJson {
            n_samples: r.n_samples,
            validated: r.validated,
            boundary_skipped: r.boundary_skipped,
            rejected_outside: r.rejected_outside,
            cover_failures: r.cover_failures,
            multi_cover_failures: r.multi_cover_failures,
            sequence_mismatches: r.sequence_mismatches,
            hash_mismatches: r.hash_mismatches,
            match_rate: r.match_rate,
            seed: r.seed,
            eps: r.eps,
            counterexamples: r
                .counterexamples
                .iter()
                .map(|c| CounterexampleJson {
                    theta: c.theta.clone(),
                    kind: c.kind.clone(),
                    detail: c.detail.clone(),
                })
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// CSV writers
// ---------------------------------------------------------------------------

/// Shortest round-trip decimal; integers print without a fraction.
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Histogram CSV: header `cost,count`, ascending cost.
pub fn histogram_csv(b: &BaselineResult) -> String {
    let mut out = String::from("cost,count\n");
    for (cost, count) in &b.histogram {
        let _ = writeln!(out, "{cost},{count}");
    }
    out
}

/// Archetype CSV: header `region_id,theta_0..,cost`; surviving regions with
/// an archetype, ascending id.
pub fn archetype_csv(costs: &[RegionCost], n_theta: usize) -> String {
    let mut out = String::from("region_id");
    for j in 0..n_theta {
        let _ = write!(out, ",theta_{j}");
    }
    out.push_str(",cost\n");
    for rc in costs {
        let Some(a) = &rc.archetype else { continue };
        let _ = write!(out, "{}", rc.id);
        for j in 0..n_theta {
            let _ = write!(out, ",{}", fmt_f64(a[j]));
        }
        let _ = writeln!(out, ",{}", rc.cost);
    }
    out
}

/// Parameter-slice CSV: header `theta_i,theta_j,region_id,cycles`; one row
/// per grid point. Points outside every region carry an empty id and cycles.
pub struct SliceRow {
    pub ti: f64,
    pub tj: f64,
    pub region_id: Option<usize>,
    pub cycles: Option<u64>,
}

pub fn slice_csv(dim_i: usize, dim_j: usize, rows: &[SliceRow]) -> String {
    let mut out = format!("theta_{dim_i},theta_{dim_j},region_id,cycles\n");
    for r in rows {
        let id = r.region_id.map(|v| v.to_string()).unwrap_or_default();
        let cy = r.cycles.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", fmt_f64(r.ti), fmt_f64(r.tj), id, cy);
    }
    out
}

/// Closed-loop trajectory CSV: header `step,x_0..,u_0..,iters,cost`.
pub fn trajectory_csv(steps: &[crate::mpc::SimStep]) -> String {
    let (nx, nu) = match steps.first() {
        Some(s) => (s.x.len(), s.u.len()),
        None => (0, 0),
    };
    let mut out = String::from("step");
    for j in 0..nx {
        let _ = write!(out, ",x_{j}");
    }
    for j in 0..nu {
        let _ = write!(out, ",u_{j}");
    }
    out.push_str(",iters,cost\n");
    for (k, s) in steps.iter().enumerate() {
        let _ = write!(out, "{k}");
        for j in 0..nx {
            let _ = write!(out, ",{}", fmt_f64(s.x[j]));
        }
        for j in 0..nu {
            let _ = write!(out, ",{}", fmt_f64(s.u[j]));
        }
        let _ = writeln!(out, ",{},{}", s.iterations, s.cost);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cert::{certify, CertOptions};
    use crate::mpqp::examples;
    use crate::solver::SolverConfig;
    use crate::wcet::{wcet_from_cert, WcetOptions};

    fn roundtrip_json<T>(value: &T)
    where
        T: Serialize + for<'de> Deserialize<'de> + PartialEq + std::fmt::Debug,
    {
        let text = to_json_string(value).unwrap();
        let back: T = serde_json::from_str(&text).unwrap();
        assert_eq!(&back, value);
        let again = to_json_string(&back).unwrap();
        assert_eq!(text, again, "serialize-parse-serialize must be byte-stable");
    }

    #[test]
    fn mpqp_roundtrip_box_and_halfspaces() {
        let p = examples::ex1();
        let with_halfspaces = MpqpJson::from_problem(&p);
        roundtrip_json(&with_halfspaces);
        let with_box = MpqpJson::from_problem_with_box(&p, &[-3.0, -3.0], &[3.0, 3.0]);
        roundtrip_json(&with_box);

        // Both variants reconstruct the same problem semantics.
        let q1 = with_halfspaces.to_problem().unwrap();
        let q2 = with_box.to_problem().unwrap();
        assert_eq!(q1.h, p.h);
        assert_eq!(q2.a, p.a);
        assert_eq!(q1.theta0.num_rows(), p.theta0.num_rows());
        assert_eq!(q2.theta0.num_rows(), 4);
    }

    #[test]
    fn cert_output_roundtrips_exactly() {
        let p = examples::ex1();
        let dd = crate::mpqp::to_dual(&p).unwrap();
        let cfg = SolverConfig::default();
        let c = certify(&dd, &p.theta0, &cfg, &CertOptions::default()).unwrap();
        let j = CertJson::from_output(&c);
        roundtrip_json(&j);
        let back = j.to_output().unwrap();
        assert_eq!(back, c, "in-memory certification must survive the file format");
    }

    #[test]
    fn wcet_report_roundtrips_exactly() {
        let p = examples::ex1();
        let dd = crate::mpqp::to_dual(&p).unwrap();
        let cfg = SolverConfig::default();
        let c = certify(&dd, &p.theta0, &cfg, &CertOptions::default()).unwrap();
        let r = wcet_from_cert(&dd, &c, &cfg, &CostModel::unit(), &WcetOptions::default()).unwrap();
        let j = WcetJson::from_report(&r);
        roundtrip_json(&j);
        assert_eq!(j.to_report().unwrap(), r);
    }

    #[test]
    fn profile_roundtrip_and_validation() {
        for cm in [CostModel::unit(), CostModel::flop()] {
            let j = ProfileJson::from_model(&cm);
            roundtrip_json(&j);
            assert_eq!(j.to_model().unwrap(), cm);
        }
        let mut j = ProfileJson::from_model(&CostModel::unit());
        j.blocks.remove("LINSYS");
        assert!(j.to_model().is_err(), "missing block must be rejected");
        let mut j2 = ProfileJson::from_model(&CostModel::unit());
        j2.blocks.insert(
            "NOT_A_BLOCK".into(),
            BlockCostJson {
                base: 1,
                per_flop: 0,
                per_mem: 0,
            },
        );
        assert!(j2.to_model().is_err(), "unknown block must be rejected");
    }

    #[test]
    fn csv_shapes() {
        let hist = BaselineResult {
            max_cost: 7,
            max_theta: None,
            histogram: [(3u64, 2usize), (7, 1)].into_iter().collect(),
            n: 3,
            seed: 0,
        };
        assert_eq!(histogram_csv(&hist), "cost,count\n3,2\n7,1\n");

        let costs = vec![RegionCost {
            id: 4,
            status: RegionStatus::Optimal,
            cost: 11,
            surviving: true,
            archetype: Some(DVector::from_vec(vec![0.5, -1.25])),
        }];
        assert_eq!(
            archetype_csv(&costs, 2),
            "region_id,theta_0,theta_1,cost\n4,0.5,-1.25,11\n"
        );

        let rows = vec![
            SliceRow {
                ti: 0.0,
                tj: 1.0,
                region_id: Some(2),
                cycles: Some(9),
            },
            SliceRow {
                ti: 0.5,
                tj: 1.0,
                region_id: None,
                cycles: None,
            },
        ];
        assert_eq!(
            slice_csv(0, 1, &rows),
            "theta_0,theta_1,region_id,cycles\n0,1,2,9\n0.5,1,,\n"
        );
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let p = examples::ex1();
        let mut j = MpqpJson::from_problem(&p);
        j.h.pop();
        assert!(j.to_problem().is_err());

        let mut c = CertJson::from_output(
            &certify(
                &crate::mpqp::to_dual(&p).unwrap(),
                &p.theta0,
                &SolverConfig::default(),
                &CertOptions::default(),
            )
            .unwrap(),
        );
        c.regions[0].status = "bogus".into();
        assert!(c.to_output().is_err());
        c.regions[0].status = "optimal".into();
        c.schema_version = 2;
        assert!(c.to_output().is_err());
    }
}
