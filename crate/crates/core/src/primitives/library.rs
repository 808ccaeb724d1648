//! Motion primitives, their verification, and the persisted primitive library.

use super::bvp::{rollout_samples, solve_primitive_bvp, BvpConfig, BvpConstraints, RunningCost};
use super::lattice::LatticeSpec;
use crate::bounds::BoxBounds;
use crate::dynamics::{Regressor, RegressorSpec, SystemModel};
use crate::error::{Error, Result};
use crate::numfmt::to_exact_json;
use crate::param_space::LumpedParams;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

/// Library file format tag.
pub const LIBRARY_VERSION: &str = "alp-primitive-library/1";

/// Endpoint tolerance of stored primitives, in grid units.
pub const ENDPOINT_TOL_GRID: f64 = 1e-4;

/// Ratio between the verification step and the generation step.
pub const VERIFY_REFINEMENT: usize = 10;

mod dvec_list {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[DVector<f64>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = v.iter().map(|d| d.as_slice()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DVector<f64>>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Ok(rows.into_iter().map(DVector::from_vec).collect())
    }
}

/// Feasible trajectory connecting a lattice node to `node + to_offset`.
///
/// States are stored relative to the start node (planned coordinates start at
/// zero), so the primitive applies from any node by translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionPrimitive {
    pub from_offset: Vec<i64>,
    pub to_offset: Vec<i64>,
    pub nominal_id: usize,
    pub duration: f64,
    #[serde(with = "dvec_list")]
    pub states: Vec<DVector<f64>>,
    #[serde(with = "dvec_list")]
    pub inputs: Vec<DVector<f64>>,
    pub cost: f64,
    /// Planned-coordinate positions of the stored states (relative).
    pub footprint: Vec<Vec<f64>>,
    /// Verified terminal gap in grid units at generation time.
    pub endpoint_error: f64,
}

impl MotionPrimitive {
    /// Offset traversed by the primitive.
    pub fn offset(&self) -> Vec<i64> {
        self.to_offset.iter().zip(&self.from_offset).map(|(a, b)| a - b).collect()
    }
}

/// Outcome of one `(nominal_id, offset)` generation attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationRecord {
    pub nominal_id: usize,
    pub offset: Vec<i64>,
    pub ok: bool,
    pub reused: bool,
    pub message: String,
}

/// Everything that determines the library contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    pub lattice: LatticeSpec,
    pub regressor: Option<RegressorSpec>,
    pub n: usize,
    pub m: usize,
    pub nominal_params: Vec<LumpedParams>,
    pub nominal_ids: Vec<usize>,
    pub cost: RunningCost,
    pub constraints: BvpConstraints,
    pub bvp: BvpConfig,
}

impl GenerationConfig {
    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let text = serde_json::to_string(self).expect("configuration serializes");
        let hash = Sha256::digest(text.as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Primitive library `M` indexed by `(nominal_id, offset)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimitiveLibrary {
    pub version: String,
    pub digest: String,
    pub config: GenerationConfig,
    /// Entries sorted by nominal id, then by connectivity order.
    pub entries: Vec<MotionPrimitive>,
    pub report: Vec<GenerationRecord>,
}

impl PrimitiveLibrary {
    pub fn lattice(&self) -> &LatticeSpec {
        &self.config.lattice
    }

    pub fn nominal_params(&self) -> &[LumpedParams] {
        &self.config.nominal_params
    }

    pub fn get(&self, nominal_id: usize, offset: &[i64]) -> Option<&MotionPrimitive> {
        self.entries.iter().find(|e| e.nominal_id == nominal_id && e.offset() == offset)
    }

    /// `M(Θ̄)`: entries generated for one nominal parameter.
    pub fn for_nominal(&self, nominal_id: usize) -> Vec<&MotionPrimitive> {
        self.entries.iter().filter(|e| e.nominal_id == nominal_id).collect()
    }

    /// Rebuilds the structural system model (needs a serializable regressor).
    pub fn system(&self) -> Result<SystemModel> {
        let spec =
            self.config.regressor.clone().ok_or_else(|| Error::InvalidArgument("library was generated with a custom regressor".into()))?;
        SystemModel::new(
            "library",
            self.config.n,
            self.config.m,
            Regressor::from(spec),
            BoxBounds::unbounded(self.config.n),
            BoxBounds::unbounded(self.config.m),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        to_exact_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let lib: Self = serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if lib.version != LIBRARY_VERSION {
            return Err(Error::Serialization(format!("unsupported library version {}", lib.version)));
        }
        if lib.digest != lib.config.digest() {
            return Err(Error::Serialization("library digest does not match its configuration".into()));
        }
        Ok(lib)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Terminal gap (grid units) of every entry re-integrated at the
    /// verification step.
    pub fn verify_all(&self) -> Result<Vec<f64>> {
        let sys = self.system()?;
        self.entries
            .iter()
            .map(|e| {
                let theta = self
                    .config
                    .nominal_params
                    .get(e.nominal_id)
                    .ok_or_else(|| Error::InvalidArgument(format!("entry refers to unknown nominal {}", e.nominal_id)))?;
                verify_primitive(&sys, e, theta, self.lattice(), self.config.bvp.rollout_substeps * VERIFY_REFINEMENT)
            })
            .collect()
    }
}

/// Re-integrates the stored inputs with `substeps` RK4 steps per sample
/// interval and returns the terminal gap to the target node in grid units.
pub fn verify_primitive(
    sys: &SystemModel,
    prim: &MotionPrimitive,
    theta_bar: &LumpedParams,
    lattice: &LatticeSpec,
    substeps: usize,
) -> Result<f64> {
    verify_from_anchor(sys, prim, theta_bar, lattice, substeps, &vec![0; lattice.dims()])
}

/// As [`verify_primitive`], starting from an arbitrary anchor node.
pub fn verify_from_anchor(
    sys: &SystemModel,
    prim: &MotionPrimitive,
    theta_bar: &LumpedParams,
    lattice: &LatticeSpec,
    substeps: usize,
    anchor: &[i64],
) -> Result<f64> {
    if prim.duration == 0.0 {
        return Ok(0.0);
    }
    let start = lattice.node_state(anchor);
    let target_node: Vec<i64> = anchor.iter().zip(prim.offset()).map(|(a, o)| a + o).collect();
    let target = lattice.node_state(&target_node);
    let states = rollout_samples(sys, theta_bar, &start, &prim.inputs, prim.duration, substeps.max(1))?;
    Ok(lattice.gap_in_grid_units(states.last().expect("samples"), &target))
}

fn footprint(lattice: &LatticeSpec, states: &[DVector<f64>]) -> Vec<Vec<f64>> {
    states.iter().map(|x| lattice.planning_dims.iter().map(|d| x[*d]).collect()).collect()
}

fn still_feasible(prim: &MotionPrimitive, cons: &BvpConstraints) -> bool {
    prim.states.iter().all(|x| cons.state_box.contains(x.as_slice())) && prim.inputs.iter().all(|u| cons.input_box.contains(u.as_slice()))
}

/// Generates one primitive for `(nominal_id, offset)`.
#[allow(clippy::too_many_arguments)]
pub fn generate_primitive(
    sys: &SystemModel,
    theta_bar: &LumpedParams,
    nominal_id: usize,
    offset: &[i64],
    lattice: &LatticeSpec,
    cost: &RunningCost,
    constraints: &BvpConstraints,
    cfg: &BvpConfig,
) -> Result<MotionPrimitive> {
    let from = lattice.origin_state();
    let to = lattice.offset_state(offset);
    let sol = solve_primitive_bvp(sys, theta_bar, &from, &to, cost, constraints, cfg)?;
    let mut prim = MotionPrimitive {
        from_offset: vec![0; lattice.dims()],
        to_offset: offset.to_vec(),
        nominal_id,
        duration: sol.duration,
        footprint: footprint(lattice, &sol.states),
        states: sol.states,
        inputs: sol.inputs,
        cost: sol.cost,
        endpoint_error: 0.0,
    };
    prim.endpoint_error = verify_primitive(sys, &prim, theta_bar, lattice, cfg.rollout_substeps * VERIFY_REFINEMENT)?;
    if !(prim.endpoint_error <= ENDPOINT_TOL_GRID) {
        return Err(Error::InfeasibleBvp(format!("terminal gap {:e} grid units exceeds tolerance", prim.endpoint_error)));
    }
    Ok(prim)
}

/// Builds primitives for every selected nominal id and connectivity offset.
///
/// `prior` may supply a previously generated library: an earlier entry with
/// identical nominal parameters is kept whenever it still satisfies the new
/// constraints and is no more expensive than the fresh solution.
#[allow(clippy::too_many_arguments)]
pub fn build_library(
    sys: &SystemModel,
    psi_d: &[LumpedParams],
    nominal_ids: Option<&[usize]>,
    lattice: &LatticeSpec,
    cost: &RunningCost,
    constraints: &BvpConstraints,
    cfg: &BvpConfig,
    prior: Option<&PrimitiveLibrary>,
) -> Result<PrimitiveLibrary> {
    for th in psi_d {
        sys.check_params(th)?;
    }
    let ids: Vec<usize> = match nominal_ids {
        Some(ids) => ids.to_vec(),
        None => (0..psi_d.len()).collect(),
    };
    if ids.iter().any(|i| *i >= psi_d.len()) {
        return Err(Error::InvalidArgument("nominal id out of range".into()));
    }
    let config = GenerationConfig {
        lattice: lattice.clone(),
        regressor: sys.regressor.spec(),
        n: sys.n,
        m: sys.m,
        nominal_params: psi_d.to_vec(),
        nominal_ids: ids.clone(),
        cost: cost.clone(),
        constraints: constraints.clone(),
        bvp: cfg.clone(),
    };
    let tasks: Vec<(usize, Vec<i64>)> = ids.iter().flat_map(|&id| lattice.connectivity.iter().map(move |o| (id, o.clone()))).collect();
    let results: Vec<(Option<MotionPrimitive>, GenerationRecord)> = tasks
        .par_iter()
        .map(|(id, offset)| {
            let fresh = generate_primitive(sys, &psi_d[*id], *id, offset, lattice, cost, constraints, cfg);
            let old = prior.and_then(|p| {
                let same_params = p.config.nominal_params.get(*id) == Some(&psi_d[*id]) && p.config.lattice == *lattice;
                p.get(*id, offset).filter(|e| same_params && still_feasible(e, constraints)).cloned()
            });
            let mut rec = GenerationRecord { nominal_id: *id, offset: offset.clone(), ok: true, reused: false, message: String::new() };
            let chosen = match (fresh, old) {
                (Ok(f), Some(o)) if o.cost <= f.cost => {
                    rec.reused = true;
                    rec.message = format!("kept previous primitive (cost {:.6} ≤ {:.6})", o.cost, f.cost);
                    Some(o)
                }
                (Ok(f), _) => {
                    rec.message = format!("cost {:.6}, duration {:.4} s", f.cost, f.duration);
                    Some(f)
                }
                (Err(e), Some(o)) => {
                    rec.reused = true;
                    rec.message = format!("regeneration failed ({e}); kept previous primitive");
                    Some(o)
                }
                (Err(e), None) => {
                    rec.ok = false;
                    rec.message = e.to_string();
                    None
                }
            };
            (chosen, rec)
        })
        .collect();
    let mut entries = Vec::new();
    let mut report = Vec::new();
    for (e, r) in results {
        if let Some(e) = e {
            entries.push(e);
        }
        report.push(r);
    }
    Ok(PrimitiveLibrary { version: LIBRARY_VERSION.to_string(), digest: config.digest(), config, entries, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::lattice::{build_lattice, Connectivity, LatticeInputs};

    fn di2() -> (SystemModel, LumpedParams) {
        // planar double integrator: states (px, py, vx, vy), inputs (ax, ay)
        let sys = SystemModel::new("di2", 4, 2, Regressor::Linear { n: 4 }, BoxBounds::unbounded(4), BoxBounds::unbounded(2)).unwrap();
        let th = LumpedParams::from_rows(
            &[vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 0.0]],
            &[vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        (sys, th)
    }

    fn lattice(conn: Connectivity) -> LatticeSpec {
        build_lattice(LatticeInputs {
            planning_dims: vec![0, 1],
            bounds: vec![[0.0, 4.0], [0.0, 4.0]],
            resolution: vec![1.0, 1.0],
            connectivity: conn.offsets(2),
            boundary_state: vec![0.0; 4],
        })
        .unwrap()
    }

    fn cons() -> BvpConstraints {
        BvpConstraints {
            state_box: BoxBounds::new(vec![f64::NEG_INFINITY, f64::NEG_INFINITY, -2.0, -2.0], vec![f64::INFINITY, f64::INFINITY, 2.0, 2.0])
                .unwrap(),
            input_box: BoxBounds::symmetric(&[3.0, 3.0]).unwrap(),
        }
    }

    #[test]
    fn four_connected_single_nominal() {
        let (sys, th) = di2();
        let lat = lattice(Connectivity::Axis);
        let lib =
            build_library(&sys, std::slice::from_ref(&th), None, &lat, &RunningCost::identity(2), &cons(), &BvpConfig::default(), None)
                .unwrap();
        assert!(lib.entries.len() <= 4);
        assert_eq!(lib.report.len(), 4);
        assert_eq!(lib.entries.len(), 4);
        for e in &lib.entries {
            assert!(e.cost > 0.0);
            assert!(e.endpoint_error <= ENDPOINT_TOL_GRID);
            assert_eq!(e.states.len(), 50);
            assert_eq!(e.footprint.len(), 50);
        }
        // verification round trip through the library file
        let text = lib.to_json().unwrap();
        let back = PrimitiveLibrary::from_json(&text).unwrap();
        assert_eq!(back, lib);
        let gaps = back.verify_all().unwrap();
        assert!(gaps.iter().all(|g| *g <= ENDPOINT_TOL_GRID));
    }

    #[test]
    fn duplicated_nominal_gives_identical_entries() {
        let (sys, th) = di2();
        let lat = lattice(Connectivity::Axis);
        let lib =
            build_library(&sys, &[th.clone(), th.clone()], None, &lat, &RunningCost::identity(2), &cons(), &BvpConfig::default(), None)
                .unwrap();
        for o in &lat.connectivity {
            let a = lib.get(0, o).unwrap();
            let b = lib.get(1, o).unwrap();
            assert_eq!(a.states, b.states);
            assert_eq!(a.inputs, b.inputs);
            assert_eq!(a.cost, b.cost);
        }
    }

    #[test]
    fn corrupted_inputs_flagged() {
        let (sys, th) = di2();
        let lat = lattice(Connectivity::Axis);
        let lib = build_library(
            &sys,
            std::slice::from_ref(&th),
            Some(&[0]),
            &lat,
            &RunningCost::identity(2),
            &cons(),
            &BvpConfig::default(),
            None,
        )
        .unwrap();
        let mut bad = lib.entries[0].clone();
        bad.inputs.iter_mut().for_each(|u| u.fill(0.0));
        let gap = verify_primitive(&sys, &bad, &th, &lat, 40).unwrap();
        assert!(gap > ENDPOINT_TOL_GRID);
        let mut zero = bad.clone();
        zero.duration = 0.0;
        assert_eq!(verify_primitive(&sys, &zero, &th, &lat, 40).unwrap(), 0.0);
    }

    #[test]
    fn tampered_file_rejected() {
        let (sys, th) = di2();
        let lat = lattice(Connectivity::Axis);
        let lib = build_library(&sys, &[th], None, &lat, &RunningCost::identity(2), &cons(), &BvpConfig::default(), None).unwrap();
        let mut other = lib.clone();
        other.config.bvp.segments = 21;
        let text = other.to_json().unwrap();
        assert!(PrimitiveLibrary::from_json(&text).is_err());
    }

    #[test]
    fn prior_entries_kept_when_not_worse() {
        let (sys, th) = di2();
        let lat = lattice(Connectivity::Axis);
        let cost = RunningCost::identity(2);
        let cfg = BvpConfig::default();
        let first = build_library(&sys, std::slice::from_ref(&th), None, &lat, &cost, &cons(), &cfg, None).unwrap();
        let mut looser = cons();
        looser.input_box = BoxBounds::symmetric(&[3.5, 3.5]).unwrap();
        let second = build_library(&sys, std::slice::from_ref(&th), None, &lat, &cost, &looser, &cfg, Some(&first)).unwrap();
        for (a, b) in first.entries.iter().zip(&second.entries) {
            assert!(b.cost <= a.cost);
        }
    }
}
