//! Scenario files: every experiment knob of a drone campaign.

use crate::bounds::BoxBounds;
use crate::dynamics::{attitude_params, planar, OmegaSignal, QuadrotorConstants};
use crate::error::{Error, Result};
use crate::param_space::{LumpedParams, ParamPolytope, MEMBERSHIP_TOL};
use crate::planner::{NuSampling, Workspace, DEFAULT_NU_MARGIN};
use crate::primitives::bvp::{BvpConfig, RunningCost};
use crate::primitives::lattice::{build_lattice, LatticeInputs, LatticeSpec};
use crate::tube_control::VertexLaw;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// How the nominal-parameter list `Ψ_d` is drawn from Ψ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsiDSampling {
    pub include_vertices: bool,
    pub include_centroid: bool,
    /// Additional seeded random convex combinations of the vertices.
    pub random_interior: usize,
}

impl Default for PsiDSampling {
    fn default() -> Self {
        Self { include_vertices: true, include_centroid: true, random_interior: 0 }
    }
}

impl PsiDSampling {
    pub fn sample(&self, psi: &ParamPolytope, seed: u64) -> Result<Vec<LumpedParams>> {
        let mut out = Vec::new();
        if self.include_vertices {
            out.extend(psi.vertices().iter().cloned());
        }
        if self.include_centroid {
            out.push(psi.centroid());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5053_495f_445f_5354);
        for _ in 0..self.random_interior {
            let mut w: Vec<f64> = (0..psi.len()).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
            out.push(psi.convex_combine(&w)?);
        }
        if out.is_empty() {
            return Err(Error::Scenario("nominal parameter sampling produced no elements".into()));
        }
        Ok(out)
    }
}

/// Identifier and controller settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifierSpec {
    /// Γ.
    pub adaptation_rate: f64,
    /// k.
    pub gain: f64,
    /// γ (uniform when omitted).
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub vertex_law: VertexLaw,
}

/// Limits of the attitude subsystem that are not part of the planar state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttitudeLimits {
    /// |r3| bound (rad/s).
    pub yaw_rate_limit: f64,
    /// Input box U of the three torque channels.
    pub input_box: BoxBounds,
}

/// Simulation step and output sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    /// Closed-loop integration step (s).
    pub dt: f64,
    /// Trajectory output period (s).
    pub record_dt: f64,
}

/// Primitive generation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimitiveSpec {
    /// Input weight R of l(x, u) = 1 + uᵀRu (identity when omitted).
    #[serde(default)]
    pub input_weight: Option<RunningCost>,
    #[serde(default)]
    pub bvp: BvpConfig,
}

/// `ν`-set over-approximation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuSpec {
    pub margin: f64,
    #[serde(default)]
    pub sampling: NuSampling,
}

impl Default for NuSpec {
    fn default() -> Self {
        Self { margin: DEFAULT_NU_MARGIN, sampling: NuSampling::default() }
    }
}

/// A complete campaign description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub label: String,
    pub seed: u64,
    pub executions: usize,
    #[serde(default)]
    pub constants: QuadrotorConstants,
    pub omega: OmegaSignal,
    /// True attitude parameters: consumed only by the plant simulator.
    pub true_theta: LumpedParams,
    /// Vertices of Ψ (attitude parameters, row-major matrices).
    pub psi: Vec<LumpedParams>,
    #[serde(default)]
    pub psi_d: PsiDSampling,
    pub identifier: IdentifierSpec,
    pub attitude: AttitudeLimits,
    pub lattice: LatticeInputs,
    /// Planar state box X (8 coordinates) and obstacles in (px, py).
    pub workspace: Workspace,
    pub start: Vec<i64>,
    pub goal: Vec<i64>,
    pub timing: Timing,
    pub primitives: PrimitiveSpec,
    #[serde(default)]
    pub nu: NuSpec,
    /// Slack on the tube-containment check.
    #[serde(default = "default_tube_tolerance")]
    pub tube_tolerance: f64,
}

fn default_tube_tolerance() -> f64 {
    1e-6
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Self = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn psi_polytope(&self) -> Result<ParamPolytope> {
        ParamPolytope::new(self.psi.clone())
    }

    pub fn lattice_spec(&self) -> Result<LatticeSpec> {
        build_lattice(self.lattice.clone())
    }

    pub fn running_cost(&self) -> RunningCost {
        self.primitives.input_weight.clone().unwrap_or_else(|| RunningCost::identity(2))
    }

    pub fn weights(&self) -> Vec<f64> {
        self.identifier.weights.clone().unwrap_or_else(|| crate::adaptive_id::uniform_weights(self.psi.len()))
    }

    /// Checks internal consistency (dimensions, truth inside Ψ, lattice and
    /// start/goal nodes).
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        if self.executions == 0 {
            return bad("executions must be at least 1".into());
        }
        let psi = self.psi_polytope()?;
        if psi.dims() != (3, 5, 3) {
            return bad(format!("Ψ vertices must be 3×5 / 3×3 attitude parameters, got {:?}", psi.dims()));
        }
        if self.true_theta.dims() != (3, 5, 3) {
            return bad("true parameters must be 3×5 / 3×3 attitude parameters".into());
        }
        if !psi.contains(&self.true_theta, MEMBERSHIP_TOL)? {
            return bad("true parameters lie outside Ψ".into());
        }
        crate::param_space::validate_weights(&self.weights(), psi.len())?;
        if !(self.identifier.adaptation_rate > 0.0 && self.identifier.gain > 0.0) {
            return bad("adaptation rate and gain must be positive".into());
        }
        if !(self.timing.dt > 0.0 && self.timing.record_dt >= self.timing.dt) {
            return bad("timing requires 0 < dt ≤ record_dt".into());
        }
        if self.attitude.input_box.dim() != 3 || !(self.attitude.yaw_rate_limit > 0.0) {
            return bad("attitude limits need a 3-D input box and a positive yaw-rate limit".into());
        }
        if self.workspace.bounds.dim() != 8 || self.workspace.planning_dims != vec![planar::PX, planar::PY] {
            return bad("workspace must bound the 8 planar states and plan over (px, py)".into());
        }
        self.workspace.validate()?;
        let lat = self.lattice_spec()?;
        if lat.planning_dims != self.workspace.planning_dims || lat.boundary_state.len() != 8 {
            return bad("lattice must plan over (px, py) with an 8-state boundary".into());
        }
        for (name, node) in [("start", &self.start), ("goal", &self.goal)] {
            if !lat.contains_node(node) {
                return bad(format!("{name} node {node:?} is not on the lattice"));
            }
        }
        if !(self.nu.margin >= 1.0) {
            return bad("ν margin must be at least 1".into());
        }
        if !(self.tube_tolerance >= 0.0) {
            return bad("tube tolerance must be non-negative".into());
        }
        Ok(())
    }

    /// Bundled planar quadrotor campaign (the contents of `scenarios/drone.toml`).
    pub fn drone_default() -> Self {
        let k = QuadrotorConstants::default();
        let psi_c = [[-5e-3, 2.25e-3], [0.0, 2.25e-3], [0.0, 7.75e-3], [-5e-3, 7.75e-3]];
        let bounds = BoxBounds::new(vec![0.0, 0.0, -2.0, -2.0, -1.0, -1.0, -3.0, -3.0], vec![12.0, 10.0, 2.0, 2.0, 1.0, 1.0, 3.0, 3.0])
            .expect("static bounds");
        let ob = |lo: [f64; 2], hi: [f64; 2]| BoxBounds::new(lo.to_vec(), hi.to_vec()).expect("static obstacle");
        Self {
            label: "drone-planar".into(),
            seed: 7,
            executions: 9,
            omega: OmegaSignal::Constant { value: 50.0 },
            true_theta: attitude_params(&k, -2.5e-3, 5.0e-3),
            psi: psi_c.iter().map(|c| attitude_params(&k, c[0], c[1])).collect(),
            psi_d: PsiDSampling::default(),
            identifier: IdentifierSpec { adaptation_rate: 1e-4, gain: 5.0, weights: None, vertex_law: VertexLaw::ErrorFeedback },
            attitude: AttitudeLimits { yaw_rate_limit: 1.0, input_box: BoxBounds::symmetric(&[10.0, 10.0, 10.0]).expect("static") },
            lattice: LatticeInputs {
                planning_dims: vec![planar::PX, planar::PY],
                bounds: vec![[0.0, 12.0], [0.0, 10.0]],
                resolution: vec![1.0, 1.0],
                connectivity: crate::primitives::lattice::Connectivity::Full.offsets(2),
                boundary_state: vec![0.0; 8],
            },
            workspace: Workspace {
                bounds,
                planning_dims: vec![planar::PX, planar::PY],
                obstacles: vec![ob([5.0, 0.0], [7.0, 3.4]), ob([5.0, 4.6], [7.0, 7.0])],
            },
            start: vec![2, 2],
            goal: vec![10, 6],
            timing: Timing { dt: 2e-3, record_dt: 2e-2 },
            primitives: PrimitiveSpec {
                input_weight: Some(RunningCost::new(nalgebra::DMatrix::identity(2, 2) * 0.01).expect("static weight")),
                bvp: BvpConfig::default(),
            },
            nu: NuSpec::default(),
            tube_tolerance: 1e-6,
            constants: k,
        }
    }
}
