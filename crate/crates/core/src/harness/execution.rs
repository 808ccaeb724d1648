//! One execution of the adaptive planning loop: offline block (tube radius,
//! tightening, nominal selection, primitive library, graph search) followed
//! by closed-loop flight of the true plant along the plan.

use super::closed_loop::ClosedLoop;
use super::plant::TruePlant;
use super::scenario::Scenario;
use crate::adaptive_id::{init_identifier, IdentifierState};
use crate::bounds::BoxBounds;
use crate::dynamics::{planar, planar_params, Regressor, SystemModel, Trajectory};
use crate::error::{Error, Result};
use crate::param_space::{LumpedParams, ParamPolytope};
use crate::planner::{nu_extremes, select_nominal, tighten_inputs, tighten_workspace, Plan, PlanQuery, Workspace};
use crate::primitives::bvp::{interpolate_input, BvpConstraints};
use crate::primitives::lattice::LatticeSpec;
use crate::primitives::library::{build_library, MotionPrimitive, PrimitiveLibrary};
use crate::tube_control::ControlContext;
use nalgebra::DVector;
use serde::Serialize;

/// Number of kinematic states driven by the body rates: (px, py, vx, vy, φ, θ).
pub const KINEMATIC_DIM: usize = 6;

/// Scenario-derived objects shared by every execution.
pub struct Prepared {
    pub scenario: Scenario,
    /// Three-rate attitude model (identification and tube control).
    pub attitude: SystemModel,
    /// Eight-state planar model (planning and primitives).
    pub planar: SystemModel,
    pub psi: ParamPolytope,
    /// `Ψ_d` in attitude parameters.
    pub psi_d: Vec<LumpedParams>,
    /// `Ψ_d` mapped to the planar model.
    pub psi_d_planar: Vec<LumpedParams>,
    pub lattice: LatticeSpec,
    pub plant: TruePlant,
}

/// Planar-model parameters implied by attitude parameters at spin rate `omega`.
pub fn planar_from_attitude(sc: &Scenario, theta: &LumpedParams) -> LumpedParams {
    let mut k = sc.constants.clone();
    k.b1 = theta.theta_u[(0, 0)];
    k.b2 = theta.theta_u[(1, 1)];
    let (c1, c2) = crate::dynamics::attitude_uncertain(theta);
    planar_params(&k, sc.omega.mean(), c1, c2)
}

/// Attitude state box: planar rate bounds plus the yaw-rate limit.
fn attitude_box(sc: &Scenario) -> Result<BoxBounds> {
    let b = &sc.workspace.bounds;
    let y = sc.attitude.yaw_rate_limit;
    BoxBounds::new(vec![b.lo[planar::R1], b.lo[planar::R2], -y], vec![b.hi[planar::R1], b.hi[planar::R2], y])
}

/// Validates the scenario and builds the shared models.
pub fn prepare(scenario: &Scenario) -> Result<Prepared> {
    scenario.validate()?;
    let attitude = SystemModel::new(
        "quadrotor-attitude",
        3,
        3,
        Regressor::QuadrotorAttitude { omega: scenario.omega.clone() },
        attitude_box(scenario)?,
        scenario.attitude.input_box.clone(),
    )?;
    let planar_u = BoxBounds::new(scenario.attitude.input_box.lo[..2].to_vec(), scenario.attitude.input_box.hi[..2].to_vec())?;
    let planar = crate::dynamics::quadrotor_planar_model(scenario.workspace.bounds.clone(), planar_u)?;
    let psi = scenario.psi_polytope()?;
    let psi_d = scenario.psi_d.sample(&psi, scenario.seed)?;
    let psi_d_planar = psi_d.iter().map(|th| planar_from_attitude(scenario, th)).collect();
    Ok(Prepared {
        lattice: scenario.lattice_spec()?,
        plant: TruePlant::new(scenario.true_theta.clone()),
        scenario: scenario.clone(),
        attitude,
        planar,
        psi,
        psi_d,
        psi_d_planar,
    })
}

impl Prepared {
    /// Fresh identifier with `S(t₀) = Ψ` at hover.
    pub fn initial_identifier(&self) -> Result<IdentifierState> {
        let sc = &self.scenario;
        init_identifier(&self.psi, &sc.weights(), sc.identifier.adaptation_rate, sc.identifier.gain, &DVector::zeros(3))
    }
}

/// Result of the offline block.
#[derive(Debug, Clone)]
pub struct OfflinePlan {
    pub diam_start: f64,
    pub delta: f64,
    pub nominal_id: usize,
    pub theta_bar: LumpedParams,
    pub workspace: Workspace,
    pub nu_max: Vec<f64>,
    pub input_box: BoxBounds,
    pub library: PrimitiveLibrary,
    pub plan: Plan,
}

impl OfflinePlan {
    pub fn primitives(&self) -> Vec<&MotionPrimitive> {
        self.library.for_nominal(self.nominal_id)
    }
}

/// Primitive constraints: tightened non-planning states (planning dimensions
/// are handled by the search) and the tightened thrust-moment inputs.
fn bvp_constraints(prep: &Prepared, workspace: &Workspace, input_box: &BoxBounds) -> Result<BvpConstraints> {
    let mut state_box = workspace.bounds.clone();
    for d in &prep.lattice.planning_dims {
        state_box.lo[*d] = f64::NEG_INFINITY;
        state_box.hi[*d] = f64::INFINITY;
    }
    Ok(BvpConstraints { state_box, input_box: BoxBounds::new(input_box.lo[..2].to_vec(), input_box.hi[..2].to_vec())? })
}

/// Library over every nominal in `Ψ_d` and every lattice offset, generated
/// under the constraints of a first execution (`S = Ψ`).
pub fn full_library(prep: &Prepared) -> Result<PrimitiveLibrary> {
    let sc = &prep.scenario;
    let id = prep.initial_identifier()?;
    let set = id.model_set();
    let delta = id.delta();
    let workspace = tighten_workspace(&sc.workspace, delta)?;
    let (theta_hat, _) = id.combined_estimate();
    let (_, theta_bar) = select_nominal(&prep.psi_d, &set, &theta_hat)?;
    let ctx = ControlContext::new(&prep.attitude, theta_bar, sc.identifier.gain)?;
    let x_box = prep.attitude.state_box.clone();
    let xs_box = x_box.shrink(delta)?;
    let nu_max = nu_extremes(&ctx, &x_box, &xs_box, &prep.attitude.input_box, &set, &sc.nu.sampling)?;
    let input_box = tighten_inputs(&prep.attitude.input_box, &nu_max, sc.nu.margin)?;
    let constraints = bvp_constraints(prep, &workspace, &input_box)?;
    build_library(&prep.planar, &prep.psi_d_planar, None, &prep.lattice, &sc.running_cost(), &constraints, &sc.primitives.bvp, None)
}

/// Offline block: δ from the carried model set, tightened sets, nominal
/// selection, primitives `M(Θ̄)` and the resolution-optimal plan. Uses no
/// knowledge of the true parameters.
pub fn offline(prep: &Prepared, id: &IdentifierState, prior: Option<&PrimitiveLibrary>) -> Result<OfflinePlan> {
    let sc = &prep.scenario;
    let set = id.model_set();
    let diam_start = id.s0_diam;
    let delta = id.delta();
    let workspace = tighten_workspace(&sc.workspace, delta)?;
    let (theta_hat, _) = id.combined_estimate();
    let (nominal_id, theta_bar) = select_nominal(&prep.psi_d, &set, &theta_hat)?;
    let ctx = ControlContext::new(&prep.attitude, theta_bar.clone(), sc.identifier.gain)?;
    let x_box = prep.attitude.state_box.clone();
    let xs_box = x_box.shrink(delta)?;
    let nu_max = nu_extremes(&ctx, &x_box, &xs_box, &prep.attitude.input_box, &set, &sc.nu.sampling)?;
    let input_box = tighten_inputs(&prep.attitude.input_box, &nu_max, sc.nu.margin)?;
    let constraints = bvp_constraints(prep, &workspace, &input_box)?;
    let library = match prior {
        Some(p) if p.config.constraints == constraints && p.config.nominal_ids == [nominal_id] && p.config.lattice == prep.lattice => {
            p.clone()
        }
        _ => build_library(
            &prep.planar,
            &prep.psi_d_planar,
            Some(&[nominal_id]),
            &prep.lattice,
            &sc.running_cost(),
            &constraints,
            &sc.primitives.bvp,
            prior,
        )?,
    };
    let prims = library.for_nominal(nominal_id);
    let query = PlanQuery { lattice: &prep.lattice, primitives: &prims, workspace: &workspace, delta, nominal_id };
    let plan = query.plan(&sc.start, &sc.goal)?;
    Ok(OfflinePlan { diam_start, delta, nominal_id, theta_bar, workspace, nu_max, input_box, library, plan })
}

/// Outcome of one execution.
#[derive(Debug, Clone, Serialize)]
pub struct ExecutionRecord {
    pub execution: usize,
    pub diam_start: f64,
    pub diam_end: f64,
    pub delta: f64,
    pub nominal_id: usize,
    pub plan_cost: f64,
    pub plan_duration: f64,
    /// `max_t ‖r(t) − r̄(t)‖` over the flight (body rates).
    pub max_tube_dev: f64,
    /// `max_t ‖p(t) − p̄(t)‖` (planar position, informational).
    pub max_position_dev: f64,
    pub tube_ok: bool,
    pub nu_max: Vec<f64>,
    pub input_box: BoxBounds,
    pub library_digest: String,
    pub plan: Plan,
    #[serde(skip)]
    pub trajectory: Trajectory,
    #[serde(skip)]
    pub reference: Trajectory,
}

fn kinematics(g: f64) -> impl Fn(&[f64], &DVector<f64>) -> Vec<f64> {
    // aux = (px, py, vx, vy, φ, θ), driven by body rates r = (r1, r2, r3)
    move |a: &[f64], r: &DVector<f64>| vec![a[2], a[3], g * a[5], -g * a[4], r[0], r[1]]
}

fn full_state(x: &[f64], aux: &[f64]) -> DVector<f64> {
    let mut v = aux.to_vec();
    v.extend_from_slice(x);
    DVector::from_vec(v)
}

/// Runs the offline block and flies the plan. Returns the record, the
/// identifier at the end of the flight and the library used.
pub fn run_execution(
    prep: &Prepared,
    execution: usize,
    carried: Option<IdentifierState>,
    prior: Option<&PrimitiveLibrary>,
) -> Result<(ExecutionRecord, IdentifierState, PrimitiveLibrary)> {
    let sc = &prep.scenario;
    let mut id = match carried {
        Some(id) => id,
        None => prep.initial_identifier()?,
    };
    let start_state = prep.lattice.node_state(&sc.start);
    let x0 = DVector::from_column_slice(&[start_state[planar::R1], start_state[planar::R2], 0.0]);
    id.begin_segment(&x0);
    let off = offline(prep, &id, prior)?;
    let prims = off.primitives();

    let ctx = ControlContext::new(&prep.attitude, off.theta_bar.clone(), sc.identifier.gain)?;
    let kin = kinematics(sc.constants.g);
    let mut cl = ClosedLoop::new(&prep.attitude, &prep.plant, ctx, sc.identifier.vertex_law, &id, Some((KINEMATIC_DIM, &kin)));
    let aux0: Vec<f64> = start_state.as_slice()[..KINEMATIC_DIM].to_vec();
    let mut y = cl.pack(x0.as_slice(), &aux0, &id, x0.as_slice(), &aux0);

    let record_every = ((sc.timing.record_dt / sc.timing.dt).round() as usize).max(1);
    let mut traj = Trajectory { times: Vec::new(), states: Vec::new(), inputs: Vec::new() };
    let mut reference = traj.clone();
    let mut max_tube: f64 = 0.0;
    let mut max_pos: f64 = 0.0;
    let mut t0 = 0.0;
    let mut step_index = 0usize;
    let total_steps: usize = off.plan.steps.iter().map(|s| (s.duration / sc.timing.dt).ceil().max(1.0) as usize).sum();
    let mut log = |cl: &mut ClosedLoop<'_>, t: f64, y: &DVector<f64>, ubar: &DVector<f64>, force: bool, k: usize| -> Result<()> {
        let (x, aux) = cl.plant_part(y);
        let (xb, auxb) = cl.reference_part(y);
        let dev = x.iter().zip(xb).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let pos = (0..2).map(|i| (aux[i] - auxb[i]).powi(2)).sum::<f64>().sqrt();
        max_tube = max_tube.max(dev);
        max_pos = max_pos.max(pos);
        if force || k.is_multiple_of(record_every) {
            let s = cl.signals(t, y, ubar)?;
            traj.times.push(t);
            traj.states.push(full_state(x, aux));
            traj.inputs.push(s.u);
            reference.times.push(t);
            reference.states.push(full_state(xb, auxb));
            reference.inputs.push(ubar.clone());
        }
        Ok(())
    };
    let att_input = |u: DVector<f64>| DVector::from_column_slice(&[u[0], u[1], 0.0]);
    if off.plan.steps.is_empty() {
        log(&mut cl, 0.0, &y, &DVector::zeros(3), true, 0)?;
    }
    for (k, step) in off.plan.steps.iter().enumerate() {
        let p = prims[step.primitive];
        let n = (p.duration / sc.timing.dt).ceil().max(1.0) as usize;
        let h = p.duration / n as f64;
        let ubar = |t: f64| att_input(interpolate_input(&p.inputs, p.duration, (t - t0).clamp(0.0, p.duration)));
        if k == 0 {
            log(&mut cl, t0, &y, &ubar(t0), true, 0)?;
        }
        for j in 0..n {
            let t = t0 + j as f64 * h;
            y = cl.step(t, &y, h, ubar)?;
            step_index += 1;
            let te = t0 + (j + 1) as f64 * h;
            log(&mut cl, te, &y, &ubar(te), step_index == total_steps, step_index)?;
        }
        t0 += p.duration;
    }
    let end = cl.identifier(&y, id.time + t0)?;
    let diam_end = end.current_diam();
    let tube_ok = max_tube <= off.delta + sc.tube_tolerance;
    let record = ExecutionRecord {
        execution,
        diam_start: off.diam_start,
        diam_end,
        delta: off.delta,
        nominal_id: off.nominal_id,
        plan_cost: off.plan.total_cost,
        plan_duration: off.plan.duration(),
        max_tube_dev: max_tube,
        max_position_dev: max_pos,
        tube_ok,
        nu_max: off.nu_max.clone(),
        input_box: off.input_box.clone(),
        library_digest: off.library.digest.clone(),
        plan: off.plan.clone(),
        trajectory: traj,
        reference,
    };
    if !record.diam_end.is_finite() {
        return Err(Error::NonFinite("model-set diameter"));
    }
    Ok((record, end, off.library))
}
