//! Standalone identification runs on the attitude subsystem: a tracked,
//! persistently exciting rate reference drives the adaptive identifier.

use super::closed_loop::ClosedLoop;
use super::plant::TruePlant;
use crate::adaptive_id::{init_identifier, uniform_weights, IdentifierState};
use crate::bounds::BoxBounds;
use crate::dynamics::{attitude_params, step_count, OmegaSignal, QuadrotorConstants, Regressor, SystemModel};
use crate::error::{Error, Result};
use crate::linalg::checked_inverse;
use crate::param_space::{LumpedParams, ParamPolytope};
use crate::tube_control::{ControlContext, VertexLaw};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Desired body rates `r_d(t) = bias + amplitude ⊙ sin(2π f t + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Excitation {
    pub bias: [f64; 3],
    pub amplitude: [f64; 3],
    pub frequency_hz: [f64; 3],
    pub phase: [f64; 3],
}

impl Excitation {
    pub fn rate(&self, t: f64) -> DVector<f64> {
        DVector::from_fn(3, |i, _| self.bias[i] + self.amplitude[i] * (2.0 * PI * self.frequency_hz[i] * t + self.phase[i]).sin())
    }

    pub fn rate_dot(&self, t: f64) -> DVector<f64> {
        DVector::from_fn(3, |i, _| {
            let w = 2.0 * PI * self.frequency_hz[i];
            self.amplitude[i] * w * (w * t + self.phase[i]).cos()
        })
    }
}

impl Default for Excitation {
    fn default() -> Self {
        Self { bias: [0.3, 0.3, 0.1], amplitude: [0.25, 0.2, 0.1], frequency_hz: [0.37, 0.23, 0.5], phase: [0.0, 1.0, 0.5] }
    }
}

/// Attitude identification experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentificationConfig {
    pub constants: QuadrotorConstants,
    pub omega: OmegaSignal,
    /// Vertices of Ψ as (c1, c2) pairs.
    pub psi_c: Vec<[f64; 2]>,
    /// True (c1, c2), used only by the plant.
    pub true_c: [f64; 2],
    pub adaptation_rate: f64,
    pub gain: f64,
    pub vertex_law: VertexLaw,
    pub dt: f64,
    pub duration: f64,
    /// Samples are recorded every this many steps.
    pub sample_every: usize,
    pub excitation: Excitation,
}

impl Default for IdentificationConfig {
    fn default() -> Self {
        Self {
            constants: QuadrotorConstants::default(),
            omega: OmegaSignal::Constant { value: 10.0 },
            psi_c: vec![[-5e-3, 2.25e-3], [0.0, 2.25e-3], [0.0, 7.75e-3], [-5e-3, 7.75e-3]],
            true_c: [-1e-3, 3.5e-3],
            adaptation_rate: 1.0,
            gain: 20.0,
            vertex_law: VertexLaw::ErrorFeedback,
            dt: 1e-3,
            duration: 10.0,
            sample_every: 10,
            excitation: Excitation::default(),
        }
    }
}

/// One recorded instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationSample {
    pub t: f64,
    pub diam: f64,
    /// Distance of the true parameter from the model set (0 when inside).
    pub truth_distance: f64,
    /// `‖x − x̂‖` with the γ-combined estimate.
    pub x_tilde: f64,
    /// `‖x − x̄‖`.
    pub tracking_dev: f64,
}

#[derive(Debug, Clone)]
pub struct IdentificationReport {
    pub samples: Vec<IdentificationSample>,
    pub s0_diam: f64,
    pub delta: f64,
    pub final_identifier: IdentifierState,
    pub plant_reads: usize,
    pub steps: usize,
}

impl IdentificationReport {
    pub fn max_x_tilde(&self) -> f64 {
        self.samples.iter().map(|s| s.x_tilde).fold(0.0, f64::max)
    }

    /// Largest per-sample increase of the model-set diameter.
    pub fn max_diam_increase(&self) -> f64 {
        self.samples.windows(2).map(|w| w[1].diam - w[0].diam).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Polytope of attitude parameters with the given (c1, c2) vertices.
pub fn attitude_polytope(k: &QuadrotorConstants, psi_c: &[[f64; 2]]) -> Result<ParamPolytope> {
    ParamPolytope::new(psi_c.iter().map(|c| attitude_params(k, c[0], c[1])).collect())
}

/// Runs the experiment from `x(0) = x̄(0) = x̂_i(0) = r_d(0)` with the
/// nominal parameter at the centroid of Ψ.
pub fn run_identification(cfg: &IdentificationConfig) -> Result<IdentificationReport> {
    if cfg.sample_every == 0 {
        return Err(Error::InvalidArgument("sample_every must be positive".into()));
    }
    let steps = step_count(cfg.duration, cfg.dt)?;
    let sys = SystemModel::new(
        "quadrotor-attitude",
        3,
        3,
        Regressor::QuadrotorAttitude { omega: cfg.omega.clone() },
        BoxBounds::unbounded(3),
        BoxBounds::unbounded(3),
    )?;
    let psi = attitude_polytope(&cfg.constants, &cfg.psi_c)?;
    let truth = attitude_params(&cfg.constants, cfg.true_c[0], cfg.true_c[1]);
    let plant = TruePlant::new(truth);
    if !plant.check_admissible(&psi)? {
        return Err(Error::Scenario("true parameter lies outside Ψ".into()));
    }
    let theta_bar: LumpedParams = psi.centroid();
    let inv_bu = checked_inverse(&theta_bar.theta_u)?;
    let x0 = cfg.excitation.rate(0.0);
    let mut id = init_identifier(&psi, &uniform_weights(psi.len()), cfg.adaptation_rate, cfg.gain, &x0)?;
    id.begin_segment(&x0);
    let s0_diam = id.s0_diam;
    let delta = id.delta();
    let ctx = ControlContext::new(&sys, theta_bar.clone(), cfg.gain)?;
    // ū(t) = θ̄u⁻¹ (ṙ_d − θ̄x φ(t, r_d)) makes r_d an exact nominal trajectory.
    let ubar = |t: f64| -> DVector<f64> {
        let rd = cfg.excitation.rate(t);
        let phi = sys.regressor.eval(t, &rd);
        &inv_bu * (cfg.excitation.rate_dot(t) - &theta_bar.theta_x * phi)
    };
    let mut cl = ClosedLoop::new(&sys, &plant, ctx, cfg.vertex_law, &id, None);
    let mut y = cl.pack(x0.as_slice(), &[], &id, x0.as_slice(), &[]);
    let mut samples = Vec::with_capacity(steps / cfg.sample_every + 1);
    let record = |cl: &mut ClosedLoop<'_>, t: f64, y: &DVector<f64>, out: &mut Vec<IdentificationSample>| -> Result<()> {
        let s = cl.signals(t, y, &ubar(t))?;
        let ident = cl.identifier(y, t)?;
        let set = ident.model_set();
        out.push(IdentificationSample {
            t,
            diam: set.diam(),
            truth_distance: plant.distance_to(&set)?,
            x_tilde: (&s.x - &s.x_hat).norm(),
            tracking_dev: (&s.x - &s.xbar).norm(),
        });
        Ok(())
    };
    record(&mut cl, 0.0, &y, &mut samples)?;
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        y = cl.step(t, &y, cfg.dt, ubar)?;
        if (k + 1) % cfg.sample_every == 0 {
            record(&mut cl, (k + 1) as f64 * cfg.dt, &y, &mut samples)?;
        }
    }
    let final_identifier = cl.identifier(&y, cfg.duration)?;
    Ok(IdentificationReport { samples, s0_diam, delta, final_identifier, plant_reads: plant.reads(), steps })
}
