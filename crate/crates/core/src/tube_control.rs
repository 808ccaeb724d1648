//! Tube-keeping control: measurable mismatch term `h`, correction `ν`,
//! applied input `u = ū + ν`, and the per-vertex inputs `û_i` that drive the
//! vertex estimators.
//!
//! With `h = θ̂x φ(x) − θ̄x φ(x̄) + (θ̂u − θ̄u) ū` and
//! `ν = −(θ̂u)⁻¹ (h + k (x − x̄))`, the estimated-versus-nominal error obeys
//! `ė = −k e`.

use crate::adaptive_id::VertexEstimate;
use crate::dynamics::SystemModel;
use crate::error::{dim_err, Result};
use crate::linalg::checked_inverse;
use crate::param_space::{validate_weights, LumpedParams};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Nominal parameters, gain and system structure for one execution.
#[derive(Debug, Clone)]
pub struct ControlContext<'a> {
    pub theta_bar: LumpedParams,
    pub gain: f64,
    pub sys: &'a SystemModel,
}

impl<'a> ControlContext<'a> {
    /// Validates dimensions and conditioning of `θ̄u`.
    pub fn new(sys: &'a SystemModel, theta_bar: LumpedParams, gain: f64) -> Result<Self> {
        sys.check_params(&theta_bar)?;
        checked_inverse(&theta_bar.theta_u)?;
        Ok(Self { theta_bar, gain, sys })
    }
}

/// How the per-vertex inputs `û_i` are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VertexLaw {
    /// `û_i = u + (θ̂u)⁻¹ k (x − x̂_i)`: each estimator is driven by its own
    /// output error, giving a per-vertex Lyapunov decrease.
    #[default]
    ErrorFeedback,
    /// `û_i = ū − (θ̂u)⁻¹ (h(ψ̂_i) + k (x̂_i − x̄))`: each estimator tracks the
    /// nominal reference under its own parameters.
    NominalTracking,
}

fn check_signal(ctx: &ControlContext<'_>, x: &DVector<f64>, xbar: &DVector<f64>, ubar: &DVector<f64>) -> Result<()> {
    let n = ctx.sys.n;
    if x.len() != n || xbar.len() != n {
        return Err(dim_err("tube control state", n, format!("{} / {}", x.len(), xbar.len())));
    }
    if ubar.len() != ctx.sys.m {
        return Err(dim_err("tube control nominal input", ctx.sys.m, ubar.len()));
    }
    Ok(())
}

/// `h = θ̂x φ(x) − θ̄x φ(x̄) + (θ̂u − θ̄u) ū`.
pub fn h_term(
    ctx: &ControlContext<'_>,
    t: f64,
    x: &DVector<f64>,
    xbar: &DVector<f64>,
    ubar: &DVector<f64>,
    theta_hat: &LumpedParams,
) -> Result<DVector<f64>> {
    check_signal(ctx, x, xbar, ubar)?;
    ctx.sys.check_params(theta_hat)?;
    let phi = ctx.sys.phi(t, x)?;
    let phibar = ctx.sys.phi(t, xbar)?;
    Ok(h_unchecked(ctx, &phi, &phibar, ubar, theta_hat))
}

fn h_unchecked(
    ctx: &ControlContext<'_>,
    phi: &DVector<f64>,
    phibar: &DVector<f64>,
    ubar: &DVector<f64>,
    theta_hat: &LumpedParams,
) -> DVector<f64> {
    let mut h = &theta_hat.theta_x * phi;
    h.gemv(-1.0, &ctx.theta_bar.theta_x, phibar, 1.0);
    h.gemv(1.0, &theta_hat.theta_u, ubar, 1.0);
    h.gemv(-1.0, &ctx.theta_bar.theta_u, ubar, 1.0);
    h
}

/// `ν = −(θ̂u)⁻¹ (h + k (x − x̄))`.
pub fn nu(
    ctx: &ControlContext<'_>,
    t: f64,
    x: &DVector<f64>,
    xbar: &DVector<f64>,
    ubar: &DVector<f64>,
    theta_hat: &LumpedParams,
) -> Result<DVector<f64>> {
    let h = h_term(ctx, t, x, xbar, ubar, theta_hat)?;
    let inv = checked_inverse(&theta_hat.theta_u)?;
    Ok(-(inv * (h + (x - xbar) * ctx.gain)))
}

/// Applied input `u = ū + ν`.
pub fn applied_input(
    ctx: &ControlContext<'_>,
    t: f64,
    x: &DVector<f64>,
    xbar: &DVector<f64>,
    ubar: &DVector<f64>,
    theta_hat: &LumpedParams,
) -> Result<DVector<f64>> {
    Ok(ubar + nu(ctx, t, x, xbar, ubar, theta_hat)?)
}

/// Combined estimated input `û = ū − (θ̂u)⁻¹ (h(Θ̂) + k (x̂ − x̄))`.
#[allow(clippy::too_many_arguments)]
pub fn combined_uhat(
    ctx: &ControlContext<'_>,
    t: f64,
    x: &DVector<f64>,
    xbar: &DVector<f64>,
    ubar: &DVector<f64>,
    theta_hat: &LumpedParams,
    x_hat: &DVector<f64>,
) -> Result<DVector<f64>> {
    let h = h_term(ctx, t, x, xbar, ubar, theta_hat)?;
    let inv = checked_inverse(&theta_hat.theta_u)?;
    Ok(ubar - inv * (h + (x_hat - xbar) * ctx.gain))
}

/// Per-vertex inputs `û_i = ū − (θ̂u)⁻¹ (h(ψ̂_i) + k (x̂_i − x̄))`, with `θ̂u`
/// the input block of the γ-combined estimate.
pub fn vertex_controls(
    ctx: &ControlContext<'_>,
    t: f64,
    x: &DVector<f64>,
    xbar: &DVector<f64>,
    ubar: &DVector<f64>,
    vertices: &[VertexEstimate],
    gamma: &[f64],
) -> Result<Vec<DVector<f64>>> {
    check_signal(ctx, x, xbar, ubar)?;
    validate_weights(gamma, vertices.len())?;
    let theta_u_hat = combined_input_block(vertices, gamma);
    let inv = checked_inverse(&theta_u_hat)?;
    let phi = ctx.sys.phi(t, x)?;
    let phibar = ctx.sys.phi(t, xbar)?;
    vertices
        .iter()
        .map(|v| {
            ctx.sys.check_params(&v.psi_hat)?;
            let h = h_unchecked(ctx, &phi, &phibar, ubar, &v.psi_hat);
            Ok(ubar - &inv * (h + (&v.x_hat - xbar) * ctx.gain))
        })
        .collect()
}

/// Per-vertex inputs `û_i = u + (θ̂u)⁻¹ k (x − x̂_i)`; their γ-combination is
/// `u + (θ̂u)⁻¹ k x̃`, the same combined `û` as [`combined_uhat`].
pub fn error_feedback_vertex_controls(
    gain: f64,
    x: &DVector<f64>,
    u: &DVector<f64>,
    vertices: &[VertexEstimate],
    gamma: &[f64],
) -> Result<Vec<DVector<f64>>> {
    validate_weights(gamma, vertices.len())?;
    let inv = checked_inverse(&combined_input_block(vertices, gamma))?;
    Ok(vertices.iter().map(|v| u + &inv * ((x - &v.x_hat) * gain)).collect())
}

/// Per-vertex inputs under the selected law.
#[allow(clippy::too_many_arguments)]
pub fn vertex_controls_for_law(
    law: VertexLaw,
    ctx: &ControlContext<'_>,
    t: f64,
    x: &DVector<f64>,
    xbar: &DVector<f64>,
    ubar: &DVector<f64>,
    u: &DVector<f64>,
    vertices: &[VertexEstimate],
    gamma: &[f64],
) -> Result<Vec<DVector<f64>>> {
    match law {
        VertexLaw::ErrorFeedback => error_feedback_vertex_controls(ctx.gain, x, u, vertices, gamma),
        VertexLaw::NominalTracking => vertex_controls(ctx, t, x, xbar, ubar, vertices, gamma),
    }
}

fn combined_input_block(vertices: &[VertexEstimate], gamma: &[f64]) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(vertices[0].psi_hat.n(), vertices[0].psi_hat.m());
    for (v, g) in vertices.iter().zip(gamma) {
        acc += &v.psi_hat.theta_u * *g;
    }
    acc
}
