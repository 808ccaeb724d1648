//! Multi-model adaptive identifier.
//!
//! One estimator `(ψ̂_i, x̂_i)` runs per vertex of the initial parameter
//! polytope Ψ. Each evolves as
//!
//! ```text
//! d/dt x̂_i = ψ̂_i X − θ̂u (u − û_i),      X = [φ(t, x); u]
//! d/dt ψ̂_i = Γ (x − x̂_i) Xᵀ,             followed by projection onto Ψ
//! ```
//!
//! where `θ̂u` is the input block of the combined estimate `Θ̂ = Σ γ_i ψ̂_i`.
//! The model set `S(t) = co{ψ̂_i(t)}` contains the true parameters and its
//! diameter never grows; the tube radius derived from it is
//! `δ = sqrt(1/Γ) · diam(S(t₀))`.

use crate::dynamics::{rk4_step, SystemModel};
use crate::error::{dim_err, Error, Result};
use crate::linalg::condition_number;
use crate::linalg::MAX_CONDITION;
use crate::param_space::{validate_weights, LumpedParams, ParamPolytope};
use nalgebra::{DMatrix, DVector};

/// Estimator attached to one vertex of Ψ.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexEstimate {
    pub psi_hat: LumpedParams,
    pub x_hat: DVector<f64>,
}

/// Complete identifier state.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentifierState {
    pub vertices: Vec<VertexEstimate>,
    pub gamma: Vec<f64>,
    /// Adaptation rate Γ > 0.
    pub adaptation_rate: f64,
    /// Tracking gain k > 0.
    pub gain: f64,
    /// Fixed projection set Ψ.
    pub psi: ParamPolytope,
    /// Diameter of the model set at the start of the current segment.
    pub s0_diam: f64,
    pub time: f64,
}

/// Uniform weights `1/q`.
pub fn uniform_weights(q: usize) -> Vec<f64> {
    vec![1.0 / q as f64; q]
}

/// Initializes every estimator at a vertex of Ψ with `x̂_i = x0`.
pub fn init_identifier(psi: &ParamPolytope, gamma: &[f64], adaptation_rate: f64, gain: f64, x0: &DVector<f64>) -> Result<IdentifierState> {
    validate_weights(gamma, psi.len())?;
    if !(adaptation_rate > 0.0) || !adaptation_rate.is_finite() {
        return Err(Error::InvalidArgument(format!("adaptation rate must be positive, got {adaptation_rate}")));
    }
    if !(gain > 0.0) || !gain.is_finite() {
        return Err(Error::InvalidArgument(format!("gain must be positive, got {gain}")));
    }
    if x0.len() != psi.dims().0 {
        return Err(dim_err("init_identifier x0", psi.dims().0, x0.len()));
    }
    let vertices = psi.vertices().iter().map(|v| VertexEstimate { psi_hat: v.clone(), x_hat: x0.clone() }).collect();
    Ok(IdentifierState { vertices, gamma: gamma.to_vec(), adaptation_rate, gain, psi: psi.clone(), s0_diam: psi.diam(), time: 0.0 })
}

/// `δ = sqrt(1/Γ) · diam(S(t₀))`.
pub fn delta_bound(s0_diam: f64, adaptation_rate: f64) -> Result<f64> {
    if !(adaptation_rate > 0.0) {
        return Err(Error::InvalidArgument(format!("adaptation rate must be positive, got {adaptation_rate}")));
    }
    Ok((1.0 / adaptation_rate).sqrt() * s0_diam)
}

/// Time derivative of one vertex estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexRates {
    pub d_psi: LumpedParams,
    pub d_x_hat: DVector<f64>,
}

impl IdentifierState {
    pub fn q(&self) -> usize {
        self.vertices.len()
    }

    pub fn n(&self) -> usize {
        self.vertices[0].x_hat.len()
    }

    /// Combined estimate `(Θ̂, x̂) = Σ γ_i (ψ̂_i, x̂_i)`.
    pub fn combined_estimate(&self) -> (LumpedParams, DVector<f64>) {
        combine(&self.vertices, &self.gamma)
    }

    /// `S(t) = co{ψ̂_i(t)}`.
    pub fn model_set(&self) -> ParamPolytope {
        ParamPolytope::new(self.vertices.iter().map(|v| v.psi_hat.clone()).collect()).expect("vertex estimates share dimensions")
    }

    /// `diam(S(t))`.
    pub fn current_diam(&self) -> f64 {
        self.model_set().diam()
    }

    /// Tube radius of the current segment.
    pub fn delta(&self) -> f64 {
        delta_bound(self.s0_diam, self.adaptation_rate).expect("rate validated at construction")
    }

    /// Starts a new segment: freezes `S(t₀)` and resets every `x̂_i` to `x0`.
    pub fn begin_segment(&mut self, x0: &DVector<f64>) {
        for v in &mut self.vertices {
            v.x_hat = x0.clone();
        }
        self.s0_diam = self.current_diam();
    }

    /// Per-vertex rates for measured state `x`, applied input `u` and
    /// per-vertex controls `uhat`.
    pub fn rates(&self, sys: &SystemModel, t: f64, x: &DVector<f64>, u: &DVector<f64>, uhat: &[DVector<f64>]) -> Result<Vec<VertexRates>> {
        vertex_rates(sys, &self.vertices, &self.gamma, self.adaptation_rate, t, x, u, uhat)
    }

    /// Rate of the combined estimate computed directly from `(Θ̂, x̂)`,
    /// i.e. `Γ (x − x̂) Xᵀ` (before projection).
    pub fn combined_param_rate(&self, sys: &SystemModel, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> Result<LumpedParams> {
        let (_, xh) = self.combined_estimate();
        let phi = sys.phi(t, x)?;
        let e = x - xh;
        Ok(LumpedParams { theta_x: &e * phi.transpose() * self.adaptation_rate, theta_u: &e * u.transpose() * self.adaptation_rate })
    }

    /// Per-vertex Lyapunov values `½‖x − x̂_i‖² + ½ ‖ψ̂_i − Θ‖²_F / Γ` for a given
    /// reference parameter `theta`.
    pub fn lyapunov(&self, x: &DVector<f64>, theta: &LumpedParams) -> Vec<f64> {
        self.vertices
            .iter()
            .map(|v| {
                let d = v.psi_hat.distance(theta);
                0.5 * (x - &v.x_hat).norm_squared() + 0.5 * d * d / self.adaptation_rate
            })
            .collect()
    }

    /// Length of [`IdentifierState::pack`].
    pub fn packed_len(&self) -> usize {
        let (n, p, m) = self.vertices[0].psi_hat.dims();
        self.q() * (n + n * (p + m))
    }

    /// Flattens all `(x̂_i, ψ̂_i)` into one vector (for joint integration).
    pub fn pack(&self) -> DVector<f64> {
        let mut out = Vec::with_capacity(self.packed_len());
        for v in &self.vertices {
            out.extend_from_slice(v.x_hat.as_slice());
            out.extend_from_slice(v.psi_hat.flatten().as_slice());
        }
        DVector::from_vec(out)
    }

    /// Inverse of [`IdentifierState::pack`] into existing dimensions.
    pub fn unpack_into(&mut self, y: &[f64]) -> Result<()> {
        let (n, p, m) = self.vertices[0].psi_hat.dims();
        let stride = n + n * (p + m);
        if y.len() != self.q() * stride {
            return Err(dim_err("IdentifierState::unpack", self.q() * stride, y.len()));
        }
        for (i, v) in self.vertices.iter_mut().enumerate() {
            let chunk = &y[i * stride..(i + 1) * stride];
            v.x_hat = DVector::from_column_slice(&chunk[..n]);
            v.psi_hat = LumpedParams::unflatten(n, p, m, &chunk[n..])?;
        }
        Ok(())
    }

    /// Vertex estimates decoded from a packed vector (no mutation).
    pub fn decode(&self, y: &[f64]) -> Result<Vec<VertexEstimate>> {
        let mut tmp = self.clone();
        tmp.unpack_into(y)?;
        Ok(tmp.vertices)
    }

    /// Projects every `ψ̂_i` onto Ψ.
    pub fn project_vertices(&mut self) -> Result<()> {
        for v in &mut self.vertices {
            v.psi_hat = self.psi.project(&v.psi_hat)?;
        }
        Ok(())
    }
}

/// `(Σ γ_i ψ̂_i, Σ γ_i x̂_i)`.
pub fn combine(vertices: &[VertexEstimate], gamma: &[f64]) -> (LumpedParams, DVector<f64>) {
    let (n, p, m) = vertices[0].psi_hat.dims();
    let mut th = LumpedParams::zeros(n, p, m);
    let mut xh = DVector::zeros(n);
    for (v, g) in vertices.iter().zip(gamma) {
        th = th.axpy(*g, &v.psi_hat);
        xh.axpy(*g, &v.x_hat, 1.0);
    }
    (th, xh)
}

/// Checks that the combined input block is usable by the controller.
pub fn check_input_block(theta_u: &DMatrix<f64>) -> Result<()> {
    let cond = condition_number(theta_u);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularInput { cond });
    }
    Ok(())
}

/// Vertex-estimator rates for explicit vertex values.
#[allow(clippy::too_many_arguments)]
pub fn vertex_rates(
    sys: &SystemModel,
    vertices: &[VertexEstimate],
    gamma: &[f64],
    adaptation_rate: f64,
    t: f64,
    x: &DVector<f64>,
    u: &DVector<f64>,
    uhat: &[DVector<f64>],
) -> Result<Vec<VertexRates>> {
    if uhat.len() != vertices.len() {
        return Err(dim_err("vertex controls", vertices.len(), uhat.len()));
    }
    if x.len() != sys.n || u.len() != sys.m {
        return Err(dim_err("identifier measurement", format!("({}, {})", sys.n, sys.m), format!("({}, {})", x.len(), u.len())));
    }
    let phi = sys.phi(t, x)?;
    let (theta_hat, _) = combine(vertices, gamma);
    let mut out = Vec::with_capacity(vertices.len());
    for (v, uh) in vertices.iter().zip(uhat) {
        if uh.len() != sys.m {
            return Err(dim_err("vertex control", sys.m, uh.len()));
        }
        let xt = x - &v.x_hat;
        let ut = u - uh;
        let mut dx = &v.psi_hat.theta_x * &phi;
        dx.gemv(1.0, &v.psi_hat.theta_u, u, 1.0);
        dx.gemv(-1.0, &theta_hat.theta_u, &ut, 1.0);
        let d_psi = LumpedParams { theta_x: &xt * phi.transpose() * adaptation_rate, theta_u: &xt * u.transpose() * adaptation_rate };
        out.push(VertexRates { d_psi, d_x_hat: dx });
    }
    Ok(out)
}

/// Packs vertex rates in the layout of [`IdentifierState::pack`].
pub fn pack_rates(rates: &[VertexRates]) -> DVector<f64> {
    let mut out = Vec::new();
    for r in rates {
        out.extend_from_slice(r.d_x_hat.as_slice());
        out.extend_from_slice(r.d_psi.flatten().as_slice());
    }
    DVector::from_vec(out)
}

/// Advances the identifier by `dt` with measurement, applied input and
/// per-vertex controls held constant over the step (RK4), then projects
/// every vertex parameter onto Ψ.
pub fn identifier_step(
    id: &IdentifierState,
    sys: &SystemModel,
    x_meas: &DVector<f64>,
    u_applied: &DVector<f64>,
    uhat: &[DVector<f64>],
    dt: f64,
) -> Result<IdentifierState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let (theta_hat, _) = id.combined_estimate();
    check_input_block(&theta_hat.theta_u)?;
    let template = id.clone();
    let mut f = |t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        let verts = template.decode(y.as_slice())?;
        let r = vertex_rates(sys, &verts, &template.gamma, template.adaptation_rate, t, x_meas, u_applied, uhat)?;
        Ok(pack_rates(&r))
    };
    let y = rk4_step(&mut f, id.time, &id.pack(), dt)?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("identifier state"));
    }
    let mut next = id.clone();
    next.unpack_into(y.as_slice())?;
    next.project_vertices()?;
    next.time = id.time + dt;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::BoxBounds;
    use crate::dynamics::{attitude_params, QuadrotorConstants, Regressor};
    use crate::param_space::MEMBERSHIP_TOL;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn quad_psi() -> ParamPolytope {
        let k = QuadrotorConstants::default();
        ParamPolytope::new(vec![
            attitude_params(&k, -5e-3, 2.25e-3),
            attitude_params(&k, 0.0, 2.25e-3),
            attitude_params(&k, 0.0, 7.75e-3),
            attitude_params(&k, -5e-3, 7.75e-3),
        ])
        .unwrap()
    }

    fn scalar_sys() -> SystemModel {
        SystemModel::new("scalar", 1, 1, Regressor::Linear { n: 1 }, BoxBounds::unbounded(1), BoxBounds::unbounded(1)).unwrap()
    }

    fn sp(x: f64, u: f64) -> LumpedParams {
        LumpedParams::new(DMatrix::from_element(1, 1, x), DMatrix::from_element(1, 1, u)).unwrap()
    }

    #[test]
    fn init_examples() {
        let psi = quad_psi();
        let id = init_identifier(&psi, &uniform_weights(4), 1.0, 2.0, &dv(&[0.0; 3])).unwrap();
        assert_eq!(id.q(), 4);
        for (v, p) in id.vertices.iter().zip(psi.vertices()) {
            assert_eq!(&v.psi_hat, p);
            assert_eq!(v.x_hat, dv(&[0.0; 3]));
        }
        assert!((id.s0_diam - 7.4330e-3).abs() < 5e-8);
        let one = ParamPolytope::new(vec![psi.vertices()[0].clone()]).unwrap();
        let id1 = init_identifier(&one, &[1.0], 1.0, 2.0, &dv(&[0.0; 3])).unwrap();
        assert_eq!(id1.s0_diam, 0.0);
        assert_eq!(id1.current_diam(), 0.0);
        assert!(init_identifier(&psi, &[0.3; 4], 1.0, 2.0, &dv(&[0.0; 3])).is_err());
        assert!(init_identifier(&psi, &uniform_weights(4), 0.0, 2.0, &dv(&[0.0; 3])).is_err());
        assert!(init_identifier(&psi, &uniform_weights(4), 1.0, -1.0, &dv(&[0.0; 3])).is_err());
    }

    #[test]
    fn combined_estimate_examples() {
        let psi = quad_psi();
        let id = init_identifier(&psi, &uniform_weights(4), 1.0, 2.0, &dv(&[0.1, 0.2, 0.3])).unwrap();
        let (th, xh) = id.combined_estimate();
        assert!((th.theta_x[(0, 1)] + 2.5e-3).abs() < 1e-18);
        assert!((th.theta_x[(1, 3)] - 5.0e-3).abs() < 1e-18);
        assert_eq!(xh, dv(&[0.1, 0.2, 0.3]));
        let id = init_identifier(&psi, &[1.0, 0.0, 0.0, 0.0], 1.0, 2.0, &dv(&[0.0; 3])).unwrap();
        assert_eq!(id.combined_estimate().0, psi.vertices()[0]);
        assert_eq!(id.model_set(), psi);
    }

    #[test]
    fn delta_examples() {
        let d = quad_psi().diam();
        assert!((delta_bound(d, 1.0).unwrap() - 7.4330e-3).abs() < 5e-8);
        assert!((delta_bound(d, 100.0).unwrap() - 7.4330e-4).abs() < 5e-9);
        assert_eq!(delta_bound(0.0, 3.0).unwrap(), 0.0);
        assert!(delta_bound(1.0, 0.0).is_err());
    }

    #[test]
    fn zero_error_leaves_parameters() {
        let psi = quad_psi();
        let sys = SystemModel::new(
            "att",
            3,
            3,
            Regressor::QuadrotorAttitude { omega: crate::dynamics::OmegaSignal::Constant { value: 100.0 } },
            BoxBounds::unbounded(3),
            BoxBounds::unbounded(3),
        )
        .unwrap();
        let x = dv(&[0.1, -0.2, 0.05]);
        let id = init_identifier(&psi, &uniform_weights(4), 1.0, 2.0, &x).unwrap();
        let u = dv(&[0.0; 3]);
        let uhat = vec![u.clone(); 4];
        let r = id.rates(&sys, 0.0, &x, &u, &uhat).unwrap();
        assert!(r.iter().all(|v| v.d_psi.frobenius_norm() == 0.0));
    }

    #[test]
    fn scalar_step_matches_fine_oracle() {
        // one vertex, ψ̂ = 0, measured x = 1, u = 0 held over the step
        let sys = scalar_sys();
        let big = ParamPolytope::new(vec![sp(-10.0, 1.0), sp(10.0, 1.0)]).unwrap();
        let mut id = init_identifier(&big, &[0.5, 0.5], 2.0, 1.0, &dv(&[0.0])).unwrap();
        id.vertices.truncate(1);
        id.gamma = vec![1.0];
        id.vertices[0].psi_hat = sp(0.0, 1.0);
        let x = dv(&[1.0]);
        let u = dv(&[0.0]);
        let uhat = vec![u.clone()];
        let dt = 0.01;
        let next = identifier_step(&id, &sys, &x, &u, &uhat, dt).unwrap();
        let moved = next.vertices[0].psi_hat.theta_x[(0, 0)];
        // Euler estimate: Γ·x̃·x·dt = 2·1·1·0.01
        assert!(moved > 0.0);
        assert!((moved - 0.02).abs() < 1e-5);
        // 10×-finer Euler oracle of the coupled (x̂, ψ̂) system
        let (mut xh, mut th) = (0.0f64, 0.0f64);
        let h = dt / 10.0;
        for _ in 0..10 {
            for _ in 0..100 {
                let hh = h / 100.0;
                let dxh = th * 1.0;
                let dth = 2.0 * (1.0 - xh) * 1.0;
                xh += hh * dxh;
                th += hh * dth;
            }
        }
        assert!((moved - th).abs() < 1e-8, "rk4 {moved} vs oracle {th}");
    }

    #[test]
    fn step_stays_in_psi() {
        let sys = scalar_sys();
        let psi = ParamPolytope::new(vec![sp(-1.0, 1.0), sp(1.0, 1.0)]).unwrap();
        let id = init_identifier(&psi, &[0.5, 0.5], 1e4, 1.0, &dv(&[0.0])).unwrap();
        let x = dv(&[5.0]);
        let u = dv(&[0.0]);
        let next = identifier_step(&id, &sys, &x, &u, &[u.clone(), u.clone()], 0.1).unwrap();
        for v in &next.vertices {
            assert!(psi.contains(&v.psi_hat, MEMBERSHIP_TOL).unwrap());
        }
        assert!((next.time - 0.1).abs() < 1e-15);
    }

    #[test]
    fn singular_combined_input_rejected() {
        let sys = scalar_sys();
        let psi = ParamPolytope::new(vec![sp(0.0, -1.0), sp(0.0, 1.0)]).unwrap();
        let id = init_identifier(&psi, &[0.5, 0.5], 1.0, 1.0, &dv(&[0.0])).unwrap();
        let u = dv(&[0.0]);
        assert!(matches!(identifier_step(&id, &sys, &dv(&[1.0]), &u, &[u.clone(), u.clone()], 0.01), Err(Error::SingularInput { .. })));
    }

    #[test]
    fn pack_round_trip() {
        let psi = quad_psi();
        let id = init_identifier(&psi, &uniform_weights(4), 1.0, 2.0, &dv(&[0.1, 0.2, 0.3])).unwrap();
        let y = id.pack();
        assert_eq!(y.len(), id.packed_len());
        let mut other = id.clone();
        other.vertices[2].x_hat[0] = 9.0;
        other.unpack_into(y.as_slice()).unwrap();
        assert_eq!(other, id);
    }
}
