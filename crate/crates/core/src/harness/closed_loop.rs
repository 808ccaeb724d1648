//! Joint integration of true plant, vertex estimators and nominal reference
//! under the tube controller `u = ū + ν`.

use super::plant::TruePlant;
use crate::adaptive_id::{combine, pack_rates, vertex_rates, IdentifierState};
use crate::dynamics::{rk4_step, SystemModel};
use crate::error::{Error, Result};
use crate::param_space::LumpedParams;
use crate::tube_control::{nu, vertex_controls_for_law, ControlContext, VertexLaw};
use nalgebra::DVector;

/// Kinematic states driven by the controlled subsystem (e.g. attitude angles
/// and translational states driven by body rates): `(aux, x) ↦ d aux/dt`.
pub type AuxDynamics<'a> = &'a dyn Fn(&[f64], &DVector<f64>) -> Vec<f64>;

/// Closed-loop simulator state layout:
/// `[x (n) | plant aux (a) | identifier (packed) | x̄ (n) | reference aux (a)]`.
pub struct ClosedLoop<'a> {
    pub sys: &'a SystemModel,
    pub plant: &'a TruePlant,
    pub ctx: ControlContext<'a>,
    pub law: VertexLaw,
    aux_dim: usize,
    aux: Option<AuxDynamics<'a>>,
    scratch: IdentifierState,
}

/// Signals at one instant.
#[derive(Debug, Clone)]
pub struct LoopSignals {
    pub x: DVector<f64>,
    pub xbar: DVector<f64>,
    pub u: DVector<f64>,
    pub nu: DVector<f64>,
    pub theta_hat: LumpedParams,
    pub x_hat: DVector<f64>,
}

impl<'a> ClosedLoop<'a> {
    pub fn new(
        sys: &'a SystemModel,
        plant: &'a TruePlant,
        ctx: ControlContext<'a>,
        law: VertexLaw,
        identifier: &IdentifierState,
        aux: Option<(usize, AuxDynamics<'a>)>,
    ) -> Self {
        let (aux_dim, aux) = match aux {
            Some((d, f)) => (d, Some(f)),
            None => (0, None),
        };
        Self { sys, plant, ctx, law, aux_dim, aux, scratch: identifier.clone() }
    }

    fn id_range(&self) -> (usize, usize) {
        let start = self.sys.n + self.aux_dim;
        (start, start + self.scratch.packed_len())
    }

    /// Total length of the joint state.
    pub fn len(&self) -> usize {
        2 * (self.sys.n + self.aux_dim) + self.scratch.packed_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Builds the joint state.
    pub fn pack(&self, x: &[f64], aux: &[f64], id: &IdentifierState, xbar: &[f64], auxbar: &[f64]) -> DVector<f64> {
        let mut y = Vec::with_capacity(self.len());
        y.extend_from_slice(x);
        y.extend_from_slice(aux);
        y.extend_from_slice(id.pack().as_slice());
        y.extend_from_slice(xbar);
        y.extend_from_slice(auxbar);
        DVector::from_vec(y)
    }

    /// Plant part `(x, aux)`.
    pub fn plant_part<'y>(&self, y: &'y DVector<f64>) -> (&'y [f64], &'y [f64]) {
        let n = self.sys.n;
        (&y.as_slice()[..n], &y.as_slice()[n..n + self.aux_dim])
    }

    /// Reference part `(x̄, aux̄)`.
    pub fn reference_part<'y>(&self, y: &'y DVector<f64>) -> (&'y [f64], &'y [f64]) {
        let (_, end) = self.id_range();
        let n = self.sys.n;
        (&y.as_slice()[end..end + n], &y.as_slice()[end + n..])
    }

    /// Identifier decoded from a joint state.
    pub fn identifier(&self, y: &DVector<f64>, time: f64) -> Result<IdentifierState> {
        let (a, b) = self.id_range();
        let mut id = self.scratch.clone();
        id.unpack_into(&y.as_slice()[a..b])?;
        id.time = time;
        Ok(id)
    }

    /// Controller and estimator signals at `(t, y)` for nominal input `ū`.
    pub fn signals(&mut self, t: f64, y: &DVector<f64>, ubar: &DVector<f64>) -> Result<LoopSignals> {
        let n = self.sys.n;
        let (a, b) = self.id_range();
        self.scratch.unpack_into(&y.as_slice()[a..b])?;
        let x = DVector::from_column_slice(&y.as_slice()[..n]);
        let xbar = DVector::from_column_slice(&y.as_slice()[b..b + n]);
        let (theta_hat, x_hat) = combine(&self.scratch.vertices, &self.scratch.gamma);
        let v = nu(&self.ctx, t, &x, &xbar, ubar, &theta_hat)?;
        Ok(LoopSignals { u: ubar + &v, nu: v, x, xbar, theta_hat, x_hat })
    }

    fn rhs(&mut self, t: f64, y: &DVector<f64>, ubar: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.sys.n;
        let s = self.signals(t, y, ubar)?;
        let uhat = vertex_controls_for_law(self.law, &self.ctx, t, &s.x, &s.xbar, ubar, &s.u, &self.scratch.vertices, &self.scratch.gamma)?;
        let rates =
            vertex_rates(self.sys, &self.scratch.vertices, &self.scratch.gamma, self.scratch.adaptation_rate, t, &s.x, &s.u, &uhat)?;
        let dx = self.plant.derivative(self.sys, t, &s.x, &s.u);
        let dxbar = self.sys.rhs(&self.ctx.theta_bar, t, &s.xbar, ubar);
        let mut out = Vec::with_capacity(y.len());
        out.extend_from_slice(dx.as_slice());
        let (_, b) = self.id_range();
        if let Some(f) = self.aux {
            out.extend(f(&y.as_slice()[n..n + self.aux_dim], &s.x));
        }
        out.extend_from_slice(pack_rates(&rates).as_slice());
        out.extend_from_slice(dxbar.as_slice());
        if let Some(f) = self.aux {
            out.extend(f(&y.as_slice()[b + n..], &s.xbar));
        }
        Ok(DVector::from_vec(out))
    }

    /// One RK4 step of length `dt` followed by projection of every vertex
    /// parameter onto Ψ. `ubar(t)` is evaluated at each stage time.
    pub fn step<U>(&mut self, t: f64, y: &DVector<f64>, dt: f64, ubar: U) -> Result<DVector<f64>>
    where
        U: Fn(f64) -> DVector<f64>,
    {
        let mut f = |s: f64, z: &DVector<f64>| -> Result<DVector<f64>> { self.rhs(s, z, &ubar(s)) };
        let mut next = rk4_step(&mut f, t, y, dt)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { t: t + dt, norm: f64::INFINITY });
        }
        let norm = next.rows(0, self.sys.n).norm();
        if norm > self.sys.blowup_bound {
            return Err(Error::BlowUp { t: t + dt, norm });
        }
        let (a, b) = self.id_range();
        self.scratch.unpack_into(&next.as_slice()[a..b])?;
        self.scratch.project_vertices()?;
        next.rows_mut(a, b - a).copy_from(&self.scratch.pack());
        Ok(next)
    }
}
