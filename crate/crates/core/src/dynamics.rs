//! Linearly parameterized system models `ẋ = θx φ(t, x) + θu u`,
//! fixed-step RK4 integration, trajectories, and the quadrotor instances.

use crate::bounds::BoxBounds;
use crate::error::{dim_err, Error, Result};
use crate::numfmt::sig17;
use crate::param_space::LumpedParams;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

/// Default blow-up bound on the state norm during integration.
pub const DEFAULT_BLOWUP: f64 = 1e8;

/// Time-varying net rotor spin rate Ω(t) (rad/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaSignal {
    /// Ω(t) = value.
    Constant { value: f64 },
    /// Ω(t) = mean + amplitude · sin(2π f t).
    Sinusoid { mean: f64, amplitude: f64, frequency_hz: f64 },
}

impl OmegaSignal {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            OmegaSignal::Constant { value } => *value,
            OmegaSignal::Sinusoid { mean, amplitude, frequency_hz } => {
                mean + amplitude * (2.0 * std::f64::consts::PI * frequency_hz * t).sin()
            }
        }
    }

    /// Time average of the signal.
    pub fn mean(&self) -> f64 {
        match self {
            OmegaSignal::Constant { value } => *value,
            OmegaSignal::Sinusoid { mean, .. } => *mean,
        }
    }

    /// Upper bound on |Ω(t)|.
    pub fn bound(&self) -> f64 {
        match self {
            OmegaSignal::Constant { value } => value.abs(),
            OmegaSignal::Sinusoid { mean, amplitude, .. } => mean.abs() + amplitude.abs(),
        }
    }
}

/// Closure type for user-supplied regressors.
pub type RegressorFn = Arc<dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync>;

/// The known feature map φ(t, x).
#[derive(Clone)]
pub enum Regressor {
    /// φ(x) = x.
    Linear { n: usize },
    /// φ = [r2 r3, r2 Ω, r1 r3, r1 Ω, r1 r2] on body rates r.
    QuadrotorAttitude { omega: OmegaSignal },
    /// Arbitrary map with output dimension `p`.
    Custom { p: usize, f: RegressorFn },
}

impl fmt::Debug for Regressor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regressor::Linear { n } => write!(f, "Linear {{ n: {n} }}"),
            Regressor::QuadrotorAttitude { omega } => write!(f, "QuadrotorAttitude {{ omega: {omega:?} }}"),
            Regressor::Custom { p, .. } => write!(f, "Custom {{ p: {p} }}"),
        }
    }
}

impl Regressor {
    pub fn dim(&self) -> usize {
        match self {
            Regressor::Linear { n } => *n,
            Regressor::QuadrotorAttitude { .. } => 5,
            Regressor::Custom { p, .. } => *p,
        }
    }

    pub fn eval(&self, t: f64, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Regressor::Linear { .. } => x.clone(),
            Regressor::QuadrotorAttitude { omega } => {
                let w = omega.eval(t);
                let (r1, r2, r3) = (x[0], x[1], x[2]);
                DVector::from_vec(vec![r2 * r3, r2 * w, r1 * r3, r1 * w, r1 * r2])
            }
            Regressor::Custom { f, .. } => f(t, x),
        }
    }

    /// Jacobian ∂φ/∂x (p × n); central differences for custom maps.
    pub fn jacobian(&self, t: f64, x: &DVector<f64>) -> DMatrix<f64> {
        match self {
            Regressor::Linear { n } => DMatrix::identity(*n, *n),
            Regressor::QuadrotorAttitude { omega } => {
                let w = omega.eval(t);
                let (r1, r2, r3) = (x[0], x[1], x[2]);
                DMatrix::from_row_slice(
                    5,
                    3,
                    &[
                        0.0, r3, r2, //
                        0.0, w, 0.0, //
                        r3, 0.0, r1, //
                        w, 0.0, 0.0, //
                        r2, r1, 0.0,
                    ],
                )
            }
            Regressor::Custom { p, f } => {
                let n = x.len();
                let mut jac = DMatrix::zeros(*p, n);
                for j in 0..n {
                    let h = 1e-6 * (1.0 + x[j].abs());
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += h;
                    xm[j] -= h;
                    let col = (f(t, &xp) - f(t, &xm)) / (2.0 * h);
                    jac.set_column(j, &col);
                }
                jac
            }
        }
    }

    /// Serializable description, when the regressor is not a custom closure.
    pub fn spec(&self) -> Option<RegressorSpec> {
        match self {
            Regressor::Linear { n } => Some(RegressorSpec::Linear { n: *n }),
            Regressor::QuadrotorAttitude { omega } => Some(RegressorSpec::QuadrotorAttitude { omega: omega.clone() }),
            Regressor::Custom { .. } => None,
        }
    }
}

/// Serializable regressor selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegressorSpec {
    Linear { n: usize },
    QuadrotorAttitude { omega: OmegaSignal },
}

impl From<RegressorSpec> for Regressor {
    fn from(s: RegressorSpec) -> Self {
        match s {
            RegressorSpec::Linear { n } => Regressor::Linear { n },
            RegressorSpec::QuadrotorAttitude { omega } => Regressor::QuadrotorAttitude { omega },
        }
    }
}

/// Structure of a linearly parameterized system (parameters supplied separately).
#[derive(Debug, Clone)]
pub struct SystemModel {
    pub label: String,
    pub n: usize,
    pub m: usize,
    pub regressor: Regressor,
    pub state_box: BoxBounds,
    pub input_box: BoxBounds,
    pub blowup_bound: f64,
}

impl SystemModel {
    pub fn new(
        label: impl Into<String>,
        n: usize,
        m: usize,
        regressor: Regressor,
        state_box: BoxBounds,
        input_box: BoxBounds,
    ) -> Result<Self> {
        if n == 0 || m == 0 || regressor.dim() == 0 {
            return Err(Error::InvalidArgument("n, m, p must be at least 1".into()));
        }
        if state_box.dim() != n {
            return Err(dim_err("SystemModel state_box", n, state_box.dim()));
        }
        if input_box.dim() != m {
            return Err(dim_err("SystemModel input_box", m, input_box.dim()));
        }
        Ok(Self { label: label.into(), n, m, regressor, state_box, input_box, blowup_bound: DEFAULT_BLOWUP })
    }

    pub fn p(&self) -> usize {
        self.regressor.dim()
    }

    /// Checks that `theta` has dimensions (n, p, m).
    pub fn check_params(&self, theta: &LumpedParams) -> Result<()> {
        if theta.dims() != (self.n, self.p(), self.m) {
            return Err(dim_err("parameters vs system", format!("{:?}", (self.n, self.p(), self.m)), format!("{:?}", theta.dims())));
        }
        Ok(())
    }

    /// Regressor value with a finiteness check.
    pub fn phi(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let v = self.regressor.eval(t, x);
        if v.len() != self.p() {
            return Err(dim_err("regressor output", self.p(), v.len()));
        }
        if v.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("regressor"));
        }
        Ok(v)
    }

    /// `θx φ(t, x) + θu u` without dimension checks (hot path).
    pub(crate) fn rhs(&self, theta: &LumpedParams, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let phi = self.regressor.eval(t, x);
        let mut out = &theta.theta_x * phi;
        out.gemv(1.0, &theta.theta_u, u, 1.0);
        out
    }
}

/// Evaluates `ẋ = θx φ(t, x) + θu u`.
pub fn eval_dynamics(sys: &SystemModel, theta: &LumpedParams, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
    sys.check_params(theta)?;
    if x.len() != sys.n {
        return Err(dim_err("eval_dynamics state", sys.n, x.len()));
    }
    if u.len() != sys.m {
        return Err(dim_err("eval_dynamics input", sys.m, u.len()));
    }
    let phi = sys.phi(t, x)?;
    let mut out = &theta.theta_x * phi;
    out.gemv(1.0, &theta.theta_u, u, 1.0);
    Ok(out)
}

/// One classical Runge–Kutta step of `ẏ = f(t, y)`.
pub fn rk4_step<F>(f: &mut F, t: f64, y: &DVector<f64>, dt: f64) -> Result<DVector<f64>>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * dt, &(y + &k1 * (0.5 * dt)))?;
    let k3 = f(t + 0.5 * dt, &(y + &k2 * (0.5 * dt)))?;
    let k4 = f(t + dt, &(y + &k3 * dt))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Uniformly sampled state/input trajectory (one input per sample).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory has at least one sample")
    }

    /// CSV text with header `t,x1..xn,u1..um` and 17-significant-digit values.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, |s| s.len());
        let m = self.inputs.first().map_or(0, |u| u.len());
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        for i in 1..=m {
            out.push_str(&format!(",u{i}"));
        }
        out.push('\n');
        for k in 0..self.times.len() {
            out.push_str(&sig17(self.times[k]));
            for v in self.states[k].iter() {
                out.push(',');
                out.push_str(&sig17(*v));
            }
            if let Some(u) = self.inputs.get(k) {
                for v in u.iter() {
                    out.push(',');
                    out.push_str(&sig17(*v));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// Number of whole steps of size `dt` in `total`, requiring integrality to 1e-9.
pub fn step_count(total: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {dt}")));
    }
    if !(total >= 0.0) || !total.is_finite() {
        return Err(Error::InvalidArgument(format!("horizon must be non-negative, got {total}")));
    }
    let ratio = total / dt;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-9 * steps.max(1.0) {
        return Err(Error::InvalidArgument(format!("horizon {total} is not a multiple of dt {dt}")));
    }
    Ok(steps as usize)
}

/// Fixed-step RK4 rollout of the system under `control(t)`; the input is
/// evaluated at each RK stage time.
pub fn integrate<C>(sys: &SystemModel, theta: &LumpedParams, x0: &DVector<f64>, mut control: C, dt: f64, horizon: f64) -> Result<Trajectory>
where
    C: FnMut(f64) -> DVector<f64>,
{
    sys.check_params(theta)?;
    if x0.len() != sys.n {
        return Err(dim_err("integrate x0", sys.n, x0.len()));
    }
    let steps = step_count(horizon, dt)?;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut inputs = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    for k in 0..=steps {
        let t = k as f64 * dt;
        let u = control(t);
        if u.len() != sys.m {
            return Err(dim_err("integrate control", sys.m, u.len()));
        }
        times.push(t);
        states.push(x.clone());
        inputs.push(u);
        if k == steps {
            break;
        }
        let mut f = |s: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
            let u = control(s);
            Ok(sys.rhs(theta, s, y, &u))
        };
        x = rk4_step(&mut f, t, &x, dt)?;
        let norm = x.norm();
        if !norm.is_finite() || norm > sys.blowup_bound {
            return Err(Error::BlowUp { t: t + dt, norm });
        }
    }
    Ok(Trajectory { times, states, inputs })
}

/// Physical constants of the quadrotor (defaults are the published values).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadrotorConstants {
    pub mass: f64,
    pub ixx: f64,
    pub iyy: f64,
    pub izz: f64,
    pub arm: f64,
    pub g: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

impl Default for QuadrotorConstants {
    fn default() -> Self {
        Self {
            mass: 0.61,
            ixx: 1.54e-2,
            iyy: 1.54e-2,
            izz: 3.09e-2,
            arm: 0.305,
            g: 9.81,
            a1: -1.0065,
            a2: 1.0065,
            a3: 0.0,
            b1: 19.8052,
            b2: 19.8052,
            b3: 32.3625,
        }
    }
}

impl QuadrotorConstants {
    pub fn is_finite(&self) -> bool {
        [self.mass, self.ixx, self.iyy, self.izz, self.arm, self.g, self.a1, self.a2, self.a3, self.b1, self.b2, self.b3]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Position of c1 in the attitude θx block.
pub const ATT_C1: (usize, usize) = (0, 1);
/// Position of c2 in the attitude θx block.
pub const ATT_C2: (usize, usize) = (1, 3);

/// Attitude-rate parameters for given (c1, c2).
pub fn attitude_params(k: &QuadrotorConstants, c1: f64, c2: f64) -> LumpedParams {
    let mut tx = DMatrix::zeros(3, 5);
    tx[(0, 0)] = k.a1;
    tx[ATT_C1] = c1;
    tx[(1, 2)] = k.a2;
    tx[ATT_C2] = c2;
    tx[(2, 4)] = k.a3;
    let tu = DMatrix::from_diagonal(&DVector::from_vec(vec![k.b1, k.b2, k.b3]));
    LumpedParams { theta_x: tx, theta_u: tu }
}

/// Extracts (c1, c2) from attitude parameters.
pub fn attitude_uncertain(theta: &LumpedParams) -> (f64, f64) {
    (theta.theta_x[ATT_C1], theta.theta_x[ATT_C2])
}

/// Three-state body-rate model of the quadrotor with its true parameters.
pub fn quadrotor_attitude_model(
    consts: &QuadrotorConstants,
    omega: OmegaSignal,
    c1: f64,
    c2: f64,
    rate_limit: f64,
    torque_limit: f64,
) -> Result<(SystemModel, LumpedParams)> {
    if !consts.is_finite() || !omega.bound().is_finite() {
        return Err(Error::NonFinite("quadrotor constants"));
    }
    let sys = SystemModel::new(
        "quadrotor-attitude",
        3,
        3,
        Regressor::QuadrotorAttitude { omega },
        BoxBounds::symmetric(&[rate_limit; 3])?,
        BoxBounds::symmetric(&[torque_limit; 3])?,
    )?;
    Ok((sys, attitude_params(consts, c1, c2)))
}

/// State indices of the planar planning model.
pub mod planar {
    pub const PX: usize = 0;
    pub const PY: usize = 1;
    pub const VX: usize = 2;
    pub const VY: usize = 3;
    pub const ROLL: usize = 4;
    pub const PITCH: usize = 5;
    pub const R1: usize = 6;
    pub const R2: usize = 7;
}

/// Parameters of the eight-state planar planning model linearized about hover
/// with constant spin rate `omega`: ṗ = v, v̇x = g θ, v̇y = −g φ, φ̇ = r1,
/// θ̇ = r2, ṙ1 = c1 Ω r2 + b1 u1, ṙ2 = c2 Ω r1 + b2 u2.
pub fn planar_params(k: &QuadrotorConstants, omega: f64, c1: f64, c2: f64) -> LumpedParams {
    use planar::*;
    let mut tx = DMatrix::zeros(8, 8);
    tx[(PX, VX)] = 1.0;
    tx[(PY, VY)] = 1.0;
    tx[(VX, PITCH)] = k.g;
    tx[(VY, ROLL)] = -k.g;
    tx[(ROLL, R1)] = 1.0;
    tx[(PITCH, R2)] = 1.0;
    tx[(R1, R2)] = c1 * omega;
    tx[(R2, R1)] = c2 * omega;
    let mut tu = DMatrix::zeros(8, 2);
    tu[(R1, 0)] = k.b1;
    tu[(R2, 1)] = k.b2;
    LumpedParams { theta_x: tx, theta_u: tu }
}

/// Planar planning model with the given state and input limits.
pub fn quadrotor_planar_model(state_box: BoxBounds, input_box: BoxBounds) -> Result<SystemModel> {
    SystemModel::new("quadrotor-planar", 8, 2, Regressor::Linear { n: 8 }, state_box, input_box)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(theta_x: f64, theta_u: f64) -> (SystemModel, LumpedParams) {
        let sys = SystemModel::new("scalar", 1, 1, Regressor::Linear { n: 1 }, BoxBounds::unbounded(1), BoxBounds::unbounded(1)).unwrap();
        let th = LumpedParams::new(DMatrix::from_element(1, 1, theta_x), DMatrix::from_element(1, 1, theta_u)).unwrap();
        (sys, th)
    }

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn eval_examples() {
        let (sys, th) = scalar(2.0, 3.0);
        assert_eq!(eval_dynamics(&sys, &th, 0.0, &dv(&[1.0]), &dv(&[1.0])).unwrap()[0], 5.0);
        assert_eq!(eval_dynamics(&sys, &th, 0.0, &dv(&[0.0]), &dv(&[0.0])).unwrap()[0], 0.0);
        assert!(eval_dynamics(&sys, &th, 0.0, &dv(&[0.0, 1.0]), &dv(&[0.0])).is_err());

        let k = QuadrotorConstants::default();
        let (q, qt) = quadrotor_attitude_model(&k, OmegaSignal::Constant { value: 0.0 }, -2.5e-3, 5e-3, 10.0, 10.0).unwrap();
        let d = eval_dynamics(&q, &qt, 0.0, &dv(&[0.0; 3]), &dv(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(d[0], 19.8052);
        let d = eval_dynamics(&q, &qt, 0.0, &dv(&[0.0, 1.0, 1.0]), &dv(&[0.0; 3])).unwrap();
        assert_eq!(d[0], -1.0065);
    }

    #[test]
    fn non_finite_regressor_rejected() {
        let f: RegressorFn = Arc::new(|_t, x: &DVector<f64>| dv(&[1.0 / x[0]]));
        let sys = SystemModel::new("bad", 1, 1, Regressor::Custom { p: 1, f }, BoxBounds::unbounded(1), BoxBounds::unbounded(1)).unwrap();
        let th = LumpedParams::zeros(1, 1, 1);
        assert!(matches!(eval_dynamics(&sys, &th, 0.0, &dv(&[0.0]), &dv(&[0.0])), Err(Error::NonFinite(_))));
    }

    #[test]
    fn quadrotor_structure() {
        let k = QuadrotorConstants::default();
        assert_eq!((k.a1, k.a2, k.a3, k.b1, k.b2, k.b3), (-1.0065, 1.0065, 0.0, 19.8052, 19.8052, 32.3625));
        // derived coefficients agree with the inertia values to table precision
        assert!(((k.iyy - k.izz) / k.ixx - k.a1).abs() < 1e-4);
        assert!((k.arm / k.ixx - k.b1).abs() < 1e-3);
        assert!((1.0 / k.izz - k.b3).abs() < 1e-3);
        let th = attitude_params(&k, -1e-3, 4e-3);
        assert_eq!(attitude_uncertain(&th), (-1e-3, 4e-3));
        assert!(th.theta_u.determinant().abs() > 0.0);
        // only the documented entries are populated
        assert_eq!(th.theta_x.iter().filter(|v| **v != 0.0).count(), 4); // a3 = 0
    }

    #[test]
    fn attitude_jacobian_matches_differences() {
        let omega = OmegaSignal::Sinusoid { mean: 100.0, amplitude: 20.0, frequency_hz: 0.5 };
        let r = Regressor::QuadrotorAttitude { omega: omega.clone() };
        let f: RegressorFn = {
            let r = r.clone();
            Arc::new(move |t, x: &DVector<f64>| r.eval(t, x))
        };
        let c = Regressor::Custom { p: 5, f };
        let x = dv(&[0.3, -0.7, 1.1]);
        let diff = r.jacobian(0.37, &x) - c.jacobian(0.37, &x);
        assert!(diff.amax() < 1e-6);
    }

    #[test]
    fn integrate_exponential_decay() {
        let (sys, th) = scalar(-1.0, 0.0);
        let tr = integrate(&sys, &th, &dv(&[1.0]), |_| dv(&[0.0]), 0.01, 1.0).unwrap();
        assert_eq!(tr.len(), 101);
        assert!((tr.final_state()[0] - (-1.0f64).exp()).abs() < 1e-6);
        assert!((tr.times[100] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integrate_zero_horizon_and_errors() {
        let (sys, th) = scalar(-1.0, 0.0);
        let tr = integrate(&sys, &th, &dv(&[2.0]), |_| dv(&[0.0]), 0.01, 0.0).unwrap();
        assert_eq!(tr.states, vec![dv(&[2.0])]);
        assert!(integrate(&sys, &th, &dv(&[1.0]), |_| dv(&[0.0]), 0.3, 1.0).is_err());
        assert!(integrate(&sys, &th, &dv(&[1.0]), |_| dv(&[0.0]), 0.0, 1.0).is_err());
        let (sys, th) = scalar(50.0, 0.0);
        assert!(matches!(integrate(&sys, &th, &dv(&[1.0]), |_| dv(&[0.0]), 0.01, 1.0), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn rk4_order() {
        let (sys, th) = scalar(-1.0, 0.0);
        let err = |dt: f64| {
            let tr = integrate(&sys, &th, &dv(&[1.0]), |_| dv(&[0.0]), dt, 1.0).unwrap();
            (tr.final_state()[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio >= 14.0, "ratio {ratio}");
    }

    #[test]
    fn quadrotor_rest_is_equilibrium() {
        let k = QuadrotorConstants::default();
        let (q, qt) = quadrotor_attitude_model(&k, OmegaSignal::Constant { value: 200.0 }, -2.5e-3, 5e-3, 10.0, 10.0).unwrap();
        let tr = integrate(&q, &qt, &dv(&[0.0; 3]), |_| dv(&[0.0; 3]), 1e-3, 1.0).unwrap();
        assert!(tr.states.iter().all(|s| s.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn determinism_and_csv() {
        let k = QuadrotorConstants::default();
        let omega = OmegaSignal::Sinusoid { mean: 150.0, amplitude: 30.0, frequency_hz: 1.0 };
        let (q, qt) = quadrotor_attitude_model(&k, omega, -1e-3, 3e-3, 10.0, 10.0).unwrap();
        let ctl = |t: f64| dv(&[0.1 * t.sin(), 0.05 * t.cos(), -0.02]);
        let a = integrate(&q, &qt, &dv(&[0.1, 0.2, 0.0]), ctl, 1e-3, 0.5).unwrap();
        let b = integrate(&q, &qt, &dv(&[0.1, 0.2, 0.0]), ctl, 1e-3, 0.5).unwrap();
        assert_eq!(a, b);
        let csv = a.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x1,x2,x3,u1,u2,u3");
        let row: Vec<f64> = lines.nth(10).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(row[1].to_bits(), a.states[10][0].to_bits());
    }

    #[test]
    fn planar_model_matches_attitude_rows() {
        let k = QuadrotorConstants::default();
        let th = planar_params(&k, 200.0, -2e-3, 3e-3);
        let sys = quadrotor_planar_model(BoxBounds::unbounded(8), BoxBounds::unbounded(2)).unwrap();
        let x = dv(&[0.0, 0.0, 0.1, -0.2, 0.05, -0.03, 0.4, -0.6]);
        let u = dv(&[0.2, -0.1]);
        let d = eval_dynamics(&sys, &th, 0.0, &x, &u).unwrap();
        // rate rows coincide with the attitude model at r3 = 0
        let (q, qt) = quadrotor_attitude_model(&k, OmegaSignal::Constant { value: 200.0 }, -2e-3, 3e-3, 10.0, 10.0).unwrap();
        let da = eval_dynamics(&q, &qt, 0.0, &dv(&[0.4, -0.6, 0.0]), &dv(&[0.2, -0.1, 0.0])).unwrap();
        assert!((d[planar::R1] - da[0]).abs() < 1e-14);
        assert!((d[planar::R2] - da[1]).abs() < 1e-14);
        assert_eq!(d[planar::VX], k.g * -0.03);
        assert_eq!(d[planar::VY], -k.g * 0.05);
        assert_eq!(d[planar::PX], 0.1);
    }
}
