//! Parameter matrices and vertex-represented parameter polytopes.
//!
//! A [`LumpedParams`] value pairs the drift block `theta_x` (n × p) with the
//! input block `theta_u` (n × m). A [`ParamPolytope`] is the convex hull of a
//! finite, ordered list of such matrices and supports diameter, membership,
//! Euclidean (Frobenius) projection and convex combination.

use crate::error::{dim_err, Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Default Frobenius tolerance for membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Maximum number of varying coordinates for which the box fast path is detected.
const MAX_BOX_DIM: usize = 24;

/// Parameter matrix `Θ = [θx, θu]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LumpedParams {
    pub theta_x: DMatrix<f64>,
    pub theta_u: DMatrix<f64>,
}

impl LumpedParams {
    /// Builds a parameter matrix; both blocks must have the same row count.
    pub fn new(theta_x: DMatrix<f64>, theta_u: DMatrix<f64>) -> Result<Self> {
        if theta_x.nrows() != theta_u.nrows() {
            return Err(dim_err("LumpedParams rows", theta_x.nrows(), theta_u.nrows()));
        }
        if theta_x.nrows() == 0 || theta_x.ncols() == 0 || theta_u.ncols() == 0 {
            return Err(Error::InvalidArgument("parameter blocks must be non-empty".into()));
        }
        Ok(Self { theta_x, theta_u })
    }

    /// All-zero parameters with dimensions (n, p, m).
    pub fn zeros(n: usize, p: usize, m: usize) -> Self {
        Self { theta_x: DMatrix::zeros(n, p), theta_u: DMatrix::zeros(n, m) }
    }

    /// Builds from row-major nested rows.
    pub fn from_rows(theta_x: &[Vec<f64>], theta_u: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(theta_x)?, matrix_from_rows(theta_u)?)
    }

    pub fn n(&self) -> usize {
        self.theta_x.nrows()
    }

    pub fn p(&self) -> usize {
        self.theta_x.ncols()
    }

    pub fn m(&self) -> usize {
        self.theta_u.ncols()
    }

    /// `(n, p, m)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n(), self.p(), self.m())
    }

    /// Flattens both blocks (column-major, θx first) into one vector.
    pub fn flatten(&self) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.theta_x.len() + self.theta_u.len());
        v.extend_from_slice(self.theta_x.as_slice());
        v.extend_from_slice(self.theta_u.as_slice());
        DVector::from_vec(v)
    }

    /// Inverse of [`LumpedParams::flatten`].
    pub fn unflatten(n: usize, p: usize, m: usize, v: &[f64]) -> Result<Self> {
        if v.len() != n * (p + m) {
            return Err(dim_err("LumpedParams::unflatten", n * (p + m), v.len()));
        }
        Ok(Self { theta_x: DMatrix::from_column_slice(n, p, &v[..n * p]), theta_u: DMatrix::from_column_slice(n, m, &v[n * p..]) })
    }

    /// Frobenius norm of `[θx, θu]`.
    pub fn frobenius_norm(&self) -> f64 {
        (self.theta_x.norm_squared() + self.theta_u.norm_squared()).sqrt()
    }

    /// Frobenius distance to `other` (dimensions must agree).
    pub fn distance(&self, other: &Self) -> f64 {
        ((&self.theta_x - &other.theta_x).norm_squared() + (&self.theta_u - &other.theta_u).norm_squared()).sqrt()
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Self) -> Self {
        Self { theta_x: &self.theta_x + &other.theta_x * alpha, theta_u: &self.theta_u + &other.theta_u * alpha }
    }

    /// `alpha * self`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self { theta_x: &self.theta_x * alpha, theta_u: &self.theta_u * alpha }
    }

    pub fn is_finite(&self) -> bool {
        self.theta_x.iter().chain(self.theta_u.iter()).all(|v| v.is_finite())
    }

    pub(crate) fn check_same_dims(&self, other: &Self, context: &'static str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(dim_err(context, format!("{:?}", self.dims()), format!("{:?}", other.dims())));
        }
        Ok(())
    }
}

/// Converts row-major nested rows into a dense matrix.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::InvalidArgument("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

/// Converts a dense matrix to row-major nested rows.
pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowMajor {
    theta_x: Vec<Vec<f64>>,
    theta_u: Vec<Vec<f64>>,
}

impl Serialize for LumpedParams {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RowMajor { theta_x: matrix_to_rows(&self.theta_x), theta_u: matrix_to_rows(&self.theta_u) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LumpedParams {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = RowMajor::deserialize(d)?;
        LumpedParams::from_rows(&r.theta_x, &r.theta_u).map_err(serde::de::Error::custom)
    }
}

/// Axis-aligned box in flattened parameter coordinates.
#[derive(Debug, Clone, PartialEq)]
struct FlatBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// Convex hull of an ordered, non-empty list of parameter matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPolytope {
    vertices: Vec<LumpedParams>,
    flat: Vec<DVector<f64>>,
    as_box: Option<FlatBox>,
}

impl Serialize for ParamPolytope {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.vertices.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ParamPolytope {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<LumpedParams>::deserialize(d)?;
        ParamPolytope::new(v).map_err(serde::de::Error::custom)
    }
}

impl ParamPolytope {
    /// Builds a polytope; vertices must be non-empty, finite and share dimensions.
    pub fn new(vertices: Vec<LumpedParams>) -> Result<Self> {
        let first = vertices.first().ok_or_else(|| Error::InvalidArgument("polytope needs at least one vertex".into()))?;
        for v in &vertices {
            first.check_same_dims(v, "ParamPolytope vertices")?;
            if !v.is_finite() {
                return Err(Error::NonFinite("polytope vertex"));
            }
        }
        let flat: Vec<DVector<f64>> = vertices.iter().map(LumpedParams::flatten).collect();
        let as_box = detect_box(&flat);
        Ok(Self { vertices, flat, as_box })
    }

    pub fn vertices(&self) -> &[LumpedParams] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.vertices[0].dims()
    }

    /// True when the vertex list enumerates every corner of an axis-aligned box.
    pub fn is_axis_aligned_box(&self) -> bool {
        self.as_box.is_some()
    }

    /// Largest Frobenius distance between two points of the hull (attained at vertices).
    pub fn diam(&self) -> f64 {
        let mut best = 0.0_f64;
        for i in 0..self.flat.len() {
            for j in (i + 1)..self.flat.len() {
                best = best.max((&self.flat[i] - &self.flat[j]).norm());
            }
        }
        best
    }

    /// Uniform average of the vertices.
    pub fn centroid(&self) -> LumpedParams {
        let q = self.vertices.len() as f64;
        let w = vec![1.0 / q; self.vertices.len()];
        self.convex_combine(&w).expect("uniform weights are valid")
    }

    /// Whether `m` lies within Frobenius distance `tol` of the hull.
    pub fn contains(&self, m: &LumpedParams, tol: f64) -> Result<bool> {
        self.vertices[0].check_same_dims(m, "ParamPolytope::contains")?;
        let (_, dist) = self.project_flat(&m.flatten());
        Ok(dist <= tol)
    }

    /// Frobenius distance from `m` to the hull.
    pub fn distance(&self, m: &LumpedParams) -> Result<f64> {
        self.vertices[0].check_same_dims(m, "ParamPolytope::distance")?;
        Ok(self.project_flat(&m.flatten()).1)
    }

    /// Frobenius-nearest point of the hull to `m`.
    ///
    /// Returns `m` unchanged when it already lies in the hull.
    pub fn project(&self, m: &LumpedParams) -> Result<LumpedParams> {
        self.vertices[0].check_same_dims(m, "ParamPolytope::project")?;
        let (n, p, k) = self.dims();
        let (flat, dist) = self.project_flat(&m.flatten());
        if dist == 0.0 {
            return Ok(m.clone());
        }
        LumpedParams::unflatten(n, p, k, flat.as_slice())
    }

    /// Weighted sum `Σ γ_i v_i` for convex weights `gamma`.
    pub fn convex_combine(&self, gamma: &[f64]) -> Result<LumpedParams> {
        validate_weights(gamma, self.vertices.len())?;
        let mut acc = LumpedParams::zeros(self.dims().0, self.dims().1, self.dims().2);
        for (g, v) in gamma.iter().zip(&self.vertices) {
            acc = acc.axpy(*g, v);
        }
        Ok(acc)
    }

    /// Projection in flattened coordinates; returns (point, distance).
    fn project_flat(&self, m: &DVector<f64>) -> (DVector<f64>, f64) {
        if let Some(b) = &self.as_box {
            let mut out = m.clone();
            for (i, v) in out.iter_mut().enumerate() {
                *v = v.clamp(b.lo[i], b.hi[i]);
            }
            let d = (&out - m).norm();
            return (out, d);
        }
        let w = min_norm_weights(&self.flat, m);
        let mut out = DVector::zeros(m.len());
        for (wi, v) in w.iter().zip(&self.flat) {
            if *wi != 0.0 {
                out.axpy(*wi, v, 1.0);
            }
        }
        let d = (&out - m).norm();
        let scale = self.flat.iter().map(|v| v.norm()).fold(m.norm(), f64::max);
        if d <= 1e-14 * (1.0 + scale) {
            (m.clone(), 0.0)
        } else {
            (out, d)
        }
    }
}

/// Validates a convex weight vector of length `q`.
pub fn validate_weights(gamma: &[f64], q: usize) -> Result<()> {
    if gamma.len() != q {
        return Err(Error::InvalidWeights(format!("expected {q} weights, got {}", gamma.len())));
    }
    if gamma.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(Error::InvalidWeights("weights must be finite and non-negative".into()));
    }
    let s: f64 = gamma.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidWeights(format!("weights sum to {s}, not 1")));
    }
    Ok(())
}

fn detect_box(flat: &[DVector<f64>]) -> Option<FlatBox> {
    let dim = flat[0].len();
    let mut lo = flat[0].as_slice().to_vec();
    let mut hi = lo.clone();
    for v in flat {
        for i in 0..dim {
            lo[i] = lo[i].min(v[i]);
            hi[i] = hi[i].max(v[i]);
        }
    }
    let varying: Vec<usize> = (0..dim).filter(|&i| hi[i] > lo[i]).collect();
    if varying.len() > MAX_BOX_DIM || flat.len() != 1usize << varying.len() {
        return None;
    }
    let mut seen = std::collections::HashSet::new();
    for v in flat {
        let mut code: u64 = 0;
        for (bit, &i) in varying.iter().enumerate() {
            if v[i] == hi[i] {
                code |= 1 << bit;
            } else if v[i] != lo[i] {
                return None;
            }
        }
        if !seen.insert(code) {
            return None;
        }
    }
    Some(FlatBox { lo, hi })
}

/// Convex weights of the point of `conv(points)` nearest to `target`.
///
/// Wolfe's minimum-norm-point active-set method applied to the shifted
/// points `points[i] - target`.
pub(crate) fn min_norm_weights(points: &[DVector<f64>], target: &DVector<f64>) -> Vec<f64> {
    let q = points.len();
    let shifted: Vec<DVector<f64>> = points.iter().map(|p| p - target).collect();
    let scale = shifted.iter().map(|p| p.norm_squared()).fold(0.0, f64::max);
    if scale == 0.0 {
        let mut w = vec![0.0; q];
        w[0] = 1.0;
        return w;
    }
    let tol = 1e-20 * scale.max(f64::MIN_POSITIVE);
    let start = (0..q).min_by(|&a, &b| shifted[a].norm_squared().total_cmp(&shifted[b].norm_squared())).unwrap_or(0);
    let mut active: Vec<usize> = vec![start];
    let mut w: Vec<f64> = vec![1.0];
    let combine = |active: &[usize], w: &[f64]| {
        let mut x = DVector::zeros(target.len());
        for (&i, &wi) in active.iter().zip(w) {
            x.axpy(wi, &shifted[i], 1.0);
        }
        x
    };
    let mut x = shifted[start].clone();
    for _major in 0..(50 * q + 100) {
        let xx = x.norm_squared();
        let (j, xj) = (0..q).map(|i| (i, x.dot(&shifted[i]))).min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
        if xx - xj <= 1e-12 * scale || xx <= tol || active.contains(&j) {
            break;
        }
        active.push(j);
        w.push(0.0);
        for _minor in 0..(q + 5) {
            let alpha = affine_min_norm(&active, &shifted);
            if alpha.iter().all(|a| *a > 0.0) {
                w = alpha;
                break;
            }
            let mut theta = f64::INFINITY;
            let mut drop = 0;
            for (k, (&a, &wk)) in alpha.iter().zip(&w).enumerate() {
                if a <= 0.0 {
                    let denom = wk - a;
                    let t = if denom > 0.0 { wk / denom } else { 0.0 };
                    if t < theta {
                        theta = t;
                        drop = k;
                    }
                }
            }
            for (wk, a) in w.iter_mut().zip(&alpha) {
                *wk = theta * a + (1.0 - theta) * *wk;
            }
            w[drop] = 0.0;
            let mut k = 0;
            while k < active.len() {
                if w[k] <= 0.0 {
                    active.remove(k);
                    w.remove(k);
                } else {
                    k += 1;
                }
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
        }
        x = combine(&active, &w);
    }
    let mut out = vec![0.0; q];
    for (&i, &wi) in active.iter().zip(&w) {
        out[i] = wi.max(0.0);
    }
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= s);
    out
}

/// Affine weights minimizing `‖Σ α_i p_i‖` subject to `Σ α_i = 1` over `active`.
fn affine_min_norm(active: &[usize], pts: &[DVector<f64>]) -> Vec<f64> {
    let k = active.len();
    if k == 1 {
        return vec![1.0];
    }
    let base = &pts[active[0]];
    let d = DMatrix::from_fn(base.len(), k - 1, |r, c| pts[active[c + 1]][r] - base[r]);
    let svd = d.svd(true, true);
    let smax = svd.singular_values.max();
    let beta = svd.solve(&(-base), smax * 1e-13).unwrap_or_else(|_| DVector::zeros(k - 1));
    let mut alpha = Vec::with_capacity(k);
    alpha.push(1.0 - beta.sum());
    alpha.extend(beta.iter().copied());
    alpha
}
