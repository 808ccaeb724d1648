//! Regular state lattice over the planned coordinates.

use crate::error::{dim_err, Error, Result};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Integer lattice coordinates of a node (one entry per planned dimension).
pub type Node = Vec<i64>;

/// Neighbour template presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    /// Axis neighbours only (`2d` offsets).
    Axis,
    /// Every offset in `{-1, 0, 1}^d` except zero (`3^d − 1` offsets).
    Full,
}

impl Connectivity {
    /// Offsets of the template in deterministic (lexicographic) order.
    pub fn offsets(self, dims: usize) -> Vec<Vec<i64>> {
        match self {
            Connectivity::Axis => {
                let mut out = Vec::with_capacity(2 * dims);
                for d in 0..dims {
                    for s in [1, -1] {
                        let mut o = vec![0; dims];
                        o[d] = s;
                        out.push(o);
                    }
                }
                out
            }
            Connectivity::Full => {
                let total = 3usize.pow(dims as u32);
                (0..total)
                    .map(|mut c| {
                        (0..dims)
                            .map(|_| {
                                let digit = (c % 3) as i64 - 1;
                                c /= 3;
                                digit
                            })
                            .collect::<Vec<i64>>()
                    })
                    .filter(|o| o.iter().any(|v| *v != 0))
                    .collect()
            }
        }
    }
}

/// Unvalidated lattice description (scenario input).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeInputs {
    pub planning_dims: Vec<usize>,
    pub bounds: Vec<[f64; 2]>,
    pub resolution: Vec<f64>,
    pub connectivity: Vec<Vec<i64>>,
    pub boundary_state: Vec<f64>,
}

/// Validated lattice: node set is the grid `lo + i·res` inside the bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub planning_dims: Vec<usize>,
    pub bounds: Vec<[f64; 2]>,
    pub resolution: Vec<f64>,
    pub connectivity: Vec<Vec<i64>>,
    pub boundary_state: Vec<f64>,
}

/// Validates lattice inputs.
pub fn build_lattice(inp: LatticeInputs) -> Result<LatticeSpec> {
    let d = inp.planning_dims.len();
    if d == 0 {
        return Err(Error::InvalidArgument("lattice needs at least one planned dimension".into()));
    }
    if inp.bounds.len() != d || inp.resolution.len() != d {
        return Err(dim_err("lattice bounds/resolution", d, format!("{} / {}", inp.bounds.len(), inp.resolution.len())));
    }
    let n = inp.boundary_state.len();
    if inp.planning_dims.iter().any(|&i| i >= n) {
        return Err(Error::InvalidArgument("planning dimension outside the state vector".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    if !inp.planning_dims.iter().all(|i| seen.insert(*i)) {
        return Err(Error::InvalidArgument("duplicate planning dimension".into()));
    }
    for (b, r) in inp.bounds.iter().zip(&inp.resolution) {
        if !(r.is_finite() && *r > 0.0) {
            return Err(Error::InvalidArgument(format!("resolution must be positive, got {r}")));
        }
        if !(b[0].is_finite() && b[1].is_finite() && b[0] <= b[1]) {
            return Err(Error::InvalidArgument(format!("invalid lattice bounds {b:?}")));
        }
    }
    if inp.connectivity.is_empty() {
        return Err(Error::InvalidArgument("connectivity template is empty".into()));
    }
    for o in &inp.connectivity {
        if o.len() != d {
            return Err(dim_err("connectivity offset", d, o.len()));
        }
        if o.iter().all(|v| *v == 0) {
            return Err(Error::InvalidArgument("connectivity contains the zero offset".into()));
        }
    }
    let spec = LatticeSpec {
        planning_dims: inp.planning_dims,
        bounds: inp.bounds,
        resolution: inp.resolution,
        connectivity: inp.connectivity,
        boundary_state: inp.boundary_state,
    };
    let shape = spec.shape();
    let usable = spec.connectivity.iter().any(|o| o.iter().zip(&shape).all(|(v, s)| v.unsigned_abs() < *s as u64));
    if !usable {
        return Err(Error::EmptyGrid(format!("grid shape {shape:?} admits none of the {} offsets", spec.connectivity.len())));
    }
    Ok(spec)
}

impl LatticeSpec {
    pub fn dims(&self) -> usize {
        self.planning_dims.len()
    }

    /// Number of nodes along each planned dimension.
    pub fn shape(&self) -> Vec<usize> {
        self.bounds.iter().zip(&self.resolution).map(|(b, r)| ((b[1] - b[0]) / r + 1e-9).floor() as usize + 1).collect()
    }

    pub fn node_count(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn contains_node(&self, node: &[i64]) -> bool {
        node.len() == self.dims() && node.iter().zip(self.shape()).all(|(i, s)| *i >= 0 && (*i as usize) < s)
    }

    /// Physical coordinates of a node in the planned dimensions.
    pub fn position(&self, node: &[i64]) -> Vec<f64> {
        node.iter().zip(self.bounds.iter().zip(&self.resolution)).map(|(i, (b, r))| b[0] + *i as f64 * r).collect()
    }

    /// Displacement of an offset in the planned dimensions.
    pub fn displacement(&self, offset: &[i64]) -> Vec<f64> {
        offset.iter().zip(&self.resolution).map(|(i, r)| *i as f64 * r).collect()
    }

    /// Full state of a node (boundary values for unplanned coordinates).
    pub fn node_state(&self, node: &[i64]) -> DVector<f64> {
        let mut x = DVector::from_column_slice(&self.boundary_state);
        for (d, p) in self.planning_dims.iter().zip(self.position(node)) {
            x[*d] = p;
        }
        x
    }

    /// Primitive-local start state (planned coordinates at zero).
    pub fn origin_state(&self) -> DVector<f64> {
        let mut x = DVector::from_column_slice(&self.boundary_state);
        for d in &self.planning_dims {
            x[*d] = 0.0;
        }
        x
    }

    /// Primitive-local target state for an offset.
    pub fn offset_state(&self, offset: &[i64]) -> DVector<f64> {
        let mut x = self.origin_state();
        for (d, v) in self.planning_dims.iter().zip(self.displacement(offset)) {
            x[*d] = v;
        }
        x
    }

    /// Per-coordinate scale converting a state gap into grid units
    /// (resolution for planned coordinates, 1 otherwise).
    pub fn grid_scale(&self) -> Vec<f64> {
        let mut s = vec![1.0; self.boundary_state.len()];
        for (d, r) in self.planning_dims.iter().zip(&self.resolution) {
            s[*d] = *r;
        }
        s
    }

    /// Largest state gap in grid units (infinity norm).
    pub fn gap_in_grid_units(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let s = self.grid_scale();
        (0..a.len()).map(|i| (a[i] - b[i]).abs() / s[i]).fold(0.0, f64::max)
    }

    /// All nodes in row-major order.
    pub fn nodes(&self) -> Vec<Node> {
        let shape = self.shape();
        let total: usize = shape.iter().product();
        (0..total)
            .map(|mut c| {
                let mut node = vec![0i64; shape.len()];
                for d in (0..shape.len()).rev() {
                    node[d] = (c % shape[d]) as i64;
                    c /= shape[d];
                }
                node
            })
            .collect()
    }

    /// Largest Euclidean displacement among the connectivity offsets.
    pub fn max_offset_displacement(&self) -> f64 {
        self.connectivity.iter().map(|o| self.displacement(o).iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }
}
