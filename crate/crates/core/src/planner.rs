//! Workspace and obstacle model, δ-based constraint tightening, nominal
//! parameter selection, and A* search over a primitive library.

use crate::bounds::BoxBounds;
use crate::dynamics::Trajectory;
use crate::error::{dim_err, Error, Result};
use crate::numfmt::to_exact_json;
use crate::param_space::{LumpedParams, ParamPolytope, MEMBERSHIP_TOL};
use crate::primitives::lattice::{LatticeSpec, Node};
use crate::primitives::library::MotionPrimitive;
use crate::tube_control::{nu, ControlContext};
use nalgebra::DVector;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

/// Default safety margin applied to sampled `ν` extremes.
pub const DEFAULT_NU_MARGIN: f64 = 1.25;

/// Smallest footprint sampling spacing, as a fraction of the finest lattice
/// resolution (used when δ/2 would be smaller).
pub const MIN_SPACING_FRACTION: f64 = 1e-2;

/// State box `X` plus axis-aligned obstacles in the planned coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workspace {
    pub bounds: BoxBounds,
    pub planning_dims: Vec<usize>,
    #[serde(default)]
    pub obstacles: Vec<BoxBounds>,
}

impl Workspace {
    /// Validates dimensions and that each obstacle lies within the bounds.
    pub fn new(bounds: BoxBounds, planning_dims: Vec<usize>, obstacles: Vec<BoxBounds>) -> Result<Self> {
        let w = Self { bounds, planning_dims, obstacles };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.planning_dims.iter().any(|d| *d >= self.bounds.dim()) {
            return Err(Error::InvalidArgument("planning dimension outside the workspace state".into()));
        }
        let planned = self.planned_bounds();
        for o in &self.obstacles {
            if o.dim() != self.planning_dims.len() {
                return Err(dim_err("obstacle", self.planning_dims.len(), o.dim()));
            }
            if !planned.contains_box(o) {
                return Err(Error::InvalidArgument(format!("obstacle {o:?} leaves the workspace bounds")));
            }
        }
        Ok(())
    }

    /// Bounds restricted to the planned coordinates.
    pub fn planned_bounds(&self) -> BoxBounds {
        BoxBounds {
            lo: self.planning_dims.iter().map(|d| self.bounds.lo[*d]).collect(),
            hi: self.planning_dims.iter().map(|d| self.bounds.hi[*d]).collect(),
        }
    }

    /// Whether a planned-coordinate point is inside the bounds and outside
    /// every obstacle interior.
    pub fn point_free(&self, p: &[f64]) -> bool {
        let planned = self.planned_bounds();
        planned.contains(p) && !self.obstacles.iter().any(|o| o.contains_strict(p))
    }
}

/// `X̄_S`: bounds shrunk by δ per coordinate, obstacles inflated by δ per
/// coordinate (an axis-aligned over-approximation of the Minkowski sum).
pub fn tighten_workspace(w: &Workspace, delta: f64) -> Result<Workspace> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("tube radius must be finite and non-negative, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(w.clone());
    }
    Ok(Workspace {
        bounds: w.bounds.shrink(delta)?,
        planning_dims: w.planning_dims.clone(),
        obstacles: w.obstacles.iter().map(|o| o.inflate(delta)).collect(),
    })
}

/// Sample grid over which `ν` extremes are evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NuSampling {
    /// Grid levels per coordinate (2: endpoints, 3: endpoints and midpoint).
    pub levels: usize,
    /// Upper bound on evaluated grid points; larger grids are subsampled.
    pub max_points: usize,
    pub seed: u64,
}

impl Default for NuSampling {
    fn default() -> Self {
        Self { levels: 3, max_points: 20_000, seed: 0 }
    }
}

fn levels(lo: f64, hi: f64, k: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidArgument("ν sampling requires finite boxes".into()));
    }
    Ok(match k {
        0 | 1 => vec![0.5 * (lo + hi)],
        k => (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect(),
    })
}

/// Parameter samples of a model set: vertices, pairwise midpoints, centroid.
pub fn parameter_samples(s: &ParamPolytope) -> Vec<LumpedParams> {
    let v = s.vertices();
    let mut out: Vec<LumpedParams> = v.to_vec();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            out.push(v[i].axpy(1.0, &v[j]).scaled(0.5));
        }
    }
    if v.len() > 2 {
        out.push(s.centroid());
    }
    out
}

/// Per-component maximum `|ν|` over `x ∈ X`, `x̄ ∈ X_S`, `ū ∈ U` grid points
/// and `Θ̂` samples of `S` (vertices, midpoints, centroid).
pub fn nu_extremes(
    ctx: &ControlContext<'_>,
    x_box: &BoxBounds,
    xs_box: &BoxBounds,
    u_box: &BoxBounds,
    s: &ParamPolytope,
    cfg: &NuSampling,
) -> Result<Vec<f64>> {
    let n = ctx.sys.n;
    let m = ctx.sys.m;
    if x_box.dim() != n || xs_box.dim() != n {
        return Err(dim_err("ν sampling state box", n, format!("{} / {}", x_box.dim(), xs_box.dim())));
    }
    if u_box.dim() != m {
        return Err(dim_err("ν sampling input box", m, u_box.dim()));
    }
    let mut axes = Vec::with_capacity(2 * n + m);
    for b in [x_box, xs_box, u_box] {
        for i in 0..b.dim() {
            axes.push(levels(b.lo[i], b.hi[i], cfg.levels)?);
        }
    }
    let total = axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.len()));
    let indices: Vec<usize> = match total {
        Some(t) if t <= cfg.max_points.max(1) => (0..t).collect(),
        _ => {
            // seeded subsample of a grid too large to enumerate
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let span = total.unwrap_or(usize::MAX).min(1 << 52);
            let mut idx: Vec<usize> = sample(&mut rng, span, cfg.max_points.max(1)).into_iter().collect();
            idx.sort_unstable();
            idx
        }
    };
    let thetas = parameter_samples(s);
    let mut best = vec![0.0f64; m];
    let mut x = DVector::zeros(n);
    let mut xbar = DVector::zeros(n);
    let mut ubar = DVector::zeros(m);
    for mut c in indices {
        for (k, axis) in axes.iter().enumerate().rev() {
            let v = axis[c % axis.len()];
            c /= axis.len();
            if k < n {
                x[k] = v;
            } else if k < 2 * n {
                xbar[k - n] = v;
            } else {
                ubar[k - 2 * n] = v;
            }
        }
        for th in &thetas {
            let v = nu(ctx, 0.0, &x, &xbar, &ubar, th)?;
            for (b, vi) in best.iter_mut().zip(v.iter()) {
                *b = b.max(vi.abs());
            }
        }
    }
    Ok(best)
}

/// `U_S = U ⊖ margin·ν_max` per coordinate.
pub fn tighten_inputs(u: &BoxBounds, nu_max: &[f64], margin: f64) -> Result<BoxBounds> {
    if !(margin >= 1.0) {
        return Err(Error::InvalidArgument(format!("ν margin must be at least 1, got {margin}")));
    }
    if nu_max.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::NonFinite("ν extremes"));
    }
    let amount: Vec<f64> = nu_max.iter().map(|v| v * margin).collect();
    u.shrink_by(&amount)
}

/// Picks the `Ψ_d` element inside `S(t₀)` closest to `Θ̂` (lowest index on
/// ties).
pub fn select_nominal(psi_d: &[LumpedParams], s: &ParamPolytope, theta_hat: &LumpedParams) -> Result<(usize, LumpedParams)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, th) in psi_d.iter().enumerate() {
        if !s.contains(th, MEMBERSHIP_TOL)? {
            continue;
        }
        let d = th.distance(theta_hat);
        let better = match best {
            None => true,
            Some((_, bd)) => d < bd && (bd - d) > 1e-12 * bd.max(1e-300),
        };
        if better {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| (i, psi_d[i].clone())).ok_or(Error::NoNominalInSet)
}

/// One primitive of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanStep {
    /// Index into the primitive list handed to the planner.
    pub primitive: usize,
    pub offset: Vec<i64>,
    pub cost: f64,
    pub duration: f64,
}

/// Minimum-cost primitive chain from start to goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plan {
    pub nodes: Vec<Node>,
    pub steps: Vec<PlanStep>,
    pub total_cost: f64,
    pub delta: f64,
    pub nominal_id: usize,
}

impl Plan {
    pub fn duration(&self) -> f64 {
        self.steps.iter().map(|s| s.duration).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        to_exact_json(self)
    }

    /// Concatenated nominal reference in absolute coordinates. Interior
    /// junction samples are kept once.
    pub fn reference(&self, lattice: &LatticeSpec, prims: &[&MotionPrimitive]) -> Trajectory {
        let mut traj = Trajectory { times: vec![0.0], states: vec![lattice.node_state(&self.nodes[0])], inputs: Vec::new() };
        let mut t0 = 0.0;
        for (k, step) in self.steps.iter().enumerate() {
            let p = prims[step.primitive];
            let base = lattice.position(&self.nodes[k]);
            let samples = p.states.len();
            for j in 1..samples {
                let mut x = p.states[j].clone();
                for (d, b) in lattice.planning_dims.iter().zip(&base) {
                    x[*d] += b;
                }
                traj.times.push(t0 + p.duration * j as f64 / (samples - 1) as f64);
                traj.states.push(x);
            }
            if k == 0 {
                traj.inputs.push(p.inputs[0].clone());
            }
            traj.inputs.extend(p.inputs[1..].iter().cloned());
            t0 += p.duration;
        }
        if self.steps.is_empty() {
            let m = prims.first().map_or(0, |p| p.inputs.first().map_or(0, |u| u.len()));
            traj.inputs.push(DVector::zeros(m));
        }
        traj
    }
}

/// Search context: lattice, primitive set `M(Θ̄)` and tightened workspace.
pub struct PlanQuery<'a> {
    pub lattice: &'a LatticeSpec,
    pub primitives: &'a [&'a MotionPrimitive],
    pub workspace: &'a Workspace,
    pub delta: f64,
    pub nominal_id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    f: f64,
    h: f64,
    seq: u64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Reversed for a min-heap: lower f, then lower h, then earlier insertion.
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.total_cmp(&self.f).then(other.h.total_cmp(&self.h)).then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> PlanQuery<'a> {
    fn spacing(&self) -> f64 {
        let finest = self.lattice.resolution.iter().cloned().fold(f64::INFINITY, f64::min);
        (0.5 * self.delta).max(MIN_SPACING_FRACTION * finest)
    }

    /// Whether primitive `k` applied at `node` keeps its (densified)
    /// footprint inside the tightened free space.
    pub fn edge_feasible(&self, node: &[i64], k: usize) -> bool {
        let p = self.primitives[k];
        let target: Vec<i64> = node.iter().zip(p.offset()).map(|(a, o)| a + o).collect();
        if !self.lattice.contains_node(&target) {
            return false;
        }
        let base = self.lattice.position(node);
        let spacing = self.spacing();
        let abs = |f: &Vec<f64>| -> Vec<f64> { f.iter().zip(&base).map(|(a, b)| a + b).collect() };
        let mut prev = match p.footprint.first() {
            Some(f) => abs(f),
            None => return self.workspace.point_free(&base),
        };
        if !self.workspace.point_free(&prev) {
            return false;
        }
        for f in &p.footprint[1..] {
            let cur = abs(f);
            let len = prev.iter().zip(&cur).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let pieces = (len / spacing).ceil().max(1.0) as usize;
            for j in 1..=pieces {
                let s = j as f64 / pieces as f64;
                let q: Vec<f64> = prev.iter().zip(&cur).map(|(a, b)| a + s * (b - a)).collect();
                if !self.workspace.point_free(&q) {
                    return false;
                }
            }
            prev = cur;
        }
        true
    }

    fn check_endpoint(&self, node: &[i64], what: &str) -> Result<()> {
        if !self.lattice.contains_node(node) {
            return Err(Error::StartGoalInfeasible(format!("{what} node {node:?} is not on the lattice")));
        }
        if !self.workspace.point_free(&self.lattice.position(node)) {
            return Err(Error::StartGoalInfeasible(format!("{what} node {node:?} is outside the tightened free space")));
        }
        Ok(())
    }

    fn heuristic_scale(&self) -> f64 {
        let min_cost = self.primitives.iter().map(|p| p.cost).fold(f64::INFINITY, f64::min);
        let max_disp = self.lattice.max_offset_displacement();
        if self.primitives.is_empty() || max_disp <= 0.0 || !min_cost.is_finite() {
            0.0
        } else {
            // slightly deflated so rounding can never make it inadmissible
            min_cost / max_disp * (1.0 - 1e-12)
        }
    }

    /// A* search (resolution-optimal under the primitive set).
    pub fn plan(&self, start: &[i64], goal: &[i64]) -> Result<Plan> {
        self.search(start, goal, true)
    }

    /// Uniform-cost (Dijkstra) search over the same edge set.
    pub fn dijkstra(&self, start: &[i64], goal: &[i64]) -> Result<Plan> {
        self.search(start, goal, false)
    }

    fn search(&self, start: &[i64], goal: &[i64], informed: bool) -> Result<Plan> {
        self.check_endpoint(start, "start")?;
        self.check_endpoint(goal, "goal")?;
        let empty = |nodes: Vec<Node>| Plan { nodes, steps: Vec::new(), total_cost: 0.0, delta: self.delta, nominal_id: self.nominal_id };
        if start == goal {
            return Ok(empty(vec![start.to_vec()]));
        }
        let shape = self.lattice.shape();
        let index = |node: &[i64]| -> usize { node.iter().zip(&shape).fold(0usize, |acc, (v, s)| acc * s + *v as usize) };
        let unindex = |mut c: usize| -> Node {
            let mut node = vec![0i64; shape.len()];
            for d in (0..shape.len()).rev() {
                node[d] = (c % shape[d]) as i64;
                c /= shape[d];
            }
            node
        };
        let goal_pos = self.lattice.position(goal);
        let scale = if informed { self.heuristic_scale() } else { 0.0 };
        let h = |node: &[i64]| -> f64 {
            if scale == 0.0 {
                return 0.0;
            }
            let p = self.lattice.position(node);
            p.iter().zip(&goal_pos).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() * scale
        };
        let mut g: HashMap<usize, f64> = HashMap::new();
        let mut parent: HashMap<usize, (usize, usize)> = HashMap::new();
        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        let s = index(start);
        let goal_idx = index(goal);
        g.insert(s, 0.0);
        let h0 = h(start);
        heap.push(Entry { f: h0, h: h0, seq, node: s });
        while let Some(e) = heap.pop() {
            let gn = g[&e.node];
            if e.f > gn + e.h {
                continue; // stale entry
            }
            if e.node == goal_idx {
                let mut steps = Vec::new();
                let mut nodes = vec![goal.to_vec()];
                let mut cur = goal_idx;
                while let Some(&(prev, k)) = parent.get(&cur) {
                    let p = self.primitives[k];
                    steps.push(PlanStep { primitive: k, offset: p.offset(), cost: p.cost, duration: p.duration });
                    nodes.push(unindex(prev));
                    cur = prev;
                }
                steps.reverse();
                nodes.reverse();
                return Ok(Plan { nodes, steps, total_cost: gn, delta: self.delta, nominal_id: self.nominal_id });
            }
            let node = unindex(e.node);
            for k in 0..self.primitives.len() {
                if !self.edge_feasible(&node, k) {
                    continue;
                }
                let p = self.primitives[k];
                let next: Node = node.iter().zip(p.offset()).map(|(a, o)| a + o).collect();
                let ni = index(&next);
                let cand = gn + p.cost;
                if g.get(&ni).is_none_or(|old| cand < *old) {
                    g.insert(ni, cand);
                    parent.insert(ni, (e.node, k));
                    let hn = h(&next);
                    seq += 1;
                    heap.push(Entry { f: cand + hn, h: hn, seq, node: ni });
                }
            }
        }
        Err(Error::NoPath)
    }
}
