//! Oracles shared by the integration test targets.
#![allow(dead_code)]

use alp_core::bounds::BoxBounds;
use alp_core::dynamics::{attitude_params, QuadrotorConstants, Regressor, SystemModel};
use alp_core::param_space::{LumpedParams, ParamPolytope};
use alp_core::planner::Workspace;
use alp_core::primitives::{build_lattice, BvpConstraints, Connectivity, LatticeInputs, LatticeSpec, MotionPrimitive};
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Admissible set of the quadrotor example in (c1, c2).
pub const PSI_C: [[f64; 2]; 4] = [[-5e-3, 2.25e-3], [0.0, 2.25e-3], [0.0, 7.75e-3], [-5e-3, 7.75e-3]];

pub fn quad_psi() -> ParamPolytope {
    let k = QuadrotorConstants::default();
    ParamPolytope::new(PSI_C.iter().map(|c| attitude_params(&k, c[0], c[1])).collect()).unwrap()
}

/// Independent diameter: largest pairwise Frobenius distance of the corners
/// listed in (c1, c2) (all other entries coincide).
pub fn diam_oracle() -> f64 {
    let mut d: f64 = 0.0;
    for a in &PSI_C {
        for b in &PSI_C {
            d = d.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
        }
    }
    d
}

/// Entrywise clamp to the per-entry vertex range.
pub fn clamp_oracle(psi: &ParamPolytope, m: &LumpedParams) -> LumpedParams {
    let mut out = m.clone();
    for (k, v) in out.theta_x.iter_mut().enumerate() {
        let (lo, hi) = range(psi.vertices().iter().map(|p| p.theta_x.as_slice()[k]));
        *v = v.clamp(lo, hi);
    }
    for (k, v) in out.theta_u.iter_mut().enumerate() {
        let (lo, hi) = range(psi.vertices().iter().map(|p| p.theta_u.as_slice()[k]));
        *v = v.clamp(lo, hi);
    }
    out
}

fn range(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Nearest (c1, c2) point of a `res`-spaced grid covering the set; every
/// other entry of the set is fixed, so it only shifts the distance.
pub fn grid_projection(c: [f64; 2], res: f64) -> [f64; 2] {
    let (lo1, hi1) = (-5e-3, 0.0);
    let (lo2, hi2) = (2.25e-3, 7.75e-3);
    let n1 = ((hi1 - lo1) / res).round() as usize;
    let n2 = ((hi2 - lo2) / res).round() as usize;
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for i in 0..=n1 {
        let a = lo1 + i as f64 * res;
        let da = (a - c[0]).powi(2);
        if da > best.0 {
            continue;
        }
        for j in 0..=n2 {
            let b = lo2 + j as f64 * res;
            let d = da + (b - c[1]).powi(2);
            if d < best.0 {
                best = (d, [a, b]);
            }
        }
    }
    best.1
}

pub fn double_integrator() -> (SystemModel, LumpedParams) {
    let sys = SystemModel::new("di", 2, 1, Regressor::Linear { n: 2 }, BoxBounds::unbounded(2), BoxBounds::unbounded(1)).unwrap();
    let th = LumpedParams::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]], &[vec![0.0], vec![1.0]]).unwrap();
    (sys, th)
}

pub fn free() -> BvpConstraints {
    BvpConstraints { state_box: BoxBounds::unbounded(2), input_box: BoxBounds::unbounded(1) }
}

/// Minimum of `Σ h (1 + u²)` from (0, 0) to (1, 0) over a dense grid.
///
/// With a zero-order hold of width `h` and inputs `u = a·m`, the exact
/// discrete double integrator maps the lattice `x = a h²/2 · i`, `v = a h · j`
/// onto itself: `(i, j) → (i + 2j + m, j + m)`. Free final time becomes a
/// shortest-path problem with strictly positive edge costs.
pub fn dp_oracle(h: f64, a: f64, u_max: f64, v_max: f64) -> f64 {
    let target_i = (1.0 / (a * h * h / 2.0)).round() as i64;
    let m_max = (u_max / a).round() as i64;
    let j_max = (v_max / (a * h)).round() as i64;
    let (i_lo, i_hi) = (-target_i / 10, target_i + target_i / 10);
    let width = (2 * j_max + 1) as usize;
    let index = |i: i64, j: i64| (i - i_lo) as usize * width + (j + j_max) as usize;
    let mut best = vec![f64::INFINITY; (i_hi - i_lo + 1) as usize * width];
    let mut heap = BinaryHeap::new();
    best[index(0, 0)] = 0.0;
    // non-negative f64 values order like their bit patterns
    heap.push(Reverse((0u64, 0i64, 0i64)));
    while let Some(Reverse((bits, i, j))) = heap.pop() {
        let c = f64::from_bits(bits);
        if best[index(i, j)] < c {
            continue;
        }
        if (i, j) == (target_i, 0) {
            return c;
        }
        for m in -m_max..=m_max {
            let (ni, nj) = (i + 2 * j + m, j + m);
            if ni < i_lo || ni > i_hi || nj.abs() > j_max {
                continue;
            }
            let u = a * m as f64;
            let nc = c + h * (1.0 + u * u);
            let k = index(ni, nj);
            if nc < best[k] {
                best[k] = nc;
                heap.push(Reverse((nc.to_bits(), ni, nj)));
            }
        }
    }
    panic!("target unreachable on the oracle grid");
}

pub fn grid10() -> LatticeSpec {
    build_lattice(LatticeInputs {
        planning_dims: vec![0, 1],
        bounds: vec![[0.0, 9.0], [0.0, 9.0]],
        resolution: vec![1.0, 1.0],
        connectivity: Connectivity::Full.offsets(2),
        boundary_state: vec![0.0, 0.0],
    })
    .unwrap()
}

/// Straight-line primitives on `lattice` with randomly scaled costs, a random
/// set of box obstacles and free start/goal nodes.
pub fn random_planning_instance(lattice: &LatticeSpec, rng: &mut ChaCha8Rng) -> (Vec<MotionPrimitive>, Workspace, Vec<i64>, Vec<i64>) {
    let prims = lattice
        .connectivity
        .iter()
        .map(|o| {
            let d = lattice.displacement(o);
            let len = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            MotionPrimitive {
                from_offset: vec![0; o.len()],
                to_offset: o.clone(),
                nominal_id: 0,
                duration: len,
                states: vec![lattice.origin_state(), lattice.offset_state(o)],
                inputs: vec![DVector::zeros(1); 2],
                // costs vary per offset so the heuristic scaling matters
                cost: len * rng.random_range(1.0..2.0),
                footprint: vec![vec![0.0; o.len()], d],
                endpoint_error: 0.0,
            }
        })
        .collect();
    let hi = lattice.bounds.iter().map(|b| b[1]).collect::<Vec<_>>();
    let obstacles: Vec<BoxBounds> = (0..rng.random_range(3..9))
        .map(|_| {
            let x = rng.random_range(0.0..hi[0] - 1.0);
            let y = rng.random_range(0.0..hi[1] - 1.0);
            let w = rng.random_range(0.3..2.5);
            let h = rng.random_range(0.3..2.5);
            BoxBounds::new(vec![x, y], vec![(x + w).min(hi[0]), (y + h).min(hi[1])]).unwrap()
        })
        .collect();
    let ws = Workspace::new(BoxBounds::new(vec![0.0, 0.0], hi.clone()).unwrap(), vec![0, 1], obstacles).unwrap();
    let free: Vec<Vec<i64>> = lattice.nodes().into_iter().filter(|n| ws.point_free(&lattice.position(n))).collect();
    let start = free[rng.random_range(0..free.len())].clone();
    let goal = free[rng.random_range(0..free.len())].clone();
    (prims, ws, start, goal)
}
