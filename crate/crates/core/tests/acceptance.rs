//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the report is always printed.

mod common;

use alp_core::bounds::BoxBounds;
use alp_core::dynamics::attitude_uncertain;
use alp_core::dynamics::{attitude_params, eval_dynamics, rk4_step, OmegaSignal, QuadrotorConstants, Regressor, SystemModel};
use alp_core::error::Error;
use alp_core::harness::campaign::{run_campaign, CampaignOptions, CampaignReport};
use alp_core::harness::execution::{full_library, prepare, run_execution};
use alp_core::harness::identification::{run_identification, IdentificationConfig, IdentificationReport};
use alp_core::harness::Scenario;
use alp_core::planner::PlanQuery;
use alp_core::primitives::library::ENDPOINT_TOL_GRID;
use alp_core::primitives::{solve_primitive_bvp, BvpConfig, MotionPrimitive, RunningCost};
use alp_core::tube_control::{combined_uhat, ControlContext};
use common::*;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_monotone(id: &IdentificationReport) -> Outcome {
    let inc = id.max_diam_increase();
    check(
        inc <= 1e-8,
        format!(
            "{} samples, largest diam increase {:.3e}, diam {:.4e} -> {:.4e}",
            id.samples.len(),
            inc,
            id.s0_diam,
            id.samples.last().unwrap().diam
        ),
    )
}

fn c2_membership(id: &IdentificationReport) -> Outcome {
    let worst = id.samples.iter().map(|s| s.truth_distance).fold(0.0, f64::max);
    let fin = id.final_identifier.model_set();
    let truth = attitude_params(&QuadrotorConstants::default(), -1e-3, 3.5e-3);
    let final_ok = fin.contains(&truth, 1e-6).map_err(|e| e.to_string())?;
    check(worst <= 1e-6 && final_ok, format!("largest distance of the truth from S(t): {worst:.3e}"))
}

fn c3_bound(id: &IdentificationReport) -> Outcome {
    let oracle = diam_oracle();
    let bound = oracle / 1.0f64.sqrt();
    let max = id.max_x_tilde();
    let first = id.samples.first().map_or(f64::NAN, |s| s.x_tilde);
    check(
        (id.delta - 7.4330e-3).abs() < 5e-8 && (id.delta - bound).abs() < 1e-15 && first == 0.0 && max <= bound + 1e-6,
        format!("max |x~| {max:.4e} <= bound {bound:.4e} (reported {:.4e}, x~(t0) = {first})", id.delta),
    )
}

fn c4_convergence() -> Outcome {
    let cfg = IdentificationConfig { duration: 20.0, ..IdentificationConfig::default() };
    let id = run_identification(&cfg).map_err(|e| e.to_string())?;
    let max = id.max_x_tilde();
    let last = id.samples.last().unwrap();
    check(
        (last.t - 20.0).abs() < 1e-9 && last.x_tilde <= 1e-3 * max,
        format!("|x~(20 s)| = {:.3e}, max {max:.3e}, ratio {:.2e}", last.x_tilde, last.x_tilde / max),
    )
}

fn c5_exponential() -> Outcome {
    let sys = SystemModel::new(
        "att",
        3,
        3,
        Regressor::QuadrotorAttitude { omega: OmegaSignal::Constant { value: 100.0 } },
        BoxBounds::unbounded(3),
        BoxBounds::unbounded(3),
    )
    .map_err(|e| e.to_string())?;
    let k = QuadrotorConstants::default();
    let bar = attitude_params(&k, -2.5e-3, 5e-3);
    let hat = attitude_params(&k, -4.5e-3, 2.5e-3);
    let gain = 2.0;
    let ctx = ControlContext::new(&sys, bar.clone(), gain).map_err(|e| e.to_string())?;
    let ubar = |t: f64| DVector::from_vec(vec![0.03 * (1.7 * t).sin(), 0.02 * (0.9 * t).cos(), 0.01]);
    let e0 = DVector::from_vec(vec![0.04, -0.05, 0.03]);
    let xb0 = DVector::from_vec(vec![0.2, -0.1, 0.05]);
    let mut y = DVector::zeros(6);
    y.rows_mut(0, 3).copy_from(&(&xb0 + &e0));
    y.rows_mut(3, 3).copy_from(&xb0);
    let mut f = |t: f64, y: &DVector<f64>| -> alp_core::Result<DVector<f64>> {
        let xh = y.rows(0, 3).into_owned();
        let xb = y.rows(3, 3).into_owned();
        let ub = ubar(t);
        let uh = combined_uhat(&ctx, t, &xh, &xb, &ub, &hat, &xh)?;
        let mut d = DVector::zeros(6);
        d.rows_mut(0, 3).copy_from(&eval_dynamics(&sys, &hat, t, &xh, &uh)?);
        d.rows_mut(3, 3).copy_from(&eval_dynamics(&sys, &bar, t, &xb, &ub)?);
        Ok(d)
    };
    let dt = 1e-3;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for step in 1..=2000usize {
        y = rk4_step(&mut f, (step - 1) as f64 * dt, &y, dt).map_err(|e| e.to_string())?;
        if [500, 1000, 2000].contains(&step) {
            let t = step as f64 * dt;
            let e = (y.rows(0, 3) - y.rows(3, 3)).norm();
            let expect = e0.norm() * (-gain * t).exp();
            let rel = (e - expect).abs() / expect;
            worst = worst.max(rel);
            parts.push(format!("t={t}: rel err {rel:.1e}"));
        }
    }
    check(worst < 1e-2, parts.join(", "))
}

fn c6_tube(campaign: &CampaignReport) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for r in &campaign.records {
        ok &= r.max_tube_dev <= r.delta + 1e-6 && r.tube_ok;
    }
    let worst = campaign.records.iter().map(|r| r.max_tube_dev / r.delta).fold(0.0, f64::max);
    parts.push(format!("campaign: max dev/δ {worst:.2e}"));
    // the bundled truth coincides with the nominal; also fly a mismatched truth
    let mut sc = Scenario::drone_default();
    sc.true_theta = attitude_params(&sc.constants, -1e-3, 3.5e-3);
    let prep = prepare(&sc).map_err(|e| e.to_string())?;
    let (r, _, _) = run_execution(&prep, 1, None, None).map_err(|e| e.to_string())?;
    ok &= r.max_tube_dev <= r.delta + 1e-6 && r.tube_ok;
    parts.push(format!("mismatched truth: dev {:.3e} <= δ {:.4e}", r.max_tube_dev, r.delta));
    check(ok, parts.join("; "))
}

fn c7_primitives() -> Outcome {
    let prep = prepare(&Scenario::drone_default()).map_err(|e| e.to_string())?;
    let lib = full_library(&prep).map_err(|e| e.to_string())?;
    let gaps = lib.verify_all().map_err(|e| e.to_string())?;
    let worst = gaps.iter().cloned().fold(0.0, f64::max);
    let failed = lib.report.iter().filter(|r| !r.ok).count();
    let (sys, th) = double_integrator();
    let s = solve_primitive_bvp(
        &sys,
        &th,
        &DVector::from_vec(vec![0.0, 0.0]),
        &DVector::from_vec(vec![1.0, 0.0]),
        &RunningCost::identity(1),
        &free(),
        &BvpConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let dp = dp_oracle(0.1, 0.1, 1.5, 1.0);
    let rel = (s.cost - dp).abs() / dp;
    check(
        failed == 0 && gaps.len() == lib.report.len() && gaps.iter().all(|g| *g <= ENDPOINT_TOL_GRID) && rel < 0.02,
        format!(
            "{} entries, worst re-integration gap {worst:.2e} grid units; double integrator {:.5} vs DP {dp:.5} ({:.2}%)",
            gaps.len(),
            s.cost,
            100.0 * rel
        ),
    )
}

fn c8_optimality() -> Outcome {
    let lat = grid10();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut solved, mut blocked) = (0, 0);
    for k in 0..20 {
        let (prims, ws, start, goal) = random_planning_instance(&lat, &mut rng);
        let refs: Vec<&MotionPrimitive> = prims.iter().collect();
        let q = PlanQuery { lattice: &lat, primitives: &refs, workspace: &ws, delta: 0.0, nominal_id: 0 };
        match (q.plan(&start, &goal), q.dijkstra(&start, &goal)) {
            (Ok(a), Ok(d)) if a.total_cost == d.total_cost => solved += 1,
            (Err(Error::NoPath), Err(Error::NoPath)) => blocked += 1,
            (a, d) => return Err(format!("instance {k}: A* {:?} vs Dijkstra {:?}", a.map(|p| p.total_cost), d.map(|p| p.total_cost))),
        }
    }
    check(true, format!("20 lattices: {solved} equal costs, {blocked} both without path"))
}

fn c9_campaign(campaign: &CampaignReport) -> Outcome {
    let costs: Vec<f64> = campaign.records.iter().map(|r| r.plan_cost).collect();
    let non_increasing = costs.windows(2).all(|w| w[1] <= w[0]);
    let strict = costs.windows(2).any(|w| w[1] < w[0]);
    let ratio = campaign.final_diam() / campaign.diam_psi;
    check(
        campaign.records.len() == 9 && non_increasing && strict && ratio < 0.5,
        format!("costs {}; final diam/diam(Ψ) = {:.3}", costs.iter().map(|c| format!("{c:.3}")).collect::<Vec<_>>().join(" "), ratio),
    )
}

fn c10_projection() -> Outcome {
    let psi = quad_psi();
    let k = QuadrotorConstants::default();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let res = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let c = [rng.random_range(-1.5e-2..1e-2), rng.random_range(-5e-3..1.5e-2)];
        let m = attitude_params(&k, c[0], c[1]);
        let p = psi.project(&m).map_err(|e| e.to_string())?;
        if p != clamp_oracle(&psi, &m) {
            return Err(format!("point {i} {c:?}: projection differs from clamping"));
        }
        let (p1, p2) = attitude_uncertain(&p);
        let g = grid_projection(c, res);
        worst = worst.max((p1 - g[0]).abs()).max((p2 - g[1]).abs());
    }
    check(worst <= res, format!("100 points equal clamping; largest grid deviation {worst:.2e} (resolution {res:.0e})"))
}

fn c11_determinism(sc: &Scenario) -> (Outcome, Option<CampaignReport>) {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut reports = Vec::new();
    for d in &dirs {
        match run_campaign(sc, &CampaignOptions { out_dir: Some(d.path()), ..Default::default() }) {
            Ok(r) => reports.push(r),
            Err(e) => return (Err(format!("campaign failed: {e}")), None),
        }
    }
    let a = std::fs::read(dirs[0].path().join("metrics.csv")).unwrap();
    let b = std::fs::read(dirs[1].path().join("metrics.csv")).unwrap();
    let outcome = check(a == b && !a.is_empty(), format!("metrics.csv {} bytes, identical: {}", a.len(), a == b));
    (outcome, reports.pop())
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let base = run_identification(&IdentificationConfig::default()).expect("identification run");
    results.push(("1 diameter non-increasing", c1_monotone(&base)));
    results.push(("2 truth stays in S(t)", c2_membership(&base)));
    results.push(("3 output error bound", c3_bound(&base)));
    results.push(("4 identification convergence", c4_convergence()));
    results.push(("5 exponential tracking", c5_exponential()));
    let (det, campaign) = c11_determinism(&Scenario::drone_default());
    match &campaign {
        Some(c) => {
            results.push(("6 tube containment", c6_tube(c)));
        }
        None => results.push(("6 tube containment", Err("campaign unavailable".into()))),
    }
    results.push(("7 primitive fidelity", c7_primitives()));
    results.push(("8 planner optimality", c8_optimality()));
    match &campaign {
        Some(c) => results.push(("9 campaign improvement", c9_campaign(c))),
        None => results.push(("9 campaign improvement", Err("campaign unavailable".into()))),
    }
    results.push(("10 projection oracle", c10_projection()));
    results.push(("11 determinism", det));
    results.sort_by_key(|(name, _)| name.split(' ').next().unwrap().parse::<u32>().unwrap());

    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(d) => println!("PASS criterion {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {name}: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {} failed in {:.1} s", results.len() - failed, failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
