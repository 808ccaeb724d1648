//! Multi-execution campaigns with identifier carry-over and artifact output.

use super::execution::{prepare, run_execution, ExecutionRecord, Prepared};
use super::scenario::Scenario;
use super::svg::campaign_svg;
use crate::adaptive_id::IdentifierState;
use crate::error::{Error, Result};
use crate::numfmt::{sig17, to_exact_json};
use crate::primitives::library::PrimitiveLibrary;
use serde::Serialize;
use std::path::Path;

/// Header of the metrics CSV.
pub const METRICS_HEADER: &str = "execution,diam_start,diam_end,delta,plan_cost,max_tube_dev";

/// Per-execution records plus campaign-level metrics.
#[derive(Debug, Clone, Serialize)]
pub struct CampaignReport {
    pub label: String,
    pub seed: u64,
    pub diam_psi: f64,
    pub records: Vec<ExecutionRecord>,
    /// Whether every execution kept the tube-containment invariant.
    pub all_tubes_ok: bool,
    pub plan_cost_non_increasing: bool,
    pub diam_non_increasing: bool,
    #[serde(skip)]
    pub final_identifier: Option<IdentifierState>,
}

impl CampaignReport {
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from(METRICS_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.execution,
                sig17(r.diam_start),
                sig17(r.diam_end),
                sig17(r.delta),
                sig17(r.plan_cost),
                sig17(r.max_tube_dev)
            ));
        }
        out
    }

    pub fn final_diam(&self) -> f64 {
        self.records.last().map_or(self.diam_psi, |r| r.diam_end)
    }
}

/// Options controlling campaign output.
#[derive(Debug, Clone, Default)]
pub struct CampaignOptions<'a> {
    /// Overrides the scenario's execution count.
    pub executions: Option<usize>,
    /// Overrides the scenario's seed.
    pub seed: Option<u64>,
    /// Directory receiving CSV/JSON artifacts.
    pub out_dir: Option<&'a Path>,
    pub emit_plots: bool,
}

/// Runs the executions in sequence, carrying the identifier (and the
/// primitive library as a warm start) from one execution to the next.
pub fn run_campaign(scenario: &Scenario, opts: &CampaignOptions<'_>) -> Result<CampaignReport> {
    let mut sc = scenario.clone();
    if let Some(n) = opts.executions {
        sc.executions = n;
    }
    if let Some(s) = opts.seed {
        sc.seed = s;
    }
    let prep = prepare(&sc)?;
    run_prepared(&prep, opts)
}

/// As [`run_campaign`] with already-prepared models. The seed override is
/// ignored here because `Ψ_d` has already been sampled.
pub fn run_prepared(prep: &Prepared, opts: &CampaignOptions<'_>) -> Result<CampaignReport> {
    let sc = &prep.scenario;
    let executions = opts.executions.unwrap_or(sc.executions);
    if executions == 0 {
        return Err(Error::Scenario("executions must be at least 1".into()));
    }
    if let Some(dir) = opts.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut carried: Option<IdentifierState> = None;
    let mut library: Option<PrimitiveLibrary> = None;
    let mut records = Vec::with_capacity(executions);
    for e in 1..=executions {
        let (rec, id, lib) = run_execution(prep, e, carried.take(), library.as_ref())?;
        if let Some(dir) = opts.out_dir {
            rec.trajectory.write_csv(&dir.join(format!("execution_{e:02}.csv")))?;
            rec.reference.write_csv(&dir.join(format!("execution_{e:02}_reference.csv")))?;
            std::fs::write(dir.join(format!("plan_{e:02}.json")), rec.plan.to_json()?)?;
        }
        records.push(rec);
        carried = Some(id);
        library = Some(lib);
    }
    let report = CampaignReport {
        label: sc.label.clone(),
        seed: sc.seed,
        diam_psi: prep.psi.diam(),
        all_tubes_ok: records.iter().all(|r| r.tube_ok),
        plan_cost_non_increasing: records.windows(2).all(|w| w[1].plan_cost <= w[0].plan_cost),
        diam_non_increasing: records.windows(2).all(|w| w[1].diam_start <= w[0].diam_start + 1e-8),
        records,
        final_identifier: carried,
    };
    if let Some(dir) = opts.out_dir {
        std::fs::write(dir.join("metrics.csv"), report.metrics_csv())?;
        std::fs::write(dir.join("report.json"), to_exact_json(&report)?)?;
        if opts.emit_plots {
            std::fs::write(dir.join("campaign.svg"), campaign_svg(prep, &report.records))?;
        }
    }
    Ok(report)
}
