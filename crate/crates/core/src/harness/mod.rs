//! Algorithm loop: scenario ingestion, closed-loop simulation of the true
//! plant, identification runs, executions and multi-execution campaigns.

pub mod campaign;
pub mod closed_loop;
pub mod execution;
pub mod identification;
pub mod plant;
pub mod scenario;
pub mod svg;

pub use campaign::{run_campaign, CampaignOptions, CampaignReport};
pub use execution::{full_library, prepare, run_execution, ExecutionRecord};
pub use identification::{run_identification, IdentificationConfig};
pub use scenario::Scenario;
