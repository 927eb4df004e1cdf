//! Controller comparison across wind levels and seeds with identical
//! scenarios per variant.

use serde::{Deserialize, Serialize};

use crate::control::ControllerVariant;

use super::runner::{run_scenario, EpisodeArtifacts, MetricsReport, Scenario};
use super::HarnessError;

/// A family of scenarios: the base scenario swept over wind magnitudes
/// (applied equally along x and z), controller variants, and seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareFamily {
    pub name: String,
    pub base: Scenario,
    /// Signed wind values; each w gives freestream (w, 0, 0) and vertical w.
    pub winds: Vec<f64>,
    pub variants: Vec<ControllerVariant>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareEntry {
    pub wind: f64,
    pub variant: String,
    pub seed: u64,
    pub metrics: MetricsReport,
}

/// Per-wind, per-variant aggregate across seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankRow {
    pub wind: f64,
    pub variant: String,
    pub mean_rms_x: f64,
    pub mean_rms_z: f64,
    pub mean_contact_std: Option<f64>,
    pub mean_contact_ratio: Option<f64>,
    pub diverged_runs: usize,
    pub completed_runs: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub name: String,
    pub entries: Vec<CompareEntry>,
    pub ranking: Vec<RankRow>,
}

impl CompareReport {
    /// Aggregate row for one (wind, variant) pair.
    pub fn rank_row(&self, wind: f64, variant: &str) -> Option<&RankRow> {
        self.ranking
            .iter()
            .find(|r| r.wind == wind && r.variant == variant)
    }
}

/// Run every (wind, variant, seed) combination of the family. The same seeds
/// are used across variants so comparisons share environments.
pub fn compare_controllers(
    family: &CompareFamily,
    artifacts: &EpisodeArtifacts,
) -> Result<CompareReport, HarnessError> {
    let mut jobs = Vec::new();
    for &wind in &family.winds {
        for &variant in &family.variants {
            for &seed in &family.seeds {
                let mut sc = family.base.clone();
                sc.name = format!("{}-w{}-{}", family.name, wind, variant.name());
                sc.wind.freestream = [wind, 0.0, 0.0];
                sc.wind.vertical = wind;
                sc.controller = variant;
                sc.seed = seed;
                jobs.push((wind, variant, seed, sc));
            }
        }
    }

    let run = |job: &(f64, ControllerVariant, u64, Scenario)| -> Result<CompareEntry, HarnessError> {
        let (wind, variant, seed, sc) = job;
        let (_, metrics) = run_scenario(sc, artifacts)?;
        Ok(CompareEntry {
            wind: *wind,
            variant: variant.name().into(),
            seed: *seed,
            metrics,
        })
    };

    #[cfg(feature = "parallel")]
    let results: Vec<Result<CompareEntry, HarnessError>> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<CompareEntry, HarnessError>> = jobs.iter().map(run).collect();

    let mut entries = Vec::with_capacity(results.len());
    for r in results {
        entries.push(r?);
    }

    let mut ranking = Vec::new();
    for &wind in &family.winds {
        for &variant in &family.variants {
            let rows: Vec<&CompareEntry> = entries
                .iter()
                .filter(|e| e.wind == wind && e.variant == variant.name())
                .collect();
            let completed: Vec<&&CompareEntry> =
                rows.iter().filter(|e| e.metrics.diverged.is_none()).collect();
            let mean = |f: &dyn Fn(&MetricsReport) -> f64| -> f64 {
                if completed.is_empty() {
                    f64::NAN
                } else {
                    completed.iter().map(|e| f(&e.metrics)).sum::<f64>() / completed.len() as f64
                }
            };
            let contact_stats = completed
                .iter()
                .filter_map(|e| e.metrics.contact_std_normal)
                .collect::<Vec<_>>();
            let contact_ratio = completed
                .iter()
                .filter_map(|e| e.metrics.contact_ratio)
                .collect::<Vec<_>>();
            ranking.push(RankRow {
                wind,
                variant: variant.name().into(),
                mean_rms_x: mean(&|m| m.rms_pos[0]),
                mean_rms_z: mean(&|m| m.rms_pos[2]),
                mean_contact_std: if contact_stats.is_empty() {
                    None
                } else {
                    Some(contact_stats.iter().sum::<f64>() / contact_stats.len() as f64)
                },
                mean_contact_ratio: if contact_ratio.is_empty() {
                    None
                } else {
                    Some(contact_ratio.iter().sum::<f64>() / contact_ratio.len() as f64)
                },
                diverged_runs: rows.len() - completed.len(),
                completed_runs: completed.len(),
            });
        }
    }

    Ok(CompareReport { name: family.name.clone(), entries, ranking })
}
