//! Run manifests and per-shot CSV export.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analysis::{empirical_distribution, OutcomeHistogram, VerificationReport};
use crate::config::{matrix_to_json, Amplitude, ConfigFile};
use crate::error::Result;
use crate::protocol::{ChainConfig, Stage, Trajectory};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Post-collapse particle state for one device reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapsedMatrix {
    pub outcome_index: usize,
    pub matrix: Vec<Vec<Amplitude>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedMatrices {
    /// Particle state after step 1, before readout.
    pub before: Vec<Vec<Amplitude>>,
    /// One entry per observed reading, ascending.
    pub after: Vec<CollapsedMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ConfigFile,
    pub artifact_version: String,
    pub timestamp: String,
    pub report: VerificationReport,
    pub histogram: OutcomeHistogram,
    pub reduced_matrices: ReducedMatrices,
}

impl RunManifest {
    pub fn new(config: &ChainConfig, trajectories: &[Trajectory], report: VerificationReport) -> Result<Self> {
        let histogram = empirical_distribution(trajectories)?;
        let before = trajectories[0]
            .record(Stage::Entangled)
            .expect("entangled record")
            .particle_reduced
            .to_rows();
        let mut after = BTreeMap::new();
        for t in trajectories {
            after.entry(t.outcome().outcome_index).or_insert_with(|| {
                t.record(Stage::Collapsed)
                    .expect("collapsed record")
                    .particle_reduced
                    .to_rows()
            });
        }
        Ok(Self {
            config: ConfigFile::from_config(config),
            artifact_version: ARTIFACT_VERSION.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            report,
            histogram,
            reduced_matrices: ReducedMatrices {
                before: matrix_to_json(&before),
                after: after
                    .into_iter()
                    .map(|(outcome_index, rows)| CollapsedMatrix {
                        outcome_index,
                        matrix: matrix_to_json(&rows),
                    })
                    .collect(),
            },
        })
    }

    pub fn passed(&self) -> bool {
        self.report.all_passed()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        let r = &self.report;
        let mut s = format!(
            "d={} depth={} shots={} seed={}\n",
            self.config.dimension, self.config.chain_depth, self.config.shots, self.config.seed
        );
        s += &format!("  histogram        {:?}\n", self.histogram.counts);
        s += &format!("  born probs       {:?}\n", r.born_probabilities);
        s += &format!("  born TV          {:.3e} (max {:.3e})\n", r.born_tv_distance, r.born_tv_max);
        s += &format!("  chi-square       {:.4} (p = {:.4e}, dof {})\n", r.chi_square_stat, r.chi_square_pvalue, r.chi_square_dof);
        if let Some(c) = r.correlation_rate {
            s += &format!("  correlation      {c}\n");
        }
        s += &format!("  purity           before {:.6}, after (min) {:.12}\n", r.purity_before, r.purity_after);
        s += &format!(
            "  no-signaling     TV {:.3e} (bound {:.3e}), algebraic {:.3e}\n",
            r.no_signaling_tv, r.no_signaling_tv_bound, r.no_signaling_algebraic
        );
        for (name, ok) in &r.pass_flags {
            s += &format!("  [{}] {name}\n", if *ok { "PASS" } else { "FAIL" });
        }
        s
    }
}

/// Writes `shot,outcome_k,eigenvalue,particle_outcome`; the last column is
/// empty when the particle was not measured.
pub fn write_trajectories_csv<W: Write>(mut out: W, trajectories: &[Trajectory]) -> std::io::Result<()> {
    writeln!(out, "shot,outcome_k,eigenvalue,particle_outcome")?;
    for t in trajectories {
        let o = t.outcome();
        let particle = t
            .final_particle_measurement
            .map(|m| m.outcome_index.to_string())
            .unwrap_or_default();
        writeln!(out, "{},{},{},{}", t.shot_index, o.outcome_index, o.eigenvalue, particle)?;
    }
    Ok(())
}
