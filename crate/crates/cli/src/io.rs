//! File formats: scenario JSON, result CSVs and the run manifest.
//!
//! All floating-point CSV fields are serialized with nine significant digits
//! so repeated runs produce byte-identical files. Writes go through a
//! temporary file and a rename.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use gridtrade_core::{
    GaConfig, GenSpec, GenerationStats, Microgrid, Role, Scenario, TradeMatrix,
};

/// On-disk scenario document.
///
/// `role` is optional per microgrid: absent roles are classified at load
/// time from the run seed, so one dataset can be replayed under different
/// strategy assignments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub thv: f64,
    pub line_limit: f64,
    pub microgrids: Vec<MicrogridRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicrogridRecord {
    pub id: usize,
    /// Battery level before trading, kWh.
    pub energy: f64,
    pub bt: f64,
    pub st: f64,
    pub capacity: f64,
    pub cycles_remaining: u32,
    pub cycles_max: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
}

impl ScenarioFile {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        ScenarioFile {
            thv: scenario.thv,
            line_limit: scenario.line_limit,
            microgrids: scenario
                .microgrids
                .iter()
                .map(|m| MicrogridRecord {
                    id: m.id,
                    energy: m.energy_initial,
                    bt: m.bt,
                    st: m.st,
                    capacity: m.capacity,
                    cycles_remaining: m.cycles_remaining,
                    cycles_max: m.cycles_max,
                    role: m.role,
                })
                .collect(),
        }
    }

    pub fn into_scenario(self) -> Scenario {
        Scenario {
            thv: self.thv,
            line_limit: self.line_limit,
            microgrids: self
                .microgrids
                .into_iter()
                .map(|r| Microgrid {
                    id: r.id,
                    energy_initial: r.energy,
                    bt: r.bt,
                    st: r.st,
                    capacity: r.capacity,
                    cycles_remaining: r.cycles_remaining,
                    cycles_max: r.cycles_max,
                    role: r.role,
                })
                .collect(),
        }
    }
}

/// Everything needed to reproduce a run and its headline outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub seed: u64,
    /// SHA-256 of the scenario file bytes as read.
    pub scenario_digest: String,
    pub config: GaConfig,
    /// Present when the scenario ships with its generation recipe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_spec: Option<GenSpec>,
    pub duration_secs: f64,
    pub final_stable_count: usize,
    pub final_best_fitness: f64,
}

/// Formats a float with nine significant digits.
pub fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Writes `contents` to `path` via a temporary file and a rename.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating directory {}", parent.display()))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} to {}", tmp.display(), path.display()))?;
    Ok(())
}

pub fn read_scenario_file(path: &Path) -> Result<(ScenarioFile, String)> {
    let bytes =
        fs::read(path).with_context(|| format!("reading scenario {}", path.display()))?;
    let digest = hex_digest(&bytes);
    let file: ScenarioFile = serde_json::from_slice(&bytes)
        .with_context(|| format!("parsing scenario {}", path.display()))?;
    Ok((file, digest))
}

pub fn write_scenario_file(path: &Path, file: &ScenarioFile) -> Result<()> {
    let mut text = serde_json::to_string_pretty(file)?;
    text.push('\n');
    atomic_write(path, &text)
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    atomic_write(path, &text)
}

/// Sidecar path holding the generation recipe next to a scenario file.
pub fn gen_spec_sidecar(scenario_path: &Path) -> PathBuf {
    scenario_path.with_extension("genspec.json")
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub const STATS_HEADER: &str =
    "generation,best_fitness,mean_fitness,diversity,mutation_rate,exploration_pct,exploitation_pct,stable_count_best";

pub fn stats_csv(stats: &[GenerationStats]) -> String {
    let mut out = String::from(STATS_HEADER);
    out.push('\n');
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.generation,
            sig9(s.best_fitness),
            sig9(s.mean_fitness),
            sig9(s.diversity),
            sig9(s.mutation_rate),
            sig9(s.exploration_pct),
            sig9(s.exploitation_pct),
            s.stable_count_best,
        ));
    }
    out
}

/// Header-less matrix dump: row index is the seller, column the buyer.
pub fn matrix_csv(matrix: &TradeMatrix) -> String {
    let n = matrix.n();
    let mut out = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| sig9(matrix.get(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub const SETTLEMENT_HEADER: &str =
    "id,initial_energy,role,final_energy,stable,cycles_consumed";

pub fn settlement_csv(scenario: &Scenario, finals: &[f64], best: &TradeMatrix) -> String {
    let mut out = String::from(SETTLEMENT_HEADER);
    out.push('\n');
    for (mg, &fin) in scenario.microgrids.iter().zip(finals) {
        let cycles_consumed = if mg.is_seller() {
            best.row_sum(mg.id) / mg.capacity
        } else {
            0.0
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            mg.id,
            sig9(mg.energy_initial),
            mg.role.map_or("unassigned", Role::as_str),
            sig9(fin),
            gridtrade_core::is_stable(mg, fin),
            sig9(cycles_consumed),
        ));
    }
    out
}
