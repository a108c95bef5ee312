//! Layered run configuration: built-in defaults, then an optional TOML file,
//! then command-line flags.

use std::path::{Path, PathBuf};

use polya_urn::spectral::Tolerances;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_N: u64 = 1024;
pub const DEFAULT_REPS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_P_LIST: [f64; 2] = [2.0, 4.0];
pub const DEFAULT_AUDIT_N: u64 = 200;
pub const DEFAULT_AUDIT_REPS: usize = 100;
pub const DEFAULT_ORACLE_N: u64 = 4;
/// Smallest power of two in the `pow2` grid.
pub const POW2_START: u32 = 6;

/// Checkpoint grid as written by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Checkpoints {
    Named(String),
    List(Vec<u64>),
}

impl Checkpoints {
    pub fn parse_flag(s: &str) -> Result<Self, String> {
        if s == "pow2" {
            return Ok(Checkpoints::Named(s.into()));
        }
        s.split(',')
            .map(|t| t.trim().parse::<u64>().map_err(|_| format!("bad checkpoint {t:?}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Checkpoints::List)
    }

    /// Concrete grid for a run of `n` steps.
    pub fn resolve(&self, n: u64) -> Result<Vec<u64>, CliError> {
        match self {
            Checkpoints::Named(name) if name == "pow2" => Ok(pow2_grid(n)),
            Checkpoints::Named(name) => Err(CliError::Usage(format!(
                "unknown checkpoint grid {name:?}; use pow2 or a comma-separated list"
            ))),
            Checkpoints::List(list) => {
                let mut grid = list.clone();
                grid.sort_unstable();
                grid.dedup();
                if let Some(&bad) = grid.iter().find(|&&c| c > n) {
                    return Err(CliError::Usage(format!("checkpoint {bad} exceeds n = {n}")));
                }
                Ok(grid)
            }
        }
    }
}

/// `{2^6, 2^7, ...} <= n`, plus `n`.
pub fn pow2_grid(n: u64) -> Vec<u64> {
    let mut grid: Vec<u64> = (POW2_START..64).map(|k| 1u64 << k).take_while(|&c| c <= n).collect();
    if grid.last() != Some(&n) {
        grid.push(n);
    }
    grid
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub cluster_tol: Option<f64>,
    pub rank_tol: Option<f64>,
    pub proj_tol: Option<f64>,
}

impl ToleranceConfig {
    pub fn overlay(&self, over: &ToleranceConfig) -> ToleranceConfig {
        ToleranceConfig {
            cluster_tol: over.cluster_tol.or(self.cluster_tol),
            rank_tol: over.rank_tol.or(self.rank_tol),
            proj_tol: over.proj_tol.or(self.proj_tol),
        }
    }

    pub fn resolve(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            cluster_tol: self.cluster_tol.unwrap_or(d.cluster_tol),
            rank_tol: self.rank_tol.unwrap_or(d.rank_tol),
            proj_tol: self.proj_tol.unwrap_or(d.proj_tol),
        }
    }
}

/// Keys accepted in a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub spec: Option<String>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub stats_csv: Option<PathBuf>,
    pub n: Option<u64>,
    pub checkpoints: Option<Checkpoints>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub p_list: Option<Vec<f64>>,
    pub node_budget: Option<usize>,
    pub freezing_k: Option<usize>,
    pub freezing_p: Option<f64>,
    pub hooking: Option<String>,
    pub suite: Option<String>,
    pub budget: Option<String>,
    pub only: Option<Vec<u8>>,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Fully resolved configuration, echoed to stderr and embedded in artifacts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats_csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node_budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freezing_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freezing_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hooking: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub only: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    /// Configuration recorded in an input ensemble file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_config: Option<serde_json::Value>,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            spec: None,
            input: None,
            output: None,
            stats_csv: None,
            n: None,
            checkpoints: None,
            reps: None,
            seed: None,
            threads: None,
            p_list: None,
            node_budget: None,
            freezing_k: None,
            freezing_p: None,
            hooking: None,
            suite: None,
            budget: None,
            only: None,
            tolerances: None,
            source_config: None,
        }
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow2_expansion() {
        assert_eq!(
            pow2_grid(4096),
            vec![64, 128, 256, 512, 1024, 2048, 4096]
        );
        assert_eq!(pow2_grid(5000).last(), Some(&5000));
        assert_eq!(pow2_grid(10), vec![10]);
    }

    #[test]
    fn explicit_lists_are_sorted() {
        let c = Checkpoints::parse_flag("64, 8,64").unwrap();
        assert_eq!(c.resolve(100).unwrap(), vec![8, 64]);
        assert!(c.resolve(10).is_err());
        assert!(Checkpoints::parse_flag("8,x").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("reps = 10\nbogus = 1\n").is_err());
        let cfg: FileConfig = toml::from_str("checkpoints = [8, 64]\n[tolerances]\ncluster_tol = 1e-9\n").unwrap();
        assert_eq!(cfg.checkpoints, Some(Checkpoints::List(vec![8, 64])));
        assert_eq!(cfg.tolerances.cluster_tol, Some(1e-9));
        assert!(toml::from_str::<FileConfig>("[tolerances]\nfoo = 1\n").is_err());
    }
}
