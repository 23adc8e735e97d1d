//! Run configuration: defaults, flat `key = value` config files, and CLI
//! overrides.
//!
//! Every config key has a CLI flag of the same name (`q_lo` ↔ `--q-lo`).
//! Precedence is defaults < config file < flags.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use arcodo_core::association::AssociationConfig;
use arcodo_core::simulator::Segment;
use arcodo_core::solvers::{SolverConfig, SolverMethod};
use arcodo_core::MotionParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config {path}: {msg}")]
    File { path: PathBuf, msg: String },
    #[error("config: {0}")]
    Invalid(String),
}

/// Segment-length ladder used on real-scale sequences.
pub const DEFAULT_SEGMENT_LENGTHS: [f64; 8] = [100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0];
/// Sensor reach used when simulating, meters.
pub const DEFAULT_MAX_RANGE: f64 = 165.0;
pub const DEFAULT_STEP_PERIOD: f64 = 0.25;

/// In-process simulation settings; present when a trajectory is configured.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub landmark_count: usize,
    pub extent: f64,
    pub max_range: f64,
    pub trajectory: Vec<Segment>,
    pub step_period: f64,
    pub sigma_range: f64,
    pub sigma_bearing: f64,
}

/// Everything a pipeline run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scans_path: Option<PathBuf>,
    pub ground_truth_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub methods: Vec<SolverMethod>,
    pub seed: u64,
    pub q_lo: f64,
    pub q_hi: f64,
    pub ransac_iters: usize,
    pub ransac_base_thresh: f64,
    pub ransac_range_coeff: f64,
    pub association: AssociationConfig,
    pub segment_lengths: Vec<f64>,
    pub sim: Option<SimConfig>,
    /// Fraction of each frame's matches replaced with outliers.
    pub outlier_fraction: f64,
    pub dynamic_count: Option<usize>,
    pub dynamic_speed: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        RunConfig {
            scans_path: None,
            ground_truth_path: None,
            out_dir: PathBuf::from("out"),
            methods: SolverMethod::ALL.to_vec(),
            seed: 0,
            q_lo: solver.q_lo,
            q_hi: solver.q_hi,
            ransac_iters: solver.ransac_iters,
            ransac_base_thresh: solver.ransac_base_thresh,
            ransac_range_coeff: solver.ransac_range_coeff,
            association: AssociationConfig::default(),
            segment_lengths: DEFAULT_SEGMENT_LENGTHS.to_vec(),
            sim: None,
            outlier_fraction: 0.0,
            dynamic_count: None,
            dynamic_speed: 1.0,
        }
    }
}

impl RunConfig {
    /// Solver configuration for one method; the RNG seed is set per frame by
    /// the pipeline.
    pub fn solver(&self, method: SolverMethod, rng_seed: u64) -> SolverConfig {
        SolverConfig {
            method,
            q_lo: self.q_lo,
            q_hi: self.q_hi,
            ransac_iters: self.ransac_iters,
            ransac_base_thresh: self.ransac_base_thresh,
            ransac_range_coeff: self.ransac_range_coeff,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |msg: String| Err(ConfigError::Invalid(msg));
        if self.methods.is_empty() {
            return err("at least one method is required".into());
        }
        self.solver(SolverMethod::FullSvd, 0)
            .validate()
            .map_err(ConfigError::Invalid)?;
        if self.segment_lengths.is_empty() {
            return err("segment_lengths must not be empty".into());
        }
        if !self.segment_lengths.windows(2).all(|w| w[0] < w[1]) {
            return err(format!("segment_lengths must be strictly increasing: {:?}", self.segment_lengths));
        }
        if self.segment_lengths.iter().any(|&l| l <= 0.0) {
            return err("segment lengths must be positive".into());
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return err(format!("outlier_fraction must lie in [0, 1), got {}", self.outlier_fraction));
        }
        if self.association.gate_radius <= 0.0 || self.association.epsilon <= 0.0 {
            return err("association gate_radius and epsilon must be positive".into());
        }
        if let Some(sim) = &self.sim {
            if sim.landmark_count == 0 || sim.extent <= 0.0 || sim.max_range <= 0.0 {
                return err("simulation needs landmark_count >= 1 and positive extent/max_range".into());
            }
            if sim.trajectory.is_empty() {
                return err("simulation trajectory must have at least one segment".into());
            }
            if sim.sigma_range < 0.0 || sim.sigma_bearing < 0.0 {
                return err("noise sigmas must be non-negative".into());
            }
        }
        for path in [&self.scans_path, &self.ground_truth_path].into_iter().flatten() {
            if !path.exists() {
                return err(format!("input path does not exist: {}", path.display()));
            }
        }
        Ok(())
    }
}

/// Parse `name[,name...]` or `all` into solver methods.
pub fn parse_methods(text: &str) -> Result<Vec<SolverMethod>, ConfigError> {
    if text.trim() == "all" {
        return Ok(SolverMethod::ALL.to_vec());
    }
    text.split(',')
        .map(|name| {
            let name = name.trim();
            SolverMethod::ALL
                .into_iter()
                .find(|m| m.name() == name)
                .ok_or_else(|| {
                    ConfigError::Invalid(format!(
                        "unknown method {name:?} (expected full-svd, ransac, cc-svd, cc-means, or all)"
                    ))
                })
        })
        .collect()
}

pub fn parse_lengths(text: &str) -> Result<Vec<f64>, ConfigError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError::Invalid(format!("bad segment length {part:?}")))
        })
        .collect()
}

/// Parse a trajectory description: comma-separated segments of the form
/// `straight:<step_m>:<steps>` or `arc:<theta_rad>:<r_icr_m>:<steps>`.
pub fn parse_trajectory(text: &str) -> Result<Vec<Segment>, ConfigError> {
    let bad = |part: &str, why: &str| {
        ConfigError::Invalid(format!("bad trajectory segment {part:?}: {why}"))
    };
    text.split(',')
        .map(|part| {
            let part = part.trim();
            let fields: Vec<&str> = part.split(':').collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(part, "expected a number"));
            let count = |s: &str| s.parse::<usize>().map_err(|_| bad(part, "expected a step count"));
            match fields.as_slice() {
                ["straight", step, steps] => Ok(Segment {
                    motion: MotionParams::straight(num(step)?),
                    steps: count(steps)?,
                }),
                ["arc", theta, r_icr, steps] => Ok(Segment {
                    motion: MotionParams::arc(num(theta)?, num(r_icr)?),
                    steps: count(steps)?,
                }),
                _ => Err(bad(part, "expected straight:<step_m>:<steps> or arc:<theta>:<r_icr>:<steps>")),
            }
        })
        .collect()
}

/// Read a flat `key = value` config file. `#` starts a comment; unknown keys
/// are errors.
pub fn read_config_file(path: &Path) -> Result<HashMap<String, String>, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError::File {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    let mut entries = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::File {
                path: path.to_path_buf(),
                msg: format!("line {}: expected `key = value`, got {raw:?}", lineno + 1),
            });
        };
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::File {
                path: path.to_path_buf(),
                msg: format!("line {}: unknown key {key:?}", lineno + 1),
            });
        }
        entries.insert(key, value.trim().to_string());
    }
    Ok(entries)
}

pub const KNOWN_KEYS: &[&str] = &[
    "scans",
    "ground_truth",
    "out_dir",
    "method",
    "seed",
    "q_lo",
    "q_hi",
    "ransac_iters",
    "ransac_base_thresh",
    "ransac_range_coeff",
    "gate_radius",
    "epsilon",
    "cutoff",
    "segment_lengths",
    "landmark_count",
    "extent",
    "max_range",
    "trajectory",
    "step_period",
    "sigma_range",
    "sigma_bearing",
    "outlier_fraction",
    "dynamic_count",
    "dynamic_speed",
];

/// Apply config-file entries over the defaults. Simulation keys collect into
/// a [`SimConfig`] once a trajectory appears.
pub fn apply_entries(cfg: &mut RunConfig, entries: &HashMap<String, String>) -> Result<(), ConfigError> {
    let parse = |key: &str, value: &str| -> Result<f64, ConfigError> {
        value
            .parse::<f64>()
            .map_err(|_| ConfigError::Invalid(format!("key {key}: expected a number, got {value:?}")))
    };
    let parse_int = |key: &str, value: &str| -> Result<u64, ConfigError> {
        value
            .parse::<u64>()
            .map_err(|_| ConfigError::Invalid(format!("key {key}: expected an integer, got {value:?}")))
    };

    let mut sim = cfg.sim.clone().unwrap_or(SimConfig {
        landmark_count: 300,
        extent: 100.0,
        max_range: DEFAULT_MAX_RANGE,
        trajectory: Vec::new(),
        step_period: DEFAULT_STEP_PERIOD,
        sigma_range: 0.0,
        sigma_bearing: 0.0,
    });
    let mut sim_touched = cfg.sim.is_some();

    for (key, value) in entries {
        match key.as_str() {
            "scans" => cfg.scans_path = Some(PathBuf::from(value)),
            "ground_truth" => cfg.ground_truth_path = Some(PathBuf::from(value)),
            "out_dir" => cfg.out_dir = PathBuf::from(value),
            "method" => cfg.methods = parse_methods(value)?,
            "seed" => cfg.seed = parse_int(key, value)?,
            "q_lo" => cfg.q_lo = parse(key, value)?,
            "q_hi" => cfg.q_hi = parse(key, value)?,
            "ransac_iters" => cfg.ransac_iters = parse_int(key, value)? as usize,
            "ransac_base_thresh" => cfg.ransac_base_thresh = parse(key, value)?,
            "ransac_range_coeff" => cfg.ransac_range_coeff = parse(key, value)?,
            "gate_radius" => cfg.association.gate_radius = parse(key, value)?,
            "epsilon" => cfg.association.epsilon = parse(key, value)?,
            "cutoff" => cfg.association.cutoff = parse(key, value)?,
            "segment_lengths" => cfg.segment_lengths = parse_lengths(value)?,
            "outlier_fraction" => cfg.outlier_fraction = parse(key, value)?,
            "dynamic_count" => cfg.dynamic_count = Some(parse_int(key, value)? as usize),
            "dynamic_speed" => cfg.dynamic_speed = parse(key, value)?,
            "landmark_count" => {
                sim.landmark_count = parse_int(key, value)? as usize;
                sim_touched = true;
            }
            "extent" => {
                sim.extent = parse(key, value)?;
                sim_touched = true;
            }
            "max_range" => {
                sim.max_range = parse(key, value)?;
                sim_touched = true;
            }
            "trajectory" => {
                sim.trajectory = parse_trajectory(value)?;
                sim_touched = true;
            }
            "step_period" => {
                sim.step_period = parse(key, value)?;
                sim_touched = true;
            }
            "sigma_range" => {
                sim.sigma_range = parse(key, value)?;
                sim_touched = true;
            }
            "sigma_bearing" => {
                sim.sigma_bearing = parse(key, value)?;
                sim_touched = true;
            }
            other => return Err(ConfigError::Invalid(format!("unknown key {other:?}"))),
        }
    }
    if sim_touched {
        cfg.sim = Some(sim);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn method_lists_parse() {
        assert_eq!(parse_methods("all").unwrap().len(), 4);
        assert_eq!(
            parse_methods("cc-means,full-svd").unwrap(),
            vec![SolverMethod::CcQuantileMeans, SolverMethod::FullSvd]
        );
        assert!(parse_methods("nope").is_err());
    }

    #[test]
    fn trajectory_dsl_parses_both_segment_kinds() {
        let segments = parse_trajectory("straight:1.0:120, arc:0.015:66.7:105").unwrap();
        assert_eq!(segments.len(), 2);
        assert_eq!(segments[0].motion, MotionParams::straight(1.0));
        assert_eq!(segments[0].steps, 120);
        assert_eq!(segments[1].motion, MotionParams::arc(0.015, 66.7));
        assert!(parse_trajectory("arc:1:2").is_err());
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "seed = 7\nwat = 3").unwrap();
        let err = read_config_file(file.path()).unwrap_err();
        assert!(err.to_string().contains("unknown key"), "{err}");
    }

    #[test]
    fn config_file_entries_override_defaults() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            file,
            "# experiment settings\nseed = 9\nq_lo = 0.3\nsegment_lengths = 10,20,30\ntrajectory = straight:1:50"
        )
        .unwrap();
        let entries = read_config_file(file.path()).unwrap();
        let mut cfg = RunConfig::default();
        apply_entries(&mut cfg, &entries).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.q_lo, 0.3);
        assert_eq!(cfg.segment_lengths, vec![10.0, 20.0, 30.0]);
        let sim = cfg.sim.as_ref().expect("trajectory key creates sim config");
        assert_eq!(sim.trajectory.len(), 1);
        assert_eq!(sim.max_range, DEFAULT_MAX_RANGE);
        cfg.validate().unwrap();
    }

    #[test]
    fn strictly_increasing_ladder_is_enforced() {
        let mut cfg = RunConfig::default();
        cfg.segment_lengths = vec![10.0, 10.0];
        assert!(cfg.validate().is_err());
    }
}
