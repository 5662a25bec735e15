//! Experiment configuration, read from a TOML file.
//!
//! Every table rejects unknown keys. Sections that an experiment does not use
//! may be omitted; their defaults are listed on the fields below.

use std::path::{Path, PathBuf};

use nelson_core::ModelParams;
use serde::{Deserialize, Serialize};

use crate::error::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SkgRun,
    FreeCompare,
    SemiclassicalScan,
    FockVerify,
    Theorem2Scaling,
    ConvergenceStudy,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::SkgRun,
        Experiment::FreeCompare,
        Experiment::SemiclassicalScan,
        Experiment::FockVerify,
        Experiment::Theorem2Scaling,
        Experiment::ConvergenceStudy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SkgRun => "skg-run",
            Experiment::FreeCompare => "free-compare",
            Experiment::SemiclassicalScan => "semiclassical-scan",
            Experiment::FockVerify => "fock-verify",
            Experiment::Theorem2Scaling => "theorem2-scaling",
            Experiment::ConvergenceStudy => "convergence-study",
        }
    }

    pub fn parse(name: &str) -> Option<Experiment> {
        Experiment::ALL.into_iter().find(|e| e.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OrbitalSpec {
    FermiBall,
    /// Last sample of a binary trajectory (with its JSON sidecar).
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlphaSpec {
    Zero,
    /// Field of the last sample of a binary trajectory.
    File { path: PathBuf },
    /// One mode excited: `α_κ = re + i·im` at lattice momentum `lattice`.
    SingleMode {
        lattice: [i64; 3],
        re: f64,
        #[serde(default)]
        im: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub orbitals: OrbitalSpec,
    pub alpha: AlphaSpec,
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData { orbitals: OrbitalSpec::FermiBall, alpha: AlphaSpec::Zero }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    pub t_final: f64,
    /// Snapped to whole time steps.
    pub interval: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { t_final: 1.0, interval: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropagatorChoice {
    #[default]
    Auto,
    Krylov,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FockSection {
    /// Largest admissible basis dimension.
    pub budget: usize,
    /// Largest admissible coherent-state truncation weight.
    pub truncation_threshold: f64,
    pub propagator: PropagatorChoice,
    /// Number of equally spaced positions for the field Ehrenfest check.
    pub ehrenfest_points: usize,
    /// Trials of the randomized antisymmetry check.
    pub lemma5_trials: usize,
}

impl Default for FockSection {
    fn default() -> Self {
        FockSection {
            budget: nelson_core::fock::DEFAULT_BUDGET,
            truncation_threshold: 1e-6,
            propagator: PropagatorChoice::Auto,
            ehrenfest_points: 4,
            lemma5_trials: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    pub deltas: Vec<f64>,
}

impl Default for ScalingSection {
    fn default() -> Self {
        ScalingSection { deltas: vec![0.4, 0.2, 0.1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    /// Lattice momenta, in units of `2π/L`.
    pub k_list: Vec<[i64; 3]>,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection { k_list: vec![[1, 0, 0], [2, 0, 0], [4, 0, 0]] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSection {
    /// Mean-field time steps, each half the previous.
    pub dts: Vec<f64>,
    /// Sample spacings for the Fock Ehrenfest refinement; empty skips it.
    pub fock_spacings: Vec<f64>,
    /// Final time of the Fock refinement runs.
    pub fock_t_final: f64,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        ConvergenceSection { dts: vec![0.004, 0.002, 0.001, 0.0005], fock_spacings: Vec::new(), fock_t_final: 0.4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub fock: FockSection,
    #[serde(default)]
    pub theorem2: ScalingSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub convergence: ConvergenceSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            seed: 0,
            output_dir: default_output_dir(),
            params: ModelParams::default(),
            initial: InitialData::default(),
            sampling: Sampling::default(),
            fock: FockSection::default(),
            theorem2: ScalingSection::default(),
            scan: ScanSection::default(),
            convergence: ConvergenceSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; relative file paths inside it resolve against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let OrbitalSpec::File { path } = &mut self.initial.orbitals {
            fix(path);
        }
        if let AlphaSpec::File { path } = &mut self.initial.alpha {
            fix(path);
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        self.params.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        let s = &self.sampling;
        if !(s.t_final >= 0.0 && s.t_final.is_finite()) {
            return bad(format!("sampling.t_final must be finite and >= 0, got {}", s.t_final));
        }
        if !(s.interval > 0.0 && s.interval.is_finite()) {
            return bad(format!("sampling.interval must be positive, got {}", s.interval));
        }
        if self.seed > i64::MAX as u64 {
            return bad(format!("seed must fit a TOML integer (<= {}), got {}", i64::MAX, self.seed));
        }
        if self.fock.truncation_threshold < 0.0 {
            return bad("fock.truncation_threshold must be >= 0".into());
        }
        match self.experiment {
            Experiment::Theorem2Scaling => {
                let d = &self.theorem2.deltas;
                if d.len() < 3 {
                    return bad(format!("theorem2.deltas needs at least 3 values, got {}", d.len()));
                }
                if d.iter().any(|v| !(*v > 0.0)) {
                    return bad("theorem2.deltas must be positive".into());
                }
                if d.windows(2).any(|w| w[1] >= w[0]) {
                    return bad("theorem2.deltas must be strictly decreasing".into());
                }
            }
            Experiment::ConvergenceStudy => {
                let d = &self.convergence.dts;
                if d.len() < 4 {
                    return bad(format!("convergence.dts needs at least 4 values, got {}", d.len()));
                }
                if d.windows(2).any(|w| (w[0] / w[1] - 2.0).abs() > 1e-9) {
                    return bad("convergence.dts must halve at each entry".into());
                }
                let f = &self.convergence.fock_spacings;
                if f.windows(2).any(|w| (w[0] / w[1] - 2.0).abs() > 1e-9) {
                    return bad("convergence.fock_spacings must halve at each entry".into());
                }
            }
            _ => {}
        }
        Ok(())
    }
}
