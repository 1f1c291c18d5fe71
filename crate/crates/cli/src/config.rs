//! Pipeline configuration: one TOML file, flag overrides, and the content
//! hash that keys every artifact.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use proxyforge::designer::Condition;
use proxyforge::ela::DistributionParams;
use proxyforge::gpgen::GpParams;

/// Landscape-analysis sampling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElaSection {
    /// Design size coefficient: the design has `coef * dim` points.
    pub coef: usize,
    /// Fraction of the design in each feature subsample.
    pub rate: f64,
    /// Number of feature subsamples.
    pub n_subsamples: usize,
    /// Absolute correlation above which a feature is pruned.
    pub threshold_corr: f64,
}

impl Default for ElaSection {
    fn default() -> Self {
        ElaSection { coef: 150, rate: 0.8, n_subsamples: 5, threshold_corr: 0.9 }
    }
}

/// Proxy-evolution parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpSection {
    pub n_pop: usize,
    pub n_gen: usize,
    pub p_c: f64,
    pub p_m: f64,
    pub tournament_k: usize,
    pub min_depth: usize,
    pub max_depth: usize,
    /// Allow stochastic `rand` leaves in evolved expressions.
    pub include_rand: bool,
    /// Proxies kept in the manifest.
    pub top_k: usize,
}

impl Default for GpSection {
    fn default() -> Self {
        GpSection {
            n_pop: 50,
            n_gen: 50,
            p_c: 0.5,
            p_m: 0.1,
            tournament_k: 3,
            min_depth: 3,
            max_depth: 12,
            include_rand: true,
            top_k: 3,
        }
    }
}

/// Configuration-search parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignerSection {
    /// proxy-driven | benchmark-driven | real-world-direct.
    pub condition: String,
    /// Independent searches; the champion is picked across all of them.
    pub sessions: usize,
    /// Proposal-evaluate-accept cycles per session.
    pub iterations: usize,
    /// Inner runs per stand-in objective per candidate.
    pub repetitions: usize,
    /// llm | offline.
    pub proposer: String,
    /// Proposer attempts per iteration before the offline fallback.
    pub proposer_retries: u32,
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the API key.
    pub key_env: String,
    pub timeout_secs: u64,
}

impl Default for DesignerSection {
    fn default() -> Self {
        DesignerSection {
            condition: "proxy-driven".into(),
            sessions: 5,
            iterations: 100,
            repetitions: 3,
            proposer: "offline".into(),
            proposer_retries: 3,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            key_env: "PROXYFORGE_LLM_KEY".into(),
            timeout_secs: 30,
        }
    }
}

/// Final-validation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationSection {
    /// Seeded repetitions per champion on the real target.
    pub runs: usize,
}

impl Default for ValidationSection {
    fn default() -> Self {
        ValidationSection { runs: 10 }
    }
}

/// The whole pipeline configuration. Every field has a default; a config
/// file only overrides what it names, and command-line flags override the
/// file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub problem: String,
    pub master_seed: u64,
    /// Per-run evaluation budget is `budget_coef * dim`.
    pub budget_coef: u64,
    pub out_dir: PathBuf,
    pub ela: ElaSection,
    pub gp: GpSection,
    pub designer: DesignerSection,
    pub validation: ValidationSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            problem: "mini-bragg".into(),
            master_seed: 1,
            budget_coef: 50,
            out_dir: PathBuf::from("out"),
            ela: ElaSection::default(),
            gp: GpSection::default(),
            designer: DesignerSection::default(),
            validation: ValidationSection::default(),
        }
    }
}

/// Flag overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub problem: Option<String>,
    pub condition: Option<String>,
    pub out: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn load(file: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut config = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::usage(format!("cannot read config {}: {e}", path.display()))
                })?;
                toml::from_str(&text).map_err(|e| {
                    CliError::usage(format!("invalid config {}: {e}", path.display()))
                })?
            }
            None => PipelineConfig::default(),
        };
        if let Some(seed) = overrides.seed {
            config.master_seed = seed;
        }
        if let Some(problem) = &overrides.problem {
            config.problem = problem.clone();
        }
        if let Some(condition) = &overrides.condition {
            config.designer.condition = condition.clone();
        }
        if let Some(out) = &overrides.out {
            config.out_dir = out.clone();
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::usage(msg));
        if self.problem.is_empty() {
            return bad("problem must not be empty".into());
        }
        if self.budget_coef == 0 {
            return bad("budget_coef must be positive".into());
        }
        if self.ela.coef < 4 {
            return bad(format!("ela.coef = {} is too small to subsample", self.ela.coef));
        }
        if !(self.ela.rate > 0.0 && self.ela.rate <= 1.0) {
            return bad(format!("ela.rate = {} outside (0, 1]", self.ela.rate));
        }
        if self.ela.n_subsamples == 0 {
            return bad("ela.n_subsamples must be positive".into());
        }
        if !(self.ela.threshold_corr > 0.0 && self.ela.threshold_corr <= 1.0) {
            return bad(format!(
                "ela.threshold_corr = {} outside (0, 1]",
                self.ela.threshold_corr
            ));
        }
        if self.gp.n_pop < 2 || self.gp.n_gen == 0 || self.gp.top_k == 0 {
            return bad("gp.n_pop, gp.n_gen, and gp.top_k must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.gp.p_c) || !(0.0..=1.0).contains(&self.gp.p_m) {
            return bad("gp.p_c and gp.p_m must lie in [0, 1]".into());
        }
        if self.gp.min_depth < 1 || self.gp.min_depth > self.gp.max_depth {
            return bad(format!(
                "gp depth window [{}, {}] is invalid",
                self.gp.min_depth, self.gp.max_depth
            ));
        }
        self.condition()?;
        match self.designer.proposer.as_str() {
            "llm" | "offline" => {}
            other => return bad(format!("unknown proposer '{other}' (expected llm or offline)")),
        }
        if self.designer.sessions == 0
            || self.designer.iterations == 0
            || self.designer.repetitions == 0
        {
            return bad("designer.sessions, iterations, and repetitions must be positive".into());
        }
        if self.validation.runs == 0 {
            return bad("validation.runs must be positive".into());
        }
        Ok(())
    }

    pub fn condition(&self) -> Result<Condition, CliError> {
        self.designer
            .condition
            .parse()
            .map_err(|e| CliError::usage(format!("{e}")))
    }

    /// Per-run evaluation budget for a problem of dimension `dim`.
    pub fn run_budget(&self, dim: usize) -> u64 {
        self.budget_coef * dim as u64
    }

    pub fn distribution_params(&self) -> DistributionParams {
        DistributionParams { n_subsamples: self.ela.n_subsamples, rate: self.ela.rate }
    }

    pub fn gp_params(&self) -> GpParams {
        GpParams {
            n_pop: self.gp.n_pop,
            n_gen: self.gp.n_gen,
            p_c: self.gp.p_c,
            p_m: self.gp.p_m,
            tournament_k: self.gp.tournament_k,
            min_depth: self.gp.min_depth,
            max_depth: self.gp.max_depth,
            include_rand: self.gp.include_rand,
            ..GpParams::default()
        }
    }

    /// Short digest of everything except the output directory. Artifacts
    /// carry it in their filenames, so runs with different settings can
    /// never overwrite each other.
    pub fn hash(&self) -> String {
        let mut keyed = self.clone();
        keyed.out_dir = PathBuf::new();
        let canonical = serde_json::to_string(&keyed).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..4])
    }
}
