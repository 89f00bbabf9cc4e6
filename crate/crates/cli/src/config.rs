//! Experiment configuration files (TOML).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use discoctx::analysis::{DeltaDefinition, MatchLevel};
use discoctx::context::ContextScheme;
use discoctx::inference::{BaselineKind, EndpointConfig};
use discoctx::treebank::Split;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    /// SciDTB-style JSON `.dep` files.
    #[default]
    Dep,
    /// Tab-separated `id head relation text` rows.
    Tsv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub name: String,
    pub path: PathBuf,
    #[serde(default)]
    pub format: CorpusFormat,
    /// Skip documents that fail validation instead of stopping.
    #[serde(default)]
    pub lenient: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackendConfig {
    Baseline {
        name: String,
        baseline: BaselineKind,
        /// Share of the training split each run trains on, drawn with the
        /// run's seed.
        #[serde(default = "one")]
        train_fraction: f64,
    },
    Endpoint {
        name: String,
        #[serde(default)]
        endpoint: EndpointConfig,
    },
    Import {
        name: String,
        /// Path template with `{corpus}`, `{scheme}` and `{seed}`
        /// placeholders.
        predictions: String,
    },
}

fn one() -> f64 {
    1.0
}

impl BackendConfig {
    pub fn name(&self) -> &str {
        match self {
            BackendConfig::Baseline { name, .. }
            | BackendConfig::Endpoint { name, .. }
            | BackendConfig::Import { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Reference condition; its wins are the other condition's losses.
    pub a: ContextScheme,
    pub b: ContextScheme,
    pub lexicon: Option<PathBuf>,
    #[serde(default)]
    pub level: MatchLevel,
    #[serde(default)]
    pub multiword: bool,
    #[serde(default)]
    pub delta: DeltaDefinition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub output_dir: Option<PathBuf>,
    /// One run per seed; seeds double as run ids.
    pub seeds: Vec<u64>,
    pub schemes: Vec<ContextScheme>,
    /// Scheme every other scheme is tested against.
    #[serde(default = "default_scheme")]
    pub reference: ContextScheme,
    #[serde(default = "test_split")]
    pub eval_split: Split,
    /// Bonferroni family size.
    pub bonferroni_m: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub include_relations: bool,
    pub corpora: Vec<CorpusConfig>,
    pub backends: Vec<BackendConfig>,
    pub analysis: Option<AnalysisConfig>,
}

fn default_scheme() -> ContextScheme {
    ContextScheme::Default
}

fn test_split() -> Split {
    Split::Test
}

fn default_alpha() -> f64 {
    discoctx::evaluation::DEFAULT_ALPHA
}

/// Fills the `{corpus}`, `{scheme}` and `{seed}` placeholders.
pub fn expand_template(template: &str, corpus: &str, scheme: ContextScheme, seed: u64) -> String {
    template
        .replace("{corpus}", corpus)
        .replace("{scheme}", &scheme.to_string())
        .replace("{seed}", &seed.to_string())
}

impl ExperimentConfig {
    /// Parses and validates `path`. Relative paths inside are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve(base);
        config.validate()?;
        Ok(config)
    }

    fn resolve(&mut self, base: &Path) {
        let abs = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        self.output_dir = Some(abs(self.output_dir.as_deref().unwrap_or(Path::new("out"))));
        for c in &mut self.corpora {
            c.path = abs(&c.path);
        }
        for b in &mut self.backends {
            if let BackendConfig::Import { predictions, .. } = b {
                *predictions = abs(Path::new(predictions.as_str())).display().to_string();
            }
        }
        if let Some(a) = &mut self.analysis {
            a.lexicon = a.lexicon.as_deref().map(abs);
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            );
        }
        if self.seeds.is_empty() {
            bail!("seeds must not be empty");
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            bail!("seeds must be distinct");
        }
        if self.schemes.is_empty() {
            bail!("schemes must not be empty");
        }
        if !self.schemes.contains(&self.reference) {
            bail!("reference scheme {} is not among the schemes", self.reference);
        }
        if self.corpora.is_empty() || self.backends.is_empty() {
            bail!("at least one corpus and one backend are required");
        }
        let comparisons = self.comparison_count();
        if self.bonferroni_m < comparisons.max(1) {
            bail!("bonferroni_m = {} but the experiment makes {comparisons} comparisons", self.bonferroni_m);
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            bail!("alpha must lie in (0, 1)");
        }
        let mut names = BTreeSet::new();
        for c in &self.corpora {
            if !names.insert(&c.name) {
                bail!("duplicate corpus name {:?}", c.name);
            }
            if !c.path.is_dir() {
                bail!("corpus {} directory {} does not exist", c.name, c.path.display());
            }
        }
        let mut names = BTreeSet::new();
        for b in &self.backends {
            if !names.insert(b.name()) {
                bail!("duplicate backend name {:?}", b.name());
            }
            if b.name().is_empty() || b.name().contains(['/', '\\', ':']) {
                bail!("backend name {:?} must be non-empty without '/', '\\' or ':'", b.name());
            }
            match b {
                BackendConfig::Baseline { train_fraction, .. } => {
                    if !(*train_fraction > 0.0 && *train_fraction <= 1.0) {
                        bail!("backend {}: train_fraction must lie in (0, 1]", b.name());
                    }
                }
                BackendConfig::Endpoint { endpoint, .. } => {
                    endpoint.validate().map_err(|e| anyhow::anyhow!("backend {}: {e}", b.name()))?;
                }
                BackendConfig::Import { predictions, .. } => {
                    for c in &self.corpora {
                        for s in &self.schemes {
                            for seed in &self.seeds {
                                let p = expand_template(predictions, &c.name, *s, *seed);
                                if !Path::new(&p).is_file() {
                                    bail!("backend {}: prediction file {p} does not exist", b.name());
                                }
                            }
                        }
                    }
                }
            }
        }
        if let Some(a) = &self.analysis {
            for s in [a.a, a.b] {
                if !self.schemes.contains(&s) {
                    bail!("analysis scheme {s} is not among the schemes");
                }
            }
            if let Some(l) = &a.lexicon {
                if !l.is_file() {
                    bail!("lexicon {} does not exist", l.display());
                }
            }
        }
        Ok(())
    }

    /// Scheme-vs-reference tests per corpus and backend.
    pub fn comparison_count(&self) -> usize {
        let others = self.schemes.iter().filter(|s| **s != self.reference).count();
        others * self.corpora.len() * self.backends.len()
    }

    pub fn output_dir(&self) -> &Path {
        self.output_dir.as_deref().expect("resolved at load")
    }

    /// SHA-256 over the canonical JSON form of the resolved config.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
