//! Pipeline configuration: one TOML file, overridable by flags. Unknown
//! keys are rejected; relative paths resolve against the config file's
//! directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use genxss_core::corpus::AttackType;
use genxss_core::harness::RemoteTarget;
use genxss_core::llm::{ProviderConfig, ProviderKind};

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub provider: ProviderSection,
    pub paths: PathsSection,
    pub generation: GenerationSection,
    pub clustering: ClusteringSection,
    pub refine: RefineSection,
    pub app: AppSection,
    pub harness: HarnessSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProviderSection {
    pub kind: String,
    pub model: String,
    pub temperature: f64,
    pub endpoint: String,
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub retry_base_ms: u64,
    pub mock_dir: String,
}

impl Default for ProviderSection {
    fn default() -> Self {
        ProviderSection {
            kind: "mock".into(),
            model: "gpt-4o".into(),
            temperature: 0.7,
            endpoint: String::new(),
            api_key_env: "GENXSS_LLM_API_KEY".into(),
            timeout_secs: 30,
            max_retries: 3,
            retry_base_ms: 500,
            mock_dir: "mock".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    pub work_dir: String,
    pub examples: String,
    pub benign: String,
    pub ruleset: String,
    pub routes: String,
    pub annotations: String,
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection {
            work_dir: "out".into(),
            examples: "corpus/examples.jsonl".into(),
            benign: "corpus/benign.jsonl".into(),
            ruleset: "rules/mini-crs.conf".into(),
            routes: "app/routes.toml".into(),
            annotations: String::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerationSection {
    pub count: usize,
    pub attack_type: String,
    pub obfuscation_techniques: Vec<String>,
}

impl Default for GenerationSection {
    fn default() -> Self {
        GenerationSection {
            count: 24,
            attack_type: "reflected".into(),
            obfuscation_techniques: vec![
                "JavaScript unicode escapes for function names".into(),
                "percent-encoded CR/LF and comment insertions between tokens".into(),
                "context breaking with a closing quote and statement separator".into(),
                "trailing single-line comments to neutralize remaining code".into(),
                "avoiding bare angle brackets and the literal names of flagged functions".into(),
            ],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusteringSection {
    pub method: String,
    pub ward_threshold: f64,
    pub eps: f64,
    pub min_samples: usize,
}

impl Default for ClusteringSection {
    fn default() -> Self {
        ClusteringSection {
            method: "tfidf_hac".into(),
            ward_threshold: 1.8,
            eps: 0.1,
            min_samples: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefineSection {
    pub max_iterations: usize,
    pub target_recall: f64,
    pub max_fp: u64,
    pub sample_count: usize,
}

impl Default for RefineSection {
    fn default() -> Self {
        RefineSection {
            max_iterations: 5,
            target_recall: 0.85,
            max_fp: 0,
            sample_count: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AppSection {
    pub bind: String,
}

impl Default for AppSection {
    fn default() -> Self {
        AppSection {
            bind: "127.0.0.1:8282".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarnessSection {
    pub target: String,
    pub url: String,
    pub param: String,
    pub concurrency: usize,
    pub timeout_secs: u64,
    pub blocked_statuses: Vec<u16>,
    pub reflection_marker: String,
}

impl Default for HarnessSection {
    fn default() -> Self {
        HarnessSection {
            target: "embedded".into(),
            url: String::new(),
            param: "p16".into(),
            concurrency: 8,
            timeout_secs: 10,
            blocked_statuses: vec![403, 406],
            reflection_marker: String::new(),
        }
    }
}

/// A loaded config plus the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub config: PipelineConfig,
    base_dir: PathBuf,
}

impl ResolvedConfig {
    /// Load from `path`; a missing file yields defaults rooted at the
    /// current directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        if !path.exists() {
            return Ok(ResolvedConfig {
                config: PipelineConfig::default(),
                base_dir: PathBuf::from("."),
            });
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let config: PipelineConfig = toml::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base_dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(ResolvedConfig { config, base_dir })
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        let path = Path::new(relative);
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn work_dir(&self) -> PathBuf {
        self.resolve(&self.config.paths.work_dir)
    }

    pub fn provider(&self) -> Result<ProviderConfig, CliError> {
        let section = &self.config.provider;
        let kind = match section.kind.as_str() {
            "mock" => ProviderKind::Mock,
            "openai" => ProviderKind::OpenAi,
            "gemini" => ProviderKind::Gemini,
            other => return Err(CliError::config(format!("unknown provider kind {other:?}"))),
        };
        let provider = ProviderConfig {
            kind,
            endpoint: section.endpoint.clone(),
            model: section.model.clone(),
            temperature: section.temperature,
            api_key_env: section.api_key_env.clone(),
            timeout_secs: section.timeout_secs,
            max_retries: section.max_retries,
            retry_base_ms: section.retry_base_ms,
            mock_dir: (kind == ProviderKind::Mock).then(|| self.resolve(&section.mock_dir)),
        };
        provider.validate().map_err(CliError::from)?;
        Ok(provider)
    }

    pub fn attack_type(&self) -> Result<AttackType, CliError> {
        parse_attack_type(&self.config.generation.attack_type)
    }

    pub fn remote_target(&self, url_override: Option<&str>) -> Result<RemoteTarget, CliError> {
        let url = url_override.unwrap_or(&self.config.harness.url);
        if url.is_empty() {
            return Err(CliError::config(
                "remote target requires a base URL (--url or [harness].url)".into(),
            ));
        }
        let section = &self.config.harness;
        let mut target = RemoteTarget::new(url, &section.reflection_marker);
        target.blocked_statuses = section
            .blocked_statuses
            .iter()
            .copied()
            .collect::<BTreeSet<u16>>();
        target.param = section.param.clone();
        target.concurrency = section.concurrency;
        target.timeout = Duration::from_secs(section.timeout_secs);
        Ok(target)
    }
}

pub fn parse_attack_type(name: &str) -> Result<AttackType, CliError> {
    match name {
        "reflected" => Ok(AttackType::Reflected),
        "dom_based" => Ok(AttackType::DomBased),
        other => Err(CliError::usage(format!(
            "unknown attack type {other:?} (expected reflected or dom_based)"
        ))),
    }
}
