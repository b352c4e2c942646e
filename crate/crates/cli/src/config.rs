//! TOML configuration with environment overrides.
//!
//! ```toml
//! [simulator]            # kind = "world" (offline default) | "template" | "openai"
//! kind = "openai"
//! url = "http://localhost:8000/v1"
//! model = "counselor-sim"
//! system_prompt = "You are a crisis counselor."
//!
//! [forecaster]           # kind = "oracle" (offline default) | "constant" | "http"
//! kind = "http"
//! url = "http://localhost:9000"
//!
//! [embedder]             # kind = "hashing" (default) | "http"
//! dim = 64
//!
//! [sampling]
//! n = 10
//! temperature = 0.8
//! max_tokens = 60
//! min_samples = 5
//!
//! [cache]
//! dir = ".pivot-cache"
//!
//! [service]
//! bind = "127.0.0.1:8080"
//! journal_dir = "sessions"
//! calibration_dir = "calibrations"
//! ```
//!
//! Environment variables win over the file: `PIVOT_SIMULATOR_URL`,
//! `PIVOT_SIMULATOR_MODEL`, `PIVOT_FORECASTER_URL`, `PIVOT_EMBEDDER_URL`,
//! `PIVOT_API_KEY`, `PIVOT_CACHE_DIR`, `PIVOT_SERVICE_TOKEN`. Setting a URL
//! switches that backend to its HTTP kind.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use pivot_core::analysis::Backends;
use pivot_core::backends::{
    CachedEmbedder, CachedForecaster, CachedSimulator, ConstantForecaster, DiskCache, Embedder, Forecaster,
    HashingEmbedder, HttpConfig, HttpEmbedder, HttpForecaster, OpenAiSimulator, RetryPolicy, Simulator,
    SimulatorParams, TemplateSimulator,
};
use pivot_core::synthetic::{MovePolicy, OracleForecaster, WorldParams, WorldSimulator};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorldPreset {
    Default,
    Counseling,
}

impl WorldPreset {
    pub fn params(self) -> WorldParams {
        match self {
            WorldPreset::Default => WorldParams::default(),
            WorldPreset::Counseling => WorldParams::counseling(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorSection {
    pub kind: Option<String>,
    pub url: Option<String>,
    pub model: Option<String>,
    pub system_prompt: Option<String>,
    pub api_key: Option<String>,
    pub timeout_ms: Option<u64>,
    /// Reply pool for `kind = "template"`.
    pub replies: Vec<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecasterSection {
    pub kind: Option<String>,
    pub url: Option<String>,
    pub api_key: Option<String>,
    pub timeout_ms: Option<u64>,
    /// Probability for `kind = "constant"`.
    pub probability: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedderSection {
    pub kind: Option<String>,
    pub url: Option<String>,
    pub api_key: Option<String>,
    pub timeout_ms: Option<u64>,
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldSection {
    pub preset: WorldPreset,
}

impl Default for WorldSection {
    fn default() -> Self {
        Self {
            preset: WorldPreset::Counseling,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    pub n: Option<usize>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<usize>,
    pub min_samples: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrySection {
    pub max_retries: Option<u32>,
    pub base_delay_ms: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacheSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSection {
    pub bind: Option<String>,
    pub journal_dir: Option<PathBuf>,
    pub calibration_dir: Option<PathBuf>,
    pub token: Option<String>,
    pub workers: Option<usize>,
    pub max_manual_retries: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub simulator: SimulatorSection,
    pub forecaster: ForecasterSection,
    pub embedder: EmbedderSection,
    pub world: WorldSection,
    pub sampling: SamplingSection,
    pub retry: RetrySection,
    pub cache: CacheSection,
    pub service: ServiceSection,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => Config::default(),
        };
        config.apply_env(&std::env::vars().collect());
        Ok(config)
    }

    pub fn apply_env(&mut self, env: &HashMap<String, String>) {
        let get = |k: &str| env.get(k).filter(|v| !v.is_empty()).cloned();
        if let Some(url) = get("PIVOT_SIMULATOR_URL") {
            self.simulator.url = Some(url);
            self.simulator.kind = Some("openai".into());
        }
        if let Some(model) = get("PIVOT_SIMULATOR_MODEL") {
            self.simulator.model = Some(model);
        }
        if let Some(url) = get("PIVOT_FORECASTER_URL") {
            self.forecaster.url = Some(url);
            self.forecaster.kind = Some("http".into());
        }
        if let Some(url) = get("PIVOT_EMBEDDER_URL") {
            self.embedder.url = Some(url);
            self.embedder.kind = Some("http".into());
        }
        if let Some(key) = get("PIVOT_API_KEY") {
            for slot in [&mut self.simulator.api_key, &mut self.forecaster.api_key, &mut self.embedder.api_key] {
                slot.get_or_insert_with(|| key.clone());
            }
        }
        if let Some(dir) = get("PIVOT_CACHE_DIR") {
            self.cache.dir = Some(dir.into());
        }
        if let Some(token) = get("PIVOT_SERVICE_TOKEN") {
            self.service.token = Some(token);
        }
    }

    /// Sampling parameters; `seed` (from the command line) overrides the file.
    pub fn params(&self, seed: Option<u64>) -> SimulatorParams {
        let d = SimulatorParams::default();
        let n = self.sampling.n.unwrap_or(d.n);
        SimulatorParams {
            n,
            temperature: self.sampling.temperature.unwrap_or(d.temperature),
            max_tokens: self.sampling.max_tokens.unwrap_or(d.max_tokens),
            seed: seed.or(self.sampling.seed),
            min_samples: self.sampling.min_samples.unwrap_or(d.min_samples.min(n)),
        }
    }

    pub fn retry(&self) -> RetryPolicy {
        let d = RetryPolicy::default();
        RetryPolicy {
            max_retries: self.retry.max_retries.unwrap_or(d.max_retries),
            base_delay_ms: self.retry.base_delay_ms.unwrap_or(d.base_delay_ms),
        }
    }

    pub fn world(&self) -> WorldParams {
        self.world.preset.params()
    }

    pub fn backends(&self, with_embedder: bool) -> Result<Backends> {
        let cache = match &self.cache.dir {
            Some(dir) => Some(Arc::new(
                DiskCache::open(dir).with_context(|| format!("opening cache {}", dir.display()))?,
            )),
            None => None,
        };
        let simulator = self.simulator()?;
        let forecaster = self.forecaster()?;
        let embedder = if with_embedder { Some(self.embedder()?) } else { None };
        Ok(match cache {
            Some(cache) => Backends {
                simulator: Arc::new(CachedSimulator::new(simulator, cache.clone())),
                forecaster: Arc::new(CachedForecaster::new(forecaster, cache.clone())),
                embedder: embedder.map(|e| Arc::new(CachedEmbedder::new(e, cache)) as Arc<dyn Embedder>),
            },
            None => Backends {
                simulator,
                forecaster,
                embedder,
            },
        })
    }

    fn simulator(&self) -> Result<Arc<dyn Simulator>> {
        let s = &self.simulator;
        Ok(match s.kind.as_deref().unwrap_or("world") {
            "world" => Arc::new(WorldSimulator::new(&self.world(), MovePolicy::Uniform)),
            "template" => {
                if s.replies.is_empty() {
                    bail!("simulator kind \"template\" needs a non-empty `replies` list");
                }
                Arc::new(TemplateSimulator::new("template", s.replies.clone()))
            }
            "openai" => {
                let url = s.url.clone().context("simulator kind \"openai\" needs `url`")?;
                let model = s.model.clone().context("simulator kind \"openai\" needs `model`")?;
                Arc::new(OpenAiSimulator::new(http(url, &s.api_key, s.timeout_ms), model, s.system_prompt.clone())?)
            }
            other => bail!("unknown simulator kind {other:?}"),
        })
    }

    fn forecaster(&self) -> Result<Arc<dyn Forecaster>> {
        let f = &self.forecaster;
        Ok(match f.kind.as_deref().unwrap_or("oracle") {
            "oracle" => Arc::new(OracleForecaster::new(self.world())),
            "constant" => Arc::new(ConstantForecaster::new(f.probability.unwrap_or(0.5))),
            "http" => {
                let url = f.url.clone().context("forecaster kind \"http\" needs `url`")?;
                Arc::new(HttpForecaster::new(http(url, &f.api_key, f.timeout_ms))?)
            }
            other => bail!("unknown forecaster kind {other:?}"),
        })
    }

    fn embedder(&self) -> Result<Arc<dyn Embedder>> {
        let e = &self.embedder;
        Ok(match e.kind.as_deref().unwrap_or("hashing") {
            "hashing" => Arc::new(HashingEmbedder::new(e.dim.unwrap_or(64))),
            "http" => {
                let url = e.url.clone().context("embedder kind \"http\" needs `url`")?;
                Arc::new(HttpEmbedder::new(http(url, &e.api_key, e.timeout_ms))?)
            }
            other => bail!("unknown embedder kind {other:?}"),
        })
    }
}

fn http(url: String, api_key: &Option<String>, timeout_ms: Option<u64>) -> HttpConfig {
    let mut config = HttpConfig::new(url);
    config.api_key = api_key.clone();
    if let Some(t) = timeout_ms {
        config.timeout_ms = t;
    }
    config
}
