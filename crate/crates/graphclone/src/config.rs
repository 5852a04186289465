//! Flat `key=value` run configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use graphclone_core::detect::{SimilarityQuery, DEFAULT_TILE_SIZE};
use graphclone_core::embed::EmbedConfig;
use graphclone_core::graph::{FeatureSet, WeightTransform};

use crate::corpus::SplitMode;

/// Every stage parameter of an end-to-end run. Defaults are both feature
/// graphs, 64 dimensions and threshold 0.7.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub root: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub mode: SplitMode,
    pub ext: String,
    pub features: FeatureSet,
    pub weight_transform: WeightTransform,
    pub embed: EmbedConfig,
    pub threshold: f64,
    pub tile_size: usize,
    pub topk: Option<usize>,
    pub pairs: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub individual: Option<PathBuf>,
    pub combine_mode: graphclone_core::detect::CombineMode,
    pub threads: Option<usize>,
    /// Threshold grid for `sweep`.
    pub thresholds: Vec<f64>,
    /// Dimension grid for `sweep`.
    pub dims: Vec<usize>,
    /// Feature grid for `sweep`.
    pub feature_sets: Vec<FeatureSet>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            root: None,
            out_dir: PathBuf::from("graphclone-out"),
            mode: SplitMode::Split,
            ext: ".java".to_string(),
            features: FeatureSet::Both,
            weight_transform: WeightTransform::Raw,
            embed: EmbedConfig::default(),
            threshold: 0.7,
            tile_size: DEFAULT_TILE_SIZE,
            topk: None,
            pairs: None,
            labels: None,
            individual: None,
            combine_mode: graphclone_core::detect::CombineMode::Sum,
            threads: None,
            thresholds: vec![0.6, 0.7, 0.8],
            dims: vec![16, 32, 64, 128],
            feature_sets: FeatureSet::ALL.to_vec(),
        }
    }
}

fn list<T: std::str::FromStr>(value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| anyhow::anyhow!("`{s}`: {e}")))
        .collect()
}

fn parse<T: std::str::FromStr>(value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| anyhow::anyhow!("`{value}`: {e}"))
}

fn optional(value: &str) -> Option<PathBuf> {
    (!value.is_empty() && value != "none").then(|| PathBuf::from(value))
}

impl RunConfig {
    /// Sets one key. Dashes and underscores in keys are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let ctx = || format!("config key `{key}`");
        match key.as_str() {
            "root" => self.root = optional(value),
            "out_dir" | "out" => self.out_dir = PathBuf::from(value),
            "mode" => self.mode = parse(value).with_context(ctx)?,
            "ext" => self.ext = value.to_string(),
            "features" => self.features = parse(value).with_context(ctx)?,
            "weight_transform" => self.weight_transform = parse(value).with_context(ctx)?,
            "dim" => self.embed.dim = parse(value).with_context(ctx)?,
            "seed" => self.embed.seed = parse(value).with_context(ctx)?,
            "order" | "chebyshev_order" => self.embed.order = parse(value).with_context(ctx)?,
            "mu" => self.embed.mu = parse(value).with_context(ctx)?,
            "theta" | "theta_filter" => self.embed.theta = parse(value).with_context(ctx)?,
            "oversampling" => self.embed.oversampling = parse(value).with_context(ctx)?,
            "power_iters" => self.embed.power_iters = parse(value).with_context(ctx)?,
            "threshold" => self.threshold = parse(value).with_context(ctx)?,
            "tile_size" => self.tile_size = parse(value).with_context(ctx)?,
            "topk" => {
                self.topk = match value {
                    "" | "none" => None,
                    v => Some(parse(v).with_context(ctx)?),
                }
            }
            "pairs" => self.pairs = optional(value),
            "labels" => self.labels = optional(value),
            "individual" => self.individual = optional(value),
            "combine_mode" => self.combine_mode = parse(value).with_context(ctx)?,
            "threads" => {
                self.threads = match value {
                    "" | "0" | "auto" => None,
                    v => Some(parse(v).with_context(ctx)?),
                }
            }
            "thresholds" => self.thresholds = list(value).with_context(ctx)?,
            "dims" => self.dims = list(value).with_context(ctx)?,
            "feature_sets" => self.feature_sets = list(value).with_context(ctx)?,
            _ => bail!("unknown config key `{key}`"),
        }
        Ok(())
    }

    /// Parses `key=value` lines; `#` starts a comment line.
    pub fn parse_str(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        cfg.apply_str(text)?;
        Ok(cfg)
    }

    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("line {}: expected key=value, got `{line}`", n + 1);
            };
            self.set(k, v).with_context(|| format!("line {}", n + 1))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        RunConfig::parse_str(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn query(&self) -> SimilarityQuery {
        let mut q = SimilarityQuery::all_pairs(self.threshold);
        q.tile_size = self.tile_size;
        if let Some(k) = self.topk {
            q.scope = graphclone_core::detect::Scope::TopK(k);
        }
        q
    }

    /// Checks every parameter; runs before any stage.
    pub fn validate(&self) -> Result<()> {
        if self.root.is_none() {
            bail!("no corpus root given (set `root` or pass --root)");
        }
        self.query().validate()?;
        self.embed.validate()?;
        for &t in &self.thresholds {
            if !(t > 0.0 && t <= 1.0) {
                bail!("sweep threshold must be in (0, 1], got {t}");
            }
        }
        for &d in &self.dims {
            EmbedConfig {
                dim: d,
                ..self.embed
            }
            .validate()?;
        }
        if self.topk == Some(0) {
            bail!("topk must be at least 1");
        }
        if self.threads == Some(0) {
            bail!("threads must be at least 1");
        }
        Ok(())
    }

    /// The configuration as a `key=value` document that parses back to it.
    pub fn to_kv(&self) -> String {
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map_or("none".to_string(), |p| p.display().to_string())
        };
        let join = |v: Vec<String>| v.join(",");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("root", path(&self.root));
        kv("out_dir", self.out_dir.display().to_string());
        kv("mode", self.mode.name().to_string());
        kv("ext", self.ext.clone());
        kv("features", self.features.name().to_string());
        kv("weight_transform", self.weight_transform.name().to_string());
        kv("dim", self.embed.dim.to_string());
        kv("seed", self.embed.seed.to_string());
        kv("order", self.embed.order.to_string());
        kv("mu", self.embed.mu.to_string());
        kv("theta", self.embed.theta.to_string());
        kv("oversampling", self.embed.oversampling.to_string());
        kv("power_iters", self.embed.power_iters.to_string());
        kv("threshold", self.threshold.to_string());
        kv("tile_size", self.tile_size.to_string());
        kv(
            "topk",
            self.topk.map_or("none".to_string(), |k| k.to_string()),
        );
        kv("pairs", path(&self.pairs));
        kv("labels", path(&self.labels));
        kv("individual", path(&self.individual));
        kv("combine_mode", self.combine_mode.name().to_string());
        kv(
            "threads",
            self.threads.map_or("auto".to_string(), |t| t.to_string()),
        );
        kv(
            "thresholds",
            join(self.thresholds.iter().map(f64::to_string).collect()),
        );
        kv(
            "dims",
            join(self.dims.iter().map(usize::to_string).collect()),
        );
        kv(
            "feature_sets",
            join(
                self.feature_sets
                    .iter()
                    .map(|f| f.name().to_string())
                    .collect(),
            ),
        );
        s
    }
}
