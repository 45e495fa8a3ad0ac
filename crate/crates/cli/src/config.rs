use std::path::{Path, PathBuf};

use anyhow::Context;
use chrono::{FixedOffset, NaiveDate};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tdcomm::detect::{DetectConfig, DEFAULT_SIZE_FLOOR};
use tdcomm::ingest::{parse_utc_offset, Stoplist, SECONDARY_QUERY_KEYWORD};
use tdcomm::mapeq::OptimizeConfig;
use tdcomm::synth::PlantedSpec;
use tdcomm::tdnet::{BuildOptions, EdgeMode};

/// Everything that determines the content of the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub window: Window,
    /// Offset of the local calendar that defines days, e.g. `"+02:00"`.
    pub utc_offset: String,
    pub stoplist: StoplistConfig,
    pub edge_mode: EdgeMode,
    pub clique_cap: Option<usize>,
    pub detection: OptimizeConfig,
    pub size_floor: usize,
    /// Frame lengths in days; empty means doubling lengths plus the full span.
    pub frames: Vec<usize>,
    pub topic_map: Option<PathBuf>,
    /// Communities plotted in the evolution figure; `None` picks by coverage.
    pub top_k: Option<usize>,
    pub coverage: f64,
    pub top_hashtags: usize,
    /// Leading hashtags that vote on a community's topic.
    pub topic_votes: usize,
    /// Nodes sampled for the clustering estimate; `None` uses all.
    pub clustering_sample: Option<usize>,
    pub synth: PlantedSpec,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Window {
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoplistConfig {
    /// Plain-text list replacing the built-in generic hashtags.
    pub path: Option<PathBuf>,
    pub keep_query_keywords: bool,
    pub strip_secondary_keyword: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            window: Window::default(),
            utc_offset: "+00:00".into(),
            stoplist: StoplistConfig::default(),
            edge_mode: EdgeMode::Binary,
            clique_cap: None,
            detection: OptimizeConfig::default(),
            size_floor: DEFAULT_SIZE_FLOOR,
            frames: Vec::new(),
            topic_map: None,
            top_k: None,
            coverage: 0.5,
            top_hashtags: 10,
            topic_votes: 3,
            clustering_sample: None,
            synth: PlantedSpec::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.offset()?;
        if let (Some(s), Some(e)) = (self.window.start, self.window.end) {
            anyhow::ensure!(s <= e, "window start {s} is after end {e}");
        }
        anyhow::ensure!(self.detection.n_trials > 0, "n_trials must be at least 1");
        anyhow::ensure!(
            self.coverage > 0.0 && self.coverage <= 1.0,
            "coverage must be in (0, 1]"
        );
        anyhow::ensure!(
            self.frames.iter().all(|&f| f > 0),
            "frames must be positive"
        );
        anyhow::ensure!(self.top_hashtags > 0, "top_hashtags must be at least 1");
        anyhow::ensure!(self.topic_votes > 0, "topic_votes must be at least 1");
        self.synth.validate()?;
        Ok(())
    }

    pub fn offset(&self) -> anyhow::Result<FixedOffset> {
        Ok(parse_utc_offset(&self.utc_offset)?)
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions {
            mode: self.edge_mode,
            clique_cap: self.clique_cap,
        }
    }

    pub fn detect_config(&self) -> DetectConfig {
        DetectConfig {
            build: self.build_options(),
            optimize: self.detection,
            size_floor: self.size_floor,
        }
    }

    pub fn stoplist(&self) -> anyhow::Result<Stoplist> {
        let mut list = Stoplist::default();
        if let Some(path) = &self.stoplist.path {
            let file = std::fs::File::open(path)
                .with_context(|| format!("opening stoplist {}", path.display()))?;
            list.generic = Stoplist::parse_generic(std::io::BufReader::new(file))?;
        }
        if self.stoplist.keep_query_keywords {
            list.query_keywords.clear();
        }
        if self.stoplist.strip_secondary_keyword {
            list.query_keywords
                .insert(SECONDARY_QUERY_KEYWORD.to_string());
        }
        Ok(list)
    }

    /// SHA-256 of the serialized configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        format!("{:x}", Sha256::digest(json))
    }
}
