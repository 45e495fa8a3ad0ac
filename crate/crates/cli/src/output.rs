use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

pub const TOOL: &str = "tdcomm";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance written at the top of every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub config: RunConfig,
}

impl Meta {
    pub fn new(cfg: &RunConfig) -> Self {
        Meta {
            tool: TOOL,
            version: VERSION,
            config_sha256: cfg.hash(),
            seed: cfg.detection.seed,
            config: cfg.clone(),
        }
    }

    /// Header lines for line-oriented text formats, without a comment marker.
    pub fn lines(&self) -> Vec<String> {
        vec![
            format!("{} {}", self.tool, self.version),
            format!("config_sha256 {}", self.config_sha256),
            format!("seed {}", self.seed),
            format!(
                "config {}",
                serde_json::to_string(&self.config).expect("config serializes")
            ),
        ]
    }

    pub fn json_line(&self, extra: Option<(&str, Value)>) -> String {
        let mut meta = serde_json::to_value(self).expect("meta serializes");
        if let (Some((k, v)), Value::Object(m)) = (extra, &mut meta) {
            m.insert(k.to_string(), v);
        }
        serde_json::json!({ "meta": meta }).to_string()
    }
}

pub struct Outputs {
    pub dir: PathBuf,
    pub meta: Meta,
}

impl Outputs {
    pub fn new(cfg: &RunConfig) -> anyhow::Result<Self> {
        std::fs::create_dir_all(&cfg.out_dir)
            .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
        Ok(Outputs {
            dir: cfg.out_dir.clone(),
            meta: Meta::new(cfg),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes to a temporary sibling and renames, so readers never see a
    /// partial file.
    pub fn write_with(
        &self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>,
    ) -> anyhow::Result<PathBuf> {
        let path = self.path(name);
        let tmp = self.path(&format!(".{name}.tmp"));
        {
            let file = File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
        }
        std::fs::rename(&tmp, &path).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    /// A JSON object whose first field is `meta`.
    pub fn write_json<T: Serialize>(&self, name: &str, body: &T) -> anyhow::Result<PathBuf> {
        let mut obj = serde_json::Map::new();
        obj.insert("meta".into(), serde_json::to_value(&self.meta)?);
        match serde_json::to_value(body)? {
            Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("data".into(), other);
            }
        }
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, &Value::Object(obj))?;
            writeln!(w)?;
            Ok(())
        })
    }

    /// CSV with `# ` header lines, a column row, then `rows`.
    pub fn write_csv(
        &self,
        name: &str,
        columns: &[&str],
        rows: &[Vec<String>],
    ) -> anyhow::Result<PathBuf> {
        self.write_with(name, |w| {
            for line in self.meta.lines() {
                writeln!(w, "# {line}")?;
            }
            writeln!(w, "{}", columns.join(","))?;
            for r in rows {
                writeln!(w, "{}", r.join(","))?;
            }
            Ok(())
        })
    }

    pub fn write_svg(&self, name: &str, svg: &str) -> anyhow::Result<PathBuf> {
        self.write_with(name, |w| {
            for line in self.meta.lines() {
                writeln!(w, "<!-- {} -->", line.replace("--", "- -"))?;
            }
            w.write_all(svg.as_bytes())?;
            Ok(())
        })
    }
}

/// Fixed-precision float for tabular output; empty for missing values.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_f)
}

pub fn fmt_f(x: f64) -> String {
    format!("{x:.6}")
}

pub fn ensure_exists(path: &Path, what: &str) -> anyhow::Result<()> {
    anyhow::ensure!(path.is_file(), "{what} {} not found", path.display());
    Ok(())
}
