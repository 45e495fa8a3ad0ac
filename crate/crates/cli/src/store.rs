use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::Context;
use chrono::{Days, NaiveDate};
use serde_json::Value;
use tdcomm::ingest::{
    bin_by_day, data_window, parse_posts, BinnedPosts, DayBinning, InputFormat, PostRecord,
};
use tdcomm::synth::read_assignment_tsv;
use tdcomm::tdnet::TemporalGraph;

use crate::config::RunConfig;
use crate::output::{ensure_exists, Outputs};

/// Window from the config, with missing ends taken from the data.
pub fn resolve_binning(records: &[PostRecord], cfg: &RunConfig) -> anyhow::Result<DayBinning> {
    let offset = cfg.offset()?;
    let data = data_window(records, offset);
    let start = cfg.window.start.or(data.map(|d| d.0));
    let end = cfg.window.end.or(data.map(|d| d.1));
    Ok(match (start, end) {
        (Some(s), Some(e)) => DayBinning::new(s, e, offset)?,
        _ => DayBinning {
            day0: start
                .or(end)
                .unwrap_or(NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()),
            n_days: 0,
            utc_offset_secs: offset.local_minus_utc(),
        },
    })
}

pub fn bin(records: Vec<PostRecord>, binning: DayBinning) -> anyhow::Result<BinnedPosts> {
    if binning.n_days == 0 {
        return Ok(BinnedPosts {
            binning,
            discarded: records.len(),
            days: Vec::new(),
        });
    }
    let end = binning.day0 + Days::new(u64::from(binning.n_days - 1));
    Ok(bin_by_day(records, binning.day0, end, binning.offset())?)
}

/// Day-binned records as JSONL, the meta line carrying the binning.
pub fn write_records(out: &Outputs, name: &str, binned: &BinnedPosts) -> anyhow::Result<()> {
    let binning = serde_json::to_value(binned.binning)?;
    out.write_with(name, |w| {
        writeln!(w, "{}", out.meta.json_line(Some(("binning", binning))))?;
        for r in binned.days.iter().flatten() {
            let line = serde_json::json!({
                "user": r.user,
                "time": r.time.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                "hashtags": r.hashtags,
            });
            writeln!(w, "{line}")?;
        }
        Ok(())
    })?;
    Ok(())
}

fn stored_binning(path: &Path) -> anyhow::Result<Option<DayBinning>> {
    let mut first = String::new();
    BufReader::new(std::fs::File::open(path)?).read_line(&mut first)?;
    let Ok(v) = serde_json::from_str::<Value>(&first) else {
        return Ok(None);
    };
    match v.pointer("/meta/binning") {
        Some(b) => Ok(Some(
            serde_json::from_value(b.clone()).context("bad binning in meta")?,
        )),
        None => Ok(None),
    }
}

/// Loads a record store, or a raw JSONL/CSV post file binned with the
/// configured window.
pub fn load_records(path: &Path, cfg: &RunConfig) -> anyhow::Result<BinnedPosts> {
    ensure_exists(path, "records file")?;
    let format = InputFormat::from_path(path);
    let binning = match format {
        InputFormat::Jsonl => stored_binning(path)?,
        InputFormat::Csv => None,
    };
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let parsed =
        parse_posts(file, format).with_context(|| format!("reading {}", path.display()))?;
    if parsed.skipped > 0 {
        log::warn!(
            "{}: skipped {} malformed records",
            path.display(),
            parsed.skipped
        );
    }
    let binning = match binning {
        Some(b) => b,
        None => resolve_binning(&parsed.records, cfg)?,
    };
    bin(parsed.records, binning)
}

/// Community of every node from a `user day community_id` file.
pub fn load_partition(path: &Path, g: &TemporalGraph) -> anyhow::Result<Vec<u32>> {
    ensure_exists(path, "partition file")?;
    let file = std::fs::File::open(path)?;
    let rows = read_assignment_tsv(BufReader::new(file))
        .with_context(|| format!("reading {}", path.display()))?;
    let index = g.node_index();
    let mut labels = vec![None; g.n_nodes()];
    for r in &rows {
        let i = *index.get(&(r.user.as_str(), r.day)).with_context(|| {
            format!(
                "partition node ({}, {}) is not in the network",
                r.user, r.day
            )
        })?;
        anyhow::ensure!(
            labels[i as usize].replace(r.community).is_none(),
            "partition lists ({}, {}) twice",
            r.user,
            r.day
        );
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            l.with_context(|| {
                let x = g.node(i);
                format!("partition misses node ({}, {})", x.user, x.day)
            })
        })
        .collect()
}

pub fn keyed(g: &TemporalGraph, labels: &[u32]) -> HashMap<(String, u32), u32> {
    g.nodes()
        .iter()
        .zip(labels)
        .map(|(x, &m)| ((x.user.clone(), x.day), m))
        .collect()
}
