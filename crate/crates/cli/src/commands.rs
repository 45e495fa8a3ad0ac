use std::io::{BufReader, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use tdcomm::detect::{detect_on, Detected};
use tdcomm::ingest::{apply_stoplist, parse_posts, BinnedPosts, InputFormat};
use tdcomm::synth::{
    generate_planted, nmi_keyed, read_assignment_tsv, write_posts_jsonl, write_truth_tsv,
};
use tdcomm::tdnet::{
    build_network, validate_block_structure, write_graph_tsv, GraphStats, TemporalGraph,
};
use tdcomm::temporal::{
    build_timelines, community_user_ratio, coverage_top_k, cumulative_size_curve, frame_ratio_with,
    label_topics, largest, lifespan_distribution, CommunityTimeline, HashtagUsage, TimelineOptions,
    TopicMap,
};

use crate::config::RunConfig;
use crate::output::{fmt_f, fmt_opt, Outputs};
use crate::store::{bin, keyed, load_partition, load_records, resolve_binning, write_records};
use crate::svg::{bar_chart, line_chart, stacked_area, Scale, Series};

pub const RECORDS: &str = "records.jsonl";
pub const PARTITION: &str = "partition.tsv";

#[derive(Serialize)]
struct IngestReport {
    input: String,
    records_read: usize,
    malformed: usize,
    diagnostics: Vec<String>,
    stoplist_size: usize,
    dropped_by_stoplist: usize,
    outside_window: usize,
    kept: usize,
    n_days: u32,
    window_start: String,
    records_per_day: Vec<usize>,
}

pub fn ingest(cfg: &RunConfig, input: &Path, format: Option<InputFormat>) -> anyhow::Result<()> {
    let format = format.unwrap_or_else(|| InputFormat::from_path(input));
    let file =
        std::fs::File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let parsed =
        parse_posts(file, format).with_context(|| format!("reading {}", input.display()))?;
    for d in &parsed.diagnostics {
        log::warn!("{}: {d}", input.display());
    }
    let read = parsed.records.len() + parsed.skipped;
    let stoplist = cfg.stoplist()?;
    let filtered = apply_stoplist(parsed.records, &stoplist);
    let binning = resolve_binning(&filtered.records, cfg)?;
    let binned = bin(filtered.records, binning)?;
    if binned.n_records() == 0 {
        log::warn!("no records left after filtering");
    }

    let out = Outputs::new(cfg)?;
    write_records(&out, RECORDS, &binned)?;
    out.write_json(
        "ingest_report.json",
        &IngestReport {
            input: input.display().to_string(),
            records_read: read,
            malformed: parsed.skipped,
            diagnostics: parsed.diagnostics,
            stoplist_size: stoplist.len(),
            dropped_by_stoplist: filtered.dropped,
            outside_window: binned.discarded,
            kept: binned.n_records(),
            n_days: binned.binning.n_days,
            window_start: binned.binning.day0.to_string(),
            records_per_day: binned.days.iter().map(Vec::len).collect(),
        },
    )?;
    Ok(())
}

fn graph_of(cfg: &RunConfig, binned: &BinnedPosts) -> TemporalGraph {
    let g = build_network(&binned.days, cfg.build_options());
    if g.capped_groups() > 0 {
        log::warn!(
            "{} hashtag groups truncated by the clique cap",
            g.capped_groups()
        );
    }
    g
}

#[derive(Serialize)]
struct BuildStats {
    #[serde(flatten)]
    stats: GraphStats,
    n_days: u32,
    nodes_per_day: Vec<usize>,
    capped_groups: usize,
    block_structure: String,
}

pub fn build(cfg: &RunConfig, records: &Path) -> anyhow::Result<()> {
    let binned = load_records(records, cfg)?;
    let g = graph_of(cfg, &binned);
    let block = match validate_block_structure(&g) {
        Ok(()) => "ok".to_string(),
        Err(v) => v.to_string(),
    };
    let out = Outputs::new(cfg)?;
    out.write_with("graph.tsv", |w| {
        Ok(write_graph_tsv(&g, w, &out.meta.lines())?)
    })?;
    out.write_json(
        "stats.json",
        &BuildStats {
            stats: GraphStats::compute(&g, cfg.clustering_sample.map(|s| (s, cfg.detection.seed))),
            n_days: g.n_days(),
            nodes_per_day: g.nodes_per_day(),
            capped_groups: g.capped_groups(),
            block_structure: block,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct CodelengthReport {
    #[serde(rename = "L")]
    total: Option<f64>,
    index_term: Option<f64>,
    module_term: Option<f64>,
    one_level: Option<f64>,
    n_modules: usize,
    n_nodes: usize,
    n_edges: usize,
    size_floor: usize,
    n_communities_at_floor: usize,
    n_trials: usize,
    best_trial: Option<usize>,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    nmi: Option<f64>,
}

pub fn detect(cfg: &RunConfig, records: &Path, truth: Option<&Path>) -> anyhow::Result<()> {
    let binned = load_records(records, cfg)?;
    let g = graph_of(cfg, &binned);
    if g.n_nodes() == 0 {
        log::warn!("no nodes in the network; writing an empty partition");
    } else if g.n_edges() == 0 {
        log::warn!("the network has no edges; every node is its own community");
    }
    let d = detect_on(g, &cfg.detect_config())?;
    let nmi = truth.map(|p| score_against(p, &d)).transpose()?;

    let out = Outputs::new(cfg)?;
    out.write_with(PARTITION, |w| {
        for line in out.meta.lines() {
            writeln!(w, "# {line}")?;
        }
        for (x, m) in d.graph.nodes().iter().zip(&d.assignment) {
            writeln!(w, "{}\t{}\t{m}", x.user, x.day)?;
        }
        Ok(())
    })?;
    out.write_json(
        "codelength.json",
        &CodelengthReport {
            total: d.codelength.map(|c| c.total),
            index_term: d.codelength.map(|c| c.index_term),
            module_term: d.codelength.map(|c| c.module_term),
            one_level: d.one_level,
            n_modules: d.n_communities(),
            n_nodes: d.graph.n_nodes(),
            n_edges: d.graph.n_edges(),
            size_floor: cfg.size_floor,
            n_communities_at_floor: d.count_at_floor(cfg.size_floor),
            n_trials: cfg.detection.n_trials,
            best_trial: d.best_trial,
            seed: cfg.detection.seed,
            nmi,
        },
    )?;
    Ok(())
}

fn score_against(path: &Path, d: &Detected) -> anyhow::Result<f64> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let truth = read_assignment_tsv(BufReader::new(file))?
        .into_iter()
        .map(|r| ((r.user, r.day), r.community))
        .collect();
    nmi_keyed(&keyed(&d.graph, &d.assignment), &truth).context("comparing with ground truth")
}

/// Network, partition and timelines shared by the analysis stages.
struct Analysis {
    binned: BinnedPosts,
    detected: Detected,
    timelines: Vec<CommunityTimeline>,
}

fn analysis(cfg: &RunConfig, records: &Path, partition: &Path) -> anyhow::Result<Analysis> {
    let binned = load_records(records, cfg)?;
    let g = graph_of(cfg, &binned);
    let assignment = load_partition(partition, &g)?;
    let usage = HashtagUsage::collect(&g, &binned.days);
    let opts = TimelineOptions {
        size_floor: cfg.size_floor,
        n_top_hashtags: cfg.top_hashtags,
        ..Default::default()
    };
    let mut timelines = build_timelines(&g, &assignment, &usage, &opts)?;
    if let Some(path) = &cfg.topic_map {
        let file = std::fs::File::open(path)
            .with_context(|| format!("opening topic map {}", path.display()))?;
        label_topics(&mut timelines, &TopicMap::from_json(file)?, cfg.topic_votes)?;
    }
    Ok(Analysis {
        binned,
        detected: Detected {
            graph: g,
            assignment,
            codelength: None,
            one_level: None,
            best_trial: None,
        },
        timelines,
    })
}

#[derive(Serialize)]
struct DayRatio {
    day: u32,
    date: String,
    ratio: Option<f64>,
}

#[derive(Serialize)]
struct AnalysisReport {
    size_floor: usize,
    n_communities: usize,
    lifespan_histogram: Vec<(u32, usize)>,
    community_user_ratio: Vec<DayRatio>,
}

fn day_ratios(a: &Analysis) -> anyhow::Result<Vec<DayRatio>> {
    Ok(
        community_user_ratio(&a.detected.graph, &a.detected.assignment)?
            .into_iter()
            .enumerate()
            .map(|(d, ratio)| DayRatio {
                day: d as u32,
                date: a.binned.binning.date_of(d as u32).to_string(),
                ratio,
            })
            .collect(),
    )
}

pub fn analyze(cfg: &RunConfig, records: &Path, partition: &Path) -> anyhow::Result<()> {
    let a = analysis(cfg, records, partition)?;
    let out = Outputs::new(cfg)?;
    out.write_with("timelines.jsonl", |w| {
        writeln!(w, "{}", out.meta.json_line(None))?;
        for t in &a.timelines {
            writeln!(w, "{}", serde_json::to_string(t)?)?;
        }
        Ok(())
    })?;
    out.write_json(
        "analysis.json",
        &AnalysisReport {
            size_floor: cfg.size_floor,
            n_communities: a.timelines.len(),
            lifespan_histogram: lifespan_distribution(&a.timelines, None)
                .into_iter()
                .collect(),
            community_user_ratio: day_ratios(&a)?,
        },
    )?;
    Ok(())
}

/// Doubling frame lengths below the span, then the span itself.
pub fn default_frames(n_days: usize) -> Vec<usize> {
    let mut frames = Vec::new();
    let mut f = 2;
    while f < n_days {
        frames.push(f);
        f *= 2;
    }
    if n_days > 0 {
        frames.push(n_days);
    }
    frames
}

#[derive(Serialize)]
struct Summary {
    n_days: u32,
    n_nodes: usize,
    n_edges: usize,
    avg_local_clustering: Option<f64>,
    size_floor: usize,
    n_communities: usize,
    n_communities_total: usize,
    top_k: usize,
    top_k_user_share: Option<f64>,
    frames: Vec<tdcomm::temporal::FramePoint>,
}

pub fn report(cfg: &RunConfig, records: &Path, partition: &Path) -> anyhow::Result<()> {
    let a = analysis(cfg, records, partition)?;
    let g = &a.detected.graph;
    let out = Outputs::new(cfg)?;

    let degrees = tdcomm::tdnet::degree_distribution(g);
    let rows: Vec<Vec<String>> = degrees
        .iter()
        .map(|(k, c)| vec![k.to_string(), c.to_string()])
        .collect();
    out.write_csv("fig1a_degree.csv", &["degree", "count"], &rows)?;
    let pts = degrees
        .iter()
        .map(|(&k, &c)| (k as f64, c as f64))
        .collect();
    out.write_svg(
        "fig1a_degree.svg",
        &line_chart(
            "Degree distribution",
            "degree",
            "nodes",
            &[Series {
                name: "degree",
                points: pts,
                scatter: true,
            }],
            Scale::Log,
            Scale::Log,
        ),
    )?;

    let curve = cumulative_size_curve(&a.timelines);
    let rows: Vec<Vec<String>> = curve
        .iter()
        .map(|(r, c)| vec![r.to_string(), fmt_f(*c)])
        .collect();
    out.write_csv(
        "fig1b_cumulative.csv",
        &["rank", "cumulative_user_share"],
        &rows,
    )?;
    out.write_svg(
        "fig1b_cumulative.svg",
        &line_chart(
            "Cumulative community size",
            "communities by decreasing size",
            "share of users",
            &[Series {
                name: "share",
                points: curve.iter().map(|&(r, c)| (r as f64, c)).collect(),
                scatter: false,
            }],
            Scale::Log,
            Scale::Linear,
        ),
    )?;

    let n_days = a.binned.days.len();
    let frames = if cfg.frames.is_empty() {
        default_frames(n_days)
    } else {
        cfg.frames.clone()
    };
    let points = frame_ratio_with(
        &a.binned.days,
        &frames,
        &cfg.detect_config(),
        Some(&a.detected),
    )?;
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                p.frame.to_string(),
                p.communities.to_string(),
                fmt_opt(p.ratio),
            ]
        })
        .collect();
    out.write_csv(
        "fig2_frame_ratio.csv",
        &["frame_days", "communities", "ratio"],
        &rows,
    )?;
    out.write_svg(
        "fig2_frame_ratio.svg",
        &line_chart(
            "Communities per frame relative to the full span",
            "frame length (days)",
            "ratio",
            &[Series {
                name: "ratio",
                points: points
                    .iter()
                    .filter_map(|p| Some((p.frame as f64, p.ratio?)))
                    .collect(),
                scatter: false,
            }],
            Scale::Linear,
            Scale::Linear,
        ),
    )?;

    let k = cfg
        .top_k
        .unwrap_or_else(|| coverage_top_k(&a.timelines, cfg.coverage));
    let mut top = largest(&a.timelines, k);
    top.sort_by_key(|t| (t.first_day, t.id));
    let mut rows = Vec::new();
    for t in &top {
        for day in t.first_day..=t.last_day {
            rows.push(vec![
                day.to_string(),
                a.binned.binning.date_of(day).to_string(),
                t.id.to_string(),
                t.topic.clone().unwrap_or_default(),
                t.count_on(day).to_string(),
            ]);
        }
    }
    out.write_csv(
        "fig3_evolution.csv",
        &["day", "date", "community", "topic", "users"],
        &rows,
    )?;
    let xs: Vec<f64> = (0..n_days).map(|d| d as f64).collect();
    let layers: Vec<Vec<f64>> = top
        .iter()
        .map(|t| (0..n_days as u32).map(|d| t.count_on(d) as f64).collect())
        .collect();
    out.write_svg(
        "fig3_evolution.svg",
        &stacked_area(
            "Evolution of the largest communities",
            "day",
            "users",
            &xs,
            &layers,
        ),
    )?;

    let ratios = day_ratios(&a)?;
    let rows: Vec<Vec<String>> = ratios
        .iter()
        .map(|r| vec![r.day.to_string(), r.date.clone(), fmt_opt(r.ratio)])
        .collect();
    out.write_csv(
        "fig4_ratio.csv",
        &["day", "date", "communities_per_user"],
        &rows,
    )?;
    out.write_svg(
        "fig4_ratio.svg",
        &line_chart(
            "Communities per active user",
            "day",
            "ratio",
            &[Series {
                name: "ratio",
                points: ratios
                    .iter()
                    .filter_map(|r| Some((f64::from(r.day), r.ratio?)))
                    .collect(),
                scatter: false,
            }],
            Scale::Linear,
            Scale::Linear,
        ),
    )?;

    let all = lifespan_distribution(&a.timelines, None);
    let in_top = lifespan_distribution(&a.timelines, Some(k));
    let rows: Vec<Vec<String>> = all
        .iter()
        .map(|(l, c)| {
            vec![
                l.to_string(),
                c.to_string(),
                in_top.get(l).copied().unwrap_or(0).to_string(),
            ]
        })
        .collect();
    out.write_csv(
        "fig5_lifespan.csv",
        &["lifespan_days", "communities", "top_k_communities"],
        &rows,
    )?;
    out.write_svg(
        "fig5_lifespan.svg",
        &bar_chart(
            "Community lifespan",
            "lifespan (days)",
            "communities",
            &all.iter()
                .map(|(&l, &c)| (f64::from(l), c as f64))
                .collect::<Vec<_>>(),
        ),
    )?;

    out.write_json(
        "summary.json",
        &Summary {
            n_days: g.n_days(),
            n_nodes: g.n_nodes(),
            n_edges: g.n_edges(),
            avg_local_clustering: tdcomm::tdnet::avg_local_clustering(
                g,
                cfg.clustering_sample.map(|s| (s, cfg.detection.seed)),
            )
            .ok(),
            size_floor: cfg.size_floor,
            n_communities: a.timelines.len(),
            n_communities_total: a.detected.n_communities(),
            top_k: k,
            top_k_user_share: k.checked_sub(1).and_then(|i| curve.get(i)).map(|c| c.1),
            frames: points,
        },
    )?;
    Ok(())
}

pub fn synth(cfg: &RunConfig) -> anyhow::Result<()> {
    let planted = generate_planted(&cfg.synth)?;
    let out = Outputs::new(cfg)?;
    out.write_with("posts.jsonl", |w| {
        let meta: serde_json::Value = serde_json::from_str(&out.meta.json_line(None))?;
        Ok(write_posts_jsonl(&planted.records, w, Some(&meta))?)
    })?;
    out.write_with("truth.tsv", |w| {
        Ok(write_truth_tsv(&planted.truth, w, &out.meta.lines())?)
    })?;
    Ok(())
}
