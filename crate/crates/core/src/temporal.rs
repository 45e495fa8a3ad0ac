//! Analyses of detected communities over time.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::{detect, DetectConfig, Detected};
use crate::error::{Error, Result};
use crate::ingest::PostRecord;
use crate::tdnet::TemporalGraph;

/// How many posts of each node used each hashtag.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HashtagUsage {
    per_node: Vec<BTreeMap<String, u32>>,
}

impl HashtagUsage {
    /// Tallies hashtag use per node. Records whose `(user, day)` is not a
    /// node of `g` are ignored.
    pub fn collect(g: &TemporalGraph, days: &[Vec<PostRecord>]) -> Self {
        let index = g.node_index();
        let mut per_node = vec![BTreeMap::new(); g.n_nodes()];
        for (d, records) in days.iter().enumerate() {
            for r in records {
                if let Some(&i) = index.get(&(r.user.as_str(), d as u32)) {
                    for t in &r.hashtags {
                        *per_node[i as usize].entry(t.clone()).or_insert(0) += 1;
                    }
                }
            }
        }
        HashtagUsage { per_node }
    }

    pub fn node(&self, i: usize) -> &BTreeMap<String, u32> {
        &self.per_node[i]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LifespanMode {
    /// `last_day - first_day + 1`.
    #[default]
    Span,
    /// Number of days with at least one node.
    ActiveDays,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimelineOptions {
    pub size_floor: usize,
    /// How many hashtags to keep per community.
    pub n_top_hashtags: usize,
    pub lifespan_mode: LifespanMode,
}

impl Default for TimelineOptions {
    fn default() -> Self {
        TimelineOptions {
            size_floor: crate::detect::DEFAULT_SIZE_FLOOR,
            n_top_hashtags: 10,
            lifespan_mode: LifespanMode::Span,
        }
    }
}

/// Daily presence of one community.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityTimeline {
    pub id: u32,
    pub first_day: u32,
    pub last_day: u32,
    pub lifespan: u32,
    /// Distinct users over the whole lifetime.
    pub total_users: usize,
    /// Nodes (user-days) over the whole lifetime.
    pub n_nodes: usize,
    /// Users on each day from `first_day` to `last_day` inclusive.
    pub daily_counts: Vec<usize>,
    /// Most used hashtags with post counts, most used first.
    pub top_hashtags: Vec<(String, u32)>,
    pub topic: Option<String>,
}

impl CommunityTimeline {
    pub fn count_on(&self, day: u32) -> usize {
        if day < self.first_day || day > self.last_day {
            0
        } else {
            self.daily_counts[(day - self.first_day) as usize]
        }
    }
}

/// One timeline per community with at least `size_floor` nodes, ordered by id.
pub fn build_timelines(
    g: &TemporalGraph,
    assignment: &[u32],
    usage: &HashtagUsage,
    opts: &TimelineOptions,
) -> Result<Vec<CommunityTimeline>> {
    if assignment.len() != g.n_nodes() {
        return Err(Error::arg(format!(
            "partition covers {} of {} nodes",
            assignment.len(),
            g.n_nodes()
        )));
    }
    let mut members: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &m) in assignment.iter().enumerate() {
        members.entry(m).or_default().push(i);
    }
    let timelines = members
        .into_iter()
        .filter(|(_, nodes)| nodes.len() >= opts.size_floor.max(1))
        .map(|(id, nodes)| {
            let days: Vec<u32> = nodes.iter().map(|&i| g.node(i).day).collect();
            let first_day = *days.iter().min().unwrap();
            let last_day = *days.iter().max().unwrap();
            let mut daily_counts = vec![0usize; (last_day - first_day + 1) as usize];
            for &d in &days {
                daily_counts[(d - first_day) as usize] += 1;
            }
            let lifespan = match opts.lifespan_mode {
                LifespanMode::Span => last_day - first_day + 1,
                LifespanMode::ActiveDays => daily_counts.iter().filter(|&&c| c > 0).count() as u32,
            };
            let users: BTreeSet<&str> = nodes.iter().map(|&i| g.node(i).user.as_str()).collect();
            let mut tags: HashMap<&str, u32> = HashMap::new();
            for &i in &nodes {
                for (t, c) in usage.node(i) {
                    *tags.entry(t.as_str()).or_insert(0) += c;
                }
            }
            let mut ranked: Vec<(String, u32)> =
                tags.into_iter().map(|(t, c)| (t.to_string(), c)).collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            ranked.truncate(opts.n_top_hashtags);
            CommunityTimeline {
                id,
                first_day,
                last_day,
                lifespan,
                total_users: users.len(),
                n_nodes: nodes.len(),
                daily_counts,
                top_hashtags: ranked,
                topic: None,
            }
        })
        .collect();
    Ok(timelines)
}

/// Indices of timelines sorted by decreasing user count, ties by id.
fn by_size(timelines: &[CommunityTimeline]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..timelines.len()).collect();
    order.sort_by(|&a, &b| {
        timelines[b]
            .total_users
            .cmp(&timelines[a].total_users)
            .then(timelines[a].id.cmp(&timelines[b].id))
    });
    order
}

/// `D(d)`: number of communities per lifespan, optionally over the `top_k`
/// largest only.
pub fn lifespan_distribution(
    timelines: &[CommunityTimeline],
    top_k: Option<usize>,
) -> BTreeMap<u32, usize> {
    let order = by_size(timelines);
    let k = top_k.unwrap_or(order.len()).min(order.len());
    let mut hist = BTreeMap::new();
    for &i in &order[..k] {
        *hist.entry(timelines[i].lifespan).or_insert(0) += 1;
    }
    hist
}

/// Per day: communities present that day over nodes present that day.
/// Days without nodes are `None`.
pub fn community_user_ratio(g: &TemporalGraph, assignment: &[u32]) -> Result<Vec<Option<f64>>> {
    if assignment.len() != g.n_nodes() {
        return Err(Error::arg("partition does not cover the graph"));
    }
    let mut present: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); g.n_days() as usize];
    for (i, &m) in assignment.iter().enumerate() {
        present[g.node(i).day as usize].insert(m);
    }
    Ok(g.nodes_per_day()
        .into_iter()
        .zip(present)
        .map(|(n, c)| (n > 0).then(|| c.len() as f64 / n as f64))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramePoint {
    /// Number of leading days in the frame.
    pub frame: usize,
    /// Communities at the size floor found in the frame.
    pub communities: usize,
    /// `communities / communities on the full span`; `None` if the latter is 0.
    pub ratio: Option<f64>,
}

/// Detects communities on the first `n` days for every `n` in `frames` and
/// compares their number with the full span's. Frames run in parallel.
pub fn frame_ratio_analysis(
    days: &[Vec<PostRecord>],
    frames: &[usize],
    cfg: &DetectConfig,
) -> Result<Vec<FramePoint>> {
    frame_ratio_with(days, frames, cfg, None)
}

/// Like [`frame_ratio_analysis`], reusing an existing full-span detection.
pub fn frame_ratio_with(
    days: &[Vec<PostRecord>],
    frames: &[usize],
    cfg: &DetectConfig,
    full: Option<&Detected>,
) -> Result<Vec<FramePoint>> {
    let n_days = days.len();
    if let Some(&bad) = frames.iter().find(|&&n| n == 0 || n > n_days) {
        return Err(Error::arg(format!("frame {bad} outside [1, {n_days}]")));
    }
    let full_count = match full {
        Some(d) => d.count_at_floor(cfg.size_floor),
        None => detect(days, cfg)?.count_at_floor(cfg.size_floor),
    };
    frames
        .par_iter()
        .map(|&n| {
            let communities = if n == n_days {
                full_count
            } else {
                detect(&days[..n], cfg)?.count_at_floor(cfg.size_floor)
            };
            Ok(FramePoint {
                frame: n,
                communities,
                ratio: (full_count > 0).then(|| communities as f64 / full_count as f64),
            })
        })
        .collect()
}

pub const OTHER_TOPIC: &str = "other";

/// Hashtag → topic assignment. Unmapped hashtags belong to `"other"`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopicMap {
    by_tag: HashMap<String, String>,
}

impl TopicMap {
    /// From `topic → hashtags` pairs. A hashtag may belong to one topic only.
    pub fn from_topics<I, T, H>(topics: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, H)>,
        T: Into<String>,
        H: IntoIterator,
        H::Item: AsRef<str>,
    {
        let mut by_tag = HashMap::new();
        for (topic, tags) in topics {
            let topic = topic.into();
            for t in tags {
                let Some(tag) = crate::ingest::normalize_hashtag(t.as_ref()) else {
                    continue;
                };
                if let Some(prev) = by_tag.insert(tag.clone(), topic.clone()) {
                    if prev != topic {
                        return Err(Error::arg(format!(
                            "hashtag {tag:?} mapped to both {prev:?} and {topic:?}"
                        )));
                    }
                }
            }
        }
        Ok(TopicMap { by_tag })
    }

    /// Reads a JSON object `{"topic": ["hashtag", ...], ...}`.
    pub fn from_json<R: Read>(r: R) -> Result<Self> {
        let raw: BTreeMap<String, Vec<String>> =
            serde_json::from_reader(r).map_err(|e| Error::arg(format!("topic map: {e}")))?;
        Self::from_topics(raw)
    }

    pub fn topic_of(&self, tag: &str) -> &str {
        self.by_tag.get(tag).map_or(OTHER_TOPIC, String::as_str)
    }
}

/// Labels each community with the majority topic among its `k` most used
/// hashtags. Ties go to the tied topic that appears at the best rank.
pub fn label_topics(
    timelines: &mut [CommunityTimeline],
    topics: &TopicMap,
    k: usize,
) -> Result<()> {
    if k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    for t in timelines.iter_mut() {
        let mut votes: Vec<(&str, usize, usize)> = Vec::new();
        for (rank, (tag, _)) in t.top_hashtags.iter().take(k).enumerate() {
            let topic = topics.topic_of(tag);
            match votes.iter_mut().find(|v| v.0 == topic) {
                Some(v) => v.1 += 1,
                None => votes.push((topic, 1, rank)),
            }
        }
        let label = votes
            .iter()
            .max_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)))
            .map_or(OTHER_TOPIC, |v| v.0);
        t.topic = Some(label.to_string());
    }
    Ok(())
}

/// `(rank, cumulative share of users)` with communities sorted by
/// decreasing size. Shares are relative to the summed community sizes.
pub fn cumulative_size_curve(timelines: &[CommunityTimeline]) -> Vec<(usize, f64)> {
    let order = by_size(timelines);
    let total: usize = timelines.iter().map(|t| t.total_users).sum();
    if total == 0 {
        return Vec::new();
    }
    let mut acc = 0usize;
    order
        .iter()
        .enumerate()
        .map(|(r, &i)| {
            acc += timelines[i].total_users;
            (r + 1, acc as f64 / total as f64)
        })
        .collect()
}

/// Smallest number of largest communities whose users reach `fraction` of
/// all community users.
pub fn coverage_top_k(timelines: &[CommunityTimeline], fraction: f64) -> usize {
    cumulative_size_curve(timelines)
        .iter()
        .find(|(_, c)| *c >= fraction - 1e-12)
        .map_or(0, |(r, _)| *r)
}

/// The `k` largest timelines, largest first.
pub fn largest(timelines: &[CommunityTimeline], k: usize) -> Vec<&CommunityTimeline> {
    by_size(timelines)
        .into_iter()
        .take(k)
        .map(|i| &timelines[i])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tdnet::{Edge, TemporalNode};

    fn graph(nodes: &[(&str, u32)]) -> TemporalGraph {
        let nodes = nodes
            .iter()
            .map(|&(u, d)| TemporalNode {
                user: u.into(),
                day: d,
            })
            .collect();
        TemporalGraph::from_parts(nodes, Vec::<Edge>::new()).unwrap()
    }

    fn timeline(id: u32, users: usize, lifespan: u32, tags: &[&str]) -> CommunityTimeline {
        CommunityTimeline {
            id,
            first_day: 0,
            last_day: lifespan - 1,
            lifespan,
            total_users: users,
            n_nodes: users,
            daily_counts: vec![0; lifespan as usize],
            top_hashtags: tags.iter().map(|t| (t.to_string(), 1)).collect(),
            topic: None,
        }
    }

    fn spans(days: &[u32]) -> u32 {
        let nodes: Vec<(String, u32)> = days
            .iter()
            .enumerate()
            .map(|(i, &d)| (format!("u{i}"), d))
            .collect();
        let refs: Vec<(&str, u32)> = nodes.iter().map(|(u, d)| (u.as_str(), *d)).collect();
        let g = graph(&refs);
        let usage = HashtagUsage::collect(&g, &[]);
        let opts = TimelineOptions {
            size_floor: 1,
            ..Default::default()
        };
        let t = build_timelines(&g, &vec![0; days.len()], &usage, &opts).unwrap();
        assert_eq!(t[0].daily_counts.iter().sum::<usize>(), t[0].n_nodes);
        t[0].lifespan
    }

    #[test]
    fn lifespan_is_span() {
        assert_eq!(spans(&[3, 4, 5]), 3);
        assert_eq!(spans(&[7]), 1);
        assert_eq!(spans(&[2, 5]), 4);
    }

    #[test]
    fn active_day_variant() {
        let g = graph(&[("a", 2), ("b", 5), ("c", 5)]);
        let usage = HashtagUsage::collect(&g, &[]);
        let opts = TimelineOptions {
            lifespan_mode: LifespanMode::ActiveDays,
            ..Default::default()
        };
        let t = build_timelines(&g, &[0, 0, 0], &usage, &opts).unwrap();
        assert_eq!(t[0].lifespan, 2);
        assert_eq!(t[0].daily_counts, vec![1, 0, 0, 2]);
        assert_eq!(t[0].count_on(5), 2);
        assert_eq!(t[0].count_on(9), 0);
    }

    #[test]
    fn floor_and_users() {
        let g = graph(&[("a", 0), ("a", 1), ("b", 1), ("c", 0), ("d", 0)]);
        let usage = HashtagUsage::collect(&g, &[]);
        let t = build_timelines(&g, &[0, 0, 0, 1, 1], &usage, &TimelineOptions::default()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].total_users, 2);
        assert_eq!(t[0].n_nodes, 3);
    }

    #[test]
    fn top_hashtags_from_usage() {
        use crate::ingest::{parse_time_str, PostRecord};
        let time = parse_time_str("2015-05-11T00:00:00Z").unwrap();
        let days = vec![vec![
            PostRecord::new("a", time, ["vino", "pasta"]).unwrap(),
            PostRecord::new("a", time, ["vino"]).unwrap(),
            PostRecord::new("b", time, ["pasta", "vino"]).unwrap(),
            PostRecord::new("c", time, ["cibo"]).unwrap(),
        ]];
        let g = crate::tdnet::build_network(&days, Default::default());
        let usage = HashtagUsage::collect(&g, &days);
        let t = build_timelines(&g, &[0, 0, 0], &usage, &TimelineOptions::default()).unwrap();
        assert_eq!(
            t[0].top_hashtags,
            vec![("vino".into(), 3), ("pasta".into(), 2), ("cibo".into(), 1)]
        );
    }

    #[test]
    fn lifespan_histograms() {
        let t = vec![
            timeline(0, 5, 1, &[]),
            timeline(1, 9, 1, &[]),
            timeline(2, 3, 4, &[]),
        ];
        assert_eq!(
            lifespan_distribution(&t, None),
            BTreeMap::from([(1, 2), (4, 1)])
        );
        assert_eq!(lifespan_distribution(&t, Some(1)), BTreeMap::from([(1, 1)]));
        assert!(lifespan_distribution(&[], None).is_empty());
    }

    #[test]
    fn ratios() {
        let users: Vec<(String, u32)> = (0..10).map(|i| (format!("u{i}"), 0)).collect();
        let refs: Vec<(&str, u32)> = users.iter().map(|(u, d)| (u.as_str(), *d)).collect();
        let g = graph(&refs);
        assert_eq!(community_user_ratio(&g, &[0; 10]).unwrap(), vec![Some(0.1)]);
        let singletons: Vec<u32> = (0..10).collect();
        assert_eq!(
            community_user_ratio(&g, &singletons).unwrap(),
            vec![Some(1.0)]
        );
    }

    #[test]
    fn empty_day_is_a_gap() {
        let g = graph(&[("a", 0), ("b", 2)]);
        assert_eq!(
            community_user_ratio(&g, &[0, 0]).unwrap(),
            vec![Some(1.0), None, Some(1.0)]
        );
    }

    #[test]
    fn topic_labels() {
        let map = TopicMap::from_topics([
            ("food", vec!["vino", "pasta", "cibo"]),
            ("politics", vec!["renzi"]),
        ])
        .unwrap();
        let mut t = vec![
            timeline(0, 3, 1, &["vino", "pasta", "cibo"]),
            timeline(1, 3, 1, &["vino", "renzi", "unmapped"]),
            timeline(2, 3, 1, &["unmapped", "renzi", "renzi2", "vino", "pasta"]),
            timeline(3, 3, 1, &[]),
        ];
        label_topics(&mut t, &map, 3).unwrap();
        assert_eq!(t[0].topic.as_deref(), Some("food"));
        assert_eq!(t[1].topic.as_deref(), Some("food"));
        assert_eq!(t[2].topic.as_deref(), Some("other"));
        assert_eq!(t[3].topic.as_deref(), Some("other"));
        label_topics(&mut t, &map, 5).unwrap();
        // other: unmapped, renzi2; food: vino, pasta; tie → best rank is "other"
        assert_eq!(t[2].topic.as_deref(), Some("other"));

        let mut t = vec![timeline(0, 3, 1, &["vino", "pasta", "cibo"])];
        label_topics(&mut t, &TopicMap::default(), 3).unwrap();
        assert_eq!(t[0].topic.as_deref(), Some("other"));
        assert!(label_topics(&mut t, &map, 0).is_err());
    }

    #[test]
    fn topic_map_json() {
        let map = TopicMap::from_json(
            r##"{"food": ["#Vino", "pasta"], "expo": ["padiglione"]}"##.as_bytes(),
        )
        .unwrap();
        assert_eq!(map.topic_of("vino"), "food");
        assert_eq!(map.topic_of("zzz"), "other");
        assert!(TopicMap::from_json(r#"{"a": ["x"], "b": ["x"]}"#.as_bytes()).is_err());
    }

    #[test]
    fn cumulative_curve() {
        let t = vec![
            timeline(0, 30, 1, &[]),
            timeline(1, 60, 1, &[]),
            timeline(2, 10, 1, &[]),
        ];
        let c = cumulative_size_curve(&t);
        let expect = [(1, 0.6), (2, 0.9), (3, 1.0)];
        for (a, b) in c.iter().zip(expect) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).abs() < 1e-12);
        }
        assert_eq!(coverage_top_k(&t, 0.5), 1);
        assert_eq!(coverage_top_k(&t, 0.9), 2);

        let eq: Vec<_> = (0..4).map(|i| timeline(i, 25, 1, &[])).collect();
        let c = cumulative_size_curve(&eq);
        for (r, f) in c {
            assert!((f - r as f64 / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_bounds() {
        assert!(frame_ratio_analysis(&[vec![]], &[2], &DetectConfig::default()).is_err());
        assert!(frame_ratio_analysis(&[vec![]], &[0], &DetectConfig::default()).is_err());
    }
}
