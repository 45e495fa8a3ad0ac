//! Planted-community post streams and partition comparison.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;
use std::io::Write;

use chrono::{Duration, NaiveDate, SecondsFormat, TimeZone, Utc};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::PostRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedSpec {
    pub n_communities: usize,
    pub users_per_community: usize,
    pub n_days: u32,
    /// Hashtags owned by each community.
    pub pool_size: usize,
    /// Probability that a user posts on a day its community is active.
    pub activity: f64,
    /// Posts by an active user on one day.
    pub posts_per_day: usize,
    /// Probability that a post also carries one hashtag of another community.
    pub cross_talk: f64,
    /// Days each community stays active; `None` means the whole window.
    pub lifespan: Option<u32>,
    /// Community `c` becomes active on day `c * stagger`.
    pub stagger: u32,
    pub start: NaiveDate,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            n_communities: 4,
            users_per_community: 25,
            n_days: 14,
            pool_size: 6,
            activity: 1.0,
            posts_per_day: 1,
            cross_talk: 0.0,
            lifespan: None,
            stagger: 0,
            start: NaiveDate::from_ymd_opt(2015, 5, 11).unwrap(),
            seed: 1,
        }
    }
}

impl PlantedSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_communities", self.n_communities),
            ("users_per_community", self.users_per_community),
            ("n_days", self.n_days as usize),
            ("pool_size", self.pool_size),
            ("posts_per_day", self.posts_per_day),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::arg(format!("{name} must be at least 1")));
        }
        for (name, p) in [("activity", self.activity), ("cross_talk", self.cross_talk)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::arg(format!("{name} = {p} is not a probability")));
            }
        }
        if self.lifespan == Some(0) {
            return Err(Error::arg("lifespan must be at least 1"));
        }
        Ok(())
    }

    /// Days `[first, last)` on which community `c` posts.
    pub fn active_days(&self, c: usize) -> std::ops::Range<u32> {
        let first = (c as u32).saturating_mul(self.stagger).min(self.n_days);
        let last = match self.lifespan {
            Some(l) => first.saturating_add(l).min(self.n_days),
            None => self.n_days,
        };
        first..last
    }

    pub fn user_name(c: usize, i: usize) -> String {
        format!("c{c}u{i}")
    }

    pub fn hashtag_name(c: usize, k: usize) -> String {
        format!("c{c}h{k}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TruthRow {
    pub user: String,
    pub day: u32,
    pub community: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Planted {
    pub records: Vec<PostRecord>,
    /// Planted community of every active (user, day), sorted by `(day, user)`.
    pub truth: Vec<TruthRow>,
}

impl Planted {
    pub fn truth_map(&self) -> HashMap<(String, u32), u32> {
        self.truth
            .iter()
            .map(|r| ((r.user.clone(), r.day), r.community))
            .collect()
    }
}

/// Generates posts where every user draws hashtags from its community's pool.
/// Output depends only on `spec`.
pub fn generate_planted(spec: &PlantedSpec) -> Result<Planted> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let day0 = Utc.from_utc_datetime(&spec.start.and_hms_opt(8, 0, 0).unwrap());
    let max_tags = spec.pool_size.min(3);
    let mut records = Vec::new();
    let mut truth = BTreeMap::new();

    for day in 0..spec.n_days {
        let mut second = 0i64;
        for c in 0..spec.n_communities {
            if !spec.active_days(c).contains(&day) {
                continue;
            }
            for i in 0..spec.users_per_community {
                if !rng.gen_bool(spec.activity) {
                    continue;
                }
                let user = PlantedSpec::user_name(c, i);
                for _ in 0..spec.posts_per_day {
                    let k = rng.gen_range(1..=max_tags);
                    let mut tags: Vec<String> = index::sample(&mut rng, spec.pool_size, k)
                        .into_iter()
                        .map(|h| PlantedSpec::hashtag_name(c, h))
                        .collect();
                    if spec.n_communities > 1 && rng.gen_bool(spec.cross_talk) {
                        let mut other = rng.gen_range(0..spec.n_communities - 1);
                        if other >= c {
                            other += 1;
                        }
                        let h = rng.gen_range(0..spec.pool_size);
                        tags.push(PlantedSpec::hashtag_name(other, h));
                    }
                    let time = day0 + Duration::days(i64::from(day)) + Duration::seconds(second);
                    second += 1;
                    records.push(PostRecord::new(user.clone(), time, tags)?);
                }
                truth.insert((day, user), c as u32);
            }
        }
    }
    let truth = truth
        .into_iter()
        .map(|((day, user), community)| TruthRow {
            user,
            day,
            community,
        })
        .collect();
    Ok(Planted { records, truth })
}

/// Writes records in the JSONL post format, after an optional header line.
pub fn write_posts_jsonl<W: Write>(
    records: &[PostRecord],
    mut w: W,
    header: Option<&serde_json::Value>,
) -> Result<()> {
    if let Some(h) = header {
        writeln!(
            w,
            "{}",
            serde_json::to_string(h).map_err(|e| Error::arg(e.to_string()))?
        )?;
    }
    for r in records {
        let line = serde_json::json!({
            "user": r.user,
            "time": r.time.to_rfc3339_opts(SecondsFormat::Secs, true),
            "hashtags": r.hashtags,
        });
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// `user day community_id` rows, tab separated, after `# ` header lines.
pub fn write_truth_tsv<W: Write>(truth: &[TruthRow], mut w: W, header: &[String]) -> Result<()> {
    for line in header {
        writeln!(w, "# {line}")?;
    }
    for r in truth {
        writeln!(w, "{}\t{}\t{}", r.user, r.day, r.community)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `user day community_id` rows, skipping `#` lines.
pub fn read_assignment_tsv<R: std::io::BufRead>(r: R) -> Result<Vec<TruthRow>> {
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [user, day, community] = cols[..] else {
            return Err(Error::parse(i + 1, "expected user, day, community"));
        };
        let num = |s: &str| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| Error::parse(i + 1, format!("expected integer, got {s:?}")))
        };
        rows.push(TruthRow {
            user: user.to_string(),
            day: num(day)?,
            community: num(community)?,
        });
    }
    Ok(rows)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .map(|c| c as f64 / n)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// Normalized mutual information, `2 I(A;B) / (H(A) + H(B))`.
///
/// Partitions equal up to relabeling score 1. Otherwise, if either partition
/// has zero entropy the score is 0.
pub fn nmi(a: &[u32], b: &[u32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::arg(format!(
            "partitions cover {} and {} nodes",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::arg("partitions are empty"));
    }
    // ordered maps fix the summation order
    let mut joint: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    let mut ca: BTreeMap<u32, usize> = BTreeMap::new();
    let mut cb: BTreeMap<u32, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *ca.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
    }
    if joint.len() == ca.len() && joint.len() == cb.len() {
        return Ok(1.0);
    }
    let n = a.len() as f64;
    let ha = entropy(ca.values().copied(), n);
    let hb = entropy(cb.values().copied(), n);
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let mi: f64 = joint
        .iter()
        .map(|(&(x, y), &c)| {
            let pxy = c as f64 / n;
            pxy * (pxy * n * n / (ca[&x] as f64 * cb[&y] as f64)).ln()
        })
        .sum();
    Ok((2.0 * mi / (ha + hb)).clamp(0.0, 1.0))
}

/// [`nmi`] over keyed labels; both maps must cover the same keys.
pub fn nmi_keyed<K: Hash + Eq + Ord>(a: &HashMap<K, u32>, b: &HashMap<K, u32>) -> Result<f64> {
    if a.len() != b.len() || a.keys().any(|k| !b.contains_key(k)) {
        return Err(Error::arg("partitions are over different node sets"));
    }
    let mut keys: Vec<&K> = a.keys().collect();
    keys.sort();
    let la: Vec<u32> = keys.iter().map(|k| a[*k]).collect();
    let lb: Vec<u32> = keys.iter().map(|k| b[*k]).collect();
    nmi(&la, &lb)
}
