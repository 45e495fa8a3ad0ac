//! Post records: parsing, hashtag normalization, stoplist filtering and
//! binning into daily layers.

use std::collections::{BTreeSet, HashSet};
use std::io::{BufRead, Read};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, FixedOffset, NaiveDate, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Generic event hashtags that carry no specific message.
pub const GENERIC_HASHTAGS: [&str; 11] = [
    "expomilano",
    "expo",
    "milano",
    "milan",
    "expomilano2015",
    "milanoexpo2015",
    "expo2015milano",
    "euexpo2015",
    "e015",
    "tim2go",
    "news",
];

/// The keyword used to collect the posts; it links almost every record.
pub const PRIMARY_QUERY_KEYWORD: &str = "expo2015";
/// Second collection keyword. Not stripped by default since it is also a topic.
pub const SECONDARY_QUERY_KEYWORD: &str = "noexpo";

const MAX_DIAGNOSTICS: usize = 5;

/// One post: who, when, and which hashtags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostRecord {
    pub user: String,
    pub time: DateTime<Utc>,
    pub hashtags: Vec<String>,
}

impl PostRecord {
    /// Builds a record, normalizing and de-duplicating hashtags.
    pub fn new<I, S>(user: impl Into<String>, time: DateTime<Utc>, hashtags: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let user = user.into();
        if user.is_empty() {
            return Err(Error::arg("empty user id"));
        }
        let time = Utc
            .timestamp_opt(time.timestamp(), 0)
            .single()
            .ok_or_else(|| Error::arg("timestamp out of range"))?;
        Ok(PostRecord {
            user,
            time,
            hashtags: normalize_hashtags(hashtags),
        })
    }
}

/// Lowercase, strip leading `#`, Unicode NFC. Returns `None` for tags that
/// are empty once normalized.
pub fn normalize_hashtag(raw: &str) -> Option<String> {
    let tag = raw.trim().trim_start_matches('#');
    if tag.is_empty() {
        return None;
    }
    Some(tag.nfc().collect::<String>().to_lowercase().nfc().collect())
}

/// Normalizes each tag, dropping empties and later duplicates.
pub fn normalize_hashtags<I, S>(raw: I) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut seen = HashSet::new();
    raw.into_iter()
        .filter_map(|t| normalize_hashtag(t.as_ref()))
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" | "ndjson" => Ok(InputFormat::Jsonl),
            "csv" => Ok(InputFormat::Csv),
            other => Err(Error::arg(format!("unknown input format {other:?}"))),
        }
    }
}

impl InputFormat {
    /// Guesses the format from a file extension; defaults to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => InputFormat::Csv,
            _ => InputFormat::Jsonl,
        }
    }
}

/// Result of parsing a post stream.
#[derive(Debug, Clone, Default)]
pub struct ParsedPosts {
    pub records: Vec<PostRecord>,
    /// Number of malformed records that were skipped.
    pub skipped: usize,
    /// Up to a handful of messages describing skipped records.
    pub diagnostics: Vec<String>,
}

/// Parses a stream of posts, skipping malformed records.
///
/// Fails outright if the stream cannot be read or if more than half of the
/// records are malformed.
pub fn parse_posts<R: Read>(source: R, format: InputFormat) -> Result<ParsedPosts> {
    let mut out = ParsedPosts::default();
    let mut total = 0usize;
    let skip = |out: &mut ParsedPosts, line: usize, msg: String| {
        out.skipped += 1;
        if out.diagnostics.len() < MAX_DIAGNOSTICS {
            out.diagnostics.push(format!("line {line}: {msg}"));
        }
    };

    match format {
        InputFormat::Jsonl => {
            let reader = std::io::BufReader::new(source);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                let text = line.trim();
                if text.is_empty() {
                    continue;
                }
                let value: Value = match serde_json::from_str(text) {
                    Ok(v) => v,
                    Err(e) => {
                        total += 1;
                        skip(&mut out, i + 1, format!("invalid json: {e}"));
                        continue;
                    }
                };
                if is_meta_line(&value) {
                    continue;
                }
                total += 1;
                match record_from_json(&value) {
                    Ok(r) => out.records.push(r),
                    Err(msg) => skip(&mut out, i + 1, msg),
                }
            }
        }
        InputFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .flexible(true)
                .trim(csv::Trim::All)
                .from_reader(source);
            let headers = match reader.headers() {
                Ok(h) => h.clone(),
                Err(e) => return Err(csv_error(e)),
            };
            if headers.is_empty() {
                return Ok(out);
            }
            let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
            let (Some(cu), Some(ct), Some(ch)) = (col("user"), col("time"), col("hashtags")) else {
                return Err(Error::Format {
                    malformed: 0,
                    total: 0,
                    samples: vec![format!(
                        "csv header must contain user,time,hashtags; found {:?}",
                        headers.iter().collect::<Vec<_>>()
                    )],
                });
            };
            for (i, row) in reader.records().enumerate() {
                total += 1;
                let line = i + 2;
                let row = match row {
                    Ok(r) => r,
                    Err(e) => {
                        if let csv::ErrorKind::Io(_) = e.kind() {
                            return Err(csv_error(e));
                        }
                        skip(&mut out, line, e.to_string());
                        continue;
                    }
                };
                let user = row.get(cu).unwrap_or("");
                let time = row.get(ct).unwrap_or("");
                let Some(tags) = row.get(ch) else {
                    skip(&mut out, line, "missing hashtags".into());
                    continue;
                };
                let rec = parse_time_str(time).and_then(|t| {
                    PostRecord::new(user, t, tags.split_whitespace()).map_err(|e| e.to_string())
                });
                match rec {
                    Ok(r) => out.records.push(r),
                    Err(msg) => skip(&mut out, line, msg),
                }
            }
        }
    }

    if out.skipped * 2 > total {
        return Err(Error::Format {
            malformed: out.skipped,
            total,
            samples: out.diagnostics,
        });
    }
    Ok(out)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format {
            malformed: 0,
            total: 0,
            samples: vec![format!("{other:?}")],
        },
    }
}

fn is_meta_line(v: &Value) -> bool {
    v.as_object()
        .is_some_and(|o| o.contains_key("meta") && !o.contains_key("user"))
}

fn record_from_json(v: &Value) -> std::result::Result<PostRecord, String> {
    let obj = v.as_object().ok_or("record is not an object")?;
    let user = match obj.get("user") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(_) => return Err("user is not a string".into()),
        None => return Err("missing user".into()),
    };
    let time = match obj.get("time") {
        Some(Value::String(s)) => parse_time_str(s)?,
        Some(Value::Number(n)) => {
            let secs = n.as_i64().ok_or("time is not an integer epoch")?;
            epoch_seconds(secs)?
        }
        Some(_) => return Err("time has unsupported type".into()),
        None => return Err("missing time".into()),
    };
    let tags = match obj.get("hashtags") {
        Some(Value::Array(a)) => a
            .iter()
            .map(|t| t.as_str().ok_or("hashtag is not a string"))
            .collect::<std::result::Result<Vec<_>, _>>()?,
        Some(_) => return Err("hashtags is not an array".into()),
        None => return Err("missing hashtags".into()),
    };
    PostRecord::new(user, time, tags).map_err(|e| e.to_string())
}

fn epoch_seconds(secs: i64) -> std::result::Result<DateTime<Utc>, String> {
    Utc.timestamp_opt(secs, 0)
        .single()
        .ok_or_else(|| format!("epoch {secs} out of range"))
}

/// ISO-8601 / RFC 3339 timestamp, a naive timestamp taken as UTC, or
/// integer epoch seconds.
pub fn parse_time_str(s: &str) -> std::result::Result<DateTime<Utc>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("missing time".into());
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(t.and_utc());
        }
    }
    if let Ok(secs) = s.parse::<i64>() {
        return epoch_seconds(secs);
    }
    Err(format!("unparseable time {s:?}"))
}

/// Hashtags removed before edge construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stoplist {
    pub query_keywords: BTreeSet<String>,
    pub generic: BTreeSet<String>,
}

impl Default for Stoplist {
    fn default() -> Self {
        Stoplist {
            query_keywords: [PRIMARY_QUERY_KEYWORD.to_string()].into(),
            generic: GENERIC_HASHTAGS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Stoplist {
    pub fn empty() -> Self {
        Stoplist {
            query_keywords: BTreeSet::new(),
            generic: BTreeSet::new(),
        }
    }

    /// Reads a plain-text list: one hashtag per line, blank lines ignored,
    /// lines starting with `"# "` are comments. Entries become the generic set.
    pub fn parse_generic<R: BufRead>(reader: R) -> Result<BTreeSet<String>> {
        let mut set = BTreeSet::new();
        for line in reader.lines() {
            let line = line?;
            let line = line.trim_end();
            if line.starts_with("# ") || line == "#" || line.trim().is_empty() {
                continue;
            }
            if let Some(tag) = normalize_hashtag(line) {
                set.insert(tag);
            }
        }
        Ok(set)
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.query_keywords.contains(tag) || self.generic.contains(tag)
    }

    pub fn len(&self) -> usize {
        self.query_keywords.union(&self.generic).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Default)]
pub struct Filtered {
    pub records: Vec<PostRecord>,
    /// Records dropped because no hashtag survived the stoplist.
    pub dropped: usize,
}

/// Removes stoplisted hashtags and drops records left without any.
pub fn apply_stoplist(records: Vec<PostRecord>, stoplist: &Stoplist) -> Filtered {
    let mut dropped = 0;
    let records = records
        .into_iter()
        .filter_map(|mut r| {
            r.hashtags.retain(|t| !stoplist.contains(t));
            if r.hashtags.is_empty() {
                dropped += 1;
                None
            } else {
                Some(r)
            }
        })
        .collect();
    Filtered { records, dropped }
}

/// Mapping from instants to daily layer indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayBinning {
    pub day0: NaiveDate,
    pub n_days: u32,
    /// Offset from UTC, in seconds, that defines where a calendar day starts.
    #[serde(default)]
    pub utc_offset_secs: i32,
}

impl DayBinning {
    pub fn new(start: NaiveDate, end: NaiveDate, offset: FixedOffset) -> Result<Self> {
        if start > end {
            return Err(Error::arg(format!(
                "window start {start} is after end {end}"
            )));
        }
        let n_days = (end - start).num_days() + 1;
        Ok(DayBinning {
            day0: start,
            n_days: u32::try_from(n_days).map_err(|_| Error::arg("window too long"))?,
            utc_offset_secs: offset.local_minus_utc(),
        })
    }

    pub fn offset(&self) -> FixedOffset {
        FixedOffset::east_opt(self.utc_offset_secs).unwrap_or(FixedOffset::east_opt(0).unwrap())
    }

    /// Day index of an instant, or `None` outside the window.
    pub fn day_of(&self, t: &DateTime<Utc>) -> Option<u32> {
        let local = t.with_timezone(&self.offset()).date_naive();
        let d = (local - self.day0).num_days();
        (0..i64::from(self.n_days)).contains(&d).then_some(d as u32)
    }

    pub fn date_of(&self, day: u32) -> NaiveDate {
        self.day0 + chrono::Days::new(u64::from(day))
    }
}

/// Records grouped by daily layer.
#[derive(Debug, Clone)]
pub struct BinnedPosts {
    pub binning: DayBinning,
    pub days: Vec<Vec<PostRecord>>,
    /// Records outside the window.
    pub discarded: usize,
}

impl BinnedPosts {
    pub fn n_records(&self) -> usize {
        self.days.iter().map(Vec::len).sum()
    }

    /// The first `n` days only.
    pub fn truncated(&self, n: usize) -> BinnedPosts {
        let n = n.min(self.days.len());
        BinnedPosts {
            binning: DayBinning {
                n_days: n as u32,
                ..self.binning
            },
            days: self.days[..n].to_vec(),
            discarded: 0,
        }
    }
}

/// Assigns each record to its calendar day inside `[start, end]`.
pub fn bin_by_day(
    records: Vec<PostRecord>,
    start: NaiveDate,
    end: NaiveDate,
    offset: FixedOffset,
) -> Result<BinnedPosts> {
    let binning = DayBinning::new(start, end, offset)?;
    let mut days = vec![Vec::new(); binning.n_days as usize];
    let mut discarded = 0;
    for r in records {
        match binning.day_of(&r.time) {
            Some(d) => days[d as usize].push(r),
            None => discarded += 1,
        }
    }
    Ok(BinnedPosts {
        binning,
        days,
        discarded,
    })
}

/// Smallest window covering every record, as calendar dates under `offset`.
pub fn data_window(records: &[PostRecord], offset: FixedOffset) -> Option<(NaiveDate, NaiveDate)> {
    let dates = records
        .iter()
        .map(|r| r.time.with_timezone(&offset).date_naive());
    let (lo, hi) = dates.fold(
        (None, None),
        |(lo, hi): (Option<NaiveDate>, Option<NaiveDate>), d| {
            (
                Some(lo.map_or(d, |l| l.min(d))),
                Some(hi.map_or(d, |h| h.max(d))),
            )
        },
    );
    lo.zip(hi)
}

/// Parses `+HH:MM`, `-HH:MM` or `Z`.
pub fn parse_utc_offset(s: &str) -> Result<FixedOffset> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("z") || s.eq_ignore_ascii_case("utc") {
        return Ok(FixedOffset::east_opt(0).unwrap());
    }
    let (sign, rest) = match s.as_bytes().first() {
        Some(b'+') => (1, &s[1..]),
        Some(b'-') => (-1, &s[1..]),
        _ => return Err(Error::arg(format!("bad utc offset {s:?}"))),
    };
    let (h, m) = rest.split_once(':').unwrap_or((rest, "0"));
    let h: i32 = h
        .parse()
        .map_err(|_| Error::arg(format!("bad utc offset {s:?}")))?;
    let m: i32 = m
        .parse()
        .map_err(|_| Error::arg(format!("bad utc offset {s:?}")))?;
    FixedOffset::east_opt(sign * (h * 3600 + m * 60))
        .ok_or_else(|| Error::arg(format!("utc offset out of range {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn utc() -> FixedOffset {
        FixedOffset::east_opt(0).unwrap()
    }

    fn rec(user: &str, time: &str, tags: &[&str]) -> PostRecord {
        PostRecord::new(user, parse_time_str(time).unwrap(), tags).unwrap()
    }

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn single_json_line() {
        let src = r##"{"user":"a","time":"2015-05-11T10:00:00Z","hashtags":["#Food"]}"##;
        let parsed = parse_posts(src.as_bytes(), InputFormat::Jsonl).unwrap();
        assert_eq!(
            parsed.records,
            vec![rec("a", "2015-05-11T10:00:00Z", &["food"])]
        );
        assert_eq!(parsed.skipped, 0);
    }

    #[test]
    fn empty_stream() {
        for fmt in [InputFormat::Jsonl, InputFormat::Csv] {
            let parsed = parse_posts(&b""[..], fmt).unwrap();
            assert!(parsed.records.is_empty());
            assert_eq!(parsed.skipped, 0);
        }
    }

    #[test]
    fn missing_user_is_skipped() {
        let src = "\
{\"user\":\"a\",\"time\":\"2015-05-11T10:00:00Z\",\"hashtags\":[\"x\"]}
{\"time\":\"2015-05-11T10:00:00Z\",\"hashtags\":[\"x\"]}
{\"user\":\"b\",\"time\":1431338400,\"hashtags\":[\"x\"]}
{\"user\":\"c\",\"time\":\"2015-05-11 10:00:00\",\"hashtags\":[]}
";
        let parsed = parse_posts(src.as_bytes(), InputFormat::Jsonl).unwrap();
        assert_eq!(parsed.records.len(), 3);
        assert_eq!(parsed.skipped, 1);
        assert_eq!(parsed.records[1].time, parsed.records[0].time);
        assert!(parsed.diagnostics[0].contains("line 2"));
    }

    #[test]
    fn mostly_malformed_is_fatal() {
        let src = "{\"user\":\"a\"}\nnot json\n{\"user\":\"b\",\"time\":0,\"hashtags\":[]}\n";
        match parse_posts(src.as_bytes(), InputFormat::Jsonl) {
            Err(Error::Format {
                malformed, total, ..
            }) => assert_eq!((malformed, total), (2, 3)),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn meta_header_line_ignored() {
        let src = "{\"meta\":{\"seed\":1}}\n{\"user\":\"a\",\"time\":0,\"hashtags\":[\"x\"]}\n";
        let parsed = parse_posts(src.as_bytes(), InputFormat::Jsonl).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.skipped, 0);
    }

    #[test]
    fn csv_input() {
        let src = "user,time,hashtags\na,2015-05-11T10:00:00Z,#Vino pasta #VINO\n,2015-05-11T10:00:00Z,x\nb,1431338400,Cibo\n";
        let parsed = parse_posts(src.as_bytes(), InputFormat::Csv).unwrap();
        assert_eq!(parsed.records.len(), 2);
        assert_eq!(parsed.records[0].hashtags, vec!["vino", "pasta"]);
        assert_eq!(parsed.records[1].hashtags, vec!["cibo"]);
        assert_eq!(parsed.skipped, 1);
    }

    #[test]
    fn csv_without_required_columns() {
        let src = "who,when\na,0\n";
        assert!(matches!(
            parse_posts(src.as_bytes(), InputFormat::Csv),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn normalization_is_case_stable() {
        assert_eq!(normalize_hashtag("FOOD"), normalize_hashtag("food"));
        assert_eq!(normalize_hashtag("##Food").as_deref(), Some("food"));
        assert_eq!(normalize_hashtag("#"), None);
        // "é" composed vs decomposed
        assert_eq!(
            normalize_hashtag("Caf\u{0065}\u{0301}"),
            normalize_hashtag("café")
        );
    }

    #[test]
    fn default_stoplist() {
        let s = Stoplist::default();
        assert_eq!(s.generic.len(), 11);
        assert!(s.contains("expo2015"));
        assert!(!s.contains("noexpo"));

        let out = apply_stoplist(
            vec![
                rec("a", "2015-05-11T00:00:00Z", &["expo2015", "vino"]),
                rec(
                    "b",
                    "2015-05-11T00:00:00Z",
                    &["expomilano", "food", "milan"],
                ),
                rec("c", "2015-05-11T00:00:00Z", &["expo", "milano"]),
            ],
            &s,
        );
        assert_eq!(out.dropped, 1);
        assert_eq!(out.records[0].hashtags, vec!["vino"]);
        assert_eq!(out.records[1].hashtags, vec!["food"]);
    }

    #[test]
    fn stoplist_file() {
        let text = "# generic tags\nExpo\n#Milano\n\nnews\n";
        let set = Stoplist::parse_generic(text.as_bytes()).unwrap();
        assert_eq!(set, ["expo", "milano", "news"].map(String::from).into());
    }

    #[test]
    fn window_of_161_days() {
        let b = DayBinning::new(date("2015-05-11"), date("2015-10-18"), utc()).unwrap();
        assert_eq!(b.n_days, 161);
        assert_eq!(b.date_of(160), date("2015-10-18"));
    }

    #[test]
    fn day_boundaries() {
        let recs = vec![
            rec("a", "2015-05-11T23:59:59Z", &["x"]),
            rec("b", "2015-05-10T12:00:00Z", &["x"]),
            rec("c", "2015-05-12T00:00:00Z", &["x"]),
        ];
        let binned = bin_by_day(recs, date("2015-05-11"), date("2015-05-12"), utc()).unwrap();
        assert_eq!(binned.days[0].len(), 1);
        assert_eq!(binned.days[0][0].user, "a");
        assert_eq!(binned.days[1][0].user, "c");
        assert_eq!(binned.discarded, 1);
    }

    #[test]
    fn offset_shifts_day() {
        let recs = vec![rec("a", "2015-05-11T23:30:00Z", &["x"])];
        let plus2 = parse_utc_offset("+02:00").unwrap();
        let binned = bin_by_day(recs, date("2015-05-11"), date("2015-05-12"), plus2).unwrap();
        assert_eq!(binned.days[1].len(), 1);
    }

    #[test]
    fn inverted_window() {
        assert!(bin_by_day(vec![], date("2015-05-12"), date("2015-05-11"), utc()).is_err());
    }

    #[test]
    fn offsets() {
        assert_eq!(parse_utc_offset("Z").unwrap().local_minus_utc(), 0);
        assert_eq!(
            parse_utc_offset("-05:30").unwrap().local_minus_utc(),
            -19800
        );
        assert!(parse_utc_offset("2").is_err());
    }
}
