//! Event records, labels and dataset loading.
//!
//! Datasets are line-delimited JSON, one event object per line. Required
//! keys are `event_id`, `text`, `post_time` and `user`; everything else
//! defaults to a neutral sentinel (0 for counts, empty string for text,
//! `unknown` for gender) because raw platform exports are dirty. Unknown
//! keys are ignored for forward compatibility.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, LineError, Result};

/// Class label of a message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Rumor,
    NonRumor,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Rumor => write!(f, "rumor"),
            Label::NonRumor => write!(f, "nonrumor"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    M,
    F,
    #[default]
    Unknown,
}

/// Author profile as captured at posting time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UserRecord {
    #[serde(default)]
    pub user_id: String,
    #[serde(default)]
    pub user_name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub verified: bool,
    #[serde(default)]
    pub gender: Gender,
    #[serde(default)]
    pub city: String,
    #[serde(default)]
    pub province: String,
    #[serde(default)]
    pub location: String,
    /// UTC seconds.
    #[serde(default)]
    pub registration_time: i64,
    #[serde(default)]
    pub friends_count: u64,
    #[serde(default)]
    pub followers_count: u64,
    #[serde(default)]
    pub bi_followers_count: u64,
    #[serde(default)]
    pub statuses_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionKind {
    Comment,
    Repost,
    Like,
}

/// One timestamped reaction to a message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub kind: InteractionKind,
    /// UTC seconds.
    pub t: i64,
}

/// One labeled (or unlabeled) microblog posting with its author record
/// and timestamped interactions. Interactions are kept sorted ascending
/// by timestamp; the loader enforces this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageEvent {
    pub event_id: String,
    pub text: String,
    /// UTC seconds.
    pub post_time: i64,
    #[serde(default)]
    pub image_count: u64,
    #[serde(default)]
    pub video_count: u64,
    #[serde(default)]
    pub has_hyperlink: bool,
    pub user: UserRecord,
    #[serde(default)]
    pub interactions: Vec<Interaction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

impl MessageEvent {
    /// Serialize back to the one-line record format.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("event serialization cannot fail")
    }
}

/// An ordered collection of events.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub events: Vec<MessageEvent>,
}

impl Dataset {
    pub fn new(events: Vec<MessageEvent>) -> Self {
        Dataset { events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Labels of all events, or `None` unless every event is labeled.
    pub fn labels(&self) -> Option<Vec<Label>> {
        self.events.iter().map(|e| e.label).collect()
    }
}

/// Findings from [`validate_dataset`]. Errors make the dataset unfit for
/// the requested purpose; warnings flag dirty-but-tolerated data.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

fn get_required<'a>(
    obj: &'a serde_json::Map<String, Value>,
    key: &'static str,
) -> Result<&'a Value> {
    obj.get(key).ok_or(Error::MissingRequired(key))
}

/// Extract an integer timestamp, accepting integral JSON numbers and
/// finite floats (truncated). Anything else is a `BadTimestamp`.
fn parse_timestamp(v: &Value, field: &'static str) -> Result<i64> {
    if let Some(i) = v.as_i64() {
        return Ok(i);
    }
    if let Some(f) = v.as_f64() {
        if f.is_finite() && f >= i64::MIN as f64 && f <= i64::MAX as f64 {
            return Ok(f as i64);
        }
    }
    Err(Error::BadTimestamp {
        field,
        detail: format!("expected UTC seconds, got {v}"),
    })
}

fn parse_count(obj: &serde_json::Map<String, Value>, key: &str) -> Result<u64> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(0),
        Some(v) => v.as_u64().ok_or_else(|| {
            Error::MalformedRecord(format!("`{key}` must be a nonnegative integer, got {v}"))
        }),
    }
}

fn parse_string(obj: &serde_json::Map<String, Value>, key: &str) -> Result<String> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(String::new()),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(v) => Err(Error::MalformedRecord(format!(
            "`{key}` must be a string, got {v}"
        ))),
    }
}

fn parse_bool(obj: &serde_json::Map<String, Value>, key: &str) -> Result<bool> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(false),
        Some(Value::Bool(b)) => Ok(*b),
        Some(v) => Err(Error::MalformedRecord(format!(
            "`{key}` must be a boolean, got {v}"
        ))),
    }
}

fn parse_user(v: &Value) -> Result<UserRecord> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::MalformedRecord(format!("`user` must be an object, got {v}")))?;
    let gender = match obj.get("gender") {
        None | Some(Value::Null) => Gender::Unknown,
        Some(Value::String(s)) => match s.as_str() {
            "m" | "M" => Gender::M,
            "f" | "F" => Gender::F,
            _ => Gender::Unknown,
        },
        Some(v) => {
            return Err(Error::MalformedRecord(format!(
                "`gender` must be a string, got {v}"
            )))
        }
    };
    let registration_time = match obj.get("registration_time") {
        None | Some(Value::Null) => 0,
        Some(v) => parse_timestamp(v, "registration_time")?,
    };
    Ok(UserRecord {
        user_id: parse_string(obj, "user_id")?,
        user_name: parse_string(obj, "user_name")?,
        description: parse_string(obj, "description")?,
        verified: parse_bool(obj, "verified")?,
        gender,
        city: parse_string(obj, "city")?,
        province: parse_string(obj, "province")?,
        location: parse_string(obj, "location")?,
        registration_time,
        friends_count: parse_count(obj, "friends_count")?,
        followers_count: parse_count(obj, "followers_count")?,
        bi_followers_count: parse_count(obj, "bi_followers_count")?,
        statuses_count: parse_count(obj, "statuses_count")?,
    })
}

fn parse_interactions(obj: &serde_json::Map<String, Value>) -> Result<Vec<Interaction>> {
    let Some(v) = obj.get("interactions") else {
        return Ok(Vec::new());
    };
    if v.is_null() {
        return Ok(Vec::new());
    }
    let arr = v
        .as_array()
        .ok_or_else(|| Error::MalformedRecord("`interactions` must be an array".into()))?;
    let mut out = Vec::with_capacity(arr.len());
    for item in arr {
        let io = item
            .as_object()
            .ok_or_else(|| Error::MalformedRecord("interaction entries must be objects".into()))?;
        let kind = match io.get("kind").and_then(Value::as_str) {
            Some("comment") => InteractionKind::Comment,
            Some("repost") => InteractionKind::Repost,
            Some("like") => InteractionKind::Like,
            other => {
                return Err(Error::MalformedRecord(format!(
                    "interaction kind must be comment|repost|like, got {other:?}"
                )))
            }
        };
        let t = parse_timestamp(
            get_required(io, "t")
                .map_err(|_| Error::MalformedRecord("interaction entry missing `t`".into()))?,
            "t",
        )?;
        out.push(Interaction { kind, t });
    }
    Ok(out)
}

/// Parse one line of the event-record format into a [`MessageEvent`].
///
/// Missing optional fields take their neutral defaults; interactions are
/// sorted ascending by timestamp. `event_id`, `text`, `post_time` and
/// `user` must be present.
pub fn parse_event(line: &str) -> Result<MessageEvent> {
    let value: Value = serde_json::from_str(line)
        .map_err(|e| Error::MalformedRecord(format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::MalformedRecord("record must be a JSON object".into()))?;

    let event_id = match get_required(obj, "event_id")? {
        Value::String(s) => s.clone(),
        v => {
            return Err(Error::MalformedRecord(format!(
                "`event_id` must be a string, got {v}"
            )))
        }
    };
    let text = match get_required(obj, "text")? {
        Value::String(s) => s.clone(),
        v => {
            return Err(Error::MalformedRecord(format!(
                "`text` must be a string, got {v}"
            )))
        }
    };
    let post_time = parse_timestamp(get_required(obj, "post_time")?, "post_time")?;
    let user = parse_user(get_required(obj, "user")?)?;

    let label = match obj.get("label") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => match s.as_str() {
            "rumor" => Some(Label::Rumor),
            "nonrumor" => Some(Label::NonRumor),
            other => {
                return Err(Error::MalformedRecord(format!(
                    "label must be rumor|nonrumor, got `{other}`"
                )))
            }
        },
        Some(v) => {
            return Err(Error::MalformedRecord(format!(
                "`label` must be a string, got {v}"
            )))
        }
    };

    let mut interactions = parse_interactions(obj)?;
    interactions.sort_by_key(|i| i.t);

    if event_id.is_empty() {
        return Err(Error::MalformedRecord("`event_id` must be nonempty".into()));
    }

    Ok(MessageEvent {
        event_id,
        text,
        post_time,
        image_count: parse_count(obj, "image_count")?,
        video_count: parse_count(obj, "video_count")?,
        has_hyperlink: parse_bool(obj, "has_hyperlink")?,
        user,
        interactions,
        label,
    })
}

/// Load a line-delimited dataset file. Blank lines are skipped; events
/// keep file order. Per-line parse failures are aggregated with their
/// line numbers, and duplicate event ids are rejected.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut events = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut line_errors = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_event(&line) {
            Ok(event) => {
                if !seen.insert(event.event_id.clone()) {
                    return Err(Error::DuplicateEventId(event.event_id));
                }
                events.push(event);
            }
            Err(e) => line_errors.push(LineError {
                line: idx + 1,
                message: e.to_string(),
            }),
        }
    }
    if !line_errors.is_empty() {
        return Err(Error::InvalidRecords(line_errors));
    }
    Ok(Dataset::new(events))
}

/// Check a dataset for structural problems without mutating it.
///
/// Errors: no events, or unlabeled events when `require_labels`.
/// Warnings: bi-follower count above follower count, interactions
/// stamped before the post, and registration after posting (negative
/// time span). All of these occur in real platform data.
pub fn validate_dataset(dataset: &Dataset, require_labels: bool) -> ValidationReport {
    let mut report = ValidationReport::default();
    if dataset.is_empty() {
        report.errors.push("dataset contains no events".into());
    }
    for event in &dataset.events {
        let id = &event.event_id;
        if require_labels && event.label.is_none() {
            report.errors.push(format!("event `{id}` is unlabeled"));
        }
        if event.user.bi_followers_count > event.user.followers_count {
            report.warnings.push(format!(
                "event `{id}`: bi_followers_count {} exceeds followers_count {}",
                event.user.bi_followers_count, event.user.followers_count
            ));
        }
        if event.interactions.iter().any(|i| i.t < event.post_time) {
            report
                .warnings
                .push(format!("event `{id}`: interactions before post time"));
        }
        if event.user.registration_time > event.post_time {
            report.warnings.push(format!(
                "event `{id}`: registration after post time (negative time span)"
            ));
        }
    }
    report
}
