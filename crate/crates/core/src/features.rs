//! Feature extraction at a detecting deadline.
//!
//! Every event maps to a fixed-order numeric vector. Constant features
//! are fixed at posting time (text surface counts plus author profile);
//! changing features accumulate during propagation and are counted only
//! inside the observation window `[post_time, post_time + 3600*T]`, where
//! the deadline `T` is in hours. Changing features always occupy the last
//! positions of a schema.
//!
//! Two feature catalogs are built in: the 23-feature production schema
//! and the 34-feature candidate schema used by the selection workflow.

use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Gender, InteractionKind, Label, MessageEvent, UserRecord};
use crate::error::{Error, Result};

/// Observation window length, in hours after posting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Deadline {
    Hours(f64),
    /// Entire interaction history.
    All,
}

impl Deadline {
    /// A finite deadline; rejects negative or non-finite hour counts.
    pub fn hours(t: f64) -> Result<Self> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::NegativeDeadline(t));
        }
        Ok(Deadline::Hours(t))
    }

    /// Does a timestamp fall inside the window anchored at `post_time`?
    /// The window is closed on both ends.
    pub fn contains(&self, post_time: i64, t: i64) -> bool {
        if t < post_time {
            return false;
        }
        match self {
            Deadline::All => true,
            Deadline::Hours(h) => (t - post_time) as f64 <= 3600.0 * h,
        }
    }
}

impl fmt::Display for Deadline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Deadline::Hours(h) => write!(f, "{h}"),
            Deadline::All => write!(f, "all"),
        }
    }
}

impl std::str::FromStr for Deadline {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Deadline::All);
        }
        let t: f64 = s.parse().map_err(|_| format!("invalid deadline `{s}`"))?;
        Deadline::hours(t).map_err(|e| e.to_string())
    }
}

/// Everything the engine knows how to compute from an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    TimeSpan,
    MessageLength,
    QuestionMarks,
    Exclamations,
    Quotes,
    Brackets,
    FirstPersonPronouns,
    SecondPersonPronouns,
    ThirdPersonPronouns,
    AtMentions,
    Topics,
    Dates,
    Digits,
    Emoji,
    FriendsCount,
    FollowersCount,
    BiFollowersCount,
    RegistrationTime,
    AllMessagesCount,
    UserInfluence,
    UserIdLength,
    UserNameLength,
    DescriptionLength,
    Verified,
    Gender,
    CityBucket,
    ProvinceBucket,
    LocationBucket,
    ImageCount,
    VideoCount,
    Hyperlink,
    Comments,
    Reposts,
    Likes,
}

impl Feature {
    pub fn name(&self) -> &'static str {
        match self {
            Feature::TimeSpan => "time_span",
            Feature::MessageLength => "message_length",
            Feature::QuestionMarks => "question_marks",
            Feature::Exclamations => "exclamations",
            Feature::Quotes => "quotes",
            Feature::Brackets => "brackets",
            Feature::FirstPersonPronouns => "first_person_pronouns",
            Feature::SecondPersonPronouns => "second_person_pronouns",
            Feature::ThirdPersonPronouns => "third_person_pronouns",
            Feature::AtMentions => "at_mentions",
            Feature::Topics => "topics",
            Feature::Dates => "dates",
            Feature::Digits => "digits",
            Feature::Emoji => "emoji",
            Feature::FriendsCount => "friends_count",
            Feature::FollowersCount => "followers_count",
            Feature::BiFollowersCount => "bi_followers_count",
            Feature::RegistrationTime => "registration_time",
            Feature::AllMessagesCount => "all_messages_count",
            Feature::UserInfluence => "user_influence",
            Feature::UserIdLength => "user_id_length",
            Feature::UserNameLength => "user_name_length",
            Feature::DescriptionLength => "description_length",
            Feature::Verified => "verified",
            Feature::Gender => "gender",
            Feature::CityBucket => "city_bucket",
            Feature::ProvinceBucket => "province_bucket",
            Feature::LocationBucket => "location_bucket",
            Feature::ImageCount => "image_count",
            Feature::VideoCount => "video_count",
            Feature::Hyperlink => "hyperlink",
            Feature::Comments => "comments",
            Feature::Reposts => "reposts",
            Feature::Likes => "likes",
        }
    }

    pub fn from_name(name: &str) -> Option<Feature> {
        ALL_FEATURES.iter().copied().find(|f| f.name() == name)
    }

    /// Changing features accumulate during propagation; everything else
    /// is fixed at posting time.
    pub fn is_changing(&self) -> bool {
        matches!(self, Feature::Comments | Feature::Reposts | Feature::Likes)
    }

    /// Value for one event at the given deadline.
    pub fn value(&self, event: &MessageEvent, deadline: Deadline) -> f64 {
        let user = &event.user;
        match self {
            Feature::TimeSpan => (event.post_time - user.registration_time) as f64 / 3600.0,
            Feature::MessageLength => event.text.trim().chars().count() as f64,
            Feature::QuestionMarks => count_chars(&event.text, &['?', '？']) as f64,
            Feature::Exclamations => count_chars(&event.text, &['!', '！']) as f64,
            Feature::Quotes => count_chars(&event.text, QUOTE_CHARS) as f64,
            Feature::Brackets => text_shape(&event.text).brackets as f64,
            Feature::FirstPersonPronouns => count_lexicon(&event.text, FIRST_PERSON) as f64,
            Feature::SecondPersonPronouns => count_lexicon(&event.text, SECOND_PERSON) as f64,
            Feature::ThirdPersonPronouns => count_lexicon(&event.text, THIRD_PERSON) as f64,
            Feature::AtMentions => count_chars(&event.text, &['@']) as f64,
            Feature::Topics => (count_chars(&event.text, &['#']) / 2) as f64,
            Feature::Dates => count_dates(&event.text) as f64,
            Feature::Digits => count_digits(&event.text) as f64,
            Feature::Emoji => {
                (text_shape(&event.text).shortcodes + count_emoji_codepoints(&event.text)) as f64
            }
            Feature::FriendsCount => user.friends_count as f64,
            Feature::FollowersCount => user.followers_count as f64,
            Feature::BiFollowersCount => user.bi_followers_count as f64,
            Feature::RegistrationTime => user.registration_time as f64 / 86_400.0,
            Feature::AllMessagesCount => user.statuses_count as f64,
            Feature::UserInfluence => user_influence(user),
            Feature::UserIdLength => user.user_id.chars().count() as f64,
            Feature::UserNameLength => user.user_name.chars().count() as f64,
            Feature::DescriptionLength => user.description.chars().count() as f64,
            Feature::Verified => user.verified as u8 as f64,
            Feature::Gender => match user.gender {
                Gender::Unknown => 0.0,
                Gender::M => 1.0,
                Gender::F => 2.0,
            },
            Feature::CityBucket => string_bucket(&user.city),
            Feature::ProvinceBucket => string_bucket(&user.province),
            Feature::LocationBucket => string_bucket(&user.location),
            Feature::ImageCount => event.image_count as f64,
            Feature::VideoCount => event.video_count as f64,
            Feature::Hyperlink => event.has_hyperlink as u8 as f64,
            Feature::Comments => count_changing(event, InteractionKind::Comment, deadline) as f64,
            Feature::Reposts => count_changing(event, InteractionKind::Repost, deadline) as f64,
            Feature::Likes => count_changing(event, InteractionKind::Like, deadline) as f64,
        }
    }
}

const ALL_FEATURES: &[Feature] = &[
    Feature::TimeSpan,
    Feature::MessageLength,
    Feature::QuestionMarks,
    Feature::Exclamations,
    Feature::Quotes,
    Feature::Brackets,
    Feature::FirstPersonPronouns,
    Feature::SecondPersonPronouns,
    Feature::ThirdPersonPronouns,
    Feature::AtMentions,
    Feature::Topics,
    Feature::Dates,
    Feature::Digits,
    Feature::Emoji,
    Feature::FriendsCount,
    Feature::FollowersCount,
    Feature::BiFollowersCount,
    Feature::RegistrationTime,
    Feature::AllMessagesCount,
    Feature::UserInfluence,
    Feature::UserIdLength,
    Feature::UserNameLength,
    Feature::DescriptionLength,
    Feature::Verified,
    Feature::Gender,
    Feature::CityBucket,
    Feature::ProvinceBucket,
    Feature::LocationBucket,
    Feature::ImageCount,
    Feature::VideoCount,
    Feature::Hyperlink,
    Feature::Comments,
    Feature::Reposts,
    Feature::Likes,
];

/// The 20 constant features of the production schema, in canonical order.
const SELECTED_CONSTANT: &[Feature] = &[
    Feature::TimeSpan,
    Feature::MessageLength,
    Feature::QuestionMarks,
    Feature::Exclamations,
    Feature::Quotes,
    Feature::Brackets,
    Feature::FirstPersonPronouns,
    Feature::SecondPersonPronouns,
    Feature::ThirdPersonPronouns,
    Feature::AtMentions,
    Feature::Topics,
    Feature::Dates,
    Feature::Digits,
    Feature::Emoji,
    Feature::FriendsCount,
    Feature::FollowersCount,
    Feature::BiFollowersCount,
    Feature::RegistrationTime,
    Feature::AllMessagesCount,
    Feature::UserInfluence,
];

const EXTRA_CANDIDATE_CONSTANT: &[Feature] = &[
    Feature::UserIdLength,
    Feature::UserNameLength,
    Feature::DescriptionLength,
    Feature::Verified,
    Feature::Gender,
    Feature::CityBucket,
    Feature::ProvinceBucket,
    Feature::LocationBucket,
    Feature::ImageCount,
    Feature::VideoCount,
    Feature::Hyperlink,
];

const CHANGING: &[Feature] = &[Feature::Comments, Feature::Reposts, Feature::Likes];

/// An ordered feature list with constant features first and changing
/// features last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    features: Vec<Feature>,
    constant_count: usize,
}

impl FeatureSchema {
    /// The 23-feature production schema (20 constant + 3 changing).
    pub fn selected() -> Self {
        let mut features = SELECTED_CONSTANT.to_vec();
        features.extend_from_slice(CHANGING);
        FeatureSchema {
            features,
            constant_count: SELECTED_CONSTANT.len(),
        }
    }

    /// The full 34-feature candidate schema (31 constant + 3 changing)
    /// used when selecting features from scratch.
    pub fn candidates() -> Self {
        let mut features = SELECTED_CONSTANT.to_vec();
        features.extend_from_slice(EXTRA_CANDIDATE_CONSTANT);
        features.extend_from_slice(CHANGING);
        FeatureSchema {
            features,
            constant_count: SELECTED_CONSTANT.len() + EXTRA_CANDIDATE_CONSTANT.len(),
        }
    }

    /// Build a schema from an ordered list of features. The list must be
    /// free of duplicates and keep changing features at the end.
    pub fn from_features(features: Vec<Feature>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::SchemaMismatch("schema has no features".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for f in &features {
            if !seen.insert(*f) {
                return Err(Error::SchemaMismatch(format!(
                    "duplicate feature `{}`",
                    f.name()
                )));
            }
        }
        let constant_count = features.iter().filter(|f| !f.is_changing()).count();
        if features[..constant_count].iter().any(Feature::is_changing) {
            return Err(Error::SchemaMismatch(
                "changing features must come after constant features".into(),
            ));
        }
        Ok(FeatureSchema {
            features,
            constant_count,
        })
    }

    /// Resolve feature names (e.g. from a model file) against the catalog.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut features = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            let f = Feature::from_name(n)
                .ok_or_else(|| Error::SchemaMismatch(format!("unknown feature name `{n}`")))?;
            features.push(f);
        }
        Self::from_features(features)
    }

    /// Keep only the columns at `indices` (ascending, no duplicates).
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::SchemaMismatch(
                "column indices must be strictly ascending".into(),
            ));
        }
        let mut features = Vec::with_capacity(indices.len());
        for &i in indices {
            let f = self.features.get(i).ok_or_else(|| {
                Error::SchemaMismatch(format!(
                    "column index {i} out of range for {} features",
                    self.len()
                ))
            })?;
            features.push(*f);
        }
        Self::from_features(features)
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.features.iter().map(Feature::name).collect()
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn constant_count(&self) -> usize {
        self.constant_count
    }

    pub fn changing_count(&self) -> usize {
        self.features.len() - self.constant_count
    }
}

/// Row-major matrix of extracted features, aligned with the source
/// dataset's event order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    rows: usize,
    schema: FeatureSchema,
    deadline: Deadline,
    labels: Option<Vec<Label>>,
}

impl FeatureMatrix {
    pub fn new(
        values: Vec<f64>,
        rows: usize,
        schema: FeatureSchema,
        deadline: Deadline,
        labels: Option<Vec<Label>>,
    ) -> Result<Self> {
        if values.len() != rows * schema.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: rows * schema.len(),
            });
        }
        if let Some(l) = &labels {
            if l.len() != rows {
                return Err(Error::LengthMismatch {
                    left: l.len(),
                    right: rows,
                });
            }
        }
        Ok(FeatureMatrix {
            values,
            rows,
            schema,
            deadline,
            labels,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.schema.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols()..(i + 1) * self.cols()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn deadline(&self) -> Deadline {
        self.deadline
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    /// Copy out the rows at `indices`, preserving their order.
    pub fn subset_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let cols = self.cols();
        let mut values = Vec::with_capacity(indices.len() * cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        FeatureMatrix {
            values,
            rows: indices.len(),
            schema: self.schema.clone(),
            deadline: self.deadline,
            labels,
        }
    }

    /// Keep only the columns at `indices` (ascending); the schema shrinks
    /// with the data.
    pub fn select_columns(&self, indices: &[usize]) -> Result<FeatureMatrix> {
        let schema = self.schema.select(indices)?;
        let mut values = Vec::with_capacity(self.rows * indices.len());
        for r in 0..self.rows {
            let row = self.row(r);
            for &c in indices {
                values.push(row[c]);
            }
        }
        Ok(FeatureMatrix {
            values,
            rows: self.rows,
            schema,
            deadline: self.deadline,
            labels: self.labels.clone(),
        })
    }

    /// Render as a tab-delimited table: header of feature names, one row
    /// per event, label as the final column when present. Numbers use
    /// round-trip-exact formatting.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<String> = self.schema.names().iter().map(|s| s.to_string()).collect();
        if self.labels.is_some() {
            header.push("label".into());
        }
        out.push_str(&header.join("\t"));
        out.push('\n');
        for r in 0..self.rows {
            let mut fields: Vec<String> = self.row(r).iter().map(|v| format!("{v}")).collect();
            if let Some(labels) = &self.labels {
                fields.push(labels[r].to_string());
            }
            out.push_str(&fields.join("\t"));
            out.push('\n');
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Text counters
// ---------------------------------------------------------------------------

const QUOTE_CHARS: &[char] = &[
    '"', '\'', '“', '”', '‘', '’', '«', '»', '「', '」', '『', '』', '《', '》', '〈', '〉', '＂',
    '＇',
];

const OPENING_BRACKETS: &[char] = &['(', '[', '{', '（', '［', '｛', '【'];

// Longest entries first so the left-to-right scan is longest-match.
const FIRST_PERSON: &[&str] = &["我们", "咱们", "俺们", "我", "咱", "俺"];
const SECOND_PERSON: &[&str] = &["你们", "你", "您", "妳"];
const THIRD_PERSON: &[&str] = &["他们", "她们", "它们", "他", "她", "它"];

fn count_chars(text: &str, set: &[char]) -> usize {
    text.chars().filter(|c| set.contains(c)).count()
}

fn count_digits(text: &str) -> usize {
    text.chars()
        .filter(|c| c.is_ascii_digit() || ('０'..='９').contains(c))
        .count()
}

/// Non-overlapping longest-match scan over one lexicon.
fn count_lexicon(text: &str, lexicon: &[&str]) -> usize {
    let mut count = 0;
    let mut i = 0;
    while i < text.len() {
        let rest = &text[i..];
        if let Some(entry) = lexicon.iter().find(|e| rest.starts_with(**e)) {
            count += 1;
            i += entry.len();
        } else {
            i += rest.chars().next().map_or(1, char::len_utf8);
        }
    }
    count
}

fn date_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        // Alternatives ordered longest-first; find_iter is non-overlapping
        // and prefers earlier alternatives at the same start.
        Regex::new(
            r"(?:[0-9]{4}年[0-9]{1,2}月[0-9]{1,2}日)|(?:[0-9]{4}-[0-9]{2}-[0-9]{2})|(?:[0-9]{1,2}月[0-9]{1,2}[日号])|(?:[0-9]{2}-[0-9]{2})",
        )
        .expect("date pattern compiles")
    })
}

fn count_dates(text: &str) -> usize {
    date_regex().find_iter(text).count()
}

struct TextShape {
    /// Opening brackets outside emoticon shortcodes.
    brackets: usize,
    /// `[word]` emoticon shortcodes: 1..=8 non-bracket chars in ASCII
    /// square brackets.
    shortcodes: usize,
}

/// One pass resolving the bracket/shortcode ambiguity: a shortcode
/// consumes its brackets, so they are not counted again as brackets.
fn text_shape(text: &str) -> TextShape {
    let chars: Vec<char> = text.chars().collect();
    let mut brackets = 0;
    let mut shortcodes = 0;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '[' {
            let mut j = i + 1;
            while j < chars.len() && j - i <= 8 && chars[j] != '[' && chars[j] != ']' {
                j += 1;
            }
            if j < chars.len() && chars[j] == ']' && j > i + 1 {
                shortcodes += 1;
                i = j + 1;
                continue;
            }
            brackets += 1;
        } else if OPENING_BRACKETS.contains(&c) {
            brackets += 1;
        }
        i += 1;
    }
    TextShape {
        brackets,
        shortcodes,
    }
}

/// Codepoints in the common emoji blocks.
fn count_emoji_codepoints(text: &str) -> usize {
    text.chars()
        .filter(|c| {
            let u = *c as u32;
            matches!(u,
                0x1F300..=0x1F5FF
                | 0x1F600..=0x1F64F
                | 0x1F680..=0x1F6FF
                | 0x1F900..=0x1F9FF
                | 0x1FA70..=0x1FAFF
                | 0x2600..=0x26FF
                | 0x2700..=0x27BF)
        })
        .count()
}

fn fnv1a32(s: &str) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for b in s.as_bytes() {
        h ^= u32::from(*b);
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

/// Stable 32-bit bucket for free-text categorical fields; empty maps to 0.
fn string_bucket(s: &str) -> f64 {
    if s.is_empty() {
        0.0
    } else {
        f64::from(fnv1a32(s))
    }
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

/// Log-ratio of an author's non-reciprocal reach to their following
/// count: `ln((max(followers - bi_followers, 0) + 1) / (friends + 1))`.
/// The numerator is clamped at zero and shifted by one so the value is
/// finite even on dirty profiles where bi-followers exceed followers.
pub fn user_influence(user: &UserRecord) -> f64 {
    let reach = user.followers_count.saturating_sub(user.bi_followers_count);
    ((reach + 1) as f64 / (user.friends_count + 1) as f64).ln()
}

/// Number of interactions of `kind` observed by the deadline, i.e. with
/// `post_time <= t <= post_time + 3600*T`.
pub fn count_changing(event: &MessageEvent, kind: InteractionKind, deadline: Deadline) -> u64 {
    event
        .interactions
        .iter()
        .filter(|i| i.kind == kind && deadline.contains(event.post_time, i.t))
        .count() as u64
}

/// The constant (deadline-independent) features of one event, in schema
/// order.
pub fn extract_constant_features(event: &MessageEvent, schema: &FeatureSchema) -> Vec<f64> {
    schema.features()[..schema.constant_count()]
        .iter()
        .map(|f| f.value(event, Deadline::All))
        .collect()
}

/// Extract the full feature matrix for a dataset at a deadline. Row `i`
/// corresponds to event `i`; labels are carried over only when every
/// event is labeled.
pub fn materialize(
    dataset: &Dataset,
    deadline: Deadline,
    schema: &FeatureSchema,
) -> Result<FeatureMatrix> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let cols = schema.len();
    let mut values = Vec::with_capacity(dataset.len() * cols);
    for event in &dataset.events {
        for f in schema.features() {
            values.push(f.value(event, deadline));
        }
    }
    FeatureMatrix::new(
        values,
        dataset.len(),
        schema.clone(),
        deadline,
        dataset.labels(),
    )
}
