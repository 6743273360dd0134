//! Synthetic workload generators shared by the benchmarks.

use rand::prelude::IndexedRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rumorboost::{
    Dataset, Deadline, FeatureMatrix, FeatureSchema, Interaction, InteractionKind, Label,
    MessageEvent, UserRecord,
};

/// A labeled `rows x 23` matrix with one informative column and noise in
/// the rest; labels follow a noisy threshold on the informative column.
pub fn synthetic_matrix(rows: usize, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = FeatureSchema::selected();
    let cols = schema.len();
    let mut values = Vec::with_capacity(rows * cols);
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let signal = rng.random_range(0..100) as f64;
        values.push(signal);
        for _ in 1..cols {
            values.push(rng.random_range(0..500) as f64 * 0.5);
        }
        let p = if signal >= 50.0 { 0.9 } else { 0.1 };
        labels.push(if rng.random_bool(p) {
            Label::Rumor
        } else {
            Label::NonRumor
        });
    }
    FeatureMatrix::new(values, rows, schema, Deadline::All, Some(labels)).unwrap()
}

const SNIPPETS: &[&str] = &[
    "真的假的？求证！",
    "今天2023年5月1日现场视频[吃惊]",
    "我们都被骗了？？",
    "官方回应：情况属实。",
    "#热点# 转发扩散 @新闻 ！！！",
];

/// Events with mixed text and interaction histories for extraction
/// benchmarks.
pub fn synthetic_events(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let events = (0..n)
        .map(|i| {
            let post_time = 1_600_000_000 + i as i64;
            let mut text = String::new();
            for _ in 0..rng.random_range(1..5) {
                text.push_str(SNIPPETS.choose(&mut rng).unwrap());
            }
            let interactions = (0..rng.random_range(0..50))
                .map(|_| Interaction {
                    kind: *[
                        InteractionKind::Comment,
                        InteractionKind::Repost,
                        InteractionKind::Like,
                    ]
                    .choose(&mut rng)
                    .unwrap(),
                    t: post_time + rng.random_range(0..400_000),
                })
                .collect();
            MessageEvent {
                event_id: format!("e{i}"),
                text,
                post_time,
                image_count: rng.random_range(0..3),
                video_count: 0,
                has_hyperlink: rng.random_bool(0.3),
                user: UserRecord {
                    user_name: format!("u{i}"),
                    registration_time: post_time - rng.random_range(1..5_000_000),
                    friends_count: rng.random_range(0..500),
                    followers_count: rng.random_range(0..100_000),
                    bi_followers_count: rng.random_range(0..300),
                    statuses_count: rng.random_range(0..20_000),
                    ..UserRecord::default()
                },
                interactions,
                label: Some(if i % 2 == 0 {
                    Label::Rumor
                } else {
                    Label::NonRumor
                }),
            }
        })
        .collect();
    Dataset::new(events)
}
