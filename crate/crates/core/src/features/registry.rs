//! The ordered registry of learning features.

use crate::schema::Target;

/// Window lengths in seconds with their column suffixes.
pub const WINDOWS: [(i64, &str); 6] = [
    (1800, "05h"),
    (3600, "1h"),
    (7200, "2h"),
    (43200, "12h"),
    (86400, "24h"),
    (172800, "48h"),
];

pub const ELEMENT_NAMES: [&str; 3] = ["hashtags", "links", "domains"];
pub const SIGNS: [&str; 2] = ["positive", "negative"];

fn types() -> impl Iterator<Item = &'static str> {
    Target::ALL.into_iter().map(Target::as_str)
}

pub fn raw_features() -> Vec<String> {
    [
        "tweet_type",
        "language",
        "engaged_with_user_follower_count",
        "engaged_with_user_following_count",
        "engaged_with_user_is_verified",
        "engaging_user_follower_count",
        "engaging_user_following_count",
        "engaging_user_is_verified",
        "engagee_follows_engager",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

/// Engagement graph columns in registry order: for each degree, the
/// viewer-side flags, viewer-side counts, author-side flags, author-side counts.
pub fn graph_engagement_features() -> Vec<String> {
    let mut v = Vec::new();
    for d in ["1d", "2d"] {
        for (side, other) in [("engaging", "engaged"), ("engaged", "engaging")] {
            for kind in ["flag", "count"] {
                for t in types() {
                    v.push(format!("graph_{side}_{kind}_{t}_from_{other}_{d}"));
                }
            }
        }
    }
    v
}

pub fn graph_features() -> Vec<String> {
    let mut v = vec![
        "graph_engagee_follows_engager_2d".to_string(),
        "graph_engager_follows_engagee_2d".to_string(),
    ];
    v.extend(graph_engagement_features());
    v
}

pub fn graph_ratio_features() -> Vec<String> {
    vec![
        "ratio_engaged_to_engaging_follower_counts".into(),
        "ratio_engaged_to_engaging_following_counts".into(),
    ]
}

pub fn time_features() -> Vec<String> {
    let mut v = Vec::new();
    for prefix in ["", "user_"] {
        for (_, w) in WINDOWS {
            for e in ELEMENT_NAMES {
                v.push(format!("{prefix}{e}_frequency_{w}"));
            }
        }
    }
    for (_, w) in WINDOWS {
        v.push(format!("engaging_saw_tweets_count_{w}"));
    }
    for (_, w) in WINDOWS {
        v.push(format!("engageds_tweets_views_count_{w}"));
    }
    v
}

pub fn engagement_ratio_features() -> Vec<String> {
    let mut families = vec!["engaging_count".to_string(), "engaged_with_count".to_string()];
    for e in ELEMENT_NAMES {
        families.push(format!("{e}_count"));
        families.push(format!("{e}_user_proxy_count"));
    }
    let mut v = Vec::new();
    for f in families {
        for s in SIGNS {
            for t in types() {
                v.push(format!("ratio_all_to_{f}_{s}_tweets_{t}"));
            }
        }
    }
    v
}

pub fn language_features() -> Vec<String> {
    vec![
        "this_language_seen_count".into(),
        "this_language_authored_count".into(),
    ]
}

pub fn language_ratio_features() -> Vec<String> {
    vec![
        "ratio_seen_tweets_in_this_langauge_to_total_seen_tweets".into(),
        "ratio_authored_tweets_in_this_langauge_to_total_authored_tweets".into(),
    ]
}

/// The 185 relevant features in registry order.
pub fn relevant_features() -> Vec<String> {
    let mut v = raw_features();
    v.extend(graph_features());
    v.extend(graph_ratio_features());
    v.extend(time_features());
    v.extend(engagement_ratio_features());
    v.extend(language_features());
    v.extend(language_ratio_features());
    v
}

/// The 8 whole-corpus features.
pub fn oracle_features() -> Vec<String> {
    [
        "hashtags_frequency",
        "links_frequency",
        "domains_frequency",
        "user_hashtags_frequency",
        "user_links_frequency",
        "user_domains_frequency",
        "engaging_saw_tweets_count",
        "engageds_tweets_views_count",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

/// Key columns identifying a row across stages.
pub const KEY_COLUMNS: [&str; 2] = ["tweet_id", "engaging_user_id"];

pub fn label_columns() -> Vec<String> {
    types().map(str::to_string).collect()
}
