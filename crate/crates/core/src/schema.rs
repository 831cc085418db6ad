//! Column names, closed vocabularies, and dataset identifiers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TEXT_TOKENS: &str = "text_tokens";
pub const HASHTAGS: &str = "hashtags";
pub const TWEET_ID: &str = "tweet_id";
pub const PRESENT_MEDIA: &str = "present_media";
pub const PRESENT_LINKS: &str = "present_links";
pub const PRESENT_DOMAINS: &str = "present_domains";
pub const TWEET_TYPE: &str = "tweet_type";
pub const LANGUAGE: &str = "language";
pub const TWEET_TIMESTAMP: &str = "tweet_timestamp";
pub const ENGAGED_ID: &str = "engaged_with_user_id";
pub const ENGAGED_FOLLOWERS: &str = "engaged_with_user_follower_count";
pub const ENGAGED_FOLLOWING: &str = "engaged_with_user_following_count";
pub const ENGAGED_VERIFIED: &str = "engaged_with_user_is_verified";
pub const ENGAGED_CREATION: &str = "engaged_with_user_account_creation";
pub const ENGAGING_ID: &str = "engaging_user_id";
pub const ENGAGING_FOLLOWERS: &str = "engaging_user_follower_count";
pub const ENGAGING_FOLLOWING: &str = "engaging_user_following_count";
pub const ENGAGING_VERIFIED: &str = "engaging_user_is_verified";
pub const ENGAGING_CREATION: &str = "engaging_user_account_creation";
pub const FOLLOWS: &str = "engagee_follows_engager";
pub const REPLY_TS: &str = "reply_timestamp";
pub const RETWEET_TS: &str = "retweet_timestamp";
pub const QUOTE_TS: &str = "retweet_with_comment_timestamp";
pub const LIKE_TS: &str = "like_timestamp";

/// The 24 input columns in file order.
pub const RAW_COLUMNS: [&str; 24] = [
    TEXT_TOKENS,
    HASHTAGS,
    TWEET_ID,
    PRESENT_MEDIA,
    PRESENT_LINKS,
    PRESENT_DOMAINS,
    TWEET_TYPE,
    LANGUAGE,
    TWEET_TIMESTAMP,
    ENGAGED_ID,
    ENGAGED_FOLLOWERS,
    ENGAGED_FOLLOWING,
    ENGAGED_VERIFIED,
    ENGAGED_CREATION,
    ENGAGING_ID,
    ENGAGING_FOLLOWERS,
    ENGAGING_FOLLOWING,
    ENGAGING_VERIFIED,
    ENGAGING_CREATION,
    FOLLOWS,
    REPLY_TS,
    RETWEET_TS,
    QUOTE_TS,
    LIKE_TS,
];

/// Tweet elements used by the trend and history features.
pub const ELEMENTS: [&str; 3] = [HASHTAGS, PRESENT_LINKS, PRESENT_DOMAINS];

/// Short element names as they appear in feature names.
pub fn element_short(col: &str) -> &'static str {
    match col {
        HASHTAGS => "hashtags",
        PRESENT_LINKS => "links",
        PRESENT_DOMAINS => "domains",
        _ => panic!("not an element column: {col}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TweetType {
    Retweet,
    Quote,
    Reply,
    TopLevel,
}

impl TweetType {
    pub const ALL: [TweetType; 4] = [
        TweetType::Retweet,
        TweetType::Quote,
        TweetType::Reply,
        TweetType::TopLevel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TweetType::Retweet => "Retweet",
            TweetType::Quote => "Quote",
            TweetType::Reply => "Reply",
            TweetType::TopLevel => "TopLevel",
        }
    }
}

impl FromStr for TweetType {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        TweetType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown tweet type {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Media {
    Photo,
    Video,
    Gif,
}

impl Media {
    pub const ALL: [Media; 3] = [Media::Photo, Media::Video, Media::Gif];

    pub fn as_str(self) -> &'static str {
        match self {
            Media::Photo => "Photo",
            Media::Video => "Video",
            Media::Gif => "GIF",
        }
    }
}

impl FromStr for Media {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Media::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown media type {s:?}"))
    }
}

/// The five prediction targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Like,
    Reply,
    Retweet,
    Quote,
    React,
}

impl Target {
    pub const ALL: [Target; 5] = [
        Target::Like,
        Target::Reply,
        Target::Retweet,
        Target::Quote,
        Target::React,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Target::Like => "like",
            Target::Reply => "reply",
            Target::Retweet => "retweet",
            Target::Quote => "quote",
            Target::React => "react",
        }
    }

    /// Label column name.
    pub fn label(self) -> &'static str {
        self.as_str()
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Target::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::input(format!("unknown target {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "train")]
    Train,
    #[serde(rename = "val")]
    Val,
    #[serde(rename = "test")]
    Test,
    #[serde(rename = "val+test")]
    ValTest,
}

impl Source {
    pub const ALL: [Source; 4] = [Source::Train, Source::Val, Source::Test, Source::ValTest];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Train => "train",
            Source::Val => "val",
            Source::Test => "test",
            Source::ValTest => "val+test",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Source::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::input(format!("unknown source {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Technique {
    #[serde(rename = "full")]
    Full,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "EU")]
    Eu,
    #[serde(rename = "EWU")]
    Ewu,
    #[serde(rename = "inter_EWU+EU")]
    Inter,
    #[serde(rename = "tweet")]
    Tweet,
}

impl Technique {
    pub const ALL: [Technique; 6] = [
        Technique::Full,
        Technique::Random,
        Technique::Eu,
        Technique::Ewu,
        Technique::Inter,
        Technique::Tweet,
    ];
    pub const SAMPLED: [Technique; 5] = [
        Technique::Random,
        Technique::Eu,
        Technique::Ewu,
        Technique::Inter,
        Technique::Tweet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Technique::Full => "full",
            Technique::Random => "random",
            Technique::Eu => "EU",
            Technique::Ewu => "EWU",
            Technique::Inter => "inter_EWU+EU",
            Technique::Tweet => "tweet",
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Technique {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Technique::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::input(format!("unknown technique {s:?}")))
    }
}

pub const PERCENTS: [u32; 4] = [1, 2, 5, 10];

/// Names every persisted dataset artifact.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DatasetId {
    pub source: Source,
    pub technique: Technique,
    pub percent: u32,
    pub prefix: String,
}

impl DatasetId {
    pub fn new(source: Source, technique: Technique, percent: u32, prefix: &str) -> Result<Self> {
        let id = DatasetId {
            source,
            technique,
            percent,
            prefix: prefix.to_string(),
        };
        id.validate()?;
        Ok(id)
    }

    pub fn full(source: Source, prefix: &str) -> Self {
        DatasetId {
            source,
            technique: Technique::Full,
            percent: 100,
            prefix: prefix.to_string(),
        }
    }

    pub fn sampled(source: Source, technique: Technique, percent: u32, prefix: &str) -> Self {
        DatasetId {
            source,
            technique,
            percent,
            prefix: prefix.to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let full = self.technique == Technique::Full;
        if full != (self.percent == 100) {
            return Err(Error::input(format!(
                "technique {} with percent {}",
                self.technique, self.percent
            )));
        }
        if !full && !PERCENTS.contains(&self.percent) {
            return Err(Error::input(format!("unsupported percent {}", self.percent)));
        }
        Ok(())
    }

    pub fn with_prefix(&self, prefix: &str) -> Self {
        DatasetId {
            prefix: prefix.to_string(),
            ..self.clone()
        }
    }

    pub fn with_source(&self, source: Source) -> Self {
        DatasetId {
            source,
            ..self.clone()
        }
    }

    /// Name without any stage prefix.
    pub fn base_name(&self) -> String {
        if self.technique == Technique::Full {
            self.source.as_str().to_string()
        } else {
            format!(
                "{}_{}_sample_{}pct",
                self.source, self.technique, self.percent
            )
        }
    }

    pub fn name(&self) -> String {
        format!("{}{}", self.prefix, self.base_name())
    }

    /// Parses a base name (no prefix) such as `val+test_EU_sample_5pct`.
    pub fn parse_base(name: &str, prefix: &str) -> Result<Self> {
        if let Ok(source) = name.parse::<Source>() {
            return Ok(DatasetId::full(source, prefix));
        }
        let bad = || Error::input(format!("bad dataset name {name:?}"));
        let (source, rest) = name.split_once('_').ok_or_else(bad)?;
        let rest = rest.strip_suffix("pct").ok_or_else(bad)?;
        let (tech, pct) = rest.rsplit_once("_sample_").ok_or_else(bad)?;
        let id = DatasetId {
            source: source.parse()?,
            technique: tech.parse()?,
            percent: pct.parse().map_err(|_| bad())?,
            prefix: prefix.to_string(),
        };
        id.validate()?;
        Ok(id)
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_names() {
        let id = DatasetId::new(Source::Train, Technique::Ewu, 10, "Final_").unwrap();
        assert_eq!(id.name(), "Final_train_EWU_sample_10pct");
        assert_eq!(DatasetId::full(Source::ValTest, "").name(), "val+test");
        let inter = DatasetId::sampled(Source::Test, Technique::Inter, 1, "");
        assert_eq!(inter.name(), "test_inter_EWU+EU_sample_1pct");
    }

    #[test]
    fn parse_inverts_render() {
        for s in Source::ALL {
            for t in Technique::SAMPLED {
                for p in PERCENTS {
                    let id = DatasetId::sampled(s, t, p, "X_");
                    assert_eq!(DatasetId::parse_base(&id.base_name(), "X_").unwrap(), id);
                }
            }
            let f = DatasetId::full(s, "");
            assert_eq!(DatasetId::parse_base(&f.base_name(), "").unwrap(), f);
        }
    }

    #[test]
    fn full_iff_hundred() {
        assert!(DatasetId::new(Source::Train, Technique::Full, 10, "").is_err());
        assert!(DatasetId::new(Source::Train, Technique::Random, 100, "").is_err());
        assert!(DatasetId::new(Source::Train, Technique::Random, 3, "").is_err());
    }
}
