//! Deterministic synthetic interaction corpora.
//!
//! Labels are drawn from a logistic model over author popularity, trending
//! hashtags, the follow flag, and the viewer's prior engagements with the
//! same author. Favourite authors only shape which tweets a viewer sees.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{records_to_table, InteractionRecord};
use crate::rng::{hash_seed, stream};
use crate::schema::{Media, TweetType, TWEET_ID, TWEET_TIMESTAMP};
use crate::table::ColumnTable;

pub const DAY: i64 = 86_400;
pub const UNKNOWN_LANGUAGE: &str = "B9175601E87101A984A50F8A62A1C374";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositiveRates {
    pub like: f64,
    pub reply: f64,
    pub retweet: f64,
    pub quote: f64,
}

impl PositiveRates {
    fn as_array(&self) -> [f64; 4] {
        [self.reply, self.retweet, self.quote, self.like]
    }
}

impl Default for PositiveRates {
    fn default() -> Self {
        PositiveRates {
            like: 0.4,
            reply: 0.03,
            retweet: 0.1,
            quote: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_rows: usize,
    pub n_viewers: usize,
    pub n_authors: usize,
    pub n_tweets: usize,
    pub n_hashtags: usize,
    pub n_links: usize,
    pub n_domains: usize,
    pub n_languages: usize,
    pub start_ts: i64,
    pub end_ts: i64,
    pub positive_rates: PositiveRates,
    pub signal_strength: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            n_rows: 10_000,
            n_viewers: 2_000,
            n_authors: 1_000,
            n_tweets: 5_000,
            n_hashtags: 500,
            n_links: 400,
            n_domains: 60,
            n_languages: 8,
            // Thursday 2020-02-06 00:00 UTC
            start_ts: 1_580_947_200,
            end_ts: 1_580_947_200 + 14 * DAY,
            positive_rates: PositiveRates::default(),
            signal_strength: 0.8,
        }
    }
}

impl SynthConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SynthConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.end_ts - self.start_ts < 7 * DAY {
            return bad("time span must cover at least 7 days");
        }
        if self.start_ts < 0 {
            return bad("start_ts must be non-negative");
        }
        for r in self.positive_rates.as_array() {
            if !(0.0..=1.0).contains(&r) {
                return bad("positive rates must lie in [0,1]");
            }
        }
        if !(0.0..=1.0).contains(&self.signal_strength) {
            return bad("signal_strength must lie in [0,1]");
        }
        let cards = [
            self.n_rows,
            self.n_viewers,
            self.n_authors,
            self.n_tweets,
            self.n_hashtags,
            self.n_links,
            self.n_domains,
            self.n_languages,
        ];
        if cards.iter().any(|&c| c == 0) {
            return bad("all cardinalities must be at least 1");
        }
        Ok(())
    }
}

fn hex_id(seed: u64, kind: &str, i: usize) -> String {
    let a = hash_seed(seed, &format!("{kind}/{i}"));
    let b = hash_seed(a, kind);
    format!("{a:016X}{b:016X}")
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Skewed index in [0, n): small indices are more likely.
fn skewed(rng: &mut ChaCha8Rng, n: usize, power: f64) -> usize {
    let u: f64 = rng.gen();
    ((u.powf(power) * n as f64) as usize).min(n - 1)
}

struct User {
    id: String,
    followers: i64,
    following: i64,
    verified: bool,
    creation: i64,
    latent: f64,
}

struct Tweet {
    id: String,
    author: usize,
    ts: i64,
    ttype: TweetType,
    language: usize,
    hashtags: Vec<usize>,
    links: Vec<usize>,
    domains: Vec<usize>,
    media: Vec<Media>,
    tokens: String,
    hot: bool,
}

/// Generates a corpus in the raw input schema.
pub fn generate(cfg: &SynthConfig) -> Result<ColumnTable> {
    cfg.validate()?;
    let seed = cfg.seed;

    // user pool: viewers [0, nv), authors [nv - overlap, nv - overlap + na)
    let overlap = cfg.n_viewers.min(cfg.n_authors) / 2;
    let author_base = cfg.n_viewers - overlap;
    let n_users = author_base + cfg.n_authors;

    let mut r_lat = stream(seed, "user_latent");
    let mut r_cnt = stream(seed, "user_counts");
    let mut r_ver = stream(seed, "user_verified");
    let mut r_cre = stream(seed, "user_creation");
    // 2006-01-01 .. 2020-01-01, a few accounts predate March 2006
    let creation_lo = 1_136_073_600i64;
    let creation_hi = 1_577_836_800i64;
    let users: Vec<User> = (0..n_users)
        .map(|i| {
            let latent = normal(&mut r_lat);
            let followers = (6.0 + 1.5 * latent + 0.8 * normal(&mut r_cnt)).exp().floor() as i64;
            let following = (5.0 + 1.0 * normal(&mut r_cnt)).exp().floor() as i64;
            let verified = r_ver.gen_bool(sigmoid(2.0 * latent - 4.0));
            let creation = r_cre.gen_range(creation_lo..creation_hi);
            User {
                id: hex_id(seed, "user", i),
                followers,
                following,
                verified,
                creation,
                latent,
            }
        })
        .collect();
    let author_user = |a: usize| author_base + a;

    let languages: Vec<String> = (0..cfg.n_languages)
        .map(|i| {
            if i == cfg.n_languages - 1 && cfg.n_languages > 1 {
                UNKNOWN_LANGUAGE.to_string()
            } else {
                hex_id(seed, "language", i)
            }
        })
        .collect();
    let hashtags: Vec<String> = (0..cfg.n_hashtags).map(|i| hex_id(seed, "hashtag", i)).collect();
    let links: Vec<String> = (0..cfg.n_links).map(|i| hex_id(seed, "link", i)).collect();
    let domains: Vec<String> = (0..cfg.n_domains).map(|i| hex_id(seed, "domain", i)).collect();

    let n_days = ((cfg.end_ts - cfg.start_ts) / DAY).max(1) as usize;
    // per-day trending hashtags
    let mut r_hot = stream(seed, "hot_hashtags");
    let hot_per_day = (cfg.n_hashtags / 20).max(1);
    let hot: Vec<Vec<usize>> = (0..n_days)
        .map(|_| (0..hot_per_day).map(|_| r_hot.gen_range(0..cfg.n_hashtags)).collect())
        .collect();

    // tweets, generated in time order so ids partition by week
    let mut r_tts = stream(seed, "tweet_timestamp");
    let mut times: Vec<i64> = (0..cfg.n_tweets)
        .map(|_| r_tts.gen_range(cfg.start_ts..cfg.end_ts))
        .collect();
    times.sort_unstable();
    let mut r_auth = stream(seed, "tweet_author");
    let mut r_type = stream(seed, "tweet_type");
    let mut r_lang = stream(seed, "language");
    let mut r_tags = stream(seed, "hashtags");
    let mut r_link = stream(seed, "present_links");
    let mut r_media = stream(seed, "present_media");
    let mut r_text = stream(seed, "text_tokens");
    let author_lang: Vec<usize> = (0..cfg.n_authors)
        .map(|_| skewed(&mut r_lang, cfg.n_languages, 2.0))
        .collect();
    // authors with higher latent popularity author more tweets
    let mut author_order: Vec<usize> = (0..cfg.n_authors).collect();
    author_order.sort_by(|&a, &b| {
        users[author_user(b)]
            .latent
            .total_cmp(&users[author_user(a)].latent)
            .then(a.cmp(&b))
    });
    let tweets: Vec<Tweet> = times
        .iter()
        .enumerate()
        .map(|(i, &ts)| {
            let author = author_order[skewed(&mut r_auth, cfg.n_authors, 1.6)];
            let ttype = match r_type.gen_range(0..10) {
                0..=1 => TweetType::Retweet,
                2 => TweetType::Quote,
                3..=4 => TweetType::Reply,
                _ => TweetType::TopLevel,
            };
            let language = if r_lang.gen_bool(0.85) {
                author_lang[author]
            } else {
                r_lang.gen_range(0..cfg.n_languages)
            };
            let day = (((ts - cfg.start_ts) / DAY) as usize).min(n_days - 1);
            let n_tags = [0, 0, 1, 1, 2, 3][r_tags.gen_range(0..6)];
            let mut tags = Vec::new();
            for _ in 0..n_tags {
                if r_tags.gen_bool(0.5) {
                    tags.push(hot[day][r_tags.gen_range(0..hot_per_day)]);
                } else {
                    tags.push(skewed(&mut r_tags, cfg.n_hashtags, 1.5));
                }
            }
            tags.sort_unstable();
            tags.dedup();
            let is_hot = tags.iter().any(|t| hot[day].contains(t));
            let (lk, dm) = if r_link.gen_bool(0.3) {
                let l = skewed(&mut r_link, cfg.n_links, 1.5);
                (vec![l], vec![l % cfg.n_domains])
            } else {
                (Vec::new(), Vec::new())
            };
            let media = match r_media.gen_range(0..10) {
                0..=5 => Vec::new(),
                6..=7 => vec![Media::Photo],
                8 => vec![Media::Photo, Media::Photo],
                _ => vec![if r_media.gen_bool(0.6) { Media::Video } else { Media::Gif }],
            };
            let n_tok = r_text.gen_range(3..9);
            let tokens = std::iter::once("101".to_string())
                .chain((0..n_tok).map(|_| r_text.gen_range(1000..30000).to_string()))
                .collect::<Vec<_>>()
                .join(" ");
            let week = (ts - cfg.start_ts) / (7 * DAY);
            Tweet {
                id: format!("{:02X}{:08X}{:016X}", week, i, hash_seed(seed, &format!("tweet/{i}"))),
                author,
                ts,
                ttype,
                language,
                hashtags: tags,
                links: lk,
                domains: dm,
                media,
                tokens,
                hot: is_hot,
            }
        })
        .collect();
    let mut by_author: Vec<Vec<usize>> = vec![Vec::new(); cfg.n_authors];
    for (i, t) in tweets.iter().enumerate() {
        by_author[t.author].push(i);
    }
    let authors_with_tweets: Vec<usize> =
        (0..cfg.n_authors).filter(|&a| !by_author[a].is_empty()).collect();
    // tweet popularity weights for the global impression draw
    let mut cum = Vec::with_capacity(tweets.len());
    let mut acc = 0.0;
    for t in &tweets {
        acc += (0.8 * users[author_user(t.author)].latent).exp();
        cum.push(acc);
    }

    // each viewer favours a few authors
    let mut r_fav = stream(seed, "favourites");
    let favourites: Vec<Vec<usize>> = (0..cfg.n_viewers)
        .map(|_| {
            (0..4)
                .map(|_| authors_with_tweets[skewed(&mut r_fav, authors_with_tweets.len(), 1.3)])
                .collect()
        })
        .collect();

    // impressions
    let mut r_imp = stream(seed, "impressions");
    let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(cfg.n_rows);
    let mut imps: Vec<(usize, usize)> = Vec::with_capacity(cfg.n_rows);
    let mut failures = 0usize;
    while imps.len() < cfg.n_rows {
        let v = skewed(&mut r_imp, cfg.n_viewers, 1.4);
        let t = if r_imp.gen_bool(0.5) {
            let a = favourites[v][r_imp.gen_range(0..favourites[v].len())];
            by_author[a][r_imp.gen_range(0..by_author[a].len())]
        } else {
            let x = r_imp.gen_range(0.0..acc);
            cum.partition_point(|&c| c <= x).min(tweets.len() - 1)
        };
        if author_user(tweets[t].author) == v || !seen.insert((t, v)) {
            failures += 1;
            if failures > 50 * cfg.n_rows + 10_000 {
                return Err(Error::InvalidConfig(
                    "too many rows for the given tweet and viewer counts".into(),
                ));
            }
            continue;
        }
        imps.push((t, v));
    }
    imps.sort_by_key(|&(t, v)| (tweets[t].ts, t, v));

    // static label score per impression
    let mut r_fol = stream(seed, "engagee_follows_engager");
    let s = 2.0 * cfg.signal_strength;
    let mut follows = Vec::with_capacity(imps.len());
    let mut base = Vec::with_capacity(imps.len());
    for &(t, v) in &imps {
        let tw = &tweets[t];
        let fav = favourites[v].contains(&tw.author);
        let f = r_fol.gen_bool(if fav { 0.6 } else { 0.15 });
        follows.push(f);
        let score = 0.8 * users[author_user(tw.author)].latent
            + 0.9 * (tw.hot as i32 as f64)
            + 0.3 * (f as i32 as f64);
        base.push(s * score);
    }

    // reply, retweet, quote, like; each with its own uniforms and calibrated intercept
    let names = ["reply_timestamp", "retweet_timestamp", "retweet_with_comment_timestamp", "like_timestamp"];
    let rates = cfg.positive_rates.as_array();
    let mut labels: Vec<Vec<bool>> = Vec::with_capacity(4);
    for (k, name) in names.iter().enumerate() {
        let mut r = stream(seed, &format!("{name}/uniform"));
        let u: Vec<f64> = (0..imps.len()).map(|_| r.gen()).collect();
        let simulate = |b: f64| -> Vec<bool> {
            let mut prior: HashMap<(usize, usize), u32> = HashMap::new();
            let mut out = Vec::with_capacity(imps.len());
            for (i, &(t, v)) in imps.iter().enumerate() {
                let key = (v, tweets[t].author);
                let p = prior.get(&key).copied().unwrap_or(0);
                let z = b + base[i] + s * 1.2 * (1.0 + p as f64).ln();
                let y = u[i] < sigmoid(z);
                if y {
                    *prior.entry(key).or_insert(0) += 1;
                }
                out.push(y);
            }
            out
        };
        let rate = rates[k];
        let y = if rate <= 0.0 {
            vec![false; imps.len()]
        } else if rate >= 1.0 {
            vec![true; imps.len()]
        } else {
            let target = rate * imps.len() as f64;
            let count = |b: f64| simulate(b).iter().filter(|&&x| x).count() as f64;
            let (mut lo, mut hi) = (-30.0, 30.0);
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if count(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            simulate(hi)
        };
        labels.push(y);
    }

    let mut r_ets = stream(seed, "engagement_delay");
    let records: Vec<InteractionRecord> = imps
        .iter()
        .enumerate()
        .map(|(i, &(t, v))| {
            let tw = &tweets[t];
            let au = &users[author_user(tw.author)];
            let vu = &users[v];
            let mut ets = [None; 4];
            for k in 0..4 {
                let d: i64 = r_ets.gen_range(0..=DAY);
                if labels[k][i] {
                    ets[k] = Some(tw.ts + d);
                }
            }
            InteractionRecord {
                text_tokens: tw.tokens.clone(),
                hashtags: tw.hashtags.iter().map(|&h| hashtags[h].clone()).collect(),
                tweet_id: tw.id.clone(),
                present_media: tw.media.clone(),
                present_links: tw.links.iter().map(|&h| links[h].clone()).collect(),
                present_domains: tw.domains.iter().map(|&h| domains[h].clone()).collect(),
                tweet_type: tw.ttype,
                language: languages[tw.language].clone(),
                tweet_timestamp: tw.ts,
                engaged_with_user_id: au.id.clone(),
                engaged_with_user_follower_count: au.followers,
                engaged_with_user_following_count: au.following,
                engaged_with_user_is_verified: au.verified,
                engaged_with_user_account_creation: au.creation,
                engaging_user_id: vu.id.clone(),
                engaging_user_follower_count: vu.followers,
                engaging_user_following_count: vu.following,
                engaging_user_is_verified: vu.verified,
                engaging_user_account_creation: vu.creation,
                engagee_follows_engager: follows[i],
                reply_ts: ets[0],
                retweet_ts: ets[1],
                quote_ts: ets[2],
                like_ts: ets[3],
            }
        })
        .collect();
    Ok(records_to_table(&records))
}

/// Splits a corpus into its first and second UTC week.
pub fn split_by_week(table: &ColumnTable) -> Result<(ColumnTable, ColumnTable)> {
    let ts = table.ints(TWEET_TIMESTAMP)?;
    let (Some(&min), Some(&max)) = (ts.iter().min(), ts.iter().max()) else {
        return Err(Error::input("cannot split an empty table"));
    };
    let day0 = min.div_euclid(DAY) * DAY;
    let span_days = max.div_euclid(DAY) - min.div_euclid(DAY) + 1;
    if span_days < 14 {
        return Err(Error::input(format!(
            "table spans {span_days} days, at least 14 are required"
        )));
    }
    let cut = day0 + 7 * DAY;
    let end = day0 + 14 * DAY;
    let ids = table.strs(TWEET_ID)?;
    let first: Vec<usize> = (0..ts.len()).filter(|&i| ts[i] < cut).collect();
    let first_ids: HashSet<&str> = first.iter().map(|&i| ids[i].as_str()).collect();
    let mut dropped = 0usize;
    let second: Vec<usize> = (0..ts.len())
        .filter(|&i| ts[i] >= cut && ts[i] < end)
        .filter(|&i| {
            let keep = !first_ids.contains(ids[i].as_str());
            dropped += (!keep) as usize;
            keep
        })
        .collect();
    let beyond = ts.iter().filter(|&&t| t >= end).count();
    if dropped > 0 || beyond > 0 {
        tracing::warn!(dropped, beyond, "rows removed while splitting by week");
    }
    Ok((table.take(&first), table.take(&second)))
}
