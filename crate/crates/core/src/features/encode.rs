//! Binary labels and simple row-wise encodings.

use chrono::{DateTime, Datelike};

use crate::error::{Error, Result};
use crate::schema::*;
use crate::synthgen::UNKNOWN_LANGUAGE;
use crate::table::{Column, ColumnTable};

/// Adds the five 0/1 label columns; react is the disjunction of the other four.
pub fn derive_labels(table: &ColumnTable) -> Result<ColumnTable> {
    let get = |n| -> Result<Vec<i64>> {
        Ok(table.opt_ints(n)?.iter().map(|x| x.is_some() as i64).collect())
    };
    let like = get(LIKE_TS)?;
    let reply = get(REPLY_TS)?;
    let retweet = get(RETWEET_TS)?;
    let quote = get(QUOTE_TS)?;
    let react = (0..table.row_count())
        .map(|i| (like[i] | reply[i] | retweet[i] | quote[i]).min(1))
        .collect();
    table
        .clone()
        .with("like", Column::Int(like))?
        .with("reply", Column::Int(reply))?
        .with("retweet", Column::Int(retweet))?
        .with("quote", Column::Int(quote))?
        .with("react", Column::Int(react))
}

pub fn encode_media_and_elements(table: &ColumnTable) -> Result<ColumnTable> {
    let media = table.lists(PRESENT_MEDIA)?;
    let count = |m: Media| -> Vec<i64> {
        media
            .iter()
            .map(|l| l.iter().filter(|x| x.as_str() == m.as_str()).count() as i64)
            .collect()
    };
    let photos = count(Media::Photo);
    let videos = count(Media::Video);
    let gifs = count(Media::Gif);
    let total = (0..table.row_count())
        .map(|i| photos[i] + videos[i] + gifs[i])
        .collect();
    let card = |n: &str| -> Result<Column> {
        Ok(Column::Int(table.sets(n)?.iter().map(|s| s.len() as i64).collect()))
    };
    table
        .clone()
        .with("photos_count", Column::Int(photos))?
        .with("videos_count", Column::Int(videos))?
        .with("gif_count", Column::Int(gifs))?
        .with("media_count", Column::Int(total))?
        .with("hashtags_count", card(HASHTAGS)?)?
        .with("links_count", card(PRESENT_LINKS)?)?
        .with("domains_count", card(PRESENT_DOMAINS)?)
}

/// Weekday with UTC Thursday = 1 through Wednesday = 7.
pub fn weekday(ts: i64) -> i64 {
    // 1970-01-01 was a Thursday
    ts.div_euclid(86_400).rem_euclid(7) + 1
}

pub fn hour(ts: i64) -> i64 {
    ts.rem_euclid(86_400) / 3600
}

pub fn encode_time(table: &ColumnTable) -> Result<ColumnTable> {
    let ts = table.ints(TWEET_TIMESTAMP)?;
    table
        .clone()
        .with("tweet_weekday", Column::Int(ts.iter().map(|&t| weekday(t)).collect()))?
        .with("tweet_hour", Column::Int(ts.iter().map(|&t| hour(t)).collect()))
}

/// UTC (year, month) of a UNIX timestamp.
pub fn year_month(ts: i64) -> Result<(i64, i64)> {
    let dt = DateTime::from_timestamp(ts, 0)
        .ok_or_else(|| Error::input(format!("timestamp {ts} out of range")))?;
    Ok((i64::from(dt.year()), i64::from(dt.month())))
}

/// Months since March 2006, and whether the value had to be clamped.
pub fn account_age(ts: i64) -> Result<(i64, bool)> {
    let (y, m) = year_month(ts)?;
    let age = (y - 2006) * 12 + (m - 3);
    Ok((age.max(0), age < 0))
}

/// Returns the encoded table and the number of clamped creation dates.
pub fn encode_ages(table: &ColumnTable) -> Result<(ColumnTable, usize)> {
    let mut clamped = 0;
    let mut enc = |n: &str| -> Result<(Vec<i64>, Vec<i64>)> {
        let mut years = Vec::with_capacity(table.row_count());
        let mut ages = Vec::with_capacity(table.row_count());
        for &ts in table.ints(n)? {
            years.push(year_month(ts)?.0);
            let (a, c) = account_age(ts)?;
            clamped += c as usize;
            ages.push(a);
        }
        Ok((years, ages))
    };
    let (ey, ea) = enc(ENGAGED_CREATION)?;
    let (gy, ga) = enc(ENGAGING_CREATION)?;
    if clamped > 0 {
        tracing::warn!(clamped, "account creation dates before March 2006 clamped to 0");
    }
    let diff = ea.iter().zip(&ga).map(|(a, b)| a - b).collect();
    let t = table
        .clone()
        .with("engaged_creation_year", Column::Int(ey))?
        .with("engaging_creation_year", Column::Int(gy))?
        .with("engaged_age", Column::Int(ea))?
        .with("engaging_age", Column::Int(ga))?
        .with("creation_age_difference", Column::Int(diff))?;
    Ok((t, clamped))
}

pub fn encode_language_flag(table: &ColumnTable) -> Result<ColumnTable> {
    let flag = table
        .strs(LANGUAGE)?
        .iter()
        .map(|l| (l == UNKNOWN_LANGUAGE) as i64)
        .collect();
    table.clone().with("language_unknown", Column::Int(flag))
}

/// All encodings applied after labels.
pub fn encode_all(table: &ColumnTable) -> Result<ColumnTable> {
    let t = encode_media_and_elements(table)?;
    let t = encode_time(&t)?;
    let (t, _) = encode_ages(&t)?;
    encode_language_flag(&t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn ts(y: i32, m: u32, d: u32, h: u32, mi: u32) -> i64 {
        NaiveDate::from_ymd_opt(y, m, d)
            .unwrap()
            .and_hms_opt(h, mi, 0)
            .unwrap()
            .and_utc()
            .timestamp()
    }

    #[test]
    fn weekday_anchor() {
        let t = ts(2020, 2, 6, 0, 0);
        assert_eq!((weekday(t), hour(t)), (1, 0));
        let t = ts(2020, 2, 12, 23, 59);
        assert_eq!((weekday(t), hour(t)), (7, 23));
        for k in 0..20 {
            let x = 1_500_000_000 + k * 12_345;
            assert_eq!(weekday(x), weekday(x + 7 * 86_400));
        }
    }

    #[test]
    fn ages() {
        assert_eq!(account_age(ts(2006, 3, 15, 0, 0)).unwrap(), (0, false));
        assert_eq!(account_age(ts(2007, 3, 1, 0, 0)).unwrap(), (12, false));
        assert_eq!(account_age(ts(2005, 1, 1, 0, 0)).unwrap(), (0, true));
    }

    #[test]
    fn media_counts() {
        let t = ColumnTable::from_columns(vec![
            (
                PRESENT_MEDIA,
                Column::StrList(vec![
                    vec!["Photo".into(), "Photo".into(), "Video".into()],
                    vec![],
                ]),
            ),
            (HASHTAGS, Column::set(vec![vec!["a".into(), "b".into(), "c".into(), "d".into()], vec![]])),
            (PRESENT_LINKS, Column::set(vec![vec![], vec![]])),
            (PRESENT_DOMAINS, Column::set(vec![vec![], vec![]])),
        ])
        .unwrap();
        let e = encode_media_and_elements(&t).unwrap();
        assert_eq!(e.ints("photos_count").unwrap(), &[2, 0]);
        assert_eq!(e.ints("videos_count").unwrap(), &[1, 0]);
        assert_eq!(e.ints("gif_count").unwrap(), &[0, 0]);
        assert_eq!(e.ints("media_count").unwrap(), &[3, 0]);
        assert_eq!(e.ints("hashtags_count").unwrap(), &[4, 0]);
    }

    #[test]
    fn labels() {
        let o = |v: Vec<Option<i64>>| Column::OptInt(v);
        let t = ColumnTable::from_columns(vec![
            (REPLY_TS, o(vec![None, None])),
            (RETWEET_TS, o(vec![None, None])),
            (QUOTE_TS, o(vec![None, Some(5)])),
            (LIKE_TS, o(vec![None, None])),
        ])
        .unwrap();
        let l = derive_labels(&t).unwrap();
        let row = |i: usize| -> Vec<i64> {
            ["like", "reply", "retweet", "quote", "react"]
                .iter()
                .map(|n| l.ints(n).unwrap()[i])
                .collect()
        };
        assert_eq!(row(0), vec![0, 0, 0, 0, 0]);
        assert_eq!(row(1), vec![0, 0, 0, 1, 1]);
    }

    #[test]
    fn language_flag() {
        let t = ColumnTable::from_columns(vec![(
            LANGUAGE,
            Column::Str(vec![UNKNOWN_LANGUAGE.into(), "X".into(), "".into()]),
        )])
        .unwrap();
        assert_eq!(encode_language_flag(&t).unwrap().ints("language_unknown").unwrap(), &[1, 0, 0]);
    }
}
