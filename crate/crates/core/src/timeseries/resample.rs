use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, Offset, TimeZone, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::{local_date, local_day_window, Point, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Resolution {
    #[serde(rename = "1min")]
    Minute,
    #[serde(rename = "15min")]
    QuarterHour,
    #[serde(rename = "1h")]
    Hour,
    #[serde(rename = "1day")]
    Day,
}

impl Resolution {
    pub fn as_str(self) -> &'static str {
        match self {
            Resolution::Minute => "1min",
            Resolution::QuarterHour => "15min",
            Resolution::Hour => "1h",
            Resolution::Day => "1day",
        }
    }

    fn fixed_seconds(self) -> Option<i64> {
        match self {
            Resolution::Minute => Some(60),
            Resolution::QuarterHour => Some(900),
            Resolution::Hour => Some(3600),
            Resolution::Day => None,
        }
    }

    /// Start of the bucket containing `at`, aligned in local time.
    pub fn bucket_start(self, tz: &Tz, at: DateTime<Utc>) -> DateTime<Utc> {
        match self.fixed_seconds() {
            Some(step) => {
                let offset = tz.offset_from_utc_datetime(&at.naive_utc()).fix().local_minus_utc() as i64;
                let local = at.timestamp() + offset;
                let start = local - local.rem_euclid(step) - offset;
                Utc.timestamp_opt(start, 0).single().expect("in range")
            }
            None => local_day_window(tz, local_date(tz, at)).start,
        }
    }

    pub fn bucket_end(self, tz: &Tz, start: DateTime<Utc>) -> DateTime<Utc> {
        match self.fixed_seconds() {
            Some(step) => start + Duration::seconds(step),
            None => local_day_window(tz, local_date(tz, start)).end,
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Resolution {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Resolution::Minute, Resolution::QuarterHour, Resolution::Hour, Resolution::Day]
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown resolution {s:?}; expected 1min, 15min, 1h or 1day"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    Mean,
    Max,
    Last,
}

impl FromStr for Aggregator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(Aggregator::Mean),
            "max" => Ok(Aggregator::Max),
            "last" => Ok(Aggregator::Last),
            other => Err(format!("unknown aggregator {other:?}")),
        }
    }
}

/// One resampled bucket; `value` is `None` for an empty bucket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub value: Option<f64>,
    pub count: usize,
}

impl Bucket {
    pub fn seconds(&self) -> i64 {
        (self.end - self.start).num_seconds()
    }
}

/// Buckets from the first reading's bucket through the last reading's.
pub fn resample(points: &[Point], resolution: Resolution, aggregator: Aggregator, tz: &Tz) -> Vec<Bucket> {
    let (Some(first), Some(last)) = (points.first(), points.last()) else {
        return Vec::new();
    };
    let end = resolution.bucket_end(tz, resolution.bucket_start(tz, last.at));
    resample_range(points, resolution, aggregator, tz, Window::new(first.at, end))
}

/// Buckets covering `window`, starting at the bucket containing its start.
pub fn resample_range(
    points: &[Point],
    resolution: Resolution,
    aggregator: Aggregator,
    tz: &Tz,
    window: Window,
) -> Vec<Bucket> {
    let mut buckets = Vec::new();
    let mut start = resolution.bucket_start(tz, window.start);
    while start < window.end {
        let end = resolution.bucket_end(tz, start);
        buckets.push(Bucket { start, end, value: None, count: 0 });
        start = end;
    }
    let Some(first) = buckets.first() else {
        return buckets;
    };
    let lo = points.partition_point(|p| p.at < first.start);
    let mut idx = 0;
    let mut sum = 0.0;
    for p in &points[lo..] {
        while idx < buckets.len() && p.at >= buckets[idx].end {
            finish(&mut buckets[idx], aggregator, sum);
            sum = 0.0;
            idx += 1;
        }
        if idx == buckets.len() {
            break;
        }
        let b = &mut buckets[idx];
        b.count += 1;
        sum += p.value;
        b.value = Some(match (aggregator, b.value) {
            (Aggregator::Max, Some(m)) => m.max(p.value),
            _ => p.value,
        });
    }
    if idx < buckets.len() {
        finish(&mut buckets[idx], aggregator, sum);
    }
    buckets
}

fn finish(bucket: &mut Bucket, aggregator: Aggregator, sum: f64) {
    if aggregator == Aggregator::Mean && bucket.count > 0 {
        bucket.value = Some(sum / bucket.count as f64);
    }
}
