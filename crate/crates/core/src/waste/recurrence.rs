use std::collections::BTreeSet;

use chrono::{NaiveDate, NaiveTime, Timelike};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::WasteInterval;

pub const DEFAULT_CLOCK_TOLERANCE_MIN: i64 = 60;

/// A cluster of intervals recurring at about the same local clock time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrencePattern {
    pub start_clock: NaiveTime,
    pub end_clock: NaiveTime,
    pub recurrence_count: usize,
    pub dates: BTreeSet<NaiveDate>,
    /// `(day index, interval index)` of every member.
    #[serde(skip)]
    pub members: Vec<(usize, usize)>,
}

fn minute_of_day(t: NaiveTime) -> i64 {
    (t.num_seconds_from_midnight() / 60) as i64
}

/// Clusters intervals across days. Each cluster is seeded by the first interval
/// that fits no existing cluster; later intervals join the first cluster whose
/// seed start and end clock times are both within `tolerance_min`.
pub fn recurrence_scan(days: &[Vec<WasteInterval>], tz: &Tz, tolerance_min: i64) -> Vec<RecurrencePattern> {
    let mut patterns: Vec<RecurrencePattern> = Vec::new();
    for (d, intervals) in days.iter().enumerate() {
        for (i, w) in intervals.iter().enumerate() {
            let start = w.start.with_timezone(tz);
            let end = w.end.with_timezone(tz);
            let (s, e) = (start.time(), end.time());
            let fits = |p: &RecurrencePattern| {
                (minute_of_day(p.start_clock) - minute_of_day(s)).abs() <= tolerance_min
                    && (minute_of_day(p.end_clock) - minute_of_day(e)).abs() <= tolerance_min
            };
            let idx = match patterns.iter().position(fits) {
                Some(idx) => idx,
                None => {
                    patterns.push(RecurrencePattern {
                        start_clock: s,
                        end_clock: e,
                        recurrence_count: 0,
                        dates: BTreeSet::new(),
                        members: Vec::new(),
                    });
                    patterns.len() - 1
                }
            };
            let p = &mut patterns[idx];
            p.members.push((d, i));
            p.dates.insert(start.date_naive());
            p.recurrence_count = p.dates.len();
        }
    }
    patterns
}

/// Writes each pattern's count into its member intervals.
pub fn annotate_recurrence(days: &mut [Vec<WasteInterval>], patterns: &[RecurrencePattern]) {
    for p in patterns {
        for &(d, i) in &p.members {
            days[d][i].recurrence_count = p.recurrence_count;
        }
    }
}
