use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Point, TimeseriesError, Window};

pub const DEFAULT_MAX_GAP_SECS: i64 = 30 * 60;

const WS_PER_KWH: f64 = 3.6e6;

/// Result of integrating a power series over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerEnergy {
    /// Energy over the covered part of the window.
    pub kwh: f64,
    pub covered_seconds: i64,
    pub window_seconds: i64,
    pub largest_gap_seconds: i64,
}

impl PowerEnergy {
    pub fn coverage(&self) -> f64 {
        if self.window_seconds <= 0 {
            return 0.0;
        }
        (self.covered_seconds as f64 / self.window_seconds as f64).clamp(0.0, 1.0)
    }

    /// Covered energy scaled up to the whole window; `None` with no coverage.
    pub fn coverage_weighted_kwh(&self) -> Option<f64> {
        let c = self.coverage();
        (c > 0.0).then(|| self.kwh / c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterEnergy {
    pub kwh: f64,
    /// At least one counter decrease (rollover or meter reset) was skipped.
    pub reset: bool,
    /// Fewer than two counter values bear on the window.
    pub insufficient_data: bool,
    pub covered_seconds: i64,
    pub window_seconds: i64,
}

impl CounterEnergy {
    pub fn coverage(&self) -> f64 {
        if self.window_seconds <= 0 {
            return 0.0;
        }
        (self.covered_seconds as f64 / self.window_seconds as f64).clamp(0.0, 1.0)
    }
}

fn secs(a: DateTime<Utc>, b: DateTime<Utc>) -> i64 {
    (b - a).num_seconds()
}

fn interpolate(a: &Point, b: &Point, at: DateTime<Utc>) -> f64 {
    let span = secs(a.at, b.at) as f64;
    if span == 0.0 {
        return a.value;
    }
    a.value + (b.value - a.value) * (secs(a.at, at) as f64 / span)
}

/// Trapezoidal integral of a power series (W) over `window`, in kWh.
///
/// Readings outside the window are clipped to its edges by linear
/// interpolation. A stretch between consecutive readings longer than
/// `max_gap_secs` is not integrated across; the same holds for an edge of the
/// window with no reading beyond it, which is otherwise bridged by holding
/// the nearest value. Any uncovered stretch yields `GapExceeded` carrying the
/// partial result, so callers can fall back to a coverage-weighted figure.
pub fn integrate_power(points: &[Point], window: Window, max_gap_secs: i64) -> Result<PowerEnergy, TimeseriesError> {
    if window.end <= window.start {
        return Err(TimeseriesError::EmptyWindow);
    }
    let lo = points.partition_point(|p| p.at < window.start);
    let hi = points.partition_point(|p| p.at <= window.end);
    let before = lo.checked_sub(1).map(|i| &points[i]);
    let after = points.get(hi);
    let inside = &points[lo..hi];
    if inside.is_empty() && !(before.is_some() && after.is_some()) {
        return Err(TimeseriesError::NoData);
    }

    let mut energy_ws = 0.0;
    let mut covered = 0i64;
    let mut largest_uncovered = 0i64;
    let mut account = |len: i64, raw: i64, ws: f64| {
        if raw <= max_gap_secs {
            energy_ws += ws;
            covered += len;
        } else {
            largest_uncovered = largest_uncovered.max(raw);
        }
    };

    let extended: Vec<&Point> = before.into_iter().chain(inside).chain(after).collect();
    let (head, tail) = (extended[0], extended[extended.len() - 1]);
    if head.at > window.start {
        let held = secs(window.start, head.at);
        account(held, held, head.value * held as f64);
    }
    for pair in extended.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let from = a.at.max(window.start);
        let to = b.at.min(window.end);
        if to <= from {
            continue;
        }
        let len = secs(from, to);
        let ws = 0.5 * (interpolate(a, b, from) + interpolate(a, b, to)) * len as f64;
        account(len, secs(a.at, b.at), ws);
    }
    if tail.at < window.end {
        let held = secs(tail.at, window.end);
        account(held, held, tail.value * held as f64);
    }

    let result = PowerEnergy {
        kwh: (energy_ws / WS_PER_KWH).max(0.0),
        covered_seconds: covered,
        window_seconds: window.seconds(),
        largest_gap_seconds: largest_uncovered,
    };
    if largest_uncovered > 0 {
        return Err(TimeseriesError::GapExceeded { largest_gap_seconds: largest_uncovered, partial: result });
    }
    Ok(result)
}

/// Energy from a cumulative Wh counter: the sum of non-negative steps from the
/// last value at or before the window start to the last value at or before its
/// end. A decrease counts as a reset and contributes nothing.
pub fn diff_energy_counter(points: &[Point], window: Window) -> Result<CounterEnergy, TimeseriesError> {
    if window.end <= window.start {
        return Err(TimeseriesError::EmptyWindow);
    }
    let lo = points.partition_point(|p| p.at < window.start);
    let hi = points.partition_point(|p| p.at <= window.end);
    let straddles = lo > 0 && hi < points.len();
    if lo == hi && !straddles {
        return Err(TimeseriesError::NoData);
    }
    // Include the last value at or before the start.
    let begin = if lo < hi && points[lo].at == window.start { lo } else { lo.saturating_sub(1) };
    let used = &points[begin..hi];
    let window_seconds = window.seconds();
    if used.len() < 2 {
        return Ok(CounterEnergy {
            kwh: 0.0,
            reset: false,
            insufficient_data: true,
            covered_seconds: 0,
            window_seconds,
        });
    }
    let mut wh = 0.0;
    let mut reset = false;
    for pair in used.windows(2) {
        let step = pair[1].value - pair[0].value;
        if step < 0.0 {
            reset = true;
        } else {
            wh += step;
        }
    }
    let first = used[0].at.max(window.start);
    let last = used[used.len() - 1].at.min(window.end);
    Ok(CounterEnergy {
        kwh: wh / 1000.0,
        reset,
        insufficient_data: false,
        covered_seconds: secs(first, last).max(0),
        window_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone};

    fn t(h: i64, m: i64) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2019, 3, 4, 0, 0, 0).unwrap() + Duration::minutes(h * 60 + m)
    }

    fn constant(value: f64, from: DateTime<Utc>, to: DateTime<Utc>, step_min: i64) -> Vec<Point> {
        let mut out = Vec::new();
        let mut at = from;
        while at <= to {
            out.push(Point::new(at, value));
            at += Duration::minutes(step_min);
        }
        out
    }

    #[test]
    fn constant_power_over_seven_hours() {
        let pts = constant(4900.0, t(10, 0), t(17, 0), 1);
        let e = integrate_power(&pts, Window::new(t(10, 0), t(17, 0)), DEFAULT_MAX_GAP_SECS).unwrap();
        assert!((e.kwh - 34.3).abs() < 1e-9, "{}", e.kwh);
        assert_eq!(e.coverage(), 1.0);
    }

    #[test]
    fn zero_power_is_zero_energy() {
        let pts = constant(0.0, t(0, 0), t(5, 0), 5);
        let e = integrate_power(&pts, Window::new(t(1, 0), t(4, 30)), DEFAULT_MAX_GAP_SECS).unwrap();
        assert_eq!(e.kwh, 0.0);
    }

    #[test]
    fn linear_ramp_matches_analytic_integral() {
        // Oracle: integral of P(t) = 1000 t / 3600 W over one hour = 1000 * 3600 / 2 Ws = 0.5 kWh.
        let oracle_kwh = 1000.0 * 3600.0 / 2.0 / 3.6e6;
        let pts: Vec<_> = (0..=60).map(|m| Point::new(t(9, m), 1000.0 * m as f64 / 60.0)).collect();
        let e = integrate_power(&pts, Window::new(t(9, 0), t(10, 0)), DEFAULT_MAX_GAP_SECS).unwrap();
        assert!((e.kwh - oracle_kwh).abs() < 1e-12);
        // Two samples are enough for a straight line.
        let two = [Point::new(t(9, 0), 0.0), Point::new(t(10, 0), 1000.0)];
        let e = integrate_power(&two, Window::new(t(9, 0), t(10, 0)), 3600).unwrap();
        assert!((e.kwh - oracle_kwh).abs() < 1e-12);
    }

    #[test]
    fn clips_at_window_edges_by_interpolation() {
        // Ramp 0 -> 1000 W between 09:00 and 10:00, window 09:30..10:00.
        // Oracle: average of 500 and 1000 W over half an hour = 375 Wh.
        let two = [Point::new(t(9, 0), 0.0), Point::new(t(10, 0), 1000.0)];
        let e = integrate_power(&two, Window::new(t(9, 30), t(10, 0)), 3600).unwrap();
        assert!((e.kwh - 0.375).abs() < 1e-12);
        // Window strictly between two readings.
        let e = integrate_power(&two, Window::new(t(9, 15), t(9, 45)), 3600).unwrap();
        assert!((e.kwh - 0.25).abs() < 1e-12);
    }

    #[test]
    fn error_cases() {
        let pts = constant(100.0, t(8, 0), t(9, 0), 1);
        assert!(matches!(integrate_power(&pts, Window::new(t(9, 0), t(9, 0)), 60), Err(TimeseriesError::EmptyWindow)));
        assert!(matches!(integrate_power(&pts, Window::new(t(11, 0), t(12, 0)), 60), Err(TimeseriesError::NoData)));
        assert!(matches!(integrate_power(&[], Window::new(t(11, 0), t(12, 0)), 60), Err(TimeseriesError::NoData)));
    }

    #[test]
    fn large_gap_reports_partial_coverage() {
        let mut pts = constant(1000.0, t(0, 0), t(6, 0), 1);
        pts.extend(constant(1000.0, t(8, 0), t(12, 0), 1));
        let err = integrate_power(&pts, Window::new(t(0, 0), t(12, 0)), DEFAULT_MAX_GAP_SECS).unwrap_err();
        let TimeseriesError::GapExceeded { largest_gap_seconds, partial } = err else {
            panic!("expected a gap error");
        };
        assert_eq!(largest_gap_seconds, 2 * 3600);
        assert_eq!(partial.covered_seconds, 10 * 3600);
        assert!((partial.kwh - 10.0).abs() < 1e-9);
        assert!((partial.coverage_weighted_kwh().unwrap() - 12.0).abs() < 1e-9);
    }

    #[test]
    fn short_edges_are_held() {
        // Readings 00:01..23:59; the missing minute at each edge is bridged.
        let day = Window::new(t(0, 0), t(24, 0));
        let pts = constant(5912.5, t(0, 1), t(23, 59), 1);
        let e = integrate_power(&pts, day, DEFAULT_MAX_GAP_SECS).unwrap();
        assert!((e.kwh - 141.9).abs() < 1e-9);
    }

    #[test]
    fn counter_difference() {
        let pts = [Point::new(t(0, 0), 1000.0), Point::new(t(12, 0), 1200.0), Point::new(t(24, 0), 1500.0)];
        let e = diff_energy_counter(&pts, Window::new(t(0, 0), t(24, 0))).unwrap();
        assert!((e.kwh - 0.5).abs() < 1e-12);
        assert!(!e.reset && !e.insufficient_data);
        assert_eq!(e.coverage(), 1.0);
    }

    #[test]
    fn counter_reset_contributes_nothing() {
        let pts = [Point::new(t(1, 0), 900.0), Point::new(t(2, 0), 100.0)];
        let e = diff_energy_counter(&pts, Window::new(t(0, 0), t(3, 0))).unwrap();
        assert_eq!(e.kwh, 0.0);
        assert!(e.reset);
        let pts = [Point::new(t(1, 0), 900.0), Point::new(t(2, 0), 100.0), Point::new(t(2, 30), 300.0)];
        let e = diff_energy_counter(&pts, Window::new(t(0, 0), t(3, 0))).unwrap();
        assert!((e.kwh - 0.2).abs() < 1e-12);
    }

    #[test]
    fn single_counter_value_is_insufficient() {
        let pts = [Point::new(t(5, 0), 1234.0)];
        let e = diff_energy_counter(&pts, Window::new(t(0, 0), t(24, 0))).unwrap();
        assert_eq!(e.kwh, 0.0);
        assert!(e.insufficient_data);
        assert!(matches!(diff_energy_counter(&pts, Window::new(t(6, 0), t(7, 0))), Err(TimeseriesError::NoData)));
    }

    #[test]
    fn counter_uses_last_value_before_start() {
        let pts = [Point::new(t(23, 0) - Duration::days(1), 1000.0), Point::new(t(12, 0), 1800.0)];
        let e = diff_energy_counter(&pts, Window::new(t(0, 0), t(24, 0))).unwrap();
        assert!((e.kwh - 0.8).abs() < 1e-12);
        assert_eq!(e.covered_seconds, 12 * 3600);
    }
}
