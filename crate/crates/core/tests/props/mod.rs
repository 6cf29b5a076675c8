//! Property checks shared by the `properties` and `acceptance` targets.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fmt::Debug;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use chrono_tz::Tz;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use ecoschool::ingest::builtin;
use ecoschool::methodology::{
    analyze_week, compute_baseline, evaluate_intervention, reduction_fraction, AnomalyDecl, BaselineOptions, DaySet,
    WeekId, MIN_COVERAGE,
};
use ecoschool::service::{render_json, Engine};
use ecoschool::timeseries::{
    daily_energy_range, diff_energy_counter, integrate_power, resample_range, Aggregator, Bucket, Building, BuildingId,
    DailyEnergy, DateRange, DayFlag, Kind, Point, Reading, Resolution, Sensor, SensorId, Site, Store, Window,
};
use ecoschool::waste::{detect_luminosity_waste, occupancy_contrast, WasteInterval, WasteParams};

pub type Outcome = Result<(), String>;
pub type Property = (&'static str, fn() -> Outcome);

fn check<S>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Outcome
where
    S: Strategy,
    S::Value: Debug,
{
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2019, 3, 4, 0, 0, 0).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Ascending timestamps from positive steps, paired with values.
fn series(steps: &[i64], values: &[f64]) -> Vec<Point> {
    let mut at = t0();
    steps
        .iter()
        .zip(values)
        .map(|(s, v)| {
            at += Duration::seconds(*s);
            Point::new(at, *v)
        })
        .collect()
}

fn power_series(max_step: i64) -> impl Strategy<Value = Vec<Point>> {
    (3usize..200).prop_flat_map(move |n| {
        (prop::collection::vec(1..=max_step, n), prop::collection::vec(0.0..10_000.0f64, n))
            .prop_map(|(s, v)| series(&s, &v))
    })
}

// ---- integration ----

pub fn integration_additivity() -> Outcome {
    let strategy = (power_series(1800), 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64);
    check(256, strategy, |(points, u1, u2, u3)| {
        let first = points[0].at;
        let span = (points[points.len() - 1].at - first).num_seconds();
        prop_assume!(span >= 3);
        let mut cuts = [u1, u2, u3].map(|u| (u * span as f64) as i64);
        cuts.sort();
        prop_assume!(cuts[0] < cuts[1] && cuts[1] < cuts[2]);
        let [a, b, c] = cuts.map(|s| first + Duration::seconds(s));
        let e = |x, y| integrate_power(&points, Window::new(x, y), 1800).map(|e| e.kwh);
        let (ab, bc, ac) = (e(a, b).unwrap(), e(b, c).unwrap(), e(a, c).unwrap());
        prop_assert!((ab + bc - ac).abs() <= 1e-9, "{ab} + {bc} != {ac}");
        Ok(())
    })
}

pub fn integration_constancy() -> Outcome {
    let strategy = (0.0..100_000.0f64, 1i64..=48, prop::sample::select(vec![60i64, 300, 600, 900, 1800]));
    check(256, strategy, |(watts, hours, step)| {
        let n = hours * 3600 / step;
        let points: Vec<Point> = (0..=n).map(|i| Point::new(t0() + Duration::seconds(i * step), watts)).collect();
        let window = Window::new(t0(), t0() + Duration::hours(hours));
        let e = integrate_power(&points, window, 1800).unwrap();
        let expected = watts * hours as f64 / 1000.0;
        prop_assert!(close(e.kwh, expected, 1e-12), "{} vs {expected}", e.kwh);
        prop_assert_eq!(e.coverage(), 1.0);
        Ok(())
    })
}

pub fn counter_reset_handling() -> Outcome {
    // Increments, with some steps replaced by a reset to a small value.
    let step = prop_oneof![9 => (0.0..500.0f64).prop_map(Ok), 1 => (0.0..50.0f64).prop_map(Err)];
    let strategy = (prop::collection::vec(step, 2..150), 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64);
    check(256, strategy, |(steps, u1, u2, u3)| {
        let mut value = 1_000.0;
        let points: Vec<Point> = steps
            .iter()
            .enumerate()
            .map(|(i, s)| {
                match s {
                    Ok(inc) => value += inc,
                    Err(restart) => value = *restart,
                }
                Point::new(t0() + Duration::minutes(15 * i as i64), value)
            })
            .collect();
        let span = (points[points.len() - 1].at - t0()).num_seconds() + 1800;
        let mut cuts = [u1, u2, u3].map(|u| (u * span as f64) as i64 - 900);
        cuts.sort();
        prop_assume!(cuts[0] < cuts[1] && cuts[1] < cuts[2]);
        let [a, b, c] = cuts.map(|s| t0() + Duration::seconds(s));
        let e = |x, y| diff_energy_counter(&points, Window::new(x, y));
        let (ab, ac) = match (e(a, b), e(a, c)) {
            (Ok(ab), Ok(ac)) => (ab, ac),
            _ => return Ok(()),
        };
        prop_assert!(ab.kwh >= 0.0 && ac.kwh >= 0.0);
        prop_assert!(ac.kwh >= ab.kwh, "extending a window lost energy: {} < {}", ac.kwh, ab.kwh);
        // The whole series: every reset is flagged and increments alone are summed.
        let all = diff_energy_counter(&points, Window::new(t0(), points[points.len() - 1].at)).unwrap();
        let drops = points.windows(2).filter(|p| p[1].value < p[0].value).count();
        prop_assert_eq!(all.reset, drops > 0);
        let rises: f64 = points.windows(2).map(|p| (p[1].value - p[0].value).max(0.0)).sum();
        prop_assert!(close(all.kwh, rises / 1000.0, 1e-12));
        Ok(())
    })
}

pub fn resample_approximates_integration() -> Outcome {
    let strategy = (prop::collection::vec(0.0..8_000.0f64, 24), 0.0..0.2f64, any::<u64>());
    check(32, strategy, |(hourly, noise, seed)| {
        // Gap-free 1-min data for one UTC day, smooth within each hour plus bounded noise.
        let mut rng = seed;
        let mut next = || {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            (rng % 1000) as f64 / 1000.0
        };
        let points: Vec<Point> = (0..=1440)
            .map(|m| {
                let base = hourly[(m / 60).min(23) as usize];
                Point::new(t0() + Duration::minutes(m), base * (1.0 + noise * (next() - 0.5)))
            })
            .collect();
        let window = Window::new(t0(), t0() + Duration::days(1));
        let exact = integrate_power(&points, window, 1800).unwrap().kwh;
        let buckets = resample_range(&points, Resolution::Day, Aggregator::Mean, &Tz::UTC, window);
        let approx: f64 = buckets
            .iter()
            .filter(|b| b.start < window.end)
            .map(|b| b.value.unwrap_or(0.0) * b.seconds() as f64 / 3.6e6)
            .sum();
        prop_assume!(exact > 1.0);
        prop_assert!((approx - exact).abs() <= 0.02 * exact, "{approx} vs {exact}");
        Ok(())
    })
}

// ---- store ----

fn two_meter_site() -> Site {
    let b = BuildingId::new("b1").unwrap();
    let mut building = Building::new(b.clone(), chrono_tz::Europe::Stockholm);
    building.main_meters = vec![SensorId::new("m1").unwrap(), SensorId::new("m2").unwrap()];
    let sensor = |id: &str| Sensor {
        sensor_id: SensorId::new(id).unwrap(),
        kind: Kind::Power,
        building_id: b.clone(),
        room: None,
        orientation_note: None,
    };
    Site { buildings: vec![building], sensors: vec![sensor("m1"), sensor("m2")] }
}

pub fn ingestion_order_independence() -> Outcome {
    let records = prop::collection::btree_map((prop::bool::ANY, 0i64..3 * 24 * 60), 0.0..5_000.0f64, 1..400)
        .prop_map(|m| m.into_iter().map(|((s, m), v)| (s, m, v)).collect::<Vec<_>>());
    let strategy = records.prop_flat_map(|r| (Just(r.clone()), Just(r).prop_shuffle(), 1usize..50));
    check(128, strategy, |(sorted, shuffled, chunk)| {
        let build = |recs: &[(bool, i64, f64)], chunk: usize| {
            let store = Store::in_memory();
            store.register(&two_meter_site()).unwrap();
            let readings: Vec<Reading> = recs
                .iter()
                .map(|(s, m, v)| {
                    let id = SensorId::new(if *s { "m1" } else { "m2" }).unwrap();
                    Reading::of_kind(id, t0() + Duration::minutes(*m), Kind::Power, *v).unwrap()
                })
                .collect();
            for c in readings.chunks(chunk) {
                store.append(c).unwrap();
            }
            store
        };
        let (a, b) = (build(&sorted, sorted.len()), build(&shuffled, chunk));
        let (sa, sb) = (a.snapshot(), b.snapshot());
        prop_assert_eq!(sa.readings().collect::<Vec<_>>(), sb.readings().collect::<Vec<_>>());
        let building = sa.building(&BuildingId::new("b1").unwrap()).unwrap().clone();
        let (from, to) = (NaiveDate::from_ymd_opt(2019, 3, 3).unwrap(), NaiveDate::from_ymd_opt(2019, 3, 7).unwrap());
        prop_assert_eq!(
            daily_energy_range(&building, from, to, &sa, 1800).unwrap(),
            daily_energy_range(&building, from, to, &sb, 1800).unwrap()
        );
        Ok(())
    })
}

// ---- methodology ----

fn school() -> BuildingId {
    BuildingId::new("school").unwrap()
}

fn days_of(week: WeekId, values: &[f64; 7]) -> Vec<DailyEnergy> {
    week.dates()
        .iter()
        .zip(values)
        .map(|(date, kwh)| DailyEnergy {
            building_id: school(),
            date: *date,
            kwh: Some(*kwh),
            coverage: 1.0,
            flags: BTreeSet::new(),
            counter_reset: false,
        })
        .collect()
}

fn week_values(lo: f64, hi: f64) -> impl Strategy<Value = [f64; 7]> {
    prop::array::uniform7(lo..hi)
}

/// Baseline week (anomalous Monday, Tue-Thu donors), comparison and saving week.
struct Study {
    baseline_days: Vec<DailyEnergy>,
    comparison: Vec<DailyEnergy>,
    saving: Vec<DailyEnergy>,
}

const BASE_WEEK: (i32, u32) = (2018, 44);
const COMPARISON_WEEK: (i32, u32) = (2018, 47);
const SAVING_WEEK: (i32, u32) = (2018, 50);

fn wk((y, w): (i32, u32)) -> WeekId {
    WeekId::new(y, w).unwrap()
}

fn study(base: &[f64; 7], comparison: &[f64; 7], saving: &[f64; 7], scale: f64) -> Study {
    let s = |v: &[f64; 7]| v.map(|x| x * scale);
    Study {
        baseline_days: days_of(wk(BASE_WEEK), &s(base)),
        comparison: days_of(wk(COMPARISON_WEEK), &s(comparison)),
        saving: days_of(wk(SAVING_WEEK), &s(saving)),
    }
}

fn monday_anomaly() -> Vec<AnomalyDecl> {
    let d = wk(BASE_WEEK).dates();
    vec![AnomalyDecl { date: d[0], donors: d[1..4].to_vec(), reason: "event".into() }]
}

struct Outputs {
    baseline: f64,
    comparison_mean: f64,
    saving_mean: f64,
    comparison_flexible: f64,
    saving_flexible: f64,
    absolute_saving: f64,
    reduction: f64,
}

fn run_study(s: &Study) -> Result<Outputs, String> {
    let model = compute_baseline(
        &school(),
        wk(BASE_WEEK).range(),
        &s.baseline_days,
        &monday_anomaly(),
        &BaselineOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let c = analyze_week(&school(), wk(COMPARISON_WEEK), &s.comparison, &model, DaySet::SchoolDaysOnly, MIN_COVERAGE)
        .map_err(|e| e.to_string())?;
    let v = analyze_week(&school(), wk(SAVING_WEEK), &s.saving, &model, DaySet::SchoolDaysOnly, MIN_COVERAGE)
        .map_err(|e| e.to_string())?;
    let (comparison_mean, saving_mean) = (c.mean_kwh_per_day, v.mean_kwh_per_day);
    let r = evaluate_intervention(c, v, "").map_err(|e| e.to_string())?;
    Ok(Outputs {
        baseline: model.kwh_per_day,
        comparison_mean,
        saving_mean,
        comparison_flexible: r.comparison.flexible_kwh_per_day,
        saving_flexible: r.saving.flexible_kwh_per_day,
        absolute_saving: r.absolute_saving_kwh_per_day,
        reduction: r.reduction_fraction,
    })
}

fn study_strategy() -> impl Strategy<Value = ([f64; 7], [f64; 7], [f64; 7])> {
    (week_values(50.0, 150.0), week_values(200.0, 320.0), week_values(160.0, 320.0))
}

pub fn scale_invariance() -> Outcome {
    check(256, (study_strategy(), 0.01..100.0f64), |((b, c, s), k)| {
        let one = run_study(&study(&b, &c, &s, 1.0)).map_err(TestCaseError::fail)?;
        let scaled = run_study(&study(&b, &c, &s, k)).map_err(TestCaseError::fail)?;
        for (x, y) in [
            (one.baseline, scaled.baseline),
            (one.comparison_mean, scaled.comparison_mean),
            (one.saving_mean, scaled.saving_mean),
            (one.comparison_flexible, scaled.comparison_flexible),
            (one.saving_flexible, scaled.saving_flexible),
        ] {
            prop_assert!(close(x * k, y, 1e-9), "{x} * {k} != {y}");
        }
        prop_assert!((one.absolute_saving * k - scaled.absolute_saving).abs() <= 1e-9 * one.comparison_mean * k);
        prop_assert!((one.reduction - scaled.reduction).abs() <= 1e-9);
        Ok(())
    })
}

pub fn substitution_identity() -> Outcome {
    check(256, week_values(0.0, 500.0), |values| {
        let days = days_of(wk(BASE_WEEK), &values);
        let model = compute_baseline(&school(), wk(BASE_WEEK).range(), &days, &[], &BaselineOptions::default())
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        let plain = values[..5].iter().sum::<f64>() / 5.0;
        prop_assert!((model.kwh_per_day - plain).abs() <= 1e-9);
        prop_assert!(model.substitutions.is_empty());
        Ok(())
    })
}

/// Mean of Tue-Thu in place of Monday, then the Monday-Friday mean.
pub fn hand_baseline(values: &[f64; 7]) -> f64 {
    let monday = (values[1] + values[2] + values[3]) / 3.0;
    (monday + values[1] + values[2] + values[3] + values[4]) / 5.0
}

pub fn baseline_matches_hand_procedure(cases: u32) -> Outcome {
    check(cases, week_values(0.0, 1000.0), |values| {
        let days = days_of(wk(BASE_WEEK), &values);
        let model =
            compute_baseline(&school(), wk(BASE_WEEK).range(), &days, &monday_anomaly(), &BaselineOptions::default())
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
        let hand = hand_baseline(&values);
        prop_assert!((model.kwh_per_day - hand).abs() <= 1e-9, "{} vs {hand}", model.kwh_per_day);
        prop_assert_eq!(model.substitutions.len(), 1);
        Ok(())
    })
}

pub fn reduction_monotonicity() -> Outcome {
    check(256, (study_strategy(), 0usize..5, 0.0..1.0f64), |((b, c, s), day, cut)| {
        let before = run_study(&study(&b, &c, &s, 1.0)).map_err(TestCaseError::fail)?;
        let mut lower = s;
        lower[day] *= cut;
        let after = run_study(&study(&b, &c, &lower, 1.0)).map_err(TestCaseError::fail)?;
        prop_assert!(after.reduction >= before.reduction, "{} < {}", after.reduction, before.reduction);
        Ok(())
    })
}

pub fn reduction_matches_oracle() -> Outcome {
    check(256, (0.001..1000.0f64, 0.0..1000.0f64), |(c, s)| {
        let r = reduction_fraction(c, s).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(close(r, (c - s) / c, 1e-12));
        Ok(())
    })
}

// ---- waste ----

fn grid(values: &[Option<f64>]) -> Vec<Bucket> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| Bucket {
            start: t0() + Duration::minutes(15 * i as i64),
            end: t0() + Duration::minutes(15 * (i as i64 + 1)),
            value: *v,
            count: v.is_some() as usize,
        })
        .collect()
}

fn maybe(lo: f64, hi: f64) -> impl Strategy<Value = Option<f64>> {
    prop_oneof![12 => (lo..hi).prop_map(Some), 1 => Just(None)]
}

/// Lux and lights power (W) on a shared 15-min grid, with holes.
fn lighting_day() -> impl Strategy<Value = (Vec<Option<f64>>, Vec<Option<f64>>)> {
    (1usize..2000).prop_flat_map(|n| {
        let lux = prop::collection::vec(maybe(0.0, 1200.0), n);
        let power = prop::collection::vec(
            prop_oneof![3 => Just(Some(0.0)), 6 => maybe(0.0, 6000.0), 1 => Just(Some(4900.0))],
            n,
        );
        (lux, power)
    })
}

fn detect(lux: &[Option<f64>], power: &[Option<f64>], threshold: f64) -> Result<Vec<WasteInterval>, TestCaseError> {
    let mut params = WasteParams::new(threshold);
    params.regulatory_min_lux = 0.0;
    detect_luminosity_waste(&school(), "zone", &grid(lux), &grid(power), &params)
        .map_err(|e| TestCaseError::reject(e.to_string()))
}

pub fn waste_savings_arithmetic() -> Outcome {
    check(256, (lighting_day(), 1.0..1200.0f64), |((lux, power), t)| {
        for w in detect(&lux, &power, t)? {
            prop_assert_eq!(w.estimated_daily_savings_kwh, w.excess_power_kw * w.hours());
        }
        Ok(())
    })
}

pub fn waste_threshold_monotonicity() -> Outcome {
    check(256, (lighting_day(), 1.0..1200.0f64, 0.0..600.0f64), |((lux, power), t, raise)| {
        let low = detect(&lux, &power, t)?;
        let high = detect(&lux, &power, t + raise)?;
        for h in &high {
            prop_assert!(
                low.iter().any(|l| l.start <= h.start && h.end <= l.end),
                "interval {}..{} at the higher threshold is not inside one at the lower",
                h.start,
                h.end
            );
        }
        let total = |v: &[WasteInterval]| v.iter().map(|w| (w.end - w.start).num_seconds()).sum::<i64>();
        prop_assert!(total(&high) <= total(&low));
        Ok(())
    })
}

pub fn waste_conjunction() -> Outcome {
    check(256, (lighting_day(), 1.0..1200.0f64), |((lux, power), t)| {
        let floor = WasteParams::new(t).lights_on_floor_kw;
        let (lb, pb) = (grid(&lux), grid(&power));
        for w in detect(&lux, &power, t)? {
            for (l, p) in lb.iter().zip(&pb).filter(|(l, _)| l.start >= w.start && l.end <= w.end) {
                if let (Some(l), Some(p)) = (l.value, p.value) {
                    prop_assert!(
                        l >= t && p / 1000.0 >= floor,
                        "bucket inside {}..{} fails the conjunction",
                        w.start,
                        w.end
                    );
                }
            }
        }
        Ok(())
    })
}

/// Independent scan: wasting buckets grouped into components, consecutive
/// wasting buckets joined when nothing between them is a known non-wasting
/// bucket and the hole between them is shorter than the bridge.
/// Power is in W. Returns (start, end, median kW, savings kWh) per component.
pub fn brute_force_waste(
    lux: &[Bucket],
    power: &[Bucket],
    params: &WasteParams,
) -> Vec<(DateTime<Utc>, DateTime<Utc>, f64, f64)> {
    let t = params.lux_threshold;
    let known = |i: usize| lux[i].value.is_some() && power[i].value.is_some();
    let wasting = |i: usize| {
        known(i) && lux[i].value.unwrap() >= t && power[i].value.unwrap() / 1000.0 >= params.lights_on_floor_kw
    };
    let on: Vec<usize> = (0..lux.len()).filter(|i| wasting(*i)).collect();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, &i) in on.iter().enumerate() {
        let joined = k > 0 && {
            let prev = on[k - 1];
            let hole = (lux[i].start - lux[prev].end).num_seconds();
            (prev + 1..i).all(|j| !known(j)) && hole < params.bridge_secs
        };
        if joined {
            groups.last_mut().unwrap().push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    let lowest =
        power.iter().filter_map(|b| b.value).map(|w| w / 1000.0).filter(|kw| *kw > 0.0).fold(f64::INFINITY, f64::min);
    let minimal = params.minimal_power_kw.unwrap_or(if lowest.is_finite() { lowest } else { 0.0 });
    groups
        .into_iter()
        .map(|g| {
            let mut kw: Vec<f64> = g.iter().map(|i| power[*i].value.unwrap() / 1000.0).collect();
            kw.sort_by(f64::total_cmp);
            let n = kw.len();
            let median = if n % 2 == 1 { kw[n / 2] } else { (kw[n / 2 - 1] + kw[n / 2]) / 2.0 };
            let (start, end) = (lux[g[0]].start, lux[g[g.len() - 1]].end);
            let hours = (end - start).num_seconds() as f64 / 3600.0;
            (start, end, median, (median - minimal).max(0.0) * hours)
        })
        .collect()
}

/// True when the detector and the brute-force scan agree on a day.
pub fn agrees_with_brute_force(
    found: &[WasteInterval],
    lux: &[Bucket],
    power: &[Bucket],
    params: &WasteParams,
) -> bool {
    let oracle = brute_force_waste(lux, power, params);
    found.len() == oracle.len()
        && found.iter().zip(&oracle).all(|(w, (start, end, median, kwh))| {
            w.start == *start
                && w.end == *end
                && close(w.usual_power_kw, *median, 1e-12)
                && close(w.estimated_daily_savings_kwh, *kwh, 1e-12)
        })
}

pub fn waste_equals_brute_force() -> Outcome {
    check(256, (lighting_day(), 1.0..1200.0f64), |((lux, power), t)| {
        let found = detect(&lux, &power, t)?;
        let mut params = WasteParams::new(t);
        params.regulatory_min_lux = 0.0;
        prop_assert!(agrees_with_brute_force(&found, &grid(&lux), &grid(&power), &params), "{found:?}");
        Ok(())
    })
}

pub fn contrast_scale_invariance() -> Outcome {
    let strategy =
        (prop::collection::vec(100.0..500.0f64, 28), prop::collection::vec(20.0..200.0f64, 28), 0.01..100.0f64);
    check(256, strategy, |(weekday, weekend, k)| {
        let start = NaiveDate::from_ymd_opt(2019, 1, 7).unwrap();
        let period = DateRange::new(start, start + Duration::days(27)).unwrap();
        let days = |scale: f64| -> Vec<DailyEnergy> {
            period
                .days()
                .enumerate()
                .map(|(i, date)| {
                    let sat_sun = ecoschool::timeseries::is_weekend(date);
                    let v = if sat_sun { weekend[i] } else { weekday[i] };
                    DailyEnergy {
                        building_id: school(),
                        date,
                        kwh: Some(v * scale),
                        coverage: 1.0,
                        flags: if sat_sun { BTreeSet::from([DayFlag::Weekend]) } else { BTreeSet::new() },
                        counter_reset: false,
                    }
                })
                .collect()
        };
        let a = occupancy_contrast(&school(), period, &days(1.0), 0.25, MIN_COVERAGE).unwrap();
        let b = occupancy_contrast(&school(), period, &days(k), 0.25, MIN_COVERAGE).unwrap();
        prop_assert!((a.ratio - b.ratio).abs() <= 1e-9);
        prop_assert_eq!(a.alert, b.alert);
        Ok(())
    })
}

// ---- simulator ----

fn short_scenario(seed: u64, days: usize) -> ecoschool::ingest::SimScenario {
    let mut s = builtin("weekend-baseload").unwrap();
    s.seed = seed;
    s.meter.as_mut().unwrap().days.truncate(days);
    s
}

pub fn simulator_determinism() -> Outcome {
    check(16, (any::<u64>(), 1usize..4), |(seed, days)| {
        let a = short_scenario(seed, days).render().map_err(|e| TestCaseError::fail(e.to_string()))?;
        let b = short_scenario(seed, days).render().map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(a == b, "same seed produced different streams");
        Ok(())
    })
}

pub fn simulate_ingest_export_round_trip() -> Outcome {
    check(8, (any::<u64>(), 1usize..4), |(seed, days)| {
        let engine = Engine::in_memory();
        let (doc, summary) = engine.simulate(&short_scenario(seed, days), true).unwrap();
        prop_assert_eq!(summary.ingested.unwrap().rejected, 0);
        prop_assert!(engine.export(None).unwrap() == doc, "export differs from the simulated stream");
        Ok(())
    })
}

pub fn analyses_are_deterministic() -> Outcome {
    check(4, any::<u64>(), |seed| {
        let run = || {
            let engine = Engine::in_memory();
            engine.simulate(&short_scenario(seed, 14), true).unwrap();
            let id = BuildingId::new("school-c").unwrap();
            let q = ecoschool::service::ContrastQuery::default();
            render_json(&engine.contrast(&id, &q).unwrap())
        };
        prop_assert_eq!(run(), run());
        Ok(())
    })
}

/// Every property in the suite, by name.
pub const SUITE: &[Property] = &[
    ("integration additivity", integration_additivity),
    ("integration constancy", integration_constancy),
    ("counter reset handling", counter_reset_handling),
    ("resample approximates integration", resample_approximates_integration),
    ("ingestion order independence", ingestion_order_independence),
    ("scale invariance", scale_invariance),
    ("substitution identity", substitution_identity),
    ("baseline hand procedure", || baseline_matches_hand_procedure(256)),
    ("reduction monotonicity", reduction_monotonicity),
    ("reduction oracle", reduction_matches_oracle),
    ("waste savings arithmetic", waste_savings_arithmetic),
    ("waste threshold monotonicity", waste_threshold_monotonicity),
    ("waste conjunction", waste_conjunction),
    ("waste brute force", waste_equals_brute_force),
    ("contrast scale invariance", contrast_scale_invariance),
    ("simulator determinism", simulator_determinism),
    ("simulate ingest export round trip", simulate_ingest_export_round_trip),
    ("analysis determinism", analyses_are_deterministic),
];
