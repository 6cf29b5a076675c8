mod props;

use std::time::{Duration, Instant};

use chrono::{NaiveDate, TimeZone, Utc};

use ecoschool::ingest::builtin;
use ecoschool::service::{BaselineRequest, ContrastQuery, Engine, EvaluateRequest, WasteQuery, WeekSpec};
use ecoschool::timeseries::{Bucket, BuildingId, Resolution};
use ecoschool::waste::{detect_luminosity_waste, WasteParams};

struct Line {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn line(name: &'static str, pass: bool, detail: impl Into<String>) -> Line {
    Line { name, pass, detail: detail.into() }
}

fn id(s: &str) -> BuildingId {
    BuildingId::new(s).unwrap()
}

fn intervention_study() -> Line {
    let started = Instant::now();
    let engine = Engine::in_memory();
    let run = || -> Result<_, String> {
        engine.simulate(&builtin("intervention-study").map_err(|e| e.to_string())?, true).map_err(|e| e.to_string())?;
        let school = id("school-a");
        let request = BaselineRequest {
            from: NaiveDate::from_ymd_opt(2018, 10, 29).unwrap(),
            to: NaiveDate::from_ymd_opt(2018, 11, 4).unwrap(),
            anomalies: None,
            day_set: Default::default(),
        };
        let baseline = engine.baseline(&school, request).map_err(|e| e.to_string())?;
        let result = engine
            .evaluate(
                &school,
                EvaluateRequest {
                    comparison: WeekSpec::Id("2018-W47".into()),
                    saving: WeekSpec::Id("2018-W50".into()),
                    notes: None,
                },
            )
            .map_err(|e| e.to_string())?;
        Ok((baseline, result))
    };
    let (baseline, r) = match run() {
        Ok(v) => v,
        Err(e) => return line("intervention study", false, e),
    };
    let elapsed = started.elapsed();
    let (c, s) = (r.comparison.flexible_kwh_per_day, r.saving.flexible_kwh_per_day);
    let percent = r.reduction_fraction * 100.0;
    let pass = (c - 69.1).abs() <= 0.05
        && (s - 54.6).abs() <= 0.05
        && (percent - 20.98).abs() <= 0.1
        && r.reduction_display == "21%"
        && elapsed < Duration::from_secs(10);
    line(
        "intervention study",
        pass,
        format!(
            "baseline {:.2}, differences {c:.2} and {s:.2} kWh/day, reduction {percent:.2}% ({}), {:.2} s",
            baseline.kwh_per_day,
            r.reduction_display,
            elapsed.as_secs_f64()
        ),
    )
}

fn baseline_procedure() -> Line {
    match props::baseline_matches_hand_procedure(100) {
        Ok(()) => line(
            "baseline procedure",
            true,
            "100 random weeks with an anomalous Monday match the hand procedure to 1e-9",
        ),
        Err(e) => line("baseline procedure", false, e),
    }
}

/// One day on a 15-min grid: daylight above 400 lux from 10:00 to 17:00,
/// lights at 4.9 kW from 08:00 to 18:00 and 1.9 kW otherwise.
fn lighting_fixture() -> (Vec<Bucket>, Vec<Bucket>) {
    let day = Utc.with_ymd_and_hms(2019, 3, 12, 0, 0, 0).unwrap();
    let grid = |f: &dyn Fn(u32) -> f64| -> Vec<Bucket> {
        (0..96u32)
            .map(|i| Bucket {
                start: day + chrono::Duration::minutes(15 * i as i64),
                end: day + chrono::Duration::minutes(15 * (i as i64 + 1)),
                value: Some(f(i)),
                count: 1,
            })
            .collect()
    };
    let lux = grid(&|i| if (40..68).contains(&i) { 650.0 } else { 120.0 });
    let power = grid(&|i| if (32..72).contains(&i) { 4900.0 } else { 1900.0 });
    (lux, power)
}

fn lighting_waste() -> Line {
    let mut notes = Vec::new();
    let mut pass = true;

    let (lux, power) = lighting_fixture();
    let mut params = WasteParams::new(400.0);
    params.minimal_power_kw = Some(1.9);
    match detect_luminosity_waste(&id("fixture"), "hall", &lux, &power, &params) {
        Ok(found) => {
            let ok = found.len() == 1
                && found[0].hours() == 7.0
                && (found[0].estimated_daily_savings_kwh - 21.0).abs() <= 0.1
                && props::agrees_with_brute_force(&found, &lux, &power, &params);
            pass &= ok;
            notes.push(format!(
                "fixture: {} interval(s), {:.2} h, {:.2} kWh",
                found.len(),
                found.first().map_or(0.0, |w| w.hours()),
                found.first().map_or(0.0, |w| w.estimated_daily_savings_kwh)
            ));
        }
        Err(e) => {
            pass = false;
            notes.push(format!("fixture: {e}"));
        }
    }

    let engine = Engine::in_memory();
    engine.simulate(&builtin("hall-lighting").unwrap(), true).unwrap();
    let school = id("school-b");
    let mut agreed = 0;
    let mut days = 0;
    for offset in 0..20u64 {
        let day = NaiveDate::from_ymd_opt(2019, 3, 4).unwrap() + chrono::Days::new(offset);
        let mut q = WasteQuery::new(400.0);
        q.day = Some(day);
        q.lookback_days = Some(1);
        q.resolution = Some(Resolution::QuarterHour);
        let report = match engine.waste(&school, &q) {
            Ok(r) => r,
            Err(e) => {
                pass = false;
                notes.push(format!("{day}: {e}"));
                continue;
            }
        };
        let watts: Vec<Bucket> =
            report.lights_kw.iter().map(|b| Bucket { value: b.value.map(|kw| kw * 1000.0), ..*b }).collect();
        let params = WasteParams {
            lux_threshold: 400.0,
            lights_on_floor_kw: 0.1,
            minimal_power_kw: Some(1.9),
            regulatory_min_lux: report.regulatory_min_lux,
            bridge_secs: WasteParams::new(400.0).bridge_secs,
        };
        days += 1;
        if props::agrees_with_brute_force(&report.intervals, &report.lux, &watts, &params) {
            agreed += 1;
        }
        if day == NaiveDate::from_ymd_opt(2019, 3, 12).unwrap() {
            let w = &report.intervals;
            let ok = w.len() == 1 && w[0].hours() == 7.0 && (w[0].estimated_daily_savings_kwh - 21.0).abs() <= 0.1;
            pass &= ok;
            notes.push(format!(
                "simulated hall: {} interval(s), {:.2} h, {:.2} kWh",
                w.len(),
                w.first().map_or(0.0, |w| w.hours()),
                w.first().map_or(0.0, |w| w.estimated_daily_savings_kwh)
            ));
        }
    }
    pass &= agreed == days && days == 20;
    notes.push(format!("brute force agrees on {agreed}/{days} simulated days"));
    match props::waste_equals_brute_force() {
        Ok(()) => notes.push("and on 256 random days".into()),
        Err(e) => {
            pass = false;
            notes.push(format!("random days: {e}"));
        }
    }
    line("lighting waste", pass, notes.join("; "))
}

fn occupancy_contrast() -> Line {
    let engine = Engine::in_memory();
    engine.simulate(&builtin("weekend-baseload").unwrap(), true).unwrap();
    let q = ContrastQuery { from: None, to: None, alert_ratio: Some(0.25) };
    match engine.contrast(&id("school-c"), &q) {
        Ok(c) => {
            let days = c.weekday_days + c.weekend_days;
            let pass = (c.ratio - 0.3243).abs() <= 0.0005 && c.alert && days == 114;
            line(
                "occupancy contrast",
                pass,
                format!(
                    "{days} days, weekday {:.1}, weekend {:.1}, ratio {:.4}, alert {}",
                    c.weekday_mean_kwh, c.weekend_mean_kwh, c.ratio, c.alert
                ),
            )
        }
        Err(e) => line("occupancy contrast", false, e.to_string()),
    }
}

fn property_suite() -> Line {
    let failed: Vec<String> = props::SUITE
        .iter()
        .filter_map(|(name, run)| {
            let outcome = run();
            println!("    {} {name}", if outcome.is_ok() { "ok  " } else { "FAIL" });
            outcome.err().map(|e| format!("{name}: {e}"))
        })
        .collect();
    let total = props::SUITE.len();
    if failed.is_empty() {
        line("property suite", true, format!("{total}/{total} properties hold"))
    } else {
        line("property suite", false, failed.join("; "))
    }
}

fn main() {
    let lines = [intervention_study(), baseline_procedure(), lighting_waste(), occupancy_contrast(), property_suite()];
    for l in &lines {
        println!("{} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
    }
    let failed = lines.iter().filter(|l| !l.pass).count();
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
