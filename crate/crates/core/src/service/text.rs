//! Plain-text renderings for the terminal. Figures are rounded here and
//! nowhere else.

use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use chrono_tz::Tz;

use super::{
    BuildingSummary, EnergySeries, LiveView, ProgressReport, RegisterSummary, ReportDocument, SavingsTable,
    SimulateSummary, WasteReport,
};
use crate::ingest::IngestSummary;
use crate::methodology::{BaselineModel, InterventionResult, UsedAs, WeekAnalysis};
use crate::waste::OccupancyContrast;

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_owned(), |v| format!("{v:.digits$}"))
}

fn clock(tz: &Tz, at: DateTime<Utc>) -> String {
    at.with_timezone(tz).format("%H:%M").to_string()
}

pub fn buildings(list: &[BuildingSummary]) -> String {
    let mut out = format!("{:<20} {:<20} {:>8} {:>10}  zones\n", "building", "timezone", "sensors", "readings");
    for b in list {
        let _ = writeln!(
            out,
            "{:<20} {:<20} {:>8} {:>10}  {}",
            b.id,
            b.timezone.name(),
            b.sensors,
            b.readings,
            b.zones.join(", ")
        );
    }
    out
}

pub fn register(r: &RegisterSummary) -> String {
    let ids: Vec<_> = r.buildings.iter().map(|b| b.as_str()).collect();
    format!("registered {} building(s) ({}) and {} sensor(s)\n", ids.len(), ids.join(", "), r.sensors)
}

pub fn ingest(s: &IngestSummary) -> String {
    let mut out = format!(
        "accepted {}  rejected {}  duplicates {}  blank lines {}\n",
        s.accepted, s.rejected, s.duplicates, s.blank_lines
    );
    for e in s.errors.iter().take(20) {
        let _ = writeln!(out, "  {e}");
    }
    if s.errors.len() > 20 {
        let _ = writeln!(out, "  ... {} more", s.errors.len() - 20);
    }
    if let Some(a) = &s.aborted {
        let _ = writeln!(out, "session aborted: {a}");
    }
    out
}

pub fn simulate(s: &SimulateSummary) -> String {
    let mut out = format!("scenario {} (seed {}): {} readings\n", s.scenario, s.seed, s.readings);
    if let Some(i) = &s.ingested {
        out.push_str(&ingest(i));
    }
    out
}

pub fn energy(e: &EnergySeries) -> String {
    let mut out = format!("{} {} ({})\n", e.building_id, e.period, e.resolution.as_str());
    let _ = writeln!(out, "{:<17} {:>10} {:>9} {:>9}", "start", "kWh", "mean kW", "coverage");
    for b in &e.buckets {
        let _ = writeln!(
            out,
            "{:<17} {:>10} {:>9} {:>9.3}",
            b.start.with_timezone(&e.timezone).format("%Y-%m-%d %H:%M"),
            opt(b.kwh, 1),
            opt(b.mean_kw, 2),
            b.coverage
        );
    }
    out
}

pub fn baseline(m: &BaselineModel) -> String {
    let mut out = format!("baseline for {} over {}: {:.1} kWh/day\n", m.building_id, m.period, m.kwh_per_day);
    for d in &m.member_days {
        let mark = match d.used_as {
            UsedAs::Actual => String::new(),
            UsedAs::Substituted => format!("  substituted (measured {} kWh)", opt(d.actual_kwh, 1)),
        };
        let _ = writeln!(out, "  {} {}  {:>8.1}{mark}", d.date, d.date.format("%a"), d.kwh);
    }
    for s in &m.substitutions {
        let donors: Vec<_> = s.donor_dates.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(out, "  {} <- mean of {} = {:.1}  {}", s.date, donors.join(", "), s.kwh, s.reason);
    }
    out
}

pub fn week(a: &WeekAnalysis) -> String {
    let mut out = format!("{} {}\n", a.building_id, a.week);
    for d in &a.daily {
        let _ =
            writeln!(out, "  {} {}  {:>8} kWh  coverage {:.3}", d.date, d.date.format("%a"), opt(d.kwh, 1), d.coverage);
    }
    let _ = writeln!(out, "mean       {:>8.1} kWh/day", a.mean_kwh_per_day);
    let _ = writeln!(out, "baseline   {:>8.1} kWh/day", a.baseline_ref.kwh_per_day);
    let _ = writeln!(out, "flexible   {:>8.1} kWh/day", a.flexible_kwh_per_day);
    if a.below_baseline {
        out.push_str("mean is below the baseline\n");
    }
    out
}

pub fn table(t: &SavingsTable) -> String {
    let mut out = format!("{:<26} {:>12} {:>16}\n", "", "kWh/day", "vs baseline");
    for r in &t.rows {
        let label = match r.week {
            Some(w) => format!("{} ({w})", r.label),
            None => r.label.clone(),
        };
        let _ = writeln!(out, "{label:<26} {:>12.1} {:>16}", r.kwh_per_day, opt(r.difference_kwh_per_day, 1));
    }
    if let Some(d) = &t.reduction_display {
        let _ = writeln!(out, "Reduction of flexible consumption: {d}");
    }
    out
}

pub fn intervention(r: &InterventionResult) -> String {
    let base = &r.comparison.baseline_ref;
    let mut out = table(&SavingsTable {
        rows: vec![
            super::TableRow {
                label: "Baseline".into(),
                week: None,
                kwh_per_day: base.kwh_per_day,
                difference_kwh_per_day: None,
            },
            super::TableRow {
                label: "Comparison".into(),
                week: Some(r.comparison.week),
                kwh_per_day: r.comparison.mean_kwh_per_day,
                difference_kwh_per_day: Some(r.comparison.flexible_kwh_per_day),
            },
            super::TableRow {
                label: "Energy saving".into(),
                week: Some(r.saving.week),
                kwh_per_day: r.saving.mean_kwh_per_day,
                difference_kwh_per_day: Some(r.saving.flexible_kwh_per_day),
            },
        ],
        reduction_fraction: Some(r.reduction_fraction),
        reduction_display: Some(r.reduction_display.clone()),
    });
    let _ = writeln!(out, "Saved {:.1} kWh/day", r.absolute_saving_kwh_per_day);
    if !r.notes.is_empty() {
        let _ = writeln!(out, "Notes: {}", r.notes);
    }
    out
}

pub fn waste(w: &WasteReport) -> String {
    let mut out = format!(
        "{} zone {} on {} at {} lux ({} buckets)\n",
        w.building_id,
        w.zone,
        w.day,
        w.lux_threshold,
        w.resolution.as_str()
    );
    if w.intervals.is_empty() {
        out.push_str("no waste intervals\n");
    }
    for i in &w.intervals {
        let _ = writeln!(
            out,
            "  {}-{}  {:.2} h  usual {:.2} kW  minimal {:.2} kW  excess {:.2} kW  saving {:.1} kWh/day  seen on {} of {} days",
            clock(&w.timezone, i.start),
            clock(&w.timezone, i.end),
            i.hours(),
            i.usual_power_kw,
            i.minimal_power_kw,
            i.excess_power_kw,
            i.estimated_daily_savings_kwh,
            i.recurrence_count,
            w.lookback_days
        );
    }
    out
}

pub fn contrast(c: &OccupancyContrast) -> String {
    let mut out = format!("{} {}\n", c.building_id, c.period);
    let _ = writeln!(out, "weekday mean {:>8.1} kWh/day over {} days", c.weekday_mean_kwh, c.weekday_days);
    let _ = writeln!(out, "weekend mean {:>8.1} kWh/day over {} days", c.weekend_mean_kwh, c.weekend_days);
    let _ = writeln!(out, "ratio        {:>8.4}", c.ratio);
    if c.alert {
        let _ = writeln!(out, "ALERT: weekends draw more than {} of a weekday", c.alert_ratio);
    }
    out
}

pub fn progress(p: &ProgressReport) -> String {
    let mut out = format!(
        "{} against {} (flexible {:.1} kWh/day)\n",
        p.building_id, p.comparison_week, p.comparison_flexible_kwh_per_day
    );
    for pt in &p.points {
        let line = match (&pt.gap, pt.reduction_vs_comparison) {
            (Some(reason), _) => format!("  {}  gap ({reason})", pt.week),
            (None, r) => format!(
                "  {}  flexible {:>7} kWh/day  reduction {:>5}{}",
                pt.week,
                opt(pt.flexible_kwh_per_day, 1),
                r.map_or("-".into(), |r| format!("{:.0}%", r * 100.0)),
                if pt.below_baseline { "  below baseline" } else { "" }
            ),
        };
        out.push_str(&line);
        if let Some(tag) = &pt.group_tag {
            let _ = write!(out, "  [{tag}]");
        }
        out.push('\n');
    }
    out
}

pub fn live(l: &LiveView) -> String {
    let mut out = format!("{} at {}\n", l.building_id, l.now.format("%Y-%m-%d %H:%M:%SZ"));
    let _ = writeln!(out, "power now        {} W", opt(l.latest_power_w, 1));
    let _ = writeln!(out, "today so far     {} kWh", opt(l.today_kwh, 2));
    let _ = writeln!(out, "baseline to now  {} kWh", opt(l.baseline_to_now_kwh, 2));
    out
}

pub fn report(r: &ReportDocument) -> String {
    let mut out =
        format!("Report for {}  (generated {})\n\n", r.building_id, r.generated_at.format("%Y-%m-%d %H:%M UTC"));
    if let Some(p) = &r.profile {
        let _ = writeln!(
            out,
            "Profile v{}: {} consumption points, {:.0} occupied hours/week, {} rooms monitored\n",
            p.id.version,
            p.profile.consumption_points.len(),
            p.profile.timetable.weekly_hours(),
            p.profile.monitored_rooms.len()
        );
    }
    if let Some(b) = &r.baseline {
        out.push_str(&baseline(b));
        out.push('\n');
    }
    if let Some(t) = &r.table {
        out.push_str("Mean consumption per day\n");
        out.push_str(&table(t));
        out.push('\n');
    }
    if let Some(i) = &r.intervention {
        if !i.notes.is_empty() {
            let _ = writeln!(out, "Notes: {}\n", i.notes);
        }
    }
    if let Some(w) = &r.waste {
        out.push_str(&waste(w));
        out.push('\n');
    }
    if let Some(c) = &r.contrast {
        out.push_str(&contrast(c));
        out.push('\n');
    }
    if let Some(p) = &r.progress {
        out.push_str(&progress(p));
        out.push('\n');
    }
    for o in &r.omitted {
        let _ = writeln!(out, "{} omitted: {}", o.section, o.message);
    }
    out
}
