use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Datelike, Days, NaiveDate, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::catalog::{BaselineRequest, Catalog};
use super::ServiceError;
use crate::ingest::{format_document, ingest_stream, IngestSummary, SimScenario};
use crate::methodology::{
    analyze_week, compute_baseline, evaluate_intervention, track_progress, AnomalyDecl, BaselineModel, BaselineOptions,
    BaselineRef, BuildingProfile, DaySet, InterventionResult, MethodologyError, ProgressPoint, StoredProfile,
    TrackedWeek, WeekAnalysis, WeekId, MIN_COVERAGE,
};
use crate::timeseries::{
    building_energy, daily_energy_range, local_date, local_day_window, resample_range, Aggregator, Bucket, Building,
    BuildingId, DailyEnergy, DateRange, Kind, Reading, Resolution, SensorId, Site, Snapshot, Store, Window, Zone,
    DEFAULT_MAX_GAP_SECS,
};
use crate::waste::{
    aggregate_zone_lux, annotate_recurrence, detect_luminosity_waste, occupancy_contrast, recurrence_scan,
    LuxAggregation, OccupancyContrast, RecurrencePattern, WasteError, WasteInterval, WasteParams, DEFAULT_ALERT_RATIO,
    DEFAULT_BRIDGE_SECS, DEFAULT_CLOCK_TOLERANCE_MIN,
};

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

pub const DEFAULT_LOOKBACK_DAYS: u32 = 28;
/// Threshold the report uses for its waste section.
pub const REPORT_LUX_THRESHOLD: f64 = 400.0;
const MAX_BUCKETS: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingSummary {
    pub id: BuildingId,
    pub timezone: Tz,
    pub main_meters: Vec<SensorId>,
    pub zones: Vec<String>,
    pub sensors: usize,
    pub readings: usize,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct EnergyQuery {
    pub resolution: Option<Resolution>,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBucket {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub kwh: Option<f64>,
    pub coverage: f64,
    /// Mean draw over the bucket.
    pub mean_kw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub building_id: BuildingId,
    pub timezone: Tz,
    pub resolution: Resolution,
    pub period: DateRange,
    pub buckets: Vec<EnergyBucket>,
}

/// A week given by id, or an analysis computed earlier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeekSpec {
    Id(String),
    Analysis(Box<WeekAnalysis>),
}

#[derive(Debug, Clone, Deserialize)]
pub struct EvaluateRequest {
    pub comparison: WeekSpec,
    pub saving: WeekSpec,
    #[serde(default)]
    pub notes: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct WasteQuery {
    pub day: Option<NaiveDate>,
    pub threshold: f64,
    pub zone: Option<String>,
    pub aggregation: Option<LuxAggregation>,
    pub resolution: Option<Resolution>,
    pub lookback_days: Option<u32>,
}

impl WasteQuery {
    pub fn new(threshold: f64) -> Self {
        Self { day: None, threshold, zone: None, aggregation: None, resolution: None, lookback_days: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WasteReport {
    pub building_id: BuildingId,
    pub zone: String,
    pub timezone: Tz,
    pub day: NaiveDate,
    pub resolution: Resolution,
    pub aggregation: LuxAggregation,
    pub lux_threshold: f64,
    pub regulatory_min_lux: f64,
    /// Zone luminosity per bucket.
    pub lux: Vec<Bucket>,
    /// Lights power per bucket, in kW.
    pub lights_kw: Vec<Bucket>,
    pub intervals: Vec<WasteInterval>,
    pub lookback_days: u32,
    pub recurrence: Vec<RecurrencePattern>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct ContrastQuery {
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub alert_ratio: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct ProgressQuery {
    pub weeks: Option<Vec<String>>,
    pub groups: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressReport {
    pub building_id: BuildingId,
    pub comparison_week: WeekId,
    pub comparison_flexible_kwh_per_day: f64,
    pub baseline_ref: BaselineRef,
    pub points: Vec<ProgressPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveView {
    pub building_id: BuildingId,
    pub now: DateTime<Utc>,
    pub today: NaiveDate,
    pub latest_power_w: Option<f64>,
    pub latest_at: Option<DateTime<Utc>>,
    pub today_kwh: Option<f64>,
    pub today_coverage: Option<f64>,
    pub baseline_kwh_per_day: Option<f64>,
    /// Baseline energy pro rata up to `now`.
    pub baseline_to_now_kwh: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub week: Option<WeekId>,
    pub kwh_per_day: f64,
    pub difference_kwh_per_day: Option<f64>,
}

/// Baseline, comparison and saving rows with the reduction between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsTable {
    pub rows: Vec<TableRow>,
    pub reduction_fraction: Option<f64>,
    pub reduction_display: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmittedSection {
    pub section: String,
    pub reason: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub building_id: BuildingId,
    pub generated_at: DateTime<Utc>,
    pub profile: Option<StoredProfile>,
    pub baseline: Option<BaselineModel>,
    pub table: Option<SavingsTable>,
    pub intervention: Option<InterventionResult>,
    pub waste: Option<WasteReport>,
    pub contrast: Option<OccupancyContrast>,
    pub progress: Option<ProgressReport>,
    pub omitted: Vec<OmittedSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterSummary {
    pub buildings: Vec<BuildingId>,
    pub sensors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub scenario: String,
    pub seed: u64,
    pub readings: usize,
    pub ingested: Option<IngestSummary>,
}

/// Every operation of the service, shared by the HTTP handlers and the CLI.
pub struct Engine {
    store: Store,
    catalog: Mutex<Catalog>,
    clock: Clock,
    timezones: BTreeMap<BuildingId, Tz>,
}

fn bad_request(code: &str, message: impl Into<String>) -> ServiceError {
    ServiceError::new(super::ErrorKind::BadRequest, code, message)
}

impl Engine {
    pub fn open(root: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let root = root.as_ref();
        Ok(Self::with_parts(Store::open(root)?, Catalog::open(root)?))
    }

    pub fn in_memory() -> Self {
        Self::with_parts(Store::in_memory(), Catalog::in_memory())
    }

    fn with_parts(store: Store, catalog: Catalog) -> Self {
        Self { store, catalog: Mutex::new(catalog), clock: Arc::new(Utc::now), timezones: BTreeMap::new() }
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    /// Per-building time zones that win over registration documents.
    pub fn with_timezones(mut self, timezones: BTreeMap<BuildingId, Tz>) -> Self {
        self.timezones = timezones;
        self
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn now(&self) -> DateTime<Utc> {
        (self.clock)()
    }

    fn catalog(&self) -> std::sync::MutexGuard<'_, Catalog> {
        self.catalog.lock().expect("catalog lock")
    }

    // ---- registration and ingestion ----

    pub fn register_site(&self, mut site: Site) -> Result<RegisterSummary, ServiceError> {
        for b in &mut site.buildings {
            if let Some(tz) = self.timezones.get(&b.id) {
                b.timezone = *tz;
            }
        }
        self.store.register(&site)?;
        Ok(RegisterSummary {
            buildings: site.buildings.iter().map(|b| b.id.clone()).collect(),
            sensors: site.sensors.len(),
        })
    }

    pub fn register_profile(&self, profile: BuildingProfile) -> Result<StoredProfile, ServiceError> {
        let registry = self.store.registry();
        let mut catalog = self.catalog();
        let stored = catalog.data.profiles.register(profile, &registry, self.now())?;
        catalog.save()?;
        Ok(stored)
    }

    pub fn ingest<R: BufRead>(&self, reader: R) -> Result<IngestSummary, ServiceError> {
        Ok(ingest_stream(&self.store, reader)?)
    }

    /// Runs a scenario; with `ingest`, also registers its site and loads the stream.
    pub fn simulate(&self, scenario: &SimScenario, ingest: bool) -> Result<(String, SimulateSummary), ServiceError> {
        let readings = scenario.run()?;
        let doc = format_document(&readings);
        let ingested = if ingest {
            self.register_site(scenario.site.clone())?;
            if let Some(p) = &scenario.profile {
                let current = self.catalog().data.profiles.current(&p.building_id).map(|s| s.profile.clone());
                if current.as_ref() != Some(p) {
                    self.register_profile(p.clone())?;
                }
            }
            Some(self.ingest(doc.as_bytes())?)
        } else {
            None
        };
        Ok((
            doc,
            SimulateSummary {
                scenario: scenario.name.clone(),
                seed: scenario.seed,
                readings: readings.len(),
                ingested,
            },
        ))
    }

    /// Stored readings in wire format, ordered by sensor and timestamp.
    pub fn export(&self, building: Option<&BuildingId>) -> Result<String, ServiceError> {
        let snap = self.store.snapshot();
        if let Some(b) = building {
            snap.building(b)?;
        }
        let readings: Vec<Reading> = snap
            .readings()
            .filter(|r| {
                building.is_none_or(|b| snap.registry().sensors.get(r.sensor_id()).is_some_and(|s| &s.building_id == b))
            })
            .collect();
        Ok(format_document(&readings))
    }

    // ---- queries ----

    pub fn buildings(&self) -> Vec<BuildingSummary> {
        let snap = self.store.snapshot();
        snap.registry()
            .buildings
            .values()
            .map(|b| {
                let sensors: Vec<_> = snap.registry().sensors_of(&b.id).collect();
                BuildingSummary {
                    id: b.id.clone(),
                    timezone: b.timezone,
                    main_meters: b.main_meters.clone(),
                    zones: b.zones.iter().map(|z| z.label.clone()).collect(),
                    sensors: sensors.len(),
                    readings: sensors.iter().map(|s| snap.points(&s.sensor_id).len()).sum(),
                }
            })
            .collect()
    }

    /// The named building, or the only registered one.
    pub fn resolve_building(&self, id: Option<&str>) -> Result<BuildingId, ServiceError> {
        let registry = self.store.registry();
        match id {
            Some(id) => {
                let id = BuildingId::new(id)?;
                registry.building(&id)?;
                Ok(id)
            }
            None => match registry.buildings.keys().collect::<Vec<_>>().as_slice() {
                [only] => Ok((*only).clone()),
                [] => Err(ServiceError::validation("NoData", "no data: no building is registered")),
                _ => Err(ServiceError::validation("AmbiguousBuilding", "several buildings are registered; name one")),
            },
        }
    }

    fn building(&self, snap: &Snapshot, id: &BuildingId) -> Result<Building, ServiceError> {
        Ok(snap.building(id)?.clone())
    }

    /// First and last local dates with data for the given sensors. The last
    /// date excludes a lone reading exactly at midnight.
    fn data_span(snap: &Snapshot, tz: &Tz, sensors: &[SensorId]) -> Option<(NaiveDate, NaiveDate)> {
        let first = sensors.iter().filter_map(|s| snap.points(s).first()).map(|p| p.at).min()?;
        let last = sensors.iter().filter_map(|s| snap.points(s).last()).map(|p| p.at).max()?;
        let last_day = local_date(tz, last - chrono::Duration::seconds(1)).max(local_date(tz, first));
        Some((local_date(tz, first), last_day))
    }

    fn meter_span(snap: &Snapshot, b: &Building) -> Result<(NaiveDate, NaiveDate), ServiceError> {
        Self::data_span(snap, &b.timezone, &b.main_meters)
            .ok_or_else(|| ServiceError::validation("NoData", format!("no data for building {}", b.id)))
    }

    fn days(&self, snap: &Snapshot, b: &Building, range: DateRange) -> Result<Vec<DailyEnergy>, ServiceError> {
        Ok(daily_energy_range(b, range.start, range.end, snap, DEFAULT_MAX_GAP_SECS)?)
    }

    pub fn energy(&self, id: &BuildingId, q: &EnergyQuery) -> Result<EnergySeries, ServiceError> {
        let snap = self.store.snapshot();
        let b = self.building(&snap, id)?;
        let resolution = q.resolution.unwrap_or(Resolution::Day);
        let (from, to) = match (q.from, q.to) {
            (Some(f), Some(t)) => (f, t),
            (f, t) => {
                let (first, last) = Self::meter_span(&snap, &b)?;
                let to = t.unwrap_or(last);
                (f.unwrap_or_else(|| (to - chrono::Duration::days(6)).max(first)), to)
            }
        };
        let period = DateRange::new(from, to).map_err(|e| bad_request("InvalidPeriod", e.to_string()))?;
        let window = Window::new(local_day_window(&b.timezone, from).start, local_day_window(&b.timezone, to).end);
        let grid = resample_range(&[], resolution, Aggregator::Mean, &b.timezone, window);
        if grid.len() > MAX_BUCKETS {
            return Err(ServiceError::validation(
                "TooManyBuckets",
                format!("{} buckets requested; at most {MAX_BUCKETS}", grid.len()),
            ));
        }
        let mut buckets = Vec::with_capacity(grid.len());
        for g in grid {
            let e = building_energy(&b, &snap, Window::new(g.start, g.end), DEFAULT_MAX_GAP_SECS)?;
            let hours = g.seconds() as f64 / 3600.0;
            buckets.push(EnergyBucket {
                start: g.start,
                end: g.end,
                kwh: e.kwh,
                coverage: e.coverage,
                mean_kw: e.kwh.map(|k| k / hours),
            });
        }
        Ok(EnergySeries { building_id: id.clone(), timezone: b.timezone, resolution, period, buckets })
    }

    // ---- methodology ----

    fn anomalies_for(b: &Building, req: &BaselineRequest, period: DateRange) -> Vec<AnomalyDecl> {
        if let Some(a) = &req.anomalies {
            return a.clone();
        }
        // Calendar-declared days are replaced by the mean of the Tuesday to
        // Thursday of their own week.
        b.calendar
            .anomalous
            .iter()
            .filter(|d| period.contains(**d) && req.day_set.includes(**d))
            .map(|date| {
                let week = WeekId::containing(*date);
                let donors = week.dates()[1..4]
                    .iter()
                    .copied()
                    .filter(|d| period.contains(*d) && d != date && !b.calendar.anomalous.contains(d))
                    .collect();
                AnomalyDecl { date: *date, donors, reason: "declared anomalous in the building calendar".into() }
            })
            .collect()
    }

    fn compute_baseline_for(
        &self,
        snap: &Snapshot,
        b: &Building,
        req: &BaselineRequest,
    ) -> Result<BaselineModel, ServiceError> {
        let period =
            DateRange::new(req.from, req.to).map_err(|e| ServiceError::validation("InvalidPeriod", e.to_string()))?;
        let days = self.days(snap, b, period)?;
        let anomalies = Self::anomalies_for(b, req, period);
        let options = BaselineOptions { day_set: req.day_set, ..BaselineOptions::default() };
        Ok(compute_baseline(&b.id, period, &days, &anomalies, &options)?)
    }

    /// Computes a baseline and makes its definition the building's active one.
    pub fn baseline(&self, id: &BuildingId, req: BaselineRequest) -> Result<BaselineModel, ServiceError> {
        let snap = self.store.snapshot();
        let b = self.building(&snap, id)?;
        let model = self.compute_baseline_for(&snap, &b, &req)?;
        let mut catalog = self.catalog();
        catalog.state_mut(id).baseline = Some(req);
        catalog.save()?;
        Ok(model)
    }

    fn active_baseline(&self, snap: &Snapshot, b: &Building) -> Result<BaselineModel, ServiceError> {
        let req = self.catalog().state(&b.id).baseline.ok_or_else(|| {
            ServiceError::validation("NoBaseline", format!("building {} has no baseline; compute one first", b.id))
        })?;
        self.compute_baseline_for(snap, b, &req)
    }

    /// Resolves `2018-W47`, or `w47` against the active baseline's year (else the data's).
    pub fn parse_week(&self, id: &BuildingId, s: &str) -> Result<WeekId, ServiceError> {
        if let Ok(w) = s.parse() {
            return Ok(w);
        }
        let year = match self.catalog().state(id).baseline {
            Some(req) => req.to.year(),
            None => {
                let snap = self.store.snapshot();
                let b = self.building(&snap, id)?;
                Self::meter_span(&snap, &b).map(|(_, last)| last.year()).unwrap_or_else(|_| self.now().year())
            }
        };
        Ok(WeekId::parse_with_year(s, year)?)
    }

    fn analyze(
        &self,
        snap: &Snapshot,
        b: &Building,
        week: WeekId,
        baseline: &BaselineModel,
        day_set: Option<DaySet>,
    ) -> Result<WeekAnalysis, MethodologyError> {
        let days = daily_energy_range(b, week.range().start, week.range().end, snap, DEFAULT_MAX_GAP_SECS)?;
        analyze_week(&b.id, week, &days, baseline, day_set.unwrap_or(baseline.day_set), MIN_COVERAGE)
    }

    pub fn week_analysis(
        &self,
        id: &BuildingId,
        week: &str,
        day_set: Option<DaySet>,
    ) -> Result<WeekAnalysis, ServiceError> {
        let week = self.parse_week(id, week)?;
        let snap = self.store.snapshot();
        let b = self.building(&snap, id)?;
        let baseline = self.active_baseline(&snap, &b)?;
        Ok(self.analyze(&snap, &b, week, &baseline, day_set)?)
    }

    fn resolve_spec(
        &self,
        snap: &Snapshot,
        b: &Building,
        spec: WeekSpec,
        baseline: &mut Option<BaselineModel>,
    ) -> Result<WeekAnalysis, ServiceError> {
        match spec {
            WeekSpec::Analysis(a) => Ok(*a),
            WeekSpec::Id(s) => {
                let week = self.parse_week(&b.id, &s)?;
                if baseline.is_none() {
                    *baseline = Some(self.active_baseline(snap, b)?);
                }
                let base = baseline.as_ref().expect("set above");
                Ok(self.analyze(snap, b, week, base, None)?)
            }
        }
    }

    /// Evaluates an intervention and pins its comparison week.
    pub fn evaluate(&self, id: &BuildingId, req: EvaluateRequest) -> Result<InterventionResult, ServiceError> {
        let snap = self.store.snapshot();
        let b = self.building(&snap, id)?;
        let mut baseline = None;
        let comparison = self.resolve_spec(&snap, &b, req.comparison, &mut baseline)?;
        let saving = self.resolve_spec(&snap, &b, req.saving, &mut baseline)?;
        if comparison.building_id != *id || saving.building_id != *id {
            return Err(MethodologyError::BuildingMismatch.into());
        }
        let result = evaluate_intervention(comparison, saving, req.notes.unwrap_or_default())?;
        let mut catalog = self.catalog();
        let state = catalog.state_mut(id);
        state.comparison_week = Some(result.comparison.week);
        state.saving_week = Some(result.saving.week);
        state.notes = result.notes.clone();
        catalog.save()?;
        Ok(result)
    }

    pub fn progress(&self, id: &BuildingId, q: &ProgressQuery) -> Result<ProgressReport, ServiceError> {
        let snap = self.store.snapshot();
        let b = self.building(&snap, id)?;
        let baseline = self.active_baseline(&snap, &b)?;
        let comparison_week = self.catalog().state(id).comparison_week.ok_or_else(|| {
            ServiceError::validation("NoComparisonWeek", "no comparison week is pinned; evaluate an intervention first")
        })?;
        let comparison = self.analyze(&snap, &b, comparison_week, &baseline, None)?;
        let weeks: Vec<WeekId> = match &q.weeks {
            Some(list) => list.iter().map(|w| self.parse_week(id, w)).collect::<Result<_, _>>()?,
            None => {
                let last = WeekId::containing(Self::meter_span(&snap, &b)?.1);
                let mut out = Vec::new();
                let mut w = comparison_week.next();
                while w <= last {
                    out.push(w);
                    w = w.next();
                }
                out
            }
        };
        let mut groups = BTreeMap::new();
        for (week, tag) in &q.groups {
            groups.insert(self.parse_week(id, week)?, tag.clone());
        }
        let tracked = weeks
            .into_iter()
            .map(|week| TrackedWeek {
                week,
                analysis: self.analyze(&snap, &b, week, &baseline, None),
                group_tag: groups.get(&week).cloned(),
            })
            .collect();
        let points = track_progress(&baseline, &comparison, tracked)?;
        Ok(ProgressReport {
            building_id: id.clone(),
            comparison_week,
            comparison_flexible_kwh_per_day: comparison.flexible_kwh_per_day,
            baseline_ref: BaselineRef::from(&baseline),
            points,
        })
    }

    // ---- waste ----

    fn zone<'a>(b: &'a Building, label: Option<&str>) -> Result<&'a Zone, ServiceError> {
        match label {
            Some(l) => b.zone(l).ok_or_else(|| WasteError::UnknownZone(l.to_owned()).into()),
            None => b.zones.first().ok_or_else(|| {
                ServiceError::validation("UnknownZone", format!("building {} has no lighting zones", b.id))
            }),
        }
    }

    #[allow(clippy::type_complexity)]
    fn waste_day(
        snap: &Snapshot,
        b: &Building,
        zone: &Zone,
        day: NaiveDate,
        params: &WasteParams,
        aggregation: LuxAggregation,
        resolution: Resolution,
    ) -> Result<(Vec<Bucket>, Vec<Bucket>, Vec<WasteInterval>), WasteError> {
        let window = local_day_window(&b.timezone, day);
        let series: Vec<Vec<Bucket>> = zone
            .lux_sensors
            .iter()
            .map(|s| resample_range(snap.points(s), resolution, Aggregator::Mean, &b.timezone, window))
            .collect();
        let lux = aggregate_zone_lux(&series, aggregation)?;
        let power = resample_range(snap.points(&zone.lights_meter), resolution, Aggregator::Mean, &b.timezone, window);
        let intervals = detect_luminosity_waste(&b.id, &zone.label, &lux, &power, params)?;
        Ok((lux, power, intervals))
    }

    pub fn waste(&self, id: &BuildingId, q: &WasteQuery) -> Result<WasteReport, ServiceError> {
        let snap = self.store.snapshot();
        let b = self.building(&snap, id)?;
        let zone = Self::zone(&b, q.zone.as_deref())?;
        let resolution = q.resolution.unwrap_or(Resolution::QuarterHour);
        if resolution == Resolution::Day {
            return Err(ServiceError::validation("InvalidResolution", "waste detection needs a sub-daily resolution"));
        }
        let aggregation = q.aggregation.unwrap_or_default();
        let lookback = q.lookback_days.unwrap_or(DEFAULT_LOOKBACK_DAYS).max(1);
        let day = match q.day {
            Some(d) => d,
            None => {
                let mut sensors = zone.lux_sensors.clone();
                sensors.push(zone.lights_meter.clone());
                Self::data_span(&snap, &b.timezone, &sensors)
                    .ok_or_else(|| WasteError::MissingSeries(format!("luminosity for zone {}", zone.label)))?
                    .1
            }
        };
        let params = WasteParams {
            lux_threshold: q.threshold,
            lights_on_floor_kw: zone.lights_on_floor_kw,
            minimal_power_kw: zone.minimal_power_kw,
            regulatory_min_lux: zone.regulatory_min_lux,
            bridge_secs: DEFAULT_BRIDGE_SECS,
        };
        let (lux, power, _) = Self::waste_day(&snap, &b, zone, day, &params, aggregation, resolution)?;
        let mut per_day = Vec::with_capacity(lookback as usize);
        for back in (0..lookback as u64).rev() {
            let Some(d) = day.checked_sub_days(Days::new(back)) else {
                continue;
            };
            match Self::waste_day(&snap, &b, zone, d, &params, aggregation, resolution) {
                Ok((_, _, found)) => per_day.push(found),
                Err(WasteError::MissingSeries(_)) => per_day.push(Vec::new()),
                Err(e) => return Err(e.into()),
            }
        }
        let recurrence = recurrence_scan(&per_day, &b.timezone, DEFAULT_CLOCK_TOLERANCE_MIN);
        annotate_recurrence(&mut per_day, &recurrence);
        let intervals = per_day.pop().unwrap_or_default();
        let lights_kw = power
            .into_iter()
            .map(|mut bk| {
                bk.value = bk.value.map(|w| w / 1000.0);
                bk
            })
            .collect();
        Ok(WasteReport {
            building_id: id.clone(),
            zone: zone.label.clone(),
            timezone: b.timezone,
            day,
            resolution,
            aggregation,
            lux_threshold: q.threshold,
            regulatory_min_lux: zone.regulatory_min_lux,
            lux,
            lights_kw,
            intervals,
            lookback_days: lookback,
            recurrence,
        })
    }

    pub fn contrast(&self, id: &BuildingId, q: &ContrastQuery) -> Result<OccupancyContrast, ServiceError> {
        let snap = self.store.snapshot();
        let b = self.building(&snap, id)?;
        let (from, to) = match (q.from, q.to) {
            (Some(f), Some(t)) => (f, t),
            (f, t) => {
                let (first, last) = Self::meter_span(&snap, &b)?;
                (f.unwrap_or(first), t.unwrap_or(last))
            }
        };
        let period = DateRange::new(from, to).map_err(|e| ServiceError::validation("InvalidPeriod", e.to_string()))?;
        let days = self.days(&snap, &b, period)?;
        Ok(occupancy_contrast(id, period, &days, q.alert_ratio.unwrap_or(DEFAULT_ALERT_RATIO), MIN_COVERAGE)?)
    }

    // ---- live view ----

    pub fn live(&self, id: &BuildingId) -> Result<LiveView, ServiceError> {
        let now = self.now();
        let snap = self.store.snapshot();
        let b = self.building(&snap, id)?;
        let tz = b.timezone;
        let today = local_date(&tz, now);
        let day = local_day_window(&tz, today);

        let mut latest_power = Some(0.0);
        let mut latest_at: Option<DateTime<Utc>> = None;
        for m in &b.main_meters {
            let kind = snap.registry().sensor(m)?.kind;
            let points = snap.points(m);
            let upto = points.partition_point(|p| p.at <= now);
            match points[..upto].last() {
                Some(p) if kind == Kind::Power && p.at >= day.start => {
                    latest_power = latest_power.map(|acc| acc + p.value);
                    latest_at = Some(latest_at.map_or(p.at, |t| t.max(p.at)));
                }
                _ => latest_power = None,
            }
        }
        if b.main_meters.is_empty() {
            latest_power = None;
        }
        let (today_kwh, today_coverage) = if now > day.start {
            let e = building_energy(&b, &snap, Window::new(day.start, now), DEFAULT_MAX_GAP_SECS)?;
            (e.kwh, e.kwh.map(|_| e.coverage))
        } else {
            (None, None)
        };
        let baseline = self.active_baseline(&snap, &b).ok().map(|m| m.kwh_per_day);
        let elapsed = (now.min(day.end) - day.start).num_seconds().max(0) as f64 / day.seconds() as f64;
        Ok(LiveView {
            building_id: id.clone(),
            now,
            today,
            latest_power_w: latest_power.filter(|_| latest_at.is_some()),
            latest_at,
            today_kwh,
            today_coverage,
            baseline_kwh_per_day: baseline,
            baseline_to_now_kwh: baseline.map(|k| k * elapsed),
        })
    }

    // ---- report ----

    pub fn report(&self, id: &BuildingId) -> Result<ReportDocument, ServiceError> {
        let snap = self.store.snapshot();
        let b = self.building(&snap, id)?;
        let has_data = snap.registry().sensors_of(id).any(|s| !snap.points(&s.sensor_id).is_empty());
        if !has_data {
            return Err(ServiceError::validation("NoData", format!("no data for building {id}")));
        }
        let mut omitted = Vec::new();
        let state = self.catalog().state(id);
        let profile = self.catalog().data.profiles.current(id).cloned();
        let baseline = keep_section(&mut omitted, "baseline", self.active_baseline(&snap, &b));
        let intervention = match (state.comparison_week, state.saving_week) {
            (Some(c), Some(s)) => {
                keep_section(&mut omitted, "intervention", self.evaluate_pinned(&snap, &b, c, s, &state.notes))
            }
            _ => keep_section(
                &mut omitted,
                "intervention",
                Err(ServiceError::validation("NoComparisonWeek", "no intervention has been evaluated")),
            ),
        };
        let table = baseline.as_ref().map(|base| savings_table(base, intervention.as_ref()));
        let waste = if b.zones.is_empty() {
            None
        } else {
            keep_section(&mut omitted, "waste", self.waste(id, &WasteQuery::new(REPORT_LUX_THRESHOLD)))
        };
        let contrast = keep_section(&mut omitted, "contrast", self.contrast(id, &ContrastQuery::default()));
        let progress = if state.comparison_week.is_some() {
            keep_section(&mut omitted, "progress", self.progress(id, &ProgressQuery::default()))
        } else {
            None
        };
        Ok(ReportDocument {
            building_id: id.clone(),
            generated_at: self.now(),
            profile,
            baseline,
            table,
            intervention,
            waste,
            contrast,
            progress,
            omitted,
        })
    }

    fn evaluate_pinned(
        &self,
        snap: &Snapshot,
        b: &Building,
        comparison: WeekId,
        saving: WeekId,
        notes: &str,
    ) -> Result<InterventionResult, ServiceError> {
        let baseline = self.active_baseline(snap, b)?;
        let c = self.analyze(snap, b, comparison, &baseline, None)?;
        let s = self.analyze(snap, b, saving, &baseline, None)?;
        Ok(evaluate_intervention(c, s, notes)?)
    }
}

fn keep_section<T>(omitted: &mut Vec<OmittedSection>, section: &str, r: Result<T, ServiceError>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            omitted.push(OmittedSection { section: section.into(), reason: e.code, message: e.message });
            None
        }
    }
}

pub fn savings_table(baseline: &BaselineModel, intervention: Option<&InterventionResult>) -> SavingsTable {
    let mut rows = vec![TableRow {
        label: "Baseline".into(),
        week: None,
        kwh_per_day: baseline.kwh_per_day,
        difference_kwh_per_day: None,
    }];
    if let Some(r) = intervention {
        rows.push(TableRow {
            label: "Comparison".into(),
            week: Some(r.comparison.week),
            kwh_per_day: r.comparison.mean_kwh_per_day,
            difference_kwh_per_day: Some(r.comparison.flexible_kwh_per_day),
        });
        rows.push(TableRow {
            label: "Energy saving".into(),
            week: Some(r.saving.week),
            kwh_per_day: r.saving.mean_kwh_per_day,
            difference_kwh_per_day: Some(r.saving.flexible_kwh_per_day),
        });
    }
    SavingsTable {
        rows,
        reduction_fraction: intervention.map(|r| r.reduction_fraction),
        reduction_display: intervention.map(|r| r.reduction_display.clone()),
    }
}
