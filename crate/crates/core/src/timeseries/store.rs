//! Append-only reading store.
//!
//! Each sensor owns a slot holding its points in timestamp order plus the
//! handle of its log file, `readings/<sensor>.log`, one `timestamp,value`
//! line per accepted reading. Slots have independent locks, so appends to
//! different sensors do not contend. Readers take a [`Snapshot`]: cloned
//! `Arc`s of every slot's point vector; later appends copy on write and never
//! disturb an outstanding snapshot.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Building, BuildingId, Point, Reading, Sensor, SensorId, Site, TimeseriesError};

const REGISTRY_FILE: &str = "registry.json";
const READINGS_DIR: &str = "readings";
const TS_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    pub buildings: BTreeMap<BuildingId, Building>,
    pub sensors: BTreeMap<SensorId, Sensor>,
}

impl Registry {
    pub fn building(&self, id: &BuildingId) -> Result<&Building, TimeseriesError> {
        self.buildings.get(id).ok_or_else(|| TimeseriesError::UnknownBuilding(id.clone()))
    }

    pub fn sensor(&self, id: &SensorId) -> Result<&Sensor, TimeseriesError> {
        self.sensors.get(id).ok_or_else(|| TimeseriesError::UnknownSensor(id.clone()))
    }

    pub fn sensors_of<'a>(&'a self, building: &'a BuildingId) -> impl Iterator<Item = &'a Sensor> + 'a {
        self.sensors.values().filter(move |s| &s.building_id == building)
    }
}

#[derive(Debug)]
pub enum AppendOutcome {
    Accepted,
    Duplicate,
    Rejected(TimeseriesError),
}

#[derive(Debug, Default)]
pub struct AppendReport {
    /// One entry per input reading, in input order.
    pub outcomes: Vec<AppendOutcome>,
}

impl AppendReport {
    pub fn accepted(&self) -> usize {
        self.outcomes.iter().filter(|o| matches!(o, AppendOutcome::Accepted)).count()
    }

    pub fn duplicates(&self) -> usize {
        self.outcomes.iter().filter(|o| matches!(o, AppendOutcome::Duplicate)).count()
    }

    pub fn rejected(&self) -> usize {
        self.outcomes.iter().filter(|o| matches!(o, AppendOutcome::Rejected(_))).count()
    }
}

struct SlotInner {
    points: Arc<Vec<Point>>,
    log: Option<BufWriter<File>>,
}

struct Slot {
    inner: Mutex<SlotInner>,
}

pub struct Store {
    root: Option<PathBuf>,
    registry: RwLock<Arc<Registry>>,
    registry_write: Mutex<()>,
    slots: RwLock<HashMap<SensorId, Arc<Slot>>>,
}

/// Immutable view of the store taken at one point in time.
#[derive(Clone)]
pub struct Snapshot {
    registry: Arc<Registry>,
    series: HashMap<SensorId, Arc<Vec<Point>>>,
}

impl Snapshot {
    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn building(&self, id: &BuildingId) -> Result<&Building, TimeseriesError> {
        self.registry.building(id)
    }

    /// Points of one sensor in timestamp order; empty when it has none.
    pub fn points(&self, sensor: &SensorId) -> &[Point] {
        self.series.get(sensor).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn is_empty(&self) -> bool {
        self.series.values().all(|v| v.is_empty())
    }

    pub fn reading_count(&self) -> usize {
        self.series.values().map(|v| v.len()).sum()
    }

    /// All readings ordered by (sensor, timestamp).
    pub fn readings(&self) -> impl Iterator<Item = Reading> + '_ {
        self.registry.sensors.values().flat_map(move |s| {
            self.points(&s.sensor_id).iter().map(move |p| {
                Reading::of_kind(s.sensor_id.clone(), p.at, s.kind, p.value)
                    .expect("stored points were validated on append")
            })
        })
    }
}

fn format_ts(at: DateTime<Utc>) -> String {
    at.format(TS_FORMAT).to_string()
}

fn open_log(root: &Path, sensor: &SensorId) -> Result<BufWriter<File>, TimeseriesError> {
    let path = root.join(READINGS_DIR).join(format!("{sensor}.log"));
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    Ok(BufWriter::new(file))
}

fn load_log(path: &Path) -> Result<Vec<Point>, TimeseriesError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let corrupt = |n: usize, reason: &str| TimeseriesError::Corrupt {
        path: path.display().to_string(),
        reason: format!("line {n}: {reason}"),
    };
    let mut points = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (ts, value) = line.split_once(',').ok_or_else(|| corrupt(i + 1, "missing field"))?;
        let at = NaiveDateTime::parse_from_str(ts, TS_FORMAT).map_err(|_| corrupt(i + 1, "bad timestamp"))?.and_utc();
        let value: f64 = value.parse().map_err(|_| corrupt(i + 1, "bad value"))?;
        points.push(Point::new(at, value));
    }
    points.sort_by_key(|p| p.at);
    points.dedup_by_key(|p| p.at);
    Ok(points)
}

impl Store {
    /// A store that lives only in memory.
    pub fn in_memory() -> Self {
        Self {
            root: None,
            registry: RwLock::new(Arc::new(Registry::default())),
            registry_write: Mutex::new(()),
            slots: RwLock::new(HashMap::new()),
        }
    }

    /// Opens (creating if needed) a store directory and replays its logs.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, TimeseriesError> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(root.join(READINGS_DIR))?;
        let registry: Registry = match fs::read(root.join(REGISTRY_FILE)) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| TimeseriesError::Corrupt {
                path: root.join(REGISTRY_FILE).display().to_string(),
                reason: e.to_string(),
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Registry::default(),
            Err(e) => return Err(e.into()),
        };
        let mut slots = HashMap::new();
        for id in registry.sensors.keys() {
            let points = load_log(&root.join(READINGS_DIR).join(format!("{id}.log")))?;
            let log = open_log(&root, id)?;
            slots.insert(
                id.clone(),
                Arc::new(Slot { inner: Mutex::new(SlotInner { points: Arc::new(points), log: Some(log) }) }),
            );
        }
        Ok(Self {
            root: Some(root),
            registry: RwLock::new(Arc::new(registry)),
            registry_write: Mutex::new(()),
            slots: RwLock::new(slots),
        })
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn registry(&self) -> Arc<Registry> {
        self.registry.read().expect("registry lock").clone()
    }

    /// Registers (or updates) buildings and sensors. A sensor may not change
    /// its kind or building once registered.
    pub fn register(&self, site: &Site) -> Result<(), TimeseriesError> {
        site.validate()?;
        let _guard = self.registry_write.lock().expect("registry write lock");
        let mut next = (*self.registry()).clone();
        for s in &site.sensors {
            if let Some(existing) = next.sensors.get(&s.sensor_id) {
                if existing.kind != s.kind {
                    return Err(TimeseriesError::KindMismatch {
                        sensor: s.sensor_id.clone(),
                        expected: existing.kind,
                        got: s.kind,
                    });
                }
                if existing.building_id != s.building_id {
                    return Err(TimeseriesError::SensorOwnership {
                        sensor: s.sensor_id.clone(),
                        owner: existing.building_id.clone(),
                    });
                }
            }
        }
        for b in &site.buildings {
            next.buildings.insert(b.id.clone(), b.clone());
        }
        for s in &site.sensors {
            next.sensors.insert(s.sensor_id.clone(), s.clone());
        }
        if let Some(root) = &self.root {
            let tmp = root.join(format!("{REGISTRY_FILE}.tmp"));
            let bytes = serde_json::to_vec_pretty(&next).expect("registry serializes");
            fs::write(&tmp, bytes)?;
            fs::rename(&tmp, root.join(REGISTRY_FILE))?;
        }
        {
            let mut slots = self.slots.write().expect("slots lock");
            for s in &site.sensors {
                if !slots.contains_key(&s.sensor_id) {
                    let log = match &self.root {
                        Some(root) => Some(open_log(root, &s.sensor_id)?),
                        None => None,
                    };
                    slots.insert(
                        s.sensor_id.clone(),
                        Arc::new(Slot { inner: Mutex::new(SlotInner { points: Arc::new(Vec::new()), log }) }),
                    );
                }
            }
        }
        *self.registry.write().expect("registry lock") = Arc::new(next);
        Ok(())
    }

    /// Appends readings. Unknown sensors and kind mismatches are rejected per
    /// reading; an existing (sensor, timestamp) key makes the later reading a
    /// duplicate, which is counted and dropped. Accepted readings are synced
    /// to disk before this returns.
    pub fn append(&self, readings: &[Reading]) -> Result<AppendReport, TimeseriesError> {
        let registry = self.registry();
        let mut outcomes: Vec<Option<AppendOutcome>> = Vec::with_capacity(readings.len());
        let mut groups: BTreeMap<&SensorId, Vec<(usize, Point)>> = BTreeMap::new();
        for (i, r) in readings.iter().enumerate() {
            match registry.sensor(r.sensor_id()) {
                Err(e) => outcomes.push(Some(AppendOutcome::Rejected(e))),
                Ok(s) if s.kind != r.kind() => {
                    outcomes.push(Some(AppendOutcome::Rejected(TimeseriesError::KindMismatch {
                        sensor: s.sensor_id.clone(),
                        expected: s.kind,
                        got: r.kind(),
                    })))
                }
                Ok(_) => {
                    outcomes.push(None);
                    groups.entry(r.sensor_id()).or_default().push((i, r.point()));
                }
            }
        }

        let slots = self.slots.read().expect("slots lock");
        for (sensor, mut batch) in groups {
            let slot = slots.get(sensor).expect("registered sensors have slots").clone();
            // Stable on input index: the first occurrence of a key wins.
            batch.sort_by_key(|(i, p)| (p.at, *i));
            let mut inner = slot.inner.lock().expect("slot lock");
            let mut fresh: Vec<Point> = Vec::with_capacity(batch.len());
            for (i, p) in batch {
                let dup = fresh.last().is_some_and(|q| q.at == p.at)
                    || inner.points.binary_search_by_key(&p.at, |q| q.at).is_ok();
                outcomes[i] = Some(if dup {
                    AppendOutcome::Duplicate
                } else {
                    fresh.push(p);
                    AppendOutcome::Accepted
                });
            }
            if fresh.is_empty() {
                continue;
            }
            if let Some(log) = inner.log.as_mut() {
                for p in &fresh {
                    writeln!(log, "{},{}", format_ts(p.at), p.value)?;
                }
                log.flush()?;
                log.get_ref().sync_data()?;
            }
            let points = Arc::make_mut(&mut inner.points);
            if points.last().is_none_or(|last| last.at < fresh[0].at) {
                points.extend(fresh);
            } else {
                let old = std::mem::take(points);
                *points = merge_sorted(old, fresh);
            }
        }
        Ok(AppendReport { outcomes: outcomes.into_iter().map(|o| o.expect("every reading has an outcome")).collect() })
    }

    pub fn snapshot(&self) -> Snapshot {
        let registry = self.registry();
        let slots = self.slots.read().expect("slots lock");
        let series =
            slots.iter().map(|(id, slot)| (id.clone(), slot.inner.lock().expect("slot lock").points.clone())).collect();
        Snapshot { registry, series }
    }

    /// Most recent point of one sensor.
    pub fn latest(&self, sensor: &SensorId) -> Option<Point> {
        let slots = self.slots.read().expect("slots lock");
        let slot = slots.get(sensor)?;
        let inner = slot.inner.lock().expect("slot lock");
        inner.points.last().copied()
    }
}

fn merge_sorted(a: Vec<Point>, b: Vec<Point>) -> Vec<Point> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut a, mut b) = (a.into_iter().peekable(), b.into_iter().peekable());
    loop {
        let take_a = match (a.peek(), b.peek()) {
            (Some(x), Some(y)) => x.at <= y.at,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        out.push(if take_a { a.next() } else { b.next() }.expect("peeked"));
    }
    out
}
