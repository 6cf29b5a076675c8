use std::fs;
use std::io::{self, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use ecoschool::ingest::{builtin, SimScenario};
use ecoschool::methodology::{AnomalyDecl, BuildingProfile, DaySet};
use ecoschool::service::{
    http, render_json, text, BaselineRequest, Config, ContrastQuery, EnergyQuery, Engine, EvaluateRequest,
    ProgressQuery, ServiceError, WasteQuery, WeekSpec,
};
use ecoschool::timeseries::{BuildingId, Resolution, Site};
use ecoschool::waste::LuxAggregation;

const DEFAULT_STORE: &str = "ecoschool-data";
const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "ecoschool", version, about = "Energy-savings analytics for instrumented school buildings")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "ECOSCHOOL_CONFIG")]
    config: Option<PathBuf>,
    /// Store directory.
    #[arg(long, global = true, env = "STORE_PATH")]
    store: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Building to analyze; may be omitted when only one is registered.
    #[arg(long, short, global = true)]
    building: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Register buildings and sensors from a JSON site document.
    Register { file: PathBuf },
    /// Register a building profile from a JSON document.
    Profile { file: PathBuf },
    /// Ingest a CSV reading stream (`-` for stdin).
    Ingest { file: PathBuf },
    /// Generate a scenario's readings: a built-in name or a JSON scenario file.
    Simulate {
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the CSV stream here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Register the scenario's site and ingest the stream into the store.
        #[arg(long)]
        ingest: bool,
    },
    /// Print stored readings as CSV.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List registered buildings.
    Buildings,
    /// Metered energy per bucket.
    Energy {
        #[arg(long)]
        resolution: Option<Resolution>,
        #[arg(long)]
        from: Option<NaiveDate>,
        #[arg(long)]
        to: Option<NaiveDate>,
    },
    /// Compute the baseline and make it the building's active one.
    Baseline {
        /// Baseline week, e.g. `2018-W44` or `w44`; alternative to --from/--to.
        #[arg(long, conflicts_with_all = ["from", "to"])]
        week: Option<String>,
        #[arg(long, requires = "to")]
        from: Option<NaiveDate>,
        #[arg(long, requires = "from")]
        to: Option<NaiveDate>,
        /// `DATE=DONOR,DONOR,...`; overrides the calendar's anomalous days.
        #[arg(long = "anomaly")]
        anomalies: Vec<String>,
        #[arg(long)]
        day_set: Option<DaySet>,
    },
    /// Mean and flexible consumption of one week against the active baseline.
    AnalyzeWeek {
        week: String,
        #[arg(long)]
        day_set: Option<DaySet>,
    },
    /// Reduction of flexible consumption between two weeks.
    Evaluate {
        #[arg(long)]
        comparison: String,
        #[arg(long)]
        saving: String,
        #[arg(long)]
        notes: Option<String>,
    },
    /// Lights left on while daylight suffices.
    DetectWaste {
        /// Lux threshold above which lighting is considered unnecessary.
        #[arg(long)]
        threshold: f64,
        #[arg(long)]
        day: Option<NaiveDate>,
        #[arg(long)]
        zone: Option<String>,
        #[arg(long)]
        aggregation: Option<LuxAggregation>,
        #[arg(long)]
        resolution: Option<Resolution>,
        #[arg(long)]
        lookback_days: Option<u32>,
    },
    /// Weekend against weekday consumption.
    Contrast {
        #[arg(long)]
        from: Option<NaiveDate>,
        #[arg(long)]
        to: Option<NaiveDate>,
        #[arg(long)]
        alert_ratio: Option<f64>,
    },
    /// Flexible consumption of the weeks after the comparison week.
    Progress {
        #[arg(long, value_delimiter = ',')]
        weeks: Option<Vec<String>>,
        /// `WEEK=TAG`, e.g. `2018-W51=team-a`.
        #[arg(long = "group")]
        groups: Vec<String>,
    },
    /// Latest power and today's consumption against the baseline.
    Live,
    /// Every analysis for a building in one document.
    Report,
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "PORT")]
        port: Option<u16>,
        #[arg(long)]
        bind: Option<String>,
        /// Bearer token required by POST /v1/readings.
        #[arg(long, env = "INGEST_TOKEN", hide_env_values = true)]
        token: Option<String>,
        /// Static files served under `/`.
        #[arg(long)]
        dashboard_dir: Option<PathBuf>,
    },
}

struct Ctx {
    engine: Engine,
    config: Config,
    format: Format,
    building: Option<String>,
}

impl Ctx {
    fn building(&self) -> Result<BuildingId, ServiceError> {
        self.engine.resolve_building(self.building.as_deref())
    }

    fn emit<T: Serialize>(&self, value: &T, render: impl Fn(&T) -> String) -> io::Result<()> {
        let out = match self.format {
            Format::Json => render_json(value),
            Format::Text => render(value),
        };
        io::stdout().lock().write_all(out.as_bytes())
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ServiceError> {
    let text = fs::read_to_string(path).map_err(|e| ServiceError::io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| ServiceError::validation("InvalidDocument", format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), ServiceError> {
    fs::write(path, contents).map_err(|e| ServiceError::io(format!("{}: {e}", path.display())))
}

fn parse_anomaly(s: &str) -> Result<AnomalyDecl, ServiceError> {
    let bad = |m: String| ServiceError::validation("InvalidAnomaly", m);
    let (date, donors) = s.split_once('=').ok_or_else(|| bad(format!("expected DATE=DONOR,..., got {s:?}")))?;
    let date = date.trim().parse().map_err(|e| bad(format!("{date}: {e}")))?;
    let donors =
        donors.split(',').map(|d| d.trim().parse().map_err(|e| bad(format!("{d}: {e}")))).collect::<Result<_, _>>()?;
    Ok(AnomalyDecl { date, donors, reason: String::new() })
}

fn scenario(name: &str, seed: Option<u64>) -> Result<SimScenario, ServiceError> {
    let path = Path::new(name);
    let mut s = if path.exists() { read_json(path)? } else { builtin(name)? };
    if let Some(seed) = seed {
        s.seed = seed;
    }
    Ok(s)
}

/// Parses, runs, and maps the outcome to an exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let format = cli.format;
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            match format {
                Format::Json => eprint!("{}", e.body()),
                Format::Text => eprintln!("error: {}", e.message),
            }
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<i32, ServiceError> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let root = cli.store.clone().or_else(|| config.store_path.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_STORE));
    let engine = Engine::open(&root)?.with_timezones(config.timezones.clone());
    let ctx = Ctx { engine, config, format: cli.format, building: cli.building };
    if let Command::Serve { port, bind, token, dashboard_dir } = cli.command {
        return serve(ctx, port, bind, token, dashboard_dir);
    }
    dispatch(&ctx, cli.command)
}

fn dispatch(ctx: &Ctx, command: Command) -> Result<i32, ServiceError> {
    let e = &ctx.engine;
    match command {
        Command::Register { file } => {
            let site: Site = read_json(&file)?;
            ctx.emit(&e.register_site(site)?, text::register)?;
        }
        Command::Profile { file } => {
            let profile: BuildingProfile = read_json(&file)?;
            ctx.emit(&e.register_profile(profile)?, |p| {
                format!("registered profile version {} for {}\n", p.id.version, p.id.building_id)
            })?;
        }
        Command::Ingest { file } => {
            let summary = if file.as_os_str() == "-" {
                e.ingest(io::stdin().lock())?
            } else {
                let f = fs::File::open(&file).map_err(|err| ServiceError::io(format!("{}: {err}", file.display())))?;
                e.ingest(BufReader::new(f))?
            };
            ctx.emit(&summary, text::ingest)?;
            if summary.aborted.is_some() {
                return Ok(1);
            }
        }
        Command::Simulate { scenario: name, seed, out, ingest } => {
            let s = scenario(&name, seed)?;
            let (doc, summary) = e.simulate(&s, ingest)?;
            match &out {
                Some(path) => write_file(path, &doc)?,
                None if !ingest => {
                    io::stdout().lock().write_all(doc.as_bytes())?;
                    return Ok(0);
                }
                None => {}
            }
            ctx.emit(&summary, text::simulate)?;
        }
        Command::Export { out } => {
            let id = ctx.building.as_deref().map(|b| e.resolve_building(Some(b))).transpose()?;
            let doc = e.export(id.as_ref())?;
            match out {
                Some(path) => write_file(&path, &doc)?,
                None => io::stdout().lock().write_all(doc.as_bytes())?,
            }
        }
        Command::Buildings => ctx.emit(&e.buildings(), |b| text::buildings(b))?,
        Command::Energy { resolution, from, to } => {
            let q = EnergyQuery { resolution, from, to };
            ctx.emit(&e.energy(&ctx.building()?, &q)?, text::energy)?;
        }
        Command::Baseline { week, from, to, anomalies, day_set } => {
            let id = ctx.building()?;
            let (from, to) = match (week, from, to) {
                (Some(w), _, _) => {
                    let range = e.parse_week(&id, &w)?.range();
                    (range.start, range.end)
                }
                (None, Some(f), Some(t)) => (f, t),
                _ => return Err(ServiceError::validation("InvalidPeriod", "give --week or both --from and --to")),
            };
            let anomalies = if anomalies.is_empty() {
                None
            } else {
                Some(anomalies.iter().map(|a| parse_anomaly(a)).collect::<Result<_, _>>()?)
            };
            let req = BaselineRequest { from, to, anomalies, day_set: day_set.unwrap_or_default() };
            ctx.emit(&e.baseline(&id, req)?, text::baseline)?;
        }
        Command::AnalyzeWeek { week, day_set } => {
            ctx.emit(&e.week_analysis(&ctx.building()?, &week, day_set)?, text::week)?;
        }
        Command::Evaluate { comparison, saving, notes } => {
            let req = EvaluateRequest { comparison: WeekSpec::Id(comparison), saving: WeekSpec::Id(saving), notes };
            ctx.emit(&e.evaluate(&ctx.building()?, req)?, text::intervention)?;
        }
        Command::DetectWaste { threshold, day, zone, aggregation, resolution, lookback_days } => {
            let q = WasteQuery { day, threshold, zone, aggregation, resolution, lookback_days };
            ctx.emit(&e.waste(&ctx.building()?, &q)?, text::waste)?;
        }
        Command::Contrast { from, to, alert_ratio } => {
            let q = ContrastQuery { from, to, alert_ratio };
            ctx.emit(&e.contrast(&ctx.building()?, &q)?, text::contrast)?;
        }
        Command::Progress { weeks, groups } => {
            let mut q = ProgressQuery { weeks, ..Default::default() };
            for g in &groups {
                let (week, tag) = g
                    .split_once('=')
                    .ok_or_else(|| ServiceError::validation("InvalidGroup", format!("expected WEEK=TAG, got {g:?}")))?;
                q.groups.insert(week.to_owned(), tag.to_owned());
            }
            ctx.emit(&e.progress(&ctx.building()?, &q)?, text::progress)?;
        }
        Command::Live => ctx.emit(&e.live(&ctx.building()?)?, text::live)?,
        Command::Report => ctx.emit(&e.report(&ctx.building()?)?, text::report)?,
        Command::Serve { .. } => unreachable!("handled in run"),
    }
    Ok(0)
}

fn serve(
    ctx: Ctx,
    port: Option<u16>,
    bind: Option<String>,
    token: Option<String>,
    dashboard_dir: Option<PathBuf>,
) -> Result<i32, ServiceError> {
    let port = port.or(ctx.config.port).unwrap_or(DEFAULT_PORT);
    let bind = bind.or_else(|| ctx.config.bind.clone()).unwrap_or_else(|| "127.0.0.1".into());
    let addr: SocketAddr = format!("{bind}:{port}")
        .parse()
        .map_err(|e| ServiceError::validation("InvalidAddress", format!("{bind}:{port}: {e}")))?;
    let token = token.or_else(|| ctx.config.token.clone());
    if token.as_deref().is_none_or(str::is_empty) {
        tracing::warn!("no ingest token configured; POST /v1/readings will refuse every request");
    }
    let dashboard_dir = dashboard_dir.or_else(|| ctx.config.dashboard_dir.clone());
    let router = http::router(Arc::new(ctx.engine), token, dashboard_dir);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(http::serve(router, addr))?;
    Ok(0)
}
