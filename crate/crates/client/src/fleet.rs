//! Many clients at once, each on its own thread.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use cardio_core::ClientId;
use cardio_enclave::DataOwner;

use crate::error::ClientError;
use crate::gateway::GatewayConfig;
use crate::sensor::{SensorConfig, SensorMode, DEFAULT_JITTER_PCT, DEFAULT_START_MS};
use crate::service::{ClientReport, ClientService};

#[derive(Debug, Clone, PartialEq)]
pub struct ClientSpec {
    pub sensor: SensorConfig,
    pub gateway: GatewayConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetConfig {
    pub clients: Vec<ClientSpec>,
    pub duration: Duration,
}

impl FleetConfig {
    /// `n` physiologic clients `<prefix>-000…` with heart rates spread over
    /// 60..=180 bpm and distinct seeds, all on the same directories.
    pub fn physiologic(
        n: usize,
        prefix: &str,
        gateway: &GatewayConfig,
        duration: Duration,
        seed: u64,
    ) -> Self {
        let clients = (0..n)
            .map(|i| {
                let id = ClientId::new(format!("{prefix}-{i:03}")).expect("valid generated id");
                let hr = 60.0 + 120.0 * (i as f64) / (n.max(2) - 1) as f64;
                ClientSpec {
                    sensor: SensorConfig::physiologic(id, hr, seed.wrapping_add(i as u64)),
                    gateway: gateway.clone(),
                }
            })
            .collect();
        FleetConfig { clients, duration }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        let mut ids = HashSet::new();
        for c in &self.clients {
            if !ids.insert(&c.sensor.client_id) {
                return Err(ClientError::InvalidFleet(format!(
                    "duplicate client id {}",
                    c.sensor.client_id
                )));
            }
            c.sensor.validate()?;
            c.gateway.validate()?;
        }
        if self.duration.is_zero() {
            return Err(ClientError::InvalidFleet(
                "duration must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ClientError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ClientError::InvalidFleet(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Line-oriented `key = value`. Keys before the first `[client_id]`
    /// section are defaults for every client; keys inside a section override
    /// them for that client. `#` starts a comment.
    ///
    /// Keys: `duration`, `deposit_dir`, `fetch_dir`, `batch_period`,
    /// `fetch_period`, `mode` (`physiologic` or `rate`), `hr_bpm`, `s_rate`,
    /// `seed`, `jitter_pct`, `start_ms`.
    pub fn parse(text: &str) -> Result<Self, ClientError> {
        let bad = |m: String| ClientError::InvalidFleet(m);
        let mut defaults: BTreeMap<String, String> = BTreeMap::new();
        let mut sections: Vec<(String, BTreeMap<String, String>)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(id) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                sections.push((id.trim().to_string(), BTreeMap::new()));
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected key=value", n + 1)))?;
            let map = match sections.last_mut() {
                Some((_, m)) => m,
                None => &mut defaults,
            };
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let duration = secs(
            defaults
                .get("duration")
                .ok_or_else(|| bad("missing duration".into()))?,
        )?;
        let clients = sections
            .into_iter()
            .map(|(id, overrides)| {
                let mut kv = defaults.clone();
                kv.extend(overrides);
                client_spec(&id, &kv)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let config = FleetConfig { clients, duration };
        config.validate()?;
        Ok(config)
    }
}

fn secs(v: &str) -> Result<Duration, ClientError> {
    let s: f64 = v
        .parse()
        .map_err(|_| ClientError::InvalidFleet(format!("bad seconds value {v:?}")))?;
    if !(s.is_finite() && s > 0.0) {
        return Err(ClientError::InvalidFleet(format!(
            "seconds must be positive, got {v}"
        )));
    }
    Ok(Duration::from_secs_f64(s))
}

fn client_spec(id: &str, kv: &BTreeMap<String, String>) -> Result<ClientSpec, ClientError> {
    let bad = |m: String| ClientError::InvalidFleet(format!("[{id}] {m}"));
    let num = |k: &str| -> Result<Option<f64>, ClientError> {
        kv.get(k)
            .map(|v| v.parse::<f64>().map_err(|_| bad(format!("bad {k} {v:?}"))))
            .transpose()
    };
    let client_id = ClientId::new(id).map_err(|e| bad(e.to_string()))?;
    let mode = match kv.get("mode").map(String::as_str).unwrap_or("physiologic") {
        "physiologic" => SensorMode::Physiologic {
            hr_bpm: num("hr_bpm")?.ok_or_else(|| bad("missing hr_bpm".into()))?,
        },
        "rate" | "rate_driven" => SensorMode::RateDriven {
            s_rate: num("s_rate")?.ok_or_else(|| bad("missing s_rate".into()))?,
        },
        other => return Err(bad(format!("unknown mode {other:?}"))),
    };
    let seed = kv
        .get("seed")
        .map(|v| v.parse::<u64>().map_err(|_| bad(format!("bad seed {v:?}"))))
        .transpose()?;
    let start_ms = kv
        .get("start_ms")
        .map(|v| {
            v.parse::<u64>()
                .map_err(|_| bad(format!("bad start_ms {v:?}")))
        })
        .transpose()?;
    let dir = |k: &str| {
        kv.get(k)
            .map(PathBuf::from)
            .ok_or_else(|| bad(format!("missing {k}")))
    };
    let mut gateway = GatewayConfig::new(dir("deposit_dir")?, dir("fetch_dir")?);
    if let Some(v) = kv.get("batch_period") {
        gateway.batch_period = secs(v)?;
    }
    if let Some(v) = kv.get("fetch_period") {
        gateway.fetch_period = secs(v)?;
    }
    let sensor = SensorConfig {
        client_id,
        mode,
        seed: seed.unwrap_or(0),
        jitter_pct: num("jitter_pct")?.unwrap_or(DEFAULT_JITTER_PCT),
        start_ms: start_ms.unwrap_or(DEFAULT_START_MS),
    };
    Ok(ClientSpec { sensor, gateway })
}

/// How client loops advance time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FleetTiming {
    /// Tick every `step` without sleeping.
    Simulated { step: Duration },
    /// Tick every `step` of wall-clock time.
    RealTime { step: Duration },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FleetReport {
    pub clients: Vec<ClientReport>,
}

impl FleetReport {
    pub fn deposit_names(&self) -> Vec<String> {
        self.clients
            .iter()
            .flat_map(|c| c.deposits.iter())
            .map(|d| {
                d.file
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default()
            })
            .collect()
    }

    /// `(client, files deposited, results fetched)` per client.
    pub fn reconcile(&self) -> Vec<(String, usize, usize)> {
        self.clients
            .iter()
            .map(|c| (c.client_id.clone(), c.deposits.len(), c.results.len()))
            .collect()
    }

    pub fn errors(&self) -> usize {
        self.clients.iter().map(|c| c.errors.len()).sum()
    }
}

/// Runs every client concurrently for the fleet duration. A client that
/// fails to start is reported with the error; the others run on.
pub fn run_fleet(
    config: &FleetConfig,
    timing: FleetTiming,
    owner: Option<Arc<DataOwner>>,
) -> Result<FleetReport, ClientError> {
    config.validate()?;
    let step = match timing {
        FleetTiming::Simulated { step } | FleetTiming::RealTime { step } => step,
    };
    if step.is_zero() {
        return Err(ClientError::InvalidFleet(
            "tick step must be positive".into(),
        ));
    }
    let clients = std::thread::scope(|s| {
        let handles: Vec<_> = config
            .clients
            .iter()
            .map(|spec| {
                let owner = owner.clone();
                s.spawn(move || {
                    let mut svc = match ClientService::new(
                        &spec.sensor,
                        spec.gateway.clone(),
                        config.duration,
                        owner,
                    ) {
                        Ok(svc) => svc,
                        Err(e) => {
                            return ClientReport {
                                client_id: spec.sensor.client_id.to_string(),
                                errors: vec![e.to_string()],
                                ..ClientReport::default()
                            }
                        }
                    };
                    let started = Instant::now();
                    let mut now = step;
                    while now <= config.duration {
                        if let FleetTiming::RealTime { .. } = timing {
                            if let Some(wait) = now.checked_sub(started.elapsed()) {
                                std::thread::sleep(wait);
                            }
                        }
                        svc.tick(now);
                        now += step;
                    }
                    svc.finish()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("client thread panicked"))
            .collect()
    });
    Ok(FleetReport { clients })
}
