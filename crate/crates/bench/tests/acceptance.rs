//! Acceptance suite for the whole workspace.
//!
//! Prints one PASS/FAIL line per criterion and exits nonzero if any fails.
//! An optional argument selects criteria whose name contains it.

use std::collections::{BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use cardio_bench::reference::{
    reference_report, REFERENCE_ENCLAVE_OVER_SPLIT, REFERENCE_FACTORS, REFERENCE_VARIANCE_THRESHOLD,
};
use cardio_bench::{
    compare_modes, gen_workload, read_report, run_suite, write_report, SuiteConfig, WorkloadKind,
    WorkloadSpec, DEFAULT_CV_THRESHOLD,
};
use cardio_client::{
    gateway_flush, generate_rr, run_fleet, ClientService, FleetConfig, FleetTiming, GatewayConfig,
    SensorConfig,
};
use cardio_core::{
    encode_records, hrv_bands, sdnn, AlgorithmKind, BandPowers, ClientId, ExecutionMode, RrMillis,
    RrSample, RrSeries, RECORD_LEN,
};
use cardio_enclave::{
    open, AttestationReport, AttestationRoot, ChannelAad, CipherEnvelope, DataOwner, Direction,
    RuntimeState, SessionKey, TrustedRuntime, Verifier,
};
use cardio_engine::{
    run_streaming, scan_source, ByteTap, Engine, JobSpec, StreamOptions, StreamSourceConfig,
};
use cardio_metrics::{http_get, MetricsServer, RunMeta, StatsRegistry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const T0: u64 = 1_546_300_800_000;
const SEED: u64 = 0x5eed_2019;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

struct Criterion {
    id: u32,
    name: &'static str,
    run: fn() -> Outcome,
}

const CRITERIA: [Criterion; 11] = [
    Criterion {
        id: 1,
        name: "sdnn_matches_two_pass_oracle",
        run: sdnn_oracle,
    },
    Criterion {
        id: 2,
        name: "single_tones_land_in_their_band",
        run: spectral_tones,
    },
    Criterion {
        id: 3,
        name: "modes_agree_bitwise",
        run: cross_mode,
    },
    Criterion {
        id: 4,
        name: "host_sees_no_plaintext",
        run: confidentiality,
    },
    Criterion {
        id: 5,
        name: "every_bit_flip_is_rejected",
        run: integrity,
    },
    Criterion {
        id: 6,
        name: "five_minute_stream_shape",
        run: streaming_shape,
    },
    Criterion {
        id: 7,
        name: "gateway_byte_budget",
        run: byte_budget,
    },
    Criterion {
        id: 8,
        name: "workload_lattice_sizes",
        run: workload_matrix,
    },
    Criterion {
        id: 9,
        name: "enclave_overhead_direction",
        run: overhead_direction,
    },
    Criterion {
        id: 10,
        name: "reference_ratio_table",
        run: fixture_pipeline,
    },
    Criterion {
        id: 11,
        name: "attestation_call_order",
        run: state_machine,
    },
];

fn main() {
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    let mut ran = 0;
    for c in CRITERIA
        .iter()
        .filter(|c| filter.as_deref().is_none_or(|f| c.name.contains(f)))
    {
        ran += 1;
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS [{:>2}] {} ({secs:.1}s): {detail}", c.id, c.name),
            Err(why) => {
                failed += 1;
                println!("FAIL [{:>2}] {} ({secs:.1}s): {why}", c.id, c.name);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn client(name: &str) -> ClientId {
    ClientId::new(name).unwrap()
}

fn fresh_source(root: &Path, name: &str) -> StreamSourceConfig {
    let source = StreamSourceConfig::new(root.join(name).join("in"), root.join(name).join("out"));
    std::fs::create_dir_all(&source.ingest_dir).unwrap();
    std::fs::create_dir_all(&source.result_dir).unwrap();
    source
}

fn start(
    kind: AlgorithmKind,
    mode: ExecutionMode,
    source: &StreamSourceConfig,
    tap: Arc<ByteTap>,
) -> (Engine, Option<DataOwner>) {
    let job = JobSpec {
        algorithm: kind.into(),
        mode,
        source: source.clone(),
    };
    if mode == ExecutionMode::SplitEncrypted {
        let mut owner = DataOwner::for_algorithm(kind.into());
        let engine = Engine::start_with_tap(job, Some(&mut owner), tap).unwrap();
        (engine, Some(owner))
    } else {
        (Engine::start_with_tap(job, None, tap).unwrap(), None)
    }
}

fn visible_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| !n.starts_with('.'))
        .collect();
    names.sort();
    names
}

/// Result body as its client reads it.
fn read_body(path: &Path, owner: Option<&DataOwner>) -> Result<Vec<u8>, String> {
    let bytes = std::fs::read(path).map_err(err)?;
    match owner {
        None => Ok(bytes),
        Some(o) => {
            let env = CipherEnvelope::from_bytes(&bytes).map_err(err)?;
            let (_, ok, body) = o.open_reply(&env).map_err(err)?;
            ensure(ok, || format!("{} holds an error reply", path.display()))?;
            Ok(body)
        }
    }
}

// 1 ---------------------------------------------------------------------

fn two_pass_sd(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

fn sdnn_oracle() -> Outcome {
    const SERIES: usize = 1000;
    const MAX_N: usize = 100_000;
    const REL_TOL: f64 = 1e-9;
    const BUDGET: Duration = Duration::from_secs(60);
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut samples_total = 0;
    for i in 0..SERIES {
        // Log-uniform lengths; the first series has the maximum length.
        let n = if i == 0 {
            MAX_N
        } else {
            (2f64 * (MAX_N as f64 / 2.0).powf(rng.gen::<f64>())) as usize
        };
        let mut t = T0;
        let samples: Vec<RrSample> = (0..n)
            .map(|_| {
                let rr = rng.gen_range(300_000..=2_000_000u32);
                t += u64::from(rr / 1000);
                RrSample::new(t, RrMillis::from_thousandths(rr))
            })
            .collect();
        let values: Vec<f64> = samples
            .iter()
            .map(|s| f64::from(s.rr.thousandths()) / 1000.0)
            .collect();
        let series = RrSeries::new(client("oracle"), samples).map_err(err)?;
        let got: f64 = sdnn(&series).map_err(err)?;
        let want = two_pass_sd(&values);
        let rel = (got - want).abs() / want;
        worst = worst.max(rel);
        samples_total += n;
        ensure(rel <= REL_TOL, || {
            format!("series {i} (n={n}): {got} vs oracle {want}, rel {rel:e}")
        })?;
    }
    let elapsed = started.elapsed();
    ensure(elapsed < BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{SERIES} series, {samples_total} samples, worst rel err {worst:.1e} <= {REL_TOL:e}, {elapsed:.1?}"))
}

// 2 ---------------------------------------------------------------------

fn spectral_tones() -> Outcome {
    const SERIES: usize = 50;
    const REQUIRED: usize = 48;
    const MIN_FRACTION: f64 = 0.9;
    // Long enough that leakage only matters within a few mHz of the LF/HF edge.
    const BEATS: usize = 1024;
    const DEPTH_MS: f64 = 20.0;
    const BUDGET: Duration = Duration::from_secs(60);
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut correct = 0;
    let mut misses = Vec::new();
    for _ in 0..SERIES {
        let f_hz: f64 = rng.gen_range(0.05..0.38);
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let mut elapsed_ms = 0.0f64;
        let samples: Vec<RrSample> = (0..BEATS)
            .map(|_| {
                let rr = 800.0
                    + DEPTH_MS * (std::f64::consts::TAU * f_hz * elapsed_ms / 1000.0 + phase).sin();
                elapsed_ms += rr;
                RrSample::new(T0 + elapsed_ms as u64, RrMillis::from_millis_f64(rr))
            })
            .collect();
        let bands: BandPowers =
            hrv_bands(&RrSeries::new(client("tone"), samples).map_err(err)?).map_err(err)?;
        let total = bands.lf_power + bands.hf_power;
        let share = if f_hz < 0.15 {
            bands.lf_power
        } else {
            bands.hf_power
        } / total;
        if share >= MIN_FRACTION {
            correct += 1;
        } else {
            misses.push(format!("{f_hz:.4} Hz ({:.0}%)", share * 100.0));
        }
    }
    let elapsed = started.elapsed();
    ensure(correct >= REQUIRED, || {
        format!("{correct}/{SERIES} correct; misses {misses:?}")
    })?;
    ensure(elapsed < BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{correct}/{SERIES} with >= 90% in the right band (need {REQUIRED}); misses {misses:?}; {elapsed:.1?}"))
}

// 3 ---------------------------------------------------------------------

fn cross_mode() -> Outcome {
    const BATCHES: u64 = 100;
    let tmp = tempfile::tempdir().map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let corpus: Vec<(ClientId, Vec<RrSample>)> = (0..BATCHES)
        .map(|_| {
            let c = client(&format!("p{}", rng.gen_range(0..5)));
            let mut t = T0 + rng.gen_range(0..1_000_000u64);
            let n = rng.gen_range(40..400);
            let samples = (0..n)
                .map(|_| {
                    let rr = rng.gen_range(450_000..1_300_000u32);
                    t += u64::from(rr / 1000);
                    RrSample::new(t, RrMillis::from_thousandths(rr))
                })
                .collect();
            (c, samples)
        })
        .collect();

    let mut compared = 0;
    for kind in AlgorithmKind::ALL {
        let mut bodies: Vec<Vec<Vec<u8>>> = Vec::new();
        for mode in ExecutionMode::ALL {
            let source = fresh_source(tmp.path(), &format!("{kind}-{mode}"));
            let (engine, owner) = start(kind, mode, &source, Arc::new(ByteTap::disabled()));
            let mut sealer = owner.as_ref().and_then(DataOwner::issue_sealer);
            let mut seen = HashSet::new();
            let mut out = Vec::with_capacity(BATCHES as usize);
            for (i, (c, samples)) in corpus.iter().enumerate() {
                gateway_flush(
                    c,
                    samples,
                    &GatewayConfig::new(&source.ingest_dir, &source.result_dir),
                    i as u64,
                    sealer.as_mut(),
                )
                .map_err(err)?;
                let files = scan_source(&source, &mut seen).map_err(err)?;
                let formed = engine.former().form(&files, i as u64, 0);
                ensure(
                    formed.batches.len() == 1 && formed.quarantined.is_empty(),
                    || format!("{kind}/{mode} batch {i} not formed"),
                )?;
                let outcome = engine.process_batch(&formed.batches[0]);
                let file = outcome.result_file.ok_or_else(|| {
                    format!("{kind}/{mode} batch {i} failed: {:?}", outcome.error)
                })?;
                out.push(read_body(&file, owner.as_ref())?);
            }
            bodies.push(out);
        }
        for i in 0..BATCHES as usize {
            ensure(
                bodies[0][i] == bodies[1][i] && bodies[1][i] == bodies[2][i],
                || {
                    format!(
                        "{kind} batch {i} differs: {:?}",
                        bodies
                            .iter()
                            .map(|b| String::from_utf8_lossy(&b[i]).into_owned())
                            .collect::<Vec<_>>()
                    )
                },
            )?;
            compared += 1;
        }
    }
    Ok(format!(
        "{compared} (batch, algorithm) results identical across baseline, split and enclave"
    ))
}

// 4 ---------------------------------------------------------------------

/// Every 8-byte window of every client's plaintext record stream.
fn plaintext_needles(fleet: &FleetConfig) -> Result<(HashSet<[u8; 8]>, usize), String> {
    let mut needles = HashSet::new();
    let mut records = 0;
    for spec in &fleet.clients {
        let series = generate_rr(&spec.sensor, fleet.duration).map_err(err)?;
        records += series.len();
        let bytes = encode_records(series.samples()).map_err(err)?;
        needles.extend(bytes.windows(8).map(|w| <[u8; 8]>::try_from(w).unwrap()));
    }
    Ok((needles, records))
}

/// Runs a sealed-or-clear fleet through a five-minute virtual-time stream
/// with the byte tap on. Returns the tap and the records processed.
fn tapped_run(
    mode: ExecutionMode,
    root: &Path,
) -> Result<(Arc<ByteTap>, FleetConfig, u64), String> {
    let duration = Duration::from_secs(300);
    let source = fresh_source(root, mode.short_name());
    let gateway = GatewayConfig::new(&source.ingest_dir, &source.result_dir);
    let fleet = FleetConfig::physiologic(24, "ward", &gateway, duration, SEED);
    let tap = Arc::new(ByteTap::enabled());
    let (engine, owner) = start(AlgorithmKind::Sdnn, mode, &source, Arc::clone(&tap));
    let owner = owner.map(Arc::new);
    let mut services: Vec<ClientService> = fleet
        .clients
        .iter()
        .map(|c| ClientService::new(&c.sensor, c.gateway.clone(), duration, owner.clone()))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let mut hook = |now: Duration| services.iter_mut().for_each(|s| s.tick(now));
    let report = run_streaming(
        &engine,
        StreamOptions::new(duration)
            .virtual_time()
            .with_hook(&mut hook),
    )
    .map_err(err)?;
    ensure(report.failed_batches() == 0, || {
        format!("{} failed batches", report.failed_batches())
    })?;
    let records = report.stats.iter().map(|s| s.record_count).sum();
    Ok((tap, fleet, records))
}

fn confidentiality() -> Outcome {
    const MIN_RECORDS: u64 = 10_000;
    let tmp = tempfile::tempdir().map_err(err)?;
    let (tap, fleet, records) = tapped_run(ExecutionMode::SplitEncrypted, tmp.path())?;
    let (needles, _) = plaintext_needles(&fleet)?;
    ensure(records >= MIN_RECORDS, || {
        format!("only {records} records processed")
    })?;
    ensure(tap.total_bytes() > records as usize * RECORD_LEN, || {
        format!("tap saw only {} bytes", tap.total_bytes())
    })?;
    let leaks = tap.occurrences(&needles);
    ensure(leaks == 0, || {
        format!("{leaks} plaintext substrings in host-visible buffers")
    })?;

    // The same detector on a clear-channel run must find plaintext.
    let (clear_tap, _, _) = tapped_run(ExecutionMode::SplitPlain, tmp.path())?;
    let clear_hits = clear_tap.occurrences(&needles);
    ensure(clear_hits > 0, || {
        "detector found nothing in the clear-channel control".into()
    })?;
    Ok(format!(
        "{records} records, {} tapped buffers / {} bytes, 0 of {} needles seen (clear control: {clear_hits})",
        tap.buffers().len(),
        tap.total_bytes(),
        needles.len()
    ))
}

// 5 ---------------------------------------------------------------------

fn integrity() -> Outcome {
    const ENVELOPE_LEN: usize = 256;
    let tmp = tempfile::tempdir().map_err(err)?;
    let source = fresh_source(tmp.path(), "integrity");
    let (engine, owner) = start(
        AlgorithmKind::Sdnn,
        ExecutionMode::SplitEncrypted,
        &source,
        Arc::new(ByteTap::disabled()),
    );
    let owner = owner.unwrap();
    let key: SessionKey = owner.session().unwrap().clone();
    let mut sealer = owner.issue_sealer().unwrap();

    // 15-byte id: 48 bytes of framing + 24 of AAD + 8 records = 256.
    let c = client("integrity-check");
    let mut t = T0;
    let samples: Vec<RrSample> = (0..8)
        .map(|i| {
            t += 800 + i;
            RrSample::new(t, RrMillis::from_thousandths(800_000 + i as u32 * 1000))
        })
        .collect();
    let records = encode_records(&samples).map_err(err)?;
    let seal = |sealer: &mut cardio_enclave::Sealer, seq| {
        sealer
            .seal_for(
                &records,
                &ChannelAad::new(c.clone(), seq, Direction::Deposit),
            )
            .unwrap()
            .to_bytes()
    };
    let control = seal(&mut sealer, 0);
    let target = seal(&mut sealer, 1);
    ensure(target.len() == ENVELOPE_LEN, || {
        format!("envelope is {} bytes", target.len())
    })?;

    let mut seen = HashSet::new();
    let mut deliver = |bytes: &[u8], seq: u64, window: u64| {
        let name = format!("{c}_{seq}.csv");
        let part = source.ingest_dir.join(format!("{name}.part"));
        std::fs::write(&part, bytes).unwrap();
        std::fs::rename(&part, source.ingest_dir.join(&name)).unwrap();
        seen.remove(&name);
        let files = scan_source(&source, &mut seen).unwrap();
        let formed = engine.former().form(&files, window, 0);
        let results: Vec<_> = formed
            .batches
            .iter()
            .map(|b| engine.process_batch(b))
            .collect();
        let _ = std::fs::remove_file(source.ingest_dir.join(&name));
        (formed.quarantined.len(), results)
    };

    let (q, results) = deliver(&control, 0, 0);
    ensure(
        q == 0 && results.len() == 1 && results[0].result_file.is_some(),
        || "control deposit was not processed".into(),
    )?;

    let (mut quarantined, mut failed_batches, mut open_failures) = (0, 0, 0);
    for bit in 0..ENVELOPE_LEN * 8 {
        let mut bytes = target.clone();
        bytes[bit / 8] ^= 1 << (bit % 8);
        // Directly under the session key.
        let opened = CipherEnvelope::from_bytes(&bytes).map(|env| open(&env, &key, &env.aad));
        match opened {
            Ok(Ok(_)) => return Err(format!("bit {bit}: corrupted envelope opened")),
            _ => open_failures += 1,
        }
        // Through the engine.
        let (q, results) = deliver(&bytes, 1, 1 + bit as u64);
        quarantined += q;
        for r in &results {
            ensure(r.result_file.is_none() && r.stats.failed, || {
                format!("bit {bit}: batch was not rejected")
            })?;
            failed_batches += 1;
        }
        ensure(q + results.len() == 1, || {
            format!("bit {bit}: deposit neither rejected nor batched")
        })?;
    }
    let emitted = visible_files(&source.result_dir);
    ensure(emitted == [format!("{c}_0.out")], || {
        format!("result files after corruption: {emitted:?}")
    })?;
    Ok(format!(
        "{} flips: {open_failures} fail to open, engine rejected {quarantined} at framing and {failed_batches} in the runtime, 0 results",
        ENVELOPE_LEN * 8
    ))
}

// 6 ---------------------------------------------------------------------

fn streaming_shape() -> Outcome {
    const WINDOWS: usize = 30;
    let tmp = tempfile::tempdir().map_err(err)?;
    let registry = Arc::new(StatsRegistry::new());
    let server = MetricsServer::start("127.0.0.1:0", Arc::clone(&registry)).map_err(err)?;
    let mut details = Vec::new();
    for mode in [ExecutionMode::Baseline, ExecutionMode::SplitEncrypted] {
        let source = fresh_source(tmp.path(), mode.short_name());
        let gateway = GatewayConfig::new(&source.ingest_dir, &source.result_dir);
        let (engine, owner) = start(
            AlgorithmKind::Sdnn,
            mode,
            &source,
            Arc::new(ByteTap::disabled()),
        );
        let mut sealer = owner.as_ref().and_then(DataOwner::issue_sealer);
        let c = client("steady");
        let beats = generate_rr(
            &SensorConfig::physiologic(c.clone(), 72.0, SEED),
            Duration::from_secs(300),
        )
        .map_err(err)?;
        let run_id = format!("shape-{mode}");
        let log = registry.create_run(
            run_id.clone(),
            RunMeta {
                mode,
                algorithm: AlgorithmKind::Sdnn,
                load_label: "steady".into(),
            },
        );
        // The gateway flushes at 5 s, 15 s, ... what it sensed since the last flush.
        let mut seq = 0u64;
        let mut flush_error = None;
        let mut hook = |now: Duration| {
            if now.as_secs() % 10 == 5 && now.subsec_nanos() == 0 {
                let (lo, hi) = (
                    T0 + now.as_millis() as u64 - 10_000,
                    T0 + now.as_millis() as u64,
                );
                let due: Vec<RrSample> = beats
                    .samples()
                    .iter()
                    .filter(|s| s.t_ms > lo && s.t_ms <= hi)
                    .copied()
                    .collect();
                if let Err(e) = gateway_flush(&c, &due, &gateway, seq, sealer.as_mut()) {
                    flush_error.get_or_insert(e);
                }
                seq += 1;
            }
        };
        let report = run_streaming(
            &engine,
            StreamOptions::new(Duration::from_secs(300))
                .virtual_time()
                .with_log(Arc::clone(&log))
                .with_hook(&mut hook),
        )
        .map_err(err)?;
        if let Some(e) = flush_error {
            return Err(e.to_string());
        }
        let files = visible_files(&source.result_dir);
        ensure(files.len() == WINDOWS, || {
            format!("{mode}: {} result files", files.len())
        })?;
        for (w, f) in files
            .iter()
            .filter_map(|f| cardio_engine::parse_result_file_name(f).map(|(_, w)| (w, f)))
        {
            read_body(&source.result_dir.join(f), owner.as_ref())
                .map_err(|e| format!("{mode} window {w}: {e}"))?;
        }
        ensure(report.stats.len() == WINDOWS, || {
            format!("{mode}: {} stats", report.stats.len())
        })?;

        let (status, body) = http_get(
            server.local_addr(),
            &format!("/api/v1/runs/{run_id}/batches"),
        )
        .map_err(err)?;
        ensure(status == 200, || {
            format!("{mode}: batches endpoint returned {status}")
        })?;
        let entries: Vec<serde_json::Value> = serde_json::from_str(&body).map_err(err)?;
        let windows: BTreeSet<u64> = entries
            .iter()
            .filter_map(|e| e["window_id"].as_u64())
            .collect();
        ensure(
            entries.len() == WINDOWS && windows == (0..WINDOWS as u64).collect(),
            || format!("{mode}: {} entries over windows {windows:?}", entries.len()),
        )?;
        let (status, _) = http_get(
            server.local_addr(),
            &format!("/api/v1/runs/{run_id}/summary"),
        )
        .map_err(err)?;
        ensure(status == 200, || {
            format!("{mode}: summary endpoint returned {status}")
        })?;
        details.push(format!(
            "{mode}: {} files, {} entries",
            files.len(),
            entries.len()
        ));
    }
    server.shutdown();
    Ok(details.join("; "))
}

// 7 ---------------------------------------------------------------------

fn byte_budget() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    let duration = Duration::from_secs(300);
    let run = |jitter: f64, name: &str| -> Result<Vec<(f64, Vec<u64>)>, String> {
        let dir = tmp.path().join(name);
        std::fs::create_dir_all(&dir).map_err(err)?;
        let gateway = GatewayConfig::new(&dir, &dir);
        let mut fleet = FleetConfig::physiologic(2, name, &gateway, duration, SEED);
        for spec in &mut fleet.clients {
            spec.sensor.jitter_pct = jitter;
        }
        let report = run_fleet(
            &fleet,
            FleetTiming::Simulated {
                step: Duration::from_secs(1),
            },
            None,
        )
        .map_err(err)?;
        ensure(report.errors() == 0, || {
            format!(
                "fleet errors: {:?}",
                report.clients.iter().map(|c| &c.errors).collect::<Vec<_>>()
            )
        })?;
        Ok(fleet
            .clients
            .iter()
            .zip(&report.clients)
            .map(|(spec, r)| {
                let hr = match spec.sensor.mode {
                    cardio_client::SensorMode::Physiologic { hr_bpm } => hr_bpm,
                    _ => 0.0,
                };
                (hr, r.deposits.iter().map(|d| d.bytes).collect())
            })
            .collect())
    };
    let record = RECORD_LEN as u64;
    let mut details = Vec::new();
    for (hr, batches) in run(0.0, "exact")? {
        let nominal = (hr / 60.0 * 10.0).round() as u64 * record;
        ensure(
            batches.len() == 30 && batches.iter().all(|&b| b == nominal),
            || format!("{hr} bpm without jitter: batches {batches:?}, want 30 x {nominal}"),
        )?;
        details.push(format!("{hr} bpm: 30 x {nominal} B"));
    }
    for (hr, batches) in run(cardio_client::DEFAULT_JITTER_PCT, "jitter")? {
        let per_second = (hr / 60.0).round() as u64 * record;
        let total: u64 = batches.iter().sum();
        let nominal = per_second * duration.as_secs();
        ensure(total.abs_diff(nominal) <= record, || {
            format!("{hr} bpm: {total} B over 300 s, want {nominal} +- {record}")
        })?;
        ensure(
            batches
                .iter()
                .all(|&b| b.abs_diff(per_second * 10) <= record),
            || format!("{hr} bpm: batch sizes {batches:?}"),
        )?;
        details.push(format!(
            "{hr} bpm jittered: {:.2} B/s",
            total as f64 / duration.as_secs_f64()
        ));
    }
    Ok(details.join("; "))
}

// 8 ---------------------------------------------------------------------

fn workload_matrix() -> Outcome {
    const TOLERANCE: f64 = 0.02;
    let tmp = tempfile::tempdir().map_err(err)?;
    let mut worst = 0.0f64;
    let mut distinct = BTreeSet::new();
    let lattice = WorkloadSpec::lattice();
    for spec in &lattice {
        let dir = tmp.path().join(spec.label());
        let files = gen_workload(spec, &dir, SEED, 2).map_err(err)?;
        let expected_files = if spec.kind == WorkloadKind::BatchExecution {
            1
        } else {
            2
        };
        ensure(files.len() == expected_files, || {
            format!("{spec}: {} files", files.len())
        })?;
        for f in &files {
            let size = std::fs::metadata(f).map_err(err)?.len();
            let dev = (size as f64 - spec.target_size as f64) / spec.target_size as f64;
            worst = worst.max(dev.abs());
            ensure(dev.abs() <= TOLERANCE, || {
                format!(
                    "{spec}: {size} B vs {} B ({:+.2}%)",
                    spec.target_size,
                    dev * 100.0
                )
            })?;
        }
        std::fs::remove_dir_all(&dir).map_err(err)?;
        distinct.insert(spec.target_size);
    }
    ensure(distinct.len() == 12, || {
        format!("{} distinct sizes", distinct.len())
    })?;
    Ok(format!(
        "{} workloads over {} tabulated sizes, worst deviation {:.2}%",
        lattice.len(),
        distinct.len(),
        worst * 100.0
    ))
}

// 9 ---------------------------------------------------------------------

fn overhead_direction() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    let spec = WorkloadSpec::new(WorkloadKind::BatchExecution, cardio_bench::Scale::Big, 356)
        .map_err(err)?;
    let config = SuiteConfig {
        modes: vec![ExecutionMode::Baseline, ExecutionMode::SplitEncrypted],
        algorithms: vec![AlgorithmKind::Identity],
        repetitions: 5,
        ..SuiteConfig::new(vec![spec])
    };
    let report = tmp.path().join("report.csv");
    let outcome = run_suite(&config, &report, &StatsRegistry::new()).map_err(err)?;
    ensure(outcome.failed == 0, || {
        format!("failed rows: {:?}", outcome.rows)
    })?;
    let rows = read_report(&report).map_err(err)?;
    let find = |mode: ExecutionMode| rows.iter().find(|r| r.mode == mode.short_name()).cloned();
    let (base, enclave) = (
        find(ExecutionMode::Baseline).unwrap(),
        find(ExecutionMode::SplitEncrypted).unwrap(),
    );
    ensure(base.n_runs == 5 && enclave.n_runs == 5, || {
        "expected 5 runs per row".into()
    })?;
    let (b, e) = (base.mean_ms.unwrap(), enclave.mean_ms.unwrap());
    let factor = enclave.slowdown.ok_or("no slowdown reported")?;
    ensure(e >= b, || {
        format!("enclave mean {e:.1} ms < baseline {b:.1} ms")
    })?;
    ensure(factor > 1.0, || format!("reported factor {factor}"))?;
    Ok(format!(
        "{spec} identity: baseline {b:.1} ms, enclave {e:.1} ms, factor {factor:.2}"
    ))
}

// 10 --------------------------------------------------------------------

fn fixture_pipeline() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    let path = tmp.path().join("reference.csv");
    write_report(&path, &reference_report()).map_err(err)?;
    let comparison =
        compare_modes(&read_report(&path).map_err(err)?, DEFAULT_CV_THRESHOLD).map_err(err)?;
    ensure(comparison.rows.len() == REFERENCE_FACTORS.len(), || {
        format!("{} rows", comparison.rows.len())
    })?;
    for ((row, (workload, split, enclave, _)), ratio) in comparison
        .rows
        .iter()
        .zip(REFERENCE_FACTORS)
        .zip(REFERENCE_ENCLAVE_OVER_SPLIT)
    {
        ensure(row.workload == workload, || {
            format!("row order: {} where {workload} expected", row.workload)
        })?;
        ensure(row.split_slowdown == Some(split), || {
            format!("{workload}: split {:?} != {split}", row.split_slowdown)
        })?;
        ensure(row.enclave_slowdown == Some(enclave), || {
            format!(
                "{workload}: enclave {:?} != {enclave}",
                row.enclave_slowdown
            )
        })?;
        ensure(row.enclave_over_split == Some(ratio), || {
            format!("{workload}: ratio {:?} != {ratio}", row.enclave_over_split)
        })?;
        ensure(
            (2.0..=2.5).contains(&split)
                && (4.0..=5.0).contains(&enclave)
                && (1.5..=2.0).contains(&ratio),
            || format!("{workload}: fixture outside the expected ranges"),
        )?;
    }
    ensure(
        comparison.variance_threshold.as_deref() == Some(REFERENCE_VARIANCE_THRESHOLD),
        || format!("variance threshold at {:?}", comparison.variance_threshold),
    )?;
    let ratios: Vec<String> = comparison
        .rows
        .iter()
        .filter_map(|r| r.enclave_over_split)
        .map(|r| format!("{r}"))
        .collect();
    Ok(format!(
        "6 rows exact, enclave/split [{}], variance threshold {REFERENCE_VARIANCE_THRESHOLD}",
        ratios.join(", ")
    ))
}

// 11 --------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Call {
    Create,
    Attest,
    Establish,
    Ecall,
}

struct Session {
    runtime: Option<TrustedRuntime>,
    verifier: Verifier,
    report: Option<AttestationReport>,
    key: Option<SessionKey>,
}

impl Session {
    fn new() -> Self {
        let expected = TrustedRuntime::create(AlgorithmKind::Sdnn.into()).measurement();
        Session {
            runtime: None,
            verifier: Verifier::new(expected, AttestationRoot::fixture().public()),
            report: None,
            key: None,
        }
    }

    fn call(&mut self, call: Call) -> bool {
        match call {
            Call::Create => {
                if self.runtime.is_some() {
                    return false;
                }
                self.runtime = Some(TrustedRuntime::create(AlgorithmKind::Sdnn.into()));
                true
            }
            Call::Attest => {
                let Some(rt) = self.runtime.as_mut() else {
                    return false;
                };
                let expected = *self.verifier.expected();
                match rt.attest(&expected, self.verifier.challenge()) {
                    Ok(r) => {
                        self.report = Some(r);
                        true
                    }
                    Err(_) => false,
                }
            }
            Call::Establish => {
                let Some(rt) = self.runtime.as_mut() else {
                    return false;
                };
                let Some(report) = self.report.clone() else {
                    // Nothing to answer; offer a share anyway.
                    return rt.establish_session(&stray_report(), &[9; 32]).is_ok();
                };
                let share = match self.verifier.establish_session(&report) {
                    Ok((key, share)) => {
                        self.key = Some(key);
                        share
                    }
                    Err(_) => [9; 32],
                };
                rt.establish_session(&report, &share).is_ok()
            }
            Call::Ecall => {
                let Some(rt) = self.runtime.as_mut() else {
                    return false;
                };
                let key = self.key.clone().unwrap_or_else(stray_key);
                let c = client("order");
                let samples = vec![
                    RrSample::new(T0, RrMillis::from_thousandths(800_000)),
                    RrSample::new(T0 + 810, RrMillis::from_thousandths(810_000)),
                ];
                let series = RrSeries::new(c.clone(), samples).unwrap();
                let header = cardio_core::BatchHeader {
                    client_id: c.clone(),
                    window_id: 0,
                    window_start_ms: 0,
                };
                let task = key
                    .sealer(0)
                    .seal_for(
                        &cardio_core::encode_plain_batch(&header, &series).unwrap(),
                        &ChannelAad::new(c, 0, Direction::Task),
                    )
                    .unwrap();
                match rt.ecall(&task) {
                    Ok(reply) => {
                        let aad = reply.claimed_aad().unwrap();
                        aad.direction == Direction::Reply && open(&reply, &key, &reply.aad).is_ok()
                    }
                    Err(_) => false,
                }
            }
        }
    }
}

fn stray_runtime_session() -> (AttestationReport, SessionKey) {
    let mut rt = TrustedRuntime::create(AlgorithmKind::Sdnn.into());
    let mut v = Verifier::new(rt.measurement(), AttestationRoot::fixture().public());
    let report = rt.attest(&rt.measurement(), v.challenge()).unwrap();
    let (key, _) = v.establish_session(&report).unwrap();
    (report, key)
}

fn stray_report() -> AttestationReport {
    stray_runtime_session().0
}

fn stray_key() -> SessionKey {
    stray_runtime_session().1
}

fn state_machine() -> Outcome {
    const CALLS: [Call; 4] = [Call::Create, Call::Attest, Call::Establish, Call::Ecall];
    const DOCUMENTED: [Call; 5] = [
        Call::Create,
        Call::Attest,
        Call::Establish,
        Call::Ecall,
        Call::Ecall,
    ];
    let mut sequences: Vec<Vec<Call>> = Vec::new();
    let mut frontier: Vec<Vec<Call>> = vec![vec![]];
    for _ in 0..5 {
        frontier = frontier
            .iter()
            .flat_map(|s| CALLS.iter().map(move |&c| [s.as_slice(), &[c]].concat()))
            .collect();
        sequences.extend(frontier.iter().cloned());
    }
    ensure(sequences.len() == 1364, || {
        format!("{} sequences", sequences.len())
    })?;
    let mut accepted = Vec::new();
    for seq in &sequences {
        let mut s = Session::new();
        let mut all = true;
        for &call in seq {
            let before = s.runtime.as_ref().map(TrustedRuntime::state);
            let ok = s.call(call);
            let after = s.runtime.as_ref().map(TrustedRuntime::state);
            if !ok {
                ensure(before == after, || {
                    format!("{seq:?}: refused {call:?} moved {before:?} to {after:?}")
                })?;
            }
            all &= ok;
        }
        if all {
            accepted.push(seq.clone());
        }
    }
    let prefixes: Vec<Vec<Call>> = (1..=DOCUMENTED.len())
        .map(|n| DOCUMENTED[..n].to_vec())
        .collect();
    ensure(accepted == prefixes, || format!("accepted {accepted:?}"))?;
    let sessioned = {
        let mut s = Session::new();
        DOCUMENTED[..3].iter().for_each(|&c| {
            s.call(c);
        });
        s.runtime.as_ref().map(TrustedRuntime::state)
    };
    ensure(sessioned == Some(RuntimeState::Sessioned), || {
        format!("documented order ends in {sessioned:?}")
    })?;
    Ok(format!(
        "{} sequences, exactly the {} prefixes of create-attest-establish-ecall-ecall accepted",
        sequences.len(),
        accepted.len()
    ))
}
