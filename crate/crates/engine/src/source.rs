//! Directory source: finds completed ingest files and groups them into
//! per-client micro-batches.

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use cardio_core::{merge_runs, parse_records, ClientId, RrGuard, RrSample, RrSeries, RECORD_LEN};
use cardio_enclave::{CipherEnvelope, Direction};

use crate::config::StreamSourceConfig;
use crate::error::EngineError;
use crate::tap::{ByteTap, TapPoint};

/// Writers create `<name>.part` and rename when done.
pub const IN_PROGRESS_SUFFIX: &str = ".part";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestFile {
    pub name: String,
    pub path: PathBuf,
    pub client_id: ClientId,
    pub seq: u64,
}

/// Lists completed files not yet in `seen` and adds them to it, so each file
/// is returned at most once for the lifetime of `seen`. Names that do not
/// match the client pattern are skipped (and remembered, to log them once).
pub fn scan_source(
    source: &StreamSourceConfig,
    seen: &mut HashSet<String>,
) -> Result<Vec<IngestFile>, EngineError> {
    let unavailable = |e| EngineError::SourceUnavailable {
        path: source.ingest_dir.clone(),
        source: e,
    };
    let mut found = Vec::new();
    for entry in std::fs::read_dir(&source.ingest_dir).map_err(unavailable)? {
        let entry = entry.map_err(unavailable)?;
        let Ok(name) = entry.file_name().into_string() else {
            continue;
        };
        if name.starts_with('.') || name.ends_with(IN_PROGRESS_SUFFIX) || seen.contains(&name) {
            continue;
        }
        // Entries can disappear between listing and stat; skip those.
        if !entry.file_type().map(|t| t.is_file()).unwrap_or(false) {
            continue;
        }
        seen.insert(name.clone());
        match source.client_pattern.parse(&name) {
            Some((client_id, seq)) => found.push(IngestFile {
                path: entry.path(),
                name,
                client_id,
                seq,
            }),
            None => log::warn!("ignoring ingest file with unrecognised name {name:?}"),
        }
    }
    found.sort_by(|a, b| (&a.client_id, a.seq).cmp(&(&b.client_id, b.seq)));
    Ok(found)
}

/// What the engine holds for a batch. In sealed mode the host never sees
/// records, only the deposits the clients sealed.
#[derive(Debug, Clone, PartialEq)]
pub enum BatchPayload {
    Plain(RrSeries),
    Sealed(Vec<CipherEnvelope>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroBatch {
    pub client_id: ClientId,
    pub window_id: u64,
    pub window_start_ms: u64,
    pub files: Vec<String>,
    pub payload: BatchPayload,
}

impl MicroBatch {
    pub fn plain(series: RrSeries, window_id: u64, window_start_ms: u64) -> Self {
        MicroBatch {
            client_id: series.client_id().clone(),
            window_id,
            window_start_ms,
            files: Vec::new(),
            payload: BatchPayload::Plain(series),
        }
    }

    /// Record count. For sealed deposits it is inferred from the ciphertext
    /// length, which equals the record bytes.
    pub fn record_count(&self) -> usize {
        match &self.payload {
            BatchPayload::Plain(s) => s.len(),
            BatchPayload::Sealed(envs) => {
                envs.iter().map(|e| e.ciphertext.len() / RECORD_LEN).sum()
            }
        }
    }
}

/// How ingest file bodies are encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestEncoding {
    /// Concatenated 23-byte records.
    Records,
    /// One sealed deposit envelope per file.
    Sealed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quarantined {
    pub file: String,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct FormedWindow {
    pub batches: Vec<MicroBatch>,
    pub quarantined: Vec<Quarantined>,
}

/// Groups files by client into batches. A file that cannot be read as a
/// whole is moved to the quarantine directory and contributes nothing;
/// the rest of its client's batch proceeds.
pub struct BatchFormer<'a> {
    pub source: &'a StreamSourceConfig,
    pub encoding: IngestEncoding,
    pub guard: RrGuard,
    pub tap: &'a ByteTap,
}

enum Parsed {
    Records(Vec<RrSample>),
    Sealed(CipherEnvelope),
}

impl BatchFormer<'_> {
    pub fn form(&self, files: &[IngestFile], window_id: u64, window_start_ms: u64) -> FormedWindow {
        let mut by_client: BTreeMap<&ClientId, Vec<&IngestFile>> = BTreeMap::new();
        for f in files {
            by_client.entry(&f.client_id).or_default().push(f);
        }
        let mut out = FormedWindow::default();
        for (client, files) in by_client {
            let mut accepted: Vec<(&IngestFile, Parsed)> = Vec::new();
            for f in files {
                match self.read(f) {
                    Ok(p) => accepted.push((f, p)),
                    Err(reason) => out.quarantined.push(self.quarantine(f, reason)),
                }
            }
            if accepted.is_empty() {
                continue;
            }
            let (names, payload) = match self.encoding {
                IngestEncoding::Records => {
                    let (names, runs): (Vec<_>, Vec<_>) = accepted
                        .into_iter()
                        .map(|(f, p)| match p {
                            Parsed::Records(r) => (f, r),
                            Parsed::Sealed(_) => unreachable!("records encoding"),
                        })
                        .unzip();
                    let (series, rejected) = merge_runs(client.clone(), runs);
                    for &i in &rejected {
                        out.quarantined.push(
                            self.quarantine(names[i], "timestamps overlap other files".into()),
                        );
                    }
                    let names: Vec<String> = names
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| !rejected.contains(i))
                        .map(|(_, f)| f.name.clone())
                        .collect();
                    if names.is_empty() {
                        continue;
                    }
                    (names, BatchPayload::Plain(series))
                }
                IngestEncoding::Sealed => {
                    let (names, envs) = accepted
                        .into_iter()
                        .map(|(f, p)| match p {
                            Parsed::Sealed(e) => (f.name.clone(), e),
                            Parsed::Records(_) => unreachable!("sealed encoding"),
                        })
                        .unzip();
                    (names, BatchPayload::Sealed(envs))
                }
            };
            out.batches.push(MicroBatch {
                client_id: client.clone(),
                window_id,
                window_start_ms,
                files: names,
                payload,
            });
        }
        out
    }

    fn read(&self, f: &IngestFile) -> Result<Parsed, String> {
        let bytes = std::fs::read(&f.path).map_err(|e| format!("unreadable: {e}"))?;
        self.tap.record(TapPoint::IngestRead, &bytes);
        match self.encoding {
            IngestEncoding::Records => parse_records(&bytes, &self.guard)
                .map(Parsed::Records)
                .map_err(|e| e.to_string()),
            IngestEncoding::Sealed => {
                let env = CipherEnvelope::from_bytes(&bytes).map_err(|e| e.to_string())?;
                // The address is authenticated inside the runtime; checking
                // it here only keeps misnamed files out of other batches.
                match env.claimed_aad() {
                    Some(a)
                        if a.direction == Direction::Deposit
                            && a.client_id == f.client_id
                            && a.window_id == f.seq =>
                    {
                        Ok(Parsed::Sealed(env))
                    }
                    _ => Err("deposit address does not match file name".into()),
                }
            }
        }
    }

    fn quarantine(&self, f: &IngestFile, reason: String) -> Quarantined {
        log::warn!("quarantining {}: {reason}", f.name);
        let dir = self.source.quarantine_dir();
        if let Err(e) =
            std::fs::create_dir_all(&dir).and_then(|_| std::fs::rename(&f.path, dir.join(&f.name)))
        {
            log::error!("could not move {} to quarantine: {e}", f.name);
        }
        Quarantined {
            file: f.name.clone(),
            reason,
        }
    }
}

/// Forms plain batches from record files with the default guard.
pub fn form_batches(
    source: &StreamSourceConfig,
    files: &[IngestFile],
    window_id: u64,
) -> FormedWindow {
    let tap = ByteTap::disabled();
    let former = BatchFormer {
        source,
        encoding: IngestEncoding::Records,
        guard: RrGuard::default(),
        tap: &tap,
    };
    former.form(files, window_id, 0)
}
