//! Result files. Written to a hidden temp file, synced, then renamed, so a
//! reader polling the directory only ever sees complete files.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use cardio_core::ClientId;
use cardio_enclave::CipherEnvelope;

use crate::config::result_file_name;
use crate::error::EngineError;

/// A batch result as the host holds it: a readable body in the clear modes,
/// the runtime's sealed reply in sealed mode.
#[derive(Debug, Clone, PartialEq)]
pub enum ResultPayload {
    Plain(String),
    Sealed(CipherEnvelope),
}

impl ResultPayload {
    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            ResultPayload::Plain(body) => body.as_bytes().to_vec(),
            ResultPayload::Sealed(env) => env.to_bytes(),
        }
    }
}

pub fn write_result(
    result_dir: &Path,
    client_id: &ClientId,
    window_id: u64,
    payload: &ResultPayload,
) -> Result<PathBuf, EngineError> {
    write_atomic(
        result_dir,
        &result_file_name(client_id, window_id),
        &payload.to_bytes(),
        false,
    )
}

pub(crate) fn write_atomic(
    dir: &Path,
    name: &str,
    bytes: &[u8],
    crash_before_rename: bool,
) -> Result<PathBuf, EngineError> {
    let sink = |source| EngineError::SinkUnavailable {
        path: dir.to_path_buf(),
        source,
    };
    let tmp = dir.join(format!(".{name}.tmp"));
    let target = dir.join(name);
    let mut f = File::create(&tmp).map_err(sink)?;
    f.write_all(bytes).map_err(sink)?;
    f.sync_all().map_err(sink)?;
    drop(f);
    if crash_before_rename {
        return Err(sink(std::io::Error::new(
            std::io::ErrorKind::Interrupted,
            "interrupted before rename",
        )));
    }
    std::fs::rename(&tmp, &target).map_err(sink)?;
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn visible(dir: &Path) -> Vec<String> {
        let mut names: Vec<String> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| !n.starts_with('.'))
            .collect();
        names.sort();
        names
    }

    #[test]
    fn sdnn_body_and_file_name() {
        let d = tempfile::tempdir().unwrap();
        let c = ClientId::new("sensor-a").unwrap();
        let p = write_result(
            d.path(),
            &c,
            3,
            &ResultPayload::Plain("sdnn_ms=8.165\n".into()),
        )
        .unwrap();
        assert_eq!(p.file_name().unwrap(), "sensor-a_3.out");
        assert_eq!(std::fs::read_to_string(p).unwrap(), "sdnn_ms=8.165\n");
        write_result(
            d.path(),
            &c,
            4,
            &ResultPayload::Plain("sdnn_ms=1.000\n".into()),
        )
        .unwrap();
        assert_eq!(visible(d.path()), ["sensor-a_3.out", "sensor-a_4.out"]);
    }

    #[test]
    fn interrupted_write_leaves_no_visible_file() {
        let d = tempfile::tempdir().unwrap();
        let err = write_atomic(d.path(), "c_0.out", b"sdnn_ms=8.165\n", true).unwrap_err();
        assert!(matches!(err, EngineError::SinkUnavailable { .. }));
        assert!(visible(d.path()).is_empty());
        assert!(!d.path().join("c_0.out").exists());
    }

    #[test]
    fn missing_directory_is_sink_unavailable() {
        let d = tempfile::tempdir().unwrap();
        let c = ClientId::new("c").unwrap();
        let r = write_result(
            &d.path().join("gone"),
            &c,
            0,
            &ResultPayload::Plain(String::new()),
        );
        assert!(matches!(r, Err(EngineError::SinkUnavailable { .. })));
    }
}
