//! Read-only HTTP endpoint over the stats registry.
//!
//! - `GET /api/v1/runs/<run_id>/batches`: every recorded batch, in order
//! - `GET /api/v1/runs/<run_id>/summary`: mean/stddev of processing times
//!
//! Plain `std::net`; one short-lived connection per request.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use crate::error::MetricsError;
use crate::stats::StatsRegistry;
use crate::summary::summarize;

pub struct MetricsServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MetricsServer {
    /// Binds and starts serving on a background thread. Use port 0 for an
    /// ephemeral port and read it back from [`MetricsServer::local_addr`].
    pub fn start(addr: impl ToSocketAddrs, registry: Arc<StatsRegistry>) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let stop_flag = Arc::clone(&stop);
        let handle = std::thread::Builder::new()
            .name("metrics-http".into())
            .spawn(move || {
                while !stop_flag.load(Ordering::Relaxed) {
                    match listener.accept() {
                        Ok((stream, _)) => {
                            if let Err(e) = handle_connection(stream, &registry) {
                                log::debug!("metrics request failed: {e}");
                            }
                        }
                        Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                            std::thread::sleep(Duration::from_millis(5));
                        }
                        Err(e) => log::warn!("metrics accept error: {e}"),
                    }
                }
            })?;
        Ok(MetricsServer {
            addr,
            stop,
            handle: Some(handle),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop_thread();
    }

    fn stop_thread(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for MetricsServer {
    fn drop(&mut self) {
        self.stop_thread();
    }
}

fn handle_connection(stream: TcpStream, registry: &StatsRegistry) -> std::io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    let mut reader = BufReader::new(&stream);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line.trim().is_empty() {
            break;
        }
    }
    let mut parts = request_line.split_whitespace();
    let (method, path) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
    let (status, body) = route(method, path, registry);
    respond(&stream, status, &body)
}

/// Maps a request to a status code and JSON body.
pub fn route(method: &str, path: &str, registry: &StatsRegistry) -> (u16, String) {
    if method != "GET" {
        return (405, error_json("method not allowed"));
    }
    let path = path.split('?').next().unwrap_or("");
    let segments: Vec<&str> = path.trim_matches('/').split('/').collect();
    match segments.as_slice() {
        ["api", "v1", "runs", run_id, "batches"] => match registry.get_batches(run_id) {
            Ok(batches) => (
                200,
                serde_json::to_string(&batches).expect("stats serialize"),
            ),
            Err(e) => (404, error_json(&e.to_string())),
        },
        ["api", "v1", "runs", run_id, "summary"] => {
            let Some(log) = registry.run(run_id) else {
                return (
                    404,
                    error_json(&MetricsError::UnknownRun(run_id.to_string()).to_string()),
                );
            };
            let times: Vec<f64> = log
                .snapshot()
                .iter()
                .map(|s| s.processing_time_ms)
                .collect();
            match summarize(log.meta(), &times) {
                Ok(summary) => (
                    200,
                    serde_json::to_string(&summary).expect("summary serializes"),
                ),
                Err(e) => (422, error_json(&e.to_string())),
            }
        }
        _ => (404, error_json("not found")),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

fn respond(mut stream: &TcpStream, status: u16, body: &str) -> std::io::Result<()> {
    let reason = match status {
        200 => "OK",
        404 => "Not Found",
        405 => "Method Not Allowed",
        422 => "Unprocessable Entity",
        _ => "Error",
    };
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    stream.flush()
}

/// Minimal blocking GET used by the benchmark harness and tests.
pub fn http_get(addr: SocketAddr, path: &str) -> std::io::Result<(u16, String)> {
    let mut stream = TcpStream::connect_timeout(&addr, Duration::from_secs(5))?;
    stream.set_read_timeout(Some(Duration::from_secs(30)))?;
    write!(
        stream,
        "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    )?;
    let mut raw = String::new();
    stream.read_to_string(&mut raw)?;
    let (head, body) = raw.split_once("\r\n\r\n").ok_or_else(|| {
        std::io::Error::new(std::io::ErrorKind::InvalidData, "no header terminator")
    })?;
    let status = head
        .split_whitespace()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidData, "bad status line"))?;
    Ok((status, body.to_string()))
}
