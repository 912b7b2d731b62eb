//! HTTP review API over the session store.
//!
//! ```text
//! GET  /api/sessions                    -> [SessionSummary]
//! GET  /api/sessions/{id}               -> ReviewSession
//! GET  /api/sessions/{id}/report        -> QaReport
//! POST /api/sessions/{id}/verdict       {revision?, pair, sentence, piece, verdict} -> ReviewSession
//! POST /api/sessions/{id}/split         {revision?, pair, sentence, piece, offset}  -> ReviewSession
//! POST /api/sessions/{id}/merge         {revision?, pair, sentence, piece}          -> ReviewSession
//! POST /api/sessions/{id}/note          {revision?, pair, note}                     -> ReviewSession
//! GET  /api/images/{path}               -> image bytes from the image root
//! ```
//!
//! Errors are `{"error": message, "code": kind}` with 400 (invalid), 404
//! (not_found), 409 (conflict, body also carries `revision`) or 500 (io).
//! A mutation is answered only after the new state is on disk.

use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use super::session::{accuracy_report, PieceVerdict};
use super::store::{SessionStore, StoreError};

#[derive(Debug, Deserialize)]
struct VerdictBody {
    revision: Option<u64>,
    pair: usize,
    sentence: usize,
    piece: usize,
    verdict: PieceVerdict,
}

#[derive(Debug, Deserialize)]
struct SplitBody {
    revision: Option<u64>,
    pair: usize,
    sentence: usize,
    piece: usize,
    offset: usize,
}

#[derive(Debug, Deserialize)]
struct MergeBody {
    revision: Option<u64>,
    pair: usize,
    sentence: usize,
    piece: usize,
}

#[derive(Debug, Deserialize)]
struct NoteBody {
    revision: Option<u64>,
    pair: usize,
    note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

impl Reply {
    fn json(status: u16, value: &impl serde::Serialize) -> Self {
        Self {
            status,
            content_type: "application/json",
            body: serde_json::to_vec(value).expect("serializable"),
        }
    }

    fn error(status: u16, code: &str, message: impl std::fmt::Display) -> Self {
        Self::json(status, &json!({"error": message.to_string(), "code": code}))
    }
}

fn store_error(e: StoreError) -> Reply {
    match e {
        StoreError::NotFound(_) => Reply::error(404, "not_found", e),
        StoreError::Conflict { current, .. } => Reply::json(409, &json!({"error": e.to_string(), "code": "conflict", "revision": current})),
        StoreError::Review(_) | StoreError::BadId(_) | StoreError::Exists(_) => Reply::error(400, "invalid", e),
        StoreError::Corrupt { .. } | StoreError::Io(_) => Reply::error(500, "io", e),
    }
}

pub struct ReviewApi {
    pub store: SessionStore,
    pub image_root: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, Reply> {
    serde_json::from_slice(body).map_err(|e| Reply::error(400, "invalid", format!("bad request body: {e}")))
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("tif" | "tiff") => "image/tiff",
        Some("html") => "text/html; charset=utf-8",
        Some("js") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

fn percent_decode(s: &str) -> Option<String> {
    let b = s.as_bytes();
    let mut out = Vec::with_capacity(b.len());
    let mut i = 0;
    while i < b.len() {
        if b[i] == b'%' {
            let hex = std::str::from_utf8(b.get(i + 1..i + 3)?).ok()?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(b[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

/// Resolves `rel` under `root`, refusing anything that climbs out.
fn serve_file(root: &Path, rel: &str) -> Reply {
    let Some(rel) = percent_decode(rel) else {
        return Reply::error(400, "invalid", "bad path encoding");
    };
    let rel = Path::new(&rel);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return Reply::error(400, "invalid", "path must stay inside the root");
    }
    let path = root.join(rel);
    match std::fs::read(&path) {
        Ok(body) => Reply {
            status: 200,
            content_type: content_type(&path),
            body,
        },
        Err(_) => Reply::error(404, "not_found", format!("no file {}", rel.display())),
    }
}

impl ReviewApi {
    pub fn handle(&self, method: &str, url: &str, body: &[u8]) -> Reply {
        let path = url.split('?').next().unwrap_or("");
        let parts: Vec<&str> = path.trim_matches('/').split('/').collect();
        let s = &self.store;
        let result = match (method, parts.as_slice()) {
            ("GET", ["api", "sessions"]) => Ok(Reply::json(200, &s.list())),
            ("GET", ["api", "sessions", id]) => s.get(id).map(|v| Reply::json(200, &v)),
            ("GET", ["api", "sessions", id, "report"]) => s.get(id).map(|v| Reply::json(200, &accuracy_report(&v))),
            ("POST", ["api", "sessions", id, "verdict"]) => match parse::<VerdictBody>(body) {
                Ok(b) => s.mutate(id, b.revision, |x| x.record_verdict(b.pair, b.sentence, b.piece, b.verdict)).map(|v| Reply::json(200, &v)),
                Err(r) => return r,
            },
            ("POST", ["api", "sessions", id, "split"]) => match parse::<SplitBody>(body) {
                Ok(b) => s.mutate(id, b.revision, |x| x.split_piece(b.pair, b.sentence, b.piece, b.offset)).map(|v| Reply::json(200, &v)),
                Err(r) => return r,
            },
            ("POST", ["api", "sessions", id, "merge"]) => match parse::<MergeBody>(body) {
                Ok(b) => s.mutate(id, b.revision, |x| x.merge_pieces(b.pair, b.sentence, b.piece)).map(|v| Reply::json(200, &v)),
                Err(r) => return r,
            },
            ("POST", ["api", "sessions", id, "note"]) => match parse::<NoteBody>(body) {
                Ok(b) => s.mutate(id, b.revision, |x| x.set_note(b.pair, b.note)).map(|v| Reply::json(200, &v)),
                Err(r) => return r,
            },
            ("GET", ["api", "images", rest @ ..]) if !rest.is_empty() => {
                return match &self.image_root {
                    Some(root) => serve_file(root, &rest.join("/")),
                    None => Reply::error(404, "not_found", "no image root configured"),
                }
            }
            ("GET", _) if !path.starts_with("/api") => {
                return match &self.static_dir {
                    Some(dir) => serve_file(dir, if path == "/" { "index.html" } else { path.trim_start_matches('/') }),
                    None => Reply {
                        status: 200,
                        content_type: "text/plain; charset=utf-8",
                        body: b"review API: see /api/sessions\n".to_vec(),
                    },
                }
            }
            _ => return Reply::error(404, "not_found", format!("no route {method} {path}")),
        };
        result.unwrap_or_else(store_error)
    }
}

/// A bound server. `run` blocks until [`ShutdownHandle::shutdown`].
pub struct ReviewServer {
    server: Arc<tiny_http::Server>,
    api: Arc<ReviewApi>,
    stop: Arc<AtomicBool>,
}

#[derive(Clone)]
pub struct ShutdownHandle {
    server: Arc<tiny_http::Server>,
    stop: Arc<AtomicBool>,
    workers: usize,
}

impl ShutdownHandle {
    pub fn shutdown(&self) {
        self.stop.store(true, Ordering::SeqCst);
        for _ in 0..self.workers {
            self.server.unblock();
        }
    }
}

pub const WORKERS: usize = 4;

impl ReviewServer {
    pub fn bind(addr: &str, api: ReviewApi) -> std::io::Result<Self> {
        let server = tiny_http::Server::http(addr).map_err(std::io::Error::other)?;
        Ok(Self {
            server: Arc::new(server),
            api: Arc::new(api),
            stop: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.server.server_addr().to_ip().expect("tcp listener")
    }

    pub fn shutdown_handle(&self) -> ShutdownHandle {
        ShutdownHandle {
            server: self.server.clone(),
            stop: self.stop.clone(),
            workers: WORKERS,
        }
    }

    pub fn run(&self) {
        std::thread::scope(|scope| {
            for _ in 0..WORKERS {
                scope.spawn(|| {
                    while !self.stop.load(Ordering::SeqCst) {
                        match self.server.recv() {
                            Ok(req) => self.respond(req),
                            Err(e) => log::warn!("accept failed: {e}"),
                        }
                    }
                });
            }
        });
    }

    fn respond(&self, mut req: tiny_http::Request) {
        let mut body = Vec::new();
        if let Err(e) = req.as_reader().read_to_end(&mut body) {
            log::warn!("reading request body: {e}");
            return;
        }
        let reply = self.api.handle(req.method().as_str(), req.url(), &body);
        log::debug!("{} {} -> {}", req.method(), req.url(), reply.status);
        let header = tiny_http::Header::from_bytes("Content-Type", reply.content_type).expect("static header");
        let resp = tiny_http::Response::from_data(reply.body).with_status_code(reply.status).with_header(header);
        if let Err(e) = req.respond(resp) {
            log::debug!("client went away: {e}");
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::qareview::session::{CaptionPair, ReviewSession};

    fn api() -> (tempfile::TempDir, ReviewApi) {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(&dir.path().join("sessions")).unwrap();
        store
            .create(ReviewSession::new(
                "s",
                &[CaptionPair {
                    image: "a.png".into(),
                    caption: "A road. Two houses.".into(),
                }],
            ))
            .unwrap();
        std::fs::write(dir.path().join("a.png"), b"png").unwrap();
        let api = ReviewApi {
            store,
            image_root: Some(dir.path().to_path_buf()),
            static_dir: None,
        };
        (dir, api)
    }

    fn body(r: &Reply) -> serde_json::Value {
        serde_json::from_slice(&r.body).unwrap()
    }

    #[test]
    fn verdict_flow_and_conflict() {
        let (_d, api) = api();
        let r = api.handle("POST", "/api/sessions/s/verdict", br#"{"revision":0,"pair":0,"sentence":0,"piece":0,"verdict":"accurate"}"#);
        assert_eq!(r.status, 200);
        assert_eq!(body(&r)["revision"], 1);
        let r = api.handle("POST", "/api/sessions/s/verdict", br#"{"revision":0,"pair":0,"sentence":1,"piece":0,"verdict":"accurate"}"#);
        assert_eq!(r.status, 409);
        assert_eq!(body(&r)["revision"], 1);
        let r = api.handle("POST", "/api/sessions/s/verdict", br#"{"pair":0,"sentence":5,"piece":0,"verdict":"accurate"}"#);
        assert_eq!(r.status, 400);
        let r = api.handle("GET", "/api/sessions/s/report", b"");
        assert_eq!(body(&r)["ca"], 1);
        assert_eq!(body(&r)["partial"], true);
    }

    #[test]
    fn split_merge_and_listing() {
        let (_d, api) = api();
        let r = api.handle("POST", "/api/sessions/s/split", br#"{"pair":0,"sentence":1,"piece":0,"offset":4}"#);
        assert_eq!(r.status, 200, "{}", String::from_utf8_lossy(&r.body));
        assert_eq!(body(&r)["pairs"][0]["sentences"][1]["pieces"].as_array().unwrap().len(), 2);
        let r = api.handle("POST", "/api/sessions/s/merge", br#"{"pair":0,"sentence":1,"piece":0}"#);
        assert_eq!(body(&r)["pairs"][0]["sentences"][1]["pieces"][0]["text"], "Two houses.");
        let r = api.handle("GET", "/api/sessions", b"");
        assert_eq!(body(&r)[0]["revision"], 2);
        assert_eq!(api.handle("GET", "/api/sessions/zz", b"").status, 404);
        assert_eq!(api.handle("POST", "/api/sessions/s/split", b"{").status, 400);
    }

    #[test]
    fn images_stay_inside_the_root() {
        let (_d, api) = api();
        let r = api.handle("GET", "/api/images/a.png", b"");
        assert_eq!((r.status, r.content_type, r.body.as_slice()), (200, "image/png", b"png".as_slice()));
        assert_eq!(api.handle("GET", "/api/images/..%2Fetc%2Fpasswd", b"").status, 400);
        assert_eq!(api.handle("GET", "/api/images/missing.png", b"").status, 404);
    }
}
