//! Minimal session endpoint for the study UI.
//!
//! * `GET /plan/{observer}` returns `plans/{observer}.json`.
//! * `POST /record` stores a `PreferenceRecord` as `records/{observer}.json`
//!   once it answers the observer's plan exactly; a stored record is never
//!   overwritten.
//! * Any other `GET` is served from the optional static directory.

use std::io::Read;
use std::path::{Component, Path, PathBuf};

use lvq_core::fsutil;
use lvq_core::subjective::{PreferenceRecord, SessionPlan};
use serde_json::json;
use tiny_http::{Header, Method, Request, Response, Server};

use crate::commands::{check_observer_id, write_json};
use crate::error::{CliError, CliResult};

/// Largest accepted request body.
pub const MAX_BODY: u64 = 4 << 20;

#[derive(Debug, Clone)]
pub struct SessionService {
    pub plans: PathBuf,
    pub records: PathBuf,
    pub static_dir: Option<PathBuf>,
}

/// A response before it is put on the wire.
#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

impl Reply {
    fn json(status: u16, value: serde_json::Value) -> Reply {
        Reply {
            status,
            content_type: "application/json",
            body: value.to_string().into_bytes(),
        }
    }

    fn error(status: u16, msg: impl Into<String>) -> Reply {
        Reply::json(status, json!({ "error": msg.into() }))
    }

    pub fn body_str(&self) -> &str {
        std::str::from_utf8(&self.body).unwrap_or("")
    }
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript",
        "css" => "text/css",
        "json" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "mp4" => "video/mp4",
        "webm" => "video/webm",
        _ => "application/octet-stream",
    }
}

impl SessionService {
    pub fn handle(&self, method: &str, url: &str, body: &[u8]) -> Reply {
        let path = url.split(['?', '#']).next().unwrap_or("");
        match (method, path) {
            ("OPTIONS", _) => Reply {
                status: 204,
                content_type: "text/plain",
                body: Vec::new(),
            },
            ("GET", p) if p.starts_with("/plan/") => self.get_plan(&p["/plan/".len()..]),
            ("POST", "/record") => self.post_record(body),
            ("GET", p) => self.get_static(p),
            _ => Reply::error(405, format!("{method} {path} is not supported")),
        }
    }

    fn load_plan(&self, observer: &str) -> Result<SessionPlan, Reply> {
        if check_observer_id(observer).is_err() {
            return Err(Reply::error(400, format!("bad observer id {observer:?}")));
        }
        let p = self.plans.join(format!("{observer}.json"));
        let text = std::fs::read_to_string(&p).map_err(|_| Reply::error(404, format!("no plan for {observer}")))?;
        let plan: SessionPlan =
            serde_json::from_str(&text).map_err(|e| Reply::error(500, format!("stored plan unreadable: {e}")))?;
        plan.validate().map_err(|e| Reply::error(500, e.to_string()))?;
        Ok(plan)
    }

    fn get_plan(&self, observer: &str) -> Reply {
        match self.load_plan(observer) {
            Ok(plan) => Reply::json(200, serde_json::to_value(&plan).expect("plan serializes")),
            Err(r) => r,
        }
    }

    fn post_record(&self, body: &[u8]) -> Reply {
        let record: PreferenceRecord = match serde_json::from_slice(body) {
            Ok(r) => r,
            Err(e) => return Reply::error(400, format!("malformed record: {e}")),
        };
        let plan = match self.load_plan(&record.observer_id) {
            Ok(p) => p,
            Err(r) => return r,
        };
        if let Err(e) = record.check_against(&plan) {
            return Reply::error(422, e.to_string());
        }
        let target = self.records.join(format!("{}.json", record.observer_id));
        if target.exists() {
            return Reply::error(409, format!("record for {} already stored", record.observer_id));
        }
        match write_json(&target, &record) {
            Ok(()) => Reply::json(201, json!({ "stored": record.observer_id, "results": record.results.len() })),
            Err(e) => Reply::error(500, e.to_string()),
        }
    }

    fn get_static(&self, url_path: &str) -> Reply {
        let Some(root) = &self.static_dir else {
            return Reply::error(404, "not found");
        };
        let rel = Path::new(url_path.trim_start_matches('/'));
        if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
            return Reply::error(404, "not found");
        }
        let mut p = root.join(rel);
        if p.is_dir() {
            p = p.join("index.html");
        }
        match std::fs::read(&p) {
            Ok(body) => Reply {
                status: 200,
                content_type: content_type(&p),
                body,
            },
            Err(_) => Reply::error(404, "not found"),
        }
    }

    fn respond(&self, mut req: Request) {
        let mut body = Vec::new();
        let read = req.as_reader().take(MAX_BODY + 1).read_to_end(&mut body);
        let reply = if read.is_err() {
            Reply::error(400, "unreadable body")
        } else if body.len() as u64 > MAX_BODY {
            Reply::error(413, "body too large")
        } else {
            let method = match req.method() {
                Method::Get => "GET",
                Method::Post => "POST",
                Method::Options => "OPTIONS",
                _ => "OTHER",
            };
            self.handle(method, req.url(), &body)
        };
        log::info!("{} {} -> {}", req.method(), req.url(), reply.status);
        let headers = [
            Header::from_bytes("Content-Type", reply.content_type).expect("static header"),
            Header::from_bytes("Access-Control-Allow-Origin", "*").expect("static header"),
            Header::from_bytes("Access-Control-Allow-Headers", "Content-Type").expect("static header"),
        ];
        let mut response = Response::from_data(reply.body).with_status_code(reply.status);
        for h in headers {
            response.add_header(h);
        }
        if let Err(e) = req.respond(response) {
            log::warn!("could not send response: {e}");
        }
    }

    /// Binds `addr` (port 0 picks a free one) and returns the server with
    /// its bound address.
    pub fn bind(addr: &str) -> CliResult<(Server, String)> {
        let server = Server::http(addr).map_err(|e| CliError::data(format!("cannot listen on {addr}: {e}")))?;
        let bound = server
            .server_addr()
            .to_ip()
            .map(|a| a.to_string())
            .unwrap_or_else(|| addr.to_string());
        Ok((server, bound))
    }

    /// Answers requests one at a time until the server is unblocked.
    pub fn run(&self, server: &Server) {
        for req in server.incoming_requests() {
            self.respond(req);
        }
    }

    pub fn prepare(&self) -> CliResult<()> {
        if !self.plans.is_dir() {
            return Err(CliError::data(format!("plans directory {} does not exist", self.plans.display())));
        }
        fsutil::ensure_parent(&self.records.join("x"))?;
        Ok(())
    }
}
