//! Deliberately vulnerable echo application and the reflection probe.
//!
//! The app serves `GET /gym?pN=<value>` routes; each configured parameter
//! reflects the URL-decoded query value into its declared injection context
//! with no sanitization (hardened fixture routes HTML-escape instead). The
//! route table is a config file so new contexts can be added without code
//! changes.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::Payload;
use crate::normalize::url_decode;
use crate::validate::InjectionContext;
use crate::{Error, Result};

/// One reflected parameter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Route {
    pub context: InjectionContext,
    /// Hardened routes HTML-escape the reflected value.
    #[serde(default)]
    pub sanitize: bool,
}

/// Parameter-to-context table for the echo app.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteConfig {
    pub routes: BTreeMap<String, Route>,
}

impl RouteConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Built-in table mirroring the fixture app.
    pub fn default_routes() -> Self {
        let mut routes = BTreeMap::new();
        routes.insert(
            "p16".to_string(),
            Route {
                context: InjectionContext::JsStringDq,
                sanitize: false,
            },
        );
        routes.insert(
            "p1".to_string(),
            Route {
                context: InjectionContext::HtmlBody,
                sanitize: false,
            },
        );
        routes.insert(
            "p2".to_string(),
            Route {
                context: InjectionContext::HtmlAttribute,
                sanitize: false,
            },
        );
        routes.insert(
            "p3".to_string(),
            Route {
                context: InjectionContext::JsStringSq,
                sanitize: false,
            },
        );
        routes.insert(
            "p4".to_string(),
            Route {
                context: InjectionContext::UrlParam,
                sanitize: false,
            },
        );
        routes.insert(
            "p5".to_string(),
            Route {
                context: InjectionContext::HtmlBody,
                sanitize: true,
            },
        );
        RouteConfig { routes }
    }
}

/// The context-local fragment a reflected value lands in. The probe uses
/// the same fragment to locate the canary at the context position.
pub fn context_snippet(context: InjectionContext, value: &str) -> String {
    match context {
        InjectionContext::JsStringDq => format!("var q = \"{value}\";"),
        InjectionContext::JsStringSq => format!("var q = '{value}';"),
        InjectionContext::HtmlAttribute => format!("<input type=\"text\" value=\"{value}\">"),
        InjectionContext::HtmlBody => format!("<div id=\"echo\">{value}</div>"),
        InjectionContext::UrlParam => format!("<a id=\"echo\" href=\"{value}\">link</a>"),
    }
}

/// Full page for a reflected value.
pub fn render_page(context: InjectionContext, value: &str) -> String {
    let snippet = context_snippet(context, value);
    let body = match context {
        InjectionContext::JsStringDq | InjectionContext::JsStringSq => {
            format!("<script>{snippet}</script>")
        }
        _ => snippet,
    };
    format!("<!doctype html><html><head><title>gym</title></head><body>{body}</body></html>")
}

fn html_escape(value: &str) -> String {
    value
        .replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&#39;")
}

const STATIC_PAGE: &str =
    "<!doctype html><html><head><title>gym</title></head><body><h1>gym</h1></body></html>";

/// Handle to a running echo app.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    join: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stop accepting and join the accept loop.
    pub fn shutdown(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the accept loop
        let _ = TcpStream::connect(self.addr);
        if let Some(join) = self.join.take() {
            let _ = join.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Bind and serve the echo app. `bind` may use port 0 for an ephemeral
/// port; the bound address is available on the handle.
pub fn serve_vuln_app(bind: &str, config: RouteConfig) -> Result<ServerHandle> {
    let listener = TcpListener::bind(bind).map_err(|e| Error::Bind {
        addr: bind.to_string(),
        source: e,
    })?;
    let addr = listener.local_addr().map_err(|e| Error::Bind {
        addr: bind.to_string(),
        source: e,
    })?;
    let stop = Arc::new(AtomicBool::new(false));
    let stop_accept = Arc::clone(&stop);
    let join = std::thread::spawn(move || {
        for stream in listener.incoming() {
            if stop_accept.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = stream else { continue };
            let config = config.clone();
            std::thread::spawn(move || {
                let _ = handle_connection(stream, &config);
            });
        }
    });
    Ok(ServerHandle {
        addr,
        stop,
        join: Some(join),
    })
}

fn handle_connection(stream: TcpStream, config: &RouteConfig) -> std::io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    // drain headers
    loop {
        let mut header = String::new();
        if reader.read_line(&mut header)? == 0 || header == "\r\n" || header == "\n" {
            break;
        }
    }
    let mut stream = stream;
    let mut parts = request_line.split_whitespace();
    let method = parts.next().unwrap_or("");
    let target = parts.next().unwrap_or("/");
    if method != "GET" {
        return respond(&mut stream, 405, "method not allowed");
    }
    let (path, query) = match target.split_once('?') {
        Some((p, q)) => (p, q),
        None => (target, ""),
    };
    if path != "/gym" {
        return respond(&mut stream, 404, "not found");
    }
    if query.is_empty() {
        return respond_html(&mut stream, 200, STATIC_PAGE);
    }
    for pair in query.split('&') {
        let (name, value) = match pair.split_once('=') {
            Some((n, v)) => (n, v),
            None => (pair, ""),
        };
        if let Some(route) = config.routes.get(name) {
            // web-framework behavior: parameters arrive URL-decoded once
            let mut reflected = url_decode(value);
            if route.sanitize {
                reflected = html_escape(&reflected);
            }
            let page = render_page(route.context, &reflected);
            return respond_html(&mut stream, 200, &page);
        }
    }
    respond(&mut stream, 404, "no configured parameter")
}

fn respond_html(stream: &mut TcpStream, status: u16, body: &str) -> std::io::Result<()> {
    let reason = match status {
        200 => "OK",
        404 => "Not Found",
        _ => "Error",
    };
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: text/html; charset=utf-8\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
}

fn respond(stream: &mut TcpStream, status: u16, body: &str) -> std::io::Result<()> {
    let reason = match status {
        404 => "Not Found",
        405 => "Method Not Allowed",
        _ => "Error",
    };
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: text/plain\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
}

/// Probe outcome: did the app reflect the payload executably, and where?
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbeOutcome {
    Reflected(InjectionContext),
    NotReflected,
}

/// Send `payload.raw` as the raw query value of `param` and look for the
/// decoded canary at a known context position in the response body.
pub fn probe_reflection(
    base_url: &str,
    payload: &Payload,
    param: &str,
    timeout: Duration,
) -> Result<ProbeOutcome> {
    let url = format!(
        "{}/gym?{}={}",
        base_url.trim_end_matches('/'),
        param,
        payload.raw
    );
    let client = reqwest::blocking::Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| Error::Network(e.to_string()))?;
    let response = client
        .get(&url)
        .send()
        .map_err(|e| Error::Network(e.to_string()))?;
    if !response.status().is_success() {
        return Ok(ProbeOutcome::NotReflected);
    }
    let body = response.text().map_err(|e| Error::Network(e.to_string()))?;
    let canary = url_decode(&payload.raw);
    for context in [
        InjectionContext::JsStringDq,
        InjectionContext::JsStringSq,
        InjectionContext::HtmlAttribute,
        InjectionContext::HtmlBody,
        InjectionContext::UrlParam,
    ] {
        if body.contains(&context_snippet(context, &canary)) {
            return Ok(ProbeOutcome::Reflected(context));
        }
    }
    Ok(ProbeOutcome::NotReflected)
}
