//! Tiny in-process chat-completion server for exercising the HTTP proposer
//! without a network. One canned behavior per server, chosen at start.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

/// What the stub puts in the assistant message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StubBehavior {
    /// A bare configuration object.
    ValidConfig,
    /// A config-plus-rationale object buried in chatty prose.
    ProseWrapped,
    /// Syntactically valid JSON that violates the configuration schema.
    InvalidSchema,
    /// No JSON at all.
    Garbage,
}

impl StubBehavior {
    fn content(self) -> &'static str {
        match self {
            StubBehavior::ValidConfig => {
                r#"{"family":"de","mutation":"current-to-pbest","f":0.7,"cr":0.95,"population_size":24,"archive":true}"#
            }
            StubBehavior::ProseWrapped => {
                "Sure! Based on the history I'd nudge F upward. Here is my pick:\n\
                 {\"config\": {\"family\": \"de\", \"f\": 0.8, \"cr\": 0.9}, \
                 \"rationale\": \"larger steps {escape} test\"}\n\
                 Good luck!"
            }
            StubBehavior::InvalidSchema => {
                r#"{"family":"simulated-annealing","temperature":5.0}"#
            }
            StubBehavior::Garbage => "I cannot help with that request.",
        }
    }
}

/// Loopback HTTP/1.1 server answering every POST with one canned
/// chat-completion reply. Shuts down when dropped.
pub struct StubServer {
    port: u16,
    stop: Arc<AtomicBool>,
    requests: Arc<AtomicUsize>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(behavior: StubBehavior) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let port = listener.local_addr()?.port();
        listener.set_nonblocking(true)?;
        let stop = Arc::new(AtomicBool::new(false));
        let requests = Arc::new(AtomicUsize::new(0));
        let thread_stop = Arc::clone(&stop);
        let thread_requests = Arc::clone(&requests);
        let handle = std::thread::spawn(move || {
            while !thread_stop.load(Ordering::SeqCst) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        thread_requests.fetch_add(1, Ordering::SeqCst);
                        let _ = serve_one(stream, behavior);
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        std::thread::sleep(Duration::from_millis(5));
                    }
                    Err(_) => break,
                }
            }
        });
        Ok(StubServer { port, stop, requests, handle: Some(handle) })
    }

    pub fn endpoint(&self) -> String {
        format!("http://127.0.0.1:{}/v1/chat/completions", self.port)
    }

    /// Connections accepted so far.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

/// Reads one request (headers plus Content-Length body) and writes the
/// canned reply. Best effort: malformed requests still get the reply.
fn serve_one(mut stream: TcpStream, behavior: StubBehavior) -> std::io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(2)))?;
    stream.set_nonblocking(false)?;
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    let header_end = loop {
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            break buf.len();
        }
        buf.extend_from_slice(&chunk[..n]);
        if let Some(pos) = find_subslice(&buf, b"\r\n\r\n") {
            break pos + 4;
        }
        if buf.len() > 1 << 20 {
            break buf.len();
        }
    };
    let headers = String::from_utf8_lossy(&buf[..header_end.min(buf.len())]).to_string();
    let content_length = headers
        .lines()
        .find_map(|line| {
            let (name, value) = line.split_once(':')?;
            name.eq_ignore_ascii_case("content-length")
                .then(|| value.trim().parse::<usize>().ok())?
        })
        .unwrap_or(0);
    while buf.len() < header_end + content_length {
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            break;
        }
        buf.extend_from_slice(&chunk[..n]);
    }

    let body = serde_json::json!({
        "id": "stub-1",
        "object": "chat.completion",
        "choices": [{
            "index": 0,
            "message": {"role": "assistant", "content": behavior.content()},
            "finish_reason": "stop",
        }],
    })
    .to_string();
    let reply = format!(
        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        body.len(),
        body
    );
    stream.write_all(reply.as_bytes())?;
    stream.flush()
}

fn find_subslice(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}
