use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::Arc;

use crate::registry::NodeRegistry;

/// Answers each line of `input` with one line on `output` until EOF.
pub fn serve_stream<R: BufRead, W: Write>(
    registry: &NodeRegistry,
    input: R,
    mut output: W,
) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        let mut resp = registry.handle_line(line.trim_end_matches('\r'));
        resp.push('\n');
        output.write_all(resp.as_bytes())?;
        output.flush()?;
    }
    Ok(())
}

fn handle_connection(registry: &NodeRegistry, stream: TcpStream) -> std::io::Result<()> {
    let reader = BufReader::new(stream.try_clone()?);
    serve_stream(registry, reader, stream)
}

/// Accepts connections forever, one thread per connection.
pub fn run(listener: TcpListener, registry: Arc<NodeRegistry>) -> std::io::Result<()> {
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                eprintln!(
                    "{}",
                    serde_json::json!({"event": "accept_failed", "reason": e.to_string()})
                );
                continue;
            }
        };
        let registry = registry.clone();
        std::thread::spawn(move || {
            let peer = stream
                .peer_addr()
                .map(|a| a.to_string())
                .unwrap_or_default();
            if let Err(e) = handle_connection(&registry, stream) {
                eprintln!(
                    "{}",
                    serde_json::json!({"event": "connection_error", "peer": peer, "reason": e.to_string()})
                );
            }
        });
    }
    Ok(())
}

/// Binds `addr` and serves on a background thread; returns the bound
/// address (useful with port 0).
pub fn spawn(addr: &str, registry: Arc<NodeRegistry>) -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    std::thread::spawn(move || run(listener, registry));
    Ok(local)
}
