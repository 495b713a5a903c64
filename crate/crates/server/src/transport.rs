//! TCP transport. A connection that opens with an HTTP `GET` is upgraded to
//! a WebSocket and carries one JSON message per text frame; anything else is
//! treated as newline-delimited JSON over the raw socket.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use tungstenite::Message;

use tgg_core::Session;

use crate::protocol::DebugServer;

/// Builds the session for a new connection.
pub type SessionFactory = Arc<dyn Fn() -> Session + Send + Sync>;

fn looks_like_websocket(stream: &TcpStream) -> io::Result<bool> {
    let mut buf = [0u8; 4];
    loop {
        let n = stream.peek(&mut buf)?;
        if n == 0 {
            return Ok(false);
        }
        if n == buf.len() || buf[..n].contains(&b'\n') {
            return Ok(&buf[..n] == b"GET ");
        }
        thread::sleep(Duration::from_millis(1));
    }
}

/// Serves a single connection until the client disconnects.
pub fn serve_connection(stream: TcpStream, session: Session) -> io::Result<()> {
    let mut server = DebugServer::new(session);
    if looks_like_websocket(&stream)? {
        serve_websocket(stream, &mut server)
    } else {
        serve_lines(stream, &mut server)
    }
}

fn serve_lines(stream: TcpStream, server: &mut DebugServer) -> io::Result<()> {
    let mut writer = stream.try_clone()?;
    for line in BufReader::new(stream).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        for message in server.handle_line(&line) {
            writeln!(writer, "{message}")?;
        }
        writer.flush()?;
    }
    Ok(())
}

fn serve_websocket(stream: TcpStream, server: &mut DebugServer) -> io::Result<()> {
    let mut socket = tungstenite::accept(stream).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    loop {
        let text = match socket.read() {
            Ok(Message::Text(text)) => text,
            Ok(Message::Close(_)) => break,
            Ok(_) => continue,
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => break,
            Err(e) => return Err(io::Error::new(io::ErrorKind::Other, e.to_string())),
        };
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            for message in server.handle_line(line) {
                socket
                    .send(Message::Text(message.to_string()))
                    .map_err(|e| io::Error::new(io::ErrorKind::Other, e.to_string()))?;
            }
        }
    }
    Ok(())
}

/// Accepts connections forever, one thread and one fresh session each.
pub fn serve(listener: TcpListener, factory: SessionFactory) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let factory = Arc::clone(&factory);
        thread::spawn(move || {
            let _ = serve_connection(stream, factory());
        });
    }
    Ok(())
}
