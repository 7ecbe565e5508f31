//! Tiny HTTP stub for the remote-provider unit tests: serves a fixed list
//! of canned responses, one connection each, and hands back the raw
//! requests it saw.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::thread::JoinHandle;

pub(crate) struct CannedResponse {
    pub status: u16,
    pub content_type: String,
    pub body: String,
}

pub(crate) fn json_response(status: u16, body: &str) -> CannedResponse {
    CannedResponse {
        status,
        content_type: "application/json".to_string(),
        body: body.to_string(),
    }
}

pub(crate) fn serve(responses: Vec<CannedResponse>) -> (String, JoinHandle<Vec<Vec<u8>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub listener");
    let url = format!("http://{}/stub", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut seen = Vec::new();
        for response in responses {
            let (mut stream, _) = listener.accept().expect("accept stub connection");
            seen.push(read_request(&mut stream));
            let head = format!(
                "HTTP/1.1 {} STUB\r\ncontent-type: {}\r\ncontent-length: {}\r\nconnection: close\r\n\r\n",
                response.status,
                response.content_type,
                response.body.len()
            );
            stream.write_all(head.as_bytes()).unwrap();
            stream.write_all(response.body.as_bytes()).unwrap();
        }
        seen
    });
    (url, handle)
}

fn read_request(stream: &mut TcpStream) -> Vec<u8> {
    let mut buf = Vec::new();
    let mut tmp = [0u8; 4096];
    loop {
        if let Some(end) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
            let needed = end + 4 + content_length(&buf[..end]);
            if buf.len() >= needed {
                return buf;
            }
        }
        match stream.read(&mut tmp) {
            Ok(0) | Err(_) => return buf,
            Ok(n) => buf.extend_from_slice(&tmp[..n]),
        }
    }
}

fn content_length(head: &[u8]) -> usize {
    String::from_utf8_lossy(head)
        .lines()
        .find_map(|line| {
            let (name, value) = line.split_once(':')?;
            if name.trim().eq_ignore_ascii_case("content-length") {
                value.trim().parse().ok()
            } else {
                None
            }
        })
        .unwrap_or(0)
}
