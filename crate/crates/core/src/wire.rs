//! The simulator's wire protocol: one JSON document per line over TCP.
//!
//! Requests: `{"op":"read","ns":..,"id":..}`, `{"op":"write",..,"value":N}`,
//! `{"op":"subscribe",..}`, `{"op":"list"}`. Responses answer with
//! `{"ok":true,...}` or `{"ok":false,"error":CODE}`. After a subscribe, the
//! server interleaves `{"event":"change",...,"seq":N}` lines on the same
//! connection; seq is strictly increasing per subscription.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;

use serde::{Deserialize, Serialize};

/// (namespace, identifier) address of a variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeAddress {
    pub ns: String,
    pub id: String,
}

impl NodeAddress {
    pub fn new(ns: impl Into<String>, id: impl Into<String>) -> NodeAddress {
        NodeAddress {
            ns: ns.into(),
            id: id.into(),
        }
    }
}

impl std::fmt::Display for NodeAddress {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.ns, self.id)
    }
}

/// Variable values: the protocol carries integers and doubles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Double(f64),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            Value::Double(_) => None,
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Double(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Request {
    Read {
        ns: String,
        id: String,
    },
    Write {
        ns: String,
        id: String,
        value: Value,
    },
    Subscribe {
        ns: String,
        id: String,
    },
    List,
}

pub mod error_code {
    pub const UNKNOWN_NODE: &str = "UNKNOWN_NODE";
    pub const NOT_WRITABLE: &str = "NOT_WRITABLE";
    pub const NON_INTEGER_COMMAND: &str = "NON_INTEGER_COMMAND";
    pub const BAD_REQUEST: &str = "BAD_REQUEST";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub ns: String,
    pub id: String,
    pub value: Value,
    pub writable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<NodeInfo>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Response {
    pub fn ok() -> Response {
        Response {
            ok: true,
            value: None,
            nodes: None,
            error: None,
        }
    }

    pub fn with_value(value: Value) -> Response {
        Response {
            value: Some(value),
            ..Response::ok()
        }
    }

    pub fn with_nodes(nodes: Vec<NodeInfo>) -> Response {
        Response {
            nodes: Some(nodes),
            ..Response::ok()
        }
    }

    pub fn error(code: &str) -> Response {
        Response {
            ok: false,
            value: None,
            nodes: None,
            error: Some(code.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum Event {
    Change {
        ns: String,
        id: String,
        value: Value,
        seq: u64,
    },
    /// A slow subscriber overflowed its buffer; `dropped` changes are gone.
    Gap {
        ns: String,
        id: String,
        dropped: u64,
        seq: u64,
    },
}

impl Event {
    pub fn seq(&self) -> u64 {
        match self {
            Event::Change { seq, .. } | Event::Gap { seq, .. } => *seq,
        }
    }
}

/// A line sent by the server: response to a request or subscription event.
#[derive(Debug, Clone, PartialEq)]
pub enum ServerMessage {
    Response(Response),
    Event(Event),
}

pub fn parse_server_message(line: &str) -> Result<ServerMessage, serde_json::Error> {
    let value: serde_json::Value = serde_json::from_str(line)?;
    if value.get("event").is_some() {
        serde_json::from_value(value).map(ServerMessage::Event)
    } else {
        serde_json::from_value(value).map(ServerMessage::Response)
    }
}

/// Blocking client for the protocol. One request-response at a time; on a
/// subscribed connection use `read_message` to drain interleaved events.
pub struct WireClient {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl WireClient {
    pub fn connect(addr: &str) -> std::io::Result<WireClient> {
        let stream = TcpStream::connect(addr)?;
        WireClient::from_stream(stream)
    }

    pub fn from_stream(stream: TcpStream) -> std::io::Result<WireClient> {
        let reader = BufReader::new(stream.try_clone()?);
        Ok(WireClient {
            reader,
            writer: stream,
        })
    }

    pub fn stream(&self) -> &TcpStream {
        &self.writer
    }

    pub fn send(&mut self, request: &Request) -> std::io::Result<()> {
        let mut line = serde_json::to_string(request).expect("requests serialize");
        line.push('\n');
        self.writer.write_all(line.as_bytes())
    }

    pub fn read_message(&mut self) -> std::io::Result<ServerMessage> {
        let mut line = String::new();
        let n = self.reader.read_line(&mut line)?;
        if n == 0 {
            return Err(std::io::Error::new(
                std::io::ErrorKind::UnexpectedEof,
                "server closed the connection",
            ));
        }
        parse_server_message(line.trim_end()).map_err(|e| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("unparseable server line {line:?}: {e}"),
            )
        })
    }

    /// Send a request and wait for its response, skipping any subscription
    /// events that arrive in between.
    pub fn request(&mut self, request: &Request) -> std::io::Result<Response> {
        self.send(request)?;
        loop {
            match self.read_message()? {
                ServerMessage::Response(response) => return Ok(response),
                ServerMessage::Event(_) => continue,
            }
        }
    }
}
