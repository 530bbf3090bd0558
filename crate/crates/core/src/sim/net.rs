//! TCP front end for the simulator: newline-delimited JSON requests, with
//! subscription events interleaved on the subscribing connection.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use crate::wire::{error_code, NodeAddress, Request, Response};

use super::{SimError, SimServer, Subscription};

#[derive(Debug)]
pub struct ServeHandle {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    accept_thread: Option<JoinHandle<()>>,
}

impl ServeHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // Poke the accept loop awake.
        let _ = TcpStream::connect(self.addr);
        if let Some(thread) = self.accept_thread.take() {
            let _ = thread.join();
        }
    }
}

impl Drop for ServeHandle {
    fn drop(&mut self) {
        if self.accept_thread.is_some() {
            self.stop();
        }
    }
}

/// Bind and serve. `bind` is `host:port`; port 0 picks an ephemeral port,
/// the actual address is on the returned handle.
pub fn serve(server: Arc<SimServer>, bind: &str) -> Result<ServeHandle, SimError> {
    let listener = TcpListener::bind(bind).map_err(|e| SimError::PortInUse {
        addr: bind.to_string(),
        reason: e.to_string(),
    })?;
    let addr = listener.local_addr().map_err(|e| SimError::PortInUse {
        addr: bind.to_string(),
        reason: e.to_string(),
    })?;
    let shutdown = Arc::new(AtomicBool::new(false));
    let accept_shutdown = shutdown.clone();
    let accept_thread = std::thread::spawn(move || {
        for stream in listener.incoming() {
            if accept_shutdown.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = stream else { continue };
            let server = server.clone();
            std::thread::spawn(move || {
                let _ = handle_connection(server, stream);
            });
        }
    });
    Ok(ServeHandle {
        addr,
        shutdown,
        accept_thread: Some(accept_thread),
    })
}

fn handle_connection(server: Arc<SimServer>, stream: TcpStream) -> std::io::Result<()> {
    let reader = BufReader::new(stream.try_clone()?);
    let writer = Arc::new(Mutex::new(stream));
    let mut pumps: Vec<(Arc<Subscription>, JoinHandle<()>)> = Vec::new();

    for line in reader.lines() {
        let line = match line {
            Ok(line) => line,
            Err(_) => break,
        };
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<Request>(&line) {
            Err(_) => Response::error(error_code::BAD_REQUEST),
            Ok(Request::Read { ns, id }) => match server.read(&NodeAddress::new(ns, id)) {
                Ok(value) => Response::with_value(value),
                Err(e) => Response::error(code_for(&e)),
            },
            Ok(Request::Write { ns, id, value }) => {
                match server.write(&NodeAddress::new(ns, id), value) {
                    Ok(()) => Response::ok(),
                    Err(e) => Response::error(code_for(&e)),
                }
            }
            Ok(Request::List) => Response::with_nodes(server.list_nodes()),
            Ok(Request::Subscribe { ns, id }) => {
                match server.subscribe(&NodeAddress::new(ns, id)) {
                    Err(e) => Response::error(code_for(&e)),
                    Ok(subscription) => {
                        let subscription = Arc::new(subscription);
                        let pump = spawn_pump(subscription.clone(), writer.clone());
                        pumps.push((subscription, pump));
                        Response::ok()
                    }
                }
            }
        };
        if write_line(&writer, &serde_json::to_string(&response).unwrap()).is_err() {
            break;
        }
    }

    for (subscription, pump) in pumps {
        subscription.close();
        let _ = pump.join();
    }
    Ok(())
}

fn spawn_pump(subscription: Arc<Subscription>, writer: Arc<Mutex<TcpStream>>) -> JoinHandle<()> {
    std::thread::spawn(move || loop {
        match subscription.next_timeout(Duration::from_millis(50)) {
            Some(event) => {
                let line = serde_json::to_string(&event).expect("events serialize");
                if write_line(&writer, &line).is_err() {
                    subscription.close();
                    break;
                }
            }
            None => {
                if subscription.is_closed() {
                    break;
                }
            }
        }
    })
}

fn write_line(writer: &Arc<Mutex<TcpStream>>, line: &str) -> std::io::Result<()> {
    let mut guard = writer.lock().unwrap();
    guard.write_all(line.as_bytes())?;
    guard.write_all(b"\n")
}

fn code_for(error: &SimError) -> &'static str {
    match error {
        SimError::UnknownNode(_) => error_code::UNKNOWN_NODE,
        SimError::NotWritable(_) => error_code::NOT_WRITABLE,
        SimError::NonIntegerCommand => error_code::NON_INTEGER_COMMAND,
        _ => error_code::BAD_REQUEST,
    }
}
