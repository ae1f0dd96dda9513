//! HTTP front end for the surrogate predictor.
//!
//! Stateless by construction: every request is answered from the immutable
//! surrogate configuration, so identical requests produce byte-identical
//! JSON regardless of ordering or concurrency. Serialization uses fixed
//! field order and shortest round-trip floats, which is what makes
//! byte-level comparisons across local and remote backends meaningful.

use std::io::Read;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use thiserror::Error;
use tiny_http::{Header, Method, Request, Response, Server};

use crate::predictor::wire::{
    PredictRequest, PredictResponse, WireCandidateResult, WireDistribution,
};
use crate::predictor::{IsoplPredictor, PredictError, SurrogateConfig, SurrogatePredictor};

/// Worker threads used by [`serve`].
pub const DEFAULT_WORKERS: usize = 4;

/// Request bodies above this are rejected outright.
const MAX_BODY_BYTES: usize = 16 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("could not bind '{address}': {message}")]
    Bind { address: String, message: String },
    #[error(transparent)]
    Predict(#[from] PredictError),
}

/// A running service. Dropping the handle without calling
/// [`ServiceHandle::shutdown`] leaves the workers running for the process
/// lifetime.
pub struct ServiceHandle {
    server: Arc<Server>,
    stop: Arc<AtomicBool>,
    addr: SocketAddr,
    workers: Vec<JoinHandle<()>>,
}

impl ServiceHandle {
    /// The actually bound address (useful with port 0).
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting requests and joins the workers.
    pub fn shutdown(self) {
        self.stop.store(true, Ordering::Relaxed);
        self.server.unblock();
        for worker in self.workers {
            let _ = worker.join();
        }
    }
}

/// Binds `address` (e.g. `127.0.0.1:0`) and serves the predictor wire
/// protocol with [`DEFAULT_WORKERS`] threads until shut down.
pub fn serve(address: &str, config: SurrogateConfig) -> Result<ServiceHandle, ServiceError> {
    serve_with_workers(address, config, DEFAULT_WORKERS)
}

pub fn serve_with_workers(
    address: &str,
    config: SurrogateConfig,
    workers: usize,
) -> Result<ServiceHandle, ServiceError> {
    let predictor = Arc::new(SurrogatePredictor::new(config)?);
    let server = Arc::new(Server::http(address).map_err(|e| ServiceError::Bind {
        address: address.to_string(),
        message: e.to_string(),
    })?);
    let addr = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| ServiceError::Bind {
            address: address.to_string(),
            message: "no IP listener".into(),
        })?;

    let workers = workers.max(1);
    let stop = Arc::new(AtomicBool::new(false));
    let handles = (0..workers)
        .map(|_| {
            let server = Arc::clone(&server);
            let predictor = Arc::clone(&predictor);
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || {
                // polling recv so every worker notices shutdown on its own
                while !stop.load(Ordering::Relaxed) {
                    match server.recv_timeout(Duration::from_millis(50)) {
                        Ok(Some(request)) => handle(request, &predictor),
                        Ok(None) => continue,
                        Err(_) => break,
                    }
                }
            })
        })
        .collect();

    Ok(ServiceHandle {
        server,
        stop,
        addr,
        workers: handles,
    })
}

fn json_header() -> Header {
    Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..]).expect("static header")
}

fn respond_json(request: Request, status: u16, body: String) {
    let response = Response::from_string(body)
        .with_status_code(status)
        .with_header(json_header());
    if let Err(e) = request.respond(response) {
        log::warn!("failed to send response: {e}");
    }
}

fn error_body(message: &str) -> String {
    serde_json::json!({ "error": message }).to_string()
}

fn handle(mut request: Request, predictor: &SurrogatePredictor) {
    let url = request.url().to_string();
    match (request.method(), url.as_str()) {
        (Method::Get, "/v1/health") => {
            let response = Response::from_string("ok").with_status_code(200);
            if let Err(e) = request.respond(response) {
                log::warn!("failed to send response: {e}");
            }
        }
        (Method::Post, "/v1/predict") => {
            let mut body = Vec::new();
            let read = request
                .as_reader()
                .take(MAX_BODY_BYTES as u64 + 1)
                .read_to_end(&mut body);
            if read.is_err() || body.len() > MAX_BODY_BYTES {
                respond_json(request, 400, error_body("unreadable or oversized body"));
                return;
            }
            match predict_body(&body, predictor) {
                Ok(response_body) => respond_json(request, 200, response_body),
                Err(message) => respond_json(request, 400, error_body(&message)),
            }
        }
        _ => respond_json(request, 404, error_body("no such route")),
    }
}

fn predict_body(body: &[u8], predictor: &SurrogatePredictor) -> Result<String, String> {
    let wire: PredictRequest =
        serde_json::from_slice(body).map_err(|e| format!("malformed request: {e}"))?;
    let (ambient, candidates) = wire.to_parts().map_err(|e| e.to_string())?;
    let prediction = predictor
        .predict(&ambient, &candidates)
        .map_err(|e| e.to_string())?;
    let response = PredictResponse {
        baseline: WireDistribution {
            mean: prediction.baseline.mean,
            std: prediction.baseline.std,
        },
        candidates: candidates
            .iter()
            .zip(prediction.candidates.iter())
            .map(|(candidate, dist)| WireCandidateResult {
                masker_id: candidate.masker_id.clone(),
                gain: candidate.digital_gain,
                mean: dist.mean,
                std: dist.std,
            })
            .collect(),
    };
    serde_json::to_string(&response).map_err(|e| e.to_string())
}
