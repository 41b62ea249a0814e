//! Out-of-process model adapters.
//!
//! The wire format is one JSON object per line in each direction:
//!
//! ```text
//! -> {"op":"generate","payload":{...},"id":7}
//! <- {"op":"result","payload":{"summary":"..."},"id":7}
//! ```
//!
//! Requests use the ops `capabilities`, `train`, `generate` and `score`.
//! Replies echo the request id with op `result` or `error` (the payload of
//! an error is a message string). Transports are a child process's stdio
//! or a Unix socket.

use std::collections::BTreeSet;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    config_hash, lead_baseline, BackendError, Capabilities, GenerationParams, ModelHandle, SummarizerBackend,
    SummarizerSpec,
};
use crate::corpus::DatasetSplit;
use crate::Language;

pub const OP_CAPABILITIES: &str = "capabilities";
pub const OP_TRAIN: &str = "train";
pub const OP_GENERATE: &str = "generate";
pub const OP_SCORE: &str = "score";
pub const OP_RESULT: &str = "result";
pub const OP_ERROR: &str = "error";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub op: String,
    #[serde(default)]
    pub payload: Value,
    pub id: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapabilitiesReply {
    pub name: String,
    pub trainable: bool,
    pub languages: BTreeSet<Language>,
    #[serde(default = "one")]
    pub max_parallel: usize,
    /// Generation settings the adapter applies on its own (beam size and
    /// the like); recorded verbatim in run records.
    #[serde(default)]
    pub defaults: Value,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub id: String,
    pub article: String,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRequest {
    pub spec: SummarizerSpec,
    pub language: Language,
    pub records: Vec<TrainRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReply {
    pub checkpoint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub model_id: String,
    pub checkpoint: Option<String>,
    pub language: Language,
    pub article: String,
    pub max_tokens: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateReply {
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub model_id: String,
    pub checkpoint: Option<String>,
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReply {
    pub scores: Vec<f64>,
}

/// A bidirectional line channel to an adapter.
pub trait Transport: Send {
    /// Sends one line and waits for the one-line reply.
    fn exchange(&mut self, line: &str) -> io::Result<String>;
}

pub struct LineTransport<R, W> {
    reader: R,
    writer: W,
    child: Option<Child>,
}

impl<R: BufRead + Send, W: Write + Send> LineTransport<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        LineTransport { reader, writer, child: None }
    }
}

impl<R: BufRead + Send, W: Write + Send> Transport for LineTransport<R, W> {
    fn exchange(&mut self, line: &str) -> io::Result<String> {
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        let mut reply = String::new();
        if self.reader.read_line(&mut reply)? == 0 {
            return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "adapter closed the connection"));
        }
        Ok(reply)
    }
}

impl<R, W> Drop for LineTransport<R, W> {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Starts `command` (whitespace-separated program and arguments) and talks
/// to it over stdin/stdout. Its stderr is inherited.
pub fn spawn(command: &str) -> io::Result<Box<dyn Transport>> {
    let mut parts = command.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "empty adapter command"))?;
    let mut child = Command::new(program)
        .args(parts)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()?;
    let stdin = child.stdin.take().expect("piped stdin");
    let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
    let mut t = LineTransport::new(stdout, stdin);
    t.child = Some(child);
    Ok(Box::new(t))
}

#[cfg(unix)]
pub fn connect_unix(path: impl AsRef<Path>) -> io::Result<Box<dyn Transport>> {
    let stream = std::os::unix::net::UnixStream::connect(path)?;
    let reader = BufReader::new(stream.try_clone()?);
    Ok(Box::new(LineTransport::new(reader, stream)))
}

/// Request/response client over a [`Transport`]. Calls are serialized.
pub struct AdapterClient {
    transport: Mutex<Box<dyn Transport>>,
    next_id: AtomicU64,
}

impl AdapterClient {
    pub fn new(transport: Box<dyn Transport>) -> Self {
        AdapterClient { transport: Mutex::new(transport), next_id: AtomicU64::new(1) }
    }

    pub fn spawn(command: &str) -> Result<Self, BackendError> {
        spawn(command)
            .map(Self::new)
            .map_err(|e| BackendError::BackendUnavailable(format!("cannot start `{command}`: {e}")))
    }

    #[cfg(unix)]
    pub fn connect(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref();
        connect_unix(path)
            .map(Self::new)
            .map_err(|e| BackendError::BackendUnavailable(format!("cannot connect to {}: {e}", path.display())))
    }

    pub fn call(&self, op: &str, payload: Value) -> Result<Value, BackendError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let request = Envelope { op: op.to_string(), payload, id };
        let line = serde_json::to_string(&request).expect("envelope serializes");
        let reply = {
            let mut transport = self.transport.lock().unwrap_or_else(|p| p.into_inner());
            transport
                .exchange(&line)
                .map_err(|e| BackendError::BackendUnavailable(e.to_string()))?
        };
        let reply: Envelope = serde_json::from_str(reply.trim_end())
            .map_err(|e| BackendError::Protocol(format!("malformed reply: {e}")))?;
        if reply.id != id {
            return Err(BackendError::Protocol(format!("reply id {} does not match request id {id}", reply.id)));
        }
        match reply.op.as_str() {
            OP_RESULT => Ok(reply.payload),
            OP_ERROR => Err(BackendError::Adapter(
                reply.payload.as_str().map_or_else(|| reply.payload.to_string(), str::to_owned),
            )),
            other => Err(BackendError::Protocol(format!("unexpected reply op `{other}`"))),
        }
    }

    pub fn call_typed<Req: Serialize, Rep: DeserializeOwned>(&self, op: &str, req: &Req) -> Result<Rep, BackendError> {
        let payload = serde_json::to_value(req).expect("request serializes");
        serde_json::from_value(self.call(op, payload)?)
            .map_err(|e| BackendError::Protocol(format!("bad `{op}` reply payload: {e}")))
    }

    pub fn capabilities(&self) -> Result<CapabilitiesReply, BackendError> {
        self.call_typed(OP_CAPABILITIES, &Value::Null)
    }
}

/// A summarizer served by an adapter.
pub struct AdapterBackend {
    client: Arc<AdapterClient>,
    info: CapabilitiesReply,
    model_id: String,
    language: Language,
}

impl AdapterBackend {
    /// Queries the adapter's capabilities and binds it to a model id.
    pub fn connect(client: Arc<AdapterClient>, model_id: impl Into<String>, language: Language) -> Result<Self, BackendError> {
        let info = client.capabilities()?;
        if !info.languages.contains(&language) {
            return Err(BackendError::InvalidSpec(format!("adapter `{}` does not support {language}", info.name)));
        }
        Ok(AdapterBackend { client, info, model_id: model_id.into(), language })
    }

    pub fn client(&self) -> &Arc<AdapterClient> {
        &self.client
    }

    /// Adapter-reported defaults, for run records.
    pub fn defaults(&self) -> &Value {
        &self.info.defaults
    }
}

impl SummarizerBackend for AdapterBackend {
    fn name(&self) -> &str {
        &self.info.name
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            trainable: self.info.trainable,
            languages: self.info.languages.clone(),
            max_parallel: self.info.max_parallel.max(1),
        }
    }

    fn base_handle(&self) -> ModelHandle {
        ModelHandle {
            backend: self.info.name.clone(),
            model_id: self.model_id.clone(),
            checkpoint: None,
            spec_hash: None,
        }
    }

    fn train(&self, dataset: &DatasetSplit, spec: &SummarizerSpec) -> Result<ModelHandle, BackendError> {
        let records = dataset
            .records
            .iter()
            .map(|r| TrainRecord {
                id: r.id.clone(),
                article: r.article.clone(),
                summary: r.summary.clone().unwrap_or_default(),
            })
            .collect();
        let req = TrainRequest { spec: spec.clone(), language: dataset.language, records };
        let reply: TrainReply = self.client.call_typed(OP_TRAIN, &req)?;
        Ok(ModelHandle {
            backend: self.info.name.clone(),
            model_id: spec.model_id.clone(),
            checkpoint: Some(reply.checkpoint),
            spec_hash: None,
        })
    }

    fn generate(&self, handle: &ModelHandle, article: &str, params: &GenerationParams) -> Result<String, BackendError> {
        let req = GenerateRequest {
            model_id: handle.model_id.clone(),
            checkpoint: handle.checkpoint.clone(),
            language: self.language,
            article: article.to_string(),
            max_tokens: params.max_tokens,
            seed: params.seed,
        };
        let reply: GenerateReply = self.client.call_typed(OP_GENERATE, &req)?;
        Ok(reply.summary)
    }
}

/// Server side of the protocol.
pub trait AdapterHandler {
    fn handle(&mut self, op: &str, payload: Value) -> Result<Value, String>;
}

/// Answers requests read from `reader` until end of input.
pub fn serve<R: BufRead, W: Write>(reader: R, mut writer: W, handler: &mut dyn AdapterHandler) -> io::Result<()> {
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<Envelope>(&line) {
            Ok(req) => match handler.handle(&req.op, req.payload) {
                Ok(payload) => Envelope { op: OP_RESULT.into(), payload, id: req.id },
                Err(msg) => Envelope { op: OP_ERROR.into(), payload: Value::String(msg), id: req.id },
            },
            Err(e) => Envelope { op: OP_ERROR.into(), payload: Value::String(format!("malformed request: {e}")), id: 0 },
        };
        serde_json::to_writer(&mut writer, &reply)?;
        writer.write_all(b"\n")?;
        writer.flush()?;
    }
    Ok(())
}

/// Deterministic adapter for tests and dry runs. Training records a
/// checkpoint name derived from the request; generation is the lead
/// baseline; scoring favours earlier sentences.
#[derive(Debug, Default)]
pub struct MockAdapter {
    pub trained: Vec<String>,
}

impl MockAdapter {
    pub const NAME: &'static str = "mock-adapter";

    fn dispatch(&mut self, op: &str, payload: Value) -> Result<Value, String> {
        fn parse<T: DeserializeOwned>(v: Value) -> Result<T, String> {
            serde_json::from_value(v).map_err(|e| e.to_string())
        }
        let reply = match op {
            OP_CAPABILITIES => serde_json::to_value(CapabilitiesReply {
                name: Self::NAME.into(),
                trainable: true,
                languages: BTreeSet::from(Language::ALL),
                max_parallel: 1,
                defaults: serde_json::json!({ "decoding": "lead" }),
            }),
            OP_TRAIN => {
                let req: TrainRequest = parse(payload)?;
                if req.records.is_empty() {
                    return Err("no training records".into());
                }
                let checkpoint = format!("mock-{}", &config_hash(&req)[..12]);
                self.trained.push(checkpoint.clone());
                serde_json::to_value(TrainReply { checkpoint })
            }
            OP_GENERATE => {
                let req: GenerateRequest = parse(payload)?;
                let params = GenerationParams { max_tokens: req.max_tokens, seed: req.seed };
                let summary = lead_baseline(&req.article, &params, req.language).map_err(|e| e.to_string())?;
                serde_json::to_value(GenerateReply { summary })
            }
            OP_SCORE => {
                let req: ScoreRequest = parse(payload)?;
                let scores = (0..req.sentences.len()).map(|i| 1.0 / (i as f64 + 1.0)).collect();
                serde_json::to_value(ScoreReply { scores })
            }
            other => return Err(format!("unknown op `{other}`")),
        };
        reply.map_err(|e| e.to_string())
    }
}

impl AdapterHandler for MockAdapter {
    fn handle(&mut self, op: &str, payload: Value) -> Result<Value, String> {
        self.dispatch(op, payload)
    }
}
