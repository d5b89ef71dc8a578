//! Adapter for forecasters running in a separate process.
//!
//! The command is run through `sh -c "exec ..."`. Requests are serialized
//! over one process; a timeout or crash kills it and the next request starts
//! a fresh one, so a failure only affects the trajectory that hit it.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use super::wire::{self, Record};
use super::{ForecastError, ForecastRequest, ForecastResponse, Forecaster, TrainingData};
use crate::error::{Error, Result};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Session {
    fn spawn(command: &str, init: &wire::Init) -> std::io::Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(format!("exec {command}"))
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut session = Session {
            child,
            stdin,
            lines,
        };
        session.send(&Record::Init(init.clone()))?;
        Ok(session)
    }

    fn send(&mut self, record: &Record) -> std::io::Result<()> {
        let mut line = record.to_line();
        line.push('\n');
        self.stdin.write_all(line.as_bytes())?;
        self.stdin.flush()
    }

    fn exit_message(&mut self) -> String {
        // Give a dying process a moment to be reaped so the status is accurate.
        let deadline = Instant::now() + Duration::from_millis(200);
        loop {
            match self.child.try_wait() {
                Ok(Some(status)) => return status.to_string(),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                Ok(None) => return "closed its output".into(),
                Err(e) => return e.to_string(),
            }
        }
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        if let Ok(None) = self.child.try_wait() {
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}

struct State {
    session: Option<Session>,
    next_id: u64,
}

pub struct ExternalForecaster {
    command: String,
    timeout: Duration,
    init: Option<wire::Init>,
    state: Mutex<State>,
}

impl ExternalForecaster {
    pub fn new(command: impl Into<String>, timeout: Duration) -> Self {
        ExternalForecaster {
            command: command.into(),
            timeout,
            init: None,
            state: Mutex::new(State {
                session: None,
                next_id: 0,
            }),
        }
    }

    fn exchange(
        &self,
        state: &mut State,
        request: &ForecastRequest,
    ) -> Result<ForecastResponse, ForecastError> {
        let init = self.init.as_ref().ok_or(ForecastError::Unfitted)?;
        let id = state.next_id;
        state.next_id += 1;
        let mut session = match state.session.take() {
            Some(s) => s,
            None => Session::spawn(&self.command, init).map_err(|e| {
                ForecastError::ProcessExit(format!("cannot start `{}`: {e}", self.command))
            })?,
        };
        let line = self.roundtrip(&mut session, id, request)?;
        // The stream is still in step after a bad record, so keep the process.
        state.session = Some(session);
        parse_response(&line, id, request)
    }

    /// Sends one request and waits for one line. On failure the session is
    /// dropped by the caller, which kills the process.
    fn roundtrip(
        &self,
        session: &mut Session,
        id: u64,
        request: &ForecastRequest,
    ) -> Result<String, ForecastError> {
        let record = Record::Predict(wire::Predict {
            id,
            context: wire::rows_of(request.context.view()),
        });
        if let Err(e) = session.send(&record) {
            return Err(ForecastError::ProcessExit(format!(
                "{} (write failed: {e})",
                session.exit_message()
            )));
        }
        let deadline = Instant::now() + self.timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match session.lines.recv_timeout(left) {
                Ok(Ok(line)) if line.trim().is_empty() => continue,
                Ok(Ok(line)) => return Ok(line),
                Ok(Err(e)) => {
                    return Err(ForecastError::ProcessExit(format!(
                        "{} (read failed: {e})",
                        session.exit_message()
                    )))
                }
                Err(RecvTimeoutError::Timeout) => {
                    return Err(ForecastError::Timeout {
                        id,
                        after: self.timeout,
                    })
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(ForecastError::ProcessExit(session.exit_message()))
                }
            }
        }
    }
}

fn parse_response(
    line: &str,
    id: u64,
    request: &ForecastRequest,
) -> Result<ForecastResponse, ForecastError> {
    let protocol = |message: String| ForecastError::Protocol {
        id: Some(id),
        message,
    };
    let record =
        Record::from_line(line).map_err(|e| protocol(format!("unreadable record: {e}")))?;
    let Record::Prediction(pred) = record else {
        return Err(protocol(format!(
            "expected a prediction record, got `{}`",
            record.type_name()
        )));
    };
    if pred.id != id {
        return Err(protocol(format!(
            "response id {} does not match request",
            pred.id
        )));
    }
    let expected = (request.horizon, request.context.ncols());
    let values = pred.to_array().map_err(|actual| {
        protocol(format!(
            "expected {expected:?} values, got ragged {actual:?}"
        ))
    })?;
    if values.dim() != expected {
        return Err(protocol(format!(
            "expected {} rows of {} values, got {} rows of {}",
            expected.0,
            expected.1,
            values.nrows(),
            values.ncols()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ForecastError::NonFinite);
    }
    Ok(ForecastResponse::new(values))
}

impl Forecaster for ExternalForecaster {
    fn name(&self) -> String {
        format!("extern:{}", self.command)
    }

    /// Starts the process and sends the init record. Training happens on the
    /// client side, if at all.
    fn fit(&mut self, data: &TrainingData<'_>) -> Result<()> {
        let p = data.params;
        let init = wire::Init {
            context_len: data.windows.context_len,
            horizon: data.windows.horizon,
            n: p.n,
            channels: 2,
            k: p.k,
            epsilon: p.epsilon,
            adjacency: data.adjacency.rows(),
        };
        let state = self.state.get_mut().unwrap_or_else(|e| e.into_inner());
        // Dropping an old session kills its process.
        state.session = None;
        let session = Session::spawn(&self.command, &init)
            .map_err(|e| Error::config("model", format!("cannot start `{}`: {e}", self.command)))?;
        state.session = Some(session);
        self.init = Some(init);
        Ok(())
    }

    fn predict(&self, request: &ForecastRequest) -> Result<ForecastResponse, ForecastError> {
        let mut state = self.state.lock().unwrap_or_else(|e| e.into_inner());
        self.exchange(&mut state, request)
    }

    fn concurrent(&self) -> bool {
        false
    }
}
