//! Newline-delimited JSON protocol serving an [`Environment`] to an external
//! trainer.
//!
//! ```text
//! {"type":"reset","seed":7}   -> {"type":"obs","vector":[...],"done":false}
//! {"type":"act","index":2}    -> {"type":"step","reward":3.8,"vector":[...],"done":false}
//! {"type":"close"}
//! ```
//! Malformed requests get `{"type":"error",...}` and the connection stays
//! open. Acting before a reset or after `done` is an ordering violation: the
//! error reply is marked fatal and the connection is dropped.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::env::{ActionChoice, Environment};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Request {
    Reset { seed: u64 },
    Act { index: usize },
    Close,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Response {
    Obs { vector: Vec<f64>, done: bool },
    Step { reward: f64, vector: Vec<f64>, done: bool },
    Error { message: String, fatal: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    /// Drop this connection; the server may accept another.
    Reset,
    /// Client asked to close.
    Close,
}

/// Protocol state for one connection.
pub struct Session {
    cfg: ScenarioConfig,
    env: Option<Environment>,
    done: bool,
}

impl Session {
    pub fn new(cfg: ScenarioConfig) -> Self {
        Session {
            cfg,
            env: None,
            done: false,
        }
    }

    pub fn handle_line(&mut self, line: &str) -> (Option<Response>, Flow) {
        let req: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => return (Some(error(format!("malformed request: {e}"), false)), Flow::Continue),
        };
        match self.handle(req) {
            Ok((resp, flow)) => (resp, flow),
            Err(Error::Protocol(msg)) => (Some(error(msg, true)), Flow::Reset),
            Err(e) => (Some(error(e.to_string(), false)), Flow::Continue),
        }
    }

    fn handle(&mut self, req: Request) -> Result<(Option<Response>, Flow)> {
        match req {
            Request::Close => Ok((None, Flow::Close)),
            Request::Reset { seed } => {
                let env = self.env.insert(Environment::new(&self.cfg, seed, false)?);
                let obs = env.reset()?;
                self.done = obs.is_none();
                let vector = obs.map(|o| env.observation_vector(&o)).unwrap_or_default();
                Ok((
                    Some(Response::Obs {
                        vector,
                        done: self.done,
                    }),
                    Flow::Continue,
                ))
            }
            Request::Act { index } => {
                let Some(env) = self.env.as_mut() else {
                    return Err(Error::Protocol("act before reset".into()));
                };
                if self.done {
                    return Err(Error::Protocol("act after episode end; send reset".into()));
                }
                let step = env.step(ActionChoice::new(index))?;
                self.done = step.done;
                let vector = step
                    .next_observation
                    .map(|o| env.observation_vector(&o))
                    .unwrap_or_default();
                Ok((
                    Some(Response::Step {
                        reward: step.reward,
                        vector,
                        done: step.done,
                    }),
                    Flow::Continue,
                ))
            }
        }
    }
}

fn error(message: String, fatal: bool) -> Response {
    Response::Error { message, fatal }
}

/// Serves one connection until `close`, EOF, or an ordering violation.
pub fn serve_connection<R: BufRead, W: Write>(cfg: &ScenarioConfig, input: R, mut output: W) -> Result<Flow> {
    let mut session = Session::new(cfg.clone());
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (resp, flow) = session.handle_line(&line);
        if let Some(resp) = resp {
            serde_json::to_writer(&mut output, &resp)?;
            output.write_all(b"\n")?;
            output.flush()?;
        }
        if flow != Flow::Continue {
            return Ok(flow);
        }
    }
    Ok(Flow::Close)
}
