//! Objectives evaluated by the BO loop: registered benchmarks and external
//! programs.
//!
//! External programs speak a line protocol over stdin/stdout. For every
//! evaluation the runner writes
//!
//! ```text
//! EVAL v1 <x_1> ... <x_D>
//! ```
//!
//! and the program answers with one line, either `OK <y>` or `ERR <message>`.
//! Only one request is in flight at a time and the process lives for the
//! whole run. Surrounding whitespace and CR line endings are ignored.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use crate::benchfns::Benchmark;
use crate::error::{Error, Result};

pub trait Objective: Send {
    /// Evaluates the objective at a point in raw coordinates.
    fn evaluate(&mut self, x: &[f64]) -> Result<f64>;
}

impl Objective for Benchmark {
    fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        self.eval(x)
    }
}

/// How to obtain a fresh objective for each replication.
#[derive(Debug, Clone)]
pub enum ObjectiveSpec {
    Benchmark(Benchmark),
    External { command: Vec<String>, timeout: Duration },
}

impl ObjectiveSpec {
    pub fn open(&self) -> Result<Box<dyn Objective>> {
        Ok(match self {
            ObjectiveSpec::Benchmark(b) => Box::new(b.clone()),
            ObjectiveSpec::External { command, timeout } => Box::new(ExternalObjective::spawn(command, *timeout)?),
        })
    }
}

/// A child process answering `EVAL` requests.
pub struct ExternalObjective {
    child: Child,
    stdin: ChildStdin,
    replies: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl ExternalObjective {
    pub fn spawn(command: &[String], timeout: Duration) -> Result<Self> {
        let (program, args) = command.split_first().ok_or_else(|| Error::Config("empty objective command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Objective(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, replies) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ExternalObjective { child, stdin, replies, timeout })
    }
}

/// Parses one reply line.
pub fn parse_reply(line: &str) -> Result<f64> {
    let line = line.trim();
    if let Some(rest) = line.strip_prefix("OK") {
        if rest.is_empty() || rest.starts_with(char::is_whitespace) {
            let v = rest.trim();
            return v.parse::<f64>().map_err(|_| Error::Objective(format!("malformed value in reply `{line}`")));
        }
    }
    if let Some(rest) = line.strip_prefix("ERR") {
        if rest.is_empty() || rest.starts_with(char::is_whitespace) {
            return Err(Error::Objective(format!("objective reported an error: {}", rest.trim())));
        }
    }
    Err(Error::Objective(format!("malformed reply `{line}`")))
}

/// Formats one request line (without the newline).
pub fn format_request(x: &[f64]) -> String {
    let mut s = String::from("EVAL v1");
    for v in x {
        s.push(' ');
        s.push_str(&v.to_string());
    }
    s
}

impl Objective for ExternalObjective {
    fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        let request = format_request(x);
        writeln!(self.stdin, "{request}")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| Error::Objective(format!("cannot write to objective process: {e}")))?;
        loop {
            return match self.replies.recv_timeout(self.timeout) {
                Ok(Ok(line)) if line.trim().is_empty() => continue,
                Ok(Ok(line)) => parse_reply(&line),
                Ok(Err(e)) => Err(Error::Objective(format!("reading objective reply: {e}"))),
                Err(RecvTimeoutError::Timeout) => {
                    Err(Error::Objective(format!("no reply within {:.1} s to `{request}`", self.timeout.as_secs_f64())))
                }
                Err(RecvTimeoutError::Disconnected) => {
                    let status = self.child.try_wait().ok().flatten();
                    Err(Error::Objective(match status {
                        Some(s) => format!("objective process exited ({s}) before replying"),
                        None => "objective process closed its output".to_string(),
                    }))
                }
            };
        }
    }
}

impl Drop for ExternalObjective {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replies() {
        assert_eq!(parse_reply("OK 1.5").unwrap(), 1.5);
        assert_eq!(parse_reply("  OK   -2e-3 \r").unwrap(), -2e-3);
        assert!(matches!(parse_reply("ERR oom"), Err(Error::Objective(m)) if m.contains("oom")));
        for bad in ["OK", "OKAY 1", "1.0", "OK abc", "ERROR x", ""] {
            assert!(parse_reply(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn requests_round_trip_exactly() {
        let x = [0.1, -1e-300, 1.0 / 3.0, 12345.678];
        let line = format_request(&x);
        let parts: Vec<&str> = line.split(' ').collect();
        assert_eq!(&parts[..2], &["EVAL", "v1"]);
        let back: Vec<f64> = parts[2..].iter().map(|s| s.parse().unwrap()).collect();
        assert_eq!(back, x);
    }
}
