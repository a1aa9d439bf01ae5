//! Line-oriented JSON evaluator running in a child process.
//!
//! Each request is `{"genome":[…]}` on the child's stdin; each reply is one line
//! `{"objectives":[…],"violations":[…],"aux":{…}}` with objectives in their
//! reported orientation. Timeouts and malformed replies yield the sentinel
//! evaluation; a timed-out child is restarted so later replies stay in step.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use exopt::base::{Bounds, Evaluation, ObjectiveSpec, Problem, SENTINEL_VIOLATION};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Serialize)]
struct Request<'a> {
    genome: &'a [f64],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub objectives: Vec<f64>,
    #[serde(default)]
    pub violations: Vec<f64>,
    #[serde(default)]
    pub aux: BTreeMap<String, f64>,
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Session {
    fn spawn(command: &[String]) -> Result<Self, HarnessError> {
        let mut child = Command::new(&command[0])
            .args(&command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| HarnessError::External(format!("cannot start {:?}: {e}", command[0])))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(l) => {
                        if tx.send(l).is_err() {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
        });
        Ok(Self { child, stdin, lines: rx })
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct ExternalProblem {
    command: Vec<String>,
    bounds: Bounds<f64>,
    objectives: ObjectiveSpec,
    scales: Vec<f64>,
    timeout: Duration,
    session: Mutex<Option<Session>>,
}

impl std::fmt::Debug for ExternalProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalProblem").field("command", &self.command).field("timeout", &self.timeout).finish()
    }
}

impl ExternalProblem {
    /// `scales` holds one entry per declared constraint; a solver slot is appended.
    pub fn new(
        command: Vec<String>,
        bounds: Bounds<f64>,
        objectives: ObjectiveSpec,
        scales: Vec<f64>,
        timeout: Duration,
    ) -> Result<Self, HarnessError> {
        if command.is_empty() {
            return Err(HarnessError::Config("external evaluator command is empty".into()));
        }
        let session = Session::spawn(&command)?;
        let mut scales = scales;
        scales.push(1.0);
        Ok(Self { command, bounds, objectives, scales, timeout, session: Mutex::new(Some(session)) })
    }

    pub fn constraint_count(&self) -> usize {
        self.scales.len() - 1
    }

    pub fn sentinel(&self) -> Evaluation<f64> {
        let mut violations = vec![0.0; self.scales.len()];
        *violations.last_mut().expect("solver slot") = SENTINEL_VIOLATION;
        let objectives = vec![SENTINEL_VIOLATION; self.objectives.count()];
        let mut aux = BTreeMap::new();
        aux.insert("solved".to_string(), 0.0);
        Evaluation::new(objectives, violations, &self.scales).with_aux(aux)
    }

    fn exchange(&self, genome: &[f64]) -> Result<Reply, String> {
        let mut guard = self.session.lock().unwrap_or_else(|e| e.into_inner());
        if guard.is_none() {
            *guard = Some(Session::spawn(&self.command).map_err(|e| e.to_string())?);
        }
        let session = guard.as_mut().expect("session present");
        let line = serde_json::to_string(&Request { genome }).expect("request serializes");
        let sent = writeln!(session.stdin, "{line}").and_then(|_| session.stdin.flush());
        if let Err(e) = sent {
            *guard = None;
            return Err(format!("write failed: {e}"));
        }
        match session.lines.recv_timeout(self.timeout) {
            Ok(reply) => serde_json::from_str::<Reply>(&reply).map_err(|e| format!("malformed reply: {e}")),
            Err(RecvTimeoutError::Timeout) => {
                *guard = None;
                Err("timeout".into())
            }
            Err(RecvTimeoutError::Disconnected) => {
                *guard = None;
                Err("evaluator exited".into())
            }
        }
    }

    fn to_evaluation(&self, reply: Reply) -> Option<Evaluation<f64>> {
        if reply.objectives.len() != self.objectives.count() || reply.violations.len() != self.constraint_count() {
            return None;
        }
        if reply.objectives.iter().chain(&reply.violations).any(|v| !v.is_finite()) {
            return None;
        }
        let mut violations = reply.violations;
        violations.push(0.0);
        let mut aux = reply.aux;
        aux.insert("solved".to_string(), 1.0);
        let canonical = self.objectives.to_canonical(&reply.objectives);
        Some(Evaluation::new(canonical, violations, &self.scales).with_aux(aux))
    }
}

impl Problem<f64> for ExternalProblem {
    fn bounds(&self) -> &Bounds<f64> {
        &self.bounds
    }

    fn objectives(&self) -> &ObjectiveSpec {
        &self.objectives
    }

    fn evaluate(&self, genome: &[f64]) -> Evaluation<f64> {
        match self.exchange(genome) {
            Ok(reply) => self.to_evaluation(reply).unwrap_or_else(|| self.sentinel()),
            Err(_) => self.sentinel(),
        }
    }
}

/// Behaviour switches for the bundled stdio evaluator, used to exercise the protocol.
#[derive(Debug, Clone, Copy, Default)]
pub struct ServeOptions {
    pub delay_ms: u64,
    /// Answer every n-th request with an unparsable line (0 = never).
    pub malformed_every: usize,
}

/// Serves `problem` over the line protocol on the given streams until EOF.
pub fn serve<P: Problem<f64> + ?Sized>(
    problem: &P,
    input: impl BufRead,
    mut output: impl Write,
    options: ServeOptions,
) -> std::io::Result<()> {
    #[derive(Deserialize)]
    struct Incoming {
        genome: Vec<f64>,
    }
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if options.delay_ms > 0 {
            std::thread::sleep(Duration::from_millis(options.delay_ms));
        }
        if options.malformed_every > 0 && (k + 1) % options.malformed_every == 0 {
            writeln!(output, "not json")?;
            output.flush()?;
            continue;
        }
        let reply = match serde_json::from_str::<Incoming>(&line) {
            Ok(req) => {
                let e = problem.evaluate(&req.genome);
                let objectives = problem.objectives().to_reported(&e.objectives);
                serde_json::to_string(&Reply { objectives, violations: e.violations, aux: e.aux })
                    .expect("reply serializes")
            }
            Err(_) => "{}".to_string(),
        };
        writeln!(output, "{reply}")?;
        output.flush()?;
    }
    Ok(())
}
