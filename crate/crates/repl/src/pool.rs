use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, Receiver, RecvTimeoutError, Sender, TrySendError};
use forge_core::{CompileKind, CompileVerdict, DiagMessage, MessageSeverity};

use crate::checker::{compose_proof, StatementChecker};
use crate::classify::classify_response;
use crate::config::PoolConfig;
use crate::error::ReplError;
use crate::launcher::Launcher;
use crate::protocol::{ReplRequest, ReplResponse, ResponseFixture};

struct Job {
    cmd: String,
    expects_proof: bool,
    timeout: Duration,
    reply: Sender<CompileVerdict>,
}

/// Pending verdict of a submitted job.
pub struct Ticket {
    rx: Receiver<CompileVerdict>,
}

impl Ticket {
    pub fn wait(self) -> Result<CompileVerdict, ReplError> {
        self.rx.recv().map_err(|_| ReplError::ShutDown)
    }
}

struct Shared {
    launcher: Arc<dyn Launcher>,
    config: PoolConfig,
    env_tag: String,
    pids: Mutex<Vec<Option<u32>>>,
    recorded: AtomicU64,
}

/// A fixed set of REPL workers fed from one bounded queue.
pub struct ReplPool {
    shared: Arc<Shared>,
    tx: Mutex<Option<Sender<Job>>>,
    handles: Mutex<Vec<JoinHandle<()>>>,
}

impl std::fmt::Debug for ReplPool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReplPool")
            .field("launcher", &self.shared.launcher)
            .field("workers", &self.shared.config.workers)
            .field("env_tag", &self.shared.env_tag)
            .finish()
    }
}

impl ReplPool {
    /// Checks the prover version, starts every worker and waits until each
    /// has imported the header.
    pub fn spawn(launcher: Arc<dyn Launcher>, config: PoolConfig) -> Result<Self, ReplError> {
        config.validate()?;
        let found = launcher.version()?;
        if let Some(expected) = &config.env_tag {
            if &found != expected {
                return Err(ReplError::VersionMismatch { found, expected: expected.clone() });
            }
        }
        if let Some(dir) = &config.record_fixtures {
            std::fs::create_dir_all(dir).map_err(|source| ReplError::Io { path: dir.clone(), source })?;
        }
        let shared = Arc::new(Shared {
            launcher,
            env_tag: found,
            pids: Mutex::new(vec![None; config.workers]),
            recorded: AtomicU64::new(0),
            config,
        });
        let (tx, rx) = bounded::<Job>(shared.config.capacity());
        let (ready_tx, ready_rx) = bounded::<Result<(), ReplError>>(shared.config.workers);
        let mut handles = Vec::new();
        for id in 0..shared.config.workers {
            let (shared, rx, ready) = (Arc::clone(&shared), rx.clone(), ready_tx.clone());
            let handle = std::thread::Builder::new()
                .name(format!("repl-worker-{id}"))
                .spawn(move || worker_main(id, shared, rx, ready))
                .map_err(|e| ReplError::Startup(e.to_string()))?;
            handles.push(handle);
        }
        drop(ready_tx);
        let pool = ReplPool { shared, tx: Mutex::new(Some(tx)), handles: Mutex::new(handles) };
        for _ in 0..pool.shared.config.workers {
            match ready_rx.recv() {
                Ok(Ok(())) => {}
                Ok(Err(e)) => {
                    pool.shutdown();
                    return Err(e);
                }
                Err(_) => {
                    pool.shutdown();
                    return Err(ReplError::Startup("worker exited during startup".into()));
                }
            }
        }
        log::info!("repl pool ready: {} workers, prover {}", pool.shared.config.workers, pool.shared.env_tag);
        Ok(pool)
    }

    pub fn config(&self) -> &PoolConfig {
        &self.shared.config
    }

    /// Process ids of the live worker subprocesses.
    pub fn worker_pids(&self) -> Vec<u32> {
        self.shared.pids.lock().expect("pid lock").iter().flatten().copied().collect()
    }

    fn job(&self, cmd: String, expects_proof: bool) -> (Job, Ticket) {
        let (reply, rx) = bounded(1);
        let timeout =
            if expects_proof { self.shared.config.proof_timeout() } else { self.shared.config.statement_timeout() };
        (Job { cmd, expects_proof, timeout, reply }, Ticket { rx })
    }

    /// Queues a command, blocking while the queue is full.
    pub fn submit(&self, cmd: impl Into<String>, expects_proof: bool) -> Result<Ticket, ReplError> {
        let (job, ticket) = self.job(cmd.into(), expects_proof);
        let tx = self.tx.lock().expect("tx lock").clone().ok_or(ReplError::ShutDown)?;
        tx.send(job).map_err(|_| ReplError::ShutDown)?;
        Ok(ticket)
    }

    /// Queues a command or fails with `Busy` when the queue is full.
    pub fn try_submit(&self, cmd: impl Into<String>, expects_proof: bool) -> Result<Ticket, ReplError> {
        let (job, ticket) = self.job(cmd.into(), expects_proof);
        let guard = self.tx.lock().expect("tx lock");
        let tx = guard.as_ref().ok_or(ReplError::ShutDown)?;
        match tx.try_send(job) {
            Ok(()) => Ok(ticket),
            Err(TrySendError::Full(_)) => Err(ReplError::Busy),
            Err(TrySendError::Disconnected(_)) => Err(ReplError::ShutDown),
        }
    }

    /// Stops accepting jobs, lets workers drain the queue and waits for them.
    pub fn shutdown(&self) {
        self.tx.lock().expect("tx lock").take();
        let handles = std::mem::take(&mut *self.handles.lock().expect("handles lock"));
        for h in handles {
            let _ = h.join();
        }
    }
}

impl Drop for ReplPool {
    fn drop(&mut self) {
        self.shutdown();
    }
}

impl StatementChecker for ReplPool {
    fn check_statement(&self, text: &str) -> Result<CompileVerdict, ReplError> {
        self.submit(text, false)?.wait()
    }

    fn check_proof(&self, statement: &str, proof: &str) -> Result<CompileVerdict, ReplError> {
        let full = compose_proof(statement, proof)?;
        self.submit(full, true)?.wait()
    }

    fn env_tag(&self) -> String {
        self.shared.env_tag.clone()
    }
}

enum Event {
    Value(serde_json::Value),
    Closed(String),
}

struct Process {
    child: Child,
    stdin: ChildStdin,
    events: Receiver<Event>,
}

impl Process {
    fn start(shared: &Shared) -> Result<Self, ReplError> {
        let mut cmd = shared.launcher.command();
        cmd.stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
        let program = Path::new(cmd.get_program()).to_path_buf();
        let mut child = cmd.spawn().map_err(|source| ReplError::Spawn { program, source })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let stderr = child.stderr.take().expect("piped stderr");
        let (tx, events) = bounded(4);
        std::thread::spawn(move || {
            let stream = serde_json::Deserializer::from_reader(BufReader::new(stdout)).into_iter::<serde_json::Value>();
            for item in stream {
                match item {
                    Ok(v) => {
                        if tx.send(Event::Value(v)).is_err() {
                            return;
                        }
                    }
                    Err(e) if e.is_eof() => break,
                    Err(e) => {
                        let _ = tx.send(Event::Closed(format!("unreadable output: {e}")));
                        return;
                    }
                }
            }
            let _ = tx.send(Event::Closed("process exited".into()));
        });
        let pid = child.id();
        std::thread::spawn(move || {
            for line in BufReader::new(stderr).lines().map_while(Result::ok) {
                log::debug!("repl[{pid}] stderr: {line}");
            }
        });
        let mut p = Process { child, stdin, events };
        let header = ReplRequest { cmd: shared.config.header.clone(), env: None };
        let startup = shared.config.startup_timeout();
        let result = p.request(&header, startup);
        match result {
            Ok(resp)
                if resp.env.is_some() && !resp.diagnostics().iter().any(|m| m.severity == MessageSeverity::Error) =>
            {
                Ok(p)
            }
            Ok(resp) => {
                p.kill();
                Err(ReplError::Startup(format!("header rejected: {:?}", resp.diagnostics())))
            }
            Err(outcome) => {
                p.kill();
                Err(ReplError::Startup(format!("header import {}", outcome.describe(startup))))
            }
        }
    }

    fn request(&mut self, req: &ReplRequest, timeout: Duration) -> Result<ReplResponse, Failure> {
        if let Err(e) = self.stdin.write_all(req.to_wire().as_bytes()).and_then(|()| self.stdin.flush()) {
            return Err(Failure::Crashed(format!("write failed: {e}")));
        }
        match self.events.recv_timeout(timeout) {
            Ok(Event::Value(v)) => serde_json::from_value::<ReplResponse>(v)
                .map_err(|e| Failure::Crashed(format!("malformed response: {e}"))),
            Ok(Event::Closed(why)) => Err(Failure::Crashed(why)),
            Err(RecvTimeoutError::Disconnected) => Err(Failure::Crashed("process exited".into())),
            Err(RecvTimeoutError::Timeout) => Err(Failure::TimedOut),
        }
    }

    fn alive(&mut self) -> bool {
        matches!(self.child.try_wait(), Ok(None))
    }

    fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for Process {
    fn drop(&mut self) {
        self.kill();
    }
}

enum Failure {
    TimedOut,
    Crashed(String),
}

impl Failure {
    fn describe(&self, timeout: Duration) -> String {
        match self {
            Failure::TimedOut => format!("timed out after {:.1}s", timeout.as_secs_f64()),
            Failure::Crashed(why) => format!("failed: {why}"),
        }
    }
}

fn set_pid(shared: &Shared, id: usize, pid: Option<u32>) {
    shared.pids.lock().expect("pid lock")[id] = pid;
}

fn start_with_retry(id: usize, shared: &Shared) -> Option<Process> {
    for attempt in 0..3u32 {
        match Process::start(shared) {
            Ok(p) => {
                set_pid(shared, id, Some(p.child.id()));
                return Some(p);
            }
            Err(e) => {
                log::error!("worker {id}: restart attempt {} failed: {e}", attempt + 1);
                std::thread::sleep(Duration::from_millis(200 << attempt));
            }
        }
    }
    None
}

fn worker_main(id: usize, shared: Arc<Shared>, jobs: Receiver<Job>, ready: Sender<Result<(), ReplError>>) {
    let mut process = match Process::start(&shared) {
        Ok(p) => {
            set_pid(&shared, id, Some(p.child.id()));
            let _ = ready.send(Ok(()));
            Some(p)
        }
        Err(e) => {
            let _ = ready.send(Err(e));
            return;
        }
    };
    drop(ready);
    let mut served = 0u32;
    while let Ok(job) = jobs.recv() {
        // a process that died while idle is replaced before it can fail a job
        if process.as_mut().is_some_and(|p| !p.alive()) {
            log::warn!("worker {id}: process exited while idle");
            set_pid(&shared, id, None);
            drop(process.take());
        }
        if process.is_none() {
            process = start_with_retry(id, &shared);
        }
        let Some(p) = process.as_mut() else {
            let _ =
                job.reply.send(failure_verdict(&shared, CompileKind::WorkerCrash, "worker could not be restarted", 0));
            continue;
        };
        let started = Instant::now();
        let req = ReplRequest { cmd: job.cmd.clone(), env: Some(0) };
        let result = p.request(&req, job.timeout);
        let elapsed = started.elapsed().as_millis() as u64;
        let (verdict, restart) = match &result {
            Ok(resp) => {
                let messages = resp.diagnostics();
                let kind = classify_response(&messages, false, job.expects_proof);
                (CompileVerdict { kind, messages, elapsed_ms: elapsed, env_tag: shared.env_tag.clone() }, false)
            }
            Err(Failure::TimedOut) => {
                let why = format!("timed out after {:.1}s", job.timeout.as_secs_f64());
                (failure_verdict(&shared, CompileKind::Timeout, &why, elapsed), true)
            }
            Err(Failure::Crashed(why)) => {
                log::warn!("worker {id}: {why}");
                (failure_verdict(&shared, CompileKind::WorkerCrash, why, elapsed), true)
            }
        };
        if let Some(dir) = &shared.config.record_fixtures {
            record(&shared, dir, id, &job, result.as_ref().ok(), &verdict);
        }
        let _ = job.reply.send(verdict);
        served += 1;
        if restart || served >= shared.config.max_jobs_per_worker {
            if !restart {
                log::debug!("worker {id}: recycling after {served} jobs");
            }
            served = 0;
            set_pid(&shared, id, None);
            // the old process must be gone before its replacement starts
            drop(process.take());
            process = start_with_retry(id, &shared);
        }
    }
    set_pid(&shared, id, None);
}

fn failure_verdict(shared: &Shared, kind: CompileKind, why: &str, elapsed_ms: u64) -> CompileVerdict {
    CompileVerdict {
        kind,
        messages: vec![DiagMessage { severity: MessageSeverity::Info, text: why.to_string(), position: None }],
        elapsed_ms,
        env_tag: shared.env_tag.clone(),
    }
}

fn record(
    shared: &Shared,
    dir: &Path,
    id: usize,
    job: &Job,
    response: Option<&ReplResponse>,
    verdict: &CompileVerdict,
) {
    let n = shared.recorded.fetch_add(1, Ordering::SeqCst);
    let fixture = ResponseFixture {
        name: format!("w{id}-{n:05}"),
        cmd: job.cmd.clone(),
        expects_proof: job.expects_proof,
        had_timeout: verdict.kind == CompileKind::Timeout,
        response: response.cloned(),
        expected: verdict.kind,
    };
    let path = dir.join(format!("{}.json", fixture.name));
    let body = serde_json::to_vec_pretty(&fixture).expect("fixture serializes");
    if let Err(e) = std::fs::write(&path, body) {
        log::warn!("cannot record fixture {}: {e}", path.display());
    }
}
