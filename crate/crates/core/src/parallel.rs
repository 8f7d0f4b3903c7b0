//! Campaigns: every (prototile, starter) search run on a pool of workers sharing one
//! queue of pending searches.
//!
//! When the queue runs low the kill switches of the active searches are thrown. A killed
//! search stops descending and instead pushes a deep copy of itself at every branch it
//! would have entered, so the idle workers pick those up.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};

use crate::problem::Problem;
use crate::search::{
    initial_states, solve, Control, Outcome, RawResult, SearchOptions, SearchState,
};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CampaignOptions {
    pub workers: usize,
    /// Pending size below which active searches are split. `None` means `workers`.
    pub kill_threshold: Option<usize>,
    pub starter_side: usize,
    pub search: SearchOptions,
    pub max_nodes: Option<u64>,
    pub max_results: Option<u64>,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        CampaignOptions {
            workers: 1,
            kill_threshold: None,
            starter_side: 0,
            search: SearchOptions::default(),
            max_nodes: None,
            max_results: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CampaignReport {
    /// Sorted, so the report does not depend on scheduling.
    pub results: Vec<RawResult>,
    pub truncated: bool,
    pub initial_searches: usize,
    pub nodes: u64,
    pub snapshots: u64,
    pub searches_run: u64,
    /// Set if a worker panicked or failed; `results` then holds what was found so far.
    pub failure: Option<String>,
}

/// Monotone flag owned by one running search.
#[derive(Debug, Default)]
pub struct KillSwitch(AtomicBool);

impl KillSwitch {
    pub fn trigger(&self) {
        self.0.store(true, Ordering::Relaxed);
    }

    pub fn is_triggered(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }
}

struct Inner {
    pending: Vec<SearchState>,
    active: Vec<(u64, Arc<KillSwitch>)>,
    next_id: u64,
}

pub struct WorkQueue {
    inner: Mutex<Inner>,
    ready: Condvar,
    kill_threshold: usize,
}

impl WorkQueue {
    pub fn new(seeds: Vec<SearchState>, kill_threshold: usize) -> Self {
        // Last in, first out: reverse so the first seed is drawn first.
        let mut pending = seeds;
        pending.reverse();
        WorkQueue {
            inner: Mutex::new(Inner {
                pending,
                active: Vec::new(),
                next_id: 0,
            }),
            ready: Condvar::new(),
            kill_threshold,
        }
    }

    pub fn pending_len(&self) -> usize {
        self.lock().pending.len()
    }

    pub fn active_count(&self) -> usize {
        self.lock().active.len()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn split_if_low(&self, inner: &Inner) {
        if inner.pending.len() < self.kill_threshold {
            for (_, k) in &inner.active {
                k.trigger();
            }
        }
    }

    /// Blocks until a search is available or all work is done.
    fn draw(&self, stop: &AtomicBool) -> Option<(u64, SearchState, Arc<KillSwitch>)> {
        let mut inner = self.lock();
        loop {
            if stop.load(Ordering::Relaxed) {
                return None;
            }
            if let Some(state) = inner.pending.pop() {
                // Kill the searches already running before registering this one.
                self.split_if_low(&inner);
                let id = inner.next_id;
                inner.next_id += 1;
                let kill = Arc::new(KillSwitch::default());
                inner.active.push((id, kill.clone()));
                return Some((id, state, kill));
            }
            if inner.active.is_empty() {
                return None;
            }
            self.split_if_low(&inner);
            inner = self.ready.wait(inner).unwrap_or_else(|e| e.into_inner());
        }
    }

    fn push(&self, state: SearchState) {
        self.lock().pending.push(state);
        self.ready.notify_one();
    }

    fn finish(&self, id: u64) {
        let mut inner = self.lock();
        inner.active.retain(|(i, _)| *i != id);
        drop(inner);
        self.ready.notify_all();
    }

    fn wake_all(&self) {
        let _guard = self.lock();
        self.ready.notify_all();
    }
}

/// Runs the searches for every prototile and every starter on the chosen side.
pub fn run_campaign(problem: &Problem, opts: &CampaignOptions) -> Result<CampaignReport> {
    let mut seeds = Vec::new();
    for t0 in 0..problem.num_protos() {
        seeds.extend(initial_states(problem, t0, opts.starter_side)?);
    }
    run_states(problem, seeds, opts)
}

/// Runs an explicit set of initial searches to exhaustion.
pub fn run_states(
    problem: &Problem,
    seeds: Vec<SearchState>,
    opts: &CampaignOptions,
) -> Result<CampaignReport> {
    if opts.workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    let initial = seeds.len();
    let queue = WorkQueue::new(seeds, opts.kill_threshold.unwrap_or(opts.workers));
    let stop = AtomicBool::new(false);
    let nodes = AtomicU64::new(0);
    let found = AtomicU64::new(0);
    let snapshots = AtomicU64::new(0);
    let runs = AtomicU64::new(0);
    let truncated = AtomicBool::new(false);
    let results = Mutex::new(Vec::new());
    let failure: Mutex<Option<String>> = Mutex::new(None);

    let worker = || {
        while let Some((id, mut state, kill)) = queue.draw(&stop) {
            runs.fetch_add(1, Ordering::Relaxed);
            let ctl = Control {
                kill: Some(&kill.0),
                stop: Some(&stop),
                nodes: Some(&nodes),
                max_nodes: opts.max_nodes,
            };
            let run = catch_unwind(AssertUnwindSafe(|| {
                let mut local = Vec::new();
                let out = solve(
                    problem,
                    &mut state,
                    &opts.search,
                    &ctl,
                    &mut |r| {
                        let total = found.fetch_add(1, Ordering::Relaxed) + 1;
                        if opts.max_results.is_some_and(|m| total > m) {
                            truncated.store(true, Ordering::Relaxed);
                            stop.store(true, Ordering::Relaxed);
                            return false;
                        }
                        local.push(r);
                        true
                    },
                    &mut |snap| {
                        snapshots.fetch_add(1, Ordering::Relaxed);
                        queue.push(snap);
                    },
                );
                (out, local)
            }));
            let err = match run {
                Ok((Ok((outcome, _)), local)) => {
                    results
                        .lock()
                        .unwrap_or_else(|e| e.into_inner())
                        .extend(local);
                    if outcome == Outcome::Stopped && !stop.load(Ordering::Relaxed) {
                        // Only the node limit stops a search without the shared flag.
                        truncated.store(true, Ordering::Relaxed);
                        stop.store(true, Ordering::Relaxed);
                    }
                    None
                }
                Ok((Err(e), _)) => Some(e.to_string()),
                Err(payload) => Some(panic_message(payload.as_ref())),
            };
            if let Some(msg) = err {
                failure
                    .lock()
                    .unwrap_or_else(|e| e.into_inner())
                    .get_or_insert(msg);
                stop.store(true, Ordering::Relaxed);
            }
            queue.finish(id);
            if stop.load(Ordering::Relaxed) {
                queue.wake_all();
            }
        }
    };

    std::thread::scope(|s| {
        for _ in 0..opts.workers {
            s.spawn(worker);
        }
    });

    let mut results = results.into_inner().unwrap_or_else(|e| e.into_inner());
    results.sort();
    let failure = failure.into_inner().unwrap_or_else(|e| e.into_inner());
    Ok(CampaignReport {
        results,
        truncated: truncated.load(Ordering::Relaxed) || failure.is_some(),
        initial_searches: initial,
        nodes: nodes.load(Ordering::Relaxed),
        snapshots: snapshots.load(Ordering::Relaxed),
        searches_run: runs.load(Ordering::Relaxed),
        failure,
    })
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        format!("worker panicked: {s}")
    } else if let Some(s) = payload.downcast_ref::<String>() {
        format!("worker panicked: {s}")
    } else {
        "worker panicked".into()
    }
}
