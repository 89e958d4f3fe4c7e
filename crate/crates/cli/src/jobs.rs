//! In-memory job records.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use healthgrid_core::sim::{Metrics, SweepPoint};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    pub fn is_final(self) -> bool {
        matches!(self, JobStatus::Done | JobStatus::Failed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobKind {
    Run,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JobResult {
    Run(Box<Metrics>),
    Sweep(Vec<SweepPoint>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job_id: String,
    pub kind: JobKind,
    pub status: JobStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<JobResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Synchronized map of job records. Records are replaced, never mutated in
/// place, so readers holding an `Arc` always see a consistent snapshot.
#[derive(Debug, Default)]
pub struct JobStore {
    jobs: Mutex<HashMap<String, Arc<JobRecord>>>,
    next: AtomicU64,
}

impl JobStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create(&self, kind: JobKind) -> String {
        let id = format!("job-{}", self.next.fetch_add(1, Ordering::Relaxed) + 1);
        let record = JobRecord {
            job_id: id.clone(),
            kind,
            status: JobStatus::Queued,
            result: None,
            error: None,
        };
        self.jobs.lock().expect("job store poisoned").insert(id.clone(), Arc::new(record));
        id
    }

    pub fn get(&self, id: &str) -> Option<Arc<JobRecord>> {
        self.jobs.lock().expect("job store poisoned").get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.jobs.lock().expect("job store poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Move a job forward. Returns false (and changes nothing) when the
    /// job is unknown or the transition would go backwards or leave a
    /// final state.
    fn advance(&self, id: &str, status: JobStatus, result: Option<JobResult>, error: Option<String>) -> bool {
        let mut jobs = self.jobs.lock().expect("job store poisoned");
        let Some(current) = jobs.get(id) else { return false };
        if current.status.is_final() || status <= current.status {
            return false;
        }
        let record = JobRecord {
            job_id: current.job_id.clone(),
            kind: current.kind,
            status,
            result,
            error,
        };
        jobs.insert(id.to_string(), Arc::new(record));
        true
    }

    pub fn start(&self, id: &str) -> bool {
        self.advance(id, JobStatus::Running, None, None)
    }

    pub fn finish(&self, id: &str, outcome: Result<JobResult, String>) -> bool {
        match outcome {
            Ok(result) => self.advance(id, JobStatus::Done, Some(result), None),
            Err(e) => self.advance(id, JobStatus::Failed, None, Some(e)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transitions_only_move_forward() {
        let store = JobStore::new();
        let id = store.create(JobKind::Sweep);
        assert_eq!(store.get(&id).unwrap().status, JobStatus::Queued);
        assert!(store.start(&id));
        assert!(!store.start(&id));
        assert!(store.finish(&id, Ok(JobResult::Sweep(vec![]))));
        let done = store.get(&id).unwrap();
        assert!(!store.finish(&id, Err("late".into())));
        assert_eq!(store.get(&id).unwrap(), done);
    }

    #[test]
    fn failure_does_not_touch_other_jobs() {
        let store = JobStore::new();
        let a = store.create(JobKind::Run);
        let b = store.create(JobKind::Run);
        assert_ne!(a, b);
        store.start(&a);
        store.finish(&a, Ok(JobResult::Sweep(vec![])));
        store.start(&b);
        store.finish(&b, Err("boom".into()));
        assert_eq!(store.get(&a).unwrap().status, JobStatus::Done);
        assert_eq!(store.get(&b).unwrap().error.as_deref(), Some("boom"));
        assert!(store.get("job-99").is_none());
    }
}
