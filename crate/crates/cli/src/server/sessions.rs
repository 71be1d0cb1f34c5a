//! Live VM sessions. Each session sits behind its own lock; the table lock
//! is held only to look sessions up.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use qrmap::model::VertexId;
use qrmap::vm::{format_transcript, start_with, Event, Status, VmError, VmOptions, VmState};
use qrmap::Program;
use serde::Serialize;

use super::store::content_id;

pub struct Session {
    pub id: String,
    pub program_id: String,
    pub program: Arc<Program>,
    pub state: VmState,
    pub created_at: u64,
    last_active: Instant,
}

/// What the API returns for a session.
#[derive(Debug, Serialize)]
pub struct SessionView<'a> {
    pub id: &'a str,
    pub program_id: &'a str,
    pub origin: VertexId,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub status: &'a Status,
    pub quick_choices_available: bool,
    pub events: &'a [Event],
    pub transcript: String,
}

impl Session {
    pub fn view(&self) -> SessionView<'_> {
        SessionView {
            id: &self.id,
            program_id: &self.program_id,
            origin: self.state.origin,
            created_at: self.created_at,
            status: &self.state.status,
            quick_choices_available: !self.state.is_halted()
                && self.state.answers_given == 0
                && !self.program.quick_choices.is_empty(),
            events: &self.state.events,
            transcript: format_transcript(self.state.transcript()),
        }
    }
}

pub type SessionRef = Arc<Mutex<Session>>;

pub struct Sessions {
    table: Mutex<HashMap<String, SessionRef>>,
    timeout: Duration,
    counter: AtomicU64,
}

impl Sessions {
    pub fn new(timeout: Duration) -> Self {
        Sessions {
            table: Mutex::new(HashMap::new()),
            timeout,
            counter: AtomicU64::new(0),
        }
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    fn fresh_id(&self) -> String {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let nanos = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .unwrap_or_default()
            .as_nanos();
        let seed = format!("{n}:{nanos}:{}", std::process::id());
        format!("{n:x}-{}", &content_id(seed.as_bytes())[..24])
    }

    pub fn create(
        &self,
        program_id: String,
        program: Arc<Program>,
        options: VmOptions,
    ) -> Result<SessionRef, VmError> {
        let state = start_with(&program, options)?;
        let id = self.fresh_id();
        let session = Arc::new(Mutex::new(Session {
            id: id.clone(),
            program_id,
            program,
            state,
            created_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .unwrap_or_default()
                .as_secs(),
            last_active: Instant::now(),
        }));
        self.table
            .lock()
            .expect("session table")
            .insert(id, session.clone());
        Ok(session)
    }

    /// Looks a session up and marks it active. Expired sessions are dropped.
    pub fn get(&self, id: &str) -> Option<SessionRef> {
        let session = self.table.lock().expect("session table").get(id).cloned()?;
        let mut s = session.lock().expect("session lock");
        if s.last_active.elapsed() > self.timeout {
            drop(s);
            self.remove(id);
            return None;
        }
        s.last_active = Instant::now();
        drop(s);
        Some(session)
    }

    pub fn remove(&self, id: &str) -> bool {
        self.table
            .lock()
            .expect("session table")
            .remove(id)
            .is_some()
    }

    /// Drops idle sessions; sessions in use are kept. Returns how many went.
    pub fn sweep(&self) -> usize {
        let mut table = self.table.lock().expect("session table");
        let before = table.len();
        table.retain(|_, s| match s.try_lock() {
            Ok(s) => s.last_active.elapsed() <= self.timeout,
            Err(_) => true,
        });
        before - table.len()
    }

    pub fn len(&self) -> usize {
        self.table.lock().expect("session table").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
