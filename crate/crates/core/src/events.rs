//! Optional per-agent event log, written as `step,event,agent,detail`.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    TestAdministered,
    TestResult,
    QuarantineEnter,
    QuarantineBreak,
    QuarantineComplete,
    Dose1,
    Dose2,
    Immunized,
    DctNotified,
    MctReached,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::TestAdministered => "test_administered",
            EventKind::TestResult => "test_result",
            EventKind::QuarantineEnter => "quarantine_enter",
            EventKind::QuarantineBreak => "quarantine_break",
            EventKind::QuarantineComplete => "quarantine_complete",
            EventKind::Dose1 => "dose1",
            EventKind::Dose2 => "dose2",
            EventKind::Immunized => "immunized",
            EventKind::DctNotified => "dct_notified",
            EventKind::MctReached => "mct_reached",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub step: u32,
    pub kind: EventKind,
    pub agent: u32,
    pub detail: String,
}

/// Collects events when enabled; a disabled log ignores pushes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    enabled: bool,
    events: Vec<Event>,
}

impl EventLog {
    pub fn new(enabled: bool) -> Self {
        Self {
            enabled,
            events: Vec::new(),
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn push(&mut self, step: u32, kind: EventKind, agent: u32, detail: impl FnOnce() -> String) {
        if self.enabled {
            self.events.push(Event {
                step,
                kind,
                agent,
                detail: detail(),
            });
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "step,event,agent,detail")?;
        for e in &self.events {
            writeln!(out, "{},{},{},{}", e.step, e.kind.name(), e.agent, e.detail)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}
