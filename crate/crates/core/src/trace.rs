//! Tab-separated event trace: `time<TAB>node<TAB>event<TAB>detail`.

use std::fmt::Write as _;

use crate::messages::NodeId;
use crate::rpl_node::TraceEvent;
use crate::time::SimTime;

pub fn format_line(time: SimTime, node: NodeId, event: TraceEvent, detail: &str) -> String {
    format!("{time}\t{node}\t{}\t{detail}", event.as_str())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceLog {
    text: String,
    lines: usize,
}

impl TraceLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, time: SimTime, node: NodeId, event: TraceEvent, detail: &str) {
        let _ = writeln!(self.text, "{time}\t{node}\t{}\t{detail}", event.as_str());
        self.lines += 1;
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn len(&self) -> usize {
        self.lines
    }

    pub fn is_empty(&self) -> bool {
        self.lines == 0
    }

    pub fn lines(&self) -> impl Iterator<Item = &str> {
        self.text.lines()
    }

    /// Lines whose event column equals `event`.
    pub fn events(&self, event: TraceEvent) -> impl Iterator<Item = &str> {
        self.text.lines().filter(move |l| l.split('\t').nth(2) == Some(event.as_str()))
    }
}
