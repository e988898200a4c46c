//! In-process message bus between solves of the same computation sequence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::AgentId;
use crate::planner::Plan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub row: usize,
    pub from: AgentId,
    pub to: AgentId,
    pub bytes: usize,
}

/// One inbox per `(agent, row)`. A plan is delivered after its sender's
/// solve, to the sender's successors in that row only.
#[derive(Debug, Default)]
pub struct Mailbox {
    inbox: BTreeMap<(AgentId, usize), Vec<(AgentId, Plan)>>,
    log: Vec<MessageRecord>,
}

impl Mailbox {
    pub fn send(&mut self, row: usize, from: AgentId, to: AgentId, plan: &Plan) {
        let bytes = serde_json::to_vec(plan).map(|v| v.len()).unwrap_or(0);
        self.log.push(MessageRecord {
            row,
            from,
            to,
            bytes,
        });
        self.inbox
            .entry((to, row))
            .or_default()
            .push((from, plan.clone()));
    }

    /// Plans received so far by `agent` in `row`, ordered by sender.
    pub fn received(&self, agent: AgentId, row: usize) -> Vec<(AgentId, Plan)> {
        let mut v = self.inbox.get(&(agent, row)).cloned().unwrap_or_default();
        v.sort_by_key(|(from, _)| *from);
        v
    }

    pub fn log(&self) -> &[MessageRecord] {
        &self.log
    }

    pub fn total_bytes(&self) -> usize {
        self.log.iter().map(|m| m.bytes).sum()
    }
}
