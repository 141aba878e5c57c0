//! Instantaneous multi-hop flooding over the Boolean communication graph.
//!
//! Delivery is instantaneous and decoding always succeeds within range, and
//! every agent forwards a message on first receipt, so flooding a message is
//! behaviorally identical to delivering it to the sender's entire connected
//! component. `broadcast` therefore delivers by component (BFS) directly;
//! tests verify equivalence against explicit hop-by-hop forwarding.

use std::collections::VecDeque;

use crate::agent::{integrate_message, AgentState};
use crate::geometry::Point;
use crate::sensing::{can_communicate, SensingParams};
use crate::{AgentId, EventId, Tick};

/// One event as carried in views and messages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub id: EventId,
    pub pos: Point,
    pub occurred_at: Tick,
}

/// A sender's reported location. Agents in random mode withhold their
/// coordinates so their jittery positions never enter gradient computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReportedLocation {
    Valid(Point),
    Withheld,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub origin: AgentId,
    pub seq: u64,
    pub location: ReportedLocation,
    pub events: Vec<EventRecord>,
}

/// Outcome of one broadcast: recipients in delivery order with the
/// first-receipt (forward) flag each reported.
#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryReport {
    pub deliveries: Vec<(AgentId, bool)>,
}

/// Indices of all agents in the origin's connected component of the Boolean
/// communication graph, excluding the origin itself, in ascending order.
pub fn reachable_set(
    origin_index: usize,
    positions: &[Point],
    params: &SensingParams,
) -> Vec<usize> {
    let n = positions.len();
    assert!(origin_index < n, "origin index out of range");
    let mut visited = vec![false; n];
    visited[origin_index] = true;
    let mut queue = VecDeque::new();
    queue.push_back(origin_index);
    let mut reached = Vec::new();
    while let Some(i) = queue.pop_front() {
        for (j, &pos) in positions.iter().enumerate() {
            if !visited[j] && can_communicate(positions[i], pos, params) {
                visited[j] = true;
                queue.push_back(j);
                reached.push(j);
            }
        }
    }
    reached.sort_unstable();
    reached
}

/// Floods `msg` from the sender to its connected component, snapshotting the
/// communication graph at the agents' true current positions. Recipients
/// integrate the message in ascending agent order.
pub fn broadcast(
    msg: &Message,
    sender_index: usize,
    agents: &mut [AgentState],
    params: &SensingParams,
    now: Tick,
) -> DeliveryReport {
    let positions: Vec<Point> = agents.iter().map(|a| a.pos).collect();
    let recipients = reachable_set(sender_index, &positions, params);
    let mut deliveries = Vec::with_capacity(recipients.len());
    for idx in recipients {
        let agent = &mut agents[idx];
        let forwarded = integrate_message(&mut agent.view, msg, now);
        deliveries.push((agent.id, forwarded));
    }
    DeliveryReport { deliveries }
}
