//! Coordinate-descent baseline.
//!
//! Same architecture, policy and REINFORCE rule as the coagent agent, but each
//! episode's update only uses the executions hosted on one edge; the active
//! edge cycles round-robin across episodes. Parameters stay shared, so an
//! update for one edge still moves the weights every edge uses.

use crate::coagent::{reinforce_increment, CoagentLayer, LayerGradient};
use crate::error::{Error, Result};
use crate::letor::SLATE_SIZE;
use crate::sim::EpisodeTrace;

/// Maps document slots onto the edges that compute them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeAssignment {
    slot_to_edge: Vec<usize>,
    n_edges: usize,
}

impl EdgeAssignment {
    /// Edge indices must cover `0..n` with no gaps.
    pub fn new(slot_to_edge: Vec<usize>) -> Result<Self> {
        let n_edges = slot_to_edge.iter().max().map_or(0, |m| m + 1);
        if slot_to_edge.is_empty() {
            return Err(Error::Empty("edge assignment"));
        }
        for e in 0..n_edges {
            if !slot_to_edge.contains(&e) {
                return Err(Error::Config(format!("edge {e} hosts no slot")));
            }
        }
        Ok(EdgeAssignment {
            slot_to_edge,
            n_edges,
        })
    }

    /// One edge per slot.
    pub fn identity(slots: usize) -> Self {
        EdgeAssignment {
            slot_to_edge: (0..slots).collect(),
            n_edges: slots,
        }
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn edge_of(&self, slot: usize) -> Option<usize> {
        self.slot_to_edge.get(slot).copied()
    }
}

impl Default for EdgeAssignment {
    fn default() -> Self {
        EdgeAssignment::identity(SLATE_SIZE)
    }
}

/// Edge optimized during `episode_index`.
pub fn cd_schedule(episode_index: u64, n_edges: usize) -> usize {
    assert!(n_edges >= 1, "cd_schedule needs at least one edge");
    (episode_index % n_edges as u64) as usize
}

/// The REINFORCE increment restricted to executions on `active_edge`.
pub fn cd_increment(
    layer: &CoagentLayer,
    trace: &EpisodeTrace,
    active_edge: usize,
    assignment: &EdgeAssignment,
    gamma: f64,
) -> Result<LayerGradient> {
    reinforce_increment(
        layer,
        trace
            .records()
            .filter(|r| assignment.edge_of(r.document_slot) == Some(active_edge)),
        &trace.returns,
        gamma,
    )
}

pub fn cd_update(
    layer: &CoagentLayer,
    trace: &EpisodeTrace,
    active_edge: usize,
    assignment: &EdgeAssignment,
    alpha: f64,
    gamma: f64,
) -> Result<CoagentLayer> {
    let inc = cd_increment(layer, trace, active_edge, assignment, gamma)?;
    layer.applied(alpha, &inc)
}
