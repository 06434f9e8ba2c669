//! The five steering components acting on one agent.
//!
//! Each function sees the current agent only through the neighbors it is
//! handed: `offset` is the shortest displacement from the current agent to
//! the neighbor, `distance` its norm. Sums run in slice order, which the
//! caller fixes as ascending distance then id.

use serde::{Deserialize, Serialize};

use super::geometry::{Vec2, Velocity};

/// What one agent perceives of one neighbor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborView {
    pub id: u64,
    pub offset: Vec2,
    pub distance: f64,
    pub velocity: Velocity,
    pub similarity: f64,
}

/// How the separation component is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationMode {
    /// Push directly away from each colliding neighbor, inversely to distance.
    #[default]
    Repulsive,
    /// Mean of the two velocities over distance. Does not necessarily point
    /// away from the neighbor.
    MeanVelocity,
}

/// Sum of the neighbors' velocities.
pub fn alignment_velocity(similar: &[NeighborView]) -> Velocity {
    similar.iter().map(|n| n.velocity).sum()
}

/// Separation from neighbors inside the collision radius.
pub fn separation_velocity(colliding: &[NeighborView], own_velocity: Velocity, mode: SeparationMode, eps_div: f64) -> Velocity {
    colliding
        .iter()
        .map(|n| {
            let d = n.distance.max(eps_div);
            match mode {
                SeparationMode::Repulsive => (-n.offset).unit() / d,
                SeparationMode::MeanVelocity => ((n.velocity + own_velocity) / 2.0) / d,
            }
        })
        .sum()
}

/// Sum of displacements toward the neighbors.
pub fn cohesion_velocity(similar: &[NeighborView]) -> Velocity {
    similar.iter().map(|n| n.offset).sum()
}

/// Attraction toward similar neighbors with magnitude `Sim * d` per term.
pub fn similarity_velocity(similar: &[NeighborView]) -> Velocity {
    similar
        .iter()
        .map(|n| n.offset.unit() * (n.similarity * n.distance))
        .sum()
}

/// Repulsion from dissimilar neighbors with magnitude `1 / (Sim * d)` per
/// term, both factors floored at `eps_div`.
pub fn dissimilarity_velocity(dissimilar: &[NeighborView], eps_div: f64) -> Velocity {
    dissimilar
        .iter()
        .map(|n| {
            let magnitude = 1.0 / (n.similarity.max(eps_div) * n.distance.max(eps_div));
            (-n.offset).unit() * magnitude
        })
        .sum()
}
