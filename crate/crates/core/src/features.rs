//! Lane-feature template: maps a turn movement to the eight terminals
//! `W0..W3, C0..C3` read by urgency trees.
//!
//! Features are ordered feature-major (all waiting counts, then all vehicle
//! counts). Inside each block the lanes are the movement's incoming lane
//! followed by the outgoing road's left-turn, through and right-turn lanes.
//! With one lane per turn category there is no further intra-category
//! ordering to apply.

use thiserror::Error;

use crate::network::{LaneId, TurnMovement};
use crate::sim::Observation;

/// Lanes involved in one movement.
pub const LANES_PER_MOVEMENT: usize = 4;
/// Lane features per lane (`w` and `c`).
pub const FEATURE_KINDS: usize = 2;
pub const FEATURE_LEN: usize = LANES_PER_MOVEMENT * FEATURE_KINDS;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("lane {0:?} of the movement is not part of the observation")]
    MissingLane(LaneId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_LEN]);

impl FeatureVector {
    pub fn zeros() -> FeatureVector {
        FeatureVector([0.0; FEATURE_LEN])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn waiting(&self) -> &[f64] {
        &self.0[..LANES_PER_MOVEMENT]
    }

    pub fn count(&self) -> &[f64] {
        &self.0[LANES_PER_MOVEMENT..]
    }
}

/// Builds the feature vector of `tm` from `obs`.
pub fn extract(obs: &Observation, tm: &TurnMovement) -> Result<FeatureVector, FeatureError> {
    let lanes = tm.involved_lanes();
    let slots = [
        tm.incoming_slot as usize,
        tm.outgoing_slots[0] as usize,
        tm.outgoing_slots[1] as usize,
        tm.outgoing_slots[2] as usize,
    ];
    let mut out = [0.0; FEATURE_LEN];
    for k in 0..LANES_PER_MOVEMENT {
        // precomputed slot first, lookup by id otherwise
        let (w, c) = if obs.lanes[slots[k]] == lanes[k] {
            (obs.waiting[slots[k]], obs.count[slots[k]])
        } else {
            obs.lane_counts(lanes[k]).ok_or(FeatureError::MissingLane(lanes[k]))?
        };
        out[k] = w as f64;
        out[k + LANES_PER_MOVEMENT] = c as f64;
    }
    Ok(FeatureVector(out))
}
