//! Synthetic grid networks and Poisson demand.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::{FlowEvent, FlowSpec, NetworkError, NodeSpec, Result, RoadNetwork, RoadSpec, Side, Turn};

/// `rows x cols` signalized intersections spaced `lane_length` apart, with an
/// unsignalized boundary node beyond every edge approach. Adjacent nodes are
/// joined by a pair of opposite 3-lane roads.
///
/// Node and road names follow the CityFlow convention
/// (`intersection_<x>_<y>`, `road_<x>_<y>_<dir>` with dir 0=E, 1=N, 2=W, 3=S).
pub fn generate_grid(rows: usize, cols: usize, lane_length: f64) -> Result<RoadNetwork> {
    if rows == 0 || cols == 0 {
        return Err(NetworkError::Argument(format!("grid must be at least 1x1, got {rows}x{cols}")));
    }
    if lane_length.is_nan() || lane_length < 50.0 {
        return Err(NetworkError::Argument(format!("lane length must be >= 50 m, got {lane_length}")));
    }

    // signalized nodes occupy x in 1..=cols, y in 1..=rows; corners are absent
    let signalized = |x: usize, y: usize| (1..=cols).contains(&x) && (1..=rows).contains(&y);
    let exists = |x: usize, y: usize| {
        let inner_x = (1..=cols).contains(&x);
        let inner_y = (1..=rows).contains(&y);
        (inner_x && y <= rows + 1) || (inner_y && x <= cols + 1)
    };

    let mut nodes = Vec::new();
    for y in 0..=rows + 1 {
        for x in 0..=cols + 1 {
            if exists(x, y) {
                nodes.push(NodeSpec {
                    name: node_name(x, y),
                    point: (x as f64 * lane_length, y as f64 * lane_length),
                    signalized: signalized(x, y),
                });
            }
        }
    }

    // (dx, dy) for dir 0=E, 1=N, 2=W, 3=S
    const DIRS: [(isize, isize); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
    let lanes: Vec<(Turn, f64)> = Turn::ALL.iter().map(|&k| (k, lane_length)).collect();
    let mut roads = Vec::new();
    for y in 0..=rows + 1 {
        for x in 0..=cols + 1 {
            if !exists(x, y) {
                continue;
            }
            for (dir, (dx, dy)) in DIRS.iter().enumerate() {
                let (Some(nx), Some(ny)) = (x.checked_add_signed(*dx), y.checked_add_signed(*dy)) else {
                    continue;
                };
                if !exists(nx, ny) || !(signalized(x, y) || signalized(nx, ny)) {
                    continue;
                }
                roads.push(RoadSpec {
                    name: format!("road_{x}_{y}_{dir}"),
                    from: node_name(x, y),
                    to: node_name(nx, ny),
                    lanes: lanes.clone(),
                });
            }
        }
    }
    RoadNetwork::build(&nodes, &roads)
}

fn node_name(x: usize, y: usize) -> String {
    format!("intersection_{x}_{y}")
}

/// Demand parameters for [`generate_flow`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    /// Spawn times fall in `[0, horizon)`.
    pub horizon: u32,
    /// Vehicles per hour entering through each entry road.
    pub rate: f64,
    /// (left, through, right) probabilities at every signalized intersection.
    pub turn_probs: [f64; 3],
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            horizon: 3600,
            rate: 360.0,
            turn_probs: [0.1, 0.8, 0.1],
        }
    }
}

/// Poisson arrivals on every entry road; routes are built by sampling a turn
/// at each signalized intersection until the vehicle reaches a boundary node.
pub fn generate_flow(network: &RoadNetwork, params: &FlowParams, seed: u64) -> Result<FlowSpec> {
    let [pl, pt, pr] = params.turn_probs;
    if params.turn_probs.iter().any(|p| !(0.0..=1.0).contains(p)) || ((pl + pt + pr) - 1.0).abs() > 1e-9 {
        return Err(NetworkError::Argument(format!(
            "turn probabilities must be in [0,1] and sum to 1, got {:?}",
            params.turn_probs
        )));
    }
    if !(params.rate >= 0.0 && params.rate.is_finite()) {
        return Err(NetworkError::Argument(format!("rate must be >= 0, got {}", params.rate)));
    }
    if params.rate == 0.0 || params.horizon == 0 {
        return Ok(FlowSpec::default());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = Exp::new(params.rate / 3600.0).map_err(|e| NetworkError::Argument(e.to_string()))?;
    let max_route = 4 * network.nodes.len().max(1);
    let mut events = Vec::new();
    let mut skipped = 0usize;

    for entry in network.entry_roads() {
        let mut t = 0.0f64;
        loop {
            t += gap.sample(&mut rng);
            if t >= params.horizon as f64 {
                break;
            }
            let mut route = vec![entry.id];
            let mut ok = true;
            while let Some(inter) = network.intersection_at(network.road(*route.last().unwrap()).to) {
                if route.len() >= max_route {
                    ok = false;
                    break;
                }
                let u: f64 = rng.random();
                let turn = if u < pl {
                    Turn::Left
                } else if u < pl + pt {
                    Turn::Through
                } else {
                    Turn::Right
                };
                let last = *route.last().unwrap();
                let from_side = Side::ALL
                    .into_iter()
                    .find(|s| inter.incoming[s.index()] == last)
                    .expect("road ends at this intersection");
                route.push(inter.outgoing[from_side.exit_for(turn).index()]);
            }
            if ok {
                events.push(FlowEvent {
                    spawn_time: t as u32,
                    route,
                });
            } else {
                skipped += 1;
            }
        }
    }
    if skipped > 0 {
        warn!("skipped {skipped} spawn events whose route did not reach an exit");
    }
    events.sort_by_key(|e| e.spawn_time);
    Ok(FlowSpec { events })
}
