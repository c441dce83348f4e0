//! Road-network data model: intersections, directed 3-lane roads, turn
//! movements and the eight standard phases of every signalized intersection.

mod grid;
mod io;

pub use grid::{generate_flow, generate_grid, FlowParams};
pub use io::{
    load_flow, load_roadnet, read_flow, read_roadnet, write_flow, write_roadnet, FlowRecord,
    LaneRecord, NodeRecord, Point, RoadRecord, RoadnetFile,
};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vehicle jam spacing used to derive lane storage capacity.
pub const JAM_SPACING_M: f64 = 7.5;
/// Free-flow speed (40 km/h) used to derive lane traversal time.
pub const FREE_FLOW_SPEED_KMH: f64 = 40.0;
/// Number of lanes observed around a signalized intersection (12 in, 12 out).
pub const INTERSECTION_LANES: usize = 24;
/// Number of phases per signalized intersection.
pub const PHASE_COUNT: usize = 8;
/// Turn movements per signalized intersection (4 approaches x 3 turns).
pub const MOVEMENTS_PER_INTERSECTION: usize = 12;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error("invalid flow: {0}")]
    InvalidFlow(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}

pub type Result<T> = std::result::Result<T, NetworkError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RoadId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LaneId(pub u32);

/// Global turn-movement index: `intersection * 12 + local`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TmId(pub u32);

macro_rules! index_newtype {
    ($($t:ty),*) => {$(
        impl $t {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    )*};
}
index_newtype!(NodeId, RoadId, LaneId, TmId);

/// Turn category. Doubles as the lane kind: each road carries exactly one
/// lane per category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Turn {
    Left,
    #[serde(alias = "straight")]
    Through,
    Right,
}

impl Turn {
    pub const ALL: [Turn; 3] = [Turn::Left, Turn::Through, Turn::Right];

    /// Position of this lane inside a road's (left, through, right) triple.
    pub fn slot(self) -> usize {
        match self {
            Turn::Left => 0,
            Turn::Through => 1,
            Turn::Right => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Turn::Left => "left",
            Turn::Through => "through",
            Turn::Right => "right",
        }
    }
}

/// Compass side of an intersection, clockwise from north.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    North,
    East,
    South,
    West,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::North, Side::East, Side::South, Side::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Side {
        Self::ALL[i % 4]
    }

    pub fn opposite(self) -> Side {
        Side::from_index(self.index() + 2)
    }

    /// Side of `to` as seen from `from`, or `None` for diagonal/degenerate
    /// placements.
    pub fn between(from: (f64, f64), to: (f64, f64)) -> Option<Side> {
        let dx = to.0 - from.0;
        let dy = to.1 - from.1;
        if dx.abs() > dy.abs() {
            Some(if dx > 0.0 { Side::East } else { Side::West })
        } else if dy.abs() > dx.abs() {
            Some(if dy > 0.0 { Side::North } else { Side::South })
        } else {
            None
        }
    }

    /// Side a vehicle arriving from `self` leaves through when making `turn`
    /// under right-hand traffic.
    pub fn exit_for(self, turn: Turn) -> Side {
        match turn {
            Turn::Through => self.opposite(),
            Turn::Left => Side::from_index(self.index() + 1),
            Turn::Right => Side::from_index(self.index() + 3),
        }
    }

    /// Direction of travel of vehicles arriving from this side.
    pub fn heading(self) -> Side {
        self.opposite()
    }

    pub fn letter(self) -> char {
        match self {
            Side::North => 'N',
            Side::East => 'E',
            Side::South => 'S',
            Side::West => 'W',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: LaneId,
    pub road: RoadId,
    pub kind: Turn,
    pub length: f64,
    pub capacity: u32,
    pub free_flow_time: u32,
}

impl Lane {
    pub fn new(id: LaneId, road: RoadId, kind: Turn, length: f64) -> Lane {
        Lane {
            id,
            road,
            kind,
            length,
            capacity: lane_capacity(length),
            free_flow_time: free_flow_time(length),
        }
    }
}

/// `floor(length / 7.5)`, at least one vehicle.
pub fn lane_capacity(length: f64) -> u32 {
    ((length / JAM_SPACING_M).floor() as u32).max(1)
}

/// Whole seconds to traverse `length` at 40 km/h, rounded up, at least 1.
pub fn free_flow_time(length: f64) -> u32 {
    // Scale by 3.6/40 rather than dividing by 11.11 m/s so that round lengths
    // (e.g. 300 m -> 27 s) stay exact.
    let secs = length * 3.6 / FREE_FLOW_SPEED_KMH;
    ((secs - 1e-9).ceil() as u32).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Road {
    pub id: RoadId,
    pub name: String,
    pub from: NodeId,
    pub to: NodeId,
    /// (left-turn, through, right-turn)
    pub lanes: [LaneId; 3],
}

impl Road {
    pub fn lane(&self, kind: Turn) -> LaneId {
        self.lanes[kind.slot()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub name: String,
    pub point: (f64, f64),
    pub signalized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnMovement {
    pub id: TmId,
    pub intersection: usize,
    pub from_side: Side,
    pub kind: Turn,
    pub incoming_road: RoadId,
    pub outgoing_road: RoadId,
    pub incoming_lane: LaneId,
    /// Lanes of `outgoing_road` as (left, through, right).
    pub outgoing_lanes: [LaneId; 3],
    /// Position of `incoming_lane` in the intersection's observation order.
    pub incoming_slot: u8,
    /// Positions of the outgoing road's (left, through, right) lanes.
    pub outgoing_slots: [u8; 3],
}

impl TurnMovement {
    pub fn is_signal_controlled(&self) -> bool {
        self.kind != Turn::Right
    }

    /// Incoming lane followed by the outgoing road's three lanes.
    pub fn involved_lanes(&self) -> [LaneId; 4] {
        let [l, t, r] = self.outgoing_lanes;
        [self.incoming_lane, l, t, r]
    }

    /// `E-through`, `N-left`, ... named by direction of travel.
    pub fn label(&self) -> String {
        format!("{}-{}", self.from_side.heading().letter(), self.kind.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub index: u8,
    /// Tuple order of the canonical phase table; consumers other than the
    /// asymmetric policy treat it as unordered.
    pub movements: [TmId; 2],
}

/// Canonical phase table as (direction of travel, turn) pairs.
///
/// 0: E-through + W-through, 1: W-through + W-left, 2: E-left + E-through,
/// 3: E-left + W-left, 4: N-through + S-through, 5: N-left + N-through,
/// 6: S-through + S-left, 7: N-left + S-left.
pub const CANONICAL_PHASES: [[(Side, Turn); 2]; PHASE_COUNT] = [
    [(Side::East, Turn::Through), (Side::West, Turn::Through)],
    [(Side::West, Turn::Through), (Side::West, Turn::Left)],
    [(Side::East, Turn::Left), (Side::East, Turn::Through)],
    [(Side::East, Turn::Left), (Side::West, Turn::Left)],
    [(Side::North, Turn::Through), (Side::South, Turn::Through)],
    [(Side::North, Turn::Left), (Side::North, Turn::Through)],
    [(Side::South, Turn::Through), (Side::South, Turn::Left)],
    [(Side::North, Turn::Left), (Side::South, Turn::Left)],
];

/// Phases whose two movements share a turn type.
pub const SAME_TYPE_PHASES: [usize; 4] = [0, 3, 4, 7];

/// Local movement index for a vehicle arriving from `from_side` making `turn`.
pub fn local_movement(from_side: Side, turn: Turn) -> usize {
    from_side.index() * 3 + turn.slot()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub node: NodeId,
    /// Indexed by the side the road arrives from (N, E, S, W).
    pub incoming: [RoadId; 4],
    /// Indexed by the side the road leaves toward (N, E, S, W).
    pub outgoing: [RoadId; 4],
    /// 12 movements ordered by (arrival side, turn).
    pub movements: Vec<TurnMovement>,
    pub phases: [Phase; PHASE_COUNT],
    /// Observation order: incoming N,E,S,W x (L,T,R), then outgoing likewise.
    pub lanes: [LaneId; INTERSECTION_LANES],
}

impl Intersection {
    pub fn movement(&self, id: TmId) -> &TurnMovement {
        &self.movements[id.index() % MOVEMENTS_PER_INTERSECTION]
    }

    pub fn phase_movements(&self, phase: usize) -> [&TurnMovement; 2] {
        let [a, b] = self.phases[phase].movements;
        [self.movement(a), self.movement(b)]
    }

    pub fn phase_label(&self, phase: usize) -> String {
        let [a, b] = self.phase_movements(phase);
        format!("{}+{}", a.label(), b.label())
    }
}

/// Immutable road network. Construct through [`RoadNetwork::build`], a
/// loader or the grid generator; all of them validate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNetwork {
    pub nodes: Vec<Node>,
    pub roads: Vec<Road>,
    pub lanes: Vec<Lane>,
    pub intersections: Vec<Intersection>,
    /// Maps a node to its signalized-intersection index.
    pub node_intersection: Vec<Option<usize>>,
}

/// Input description of one road for [`RoadNetwork::build`].
#[derive(Debug, Clone)]
pub struct RoadSpec {
    pub name: String,
    pub from: String,
    pub to: String,
    pub lanes: Vec<(Turn, f64)>,
}

/// Input description of one node for [`RoadNetwork::build`].
#[derive(Debug, Clone)]
pub struct NodeSpec {
    pub name: String,
    pub point: (f64, f64),
    pub signalized: bool,
}

impl RoadNetwork {
    /// Validates the raw description and derives lanes, movements and phases.
    pub fn build(node_specs: &[NodeSpec], road_specs: &[RoadSpec]) -> Result<RoadNetwork> {
        let mut node_ids = HashMap::new();
        let mut nodes = Vec::with_capacity(node_specs.len());
        for spec in node_specs {
            let id = NodeId(nodes.len() as u32);
            if node_ids.insert(spec.name.clone(), id).is_some() {
                return Err(invalid(format!("duplicate intersection id {:?}", spec.name)));
            }
            if !(spec.point.0.is_finite() && spec.point.1.is_finite()) {
                return Err(invalid(format!("intersection {:?} has a non-finite point", spec.name)));
            }
            nodes.push(Node {
                id,
                name: spec.name.clone(),
                point: spec.point,
                signalized: spec.signalized,
            });
        }

        let mut road_names = HashMap::new();
        let mut roads = Vec::with_capacity(road_specs.len());
        let mut lanes = Vec::with_capacity(road_specs.len() * 3);
        for spec in road_specs {
            let id = RoadId(roads.len() as u32);
            if road_names.insert(spec.name.clone(), id).is_some() {
                return Err(invalid(format!("duplicate road id {:?}", spec.name)));
            }
            let lookup = |n: &str| {
                node_ids.get(n).copied().ok_or_else(|| {
                    invalid(format!("road {:?} references unknown intersection {:?}", spec.name, n))
                })
            };
            let from = lookup(&spec.from)?;
            let to = lookup(&spec.to)?;
            if from == to {
                return Err(invalid(format!("road {:?} starts and ends at the same node", spec.name)));
            }
            if spec.lanes.len() != 3 {
                return Err(invalid(format!(
                    "road {:?} has {} lanes, expected 3",
                    spec.name,
                    spec.lanes.len()
                )));
            }
            let mut triple: [Option<LaneId>; 3] = [None; 3];
            for &(kind, length) in &spec.lanes {
                if !(length.is_finite() && length > 0.0) {
                    return Err(invalid(format!("road {:?} has a lane of invalid length {length}", spec.name)));
                }
                if triple[kind.slot()].is_some() {
                    return Err(invalid(format!(
                        "road {:?} has more than one {} lane",
                        spec.name,
                        kind.as_str()
                    )));
                }
                let lane_id = LaneId(lanes.len() as u32);
                lanes.push(Lane::new(lane_id, id, kind, length));
                triple[kind.slot()] = Some(lane_id);
            }
            // Three lanes with no duplicate kind means every slot is filled.
            let lane_triple = triple.map(|l| l.expect("one lane per kind"));
            roads.push(Road {
                id,
                name: spec.name.clone(),
                from,
                to,
                lanes: lane_triple,
            });
        }

        let mut node_intersection = vec![None; nodes.len()];
        let mut intersections = Vec::new();
        for node in nodes.iter().filter(|n| n.signalized) {
            let idx = intersections.len();
            let inter = build_intersection(idx, node, &nodes, &roads)?;
            node_intersection[node.id.index()] = Some(idx);
            intersections.push(inter);
        }

        // build_intersection demands all four approaches, so a signalized
        // node can never sit on the network edge.
        Ok(RoadNetwork {
            nodes,
            roads,
            lanes,
            intersections,
            node_intersection,
        })
    }

    pub fn road(&self, id: RoadId) -> &Road {
        &self.roads[id.index()]
    }

    pub fn lane(&self, id: LaneId) -> &Lane {
        &self.lanes[id.index()]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn road_by_name(&self, name: &str) -> Option<RoadId> {
        self.roads.iter().find(|r| r.name == name).map(|r| r.id)
    }

    pub fn intersection_at(&self, node: NodeId) -> Option<&Intersection> {
        self.node_intersection[node.index()].map(|i| &self.intersections[i])
    }

    pub fn movement(&self, id: TmId) -> &TurnMovement {
        let inter = &self.intersections[id.index() / MOVEMENTS_PER_INTERSECTION];
        inter.movement(id)
    }

    /// Movement taking a vehicle from `incoming` onto `outgoing`, if the two
    /// roads meet at a signalized intersection.
    pub fn movement_between(&self, incoming: RoadId, outgoing: RoadId) -> Option<&TurnMovement> {
        let inter = self.intersection_at(self.road(incoming).to)?;
        inter
            .movements
            .iter()
            .find(|m| m.incoming_road == incoming && m.outgoing_road == outgoing)
    }

    /// Roads leaving an unsignalized node, i.e. network entries.
    pub fn entry_roads(&self) -> impl Iterator<Item = &Road> + '_ {
        self.roads
            .iter()
            .filter(move |r| !self.nodes[r.from.index()].signalized)
    }

    pub fn signalized_count(&self) -> usize {
        self.intersections.len()
    }
}

fn invalid(msg: String) -> NetworkError {
    NetworkError::Invalid(msg)
}

fn build_intersection(idx: usize, node: &Node, nodes: &[Node], roads: &[Road]) -> Result<Intersection> {
    let mut incoming: [Option<RoadId>; 4] = [None; 4];
    let mut outgoing: [Option<RoadId>; 4] = [None; 4];
    for road in roads {
        let (other, slot) = if road.to == node.id {
            (road.from, &mut incoming)
        } else if road.from == node.id {
            (road.to, &mut outgoing)
        } else {
            continue;
        };
        let side = Side::between(node.point, nodes[other.index()].point).ok_or_else(|| {
            invalid(format!(
                "road {:?} meets intersection {:?} diagonally",
                road.name, node.name
            ))
        })?;
        if slot[side.index()].replace(road.id).is_some() {
            return Err(invalid(format!(
                "intersection {:?} has two roads on its {:?} side",
                node.name, side
            )));
        }
    }
    let complete = |arr: [Option<RoadId>; 4], what: &str| -> Result<[RoadId; 4]> {
        let mut out = [RoadId(0); 4];
        for (i, r) in arr.iter().enumerate() {
            out[i] = r.ok_or_else(|| {
                invalid(format!(
                    "signalized intersection {:?} lacks an {what} road on its {:?} side",
                    node.name,
                    Side::from_index(i)
                ))
            })?;
        }
        Ok(out)
    };
    let incoming = complete(incoming, "incoming")?;
    let outgoing = complete(outgoing, "outgoing")?;

    let mut lanes = [LaneId(0); INTERSECTION_LANES];
    for side in Side::ALL {
        for kind in Turn::ALL {
            lanes[side.index() * 3 + kind.slot()] = roads[incoming[side.index()].index()].lane(kind);
            lanes[12 + side.index() * 3 + kind.slot()] = roads[outgoing[side.index()].index()].lane(kind);
        }
    }

    let mut movements = Vec::with_capacity(MOVEMENTS_PER_INTERSECTION);
    for side in Side::ALL {
        for kind in Turn::ALL {
            let local = local_movement(side, kind);
            let exit = side.exit_for(kind);
            let in_road = &roads[incoming[side.index()].index()];
            let out_road = outgoing[exit.index()];
            if roads[out_road.index()].to == in_road.from {
                return Err(invalid(format!(
                    "movement {:?}->{:?} at {:?} would be a U-turn",
                    in_road.name,
                    roads[out_road.index()].name,
                    node.name
                )));
            }
            let base = (12 + exit.index() * 3) as u8;
            movements.push(TurnMovement {
                id: TmId((idx * MOVEMENTS_PER_INTERSECTION + local) as u32),
                intersection: idx,
                from_side: side,
                kind,
                incoming_road: in_road.id,
                outgoing_road: out_road,
                incoming_lane: in_road.lane(kind),
                outgoing_lanes: roads[out_road.index()].lanes,
                incoming_slot: (side.index() * 3 + kind.slot()) as u8,
                outgoing_slots: [base, base + 1, base + 2],
            });
        }
    }

    let phases = std::array::from_fn(|p| {
        let movements = CANONICAL_PHASES[p].map(|(heading, turn)| {
            // heading is the direction of travel; arrival side is its opposite
            let local = local_movement(heading.opposite(), turn);
            TmId((idx * MOVEMENTS_PER_INTERSECTION + local) as u32)
        });
        Phase {
            index: p as u8,
            movements,
        }
    });

    Ok(Intersection {
        node: node.id,
        incoming,
        outgoing,
        movements,
        phases,
        lanes,
    })
}

/// Timed vehicle spawns, each with a route of connected roads.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FlowSpec {
    pub events: Vec<FlowEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowEvent {
    pub spawn_time: u32,
    pub route: Vec<RoadId>,
}

impl FlowSpec {
    /// Checks route connectivity and that every transfer between roads
    /// happens at a signalized intersection.
    pub fn validate(&self, network: &RoadNetwork) -> Result<()> {
        for (i, ev) in self.events.iter().enumerate() {
            if ev.route.is_empty() {
                return Err(NetworkError::InvalidFlow(format!("event {i} has an empty route")));
            }
            if let Some(bad) = ev.route.iter().find(|r| r.index() >= network.roads.len()) {
                return Err(NetworkError::InvalidFlow(format!("event {i} references unknown road {}", bad.0)));
            }
            for pair in ev.route.windows(2) {
                if network.movement_between(pair[0], pair[1]).is_none() {
                    return Err(NetworkError::InvalidFlow(format!(
                        "event {i}: road {:?} does not feed road {:?} at a signalized intersection",
                        network.road(pair[0]).name,
                        network.road(pair[1]).name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}
