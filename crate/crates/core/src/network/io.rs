//! JSON roadnet and flow files.
//!
//! The roadnet format is a small subset of the CityFlow schema: nodes carry a
//! point and a signalized flag, roads carry their endpoints and an explicit
//! lane list with turn kind and length. `startIntersection`/`endIntersection`
//! and the `virtual` node flag are accepted as aliases so converted public
//! datasets load without renaming.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FlowEvent, FlowSpec, NetworkError, NodeSpec, Result, RoadNetwork, RoadSpec, Turn};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadnetFile {
    pub intersections: Vec<NodeRecord>,
    pub roads: Vec<RoadRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    pub point: Point,
    #[serde(default)]
    pub roads: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signalized: Option<bool>,
    #[serde(default, rename = "virtual", skip_serializing_if = "Option::is_none")]
    pub is_virtual: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadRecord {
    pub id: String,
    #[serde(alias = "startIntersection")]
    pub from: String,
    #[serde(alias = "endIntersection")]
    pub to: String,
    pub lanes: Vec<LaneRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneRecord {
    pub kind: Turn,
    pub length: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub startTime: u32,
    pub route: Vec<String>,
}

impl RoadnetFile {
    pub fn from_network(network: &RoadNetwork) -> RoadnetFile {
        let intersections = network
            .nodes
            .iter()
            .map(|n| NodeRecord {
                id: n.name.clone(),
                point: Point {
                    x: n.point.0,
                    y: n.point.1,
                },
                roads: network
                    .roads
                    .iter()
                    .filter(|r| r.from == n.id || r.to == n.id)
                    .map(|r| r.name.clone())
                    .collect(),
                signalized: Some(n.signalized),
                is_virtual: None,
            })
            .collect();
        let roads = network
            .roads
            .iter()
            .map(|r| RoadRecord {
                id: r.name.clone(),
                from: network.node(r.from).name.clone(),
                to: network.node(r.to).name.clone(),
                lanes: r
                    .lanes
                    .iter()
                    .map(|&l| {
                        let lane = network.lane(l);
                        LaneRecord {
                            kind: lane.kind,
                            length: lane.length,
                        }
                    })
                    .collect(),
            })
            .collect();
        RoadnetFile { intersections, roads }
    }

    pub fn into_network(self) -> Result<RoadNetwork> {
        let mut nodes = Vec::with_capacity(self.intersections.len());
        for rec in &self.intersections {
            let signalized = match (rec.signalized, rec.is_virtual) {
                (Some(s), _) => s,
                (None, Some(v)) => !v,
                (None, None) => {
                    return Err(NetworkError::Parse(format!(
                        "intersection {:?} needs a `signalized` or `virtual` flag",
                        rec.id
                    )))
                }
            };
            nodes.push(NodeSpec {
                name: rec.id.clone(),
                point: (rec.point.x, rec.point.y),
                signalized,
            });
        }
        let roads: Vec<RoadSpec> = self
            .roads
            .iter()
            .map(|r| RoadSpec {
                name: r.id.clone(),
                from: r.from.clone(),
                to: r.to.clone(),
                lanes: r.lanes.iter().map(|l| (l.kind, l.length)).collect(),
            })
            .collect();
        let network = RoadNetwork::build(&nodes, &roads)?;

        // an explicit road list on a node must agree with the road endpoints
        for rec in &self.intersections {
            if rec.roads.is_empty() {
                continue;
            }
            let listed: BTreeSet<&str> = rec.roads.iter().map(String::as_str).collect();
            let actual: BTreeSet<&str> = self
                .roads
                .iter()
                .filter(|r| r.from == rec.id || r.to == rec.id)
                .map(|r| r.id.as_str())
                .collect();
            if listed != actual {
                return Err(NetworkError::Invalid(format!(
                    "intersection {:?} lists roads {:?} but is an endpoint of {:?}",
                    rec.id, listed, actual
                )));
            }
        }
        Ok(network)
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_roadnet(text: &str) -> Result<RoadNetwork> {
    let file: RoadnetFile = serde_json::from_str(text).map_err(|e| NetworkError::Parse(e.to_string()))?;
    file.into_network()
}

pub fn load_roadnet(path: impl AsRef<Path>) -> Result<RoadNetwork> {
    read_roadnet(&read_file(path.as_ref())?)
}

pub fn write_roadnet(network: &RoadNetwork) -> String {
    let mut s = serde_json::to_string_pretty(&RoadnetFile::from_network(network))
        .expect("roadnet serialization cannot fail");
    s.push('\n');
    s
}

pub fn read_flow(text: &str, network: &RoadNetwork) -> Result<FlowSpec> {
    let records: Vec<FlowRecord> = serde_json::from_str(text).map_err(|e| NetworkError::Parse(e.to_string()))?;
    let mut events = Vec::with_capacity(records.len());
    for (i, rec) in records.into_iter().enumerate() {
        let route = rec
            .route
            .iter()
            .map(|name| {
                network
                    .road_by_name(name)
                    .ok_or_else(|| NetworkError::InvalidFlow(format!("event {i} references unknown road {name:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        events.push(FlowEvent {
            spawn_time: rec.startTime,
            route,
        });
    }
    let flow = FlowSpec { events };
    flow.validate(network)?;
    Ok(flow)
}

pub fn load_flow(path: impl AsRef<Path>, network: &RoadNetwork) -> Result<FlowSpec> {
    read_flow(&read_file(path.as_ref())?, network)
}

pub fn write_flow(flow: &FlowSpec, network: &RoadNetwork) -> String {
    let records: Vec<FlowRecord> = flow
        .events
        .iter()
        .map(|e| FlowRecord {
            startTime: e.spawn_time,
            route: e.route.iter().map(|&r| network.road(r).name.clone()).collect(),
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&records).expect("flow serialization cannot fail");
    s.push('\n');
    s
}
