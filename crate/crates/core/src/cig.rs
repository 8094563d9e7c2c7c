//! Cyber-physical interaction graph.
//!
//! Nodes are subsystems, cyber/physical quantities and mission metrics; an
//! edge `a -> b` means "a influences b". Every simple path from a subsystem
//! to a mission metric is an *impact path*, and each impact path belongs to
//! one of three clusters depending on which compute quantity it leaves
//! through first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const COMPUTE: &str = "Compute";
pub const SA_LATENCY: &str = "SA_Latency";
pub const SA_THROUGHPUT: &str = "SA_Throughput";
pub const RESPONSE_TIME: &str = "ResponseTime";
pub const MASS: &str = "Mass";
pub const POWER: &str = "Power";
pub const ACCELERATION: &str = "Acceleration";
pub const VELOCITY: &str = "Velocity";
pub const MISSION_TIME: &str = "MissionTime";
pub const MISSION_ENERGY: &str = "MissionEnergy";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Subsystem,
    CyberQuantity,
    PhysicalQuantity,
    MissionMetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Cluster {
    Performance,
    Mass,
    Power,
}

impl fmt::Display for Cluster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Cluster::Performance => "performance",
            Cluster::Mass => "mass",
            Cluster::Power => "power",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CigError {
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("unknown node id `{0}`")]
    UnknownNode(String),
    #[error("edge {0} -> {1} terminates at a subsystem node")]
    EdgeIntoSubsystem(String, String),
    #[error("graph contains a cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("path is too short to classify (needs at least 2 nodes)")]
    PathTooShort,
    #[error(
        "path starting {0} -> {1} does not leave through a latency, throughput, mass or power node"
    )]
    Unclassifiable(String, String),
    #[error("node `{0}` has kind {1:?}, expected {2:?}")]
    WrongKind(String, NodeKind, NodeKind),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
}

/// Directed graph of subsystems and quantities.
///
/// Construction through [`InteractionGraph::new`] checks id uniqueness,
/// endpoint existence and the no-edge-into-subsystem rule. Acyclicity is
/// *not* enforced at construction so that cyclic inputs can be reported by
/// [`validate_acyclic`] and by the enumerator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InteractionGraph {
    nodes: Vec<Node>,
    edges: Vec<(String, String)>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
    #[serde(skip)]
    successors: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct RawGraph {
    nodes: Vec<Node>,
    edges: Vec<(String, String)>,
}

impl<'de> Deserialize<'de> for InteractionGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawGraph::deserialize(d)?;
        InteractionGraph::new(raw.nodes, raw.edges).map_err(serde::de::Error::custom)
    }
}

impl InteractionGraph {
    pub fn new(nodes: Vec<Node>, edges: Vec<(String, String)>) -> Result<Self, CigError> {
        let mut index = BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id.clone(), i).is_some() {
                return Err(CigError::DuplicateNode(n.id.clone()));
            }
        }
        let mut successors = vec![Vec::new(); nodes.len()];
        for (from, to) in &edges {
            let &fi = index
                .get(from)
                .ok_or_else(|| CigError::UnknownNode(from.clone()))?;
            let &ti = index
                .get(to)
                .ok_or_else(|| CigError::UnknownNode(to.clone()))?;
            if nodes[ti].kind == NodeKind::Subsystem {
                return Err(CigError::EdgeIntoSubsystem(from.clone(), to.clone()));
            }
            successors[fi].push(ti);
        }
        // successor lists sorted by id so DFS emits paths in lexicographic order
        for succ in &mut successors {
            succ.sort_by(|&a, &b| nodes[a].id.cmp(&nodes[b].id));
            succ.dedup();
        }
        Ok(Self {
            nodes,
            edges,
            index,
            successors,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(String, String)] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn kind_of(&self, id: &str) -> Option<NodeKind> {
        self.index.get(id).map(|&i| self.nodes[i].kind)
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        self.edges.iter().any(|(a, b)| a == from && b == to)
    }

    /// Returns a copy of the graph without the given edge.
    pub fn without_edge(&self, from: &str, to: &str) -> Self {
        let edges = self
            .edges
            .iter()
            .filter(|(a, b)| !(a == from && b == to))
            .cloned()
            .collect();
        Self::new(self.nodes.clone(), edges).expect("removing an edge keeps a valid graph")
    }

    /// Returns a copy of the graph with one more edge.
    pub fn with_edge(&self, from: &str, to: &str) -> Result<Self, CigError> {
        let mut edges = self.edges.clone();
        edges.push((from.to_string(), to.to_string()));
        Self::new(self.nodes.clone(), edges)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    fn find_cycle(&self) -> Option<Vec<String>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            White,
            Grey,
            Black,
        }
        let n = self.nodes.len();
        let mut mark = vec![Mark::White; n];
        let mut parent = vec![usize::MAX; n];
        for root in 0..n {
            if mark[root] != Mark::White {
                continue;
            }
            // iterative DFS: (node, next successor position)
            let mut stack = vec![(root, 0usize)];
            mark[root] = Mark::Grey;
            while let Some(&mut (u, ref mut pos)) = stack.last_mut() {
                if let Some(&v) = self.successors[u].get(*pos) {
                    *pos += 1;
                    match mark[v] {
                        Mark::White => {
                            mark[v] = Mark::Grey;
                            parent[v] = u;
                            stack.push((v, 0));
                        }
                        Mark::Grey => {
                            // back edge u -> v closes a cycle v .. u -> v
                            let mut chain = vec![u];
                            let mut w = u;
                            while w != v {
                                w = parent[w];
                                chain.push(w);
                            }
                            chain.reverse();
                            chain.push(v);
                            return Some(
                                chain
                                    .into_iter()
                                    .map(|i| self.nodes[i].id.clone())
                                    .collect(),
                            );
                        }
                        Mark::Black => {}
                    }
                } else {
                    mark[u] = Mark::Black;
                    stack.pop();
                }
            }
        }
        None
    }
}

/// True iff the graph has no directed cycle (Kahn's algorithm).
pub fn validate_acyclic(g: &InteractionGraph) -> bool {
    let n = g.nodes.len();
    let mut indegree = vec![0usize; n];
    for succ in &g.successors {
        for &v in succ {
            indegree[v] += 1;
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut seen = 0;
    while let Some(u) = ready.pop() {
        seen += 1;
        for &v in &g.successors[u] {
            indegree[v] -= 1;
            if indegree[v] == 0 {
                ready.push(v);
            }
        }
    }
    seen == n
}

/// The canonical 10-node / 14-edge compute interaction graph of a MAV.
pub fn build_default_mav_graph() -> InteractionGraph {
    use NodeKind::*;
    let nodes = [
        (COMPUTE, Subsystem),
        (SA_LATENCY, CyberQuantity),
        (SA_THROUGHPUT, CyberQuantity),
        (RESPONSE_TIME, CyberQuantity),
        (MASS, PhysicalQuantity),
        (POWER, PhysicalQuantity),
        (ACCELERATION, PhysicalQuantity),
        (VELOCITY, PhysicalQuantity),
        (MISSION_TIME, MissionMetric),
        (MISSION_ENERGY, MissionMetric),
    ]
    .into_iter()
    .map(|(id, kind)| Node {
        id: id.to_string(),
        kind,
    })
    .collect();
    let edges = [
        (COMPUTE, SA_LATENCY),
        (COMPUTE, SA_THROUGHPUT),
        (COMPUTE, MASS),
        (COMPUTE, POWER),
        (SA_LATENCY, RESPONSE_TIME),
        (SA_THROUGHPUT, RESPONSE_TIME),
        (RESPONSE_TIME, VELOCITY),
        (MASS, ACCELERATION),
        (ACCELERATION, VELOCITY),
        (MASS, POWER),
        (ACCELERATION, POWER),
        (VELOCITY, MISSION_TIME),
        (MISSION_TIME, MISSION_ENERGY),
        (POWER, MISSION_ENERGY),
    ];
    // no Velocity -> Power edge: velocity's effect on rotor power is minor
    let edges = edges
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    InteractionGraph::new(nodes, edges).expect("default graph is well formed")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpactPath {
    pub nodes: Vec<String>,
    pub cluster: Cluster,
}

impl fmt::Display for ImpactPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.cluster, self.nodes.join(" -> "))
    }
}

/// Cluster of a path, decided by its second node.
pub fn classify_cluster<S: AsRef<str>>(path: &[S]) -> Result<Cluster, CigError> {
    if path.len() < 2 {
        return Err(CigError::PathTooShort);
    }
    match path[1].as_ref() {
        SA_LATENCY | SA_THROUGHPUT => Ok(Cluster::Performance),
        MASS => Ok(Cluster::Mass),
        POWER => Ok(Cluster::Power),
        other => Err(CigError::Unclassifiable(
            path[0].as_ref().to_string(),
            other.to_string(),
        )),
    }
}

/// All simple paths from `source` to any node in `sinks`, sorted
/// lexicographically by node-id sequence. A path may pass through one sink
/// on its way to another; both prefixes are reported.
pub fn enumerate_simple_paths(
    g: &InteractionGraph,
    source: &str,
    sinks: &BTreeSet<String>,
) -> Result<Vec<Vec<String>>, CigError> {
    let &src = g
        .index
        .get(source)
        .ok_or_else(|| CigError::UnknownNode(source.to_string()))?;
    let mut sink_mask = vec![false; g.nodes.len()];
    for s in sinks {
        let &i = g
            .index
            .get(s)
            .ok_or_else(|| CigError::UnknownNode(s.clone()))?;
        sink_mask[i] = true;
    }
    if let Some(cycle) = g.find_cycle() {
        return Err(CigError::Cycle(cycle));
    }

    let mut out = Vec::new();
    let mut on_path = vec![false; g.nodes.len()];
    let mut path = vec![src];
    on_path[src] = true;
    let mut stack = vec![0usize];
    while let Some(pos) = stack.last_mut() {
        let u = *path.last().unwrap();
        if let Some(&v) = g.successors[u].get(*pos) {
            *pos += 1;
            if on_path[v] {
                continue;
            }
            path.push(v);
            on_path[v] = true;
            stack.push(0);
            if sink_mask[v] {
                out.push(path.iter().map(|&i| g.nodes[i].id.clone()).collect());
            }
        } else {
            stack.pop();
            on_path[u] = false;
            path.pop();
        }
    }
    out.sort();
    Ok(out)
}

/// Impact paths from a subsystem to mission metrics, each tagged with its
/// cluster.
pub fn enumerate_impact_paths(
    g: &InteractionGraph,
    source: &str,
    sinks: &BTreeSet<String>,
) -> Result<Vec<ImpactPath>, CigError> {
    match g.kind_of(source) {
        None => return Err(CigError::UnknownNode(source.to_string())),
        Some(NodeKind::Subsystem) => {}
        Some(k) => {
            return Err(CigError::WrongKind(
                source.to_string(),
                k,
                NodeKind::Subsystem,
            ))
        }
    }
    for s in sinks {
        match g.kind_of(s) {
            None => return Err(CigError::UnknownNode(s.clone())),
            Some(NodeKind::MissionMetric) => {}
            Some(k) => return Err(CigError::WrongKind(s.clone(), k, NodeKind::MissionMetric)),
        }
    }
    enumerate_simple_paths(g, source, sinks)?
        .into_iter()
        .map(|nodes| {
            let cluster = classify_cluster(&nodes)?;
            Ok(ImpactPath { nodes, cluster })
        })
        .collect()
}

/// Paths from `Compute` to both mission metrics on the given graph.
pub fn compute_impact_paths(g: &InteractionGraph) -> Result<Vec<ImpactPath>, CigError> {
    let sinks = [MISSION_TIME, MISSION_ENERGY]
        .into_iter()
        .map(String::from)
        .collect();
    enumerate_impact_paths(g, COMPUTE, &sinks)
}

pub fn cluster_histogram(paths: &[ImpactPath]) -> BTreeMap<Cluster, usize> {
    let mut h = BTreeMap::new();
    for p in paths {
        *h.entry(p.cluster).or_insert(0) += 1;
    }
    h
}
