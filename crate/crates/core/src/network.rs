//! Freight network data model: nodes (stations, ports), undirected edges and
//! the CSV tables they are loaded from.
//!
//! Nodes are kept sorted by id and edges are stored once per unordered pair
//! as `(min, max)`, so two networks built from permuted input rows compare
//! equal and export identically.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Stable node identifier taken from the `id` column of the nodes table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for NodeId {
    type Err = std::num::ParseIntError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim().parse().map(NodeId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rail,
    Water,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Rail, Mode::Water];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Rail => "rail",
            Mode::Water => "water",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rail" => Ok(Mode::Rail),
            "water" => Ok(Mode::Water),
            other => Err(format!("unknown mode `{other}` (expected rail or water)")),
        }
    }
}

/// Non-negative tonnage held as an exact count of micro-tons.
///
/// Sums of tonnage are integer sums, so residual-capacity fractions do not
/// depend on the order nodes are added up.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tonnage(u64);

const MICRO: u64 = 1_000_000;

impl Tonnage {
    pub const ZERO: Tonnage = Tonnage(0);

    pub fn from_micro_tons(micro: u64) -> Self {
        Tonnage(micro)
    }

    pub fn micro_tons(self) -> u64 {
        self.0
    }

    /// Rounds `tons` to the nearest micro-ton.
    pub fn from_tons(tons: f64) -> Option<Self> {
        if !tons.is_finite() || tons < 0.0 {
            return None;
        }
        let micro = (tons * MICRO as f64).round();
        if micro > u64::MAX as f64 {
            return None;
        }
        Some(Tonnage(micro as u64))
    }

    pub fn tons(self) -> f64 {
        self.0 as f64 / MICRO as f64
    }
}

impl fmt::Display for Tonnage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / MICRO;
        let frac = self.0 % MICRO;
        if frac == 0 {
            write!(f, "{whole}")
        } else {
            let digits = format!("{frac:06}");
            write!(f, "{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl FromStr for Tonnage {
    type Err = String;

    /// Parses a plain decimal (optionally with exponent). More than six
    /// fractional digits are rounded half-up to the micro-ton.
    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        let s = raw.trim();
        if s.is_empty() {
            return Err("empty tonnage".into());
        }
        if s.contains(['e', 'E']) {
            let v: f64 = s.parse().map_err(|_| format!("invalid tonnage `{s}`"))?;
            return Tonnage::from_tons(v).ok_or_else(|| format!("invalid tonnage `{s}`"));
        }
        let s = s.strip_prefix('+').unwrap_or(s);
        if s.starts_with('-') {
            return Err(format!("negative tonnage `{raw}`"));
        }
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if (int_part.is_empty() && frac_part.is_empty()) || !all_digits(int_part) || !all_digits(frac_part) {
            return Err(format!("invalid tonnage `{raw}`"));
        }
        let whole: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| format!("tonnage out of range `{raw}`"))?
        };
        let mut frac_digits: Vec<u8> = frac_part.bytes().map(|b| b - b'0').collect();
        let round_up = frac_digits.len() > 6 && frac_digits[6] >= 5;
        frac_digits.resize(6, 0);
        let frac = frac_digits.iter().fold(0u64, |acc, d| acc * 10 + u64::from(*d));
        whole
            .checked_mul(MICRO)
            .and_then(|w| w.checked_add(frac))
            .and_then(|v| v.checked_add(u64::from(round_up)))
            .map(Tonnage)
            .ok_or_else(|| format!("tonnage out of range `{raw}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub name: String,
    pub mode: Mode,
    pub lat: f64,
    pub lon: f64,
    #[serde(with = "tonnage_serde")]
    pub tonnage: Tonnage,
}

mod tonnage_serde {
    use super::Tonnage;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &Tonnage, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(t)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Tonnage, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{table} table line {line}: {message}")]
    MalformedRow { table: &'static str, line: u64, message: String },
    #[error("{table} table is missing column `{column}`")]
    MissingColumn { table: &'static str, column: String },
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("edge ({src}, {dst}) references unknown node id {missing}")]
    UnknownEdgeEndpoint { src: NodeId, dst: NodeId, missing: NodeId },
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("node id {0} listed more than once")]
    DuplicateRemoval(NodeId),
    #[error("invalid node {id}: {message}")]
    InvalidNode { id: NodeId, message: String },
    #[error("network has no nodes")]
    Empty,
}

/// Maps logical columns onto header names in the input tables. Exports
/// always use the canonical names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub id: String,
    pub name: String,
    pub mode: String,
    pub lat: String,
    pub lon: String,
    pub tonnage: String,
    pub src: String,
    pub dst: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            id: "id".into(),
            name: "name".into(),
            mode: "mode".into(),
            lat: "lat".into(),
            lon: "lon".into(),
            tonnage: "tonnage".into(),
            src: "src".into(),
            dst: "dst".into(),
        }
    }
}

/// Undirected freight network. Immutable once built; removals return a new value.
#[derive(Debug, Clone, PartialEq)]
pub struct FreightNetwork {
    nodes: Vec<NodeRecord>,
    index: BTreeMap<NodeId, usize>,
    edges: BTreeSet<(NodeId, NodeId)>,
    adjacency: Vec<Vec<usize>>,
}

fn canonical_pair(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl FreightNetwork {
    /// Builds a network from node records and (possibly repeated, possibly
    /// reversed) edge pairs.
    pub fn new(
        nodes: impl IntoIterator<Item = NodeRecord>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, NetworkError> {
        let mut by_id = BTreeMap::new();
        for node in nodes {
            validate_node(&node)?;
            let id = node.id;
            if by_id.insert(id, node).is_some() {
                return Err(NetworkError::DuplicateNode(id));
            }
        }
        let mut edge_set = BTreeSet::new();
        for (src, dst) in edges {
            if src == dst {
                return Err(NetworkError::SelfLoop(src));
            }
            for end in [src, dst] {
                if !by_id.contains_key(&end) {
                    return Err(NetworkError::UnknownEdgeEndpoint { src, dst, missing: end });
                }
            }
            edge_set.insert(canonical_pair(src, dst));
        }
        Ok(Self::from_validated(by_id.into_values().collect(), edge_set))
    }

    fn from_validated(nodes: Vec<NodeRecord>, edges: BTreeSet<(NodeId, NodeId)>) -> Self {
        let index: BTreeMap<NodeId, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (a, b) in &edges {
            let (ia, ib) = (index[a], index[b]);
            adjacency[ia].push(ib);
            adjacency[ib].push(ia);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        FreightNetwork { nodes, index, edges, adjacency }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    /// Edges as canonical `(min, max)` pairs in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.edges.contains(&canonical_pair(a, b))
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeRecord> {
        self.index.get(&id).map(|&i| &self.nodes[i])
    }

    /// Dense position of `id` (its rank in ascending id order).
    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn id_at(&self, index: usize) -> NodeId {
        self.nodes[index].id
    }

    /// Neighbor positions of the node at dense position `index`, ascending.
    pub fn neighbors(&self, index: usize) -> &[usize] {
        &self.adjacency[index]
    }

    pub fn degree(&self, id: NodeId) -> Option<usize> {
        self.index_of(id).map(|i| self.adjacency[i].len())
    }

    pub fn total_tonnage(&self) -> u128 {
        self.nodes.iter().map(|n| u128::from(n.tonnage.micro_tons())).sum()
    }

    pub fn average_degree(&self) -> Result<f64, NetworkError> {
        if self.nodes.is_empty() {
            return Err(NetworkError::Empty);
        }
        Ok(2.0 * self.edges.len() as f64 / self.nodes.len() as f64)
    }

    /// Returns the network without `ids` and their incident edges.
    pub fn remove_nodes(&self, ids: &[NodeId]) -> Result<FreightNetwork, NetworkError> {
        let mut removed = BTreeSet::new();
        for &id in ids {
            if !self.contains(id) {
                return Err(NetworkError::UnknownNode(id));
            }
            if !removed.insert(id) {
                return Err(NetworkError::DuplicateRemoval(id));
            }
        }
        Ok(self.retain(|n| !removed.contains(&n.id)))
    }

    /// Sub-network induced by nodes of one transport mode.
    pub fn filter_mode(&self, mode: Mode) -> FreightNetwork {
        self.retain(|n| n.mode == mode)
    }

    pub fn modes(&self) -> BTreeSet<Mode> {
        self.nodes.iter().map(|n| n.mode).collect()
    }

    fn retain(&self, keep: impl Fn(&NodeRecord) -> bool) -> FreightNetwork {
        let nodes: Vec<NodeRecord> = self.nodes.iter().filter(|n| keep(n)).cloned().collect();
        let kept: BTreeSet<NodeId> = nodes.iter().map(|n| n.id).collect();
        let edges = self
            .edges
            .iter()
            .filter(|(a, b)| kept.contains(a) && kept.contains(b))
            .copied()
            .collect();
        Self::from_validated(nodes, edges)
    }

    /// Writes the canonical nodes table (sorted by id).
    pub fn write_nodes_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "name", "mode", "lat", "lon", "tonnage"])?;
        for n in &self.nodes {
            w.write_record([
                n.id.to_string(),
                n.name.clone(),
                n.mode.to_string(),
                n.lat.to_string(),
                n.lon.to_string(),
                n.tonnage.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the canonical edges table, one `(min, max)` row per edge.
    pub fn write_edges_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["src", "dst"])?;
        for (a, b) in &self.edges {
            w.write_record([a.to_string(), b.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn validate_node(node: &NodeRecord) -> Result<(), NetworkError> {
    let invalid = |message: String| NetworkError::InvalidNode { id: node.id, message };
    if !(node.lat.is_finite() && (-90.0..=90.0).contains(&node.lat)) {
        return Err(invalid(format!("latitude {} outside [-90, 90]", node.lat)));
    }
    if !(node.lon.is_finite() && (-180.0..=180.0).contains(&node.lon)) {
        return Err(invalid(format!("longitude {} outside [-180, 180]", node.lon)));
    }
    Ok(())
}

fn open(path: &Path) -> Result<std::fs::File, NetworkError> {
    std::fs::File::open(path).map_err(|source| NetworkError::Io { path: path.to_path_buf(), source })
}

/// Loads a network from the nodes and edges CSV files.
pub fn load_network(nodes: &Path, edges: &Path) -> Result<FreightNetwork, NetworkError> {
    load_network_with(nodes, edges, &ColumnMap::default())
}

pub fn load_network_with(
    nodes: &Path,
    edges: &Path,
    columns: &ColumnMap,
) -> Result<FreightNetwork, NetworkError> {
    let node_rows = read_nodes(open(nodes)?, columns)?;
    let edge_rows = read_edges(open(edges)?, columns)?;
    FreightNetwork::new(node_rows, edge_rows)
}

fn column(headers: &csv::StringRecord, table: &'static str, name: &str) -> Result<usize, NetworkError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| NetworkError::MissingColumn { table, column: name.to_string() })
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn csv_row_error(table: &'static str, e: csv::Error) -> NetworkError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    NetworkError::MalformedRow { table, line, message: e.to_string() }
}

/// Parses node rows from any reader in the nodes CSV schema.
pub fn read_nodes<R: Read>(input: R, columns: &ColumnMap) -> Result<Vec<NodeRecord>, NetworkError> {
    const TABLE: &str = "nodes";
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().map_err(|e| csv_row_error(TABLE, e))?.clone();
    let idx = [
        column(&headers, TABLE, &columns.id)?,
        column(&headers, TABLE, &columns.name)?,
        column(&headers, TABLE, &columns.mode)?,
        column(&headers, TABLE, &columns.lat)?,
        column(&headers, TABLE, &columns.lon)?,
        column(&headers, TABLE, &columns.tonnage)?,
    ];
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_row_error(TABLE, e))?;
        let line = line_of(&row);
        let bad = |message: String| NetworkError::MalformedRow { table: TABLE, line, message };
        let field = |i: usize| row.get(idx[i]).unwrap_or("");
        let id: NodeId = field(0).parse().map_err(|_| bad(format!("invalid id `{}`", field(0))))?;
        let mode: Mode = field(2).parse().map_err(bad)?;
        let lat: f64 = field(3).parse().map_err(|_| bad(format!("invalid lat `{}`", field(3))))?;
        let lon: f64 = field(4).parse().map_err(|_| bad(format!("invalid lon `{}`", field(4))))?;
        let tonnage: Tonnage = field(5).parse().map_err(bad)?;
        out.push(NodeRecord { id, name: field(1).to_string(), mode, lat, lon, tonnage });
    }
    Ok(out)
}

/// Parses edge rows from any reader in the edges CSV schema.
pub fn read_edges<R: Read>(input: R, columns: &ColumnMap) -> Result<Vec<(NodeId, NodeId)>, NetworkError> {
    const TABLE: &str = "edges";
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().map_err(|e| csv_row_error(TABLE, e))?.clone();
    let src = column(&headers, TABLE, &columns.src)?;
    let dst = column(&headers, TABLE, &columns.dst)?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_row_error(TABLE, e))?;
        let line = line_of(&row);
        let parse = |i: usize| -> Result<NodeId, NetworkError> {
            let raw = row.get(i).unwrap_or("");
            raw.parse().map_err(|_| NetworkError::MalformedRow {
                table: TABLE,
                line,
                message: format!("invalid node id `{raw}`"),
            })
        };
        out.push((parse(src)?, parse(dst)?));
    }
    Ok(out)
}
