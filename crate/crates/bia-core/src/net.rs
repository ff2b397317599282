//! Partially connected network topologies and message-set problems.
//!
//! A problem instance couples a bipartite connectivity graph between
//! transmitters and receivers with a message plan: which transmitter
//! originates each message and which receivers want it. Generators cover
//! every topology family the workbench reproduces — cell arrays on tori
//! (linear, square, hexagonal), the four-cell cluster in both link
//! directions, a two-tier macro/femto overlay, and the symmetric partially
//! connected ring family parameterized by `(D, U, K)`.
//!
//! Infinite cell arrays are truncated to tori so that every cell keeps an
//! identical local neighborhood; dimensions that are multiples of a reuse
//! period keep the periodic schedules exact.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

// ─── Domain types ───────────────────────────────────────────────────────────

/// Bipartite radio connectivity with per-node antenna counts.
///
/// A pair `(r, t)` in `connectivity` means receiver `r` hears transmitter
/// `t`; absent pairs carry no signal at all (hard Wyner-type connectivity).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NetworkTopology {
    /// Transmitter id → antenna count.
    pub transmitters: BTreeMap<String, u32>,
    /// Receiver id → antenna count.
    pub receivers: BTreeMap<String, u32>,
    /// Set of (receiver id, transmitter id) pairs that are connected.
    pub connectivity: BTreeSet<(String, String)>,
}

impl NetworkTopology {
    /// Checks node references, antenna positivity, and id sanity.
    pub fn validate(&self) -> Result<()> {
        for (id, &n) in self.transmitters.iter().chain(self.receivers.iter()) {
            if id.is_empty() {
                return Err(Error::Parse("empty node id".into()));
            }
            if n == 0 {
                return Err(Error::Parse(format!("node {id}: antenna count must be positive")));
            }
        }
        for (r, t) in &self.connectivity {
            if !self.receivers.contains_key(r) {
                return Err(Error::Parse(format!("connectivity references undeclared receiver {r}")));
            }
            if !self.transmitters.contains_key(t) {
                return Err(Error::Parse(format!("connectivity references undeclared transmitter {t}")));
            }
        }
        Ok(())
    }

    /// True when receiver `r` hears transmitter `t`.
    pub fn connected(&self, r: &str, t: &str) -> bool {
        self.connectivity.contains(&(r.to_string(), t.to_string()))
    }

    /// Transmitters heard by receiver `r`, in id order.
    pub fn heard_by(&self, r: &str) -> Vec<&str> {
        self.connectivity
            .iter()
            .filter(|(rx, _)| rx == r)
            .map(|(_, tx)| tx.as_str())
            .collect()
    }
}

/// Geometry of the cell layout, used to pick reuse patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Geometry {
    /// Cycle of `cells` cells.
    Linear { cells: usize },
    /// `rows × cols` grid torus.
    Square { rows: usize, cols: usize },
    /// `rows × cols` hexagonal torus in axial coordinates.
    Hex { rows: usize, cols: usize },
    /// No array structure (clusters, ring families, custom problems).
    #[default]
    Cluster,
}

/// Assignment of transmitters to cells for per-cell DoF accounting.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CellGrouping {
    /// Transmitter id → cell label. Defaults to one transmitter per cell.
    pub cell: BTreeMap<String, String>,
    /// Layout tag consumed by the reuse schedulers.
    pub geometry: Geometry,
}

impl CellGrouping {
    /// One-transmitter-per-cell grouping with no array structure.
    pub fn identity(topology: &NetworkTopology) -> Self {
        CellGrouping {
            cell: topology.transmitters.keys().map(|t| (t.clone(), t.clone())).collect(),
            geometry: Geometry::Cluster,
        }
    }
}

/// A blind interference alignment problem instance: topology plus message
/// origins and per-receiver demand sets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CBProblem {
    pub topology: NetworkTopology,
    /// Message id → originating transmitter.
    pub origin: BTreeMap<String, String>,
    /// Receiver id → set of desired message ids.
    pub desired: BTreeMap<String, BTreeSet<String>>,
    /// Cell labels for per-cell accounting.
    pub cells: CellGrouping,
}

impl CBProblem {
    /// Checks all structural invariants; every generator output passes this.
    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        let mut wanted: BTreeSet<&str> = BTreeSet::new();
        for (m, t) in &self.origin {
            if m.is_empty() {
                return Err(Error::Parse("empty message id".into()));
            }
            if !self.topology.transmitters.contains_key(t) {
                return Err(Error::Parse(format!("message {m}: origin {t} is not a declared transmitter")));
            }
        }
        for (r, msgs) in &self.desired {
            if !self.topology.receivers.contains_key(r) {
                return Err(Error::Parse(format!("desired set references undeclared receiver {r}")));
            }
            for m in msgs {
                let Some(t) = self.origin.get(m) else {
                    return Err(Error::Parse(format!("receiver {r} desires undeclared message {m}")));
                };
                if !self.topology.connected(r, t) {
                    return Err(Error::Parse(format!(
                        "receiver {r} desires message {m} but does not hear its origin {t}"
                    )));
                }
                wanted.insert(m);
            }
        }
        for m in self.origin.keys() {
            if !wanted.contains(m.as_str()) {
                return Err(Error::Parse(format!("message {m} is desired by no receiver")));
            }
        }
        let labeled: BTreeSet<&String> = self.cells.cell.keys().collect();
        let txs: BTreeSet<&String> = self.topology.transmitters.keys().collect();
        if labeled != txs {
            return Err(Error::Parse("cell labels must cover exactly the transmitters".into()));
        }
        Ok(())
    }

    /// Messages originating at transmitter `t`, in id order.
    pub fn messages_of(&self, t: &str) -> BTreeSet<String> {
        self.origin
            .iter()
            .filter(|(_, tx)| tx.as_str() == t)
            .map(|(m, _)| m.clone())
            .collect()
    }

    /// Receivers that desire message `m`, in id order.
    pub fn destinations(&self, m: &str) -> Vec<&str> {
        self.desired
            .iter()
            .filter(|(_, set)| set.contains(m))
            .map(|(r, _)| r.as_str())
            .collect()
    }

    /// Cell label of the transmitter originating message `m`.
    pub fn cell_of_message(&self, m: &str) -> Option<&str> {
        self.cells.cell.get(self.origin.get(m)?).map(|s| s.as_str())
    }
}

// ─── Generators ─────────────────────────────────────────────────────────────

/// Link direction for cluster constructors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Downlink,
    Uplink,
}

fn single_antenna(ids: impl IntoIterator<Item = String>) -> BTreeMap<String, u32> {
    ids.into_iter().map(|id| (id, 1)).collect()
}

/// Cycle of `k` single-antenna cells with one user on each shared boundary
/// per adjacent cell. The user of cell `c` on its boundary with cell `c+1`
/// hears exactly transmitters `c` and `c+1`; every user wants one message
/// from its own base station.
pub fn make_linear_array(k: usize) -> Result<CBProblem> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!("linear array needs at least 3 cells, got {k}")));
    }
    let tx = |c: usize| format!("t{c}");
    let mut connectivity = BTreeSet::new();
    let mut origin = BTreeMap::new();
    let mut desired: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut receivers = Vec::new();
    for c in 0..k {
        for n in [(c + 1) % k, (c + k - 1) % k] {
            let user = format!("u{c}-{n}");
            let msg = format!("m{c}-{n}");
            connectivity.insert((user.clone(), tx(c)));
            connectivity.insert((user.clone(), tx(n)));
            origin.insert(msg.clone(), tx(c));
            desired.insert(user.clone(), BTreeSet::from([msg]));
            receivers.push(user);
        }
    }
    let topology = NetworkTopology {
        transmitters: single_antenna((0..k).map(tx)),
        receivers: single_antenna(receivers),
        connectivity,
    };
    let mut cells = CellGrouping::identity(&topology);
    cells.geometry = Geometry::Linear { cells: k };
    let p = CBProblem { topology, origin, desired, cells };
    p.validate()?;
    Ok(p)
}

/// `rows × cols` grid torus with four edge-boundary users per cell, each
/// hearing its own and the across-edge transmitter; four messages per cell.
pub fn make_square_array(rows: usize, cols: usize) -> Result<CBProblem> {
    if rows < 3 || cols < 3 {
        return Err(Error::InvalidParameter(format!(
            "square array needs dimensions of at least 3, got {rows}x{cols}"
        )));
    }
    let tx = |i: usize, j: usize| format!("t{i},{j}");
    // Direction → cell offset, with row index growing southward.
    let dirs: [(&str, isize, isize); 4] = [("e", 0, 1), ("n", -1, 0), ("s", 1, 0), ("w", 0, -1)];
    let mut connectivity = BTreeSet::new();
    let mut origin = BTreeMap::new();
    let mut desired: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut receivers = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            for (d, di, dj) in dirs {
                let ni = (i as isize + di).rem_euclid(rows as isize) as usize;
                let nj = (j as isize + dj).rem_euclid(cols as isize) as usize;
                let user = format!("u{i},{j},{d}");
                let msg = format!("m{i},{j},{d}");
                connectivity.insert((user.clone(), tx(i, j)));
                connectivity.insert((user.clone(), tx(ni, nj)));
                origin.insert(msg.clone(), tx(i, j));
                desired.insert(user.clone(), BTreeSet::from([msg]));
                receivers.push(user);
            }
        }
    }
    let topology = NetworkTopology {
        transmitters: single_antenna((0..rows).flat_map(|i| (0..cols).map(move |j| tx(i, j)))),
        receivers: single_antenna(receivers),
        connectivity,
    };
    let mut cells = CellGrouping::identity(&topology);
    cells.geometry = Geometry::Square { rows, cols };
    let p = CBProblem { topology, origin, desired, cells };
    p.validate()?;
    Ok(p)
}

/// Axial-coordinate neighbor offsets of a hexagonal lattice, with the
/// direction tags used in node ids.
pub const HEX_DIRS: [(&str, isize, isize); 6] = [
    ("e", 1, 0),
    ("w", -1, 0),
    ("se", 0, 1),
    ("nw", 0, -1),
    ("ne", 1, -1),
    ("sw", -1, 1),
];

/// Hexagonal torus in axial coordinates `(q, r)` with six boundary users per
/// cell, one per shared side; six messages per cell.
pub fn make_hex_array(rows: usize, cols: usize) -> Result<CBProblem> {
    if rows < 3 || cols < 3 {
        return Err(Error::InvalidParameter(format!(
            "hex array needs dimensions of at least 3, got {rows}x{cols}"
        )));
    }
    // `rows` counts distinct q values, `cols` distinct r values.
    let tx = |q: usize, r: usize| format!("t{q},{r}");
    let mut connectivity = BTreeSet::new();
    let mut origin = BTreeMap::new();
    let mut desired: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut receivers = Vec::new();
    for q in 0..rows {
        for r in 0..cols {
            for (d, dq, dr) in HEX_DIRS {
                let nq = (q as isize + dq).rem_euclid(rows as isize) as usize;
                let nr = (r as isize + dr).rem_euclid(cols as isize) as usize;
                let user = format!("u{q},{r},{d}");
                let msg = format!("m{q},{r},{d}");
                connectivity.insert((user.clone(), tx(q, r)));
                connectivity.insert((user.clone(), tx(nq, nr)));
                origin.insert(msg.clone(), tx(q, r));
                desired.insert(user.clone(), BTreeSet::from([msg]));
                receivers.push(user);
            }
        }
    }
    let topology = NetworkTopology {
        transmitters: single_antenna((0..rows).flat_map(|q| (0..cols).map(move |r| tx(q, r)))),
        receivers: single_antenna(receivers),
        connectivity,
    };
    let mut cells = CellGrouping::identity(&topology);
    cells.geometry = Geometry::Hex { rows, cols };
    let p = CBProblem { topology, origin, desired, cells };
    p.validate()?;
    Ok(p)
}

/// Four cells A–D on a square with users on the four shared boundaries.
///
/// Downlink unmerged: eight single-antenna users, one message each from the
/// user's own base station. With `merged` set, the two statistically
/// equivalent users on each boundary are fused into one receiver wanting
/// both messages (a partially connected X network). `Direction::Uplink`
/// returns the reciprocal network.
pub fn make_four_cell(direction: Direction, merged: bool) -> Result<CBProblem> {
    // user → (own base station, other heard base station)
    let users: [(&str, &str, &str); 8] = [
        ("a1", "A", "B"),
        ("a2", "A", "C"),
        ("b1", "B", "A"),
        ("b2", "B", "D"),
        ("c1", "C", "D"),
        ("c2", "C", "A"),
        ("d1", "D", "C"),
        ("d2", "D", "B"),
    ];
    let p = if !merged {
        let mut connectivity = BTreeSet::new();
        let mut origin = BTreeMap::new();
        let mut desired: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (u, own, other) in users {
            connectivity.insert((u.to_string(), own.to_string()));
            connectivity.insert((u.to_string(), other.to_string()));
            origin.insert(u.to_string(), own.to_string());
            desired.insert(u.to_string(), BTreeSet::from([u.to_string()]));
        }
        let topology = NetworkTopology {
            transmitters: single_antenna(["A", "B", "C", "D"].map(String::from)),
            receivers: single_antenna(users.map(|(u, _, _)| u.to_string())),
            connectivity,
        };
        let cells = CellGrouping::identity(&topology);
        CBProblem { topology, origin, desired, cells }
    } else {
        // Each boundary pair fuses into one receiver hearing both stations.
        let fused: [(&str, [&str; 2], [&str; 2]); 4] = [
            ("ab", ["a1", "b1"], ["A", "B"]),
            ("bd", ["b2", "d2"], ["B", "D"]),
            ("ca", ["a2", "c2"], ["A", "C"]),
            ("cd", ["c1", "d1"], ["C", "D"]),
        ];
        let mut connectivity = BTreeSet::new();
        let mut origin = BTreeMap::new();
        let mut desired: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (rx, msgs, stations) in fused {
            for t in stations {
                connectivity.insert((rx.to_string(), t.to_string()));
            }
            desired.insert(rx.to_string(), msgs.iter().map(|m| m.to_string()).collect());
        }
        for (u, own, _) in users {
            origin.insert(u.to_string(), own.to_string());
        }
        let topology = NetworkTopology {
            transmitters: single_antenna(["A", "B", "C", "D"].map(String::from)),
            receivers: single_antenna(fused.map(|(rx, _, _)| rx.to_string())),
            connectivity,
        };
        let cells = CellGrouping::identity(&topology);
        CBProblem { topology, origin, desired, cells }
    };
    let p = match direction {
        Direction::Downlink => p,
        Direction::Uplink => reciprocal(&p)?,
    };
    p.validate()?;
    Ok(p)
}

/// Macro cell A (two antennas, two users) flanked by femto cells B and C
/// whose single-antenna users sit in macrocell dead spots. Femto
/// transmitters interfere with the macro users but not vice versa.
pub fn make_macro_femto() -> Result<CBProblem> {
    let transmitters: BTreeMap<String, u32> =
        [("A", 2), ("B", 2), ("C", 2)].map(|(t, n)| (t.to_string(), n)).into();
    let receivers: BTreeMap<String, u32> =
        [("a1", 2), ("a2", 2), ("b1", 1), ("c1", 1)].map(|(r, n)| (r.to_string(), n)).into();
    let links = [("a1", "A"), ("a1", "B"), ("a2", "A"), ("a2", "C"), ("b1", "B"), ("c1", "C")];
    let topology = NetworkTopology {
        transmitters,
        receivers,
        connectivity: links.map(|(r, t)| (r.to_string(), t.to_string())).into(),
    };
    let origin: BTreeMap<String, String> =
        [("a1", "A"), ("a2", "A"), ("b1", "B"), ("c1", "C")].map(|(m, t)| (m.to_string(), t.to_string())).into();
    let desired: BTreeMap<String, BTreeSet<String>> = ["a1", "a2", "b1", "c1"]
        .map(|u| (u.to_string(), BTreeSet::from([u.to_string()])))
        .into();
    let cells = CellGrouping::identity(&topology);
    let p = CBProblem { topology, origin, desired, cells };
    p.validate()?;
    Ok(p)
}

/// Offsets (mod `k`, as nonzero residues) from which receiver `r` is
/// disconnected in the symmetric `(D, U, K)` ring family.
fn duk_disconnected_offsets(d: usize, u: usize, k: usize) -> BTreeSet<usize> {
    let mut off = BTreeSet::new();
    for j in 1..=u {
        off.insert(j % k);
        off.insert((k - j) % k);
    }
    for j in (u + 1)..=d {
        off.insert(j % k);
    }
    off
}

/// Symmetric ring of `k` single-antenna transmitter/receiver pairs where
/// receiver `r` is disconnected from transmitters `r±1, …, r±u` and
/// `r+u+1, …, r+d` (mod `k`) and hears everyone else, including its own
/// transmitter `r`, which sends its one message.
pub fn make_symmetric_duk(d: usize, u: usize, k: usize) -> Result<CBProblem> {
    if k <= d + u || d < u {
        return Err(Error::InvalidParameter(format!(
            "(D,U,K)=({d},{u},{k}) needs K > D+U and D >= U"
        )));
    }
    let off = duk_disconnected_offsets(d, u, k);
    let mut connectivity = BTreeSet::new();
    let mut origin = BTreeMap::new();
    let mut desired: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for r in 1..=k {
        for t in 1..=k {
            let delta = (t + k - r) % k;
            if !off.contains(&delta) {
                connectivity.insert((format!("r{r}"), format!("t{t}")));
            }
        }
        origin.insert(format!("w{r}"), format!("t{r}"));
        desired.insert(format!("r{r}"), BTreeSet::from([format!("w{r}")]));
    }
    let topology = NetworkTopology {
        transmitters: single_antenna((1..=k).map(|t| format!("t{t}"))),
        receivers: single_antenna((1..=k).map(|r| format!("r{r}"))),
        connectivity,
    };
    let cells = CellGrouping::identity(&topology);
    let p = CBProblem { topology, origin, desired, cells };
    p.validate()?;
    Ok(p)
}

/// Swaps the roles of transmitters and receivers for every message: the old
/// desiring receiver becomes the origin and the old origin becomes the
/// desiring receiver, with antenna counts preserved and the connectivity
/// transposed.
///
/// Cell labels carry over by message bookkeeping — a new transmitter takes
/// the label of the cell its outgoing messages originally came from when
/// that is unambiguous, and its own id otherwise — which makes the map an
/// involution on every problem this crate generates. Multicast messages have
/// no single reciprocal origin and are rejected.
pub fn reciprocal(p: &CBProblem) -> Result<CBProblem> {
    let mut origin = BTreeMap::new();
    let mut desired: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (m, old_tx) in &p.origin {
        let dests = p.destinations(m);
        let [dest] = dests.as_slice() else {
            return Err(Error::InvalidParameter(format!(
                "reciprocal is defined for unicast messages; {m} has {} destinations",
                dests.len()
            )));
        };
        origin.insert(m.clone(), dest.to_string());
        desired.entry(old_tx.clone()).or_default().insert(m.clone());
    }
    // Old receivers that desire nothing become transmitters sending nothing;
    // old transmitters originating nothing become idle receivers.
    for r in p.topology.transmitters.keys() {
        desired.entry(r.clone()).or_default();
    }
    let topology = NetworkTopology {
        transmitters: p.topology.receivers.clone(),
        receivers: p.topology.transmitters.clone(),
        connectivity: p.topology.connectivity.iter().map(|(r, t)| (t.clone(), r.clone())).collect(),
    };
    let cell = topology
        .transmitters
        .keys()
        .map(|t| {
            let labels: BTreeSet<&String> = p
                .desired
                .get(t)
                .into_iter()
                .flatten()
                .filter_map(|m| p.cells.cell.get(&p.origin[m]))
                .collect();
            let label = match labels.iter().next() {
                Some(first) if labels.len() == 1 => (*first).clone(),
                _ => t.clone(),
            };
            (t.clone(), label)
        })
        .collect();
    let out = CBProblem {
        topology,
        origin,
        desired,
        cells: CellGrouping { cell, geometry: p.cells.geometry },
    };
    out.validate()?;
    Ok(out)
}

// ─── JSON interchange ───────────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: String,
    antennas: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MessageDoc {
    id: String,
    origin: String,
    destinations: Vec<String>,
}

fn is_cluster(g: &Geometry) -> bool {
    *g == Geometry::Cluster
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDoc {
    transmitters: Vec<NodeDoc>,
    receivers: Vec<NodeDoc>,
    connectivity: Vec<(String, String)>,
    messages: Vec<MessageDoc>,
    cells: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "is_cluster")]
    geometry: Geometry,
}

/// Serializes a problem to its JSON document form.
pub fn store_problem(p: &CBProblem) -> String {
    let doc = ProblemDoc {
        transmitters: p.topology.transmitters.iter().map(|(id, &antennas)| NodeDoc { id: id.clone(), antennas }).collect(),
        receivers: p.topology.receivers.iter().map(|(id, &antennas)| NodeDoc { id: id.clone(), antennas }).collect(),
        connectivity: p.topology.connectivity.iter().cloned().collect(),
        messages: p
            .origin
            .iter()
            .map(|(id, origin)| MessageDoc {
                id: id.clone(),
                origin: origin.clone(),
                destinations: p.destinations(id).iter().map(|s| s.to_string()).collect(),
            })
            .collect(),
        cells: p.cells.cell.clone(),
        geometry: p.cells.geometry,
    };
    serde_json::to_string_pretty(&doc).expect("problem document serializes")
}

/// Parses and validates a problem from its JSON document form.
pub fn load_problem(text: &str) -> Result<CBProblem> {
    let doc: ProblemDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut transmitters = BTreeMap::new();
    for n in doc.transmitters {
        if transmitters.insert(n.id.clone(), n.antennas).is_some() {
            return Err(Error::Parse(format!("duplicate transmitter id {}", n.id)));
        }
    }
    let mut receivers = BTreeMap::new();
    for n in doc.receivers {
        if receivers.insert(n.id.clone(), n.antennas).is_some() {
            return Err(Error::Parse(format!("duplicate receiver id {}", n.id)));
        }
    }
    let mut origin = BTreeMap::new();
    let mut desired: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for r in receivers.keys() {
        desired.insert(r.clone(), BTreeSet::new());
    }
    for m in doc.messages {
        if origin.insert(m.id.clone(), m.origin.clone()).is_some() {
            return Err(Error::Parse(format!("duplicate message id {}", m.id)));
        }
        for dest in m.destinations {
            desired
                .get_mut(&dest)
                .ok_or_else(|| Error::Parse(format!("message {}: destination {dest} is not a declared receiver", m.id)))?
                .insert(m.id.clone());
        }
    }
    let p = CBProblem {
        topology: NetworkTopology {
            transmitters,
            receivers,
            connectivity: doc.connectivity.into_iter().collect(),
        },
        origin,
        desired,
        cells: CellGrouping { cell: doc.cells, geometry: doc.geometry },
    };
    p.validate()?;
    Ok(p)
}
