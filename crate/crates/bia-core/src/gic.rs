//! Mappings between partially connected alignment problems and Gaussian
//! index coding, plus the half-DoF consistency test and a message-level
//! XOR decodability check.
//!
//! An index coding problem describes each receiver by the messages it wants
//! and the messages it already holds as side information. A partially
//! connected network induces one naturally: whatever a disconnected
//! transmitter would have sent can be treated as side information, because
//! the receiver never hears it — [`cb_to_gic`] performs that translation and
//! [`gic_to_cb`] the reverse one, with a dedicated single-antenna
//! transmitter per message.
//!
//! The translation is useful because index coding results carry back. The
//! flagship case is symmetric half rate: every message can reach ½ DoF
//! exactly when the pairwise alignments forced at each receiver are mutually
//! consistent, which [`half_dof_feasible`] decides by merging co-interfering
//! messages into groups and checking that no receiver's desired message is
//! grouped with its own interference. Feasible instances come with a two-slot
//! beamforming scheme that the rank verifier accepts; infeasible ones come
//! with a replayable chain of forced alignments that pins the contradiction.
//!
//! [`verify_xor_scheme`] works the opposite side of the street: it checks a
//! finite-field network code (XOR of message bits before channel coding),
//! which can beat every beamforming scheme once transmitters cooperate and
//! receivers hold side information — a gap the four-message overlay example
//! exhibits.

use crate::net::{CBProblem, CellGrouping, NetworkTopology};
use crate::scheme::{LinearScheme, Stream};
use crate::{C64, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::collections::BTreeSet;

/// One receiver of an index coding problem: what it wants and what it
/// already holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GICReceiver {
    pub antennas: u32,
    /// Messages this receiver wants.
    pub desired: BTreeSet<String>,
    /// Side information: messages available to the receiver for free.
    pub known: BTreeSet<String>,
}

/// A Gaussian index coding problem: a message universe and per-receiver
/// desired/known sets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GICProblem {
    pub messages: BTreeSet<String>,
    pub receivers: BTreeMap<String, GICReceiver>,
}

impl GICProblem {
    /// Checks structural invariants: nonempty disjoint desired/known sets
    /// drawn from the message universe, positive antenna counts, and every
    /// message wanted somewhere.
    pub fn validate(&self) -> Result<()> {
        let mut wanted: BTreeSet<&str> = BTreeSet::new();
        for (r, rx) in &self.receivers {
            if r.is_empty() {
                return Err(Error::Parse("empty receiver id".into()));
            }
            if rx.antennas == 0 {
                return Err(Error::Parse(format!("receiver {r}: antenna count must be positive")));
            }
            if rx.desired.is_empty() {
                return Err(Error::Parse(format!("receiver {r} desires no message")));
            }
            for m in rx.desired.iter().chain(rx.known.iter()) {
                if !self.messages.contains(m) {
                    return Err(Error::Parse(format!("receiver {r} references undeclared message {m}")));
                }
            }
            if let Some(m) = rx.desired.intersection(&rx.known).next() {
                return Err(Error::Parse(format!("receiver {r} both desires and already knows {m}")));
            }
            wanted.extend(rx.desired.iter().map(String::as_str));
        }
        for m in &self.messages {
            if m.is_empty() {
                return Err(Error::Parse("empty message id".into()));
            }
            if !wanted.contains(m.as_str()) {
                return Err(Error::Parse(format!("message {m} is desired by no receiver")));
            }
        }
        Ok(())
    }

    /// Messages that interfere at receiver `r`: neither desired by it nor
    /// known to it.
    pub fn interference_at(&self, r: &str) -> BTreeSet<String> {
        let Some(rx) = self.receivers.get(r) else {
            return BTreeSet::new();
        };
        self.messages
            .iter()
            .filter(|m| !rx.desired.contains(*m) && !rx.known.contains(*m))
            .cloned()
            .collect()
    }
}

/// Index coding view of an alignment problem: desired sets carry over, and
/// the side information at each receiver is every message originating at a
/// transmitter that receiver does not hear.
///
/// Receivers that desire nothing impose no index coding constraint and are
/// dropped.
pub fn cb_to_gic(p: &CBProblem) -> GICProblem {
    let receivers = p
        .topology
        .receivers
        .iter()
        .filter_map(|(r, &antennas)| {
            let desired = p.desired.get(r).cloned().unwrap_or_default();
            if desired.is_empty() {
                return None;
            }
            let known = p
                .topology
                .transmitters
                .keys()
                .filter(|t| !p.topology.connected(r, t))
                .flat_map(|t| p.messages_of(t))
                .collect();
            Some((r.clone(), GICReceiver { antennas, desired, known }))
        })
        .collect();
    GICProblem { messages: p.origin.keys().cloned().collect(), receivers }
}

/// Alignment-problem view of an index coding problem: one single-antenna
/// transmitter per message, named after it, disconnected exactly from the
/// receivers that hold the message as side information.
pub fn gic_to_cb(g: &GICProblem) -> Result<CBProblem> {
    g.validate()?;
    let transmitters: BTreeMap<String, u32> = g.messages.iter().map(|m| (m.clone(), 1)).collect();
    let mut connectivity = BTreeSet::new();
    for (r, rx) in &g.receivers {
        for m in &g.messages {
            if !rx.known.contains(m) {
                connectivity.insert((r.clone(), m.clone()));
            }
        }
    }
    let topology = NetworkTopology {
        transmitters,
        receivers: g.receivers.iter().map(|(r, rx)| (r.clone(), rx.antennas)).collect(),
        connectivity,
    };
    let cells = CellGrouping::identity(&topology);
    let p = CBProblem {
        topology,
        origin: g.messages.iter().map(|m| (m.clone(), m.clone())).collect(),
        desired: g.receivers.iter().map(|(r, rx)| (r.clone(), rx.desired.clone())).collect(),
        cells,
    };
    p.validate()?;
    Ok(p)
}

/// One forced-alignment step in an infeasibility witness: `first` and
/// `second` both interfere at `receiver`, so their beams must align there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStep {
    pub first: String,
    pub second: String,
    pub receiver: String,
}

/// Outcome of the half-DoF consistency test.
#[derive(Debug, Clone)]
pub enum HalfDofVerdict {
    /// Consistent alignments. `groups[k]` lists the messages sharing the
    /// `k`-th beam direction, and `scheme` is the two-slot construction the
    /// rank verifier accepts on [`gic_to_cb`] of the problem.
    Feasible { groups: Vec<BTreeSet<String>>, scheme: LinearScheme },
    /// Inconsistent alignments: at `receiver`, the chain of forced
    /// alignments links its `desired` message to its own `interferer`, so
    /// separating them is impossible at half rate. The chain starts at
    /// `desired`, ends at `interferer`, and each step is a co-interference
    /// pair at the named receiver.
    Infeasible { receiver: String, desired: String, interferer: String, chain: Vec<ChainStep> },
}

impl HalfDofVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, HalfDofVerdict::Feasible { .. })
    }
}

/// Decides whether every message can simultaneously achieve ½ DoF, for
/// problems where each receiver wants exactly one message through one
/// antenna.
///
/// Any two messages interfering at a common receiver must share a beam
/// direction there, so the transitive closure of co-interference partitions
/// the messages into alignment groups. Half rate works if and only if no
/// receiver's desired message lands in the same group as one of its own
/// interferers: if it does, the two cannot be separated (the witness chain
/// replays the forced alignments); if it never happens, assigning the
/// pairwise independent two-dimensional beams `[1, k]ᵀ` to the groups serves
/// every message in two slots.
pub fn half_dof_feasible(g: &GICProblem) -> Result<HalfDofVerdict> {
    g.validate()?;
    for (r, rx) in &g.receivers {
        if rx.desired.len() != 1 || rx.antennas != 1 {
            return Err(Error::Unsupported(format!(
                "half-DoF test needs single-antenna unicast receivers; {r} has {} antennas and {} desired messages",
                rx.antennas,
                rx.desired.len()
            )));
        }
    }
    let interference: BTreeMap<&str, BTreeSet<String>> =
        g.receivers.keys().map(|r| (r.as_str(), g.interference_at(r))).collect();

    // Union-find over messages: everything interfering at one receiver
    // must align there, hence belongs to one group.
    let index: BTreeMap<&str, usize> = g.messages.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
    let mut parent: Vec<usize> = (0..g.messages.len()).collect();
    fn root(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for set in interference.values() {
        let mut ids = set.iter().map(|m| index[m.as_str()]);
        if let Some(first) = ids.next() {
            for other in ids {
                let (a, b) = (root(&mut parent, first), root(&mut parent, other));
                parent[a] = b;
            }
        }
    }

    // A desired message grouped with an interferer at its own receiver is
    // the contradiction; scan in id order so the verdict is deterministic.
    for (r, set) in &interference {
        let rx = &g.receivers[*r];
        let desired = rx.desired.first().expect("unicast receiver has a desired message");
        let d = root(&mut parent, index[desired.as_str()]);
        for m in set {
            if root(&mut parent, index[m.as_str()]) == d {
                let chain = alignment_chain(&interference, desired, m);
                return Ok(HalfDofVerdict::Infeasible {
                    receiver: r.to_string(),
                    desired: desired.clone(),
                    interferer: m.clone(),
                    chain,
                });
            }
        }
    }

    // Consistent: groups ordered by smallest member, group k beamformed
    // along [1, k]ᵀ — pairwise independent directions (distinct slopes).
    let mut by_root: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for m in &g.messages {
        by_root.entry(root(&mut parent, index[m.as_str()])).or_default().insert(m.clone());
    }
    let mut groups: Vec<BTreeSet<String>> = by_root.into_values().collect();
    groups.sort_by(|a, b| a.first().cmp(&b.first()));
    let beam_of: BTreeMap<&str, usize> = groups
        .iter()
        .enumerate()
        .flat_map(|(k, grp)| grp.iter().map(move |m| (m.as_str(), k)))
        .collect();
    let streams = g
        .messages
        .iter()
        .map(|m| Stream {
            message: m.clone(),
            vectors: vec![
                vec![C64::new(1.0, 0.0)],
                vec![C64::new(beam_of[m.as_str()] as f64, 0.0)],
            ],
        })
        .collect();
    let scheme = LinearScheme {
        slots: 2,
        declared_tau: 2,
        streams,
        name: "half-rate-groups".into(),
    };
    Ok(HalfDofVerdict::Feasible { groups, scheme })
}

/// Shortest chain of co-interference pairs linking `from` to `to`, by
/// breadth-first search in id order (ties resolve to lexicographically
/// smallest neighbors and receivers, so witnesses are canonical).
fn alignment_chain(
    interference: &BTreeMap<&str, BTreeSet<String>>,
    from: &str,
    to: &str,
) -> Vec<ChainStep> {
    // Edge (m, m') labeled with the first receiver where both interfere.
    let mut label: BTreeMap<(&str, &str), &str> = BTreeMap::new();
    let mut adjacent: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (r, set) in interference {
        for m in set {
            for m2 in set {
                if m != m2 {
                    label.entry((m.as_str(), m2.as_str())).or_insert(*r);
                    adjacent.entry(m.as_str()).or_default().insert(m2.as_str());
                }
            }
        }
    }
    let mut predecessor: BTreeMap<&str, &str> = BTreeMap::new();
    let mut queue = std::collections::VecDeque::from([from]);
    'search: while let Some(m) = queue.pop_front() {
        for &next in adjacent.get(m).into_iter().flatten() {
            if next != from && !predecessor.contains_key(next) {
                predecessor.insert(next, m);
                if next == to {
                    break 'search;
                }
                queue.push_back(next);
            }
        }
    }
    let mut path = vec![to];
    while let Some(&prev) = predecessor.get(path.last().expect("path is nonempty")) {
        path.push(prev);
    }
    path.reverse();
    path.windows(2)
        .map(|w| ChainStep {
            first: w[0].to_string(),
            second: w[1].to_string(),
            receiver: label[&(w[0], w[1])].to_string(),
        })
        .collect()
}

/// A finite-field coded message: the XOR of the named original messages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodedMessage {
    pub id: String,
    pub terms: BTreeSet<String>,
}

/// Outcome of a message-level XOR plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XorReport {
    /// Original messages recovered at every receiver that desires them.
    pub delivered: BTreeSet<String>,
    /// Messages recovered per receiver.
    pub per_receiver: BTreeMap<String, BTreeSet<String>>,
    /// Total DoF per channel use: the number of delivered messages.
    pub dof: usize,
}

/// Checks a message-level network code against an index coding problem.
///
/// The coded messages are beamformed generically and sent concurrently in
/// one channel use, so a receiver with `antennas` antennas resolves them all
/// exactly when the coded messages it cannot already compute from side
/// information number at most `antennas`. It then recovers an original
/// message by XOR whenever some coded message contains it with all other
/// terms known. This operates entirely above the physical layer — it is the
/// cooperative/cognitive relaxation that beamforming alone cannot reach, not
/// an achievability check for the underlying network.
pub fn verify_xor_scheme(g: &GICProblem, plan: &[CodedMessage]) -> Result<XorReport> {
    g.validate()?;
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for coded in plan {
        if coded.terms.is_empty() {
            return Err(Error::InvalidParameter(format!("coded message {} has no terms", coded.id)));
        }
        if !seen.insert(&coded.id) {
            return Err(Error::InvalidParameter(format!("duplicate coded message id {}", coded.id)));
        }
        for m in &coded.terms {
            if !g.messages.contains(m) {
                return Err(Error::InvalidParameter(format!(
                    "coded message {} references undeclared message {m}",
                    coded.id
                )));
            }
        }
    }
    let mut per_receiver: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (r, rx) in &g.receivers {
        let computable =
            plan.iter().filter(|coded| coded.terms.iter().all(|m| rx.known.contains(m))).count();
        let unresolved = plan.len() - computable;
        let recovered = if unresolved <= rx.antennas as usize {
            // All coded messages in hand; peel singles by XOR with side
            // information.
            g.messages
                .iter()
                .filter(|m| {
                    plan.iter().any(|coded| {
                        coded.terms.contains(*m)
                            && coded.terms.iter().all(|t| t == *m || rx.known.contains(t))
                    })
                })
                .cloned()
                .collect()
        } else {
            BTreeSet::new()
        };
        per_receiver.insert(r.clone(), recovered);
    }
    let delivered: BTreeSet<String> = g
        .messages
        .iter()
        .filter(|m| {
            let wanted_by: Vec<&String> =
                g.receivers.iter().filter(|(_, rx)| rx.desired.contains(*m)).map(|(r, _)| r).collect();
            !wanted_by.is_empty() && wanted_by.iter().all(|r| per_receiver[*r].contains(*m))
        })
        .cloned()
        .collect();
    let dof = delivered.len();
    Ok(XorReport { delivered, per_receiver, dof })
}

/// Five-message unicast problem whose alignment requirements are
/// inconsistent: receivers 1 and 2 force `W3 ~ W4 ~ W5`, yet `W5` interferes
/// at receiver 3, which wants `W3` — so half rate per message is infeasible.
pub fn five_unicast_example() -> GICProblem {
    let known: [(&str, &[&str]); 5] = [
        ("W1", &["W2", "W5"]),
        ("W2", &["W1", "W3"]),
        ("W3", &["W1", "W2", "W4"]),
        ("W4", &["W1", "W2", "W3", "W5"]),
        ("W5", &["W1", "W2", "W3", "W4"]),
    ];
    let receivers = known
        .iter()
        .enumerate()
        .map(|(i, (want, have))| {
            let rx = GICReceiver {
                antennas: 1,
                desired: BTreeSet::from([want.to_string()]),
                known: have.iter().map(|m| m.to_string()).collect(),
            };
            (format!("r{}", i + 1), rx)
        })
        .collect();
    let g = GICProblem {
        messages: (1..=5).map(|i| format!("W{i}")).collect(),
        receivers,
    };
    g.validate().expect("built-in example validates");
    g
}

// ─── JSON interchange ───────────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GICReceiverDoc {
    id: String,
    antennas: u32,
    desired: Vec<String>,
    known: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GICDoc {
    messages: Vec<String>,
    receivers: Vec<GICReceiverDoc>,
}

/// Serializes an index coding problem to its JSON document form.
pub fn store_gic(g: &GICProblem) -> String {
    let doc = GICDoc {
        messages: g.messages.iter().cloned().collect(),
        receivers: g
            .receivers
            .iter()
            .map(|(id, rx)| GICReceiverDoc {
                id: id.clone(),
                antennas: rx.antennas,
                desired: rx.desired.iter().cloned().collect(),
                known: rx.known.iter().cloned().collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("index coding document serializes")
}

/// Parses and validates an index coding problem from its JSON document form.
pub fn load_gic(text: &str) -> Result<GICProblem> {
    let doc: GICDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut receivers = BTreeMap::new();
    for rx in doc.receivers {
        let parsed = GICReceiver {
            antennas: rx.antennas,
            desired: rx.desired.into_iter().collect(),
            known: rx.known.into_iter().collect(),
        };
        if receivers.insert(rx.id.clone(), parsed).is_some() {
            return Err(Error::Parse(format!("duplicate receiver id {}", rx.id)));
        }
    }
    let g = GICProblem { messages: doc.messages.into_iter().collect(), receivers };
    g.validate()?;
    Ok(g)
}
