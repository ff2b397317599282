//! Converse bounds and the orthogonal baseline.
//!
//! The converse side: a single-antenna receiver that decodes its desired
//! message can subtract it and then, for any interfering transmitter it
//! hears, resolve that transmitter's entire message load as well — so the
//! desired message plus everything the interferer sends cannot exceed one
//! DoF. Collecting those resolvability constraints over every (receiver,
//! interferer) pair yields a polytope over per-message DoF variables; exact
//! rational LPs over it produce the sum bound and the symmetric per-message
//! and per-cell bounds.
//!
//! The baseline side: the best orthogonal (interference-avoiding) plan,
//! found by exhaustive activation-pattern search, for the gap that blind
//! alignment beats.

use crate::net::CBProblem;
use crate::scheme::{Phase, Schedule};
use crate::simplex::{maximize, LinearProgram};
use crate::{rat, Error, Rat, Result};
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};

// ─── DoF polytope ───────────────────────────────────────────────────────────

/// One resolvability constraint: the named messages' DoF sum to at most
/// `rhs` (the generating receiver's antenna count).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub messages: BTreeSet<String>,
    pub rhs: Rat,
    /// Generating receiver and, when the constraint involves one, the
    /// interfering transmitter whose load it absorbs.
    pub receiver: String,
    pub transmitter: Option<String>,
}

/// Outer bound on per-message DoF as `0/1`-coefficient inequalities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoFPolytope {
    /// Variable order, one per message.
    pub messages: Vec<String>,
    pub constraints: Vec<Constraint>,
}

impl DoFPolytope {
    fn lp_rows(&self) -> Vec<(Vec<Rat>, Rat)> {
        let index: BTreeMap<&str, usize> =
            self.messages.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
        self.constraints
            .iter()
            .map(|c| {
                let mut row = vec![Rat::zero(); self.messages.len()];
                for m in &c.messages {
                    row[index[m.as_str()]] = Rat::one();
                }
                (row, c.rhs.clone())
            })
            .collect()
    }
}

/// Converse values: the sum ceiling, and the symmetric (equal-demand)
/// ceilings per message and per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ConverseBounds {
    pub sum: Rat,
    pub per_message: Rat,
    pub per_cell: Rat,
    pub polytope: DoFPolytope,
}

impl ConverseBounds {
    /// Bound report as JSON; rationals rendered as "num/den".
    pub fn to_json(&self, p: &CBProblem) -> String {
        let per_message: BTreeMap<&str, String> =
            p.origin.keys().map(|m| (m.as_str(), self.per_message.to_string())).collect();
        let cells: BTreeSet<&String> = p.cells.cell.values().collect();
        let per_cell: BTreeMap<&str, String> =
            cells.iter().map(|c| (c.as_str(), self.per_cell.to_string())).collect();
        let constraints: Vec<serde_json::Value> = self
            .polytope
            .constraints
            .iter()
            .map(|c| {
                serde_json::json!({
                    "messages": c.messages.iter().collect::<Vec<_>>(),
                    "rhs": c.rhs.to_string(),
                    "provenance": {
                        "receiver": c.receiver,
                        "transmitter": c.transmitter,
                    },
                })
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "sum_bound": self.sum.to_string(),
            "per_message": per_message,
            "per_cell": per_cell,
            "constraints": constraints,
        }))
        .expect("bound report serializes")
    }
}

/// Builds the resolvability constraint set for `p`.
///
/// Family (i): for each receiver `r`, desired message `m*`, and connected
/// transmitter `t ≠ origin(m*)`: `d_{m*} + Σ_{m ∈ W_t} d_m ≤ 1` — after
/// decoding and subtracting `m*`, the receiver can resolve everything `t`
/// sends. Family (ii): when each of `r`'s desired messages is its origin's
/// only message, the receiver can peel its whole desired set and then any
/// single-message interferer: `Σ_{W_r} d_m + d_{m'} ≤ 1`. Every receiver
/// also contributes `Σ_{W_r} d_m ≤ 1` outright. Duplicate constraints and
/// constraints implied by a superset constraint are dropped.
fn resolvability_constraints(p: &CBProblem) -> Vec<Constraint> {
    let mut raw: Vec<Constraint> = Vec::new();
    for (r, desired) in &p.desired {
        // Per-receiver ceiling: a single antenna carries one DoF.
        if !desired.is_empty() {
            raw.push(Constraint {
                messages: desired.clone(),
                rhs: Rat::one(),
                receiver: r.clone(),
                transmitter: None,
            });
        }
        // Family (i).
        for m_star in desired {
            let own = &p.origin[m_star];
            for t in p.topology.heard_by(r) {
                if t == own {
                    continue;
                }
                let mut messages = p.messages_of(t);
                messages.insert(m_star.clone());
                raw.push(Constraint {
                    messages,
                    rhs: Rat::one(),
                    receiver: r.clone(),
                    transmitter: Some(t.to_string()),
                });
            }
        }
        // Family (ii).
        let peelable = desired
            .iter()
            .all(|m| p.messages_of(&p.origin[m]) == BTreeSet::from([m.clone()]));
        if peelable && !desired.is_empty() {
            let own_origins: BTreeSet<&String> = desired.iter().map(|m| &p.origin[m]).collect();
            for t in p.topology.heard_by(r) {
                if own_origins.iter().any(|o| o.as_str() == t) {
                    continue;
                }
                let load = p.messages_of(t);
                if load.len() == 1 {
                    let single = load.iter().next().unwrap();
                    let mut messages = desired.clone();
                    messages.insert(single.clone());
                    raw.push(Constraint {
                        messages,
                        rhs: Rat::one(),
                        receiver: r.clone(),
                        transmitter: Some(t.to_string()),
                    });
                }
            }
        }
    }
    // Dedupe by message set, then drop constraints whose message set is a
    // strict subset of another's (all right-hand sides are 1, so the
    // superset constraint implies the subset one).
    let mut by_set: BTreeMap<BTreeSet<String>, Constraint> = BTreeMap::new();
    for c in raw {
        by_set.entry(c.messages.clone()).or_insert(c);
    }
    let sets: Vec<BTreeSet<String>> = by_set.keys().cloned().collect();
    sets.iter()
        .filter(|s| !sets.iter().any(|other| *s != other && s.is_subset(other)))
        .map(|s| by_set[s].clone())
        .collect()
}

/// Converse bounds for a single-antenna-receiver problem: the exact LP
/// maximum of the DoF sum over the resolvability polytope, plus the
/// symmetric max-min optima per message and per cell.
pub fn converse_lp(p: &CBProblem) -> Result<ConverseBounds> {
    p.validate()?;
    if let Some((r, &n)) = p.topology.receivers.iter().find(|(_, &n)| n != 1) {
        return Err(Error::Unsupported(format!(
            "converse argument requires single-antenna receivers; {r} has {n}"
        )));
    }
    let messages: Vec<String> = p.origin.keys().cloned().collect();
    let constraints = resolvability_constraints(p);
    let polytope = DoFPolytope { messages: messages.clone(), constraints };
    if messages.is_empty() {
        return Ok(ConverseBounds {
            sum: Rat::zero(),
            per_message: Rat::zero(),
            per_cell: Rat::zero(),
            polytope,
        });
    }
    let rows = polytope.lp_rows();
    let n = messages.len();

    let sum = maximize(&LinearProgram { objective: vec![Rat::one(); n], constraints: rows.clone() })?
        .value;

    // Symmetric bounds in epigraph form: an extra variable t with
    // t ≤ d_m (or t ≤ the cell's sum), maximize t.
    let epigraph = |groups: Vec<Vec<usize>>| -> Result<Rat> {
        let mut constraints: Vec<(Vec<Rat>, Rat)> = rows
            .iter()
            .map(|(row, rhs)| {
                let mut r = row.clone();
                r.push(Rat::zero());
                (r, rhs.clone())
            })
            .collect();
        for group in groups {
            let mut row = vec![Rat::zero(); n + 1];
            for i in group {
                row[i] = -Rat::one();
            }
            row[n] = Rat::one();
            constraints.push((row, Rat::zero()));
        }
        let mut objective = vec![Rat::zero(); n + 1];
        objective[n] = Rat::one();
        Ok(maximize(&LinearProgram { objective, constraints })?.value)
    };

    let per_message = epigraph((0..n).map(|i| vec![i]).collect())?;
    let mut cell_groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, m) in messages.iter().enumerate() {
        let cell = p
            .cell_of_message(m)
            .ok_or_else(|| Error::InvalidParameter(format!("message {m} has no cell")))?;
        cell_groups.entry(cell).or_default().push(i);
    }
    let per_cell = epigraph(cell_groups.into_values().collect())?;

    Ok(ConverseBounds { sum, per_message, per_cell, polytope })
}

/// Sum-DoF ceiling of the four-cell cluster under full transmitter
/// cooperation and spatially i.i.d. fading (a compound-channel argument
/// that holds for any coherence model): cooperation buys nothing beyond
/// the 8/3 already achievable without it.
pub fn four_cell_cooperation_bound() -> Rat {
    rat(8, 3)
}

// ─── Orthogonal baseline ────────────────────────────────────────────────────

/// Objective for the orthogonal search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrthoObjective {
    /// Largest total DoF.
    Sum,
    /// Largest worst-case per-cell DoF.
    Symmetric,
}

/// Best orthogonal plan found, with the value it attains.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMax {
    pub value: Rat,
    pub schedule: Schedule,
    /// False when the problem exceeded the exhaustive-search cap and the
    /// result is only the best plan found, not a proven optimum.
    pub proven_optimal: bool,
}

/// Default message-count cap for exhaustive pattern enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// Incremental validity for activation patterns: serving a message means
/// serving it to every receiver that desires it, interference-free.
struct PatternBuilder<'a> {
    p: &'a CBProblem,
    chosen: Vec<&'a str>,
    /// transmitter → number of messages it currently serves
    tx_load: BTreeMap<&'a str, usize>,
    /// receiver → its serving transmitter
    serving: BTreeMap<&'a str, &'a str>,
}

impl<'a> PatternBuilder<'a> {
    fn new(p: &'a CBProblem) -> Self {
        PatternBuilder { p, chosen: Vec::new(), tx_load: BTreeMap::new(), serving: BTreeMap::new() }
    }

    fn can_add(&self, m: &'a str) -> bool {
        let tx = self.p.origin[m].as_str();
        let load = self.tx_load.get(tx).copied().unwrap_or(0) + 1;
        if load > self.p.topology.transmitters[tx] as usize {
            return false;
        }
        let destinations = self.p.destinations(m);
        // The serving transmitter's whole load must stay separable at each
        // receiver it serves, including the new ones.
        let rx_cap = |r: &str| self.p.topology.receivers[r] as usize;
        if self.serving.iter().filter(|(_, t)| **t == tx).any(|(r, _)| rx_cap(r) < load) {
            return false;
        }
        for r in &destinations {
            if rx_cap(r) < load {
                return false;
            }
            match self.serving.get(r) {
                Some(t) if *t != tx => return false,
                _ => {}
            }
            // New receiver must not hear any other active transmitter.
            if self.tx_load.keys().any(|t| *t != tx && self.p.topology.connected(r, t)) {
                return false;
            }
        }
        // Activating this transmitter must not interfere with receivers
        // already being served by others.
        if !self.tx_load.contains_key(tx) {
            for (r, t) in &self.serving {
                if *t != tx && self.p.topology.connected(r, tx) {
                    return false;
                }
            }
        }
        true
    }

    fn add(&mut self, m: &'a str) {
        let tx = self.p.origin[m].as_str();
        *self.tx_load.entry(tx).or_insert(0) += 1;
        for r in self.p.destinations(m) {
            self.serving.insert(r, tx);
        }
        self.chosen.push(m);
    }

    fn remove_last(&mut self) {
        let m = self.chosen.pop().expect("remove pairs with add");
        let tx = self.p.origin[m].as_str();
        let load = self.tx_load.get_mut(tx).expect("tx was loaded");
        *load -= 1;
        if *load == 0 {
            self.tx_load.remove(tx);
        }
        for r in self.p.destinations(m) {
            // Only unserve receivers no other chosen message still serves.
            let still = self.chosen.iter().any(|m2| self.p.destinations(m2).contains(&r));
            if !still {
                self.serving.remove(r);
            }
        }
    }

    fn served_pairs(&self) -> BTreeSet<(String, String)> {
        self.chosen
            .iter()
            .flat_map(|m| {
                self.p.destinations(m).into_iter().map(move |r| (m.to_string(), r.to_string()))
            })
            .collect()
    }

    fn cell_profile(&self, cells: &[&str]) -> Vec<usize> {
        let mut counts = vec![0usize; cells.len()];
        for m in &self.chosen {
            let cell = self.p.cell_of_message(m).expect("validated problem");
            let i = cells.iter().position(|c| *c == cell).expect("known cell");
            counts[i] += 1;
        }
        counts
    }
}

fn best_sum_pattern<'a>(
    messages: &[&'a str],
    builder: &mut PatternBuilder<'a>,
    idx: usize,
    best: &mut (usize, BTreeSet<(String, String)>),
) {
    if builder.chosen.len() > best.0 {
        *best = (builder.chosen.len(), builder.served_pairs());
    }
    if idx == messages.len() || builder.chosen.len() + (messages.len() - idx) <= best.0 {
        return;
    }
    if builder.can_add(messages[idx]) {
        builder.add(messages[idx]);
        best_sum_pattern(messages, builder, idx + 1, best);
        builder.remove_last();
    }
    best_sum_pattern(messages, builder, idx + 1, best);
}

fn all_cell_profiles<'a>(
    messages: &[&'a str],
    cells: &[&str],
    builder: &mut PatternBuilder<'a>,
    idx: usize,
    out: &mut BTreeMap<Vec<usize>, BTreeSet<(String, String)>>,
) {
    if idx == messages.len() {
        out.entry(builder.cell_profile(cells)).or_insert_with(|| builder.served_pairs());
        return;
    }
    if builder.can_add(messages[idx]) {
        builder.add(messages[idx]);
        all_cell_profiles(messages, cells, builder, idx + 1, out);
        builder.remove_last();
    }
    all_cell_profiles(messages, cells, builder, idx + 1, out);
}

/// Best orthogonal schedule under the given objective, by exhaustive
/// activation-pattern search (up to `cap` messages; larger problems get a
/// greedy plan flagged as not proven optimal).
pub fn orthogonal_max_capped(
    p: &CBProblem,
    objective: OrthoObjective,
    cap: usize,
) -> Result<OrthogonalMax> {
    p.validate()?;
    let messages: Vec<&str> = p.origin.keys().map(String::as_str).collect();
    if messages.is_empty() {
        return Ok(OrthogonalMax {
            value: Rat::zero(),
            schedule: Schedule::default(),
            proven_optimal: true,
        });
    }
    if messages.len() > cap {
        // Greedy fallback: fill one pattern in id order.
        let mut builder = PatternBuilder::new(p);
        for m in &messages {
            if builder.can_add(m) {
                builder.add(m);
            }
        }
        let served = builder.served_pairs();
        let schedule = Schedule { phases: vec![Phase { weight: Rat::one(), served }] };
        schedule.validate(p)?;
        let value = match objective {
            OrthoObjective::Sum => rat(builder.chosen.len() as i64, 1),
            OrthoObjective::Symmetric => {
                let cells: Vec<&str> = cell_labels(p);
                let profile = builder.cell_profile(&cells);
                rat(profile.into_iter().min().unwrap_or(0) as i64, 1)
            }
        };
        return Ok(OrthogonalMax { value, schedule, proven_optimal: false });
    }
    match objective {
        OrthoObjective::Sum => {
            let mut builder = PatternBuilder::new(p);
            let mut best = (0usize, BTreeSet::new());
            best_sum_pattern(&messages, &mut builder, 0, &mut best);
            let schedule = if best.0 == 0 {
                Schedule::default()
            } else {
                Schedule { phases: vec![Phase { weight: Rat::one(), served: best.1 }] }
            };
            schedule.validate(p)?;
            Ok(OrthogonalMax { value: rat(best.0 as i64, 1), schedule, proven_optimal: true })
        }
        OrthoObjective::Symmetric => {
            let cells = cell_labels(p);
            let mut builder = PatternBuilder::new(p);
            let mut profiles: BTreeMap<Vec<usize>, BTreeSet<(String, String)>> = BTreeMap::new();
            all_cell_profiles(&messages, &cells, &mut builder, 0, &mut profiles);
            // Keep only Pareto-maximal profiles: any weight on a dominated
            // profile does at least as well on its dominator.
            let keys: Vec<Vec<usize>> = profiles.keys().cloned().collect();
            let maximal: Vec<Vec<usize>> = keys
                .iter()
                .filter(|k| {
                    !keys.iter().any(|other| {
                        *other != **k && k.iter().zip(other).all(|(a, b)| a <= b)
                    })
                })
                .cloned()
                .collect();
            // Weights over patterns: maximize t with t ≤ Σ_p w_p count_p(c)
            // for every cell and Σ w ≤ 1 (tight at any nonzero optimum).
            let np = maximal.len();
            let mut constraints: Vec<(Vec<Rat>, Rat)> = Vec::new();
            for (ci, _) in cells.iter().enumerate() {
                let mut row = vec![Rat::zero(); np + 1];
                for (pi, profile) in maximal.iter().enumerate() {
                    row[pi] = -rat(profile[ci] as i64, 1);
                }
                row[np] = Rat::one();
                constraints.push((row, Rat::zero()));
            }
            let mut budget = vec![Rat::one(); np];
            budget.push(Rat::zero());
            constraints.push((budget, Rat::one()));
            let mut objective_row = vec![Rat::zero(); np + 1];
            objective_row[np] = Rat::one();
            let opt = maximize(&LinearProgram { objective: objective_row, constraints })?;
            let mut phases: Vec<Phase> = Vec::new();
            let mut total = Rat::zero();
            for (pi, profile) in maximal.iter().enumerate() {
                let w = opt.point[pi].clone();
                if w.is_zero() {
                    continue;
                }
                total += w.clone();
                phases.push(Phase { weight: w, served: profiles[profile].clone() });
            }
            // Any slack in the weight budget goes to the first phase; more
            // time on a valid pattern never hurts any cell.
            if !phases.is_empty() && total != Rat::one() {
                let slack = Rat::one() - total;
                phases[0].weight += slack;
            }
            let schedule = Schedule { phases };
            schedule.validate(p)?;
            Ok(OrthogonalMax { value: opt.value, schedule, proven_optimal: true })
        }
    }
}

/// [`orthogonal_max_capped`] at the default cap.
pub fn orthogonal_max(p: &CBProblem, objective: OrthoObjective) -> Result<OrthogonalMax> {
    orthogonal_max_capped(p, objective, DEFAULT_ENUMERATION_CAP)
}

fn cell_labels(p: &CBProblem) -> Vec<&str> {
    let set: BTreeSet<&str> = p.cells.cell.values().map(String::as_str).collect();
    set.into_iter().collect()
}
