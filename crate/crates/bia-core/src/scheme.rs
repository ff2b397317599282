//! Blind linear transmission schemes and orthogonal schedules.
//!
//! A [`LinearScheme`] sends each message as one or more streams; a stream
//! carries one symbol over `slots` time slots through a per-slot antenna
//! vector at the origin transmitter. Vectors are fixed at design time from
//! connectivity alone — never from channel coefficients — which is what
//! makes a scheme blind. A [`Schedule`] is the orthogonal alternative:
//! time-sharing among activation patterns in which no served receiver hears
//! any active transmitter other than its own.
//!
//! Constructors cover the four-cell cluster schemes (coherent and
//! coherence-free, both link directions), aligned and conventional frequency
//! reuse on the array families, the symmetric `(D, U, K)` ring scheme, and
//! the antenna-switching scheme for the macro/femto overlay.

use crate::net::{make_four_cell, make_macro_femto, make_symmetric_duk, CBProblem, Direction, Geometry, HEX_DIRS};
use crate::{rat, C64, Error, Rat, Result};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

// ─── Linear schemes ─────────────────────────────────────────────────────────

/// One symbol's transmission plan: an antenna vector per slot at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    /// Message this stream carries a symbol of.
    pub message: String,
    /// Per-slot antenna vectors; `vectors[n]` has the origin's antenna count
    /// as its length, and an all-zero entry means the stream is silent in
    /// slot `n+1`.
    pub vectors: Vec<Vec<C64>>,
}

impl Stream {
    /// Stream on a single-antenna transmitter following a slot-space vector.
    pub fn on_single_antenna(message: &str, slot_coefficients: &[C64]) -> Self {
        Stream {
            message: message.to_string(),
            vectors: slot_coefficients.iter().map(|&c| vec![c]).collect(),
        }
    }

    /// True when every slot vector is zero.
    pub fn is_silent(&self) -> bool {
        self.vectors.iter().all(|v| v.iter().all(|c| c.is_zero()))
    }
}

/// A complete blind linear transmission plan over a fixed slot horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScheme {
    /// Slot horizon T.
    pub slots: usize,
    /// Minimum network coherence time (slots) the design assumes. Metadata
    /// only — the verifier is the arbiter of what a scheme actually needs.
    pub declared_tau: usize,
    pub streams: Vec<Stream>,
    pub name: String,
}

impl LinearScheme {
    /// The explicit empty scheme: no streams, zero DoF.
    pub fn empty(slots: usize, name: &str) -> Self {
        LinearScheme { slots, declared_tau: 1, streams: Vec::new(), name: name.to_string() }
    }

    /// Checks the scheme against its companion problem: every stream's
    /// message must exist, every slot vector must match its origin's antenna
    /// count, and a nonempty scheme must transmit something.
    pub fn validate(&self, p: &CBProblem) -> Result<()> {
        if self.slots == 0 {
            return Err(Error::InvalidParameter("scheme needs at least one slot".into()));
        }
        for s in &self.streams {
            let Some(t) = p.origin.get(&s.message) else {
                return Err(Error::Mismatch(format!("stream for unknown message {}", s.message)));
            };
            let antennas = p.topology.transmitters[t] as usize;
            if s.vectors.len() != self.slots {
                return Err(Error::Mismatch(format!(
                    "stream of {} has {} slot vectors, scheme has {} slots",
                    s.message,
                    s.vectors.len(),
                    self.slots
                )));
            }
            for (n, v) in s.vectors.iter().enumerate() {
                if v.len() != antennas {
                    return Err(Error::Mismatch(format!(
                        "stream of {} slot {}: vector length {} != {} antennas of {t}",
                        s.message,
                        n + 1,
                        v.len(),
                        antennas
                    )));
                }
            }
        }
        if !self.streams.is_empty() && self.streams.iter().all(Stream::is_silent) {
            return Err(Error::Mismatch("scheme transmits nothing in any slot".into()));
        }
        Ok(())
    }

    /// Streams carrying message `m`.
    pub fn streams_of(&self, m: &str) -> Vec<&Stream> {
        self.streams.iter().filter(|s| s.message == m).collect()
    }

    /// DoF this scheme claims for message `m`: streams of `m` per slot.
    pub fn claimed_dof(&self, m: &str) -> Rat {
        rat(self.streams_of(m).len() as i64, self.slots as i64)
    }

    /// Total claimed DoF: streams per slot.
    pub fn claimed_sum_dof(&self) -> Rat {
        rat(self.streams.len() as i64, self.slots as i64)
    }

    /// Messages with at least one stream, in id order.
    pub fn served_messages(&self) -> BTreeSet<&str> {
        self.streams.iter().map(|s| s.message.as_str()).collect()
    }
}

// ─── Orthogonal schedules ───────────────────────────────────────────────────

/// One activation pattern with its time share.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    /// Fraction of time this pattern runs; phase weights sum to one.
    pub weight: Rat,
    /// Served (message, receiver) pairs.
    pub served: BTreeSet<(String, String)>,
}

/// Time sharing among interference-free activation patterns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule {
    pub phases: Vec<Phase>,
}

impl Schedule {
    /// Checks the orthogonality invariant structurally against connectivity.
    ///
    /// Per phase: a served receiver hears no active transmitter other than
    /// its single serving transmitter, a transmitter serves at most its
    /// antenna count, and a serving transmitter sends no more streams than
    /// any of its served receivers can separate (their antenna counts) — the
    /// condition that makes every phase decodable without channel knowledge.
    pub fn validate(&self, p: &CBProblem) -> Result<()> {
        let mut total = Rat::zero();
        for (i, phase) in self.phases.iter().enumerate() {
            if phase.weight < Rat::zero() {
                return Err(Error::InvalidParameter(format!("phase {i}: negative weight")));
            }
            total += phase.weight.clone();
            let mut tx_load: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
            let mut serving: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
            for (m, r) in &phase.served {
                let Some(t) = p.origin.get(m) else {
                    return Err(Error::Mismatch(format!("phase {i} serves unknown message {m}")));
                };
                if !p.desired.get(r).is_some_and(|set| set.contains(m)) {
                    return Err(Error::Mismatch(format!("phase {i}: receiver {r} does not desire {m}")));
                }
                tx_load.entry(t).or_default().insert(m);
                serving.entry(r).or_default().insert(t);
            }
            let active: BTreeSet<&str> = tx_load.keys().copied().collect();
            for (t, msgs) in &tx_load {
                if msgs.len() > p.topology.transmitters[*t] as usize {
                    return Err(Error::InvalidParameter(format!(
                        "phase {i}: transmitter {t} serves {} messages with {} antennas",
                        msgs.len(),
                        p.topology.transmitters[*t]
                    )));
                }
            }
            for (r, txs) in &serving {
                if txs.len() > 1 {
                    return Err(Error::InvalidParameter(format!(
                        "phase {i}: receiver {r} is served by several transmitters"
                    )));
                }
                let t = txs.iter().next().unwrap();
                for other in &active {
                    if other != t && p.topology.connected(r, other) {
                        return Err(Error::InvalidParameter(format!(
                            "phase {i}: receiver {r} hears active transmitter {other}"
                        )));
                    }
                }
                if tx_load[t].len() > p.topology.receivers[*r] as usize {
                    return Err(Error::InvalidParameter(format!(
                        "phase {i}: receiver {r} cannot separate {} streams from {t}",
                        tx_load[t].len()
                    )));
                }
            }
        }
        if !self.phases.is_empty() && total != Rat::one() {
            return Err(Error::InvalidParameter(format!("phase weights sum to {total}, expected 1")));
        }
        Ok(())
    }

    /// Time share during which message `m` is served.
    pub fn message_share(&self, m: &str) -> Rat {
        self.phases
            .iter()
            .filter(|ph| ph.served.iter().any(|(msg, _)| msg == m))
            .map(|ph| ph.weight.clone())
            .sum()
    }

    /// Per-cell DoF: total time share of each cell's messages.
    pub fn per_cell_dof(&self, p: &CBProblem) -> BTreeMap<String, Rat> {
        let mut out: BTreeMap<String, Rat> =
            p.cells.cell.values().map(|label| (label.clone(), Rat::zero())).collect();
        for m in p.origin.keys() {
            let label = p.cell_of_message(m).expect("validated problem").to_string();
            *out.get_mut(&label).unwrap() += self.message_share(m);
        }
        out
    }
}

// ─── Four-cell cluster schemes ──────────────────────────────────────────────

fn expect_companion(p: &CBProblem, expected: &CBProblem, what: &str) -> Result<()> {
    if p.topology == expected.topology && p.origin == expected.origin && p.desired == expected.desired {
        Ok(())
    } else {
        Err(Error::Mismatch(format!("scheme {what} requires its companion problem")))
    }
}

/// Coherent four-cell downlink plan over three slots.
///
/// Six messages ride identity slot columns; the two inner-boundary messages
/// share the all-ones column so that, over one coherence block, they stay
/// aligned in a single dimension at the two receivers that hear both B and
/// D. Claims 8/3 total.
pub fn four_cell_downlink_coherent(p: &CBProblem) -> Result<LinearScheme> {
    expect_companion(p, &make_four_cell(Direction::Downlink, false)?, "four-cell-downlink-coherent")?;
    let one = C64::new(1.0, 0.0);
    let zero = C64::zero();
    let table: [(&str, [C64; 3]); 8] = [
        ("a1", [one, zero, zero]),
        ("a2", [zero, one, zero]),
        ("b1", [one, one, one]),
        ("b2", [zero, one, zero]),
        ("c1", [one, zero, zero]),
        ("c2", [zero, zero, one]),
        ("d1", [one, one, one]),
        ("d2", [zero, zero, one]),
    ];
    let scheme = LinearScheme {
        slots: 3,
        declared_tau: 3,
        streams: table.iter().map(|(m, v)| Stream::on_single_antenna(m, v)).collect(),
        name: "four-cell-downlink-coherent".into(),
    };
    scheme.validate(p)?;
    Ok(scheme)
}

/// Coherence-free four-cell downlink plan over two slots.
///
/// Five messages are served with slot-support alignment only (interfering
/// streams overlap in whole slots, so no coherence is needed); `b1`, `c2`,
/// and `d2` stay silent. Claims 5/2 total.
pub fn four_cell_downlink_iid(p: &CBProblem) -> Result<LinearScheme> {
    expect_companion(p, &make_four_cell(Direction::Downlink, false)?, "four-cell-downlink-iid")?;
    let one = C64::new(1.0, 0.0);
    let zero = C64::zero();
    let table: [(&str, [C64; 2]); 5] = [
        ("a1", [one, zero]),
        ("a2", [zero, one]),
        ("b2", [zero, one]),
        ("c1", [one, zero]),
        ("d1", [one, one]),
    ];
    let scheme = LinearScheme {
        slots: 2,
        declared_tau: 1,
        streams: table.iter().map(|(m, v)| Stream::on_single_antenna(m, v)).collect(),
        name: "four-cell-downlink-iid".into(),
    };
    scheme.validate(p)?;
    Ok(scheme)
}

/// Coherent four-cell uplink plan over three slots.
///
/// Users that interfere at the same base station share a vector: the pairs
/// at stations A, B, and C ride identity columns, while the pair
/// interfering at D rides the all-ones column — the only alignment that
/// needs channel coherence, and only toward D. Claims 8/3 total.
pub fn four_cell_uplink_coherent(p: &CBProblem) -> Result<LinearScheme> {
    expect_companion(p, &make_four_cell(Direction::Uplink, false)?, "four-cell-uplink-coherent")?;
    let one = C64::new(1.0, 0.0);
    let zero = C64::zero();
    // Co-interference pairs: {b1,c2}@A, {a1,d2}@B, {a2,d1}@C, {b2,c1}@D.
    let table: [(&str, [C64; 3]); 8] = [
        ("b1", [one, zero, zero]),
        ("c2", [one, zero, zero]),
        ("a1", [zero, one, zero]),
        ("d2", [zero, one, zero]),
        ("a2", [zero, zero, one]),
        ("d1", [zero, zero, one]),
        ("b2", [one, one, one]),
        ("c1", [one, one, one]),
    ];
    let scheme = LinearScheme {
        slots: 3,
        declared_tau: 3,
        streams: table.iter().map(|(m, v)| Stream::on_single_antenna(m, v)).collect(),
        name: "four-cell-uplink-coherent".into(),
    };
    scheme.validate(p)?;
    Ok(scheme)
}

/// Coherence-free four-cell uplink plan over two slots.
///
/// Five users transmit with slot-support alignment: the pairs interfering
/// at stations C and D each share one slot, station A's own two users fill
/// both slots, and `b1`, `c2`, `d2` stay silent. Claims 5/2 total.
pub fn four_cell_uplink_iid(p: &CBProblem) -> Result<LinearScheme> {
    expect_companion(p, &make_four_cell(Direction::Uplink, false)?, "four-cell-uplink-iid")?;
    let one = C64::new(1.0, 0.0);
    let zero = C64::zero();
    let table: [(&str, [C64; 2]); 5] = [
        ("a1", [one, one]),
        ("a2", [zero, one]),
        ("b2", [one, zero]),
        ("c1", [one, zero]),
        ("d1", [zero, one]),
    ];
    let scheme = LinearScheme {
        slots: 2,
        declared_tau: 1,
        streams: table.iter().map(|(m, v)| Stream::on_single_antenna(m, v)).collect(),
        name: "four-cell-uplink-iid".into(),
    };
    scheme.validate(p)?;
    Ok(scheme)
}

// ─── Frequency reuse schedules on arrays ────────────────────────────────────

fn geometry_of(p: &CBProblem, op: &str) -> Result<Geometry> {
    match p.cells.geometry {
        Geometry::Cluster => Err(Error::InvalidParameter(format!("{op} requires an array-family problem"))),
        g => Ok(g),
    }
}

fn check_array_identity(p: &CBProblem) -> Result<()> {
    let expected = match p.cells.geometry {
        Geometry::Linear { cells } => crate::net::make_linear_array(cells)?,
        Geometry::Square { rows, cols } => crate::net::make_square_array(rows, cols)?,
        Geometry::Hex { rows, cols } => crate::net::make_hex_array(rows, cols)?,
        Geometry::Cluster => unreachable!("checked by geometry_of"),
    };
    if *p == expected {
        Ok(())
    } else {
        Err(Error::InvalidParameter("problem does not match its declared array geometry".into()))
    }
}

/// Aligned frequency reuse: cyclically silence a perfect dominating set of
/// cells so that every active cell faces exactly one silenced neighbor and
/// serves its user on that boundary interference-free.
///
/// Patterns: linear period 3 (cells ≡ c mod 3 silent), square period 5
/// (`i+2j ≡ c mod 5`, the Lee-sphere perfect code), hex period 7
/// (`q+3r ≡ c mod 7`, the seven-cell cluster coloring). Per-cell DoF is
/// N/(N+1) for N neighbors: 2/3, 4/5, 6/7.
pub fn aligned_reuse(p: &CBProblem) -> Result<Schedule> {
    let geometry = geometry_of(p, "aligned reuse")?;
    check_array_identity(p)?;
    let mut phases = Vec::new();
    match geometry {
        Geometry::Linear { cells } => {
            if cells % 3 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "aligned reuse on a linear array needs a multiple of 3 cells, got {cells}"
                )));
            }
            for c in 0..3 {
                let mut served = BTreeSet::new();
                for k in 0..cells {
                    if k % 3 == c {
                        continue; // silenced
                    }
                    for n in [(k + 1) % cells, (k + cells - 1) % cells] {
                        if n % 3 == c {
                            served.insert((format!("m{k}-{n}"), format!("u{k}-{n}")));
                        }
                    }
                }
                phases.push(Phase { weight: rat(1, 3), served });
            }
        }
        Geometry::Square { rows, cols } => {
            if rows % 5 != 0 || cols % 5 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "aligned reuse on a square array needs dimensions that are multiples of 5, got {rows}x{cols}"
                )));
            }
            let silenced = |i: usize, j: usize, c: usize| (i + 2 * j) % 5 == c;
            for c in 0..5 {
                let mut served = BTreeSet::new();
                for i in 0..rows {
                    for j in 0..cols {
                        if silenced(i, j, c) {
                            continue;
                        }
                        for (d, di, dj) in [("e", 0isize, 1isize), ("n", -1, 0), ("s", 1, 0), ("w", 0, -1)] {
                            let ni = (i as isize + di).rem_euclid(rows as isize) as usize;
                            let nj = (j as isize + dj).rem_euclid(cols as isize) as usize;
                            if silenced(ni, nj, c) {
                                served.insert((format!("m{i},{j},{d}"), format!("u{i},{j},{d}")));
                            }
                        }
                    }
                }
                phases.push(Phase { weight: rat(1, 5), served });
            }
        }
        Geometry::Hex { rows, cols } => {
            if rows % 7 != 0 || cols % 7 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "aligned reuse on a hex array needs dimensions that are multiples of 7, got {rows}x{cols}"
                )));
            }
            let silenced = |q: usize, r: usize, c: usize| (q + 3 * r) % 7 == c;
            for c in 0..7 {
                let mut served = BTreeSet::new();
                for q in 0..rows {
                    for r in 0..cols {
                        if silenced(q, r, c) {
                            continue;
                        }
                        for (d, dq, dr) in HEX_DIRS {
                            let nq = (q as isize + dq).rem_euclid(rows as isize) as usize;
                            let nr = (r as isize + dr).rem_euclid(cols as isize) as usize;
                            if silenced(nq, nr, c) {
                                served.insert((format!("m{q},{r},{d}"), format!("u{q},{r},{d}")));
                            }
                        }
                    }
                }
                phases.push(Phase { weight: rat(1, 7), served });
            }
        }
        Geometry::Cluster => unreachable!(),
    }
    let schedule = Schedule { phases };
    schedule.validate(p)?;
    Ok(schedule)
}

/// Conventional frequency reuse: proper-color the cells (2 colors on linear
/// and square arrays, 3 on hex), activate one color class at a time, and
/// let each active cell serve its boundary users in turn. Per-cell DoF is
/// 1/2, 1/2, and 1/3 respectively.
pub fn conventional_reuse(p: &CBProblem) -> Result<Schedule> {
    let geometry = geometry_of(p, "conventional reuse")?;
    check_array_identity(p)?;
    let mut phases = Vec::new();
    match geometry {
        Geometry::Linear { cells } => {
            if cells % 2 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "conventional reuse on a linear array needs an even cell count, got {cells}"
                )));
            }
            for color in 0..2 {
                for side in [1, cells - 1] {
                    let served = (0..cells)
                        .filter(|k| k % 2 == color)
                        .map(|k| {
                            let n = (k + side) % cells;
                            (format!("m{k}-{n}"), format!("u{k}-{n}"))
                        })
                        .collect();
                    phases.push(Phase { weight: rat(1, 4), served });
                }
            }
        }
        Geometry::Square { rows, cols } => {
            if rows % 2 != 0 || cols % 2 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "conventional reuse on a square array needs even dimensions, got {rows}x{cols}"
                )));
            }
            for color in 0..2 {
                for dir in ["e", "n", "s", "w"] {
                    let mut served = BTreeSet::new();
                    for i in 0..rows {
                        for j in 0..cols {
                            if (i + j) % 2 == color {
                                served.insert((format!("m{i},{j},{dir}"), format!("u{i},{j},{dir}")));
                            }
                        }
                    }
                    phases.push(Phase { weight: rat(1, 8), served });
                }
            }
        }
        Geometry::Hex { rows, cols } => {
            if rows % 3 != 0 || cols % 3 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "conventional reuse on a hex array needs dimensions that are multiples of 3, got {rows}x{cols}"
                )));
            }
            for color in 0..3 {
                for (dir, _, _) in HEX_DIRS {
                    let mut served = BTreeSet::new();
                    for q in 0..rows {
                        for r in 0..cols {
                            if (q + 2 * r) % 3 == color {
                                served.insert((format!("m{q},{r},{dir}"), format!("u{q},{r},{dir}")));
                            }
                        }
                    }
                    phases.push(Phase { weight: rat(1, 18), served });
                }
            }
        }
        Geometry::Cluster => unreachable!(),
    }
    let schedule = Schedule { phases };
    schedule.validate(p)?;
    Ok(schedule)
}

// ─── Symmetric ring scheme ──────────────────────────────────────────────────

/// Seeded unit-norm complex vector in `dim` slot dimensions.
fn generic_unit_vector(rng: &mut impl Rng, dim: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut v {
        *c /= norm;
    }
    v
}

/// Blind scheme for the symmetric `(D, U, K)` ring: message `j` sends `U+1`
/// symbols along the alignment vectors `v_j, …, v_{j+U}` (indices mod K)
/// over `T = K−D+U` slots.
///
/// The first `T` of the `v` vectors are the identity slot columns; any
/// remaining `K−T` are seeded generic unit-norm vectors. With identity
/// columns only (K = T, i.e. D = U) the scheme needs no coherence at all,
/// so it declares `tau = 1`; otherwise it declares the full horizon.
pub fn symmetric_duk_scheme(d: usize, u: usize, k: usize) -> Result<LinearScheme> {
    let problem = make_symmetric_duk(d, u, k)?; // validates parameters
    let t = k - d + u;
    let mut vectors: Vec<Vec<C64>> = Vec::with_capacity(k);
    for i in 0..t.min(k) {
        let mut e = vec![C64::zero(); t];
        e[i] = C64::new(1.0, 0.0);
        vectors.push(e);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(0xD0F0 ^ ((d as u64) << 32 | (u as u64) << 16 | k as u64));
    while vectors.len() < k {
        vectors.push(generic_unit_vector(&mut rng, t));
    }
    let mut streams = Vec::new();
    for j in 1..=k {
        for s in 0..=u {
            let idx = (j - 1 + s) % k;
            streams.push(Stream::on_single_antenna(&format!("w{j}"), &vectors[idx]));
        }
    }
    let scheme = LinearScheme {
        slots: t,
        declared_tau: if k == t { 1 } else { t },
        streams,
        name: format!("symmetric-ring-d{d}u{u}k{k}"),
    };
    scheme.validate(&problem)?;
    Ok(scheme)
}

// ─── Interference diversity scheme ──────────────────────────────────────────

/// Antenna-switching scheme for the macro/femto overlay over three slots.
///
/// The femto stations send one fresh symbol every slot but hop antennas on
/// opposite patterns (B: first antenna in slots 1–2, second in slot 3;
/// C: first in slot 1, second in slots 2–3). The macro cell sends two
/// symbols per user on its two antennas, to user `a2` in slots 1–2 and to
/// user `a1` in slots 2–3. Each macro user then sees its own femto
/// interferer repeat an effective channel exactly when the macro's other
/// pair overlaps it, collapsing the interference to four of six dimensions.
/// Claims 4/3 for the macro cell and 1 for each femto cell.
pub fn interference_diversity_scheme(p: &CBProblem) -> Result<LinearScheme> {
    expect_companion(p, &make_macro_femto()?, "interference-diversity")?;
    let one = C64::new(1.0, 0.0);
    let zero = C64::zero();
    let e1 = |s| if s { vec![one, zero] } else { vec![zero, zero] };
    let e2 = |s| if s { vec![zero, one] } else { vec![zero, zero] };
    let mut streams = Vec::new();
    // Femto B: fresh symbol per slot, antenna 1 in slots 1-2, antenna 2 in slot 3.
    streams.push(Stream { message: "b1".into(), vectors: vec![e1(true), e1(false), e2(false)] });
    streams.push(Stream { message: "b1".into(), vectors: vec![e1(false), e1(true), e2(false)] });
    streams.push(Stream { message: "b1".into(), vectors: vec![e1(false), e1(false), e2(true)] });
    // Femto C: mirrored hop pattern (antenna 1 in slot 1, antenna 2 after).
    streams.push(Stream { message: "c1".into(), vectors: vec![e1(true), e2(false), e2(false)] });
    streams.push(Stream { message: "c1".into(), vectors: vec![e1(false), e2(true), e2(false)] });
    streams.push(Stream { message: "c1".into(), vectors: vec![e1(false), e2(false), e2(true)] });
    // Macro A: two-symbol pairs on antenna basis vectors; a2's pair in
    // slots 1-2, a1's pair in slots 2-3.
    streams.push(Stream { message: "a2".into(), vectors: vec![e1(true), e1(true), e1(false)] });
    streams.push(Stream { message: "a2".into(), vectors: vec![e2(true), e2(true), e2(false)] });
    streams.push(Stream { message: "a1".into(), vectors: vec![e1(false), e1(true), e1(true)] });
    streams.push(Stream { message: "a1".into(), vectors: vec![e2(false), e2(true), e2(true)] });
    let scheme = LinearScheme { slots: 3, declared_tau: 3, streams, name: "interference-diversity".into() };
    scheme.validate(p)?;
    Ok(scheme)
}

// ─── Schedule-to-scheme conversion ──────────────────────────────────────────

/// Expands a schedule into a linear scheme so orthogonal plans can run
/// through the same rank verifier.
///
/// The horizon is `denominator` slots; each phase occupies
/// `weight × denominator` consecutive slots (which must come out integral),
/// and every message served in a phase gets one single-symbol stream per
/// slot of that phase, on identity antenna vectors (one antenna column per
/// message when a transmitter serves several at once). Per-message DoF is
/// preserved exactly.
pub fn schedule_to_scheme(s: &Schedule, p: &CBProblem, denominator: usize) -> Result<LinearScheme> {
    s.validate(p)?;
    if denominator == 0 {
        return Err(Error::InvalidParameter("denominator must be positive".into()));
    }
    if s.phases.is_empty() {
        return Ok(LinearScheme::empty(denominator, "empty-schedule"));
    }
    let den = rat(denominator as i64, 1);
    let mut slot = 0usize;
    let mut streams = Vec::new();
    for (i, phase) in s.phases.iter().enumerate() {
        let width = phase.weight.clone() * den.clone();
        if !width.is_integer() {
            return Err(Error::InvalidParameter(format!(
                "phase {i} weight {} does not fit a {denominator}-slot horizon",
                phase.weight
            )));
        }
        let width = width.to_integer().try_into().map_err(|_| {
            Error::InvalidParameter(format!("phase {i} width out of range"))
        })?;
        // Antenna column per message within each serving transmitter.
        let mut messages: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (m, _) in &phase.served {
            let t = p.origin[m].as_str();
            let column = messages.entry(t).or_default();
            if !column.contains(&m.as_str()) {
                column.push(m.as_str());
            }
        }
        for (t, msgs) in &messages {
            let antennas = p.topology.transmitters[*t] as usize;
            for (a, m) in msgs.iter().enumerate() {
                for n in 0..width {
                    let mut vectors = vec![vec![C64::zero(); antennas]; denominator];
                    vectors[slot + n][a] = C64::new(1.0, 0.0);
                    streams.push(Stream { message: m.to_string(), vectors });
                }
            }
        }
        slot += width;
    }
    if slot != denominator {
        return Err(Error::InvalidParameter(format!(
            "phase widths fill {slot} of {denominator} slots"
        )));
    }
    let scheme = LinearScheme {
        slots: denominator,
        declared_tau: 1,
        streams,
        name: "schedule-as-scheme".into(),
    };
    scheme.validate(p)?;
    Ok(scheme)
}

// ─── JSON interchange ───────────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StreamDoc {
    message: String,
    /// vectors[slot][antenna] = [re, im]
    vectors: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeDoc {
    #[serde(rename = "T")]
    t: usize,
    declared_tau: usize,
    streams: Vec<StreamDoc>,
    name: String,
}

/// Serializes a scheme to its JSON document form.
pub fn store_scheme(s: &LinearScheme) -> String {
    let doc = SchemeDoc {
        t: s.slots,
        declared_tau: s.declared_tau,
        streams: s
            .streams
            .iter()
            .map(|st| StreamDoc {
                message: st.message.clone(),
                vectors: st.vectors.iter().map(|v| v.iter().map(|c| [c.re, c.im]).collect()).collect(),
            })
            .collect(),
        name: s.name.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("scheme document serializes")
}

/// Parses a scheme from its JSON document form. Structural validation
/// against a companion problem is a separate [`LinearScheme::validate`] call.
pub fn load_scheme(text: &str) -> Result<LinearScheme> {
    let doc: SchemeDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(LinearScheme {
        slots: doc.t,
        declared_tau: doc.declared_tau,
        streams: doc
            .streams
            .into_iter()
            .map(|st| Stream {
                message: st.message,
                vectors: st.vectors.into_iter().map(|v| v.into_iter().map(|[re, im]| C64::new(re, im)).collect()).collect(),
            })
            .collect(),
        name: doc.name,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseDoc {
    #[serde(with = "crate::rat_serde")]
    weight: Rat,
    served: Vec<(String, String)>,
}

/// Serializes a schedule to JSON.
pub fn store_schedule(s: &Schedule) -> String {
    let phases: Vec<PhaseDoc> = s
        .phases
        .iter()
        .map(|ph| PhaseDoc { weight: ph.weight.clone(), served: ph.served.iter().cloned().collect() })
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({ "phases": phases })).expect("schedule serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{make_hex_array, make_linear_array, make_square_array};

    fn four_cell_dl() -> CBProblem {
        make_four_cell(Direction::Downlink, false).unwrap()
    }

    #[test]
    fn coherent_downlink_table_and_claims() {
        let p = four_cell_dl();
        let s = four_cell_downlink_coherent(&p).unwrap();
        assert_eq!(s.slots, 3);
        // Station B transmits b1 + b2 in slot 2.
        let active_at_b_slot2: Vec<&str> = s
            .streams
            .iter()
            .filter(|st| p.origin[&st.message] == "B" && !st.vectors[1][0].is_zero())
            .map(|st| st.message.as_str())
            .collect();
        assert_eq!(active_at_b_slot2, vec!["b1", "b2"]);
        for m in p.origin.keys() {
            assert_eq!(s.claimed_dof(m), rat(1, 3), "message {m}");
        }
        assert_eq!(s.claimed_sum_dof(), rat(8, 3));
    }

    #[test]
    fn iid_downlink_serves_five_messages() {
        let p = four_cell_dl();
        let s = four_cell_downlink_iid(&p).unwrap();
        assert_eq!(s.served_messages().len(), 5);
        let d1 = s.streams_of("d1")[0];
        assert_eq!(d1.vectors, vec![vec![C64::new(1.0, 0.0)], vec![C64::new(1.0, 0.0)]]);
        assert_eq!(s.claimed_sum_dof(), rat(5, 2));
        // The two interferers at receiver a1 share slot-2 support only.
        for m in ["a2", "b2"] {
            let st = s.streams_of(m)[0];
            assert!(st.vectors[0][0].is_zero() && !st.vectors[1][0].is_zero(), "{m}");
        }
    }

    #[test]
    fn uplink_schemes_claim_and_align() {
        let up = make_four_cell(Direction::Uplink, false).unwrap();
        let coh = four_cell_uplink_coherent(&up).unwrap();
        assert_eq!(coh.claimed_sum_dof(), rat(8, 3));
        // The pair interfering at station A shares the first identity column.
        for m in ["b1", "c2"] {
            assert_eq!(coh.streams_of(m)[0].vectors[0], vec![C64::new(1.0, 0.0)], "{m}");
        }
        let iid = four_cell_uplink_iid(&up).unwrap();
        assert_eq!(iid.claimed_sum_dof(), rat(5, 2));
        assert_eq!(iid.served_messages().len(), 5);
    }

    #[test]
    fn scheme_rejects_wrong_companion() {
        let merged = make_four_cell(Direction::Downlink, true).unwrap();
        assert!(matches!(four_cell_downlink_coherent(&merged), Err(Error::Mismatch(_))));
        let up = make_four_cell(Direction::Uplink, false).unwrap();
        assert!(matches!(four_cell_downlink_iid(&up), Err(Error::Mismatch(_))));
    }

    #[test]
    fn aligned_reuse_linear_gives_two_thirds_per_cell() {
        let p = make_linear_array(12).unwrap();
        let s = aligned_reuse(&p).unwrap();
        assert_eq!(s.phases.len(), 3);
        for (cell, dof) in s.per_cell_dof(&p) {
            assert_eq!(dof, rat(2, 3), "cell {cell}");
        }
        // Each cell is active (serving) in exactly 2 of 3 phases.
        for k in 0..12 {
            let active = s
                .phases
                .iter()
                .filter(|ph| ph.served.iter().any(|(m, _)| m.starts_with(&format!("m{k}-"))))
                .count();
            assert_eq!(active, 2, "cell {k}");
        }
        assert!(aligned_reuse(&make_linear_array(5).unwrap()).is_err());
    }

    #[test]
    fn aligned_reuse_square_and_hex_per_cell_values() {
        let sq = make_square_array(5, 5).unwrap();
        let s = aligned_reuse(&sq).unwrap();
        for dof in s.per_cell_dof(&sq).values() {
            assert_eq!(*dof, rat(4, 5));
        }
        let hex = make_hex_array(7, 7).unwrap();
        let s = aligned_reuse(&hex).unwrap();
        for dof in s.per_cell_dof(&hex).values() {
            assert_eq!(*dof, rat(6, 7));
        }
    }

    #[test]
    fn aligned_reuse_silencing_is_a_perfect_dominating_set() {
        // Square: every cell sees each residue exactly once across
        // itself and its four neighbors; hex: same over seven residues.
        for (rows, cols, period) in [(5usize, 5usize, 5usize), (7, 7, 7)] {
            for i in 0..rows as isize {
                for j in 0..cols as isize {
                    let mut residues = BTreeSet::new();
                    let offsets: Vec<(isize, isize)> = if period == 5 {
                        vec![(0, 0), (0, 1), (0, -1), (1, 0), (-1, 0)]
                    } else {
                        let mut v = vec![(0, 0)];
                        v.extend(HEX_DIRS.iter().map(|&(_, dq, dr)| (dq, dr)));
                        v
                    };
                    for (di, dj) in offsets {
                        let ni = (i + di).rem_euclid(rows as isize) as usize;
                        let nj = (j + dj).rem_euclid(cols as isize) as usize;
                        let res = if period == 5 { (ni + 2 * nj) % 5 } else { (ni + 3 * nj) % 7 };
                        residues.insert(res);
                    }
                    assert_eq!(residues.len(), period, "cell ({i},{j}) period {period}");
                }
            }
        }
    }

    #[test]
    fn conventional_reuse_values() {
        let lin = make_linear_array(12).unwrap();
        for dof in conventional_reuse(&lin).unwrap().per_cell_dof(&lin).values() {
            assert_eq!(*dof, rat(1, 2));
        }
        let sq = make_square_array(6, 6).unwrap();
        for dof in conventional_reuse(&sq).unwrap().per_cell_dof(&sq).values() {
            assert_eq!(*dof, rat(1, 2));
        }
        let hex = make_hex_array(6, 6).unwrap();
        for dof in conventional_reuse(&hex).unwrap().per_cell_dof(&hex).values() {
            assert_eq!(*dof, rat(1, 3));
        }
        assert!(conventional_reuse(&make_square_array(5, 5).unwrap()).is_err());
    }

    #[test]
    fn duk_115_uses_identity_columns_and_claims_two_fifths() {
        let s = symmetric_duk_scheme(1, 1, 5).unwrap();
        assert_eq!(s.slots, 5);
        assert_eq!(s.declared_tau, 1);
        for j in 1..=5usize {
            assert_eq!(s.claimed_dof(&format!("w{j}")), rat(2, 5));
        }
        // Slot k carries the fresh symbol of source k and the second symbol
        // of source k-1.
        for k in 0..5usize {
            let active: BTreeSet<String> = s
                .streams
                .iter()
                .filter(|st| !st.vectors[k][0].is_zero())
                .map(|st| st.message.clone())
                .collect();
            let prev = if k == 0 { 5 } else { k };
            assert_eq!(active, BTreeSet::from([format!("w{}", k + 1), format!("w{prev}")]));
        }
    }

    #[test]
    fn duk_215_claims_one_half_over_four_slots() {
        let s = symmetric_duk_scheme(2, 1, 5).unwrap();
        assert_eq!(s.slots, 4);
        assert_eq!(s.declared_tau, 4);
        for j in 1..=5usize {
            assert_eq!(s.claimed_dof(&format!("w{j}")), rat(1, 2));
        }
    }

    #[test]
    fn interference_diversity_claims() {
        let p = make_macro_femto().unwrap();
        let s = interference_diversity_scheme(&p).unwrap();
        assert_eq!(s.claimed_dof("b1"), rat(1, 1));
        assert_eq!(s.claimed_dof("c1"), rat(1, 1));
        assert_eq!(s.claimed_dof("a1") + s.claimed_dof("a2"), rat(4, 3));
        // B uses antenna 1 in slots 1-2 and antenna 2 in slot 3.
        for st in s.streams_of("b1") {
            assert!(st.vectors[0][1].is_zero() && st.vectors[1][1].is_zero());
            assert!(st.vectors[2][0].is_zero());
        }
    }

    #[test]
    fn schedule_to_scheme_preserves_dof() {
        let p = make_linear_array(3).unwrap();
        let sched = aligned_reuse(&p).unwrap();
        let s = schedule_to_scheme(&sched, &p, 3).unwrap();
        assert_eq!(s.slots, 3);
        for m in p.origin.keys() {
            assert_eq!(s.claimed_dof(m), sched.message_share(m), "message {m}");
        }
        assert!(schedule_to_scheme(&sched, &p, 4).is_err());
        let empty = schedule_to_scheme(&Schedule::default(), &p, 2).unwrap();
        assert_eq!(empty.claimed_sum_dof(), rat(0, 1));
    }

    #[test]
    fn schedule_validation_rejects_interference() {
        let p = four_cell_dl();
        // a1 is served while B (heard by a1) serves b2.
        let bad = Schedule {
            phases: vec![Phase {
                weight: rat(1, 1),
                served: BTreeSet::from([
                    ("a1".to_string(), "a1".to_string()),
                    ("b2".to_string(), "b2".to_string()),
                ]),
            }],
        };
        assert!(bad.validate(&p).is_err());
        // Serving a1 and d1 is orthogonal.
        let good = Schedule {
            phases: vec![Phase {
                weight: rat(1, 1),
                served: BTreeSet::from([
                    ("a1".to_string(), "a1".to_string()),
                    ("d1".to_string(), "d1".to_string()),
                ]),
            }],
        };
        good.validate(&p).unwrap();
    }

    #[test]
    fn scheme_json_round_trips() {
        let p = four_cell_dl();
        let s = four_cell_downlink_coherent(&p).unwrap();
        let text = store_scheme(&s);
        assert_eq!(load_scheme(&text).unwrap(), s);
        let duk = symmetric_duk_scheme(2, 1, 5).unwrap();
        assert_eq!(load_scheme(&store_scheme(&duk)).unwrap(), duk);
    }

    #[test]
    fn scheme_validate_catches_shape_errors() {
        let p = four_cell_dl();
        let mut s = four_cell_downlink_coherent(&p).unwrap();
        s.streams[0].vectors[0] = vec![C64::zero(), C64::zero()];
        assert!(matches!(s.validate(&p), Err(Error::Mismatch(_))));
    }
}
