//! Random generators and invariant checks shared by the property suite and
//! the acceptance gate.
//!
//! The generators build small but structurally honest problems: every
//! message is desired by at least one receiver that hears its origin, cell
//! labels cover exactly the transmitters, and all of it passes `validate`.
//! The checks are written as plain panicking functions so they can run
//! under `proptest!` macros and hand-driven `TestRunner`s alike.

#![allow(dead_code)]

use bia_core::channel::{sample_channels, FadingSpec};
use bia_core::net::{self, CBProblem, CellGrouping, NetworkTopology};
use bia_core::scheme::{self, schedule_to_scheme, LinearScheme, Phase, Schedule, Stream};
use bia_core::verify::{self, check_receiver, effective_signatures, DEFAULT_TOLERANCE};
use bia_core::{gic, rat, C64, Rat};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use proptest::prelude::*;
use std::collections::{BTreeMap, BTreeSet};

/// Nonzero scalars used to perturb stream vectors; all have magnitude ≥ 1
/// so the perturbed entries stay far from the rank tolerance.
pub const SCALARS: [(f64, f64); 6] =
    [(2.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (3.0, -2.0), (-1.0, 1.0)];

fn tx_id(i: usize) -> String {
    format!("t{}", i + 1)
}

fn rx_id(i: usize) -> String {
    format!("r{}", i + 1)
}

fn msg_id(i: usize) -> String {
    format!("m{}", i + 1)
}

#[allow(clippy::too_many_arguments)]
fn build_problem(
    n_tx: usize,
    n_msg: usize,
    n_rx: usize,
    origins: &[usize],
    tx_ant: &[u32],
    rx_ant: &[u32],
    links: &[bool],
    extras: &[bool],
) -> CBProblem {
    let transmitters: BTreeMap<String, u32> = (0..n_tx).map(|i| (tx_id(i), tx_ant[i])).collect();
    let receivers: BTreeMap<String, u32> = (0..n_rx).map(|i| (rx_id(i), rx_ant[i])).collect();
    let origin: BTreeMap<String, String> =
        (0..n_msg).map(|i| (msg_id(i), tx_id(origins[i]))).collect();
    let mut connectivity: BTreeSet<(String, String)> = BTreeSet::new();
    for (j, keep) in links.iter().enumerate() {
        if *keep {
            connectivity.insert((rx_id(j / n_tx), tx_id(j % n_tx)));
        }
    }
    // Anchor every message at receiver (i mod n_rx), forcing the link that
    // makes the demand legal.
    let mut desired: BTreeMap<String, BTreeSet<String>> =
        (0..n_rx).map(|j| (rx_id(j), BTreeSet::new())).collect();
    for i in 0..n_msg {
        let r = rx_id(i % n_rx);
        connectivity.insert((r.clone(), tx_id(origins[i])));
        desired.get_mut(&r).unwrap().insert(msg_id(i));
    }
    // Extra demands only where the origin is already heard.
    for (j, want) in extras.iter().enumerate() {
        let (r, i) = (rx_id(j / n_msg), j % n_msg);
        if *want && connectivity.contains(&(r.clone(), tx_id(origins[i]))) {
            desired.get_mut(&r).unwrap().insert(msg_id(i));
        }
    }
    let topology = NetworkTopology { transmitters, receivers, connectivity };
    let cells = CellGrouping::identity(&topology);
    let p = CBProblem { topology, origin, desired, cells };
    p.validate().expect("generated problem is valid");
    p
}

/// A random partially connected problem: 1–3 transmitters and receivers of
/// 1–2 antennas each, 1–4 messages, random extra links and extra demands.
pub fn arb_problem() -> impl Strategy<Value = CBProblem> {
    (1..=3usize, 1..=4usize, 1..=3usize)
        .prop_flat_map(|(n_tx, n_msg, n_rx)| {
            (
                Just((n_tx, n_msg, n_rx)),
                prop::collection::vec(0..n_tx, n_msg),
                prop::collection::vec(1..=2u32, n_tx),
                prop::collection::vec(1..=2u32, n_rx),
                prop::collection::vec(any::<bool>(), n_rx * n_tx),
                prop::collection::vec(any::<bool>(), n_rx * n_msg),
            )
        })
        .prop_map(|((n_tx, n_msg, n_rx), origins, tx_ant, rx_ant, links, extras)| {
            build_problem(n_tx, n_msg, n_rx, &origins, &tx_ant, &rx_ant, &links, &extras)
        })
}

/// A random unicast problem in canonical index-coding shape: one
/// single-antenna transmitter per message named after it, and receiver `ri`
/// desiring exactly message `wi`. On this family the reciprocity map is an
/// involution and the index-coding maps invert each other exactly.
pub fn arb_unicast_problem() -> impl Strategy<Value = CBProblem> {
    (1..=4usize)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(1..=2u32, n),
                prop::collection::vec(any::<bool>(), n * n),
            )
        })
        .prop_map(|(n, rx_ant, links)| {
            let w = |i: usize| format!("w{}", i + 1);
            let transmitters: BTreeMap<String, u32> = (0..n).map(|i| (w(i), 1)).collect();
            let receivers: BTreeMap<String, u32> = (0..n).map(|i| (rx_id(i), rx_ant[i])).collect();
            let mut connectivity: BTreeSet<(String, String)> = BTreeSet::new();
            for (j, keep) in links.iter().enumerate() {
                if *keep {
                    connectivity.insert((rx_id(j / n), w(j % n)));
                }
            }
            for i in 0..n {
                connectivity.insert((rx_id(i), w(i)));
            }
            let origin: BTreeMap<String, String> = (0..n).map(|i| (w(i), w(i))).collect();
            let desired: BTreeMap<String, BTreeSet<String>> =
                (0..n).map(|i| (rx_id(i), BTreeSet::from([w(i)]))).collect();
            let topology = NetworkTopology { transmitters, receivers, connectivity };
            let cells = CellGrouping::identity(&topology);
            let p = CBProblem { topology, origin, desired, cells };
            p.validate().expect("generated unicast problem is valid");
            p
        })
}

/// A problem together with a random linear scheme for it: 1–3 slots, up to
/// two streams per message, small integer precoding entries (zeros allowed,
/// so silent streams and empty schemes occur).
pub fn arb_problem_and_scheme() -> impl Strategy<Value = (CBProblem, LinearScheme)> {
    arb_problem().prop_flat_map(|p| {
        let n_msg = p.origin.len();
        (Just(p), 1..=3usize, prop::collection::vec(0..=2usize, n_msg)).prop_flat_map(
            |(p, slots, counts)| {
                let ants: Vec<usize> =
                    p.origin.values().map(|t| p.topology.transmitters[t] as usize).collect();
                let entries: usize =
                    counts.iter().zip(&ants).map(|(c, a)| c * a * slots).sum::<usize>().max(1);
                (
                    Just(p),
                    Just(slots),
                    Just(counts),
                    prop::collection::vec((-2..=2i8, -2..=2i8), entries),
                )
            },
        )
    })
    .prop_map(|(p, slots, counts, raw)| {
        let mut feed = raw.into_iter();
        let mut streams = Vec::new();
        for ((m, t), count) in p.origin.iter().zip(&counts) {
            let antennas = p.topology.transmitters[t] as usize;
            for _ in 0..*count {
                let vectors = (0..slots)
                    .map(|_| {
                        (0..antennas)
                            .map(|_| {
                                let (re, im) = feed.next().expect("entry feed is long enough");
                                C64::new(re as f64, im as f64)
                            })
                            .collect()
                    })
                    .collect();
                streams.push(Stream { message: m.clone(), vectors });
            }
        }
        let s = LinearScheme { slots, declared_tau: 1, streams, name: "random".into() };
        (p, s)
    })
}

/// A desired block, an interference block, and one extra interference
/// column, all with small integer entries. Half the time the first
/// interference column is rigged to be a multiple of the first desired
/// column so rank collisions actually occur.
pub fn arb_rank_instance() -> impl Strategy<Value = (DMatrix<C64>, DMatrix<C64>, Vec<C64>)> {
    (1..=5usize, 0..=3usize, 0..=3usize)
        .prop_flat_map(|(rows, dc, ic)| {
            (
                Just((rows, dc, ic)),
                prop::collection::vec((-2..=2i8, -2..=2i8), rows * dc),
                prop::collection::vec((-2..=2i8, -2..=2i8), rows * ic),
                prop::collection::vec((-2..=2i8, -2..=2i8), rows),
                any::<bool>(),
            )
        })
        .prop_map(|((rows, dc, ic), d_raw, i_raw, x_raw, rig)| {
            let cx = |v: &[(i8, i8)], k: usize| C64::new(v[k].0 as f64, v[k].1 as f64);
            let d = DMatrix::from_fn(rows, dc, |i, j| cx(&d_raw, j * rows + i));
            let mut interference = DMatrix::from_fn(rows, ic, |i, j| cx(&i_raw, j * rows + i));
            if rig && dc > 0 && ic > 0 {
                for r in 0..rows {
                    interference[(r, 0)] = d[(r, 0)] * C64::new(2.0, 1.0);
                }
            }
            let x: Vec<C64> = (0..rows).map(|i| cx(&x_raw, i)).collect();
            (d, interference, x)
        })
}

/// A problem, a schedule over a random subset of its demands (single-pair
/// phases with random weights normalized to sum to one), and a horizon on
/// which every phase width is integral.
pub fn arb_schedule_case() -> impl Strategy<Value = (CBProblem, Schedule, usize)> {
    arb_problem()
        .prop_flat_map(|p| {
            let pairs: Vec<(String, String)> = p
                .desired
                .iter()
                .flat_map(|(r, set)| set.iter().map(move |m| (m.clone(), r.clone())))
                .collect();
            let n = pairs.len();
            (Just(p), Just(pairs), prop::collection::vec((any::<bool>(), 1..=4u32), n), 1..=3usize)
        })
        .prop_map(|(p, pairs, picks, mult)| {
            let chosen: Vec<(&(String, String), u32)> = pairs
                .iter()
                .zip(&picks)
                .filter(|(_, (keep, _))| *keep)
                .map(|(pair, (_, weight))| (pair, *weight))
                .collect();
            let total: u32 = chosen.iter().map(|(_, w)| w).sum();
            let phases: Vec<Phase> = chosen
                .iter()
                .map(|(pair, w)| Phase {
                    weight: rat(*w as i64, total as i64),
                    served: BTreeSet::from([(pair.0.clone(), pair.1.clone())]),
                })
                .collect();
            let denominator = total.max(1) as usize * mult;
            (p, Schedule { phases }, denominator)
        })
}

/// Smallest horizon on which every phase of `s` occupies a whole number of
/// slots.
pub fn natural_horizon(s: &Schedule) -> usize {
    let mut lcm = BigInt::from(1);
    for ph in &s.phases {
        let d = ph.weight.denom().clone();
        let mut a = lcm.clone();
        let mut b = d.clone();
        while b != BigInt::from(0) {
            let r = &a % &b;
            a = std::mem::replace(&mut b, r);
        }
        lcm = lcm / a * d;
    }
    usize::try_from(lcm).expect("horizon fits usize").max(1)
}

/// Gives an all-silent scheme one live entry so it passes validation.
pub fn ensure_audible(s: &mut LinearScheme) {
    if !s.streams.is_empty() && s.streams.iter().all(Stream::is_silent) {
        s.streams[0].vectors[0][0] = C64::new(1.0, 0.0);
    }
}

/// Scaling any one stream by a nonzero scalar must not change any
/// receiver's pass/fail verdict on the same channel realization.
pub fn check_scale_invariance(p: &CBProblem, s: &LinearScheme, pick: usize, c: C64, seed: u64) {
    if s.streams.is_empty() {
        return;
    }
    let ch = sample_channels(p, s.slots, &FadingSpec::default_with_seed(seed))
        .expect("channels sample");
    let mut scaled = s.clone();
    let k = pick % scaled.streams.len();
    for v in &mut scaled.streams[k].vectors {
        for entry in v.iter_mut() {
            *entry *= c;
        }
    }
    for r in p.topology.receivers.keys() {
        let (d0, i0) = effective_signatures(p, s, &ch, r).expect("signatures");
        let (d1, i1) = effective_signatures(p, &scaled, &ch, r).expect("signatures");
        let v0 = check_receiver(&d0, &i0, DEFAULT_TOLERANCE).expect("rank check");
        let v1 = check_receiver(&d1, &i1, DEFAULT_TOLERANCE).expect("rank check");
        assert_eq!(v0.pass, v1.pass, "scaling stream {k} by {c} flipped the verdict at {r}");
    }
}

/// A verdict that holds with an extra interference column must also hold
/// without it.
pub fn check_interference_monotonicity(d: &DMatrix<C64>, i: &DMatrix<C64>, extra: &[C64]) {
    let wider = DMatrix::from_fn(d.nrows(), i.ncols() + 1, |r, c| {
        if c < i.ncols() {
            i[(r, c)]
        } else {
            extra[r]
        }
    });
    let with = check_receiver(d, &wider, DEFAULT_TOLERANCE).expect("rank check");
    let without = check_receiver(d, i, DEFAULT_TOLERANCE).expect("rank check");
    assert!(
        !with.pass || without.pass,
        "dropping an interference column turned a pass into a fail"
    );
}

/// Swapping link directions twice returns the original unicast problem,
/// and one swap preserves the node and link counts.
pub fn check_reciprocal_involution(p: &CBProblem) {
    let q = net::reciprocal(p).expect("unicast problems have a reciprocal");
    assert_eq!(q.topology.transmitters.len(), p.topology.receivers.len());
    assert_eq!(q.topology.receivers.len(), p.topology.transmitters.len());
    assert_eq!(q.topology.connectivity.len(), p.topology.connectivity.len());
    assert_eq!(q.origin.len(), p.origin.len());
    let back = net::reciprocal(&q).expect("a reciprocal problem is itself reciprocable");
    assert_eq!(&back, p, "two direction swaps must restore the problem");
}

/// Expanding a schedule to a scheme preserves every message's DoF and the
/// sum exactly.
pub fn check_schedule_preserves_dof(p: &CBProblem, sched: &Schedule, denominator: usize) {
    let s = schedule_to_scheme(sched, p, denominator).expect("schedule expands");
    for m in p.origin.keys() {
        assert_eq!(
            sched.message_share(m),
            s.claimed_dof(m),
            "message {m}: scheme DoF differs from schedule share"
        );
    }
    let shares: Rat = p.origin.keys().map(|m| sched.message_share(m)).sum();
    assert_eq!(shares, s.claimed_sum_dof(), "sum DoF drifted in expansion");
}

/// Store/load are exact inverses for problems, schemes, and the
/// index-coding view.
pub fn check_round_trips(p: &CBProblem, s: &LinearScheme) {
    let p2 = net::load_problem(&net::store_problem(p)).expect("stored problem parses");
    assert_eq!(&p2, p, "problem changed across store/load");
    let s2 = scheme::load_scheme(&scheme::store_scheme(s)).expect("stored scheme parses");
    assert_eq!(&s2, s, "scheme changed across store/load");
    let g = gic::cb_to_gic(p);
    let g2 = gic::load_gic(&gic::store_gic(&g)).expect("stored index-coding problem parses");
    assert_eq!(g2, g, "index-coding problem changed across store/load");
}

/// The index-coding maps invert each other on canonical unicast problems.
pub fn check_gic_maps_invert(p: &CBProblem) {
    let g = gic::cb_to_gic(p);
    let back = gic::gic_to_cb(&g).expect("canonical problems map back");
    assert_eq!(&back, p, "index-coding round trip changed the problem");
}

/// The float SVD verifier and the exact rational verifier must return the
/// same verdict.
pub fn check_oracles_agree(p: &CBProblem, s: &LinearScheme, tau: usize, seed: u64) {
    let spec = FadingSpec { tau, ..FadingSpec::default_with_seed(seed) };
    let float_pass = verify::verify(p, s, &spec, 10).expect("float verification runs").pass;
    let exact_pass = verify::verify_exact(p, s, tau, 2).expect("exact verification runs");
    assert_eq!(
        float_pass, exact_pass,
        "float and exact verifiers disagree on {} at tau {tau}",
        s.name
    );
}
