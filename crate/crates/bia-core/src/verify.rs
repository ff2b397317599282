//! Rank-based verification of blind linear schemes.
//!
//! A receiver can linearly resolve its desired streams exactly when the
//! joint matrix of desired and interference signatures satisfies
//! `rank([D I]) = rank(I) + ncols(D)` with `D` of full column rank — the
//! desired columns stick out of the interference span in independent
//! directions. [`verify`] samples generic channels and checks this at every
//! receiver over many draws; [`verify_exact`] runs the same decision
//! procedure over exact rational arithmetic with rational channel draws, so
//! the two routes certify each other. Column assembly is shared (it is the
//! definition of a signature); the rank backends are independent.

use crate::channel::{sample_channels, ChannelRealization, FadingSpec};
use crate::net::CBProblem;
use crate::scheme::LinearScheme;
use crate::{f64_to_rat, rat, C64, CRat, Error, Rat, Result};
use nalgebra::DMatrix;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeMap;
use std::ops::{Add, Mul};

/// Relative singular-value threshold used by the float route.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Default number of channel draws when the caller has no preference.
pub const DEFAULT_DRAWS: usize = 20;

// ─── Generic signature assembly ─────────────────────────────────────────────

/// Stacks one stream into its effective receive-space column: the slot-`n`
/// block is `H(n) · v(n)`. `channel(n, row, col)` indexes the slot-`n`
/// coefficient matrix of the (receiver, origin) link, 1-based in `n`.
fn stream_column<S, F>(rx_antennas: usize, vectors: &[Vec<S>], channel: F) -> Vec<S>
where
    S: Clone + Zero + Mul<Output = S> + Add<Output = S>,
    F: Fn(usize, usize, usize) -> S,
{
    let mut column = Vec::with_capacity(rx_antennas * vectors.len());
    for (n, v) in vectors.iter().enumerate() {
        for row in 0..rx_antennas {
            let mut acc = S::zero();
            for (col, coeff) in v.iter().enumerate() {
                acc = acc + channel(n + 1, row, col) * coeff.clone();
            }
            column.push(acc);
        }
    }
    column
}

/// Splits all of receiver `r`'s stream columns into desired and
/// interference sets, in scheme stream order. Streams from transmitters
/// not connected to `r` contribute nothing. Generic over the scalar so the
/// float and exact routes assemble identically.
fn assemble_columns<S, C, G>(
    p: &CBProblem,
    s: &LinearScheme,
    r: &str,
    convert: C,
    channel: G,
) -> (Vec<Vec<S>>, Vec<Vec<S>>)
where
    S: Clone + Zero + Mul<Output = S> + Add<Output = S>,
    C: Fn(&C64) -> S,
    G: Fn(&str, usize, usize, usize) -> S,
{
    let rx_antennas = p.topology.receivers[r] as usize;
    let desired_set = &p.desired[r];
    let mut desired = Vec::new();
    let mut interference = Vec::new();
    for stream in &s.streams {
        let t = p.origin[&stream.message].as_str();
        if !p.topology.connected(r, t) {
            continue;
        }
        let vectors: Vec<Vec<S>> =
            stream.vectors.iter().map(|v| v.iter().map(&convert).collect()).collect();
        let column = stream_column(rx_antennas, &vectors, |n, row, col| channel(t, n, row, col));
        if desired_set.contains(&stream.message) {
            desired.push(column);
        } else {
            interference.push(column);
        }
    }
    (desired, interference)
}

fn columns_to_matrix(columns: &[Vec<C64>], rows: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i])
}

/// Effective desired and interference signature matrices of receiver `r`
/// under one channel realization. Rows: receiver antennas × slots.
pub fn effective_signatures(
    p: &CBProblem,
    s: &LinearScheme,
    ch: &ChannelRealization,
    r: &str,
) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    if ch.horizon != s.slots {
        return Err(Error::InvalidParameter(format!(
            "channel horizon {} != scheme horizon {}",
            ch.horizon, s.slots
        )));
    }
    if !p.topology.receivers.contains_key(r) {
        return Err(Error::InvalidParameter(format!("unknown receiver {r}")));
    }
    let (desired, interference) =
        assemble_columns(p, s, r, |c| *c, |t, n, row, col| ch.at(r, t, n)[(row, col)]);
    let rows = p.topology.receivers[r] as usize * s.slots;
    Ok((columns_to_matrix(&desired, rows), columns_to_matrix(&interference, rows)))
}

// ─── Float rank route ───────────────────────────────────────────────────────

/// Numerical rank by singular-value thresholding, relative to the largest
/// singular value.
pub fn svd_rank(m: &DMatrix<C64>, tolerance: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let singular = m.clone().svd(false, false).singular_values;
    let max = singular.iter().cloned().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return 0;
    }
    singular.iter().filter(|&&s| s > tolerance * max).count()
}

/// Outcome of the rank test at one receiver under one realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReceiverCheck {
    pub desired_columns: usize,
    pub desired_rank: usize,
    pub interference_rank: usize,
    pub joint_rank: usize,
    pub pass: bool,
}

/// Decides linear resolvability from the desired and interference matrices:
/// pass iff `rank([D I]) = rank(I) + ncols(D)` and `D` has full column
/// rank. An empty `D` passes vacuously.
pub fn check_receiver(
    desired: &DMatrix<C64>,
    interference: &DMatrix<C64>,
    tolerance: f64,
) -> Result<ReceiverCheck> {
    if tolerance <= 0.0 {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let ncols = desired.ncols();
    let rows = desired.nrows().max(interference.nrows());
    let joint = DMatrix::from_fn(rows, ncols + interference.ncols(), |i, j| {
        if j < ncols { desired[(i, j)] } else { interference[(i, j - ncols)] }
    });
    let desired_rank = svd_rank(desired, tolerance);
    let interference_rank = svd_rank(interference, tolerance);
    let joint_rank = svd_rank(&joint, tolerance);
    Ok(ReceiverCheck {
        desired_columns: ncols,
        desired_rank,
        interference_rank,
        joint_rank,
        pass: desired_rank == ncols && joint_rank == interference_rank + ncols,
    })
}

// ─── Reports ────────────────────────────────────────────────────────────────

/// Per-receiver verdict aggregated over draws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceiverReport {
    pub draws_passed: usize,
    pub desired_columns: usize,
    pub interference_rank_min: usize,
    pub interference_rank_max: usize,
    pub joint_rank_min: usize,
    pub joint_rank_max: usize,
    /// True when every draw passed.
    pub pass: bool,
}

/// Full verification verdict with DoF accounting.
///
/// A message scores its claimed DoF when all receivers desiring it pass in
/// all draws, and zero otherwise — no partial credit.
#[derive(Debug, Clone, PartialEq)]
pub struct DoFReport {
    pub pass: bool,
    pub draws: usize,
    pub tau: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub per_receiver: BTreeMap<String, ReceiverReport>,
    pub per_message: BTreeMap<String, Rat>,
    pub per_cell: BTreeMap<String, Rat>,
    pub sum_dof: Rat,
}

impl DoFReport {
    /// Receivers that failed at least one draw, in id order.
    pub fn failing_receivers(&self) -> Vec<&str> {
        self.per_receiver.iter().filter(|(_, v)| !v.pass).map(|(k, _)| k.as_str()).collect()
    }

    /// Report as a JSON document; rationals rendered as "num/den".
    pub fn to_json(&self) -> String {
        let per_receiver: BTreeMap<&str, serde_json::Value> = self
            .per_receiver
            .iter()
            .map(|(r, v)| {
                (
                    r.as_str(),
                    serde_json::json!({
                        "pass": v.pass,
                        "draws_passed": v.draws_passed,
                        "desired_columns": v.desired_columns,
                        "interference_rank": [v.interference_rank_min, v.interference_rank_max],
                        "joint_rank": [v.joint_rank_min, v.joint_rank_max],
                    }),
                )
            })
            .collect();
        let rat_map = |m: &BTreeMap<String, Rat>| -> BTreeMap<String, String> {
            m.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()
        };
        serde_json::to_string_pretty(&serde_json::json!({
            "pass": self.pass,
            "draws": self.draws,
            "tau": self.tau,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "per_receiver": per_receiver,
            "per_message_dof": rat_map(&self.per_message),
            "per_cell_dof": rat_map(&self.per_cell),
            "sum_dof": self.sum_dof.to_string(),
        }))
        .expect("report serializes")
    }
}

// ─── Float verification ─────────────────────────────────────────────────────

/// Verifies a scheme against channels produced by `sampler`, one
/// realization per draw index. `echo` carries the (tau, seed) parameters
/// into the report. This is the engine behind [`verify`]; it is public so
/// callers can supply nonstandard coherence structures (e.g. per-link
/// coherence times).
pub fn verify_with_sampler<F>(
    p: &CBProblem,
    s: &LinearScheme,
    draws: usize,
    tolerance: f64,
    echo: (usize, u64),
    sampler: F,
) -> Result<DoFReport>
where
    F: Fn(u64) -> Result<ChannelRealization>,
{
    p.validate()?;
    s.validate(p)?;
    if draws == 0 {
        return Err(Error::InvalidParameter("need at least one draw".into()));
    }
    let mut per_receiver: BTreeMap<String, ReceiverReport> = BTreeMap::new();
    for d in 0..draws {
        let ch = sampler(d as u64)?;
        for r in p.topology.receivers.keys() {
            let (desired, interference) = effective_signatures(p, s, &ch, r)?;
            let check = check_receiver(&desired, &interference, tolerance)?;
            let entry = per_receiver.entry(r.clone()).or_insert(ReceiverReport {
                draws_passed: 0,
                desired_columns: check.desired_columns,
                interference_rank_min: usize::MAX,
                interference_rank_max: 0,
                joint_rank_min: usize::MAX,
                joint_rank_max: 0,
                pass: true,
            });
            entry.draws_passed += usize::from(check.pass);
            entry.pass &= check.pass;
            entry.interference_rank_min = entry.interference_rank_min.min(check.interference_rank);
            entry.interference_rank_max = entry.interference_rank_max.max(check.interference_rank);
            entry.joint_rank_min = entry.joint_rank_min.min(check.joint_rank);
            entry.joint_rank_max = entry.joint_rank_max.max(check.joint_rank);
        }
    }
    let pass = per_receiver.values().all(|v| v.pass);
    let mut per_message: BTreeMap<String, Rat> = BTreeMap::new();
    for m in p.origin.keys() {
        let all_destinations_pass = p.destinations(m).iter().all(|r| per_receiver[*r].pass);
        let dof = if all_destinations_pass { s.claimed_dof(m) } else { Rat::zero() };
        per_message.insert(m.clone(), dof);
    }
    let mut per_cell: BTreeMap<String, Rat> =
        p.cells.cell.values().map(|label| (label.clone(), Rat::zero())).collect();
    for (m, dof) in &per_message {
        let cell = p
            .cell_of_message(m)
            .ok_or_else(|| Error::InvalidParameter(format!("message {m} has no cell")))?;
        *per_cell.get_mut(cell).unwrap() += dof.clone();
    }
    let sum_dof = per_message.values().cloned().sum();
    Ok(DoFReport {
        pass,
        draws,
        tau: echo.0,
        seed: echo.1,
        tolerance,
        per_receiver,
        per_message,
        per_cell,
        sum_dof,
    })
}

/// Verifies a scheme over `draws` generic channel realizations drawn per
/// `spec`. The scheme horizon must be a whole number of coherence blocks.
pub fn verify(p: &CBProblem, s: &LinearScheme, spec: &FadingSpec, draws: usize) -> Result<DoFReport> {
    if spec.tau == 0 {
        return Err(Error::InvalidParameter("coherence time must be at least 1".into()));
    }
    if s.slots % spec.tau != 0 {
        return Err(Error::InvalidParameter(format!(
            "scheme horizon {} is not a multiple of coherence time {}",
            s.slots, spec.tau
        )));
    }
    verify_with_sampler(p, s, draws, DEFAULT_TOLERANCE, (spec.tau, spec.seed), |d| {
        let draw_spec = FadingSpec { seed: spec.seed.wrapping_add(d), ..spec.clone() };
        sample_channels(p, s.slots, &draw_spec)
    })
}

// ─── Exact rational route ───────────────────────────────────────────────────

/// Column rank by Gaussian elimination over the complex rationals — no
/// tolerance anywhere. `columns` holds column vectors of equal length.
pub fn rational_rank(columns: &[Vec<CRat>]) -> usize {
    if columns.is_empty() {
        return 0;
    }
    let rows = columns[0].len();
    // Row-major working copy.
    let mut m: Vec<Vec<CRat>> = (0..rows)
        .map(|i| columns.iter().map(|c| c[i].clone()).collect())
        .collect();
    let cols = columns.len();
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = {
            let p = &m[rank][col];
            CRat::one() / p.clone()
        };
        for i in (rank + 1)..rows {
            if m[i][col].is_zero() {
                continue;
            }
            let factor = m[i][col].clone() * inv.clone();
            for j in col..cols {
                let delta = factor.clone() * m[rank][j].clone();
                m[i][j] = m[i][j].clone() - delta;
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Nonzero random rational with numerator and denominator bounded by 97.
fn random_rational(rng: &mut impl Rng) -> Rat {
    let mut num = 0i64;
    while num == 0 {
        num = rng.gen_range(-97..=97);
    }
    let den = rng.gen_range(1..=97i64);
    rat(num, den)
}

fn random_complex_rational(rng: &mut impl Rng) -> CRat {
    CRat::new(random_rational(rng), random_rational(rng))
}

/// Block-fading rational channel: per link, per coherence block, a fresh
/// matrix of random complex rationals. Keyed like the float realization.
fn sample_rational_channels(
    p: &CBProblem,
    horizon: usize,
    tau: usize,
    seed: u64,
) -> BTreeMap<(String, String), Vec<Vec<Vec<CRat>>>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut coefficients = BTreeMap::new();
    for (r, t) in &p.topology.connectivity {
        let rows = p.topology.receivers[r] as usize;
        let cols = p.topology.transmitters[t] as usize;
        let mut slots: Vec<Vec<Vec<CRat>>> = Vec::with_capacity(horizon);
        for n in 0..horizon {
            if n % tau == 0 {
                let fresh: Vec<Vec<CRat>> = (0..rows)
                    .map(|_| (0..cols).map(|_| random_complex_rational(&mut rng)).collect())
                    .collect();
                slots.push(fresh);
            } else {
                let prev = slots[n - 1].clone();
                slots.push(prev);
            }
        }
        coefficients.insert((r.clone(), t.clone()), slots);
    }
    coefficients
}

const EXACT_BASE_SEED: u64 = 0x7A7E_0001;

/// Exact-rational verdict for one trial seed: same decision procedure as
/// the float route, but channels are random rationals and ranks come from
/// exact elimination.
fn exact_trial(p: &CBProblem, s: &LinearScheme, tau: usize, seed: u64) -> Result<bool> {
    let channels = sample_rational_channels(p, s.slots, tau, seed);
    for r in p.topology.receivers.keys() {
        let (desired, interference) = assemble_columns(
            p,
            s,
            r,
            |c| CRat::new(f64_to_rat(c.re), f64_to_rat(c.im)),
            |t, n, row, col| channels[&(r.clone(), t.to_string())][n - 1][row][col].clone(),
        );
        let ncols = desired.len();
        let desired_rank = rational_rank(&desired);
        let interference_rank = rational_rank(&interference);
        let joint: Vec<Vec<CRat>> = desired.iter().chain(&interference).cloned().collect();
        let joint_rank = rational_rank(&joint);
        if desired_rank != ncols || joint_rank != interference_rank + ncols {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Verifies a scheme in exact rational arithmetic: `trials` independent
/// rational channel draws at coherence time `tau`, pass iff every receiver
/// resolves its desired streams in every trial. Scheme vectors are
/// rationalized losslessly from their float values, so alignment relations
/// are preserved exactly.
pub fn verify_exact(p: &CBProblem, s: &LinearScheme, tau: usize, trials: usize) -> Result<bool> {
    p.validate()?;
    s.validate(p)?;
    if tau == 0 {
        return Err(Error::InvalidParameter("coherence time must be at least 1".into()));
    }
    if s.slots % tau != 0 {
        return Err(Error::InvalidParameter(format!(
            "scheme horizon {} is not a multiple of coherence time {tau}",
            s.slots
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    for trial in 0..trials {
        if !exact_trial(p, s, tau, EXACT_BASE_SEED.wrapping_add(trial as u64))? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{make_four_cell, make_symmetric_duk, Direction};
    use crate::scheme::{
        four_cell_downlink_coherent, four_cell_downlink_iid, four_cell_uplink_coherent,
        four_cell_uplink_iid, symmetric_duk_scheme,
    };

    fn dl() -> CBProblem {
        make_four_cell(Direction::Downlink, false).unwrap()
    }

    fn spec_tau(tau: usize) -> FadingSpec {
        FadingSpec { tau, ..FadingSpec::default_with_seed(7) }
    }

    #[test]
    fn signature_of_constant_channel_stream_is_scaled_all_ones() {
        let p = dl();
        let s = four_cell_downlink_coherent(&p).unwrap();
        let ch = sample_channels(&p, 3, &spec_tau(3)).unwrap();
        // At receiver a1 (hears A and B): desired = a1's column, and the
        // b1 stream rides [1,1,1] through a constant channel, so its
        // column has three equal entries.
        let (desired, interference) = effective_signatures(&p, &s, &ch, "a1").unwrap();
        assert_eq!(desired.ncols(), 1);
        assert_eq!(interference.ncols(), 3); // a2, b1, b2
        let h = ch.at("a1", "B", 1)[(0, 0)];
        let b1_col = interference.column(1); // stream order: a2, b1, b2
        for i in 0..3 {
            assert!((b1_col[i] - h).norm() < 1e-12);
        }
    }

    #[test]
    fn disconnected_transmitters_contribute_no_columns() {
        let p = dl();
        let s = four_cell_downlink_coherent(&p).unwrap();
        let ch = sample_channels(&p, 3, &spec_tau(3)).unwrap();
        // a1 hears only A and B: 1 desired + 3 interference of 8 streams.
        let (d, i) = effective_signatures(&p, &s, &ch, "a1").unwrap();
        assert_eq!(d.ncols() + i.ncols(), 4);
    }

    #[test]
    fn check_receiver_basic_verdicts() {
        let e1 = DMatrix::from_column_slice(3, 1, &[C64::new(1.0, 0.0), C64::zero(), C64::zero()]);
        let e2 = DMatrix::from_column_slice(3, 1, &[C64::zero(), C64::new(1.0, 0.0), C64::zero()]);
        let ok = check_receiver(&e1, &e2, DEFAULT_TOLERANCE).unwrap();
        assert!(ok.pass);
        let scaled = e1.map(|c| c * C64::new(2.0, 0.0));
        let bad = check_receiver(&e1, &scaled, DEFAULT_TOLERANCE).unwrap();
        assert!(!bad.pass);
        assert_eq!(bad.joint_rank, 1);
        // Empty desired matrix: vacuous pass.
        let empty = DMatrix::<C64>::zeros(3, 0);
        assert!(check_receiver(&empty, &e1, DEFAULT_TOLERANCE).unwrap().pass);
        assert!(check_receiver(&e1, &e2, 0.0).is_err());
    }

    #[test]
    fn coherent_downlink_passes_at_tau_3_with_sum_8_3() {
        let p = dl();
        let s = four_cell_downlink_coherent(&p).unwrap();
        let report = verify(&p, &s, &spec_tau(3), 20).unwrap();
        assert!(report.pass);
        assert_eq!(report.sum_dof, rat(8, 3));
        for dof in report.per_message.values() {
            assert_eq!(*dof, rat(1, 3));
        }
        // Boundary receivers b2 and d2 see interference rank 2: b1 and d1
        // stay aligned on the all-ones direction (one dimension), plus one
        // dimension from the other boundary user's stream.
        for r in ["b2", "d2"] {
            let rr = &report.per_receiver[r];
            assert_eq!((rr.interference_rank_min, rr.interference_rank_max), (2, 2), "{r}");
        }
    }

    #[test]
    fn coherent_scheme_on_merged_network_aligns_interference_to_rank_1() {
        // On the fused X network every receiver desires both boundary
        // messages, so only the aligned pair remains as interference.
        let merged = make_four_cell(Direction::Downlink, true).unwrap();
        let unmerged = dl();
        let s = four_cell_downlink_coherent(&unmerged).unwrap();
        let report = verify(&merged, &s, &spec_tau(3), 20).unwrap();
        assert!(report.pass);
        assert_eq!(report.sum_dof, rat(8, 3));
        for (r, rr) in &report.per_receiver {
            assert_eq!((rr.interference_rank_min, rr.interference_rank_max), (1, 1), "{r}");
            assert_eq!(rr.desired_columns, 2, "{r}");
        }
    }

    #[test]
    fn coherent_downlink_fails_at_tau_1_exactly_at_the_boundary() {
        let p = dl();
        let s = four_cell_downlink_coherent(&p).unwrap();
        let report = verify(&p, &s, &spec_tau(1), 20).unwrap();
        assert!(!report.pass);
        assert_eq!(report.failing_receivers(), vec!["b2", "d2"]);
        // Failed messages score zero; the rest keep their claims.
        assert_eq!(report.per_message["b2"], rat(0, 1));
        assert_eq!(report.per_message["d2"], rat(0, 1));
        assert_eq!(report.per_message["a1"], rat(1, 3));
        assert_eq!(report.sum_dof, rat(2, 1));
    }

    #[test]
    fn iid_downlink_passes_at_tau_1_with_sum_5_2() {
        let p = dl();
        let s = four_cell_downlink_iid(&p).unwrap();
        let report = verify(&p, &s, &spec_tau(1), 20).unwrap();
        assert!(report.pass);
        assert_eq!(report.sum_dof, rat(5, 2));
        // Unserved messages score zero but do not fail their receivers.
        assert_eq!(report.per_message["b1"], rat(0, 1));
        assert_eq!(report.per_cell["A"], rat(1, 1));
    }

    #[test]
    fn uplink_schemes_verify_and_localize_coherence_to_station_d() {
        let up = make_four_cell(Direction::Uplink, false).unwrap();
        let coh = four_cell_uplink_coherent(&up).unwrap();
        let report = verify(&up, &coh, &spec_tau(3), 20).unwrap();
        assert!(report.pass);
        assert_eq!(report.sum_dof, rat(8, 3));
        // Without coherence only station D loses alignment.
        let broken = verify(&up, &coh, &spec_tau(1), 20).unwrap();
        assert!(!broken.pass);
        assert_eq!(broken.failing_receivers(), vec!["D"]);
        let iid = four_cell_uplink_iid(&up).unwrap();
        let report = verify(&up, &iid, &spec_tau(1), 20).unwrap();
        assert!(report.pass);
        assert_eq!(report.sum_dof, rat(5, 2));
    }

    #[test]
    fn symmetric_ring_schemes_verify() {
        let p = make_symmetric_duk(1, 1, 5).unwrap();
        let s = symmetric_duk_scheme(1, 1, 5).unwrap();
        let report = verify(&p, &s, &spec_tau(1), 20).unwrap();
        assert!(report.pass);
        assert_eq!(report.sum_dof, rat(2, 1));
        let p = make_symmetric_duk(2, 1, 5).unwrap();
        let s = symmetric_duk_scheme(2, 1, 5).unwrap();
        let report = verify(&p, &s, &spec_tau(4), 20).unwrap();
        assert!(report.pass);
        assert_eq!(report.sum_dof, rat(5, 2));
    }

    #[test]
    fn misaligned_coherence_blocks_are_rejected() {
        let p = dl();
        let s = four_cell_downlink_coherent(&p).unwrap();
        assert!(verify(&p, &s, &spec_tau(2), 5).is_err());
        assert!(verify(&p, &s, &spec_tau(0), 5).is_err());
        assert!(verify(&p, &s, &spec_tau(3), 0).is_err());
    }

    #[test]
    fn rational_rank_on_known_matrices() {
        let one = CRat::new(rat(1, 1), rat(0, 1));
        let zero = CRat::zero();
        // Identity 2x2 → rank 2; duplicated column → rank 1.
        assert_eq!(rational_rank(&[vec![one.clone(), zero.clone()], vec![zero.clone(), one.clone()]]), 2);
        let two = CRat::new(rat(2, 1), rat(0, 1));
        let col = vec![one.clone(), two.clone()];
        let scaled: Vec<CRat> = col.iter().map(|c| c.clone() * two.clone()).collect();
        assert_eq!(rational_rank(&[col, scaled]), 1);
        assert_eq!(rational_rank(&[]), 0);
    }

    #[test]
    fn exact_oracle_agrees_on_the_four_cell_suite() {
        let p = dl();
        let coh = four_cell_downlink_coherent(&p).unwrap();
        assert!(verify_exact(&p, &coh, 3, 2).unwrap());
        assert!(!verify_exact(&p, &coh, 1, 2).unwrap());
        let iid = four_cell_downlink_iid(&p).unwrap();
        assert!(verify_exact(&p, &iid, 1, 2).unwrap());
        let up = make_four_cell(Direction::Uplink, false).unwrap();
        assert!(verify_exact(&up, &four_cell_uplink_coherent(&up).unwrap(), 3, 2).unwrap());
        assert!(!verify_exact(&up, &four_cell_uplink_coherent(&up).unwrap(), 1, 2).unwrap());
    }

    #[test]
    fn exact_pass_is_stable_across_independent_draws() {
        let p = dl();
        let coh = four_cell_downlink_coherent(&p).unwrap();
        assert!(verify_exact(&p, &coh, 3, 5).unwrap());
    }

    #[test]
    fn desired_aligned_with_interference_fails() {
        let p = dl();
        let mut s = four_cell_downlink_iid(&p).unwrap();
        // Point a1's vector at a2's: at receiver a1 both ride the same
        // channel, so the desired column falls inside the interference span.
        let a2_vectors = s.streams_of("a2")[0].vectors.clone();
        for st in &mut s.streams {
            if st.message == "a1" {
                st.vectors = a2_vectors.clone();
            }
        }
        let report = verify(&p, &s, &spec_tau(1), 5).unwrap();
        assert!(!report.pass);
        assert!(report.failing_receivers().contains(&"a1"));
        assert!(!verify_exact(&p, &s, 1, 2).unwrap());
    }

    #[test]
    fn rescaling_a_stream_preserves_verdicts() {
        let p = dl();
        let mut s = four_cell_downlink_coherent(&p).unwrap();
        for v in &mut s.streams[2].vectors {
            for c in v.iter_mut() {
                *c *= C64::new(0.0, 2.5);
            }
        }
        assert!(verify(&p, &s, &spec_tau(3), 10).unwrap().pass);
        assert!(verify_exact(&p, &s, 3, 2).unwrap());
        let report = verify(&p, &s, &spec_tau(1), 10).unwrap();
        assert_eq!(report.failing_receivers(), vec!["b2", "d2"]);
    }

    #[test]
    fn report_json_contains_rationals_as_fractions() {
        let p = dl();
        let s = four_cell_downlink_coherent(&p).unwrap();
        let report = verify(&p, &s, &spec_tau(3), 5).unwrap();
        let json = report.to_json();
        assert!(json.contains("\"sum_dof\": \"8/3\""));
        assert!(json.contains("\"a1\": \"1/3\""));
    }
}
