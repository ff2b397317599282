//! Exact rational simplex for small linear programs.
//!
//! Maximizes `c·x` subject to `Ax ≤ b`, `x ≥ 0` with `b ≥ 0`, entirely in
//! exact rational arithmetic — bound values like 8/3 or 6/7 must come out
//! exact, not as floats. The nonnegative right-hand side keeps the slack
//! basis feasible, so no two-phase start is needed; every program in this
//! crate (DoF polytopes, max-min epigraph forms, schedule weight programs)
//! fits that shape.
//!
//! Tableau entries on these polytopes stay tiny, so the solver first runs
//! over machine-word rationals with overflow-checked arithmetic and falls
//! back to arbitrary precision only if a checked operation ever fails —
//! both routes are exact. Pivoting uses Dantzig's rule with a switch to
//! Bland's rule after a generous iteration budget, which guarantees
//! termination on degenerate programs.

use crate::{Error, Rat, Result};
use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

/// `maximize objective·x` subject to `row·x ≤ rhs` for each constraint and
/// `x ≥ 0`. Right-hand sides must be nonnegative.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub objective: Vec<Rat>,
    pub constraints: Vec<(Vec<Rat>, Rat)>,
}

/// Optimal value and an optimal point.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub value: Rat,
    pub point: Vec<Rat>,
}

/// Exact scalar a tableau can run on. Arithmetic reports overflow instead
/// of wrapping; the arbitrary-precision instance simply never overflows.
trait Exact: Clone + PartialOrd + Zero + One + Signed {
    fn from_rat(r: &Rat) -> Option<Self>;
    fn to_rat(&self) -> Rat;
    fn try_div(&self, other: &Self) -> Option<Self>;
    fn try_mul(&self, other: &Self) -> Option<Self>;
    fn try_sub(&self, other: &Self) -> Option<Self>;
}

impl Exact for Ratio<i64> {
    fn from_rat(r: &Rat) -> Option<Self> {
        Some(Ratio::new(r.numer().to_i64()?, r.denom().to_i64()?))
    }
    fn to_rat(&self) -> Rat {
        Rat::new(BigInt::from(*self.numer()), BigInt::from(*self.denom()))
    }
    fn try_div(&self, other: &Self) -> Option<Self> {
        self.checked_div(other)
    }
    fn try_mul(&self, other: &Self) -> Option<Self> {
        self.checked_mul(other)
    }
    fn try_sub(&self, other: &Self) -> Option<Self> {
        self.checked_sub(other)
    }
}

impl Exact for Rat {
    fn from_rat(r: &Rat) -> Option<Self> {
        Some(r.clone())
    }
    fn to_rat(&self) -> Rat {
        self.clone()
    }
    fn try_div(&self, other: &Self) -> Option<Self> {
        Some(self / other)
    }
    fn try_mul(&self, other: &Self) -> Option<Self> {
        Some(self * other)
    }
    fn try_sub(&self, other: &Self) -> Option<Self> {
        Some(self - other)
    }
}

/// Solves the program exactly. Errors on malformed rows, negative
/// right-hand sides, or an unbounded objective.
pub fn maximize(lp: &LinearProgram) -> Result<Optimum> {
    let n = lp.objective.len();
    for (i, (row, rhs)) in lp.constraints.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidParameter(format!(
                "constraint {i} has {} coefficients for {n} variables",
                row.len()
            )));
        }
        if rhs.is_negative() {
            return Err(Error::InvalidParameter(format!(
                "constraint {i} has negative right-hand side {rhs}"
            )));
        }
    }
    if lp.constraints.is_empty() {
        if lp.objective.iter().any(|c| c.is_positive()) {
            return Err(Error::InvalidParameter("objective is unbounded".into()));
        }
        return Ok(Optimum { value: Rat::zero(), point: vec![Rat::zero(); n] });
    }
    match solve::<Ratio<i64>>(lp) {
        Some(outcome) => outcome,
        // A checked machine-word operation overflowed; redo the whole solve
        // in arbitrary precision.
        None => solve::<Rat>(lp).expect("arbitrary-precision arithmetic cannot overflow"),
    }
}

/// One full simplex run over scalar `T`. Returns `None` if any arithmetic
/// step overflows (machine-word route only).
fn solve<T: Exact>(lp: &LinearProgram) -> Option<Result<Optimum>> {
    let n = lp.objective.len();
    let m = lp.constraints.len();
    // Tableau: m constraint rows [A | I | b], then the objective row
    // [-c | 0 | 0]. Column n+m holds the right-hand side.
    let width = n + m + 1;
    let mut tab: Vec<Vec<T>> = Vec::with_capacity(m + 1);
    for (i, (row, rhs)) in lp.constraints.iter().enumerate() {
        let mut t = vec![T::zero(); width];
        for (j, c) in row.iter().enumerate() {
            t[j] = T::from_rat(c)?;
        }
        t[n + i] = T::one();
        t[n + m] = T::from_rat(rhs)?;
        tab.push(t);
    }
    let mut objective_row = vec![T::zero(); width];
    for (j, c) in lp.objective.iter().enumerate() {
        objective_row[j] = -T::from_rat(c)?;
    }
    tab.push(objective_row);

    let mut basis: Vec<usize> = (n..n + m).collect();
    let budget = 50 * (n + m).max(1);
    let mut iterations = 0usize;
    loop {
        iterations += 1;
        let bland = iterations > budget;
        // Entering column: most negative reduced cost (Dantzig), or the
        // first negative one once Bland's anti-cycling rule kicks in.
        let mut entering: Option<usize> = None;
        for j in 0..n + m {
            if tab[m][j].is_negative() {
                match entering {
                    None => entering = Some(j),
                    Some(e) if !bland && tab[m][j] < tab[m][e] => entering = Some(j),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
        }
        let Some(col) = entering else {
            break; // optimal
        };
        // Leaving row: minimum ratio; ties by smallest basis index.
        let mut leaving: Option<(usize, T)> = None;
        for i in 0..m {
            if !tab[i][col].is_positive() {
                continue;
            }
            let ratio = tab[i][n + m].try_div(&tab[i][col])?;
            let better = match &leaving {
                None => true,
                Some((r, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*r]),
            };
            if better {
                leaving = Some((i, ratio));
            }
        }
        let Some((row, _)) = leaving else {
            return Some(Err(Error::InvalidParameter("objective is unbounded".into())));
        };
        pivot(&mut tab, row, col)?;
        basis[row] = col;
    }

    let value = tab[m][n + m].to_rat();
    let mut point = vec![Rat::zero(); n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            point[b] = tab[i][n + m].to_rat();
        }
    }
    Some(Ok(Optimum { value, point }))
}

/// Gauss-Jordan pivot on (row, col), skipping zero entries. `None` on
/// overflow.
fn pivot<T: Exact>(tab: &mut [Vec<T>], row: usize, col: usize) -> Option<()> {
    let inv = T::one().try_div(&tab[row][col])?;
    for cell in tab[row].iter_mut() {
        if !cell.is_zero() {
            *cell = cell.try_mul(&inv)?;
        }
    }
    // Split the tableau around the pivot row so the eliminations can borrow
    // it without copying hundreds of entries per pivot.
    let (before, rest) = tab.split_at_mut(row);
    let (pivot_row, after) = rest.split_first_mut().expect("pivot row exists");
    for r in before.iter_mut().chain(after.iter_mut()) {
        if r[col].is_zero() {
            continue;
        }
        let factor = std::mem::replace(&mut r[col], T::zero());
        for (j, (cell, p)) in r.iter_mut().zip(pivot_row.iter()).enumerate() {
            if j != col && !p.is_zero() {
                *cell = cell.try_sub(&factor.try_mul(p)?)?;
            }
        }
    }
    Some(())
}
