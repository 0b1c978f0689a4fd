//! Coagulation and fragmentation coefficient families, together with the
//! structural hypotheses and growth conditions they are expected to meet.
//!
//! Everything here is immutable after construction. Violations of the
//! structural hypotheses are reported as data by [`validate_structure`]
//! rather than raised as errors, so that deliberately broken coefficient
//! sets can still be simulated and studied.

mod coag;
mod collision;
mod frag;
mod theta;

use std::fmt;

pub use coag::{CoagFamily, CoagKernel, Phi, SymTable, DEFAULT_N_MAX};
pub(crate) use collision::uniform_mass_norm;
pub use collision::{
    CollisionFragSpec, CollisionRates, DaughterLaw, DaughterTable, DAUGHTER_TABLE_MAX,
};
pub use frag::{BreakupRate, FragSpec};
pub use theta::{ThetaProfile, ThetaShape};

use crate::report::BoundReport;
use crate::{Error, Result};

/// All reaction coefficients of one model.
///
/// `frag` holds linear fragmentation (B_i, β_{i,j}); `collision` holds the
/// quadratic collision-induced fragmentation (b_{k,l}, β_{i,k,l}). Either may
/// be absent; both present means both mechanisms act.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSet {
    pub coag: CoagKernel,
    pub frag: Option<FragSpec>,
    pub collision: Option<CollisionFragSpec>,
}

impl KernelSet {
    pub fn coagulation_only(coag: CoagKernel) -> Self {
        Self {
            coag,
            frag: None,
            collision: None,
        }
    }

    pub fn with_frag(coag: CoagKernel, frag: FragSpec) -> Self {
        Self {
            coag,
            frag: Some(frag),
            collision: None,
        }
    }

    pub fn with_collision(coag: CoagKernel, collision: CollisionFragSpec) -> Self {
        Self {
            coag,
            frag: None,
            collision: Some(collision),
        }
    }

    /// Largest truncation size every component is defined up to.
    pub fn size_limit(&self) -> usize {
        let mut n = self.coag.n_max();
        if let Some(f) = &self.frag {
            n = n.min(f.size());
        }
        if let Some(q) = &self.collision {
            n = n.min(q.size_limit());
        }
        n
    }
}

/// One violated structural hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    CoagNotSymmetric {
        i: usize,
        j: usize,
    },
    CoagNegative {
        i: usize,
        j: usize,
    },
    MonomerBreakup {
        rate: f64,
    },
    BreakupNegative {
        i: usize,
    },
    DaughterNegative {
        i: usize,
        j: usize,
    },
    DaughterMass {
        i: usize,
        expected: f64,
        found: f64,
    },
    CollisionNotSymmetric {
        k: usize,
        l: usize,
    },
    CollisionNegative {
        k: usize,
        l: usize,
    },
    MonomerCollision {
        rate: f64,
    },
    CollisionDaughterNotSymmetric {
        i: usize,
        k: usize,
        l: usize,
    },
    CollisionDaughterNegative {
        i: usize,
        k: usize,
        l: usize,
    },
    CollisionDaughterMass {
        k: usize,
        l: usize,
        expected: f64,
        found: f64,
    },
    TruncationTooLarge {
        n: usize,
        limit: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            CoagNotSymmetric { i, j } => write!(f, "a[{i},{j}] != a[{j},{i}]"),
            CoagNegative { i, j } => write!(f, "a[{i},{j}] < 0"),
            MonomerBreakup { rate } => write!(f, "B_1 = {rate} (monomers must not break up)"),
            BreakupNegative { i } => write!(f, "B_{i} < 0"),
            DaughterNegative { i, j } => write!(f, "beta[{i},{j}] < 0"),
            DaughterMass { i, expected, found } => {
                write!(f, "sum_j j*beta[{i},j] = {found}, expected {expected}")
            }
            CollisionNotSymmetric { k, l } => write!(f, "b[{k},{l}] != b[{l},{k}]"),
            CollisionNegative { k, l } => write!(f, "b[{k},{l}] < 0"),
            MonomerCollision { rate } => write!(f, "b[1,1] = {rate}, expected 0"),
            CollisionDaughterNotSymmetric { i, k, l } => {
                write!(f, "beta[{i},{k},{l}] != beta[{i},{l},{k}]")
            }
            CollisionDaughterNegative { i, k, l } => write!(f, "beta[{i},{k},{l}] < 0"),
            CollisionDaughterMass {
                k,
                l,
                expected,
                found,
            } => write!(f, "sum_i i*beta[i,{k},{l}] = {found}, expected {expected}"),
            TruncationTooLarge { n, limit } => {
                write!(f, "truncation size {n} exceeds coefficient range {limit}")
            }
        }
    }
}

/// Result of [`validate_structure`]; valid iff `violations` is empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Relative tolerance for the daughter mass identities.
const MASS_IDENTITY_TOL: f64 = 1e-12;

fn mass_mismatch(found: f64, expected: f64) -> bool {
    !((found - expected).abs() <= MASS_IDENTITY_TOL * expected.abs().max(1.0))
}

/// Check the structural hypotheses on all coefficients up to size `n`.
pub fn validate_structure(k: &KernelSet, n: usize) -> ValidationReport {
    let mut v = Vec::new();
    let limit = k.size_limit();
    if n > limit {
        v.push(Violation::TruncationTooLarge { n, limit });
        return ValidationReport { violations: v };
    }

    for i in 1..=n {
        for j in i..=n {
            let a = k.coag.rate_unchecked(i, j);
            if a != k.coag.rate_unchecked(j, i) {
                v.push(Violation::CoagNotSymmetric { i, j });
            }
            if !(a >= 0.0) {
                v.push(Violation::CoagNegative { i, j });
            }
        }
    }

    if let Some(f) = &k.frag {
        if f.rate(1) != 0.0 {
            v.push(Violation::MonomerBreakup { rate: f.rate(1) });
        }
        for i in 2..=n {
            let b = f.rate(i);
            if !(b >= 0.0) {
                v.push(Violation::BreakupNegative { i });
            }
            let mut negative = false;
            for j in 1..i {
                if !(f.beta(i, j) >= 0.0) {
                    v.push(Violation::DaughterNegative { i, j });
                    negative = true;
                }
            }
            if b > 0.0 && !negative {
                let found = crate::sum::sum((1..i).map(|j| j as f64 * f.beta(i, j)));
                if mass_mismatch(found, i as f64) {
                    v.push(Violation::DaughterMass {
                        i,
                        expected: i as f64,
                        found,
                    });
                }
            }
        }
    }

    if let Some(q) = &k.collision {
        validate_collision(q, n, &mut v);
    }

    ValidationReport { violations: v }
}

fn validate_collision(q: &CollisionFragSpec, n: usize, v: &mut Vec<Violation>) {
    let b11 = q.rates.at(1, 1);
    if b11 != 0.0 {
        v.push(Violation::MonomerCollision { rate: b11 });
    }
    for k in 1..=n {
        for l in k..=n {
            let b = q.rates.at(k, l);
            if b != q.rates.at(l, k) {
                v.push(Violation::CollisionNotSymmetric { k, l });
            }
            if !(b >= 0.0) {
                v.push(Violation::CollisionNegative { k, l });
            }
        }
    }
    match &q.daughters {
        DaughterLaw::UniformInMass => {
            // β_{i,k,l} = (k+l)·w_m(i) with w_m depending on m = max−1 only,
            // so one row per m settles every pair.
            for top in 2..=n {
                let m = top - 1;
                let found = crate::sum::sum(
                    (1..=m)
                        .map(|i| i as f64 * (m + 1 - i) as f64 / collision::uniform_mass_norm(m)),
                );
                if mass_mismatch(found, 1.0) {
                    for k in 1..=top {
                        let l = top;
                        if q.rates.at(k, l) > 0.0 {
                            v.push(Violation::CollisionDaughterMass {
                                k,
                                l,
                                expected: (k + l) as f64,
                                found: found * (k + l) as f64,
                            });
                        }
                    }
                }
            }
        }
        DaughterLaw::Table(t) => {
            // Pairs are stored unordered, so symmetry in (k, l) holds by
            // construction; check the rest for every pair that collides.
            for k in 1..=n {
                for l in k..=n {
                    let row = t.row(k, l);
                    if let Some(row) = row {
                        for (i, &b) in row.iter().enumerate().skip(1) {
                            if !(b >= 0.0) {
                                v.push(Violation::CollisionDaughterNegative { i, k, l });
                            }
                        }
                    }
                    if q.rates.at(k, l) > 0.0 {
                        let found = row.map_or(0.0, |row| {
                            crate::sum::sum(row.iter().enumerate().map(|(i, b)| i as f64 * b))
                        });
                        let expected = (k + l) as f64;
                        if mass_mismatch(found, expected) {
                            v.push(Violation::CollisionDaughterMass {
                                k,
                                l,
                                expected,
                                found,
                            });
                        }
                    }
                }
            }
        }
    }
}

/// Samples of one growth ratio at the probe sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Trend {
    pub samples: Vec<f64>,
    /// Running supremum over all j up to each probe (not just the samples).
    pub running_sup: Vec<f64>,
    /// Samples nonincreasing and the last at most [`DECAY_FACTOR`] times
    /// the first (or all zero). A finite-horizon trend, not a limit.
    pub decays: bool,
}

/// Required drop of a ratio over the 16-fold probe span for the decay flag.
pub const DECAY_FACTOR: f64 = 0.75;

impl Trend {
    fn from_fn(probes: &[usize], mut f: impl FnMut(usize) -> f64) -> Self {
        let horizon = *probes.last().unwrap();
        let mut samples = Vec::with_capacity(probes.len());
        let mut running_sup = Vec::with_capacity(probes.len());
        let mut sup = 0.0f64;
        let mut next = 0;
        for j in 1..=horizon {
            let r = f(j);
            sup = sup.max(r);
            if j == probes[next] {
                samples.push(r);
                running_sup.push(sup);
                next += 1;
            }
        }
        let first = samples[0];
        let last = *samples.last().unwrap();
        let monotone = samples.windows(2).all(|w| w[1] <= w[0]);
        let decays = monotone && (first == 0.0 || last <= DECAY_FACTOR * first);
        Self {
            samples,
            running_sup,
            decays,
        }
    }
}

/// Finite-horizon view of the growth conditions for one fixed size `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    pub size: usize,
    /// Probe sizes j ∈ {J/16, J/8, J/4, J/2, J}.
    pub probes: Vec<usize>,
    /// a_{i,j} / j
    pub coag: Trend,
    /// B_{i+j} β_{i+j,i} / (i+j); coefficients beyond the stored
    /// fragmentation size count as zero, as in the truncated system.
    pub frag: Option<Trend>,
    /// b_{i,j} / j
    pub collision_rate: Option<Trend>,
    /// sup_{k ≤ J} b_{k,j} β_{i,k,j} / (k j)
    pub collision_daughter: Option<Trend>,
}

/// Sample the growth ratios of the coefficient set at size `i`.
pub fn sublinearity_trend(k: &KernelSet, i: usize, horizon: usize) -> Result<TrendReport> {
    if horizon < 16 {
        return Err(Error::range("probe horizon", horizon, 16, usize::MAX));
    }
    if i == 0 {
        return Err(Error::range("size", i, 1, usize::MAX));
    }
    let probes: Vec<usize> = [16, 8, 4, 2, 1].iter().map(|d| horizon / d).collect();
    let coag = Trend::from_fn(&probes, |j| k.coag.rate_unchecked(i, j) / j as f64);
    let frag = k.frag.as_ref().map(|f| {
        Trend::from_fn(&probes, |j| {
            let s = i + j;
            f.rate(s) * f.beta(s, i) / s as f64
        })
    });
    let collision_rate = k
        .collision
        .as_ref()
        .map(|q| Trend::from_fn(&probes, |j| q.rates.at(i, j) / j as f64));
    let collision_daughter = k.collision.as_ref().map(|q| {
        Trend::from_fn(&probes, |l| {
            (1..=horizon)
                .map(|kk| q.rates.at(kk, l) * q.daughters.at(i, kk, l) / (kk * l) as f64)
                .fold(0.0, f64::max)
        })
    });
    Ok(TrendReport {
        size: i,
        probes,
        coag,
        frag,
        collision_rate,
        collision_daughter,
    })
}

/// Maximum of a_{i,j} − (i+j)·θ̃(j/i) over 1 ≤ i ≤ j ≤ R.
///
/// The report's `measured` is that maximum excess and `bound` is zero, so
/// it passes iff the kernel is dominated on the probed range.
pub fn check_theta_domination(
    kernel: &CoagKernel,
    theta: &ThetaProfile,
    range: usize,
) -> Result<BoundReport> {
    if range == 0 || range > kernel.n_max() {
        return Err(Error::range("probe range", range, 1, kernel.n_max()));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut arg = (1, 1);
    for i in 1..=range {
        for j in i..=range {
            let excess =
                kernel.rate_unchecked(i, j) - (i + j) as f64 * theta.eval(j as f64 / i as f64);
            if excess > worst {
                worst = excess;
                arg = (i, j);
            }
        }
    }
    Ok(
        BoundReport::upper("a_ij <= (i+j) theta(j/i)", worst, 0.0).with_detail(format!(
            "worst pair (i, j) = ({}, {}), range {range}",
            arg.0, arg.1
        )),
    )
}
