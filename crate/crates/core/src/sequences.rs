//! Constructive weight sequences: ξ from (μ, ν), the superlinear weight ψ
//! built from a decay profile θ and a cap λ, and a dyadic-block λ making a
//! given summable sequence stay summable after weighting.
//!
//! Values are dense `f64` arrays indexed by size; index 0 is unused and
//! holds zero.

use std::io::{self, Write};

use crate::kernels::{CoagKernel, ThetaProfile};
use crate::report::BoundReport;
use crate::sum::{add_round_down, Neumaier};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceKind {
    Xi,
    Psi,
    Lambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceFlag {
    /// θ does not decay, so ψ is capped by a constant and cannot diverge.
    CannotDiverge,
    /// All-zero input to the λ construction; λ ≡ 1.
    Degenerate,
}

/// One dyadic block of the λ construction: λ = 2^m on `start..=end`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaBlock {
    pub m: u32,
    pub start: usize,
    pub end: usize,
    /// Σ_{block} λ_i r_i
    pub weighted: f64,
    /// 2^{−m} T_0
    pub bound: f64,
}

/// Certificate that Σ λ_i r_i stays finite on the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaCertificate {
    /// T_0 = Σ_{i ≤ n} r_i
    pub total: f64,
    pub blocks: Vec<LambdaBlock>,
    /// Σ_{i ≤ n} λ_i r_i
    pub weighted_total: f64,
    /// Σ over blocks of 2^{−m} T_0; at most 2·T_0.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    values: Vec<f64>,
    kind: SequenceKind,
    /// Construction inputs as (name, description) pairs.
    pub provenance: Vec<(String, String)>,
    pub flags: Vec<SequenceFlag>,
    pub certificate: Option<LambdaCertificate>,
}

impl WeightSequence {
    /// Wrap explicit values v_1..v_n (`values[0]` is v_1).
    pub fn from_values(kind: SequenceKind, values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::range("sequence length", 0, 1, usize::MAX));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Data(format!(
                "sequence entry {} is {}, expected finite and >= 0",
                i + 1,
                values[i]
            )));
        }
        if kind != SequenceKind::Xi {
            if let Some(i) = values.windows(2).position(|w| w[1] < w[0]) {
                return Err(Error::Data(format!(
                    "{kind:?} sequence must be nondecreasing; entry {} decreases",
                    i + 2
                )));
            }
        }
        let mut v = Vec::with_capacity(values.len() + 1);
        v.push(0.0);
        v.extend_from_slice(values);
        Ok(Self {
            values: v,
            kind,
            provenance: vec![("source".into(), "explicit values".into())],
            flags: Vec::new(),
            certificate: None,
        })
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    /// Largest index n.
    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Value at index `i` (1-based); panics beyond the horizon.
    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// All values with the unused slot 0 in front.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn has_flag(&self, flag: SequenceFlag) -> bool {
        self.flags.contains(&flag)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "index,value")?;
        for (i, v) in self.values.iter().enumerate().skip(1) {
            writeln!(w, "{i},{v:e}")?;
        }
        Ok(())
    }
}

/// ξ_i ∈ {0, μ_i}, taken whenever the partial sum stays under ν̃_i.
///
/// ν̃_i is the minimum of ν over [i, 2n − 1]. Partial sums
/// are rounded downward, so Σ_{j≤i} ξ_j ≤ ν̃_i holds for the stored sums
/// exactly, not just to rounding.
pub fn build_xi(
    mu: impl Fn(usize) -> f64,
    nu: impl Fn(usize) -> f64,
    n: usize,
) -> Result<WeightSequence> {
    let (xi, _) = xi_with_sums(&mu, &nu, n)?;
    Ok(WeightSequence {
        values: xi,
        kind: SequenceKind::Xi,
        provenance: vec![
            ("mu".into(), "caller-supplied".into()),
            (
                "nu".into(),
                format!("caller-supplied, minorant horizon {}", 2 * n - 1),
            ),
        ],
        flags: Vec::new(),
        certificate: None,
    })
}

fn xi_with_sums(
    mu: &impl Fn(usize) -> f64,
    nu: &impl Fn(usize) -> f64,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::range("sequence length", 0, 1, usize::MAX));
    }
    let nu_min = window_minorant(nu, n)?;
    let mut xi = vec![0.0; n + 1];
    let mut psi = vec![0.0; n + 1];
    let mut acc = 0.0;
    for i in 1..=n {
        let m = mu(i);
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::Data(format!(
                "mu_{i} = {m}, expected finite and > 0"
            )));
        }
        let next = add_round_down(acc, m);
        if next <= nu_min[i] {
            xi[i] = m;
            acc = next;
        }
        psi[i] = acc;
    }
    Ok((xi, psi))
}

/// min_{i ≤ j ≤ 2n−1} ν_j for i = 1..n: a suffix minimum over a fixed
/// horizon, so it is nondecreasing and looks at least n entries ahead.
fn window_minorant(nu: &impl Fn(usize) -> f64, n: usize) -> Result<Vec<f64>> {
    let last = 2 * n - 1;
    let mut out = vec![0.0; n + 1];
    let mut running = f64::INFINITY;
    for j in (1..=last).rev() {
        let v = nu(j);
        if !(v > 0.0) {
            return Err(Error::Data(format!("nu_{j} = {v}, expected > 0")));
        }
        running = running.min(v);
        if j <= n {
            out[j] = running;
        }
    }
    Ok(out)
}

/// μ_i = 1/((1+i) ln(1+i)), the increment cap of ψ.
#[inline]
pub fn psi_increment_cap(i: usize) -> f64 {
    let x = (1 + i) as f64;
    1.0 / (x * x.ln())
}

/// 1/θ̃(√(i/2)), the cap tying ψ to the kernel's decay profile.
#[inline]
pub fn psi_theta_cap(theta: &ThetaProfile, i: usize) -> f64 {
    1.0 / theta.eval((i as f64 / 2.0).sqrt())
}

/// ψ_i = Σ_{j≤i} ξ_j with μ_i = 1/((1+i) ln(1+i)) and
/// ν_i = min{λ_i, 1/θ̃(√(i/2))}.
///
/// λ is extended by its last value beyond its own length.
pub fn build_psi(
    theta: &ThetaProfile,
    lambda: &WeightSequence,
    n: usize,
) -> Result<WeightSequence> {
    if lambda.kind != SequenceKind::Lambda {
        return Err(Error::Data(format!(
            "build_psi needs a Lambda sequence, got {:?}",
            lambda.kind
        )));
    }
    let lam_len = lambda.len();
    let nu = |i: usize| lambda.get(i.min(lam_len)).min(psi_theta_cap(theta, i));
    let (_, psi) = xi_with_sums(&psi_increment_cap, &nu, n)?;
    let mut flags = Vec::new();
    if !theta.decays() {
        flags.push(SequenceFlag::CannotDiverge);
    }
    let mut provenance = vec![
        ("theta".into(), format!("{:?}", theta.shape())),
        ("mu".into(), "1/((1+i) ln(1+i))".into()),
    ];
    provenance.extend(
        lambda
            .provenance
            .iter()
            .map(|(k, v)| (format!("lambda.{k}"), v.clone())),
    );
    Ok(WeightSequence {
        values: psi,
        kind: SequenceKind::Psi,
        provenance,
        flags,
        certificate: None,
    })
}

/// λ_i = 2^{m(i)} where m(i) is the largest m with T_{i−1} ≤ 4^{−m} T_0 and
/// T_k = Σ_{k < j ≤ n} r_j.
///
/// Once the tail is exactly zero the block index stops growing, one step
/// above the last nonzero-tail block.
pub fn build_lambda(r: impl Fn(usize) -> f64, n: usize) -> Result<WeightSequence> {
    if n == 0 {
        return Err(Error::range("sequence length", 0, 1, usize::MAX));
    }
    let mut rs = vec![0.0; n + 1];
    for (i, slot) in rs.iter_mut().enumerate().skip(1) {
        let v = r(i);
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Data(format!(
                "r_{i} = {v}, expected finite and >= 0"
            )));
        }
        *slot = v;
    }
    // tails[k] = T_k
    let mut tails = vec![0.0; n + 1];
    let mut acc = Neumaier::new();
    for k in (0..n).rev() {
        acc.add(rs[k + 1]);
        tails[k] = acc.value();
    }
    let total = tails[0];
    let provenance = vec![("r".into(), format!("caller-supplied, horizon {n}"))];

    if total == 0.0 {
        let mut values = vec![1.0; n + 1];
        values[0] = 0.0;
        return Ok(WeightSequence {
            values,
            kind: SequenceKind::Lambda,
            provenance,
            flags: vec![SequenceFlag::Degenerate],
            certificate: Some(LambdaCertificate {
                total,
                blocks: vec![LambdaBlock {
                    m: 0,
                    start: 1,
                    end: n,
                    weighted: 0.0,
                    bound: 0.0,
                }],
                weighted_total: 0.0,
                bound: 0.0,
            }),
        });
    }

    let mut values = vec![0.0; n + 1];
    let mut m = 0u32;
    for i in 1..=n {
        let t = tails[i - 1];
        if t == 0.0 {
            // Zero tail from here on: one step up, then constant.
            if i == 1 || tails[i - 2] > 0.0 {
                m += 1;
            }
        } else {
            while t <= quarter_pow(m + 1) * total {
                m += 1;
            }
        }
        values[i] = pow2(m);
    }

    let mut blocks: Vec<LambdaBlock> = Vec::new();
    for i in 1..=n {
        let m = values[i].log2() as u32;
        match blocks.last_mut() {
            Some(b) if b.m == m => b.end = i,
            _ => blocks.push(LambdaBlock {
                m,
                start: i,
                end: i,
                weighted: 0.0,
                bound: total / pow2(m),
            }),
        }
    }
    let mut weighted_total = Neumaier::new();
    for b in &mut blocks {
        let s = crate::sum::sum((b.start..=b.end).map(|i| values[i] * rs[i]));
        b.weighted = s;
        weighted_total.add(s);
    }
    let bound = crate::sum::sum(blocks.iter().map(|b| b.bound));
    Ok(WeightSequence {
        values,
        kind: SequenceKind::Lambda,
        provenance,
        flags: Vec::new(),
        certificate: Some(LambdaCertificate {
            total,
            blocks,
            weighted_total: weighted_total.value(),
            bound,
        }),
    })
}

fn pow2(m: u32) -> f64 {
    2f64.powi(m as i32)
}

fn quarter_pow(m: u32) -> f64 {
    0.25f64.powi(m as i32)
}

/// Empirical constant of a_{i,j}(ψ_{i+j} − ψ_i) ≤ C j.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiConstant {
    /// C_emp over 1 ≤ i, j ≤ R.
    pub value: f64,
    /// C_emp over 1 ≤ i, j ≤ R/2.
    pub half_range_value: f64,
    pub argmax: (usize, usize),
    pub range: usize,
    /// Pass iff the value is finite and within 10% of the half-range value.
    pub report: BoundReport,
}

pub const PSI_STABILITY: f64 = 1.1;

pub fn empirical_psi_constant(
    kernel: &CoagKernel,
    psi: &WeightSequence,
    range: usize,
) -> Result<PsiConstant> {
    if range < 2 {
        return Err(Error::range("probe range", range, 2, usize::MAX));
    }
    if psi.len() < 2 * range {
        return Err(Error::range("psi length", psi.len(), 2 * range, usize::MAX));
    }
    if range > kernel.n_max() {
        return Err(Error::range("probe range", range, 2, kernel.n_max()));
    }
    let half = range / 2;
    let (mut best, mut best_half) = (0.0f64, 0.0f64);
    let mut argmax = (1, 1);
    for i in 1..=range {
        for j in 1..=range {
            let v = kernel.rate_unchecked(i, j) * (psi.get(i + j) - psi.get(i)) / j as f64;
            if v > best || v.is_nan() {
                best = v;
                argmax = (i, j);
            }
            if i <= half && j <= half && v > best_half {
                best_half = v;
            }
        }
    }
    let report = BoundReport::upper(
        "C_emp(R) <= 1.1 C_emp(R/2)",
        best,
        PSI_STABILITY * best_half,
    )
    .with_detail(format!(
        "C_emp({range}) = {best:.6e} at (i, j) = ({}, {}); C_emp({half}) = {best_half:.6e}",
        argmax.0, argmax.1
    ));
    Ok(PsiConstant {
        value: best,
        half_range_value: best_half,
        argmax,
        range,
        report,
    })
}

/// Piecewise check of ψ_{i+j} − ψ_i against the three regimes j ≤ i,
/// i < j ≤ i², and j > i², over all pairs with i ≤ j-range and i + j ≤ len.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCases {
    /// Pairs with j ≤ i where ψ_{i+j} − ψ_i > 2j/i.
    pub near_violations: usize,
    /// max over i < j ≤ i² of ψ_{i+j} − ψ_i.
    pub middle_max: f64,
    /// Pairs with j > i² where ψ_{i+j} > 1/θ̃(√j).
    pub far_violations: usize,
    pub pairs: usize,
}

pub fn pair_cases(psi: &WeightSequence, theta: &ThetaProfile, range: usize) -> PairCases {
    let len = psi.len();
    let mut out = PairCases {
        near_violations: 0,
        middle_max: 0.0,
        far_violations: 0,
        pairs: 0,
    };
    for i in 1..=range.min(len) {
        for j in 1..=range {
            if i + j > len {
                break;
            }
            out.pairs += 1;
            let inc = psi.get(i + j) - psi.get(i);
            if j <= i {
                if inc > 2.0 * j as f64 / i as f64 {
                    out.near_violations += 1;
                }
            } else if j <= i * i {
                out.middle_max = out.middle_max.max(inc);
            } else if psi.get(i + j) > 1.0 / theta.eval((j as f64).sqrt()) {
                out.far_violations += 1;
            }
        }
    }
    out
}
