//! Reaction right-hand sides on a truncated size range.
//!
//! Size arrays in this module are 0-based slices: `c[i - 1]` holds c_i.
//! Every rate is returned split into its gain and loss parts so that the
//! individual terms can be integrated and bounded separately.

use crate::kernels::{CoagKernel, CollisionFragSpec, DaughterLaw, FragSpec, KernelSet};
use crate::sum::{self, Neumaier};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationMode {
    /// Pairs with i + j > N neither form nor consume clusters.
    #[default]
    Conservative,
    /// Loss kept for every j ≤ N; clusters beyond N are discarded, so mass
    /// leaks out of the system.
    NonConservative,
}

/// Concentrations c_1..c_N of one spatial cell.
#[derive(Debug, Clone, Copy)]
pub struct CellState<'a> {
    c: &'a [f64],
}

impl<'a> CellState<'a> {
    pub fn new(c: &'a [f64]) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::range("truncation size", 0, 1, usize::MAX));
        }
        if let Some(i) = c.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Data(format!(
                "c_{} = {}, expected >= 0",
                i + 1,
                c[i]
            )));
        }
        Ok(Self { c })
    }

    pub fn size(&self) -> usize {
        self.c.len()
    }

    pub fn concentrations(&self) -> &'a [f64] {
        self.c
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GainLoss {
    pub gain: Vec<f64>,
    pub loss: Vec<f64>,
}

impl GainLoss {
    fn zeros(n: usize) -> Self {
        Self {
            gain: vec![0.0; n],
            loss: vec![0.0; n],
        }
    }

    pub fn net(&self) -> Vec<f64> {
        self.gain
            .iter()
            .zip(&self.loss)
            .map(|(g, l)| g - l)
            .collect()
    }
}

/// All reaction terms at one state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TermRates {
    pub coag: GainLoss,
    pub frag: GainLoss,
    pub collision: GainLoss,
    /// Mass leaving the truncated range per unit time (non-conservative
    /// coagulation only): Σ_i i c_i Σ_{j > N−i} a_{i,j} c_j.
    pub leak: f64,
}

impl TermRates {
    pub fn zeros(n: usize) -> Self {
        Self {
            coag: GainLoss::zeros(n),
            frag: GainLoss::zeros(n),
            collision: GainLoss::zeros(n),
            leak: 0.0,
        }
    }

    pub fn size(&self) -> usize {
        self.coag.gain.len()
    }

    /// Total rate dc_i/dt for every size.
    pub fn net_into(&self, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (self.coag.gain[i] + self.frag.gain[i] + self.collision.gain[i])
                - (self.coag.loss[i] + self.frag.loss[i] + self.collision.loss[i]);
        }
    }

    pub fn net(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.size()];
        self.net_into(&mut out);
        out
    }
}

/// Precomputed coefficient tables for a fixed truncation size.
#[derive(Debug, Clone)]
pub struct ReactionModel {
    n: usize,
    mode: TruncationMode,
    /// a[(i−1)·n + (j−1)] = a_{i,j}
    a: Vec<f64>,
    coag_active: bool,
    frag: Option<LinearFrag>,
    collision: Option<Collision>,
}

#[derive(Debug, Clone)]
struct LinearFrag {
    /// rates[i−1] = B_i
    rates: Vec<f64>,
    /// weights[k−1][i−1] = B_k β_{k,i} for i < k
    weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
struct Collision {
    /// Dense b_{k,l}, same layout as `a`.
    b: Vec<f64>,
    law: Daughters,
}

#[derive(Debug, Clone)]
enum Daughters {
    /// inv_norm[t−1] = 1/S_{t−1} for the top size t = max{k, l} ≥ 2.
    Uniform { inv_norm: Vec<f64> },
    /// (k, l, row) with k ≤ l ≤ N; row indexed by daughter size.
    Table(Vec<(usize, usize, Vec<f64>)>),
}

impl ReactionModel {
    pub fn new(kernels: &KernelSet, n: usize, mode: TruncationMode) -> Result<Self> {
        if n == 0 || n > kernels.size_limit() {
            return Err(Error::range("truncation size", n, 1, kernels.size_limit()));
        }
        let a = kernels.coag.dense(n)?;
        let coag_active = a.iter().any(|&v| v != 0.0);
        let frag = kernels
            .frag
            .as_ref()
            .filter(|f| !f.is_zero())
            .map(|f| linear_frag(f, n));
        let collision = kernels.collision.as_ref().map(|q| collision(q, n));
        Ok(Self {
            n,
            mode,
            a,
            coag_active,
            frag,
            collision,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> TruncationMode {
        self.mode
    }

    #[inline]
    pub fn coag_rate(&self, i: usize, j: usize) -> f64 {
        self.a[(i - 1) * self.n + (j - 1)]
    }

    /// Fill every term of `out` at concentrations `c` (length N). No sign
    /// check: intermediate integrator stages may dip below zero.
    pub fn rates_into(&self, c: &[f64], out: &mut TermRates) {
        debug_assert_eq!(c.len(), self.n);
        self.coag_into(c, &mut out.coag, &mut out.leak);
        match &self.frag {
            Some(f) => frag_into(f, c, &mut out.frag),
            None => clear(&mut out.frag),
        }
        match &self.collision {
            Some(q) => self.collision_into(q, c, &mut out.collision),
            None => clear(&mut out.collision),
        }
    }

    pub fn rates(&self, c: &[f64]) -> TermRates {
        let mut out = TermRates::zeros(self.n);
        self.rates_into(c, &mut out);
        out
    }

    fn coag_into(&self, c: &[f64], out: &mut GainLoss, leak: &mut f64) {
        let n = self.n;
        *leak = 0.0;
        if !self.coag_active {
            out.gain.fill(0.0);
            out.loss.fill(0.0);
            return;
        }
        for i in 1..=n {
            // ½ Σ_{j<i} a_{i−j,j} c_{i−j} c_j, folding the symmetric halves.
            let mut g = Neumaier::new();
            for j in 1..=(i - 1) / 2 {
                g.add(self.coag_rate(i - j, j) * c[i - j - 1] * c[j - 1]);
            }
            if i % 2 == 0 {
                let h = i / 2;
                g.add(0.5 * self.coag_rate(h, h) * c[h - 1] * c[h - 1]);
            }
            out.gain[i - 1] = g.value();

            let row = &self.a[(i - 1) * n..i * n];
            let kept = match self.mode {
                TruncationMode::Conservative => n - i,
                TruncationMode::NonConservative => n,
            };
            out.loss[i - 1] = c[i - 1] * sum::dot(&row[..kept], &c[..kept]);
        }
        if self.mode == TruncationMode::NonConservative {
            let mut l = Neumaier::new();
            for i in 1..=n {
                if c[i - 1] == 0.0 {
                    continue;
                }
                let row = &self.a[(i - 1) * n..i * n];
                let tail = sum::dot(&row[n - i..], &c[n - i..]);
                l.add(i as f64 * c[i - 1] * tail);
            }
            *leak = l.value();
        }
    }

    fn collision_into(&self, q: &Collision, c: &[f64], out: &mut GainLoss) {
        let n = self.n;
        for i in 1..=n {
            let row = &q.b[(i - 1) * n..i * n];
            out.loss[i - 1] = c[i - 1] * sum::dot(row, c);
        }
        match &q.law {
            Daughters::Uniform { inv_norm } => {
                // weight[t] = ½ Σ_{max(k,l) = t} b c_k c_l (k+l) / S_{t−1}, so that
                // gain_i = Σ_{t > i} weight[t] (t − i). Run it as
                // G_i = G_{i+1} + Σ_{t > i} weight[t]: only additions.
                let mut weight = vec![0.0; n + 1];
                for t in 2..=n {
                    let ct = c[t - 1];
                    if ct == 0.0 {
                        continue;
                    }
                    let row = &q.b[(t - 1) * n..t * n];
                    let mut s = Neumaier::new();
                    s.add(row[t - 1] * ct * ct * t as f64);
                    for k in 1..t {
                        s.add(row[k - 1] * c[k - 1] * ct * (k + t) as f64);
                    }
                    weight[t] = s.value() * inv_norm[t - 1];
                }
                let mut suffix = Neumaier::new();
                let mut g = Neumaier::new();
                out.gain[n - 1] = 0.0;
                for i in (1..n).rev() {
                    suffix.add(weight[i + 1]);
                    g.add(suffix.value());
                    out.gain[i - 1] = g.value();
                }
            }
            Daughters::Table(pairs) => {
                out.gain.fill(0.0);
                let mut acc = vec![Neumaier::new(); n];
                for (k, l, row) in pairs {
                    let mut w = q.b[(k - 1) * n + (l - 1)] * c[k - 1] * c[l - 1];
                    if k == l {
                        w *= 0.5;
                    }
                    if w == 0.0 {
                        continue;
                    }
                    for (i, beta) in row.iter().enumerate().skip(1) {
                        if *beta != 0.0 {
                            acc[i - 1].add(w * beta);
                        }
                    }
                }
                for (g, a) in out.gain.iter_mut().zip(acc) {
                    *g = a.value();
                }
            }
        }
    }
}

fn clear(gl: &mut GainLoss) {
    gl.gain.fill(0.0);
    gl.loss.fill(0.0);
}

fn linear_frag(f: &FragSpec, n: usize) -> LinearFrag {
    let rates = (1..=n).map(|i| f.rate(i)).collect();
    let weights = (1..=n)
        .map(|k| (1..k).map(|i| f.rate(k) * f.beta(k, i)).collect())
        .collect();
    LinearFrag { rates, weights }
}

fn frag_into(f: &LinearFrag, c: &[f64], out: &mut GainLoss) {
    let n = c.len();
    let mut acc = vec![Neumaier::new(); n];
    for k in 2..=n {
        let ck = c[k - 1];
        if ck == 0.0 {
            continue;
        }
        for (i, w) in f.weights[k - 1].iter().enumerate() {
            acc[i].add(w * ck);
        }
    }
    for i in 0..n {
        out.gain[i] = acc[i].value();
        out.loss[i] = f.rates[i] * c[i];
    }
}

fn collision(q: &CollisionFragSpec, n: usize) -> Collision {
    let mut b = vec![0.0; n * n];
    for k in 1..=n {
        for l in 1..=n {
            b[(k - 1) * n + (l - 1)] = q.rates.at(k, l);
        }
    }
    let law = match &q.daughters {
        DaughterLaw::UniformInMass => Daughters::Uniform {
            inv_norm: (1..=n)
                .map(|t| {
                    if t < 2 {
                        0.0
                    } else {
                        1.0 / crate::kernels::uniform_mass_norm(t - 1)
                    }
                })
                .collect(),
        },
        DaughterLaw::Table(t) => Daughters::Table(
            t.pairs()
                .filter(|&(_, l, _)| l <= n)
                .map(|(k, l, row)| (k, l, row.to_vec()))
                .collect(),
        ),
    };
    Collision { b, law }
}

/// Coagulation terms Q_i^± of the truncated system.
pub fn eval_coag(
    cell: CellState<'_>,
    kernel: &CoagKernel,
    mode: TruncationMode,
) -> Result<GainLoss> {
    let model = ReactionModel::new(
        &KernelSet::coagulation_only(kernel.clone()),
        cell.size(),
        mode,
    )?;
    Ok(model.rates(cell.c).coag)
}

/// Linear fragmentation terms F_i^±.
pub fn eval_frag(cell: CellState<'_>, frag: &FragSpec) -> Result<GainLoss> {
    let n = cell.size();
    if n > frag.size() {
        return Err(Error::range("truncation size", n, 1, frag.size()));
    }
    let mut out = GainLoss::zeros(n);
    frag_into(&linear_frag(frag, n), cell.c, &mut out);
    Ok(out)
}

/// Coagulation plus collision-induced fragmentation. The returned
/// [`TermRates`] has the coagulation and collision parts filled and the
/// linear fragmentation part zero.
pub fn eval_collision_frag(
    cell: CellState<'_>,
    kernel: &CoagKernel,
    q: &CollisionFragSpec,
    mode: TruncationMode,
) -> Result<TermRates> {
    let ks = KernelSet::with_collision(kernel.clone(), q.clone());
    let model = ReactionModel::new(&ks, cell.size(), mode)?;
    Ok(model.rates(cell.c))
}

/// Σ_i i·rate_i for a 0-based rate slice.
pub fn mass_flux(rates: &[f64]) -> f64 {
    sum::sum(rates.iter().enumerate().map(|(i, r)| (i + 1) as f64 * r))
}

/// Σ φ_i·(dc_i/dt) computed two ways: directly from the conservative rates,
/// and from the weak form of each operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakFormPair {
    pub direct: f64,
    pub weak: f64,
}

impl WeakFormPair {
    pub fn agrees(&self) -> bool {
        (self.direct - self.weak).abs() <= 1e-12 * (self.direct.abs() + self.weak.abs() + 1.0)
    }
}

pub fn weak_form_pair(
    cell: CellState<'_>,
    kernels: &KernelSet,
    phi: &[f64],
) -> Result<WeakFormPair> {
    let n = cell.size();
    if phi.len() < n {
        return Err(Error::range("weight length", phi.len(), n, usize::MAX));
    }
    let c = cell.c;
    let model = ReactionModel::new(kernels, n, TruncationMode::Conservative)?;
    let direct = sum::dot(&model.rates(c).net(), &phi[..n]);

    let mut weak = Neumaier::new();
    for i in 1..=n {
        for j in 1..=n - i {
            let a = kernels.coag.rate_unchecked(i, j);
            weak.add(0.5 * a * c[i - 1] * c[j - 1] * (phi[i + j - 1] - phi[i - 1] - phi[j - 1]));
        }
    }
    if let Some(f) = &kernels.frag {
        for i in 2..=n {
            let daughters = sum::sum((1..i).map(|j| f.beta(i, j) * phi[j - 1]));
            weak.add(-f.rate(i) * c[i - 1] * (phi[i - 1] - daughters));
        }
    }
    if let Some(q) = &kernels.collision {
        for k in 1..=n {
            for l in 1..=n {
                let b = q.rates.at(k, l);
                if b == 0.0 {
                    continue;
                }
                let daughters =
                    sum::sum((1..k.max(l)).map(|i| q.daughters.at(i, k, l) * phi[i - 1]));
                weak.add(0.5 * b * c[k - 1] * c[l - 1] * (daughters - phi[k - 1] - phi[l - 1]));
            }
        }
    }
    Ok(WeakFormPair {
        direct,
        weak: weak.value(),
    })
}

/// Σ_{j<i} a_{i−j,j}: the constant in Q_i^+ ≤ ½ (Σ_{j<i} a_{i−j,j}) ρ².
pub fn coag_gain_constant(kernel: &CoagKernel, i: usize) -> f64 {
    sum::sum((1..i).map(|j| kernel.rate_unchecked(i - j, j)))
}
