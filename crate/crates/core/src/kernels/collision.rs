use std::collections::BTreeMap;

use super::coag::SymTable;
use crate::{Error, Result};

/// Largest size at which tabulated daughter laws may be used; their
/// evaluation is cubic in the truncation size.
pub const DAUGHTER_TABLE_MAX: usize = 256;

/// Collision rates b_{k,l}.
#[derive(Debug, Clone, PartialEq)]
pub enum CollisionRates {
    /// b_{k,l} = c except b_{1,1} = 0.
    Constant { c: f64 },
    /// b_{k,l} = c·√(k l) except b_{1,1} = 0.
    SqrtProduct { c: f64 },
    /// Arbitrary symmetric table; b_{1,1} is checked, not forced.
    Table(SymTable),
}

impl CollisionRates {
    #[inline]
    pub fn at(&self, k: usize, l: usize) -> f64 {
        match self {
            CollisionRates::Constant { c } => {
                if k == 1 && l == 1 {
                    0.0
                } else {
                    *c
                }
            }
            CollisionRates::SqrtProduct { c } => {
                if k == 1 && l == 1 {
                    0.0
                } else {
                    c * ((k * l) as f64).sqrt()
                }
            }
            CollisionRates::Table(t) => t.get(k, l),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CollisionRates::Constant { .. } => "constant",
            CollisionRates::SqrtProduct { .. } => "sqrt-product",
            CollisionRates::Table(_) => "table",
        }
    }
}

/// Daughter distribution β_{i,k,l}: mean number of size-i fragments from a
/// (k, l) collision, for i < max{k, l}.
#[derive(Debug, Clone, PartialEq)]
pub enum DaughterLaw {
    /// β_{i,k,l} ∝ (m + 1 − i) for i ≤ m = max{k,l} − 1, normalized so that
    /// Σ_i i·β_{i,k,l} = k + l.
    UniformInMass,
    Table(DaughterTable),
}

/// Sparse table of daughter rows keyed by the unordered pair (k, l).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DaughterTable {
    rows: BTreeMap<(usize, usize), Vec<f64>>,
}

impl DaughterTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Set β_{i,k,l} = β_{i,l,k} = value.
    pub fn set(&mut self, i: usize, k: usize, l: usize, value: f64) -> Result<()> {
        let m = k.max(l);
        if m > DAUGHTER_TABLE_MAX {
            return Err(Error::range("collision size", m, 1, DAUGHTER_TABLE_MAX));
        }
        if i == 0 || i >= m {
            return Err(Error::range("daughter size", i, 1, m.saturating_sub(1)));
        }
        let row = self
            .rows
            .entry((k.min(l), m))
            .or_insert_with(|| vec![0.0; m]);
        row[i] = value;
        Ok(())
    }

    /// Row for (k, l), indexed by daughter size (index 0 unused).
    pub fn row(&self, k: usize, l: usize) -> Option<&[f64]> {
        self.rows.get(&(k.min(l), k.max(l))).map(Vec::as_slice)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, &[f64])> {
        self.rows
            .iter()
            .map(|(&(k, l), row)| (k, l, row.as_slice()))
    }

    pub fn max_size(&self) -> usize {
        self.rows.keys().map(|&(_, l)| l).max().unwrap_or(0)
    }
}

/// Σ_{i=1}^{m} i·(m + 1 − i) = m(m+1)(m+2)/6, exact in integers.
#[inline]
pub(crate) fn uniform_mass_norm(m: usize) -> f64 {
    let m = m as u128;
    (m * (m + 1) * (m + 2) / 6) as f64
}

impl DaughterLaw {
    /// β_{i,k,l}.
    pub fn at(&self, i: usize, k: usize, l: usize) -> f64 {
        let top = k.max(l);
        if i == 0 || i >= top {
            return 0.0;
        }
        match self {
            DaughterLaw::UniformInMass => {
                let m = top - 1;
                (k + l) as f64 * (m + 1 - i) as f64 / uniform_mass_norm(m)
            }
            DaughterLaw::Table(t) => t.row(k, l).map_or(0.0, |row| row[i]),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DaughterLaw::UniformInMass => "uniform-in-mass",
            DaughterLaw::Table(_) => "table",
        }
    }
}

/// Collision-induced (quadratic) fragmentation coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionFragSpec {
    pub rates: CollisionRates,
    pub daughters: DaughterLaw,
}

impl CollisionFragSpec {
    pub fn new(rates: CollisionRates, daughters: DaughterLaw) -> Result<Self> {
        match &rates {
            CollisionRates::Constant { c } | CollisionRates::SqrtProduct { c } => {
                if !(c.is_finite() && *c >= 0.0) {
                    return Err(Error::Config(format!(
                        "collision rate constant must be finite and >= 0, got {c}"
                    )));
                }
            }
            CollisionRates::Table(_) => {}
        }
        Ok(Self { rates, daughters })
    }

    /// Largest truncation size the daughter law supports.
    pub fn size_limit(&self) -> usize {
        match &self.daughters {
            DaughterLaw::UniformInMass => usize::MAX,
            DaughterLaw::Table(_) => DAUGHTER_TABLE_MAX,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_in_mass_conserves_collision_mass() {
        let law = DaughterLaw::UniformInMass;
        for k in 1..40 {
            for l in 1..40 {
                if k.max(l) < 2 {
                    continue;
                }
                let mass: f64 = (1..k.max(l)).map(|i| i as f64 * law.at(i, k, l)).sum();
                let want = (k + l) as f64;
                assert!(
                    (mass - want).abs() <= 1e-13 * want,
                    "k={k} l={l} mass={mass}"
                );
                assert_eq!(law.at(3, k, l), law.at(3, l, k));
            }
        }
        // (1, 2): only monomers can be produced, three of them.
        assert_eq!(law.at(1, 1, 2), 3.0);
    }

    #[test]
    fn norm_matches_direct_sum() {
        for m in 1..200usize {
            let direct: usize = (1..=m).map(|i| i * (m + 1 - i)).sum();
            assert_eq!(uniform_mass_norm(m), direct as f64);
        }
    }

    #[test]
    fn table_is_symmetric_and_bounded() {
        let mut t = DaughterTable::new();
        t.set(1, 2, 2, 4.0).unwrap();
        t.set(1, 1, 2, 3.0).unwrap();
        let law = DaughterLaw::Table(t);
        assert_eq!(law.at(1, 2, 1), 3.0);
        assert_eq!(law.at(1, 2, 2), 4.0);
        assert_eq!(law.at(2, 2, 2), 0.0);

        let mut t = DaughterTable::new();
        assert!(t.set(2, 2, 2, 1.0).is_err());
        assert!(t.set(1, 1, DAUGHTER_TABLE_MAX + 1, 1.0).is_err());
    }

    #[test]
    fn builtin_rates_vanish_on_monomer_pair() {
        assert_eq!(CollisionRates::Constant { c: 2.0 }.at(1, 1), 0.0);
        assert_eq!(CollisionRates::Constant { c: 2.0 }.at(1, 2), 2.0);
        assert_eq!(CollisionRates::SqrtProduct { c: 1.0 }.at(1, 1), 0.0);
        assert_eq!(CollisionRates::SqrtProduct { c: 1.0 }.at(4, 9), 6.0);
    }
}
