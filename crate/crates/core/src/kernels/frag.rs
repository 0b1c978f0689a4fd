use crate::{Error, Result};

/// Total break-up rate B_i = c·i^γ for i ≥ 2; B_1 = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakupRate {
    pub c: f64,
    pub exponent: f64,
}

impl BreakupRate {
    pub fn constant(c: f64) -> Self {
        Self { c, exponent: 0.0 }
    }

    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        if i < 2 {
            0.0
        } else {
            self.c * (i as f64).powf(self.exponent)
        }
    }
}

/// Linear fragmentation coefficients up to size `n`: break-up rates B_i and
/// daughter distribution β_{i,j} (j < i).
///
/// Stored as given; [`super::validate_structure`] reports violations of the
/// structural hypotheses rather than rejecting them here.
#[derive(Debug, Clone, PartialEq)]
pub struct FragSpec {
    n: usize,
    /// `rates[i]` = B_i, index 0 unused.
    rates: Vec<f64>,
    /// `beta[i][j]` = β_{i,j} for `1 <= j < i`; `beta[i][0]` unused.
    beta: Vec<Vec<f64>>,
    label: &'static str,
}

impl FragSpec {
    /// No fragmentation.
    pub fn none(n: usize) -> Self {
        Self {
            n,
            rates: vec![0.0; n + 1],
            beta: (0..=n).map(|i| vec![0.0; i.max(1)]).collect(),
            label: "none",
        }
    }

    /// Binary uniform splitting: β_{i,j} = 2/(i−1), rescaled so that
    /// Σ_j j·β_{i,j} = i holds to rounding.
    pub fn binary_uniform(n: usize, rate: BreakupRate) -> Self {
        let mut spec = Self::none(n);
        spec.label = "binary-uniform";
        for i in 2..=n {
            spec.rates[i] = rate.at(i);
            let row = &mut spec.beta[i];
            let share = 2.0 / (i - 1) as f64;
            for b in row.iter_mut().skip(1) {
                *b = share;
            }
            renormalize(i, row);
        }
        spec
    }

    /// Erosion: a size-i cluster sheds one monomer, β_{i,1} = β_{i,i−1} = 1
    /// (so β_{2,1} = 2).
    pub fn erosion(n: usize, rate: BreakupRate) -> Self {
        let mut spec = Self::none(n);
        spec.label = "erosion";
        for i in 2..=n {
            spec.rates[i] = rate.at(i);
            spec.beta[i][1] += 1.0;
            spec.beta[i][i - 1] += 1.0;
        }
        spec
    }

    /// Raw coefficients. `rates` and `beta` are indexed by size, with
    /// `rates.len() == beta.len() == n + 1` and `beta[i].len() >= i` for i ≥ 1.
    pub fn from_parts(rates: Vec<f64>, mut beta: Vec<Vec<f64>>) -> Result<Self> {
        if rates.is_empty() || rates.len() != beta.len() {
            return Err(Error::Data(format!(
                "rates and beta must both have length n + 1 (got {} and {})",
                rates.len(),
                beta.len()
            )));
        }
        let n = rates.len() - 1;
        for (i, row) in beta.iter_mut().enumerate() {
            if row.len() > i.max(1) {
                if row[i.max(1)..].iter().any(|&b| b != 0.0) {
                    return Err(Error::Data(format!(
                        "beta[{i}] has daughters of size >= {i}"
                    )));
                }
                row.truncate(i.max(1));
            }
            row.resize(i.max(1), 0.0);
        }
        Ok(Self {
            n,
            rates,
            beta,
            label: "custom",
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &'static str {
        self.label
    }

    /// B_i; zero beyond the stored size.
    #[inline]
    pub fn rate(&self, i: usize) -> f64 {
        self.rates.get(i).copied().unwrap_or(0.0)
    }

    /// β_{i,j}; zero for j ≥ i or beyond the stored size.
    #[inline]
    pub fn beta(&self, i: usize, j: usize) -> f64 {
        if j == 0 || j >= i || i > self.n {
            0.0
        } else {
            self.beta[i][j]
        }
    }

    /// Daughter row `β_{i,·}` (index 0 unused).
    pub fn daughters(&self, i: usize) -> &[f64] {
        &self.beta[i]
    }

    pub fn is_zero(&self) -> bool {
        self.rates.iter().all(|&b| b == 0.0)
    }

    /// K_i = sup_{j ≥ 1, i+j ≤ n} B_{i+j} β_{i+j,i} / (i+j), the constant in
    /// the pointwise bound F_i^+ ≤ K_i ρ for the truncated system.
    pub fn gain_constant(&self, i: usize) -> f64 {
        (i + 1..=self.n)
            .map(|k| self.rate(k) * self.beta(k, i) / k as f64)
            .fold(0.0, f64::max)
    }
}

/// Scale `row[1..i]` so that Σ j·row[j] = i.
fn renormalize(i: usize, row: &mut [f64]) {
    let mass = crate::sum::sum(row.iter().enumerate().skip(1).map(|(j, b)| j as f64 * b));
    if mass > 0.0 {
        let scale = i as f64 / mass;
        for b in row.iter_mut().skip(1) {
            *b *= scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_conserve_daughter_mass() {
        for spec in [
            FragSpec::binary_uniform(50, BreakupRate::constant(1.0)),
            FragSpec::erosion(50, BreakupRate::constant(1.0)),
        ] {
            for i in 2..=50 {
                let mass: f64 = (1..i).map(|j| j as f64 * spec.beta(i, j)).sum();
                assert!(
                    (mass - i as f64).abs() <= 1e-12 * i as f64,
                    "{} i={i}",
                    spec.label()
                );
            }
            assert_eq!(spec.rate(1), 0.0);
        }
    }

    #[test]
    fn erosion_of_dimer_gives_two_monomers() {
        let spec = FragSpec::erosion(3, BreakupRate::constant(1.0));
        assert_eq!(spec.beta(2, 1), 2.0);
        assert_eq!(spec.beta(3, 1), 1.0);
        assert_eq!(spec.beta(3, 2), 1.0);
    }

    #[test]
    fn from_parts_rejects_oversized_daughters() {
        let rates = vec![0.0, 0.0, 1.0];
        let beta = vec![vec![], vec![0.0], vec![0.0, 2.0, 1.0]];
        assert!(FragSpec::from_parts(rates, beta).is_err());
    }

    #[test]
    fn gain_constant_for_binary_uniform() {
        // B_k β_{k,i}/k = 2/((k−1)k), largest at the smallest admissible k.
        let spec = FragSpec::binary_uniform(20, BreakupRate::constant(1.0));
        let k2 = spec.gain_constant(2);
        assert!((k2 - 2.0 / 6.0).abs() < 1e-15);
        assert_eq!(spec.gain_constant(20), 0.0);
    }
}
