use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform cell-centered grid on (0, L).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub length: f64,
    pub cells: usize,
}

impl Grid {
    pub fn new(length: f64, cells: usize) -> Result<Self> {
        let g = Self { length, cells };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells == 0 {
            return Err(Error::Config("grid needs at least one cell".into()));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::Config(format!(
                "domain length must be > 0, got {}",
                self.length
            )));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.length / self.cells as f64
    }

    pub fn center(&self, m: usize) -> f64 {
        (m as f64 + 0.5) * self.h()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.cells).map(|m| self.center(m))
    }
}

/// Diffusion constants d_1..d_N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DiffusionProfile {
    Constant {
        d: f64,
    },
    /// `odd` for odd sizes, `even` for even sizes.
    Alternating {
        odd: f64,
        even: f64,
    },
    /// Geometric interpolation from d_1 = `first` to d_N = `last`.
    Interpolated {
        first: f64,
        last: f64,
    },
    Table {
        values: Vec<f64>,
    },
}

impl DiffusionProfile {
    pub fn values(&self, n: usize) -> Result<Vec<f64>> {
        let d: Vec<f64> = match self {
            DiffusionProfile::Constant { d } => vec![*d; n],
            DiffusionProfile::Alternating { odd, even } => (1..=n)
                .map(|i| if i % 2 == 1 { *odd } else { *even })
                .collect(),
            DiffusionProfile::Interpolated { first, last } => (1..=n)
                .map(|i| {
                    if n == 1 {
                        *first
                    } else {
                        let w = (i - 1) as f64 / (n - 1) as f64;
                        first * (last / first).powf(w)
                    }
                })
                .collect(),
            DiffusionProfile::Table { values } => {
                if values.len() < n {
                    return Err(Error::Config(format!(
                        "diffusion table has {} entries, need {n}",
                        values.len()
                    )));
                }
                values[..n].to_vec()
            }
        };
        if let Some(i) = d.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config(format!(
                "diffusion constant d_{} = {} must be > 0",
                i + 1,
                d[i]
            )));
        }
        Ok(d)
    }
}

/// Initial concentrations c_i(x) = s_i · f(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub sizes: SizeProfile,
    #[serde(default)]
    pub space: SpaceProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SizeProfile {
    /// Only monomers: s_1 = mass.
    Monodisperse { mass: f64 },
    /// s_i ∝ exp(−i/mean), scaled so that Σ_{i≤N} i s_i = mass.
    Exponential { mass: f64, mean: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceProfile {
    #[default]
    Constant,
    /// base + height · exp(−(x − center)² / (2 width²))
    Bump {
        center: f64,
        width: f64,
        #[serde(default)]
        base: f64,
        #[serde(default = "one")]
        height: f64,
    },
    /// `left` for x < position, `right` otherwise.
    Step {
        position: f64,
        left: f64,
        right: f64,
    },
    /// 1 + amplitude · cos(mode · π x / L)
    Cosine { amplitude: f64, mode: u32 },
}

fn one() -> f64 {
    1.0
}

impl SizeProfile {
    pub fn values(&self, n: usize) -> Result<Vec<f64>> {
        match *self {
            SizeProfile::Monodisperse { mass } => {
                check_mass(mass)?;
                let mut s = vec![0.0; n];
                s[0] = mass;
                Ok(s)
            }
            SizeProfile::Exponential { mass, mean } => {
                check_mass(mass)?;
                if !(mean.is_finite() && mean > 0.0) {
                    return Err(Error::Config(format!(
                        "exponential mean must be > 0, got {mean}"
                    )));
                }
                let raw: Vec<f64> = (1..=n).map(|i| (-(i as f64) / mean).exp()).collect();
                let m = crate::sum::sum(raw.iter().enumerate().map(|(k, v)| (k + 1) as f64 * v));
                if !(m > 0.0) {
                    return Err(Error::Config(format!(
                        "exponential profile with mean {mean} underflows"
                    )));
                }
                Ok(raw.into_iter().map(|v| v * mass / m).collect())
            }
        }
    }
}

fn check_mass(mass: f64) -> Result<()> {
    if mass.is_finite() && mass >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "initial mass must be finite and >= 0, got {mass}"
        )))
    }
}

impl SpaceProfile {
    pub fn at(&self, x: f64, length: f64) -> f64 {
        match *self {
            SpaceProfile::Constant => 1.0,
            SpaceProfile::Bump {
                center,
                width,
                base,
                height,
            } => base + height * (-(x - center).powi(2) / (2.0 * width * width)).exp(),
            SpaceProfile::Step {
                position,
                left,
                right,
            } => {
                if x < position {
                    left
                } else {
                    right
                }
            }
            SpaceProfile::Cosine { amplitude, mode } => {
                1.0 + amplitude * (mode as f64 * std::f64::consts::PI * x / length).cos()
            }
        }
    }
}

impl InitialData {
    pub fn monodisperse(mass: f64) -> Self {
        Self {
            sizes: SizeProfile::Monodisperse { mass },
            space: SpaceProfile::Constant,
        }
    }

    /// Species-major N×M array of point values at the cell centers.
    pub fn sample(&self, n: usize, grid: &Grid) -> Result<Vec<f64>> {
        let s = self.sizes.values(n)?;
        let f: Vec<f64> = grid
            .centers()
            .map(|x| self.space.at(x, grid.length))
            .collect();
        if let Some(m) = f.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(format!(
                "spatial profile is {} at x = {}, expected >= 0",
                f[m],
                grid.center(m)
            )));
        }
        let mut c = Vec::with_capacity(n * grid.cells);
        for si in &s {
            c.extend(f.iter().map(|fm| si * fm));
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_profile_has_requested_mass() {
        let s = SizeProfile::Exponential {
            mass: 2.5,
            mean: 4.0,
        }
        .values(64)
        .unwrap();
        let m: f64 = s.iter().enumerate().map(|(k, v)| (k + 1) as f64 * v).sum();
        assert!((m - 2.5).abs() < 1e-14);
        assert!(s.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn diffusion_profiles() {
        let d = DiffusionProfile::Alternating {
            odd: 0.5,
            even: 2.0,
        }
        .values(4)
        .unwrap();
        assert_eq!(d, vec![0.5, 2.0, 0.5, 2.0]);
        let d = DiffusionProfile::Interpolated {
            first: 0.5,
            last: 2.0,
        }
        .values(3)
        .unwrap();
        assert!((d[1] - 1.0).abs() < 1e-15 && (d[2] - 2.0).abs() < 1e-15);
        assert!(DiffusionProfile::Constant { d: 0.0 }.values(2).is_err());
    }

    #[test]
    fn sampling_is_species_major() {
        let g = Grid::new(1.0, 4).unwrap();
        let init = InitialData {
            sizes: SizeProfile::Monodisperse { mass: 2.0 },
            space: SpaceProfile::Step {
                position: 0.5,
                left: 1.0,
                right: 0.0,
            },
        };
        let c = init.sample(2, &g).unwrap();
        assert_eq!(c, vec![2.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }
}
