use std::io::{BufRead, BufReader, Read};
use std::sync::Arc;

use crate::{Error, Result};

/// Largest size a kernel may be evaluated at unless configured otherwise.
/// Dense tables cost O(N²) memory.
pub const DEFAULT_N_MAX: usize = 4096;

/// Slowly increasing function used by the sublinear family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phi {
    /// φ(x) = log(1 + x)
    Log,
    /// φ(x) = log(1 + log(1 + x))
    IteratedLog,
}

impl Phi {
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Phi::Log => x.ln_1p(),
            Phi::IteratedLog => x.ln_1p().ln_1p(),
        }
    }
}

/// Dense symmetric matrix indexed by sizes `1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTable {
    n: usize,
    values: Arc<Vec<f64>>,
}

impl SymTable {
    /// Build from a closure; only `f(i, j)` with `i <= j` is called.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 1..=n {
            for j in i..=n {
                let v = f(i, j);
                values[(i - 1) * n + (j - 1)] = v;
                values[(j - 1) * n + (i - 1)] = v;
            }
        }
        Self {
            n,
            values: Arc::new(values),
        }
    }

    /// Build from `(i, j, value)` triples. Entries given in both orders must
    /// agree to `1e-12` (relative to `max(|v|, 1)`); missing entries are zero.
    pub fn from_triples(n: usize, triples: &[(usize, usize, f64)]) -> Result<Self> {
        let mut values = vec![f64::NAN; n * n];
        for &(i, j, v) in triples {
            if i == 0 || j == 0 || i > n || j > n {
                return Err(Error::range("table index", i.max(j), 1, n));
            }
            if !v.is_finite() {
                return Err(Error::Data(format!("non-finite table entry at ({i}, {j})")));
            }
            values[(i - 1) * n + (j - 1)] = v;
        }
        for i in 1..=n {
            for j in i..=n {
                let a = values[(i - 1) * n + (j - 1)];
                let b = values[(j - 1) * n + (i - 1)];
                let v = match (a.is_nan(), b.is_nan()) {
                    (true, true) => 0.0,
                    (false, true) => a,
                    (true, false) => b,
                    (false, false) => {
                        if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                            return Err(Error::Data(format!(
                                "table is not symmetric at ({i}, {j}): {a} vs {b}"
                            )));
                        }
                        0.5 * (a + b)
                    }
                };
                values[(i - 1) * n + (j - 1)] = v;
                values[(j - 1) * n + (i - 1)] = v;
            }
        }
        Ok(Self {
            n,
            values: Arc::new(values),
        })
    }

    /// Parse CSV rows `i,j,value`. A non-numeric first row is treated as a
    /// header; blank lines and `#` comments are skipped. The table size is
    /// the largest index seen.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut triples = Vec::new();
        for (lineno, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| Error::Data(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Data(format!(
                    "line {}: expected 3 fields `i,j,value`, found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let parsed = (
                fields[0].parse::<usize>(),
                fields[1].parse::<usize>(),
                fields[2].parse::<f64>(),
            );
            match parsed {
                (Ok(i), Ok(j), Ok(v)) => triples.push((i, j, v)),
                _ if triples.is_empty() && lineno == 0 => continue,
                _ => {
                    return Err(Error::Data(format!(
                        "line {}: cannot parse `{line}`",
                        lineno + 1
                    )))
                }
            }
        }
        let n = triples.iter().map(|&(i, j, _)| i.max(j)).max().unwrap_or(0);
        if n == 0 {
            return Err(Error::Data("table has no entries".into()));
        }
        Self::from_triples(n, &triples)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Entry at sizes `(i, j)`; zero outside the table.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == 0 || j == 0 || i > self.n || j > self.n {
            0.0
        } else {
            self.values[(i - 1) * self.n + (j - 1)]
        }
    }
}

/// Closed-form coagulation kernel families.
#[derive(Debug, Clone, PartialEq)]
pub enum CoagFamily {
    Constant {
        c: f64,
    },
    /// c·(i + j)
    Additive {
        c: f64,
    },
    /// c·i·j
    Multiplicative {
        c: f64,
    },
    /// c·(i^α j^β + i^β j^α)
    PowerSym {
        alpha: f64,
        beta: f64,
        c: f64,
    },
    /// c·(i/φ(i) + j/φ(j))
    SlowSublinear {
        phi: Phi,
        c: f64,
    },
    /// c·√(i j)
    SqrtProduct {
        c: f64,
    },
    Table(SymTable),
}

impl CoagFamily {
    pub fn name(&self) -> &'static str {
        match self {
            CoagFamily::Constant { .. } => "constant",
            CoagFamily::Additive { .. } => "additive",
            CoagFamily::Multiplicative { .. } => "multiplicative",
            CoagFamily::PowerSym { .. } => "power-sym",
            CoagFamily::SlowSublinear { .. } => "slow-sublinear",
            CoagFamily::SqrtProduct { .. } => "sqrt-product",
            CoagFamily::Table(_) => "table",
        }
    }
}

/// Coagulation rates a_{i,j} for sizes up to `n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoagKernel {
    family: CoagFamily,
    n_max: usize,
}

impl CoagKernel {
    pub fn new(family: CoagFamily) -> Result<Self> {
        Self::with_n_max(family, DEFAULT_N_MAX)
    }

    /// Table kernels are limited to their own size regardless of `n_max`.
    pub fn with_n_max(family: CoagFamily, n_max: usize) -> Result<Self> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "kernel parameter {name} must be finite and >= 0, got {v}"
                )))
            }
        };
        match &family {
            CoagFamily::Constant { c }
            | CoagFamily::Additive { c }
            | CoagFamily::Multiplicative { c }
            | CoagFamily::SlowSublinear { c, .. }
            | CoagFamily::SqrtProduct { c } => nonneg("c", *c)?,
            CoagFamily::PowerSym { alpha, beta, c } => {
                nonneg("alpha", *alpha)?;
                nonneg("beta", *beta)?;
                nonneg("c", *c)?;
            }
            CoagFamily::Table(_) => {}
        }
        if n_max == 0 {
            return Err(Error::Config("n_max must be >= 1".into()));
        }
        let n_max = match &family {
            CoagFamily::Table(t) => n_max.min(t.size()),
            _ => n_max,
        };
        Ok(Self { family, n_max })
    }

    pub fn constant(c: f64) -> Self {
        Self::new(CoagFamily::Constant { c }).expect("valid constant kernel")
    }

    pub fn additive(c: f64) -> Self {
        Self::new(CoagFamily::Additive { c }).expect("valid additive kernel")
    }

    pub fn multiplicative(c: f64) -> Self {
        Self::new(CoagFamily::Multiplicative { c }).expect("valid multiplicative kernel")
    }

    pub fn sqrt_product(c: f64) -> Self {
        Self::new(CoagFamily::SqrtProduct { c }).expect("valid sqrt-product kernel")
    }

    pub fn family(&self) -> &CoagFamily {
        &self.family
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// a_{i,j}, range-checked.
    pub fn rate(&self, i: usize, j: usize) -> Result<f64> {
        for v in [i, j] {
            if v == 0 || v > self.n_max {
                return Err(Error::range("size", v, 1, self.n_max));
            }
        }
        Ok(self.rate_unchecked(i, j))
    }

    /// a_{i,j} without the range check. Closed forms evaluate at any size;
    /// tables return zero outside their size.
    #[inline]
    pub fn rate_unchecked(&self, i: usize, j: usize) -> f64 {
        // Evaluating on the ordered pair makes symmetry exact in floating point.
        let (i, j) = (i.min(j), i.max(j));
        let (x, y) = (i as f64, j as f64);
        match &self.family {
            CoagFamily::Constant { c } => *c,
            CoagFamily::Additive { c } => c * (x + y),
            CoagFamily::Multiplicative { c } => c * x * y,
            CoagFamily::PowerSym { alpha, beta, c } => {
                c * (x.powf(*alpha) * y.powf(*beta) + x.powf(*beta) * y.powf(*alpha))
            }
            CoagFamily::SlowSublinear { phi, c } => c * (x / phi.eval(x) + y / phi.eval(y)),
            CoagFamily::SqrtProduct { c } => c * (x * y).sqrt(),
            CoagFamily::Table(t) => t.get(i, j),
        }
    }

    /// Dense `n×n` copy, row-major with zero-based indices (`[(i−1)·n + j−1]`).
    pub fn dense(&self, n: usize) -> Result<Vec<f64>> {
        if n > self.n_max {
            return Err(Error::range("truncation size", n, 1, self.n_max));
        }
        let mut out = vec![0.0; n * n];
        for i in 1..=n {
            for j in i..=n {
                let v = self.rate_unchecked(i, j);
                out[(i - 1) * n + (j - 1)] = v;
                out[(j - 1) * n + (i - 1)] = v;
            }
        }
        Ok(out)
    }
}
