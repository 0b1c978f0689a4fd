use super::coag::Phi;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ThetaShape {
    /// x^{−ε}
    Power { eps: f64 },
    /// φ(x)^{−1/2}
    InvSqrtPhi(Phi),
    /// Constant value; never decays.
    Constant(f64),
    /// Piecewise-linear through `(x, θ)` nodes with increasing `x`,
    /// constant outside the node range.
    Sampled { xs: Vec<f64>, ys: Vec<f64> },
}

/// Decay envelope θ used to dominate a coagulation kernel,
/// a_{i,j} ≤ (i + j)·θ(j/i) for j ≥ i.
///
/// Evaluation always goes through the nonincreasing envelope
/// θ̃(x) = sup_{y ≥ x} min(cap, scale·θ(y)).
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaProfile {
    shape: ThetaShape,
    scale: f64,
    cap: Option<f64>,
    /// Suffix maxima of the sampled nodes.
    envelope_nodes: Vec<f64>,
}

impl ThetaProfile {
    pub fn new(shape: ThetaShape) -> Result<Self> {
        let envelope_nodes = match &shape {
            ThetaShape::Power { eps } => {
                if !(eps.is_finite() && *eps >= 0.0) {
                    return Err(Error::Config(format!(
                        "theta exponent must be >= 0, got {eps}"
                    )));
                }
                Vec::new()
            }
            ThetaShape::InvSqrtPhi(_) => Vec::new(),
            ThetaShape::Constant(c) => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::Config(format!(
                        "constant theta must be > 0, got {c}"
                    )));
                }
                Vec::new()
            }
            ThetaShape::Sampled { xs, ys } => {
                if xs.is_empty() || xs.len() != ys.len() {
                    return Err(Error::Config(
                        "sampled theta needs equal, nonzero numbers of x and y nodes".into(),
                    ));
                }
                if xs.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::Config(
                        "sampled theta nodes must increase strictly".into(),
                    ));
                }
                if ys.iter().any(|&y| !(y.is_finite() && y > 0.0)) {
                    return Err(Error::Config("sampled theta values must be > 0".into()));
                }
                let mut env = ys.clone();
                for k in (0..env.len().saturating_sub(1)).rev() {
                    env[k] = env[k].max(env[k + 1]);
                }
                env
            }
        };
        Ok(Self {
            shape,
            scale: 1.0,
            cap: None,
            envelope_nodes,
        })
    }

    pub fn power(eps: f64) -> Result<Self> {
        Self::new(ThetaShape::Power { eps })
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Config(format!(
                "theta scale must be > 0, got {scale}"
            )));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn with_cap(mut self, cap: f64) -> Result<Self> {
        if !(cap.is_finite() && cap > 0.0) {
            return Err(Error::Config(format!("theta cap must be > 0, got {cap}")));
        }
        self.cap = Some(cap);
        Ok(self)
    }

    pub fn shape(&self) -> &ThetaShape {
        &self.shape
    }

    fn raw(&self, x: f64) -> f64 {
        match &self.shape {
            ThetaShape::Power { eps } => x.powf(-eps),
            ThetaShape::InvSqrtPhi(phi) => 1.0 / phi.eval(x).sqrt(),
            ThetaShape::Constant(c) => *c,
            ThetaShape::Sampled { .. } => unreachable!("sampled shape uses the node envelope"),
        }
    }

    /// θ̃(x), the nonincreasing envelope (x > 0).
    pub fn eval(&self, x: f64) -> f64 {
        let v = match &self.shape {
            // The closed forms are already nonincreasing.
            ThetaShape::Sampled { xs, ys } => sampled_envelope(xs, ys, &self.envelope_nodes, x),
            _ => self.raw(x),
        };
        let v = self.scale * v;
        match self.cap {
            Some(cap) => v.min(cap),
            None => v,
        }
    }

    /// C_θ = sup_{x ≥ 1} θ̃(x) = θ̃(1). Only arguments j/i ≥ 1 enter the
    /// domination condition.
    pub fn bound(&self) -> f64 {
        self.eval(1.0)
    }

    /// Checks the decay trend θ̃(2x) < θ̃(x) on x = 1, 2, 4, …; for sampled
    /// profiles only where 2x stays inside the node range.
    pub fn decays(&self) -> bool {
        let limit = match &self.shape {
            ThetaShape::Constant(_) => return false,
            ThetaShape::Sampled { xs, .. } => *xs.last().unwrap(),
            _ => 2f64.powi(40),
        };
        let mut x = 1.0;
        let mut probed = false;
        while 2.0 * x <= limit {
            if !(self.eval(2.0 * x) < self.eval(x)) {
                return false;
            }
            probed = true;
            x *= 2.0;
        }
        probed
    }
}

fn sampled_envelope(xs: &[f64], ys: &[f64], env: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    if x <= xs[0] {
        return env[0];
    }
    if x >= xs[last] {
        return ys[last];
    }
    // xs[k] < x < xs[k+1]
    let k = xs.partition_point(|&v| v <= x) - 1;
    let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
    let interp = ys[k] + w * (ys[k + 1] - ys[k]);
    interp.max(env[k + 1])
}
