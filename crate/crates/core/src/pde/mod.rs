//! Finite-volume time integration of the truncated system on (0, L) with
//! no-flux boundaries.
//!
//! Each step is a Strang splitting: half a diffusion step, a full reaction
//! step integrated cell by cell with RK4, half a diffusion step. The state
//! is species-major, `c[(i − 1)·M + m]` = c_i at cell m.

mod diffusion;
mod grid;

use std::io::{self, Write};

pub use diffusion::{DiffusionOp, DiffusionScheme};
pub use grid::{DiffusionProfile, Grid, InitialData, SizeProfile, SpaceProfile};

use crate::kernels::KernelSet;
use crate::rhs::{ReactionModel, TermRates, TruncationMode};
use crate::sum::Neumaier;
use crate::{Error, Result};

/// Version tags of the numerical schemes, echoed into run manifests.
pub const SCHEME_VERSION: &str = "strang-rk4-halving/1";
pub const DIFFUSION_VERSION: &str = "fv3-neumann-thomas/1";

/// Relative depth below zero the reaction step tolerates before halving.
pub const POSITIVITY_TOL: f64 = 1e-14;
pub const DEFAULT_MAX_HALVINGS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    LinearFrag,
    CollisionFrag,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Truncation size N.
    pub n: usize,
    pub grid: Grid,
    pub dt: f64,
    pub t_final: f64,
    pub kernels: KernelSet,
    pub diffusion: DiffusionProfile,
    pub mode: TruncationMode,
    pub initial: InitialData,
    /// Record a sample every this many steps (the last step is always sampled).
    pub sample_every: usize,
    pub scheme: DiffusionScheme,
    /// Sizes whose reaction terms are integrated in space-time.
    pub tracked_sizes: Vec<usize>,
    /// Keep the full state in every sample, not only the first and last.
    pub store_snapshots: bool,
    pub max_halvings: u32,
}

impl SimConfig {
    /// Defaults: one cell on (0, 1), d ≡ 1, monodisperse unit mass,
    /// conservative truncation, implicit Euler, every step sampled.
    pub fn new(n: usize, kernels: KernelSet, dt: f64, t_final: f64) -> Self {
        Self {
            n,
            grid: Grid {
                length: 1.0,
                cells: 1,
            },
            dt,
            t_final,
            kernels,
            diffusion: DiffusionProfile::Constant { d: 1.0 },
            mode: TruncationMode::Conservative,
            initial: InitialData::monodisperse(1.0),
            sample_every: 1,
            scheme: DiffusionScheme::ImplicitEuler,
            tracked_sizes: Vec::new(),
            store_snapshots: false,
            max_halvings: DEFAULT_MAX_HALVINGS,
        }
    }

    pub fn model(&self) -> ModelKind {
        if self.kernels.collision.is_some() {
            ModelKind::CollisionFrag
        } else {
            ModelKind::LinearFrag
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.n == 0 || self.n > self.kernels.size_limit() {
            return Err(Error::Config(format!(
                "truncation size N = {} outside 1..={}",
                self.n,
                self.kernels.size_limit()
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return Err(Error::Config(format!(
                "t_final = {} must be >= dt = {}",
                self.t_final, self.dt
            )));
        }
        if self.sample_every == 0 {
            return Err(Error::Config("sample stride must be >= 1".into()));
        }
        if let Some(&i) = self.tracked_sizes.iter().find(|&&i| i == 0 || i > self.n) {
            return Err(Error::Config(format!(
                "tracked size {i} outside 1..={}",
                self.n
            )));
        }
        self.diffusion.values(self.n)?;
        self.initial.sample(self.n, &self.grid)?;
        Ok(())
    }

    /// Number of steps and the step size actually used: t_final is split
    /// into equal steps no longer than dt.
    pub fn steps(&self) -> (usize, f64) {
        let steps = ((self.t_final / self.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (steps, self.t_final / steps as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub n: usize,
    pub cells: usize,
    /// Species-major concentrations.
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub t: f64,
}

impl SimState {
    pub fn species(&self, i: usize) -> &[f64] {
        &self.c[(i - 1) * self.cells..i * self.cells]
    }

    /// ρ(x_m) = Σ_i i c_i(x_m) for every cell.
    pub fn rho(&self) -> Vec<f64> {
        (0..self.cells)
            .map(|m| {
                crate::sum::sum((1..=self.n).map(|i| i as f64 * self.c[(i - 1) * self.cells + m]))
            })
            .collect()
    }
}

/// ∫_Ω Σ_i w_i c_i for a 0-based weight slice (`w[i − 1]` = w_i).
pub fn weighted_integral(c: &[f64], cells: usize, h: f64, w: &[f64]) -> f64 {
    let mut acc = Neumaier::new();
    for (i, wi) in w.iter().enumerate() {
        if *wi == 0.0 {
            continue;
        }
        let row = &c[i * cells..(i + 1) * cells];
        acc.add(wi * crate::sum::sum(row.iter().copied()));
    }
    h * acc.value()
}

/// Space-time integrals of the reaction terms of one tracked size.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct TermIntegrals {
    pub size: usize,
    pub coag_gain: f64,
    pub coag_loss: f64,
    pub frag_gain: f64,
    pub frag_loss: f64,
    pub collision_gain: f64,
    pub collision_loss: f64,
    /// ∫_Ω c_i at the sample time.
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    /// ∫_Ω ρ
    pub mass: f64,
    /// ∫_Ω Σ_i i^k c_i for k = 0, 1, 2.
    pub moments: [f64; 3],
    /// ‖ρ(t, ·)‖ in L²(Ω).
    pub rho_l2: f64,
    /// ∫_0^t ‖ρ‖² (trapezoid over every step).
    pub rho_sq_integral: f64,
    /// ∫_0^t ∫_Ω ρ (trapezoid over every step).
    pub rho_integral: f64,
    /// Mass added by clipping negative values, cumulative.
    pub clip_mass: f64,
    /// Mass that left the truncated range, cumulative.
    pub leaked: f64,
    pub terms: Vec<TermIntegrals>,
    pub state: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n: usize,
    pub grid: Grid,
    /// Step size actually used.
    pub dt: f64,
    pub d: Vec<f64>,
    pub tracked_sizes: Vec<usize>,
    pub samples: Vec<Sample>,
    /// Largest number of reaction-step halvings any cell needed.
    pub max_halvings_used: u32,
    pub steps_taken: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().unwrap()
    }

    pub fn initial_state(&self) -> &[f64] {
        self.first()
            .state
            .as_deref()
            .expect("initial state is always stored")
    }

    pub fn final_state(&self) -> Option<&[f64]> {
        self.last().state.as_deref()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "t,mass,moment0,moment1,moment2,rho_l2,rho_sq_integral,clip_mass,leaked"
        )?;
        for s in &self.samples {
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                s.t,
                s.mass,
                s.moments[0],
                s.moments[1],
                s.moments[2],
                s.rho_l2,
                s.rho_sq_integral,
                s.clip_mass,
                s.leaked
            )?;
        }
        Ok(())
    }
}

/// A failed run with every sample recorded before the failure.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{error}")]
pub struct RunFailure {
    pub error: Error,
    pub partial: Option<Box<Trajectory>>,
}

/// One diffusion step of length `dt` applied to a copy of `state`.
pub fn diffusion_step(
    state: &SimState,
    grid: &Grid,
    scheme: DiffusionScheme,
    dt: f64,
) -> Result<SimState> {
    let mut op = DiffusionOp::new(&state.d, grid, scheme, dt)?;
    let mut next = state.clone();
    op.apply(&mut next.c);
    next.t += dt;
    Ok(next)
}

struct Work {
    cell: Vec<f64>,
    y: Vec<f64>,
    stage: Vec<f64>,
    incr: Vec<f64>,
    k: Vec<f64>,
    rates: TermRates,
    /// Per tracked size: six term integrals for the current cell.
    local_terms: Vec<[f64; 6]>,
    local_leak: f64,
}

/// Stateful stepper; [`run`] drives it to the final time.
pub struct Simulation {
    grid: Grid,
    model: ReactionModel,
    reaction_active: bool,
    half: DiffusionOp,
    state: SimState,
    dt: f64,
    steps: usize,
    step_index: usize,
    sample_every: usize,
    store_snapshots: bool,
    max_halvings: u32,
    tracked: Vec<usize>,
    work: Work,
    terms: Vec<TermIntegrals>,
    leaked: f64,
    clip_mass: f64,
    rho_sq_integral: f64,
    rho_integral: f64,
    last_rho_sq: f64,
    last_mass: f64,
    traj: Trajectory,
}

const WEIGHTS: [f64; 4] = [1.0, 2.0, 2.0, 1.0];

impl Simulation {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.n;
        let d = cfg.diffusion.values(n)?;
        let (steps, dt) = cfg.steps();
        let model = ReactionModel::new(&cfg.kernels, n, cfg.mode)?;
        let reaction_active = {
            let probe: Vec<f64> = (1..=n).map(|i| 1.0 / i as f64).collect();
            let r = model.rates(&probe);
            r.net().iter().any(|&v| v != 0.0)
                || r.coag
                    .loss
                    .iter()
                    .chain(&r.frag.loss)
                    .chain(&r.collision.loss)
                    .any(|&v| v != 0.0)
        };
        let half = DiffusionOp::new(&d, &cfg.grid, cfg.scheme, 0.5 * dt)?;
        let c = cfg.initial.sample(n, &cfg.grid)?;
        let state = SimState {
            n,
            cells: cfg.grid.cells,
            c,
            d: d.clone(),
            t: 0.0,
        };
        let mut tracked = cfg.tracked_sizes.clone();
        tracked.sort_unstable();
        tracked.dedup();
        let terms = tracked
            .iter()
            .map(|&i| TermIntegrals {
                size: i,
                ..Default::default()
            })
            .collect();
        let work = Work {
            cell: vec![0.0; n],
            y: vec![0.0; n],
            stage: vec![0.0; n],
            incr: vec![0.0; n],
            k: vec![0.0; n],
            rates: TermRates::zeros(n),
            local_terms: vec![[0.0; 6]; tracked.len()],
            local_leak: 0.0,
        };
        let mut sim = Self {
            grid: cfg.grid,
            model,
            reaction_active,
            half,
            state,
            dt,
            steps,
            step_index: 0,
            sample_every: cfg.sample_every,
            store_snapshots: cfg.store_snapshots,
            max_halvings: cfg.max_halvings,
            tracked: tracked.clone(),
            work,
            terms,
            leaked: 0.0,
            clip_mass: 0.0,
            rho_sq_integral: 0.0,
            rho_integral: 0.0,
            last_rho_sq: 0.0,
            last_mass: 0.0,
            traj: Trajectory {
                n,
                grid: cfg.grid,
                dt,
                d,
                tracked_sizes: tracked,
                samples: Vec::new(),
                max_halvings_used: 0,
                steps_taken: 0,
            },
        };
        let (rho_sq, mass) = sim.rho_norms();
        sim.last_rho_sq = rho_sq;
        sim.last_mass = mass;
        sim.record(true);
        Ok(sim)
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn total_steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.step_index >= self.steps
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }

    /// (∫ρ², ∫ρ) of the current state.
    fn rho_norms(&self) -> (f64, f64) {
        let rho = self.state.rho();
        let h = self.grid.h();
        (
            h * crate::sum::sum(rho.iter().map(|r| r * r)),
            h * crate::sum::sum(rho.iter().copied()),
        )
    }

    fn record(&mut self, force_state: bool) {
        let h = self.grid.h();
        let s = &self.state;
        let (rho_sq, mass) = (self.last_rho_sq, self.last_mass);
        let moment = |k: i32| {
            let w: Vec<f64> = (1..=s.n).map(|i| (i as f64).powi(k)).collect();
            weighted_integral(&s.c, s.cells, h, &w)
        };
        let mut terms = self.terms.clone();
        for t in &mut terms {
            t.amount = h * crate::sum::sum(s.species(t.size).iter().copied());
        }
        let keep = force_state || self.store_snapshots;
        self.traj.samples.push(Sample {
            t: s.t,
            mass,
            moments: [moment(0), moment(1), moment(2)],
            rho_l2: rho_sq.sqrt(),
            rho_sq_integral: self.rho_sq_integral,
            rho_integral: self.rho_integral,
            clip_mass: self.clip_mass,
            leaked: self.leaked,
            terms,
            state: keep.then(|| s.c.clone()),
        });
    }

    /// One Strang step: half diffusion, reaction, half diffusion.
    pub fn step(&mut self) -> Result<()> {
        if self.is_done() {
            return Ok(());
        }
        self.half.apply(&mut self.state.c);
        self.clip_after_diffusion();
        if self.reaction_active {
            for m in 0..self.state.cells {
                self.react_cell(m)?;
            }
        }
        self.half.apply(&mut self.state.c);
        self.clip_after_diffusion();
        self.step_index += 1;
        self.state.t = if self.step_index == self.steps {
            self.dt * self.steps as f64
        } else {
            self.dt * self.step_index as f64
        };
        self.traj.steps_taken = self.step_index;

        if let Some(pos) = self.state.c.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step: self.step_index,
                time: self.state.t,
                size: pos / self.state.cells + 1,
                cell: pos % self.state.cells,
            });
        }

        let (rho_sq, mass) = self.rho_norms();
        self.rho_sq_integral += 0.5 * self.dt * (self.last_rho_sq + rho_sq);
        self.rho_integral += 0.5 * self.dt * (self.last_mass + mass);
        self.last_rho_sq = rho_sq;
        self.last_mass = mass;

        let last = self.is_done();
        if last || self.step_index.is_multiple_of(self.sample_every) {
            self.record(last);
        }
        Ok(())
    }

    fn clip_after_diffusion(&mut self) {
        let cells = self.state.cells;
        let h = self.grid.h();
        for (k, v) in self.state.c.iter_mut().enumerate() {
            if *v < 0.0 {
                self.clip_mass += h * (k / cells + 1) as f64 * -*v;
                *v = 0.0;
            }
        }
    }

    fn react_cell(&mut self, m: usize) -> Result<()> {
        let n = self.state.n;
        let cells = self.state.cells;
        let w = &mut self.work;
        for i in 0..n {
            w.cell[i] = self.state.c[i * cells + m];
        }
        let scale = w.cell.iter().fold(0.0f64, |a, &b| a.max(b));
        if scale == 0.0 {
            return Ok(());
        }
        let floor = -POSITIVITY_TOL * scale;
        for halvings in 0..=self.max_halvings {
            let sub = 1usize << halvings;
            let ds = self.dt / sub as f64;
            w.y.copy_from_slice(&w.cell);
            for t in &mut w.local_terms {
                *t = [0.0; 6];
            }
            w.local_leak = 0.0;
            let mut ok = true;
            for _ in 0..sub {
                rk4_substep(&self.model, w, &self.tracked, ds);
                if w.y.iter().any(|&v| !(v >= floor)) {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            self.traj.max_halvings_used = self.traj.max_halvings_used.max(halvings);
            let h = self.grid.h();
            for (i, v) in w.y.iter_mut().enumerate() {
                if *v < 0.0 {
                    self.clip_mass += h * (i + 1) as f64 * -*v;
                    *v = 0.0;
                }
                self.state.c[i * cells + m] = *v;
            }
            for (acc, local) in self.terms.iter_mut().zip(&w.local_terms) {
                acc.coag_gain += h * local[0];
                acc.coag_loss += h * local[1];
                acc.frag_gain += h * local[2];
                acc.frag_loss += h * local[3];
                acc.collision_gain += h * local[4];
                acc.collision_loss += h * local[5];
            }
            self.leaked += h * w.local_leak;
            return Ok(());
        }
        Err(Error::Stiffness {
            step: self.step_index + 1,
            time: self.state.t,
            cell: m,
            halvings: self.max_halvings,
        })
    }
}

/// Classical RK4 over `ds`, integrating the tracked terms with the same
/// stage weights so that their integrals match the state update exactly.
fn rk4_substep(model: &ReactionModel, w: &mut Work, tracked: &[usize], ds: f64) {
    w.incr.fill(0.0);
    for s in 0..4 {
        let src: &[f64] = if s == 0 { &w.y } else { &w.stage };
        model.rates_into(src, &mut w.rates);
        w.rates.net_into(&mut w.k);
        let wt = WEIGHTS[s];
        for (inc, k) in w.incr.iter_mut().zip(&w.k) {
            *inc += wt * k;
        }
        let f = ds * wt / 6.0;
        for (t, &i) in w.local_terms.iter_mut().zip(tracked) {
            let r = &w.rates;
            t[0] += f * r.coag.gain[i - 1];
            t[1] += f * r.coag.loss[i - 1];
            t[2] += f * r.frag.gain[i - 1];
            t[3] += f * r.frag.loss[i - 1];
            t[4] += f * r.collision.gain[i - 1];
            t[5] += f * r.collision.loss[i - 1];
        }
        w.local_leak += f * w.rates.leak;
        if s < 3 {
            let a = if s == 2 { ds } else { 0.5 * ds };
            for ((st, y), k) in w.stage.iter_mut().zip(&w.y).zip(&w.k) {
                *st = y + a * k;
            }
        }
    }
    for (y, inc) in w.y.iter_mut().zip(&w.incr) {
        *y += ds / 6.0 * inc;
    }
}

/// Integrate from t = 0 to t_final.
pub fn run(cfg: &SimConfig) -> std::result::Result<Trajectory, RunFailure> {
    let mut sim = Simulation::new(cfg).map_err(|error| RunFailure {
        error,
        partial: None,
    })?;
    while !sim.is_done() {
        if let Err(error) = sim.step() {
            return Err(RunFailure {
                error,
                partial: Some(Box::new(sim.traj)),
            });
        }
    }
    Ok(sim.traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{BreakupRate, CoagFamily, CoagKernel, FragSpec};

    fn zero_kernels() -> KernelSet {
        KernelSet::coagulation_only(CoagKernel::new(CoagFamily::Constant { c: 0.0 }).unwrap())
    }

    #[test]
    fn steps_cover_the_horizon() {
        let cfg = SimConfig::new(4, zero_kernels(), 1e-3, 0.09);
        let (steps, dt) = cfg.steps();
        assert_eq!(steps, 90);
        assert!((dt - 1e-3).abs() < 1e-15);
        let cfg = SimConfig::new(4, zero_kernels(), 0.3, 1.0);
        assert_eq!(cfg.steps().0, 4);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::new(4, zero_kernels(), 0.0, 1.0);
        assert!(cfg.validate().is_err());
        cfg.dt = 0.1;
        cfg.tracked_sizes = vec![5];
        assert!(cfg.validate().is_err());
        cfg.tracked_sizes = vec![4];
        cfg.validate().unwrap();
        cfg.t_final = 0.01;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn no_reaction_keeps_mass_and_reduces_to_diffusion() {
        let mut cfg = SimConfig::new(3, zero_kernels(), 0.01, 0.5);
        cfg.grid = Grid::new(1.0, 20).unwrap();
        cfg.initial = InitialData {
            sizes: SizeProfile::Exponential {
                mass: 1.0,
                mean: 1.0,
            },
            space: SpaceProfile::Step {
                position: 0.3,
                left: 2.0,
                right: 0.1,
            },
        };
        cfg.store_snapshots = true;
        let traj = run(&cfg).unwrap();
        let m0 = traj.first().mass;
        for s in &traj.samples {
            assert!((s.mass - m0).abs() <= 1e-12 * m0);
        }
        // One step equals two half diffusion steps.
        let d = cfg.diffusion.values(3).unwrap();
        let s0 = SimState {
            n: 3,
            cells: 20,
            c: traj.initial_state().to_vec(),
            d,
            t: 0.0,
        };
        let a = diffusion_step(&s0, &cfg.grid, cfg.scheme, 0.005).unwrap();
        let b = diffusion_step(&a, &cfg.grid, cfg.scheme, 0.005).unwrap();
        let got = traj.samples[1].state.as_ref().unwrap();
        for (x, y) in b.c.iter().zip(got) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn conservative_run_holds_mass_and_positivity() {
        let ks = KernelSet::with_frag(
            CoagKernel::constant(1.0),
            FragSpec::binary_uniform(16, BreakupRate::constant(0.5)),
        );
        let mut cfg = SimConfig::new(16, ks, 1e-2, 1.0);
        cfg.grid = Grid::new(1.0, 8).unwrap();
        cfg.diffusion = DiffusionProfile::Alternating {
            odd: 0.5,
            even: 2.0,
        };
        cfg.initial.space = SpaceProfile::Cosine {
            amplitude: 0.5,
            mode: 1,
        };
        cfg.tracked_sizes = vec![1, 2];
        cfg.store_snapshots = true;
        let traj = run(&cfg).unwrap();
        let m0 = traj.first().mass;
        for s in &traj.samples {
            assert!((s.mass - m0).abs() <= 1e-12 * m0);
            assert!(s.state.as_ref().unwrap().iter().all(|&v| v >= 0.0));
        }
        // Integrated equation for each tracked size.
        let last = traj.last();
        for (t0, t) in traj.first().terms.iter().zip(&last.terms) {
            let lhs = t.amount - t0.amount;
            let rhs = t.coag_gain - t.coag_loss + t.frag_gain - t.frag_loss;
            assert!((lhs - rhs).abs() < 1e-12, "size {}: {lhs} vs {rhs}", t.size);
        }
    }

    #[test]
    fn huge_rates_trigger_stiffness_error() {
        let ks = KernelSet::coagulation_only(CoagKernel::constant(1e9));
        let cfg = SimConfig::new(8, ks, 1e-2, 0.1);
        let err = run(&cfg).unwrap_err();
        assert!(
            matches!(err.error, Error::Stiffness { step: 1, .. }),
            "{err}"
        );
        assert_eq!(err.partial.unwrap().samples.len(), 1);
    }
}
