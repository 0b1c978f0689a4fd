//! Scenario files: TOML with kebab-case keys. Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use coagfrag::kernels::{
    BreakupRate, CoagFamily, CoagKernel, CollisionFragSpec, CollisionRates, DaughterLaw, FragSpec,
    KernelSet, Phi, SymTable,
};
use coagfrag::pde::{DiffusionProfile, DiffusionScheme, Grid, InitialData, SimConfig};
use coagfrag::rhs::TruncationMode;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ScenarioFile {
    /// Defaults to the file stem.
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Run directory below the output root; defaults to `name`.
    #[serde(default)]
    pub output_dir: Option<String>,
    pub model: ModelSection,
    pub coagulation: CoagSection,
    #[serde(default)]
    pub fragmentation: Option<FragSection>,
    #[serde(default)]
    pub collision: Option<CollisionSection>,
    #[serde(default)]
    pub diffusion: DiffusionSection,
    #[serde(default = "default_initial")]
    pub initial: InitialData,
    #[serde(default)]
    pub grid: GridSection,
    pub time: TimeSection,
    #[serde(default, rename = "report")]
    pub reports: Vec<ReportRequest>,
}

fn default_initial() -> InitialData {
    InitialData::monodisperse(1.0)
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ModelSection {
    pub n: usize,
    #[serde(default)]
    pub truncation: TruncationMode,
    #[serde(default = "default_halvings")]
    pub max_halvings: u32,
}

fn default_halvings() -> u32 {
    coagfrag::pde::DEFAULT_MAX_HALVINGS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoagSection {
    Constant {
        #[serde(default = "one")]
        c: f64,
    },
    Additive {
        #[serde(default = "one")]
        c: f64,
    },
    Multiplicative {
        #[serde(default = "one")]
        c: f64,
    },
    PowerSym {
        alpha: f64,
        beta: f64,
        #[serde(default = "one")]
        c: f64,
    },
    SlowSublinear {
        phi: PhiName,
        #[serde(default = "one")]
        c: f64,
    },
    SqrtProduct {
        #[serde(default = "one")]
        c: f64,
    },
    /// CSV rows `i,j,value`; relative paths resolve against the scenario file.
    Table { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiName {
    Log,
    IteratedLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FragLaw {
    BinaryUniform,
    Erosion,
}

/// B_i = rate · i^exponent for i ≥ 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FragSection {
    pub law: FragLaw,
    #[serde(default = "one")]
    pub rate: f64,
    #[serde(default)]
    pub exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollisionRateName {
    Constant,
    SqrtProduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DaughterName {
    #[default]
    UniformInMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CollisionSection {
    pub rates: CollisionRateName,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default)]
    pub daughters: DaughterName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct DiffusionSection {
    #[serde(default)]
    pub scheme: DiffusionScheme,
    #[serde(default = "default_profile")]
    pub profile: DiffusionProfile,
}

fn default_profile() -> DiffusionProfile {
    DiffusionProfile::Constant { d: 1.0 }
}

impl Default for DiffusionSection {
    fn default() -> Self {
        Self {
            scheme: DiffusionScheme::default(),
            profile: default_profile(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "one")]
    pub length: f64,
    #[serde(default = "one_cell")]
    pub cells: usize,
}

fn one_cell() -> usize {
    1
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            length: 1.0,
            cells: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub t_final: f64,
    /// Record a sample every this many steps.
    #[serde(default = "one_cell")]
    pub sample_every: usize,
    /// Keep the full state at every sample (needed for moment series).
    #[serde(default)]
    pub snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "kebab-case",
    rename_all_fields = "kebab-case",
    deny_unknown_fields
)]
pub enum ReportRequest {
    /// Relative drift of the total mass against `tolerance`.
    MassDrift {
        #[serde(default = "default_drift_tol")]
        tolerance: f64,
    },
    Duality,
    L1Terms {
        sizes: Vec<usize>,
    },
    /// ψ built from θ(x) = x^{−theta-exponent} and λ_i = ln(1 + i) on
    /// `horizon` sizes; the constant is measured over `range`.
    Superlinear {
        #[serde(default = "half")]
        theta_exponent: f64,
        #[serde(default = "default_horizon")]
        horizon: usize,
        #[serde(default = "default_range")]
        range: usize,
    },
    LogMoment,
    /// Same ψ inputs as `superlinear`, checked on their own.
    PsiConstruction {
        #[serde(default = "half")]
        theta_exponent: f64,
        #[serde(default = "default_horizon")]
        horizon: usize,
        #[serde(default = "default_range")]
        range: usize,
    },
    GelationScan {
        sizes: Vec<usize>,
        #[serde(default)]
        expect: Option<coagfrag::analysis::GelationVerdict>,
    },
    Tightness {
        ks: Vec<usize>,
    },
    SchemeOrder,
    /// Weak form against direct evaluation on random states.
    WeakForm {
        #[serde(default = "default_instances")]
        instances: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Σ i·(dc_i/dt) on random states.
    MassFlux {
        #[serde(default = "default_instances")]
        instances: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_drift_tol() -> f64 {
    1e-8
}
fn half() -> f64 {
    0.5
}
fn default_horizon() -> usize {
    2000
}
fn default_range() -> usize {
    1000
}
fn default_instances() -> usize {
    100
}

impl ReportRequest {
    pub fn kind(&self) -> &'static str {
        match self {
            ReportRequest::MassDrift { .. } => "mass-drift",
            ReportRequest::Duality => "duality",
            ReportRequest::L1Terms { .. } => "l1-terms",
            ReportRequest::Superlinear { .. } => "superlinear",
            ReportRequest::LogMoment => "log-moment",
            ReportRequest::PsiConstruction { .. } => "psi-construction",
            ReportRequest::GelationScan { .. } => "gelation-scan",
            ReportRequest::Tightness { .. } => "tightness",
            ReportRequest::SchemeOrder => "scheme-order",
            ReportRequest::WeakForm { .. } => "weak-form",
            ReportRequest::MassFlux { .. } => "mass-flux",
        }
    }

    /// Whether the report reads the main trajectory.
    pub fn needs_trajectory(&self) -> bool {
        matches!(
            self,
            ReportRequest::MassDrift { .. }
                | ReportRequest::Duality
                | ReportRequest::L1Terms { .. }
                | ReportRequest::Superlinear { .. }
                | ReportRequest::LogMoment
                | ReportRequest::Tightness { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub key: String,
    /// 1-based; `None` when the key is absent from the file.
    pub line: Option<usize>,
    pub reason: String,
    pub severity: Severity,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match self.line {
            Some(l) => write!(f, "line {l}: {sev}: {}: {}", self.key, self.reason),
            None => write!(f, "{sev}: {}: {}", self.key, self.reason),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{} problem(s) in scenario:\n{}", .0.len(), render(.0))]
    Invalid(Vec<Diagnostic>),
}

fn render(d: &[Diagnostic]) -> String {
    d.iter()
        .map(|d| format!("  {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// A validated scenario: the file with defaults filled in, the simulation
/// config it describes, and any warnings.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub config: SimConfig,
    pub warnings: Vec<Diagnostic>,
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let src = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario");
    parse_str(&src, stem, path.parent())
}

/// Parse scenario text. `base` resolves relative table paths.
pub fn parse_str(
    src: &str,
    default_name: &str,
    base: Option<&Path>,
) -> Result<Scenario, ScenarioError> {
    let mut file: ScenarioFile = toml::from_str(src).map_err(|e| {
        let line = e.span().map(|s| line_of(src, s.start));
        let key = e
            .span()
            .map(|s| src[s].trim().trim_matches('"').to_string())
            .filter(|k| !k.is_empty() && !k.contains('\n'))
            .unwrap_or_else(|| "<document>".into());
        ScenarioError::Invalid(vec![Diagnostic {
            key,
            line,
            reason: e.message().trim().to_string(),
            severity: Severity::Error,
        }])
    })?;
    if file.name.is_empty() {
        file.name = default_name.to_string();
    }
    if let CoagSection::Table { path } = &mut file.coagulation {
        if path.is_relative() {
            if let Some(b) = base {
                *path = b.join(&*path);
            }
        }
    }

    let mut diags = Vec::new();
    let config = check(&file, src, &mut diags);
    let (errors, warnings): (Vec<_>, Vec<_>) = diags
        .into_iter()
        .partition(|d| d.severity == Severity::Error);
    match config {
        Some(config) if errors.is_empty() => Ok(Scenario {
            file,
            config,
            warnings,
        }),
        _ => Err(ScenarioError::Invalid(
            errors.into_iter().chain(warnings).collect(),
        )),
    }
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Line of `key` inside table `section` (or the `index`-th `[[section]]`).
fn locate(src: &str, section: &str, index: Option<usize>, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut seen = 0usize;
    let mut in_target = false;
    for (n, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix("[[").and_then(|l| l.split("]]").next()) {
            current = h.trim().to_string();
            in_target = current == section && index == Some(seen);
            if current == section {
                seen += 1;
            }
            if in_target && key.is_empty() {
                return Some(n + 1);
            }
            continue;
        }
        if let Some(h) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
            current = h.trim().to_string();
            in_target = index.is_none() && current == section;
            if in_target && key.is_empty() {
                return Some(n + 1);
            }
            continue;
        }
        let top = section.is_empty() && current.is_empty();
        if (in_target || top) && !key.is_empty() {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(n + 1);
                }
            }
        }
    }
    None
}

struct Ctx<'a> {
    src: &'a str,
    diags: &'a mut Vec<Diagnostic>,
}

impl Ctx<'_> {
    fn push(
        &mut self,
        severity: Severity,
        section: &str,
        index: Option<usize>,
        key: &str,
        reason: String,
    ) {
        let line =
            locate(self.src, section, index, key).or_else(|| locate(self.src, section, index, ""));
        let name = match (index, key.is_empty()) {
            (Some(i), true) => format!("{section}[{i}]"),
            (Some(i), false) => format!("{section}[{i}].{key}"),
            (None, true) => section.to_string(),
            (None, false) if section.is_empty() => key.to_string(),
            (None, false) => format!("{section}.{key}"),
        };
        self.diags.push(Diagnostic {
            key: name,
            line,
            reason,
            severity,
        });
    }

    fn error(&mut self, section: &str, key: &str, reason: impl Into<String>) {
        self.push(Severity::Error, section, None, key, reason.into());
    }

    fn report_error(&mut self, i: usize, key: &str, reason: impl Into<String>) {
        self.push(Severity::Error, "report", Some(i), key, reason.into());
    }

    fn positive(&mut self, section: &str, key: &str, v: f64) {
        if !(v.is_finite() && v > 0.0) {
            self.error(
                section,
                key,
                format!("must be a finite number > 0, got {v}"),
            );
        }
    }

    fn nonneg(&mut self, section: &str, key: &str, v: f64) {
        if !(v.is_finite() && v >= 0.0) {
            self.error(
                section,
                key,
                format!("must be a finite number >= 0, got {v}"),
            );
        }
    }
}

fn check(f: &ScenarioFile, src: &str, diags: &mut Vec<Diagnostic>) -> Option<SimConfig> {
    let mut cx = Ctx { src, diags };
    let n = f.model.n;
    if n == 0 {
        cx.error("model", "n", "truncation size must be >= 1");
    }
    cx.positive("time", "dt", f.time.dt);
    cx.positive("time", "t-final", f.time.t_final);
    if f.time.dt > 0.0 && f.time.t_final.is_finite() && f.time.t_final < f.time.dt {
        cx.error("time", "t-final", format!("must be >= dt = {}", f.time.dt));
    }
    if f.time.sample_every == 0 {
        cx.error("time", "sample-every", "must be >= 1");
    }
    cx.positive("grid", "length", f.grid.length);
    if f.grid.cells == 0 {
        cx.error("grid", "cells", "must be >= 1");
    }
    if let Some(fr) = &f.fragmentation {
        cx.nonneg("fragmentation", "rate", fr.rate);
        if !fr.exponent.is_finite() {
            cx.error("fragmentation", "exponent", "must be finite");
        }
    }
    if let Some(q) = &f.collision {
        cx.nonneg("collision", "c", q.c);
    }

    let coag = match coag_kernel(&f.coagulation) {
        Ok(k) => Some(k),
        Err(e) => {
            let key = match &f.coagulation {
                CoagSection::Table { .. } => "path",
                _ => "",
            };
            cx.error("coagulation", key, e);
            None
        }
    };
    let grid = Grid {
        length: f.grid.length,
        cells: f.grid.cells,
    };
    if n > 0 {
        if let Err(e) = f.diffusion.profile.values(n) {
            cx.error("diffusion", "profile", e.to_string());
        }
        if f.grid.cells > 0 && f.grid.length > 0.0 {
            if let Err(e) = f.initial.sample(n, &grid) {
                cx.error("initial", "", e.to_string());
            }
        }
    }

    let mut tracked = Vec::new();
    let mut snapshots = f.time.snapshots;
    for (i, r) in f.reports.iter().enumerate() {
        match r {
            ReportRequest::MassDrift { tolerance } => {
                if !(tolerance.is_finite() && *tolerance >= 0.0) {
                    cx.report_error(i, "tolerance", "must be a finite number >= 0");
                }
            }
            ReportRequest::Duality => {
                if f.time.sample_every > 10 {
                    cx.push(
                        Severity::Warning,
                        "report",
                        Some(i),
                        "kind",
                        format!(
                            "duality report expects samples at least every 10 dt, but time.sample-every = {}; \
                             the space-time norm comes from a coarse quadrature",
                            f.time.sample_every
                        ),
                    );
                }
            }
            ReportRequest::L1Terms { sizes } => {
                if sizes.is_empty() {
                    cx.report_error(i, "sizes", "needs at least one size");
                }
                for &s in sizes {
                    if s == 0 || s > n {
                        cx.report_error(i, "sizes", format!("size {s} outside 1..={n}"));
                    } else if !tracked.contains(&s) {
                        tracked.push(s);
                    }
                }
            }
            ReportRequest::Superlinear {
                theta_exponent,
                horizon,
                range,
            }
            | ReportRequest::PsiConstruction {
                theta_exponent,
                horizon,
                range,
            } => {
                if !(theta_exponent.is_finite() && *theta_exponent > 0.0) {
                    cx.report_error(i, "theta-exponent", "must be > 0 so that theta decays");
                }
                if *range == 0 || 2 * range > *horizon {
                    cx.report_error(
                        i,
                        "range",
                        format!("need 1 <= range and 2 range <= horizon = {horizon}"),
                    );
                }
                if matches!(r, ReportRequest::Superlinear { .. }) && *horizon < n {
                    cx.report_error(i, "horizon", format!("must cover the truncation size {n}"));
                }
            }
            ReportRequest::LogMoment => {}
            ReportRequest::GelationScan { sizes, .. } => {
                if sizes.len() < 2 {
                    cx.report_error(i, "sizes", "needs at least two sizes");
                }
                if sizes.windows(2).any(|w| w[1] <= w[0]) || sizes.first() == Some(&0) {
                    cx.report_error(i, "sizes", "sizes must be positive and strictly increasing");
                }
            }
            ReportRequest::Tightness { ks } => {
                if ks.is_empty() || ks.iter().any(|&k| k < 2) {
                    cx.report_error(i, "ks", "needs at least one k, each >= 2");
                }
                snapshots = true;
            }
            ReportRequest::SchemeOrder => {}
            ReportRequest::WeakForm { instances, .. }
            | ReportRequest::MassFlux { instances, .. } => {
                if *instances == 0 {
                    cx.report_error(i, "instances", "must be >= 1");
                }
            }
        }
    }

    let kernels = build_kernels(f, coag?, n);
    if n > kernels.size_limit() {
        cx.error(
            "model",
            "n",
            format!(
                "kernel tables only cover sizes up to {}",
                kernels.size_limit()
            ),
        );
        return None;
    }
    let mut cfg = SimConfig::new(n, kernels, f.time.dt, f.time.t_final);
    cfg.grid = grid;
    cfg.diffusion = f.diffusion.profile.clone();
    cfg.scheme = f.diffusion.scheme;
    cfg.mode = f.model.truncation;
    cfg.initial = f.initial.clone();
    cfg.sample_every = f.time.sample_every;
    cfg.tracked_sizes = tracked;
    cfg.store_snapshots = snapshots;
    cfg.max_halvings = f.model.max_halvings;
    if cx.diags.iter().any(|d| d.severity == Severity::Error) {
        return None;
    }
    if let Err(e) = cfg.validate() {
        cx.error("", "", e.to_string());
        return None;
    }
    Some(cfg)
}

pub fn coag_kernel(s: &CoagSection) -> Result<CoagKernel, String> {
    let family = match s {
        CoagSection::Constant { c } => CoagFamily::Constant { c: *c },
        CoagSection::Additive { c } => CoagFamily::Additive { c: *c },
        CoagSection::Multiplicative { c } => CoagFamily::Multiplicative { c: *c },
        CoagSection::PowerSym { alpha, beta, c } => CoagFamily::PowerSym {
            alpha: *alpha,
            beta: *beta,
            c: *c,
        },
        CoagSection::SlowSublinear { phi, c } => CoagFamily::SlowSublinear {
            phi: match phi {
                PhiName::Log => Phi::Log,
                PhiName::IteratedLog => Phi::IteratedLog,
            },
            c: *c,
        },
        CoagSection::SqrtProduct { c } => CoagFamily::SqrtProduct { c: *c },
        CoagSection::Table { path } => {
            let file = std::fs::File::open(path)
                .map_err(|e| format!("cannot open {}: {e}", path.display()))?;
            CoagFamily::Table(
                SymTable::from_csv(file).map_err(|e| format!("{}: {e}", path.display()))?,
            )
        }
    };
    CoagKernel::new(family).map_err(|e| e.to_string())
}

fn build_kernels(f: &ScenarioFile, coag: CoagKernel, n: usize) -> KernelSet {
    let mut ks = KernelSet::coagulation_only(coag);
    if let Some(fr) = &f.fragmentation {
        let rate = BreakupRate {
            c: fr.rate,
            exponent: fr.exponent,
        };
        ks.frag = Some(match fr.law {
            FragLaw::BinaryUniform => FragSpec::binary_uniform(n, rate),
            FragLaw::Erosion => FragSpec::erosion(n, rate),
        });
    }
    if let Some(q) = &f.collision {
        let rates = match q.rates {
            CollisionRateName::Constant => CollisionRates::Constant { c: q.c },
            CollisionRateName::SqrtProduct => CollisionRates::SqrtProduct { c: q.c },
        };
        let law = match q.daughters {
            DaughterName::UniformInMass => DaughterLaw::UniformInMass,
        };
        ks.collision = CollisionFragSpec::new(rates, law).ok();
    }
    ks
}
