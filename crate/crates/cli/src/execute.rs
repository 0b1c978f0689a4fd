use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use coagfrag::analysis::{
    duality_report, gelation_scan, l1_terms_report, log_moment_report, mass, strang_order,
    superlinear_report, tightness_diagnostic, MomentSeries,
};
use coagfrag::kernels::ThetaProfile;
use coagfrag::pde::{run, Trajectory, DIFFUSION_VERSION, SCHEME_VERSION};
use coagfrag::report::table;
use coagfrag::rhs::{mass_flux, weak_form_pair, CellState, ReactionModel, TruncationMode};
use coagfrag::sequences::{
    build_psi, empirical_psi_constant, psi_increment_cap, psi_theta_cap, SequenceKind,
    WeightSequence,
};
use coagfrag::{BoundReport, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::scenario::{ReportRequest, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("simulation failed: {error} (partial output in {})", .run_dir.display())]
    Run {
        error: coagfrag::Error,
        run_dir: PathBuf,
    },
    #[error("report {index} ({kind}) failed: {error}")]
    Analysis {
        index: usize,
        kind: &'static str,
        error: coagfrag::Error,
    },
}

/// A non-numeric check, e.g. an expected gelation verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expectation {
    pub what: String,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub run_dir: PathBuf,
    pub reports: Vec<BoundReport>,
    pub expectations: Vec<Expectation>,
    /// One line per report that carries a verdict or a value but no bound.
    pub notes: Vec<String>,
}

impl Outcome {
    /// True iff every bound is Pass or Flag and every expectation holds.
    pub fn success(&self) -> bool {
        self.reports.iter().all(BoundReport::acceptable)
            && self.expectations.iter().all(|e| e.holds)
    }

    pub fn render(&self) -> String {
        let mut out = table(&self.reports);
        for e in &self.expectations {
            let tag = if e.holds { "PASS" } else { "FAIL" };
            out.push_str(&format!("{tag}  {}\n", e.what));
        }
        for n in &self.notes {
            out.push_str(&format!("      {n}\n"));
        }
        out
    }
}

struct Writer {
    dir: PathBuf,
    written: Vec<String>,
}

impl Writer {
    fn create(&mut self, rel: &str) -> Result<BufWriter<File>, ExecError> {
        let path = self.dir.join(rel);
        let f = File::create(&path).map_err(|source| ExecError::Io { path, source })?;
        self.written.push(rel.to_string());
        Ok(BufWriter::new(f))
    }

    fn with<F>(&mut self, rel: &str, f: F) -> Result<(), ExecError>
    where
        F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    {
        let mut w = self.create(rel)?;
        f(&mut w)
            .and_then(|_| w.flush())
            .map_err(|source| ExecError::Io {
                path: self.dir.join(rel),
                source,
            })
    }

    fn json(&mut self, rel: &str, v: &Value) -> Result<(), ExecError> {
        self.with(rel, |w| {
            serde_json::to_writer_pretty(&mut *w, v)?;
            writeln!(w)
        })
    }

    fn series(&mut self, s: &MomentSeries) -> Result<(), ExecError> {
        let rel = format!("series/{}.csv", s.name);
        self.with(&rel, |w| s.write_csv(w))
    }
}

/// Directory a scenario writes to below `root`.
pub fn run_dir(s: &Scenario, root: &Path) -> PathBuf {
    root.join(s.file.output_dir.as_deref().unwrap_or(&s.file.name))
}

/// Run the scenario and write `manifest.json`, `series/*.csv` and
/// `reports/*.json` below its run directory. The manifest is written even
/// when the run fails part way.
pub fn execute(s: &Scenario, root: &Path) -> Result<Outcome, ExecError> {
    let dir = run_dir(s, root);
    for sub in ["series", "reports"] {
        let path = dir.join(sub);
        fs::create_dir_all(&path).map_err(|source| ExecError::Io { path, source })?;
    }
    let mut w = Writer {
        dir: dir.clone(),
        written: Vec::new(),
    };
    let result = execute_in(s, &mut w);
    let (status, error) = match &result {
        Ok(o) if o.success() => ("completed", None),
        Ok(_) => ("bound-violated", None),
        Err(e) => ("failed", Some(e.to_string())),
    };
    let (steps, dt) = s.config.steps();
    let manifest = json!({
        "name": s.file.name,
        "description": s.file.description,
        "coagfrag_version": env!("CARGO_PKG_VERSION"),
        "scheme": SCHEME_VERSION,
        "diffusion_discretization": DIFFUSION_VERSION,
        "scenario": s.file,
        "effective": {
            "steps": steps,
            "dt": dt,
            "diffusion_constants": s.config.diffusion.values(s.config.n).unwrap_or_default(),
            "tracked_sizes": s.config.tracked_sizes,
            "store_snapshots": s.config.store_snapshots,
            "model": format!("{:?}", s.config.model()),
        },
        "warnings": s.warnings,
        "status": status,
        "error": error,
        "outputs": w.written,
    });
    w.json("manifest.json", &manifest)?;
    result.map(|mut o| {
        o.run_dir = dir;
        o
    })
}

fn execute_in(s: &Scenario, w: &mut Writer) -> Result<Outcome, ExecError> {
    let cfg = &s.config;
    let mut out = Outcome {
        run_dir: PathBuf::new(),
        reports: Vec::new(),
        expectations: Vec::new(),
        notes: Vec::new(),
    };

    let needs_run =
        s.file.reports.is_empty() || s.file.reports.iter().any(ReportRequest::needs_trajectory);
    let traj = if needs_run {
        match run(cfg) {
            Ok(t) => {
                write_trajectory(w, &t)?;
                Some(t)
            }
            Err(f) => {
                if let Some(p) = &f.partial {
                    write_trajectory(w, p)?;
                }
                return Err(ExecError::Run {
                    error: f.error,
                    run_dir: w.dir.clone(),
                });
            }
        }
    } else {
        None
    };

    for (index, req) in s.file.reports.iter().enumerate() {
        let kind = req.kind();
        let fail = |error| ExecError::Analysis { index, kind, error };
        let traj = || {
            traj.as_ref()
                .expect("trajectory runs when a report needs it")
        };
        let mut bounds = Vec::new();
        let mut extra = json!({});
        match req {
            ReportRequest::MassDrift { tolerance } => {
                let t = traj();
                let m = mass(t);
                let drift = m.relative_drift();
                bounds.push(
                    BoundReport::upper("relative mass drift", drift, *tolerance).with_detail(
                        format!(
                            "leaked {:.3e}, clipped {:.3e}",
                            t.last().leaked,
                            t.last().clip_mass
                        ),
                    ),
                );
            }
            ReportRequest::Duality => {
                let r = duality_report(traj());
                bounds.extend(r.reports());
                extra = json!({ "quadrature_error": r.quadrature_error });
            }
            ReportRequest::L1Terms { sizes } => {
                let rs = l1_terms_report(traj(), &cfg.kernels, sizes).map_err(fail)?;
                bounds.extend(rs.iter().flat_map(|r| r.reports()));
            }
            ReportRequest::Superlinear {
                theta_exponent,
                horizon,
                range,
            } => {
                let psi = psi_for(*theta_exponent, *horizon).map_err(fail)?;
                let c = empirical_psi_constant(&cfg.kernels.coag, &psi, *range).map_err(fail)?;
                let r = superlinear_report(traj(), &psi, c.value).map_err(fail)?;
                w.series(&r.series)?;
                bounds.push(c.report);
                bounds.push(r.report);
                extra = json!({ "c_emp": c.value, "c_emp_half_range": c.half_range_value });
            }
            ReportRequest::LogMoment => {
                let r = log_moment_report(traj()).map_err(fail)?;
                w.series(&r.series)?;
                bounds.push(r.report);
            }
            ReportRequest::PsiConstruction {
                theta_exponent,
                horizon,
                range,
            } => {
                let theta = ThetaProfile::power(*theta_exponent).map_err(fail)?;
                let lambda = log_lambda(*horizon).map_err(fail)?;
                let psi = build_psi(&theta, &lambda, *horizon).map_err(fail)?;
                let (mut inc, mut lam, mut th) = (0usize, 0usize, 0usize);
                for i in 1..=*horizon {
                    let d = psi.get(i) - psi.get(i - 1);
                    inc += usize::from(!(d >= 0.0 && d <= psi_increment_cap(i)));
                    lam += usize::from(psi.get(i) > lambda.get(i));
                    th += usize::from(psi.get(i) > psi_theta_cap(&theta, i));
                }
                bounds.push(BoundReport::upper(
                    "psi increment cap violations",
                    inc as f64,
                    0.0,
                ));
                bounds.push(BoundReport::upper(
                    "psi <= lambda violations",
                    lam as f64,
                    0.0,
                ));
                bounds.push(BoundReport::upper(
                    "psi theta cap violations",
                    th as f64,
                    0.0,
                ));
                let c = empirical_psi_constant(&cfg.kernels.coag, &psi, *range).map_err(fail)?;
                bounds.push(c.report);
                w.with("series/psi.csv", |f| psi.write_csv(f))?;
                extra = json!({
                    "psi_last": psi.get(*horizon),
                    "c_emp": c.value,
                    "c_emp_half_range": c.half_range_value,
                    "argmax": c.argmax,
                });
            }
            ReportRequest::GelationScan { sizes, expect } => {
                let scan = gelation_scan(cfg, sizes).map_err(fail)?;
                w.with("series/gelation.csv", |f| {
                    writeln!(f, "n,loss,mass_deficit")?;
                    for r in &scan.rows {
                        writeln!(f, "{},{:e},{:e}", r.n, r.loss, r.mass_deficit)?;
                    }
                    Ok(())
                })?;
                out.notes.push(format!(
                    "gelation scan over {sizes:?}: {}",
                    scan.verdict.name()
                ));
                if let Some(e) = expect {
                    out.expectations.push(Expectation {
                        what: format!(
                            "gelation verdict {} (expected {})",
                            scan.verdict.name(),
                            e.name()
                        ),
                        holds: scan.verdict == *e,
                    });
                }
                extra = json!({ "scan": scan, "expect": expect });
            }
            ReportRequest::Tightness { ks } => {
                let ts = tightness_diagnostic(traj(), ks).map_err(fail)?;
                let mut rows = Vec::new();
                for t in &ts {
                    w.series(&t.series)?;
                    out.notes
                        .push(format!("G_{}: sup deviation {:.3e}", t.k, t.max_deviation));
                    rows.push(json!({ "k": t.k, "max_deviation": t.max_deviation }));
                }
                extra = json!({ "tightness": rows });
            }
            ReportRequest::SchemeOrder => {
                let o = strang_order(cfg).map_err(fail)?;
                bounds.push(
                    BoundReport::upper(
                        "|error ratio - 4| under dt halving",
                        (o.ratio - 4.0).abs(),
                        0.5,
                    )
                    .with_detail(format!("errors {:.3e} -> {:.3e}", o.errors[0], o.errors[1])),
                );
                extra = json!({ "order": o });
            }
            ReportRequest::WeakForm { instances, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let n = cfg.n;
                let mut worst = 0.0f64;
                for _ in 0..*instances {
                    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
                    let phi: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
                    let cell = CellState::new(&c).map_err(fail)?;
                    let p = weak_form_pair(cell, &cfg.kernels, &phi).map_err(fail)?;
                    worst = worst
                        .max((p.direct - p.weak).abs() / (p.direct.abs() + p.weak.abs() + 1.0));
                }
                bounds.push(
                    BoundReport::upper("weak form vs direct, worst relative gap", worst, 1e-12)
                        .with_detail(format!("{instances} random states, N = {n}")),
                );
            }
            ReportRequest::MassFlux { instances, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let n = cfg.n;
                let model = ReactionModel::new(&cfg.kernels, n, cfg.mode).map_err(fail)?;
                let mut worst = 0.0f64;
                for _ in 0..*instances {
                    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
                    let r = model.rates(&c);
                    let scale: f64 = (0..n)
                        .map(|i| {
                            (i + 1) as f64
                                * (r.coag.gain[i]
                                    + r.coag.loss[i]
                                    + r.frag.gain[i]
                                    + r.frag.loss[i]
                                    + r.collision.gain[i]
                                    + r.collision.loss[i])
                        })
                        .sum();
                    // Non-conservative truncation: what leaves the range is the leak.
                    let leak = if cfg.mode == TruncationMode::NonConservative {
                        r.leak
                    } else {
                        0.0
                    };
                    let rel = (mass_flux(&r.net()) + leak).abs() / scale.max(f64::MIN_POSITIVE);
                    worst = worst.max(rel);
                }
                bounds.push(
                    BoundReport::upper("mass flux, worst relative residual", worst, 1e-12)
                        .with_detail(format!("{instances} random states, N = {n}")),
                );
            }
        }
        let status = if bounds.iter().all(BoundReport::acceptable) {
            "ok"
        } else {
            "bound-violated"
        };
        let doc = json!({
            "kind": kind,
            "request": req,
            "status": status,
            "bounds": bounds,
            "data": extra,
        });
        w.json(&format!("reports/{index:02}-{kind}.json"), &doc)?;
        out.reports.extend(bounds);
    }

    let summary = json!({
        "success": out.success(),
        "passed": out.reports.iter().filter(|r| r.status == Status::Pass).count(),
        "flagged": out.reports.iter().filter(|r| r.status == Status::Flag).count(),
        "failed": out.reports.iter().filter(|r| r.status == Status::Fail).count(),
        "expectations": out.expectations,
    });
    w.json("reports/summary.json", &summary)?;
    Ok(out)
}

fn write_trajectory(w: &mut Writer, t: &Trajectory) -> Result<(), ExecError> {
    w.with("series/trajectory.csv", |f| t.write_csv(f))?;
    w.series(&mass(t))
}

fn log_lambda(n: usize) -> coagfrag::Result<WeightSequence> {
    let v: Vec<f64> = (1..=n).map(|i| (1.0 + i as f64).ln()).collect();
    WeightSequence::from_values(SequenceKind::Lambda, &v)
}

fn psi_for(eps: f64, n: usize) -> coagfrag::Result<WeightSequence> {
    build_psi(&ThetaProfile::power(eps)?, &log_lambda(n)?, n)
}
