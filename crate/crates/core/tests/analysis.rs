use coagfrag::analysis::{
    duality_report, gelation_scan, gelation_verdict, l1_terms_report, mass, rho_l2_space_time,
    superlinear_report, tightness_diagnostic, tightness_weight, GelationVerdict,
};
use coagfrag::kernels::{BreakupRate, CoagFamily, CoagKernel, FragSpec, KernelSet};
use coagfrag::pde::{
    run, DiffusionProfile, Grid, InitialData, SimConfig, SizeProfile, SpaceProfile,
};
use coagfrag::rhs::TruncationMode;
use coagfrag::sequences::{SequenceKind, WeightSequence};
use coagfrag::Status;

fn zero_kernel() -> KernelSet {
    KernelSet::coagulation_only(CoagKernel::new(CoagFamily::Constant { c: 0.0 }).unwrap())
}

#[test]
fn duality_for_a_steady_state() {
    // Nothing reacts and the data is flat, so ‖ρ‖_{L²(Q_T)} = √T ‖ρ0‖.
    let cfg = SimConfig::new(4, zero_kernel(), 0.01, 4.0);
    let traj = run(&cfg).unwrap();
    let r = duality_report(&traj);
    assert!(
        (r.derived.measured - 2.0).abs() < 1e-12,
        "{}",
        r.derived.measured
    );
    assert_eq!(r.stated.status, Status::Pass);
    assert_eq!(r.derived.status, Status::Pass);
    assert!(r.quadrature_error < 1e-12);
}

#[test]
fn space_time_norm_grows_with_the_horizon() {
    let mut cfg = SimConfig::new(
        8,
        KernelSet::coagulation_only(CoagKernel::additive(1.0)),
        0.01,
        1.0,
    );
    cfg.grid = Grid::new(1.0, 10).unwrap();
    cfg.initial = InitialData {
        sizes: SizeProfile::Monodisperse { mass: 1.0 },
        space: SpaceProfile::Step {
            position: 0.5,
            left: 2.0,
            right: 0.0,
        },
    };
    let mut traj = run(&cfg).unwrap();
    let mut prev = f64::INFINITY;
    while traj.samples.len() > 1 {
        let v = rho_l2_space_time(&traj);
        assert!(v <= prev);
        prev = v;
        traj.samples.pop();
    }
}

#[test]
fn unit_psi_reproduces_the_mass() {
    let n = 10;
    let mut cfg = SimConfig::new(
        n,
        KernelSet::coagulation_only(CoagKernel::sqrt_product(1.0)),
        0.01,
        0.5,
    );
    cfg.store_snapshots = true;
    let traj = run(&cfg).unwrap();
    let psi = WeightSequence::from_values(SequenceKind::Psi, &vec![1.0; n]).unwrap();
    let r = superlinear_report(&traj, &psi, 1.0).unwrap();
    let m = mass(&traj);
    assert_eq!(r.series.values.len(), m.values.len());
    for (a, b) in r.series.values.iter().zip(&m.values) {
        assert!((a - b).abs() < 1e-13);
    }
    assert!(r.report.passed());
}

#[test]
fn l1_bounds_without_fragmentation() {
    let n = 16;
    let mut cfg = SimConfig::new(
        n,
        KernelSet::coagulation_only(CoagKernel::additive(0.5)),
        0.005,
        1.0,
    );
    cfg.grid = Grid::new(1.0, 8).unwrap();
    cfg.diffusion = DiffusionProfile::Alternating {
        odd: 1.0,
        even: 0.3,
    };
    cfg.initial = InitialData {
        sizes: SizeProfile::Exponential {
            mass: 1.0,
            mean: 2.0,
        },
        space: SpaceProfile::Cosine {
            amplitude: 0.3,
            mode: 2,
        },
    };
    cfg.tracked_sizes = vec![1, 2, 5];
    let traj = run(&cfg).unwrap();
    let reports = l1_terms_report(&traj, &cfg.kernels, &[1, 2, 5]).unwrap();
    for (r, t) in reports.iter().zip(&traj.last().terms) {
        assert_eq!(r.frag_loss.measured, 0.0);
        assert_eq!(r.frag_gain.measured, 0.0);
        assert!(r.reports().iter().all(|b| b.passed()));
        // The loss inequality is the balance identity with ∫c_i(T) dropped.
        assert!(
            (r.coag_loss.margin - t.amount).abs() < 1e-10,
            "size {}",
            r.size
        );
    }
}

#[test]
fn l1_bounds_with_fragmentation() {
    let n = 16;
    let frag = FragSpec::binary_uniform(
        n,
        BreakupRate {
            c: 0.5,
            exponent: 1.0,
        },
    );
    let mut cfg = SimConfig::new(
        n,
        KernelSet::with_frag(CoagKernel::constant(1.0), frag),
        0.005,
        1.0,
    );
    cfg.tracked_sizes = vec![1, 4];
    let traj = run(&cfg).unwrap();
    let reports = l1_terms_report(&traj, &cfg.kernels, &[1, 4]).unwrap();
    for r in &reports {
        assert!(r.reports().iter().all(|b| b.passed()), "{:?}", r);
    }
    assert!(l1_terms_report(&traj, &cfg.kernels, &[3]).is_err());
}

#[test]
fn tightness_for_conserving_and_gelling_kernels() {
    let ks = [16, 64, 256];
    let mut cfg = SimConfig::new(
        256,
        KernelSet::coagulation_only(CoagKernel::constant(1.0)),
        0.01,
        1.0,
    );
    cfg.sample_every = 10;
    cfg.store_snapshots = true;
    let traj = run(&cfg).unwrap();
    let devs: Vec<f64> = tightness_diagnostic(&traj, &ks)
        .unwrap()
        .iter()
        .map(|t| t.max_deviation)
        .collect();
    assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");

    cfg.kernels = KernelSet::coagulation_only(CoagKernel::multiplicative(1.0));
    cfg.mode = TruncationMode::NonConservative;
    cfg.t_final = 2.0;
    let traj = run(&cfg).unwrap();
    let last = tightness_diagnostic(&traj, &ks).unwrap().pop().unwrap();
    assert!(last.max_deviation > 0.1, "{}", last.max_deviation);

    assert_eq!(tightness_weight(16, 16), 1.0);
    assert_eq!(tightness_weight(16, 1), 0.0);
    assert!(tightness_diagnostic(&traj, &[1]).is_err());
}

#[test]
fn gelation_verdicts() {
    assert_eq!(
        gelation_verdict(&[0.0, 0.0, 0.0]),
        GelationVerdict::ConservationConsistent
    );
    assert_eq!(
        gelation_verdict(&[0.3, 0.1, 0.01]),
        GelationVerdict::ConservationConsistent
    );
    assert_eq!(
        gelation_verdict(&[0.2, 0.4, 0.42]),
        GelationVerdict::GelationConsistent
    );
    assert_eq!(
        gelation_verdict(&[0.2, 0.19, 0.3]),
        GelationVerdict::Inconclusive
    );
    assert_eq!(
        gelation_verdict(&[0.01, 0.011]),
        GelationVerdict::Inconclusive
    );

    let cfg = SimConfig::new(8, zero_kernel(), 0.05, 1.0);
    let scan = gelation_scan(&cfg, &[8, 16, 32]).unwrap();
    assert_eq!(scan.verdict, GelationVerdict::ConservationConsistent);
    assert!(scan.rows.iter().all(|r| r.loss == 0.0));
    assert!(gelation_scan(&cfg, &[16, 8]).is_err());
}
