use coagfrag::kernels::{BreakupRate, CoagFamily, CoagKernel, FragSpec, KernelSet};
use coagfrag::pde::{
    run, DiffusionProfile, DiffusionScheme, Grid, InitialData, SimConfig, SizeProfile, SpaceProfile,
};
use coagfrag::rhs::TruncationMode;
use coagfrag::Error;

/// Plain right-hand side of the conservative truncated system with
/// binary-uniform fragmentation, written without any of the library's helpers.
fn naive_rhs(c: &[f64], a: &dyn Fn(usize, usize) -> f64, b: f64, out: &mut [f64]) {
    let n = c.len();
    for i in 1..=n {
        let mut gain = 0.0;
        for j in 1..i {
            gain += 0.5 * a(j, i - j) * c[j - 1] * c[i - j - 1];
        }
        let mut loss = 0.0;
        for j in 1..=n - i {
            loss += a(i, j) * c[j - 1];
        }
        let mut fgain = 0.0;
        for k in i + 1..=n {
            fgain += b * 2.0 / (k - 1) as f64 * c[k - 1];
        }
        let floss = if i >= 2 { b * c[i - 1] } else { 0.0 };
        out[i - 1] = gain - c[i - 1] * loss + fgain - floss;
    }
}

fn naive_rk4(
    c0: &[f64],
    a: &dyn Fn(usize, usize) -> f64,
    b: f64,
    dt: f64,
    steps: usize,
) -> Vec<f64> {
    let n = c0.len();
    let mut c = c0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut y = vec![0.0; n];
    for _ in 0..steps {
        naive_rhs(&c, a, b, &mut k1);
        for i in 0..n {
            y[i] = c[i] + 0.5 * dt * k1[i];
        }
        naive_rhs(&y, a, b, &mut k2);
        for i in 0..n {
            y[i] = c[i] + 0.5 * dt * k2[i];
        }
        naive_rhs(&y, a, b, &mut k3);
        for i in 0..n {
            y[i] = c[i] + dt * k3[i];
        }
        naive_rhs(&y, a, b, &mut k4);
        for i in 0..n {
            c[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    c
}

#[test]
fn homogeneous_run_matches_plain_rk4() {
    let n = 24;
    let (dt, t) = (1e-3, 1.0);
    let frag = FragSpec::binary_uniform(n, BreakupRate::constant(0.3));
    let kernels = KernelSet::with_frag(CoagKernel::additive(1.0), frag);
    let mut cfg = SimConfig::new(n, kernels, dt, t);
    cfg.initial = InitialData {
        sizes: SizeProfile::Exponential {
            mass: 1.0,
            mean: 2.0,
        },
        space: SpaceProfile::Constant,
    };
    cfg.sample_every = 100;
    let traj = run(&cfg).unwrap();
    let got = traj.final_state().unwrap();
    let want = naive_rk4(traj.initial_state(), &|i, j| (i + j) as f64, 0.3, dt, 1000);
    for i in 0..n {
        let rel = (got[i] - want[i]).abs() / want[i].abs().max(1e-300);
        assert!(rel < 1e-8, "size {}: {} vs {}", i + 1, got[i], want[i]);
    }
}

#[test]
fn constant_kernel_monomers_match_closed_form() {
    let n = 64;
    let cfg = SimConfig::new(
        n,
        KernelSet::coagulation_only(CoagKernel::constant(1.0)),
        1e-3,
        1.0,
    );
    let traj = run(&cfg).unwrap();
    let c1 = traj.final_state().unwrap()[0];
    assert!((c1 - 4.0 / 9.0).abs() < 1e-5, "{c1}");

    let mut c0 = vec![0.0; n];
    c0[0] = 1.0;
    let fine = naive_rk4(&c0, &|_, _| 1.0, 0.0, 1e-5, 100_000);
    assert!((c1 - fine[0]).abs() < 1e-9, "{c1} vs {}", fine[0]);
}

#[test]
fn spatial_run_stays_positive_and_conserves_mass() {
    let n = 16;
    let frag = FragSpec::erosion(
        n,
        BreakupRate {
            c: 0.5,
            exponent: 1.0,
        },
    );
    let mut cfg = SimConfig::new(
        n,
        KernelSet::with_frag(CoagKernel::multiplicative(0.5), frag),
        2e-3,
        0.5,
    );
    cfg.grid = Grid::new(2.0, 40).unwrap();
    cfg.diffusion = DiffusionProfile::Interpolated {
        first: 1.0,
        last: 0.01,
    };
    cfg.initial = InitialData {
        sizes: SizeProfile::Monodisperse { mass: 2.0 },
        space: SpaceProfile::Bump {
            center: 0.5,
            width: 0.1,
            base: 0.0,
            height: 1.0,
        },
    };
    cfg.sample_every = 25;
    cfg.store_snapshots = true;
    for scheme in [
        DiffusionScheme::ImplicitEuler,
        DiffusionScheme::CrankNicolson,
    ] {
        cfg.scheme = scheme;
        let traj = run(&cfg).unwrap();
        let m0 = traj.first().mass;
        for s in &traj.samples {
            assert!(s.state.as_ref().unwrap().iter().all(|&v| v >= 0.0));
            assert!(
                (s.mass - m0).abs() <= 1e-12 * m0 + s.clip_mass,
                "{scheme:?} t={}",
                s.t
            );
            assert_eq!(s.leaked, 0.0);
        }
    }
}

#[test]
fn truncated_multiplicative_kernel_loses_mass() {
    let mut cfg = SimConfig::new(
        256,
        KernelSet::coagulation_only(CoagKernel::multiplicative(1.0)),
        2e-3,
        2.0,
    );
    cfg.mode = TruncationMode::NonConservative;
    cfg.sample_every = 100;
    let traj = run(&cfg).unwrap();
    let last = traj.last();
    let m0 = traj.first().mass;
    assert!(last.leaked / m0 > 0.1, "{}", last.leaked);
    assert!((last.mass + last.leaked - m0).abs() < 1e-9);
}

/// ∫c_i(T) − ∫c_i(0) equals the time integral of its gain minus loss terms.
#[test]
fn tracked_terms_balance_the_amount() {
    let n = 12;
    let frag = FragSpec::binary_uniform(n, BreakupRate::constant(1.0));
    let mut cfg = SimConfig::new(
        n,
        KernelSet::with_frag(CoagKernel::sqrt_product(1.0), frag),
        5e-3,
        0.5,
    );
    cfg.grid = Grid::new(1.0, 16).unwrap();
    cfg.initial = InitialData {
        sizes: SizeProfile::Exponential {
            mass: 1.0,
            mean: 1.5,
        },
        space: SpaceProfile::Cosine {
            amplitude: 0.5,
            mode: 1,
        },
    };
    cfg.diffusion = DiffusionProfile::Alternating {
        odd: 1.0,
        even: 0.2,
    };
    cfg.scheme = DiffusionScheme::CrankNicolson;
    cfg.tracked_sizes = vec![1, 3, 12];
    let traj = run(&cfg).unwrap();
    let (first, last) = (traj.first(), traj.last());
    for (t0, t1) in first.terms.iter().zip(&last.terms) {
        let change = t1.amount - t0.amount;
        let net = t1.coag_gain - t1.coag_loss + t1.frag_gain - t1.frag_loss;
        assert!(
            (change - net).abs() < 1e-12,
            "size {}: {change} vs {net}",
            t1.size
        );
    }
}

/// The cosine mode is an eigenvector of the discrete Neumann Laplacian, so
/// its decay under Strang-split implicit Euler is known exactly.
#[test]
fn pure_diffusion_matches_discrete_heat_mode() {
    let zero = CoagKernel::new(CoagFamily::Constant { c: 0.0 }).unwrap();
    let (dt, steps, len, cells, d) = (0.01, 50, 2.0, 32, 0.7);
    let mut cfg = SimConfig::new(1, KernelSet::coagulation_only(zero), dt, dt * steps as f64);
    cfg.grid = Grid::new(len, cells).unwrap();
    cfg.diffusion = DiffusionProfile::Constant { d };
    cfg.initial = InitialData {
        sizes: SizeProfile::Monodisperse { mass: 1.0 },
        space: SpaceProfile::Cosine {
            amplitude: 0.4,
            mode: 1,
        },
    };
    let traj = run(&cfg).unwrap();
    let h = len / cells as f64;
    let lam = 4.0 / (h * h) * (std::f64::consts::PI * h / (2.0 * len)).sin().powi(2);
    let factor = (1.0 / (1.0 + 0.5 * dt * d * lam)).powi(2 * steps);
    let got = traj.final_state().unwrap();
    for (m, v) in got.iter().enumerate() {
        let x = (m as f64 + 0.5) * h;
        let want = 1.0 + 0.4 * factor * (std::f64::consts::PI * x / len).cos();
        assert!((v - want).abs() < 1e-12, "cell {m}: {v} vs {want}");
    }
}

#[test]
fn stiff_reaction_reports_where_it_failed() {
    let mut cfg = SimConfig::new(
        8,
        KernelSet::coagulation_only(CoagKernel::constant(1e9)),
        0.1,
        1.0,
    );
    cfg.max_halvings = 3;
    let err = run(&cfg).unwrap_err();
    assert!(
        matches!(err.error, Error::Stiffness { step: 1, .. }),
        "{}",
        err.error
    );
}
