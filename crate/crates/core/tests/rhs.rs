use coagfrag::kernels::{
    BreakupRate, CoagFamily, CoagKernel, CollisionFragSpec, CollisionRates, DaughterLaw, FragSpec,
    KernelSet, Phi,
};
use coagfrag::rhs::{
    coag_gain_constant, eval_coag, eval_collision_frag, eval_frag, mass_flux, weak_form_pair,
    CellState, ReactionModel, TruncationMode,
};
use proptest::prelude::*;

fn family(idx: usize) -> CoagKernel {
    let f = match idx {
        0 => CoagFamily::Constant { c: 1.0 },
        1 => CoagFamily::Additive { c: 0.5 },
        2 => CoagFamily::Multiplicative { c: 0.3 },
        3 => CoagFamily::PowerSym {
            alpha: 0.2,
            beta: 0.7,
            c: 1.0,
        },
        4 => CoagFamily::SlowSublinear {
            phi: Phi::Log,
            c: 1.0,
        },
        _ => CoagFamily::SqrtProduct { c: 1.0 },
    };
    CoagKernel::new(f).unwrap()
}

fn kernel_set(fam: usize, variant: usize, n: usize) -> KernelSet {
    let coag = family(fam);
    match variant {
        0 => KernelSet::coagulation_only(coag),
        1 => KernelSet::with_frag(
            coag,
            FragSpec::binary_uniform(n, BreakupRate::constant(0.8)),
        ),
        2 => KernelSet::with_frag(
            coag,
            FragSpec::erosion(
                n,
                BreakupRate {
                    c: 0.2,
                    exponent: 1.0,
                },
            ),
        ),
        _ => {
            let q = CollisionFragSpec::new(
                CollisionRates::SqrtProduct { c: 0.6 },
                DaughterLaw::UniformInMass,
            )
            .unwrap();
            KernelSet::with_collision(coag, q)
        }
    }
}

fn rho(c: &[f64]) -> f64 {
    c.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum()
}

fn concentrations() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 2..=64)
}

proptest! {
    #[test]
    fn conservative_truncation_conserves_mass(c in concentrations(), fam in 0usize..6, variant in 0usize..4) {
        let n = c.len();
        let model = ReactionModel::new(&kernel_set(fam, variant, n), n, TruncationMode::Conservative).unwrap();
        let r = model.rates(&c);
        let scale: f64 = r.net().iter().enumerate().map(|(i, v)| (i + 1) as f64 * v.abs()).sum::<f64>() + 1.0;
        prop_assert!(mass_flux(&r.net()).abs() <= 1e-12 * scale);
        prop_assert_eq!(r.leak, 0.0);
    }

    #[test]
    fn non_conservative_truncation_only_loses_mass(c in concentrations(), fam in 0usize..6) {
        let n = c.len();
        let model = ReactionModel::new(&kernel_set(fam, 0, n), n, TruncationMode::NonConservative).unwrap();
        let r = model.rates(&c);
        let flux = mass_flux(&r.net());
        prop_assert!(flux <= 1e-12 * (1.0 + r.leak));
        prop_assert!((flux + r.leak).abs() <= 1e-10 * (1.0 + r.leak));
    }

    #[test]
    fn fragmentation_weak_part_is_nonpositive_for_increasing_weights(
        c in concentrations(),
        incs in prop::collection::vec(0.0f64..2.0, 64),
        erosion in any::<bool>(),
    ) {
        let n = c.len();
        let spec = if erosion {
            FragSpec::erosion(n, BreakupRate::constant(1.0))
        } else {
            FragSpec::binary_uniform(n, BreakupRate { c: 0.5, exponent: 0.5 })
        };
        let phi: Vec<f64> = incs[..n]
            .iter()
            .scan(0.0, |s, d| { *s += d; Some(*s) })
            .collect();
        let f = eval_frag(CellState::new(&c).unwrap(), &spec).unwrap();
        let weak: f64 = f.net().iter().enumerate().map(|(i, v)| (i + 1) as f64 * phi[i] * v).sum();
        let scale: f64 = f.loss.iter().enumerate().map(|(i, v)| (i + 1) as f64 * phi[i] * v).sum();
        prop_assert!(weak <= 1e-12 * (1.0 + scale));
    }

    #[test]
    fn gain_terms_bounded_by_mass(c in concentrations(), fam in 0usize..6) {
        let n = c.len();
        let cell = CellState::new(&c).unwrap();
        let r = rho(&c);
        let spec = FragSpec::binary_uniform(n, BreakupRate { c: 1.0, exponent: 1.0 });
        let f = eval_frag(cell, &spec).unwrap();
        let kernel = family(fam);
        let q = eval_coag(cell, &kernel, TruncationMode::Conservative).unwrap();
        for i in 1..=n {
            prop_assert!(f.gain[i - 1] <= spec.gain_constant(i) * r * (1.0 + 1e-12));
            prop_assert!(q.gain[i - 1] <= 0.5 * r * r * coag_gain_constant(&kernel, i) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn weak_form_matches_direct(
        c in concentrations(),
        phi in prop::collection::vec(-3.0f64..3.0, 64),
        fam in 0usize..6,
        variant in 0usize..4,
    ) {
        let n = c.len();
        let pair = weak_form_pair(CellState::new(&c).unwrap(), &kernel_set(fam, variant, n), &phi).unwrap();
        prop_assert!(pair.agrees(), "{:?}", pair);
    }

    #[test]
    fn zero_collision_rate_reduces_to_coagulation(c in concentrations(), fam in 0usize..6) {
        let cell = CellState::new(&c).unwrap();
        let kernel = family(fam);
        let q = CollisionFragSpec::new(CollisionRates::Constant { c: 0.0 }, DaughterLaw::UniformInMass).unwrap();
        let with = eval_collision_frag(cell, &kernel, &q, TruncationMode::Conservative).unwrap();
        let without = eval_coag(cell, &kernel, TruncationMode::Conservative).unwrap();
        prop_assert_eq!(&with.coag, &without);
        prop_assert!(with.collision.gain.iter().chain(&with.collision.loss).all(|&v| v == 0.0));
    }
}

/// Q_i^± for the constant kernel on a three-species cell, written out by hand.
#[test]
fn constant_kernel_terms_by_hand() {
    let c = [0.5, 0.25, 0.125];
    let q = eval_coag(
        CellState::new(&c).unwrap(),
        &CoagKernel::constant(2.0),
        TruncationMode::Conservative,
    )
    .unwrap();
    // Gains: ½·2·(pairs summing to i).
    assert_eq!(q.gain, vec![0.0, 0.25, 2.0 * 0.5 * 0.25]);
    // Losses: 2 c_i Σ_{j ≤ 3−i} c_j.
    assert_eq!(q.loss, vec![2.0 * 0.5 * 0.75, 2.0 * 0.25 * 0.5, 0.0]);
}

#[test]
fn negative_concentrations_are_rejected() {
    assert!(CellState::new(&[1.0, -1e-3]).is_err());
    assert!(CellState::new(&[f64::NAN]).is_err());
}
