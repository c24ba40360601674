use thinfilm_core::energy::energy_f;
use thinfilm_core::minimize::{minimize_F, MinimizeOptions, SeedDescriptor};
use thinfilm_core::{Magnetization, ReducedParams, TorusGrid, LAMBDA_C};

#[test]
fn constants_have_zero_energy_for_every_lambda() {
    let g = TorusGrid::new(32, 1.0).unwrap();
    for dir in [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]] {
        let m = Magnetization::constant(g, dir).unwrap();
        for l in [0.0, 1.0, 5.0] {
            assert_eq!(energy_f(&m, &ReducedParams::new(0.1, l).unwrap(), None).unwrap().total, 0.0);
        }
    }
}

#[test]
fn subcritical_minimum_is_constant() {
    let g = TorusGrid::x2_invariant(512, 1.0).unwrap();
    let r = minimize_F(&ReducedParams::new(0.03, 0.5 * LAMBDA_C).unwrap(), &g, &MinimizeOptions::default(), None).unwrap();
    assert_eq!(r.breakdown.total, 0.0);
    assert!(matches!(r.seed_id, SeedDescriptor::Constant { .. }));
}

#[test]
fn supercritical_minimum_has_walls() {
    let g = TorusGrid::x2_invariant(512, 1.0).unwrap();
    let r = minimize_F(&ReducedParams::new(0.03, 1.5 * LAMBDA_C).unwrap(), &g, &MinimizeOptions::default(), None).unwrap();
    assert!(r.breakdown.total < -0.1, "{}", r.breakdown.total);
    assert!(r.wall_length >= 3.9);
    assert!(r.seeds.iter().all(|s| s.total.is_none_or(|t| t >= r.breakdown.total)));
}
