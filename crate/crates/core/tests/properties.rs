use std::f64::consts::TAU;

use proptest::prelude::*;
use thinfilm_core::bounds::check_lemma41;
use thinfilm_core::energy::{bloch_deviation, energy_f, grad_f};
use thinfilm_core::mfd::{self, FieldDump};
use thinfilm_core::spectral::{frac_seminorm_sq, SpectralPlan};
use thinfilm_core::strayfield::{stray_energy_multiplier, stray_energy_zquadrature, ZResolvedMag};
use thinfilm_core::{make_profile, Magnetization, ReducedParams, ScalarField, TorusGrid};

/// Up to three Fourier modes with |k| ≤ 3.
fn modes() -> impl Strategy<Value = Vec<(i32, i32, f64, f64)>> {
    prop::collection::vec((-3i32..=3, -3i32..=3, -1.0f64..1.0, 0.0f64..TAU), 1..4)
}

fn trig(g: TorusGrid<f64>, m: &[(i32, i32, f64, f64)]) -> ScalarField<f64> {
    ScalarField::from_fn(g, |x, y| m.iter().map(|&(a, b, c, p)| c * (TAU * (a as f64 * x + b as f64 * y) + p).cos()).sum())
}

fn magnetization(g: TorusGrid<f64>, m: &[(i32, i32, f64, f64)]) -> Magnetization<f64> {
    let th = trig(g, m);
    Magnetization::from_fields(th.map(|v| v.sin()), ScalarField::zeros(g), th.map(|v| v.cos())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fft_round_trip(m in modes()) {
        let g = TorusGrid::new(16, 1.3).unwrap();
        let f = trig(g, &m);
        let plan = SpectralPlan::new(g);
        let back = plan.ifft(&plan.fft(&f));
        for (a, b) in f.values().iter().zip(back.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn seminorm_is_translation_invariant(m in modes(), shift in 0usize..16) {
        let g = TorusGrid::new(16, 1.0).unwrap();
        let f = trig(g, &m);
        // Shift by `shift` samples along x₁ and by one row along x₂.
        let mut v = f.values().to_vec();
        for row in v.chunks_mut(16) {
            row.rotate_left(shift);
        }
        v.rotate_left(16);
        let s0 = frac_seminorm_sq(&f, 0.5).unwrap();
        let s1 = frac_seminorm_sq(&ScalarField::new(g, v).unwrap(), 0.5).unwrap();
        prop_assert!(s0 >= 0.0);
        prop_assert!((s0 - s1).abs() <= 1e-10 * (1.0 + s0));
    }

    #[test]
    fn reduced_energy_is_affine_and_nonincreasing_in_lambda(m in modes(), l1 in 0.0f64..3.0, dl in 0.0f64..3.0) {
        let g = TorusGrid::new(32, 1.0).unwrap();
        let mag = magnetization(g, &m);
        let e = |l: f64| energy_f(&mag, &ReducedParams::new(0.1, l).unwrap(), None).unwrap().total;
        let (a, b, c) = (e(l1), e(l1 + dl), e(l1 + 2.0 * dl));
        prop_assert!(b <= a + 1e-12);
        prop_assert!((a - 2.0 * b + c).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn gradient_is_tangent(m in modes()) {
        let g = TorusGrid::new(32, 1.0).unwrap();
        let mag = magnetization(g, &m);
        let gr = grad_f(&mag, &ReducedParams::new(0.1, 1.0).unwrap(), None).unwrap();
        let v = gr.as_vector_field();
        for i in 0..g.len() {
            let (a, b) = (mag.at(i), v.at(i));
            prop_assert!((a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).abs() < 1e-9);
        }
    }

    #[test]
    fn modica_mortola_inequality(m in modes(), eps in 0.05f64..0.5) {
        let g = TorusGrid::new(64, 1.0).unwrap();
        prop_assert!(bloch_deviation(&magnetization(g, &m), eps).unwrap().value >= 0.0);
    }

    #[test]
    fn stray_paths_agree(m in modes(), t in 0.01f64..1.0) {
        let g = TorusGrid::new(16, 1.0).unwrap();
        let mag = magnetization(g, &m);
        let d = stray_energy_multiplier(&mag, t).unwrap();
        let z = stray_energy_zquadrature(&ZResolvedMag::z_constant(&mag, 3, t).unwrap());
        prop_assert!(d.surface_term >= 0.0 && d.volume_term >= 0.0);
        prop_assert!((d.surface_term + d.volume_term - d.total).abs() <= 1e-14 * d.total.abs());
        prop_assert!((d.total - z).abs() <= 1e-9 * z.abs());
    }

    #[test]
    fn mfd_round_trip(m in modes()) {
        let g = TorusGrid::new(8, 2.5).unwrap();
        let mag = magnetization(g, &m);
        let mut buf = Vec::new();
        mfd::write(&FieldDump::from_magnetization(&mag), &mut buf).unwrap();
        let back = mfd::read::<f64, _>(&buf[..]).unwrap().into_magnetization().unwrap();
        prop_assert_eq!(back, mag);
    }

    #[test]
    fn profile_is_odd_and_monotone(eps in 0.005f64..0.1, ratio in 2.0f64..50.0) {
        let p = make_profile(eps, ratio * eps).unwrap();
        let mut prev = -1.0;
        for k in -40..=40 {
            let x = k as f64 * p.cutoff() / 30.0;
            let v = p.eval(x);
            prop_assert!((v + p.eval(-x)).abs() < 1e-12);
            prop_assert!(v >= prev - 1e-14 && v.abs() <= 1.0);
            prev = v;
        }
    }

    #[test]
    fn lemma_slack_with_calibrated_constant(m in modes(), eps in 0.0625f64..1.0) {
        let g = TorusGrid::new(32, 1.0).unwrap();
        let f = trig(g, &m);
        let sup = f.max_abs();
        prop_assume!(sup > 1e-6);
        let mut f = f.map(|v| v / sup);
        let mean = f.mean();
        f = f.map(|v| v - mean);
        let r = check_lemma41(&f, eps, 2.0).unwrap();
        prop_assert!(r.slack >= 0.0, "slack {}", r.slack);
    }
}

#[test]
fn f32_backend_runs() {
    let g = TorusGrid::<f32>::new(16, 1.0).unwrap();
    let m = Magnetization::<f32>::from_fn(g, |x, _| {
        let c = (TAU as f32 * x).cos();
        [(1.0 - c * c).sqrt(), 0.0, c]
    })
    .unwrap();
    let e = energy_f(&m, &ReducedParams::new(0.1f32, 1.0).unwrap(), None).unwrap();
    assert!(e.total.is_finite());
}
