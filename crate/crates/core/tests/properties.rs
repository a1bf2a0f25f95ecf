use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use qcrsim::hilbert::{populations, DensityMatrix, Level, SpaceDims};
use qcrsim::numerics::quadrature::{integrate, QuadratureSpec};
use qcrsim::params::DeviceParams;
use qcrsim::protocols::{fidelity_from_rates, optimal_drive, rpm_estimate, simulate_rpm};
use qcrsim::pulses::FlatTopPulse;
use qcrsim::qcr::{dynes_dos_reduced, iv_current, rate_function_f, JunctionParams};
use qcrsim::units::NS;

fn junction() -> JunctionParams {
    let p = DeviceParams::table1();
    JunctionParams::from_device(&p, &p.derive().unwrap())
}

#[test]
fn gap_integral_closed_form() {
    // ∫₀² n_S(x) dx = √3 for an ideal BCS density of states. The square-root
    // edge at x = 1 cannot be resolved below √(2ε) ≈ 2e-8 in double precision.
    let spec = QuadratureSpec::new(vec![0.0, 1.0, 2.0]).with_max_subdivisions(20_000);
    let q = integrate(|x| dynes_dos_reduced(x, 0.0), &spec).unwrap();
    assert!((q.value - 3f64.sqrt()).abs() < 5e-8, "{}", q.value);
}

#[test]
fn gap_edge_breakpoint_saves_work() {
    // Off-centre edge so bisection does not land on it by itself.
    let f = |x: f64| dynes_dos_reduced(x, 0.0);
    let spec = |bp: Vec<f64>| QuadratureSpec::new(bp).with_max_subdivisions(20_000);
    let with = integrate(f, &spec(vec![0.0, 1.0, 2.3])).unwrap();
    let without = integrate(f, &spec(vec![0.0, 2.3])).unwrap();
    let exact = (2.3f64 * 2.3 - 1.0).sqrt();
    assert!((with.value - exact).abs() < 5e-8);
    assert!((without.value - exact).abs() < 5e-8);
    assert!(with.subdivisions < without.subdivisions, "with {} vs without {}", with.subdivisions, without.subdivisions);
}

fn diagonal_state(dims: SpaceDims, weights: &[f64]) -> DensityMatrix {
    let total: f64 = weights.iter().sum();
    let mut m = DMatrix::<Complex64>::zeros(dims.dim(), dims.dim());
    for (k, w) in weights.iter().enumerate() {
        let level = if k % 2 == 0 { Level::G } else { Level::E };
        let i = dims.index(level, k / 2);
        m[(i, i)] = Complex64::new(w / total, 0.0);
    }
    DensityMatrix::new(dims, m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn envelope_bounded_and_monotone_on_edges(
        amp in 0.0f64..1e9,
        tau_ns in 5.0f64..500.0,
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        let p = FlatTopPulse::new(amp, 10.0 * NS, tau_ns * NS).unwrap();
        let (s0, s1) = p.support();
        let (p0, p1) = p.plateau();
        let (x, y) = (a.min(b), a.max(b));
        let rise = |u: f64| s0 + u * (p0 - s0);
        let fall = |u: f64| p1 + u * (s1 - p1);
        prop_assert!(p.envelope(rise(x)) <= p.envelope(rise(y)));
        prop_assert!(p.envelope(fall(x)) >= p.envelope(fall(y)));
        for t in [rise(a), fall(b), 0.5 * (p0 + p1)] {
            let e = p.envelope(t);
            prop_assert!((0.0..=amp).contains(&e));
        }
    }

    #[test]
    fn dos_is_even_and_nonnegative(x in -10.0f64..10.0, g in 0.0f64..0.5) {
        let a = dynes_dos_reduced(x, g);
        prop_assert!(a >= 0.0);
        prop_assert_eq!(a, dynes_dos_reduced(-x, g));
    }

    #[test]
    fn iv_is_odd(v_mv in 0.0f64..2.0) {
        let jp = junction();
        let v = v_mv * 1e-3;
        let (ip, im) = (iv_current(v, &jp).unwrap(), iv_current(-v, &jp).unwrap());
        prop_assert!((ip + im).abs() <= 1e-9 * ip.abs().max(1e-18));
    }

    #[test]
    fn rate_function_nonnegative_and_nondecreasing(e1 in 0.0f64..4.0, e2 in 0.0f64..4.0) {
        let jp = junction();
        let (lo, hi) = (e1.min(e2) * jp.delta, e1.max(e2) * jp.delta);
        let (f_lo, f_hi) = (rate_function_f(lo, &jp).unwrap(), rate_function_f(hi, &jp).unwrap());
        prop_assert!(f_lo >= 0.0);
        prop_assert!(f_hi >= f_lo * (1.0 - 1e-9));
    }

    #[test]
    fn rpm_identity_without_f_population(weights in prop::collection::vec(0.01f64..1.0, 2..10)) {
        let dims = SpaceDims::new(5).unwrap();
        let rho = diagonal_state(dims, &weights);
        let truth = populations(&rho).unwrap().p_e;
        let (amps, leak) = simulate_rpm(&rho).unwrap();
        prop_assert!(!leak);
        prop_assert!((rpm_estimate(&amps).unwrap().p_e - truth).abs() < 1e-12);
    }

    #[test]
    fn fidelity_increases_with_kappa(k1 in 1e5f64..1e8, k2 in 1e5f64..1e8) {
        let (lo, hi) = (k1.min(k2), k1.max(k2));
        let f_lo = fidelity_from_rates(1.56e4, 8.85e4, lo).unwrap();
        let f_hi = fidelity_from_rates(1.56e4, 8.85e4, hi).unwrap();
        prop_assert!(f_hi >= f_lo);
        prop_assert!(f_hi < 1.0);
    }

    #[test]
    fn optimal_drive_closed_form(g in 1e7f64..1e9, ratio in 0.01f64..4.0) {
        let kappa = ratio * g;
        let d = optimal_drive(g, kappa).unwrap();
        let expect = (18.0 * g * g - kappa * kappa).sqrt() / 6.0;
        prop_assert!((d.omega - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn integration_is_linear(alpha in -5.0f64..5.0, beta in -5.0f64..5.0, w in 0.5f64..20.0) {
        let spec = QuadratureSpec::interval(0.0, 3.0);
        let f = |x: f64| (w * x).sin();
        let g = |x: f64| (-x * x).exp();
        let lhs = integrate(|x| alpha * f(x) + beta * g(x), &spec).unwrap();
        let (qf, qg) = (integrate(f, &spec).unwrap(), integrate(g, &spec).unwrap());
        let rhs = alpha * qf.value + beta * qg.value;
        let tol = lhs.error + alpha.abs() * qf.error + beta.abs() * qg.error + 1e-12;
        prop_assert!((lhs.value - rhs).abs() <= tol.max(1e-10 * rhs.abs()));
    }
}
