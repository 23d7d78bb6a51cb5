use fracctl::kernels::{
    build_singular_weights, caputo_derivative, frac_integral, rl_derivative, WeightTable,
};
use fracctl::special::gamma;
use fracctl::{FracOrder, SampledFunction};

fn grid(n: usize, f: impl Fn(f64) -> f64) -> SampledFunction {
    SampledFunction::from_fn(0.0, 1.0 / n as f64, n, f).unwrap()
}

#[test]
fn power_functions_integrate_in_closed_form() {
    // I^α t^k = Γ(k+1)/Γ(k+1+α) t^{k+α}; exact for k ∈ {0, 1}
    for a in [0.2, 0.5, 0.8, 1.0] {
        let o = FracOrder::new(a).unwrap();
        for k in [0, 1] {
            let f = grid(40, |t| t.powi(k));
            for t in [0.25_f64, 0.5, 1.0] {
                let want = gamma(k as f64 + 1.0) / gamma(k as f64 + 1.0 + a) * t.powf(k as f64 + a);
                let got = frac_integral(&f, o, t).unwrap();
                assert!((got - want).abs() < 1e-12, "α={a} k={k} t={t}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn smooth_integrand_converges_at_second_order() {
    let o = FracOrder::new(0.5).unwrap();
    // I^{1/2} t^2 at t=1 is Γ(3)/Γ(3.5)
    let want = 2.0 / gamma(3.5);
    let err = |n| (frac_integral(&grid(n, |t| t * t), o, 1.0).unwrap() - want).abs();
    let rate = (err(64) / err(128)).log2();
    assert!(rate > 1.9, "rate {rate}");
}

#[test]
fn weight_table_rows_match_direct_construction() {
    let o = FracOrder::new(0.35).unwrap();
    let dt = 0.01;
    let table = WeightTable::new(o, 100, dt).unwrap();
    for n in [1, 2, 7, 100] {
        let direct = build_singular_weights(o, n, dt).unwrap();
        for (j, w) in direct.weights.iter().enumerate() {
            assert_eq!(*w, table.weight(n, j));
        }
        // the weights integrate the constant exactly
        let want = (n as f64 * dt).powf(0.35) / 0.35;
        assert!((direct.total() - want).abs() < 1e-13 * want.max(1.0));
    }
}

#[test]
fn alpha_one_weights_are_trapezoidal() {
    let w = build_singular_weights(FracOrder::new(1.0).unwrap(), 4, 0.5).unwrap();
    assert_eq!(w.weights, vec![0.25, 0.5, 0.5, 0.5, 0.25]);
}

#[test]
fn derivatives_of_known_functions() {
    let o = FracOrder::new(0.5).unwrap();
    let f = grid(512, |t| t);
    // D^{1/2} t = t^{1/2}/Γ(3/2) for both conventions
    let want = 1.0 / gamma(1.5);
    assert!((caputo_derivative(&f, o, 1.0).unwrap() - want).abs() < 1e-4);
    assert!((rl_derivative(&f, o, 1.0).unwrap() - want).abs() < 1e-4);
    // Caputo kills constants, Riemann-Liouville does not
    let c = grid(512, |_| 1.0);
    assert!(caputo_derivative(&c, o, 1.0).unwrap().abs() < 1e-10);
    assert!((rl_derivative(&c, o, 1.0).unwrap() - 1.0 / gamma(0.5)).abs() < 1e-4);
}

#[test]
fn targets_off_grid_or_at_origin_are_rejected() {
    let o = FracOrder::new(0.5).unwrap();
    let f = grid(10, |t| t);
    assert!(frac_integral(&f, o, 0.0).is_err());
    assert!(frac_integral(&f, o, 0.55).is_err());
    assert!(frac_integral(&f, o, 2.0).is_err());
    assert!(SampledFunction::new(0.0, 0.1, vec![1.0, f64::NAN]).is_err());
}
