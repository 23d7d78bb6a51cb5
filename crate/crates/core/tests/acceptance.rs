//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach the output.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use fracctl::cli::ExperimentConfig;
use fracctl::registry::Descriptor;
use fracctl::special::oracles::{s_factor_by_density, t_factor_by_density};
use fracctl::special::{gamma, ml_s, ml_t, WrightDensity};
use fracctl::strategies::{BoundedTanh, Constant, ConstantLag, Identity, Nonlinearity};
use fracctl::verification::density_checks;
use fracctl::{
    ClosedLoop, ControlInput, ControlProblem, FracOrder, ModelSpec, Registries, Solver,
    SolverConfig, SpectralState,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const CONFIGS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn load(name: &str) -> ExperimentConfig {
    let text = std::fs::read_to_string(format!("{CONFIGS}/{name}")).unwrap();
    ExperimentConfig::parse(&text).unwrap()
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed <= limit
}

// 1
fn density_suite() -> Verdict {
    let start = Instant::now();
    let checks = density_checks();
    let relevant: Vec<_> = checks
        .iter()
        .filter(|c| c.name.contains("normalization") || c.name.contains("nonnegative") || c.name.contains("closed_form"))
        .collect();
    let failed: Vec<&str> = relevant.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let worst_mass = relevant
        .iter()
        .filter(|c| c.name.contains("normalization"))
        .map(|c| c.measured_error)
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    verdict(
        failed.is_empty() && relevant.len() == 9 && within(elapsed, Duration::from_secs(10)),
        format!(
            "{} checks, worst |mass - 1| = {worst_mass:.2e}, failed {:?}, {:.2} s",
            relevant.len(),
            failed,
            elapsed.as_secs_f64()
        ),
    )
}

// 2
fn operator_bounds() -> Verdict {
    let mut worst_s = 0.0_f64;
    let mut worst_t = 0.0_f64;
    let mut attain = 0.0_f64;
    for alpha in [0.5, 0.75, 1.0] {
        let cap = 1.0 / gamma(alpha);
        for n in 1..=32 {
            let lam = (n * n) as f64;
            for k in 0..100 {
                let t = k as f64 / 99.0;
                let z = -lam * f64::powf(t, alpha);
                worst_s = worst_s.max(ml_s(alpha, z).unwrap().abs() - 1.0);
                worst_t = worst_t.max(ml_t(alpha, z).unwrap().abs() - cap);
            }
        }
        attain = attain
            .max((ml_s(alpha, 0.0).unwrap() - 1.0).abs())
            .max((ml_t(alpha, 0.0).unwrap() - cap).abs());
    }
    verdict(
        worst_s <= 0.0 && worst_t <= 0.0 && attain <= 1e-12,
        format!("max excess S {worst_s:.2e}, T {worst_t:.2e}; bound attained at t=0 to {attain:.2e}"),
    )
}

// 3
fn bridge_identity() -> Verdict {
    let mut rng = StdRng::seed_from_u64(20_250_101);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let alpha = rng.random_range(0.3..0.95);
        let lam = rng.random_range(0.1..20.0);
        let t: f64 = rng.random_range(0.05..1.0);
        let d = WrightDensity::new(FracOrder::new(alpha).unwrap()).unwrap();
        let z = -lam * t.powf(alpha);
        worst = worst
            .max((s_factor_by_density(&d, lam, t).unwrap() - ml_s(alpha, z).unwrap()).abs())
            .max((t_factor_by_density(&d, lam, t).unwrap() - ml_t(alpha, z).unwrap()).abs());
    }
    verdict(worst <= 1e-7, format!("20 triples, max |density route - series route| = {worst:.2e}"))
}

/// F = k·W on the single state channel; |u| ≤ 1 on the test problem.
#[derive(Debug)]
struct LinearFeedback(f64);

impl Nonlinearity for LinearFeedback {
    fn eval(&self, _t: f64, channels: &[Vec<f64>], out: &mut [f64]) {
        for (o, w) in out.iter_mut().zip(&channels[0]) {
            *o = self.0 * w;
        }
    }
    fn bounds(&self, n_channels: usize, _n_modes: usize) -> Vec<f64> {
        vec![self.0.abs(); n_channels]
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::new("linear_feedback", vec![self.0])
    }
}

fn sup_error_vs(traj: &fracctl::Trajectory, exact: impl Fn(f64) -> f64) -> f64 {
    traj.states
        .iter()
        .enumerate()
        .map(|(m, u)| (u.coeffs()[0] - exact(traj.grid.t(m))).abs())
        .fold(0.0, f64::max)
}

// 4
fn solver_oracle() -> Verdict {
    let start = Instant::now();
    let exact = |t: f64| ml_s(0.5, -t.sqrt()).unwrap();
    let direct = ModelSpec::builder(1, 0.5, 1.0).u0(vec![1.0]).build().unwrap();
    let e_direct = sup_error_vs(
        &Solver::new(Arc::new(direct), SolverConfig::with_steps(512)).unwrap().solve(&ControlInput::None).unwrap(),
        exact,
    );
    // the same relaxation with half the generator moved into the forcing
    let split = Arc::new(
        ModelSpec::builder(1, 0.5, 1.0)
            .eigenvalues(vec![0.5])
            .u0(vec![1.0])
            .state_channel(Arc::new(Identity), Arc::new(Constant::identity()))
            .nonlinearity(Arc::new(LinearFeedback(-0.5)))
            .build()
            .unwrap(),
    );
    let steps = [64usize, 128, 256, 512];
    let (mut end_errs, mut sup_errs) = (Vec::new(), Vec::new());
    for &n in &steps {
        let t = Solver::new(split.clone(), SolverConfig::with_steps(n)).unwrap().solve(&ControlInput::None).unwrap();
        end_errs.push((t.terminal().coeffs()[0] - exact(1.0)).abs());
        sup_errs.push(sup_error_vs(&t, exact));
    }
    let order = fitted_order(&steps, &end_errs);
    let sup_order = fitted_order(&steps, &sup_errs);
    let elapsed = start.elapsed();
    let fmt = |v: &[f64]| v.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>();
    verdict(
        e_direct < 1e-4 && end_errs[3] < 1e-4 && order >= 1.0 && within(elapsed, Duration::from_secs(30)),
        format!(
            "direct sup error {e_direct:.2e}; split generator at t = 1: errors {:?}, order {order:.2}; sup-norm errors {:?}, order {sup_order:.2} (first step); {:.2} s",
            fmt(&end_errs),
            fmt(&sup_errs),
            elapsed.as_secs_f64()
        ),
    )
}

/// Least-squares slope of log e against log dt.
fn fitted_order(steps: &[usize], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = steps.iter().map(|n| -(*n as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

// 5
fn classical_reduction() -> Verdict {
    let lam = [1.0, 4.0, 9.0];
    let u0 = [1.0, -0.5, 0.25];
    let amp = [0.3, 0.2, -0.1];
    let (kappa, lag) = (0.1, 0.25);
    let control = |t: f64| (3.0 * t).cos();

    let model = ModelSpec::builder(3, 1.0, 1.0)
        .u0(u0.to_vec())
        .state_channel(Arc::new(ConstantLag::new(lag).unwrap()), Arc::new(Constant::identity()))
        .control_channel(Arc::new(Identity), Arc::new(Constant::identity()))
        .nonlinearity(Arc::new(BoundedTanh::new(kappa).unwrap()))
        .build()
        .unwrap();
    let n = 512;
    let solver = Solver::new(Arc::new(model), SolverConfig::with_steps(n)).unwrap();
    let signal = vec![(0..=n)
        .map(|m| {
            let c = control(solver.grid().t(m));
            SpectralState::new(amp.iter().map(|a| a * c).collect()).unwrap()
        })
        .collect()];
    let traj = solver.solve(&ControlInput::Realized(signal)).unwrap();

    // RK4 with Hermite history for u' = -λu + κ tanh(u(max(t - ℓ, 0))) + b cos(3t)
    let sub = 16;
    let h = 1.0 / (n * sub) as f64;
    let lag_steps = (lag / h).round() as usize;
    let total = n * sub;
    let mut us: Vec<[f64; 3]> = vec![u0];
    let mut fs: Vec<[f64; 3]> = Vec::with_capacity(total + 1);
    let rhs = |t: f64, u: &[f64; 3], d: &[f64; 3]| -> [f64; 3] {
        std::array::from_fn(|k| -lam[k] * u[k] + kappa * d[k].tanh() + amp[k] * control(t))
    };
    let delayed = |us: &[[f64; 3]], fs: &[[f64; 3]], i: usize, half: bool| -> [f64; 3] {
        // state at node i - lag_steps (+ 1/2 step)
        if i < lag_steps {
            return u0;
        }
        let j = i - lag_steps;
        if !half {
            return us[j];
        }
        std::array::from_fn(|k| 0.5 * (us[j][k] + us[j + 1][k]) + h * (fs[j][k] - fs[j + 1][k]) / 8.0)
    };
    for i in 0..total {
        let t = i as f64 * h;
        let u = us[i];
        let d0 = delayed(&us, &fs, i, false);
        let k1 = rhs(t, &u, &d0);
        if fs.len() == i {
            fs.push(k1);
        }
        // node i+1 of the lagged history is known whenever i + 1 > lag_steps
        let dh = delayed(&us, &fs, i, true);
        let d1 = delayed(&us, &fs, i + 1, false);
        let step = |k: &[f64; 3], c: f64| -> [f64; 3] { std::array::from_fn(|q| u[q] + c * h * k[q]) };
        let k2 = rhs(t + 0.5 * h, &step(&k1, 0.5), &dh);
        let k3 = rhs(t + 0.5 * h, &step(&k2, 0.5), &dh);
        let k4 = rhs(t + h, &step(&k3, 1.0), &d1);
        us.push(std::array::from_fn(|q| u[q] + h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q])));
        let fnext = rhs(t + h, &us[i + 1], &delayed(&us, &fs, i + 1, false));
        fs.push(fnext);
    }
    let mut worst = 0.0_f64;
    for m in 0..=n {
        let r = us[m * sub];
        for k in 0..3 {
            worst = worst.max((traj.states[m].coeffs()[k] - r[k]).abs());
        }
    }
    verdict(worst <= 1e-4, format!("sup |mild - RK4| = {worst:.2e} over 3 modes, lag {lag}, 512 steps"))
}

// 6
fn regularized_residual_exactness() -> Verdict {
    let gamma_exact = (1.0 - (-2.0_f64).exp()) / 2.0;
    let model = Arc::new(ModelSpec::linear_single_mode(1.0, 1.0, 1.0).unwrap());
    let cl = ClosedLoop::new(model.clone(), SolverConfig::with_steps(2048)).unwrap();
    let target = SpectralState::new(vec![1.0]).unwrap();
    let free = cl.solver().solve(&ControlInput::None).unwrap();
    let p = cl.residual_p(&target, &free).unwrap().coeffs()[0];
    let g = cl.grammian().diag()[0];
    let quad_err = (g - gamma_exact).abs();
    let mut worst_formula = 0.0_f64;
    let mut worst_digits = 0.0_f64;
    let mut table = Vec::new();
    for beta in [1e-1, 1e-2, 1e-3, 1e-4] {
        let cp = ControlProblem::new(model.clone(), target.clone(), beta).unwrap();
        let out = cl.solve(&cp).unwrap();
        let r = out.terminal_residual;
        worst_formula = worst_formula.max((r - beta / (beta + g) * p.abs()).abs());
        let closed = beta / (beta + gamma_exact);
        worst_digits = worst_digits.max(((r - closed) / closed).abs());
        table.push(format!("{r:.7}"));
    }
    verdict(
        worst_formula <= 10.0 * quad_err && worst_digits < 5e-7,
        format!(
            "residuals {table:?}; |r - β/(β+γ_n)p_n| ≤ {worst_formula:.1e} (quadrature error {quad_err:.1e}); max rel. dev. from closed form {worst_digits:.1e}"
        ),
    )
}

// 7
fn nonlinear_sweep() -> Verdict {
    let start = Instant::now();
    let cfg = load("default.cfg");
    let reg = Registries::builtin();
    let model = Arc::new(cfg.build_model(&reg).unwrap());
    let cl = ClosedLoop::new(model.clone(), cfg.solver).unwrap();
    let mut cp = ControlProblem::new(model, cfg.target(&reg).unwrap(), cfg.control.betas[0]).unwrap();
    cp.allocation = cfg.allocation(&reg).unwrap();
    cp.outer_tol = cfg.control.outer_tol;
    cp.outer_max_iters = cfg.control.outer_max_iters;
    let r = cl.sweep(&cp, &cfg.control.betas).unwrap();
    let decades = (r.betas[0] / r.betas[r.betas.len() - 1]).log10();
    let ratio = r.final_residual() / r.uncontrolled_gap;
    let elapsed = start.elapsed();
    verdict(
        r.all_converged() && r.is_monotone(0.0) && decades >= 4.0 - 1e-9 && ratio < 0.01 && within(elapsed, Duration::from_secs(300)),
        format!(
            "residuals {:?} over {decades:.0} decades, gap {:.3e}, smallest/gap = {ratio:.2e}, {:.1} s",
            r.residuals.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>(),
            r.uncontrolled_gap,
            elapsed.as_secs_f64()
        ),
    )
}

// 8
fn mild_residual_all_configs() -> Verdict {
    let reg = Registries::builtin();
    let mut worst = 0.0_f64;
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["default.cfg", "linear_single_mode.cfg"] {
        let cfg = load(name);
        let model = Arc::new(cfg.build_model(&reg).unwrap());
        let cl = ClosedLoop::new(model.clone(), cfg.solver).unwrap();
        let tol = 2.0 * cfg.solver.picard_tol;
        let free = cl.solver().solve(&ControlInput::None).unwrap();
        let r_free = cl.solver().mild_residual(&free).unwrap();
        let mut cp = ControlProblem::new(model, cfg.target(&reg).unwrap(), *cfg.control.betas.last().unwrap()).unwrap();
        cp.allocation = cfg.allocation(&reg).unwrap();
        let steered = cl.solve(&cp).unwrap();
        let r_ctl = cl.solver().mild_residual(&steered.trajectory).unwrap();
        ok &= r_free <= tol && r_ctl <= tol;
        worst = worst.max(r_free).max(r_ctl);
        parts.push(format!("{name}: free {r_free:.1e}, controlled {r_ctl:.1e}"));
    }
    verdict(ok, format!("{} (limit 2e-10, worst {worst:.1e})", parts.join("; ")))
}

// 9
fn sweep_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let status = Command::new(env!("CARGO_BIN_EXE_fracctl"))
            .args(["sweep", "--config", &format!("{CONFIGS}/default.cfg"), "--out"])
            .arg(&out)
            .env_remove("FRACCTL_OUT_DIR")
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        std::fs::read(out.join("sweep.csv")).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    verdict(a == b && !a.is_empty(), format!("two runs, {} bytes each, identical = {}", a.len(), a == b))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("density normalization, positivity and closed form", density_suite),
        ("operator-family bounds on the heat modes", operator_bounds),
        ("density route matches Mittag-Leffler route", bridge_identity),
        ("relaxation oracle and grid-convergence order", solver_oracle),
        ("integer-order reduction against RK4", classical_reduction),
        ("regularized terminal residual formula", regularized_residual_exactness),
        ("nonlinear beta sweep drives residual below 1% of gap", nonlinear_sweep),
        ("mild-equation residual on shipped configs", mild_residual_all_configs),
        ("byte-identical sweep output", sweep_determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        if !v.pass {
            failures += 1;
        }
        println!("criterion {}: {} - {name}: {}", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
