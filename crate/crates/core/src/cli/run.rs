//! Subcommand drivers. Each writes one CSV into the output directory and
//! reports whether every run converged and every check passed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::config::ExperimentConfig;
use crate::control::{ClosedLoop, ControlProblem};
use crate::error::{Error, Result};
use crate::registry::Registries;
use crate::solver::{ControlInput, Solver};
use crate::spectral::synthesize_physical;
use crate::verification;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub ok: bool,
    pub file: PathBuf,
    pub summary: String,
}

/// Number formatting shared by every CSV.
#[derive(Debug, Clone, Copy)]
pub struct NumberFormat {
    digits: usize,
}

impl NumberFormat {
    pub fn new(significant_digits: usize) -> Self {
        Self {
            digits: significant_digits.clamp(1, 17),
        }
    }

    pub fn fmt(&self, x: f64) -> String {
        format!("{:.*e}", self.digits - 1, x)
    }
}

fn header(cfg: &ExperimentConfig) -> String {
    format!(
        "# config_hash={},alpha={},N={},n_steps={}\n",
        cfg.hash(),
        cfg.model.alpha,
        cfg.model.modes,
        cfg.solver.n_steps
    )
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::ConfigValue {
        key: "output.dir".into(),
        message: format!("{}: {e}", path.display()),
    }
}

fn write(out_dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let path = out_dir.join(name);
    fs::write(&path, body).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// Writes a diagnostics CSV for a run that stopped with an error.
fn diagnostic(cfg: &ExperimentConfig, out_dir: &Path, name: &str, err: &Error) -> Result<RunOutcome> {
    let mut s = header(cfg);
    s.push_str("status,message\n");
    let _ = writeln!(s, "error,\"{}\"", err.to_string().replace('"', "'"));
    let file = write(out_dir, name, &s)?;
    Ok(RunOutcome {
        ok: false,
        file,
        summary: format!("failed: {err}"),
    })
}

/// Uncontrolled trajectory: t, mode coefficients, physical samples.
pub fn run_simulate(cfg: &ExperimentConfig, reg: &Registries, out_dir: &Path) -> Result<RunOutcome> {
    let model = Arc::new(cfg.build_model(reg)?);
    let traj = match Solver::new(model, cfg.solver).and_then(|s| s.solve(&ControlInput::None)) {
        Ok(t) => t,
        Err(e @ (Error::NonContraction { .. } | Error::NonlinearityBound { .. } | Error::NonFinite(_))) => {
            return diagnostic(cfg, out_dir, "trajectory.csv", &e)
        }
        Err(e) => return Err(e),
    };
    let nf = NumberFormat::new(cfg.output.precision);
    let xs = cfg.x_grid();
    let mut s = header(cfg);
    let xl: Vec<String> = xs.iter().map(|x| nf.fmt(*x)).collect();
    let _ = writeln!(s, "# x_points={}", xl.join(","));
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=cfg.model.modes).map(|n| format!("mode_{n}")));
    cols.extend((1..=xs.len()).map(|k| format!("phys_{k}")));
    let _ = writeln!(s, "{}", cols.join(","));
    for (m, u) in traj.states.iter().enumerate() {
        let mut row = vec![nf.fmt(traj.grid.t(m))];
        row.extend(u.coeffs().iter().map(|c| nf.fmt(*c)));
        row.extend(synthesize_physical(u, &xs).iter().map(|v| nf.fmt(*v)));
        let _ = writeln!(s, "{}", row.join(","));
    }
    let file = write(out_dir, "trajectory.csv", &s)?;
    Ok(RunOutcome {
        ok: true,
        file,
        summary: format!(
            "simulated {} steps, |u(a)| = {:.6e}",
            cfg.solver.n_steps,
            traj.terminal().norm()
        ),
    })
}

fn control_problem(cfg: &ExperimentConfig, reg: &Registries) -> Result<(ClosedLoop, ControlProblem)> {
    let target = cfg.target(reg)?;
    let allocation = cfg.allocation(reg)?;
    let model = Arc::new(cfg.build_model(reg)?);
    let cl = ClosedLoop::new(model.clone(), cfg.solver)?;
    let beta = *cfg.control.betas.last().ok_or_else(|| Error::ConfigValue {
        key: "control.betas".into(),
        message: "at least one beta is required".into(),
    })?;
    let cp = ControlProblem {
        model,
        target,
        beta,
        outer_tol: cfg.control.outer_tol,
        outer_max_iters: cfg.control.outer_max_iters,
        allocation,
    };
    cp.validate()?;
    Ok((cl, cp))
}

/// Closed-loop control for the smallest configured β: t and the received
/// control per channel and mode, then the terminal residual.
pub fn run_synthesize(cfg: &ExperimentConfig, reg: &Registries, out_dir: &Path) -> Result<RunOutcome> {
    let (cl, cp) = control_problem(cfg, reg)?;
    let out = match cl.run(&cp) {
        Ok(o) => o,
        Err(e @ (Error::NonContraction { .. } | Error::NonlinearityBound { .. } | Error::NonFinite(_))) => {
            return diagnostic(cfg, out_dir, "control.csv", &e)
        }
        Err(e) => return Err(e),
    };
    let nf = NumberFormat::new(cfg.output.precision);
    let traj = &out.trajectory;
    let mut s = header(cfg);
    let _ = writeln!(s, "# beta={}", nf.fmt(cp.beta));
    let mut cols = vec!["t".to_string()];
    for j in 1..=traj.controls.len() {
        cols.extend((1..=cfg.model.modes).map(|n| format!("ch{j}_mode_{n}")));
    }
    let _ = writeln!(s, "{}", cols.join(","));
    for m in 0..traj.grid.len() {
        let mut row = vec![nf.fmt(traj.grid.t(m))];
        for ch in &traj.controls {
            row.extend(ch[m].coeffs().iter().map(|c| nf.fmt(*c)));
        }
        let _ = writeln!(s, "{}", row.join(","));
    }
    let _ = writeln!(
        s,
        "# terminal_residual={},converged={},outer_iterations={}",
        nf.fmt(out.terminal_residual),
        out.converged,
        out.outer_iterations
    );
    let file = write(out_dir, "control.csv", &s)?;
    Ok(RunOutcome {
        ok: out.converged,
        file,
        summary: format!(
            "beta = {:e}: terminal residual {:.6e}, control energy {:.6e}, {} outer iterations{}",
            cp.beta,
            out.terminal_residual,
            out.control_energy,
            out.outer_iterations,
            if out.converged { "" } else { " (not converged)" }
        ),
    })
}

/// β-sweep table: beta, residual, control_energy, converged.
pub fn run_sweep(cfg: &ExperimentConfig, reg: &Registries, out_dir: &Path) -> Result<RunOutcome> {
    let (cl, cp) = control_problem(cfg, reg)?;
    let report = cl.sweep(&cp, &cfg.control.betas)?;
    let nf = NumberFormat::new(cfg.output.precision);
    let mut s = header(cfg);
    let _ = writeln!(s, "# uncontrolled_gap={}", nf.fmt(report.uncontrolled_gap));
    s.push_str("beta,residual,control_energy,converged\n");
    for i in 0..report.betas.len() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            nf.fmt(report.betas[i]),
            nf.fmt(report.residuals[i]),
            nf.fmt(report.control_energies[i]),
            report.converged[i]
        );
    }
    let file = write(out_dir, "sweep.csv", &s)?;
    let ok = report.all_converged();
    Ok(RunOutcome {
        ok,
        file,
        summary: format!(
            "{} betas, final residual {:.6e}, uncontrolled gap {:.6e}{}",
            report.betas.len(),
            report.final_residual(),
            report.uncontrolled_gap,
            if ok { "" } else { ", some runs did not converge" }
        ),
    })
}

/// Kernel and special-function self-checks: check, measured_error,
/// tolerance, pass.
pub fn run_verify_kernels(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let checks = verification::run_all();
    let nf = NumberFormat::new(cfg.output.precision);
    let mut s = header(cfg);
    s.push_str("check,measured_error,tolerance,pass\n");
    for c in &checks {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            c.name,
            nf.fmt(c.measured_error),
            nf.fmt(c.tolerance),
            c.pass
        );
    }
    let file = write(out_dir, "verify_kernels.csv", &s)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    Ok(RunOutcome {
        ok: failed.is_empty(),
        file,
        summary: if failed.is_empty() {
            format!("{} checks passed", checks.len())
        } else {
            format!("{} of {} checks failed: {}", failed.len(), checks.len(), failed.join(", "))
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digit_format() {
        let nf = NumberFormat::new(17);
        assert_eq!(nf.fmt(0.1), "1.0000000000000001e-1");
        assert_eq!(nf.fmt(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(NumberFormat::new(3).fmt(1234.5), "1.23e3");
    }
}
