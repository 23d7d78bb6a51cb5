//! Regularized approximate-controllability synthesis.
//!
//! Γ = ∫_0^a (a-s)^{α-1} T_α(a-s) [Σ_j B_j B_j*] T_α*(a-s) ds is discretized
//! with the solver's own weights, so that the closed loop satisfies
//! u(a) = u_a - β R(β, Γ) p(u) exactly in discrete form.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::solver::{ControlInput, Solver, SolverConfig, Trajectory};
use crate::spectral::{ModelSpec, Propagators, SpectralState};
use crate::strategies::{AllChannels, ControlAllocation};

#[derive(Debug, Clone, PartialEq)]
enum GrammianKind {
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grammian {
    kind: GrammianKind,
    per_channel: Vec<Vec<f64>>,
    alpha: f64,
    horizon: f64,
}

impl Grammian {
    pub fn diagonal(entries: Vec<f64>, alpha: f64, horizon: f64) -> Result<Self> {
        if entries.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::Domain("Grammian entries must be finite and non-negative".into()));
        }
        Ok(Self {
            kind: GrammianKind::Diagonal(entries),
            per_channel: Vec::new(),
            alpha,
            horizon,
        })
    }

    /// Dense symmetric positive-semidefinite Grammian.
    pub fn dense(matrix: DMatrix<f64>, alpha: f64, horizon: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Domain("Grammian must be square".into()));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Grammian"));
        }
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > 1e-12 * matrix.amax().max(1.0) {
            return Err(Error::Domain(format!("Grammian is not symmetric (defect {asym:e})")));
        }
        Ok(Self {
            kind: GrammianKind::Dense(matrix),
            per_channel: Vec::new(),
            alpha,
            horizon,
        })
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            GrammianKind::Diagonal(d) => d.len(),
            GrammianKind::Dense(m) => m.nrows(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.kind, GrammianKind::Diagonal(_))
    }

    /// Diagonal entries γ_n.
    pub fn diag(&self) -> Vec<f64> {
        match &self.kind {
            GrammianKind::Diagonal(d) => d.clone(),
            GrammianKind::Dense(m) => m.diagonal().iter().copied().collect(),
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        match &self.kind {
            GrammianKind::Diagonal(d) => DMatrix::from_diagonal(&DVector::from_column_slice(d)),
            GrammianKind::Dense(m) => m.clone(),
        }
    }

    /// Diagonal of the single-channel Grammian Γ_{0,σ_j}, for diagnostics.
    pub fn channel_part(&self, j: usize) -> Option<&[f64]> {
        self.per_channel.get(j).map(Vec::as_slice)
    }

    pub fn apply(&self, v: &SpectralState) -> Result<SpectralState> {
        self.check(v)?;
        match &self.kind {
            GrammianKind::Diagonal(d) => v.hadamard(d),
            GrammianKind::Dense(m) => {
                let x = m * DVector::from_column_slice(v.coeffs());
                SpectralState::new(x.iter().copied().collect())
            }
        }
    }

    fn check(&self, v: &SpectralState) -> Result<()> {
        if v.truncation() != self.dim() {
            return Err(Error::TruncationMismatch {
                left: v.truncation(),
                right: self.dim(),
            });
        }
        Ok(())
    }
}

/// Grammian on the grid of `props`: γ_n = (Σ_j b_{jn}²) Σ_m W_{N,m,n} T_{N-m,n},
/// with W the per-mode convolution weights and T the sampled factor carried
/// by the control B* T_α(a - t) R p.
pub fn compute_grammian_on(model: &ModelSpec, props: &Propagators) -> Result<Grammian> {
    let channels = model.control_channels();
    if channels.is_empty() {
        return Err(Error::NoControlChannel);
    }
    let n_last = props.n_steps();
    let n = model.truncation();
    let mut kernel = vec![0.0; n];
    for m in 0..=n_last {
        let w = props.kernel_weights(n_last, m);
        for ((k, t), w) in kernel.iter_mut().zip(props.t_at(n_last - m)).zip(w) {
            *k += w * t;
        }
    }
    let per_channel: Vec<Vec<f64>> = channels
        .iter()
        .map(|ch| ch.factors().iter().zip(&kernel).map(|(b, k)| b * b * k).collect())
        .collect();
    let total: Vec<f64> = (0..n).map(|i| per_channel.iter().map(|c| c[i]).sum()).collect();
    let mut g = Grammian::diagonal(total, model.alpha().value(), model.horizon())?;
    g.per_channel = per_channel;
    Ok(g)
}

/// Grammian on a uniform grid with `n_steps` steps.
pub fn compute_grammian(model: &ModelSpec, n_steps: usize) -> Result<Grammian> {
    compute_grammian_on(model, &Propagators::new(model, n_steps)?)
}

/// (βI + Γ)^{-1} v.
pub fn resolvent_apply(g: &Grammian, beta: f64, v: &SpectralState) -> Result<SpectralState> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("beta = {beta} must be positive")));
    }
    g.check(v)?;
    if v.coeffs().iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("resolvent argument"));
    }
    match &g.kind {
        GrammianKind::Diagonal(d) => SpectralState::new(
            v.coeffs().iter().zip(d).map(|(x, gn)| x / (beta + gn)).collect(),
        ),
        GrammianKind::Dense(m) => {
            let shifted = m + DMatrix::identity(m.nrows(), m.ncols()) * beta;
            let chol = shifted
                .cholesky()
                .ok_or_else(|| Error::Domain("beta I + Grammian is not positive definite".into()))?;
            let x = chol.solve(&DVector::from_column_slice(v.coeffs()));
            SpectralState::new(x.iter().copied().collect())
        }
    }
}

/// Outer-loop settings for one β.
#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub model: Arc<ModelSpec>,
    pub target: SpectralState,
    pub beta: f64,
    pub outer_tol: f64,
    pub outer_max_iters: usize,
    pub allocation: Arc<dyn ControlAllocation>,
}

impl ControlProblem {
    pub fn new(model: Arc<ModelSpec>, target: SpectralState, beta: f64) -> Result<Self> {
        let cp = Self {
            model,
            target,
            beta,
            outer_tol: 1e-8,
            outer_max_iters: 100,
            allocation: Arc::new(AllChannels),
        };
        cp.validate()?;
        Ok(cp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::Domain(format!("beta = {} must be positive", self.beta)));
        }
        if !(self.outer_tol > 0.0) {
            return Err(Error::Domain(format!("outer_tol = {} must be positive", self.outer_tol)));
        }
        if self.outer_max_iters == 0 {
            return Err(Error::Domain("outer_max_iters must be positive".into()));
        }
        if self.target.truncation() != self.model.truncation() {
            return Err(Error::TruncationMismatch {
                left: self.target.truncation(),
                right: self.model.truncation(),
            });
        }
        if self.model.control_channels().is_empty() {
            return Err(Error::NoControlChannel);
        }
        Ok(())
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..self.clone() }
    }
}

/// Result of the control ↔ trajectory iteration for one β.
#[derive(Debug, Clone)]
pub struct ClosedLoopOutcome {
    pub trajectory: Trajectory,
    /// ‖u(a) - u_a‖ read off the trajectory.
    pub terminal_residual: f64,
    /// p(u) of the final trajectory.
    pub p: SpectralState,
    pub control_energy: f64,
    pub outer_iterations: usize,
    pub history: Vec<f64>,
    pub converged: bool,
}

/// Solver and Grammian shared by every β of a sweep.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    solver: Solver,
    grammian: Grammian,
}

impl ClosedLoop {
    pub fn new(model: Arc<ModelSpec>, cfg: SolverConfig) -> Result<Self> {
        let solver = Solver::new(model, cfg)?;
        let grammian = compute_grammian_on(solver.model(), solver.propagators())?;
        Ok(Self { solver, grammian })
    }

    pub fn solver(&self) -> &Solver {
        &self.solver
    }

    pub fn grammian(&self) -> &Grammian {
        &self.grammian
    }

    /// p(u) = u_a - S_α(a) u(0) - ∫_0^a (a-s)^{α-1} T_α(a-s) F(s, W_δ(s)) ds,
    /// with u(0) the nonlocal offset at t = a.
    pub fn residual_p(&self, target: &SpectralState, traj: &Trajectory) -> Result<SpectralState> {
        let props = self.solver.propagators();
        let last = props.n_steps();
        let offset = self.solver.nonlocal_offset(traj, traj.grid.horizon())?;
        let mut p: Vec<f64> = target
            .coeffs()
            .iter()
            .zip(offset.coeffs())
            .zip(props.s_at(last))
            .map(|((ua, o), s)| ua - s * o)
            .collect();
        for (m, f) in traj.forcing.iter().enumerate() {
            for ((pn, w), fv) in p.iter_mut().zip(props.kernel_weights(last, m)).zip(f.coeffs()) {
                *pn -= w * fv;
            }
        }
        SpectralState::new(p)
    }

    /// Received control on every channel:
    /// alloc_j(B_j* T_α(a - t_m) R(β, Γ) p).
    pub fn synthesize_control(
        &self,
        cp: &ControlProblem,
        traj: &Trajectory,
    ) -> Result<Vec<Vec<SpectralState>>> {
        let p = self.residual_p(&cp.target, traj)?;
        self.control_from_p(cp, &p)
    }

    fn control_from_p(&self, cp: &ControlProblem, p: &SpectralState) -> Result<Vec<Vec<SpectralState>>> {
        let rp = resolvent_apply(&self.grammian, cp.beta, p)?;
        let props = self.solver.propagators();
        let last = props.n_steps();
        let channels = self.solver.model().control_channels();
        let q = channels.len();
        let n = rp.truncation();
        Ok(channels
            .iter()
            .enumerate()
            .map(|(j, ch)| {
                (0..=last)
                    .map(|m| {
                        let steer: Vec<f64> = ch
                            .factors()
                            .iter()
                            .zip(props.t_at(last - m))
                            .zip(rp.coeffs())
                            .map(|((b, t), r)| b * t * r)
                            .collect();
                        let mut out = vec![0.0; n];
                        cp.allocation.allocate(j, q, &steer, &mut out);
                        SpectralState::from_vec_unchecked(out)
                    })
                    .collect()
            })
            .collect())
    }

    /// Outer iteration from the zero-control trajectory until the
    /// trajectory changes by less than `outer_tol`.
    pub fn run(&self, cp: &ControlProblem) -> Result<ClosedLoopOutcome> {
        cp.validate()?;
        if cp.target.truncation() != self.solver.model().truncation() {
            return Err(Error::TruncationMismatch {
                left: cp.target.truncation(),
                right: self.solver.model().truncation(),
            });
        }
        let mut traj = self.solver.solve(&ControlInput::None)?;
        let mut history = Vec::new();
        let mut converged = false;
        let mut iterations = 0;
        while iterations < cp.outer_max_iters {
            iterations += 1;
            let controls = self.synthesize_control(cp, &traj)?;
            let next = self.solver.solve(&ControlInput::Realized(controls))?;
            let change = next.sup_distance(&traj);
            history.push(change);
            traj = next;
            if change < cp.outer_tol {
                converged = true;
                break;
            }
            if !change.is_finite() {
                break;
            }
        }
        let p = self.residual_p(&cp.target, &traj)?;
        let terminal_residual = traj.terminal().distance(&cp.target)?;
        Ok(ClosedLoopOutcome {
            control_energy: control_energy(&traj),
            terminal_residual,
            p,
            outer_iterations: iterations,
            history,
            converged,
            trajectory: traj,
        })
    }

    pub fn solve(&self, cp: &ControlProblem) -> Result<ClosedLoopOutcome> {
        let out = self.run(cp)?;
        if !out.converged {
            return Err(Error::OuterDivergence {
                iterations: out.outer_iterations,
                last: out.history.last().copied().unwrap_or(f64::NAN),
                history: out.history,
            });
        }
        Ok(out)
    }

    /// ‖u(a) - u_a‖ without control.
    pub fn uncontrolled_gap(&self, target: &SpectralState) -> Result<f64> {
        self.solver.solve(&ControlInput::None)?.terminal().distance(target)
    }
}

/// √(Σ_j ∫_0^a ‖v_j(t)‖² dt) by the trapezoid rule.
pub fn control_energy(traj: &Trajectory) -> f64 {
    let dt = traj.grid.dt();
    let last = traj.grid.n_steps();
    let mut e = 0.0;
    for ch in &traj.controls {
        for (m, s) in ch.iter().enumerate() {
            let w = if m == 0 || m == last { 0.5 } else { 1.0 };
            e += w * dt * s.coeffs().iter().map(|x| x * x).sum::<f64>();
        }
    }
    e.sqrt()
}

/// Closed loop for one β; a non-converged outer loop is an error.
pub fn closed_loop_solve(cp: &ControlProblem, cfg: SolverConfig) -> Result<ClosedLoopOutcome> {
    ClosedLoop::new(cp.model.clone(), cfg)?.solve(cp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub betas: Vec<f64>,
    pub residuals: Vec<f64>,
    pub control_energies: Vec<f64>,
    pub converged: Vec<bool>,
    pub outer_iterations: Vec<usize>,
    /// ‖u(a) - u_a‖ without control.
    pub uncontrolled_gap: f64,
}

impl SweepReport {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|c| *c)
    }

    /// Residuals non-increasing as β decreases, up to `slack` per step.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.residuals.windows(2).all(|w| w[1] <= w[0] + slack)
    }

    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::NAN)
    }
}

fn check_betas(betas: &[f64]) -> Result<()> {
    if betas.is_empty() {
        return Err(Error::Domain("beta list is empty".into()));
    }
    if let Some(b) = betas.iter().find(|b| !(**b > 0.0) || !b.is_finite()) {
        return Err(Error::Domain(format!("beta = {b} must be positive")));
    }
    if betas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("betas must be strictly decreasing".into()));
    }
    Ok(())
}

impl ClosedLoop {
    /// Closed loop for each β, evaluated in parallel; results keep the
    /// order of `betas`.
    pub fn sweep(&self, template: &ControlProblem, betas: &[f64]) -> Result<SweepReport> {
        check_betas(betas)?;
        let outcomes: Vec<Result<ClosedLoopOutcome>> = betas
            .par_iter()
            .map(|&b| self.run(&template.with_beta(b)))
            .collect();
        let mut report = SweepReport {
            betas: betas.to_vec(),
            residuals: Vec::with_capacity(betas.len()),
            control_energies: Vec::with_capacity(betas.len()),
            converged: Vec::with_capacity(betas.len()),
            outer_iterations: Vec::with_capacity(betas.len()),
            uncontrolled_gap: self.uncontrolled_gap(&template.target)?,
        };
        for o in outcomes {
            match o {
                Ok(o) => {
                    report.residuals.push(o.terminal_residual);
                    report.control_energies.push(o.control_energy);
                    report.converged.push(o.converged);
                    report.outer_iterations.push(o.outer_iterations);
                }
                Err(Error::NonContraction { iterations, .. }) => {
                    report.residuals.push(f64::NAN);
                    report.control_energies.push(f64::NAN);
                    report.converged.push(false);
                    report.outer_iterations.push(iterations);
                }
                Err(e) => return Err(e),
            }
        }
        Ok(report)
    }
}

/// β-sweep of `template` on a fresh solver.
pub fn beta_sweep(template: &ControlProblem, cfg: SolverConfig, betas: &[f64]) -> Result<SweepReport> {
    ClosedLoop::new(template.model.clone(), cfg)?.sweep(template, betas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::{Constant, Identity};

    const GAMMA_EXP: f64 = 0.432_332_358_381_693_65; // (1 - e^{-2}) / 2

    fn single(alpha: f64) -> Arc<ModelSpec> {
        Arc::new(ModelSpec::linear_single_mode(alpha, 1.0, 1.0).unwrap())
    }

    fn one(x: f64) -> SpectralState {
        SpectralState::new(vec![x]).unwrap()
    }

    #[test]
    fn grammian_alpha_one() {
        let g = compute_grammian(&single(1.0), 2048).unwrap();
        assert!((g.diag()[0] - GAMMA_EXP).abs() < 1e-7);
    }

    #[test]
    fn grammian_zero_and_doubling() {
        let z = ModelSpec::builder(2, 0.5, 1.0)
            .control_channel(Arc::new(Identity), Arc::new(Constant::zero()))
            .build()
            .unwrap();
        assert_eq!(compute_grammian(&z, 16).unwrap().diag(), vec![0.0, 0.0]);
        let one_ch = ModelSpec::builder(2, 0.5, 1.0)
            .control_channel(Arc::new(Identity), Arc::new(Constant::identity()))
            .build()
            .unwrap();
        let two_ch = ModelSpec::builder(2, 0.5, 1.0)
            .control_channel(Arc::new(Identity), Arc::new(Constant::identity()))
            .control_channel(Arc::new(Identity), Arc::new(Constant::identity()))
            .build()
            .unwrap();
        let g1 = compute_grammian(&one_ch, 16).unwrap().diag();
        let g2 = compute_grammian(&two_ch, 16).unwrap();
        assert_eq!(g2.diag(), vec![2.0 * g1[0], 2.0 * g1[1]]);
        assert_eq!(g2.channel_part(0).unwrap(), g1.as_slice());
        let none = ModelSpec::builder(1, 0.5, 1.0).build().unwrap();
        assert_eq!(compute_grammian(&none, 16), Err(Error::NoControlChannel));
    }

    #[test]
    fn resolvent_examples() {
        let g = Grammian::diagonal(vec![GAMMA_EXP], 1.0, 1.0).unwrap();
        let r = resolvent_apply(&g, 0.1, &one(1.0)).unwrap();
        assert!((r.coeffs()[0] - 1.878_525_669_639_978).abs() < 1e-12);
        let z = Grammian::diagonal(vec![0.0], 1.0, 1.0).unwrap();
        assert_eq!(resolvent_apply(&z, 0.5, &one(3.0)).unwrap().coeffs()[0], 6.0);
        assert!(resolvent_apply(&g, 0.0, &one(1.0)).is_err());
        assert!(resolvent_apply(&g, 0.1, &SpectralState::zeros(2)).is_err());
    }

    #[test]
    fn dense_path_matches_diagonal() {
        let d = vec![0.4, 0.1, 0.02];
        let gd = Grammian::diagonal(d.clone(), 0.5, 1.0).unwrap();
        let gm = Grammian::dense(DMatrix::from_diagonal(&DVector::from_vec(d)), 0.5, 1.0).unwrap();
        let v = SpectralState::new(vec![1.0, -2.0, 0.5]).unwrap();
        let a = resolvent_apply(&gd, 0.01, &v).unwrap();
        let b = resolvent_apply(&gm, 0.01, &v).unwrap();
        assert!(a.distance(&b).unwrap() < 1e-12);
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(Grammian::dense(asym, 0.5, 1.0).is_err());
    }

    #[test]
    fn dense_resolvent_solves_system() {
        let b = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.3, 1.0, 0.1, 0.0, 0.4, 0.5]);
        let g = &b * b.transpose();
        let gm = Grammian::dense(g.clone(), 0.5, 1.0).unwrap();
        let v = SpectralState::new(vec![0.3, 1.0, -1.0]).unwrap();
        let x = resolvent_apply(&gm, 0.05, &v).unwrap();
        let back = (g + DMatrix::identity(3, 3) * 0.05) * DVector::from_column_slice(x.coeffs());
        for (u, w) in back.iter().zip(v.coeffs()) {
            assert!((u - w).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_loop_alpha_one_table() {
        let cl = ClosedLoop::new(single(1.0), SolverConfig::with_steps(2048)).unwrap();
        let cp = ControlProblem::new(single(1.0), one(1.0), 0.1).unwrap();
        let out = cl.solve(&cp).unwrap();
        assert!((out.terminal_residual - 0.187_852_4).abs() < 5e-7);
        let gamma = cl.grammian().diag()[0];
        assert!((out.terminal_residual - 0.1 / (0.1 + gamma)).abs() < 1e-12);
    }

    #[test]
    fn control_at_horizon() {
        // μ(a) = B* E_{α,α}(0) R p = R p / Γ(α)
        let m = single(0.5);
        let cl = ClosedLoop::new(m.clone(), SolverConfig::with_steps(32)).unwrap();
        let cp = ControlProblem::new(m, one(1.0), 0.1).unwrap();
        let traj = cl.solver().solve(&ControlInput::None).unwrap();
        let c = cl.synthesize_control(&cp, &traj).unwrap();
        let rp = 1.0 / (0.1 + cl.grammian().diag()[0]);
        assert!((c[0][32].coeffs()[0] - rp * 0.564_189_583_547_756_3).abs() < 1e-12);
    }

    #[test]
    fn p_zero_gives_zero_control() {
        let m = Arc::new(
            ModelSpec::builder(1, 0.5, 1.0)
                .u0(vec![1.0])
                .control_channel(Arc::new(Identity), Arc::new(Constant::identity()))
                .build()
                .unwrap(),
        );
        let cl = ClosedLoop::new(m.clone(), SolverConfig::with_steps(32)).unwrap();
        let free = cl.solver().solve(&ControlInput::None).unwrap();
        let cp = ControlProblem::new(m, free.terminal().clone(), 0.1).unwrap();
        let p = cl.residual_p(&cp.target, &free).unwrap();
        assert!(p.norm() < 1e-15);
        let out = cl.solve(&cp).unwrap();
        assert!(out.terminal_residual <= cp.outer_tol);
        assert!(out.control_energy < 1e-14);
    }

    #[test]
    fn heavy_regularization_leaves_gap() {
        let m = single(1.0);
        let cl = ClosedLoop::new(m.clone(), SolverConfig::with_steps(256)).unwrap();
        let cp = ControlProblem::new(m, one(1.0), 1e3).unwrap();
        let out = cl.solve(&cp).unwrap();
        let g = cl.grammian().diag()[0];
        assert!((out.terminal_residual - (1.0 - g / 1e3)).abs() < 1e-6);
    }

    #[test]
    fn sweep_rejects_bad_betas() {
        let m = single(1.0);
        let cp = ControlProblem::new(m, one(1.0), 0.1).unwrap();
        let cfg = SolverConfig::with_steps(16);
        assert!(beta_sweep(&cp, cfg, &[0.1, 0.1]).is_err());
        assert!(beta_sweep(&cp, cfg, &[0.1, -1.0]).is_err());
        assert!(beta_sweep(&cp, cfg, &[]).is_err());
    }
}
