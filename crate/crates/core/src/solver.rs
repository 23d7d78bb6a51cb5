//! Mild solutions on a uniform grid.
//!
//! u(t) = S_α(t)[u0 + v0 + (t^{1-α}/Γ(2-α)) h] + ∫_0^t (t-s)^{α-1} T_α(t-s)[F(s, W_δ(s)) + V_σ(s)] ds
//!
//! with h = Σ_k c_k u(t_k). The memory integral uses product-trapezoidal
//! weights with T_α(t_n - t_j) folded into the integrand per node. The
//! solution is marched in time: at step n only the diagonal weight couples
//! u_n to itself (through delays with δ(t_n) > t_{n-1}), so each step is a
//! small fixed point of its own. An outer Picard loop updates h when
//! nonlocal terms are present.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::{dist, norm, KernelRule, ModelSpec, Propagators, SpectralState};

/// Uniform grid t_m = m·a/n_steps on [0, a].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || n_steps == 0 {
            return Err(Error::Domain(format!("bad grid: horizon {horizon}, {n_steps} steps")));
        }
        Ok(Self { horizon, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn t(&self, m: usize) -> f64 {
        if m == self.n_steps {
            self.horizon
        } else {
            m as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|m| self.t(m)).collect()
    }

    /// Grid index of `t`, which must lie on the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = t / self.dt();
        let m = x.round();
        if m < 0.0 || m as usize > self.n_steps || (x - m).abs() > 1e-9 * x.abs().max(1.0) {
            return Err(Error::GridMismatch {
                t,
                t0: 0.0,
                dt: self.dt(),
            });
        }
        Ok(m as usize)
    }

    /// Bracketing index k and weight θ with s = (1-θ) t_k + θ t_{k+1}.
    fn locate(&self, s: f64) -> (usize, f64) {
        let x = (s / self.dt()).clamp(0.0, self.n_steps as f64);
        let k = (x.floor() as usize).min(self.n_steps);
        let theta = x - k as f64;
        if theta <= 1e-12 || k == self.n_steps {
            (k, 0.0)
        } else {
            (k, theta)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub n_steps: usize,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub kernel: KernelRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_steps: 256,
            picard_tol: 1e-10,
            picard_max_iters: 200,
            kernel: KernelRule::Exact,
        }
    }
}

impl SolverConfig {
    pub fn with_steps(n_steps: usize) -> Self {
        Self {
            n_steps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 8 {
            return Err(Error::Domain(format!("n_steps = {} must be at least 8", self.n_steps)));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::Domain(format!("picard_tol = {} must be positive", self.picard_tol)));
        }
        if self.picard_max_iters == 0 {
            return Err(Error::Domain("picard_max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Control entering the state equation through B_j.
#[derive(Debug, Clone, Default)]
pub enum ControlInput {
    #[default]
    None,
    /// Received samples v_j(σ_j(t_m)) per channel and grid point.
    Realized(Vec<Vec<SpectralState>>),
    /// Signals μ_j(t_m) per channel; the solver samples μ_j(σ_j(t)) by
    /// linear interpolation.
    Signal(Vec<Vec<SpectralState>>),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    /// Passes over the grid (1 without nonlocal terms).
    pub outer_iterations: usize,
    /// Largest number of per-step fixed-point iterations.
    pub max_step_iterations: usize,
    /// Sup-norm change between successive grid passes.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<SpectralState>,
    /// Received control per channel, one sample per grid point.
    pub controls: Vec<Vec<SpectralState>>,
    /// F(t_m, W_δ(t_m)) per grid point.
    pub forcing: Vec<SpectralState>,
    pub stats: SolveStats,
}

impl Trajectory {
    pub fn terminal(&self) -> &SpectralState {
        self.states.last().expect("trajectory is never empty")
    }

    /// Linear interpolation of the states at time s ∈ [0, a].
    pub fn interpolate(&self, s: f64) -> SpectralState {
        SpectralState::from_vec_unchecked(interpolate(&self.grid, &self.states, s))
    }

    /// sup_m ‖u_m - w_m‖.
    pub fn sup_distance(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| dist(a.coeffs(), b.coeffs()))
            .fold(0.0, f64::max)
    }
}

fn interpolate(grid: &TimeGrid, states: &[SpectralState], s: f64) -> Vec<f64> {
    let (k, th) = grid.locate(s);
    if th == 0.0 {
        states[k].coeffs().to_vec()
    } else {
        states[k]
            .coeffs()
            .iter()
            .zip(states[k + 1].coeffs())
            .map(|(a, b)| (1.0 - th) * a + th * b)
            .collect()
    }
}

/// Reusable solver: model, kernel tables and iteration settings.
#[derive(Debug, Clone)]
pub struct Solver {
    model: Arc<ModelSpec>,
    props: Arc<Propagators>,
    cfg: SolverConfig,
    grid: TimeGrid,
}

impl Solver {
    pub fn new(model: Arc<ModelSpec>, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = TimeGrid::new(model.horizon(), cfg.n_steps)?;
        // (H5) once more on the grid the solver actually uses
        for (kind, channels) in [("state", model.state_channels()), ("control", model.control_channels())] {
            for (i, ch) in channels.iter().enumerate() {
                for m in 0..=cfg.n_steps {
                    let t = grid.t(m);
                    let v = ch.delay.eval(t);
                    if !v.is_finite() || v < 0.0 || v > t * (1.0 + 4.0 * f64::EPSILON) {
                        return Err(Error::DelayBound {
                            kind,
                            channel: i + 1,
                            name: ch.delay.descriptor().to_string(),
                            t,
                            value: v,
                        });
                    }
                }
            }
        }
        let props = Arc::new(Propagators::with_rule(&model, cfg.n_steps, cfg.kernel)?);
        Ok(Self {
            model,
            props,
            cfg,
            grid,
        })
    }

    pub fn model(&self) -> &Arc<ModelSpec> {
        &self.model
    }

    pub fn propagators(&self) -> &Arc<Propagators> {
        &self.props
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Per-channel received control samples for `input`.
    fn realize(&self, input: &ControlInput) -> Result<Vec<Vec<SpectralState>>> {
        let q = self.model.control_channels().len();
        let n = self.model.truncation();
        let len = self.grid.len();
        let check = |samples: &Vec<Vec<SpectralState>>| -> Result<()> {
            if samples.len() != q {
                return Err(Error::Model(format!("{} control channels supplied, model has {q}", samples.len())));
            }
            for ch in samples {
                if ch.len() != len {
                    return Err(Error::InsufficientData {
                        needed: len,
                        got: ch.len(),
                    });
                }
                if let Some(s) = ch.iter().find(|s| s.truncation() != n) {
                    return Err(Error::TruncationMismatch {
                        left: s.truncation(),
                        right: n,
                    });
                }
                if ch.iter().any(|s| s.coeffs().iter().any(|c| !c.is_finite())) {
                    return Err(Error::NonFinite("control samples"));
                }
            }
            Ok(())
        };
        match input {
            ControlInput::None => Ok(vec![vec![SpectralState::zeros(n); len]; q]),
            ControlInput::Realized(v) => {
                check(v)?;
                Ok(v.clone())
            }
            ControlInput::Signal(mu) => {
                check(mu)?;
                Ok(self
                    .model
                    .control_channels()
                    .iter()
                    .zip(mu)
                    .map(|(ch, signal)| {
                        (0..len)
                            .map(|m| {
                                let s = ch.delay.eval(self.grid.t(m));
                                SpectralState::from_vec_unchecked(interpolate(&self.grid, signal, s))
                            })
                            .collect()
                    })
                    .collect())
            }
        }
    }

    /// V_σ(t_m) = Σ_j B_j v_j(t_m).
    fn control_forcing(&self, realized: &[Vec<SpectralState>]) -> Vec<Vec<f64>> {
        let n = self.model.truncation();
        let mut out = vec![vec![0.0; n]; self.grid.len()];
        for (ch, samples) in self.model.control_channels().iter().zip(realized) {
            let b = ch.factors();
            for (o, s) in out.iter_mut().zip(samples) {
                for ((o, bn), c) in o.iter_mut().zip(b).zip(s.coeffs()) {
                    *o += bn * c;
                }
            }
        }
        out
    }

    /// h = Σ_k c_k u(t_k) with u interpolated on the grid.
    fn nonlocal_sum(&self, states: &[SpectralState]) -> Vec<f64> {
        let mut h = vec![0.0; self.model.truncation()];
        for &(c, tk) in self.model.nonlocal_terms() {
            for (hn, un) in h.iter_mut().zip(interpolate(&self.grid, states, tk)) {
                *hn += c * un;
            }
        }
        h
    }

    /// u0 + v0 + fac(t_m) h.
    fn offset(&self, m: usize, h: &[f64]) -> Vec<f64> {
        let fac = self.props.nonlocal_factor(m);
        self.model
            .u0()
            .coeffs()
            .iter()
            .zip(self.model.v0().coeffs())
            .zip(h)
            .map(|((u, v), h)| u + v + fac * h)
            .collect()
    }

    /// Delayed channels A_i u(δ_i(t_m)) given states up to index m, with
    /// `current` standing in for u_m.
    fn delayed_channels(&self, m: usize, states: &[SpectralState], current: &[f64]) -> Vec<Vec<f64>> {
        let t = self.grid.t(m);
        self.model
            .state_channels()
            .iter()
            .map(|ch| {
                let (k, th) = self.grid.locate(ch.delay.eval(t).min(t));
                let at = |idx: usize| -> &[f64] {
                    if idx >= m {
                        current
                    } else {
                        states[idx].coeffs()
                    }
                };
                let lo = at(k);
                let v: Vec<f64> = if th == 0.0 {
                    lo.to_vec()
                } else {
                    lo.iter().zip(at(k + 1)).map(|(a, b)| (1.0 - th) * a + th * b).collect()
                };
                v.iter().zip(ch.factors()).map(|(x, f)| x * f).collect()
            })
            .collect()
    }

    /// True when some delayed channel at t_m reaches into (t_{m-1}, t_m].
    fn couples_to_current(&self, m: usize) -> bool {
        if m == 0 || self.model.nonlinearity().is_zero() {
            return false;
        }
        let prev = self.grid.t(m - 1);
        let t = self.grid.t(m);
        self.model.state_channels().iter().any(|ch| {
            let (k, th) = self.grid.locate(ch.delay.eval(t).min(t));
            k >= m || (k + 1 == m && th > 0.0) || ch.delay.eval(t) > prev + 1e-12 * t
        })
    }

    fn eval_f(&self, m: usize, channels: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = self.model.truncation();
        let mut out = vec![0.0; n];
        if self.model.nonlinearity().is_zero() {
            return Ok(out);
        }
        let t = self.grid.t(m);
        self.model.nonlinearity().eval(t, channels, &mut out);
        let nf = norm(&out);
        let bound = self.model.f_bound_total();
        if !nf.is_finite() {
            return Err(Error::NonFinite("nonlinearity output"));
        }
        if nf > bound * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::NonlinearityBound { norm: nf, bound, t });
        }
        Ok(out)
    }

    /// One pass over the grid with a fixed nonlocal sum h.
    fn march(&self, h: &[f64], vforce: &[Vec<f64>]) -> Result<(Vec<SpectralState>, Vec<SpectralState>, usize)> {
        let n = self.model.truncation();
        let len = self.grid.len();
        let mut states: Vec<SpectralState> = Vec::with_capacity(len);
        // g_j = F_j + V_j
        let mut g: Vec<Vec<f64>> = Vec::with_capacity(len);
        let mut forcing: Vec<SpectralState> = Vec::with_capacity(len);
        let mut max_iters = 0;
        let inner_tol = self.cfg.picard_tol * 1e-2;
        for m in 0..len {
            let s = self.props.s_at(m);
            let mut base: Vec<f64> = self.offset(m, h).iter().zip(s).map(|(o, s)| o * s).collect();
            for (j, gj) in g.iter().enumerate() {
                for ((b, w), gv) in base.iter_mut().zip(self.props.kernel_weights(m, j)).zip(gj) {
                    *b += w * gv;
                }
            }
            let wd = self.props.kernel_weights(m, m);
            let diag = |b: &[f64], f: &[f64]| -> Vec<f64> {
                b.iter()
                    .zip(wd)
                    .zip(f.iter().zip(&vforce[m]))
                    .map(|((b, w), (f, v))| b + w * (f + v))
                    .collect()
            };
            let (u, f) = if self.couples_to_current(m) {
                // Damped iteration u ← u + ω(G(u) - u). With strong
                // derivative channels G can be expansive on high modes,
                // where plain substitution oscillates; ω halves whenever
                // the fixed-point residual grows.
                let mut u = states[m - 1].coeffs().to_vec();
                let mut iters = 0;
                let mut omega = 1.0_f64;
                let mut last = f64::INFINITY;
                loop {
                    iters += 1;
                    let f = self.eval_f(m, &self.delayed_channels(m, &states, &u))?;
                    let next = diag(&base, &f);
                    let r = dist(&next, &u);
                    if r < inner_tol {
                        u = next;
                        break;
                    }
                    if iters >= self.cfg.picard_max_iters || !r.is_finite() {
                        return Err(Error::NonContraction {
                            iterations: iters,
                            residual: r,
                        });
                    }
                    if r >= last {
                        omega = (0.5 * omega).max(1.0 / 1024.0);
                    }
                    last = r;
                    for (x, y) in u.iter_mut().zip(&next) {
                        *x += omega * (y - *x);
                    }
                }
                max_iters = max_iters.max(iters);
                let f = self.eval_f(m, &self.delayed_channels(m, &states, &u))?;
                (diag(&base, &f), f)
            } else if m == 0 {
                // every delay maps 0 to 0
                let u0 = base.clone();
                let f = self.eval_f(0, &self.delayed_channels(0, &states, &u0))?;
                (u0, f)
            } else {
                let placeholder = vec![0.0; n];
                let f = self.eval_f(m, &self.delayed_channels(m, &states, &placeholder))?;
                (diag(&base, &f), f)
            };
            if u.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("state"));
            }
            g.push(f.iter().zip(&vforce[m]).map(|(f, v)| f + v).collect());
            forcing.push(SpectralState::from_vec_unchecked(f));
            states.push(SpectralState::from_vec_unchecked(u));
        }
        Ok((states, forcing, max_iters))
    }

    pub fn solve(&self, control: &ControlInput) -> Result<Trajectory> {
        let realized = self.realize(control)?;
        let vforce = self.control_forcing(&realized);
        let mut stats = SolveStats::default();
        let n_grid = self.grid.len();

        if self.model.nonlocal_terms().is_empty() {
            let h = vec![0.0; self.model.truncation()];
            let (states, forcing, it) = self.march(&h, &vforce)?;
            stats.outer_iterations = 1;
            stats.max_step_iterations = it;
            return Ok(Trajectory {
                grid: self.grid,
                states,
                controls: realized,
                forcing,
                stats,
            });
        }

        // initial guess S_α(t)(u0 + v0)
        let mut prev: Vec<SpectralState> = (0..n_grid)
            .map(|m| {
                let s = self.props.s_at(m);
                SpectralState::from_vec_unchecked(
                    self.offset(m, &vec![0.0; s.len()])
                        .iter()
                        .zip(s)
                        .map(|(o, s)| o * s)
                        .collect(),
                )
            })
            .collect();
        loop {
            let h = self.nonlocal_sum(&prev);
            let (states, forcing, it) = self.march(&h, &vforce)?;
            stats.outer_iterations += 1;
            stats.max_step_iterations = stats.max_step_iterations.max(it);
            let change = states
                .iter()
                .zip(&prev)
                .map(|(a, b)| dist(a.coeffs(), b.coeffs()))
                .fold(0.0, f64::max);
            stats.history.push(change);
            if change < self.cfg.picard_tol {
                return Ok(Trajectory {
                    grid: self.grid,
                    states,
                    controls: realized,
                    forcing,
                    stats,
                });
            }
            if stats.outer_iterations >= self.cfg.picard_max_iters || !change.is_finite() {
                return Err(Error::NonContraction {
                    iterations: stats.outer_iterations,
                    residual: change,
                });
            }
            prev = states;
        }
    }

    /// sup_m ‖u_m - (RHS u)_m‖: the trajectory substituted back into the
    /// discrete mild-solution map, with F, h and the controls recomputed
    /// from the trajectory itself.
    pub fn mild_residual(&self, traj: &Trajectory) -> Result<f64> {
        if traj.grid != self.grid || traj.states.len() != self.grid.len() {
            return Err(Error::InsufficientData {
                needed: self.grid.len(),
                got: traj.states.len(),
            });
        }
        let vforce = self.control_forcing(&traj.controls);
        let h = self.nonlocal_sum(&traj.states);
        let g: Vec<Vec<f64>> = (0..self.grid.len())
            .map(|m| {
                let f = self.eval_f(m, &self.delayed_channels(m, &traj.states, traj.states[m].coeffs()))?;
                Ok(f.iter().zip(&vforce[m]).map(|(f, v)| f + v).collect())
            })
            .collect::<Result<_>>()?;
        let mut worst = 0.0_f64;
        for m in 0..self.grid.len() {
            let s = self.props.s_at(m);
            let mut rhs: Vec<f64> = self.offset(m, &h).iter().zip(s).map(|(o, s)| o * s).collect();
            for (j, gj) in g.iter().enumerate().take(m + 1) {
                for ((r, w), gv) in rhs.iter_mut().zip(self.props.kernel_weights(m, j)).zip(gj) {
                    *r += w * gv;
                }
            }
            worst = worst.max(dist(&rhs, traj.states[m].coeffs()));
        }
        Ok(worst)
    }

    /// u0 + v0 + (1/Γ(1-α)) ∫_0^t (t-s)^{-α} h ds at grid time t.
    pub fn nonlocal_offset(&self, traj: &Trajectory, t: f64) -> Result<SpectralState> {
        let m = self.grid.index_of(t)?;
        let h = self.nonlocal_sum(&traj.states);
        Ok(SpectralState::from_vec_unchecked(self.offset(m, &h)))
    }
}

/// Mild solution of `model` under `control`.
pub fn picard_solve(model: &ModelSpec, cfg: SolverConfig, control: &ControlInput) -> Result<Trajectory> {
    Solver::new(Arc::new(model.clone()), cfg)?.solve(control)
}

/// Nonlocal offset at grid time t for a trajectory of `model`.
pub fn nonlocal_offset(model: &ModelSpec, traj: &Trajectory, t: f64) -> Result<SpectralState> {
    let cfg = SolverConfig::with_steps(traj.grid.n_steps());
    Solver::new(Arc::new(model.clone()), cfg)?.nonlocal_offset(traj, t)
}

/// A_i u(δ_i(t)), with u linearly interpolated on the trajectory grid.
pub fn eval_delayed_state(model: &ModelSpec, traj: &Trajectory, i: usize, t: f64) -> Result<SpectralState> {
    let ch = model.state_channels().get(i).ok_or(Error::IndexOutOfRange {
        what: "state channel",
        index: i,
        count: model.state_channels().len(),
    })?;
    let s = ch.delay.eval(t);
    if !(0.0..=t * (1.0 + 4.0 * f64::EPSILON)).contains(&s) || t > traj.grid.horizon() {
        return Err(Error::DelayBound {
            kind: "state",
            channel: i + 1,
            name: ch.delay.descriptor().to_string(),
            t,
            value: s,
        });
    }
    traj.interpolate(s.min(t)).hadamard(ch.factors())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::{BoundedTanh, Constant, Identity, ScaledSine};

    fn relax(alpha: f64) -> ModelSpec {
        ModelSpec::builder(1, alpha, 1.0).u0(vec![1.0]).build().unwrap()
    }

    #[test]
    fn linear_relaxation_is_mittag_leffler() {
        let t = picard_solve(&relax(0.5), SolverConfig::with_steps(64), &ControlInput::None).unwrap();
        assert!((t.terminal().coeffs()[0] - 0.427_583_576_155_807).abs() < 1e-12);
    }

    #[test]
    fn zero_data_gives_zero_trajectory() {
        let m = ModelSpec::builder(3, 0.5, 1.0)
            .state_channel(Arc::new(ScaledSine::new(1.0).unwrap()), Arc::new(Constant::identity()))
            .nonlinearity(Arc::new(BoundedTanh::new(0.1).unwrap()))
            .nonlocal_term(0.1, 0.5)
            .build()
            .unwrap();
        let t = picard_solve(&m, SolverConfig::with_steps(16), &ControlInput::None).unwrap();
        assert!(t.states.iter().all(|s| s.coeffs().iter().all(|c| *c == 0.0)));
    }

    #[test]
    fn nonlocal_offset_with_constant_trajectory() {
        // one term c = 0.5 at t_1 = 0.5; α = 1/2: u0 + 0.5·w·t^{1/2}/Γ(3/2)
        let m = ModelSpec::builder(1, 0.5, 1.0).u0(vec![0.2]).nonlocal_term(0.5, 0.5).build().unwrap();
        let s = Solver::new(Arc::new(m), SolverConfig::with_steps(16)).unwrap();
        let traj = Trajectory {
            grid: *s.grid(),
            states: vec![SpectralState::new(vec![2.0]).unwrap(); 17],
            controls: vec![],
            forcing: vec![SpectralState::zeros(1); 17],
            stats: SolveStats::default(),
        };
        let off = s.nonlocal_offset(&traj, 1.0).unwrap();
        assert!((off.coeffs()[0] - (0.2 + 0.5 * 2.0 * 1.128_379_167_095_512_6)).abs() < 1e-12);
        assert!(s.nonlocal_offset(&traj, 0.03).is_err());
    }

    #[test]
    fn delayed_state_interpolates() {
        let m = ModelSpec::builder(1, 0.5, 1.0)
            .state_channel(Arc::new(ScaledSine::new(1.0).unwrap()), Arc::new(Constant::new(2.0)))
            .state_channel(Arc::new(Identity), Arc::new(Constant::identity()))
            .build()
            .unwrap();
        let grid = TimeGrid::new(1.0, 16).unwrap();
        // u(t) = 3t + 1 is reproduced exactly by linear interpolation
        let traj = Trajectory {
            grid,
            states: grid.times().iter().map(|t| SpectralState::new(vec![3.0 * t + 1.0]).unwrap()).collect(),
            controls: vec![],
            forcing: vec![],
            stats: SolveStats::default(),
        };
        let v = eval_delayed_state(&m, &traj, 0, 1.0).unwrap();
        assert!((v.coeffs()[0] - 2.0 * (3.0 * 1.0_f64.sin() + 1.0)).abs() < 1e-13);
        assert_eq!(eval_delayed_state(&m, &traj, 1, 0.5).unwrap().coeffs()[0], 2.5);
        assert_eq!(eval_delayed_state(&m, &traj, 0, 0.0).unwrap().coeffs()[0], 2.0);
        assert!(eval_delayed_state(&m, &traj, 2, 0.5).is_err());
    }

    #[test]
    fn residual_after_solve_is_small() {
        let m = ModelSpec::builder(4, 0.5, 1.0)
            .u0(vec![1.0, 0.5, 0.0, -0.25])
            .state_channel(Arc::new(Identity), Arc::new(Constant::identity()))
            .state_channel(Arc::new(ScaledSine::new(2.0).unwrap()), Arc::new(Constant::identity()))
            .nonlinearity(Arc::new(BoundedTanh::new(0.3).unwrap()))
            .nonlocal_term(0.2, 0.3)
            .build()
            .unwrap();
        let s = Solver::new(Arc::new(m), SolverConfig::with_steps(32)).unwrap();
        let t = s.solve(&ControlInput::None).unwrap();
        assert!(t.stats.outer_iterations > 1);
        assert!(s.mild_residual(&t).unwrap() < 2e-10);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::with_steps(4).validate().is_err());
        let mut c = SolverConfig::default();
        c.picard_tol = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn control_shape_checked() {
        let m = ModelSpec::linear_single_mode(0.5, 1.0, 1.0).unwrap();
        let s = Solver::new(Arc::new(m), SolverConfig::with_steps(8)).unwrap();
        assert!(s.solve(&ControlInput::Realized(vec![])).is_err());
        assert!(s.solve(&ControlInput::Realized(vec![vec![SpectralState::zeros(1); 3]])).is_err());
        assert!(s.solve(&ControlInput::Realized(vec![vec![SpectralState::zeros(1); 9]])).is_ok());
    }
}
