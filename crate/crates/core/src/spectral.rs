//! The truncated state space L²[0, π] in the sine eigenbasis
//! w_n(x) = √(2/π) sin(nx), with A w_n = -λ_n w_n.
//!
//! Every operator of the model is diagonal here: the heat semigroup
//! Q(t) acts as e^{-λ_n t}, S_α(t) as E_{α,1}(-λ_n t^α), T_α(t) as
//! E_{α,α}(-λ_n t^α), and the channel operators A_i, B_j as per-mode
//! multipliers.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use rayon::prelude::*;

use crate::kernels::{build_mode_kernel_weights, FracOrder, WeightTable};
use crate::special::{gamma, ml_s, ml_t};
use crate::strategies::{
    delay::Identity, DelayFunction, MultiplierProfile, Nonlinearity, Zero,
};

/// Coefficients (c_1, …, c_N) of a state on the sine basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    coeffs: Vec<f64>,
}

impl SpectralState {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Domain("a state needs at least one mode".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("state coefficients"));
        }
        Ok(Self { coeffs })
    }

    pub fn zeros(n: usize) -> Self {
        Self { coeffs: vec![0.0; n] }
    }

    pub(crate) fn from_vec_unchecked(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coeffs)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.truncation() != other.truncation() {
            return Err(Error::TruncationMismatch {
                left: self.truncation(),
                right: other.truncation(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::from_vec_unchecked(
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::from_vec_unchecked(
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_vec_unchecked(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.check(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check(other)?;
        Ok(dist(&self.coeffs, &other.coeffs))
    }

    /// Per-mode product with `factors`.
    pub fn hadamard(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.truncation() {
            return Err(Error::TruncationMismatch {
                left: self.truncation(),
                right: factors.len(),
            });
        }
        Ok(Self::from_vec_unchecked(
            self.coeffs.iter().zip(factors).map(|(c, f)| c * f).collect(),
        ))
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// u(x) = Σ c_n √(2/π) sin(nx) at each point of `x_grid`.
pub fn synthesize_physical(u: &SpectralState, x_grid: &[f64]) -> Vec<f64> {
    let s = (2.0 / PI).sqrt();
    x_grid
        .iter()
        .map(|&x| {
            // sin(0) and sin(nπ) are exactly zero on the boundary
            if x == 0.0 || x == PI {
                return 0.0;
            }
            u.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * ((i + 1) as f64 * x).sin())
                .sum::<f64>()
                * s
        })
        .collect()
}

/// A delay function and a per-mode multiplier profile.
#[derive(Debug, Clone)]
pub struct Channel {
    pub delay: Arc<dyn DelayFunction>,
    pub multiplier: Arc<dyn MultiplierProfile>,
    factors: Vec<f64>,
}

impl Channel {
    pub fn factors(&self) -> &[f64] {
        &self.factors
    }
}

/// Number of points on which the delay hypothesis is checked at build time.
pub const DELAY_CHECK_POINTS: usize = 1001;

/// Immutable description of one instance of the controlled system.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    alpha: FracOrder,
    horizon: f64,
    eigenvalues: Vec<f64>,
    big_m: f64,
    u0: SpectralState,
    v0: SpectralState,
    state_channels: Vec<Channel>,
    control_channels: Vec<Channel>,
    nonlocal: Vec<(f64, f64)>,
    nonlinearity: Arc<dyn Nonlinearity>,
    nonlinearity_bounds: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ModelBuilder {
    n_modes: usize,
    alpha: f64,
    horizon: f64,
    eigenvalues: Option<Vec<f64>>,
    big_m: f64,
    u0: Option<Vec<f64>>,
    v0: Option<Vec<f64>>,
    state_channels: Vec<(Arc<dyn DelayFunction>, Arc<dyn MultiplierProfile>)>,
    control_channels: Vec<(Arc<dyn DelayFunction>, Arc<dyn MultiplierProfile>)>,
    nonlocal: Vec<(f64, f64)>,
    nonlinearity: Arc<dyn Nonlinearity>,
}

impl ModelBuilder {
    pub fn eigenvalues(mut self, lambdas: Vec<f64>) -> Self {
        self.eigenvalues = Some(lambdas);
        self
    }

    pub fn semigroup_bound(mut self, big_m: f64) -> Self {
        self.big_m = big_m;
        self
    }

    pub fn u0(mut self, c: Vec<f64>) -> Self {
        self.u0 = Some(c);
        self
    }

    pub fn v0(mut self, c: Vec<f64>) -> Self {
        self.v0 = Some(c);
        self
    }

    pub fn state_channel(
        mut self,
        delay: Arc<dyn DelayFunction>,
        multiplier: Arc<dyn MultiplierProfile>,
    ) -> Self {
        self.state_channels.push((delay, multiplier));
        self
    }

    pub fn control_channel(
        mut self,
        delay: Arc<dyn DelayFunction>,
        multiplier: Arc<dyn MultiplierProfile>,
    ) -> Self {
        self.control_channels.push((delay, multiplier));
        self
    }

    pub fn nonlocal_term(mut self, c: f64, t: f64) -> Self {
        self.nonlocal.push((c, t));
        self
    }

    pub fn nonlinearity(mut self, f: Arc<dyn Nonlinearity>) -> Self {
        self.nonlinearity = f;
        self
    }

    pub fn build(self) -> Result<ModelSpec> {
        let n = self.n_modes;
        if n == 0 {
            return Err(Error::Model("truncation must be at least 1".into()));
        }
        let alpha = FracOrder::new(self.alpha).map_err(|e| Error::Model(e.to_string()))?;
        let a = self.horizon;
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Model(format!("horizon {a} must be positive and finite")));
        }
        if !(self.big_m >= 1.0) || !self.big_m.is_finite() {
            return Err(Error::Model(format!("semigroup bound M = {} must be >= 1", self.big_m)));
        }
        let eigenvalues = self
            .eigenvalues
            .unwrap_or_else(|| (1..=n).map(|k| (k * k) as f64).collect());
        if eigenvalues.len() != n {
            return Err(Error::Model(format!(
                "{} eigenvalues given for {n} modes",
                eigenvalues.len()
            )));
        }
        if let Some(l) = eigenvalues.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(Error::Model(format!("eigenvalue {l} must be positive and finite")));
        }
        let state = |v: Option<Vec<f64>>, what: &str| -> Result<SpectralState> {
            let v = v.unwrap_or_else(|| vec![0.0; n]);
            if v.len() != n {
                return Err(Error::Model(format!("{what} has {} modes, expected {n}", v.len())));
            }
            SpectralState::new(v).map_err(|e| Error::Model(format!("{what}: {e}")))
        };
        let u0 = state(self.u0, "u0")?;
        let v0 = state(self.v0, "v0")?;

        let resolve = |list: Vec<(Arc<dyn DelayFunction>, Arc<dyn MultiplierProfile>)>,
                       kind: &'static str|
         -> Result<Vec<Channel>> {
            list.into_iter()
                .enumerate()
                .map(|(i, (delay, multiplier))| {
                    check_delay(delay.as_ref(), kind, i + 1, a, DELAY_CHECK_POINTS)?;
                    let factors = multiplier
                        .factors(n)
                        .map_err(|e| Error::Model(format!("{kind} multiplier {}: {e}", i + 1)))?;
                    if factors.iter().any(|f| !f.is_finite()) {
                        return Err(Error::Model(format!("{kind} multiplier {} is not finite", i + 1)));
                    }
                    Ok(Channel {
                        delay,
                        multiplier,
                        factors,
                    })
                })
                .collect()
        };
        let state_channels = resolve(self.state_channels, "state")?;
        let control_channels = resolve(self.control_channels, "control")?;

        let mut prev = 0.0;
        for (k, &(c, t)) in self.nonlocal.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::Model(format!("nonlocal weight c_{} is not finite", k + 1)));
            }
            if !(t > prev && t < a) {
                return Err(Error::Model(format!(
                    "nonlocal times must satisfy 0 < t_1 < ... < t_m < a; t_{} = {t}",
                    k + 1
                )));
            }
            prev = t;
        }
        let nonlinearity_bounds = self.nonlinearity.bounds(state_channels.len(), n);
        Ok(ModelSpec {
            alpha,
            horizon: a,
            eigenvalues,
            big_m: self.big_m,
            u0,
            v0,
            state_channels,
            control_channels,
            nonlocal: self.nonlocal,
            nonlinearity: self.nonlinearity,
            nonlinearity_bounds,
        })
    }
}

/// Checks 0 ≤ δ(t) ≤ t on `points` uniform samples of [0, a].
pub fn check_delay(
    delay: &dyn DelayFunction,
    kind: &'static str,
    channel: usize,
    a: f64,
    points: usize,
) -> Result<()> {
    let points = points.max(2);
    for k in 0..points {
        let t = a * k as f64 / (points - 1) as f64;
        let v = delay.eval(t);
        // one ulp of slack for sin(t) vs t near zero
        if !v.is_finite() || v < 0.0 || v > t * (1.0 + 4.0 * f64::EPSILON) {
            return Err(Error::DelayBound {
                kind,
                channel,
                name: delay.descriptor().to_string(),
                t,
                value: v,
            });
        }
    }
    Ok(())
}

impl ModelSpec {
    pub fn builder(n_modes: usize, alpha: f64, horizon: f64) -> ModelBuilder {
        ModelBuilder {
            n_modes,
            alpha,
            horizon,
            eigenvalues: None,
            big_m: 1.0,
            u0: None,
            v0: None,
            state_channels: Vec::new(),
            control_channels: Vec::new(),
            nonlocal: Vec::new(),
            nonlinearity: Arc::new(Zero),
        }
    }

    /// Single-mode linear model with one identity control channel.
    pub fn linear_single_mode(alpha: f64, lambda: f64, horizon: f64) -> Result<Self> {
        Self::builder(1, alpha, horizon)
            .eigenvalues(vec![lambda])
            .control_channel(
                Arc::new(Identity),
                Arc::new(crate::strategies::Constant::identity()),
            )
            .build()
    }

    pub fn truncation(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn alpha(&self) -> FracOrder {
        self.alpha
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn semigroup_bound(&self) -> f64 {
        self.big_m
    }

    pub fn u0(&self) -> &SpectralState {
        &self.u0
    }

    pub fn v0(&self) -> &SpectralState {
        &self.v0
    }

    pub fn state_channels(&self) -> &[Channel] {
        &self.state_channels
    }

    pub fn control_channels(&self) -> &[Channel] {
        &self.control_channels
    }

    pub fn nonlocal_terms(&self) -> &[(f64, f64)] {
        &self.nonlocal
    }

    pub fn nonlinearity(&self) -> &Arc<dyn Nonlinearity> {
        &self.nonlinearity
    }

    pub fn nonlinearity_bounds(&self) -> &[f64] {
        &self.nonlinearity_bounds
    }

    /// Σ_i N_{δ_i}.
    pub fn f_bound_total(&self) -> f64 {
        self.nonlinearity_bounds.iter().sum()
    }

    /// True when F = 0 and h = 0, so the state equation is affine.
    pub fn is_linear(&self) -> bool {
        self.nonlinearity.is_zero() && self.nonlocal.is_empty()
    }

    fn check_state(&self, u: &SpectralState) -> Result<()> {
        if u.truncation() != self.truncation() {
            return Err(Error::TruncationMismatch {
                left: u.truncation(),
                right: self.truncation(),
            });
        }
        Ok(())
    }

    fn check_time(t: f64) -> Result<()> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("time {t} must be non-negative")));
        }
        Ok(())
    }

    pub fn semigroup_factors(&self, t: f64) -> Result<Vec<f64>> {
        Self::check_time(t)?;
        Ok(self.eigenvalues.iter().map(|l| (-l * t).exp()).collect())
    }

    /// Per-mode E_{α,1}(-λ_n t^α).
    pub fn s_factors(&self, t: f64) -> Result<Vec<f64>> {
        Self::check_time(t)?;
        let a = self.alpha.value();
        let ta = t.powf(a);
        self.eigenvalues.iter().map(|l| ml_s(a, -l * ta)).collect()
    }

    /// Per-mode E_{α,α}(-λ_n t^α).
    pub fn t_factors(&self, t: f64) -> Result<Vec<f64>> {
        Self::check_time(t)?;
        let a = self.alpha.value();
        let ta = t.powf(a);
        self.eigenvalues.iter().map(|l| ml_t(a, -l * ta)).collect()
    }

    pub fn apply_semigroup(&self, t: f64, u: &SpectralState) -> Result<SpectralState> {
        self.check_state(u)?;
        u.hadamard(&self.semigroup_factors(t)?)
    }

    pub fn apply_s_alpha(&self, t: f64, u: &SpectralState) -> Result<SpectralState> {
        self.check_state(u)?;
        u.hadamard(&self.s_factors(t)?)
    }

    pub fn apply_t_alpha(&self, t: f64, u: &SpectralState) -> Result<SpectralState> {
        self.check_state(u)?;
        u.hadamard(&self.t_factors(t)?)
    }

    pub fn apply_state_multiplier(&self, i: usize, u: &SpectralState) -> Result<SpectralState> {
        self.check_state(u)?;
        let ch = self.state_channels.get(i).ok_or(Error::IndexOutOfRange {
            what: "state channel",
            index: i,
            count: self.state_channels.len(),
        })?;
        u.hadamard(&ch.factors)
    }

    pub fn apply_control_multiplier(&self, j: usize, u: &SpectralState) -> Result<SpectralState> {
        self.check_state(u)?;
        let ch = self.control_channels.get(j).ok_or(Error::IndexOutOfRange {
            what: "control channel",
            index: j,
            count: self.control_channels.len(),
        })?;
        u.hadamard(&ch.factors)
    }

    /// Bound M α / Γ(1+α) on ‖T_α(t)‖.
    pub fn t_alpha_bound(&self) -> f64 {
        let a = self.alpha.value();
        self.big_m * a / gamma(1.0 + a)
    }

    /// Copy of the model with the nonlinearity replaced; channels and data
    /// are kept.
    pub fn with_nonlinearity(&self, f: Arc<dyn Nonlinearity>) -> Self {
        let mut m = self.clone();
        m.nonlinearity_bounds = f.bounds(m.state_channels.len(), m.truncation());
        m.nonlinearity = f;
        m
    }

    /// Copy of the model with new initial data.
    pub fn with_initial(&self, u0: SpectralState, v0: SpectralState) -> Result<Self> {
        self.check_state(&u0)?;
        self.check_state(&v0)?;
        let mut m = self.clone();
        m.u0 = u0;
        m.v0 = v0;
        Ok(m)
    }
}

/// How the convolution ∫_0^t (t-s)^{α-1} T_α(t-s) g(s) ds is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelRule {
    /// Full mode kernel τ^{α-1} E_{α,α}(-λτ^α) integrated exactly against
    /// the piecewise-linear interpolant of g.
    #[default]
    Exact,
    /// Only τ^{α-1} integrated exactly; E_{α,α}(-λτ^α) sampled at the nodes.
    Sampled,
}

impl KernelRule {
    pub fn name(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Sampled => "sampled",
        }
    }
}

impl std::str::FromStr for KernelRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" => Ok(Self::Exact),
            "sampled" => Ok(Self::Sampled),
            other => Err(Error::UnknownStrategy {
                kind: "kernel rule",
                name: other.into(),
                known: "exact, sampled".into(),
            }),
        }
    }
}

/// Per-mode convolution weights, indexed like [`WeightTable`].
#[derive(Debug, Clone)]
struct KernelTable {
    zero: Vec<f64>,
    diag: Vec<f64>,
    /// interior[k][mode], lag k ≥ 1
    interior: Vec<Vec<f64>>,
    /// first[n][mode], target n ≥ 1
    first: Vec<Vec<f64>>,
}

impl KernelTable {
    fn exact(model: &ModelSpec, n_steps: usize, dt: f64) -> Result<Self> {
        let per_mode = model
            .eigenvalues()
            .par_iter()
            .map(|&l| build_mode_kernel_weights(model.alpha(), l, n_steps, dt))
            .collect::<Result<Vec<_>>>()?;
        let by_lag = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
            (0..=n_steps).map(|k| (0..per_mode.len()).map(|i| f(i, k)).collect()).collect()
        };
        Ok(Self {
            zero: vec![0.0; per_mode.len()],
            diag: per_mode.iter().map(|w| w.diag).collect(),
            interior: by_lag(&|i, k| per_mode[i].interior[k]),
            first: by_lag(&|i, k| per_mode[i].first[k]),
        })
    }

    fn sampled(w: &WeightTable, t_table: &[Vec<f64>]) -> Self {
        let n_steps = w.max_steps();
        let scaled = |c: f64, t: &[f64]| -> Vec<f64> { t.iter().map(|t| c * t).collect() };
        let lag = |k: usize| if k == 0 { vec![0.0; t_table[0].len()] } else { scaled(w.lag_weight(k), &t_table[k]) };
        let first = |n: usize| if n == 0 { vec![0.0; t_table[0].len()] } else { scaled(w.first_weight(n), &t_table[n]) };
        Self {
            zero: vec![0.0; t_table[0].len()],
            diag: scaled(w.diagonal_weight(), &t_table[0]),
            interior: (0..=n_steps).map(lag).collect(),
            first: (0..=n_steps).map(first).collect(),
        }
    }

    fn weights(&self, n: usize, j: usize) -> &[f64] {
        if n == 0 {
            &self.zero
        } else if j == n {
            &self.diag
        } else if j == 0 {
            &self.first[n]
        } else {
            &self.interior[n - j]
        }
    }
}

/// Kernel tables on a uniform grid t_m = m dt, m = 0..=n_steps: the S_α and
/// T_α factors per lag and mode, the per-mode convolution weights and the
/// nonlocal factor t^{1-α}/Γ(2-α).
#[derive(Debug, Clone)]
pub struct Propagators {
    n_steps: usize,
    dt: f64,
    rule: KernelRule,
    s_table: Vec<Vec<f64>>,
    t_table: Vec<Vec<f64>>,
    weights: WeightTable,
    kernel: KernelTable,
    nonlocal_factor: Vec<f64>,
}

impl Propagators {
    pub fn new(model: &ModelSpec, n_steps: usize) -> Result<Self> {
        Self::with_rule(model, n_steps, KernelRule::default())
    }

    pub fn with_rule(model: &ModelSpec, n_steps: usize, rule: KernelRule) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::Domain("n_steps must be positive".into()));
        }
        let dt = model.horizon() / n_steps as f64;
        let times: Vec<f64> = (0..=n_steps).map(|m| m as f64 * dt).collect();
        let s_table = times.iter().map(|&t| model.s_factors(t)).collect::<Result<_>>()?;
        let t_table: Vec<Vec<f64>> = times.iter().map(|&t| model.t_factors(t)).collect::<Result<_>>()?;
        let weights = WeightTable::new(model.alpha(), n_steps, dt)?;
        let kernel = match rule {
            KernelRule::Exact => KernelTable::exact(model, n_steps, dt)?,
            KernelRule::Sampled => KernelTable::sampled(&weights, &t_table),
        };
        let nonlocal_factor = nonlocal_factors(model.alpha(), n_steps, dt)?;
        Ok(Self {
            n_steps,
            dt,
            rule,
            s_table,
            t_table,
            weights,
            kernel,
            nonlocal_factor,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn rule(&self) -> KernelRule {
        self.rule
    }

    /// E_{α,1}(-λ_n (m dt)^α) for every mode.
    pub fn s_at(&self, m: usize) -> &[f64] {
        &self.s_table[m]
    }

    /// E_{α,α}(-λ_n (lag dt)^α) for every mode.
    pub fn t_at(&self, lag: usize) -> &[f64] {
        &self.t_table[lag]
    }

    /// Bare product-trapezoidal weights of the power kernel.
    pub fn weights(&self) -> &WeightTable {
        &self.weights
    }

    /// Per-mode weight of node j in ∫_0^{t_n} (t_n-s)^{α-1} T_α(t_n-s) g(s) ds.
    pub fn kernel_weights(&self, n: usize, j: usize) -> &[f64] {
        self.kernel.weights(n, j)
    }

    /// (1/Γ(1-α)) ∫_0^{t_m} (t_m - s)^{-α} ds, equal to 1 for α = 1.
    pub fn nonlocal_factor(&self, m: usize) -> f64 {
        self.nonlocal_factor[m]
    }
}

/// Discrete (1/Γ(1-α)) ∫_0^t (t-s)^{-α} · 1 ds on the grid, through the
/// order-(1-α) product weights.
fn nonlocal_factors(alpha: FracOrder, n_steps: usize, dt: f64) -> Result<Vec<f64>> {
    if alpha.is_integer() {
        return Ok(vec![1.0; n_steps + 1]);
    }
    let comp = FracOrder::new(1.0 - alpha.value())?;
    let table = WeightTable::new(comp, n_steps, dt)?;
    let g = gamma(comp.value());
    Ok((0..=n_steps)
        .map(|m| (0..=m).map(|j| table.weight(m, j)).sum::<f64>() / g)
        .collect())
}
