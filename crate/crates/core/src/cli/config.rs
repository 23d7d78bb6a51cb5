//! Line-oriented experiment configuration.
//!
//! ```text
//! [model]
//! alpha = 0.5
//! state_delays = scaled_sine(1), scaled_sine(2)
//! nonlocal = 0.1 @ 0.25, 0.05 @ 0.75
//! ```
//!
//! `#` starts a comment. Unknown sections or keys are errors; a missing key
//! keeps its default. [`ExperimentConfig::to_text`] writes every key, and
//! parsing that text gives back the same configuration.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::registry::{split_descriptor_list, Descriptor, Registries};
use crate::solver::SolverConfig;
use crate::spectral::{ModelSpec, SpectralState};
use crate::strategies::ControlAllocation;

#[derive(Debug, Clone, PartialEq)]
pub enum Eigenvalues {
    /// λ_n = n².
    Squares,
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBlock {
    pub alpha: f64,
    pub horizon: f64,
    pub modes: usize,
    pub eigenvalues: Eigenvalues,
    pub semigroup_bound: f64,
    pub u0: Descriptor,
    pub v0: Descriptor,
    pub state_delays: Vec<Descriptor>,
    pub state_multipliers: Vec<Descriptor>,
    pub control_delays: Vec<Descriptor>,
    pub control_multipliers: Vec<Descriptor>,
    /// (c_k, t_k) pairs.
    pub nonlocal: Vec<(f64, f64)>,
    pub nonlinearity: Descriptor,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            horizon: 1.0,
            modes: 32,
            eigenvalues: Eigenvalues::Squares,
            semigroup_bound: 1.0,
            u0: Descriptor::bare("zero"),
            v0: Descriptor::bare("zero"),
            state_delays: Vec::new(),
            state_multipliers: Vec::new(),
            control_delays: Vec::new(),
            control_multipliers: Vec::new(),
            nonlocal: Vec::new(),
            nonlinearity: Descriptor::bare("zero"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlBlock {
    pub target: Descriptor,
    pub betas: Vec<f64>,
    pub allocation: Descriptor,
    pub outer_tol: f64,
    pub outer_max_iters: usize,
}

impl Default for ControlBlock {
    fn default() -> Self {
        Self {
            target: Descriptor::bare("zero"),
            betas: vec![1e-1, 1e-2, 1e-3, 1e-4],
            allocation: Descriptor::bare("all_channels"),
            outer_tol: 1e-8,
            outer_max_iters: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputBlock {
    pub dir: String,
    /// Uniform physical sample points on [0, π], endpoints included.
    pub x_points: usize,
    /// Significant digits in CSV numbers.
    pub precision: usize,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            x_points: 9,
            precision: 17,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub model: ModelBlock,
    pub solver: SolverConfig,
    pub control: ControlBlock,
    pub output: OutputBlock,
}

/// Text of the shipped heat-equation example.
pub const DEFAULT_CONFIG: &str = include_str!("../../configs/default.cfg");

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::ConfigSyntax {
        line,
        message: message.into(),
    }
}

fn value_err(key: &str, e: impl std::fmt::Display) -> Error {
    Error::ConfigValue {
        key: key.to_string(),
        message: e.to_string(),
    }
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| syntax(line, format!("{key}: '{}' is not a number", v.trim())))?;
    if !x.is_finite() {
        return Err(syntax(line, format!("{key}: '{}' is not finite", v.trim())));
    }
    Ok(x)
}

fn parse_usize(line: usize, key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .map_err(|_| syntax(line, format!("{key}: '{}' is not a non-negative integer", v.trim())))
}

fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| parse_f64(line, key, x)).collect()
}

fn parse_descriptor(line: usize, key: &str, v: &str) -> Result<Descriptor> {
    v.parse().map_err(|e| syntax(line, format!("{key}: {e}")))
}

fn parse_descriptors(line: usize, key: &str, v: &str) -> Result<Vec<Descriptor>> {
    split_descriptor_list(v).map_err(|e| syntax(line, format!("{key}: {e}")))
}

fn parse_nonlocal(line: usize, key: &str, v: &str) -> Result<Vec<(f64, f64)>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|pair| {
            let (c, t) = pair
                .split_once('@')
                .ok_or_else(|| syntax(line, format!("{key}: expected 'c @ t', got '{}'", pair.trim())))?;
            Ok((parse_f64(line, key, c)?, parse_f64(line, key, t)?))
        })
        .collect()
}

fn join<T: std::fmt::Display>(items: &[T], sep: &str) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut section: Option<String> = None;
        let mut seen = std::collections::BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| syntax(line, "unterminated section header"))?
                    .trim();
                if !["model", "solver", "control", "output"].contains(&name) {
                    return Err(syntax(line, format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| syntax(line, format!("expected 'key = value', got '{body}'")))?;
            let key = key.trim();
            let value = value.trim();
            let sec = section
                .as_deref()
                .ok_or_else(|| syntax(line, format!("key '{key}' appears before any section")))?;
            let full = format!("{sec}.{key}");
            if !seen.insert(full.clone()) {
                return Err(syntax(line, format!("duplicate key {full}")));
            }
            cfg.set(line, sec, key, value)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, line: usize, sec: &str, key: &str, v: &str) -> Result<()> {
        let m = &mut self.model;
        match (sec, key) {
            ("model", "alpha") => m.alpha = parse_f64(line, key, v)?,
            ("model", "horizon") => m.horizon = parse_f64(line, key, v)?,
            ("model", "modes") => m.modes = parse_usize(line, key, v)?,
            ("model", "eigenvalues") => {
                m.eigenvalues = if v == "squares" {
                    Eigenvalues::Squares
                } else {
                    Eigenvalues::List(parse_list(line, key, v)?)
                }
            }
            ("model", "semigroup_bound") => m.semigroup_bound = parse_f64(line, key, v)?,
            ("model", "u0") => m.u0 = parse_descriptor(line, key, v)?,
            ("model", "v0") => m.v0 = parse_descriptor(line, key, v)?,
            ("model", "state_delays") => m.state_delays = parse_descriptors(line, key, v)?,
            ("model", "state_multipliers") => m.state_multipliers = parse_descriptors(line, key, v)?,
            ("model", "control_delays") => m.control_delays = parse_descriptors(line, key, v)?,
            ("model", "control_multipliers") => m.control_multipliers = parse_descriptors(line, key, v)?,
            ("model", "nonlocal") => m.nonlocal = parse_nonlocal(line, key, v)?,
            ("model", "nonlinearity") => m.nonlinearity = parse_descriptor(line, key, v)?,
            ("solver", "n_steps") => self.solver.n_steps = parse_usize(line, key, v)?,
            ("solver", "picard_tol") => self.solver.picard_tol = parse_f64(line, key, v)?,
            ("solver", "picard_max_iters") => self.solver.picard_max_iters = parse_usize(line, key, v)?,
            ("solver", "kernel_rule") => {
                self.solver.kernel = v.parse().map_err(|e: Error| syntax(line, format!("{key}: {e}")))?
            }
            ("control", "target") => self.control.target = parse_descriptor(line, key, v)?,
            ("control", "betas") => self.control.betas = parse_list(line, key, v)?,
            ("control", "allocation") => self.control.allocation = parse_descriptor(line, key, v)?,
            ("control", "outer_tol") => self.control.outer_tol = parse_f64(line, key, v)?,
            ("control", "outer_max_iters") => self.control.outer_max_iters = parse_usize(line, key, v)?,
            ("output", "dir") => {
                if v.is_empty() {
                    return Err(syntax(line, "dir: empty path"));
                }
                self.output.dir = v.to_string()
            }
            ("output", "x_points") => self.output.x_points = parse_usize(line, key, v)?,
            ("output", "precision") => self.output.precision = parse_usize(line, key, v)?,
            _ => return Err(syntax(line, format!("unknown key '{key}' in [{sec}]"))),
        }
        Ok(())
    }

    /// Canonical text with every key.
    pub fn to_text(&self) -> String {
        let m = &self.model;
        let mut s = String::new();
        let eig = match &m.eigenvalues {
            Eigenvalues::Squares => "squares".to_string(),
            Eigenvalues::List(v) => join(v, ", "),
        };
        let nonlocal: Vec<String> = m.nonlocal.iter().map(|(c, t)| format!("{c} @ {t}")).collect();
        let _ = writeln!(s, "[model]");
        let _ = writeln!(s, "alpha = {}", m.alpha);
        let _ = writeln!(s, "horizon = {}", m.horizon);
        let _ = writeln!(s, "modes = {}", m.modes);
        let _ = writeln!(s, "eigenvalues = {eig}");
        let _ = writeln!(s, "semigroup_bound = {}", m.semigroup_bound);
        let _ = writeln!(s, "u0 = {}", m.u0);
        let _ = writeln!(s, "v0 = {}", m.v0);
        let _ = writeln!(s, "state_delays = {}", join(&m.state_delays, ", "));
        let _ = writeln!(s, "state_multipliers = {}", join(&m.state_multipliers, ", "));
        let _ = writeln!(s, "control_delays = {}", join(&m.control_delays, ", "));
        let _ = writeln!(s, "control_multipliers = {}", join(&m.control_multipliers, ", "));
        let _ = writeln!(s, "nonlocal = {}", nonlocal.join(", "));
        let _ = writeln!(s, "nonlinearity = {}", m.nonlinearity);
        let _ = writeln!(s, "\n[solver]");
        let _ = writeln!(s, "n_steps = {}", self.solver.n_steps);
        let _ = writeln!(s, "picard_tol = {}", self.solver.picard_tol);
        let _ = writeln!(s, "picard_max_iters = {}", self.solver.picard_max_iters);
        let _ = writeln!(s, "kernel_rule = {}", self.solver.kernel.name());
        let _ = writeln!(s, "\n[control]");
        let _ = writeln!(s, "target = {}", self.control.target);
        let _ = writeln!(s, "betas = {}", join(&self.control.betas, ", "));
        let _ = writeln!(s, "allocation = {}", self.control.allocation);
        let _ = writeln!(s, "outer_tol = {}", self.control.outer_tol);
        let _ = writeln!(s, "outer_max_iters = {}", self.control.outer_max_iters);
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "dir = {}", self.output.dir);
        let _ = writeln!(s, "x_points = {}", self.output.x_points);
        let _ = writeln!(s, "precision = {}", self.output.precision);
        s
    }

    /// First 16 hex digits of the SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Checks everything that does not need the model itself.
    pub fn validate(&self) -> Result<()> {
        self.solver.validate().map_err(|e| value_err("solver", e))?;
        let m = &self.model;
        if m.state_delays.len() != m.state_multipliers.len() {
            return Err(value_err(
                "model.state_multipliers",
                format!("{} delays but {} multipliers", m.state_delays.len(), m.state_multipliers.len()),
            ));
        }
        if m.control_delays.len() != m.control_multipliers.len() {
            return Err(value_err(
                "model.control_multipliers",
                format!("{} delays but {} multipliers", m.control_delays.len(), m.control_multipliers.len()),
            ));
        }
        if let Some(b) = self.control.betas.iter().find(|b| !(**b > 0.0)) {
            return Err(value_err("control.betas", format!("beta = {b} must be positive")));
        }
        if self.control.betas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(value_err("control.betas", "betas must be strictly decreasing"));
        }
        if !(self.control.outer_tol > 0.0) {
            return Err(value_err("control.outer_tol", "must be positive"));
        }
        if self.control.outer_max_iters == 0 {
            return Err(value_err("control.outer_max_iters", "must be positive"));
        }
        if !(1..=17).contains(&self.output.precision) {
            return Err(value_err("output.precision", "must be between 1 and 17"));
        }
        Ok(())
    }

    /// Builds the model, attributing every failure to a key.
    pub fn build_model(&self, reg: &Registries) -> Result<ModelSpec> {
        self.validate()?;
        let m = &self.model;
        let n = m.modes;
        let mut b = ModelSpec::builder(n, m.alpha, m.horizon).semigroup_bound(m.semigroup_bound);
        if let Eigenvalues::List(l) = &m.eigenvalues {
            b = b.eigenvalues(l.clone());
        }
        let shape = |key: &str, d: &Descriptor| -> Result<Vec<f64>> {
            reg.shapes
                .create(d)
                .and_then(|s| s.coefficients(n))
                .map_err(|e| value_err(key, e))
        };
        b = b.u0(shape("model.u0", &m.u0)?).v0(shape("model.v0", &m.v0)?);
        for (d, mu) in m.state_delays.iter().zip(&m.state_multipliers) {
            let delay = reg.delays.create(d).map_err(|e| value_err("model.state_delays", e))?;
            let mult = reg.multipliers.create(mu).map_err(|e| value_err("model.state_multipliers", e))?;
            b = b.state_channel(delay, mult);
        }
        for (d, mu) in m.control_delays.iter().zip(&m.control_multipliers) {
            let delay = reg.delays.create(d).map_err(|e| value_err("model.control_delays", e))?;
            let mult = reg.multipliers.create(mu).map_err(|e| value_err("model.control_multipliers", e))?;
            b = b.control_channel(delay, mult);
        }
        for &(c, t) in &m.nonlocal {
            b = b.nonlocal_term(c, t);
        }
        let f = reg
            .nonlinearities
            .create(&m.nonlinearity)
            .map_err(|e| value_err("model.nonlinearity", e))?;
        b = b.nonlinearity(f);
        b.build().map_err(|e| {
            let key = match &e {
                Error::DelayBound { kind: "state", .. } => "model.state_delays",
                Error::DelayBound { .. } => "model.control_delays",
                Error::Model(msg) if msg.contains("nonlocal") => "model.nonlocal",
                Error::Model(msg) if msg.contains("eigenvalue") => "model.eigenvalues",
                Error::Model(msg) if msg.contains("state multiplier") => "model.state_multipliers",
                Error::Model(msg) if msg.contains("control multiplier") => "model.control_multipliers",
                Error::Model(msg) if msg.contains("fractional order") => "model.alpha",
                Error::Model(msg) if msg.contains("horizon") => "model.horizon",
                Error::Model(msg) if msg.contains("semigroup bound") => "model.semigroup_bound",
                Error::Model(msg) if msg.contains("truncation") => "model.modes",
                _ => "model",
            };
            value_err(key, e)
        })
    }

    pub fn target(&self, reg: &Registries) -> Result<SpectralState> {
        let c = reg
            .shapes
            .create(&self.control.target)
            .and_then(|s| s.coefficients(self.model.modes))
            .map_err(|e| value_err("control.target", e))?;
        SpectralState::new(c).map_err(|e| value_err("control.target", e))
    }

    pub fn allocation(&self, reg: &Registries) -> Result<Arc<dyn ControlAllocation>> {
        reg.allocations
            .create(&self.control.allocation)
            .map_err(|e| value_err("control.allocation", e))
    }

    pub fn x_grid(&self) -> Vec<f64> {
        let k = self.output.x_points;
        match k {
            0 => Vec::new(),
            1 => vec![PI / 2.0],
            _ => (0..k)
                .map(|i| if i + 1 == k { PI } else { PI * i as f64 / (k - 1) as f64 })
                .collect(),
        }
    }
}
