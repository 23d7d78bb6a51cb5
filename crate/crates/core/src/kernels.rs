//! Discrete fractional integrals and derivatives on uniform grids.
//!
//! All singular kernels (t-s)^{α-1} are discretized by product-trapezoidal
//! quadrature: the kernel is integrated exactly against the piecewise-linear
//! interpolant of the integrand. With t_n = n·dt the weights are
//!
//! w_{n,0} = c·((n-1)^{α+1} - (n-1-α) n^α)
//! w_{n,j} = c·((k+1)^{α+1} - 2k^{α+1} + (k-1)^{α+1}),  k = n-j, 1 ≤ j < n
//! w_{n,n} = c
//!
//! with c = dt^α / (α(α+1)). They sum to t_n^α/α.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_to_infinity, integrate_with_breaks, Tolerance};
use crate::special::gamma;

/// Fractional order α with 0 < α ≤ 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::Domain(format!("fractional order {alpha} not in (0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_integer(self) -> bool {
        self.0 == 1.0
    }
}

/// Uniformly sampled scalar function starting at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Domain(format!("step {dt} must be positive")));
        }
        if values.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("integrand sample"));
        }
        Ok(Self { t0, dt, values })
    }

    /// Samples `f` at `t0 + k dt`, k = 0..=n_steps.
    pub fn from_fn<F: Fn(f64) -> f64>(t0: f64, dt: f64, n_steps: usize, f: F) -> Result<Self> {
        Self::new(t0, dt, (0..=n_steps).map(|k| f(t0 + k as f64 * dt)).collect())
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Grid index of `t`, which must lie on the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = (t - self.t0) / self.dt;
        let n = x.round();
        if n < 0.0 || (x - n).abs() > 1e-9 * x.abs().max(1.0) || n as usize >= self.values.len() {
            return Err(Error::GridMismatch {
                t,
                t0: self.t0,
                dt: self.dt,
            });
        }
        Ok(n as usize)
    }
}

/// Quadrature weights for ∫_{t0}^{t0+n dt} (t-s)^{α-1} f(s) ds, one per node.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularWeights {
    pub order: FracOrder,
    pub n_steps: usize,
    pub weights: Vec<f64>,
}

impl SingularWeights {
    pub fn apply(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Σ_{k≥2} C(p,k) x^k, i.e. (1+x)^p - 1 - p x, summed directly so that
/// nothing cancels for |x| ≤ 1/2. With `even_only` the odd powers are
/// dropped, giving ((1+x)^p + (1-x)^p)/2 - 1.
fn binomial_tail(p: f64, x: f64, even_only: bool) -> f64 {
    let mut coeff = p; // C(p,1)
    let mut power = x;
    let mut sum = 0.0;
    for k in 2..200 {
        coeff *= (p - (k - 1) as f64) / k as f64;
        power *= x;
        if even_only && k % 2 == 1 {
            continue;
        }
        let term = coeff * power;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Weight table for all targets n ≤ `max_steps` on a fixed grid; the
/// interior weights depend only on n - j.
#[derive(Debug, Clone)]
pub struct WeightTable {
    order: FracOrder,
    dt: f64,
    scale: f64,
    /// interior[k] = second difference at lag k (index 0 unused)
    interior: Vec<f64>,
    /// first[n] = weight coefficient of node 0 for target n
    first: Vec<f64>,
}

impl WeightTable {
    pub fn new(order: FracOrder, max_steps: usize, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("step {dt} must be positive")));
        }
        let a = order.value();
        let p = a + 1.0;
        let scale = dt.powf(a) / (a * p);
        let mut interior = vec![0.0; max_steps + 1];
        for (k, slot) in interior.iter_mut().enumerate().skip(1) {
            let kf = k as f64;
            *slot = if k == 1 {
                2.0_f64.powf(p) - 2.0
            } else {
                // k^p [ (1+1/k)^p - 2 + (1-1/k)^p ]
                2.0 * kf.powf(p) * binomial_tail(p, 1.0 / kf, true)
            };
        }
        let mut first = vec![0.0; max_steps + 1];
        for (n, slot) in first.iter_mut().enumerate().skip(1) {
            let nf = n as f64;
            *slot = if n == 1 {
                a
            } else {
                // (n-1)^p - (n-1-α) n^α = n^p [ (1-1/n)^p - 1 + p/n ]
                nf.powf(p) * binomial_tail(p, -1.0 / nf, false)
            };
        }
        Ok(Self {
            order,
            dt,
            scale,
            interior,
            first,
        })
    }

    pub fn order(&self) -> FracOrder {
        self.order
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn max_steps(&self) -> usize {
        self.first.len() - 1
    }

    /// Weight of node j for target n (0 ≤ j ≤ n).
    #[inline]
    pub fn weight(&self, n: usize, j: usize) -> f64 {
        debug_assert!(j <= n && n <= self.max_steps());
        if n == 0 {
            0.0
        } else if j == n {
            self.scale
        } else if j == 0 {
            self.scale * self.first[n]
        } else {
            self.scale * self.interior[n - j]
        }
    }

    /// Weight of the current node, w_{n,n} for every n ≥ 1.
    pub fn diagonal_weight(&self) -> f64 {
        self.scale
    }

    /// Interior weight at lag k ≥ 1.
    pub fn lag_weight(&self, k: usize) -> f64 {
        self.scale * self.interior[k]
    }

    /// Weight of node 0 for target n ≥ 1.
    pub fn first_weight(&self, n: usize) -> f64 {
        self.scale * self.first[n]
    }

    pub fn row(&self, n: usize) -> SingularWeights {
        SingularWeights {
            order: self.order,
            n_steps: n,
            weights: (0..=n).map(|j| self.weight(n, j)).collect(),
        }
    }
}

/// Product-trapezoidal weights for the target t0 + n_steps·dt.
pub fn build_singular_weights(order: FracOrder, n_steps: usize, dt: f64) -> Result<SingularWeights> {
    if n_steps < 1 {
        return Err(Error::Domain("n_steps must be at least 1".into()));
    }
    Ok(WeightTable::new(order, n_steps, dt)?.row(n_steps))
}

/// I^α f(t) = (1/Γ(α)) ∫_{t0}^t (t-s)^{α-1} f(s) ds.
pub fn frac_integral(f: &SampledFunction, order: FracOrder, t: f64) -> Result<f64> {
    let n = f.index_of(t)?;
    if n == 0 {
        return Err(Error::Domain(format!("target time {t} must exceed t0 = {}", f.t0)));
    }
    let w = build_singular_weights(order, n, f.dt)?;
    Ok(w.apply(&f.values[..=n]) / gamma(order.value()))
}

/// I^α f at every grid point (value 0 at t0).
fn frac_integral_all(f: &SampledFunction, order: FracOrder, upto: usize) -> Result<Vec<f64>> {
    let table = WeightTable::new(order, upto, f.dt)?;
    let g = gamma(order.value());
    Ok((0..=upto)
        .map(|n| {
            (0..=n).map(|j| table.weight(n, j) * f.values[j]).sum::<f64>() / g
        })
        .collect())
}

/// Second-order finite-difference derivative of sampled values at index n.
fn grid_derivative(values: &[f64], dt: f64, n: usize) -> f64 {
    let last = values.len() - 1;
    if n == 0 {
        (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt)
    } else if n == last {
        (3.0 * values[n] - 4.0 * values[n - 1] + values[n - 2]) / (2.0 * dt)
    } else {
        (values[n + 1] - values[n - 1]) / (2.0 * dt)
    }
}

fn require_three(f: &SampledFunction) -> Result<()> {
    if f.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: f.len(),
        });
    }
    Ok(())
}

/// Riemann–Liouville derivative: d/dt of the discretely evaluated
/// (1-α)-integral, centered in the interior and one-sided at the ends.
pub fn rl_derivative(f: &SampledFunction, order: FracOrder, t: f64) -> Result<f64> {
    require_three(f)?;
    let n = f.index_of(t)?;
    if n == 0 {
        return Err(Error::Domain(format!("target time {t} must exceed t0 = {}", f.t0)));
    }
    if order.is_integer() {
        return Ok(grid_derivative(&f.values, f.dt, n));
    }
    let upto = (n + 1).min(f.len() - 1);
    let complement = FracOrder::new(1.0 - order.value())?;
    let g = frac_integral_all(f, complement, upto)?;
    Ok(grid_derivative(&g, f.dt, n))
}

/// Caputo derivative as ^L D^α [f - f(t0)].
pub fn caputo_derivative(f: &SampledFunction, order: FracOrder, t: f64) -> Result<f64> {
    require_three(f)?;
    let f0 = f.values[0];
    let shifted = SampledFunction {
        t0: f.t0,
        dt: f.dt,
        values: f.values.iter().map(|v| v - f0).collect(),
    };
    rl_derivative(&shifted, order, t)
}

/// Caputo derivative as I^{1-α} f′ with f′ from grid differences.
pub fn caputo_derivative_via_integral(f: &SampledFunction, order: FracOrder, t: f64) -> Result<f64> {
    require_three(f)?;
    let n = f.index_of(t)?;
    if n == 0 {
        return Err(Error::Domain(format!("target time {t} must exceed t0 = {}", f.t0)));
    }
    let deriv: Vec<f64> = (0..f.len()).map(|k| grid_derivative(&f.values, f.dt, k)).collect();
    if order.is_integer() {
        return Ok(deriv[n]);
    }
    let fp = SampledFunction {
        t0: f.t0,
        dt: f.dt,
        values: deriv,
    };
    frac_integral(&fp, FracOrder::new(1.0 - order.value())?, t)
}

/// Hat-function weights for ∫_0^{t_n} K(t_n - s) f(s) ds with the full mode
/// kernel K(τ) = τ^{α-1} E_{α,α}(-λ τ^α), laid out like [`WeightTable`].
///
/// With the spectral representation E_{α,1}(-λ t^α) = ∫_0^∞ e^{-rt} K_α(r) dr
/// and v = r^α, every weight is a positive integral
///
/// w = sin(απ)/(απ) ∫_0^∞ x·b(x) / (v² + 2λv cos(απ) + λ²) dv,  x = dt·v^{1/α}
///
/// where b is (x - 1 + e^{-x})/x² on the diagonal, e^{-(k-1)x}((1 - e^{-x})/x)²
/// at interior lag k and e^{-(n-1)x}(1 - e^{-x}(1 + x))/x² on node 0. For
/// α = 1 the density is a point mass at r = λ and w = dt·b(λ dt).
#[derive(Debug, Clone, PartialEq)]
pub struct ModeKernelWeights {
    pub diag: f64,
    /// interior[k] for lag k ≥ 1 (index 0 unused)
    pub interior: Vec<f64>,
    /// first[n] for target n ≥ 1 (index 0 unused)
    pub first: Vec<f64>,
}

impl ModeKernelWeights {
    /// Weight of node j for target n (0 ≤ j ≤ n).
    pub fn weight(&self, n: usize, j: usize) -> f64 {
        if n == 0 {
            0.0
        } else if j == n {
            self.diag
        } else if j == 0 {
            self.first[n]
        } else {
            self.interior[n - j]
        }
    }
}

/// Σ_{k≥2} (-1)^k c_k x^{k-2}/k! for small x.
fn small_x_series(x: f64, coeff: impl Fn(u32) -> f64) -> f64 {
    let mut term = 0.5; // 1/2!
    let mut sum = 0.0;
    for k in 2..20_u32 {
        if k > 2 {
            term *= -x / k as f64;
        }
        sum += coeff(k) * term;
    }
    sum
}

fn b_diag(x: f64) -> f64 {
    if x < 0.1 {
        small_x_series(x, |_| 1.0)
    } else {
        (x - 1.0 + (-x).exp()) / (x * x)
    }
}

fn b_first(x: f64, m: f64) -> f64 {
    let core = if x < 0.1 {
        small_x_series(x, |k| (k - 1) as f64)
    } else {
        (1.0 - (-x).exp() * (1.0 + x)) / (x * x)
    };
    (-m * x).exp() * core
}

fn b_interior(x: f64, m: f64) -> f64 {
    let q = if x == 0.0 { 1.0 } else { -(-x).exp_m1() / x };
    (-m * x).exp() * q * q
}

pub fn build_mode_kernel_weights(order: FracOrder, lambda: f64, n_steps: usize, dt: f64) -> Result<ModeKernelWeights> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("step {dt} must be positive")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("eigenvalue {lambda} must be positive")));
    }
    let a = order.value();
    if order.is_integer() {
        let x = lambda * dt;
        let interior = (0..=n_steps).map(|k| if k == 0 { 0.0 } else { dt * b_interior(x, (k - 1) as f64) }).collect();
        let first = (0..=n_steps).map(|n| if n == 0 { 0.0 } else { dt * b_first(x, (n - 1) as f64) }).collect();
        return Ok(ModeKernelWeights {
            diag: dt * b_diag(x),
            interior,
            first,
        });
    }
    let inv_a = 1.0 / a;
    let (s, c) = (a * PI).sin_cos();
    let pref = s / (a * PI);
    let q = move |v: f64| v * v + 2.0 * lambda * c * v + lambda * lambda;
    // fixed breaks: the resonance of 1/q and the scale where x = 1
    let mut base = vec![lambda, dt.powf(-a)];
    if c < 0.0 {
        let peak = -lambda * c;
        base.extend([peak - lambda * s, peak, peak + lambda * s]);
    }
    let integrate = |b: &dyn Fn(f64) -> f64, decay: f64, abs: f64| -> Result<f64> {
        let f = |v: f64| {
            let x = dt * v.powf(inv_a);
            x * b(x) / q(v)
        };
        let mut breaks: Vec<f64> = base.iter().copied().filter(|v| *v > 0.0).collect();
        if decay > 0.0 {
            // b < e^{-40} beyond this point
            breaks.push((40.0 / (decay * dt)).powf(a));
        }
        breaks.push(0.0);
        breaks.sort_by(|x, y| x.total_cmp(y));
        breaks.dedup();
        let end = *breaks.last().unwrap();
        let tol = Tolerance {
            abs,
            rel: 1e-12,
            max_intervals: 4000,
        };
        let head = integrate_with_breaks(f, &breaks, tol)?.value;
        let tail = integrate_to_infinity(f, end, tol)?.value;
        Ok(pref * (head + tail))
    };
    let diag = integrate(&b_diag, 0.0, 1e-300)?;
    let abs = 1e-15 * diag;
    let mut interior = vec![0.0; n_steps + 1];
    let mut first = vec![0.0; n_steps + 1];
    for k in 1..=n_steps {
        let m = (k - 1) as f64;
        interior[k] = integrate(&|x| b_interior(x, m), m, abs)?;
        first[k] = integrate(&|x| b_first(x, m), m, abs)?;
    }
    Ok(ModeKernelWeights { diag, interior, first })
}
