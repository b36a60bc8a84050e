//! RLS and LMS adaptive noise cancellers and the three-stage accelerometer
//! cascade.
//!
//! Each stage treats its input as the primary channel `d(n)` and one
//! accelerometer axis as the noise reference. The reference enters through a
//! tapped delay line `[u(n), u(n-1), ..., u(n-M+1)]`, zero-filled before the
//! window start. The stage output is the a-priori error `e(n) = d(n) - w(n-1)^T u(n)`,
//! i.e. the primary channel with the reference-correlated part removed.

use crate::dsp::{normalize_energy, Signal};
use crate::error::{param, Error, Result};

/// Adaptive update rule used by every cascade stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Rls,
    Lms,
}

/// Accelerometer axis feeding a cascade stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeConfig {
    pub algorithm: Algorithm,
    /// Filter length (taps).
    pub order: usize,
    /// RLS forgetting factor.
    pub lambda: f64,
    /// RLS initial inverse-covariance diagonal.
    pub p_init: f64,
    /// LMS step size, applied to a reference scaled to unit energy.
    pub mu: f64,
    /// Reference axis for stages 1, 2 and 3.
    pub stage_order: [Axis; 3],
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Rls,
            order: 55,
            lambda: 0.999,
            p_init: 10.0,
            mu: 0.01,
            stage_order: [Axis::X, Axis::Y, Axis::Z],
        }
    }
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return param("filter order must be at least 1");
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return param(format!("forgetting factor must be in (0, 1], got {}", self.lambda));
        }
        if !(self.p_init > 0.0 && self.p_init.is_finite()) {
            return param(format!("P initial scale must be positive, got {}", self.p_init));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return param(format!("LMS step size must be positive, got {}", self.mu));
        }
        Ok(())
    }
}

/// Sample-by-sample adaptive filter driven by a regressor vector.
pub trait AdaptiveFilter {
    fn order(&self) -> usize;

    /// Consumes one primary sample and the current regressor, returning the
    /// a-priori error.
    fn step(&mut self, d: f64, u: &[f64]) -> Result<f64>;

    fn weights(&self) -> &[f64];
}

fn check_step_inputs(order: usize, d: f64, u: &[f64]) -> Result<()> {
    if u.len() != order {
        return param(format!("regressor has length {}, filter order is {order}", u.len()));
    }
    if !d.is_finite() || u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite adaptive filter input".into()));
    }
    Ok(())
}

/// Recursive least squares state: weights `w` and inverse correlation `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsState {
    w: Vec<f64>,
    /// Row-major `order x order`.
    p: Vec<f64>,
    lambda: f64,
    pi: Vec<f64>,
    up: Vec<f64>,
}

impl RlsState {
    pub fn new(order: usize, lambda: f64, p_init: f64) -> Result<Self> {
        if order == 0 {
            return param("filter order must be at least 1");
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return param(format!("forgetting factor must be in (0, 1], got {lambda}"));
        }
        if !(p_init > 0.0 && p_init.is_finite()) {
            return param(format!("P initial scale must be positive, got {p_init}"));
        }
        let mut p = vec![0.0; order * order];
        for i in 0..order {
            p[i * order + i] = p_init;
        }
        Ok(Self {
            w: vec![0.0; order],
            p,
            lambda,
            pi: vec![0.0; order],
            up: vec![0.0; order],
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Inverse correlation matrix, row-major.
    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn p_entry(&self, row: usize, col: usize) -> f64 {
        self.p[row * self.w.len() + col]
    }
}

/// Fresh RLS state with zero weights and `P = p_init * I`.
pub fn rls_init(order: usize, lambda: f64, p_init: f64) -> Result<RlsState> {
    RlsState::new(order, lambda, p_init)
}

impl AdaptiveFilter for RlsState {
    fn order(&self) -> usize {
        self.w.len()
    }

    fn step(&mut self, d: f64, u: &[f64]) -> Result<f64> {
        let m = self.w.len();
        check_step_inputs(m, d, u)?;

        // pi = P u ; u^T P
        for i in 0..m {
            let row = &self.p[i * m..(i + 1) * m];
            self.pi[i] = row.iter().zip(u).map(|(a, b)| a * b).sum();
        }
        self.up.iter_mut().for_each(|v| *v = 0.0);
        for (i, &ui) in u.iter().enumerate() {
            if ui != 0.0 {
                let row = &self.p[i * m..(i + 1) * m];
                for (acc, pij) in self.up.iter_mut().zip(row) {
                    *acc += ui * pij;
                }
            }
        }

        let denom = self.lambda + u.iter().zip(&self.pi).map(|(a, b)| a * b).sum::<f64>();
        let e = d - self.w.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
        let inv_lambda = 1.0 / self.lambda;

        // k = pi / denom ; w += k e ; P = (P - k u^T P) / lambda
        for i in 0..m {
            let k = self.pi[i] / denom;
            self.w[i] += k * e;
            let row = &mut self.p[i * m..(i + 1) * m];
            for (pij, upj) in row.iter_mut().zip(&self.up) {
                *pij = (*pij - k * upj) * inv_lambda;
            }
        }
        for i in 0..m {
            for j in i + 1..m {
                let s = 0.5 * (self.p[i * m + j] + self.p[j * m + i]);
                self.p[i * m + j] = s;
                self.p[j * m + i] = s;
            }
        }

        if !e.is_finite() || self.w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("RLS recursion diverged".into()));
        }
        Ok(e)
    }

    fn weights(&self) -> &[f64] {
        &self.w
    }
}

/// Least mean squares state.
#[derive(Debug, Clone, PartialEq)]
pub struct LmsState {
    w: Vec<f64>,
    mu: f64,
}

impl LmsState {
    pub fn new(order: usize, mu: f64) -> Result<Self> {
        if order == 0 {
            return param("filter order must be at least 1");
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return param(format!("LMS step size must be positive, got {mu}"));
        }
        Ok(Self {
            w: vec![0.0; order],
            mu,
        })
    }

    pub fn with_weights(w: Vec<f64>, mu: f64) -> Result<Self> {
        let mut s = Self::new(w.len(), mu)?;
        s.w = w;
        Ok(s)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

impl AdaptiveFilter for LmsState {
    fn order(&self) -> usize {
        self.w.len()
    }

    fn step(&mut self, d: f64, u: &[f64]) -> Result<f64> {
        check_step_inputs(self.w.len(), d, u)?;
        let e = d - self.w.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
        let g = self.mu * e;
        for (w, x) in self.w.iter_mut().zip(u) {
            *w += g * x;
        }
        if self.w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("LMS recursion diverged".into()));
        }
        Ok(e)
    }

    fn weights(&self) -> &[f64] {
        &self.w
    }
}

/// Runs `filter` over a whole window, feeding it a tapped delay line of
/// `reference`. The filter state carries over from whatever it held before.
pub fn run_filter<F: AdaptiveFilter>(
    filter: &mut F,
    primary: &[f64],
    reference: &[f64],
) -> Result<Vec<f64>> {
    if primary.len() != reference.len() {
        return param(format!(
            "primary has {} samples, reference has {}",
            primary.len(),
            reference.len()
        ));
    }
    let m = filter.order();
    let mut taps = vec![0.0; m];
    let mut out = Vec::with_capacity(primary.len());
    for (&d, &u) in primary.iter().zip(reference) {
        taps.copy_within(0..m - 1, 1);
        taps[0] = u;
        out.push(filter.step(d, &taps)?);
    }
    Ok(out)
}

/// One noise-cancelling stage over a window, with freshly initialised state.
pub fn filter_window(d: &Signal, u: &Signal, cfg: &CascadeConfig) -> Result<Signal> {
    cfg.validate()?;
    if d.len() != u.len() {
        return param(format!("primary has {} samples, reference has {}", d.len(), u.len()));
    }
    if d.fs() != u.fs() {
        return param(format!("sampling rates differ: {} vs {}", d.fs(), u.fs()));
    }
    let out = match cfg.algorithm {
        Algorithm::Rls => {
            let mut f = RlsState::new(cfg.order, cfg.lambda, cfg.p_init)?;
            run_filter(&mut f, d.samples(), u.samples())?
        }
        Algorithm::Lms => {
            let mut f = LmsState::new(cfg.order, cfg.mu)?;
            if u.energy() > 0.0 {
                run_filter(&mut f, d.samples(), normalize_energy(u)?.samples())?
            } else {
                run_filter(&mut f, d.samples(), u.samples())?
            }
        }
    };
    Ok(d.with_samples(out))
}

/// Three cascaded cancellers, one per accelerometer axis, in
/// `cfg.stage_order` (X, Y, Z by default). Each stage's output is the next
/// stage's primary input.
pub fn cascade_filter(
    ppg: &Signal,
    ax: &Signal,
    ay: &Signal,
    az: &Signal,
    cfg: &CascadeConfig,
) -> Result<Signal> {
    for (name, s) in [("ax", ax), ("ay", ay), ("az", az)] {
        if s.len() != ppg.len() || s.fs() != ppg.fs() {
            return param(format!("accelerometer channel {name} is not aligned with the PPG"));
        }
    }
    let mut y = ppg.clone();
    for axis in cfg.stage_order {
        let reference = match axis {
            Axis::X => ax,
            Axis::Y => ay,
            Axis::Z => az,
        };
        y = filter_window(&y, reference, cfg)?;
    }
    Ok(y)
}
