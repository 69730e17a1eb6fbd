//! Impact decay kernels `G`.
//!
//! A trade at time `s` moves the price at a later time `t` by `G(t - s)` per
//! share. Every shipped family is non-increasing, convex and non-constant on
//! `(0, inf)`, which makes the induced kernel `G(|t - s|)` strictly positive
//! definite. The singular power law has `G(0+) = inf`; under it block trades
//! have infinite cost and only absolutely continuous strategies are
//! admissible.
//!
//! Besides point evaluation the module provides the two primitives every
//! quadratic form in the crate is built from:
//!
//! * [`Kernel::integral`]: `∫_a^b G(u) du`,
//! * [`Kernel::cell_double_integral`]: `∫∫ G(|t - s|) ds dt` over a rectangle,
//!   computed from the even double antiderivative
//!   `F(u) = ∫_0^|u| (|u| - v) G(v) dv` as
//!   `F(d-a) - F(c-a) - F(d-b) + F(c-b)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::linalg::ldlt_pivots;
use crate::quadrature;

/// Relative pivot threshold of the strict positive definiteness test.
pub const PD_PIVOT_TOL: f64 = 1e-12;

/// Absolute tolerance of the adaptive double-integral fallback.
pub const QUADRATURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Exponential,
    TruncatedPowerLaw,
    SingularPowerLaw,
    ShiftedSingular,
    /// `G ≡ c`. Not strictly positive definite; exists for negative tests.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Exponential { eta: f64, lambda: f64 },
    TruncatedPowerLaw { eta: f64, lambda: f64, gamma: f64 },
    SingularPowerLaw { eta: f64, gamma: f64 },
    ShiftedSingular { eta: f64, gamma: f64, shift: f64 },
    Constant { value: f64 },
}

/// Flat parameter view, mirroring the config file's kernel section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub family: Family,
    pub eta: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shift: Option<f64>,
}

/// An immutable, validated decay kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    shape: Shape,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{name} must be finite and > 0, got {v}")))
    }
}

impl Kernel {
    /// `G(t) = eta * exp(-lambda t)`.
    pub fn exponential(eta: f64, lambda: f64) -> Result<Self> {
        Ok(Self {
            shape: Shape::Exponential {
                eta: positive("eta", eta)?,
                lambda: positive("lambda", lambda)?,
            },
        })
    }

    /// `G(t) = eta * (1 + lambda t)^(-gamma)`.
    pub fn truncated_power_law(eta: f64, lambda: f64, gamma: f64) -> Result<Self> {
        Ok(Self {
            shape: Shape::TruncatedPowerLaw {
                eta: positive("eta", eta)?,
                lambda: positive("lambda", lambda)?,
                gamma: positive("gamma", gamma)?,
            },
        })
    }

    /// `G(t) = t^(-gamma)`, `gamma` in (0, 1).
    pub fn singular_power_law(gamma: f64) -> Result<Self> {
        Self::scaled_singular_power_law(1.0, gamma)
    }

    /// `G(t) = eta * t^(-gamma)`, `gamma` in (0, 1).
    pub fn scaled_singular_power_law(eta: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Domain(format!(
                "singular power law needs gamma in (0, 1) for integrability, got {gamma}"
            )));
        }
        Ok(Self {
            shape: Shape::SingularPowerLaw {
                eta: positive("eta", eta)?,
                gamma,
            },
        })
    }

    /// `G(t) = eta * (t + shift)^(-gamma)`, the bounded surrogate of a
    /// singular power law.
    pub fn shifted_singular(eta: f64, gamma: f64, shift: f64) -> Result<Self> {
        // same parameter domain as the parent kernel
        Self::scaled_singular_power_law(eta, gamma)?;
        let shift = positive("shift", shift)?;
        Ok(Self {
            shape: Shape::ShiftedSingular { eta, gamma, shift },
        })
    }

    /// The constant kernel `G ≡ value`. It violates strict positive
    /// definiteness and is only meant for exercising failure paths.
    #[doc(hidden)]
    pub fn constant_for_testing(value: f64) -> Result<Self> {
        Ok(Self {
            shape: Shape::Constant {
                value: positive("value", value)?,
            },
        })
    }

    pub fn from_params(p: &KernelParams) -> Result<Self> {
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| Error::Config(format!("{:?} kernel needs `{name}`", p.family)))
        };
        match p.family {
            Family::Exponential => Self::exponential(p.eta, need("lambda", p.lambda)?),
            Family::TruncatedPowerLaw => Self::truncated_power_law(
                p.eta,
                need("lambda", p.lambda)?,
                need("gamma", p.gamma)?,
            ),
            Family::SingularPowerLaw => match p.shift {
                Some(s) if s > 0.0 => Self::shifted_singular(p.eta, need("gamma", p.gamma)?, s),
                _ => Self::scaled_singular_power_law(p.eta, need("gamma", p.gamma)?),
            },
            Family::ShiftedSingular => {
                Self::shifted_singular(p.eta, need("gamma", p.gamma)?, need("shift", p.shift)?)
            }
            Family::Constant => Self::constant_for_testing(p.eta),
        }
    }

    pub fn params(&self) -> KernelParams {
        let (family, eta, lambda, gamma, shift) = match self.shape {
            Shape::Exponential { eta, lambda } => (Family::Exponential, eta, Some(lambda), None, None),
            Shape::TruncatedPowerLaw { eta, lambda, gamma } => {
                (Family::TruncatedPowerLaw, eta, Some(lambda), Some(gamma), None)
            }
            Shape::SingularPowerLaw { eta, gamma } => {
                (Family::SingularPowerLaw, eta, None, Some(gamma), None)
            }
            Shape::ShiftedSingular { eta, gamma, shift } => {
                (Family::ShiftedSingular, eta, None, Some(gamma), Some(shift))
            }
            Shape::Constant { value } => (Family::Constant, value, None, None, None),
        };
        KernelParams {
            family,
            eta,
            lambda,
            gamma,
            shift,
        }
    }

    pub fn family(&self) -> Family {
        self.params().family
    }

    /// `G(0+) = inf`.
    pub fn is_singular(&self) -> bool {
        matches!(self.shape, Shape::SingularPowerLaw { .. })
    }

    pub fn is_bounded(&self) -> bool {
        !self.is_singular()
    }

    /// `G(t)` for `t >= 0`; the singular family reports `G(0)` as
    /// [`Extended::PosInfinity`].
    pub fn eval(&self, t: f64) -> Result<Extended> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("kernel evaluated at negative time {t}")));
        }
        if t == 0.0 && self.is_singular() {
            return Ok(Extended::PosInfinity);
        }
        Ok(Extended::Finite(self.value(t)))
    }

    /// `G(0)`, infinite for singular kernels.
    pub fn g0(&self) -> Extended {
        self.eval(0.0).expect("0 is in the domain")
    }

    /// `G(0)` as a float, or an error for singular kernels.
    pub fn g0_finite(&self) -> Result<f64> {
        self.g0().finite("G(0) of a singular kernel")
    }

    /// Raw evaluation for `t > 0` (or `t >= 0` for bounded kernels).
    pub(crate) fn value(&self, t: f64) -> f64 {
        match self.shape {
            Shape::Exponential { eta, lambda } => eta * (-lambda * t).exp(),
            Shape::TruncatedPowerLaw { eta, lambda, gamma } => eta * (1.0 + lambda * t).powf(-gamma),
            Shape::SingularPowerLaw { eta, gamma } => eta * t.powf(-gamma),
            Shape::ShiftedSingular { eta, gamma, shift } => eta * (t + shift).powf(-gamma),
            Shape::Constant { value } => value,
        }
    }

    /// `∫_0^u G(v) dv` for `u >= 0` (finite for every family).
    pub(crate) fn antiderivative(&self, u: f64) -> f64 {
        debug_assert!(u >= 0.0);
        match self.shape {
            Shape::Exponential { eta, lambda } => -eta * (-lambda * u).exp_m1() / lambda,
            Shape::TruncatedPowerLaw { eta, lambda, gamma } => tpl_first(eta, lambda, gamma, u),
            Shape::SingularPowerLaw { eta, gamma } => eta * u.powf(1.0 - gamma) / (1.0 - gamma),
            Shape::ShiftedSingular { eta, gamma, shift } => {
                let (eta_t, lambda_t) = shifted_as_tpl(eta, gamma, shift);
                tpl_first(eta_t, lambda_t, gamma, u)
            }
            Shape::Constant { value } => value * u,
        }
    }

    /// `F(u) = ∫_0^|u| (|u| - v) G(v) dv`, so that `F'' = G(|.|)`.
    pub(crate) fn double_antiderivative(&self, u: f64) -> f64 {
        let u = u.abs();
        match self.shape {
            Shape::Exponential { eta, lambda } => eta / (lambda * lambda) * x_plus_expm1_neg(lambda * u),
            Shape::TruncatedPowerLaw { eta, lambda, gamma } => tpl_second(eta, lambda, gamma, u),
            Shape::SingularPowerLaw { eta, gamma } => {
                eta * u.powf(2.0 - gamma) / ((1.0 - gamma) * (2.0 - gamma))
            }
            Shape::ShiftedSingular { eta, gamma, shift } => {
                let (eta_t, lambda_t) = shifted_as_tpl(eta, gamma, shift);
                tpl_second(eta_t, lambda_t, gamma, u)
            }
            Shape::Constant { value } => 0.5 * value * u * u,
        }
    }

    /// `∫_a^b G(u) du` for `0 <= a <= b`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        debug_assert!(0.0 <= a && a <= b);
        self.antiderivative(b) - self.antiderivative(a)
    }

    /// `∫_c^d G(|p - s|) ds`: the impact felt at `p` from unit-rate trading
    /// on `[c, d]` (both sides of `p` counted).
    pub fn point_cell_integral(&self, p: f64, c: f64, d: f64) -> f64 {
        if p <= c {
            self.integral(c - p, d - p)
        } else if p >= d {
            self.integral(p - d, p - c)
        } else {
            self.antiderivative(p - c) + self.antiderivative(d - p)
        }
    }

    /// `∫_{t in [c,d]} ∫_{s in [a,b]} G(|t - s|) ds dt`.
    ///
    /// Closed form for every family. Truncated power laws with `gamma`
    /// within 1e-3 of 1 fall back to [`Kernel::cell_double_integral_quadrature`]
    /// because the closed form divides by `1 - gamma`.
    pub fn cell_double_integral(&self, (a, b): (f64, f64), (c, d): (f64, f64)) -> Result<f64> {
        if !(a <= b && c <= d) || a < 0.0 || c < 0.0 {
            return Err(Error::Domain(format!(
                "invalid rectangle [{a}, {b}] x [{c}, {d}]"
            )));
        }
        if a == b || c == d {
            return Ok(0.0);
        }
        match self.shape {
            Shape::Exponential { eta, lambda } if b <= c || d <= a => {
                // separated cells factorize
                let (gap, w1, w2) = if b <= c { (c - b, b - a, d - c) } else { (a - d, b - a, d - c) };
                Ok(eta / (lambda * lambda)
                    * (-lambda * gap).exp()
                    * (-lambda * w1).exp_m1()
                    * (-lambda * w2).exp_m1())
            }
            Shape::TruncatedPowerLaw { gamma, .. } if (1.0 - gamma).abs() < 1e-3 && gamma != 1.0 => {
                self.cell_double_integral_quadrature((a, b), (c, d), QUADRATURE_TOL)
            }
            _ => {
                let f = |u: f64| self.double_antiderivative(u);
                Ok(f(d - a) - f(c - a) - f(d - b) + f(c - b))
            }
        }
    }

    /// Adaptive-quadrature evaluation of the same double integral.
    ///
    /// The rectangle is cut along the diagonal `t = s`: off-diagonal pieces
    /// are integrated directly by the 2-D rule, and the square on the
    /// diagonal collapses to a 1-D integral in the lag `u = |t - s|`.
    pub fn cell_double_integral_quadrature(
        &self,
        (a, b): (f64, f64),
        (c, d): (f64, f64),
        abs_tol: f64,
    ) -> Result<f64> {
        if a >= b || c >= d {
            return Ok(0.0);
        }
        // Gauss nodes are interior, so off-diagonal pieces never see u = 0
        let g = |s: f64, t: f64| self.value((t - s).abs());
        let lo = a.max(c);
        let hi = b.min(d);
        let mut pieces_s = vec![];
        let mut pieces_t = vec![];
        if hi > lo {
            for (x0, x1, out) in [(a, b, &mut pieces_s), (c, d, &mut pieces_t)] {
                if x0 < lo {
                    out.push((x0, lo, false));
                }
                out.push((lo, hi, true));
                if hi < x1 {
                    out.push((hi, x1, false));
                }
            }
        } else {
            pieces_s.push((a, b, false));
            pieces_t.push((c, d, false));
        }
        let n_pieces = (pieces_s.len() * pieces_t.len()) as f64;
        let tol = abs_tol / n_pieces;
        let mut total = 0.0;
        for &(s0, s1, s_diag) in &pieces_s {
            for &(t0, t1, t_diag) in &pieces_t {
                if s_diag && t_diag {
                    // the square on the diagonal reduces to ∫_0^h 2 (h - u) G(u) du
                    let h = s1 - s0;
                    total += quadrature::integrate(|u| 2.0 * (h - u) * self.value(u), 0.0, h, tol)?;
                } else {
                    total += quadrature::integrate_rect(g, (s0, s1), (t0, t1), tol)?;
                }
            }
        }
        Ok(total)
    }

    /// `M[k][l] = G(|t_k - t_l|)`, the quadratic form of block trades at
    /// `times`.
    pub fn gram_matrix(&self, times: &[f64]) -> Result<DMatrix<f64>> {
        if self.is_singular() {
            return Err(Error::InfiniteValue(
                "Gram matrix of a singular kernel has infinite diagonal; block trades are \
                 inadmissible, use the rate form (cell double integrals) instead"
                    .into(),
            ));
        }
        check_times(times)?;
        let n = times.len();
        Ok(DMatrix::from_fn(n, n, |k, l| self.value((times[k] - times[l]).abs())))
    }

    /// `R[k][l] = ∫∫ G(|t - s|)` over consecutive-time cells `k` and `l`:
    /// the quadratic form of piecewise-constant trading rates.
    pub fn rate_gram_matrix(&self, times: &[f64]) -> Result<DMatrix<f64>> {
        check_times(times)?;
        let m = times.len().saturating_sub(1);
        let mut r = DMatrix::zeros(m, m);
        for k in 0..m {
            for l in k..m {
                let v = self.cell_double_integral((times[k], times[k + 1]), (times[l], times[l + 1]))?;
                r[(k, l)] = v;
                r[(l, k)] = v;
            }
        }
        Ok(r)
    }

    /// Strict positive definiteness of the kernel on `times`.
    ///
    /// Bounded kernels are tested on the block Gram matrix; singular kernels
    /// on the rate form over the cells between consecutive times.
    pub fn check_positive_definite(&self, times: &[f64]) -> Result<PdReport> {
        let (matrix, form) = if self.is_singular() {
            (self.rate_gram_matrix(times)?, QuadraticFormKind::Rates)
        } else {
            (self.gram_matrix(times)?, QuadraticFormKind::Blocks)
        };
        Ok(PdReport::from_matrix(&matrix, form))
    }

    /// The bounded surrogate `G^n(t) = G(t + 1/n)` of a singular power law.
    pub fn shift_approximation(&self, n: u64) -> Result<Kernel> {
        if n == 0 {
            return Err(Error::Domain("shift index n must be >= 1".into()));
        }
        match self.shape {
            Shape::SingularPowerLaw { eta, gamma } => Kernel::shifted_singular(eta, gamma, 1.0 / n as f64),
            _ => Err(Error::Domain(
                "shift approximation applies to singular power-law kernels only".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadraticFormKind {
    Blocks,
    Rates,
    Mixed,
}

/// Outcome of the strict positive definiteness test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdReport {
    pub min_pivot: f64,
    pub is_strictly_pd: bool,
    pub dimension: usize,
    pub form: QuadraticFormKind,
}

impl PdReport {
    /// Runs the unpivoted `L D L'` factorization; strict PD iff every pivot
    /// exceeds `1e-12 * max diagonal`.
    pub fn from_matrix(matrix: &DMatrix<f64>, form: QuadraticFormKind) -> Self {
        let n = matrix.nrows();
        let pivots = ldlt_pivots(matrix, PD_PIVOT_TOL);
        let min_pivot = pivots.iter().copied().fold(f64::INFINITY, f64::min);
        let scale = (0..n).map(|i| matrix[(i, i)].abs()).fold(0.0, f64::max);
        let is_strictly_pd = pivots.len() == n && pivots.iter().all(|&p| p > PD_PIVOT_TOL * scale);
        Self {
            min_pivot: if n == 0 { 0.0 } else { min_pivot },
            is_strictly_pd,
            dimension: n,
            form,
        }
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Domain("times must be finite and nonnegative".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("times must be strictly increasing".into()));
    }
    Ok(())
}

/// `eta (t + shift)^(-gamma) = eta' (1 + lambda' t)^(-gamma)`.
fn shifted_as_tpl(eta: f64, gamma: f64, shift: f64) -> (f64, f64) {
    (eta * shift.powf(-gamma), 1.0 / shift)
}

/// `((1 + x)^p - 1) / p`, continuous through `p = 0`.
fn pow_m1_over_p(p: f64, log1p_x: f64) -> f64 {
    if p == 0.0 {
        log1p_x
    } else {
        (p * log1p_x).exp_m1() / p
    }
}

/// `∫_0^u eta (1 + lambda v)^(-gamma) dv`.
fn tpl_first(eta: f64, lambda: f64, gamma: f64, u: f64) -> f64 {
    eta / lambda * pow_m1_over_p(1.0 - gamma, (lambda * u).ln_1p())
}

/// `∫_0^u (u - v) eta (1 + lambda v)^(-gamma) dv`.
///
/// With `p = 2 - gamma` and `x = lambda u` this is
/// `eta / lambda^2 * ((1+x)^p - 1 - p x) / (p (p - 1))`; the series
/// `sum_{k>=2} (p-2)(p-3)...(p-k+1) x^k / k!` is used for small `x`.
fn tpl_second(eta: f64, lambda: f64, gamma: f64, u: f64) -> f64 {
    let x = lambda * u;
    let p = 2.0 - gamma;
    let scale = eta / (lambda * lambda);
    if x < 0.1 {
        let mut term = x * x / 2.0;
        let mut sum = term;
        for k in 3..40 {
            term *= (p - (k as f64 - 1.0)) * x / k as f64;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        scale * sum
    } else if gamma == 1.0 {
        let l = x.ln_1p();
        scale * ((1.0 + x) * l - x)
    } else {
        let l = x.ln_1p();
        scale * (pow_m1_over_p(p, l) - x) / (p - 1.0)
    }
}

/// `x + exp(-x) - 1`, accurate for small `x`.
fn x_plus_expm1_neg(x: f64) -> f64 {
    if x < 0.1 {
        let mut term = x * x / 2.0;
        let mut sum = term;
        for k in 3..30 {
            term *= -x / k as f64;
            sum += term;
            if term.abs() < 1e-18 * sum {
                break;
            }
        }
        sum
    } else {
        x + (-x).exp_m1()
    }
}
